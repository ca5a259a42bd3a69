use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::score_io::{ScoreRecord, ScoreSet};

/// Affine map sending a reference range onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMax<T> {
    pub min: T,
    pub max: T,
}

impl<T: Scalar> MinMax<T> {
    pub fn new(min: T, max: T) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() || min >= max {
            return Err(Error::DegenerateNormalizer {
                min: min.to_f64().unwrap_or(f64::NAN),
                max: max.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { min, max })
    }

    pub fn fit(reference: &ScoreSet<T>) -> Result<Self> {
        let mut it = reference.iter().map(|r| r.score);
        let first = it.next().ok_or(Error::EmptyScores("reference"))?;
        let (min, max) = it.fold((first, first), |(lo, hi), s| (lo.min(s), hi.max(s)));
        Self::new(min, max)
    }

    pub fn apply(&self, score: T) -> T {
        (score - self.min) / (self.max - self.min)
    }
}

/// Per-source score normalization applied before summing.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ScoreNormalizer<T> {
    /// Raw scores; the plain score-sum baseline.
    #[default]
    None,
    MinMax {
        asv: MinMax<T>,
        cm: MinMax<T>,
    },
}

impl<T: Scalar> ScoreNormalizer<T> {
    pub fn fit_min_max(asv_reference: &ScoreSet<T>, cm_reference: &ScoreSet<T>) -> Result<Self> {
        Ok(ScoreNormalizer::MinMax {
            asv: MinMax::fit(asv_reference)?,
            cm: MinMax::fit(cm_reference)?,
        })
    }

    pub fn apply(&self, asv: T, cm: T) -> (T, T) {
        match self {
            ScoreNormalizer::None => (asv, cm),
            ScoreNormalizer::MinMax { asv: a, cm: c } => (a.apply(asv), c.apply(cm)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScoreNormalizer::None => "none",
            ScoreNormalizer::MinMax { .. } => "minmax",
        }
    }
}

/// Sums (optionally normalized) ASV and CM scores trial by trial. The
/// output follows the ASV set's order.
pub fn score_sum<T: Scalar>(
    asv: &ScoreSet<T>,
    cm: &ScoreSet<T>,
    normalizer: &ScoreNormalizer<T>,
) -> Result<ScoreSet<T>> {
    if asv.len() != cm.len() {
        return Err(Error::TrialSetMismatch(format!(
            "{} ASV scores but {} CM scores",
            asv.len(),
            cm.len()
        )));
    }
    let mut out = Vec::with_capacity(asv.len());
    for a in asv {
        let c = cm
            .get(&a.trial.speaker_model, &a.trial.test_utterance)
            .ok_or_else(|| Error::TrialSetMismatch(format!("no CM score for trial {}", a.trial)))?;
        if c.trial != a.trial {
            return Err(Error::TrialSetMismatch(format!(
                "trial labelled {} in ASV scores but {} in CM scores",
                a.trial, c.trial
            )));
        }
        let (x, y) = normalizer.apply(a.score, c.score);
        out.push(ScoreRecord {
            trial: a.trial.clone(),
            score: x + y,
        });
    }
    ScoreSet::from_records(out).map_err(|e| Error::TrialSetMismatch(e.to_string()))
}
