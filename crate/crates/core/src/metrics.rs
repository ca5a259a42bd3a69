//! SV-EER, SPF-EER and SASV-EER.
//!
//! All three share the same positives (target trials) and differ only in
//! which trials count as negatives:
//!
//! | metric | negatives              |
//! |--------|------------------------|
//! | SV     | nontarget              |
//! | SPF    | spoof                  |
//! | SASV   | nontarget and spoof    |
//!
//! A trial is accepted when `score >= threshold`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::protocol::{TrialList, TrialType};
use crate::scalar::Scalar;
use crate::score_io::{validate_against_protocol, ScoreSet};

/// Positive (target) and negative scores for one EER.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScores<T> {
    positives: Vec<T>,
    negatives: Vec<T>,
}

impl<T: Scalar> LabeledScores<T> {
    pub fn new(positives: Vec<T>, negatives: Vec<T>) -> Result<Self> {
        if positives.is_empty() {
            return Err(Error::EmptyScores("positive"));
        }
        if negatives.is_empty() {
            return Err(Error::EmptyScores("negative"));
        }
        if positives.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFiniteScore("positive"));
        }
        if negatives.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFiniteScore("negative"));
        }
        Ok(Self {
            positives,
            negatives,
        })
    }

    pub fn positives(&self) -> &[T] {
        &self.positives
    }

    pub fn negatives(&self) -> &[T] {
        &self.negatives
    }
}

/// One operating point of the detection error tradeoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint<T> {
    pub threshold: T,
    /// Accepted negatives over all negatives.
    pub far: T,
    /// Rejected positives over all positives.
    pub frr: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerResult<T> {
    pub eer: T,
    pub threshold: T,
    pub n_positive: usize,
    pub n_negative: usize,
}

fn sorted<T: Scalar>(v: &[T]) -> Vec<T> {
    let mut v = v.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    v
}

/// Operating points at every distinct observed score, in ascending
/// threshold order, bracketed by accept-all (`-inf`) and reject-all
/// (`+inf`) sentinels.
pub fn roc_points<T: Scalar>(scores: &LabeledScores<T>) -> Vec<RocPoint<T>> {
    let pos = sorted(&scores.positives);
    let neg = sorted(&scores.negatives);
    let n_pos = T::from_count(pos.len());
    let n_neg = T::from_count(neg.len());

    let mut thresholds: Vec<T> = pos.iter().chain(&neg).copied().collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();

    let mut points = Vec::with_capacity(thresholds.len() + 2);
    points.push(RocPoint {
        threshold: T::neg_infinity(),
        far: T::one(),
        frr: T::zero(),
    });
    // Counts of scores strictly below the current threshold.
    let (mut pos_below, mut neg_below) = (0usize, 0usize);
    for t in thresholds {
        while pos_below < pos.len() && pos[pos_below] < t {
            pos_below += 1;
        }
        while neg_below < neg.len() && neg[neg_below] < t {
            neg_below += 1;
        }
        points.push(RocPoint {
            threshold: t,
            far: T::from_count(neg.len() - neg_below) / n_neg,
            frr: T::from_count(pos_below) / n_pos,
        });
    }
    points.push(RocPoint {
        threshold: T::infinity(),
        far: T::zero(),
        frr: T::one(),
    });
    points
}

/// Locates the FAR = FRR crossing on an ascending list of operating points.
///
/// An exact tie is returned as is. Otherwise the two points bracketing the
/// sign change of `far - frr` are joined by straight lines and their
/// crossing is returned; the threshold is interpolated the same way, or
/// taken from the finite end when the bracket touches a sentinel.
pub fn eer_from_points<T: Scalar>(points: &[RocPoint<T>]) -> (T, T) {
    let first = points
        .iter()
        .position(|p| p.far - p.frr <= T::zero())
        .expect("reject-all sentinel has far - frr = -1");
    let p1 = points[first];
    let d1 = p1.far - p1.frr;
    if d1 == T::zero() || first == 0 {
        return (p1.far, p1.threshold);
    }
    let p0 = points[first - 1];
    let d0 = p0.far - p0.frr;
    let s = d0 / (d0 - d1);
    let eer = p0.far + s * (p1.far - p0.far);
    let threshold = match (p0.threshold.is_finite(), p1.threshold.is_finite()) {
        (true, true) => p0.threshold + s * (p1.threshold - p0.threshold),
        (true, false) => p0.threshold,
        _ => p1.threshold,
    };
    (eer, threshold)
}

pub fn eer<T: Scalar>(scores: &LabeledScores<T>) -> EerResult<T> {
    let (eer, threshold) = eer_from_points(&roc_points(scores));
    EerResult {
        eer,
        threshold,
        n_positive: scores.positives.len(),
        n_negative: scores.negatives.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Sv,
    Spf,
    Sasv,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Sasv, Metric::Sv, Metric::Spf];

    /// Trial types scored as negatives for this metric.
    pub fn negative_types(self) -> &'static [TrialType] {
        match self {
            Metric::Sv => &[TrialType::Nontarget],
            Metric::Spf => &[TrialType::Spoof],
            Metric::Sasv => &[TrialType::Nontarget, TrialType::Spoof],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Sv => "SV-EER",
            Metric::Spf => "SPF-EER",
            Metric::Sasv => "SASV-EER",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Target scores and the metric's negative scores, in score-set order.
/// Either side may be empty.
pub fn split_scores<T: Scalar>(scores: &ScoreSet<T>, metric: Metric) -> (Vec<T>, Vec<T>) {
    let negative = metric.negative_types();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for r in scores {
        if r.trial.trial_type == TrialType::Target {
            pos.push(r.score);
        } else if negative.contains(&r.trial.trial_type) {
            neg.push(r.score);
        }
    }
    (pos, neg)
}

/// Three pooled EERs plus per-attack SPF-style EERs.
///
/// A metric whose negative side is empty is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct EerReport<T> {
    pub sv: Option<EerResult<T>>,
    pub spf: Option<EerResult<T>>,
    pub sasv: Option<EerResult<T>>,
    pub per_attack: BTreeMap<String, EerResult<T>>,
}

impl<T: Scalar> EerReport<T> {
    pub fn get(&self, metric: Metric) -> Option<&EerResult<T>> {
        match metric {
            Metric::Sv => self.sv.as_ref(),
            Metric::Spf => self.spf.as_ref(),
            Metric::Sasv => self.sasv.as_ref(),
        }
    }
}

/// Scores a submission against its protocol.
pub fn evaluate<T: Scalar>(scores: &ScoreSet<T>, protocol: &TrialList) -> Result<EerReport<T>> {
    let report = validate_against_protocol(scores, protocol);
    if !report.is_empty() {
        return Err(Error::Validation(format!(
            "{} missing, {} extra, {} mismatched",
            report.missing.len(),
            report.extra.len(),
            report.mismatched.len()
        )));
    }
    evaluate_unchecked(scores)
}

/// Computes the report from a score set alone, trusting its labels.
pub fn evaluate_unchecked<T: Scalar>(scores: &ScoreSet<T>) -> Result<EerReport<T>> {
    let metric = |m: Metric| -> Result<Option<EerResult<T>>> {
        let (pos, neg) = split_scores(scores, m);
        if pos.is_empty() {
            return Err(Error::EmptyScores("target"));
        }
        if neg.is_empty() {
            return Ok(None);
        }
        Ok(Some(eer(&LabeledScores::new(pos, neg)?)))
    };
    let sv = metric(Metric::Sv)?;
    let spf = metric(Metric::Spf)?;
    let sasv = metric(Metric::Sasv)?;

    let targets: Vec<T> = split_scores(scores, Metric::Sv).0;
    let mut by_attack: BTreeMap<String, Vec<T>> = BTreeMap::new();
    for r in scores
        .iter()
        .filter(|r| r.trial.trial_type == TrialType::Spoof)
    {
        by_attack
            .entry(r.trial.attack_type.clone())
            .or_default()
            .push(r.score);
    }
    let per_attack = by_attack
        .into_iter()
        .map(|(attack, neg)| Ok((attack, eer(&LabeledScores::new(targets.clone(), neg)?))))
        .collect::<Result<_>>()?;

    Ok(EerReport {
        sv,
        spf,
        sasv,
        per_attack,
    })
}
