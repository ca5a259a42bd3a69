//! Training-pair construction and mini-batch training of the back-end.

use std::collections::HashSet;
use std::io::Read;

use crate::error::{Error, ParseError, Result};
use crate::fusion::{EmbeddingSources, MlpBackend};
use crate::protocol::{field_count_error, is_bonafide, EnrollmentMap, TrialType};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::text::content_lines;

/// A training-pool utterance. For spoofed speech `speaker` is the
/// impersonated speaker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledUtterance {
    pub utterance: String,
    pub speaker: String,
    pub attack_type: String,
}

impl LabeledUtterance {
    pub fn new(
        utterance: impl Into<String>,
        speaker: impl Into<String>,
        attack_type: impl Into<String>,
    ) -> Self {
        Self {
            utterance: utterance.into(),
            speaker: speaker.into(),
            attack_type: attack_type.into(),
        }
    }

    pub fn is_bonafide(&self) -> bool {
        is_bonafide(&self.attack_type)
    }
}

/// Labels file: `utterance speaker attack_type` per line.
pub fn parse_labels(text: &str) -> Result<Vec<LabeledUtterance>, ParseError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for line in content_lines(text) {
        if line.tokens.len() != 3 {
            return Err(field_count_error(&line, 3));
        }
        let t = &line.tokens;
        if !seen.insert(t[0].text) {
            return Err(ParseError::new(
                line.number,
                t[0].column,
                crate::error::ParseErrorKind::DuplicateUtterance(t[0].text.into()),
            ));
        }
        out.push(LabeledUtterance::new(t[0].text, t[1].text, t[2].text));
    }
    Ok(out)
}

pub fn read_labels<R: Read>(mut reader: R) -> Result<Vec<LabeledUtterance>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    Ok(parse_labels(&text)?)
}

pub fn write_labels(pool: &[LabeledUtterance]) -> String {
    pool.iter()
        .map(|u| format!("{} {} {}\n", u.utterance, u.speaker, u.attack_type))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingTrial {
    pub enrollment: Vec<String>,
    pub test: String,
    pub trial_type: TrialType,
}

impl TrainingTrial {
    /// 1 for target trials, 0 otherwise.
    pub fn label(&self) -> bool {
        self.trial_type == TrialType::Target
    }
}

/// Relative class weights target:nontarget:spoof.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassRatios {
    pub target: u32,
    pub nontarget: u32,
    pub spoof: u32,
}

impl Default for ClassRatios {
    fn default() -> Self {
        Self {
            target: 1,
            nontarget: 1,
            spoof: 2,
        }
    }
}

impl ClassRatios {
    fn of(&self, t: TrialType) -> u32 {
        match t {
            TrialType::Target => self.target,
            TrialType::Nontarget => self.nontarget,
            TrialType::Spoof => self.spoof,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSampling {
    /// Every candidate pair.
    Exhaustive,
    /// Largest subset whose class counts follow the ratios; classes with no
    /// candidates are dropped from the ratio.
    Balanced(ClassRatios),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrials {
    pub trials: Vec<TrainingTrial>,
    /// Speakers for which no target pair could be formed.
    pub speakers_without_positives: Vec<String>,
}

impl TrainingTrials {
    pub fn count(&self, t: TrialType) -> usize {
        self.trials.iter().filter(|x| x.trial_type == t).count()
    }
}

fn pairwise_candidates(pool: &[LabeledUtterance]) -> (Vec<TrainingTrial>, Vec<String>) {
    let bonafide: Vec<&LabeledUtterance> = pool.iter().filter(|u| u.is_bonafide()).collect();
    let mut out = Vec::new();
    for (i, e) in bonafide.iter().enumerate() {
        for t in bonafide
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, t)| t)
        {
            out.push(TrainingTrial {
                enrollment: vec![e.utterance.clone()],
                test: t.utterance.clone(),
                trial_type: if e.speaker == t.speaker {
                    TrialType::Target
                } else {
                    TrialType::Nontarget
                },
            });
        }
    }
    for s in pool.iter().filter(|u| !u.is_bonafide()) {
        for e in bonafide.iter().filter(|e| e.speaker == s.speaker) {
            out.push(TrainingTrial {
                enrollment: vec![e.utterance.clone()],
                test: s.utterance.clone(),
                trial_type: TrialType::Spoof,
            });
        }
    }
    let mut speakers: Vec<&str> = Vec::new();
    for u in &bonafide {
        if !speakers.contains(&u.speaker.as_str()) {
            speakers.push(&u.speaker);
        }
    }
    let lonely = speakers
        .into_iter()
        .filter(|s| bonafide.iter().filter(|u| u.speaker == *s).count() < 2)
        .map(str::to_owned)
        .collect();
    (out, lonely)
}

fn enrollment_candidates(
    pool: &[LabeledUtterance],
    map: &EnrollmentMap,
) -> (Vec<TrainingTrial>, Vec<String>) {
    let mut out = Vec::new();
    let mut lonely = Vec::new();
    for (speaker, enrol) in map.iter() {
        let mut has_target = false;
        for u in pool.iter().filter(|u| !enrol.contains(&u.utterance)) {
            let trial_type = match (u.is_bonafide(), u.speaker == speaker) {
                (true, true) => TrialType::Target,
                (true, false) => TrialType::Nontarget,
                (false, true) => TrialType::Spoof,
                (false, false) => continue,
            };
            has_target |= trial_type == TrialType::Target;
            out.push(TrainingTrial {
                enrollment: enrol.to_vec(),
                test: u.utterance.clone(),
                trial_type,
            });
        }
        if !has_target {
            lonely.push(speaker.to_owned());
        }
    }
    (out, lonely)
}

/// Builds labelled training pairs from a pool of utterances.
///
/// Without an enrollment map every bona fide utterance serves as a
/// single-utterance enrollment for every other bona fide utterance, in both
/// orders (targets when the speakers agree, nontargets otherwise), and for
/// every spoof aimed at its speaker. With a map, each mapped speaker's
/// enrollment list is paired with every other pool utterance of that speaker
/// and every bona fide utterance of other speakers.
pub fn build_training_trials(
    pool: &[LabeledUtterance],
    enrollment: Option<&EnrollmentMap>,
    sampling: PairSampling,
    seed: u64,
) -> TrainingTrials {
    let (candidates, speakers_without_positives) = match enrollment {
        None => pairwise_candidates(pool),
        Some(map) => enrollment_candidates(pool, map),
    };
    let trials = match sampling {
        PairSampling::Exhaustive => candidates,
        PairSampling::Balanced(ratios) => balance(candidates, ratios, seed),
    };
    TrainingTrials {
        trials,
        speakers_without_positives,
    }
}

fn balance(candidates: Vec<TrainingTrial>, ratios: ClassRatios, seed: u64) -> Vec<TrainingTrial> {
    let positions = |t: TrialType| -> Vec<usize> {
        (0..candidates.len())
            .filter(|&i| candidates[i].trial_type == t)
            .collect()
    };
    let classes: Vec<(usize, TrialType, Vec<usize>)> = TrialType::ALL
        .iter()
        .enumerate()
        .map(|(k, &t)| (k, t, positions(t)))
        .filter(|(_, t, idx)| !idx.is_empty() && ratios.of(*t) > 0)
        .collect();
    let Some(unit) = classes
        .iter()
        .map(|(_, t, idx)| idx.len() / ratios.of(*t) as usize)
        .min()
    else {
        return Vec::new();
    };
    let mut keep = vec![false; candidates.len()];
    for (k, t, mut idx) in classes {
        Rng::derive(seed, k as u64 + 1).shuffle(&mut idx);
        for &j in &idx[..unit * ratios.of(t) as usize] {
            keep[j] = true;
        }
    }
    candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .collect()
}

/// Back-end training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    pub ratios: ClassRatios,
    /// Stop after this many epochs without held-out improvement; only
    /// used when a held-out set is given.
    pub patience: Option<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            seed: 2022,
            epochs: 30,
            batch_size: 128,
            learning_rate: 1e-3,
            hidden: vec![256, 128, 64],
            ratios: ClassRatios::default(),
            patience: None,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return bad("learning_rate must be a finite non-negative number");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        if self.patience == Some(0) {
            return bad("patience must be positive");
        }
        Ok(())
    }

    /// `key=value` lines in a stable order, for run logs and config files.
    pub fn describe(&self) -> String {
        let hidden: Vec<String> = self.hidden.iter().map(usize::to_string).collect();
        format!(
            "seed={}\nepochs={}\nbatch_size={}\nlearning_rate={}\nhidden={}\nratios={}:{}:{}\npatience={}\n",
            self.seed,
            self.epochs,
            self.batch_size,
            self.learning_rate,
            hidden.join(","),
            self.ratios.target,
            self.ratios.nontarget,
            self.ratios.spoof,
            self.patience.map_or("off".to_owned(), |p| p.to_string()),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean of the per-batch losses seen during the epoch.
    pub train_loss: f64,
    pub holdout_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedBackend<T> {
    pub model: MlpBackend<T>,
    pub history: Vec<EpochStats>,
}

struct Dataset<T> {
    inputs: Vec<Vec<T>>,
    labels: Vec<T>,
}

fn dataset<T: Scalar>(
    trials: &[TrainingTrial],
    sources: &EmbeddingSources<'_, T>,
) -> Result<Dataset<T>> {
    let mut inputs = Vec::with_capacity(trials.len());
    let mut labels = Vec::with_capacity(trials.len());
    for t in trials {
        inputs.push(sources.input(&t.enrollment, &t.test)?);
        labels.push(if t.label() { T::one() } else { T::zero() });
    }
    Ok(Dataset { inputs, labels })
}

/// Trains a freshly initialised back-end on `trials`.
pub fn mlp_train<T: Scalar>(
    trials: &[TrainingTrial],
    sources: &EmbeddingSources<'_, T>,
    config: &TrainingConfig,
) -> Result<TrainedBackend<T>> {
    mlp_train_with_holdout(trials, &[], sources, config)
}

/// Like [`mlp_train`], also tracking the loss on `holdout`. With
/// `config.patience` set and a non-empty hold-out, training stops early
/// and the best hold-out parameters are returned.
pub fn mlp_train_with_holdout<T: Scalar>(
    trials: &[TrainingTrial],
    holdout: &[TrainingTrial],
    sources: &EmbeddingSources<'_, T>,
    config: &TrainingConfig,
) -> Result<TrainedBackend<T>> {
    config.validate()?;
    if trials.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let spk_dim = sources.enrollment.dim();
    if sources.test.dim() != spk_dim {
        return Err(Error::DimensionMismatch {
            expected: spk_dim,
            found: sources.test.dim(),
        });
    }
    let train = dataset(trials, sources)?;
    let held = dataset(holdout, sources)?;

    let mut init_rng = Rng::derive(config.seed, 0);
    let mut model = MlpBackend::init(spk_dim, sources.cm.dim(), &config.hidden, &mut init_rng)?;
    let mut order_rng = Rng::derive(config.seed, 1);
    let lr = T::lit(config.learning_rate);

    let mut order: Vec<usize> = (0..train.inputs.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, MlpBackend<T>)> = None;
    let mut stale = 0;
    let mut batch_x: Vec<&[T]> = Vec::with_capacity(config.batch_size);
    let mut batch_y: Vec<T> = Vec::with_capacity(config.batch_size);

    for epoch in 1..=config.epochs {
        order_rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            batch_x.clear();
            batch_y.clear();
            for &i in chunk {
                batch_x.push(&train.inputs[i]);
                batch_y.push(train.labels[i]);
            }
            let (loss, grads) = model.loss_and_gradients(&batch_x, &batch_y)?;
            if !loss.is_finite() || !grads.flatten().iter().all(|g| g.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: b + 1,
                });
            }
            model.apply_gradients(&grads, lr);
            loss_sum += loss.to_f64().unwrap_or(f64::NAN);
            batches += 1;
        }
        let holdout_loss = if held.inputs.is_empty() {
            None
        } else {
            Some(
                model
                    .mean_loss(&held.inputs, &held.labels)?
                    .to_f64()
                    .unwrap_or(f64::NAN),
            )
        };
        history.push(EpochStats {
            epoch,
            train_loss: loss_sum / batches as f64,
            holdout_loss,
        });
        if let (Some(patience), Some(h)) = (config.patience, holdout_loss) {
            if best.as_ref().is_none_or(|(b, _)| h < *b) {
                best = Some((h, model.clone()));
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }
    if let Some((_, m)) = best {
        model = m;
    }
    Ok(TrainedBackend { model, history })
}
