//! Synthetic protocols, scores and embeddings with known separability.
//!
//! Score fixtures draw target scores from N(0, 1), nontarget scores from
//! N(-d'_sv, 1) and spoof scores from N(-d'_spf, 1), so each pooled EER
//! converges to Phi(-d'/2) for its d'. All randomness comes from
//! [`Rng`](crate::rng::Rng) streams derived from `SynthSpec::seed`.

use crate::embedding::{cosine_scores, dot, EmbeddingStore};
use crate::error::{Error, Result};
use crate::fusion::LabeledUtterance;
use crate::protocol::{EnrollmentMap, Trial, TrialList, TrialProtocol, TrialType, BONAFIDE};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::score_io::{ScoreRecord, ScoreSet};

const ENROLL_PER_SPEAKER: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_target: usize,
    pub n_nontarget: usize,
    pub n_spoof: usize,
    pub dprime_sv: f64,
    pub dprime_spf: f64,
    pub spk_dim: usize,
    pub cm_dim: usize,
    pub n_speakers: usize,
    pub n_attacks: usize,
    /// Training-pool size per speaker, bona fide and spoofed.
    pub train_bonafide_per_speaker: usize,
    pub train_spoof_per_speaker: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_target: 1000,
            n_nontarget: 1000,
            n_spoof: 1000,
            dprime_sv: 2.0,
            dprime_spf: 2.0,
            spk_dim: 8,
            cm_dim: 4,
            n_speakers: 4,
            n_attacks: 6,
            train_bonafide_per_speaker: 10,
            train_spoof_per_speaker: 10,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if self.n_target == 0 {
            return bad("n_target must be at least 1");
        }
        if self.n_nontarget + self.n_spoof == 0 {
            return bad("need at least one nontarget or spoof trial");
        }
        if self.spk_dim == 0 || self.cm_dim == 0 {
            return bad("embedding dimensions must be at least 1");
        }
        if self.n_speakers == 0 || (self.n_nontarget > 0 && self.n_speakers < 2) {
            return bad("nontarget trials need at least 2 speakers");
        }
        if self.n_spoof > 0 && self.n_attacks == 0 {
            return bad("spoof trials need at least 1 attack type");
        }
        if !self.dprime_sv.is_finite() || !self.dprime_spf.is_finite() {
            return bad("d' values must be finite");
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!(
            "n_target={}\nn_nontarget={}\nn_spoof={}\ndprime_sv={}\ndprime_spf={}\nspk_dim={}\ncm_dim={}\n\
             n_speakers={}\nn_attacks={}\ntrain_bonafide_per_speaker={}\ntrain_spoof_per_speaker={}\nseed={}\n",
            self.n_target,
            self.n_nontarget,
            self.n_spoof,
            self.dprime_sv,
            self.dprime_spf,
            self.spk_dim,
            self.cm_dim,
            self.n_speakers,
            self.n_attacks,
            self.train_bonafide_per_speaker,
            self.train_spoof_per_speaker,
            self.seed,
        )
    }
}

/// Who actually produced a test utterance.
#[derive(Debug, Clone)]
struct Origin {
    speaker: usize,
    attack: Option<usize>,
}

fn speaker_id(s: usize) -> String {
    format!("SPK_{s:04}")
}

fn attack_id(a: usize) -> String {
    format!("A{:02}", a + 1)
}

/// Trials, enrollment map and each test utterance's true origin.
fn build_protocol(spec: &SynthSpec) -> (TrialProtocol, Vec<Origin>) {
    let n_spk = spec.n_speakers;
    let mut map = EnrollmentMap::default();
    for s in 0..n_spk {
        let utts = (0..ENROLL_PER_SPEAKER)
            .map(|k| format!("E_{s:04}_{k}"))
            .collect();
        map.insert(speaker_id(s), utts).expect("unique speakers");
    }
    let mut trials = Vec::with_capacity(spec.n_target + spec.n_nontarget + spec.n_spoof);
    let mut origins = Vec::with_capacity(trials.capacity());
    for i in 0..spec.n_target {
        let s = i % n_spk;
        trials.push(
            Trial::new(
                speaker_id(s),
                format!("T_{i:07}"),
                BONAFIDE,
                TrialType::Target,
            )
            .unwrap(),
        );
        origins.push(Origin {
            speaker: s,
            attack: None,
        });
    }
    for i in 0..spec.n_nontarget {
        let s = i % n_spk;
        let other = (s + 1 + (i / n_spk) % (n_spk - 1)) % n_spk;
        trials.push(
            Trial::new(
                speaker_id(s),
                format!("N_{i:07}"),
                BONAFIDE,
                TrialType::Nontarget,
            )
            .unwrap(),
        );
        origins.push(Origin {
            speaker: other,
            attack: None,
        });
    }
    for i in 0..spec.n_spoof {
        let s = i % n_spk;
        let a = i % spec.n_attacks;
        trials.push(
            Trial::new(
                speaker_id(s),
                format!("S_{i:07}"),
                attack_id(a),
                TrialType::Spoof,
            )
            .unwrap(),
        );
        origins.push(Origin {
            speaker: s,
            attack: Some(a),
        });
    }
    let list = TrialList::from_trials(trials).expect("generated keys are unique");
    let protocol = TrialProtocol::new(list, map).expect("validated spec yields a valid protocol");
    (protocol, origins)
}

/// Protocol plus Gaussian scores with the spec's separabilities.
pub fn synth_scores<T: Scalar>(spec: &SynthSpec) -> Result<(TrialProtocol, ScoreSet<T>)> {
    spec.validate()?;
    let (protocol, _) = build_protocol(spec);
    let mut rng = Rng::derive(spec.seed, 4);
    let records = protocol
        .trials()
        .iter()
        .map(|t| {
            let mean = match t.trial_type {
                TrialType::Target => 0.0,
                TrialType::Nontarget => -spec.dprime_sv,
                TrialType::Spoof => -spec.dprime_spf,
            };
            ScoreRecord {
                trial: t.clone(),
                score: T::lit(rng.gaussian(mean, 1.0)),
            }
        })
        .collect();
    let scores = ScoreSet::from_records(records)?;
    Ok((protocol, scores))
}

/// Generated embedding fixture.
#[derive(Debug, Clone)]
pub struct SyntheticEmbeddings<T> {
    pub protocol: TrialProtocol,
    /// Speaker embeddings of enrollment, test and training-pool utterances.
    pub speaker: EmbeddingStore<T>,
    /// CM embeddings of test and training-pool utterances.
    pub cm: EmbeddingStore<T>,
    /// Labels of the protocol's test utterances.
    pub test_labels: Vec<LabeledUtterance>,
    /// Training pool, disjoint from the protocol's utterances.
    pub train_pool: Vec<LabeledUtterance>,
    /// Unit direction separating bona fide from spoofed CM embeddings.
    pub cm_direction: Vec<T>,
}

impl<T: Scalar> SyntheticEmbeddings<T> {
    /// Cosine ASV scores of the protocol.
    pub fn asv_scores(&self) -> Result<ScoreSet<T>> {
        cosine_scores(&self.protocol, &self.speaker, &self.speaker)
    }

    /// Oracle CM scores: projection of each test CM embedding on the
    /// bona fide direction, distributed N(+d'/2, 1) for bona fide and
    /// N(-d'/2, 1) for spoofed speech.
    pub fn cm_scores(&self) -> Result<ScoreSet<T>> {
        let records = self
            .protocol
            .trials()
            .iter()
            .map(|t| {
                Ok(ScoreRecord {
                    trial: t.clone(),
                    score: dot(self.cm.require(&t.test_utterance)?, &self.cm_direction),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScoreSet::from_records(records)?)
    }
}

fn unit_vector(rng: &mut Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

struct World {
    centers: Vec<Vec<f64>>,
    cm_direction: Vec<f64>,
    dprime_sv: f64,
    dprime_spf: f64,
}

impl World {
    fn speaker_embedding(&self, rng: &mut Rng, speaker: usize) -> Vec<f64> {
        self.centers[speaker]
            .iter()
            .map(|c| self.dprime_sv * c + rng.normal())
            .collect()
    }

    fn cm_embedding(&self, rng: &mut Rng, bonafide: bool) -> Vec<f64> {
        let sign = if bonafide { 0.5 } else { -0.5 };
        self.cm_direction
            .iter()
            .map(|u| sign * self.dprime_spf * u + rng.normal())
            .collect()
    }
}

fn to_t<T: Scalar>(v: Vec<f64>) -> Vec<T> {
    v.into_iter().map(T::lit).collect()
}

/// Speaker embeddings cluster around per-speaker centers of norm
/// `dprime_sv` (spoofs sit on their target's cluster); CM embeddings sit at
/// `±dprime_spf/2` along a random unit direction. Noise is unit-variance
/// Gaussian per component.
pub fn synth_embeddings<T: Scalar>(spec: &SynthSpec) -> Result<SyntheticEmbeddings<T>> {
    spec.validate()?;
    let (protocol, origins) = build_protocol(spec);
    let mut world_rng = Rng::derive(spec.seed, 1);
    let world = World {
        centers: (0..spec.n_speakers)
            .map(|_| unit_vector(&mut world_rng, spec.spk_dim))
            .collect(),
        cm_direction: unit_vector(&mut world_rng, spec.cm_dim),
        dprime_sv: spec.dprime_sv,
        dprime_spf: spec.dprime_spf,
    };

    let mut speaker = EmbeddingStore::new(spec.spk_dim)?;
    let mut cm = EmbeddingStore::new(spec.cm_dim)?;
    let mut rng = Rng::derive(spec.seed, 2);

    for (model, utts) in protocol.enrollment().iter() {
        let s: usize = model["SPK_".len()..].parse().expect("generated speaker id");
        for u in utts {
            speaker.insert(u.clone(), to_t(world.speaker_embedding(&mut rng, s)))?;
        }
    }
    let mut test_labels = Vec::with_capacity(origins.len());
    for (trial, origin) in protocol.trials().iter().zip(&origins) {
        let bonafide = origin.attack.is_none();
        speaker.insert(
            trial.test_utterance.clone(),
            to_t(world.speaker_embedding(&mut rng, origin.speaker)),
        )?;
        cm.insert(
            trial.test_utterance.clone(),
            to_t(world.cm_embedding(&mut rng, bonafide)),
        )?;
        test_labels.push(LabeledUtterance::new(
            trial.test_utterance.clone(),
            speaker_id(origin.speaker),
            origin.attack.map_or(BONAFIDE.to_owned(), attack_id),
        ));
    }

    let mut pool_rng = Rng::derive(spec.seed, 3);
    let mut train_pool = Vec::new();
    for s in 0..spec.n_speakers {
        for k in 0..spec.train_bonafide_per_speaker {
            train_pool.push(LabeledUtterance::new(
                format!("PB_{s:04}_{k:05}"),
                speaker_id(s),
                BONAFIDE,
            ));
        }
        for k in 0..spec.train_spoof_per_speaker {
            let attack = attack_id(k % spec.n_attacks.max(1));
            train_pool.push(LabeledUtterance::new(
                format!("PS_{s:04}_{k:05}"),
                speaker_id(s),
                attack,
            ));
        }
    }
    for u in &train_pool {
        let s: usize = u.speaker["SPK_".len()..]
            .parse()
            .expect("generated speaker id");
        speaker.insert(
            u.utterance.clone(),
            to_t(world.speaker_embedding(&mut pool_rng, s)),
        )?;
        cm.insert(
            u.utterance.clone(),
            to_t(world.cm_embedding(&mut pool_rng, u.is_bonafide())),
        )?;
    }

    Ok(SyntheticEmbeddings {
        protocol,
        speaker,
        cm,
        test_labels,
        train_pool,
        cm_direction: to_t(world.cm_direction),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::cosine_score;
    use crate::score_io::validate_against_protocol;

    fn small() -> SynthSpec {
        SynthSpec {
            n_target: 40,
            n_nontarget: 30,
            n_spoof: 20,
            ..Default::default()
        }
    }

    #[test]
    fn scores_validate_and_repeat() {
        let (p, s) = synth_scores::<f64>(&small()).unwrap();
        assert!(validate_against_protocol(&s, p.trials()).is_empty());
        assert_eq!(p.trials().count(TrialType::Target), 40);
        let (_, s2) = synth_scores::<f64>(&small()).unwrap();
        assert_eq!(s.to_text(), s2.to_text());
        let (_, s3) = synth_scores::<f64>(&SynthSpec { seed: 1, ..small() }).unwrap();
        assert_ne!(s.to_text(), s3.to_text());
    }

    #[test]
    fn nontargets_use_other_speakers() {
        let spec = small();
        let (protocol, origins) = build_protocol(&spec);
        for (t, o) in protocol.trials().iter().zip(&origins) {
            let claimed = speaker_id(o.speaker) == t.speaker_model;
            assert_eq!(claimed, t.trial_type != TrialType::Nontarget, "{t}");
        }
    }

    #[test]
    fn invalid_specs() {
        for spec in [
            SynthSpec {
                n_target: 0,
                ..small()
            },
            SynthSpec {
                n_nontarget: 0,
                n_spoof: 0,
                ..small()
            },
            SynthSpec {
                n_speakers: 1,
                ..small()
            },
            SynthSpec {
                spk_dim: 0,
                ..small()
            },
            SynthSpec {
                n_attacks: 0,
                ..small()
            },
            SynthSpec {
                dprime_sv: f64::NAN,
                ..small()
            },
        ] {
            assert!(matches!(
                synth_scores::<f64>(&spec),
                Err(Error::InvalidConfig(_))
            ));
            assert!(synth_embeddings::<f64>(&spec).is_err());
        }
    }

    #[test]
    fn embeddings_cover_protocol_and_pool() {
        let e = synth_embeddings::<f64>(&small()).unwrap();
        for t in e.protocol.trials() {
            assert!(e.speaker.get(&t.test_utterance).is_some());
            assert!(e.cm.get(&t.test_utterance).is_some());
        }
        for (_, utts) in e.protocol.enrollment().iter() {
            assert!(utts.iter().all(|u| e.speaker.get(u).is_some()));
        }
        assert_eq!(e.train_pool.len(), 4 * 20);
        assert!(
            validate_against_protocol(&e.asv_scores().unwrap(), e.protocol.trials()).is_empty()
        );
        assert!(validate_against_protocol(&e.cm_scores().unwrap(), e.protocol.trials()).is_empty());
        let again = synth_embeddings::<f64>(&small()).unwrap();
        assert_eq!(again.speaker, e.speaker);
        assert_eq!(again.cm, e.cm);
    }

    #[test]
    fn well_separated_speakers_are_ranked_by_cosine() {
        let spec = SynthSpec {
            dprime_sv: 12.0,
            train_bonafide_per_speaker: 25,
            train_spoof_per_speaker: 0,
            ..small()
        };
        let e = synth_embeddings::<f64>(&spec).unwrap();
        let pool = &e.train_pool;
        let (mut same, mut diff) = (Vec::new(), Vec::new());
        for (i, a) in pool.iter().enumerate() {
            for b in &pool[i + 1..] {
                let c = cosine_score(
                    e.speaker.get(&a.utterance).unwrap(),
                    e.speaker.get(&b.utterance).unwrap(),
                )
                .unwrap();
                if a.speaker == b.speaker {
                    same.push(c)
                } else {
                    diff.push(c)
                }
            }
        }
        // Monte Carlo over random (same, different) pairs at a fixed seed
        let mut rng = Rng::seed_from_u64(99);
        let trials = 20_000;
        let wins = (0..trials)
            .filter(|_| same[rng.below(same.len())] > diff[rng.below(diff.len())])
            .count();
        assert!(wins as f64 / trials as f64 >= 0.99, "{wins}");
    }
}
