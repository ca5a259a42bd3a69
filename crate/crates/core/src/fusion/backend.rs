use std::collections::HashMap;

use crate::embedding::{enrollment_embedding, EmbeddingStore};
use crate::error::{Error, Result};
use crate::fusion::MlpBackend;
use crate::protocol::TrialProtocol;
use crate::scalar::Scalar;
use crate::score_io::{ScoreRecord, ScoreSet};

/// Where the back-end looks up each of its three inputs.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingSources<'a, T> {
    /// Speaker embeddings of enrollment utterances.
    pub enrollment: &'a EmbeddingStore<T>,
    /// Speaker embeddings of test utterances.
    pub test: &'a EmbeddingStore<T>,
    /// CM embeddings of test utterances.
    pub cm: &'a EmbeddingStore<T>,
}

impl<'a, T: Scalar> EmbeddingSources<'a, T> {
    /// One speaker store for both enrollment and test utterances.
    pub fn combined(speaker: &'a EmbeddingStore<T>, cm: &'a EmbeddingStore<T>) -> Self {
        Self {
            enrollment: speaker,
            test: speaker,
            cm,
        }
    }

    pub fn check_dims(&self, model: &MlpBackend<T>) -> Result<()> {
        for (store, want) in [
            (self.enrollment, model.spk_dim()),
            (self.test, model.spk_dim()),
            (self.cm, model.cm_dim()),
        ] {
            if store.dim() != want {
                return Err(Error::DimensionMismatch {
                    expected: want,
                    found: store.dim(),
                });
            }
        }
        Ok(())
    }

    /// `[enrollment mean, test speaker, test CM]`.
    pub fn input<S: AsRef<str>>(&self, enrollment: &[S], test: &str) -> Result<Vec<T>> {
        let mut x = enrollment_embedding(self.enrollment, enrollment)?;
        x.extend_from_slice(self.test.require(test)?);
        x.extend_from_slice(self.cm.require(test)?);
        Ok(x)
    }
}

fn concat_checked<T: Scalar>(model: &MlpBackend<T>, parts: [&[T]; 3]) -> Result<Vec<T>> {
    let want = [model.spk_dim(), model.spk_dim(), model.cm_dim()];
    for (p, w) in parts.iter().zip(want) {
        if p.len() != w {
            return Err(Error::DimensionMismatch {
                expected: w,
                found: p.len(),
            });
        }
    }
    Ok(parts.concat())
}

/// Back-end score of one (enrollment, test, CM) embedding triple.
pub fn mlp_forward<T: Scalar>(
    model: &MlpBackend<T>,
    enrollment: &[T],
    test: &[T],
    cm: &[T],
) -> Result<T> {
    model.forward(&concat_checked(model, [enrollment, test, cm])?)
}

/// Scores every protocol trial with the back-end, in protocol order.
pub fn backend_score<T: Scalar>(
    model: &MlpBackend<T>,
    protocol: &TrialProtocol,
    sources: &EmbeddingSources<'_, T>,
) -> Result<ScoreSet<T>> {
    sources.check_dims(model)?;
    let mut enrol_cache: HashMap<&str, Vec<T>> = HashMap::new();
    let mut records = Vec::with_capacity(protocol.trials().len());
    for trial in protocol.trials() {
        let enrol = match enrol_cache.get(trial.speaker_model.as_str()) {
            Some(e) => e,
            None => {
                let e = enrollment_embedding(sources.enrollment, protocol.enrollment_of(trial))?;
                enrol_cache.entry(&trial.speaker_model).or_insert(e)
            }
        };
        let test = sources.test.require(&trial.test_utterance)?;
        let cm = sources.cm.require(&trial.test_utterance)?;
        records.push(ScoreRecord {
            trial: trial.clone(),
            score: mlp_forward(model, enrol, test, cm)?,
        });
    }
    Ok(ScoreSet::from_records(records)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::parse_embeddings;
    use crate::protocol::{parse_enrollment_map, parse_protocol};
    use crate::rng::Rng;
    use crate::score_io::validate_against_protocol;

    #[test]
    fn forward_order_matters() {
        let mut rng = Rng::seed_from_u64(3);
        let m = MlpBackend::<f64>::init(2, 1, &[4, 4, 4], &mut rng).unwrap();
        let a = [1.0, 0.0];
        let b = [0.0, 1.0];
        let s1 = mlp_forward(&m, &a, &b, &[0.5]).unwrap();
        let s2 = mlp_forward(&m, &b, &a, &[0.5]).unwrap();
        assert_ne!(s1, s2);
        assert!(s1 > 0.0 && s1 < 1.0);
        assert!(matches!(
            mlp_forward(&m, &a, &b, &[0.5, 1.0]),
            Err(Error::DimensionMismatch {
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn scores_cover_protocol() {
        let trials = parse_protocol(
            "A t1 bonafide target\nA t2 bonafide nontarget\nB t1 bonafide nontarget\nA s1 A07 spoof\nC t2 bonafide target\n",
        )
        .unwrap();
        let map = parse_enrollment_map("A e1 e2\nB e3\nC e2 e1\n").unwrap();
        let protocol = TrialProtocol::new(trials, map).unwrap();
        let spk =
            parse_embeddings::<f64>("#dim 2\ne1 1 0\ne2 0 1\ne3 1 1\nt1 1 2\nt2 -1 0\ns1 1 1\n")
                .unwrap();
        let cm = parse_embeddings::<f64>("#dim 1\nt1 1\nt2 0.5\ns1 -2\n").unwrap();
        let mut rng = Rng::seed_from_u64(9);
        let m = MlpBackend::init(2, 1, &[3, 3, 3], &mut rng).unwrap();
        let sources = EmbeddingSources::combined(&spk, &cm);
        let scores = backend_score(&m, &protocol, &sources).unwrap();
        assert!(validate_against_protocol(&scores, protocol.trials()).is_empty());
        // A and C share an enrollment set (different order), same test utterance t2
        let a = scores.get("A", "t2").unwrap().score;
        let c = scores.get("C", "t2").unwrap().score;
        assert!((a - c).abs() < 1e-15);

        let cm_missing = parse_embeddings::<f64>("#dim 1\nt1 1\nt2 0.5\n").unwrap();
        let sources = EmbeddingSources::combined(&spk, &cm_missing);
        assert!(
            matches!(backend_score(&m, &protocol, &sources), Err(Error::MissingUtterance(u)) if u == "s1")
        );

        let wrong_dim = parse_embeddings::<f64>("#dim 2\nt1 1 1\n").unwrap();
        let sources = EmbeddingSources::combined(&spk, &wrong_dim);
        assert!(matches!(
            backend_score(&m, &protocol, &sources),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
