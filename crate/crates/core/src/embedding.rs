//! Pre-extracted utterance embeddings and cosine ASV scoring.
//!
//! File format: a `#dim D` header, then one `utterance_id v1 .. vD` line
//! per vector. Other `#` lines are comments.

use std::io::{Read, Write};

use indexmap::IndexMap;

use crate::error::{Error, ParseError, ParseErrorKind, Result};
use crate::protocol::TrialProtocol;
use crate::scalar::{fmt_shortest, Scalar};
use crate::score_io::ScoreSet;
use crate::text::{raw_lines, tokens_of};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore<T> {
    dim: usize,
    vectors: IndexMap<String, Vec<T>>,
}

impl<T: Scalar> EmbeddingStore<T> {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig(
                "embedding dimension must be positive".into(),
            ));
        }
        Ok(Self {
            dim,
            vectors: IndexMap::new(),
        })
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<T>) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("embedding"));
        }
        if self.vectors.contains_key(&id) {
            return Err(Error::DuplicateEmbedding(id));
        }
        self.vectors.insert(id, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[T]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    /// Like [`get`](Self::get) but names the utterance on failure.
    pub fn require(&self, id: &str) -> Result<&[T]> {
        self.get(id)
            .ok_or_else(|| Error::MissingUtterance(id.to_owned()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[T])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn write_to<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "#dim {}", self.dim)?;
        for (id, v) in &self.vectors {
            write!(sink, "{id}")?;
            for x in v {
                write!(sink, " {}", fmt_shortest(*x))?;
            }
            writeln!(sink)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("utf8")
    }
}

pub fn parse_embeddings<T: Scalar>(text: &str) -> Result<EmbeddingStore<T>, ParseError> {
    let mut store: Option<EmbeddingStore<T>> = None;
    for (number, raw) in raw_lines(text) {
        let tokens = tokens_of(raw);
        let Some(first) = tokens.first() else {
            continue;
        };
        if first.text == "#dim" {
            if store.is_some() {
                return Err(ParseError::new(
                    number,
                    first.column,
                    ParseErrorKind::InvalidHeader("repeated #dim header".into()),
                ));
            }
            let dim = match tokens.as_slice() {
                [_, d] => d.text.parse::<usize>().ok().filter(|&d| d > 0),
                _ => None,
            };
            let dim = dim.ok_or_else(|| {
                ParseError::new(
                    number,
                    first.column,
                    ParseErrorKind::InvalidHeader(format!(
                        "expected \"#dim D\", found {:?}",
                        raw.trim()
                    )),
                )
            })?;
            store = Some(EmbeddingStore {
                dim,
                vectors: IndexMap::new(),
            });
            continue;
        }
        if first.text.starts_with('#') {
            continue;
        }
        let Some(store) = store.as_mut() else {
            return Err(ParseError::new(
                number,
                first.column,
                ParseErrorKind::MissingHeader,
            ));
        };
        if tokens.len() != store.dim + 1 {
            let column = tokens
                .get(store.dim + 1)
                .map_or(raw.trim_end().chars().count() + 1, |t| t.column);
            return Err(ParseError::new(
                number,
                column,
                ParseErrorKind::FieldCount {
                    expected: store.dim + 1,
                    found: tokens.len(),
                },
            ));
        }
        let mut vector = Vec::with_capacity(store.dim);
        for tok in &tokens[1..] {
            let v: T = tok.text.parse().map_err(|_| {
                ParseError::new(
                    number,
                    tok.column,
                    ParseErrorKind::InvalidNumber(tok.text.into()),
                )
            })?;
            if !v.is_finite() {
                return Err(ParseError::new(
                    number,
                    tok.column,
                    ParseErrorKind::NonFinite(tok.text.into()),
                ));
            }
            vector.push(v);
        }
        if store.vectors.contains_key(first.text) {
            return Err(ParseError::new(
                number,
                first.column,
                ParseErrorKind::DuplicateEmbedding(first.text.into()),
            ));
        }
        store.vectors.insert(first.text.to_owned(), vector);
    }
    store.ok_or_else(|| ParseError::new(1, 1, ParseErrorKind::MissingHeader))
}

pub fn read_embeddings<T: Scalar, R: Read>(mut reader: R) -> Result<EmbeddingStore<T>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    Ok(parse_embeddings(&text)?)
}

/// Componentwise mean of the listed utterances' vectors.
pub fn enrollment_embedding<T: Scalar, S: AsRef<str>>(
    store: &EmbeddingStore<T>,
    utterances: &[S],
) -> Result<Vec<T>> {
    if utterances.is_empty() {
        return Err(Error::EmptyUtteranceList);
    }
    let mut sum = vec![T::zero(); store.dim()];
    for u in utterances {
        for (acc, &x) in sum.iter_mut().zip(store.require(u.as_ref())?) {
            *acc = *acc + x;
        }
    }
    let n = T::from_count(utterances.len());
    Ok(sum.into_iter().map(|s| s / n).collect())
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine_score<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == T::zero() || nb == T::zero() {
        return Err(Error::ZeroNorm);
    }
    let c = dot(a, b) / (na * nb);
    Ok(c.max(-T::one()).min(T::one()))
}

/// Cosine ASV score for every protocol trial: averaged enrollment
/// embedding against the test utterance embedding.
pub fn cosine_scores<T: Scalar>(
    protocol: &TrialProtocol,
    enrollment_store: &EmbeddingStore<T>,
    test_store: &EmbeddingStore<T>,
) -> Result<ScoreSet<T>> {
    let mut cache: IndexMap<&str, Vec<T>> = IndexMap::new();
    let mut scores = Vec::with_capacity(protocol.trials().len());
    for trial in protocol.trials() {
        if !cache.contains_key(trial.speaker_model.as_str()) {
            let e = enrollment_embedding(enrollment_store, protocol.enrollment_of(trial))?;
            cache.insert(&trial.speaker_model, e);
        }
        let enrol = &cache[trial.speaker_model.as_str()];
        let test = test_store.require(&trial.test_utterance)?;
        scores.push(crate::score_io::ScoreRecord {
            trial: trial.clone(),
            score: cosine_score(enrol, test)?,
        });
    }
    Ok(ScoreSet::from_records(scores)?)
}
