//! Challenge score files, submission validation and the results file.
//!
//! A score row is the four protocol fields followed by a real score. Scores
//! are written with the shortest decimal rendering that parses back to the
//! same value, so `parse(write(s)) == s` holds exactly.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};

use crate::error::{Error, ParseError, ParseErrorKind, Result};
use crate::protocol::{field_count_error, trial_from_line, Trial, TrialList};
use crate::scalar::{fmt_shortest, Scalar};
use crate::text::content_lines;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord<T> {
    pub trial: Trial,
    pub score: T,
}

/// Ordered score records with unique trial keys and finite scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet<T> {
    records: Vec<ScoreRecord<T>>,
    index: HashMap<(String, String), usize>,
}

impl<T> Default for ScoreSet<T> {
    fn default() -> Self {
        Self {
            records: Vec::new(),
            index: HashMap::new(),
        }
    }
}

impl<T: Scalar> ScoreSet<T> {
    /// Builds a set from records; error positions are 1-based record indices.
    pub fn from_records(records: Vec<ScoreRecord<T>>) -> Result<Self, ParseError> {
        let mut set = Self::default();
        for (i, r) in records.into_iter().enumerate() {
            set.push(r, i + 1, 1, 1)?;
        }
        Ok(set)
    }

    /// Scores every trial of `trials` with `score`, in order.
    pub fn scored_copy<F>(trials: &TrialList, mut score: F) -> Result<Self, ParseError>
    where
        F: FnMut(&Trial) -> T,
    {
        Self::from_records(
            trials
                .iter()
                .map(|t| ScoreRecord {
                    trial: t.clone(),
                    score: score(t),
                })
                .collect(),
        )
    }

    fn push(
        &mut self,
        record: ScoreRecord<T>,
        line: usize,
        key_column: usize,
        score_column: usize,
    ) -> Result<(), ParseError> {
        if !record.score.is_finite() {
            return Err(ParseError::new(
                line,
                score_column,
                ParseErrorKind::NonFinite(fmt_shortest(record.score)),
            ));
        }
        let key = (
            record.trial.speaker_model.clone(),
            record.trial.test_utterance.clone(),
        );
        if let Some(&first) = self.index.get(&key) {
            return Err(ParseError::new(
                line,
                key_column,
                ParseErrorKind::DuplicateTrial {
                    speaker_model: key.0,
                    test_utterance: key.1,
                    first_line: first + 1,
                },
            ));
        }
        self.index.insert(key, self.records.len());
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[ScoreRecord<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ScoreRecord<T>> {
        self.records.iter()
    }

    pub fn get(&self, speaker_model: &str, test_utterance: &str) -> Option<&ScoreRecord<T>> {
        self.index
            .get(&(speaker_model.to_owned(), test_utterance.to_owned()))
            .map(|&i| &self.records[i])
    }

    /// Applies `f` to every score; fails if any result is non-finite.
    pub fn map_scores<F: FnMut(T) -> T>(&self, mut f: F) -> Result<Self, ParseError> {
        Self::from_records(
            self.records
                .iter()
                .map(|r| ScoreRecord {
                    trial: r.trial.clone(),
                    score: f(r.score),
                })
                .collect(),
        )
    }

    /// The trials of this set, in order.
    pub fn trial_list(&self) -> TrialList {
        TrialList::from_trials(self.records.iter().map(|r| r.trial.clone()).collect())
            .expect("score set keys are unique")
    }

    pub fn write_to<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        for r in &self.records {
            writeln!(sink, "{} {}", r.trial, fmt_shortest(r.score))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("utf8")
    }
}

impl<'a, T> IntoIterator for &'a ScoreSet<T> {
    type Item = &'a ScoreRecord<T>;
    type IntoIter = std::slice::Iter<'a, ScoreRecord<T>>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

/// Parses a five-column score file.
pub fn parse_scores<T: Scalar>(text: &str) -> Result<ScoreSet<T>, ParseError> {
    let mut set = ScoreSet::default();
    for line in content_lines(text) {
        if line.tokens.len() != 5 {
            return Err(field_count_error(&line, 5));
        }
        let trial = trial_from_line(&line)?;
        let tok = line.tokens[4];
        let score: T = tok.text.parse().map_err(|_| {
            ParseError::new(
                line.number,
                tok.column,
                ParseErrorKind::InvalidNumber(tok.text.to_owned()),
            )
        })?;
        if !score.is_finite() {
            return Err(ParseError::new(
                line.number,
                tok.column,
                ParseErrorKind::NonFinite(tok.text.to_owned()),
            ));
        }
        set.push(ScoreRecord { trial, score }, line.number, 1, tok.column)?;
    }
    Ok(set)
}

pub fn read_scores<T: Scalar, R: Read>(mut reader: R) -> Result<ScoreSet<T>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    Ok(parse_scores(&text)?)
}

/// A scored trial whose metadata disagrees with the protocol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub expected: Trial,
    pub found: Trial,
}

/// Set-level differences between a score file and a protocol.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    /// Protocol trials without a score, in protocol order.
    pub missing: Vec<Trial>,
    /// Scored trials absent from the protocol, in score-file order.
    pub extra: Vec<Trial>,
    /// Same key, different attack or trial type.
    pub mismatched: Vec<Mismatch>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty() && self.mismatched.is_empty()
    }

    pub fn problem_count(&self) -> usize {
        self.missing.len() + self.extra.len() + self.mismatched.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return writeln!(f, "OK: scores match the protocol");
        }
        writeln!(
            f,
            "{} missing, {} extra, {} mismatched",
            self.missing.len(),
            self.extra.len(),
            self.mismatched.len()
        )?;
        for t in &self.missing {
            writeln!(f, "missing: {t}")?;
        }
        for t in &self.extra {
            writeln!(f, "extra: {t}")?;
        }
        for m in &self.mismatched {
            writeln!(f, "mismatch: expected {} found {}", m.expected, m.found)?;
        }
        Ok(())
    }
}

/// Compares a score set against a protocol; row order is irrelevant.
pub fn validate_against_protocol<T: Scalar>(
    scores: &ScoreSet<T>,
    protocol: &TrialList,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    for expected in protocol {
        match scores.get(&expected.speaker_model, &expected.test_utterance) {
            None => report.missing.push(expected.clone()),
            Some(r) if r.trial != *expected => report.mismatched.push(Mismatch {
                expected: expected.clone(),
                found: r.trial.clone(),
            }),
            Some(_) => {}
        }
    }
    report.extra = scores
        .iter()
        .filter(|r| {
            protocol
                .get(&r.trial.speaker_model, &r.trial.test_utterance)
                .is_none()
        })
        .map(|r| r.trial.clone())
        .collect();
    report
}

/// The six EERs of a submission, as fractions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ResultsSummary {
    pub dev_sasv_eer: f64,
    pub dev_sv_eer: f64,
    pub dev_spf_eer: f64,
    pub eval_sasv_eer: f64,
    pub eval_sv_eer: f64,
    pub eval_spf_eer: f64,
}

impl ResultsSummary {
    fn values(&self) -> [f64; 6] {
        [
            self.dev_sasv_eer,
            self.dev_sv_eer,
            self.dev_spf_eer,
            self.eval_sasv_eer,
            self.eval_sv_eer,
            self.eval_spf_eer,
        ]
    }

    pub fn check(&self) -> Result<()> {
        if self.values().iter().all(|v| (0.0..=1.0).contains(v)) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "results must be rates in [0, 1]: {:?}",
                self.values()
            )))
        }
    }

    /// Single line of six percentages with two decimals.
    pub fn to_line(&self) -> String {
        let cells: Vec<String> = self.values().iter().map(|v| format_percent(*v)).collect();
        format!("{}\n", cells.join(" "))
    }
}

/// Renders a rate as a percentage with exactly two decimals.
pub fn format_percent(rate: f64) -> String {
    format!("{:.2}", rate * 100.0)
}

pub fn write_results<W: Write>(summary: &ResultsSummary, mut sink: W) -> Result<()> {
    summary.check()?;
    sink.write_all(summary.to_line().as_bytes())?;
    Ok(())
}

/// Reads a results line back into fractions.
pub fn parse_results(text: &str) -> Result<ResultsSummary, ParseError> {
    let mut lines = content_lines(text);
    let Some(line) = lines.next() else {
        return Err(ParseError::new(
            1,
            1,
            ParseErrorKind::FieldCount {
                expected: 6,
                found: 0,
            },
        ));
    };
    if line.tokens.len() != 6 {
        return Err(field_count_error(&line, 6));
    }
    let mut v = [0.0; 6];
    for (slot, tok) in v.iter_mut().zip(&line.tokens) {
        let pct: f64 = tok.text.parse().map_err(|_| {
            ParseError::new(
                line.number,
                tok.column,
                ParseErrorKind::InvalidNumber(tok.text.into()),
            )
        })?;
        *slot = pct / 100.0;
    }
    if let Some(extra) = lines.next() {
        return Err(field_count_error(&extra, 0));
    }
    Ok(ResultsSummary {
        dev_sasv_eer: v[0],
        dev_sv_eer: v[1],
        dev_spf_eer: v[2],
        eval_sasv_eer: v[3],
        eval_sv_eer: v[4],
        eval_spf_eer: v[5],
    })
}
