//! ASV trial protocols and enrollment maps.
//!
//! A protocol line is `speaker_model test_utterance attack_type trial_type`.
//! An enrollment map line is a speaker model followed by one or more
//! enrollment utterance IDs. Fields are separated by any run of ASCII
//! whitespace, blank lines and `#` comment lines are skipped.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use indexmap::IndexMap;

use crate::error::{Error, ParseError, ParseErrorKind, Result};
use crate::text::{content_lines, Line};

/// Attack-type tokens that denote genuine speech.
pub const BONAFIDE_TOKENS: &[&str] = &["bonafide"];

/// Canonical bona fide token used when writing files.
pub const BONAFIDE: &str = "bonafide";

pub fn is_bonafide(attack_type: &str) -> bool {
    BONAFIDE_TOKENS.contains(&attack_type)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrialType {
    Target,
    Nontarget,
    Spoof,
}

impl TrialType {
    pub const ALL: [TrialType; 3] = [TrialType::Target, TrialType::Nontarget, TrialType::Spoof];

    pub fn as_str(self) -> &'static str {
        match self {
            TrialType::Target => "target",
            TrialType::Nontarget => "nontarget",
            TrialType::Spoof => "spoof",
        }
    }

    /// Target and nontarget trials use bona fide test speech.
    pub fn is_bonafide(self) -> bool {
        !matches!(self, TrialType::Spoof)
    }
}

impl fmt::Display for TrialType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrialType {
    type Err = ParseErrorKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "target" => Ok(TrialType::Target),
            "nontarget" => Ok(TrialType::Nontarget),
            "spoof" => Ok(TrialType::Spoof),
            other => Err(ParseErrorKind::UnknownTrialType(other.to_owned())),
        }
    }
}

/// One evaluation unit of an ASV protocol.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Trial {
    pub speaker_model: String,
    pub test_utterance: String,
    pub attack_type: String,
    pub trial_type: TrialType,
}

impl Trial {
    /// Builds a trial, enforcing that bona fide attack types go with
    /// target/nontarget trials and anything else with spoof trials.
    pub fn new(
        speaker_model: impl Into<String>,
        test_utterance: impl Into<String>,
        attack_type: impl Into<String>,
        trial_type: TrialType,
    ) -> Result<Self, ParseErrorKind> {
        let attack_type = attack_type.into();
        if is_bonafide(&attack_type) != trial_type.is_bonafide() {
            return Err(ParseErrorKind::BonafideSpoofInconsistency {
                attack_type,
                trial_type: trial_type.to_string(),
            });
        }
        Ok(Self {
            speaker_model: speaker_model.into(),
            test_utterance: test_utterance.into(),
            attack_type,
            trial_type,
        })
    }

    pub fn key(&self) -> (&str, &str) {
        (&self.speaker_model, &self.test_utterance)
    }
}

impl fmt::Display for Trial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.speaker_model, self.test_utterance, self.attack_type, self.trial_type
        )
    }
}

/// Parses the leading four trial fields of `line`. The caller has already
/// checked the field count.
pub(crate) fn trial_from_line(line: &Line<'_>) -> Result<Trial, ParseError> {
    let t = &line.tokens;
    let trial_type: TrialType = t[3]
        .text
        .parse()
        .map_err(|k| ParseError::new(line.number, t[3].column, k))?;
    Trial::new(t[0].text, t[1].text, t[2].text, trial_type)
        .map_err(|k| ParseError::new(line.number, t[2].column, k))
}

pub(crate) fn field_count_error(line: &Line<'_>, expected: usize) -> ParseError {
    let found = line.tokens.len();
    let column = if found > expected {
        line.tokens[expected].column
    } else {
        line.end_column()
    };
    ParseError::new(
        line.number,
        column,
        ParseErrorKind::FieldCount { expected, found },
    )
}

/// Ordered trial list with unique `(speaker_model, test_utterance)` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialList {
    trials: Vec<Trial>,
    index: HashMap<(String, String), usize>,
}

impl TrialList {
    /// Builds a list from trials, rejecting duplicate pairs. The error
    /// carries the 1-based position of the duplicate as its line.
    pub fn from_trials(trials: Vec<Trial>) -> Result<Self, ParseError> {
        let mut list = TrialList::default();
        for (i, trial) in trials.into_iter().enumerate() {
            list.push(trial, i + 1, 1)?;
        }
        Ok(list)
    }

    fn push(&mut self, trial: Trial, line: usize, column: usize) -> Result<(), ParseError> {
        let key = (trial.speaker_model.clone(), trial.test_utterance.clone());
        if let Some(&first) = self.index.get(&key) {
            return Err(ParseError::new(
                line,
                column,
                ParseErrorKind::DuplicateTrial {
                    speaker_model: key.0,
                    test_utterance: key.1,
                    first_line: first + 1,
                },
            ));
        }
        self.index.insert(key, self.trials.len());
        self.trials.push(trial);
        Ok(())
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Trial> {
        self.trials.iter()
    }

    pub fn get(&self, speaker_model: &str, test_utterance: &str) -> Option<&Trial> {
        self.index
            .get(&(speaker_model.to_owned(), test_utterance.to_owned()))
            .map(|&i| &self.trials[i])
    }

    /// Trials whose type is in `types`, in protocol order.
    pub fn subset(&self, types: &[TrialType]) -> Vec<&Trial> {
        subset(&self.trials, types)
    }

    pub fn count(&self, trial_type: TrialType) -> usize {
        self.trials
            .iter()
            .filter(|t| t.trial_type == trial_type)
            .count()
    }

    pub fn write_to<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        for trial in &self.trials {
            writeln!(sink, "{trial}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("utf8")
    }
}

impl<'a> IntoIterator for &'a TrialList {
    type Item = &'a Trial;
    type IntoIter = std::slice::Iter<'a, Trial>;

    fn into_iter(self) -> Self::IntoIter {
        self.trials.iter()
    }
}

/// Trials whose type is in `types`, preserving order.
pub fn subset<'a>(trials: &'a [Trial], types: &[TrialType]) -> Vec<&'a Trial> {
    trials
        .iter()
        .filter(|t| types.contains(&t.trial_type))
        .collect()
}

/// Parses a four-column protocol.
pub fn parse_protocol(text: &str) -> Result<TrialList, ParseError> {
    let mut list = TrialList::default();
    let mut last_line = 0;
    for line in content_lines(text) {
        last_line = line.number;
        if line.tokens.len() != 4 {
            return Err(field_count_error(&line, 4));
        }
        let trial = trial_from_line(&line)?;
        list.push(trial, line.number, 1)?;
    }
    if list.is_empty() {
        return Err(ParseError::new(
            last_line.max(1),
            1,
            ParseErrorKind::NoTrials,
        ));
    }
    Ok(list)
}

pub fn read_protocol<R: Read>(mut reader: R) -> Result<TrialList> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    Ok(parse_protocol(&text)?)
}

/// Speaker model to ordered enrollment utterance IDs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EnrollmentMap {
    entries: IndexMap<String, Vec<String>>,
}

impl EnrollmentMap {
    /// Adds a speaker; rejects empty or duplicate-containing lists and
    /// repeated speaker models.
    pub fn insert(
        &mut self,
        speaker_model: impl Into<String>,
        utterances: Vec<String>,
    ) -> Result<(), ParseErrorKind> {
        let speaker_model = speaker_model.into();
        if utterances.is_empty() {
            return Err(ParseErrorKind::EmptyEnrollment(speaker_model));
        }
        if self.entries.contains_key(&speaker_model) {
            return Err(ParseErrorKind::DuplicateSpeaker {
                first_line: self.entries.get_index_of(&speaker_model).unwrap() + 1,
                speaker_model,
            });
        }
        for (i, u) in utterances.iter().enumerate() {
            if utterances[..i].contains(u) {
                return Err(ParseErrorKind::DuplicateUtterance(u.clone()));
            }
        }
        self.entries.insert(speaker_model, utterances);
        Ok(())
    }

    pub fn get(&self, speaker_model: &str) -> Option<&[String]> {
        self.entries.get(speaker_model).map(Vec::as_slice)
    }

    pub fn contains(&self, speaker_model: &str) -> bool {
        self.entries.contains_key(speaker_model)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn write_to<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        for (speaker, utts) in &self.entries {
            writeln!(sink, "{} {}", speaker, utts.join(" "))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("utf8")
    }
}

pub fn parse_enrollment_map(text: &str) -> Result<EnrollmentMap, ParseError> {
    let mut map = EnrollmentMap::default();
    let mut first_lines: HashMap<&str, usize> = HashMap::new();
    for line in content_lines(text) {
        let speaker = line.tokens[0];
        if let Some(&first_line) = first_lines.get(speaker.text) {
            return Err(ParseError::new(
                line.number,
                speaker.column,
                ParseErrorKind::DuplicateSpeaker {
                    speaker_model: speaker.text.to_owned(),
                    first_line,
                },
            ));
        }
        let utts = &line.tokens[1..];
        for (i, u) in utts.iter().enumerate() {
            if utts[..i].iter().any(|p| p.text == u.text) {
                return Err(ParseError::new(
                    line.number,
                    u.column,
                    ParseErrorKind::DuplicateUtterance(u.text.to_owned()),
                ));
            }
        }
        map.insert(
            speaker.text,
            utts.iter().map(|t| t.text.to_owned()).collect(),
        )
        .map_err(|k| ParseError::new(line.number, line.end_column(), k))?;
        first_lines.insert(speaker.text, line.number);
    }
    Ok(map)
}

pub fn read_enrollment_map<R: Read>(mut reader: R) -> Result<EnrollmentMap> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    Ok(parse_enrollment_map(&text)?)
}

/// A trial list together with the enrollment utterances of every speaker
/// model it references.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialProtocol {
    trials: TrialList,
    enrollment: EnrollmentMap,
}

impl TrialProtocol {
    /// Checks that every speaker model is enrolled and that the protocol
    /// has at least one target and one nontarget or spoof trial.
    pub fn new(trials: TrialList, enrollment: EnrollmentMap) -> Result<Self> {
        if let Some(t) = trials
            .iter()
            .find(|t| !enrollment.contains(&t.speaker_model))
        {
            return Err(Error::UnknownSpeakerModel(t.speaker_model.clone()));
        }
        if trials.count(TrialType::Target) == 0 {
            return Err(Error::NoTargetTrials);
        }
        if trials.count(TrialType::Nontarget) + trials.count(TrialType::Spoof) == 0 {
            return Err(Error::NoNegativeTrials);
        }
        Ok(Self { trials, enrollment })
    }

    pub fn trials(&self) -> &TrialList {
        &self.trials
    }

    pub fn enrollment(&self) -> &EnrollmentMap {
        &self.enrollment
    }

    pub fn subset(&self, types: &[TrialType]) -> Vec<&Trial> {
        self.trials.subset(types)
    }

    /// Enrollment utterances of a trial's speaker model.
    pub fn enrollment_of(&self, trial: &Trial) -> &[String] {
        self.enrollment
            .get(&trial.speaker_model)
            .expect("speaker model checked at construction")
    }
}
