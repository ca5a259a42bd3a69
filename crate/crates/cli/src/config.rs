//! Settings come from a command-line flag, else a flat `key=value` config
//! file, else a built-in default.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sasv_core::fusion::ClassRatios;

use crate::files::Failure;

pub trait Setting: Sized {
    fn parse_setting(text: &str) -> Result<Self, String>;
    fn show(&self) -> String;
}

/// Clap value parser shared with the config file reader.
pub fn setting<T: Setting>(text: &str) -> Result<T, String> {
    T::parse_setting(text)
}

macro_rules! from_str_setting {
    ($($t:ty),*) => {$(
        impl Setting for $t {
            fn parse_setting(text: &str) -> Result<Self, String> {
                text.parse().map_err(|e| format!("invalid value {text:?}: {e}"))
            }
            fn show(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

from_str_setting!(u32, u64, usize, f64, bool);

impl Setting for PathBuf {
    fn parse_setting(text: &str) -> Result<Self, String> {
        if text.is_empty() {
            return Err("empty path".into());
        }
        Ok(PathBuf::from(text))
    }
    fn show(&self) -> String {
        self.display().to_string()
    }
}

/// Hidden layer widths, comma separated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hidden(pub Vec<usize>);

impl Setting for Hidden {
    fn parse_setting(text: &str) -> Result<Self, String> {
        text.split(',')
            .map(|w| match w.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(format!("invalid layer width {w:?}")),
            })
            .collect::<Result<_, _>>()
            .map(Hidden)
    }
    fn show(&self) -> String {
        self.0
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// `target:nontarget:spoof`, e.g. `1:1:2`.
impl Setting for ClassRatios {
    fn parse_setting(text: &str) -> Result<Self, String> {
        let parts: Vec<&str> = text.split(':').collect();
        let [t, n, s] = parts[..] else {
            return Err(format!("expected target:nontarget:spoof, got {text:?}"));
        };
        let num = |v: &str| {
            v.trim()
                .parse::<u32>()
                .map_err(|e| format!("invalid ratio {v:?}: {e}"))
        };
        Ok(ClassRatios {
            target: num(t)?,
            nontarget: num(n)?,
            spoof: num(s)?,
        })
    }
    fn show(&self) -> String {
        format!("{}:{}:{}", self.target, self.nontarget, self.spoof)
    }
}

/// Early-stopping patience in epochs, or `off`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Patience(pub Option<usize>);

impl Setting for Patience {
    fn parse_setting(text: &str) -> Result<Self, String> {
        match text {
            "off" => Ok(Patience(None)),
            _ => match text.parse::<usize>() {
                Ok(n) if n > 0 => Ok(Patience(Some(n))),
                _ => Err(format!(
                    "expected a positive epoch count or \"off\", got {text:?}"
                )),
            },
        }
    }
    fn show(&self) -> String {
        self.0.map_or("off".into(), |n| n.to_string())
    }
}

/// Team name used in output file names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Team(pub String);

impl Setting for Team {
    fn parse_setting(text: &str) -> Result<Self, String> {
        let ok = !text.is_empty()
            && text
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
        if ok && text != "." && text != ".." {
            Ok(Team(text.to_owned()))
        } else {
            Err(format!(
                "team name {text:?} must be letters, digits, '-', '_' or '.'"
            ))
        }
    }
    fn show(&self) -> String {
        self.0.clone()
    }
}

macro_rules! keyword_setting {
    ($(#[$meta:meta])* $name:ident { $($variant:ident = $word:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $word),+ }
            }
        }

        impl Setting for $name {
            fn parse_setting(text: &str) -> Result<Self, String> {
                match text {
                    $($word => Ok($name::$variant),)+
                    _ => Err(format!("expected one of {}, got {text:?}", [$($word),+].join(", "))),
                }
            }
            fn show(&self) -> String {
                self.name().to_owned()
            }
        }
    };
}

keyword_setting!(Split { Dev = "dev", Eval = "eval" });
keyword_setting!(Normalization { None = "none", MinMax = "minmax" });
keyword_setting!(Sampling { Balanced = "balanced", Exhaustive = "exhaustive" });
keyword_setting!(FixtureKind { Scores = "scores", Embeddings = "embeddings" });

type Entries = BTreeMap<String, (usize, String)>;

fn parse_config(text: &str) -> Result<Entries, String> {
    let mut entries = Entries::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected key=value", i + 1));
        };
        let key = key.trim().replace('-', "_");
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        if let Some((first, _)) = entries.get(&key) {
            return Err(format!(
                "line {}: key {key} already set on line {first}",
                i + 1
            ));
        }
        entries.insert(key, (i + 1, value.trim().to_owned()));
    }
    Ok(entries)
}

/// Resolves settings one key at a time and records the result.
pub struct Resolver {
    source: Option<PathBuf>,
    entries: Entries,
    resolved: Vec<String>,
}

impl Resolver {
    pub fn new(config: Option<&Path>) -> Result<Self, Failure> {
        let entries = match config {
            None => Entries::new(),
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
                parse_config(&text)
                    .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?
            }
        };
        Ok(Self {
            source: config.map(Path::to_path_buf),
            entries,
            resolved: Vec::new(),
        })
    }

    fn file_value<T: Setting>(&mut self, key: &str) -> Result<Option<T>, Failure> {
        let Some((line, text)) = self.entries.remove(key) else {
            return Ok(None);
        };
        let source = self.source.as_deref().unwrap_or(Path::new("config"));
        T::parse_setting(&text)
            .map(Some)
            .map_err(|e| Failure::input(format!("{}: line {line}: {key}: {e}", source.display())))
    }

    pub fn value<T: Setting>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, Failure> {
        let file = self.file_value(key)?;
        let value = flag.or(file).unwrap_or(default);
        self.resolved.push(format!("{key}={}", value.show()));
        Ok(value)
    }

    pub fn optional<T: Setting>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> Result<Option<T>, Failure> {
        let file = self.file_value(key)?;
        let value = flag.or(file);
        self.resolved.push(match &value {
            Some(v) => format!("{key}={}", v.show()),
            None => format!("# {key} unset"),
        });
        Ok(value)
    }

    pub fn required<T: Setting>(&mut self, key: &str, flag: Option<T>) -> Result<T, Failure> {
        self.optional(key, flag)?.ok_or_else(|| {
            Failure::input(format!(
                "missing setting {key}: pass --{} or set it in --config",
                key.replace('_', "-")
            ))
        })
    }

    /// Rejects config keys no setting consumed and returns the resolved
    /// `key=value` lines.
    pub fn finish(self) -> Result<Vec<String>, Failure> {
        if let Some((key, (line, _))) = self.entries.iter().next() {
            let source = self.source.as_deref().unwrap_or(Path::new("config"));
            return Err(Failure::input(format!(
                "{}: line {line}: unknown key {key}",
                source.display()
            )));
        }
        Ok(self.resolved)
    }

    /// Like [`Resolver::finish`], printing the configuration to stdout.
    pub fn finish_and_print(self) -> Result<(), Failure> {
        println!("# resolved configuration");
        for line in self.finish()? {
            println!("{line}");
        }
        Ok(())
    }
}
