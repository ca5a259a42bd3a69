use std::fs::{self, File};
use std::path::{Path, PathBuf};

use clap::Args;
use sasv_core::Error;

use crate::config::{setting, Resolver, Split, Team};

/// A failed run: the message for stderr and the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    /// Exit 1: the inputs were read but are semantically unacceptable.
    pub fn semantic(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    /// Exit 2: something could not be read, written or parsed.
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn from_core(context: impl std::fmt::Display, err: Error) -> Self {
        let code = match err {
            Error::Io(_) | Error::Parse(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: format!("{context}: {err}"),
        }
    }
}

pub type Outcome = Result<(), Failure>;

pub fn require_inputs(paths: &[&Path]) -> Outcome {
    for path in paths {
        if !path.is_file() {
            return Err(Failure::input(format!(
                "{}: input file not found",
                path.display()
            )));
        }
    }
    Ok(())
}

pub fn read_file<T>(
    path: &Path,
    parse: impl FnOnce(File) -> sasv_core::Result<T>,
) -> Result<T, Failure> {
    let file = File::open(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    parse(file).map_err(|e| Failure::from_core(path.display(), e))
}

/// Writes `bytes` to `path`, refusing to overwrite any of `inputs`.
pub fn write_file(path: &Path, bytes: &[u8], inputs: &[&Path]) -> Outcome {
    if let Ok(target) = path.canonicalize() {
        if inputs
            .iter()
            .any(|p| p.canonicalize().is_ok_and(|p| p == target))
        {
            return Err(Failure::semantic(format!(
                "{}: refusing to overwrite an input file",
                path.display()
            )));
        }
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Where a command writes its score file.
#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output score file; overrides the team naming scheme.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Team name; output becomes scores_{split}_{team}.txt in --out-dir.
    #[arg(long, value_parser = setting::<Team>)]
    pub team: Option<Team>,
    /// Protocol split used in the output file name [default: dev].
    #[arg(long, value_parser = setting::<Split>)]
    pub split: Option<Split>,
    /// Directory for team-named outputs [default: .].
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn resolve_output(r: &mut Resolver, args: OutputArgs) -> Result<PathBuf, Failure> {
    let out = r.optional("out", args.out)?;
    let team = r.optional("team", args.team)?;
    let split = r.value("split", args.split, Split::Dev)?;
    let out_dir = r.value("out_dir", args.out_dir, PathBuf::from("."))?;
    match (out, team) {
        (Some(out), _) => Ok(out),
        (None, Some(team)) => Ok(out_dir.join(format!("scores_{}_{}.txt", split.name(), team.0))),
        (None, None) => Err(Failure::input("no output file: pass --out or --team")),
    }
}
