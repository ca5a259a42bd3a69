use std::path::PathBuf;

use clap::Args;
use sasv_core::fusion::{score_sum, ScoreNormalizer};
use sasv_core::protocol::read_protocol;
use sasv_core::score_io::{read_scores, validate_against_protocol};

use crate::config::{setting, Normalization, Resolver};
use crate::files::{
    read_file, require_inputs, resolve_output, write_file, Failure, Outcome, OutputArgs,
};

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// ASV score file.
    #[arg(long)]
    asv: Option<PathBuf>,
    /// CM score file covering the same trials.
    #[arg(long)]
    cm: Option<PathBuf>,
    /// Per-source score normalization: none or minmax [default: none].
    #[arg(long, value_parser = setting::<Normalization>)]
    normalizer: Option<Normalization>,
    /// Scores the ASV min-max parameters are fitted on [default: --asv].
    #[arg(long)]
    asv_reference: Option<PathBuf>,
    /// Scores the CM min-max parameters are fitted on [default: --cm].
    #[arg(long)]
    cm_reference: Option<PathBuf>,
    /// Protocol the fused scores are checked against before writing.
    #[arg(long)]
    protocol: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
    /// Flat key=value file supplying settings not given as flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run_fuse(args: FuseArgs) -> Outcome {
    let mut r = Resolver::new(args.config.as_deref())?;
    let asv: PathBuf = r.required("asv", args.asv)?;
    let cm: PathBuf = r.required("cm", args.cm)?;
    let normalizer = r.value("normalizer", args.normalizer, Normalization::None)?;
    let asv_reference = r.optional("asv_reference", args.asv_reference)?;
    let cm_reference = r.optional("cm_reference", args.cm_reference)?;
    let protocol: Option<PathBuf> = r.optional("protocol", args.protocol)?;
    let out = resolve_output(&mut r, args.output)?;
    r.finish_and_print()?;

    if normalizer == Normalization::None && (asv_reference.is_some() || cm_reference.is_some()) {
        return Err(Failure::input(
            "reference score files only apply to the minmax normalizer",
        ));
    }
    let asv_reference = asv_reference.unwrap_or_else(|| asv.clone());
    let cm_reference = cm_reference.unwrap_or_else(|| cm.clone());
    let mut inputs = vec![
        asv.as_path(),
        cm.as_path(),
        asv_reference.as_path(),
        cm_reference.as_path(),
    ];
    inputs.extend(protocol.as_deref());
    require_inputs(&inputs)?;

    let asv_scores = read_file(&asv, read_scores::<f64, _>)?;
    let cm_scores = read_file(&cm, read_scores::<f64, _>)?;
    let norm = match normalizer {
        Normalization::None => ScoreNormalizer::None,
        Normalization::MinMax => {
            let a = read_file(&asv_reference, read_scores::<f64, _>)?;
            let c = read_file(&cm_reference, read_scores::<f64, _>)?;
            ScoreNormalizer::fit_min_max(&a, &c).map_err(|e| Failure::from_core("normalizer", e))?
        }
    };
    let fused =
        score_sum(&asv_scores, &cm_scores, &norm).map_err(|e| Failure::from_core("fusion", e))?;
    if let Some(path) = &protocol {
        let trials = read_file(path, read_protocol)?;
        let report = validate_against_protocol(&fused, &trials);
        if !report.is_empty() {
            print!("{report}");
            return Err(Failure::semantic(format!(
                "fused scores do not match {}",
                path.display()
            )));
        }
    }
    write_file(&out, fused.to_text().as_bytes(), &inputs)?;
    println!("wrote {} fused scores to {}", fused.len(), out.display());
    Ok(())
}
