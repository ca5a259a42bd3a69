use std::path::{Path, PathBuf};

use clap::Args;
use sasv_core::metrics::{evaluate, EerReport, Metric};
use sasv_core::protocol::read_protocol;
use sasv_core::score_io::{format_percent, read_scores, validate_against_protocol, write_results};
use sasv_core::ResultsSummary;

use crate::config::{setting, Resolver, Team};
use crate::files::{read_file, require_inputs, write_file, Failure, Outcome};

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Trial protocol file.
    #[arg(long)]
    protocol: Option<PathBuf>,
    /// Score file to check.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Flat key=value file supplying settings not given as flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run_validate(args: ValidateArgs) -> Outcome {
    let mut r = Resolver::new(args.config.as_deref())?;
    let protocol: PathBuf = r.required("protocol", args.protocol)?;
    let scores: PathBuf = r.required("scores", args.scores)?;
    r.finish()?;
    require_inputs(&[&protocol, &scores])?;

    let trials = read_file(&protocol, read_protocol)?;
    let scored = read_file(&scores, read_scores::<f64, _>)?;
    let report = validate_against_protocol(&scored, &trials);
    print!("{report}");
    if report.is_empty() {
        Ok(())
    } else {
        Err(Failure::semantic(format!(
            "{}: {} problems",
            scores.display(),
            report.problem_count()
        )))
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Trial protocol (the development protocol when eval inputs are given).
    #[arg(long)]
    protocol: Option<PathBuf>,
    /// Score file for --protocol.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Evaluation trial protocol.
    #[arg(long)]
    eval_protocol: Option<PathBuf>,
    /// Score file for --eval-protocol.
    #[arg(long)]
    eval_scores: Option<PathBuf>,
    /// Also print the SPF-EER of each attack type.
    #[arg(long)]
    per_attack: bool,
    /// Team name; with dev and eval inputs writes results_{team}.csv.
    #[arg(long, value_parser = setting::<Team>)]
    team: Option<Team>,
    /// Directory for the results file [default: .].
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Flat key=value file supplying settings not given as flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn score_split(protocol: &Path, scores: &Path) -> Result<EerReport<f64>, Failure> {
    let trials = read_file(protocol, read_protocol)?;
    let scored = read_file(scores, read_scores::<f64, _>)?;
    evaluate(&scored, &trials).map_err(|e| Failure::from_core(scores.display(), e))
}

fn print_report(report: &EerReport<f64>, per_attack: bool) {
    for metric in Metric::ALL {
        match report.get(metric) {
            Some(r) => println!("{}: {}%", metric.label(), format_percent(r.eer)),
            None => println!("{}: n/a", metric.label()),
        }
    }
    if per_attack {
        println!("per-attack SPF-EER:");
        let width = report.per_attack.keys().map(String::len).max().unwrap_or(0);
        for (attack, r) in &report.per_attack {
            println!("  {attack:<width$}  {}%", format_percent(r.eer));
        }
    }
}

fn summarize(dev: &EerReport<f64>, eval: &EerReport<f64>) -> Result<ResultsSummary, Failure> {
    let rate = |split: &str, report: &EerReport<f64>, metric: Metric| {
        report.get(metric).map(|r| r.eer).ok_or_else(|| {
            Failure::semantic(format!(
                "{split} {} is undefined; cannot write results",
                metric.label()
            ))
        })
    };
    Ok(ResultsSummary {
        dev_sasv_eer: rate("dev", dev, Metric::Sasv)?,
        dev_sv_eer: rate("dev", dev, Metric::Sv)?,
        dev_spf_eer: rate("dev", dev, Metric::Spf)?,
        eval_sasv_eer: rate("eval", eval, Metric::Sasv)?,
        eval_sv_eer: rate("eval", eval, Metric::Sv)?,
        eval_spf_eer: rate("eval", eval, Metric::Spf)?,
    })
}

pub fn run_evaluate(args: EvaluateArgs) -> Outcome {
    let mut r = Resolver::new(args.config.as_deref())?;
    let protocol: PathBuf = r.required("protocol", args.protocol)?;
    let scores: PathBuf = r.required("scores", args.scores)?;
    let eval_protocol: Option<PathBuf> = r.optional("eval_protocol", args.eval_protocol)?;
    let eval_scores: Option<PathBuf> = r.optional("eval_scores", args.eval_scores)?;
    let per_attack = r.value("per_attack", args.per_attack.then_some(true), false)?;
    let team = r.optional("team", args.team)?;
    let out_dir = r.value("out_dir", args.out_dir, PathBuf::from("."))?;
    r.finish()?;

    let eval = match (eval_protocol, eval_scores) {
        (Some(p), Some(s)) => Some((p, s)),
        (None, None) => None,
        _ => {
            return Err(Failure::input(
                "--eval-protocol and --eval-scores must be given together",
            ))
        }
    };
    if team.is_some() && eval.is_none() {
        return Err(Failure::input(
            "a results file needs both dev and eval inputs",
        ));
    }
    let mut inputs = vec![protocol.as_path(), scores.as_path()];
    if let Some((p, s)) = &eval {
        inputs.extend([p.as_path(), s.as_path()]);
    }
    require_inputs(&inputs)?;

    let dev = score_split(&protocol, &scores)?;
    let Some((eval_protocol, eval_scores)) = &eval else {
        print_report(&dev, per_attack);
        return Ok(());
    };
    let eval = score_split(eval_protocol, eval_scores)?;
    println!("[dev]");
    print_report(&dev, per_attack);
    println!("[eval]");
    print_report(&eval, per_attack);

    if let Some(team) = team {
        let summary = summarize(&dev, &eval)?;
        let mut line = Vec::new();
        write_results(&summary, &mut line).map_err(|e| Failure::from_core("results", e))?;
        let path = out_dir.join(format!("results_{}.csv", team.0));
        write_file(&path, &line, &inputs)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
