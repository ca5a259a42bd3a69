use std::path::{Path, PathBuf};

use clap::Args;
use sasv_core::fusion::write_labels;
use sasv_core::synth::{synth_embeddings, synth_scores, SynthSpec};

use crate::config::{setting, FixtureKind, Resolver};
use crate::files::{write_file, Failure, Outcome};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Fixture type: scores or embeddings [default: embeddings].
    #[arg(long, value_parser = setting::<FixtureKind>)]
    kind: Option<FixtureKind>,
    /// Directory the fixture files are written to.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    n_target: Option<usize>,
    #[arg(long)]
    n_nontarget: Option<usize>,
    #[arg(long)]
    n_spoof: Option<usize>,
    /// Target/nontarget separation.
    #[arg(long)]
    dprime_sv: Option<f64>,
    /// Target/spoof separation.
    #[arg(long)]
    dprime_spf: Option<f64>,
    #[arg(long)]
    spk_dim: Option<usize>,
    #[arg(long)]
    cm_dim: Option<usize>,
    #[arg(long)]
    n_speakers: Option<usize>,
    #[arg(long)]
    n_attacks: Option<usize>,
    /// Bona fide training-pool utterances per speaker.
    #[arg(long)]
    train_bonafide_per_speaker: Option<usize>,
    /// Spoofed training-pool utterances per speaker.
    #[arg(long)]
    train_spoof_per_speaker: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Flat key=value file supplying settings not given as flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run_synth(args: SynthArgs) -> Outcome {
    let d = SynthSpec::default();
    let mut r = Resolver::new(args.config.as_deref())?;
    let kind = r.value("kind", args.kind, FixtureKind::Embeddings)?;
    let out_dir: PathBuf = r.required("out_dir", args.out_dir)?;
    let spec = SynthSpec {
        n_target: r.value("n_target", args.n_target, d.n_target)?,
        n_nontarget: r.value("n_nontarget", args.n_nontarget, d.n_nontarget)?,
        n_spoof: r.value("n_spoof", args.n_spoof, d.n_spoof)?,
        dprime_sv: r.value("dprime_sv", args.dprime_sv, d.dprime_sv)?,
        dprime_spf: r.value("dprime_spf", args.dprime_spf, d.dprime_spf)?,
        spk_dim: r.value("spk_dim", args.spk_dim, d.spk_dim)?,
        cm_dim: r.value("cm_dim", args.cm_dim, d.cm_dim)?,
        n_speakers: r.value("n_speakers", args.n_speakers, d.n_speakers)?,
        n_attacks: r.value("n_attacks", args.n_attacks, d.n_attacks)?,
        train_bonafide_per_speaker: r.value(
            "train_bonafide_per_speaker",
            args.train_bonafide_per_speaker,
            d.train_bonafide_per_speaker,
        )?,
        train_spoof_per_speaker: r.value(
            "train_spoof_per_speaker",
            args.train_spoof_per_speaker,
            d.train_spoof_per_speaker,
        )?,
        seed: r.value("seed", args.seed, d.seed)?,
    };
    r.finish_and_print()?;
    spec.validate().map_err(|e| Failure::input(e.to_string()))?;

    let files = match kind {
        FixtureKind::Scores => {
            let (protocol, scores) =
                synth_scores::<f64>(&spec).map_err(|e| Failure::from_core("synth", e))?;
            vec![
                ("protocol.txt", protocol.trials().to_text()),
                ("enrollment.txt", protocol.enrollment().to_text()),
                ("scores.txt", scores.to_text()),
            ]
        }
        FixtureKind::Embeddings => {
            let fx = synth_embeddings::<f64>(&spec).map_err(|e| Failure::from_core("synth", e))?;
            let asv = fx
                .asv_scores()
                .map_err(|e| Failure::from_core("synth", e))?;
            let cm = fx.cm_scores().map_err(|e| Failure::from_core("synth", e))?;
            vec![
                ("protocol.txt", fx.protocol.trials().to_text()),
                ("enrollment.txt", fx.protocol.enrollment().to_text()),
                ("speaker_embeddings.txt", fx.speaker.to_text()),
                ("cm_embeddings.txt", fx.cm.to_text()),
                ("train_labels.txt", write_labels(&fx.train_pool)),
                ("test_labels.txt", write_labels(&fx.test_labels)),
                ("asv_scores.txt", asv.to_text()),
                ("cm_scores.txt", cm.to_text()),
            ]
        }
    };
    for (name, text) in files {
        let path = out_dir.join(name);
        write_file(&path, text.as_bytes(), &[] as &[&Path])?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
