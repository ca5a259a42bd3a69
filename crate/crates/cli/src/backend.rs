use std::path::PathBuf;

use clap::{Args, Subcommand};
use sasv_core::embedding::read_embeddings;
use sasv_core::fusion::{
    backend_score, build_training_trials, mlp_train_with_holdout, read_labels, ClassRatios,
    EmbeddingSources, MlpBackend, PairSampling, TrainingConfig,
};
use sasv_core::protocol::{read_enrollment_map, read_protocol, TrialType};
use sasv_core::TrialProtocol;

use crate::config::{setting, Hidden, Patience, Resolver, Sampling};
use crate::files::{
    read_file, require_inputs, resolve_output, write_file, Failure, Outcome, OutputArgs,
};

#[derive(Debug, Subcommand)]
pub enum BackendCommand {
    /// Train the back-end classifier on labelled embeddings.
    Train(TrainArgs),
    /// Score a trial protocol with a trained back-end.
    Score(ScoreArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training pool: one "utterance speaker attack_type" line per utterance.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Speaker embeddings of the pool.
    #[arg(long)]
    speaker_embeddings: Option<PathBuf>,
    /// CM embeddings of the pool.
    #[arg(long)]
    cm_embeddings: Option<PathBuf>,
    /// Enrollment map; without it pool utterances are paired one to one.
    #[arg(long)]
    enrollment: Option<PathBuf>,
    /// Hold-out pool, labelled like --labels, for loss tracking and early stopping.
    #[arg(long)]
    holdout_labels: Option<PathBuf>,
    /// Pair selection: balanced or exhaustive [default: balanced].
    #[arg(long, value_parser = setting::<Sampling>)]
    sampling: Option<Sampling>,
    /// target:nontarget:spoof pair ratio for balanced sampling [default: 1:1:2].
    #[arg(long, value_parser = setting::<ClassRatios>)]
    ratios: Option<ClassRatios>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Hidden layer widths, comma separated [default: 256,128,64].
    #[arg(long, value_parser = setting::<Hidden>)]
    hidden: Option<Hidden>,
    /// Epochs without hold-out improvement before stopping, or "off".
    #[arg(long, value_parser = setting::<Patience>)]
    patience: Option<Patience>,
    /// Where to write the trained model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Flat key=value file supplying settings not given as flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn sampling_of(kind: Sampling, ratios: ClassRatios) -> PairSampling {
    match kind {
        Sampling::Balanced => PairSampling::Balanced(ratios),
        Sampling::Exhaustive => PairSampling::Exhaustive,
    }
}

pub fn run_train(args: TrainArgs) -> Outcome {
    let defaults = TrainingConfig::default();
    let mut r = Resolver::new(args.config.as_deref())?;
    let labels: PathBuf = r.required("labels", args.labels)?;
    let speaker_path: PathBuf = r.required("speaker_embeddings", args.speaker_embeddings)?;
    let cm_path: PathBuf = r.required("cm_embeddings", args.cm_embeddings)?;
    let enrollment: Option<PathBuf> = r.optional("enrollment", args.enrollment)?;
    let holdout: Option<PathBuf> = r.optional("holdout_labels", args.holdout_labels)?;
    let sampling = r.value("sampling", args.sampling, Sampling::Balanced)?;
    let config = TrainingConfig {
        ratios: r.value("ratios", args.ratios, defaults.ratios)?,
        seed: r.value("seed", args.seed, defaults.seed)?,
        epochs: r.value("epochs", args.epochs, defaults.epochs)?,
        batch_size: r.value("batch_size", args.batch_size, defaults.batch_size)?,
        learning_rate: r.value("learning_rate", args.learning_rate, defaults.learning_rate)?,
        hidden: r
            .value("hidden", args.hidden, Hidden(defaults.hidden.clone()))?
            .0,
        patience: r
            .value("patience", args.patience, Patience(defaults.patience))?
            .0,
    };
    let model_path: PathBuf = r.required("model", args.model)?;
    r.finish_and_print()?;
    config
        .validate()
        .map_err(|e| Failure::input(e.to_string()))?;

    let mut inputs = vec![labels.as_path(), speaker_path.as_path(), cm_path.as_path()];
    inputs.extend(enrollment.as_deref());
    inputs.extend(holdout.as_deref());
    require_inputs(&inputs)?;

    let pool = read_file(&labels, read_labels)?;
    let speaker = read_file(&speaker_path, read_embeddings::<f64, _>)?;
    let cm = read_file(&cm_path, read_embeddings::<f64, _>)?;
    let map = enrollment
        .as_deref()
        .map(|p| read_file(p, read_enrollment_map))
        .transpose()?;
    let pairing = sampling_of(sampling, config.ratios);

    let trials = build_training_trials(&pool, map.as_ref(), pairing, config.seed);
    if !trials.speakers_without_positives.is_empty() {
        eprintln!(
            "warning: no target pairs for speakers {}",
            trials.speakers_without_positives.join(", ")
        );
    }
    println!(
        "training pairs: target={} nontarget={} spoof={}",
        trials.count(TrialType::Target),
        trials.count(TrialType::Nontarget),
        trials.count(TrialType::Spoof)
    );
    let holdout_trials = match &holdout {
        Some(path) => {
            let pool = read_file(path, read_labels)?;
            build_training_trials(&pool, None, pairing, config.seed).trials
        }
        None => Vec::new(),
    };

    let sources = EmbeddingSources::combined(&speaker, &cm);
    let trained = mlp_train_with_holdout(&trials.trials, &holdout_trials, &sources, &config)
        .map_err(|e| Failure::from_core("training", e))?;
    for h in &trained.history {
        match h.holdout_loss {
            Some(loss) => println!(
                "epoch {:>4}  train_loss {:.6}  holdout_loss {loss:.6}",
                h.epoch, h.train_loss
            ),
            None => println!("epoch {:>4}  train_loss {:.6}", h.epoch, h.train_loss),
        }
    }
    write_file(&model_path, trained.model.to_text().as_bytes(), &inputs)?;
    println!("wrote model to {}", model_path.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Trial protocol to score.
    #[arg(long)]
    protocol: Option<PathBuf>,
    /// Enrollment map of the protocol's speaker models.
    #[arg(long)]
    enrollment: Option<PathBuf>,
    /// Speaker embeddings of the test utterances.
    #[arg(long)]
    speaker_embeddings: Option<PathBuf>,
    /// Speaker embeddings of the enrollment utterances [default: --speaker-embeddings].
    #[arg(long)]
    enrollment_embeddings: Option<PathBuf>,
    /// CM embeddings of the test utterances.
    #[arg(long)]
    cm_embeddings: Option<PathBuf>,
    /// Trained model file.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
    /// Flat key=value file supplying settings not given as flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run_score(args: ScoreArgs) -> Outcome {
    let mut r = Resolver::new(args.config.as_deref())?;
    let protocol_path: PathBuf = r.required("protocol", args.protocol)?;
    let enrollment_path: PathBuf = r.required("enrollment", args.enrollment)?;
    let speaker_path: PathBuf = r.required("speaker_embeddings", args.speaker_embeddings)?;
    let enrol_emb: Option<PathBuf> =
        r.optional("enrollment_embeddings", args.enrollment_embeddings)?;
    let cm_path: PathBuf = r.required("cm_embeddings", args.cm_embeddings)?;
    let model_path: PathBuf = r.required("model", args.model)?;
    let out = resolve_output(&mut r, args.output)?;
    r.finish_and_print()?;

    let mut inputs = vec![
        protocol_path.as_path(),
        enrollment_path.as_path(),
        speaker_path.as_path(),
        cm_path.as_path(),
        model_path.as_path(),
    ];
    inputs.extend(enrol_emb.as_deref());
    require_inputs(&inputs)?;

    let trials = read_file(&protocol_path, read_protocol)?;
    let map = read_file(&enrollment_path, read_enrollment_map)?;
    let protocol = TrialProtocol::new(trials, map)
        .map_err(|e| Failure::from_core(protocol_path.display(), e))?;
    let speaker = read_file(&speaker_path, read_embeddings::<f64, _>)?;
    let enrol_store = enrol_emb
        .as_deref()
        .map(|p| read_file(p, read_embeddings::<f64, _>))
        .transpose()?;
    let cm = read_file(&cm_path, read_embeddings::<f64, _>)?;
    let model = read_file(&model_path, MlpBackend::<f64>::read_from)?;

    let sources = EmbeddingSources {
        enrollment: enrol_store.as_ref().unwrap_or(&speaker),
        test: &speaker,
        cm: &cm,
    };
    let scores =
        backend_score(&model, &protocol, &sources).map_err(|e| Failure::from_core("scoring", e))?;
    write_file(&out, scores.to_text().as_bytes(), &inputs)?;
    println!(
        "wrote {} back-end scores to {}",
        scores.len(),
        out.display()
    );
    Ok(())
}
