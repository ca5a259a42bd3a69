use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sasv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sasv"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run sasv")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// Percentage printed after `label: `.
fn percent(text: &str, label: &str) -> f64 {
    let prefix = format!("{label}: ");
    let line = text
        .lines()
        .find(|l| l.starts_with(&prefix))
        .unwrap_or_else(|| panic!("no {label} in {text}"));
    line[prefix.len()..].trim_end_matches('%').parse().unwrap()
}

fn score_fixture(dir: &Path, name: &str, extra: &[&str]) {
    let mut args = vec!["synth", "--kind", "scores", "--out-dir", name];
    args.extend_from_slice(extra);
    let o = sasv(dir, &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

fn embedding_fixture(dir: &Path) {
    let args = [
        "synth",
        "--out-dir",
        "emb",
        "--dprime-sv",
        "8",
        "--dprime-spf",
        "8",
        "--n-target",
        "300",
        "--n-nontarget",
        "300",
        "--n-spoof",
        "300",
        "--train-bonafide-per-speaker",
        "20",
        "--train-spoof-per-speaker",
        "20",
        "--seed",
        "11",
    ];
    let o = sasv(dir, &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn validate_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    score_fixture(
        dir,
        "fx",
        &["--n-target", "20", "--n-nontarget", "20", "--n-spoof", "20"],
    );

    let ok = sasv(
        dir,
        &[
            "validate",
            "--protocol",
            "fx/protocol.txt",
            "--scores",
            "fx/scores.txt",
        ],
    );
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));

    let scores = fs::read_to_string(dir.join("fx/scores.txt")).unwrap();
    let mut lines: Vec<&str> = scores.lines().collect();
    let dropped = lines.remove(5);
    fs::write(dir.join("short.txt"), lines.join("\n") + "\n").unwrap();
    let missing = sasv(
        dir,
        &[
            "validate",
            "--protocol",
            "fx/protocol.txt",
            "--scores",
            "short.txt",
        ],
    );
    assert_eq!(code(&missing), 1);
    let trial: Vec<&str> = dropped.split(' ').take(4).collect();
    assert!(
        stdout(&missing).contains(&format!("missing: {}", trial.join(" "))),
        "{}",
        stdout(&missing)
    );

    fs::write(
        dir.join("bad.txt"),
        format!("{}\n{}\nLA_0001 x bonafide target\n", lines[0], lines[1]),
    )
    .unwrap();
    let bad = sasv(
        dir,
        &[
            "validate",
            "--protocol",
            "fx/protocol.txt",
            "--scores",
            "bad.txt",
        ],
    );
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("line 3"), "{}", stderr(&bad));
}

#[test]
fn evaluate_gaussian_and_separable_fixtures() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let n = [
        "--n-target",
        "50000",
        "--n-nontarget",
        "50000",
        "--n-spoof",
        "50000",
    ];
    score_fixture(
        dir,
        "d2",
        &[
            &n[..],
            &["--dprime-sv", "2", "--dprime-spf", "2", "--seed", "8"],
        ]
        .concat(),
    );
    let o = sasv(
        dir,
        &[
            "evaluate",
            "--protocol",
            "d2/protocol.txt",
            "--scores",
            "d2/scores.txt",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sasv_eer = percent(&stdout(&o), "SASV-EER");
    assert!((sasv_eer - 15.87).abs() <= 0.5, "{sasv_eer}");

    score_fixture(dir, "sep", &["--dprime-sv", "20", "--dprime-spf", "20"]);
    let o = sasv(
        dir,
        &[
            "evaluate",
            "--protocol",
            "sep/protocol.txt",
            "--scores",
            "sep/scores.txt",
            "--per-attack",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("SASV-EER: 0.00%\n"), "{out}");
    assert!(out.contains("per-attack SPF-EER:\n  A01  0.00%"), "{out}");
}

#[test]
fn evaluate_missing_protocol_is_an_input_error() {
    let tmp = TempDir::new().unwrap();
    let o = sasv(
        tmp.path(),
        &[
            "evaluate",
            "--protocol",
            "nope.txt",
            "--scores",
            "nope_scores.txt",
        ],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nope.txt"));
}

#[test]
fn evaluate_writes_results_file() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    score_fixture(dir, "dev", &["--seed", "1"]);
    score_fixture(dir, "eval", &["--seed", "2"]);
    let o = sasv(
        dir,
        &[
            "evaluate",
            "--protocol",
            "dev/protocol.txt",
            "--scores",
            "dev/scores.txt",
            "--eval-protocol",
            "eval/protocol.txt",
            "--eval-scores",
            "eval/scores.txt",
            "--team",
            "demo",
            "--out-dir",
            "out",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let results = fs::read_to_string(dir.join("out/results_demo.csv")).unwrap();
    let cells: Vec<&str> = results.trim_end().split(' ').collect();
    assert_eq!(cells.len(), 6);
    let (dev, eval) = out.split_once("[eval]").unwrap();
    assert_eq!(format!("{:.2}", percent(dev, "SASV-EER")), cells[0]);
    assert_eq!(format!("{:.2}", percent(eval, "SPF-EER")), cells[5]);

    let no_eval = sasv(
        dir,
        &[
            "evaluate",
            "--protocol",
            "dev/protocol.txt",
            "--scores",
            "dev/scores.txt",
            "--team",
            "x",
        ],
    );
    assert_eq!(code(&no_eval), 2);
}

#[test]
fn fuse_with_zero_cm_reproduces_asv_eers() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    score_fixture(dir, "fx", &[]);
    let asv = fs::read_to_string(dir.join("fx/scores.txt")).unwrap();
    let zeros: String = asv
        .lines()
        .map(|l| format!("{} 0.0\n", l.rsplit_once(' ').unwrap().0))
        .collect();
    fs::write(dir.join("cm.txt"), zeros).unwrap();

    let o = sasv(
        dir,
        &[
            "fuse",
            "--asv",
            "fx/scores.txt",
            "--cm",
            "cm.txt",
            "--protocol",
            "fx/protocol.txt",
            "--team",
            "t",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("# resolved configuration\n"));
    assert!(stdout(&o).contains("normalizer=none\n"));

    let eval = |scores: &str| {
        stdout(&sasv(
            dir,
            &[
                "evaluate",
                "--protocol",
                "fx/protocol.txt",
                "--scores",
                scores,
            ],
        ))
    };
    assert_eq!(eval("fx/scores.txt"), eval("scores_dev_t.txt"));
}

#[test]
fn fuse_refuses_to_overwrite_inputs() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    score_fixture(dir, "fx", &["--n-target", "10"]);
    let before = fs::read(dir.join("fx/scores.txt")).unwrap();
    let o = sasv(
        dir,
        &[
            "fuse",
            "--asv",
            "fx/scores.txt",
            "--cm",
            "fx/scores.txt",
            "--out",
            "fx/scores.txt",
        ],
    );
    assert_eq!(code(&o), 1);
    assert_eq!(fs::read(dir.join("fx/scores.txt")).unwrap(), before);
}

#[test]
fn backend_train_and_score_on_separable_embeddings() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    embedding_fixture(dir);
    let train = sasv(
        dir,
        &[
            "backend",
            "train",
            "--labels",
            "emb/train_labels.txt",
            "--speaker-embeddings",
            "emb/speaker_embeddings.txt",
            "--cm-embeddings",
            "emb/cm_embeddings.txt",
            "--hidden",
            "64,32,16",
            "--learning-rate",
            "0.05",
            "--batch-size",
            "32",
            "--model",
            "model.txt",
        ],
    );
    assert_eq!(code(&train), 0, "{}", stderr(&train));
    let out = stdout(&train);
    assert!(
        out.contains("seed=2022\n")
            && out.contains("epochs=30\n")
            && out.contains("ratios=1:1:2\n"),
        "{out}"
    );

    let score = sasv(
        dir,
        &[
            "backend",
            "score",
            "--protocol",
            "emb/protocol.txt",
            "--enrollment",
            "emb/enrollment.txt",
            "--speaker-embeddings",
            "emb/speaker_embeddings.txt",
            "--cm-embeddings",
            "emb/cm_embeddings.txt",
            "--model",
            "model.txt",
            "--team",
            "b2",
            "--split",
            "eval",
        ],
    );
    assert_eq!(code(&score), 0, "{}", stderr(&score));
    let o = sasv(
        dir,
        &[
            "evaluate",
            "--protocol",
            "emb/protocol.txt",
            "--scores",
            "scores_eval_b2.txt",
        ],
    );
    assert!(percent(&stdout(&o), "SASV-EER") <= 1.0, "{}", stdout(&o));
}

#[test]
fn backend_score_rejects_wrong_model_dimensions() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    embedding_fixture(dir);
    let o = sasv(
        dir,
        &[
            "synth",
            "--out-dir",
            "small",
            "--spk-dim",
            "3",
            "--cm-dim",
            "2",
            "--n-target",
            "20",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let train = sasv(
        dir,
        &[
            "backend",
            "train",
            "--labels",
            "small/train_labels.txt",
            "--speaker-embeddings",
            "small/speaker_embeddings.txt",
            "--cm-embeddings",
            "small/cm_embeddings.txt",
            "--hidden",
            "4",
            "--epochs",
            "1",
            "--model",
            "small.txt",
        ],
    );
    assert_eq!(code(&train), 0, "{}", stderr(&train));
    let o = sasv(
        dir,
        &[
            "backend",
            "score",
            "--protocol",
            "emb/protocol.txt",
            "--enrollment",
            "emb/enrollment.txt",
            "--speaker-embeddings",
            "emb/speaker_embeddings.txt",
            "--cm-embeddings",
            "emb/cm_embeddings.txt",
            "--model",
            "small.txt",
            "--out",
            "s.txt",
        ],
    );
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("dimension mismatch"), "{}", stderr(&o));
    assert!(!dir.join("s.txt").exists());
}

#[test]
fn synth_is_byte_identical_for_a_seed() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let run = |out: &str, seed: &str| {
        let o = sasv(
            dir,
            &[
                "synth",
                "--out-dir",
                out,
                "--n-target",
                "50",
                "--seed",
                seed,
            ],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    };
    run("a", "4");
    run("b", "4");
    run("c", "5");
    let names: Vec<_> = fs::read_dir(dir.join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names.len(), 8);
    for name in &names {
        assert_eq!(
            fs::read(dir.join("a").join(name)).unwrap(),
            fs::read(dir.join("b").join(name)).unwrap()
        );
    }
    assert_ne!(
        fs::read(dir.join("a/speaker_embeddings.txt")).unwrap(),
        fs::read(dir.join("c/speaker_embeddings.txt")).unwrap()
    );
}

#[test]
fn config_file_precedence_and_replay() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("run.cfg"),
        "# fixture\nkind=scores\nout_dir=from_file\nseed=9\nn_target=30\n",
    )
    .unwrap();
    let o = sasv(dir, &["synth", "--config", "run.cfg", "--n-target", "40"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let printed = stdout(&o);
    for line in [
        "kind=scores",
        "out_dir=from_file",
        "seed=9",
        "n_target=40",
        "n_spoof=1000",
        "dprime_sv=2",
    ] {
        assert!(
            printed.lines().any(|l| l == line),
            "{line} missing from\n{printed}"
        );
    }

    // the printed configuration is itself a config file reproducing the run
    let config: String = printed
        .lines()
        .take_while(|l| !l.starts_with("wrote"))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(
        dir.join("replay.cfg"),
        config.replace("out_dir=from_file", "out_dir=replay"),
    )
    .unwrap();
    let o = sasv(dir, &["synth", "--config", "replay.cfg"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for name in ["protocol.txt", "enrollment.txt", "scores.txt"] {
        assert_eq!(
            fs::read(dir.join("from_file").join(name)).unwrap(),
            fs::read(dir.join("replay").join(name)).unwrap()
        );
    }

    fs::write(dir.join("typo.cfg"), "out_dir=x\nsede=1\n").unwrap();
    let o = sasv(dir, &["synth", "--config", "typo.cfg"]);
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).contains("line 2: unknown key sede"),
        "{}",
        stderr(&o)
    );
}
