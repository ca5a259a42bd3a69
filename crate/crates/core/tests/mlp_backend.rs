mod common;

use common::{hand_forward, max_gradient_error, random_model};
use sasv_core::fusion::{
    backend_score, build_training_trials, mlp_forward, mlp_train, ClassRatios, EmbeddingSources,
    MlpBackend, PairSampling, TrainingConfig,
};
use sasv_core::rng::Rng;
use sasv_core::synth::{synth_embeddings, SynthSpec};

#[test]
fn tiny_model_matches_hand_forward() {
    let mut rng = Rng::seed_from_u64(2022);
    let m = MlpBackend::<f64>::init(1, 2, &[3, 3, 3], &mut rng).unwrap();
    assert_eq!(m.layer_dims(), [4, 3, 3, 3, 1]);
    let (enrol, test, cm) = ([0.3], [-1.2], [0.7, 2.5]);
    let got = mlp_forward(&m, &enrol, &test, &cm).unwrap();
    let want = hand_forward(&m.layer_dims(), &m.parameters(), &[0.3, -1.2, 0.7, 2.5]);
    assert!((got - want).abs() < 1e-15, "{got} vs {want}");
    for _ in 0..50 {
        let m = random_model(&mut rng);
        let x: Vec<f64> = (0..4).map(|_| rng.uniform(-3.0, 3.0)).collect();
        let got = m.forward(&x).unwrap();
        assert!((got - hand_forward(&[4, 3, 3, 3, 1], &m.parameters(), &x)).abs() < 1e-15);
    }
}

#[test]
fn gradients_match_finite_differences() {
    let err = max_gradient_error(7, 20);
    assert!(err < 1e-4, "max relative error {err:e}");
}

#[test]
fn forward_stays_finite_on_bounded_inputs() {
    let mut rng = Rng::seed_from_u64(31);
    let m = MlpBackend::<f64>::init(8, 4, &[256, 128, 64], &mut rng).unwrap();
    for _ in 0..500 {
        let x: Vec<f64> = (0..20).map(|_| rng.uniform(-10.0, 10.0)).collect();
        let y = m.forward(&x).unwrap();
        assert!(y.is_finite() && (0.0..=1.0).contains(&y));
        assert!(m.logit(&x).unwrap().is_finite());
    }
}

#[test]
fn f32_model_runs() {
    let mut rng = Rng::seed_from_u64(1);
    let m = MlpBackend::<f32>::init(2, 2, &[4, 4, 4], &mut rng).unwrap();
    let y = mlp_forward(&m, &[1.0, 0.5], &[0.2, -0.1], &[3.0, -3.0]).unwrap();
    assert!(y > 0.0 && y < 1.0);
    let back = MlpBackend::<f32>::parse(&m.to_text()).unwrap();
    assert_eq!(back, m);
}

fn separable_fixture(seed: u64) -> sasv_core::synth::SyntheticEmbeddings<f64> {
    synth_embeddings(&SynthSpec {
        n_target: 200,
        n_nontarget: 200,
        n_spoof: 200,
        dprime_sv: 8.0,
        dprime_spf: 8.0,
        train_bonafide_per_speaker: 12,
        train_spoof_per_speaker: 12,
        seed,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn first_epoch_reduces_training_loss_and_training_separates() {
    let fx = separable_fixture(3);
    let sources = EmbeddingSources::combined(&fx.speaker, &fx.cm);
    let trials = build_training_trials(
        &fx.train_pool,
        None,
        PairSampling::Balanced(ClassRatios::default()),
        3,
    )
    .trials;
    let inputs: Vec<Vec<f64>> = trials
        .iter()
        .map(|t| sources.input(&t.enrollment, &t.test).unwrap())
        .collect();
    let labels: Vec<f64> = trials
        .iter()
        .map(|t| if t.label() { 1.0 } else { 0.0 })
        .collect();

    let config = TrainingConfig {
        hidden: vec![32, 16, 8],
        learning_rate: 0.01,
        batch_size: 32,
        ..Default::default()
    };
    let one = mlp_train(
        &trials,
        &sources,
        &TrainingConfig {
            epochs: 1,
            ..config.clone()
        },
    )
    .unwrap();
    let zero = mlp_train(
        &trials,
        &sources,
        &TrainingConfig {
            epochs: 1,
            learning_rate: 0.0,
            ..config.clone()
        },
    )
    .unwrap();
    let before = zero.model.mean_loss(&inputs, &labels).unwrap();
    let after = one.model.mean_loss(&inputs, &labels).unwrap();
    assert!(after < before, "{after} !< {before}");

    let trained = mlp_train(
        &trials,
        &sources,
        &TrainingConfig {
            epochs: 50,
            ..config
        },
    )
    .unwrap();
    let correct = inputs
        .iter()
        .zip(&labels)
        .filter(|(x, &y)| (trained.model.forward(x).unwrap() >= 0.5) == (y == 1.0))
        .count();
    let accuracy = correct as f64 / inputs.len() as f64;
    assert!(accuracy >= 0.99, "training accuracy {accuracy}");

    let scores = backend_score(&trained.model, &fx.protocol, &sources).unwrap();
    assert_eq!(scores.len(), fx.protocol.trials().len());
}
