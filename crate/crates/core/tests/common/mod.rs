#![allow(dead_code)]

use sasv_core::fusion::MlpBackend;
use sasv_core::rng::Rng;

/// Brute-force EER: every distinct threshold plus the two sentinels,
/// each rate counted directly, then the FAR = FRR crossing of the
/// piecewise-linear joins of consecutive points.
pub fn brute_force_eer(pos: &[f64], neg: &[f64]) -> f64 {
    let mut thresholds = vec![f64::NEG_INFINITY];
    for &s in pos.iter().chain(neg) {
        if !thresholds.contains(&s) {
            thresholds.push(s);
        }
    }
    thresholds.push(f64::INFINITY);
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let rates: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&t| {
            let accepted_neg = neg.iter().filter(|&&s| s >= t).count();
            let rejected_pos = pos.iter().filter(|&&s| s < t).count();
            (
                accepted_neg as f64 / neg.len() as f64,
                rejected_pos as f64 / pos.len() as f64,
            )
        })
        .collect();

    let mut prev = rates[0];
    for &(far, frr) in &rates {
        let d = far - frr;
        if d == 0.0 {
            return far;
        }
        if d < 0.0 {
            let d0 = prev.0 - prev.1;
            let s = d0 / (d0 - d);
            return prev.0 + s * (far - prev.0);
        }
        prev = (far, frr);
    }
    unreachable!("reject-all point always has far - frr = -1")
}

/// Standard normal CDF at -d'/2 for d' in {0, 1, 2, 4, 6}, computed
/// offline with scipy.stats.norm.cdf.
pub fn gaussian_eer(dprime: f64) -> f64 {
    const TABLE: [(f64, f64); 5] = [
        (0.0, 0.5),
        (1.0, 0.3085375387259869),
        (2.0, 0.15865525393145707),
        (4.0, 0.022750131948179195),
        (6.0, 0.0013498980316300933),
    ];
    TABLE
        .iter()
        .find(|(d, _)| *d == dprime)
        .map(|(_, p)| *p)
        .unwrap_or_else(|| panic!("no frozen value for d' = {dprime}"))
}

/// Forward pass written out from the raw parameter vector, without the
/// library's layer types.
pub fn hand_forward(dims: &[usize], params: &[f64], input: &[f64]) -> f64 {
    let mut offset = 0;
    let mut act = input.to_vec();
    for (li, w) in dims.windows(2).enumerate() {
        let (n_in, n_out) = (w[0], w[1]);
        let weights = &params[offset..offset + n_in * n_out];
        let biases = &params[offset + n_in * n_out..offset + n_in * n_out + n_out];
        offset += n_in * n_out + n_out;
        let mut next = vec![0.0; n_out];
        for o in 0..n_out {
            let mut z = biases[o];
            for i in 0..n_in {
                z += weights[o * n_in + i] * act[i];
            }
            let last = li == dims.len() - 2;
            next[o] = if last {
                1.0 / (1.0 + (-z).exp())
            } else if z > 0.0 {
                z
            } else {
                0.01 * z
            };
        }
        act = next;
    }
    act[0]
}

pub fn random_model(rng: &mut Rng) -> MlpBackend<f64> {
    // d_in = 2 * 1 + 2 = 4, layer dims [4, 3, 3, 3, 1]
    let mut m = MlpBackend::<f64>::zeros(1, 2, &[3, 3, 3]).unwrap();
    let params: Vec<f64> = (0..m.parameter_count())
        .map(|_| rng.uniform(-1.0, 1.0))
        .collect();
    m.set_parameters(&params).unwrap();
    m
}

/// Largest relative error between backprop and central differences;
/// relative errors use max(|analytic|, |numeric|, 1e-6) as denominator so
/// gradients that are zero up to rounding compare absolutely.
pub fn max_gradient_error(seed: u64, draws: usize) -> f64 {
    let mut rng = Rng::seed_from_u64(seed);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let mut m = random_model(&mut rng);
        let inputs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..4).map(|_| rng.uniform(-2.0, 2.0)).collect())
            .collect();
        let labels: Vec<f64> = (0..3).map(|_| (rng.below(2)) as f64).collect();
        let (_, grads) = m.loss_and_gradients(&inputs, &labels).unwrap();
        let analytic = grads.flatten();
        let base = m.parameters();
        for (k, &a) in analytic.iter().enumerate() {
            let mut p = base.clone();
            p[k] = base[k] + eps;
            m.set_parameters(&p).unwrap();
            let up = m.mean_loss(&inputs, &labels).unwrap();
            p[k] = base[k] - eps;
            m.set_parameters(&p).unwrap();
            let down = m.mean_loss(&inputs, &labels).unwrap();
            let numeric = (up - down) / (2.0 * eps);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        m.set_parameters(&base).unwrap();
    }
    worst
}
