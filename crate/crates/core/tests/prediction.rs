mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use tsiv::estimators::ols_fit;
use tsiv::linalg::{dmat, max_abs, vstack};
use tsiv::prediction::{
    fit_intervention_predictor, fit_ols_predictor, predict_from_sample, predict_under_intervention,
    InterventionPredictor, PredictorJson,
};
use tsiv::rng::stream_rng;
use tsiv::var_model::{random_instrumental_var1_with, Block, BlockLayout, InstrumentalVar1, RandomA2Spec};

/// Exact MSPE of `p` for `Y_{t+1}` under `do(X_t := x)` on a scalar-block
/// process. Every regressor and the structural parents of `Y_{t+1}` other
/// than `X_t` are non-descendants of the intervention, so they keep their
/// stationary joint law.
fn exact_mspe(m: &InstrumentalVar1<f64>, p: &InterventionPredictor<f64>, x: f64) -> f64 {
    let l = m.layout();
    let d = l.dim();
    let depth = p.m.max(p.l) + 1;
    let gam = m.params().autocovariances(depth).unwrap();
    // joint covariance of (S_t, S_{t-1}, …, S_{t-depth+1})
    let mut big = DMatrix::zeros(d * depth, d * depth);
    for a in 0..depth {
        for b in 0..depth {
            let block = if b >= a { gam[b - a].clone() } else { gam[a - b].transpose() };
            big.view_mut((a * d, b * d), (d, d)).copy_from(&block);
        }
    }
    let (xi, yi) = (l.range(Block::X).start, l.range(Block::Y).start);
    // error = (β - β̂) x + v · (S_t, S_{t-1}, …) + ε_Y
    let a = m.a();
    let mut v = DVector::zeros(d * depth);
    for c in 0..d {
        if c != xi {
            v[c] += a[(yi, c)];
        }
    }
    for k in 1..=p.m {
        v[k * d + xi] -= p.alpha_yx[k - 1][(0, 0)];
    }
    for j in 0..=p.l {
        v[j * d + yi] -= p.alpha_yy[j][(0, 0)];
    }
    let bias = (a[(yi, xi)] - p.beta[(0, 0)]) * x;
    bias * bias + (v.transpose() * &big * &v)[(0, 0)] + m.params().noise_diag()[yi]
}

fn strong_confounding(seed: u64) -> InstrumentalVar1<f64> {
    let spec = RandomA2Spec { confounding: Some((0.5, 0.9)), ..RandomA2Spec::new(BlockLayout::new(1, 1, 1, 1)) };
    random_instrumental_var1_with(&spec, &mut stream_rng(seed, 51)).unwrap()
}

#[test]
fn confounder_free_process_recovers_the_autoregression() {
    let mut blocks = scalar_a2(0.2).blocks();
    blocks.alpha_xh = dmat(1, 1, &[0.0]);
    blocks.alpha_yh = dmat(1, 1, &[0.0]);
    let m = InstrumentalVar1::from_blocks(BlockLayout::new(1, 1, 1, 1), &blocks, DVector::repeat(4, 1.0)).unwrap();
    let s = m.params().simulate(100_000, 3).unwrap();
    let p = fit_intervention_predictor(&m.beta(), &s, 2, 1).unwrap();
    assert!((p.alpha_yy[0][(0, 0)] - 0.4).abs() < 0.02);
    assert!(p.alpha_yy[1][(0, 0)].abs() < 0.02);
    assert!(p.alpha_yx.iter().all(|c| c[(0, 0)].abs() < 0.02));
    assert!(!p.rank_deficient);
}

#[test]
fn zero_effect_is_plain_lag_regression() {
    let m = scalar_a2(0.2);
    let s = m.params().simulate(2000, 4).unwrap();
    let p = fit_intervention_predictor(&dmat(1, 1, &[0.0]), &s, 2, 1).unwrap();
    let t = s.len();
    let regs = vstack(&[
        &s.block_window(Block::X, 2, t - 2),
        &s.block_window(Block::X, 1, t - 3),
        &s.block_window(Block::Y, 3, t - 1),
        &s.block_window(Block::Y, 2, t - 2),
    ])
    .unwrap();
    let ols = ols_fit(&s.block_window(Block::Y, 4, t), &regs).unwrap().coef;
    let got = DMatrix::from_row_slice(1, 4, &[p.alpha_yx[0][(0, 0)], p.alpha_yx[1][(0, 0)], p.alpha_yy[0][(0, 0)], p.alpha_yy[1][(0, 0)]]);
    assert!(max_abs(&(got - ols)) < 1e-10);
}

#[test]
fn prediction_is_affine_with_slope_beta() {
    let m = scalar_a2(0.2);
    let s = m.params().simulate(3000, 5).unwrap();
    let beta = dmat(1, 1, &[0.65]);
    let p = fit_intervention_predictor(&beta, &s, 2, 1).unwrap();
    let zero_x = DMatrix::zeros(1, 2);
    let zero_y = DMatrix::zeros(1, 2);
    assert_eq!(predict_under_intervention(&p, &zero_x, &zero_y, &dmat(1, 1, &[3.0])).unwrap()[(0, 0)], 0.65 * 3.0);
    let at = |x: f64| predict_from_sample(&p, &s, 100, &dmat(1, 1, &[x])).unwrap()[(0, 0)];
    let lags = at(0.0);
    let manual = p.alpha_yx[0][(0, 0)] * s.at(99)[X] + p.alpha_yx[1][(0, 0)] * s.at(98)[X]
        + p.alpha_yy[0][(0, 0)] * s.at(100)[Y] + p.alpha_yy[1][(0, 0)] * s.at(99)[Y];
    assert!((lags - manual).abs() < 1e-12);
    for x in [-2.0, 1.0, 7.5] {
        assert!((at(x) - lags - 0.65 * x).abs() < 1e-12);
    }
    assert!(predict_under_intervention(&p, &DMatrix::zeros(1, 3), &zero_y, &dmat(1, 1, &[0.0])).is_err());
    assert!(predict_from_sample(&p, &s, 2, &dmat(1, 1, &[0.0])).is_err());
    assert!(fit_intervention_predictor(&DMatrix::zeros(1, 2), &s, 2, 1).is_err());
}

#[test]
fn short_samples_are_rejected() {
    let m = scalar_a2(0.2);
    let s = m.params().simulate(3, 1).unwrap();
    assert!(fit_intervention_predictor(&m.beta(), &s, 2, 1).is_err());
    assert!(fit_ols_predictor(&s, 2, 1).is_err());
}

#[test]
fn causal_predictor_is_never_worse_than_regression() {
    let mut wins = 0;
    for seed in 0..20 {
        let m = strong_confounding(seed);
        let s = m.params().simulate(200_000, 100 + seed).unwrap();
        let sigma = m.params().stationary_covariance().unwrap().lag0[(X, X)].sqrt();
        let causal = fit_intervention_predictor(&m.beta(), &s, 2, 1).unwrap();
        let ols = fit_ols_predictor(&s, 2, 1).unwrap();
        let x = 5.0 * sigma;
        let (e_causal, e_ols) = (exact_mspe(&m, &causal, x), exact_mspe(&m, &ols, x));
        assert!(e_causal <= e_ols * 1.01, "seed {seed}: {e_causal} vs {e_ols}");
        wins += usize::from(e_causal < e_ols);
    }
    assert!(wins >= 12);
}

#[test]
fn exact_mspe_matches_simulation() {
    let m = strong_confounding(3);
    let s = m.params().simulate(5000, 9).unwrap();
    let p = fit_ols_predictor(&s, 2, 1).unwrap();
    let x = 2.0;
    let spec = tsiv::var_model::InterventionSpec::on_x(3, DVector::from_element(1, x));
    let reps = 40_000;
    let errs: Vec<f64> = (0..reps)
        .map(|r| {
            let path = m.params().simulate_with_intervention_rng(4, &spec, &mut stream_rng(77, 1 << 40 | r)).unwrap();
            let pred = predict_from_sample(&p, &path, 3, &dmat(1, 1, &[x])).unwrap()[(0, 0)];
            (path.at(4)[Y] - pred).powi(2)
        })
        .collect();
    let mean = errs.iter().sum::<f64>() / reps as f64;
    let se = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (reps as f64 * (reps - 1) as f64)).sqrt();
    let exact = exact_mspe(&m, &p, x);
    assert!((mean - exact).abs() < 4.0 * se, "{mean} vs {exact} (se {se})");
}

#[test]
fn predictor_json_shape() {
    let m = scalar_a2(0.2);
    let s = m.params().simulate(500, 2).unwrap();
    let p = fit_intervention_predictor(&m.beta(), &s, 2, 1).unwrap();
    let json: PredictorJson = serde_json::from_str(&serde_json::to_string(&p.to_json()).unwrap()).unwrap();
    assert_eq!((json.m, json.l, json.alpha_yx.len(), json.alpha_yy.len()), (2, 1, 2, 2));
    assert_eq!(json.beta, vec![vec![0.8]]);
}
