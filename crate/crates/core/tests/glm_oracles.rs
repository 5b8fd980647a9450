//! Monte Carlo and large-sample checks of the likelihood machinery that
//! are too heavy for unit tests.

use coev_core::glm::{fit, score, fisher_info, remainder, theoretical_sd, FitOptions, GlmData};
use coev_core::model::{
    alpha_update, build_b, build_c, build_design_matrix, compute_attractors, BetaParams, Graph,
};
use coev_core::sim::{init_latent, sample_dirichlet, sample_graph, InitSpec, RngTree, SimConfig};
use coev_core::embed::project_to_dp;
use coev_core::model::star_lift_rows;
use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

const DELTA: f64 = 1e-4;

fn mixture_config(n: usize, seed: u64) -> SimConfig<f64> {
    SimConfig {
        n,
        p: 2,
        k: 3,
        beta: BetaParams::new(1.0, 1.0, -4.0, 5.0),
        horizon: 1,
        init: InitSpec::three_lobe_mixture(),
        seed,
    }
}

/// Builds an oracle-latent design/response pair from one simulated
/// transition.
fn oracle_transition(n: usize, seed: u64) -> (GlmData<f64>, BetaParams<f64>) {
    let cfg = mixture_config(n, seed);
    let root = RngTree::new(seed);
    let (state0, groups) = init_latent(&cfg, &root.child(0)).unwrap();
    let (graph0, _) = sample_graph(&state0, &root.child(1)).unwrap();
    let next = coev_core::sim::step(&state0, &graph0, &groups, cfg.beta, &root.child(2)).unwrap();

    let latent0 = state0.latent_part();
    let (aw, ab) = compute_attractors(&latent0.matrix(), &graph0, &groups).unwrap();
    let x = build_design_matrix(&latent0.matrix(), &aw.view(), &ab.view()).unwrap();
    let z1 = next.latent_part();
    let projected = project_to_dp(&z1.matrix(), DELTA).unwrap();
    let response = star_lift_rows(&projected.view()).unwrap();
    (GlmData::new(x, response).unwrap(), cfg.beta)
}

#[test]
fn fisher_matches_monte_carlo_score_covariance() {
    // Single observation, p = 1: the information equals the covariance of
    // the score over repeated responses.
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let p = 1;
    let z = ndarray::array![[0.4]];
    let aw = ndarray::array![[0.3]];
    let ab = ndarray::array![[0.2]];
    let x = build_design_matrix(&z.view(), &aw.view(), &ab.view()).unwrap();
    let beta = BetaParams::new(0.8, -0.4, 0.6, 1.2);
    let b = build_b(beta, p);
    let (alpha, _) = alpha_update(&x, &b.view());

    let dim = (3 * p + 1) * (p + 1);
    let draws = 100_000;
    let mut mean = Array1::<f64>::zeros(dim);
    let mut second = Array2::<f64>::zeros((dim, dim));
    for _ in 0..draws {
        let resp_row = sample_dirichlet(&alpha.row(0), &mut rng).unwrap();
        let resp = Array2::from_shape_vec((1, 2), resp_row.to_vec()).unwrap();
        let data = GlmData::new(x.clone(), resp).unwrap();
        let s = score(&b.view(), &data);
        for a in 0..dim {
            mean[a] += s[a];
            for c in 0..dim {
                second[(a, c)] += s[a] * s[c];
            }
        }
    }
    mean.mapv_inplace(|v| v / draws as f64);
    second.mapv_inplace(|v| v / draws as f64);
    let mut cov = second.clone();
    for a in 0..dim {
        for c in 0..dim {
            cov[(a, c)] -= mean[a] * mean[c];
        }
    }
    let data = {
        let resp_row = sample_dirichlet(&alpha.row(0), &mut rng).unwrap();
        let resp = Array2::from_shape_vec((1, 2), resp_row.to_vec()).unwrap();
        GlmData::new(x.clone(), resp).unwrap()
    };
    let f = fisher_info(&b.view(), &data);
    let scale = f.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    for a in 0..dim {
        for c in 0..dim {
            assert!(
                (cov[(a, c)] - f[(a, c)]).abs() <= 0.05 * scale,
                "({a},{c}): MC {} vs F {}",
                cov[(a, c)],
                f[(a, c)]
            );
        }
    }
}

#[test]
fn remainder_has_mean_zero_at_truth() {
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    let p = 1;
    let z = ndarray::array![[0.25]];
    let aw = ndarray::array![[0.5]];
    let ab = ndarray::array![[0.15]];
    let x = build_design_matrix(&z.view(), &aw.view(), &ab.view()).unwrap();
    let beta = BetaParams::new(1.0, 0.3, -0.5, 1.0);
    let b = build_b(beta, p);
    let (alpha, _) = alpha_update(&x, &b.view());

    let dim = (3 * p + 1) * (p + 1);
    let draws = 40_000;
    let mut sum = Array2::<f64>::zeros((dim, dim));
    let mut sum_sq = Array2::<f64>::zeros((dim, dim));
    for _ in 0..draws {
        let resp_row = sample_dirichlet(&alpha.row(0), &mut rng).unwrap();
        let resp = Array2::from_shape_vec((1, 2), resp_row.to_vec()).unwrap();
        let data = GlmData::new(x.clone(), resp).unwrap();
        let r = remainder(&b.view(), &data);
        for a in 0..dim {
            for c in 0..dim {
                sum[(a, c)] += r[(a, c)];
                sum_sq[(a, c)] += r[(a, c)] * r[(a, c)];
            }
        }
    }
    for a in 0..dim {
        for c in 0..dim {
            let mean = sum[(a, c)] / draws as f64;
            let var = sum_sq[(a, c)] / draws as f64 - mean * mean;
            let se = (var / draws as f64).sqrt();
            assert!(
                mean.abs() <= 3.0 * se.max(1e-12),
                "({a},{c}): mean {mean} vs 3 se {}",
                3.0 * se
            );
        }
    }
}

#[test]
fn score_concentrates_at_population_parameter() {
    let norms: Vec<f64> = [200usize, 2000]
        .iter()
        .map(|&n| {
            let (data, beta) = oracle_transition(n, 1234);
            let b = build_b(beta, 2);
            let s = score(&b.view(), &data);
            s.iter().map(|v| v * v).sum::<f64>().sqrt() / n as f64
        })
        .collect();
    assert!(
        norms[1] < norms[0],
        "score/n should shrink: {} vs {}",
        norms[1],
        norms[0]
    );
}

#[test]
fn oracle_fit_recovers_beta_within_three_sds() {
    let (data, beta_true) = oracle_transition(3000, 4242);
    let report = fit(&data, &FitOptions::default()).unwrap();
    assert!(report.converged);
    let sd = theoretical_sd(&report).unwrap();
    let got = report.beta_hat.to_array();
    let truth = beta_true.to_array();
    for j in 0..4 {
        assert!(
            (got[j] - truth[j]).abs() <= 3.0 * sd[j],
            "component {j}: {} vs {} (sd {})",
            got[j],
            truth[j],
            sd[j]
        );
    }
}

#[test]
fn empty_graph_reduced_model_recovers_own_and_intercept() {
    // With no edges every attractor is zero and the attractor columns of
    // the design vanish; the own weight and intercept stay identifiable.
    let n = 2000;
    let seed = 77;
    let cfg = SimConfig {
        beta: BetaParams::new(1.0, 0.0, 0.0, 1.5),
        ..mixture_config(n, seed)
    };
    let root = RngTree::new(seed);
    let (state0, groups) = init_latent(&cfg, &root.child(0)).unwrap();
    let empty = Graph::empty(n);
    let next = coev_core::sim::step(&state0, &empty, &groups, cfg.beta, &root.child(2)).unwrap();

    let latent0 = state0.latent_part();
    let (aw, ab) = compute_attractors(&latent0.matrix(), &empty, &groups).unwrap();
    assert!(aw.iter().all(|&v| v == 0.0));
    assert!(ab.iter().all(|&v| v == 0.0));
    let x = build_design_matrix(&latent0.matrix(), &aw.view(), &ab.view()).unwrap();
    let projected = project_to_dp(&next.latent_part().matrix(), DELTA).unwrap();
    let response = star_lift_rows(&projected.view()).unwrap();
    let data = GlmData::new(x, response).unwrap();
    let report = fit(&data, &FitOptions::default()).unwrap();
    let sd = theoretical_sd(&report).unwrap();
    let got = report.beta_hat.to_array();
    assert!((got[0] - 1.0).abs() <= 3.0 * sd[0], "own: {} sd {}", got[0], sd[0]);
    assert!((got[3] - 1.5).abs() <= 3.0 * sd[3], "intercept: {} sd {}", got[3], sd[3]);
    assert!(report.ridge > 0.0, "rank-deficient information must be ridged");
}

#[test]
fn beta_hat_is_invariant_under_coordinate_permutation() {
    let (data, _) = oracle_transition(800, 99);
    let opts = FitOptions::default();
    let base = fit(&data, &opts).unwrap();

    // Swap latent coordinates 0 and 1 in every design block and in the
    // response.
    let x = data.design().matrix().to_owned();
    let p = 2;
    let mut xp = x.clone();
    for block in 0..3 {
        for i in 0..x.nrows() {
            xp[(i, block * p)] = x[(i, block * p + 1)];
            xp[(i, block * p + 1)] = x[(i, block * p)];
        }
    }
    let mut resp = data.response().to_owned();
    for i in 0..resp.nrows() {
        resp.swap((i, 0), (i, 1));
    }
    let xp = coev_core::model::DesignMatrix::try_new(xp, p).unwrap();
    let permuted = GlmData::new(xp, resp).unwrap();
    let swapped = fit(&permuted, &opts).unwrap();
    for (a, b) in base
        .beta_hat
        .to_array()
        .iter()
        .zip(swapped.beta_hat.to_array().iter())
    {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn unconstrained_optimum_approaches_the_constraint_manifold() {
    let dist = |n: usize| {
        let (data, _) = oracle_transition(n, 555);
        let report = fit(&data, &FitOptions::default()).unwrap();
        let c = build_c::<f64>(2);
        // Distance of bv to its projection onto col(C).
        let ctc = c.t().dot(&c);
        let rhs = c.t().dot(&report.bv_hat);
        let factor = coev_core::linalg::factor_spd_ridge(&ctc.view(), 1e-14).unwrap();
        let beta = factor.solve_vec(&rhs.view());
        let back = c.dot(&beta);
        report
            .bv_hat
            .iter()
            .zip(back.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
    };
    let far = dist(500);
    let near = dist(5000);
    assert!(near < far, "manifold distance should shrink: {near} vs {far}");
}

#[test]
fn theoretical_sd_shrinks_like_root_n() {
    let median_sd = |n: usize| -> [f64; 4] {
        let mut all = [vec![], vec![], vec![], vec![]];
        for rep in 0..10 {
            let (data, _) = oracle_transition(n, 9000 + rep);
            let report = fit(&data, &FitOptions::default()).unwrap();
            let sd = theoretical_sd(&report).unwrap();
            for j in 0..4 {
                all[j].push(sd[j]);
            }
        }
        [
            coev_core::stats::median(&all[0]),
            coev_core::stats::median(&all[1]),
            coev_core::stats::median(&all[2]),
            coev_core::stats::median(&all[3]),
        ]
    };
    let small = median_sd(600);
    let large = median_sd(1200);
    for j in 0..3 {
        let ratio = large[j] / small[j];
        assert!(
            (0.6..=0.8).contains(&ratio),
            "component {j}: ratio {ratio} outside [0.6, 0.8]"
        );
    }
}
