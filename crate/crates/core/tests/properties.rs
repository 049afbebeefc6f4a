use std::f64::consts::{FRAC_PI_2, PI};

use overparam_core::activation::{
    self, column_pair_sum, perturbation, phi_fact_sides, row_gram_decomposition, snapshot, ActivationSnapshot,
    BinaryMatrix,
};
use overparam_core::bounds::{check_phi_fact, check_weyl_chain, CheckKind};
use overparam_core::dataset::{
    angle_profile, data_spectrum, lambda_star_bounds, mho_arcsin_partial, mho_matrix, sample_sphere_dataset, Dataset,
};
use overparam_core::harness::{EtaMode, ExperimentConfig, RMode};
use overparam_core::network::{self, gradient_matrix, gradient_naive, NetworkState};
use overparam_core::oracles;
use overparam_core::RealMatrix;
use proptest::prelude::*;

fn binary(rows: usize, cols: usize, bits: &[bool]) -> BinaryMatrix {
    BinaryMatrix::from_fn(rows, cols, |i, j| bits[(i * cols + j) % bits.len()])
}

fn state(n: usize, d: usize, m: usize, seed: u64, scale: f64) -> (NetworkState, Dataset) {
    let data = sample_sphere_dataset(n, d, 0.0, seed, 10_000).unwrap();
    let mut net = network::init_network(d, m, seed ^ 0x5eed).unwrap();
    let noise = network::init_network(d, m, seed ^ 0xface).unwrap().w0;
    for (w, e) in net.w.as_mut_slice().iter_mut().zip(noise.as_slice()) {
        *w += scale * e;
    }
    (net, data)
}

fn shape() -> impl Strategy<Value = (usize, usize, usize)> {
    (2usize..12, 2usize..16, 1usize..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_forms_agree((n, d, m) in shape(), seed in any::<u64>(), scale in 0.0f64..1.0) {
        let (net, data) = state(n, d, m, seed, scale);
        let a = gradient_naive(&net, &data).unwrap();
        let b = gradient_matrix(&net, &data).unwrap();
        let norm = a.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(a.max_abs_diff(&b) <= 1e-12 * norm.max(1.0));
    }

    #[test]
    fn curvature_forms_agree((n, d, m) in shape(), seed in any::<u64>()) {
        let (net, data) = state(n, d, m, seed, 0.3);
        let xi = network::init_network(d, m, seed.wrapping_add(1)).unwrap().w0;
        let fast = network::directional_curvature(&net, &data, &xi).unwrap();
        let blocks = network::directional_curvature_blocks(&net, &data, &xi).unwrap();
        prop_assert!(fast >= 0.0);
        prop_assert!((fast - blocks).abs() <= 1e-10 * fast.abs().max(1.0));
    }

    #[test]
    fn phi_fact_holds_for_any_binary_matrix(n in 1usize..10, m in 1usize..70, bits in prop::collection::vec(any::<bool>(), 1..200)) {
        let snap = ActivationSnapshot::from_psi(binary(n, m, &bits), 0);
        prop_assume!(snap.psi.ones() > 0);
        let (lhs, rhs) = phi_fact_sides(&snap).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-9);
        prop_assert!(check_phi_fact(&snap).unwrap().satisfied);
    }

    #[test]
    fn row_gram_bound_below_sigma_min(n in 1usize..8, extra in 0usize..40, bits in prop::collection::vec(any::<bool>(), 1..200)) {
        let snap = ActivationSnapshot::from_psi(binary(n, n + extra, &bits), 0);
        let dec = row_gram_decomposition(&snap).unwrap();
        let s2 = snap.sigma_min * snap.sigma_min;
        prop_assert!(s2 >= dec.bound - 1e-9 * s2.abs().max(1.0));
    }

    #[test]
    fn gram_counts_match_real_gram(n in 1usize..9, m in 1usize..150, bits in prop::collection::vec(any::<bool>(), 1..300)) {
        let psi = binary(n, m, &bits);
        prop_assert_eq!(psi.row_gram(), psi.to_real().row_gram());
        prop_assert_eq!(u128::from(psi.ones()), (0..n).map(|i| u128::from(psi.row_count(i))).sum::<u128>());
    }

    #[test]
    fn pair_sum_matches_brute_force(n in 1usize..8, m in 1usize..30, bits in prop::collection::vec(any::<bool>(), 1..200)) {
        let psi = binary(n, m, &bits);
        let cols: Vec<Vec<bool>> = (0..m).map(|r| (0..n).map(|i| psi.get(i, r)).collect()).collect();
        let mut brute = 0.0;
        for r in 0..m {
            for s in 0..m {
                if r == s {
                    continue;
                }
                let nr = cols[r].iter().filter(|&&b| b).count() as f64;
                let ns = cols[s].iter().filter(|&&b| b).count() as f64;
                let o = cols[r].iter().zip(&cols[s]).filter(|(a, b)| **a && **b).count() as f64;
                brute += (nr.sqrt() * ns.sqrt() * o).sqrt();
            }
        }
        prop_assert!((column_pair_sum(&psi) - brute).abs() <= 1e-9 * brute.max(1.0));
    }

    #[test]
    fn weyl_chain_holds((n, d, m) in shape(), seed in any::<u64>(), scale in 0.0f64..2.0) {
        let (net, data) = state(n, d, m, seed, scale);
        let now = snapshot(&net.w, &data.x, 1).unwrap();
        let init = snapshot(&net.w0, &data.x, 0).unwrap();
        let report = perturbation(&now, &init, &net.w, &net.w0).unwrap();
        prop_assert_eq!(report.frob_sq_delta, now.psi.hamming(&init.psi).unwrap() as f64);
        prop_assert!(report.spectral_delta * report.spectral_delta <= report.frob_sq_delta + 1e-9);
        prop_assert!(check_weyl_chain(&now, &init, &report).unwrap().satisfied);
    }

    #[test]
    fn flips_stay_in_the_band((n, d, m) in shape(), seed in any::<u64>(), r in 0.01f64..0.5) {
        let (mut net, data) = state(n, d, m, seed, 0.0);
        // Move every neuron just inside the R-ball.
        let dir = network::init_network(d, m, seed ^ 0xd1).unwrap().w0;
        for c in 0..m {
            let norm = (0..d).map(|k| dir[(k, c)] * dir[(k, c)]).sum::<f64>().sqrt();
            for k in 0..d {
                net.w[(k, c)] += 0.999 * r * dir[(k, c)] / norm;
            }
        }
        let sets = activation::flip_candidate_sets(&net.w0, &data.x, r).unwrap();
        let init = snapshot(&net.w0, &data.x, 0).unwrap();
        let now = snapshot(&net.w, &data.x, 1).unwrap();
        let drifts = activation::weight_drifts(&net.w, &net.w0).unwrap();
        prop_assert!(activation::uncontained_flips(&sets, &init.psi, &now.psi, &drifts).unwrap().is_empty());
    }

    #[test]
    fn aleph_forms_agree(beta in 1e-6f64..FRAC_PI_2 - 1e-6, theta in 1e-6f64..PI - 1e-6) {
        let a = oracles::aleph_length(beta, theta).unwrap();
        let b = oracles::aleph_length_piecewise(beta, theta).unwrap();
        prop_assert!((a - b).abs() <= 1e-14);
        prop_assert!((0.0..=2.0 * PI).contains(&a));
        prop_assert!((a - oracles::aleph_length(beta, PI - theta).unwrap()).abs() <= 1e-14);
    }

    #[test]
    fn band_probability_bracket(r in 1e-9f64..0.5) {
        let p = oracles::gauss_band_prob(r);
        prop_assert!(0.7 * r < p && p < r);
    }

    #[test]
    fn joint_flip_symmetric_and_below_band(theta in 0.01f64..PI - 0.01, r in 0.005f64..0.45) {
        let a = oracles::joint_flip_prob_quadrature(theta, r).unwrap().value;
        let b = oracles::joint_flip_prob_quadrature(PI - theta, r).unwrap().value;
        // π − θ is itself rounded, so the mirror angle agrees only to rounding.
        prop_assert!((a - b).abs() <= 1e-12 * a);
        prop_assert!(a > 0.0 && a <= oracles::gauss_band_prob(r) + 1e-12);
        prop_assert!((oracles::theta_tilde(theta) - oracles::theta_tilde(PI - theta)).abs() <= 1e-15);
    }

    #[test]
    fn pair_expectations_complement(theta in 0.0f64..=PI) {
        let a = oracles::pair_activation_expectation(theta).unwrap();
        let b = oracles::pair_activation_expectation(PI - theta).unwrap();
        prop_assert!((a + b - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lambda_star_bracket(n in 2usize..20, d in 2usize..40, seed in any::<u64>()) {
        let data = sample_sphere_dataset(n, d, 0.0, seed, 10_000).unwrap();
        prop_assert!(lambda_star_bounds(&data_spectrum(&data).unwrap()).satisfied());
    }

    #[test]
    fn arcsin_series_approaches_mho(n in 2usize..8, d in 8usize..20, seed in any::<u64>()) {
        let data = sample_sphere_dataset(n, d, 0.3, seed, 100_000).unwrap();
        let exact = mho_matrix(&angle_profile(&data).unwrap()).entries;
        let gram = data.gram();
        let err = |terms| {
            let approx = mho_arcsin_partial(&gram, terms).unwrap();
            let mut worst = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        worst = worst.max((approx[(i, j)] - exact[(i, j)]).abs());
                    }
                }
            }
            worst
        };
        let (coarse, fine) = (err(5), err(200));
        prop_assert!(fine <= coarse + 1e-15);
        prop_assert!(fine < 1e-6);
    }

    #[test]
    fn wider_networks_extend_narrower(d in 1usize..10, m in 1usize..30, extra in 1usize..30, seed in any::<u64>()) {
        let small = network::init_network(d, m, seed).unwrap();
        let big = network::init_network(d, m + extra, seed).unwrap();
        prop_assert_eq!(&small.a[..], &big.a[..m]);
        for k in 0..d {
            for r in 0..m {
                prop_assert_eq!(small.w0[(k, r)], big.w0[(k, r)]);
            }
        }
    }

    #[test]
    fn text_formats_round_trip((n, d, m) in shape(), seed in any::<u64>()) {
        let (net, data) = state(n, d, m, seed, 0.7);
        prop_assert_eq!(Dataset::from_text(&data.to_text()).unwrap(), data.clone());
        prop_assert_eq!(NetworkState::from_text(&net.to_text()).unwrap(), net.clone());
        let snap = snapshot(&net.w, &data.x, 3).unwrap();
        prop_assert_eq!(ActivationSnapshot::from_text(&snap.to_text()).unwrap(), snap);
    }

    #[test]
    fn config_json_round_trip(n in 2usize..100, m in 1usize..5000, eta in 0.0f64..1.0, eps in 0.01f64..10.0, seed in any::<u64>()) {
        let cfg = ExperimentConfig {
            n,
            m,
            seed,
            eta: EtaMode::Fixed(eta),
            r: RMode::Recommended { epsilon: eps },
            checks: vec![CheckKind::PhiFact, CheckKind::Drift],
            ..ExperimentConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn mc_is_a_function_of_the_seed(theta in 0.1f64..3.0, seed in any::<u64>()) {
        let a = oracles::mc_pair_activation(theta, 5_000, seed).unwrap();
        let b = oracles::mc_pair_activation(theta, 5_000, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn orthonormal_data_sits_on_the_lower_bracket() {
    let data = Dataset::new(RealMatrix::identity(8), vec![0.5; 8], 0, 0.0).unwrap();
    let spec = data_spectrum(&data).unwrap();
    assert!((spec.lambda_star - 0.25).abs() < 1e-12);
    assert!(lambda_star_bounds(&spec).lower.margin.abs() < 1e-12);
}
