use burgerlab_core::bkm::gronwall_bound;
use burgerlab_core::generators::{gradient_of, random_band_limited};
use burgerlab_core::io::{read_field, write_field};
use burgerlab_core::mild::qt_distance;
use burgerlab_core::stochastic::pairwise_sum;
use burgerlab_core::*;
use proptest::prelude::*;

fn grid(dim: usize) -> TorusGrid {
    TorusGrid::new(dim, [32, 16, 8][dim - 1]).unwrap()
}

/// Band kept inside the 2/3 rule so quadratic products are exact.
fn random(dim: usize, seed: u64) -> Field {
    let g = grid(dim);
    let band = 3.min((g.n() - 1) / 3);
    random_band_limited(&g, dim, band, 1.0, seed)
}

fn max_abs(f: &Field) -> f64 {
    lp_norm(f, f64::INFINITY).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spectral_round_trip(dim in 1usize..=3, seed in any::<u64>()) {
        let f = random(dim, seed);
        let back = Field::from_spectrum(f.grid(), f.spectrum().to_vec());
        prop_assert!(back.max_abs_diff(&f).unwrap() < 1e-13);
    }

    #[test]
    fn binary_round_trip(dim in 1usize..=3, seed in any::<u64>(), t in 0.0f64..10.0) {
        let f = random(dim, seed);
        let mut buf = Vec::new();
        write_field(&mut buf, &f, t).unwrap();
        let (back, t_back) = read_field(buf.as_slice()).unwrap();
        prop_assert_eq!(t_back.to_bits(), t.to_bits());
        prop_assert_eq!(back, f);
    }

    #[test]
    fn semigroup_law(dim in 1usize..=2, seed in any::<u64>(), s in 0.0f64..0.5, t in 0.0f64..0.5) {
        let h = random(dim, seed);
        let two = heat_semigroup_apply(&heat_semigroup_apply(&h, 0.3, s).unwrap(), 0.3, t).unwrap();
        let one = heat_semigroup_apply(&h, 0.3, s + t).unwrap();
        prop_assert!(two.max_abs_diff(&one).unwrap() < 1e-13);
    }

    #[test]
    fn heat_flow_contracts_lp(dim in 1usize..=2, seed in any::<u64>(), t in 0.0f64..1.0, p in 1.0f64..8.0) {
        let h = random(dim, seed);
        let before = lp_norm(&h, p).unwrap().value;
        let after = lp_norm(&heat_semigroup_apply(&h, 0.5, t).unwrap(), p).unwrap().value;
        // the discrete kernel is not positive, allow a sliver
        prop_assert!(after <= before * (1.0 + 1e-3));
    }

    #[test]
    fn divergence_identity_on_random_fields(dim in 1usize..=3, seed in any::<u64>()) {
        let c = divergence_identity_residual(&random(dim, seed)).unwrap();
        prop_assert!(c.pass, "{}", c);
    }

    #[test]
    fn gradients_are_curl_free(seed in any::<u64>()) {
        let g = grid(2);
        let psi = random_band_limited(&g, 1, 4, 1.0, seed);
        let u = gradient(&psi).unwrap();
        prop_assert!(max_abs(&curl(&u).unwrap()) < 1e-12);
    }

    #[test]
    fn qt_norm_is_homogeneous(seed in any::<u64>(), c in -5.0f64..5.0) {
        let g = grid(1);
        let u0 = random_band_limited(&g, 1, 3, 1.0, seed);
        let traj = heat_flow(&u0, 0.2, 0.1, 10).unwrap();
        let cfg = PicardConfig::new(1, 2.0, 0.2, 0.1, 10);
        let a = qt_norm(&traj.scaled(c), &cfg).unwrap();
        let b = c.abs() * qt_norm(&traj, &cfg).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b));
        prop_assert!(qt_distance(&traj, &traj, &cfg).unwrap() == 0.0);
    }

    #[test]
    fn duhamel_of_zero_is_heat_flow(dim in 1usize..=2, seed in any::<u64>()) {
        let u0 = random(dim, seed);
        let heat = heat_flow(&u0, 0.2, 0.1, 8).unwrap();
        let zero = heat.map_snapshots(|_, s| Field::zeros(s.grid(), s.num_components())).unwrap();
        let mapped = duhamel_apply(&zero, &u0, &Force::Zero).unwrap();
        for (a, b) in mapped.snapshots().iter().zip(heat.snapshots()) {
            prop_assert!(a.max_abs_diff(b).unwrap() < 1e-13);
        }
    }

    #[test]
    fn k_is_sum_of_its_parts(seed in any::<u64>(), p in 2.0f64..8.0) {
        let u0 = random(2, seed);
        let traj = if_rk4_solve(&u0, &Force::Zero, 0.2, 0.05, 5).unwrap();
        let r = compute_k(&traj, &Force::Zero, p, 0.0).unwrap();
        prop_assert_eq!(r.k, r.p + r.m + r.omega_inf + r.divf_inf);
        prop_assert_eq!(r.divf_inf, 0.0);
        prop_assert!(r.m >= 0.0, "a periodic divergence has zero mean");
        prop_assert!(r.omega_inf >= max_abs(&curl(&u0).unwrap()));
    }

    #[test]
    fn gronwall_passes_on_its_own_envelope(beta in prop::collection::vec(-2.0f64..2.0, 2..40), u0 in 0.1f64..10.0) {
        let dt = 0.01;
        let mut u = vec![u0];
        for w in beta.windows(2) {
            let last = *u.last().unwrap();
            u.push(last * (0.5 * dt * (w[0] + w[1])).exp());
        }
        prop_assert!(gronwall_bound(&u, &beta, dt).unwrap().pass);
        let inflated: Vec<f64> = u.iter().enumerate().map(|(k, v)| if k == 0 { *v } else { 1.01 * v }).collect();
        prop_assert!(!gronwall_bound(&inflated, &beta, dt).unwrap().pass);
    }

    #[test]
    fn pairwise_matches_naive(v in prop::collection::vec(-1e3f64..1e3, 0..500)) {
        let naive: f64 = v.iter().sum();
        let scale: f64 = v.iter().map(|x| x.abs()).sum();
        prop_assert!((pairwise_sum(&v) - naive).abs() <= 1e-12 * (1.0 + scale));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn monte_carlo_is_seed_deterministic(seed in any::<u64>(), x in 0.0f64..std::f64::consts::TAU) {
        let g = grid(1);
        let u0 = random_band_limited(&g, 1, 3, 1.0, 1);
        let traj = if_rk4_solve(&u0, &Force::Zero, 0.1, 0.1, 20).unwrap();
        let cfg = FlowConfig::new(0.1, 0.1, 0.02, 0.004, 200, seed);
        let a = feynman_kac_estimate(&traj, &Force::Zero, &[x], &cfg).unwrap();
        let b = feynman_kac_estimate(&traj, &Force::Zero, &[x], &cfg).unwrap();
        prop_assert_eq!(a.value[0].to_bits(), b.value[0].to_bits());
    }

    #[test]
    fn gradient_flow_stays_irrotational(amp in 0.1f64..1.0) {
        let g = grid(2);
        let u0 = gradient_of(&g, "mixed").unwrap().scaled(amp);
        let traj = if_rk4_solve(&u0, &Force::Zero, 0.1, 0.2, 40).unwrap();
        for s in traj.snapshots() {
            prop_assert!(max_abs(&curl(s).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn unforced_energy_decays(dim in 1usize..=2, seed in any::<u64>()) {
        let traj = if_rk4_solve(&random(dim, seed), &Force::Zero, 0.2, 0.2, 40).unwrap();
        let b = blowup_scan(&traj, 2.0, None).unwrap();
        prop_assert!(b.t_max_estimate.is_none());
        prop_assert!(b.sup_lp_per_time.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }
}
