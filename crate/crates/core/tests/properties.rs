use proptest::prelude::*;

use vpblab::field_solver::{quasineutral_potential, solve_poisson, PotentialField};
use vpblab::io::{decode_snapshot, parse_config, write_snapshot, RunConfig, Snapshot, SnapshotGrid};
use vpblab::phase_space::{DistributionField, FluidTriple, MacroProjector, SpatialGrid, VelocityGrid};
use vpblab::quasineutral::{electron_density, ElectronDensityModel};
use vpblab::rarefaction::BurgersWave;
use vpblab::vpb_solver::{Budget, KineticState};

fn triple() -> impl Strategy<Value = FluidTriple> {
    (0.3..3.0f64, -1.0..1.0f64, -0.5..0.5f64, 0.5..2.0f64)
        .prop_map(|(rho, u1, u2, theta)| FluidTriple::new(rho, [u1, u2, 0.0], theta).unwrap())
}

fn model() -> impl Strategy<Value = ElectronDensityModel> {
    prop_oneof![
        (0.3..3.0f64).prop_map(|a| ElectronDensityModel::boltzmann(a).unwrap()),
        (1.05..3.0f64, 0.3..3.0f64).prop_map(|(g, a)| ElectronDensityModel::general_gamma(g, a).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn projections_split_the_identity(p in triple(), seed in any::<u64>()) {
        let grid = VelocityGrid::new(7.0, 10).unwrap();
        let proj = MacroProjector::new(&p, &grid).unwrap();
        let mut state = seed | 1;
        let h: Vec<f64> = proj
            .maxwellian()
            .iter()
            .map(|m| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                m * ((state % 2001) as f64 / 1000.0 - 1.0)
            })
            .collect();
        let p0 = proj.project_p0(&h);
        let p1 = proj.project_p1(&h);
        let n = proj.norm(&h);
        let sum: Vec<f64> = p0.iter().zip(p1.iter()).zip(&h).map(|((a, b), c)| a + b - c).collect();
        prop_assert!(proj.norm(&sum) <= 1e-12 * n);
        let again: Vec<f64> = proj.project_p0(&p0).iter().zip(p0.iter()).map(|(a, b)| a - b).collect();
        prop_assert!(proj.norm(&again) <= 1e-10 * n);
        prop_assert!(proj.norm(&proj.project_p0(&p1)) <= 1e-10 * n);
    }

    #[test]
    fn config_text_round_trips(
        seed in 0..=i64::MAX as u64,
        n_x in 8usize..300,
        cfl in 0.05..1.0f64,
        eps in 0.01..2.0f64,
        amp in 0.0..0.01f64,
        trilinear in any::<bool>(),
    ) {
        let mut cfg = RunConfig::default();
        cfg.seed = seed;
        cfg.grid.n_x = n_x;
        cfg.scheme.cfl = cfl;
        cfg.wave.epsilon = eps;
        cfg.perturbation.amplitude = amp;
        if trilinear {
            cfg.collision.interpolation = vpblab::collision::Interpolation::Trilinear;
        }
        let text = cfg.to_toml();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml(), text);
        prop_assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn snapshots_round_trip_bit_for_bit(
        values in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 2 * 8 + 2),
        t in 0.0..1e3f64,
        step in any::<u64>(),
    ) {
        let f = DistributionField::from_raw(2, 8, values[..16].to_vec()).unwrap();
        let state = KineticState {
            t,
            step,
            f,
            phi: PotentialField { values: values[16..].to_vec(), bc_left: -0.0, bc_right: f64::MIN_POSITIVE / 4.0 },
            budget: Budget { boundary_outflow: [1e-300, -2.0, 0.0, 3.5, t], electric_source: [0.1; 5] },
            nu_max: 1.0 / 3.0,
            min_value: -1e-20,
        };
        let snap = Snapshot {
            grid: SnapshotGrid { x_min: -1.0, x_max: 1.0, n_x: 2, v_half_width: 3.0, n_v: 2 },
            state,
            initial_totals: [1.0, 0.0, 0.0, 0.0, 1.5],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.vpb");
        write_snapshot(&path, &snap).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let back = decode_snapshot(&bytes).unwrap();
        let bits = |s: &Snapshot| -> Vec<u64> {
            s.state.f.as_slice().iter().chain(&s.state.phi.values).map(|v| v.to_bits()).collect()
        };
        prop_assert_eq!(bits(&back), bits(&snap));
        prop_assert_eq!(back.state.phi.bc_left.to_bits(), snap.state.phi.bc_left.to_bits());
        prop_assert_eq!(back.state.phi.bc_right.to_bits(), snap.state.phi.bc_right.to_bits());
        prop_assert_eq!(&back, &snap);
        // every strict prefix is rejected, never a panic
        for cut in [0, 7, 15, bytes.len() / 2, bytes.len() - 1] {
            prop_assert!(decode_snapshot(&bytes[..cut]).is_err());
        }
    }

    #[test]
    fn burgers_profile_is_monotone_and_bounded(
        wm in -2.0..1.0f64,
        gap in 0.1..2.0f64,
        eps in 0.01..1.0f64,
        t in 0.0..500.0f64,
    ) {
        let b = BurgersWave::new(wm, wm + gap, eps).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..200 {
            let x = -100.0 + (gap * t + 200.0) * k as f64 / 199.0 + wm * t;
            let p = b.eval(t, x).unwrap();
            prop_assert!(p.w >= wm && p.w <= wm + gap);
            prop_assert!(p.w >= prev - 1e-14);
            prop_assert!(p.wx >= 0.0 && p.wx <= 0.5 * eps * gap * (1.0 + 1e-12));
            prev = p.w;
        }
    }

    #[test]
    fn electron_density_is_increasing_and_invertible(m in model(), rho in 0.1..5.0f64) {
        let phi = quasineutral_potential(rho, &m).unwrap();
        let (n, dn, _) = electron_density(&m, phi).unwrap();
        prop_assert!((n - rho).abs() <= 1e-10 * rho);
        prop_assert!(dn > 0.0);
        let (n_up, _, _) = electron_density(&m, phi + 1e-3).unwrap();
        prop_assert!(n_up > n);
    }

    #[test]
    fn uniform_ions_give_the_quasineutral_potential(m in model(), rho in 0.2..3.0f64, n in 4usize..60) {
        let sg = SpatialGrid::new(0.0, 10.0, n).unwrap();
        let phi = quasineutral_potential(rho, &m).unwrap();
        let s = solve_poisson(&vec![rho; n], &m, &sg, Some((phi, phi)), None, 1e-13).unwrap();
        for v in &s.field.values {
            prop_assert!((v - phi).abs() <= 1e-10 * (1.0 + phi.abs()));
        }
    }
}
