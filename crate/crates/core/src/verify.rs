//! Self-check suites behind `vpblab verify`. Every check records its measured
//! value, bound and verdict; a failing check is report content, not an error.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::collision::{
    coercivity_ratio_with, q_collide, transport_coefficients, AngularQuadrature, CollisionConfig, CollisionKernel,
    Interpolation, LinearizedOperator,
};
use crate::diagnostics::{conservation_audit, j7_functional, profile_on_grid, relative_entropy};
use crate::error::{Result, VpbError};
use crate::field_solver::solve_poisson;
use crate::io::parse_config;
use crate::phase_space::{chi_basis, maxwellian, moments, FluidTriple, MacroProjector, SpatialGrid, VelocityGrid};
use crate::quasineutral::{check_assumption_a, electron_density, pphi_pressure, ElectronDensityModel};
use crate::rarefaction::{log_times, measure_decay, BurgersWave, DecaySubject, RarefactionProfile};

pub const SUITES: [&str; 8] = [
    "projections",
    "phase_space",
    "collision",
    "quasineutral",
    "rarefaction",
    "field_solver",
    "solver",
    "diagnostics",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(suite: &'static str, name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            suite,
            name: name.into(),
            value,
            relation: Relation::AtMost,
            bound,
            passed: value <= bound,
        }
    }

    pub fn at_least(suite: &'static str, name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            suite,
            name: name.into(),
            value,
            relation: Relation::AtLeast,
            bound,
            passed: value >= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One tab-separated line per check: suite, name, status, value, relation, bound.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("suite\tcheck\tstatus\tvalue\trelation\tbound\n");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{:.6e}\t{}\t{:.6e}",
                c.suite,
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.value,
                match c.relation {
                    Relation::AtMost => "<=",
                    Relation::AtLeast => ">=",
                },
                c.bound
            );
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let _ = writeln!(s, "# {} checks, {} failed", self.checks.len(), failed);
        s
    }
}

/// Runs one suite or `all`.
pub fn verify(selector: &str) -> Result<VerifyReport> {
    let chosen: Vec<&str> = if selector == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&selector) {
        vec![selector]
    } else {
        return Err(VpbError::InvalidInput(format!(
            "unknown suite `{selector}`; available: all, {}",
            SUITES.join(", ")
        )));
    };
    let mut report = VerifyReport::default();
    for s in chosen {
        let checks = match s {
            "projections" => projections(),
            "phase_space" => phase_space(),
            "collision" => collision(),
            "quasineutral" => quasineutral(),
            "rarefaction" => rarefaction(),
            "field_solver" => field_solver(),
            "solver" => solver(),
            _ => diagnostics(),
        };
        match checks {
            Ok(c) => report.checks.extend(c),
            Err(e) => report.checks.push(Check {
                suite: SUITES.iter().find(|n| **n == s).copied().unwrap_or("?"),
                name: format!("suite raised: {e}"),
                value: f64::NAN,
                relation: Relation::AtMost,
                bound: 0.0,
                passed: false,
            }),
        }
    }
    Ok(report)
}

fn random_h(rng: &mut ChaCha8Rng, p: &FluidTriple, grid: &VelocityGrid) -> Vec<f64> {
    let m = maxwellian(p, grid);
    let a: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    grid.nodes()
        .iter()
        .zip(m.iter())
        .map(|(x, mv)| {
            mv * (a[0] + a[1] * x[0] + a[2] * x[1] * x[2] + a[3] * x[0] * x[0] + a[4] * x[0].powi(3) + a[5] * rng.gen_range(-0.2..0.2))
        })
        .collect()
}

fn projections() -> Result<Vec<Check>> {
    const S: &str = "projections";
    let grid = VelocityGrid::new(5.0, 12)?;
    let p = FluidTriple::new(1.2, [0.3, -0.2, 0.1], 0.9)?;
    let proj = MacroProjector::new(&p, &grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut e0, mut e1, mut ex) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let h = random_h(&mut rng, &p, &grid);
        let n = proj.norm(&h);
        let p0 = proj.project_p0(&h);
        let p1 = proj.project_p1(&h);
        let d0: Vec<f64> = proj.project_p0(&p0).iter().zip(p0.iter()).map(|(a, b)| a - b).collect();
        let d1: Vec<f64> = proj.project_p1(&p1).iter().zip(p1.iter()).map(|(a, b)| a - b).collect();
        e0 = e0.max(proj.norm(&d0) / n);
        e1 = e1.max(proj.norm(&d1) / n);
        ex = ex.max(proj.inner(&p0, &p1).abs() / (n * n));
    }
    Ok(vec![
        Check::at_most(S, "P0 idempotent", e0, 1e-8),
        Check::at_most(S, "P1 idempotent", e1, 1e-8),
        Check::at_most(S, "P0h orthogonal to P1h", ex, 1e-8),
    ])
}

fn phase_space() -> Result<Vec<Check>> {
    const S: &str = "phase_space";
    let grid = VelocityGrid::new(7.0, 24)?;
    let mut worst = 0.0f64;
    let mut mom = 0.0f64;
    for (rho, u, th) in [(1.0, 0.0, 1.0), (0.7, 1.0, 0.5), (1.4, -0.6, 2.0)] {
        let p = FluidTriple::slab(rho, u, th)?;
        let m = maxwellian(&p, &grid);
        let chi = chi_basis(&p, &grid);
        for i in 0..5 {
            for j in 0..5 {
                let mut acc = 0.0;
                for ((a, b), w) in chi[i].iter().zip(chi[j].iter()).zip(m.iter()) {
                    acc += a * b / w;
                }
                acc *= grid.cell_volume();
                worst = worst.max((acc - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        let mm = moments(&m, &grid);
        mom = mom.max((mm.mass - rho).abs() / rho);
    }
    Ok(vec![
        Check::at_most(S, "chi orthonormality", worst, 1e-6),
        Check::at_most(S, "sampled Maxwellian mass", mom, 1e-6),
    ])
}

fn collision() -> Result<Vec<Check>> {
    const S: &str = "collision";
    let grid = VelocityGrid::new(4.9, 12)?;
    let ang = AngularQuadrature::lebedev(14)?;
    let c = CollisionConfig::hard_sphere(ang.clone());
    let p = FluidTriple::slab(1.0, 0.0, 1.0)?;
    let m = maxwellian(&p, &grid);
    let kernel = CollisionKernel::new(&grid, &ang);
    let (_, loss) = kernel.gain_loss(&m, &m, Interpolation::MaxwellianWeighted);
    let q = q_collide(&m, &m, &grid, &c)?;
    let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let eq = l2(&q) / l2(&loss);

    let a = maxwellian(&FluidTriple::slab(0.6, -0.5, 0.8)?, &grid);
    let b = maxwellian(&FluidTriple::slab(0.4, 0.7, 1.1)?, &grid);
    let f: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x + y).collect();
    let qf = q_collide(&f, &f, &grid, &c)?;
    let (_, lf) = kernel.gain_loss(&f, &f, Interpolation::MaxwellianWeighted);
    let mq = moments(&qf, &grid).as_array();
    let ml = moments(&lf, &grid);
    let inv = [mq[0].abs() / ml.mass, mq[1].abs() / ml.mass.max(1e-300), mq[4].abs() / ml.energy];
    let inv_max = inv.iter().fold(0.0f64, |x, v| x.max(*v));

    let coarse = VelocityGrid::new(4.9, 10)?;
    let t1 = transport_coefficients(1.0, &coarse, &c, 1e-10)?;
    let t2 = transport_coefficients(2.0, &VelocityGrid::new(4.9 * 2f64.sqrt(), 10)?, &c, 1e-10)?;

    let op = LinearizedOperator::new(&p, &coarse, &c)?;
    let mstar = FluidTriple::slab(1.0, 0.0, 0.75)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut delta = f64::INFINITY;
    for _ in 0..10 {
        let h = op.projector().project_p1(&random_h(&mut rng, &p, &coarse));
        delta = delta.min(coercivity_ratio_with(&op, &h, &mstar)?);
    }
    Ok(vec![
        Check::at_most(S, "equilibrium |Q(M,M)|/|loss| at 12^3", eq, 1e-2),
        Check::at_most(S, "collision invariants of Q(F,F) at 12^3 (reported)", inv_max, 1e-3),
        Check::at_least(S, "viscosity at theta=1", t1.mu, f64::MIN_POSITIVE),
        Check::at_least(S, "conductivity at theta=1", t1.kappa, f64::MIN_POSITIVE),
        Check::at_most(S, "viscosity scaling mu(2)/mu(1) - sqrt 2", (t2.mu / t1.mu - 2f64.sqrt()).abs(), 0.1 * 2f64.sqrt()),
        Check::at_least(S, "coercivity estimate", delta, f64::MIN_POSITIVE),
    ])
}

fn quasineutral() -> Result<Vec<Check>> {
    const S: &str = "quasineutral";
    let mut out = Vec::new();
    let models = [
        ("boltzmann", ElectronDensityModel::boltzmann(1.0)?),
        ("gamma 1.2", ElectronDensityModel::general_gamma(1.2, 1.0)?),
        ("gamma 2", ElectronDensityModel::general_gamma(2.0, 1.0)?),
        ("gamma 3", ElectronDensityModel::general_gamma(3.0, 1.0)?),
    ];
    for (name, m) in &models {
        let rep = check_assumption_a(m, 400);
        out.push(Check::at_most(S, format!("{name}: closure conditions"), if rep.passed { 0.0 } else { 1.0 }, 0.0));
        let (mut d1_min, mut d2_min) = (f64::INFINITY, f64::INFINITY);
        for k in 0..20 {
            let rho = 0.3 + 0.15 * k as f64;
            let (_, d1, d2) = pphi_pressure(m, rho, 1.0)?;
            d1_min = d1_min.min(d1);
            d2_min = d2_min.min(d2);
        }
        out.push(Check::at_least(S, format!("{name}: min dP/drho"), d1_min, f64::MIN_POSITIVE));
        out.push(Check::at_least(S, format!("{name}: min d2P/drho2"), d2_min, -1e-12));
    }
    let mut dev = 0.0f64;
    for k in 0..20 {
        let (_, d1, _) = pphi_pressure(&models[0].1, 0.3 + 0.15 * k as f64, 1.0)?;
        dev = dev.max((d1 - 1.0).abs());
    }
    out.push(Check::at_most(S, "boltzmann: dP/drho = A_e", dev, 1e-12));
    Ok(out)
}

fn rarefaction() -> Result<Vec<Check>> {
    const S: &str = "rarefaction";
    let b = BurgersWave::new(0.0, 1.0, 0.1)?;
    let times = log_times(10.0, 1000.0, 11);
    let sub = DecaySubject::Burgers(&b);
    let inf = measure_decay(&sub, f64::INFINITY, &times, 1)?;
    let one = measure_decay(&sub, 1.0, &times, 1)?;
    let l1 = one.norms.iter().fold(0.0f64, |a, (_, n)| a.max((n - 1.0).abs()));
    let m = ElectronDensityModel::general_gamma(2.0, 1.0)?;
    let prof = RarefactionProfile::from_left(FluidTriple::slab(1.0, 0.0, 1.0)?, 1.3, &m, 0.2)?;
    let mut lam = 0.0f64;
    for k in 0..41 {
        let x = -20.0 + k as f64 * 3.0;
        let pt = prof.smooth(10.0, x)?;
        let (l, _) = prof.curve.lambda3_at(pt.rho)?;
        lam = lam.max((l - pt.w).abs());
    }
    Ok(vec![
        Check::at_most(S, "sup-norm slope + 1", (inf.slope + 1.0).abs(), 0.05),
        Check::at_most(S, "L1 norm - wave strength", l1, 1e-8),
        Check::at_most(S, "lambda3(profile) - w", lam, 1e-9),
    ])
}

fn field_solver() -> Result<Vec<Check>> {
    const S: &str = "field_solver";
    let m = ElectronDensityModel::general_gamma(2.0, 1.0)?;
    let err = |n: usize| -> Result<f64> {
        let sg = SpatialGrid::new(-4.0, 4.0, n)?;
        let f = |x: f64| 0.4 * x.tanh() + 0.2;
        let f2 = |x: f64| {
            let t = x.tanh();
            -0.8 * t * (1.0 - t * t)
        };
        let rho = sg
            .centers()
            .iter()
            .map(|&x| Ok(electron_density(&m, f(x))?.0 - f2(x)))
            .collect::<Result<Vec<f64>>>()?;
        let s = solve_poisson(&rho, &m, &sg, Some((f(-4.0), f(4.0))), None, 1e-13)?;
        Ok(sg.centers().iter().zip(&s.field.values).fold(0.0f64, |a, (&x, p)| a.max((p - f(x)).abs())))
    };
    let order = (err(64)? / err(128)?).log2();
    let sg = SpatialGrid::new(0.0, 10.0, 50)?;
    let rho = 1.2;
    let phi = crate::field_solver::quasineutral_potential(rho, &m)?;
    let s = solve_poisson(&vec![rho; 50], &m, &sg, Some((phi, phi)), None, 1e-13)?;
    Ok(vec![
        Check::at_most(S, "manufactured order - 2", (order - 2.0).abs(), 0.1),
        Check::at_most(S, "quasineutral equilibrium residual", s.residual, 1e-12),
    ])
}

fn solver() -> Result<Vec<Check>> {
    const S: &str = "solver";
    let dir = std::env::temp_dir().join(format!("vpblab-verify-{}", std::process::id()));
    let text = format!(
        "output = {:?}\n[grid]\nx_min = -20.0\nx_max = 60.0\nn_x = 32\nn_v = 10\nv_half_width = 5.0\n\
         [scheme]\nt_end = 4.0\n[report]\ntimes = [2.0, 4.0]\ngbar = false\nsnapshots = false\n\
         [perturbation]\namplitude = 0.001\nhalf_width = 10.0\n",
        dir.to_string_lossy()
    );
    let cfg = parse_config(&text)?;
    let out = crate::run::run(&cfg, None)?;
    let _ = std::fs::remove_dir_all(&dir);
    let audit = conservation_audit(&out.reports)?;
    let worst = |k: usize| audit.iter().fold(0.0f64, |a, r| a.max(r.residuals[k].abs()));
    Ok(vec![
        Check::at_most(S, "mass budget", worst(0), 1e-8),
        Check::at_most(S, "momentum budget", worst(1), 1e-2),
        Check::at_most(S, "energy budget", worst(2), 1e-2),
        Check::at_least(S, "min F", out.final_state.min_value, 0.0),
    ])
}

fn diagnostics() -> Result<Vec<Check>> {
    const S: &str = "diagnostics";
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::NEG_INFINITY;
    let mut boltz = 0.0f64;
    let sg = SpatialGrid::new(-10.0, 40.0, 100)?;
    for (name, m) in [
        ("boltzmann", ElectronDensityModel::boltzmann(1.0)?),
        ("gamma", ElectronDensityModel::general_gamma(2.0, 1.0)?),
    ] {
        let prof = RarefactionProfile::from_left(FluidTriple::slab(1.0, 0.0, 1.0)?, 1.3, &m, 0.5)?;
        let pts = profile_on_grid(&prof, &sg, 5.0)?;
        for _ in 0..20 {
            let phi: Vec<f64> = (0..sg.n_cells).map(|_| rng.gen_range(-0.1..0.1)).collect();
            let j = j7_functional(&phi, &pts, &m, sg.dx)?;
            let scale = phi.iter().map(|v| v * v).sum::<f64>() * sg.dx;
            if name == "boltzmann" {
                boltz = boltz.max(j.abs() / scale);
            }
            worst = worst.max(j);
        }
    }
    let m = ElectronDensityModel::general_gamma(2.0, 1.0)?;
    let prof = RarefactionProfile::from_left(FluidTriple::slab(1.0, 0.0, 1.0)?, 1.3, &m, 0.5)?;
    let pts = profile_on_grid(&prof, &sg, 5.0)?;
    let fluid = pts
        .iter()
        .map(|p| FluidTriple::slab(p.rho, p.u1, p.theta))
        .collect::<Result<Vec<_>>>()?;
    let e = relative_entropy(&fluid, &pts, sg.dx)?;
    Ok(vec![
        Check::at_most(S, "J7 maximum", worst, 0.0),
        Check::at_most(S, "|J7|/|phi|^2 for boltzmann", boltz, 1e-10),
        Check::at_most(S, "relative entropy on the profile", e.abs(), 1e-14),
    ])
}
