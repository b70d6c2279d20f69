//! Orchestration of a kinetic run: initial data, stepping to report times,
//! reports, snapshots and the manifest.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{energy_report, report_row, EnergyReport, ReferenceMaxwellian, ReportContext, REPORT_COLUMNS};
use crate::error::{Result, VpbError};
use crate::io::{read_snapshot, write_snapshot, write_table, RunConfig, RunManifest, Snapshot, SnapshotGrid};
use crate::phase_space::{maxwellian, DistributionField, FluidTriple, MacroProjector, SpatialGrid, VelocityGrid};
use crate::rarefaction::RarefactionProfile;
use crate::vpb_solver::{totals, KineticState, Simulation};

/// Compactly supported `cos²` bump of unit height.
pub fn bump(x: f64, center: f64, half_width: f64) -> f64 {
    let s = (x - center) / half_width;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (0.5 * std::f64::consts::PI * s).cos().powi(2)
    }
}

/// Maxwellian of the smooth profile at `t = 0` plus a seeded microscopic
/// perturbation `h` with `‖h‖_M = amplitude·bump(x)·√ρ` in every cell.
pub fn initial_field(
    profile: &RarefactionProfile,
    sg: &SpatialGrid,
    vg: &VelocityGrid,
    amplitude: f64,
    center: f64,
    half_width: f64,
    seed: u64,
) -> Result<DistributionField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // degree-2 and degree-3 monomials in the peculiar velocity
    let mut monomials: Vec<(Vec<usize>, f64)> = Vec::new();
    for i in 0..3 {
        for j in i..3 {
            monomials.push((vec![i, j], rng.gen_range(-1.0..1.0)));
            for k in j..3 {
                monomials.push((vec![i, j, k], rng.gen_range(-1.0..1.0)));
            }
        }
    }
    let mut f = DistributionField::zeros(sg.n_cells, vg.len());
    for c in 0..sg.n_cells {
        let x = sg.center(c);
        let r = profile.smooth(0.0, x)?;
        let p = FluidTriple::slab(r.rho, r.u1, r.theta)?;
        let m = maxwellian(&p, vg);
        let b = amplitude * bump(x, center, half_width);
        let cell = f.cell_mut(c);
        if b == 0.0 {
            cell.copy_from_slice(&m);
            continue;
        }
        let sq = p.theta.sqrt();
        let raw: Vec<f64> = vg
            .nodes()
            .iter()
            .zip(m.iter())
            .map(|(xi, mv)| {
                let cv = [(xi[0] - p.u[0]) / sq, xi[1] / sq, xi[2] / sq];
                mv * monomials
                    .iter()
                    .map(|(idx, a)| a * idx.iter().map(|&d| cv[d]).product::<f64>())
                    .sum::<f64>()
            })
            .collect();
        let proj = MacroProjector::new(&p, vg)?;
        let h = proj.project_p1(&raw);
        let norm = proj.norm(&h);
        let scale = if norm > 0.0 { b * p.rho.sqrt() / norm } else { 0.0 };
        for ((o, mv), hv) in cell.iter_mut().zip(m.iter()).zip(h.iter()) {
            *o = mv + scale * hv;
        }
        if let Some(v) = cell.iter().find(|v| **v < 0.0) {
            return Err(VpbError::Unphysical(format!(
                "perturbed initial data is negative ({v:e}) at x = {x}; lower the amplitude"
            )));
        }
    }
    Ok(f)
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub reports: Vec<EnergyReport>,
    pub final_state: KineticState,
    pub initial_totals: [f64; 5],
    /// Files written into the output directory, relative names.
    pub files: Vec<String>,
    pub elapsed_seconds: f64,
}

/// Assembled run objects shared by `simulate` and `report`.
pub struct RunSetup {
    pub sg: SpatialGrid,
    pub vg: VelocityGrid,
    pub profile: RarefactionProfile,
    pub sim: Simulation,
    pub mstar: ReferenceMaxwellian,
}

impl RunSetup {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let sg = cfg.spatial_grid()?;
        let vg = cfg.velocity_grid()?;
        let model = cfg.electron_model()?;
        let profile = cfg.profile()?;
        let mut sim = Simulation::new(sg.clone(), vg.clone(), model, cfg.collision_config()?);
        sim.limiter = cfg.scheme.limiter;
        sim.poisson_tol = cfg.report.poisson_tol;
        let mstar = ReferenceMaxwellian::for_profile(&profile, &vg)?;
        Ok(Self {
            sg,
            vg,
            profile,
            sim,
            mstar,
        })
    }

    pub fn context<'a>(&'a self, cfg: &RunConfig, initial_totals: [f64; 5]) -> ReportContext<'a> {
        ReportContext {
            sg: &self.sg,
            vg: &self.vg,
            model: &self.sim.model,
            collision: &self.sim.collision,
            profile: &self.profile,
            mstar: &self.mstar,
            initial_totals,
            with_gbar: cfg.report.gbar,
            gbar_tol: cfg.report.gbar_tol,
        }
    }

    pub fn initial_state(&self, cfg: &RunConfig) -> Result<KineticState> {
        let p = &cfg.perturbation;
        let f = initial_field(&self.profile, &self.sg, &self.vg, p.amplitude, p.center, p.half_width, cfg.seed)?;
        self.sim.initial_state(f)
    }
}

fn snapshot_name(k: usize) -> String {
    format!("snapshot_{k:04}.vpb")
}

/// Runs `cfg` to `t_end`, writing into `cfg.output`. With `restart`, continues
/// from a snapshot instead of the initial data.
pub fn run(cfg: &RunConfig, restart: Option<&Path>) -> Result<RunOutput> {
    let clock = Instant::now();
    let setup = RunSetup::new(cfg)?;
    let out_dir = cfg.output.clone();
    fs::create_dir_all(&out_dir)?;
    let grid = SnapshotGrid::of(&setup.sg, &setup.vg);

    let (mut state, initial_totals) = match restart {
        Some(path) => {
            let snap = read_snapshot(path)?;
            if snap.grid != grid {
                return Err(VpbError::Snapshot(format!(
                    "snapshot grid {:?} does not match the configuration {:?}",
                    snap.grid, grid
                )));
            }
            (snap.state, snap.initial_totals)
        }
        None => {
            let s = setup.initial_state(cfg)?;
            let tot = totals(&s.f, &setup.sg, &setup.vg);
            (s, tot)
        }
    };

    let ctx = setup.context(cfg, initial_totals);
    let mut targets: Vec<f64> = cfg.report.times.clone();
    if targets.last().map_or(true, |t| *t < cfg.scheme.t_end) {
        targets.push(cfg.scheme.t_end);
    }
    let mut files = vec!["config.toml".to_string()];
    fs::write(out_dir.join("config.toml"), cfg.to_toml())?;

    let mut reports = Vec::new();
    let mut rows = Vec::new();
    let snapshot = |k: usize, s: &KineticState, files: &mut Vec<String>| -> Result<()> {
        let name = snapshot_name(k);
        write_snapshot(
            &out_dir.join(&name),
            &Snapshot {
                grid,
                state: s.clone(),
                initial_totals,
            },
        )?;
        files.push(name);
        Ok(())
    };
    if restart.is_none() {
        let r = energy_report(&ctx, &state, None)?;
        rows.push(report_row(&r));
        reports.push(r);
        if cfg.report.snapshots {
            snapshot(0, &state, &mut files)?;
        }
    }
    let scheme = cfg.step_scheme();
    for (k, &target) in targets.iter().enumerate() {
        if target <= state.t * (1.0 + 1e-12) {
            continue;
        }
        let mut previous: Option<(DistributionField, f64)> = None;
        while target - state.t > 1e-12 * target {
            match setup.sim.step(&state, &scheme, target) {
                Ok(next) => {
                    let dt = next.t - state.t;
                    previous = Some((std::mem::replace(&mut state, next).f, dt));
                }
                Err(e) => {
                    let _ = write_snapshot(
                        &out_dir.join("checkpoint.vpb"),
                        &Snapshot {
                            grid,
                            state: state.clone(),
                            initial_totals,
                        },
                    );
                    return Err(e);
                }
            }
        }
        let r = energy_report(&ctx, &state, previous.as_ref().map(|(f, dt)| (f, *dt)))?;
        rows.push(report_row(&r));
        reports.push(r);
        if cfg.report.snapshots {
            snapshot(k + 1, &state, &mut files)?;
        }
    }
    let table = if restart.is_some() { "report_restart.tsv" } else { "report.tsv" };
    write_table(&out_dir.join(table), &REPORT_COLUMNS, &rows)?;
    files.push(table.to_string());
    let elapsed = clock.elapsed().as_secs_f64();
    let manifest = RunManifest::new(cfg, elapsed, state.step, &out_dir, &files)?;
    fs::write(out_dir.join("manifest.toml"), manifest.to_toml())?;
    Ok(RunOutput {
        reports,
        final_state: state,
        initial_totals,
        files,
        elapsed_seconds: elapsed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_config;

    fn small(dir: &Path) -> RunConfig {
        let text = format!(
            "output = {:?}\n[grid]\nx_min = -20.0\nx_max = 40.0\nn_x = 16\nn_v = 8\nv_half_width = 5.0\n\
             [scheme]\nt_end = 2.0\n[report]\ntimes = [1.0, 2.0]\ngbar = false\n[perturbation]\nhalf_width = 10.0\n",
            dir.to_string_lossy()
        );
        parse_config(&text).unwrap()
    }

    #[test]
    fn perturbation_is_microscopic_and_sized() {
        let cfg = parse_config("[grid]\nn_x = 8\nn_v = 10\nx_min = -4.0\nx_max = 4.0\n[perturbation]\namplitude = 0.01\nhalf_width = 4.0").unwrap();
        let setup = RunSetup::new(&cfg).unwrap();
        let f = setup.initial_state(&cfg).unwrap().f;
        for c in 0..8 {
            let x = setup.sg.center(c);
            let r = setup.profile.smooth(0.0, x).unwrap();
            let p = FluidTriple::slab(r.rho, r.u1, r.theta).unwrap();
            let proj = MacroProjector::new(&p, &setup.vg).unwrap();
            let h: Vec<f64> = f.cell(c).iter().zip(proj.maxwellian().iter()).map(|(a, b)| a - b).collect();
            let want = 0.01 * bump(x, 0.0, 4.0) * p.rho.sqrt();
            assert!((proj.norm(&h) - want).abs() < 1e-12 * (1.0 + want), "{c}");
            assert!(proj.norm(&proj.project_p0(&h)) < 1e-12);
        }
    }

    #[test]
    fn restart_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path());
        let full = run(&cfg, None).unwrap();
        let mut cfg2 = cfg.clone();
        cfg2.output = dir.path().join("restart");
        let again = run(&cfg2, Some(&dir.path().join("snapshot_0001.vpb"))).unwrap();
        assert_eq!(full.final_state, again.final_state);
        assert!(full.files.contains(&"manifest.toml".to_string()) || dir.path().join("manifest.toml").exists());
    }
}
