//! Stability functionals measured on kinetic states: relative entropy,
//! weighted perturbation norms, the distance to the centered wave, the
//! `J₇` sign functional and moment-budget audits.

use crate::collision::{d_dxi1, gbar_with, CollisionConfig, CollisionMode, LinearizedOperator};
use crate::error::{Result, VpbError};
use crate::field_solver::PotentialField;
use crate::phase_space::{
    fluid_from_moments, maxwellian, moments, DistributionField, DistributionSlice, FluidTriple, MacroProjector,
    SpatialGrid, VelocityGrid,
};
use crate::quasineutral::{electron_density, invert_density, ElectronDensityModel};
use crate::rarefaction::{ProfilePoint, RarefactionProfile};
use crate::vpb_solver::{totals, KineticState};

/// The global weight `M_*` of all microscopic norms.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMaxwellian {
    pub params: FluidTriple,
    values: DistributionSlice,
}

impl ReferenceMaxwellian {
    /// Checks `½·θ_max < θ_* < θ_min` for the profile's temperature range.
    pub fn new(params: FluidTriple, theta_range: (f64, f64), grid: &VelocityGrid) -> Result<Self> {
        let (lo, hi) = theta_range;
        if !(0.5 * hi < params.theta && params.theta < lo) {
            return Err(VpbError::InvalidInput(format!(
                "reference temperature {} outside (θ_max/2, θ_min) = ({}, {lo})",
                params.theta,
                0.5 * hi
            )));
        }
        Ok(Self {
            values: maxwellian(&params, grid),
            params,
        })
    }

    /// `θ_* = ½(½θ_max + θ_min)`, `ρ_*` and `u_*` at the midpoints of the end states.
    pub fn for_profile(p: &RarefactionProfile, grid: &VelocityGrid) -> Result<Self> {
        let (lo, hi) = (p.left.theta.min(p.right.theta), p.left.theta.max(p.right.theta));
        let params = FluidTriple::slab(
            0.5 * (p.left.rho + p.right.rho),
            0.5 * (p.left.u[0] + p.right.u[0]),
            0.5 * (0.5 * hi + lo),
        )?;
        Self::new(params, (lo, hi), grid)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `∫ f g / M_*`
    pub fn inner(&self, f: &[f64], g: &[f64], grid: &VelocityGrid) -> f64 {
        let mut acc = 0.0;
        for ((a, b), m) in f.iter().zip(g).zip(self.values.iter()) {
            acc += a * b / m;
        }
        acc * grid.cell_volume()
    }
}

fn big_phi(tau: f64) -> f64 {
    tau - tau.ln() - 1.0
}

/// `η = (2/3)θ^r Φ(v/v^r) + ½|u − u^r|² + θ^r Φ(θ/θ^r)` with `v = 1/ρ`.
pub fn entropy_density(f: &FluidTriple, r: &ProfilePoint) -> Result<f64> {
    if !(f.rho > 0.0 && f.theta > 0.0 && r.rho > 0.0 && r.theta > 0.0) {
        return Err(VpbError::Unphysical(
            "relative entropy needs positive densities and temperatures".into(),
        ));
    }
    let du = [f.u[0] - r.u1, f.u[1], f.u[2]];
    Ok(2.0 / 3.0 * r.theta * big_phi(r.rho / f.rho)
        + 0.5 * (du[0] * du[0] + du[1] * du[1] + du[2] * du[2])
        + r.theta * big_phi(f.theta / r.theta))
}

/// `∫ρη dx` by the midpoint rule on the cells.
pub fn relative_entropy(fluid: &[FluidTriple], profile: &[ProfilePoint], dx: f64) -> Result<f64> {
    if fluid.len() != profile.len() {
        return Err(VpbError::InvalidInput("relative_entropy: length mismatch".into()));
    }
    let mut acc = 0.0;
    for (f, r) in fluid.iter().zip(profile) {
        acc += f.rho * entropy_density(f, r)?;
    }
    Ok(acc * dx)
}

/// `½(φ̃², ∂ₓu₁^r (ρ_e ρ_e″ − ρ_e′²)/ρ_e′)` evaluated at `φ^r`.
pub fn j7_functional(phi_tilde: &[f64], profile: &[ProfilePoint], m: &ElectronDensityModel, dx: f64) -> Result<f64> {
    if phi_tilde.len() != profile.len() {
        return Err(VpbError::InvalidInput("j7_functional: length mismatch".into()));
    }
    let mut acc = 0.0;
    for (pt, r) in phi_tilde.iter().zip(profile) {
        if *pt == 0.0 || r.du1 == 0.0 {
            continue;
        }
        let (v, d, dd) = electron_density(m, r.phi)?;
        let dphi_drho = 1.0 / d;
        acc += 0.5 * pt * pt * (dd * dphi_drho * v * r.du1 - d * r.du1);
    }
    Ok(acc * dx)
}

/// Cell-wise `‖F − M_R‖_{L²_ξ(1/√M_*)}` and `|φ − ρ_e⁻¹(ρ^R)|`.
pub fn cellwise_distances(
    f: &DistributionField,
    phi: &PotentialField,
    centered: &[ProfilePoint],
    mstar: &ReferenceMaxwellian,
    m: &ElectronDensityModel,
    grid: &VelocityGrid,
) -> Result<Vec<(f64, f64)>> {
    f.cells()
        .zip(centered)
        .zip(&phi.values)
        .map(|((cell, r), p)| {
            let target = maxwellian(&FluidTriple::slab(r.rho, r.u1, r.theta)?, grid);
            let d: Vec<f64> = cell.iter().zip(target.iter()).map(|(a, b)| a - b).collect();
            Ok((mstar.inner(&d, &d, grid).sqrt(), (p - invert_density(m, r.rho)?).abs()))
        })
        .collect()
}

/// `sup_x ‖F − M_{[ρ^R,u^R,θ^R](x/t)}‖` and `sup_x |φ − ρ_e⁻¹(ρ^R(x/t))|`, streamed over cells.
pub fn convergence_metric(
    f: &DistributionField,
    phi: &PotentialField,
    centered: &[ProfilePoint],
    mstar: &ReferenceMaxwellian,
    m: &ElectronDensityModel,
    grid: &VelocityGrid,
) -> Result<(f64, f64)> {
    let mut out = (0.0f64, 0.0f64);
    for ((cell, r), p) in f.cells().zip(centered).zip(&phi.values) {
        let target = maxwellian(&FluidTriple::slab(r.rho, r.u1, r.theta)?, grid);
        let mut acc = 0.0;
        for ((a, b), w) in cell.iter().zip(target.iter()).zip(mstar.values()) {
            acc += (a - b) * (a - b) / w;
        }
        out.0 = out.0.max((acc * grid.cell_volume()).sqrt());
        out.1 = out.1.max((p - invert_density(m, r.rho)?).abs());
    }
    Ok(out)
}

/// `Ḡ = (3/2θ) L⁻¹P₁[ξ₁M(ξ₁∂ₓu₁^r + |ξ−u|²/(2θ)∂ₓθ^r)]` for one cell.
/// In BGK mode `L = −rate·P₁` on the microscopic subspace.
pub fn gbar_cell(
    fluid: &FluidTriple,
    r: &ProfilePoint,
    grid: &VelocityGrid,
    c: &CollisionConfig,
    tol: f64,
) -> Result<DistributionSlice> {
    match c.mode {
        CollisionMode::HardSphere => {
            let op = LinearizedOperator::new(fluid, grid, c)?;
            gbar_with(&op, r.du1, r.dtheta, tol)
        }
        CollisionMode::BgkSurrogate => {
            let proj = MacroProjector::new(fluid, grid)?;
            let m = proj.maxwellian();
            let src: Vec<f64> = grid
                .nodes()
                .iter()
                .zip(m.iter())
                .map(|(x, mv)| {
                    let c2 = (x[0] - fluid.u[0]).powi(2) + (x[1] - fluid.u[1]).powi(2) + (x[2] - fluid.u[2]).powi(2);
                    x[0] * mv * (x[0] * r.du1 + c2 / (2.0 * fluid.theta) * r.dtheta)
                })
                .collect();
            Ok(proj.project_p1(&src).scaled(-3.0 / (2.0 * fluid.theta * c.bgk_rate)))
        }
    }
}

/// Diagnostics at one report time.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    pub rel_entropy: f64,
    /// `L²` norms of `[ρ̃, ũ, θ̃, φ̃]`.
    pub pert_l2: [f64; 4],
    /// `L²` norms of the `x`-differences of `[ρ̃, ũ, θ̃, φ̃]`.
    pub dx_pert_l2: [f64; 4],
    /// `L²` norm of `S̃ = −(2/3)ln(ρ/ρ^r) + ln(θ/θ^r)`.
    pub s_tilde_l2: f64,
    pub g_weighted: f64,
    pub gtilde_weighted: f64,
    pub gbar_weighted: f64,
    pub dxi_gtilde_weighted: f64,
    /// `∫∫|∂ₜF|²/M_*` from the last step (NaN when unavailable).
    pub dtf_weighted: f64,
    pub conv_metric: f64,
    pub phi_conv: f64,
    pub j7: f64,
    pub totals: [f64; 5],
    pub outflow: [f64; 5],
    pub electric: [f64; 5],
    pub mass_drift: f64,
    pub momentum_drift: f64,
    pub energy_drift: f64,
    pub min_value: f64,
}

/// Everything a report needs besides the state itself.
#[derive(Debug, Clone)]
pub struct ReportContext<'a> {
    pub sg: &'a SpatialGrid,
    pub vg: &'a VelocityGrid,
    pub model: &'a ElectronDensityModel,
    pub collision: &'a CollisionConfig,
    pub profile: &'a RarefactionProfile,
    pub mstar: &'a ReferenceMaxwellian,
    /// Totals at `t = 0`, the reference of the drift columns.
    pub initial_totals: [f64; 5],
    /// Compute `Ḡ` (one linear solve per cell in hard-sphere mode).
    pub with_gbar: bool,
    pub gbar_tol: f64,
}

/// Smooth profile at the cell centres.
pub fn profile_on_grid(p: &RarefactionProfile, sg: &SpatialGrid, t: f64) -> Result<Vec<ProfilePoint>> {
    sg.centers().iter().map(|&x| p.smooth(t, x)).collect()
}

/// Centered wave at `x/t`; at `t = 0` the Riemann data.
pub fn centered_on_grid(p: &RarefactionProfile, sg: &SpatialGrid, t: f64) -> Result<Vec<ProfilePoint>> {
    sg.centers()
        .iter()
        .map(|&x| {
            let xi = if t > 0.0 {
                x / t
            } else if x > 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
            p.centered(xi)
        })
        .collect()
}

fn l2(v: &[f64], dx: f64) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() * dx).sqrt()
}

fn diff_l2(v: &[f64], dx: f64) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let d: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                (v[1] - v[0]) / dx
            } else if i == n - 1 {
                (v[n - 1] - v[n - 2]) / dx
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * dx)
            }
        })
        .collect();
    l2(&d, dx)
}

fn drift(now: f64, start: f64, outflow: f64, source: f64) -> f64 {
    let scale = start.abs().max(now.abs()) + outflow.abs() + source.abs();
    if scale == 0.0 {
        0.0
    } else {
        (now - start + outflow - source) / scale
    }
}

/// Assembles an [`EnergyReport`]; `previous` is the field one step earlier with that step's `dt`.
pub fn energy_report(
    ctx: &ReportContext<'_>,
    s: &KineticState,
    previous: Option<(&DistributionField, f64)>,
) -> Result<EnergyReport> {
    let (sg, vg) = (ctx.sg, ctx.vg);
    let dx = sg.dx;
    let profile = profile_on_grid(ctx.profile, sg, s.t)?;
    let centered = centered_on_grid(ctx.profile, sg, s.t)?;
    let fluid: Vec<FluidTriple> = s
        .f
        .cells()
        .map(|c| fluid_from_moments(&moments(c, vg)))
        .collect::<Result<_>>()?;
    let n = fluid.len();
    let rho_t: Vec<f64> = (0..n).map(|i| fluid[i].rho - profile[i].rho).collect();
    let u_t: Vec<f64> = (0..n)
        .map(|i| {
            let d = [fluid[i].u[0] - profile[i].u1, fluid[i].u[1], fluid[i].u[2]];
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
        })
        .collect();
    let u1_t: Vec<f64> = (0..n).map(|i| fluid[i].u[0] - profile[i].u1).collect();
    let th_t: Vec<f64> = (0..n).map(|i| fluid[i].theta - profile[i].theta).collect();
    let phi_t: Vec<f64> = (0..n).map(|i| s.phi.values[i] - profile[i].phi).collect();
    let s_t: Vec<f64> = (0..n)
        .map(|i| -(2.0 / 3.0) * (fluid[i].rho / profile[i].rho).ln() + (fluid[i].theta / profile[i].theta).ln())
        .collect();

    let mut g_w = 0.0;
    let mut gt_w = 0.0;
    let mut gb_w = 0.0;
    let mut dxi_w = 0.0;
    for (c, cell) in s.f.cells().enumerate() {
        let m = maxwellian(&fluid[c], vg);
        let g: Vec<f64> = cell.iter().zip(m.iter()).map(|(a, b)| a - b).collect();
        g_w += ctx.mstar.inner(&g, &g, vg) * dx;
        let gt: Vec<f64> = if ctx.with_gbar && (profile[c].du1 != 0.0 || profile[c].dtheta != 0.0) {
            let gb = gbar_cell(&fluid[c], &profile[c], vg, ctx.collision, ctx.gbar_tol)?;
            gb_w += ctx.mstar.inner(&gb, &gb, vg) * dx;
            g.iter().zip(gb.iter()).map(|(a, b)| a - b).collect()
        } else {
            g
        };
        gt_w += ctx.mstar.inner(&gt, &gt, vg) * dx;
        let dg = d_dxi1(&gt, vg);
        dxi_w += ctx.mstar.inner(&dg, &dg, vg) * dx;
    }
    let dtf_weighted = match previous {
        Some((prev, dt)) if dt > 0.0 => {
            let mut acc = 0.0;
            for (a, b) in s.f.cells().zip(prev.cells()) {
                let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) / dt).collect();
                acc += ctx.mstar.inner(&d, &d, vg) * dx;
            }
            acc
        }
        _ => f64::NAN,
    };
    let (conv_metric, phi_conv) = convergence_metric(&s.f, &s.phi, &centered, ctx.mstar, ctx.model, vg)?;
    let tot = totals(&s.f, sg, vg);
    let b = &s.budget;
    let init = ctx.initial_totals;
    Ok(EnergyReport {
        t: s.t,
        rel_entropy: relative_entropy(&fluid, &profile, dx)?,
        pert_l2: [l2(&rho_t, dx), l2(&u_t, dx), l2(&th_t, dx), l2(&phi_t, dx)],
        dx_pert_l2: [diff_l2(&rho_t, dx), diff_l2(&u1_t, dx), diff_l2(&th_t, dx), diff_l2(&phi_t, dx)],
        s_tilde_l2: l2(&s_t, dx),
        g_weighted: g_w,
        gtilde_weighted: gt_w,
        gbar_weighted: gb_w,
        dxi_gtilde_weighted: dxi_w,
        dtf_weighted,
        conv_metric,
        phi_conv,
        j7: j7_functional(&phi_t, &profile, ctx.model, dx)?,
        totals: tot,
        outflow: b.boundary_outflow,
        electric: b.electric_source,
        mass_drift: drift(tot[0], init[0], b.boundary_outflow[0], b.electric_source[0]),
        momentum_drift: drift(tot[1], init[1], b.boundary_outflow[1], b.electric_source[1]),
        energy_drift: drift(tot[4], init[4], b.boundary_outflow[4], b.electric_source[4]),
        min_value: s.f.as_slice().iter().fold(f64::INFINITY, |a, v| a.min(*v)),
    })
}

/// Normalized budget residuals `[mass, momentum, energy]` between two reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditReport {
    pub t0: f64,
    pub t1: f64,
    pub residuals: [f64; 3],
}

/// Compares `Δ∫ψF` with the boundary outflow and electric source over each
/// consecutive pair of reports in `window`.
pub fn conservation_audit(window: &[EnergyReport]) -> Result<Vec<AuditReport>> {
    if window.len() < 2 {
        return Err(VpbError::InvalidInput("conservation audit needs at least two reports".into()));
    }
    Ok(window
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let r = |k: usize| {
                drift(
                    b.totals[k],
                    a.totals[k],
                    b.outflow[k] - a.outflow[k],
                    b.electric[k] - a.electric[k],
                )
            };
            AuditReport {
                t0: a.t,
                t1: b.t,
                residuals: [r(0), r(1), r(4)],
            }
        })
        .collect())
}

/// Column names of the report table, in the order of [`report_row`].
pub const REPORT_COLUMNS: [&str; 32] = [
    "t",
    "rel_entropy",
    "rho_tilde_l2",
    "u_tilde_l2",
    "theta_tilde_l2",
    "phi_tilde_l2",
    "dx_rho_tilde_l2",
    "dx_u1_tilde_l2",
    "dx_theta_tilde_l2",
    "dx_phi_tilde_l2",
    "s_tilde_l2",
    "g_weighted",
    "gtilde_weighted",
    "gbar_weighted",
    "dxi_gtilde_weighted",
    "dtf_weighted",
    "conv_metric",
    "phi_conv",
    "j7",
    "mass",
    "momentum1",
    "energy",
    "outflow_mass",
    "outflow_momentum1",
    "outflow_energy",
    "electric_momentum1",
    "electric_energy",
    "mass_drift",
    "momentum_drift",
    "energy_drift",
    "min_value",
    "momentum23",
];

pub fn report_row(r: &EnergyReport) -> Vec<f64> {
    vec![
        r.t,
        r.rel_entropy,
        r.pert_l2[0],
        r.pert_l2[1],
        r.pert_l2[2],
        r.pert_l2[3],
        r.dx_pert_l2[0],
        r.dx_pert_l2[1],
        r.dx_pert_l2[2],
        r.dx_pert_l2[3],
        r.s_tilde_l2,
        r.g_weighted,
        r.gtilde_weighted,
        r.gbar_weighted,
        r.dxi_gtilde_weighted,
        r.dtf_weighted,
        r.conv_metric,
        r.phi_conv,
        r.j7,
        r.totals[0],
        r.totals[1],
        r.totals[4],
        r.outflow[0],
        r.outflow[1],
        r.outflow[4],
        r.electric[1],
        r.electric[4],
        r.mass_drift,
        r.momentum_drift,
        r.energy_drift,
        r.min_value,
        r.totals[2].abs().max(r.totals[3].abs()),
    ]
}

/// Potential perturbation `φ − φ^r` on the grid.
pub fn phi_tilde(phi: &PotentialField, profile: &[ProfilePoint]) -> Vec<f64> {
    phi.values.iter().zip(profile).map(|(a, b)| a - b.phi).collect()
}
