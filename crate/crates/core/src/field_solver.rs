//! Nonlinear Poisson equation `−∂ₓ²φ = ρ − ρ_e(φ)` on a cell-centred grid
//! with Dirichlet far-field potentials at the box faces.

use crate::error::{Result, VpbError};
use crate::phase_space::SpatialGrid;
use crate::quasineutral::{electron_density, invert_density, ElectronDensityKind, ElectronDensityModel};
use crate::rarefaction::ProfilePoint;

const MAX_NEWTON: usize = 100;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub values: Vec<f64>,
    pub bc_left: f64,
    pub bc_right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolve {
    pub field: PotentialField,
    pub iterations: usize,
    /// Sup-norm of the discrete residual.
    pub residual: f64,
}

/// `−D²φ`, with ghosts from quadratic extrapolation through the face value.
fn neg_laplacian(phi: &[f64], bc: (f64, f64), dx: f64) -> Vec<f64> {
    let n = phi.len();
    let idx2 = 1.0 / (dx * dx);
    let mut out = vec![0.0; n];
    if n == 1 {
        out[0] = -(4.0 * (bc.0 + bc.1) - 8.0 * phi[0]) * idx2 / 2.0;
        return out;
    }
    out[0] = -((4.0 / 3.0) * phi[1] - 4.0 * phi[0] + (8.0 / 3.0) * bc.0) * idx2;
    out[n - 1] = -((4.0 / 3.0) * phi[n - 2] - 4.0 * phi[n - 1] + (8.0 / 3.0) * bc.1) * idx2;
    for i in 1..n - 1 {
        out[i] = -(phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) * idx2;
    }
    out
}

fn residual(phi: &[f64], rho: &[f64], m: &ElectronDensityModel, bc: (f64, f64), dx: f64) -> Result<Vec<f64>> {
    let mut r = neg_laplacian(phi, bc, dx);
    for i in 0..phi.len() {
        r[i] += electron_density(m, phi[i])?.0 - rho[i];
    }
    Ok(r)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Thomas algorithm; `lower[0]` and `upper[n−1]` are ignored.
pub(crate) fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(VpbError::Numerical("singular tridiagonal system".into()));
    }
    c[0] = if n > 1 { upper[0] / beta } else { 0.0 };
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 {
            return Err(VpbError::Numerical("singular tridiagonal system".into()));
        }
        if i + 1 < n {
            c[i] = upper[i] / beta;
        }
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Quasineutral potential `ρ_e⁻¹(ρ)` with `ρ` clamped into the model range.
pub fn quasineutral_potential(rho: f64, m: &ElectronDensityModel) -> Result<f64> {
    let (lo, hi) = m.density_range();
    let r = match m.kind {
        ElectronDensityKind::Tabulated(_) => rho.clamp(lo, hi),
        // open range (0, ∞)
        _ => rho.max(lo + f64::MIN_POSITIVE.sqrt()),
    };
    Ok(m.clamp_phi(invert_density(m, r)?))
}

/// Damped Newton with a monotone line search on the sup-norm residual.
/// `bc` defaults to the quasineutral potentials of the end cells and `guess`
/// to the quasineutral inversion of `rho`.
pub fn solve_poisson(
    rho: &[f64],
    m: &ElectronDensityModel,
    sg: &SpatialGrid,
    bc: Option<(f64, f64)>,
    guess: Option<&[f64]>,
    tol: f64,
) -> Result<PoissonSolve> {
    let n = sg.n_cells;
    if rho.len() != n {
        return Err(VpbError::InvalidInput(format!(
            "density has {} cells, grid has {n}",
            rho.len()
        )));
    }
    if rho.iter().any(|r| !r.is_finite()) {
        return Err(VpbError::Numerical("non-finite density passed to Poisson solver".into()));
    }
    let bc = match bc {
        Some(b) => b,
        None => (invert_density(m, rho[0])?, invert_density(m, rho[n - 1])?),
    };
    let mut phi: Vec<f64> = match guess {
        Some(g) if g.len() == n => g.iter().map(|&p| m.clamp_phi(p)).collect(),
        Some(g) => {
            return Err(VpbError::InvalidInput(format!(
                "initial guess has {} cells, grid has {n}",
                g.len()
            )))
        }
        None => rho
            .iter()
            .map(|&r| quasineutral_potential(r, m))
            .collect::<Result<_>>()?,
    };
    let dx = sg.dx;
    let idx2 = 1.0 / (dx * dx);
    let mut r = residual(&phi, rho, m, bc, dx)?;
    let mut rn = sup(&r);
    let mut it = 0;
    while rn > tol {
        if it >= MAX_NEWTON {
            return Err(VpbError::NoConvergence {
                context: "Poisson Newton".into(),
                iterations: it,
                residual: rn,
            });
        }
        it += 1;
        let mut lower = vec![-idx2; n];
        let mut upper = vec![-idx2; n];
        let mut diag = vec![2.0 * idx2; n];
        if n > 1 {
            diag[0] = 4.0 * idx2;
            diag[n - 1] = 4.0 * idx2;
            upper[0] = -(4.0 / 3.0) * idx2;
            lower[n - 1] = -(4.0 / 3.0) * idx2;
        } else {
            diag[0] = 4.0 * idx2;
        }
        for i in 0..n {
            diag[i] += electron_density(m, phi[i])?.1;
        }
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = thomas(&lower, &diag, &upper, &neg)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = phi.iter().zip(&step).map(|(p, s)| p + lambda * s).collect();
            if trial.iter().all(|&p| m.contains(p)) {
                if let Ok(rt) = residual(&trial, rho, m, bc, dx) {
                    let tn = sup(&rt);
                    if tn < rn {
                        phi = trial;
                        r = rt;
                        rn = tn;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            if rn <= 1e3 * tol.max(f64::EPSILON * sup(rho).max(1.0)) {
                break;
            }
            return Err(VpbError::NoConvergence {
                context: "Poisson Newton line search stagnated".into(),
                iterations: it,
                residual: rn,
            });
        }
    }
    Ok(PoissonSolve {
        field: PotentialField {
            values: phi,
            bc_left: bc.0,
            bc_right: bc.1,
        },
        iterations: it,
        residual: rn,
    })
}

/// Cell-wise `−∂ₓ²φ̃ − (ρ̃ + ρ_e(φ^r) − ρ_e(φ) + ∂ₓ²φ^r)` with `φ̃ = φ − φ^r`,
/// `ρ̃ = ρ − ρ^r`. `faces` holds the profile at the two box faces.
pub fn residual_tphy(
    phi: &PotentialField,
    profile: &[ProfilePoint],
    faces: (ProfilePoint, ProfilePoint),
    rho: &[f64],
    m: &ElectronDensityModel,
    sg: &SpatialGrid,
) -> Result<Vec<f64>> {
    let n = sg.n_cells;
    if phi.values.len() != n || profile.len() != n || rho.len() != n {
        return Err(VpbError::InvalidInput("residual_tphy: inconsistent grid sizes".into()));
    }
    let tilde: Vec<f64> = phi.values.iter().zip(profile).map(|(p, q)| p - q.phi).collect();
    let bc = (phi.bc_left - faces.0.phi, phi.bc_right - faces.1.phi);
    let lap = neg_laplacian(&tilde, bc, sg.dx);
    (0..n)
        .map(|i| {
            let q = &profile[i];
            let rhs = (rho[i] - q.rho) + electron_density(m, q.phi)?.0 - electron_density(m, phi.values[i])?.0 + q.d2phi;
            Ok(lap[i] - rhs)
        })
        .collect()
}
