//! Electron density closures, the pressure induced by the potential under
//! quasineutrality, characteristic speeds of the quasineutral Euler system and
//! the 3-rarefaction wave curve.

use crate::error::{Result, VpbError};
use crate::quadrature::{integrate, monotone_root};

/// `k = 1/(2πe)` in the entropy relation `P = k e^S ρ^{5/3}`.
pub const ENTROPY_K: f64 = 1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::E);

const QUAD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ElectronDensityKind {
    /// `ρ_e = [1 + ((γ−1)/γ) φ/A]^{1/(γ−1)}`; `γ = 1` is the Boltzmann limit.
    GeneralGamma { gamma_e: f64, a_e: f64 },
    /// `ρ_e = exp(φ/A)`.
    Boltzmann { a_e: f64 },
    /// Monotone cubic (Fritsch-Carlson) interpolant through `(φ_k, ρ_k)`.
    Tabulated(Table),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    phi: Vec<f64>,
    rho: Vec<f64>,
    slope: Vec<f64>,
}

impl Table {
    fn new(phi: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        if phi.len() < 2 || phi.len() != rho.len() {
            return Err(VpbError::InvalidInput(
                "electron density table needs at least two (phi, rho) rows".into(),
            ));
        }
        if phi.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(VpbError::InvalidInput(
                "electron density table must have strictly increasing phi".into(),
            ));
        }
        if phi.iter().chain(&rho).any(|v| !v.is_finite()) {
            return Err(VpbError::InvalidInput("electron density table has non-finite entries".into()));
        }
        let n = phi.len();
        let h: Vec<f64> = phi.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (rho[k + 1] - rho[k]) / h[k]).collect();
        let mut slope = vec![0.0; n];
        slope[0] = delta[0];
        slope[n - 1] = delta[n - 2];
        for k in 1..n - 1 {
            if delta[k - 1] * delta[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                slope[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
        }
        Ok(Self { phi, rho, slope })
    }

    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.phi.len();
        let k = match self.phi.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let h = self.phi[k + 1] - self.phi[k];
        let t = (x - self.phi[k]) / h;
        let (y0, y1) = (self.rho[k], self.rho[k + 1]);
        let (m0, m1) = (self.slope[k] * h, self.slope[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1;
        let d = ((6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * y1 + (3.0 * t2 - 2.0 * t) * m1) / h;
        let dd = ((12.0 * t - 6.0) * y0 + (6.0 * t - 4.0) * m0 + (-12.0 * t + 6.0) * y1 + (6.0 * t - 2.0) * m1) / (h * h);
        (v, d, dd)
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.phi.iter().copied().zip(self.rho.iter().copied())
    }
}

/// `ρ_e(φ)` together with its admissible potential interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectronDensityModel {
    pub kind: ElectronDensityKind,
    pub phi_min: f64,
    pub phi_max: f64,
}

impl ElectronDensityModel {
    pub fn general_gamma(gamma_e: f64, a_e: f64) -> Result<Self> {
        if !(gamma_e >= 1.0) || !gamma_e.is_finite() || !(a_e > 0.0) || !a_e.is_finite() {
            return Err(VpbError::InvalidInput(format!(
                "general_gamma needs gamma_e >= 1 and A_e > 0, got gamma_e={gamma_e}, A_e={a_e}"
            )));
        }
        let phi_min = if gamma_e == 1.0 {
            f64::NEG_INFINITY
        } else {
            -gamma_e * a_e / (gamma_e - 1.0)
        };
        Ok(Self {
            kind: ElectronDensityKind::GeneralGamma { gamma_e, a_e },
            phi_min,
            phi_max: f64::INFINITY,
        })
    }

    pub fn boltzmann(a_e: f64) -> Result<Self> {
        if !(a_e > 0.0) || !a_e.is_finite() {
            return Err(VpbError::InvalidInput(format!("boltzmann needs A_e > 0, got {a_e}")));
        }
        Ok(Self {
            kind: ElectronDensityKind::Boltzmann { a_e },
            phi_min: f64::NEG_INFINITY,
            phi_max: f64::INFINITY,
        })
    }

    /// The density range is taken from the table ends; values in between use a
    /// monotone cubic interpolant.
    pub fn tabulated(phi: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        let t = Table::new(phi, rho)?;
        let (lo, hi) = (t.phi[0], *t.phi.last().unwrap());
        Ok(Self {
            kind: ElectronDensityKind::Tabulated(t),
            phi_min: lo,
            phi_max: hi,
        })
    }

    pub fn contains(&self, phi: f64) -> bool {
        match self.kind {
            ElectronDensityKind::Tabulated(_) => phi >= self.phi_min && phi <= self.phi_max,
            _ => phi > self.phi_min && phi < self.phi_max,
        }
    }

    /// Open density interval `(ρ_m, ρ_M)` covered by the model.
    pub fn density_range(&self) -> (f64, f64) {
        match &self.kind {
            ElectronDensityKind::Tabulated(t) => {
                let lo = t.rho.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = t.rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
            _ => (0.0, f64::INFINITY),
        }
    }

    /// Clamps a potential into the admissible interval (used for initial guesses).
    pub fn clamp_phi(&self, phi: f64) -> f64 {
        let span = 1e-9 * (1.0 + phi.abs());
        let lo = if self.phi_min.is_finite() { self.phi_min + span } else { f64::NEG_INFINITY };
        let hi = if self.phi_max.is_finite() { self.phi_max - span } else { f64::INFINITY };
        phi.clamp(lo, hi)
    }
}

/// `(ρ_e, ρ_e′, ρ_e″)` at `phi`.
pub fn electron_density(m: &ElectronDensityModel, phi: f64) -> Result<(f64, f64, f64)> {
    if !m.contains(phi) || !phi.is_finite() {
        return Err(VpbError::InvalidInput(format!(
            "potential {phi} outside the model domain ({}, {})",
            m.phi_min, m.phi_max
        )));
    }
    Ok(match &m.kind {
        ElectronDensityKind::Boltzmann { a_e } => {
            let v = (phi / a_e).exp();
            (v, v / a_e, v / (a_e * a_e))
        }
        ElectronDensityKind::GeneralGamma { gamma_e, a_e } if *gamma_e == 1.0 => {
            let v = (phi / a_e).exp();
            (v, v / a_e, v / (a_e * a_e))
        }
        ElectronDensityKind::GeneralGamma { gamma_e, a_e } => {
            let g = *gamma_e;
            let ga = g * a_e;
            let b = 1.0 + (g - 1.0) / g * phi / a_e;
            let v = b.powf(1.0 / (g - 1.0));
            let d = b.powf((2.0 - g) / (g - 1.0)) / ga;
            let dd = (2.0 - g) * b.powf((3.0 - 2.0 * g) / (g - 1.0)) / (ga * ga);
            (v, d, dd)
        }
        ElectronDensityKind::Tabulated(t) => t.eval(phi),
    })
}

/// Worst-case margins of the three closure conditions over a sample of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// `|ρ_e(0) − 1|` (infinite if 0 is outside the domain).
    pub normalization_error: f64,
    pub min_density: f64,
    pub min_slope: f64,
    pub min_slope_phi: f64,
    /// Minimum of `(ρ_e′² − ρ_e ρ_e″)/ρ_e′²`.
    pub min_log_concavity: f64,
    pub min_log_concavity_phi: f64,
    pub passed: bool,
}

/// Samples the domain (infinite ends truncated to a window of ±20·scale)
/// and reports the three closure margins.
pub fn check_assumption_a(m: &ElectronDensityModel, n_samples: usize) -> AssumptionReport {
    let scale = match &m.kind {
        ElectronDensityKind::Boltzmann { a_e } => *a_e,
        ElectronDensityKind::GeneralGamma { gamma_e, a_e } => gamma_e * a_e,
        ElectronDensityKind::Tabulated(_) => 1.0,
    };
    let lo = if m.phi_min.is_finite() { m.phi_min } else { -20.0 * scale };
    let hi = if m.phi_max.is_finite() { m.phi_max } else { 20.0 * scale };
    let n = n_samples.max(2);
    let open = !matches!(m.kind, ElectronDensityKind::Tabulated(_));
    let normalization_error = match electron_density(m, 0.0) {
        Ok((v, _, _)) => (v - 1.0).abs(),
        Err(_) => f64::INFINITY,
    };
    let mut rep = AssumptionReport {
        normalization_error,
        min_density: f64::INFINITY,
        min_slope: f64::INFINITY,
        min_slope_phi: f64::NAN,
        min_log_concavity: f64::INFINITY,
        min_log_concavity_phi: f64::NAN,
        passed: false,
    };
    for k in 0..n {
        let s = if open {
            (k as f64 + 0.5) / n as f64
        } else {
            k as f64 / (n - 1) as f64
        };
        let phi = lo + (hi - lo) * s;
        let Ok((v, d, dd)) = electron_density(m, phi) else { continue };
        rep.min_density = rep.min_density.min(v);
        if d < rep.min_slope {
            rep.min_slope = d;
            rep.min_slope_phi = phi;
        }
        let conc = if d != 0.0 { (d * d - v * dd) / (d * d) } else { -v * dd };
        if conc < rep.min_log_concavity {
            rep.min_log_concavity = conc;
            rep.min_log_concavity_phi = phi;
        }
    }
    rep.passed = rep.normalization_error <= 1e-12
        && rep.min_density > 0.0
        && rep.min_slope > 0.0
        && rep.min_log_concavity >= -1e-12;
    rep
}

/// `φ` with `ρ_e(φ) = rho`.
pub fn invert_density(m: &ElectronDensityModel, rho: f64) -> Result<f64> {
    let (lo, hi) = m.density_range();
    let inside = match m.kind {
        ElectronDensityKind::Tabulated(_) => rho >= lo && rho <= hi,
        _ => rho > lo && rho < hi,
    };
    if !inside || !rho.is_finite() {
        return Err(VpbError::InvalidInput(format!(
            "density {rho} outside the model range ({lo}, {hi})"
        )));
    }
    match &m.kind {
        ElectronDensityKind::Boltzmann { a_e } => Ok(a_e * rho.ln()),
        ElectronDensityKind::GeneralGamma { gamma_e, a_e } if *gamma_e == 1.0 => Ok(a_e * rho.ln()),
        ElectronDensityKind::GeneralGamma { gamma_e, a_e } => {
            let g = *gamma_e;
            Ok(a_e * g / (g - 1.0) * (rho.powf(g - 1.0) - 1.0))
        }
        ElectronDensityKind::Tabulated(t) => {
            if t.rho.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(VpbError::InvalidInput(
                    "tabulated electron density is not strictly increasing; cannot invert".into(),
                ));
            }
            monotone_root(
                |phi| {
                    let (v, d, _) = t.eval(phi);
                    Ok((v - rho, d))
                },
                m.phi_min,
                m.phi_max,
                1e-15 * (1.0 + m.phi_max.abs().max(m.phi_min.abs())),
            )
        }
    }
}

/// `∂_ρP^φ = ρ_e/ρ_e′` and `∂²_ρP^φ = (ρ_e′² − ρ_e ρ_e″)/ρ_e′³` at `φ = ρ_e⁻¹(ρ)`.
pub fn pphi_derivatives(m: &ElectronDensityModel, rho: f64) -> Result<(f64, f64)> {
    let phi = invert_density(m, rho)?;
    let (v, d, dd) = electron_density(m, phi)?;
    if !(d > 0.0) {
        return Err(VpbError::Unphysical(format!(
            "electron density not increasing at phi = {phi}"
        )));
    }
    Ok((v / d, (d * d - v * dd) / (d * d * d)))
}

/// `(P^φ(ρ), ∂_ρP^φ, ∂²_ρP^φ)` with `P^φ(rho_ref) = 0`.
pub fn pphi_pressure(m: &ElectronDensityModel, rho: f64, rho_ref: f64) -> Result<(f64, f64, f64)> {
    invert_density(m, rho_ref)?;
    let (d1, d2) = pphi_derivatives(m, rho)?;
    let p = integrate(
        |r| match pphi_derivatives(m, r) {
            Ok((d, _)) => d,
            Err(_) => f64::NAN,
        },
        rho_ref,
        rho,
        QUAD_TOL,
    )?;
    Ok((p, d1, d2))
}

/// `ρ`, `u₁` and entropy `S` of the quasineutral Euler system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerState {
    pub rho: f64,
    pub u1: f64,
    pub s: f64,
}

impl EulerState {
    pub fn new(rho: f64, u1: f64, s: f64) -> Result<Self> {
        if !(rho > 0.0) || !u1.is_finite() || !s.is_finite() {
            return Err(VpbError::InvalidInput(format!(
                "Euler state needs rho > 0 and finite u1, S; got ({rho}, {u1}, {s})"
            )));
        }
        Ok(Self { rho, u1, s })
    }

    pub fn from_temperature(rho: f64, u1: f64, theta: f64) -> Result<Self> {
        if !(rho > 0.0) || !(theta > 0.0) {
            return Err(VpbError::InvalidInput(format!(
                "Euler state needs rho > 0 and theta > 0; got ({rho}, {theta})"
            )));
        }
        Self::new(rho, u1, entropy(rho, theta))
    }

    /// `A = k e^S`
    pub fn a(&self) -> f64 {
        ENTROPY_K * self.s.exp()
    }

    /// `θ = (3/2) k e^S ρ^{2/3}`
    pub fn theta(&self) -> f64 {
        1.5 * self.a() * self.rho.powf(2.0 / 3.0)
    }
}

/// `S = −(2/3) ln ρ + ln(4πθ/3) + 1`
pub fn entropy(rho: f64, theta: f64) -> f64 {
    -(2.0 / 3.0) * rho.ln() + (4.0 * std::f64::consts::PI * theta / 3.0).ln() + 1.0
}

fn gas_sound_speed_sq(a: f64, rho: f64) -> f64 {
    5.0 / 3.0 * a * rho.powf(2.0 / 3.0)
}

/// `(λ₁, λ₂, λ₃)`
pub fn eigenvalues(s: &EulerState, m: &ElectronDensityModel) -> Result<(f64, f64, f64)> {
    let (dp_phi, _) = pphi_derivatives(m, s.rho)?;
    let c2 = gas_sound_speed_sq(s.a(), s.rho) + dp_phi;
    if !(c2 > 0.0) {
        return Err(VpbError::Unphysical(format!(
            "negative characteristic radicand {c2} at rho = {}",
            s.rho
        )));
    }
    let c = c2.sqrt();
    Ok((s.u1 - c, s.u1, s.u1 + c))
}

/// The 3-rarefaction curve through a left state: constant entropy and the
/// Riemann invariant `u₁ − ∫ c(ϱ)/ϱ dϱ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveCurve {
    pub rho_minus: f64,
    pub u1_minus: f64,
    pub theta_minus: f64,
    /// `A_i = k e^{S_i}`
    pub a_i: f64,
    pub s_i: f64,
    pub model: ElectronDensityModel,
}

impl WaveCurve {
    pub fn new(rho_minus: f64, u1_minus: f64, theta_minus: f64, model: &ElectronDensityModel) -> Result<Self> {
        let left = EulerState::from_temperature(rho_minus, u1_minus, theta_minus)?;
        invert_density(model, rho_minus)?;
        Ok(Self {
            rho_minus,
            u1_minus,
            theta_minus,
            a_i: left.a(),
            s_i: left.s,
            model: model.clone(),
        })
    }

    /// `(c², d(c²)/dρ)` with `c² = ∂_ρP + ∂_ρP^φ`.
    pub fn sound_speed_sq(&self, rho: f64) -> Result<(f64, f64)> {
        let (d1, d2) = pphi_derivatives(&self.model, rho)?;
        let c2 = gas_sound_speed_sq(self.a_i, rho) + d1;
        let dc2 = 10.0 / 9.0 * self.a_i * rho.powf(-1.0 / 3.0) + d2;
        Ok((c2, dc2))
    }

    pub fn theta_at(&self, rho: f64) -> f64 {
        1.5 * self.a_i * rho.powf(2.0 / 3.0)
    }

    pub fn u1_at(&self, rho: f64) -> Result<f64> {
        self.u1_between(self.rho_minus, self.u1_minus, rho)
    }

    fn u1_between(&self, rho0: f64, u0: f64, rho: f64) -> Result<f64> {
        let inc = integrate(
            |r| match self.sound_speed_sq(r) {
                Ok((c2, _)) => c2.sqrt() / r,
                Err(_) => f64::NAN,
            },
            rho0,
            rho,
            QUAD_TOL * 1e-2,
        )?;
        Ok(u0 + inc)
    }

    /// `λ₃` on the curve and its derivative with respect to `ρ`.
    pub fn lambda3_at(&self, rho: f64) -> Result<(f64, f64)> {
        let u = self.u1_at(rho)?;
        let (c2, dc2) = self.sound_speed_sq(rho)?;
        let c = c2.sqrt();
        Ok((u + c, c / rho + dc2 / (2.0 * c)))
    }

    /// `ρ ∈ [ρ₋, rho_hi]` with `λ₃(ρ) = w`.
    pub fn rho_for_lambda3(&self, w: f64, rho_hi: f64) -> Result<f64> {
        let tol = 1e-14 * rho_hi;
        monotone_root(
            |r| {
                let (l, dl) = self.lambda3_at(r)?;
                Ok((l - w, dl))
            },
            self.rho_minus,
            rho_hi,
            tol,
        )
    }
}

/// `(u₁, θ)` reached from `left` along the 3-rarefaction curve at `rho_target`.
pub fn wave_curve_r3(
    rho_minus: f64,
    u1_minus: f64,
    theta_minus: f64,
    rho_target: f64,
    m: &ElectronDensityModel,
) -> Result<(f64, f64)> {
    if rho_target < rho_minus {
        return Err(VpbError::InvalidInput(format!(
            "3-rarefaction needs rho_target >= rho_minus ({rho_target} < {rho_minus})"
        )));
    }
    let curve = WaveCurve::new(rho_minus, u1_minus, theta_minus, m)?;
    if rho_target == rho_minus {
        return Ok((u1_minus, theta_minus));
    }
    Ok((curve.u1_at(rho_target)?, curve.theta_at(rho_target)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boltzmann_values_at_zero() {
        let m = ElectronDensityModel::boltzmann(1.0).unwrap();
        assert_eq!(electron_density(&m, 0.0).unwrap(), (1.0, 1.0, 1.0));
    }

    #[test]
    fn gamma_two_is_linear() {
        let m = ElectronDensityModel::general_gamma(2.0, 1.0).unwrap();
        let (v, d, dd) = electron_density(&m, 2.0).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
        assert!((d - 0.5).abs() < 1e-15);
        assert_eq!(dd, 0.0);
        assert_eq!(m.phi_min, -2.0);
        assert!(electron_density(&m, -2.0).is_err());
        assert_eq!(invert_density(&m, 2.0).unwrap(), 2.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for m in [
            ElectronDensityModel::general_gamma(1.5, 0.7).unwrap(),
            ElectronDensityModel::general_gamma(3.0, 1.0).unwrap(),
            ElectronDensityModel::boltzmann(2.0).unwrap(),
        ] {
            for phi in [-0.5, 0.0, 0.8] {
                let h = 1e-5;
                let (_, d, dd) = electron_density(&m, phi).unwrap();
                let (vp, dp, _) = electron_density(&m, phi + h).unwrap();
                let (vm, dm, _) = electron_density(&m, phi - h).unwrap();
                assert!(((vp - vm) / (2.0 * h) - d).abs() < 1e-8);
                assert!(((dp - dm) / (2.0 * h) - dd).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn assumption_report_for_builtins() {
        let r = check_assumption_a(&ElectronDensityModel::boltzmann(1.0).unwrap(), 200);
        assert!(r.passed);
        assert!(r.min_log_concavity.abs() < 1e-12);
        let r = check_assumption_a(&ElectronDensityModel::general_gamma(1.5, 1.0).unwrap(), 200);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn non_monotone_table_fails_with_location() {
        let m = ElectronDensityModel::tabulated(
            vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            vec![0.5, 0.8, 1.0, 0.9, 1.4],
        )
        .unwrap();
        let r = check_assumption_a(&m, 401);
        assert!(!r.passed);
        assert!(r.min_slope < 0.0);
        assert!(r.min_slope_phi > 0.0 && r.min_slope_phi < 1.0, "{r:?}");
        assert!(invert_density(&m, 0.95).is_err());
    }

    #[test]
    fn tabulated_reproduces_nodes_and_inverts() {
        let phi: Vec<f64> = (0..21).map(|k| -1.0 + 0.1 * k as f64).collect();
        let rho: Vec<f64> = phi.iter().map(|p| p.exp()).collect();
        let m = ElectronDensityModel::tabulated(phi, rho).unwrap();
        assert!((electron_density(&m, 0.0).unwrap().0 - 1.0).abs() < 1e-15);
        let p = invert_density(&m, 1.5).unwrap();
        assert!((electron_density(&m, p).unwrap().0 - 1.5).abs() < 1e-12);
        assert!((p - 1.5f64.ln()).abs() < 1e-3);
    }

    #[test]
    fn boltzmann_pressure_is_linear() {
        let m = ElectronDensityModel::boltzmann(1.7).unwrap();
        let (p, d1, d2) = pphi_pressure(&m, 2.0, 1.0).unwrap();
        assert!((p - 1.7).abs() < 1e-11);
        assert!((d1 - 1.7).abs() < 1e-12);
        assert!(d2.abs() < 1e-12);
        assert_eq!(pphi_pressure(&m, 1.3, 1.3).unwrap().0, 0.0);
    }

    #[test]
    fn entropy_round_trip() {
        let s = EulerState::from_temperature(1.3, 0.2, 0.9).unwrap();
        assert!((s.theta() - 0.9).abs() < 1e-14);
    }

    #[test]
    fn boltzmann_lambda3_example() {
        let m = ElectronDensityModel::boltzmann(1.0).unwrap();
        let s = EulerState::new(1.0, 0.0, (1.0 / ENTROPY_K).ln()).unwrap();
        let (l1, l2, l3) = eigenvalues(&s, &m).unwrap();
        assert!((l3 - (5.0f64 / 3.0 + 1.0).sqrt()).abs() < 1e-13);
        assert_eq!(l2, 0.0);
        assert!((l3 - l1 - 2.0 * (8.0f64 / 3.0).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn wave_curve_basic_properties() {
        let m = ElectronDensityModel::general_gamma(2.0, 1.0).unwrap();
        assert_eq!(wave_curve_r3(1.0, 0.1, 1.0, 1.0, &m).unwrap(), (0.1, 1.0));
        let (u, th) = wave_curve_r3(1.0, 0.0, 1.0, 1.3, &m).unwrap();
        assert!((th - 1.3f64.powf(2.0 / 3.0)).abs() < 1e-14);
        assert!(u > 0.0);
        assert!(wave_curve_r3(1.0, 0.0, 1.0, 0.9, &m).is_err());
    }
}
