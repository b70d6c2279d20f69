//! Inviscid Burgers waves, the smooth and centered 3-rarefaction profiles
//! built on them, and decay-rate fits for their derivatives.

use crate::error::{Result, VpbError};
use crate::phase_space::FluidTriple;
use crate::quadrature::monotone_root;
use crate::quasineutral::{electron_density, invert_density, ElectronDensityModel, WaveCurve};

/// `w₀(x) = ½(w₊+w₋) + ½(w₊−w₋) tanh(εx)` evolved by `∂ₜw + w∂ₓw = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersWave {
    pub w_minus: f64,
    pub w_plus: f64,
    pub epsilon: f64,
}

/// `w` and its first two `x`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersPoint {
    pub w: f64,
    pub wx: f64,
    pub wxx: f64,
    /// Characteristic foot `x₀` with `x = x₀ + w₀(x₀)t`.
    pub foot: f64,
}

impl BurgersWave {
    pub fn new(w_minus: f64, w_plus: f64, epsilon: f64) -> Result<Self> {
        if !(w_minus < w_plus) || !w_minus.is_finite() || !w_plus.is_finite() {
            return Err(VpbError::InvalidInput(format!(
                "Burgers wave needs w_minus < w_plus, got {w_minus}, {w_plus}"
            )));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(VpbError::InvalidInput(format!("epsilon must be > 0, got {epsilon}")));
        }
        Ok(Self { w_minus, w_plus, epsilon })
    }

    pub fn strength(&self) -> f64 {
        self.w_plus - self.w_minus
    }

    /// `(w₀, w₀′, w₀″)` at `x0`.
    pub fn initial(&self, x0: f64) -> (f64, f64, f64) {
        let mid = 0.5 * (self.w_plus + self.w_minus);
        let half = 0.5 * (self.w_plus - self.w_minus);
        let e = self.epsilon;
        let z = e * x0;
        let th = z.tanh();
        let sech = 1.0 / z.cosh();
        let s2 = sech * sech;
        let w = (mid + half * th).clamp(self.w_minus, self.w_plus);
        (w, half * e * s2, -2.0 * half * e * e * s2 * th)
    }

    /// Characteristic foot of `(t, x)`; `g(x₀) = x₀ + t w₀(x₀) − x` is increasing.
    pub fn foot(&self, t: f64, x: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(x);
        }
        // g(x₀ ± 1) clears zero by at least 1 since g′ ≥ 1, whatever the rounding
        let lo = x - self.w_plus * t - 1.0;
        let hi = x - self.w_minus * t + 1.0;
        let tol = 1e-12 * (1.0 + x.abs().max(t));
        monotone_root(
            |x0| {
                let (w, wp, _) = self.initial(x0);
                Ok((x0 + t * w - x, 1.0 + t * wp))
            },
            lo,
            hi,
            tol,
        )
    }

    /// Derivatives at a known foot.
    pub fn at_foot(&self, t: f64, x0: f64) -> BurgersPoint {
        let (w, wp, wpp) = self.initial(x0);
        let j = 1.0 + t * wp;
        BurgersPoint {
            w,
            wx: wp / j,
            wxx: wpp / (j * j * j),
            foot: x0,
        }
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<BurgersPoint> {
        if t < 0.0 {
            return Err(VpbError::InvalidInput(format!("time must be >= 0, got {t}")));
        }
        Ok(self.at_foot(t, self.foot(t, x)?))
    }
}

pub fn burgers_smooth(b: &BurgersWave, t: f64, x: f64) -> Result<f64> {
    Ok(b.eval(t, x)?.w)
}

/// The centered fan `w^R(ξ)`.
pub fn burgers_centered(w_minus: f64, w_plus: f64, xi: f64) -> f64 {
    if xi <= w_minus {
        w_minus
    } else if xi >= w_plus {
        w_plus
    } else {
        xi
    }
}

/// Fluid values of a rarefaction profile; derivative fields are zero for the centered fan.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProfilePoint {
    pub rho: f64,
    pub u1: f64,
    pub theta: f64,
    pub phi: f64,
    pub drho: f64,
    pub du1: f64,
    pub dtheta: f64,
    pub dphi: f64,
    pub d2phi: f64,
    /// `w = λ₃` at this point.
    pub w: f64,
}

/// Smooth 3-rarefaction connecting `left` to `right ∈ R₃(left)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RarefactionProfile {
    pub left: FluidTriple,
    pub right: FluidTriple,
    pub epsilon: f64,
    pub phi_minus: f64,
    pub phi_plus: f64,
    pub curve: WaveCurve,
    pub burgers: BurgersWave,
}

impl RarefactionProfile {
    /// Builds the right state on the 3-wave curve from `rho_plus`.
    pub fn from_left(left: FluidTriple, rho_plus: f64, model: &ElectronDensityModel, epsilon: f64) -> Result<Self> {
        if !(rho_plus > left.rho) {
            return Err(VpbError::InvalidInput(format!(
                "3-rarefaction needs rho_plus > rho_minus ({rho_plus} <= {})",
                left.rho
            )));
        }
        let curve = WaveCurve::new(left.rho, left.u[0], left.theta, model)?;
        let right = FluidTriple::slab(rho_plus, curve.u1_at(rho_plus)?, curve.theta_at(rho_plus))?;
        Self::build(left, right, curve, epsilon)
    }

    /// Accepts an explicit right state, checking it lies on the wave curve.
    pub fn new(left: FluidTriple, right: FluidTriple, model: &ElectronDensityModel, epsilon: f64) -> Result<Self> {
        if !(right.rho > left.rho) || !(right.u[0] > left.u[0]) {
            return Err(VpbError::InvalidInput(
                "3-rarefaction needs rho_minus < rho_plus and u1_minus < u1_plus".into(),
            ));
        }
        let curve = WaveCurve::new(left.rho, left.u[0], left.theta, model)?;
        let u = curve.u1_at(right.rho)?;
        let th = curve.theta_at(right.rho);
        let tol = 1e-8;
        if (u - right.u[0]).abs() > tol * (1.0 + u.abs()) || (th - right.theta).abs() > tol * th {
            return Err(VpbError::InvalidInput(format!(
                "right state not on the 3-wave curve: expected (u1, theta) = ({u}, {th}), got ({}, {})",
                right.u[0], right.theta
            )));
        }
        Self::build(left, right, curve, epsilon)
    }

    fn build(left: FluidTriple, right: FluidTriple, curve: WaveCurve, epsilon: f64) -> Result<Self> {
        let (w_minus, _) = curve.lambda3_at(left.rho)?;
        let (w_plus, _) = curve.lambda3_at(right.rho)?;
        let burgers = BurgersWave::new(w_minus, w_plus, epsilon)?;
        Ok(Self {
            left,
            right,
            epsilon,
            phi_minus: invert_density(&curve.model, left.rho)?,
            phi_plus: invert_density(&curve.model, right.rho)?,
            curve,
            burgers,
        })
    }

    pub fn model(&self) -> &ElectronDensityModel {
        &self.curve.model
    }

    pub fn entropy(&self) -> f64 {
        self.curve.s_i
    }

    /// `ρ` on the 3-wave curve with `λ₃ = w` (clamped to the end states).
    pub fn rho_for_w(&self, w: f64) -> Result<f64> {
        if w <= self.burgers.w_minus {
            return Ok(self.left.rho);
        }
        if w >= self.burgers.w_plus {
            return Ok(self.right.rho);
        }
        self.curve.rho_for_lambda3(w, self.right.rho)
    }

    fn values(&self, w: f64) -> Result<ProfilePoint> {
        if w <= self.burgers.w_minus {
            return Ok(ProfilePoint {
                rho: self.left.rho,
                u1: self.left.u[0],
                theta: self.left.theta,
                phi: self.phi_minus,
                w: self.burgers.w_minus,
                ..Default::default()
            });
        }
        if w >= self.burgers.w_plus {
            return Ok(ProfilePoint {
                rho: self.right.rho,
                u1: self.right.u[0],
                theta: self.right.theta,
                phi: self.phi_plus,
                w: self.burgers.w_plus,
                ..Default::default()
            });
        }
        let rho = self.rho_for_w(w)?;
        Ok(ProfilePoint {
            rho,
            u1: self.curve.u1_at(rho)?,
            theta: self.curve.theta_at(rho),
            phi: invert_density(self.model(), rho)?,
            w,
            ..Default::default()
        })
    }

    /// `dλ₃/dρ` and `d²λ₃/dρ²` (the latter by central differences).
    fn lambda3_slopes(&self, rho: f64) -> Result<(f64, f64)> {
        let (_, d1) = self.curve.lambda3_at(rho)?;
        let h = 1e-4 * rho;
        let lo = (rho - h).max(self.left.rho.min(rho));
        let hi = rho + h;
        let (_, dl) = self.curve.lambda3_at(lo)?;
        let (_, dh) = self.curve.lambda3_at(hi)?;
        Ok((d1, (dh - dl) / (hi - lo)))
    }

    /// Smooth profile and its `x`-derivatives at `(t, x)`.
    pub fn smooth(&self, t: f64, x: f64) -> Result<ProfilePoint> {
        let b = self.burgers.eval(t, x)?;
        self.smooth_at(b)
    }

    fn smooth_at(&self, b: BurgersPoint) -> Result<ProfilePoint> {
        let mut p = self.values(b.w)?;
        if b.w <= self.burgers.w_minus || b.w >= self.burgers.w_plus {
            return Ok(p);
        }
        let (l1, l2) = self.lambda3_slopes(p.rho)?;
        let drho = b.wx / l1;
        let d2rho = b.wxx / l1 - l2 * drho * drho / l1;
        let (c2, _) = self.curve.sound_speed_sq(p.rho)?;
        let (_, re1, re2) = electron_density(self.model(), p.phi)?;
        p.drho = drho;
        p.du1 = c2.sqrt() / p.rho * drho;
        p.dtheta = 2.0 / 3.0 * p.theta / p.rho * drho;
        p.dphi = drho / re1;
        p.d2phi = (d2rho - re2 * p.dphi * p.dphi) / re1;
        Ok(p)
    }

    /// Centered fan at `ξ = x/t`.
    pub fn centered(&self, xi: f64) -> Result<ProfilePoint> {
        self.values(burgers_centered(self.burgers.w_minus, self.burgers.w_plus, xi))
    }
}

pub fn profile_smooth(p: &RarefactionProfile, t: f64, x: f64) -> Result<ProfilePoint> {
    p.smooth(t, x)
}

pub fn profile_centered(p: &RarefactionProfile, xi: f64) -> Result<ProfilePoint> {
    p.centered(xi)
}

/// What a decay fit measures.
#[derive(Debug, Clone, Copy)]
pub enum DecaySubject<'a> {
    Burgers(&'a BurgersWave),
    /// `∂ₓʲρ^r` of a profile (`j ≤ 2`).
    ProfileDensity(&'a RarefactionProfile),
}

impl DecaySubject<'_> {
    fn burgers(&self) -> &BurgersWave {
        match self {
            DecaySubject::Burgers(b) => b,
            DecaySubject::ProfileDensity(p) => &p.burgers,
        }
    }

    fn strength(&self) -> f64 {
        match self {
            DecaySubject::Burgers(b) => b.strength(),
            DecaySubject::ProfileDensity(p) => p.right.rho - p.left.rho,
        }
    }

    fn derivative(&self, t: f64, x0: f64, order: u32) -> Result<f64> {
        let b = self.burgers().at_foot(t, x0);
        match (self, order) {
            (DecaySubject::Burgers(_), 1) => Ok(b.wx),
            (DecaySubject::Burgers(_), _) => Ok(b.wxx),
            (DecaySubject::ProfileDensity(p), o) => {
                let rho = p.rho_for_w(b.w)?;
                let (l1, l2) = p.lambda3_slopes(rho)?;
                let drho = b.wx / l1;
                Ok(if o == 1 { drho } else { b.wxx / l1 - l2 * drho * drho / l1 })
            }
        }
    }
}

/// Fitted decay of `‖∂ₓʲ·‖_{Lᵖ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// `p` (`f64::INFINITY` for the sup norm).
    pub p: f64,
    pub order: u32,
    /// `(t, norm)` for every requested time.
    pub norms: Vec<(f64, f64)>,
    /// Least-squares log-log slope over `t ≥ t_max/√10`.
    pub slope: f64,
    pub window: (f64, f64),
    /// Largest ratio of the measured norm to `min{δ ε^{j−1/p}, ·}`.
    pub envelope_constant: f64,
    /// Worst relative change between the `N` and `2N` grids.
    pub resolution_change: f64,
    pub resolved: bool,
}

/// Nodes on the characteristic-foot axis; `x₀` outside `±20/ε` is in the far field.
const FOOT_WINDOW: f64 = 20.0;
const BASE_NODES: usize = 4000;

fn foot_norm(s: &DecaySubject<'_>, p: f64, order: u32, t: f64, n: usize) -> Result<f64> {
    let b = s.burgers();
    let xmax = FOOT_WINDOW / b.epsilon;
    let h = 2.0 * xmax / n as f64;
    let nodes: Vec<f64> = (0..=n).map(|k| -xmax + h * k as f64).collect();
    let jac = |x0: f64| 1.0 + t * b.initial(x0).1;
    if p.is_infinite() {
        let mut best = (0.0f64, 0usize);
        for (k, &x0) in nodes.iter().enumerate() {
            let v = s.derivative(t, x0, order)?.abs();
            if v > best.0 {
                best = (v, k);
            }
        }
        // golden-section polish around the best node
        let (mut a, mut c) = (nodes[best.1] - h, nodes[best.1] + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = c - g * (c - a);
        let mut x2 = a + g * (c - a);
        let mut f1 = s.derivative(t, x1, order)?.abs();
        let mut f2 = s.derivative(t, x2, order)?.abs();
        for _ in 0..60 {
            if f1 > f2 {
                c = x2;
                x2 = x1;
                f2 = f1;
                x1 = c - g * (c - a);
                f1 = s.derivative(t, x1, order)?.abs();
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (c - a);
                f2 = s.derivative(t, x2, order)?.abs();
            }
        }
        return Ok(best.0.max(f1).max(f2));
    }
    let mut sum = 0.0;
    for (k, &x0) in nodes.iter().enumerate() {
        let wgt = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += wgt * s.derivative(t, x0, order)?.abs().powf(p) * jac(x0);
    }
    let mut total = sum * h / 3.0;
    // Beyond the window the state is constant up to e^{-2ε|x₀|}: w₀′ ≈ 2δε e^{-2ε|x₀|},
    // w₀″ ≈ ∓2εw₀′, and the jacobian is 1 to that order.
    let (_, wp_edge, _) = b.initial(xmax);
    let edge = s.derivative(t, xmax, order)?.abs().max(s.derivative(t, -xmax, order)?.abs());
    if wp_edge > 0.0 {
        let decay = 2.0 * p * b.epsilon;
        total += 2.0 * edge.powf(p) / decay;
    }
    Ok(total.powf(1.0 / p))
}

/// `‖∂ₓʲ·‖_{Lᵖ}` at time `t`, integrated over the characteristic foot with `dx = (1+tw₀′)dx₀`.
pub fn derivative_norm(s: &DecaySubject<'_>, p: f64, order: u32, t: f64) -> Result<f64> {
    validate_norm(p, order)?;
    foot_norm(s, p, order, t, 2 * BASE_NODES)
}

fn validate_norm(p: f64, order: u32) -> Result<()> {
    if !(p >= 1.0) {
        return Err(VpbError::InvalidInput(format!("p must be >= 1, got {p}")));
    }
    if !(1..=2).contains(&order) {
        return Err(VpbError::InvalidInput(format!("derivative order must be 1 or 2, got {order}")));
    }
    Ok(())
}

pub fn measure_decay(s: &DecaySubject<'_>, p: f64, times: &[f64], order: u32) -> Result<DecayFit> {
    validate_norm(p, order)?;
    if times.len() < 2 || times.iter().any(|t| !(*t > 0.0)) {
        return Err(VpbError::InvalidInput("decay fit needs at least two positive times".into()));
    }
    let t_min = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    if t_max < 10.0 * t_min * (1.0 - 1e-12) {
        return Err(VpbError::InvalidInput("times must span at least one decade".into()));
    }
    let b = s.burgers();
    let delta = s.strength();
    let eps = b.epsilon;
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let mut norms = Vec::with_capacity(times.len());
    let mut resolution_change = 0.0f64;
    let mut envelope_constant = 0.0f64;
    for &t in times {
        let coarse = foot_norm(s, p, order, t, BASE_NODES)?;
        let fine = foot_norm(s, p, order, t, 2 * BASE_NODES)?;
        if fine > 0.0 {
            resolution_change = resolution_change.max((fine - coarse).abs() / fine);
        }
        let env = if order == 1 {
            (delta * eps.powf(1.0 - inv_p)).min(delta.powf(inv_p) * t.powf(-1.0 + inv_p))
        } else {
            (delta * eps.powf(order as f64 - inv_p)).min(eps.powf(order as f64 - 1.0 - inv_p) / t)
        };
        envelope_constant = envelope_constant.max(fine / env);
        norms.push((t, fine));
    }
    let cut = t_max / 10f64.sqrt();
    let late: Vec<(f64, f64)> = norms
        .iter()
        .filter(|(t, n)| *t >= cut * (1.0 - 1e-12) && *n > 0.0)
        .map(|(t, n)| (t.ln(), n.ln()))
        .collect();
    if late.len() < 2 {
        return Err(VpbError::InvalidInput(
            "fewer than two times in the late window t >= t_max/sqrt(10)".into(),
        ));
    }
    let m = late.len() as f64;
    let mx = late.iter().map(|v| v.0).sum::<f64>() / m;
    let my = late.iter().map(|v| v.1).sum::<f64>() / m;
    let sxy: f64 = late.iter().map(|v| (v.0 - mx) * (v.1 - my)).sum();
    let sxx: f64 = late.iter().map(|v| (v.0 - mx) * (v.0 - mx)).sum();
    Ok(DecayFit {
        p,
        order,
        norms,
        slope: sxy / sxx,
        window: (cut, t_max),
        envelope_constant,
        resolution_change,
        resolved: resolution_change <= 0.01,
    })
}

/// `n` log-spaced times between `t0` and `t1`.
pub fn log_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|k| (t0.ln() + (t1.ln() - t0.ln()) * k as f64 / (n - 1) as f64).exp())
        .collect()
}
