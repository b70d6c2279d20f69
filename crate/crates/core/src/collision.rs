//! Hard-sphere collision operator on the velocity lattice, its linearization,
//! the pseudo-inverse on the microscopic subspace and the quantities built on
//! it (transport coefficients, Ḡ, Θ, coercivity ratios), plus a BGK surrogate.
//!
//! Every pair `(ξ, ξ*)` of lattice nodes differs by an integer multiple `d` of
//! the spacing, so for a fixed `(d, ω)` the post-collision points sit at the
//! same sub-lattice displacement from `ξ` for every node. The kernel therefore
//! loops over `(d, ω)` and sweeps the nodes with precomputed interpolation
//! offsets into a zero-padded copy of the lattice.

use crate::error::{Result, VpbError};
use crate::phase_space::{
    discrete_maxwellian, fluid_from_moments, moments, DistributionField, DistributionSlice,
    FluidTriple, MacroProjector, VelocityGrid,
};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Quadrature on the unit sphere with weights summing to `4π`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularQuadrature {
    directions: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl AngularQuadrature {
    pub fn new(directions: Vec<[f64; 3]>, weights: Vec<f64>) -> Result<Self> {
        if directions.is_empty() || directions.len() != weights.len() {
            return Err(VpbError::InvalidInput(
                "angular quadrature needs matching nonempty direction and weight lists".into(),
            ));
        }
        for d in &directions {
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if (n - 1.0).abs() > 1e-12 {
                return Err(VpbError::InvalidInput(format!(
                    "angular direction {d:?} is not a unit vector"
                )));
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - FOUR_PI).abs() > 1e-12 {
            return Err(VpbError::InvalidInput(format!(
                "angular weights sum to {total}, expected 4π"
            )));
        }
        Ok(Self {
            directions,
            weights,
        })
    }

    /// Lebedev rule with 6, 14, 26, 38 or 50 nodes.
    pub fn lebedev(n_points: usize) -> Result<Self> {
        let mut dirs = Vec::new();
        let mut w = Vec::new();
        let mut push = |pts: Vec<[f64; 3]>, weight: f64| {
            for p in pts {
                dirs.push(p);
                w.push(weight * FOUR_PI);
            }
        };
        let axes = orbit_axes();
        let edges = orbit_edges();
        let verts = orbit_vertices();
        match n_points {
            6 => push(axes, 1.0 / 6.0),
            14 => {
                push(axes, 1.0 / 15.0);
                push(verts, 3.0 / 40.0);
            }
            26 => {
                push(axes, 1.0 / 21.0);
                push(edges, 4.0 / 105.0);
                push(verts, 9.0 / 280.0);
            }
            38 => {
                push(axes, 1.0 / 105.0);
                push(verts, 9.0 / 280.0);
                push(orbit_pq0(0.459_700_843_380_983_1, 0.888_073_833_977_115_3), 1.0 / 35.0);
            }
            50 => {
                push(axes, 4.0 / 315.0);
                push(edges, 64.0 / 2835.0);
                push(verts, 27.0 / 1280.0);
                let l = 1.0 / 11f64.sqrt();
                push(orbit_llm(l, 3.0 * l), 14641.0 / 725_760.0);
            }
            _ => {
                return Err(VpbError::InvalidInput(format!(
                    "no Lebedev rule with {n_points} nodes (available: 6, 14, 26, 38, 50)"
                )))
            }
        }
        // Renormalize away the last ulp so the weight sum check is exact.
        let total: f64 = w.iter().sum();
        let w = w.into_iter().map(|x| x * FOUR_PI / total).collect();
        Self::new(dirs, w)
    }

    /// Gauss-Legendre in `cos θ` times a uniform azimuthal rule; `n_phi` must be even
    /// so the node set is closed under `ω -> -ω`.
    pub fn product_gauss(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi < 2 || n_phi % 2 != 0 {
            return Err(VpbError::InvalidInput(format!(
                "product rule needs n_theta >= 1 and even n_phi >= 2, got {n_theta} x {n_phi}"
            )));
        }
        let (mu, wmu) = gauss_legendre(n_theta);
        let mut dirs = Vec::with_capacity(n_theta * n_phi);
        let mut w = Vec::with_capacity(n_theta * n_phi);
        for (m, wm) in mu.iter().zip(&wmu) {
            let s = (1.0 - m * m).max(0.0).sqrt();
            for k in 0..n_phi {
                let phi = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n_phi as f64;
                let v = [s * phi.cos(), s * phi.sin(), *m];
                let nrm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                dirs.push([v[0] / nrm, v[1] / nrm, v[2] / nrm]);
                w.push(wm * 2.0 * std::f64::consts::PI / n_phi as f64);
            }
        }
        let total: f64 = w.iter().sum();
        let w = w.into_iter().map(|x| x * FOUR_PI / total).collect();
        Self::new(dirs, w)
    }

    pub fn directions(&self) -> &[[f64; 3]] {
        &self.directions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// `Σ w f(ω)`.
    pub fn integrate<F: Fn(&[f64; 3]) -> f64>(&self, f: F) -> f64 {
        self.directions
            .iter()
            .zip(&self.weights)
            .map(|(d, w)| w * f(d))
            .sum()
    }
}

fn orbit_axes() -> Vec<[f64; 3]> {
    vec![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ]
}

fn orbit_edges() -> Vec<[f64; 3]> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(12);
    for s1 in [a, -a] {
        for s2 in [a, -a] {
            out.push([s1, s2, 0.0]);
            out.push([s1, 0.0, s2]);
            out.push([0.0, s1, s2]);
        }
    }
    out
}

fn orbit_vertices() -> Vec<[f64; 3]> {
    let a = 1.0 / 3f64.sqrt();
    let mut out = Vec::with_capacity(8);
    for s1 in [a, -a] {
        for s2 in [a, -a] {
            for s3 in [a, -a] {
                out.push([s1, s2, s3]);
            }
        }
    }
    out
}

fn orbit_pq0(p: f64, q: f64) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(24);
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            let (a, b) = (s1 * p, s2 * q);
            out.extend([
                [a, b, 0.0],
                [b, a, 0.0],
                [a, 0.0, b],
                [b, 0.0, a],
                [0.0, a, b],
                [0.0, b, a],
            ]);
        }
    }
    out
}

fn orbit_llm(l: f64, m: f64) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(24);
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            for s3 in [1.0, -1.0] {
                out.push([s1 * l, s2 * l, s3 * m]);
                out.push([s1 * l, s3 * m, s2 * l]);
                out.push([s3 * m, s1 * l, s2 * l]);
            }
        }
    }
    out
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionMode {
    HardSphere,
    BgkSurrogate,
}

/// How distribution values are evaluated at off-lattice post-collision velocities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Trilinear interpolation of `H` itself.
    Trilinear,
    /// Trilinear interpolation of `H/W`, with `W` the Maxwellian carrying the
    /// moments of the second argument (first argument, then plain trilinear,
    /// as fallbacks). Because `W(ξ′)W(ξ*′) = W(ξ)W(ξ*)`, the gain term needs no
    /// off-lattice Maxwellian evaluations.
    MaxwellianWeighted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionConfig {
    pub angular: AngularQuadrature,
    pub mode: CollisionMode,
    pub bgk_rate: f64,
    pub interpolation: Interpolation,
}

impl CollisionConfig {
    pub fn hard_sphere(angular: AngularQuadrature) -> Self {
        Self {
            angular,
            mode: CollisionMode::HardSphere,
            bgk_rate: 0.0,
            interpolation: Interpolation::MaxwellianWeighted,
        }
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    pub fn bgk(angular: AngularQuadrature, rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(VpbError::InvalidInput(format!(
                "BGK rate must be positive, got {rate}"
            )));
        }
        Ok(Self {
            angular,
            mode: CollisionMode::BgkSurrogate,
            bgk_rate: rate,
            interpolation: Interpolation::MaxwellianWeighted,
        })
    }

    fn require(&self, mode: CollisionMode, op: &str) -> Result<()> {
        if self.mode != mode {
            return Err(VpbError::ModeMismatch(format!(
                "{op} requires {mode:?} mode, configured {:?}",
                self.mode
            )));
        }
        Ok(())
    }
}

/// One off-lattice evaluation point: padded flat offset of the lower corner
/// relative to the node and the fractional position inside the cell.
#[derive(Debug, Clone, Copy)]
struct Probe {
    offset: isize,
    t: [f64; 3],
}

#[derive(Debug, Clone, Copy)]
struct Stencil {
    d: [i64; 3],
    /// `w(ω)·vol·|(ξ−ξ*)·ω|`
    rate: f64,
    post: Probe,
    post_star: Probe,
}

/// Precomputed geometry of the padded lattice for one velocity grid.
#[derive(Debug, Clone)]
pub struct CollisionKernel {
    grid: VelocityGrid,
    angular: AngularQuadrature,
    n: usize,
    pad: usize,
    np: usize,
}

impl CollisionKernel {
    pub fn new(grid: &VelocityGrid, angular: &AngularQuadrature) -> Self {
        let n = grid.n_per_axis();
        // Post-collision points stay inside the ball of radius √6·(n−1)/2
        // around the lattice centre.
        let reach = (6f64.sqrt() - 1.0) * (n as f64 - 1.0) / 2.0;
        let pad = reach.ceil() as usize + 2;
        Self {
            grid: grid.clone(),
            angular: angular.clone(),
            n,
            pad,
            np: n + 2 * pad,
        }
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    fn padded_len(&self) -> usize {
        self.np * self.np * self.np
    }

    #[inline]
    fn padded_index(&self, i: usize, j: usize, k: usize) -> usize {
        ((i + self.pad) * self.np + j + self.pad) * self.np + k + self.pad
    }

    fn pad_values(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; self.padded_len()];
        for i in 0..n {
            for j in 0..n {
                let src = self.grid.index(i, j, 0);
                let dst = self.padded_index(i, j, 0);
                out[dst..dst + n].copy_from_slice(&f[src..src + n]);
            }
        }
        out
    }

    fn unpad_values(&self, p: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; self.grid.len()];
        for i in 0..n {
            for j in 0..n {
                let src = self.padded_index(i, j, 0);
                let dst = self.grid.index(i, j, 0);
                out[dst..dst + n].copy_from_slice(&p[src..src + n]);
            }
        }
        out
    }

    fn probe(&self, disp: [f64; 3]) -> Probe {
        let np = self.np as isize;
        let f = disp.map(|c| c.floor());
        let t = [disp[0] - f[0], disp[1] - f[1], disp[2] - f[2]];
        let fi = f.map(|c| c as isize);
        debug_assert!(fi.iter().all(|c| c.unsigned_abs() < self.pad + self.n));
        Probe {
            offset: (fi[0] * np + fi[1]) * np + fi[2],
            t,
        }
    }

    /// Calls `visit` for every `(d, ω)` with `d·ω > 0`. When `half` is set only
    /// one of each `±d` pair is visited.
    fn for_each_stencil<F: FnMut(&Stencil)>(&self, half: bool, mut visit: F) {
        let n = self.n as i64;
        let h = self.grid.spacing();
        let vol = self.grid.cell_volume();
        for d0 in -(n - 1)..n {
            for d1 in -(n - 1)..n {
                for d2 in -(n - 1)..n {
                    let d = [d0, d1, d2];
                    if d == [0, 0, 0] {
                        continue;
                    }
                    if half && (d0, d1, d2) < (0, 0, 0) {
                        continue;
                    }
                    let df = d.map(|c| c as f64);
                    for (om, w) in self.angular.directions().iter().zip(self.angular.weights()) {
                        let s = df[0] * om[0] + df[1] * om[1] + df[2] * om[2];
                        if s <= 1e-12 {
                            continue;
                        }
                        let so = [s * om[0], s * om[1], s * om[2]];
                        visit(&Stencil {
                            d,
                            rate: w * vol * s * h,
                            post: self.probe([-so[0], -so[1], -so[2]]),
                            post_star: self.probe([so[0] - df[0], so[1] - df[1], so[2] - df[2]]),
                        });
                    }
                }
            }
        }
    }

    /// Calls `body(i, j, padded_i, len)` for every run of `len` consecutive
    /// nodes `i` (last axis) whose partners `j = i − d` lie on the lattice.
    #[inline]
    fn sweep_rows<F: FnMut(usize, usize, usize, usize)>(&self, d: [i64; 3], mut body: F) {
        let n = self.n as i64;
        let lo = d.map(|c| c.max(0));
        let hi = d.map(|c| n + c.min(0));
        let len = (hi[2] - lo[2]) as usize;
        for i0 in lo[0]..hi[0] {
            for i1 in lo[1]..hi[1] {
                let row = self.grid.index(i0 as usize, i1 as usize, lo[2] as usize);
                let prow = self.padded_index(i0 as usize, i1 as usize, lo[2] as usize);
                let jrow = self.grid.index((i0 - d[0]) as usize, (i1 - d[1]) as usize, (lo[2] - d[2]) as usize);
                body(row, jrow, prow, len);
            }
        }
    }

    /// Trilinear values at `len` consecutive padded bases starting at `base`.
    #[inline]
    fn interp_row(&self, p: &[f64], base: usize, probe: &Probe, out: &mut [f64]) {
        let [sx, sy, _] = self.corner_strides();
        let o = (base as isize + probe.offset) as usize;
        let [tx, ty, tz] = probe.t;
        let len = out.len();
        let w = [
            (1.0 - tx) * (1.0 - ty) * (1.0 - tz),
            (1.0 - tx) * (1.0 - ty) * tz,
            (1.0 - tx) * ty * (1.0 - tz),
            (1.0 - tx) * ty * tz,
            tx * (1.0 - ty) * (1.0 - tz),
            tx * (1.0 - ty) * tz,
            tx * ty * (1.0 - tz),
            tx * ty * tz,
        ];
        let s0 = &p[o..o + len];
        let s1 = &p[o + 1..o + 1 + len];
        let s2 = &p[o + sy..o + sy + len];
        let s3 = &p[o + sy + 1..o + sy + 1 + len];
        let s4 = &p[o + sx..o + sx + len];
        let s5 = &p[o + sx + 1..o + sx + 1 + len];
        let s6 = &p[o + sx + sy..o + sx + sy + len];
        let s7 = &p[o + sx + sy + 1..o + sx + sy + 1 + len];
        for k in 0..len {
            out[k] = w[0] * s0[k]
                + w[1] * s1[k]
                + w[2] * s2[k]
                + w[3] * s3[k]
                + w[4] * s4[k]
                + w[5] * s5[k]
                + w[6] * s6[k]
                + w[7] * s7[k];
        }
    }

    #[inline]
    fn corner_strides(&self) -> [usize; 3] {
        [self.np * self.np, self.np, 1]
    }

    /// Subtracts the trilinear spread of `v[k]` around each of `len` consecutive probes.
    #[inline]
    fn scatter_row(&self, p: &mut [f64], base: usize, probe: &Probe, v: &[f64]) {
        let [sx, sy, _] = self.corner_strides();
        let o = (base as isize + probe.offset) as usize;
        let [tx, ty, tz] = probe.t;
        let len = v.len();
        let corners = [
            (0, (1.0 - tx) * (1.0 - ty) * (1.0 - tz)),
            (1, (1.0 - tx) * (1.0 - ty) * tz),
            (sy, (1.0 - tx) * ty * (1.0 - tz)),
            (sy + 1, (1.0 - tx) * ty * tz),
            (sx, tx * (1.0 - ty) * (1.0 - tz)),
            (sx + 1, tx * (1.0 - ty) * tz),
            (sx + sy, tx * ty * (1.0 - tz)),
            (sx + sy + 1, tx * ty * tz),
        ];
        for (c, w) in corners {
            for (dst, x) in p[o + c..o + c + len].iter_mut().zip(v) {
                *dst -= w * x;
            }
        }
    }

    /// Gain and loss parts of `Q(H1, H2)` at every node.
    pub fn gain_loss(
        &self,
        h1: &[f64],
        h2: &[f64],
        interpolation: Interpolation,
    ) -> (DistributionSlice, DistributionSlice) {
        let (gain, mut loss) = self.gain_frequency(h1, h2, interpolation);
        for (l, v) in loss.0.iter_mut().zip(h2) {
            *l *= v;
        }
        (gain, loss)
    }

    /// Gain part of `Q(H1, H2)` and the collision frequency of `H1`, so that
    /// the loss part is `ν·H2`.
    pub fn gain_frequency(
        &self,
        h1: &[f64],
        h2: &[f64],
        interpolation: Interpolation,
    ) -> (DistributionSlice, DistributionSlice) {
        let weight = match interpolation {
            Interpolation::Trilinear => None,
            Interpolation::MaxwellianWeighted => self.interpolation_weight(h2).or_else(|| self.interpolation_weight(h1)),
        };
        let mut gain = vec![0.0; self.grid.len()];
        let mut loss = vec![0.0; self.grid.len()];
        let mut ga = vec![0.0; self.n];
        let mut gb = vec![0.0; self.n];
        let symmetric = h1 == h2;
        let (r1, r2) = match &weight {
            None => (h1.to_vec(), h2.to_vec()),
            Some(w) => (
                h1.iter().zip(w).map(|(a, b)| a / b).collect(),
                h2.iter().zip(w).map(|(a, b)| a / b).collect(),
            ),
        };
        let ones;
        let wj: &[f64] = match &weight {
            Some(w) => w,
            None => {
                ones = vec![1.0; self.grid.len()];
                &ones
            }
        };
        let p1 = self.pad_values(&r1);
        let p2 = if symmetric { p1.clone() } else { self.pad_values(&r2) };
        // With H1 = H2, (ξ, ξ*, ω) and (ξ*, ξ, −ω) share their post-collision
        // pair, so half the stencils serve both nodes.
        self.for_each_stencil(symmetric, |st| {
            let rate = st.rate;
            self.sweep_rows(st.d, |ri, rj, pi, len| {
                let (a, b) = (&mut ga[..len], &mut gb[..len]);
                self.interp_row(&p1, pi, &st.post_star, a);
                self.interp_row(&p2, pi, &st.post, b);
                for k in 0..len {
                    a[k] *= rate * b[k];
                }
                {
                    let (g, l) = (&mut gain[ri..ri + len], &mut loss[ri..ri + len]);
                    let (w, h) = (&wj[rj..rj + len], &h1[rj..rj + len]);
                    for k in 0..len {
                        g[k] += w[k] * a[k];
                        l[k] += rate * h[k];
                    }
                }
                if symmetric {
                    let (g, l) = (&mut gain[rj..rj + len], &mut loss[rj..rj + len]);
                    let (w, h) = (&wj[ri..ri + len], &h1[ri..ri + len]);
                    for k in 0..len {
                        g[k] += w[k] * a[k];
                        l[k] += rate * h[k];
                    }
                }
            });
        });
        if let Some(w) = &weight {
            for (g, wi) in gain.iter_mut().zip(w) {
                *g *= wi;
            }
        }
        (gain.into(), loss.into())
    }

    /// Maxwellian with the moments of `f`, if those describe a physical state
    /// whose Maxwellian stays representable on every node.
    fn interpolation_weight(&self, f: &[f64]) -> Option<Vec<f64>> {
        let p = fluid_from_moments(&moments(f, &self.grid)).ok()?;
        let w = crate::phase_space::maxwellian(&p, &self.grid);
        if w.iter().all(|v| *v > f64::MIN_POSITIVE && v.is_finite()) {
            Some(w.0)
        } else {
            None
        }
    }

    pub fn collide(&self, h1: &[f64], h2: &[f64], interpolation: Interpolation) -> DistributionSlice {
        let (g, l) = self.gain_loss(h1, h2, interpolation);
        DistributionSlice(g.iter().zip(l.iter()).map(|(a, b)| a - b).collect())
    }

    /// Collision frequency `ν(ξ) = Σ_{ξ*,ω} w·vol·|(ξ−ξ*)·ω| F(ξ*)`.
    pub fn collision_frequency(&self, f: &[f64]) -> DistributionSlice {
        let mut nu = vec![0.0; self.grid.len()];
        self.for_each_stencil(true, |st| {
            let rate = st.rate;
            self.sweep_rows(st.d, |ri, rj, _, len| {
                for k in 0..len {
                    nu[ri + k] += rate * f[rj + k];
                    nu[rj + k] += rate * f[ri + k];
                }
            });
        });
        nu.into()
    }
}

/// `Q(H1, H2)` for the hard-sphere kernel with trilinear evaluation at the
/// post-collision velocities and zero extension outside the lattice.
pub fn q_collide(
    h1: &[f64],
    h2: &[f64],
    grid: &VelocityGrid,
    c: &CollisionConfig,
) -> Result<DistributionSlice> {
    c.require(CollisionMode::HardSphere, "q_collide")?;
    check_len(h1, grid)?;
    check_len(h2, grid)?;
    Ok(CollisionKernel::new(grid, &c.angular).collide(h1, h2, c.interpolation))
}

fn check_len(f: &[f64], grid: &VelocityGrid) -> Result<()> {
    if f.len() != grid.len() {
        return Err(VpbError::InvalidInput(format!(
            "slice has {} values but the grid has {} nodes",
            f.len(),
            grid.len()
        )));
    }
    Ok(())
}

/// Linearized collision operator about one Maxwellian.
///
/// Discretized through its symmetric weak form: with `φ = h/M`,
/// `⟨f, L h⟩_M = −¼ Σ w·vol²·|(ξ−ξ*)·ω| M M* Δφ_f Δφ_h`, where
/// `Δφ = φ + φ* − φ′ − φ*′` and `φ′, φ*′` are trilinear interpolants.
/// The operator is wrapped as `P₁ L P₁`, so on the lattice it is exactly
/// self-adjoint, negative semidefinite, annihilates the five collision
/// invariants and maps into the microscopic subspace.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    kernel: CollisionKernel,
    projector: MacroProjector,
    /// Collision frequency of the Maxwellian, used as a preconditioner.
    nu: DistributionSlice,
}

impl LinearizedOperator {
    pub fn new(p: &FluidTriple, grid: &VelocityGrid, c: &CollisionConfig) -> Result<Self> {
        c.require(CollisionMode::HardSphere, "linearized operator")?;
        let kernel = CollisionKernel::new(grid, &c.angular);
        let projector = MacroProjector::new(p, grid)?;
        let nu = kernel.collision_frequency(projector.maxwellian());
        Ok(Self {
            kernel,
            projector,
            nu,
        })
    }

    pub fn projector(&self) -> &MacroProjector {
        &self.projector
    }

    pub fn grid(&self) -> &VelocityGrid {
        self.kernel.grid()
    }

    pub fn maxwellian(&self) -> &DistributionSlice {
        self.projector.maxwellian()
    }

    pub fn collision_frequency(&self) -> &DistributionSlice {
        &self.nu
    }

    /// `L_M h`.
    pub fn apply(&self, h: &[f64]) -> DistributionSlice {
        let k = &self.kernel;
        let m = self.projector.maxwellian();
        let hp = self.projector.project_p1(h);
        let phi: Vec<f64> = hp.iter().zip(m.iter()).map(|(a, b)| a / b).collect();
        let pphi = k.pad_values(&phi);
        let mut acc = vec![0.0; k.padded_len()];
        // Each unordered pair is visited once; the weak form sums both orders.
        let [sx, sy, _] = k.corner_strides();
        let mut a = vec![0.0; k.n];
        let mut b = vec![0.0; k.n];
        k.for_each_stencil(true, |st| {
            let c = -0.5 * st.rate;
            let off = (st.d[0] * sx as i64 + st.d[1] * sy as i64 + st.d[2]) as isize;
            k.sweep_rows(st.d, |ri, rj, pi, len| {
                let (a, b) = (&mut a[..len], &mut b[..len]);
                k.interp_row(&pphi, pi, &st.post, a);
                k.interp_row(&pphi, pi, &st.post_star, b);
                {
                    let (pi_row, pj_row, mi, mj) = (&phi[ri..ri + len], &phi[rj..rj + len], &m[ri..ri + len], &m[rj..rj + len]);
                    for q in 0..len {
                        a[q] = c * mi[q] * mj[q] * (pi_row[q] + pj_row[q] - a[q] - b[q]);
                    }
                }
                let pj = (pi as isize - off) as usize;
                for (dst, v) in acc[pi..pi + len].iter_mut().zip(a.iter()) {
                    *dst += v;
                }
                for (dst, v) in acc[pj..pj + len].iter_mut().zip(a.iter()) {
                    *dst += v;
                }
                k.scatter_row(&mut acc, pi, &st.post, a);
                k.scatter_row(&mut acc, pi, &st.post_star, a);
            });
        });
        let lh = k.unpad_values(&acc);
        self.projector.project_p1(&lh)
    }

    /// `⟨f, L_M h⟩_M`.
    pub fn quadratic_form(&self, f: &[f64], h: &[f64]) -> f64 {
        self.projector.inner(f, &self.apply(h))
    }

    /// Preconditioned conjugate gradients for `L g = h` on the microscopic
    /// subspace, re-projecting every iterate.
    pub fn solve(&self, h: &[f64], tol: f64) -> Result<SolveReport> {
        let proj = &self.projector;
        let hn = proj.norm(h);
        if hn == 0.0 {
            return Ok(SolveReport {
                solution: self.kernel.grid.zeros(),
                iterations: 0,
                relative_residual: 0.0,
            });
        }
        let macro_part = proj.norm(&proj.project_p0(h));
        if macro_part > tol.max(1e-10) * hn {
            return Err(VpbError::InvalidInput(format!(
                "right-hand side is not microscopic: |P0 h|/|h| = {:e}",
                macro_part / hn
            )));
        }
        // Solve A g = b with A = −L (positive definite on the microscopic subspace).
        let b = proj.project_p1(h).scaled(-1.0);
        let precond = |r: &[f64]| -> DistributionSlice {
            let z: Vec<f64> = r.iter().zip(self.nu.iter()).map(|(a, nu)| a / nu).collect();
            proj.project_p1(&z)
        };
        let mut x = self.kernel.grid.zeros();
        let mut r = b.clone();
        let mut z = precond(&r);
        let mut p = z.clone();
        let mut rz = proj.inner(&r, &z);
        let max_iter = 500;
        for it in 1..=max_iter {
            let ap = self.apply(&p).scaled(-1.0);
            let pap = proj.inner(&p, &ap);
            if !(pap > 0.0) {
                return Err(VpbError::Numerical(format!(
                    "linearized operator lost definiteness at iteration {it} (pAp = {pap:e})"
                )));
            }
            let alpha = rz / pap;
            x.axpy(alpha, &p);
            r.axpy(-alpha, &ap);
            x = proj.project_p1(&x);
            r = proj.project_p1(&r);
            let rel = proj.norm(&r) / hn;
            if rel <= tol {
                // Report the true residual of the returned iterate.
                let lx = self.apply(&x);
                let true_rel = proj.norm(&lx.add_scaled(-1.0, h)) / hn;
                return Ok(SolveReport {
                    solution: x,
                    iterations: it,
                    relative_residual: true_rel,
                });
            }
            z = precond(&r);
            let rz_new = proj.inner(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p = z.add_scaled(beta, &p);
            p = proj.project_p1(&p);
        }
        let lx = self.apply(&x);
        Err(VpbError::NoConvergence {
            context: "linearized collision pseudo-inverse".into(),
            iterations: max_iter,
            residual: proj.norm(&lx.add_scaled(-1.0, h)) / hn,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: DistributionSlice,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// `L_M h` about `M_p`.
pub fn linearized_l(
    h: &[f64],
    p: &FluidTriple,
    grid: &VelocityGrid,
    c: &CollisionConfig,
) -> Result<DistributionSlice> {
    check_len(h, grid)?;
    Ok(LinearizedOperator::new(p, grid, c)?.apply(h))
}

/// `Q(h, M) + Q(M, h)` evaluated literally with the nonlinear kernel; kept to
/// quantify how far the direct linearization is from the weak-form operator.
pub fn linearized_l_direct(
    h: &[f64],
    p: &FluidTriple,
    grid: &VelocityGrid,
    c: &CollisionConfig,
) -> Result<DistributionSlice> {
    c.require(CollisionMode::HardSphere, "linearized_l_direct")?;
    check_len(h, grid)?;
    let k = CollisionKernel::new(grid, &c.angular);
    let m = crate::phase_space::maxwellian(p, grid);
    let a = k.collide(h, &m, c.interpolation);
    let b = k.collide(&m, h, c.interpolation);
    Ok(a.add_scaled(1.0, &b))
}

/// Solves `L_M g = h` for microscopic `h`, returning microscopic `g`.
pub fn solve_l_inverse(
    h: &[f64],
    p: &FluidTriple,
    grid: &VelocityGrid,
    c: &CollisionConfig,
    tol: f64,
) -> Result<DistributionSlice> {
    check_len(h, grid)?;
    Ok(LinearizedOperator::new(p, grid, c)?.solve(h, tol)?.solution)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportCoefficients {
    /// Viscosity from the `ξ₁²` formula.
    pub mu: f64,
    /// Viscosity from the `ξ₁ξ₂` formula.
    pub mu_alt: f64,
    pub kappa: f64,
    /// `|mu − mu_alt| / mu`
    pub discrepancy: f64,
}

/// Viscosity and heat conductivity at `ρ = 1, u = 0` and temperature `theta`.
pub fn transport_coefficients(
    theta: f64,
    grid: &VelocityGrid,
    c: &CollisionConfig,
    tol: f64,
) -> Result<TransportCoefficients> {
    let p = FluidTriple::new(1.0, [0.0; 3], theta)?;
    let op = LinearizedOperator::new(&p, grid, c)?;
    transport_with(&op, tol)
}

pub fn transport_with(op: &LinearizedOperator, tol: f64) -> Result<TransportCoefficients> {
    let grid = op.grid();
    let proj = op.projector();
    let theta = proj.fluid.theta;
    let m = op.maxwellian();
    let moment = |weight: &dyn Fn(&[f64; 3]) -> f64| -> Result<f64> {
        let src: Vec<f64> = grid.nodes().iter().zip(m.iter()).map(|(x, mv)| weight(x) * mv).collect();
        let rhs = proj.project_p1(&src);
        let g = op.solve(&rhs, tol)?.solution;
        Ok(grid
            .nodes()
            .iter()
            .zip(g.iter())
            .map(|(x, gv)| weight(x) * gv)
            .sum::<f64>()
            * grid.cell_volume())
    };
    let x11 = moment(&|x| x[0] * x[0])?;
    let x12 = moment(&|x| x[0] * x[1])?;
    let q1 = moment(&|x| (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) * x[0])?;
    let mu = -x11 / (2.0 * theta);
    let mu_alt = -3.0 * x12 / (2.0 * theta);
    let kappa = -3.0 * q1 / (8.0 * theta * theta);
    Ok(TransportCoefficients {
        mu,
        mu_alt,
        kappa,
        discrepancy: (mu - mu_alt).abs() / mu.abs(),
    })
}

/// `Ḡ = (3/2θ) L⁻¹ P₁[ξ₁ M (ξ₁ ∂ₓu₁ + |ξ−u|²/(2θ) ∂ₓθ)]`.
pub fn gbar(
    du1_dx: f64,
    dtheta_dx: f64,
    p: &FluidTriple,
    grid: &VelocityGrid,
    c: &CollisionConfig,
    tol: f64,
) -> Result<DistributionSlice> {
    let op = LinearizedOperator::new(p, grid, c)?;
    gbar_with(&op, du1_dx, dtheta_dx, tol)
}

pub fn gbar_with(op: &LinearizedOperator, du1_dx: f64, dtheta_dx: f64, tol: f64) -> Result<DistributionSlice> {
    let grid = op.grid();
    if du1_dx == 0.0 && dtheta_dx == 0.0 {
        return Ok(grid.zeros());
    }
    let p = op.projector().fluid;
    let m = op.maxwellian();
    let src: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(m.iter())
        .map(|(x, mv)| {
            let c2 = (x[0] - p.u[0]).powi(2) + (x[1] - p.u[1]).powi(2) + (x[2] - p.u[2]).powi(2);
            x[0] * mv * (x[0] * du1_dx + c2 / (2.0 * p.theta) * dtheta_dx)
        })
        .collect();
    let rhs = op.projector().project_p1(&src);
    Ok(op.solve(&rhs, tol)?.solution.scaled(3.0 / (2.0 * p.theta)))
}

/// `∂_{ξ₁} f` by central differences with one-sided closure at the faces.
pub fn d_dxi1(f: &[f64], grid: &VelocityGrid) -> DistributionSlice {
    let n = grid.n_per_axis();
    let h = grid.spacing();
    let stride = n * n;
    let mut out = grid.zeros();
    for idx in 0..grid.len() {
        let i = idx / stride;
        out[idx] = if i == 0 {
            (-3.0 * f[idx] + 4.0 * f[idx + stride] - f[idx + 2 * stride]) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * f[idx] - 4.0 * f[idx - stride] + f[idx - 2 * stride]) / (2.0 * h)
        } else {
            (f[idx + stride] - f[idx - stride]) / (2.0 * h)
        };
    }
    out
}

/// Cell-wise `Θ = L⁻¹[∂ₜG + P₁(ξ₁∂ₓG) − ∂ₓφ ∂_{ξ₁}G] − L⁻¹Q(G, G)`.
///
/// `∂ₜ` is the forward difference of the two snapshots and `∂ₓ` the central
/// difference across cells (one-sided at the ends). The bracket is projected
/// onto the microscopic subspace of each cell's Maxwellian before inversion.
#[allow(clippy::too_many_arguments)]
pub fn compute_theta_residual(
    g_prev: &DistributionField,
    g_next: &DistributionField,
    dt: f64,
    dx: f64,
    dphidx: &[f64],
    p_field: &[FluidTriple],
    grid: &VelocityGrid,
    c: &CollisionConfig,
    tol: f64,
) -> Result<DistributionField> {
    c.require(CollisionMode::HardSphere, "compute_theta_residual")?;
    let nc = g_next.n_cells();
    if g_prev.n_cells() != nc || dphidx.len() != nc || p_field.len() != nc || g_next.n_nodes() != grid.len() {
        return Err(VpbError::InvalidInput(
            "theta residual inputs have inconsistent dimensions".into(),
        ));
    }
    if !(dt > 0.0) || !(dx > 0.0) {
        return Err(VpbError::InvalidInput("dt and dx must be positive".into()));
    }
    let kernel = CollisionKernel::new(grid, &c.angular);
    let mut out = DistributionField::zeros(nc, grid.len());
    for cell in 0..nc {
        let g = g_next.cell(cell);
        if g.iter().all(|v| *v == 0.0) && g_prev.cell(cell).iter().all(|v| *v == 0.0) {
            continue;
        }
        let op = LinearizedOperator {
            kernel: kernel.clone(),
            projector: MacroProjector::new(&p_field[cell], grid)?,
            nu: grid.zeros(),
        };
        let op = LinearizedOperator {
            nu: kernel.collision_frequency(op.maxwellian()),
            ..op
        };
        let proj = op.projector();
        let dgdx: Vec<f64> = if nc == 1 {
            vec![0.0; grid.len()]
        } else {
            let (a, b, w) = if cell == 0 {
                (g_next.cell(1), g_next.cell(0), dx)
            } else if cell == nc - 1 {
                (g_next.cell(nc - 1), g_next.cell(nc - 2), dx)
            } else {
                (g_next.cell(cell + 1), g_next.cell(cell - 1), 2.0 * dx)
            };
            a.iter().zip(b).map(|(x, y)| (x - y) / w).collect()
        };
        let xi_dgdx: Vec<f64> = grid.nodes().iter().zip(&dgdx).map(|(x, v)| x[0] * v).collect();
        let transport = proj.project_p1(&xi_dgdx);
        let dg = d_dxi1(g, grid);
        let mut bracket: Vec<f64> = (0..grid.len())
            .map(|k| (g[k] - g_prev.cell(cell)[k]) / dt + transport[k] - dphidx[cell] * dg[k])
            .collect();
        let qgg = kernel.collide(g, g, c.interpolation);
        for (b, q) in bracket.iter_mut().zip(qgg.iter()) {
            *b -= q;
        }
        let rhs = proj.project_p1(&bracket);
        let theta = op.solve(&rhs, tol)?.solution;
        out.cell_mut(cell).copy_from_slice(&theta);
    }
    Ok(out)
}

/// `−⟨h, L_M h⟩_{M*} / ∫(1+|ξ|) h²/M*`.
pub fn coercivity_ratio(
    h: &[f64],
    p: &FluidTriple,
    mstar: &FluidTriple,
    grid: &VelocityGrid,
    c: &CollisionConfig,
) -> Result<f64> {
    let op = LinearizedOperator::new(p, grid, c)?;
    coercivity_ratio_with(&op, h, mstar)
}

pub fn coercivity_ratio_with(op: &LinearizedOperator, h: &[f64], mstar: &FluidTriple) -> Result<f64> {
    let grid = op.grid();
    let p = op.projector().fluid;
    if !(p.theta / 2.0 < mstar.theta) {
        return Err(VpbError::InvalidInput(format!(
            "coercivity requires theta/2 < theta_* (theta = {}, theta_* = {})",
            p.theta, mstar.theta
        )));
    }
    let proj = op.projector();
    let hn = proj.norm(h);
    if hn == 0.0 || proj.norm(&proj.project_p0(h)) > 1e-8 * hn {
        return Err(VpbError::InvalidInput(
            "coercivity ratio needs a nonzero microscopic h".into(),
        ));
    }
    let ms = crate::phase_space::maxwellian(mstar, grid);
    let lh = op.apply(h);
    let mut num = 0.0;
    let mut den = 0.0;
    for (((hv, lv), mv), x) in h.iter().zip(lh.iter()).zip(ms.iter()).zip(grid.nodes()) {
        num -= hv * lv / mv;
        let speed = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        den += (1.0 + speed) * hv * hv / mv;
    }
    Ok(num / den)
}

/// `rate·(M[F] − F)` with `M[F]` moment-matched on the lattice, so the result
/// has vanishing discrete moments.
pub fn bgk_relax(f: &[f64], grid: &VelocityGrid, c: &CollisionConfig) -> Result<DistributionSlice> {
    c.require(CollisionMode::BgkSurrogate, "bgk_relax")?;
    check_len(f, grid)?;
    let target = moments(f, grid);
    fluid_from_moments(&target)?;
    let (_, m) = discrete_maxwellian(&target, grid)?;
    Ok(DistributionSlice(
        m.iter().zip(f).map(|(a, b)| c.bgk_rate * (a - b)).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::maxwellian;

    #[test]
    fn lebedev_weights_and_exactness() {
        for (n, degree) in [(6, 3), (14, 5), (26, 7), (38, 9), (50, 11)] {
            let q = AngularQuadrature::lebedev(n).unwrap();
            assert_eq!(q.len(), n);
            assert!((q.weights().iter().sum::<f64>() - FOUR_PI).abs() < 1e-12);
            // ∫x² = 4π/3, ∫x⁴ = 4π/5, ∫x²y² = 4π/15
            assert!((q.integrate(|w| w[0] * w[0]) - FOUR_PI / 3.0).abs() < 1e-12);
            if degree >= 5 {
                assert!((q.integrate(|w| w[0].powi(4)) - FOUR_PI / 5.0).abs() < 1e-12, "{n}");
                assert!((q.integrate(|w| w[0] * w[0] * w[1] * w[1]) - FOUR_PI / 15.0).abs() < 1e-12);
            }
            if degree >= 7 {
                // ∫x⁶ = 4π/7
                assert!((q.integrate(|w| w[2].powi(6)) - FOUR_PI / 7.0).abs() < 1e-12, "{n}");
            }
            if degree >= 11 {
                // ∫x⁴y⁴z² = 4π·9·9·1/(13·11·9·7·5·3)... checked against the general formula
                let exact = FOUR_PI * 3.0 * 3.0 * 1.0 / (3.0 * 5.0 * 7.0 * 9.0 * 11.0);
                assert!((q.integrate(|w| w[0].powi(4) * w[1].powi(4) * w[2].powi(2)) - exact).abs() < 1e-12);
            }
        }
        assert!(AngularQuadrature::lebedev(7).is_err());
    }

    #[test]
    fn product_rule_is_antipodal_and_exact() {
        let q = AngularQuadrature::product_gauss(4, 8).unwrap();
        assert!((q.integrate(|w| w[2].powi(4)) - FOUR_PI / 5.0).abs() < 1e-12);
        for d in q.directions() {
            assert!(q
                .directions()
                .iter()
                .any(|e| (e[0] + d[0]).abs() + (e[1] + d[1]).abs() + (e[2] + d[2]).abs() < 1e-12));
        }
    }

    #[test]
    fn gauss_legendre_small() {
        let (x, w) = gauss_legendre(3);
        assert!((x[2] - (0.6f64).sqrt()).abs() < 1e-15);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let g = VelocityGrid::new(4.0, 4).unwrap();
        let c = CollisionConfig::bgk(AngularQuadrature::lebedev(6).unwrap(), 1.0).unwrap();
        let f = g.map(|_| 1.0);
        assert!(matches!(q_collide(&f, &f, &g, &c), Err(VpbError::ModeMismatch(_))));
        let c = CollisionConfig::hard_sphere(AngularQuadrature::lebedev(6).unwrap());
        assert!(matches!(bgk_relax(&f, &g, &c), Err(VpbError::ModeMismatch(_))));
    }

    #[test]
    fn bilinear_in_first_argument() {
        let g = VelocityGrid::new(4.0, 6).unwrap();
        let c = CollisionConfig::hard_sphere(AngularQuadrature::lebedev(14).unwrap());
        let p = FluidTriple::slab(1.0, 0.2, 1.0).unwrap();
        let m = maxwellian(&p, &g);
        let f = g.map(|x| (-(x[0] - 0.5).powi(2) - x[1] * x[1] - x[2] * x[2]).exp());
        let a = q_collide(&f, &m, &g, &c).unwrap();
        let b = q_collide(&f.scaled(2.5), &m, &g, &c).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((2.5 * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn bgk_relax_output_has_zero_moments() {
        let g = VelocityGrid::new(5.0, 10).unwrap();
        let c = CollisionConfig::bgk(AngularQuadrature::lebedev(6).unwrap(), 2.0).unwrap();
        let f = g.map(|x| (-(x[0] - 0.5).powi(2) - x[1] * x[1] - x[2] * x[2]).exp() + 0.3 * (-(x[0] + 1.0).powi(2) * 2.0 - x[1] * x[1] - x[2] * x[2]).exp());
        let r = bgk_relax(&f, &g, &c).unwrap();
        let m = moments(&r, &g).as_array();
        for v in m {
            assert!(v.abs() < 1e-13, "{m:?}");
        }
    }
}
