//! Velocity and space discretization, local Maxwellians, fluid moments, the
//! orthonormal macroscopic basis and the macro/micro projections.
//!
//! The velocity lattice is a uniform cell-centred grid on `[-L, L]^3`, so the
//! node set is closed under `ξ -> -ξ` and odd moments of even functions
//! cancel to round-off. All velocity integrals are midpoint sums with the
//! weight `cell_volume`.

use std::ops::{Deref, DerefMut};

use crate::error::{Result, VpbError};

/// Gas constant. Fixed so that the internal energy equals the temperature.
pub const GAS_CONSTANT: f64 = 2.0 / 3.0;

/// Uniform, symmetric velocity lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    half_width: f64,
    n_per_axis: usize,
    spacing: f64,
    axis: Vec<f64>,
    nodes: Vec<[f64; 3]>,
}

impl VelocityGrid {
    pub fn new(half_width: f64, n_per_axis: usize) -> Result<Self> {
        if n_per_axis < 4 {
            return Err(VpbError::InvalidInput(format!(
                "velocity grid needs at least 4 nodes per axis, got {n_per_axis}"
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(VpbError::InvalidInput(format!(
                "velocity half width must be positive, got {half_width}"
            )));
        }
        let spacing = 2.0 * half_width / n_per_axis as f64;
        // Built as -(mirror) for the lower half so the lattice is exactly symmetric.
        let mut axis = vec![0.0; n_per_axis];
        for k in 0..n_per_axis {
            let mirror = n_per_axis - 1 - k;
            if k < mirror {
                axis[k] = -half_width + (k as f64 + 0.5) * spacing;
            } else {
                axis[k] = -axis[mirror];
            }
        }
        if n_per_axis % 2 == 1 {
            axis[n_per_axis / 2] = 0.0;
        }
        let mut nodes = Vec::with_capacity(n_per_axis.pow(3));
        for &a in &axis {
            for &b in &axis {
                for &c in &axis {
                    nodes.push([a, b, c]);
                }
            }
        }
        Ok(Self {
            half_width,
            n_per_axis,
            spacing,
            axis,
            nodes,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Lattice spacing along each axis.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    /// Node coordinates along one axis (identical for all three axes).
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    /// Flat index of the node with per-axis indices `(i, j, k)`; `i` runs along ξ₁.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n_per_axis + j) * self.n_per_axis + k
    }

    /// Index of the node `-ξ` for the node at `idx`.
    pub fn mirror_index(&self, idx: usize) -> usize {
        let n = self.n_per_axis;
        let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
        self.index(n - 1 - i, n - 1 - j, n - 1 - k)
    }

    pub fn zeros(&self) -> DistributionSlice {
        DistributionSlice(vec![0.0; self.len()])
    }

    /// Evaluates `f` at every node.
    pub fn map<F: Fn(&[f64; 3]) -> f64>(&self, f: F) -> DistributionSlice {
        DistributionSlice(self.nodes.iter().map(f).collect())
    }
}

/// Uniform cell-centred grid on `[x_min, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    pub dx: f64,
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_min < x_max) || n_cells == 0 {
            return Err(VpbError::InvalidInput(format!(
                "spatial grid needs x_min < x_max and n_cells > 0, got [{x_min}, {x_max}] with {n_cells}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_cells,
            dx: (x_max - x_min) / n_cells as f64,
        })
    }

    pub fn center(&self, cell: usize) -> f64 {
        self.x_min + (cell as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|c| self.center(c)).collect()
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }
}

/// Macroscopic state `[ρ, u, θ]` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidTriple {
    pub rho: f64,
    pub u: [f64; 3],
    pub theta: f64,
}

impl FluidTriple {
    pub fn new(rho: f64, u: [f64; 3], theta: f64) -> Result<Self> {
        if !(rho > 0.0) || !(theta > 0.0) || !rho.is_finite() || !theta.is_finite() {
            return Err(VpbError::InvalidInput(format!(
                "fluid state needs rho > 0 and theta > 0, got rho={rho}, theta={theta}"
            )));
        }
        if u.iter().any(|c| !c.is_finite()) {
            return Err(VpbError::InvalidInput("fluid velocity must be finite".into()));
        }
        Ok(Self { rho, u, theta })
    }

    /// Slab state with velocity `(u1, 0, 0)`.
    pub fn slab(rho: f64, u1: f64, theta: f64) -> Result<Self> {
        Self::new(rho, [u1, 0.0, 0.0], theta)
    }

    /// Thermal variance `Rθ` of the Maxwellian.
    pub fn thermal_variance(&self) -> f64 {
        GAS_CONSTANT * self.theta
    }
}

/// Velocity samples of a distribution at one spatial point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DistributionSlice(pub Vec<f64>);

impl Deref for DistributionSlice {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DistributionSlice {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for DistributionSlice {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl DistributionSlice {
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self(self.0.iter().map(|v| a * v).collect())
    }

    /// `self + a * other`
    pub fn add_scaled(&self, a: f64, other: &[f64]) -> Self {
        Self(self.0.iter().zip(other).map(|(x, y)| x + a * y).collect())
    }

    pub fn axpy(&mut self, a: f64, other: &[f64]) {
        for (x, y) in self.0.iter_mut().zip(other) {
            *x += a * y;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn l2(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Distribution on the spatial × velocity grid, stored cell-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    n_cells: usize,
    n_nodes: usize,
    data: Vec<f64>,
}

impl DistributionField {
    pub fn zeros(n_cells: usize, n_nodes: usize) -> Self {
        Self {
            n_cells,
            n_nodes,
            data: vec![0.0; n_cells * n_nodes],
        }
    }

    pub fn from_slices(slices: &[DistributionSlice]) -> Result<Self> {
        let n_nodes = slices.first().map(|s| s.len()).unwrap_or(0);
        if slices.iter().any(|s| s.len() != n_nodes) {
            return Err(VpbError::InvalidInput(
                "distribution slices have inconsistent lengths".into(),
            ));
        }
        let mut data = Vec::with_capacity(slices.len() * n_nodes);
        for s in slices {
            data.extend_from_slice(s);
        }
        Ok(Self {
            n_cells: slices.len(),
            n_nodes,
            data,
        })
    }

    pub fn from_raw(n_cells: usize, n_nodes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_cells * n_nodes {
            return Err(VpbError::InvalidInput(format!(
                "field payload has {} values, expected {}",
                data.len(),
                n_cells * n_nodes
            )));
        }
        Ok(Self {
            n_cells,
            n_nodes,
            data,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        &self.data[c * self.n_nodes..(c + 1) * self.n_nodes]
    }

    pub fn cell_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.n_nodes..(c + 1) * self.n_nodes]
    }

    pub fn slice(&self, c: usize) -> DistributionSlice {
        DistributionSlice(self.cell(c).to_vec())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn cells(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.n_nodes)
    }

    pub fn cells_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        self.data.chunks_exact_mut(self.n_nodes)
    }
}

/// The five conserved velocity moments of a slice.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FluidMoments {
    pub mass: f64,
    pub momentum: [f64; 3],
    /// Total energy density `ρ(θ + |u|²/2)`.
    pub energy: f64,
}

impl FluidMoments {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.mass,
            self.momentum[0],
            self.momentum[1],
            self.momentum[2],
            self.energy,
        ]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            mass: a[0],
            momentum: [a[1], a[2], a[3]],
            energy: a[4],
        }
    }

    /// Exact moments of the continuum Maxwellian with parameters `p`.
    pub fn of_maxwellian(p: &FluidTriple) -> Self {
        let u2 = p.u.iter().map(|c| c * c).sum::<f64>();
        Self {
            mass: p.rho,
            momentum: [p.rho * p.u[0], p.rho * p.u[1], p.rho * p.u[2]],
            energy: p.rho * (p.theta + 0.5 * u2),
        }
    }
}

/// Local Maxwellian with gas constant `2/3` sampled on the lattice.
pub fn maxwellian(p: &FluidTriple, grid: &VelocityGrid) -> DistributionSlice {
    let var = p.thermal_variance();
    let norm = p.rho / (2.0 * std::f64::consts::PI * var).powf(1.5);
    grid.map(|xi| {
        let d2 = (xi[0] - p.u[0]).powi(2) + (xi[1] - p.u[1]).powi(2) + (xi[2] - p.u[2]).powi(2);
        norm * (-d2 / (2.0 * var)).exp()
    })
}

/// Maxwellian value at an arbitrary velocity.
pub fn maxwellian_at(p: &FluidTriple, xi: &[f64; 3]) -> f64 {
    let var = p.thermal_variance();
    let d2 = (xi[0] - p.u[0]).powi(2) + (xi[1] - p.u[1]).powi(2) + (xi[2] - p.u[2]).powi(2);
    p.rho / (2.0 * std::f64::consts::PI * var).powf(1.5) * (-d2 / (2.0 * var)).exp()
}

/// Midpoint-rule moments `(∫f, ∫ξf, ∫½|ξ|²f)`.
pub fn moments(f: &[f64], grid: &VelocityGrid) -> FluidMoments {
    let mut acc = [0.0; 5];
    for (v, xi) in f.iter().zip(grid.nodes()) {
        acc[0] += v;
        acc[1] += xi[0] * v;
        acc[2] += xi[1] * v;
        acc[3] += xi[2] * v;
        acc[4] += 0.5 * (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]) * v;
    }
    let vol = grid.cell_volume();
    FluidMoments::from_array(acc.map(|a| a * vol))
}

pub fn fluid_from_moments(m: &FluidMoments) -> Result<FluidTriple> {
    if !(m.mass > 0.0) {
        return Err(VpbError::Unphysical(format!(
            "nonpositive mass {} in moment inversion",
            m.mass
        )));
    }
    let u = m.momentum.map(|c| c / m.mass);
    let theta = m.energy / m.mass - 0.5 * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
    if !(theta > 0.0) {
        return Err(VpbError::Unphysical(format!(
            "nonpositive temperature {theta} in moment inversion"
        )));
    }
    Ok(FluidTriple {
        rho: m.mass,
        u,
        theta,
    })
}

/// Maxwellian whose discrete moments on `grid` equal `target` to round-off.
///
/// Starts from the continuum parameters and corrects them with a Newton
/// iteration on the five discrete moments, so truncation and quadrature
/// error do not leak into moment-preserving relaxation steps.
pub fn discrete_maxwellian(target: &FluidMoments, grid: &VelocityGrid) -> Result<(FluidTriple, DistributionSlice)> {
    let mut p = fluid_from_moments(target)?;
    let goal = target.as_array();
    let scale = [
        goal[0].abs(),
        goal[0].abs(),
        goal[0].abs(),
        goal[0].abs(),
        goal[4].abs().max(goal[0].abs()),
    ];
    let vol = grid.cell_volume();
    for _ in 0..12 {
        let m = maxwellian(&p, grid);
        let have = moments(&m, grid).as_array();
        let resid: [f64; 5] = std::array::from_fn(|k| goal[k] - have[k]);
        if resid.iter().zip(&scale).all(|(r, s)| r.abs() <= 1e-15 * s) {
            return Ok((p, m));
        }
        // Jacobian of the moments with respect to (ρ, u, θ) from the analytic
        // derivative of log M: ∂ρ -> 1/ρ, ∂u_a -> c_a/(Rθ), ∂θ -> (|c|²/(2Rθ) - 3/2)/θ.
        let var = p.thermal_variance();
        let mut jac = [[0.0; 5]; 5];
        for (v, xi) in m.iter().zip(grid.nodes()) {
            let c = [xi[0] - p.u[0], xi[1] - p.u[1], xi[2] - p.u[2]];
            let c2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
            let dlog = [
                1.0 / p.rho,
                c[0] / var,
                c[1] / var,
                c[2] / var,
                (c2 / (2.0 * var) - 1.5) / p.theta,
            ];
            let psi = [1.0, xi[0], xi[1], xi[2], 0.5 * (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2])];
            for a in 0..5 {
                for b in 0..5 {
                    jac[a][b] += psi[a] * dlog[b] * v * vol;
                }
            }
        }
        let step = solve_dense::<5>(jac, resid).ok_or_else(|| {
            VpbError::Numerical("singular Jacobian in discrete Maxwellian fit".into())
        })?;
        p.rho += step[0];
        p.u[0] += step[1];
        p.u[1] += step[2];
        p.u[2] += step[3];
        p.theta += step[4];
        if !(p.rho > 0.0 && p.theta > 0.0) {
            return Err(VpbError::Numerical(
                "discrete Maxwellian fit left the physical range".into(),
            ));
        }
    }
    let m = maxwellian(&p, grid);
    Ok((p, m))
}

/// Gaussian elimination with partial pivoting for a small dense system.
pub(crate) fn solve_dense<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let mut s = b[row];
        for k in row + 1..N {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// `⟨f, g⟩_M = Σ f g / M · vol`.
pub fn inner_product(f: &[f64], g: &[f64], mref: &[f64], grid: &VelocityGrid) -> Result<f64> {
    let mut acc = 0.0;
    for ((a, b), m) in f.iter().zip(g).zip(mref) {
        if !(*m > 0.0) {
            return Err(VpbError::InvalidInput(
                "reference Maxwellian must be strictly positive on every node".into(),
            ));
        }
        acc += a * b / m;
    }
    Ok(acc * grid.cell_volume())
}

/// Polynomial factors `χ_j / M` of the macroscopic basis.
fn chi_factors(p: &FluidTriple, xi: &[f64; 3]) -> [f64; 5] {
    let var = p.thermal_variance();
    let c = [xi[0] - p.u[0], xi[1] - p.u[1], xi[2] - p.u[2]];
    let c2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
    let s = (GAS_CONSTANT * p.rho * p.theta).sqrt();
    [
        1.0 / p.rho.sqrt(),
        c[0] / s,
        c[1] / s,
        c[2] / s,
        (c2 / var - 3.0) / (6.0 * p.rho).sqrt(),
    ]
}

/// The five functions `χ₀..χ₄` spanning the macroscopic subspace of `M_p`.
pub fn chi_basis(p: &FluidTriple, grid: &VelocityGrid) -> [DistributionSlice; 5] {
    let m = maxwellian(p, grid);
    let mut out: [DistributionSlice; 5] = std::array::from_fn(|_| grid.zeros());
    for (idx, xi) in grid.nodes().iter().enumerate() {
        let fac = chi_factors(p, xi);
        for j in 0..5 {
            out[j][idx] = fac[j] * m[idx];
        }
    }
    out
}

/// Macro/micro projector for one Maxwellian on one grid.
///
/// The analytic basis is orthonormal only up to quadrature error on a
/// truncated lattice, so the projector inverts the discrete Gram matrix.
/// This makes `P₀` an exact orthogonal projection in the discrete inner
/// product; on adequate grids the Gram matrix is the identity to ~1e-9.
#[derive(Debug, Clone)]
pub struct MacroProjector {
    pub fluid: FluidTriple,
    maxwellian: DistributionSlice,
    factors: Vec<[f64; 5]>,
    gram_inv: [[f64; 5]; 5],
    vol: f64,
}

impl MacroProjector {
    pub fn new(p: &FluidTriple, grid: &VelocityGrid) -> Result<Self> {
        let maxwellian = maxwellian(p, grid);
        let factors: Vec<[f64; 5]> = grid.nodes().iter().map(|xi| chi_factors(p, xi)).collect();
        let vol = grid.cell_volume();
        let mut gram = [[0.0; 5]; 5];
        for (fac, m) in factors.iter().zip(maxwellian.iter()) {
            for a in 0..5 {
                for b in 0..5 {
                    gram[a][b] += fac[a] * fac[b] * m * vol;
                }
            }
        }
        let mut gram_inv = [[0.0; 5]; 5];
        for col in 0..5 {
            let mut e = [0.0; 5];
            e[col] = 1.0;
            let x = solve_dense::<5>(gram, e).ok_or_else(|| {
                VpbError::Numerical("macroscopic Gram matrix is singular on this grid".into())
            })?;
            for row in 0..5 {
                gram_inv[row][col] = x[row];
            }
        }
        Ok(Self {
            fluid: *p,
            maxwellian,
            factors,
            gram_inv,
            vol,
        })
    }

    pub fn maxwellian(&self) -> &DistributionSlice {
        &self.maxwellian
    }

    /// Coefficients `⟨h, χ_j⟩_M`.
    pub fn coefficients(&self, h: &[f64]) -> [f64; 5] {
        let mut c = [0.0; 5];
        for (v, fac) in h.iter().zip(&self.factors) {
            for j in 0..5 {
                c[j] += v * fac[j];
            }
        }
        c.map(|x| x * self.vol)
    }

    pub fn project_p0(&self, h: &[f64]) -> DistributionSlice {
        let c = self.coefficients(h);
        let mut a = [0.0; 5];
        for i in 0..5 {
            for j in 0..5 {
                a[i] += self.gram_inv[i][j] * c[j];
            }
        }
        DistributionSlice(
            self.factors
                .iter()
                .zip(self.maxwellian.iter())
                .map(|(fac, m)| m * (0..5).map(|i| a[i] * fac[i]).sum::<f64>())
                .collect(),
        )
    }

    pub fn project_p1(&self, h: &[f64]) -> DistributionSlice {
        let p0 = self.project_p0(h);
        DistributionSlice(h.iter().zip(p0.iter()).map(|(a, b)| a - b).collect())
    }

    /// `⟨f, g⟩_M` for this projector's Maxwellian.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter()
            .zip(g)
            .zip(self.maxwellian.iter())
            .map(|((a, b), m)| a * b / m)
            .sum::<f64>()
            * self.vol
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }
}

pub fn project_p0(h: &[f64], p: &FluidTriple, grid: &VelocityGrid) -> Result<DistributionSlice> {
    Ok(MacroProjector::new(p, grid)?.project_p0(h))
}

pub fn project_p1(h: &[f64], p: &FluidTriple, grid: &VelocityGrid) -> Result<DistributionSlice> {
    Ok(MacroProjector::new(p, grid)?.project_p1(h))
}

/// Splits `F = M + G` with `M` the local Maxwellian carrying the moments of `F`.
pub fn macro_micro_split(f: &[f64], grid: &VelocityGrid) -> Result<(FluidTriple, DistributionSlice)> {
    let p = fluid_from_moments(&moments(f, grid))?;
    let m = maxwellian(&p, grid);
    Ok((p, DistributionSlice(f.iter().zip(m.iter()).map(|(a, b)| a - b).collect())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> FluidTriple {
        FluidTriple::slab(1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn grid_node_count_and_volume() {
        let g = VelocityGrid::new(6.0, 16).unwrap();
        assert_eq!(g.len(), 4096);
        assert_relative_eq!(g.cell_volume(), 0.421875, max_relative = 1e-15);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(VelocityGrid::new(6.0, 2).is_err());
        assert!(VelocityGrid::new(0.0, 8).is_err());
        assert!(VelocityGrid::new(-1.0, 8).is_err());
    }

    #[test]
    fn grid_closed_under_negation() {
        for n in [4, 5, 7, 12] {
            let g = VelocityGrid::new(3.7, n).unwrap();
            for (idx, xi) in g.nodes().iter().enumerate() {
                let m = g.nodes()[g.mirror_index(idx)];
                assert_eq!([-xi[0], -xi[1], -xi[2]], m);
            }
        }
    }

    #[test]
    fn maxwellian_peak_value() {
        let g = VelocityGrid::new(6.0, 5).unwrap();
        let m = maxwellian(&unit(), &g);
        let center = g.index(2, 2, 2);
        assert_relative_eq!(m[center], 0.116_645_257_464_699_5, max_relative = 1e-14);
        assert_relative_eq!(m[center], (2.0 * std::f64::consts::PI * 2.0 / 3.0).powf(-1.5), max_relative = 1e-14);
    }

    #[test]
    fn maxwellian_even_about_mean() {
        let p = FluidTriple::new(1.3, [0.4, -0.2, 0.1], 0.9).unwrap();
        for eta in [[0.3, 0.1, -0.7], [1.0, 2.0, 0.5]] {
            let a = maxwellian_at(&p, &[p.u[0] + eta[0], p.u[1] + eta[1], p.u[2] + eta[2]]);
            let b = maxwellian_at(&p, &[p.u[0] - eta[0], p.u[1] - eta[1], p.u[2] - eta[2]]);
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn zero_slice_has_zero_moments() {
        let g = VelocityGrid::new(4.0, 6).unwrap();
        assert_eq!(moments(&g.zeros(), &g), FluidMoments::default());
    }

    #[test]
    fn fluid_from_moments_examples() {
        let p = fluid_from_moments(&FluidMoments { mass: 1.0, momentum: [0.0; 3], energy: 1.0 }).unwrap();
        assert_eq!(p, unit());
        let p = fluid_from_moments(&FluidMoments { mass: 2.0, momentum: [2.0, 0.0, 0.0], energy: 2.6 }).unwrap();
        assert_relative_eq!(p.u[0], 1.0);
        assert_relative_eq!(p.theta, 0.8, max_relative = 1e-14);
        assert!(fluid_from_moments(&FluidMoments { mass: 1.0, momentum: [0.0; 3], energy: -0.1 }).is_err());
        assert!(fluid_from_moments(&FluidMoments { mass: 0.0, momentum: [0.0; 3], energy: 1.0 }).is_err());
    }

    #[test]
    fn inner_product_guards_zero_weight() {
        let g = VelocityGrid::new(4.0, 4).unwrap();
        let f = g.map(|_| 1.0);
        assert!(inner_product(&f, &f, &g.zeros(), &g).is_err());
    }

    #[test]
    fn inner_product_of_maxwellian_is_density() {
        let g = VelocityGrid::new(5.5, 20).unwrap();
        let p = FluidTriple::slab(1.7, 0.2, 1.1).unwrap();
        let m = maxwellian(&p, &g);
        assert_relative_eq!(inner_product(&m, &m, &m, &g).unwrap(), 1.7, max_relative = 1e-8);
    }

    #[test]
    fn projections_fix_maxwellian() {
        let g = VelocityGrid::new(6.0, 16).unwrap();
        let p = FluidTriple::slab(1.2, 0.3, 0.8).unwrap();
        let proj = MacroProjector::new(&p, &g).unwrap();
        let m = proj.maxwellian().clone();
        let p1 = proj.project_p1(&m);
        assert!(p1.max_abs() <= 1e-12 * m.max_abs());
    }

    #[test]
    fn split_of_maxwellian_has_no_micro_part() {
        let g = VelocityGrid::new(6.0, 20).unwrap();
        let p = FluidTriple::new(0.9, [0.2, -0.1, 0.0], 1.1).unwrap();
        let m = maxwellian(&p, &g);
        let (q, gpart) = macro_micro_split(&m, &g).unwrap();
        assert_relative_eq!(q.rho, p.rho, max_relative = 1e-9);
        assert_relative_eq!(q.theta, p.theta, max_relative = 1e-8);
        assert!(gpart.max_abs() < 1e-8 * m.max_abs());
    }

    #[test]
    fn discrete_maxwellian_matches_moments_on_coarse_grid() {
        let g = VelocityGrid::new(3.0, 8).unwrap();
        let target = FluidMoments { mass: 1.1, momentum: [0.2, 0.0, 0.05], energy: 1.3 };
        let (_, m) = discrete_maxwellian(&target, &g).unwrap();
        let got = moments(&m, &g).as_array();
        for (a, b) in got.iter().zip(target.as_array()) {
            assert!((a - b).abs() <= 1e-13 * target.energy, "{a} vs {b}");
        }
    }
}
