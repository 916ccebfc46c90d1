//! Periodic pseudo-spectral fields on `[0, L)^d`.
//!
//! Coefficients follow `u(x) = Σ_m û(m) e^{2πi m·x/L}` over `|m_k| < N/2`, stored
//! on the FFT-ordered `N^d` lattice (row-major, axis 0 slowest) with the Nyquist
//! planes held at zero.

mod multiplier;
mod snapshot;
mod solver;

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub use multiplier::{
    apply_multiplier, apply_table, CustomSio, Multiplier, MultiplierSpec, PhiSpec, SymbolTable,
};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot};
pub use solver::{
    step_burgers, step_drift_diffusion, step_linear_nse, ClosedFormDrift, Dealias, DriftSource,
    EquationKind, Integrator, SelfAdvection, SioTerm, SolverConfig, SqgDrift, Stepper,
};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Signed wavenumber of FFT index `i`; the Nyquist index maps to `n/2`.
#[inline]
pub fn signed_index(i: usize, n: usize) -> i64 {
    if 2 * i < n {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Lattice vector `m` of flat index `idx` (unused axes are 0).
#[inline]
pub fn lattice_vector(idx: usize, dim: usize, n: usize) -> [i64; 3] {
    let mut m = [0i64; 3];
    let mut rest = idx;
    for a in (0..dim).rev() {
        m[a] = signed_index(rest % n, n);
        rest /= n;
    }
    m
}

/// Flat index of lattice vector `m` on an `n^dim` lattice.
#[inline]
pub fn lattice_index(m: &[i64], dim: usize, n: usize) -> usize {
    let mut idx = 0usize;
    for &mk in &m[..dim] {
        idx = idx * n + mk.rem_euclid(n as i64) as usize;
    }
    idx
}

#[inline]
fn is_nyquist(m: &[i64; 3], dim: usize, n: usize) -> bool {
    m[..dim].iter().any(|&k| 2 * k.unsigned_abs() as usize >= n)
}

/// Multidimensional complex FFT along every axis of a row-major `n^dim` array.
pub(crate) struct FftNd {
    dim: usize,
    n: usize,
    fwd: std::sync::Arc<dyn Fft<f64>>,
    inv: std::sync::Arc<dyn Fft<f64>>,
}

impl FftNd {
    pub(crate) fn new(dim: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            dim,
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    /// Unnormalized transform; `inverse` uses `e^{+2πi jk/n}`.
    pub(crate) fn process(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.inv } else { &self.fwd };
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                data.par_chunks_mut(n * 64.max(1))
                    .for_each(|c| plan.process(c));
                continue;
            }
            let block = n * stride;
            let work = |b: &mut [Complex64]| {
                let mut line = vec![ZERO; n];
                for j in 0..stride {
                    for k in 0..n {
                        line[k] = b[k * stride + j];
                    }
                    plan.process(&mut line);
                    for k in 0..n {
                        b[k * stride + j] = line[k];
                    }
                }
            };
            if data.len() / block > 1 {
                data.par_chunks_mut(block).for_each(work);
            } else {
                // a single block: split the interleaved lines across threads by copy-out
                let lines: Vec<Vec<Complex64>> = (0..stride)
                    .into_par_iter()
                    .map(|j| {
                        let mut line: Vec<Complex64> =
                            (0..n).map(|k| data[k * stride + j]).collect();
                        plan.process(&mut line);
                        line
                    })
                    .collect();
                for (j, line) in lines.iter().enumerate() {
                    for k in 0..n {
                        data[k * stride + j] = line[k];
                    }
                }
            }
        }
    }
}

/// Trigonometric series of a field restricted to its nonzero modes.
#[derive(Debug, Clone)]
pub struct Series {
    dim: usize,
    comps: usize,
    modes: Vec<([f64; 3], Vec<Complex64>)>,
    dropped: f64,
}

impl Series {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.comps];
        for (k, coef) in &self.modes {
            let phase: f64 = (0..self.dim).map(|a| k[a] * x[a]).sum();
            let e = Complex64::new(0.0, phase).exp();
            for (o, c) in out.iter_mut().zip(coef) {
                *o += (c * e).re;
            }
        }
        out
    }

    pub fn modes(&self) -> usize {
        self.modes.len()
    }

    /// Sum of the coefficient norms left out.
    pub fn dropped(&self) -> f64 {
        self.dropped
    }
}

/// Scalar or vector field on the periodic box, held by its Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    dim: usize,
    n: usize,
    l: f64,
    coef: Vec<Vec<Complex64>>,
}

impl Field {
    pub fn zeros(dim: usize, n: usize, l: f64, comps: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Parameter(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "modes per axis must be a power of two >= 4, got {n}"
            )));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Parameter(format!(
                "period must be positive, got {l}"
            )));
        }
        if comps == 0 {
            return Err(Error::Parameter(
                "a field needs at least one component".into(),
            ));
        }
        Ok(Field {
            dim,
            n,
            l,
            coef: vec![vec![ZERO; n.pow(dim as u32)]; comps],
        })
    }

    /// Transforms grid samples `values[c][idx]` at `x_j = jL/N`; the mean is kept.
    pub fn from_physical(dim: usize, n: usize, l: f64, values: &[Vec<f64>]) -> Result<Self> {
        let mut f = Field::zeros(dim, n, l, values.len())?;
        let len = f.len();
        let fft = FftNd::new(dim, n);
        let scale = 1.0 / len as f64;
        for (c, v) in values.iter().enumerate() {
            if v.len() != len {
                return Err(Error::Input(format!(
                    "component {c} has {} samples, expected {len}",
                    v.len()
                )));
            }
            let mut buf: Vec<Complex64> =
                v.iter().map(|&x| Complex64::new(x * scale, 0.0)).collect();
            fft.process(&mut buf, false);
            f.coef[c] = buf;
        }
        f.clear_nyquist();
        Ok(f)
    }

    /// Samples `u(x)` (one value per component) on the grid and transforms.
    pub fn from_fn<F>(dim: usize, n: usize, l: f64, comps: usize, u: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Sync,
    {
        let len = n.pow(dim as u32);
        let samples: Vec<Vec<f64>> = (0..len)
            .into_par_iter()
            .map(|idx| u(&grid_point(idx, dim, n, l)[..dim]))
            .collect();
        let mut values = vec![vec![0.0; len]; comps];
        for (idx, s) in samples.iter().enumerate() {
            if s.len() != comps {
                return Err(Error::Input(format!(
                    "sampler returned {} components, expected {comps}",
                    s.len()
                )));
            }
            for c in 0..comps {
                values[c][idx] = s[c];
            }
        }
        Field::from_physical(dim, n, l, &values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.l
    }

    pub fn comps(&self) -> usize {
        self.coef.len()
    }

    /// Number of lattice points, `N^d`.
    pub fn len(&self) -> usize {
        self.coef[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `L/N`.
    pub fn spacing(&self) -> f64 {
        self.l / self.n as f64
    }

    pub fn coefficients(&self, c: usize) -> &[Complex64] {
        &self.coef[c]
    }

    pub fn coefficients_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.coef[c]
    }

    pub fn lattice_vector(&self, idx: usize) -> [i64; 3] {
        lattice_vector(idx, self.dim, self.n)
    }

    /// Coefficient at lattice vector `m`.
    pub fn get(&self, c: usize, m: &[i64]) -> Complex64 {
        self.coef[c][lattice_index(m, self.dim, self.n)]
    }

    pub fn set(&mut self, c: usize, m: &[i64], v: Complex64) {
        let idx = lattice_index(m, self.dim, self.n);
        self.coef[c][idx] = v;
    }

    /// Wave vector `2πm/L`.
    pub fn wave_vector(&self, idx: usize) -> [f64; 3] {
        let m = self.lattice_vector(idx);
        let s = 2.0 * PI / self.l;
        [s * m[0] as f64, s * m[1] as f64, s * m[2] as f64]
    }

    pub(crate) fn clear_nyquist(&mut self) {
        let (dim, n) = (self.dim, self.n);
        for c in &mut self.coef {
            for (idx, v) in c.iter_mut().enumerate() {
                if is_nyquist(&lattice_vector(idx, dim, n), dim, n) {
                    *v = ZERO;
                }
            }
        }
    }

    pub fn remove_mean(&mut self) {
        for c in &mut self.coef {
            c[0] = ZERO;
        }
    }

    pub fn mean(&self, c: usize) -> Complex64 {
        self.coef[c][0]
    }

    /// `max |û(−m) − conj(û(m))|` over components and lattice.
    pub fn hermitian_defect(&self) -> f64 {
        let (dim, n) = (self.dim, self.n);
        self.coef
            .iter()
            .map(|c| {
                (0..c.len())
                    .map(|idx| {
                        let m = lattice_vector(idx, dim, n);
                        let neg = [-m[0], -m[1], -m[2]];
                        (c[lattice_index(&neg, dim, n)] - c[idx].conj()).norm()
                    })
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// `max_m |m·û(m)|`; requires one component per axis.
    pub fn divergence_max(&self) -> Result<f64> {
        self.require_vector()?;
        Ok((0..self.len())
            .map(|idx| {
                let m = self.lattice_vector(idx);
                let mut s = ZERO;
                for a in 0..self.dim {
                    s += self.coef[a][idx] * m[a] as f64;
                }
                s.norm()
            })
            .fold(0.0, f64::max))
    }

    pub(crate) fn require_vector(&self) -> Result<()> {
        if self.comps() != self.dim {
            return Err(Error::Input(format!(
                "expected a vector field with {} components, got {}",
                self.dim,
                self.comps()
            )));
        }
        Ok(())
    }

    /// `sqrt(Σ_m |û(m)|²)`, the root-mean-square of the field.
    pub fn coefficient_norm(&self) -> f64 {
        self.coef
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `‖u‖_{L²}` over the fundamental domain.
    pub fn l2_norm(&self) -> f64 {
        self.coefficient_norm() * self.l.powi(self.dim as i32).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coef
            .iter()
            .flat_map(|c| c.iter())
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Grid values, one vector per component.
    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        self.to_physical_padded(1)
    }

    /// Values on the grid refined `factor` times by zero-padding.
    pub fn to_physical_padded(&self, factor: usize) -> Vec<Vec<f64>> {
        (0..self.comps())
            .map(|c| self.component_padded(&self.coef[c], factor))
            .collect()
    }

    fn component_padded(&self, coef: &[Complex64], factor: usize) -> Vec<f64> {
        let np = self.n * factor.max(1);
        let mut buf = vec![ZERO; np.pow(self.dim as u32)];
        for (idx, &v) in coef.iter().enumerate() {
            if v != ZERO {
                let m = self.lattice_vector(idx);
                buf[lattice_index(&m, self.dim, np)] = v;
            }
        }
        FftNd::new(self.dim, np).process(&mut buf, true);
        buf.into_iter().map(|v| v.re).collect()
    }

    /// `max |u|` over grid points (Euclidean norm for vector fields).
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm_padded(1)
    }

    pub fn sup_norm_padded(&self, factor: usize) -> f64 {
        let phys = self.to_physical_padded(factor);
        (0..phys[0].len())
            .into_par_iter()
            .map(|i| phys.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .reduce(|| 0.0, f64::max)
    }

    /// Values at an arbitrary point by direct summation of the series.
    pub fn eval_at(&self, x: &[f64]) -> Vec<f64> {
        self.series(0.0).eval(x)
    }

    /// Modes whose coefficient norm exceeds `rel_tol` times the largest one,
    /// for repeated point evaluation. Dropped modes move any point value by at
    /// most [`Series::dropped`].
    pub fn series(&self, rel_tol: f64) -> Series {
        let norm = |idx: usize| {
            (0..self.comps())
                .map(|c| self.coef[c][idx].norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        let top = (0..self.len()).map(norm).fold(0.0, f64::max);
        let (mut modes, mut dropped) = (Vec::new(), 0.0);
        for idx in 0..self.len() {
            let v = norm(idx);
            if v > rel_tol * top {
                modes.push((
                    self.wave_vector(idx),
                    (0..self.comps()).map(|c| self.coef[c][idx]).collect(),
                ));
            } else {
                dropped += v;
            }
        }
        Series {
            dim: self.dim,
            comps: self.comps(),
            modes,
            dropped,
        }
    }

    /// Spectral derivative `∂_a` of every component.
    pub fn derivative(&self, axis: usize) -> Field {
        let mut out = self.clone();
        for c in 0..self.comps() {
            for (idx, v) in out.coef[c].iter_mut().enumerate() {
                let k = self.wave_vector(idx)[axis];
                *v *= Complex64::new(0.0, k);
            }
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.coef.iter_mut().flat_map(|c| c.iter_mut()) {
            *v *= s;
        }
    }

    /// `self += a·other`.
    pub fn axpy(&mut self, a: f64, other: &Field) -> Result<()> {
        self.require_compatible(other)?;
        for (c, o) in self.coef.iter_mut().zip(&other.coef) {
            for (v, w) in c.iter_mut().zip(o) {
                *v += *w * a;
            }
        }
        Ok(())
    }

    pub(crate) fn require_compatible(&self, other: &Field) -> Result<()> {
        if self.dim != other.dim
            || self.n != other.n
            || self.comps() != other.comps()
            || self.l != other.l
        {
            return Err(Error::Input("fields live on different lattices".into()));
        }
        Ok(())
    }

    /// Single component `c` as a scalar field.
    pub fn component(&self, c: usize) -> Field {
        Field {
            dim: self.dim,
            n: self.n,
            l: self.l,
            coef: vec![self.coef[c].clone()],
        }
    }

    /// Stacks scalar fields into a vector field.
    pub fn stack(parts: &[Field]) -> Result<Field> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Input("nothing to stack".into()))?;
        let mut out = Field {
            dim: first.dim,
            n: first.n,
            l: first.l,
            coef: Vec::new(),
        };
        for p in parts {
            if p.dim != first.dim || p.n != first.n || p.l != first.l {
                return Err(Error::Input("fields live on different lattices".into()));
            }
            out.coef.extend(p.coef.iter().cloned());
        }
        Ok(out)
    }

    pub(crate) fn from_parts(dim: usize, n: usize, l: f64, coef: Vec<Vec<Complex64>>) -> Field {
        Field { dim, n, l, coef }
    }
}

/// Coordinates of grid point `idx` at spacing `L/N`.
pub fn grid_point(idx: usize, dim: usize, n: usize, l: f64) -> [f64; 3] {
    let mut x = [0.0; 3];
    let mut rest = idx;
    let h = l / n as f64;
    for a in (0..dim).rev() {
        x[a] = (rest % n) as f64 * h;
        rest /= n;
    }
    x
}

/// Leray projection `v − ∇Δ^{−1}(∇·v)`; the mean is left untouched.
pub fn leray_project(v: &Field) -> Result<Field> {
    v.require_vector()?;
    let mut out = v.clone();
    let dim = v.dim;
    for idx in 1..v.len() {
        let m = v.lattice_vector(idx);
        let m2: f64 = m[..dim].iter().map(|&k| (k * k) as f64).sum();
        let mut dot = ZERO;
        for a in 0..dim {
            dot += v.coef[a][idx] * m[a] as f64;
        }
        for a in 0..dim {
            out.coef[a][idx] -= dot * (m[a] as f64 / m2);
        }
    }
    Ok(out)
}

/// Exact products `a_i b_j` of band-limited fields, truncated back to the lattice.
pub(crate) fn padded_products(a: &Field, b: &Field) -> Result<Vec<Vec<Field>>> {
    if a.dim != b.dim || a.n != b.n || a.l != b.l {
        return Err(Error::Input("fields live on different lattices".into()));
    }
    let (dim, n, l) = (a.dim, a.n, a.l);
    let np = 2 * n;
    let pa = a.to_physical_padded(2);
    let pb = b.to_physical_padded(2);
    let fft = FftNd::new(dim, np);
    let scale = 1.0 / np.pow(dim as u32) as f64;
    let mut out = Vec::with_capacity(a.comps());
    for ai in &pa {
        let mut row = Vec::with_capacity(b.comps());
        for bj in &pb {
            let mut buf: Vec<Complex64> = ai
                .iter()
                .zip(bj)
                .map(|(x, y)| Complex64::new(x * y * scale, 0.0))
                .collect();
            fft.process(&mut buf, false);
            let mut f = Field::zeros(dim, n, l, 1)?;
            for idx in 0..f.len() {
                let m = f.lattice_vector(idx);
                if !is_nyquist(&m, dim, n) {
                    f.coef[0][idx] = buf[lattice_index(&m, dim, np)];
                }
            }
            row.push(f);
        }
        out.push(row);
    }
    Ok(out)
}

/// `∇p` with `p = Σ_{ij} R_iR_j(b_i u_j)`.
pub fn pressure_gradient(u: &Field, b: &Field) -> Result<Field> {
    u.require_vector()?;
    b.require_vector()?;
    let dim = u.dim;
    let prods = padded_products(b, u)?;
    let mut p = Field::zeros(dim, u.n, u.l, 1)?;
    for idx in 1..p.len() {
        let m = p.lattice_vector(idx);
        let m2: f64 = m[..dim].iter().map(|&k| (k * k) as f64).sum();
        let mut s = ZERO;
        for i in 0..dim {
            for j in 0..dim {
                s -= prods[i][j].coef[0][idx] * (m[i] * m[j]) as f64 / m2;
            }
        }
        p.coef[0][idx] = s;
    }
    let grads: Vec<Field> = (0..dim).map(|a| p.derivative(a)).collect();
    Field::stack(&grads)
}

/// Jacobian entries `∂_j u_i` on the padded grid, indexed `[i·d + j]`.
fn jacobian_padded(u: &Field, factor: usize) -> Vec<Vec<f64>> {
    let dim = u.dim;
    (0..u.comps() * dim)
        .into_par_iter()
        .map(|e| {
            let (i, j) = (e / dim, e % dim);
            let coef: Vec<Complex64> = u.coef[i]
                .iter()
                .enumerate()
                .map(|(idx, v)| v * Complex64::new(0.0, u.wave_vector(idx)[j]))
                .collect();
            u.component_padded(&coef, factor)
        })
        .collect()
}

fn operator_norm(jac: &[f64], comps: usize, dim: usize) -> f64 {
    if comps == 1 {
        return jac.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let entry = |i: usize, j: usize| jac[i * dim + j];
    let gram = |a: usize, b: usize| (0..comps).map(|i| entry(i, a) * entry(i, b)).sum::<f64>();
    let top = match dim {
        1 => gram(0, 0),
        2 => Matrix2::new(gram(0, 0), gram(0, 1), gram(1, 0), gram(1, 1))
            .symmetric_eigenvalues()
            .max(),
        _ => Matrix3::from_fn(|a, b| gram(a, b))
            .symmetric_eigenvalues()
            .max(),
    };
    top.max(0.0).sqrt()
}

/// `sup_x |J_u(x)|` in the operator norm: grid search refined four times
/// (twice in 3D), then a local search off the grid.
pub fn gradient_max(u: &Field) -> f64 {
    gradient_max_padded(u, if u.dim == 3 { 2 } else { 4 })
}

fn pointwise_norms(u: &Field, factor: usize) -> Vec<f64> {
    let (comps, dim) = (u.comps(), u.dim);
    let jac = jacobian_padded(u, factor);
    (0..jac[0].len())
        .into_par_iter()
        .map(|p| {
            let local: Vec<f64> = jac.iter().map(|c| c[p]).collect();
            operator_norm(&local, comps, dim)
        })
        .collect()
}

/// Largest grid value of `|J_u|`, without peak refinement.
pub fn gradient_grid_max(u: &Field, factor: usize) -> f64 {
    pointwise_norms(u, factor).into_iter().fold(0.0, f64::max)
}

/// Grid maximum of `|J_u|` followed by a shrinking-stencil search around the
/// arg-max, with the Jacobian summed exactly off the grid. The result is the
/// largest norm actually evaluated, so it never overshoots the supremum.
pub fn gradient_max_padded(u: &Field, factor: usize) -> f64 {
    let (dim, comps) = (u.dim, u.comps());
    let np = u.n * factor.max(1);
    let norms = pointwise_norms(u, factor);
    let (best, f0) = norms
        .iter()
        .copied()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |a, (i, v)| if v > a.1 { (i, v) } else { a },
        );
    if !(f0 > 0.0) {
        return f0.max(0.0);
    }
    let modes: Vec<([i64; 3], [f64; 3], Vec<Complex64>)> = (0..u.len())
        .filter(|&idx| (0..comps).any(|c| u.coef[c][idx] != ZERO))
        .map(|idx| {
            (
                u.lattice_vector(idx),
                u.wave_vector(idx),
                (0..comps).map(|c| u.coef[c][idx]).collect(),
            )
        })
        .collect();
    let half = (u.n / 2) as i64;
    let k0 = 2.0 * std::f64::consts::PI / u.l;
    let norm_at = |x: &[f64; 3]| {
        // per-axis phase tables indexed by m + n/2
        let tables: Vec<Vec<Complex64>> = (0..dim)
            .map(|a| {
                (-half..=half)
                    .map(|m| Complex64::new(0.0, k0 * m as f64 * x[a]).exp())
                    .collect()
            })
            .collect();
        let mut jac = vec![0.0; comps * dim];
        for (m, k, v) in &modes {
            let mut e = Complex64::new(1.0, 0.0);
            for a in 0..dim {
                e *= tables[a][(m[a] + half) as usize];
            }
            for i in 0..comps {
                let w = v[i] * e * Complex64::new(0.0, 1.0);
                for j in 0..dim {
                    jac[i * dim + j] += (w * k[j]).re;
                }
            }
        }
        operator_norm(&jac, comps, dim)
    };
    let mut x = grid_point(best, dim, np, u.l);
    let mut fx = f0;
    let mut h = u.l / np as f64;
    let offsets: Vec<[i64; 3]> = (0..3usize.pow(dim as u32))
        .map(|s| {
            let mut o = [0i64; 3];
            let mut r = s;
            for a in 0..dim {
                o[a] = (r % 3) as i64 - 1;
                r /= 3;
            }
            o
        })
        .collect();
    for _ in 0..40 {
        let cand = offsets
            .par_iter()
            .map(|o| {
                let y = [
                    x[0] + o[0] as f64 * h,
                    x[1] + o[1] as f64 * h,
                    x[2] + o[2] as f64 * h,
                ];
                (norm_at(&y), y)
            })
            .reduce(
                || (f64::NEG_INFINITY, x),
                |a, b| if b.0 > a.0 { b } else { a },
            );
        if cand.0 > fx {
            fx = cand.0;
            x = cand.1;
        } else {
            h *= 0.5;
        }
        if h < 1e-9 * u.l {
            break;
        }
    }
    fx
}

/// `sup_x` of the Frobenius norm of `J_u`, which lies in `[|J|, √d·|J|]`.
pub fn gradient_frobenius_max(u: &Field, factor: usize) -> f64 {
    let jac = jacobian_padded(u, factor);
    (0..jac[0].len())
        .into_par_iter()
        .map(|p| jac.iter().map(|c| c[p] * c[p]).sum::<f64>().sqrt())
        .reduce(|| 0.0, f64::max)
}
