//! Fourier multipliers: fractional Laplacian, Hilbert and Riesz transforms, and
//! zero-order singular integrals built from an odd kernel profile `Φ` on the sphere.
//!
//! The sphere symbol `∫[(πi/2)sgn(ζ·y) − log|ζ·y|]Φ(y)dy` is multiplied by
//! `−2/(π|S|₁)`, `|S|₁ = ∫|y₁|dy`, so that `Φ(y) = y_j` gives the Riesz transform
//! `−i m_j/|m|` exactly (and the Hilbert transform in one dimension).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{is_nyquist, lattice_index, lattice_vector, Field, ZERO};
use crate::error::{Error, Result};
use crate::quad::{integrate_split, Tol};

pub type PhiFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type SymbolFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// Kernel profile `Φ` restricted to the unit sphere of `R^d`.
#[derive(Clone)]
pub struct CustomSio {
    pub dim: usize,
    pub name: String,
    pub phi: PhiFn,
    /// Points per ring of the inner periodic rule in three dimensions.
    pub ring_points: usize,
}

impl fmt::Debug for CustomSio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomSio({}, d={})", self.name, self.dim)
    }
}

impl CustomSio {
    pub fn new(dim: usize, name: impl Into<String>, phi: PhiFn) -> Self {
        CustomSio {
            dim,
            name: name.into(),
            phi,
            ring_points: 128,
        }
    }

    fn normalization(&self) -> f64 {
        let first_moment = match self.dim {
            1 => 2.0,
            2 => 4.0,
            _ => 2.0 * PI,
        };
        -2.0 / (PI * first_moment)
    }

    /// Symbol at the unit direction `zeta`.
    pub fn symbol(&self, zeta: &[f64]) -> Complex64 {
        let tol = Tol {
            abs: 1e-13,
            rel: 1e-11,
            max_intervals: 4000,
        };
        let phi = &self.phi;
        let (sgn_part, log_part) = match self.dim {
            1 => {
                let s = zeta[0].signum();
                (s * (phi(&[1.0]) - phi(&[-1.0])), 0.0)
            }
            2 => {
                let phase = zeta[1].atan2(zeta[0]);
                let at = |psi: f64| phi(&[(phase + psi).cos(), (phase + psi).sin()]);
                let h = PI / 2.0;
                let s = integrate_split(|psi| psi.cos().signum() * at(psi), -h, 3.0 * h, &[h], tol)
                    .value;
                let g =
                    integrate_split(|psi| psi.cos().abs().ln() * at(psi), -h, 3.0 * h, &[h], tol)
                        .value;
                (s, g)
            }
            _ => {
                let (e1, e2) = orthonormal_pair(zeta);
                let m = self.ring_points.max(8);
                let ring = |z: f64| {
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let mut acc = 0.0;
                    for k in 0..m {
                        let th = 2.0 * PI * k as f64 / m as f64;
                        let (c, s) = (th.cos(), th.sin());
                        let y = [
                            z * zeta[0] + r * (c * e1[0] + s * e2[0]),
                            z * zeta[1] + r * (c * e1[1] + s * e2[1]),
                            z * zeta[2] + r * (c * e1[2] + s * e2[2]),
                        ];
                        acc += phi(&y);
                    }
                    acc * 2.0 * PI / m as f64
                };
                let s = integrate_split(|z| z.signum() * ring(z), -1.0, 1.0, &[0.0], tol).value;
                let g = integrate_split(|z| z.abs().ln() * ring(z), -1.0, 1.0, &[0.0], tol).value;
                (s, g)
            }
        };
        Complex64::new(-log_part, 0.5 * PI * sgn_part) * self.normalization()
    }
}

fn orthonormal_pair(z: &[f64]) -> ([f64; 3], [f64; 3]) {
    let a = (0..3)
        .min_by(|&i, &j| z[i].abs().total_cmp(&z[j].abs()))
        .unwrap_or(0);
    let mut e = [0.0; 3];
    e[a] = 1.0;
    let d = z[a];
    let mut e1 = [e[0] - d * z[0], e[1] - d * z[1], e[2] - d * z[2]];
    let n = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    for v in &mut e1 {
        *v /= n;
    }
    let e2 = [
        z[1] * e1[2] - z[2] * e1[1],
        z[2] * e1[0] - z[0] * e1[2],
        z[0] * e1[1] - z[1] * e1[0],
    ];
    (e1, e2)
}

/// Runtime multiplier.
#[derive(Clone)]
pub enum Multiplier {
    /// `|2πm/L|^{2α}`
    FractionalLaplacian {
        alpha: f64,
    },
    /// `−i sgn(m)`, one dimension only.
    Hilbert,
    /// `−i m_j/|m|`
    Riesz {
        j: usize,
    },
    CustomSio(CustomSio),
    /// Arbitrary symbol of the integer lattice vector; validated like the others.
    Symbol {
        name: String,
        f: SymbolFn,
    },
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplier::FractionalLaplacian { alpha } => write!(f, "FractionalLaplacian({alpha})"),
            Multiplier::Hilbert => write!(f, "Hilbert"),
            Multiplier::Riesz { j } => write!(f, "Riesz({j})"),
            Multiplier::CustomSio(c) => c.fmt(f),
            Multiplier::Symbol { name, .. } => write!(f, "Symbol({name})"),
        }
    }
}

/// Symbol values on a lattice, in the field's storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    pub dim: usize,
    pub n: usize,
    pub l: f64,
    pub values: Vec<Complex64>,
}

/// Reduces `m` to its primitive direction so that parallel lattice vectors share a symbol.
fn primitive(m: &[i64; 3]) -> [i64; 3] {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let g = gcd(gcd(m[0], m[1]), m[2]).max(1);
    [m[0] / g, m[1] / g, m[2] / g]
}

impl Multiplier {
    /// Symbol table on the `n^dim` lattice of period `l`, with the Hermitian and
    /// boundedness checks applied.
    pub fn table(&self, dim: usize, n: usize, l: f64) -> Result<SymbolTable> {
        let len = n.pow(dim as u32);
        let values: Vec<Complex64> = match self {
            Multiplier::FractionalLaplacian { alpha } => {
                if !(*alpha > 0.0) {
                    return Err(Error::Parameter(format!(
                        "fractional order must be positive, got {alpha}"
                    )));
                }
                let s = 2.0 * PI / l;
                (0..len)
                    .map(|idx| {
                        let m = lattice_vector(idx, dim, n);
                        let k2: f64 = m[..dim].iter().map(|&k| (s * k as f64).powi(2)).sum();
                        Complex64::new(k2.powf(*alpha), 0.0)
                    })
                    .collect()
            }
            Multiplier::Hilbert => {
                if dim != 1 {
                    return Err(Error::Parameter(
                        "the Hilbert transform is one-dimensional".into(),
                    ));
                }
                (0..len)
                    .map(|idx| Complex64::new(0.0, -(lattice_vector(idx, 1, n)[0].signum() as f64)))
                    .collect()
            }
            Multiplier::Riesz { j } => {
                if *j >= dim {
                    return Err(Error::Parameter(format!(
                        "Riesz index {j} out of range for d={dim}"
                    )));
                }
                (0..len)
                    .map(|idx| {
                        let m = lattice_vector(idx, dim, n);
                        let norm = m[..dim].iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
                        if norm == 0.0 {
                            ZERO
                        } else {
                            Complex64::new(0.0, -(m[*j] as f64) / norm)
                        }
                    })
                    .collect()
            }
            Multiplier::CustomSio(sio) => {
                if sio.dim != dim {
                    return Err(Error::Parameter(format!(
                        "kernel profile is for d={}, field has d={dim}",
                        sio.dim
                    )));
                }
                let mut dirs: Vec<[i64; 3]> = (1..len)
                    .map(|idx| lattice_vector(idx, dim, n))
                    .filter(|m| !is_nyquist(m, dim, n))
                    .map(|m| primitive(&m))
                    .collect();
                dirs.sort_unstable();
                dirs.dedup();
                let computed: HashMap<[i64; 3], Complex64> = dirs
                    .par_iter()
                    .map(|d| {
                        let norm = d[..dim].iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
                        let zeta: Vec<f64> = d[..dim].iter().map(|&k| k as f64 / norm).collect();
                        (*d, sio.symbol(&zeta))
                    })
                    .collect();
                (0..len)
                    .map(|idx| {
                        let m = lattice_vector(idx, dim, n);
                        computed.get(&primitive(&m)).copied().unwrap_or(ZERO)
                    })
                    .collect()
            }
            Multiplier::Symbol { f, .. } => (0..len)
                .map(|idx| {
                    let m = lattice_vector(idx, dim, n);
                    let v: Vec<f64> = m[..dim].iter().map(|&k| k as f64).collect();
                    f(&v)
                })
                .collect(),
        };
        let mut values = values;
        values[0] = ZERO;
        for (idx, v) in values.iter_mut().enumerate() {
            if is_nyquist(&lattice_vector(idx, dim, n), dim, n) {
                *v = ZERO;
            }
        }
        validate(
            &values,
            dim,
            n,
            matches!(self, Multiplier::FractionalLaplacian { .. }),
        )?;
        Ok(SymbolTable { dim, n, l, values })
    }
}

fn validate(values: &[Complex64], dim: usize, n: usize, unbounded_ok: bool) -> Result<()> {
    if let Some(idx) = values
        .iter()
        .position(|v| !(v.re.is_finite() && v.im.is_finite()))
    {
        return Err(Error::Construction(format!(
            "symbol is not finite at m={:?}",
            &lattice_vector(idx, dim, n)[..dim]
        )));
    }
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    if !unbounded_ok && scale > 1e8 {
        return Err(Error::Construction(format!(
            "zero-order symbol reaches {scale:.3e} on the lattice"
        )));
    }
    for idx in 0..values.len() {
        let m = lattice_vector(idx, dim, n);
        let neg = [-m[0], -m[1], -m[2]];
        let defect = (values[lattice_index(&neg, dim, n)] - values[idx].conj()).norm();
        if defect > 1e-9 * scale {
            return Err(Error::Construction(format!(
                "symbol violates K(-m) = conj K(m) at m={:?} by {defect:.3e}",
                &m[..dim]
            )));
        }
    }
    Ok(())
}

/// Coefficient-wise product with a precomputed table.
pub fn apply_table(f: &Field, table: &SymbolTable) -> Result<Field> {
    if table.dim != f.dim() || table.n != f.n() || table.l != f.period() {
        return Err(Error::Input(
            "symbol table and field live on different lattices".into(),
        ));
    }
    let mut out = f.clone();
    for c in 0..f.comps() {
        for (v, s) in out.coefficients_mut(c).iter_mut().zip(&table.values) {
            *v *= s;
        }
    }
    Ok(out)
}

pub fn apply_multiplier(f: &Field, mu: &Multiplier) -> Result<Field> {
    apply_table(f, &mu.table(f.dim(), f.n(), f.period())?)
}

/// Named kernel profiles for configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PhiSpec {
    /// `Φ(y) = y_j`
    Coordinate { j: usize },
    /// `Φ(y) = sin(kθ)` on the circle, `k` odd.
    Angular { k: u32 },
}

/// Serializable description of a [`Multiplier`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MultiplierSpec {
    FractionalLaplacian {
        alpha: f64,
    },
    #[serde(rename = "HILBERT_1D")]
    Hilbert1d,
    Riesz {
        j: usize,
    },
    CustomSio {
        phi: PhiSpec,
    },
}

impl MultiplierSpec {
    pub fn build(&self, dim: usize) -> Result<Multiplier> {
        Ok(match *self {
            MultiplierSpec::FractionalLaplacian { alpha } => {
                Multiplier::FractionalLaplacian { alpha }
            }
            MultiplierSpec::Hilbert1d => Multiplier::Hilbert,
            MultiplierSpec::Riesz { j } => Multiplier::Riesz { j },
            MultiplierSpec::CustomSio { phi } => {
                let (name, f): (String, PhiFn) = match phi {
                    PhiSpec::Coordinate { j } => {
                        if j >= dim {
                            return Err(Error::Parameter(format!(
                                "coordinate {j} out of range for d={dim}"
                            )));
                        }
                        (format!("y_{j}"), Arc::new(move |y: &[f64]| y[j]))
                    }
                    PhiSpec::Angular { k } => {
                        if dim != 2 || k % 2 == 0 {
                            return Err(Error::Parameter(
                                "angular profiles need d=2 and odd k".into(),
                            ));
                        }
                        (
                            format!("sin({k}theta)"),
                            Arc::new(move |y: &[f64]| (k as f64 * y[1].atan2(y[0])).sin()),
                        )
                    }
                };
                Multiplier::CustomSio(CustomSio::new(dim, name, f))
            }
        })
    }
}
