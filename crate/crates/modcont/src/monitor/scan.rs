//! Lattice shift scans of `|u(x+s) − u(x)|`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moduli::{Tabulated, TimeDependentModulus};
use crate::spectral::{gradient_max, grid_point, signed_index, Field};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanOptions {
    /// Sampled shifts in 3D when the lattice is too large to enumerate.
    pub random_shifts: usize,
    pub seed: u64,
    /// Violation threshold on the deficit; `None` uses `‖∇u‖_∞·h`.
    pub slack: Option<f64>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            random_shifts: 100_000,
            seed: 0,
            slack: None,
        }
    }
}

/// Largest increment for one shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftIncrement {
    /// Minimum-image lattice offset.
    pub shift: [i64; 3],
    pub distance: f64,
    pub increment: f64,
    /// Base point attaining the increment.
    pub x: [f64; 3],
}

/// Worst pair of a scan: the one maximizing `increment − Ω(distance)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub worst: ShiftIncrement,
    pub omega: f64,
    pub deficit: f64,
    pub shifts_scanned: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakthrough {
    pub t: f64,
    pub scan: ScanResult,
    pub slack: f64,
}

fn flat(s: &[usize; 3], dim: usize, n: usize) -> usize {
    s[..dim].iter().fold(0, |acc, &v| acc * n + v)
}

/// Shifts to scan: all nonzero lattice offsets when there are at most
/// `random_shifts` of them, otherwise the axis offsets plus seeded samples
/// stratified over log-spaced distance shells.
fn shifts(dim: usize, n: usize, opts: &ScanOptions) -> Vec<[usize; 3]> {
    let total = n.pow(dim as u32);
    let unflat = |mut k: usize| {
        let mut s = [0usize; 3];
        for a in (0..dim).rev() {
            s[a] = k % n;
            k /= n;
        }
        s
    };
    if dim < 3 || total - 1 <= opts.random_shifts {
        return (1..total).map(unflat).collect();
    }
    let mut out: Vec<[usize; 3]> = Vec::with_capacity(opts.random_shifts + 3 * n);
    for a in 0..3 {
        for j in 1..n {
            let mut s = [0; 3];
            s[a] = j;
            out.push(s);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let shells = 32;
    let (lo, hi) = (1.0f64.ln(), (3.0f64.sqrt() * n as f64 / 2.0).ln());
    for i in 0..opts.random_shifts {
        let shell = (i % shells) as f64;
        let r = (lo + (hi - lo) * (shell + rng.gen::<f64>()) / shells as f64).exp();
        let z: f64 = rng.gen_range(-1.0..1.0);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let rho = (1.0 - z * z).sqrt();
        let dir = [rho * phi.cos(), rho * phi.sin(), z];
        let mut s = [0usize; 3];
        for a in 0..3 {
            s[a] = ((r * dir[a]).round() as i64).rem_euclid(n as i64) as usize;
        }
        if s != [0; 3] {
            out.push(s);
        }
    }
    out.sort_by_key(|s| flat(s, dim, n));
    out.dedup();
    out
}

fn max_increment(
    values: &[[f64; 3]],
    dim: usize,
    n: usize,
    l: f64,
    s: &[usize; 3],
) -> ShiftIncrement {
    let h = l / n as f64;
    // pad to three axes with leading unit axes
    let mut size = [1usize; 3];
    let mut off = [0usize; 3];
    for a in 0..dim {
        size[3 - dim + a] = n;
        off[3 - dim + a] = s[a];
    }
    let wrap: Vec<Vec<usize>> = (0..3)
        .map(|a| (0..size[a]).map(|i| (i + off[a]) % size[a]).collect())
        .collect();
    let mut best = (-1.0f64, 0usize);
    for i0 in 0..size[0] {
        let j0 = wrap[0][i0];
        for i1 in 0..size[1] {
            let (row, jrow) = (
                (i0 * size[1] + i1) * size[2],
                (j0 * size[1] + wrap[1][i1]) * size[2],
            );
            // the shifted row is two contiguous runs
            let cut = size[2] - off[2];
            let runs = [(row, jrow + off[2], cut), (row + cut, jrow, off[2])];
            for (start, jstart, len) in runs {
                let (a, b) = (&values[start..start + len], &values[jstart..jstart + len]);
                for (k, (p, q)) in a.iter().zip(b).enumerate() {
                    let d2 = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) + (q[2] - p[2]).powi(2);
                    if d2 > best.0 {
                        best = (d2, start + k);
                    }
                }
            }
        }
    }
    let mut shift = [0i64; 3];
    for a in 0..dim {
        shift[a] = signed_index(s[a], n);
        if s[a] * 2 == n {
            shift[a] = (n / 2) as i64;
        }
    }
    let distance = shift
        .iter()
        .map(|&v| (v as f64 * h).powi(2))
        .sum::<f64>()
        .sqrt();
    ShiftIncrement {
        shift,
        distance,
        increment: best.0.max(0.0).sqrt(),
        x: grid_point(best.1, dim, n, l),
    }
}

/// Largest grid increment for every scanned shift.
pub fn increment_profile(u: &Field, opts: &ScanOptions) -> Vec<ShiftIncrement> {
    let comps = u.to_physical();
    assert!(comps.len() <= 3, "scans take at most three components");
    let values: Vec<[f64; 3]> = (0..comps[0].len())
        .map(|i| {
            let mut v = [0.0; 3];
            for (c, col) in comps.iter().enumerate() {
                v[c] = col[i];
            }
            v
        })
        .collect();
    let (dim, n, l) = (u.dim(), u.n(), u.period());
    shifts(dim, n, opts)
        .par_iter()
        .map(|s| max_increment(&values, dim, n, l, s))
        .collect()
}

/// Worst `|u(x+s) − u(x)| − Ω(|s|)` over the scanned shifts; ties go to the
/// first shift in lattice order.
pub fn increment_scan(
    u: &Field,
    omega: &(dyn Fn(f64) -> f64 + Sync),
    opts: &ScanOptions,
) -> ScanResult {
    let profile = increment_profile(u, opts);
    let shifts_scanned = profile.len();
    profile
        .into_iter()
        .map(|w| {
            let om = omega(w.distance);
            let deficit = if om.is_finite() {
                w.increment - om
            } else {
                f64::NEG_INFINITY
            };
            ScanResult {
                worst: w,
                omega: om,
                deficit,
                shifts_scanned,
            }
        })
        .fold(None, |best: Option<ScanResult>, r| match best {
            Some(b) if !(r.deficit > b.deficit) => Some(b),
            _ => Some(r),
        })
        .expect("lattice has nonzero shifts")
}

/// Violation of `Ω(t, ·)` by more than the slack, if any.
pub fn breakthrough_scan(
    u: &Field,
    omega: &TimeDependentModulus,
    t: f64,
    opts: &ScanOptions,
) -> Option<Breakthrough> {
    let scan = increment_scan(u, &|xi| omega.value(t, xi), opts);
    let slack = opts.slack.unwrap_or_else(|| gradient_max(u) * u.spacing());
    (scan.deficit > slack).then_some(Breakthrough { t, scan, slack })
}

/// `max |u(x+s) − u(x)| / |s|^β` over the scanned shifts.
pub fn holder_seminorm(u: &Field, beta: f64, opts: &ScanOptions) -> f64 {
    increment_profile(u, opts)
        .iter()
        .map(|w| w.increment / w.distance.powf(beta))
        .fold(0.0, f64::max)
}

/// Least concave majorant through the origin of the scanned increments,
/// flat past its maximum.
pub fn empirical_modulus(u: &Field, opts: &ScanOptions) -> Result<Tabulated> {
    let mut pts: Vec<(f64, f64)> = increment_profile(u, opts)
        .iter()
        .map(|w| (w.distance, w.increment))
        .collect();
    if pts.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::Input("field has non-finite values".into()));
    }
    pts.push((0.0, 0.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.dedup_by(|b, a| a.0 == b.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let top = hull
        .iter()
        .enumerate()
        .fold(0, |k, (i, p)| if p.1 > hull[k].1 { i } else { k });
    hull.truncate(top.max(1) + 1);
    let (x, y): (Vec<f64>, Vec<f64>) = hull.into_iter().unzip();
    Tabulated::new(x, y)
}
