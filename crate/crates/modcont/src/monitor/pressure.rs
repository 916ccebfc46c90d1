//! Empirical constant of the pressure-gradient modulus estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scan::{empirical_modulus, ScanOptions};
use crate::error::{Error, Result};
use crate::moduli::Tabulated;
use crate::nonlocal::pressure_functional_tabulated;
use crate::spectral::{leray_project, pressure_gradient, Field};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PressureCheckOptions {
    pub pairs: usize,
    pub seed: u64,
    /// Shift sampling for the empirical moduli of `u` and `b`.
    pub envelope: ScanOptions,
}

impl Default for PressureCheckOptions {
    fn default() -> Self {
        PressureCheckOptions {
            pairs: 10_000,
            seed: 0,
            envelope: ScanOptions {
                random_shifts: 2000,
                seed: 1,
                slack: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureLemmaReport {
    pub n: usize,
    pub pairs: usize,
    /// `max |∇p(x) − ∇p(z)| / ω̃(|x − z|)`; `None` when the check was skipped.
    pub c_hat: Option<f64>,
    pub worst_distance: f64,
    pub skipped: Option<String>,
}

fn degenerate(m: &Tabulated) -> bool {
    m.nodes().1.iter().all(|&v| v == 0.0)
}

/// Largest ratio of `∇p` increments to `pressure_functional(ω_b, ω_u)` over
/// seeded pairs `(x, x + r·e)`, `r` log-uniform in `[L/256, L/2]`.
///
/// `∇p` is summed exactly at the pair points, so two resolutions of the same
/// band-limited data see identical increments; only the empirical moduli,
/// taken as concave majorants of the grid increments, depend on `N`.
pub fn pressure_lemma_check(
    u: &Field,
    b: &Field,
    opts: &PressureCheckOptions,
) -> Result<PressureLemmaReport> {
    if u.dim() != 3 || b.dim() != 3 {
        return Err(Error::Parameter("the pressure check needs d = 3".into()));
    }
    let l = u.period();
    let mut report = PressureLemmaReport {
        n: u.n(),
        pairs: 0,
        c_hat: None,
        worst_distance: f64::NAN,
        skipped: None,
    };
    // drops only FFT round-off of the band-limited product
    let gp = pressure_gradient(u, b)?.series(1e-13);
    let wu = empirical_modulus(u, &opts.envelope)?;
    let wb = empirical_modulus(b, &opts.envelope)?;
    if degenerate(&wu) || degenerate(&wb) {
        report.skipped = Some("degenerate field: empirical modulus vanishes".into());
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (rlo, rhi) = ((l / 256.0).ln(), (l / 2.0).ln());
    let pairs: Vec<([f64; 3], [f64; 3], f64)> = (0..opts.pairs)
        .map(|_| {
            let x = [
                rng.gen::<f64>() * l,
                rng.gen::<f64>() * l,
                rng.gen::<f64>() * l,
            ];
            let r = (rlo + (rhi - rlo) * rng.gen::<f64>()).exp();
            let z: f64 = rng.gen_range(-1.0..1.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let rho = (1.0 - z * z).sqrt();
            let y = [
                x[0] + r * rho * phi.cos(),
                x[1] + r * rho * phi.sin(),
                x[2] + r * z,
            ];
            (x, y, r)
        })
        .collect();
    let ratios: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|(x, y, r)| {
            let (px, py) = (gp.eval(x), gp.eval(y));
            let num = px
                .iter()
                .zip(&py)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let den = pressure_functional_tabulated(&wb, &wu, *r, 1.0)?;
            Ok((num / den, *r))
        })
        .collect::<Result<_>>()?;
    let (c, r) = ratios
        .into_iter()
        .fold((0.0f64, f64::NAN), |a, b| if b.0 > a.0 { b } else { a });
    report.pairs = opts.pairs;
    report.c_hat = Some(c);
    report.worst_distance = r;
    Ok(report)
}

/// Leray-projected random field in 3D with modes `|m|_∞ ≤ kmax`.
///
/// Coefficients are drawn in a fixed mode order, so the field is the same
/// trigonometric polynomial for every admissible `n`.
pub fn random_solenoidal(n: usize, l: f64, kmax: usize, seed: u64) -> Result<Field> {
    if kmax == 0 || 4 * kmax >= n {
        return Err(Error::Parameter(format!(
            "kmax must lie in [1, n/4), got {kmax} for n = {n}"
        )));
    }
    let mut f = Field::zeros(3, n, l, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = kmax as i64;
    for m0 in -k..=k {
        for m1 in -k..=k {
            for m2 in -k..=k {
                let m = [m0, m1, m2];
                if m <= [0, 0, 0] {
                    continue;
                }
                let neg = [-m0, -m1, -m2];
                for c in 0..3 {
                    let v = num_complex::Complex64::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    );
                    f.set(c, &m, v);
                    f.set(c, &neg, v.conj());
                }
            }
        }
    }
    leray_project(&f)
}
