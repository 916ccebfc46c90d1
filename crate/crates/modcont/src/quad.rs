//! Adaptive Gauss–Kronrod quadrature, fixed Gauss–Legendre rules and a
//! bracketing root finder.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208733389637,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

impl QuadResult {
    pub fn zero() -> Self {
        QuadResult {
            value: 0.0,
            error: 0.0,
            evals: 0,
            converged: true,
        }
    }

    pub fn scale(self, c: f64) -> Self {
        QuadResult {
            value: self.value * c,
            error: self.error * c.abs(),
            ..self
        }
    }

    pub fn add(self, other: QuadResult) -> Self {
        QuadResult {
            value: self.value + other.value,
            error: self.error + other.error,
            evals: self.evals + other.evals,
            converged: self.converged && other.converged,
        }
    }
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tol {
    fn default() -> Self {
        Tol {
            abs: 1e-14,
            rel: 1e-11,
            max_intervals: 4000,
        }
    }
}

/// One 21-point Kronrod panel with the QUADPACK error heuristic.
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let (res, err, _) = gk21_floor(f, a, b);
    (res, err)
}

/// [`gk21`] plus the round-off floor `50ε∫|f|` of its error estimate.
fn gk21_floor<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let hh = h.abs();
    let res = resk * h;
    resabs *= hh;
    resasc *= hh;
    let mut err = ((resk - resg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(floor);
    }
    (res, err, floor)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    floor: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive bisection driven by the largest panel error.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tol) -> QuadResult {
    if a == b {
        return QuadResult::zero();
    }
    let (v, e, fl) = gk21_floor(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: v,
        error: e,
        floor: fl,
    });
    let mut total = v;
    let mut err = e;
    let mut floor = fl;
    let mut evals = 21;
    let mut converged = false;
    let mut intervals = 1;
    loop {
        // at the round-off floor further bisection cannot help
        if err <= tol.abs.max(tol.rel * total.abs()).max(floor) || !err.is_finite() {
            converged = err.is_finite();
            break;
        }
        if intervals >= tol.max_intervals {
            break;
        }
        let p = heap.pop().expect("nonempty heap");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a.min(p.b) || m >= p.a.max(p.b) {
            heap.push(p);
            break;
        }
        let (v1, e1, f1) = gk21_floor(&f, p.a, m);
        let (v2, e2, f2) = gk21_floor(&f, m, p.b);
        evals += 42;
        intervals += 1;
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        floor += f1 + f2 - p.floor;
        heap.push(Panel {
            a: p.a,
            b: m,
            value: v1,
            error: e1,
            floor: f1,
        });
        heap.push(Panel {
            a: m,
            b: p.b,
            value: v2,
            error: e2,
            floor: f2,
        });
    }
    // re-sum to shed the drift of incremental updates
    let (mut value, mut error) = (0.0, 0.0);
    for p in heap.iter() {
        value += p.value;
        error += p.error;
    }
    QuadResult {
        value,
        error,
        evals,
        converged,
    }
}

/// Integrates over `[a, b]` after splitting at the given interior points.
pub fn integrate_split<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cuts: &[f64],
    tol: Tol,
) -> QuadResult {
    let mut pts: Vec<f64> = cuts.iter().copied().filter(|&c| c > a && c < b).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut out = QuadResult::zero();
    let mut lo = a;
    for c in pts.into_iter().chain(std::iter::once(b)) {
        let scaled = Tol {
            abs: tol.abs,
            ..tol
        };
        out = out.add(integrate(&f, lo, c, scaled));
        lo = c;
    }
    out
}

/// `∫_0^a f` for an integrand behaving like `η^nu` at the origin (`nu > -1`),
/// via `η = a·t^{1/(1+nu)}`, which turns the leading behavior into a constant.
pub fn integrate_from_zero<F: Fn(f64) -> f64>(f: F, a: f64, nu: f64, tol: Tol) -> QuadResult {
    let k = 1.0 / (1.0 + nu);
    integrate(
        |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            let eta = a * t.powf(k);
            let g = f(eta);
            if g == 0.0 {
                0.0
            } else {
                g * a * k * t.powf(k - 1.0)
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// `∫_h^∞ f` for an integrand decaying like `η^{-1-s}` (`s > 0`), via
/// `η = h·t^{-1/s}` on `t ∈ (0, 1]`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, h: f64, s: f64, tol: Tol) -> QuadResult {
    integrate(
        |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            let eta = h * t.powf(-1.0 / s);
            if !eta.is_finite() {
                return 0.0;
            }
            let g = f(eta);
            if g == 0.0 {
                0.0
            } else {
                g * (h / s) * t.powf(-1.0 / s - 1.0)
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn gl16_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Fixed 16-point Gauss–Legendre rule on `[a, b]`.
pub fn gl16<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let (x, w) = gl16_rule();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        s += wi * f(c + h * xi);
    }
    s * h
}

/// Bisection for a sign change of `f` on `[a, b]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            return Some(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Numerically stable `ln(exp(a) + exp(b))`.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, Tol::default());
        assert!((r.value - 0.0).abs() < 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, Tol::default());
        assert!((r.value - 2.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn log_singularity() {
        let r = integrate(|x: f64| x.ln(), 0.0, 1.0, Tol::default());
        assert!((r.value + 1.0).abs() < 1e-10);
    }

    #[test]
    fn mapped_ranges() {
        let r = integrate_from_zero(|x: f64| x.powf(-0.7) * (1.0 + x), 1.0, -0.7, Tol::default());
        assert!((r.value - (1.0 / 0.3 + 1.0 / 1.3)).abs() < 1e-10, "{r:?}");
        let r = integrate_to_inf(|x: f64| x.powf(-2.5), 2.0, 1.5, Tol::default());
        assert!((r.value - 2f64.powf(-1.5) / 1.5).abs() < 1e-13, "{r:?}");
    }

    #[test]
    fn gl_weights_sum_to_two() {
        for n in [1usize, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}");
            let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
            if n >= 2 {
                assert!((m2 - 2.0 / 3.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn gl16_is_exact_for_degree_31() {
        let v = gl16(|x: f64| x.powi(30), 0.0, 1.0);
        assert!((v - 1.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn log_add_matches() {
        assert!((log_add(1f64.ln(), 2f64.ln()) - 3f64.ln()).abs() < 1e-15);
        assert_eq!(log_add(f64::NEG_INFINITY, 0.5), 0.5);
    }
}
