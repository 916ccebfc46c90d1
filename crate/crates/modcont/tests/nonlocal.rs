use modcont::moduli::*;
use modcont::nonlocal::*;
use modcont::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Concave test moduli with nonincreasing curvature magnitude.
struct Rational;
impl Modulus for Rational {
    fn value(&self, s: f64) -> f64 {
        s / (1.0 + s)
    }
    fn d1(&self, s: f64) -> f64 {
        1.0 / (1.0 + s).powi(2)
    }
    fn d2(&self, s: f64) -> f64 {
        -2.0 / (1.0 + s).powi(3)
    }
    fn growth(&self) -> Growth {
        Growth::Bounded(1.0)
    }
    fn curvature_at_zero(&self) -> Curvature {
        Curvature {
            coef: -2.0,
            exponent: 0.0,
        }
    }
}

struct Log1p;
impl Modulus for Log1p {
    fn value(&self, s: f64) -> f64 {
        s.ln_1p()
    }
    fn d1(&self, s: f64) -> f64 {
        1.0 / (1.0 + s)
    }
    fn d2(&self, s: f64) -> f64 {
        -1.0 / (1.0 + s).powi(2)
    }
    fn growth(&self) -> Growth {
        Growth::Log
    }
    fn curvature_at_zero(&self) -> Curvature {
        Curvature {
            coef: -1.0,
            exponent: 0.0,
        }
    }
}

fn quadratic_oracle(alpha: f64, xi: f64) -> f64 {
    let h = 0.5 * xi;
    8.0 * h.powf(2.0 - 2.0 * alpha) / (2.0 - 2.0 * alpha)
        + 8.0 * xi * h.powf(1.0 - 2.0 * alpha) / (2.0 * alpha - 1.0)
        - 2.0 * xi * xi * h.powf(-2.0 * alpha) / (2.0 * alpha)
}

#[test]
fn dissipation_of_linear_vanishes() {
    let lin = Power::new(1.0, 1.0);
    for &alpha in &[0.1, 0.3, 0.5, 0.75, 0.95] {
        for &xi in &[1e-3, 0.5, 2.0, 40.0] {
            let r = frac_dissipation(&lin, alpha, xi, 1.0).unwrap();
            assert!(r.value.abs() <= 1e-12, "alpha={alpha} xi={xi}: {}", r.value);
        }
    }
}

#[test]
fn dissipation_of_quadratic_matches_closed_form() {
    let q = Power::new(1.0, 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let alpha = rng.gen_range(0.52..0.98);
        let xi = 10f64.powf(rng.gen_range(-2.0..1.5));
        let r = frac_dissipation(&q, alpha, xi, 1.0).unwrap();
        let want = quadratic_oracle(alpha, xi);
        assert!(
            ((r.value - want) / want).abs() <= 1e-8,
            "alpha={alpha} xi={xi}: {} vs {want}",
            r.value
        );
        assert!(r.est_error >= 0.0 && r.tail_truncation == 0.0);
    }
    // the worked value at alpha = 0.75, xi = 1: near part 8(1/2)^{1/2}/(1/2)
    let near = 8.0 * 0.5f64.powf(0.5) / 0.5;
    assert!(
        (quadratic_oracle(0.75, 1.0)
            - (near + 8.0 * 0.5f64.powf(-0.5) / 0.5 - 2.0 * 0.5f64.powf(-1.5) / 1.5))
            .abs()
            < 1e-12
    );
}

#[test]
fn quadratic_tail_diverges_for_small_alpha() {
    let q = Power::new(1.0, 2.0);
    assert!(matches!(
        frac_dissipation(&q, 0.4, 1.0, 1.0),
        Err(Error::Divergence(_))
    ));
    assert!(matches!(
        frac_dissipation(&q, 1.2, 1.0, 1.0),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn alpha_one_is_local() {
    let m = Rational;
    let r = frac_dissipation(&m, 1.0, 0.7, 1.0).unwrap();
    assert_eq!(r.value, 4.0 * m.d2(0.7));
    assert_eq!(
        frac_dissipation_local_bound(&m, 1.0, 0.7, 1.0),
        4.0 * m.d2(0.7)
    );
}

#[test]
fn local_bound_closed_form() {
    let (alpha, beta) = (0.75, 0.25);
    let r = holder_r(alpha, beta);
    let delta = 1.0 / 64.0;
    let m = build_thm3_modulus(
        alpha,
        beta,
        1.0,
        DriftEnvelope::constant(beta, 1.0),
        delta,
        1.0,
    )
    .unwrap();
    let xi = 0.5 * delta;
    let got = frac_dissipation_local_bound(&m.omega, alpha, xi, 1.0);
    let want = -(2.0 - r) * (1.0 - r) * xi.powf(2.0 - 2.0 * alpha - r);
    assert!(((got - want) / want).abs() < 1e-12, "{got} vs {want}");
    assert_eq!(
        frac_dissipation_local_bound(&Power::new(3.0, 1.0), 0.4, 2.0, 1.0),
        0.0
    );
}

#[test]
fn concave_moduli_dissipate_within_local_bound() {
    let thm3 = build_thm3_modulus(
        0.75,
        0.25,
        1.0,
        DriftEnvelope::constant(0.25, 1.0),
        1.0 / 64.0,
        1.0,
    )
    .unwrap();
    let tanh = PiecewiseModulus::tanh_profile(2.0, 0.25);
    let sqrt = Power::new(1.0, 0.5);
    let moduli: Vec<(&str, &dyn Modulus)> = vec![
        ("rational", &Rational),
        ("log", &Log1p),
        ("sqrt", &sqrt),
        ("thm3", &thm3.omega),
    ];
    for (name, m) in moduli {
        for &alpha in &[0.2, 0.5, 0.75, 0.9] {
            for &xi in &[1e-3, 0.01, 0.3, 1.0, 7.0] {
                let d = frac_dissipation(m, alpha, xi, 1.0)
                    .unwrap_or_else(|e| panic!("{name} {alpha} {xi}: {e}"))
                    .value;
                let bound =
                    frac_dissipation_local_bound(m, alpha, xi, dissipation_coefficient(alpha, 1.0));
                assert!(d < 0.0, "{name} alpha={alpha} xi={xi}: {d}");
                assert!(
                    d <= bound * (1.0 - 1e-9),
                    "{name} alpha={alpha} xi={xi}: {d} > {bound}"
                );
            }
        }
    }
    for &xi in &[0.5, 3.0, 20.0] {
        assert!(frac_dissipation(&tanh, 0.6, xi, 1.0).unwrap().value < 0.0);
    }
}

#[test]
fn kink_at_xi_is_detected() {
    let t = Tabulated::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.5]).unwrap();
    assert!(matches!(
        frac_dissipation(&t, 0.75, 1.0, 1.0),
        Err(Error::Quadrature(_))
    ));
    let d = frac_dissipation(&t, 0.3, 1.0, 1.0).unwrap();
    assert!(d.value < 0.0 && d.value.is_finite());
}

#[test]
fn scaling_covariance() {
    let base = PiecewiseModulus::tanh_profile(1.0, 1.0);
    for &(lam, mu, alpha, xi) in &[
        (2.0, 3.0, 0.6, 0.4),
        (0.5, 0.2, 0.3, 5.0),
        (7.0, 11.0, 0.9, 0.05),
    ] {
        let scaled = Scaled::new(base.clone(), lam, mu);
        let lhs = frac_dissipation(&scaled, alpha, xi, 1.0).unwrap().value;
        let rhs = lam
            * mu.powf(2.0 * alpha)
            * frac_dissipation(&base, alpha, mu * xi, 1.0).unwrap().value;
        assert!(((lhs - rhs) / rhs).abs() <= 1e-8, "{lhs} vs {rhs}");
    }
}

#[test]
fn sio_examples() {
    let capped = Tabulated::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
    let r = sio_functional(&capped, 1.0, 1.0 / 3.0, 2.0).unwrap();
    assert!((r.value - 2.0 * 4.0 / 3.0).abs() <= 1e-11, "{}", r.value);
    let zero = Power::new(0.0, 1.0);
    assert_eq!(sio_functional(&zero, 0.5, 1.0, 1.0).unwrap().value, 0.0);
    assert!(matches!(
        sio_functional(&Power::new(1.0, 1.0), 1.0, 1.0, 1.0),
        Err(Error::Divergence(_))
    ));
    assert!(sio_functional(&Power::new(1.0, 0.5), 0.75, 1.0, 1.0).is_ok());
}

#[test]
fn sio_respects_logarithmic_bound() {
    let delta = 0.25;
    let m = build_thm2_modulus(delta, None, std::f64::consts::E, 1.0).unwrap();
    for &xi in &[0.25, 0.5, 2.0, 30.0, 500.0] {
        let v = sio_functional(&m.omega, 1.0, xi, 1.0).unwrap().value;
        let bound = 2.0 * delta + (3.0 * xi / delta).ln() + 1.0;
        assert!(v <= bound, "xi={xi}: {v} > {bound}");
    }
}

#[test]
fn pressure_examples() {
    let b = Power::new(1.0, 0.75);
    let r = pressure_functional(&b, &b, 1.0, 3.0).unwrap();
    assert!((r.value - 30.0).abs() <= 1e-9, "{}", r.value);
    let zero = Power::new(0.0, 1.0);
    assert_eq!(pressure_functional(&b, &zero, 1.0, 1.0).unwrap().value, 0.0);
    let lip = Power::new(1.0, 1.0);
    assert!(matches!(
        pressure_functional(&lip, &lip, 1.0, 1.0),
        Err(Error::Divergence(_))
    ));
    let flat = Power::new(1.0, 0.0);
    assert!(matches!(
        pressure_functional(&flat, &flat, 1.0, 1.0),
        Err(Error::Divergence(_))
    ));
}

#[test]
fn pressure_symmetry() {
    let a = Power::new(2.0, 0.5);
    let b = PiecewiseModulus::tanh_profile(1.5, 0.7);
    for &xi in &[0.01, 0.8, 12.0] {
        let x = pressure_functional(&a, &b, xi, 1.0).unwrap().value;
        let y = pressure_functional(&b, &a, xi, 1.0).unwrap().value;
        assert!(((x - y) / x).abs() <= 1e-12);
    }
}

#[test]
fn nse_pressure_routes_agree() {
    let thm3 =
        build_thm3_modulus(1.0, 0.5, 1.0, DriftEnvelope::constant(0.5, 1.0), 0.125, 2.0).unwrap();
    let tanh = PiecewiseModulus::tanh_profile(2.0, 0.25);
    let tab = Tabulated::new(vec![0.0, 0.3, 1.0, 4.0], vec![0.0, 0.5, 0.9, 1.2]).unwrap();
    let moduli: Vec<&dyn Modulus> = vec![&thm3.omega, &tanh, &tab];
    for m in moduli {
        for &(beta, g, xi) in &[(0.5, 1.0, 0.05), (0.25, 3.0, 0.7), (0.9, 0.5, 5.0)] {
            let a = nse_pressure_functional(m, beta, g, xi, 1.0).unwrap().value;
            let b = nse_pressure_functional_ibp(m, beta, g, xi, 1.0)
                .unwrap()
                .value;
            assert!(
                ((a - b) / a).abs() <= 1e-8,
                "beta={beta} xi={xi}: {a} vs {b}"
            );
            let direct = pressure_functional(&Power::new(g, beta), m, xi, 1.0)
                .unwrap()
                .value;
            let extra = g * xi.powf(beta) * m.value(xi) / ((1.0 - beta) * xi);
            assert!(extra > 0.0 && extra < direct);
        }
    }
}

#[test]
fn hypothesis_examples() {
    let om = Tabulated::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
    let r = hypothesis_functional(&om, 1.0, 0.5).unwrap();
    assert!((r.value - 2.0).abs() <= 1e-12);
    let nodes = hypothesis_functional_on_nodes(&om, 0.5);
    assert!((nodes[1] - 2.0).abs() <= 1e-14);
    let zero = Tabulated::new(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
    assert_eq!(hypothesis_functional(&zero, 0.5, 1.0).unwrap().value, 0.0);
    assert!(matches!(
        hypothesis_functional(&om, 0.0, 1.0),
        Err(Error::Domain(_))
    ));
}

fn random_tabulated(rng: &mut ChaCha8Rng, n: usize) -> Tabulated {
    let mut x = vec![0.0];
    let mut y = vec![0.0];
    for _ in 0..n {
        x.push(x.last().unwrap() + rng.gen_range(0.05..1.0));
        y.push(y.last().unwrap() + rng.gen_range(0.0..1.0));
    }
    Tabulated::new(x, y).unwrap()
}

/// Composite trapezoid with `n` panels.
fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..n {
        s += f(a + h * i as f64);
    }
    s * h
}

#[test]
fn tabulated_functionals_match_trapezoid_refinement() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10 {
        let n = rng.gen_range(3..12);
        let om = random_tabulated(&mut rng, n);
        let last = om.last_node();
        let (x, y) = om.nodes();
        let slope0 = y[1] / x[1];
        let xi = rng.gen_range(0.1..0.9) * last;
        let sq = |e: f64| {
            if e == 0.0 {
                slope0 * slope0
            } else {
                om.value(e).powi(2) / (e * e)
            }
        };
        let near = trapezoid(sq, 0.0, xi, 1_000_000);
        let tail =
            trapezoid(|e| om.value(e) / (e * e), xi, last, 1_000_000) + y[y.len() - 1] / last;
        let oracle = 2.0 * (near + om.value(xi) * tail);
        let got = hypothesis_functional(&om, xi, 1.0).unwrap().value;
        assert!(((got - oracle) / oracle).abs() <= 1e-6, "{got} vs {oracle}");
        let nodes = hypothesis_functional_on_nodes(&om, 1.0);
        for (j, &xj) in x.iter().enumerate().skip(1) {
            let adaptive = hypothesis_functional(&om, xj, 1.0).unwrap().value;
            assert!(((nodes[j] - adaptive) / adaptive).abs() <= 1e-10);
        }

        let rho = 0.5;
        let lin = |e: f64| if e == 0.0 { slope0 } else { om.value(e) / e };
        let near = trapezoid(lin, 0.0, 3.0 * xi, 1_000_000);
        let far = if 3.0 * xi < last {
            trapezoid(
                |e| om.value(e) * e.powf(-1.0 - rho),
                3.0 * xi,
                last,
                1_000_000,
            ) + y[y.len() - 1] * last.powf(-rho) / rho
        } else {
            om.value(3.0 * xi) * (3.0 * xi).powf(-rho) / rho
        };
        let oracle = near + xi.powf(rho) * far;
        let got = sio_functional(&om, rho, xi, 1.0).unwrap().value;
        assert!(((got - oracle) / oracle).abs() <= 1e-6, "{got} vs {oracle}");
    }
}

fn tab_pair() -> impl Strategy<Value = (Tabulated, Tabulated)> {
    prop::collection::vec((0.05f64..1.0, 0.0f64..1.0, 0.0f64..0.5), 2..8).prop_map(|cells| {
        let (mut x, mut y1, mut y2) = (vec![0.0], vec![0.0], vec![0.0]);
        for (dx, dy, extra) in cells {
            x.push(x.last().unwrap() + dx);
            let v1 = y1.last().unwrap() + dy;
            y1.push(v1);
            let v2 = (y2.last().unwrap() + dy).max(v1) + extra;
            y2.push(v2);
        }
        (
            Tabulated::new(x.clone(), y1).unwrap(),
            Tabulated::new(x, y2).unwrap(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn functionals_monotone_in_modulus((lo, hi) in tab_pair(), xi in 0.05f64..3.0) {
        let b = Power::new(1.0, 0.5);
        let s1 = sio_functional(&lo, 0.7, xi, 1.0).unwrap().value;
        let s2 = sio_functional(&hi, 0.7, xi, 1.0).unwrap().value;
        prop_assert!(s1 <= s2 * (1.0 + 1e-10) + 1e-14);
        let p1 = pressure_functional(&b, &lo, xi, 1.0).unwrap().value;
        let p2 = pressure_functional(&b, &hi, xi, 1.0).unwrap().value;
        prop_assert!(p1 <= p2 * (1.0 + 1e-10) + 1e-14);
        let h1 = hypothesis_functional(&lo, xi, 1.0).unwrap().value;
        let h2 = hypothesis_functional(&hi, xi, 1.0).unwrap().value;
        prop_assert!(h1 <= h2 * (1.0 + 1e-10) + 1e-14);
    }
}

#[test]
fn tabulated_pressure_closed_form_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..40 {
        let (n1, n2) = (rng.gen_range(1..10), rng.gen_range(1..10));
        let (mb, mu) = (
            random_tabulated(&mut rng, n1),
            random_tabulated(&mut rng, n2),
        );
        let top = mb.last_node().max(mu.last_node());
        for xi in [
            1e-3 * top,
            rng.gen_range(0.05..1.5) * top,
            mb.last_node(),
            2.0 * top,
        ] {
            let want = pressure_functional(&mb, &mu, xi, 1.0).unwrap().value;
            let got = pressure_functional_tabulated(&mb, &mu, xi, 1.0).unwrap();
            assert!(
                ((got - want) / want).abs() <= 1e-9,
                "xi={xi}: {got} vs {want}"
            );
        }
    }
}
