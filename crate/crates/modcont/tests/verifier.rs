use modcont::moduli::{holder_r, DriftEnvelope, GProfile, PiecewiseModulus};
use modcont::nonlocal::dissipation_coefficient;
use modcont::verifier::*;
use proptest::prelude::*;

const PAIRS: [(f64, f64); 5] = [
    (1.0, 0.5),
    (1.0, 0.25),
    (0.75, 0.25),
    (0.6, 0.5),
    (0.5, 0.9),
];

fn params(alpha: f64, beta: f64) -> InequalityParams {
    InequalityParams {
        alpha,
        beta,
        ..Default::default()
    }
}

/// Largest `2^{−j} ≤ 1/3` meeting the closed-form small-distance and
/// tail-slope conditions.
fn closed_form_delta(alpha: f64, beta: f64) -> f64 {
    let r = holder_r(alpha, beta);
    let k = dissipation_coefficient(alpha, 1.0);
    (2..40)
        .map(|j| 0.5f64.powi(j))
        .find(|&d| {
            d.powf(beta + 2.0 * alpha + r - 2.0) <= (2.0 - r) * (1.0 - r) * k
                && 0.5 - (2.0 - r) * d.powf(1.0 - r) > 0.0
        })
        .unwrap()
}

#[test]
fn feasible_delta_matches_closed_form() {
    for (a, b) in PAIRS {
        let (r, d) = feasible_delta(a, b, 1.0, "THM3").unwrap();
        assert!((r - holder_r(a, b)).abs() < 1e-15);
        assert_eq!(d, closed_form_delta(a, b), "alpha={a} beta={b}");
    }
    let (r, d) = feasible_delta(1.0, 0.5, 1.0, "THM3").unwrap();
    assert_eq!(r, 0.25);
    assert!(d.powf(0.75) <= 5.25);
    assert!((feasible_delta(0.5, 0.9, 1.0, "THM3").unwrap().0 - 0.55).abs() < 1e-15);
}

#[test]
fn feasible_delta_rejects_empty_interval() {
    let err = feasible_delta(0.25, 0.4, 1.0, "THM3").unwrap_err();
    assert!(
        err.to_string().contains("beta+2alpha-1 must be positive"),
        "{err}"
    );
    assert!(check_inequality("THM3", &params(0.25, 0.4), &GridSpec::default()).is_err());
}

#[test]
fn thm3_certifies_reference_pairs() {
    let grid = GridSpec::default();
    for (a, b) in PAIRS {
        for mode in [Mode::Exact, Mode::Conservative] {
            let p = InequalityParams {
                mode,
                ..params(a, b)
            };
            let rep = check_inequality("THM3", &p, &grid).unwrap();
            assert!(
                rep.certified,
                "alpha={a} beta={b} {mode:?}: {:?}",
                rep.worst_certificate_at
            );
            assert!(rep.min_margin > rep.argmin.budget);
        }
    }
}

#[test]
fn thm3_tail_margin_is_one_third() {
    // tail ODE constant is half the local dissipation coefficient
    let rep = check_inequality("THM3", &params(1.0, 0.5), &GridSpec::default()).unwrap();
    let d = rep.constants["delta"];
    for m in rep
        .margins
        .iter()
        .filter(|m| m.sigma > d && m.sigma < 100.0)
    {
        assert!((m.margin - 1.0 / 3.0).abs() < 1e-9, "{m:?}");
    }
}

#[test]
fn thm3_scale_independent() {
    let grid = GridSpec {
        n_sigma: 200,
        ..Default::default()
    };
    for (a, b) in [(1.0, 0.5), (0.75, 0.25)] {
        let base = check_inequality("THM3", &params(a, b), &grid).unwrap();
        let scaled = InequalityParams {
            b: 10.0,
            drift: Some(DriftEnvelope::constant(b.min(0.99), 10.0)),
            ..params(a, b)
        };
        let rep = check_inequality("THM3", &scaled, &grid).unwrap();
        assert!(rep.certified);
        assert_eq!(rep.constants["delta"], base.constants["delta"]);
        assert_eq!(rep.constants["r"], base.constants["r"]);
        assert!(rep.min_margin >= base.min_margin - 1e-12);
    }
}

#[test]
fn thm2_constant_certified_over_long_window() {
    let grid = GridSpec {
        t_max: 5.0,
        ..Default::default()
    };
    let p = InequalityParams {
        l: 2.0 * std::f64::consts::PI,
        dim: 1,
        rho: 1.0,
        ..Default::default()
    };
    let s = certify_constant("THM2", &p, &grid).unwrap();
    let c0 = s.constant.expect("finite C0");
    assert!(c0 > 0.0 && c0 <= 1e4, "{c0}");
    let rep = check_inequality(
        "THM2",
        &InequalityParams {
            c0: Some(c0),
            ..p.clone()
        },
        &grid,
    )
    .unwrap();
    assert!(rep.certified);
    let reach = (4.0 * std::f64::consts::PI).ln() + (5.0 * c0).exp();
    assert!((rep.grid.ln_sigma_max - reach).abs() < 1e-9 * reach);
    assert!(rep
        .margins
        .iter()
        .any(|m| m.t == 5.0 && (m.ln_sigma - reach).abs() < 1e-9 * reach));
    let below = check_inequality(
        "THM2",
        &InequalityParams {
            c0: Some(0.99 * c0),
            ..p
        },
        &grid,
    )
    .unwrap();
    assert!(!below.certified);
}

#[test]
fn thm2_zero_constants_reduce_to_burgers() {
    let p = InequalityParams {
        c0: Some(0.0),
        c_k: 0.0,
        ..Default::default()
    };
    let rep = check_inequality("THM2", &p, &GridSpec::default()).unwrap();
    let d = rep.constants["delta"];
    let tail: Vec<_> = rep
        .margins
        .iter()
        .filter(|m| m.sigma > d && m.sigma.is_finite())
        .collect();
    assert!(!tail.is_empty());
    for m in tail.iter().filter(|m| m.sigma < 15.0) {
        // (8 − 1)/(8 + 1) for ω = tanh
        assert!((m.margin - 7.0 / 9.0).abs() < 1e-9, "{m:?}");
    }
    assert!(tail.iter().all(|m| m.margin >= 0.0));
    assert!(!rep.certified);
}

#[test]
fn zero_constant_cannot_absorb_nonlocal_term() {
    let grid = GridSpec {
        t_max: 1.0,
        ..Default::default()
    };
    let rep = check_inequality(
        "THM2",
        &InequalityParams {
            c0: Some(0.0),
            ..Default::default()
        },
        &grid,
    )
    .unwrap();
    assert!(!rep.certified);
    let hyp = InequalityParams {
        c_d: 1.0,
        ..Default::default()
    };
    let s = certify_constant("HYP1", &hyp, &grid).unwrap();
    assert_eq!(s.constant, None);
    assert!(!s.report.certified);
}

#[test]
fn hyp1_tanh_without_nonlocal_term() {
    let p = InequalityParams {
        c_d: 0.0,
        profile: HypProfile::Tanh {
            amp: 1.0,
            rate: 1.0,
        },
        ..Default::default()
    };
    let rep = check_inequality("HYP1", &p, &GridSpec::default()).unwrap();
    assert!(rep.certified);
    assert!(rep.margins.iter().all(|m| m.margin >= 0.0));
    assert!((rep.min_margin - 7.0 / 9.0).abs() < 1e-9);
}

#[test]
fn thm4_crit_constant_scales_with_delta() {
    let grid = GridSpec::default();
    let run = |d: f64, mode| {
        let p = InequalityParams {
            delta: Some(d),
            mode,
            ..Default::default()
        };
        certify_constant("THM4_CRIT", &p, &grid)
            .unwrap()
            .constant
            .unwrap()
    };
    let (_, d) = feasible_delta(1.0, 0.5, 1.0, "THM4_CRIT").unwrap();
    let expected = 2f64.powf(0.5);
    for d in [d / 2.0, d / 4.0] {
        let ratio = run(d / 2.0, Mode::Exact) / run(d, Mode::Exact);
        assert!(
            (ratio / expected - 1.0).abs() < 0.2,
            "delta={d}: ratio {ratio}"
        );
        let ratio = run(d / 2.0, Mode::Conservative) / run(d, Mode::Conservative);
        assert!(
            (ratio / expected - 1.0).abs() < 1e-6,
            "delta={d}: conservative ratio {ratio}"
        );
    }
}

#[test]
fn thm4_crit_and_super_certify() {
    let grid = GridSpec {
        n_sigma: 300,
        ..Default::default()
    };
    let crit = certify_constant("THM4_CRIT", &InequalityParams::default(), &grid).unwrap();
    assert!(crit.constant.unwrap() > 0.0);
    let drift = DriftEnvelope {
        beta: 0.5,
        profile: GProfile::Affine { a: 1.0, b: 4.0 },
    };
    let p = InequalityParams {
        drift: Some(drift),
        ..Default::default()
    };
    let sup = certify_constant("THM4_SUPER", &p, &grid).unwrap();
    let c = sup.constant.unwrap();
    assert!(sup.report.certified && c > 0.0);
    let rep = check_inequality(
        "THM4_SUPER",
        &InequalityParams {
            c_dab: Some(2.0 * c),
            ..p
        },
        &grid,
    )
    .unwrap();
    assert!(rep.certified);
}

fn assert_mode_consistent(kind: &str, p: InequalityParams, grid: &GridSpec) {
    let exact = check_inequality(
        kind,
        &InequalityParams {
            mode: Mode::Exact,
            ..p.clone()
        },
        grid,
    )
    .unwrap();
    let cons = check_inequality(
        kind,
        &InequalityParams {
            mode: Mode::Conservative,
            ..p
        },
        grid,
    )
    .unwrap();
    assert_eq!(exact.margins.len(), cons.margins.len());
    for (e, c) in exact.margins.iter().zip(&cons.margins) {
        assert_eq!(e.ln_sigma, c.ln_sigma);
        assert!(c.margin <= e.margin + 1e-12, "{kind}: {c:?} above {e:?}");
    }
}

#[test]
fn conservative_never_exceeds_exact() {
    let grid = GridSpec {
        n_sigma: 150,
        ..Default::default()
    };
    let long = GridSpec { t_max: 5.0, ..grid };
    assert_mode_consistent(
        "THM2",
        InequalityParams {
            c0: Some(25.0),
            ..Default::default()
        },
        &long,
    );
    for (a, b) in [(1.0, 0.5), (0.6, 0.5), (0.5, 0.9)] {
        assert_mode_consistent("THM3", params(a, b), &grid);
    }
    for a in [1.0, 0.75] {
        assert_mode_consistent(
            "THM4_CRIT",
            InequalityParams {
                c_dab: Some(100.0),
                ..params(a, 0.5)
            },
            &grid,
        );
    }
}

#[test]
fn refinement_stays_within_budget() {
    for (kind, c) in [
        ("THM2", Some(8.0)),
        ("THM3", None),
        ("THM4_CRIT", Some(10.0)),
    ] {
        let p = InequalityParams {
            c0: c,
            c_dab: c,
            ..Default::default()
        };
        let coarse = GridSpec {
            t_max: 5.0,
            ..Default::default()
        };
        let fine = GridSpec {
            n_sigma: 2 * coarse.n_sigma,
            ..coarse
        };
        let a = check_inequality(kind, &p, &coarse).unwrap();
        let b = check_inequality(kind, &p, &fine).unwrap();
        let budget = a.argmin.budget.max(b.argmin.budget);
        assert!(
            (a.min_margin - b.min_margin).abs() <= budget,
            "{kind}: {} vs {}",
            a.min_margin,
            b.min_margin
        );
    }
}

#[test]
fn grid_avoids_breakpoints() {
    let rep = check_inequality("THM3", &params(1.0, 0.5), &GridSpec::default()).unwrap();
    let d = rep.constants["delta"];
    assert!(rep.margins.iter().all(|m| (m.sigma - d).abs() > 1e-9 * d));
    assert!(rep
        .margins
        .iter()
        .any(|m| m.sigma < d && m.sigma > d * (1.0 - 1e-6)));
    assert!(rep
        .margins
        .iter()
        .any(|m| m.sigma > d && m.sigma < d * (1.0 + 1e-6)));
}

#[test]
fn registry_and_report_fields() {
    let names = registry().names();
    for k in ["HYP1", "THM2", "THM3", "THM4_CRIT", "THM4_SUPER"] {
        assert!(names.contains(&k));
    }
    assert!(check_inequality("THM9", &InequalityParams::default(), &GridSpec::default()).is_err());
    assert!(certify_constant("THM3", &InequalityParams::default(), &GridSpec::default()).is_err());
    let rep = check_inequality("thm3", &params(1.0, 0.5), &GridSpec::default()).unwrap();
    let v = serde_json::to_value(&rep).unwrap();
    for key in [
        "kind",
        "params",
        "grid",
        "min_margin",
        "argmin",
        "certified",
        "constants",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["kind"], "THM3");
    assert_eq!(v["params"]["r"], 0.25);
}

#[test]
fn explicit_r_must_match_midpoint() {
    let p = InequalityParams {
        r: Some(0.3),
        ..params(1.0, 0.5)
    };
    assert!(check_inequality("THM3", &p, &GridSpec::default()).is_err());
    let p = InequalityParams {
        r: Some(0.25),
        ..params(1.0, 0.5)
    };
    assert!(
        check_inequality("THM3", &p, &GridSpec::default())
            .unwrap()
            .certified
    );
}

#[test]
fn march_stationary_burgers_profile() {
    let w = PiecewiseModulus::tanh_profile(2.0, 0.25);
    let tr = hypothesis_march(&w, &MarchConfig::default()).unwrap();
    assert!(tr.completed && tr.boundary_exact);
    assert!((tr.samples.last().unwrap().t - 1.0).abs() < 1e-12);
    for s in &tr.samples {
        assert!(s.max_change < 1e-6, "{s:?}");
        assert!((s.slope0 - 0.5).abs() < 1e-5);
    }
}

#[test]
fn march_burgers_modulus_slope_nonincreasing() {
    let w = hypothesis_profile(&HypProfile::Thm2 { delta: 0.25 }, std::f64::consts::E).unwrap();
    let tr = hypothesis_march(&w, &MarchConfig::default()).unwrap();
    assert!(tr.completed && tr.boundary_exact && tr.violation.is_none());
    assert_eq!(tr.omega[0], 0.0);
    assert!(tr.omega.windows(2).all(|p| p[1] >= p[0] - 1e-12));
    let after: Vec<_> = tr.samples.iter().filter(|s| s.t >= 0.05).collect();
    assert!(after.windows(2).all(|p| p[1].slope0 <= p[0].slope0 + 1e-12));
}

#[test]
fn march_with_nonlocal_term_reports_outcome() {
    let w = PiecewiseModulus::tanh_profile(2.0, 0.25);
    for c_d in [0.1, 1.0] {
        let tr = hypothesis_march(
            &w,
            &MarchConfig {
                c_d,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(tr.boundary_exact);
        assert!(!tr.samples.is_empty());
        match &tr.violation {
            None => assert!(tr.completed && (tr.samples.last().unwrap().t - 1.0).abs() < 1e-12),
            Some(v) => {
                assert!(!tr.completed && v.t > 0.0 && v.t < 1.0);
                assert_eq!(tr.samples.last().unwrap().t, v.t);
            }
        }
    }
    let strong = hypothesis_march(
        &w,
        &MarchConfig {
            c_d: 1.0,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(!strong.completed);
}

#[test]
fn march_rejects_bad_config() {
    let w = PiecewiseModulus::tanh_profile(2.0, 0.25);
    assert!(hypothesis_march(
        &w,
        &MarchConfig {
            m: 2,
            ..Default::default()
        }
    )
    .is_err());
    assert!(hypothesis_march(
        &w,
        &MarchConfig {
            dt: 0.0,
            ..Default::default()
        }
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn conservative_thm3_certifies_in_supercritical_range(alpha in 0.55f64..1.0, s in 0.1f64..0.9) {
        let lo = (1.0 - 2.0 * alpha).max(0.0) + 0.05;
        let beta = lo + s * (0.95 - lo);
        let p = InequalityParams { mode: Mode::Conservative, ..params(alpha, beta) };
        let rep = check_inequality("THM3", &p, &GridSpec { n_sigma: 200, ..Default::default() }).unwrap();
        prop_assert!(rep.certified, "alpha={alpha} beta={beta}: {:?}", rep.worst_certificate_at);
    }
}
