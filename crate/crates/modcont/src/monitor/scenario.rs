//! Named experiment scenarios and the run loop that monitors them.

use std::collections::BTreeMap;
use std::f64::consts::{E, TAU};
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bounds::{arm_bound, BoundFormula, BoundKind};
use super::pressure::random_solenoidal;
use super::scan::{breakthrough_scan, holder_seminorm, ScanOptions};
use super::trace::{BlowupEvent, BoundExceedance, BoundTrace, SimulationTrace};
use crate::error::{Error, Result};
use crate::moduli::{
    build_thm2_modulus, build_thm3_modulus, build_thm4_modulus, rescale_for_data, DriftEnvelope,
    GProfile, Modulus, Regime, TimeDependentModulus,
};
use crate::spectral::{
    gradient_max, ClosedFormDrift, Dealias, DriftSource, EquationKind, Field, Integrator,
    MultiplierSpec, SioTerm, SolverConfig, SqgDrift, Stepper,
};
use crate::verifier::{
    certify_constant, check_inequality, feasible_delta, GridSpec, InequalityParams,
};

/// Experiment description; unset options take the scenario defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub n: Option<usize>,
    #[serde(rename = "L")]
    pub l: f64,
    pub dt: Option<f64>,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub nu: Option<f64>,
    pub kappa: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub amplitude: Option<f64>,
    /// `sin` or `random`.
    pub ic: String,
    pub g: Option<GProfile>,
    pub integrator: Option<Integrator>,
    pub dealias: Dealias,
    pub tail_tol: Option<f64>,
    /// Steps between recorded rows; 0 records about 100 rows (20 in 3D).
    pub record_every: usize,
    /// Rows between breakthrough scans; 0 disables scanning.
    pub scan_every: Option<usize>,
    pub scan: ScanOptions,
    /// Overrides for constants that would otherwise be computed or certified.
    pub constants: BTreeMap<String, f64>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: "burgers".into(),
            n: None,
            l: TAU,
            dt: None,
            t_max: 1.0,
            nu: None,
            kappa: None,
            alpha: None,
            beta: None,
            amplitude: None,
            ic: "sin".into(),
            g: None,
            integrator: None,
            dealias: Dealias::TwoThirds,
            tail_tol: None,
            record_every: 0,
            scan_every: None,
            scan: ScanOptions::default(),
            constants: BTreeMap::new(),
            seed: 0,
        }
    }
}

/// Everything the run loop needs, produced by a scenario.
pub struct Setup {
    pub solver: SolverConfig,
    pub initial: Field,
    pub drift: Option<Arc<dyn DriftSource>>,
    pub bounds: Vec<BoundFormula>,
    /// Modulus the breakthrough scans compare against.
    pub modulus: Option<TimeDependentModulus>,
    /// Envelope and exponent `γ` of the `lipschitz / g^γ` column.
    pub normalizer: Option<(DriftEnvelope, f64)>,
    pub constants: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub scan_every: usize,
}

pub trait Scenario: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn setup(&self, cfg: &ExperimentConfig) -> Result<Setup>;
}

pub struct ScenarioRegistry {
    items: BTreeMap<&'static str, Box<dyn Scenario>>,
}

impl ScenarioRegistry {
    pub fn empty() -> Self {
        ScenarioRegistry {
            items: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, s: Box<dyn Scenario>) {
        self.items.insert(s.name(), s);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Scenario> {
        self.items.get(name).map(|b| b.as_ref()).ok_or_else(|| {
            Error::Config(format!(
                "unknown scenario {name:?}; known: {}",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.items.keys().copied().collect()
    }
}

pub fn registry() -> &'static ScenarioRegistry {
    static REG: OnceLock<ScenarioRegistry> = OnceLock::new();
    REG.get_or_init(|| {
        let mut r = ScenarioRegistry::empty();
        r.register(Box::new(Burgers { hilbert: false }));
        r.register(Box::new(Burgers { hilbert: true }));
        r.register(Box::new(FractalBurgers));
        r.register(Box::new(Heat));
        r.register(Box::new(DriftDiffusion));
        r.register(Box::new(Sqg));
        r.register(Box::new(LinearNse));
        r.register(Box::new(Nse));
        r
    })
}

fn solver(
    cfg: &ExperimentConfig,
    equation: EquationKind,
    dt: f64,
    integrator: Integrator,
) -> SolverConfig {
    SolverConfig {
        equation,
        dt: cfg.dt.unwrap_or(dt),
        t_max: cfg.t_max,
        dealias: cfg.dealias,
        integrator: cfg.integrator.unwrap_or(integrator),
        tail_tol: cfg.tail_tol,
        ..SolverConfig::default()
    }
}

fn initial(cfg: &ExperimentConfig, dim: usize, n: usize, amp: f64) -> Result<Field> {
    let l = cfg.l;
    let k = TAU / l;
    match (cfg.ic.as_str(), dim) {
        ("sin", 1) => Field::from_fn(1, n, l, 1, |x| vec![amp * (k * x[0]).sin()]),
        ("sin", 2) => Field::from_fn(2, n, l, 1, |x| {
            vec![amp * (k * x[0]).sin() * (k * x[1]).cos()]
        }),
        ("sin", _) => Field::from_fn(3, n, l, 3, |x| {
            vec![
                amp * (k * x[2]).sin(),
                amp * (k * x[0]).sin(),
                amp * (k * x[1]).sin(),
            ]
        }),
        ("random", 3) => {
            let mut f = random_solenoidal(n, l, 2, cfg.seed)?;
            f.scale(amp);
            Ok(f)
        }
        ("random", _) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let terms: Vec<([f64; 2], f64, f64)> = (0..8)
                .map(|_| {
                    (
                        [rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64],
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(0.0..TAU),
                    )
                })
                .collect();
            Field::from_fn(dim, n, l, 1, move |x| {
                let v = terms
                    .iter()
                    .map(|(m, a, ph)| {
                        a * (k * (m[0] * x[0] + if dim > 1 { m[1] * x[1] } else { 0.0 }) + ph).sin()
                    })
                    .sum::<f64>();
                vec![amp * v]
            })
        }
        (other, _) => Err(Error::Config(format!(
            "unknown initial condition {other:?}; use sin or random"
        ))),
    }
}

fn const_or(cfg: &ExperimentConfig, name: &str, f: impl FnOnce() -> Result<f64>) -> Result<f64> {
    match cfg.constants.get(name) {
        Some(&v) => Ok(v),
        None => f(),
    }
}

fn certified(search: crate::verifier::ConstantSearch, what: &str) -> Result<f64> {
    search
        .constant
        .ok_or_else(|| Error::Construction(format!("{what} could not be certified up to the cap")))
}

struct Burgers {
    hilbert: bool,
}

impl Scenario for Burgers {
    fn name(&self) -> &'static str {
        if self.hilbert {
            "burgers-hilbert"
        } else {
            "burgers"
        }
    }

    fn describe(&self) -> &'static str {
        if self.hilbert {
            "1D viscous Burgers-Hilbert, THM2 bound with certified C0"
        } else {
            "1D viscous Burgers, BURGERS bound lambda0^2"
        }
    }

    fn setup(&self, cfg: &ExperimentConfig) -> Result<Setup> {
        let n = cfg.n.unwrap_or(256);
        let mut s = solver(cfg, EquationKind::Burgers, 1e-3, Integrator::Euler);
        s.nu = cfg.nu.unwrap_or(1.0);
        if self.hilbert {
            s.sio = Some(SioTerm {
                multiplier: MultiplierSpec::Hilbert1d,
                coupling: 1.0,
            });
        }
        let u0 = initial(cfg, 1, n, cfg.amplitude.unwrap_or(1.0))?;
        let (sup, lip) = (u0.sup_norm_padded(4), gradient_max(&u0));
        let delta = const_or(
            cfg,
            "delta",
            || Ok(feasible_delta(1.0, 0.5, 1.0, "THM2")?.1),
        )?;
        let base = build_thm2_modulus(delta, None, E, 0.0)?;
        let lambda0 = const_or(cfg, "lambda0", || {
            Ok(rescale_for_data(&base.omega, sup, lip)?.max(E))
        })?;
        let mut constants = BTreeMap::from([
            ("lambda0".to_string(), lambda0),
            ("delta".to_string(), delta),
        ]);
        let mut notes = vec![format!(
            "lambda0 = {lambda0:.6} from the rescaling of the Burgers modulus"
        )];
        let (bound, c0) = if self.hilbert {
            let c0 = const_or(cfg, "C0", || {
                let params = InequalityParams {
                    lambda0,
                    delta: Some(delta),
                    l: cfg.l,
                    dim: 1,
                    rho: 1.0,
                    c_k: 1.0,
                    ..Default::default()
                };
                let grid = GridSpec {
                    t_max: cfg.t_max,
                    ..GridSpec::default()
                };
                certified(certify_constant("THM2", &params, &grid)?, "C0")
            })?;
            constants.insert("C0".into(), c0);
            notes.push(format!("C0 = {c0:.6} certified on t in [0, {}]", cfg.t_max));
            (arm_bound(BoundKind::Thm2, &constants, None)?, c0)
        } else {
            (arm_bound(BoundKind::Burgers, &constants, None)?, 0.0)
        };
        let modulus = build_thm2_modulus(delta, None, lambda0, c0)?;
        Ok(Setup {
            solver: s,
            initial: u0,
            drift: None,
            bounds: vec![bound],
            modulus: Some(modulus),
            normalizer: None,
            constants,
            notes,
            scan_every: cfg.scan_every.unwrap_or(1),
        })
    }
}

struct FractalBurgers;

impl Scenario for FractalBurgers {
    fn name(&self) -> &'static str {
        "fractal-burgers"
    }

    fn describe(&self) -> &'static str {
        "1D inviscid Burgers with weak fractional dissipation, expected to lose resolution"
    }

    fn setup(&self, cfg: &ExperimentConfig) -> Result<Setup> {
        let n = cfg.n.unwrap_or(256);
        let mut s = solver(cfg, EquationKind::Burgers, 1e-3, Integrator::Euler);
        s.nu = cfg.nu.unwrap_or(0.0);
        s.kappa = cfg.kappa.unwrap_or(1.0);
        s.alpha = cfg.alpha.unwrap_or(0.2);
        s.tail_tol = Some(cfg.tail_tol.unwrap_or(1e-3));
        let u0 = initial(cfg, 1, n, cfg.amplitude.unwrap_or(3.0))?;
        Ok(Setup {
            solver: s,
            initial: u0,
            drift: None,
            bounds: Vec::new(),
            modulus: None,
            normalizer: None,
            constants: BTreeMap::new(),
            notes: Vec::new(),
            scan_every: 0,
        })
    }
}

struct Heat;

impl Scenario for Heat {
    fn name(&self) -> &'static str {
        "heat"
    }

    fn describe(&self) -> &'static str {
        "1D fractional heat equation"
    }

    fn setup(&self, cfg: &ExperimentConfig) -> Result<Setup> {
        let n = cfg.n.unwrap_or(256);
        let mut s = solver(cfg, EquationKind::Burgers, 1e-3, Integrator::Euler);
        s.nonlinear = false;
        s.nu = cfg.nu.unwrap_or(0.0);
        s.kappa = cfg.kappa.unwrap_or(1.0);
        s.alpha = cfg.alpha.unwrap_or(0.5);
        let u0 = initial(cfg, 1, n, cfg.amplitude.unwrap_or(1.0))?;
        Ok(Setup {
            solver: s,
            initial: u0,
            drift: None,
            bounds: Vec::new(),
            modulus: None,
            normalizer: None,
            constants: BTreeMap::new(),
            notes: Vec::new(),
            scan_every: 0,
        })
    }
}

/// `sgn(sin x)|sin x|^β/√2`, whose `C^{0,β}` seminorm is 1.
fn holder_profile(x: f64, beta: f64) -> f64 {
    let s = x.sin();
    s.signum() * s.abs().powf(beta) / 2f64.sqrt()
}

struct DriftDiffusion;

impl Scenario for DriftDiffusion {
    fn name(&self) -> &'static str {
        "drift-diffusion"
    }

    fn describe(&self) -> &'static str {
        "1D drift-diffusion with a prescribed C^beta drift of seminorm g(t), THM3 bound"
    }

    fn setup(&self, cfg: &ExperimentConfig) -> Result<Setup> {
        let n = cfg.n.unwrap_or(256);
        let alpha = cfg.alpha.unwrap_or(1.0);
        let beta = cfg.beta.unwrap_or(0.5);
        let mut s = solver(
            cfg,
            EquationKind::DriftDiffusion,
            1e-4,
            Integrator::Midpoint,
        );
        s.nu = cfg.nu.unwrap_or(0.0);
        s.kappa = cfg.kappa.unwrap_or(1.0);
        s.alpha = alpha;
        let env = DriftEnvelope::validated(
            beta,
            cfg.g.clone().unwrap_or(GProfile::Affine { a: 1.0, b: 4.0 }),
        )?;
        let k = TAU / cfg.l;
        let g = env.clone();
        let drift = ClosedFormDrift::new(
            "holder-sine",
            Arc::new(move |t, x: &[f64]| vec![g.g(t) * holder_profile(k * x[0], beta)]),
        )
        .with_envelope(env.clone());
        let u0 = initial(cfg, 1, n, cfg.amplitude.unwrap_or(1.0))?;
        let (sup, lip) = (u0.sup_norm_padded(4), gradient_max(&u0));
        let params = InequalityParams {
            alpha,
            beta,
            drift: Some(env.clone()),
            ..Default::default()
        };
        let delta = const_or(cfg, "delta", || {
            Ok(feasible_delta(alpha, beta, 1.0, "THM3")?.1)
        })?;
        let probe =
            build_thm3_modulus(alpha, beta, 1.0, env.clone(), delta, params.tail_constant())?;
        let b = const_or(cfg, "B", || {
            Ok(rescale_for_data(&probe.omega, sup, lip)?.max(1.0))
        })?;
        let modulus =
            build_thm3_modulus(alpha, beta, b, env.clone(), delta, params.tail_constant())?;
        let c0 = const_or(cfg, "C_0alpha", || Ok(b * b * modulus.omega.d1(0.0)))?;
        let mut notes = Vec::new();
        let check = check_inequality(
            "THM3",
            &InequalityParams {
                b,
                delta: Some(delta),
                ..params.clone()
            },
            &GridSpec {
                t_max: cfg.t_max,
                ..GridSpec::default()
            },
        )?;
        notes.push(format!(
            "THM3 inequality certified: {} (min margin {:.3e})",
            check.certified, check.min_margin
        ));
        let constants = BTreeMap::from([
            ("B".to_string(), b),
            ("C_0alpha".to_string(), c0),
            ("alpha".to_string(), alpha),
            ("beta".to_string(), beta),
            ("delta".to_string(), delta),
        ]);
        let bound = arm_bound(BoundKind::Thm3, &constants, Some(&env))?;
        let gamma = 1.0 / (beta + 2.0 * alpha - 1.0);
        Ok(Setup {
            solver: s,
            initial: u0,
            drift: Some(Arc::new(drift)),
            bounds: vec![bound],
            modulus: Some(modulus),
            normalizer: Some((env, gamma)),
            constants,
            notes,
            scan_every: cfg.scan_every.unwrap_or(1),
        })
    }
}

struct Sqg;

impl Scenario for Sqg {
    fn name(&self) -> &'static str {
        "sqg"
    }

    fn describe(&self) -> &'static str {
        "2D dissipative surface quasi-geostrophic equation"
    }

    fn setup(&self, cfg: &ExperimentConfig) -> Result<Setup> {
        let n = cfg.n.unwrap_or(64);
        let mut s = solver(
            cfg,
            EquationKind::DriftDiffusion,
            1e-3,
            Integrator::Midpoint,
        );
        s.nu = cfg.nu.unwrap_or(0.0);
        s.kappa = cfg.kappa.unwrap_or(1.0);
        s.alpha = cfg.alpha.unwrap_or(0.5);
        let u0 = initial(cfg, 2, n, cfg.amplitude.unwrap_or(1.0))?;
        Ok(Setup {
            solver: s,
            initial: u0,
            drift: Some(Arc::new(SqgDrift)),
            bounds: Vec::new(),
            modulus: None,
            normalizer: None,
            constants: BTreeMap::new(),
            notes: Vec::new(),
            scan_every: 0,
        })
    }
}

/// Taylor–Green field `(sin x cos y cos z, −cos x sin y cos z, 0)`.
fn taylor_green(k: f64, x: &[f64]) -> Vec<f64> {
    let (a, b, c) = (k * x[0], k * x[1], k * x[2]);
    vec![
        a.sin() * b.cos() * c.cos(),
        -a.cos() * b.sin() * c.cos(),
        0.0,
    ]
}

struct LinearNse;

impl Scenario for LinearNse {
    fn name(&self) -> &'static str {
        "linear-nse"
    }

    fn describe(&self) -> &'static str {
        "3D linearized Navier-Stokes with drift (1+t)*Taylor-Green, THM4_CRIT bound"
    }

    fn setup(&self, cfg: &ExperimentConfig) -> Result<Setup> {
        let n = cfg.n.unwrap_or(32);
        let (l, k) = (cfg.l, TAU / cfg.l);
        let alpha = cfg.alpha.unwrap_or(1.0);
        let beta = cfg.beta.unwrap_or(0.5);
        let mut s = solver(cfg, EquationKind::LinearNse, 5e-3, Integrator::Midpoint);
        s.nu = cfg.nu.unwrap_or(0.0);
        s.kappa = cfg.kappa.unwrap_or(1.0);
        s.alpha = alpha;
        let tg = Field::from_fn(3, n, l, 3, move |x| taylor_green(k, x))?;
        let s0 = holder_seminorm(
            &tg,
            beta,
            &ScanOptions {
                random_shifts: 20_000,
                ..cfg.scan
            },
        );
        let samples = 20;
        let (mut ts, mut gs) = (Vec::new(), Vec::new());
        for i in 0..=samples {
            let t = cfg.t_max * i as f64 / samples as f64;
            let prev = gs.last().copied().unwrap_or(1.0f64);
            ts.push(t);
            gs.push(((1.0 + t) * s0).max(prev));
        }
        if cfg.t_max == 0.0 {
            ts.truncate(1);
            gs.truncate(1);
        }
        let env = DriftEnvelope::validated(beta, GProfile::Table { t: ts, g: gs })?;
        let drift = ClosedFormDrift::new(
            "taylor-green",
            Arc::new(move |t, x: &[f64]| {
                taylor_green(k, x)
                    .into_iter()
                    .map(|v| (1.0 + t) * v)
                    .collect()
            }),
        )
        .with_envelope(env.clone());
        let u0 = initial(cfg, 3, n, cfg.amplitude.unwrap_or(1.0))?;
        let (sup, lip) = (u0.sup_norm_padded(2), gradient_max(&u0));
        let delta = const_or(cfg, "delta", || {
            Ok(feasible_delta(alpha, beta, 1.0, "THM4_CRIT")?.1)
        })?;
        let probe =
            build_thm4_modulus(alpha, beta, 1.0, env.clone(), Regime::Critical, delta, 1.0)?;
        let b = const_or(cfg, "B", || {
            Ok(rescale_for_data(&probe.omega, sup, lip)?.max(1.0))
        })?;
        let c_dab = const_or(cfg, "C_dab", || {
            let params = InequalityParams {
                alpha,
                beta,
                b,
                dim: 3,
                delta: Some(delta),
                drift: Some(env.clone()),
                regime: Regime::Critical,
                ..Default::default()
            };
            certified(
                certify_constant(
                    "THM4_CRIT",
                    &params,
                    &GridSpec {
                        t_max: cfg.t_max,
                        ..GridSpec::default()
                    },
                )?,
                "C_dab",
            )
        })?;
        let modulus =
            build_thm4_modulus(alpha, beta, b, env.clone(), Regime::Critical, delta, c_dab)?;
        let prefactor = modulus.omega.d1(0.0);
        let constants = BTreeMap::from([
            ("B".to_string(), b),
            ("C_dab".to_string(), c_dab),
            ("alpha".to_string(), alpha),
            ("beta".to_string(), beta),
            ("delta".to_string(), delta),
            ("prefactor".to_string(), prefactor),
            ("holder_seminorm_tg".to_string(), s0),
        ]);
        let bound = arm_bound(BoundKind::Thm4Crit, &constants, Some(&env))?;
        let notes = vec![format!("drift envelope g measured from the C^{beta} seminorm {s0:.6} of the Taylor-Green profile")];
        Ok(Setup {
            solver: s,
            initial: u0,
            drift: Some(Arc::new(drift)),
            bounds: vec![bound],
            modulus: Some(modulus),
            normalizer: None,
            constants,
            notes,
            scan_every: cfg.scan_every.unwrap_or(5),
        })
    }
}

struct Nse;

impl Scenario for Nse {
    fn name(&self) -> &'static str {
        "nse"
    }

    fn describe(&self) -> &'static str {
        "3D Navier-Stokes demo at low resolution"
    }

    fn setup(&self, cfg: &ExperimentConfig) -> Result<Setup> {
        let n = cfg.n.unwrap_or(32);
        let mut s = solver(cfg, EquationKind::Nse, 5e-3, Integrator::Midpoint);
        s.nu = cfg.nu.unwrap_or(0.0);
        s.kappa = cfg.kappa.unwrap_or(1.0);
        s.alpha = cfg.alpha.unwrap_or(1.0);
        let u0 = initial(cfg, 3, n, cfg.amplitude.unwrap_or(1.0))?;
        Ok(Setup {
            solver: s,
            initial: u0,
            drift: None,
            bounds: Vec::new(),
            modulus: None,
            normalizer: None,
            constants: BTreeMap::new(),
            notes: Vec::new(),
            scan_every: 0,
        })
    }
}

/// Runs a registered scenario, recording `‖∇u‖_∞`, `‖u‖_∞`, the armed bounds
/// and breakthrough scans at the configured cadence.
///
/// A solver blowup truncates the trace at the last good state and is flagged,
/// not returned as an error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SimulationTrace> {
    if !(cfg.l > 0.0 && cfg.t_max >= 0.0) {
        return Err(Error::Parameter(
            "L must be positive and T nonnegative".into(),
        ));
    }
    let scenario = registry().get(&cfg.scenario)?;
    let setup = scenario.setup(cfg)?;
    run_setup(scenario.name(), setup, cfg)
}

fn run_setup(name: &str, setup: Setup, cfg: &ExperimentConfig) -> Result<SimulationTrace> {
    setup.solver.validate()?;
    let u0 = setup.initial;
    let (dim, n, l) = (u0.dim(), u0.n(), u0.period());
    let mut stepper = Stepper::new(&setup.solver, dim, n, l, setup.drift.clone())?;
    let dt = setup.solver.dt;
    let steps = (setup.solver.t_max / dt).round() as usize;
    let rows = if dim == 3 { 20 } else { 100 };
    let every = if cfg.record_every > 0 {
        cfg.record_every
    } else {
        (steps / rows).max(1)
    };
    let sup_factor = if dim == 3 { 2 } else { 4 };
    let mut trace = SimulationTrace {
        scenario: name.to_string(),
        dim,
        n,
        times: Vec::new(),
        lipschitz: Vec::new(),
        sup_norm: Vec::new(),
        normalized: setup.normalizer.as_ref().map(|_| Vec::new()),
        bounds: setup
            .bounds
            .iter()
            .map(|b| BoundTrace {
                kind: b.kind.name().to_string(),
                values: Vec::new(),
            })
            .collect(),
        scanned: Vec::new(),
        flagged: Vec::new(),
        breakthrough: None,
        bound_exceeded: None,
        blowup: None,
        constants: setup.constants,
        notes: setup.notes,
        steps: 0,
        final_state: None,
    };
    let record = |trace: &mut SimulationTrace, t: f64, u: &Field, last: bool| {
        let lip = gradient_max(u);
        trace.times.push(t);
        trace.lipschitz.push(lip);
        trace.sup_norm.push(u.sup_norm_padded(sup_factor));
        if let (Some(col), Some((env, gamma))) =
            (trace.normalized.as_mut(), setup.normalizer.as_ref())
        {
            col.push(lip / env.g(t).powf(*gamma));
        }
        for (bt, b) in trace.bounds.iter_mut().zip(&setup.bounds) {
            let v = b.eval(t);
            bt.values.push(v);
            if lip > v && trace.bound_exceeded.is_none() {
                trace.bound_exceeded = Some(BoundExceedance {
                    t,
                    kind: bt.kind.clone(),
                    lipschitz: lip,
                    bound: v,
                });
            }
        }
        let row = trace.times.len() - 1;
        let scan = setup.scan_every > 0 && (row % setup.scan_every == 0 || last);
        let mut flag = false;
        if let (true, Some(m)) = (scan, setup.modulus.as_ref()) {
            let opts = ScanOptions {
                seed: cfg.scan.seed.wrapping_add(row as u64),
                ..cfg.scan
            };
            if let Some(b) = breakthrough_scan(u, m, t, &opts) {
                flag = true;
                if trace.breakthrough.is_none() {
                    trace.breakthrough = Some(b);
                }
            }
        }
        trace.scanned.push(scan && setup.modulus.is_some());
        trace.flagged.push(flag);
    };
    let mut u = u0;
    record(&mut trace, 0.0, &u, steps == 0);
    for k in 0..steps {
        let t = k as f64 * dt;
        match stepper.step(&u, t) {
            Ok(next) => u = next,
            Err(Error::Blowup { t, reason }) => {
                trace.blowup = Some(BlowupEvent { t, reason });
                break;
            }
            Err(e) => return Err(e),
        }
        trace.steps = k + 1;
        let done = k + 1 == steps;
        if (k + 1) % every == 0 || done {
            record(&mut trace, (k + 1) as f64 * dt, &u, done);
        }
    }
    let t_last = trace.steps as f64 * dt;
    if trace.blowup.is_some() && trace.times.last().is_some_and(|&t| t < t_last) {
        record(&mut trace, t_last, &u, true);
    }
    trace.final_state = Some((t_last, u));
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn holder_profile_seminorm_is_one_across_zero() {
        let h: f64 = 1e-6;
        let ratio = (holder_profile(h, 0.5) - holder_profile(-h, 0.5)) / (2.0 * h).sqrt();
        assert!((ratio - 1.0).abs() < 1e-6);
        assert!(holder_profile(PI / 2.0, 0.5) > 0.0);
    }
}
