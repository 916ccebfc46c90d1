use super::{Curvature, Growth, Modulus};
use crate::quad::{integrate, Tol};

/// Tail `ω(δ) + ω′(δ⁺)∫_δ^σ exp(−(η^p − δ^p)/(c·p)) dη`, which solves
/// `c·σ^{2−2α}ω″ + σ^β ω′ = 0` with `p = β + 2α − 1`.
///
/// The antiderivative is tabulated once on a geometric grid; evaluation adds
/// one adaptive panel from the nearest node.
#[derive(Debug, Clone)]
pub struct ExpTail {
    pub delta: f64,
    pub v0: f64,
    pub slope0: f64,
    pub p: f64,
    pub c: f64,
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ExpTail {
    pub fn new(delta: f64, v0: f64, slope0: f64, p: f64, c: f64) -> Self {
        let mut t = ExpTail {
            delta,
            v0,
            slope0,
            p,
            c,
            nodes: vec![delta],
            cumulative: vec![0.0],
        };
        let tol = Tol {
            abs: 0.0,
            rel: 1e-13,
            max_intervals: 200,
        };
        let mut x = delta;
        let mut acc = 0.0;
        loop {
            let next = x * 1.08;
            acc += integrate(|e| t.kernel(e), x, next, tol).value;
            t.nodes.push(next);
            t.cumulative.push(acc);
            x = next;
            if (x.powf(p) - delta.powf(p)) / (c * p) > 745.0 {
                break;
            }
        }
        t
    }

    fn kernel(&self, eta: f64) -> f64 {
        (-(eta.powf(self.p) - self.delta.powf(self.p)) / (self.c * self.p)).exp()
    }

    /// `∫_δ^σ` of the kernel.
    pub fn antiderivative(&self, s: f64) -> f64 {
        if s <= self.delta {
            return 0.0;
        }
        let last = *self.nodes.last().unwrap();
        if s >= last {
            return *self.cumulative.last().unwrap();
        }
        let k = self.nodes.partition_point(|&x| x <= s) - 1;
        let tol = Tol {
            abs: 0.0,
            rel: 1e-13,
            max_intervals: 200,
        };
        self.cumulative[k] + integrate(|e| self.kernel(e), self.nodes[k], s, tol).value
    }

    pub fn limit(&self) -> f64 {
        self.v0 + self.slope0 * self.cumulative.last().unwrap()
    }
}

#[derive(Debug, Clone)]
pub enum PieceKind {
    /// `c1·σ − c2·σ^e`
    LinearMinusPower {
        c1: f64,
        c2: f64,
        e: f64,
    },
    /// `amp·tanh(rate·(σ − δ) + shift)`
    TanhShift {
        amp: f64,
        rate: f64,
        delta: f64,
        shift: f64,
    },
    /// `δ·ln(σ/δ) + c0`
    LogTail {
        delta: f64,
        c0: f64,
    },
    ExpIntegralTail(ExpTail),
}

impl PieceKind {
    pub fn name(&self) -> &'static str {
        match self {
            PieceKind::LinearMinusPower { .. } => "LINEAR_MINUS_POWER",
            PieceKind::TanhShift { .. } => "TANH_SHIFT",
            PieceKind::LogTail { .. } => "LOG_TAIL",
            PieceKind::ExpIntegralTail(_) => "EXP_INTEGRAL_TAIL",
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            PieceKind::LinearMinusPower { c1, c2, e } => c1 * s - c2 * s.powf(*e),
            PieceKind::TanhShift {
                amp,
                rate,
                delta,
                shift,
            } => amp * (rate * (s - delta) + shift).tanh(),
            PieceKind::LogTail { delta, c0 } => delta * (s / delta).ln() + c0,
            PieceKind::ExpIntegralTail(t) => t.v0 + t.slope0 * t.antiderivative(s),
        }
    }

    pub fn d1(&self, s: f64) -> f64 {
        match self {
            PieceKind::LinearMinusPower { c1, c2, e } => {
                if s == 0.0 {
                    *c1
                } else {
                    c1 - c2 * e * s.powf(e - 1.0)
                }
            }
            PieceKind::TanhShift {
                amp,
                rate,
                delta,
                shift,
            } => {
                let z = rate * (s - delta) + shift;
                let sech = 1.0 / z.cosh();
                amp * rate * sech * sech
            }
            PieceKind::LogTail { delta, .. } => delta / s,
            PieceKind::ExpIntegralTail(t) => t.slope0 * t.kernel(s.max(t.delta)),
        }
    }

    pub fn d2(&self, s: f64) -> f64 {
        match self {
            PieceKind::LinearMinusPower { c2, e, .. } => -c2 * e * (e - 1.0) * s.powf(e - 2.0),
            PieceKind::TanhShift {
                amp,
                rate,
                delta,
                shift,
            } => {
                let z = rate * (s - delta) + shift;
                let sech = 1.0 / z.cosh();
                -2.0 * amp * rate * rate * z.tanh() * sech * sech
            }
            PieceKind::LogTail { delta, .. } => -delta / (s * s),
            PieceKind::ExpIntegralTail(t) => -self.d1(s) * s.powf(t.p - 1.0) / t.c,
        }
    }

    pub fn ln_d1(&self, s: f64) -> f64 {
        match self {
            PieceKind::TanhShift {
                amp,
                rate,
                delta,
                shift,
            } => {
                let z = (rate * (s - delta) + shift).abs();
                // sech² z = 4e^{−2z}/(1+e^{−2z})²
                (amp * rate).ln() + 4f64.ln() - 2.0 * z - 2.0 * (-2.0 * z).exp().ln_1p()
            }
            PieceKind::ExpIntegralTail(t) => {
                let s = s.max(t.delta);
                t.slope0.ln() - (s.powf(t.p) - t.delta.powf(t.p)) / (t.c * t.p)
            }
            _ => self.d1(s).ln(),
        }
    }

    pub fn ln_neg_d2(&self, s: f64) -> f64 {
        match self {
            PieceKind::TanhShift {
                rate, delta, shift, ..
            } => {
                let z = rate * (s - delta) + shift;
                self.ln_d1(s) + (2.0 * rate * z.tanh()).ln()
            }
            PieceKind::ExpIntegralTail(t) => self.ln_d1(s) + (t.p - 1.0) * s.ln() - t.c.ln(),
            _ => (-self.d2(s)).ln(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Piece {
    pub start: f64,
    pub kind: PieceKind,
}

/// A closed-form modulus made of analytic pieces on `[start_i, start_{i+1})`.
#[derive(Debug, Clone)]
pub struct PiecewiseModulus {
    pieces: Vec<Piece>,
    pub delta: f64,
    pub holder: Option<(f64, f64, f64)>,
}

impl PiecewiseModulus {
    pub fn new(pieces: Vec<Piece>, delta: f64, holder: Option<(f64, f64, f64)>) -> Self {
        assert!(!pieces.is_empty() && pieces[0].start == 0.0);
        PiecewiseModulus {
            pieces,
            delta,
            holder,
        }
    }

    /// `amp·tanh(rate·σ)` on the whole half-line.
    pub fn tanh_profile(amp: f64, rate: f64) -> Self {
        Self::new(
            vec![Piece {
                start: 0.0,
                kind: PieceKind::TanhShift {
                    amp,
                    rate,
                    delta: 0.0,
                    shift: 0.0,
                },
            }],
            0.0,
            None,
        )
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Piece used for values and right derivatives (`start ≤ σ`).
    fn right_piece(&self, s: f64) -> &PieceKind {
        let k = self.pieces.partition_point(|p| p.start <= s);
        &self.pieces[k.saturating_sub(1)].kind
    }

    /// Piece used for left derivatives (`start < σ`).
    fn left_piece(&self, s: f64) -> &PieceKind {
        let k = self.pieces.partition_point(|p| p.start < s);
        &self.pieces[k.saturating_sub(1)].kind
    }

    pub fn sup(&self) -> f64 {
        match self.growth() {
            Growth::Bounded(v) => v,
            _ => f64::INFINITY,
        }
    }
}

impl Modulus for PiecewiseModulus {
    fn value(&self, s: f64) -> f64 {
        if s == f64::INFINITY {
            return self.sup();
        }
        self.right_piece(s).value(s)
    }

    fn d1(&self, s: f64) -> f64 {
        self.left_piece(s).d1(s)
    }

    fn d1_right(&self, s: f64) -> f64 {
        self.right_piece(s).d1(s)
    }

    fn d2(&self, s: f64) -> f64 {
        self.left_piece(s).d2(s)
    }

    fn ln_d1(&self, s: f64) -> f64 {
        self.left_piece(s).ln_d1(s)
    }

    fn ln_neg_d2(&self, s: f64) -> f64 {
        self.left_piece(s).ln_neg_d2(s)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.start).collect()
    }

    fn growth(&self) -> Growth {
        match &self.pieces.last().unwrap().kind {
            PieceKind::TanhShift { amp, .. } => Growth::Bounded(*amp),
            PieceKind::LogTail { .. } => Growth::Log,
            PieceKind::ExpIntegralTail(t) => Growth::Bounded(t.limit()),
            PieceKind::LinearMinusPower { e, .. } => Growth::Power(e.max(1.0)),
        }
    }

    fn curvature_at_zero(&self) -> Curvature {
        match &self.pieces[0].kind {
            PieceKind::LinearMinusPower { c2, e, .. } => Curvature {
                coef: -c2 * e * (e - 1.0),
                exponent: e - 2.0,
            },
            PieceKind::TanhShift {
                amp,
                rate,
                delta,
                shift,
            } => {
                let z = rate * (0.0 - delta) + shift;
                if z == 0.0 {
                    // amp·tanh(rate·σ) has ω″ ≈ −2·amp·rate³·σ
                    Curvature {
                        coef: -2.0 * amp * rate.powi(3),
                        exponent: 1.0,
                    }
                } else {
                    Curvature {
                        coef: self.pieces[0].kind.d2(0.0),
                        exponent: 0.0,
                    }
                }
            }
            PieceKind::LogTail { .. } | PieceKind::ExpIntegralTail(_) => Curvature {
                coef: f64::NAN,
                exponent: f64::NAN,
            },
        }
    }
}
