use super::{tent_second_difference, Curvature, Growth, Modulus};
use crate::error::{Error, Result};

/// `coef·σ^p`; covers the linear, quadratic and Hölder test moduli.
#[derive(Debug, Clone, Copy)]
pub struct Power {
    pub coef: f64,
    pub p: f64,
}

impl Power {
    pub fn new(coef: f64, p: f64) -> Self {
        Power { coef, p }
    }
}

impl Modulus for Power {
    fn value(&self, s: f64) -> f64 {
        if s == 0.0 {
            0.0
        } else {
            self.coef * s.powf(self.p)
        }
    }

    fn d1(&self, s: f64) -> f64 {
        if self.p == 1.0 {
            self.coef
        } else {
            self.coef * self.p * s.powf(self.p - 1.0)
        }
    }

    fn d2(&self, s: f64) -> f64 {
        if self.p == 1.0 {
            0.0
        } else {
            self.coef * self.p * (self.p - 1.0) * s.powf(self.p - 2.0)
        }
    }

    fn growth(&self) -> Growth {
        if self.coef == 0.0 || self.p == 0.0 {
            Growth::Bounded(self.coef)
        } else {
            Growth::Power(self.p)
        }
    }

    fn leading_exponent(&self) -> f64 {
        self.p
    }

    fn curvature_at_zero(&self) -> Curvature {
        Curvature {
            coef: self.coef * self.p * (self.p - 1.0),
            exponent: self.p - 2.0,
        }
    }

    fn second_difference(&self, x: f64, h: f64) -> f64 {
        if self.p == 1.0 {
            0.0
        } else if self.p == 2.0 {
            2.0 * self.coef * h * h
        } else {
            tent_second_difference(self, x, h)
        }
    }

    fn fold_difference(&self, xi: f64, eta: f64) -> f64 {
        if self.p == 1.0 {
            0.0
        } else if self.p == 2.0 {
            self.coef * (8.0 * xi * eta - 2.0 * xi * xi)
        } else {
            self.increment(2.0 * eta - xi, 2.0 * eta + xi) - 2.0 * self.value(xi)
        }
    }
}

/// Piecewise-linear modulus through `(x_i, y_i)` with `x_0 = y_0 = 0`,
/// constant beyond the last node.
#[derive(Debug, Clone)]
pub struct Tabulated {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Tabulated {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::Domain(
                "tabulation needs at least two matching nodes".into(),
            ));
        }
        if x[0] != 0.0 || y[0] != 0.0 {
            return Err(Error::Domain("tabulation must start at (0, 0)".into()));
        }
        for i in 1..x.len() {
            if !(x[i] > x[i - 1]) {
                return Err(Error::Domain(format!("nodes not increasing at index {i}")));
            }
            if y[i] < y[i - 1] || !y[i].is_finite() {
                return Err(Error::Domain(format!(
                    "values not nondecreasing at index {i}"
                )));
            }
        }
        Ok(Tabulated { x, y })
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    pub fn last_node(&self) -> f64 {
        *self.x.last().unwrap()
    }

    fn cell_left(&self, s: f64) -> Option<usize> {
        // cell (x_{k}, x_{k+1}] for left derivatives
        let k = self.x.partition_point(|&v| v < s);
        if k == 0 {
            Some(0)
        } else if k >= self.x.len() {
            None
        } else {
            Some(k - 1)
        }
    }

    fn slope(&self, k: usize) -> f64 {
        (self.y[k + 1] - self.y[k]) / (self.x[k + 1] - self.x[k])
    }
}

impl Modulus for Tabulated {
    fn value(&self, s: f64) -> f64 {
        if s >= self.last_node() {
            return *self.y.last().unwrap();
        }
        let k = self.x.partition_point(|&v| v <= s) - 1;
        self.y[k] + self.slope(k) * (s - self.x[k])
    }

    fn d1(&self, s: f64) -> f64 {
        match self.cell_left(s) {
            Some(k) => self.slope(k),
            None => 0.0,
        }
    }

    fn d1_right(&self, s: f64) -> f64 {
        if s >= self.last_node() {
            return 0.0;
        }
        let k = self.x.partition_point(|&v| v <= s) - 1;
        self.slope(k)
    }

    fn d2(&self, _s: f64) -> f64 {
        0.0
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.x[1..].to_vec()
    }

    fn growth(&self) -> Growth {
        Growth::Bounded(*self.y.last().unwrap())
    }

    fn curvature_at_zero(&self) -> Curvature {
        Curvature {
            coef: 0.0,
            exponent: 0.0,
        }
    }

    fn increment(&self, a: f64, b: f64) -> f64 {
        self.value(b) - self.value(a)
    }

    fn second_difference(&self, x: f64, h: f64) -> f64 {
        self.value(x + h) + self.value(x - h) - 2.0 * self.value(x)
    }
}

/// `amp·ω(rate·σ)`.
#[derive(Debug, Clone, Copy)]
pub struct Scaled<M> {
    pub inner: M,
    pub amp: f64,
    pub rate: f64,
}

impl<M: Modulus> Scaled<M> {
    pub fn new(inner: M, amp: f64, rate: f64) -> Self {
        Scaled { inner, amp, rate }
    }
}

impl<M: Modulus> Modulus for Scaled<M> {
    fn value(&self, s: f64) -> f64 {
        self.amp * self.inner.value(self.rate * s)
    }
    fn d1(&self, s: f64) -> f64 {
        self.amp * self.rate * self.inner.d1(self.rate * s)
    }
    fn d1_right(&self, s: f64) -> f64 {
        self.amp * self.rate * self.inner.d1_right(self.rate * s)
    }
    fn d2(&self, s: f64) -> f64 {
        self.amp * self.rate * self.rate * self.inner.d2(self.rate * s)
    }
    fn ln_d1(&self, s: f64) -> f64 {
        self.amp.ln() + self.rate.ln() + self.inner.ln_d1(self.rate * s)
    }
    fn ln_neg_d2(&self, s: f64) -> f64 {
        self.amp.ln() + 2.0 * self.rate.ln() + self.inner.ln_neg_d2(self.rate * s)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.inner
            .breakpoints()
            .into_iter()
            .map(|b| b / self.rate)
            .collect()
    }
    fn growth(&self) -> Growth {
        match self.inner.growth() {
            Growth::Bounded(v) => Growth::Bounded(self.amp * v),
            g => g,
        }
    }
    fn leading_exponent(&self) -> f64 {
        self.inner.leading_exponent()
    }
    fn curvature_at_zero(&self) -> Curvature {
        let c = self.inner.curvature_at_zero();
        Curvature {
            coef: c.coef * self.amp * self.rate.powf(2.0 + c.exponent),
            exponent: c.exponent,
        }
    }
    fn increment(&self, a: f64, b: f64) -> f64 {
        self.amp * self.inner.increment(self.rate * a, self.rate * b)
    }
    fn second_difference(&self, x: f64, h: f64) -> f64 {
        self.amp * self.inner.second_difference(self.rate * x, self.rate * h)
    }
    fn fold_difference(&self, xi: f64, eta: f64) -> f64 {
        self.amp * self.inner.fold_difference(self.rate * xi, self.rate * eta)
    }
}
