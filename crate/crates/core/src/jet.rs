//! Truncated Taylor jets in time.
//!
//! A jet of order `J` carries the normalized coefficients `f⁽ᵏ⁾(t)/k!` for
//! `k = 0..=J`. Products are Cauchy products truncated to the shorter operand,
//! which makes repeated time derivatives of products and powers of analytic
//! signals exact up to roundoff.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeJet {
    taylor: Vec<f64>,
}

impl TimeJet {
    /// Jet of a constant signal.
    pub fn constant(value: f64, order: usize) -> Self {
        let mut taylor = vec![0.0; order + 1];
        taylor[0] = value;
        Self { taylor }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(0.0, order)
    }

    /// Builds a jet from derivative values `f, f', f'', ...`.
    pub fn from_derivatives(derivs: &[f64]) -> Self {
        assert!(!derivs.is_empty(), "a jet needs at least the value");
        let mut fact = 1.0;
        let taylor = derivs
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                if k > 0 {
                    fact *= k as f64;
                }
                d / fact
            })
            .collect();
        Self { taylor }
    }

    pub fn from_taylor(taylor: Vec<f64>) -> Self {
        assert!(!taylor.is_empty(), "a jet needs at least the value");
        Self { taylor }
    }

    pub fn order(&self) -> usize {
        self.taylor.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.taylor[0]
    }

    pub fn taylor(&self) -> &[f64] {
        &self.taylor
    }

    /// `k`-th time derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        self.taylor[k] * factorial(k)
    }

    /// All derivative values `f, f', ..., f⁽ᴶ⁾`.
    pub fn derivatives(&self) -> Vec<f64> {
        (0..self.taylor.len()).map(|k| self.derivative(k)).collect()
    }

    /// Time derivative; the result is one order shorter.
    pub fn differentiate(&self) -> Self {
        if self.taylor.len() == 1 {
            return Self::zero(0);
        }
        let taylor = self.taylor[1..].iter().enumerate().map(|(k, &c)| c * (k + 1) as f64).collect();
        Self { taylor }
    }

    pub fn truncate(&self, order: usize) -> Self {
        let len = (order + 1).min(self.taylor.len());
        Self { taylor: self.taylor[..len].to_vec() }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { taylor: self.taylor.iter().map(|c| c * factor).collect() }
    }

    /// Integer power by repeated squaring. `powi(0)` is the unit jet.
    pub fn powi(&self, mut exp: u32) -> Self {
        let mut result = Self::constant(1.0, self.order());
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                result = &result * &base;
            }
            exp >>= 1;
            if exp > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn is_finite(&self) -> bool {
        self.taylor.iter().all(|c| c.is_finite())
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

impl Mul for &TimeJet {
    type Output = TimeJet;

    fn mul(self, rhs: &TimeJet) -> TimeJet {
        let len = self.taylor.len().min(rhs.taylor.len());
        let taylor = (0..len).map(|k| (0..=k).map(|j| self.taylor[j] * rhs.taylor[k - j]).sum()).collect();
        TimeJet { taylor }
    }
}

impl Add for &TimeJet {
    type Output = TimeJet;

    fn add(self, rhs: &TimeJet) -> TimeJet {
        let len = self.taylor.len().min(rhs.taylor.len());
        TimeJet { taylor: (0..len).map(|k| self.taylor[k] + rhs.taylor[k]).collect() }
    }
}

impl Sub for &TimeJet {
    type Output = TimeJet;

    fn sub(self, rhs: &TimeJet) -> TimeJet {
        let len = self.taylor.len().min(rhs.taylor.len());
        TimeJet { taylor: (0..len).map(|k| self.taylor[k] - rhs.taylor[k]).collect() }
    }
}

impl Neg for &TimeJet {
    type Output = TimeJet;

    fn neg(self) -> TimeJet {
        self.scale(-1.0)
    }
}
