//! Potential and mass profiles for natural Lagrangian systems.

use std::fmt;
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Step used for finite-difference derivatives of closure-backed profiles.
const FD_STEP: f64 = 1e-5;

/// A potential energy `V(q)`.
///
/// Polynomials cover the named catalog (free, harmonic, quartic) exactly,
/// including analytic derivatives. Closures are accepted for anything else
/// and are differentiated numerically.
#[derive(Clone)]
pub enum Potential {
    /// `Σ_k coeffs[k] q^k`
    Polynomial(Vec<f64>),
    Custom(ScalarFn),
}

impl Potential {
    pub fn free() -> Self {
        Potential::Polynomial(vec![0.0])
    }

    /// `k q² / 2`
    pub fn harmonic(k: f64) -> Self {
        Potential::Polynomial(vec![0.0, 0.0, 0.5 * k])
    }

    /// `g q⁴`
    pub fn quartic(g: f64) -> Self {
        Potential::Polynomial(vec![0.0, 0.0, 0.0, 0.0, g])
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Potential::Polynomial(coeffs)
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Potential::Custom(Arc::new(f))
    }

    pub fn value(&self, q: f64) -> f64 {
        match self {
            Potential::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * q + ck),
            Potential::Custom(f) => f(q),
        }
    }

    pub fn derivative(&self, q: f64) -> f64 {
        match self {
            Potential::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * q + k as f64 * ck),
            Potential::Custom(f) => (f(q + FD_STEP) - f(q - FD_STEP)) / (2.0 * FD_STEP),
        }
    }

    pub fn second_derivative(&self, q: f64) -> f64 {
        match self {
            Potential::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * q + (k * (k - 1)) as f64 * ck),
            Potential::Custom(f) => {
                (f(q + FD_STEP) - 2.0 * f(q) + f(q - FD_STEP)) / (FD_STEP * FD_STEP)
            }
        }
    }

    /// The same potential plus a constant offset.
    pub fn shifted(&self, s: f64) -> Self {
        match self {
            Potential::Polynomial(c) => {
                let mut c = c.clone();
                if c.is_empty() {
                    c.push(0.0);
                }
                c[0] += s;
                Potential::Polynomial(c)
            }
            Potential::Custom(f) => {
                let f = Arc::clone(f);
                Potential::Custom(Arc::new(move |q| f(q) + s))
            }
        }
    }

    pub fn sample(&self, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|&q| self.value(q)).collect()
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Polynomial(c) => f.debug_tuple("Polynomial").field(c).finish(),
            Potential::Custom(_) => f.write_str("Custom(<fn>)"),
        }
    }
}

/// Position-dependent mass `m(q)` (the scalar mass "matrix" of a single
/// degree of freedom).
#[derive(Clone)]
pub enum MassProfile {
    Constant(f64),
    Custom(ScalarFn),
}

impl MassProfile {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        MassProfile::Custom(Arc::new(f))
    }

    pub fn value(&self, q: f64) -> f64 {
        match self {
            MassProfile::Constant(m) => *m,
            MassProfile::Custom(f) => f(q),
        }
    }

    pub fn derivative(&self, q: f64) -> f64 {
        match self {
            MassProfile::Constant(_) => 0.0,
            MassProfile::Custom(f) => (f(q + FD_STEP) - f(q - FD_STEP)) / (2.0 * FD_STEP),
        }
    }
}

impl fmt::Debug for MassProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MassProfile::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            MassProfile::Custom(_) => f.write_str("Custom(<fn>)"),
        }
    }
}
