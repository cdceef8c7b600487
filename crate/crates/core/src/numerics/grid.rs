use serde::{Deserialize, Serialize};

use crate::error::{Result, VarqError};

/// Uniform one-dimensional grid with `n` nodes including both end points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    q_min: f64,
    q_max: f64,
    n: usize,
    h: f64,
}

pub fn build_grid(q_min: f64, q_max: f64, n: usize) -> Result<Grid1D> {
    Grid1D::new(q_min, q_max, n)
}

impl Grid1D {
    pub fn new(q_min: f64, q_max: f64, n: usize) -> Result<Self> {
        if !q_min.is_finite() || !q_max.is_finite() {
            return Err(VarqError::InvalidArgument(format!(
                "grid bounds must be finite, got [{q_min}, {q_max}]"
            )));
        }
        if q_min >= q_max {
            return Err(VarqError::InvalidArgument(format!(
                "grid needs q_min < q_max, got [{q_min}, {q_max}]"
            )));
        }
        if n < 3 {
            return Err(VarqError::InvalidArgument(format!("grid needs at least 3 nodes, got {n}")));
        }
        let h = (q_max - q_min) / (n - 1) as f64;
        Ok(Grid1D { q_min, q_max, n, h })
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Midpoint between nodes `i` and `i + 1`.
    #[inline]
    pub fn face(&self, i: usize) -> f64 {
        self.q_min + (i as f64 + 0.5) * self.h
    }

    /// Grid quadrature `h Σ f_i`, the rule used for every normalization.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.h * values.iter().sum::<f64>()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|i| f(self.node(i))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_nodes_on_unit_interval() {
        let g = build_grid(0.0, 1.0, 3).unwrap();
        assert_eq!(g.nodes(), vec![0.0, 0.5, 1.0]);
        assert_eq!(g.spacing(), 0.5);
    }

    #[test]
    fn symmetric_fine_grid() {
        let g = build_grid(-10.0, 10.0, 2001).unwrap();
        assert!((g.spacing() - 0.01).abs() < 1e-15);
        assert_eq!(g.node(1000), 0.0);
    }

    #[test]
    fn degenerate_and_bad_inputs() {
        assert!(matches!(build_grid(1.0, 1.0, 5), Err(VarqError::InvalidArgument(_))));
        assert!(matches!(build_grid(0.0, 1.0, 2), Err(VarqError::InvalidArgument(_))));
        assert!(matches!(build_grid(f64::NAN, 1.0, 5), Err(VarqError::InvalidArgument(_))));
        assert!(matches!(build_grid(0.0, f64::INFINITY, 5), Err(VarqError::InvalidArgument(_))));
    }

    #[test]
    fn nodes_are_exact_multiples() {
        let g = build_grid(-3.0, 7.0, 1001).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.node(i), -3.0 + i as f64 * g.spacing());
        }
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    }
}
