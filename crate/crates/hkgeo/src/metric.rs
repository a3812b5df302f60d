//! Metric fields: symmetric coordinate components sampled on a chart,
//! stored once per (i <= j) pair.

use crate::chart::GridChart;
use crate::error::{Error, Result};
use crate::linalg::{positive_definite, Mat4};

#[derive(Debug, Clone)]
pub struct MetricField {
    pub chart: GridChart,
    /// Components g_ij for i <= j in lexicographic pair order.
    pub comps: Vec<Vec<f64>>,
}

/// Pair order: (0,0),(0,1),...,(0,d-1),(1,1),...
pub fn pair_position(dim: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    let mut pos = 0;
    for r in 0..a {
        pos += dim - r;
    }
    pos + (b - a)
}

pub fn n_pairs(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

impl MetricField {
    pub fn euclidean(chart: &GridChart) -> Self {
        let dim = chart.dim();
        let mut comps = vec![vec![0.0; chart.len()]; n_pairs(dim)];
        for i in 0..dim {
            let p = pair_position(dim, i, i);
            for v in comps[p].iter_mut() {
                *v = 1.0;
            }
        }
        MetricField { chart: chart.clone(), comps }
    }

    /// Sample from a pointwise matrix evaluator. Verifies symmetry and
    /// positive definiteness at every sample.
    pub fn from_fn(chart: &GridChart, f: impl Fn(&[f64]) -> Mat4) -> Result<Self> {
        let dim = chart.dim();
        let mut comps = vec![vec![0.0; chart.len()]; n_pairs(dim)];
        for flat in 0..chart.len() {
            let m = chart.multi_index(flat);
            let x = chart.coord(&m[..dim]);
            let g = f(&x[..dim]);
            for i in 0..dim {
                for j in i..dim {
                    debug_assert!((g[i][j] - g[j][i]).abs() < 1e-12, "metric must be symmetric");
                    comps[pair_position(dim, i, j)][flat] = 0.5 * (g[i][j] + g[j][i]);
                }
            }
        }
        Ok(MetricField { chart: chart.clone(), comps })
    }

    pub fn matrix_at(&self, flat: usize) -> Mat4 {
        let dim = self.chart.dim();
        let mut g = [[0.0; 4]; 4];
        for i in 0..dim {
            for j in 0..dim {
                g[i][j] = self.comps[pair_position(dim, i, j)][flat];
            }
        }
        g
    }

    /// Check positive definiteness at every sample via leading principal
    /// minors; returns the first offending sample.
    pub fn check_positive_definite(&self) -> Result<()> {
        let dim = self.chart.dim();
        for flat in 0..self.chart.len() {
            let g = self.matrix_at(flat);
            if !positive_definite(&g, dim) {
                return Err(Error::DegenerateMetric { index: flat });
            }
        }
        Ok(())
    }

    pub fn set(&mut self, flat: usize, i: usize, j: usize, v: f64) {
        let dim = self.chart.dim();
        self.comps[pair_position(dim, i, j)][flat] = v;
    }
}
