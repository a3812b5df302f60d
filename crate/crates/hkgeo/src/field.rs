//! Scalar sample arrays over a [`GridChart`] and the shared difference
//! stencils: second-order central differences in the interior, second-order
//! one-sided stencils at non-periodic boundaries.

use crate::chart::{GridChart, MAX_DIM};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ScalarField {
    pub chart: GridChart,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(chart: &GridChart) -> Self {
        ScalarField { chart: chart.clone(), data: vec![0.0; chart.len()] }
    }

    pub fn constant(chart: &GridChart, value: f64) -> Self {
        ScalarField { chart: chart.clone(), data: vec![value; chart.len()] }
    }

    pub fn from_fn(chart: &GridChart, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut data = vec![0.0; chart.len()];
        for (flat, v) in data.iter_mut().enumerate() {
            let m = chart.multi_index(flat);
            let x = chart.coord(&m[..chart.dim()]);
            *v = f(&x[..chart.dim()]);
        }
        ScalarField { chart: chart.clone(), data }
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        self.data[self.chart.index(idx)]
    }

    pub fn validate_finite(&self) -> Result<()> {
        for (i, v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
        }
        Ok(())
    }

    /// First derivative along `axis` at `idx`.
    pub fn d1(&self, idx: &[usize], axis: usize) -> f64 {
        d1_of(&self.chart, &self.data, idx, axis)
    }

    /// Second derivative along `axis` at `idx`.
    pub fn d2(&self, idx: &[usize], axis: usize) -> f64 {
        d2_of(&self.chart, &self.data, idx, axis)
    }

    pub fn max_abs_interior(&self, margin: usize) -> f64 {
        let mut m = 0.0f64;
        for flat in 0..self.chart.len() {
            let idx = self.chart.multi_index(flat);
            if self.chart.is_interior(&idx[..self.chart.dim()], margin) {
                m = m.max(self.data[flat].abs());
            }
        }
        m
    }
}

fn value(chart: &GridChart, data: &[f64], idx: &[usize]) -> f64 {
    data[chart.index(idx)]
}

/// Second-order first derivative of a raw sample array.
pub fn d1_of(chart: &GridChart, data: &[f64], idx: &[usize], axis: usize) -> f64 {
    let h = chart.spacing(axis);
    let plus = chart.shift(idx, axis, 1);
    let minus = chart.shift(idx, axis, -1);
    match (minus, plus) {
        (Some(m), Some(p)) => (value(chart, data, &p[..chart.dim()]) - value(chart, data, &m[..chart.dim()])) / (2.0 * h),
        (None, Some(_)) => {
            // forward one-sided: (-3 f0 + 4 f1 - f2) / 2h
            let f0 = value(chart, data, idx);
            let f1 = value(chart, data, &chart.shift(idx, axis, 1).unwrap()[..chart.dim()]);
            let f2 = value(chart, data, &chart.shift(idx, axis, 2).unwrap()[..chart.dim()]);
            (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h)
        }
        (Some(_), None) => {
            let f0 = value(chart, data, idx);
            let f1 = value(chart, data, &chart.shift(idx, axis, -1).unwrap()[..chart.dim()]);
            let f2 = value(chart, data, &chart.shift(idx, axis, -2).unwrap()[..chart.dim()]);
            (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * h)
        }
        (None, None) => unreachable!("extent >= 4"),
    }
}

/// Second-order second derivative of a raw sample array.
pub fn d2_of(chart: &GridChart, data: &[f64], idx: &[usize], axis: usize) -> f64 {
    let h = chart.spacing(axis);
    let plus = chart.shift(idx, axis, 1);
    let minus = chart.shift(idx, axis, -1);
    match (minus, plus) {
        (Some(m), Some(p)) => {
            let f0 = value(chart, data, idx);
            (value(chart, data, &p[..chart.dim()]) - 2.0 * f0 + value(chart, data, &m[..chart.dim()])) / (h * h)
        }
        (None, Some(_)) => {
            // forward one-sided: (2 f0 - 5 f1 + 4 f2 - f3) / h^2
            let f0 = value(chart, data, idx);
            let f1 = value(chart, data, &chart.shift(idx, axis, 1).unwrap()[..chart.dim()]);
            let f2 = value(chart, data, &chart.shift(idx, axis, 2).unwrap()[..chart.dim()]);
            let f3 = value(chart, data, &chart.shift(idx, axis, 3).unwrap()[..chart.dim()]);
            (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / (h * h)
        }
        (Some(_), None) => {
            let f0 = value(chart, data, idx);
            let f1 = value(chart, data, &chart.shift(idx, axis, -1).unwrap()[..chart.dim()]);
            let f2 = value(chart, data, &chart.shift(idx, axis, -2).unwrap()[..chart.dim()]);
            let f3 = value(chart, data, &chart.shift(idx, axis, -3).unwrap()[..chart.dim()]);
            (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / (h * h)
        }
        (None, None) => unreachable!("extent >= 4"),
    }
}

/// Iterate all flat indices whose multi-index is interior with `margin`.
pub fn interior_indices(chart: &GridChart, margin: usize) -> impl Iterator<Item = usize> + '_ {
    (0..chart.len()).filter(move |&flat| {
        let m = chart.multi_index(flat);
        chart.is_interior(&m[..chart.dim()], margin)
    })
}

/// Scratch multi-index buffer type used by stencil loops.
pub type Idx = [usize; MAX_DIM];
