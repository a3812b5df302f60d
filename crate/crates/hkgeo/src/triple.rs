//! Definite triples: three closed 2-forms on a 4-chart with a pointwise
//! positive definite Gram matrix, the normalized Gram `Q_norm`, the induced
//! Riemannian metric, and the hyperkahler residual `max |Q_norm - Id|`.

use crate::chart::GridChart;
use crate::error::{Error, Result};
use crate::field::interior_indices;
use crate::forms::{exterior_derivative, hodge_star, FormField, WedgeKernel};
use crate::linalg::{
    inverse_n, mat3_det, mat3_frobenius, mat3_sub, sym3_eigen, sym3_inv_sqrt, Mat3, Mat4, MAT3_ID,
};
use crate::metric::MetricField;

#[derive(Debug, Clone)]
pub struct DefiniteTriple {
    pub chart: GridChart,
    pub omega: [FormField; 3],
    /// Coefficient of the reference volume form against `dx0^dx1^dx2^dx3`.
    pub vol0: Vec<f64>,
}

/// Pointwise Gram data of a triple.
pub struct GramMatrix {
    pub chart: GridChart,
    /// Q against the reference volume form, 6 sample arrays in
    /// (00,01,02,11,12,22) order.
    pub q: Vec<Vec<f64>>,
    /// det(Q)^(-1/3) Q, same layout.
    pub qnorm: Vec<Vec<f64>>,
    /// (det Q)^(1/3) * vol0 coefficient: the volume density of `g_omega`.
    pub vol_g: Vec<f64>,
}

pub const SYM3_PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

pub fn sym3_at(store: &[Vec<f64>], flat: usize) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for (p, &(i, j)) in SYM3_PAIRS.iter().enumerate() {
        m[i][j] = store[p][flat];
        m[j][i] = store[p][flat];
    }
    m
}

pub fn sym3_set(store: &mut [Vec<f64>], flat: usize, m: &Mat3) {
    for (p, &(i, j)) in SYM3_PAIRS.iter().enumerate() {
        store[p][flat] = 0.5 * (m[i][j] + m[j][i]);
    }
}

/// Pointwise Gram matrix of three 2-form component vectors against a volume
/// coefficient: `omega_a ^ omega_b = 2 Q_ab vol`.
pub fn gram_point_with(kernel: &WedgeKernel, vals: [&[f64]; 3], vol_coeff: f64) -> Mat3 {
    let mut q = [[0.0; 3]; 3];
    let mut w = [0.0f64; 1];
    for a in 0..3 {
        for b in a..3 {
            kernel.apply(vals[a], vals[b], &mut w);
            // top form on a 4-chart has a single component
            let v = w[0] / (2.0 * vol_coeff);
            q[a][b] = v;
            q[b][a] = v;
        }
    }
    q
}

pub fn gram_point(vals: [&[f64]; 3], vol_coeff: f64) -> Mat3 {
    gram_point_with(&WedgeKernel::new(4, 2, 2), vals, vol_coeff)
}

impl DefiniteTriple {
    pub fn new(omega: [FormField; 3], vol0: Vec<f64>) -> Result<Self> {
        let chart = omega[0].chart.clone();
        if chart.dim() != 4 {
            return Err(Error::InvalidChart("definite triples live on 4D charts".into()));
        }
        for w in &omega {
            if !w.chart.same_as(&chart) || w.degree != 2 {
                return Err(Error::ChartMismatch("triple forms must be 2-forms on one chart"));
            }
            w.validate_finite()?;
        }
        if vol0.len() != chart.len() {
            return Err(Error::ChartMismatch("vol0 length mismatch"));
        }
        Ok(DefiniteTriple { chart, omega, vol0 })
    }

    /// The standard flat triple `dx01 + dx23, dx02 + dx31, dx03 + dx12` on a
    /// chart with Euclidean reference volume.
    pub fn flat(chart: &GridChart) -> Result<Self> {
        // 2-form tuple order on dim 4: (01),(02),(03),(12),(13),(23)
        let w1 = FormField::from_fn(chart, 2, |_| vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0])?;
        let w2 = FormField::from_fn(chart, 2, |_| vec![0.0, 1.0, 0.0, 0.0, -1.0, 0.0])?;
        let w3 = FormField::from_fn(chart, 2, |_| vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0])?;
        DefiniteTriple::new([w1, w2, w3], vec![1.0; chart.len()])
    }

    /// Gram matrix field; errors with the first sample where Q fails to be
    /// positive definite.
    pub fn gram(&self) -> Result<GramMatrix> {
        let len = self.chart.len();
        let kernel = WedgeKernel::new(4, 2, 2);
        let mut q = vec![vec![0.0; len]; 6];
        let mut qnorm = vec![vec![0.0; len]; 6];
        let mut vol_g = vec![0.0; len];
        for flat in 0..len {
            let vals = [
                self.omega[0].values_at(flat),
                self.omega[1].values_at(flat),
                self.omega[2].values_at(flat),
            ];
            let qm = gram_point_with(&kernel, [&vals[0], &vals[1], &vals[2]], self.vol0[flat]);
            let (eigs, _) = sym3_eigen(&qm);
            if eigs[0] <= 0.0 {
                return Err(Error::NotDefinite { index: flat });
            }
            let det = mat3_det(&qm);
            let scale = det.powf(-1.0 / 3.0);
            let mut qn = qm;
            for row in qn.iter_mut() {
                for v in row.iter_mut() {
                    *v *= scale;
                }
            }
            sym3_set(&mut q, flat, &qm);
            sym3_set(&mut qnorm, flat, &qn);
            vol_g[flat] = det.powf(1.0 / 3.0) * self.vol0[flat];
        }
        Ok(GramMatrix { chart: self.chart.clone(), q, qnorm, vol_g })
    }

    /// `max |Q_norm - Id|` (Frobenius) over all samples.
    pub fn hk_residual(&self) -> Result<f64> {
        let gram = self.gram()?;
        let mut worst = 0.0f64;
        for flat in 0..self.chart.len() {
            let qn = sym3_at(&gram.qnorm, flat);
            worst = worst.max(mat3_frobenius(&mat3_sub(&qn, &MAT3_ID)));
        }
        Ok(worst)
    }

    /// Maximum interior closedness residual `max |d omega_a|`.
    pub fn closedness_residual(&self, margin: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for w in &self.omega {
            let dw = exterior_derivative(w)?;
            worst = worst.max(dw.max_abs_interior(margin));
        }
        Ok(worst)
    }

    /// The Riemannian metric determined by the triple: each `omega_a` is
    /// self-dual and `dvol_g = (det Q)^{1/3} dvol_0`.
    ///
    /// Pointwise construction: normalize the triple by `Q_norm^{-1/2}` so its
    /// Gram matrix is the identity, view 2-forms as maps `TM -> T*M`, and
    /// form `M = -b1 b2^{-1} b3`; for a pointwise-orthonormal triple this is
    /// the metric up to a positive scale fixed by the volume normalization.
    pub fn metric(&self) -> Result<MetricField> {
        let gram = self.gram()?;
        self.metric_with_gram(&gram)
    }

    pub fn metric_with_gram(&self, gram: &GramMatrix) -> Result<MetricField> {
        let chart = &self.chart;
        let len = chart.len();
        let mut g = MetricField::euclidean(chart);
        for flat in 0..len {
            let qn = sym3_at(&gram.qnorm, flat);
            let s = sym3_inv_sqrt(&qn).map_err(|_| Error::NotDefinite { index: flat })?;
            let vals = [
                self.omega[0].values_at(flat),
                self.omega[1].values_at(flat),
                self.omega[2].values_at(flat),
            ];
            // b_a = sum_b s[a][b] omega_b as antisymmetric 4x4 matrices
            let mut b = [[[0.0f64; 4]; 4]; 3];
            for a in 0..3 {
                let mut comp = [0.0f64; 6];
                for bidx in 0..3 {
                    for c in 0..6 {
                        comp[c] += s[a][bidx] * vals[bidx][c];
                    }
                }
                // tuple order (01),(02),(03),(12),(13),(23)
                let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
                for (c, &(i, j)) in pairs.iter().enumerate() {
                    b[a][i][j] = comp[c];
                    b[a][j][i] = -comp[c];
                }
            }
            let (b2inv, _) = inverse_n(&b[1], 4).map_err(|_| Error::NotDefinite { index: flat })?;
            // m = -b1 * b2inv * b3
            let mut tmp = [[0.0f64; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    for (k, b2k) in b2inv.iter().enumerate() {
                        tmp[i][j] += b[0][i][k] * b2k[j];
                    }
                }
            }
            let mut m: Mat4 = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    for (k, b3k) in b[2].iter().enumerate() {
                        m[i][j] -= tmp[i][k] * b3k[j];
                    }
                }
            }
            // symmetrize and fix overall sign and scale
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let v = 0.5 * (m[i][j] + m[j][i]);
                    m[i][j] = v;
                    m[j][i] = v;
                }
            }
            let tr = m[0][0] + m[1][1] + m[2][2] + m[3][3];
            if tr < 0.0 {
                for row in m.iter_mut() {
                    for v in row.iter_mut() {
                        *v = -*v;
                    }
                }
            }
            let det = crate::linalg::det_n(&m, 4);
            if det <= 0.0 {
                return Err(Error::NotDefinite { index: flat });
            }
            // target sqrt(det g) = vol_g coefficient
            let scale = (gram.vol_g[flat] * gram.vol_g[flat] / det).powf(0.25);
            for i in 0..4 {
                for j in i..4 {
                    g.set(flat, i, j, m[i][j] * scale);
                }
            }
        }
        g.check_positive_definite()?;
        Ok(g)
    }

    /// `*_{g_omega} omega_a = omega_a` consistency: the largest deviation
    /// over samples and triple members.
    pub fn self_duality_residual(&self, g: &MetricField) -> Result<f64> {
        let mut worst = 0.0f64;
        for w in &self.omega {
            let s = hodge_star(w, g, 1.0)?;
            for c in 0..w.components.len() {
                for flat in 0..self.chart.len() {
                    worst = worst.max((s.components[c][flat] - w.components[c][flat]).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Max interior residual plus location report used by validation paths.
pub fn max_interior(chart: &GridChart, data: &[f64], margin: usize) -> f64 {
    let mut m = 0.0f64;
    for flat in interior_indices(chart, margin) {
        m = m.max(data[flat].abs());
    }
    m
}
