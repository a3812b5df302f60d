//! Differential forms on grid charts: exterior derivative, Hodge star,
//! codifferential, wedge products, and (anti-)self-dual projections.
//!
//! Components are stored per strictly increasing index tuple in lexicographic
//! order; no dense antisymmetric tensors are ever materialized.

use crate::chart::GridChart;
use crate::error::{Error, Result};
use crate::field::{d1_of, interior_indices};
use crate::linalg::{inverse_n, positive_definite, Mat4};
use crate::metric::MetricField;

/// Strictly increasing index tuples of length `k` out of `0..n`,
/// lexicographic.
pub fn tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Sign of the permutation sorting `perm` (must have distinct entries),
/// or 0 if entries repeat.
pub fn perm_sign(perm: &[usize]) -> i32 {
    let mut sign = 1;
    for i in 0..perm.len() {
        for j in (i + 1)..perm.len() {
            if perm[i] == perm[j] {
                return 0;
            }
            if perm[i] > perm[j] {
                sign = -sign;
            }
        }
    }
    sign
}

#[derive(Debug, Clone)]
pub struct FormField {
    pub chart: GridChart,
    pub degree: usize,
    /// One sample array per ascending index tuple, in `tuples(dim, degree)`
    /// order.
    pub components: Vec<Vec<f64>>,
}

impl FormField {
    pub fn zeros(chart: &GridChart, degree: usize) -> Self {
        let n = binomial(chart.dim(), degree);
        FormField {
            chart: chart.clone(),
            degree,
            components: vec![vec![0.0; chart.len()]; n],
        }
    }

    /// Build from a per-sample evaluator giving all components at a point,
    /// in `tuples(dim, degree)` order.
    pub fn from_fn(chart: &GridChart, degree: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let ncomp = binomial(chart.dim(), degree);
        let mut comps = vec![vec![0.0; chart.len()]; ncomp];
        for flat in 0..chart.len() {
            let m = chart.multi_index(flat);
            let x = chart.coord(&m[..chart.dim()]);
            let vals = f(&x[..chart.dim()]);
            assert_eq!(vals.len(), ncomp, "component count mismatch");
            for (c, v) in vals.iter().enumerate() {
                comps[c][flat] = *v;
            }
        }
        let out = FormField { chart: chart.clone(), degree, components: comps };
        out.validate_finite()?;
        Ok(out)
    }

    pub fn scalar(chart: &GridChart, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        FormField::from_fn(chart, 0, |x| vec![f(x)])
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn validate_finite(&self) -> Result<()> {
        for comp in &self.components {
            for (i, v) in comp.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { index: i });
                }
            }
        }
        Ok(())
    }

    /// Component position of an ascending tuple.
    pub fn comp_position(&self, tuple: &[usize]) -> Option<usize> {
        tuples(self.chart.dim(), self.degree).iter().position(|t| t == tuple)
    }

    /// Pointwise linear combination `self * a + other * b`.
    pub fn lin_comb(&self, a: f64, other: &FormField, b: f64) -> Result<FormField> {
        if !self.chart.same_as(&other.chart) || self.degree != other.degree {
            return Err(Error::ChartMismatch("lin_comb requires matching chart and degree"));
        }
        let mut out = self.clone();
        for (c, comp) in out.components.iter_mut().enumerate() {
            for (i, v) in comp.iter_mut().enumerate() {
                *v = *v * a + other.components[c][i] * b;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> FormField {
        let mut out = self.clone();
        for comp in out.components.iter_mut() {
            for v in comp.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    /// Multiply pointwise by a scalar sample array.
    pub fn scale_by_samples(&self, s: &[f64]) -> FormField {
        let mut out = self.clone();
        for comp in out.components.iter_mut() {
            for (i, v) in comp.iter_mut().enumerate() {
                *v *= s[i];
            }
        }
        out
    }

    pub fn max_abs_interior(&self, margin: usize) -> f64 {
        let mut m = 0.0f64;
        for flat in interior_indices(&self.chart, margin) {
            for comp in &self.components {
                m = m.max(comp[flat].abs());
            }
        }
        m
    }

    /// Values of all components at a flat sample index.
    pub fn values_at(&self, flat: usize) -> Vec<f64> {
        self.components.iter().map(|c| c[flat]).collect()
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Exterior derivative by second-order differences.
///
/// `(df)_J = sum_p (-1)^p d_{j_p} f_{J \ j_p}` over ascending `J`.
pub fn exterior_derivative(f: &FormField) -> Result<FormField> {
    let n = f.chart.dim();
    let k = f.degree;
    if k >= n {
        return Err(Error::DegreeOverflow);
    }
    let in_tuples = tuples(n, k);
    let out_tuples = tuples(n, k + 1);
    let mut out = FormField::zeros(&f.chart, k + 1);
    let chart = f.chart.clone();
    for (oc, jt) in out_tuples.iter().enumerate() {
        for (p, &axis) in jt.iter().enumerate() {
            let mut rest = jt.clone();
            rest.remove(p);
            let ic = in_tuples.iter().position(|t| *t == rest).unwrap();
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            let src = &f.components[ic];
            let dst = &mut out.components[oc];
            for flat in 0..chart.len() {
                let m = chart.multi_index(flat);
                dst[flat] += sign * d1_of(&chart, src, &m[..n], axis);
            }
        }
    }
    out.validate_finite()?;
    Ok(out)
}

/// Precomputed Hodge star kernel for one `(dim, degree)` pair. The index
/// tables are built once so the per-sample application allocates nothing
/// beyond its output.
pub struct StarKernel {
    dim: usize,
    degree: usize,
    in_tuples: Vec<Vec<usize>>,
    /// For each output component: (input position of the complement, sign).
    complement: Vec<(usize, f64)>,
}

impl StarKernel {
    pub fn new(dim: usize, degree: usize) -> Self {
        let in_tuples = tuples(dim, degree);
        let out_tuples = tuples(dim, dim - degree);
        let complement = out_tuples
            .iter()
            .map(|jt| {
                let comp: Vec<usize> = (0..dim).filter(|i| !jt.contains(i)).collect();
                let ip = in_tuples.iter().position(|t| *t == comp).unwrap();
                let mut perm: Vec<usize> = comp.clone();
                perm.extend_from_slice(jt);
                (ip, perm_sign(&perm) as f64)
            })
            .collect();
        StarKernel { dim, degree, in_tuples, complement }
    }

    pub fn n_out(&self) -> usize {
        self.complement.len()
    }

    /// Apply at one point. `out` must have length `n_out()`.
    pub fn apply(&self, g: &Mat4, vals: &[f64], orientation: f64, out: &mut [f64]) -> Result<()> {
        let (ginv, det) = inverse_n(g, self.dim)?;
        if det <= 0.0 || !positive_definite(g, self.dim) {
            return Err(Error::DegenerateMetric { index: usize::MAX });
        }
        let sqrtg = det.sqrt();
        let k = self.degree;
        // raise all indices: omega^I = sum_J det(ginv[I x J]) omega_J
        let mut raised = [0.0f64; 6];
        for (ip, it) in self.in_tuples.iter().enumerate() {
            let mut acc = 0.0;
            for (jp, jt) in self.in_tuples.iter().enumerate() {
                let mut minor = [[0.0f64; 4]; 4];
                for (a, &ia) in it.iter().enumerate() {
                    for (b, &jb) in jt.iter().enumerate() {
                        minor[a][b] = ginv[ia][jb];
                    }
                }
                let d = match k {
                    0 => 1.0,
                    _ => crate::linalg::det_n(&minor, k),
                };
                acc += d * vals[jp];
            }
            raised[ip] = acc;
        }
        for (op, &(ip, sign)) in self.complement.iter().enumerate() {
            out[op] = orientation * sqrtg * sign * raised[ip];
        }
        Ok(())
    }
}

/// Pointwise Hodge star (convenience wrapper over [`StarKernel`]).
pub fn star_point(
    dim: usize,
    degree: usize,
    g: &Mat4,
    vals: &[f64],
    orientation: f64,
) -> Result<Vec<f64>> {
    let kernel = StarKernel::new(dim, degree);
    let mut out = vec![0.0; kernel.n_out()];
    kernel.apply(g, vals, orientation, &mut out)?;
    Ok(out)
}

/// Hodge star with respect to a metric field. Degree `k` maps to `dim - k`;
/// applying twice gives `(-1)^{k(dim-k)}` on Riemannian signature.
pub fn hodge_star(f: &FormField, g: &MetricField, orientation: f64) -> Result<FormField> {
    if !f.chart.same_as(&g.chart) {
        return Err(Error::ChartMismatch("hodge_star requires a shared chart"));
    }
    let dim = f.chart.dim();
    let kernel = StarKernel::new(dim, f.degree);
    let mut out = FormField::zeros(&f.chart, dim - f.degree);
    let mut vals = vec![0.0; f.components.len()];
    let mut sv = vec![0.0; kernel.n_out()];
    for flat in 0..f.chart.len() {
        let gm = g.matrix_at(flat);
        for (c, comp) in f.components.iter().enumerate() {
            vals[c] = comp[flat];
        }
        kernel
            .apply(&gm, &vals, orientation, &mut sv)
            .map_err(|_| Error::DegenerateMetric { index: flat })?;
        for (c, v) in sv.iter().enumerate() {
            out.components[c][flat] = *v;
        }
    }
    out.validate_finite()?;
    Ok(out)
}

/// Codifferential `d* = -*d*` (dim 4 Riemannian; also valid in dims 2, 3 for
/// the degrees used here up to the global sign fixed by tests).
pub fn codifferential(f: &FormField, g: &MetricField, orientation: f64) -> Result<FormField> {
    let starred = hodge_star(f, g, orientation)?;
    let d = exterior_derivative(&starred)?;
    let back = hodge_star(&d, g, orientation)?;
    Ok(back.scale(-1.0))
}

/// Precomputed wedge kernel for degrees `(p, q)` in dimension `dim`.
pub struct WedgeKernel {
    n_out: usize,
    /// (a position, b position, out position, sign)
    terms: Vec<(usize, usize, usize, f64)>,
}

impl WedgeKernel {
    pub fn new(dim: usize, p: usize, q: usize) -> Self {
        let ta = tuples(dim, p);
        let tb = tuples(dim, q);
        let tout = tuples(dim, p + q);
        let mut terms = Vec::new();
        for (ia, at) in ta.iter().enumerate() {
            for (ib, bt) in tb.iter().enumerate() {
                let mut concat: Vec<usize> = at.clone();
                concat.extend_from_slice(bt);
                let sign = perm_sign(&concat);
                if sign == 0 {
                    continue;
                }
                let mut sorted = concat.clone();
                sorted.sort_unstable();
                let op = tout.iter().position(|t| *t == sorted).unwrap();
                terms.push((ia, ib, op, sign as f64));
            }
        }
        WedgeKernel { n_out: tout.len(), terms }
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn apply(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for &(ia, ib, op, sign) in &self.terms {
            out[op] += sign * a[ia] * b[ib];
        }
    }
}

/// Pointwise wedge: given ascending-tuple component values of `a` (degree p)
/// and `b` (degree q), return component values of `a ^ b` (degree p + q).
pub fn wedge_point(dim: usize, p: usize, q: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let kernel = WedgeKernel::new(dim, p, q);
    let mut out = vec![0.0; kernel.n_out()];
    kernel.apply(a, b, &mut out);
    out
}

/// Wedge product of two form fields.
pub fn wedge(a: &FormField, b: &FormField) -> Result<FormField> {
    if !a.chart.same_as(&b.chart) {
        return Err(Error::ChartMismatch("wedge requires a shared chart"));
    }
    let dim = a.chart.dim();
    if a.degree + b.degree > dim {
        return Err(Error::DegreeOverflow);
    }
    let mut out = FormField::zeros(&a.chart, a.degree + b.degree);
    for flat in 0..a.chart.len() {
        let av = a.values_at(flat);
        let bv = b.values_at(flat);
        let w = wedge_point(dim, a.degree, b.degree, &av, &bv);
        for (c, v) in w.iter().enumerate() {
            out.components[c][flat] = *v;
        }
    }
    Ok(out)
}

/// Self-dual part `(f + *f)/2` of a 2-form on a 4-chart.
pub fn self_dual_part(f: &FormField, g: &MetricField, orientation: f64) -> Result<FormField> {
    let s = hodge_star(f, g, orientation)?;
    f.lin_comb(0.5, &s, 0.5)
}

/// Anti-self-dual part `(f - *f)/2`.
pub fn anti_self_dual_part(f: &FormField, g: &MetricField, orientation: f64) -> Result<FormField> {
    let s = hodge_star(f, g, orientation)?;
    f.lin_comb(0.5, &s, -0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricField;

    fn flat_metric(chart: &GridChart) -> MetricField {
        MetricField::euclidean(chart)
    }

    #[test]
    fn d_of_constant_is_zero() {
        let chart = GridChart::boxed(3, 6, 0.2, 0.0).unwrap();
        let f = FormField::scalar(&chart, |_| 2.5).unwrap();
        let df = exterior_derivative(&f).unwrap();
        assert!(df.max_abs_interior(0) < 1e-13);
    }

    #[test]
    fn d_of_coordinate_is_dx() {
        let chart = GridChart::boxed(3, 6, 0.2, -0.5).unwrap();
        let f = FormField::scalar(&chart, |x| x[0]).unwrap();
        let df = exterior_derivative(&f).unwrap();
        for flat in 0..chart.len() {
            assert!((df.components[0][flat] - 1.0).abs() < 1e-12);
            assert!(df.components[1][flat].abs() < 1e-12);
            assert!(df.components[2][flat].abs() < 1e-12);
        }
    }

    #[test]
    fn d_of_x_dy_is_dx_dy() {
        // f = x dy on a 2D chart: df = dx ^ dy with component 1.
        let chart = GridChart::boxed(2, 8, 0.1, -0.3).unwrap();
        let f = FormField::from_fn(&chart, 1, |x| vec![0.0, x[0]]).unwrap();
        let df = exterior_derivative(&f).unwrap();
        for flat in 0..chart.len() {
            assert!((df.components[0][flat] - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn degree_overflow_errors() {
        let chart = GridChart::boxed(2, 4, 0.1, 0.0).unwrap();
        let f = FormField::zeros(&chart, 2);
        assert!(matches!(exterior_derivative(&f), Err(Error::DegreeOverflow)));
    }

    #[test]
    fn dd_vanishes_to_round_off() {
        // Per-axis stencils act on different axes, so they commute exactly
        // and d(d f) is round-off everywhere - stronger than the O(h^2)
        // requirement. The bound C h^2 then holds with C stable (near zero)
        // under refinement.
        for n in [16usize, 32] {
            let chart = GridChart::new(3, &[n, n, n], &[1.0 / n as f64; 3], &[0.0; 3], &[false; 3]).unwrap();
            let f = FormField::scalar(&chart, |x| {
                (3.1 * x[0]).sin() * (2.2 * x[1]).cos() * (1.7 * x[2] + 0.3).sin()
            })
            .unwrap();
            let ddf = exterior_derivative(&exterior_derivative(&f).unwrap()).unwrap();
            assert!(ddf.max_abs_interior(0) < 1e-9, "residual not round-off");
        }
        // same identity one degree up, on a periodic 4D chart
        let chart = GridChart::torus(4, 8).unwrap();
        let f = FormField::from_fn(&chart, 1, |x| {
            let s = (2.0 * std::f64::consts::PI * x[0]).sin();
            vec![s, x[1] * 0.0 + s * s, 0.3, (2.0 * std::f64::consts::PI * x[3]).cos()]
        })
        .unwrap();
        let ddf = exterior_derivative(&exterior_derivative(&f).unwrap()).unwrap();
        assert!(ddf.max_abs_interior(0) < 1e-9);
    }

    #[test]
    fn euclidean_star_on_two_forms() {
        // *(dx1^dx2) = dx3^dx4 in flat 4-space
        let chart = GridChart::boxed(4, 4, 0.25, 0.0).unwrap();
        let g = flat_metric(&chart);
        let mut f = FormField::zeros(&chart, 2);
        // tuple order: (01),(02),(03),(12),(13),(23)
        for v in f.components[0].iter_mut() {
            *v = 1.0;
        }
        let s = hodge_star(&f, &g, 1.0).unwrap();
        for flat in 0..chart.len() {
            assert!((s.components[5][flat] - 1.0).abs() < 1e-13);
            for c in 0..5 {
                assert!(s.components[c][flat].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn self_dual_form_is_fixed_by_star() {
        let chart = GridChart::boxed(4, 4, 0.25, 0.0).unwrap();
        let g = flat_metric(&chart);
        let mut f = FormField::zeros(&chart, 2);
        for v in f.components[0].iter_mut() {
            *v = 1.0;
        }
        for v in f.components[5].iter_mut() {
            *v = 1.0;
        }
        let s = hodge_star(&f, &g, 1.0).unwrap();
        for c in 0..6 {
            for flat in 0..chart.len() {
                assert!((s.components[c][flat] - f.components[c][flat]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn star_dx_in_three_dims() {
        let chart = GridChart::boxed(3, 4, 0.25, 0.0).unwrap();
        let g = flat_metric(&chart);
        let mut f = FormField::zeros(&chart, 1);
        for v in f.components[0].iter_mut() {
            *v = 1.0;
        }
        let s = hodge_star(&f, &g, 1.0).unwrap();
        // *dx = dy^dz: tuple order for 2-forms in 3d: (01),(02),(12)
        for flat in 0..chart.len() {
            assert!((s.components[2][flat] - 1.0).abs() < 1e-13);
            assert!(s.components[0][flat].abs() < 1e-13);
            assert!(s.components[1][flat].abs() < 1e-13);
        }
    }

    #[test]
    fn star_squared_sign() {
        // ** = (-1)^{k(dim-k)} on Riemannian signature, to round-off,
        // also with a non-flat metric.
        let chart = GridChart::boxed(4, 5, 0.2, 0.1).unwrap();
        let g = MetricField::from_fn(&chart, |x| {
            let mut m = [[0.0; 4]; 4];
            for i in 0..4 {
                m[i][i] = 1.0 + 0.3 * (x[i]).sin().powi(2);
            }
            m[0][1] = 0.1 * x[2].cos();
            m[1][0] = m[0][1];
            m
        })
        .unwrap();
        for k in 0..=4usize {
            let ncomp = binomial(4, k);
            let f = FormField::from_fn(&chart, k, |x| {
                (0..ncomp).map(|c| ((c + 1) as f64 * x[0] + x[1]).sin() + 0.2).collect()
            })
            .unwrap();
            let ss = hodge_star(&hodge_star(&f, &g, 1.0).unwrap(), &g, 1.0).unwrap();
            let sign = if (k * (4 - k)) % 2 == 0 { 1.0 } else { -1.0 };
            for c in 0..ncomp {
                for flat in 0..chart.len() {
                    assert!(
                        (ss.components[c][flat] - sign * f.components[c][flat]).abs() < 1e-10,
                        "k={k} c={c}"
                    );
                }
            }
        }
    }

    #[test]
    fn degenerate_metric_rejected() {
        let chart = GridChart::boxed(2, 4, 0.25, 0.0).unwrap();
        let g = MetricField::from_fn(&chart, |_| {
            let mut m = [[0.0; 4]; 4];
            m[0][0] = 1.0;
            m[1][1] = -1.0;
            m
        })
        .unwrap();
        let f = FormField::scalar(&chart, |_| 1.0).unwrap();
        assert!(hodge_star(&f, &g, 1.0).is_err());
    }
}
