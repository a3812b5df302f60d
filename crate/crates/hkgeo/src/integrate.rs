//! Riemannian volume integration by the midpoint rule on node-centered cells.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::det_n;
use crate::metric::MetricField;

pub struct IntegralResult {
    pub value: f64,
    /// Set when the region predicate selected no samples.
    pub empty_region: bool,
}

/// `int f sqrt(det g) dx` over the samples selected by `region`.
///
/// Each node carries a cell of volume `prod h_a`; on non-periodic axes the
/// two end nodes carry half cells so the covered box is exactly
/// `[origin, origin + (n-1) h]`.
pub fn integrate(
    f: &ScalarField,
    g: &MetricField,
    region: impl Fn(&[f64]) -> bool,
) -> Result<IntegralResult> {
    if !f.chart.same_as(&g.chart) {
        return Err(Error::ChartMismatch("integrate requires a shared chart"));
    }
    let chart = &f.chart;
    let dim = chart.dim();
    let cell: f64 = chart.spacings().iter().product();
    let mut total = 0.0;
    let mut any = false;
    for flat in 0..chart.len() {
        let idx = chart.multi_index(flat);
        let x = chart.coord(&idx[..dim]);
        if !region(&x[..dim]) {
            continue;
        }
        any = true;
        let gm = g.matrix_at(flat);
        let det = det_n(&gm, dim);
        if det <= 0.0 {
            return Err(Error::DegenerateMetric { index: flat });
        }
        let mut w = 1.0;
        for a in 0..dim {
            if !chart.periodic(a) && (idx[a] == 0 || idx[a] + 1 == chart.extent(a)) {
                w *= 0.5;
            }
        }
        total += w * f.data[flat] * det.sqrt() * cell;
    }
    Ok(IntegralResult { value: total, empty_region: !any })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::GridChart;

    #[test]
    fn unit_cube_has_volume_one() {
        let n = 21;
        let chart = GridChart::new(3, &[n; 3], &[1.0 / (n - 1) as f64; 3], &[0.0; 3], &[false; 3]).unwrap();
        let f = ScalarField::constant(&chart, 1.0);
        let g = MetricField::euclidean(&chart);
        let r = integrate(&f, &g, |_| true).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12, "value {}", r.value);
        assert!(!r.empty_region);
    }

    #[test]
    fn ball_volume_within_two_percent() {
        // f = 1 over the unit ball at spacing 0.02
        let h = 0.02;
        let n = 111; // covers [-1.1, 1.1]
        let chart = GridChart::new(3, &[n; 3], &[h; 3], &[-1.1; 3], &[false; 3]).unwrap();
        let f = ScalarField::constant(&chart, 1.0);
        let g = MetricField::euclidean(&chart);
        let r = integrate(&f, &g, |x| x.iter().map(|v| v * v).sum::<f64>() <= 1.0).unwrap();
        let exact = 4.0 * std::f64::consts::PI / 3.0;
        assert!((r.value - exact).abs() / exact < 0.02, "value {} vs {exact}", r.value);
    }

    #[test]
    fn conformal_factor_scales_volume() {
        // g = V g_flat with V = 4: sqrt(det g) = V^{3/2} = 8 on a unit cube
        let n = 11;
        let chart = GridChart::new(3, &[n; 3], &[1.0 / (n - 1) as f64; 3], &[0.0; 3], &[false; 3]).unwrap();
        let f = ScalarField::constant(&chart, 1.0);
        let g = MetricField::from_fn(&chart, |_| {
            let mut m = [[0.0; 4]; 4];
            for i in 0..3 {
                m[i][i] = 4.0;
            }
            m
        })
        .unwrap();
        let r = integrate(&f, &g, |_| true).unwrap();
        assert!((r.value - 8.0).abs() < 1e-12);
    }

    #[test]
    fn empty_region_is_flagged() {
        let chart = GridChart::boxed(2, 4, 0.1, 0.0).unwrap();
        let f = ScalarField::constant(&chart, 1.0);
        let g = MetricField::euclidean(&chart);
        let r = integrate(&f, &g, |_| false).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.empty_region);
    }

    #[test]
    fn linear_and_monotone() {
        let chart = GridChart::boxed(2, 8, 0.125, 0.0).unwrap();
        let g = MetricField::euclidean(&chart);
        let f1 = ScalarField::from_fn(&chart, |x| x[0] + 0.5);
        let f2 = ScalarField::from_fn(&chart, |x| 2.0 - x[1]);
        let mut fsum = f1.clone();
        for (i, v) in fsum.data.iter_mut().enumerate() {
            *v = 2.0 * *v + 3.0 * f2.data[i];
        }
        let i1 = integrate(&f1, &g, |_| true).unwrap().value;
        let i2 = integrate(&f2, &g, |_| true).unwrap().value;
        let isum = integrate(&fsum, &g, |_| true).unwrap().value;
        assert!((isum - (2.0 * i1 + 3.0 * i2)).abs() < 1e-12);
        assert!(i2 > 0.0 && i1 > 0.0);
    }

    #[test]
    fn halving_spacing_reduces_error_fourfold() {
        // smooth integrand over a fixed box; midpoint rule converges at O(h^2)
        let exact = {
            // int_0^1 int_0^1 sin(pi x) sin(pi y) = (2/pi)^2
            let t = 2.0 / std::f64::consts::PI;
            t * t
        };
        let mut errs = Vec::new();
        for n in [17usize, 33] {
            let chart = GridChart::new(2, &[n; 2], &[1.0 / (n - 1) as f64; 2], &[0.0; 2], &[false; 2]).unwrap();
            let f = ScalarField::from_fn(&chart, |x| {
                (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).sin()
            });
            let g = MetricField::euclidean(&chart);
            errs.push((integrate(&f, &g, |_| true).unwrap().value - exact).abs());
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }
}
