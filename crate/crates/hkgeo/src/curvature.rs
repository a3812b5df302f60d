//! Coordinate Riemann curvature by second-order finite differences of
//! Christoffel symbols, with derived |Rm|^2, Ricci, and scalar curvature.
//!
//! Two evaluation paths share the same tensor algebra: an array path over a
//! sampled [`MetricField`], and a point path that differentiates an analytic
//! metric evaluator (used by the Gibbons-Hawking streaming checks, where
//! sampling a full 4D grid would be wasteful).
//!
//! Sign conventions: `R^r_{smn} = d_m G^r_{ns} - d_n G^r_{ms} + G G - G G`,
//! `Ric_{sn} = R^m_{smn}`, so the unit round 2-sphere has scalar curvature 2.

use crate::chart::GridChart;
use crate::error::{Error, Result};
use crate::field::{d1_of, interior_indices};
use crate::linalg::{inverse_n, positive_definite, Mat4};
use crate::metric::{n_pairs, pair_position, MetricField};

pub type Riemann4 = [[[[f64; 4]; 4]; 4]; 4];

/// Christoffel symbols sampled over a chart: `G^k_{ij}` stored per `k` and
/// pair `(i <= j)`.
pub struct ChristoffelField {
    pub chart: GridChart,
    /// comps[k][pair] is a sample array.
    pub comps: Vec<Vec<Vec<f64>>>,
}

pub fn christoffel(g: &MetricField) -> Result<ChristoffelField> {
    let dim = g.chart.dim();
    let chart = g.chart.clone();
    let np = n_pairs(dim);
    let mut comps = vec![vec![vec![0.0; chart.len()]; np]; dim];
    for flat in 0..chart.len() {
        let idx = chart.multi_index(flat);
        let gm = g.matrix_at(flat);
        if !positive_definite(&gm, dim) {
            return Err(Error::DegenerateMetric { index: flat });
        }
        let (ginv, _) = inverse_n(&gm, dim).map_err(|_| Error::DegenerateMetric { index: flat })?;
        // dg[l][i][j] = d_l g_ij
        let mut dg = [[[0.0f64; 4]; 4]; 4];
        for l in 0..dim {
            for i in 0..dim {
                for j in i..dim {
                    let v = d1_of(&chart, &g.comps[pair_position(dim, i, j)], &idx[..dim], l);
                    dg[l][i][j] = v;
                    dg[l][j][i] = v;
                }
            }
        }
        for k in 0..dim {
            for i in 0..dim {
                for j in i..dim {
                    let mut s = 0.0;
                    for l in 0..dim {
                        s += ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                    }
                    comps[k][pair_position(dim, i, j)][flat] = 0.5 * s;
                }
            }
        }
    }
    Ok(ChristoffelField { chart, comps })
}

impl ChristoffelField {
    pub fn at(&self, flat: usize, k: usize, i: usize, j: usize) -> f64 {
        let dim = self.chart.dim();
        self.comps[k][pair_position(dim, i, j)][flat]
    }
}

/// Mixed Riemann tensor `R^r_{smn}` at one sample, by central differences of
/// the Christoffel field.
fn riemann_mixed_at(g: &MetricField, gamma: &ChristoffelField, flat: usize) -> Riemann4 {
    let dim = g.chart.dim();
    let chart = &g.chart;
    let idx = chart.multi_index(flat);
    // dGamma[m][r][pair] = d_m G^r_{..}
    let mut dgamma = [[[0.0f64; 10]; 4]; 4];
    for m in 0..dim {
        for r in 0..dim {
            for p in 0..n_pairs(dim) {
                dgamma[m][r][p] = d1_of(chart, &gamma.comps[r][p], &idx[..dim], m);
            }
        }
    }
    let mut riem = [[[[0.0f64; 4]; 4]; 4]; 4];
    for r in 0..dim {
        for s in 0..dim {
            for m in 0..dim {
                for n in 0..dim {
                    let mut v = dgamma[m][r][pair_position(dim, n, s)]
                        - dgamma[n][r][pair_position(dim, m, s)];
                    for l in 0..dim {
                        v += gamma.at(flat, r, m, l) * gamma.at(flat, l, n, s)
                            - gamma.at(flat, r, n, l) * gamma.at(flat, l, m, s);
                    }
                    riem[r][s][m][n] = v;
                }
            }
        }
    }
    riem
}

/// Fully lowered Riemann tensor at one sample.
pub fn riemann_lowered_at(g: &MetricField, gamma: &ChristoffelField, flat: usize) -> Riemann4 {
    let dim = g.chart.dim();
    let mixed = riemann_mixed_at(g, gamma, flat);
    let gm = g.matrix_at(flat);
    let mut low = [[[[0.0f64; 4]; 4]; 4]; 4];
    for r in 0..dim {
        for s in 0..dim {
            for m in 0..dim {
                for n in 0..dim {
                    let mut v = 0.0;
                    for l in 0..dim {
                        v += gm[r][l] * mixed[l][s][m][n];
                    }
                    low[r][s][m][n] = v;
                }
            }
        }
    }
    low
}

/// Pointwise invariants derived from the lowered tensor and the metric.
pub fn invariants_from_lowered(dim: usize, low: &Riemann4, gm: &Mat4) -> Result<(f64, Mat4, f64)> {
    let (ginv, _) = inverse_n(gm, dim)?;
    // raise all four indices, one at a time
    let mut cur = *low;
    for pos in 0..4 {
        let mut next = [[[[0.0f64; 4]; 4]; 4]; 4];
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    for d in 0..dim {
                        let mut v = 0.0;
                        for l in 0..dim {
                            let src = match pos {
                                0 => cur[l][b][c][d],
                                1 => cur[a][l][c][d],
                                2 => cur[a][b][l][d],
                                _ => cur[a][b][c][l],
                            };
                            v += ginv[match pos {
                                0 => a,
                                1 => b,
                                2 => c,
                                _ => d,
                            }][l]
                                * src;
                        }
                        next[a][b][c][d] = v;
                    }
                }
            }
        }
        cur = next;
    }
    let mut rm2 = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            for c in 0..dim {
                for d in 0..dim {
                    rm2 += low[a][b][c][d] * cur[a][b][c][d];
                }
            }
        }
    }
    // Ricci from the mixed tensor: Ric_sn = R^m_{smn} = g^{mr} R_{rsmn}
    let mut ric = [[0.0f64; 4]; 4];
    for s in 0..dim {
        for n in 0..dim {
            let mut v = 0.0;
            for m in 0..dim {
                for r in 0..dim {
                    v += ginv[m][r] * low[r][s][m][n];
                }
            }
            ric[s][n] = v;
        }
    }
    let mut scalar = 0.0;
    for s in 0..dim {
        for n in 0..dim {
            scalar += ginv[s][n] * ric[s][n];
        }
    }
    Ok((rm2, ric, scalar))
}

/// Derived curvature of a sampled metric: |Rm|^2, Ricci components, scalar.
pub struct CurvatureAnalysis {
    pub chart: GridChart,
    pub rm2: Vec<f64>,
    /// Ricci components in metric pair order.
    pub ricci: Vec<Vec<f64>>,
    pub scalar: Vec<f64>,
}

pub fn riemann_curvature(g: &MetricField) -> Result<CurvatureAnalysis> {
    let dim = g.chart.dim();
    let gamma = christoffel(g)?;
    let len = g.chart.len();
    let mut rm2 = vec![0.0; len];
    let mut ricci = vec![vec![0.0; len]; n_pairs(dim)];
    let mut scalar = vec![0.0; len];
    for flat in 0..len {
        let low = riemann_lowered_at(g, &gamma, flat);
        let gm = g.matrix_at(flat);
        let (r2, ric, sc) =
            invariants_from_lowered(dim, &low, &gm).map_err(|_| Error::DegenerateMetric { index: flat })?;
        rm2[flat] = r2;
        for i in 0..dim {
            for j in i..dim {
                ricci[pair_position(dim, i, j)][flat] = ric[i][j];
            }
        }
        scalar[flat] = sc;
    }
    Ok(CurvatureAnalysis { chart: g.chart.clone(), rm2, ricci, scalar })
}

impl CurvatureAnalysis {
    pub fn max_rm2_interior(&self, margin: usize) -> f64 {
        let mut m = 0.0f64;
        for flat in interior_indices(&self.chart, margin) {
            m = m.max(self.rm2[flat]);
        }
        m
    }

    pub fn max_ricci_interior(&self, margin: usize) -> f64 {
        let mut m = 0.0f64;
        for flat in interior_indices(&self.chart, margin) {
            for comp in &self.ricci {
                m = m.max(comp[flat].abs());
            }
        }
        m
    }
}

// ---- point path: curvature of an analytic metric evaluator ----

pub type MetricFn<'a> = dyn Fn(&[f64; 4]) -> Mat4 + Sync + 'a;

/// Curvature data at a single point, from nested central differences of an
/// analytic metric with per-axis steps `h`.
pub struct PointCurvature {
    pub dim: usize,
    pub g: Mat4,
    pub ginv: Mat4,
    /// Fully lowered R_{rsmn}.
    pub riemann: Riemann4,
    pub ricci: Mat4,
    pub scalar: f64,
    pub rm2: f64,
}

fn christoffel_at_point(dim: usize, f: &MetricFn, x: &[f64; 4], h: &[f64; 4]) -> Result<[[[f64; 4]; 4]; 4]> {
    let g0 = f(x);
    let (ginv, _) = inverse_n(&g0, dim)?;
    let mut dg = [[[0.0f64; 4]; 4]; 4];
    for l in 0..dim {
        let mut xp = *x;
        let mut xm = *x;
        xp[l] += h[l];
        xm[l] -= h[l];
        let gp = f(&xp);
        let gm = f(&xm);
        for i in 0..dim {
            for j in 0..dim {
                dg[l][i][j] = (gp[i][j] - gm[i][j]) / (2.0 * h[l]);
            }
        }
    }
    let mut gamma = [[[0.0f64; 4]; 4]; 4];
    for k in 0..dim {
        for i in 0..dim {
            for j in 0..dim {
                let mut s = 0.0;
                for l in 0..dim {
                    s += ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                }
                gamma[k][i][j] = 0.5 * s;
            }
        }
    }
    Ok(gamma)
}

pub fn curvature_at_point(dim: usize, f: &MetricFn, x: &[f64; 4], h: &[f64; 4]) -> Result<PointCurvature> {
    let g0 = f(x);
    if !positive_definite(&g0, dim) {
        return Err(Error::DegenerateMetric { index: usize::MAX });
    }
    let (ginv, _) = inverse_n(&g0, dim)?;
    let gamma0 = christoffel_at_point(dim, f, x, h)?;
    let mut dgamma = [[[[0.0f64; 4]; 4]; 4]; 4];
    for m in 0..dim {
        let mut xp = *x;
        let mut xm = *x;
        xp[m] += h[m];
        xm[m] -= h[m];
        let gp = christoffel_at_point(dim, f, &xp, h)?;
        let gm = christoffel_at_point(dim, f, &xm, h)?;
        for r in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    dgamma[m][r][i][j] = (gp[r][i][j] - gm[r][i][j]) / (2.0 * h[m]);
                }
            }
        }
    }
    let mut low = [[[[0.0f64; 4]; 4]; 4]; 4];
    for r in 0..dim {
        for s in 0..dim {
            for m in 0..dim {
                for n in 0..dim {
                    let mut v = dgamma[m][r][n][s] - dgamma[n][r][m][s];
                    for l in 0..dim {
                        v += gamma0[r][m][l] * gamma0[l][n][s] - gamma0[r][n][l] * gamma0[l][m][s];
                    }
                    // lower on the fly below
                    low[r][s][m][n] = v;
                }
            }
        }
    }
    let mixed = low;
    let mut lowered = [[[[0.0f64; 4]; 4]; 4]; 4];
    for r in 0..dim {
        for s in 0..dim {
            for m in 0..dim {
                for n in 0..dim {
                    let mut v = 0.0;
                    for l in 0..dim {
                        v += g0[r][l] * mixed[l][s][m][n];
                    }
                    lowered[r][s][m][n] = v;
                }
            }
        }
    }
    let (rm2, ricci, scalar) = invariants_from_lowered(dim, &lowered, &g0)?;
    Ok(PointCurvature { dim, g: g0, ginv, riemann: lowered, ricci, scalar, rm2 })
}

/// Hessian of a scalar level function at a point: `Hess_{mn} = d_m d_n rho -
/// G^l_{mn} d_l rho`, from an analytic evaluator.
pub fn hessian_at_point(
    dim: usize,
    gfn: &MetricFn,
    rho: &dyn Fn(&[f64; 4]) -> f64,
    x: &[f64; 4],
    h: &[f64; 4],
) -> Result<(Mat4, [f64; 4])> {
    let gamma = christoffel_at_point(dim, gfn, x, h)?;
    let mut grad = [0.0f64; 4];
    let mut hess = [[0.0f64; 4]; 4];
    let f0 = rho(x);
    for m in 0..dim {
        let mut xp = *x;
        let mut xm = *x;
        xp[m] += h[m];
        xm[m] -= h[m];
        grad[m] = (rho(&xp) - rho(&xm)) / (2.0 * h[m]);
        hess[m][m] = (rho(&xp) - 2.0 * f0 + rho(&xm)) / (h[m] * h[m]);
    }
    for m in 0..dim {
        for n in (m + 1)..dim {
            let mut xpp = *x;
            let mut xpm = *x;
            let mut xmp = *x;
            let mut xmm = *x;
            xpp[m] += h[m];
            xpp[n] += h[n];
            xpm[m] += h[m];
            xpm[n] -= h[n];
            xmp[m] -= h[m];
            xmp[n] += h[n];
            xmm[m] -= h[m];
            xmm[n] -= h[n];
            let v = (rho(&xpp) - rho(&xpm) - rho(&xmp) + rho(&xmm)) / (4.0 * h[m] * h[n]);
            hess[m][n] = v;
            hess[n][m] = v;
        }
    }
    for m in 0..dim {
        for n in 0..dim {
            for l in 0..dim {
                hess[m][n] -= gamma[l][m][n] * grad[l];
            }
        }
    }
    Ok((hess, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_metric_has_zero_curvature() {
        let chart = GridChart::boxed(4, 5, 0.25, 0.0).unwrap();
        let g = MetricField::euclidean(&chart);
        let cur = riemann_curvature(&g).unwrap();
        assert!(cur.max_rm2_interior(2) <= 1e-10);
    }

    #[test]
    fn round_sphere_scalar_curvature() {
        // patch of the unit 2-sphere away from the poles
        let n = 48;
        let chart = GridChart::new(
            2,
            &[n, n],
            &[0.8 / n as f64, 0.8 / n as f64],
            &[1.0, 0.0],
            &[false, false],
        )
        .unwrap();
        let g = MetricField::from_fn(&chart, |x| {
            let mut m = [[0.0; 4]; 4];
            m[0][0] = 1.0;
            m[1][1] = x[0].sin().powi(2);
            m
        })
        .unwrap();
        let cur = riemann_curvature(&g).unwrap();
        for flat in interior_indices(&chart, 2) {
            let s = cur.scalar[flat];
            assert!((s - 2.0).abs() < 0.02, "scalar {s}");
        }
    }

    #[test]
    fn point_path_matches_array_path_on_sphere() {
        let gfn = |x: &[f64; 4]| {
            let mut m = [[0.0; 4]; 4];
            m[0][0] = 1.0;
            m[1][1] = x[0].sin().powi(2);
            m
        };
        let pc = curvature_at_point(2, &gfn, &[1.2, 0.3, 0.0, 0.0], &[1e-3, 1e-3, 0.0, 0.0]).unwrap();
        assert!((pc.scalar - 2.0).abs() < 1e-5, "scalar {}", pc.scalar);
        // |Rm|^2 of a 2-sphere of radius 1 is 4 (single sectional curvature)
        assert!((pc.rm2 - 4.0).abs() < 1e-4, "rm2 {}", pc.rm2);
    }

    #[test]
    fn first_bianchi_on_random_smooth_metric() {
        let n = 24;
        let chart = GridChart::new(3, &[n, n, n], &[1.0 / n as f64; 3], &[0.0; 3], &[false; 3]).unwrap();
        let g = MetricField::from_fn(&chart, |x| {
            let mut m = [[0.0; 4]; 4];
            let bump = 0.08;
            for i in 0..3 {
                m[i][i] = 1.0 + bump * ((i + 1) as f64 * x[0] + x[1]).sin();
            }
            m[0][1] = bump * (x[2] * 2.0).cos() * 0.5;
            m[1][0] = m[0][1];
            m[1][2] = bump * (x[0] * 3.0).sin() * 0.4;
            m[2][1] = m[1][2];
            m
        })
        .unwrap();
        let gamma = christoffel(&g).unwrap();
        let h2 = (1.0 / n as f64).powi(2);
        for &flat in &[
            chart.index(&[n / 2, n / 2, n / 2]),
            chart.index(&[n / 3, n / 2, 2 * n / 3]),
            chart.index(&[5, 9, 13]),
        ] {
            let low = riemann_lowered_at(&g, &gamma, flat);
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        for l in 0..3 {
                            let cyc = low[i][j][k][l] + low[i][k][l][j] + low[i][l][j][k];
                            assert!(cyc.abs() < 60.0 * h2, "bianchi residual {cyc}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_metric_is_reported() {
        let chart = GridChart::boxed(2, 4, 0.5, 0.0).unwrap();
        let g = MetricField::from_fn(&chart, |_| {
            let mut m = [[0.0; 4]; 4];
            m[0][0] = 1.0;
            m[1][1] = -1.0;
            m
        })
        .unwrap();
        assert!(matches!(riemann_curvature(&g), Err(Error::DegenerateMetric { .. })));
    }
}
