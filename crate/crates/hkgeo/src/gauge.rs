//! The pointwise gauge algebra of definite-triple deformations: the
//! quadratic map `G(A) = TF(Q A^T + A Q + A Q A^T)` on trace-free symmetric
//! 3x3 matrices and its local inverse `F` by Newton iteration with the exact
//! 5x5 Jacobian.

use crate::error::{Error, Result};
use crate::linalg::{
    mat3_add, mat3_frobenius, mat3_mul, mat3_scale, mat3_sub, mat3_tf, mat3_transpose, solve_dense,
    Mat3, MAT3_ID,
};

/// Local chart radius for the inverse, Frobenius norm.
pub const CHART_RADIUS: f64 = 0.1;
/// Allowed deviation of the normalized Gram matrix from the identity.
pub const QNORM_RADIUS: f64 = 0.2;

/// Basis of the 5-dimensional space of trace-free symmetric 3x3 matrices.
const S0_BASIS: [Mat3; 5] = [
    [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 0.0]],
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -2.0]],
    [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
    [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
    [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]],
];

fn s0_coords(m: &Mat3) -> [f64; 5] {
    // dual to S0_BASIS for symmetric trace-free m:
    // m00 = c0 + c1, m11 = -c0 + c1, m22 = -2 c1
    [
        0.5 * (m[0][0] - m[1][1]),
        -0.5 * m[2][2],
        m[0][1],
        m[0][2],
        m[1][2],
    ]
}

fn s0_from_coords(c: &[f64; 5]) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (k, b) in S0_BASIS.iter().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] += c[k] * b[i][j];
            }
        }
    }
    out
}

/// `G(A) = TF(Q A^T + A Q + A Q A^T)`.
pub fn gauge_map(a: &Mat3, qnorm: &Mat3) -> Mat3 {
    let at = mat3_transpose(a);
    let qa = mat3_mul(qnorm, &at);
    let aq = mat3_mul(a, qnorm);
    let aqa = mat3_mul(&aq, &at);
    mat3_tf(&mat3_add(&mat3_add(&qa, &aq), &aqa))
}

/// Jacobian action `DG|_A (H) = TF(Q H^T + H Q + H Q A^T + A Q H^T)`.
fn gauge_jacobian_apply(a: &Mat3, qnorm: &Mat3, h: &Mat3) -> Mat3 {
    let ht = mat3_transpose(h);
    let at = mat3_transpose(a);
    let t1 = mat3_mul(qnorm, &ht);
    let t2 = mat3_mul(h, qnorm);
    let t3 = mat3_mul(&mat3_mul(h, qnorm), &at);
    let t4 = mat3_mul(&mat3_mul(a, qnorm), &ht);
    mat3_tf(&mat3_add(&mat3_add(&t1, &t2), &mat3_add(&t3, &t4)))
}

/// Local inverse `F`: the trace-free symmetric `A` with `G(A) = t`, found by
/// Newton iteration in the 5-dimensional coordinate space. The chart is the
/// ball of radius [`CHART_RADIUS`] with `|qnorm - Id|` below
/// [`QNORM_RADIUS`]; outside it, or if Newton fails to converge in 50
/// iterations, returns [`Error::OutsideLocalChart`].
pub fn gauge_inverse(t: &Mat3, qnorm: &Mat3) -> Result<Mat3> {
    if mat3_frobenius(t) > CHART_RADIUS {
        return Err(Error::OutsideLocalChart);
    }
    if mat3_frobenius(&mat3_sub(qnorm, &MAT3_ID)) > QNORM_RADIUS {
        return Err(Error::OutsideLocalChart);
    }
    let mut a = mat3_scale(t, 0.5); // linearization at Q = Id: DG(H) = 2H
    for _ in 0..50 {
        let residual = mat3_sub(&gauge_map(&a, qnorm), t);
        if mat3_frobenius(&residual) <= 1e-12 {
            return Ok(a);
        }
        // assemble the 5x5 Jacobian in the S0 basis
        let mut jac: Vec<Vec<f64>> = Vec::with_capacity(5);
        for col in &S0_BASIS {
            let img = gauge_jacobian_apply(&a, qnorm, col);
            let c = s0_coords(&img);
            jac.push(c.to_vec());
        }
        // columns were produced per basis vector; transpose into rows
        let mut rows = vec![vec![0.0; 5]; 5];
        for (cidx, col) in jac.iter().enumerate() {
            for (ridx, v) in col.iter().enumerate() {
                rows[ridx][cidx] = *v;
            }
        }
        let mut rhs = s0_coords(&residual).to_vec();
        solve_dense(&mut rows, &mut rhs).map_err(|_| Error::OutsideLocalChart)?;
        let step = s0_from_coords(&[rhs[0], rhs[1], rhs[2], rhs[3], rhs[4]]);
        a = mat3_sub(&a, &step);
    }
    Err(Error::OutsideLocalChart)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat3_trace;

    fn rand_s0(seed: &mut u64, scale: f64) -> Mat3 {
        let mut next = || {
            *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((*seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 2.0
        };
        let c = [next(), next(), next(), next(), next()];
        mat3_scale(&s0_from_coords(&c), scale)
    }

    #[test]
    fn coords_round_trip() {
        let mut seed = 7u64;
        for _ in 0..20 {
            let m = rand_s0(&mut seed, 1.0);
            let back = s0_from_coords(&s0_coords(&m));
            assert!(mat3_frobenius(&mat3_sub(&back, &m)) < 1e-13);
        }
    }

    #[test]
    fn gauge_map_examples() {
        // A = 0 -> 0
        let z = [[0.0; 3]; 3];
        assert_eq!(mat3_frobenius(&gauge_map(&z, &MAT3_ID)), 0.0);

        // Q = Id, A = diag(a, -a, 0): TF(2A + A^2) by direct arithmetic
        let a = 0.07;
        let am = [[a, 0.0, 0.0], [0.0, -a, 0.0], [0.0, 0.0, 0.0]];
        let got = gauge_map(&am, &MAT3_ID);
        // 2A + A^2 = diag(2a + a^2, -2a + a^2, 0); trace = 2a^2/... subtract tr/3
        let tr = (2.0 * a + a * a) + (-2.0 * a + a * a);
        let expect = [
            [2.0 * a + a * a - tr / 3.0, 0.0, 0.0],
            [0.0, -2.0 * a + a * a - tr / 3.0, 0.0],
            [0.0, 0.0, -tr / 3.0],
        ];
        assert!(mat3_frobenius(&mat3_sub(&got, &expect)) < 1e-15);

        // A = Id -> TF(3 Qnorm)
        let q = [[1.1, 0.02, 0.0], [0.02, 0.95, 0.01], [0.0, 0.01, 0.97]];
        let got = gauge_map(&MAT3_ID, &q);
        let expect = mat3_tf(&mat3_scale(&q, 3.0));
        assert!(mat3_frobenius(&mat3_sub(&got, &expect)) < 1e-14);
    }

    #[test]
    fn inverse_round_trip_on_chart_ball() {
        let mut seed = 42u64;
        let mut sup = 0.0f64;
        for i in 0..200 {
            let a = rand_s0(&mut seed, 0.05);
            let q = if i % 3 == 0 {
                MAT3_ID
            } else {
                let p = rand_s0(&mut seed, 0.05);
                mat3_add(&MAT3_ID, &p)
            };
            let t = gauge_map(&a, &q);
            if mat3_frobenius(&t) > CHART_RADIUS {
                continue;
            }
            let back = gauge_inverse(&t, &q).unwrap();
            sup = sup.max(mat3_frobenius(&mat3_sub(&back, &a)));
            assert!(mat3_trace(&back).abs() < 1e-12);
        }
        assert!(sup <= 1e-10, "round-trip sup error {sup}");
    }

    #[test]
    fn inverse_linearizes_as_half() {
        // Qnorm = Id, T small: A = T/2 + O(|T|^2)
        let mut seed = 3u64;
        for &eps in &[1e-2, 1e-3, 1e-4] {
            let t = rand_s0(&mut seed, eps);
            let a = gauge_inverse(&t, &MAT3_ID).unwrap();
            let lin = mat3_scale(&t, 0.5);
            let err = mat3_frobenius(&mat3_sub(&a, &lin));
            let tn = mat3_frobenius(&t);
            assert!(err <= 2.0 * tn * tn, "err {err} vs |T|^2 {}", tn * tn);
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let z = [[0.0; 3]; 3];
        let a = gauge_inverse(&z, &MAT3_ID).unwrap();
        assert!(mat3_frobenius(&a) < 1e-14);
    }

    #[test]
    fn outside_chart_is_rejected() {
        let t = [[0.2, 0.0, 0.0], [0.0, -0.2, 0.0], [0.0, 0.0, 0.0]];
        assert!(matches!(gauge_inverse(&t, &MAT3_ID), Err(Error::OutsideLocalChart)));
        let q = [[1.5, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.8]];
        let small = [[0.01, 0.0, 0.0], [0.0, -0.01, 0.0], [0.0, 0.0, 0.0]];
        assert!(matches!(gauge_inverse(&small, &q), Err(Error::OutsideLocalChart)));
    }
}
