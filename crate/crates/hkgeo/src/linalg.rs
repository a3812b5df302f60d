//! Small dense linear algebra for dim <= 4 metrics and 3x3 triple algebra.

use crate::error::{Error, Result};

pub type Mat4 = [[f64; 4]; 4];
pub type Mat3 = [[f64; 3]; 3];

/// Determinant of the leading `n x n` block.
pub fn det_n(m: &Mat4, n: usize) -> f64 {
    match n {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        4 => {
            let mut d = 0.0;
            for j in 0..4 {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                d += sign * m[0][j] * minor3(m, 0, j);
            }
            d
        }
        _ => panic!("det_n: n must be 1..=4"),
    }
}

fn minor3(m: &Mat4, row: usize, col: usize) -> f64 {
    let mut sub = [[0.0; 4]; 4];
    let mut r = 0;
    for i in 0..4 {
        if i == row {
            continue;
        }
        let mut c = 0;
        for j in 0..4 {
            if j == col {
                continue;
            }
            sub[r][c] = m[i][j];
            c += 1;
        }
        r += 1;
    }
    det_n(&sub, 3)
}

/// Closed-form inverse of the leading `n x n` block by the adjugate, with a
/// determinant pivot check at 1e-12 relative to the matrix scale.
pub fn inverse_n(m: &Mat4, n: usize) -> Result<(Mat4, f64)> {
    let det = det_n(m, n);
    // Hadamard-style scale, the product of row max-norms: tolerant of
    // well-conditioned but badly scaled metrics (e.g. diag(V, V, V, 1/V))
    let scale: f64 = (0..n)
        .map(|i| (0..n).map(|j| m[i][j].abs()).fold(0.0, f64::max).max(1e-300))
        .product();
    if det.abs() <= 1e-12 * scale {
        return Err(Error::DegenerateMetric { index: usize::MAX });
    }
    let mut inv = [[0.0; 4]; 4];
    match n {
        1 => inv[0][0] = 1.0 / det,
        2 => {
            inv[0][0] = m[1][1] / det;
            inv[0][1] = -m[0][1] / det;
            inv[1][0] = -m[1][0] / det;
            inv[1][1] = m[0][0] / det;
        }
        3 | 4 => {
            for i in 0..n {
                for j in 0..n {
                    // cofactor expansion; adjugate transposes (i, j)
                    let mut sub = [[0.0; 4]; 4];
                    let mut r = 0;
                    for p in 0..n {
                        if p == j {
                            continue;
                        }
                        let mut c = 0;
                        for q in 0..n {
                            if q == i {
                                continue;
                            }
                            sub[r][c] = m[p][q];
                            c += 1;
                        }
                        r += 1;
                    }
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    inv[i][j] = sign * det_n(&sub, n - 1) / det;
                }
            }
        }
        _ => panic!("inverse_n: n must be 1..=4"),
    }
    Ok((inv, det))
}

/// Positive definiteness of the leading `n x n` symmetric block via leading
/// principal minors.
pub fn positive_definite(m: &Mat4, n: usize) -> bool {
    (1..=n).all(|k| det_n(m, k) > 0.0)
}

// ---- 3x3 helpers for the triple algebra ----

pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for (k, bk) in b.iter().enumerate() {
                out[i][j] += a[i][k] * bk[j];
            }
        }
    }
    out
}

pub fn mat3_transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn mat3_add(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][j] + b[i][j];
        }
    }
    out
}

pub fn mat3_sub(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][j] - b[i][j];
        }
    }
    out
}

pub fn mat3_scale(a: &Mat3, s: f64) -> Mat3 {
    let mut out = *a;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

pub fn mat3_trace(a: &Mat3) -> f64 {
    a[0][0] + a[1][1] + a[2][2]
}

pub const MAT3_ID: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Trace-free part `B - tr(B)/3 Id`.
pub fn mat3_tf(a: &Mat3) -> Mat3 {
    let t = mat3_trace(a) / 3.0;
    let mut out = *a;
    for i in 0..3 {
        out[i][i] -= t;
    }
    out
}

pub fn mat3_frobenius(a: &Mat3) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn mat3_det(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

pub fn mat3_inverse(a: &Mat3) -> Result<Mat3> {
    let det = mat3_det(a);
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).powi(3).max(1e-300);
    if det.abs() <= 1e-12 * scale {
        return Err(Error::DegenerateMetric { index: usize::MAX });
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let r0 = (j + 1) % 3;
            let r1 = (j + 2) % 3;
            let c0 = (i + 1) % 3;
            let c1 = (i + 2) % 3;
            inv[i][j] = (a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]) / det;
        }
    }
    Ok(inv)
}

/// Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi sweeps.
/// Returns (eigenvalues ascending, column eigenvectors).
pub fn sym3_eigen(a: &Mat3) -> ([f64; 3], Mat3) {
    let mut m = *a;
    let mut v = MAT3_ID;
    for _ in 0..64 {
        let off = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
        if off < 1e-30 {
            break;
        }
        for p in 0..2 {
            for q in (p + 1)..3 {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let mut rot = MAT3_ID;
                rot[p][p] = c;
                rot[q][q] = c;
                rot[p][q] = s;
                rot[q][p] = -s;
                m = mat3_mul(&mat3_transpose(&rot), &mat3_mul(&m, &rot));
                v = mat3_mul(&v, &rot);
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m[i][i].partial_cmp(&m[j][j]).unwrap());
    let vals = [m[order[0]][order[0]], m[order[1]][order[1]], m[order[2]][order[2]]];
    let mut vecs = [[0.0; 3]; 3];
    for (newcol, &oldcol) in order.iter().enumerate() {
        for r in 0..3 {
            vecs[r][newcol] = v[r][oldcol];
        }
    }
    (vals, vecs)
}

/// Inverse square root of a symmetric positive definite 3x3 matrix.
pub fn sym3_inv_sqrt(a: &Mat3) -> Result<Mat3> {
    let (vals, vecs) = sym3_eigen(a);
    if vals[0] <= 0.0 {
        return Err(Error::NotDefinite { index: usize::MAX });
    }
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for (k, val) in vals.iter().enumerate() {
                out[i][j] += vecs[i][k] * vecs[j][k] / val.sqrt();
            }
        }
    }
    Ok(out)
}

/// Solve a small dense linear system in place (partial pivoting).
pub fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<()> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-14 {
            return Err(Error::InvalidInput("singular linear system".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for c in (col + 1)..n {
            s -= a[col][c] * b[c];
        }
        b[col] = s / a[col][col];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_matches_identity() {
        let m: Mat4 = [
            [2.0, 0.3, 0.1, 0.0],
            [0.3, 1.5, 0.0, 0.2],
            [0.1, 0.0, 1.1, 0.0],
            [0.0, 0.2, 0.0, 0.9],
        ];
        let (inv, det) = inverse_n(&m, 4).unwrap();
        assert!(det > 0.0);
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for (k, invk) in inv.iter().enumerate() {
                    s += m[i][k] * invk[j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_eigen_diagonalizes() {
        let a: Mat3 = [[2.0, 0.5, 0.1], [0.5, 1.0, -0.3], [0.1, -0.3, 3.0]];
        let (vals, vecs) = sym3_eigen(&a);
        for k in 0..3 {
            for i in 0..3 {
                let mut av = 0.0;
                for (j, vj) in vecs.iter().enumerate() {
                    av += a[i][j] * vj[k];
                }
                assert!((av - vals[k] * vecs[i][k]).abs() < 1e-9);
            }
        }
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
    }

    #[test]
    fn inv_sqrt_squares_back() {
        let a: Mat3 = [[1.3, 0.2, 0.0], [0.2, 0.9, 0.1], [0.0, 0.1, 1.7]];
        let s = sym3_inv_sqrt(&a).unwrap();
        // s * a * s = Id
        let m = mat3_mul(&s, &mat3_mul(&a, &s));
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((m[i][j] - expect).abs() < 1e-10);
            }
        }
    }
}
