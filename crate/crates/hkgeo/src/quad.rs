//! Quadrature and fitting helpers shared by the spectral solvers.

/// Adaptive Simpson on `[a, b]` with a relative tolerance. Recursion is
/// capped; panels that stop early still contribute their best estimate.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    adaptive_simpson_depth(f, a, b, rel_tol, 24)
}

/// Adaptive Simpson with an explicit recursion cap, for integrands that are
/// expensive or sit at a noise floor.
pub fn adaptive_simpson_depth(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, depth: u32) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, rel_tol * whole.abs().max(1e-300), depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    abs_tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * abs_tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, abs_tol / 2.0, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, abs_tol / 2.0, depth - 1)
}

/// Integral over `[a, b]` split into geometrically graded panels toward `a`,
/// for integrands with an integrable endpoint singularity at `a`. Stops when
/// the panels underflow or stop contributing.
pub fn graded_integral(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, levels: u32) -> f64 {
    let mut total = 0.0;
    let mut hi = b;
    let mut negligible = 0;
    for _ in 0..levels {
        let lo = a + (hi - a) / 2.0;
        if lo <= a || lo >= hi {
            break;
        }
        let piece = adaptive_simpson_depth(f, lo, hi, rel_tol, 20);
        total += piece;
        if piece.abs() <= rel_tol * total.abs() {
            negligible += 1;
            if negligible >= 4 {
                break;
            }
        } else {
            negligible = 0;
        }
        hi = lo;
    }
    total
}

/// Three-point Gauss-Legendre on one interval (exact through degree 5).
pub fn gauss3(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let x = (0.6f64).sqrt();
    let w0 = 8.0 / 9.0;
    let w1 = 5.0 / 9.0;
    h * (w0 * f(c) + w1 * f(c - h * x) + w1 * f(c + h * x))
}

/// Cumulative antiderivative samples `F(x_i) = int_{x_0}^{x_i} f` on a given
/// ascending grid, one Gauss-Legendre 3-point panel per interval.
pub fn cumulative_gauss3(f: &dyn Fn(f64) -> f64, xs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in xs.windows(2) {
        acc += gauss3(f, w[0], w[1]);
        out.push(acc);
    }
    out
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

/// Slope of log y against log x (power-law exponent fit). Points with
/// non-positive y are skipped.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&a, &b) in x.iter().zip(y) {
        if a > 0.0 && b > 0.0 {
            lx.push(a.ln());
            ly.push(b.ln());
        }
    }
    linear_fit(&lx, &ly).0
}

/// Fourth-order central first and second derivatives of a pointwise
/// evaluator, used by the ODE residual oracles.
pub fn d1_fourth_order(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

pub fn d2_fourth_order(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h))
        / (12.0 * h * h)
}
