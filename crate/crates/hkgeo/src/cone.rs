//! Spectral Poisson solver on flat cones `C(W)` over a circle (d = 2) or a
//! spherical space form (d = 3), in the weighted setting: data decaying like
//! `r^{-delta}` on the end `r >= R` produces a solution growing at most like
//! `r^{2-delta}` away from the exceptional weights.
//!
//! Separation of variables turns `Delta u = v` into the mode ODEs
//!
//! ```text
//! u_j'' + (d-1)/r u_j' - lambda_j/r^2 u_j = f_j(r),
//! ```
//!
//! with fundamental pair `G_j = r^{mu_j^+}`, `D_j = r^{mu_j^-}` from
//! `mu^2 + (d-2) mu - lambda_j = 0` (for j = 0: `(log r, 1)` when d = 2 and
//! `(1, r^{-1})` when d = 3). The variation-of-parameters kernels use the
//! Wronskian `W_j(s) = sqrt((d-2)^2 + 4 lambda_j) s^{1-d}` evaluated inside
//! the integrals. Mode j > 0 integrates the growing kernel back to `R` when
//! `mu_j^- > delta - d` and out to infinity when `mu_j^- < delta - d`: that
//! split is exactly the convergence/growth dichotomy, with a genuine
//! resonance at `delta = d + mu_j^-` where the weighted bound degenerates.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, cumulative_gauss3, d1_fourth_order, d2_fourth_order, gauss3, linear_fit, loglog_slope};

#[derive(Debug, Clone, PartialEq)]
pub enum CrossSection {
    /// Circle of length `2 pi beta`.
    Circle { beta: f64 },
    Sphere,
    /// Functions on `S^2 / Z_2`: even spherical harmonics only.
    ProjectiveSphere,
}

/// One separated eigenvalue level of the cross-section.
#[derive(Debug, Clone)]
pub struct SpectralMode {
    pub lambda: f64,
    pub multiplicity: usize,
    pub mu_plus: f64,
    pub mu_minus: f64,
    /// Circle wavenumber m, or spherical degree l.
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct ConeSpectrum {
    pub dim: usize,
    pub cross_section: CrossSection,
    pub modes: Vec<SpectralMode>,
    /// Weights in (0, 1) where the solution estimate degenerates.
    pub exceptional: Vec<f64>,
}

pub fn build_spectrum(dim: usize, cross_section: CrossSection, mode_count: usize) -> Result<ConeSpectrum> {
    match (dim, &cross_section) {
        (2, CrossSection::Circle { beta }) => {
            if !(*beta > 0.0 && *beta <= 1.0) {
                return Err(Error::InadmissibleAngle { beta: *beta });
            }
        }
        (3, CrossSection::Sphere) | (3, CrossSection::ProjectiveSphere) => {}
        _ => return Err(Error::InvalidInput("cross-section does not match the dimension".into())),
    }
    if mode_count == 0 {
        return Err(Error::InvalidInput("need at least one mode".into()));
    }
    let mut modes = Vec::new();
    match &cross_section {
        CrossSection::Circle { beta } => {
            for m in 0..mode_count {
                let lambda = (m as f64 / beta).powi(2);
                let (mu_plus, mu_minus) = mu_roots(dim, lambda);
                modes.push(SpectralMode {
                    lambda,
                    multiplicity: if m == 0 { 1 } else { 2 },
                    mu_plus,
                    mu_minus,
                    index: m,
                });
            }
        }
        CrossSection::Sphere => {
            for l in 0..mode_count {
                let lambda = (l * (l + 1)) as f64;
                let (mu_plus, mu_minus) = mu_roots(dim, lambda);
                modes.push(SpectralMode { lambda, multiplicity: 2 * l + 1, mu_plus, mu_minus, index: l });
            }
        }
        CrossSection::ProjectiveSphere => {
            for k in 0..mode_count {
                let l = 2 * k;
                let lambda = (l * (l + 1)) as f64;
                let (mu_plus, mu_minus) = mu_roots(dim, lambda);
                modes.push(SpectralMode { lambda, multiplicity: 2 * l + 1, mu_plus, mu_minus, index: l });
            }
        }
    }
    let mut exceptional = Vec::new();
    for m in modes.iter().skip(1) {
        for cand in [m.mu_minus.abs(), dim as f64 + m.mu_minus] {
            if cand > 0.0 && cand < 1.0 && !exceptional.iter().any(|g: &f64| (g - cand).abs() < 1e-12) {
                exceptional.push(cand);
            }
        }
    }
    exceptional.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ConeSpectrum { dim, cross_section, modes, exceptional })
}

fn mu_roots(dim: usize, lambda: f64) -> (f64, f64) {
    let p = (dim - 2) as f64;
    let disc = (p * p + 4.0 * lambda).sqrt();
    ((-p + disc) / 2.0, (-p - disc) / 2.0)
}

/// Input for one mode: the radial coefficient as a function.
pub struct ModeInput<'a> {
    pub mode: usize,
    pub f: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
}

pub struct ModeSolution {
    pub mode: usize,
    pub lambda: f64,
    /// (r, u(r)) samples.
    pub samples: Vec<(f64, f64)>,
    /// sup-relative ODE residual over the samples.
    pub residual: f64,
    /// Fitted growth exponent of |u| on dyadic annuli.
    pub growth_exponent: f64,
    /// Measured constant sup |u| / (r^{2-delta} ||f||).
    pub bound_constant: f64,
}

pub struct ConeSolve {
    pub delta: f64,
    pub inner_radius: f64,
    pub modes: Vec<ModeSolution>,
}

const QUAD_TOL: f64 = 1e-13;

/// Solve the mode ODEs for the given inputs on `r >= R`.
///
/// `samples` are the radii at which `u_j` is reported; they must lie in
/// `[R, r_max]`. Errors with [`Error::ResonantWeight`] when `delta` is
/// within 1e-9 of the exceptional set.
pub fn solve(
    spectrum: &ConeSpectrum,
    inputs: &[ModeInput<'_>],
    delta: f64,
    inner_radius: f64,
    samples: &[f64],
) -> Result<ConeSolve> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::InvalidInput("delta must lie in (0, 1)".into()));
    }
    for g in &spectrum.exceptional {
        if (g - delta).abs() < 1e-9 {
            return Err(Error::ResonantWeight { delta });
        }
    }
    if samples.len() < 4 {
        return Err(Error::InsufficientSamples { needed: 4, got: samples.len() });
    }
    let solutions: Result<Vec<ModeSolution>> = inputs
        .par_iter()
        .map(|input| solve_one_mode(spectrum, input, delta, inner_radius, samples))
        .collect();
    Ok(ConeSolve { delta, inner_radius, modes: solutions? })
}

fn solve_one_mode(
    spectrum: &ConeSpectrum,
    input: &ModeInput<'_>,
    delta: f64,
    rr: f64,
    samples: &[f64],
) -> Result<ModeSolution> {
    let mode = spectrum
        .modes
        .get(input.mode)
        .ok_or_else(|| Error::InvalidInput(format!("mode {} out of range", input.mode)))?;
    let dim = spectrum.dim;
    let f = &input.f;
    let eval = mode_solution_evaluator(dim, mode, f, delta, rr)?;
    let mut out = Vec::with_capacity(samples.len());
    for &r in samples {
        out.push((r, eval(r)?));
    }
    // residual oracle: fourth-order differences of independently-quadratured
    // values of u
    let mut worst = 0.0f64;
    let mut fscale = 0.0f64;
    for &(r, _) in &out {
        fscale = fscale.max(f(r).abs());
    }
    let probes: Vec<f64> = out.iter().step_by((out.len() / 6).max(1)).map(|p| p.0).collect();
    for &r in &probes {
        let h = 0.006 * r;
        let uf = |x: f64| eval(x).unwrap_or(f64::NAN);
        let u0 = uf(r);
        let d1 = d1_fourth_order(&uf, r, h);
        let d2 = d2_fourth_order(&uf, r, h);
        let res = d2 + (dim - 1) as f64 / r * d1 - mode.lambda / (r * r) * u0 - f(r);
        if res.is_finite() {
            worst = worst.max(res.abs());
        } else {
            return Err(Error::TailDivergence);
        }
    }
    let residual = if fscale > 0.0 { worst / fscale } else { worst };
    // growth exponent on dyadic annuli of the sample range
    let (growth_exponent, bound_constant) = growth_fit(&out, delta);
    Ok(ModeSolution {
        mode: input.mode,
        lambda: mode.lambda,
        samples: out,
        residual,
        growth_exponent,
        bound_constant,
    })
}

fn growth_fit(samples: &[(f64, f64)], delta: f64) -> (f64, f64) {
    let r0 = samples.first().unwrap().0;
    let r1 = samples.last().unwrap().0;
    let n_ann = ((r1 / r0).log2().floor() as usize).max(1);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut cbound = 0.0f64;
    for a in 0..n_ann {
        let lo = r0 * 2f64.powi(a as i32);
        let hi = (lo * 2.0).min(r1 * (1.0 + 1e-12));
        let sup = samples
            .iter()
            .filter(|(r, _)| *r >= lo && *r <= hi)
            .map(|(_, u)| u.abs())
            .fold(0.0f64, f64::max);
        if sup > 0.0 {
            xs.push(lo.ln());
            ys.push(sup.ln());
        }
    }
    for (r, u) in samples {
        cbound = cbound.max(u.abs() / r.powf(2.0 - delta));
    }
    if xs.len() < 2 {
        return (0.0, cbound);
    }
    (linear_fit(&xs, &ys).0, cbound)
}

/// Build the pointwise evaluator of the mode solution. A closure is returned
/// so residual oracles can query off-sample radii with independent
/// quadratures.
#[allow(clippy::type_complexity)]
fn mode_solution_evaluator<'a>(
    dim: usize,
    mode: &SpectralMode,
    f: &'a (dyn Fn(f64) -> f64 + Sync),
    delta: f64,
    rr: f64,
) -> Result<Box<dyn Fn(f64) -> Result<f64> + Sync + 'a>> {
    let lambda = mode.lambda;
    if lambda == 0.0 {
        // direct double integral from R
        let d = dim as f64;
        return Ok(Box::new(move |r: f64| {
            let inner = move |s: f64| -> f64 {
                s.powf(1.0 - d) * adaptive_simpson(&|t: f64| t.powf(d - 1.0) * f(t), rr, s, QUAD_TOL)
            };
            Ok(adaptive_simpson(&inner, rr, r, 1e-12))
        }));
    }
    let mu_p = mode.mu_plus;
    let mu_m = mode.mu_minus;
    let wcoef = ((dim - 2) as f64 * (dim - 2) as f64 + 4.0 * lambda).sqrt();
    let to_infinity = mu_m < delta - dim as f64;
    // kernels with the Wronskian inside: D f / W and G f / W
    let dfw = move |s: f64| s.powf(mu_m) * f(s) / (wcoef * s.powf(1.0 - dim as f64));
    let gfw = move |s: f64| s.powf(mu_p) * f(s) / (wcoef * s.powf(1.0 - dim as f64));
    if to_infinity {
        Ok(Box::new(move |r: f64| {
            let tail = integrate_tail(&dfw, r)?;
            let near = adaptive_simpson(&gfw, rr, r, QUAD_TOL);
            Ok(-r.powf(mu_p) * tail - r.powf(mu_m) * near)
        }))
    } else {
        Ok(Box::new(move |r: f64| {
            let grow = adaptive_simpson(&dfw, rr, r, QUAD_TOL);
            let near = adaptive_simpson(&gfw, rr, r, QUAD_TOL);
            Ok(r.powf(mu_p) * grow - r.powf(mu_m) * near)
        }))
    }
}

/// Integrate `f` on `[r, infinity)` over doubling panels, truncating when
/// panels stop contributing; errors when they fail to decay.
fn integrate_tail(f: &(dyn Fn(f64) -> f64 + Sync), r: f64) -> Result<f64> {
    let mut total = 0.0;
    let mut lo = r;
    let mut last_mag = f64::INFINITY;
    let mut growing = 0;
    for _ in 0..700 {
        let hi = lo * 2.0;
        let piece = adaptive_simpson(f, lo, hi, QUAD_TOL);
        total += piece;
        if piece.abs() >= last_mag {
            growing += 1;
            if growing > 8 {
                return Err(Error::TailDivergence);
            }
        } else {
            growing = 0;
        }
        if piece.abs() <= 1e-16 * total.abs().max(1e-300) {
            return Ok(total);
        }
        last_mag = piece.abs();
        lo = hi;
    }
    Err(Error::TailDivergence)
}

/// Bakry-Emery branch (d = 1): solve `V^{-1} u'' = v`, i.e. `u'' = V v`,
/// with both integration constants fixed at the inner endpoint.
pub fn solve_d1(
    v: &dyn Fn(f64) -> f64,
    big_v: &dyn Fn(f64) -> f64,
    z_grid: &[f64],
) -> Result<Vec<f64>> {
    if z_grid.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: z_grid.len() });
    }
    for w in z_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidInput("z grid must be ascending".into()));
        }
    }
    let vv = |s: f64| big_v(s) * v(s);
    // u'(z) = int_{z0}^z V v; u(z) = int u'
    let uprime = cumulative_gauss3(&vv, z_grid);
    // integrate the piecewise values of u' with per-interval Gauss panels on
    // the exact integrand reconstructed by nested quadrature
    let mut u = Vec::with_capacity(z_grid.len());
    let z0 = z_grid[0];
    u.push(0.0);
    let mut acc = 0.0;
    for (i, w) in z_grid.windows(2).enumerate() {
        // u'(x) = uprime[i] + int_{z_i}^x V v
        let base = uprime[i];
        let zi = w[0];
        let integrand = |x: f64| base + gauss3(&vv, zi, x);
        acc += gauss3(&integrand, w[0], w[1]);
        u.push(acc);
    }
    let _ = z0;
    Ok(u)
}

/// Weighted dyadic-annulus norm parameters.
#[derive(Debug, Clone)]
pub struct WeightedNorm {
    pub delta: f64,
    pub derivatives: usize,
    pub holder: f64,
    pub inner_radius: f64,
}

impl WeightedNorm {
    pub fn new(delta: f64, derivatives: usize, holder: f64, inner_radius: f64) -> Result<Self> {
        if !(0.0 < holder && holder < 1.0) {
            return Err(Error::InvalidInput("holder exponent must lie in (0,1)".into()));
        }
        if inner_radius < 1.0 {
            return Err(Error::InvalidInput("inner radius must be >= 1".into()));
        }
        Ok(WeightedNorm { delta, derivatives, holder, inner_radius })
    }
}

/// Parts of a weighted norm: the `C^k_delta` sup part and the Holder
/// seminorm of the top derivative.
#[derive(Debug, Clone, Copy)]
pub struct WeightedNormValue {
    pub sup_part: f64,
    pub holder_part: f64,
}

impl WeightedNormValue {
    pub fn total(&self) -> f64 {
        self.sup_part + self.holder_part
    }
}

/// `sum_m sup_annuli r^{-delta+m} sup |f^(m)|` over the dyadic annuli of
/// `[R, r_max]`, plus the Holder seminorm of the top derivative sampled at
/// pair scale. Radial functions only (the N-invariant reduction).
pub fn weighted_norm(f: &dyn Fn(f64) -> f64, n: &WeightedNorm, r_max: f64) -> Result<WeightedNormValue> {
    let r0 = n.inner_radius;
    if r_max < 2.0 * r0 {
        return Err(Error::InsufficientRange);
    }
    let n_ann = (r_max / r0).log2().floor() as usize;
    let mut total = 0.0f64;
    for m in 0..=n.derivatives {
        let mut sup_m = 0.0f64;
        for a in 0..n_ann {
            let lo = r0 * 2f64.powi(a as i32);
            let hi = lo * 2.0;
            let mut ann_sup = 0.0f64;
            for i in 0..24 {
                let r = lo + (hi - lo) * i as f64 / 23.0;
                let v = match m {
                    0 => f(r),
                    1 => d1_fourth_order(f, r, 1e-3 * r),
                    _ => d2_fourth_order(f, r, 1e-3 * r),
                };
                ann_sup = ann_sup.max(v.abs());
            }
            sup_m = sup_m.max(lo.powf(-n.delta + m as f64) * ann_sup);
        }
        total += sup_m;
    }
    // Holder seminorm of the top derivative by pairwise quotients within
    // annulus-scale pairs
    let m = n.derivatives;
    let dm = |r: f64| match m {
        0 => f(r),
        1 => d1_fourth_order(f, r, 1e-3 * r),
        _ => d2_fourth_order(f, r, 1e-3 * r),
    };
    let mut holder_sup = 0.0f64;
    for a in 0..n_ann {
        let lo = r0 * 2f64.powi(a as i32);
        let hi = lo * 2.0;
        for i in 0..8 {
            let r1 = lo + (hi - lo) * i as f64 / 8.0;
            let r2 = r1 + (hi - lo) / 16.0;
            let q = (dm(r2) - dm(r1)).abs() / (r2 - r1).powf(n.holder);
            holder_sup = holder_sup.max(lo.powf(-n.delta + m as f64 + n.holder) * q);
        }
    }
    Ok(WeightedNormValue { sup_part: total, holder_part: holder_sup })
}

// ---- cross-section eigenfunctions for gridded projection ----

/// Orthonormal circle eigenfunctions on length `2 pi beta`: index 0 is the
/// constant; indices (m, 0|1) are cos and sin.
pub fn circle_eigenfunction(beta: f64, m: usize, which: usize, phi: f64) -> f64 {
    let len = 2.0 * std::f64::consts::PI * beta;
    if m == 0 {
        1.0 / len.sqrt()
    } else {
        let norm = (2.0 / len).sqrt();
        if which == 0 {
            norm * (m as f64 * phi / beta).cos()
        } else {
            norm * (m as f64 * phi / beta).sin()
        }
    }
}

/// L2-normalized associated Legendre `P-bar_l^m(x)` (spherical harmonic
/// normalization including the `1/sqrt(2 pi)` azimuthal factor).
pub fn normalized_legendre(l: usize, m: usize, x: f64) -> f64 {
    debug_assert!(m <= l);
    let somx2 = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    // P-bar_m^m
    let mut pmm = (1.0 / (4.0 * std::f64::consts::PI)).sqrt();
    for k in 1..=m {
        pmm *= -((2 * k + 1) as f64 / (2 * k) as f64).sqrt() * somx2;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = pmm;
    let mut pl = ((2 * m + 3) as f64).sqrt() * x * pmm;
    if l == m + 1 {
        return pl;
    }
    for ll in (m + 2)..=l {
        let lf = ll as f64;
        let mf = m as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
        let next = a * (x * pl - b * pm1);
        pm1 = pl;
        pl = next;
    }
    pl
}

/// Real orthonormal spherical harmonic: `order` 0 is the zonal harmonic,
/// `(m, cos|sin)` otherwise.
pub fn real_spherical_harmonic(l: usize, m: usize, which: usize, theta: f64, phi: f64) -> f64 {
    let x = theta.cos();
    let p = normalized_legendre(l, m, x);
    if m == 0 {
        p
    } else if which == 0 {
        (2.0f64).sqrt() * p * (m as f64 * phi).cos()
    } else {
        (2.0f64).sqrt() * p * (m as f64 * phi).sin()
    }
}

/// Project gridded cross-section samples at one radius onto an eigenfunction
/// by quadrature: circle uses the trapezoid rule (exact for trigonometric
/// polynomials), the sphere a Gauss-Legendre x trapezoid product rule.
pub struct SphereQuadrature {
    pub nodes: Vec<(f64, f64)>, // (theta, weight) per ring
    pub n_phi: usize,
}

impl SphereQuadrature {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (xs, ws) = gauss_legendre(n_theta);
        let nodes = xs.iter().zip(&ws).map(|(&x, &w)| (x.acos(), w)).collect();
        SphereQuadrature { nodes, n_phi }
    }

    /// `int_{S^2} f Y_lm`.
    pub fn project(&self, f: &dyn Fn(f64, f64) -> f64, l: usize, m: usize, which: usize) -> f64 {
        let mut total = 0.0;
        let dphi = 2.0 * std::f64::consts::PI / self.n_phi as f64;
        for &(theta, w) in &self.nodes {
            let mut ring = 0.0;
            for i in 0..self.n_phi {
                let phi = i as f64 * dphi;
                ring += f(theta, phi) * real_spherical_harmonic(l, m, which, theta, phi);
            }
            total += w * ring * dphi;
        }
        total
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..64 {
            // Legendre P_n and derivative at x
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}
