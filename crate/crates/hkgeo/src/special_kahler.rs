//! Special Kahler model metrics on the punctured disk and cone: the flat
//! cone, the two logarithmic models, and the fractional-angle models with
//! multivalued period data, together with the holomorphic cubic differential
//! and the curvature identity `S = 4 |Theta|^2`.
//!
//! Conformal densities, with `omega = (i/2) lambda dzeta ^ dzeta-bar`:
//!
//! ```text
//! cone(beta):    lambda = beta^2 |zeta|^(2 beta - 2)
//! log model:     lambda = (1/2 pi) (-log|zeta| + Im f)          z = zeta
//! quotient log:  lambda = (1/16 pi) (-log|zeta| + Im f)/|zeta|  z = (zeta/2)^(1/2)
//! fractional:    lambda = (1/4) (1 - |xi|^2) beta^2 |zeta|^(2 beta - 2)
//! ```
//!
//! Multivalued quantities live on an angular-lift chart `phi in [0, 2 pi m)`
//! with explicit deck maps, so monodromy is computed by honest continuation
//! rather than principal-branch arithmetic. The cubic differential norm is
//! `|Theta|^2 = |dtau/dz|^2 / (4 (Im tau)^3)`, the unique normalization for
//! which the scalar curvature satisfies `S = 4 |Theta|^2` (pinned against
//! the logarithmic model, where both sides equal `2 pi / (r^2 (-log r)^3)`).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::monodromy::Sl2;
use crate::quad::{adaptive_simpson, graded_integral};

/// Admissible fractional angles (Type III) and the cone including 1.
pub const ADMISSIBLE_BETAS: [(u32, u32); 7] =
    [(1, 2), (1, 3), (2, 3), (1, 4), (3, 4), (1, 6), (5, 6)];

/// A polynomial with complex coefficients (the holomorphic data f or F,
/// supplied as a finite Taylor polynomial).
#[derive(Debug, Clone, Default)]
pub struct Poly {
    /// Coefficients c_0 + c_1 z + c_2 z^2 + ...
    pub coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SkKind {
    /// Flat cone of total angle `2 pi beta`, `beta in (0, 1]`.
    Cone { beta: f64 },
    /// Logarithmic model: monodromy `I_1`.
    TypeI { f: Poly },
    /// Z2-quotient logarithmic model: monodromy `I_1^*`.
    TypeII { f: Poly },
    /// Fractional-angle model with `xi = F(zeta)^{1/k}`: monodromy in the
    /// class of the integral rotation for beta.
    TypeIII { beta_num: u32, beta_den: u32, f_data: Poly },
}

/// A model on an annulus `r in [r_min, r_max]` of the punctured disk/cone,
/// sampled in polar coordinates on the angular lift.
#[derive(Debug, Clone)]
pub struct SkModel {
    pub kind: SkKind,
    pub r_min: f64,
    pub r_max: f64,
    /// Number of turns of the angular lift chart.
    pub lift_turns: u32,
}

fn admissible_beta(num: u32, den: u32) -> bool {
    ADMISSIBLE_BETAS.contains(&(num, den))
}

impl SkModel {
    pub fn new(kind: SkKind, r_min: f64, r_max: f64) -> Result<Self> {
        if !(0.0 < r_min && r_min < r_max) {
            return Err(Error::InvalidInput("need 0 < r_min < r_max".into()));
        }
        match &kind {
            SkKind::Cone { beta } => {
                if !(*beta > 0.0 && *beta <= 1.0) {
                    return Err(Error::InadmissibleAngle { beta: *beta });
                }
            }
            SkKind::TypeIII { beta_num, beta_den, f_data } => {
                if !admissible_beta(*beta_num, *beta_den) {
                    return Err(Error::InadmissibleAngle {
                        beta: *beta_num as f64 / *beta_den as f64,
                    });
                }
                // the deck rotation of xi = F^{1/k} around the puncture is
                // e^{2 pi i m / k} for m = ord_0 F; going once around in
                // zeta rotates the special coordinates by 2 pi beta, which
                // acts on the disk coordinate by e^{-4 pi i beta}; the data
                // must satisfy m/k = -2 beta mod 1 or the period map does
                // not close up
                let k = xi_root(*beta_num, *beta_den) as i64;
                let m = f_data.coeffs.iter().position(|c| c.norm() > 0.0);
                let m = match m {
                    Some(0) | None => {
                        return Err(Error::InvalidInput(
                            "holomorphic data must vanish at the puncture".into(),
                        ))
                    }
                    Some(m) => m as i64,
                };
                if k > 1 {
                    let needed =
                        (-2 * *beta_num as i64 * k).rem_euclid(*beta_den as i64 * k) / *beta_den as i64;
                    if m.rem_euclid(k) != needed.rem_euclid(k) {
                        return Err(Error::InvalidInput(format!(
                            "order of the holomorphic data ({m}) is incompatible with the \
                             angle: need {needed} mod {k}"
                        )));
                    }
                }
            }
            SkKind::TypeI { .. } | SkKind::TypeII { .. } => {
                if r_max >= 1.0 {
                    // -log|zeta| must stay positive
                    return Err(Error::NotKahler { radius: r_max });
                }
            }
        }
        let lift_turns = match &kind {
            SkKind::TypeIII { beta_den, beta_num, .. } => {
                // enough turns for the xi-branch to close up
                match xi_root(*beta_num, *beta_den) {
                    1 => 1,
                    k => k,
                }
            }
            _ => 1,
        };
        Ok(SkModel { kind, r_min, r_max, lift_turns })
    }

    pub fn beta(&self) -> f64 {
        match &self.kind {
            SkKind::Cone { beta } => *beta,
            SkKind::TypeI { .. } => 1.0,
            SkKind::TypeII { .. } => 0.5,
            SkKind::TypeIII { beta_num, beta_den, .. } => *beta_num as f64 / *beta_den as f64,
        }
    }

    /// zeta on the angular lift: `r e^{i phi}` with phi unreduced.
    fn zeta(r: f64, phi: f64) -> Complex64 {
        Complex64::from_polar(r, phi)
    }

    /// The multivalued period map on the lift chart.
    pub fn tau(&self, r: f64, phi: f64) -> Result<Complex64> {
        let zeta = Self::zeta(r, phi);
        let log_zeta = Complex64::new(r.ln(), phi);
        match &self.kind {
            SkKind::Cone { .. } => Ok(Complex64::new(0.0, 1.0)),
            SkKind::TypeI { f } | SkKind::TypeII { f } => {
                let t = (f.eval(zeta) - Complex64::i() * log_zeta) / (2.0 * std::f64::consts::PI);
                if t.im <= 0.0 {
                    return Err(Error::NotKahler { radius: r });
                }
                Ok(t)
            }
            SkKind::TypeIII { beta_num, beta_den, f_data } => {
                let xi = self.xi(r, phi)?;
                if xi.norm() >= 1.0 {
                    return Err(Error::NotKahler { radius: r });
                }
                let _ = (beta_num, beta_den, f_data);
                let one = Complex64::new(1.0, 0.0);
                Ok(Complex64::i() * (one + xi) / (one - xi))
            }
        }
    }

    /// `xi = F(zeta)^{1/k}` on the lift (fractional model only); for the log
    /// models the Cayley transform of tau.
    pub fn xi(&self, r: f64, phi: f64) -> Result<Complex64> {
        match &self.kind {
            SkKind::TypeIII { beta_num, beta_den, f_data } => {
                let k = xi_root(*beta_num, *beta_den);
                let zeta = Self::zeta(r, phi);
                let fval = f_data.eval(zeta);
                if k == 1 {
                    return Ok(fval);
                }
                // continuous k-th root on the lift: track the argument of F
                // along the ray from a reference angle (F is polynomial with
                // F(0) = 0; we use the leading-order winding)
                let m = f_data
                    .coeffs
                    .iter()
                    .position(|c| c.norm() > 0.0)
                    .unwrap_or(1) as f64;
                let base_arg = fval.arg();
                // unwrapped argument: nearest branch to m * phi
                let target = m * phi;
                let mut arg = base_arg;
                while arg - target > std::f64::consts::PI {
                    arg -= 2.0 * std::f64::consts::PI;
                }
                while target - arg > std::f64::consts::PI {
                    arg += 2.0 * std::f64::consts::PI;
                }
                Ok(Complex64::from_polar(fval.norm().powf(1.0 / k as f64), arg / k as f64))
            }
            _ => {
                let t = self.tau(r, phi)?;
                Ok((t - Complex64::i()) / (t + Complex64::i()))
            }
        }
    }

    /// The conformal density lambda at a lift point.
    pub fn density(&self, r: f64, phi: f64) -> Result<f64> {
        let lam = match &self.kind {
            SkKind::Cone { beta } => beta * beta * r.powf(2.0 * beta - 2.0),
            SkKind::TypeI { f } => {
                let zeta = Self::zeta(r, phi);
                (-r.ln() + f.eval(zeta).im) / (2.0 * std::f64::consts::PI)
            }
            SkKind::TypeII { f } => {
                let zeta = Self::zeta(r, phi);
                (-r.ln() + f.eval(zeta).im) / (16.0 * std::f64::consts::PI * r)
            }
            SkKind::TypeIII { .. } => {
                let beta = self.beta();
                let xi = self.xi(r, phi)?;
                0.25 * (1.0 - xi.norm_sqr()) * beta * beta * r.powf(2.0 * beta - 2.0)
            }
        };
        if lam <= 0.0 {
            return Err(Error::NotKahler { radius: r });
        }
        Ok(lam)
    }

    /// `dtau/dz` in the local special coordinate z of the model.
    pub fn cubic_coefficient(&self, r: f64, phi: f64) -> Result<Complex64> {
        let zeta = Self::zeta(r, phi);
        match &self.kind {
            SkKind::Cone { .. } => Ok(Complex64::new(0.0, 0.0)),
            SkKind::TypeI { f } => {
                // z = zeta, tau = (f - i log zeta)/(2 pi)
                let dtau = (f.derivative().eval(zeta) - Complex64::i() / zeta)
                    / (2.0 * std::f64::consts::PI);
                Ok(dtau)
            }
            SkKind::TypeII { f } => {
                // z = (zeta/2)^{1/2}: dz/dzeta = zeta^{-1/2} / (2 sqrt 2)
                let dtau_dzeta = (f.derivative().eval(zeta) - Complex64::i() / zeta)
                    / (2.0 * std::f64::consts::PI);
                let sqrt_zeta = Complex64::from_polar(r.sqrt(), 0.5 * phi);
                let dz_dzeta = 1.0 / (2.0 * (2.0f64).sqrt()) / sqrt_zeta;
                Ok(dtau_dzeta / dz_dzeta)
            }
            SkKind::TypeIII { beta_num, beta_den, f_data } => {
                // z - i w = zeta^beta, dz/dzeta = beta zeta^{beta-1}/(1 - i tau)
                let beta = *beta_num as f64 / *beta_den as f64;
                let k = xi_root(*beta_num, *beta_den) as f64;
                let xi = self.xi(r, phi)?;
                let tau = self.tau(r, phi)?;
                let one = Complex64::new(1.0, 0.0);
                let dtau_dxi = 2.0 * Complex64::i() / ((one - xi) * (one - xi));
                // dxi/dzeta = (1/k) F^{1/k - 1} F'
                let fval = f_data.eval(zeta);
                let dxi_dzeta = if (k - 1.0).abs() < 1e-14 {
                    f_data.derivative().eval(zeta)
                } else {
                    if fval.norm() == 0.0 {
                        return Err(Error::InvalidInput("xi branch point".into()));
                    }
                    xi / fval * f_data.derivative().eval(zeta) / k
                };
                let zeta_bm1 = Complex64::from_polar(r.powf(beta - 1.0), (beta - 1.0) * phi);
                let dz_dzeta = beta * zeta_bm1 / (one - Complex64::i() * tau);
                Ok(dtau_dxi * dxi_dzeta / dz_dzeta)
            }
        }
    }

    /// `|Theta|^2 = |dtau/dz|^2 / (4 (Im tau)^3)`.
    pub fn cubic_norm_sq(&self, r: f64, phi: f64) -> Result<f64> {
        let dtau = self.cubic_coefficient(r, phi)?;
        let im = match &self.kind {
            SkKind::Cone { .. } => 1.0,
            _ => self.tau(r, phi)?.im,
        };
        Ok(dtau.norm_sqr() / (4.0 * im * im * im))
    }
}

fn xi_root(beta_num: u32, beta_den: u32) -> u32 {
    match (beta_num, beta_den) {
        (1, 2) => 1,
        (1, 4) | (3, 4) => 2,
        _ => 3,
    }
}

/// The monodromy data of a model: the integral conjugacy representative the
/// classification uses, and the real matrix adapted to the model's own
/// coordinates (whose Mobius action matches the continuation of tau).
pub struct ModelMonodromy {
    pub integral_class: Sl2,
    pub real_rep: [[f64; 2]; 2],
}

pub fn monodromy_of_model(model: &SkModel) -> ModelMonodromy {
    match &model.kind {
        SkKind::Cone { beta } => {
            let a = 2.0 * std::f64::consts::PI * beta;
            let rot = [[a.cos(), -a.sin()], [a.sin(), a.cos()]];
            // integral class only exists for the admissible rational betas;
            // report the nearest integral rotation class when beta matches
            let class = integral_rotation_for(*beta).unwrap_or(Sl2::new(1, 0, 0, 1));
            ModelMonodromy { integral_class: class, real_rep: rot }
        }
        SkKind::TypeI { .. } => ModelMonodromy {
            integral_class: Sl2::new(1, 1, 0, 1),
            real_rep: [[1.0, 1.0], [0.0, 1.0]],
        },
        SkKind::TypeII { .. } => ModelMonodromy {
            integral_class: Sl2::new(-1, -1, 0, -1),
            real_rep: [[-1.0, -1.0], [0.0, -1.0]],
        },
        SkKind::TypeIII { beta_num, beta_den, .. } => {
            let beta = *beta_num as f64 / *beta_den as f64;
            let a = 2.0 * std::f64::consts::PI * beta;
            ModelMonodromy {
                integral_class: integral_rotation_for(beta).expect("admissible beta"),
                real_rep: [[a.cos(), -a.sin()], [a.sin(), a.cos()]],
            }
        }
    }
}

/// The integral rotation representative for the admissible angles.
fn integral_rotation_for(beta: f64) -> Option<Sl2> {
    let table: [(f64, Sl2); 8] = [
        (1.0, Sl2::new(1, 0, 0, 1)),
        (0.5, Sl2::new(-1, 0, 0, -1)),
        (0.25, Sl2::new(0, -1, 1, 0)),
        (0.75, Sl2::new(0, 1, -1, 0)),
        (1.0 / 6.0, Sl2::new(1, -1, 1, 0)),
        (1.0 / 3.0, Sl2::new(0, -1, 1, -1)),
        (2.0 / 3.0, Sl2::new(-1, 1, -1, 0)),
        (5.0 / 6.0, Sl2::new(0, 1, -1, 1)),
    ];
    table
        .iter()
        .find(|(b, _)| (b - beta).abs() < 1e-12)
        .map(|(_, m)| m.clone())
}

/// Continuation check: transport tau once around the puncture and compare
/// with the Mobius action of the model's real monodromy matrix
/// `(d tau + c)/(b tau + a)` for `A = [[d, c], [b, a]]` reading
/// `[[a, b], [c, d]]` as the (z, w) matrix. Returns the sup deviation over
/// probe radii.
pub fn monodromy_continuation_residual(model: &SkModel) -> Result<f64> {
    let mon = monodromy_of_model(model);
    let m = mon.real_rep;
    // A_gamma = [[d, c], [b, a]] acts by tau -> (a11 tau + a12)/(a21 tau + a22)
    let act = |t: Complex64| (m[0][0] * t + m[0][1]) / (m[1][0] * t + m[1][1]);
    let mut worst = 0.0f64;
    for i in 0..5 {
        let r = model.r_min + (model.r_max - model.r_min) * (i as f64 + 0.5) / 5.0;
        let phi0 = 0.3;
        let t0 = model.tau(r, phi0)?;
        let t1 = model.tau(r, phi0 + 2.0 * std::f64::consts::PI)?;
        let expect = act(t0);
        worst = worst.max((t1 - expect).norm());
    }
    Ok(worst)
}

/// Cayley-transform consistency: `|xi| < 1` iff `Im tau > 0` and the round
/// trip `tau -> xi -> tau` is exact; sup deviation over probes.
pub fn cayley_round_trip_residual(model: &SkModel) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..7 {
        let r = model.r_min + (model.r_max - model.r_min) * (i as f64 + 0.5) / 7.0;
        for j in 0..5 {
            let phi = 2.0 * std::f64::consts::PI * model.lift_turns as f64 * j as f64 / 5.0;
            let tau = model.tau(r, phi)?;
            let xi = (tau - Complex64::i()) / (tau + Complex64::i());
            if (tau.im > 0.0) != (xi.norm() < 1.0) {
                return Err(Error::NotKahler { radius: r });
            }
            let back = Complex64::i() * (Complex64::new(1.0, 0.0) + xi)
                / (Complex64::new(1.0, 0.0) - xi);
            worst = worst.max((back - tau).norm());
        }
    }
    Ok(worst)
}

/// Scalar curvature `S = 2K` of the conformal metric by central differences
/// in log-polar coordinates `w = log zeta`: with the conformal factor
/// `mu = lambda e^{2u}` in the w-chart, `K = -(Delta_w log mu)/(2 mu)`.
/// Cone densities are exactly log-linear in u, so their differences vanish
/// to round-off.
pub fn scalar_curvature_fd(model: &SkModel, r: f64, phi: f64, hu: f64) -> Result<f64> {
    let u0 = r.ln();
    let logmu = |u: f64, p: f64| -> Result<f64> {
        let rr = u.exp();
        Ok(model.density(rr, p)?.ln() + 2.0 * u)
    };
    let l0 = logmu(u0, phi)?;
    let lup = logmu(u0 + hu, phi)?;
    let lum = logmu(u0 - hu, phi)?;
    let lpp = logmu(u0, phi + hu)?;
    let lpm = logmu(u0, phi - hu)?;
    let lap = (lup - 2.0 * l0 + lum) / (hu * hu) + (lpp - 2.0 * l0 + lpm) / (hu * hu);
    let mu = model.density(r, phi)? * (2.0 * u0).exp();
    Ok(-lap / mu)
}

/// Max relative mismatch of `S = 4 |Theta|^2` over an interior ring.
pub fn verify_curvature_identity(model: &SkModel, n_r: usize, n_phi: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    let span = model.r_max / model.r_min;
    let hu = span.ln() / n_r as f64 * 0.5;
    for i in 1..n_r {
        let r = model.r_min * span.powf(i as f64 / n_r as f64);
        for j in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
            let s = scalar_curvature_fd(model, r, phi, hu)?;
            let theta2 = model.cubic_norm_sq(r, phi)?;
            let denom = s.abs().max(4.0 * theta2).max(1e-8);
            worst = worst.max((s - 4.0 * theta2).abs() / denom);
        }
    }
    Ok(worst)
}

/// Tangent-cone angle by the circumference/radius ratio near the puncture:
/// the fitted ratio tends to `2 pi beta`.
pub fn tangent_cone_angle(model: &SkModel, probe_radius: f64) -> Result<f64> {
    // circumference at coordinate radius eps
    let circ = adaptive_simpson(
        &|phi: f64| model.density(probe_radius, phi).map(|l| l.sqrt()).unwrap_or(f64::NAN) * probe_radius,
        0.0,
        2.0 * std::f64::consts::PI,
        1e-10,
    );
    // geodesic radius: integrate sqrt(lambda) along a ray with a graded
    // rule (the log models have an integrable endpoint blow-up)
    let srad = graded_integral(
        &|r: f64| {
            if r <= 0.0 {
                0.0
            } else {
                model.density(r, 0.1).map(|l| l.sqrt()).unwrap_or(0.0)
            }
        },
        0.0,
        probe_radius,
        1e-10,
        900,
    );
    Ok(circ / srad)
}

/// Hessian-potential data on an affine chart: `W = Hess(phi)` with
/// `det W = 1` after normalization, plus the complex structure matrix.
pub struct HessianData {
    pub w: [[f64; 2]; 2],
    pub det: f64,
    pub j: [[f64; 2]; 2],
}

/// Evaluate the semiflat Hessian data of a convex potential at a point by
/// central differences. `NotConvex` if the Hessian fails positivity,
/// `NotNormalized` if `det W` deviates from 1 beyond `det_tol`.
pub fn hessian_form(
    phi: &dyn Fn(f64, f64) -> f64,
    x: [f64; 2],
    h: f64,
    det_tol: Option<f64>,
) -> Result<HessianData> {
    let w11 = (phi(x[0] + h, x[1]) - 2.0 * phi(x[0], x[1]) + phi(x[0] - h, x[1])) / (h * h);
    let w22 = (phi(x[0], x[1] + h) - 2.0 * phi(x[0], x[1]) + phi(x[0], x[1] - h)) / (h * h);
    let w12 = (phi(x[0] + h, x[1] + h) - phi(x[0] + h, x[1] - h) - phi(x[0] - h, x[1] + h)
        + phi(x[0] - h, x[1] - h))
        / (4.0 * h * h);
    let det = w11 * w22 - w12 * w12;
    if w11 <= 0.0 || det <= 0.0 {
        return Err(Error::NotConvex { index: 0 });
    }
    if let Some(tol) = det_tol {
        if (det - 1.0).abs() > tol {
            return Err(Error::NotNormalized { deviation: (det - 1.0).abs() });
        }
    }
    // J dx1 = -w12/s dx1 + w11/s dx2, J dx2 = -w22/s dx1 + w12/s dx2 with
    // s = sqrt(det W) so that J^2 = -Id holds for any positive Hessian
    let s = det.sqrt();
    let j = [[-w12 / s, w11 / s], [-w22 / s, w12 / s]];
    Ok(HessianData { w: [[w11, w12], [w12, w22]], det, j })
}
