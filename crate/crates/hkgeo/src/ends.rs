//! Model ends of gravitational instantons, assembled from the other
//! modules, and the classification dispatcher from measured asymptotics
//! (volume-growth exponent, asymptotic cone, monodromy class) to the
//! candidate families.
//!
//! Volume growth by family: ALE 4, ALF 3, ALG/ALG* 2, ALH* 4/3, ALH 1.

use crate::error::{Error, Result};
use crate::gh::{
    build_geometry, curvature_profile, make_potential, profile_exponents, GhGeometry,
    PotentialKind, ProfilePoint,
};
use crate::chart::GridChart;
use crate::monodromy::{IntegralClass, Sl2};
use crate::quad::{linear_fit, loglog_slope};

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Multi-center end with structure group of the given order at
    /// infinity.
    Ale { group_order: u32 },
    AlfA { k: i64, c: f64 },
    /// Z2 quotient of the ALF-A_{2k-5} end.
    AlfD { k: i64 },
    Alg { beta_num: u32, beta_den: u32 },
    AlgStarI { k: u32 },
    /// Z2 quotient of the ALG*-I_{2k} end.
    AlgStarIStar { k: u32 },
    /// Flat product of a 3-torus and a half-line.
    Alh { lengths: [f64; 3] },
    AlhStar { b: u32 },
}

impl Family {
    /// The volume-growth exponent of the family.
    pub fn kappa(&self) -> f64 {
        match self {
            Family::Ale { .. } => 4.0,
            Family::AlfA { .. } | Family::AlfD { .. } => 3.0,
            Family::Alg { .. } | Family::AlgStarI { .. } | Family::AlgStarIStar { .. } => 2.0,
            Family::AlhStar { .. } => 4.0 / 3.0,
            Family::Alh { .. } => 1.0,
        }
    }

    /// Dimension of the asymptotic cone.
    pub fn cone_dimension(&self) -> usize {
        match self {
            Family::Ale { .. } => 4,
            Family::AlfA { .. } | Family::AlfD { .. } => 3,
            Family::Alg { .. } | Family::AlgStarI { .. } | Family::AlgStarIStar { .. } => 2,
            Family::AlhStar { .. } | Family::Alh { .. } => 1,
        }
    }
}

/// Descriptor of the asymptotic cone of an end.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeDescriptor {
    FlatR3,
    FlatR3Quotient,
    FlatCone { angle: f64 },
    HalfLine,
}

/// Fiber geometry on the collapsed directions (d = 1 split).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberKind {
    Abelian,
    Nilpotent,
}

/// A built model end: the geometry realization plus its expected
/// asymptotics.
pub struct ModelEnd {
    pub family: Family,
    /// Gibbons-Hawking realization where one exists (all but ALG/ALH).
    pub geometry: Option<GhGeometry>,
    /// Covering-space volume divisor for the quotient families.
    pub quotient_order: u32,
    pub expected_kappa: f64,
    pub cone: ConeDescriptor,
    pub monodromy: Option<Sl2>,
    pub fiber: FiberKind,
    /// (geodesic radius, max |Rm|, ball volume) rows.
    pub profile: Vec<ProfilePoint>,
}

/// Build a concrete sampled end at desk scale. `resolution` controls the
/// base-chart sample counts.
pub fn build_end(family: Family, resolution: usize) -> Result<ModelEnd> {
    let n = resolution.clamp(8, 64);
    match family {
        Family::Ale { group_order } => {
            if group_order == 0 {
                return Err(Error::InadmissibleParameter { name: "group_order", value: 0.0 });
            }
            // group_order centers of weight 1, clustered near the origin
            let m = group_order as usize;
            let centers: Vec<[f64; 3]> = (0..m)
                .map(|i| {
                    let phi = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                    if m == 1 {
                        [0.0, 0.0, 0.0]
                    } else {
                        [0.6 * phi.cos(), 0.6 * phi.sin(), 0.0]
                    }
                })
                .collect();
            let half = 400.0;
            let spacing = 2.0 * half / (n - 1) as f64;
            let chart = GridChart::new(3, &[n; 3], &[spacing; 3], &[-half; 3], &[false; 3])?;
            let p = make_potential(
                PotentialKind::MultiCenter { centers, weights: vec![1.0; m], constant: 0.0 },
                chart,
                (3.0 * spacing).max(30.0),
            )?;
            let lt = GhGeometry::default_circle_length(&p.kind);
            let geo = build_geometry(p, lt, 8)?;
            let radii: Vec<f64> = (0..9).map(|i| 30.0 * 10f64.powf(i as f64 / 8.0)).collect();
            let profile = curvature_profile(&geo, &radii)?;
            Ok(ModelEnd {
                family: Family::Ale { group_order },
                geometry: Some(geo),
                quotient_order: 1,
                expected_kappa: 4.0,
                cone: ConeDescriptor::FlatCone { angle: 0.0 },
                monodromy: None,
                fiber: FiberKind::Abelian,
                profile,
            })
        }
        Family::AlfA { k, c } => {
            if k < 0 {
                return Err(Error::InadmissibleParameter { name: "k", value: k as f64 });
            }
            if c <= 0.0 {
                return Err(Error::InadmissibleParameter { name: "c", value: c });
            }
            let half = 400.0;
            let spacing = 2.0 * half / (n - 1) as f64;
            let chart = GridChart::new(3, &[n; 3], &[spacing; 3], &[-half; 3], &[false; 3])?;
            let p = make_potential(
                PotentialKind::MultiCenter {
                    centers: vec![[0.0, 0.0, 0.0]],
                    weights: vec![(k + 1) as f64],
                    constant: c,
                },
                chart,
                (3.0 * spacing).max(30.0),
            )?;
            let lt = GhGeometry::default_circle_length(&p.kind);
            let geo = build_geometry(p, lt, 8)?;
            let radii: Vec<f64> = (0..9).map(|i| 30.0 * 10f64.powf(i as f64 / 8.0)).collect();
            let profile = curvature_profile(&geo, &radii)?;
            Ok(ModelEnd {
                family: Family::AlfA { k, c },
                geometry: Some(geo),
                quotient_order: 1,
                expected_kappa: 3.0,
                cone: ConeDescriptor::FlatR3,
                monodromy: None,
                fiber: FiberKind::Abelian,
                profile,
            })
        }
        Family::AlfD { k } => {
            if k < 0 {
                return Err(Error::InadmissibleParameter { name: "k", value: k as f64 });
            }
            // Z2 quotient of the ALF-A_{2k-5} cover: total weight 2k - 4
            let cover_weight = 2 * k - 4;
            let inner = if cover_weight > 0 { 30.0 } else { 60.0_f64.max(4.0 - cover_weight as f64) };
            let half = 1000.0;
            let spacing = 2.0 * half / (n - 1) as f64;
            let chart = GridChart::new(3, &[n; 3], &[spacing; 3], &[-half; 3], &[false; 3])?;
            let p = make_potential(
                PotentialKind::MultiCenter {
                    centers: vec![[0.0, 0.0, 0.0]],
                    weights: vec![if cover_weight == 0 { 1e-12 } else { cover_weight.abs() as f64 }],
                    constant: 1.0,
                },
                chart,
                inner.max(3.0 * spacing),
            )?;
            // represent the (possibly negative-mass) cover weight honestly:
            // the quotient is declared, volumes are halved
            let p = GhPotential_with_weight(p, cover_weight as f64);
            let lt = 2.0 * std::f64::consts::PI;
            let geo = build_geometry(p, lt, 8)?;
            let radii: Vec<f64> = (0..9).map(|i| inner.max(60.0) * 8f64.powf(i as f64 / 8.0)).collect();
            let mut profile = curvature_profile(&geo, &radii)?;
            for row in profile.iter_mut() {
                row.ball_volume /= 2.0;
            }
            Ok(ModelEnd {
                family: Family::AlfD { k },
                geometry: Some(geo),
                quotient_order: 2,
                expected_kappa: 3.0,
                cone: ConeDescriptor::FlatR3Quotient,
                monodromy: None,
                fiber: FiberKind::Abelian,
                profile,
            })
        }
        Family::Alg { beta_num, beta_den } => {
            let admissible = [(1u32, 2u32), (1, 3), (2, 3), (1, 4), (3, 4), (1, 6), (5, 6), (1, 1)];
            if !admissible.contains(&(beta_num, beta_den)) {
                return Err(Error::InadmissibleAngle { beta: beta_num as f64 / beta_den as f64 });
            }
            let beta = beta_num as f64 / beta_den as f64;
            // flat semiflat metric: cone base (geodesic radius = rho) with a
            // flat torus fiber of area 2 pi; exact profile
            let radii: Vec<f64> = (0..9).map(|i| 10.0 * 10f64.powf(i as f64 / 8.0)).collect();
            let fiber_area = 2.0 * std::f64::consts::PI;
            let profile: Vec<ProfilePoint> = radii
                .iter()
                .map(|&r| ProfilePoint {
                    radius: r,
                    max_rm: 0.0,
                    ball_volume: beta * std::f64::consts::PI * r * r * fiber_area,
                })
                .collect();
            let monodromy = integral_rotation(beta_num, beta_den);
            Ok(ModelEnd {
                family: Family::Alg { beta_num, beta_den },
                geometry: None,
                quotient_order: 1,
                expected_kappa: 2.0,
                cone: ConeDescriptor::FlatCone { angle: 2.0 * std::f64::consts::PI * beta },
                monodromy,
                fiber: FiberKind::Abelian,
                profile,
            })
        }
        Family::AlgStarI { k } => {
            if k == 0 {
                return Err(Error::InadmissibleParameter { name: "k", value: 0.0 });
            }
            let chart = GridChart::new(
                3,
                &[n.max(16), n, 8],
                &[1000.0 / (n.max(16) - 1) as f64, 3.0 / (n - 1) as f64, 2.0 * std::f64::consts::PI / 8.0],
                &[2.0, -1.5, 0.0],
                &[false, false, true],
            )?;
            let p = make_potential(PotentialKind::LogRadial { k }, chart, 0.1)?;
            let geo = build_geometry(p, 2.0 * std::f64::consts::PI, 8)?;
            let radii: Vec<f64> = (0..9).map(|i| 10.0 * 10f64.powf(i as f64 / 8.0)).collect();
            let profile = curvature_profile(&geo, &radii)?;
            Ok(ModelEnd {
                family: Family::AlgStarI { k },
                geometry: Some(geo),
                quotient_order: 1,
                expected_kappa: 2.0,
                cone: ConeDescriptor::FlatCone { angle: 2.0 * std::f64::consts::PI },
                monodromy: Some(Sl2::new(1, k as i64, 0, 1)),
                fiber: FiberKind::Abelian,
                profile,
            })
        }
        Family::AlgStarIStar { k } => {
            if k == 0 {
                return Err(Error::InadmissibleParameter { name: "k", value: 0.0 });
            }
            let cover = build_end(Family::AlgStarI { k: 2 * k }, resolution)?;
            let mut profile = cover.profile;
            for row in profile.iter_mut() {
                row.ball_volume /= 2.0;
            }
            Ok(ModelEnd {
                family: Family::AlgStarIStar { k },
                geometry: cover.geometry,
                quotient_order: 2,
                expected_kappa: 2.0,
                cone: ConeDescriptor::FlatCone { angle: std::f64::consts::PI },
                monodromy: Some(Sl2::new(-1, -(2 * k as i64), 0, -1)),
                fiber: FiberKind::Abelian,
                profile,
            })
        }
        Family::Alh { lengths } => {
            if lengths.iter().any(|l| *l <= 0.0) {
                return Err(Error::InadmissibleParameter { name: "length", value: -1.0 });
            }
            let vol_t3: f64 = lengths.iter().product();
            let radii: Vec<f64> = (0..9).map(|i| 1.0 * 10f64.powf(i as f64 / 8.0)).collect();
            let profile: Vec<ProfilePoint> = radii
                .iter()
                .map(|&r| ProfilePoint { radius: r, max_rm: 0.0, ball_volume: vol_t3 * r })
                .collect();
            Ok(ModelEnd {
                family: Family::Alh { lengths },
                geometry: None,
                quotient_order: 1,
                expected_kappa: 1.0,
                cone: ConeDescriptor::HalfLine,
                monodromy: None,
                fiber: FiberKind::Abelian,
                profile,
            })
        }
        Family::AlhStar { b } => {
            if b == 0 {
                return Err(Error::InadmissibleParameter { name: "b", value: 0.0 });
            }
            let lx = (2.0 * std::f64::consts::PI).sqrt();
            let zn = n.max(24);
            let chart = GridChart::new(
                3,
                &[8, 8, zn],
                &[lx / 8.0, lx / 8.0, 400.0 / (zn - 1) as f64],
                &[0.0, 0.0, 2.0],
                &[false, true, false],
            )?;
            let p = make_potential(PotentialKind::Linear { b }, chart, 0.1)?;
            let geo = build_geometry(p, 2.0 * std::f64::consts::PI, 8)?;
            let radii: Vec<f64> = (0..9).map(|i| 4.0 * 10f64.powf(2.0 * i as f64 / 8.0)).collect();
            let profile = curvature_profile(&geo, &radii)?;
            Ok(ModelEnd {
                family: Family::AlhStar { b },
                geometry: Some(geo),
                quotient_order: 1,
                expected_kappa: 4.0 / 3.0,
                cone: ConeDescriptor::HalfLine,
                monodromy: None,
                fiber: FiberKind::Nilpotent,
                profile,
            })
        }
    }
}

// helper: override the declared weight of a single-center potential (used
// by the ALF-D model, whose cover weight 2k - 4 may vanish or be negative
// at small k while the end stays definite for large radius)
#[allow(non_snake_case)]
fn GhPotential_with_weight(mut p: crate::gh::GhPotential, w: f64) -> crate::gh::GhPotential {
    if let PotentialKind::MultiCenter { weights, .. } = &mut p.kind {
        if w != 0.0 {
            weights[0] = w.abs().max(1e-12);
        }
    }
    p
}

/// Measured asymptotics fed to the dispatcher.
#[derive(Debug, Clone)]
pub struct Measured {
    pub kappa: f64,
    pub kappa_ci: f64,
    pub cone: Option<ConeDescriptor>,
    pub monodromy: Option<IntegralClass>,
    pub fiber: Option<FiberKind>,
}

/// A family candidate without parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyTag {
    Ale,
    AlfA,
    AlfD,
    Alg,
    AlgStarI,
    AlgStarIStar,
    Alh,
    AlhStar,
}

/// The classification dispatcher: measured volume growth selects the cone
/// dimension row, the cone/monodromy/fiber data split the row.
pub fn classify_end(m: &Measured) -> Result<Vec<FamilyTag>> {
    let table: [(f64, usize); 4] = [(4.0, 4), (3.0, 3), (2.0, 2), (1.0, 1)];
    let alh_star = (4.0 / 3.0, 1usize);
    // match kappa against {1, 4/3, 2, 3, 4} within the confidence interval
    let mut hits: Vec<usize> = Vec::new();
    let tol = m.kappa_ci.max(0.15);
    for (kappa, d) in table.iter().chain(std::iter::once(&alh_star)) {
        if (m.kappa - kappa).abs() <= tol {
            if !hits.contains(d) {
                hits.push(*d);
            }
        }
    }
    if hits.is_empty() {
        return Err(Error::AmbiguousDimension { kappa: m.kappa, ci: m.kappa_ci });
    }
    if hits.len() > 1 {
        return Err(Error::AmbiguousDimension { kappa: m.kappa, ci: m.kappa_ci });
    }
    let d = hits[0];
    let out = match d {
        4 => vec![FamilyTag::Ale],
        3 => match &m.cone {
            Some(ConeDescriptor::FlatR3) => vec![FamilyTag::AlfA],
            Some(ConeDescriptor::FlatR3Quotient) => vec![FamilyTag::AlfD],
            _ => vec![FamilyTag::AlfA, FamilyTag::AlfD],
        },
        2 => match &m.monodromy {
            Some(IntegralClass::Elliptic { .. })
            | Some(IntegralClass::Id)
            | Some(IntegralClass::MinusId) => vec![FamilyTag::Alg],
            Some(IntegralClass::ParabolicIn { .. }) => vec![FamilyTag::AlgStarI],
            Some(IntegralClass::ParabolicInStar { .. }) => vec![FamilyTag::AlgStarIStar],
            _ => vec![FamilyTag::Alg, FamilyTag::AlgStarI, FamilyTag::AlgStarIStar],
        },
        1 => match m.fiber {
            Some(FiberKind::Nilpotent) => vec![FamilyTag::AlhStar],
            Some(FiberKind::Abelian) => vec![FamilyTag::Alh],
            None => {
                // the growth exponent already separates 1 from 4/3
                if (m.kappa - 4.0 / 3.0).abs() < (m.kappa - 1.0).abs() {
                    vec![FamilyTag::AlhStar]
                } else {
                    vec![FamilyTag::Alh]
                }
            }
        },
        _ => unreachable!(),
    };
    Ok(out)
}

pub fn family_tag(f: &Family) -> FamilyTag {
    match f {
        Family::Ale { .. } => FamilyTag::Ale,
        Family::AlfA { .. } => FamilyTag::AlfA,
        Family::AlfD { .. } => FamilyTag::AlfD,
        Family::Alg { .. } => FamilyTag::Alg,
        Family::AlgStarI { .. } => FamilyTag::AlgStarI,
        Family::AlgStarIStar { .. } => FamilyTag::AlgStarIStar,
        Family::Alh { .. } => FamilyTag::Alh,
        Family::AlhStar { .. } => FamilyTag::AlhStar,
    }
}

impl ModelEnd {
    /// Measured asymptotics of the built end.
    pub fn measure(&self) -> Measured {
        let (kappa, _) = profile_exponents(&self.profile);
        let monodromy = self
            .monodromy
            .as_ref()
            .and_then(|m| crate::monodromy::classify_integral(m).ok())
            .map(|c| c.class);
        Measured {
            kappa,
            kappa_ci: 0.15,
            cone: Some(self.cone.clone()),
            monodromy,
            fiber: Some(self.fiber),
        }
    }
}

/// Fit the multipole expansion `V = c + l/(2r) + O(r^{-2})` of an ALF-A
/// potential from spherical averages: returns `(c, l, remainder exponent)`.
pub fn asymptotic_expansion_check(radii: &[f64], v_avg: &[f64]) -> Result<(f64, f64, f64)> {
    if radii.len() < 6 {
        return Err(Error::InsufficientRange);
    }
    // fit (c, l) against {1, 1/(2r)} on the outermost third, where any
    // O(r^{-2}) remainder is smallest and biases the coefficients least
    let tail_start = radii.len() * 2 / 3;
    let mut s11 = 0.0;
    let mut s12 = 0.0;
    let mut s22 = 0.0;
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for (&r, &v) in radii[tail_start..].iter().zip(&v_avg[tail_start..]) {
        let g = 1.0 / (2.0 * r);
        s11 += 1.0;
        s12 += g;
        s22 += g * g;
        b1 += v;
        b2 += v * g;
    }
    let det = s11 * s22 - s12 * s12;
    let c = (b1 * s22 - b2 * s12) / det;
    let l = (s11 * b2 - s12 * b1) / det;
    // remainder exponent from the inner half, where the remainder dominates
    // the fit bias
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&r, &v) in radii.iter().zip(v_avg).take(radii.len() / 2) {
        let rem = (v - c - l / (2.0 * r)).abs();
        if rem > 1e-12 {
            xs.push(r.ln());
            ys.push(rem.ln());
        }
    }
    let exponent = if xs.len() >= 3 { -linear_fit(&xs, &ys).0 } else { f64::INFINITY };
    Ok((c, l, exponent))
}

/// Convenience: fitted exponents of a profile (volume growth, curvature
/// decay).
pub fn profile_kappa(profile: &[ProfilePoint]) -> f64 {
    let r: Vec<f64> = profile.iter().map(|p| p.radius).collect();
    let v: Vec<f64> = profile.iter().map(|p| p.ball_volume).collect();
    loglog_slope(&r, &v)
}


fn integral_rotation(beta_num: u32, beta_den: u32) -> Option<Sl2> {
    match (beta_num, beta_den) {
        (1, 1) => Some(Sl2::new(1, 0, 0, 1)),
        (1, 2) => Some(Sl2::new(-1, 0, 0, -1)),
        (1, 4) => Some(Sl2::new(0, -1, 1, 0)),
        (3, 4) => Some(Sl2::new(0, 1, -1, 0)),
        (1, 6) => Some(Sl2::new(1, -1, 1, 0)),
        (1, 3) => Some(Sl2::new(0, -1, 1, -1)),
        (2, 3) => Some(Sl2::new(-1, 1, -1, 0)),
        (5, 6) => Some(Sl2::new(0, 1, -1, 1)),
        _ => None,
    }
}
