//! Numerical checks of the quantitative geometric inequalities.
//!
//! Each check draws seeded samples, records the worst violation together
//! with the inputs that produced it, and serializes those inputs so the
//! violation can be recomputed later from the report alone.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::groups::{
    haar_sample_rng, tangent_sample_rng, Component, GroupElement, GroupKind, GroupSpec, HomSpace, SubgroupSpec,
};
use crate::invariants::kappa_known;
use crate::matcore::{expm_skew_raw, op_norm, schatten_norm, CMatrix, DenseMatrix, Field, NormSpec, C64};
use crate::metrics::{
    curve_length, exact_raw, geodesic_point, intrinsic_dist, rho_raw, upper_raw, Curve, QuotientOptions,
};

/// Column-major matrix entries, enough to rebuild a witness exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixData {
    pub n: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixData {
    pub fn from_matrix(m: &CMatrix) -> Self {
        MatrixData { n: m.nrows(), re: m.iter().map(|z| z.re).collect(), im: m.iter().map(|z| z.im).collect() }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.re.len() != self.n * self.n || self.im.len() != self.re.len() {
            return invalid("witness matrix has the wrong number of entries");
        }
        Ok(CMatrix::from_iterator(self.n, self.n, self.re.iter().zip(&self.im).map(|(a, b)| C64::new(*a, *b))))
    }
}

/// Serializable description of a space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceData {
    pub group: GroupSpec,
    pub subgroup: SubgroupSpec,
    pub norm: String,
}

impl SpaceData {
    pub fn from_space(space: &HomSpace) -> Self {
        SpaceData { group: space.group().clone(), subgroup: space.subgroup().clone(), norm: space.norm().to_string() }
    }

    pub fn to_space(&self) -> Result<HomSpace> {
        HomSpace::new(self.group.clone(), self.subgroup.clone(), self.norm.parse()?)
    }
}

/// Inputs of the worst sample of a check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Witness {
    DistanceIdentity { u: MatrixData, v: MatrixData },
    ExpLipschitz { x: MatrixData, y: MatrixData, theta: f64 },
    CommutatorBound { x: MatrixData, y: MatrixData, norm: String },
    CommutatorLimit { x: MatrixData, y: MatrixData, t: f64 },
    LocalInjectivity { space: SpaceData, x: MatrixData, x_prime: MatrixData, lambda: f64 },
    GeodesicMinimality { x: MatrixData, points: Vec<MatrixData> },
    CircleQuotient { u: MatrixData, v: MatrixData },
}

impl Witness {
    /// Recomputes the violation recorded for this witness.
    pub fn violation(&self) -> Result<f64> {
        match self {
            Witness::DistanceIdentity { u, v } => distance_identity_gap(&u.to_matrix()?, &v.to_matrix()?),
            Witness::ExpLipschitz { x, y, theta } => {
                let r = exp_ratio(&x.to_matrix()?, &y.to_matrix()?);
                Ok(lipschitz_violation(r, exp_contraction_bound(*theta)))
            }
            Witness::CommutatorBound { x, y, norm } => commutator_gap(&x.to_matrix()?, &y.to_matrix()?, &norm.parse()?),
            Witness::CommutatorLimit { x, y, t } => {
                Ok((commutator_limit_ratio(&x.to_matrix()?, &y.to_matrix()?, *t)? - 1.0).abs())
            }
            Witness::LocalInjectivity { space, x, x_prime, lambda } => {
                let space = space.to_space()?;
                injectivity_violation(&space, &x.to_matrix()?, &x_prime.to_matrix()?, *lambda)
            }
            Witness::GeodesicMinimality { x, points } => {
                let x = x.to_matrix()?;
                let group = GroupSpec::new(GroupKind::U, x.nrows())?;
                let pts = points
                    .iter()
                    .map(|p| Ok(GroupElement::from_raw(&group, p.to_matrix()?)))
                    .collect::<Result<Vec<_>>>()?;
                minimality_violation(&x, pts)
            }
            Witness::CircleQuotient { u, v } => circle_gap(&u.to_matrix()?, &v.to_matrix()?),
        }
    }

    pub fn to_b64(&self) -> String {
        B64.encode(serde_json::to_vec(self).expect("witness serializes"))
    }

    pub fn from_b64(text: &str) -> Result<Self> {
        let bytes = B64.decode(text).map_err(|e| Error::InvalidArgument(format!("bad base64 witness: {e}")))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::InvalidArgument(format!("bad witness JSON: {e}")))
    }
}

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub samples: usize,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub witness_b64: Option<String>,
    pub passed: bool,
    /// Check-specific summary statistics.
    pub stats: BTreeMap<String, f64>,
}

impl CheckReport {
    pub fn witness(&self) -> Result<Option<Witness>> {
        self.witness_b64.as_deref().map(Witness::from_b64).transpose()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Sample {
    violation: f64,
    witness: Witness,
    stats: Vec<f64>,
}

/// Worst sample, lowest index on ties, independent of evaluation order.
fn worst(samples: &[Sample]) -> Option<&Sample> {
    samples.iter().fold(None, |best: Option<&Sample>, s| match best {
        Some(b) if b.violation >= s.violation => Some(b),
        _ => Some(s),
    })
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn run_samples(samples: usize, f: impl Fn(usize) -> Result<Sample> + Sync + Send) -> Result<Vec<Sample>> {
    (0..samples).into_par_iter().map(f).collect::<Vec<_>>().into_iter().collect()
}

fn finish(
    name: &str,
    params: Vec<(&str, serde_json::Value)>,
    tolerance: f64,
    results: &[Sample],
    stats: BTreeMap<String, f64>,
) -> CheckReport {
    let w = worst(results);
    let worst_violation = w.map(|s| s.violation).unwrap_or(0.0);
    CheckReport {
        name: name.to_string(),
        params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        samples: results.len(),
        worst_violation,
        tolerance,
        witness_b64: w.map(|s| s.witness.to_b64()),
        passed: worst_violation <= tolerance,
        stats,
    }
}

fn group_u(n: usize) -> Result<GroupSpec> {
    GroupSpec::new(GroupKind::U, n)
}

fn whole_u(n: usize) -> Result<HomSpace> {
    HomSpace::whole_group(group_u(n)?, NormSpec::Operator)
}

fn skew_sample(space: &HomSpace, radius: f64, rng: &mut ChaCha8Rng) -> Result<CMatrix> {
    Ok(tangent_sample_rng(space, Component::Full, radius, rng)?.matrix().as_matrix().clone())
}

// ---- distance identity -------------------------------------------------

fn distance_identity_gap(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    let rho = rho_raw(&(u.adjoint() * v), &NormSpec::Operator)?;
    let chord = (C64::new(1.0, 0.0) - C64::new(rho.cos(), rho.sin())).norm();
    Ok((op_norm(&(u - v)) - chord).abs())
}

/// `| ||u - v||_inf - |1 - e^{i rho(u, v)}| |` over Haar pairs in U(n).
/// Tolerance 1e-8.
pub fn check_distance_identity(n: usize, samples: usize, rng_seed: u64) -> Result<CheckReport> {
    let g = group_u(n)?;
    let results = run_samples(samples, |i| {
        let mut rng = sample_rng(rng_seed, i);
        let u = haar_sample_rng(&g, &mut rng).matrix().as_matrix().clone();
        let v = haar_sample_rng(&g, &mut rng).matrix().as_matrix().clone();
        Ok(Sample {
            violation: distance_identity_gap(&u, &v)?,
            witness: Witness::DistanceIdentity { u: MatrixData::from_matrix(&u), v: MatrixData::from_matrix(&v) },
            stats: Vec::new(),
        })
    })?;
    Ok(finish("distance_identity", vec![("n", n.into()), ("seed", rng_seed.into())], 1e-8, &results, BTreeMap::new()))
}

// ---- exponential map is bi-Lipschitz on small balls ----------------------

/// Largest admissible ball radius: the first product factor vanishes at 2pi/3.
pub const EXP_LIPSCHITZ_MAX_THETA: f64 = 2.0 * PI / 3.0;

/// Lower bound on `prod_{k >= 1} (1 - |1 - e^{i theta / 2^k}|)`: the partial
/// product up to `K`, times `1 - theta / 2^K`, which bounds the tail below.
/// `K` is the first index with `theta / 2^K < 1e-12`.
pub fn exp_contraction_bound(theta: f64) -> f64 {
    let mut prod = 1.0;
    let mut k = 1;
    loop {
        let step = theta / 2f64.powi(k);
        prod *= 1.0 - 2.0 * (step / 2.0).sin();
        if step < 1e-12 {
            return prod * (1.0 - step);
        }
        k += 1;
    }
}

fn exp_ratio(x: &CMatrix, y: &CMatrix) -> f64 {
    let num = op_norm(&(expm_skew_raw(x) - expm_skew_raw(y)));
    num / op_norm(&(x - y))
}

fn lipschitz_violation(ratio: f64, bound: f64) -> f64 {
    (bound - 1e-6 - ratio).max(ratio - (1.0 + 1e-9))
}

/// Ratios `||e^x - e^y|| / ||x - y||` over pairs in the operator-norm ball of
/// radius theta in u(n): each must lie in `[bound - 1e-6, 1 + 1e-9]`.
pub fn check_exp_lipschitz(n: usize, theta: f64, samples: usize, rng_seed: u64) -> Result<CheckReport> {
    if !(theta > 0.0 && theta < EXP_LIPSCHITZ_MAX_THETA) {
        return Err(Error::OutOfRange(format!("theta must lie in (0, 2pi/3), got {theta}")));
    }
    let space = whole_u(n)?;
    let bound = exp_contraction_bound(theta);
    let results = run_samples(samples, |i| {
        let mut rng = sample_rng(rng_seed, i);
        let x = skew_sample(&space, theta, &mut rng)?;
        let y = skew_sample(&space, theta, &mut rng)?;
        let r = exp_ratio(&x, &y);
        Ok(Sample {
            violation: lipschitz_violation(r, bound),
            witness: Witness::ExpLipschitz { x: MatrixData::from_matrix(&x), y: MatrixData::from_matrix(&y), theta },
            stats: vec![r],
        })
    })?;
    let ratios: Vec<f64> = results.iter().map(|s| s.stats[0]).collect();
    let mut stats = BTreeMap::new();
    stats.insert("min_ratio".into(), ratios.iter().copied().fold(f64::INFINITY, f64::min));
    stats.insert("max_ratio".into(), ratios.iter().copied().fold(0.0, f64::max));
    stats.insert("product_bound".into(), bound);
    Ok(finish(
        "exp_lipschitz",
        vec![("n", n.into()), ("theta", theta.into()), ("seed", rng_seed.into())],
        0.0,
        &results,
        stats,
    ))
}

// ---- commutator bound --------------------------------------------------

fn commutator(x: &CMatrix, y: &CMatrix) -> CMatrix {
    x * y - y * x
}

fn norm_of(m: &CMatrix, norm: &NormSpec) -> f64 {
    schatten_norm(&DenseMatrix::from_parts(Field::Complex, m.clone()), norm)
}

/// `rho(e^{x+y}, e^x e^y) - ||[x, y]||`.
fn commutator_gap(x: &CMatrix, y: &CMatrix, norm: &NormSpec) -> Result<f64> {
    let a = expm_skew_raw(&(x + y));
    let b = expm_skew_raw(x) * expm_skew_raw(y);
    let g = group_u(x.nrows())?;
    let lhs = intrinsic_dist(&GroupElement::from_raw(&g, a), &GroupElement::from_raw(&g, b), norm)?;
    Ok(lhs - norm_of(&commutator(x, y), norm))
}

/// Largest radius accepted by [`check_commutator_bound`].
pub const COMMUTATOR_MAX_RADIUS: f64 = 0.7;

/// `rho(e^{x+y}, e^x e^y) <= ||[x, y]||` for the operator and Schatten-2
/// norms over pairs in the ball of the given radius. Tolerance 1e-8.
pub fn check_commutator_bound(n: usize, radius: f64, samples: usize, rng_seed: u64) -> Result<CheckReport> {
    if !(radius > 0.0 && radius <= COMMUTATOR_MAX_RADIUS) {
        return Err(Error::OutOfRange(format!("radius must lie in (0, 0.7], got {radius}")));
    }
    let space = whole_u(n)?;
    let norms = [NormSpec::Operator, NormSpec::Schatten(2.0)];
    let results = run_samples(samples, |i| {
        let mut rng = sample_rng(rng_seed, i);
        let x = skew_sample(&space, radius, &mut rng)?;
        let y = skew_sample(&space, radius, &mut rng)?;
        let mut best: Option<Sample> = None;
        for norm in &norms {
            let gap = commutator_gap(&x, &y, norm)?;
            if best.as_ref().is_none_or(|b| gap > b.violation) {
                best = Some(Sample {
                    violation: gap,
                    witness: Witness::CommutatorBound {
                        x: MatrixData::from_matrix(&x),
                        y: MatrixData::from_matrix(&y),
                        norm: norm.to_string(),
                    },
                    stats: Vec::new(),
                });
            }
        }
        Ok(best.expect("at least one norm"))
    })?;
    Ok(finish(
        "commutator_bound",
        vec![("n", n.into()), ("radius", radius.into()), ("seed", rng_seed.into())],
        1e-8,
        &results,
        BTreeMap::new(),
    ))
}

/// `psi(t) / (t^2 ||[x, y]||_inf)` with `psi(t) = rho(e^{t(x+y)}, e^{tx} e^{ty})`
/// in the operator norm.
pub fn commutator_limit_ratio(x: &CMatrix, y: &CMatrix, t: f64) -> Result<f64> {
    let c = op_norm(&commutator(x, y));
    if c == 0.0 {
        return invalid("x and y commute; the ratio is undefined");
    }
    let s = C64::new(t, 0.0);
    let gap = commutator_gap(&(x * s), &(y * s), &NormSpec::Operator)?;
    let psi = gap + op_norm(&commutator(&(x * s), &(y * s)));
    Ok(psi / (t * t * c))
}

/// Checks that `psi(t)/t^2` is within 10% of `||[x, y]||_inf` at the given
/// small `t`; violation is `|ratio - 1|`.
pub fn check_commutator_limit(n: usize, t: f64, samples: usize, rng_seed: u64) -> Result<CheckReport> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::OutOfRange(format!("t must lie in (0, 1], got {t}")));
    }
    let space = whole_u(n)?;
    let results = run_samples(samples, |i| {
        let mut rng = sample_rng(rng_seed, i);
        let x = skew_sample(&space, 1.0, &mut rng)?;
        let y = skew_sample(&space, 1.0, &mut rng)?;
        let r = commutator_limit_ratio(&x, &y, t)?;
        Ok(Sample {
            violation: (r - 1.0).abs(),
            witness: Witness::CommutatorLimit { x: MatrixData::from_matrix(&x), y: MatrixData::from_matrix(&y), t },
            stats: vec![r],
        })
    })?;
    let ratios: Vec<f64> = results.iter().map(|s| s.stats[0]).collect();
    let mut stats = BTreeMap::new();
    stats.insert("min_ratio".into(), ratios.iter().copied().fold(f64::INFINITY, f64::min));
    stats.insert("max_ratio".into(), ratios.iter().copied().fold(0.0, f64::max));
    Ok(finish(
        "commutator_limit",
        vec![("n", n.into()), ("t", t.into()), ("seed", rng_seed.into())],
        0.1,
        &results,
        stats,
    ))
}

// ---- local injectivity of q . exp on X -----------------------------------

/// `lambda ||x - x'|| - 1e-6 - d`, where `d` is the exact quotient distance
/// when known and the optimizer's upper bound otherwise. Positive values are
/// genuine violations: the true distance is at most `d`.
fn injectivity_violation(space: &HomSpace, x: &CMatrix, xp: &CMatrix, lambda: f64) -> Result<f64> {
    let u = expm_skew_raw(x);
    let v = expm_skew_raw(xp);
    let d = match exact_raw(space, &u, &v)? {
        Some(d) => d,
        None => upper_raw(space, &u, &v, &QuotientOptions::default())?,
    };
    Ok(lambda * op_norm(&(x - xp)) - 1e-6 - d)
}

/// Options for [`check_local_injectivity`].
#[derive(Clone, Debug, PartialEq)]
pub struct InjectivityOptions {
    pub r: f64,
    pub lambda: f64,
    /// Pin `x' = 0`.
    pub anchor_origin: bool,
    /// Run even when kappa is not known to be one.
    pub override_kappa: bool,
}

/// `rho_M(q(e^x), q(e^{x'})) >= lambda ||x - x'||` for `x, x'` in `B_X(r)`.
/// Only upper bounds on the quotient distance are available in general, so
/// a violation is recorded only when the upper bound itself falls below the
/// threshold; optimization failure can hide violations but never invent
/// them. Tolerance 0.
pub fn check_local_injectivity(
    space: &HomSpace,
    opts: &InjectivityOptions,
    samples: usize,
    rng_seed: u64,
) -> Result<CheckReport> {
    if kappa_known(space) != Some(1.0) && !opts.override_kappa {
        return Err(Error::Precondition(format!("{space}: kappa is not known to be 1")));
    }
    if !(opts.r > 0.0) || !(opts.lambda > 0.0) {
        return invalid("r and lambda must be positive");
    }
    let results = run_samples(samples, |i| {
        let mut rng = sample_rng(rng_seed, i);
        let x = tangent_sample_rng(space, Component::X, opts.r, &mut rng)?.matrix().as_matrix().clone();
        let xp = if opts.anchor_origin {
            CMatrix::zeros(space.n(), space.n())
        } else {
            tangent_sample_rng(space, Component::X, opts.r, &mut rng)?.matrix().as_matrix().clone()
        };
        Ok(Sample {
            violation: injectivity_violation(space, &x, &xp, opts.lambda)?,
            witness: Witness::LocalInjectivity {
                space: SpaceData::from_space(space),
                x: MatrixData::from_matrix(&x),
                x_prime: MatrixData::from_matrix(&xp),
                lambda: opts.lambda,
            },
            stats: Vec::new(),
        })
    })?;
    Ok(finish(
        "local_injectivity",
        vec![
            ("space", space.to_string().into()),
            ("r", opts.r.into()),
            ("lambda", opts.lambda.into()),
            ("anchor_origin", opts.anchor_origin.into()),
            ("seed", rng_seed.into()),
        ],
        0.0,
        &results,
        BTreeMap::new(),
    ))
}

// ---- geodesic minimality -----------------------------------------------

/// Segments of each competitor curve.
pub const COMPETITOR_SEGMENTS: usize = 8;
/// Largest perturbation of an interior competitor vertex.
pub const COMPETITOR_PERTURBATION: f64 = 0.3;

fn minimality_violation(x: &CMatrix, points: Vec<GroupElement>) -> Result<f64> {
    let curve = Curve::uniform(points)?;
    let len = curve_length(&curve, &NormSpec::Operator)?;
    Ok(op_norm(x) - 1e-7 - len)
}

/// One-parameter curves `t -> e^{tx}` against perturbed polygonal curves
/// with the same endpoints: no competitor may be shorter than `||x||_inf`.
pub fn check_geodesic_minimality(n: usize, samples: usize, competitors: usize, rng_seed: u64) -> Result<CheckReport> {
    let space = whole_u(n)?;
    let g = group_u(n)?;
    let id = GroupElement::identity(g.clone());
    let results = run_samples(samples, |i| {
        let mut rng = sample_rng(rng_seed, i);
        let x = tangent_sample_rng(&space, Component::Full, PI - 0.1, &mut rng)?;
        let xm = x.matrix().as_matrix().clone();
        let mut worst: Option<Sample> = None;
        for _ in 0..competitors {
            let mut points = vec![id.clone()];
            for j in 1..COMPETITOR_SEGMENTS {
                let on_path = geodesic_point(&id, &x, j as f64 / COMPETITOR_SEGMENTS as f64)?;
                let size = COMPETITOR_PERTURBATION * rng.random::<f64>();
                let d = tangent_sample_rng(&space, Component::Full, size.max(1e-12), &mut rng)?;
                points.push(on_path.mul(&crate::matcore::expm_skew(&d))?);
            }
            points.push(geodesic_point(&id, &x, 1.0)?);
            let witness_points: Vec<MatrixData> =
                points.iter().map(|p| MatrixData::from_matrix(p.matrix().as_matrix())).collect();
            let v = minimality_violation(&xm, points)?;
            if worst.as_ref().is_none_or(|w| v > w.violation) {
                worst = Some(Sample {
                    violation: v,
                    witness: Witness::GeodesicMinimality { x: MatrixData::from_matrix(&xm), points: witness_points },
                    stats: Vec::new(),
                });
            }
        }
        // the straight curve itself, as the zero-competitor fallback
        let straight: Vec<GroupElement> = (0..=COMPETITOR_SEGMENTS)
            .map(|j| geodesic_point(&id, &x, j as f64 / COMPETITOR_SEGMENTS as f64))
            .collect::<Result<_>>()?;
        let straight_len = curve_length(&Curve::uniform(straight)?, &NormSpec::Operator)?;
        let mut s = worst.unwrap_or(Sample {
            violation: op_norm(&xm) - 1e-7 - straight_len,
            witness: Witness::GeodesicMinimality { x: MatrixData::from_matrix(&xm), points: Vec::new() },
            stats: Vec::new(),
        });
        s.stats = vec![(straight_len - op_norm(&xm)).abs()];
        Ok(s)
    })?;
    let mut stats = BTreeMap::new();
    stats.insert("straight_length_error".into(), results.iter().map(|s| s.stats[0]).fold(0.0, f64::max));
    Ok(finish(
        "geodesic_minimality",
        vec![("n", n.into()), ("competitors", competitors.into()), ("seed", rng_seed.into())],
        0.0,
        &results,
        stats,
    ))
}

// ---- circle model of U(n)/SU(n) -----------------------------------------

/// Arc-length distance on the circle of radius 1/n through the determinant.
pub fn circle_model_dist(u: &CMatrix, v: &CMatrix) -> f64 {
    let det = (u.adjoint() * v).determinant();
    det.im.atan2(det.re).abs() / u.nrows() as f64
}

fn circle_gap(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    let space = HomSpace::new(group_u(u.nrows())?, SubgroupSpec::Special, NormSpec::Operator)?;
    let d = upper_raw(&space, u, v, &QuotientOptions::default())?;
    Ok((d - circle_model_dist(u, v)).abs())
}

/// The optimizer's quotient distance on U(n)/SU(n) against the circle
/// model. Tolerance 1e-3.
pub fn check_circle_quotient(n: usize, samples: usize, rng_seed: u64) -> Result<CheckReport> {
    if n < 2 {
        return invalid("the determinant quotient needs n >= 2");
    }
    let g = group_u(n)?;
    let results = run_samples(samples, |i| {
        let mut rng = sample_rng(rng_seed, i);
        let u = haar_sample_rng(&g, &mut rng).matrix().as_matrix().clone();
        let v = haar_sample_rng(&g, &mut rng).matrix().as_matrix().clone();
        Ok(Sample {
            violation: circle_gap(&u, &v)?,
            witness: Witness::CircleQuotient { u: MatrixData::from_matrix(&u), v: MatrixData::from_matrix(&v) },
            stats: Vec::new(),
        })
    })?;
    Ok(finish("circle_quotient", vec![("n", n.into()), ("seed", rng_seed.into())], 1e-3, &results, BTreeMap::new()))
}

/// Default sample counts for [`verify_all`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyBudget {
    pub distance_samples: usize,
    pub lipschitz_samples: usize,
    pub commutator_samples: usize,
    pub injectivity_samples: usize,
    pub geodesic_samples: usize,
    pub geodesic_competitors: usize,
    pub circle_samples: usize,
}

impl Default for VerifyBudget {
    fn default() -> Self {
        VerifyBudget {
            distance_samples: 1000,
            lipschitz_samples: 1000,
            commutator_samples: 1000,
            injectivity_samples: 200,
            geodesic_samples: 50,
            geodesic_competitors: 20,
            circle_samples: 100,
        }
    }
}

/// Runs every check applicable to `space` at its size.
pub fn verify_all(space: &HomSpace, budget: &VerifyBudget, rng_seed: u64) -> Result<Vec<CheckReport>> {
    let n = space.n();
    let mut out = vec![check_distance_identity(n, budget.distance_samples, rng_seed)?];
    for theta in [PI / 8.0, PI / 4.0, PI / 2.0] {
        out.push(check_exp_lipschitz(n, theta, budget.lipschitz_samples, rng_seed)?);
    }
    out.push(check_commutator_bound(n, 0.5, budget.commutator_samples, rng_seed)?);
    out.push(check_geodesic_minimality(n, budget.geodesic_samples, budget.geodesic_competitors, rng_seed)?);
    if n >= 2 {
        out.push(check_circle_quotient(n, budget.circle_samples, rng_seed)?);
    }
    if kappa_known(space) == Some(1.0) && space.dim_h() > 0 {
        let opts = InjectivityOptions { r: 0.12, lambda: 0.4, anchor_origin: false, override_kappa: false };
        out.push(check_local_injectivity(space, &opts, budget.injectivity_samples, rng_seed)?);
    }
    Ok(out)
}
