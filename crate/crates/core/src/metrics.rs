//! Extrinsic, intrinsic and quotient distances, curve length and geodesics.
//!
//! On `G` the intrinsic distance is the gauge of the eigenphases of `u^H v`.
//! On `M = G/H` the distance is an infimum over `H`; closed forms exist for
//! the trivial, determinant-one and Grassmann cases, certified lower bounds
//! for the other block structures, and a multi-start Riemannian descent
//! gives upper bounds everywhere.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::groups::{tangent_sample_rng, Component, GroupElement, HomSpace, SkewElement, SubgroupSpec};
use crate::matcore::{
    eigenphases_raw, expm_skew, expm_skew_raw, logm_unitary_with_tol, principal_angles, principal_angles_raw,
    unitary_schur, CMatrix, Field, Frame, NormSpec, BRANCH_TOL, C64,
};

fn check_pair(u: &GroupElement, v: &GroupElement) -> Result<()> {
    if u.group() != v.group() {
        return invalid(format!("group mismatch: {} vs {}", u.group(), v.group()));
    }
    Ok(())
}

/// `||u - v||` in the given norm.
pub fn extrinsic_dist(u: &GroupElement, v: &GroupElement, norm: &NormSpec) -> Result<f64> {
    check_pair(u, v)?;
    Ok(crate::matcore::schatten_norm(&u.matrix().sub(v.matrix())?, norm))
}

/// Gauge of `|phases|`; continuous everywhere, including the branch set.
pub(crate) fn rho_of_phases(phases: &[f64], norm: &NormSpec) -> f64 {
    norm.gauge(phases)
}

pub(crate) fn rho_raw(w: &CMatrix, norm: &NormSpec) -> Result<f64> {
    Ok(rho_of_phases(&eigenphases_raw(w)?, norm))
}

/// Intrinsic distance `||log(u^H v)||`.
///
/// For the operator norm an eigenvalue of `u^H v` at -1 gives the value pi.
/// Other norms refuse that case, since the minimizing logarithm is no longer
/// unique there.
pub fn intrinsic_dist(u: &GroupElement, v: &GroupElement, norm: &NormSpec) -> Result<f64> {
    check_pair(u, v)?;
    let w = u.matrix().as_matrix().adjoint() * v.matrix().as_matrix();
    let phases = eigenphases_raw(&w)?;
    if !norm.is_operator() {
        if let Some(&phase) = phases.iter().find(|p| PI - p.abs() <= BRANCH_TOL) {
            return Err(Error::BranchAmbiguity { phase, tolerance: BRANCH_TOL });
        }
    }
    Ok(rho_of_phases(&phases, norm))
}

/// `u e^{t x}`.
pub fn geodesic_point(u: &GroupElement, x: &SkewElement, t: f64) -> Result<GroupElement> {
    if u.n() != x.n() {
        return invalid("size mismatch between group element and tangent vector");
    }
    let e = expm_skew_raw(&(x.matrix().as_matrix() * C64::new(t, 0.0)));
    Ok(GroupElement::from_raw(u.group(), u.matrix().as_matrix() * e))
}

/// A polygonal curve in `G` whose consecutive samples are joined by the
/// minimizing one-parameter arcs.
#[derive(Clone, Debug)]
pub struct Curve {
    times: Vec<f64>,
    points: Vec<GroupElement>,
}

/// Largest operator-norm gap allowed between consecutive samples.
pub const CURVE_MAX_GAP: f64 = PI / 2.0;

impl Curve {
    pub fn new(times: Vec<f64>, points: Vec<GroupElement>) -> Result<Self> {
        if times.is_empty() || times.len() != points.len() {
            return invalid("curve needs matching, non-empty times and points");
        }
        if times.iter().any(|t| !(0.0..=1.0).contains(t)) || times.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("curve times must increase strictly within [0, 1]");
        }
        for pair in points.windows(2) {
            let gap = intrinsic_dist(&pair[0], &pair[1], &NormSpec::Operator)?;
            if gap >= CURVE_MAX_GAP {
                return invalid(format!("consecutive curve points are {gap} apart (limit pi/2)"));
            }
        }
        Ok(Curve { times, points })
    }

    /// Curve through `points` at uniform times.
    pub fn uniform(points: Vec<GroupElement>) -> Result<Self> {
        let k = points.len();
        let times = if k == 1 { vec![0.0] } else { (0..k).map(|i| i as f64 / (k - 1) as f64).collect() };
        Self::new(times, points)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[GroupElement] {
        &self.points
    }

    /// Inserts the geodesic midpoint of every segment.
    pub fn refined(&self) -> Result<Curve> {
        let mut times = vec![self.times[0]];
        let mut points = vec![self.points[0].clone()];
        for i in 1..self.points.len() {
            let (a, b) = (&self.points[i - 1], &self.points[i]);
            let step = logm_unitary_with_tol(&a.adjoint().mul(b)?, BRANCH_TOL)?;
            points.push(geodesic_point(a, &step, 0.5)?);
            times.push(0.5 * (self.times[i - 1] + self.times[i]));
            points.push(b.clone());
            times.push(self.times[i]);
        }
        Ok(Curve { times, points })
    }
}

/// Sum of intrinsic distances between consecutive samples.
pub fn curve_length(c: &Curve, norm: &NormSpec) -> Result<f64> {
    let mut total = 0.0;
    for pair in c.points.windows(2) {
        total += intrinsic_dist(&pair[0], &pair[1], norm)?;
    }
    Ok(total)
}

/// Distance between `span E` and `span F`: the largest principal angle for
/// the operator norm. For a general gauge the minimizing generator has
/// eigenvalues `+-i theta_j`, so the gauge is applied to the angles each
/// listed twice.
pub fn grassmann_dist(e: &Frame, f: &Frame, norm: &NormSpec) -> Result<f64> {
    let angles = principal_angles(e, f)?;
    Ok(grassmann_from_angles(&angles, e.n(), norm))
}

fn grassmann_from_angles(angles: &[f64], n: usize, norm: &NormSpec) -> f64 {
    if norm.is_operator() {
        return angles.iter().copied().fold(0.0, f64::max);
    }
    let k = angles.len();
    let active = k.min(n - k);
    let mut v = Vec::with_capacity(n);
    for a in angles.iter().take(active) {
        v.push(*a);
        v.push(*a);
    }
    v.resize(n, 0.0);
    norm.gauge(&v)
}

/// A left coset `uH` of the space.
#[derive(Clone, Debug)]
pub struct CosetPoint {
    rep: GroupElement,
    space: HomSpace,
}

impl CosetPoint {
    pub fn new(rep: GroupElement, space: &HomSpace) -> Result<Self> {
        if rep.group() != space.group() {
            return invalid(format!("representative lives in {}, space is {}", rep.group(), space));
        }
        Ok(CosetPoint { rep, space: space.clone() })
    }

    pub fn representative(&self) -> &GroupElement {
        &self.rep
    }

    pub fn space(&self) -> &HomSpace {
        &self.space
    }

    /// Columns of the representative spanning block columns `start..start+k`.
    fn frame(&self, start: usize, k: usize) -> CMatrix {
        self.rep.matrix().as_matrix().columns(start, k).into_owned()
    }
}

fn check_same_space(p: &CosetPoint, q: &CosetPoint) -> Result<()> {
    if p.space.group() != q.space.group() || p.space.subgroup() != q.space.subgroup() {
        return invalid(format!("points live in different spaces: {} vs {}", p.space, q.space));
    }
    Ok(())
}

/// Whether the quotient distance has a closed form for this space.
pub fn has_closed_form(space: &HomSpace) -> bool {
    match space.subgroup() {
        SubgroupSpec::Trivial | SubgroupSpec::Special | SubgroupSpec::Grassmann { .. } => true,
        SubgroupSpec::BlockDiagonal { partition } => partition.len() == 2,
        SubgroupSpec::TensorFactor { .. } => false,
    }
}

/// Closed-form quotient distance where one is known.
pub fn quotient_dist_exact(p: &CosetPoint, q: &CosetPoint) -> Result<Option<f64>> {
    check_same_space(p, q)?;
    exact_raw(&p.space, p.rep.matrix().as_matrix(), q.rep.matrix().as_matrix())
}

pub(crate) fn exact_raw(space: &HomSpace, u: &CMatrix, v: &CMatrix) -> Result<Option<f64>> {
    let norm = space.norm();
    let n = space.n();
    match space.subgroup() {
        SubgroupSpec::Trivial => Ok(Some(rho_raw(&(u.adjoint() * v), norm)?)),
        SubgroupSpec::Special => {
            let det = (u.adjoint() * v).determinant();
            let phase = det.im.atan2(det.re).abs() / n as f64;
            Ok(Some(norm.gauge(&vec![phase; n])))
        }
        _ => match space.partition() {
            Some(part) if part.len() == 2 => {
                let k = part[0];
                let angles = principal_angles_raw(&u.columns(0, k).into_owned(), &v.columns(0, k).into_owned());
                Ok(Some(grassmann_from_angles(&angles, n, norm)))
            }
            _ => Ok(None),
        },
    }
}

/// Column groups whose spans are invariant under right multiplication by `H`.
fn invariant_column_groups(space: &HomSpace) -> Vec<(usize, usize)> {
    let blocks: Vec<(usize, usize)> = match space.subgroup() {
        SubgroupSpec::TensorFactor { m, k } => (0..*m).map(|j| (j * k, *k)).collect(),
        _ => match space.partition() {
            Some(part) => part
                .iter()
                .scan(0, |s, p| {
                    let start = *s;
                    *s += p;
                    Some((start, *p))
                })
                .collect(),
            None => return Vec::new(),
        },
    };
    blocks
}

/// A certified lower bound on the quotient distance. Exact where a closed
/// form exists; otherwise the largest Grassmann distance between the spans
/// of any union of invariant column groups (the projection onto each such
/// Grassmannian is 1-Lipschitz). Zero when nothing better is known.
pub fn quotient_dist_lower(p: &CosetPoint, q: &CosetPoint) -> Result<f64> {
    check_same_space(p, q)?;
    lower_raw(&p.space, p.rep.matrix().as_matrix(), q.rep.matrix().as_matrix())
}

pub(crate) fn lower_raw(space: &HomSpace, u: &CMatrix, v: &CMatrix) -> Result<f64> {
    if let Some(d) = exact_raw(space, u, v)? {
        return Ok(d);
    }
    let n = space.n();
    let groups = invariant_column_groups(space);
    let m = groups.len();
    if m < 2 {
        return Ok(0.0);
    }
    let cols = |c: &CMatrix, mask: u32| -> CMatrix {
        let idx: Vec<usize> =
            groups.iter().enumerate().filter(|(j, _)| mask & (1 << j) != 0).flat_map(|(_, (s, k))| *s..s + k).collect();
        c.select_columns(&idx)
    };
    let mut best = 0.0f64;
    // a subset and its complement span orthogonal complements, so half suffice
    for mask in 1u32..(1 << (m - 1)) {
        let angles = principal_angles_raw(&cols(u, mask), &cols(v, mask));
        best = best.max(grassmann_from_angles(&angles, n, space.norm()));
    }
    Ok(best)
}

/// Controls for the multi-start minimization over `H`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuotientOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for QuotientOptions {
    fn default() -> Self {
        QuotientOptions { restarts: 8, max_iter: 200, seed: 0x5eed }
    }
}

/// Smooth stand-in for the norm: `(sum |phi|^p)^(1/p)` and its gradient in
/// the phases.
fn surrogate(phases: &[f64], p: f64) -> (f64, Vec<f64>) {
    let top = phases.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if top == 0.0 {
        return (0.0, vec![0.0; phases.len()]);
    }
    let sum: f64 = phases.iter().map(|x| (x.abs() / top).powf(p)).sum();
    let value = top * sum.powf(1.0 / p);
    let grad = phases.iter().map(|x| (x.abs() / value).powf(p - 1.0) * x.signum()).collect();
    (value, grad)
}

fn surrogate_exponents(norm: &NormSpec) -> Vec<f64> {
    match norm {
        NormSpec::Schatten(p) if p.is_finite() && *p <= 2.0 => vec![*p],
        NormSpec::Schatten(p) if p.is_finite() => vec![2.0, *p],
        NormSpec::Operator | NormSpec::Schatten(_) => vec![2.0, 8.0, 32.0, 128.0],
        NormSpec::Gauge(_) => vec![2.0, 8.0, 32.0],
    }
}

struct Descent<'a> {
    space: &'a HomSpace,
    w: CMatrix,
    field: Field,
    best: f64,
}

impl Descent<'_> {
    fn phases(&self, s: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
        let (values, q) = unitary_schur(&(&self.w * s))?;
        Ok((values.into_iter().map(crate::matcore::principal_phase).collect(), q))
    }

    fn record(&mut self, phases: &[f64]) {
        self.best = self.best.min(rho_of_phases(phases, self.space.norm()));
    }

    /// Armijo descent on `s -> surrogate(phases(w s))` along `H`.
    fn run(&mut self, mut s: CMatrix, exponents: &[f64], max_iter: usize) -> Result<()> {
        for &p in exponents {
            let mut eta = 0.5;
            let (mut phases, mut q) = self.phases(&s)?;
            self.record(&phases);
            for _ in 0..max_iter {
                let (f, g) = surrogate(&phases, p);
                let mut scaled = q.clone();
                for (j, gj) in g.iter().enumerate() {
                    let z = C64::new(0.0, *gj);
                    scaled.column_mut(j).iter_mut().for_each(|e| *e *= z);
                }
                let mut grad = self.space.project_h_raw(&(scaled * q.adjoint()));
                if self.field == Field::Real {
                    grad.iter_mut().for_each(|z| z.im = 0.0);
                }
                let gn2: f64 = grad.iter().map(|z| z.norm_sqr()).sum();
                if gn2.sqrt() < 1e-12 {
                    break;
                }
                let mut accepted = false;
                while eta > 1e-14 {
                    let trial = &s * expm_skew_raw(&(&grad * C64::new(-eta, 0.0)));
                    let (tp, tq) = self.phases(&trial)?;
                    self.record(&tp);
                    let (ft, _) = surrogate(&tp, p);
                    if ft <= f - 1e-4 * eta * gn2 {
                        s = trial;
                        phases = tp;
                        q = tq;
                        accepted = true;
                        eta = (eta * 1.5).min(4.0);
                        break;
                    }
                    eta *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
        }
        Ok(())
    }
}

/// Upper bound on the quotient distance: the best value of
/// `h -> ||log(u^H v e^h)||` over a multi-start descent in `H`. The result
/// is the norm at an actual element of `H`, so it never undercuts the true
/// distance, and it is non-increasing in the number of restarts.
pub fn quotient_dist_upper(p: &CosetPoint, q: &CosetPoint, opts: &QuotientOptions) -> Result<f64> {
    check_same_space(p, q)?;
    upper_raw(&p.space, p.rep.matrix().as_matrix(), q.rep.matrix().as_matrix(), opts)
}

pub(crate) fn upper_raw(space: &HomSpace, u: &CMatrix, v: &CMatrix, opts: &QuotientOptions) -> Result<f64> {
    let w = u.adjoint() * v;
    let direct = rho_raw(&w, space.norm())?;
    if space.dim_h() == 0 {
        return Ok(direct);
    }
    let floor = lower_raw(space, u, v)?;
    let reps = space.component_representatives();
    let exponents = surrogate_exponents(space.norm());
    let restarts = opts.restarts.max(1);
    let run = |r: usize| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (r as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let rep = reps[r % reps.len()].matrix().as_matrix().clone();
        let start = if r < reps.len() {
            rep
        } else {
            let h = tangent_sample_rng(space, Component::H, PI, &mut rng)?;
            rep * expm_skew_raw(h.matrix().as_matrix())
        };
        let mut d = Descent { space, w: w.clone(), field: space.field(), best: f64::INFINITY };
        d.run(start, &exponents, opts.max_iter)?;
        Ok(d.best)
    };
    let mut best = direct;
    // restarts run in fixed-size waves so that early exit stays deterministic
    let wave = rayon::current_num_threads().max(1);
    let mut r = 0;
    while r < restarts {
        let end = (r + wave).min(restarts);
        let results: Vec<Result<f64>> = (r..end).into_par_iter().map(run).collect();
        for v in results {
            best = best.min(v?);
        }
        if best <= floor + 1e-9 {
            break;
        }
        r = end;
    }
    Ok(best)
}

/// Exact distance where a closed form exists, the optimized upper bound
/// otherwise. The flag tells which.
pub fn quotient_dist(p: &CosetPoint, q: &CosetPoint, opts: &QuotientOptions) -> Result<(f64, bool)> {
    match quotient_dist_exact(p, q)? {
        Some(v) => Ok((v, true)),
        None => Ok((quotient_dist_upper(p, q, opts)?, false)),
    }
}

/// Coset equality: canonical projectors for block structures, the
/// determinant phase for the determinant-one subgroup, otherwise a distance
/// threshold of `1e-6`.
pub fn same_coset(p: &CosetPoint, q: &CosetPoint) -> Result<bool> {
    check_same_space(p, q)?;
    let space = &p.space;
    const THRESHOLD: f64 = 1e-6;
    match space.subgroup() {
        SubgroupSpec::Special => {
            let det = (p.rep.matrix().as_matrix().adjoint() * q.rep.matrix().as_matrix()).determinant();
            Ok(det.im.atan2(det.re).abs() <= THRESHOLD)
        }
        SubgroupSpec::Trivial => {
            let d = p.rep.matrix().as_matrix() - q.rep.matrix().as_matrix();
            Ok(d.iter().all(|z| z.norm() <= THRESHOLD))
        }
        SubgroupSpec::BlockDiagonal { .. } | SubgroupSpec::Grassmann { .. } => {
            for (start, k) in invariant_column_groups(space) {
                let (e, f) = (p.frame(start, k), q.frame(start, k));
                let d = &e * e.adjoint() - &f * f.adjoint();
                if d.iter().any(|z| z.norm() > THRESHOLD) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        SubgroupSpec::TensorFactor { .. } => Ok(quotient_dist_upper(p, q, &QuotientOptions::default())? <= THRESHOLD),
    }
}

/// The point `q(u e^x)`.
pub fn coset_exp(base: &CosetPoint, x: &SkewElement) -> Result<CosetPoint> {
    let moved = base.rep.mul(&expm_skew(x))?;
    CosetPoint::new(moved, &base.space)
}
