//! Packings, nets and entropy bounds.
//!
//! Every separation claim rests on certified lower bounds of the quotient
//! distance and every covering claim on upper bounds, so a reported packing
//! is a genuine separated set and a reported net covers at least the probe
//! cloud it was checked against.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::groups::{haar_sample_rng, GroupElement, HomSpace, SubgroupSpec};
use crate::invariants::{kappa_known, kappa_upper, InvariantReport};
use crate::matcore::{expm_skew_raw, hermitian_eigen, CMatrix, C64};
use crate::metrics::{exact_raw, lower_raw, upper_raw, QuotientOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NetKind {
    /// An epsilon-separated set; its size bounds the packing number below.
    PackingTilde,
    /// Centers in `M` covering `M` at radius epsilon.
    NetNpp,
}

#[derive(Clone, Debug)]
pub struct NetResult {
    pub kind: NetKind,
    pub epsilon: f64,
    pub points: Vec<GroupElement>,
    pub count: usize,
    pub budget_exhausted: bool,
    /// Candidates drawn from the sampler (lattice points for linearized covers).
    pub samples_used: usize,
    /// Smallest certified pairwise distance (packings).
    pub min_separation: Option<f64>,
    /// Number of probe points checked and the largest probe-to-center
    /// distance seen (nets).
    pub probe_count: usize,
    pub probe_max_dist: Option<f64>,
}

/// Distance evaluation with cheap certified shortcuts.
pub(crate) struct Distances<'a> {
    space: &'a HomSpace,
    opts: QuotientOptions,
    /// Operator-norm distance on the whole group, where Frobenius bounds apply.
    frobenius: bool,
}

impl<'a> Distances<'a> {
    pub(crate) fn new(space: &'a HomSpace) -> Self {
        let frobenius = matches!(space.subgroup(), SubgroupSpec::Trivial) && space.norm().is_operator();
        Distances { space, opts: QuotientOptions { restarts: 4, ..Default::default() }, frobenius }
    }

    /// Bounds on `rho` from `||u - v||_F / sqrt(n) <= ||u - v||_inf = 2 sin(rho/2) <= ||u - v||_F`.
    fn frobenius_bounds(&self, u: &CMatrix, v: &CMatrix) -> (f64, f64) {
        let f = u.iter().zip(v.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let n = self.space.n() as f64;
        let arc = |s: f64| 2.0 * (s / 2.0).min(1.0).asin();
        (arc(f / n.sqrt()), arc(f))
    }

    pub(crate) fn lower(&self, u: &CMatrix, v: &CMatrix) -> Result<f64> {
        lower_raw(self.space, u, v)
    }

    /// Certified `rho_M(u, v) > eps`.
    pub(crate) fn separated(&self, u: &CMatrix, v: &CMatrix, eps: f64) -> Result<bool> {
        if self.frobenius {
            let (lo, hi) = self.frobenius_bounds(u, v);
            if lo > eps {
                return Ok(true);
            }
            if hi <= eps {
                return Ok(false);
            }
        }
        Ok(self.lower(u, v)? > eps)
    }

    /// Upper bound on `rho_M(u, v)`, skipping the evaluation when a cheap
    /// lower bound already exceeds `cutoff`.
    pub(crate) fn upper_below(&self, u: &CMatrix, v: &CMatrix, cutoff: f64) -> Result<Option<f64>> {
        if self.frobenius {
            let (lo, _) = self.frobenius_bounds(u, v);
            if lo >= cutoff {
                return Ok(None);
            }
        }
        let exact = exact_raw(self.space, u, v)?;
        if exact.is_none() && self.lower(u, v)? >= cutoff {
            return Ok(None);
        }
        let d = match exact {
            Some(d) => d,
            None => upper_raw(self.space, u, v, &self.opts)?,
        };
        Ok((d < cutoff).then_some(d))
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return invalid(format!("epsilon must be positive, got {epsilon}"));
    }
    Ok(())
}

/// Smallest certified pairwise distance of a point set (infinity for fewer
/// than two points).
pub fn min_pairwise_separation(space: &HomSpace, points: &[GroupElement]) -> Result<f64> {
    let d = Distances::new(space);
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in 0..i {
            best = best.min(d.lower(points[i].matrix().as_matrix(), points[j].matrix().as_matrix())?);
        }
    }
    Ok(best)
}

/// Random sequential insertion: Haar candidates are accepted when their
/// certified distance to every accepted point exceeds `epsilon`. The count
/// is non-decreasing in the budget, and the result is re-verified pairwise.
pub fn greedy_packing(space: &HomSpace, epsilon: f64, sampler_budget: usize, rng_seed: u64) -> Result<NetResult> {
    check_epsilon(epsilon)?;
    let d = Distances::new(space);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut accepted: Vec<GroupElement> = Vec::new();
    for _ in 0..sampler_budget {
        let v = haar_sample_rng(space.group(), &mut rng);
        let mut ok = true;
        for a in &accepted {
            if !d.separated(a.matrix().as_matrix(), v.matrix().as_matrix(), epsilon)? {
                ok = false;
                break;
            }
        }
        if ok {
            accepted.push(v);
        }
    }
    let sep = min_pairwise_separation(space, &accepted)?;
    if sep <= epsilon {
        return Err(Error::Precondition(format!("packing failed verification: separation {sep} <= {epsilon}")));
    }
    Ok(NetResult {
        kind: NetKind::PackingTilde,
        epsilon,
        count: accepted.len(),
        points: accepted,
        budget_exhausted: false,
        samples_used: sampler_budget,
        min_separation: Some(sep),
        probe_count: 0,
        probe_max_dist: None,
    })
}

/// Options for [`greedy_net_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct NetOptions {
    pub sampler_budget: usize,
    pub probe_budget: usize,
    /// Relative slack on the covering radius of the sampler cloud.
    pub slack: f64,
    pub seed: u64,
}

impl Default for NetOptions {
    fn default() -> Self {
        NetOptions { sampler_budget: 10_000, probe_budget: 10_000, slack: 0.02, seed: 0 }
    }
}

pub fn greedy_net(
    space: &HomSpace,
    epsilon: f64,
    sampler_budget: usize,
    probe_budget: usize,
    rng_seed: u64,
) -> Result<NetResult> {
    greedy_net_with(space, epsilon, &NetOptions { sampler_budget, probe_budget, seed: rng_seed, ..Default::default() })
}

/// Farthest-point sampling over a Haar cloud until every cloud point is
/// within `epsilon (1 + slack)` of a center, then certification against an
/// independent probe cloud.
pub fn greedy_net_with(space: &HomSpace, epsilon: f64, opts: &NetOptions) -> Result<NetResult> {
    check_epsilon(epsilon)?;
    if opts.sampler_budget == 0 {
        return invalid("greedy_net needs a non-empty sampler cloud");
    }
    let d = Distances::new(space);
    let target = epsilon * (1.0 + opts.slack);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let cloud: Vec<GroupElement> = (0..opts.sampler_budget).map(|_| haar_sample_rng(space.group(), &mut rng)).collect();
    let mut nearest = vec![f64::INFINITY; cloud.len()];
    let mut centers: Vec<usize> = Vec::new();
    let mut next = 0usize;
    loop {
        centers.push(next);
        let c = cloud[next].matrix().as_matrix();
        let updates: Vec<Result<Option<f64>>> = cloud
            .par_iter()
            .zip(nearest.par_iter())
            .map(|(v, &cur)| d.upper_below(c, v.matrix().as_matrix(), cur))
            .collect();
        for (slot, u) in nearest.iter_mut().zip(updates) {
            if let Some(v) = u? {
                *slot = v;
            }
        }
        // farthest remaining point, lowest index on ties
        let (far, dist) =
            nearest
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bd), (i, &v)| if v > bd { (i, v) } else { (bi, bd) });
        if dist <= target {
            break;
        }
        next = far;
    }
    let points: Vec<GroupElement> = centers.iter().map(|&i| cloud[i].clone()).collect();
    let probe_max = certify_cover(space, &points, opts.probe_budget, opts.seed ^ 0x70be_c10d)?;
    Ok(NetResult {
        kind: NetKind::NetNpp,
        epsilon,
        count: points.len(),
        points,
        budget_exhausted: false,
        samples_used: opts.sampler_budget,
        min_separation: None,
        probe_count: opts.probe_budget,
        probe_max_dist: probe_max,
    })
}

/// Largest distance from a Haar probe to its nearest center (upper bounds),
/// or `None` without probes.
pub fn certify_cover(space: &HomSpace, centers: &[GroupElement], probes: usize, rng_seed: u64) -> Result<Option<f64>> {
    if probes == 0 || centers.is_empty() {
        return Ok(None);
    }
    let d = Distances::new(space);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let cloud: Vec<GroupElement> = (0..probes).map(|_| haar_sample_rng(space.group(), &mut rng)).collect();
    let worst: Vec<Result<f64>> = cloud
        .par_iter()
        .map(|p| {
            let mut best = f64::INFINITY;
            for c in centers {
                if let Some(v) = d.upper_below(c.matrix().as_matrix(), p.matrix().as_matrix(), best)? {
                    best = v;
                }
            }
            Ok(best)
        })
        .collect();
    let mut max = 0.0f64;
    for w in worst {
        max = max.max(w?);
    }
    Ok(Some(max))
}

/// The larger of two certified separated sets: the greedy packing, or the
/// net centers when they too are certified `epsilon`-separated.
pub fn best_separated(space: &HomSpace, packing: NetResult, net: &NetResult) -> Result<NetResult> {
    if net.count <= packing.count || (net.epsilon - packing.epsilon).abs() > 0.0 {
        return Ok(packing);
    }
    let sep = min_pairwise_separation(space, &net.points)?;
    if sep > packing.epsilon {
        return Ok(NetResult {
            kind: NetKind::PackingTilde,
            epsilon: packing.epsilon,
            points: net.points.clone(),
            count: net.count,
            budget_exhausted: packing.budget_exhausted,
            samples_used: packing.samples_used,
            min_separation: Some(sep),
            probe_count: 0,
            probe_max_dist: None,
        });
    }
    Ok(packing)
}

/// `((R/eps)^d, (1 + 2R/eps)^d)`: the volumetric bracket for covering a
/// radius-`R` ball of a `d`-dimensional normed space.
pub fn volume_bounds(d: u32, r: f64, epsilon: f64) -> Result<(f64, f64)> {
    if !(epsilon > 0.0) || !(r > 0.0) {
        return invalid("radius and epsilon must be positive");
    }
    if epsilon > r {
        return Err(Error::OutOfRange(format!("epsilon {epsilon} exceeds radius {r}")));
    }
    let d = d as i32;
    Ok(((r / epsilon).powi(d), (1.0 + 2.0 * r / epsilon).powi(d)))
}

/// Lattice spacing for [`linearized_cover`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mesh {
    /// Covering radius epsilon/2 in the operator norm.
    Conservative,
    /// Covering radius epsilon in the operator norm.
    Tight,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearizedOptions {
    pub mesh: Mesh,
    /// Cap on the number of centers; hitting it sets `budget_exhausted`.
    pub max_points: usize,
    /// Proceed even when kappa is not known to be one.
    pub override_kappa: bool,
    /// Ball radius in `X`; defaults to the known diameter, else pi.
    pub radius: Option<f64>,
}

impl Default for LinearizedOptions {
    fn default() -> Self {
        LinearizedOptions { mesh: Mesh::Tight, max_points: 200_000, override_kappa: false, radius: None }
    }
}

fn op_norm_of(m: &CMatrix) -> f64 {
    crate::matcore::op_norm(m)
}

/// Covering centers for `M` from a lattice in `X`.
///
/// A cubic lattice in an orthonormal basis of `X` covers the operator-norm
/// ball `B_X(R)` with `R = diam M`; when `kappa = 1` the map `q . exp`
/// sends that ball onto `M` and is a contraction, so the images cover `M`
/// at the same radius. The radius of a lattice cell in the operator norm is
/// computed from its vertices, and cells are kept only when a dual-norm
/// bound cannot exclude them from the ball.
pub fn linearized_cover(space: &HomSpace, epsilon: f64, opts: &LinearizedOptions) -> Result<NetResult> {
    check_epsilon(epsilon)?;
    if kappa_known(space) != Some(1.0) && !opts.override_kappa {
        return Err(Error::Precondition(format!("{space}: kappa is not known to be 1; pass an override to proceed")));
    }
    // every element of G is e^x with ||x||_inf <= pi, so pi bounds diam M
    let radius = opts.radius.or_else(|| crate::invariants::diam_known(space)).unwrap_or(PI);
    let identity = GroupElement::identity(space.group().clone());
    let single = |samples| NetResult {
        kind: NetKind::NetNpp,
        epsilon,
        points: vec![identity.clone()],
        count: 1,
        budget_exhausted: false,
        samples_used: samples,
        min_separation: None,
        probe_count: 0,
        probe_max_dist: None,
    };
    if epsilon >= radius {
        return Ok(single(1));
    }
    let basis = space.bases().x_basis.clone();
    let dim = basis.len();
    let target = match opts.mesh {
        Mesh::Conservative => epsilon / 2.0,
        Mesh::Tight => epsilon,
    };
    // operator-norm radius of the unit cell [-1/2, 1/2]^dim
    let cell = if dim <= 16 {
        let mut worst = 0.0f64;
        for mask in 0u32..(1 << dim) {
            let mut m = CMatrix::zeros(space.n(), space.n());
            for (i, e) in basis.iter().enumerate() {
                let s = if mask & (1 << i) != 0 { 0.5 } else { -0.5 };
                m += e * C64::new(s, 0.0);
            }
            worst = worst.max(op_norm_of(&m));
        }
        worst
    } else {
        (dim as f64).sqrt() / 2.0
    };
    let mesh = target / cell;
    // coordinates are bounded by the Frobenius norm, itself at most sqrt(n) times the operator norm
    let reach = (space.n() as f64).sqrt() * (radius + target);
    let span = (reach / mesh).floor() as i64;
    let mut points = vec![identity.clone()];
    let mut exhausted = false;
    let mut visited = 0usize;
    let mut coords = vec![0i64; dim];
    let mut stack_done = false;
    // odometer over the cube, pruned by the Frobenius ball
    for c in coords.iter_mut() {
        *c = -span;
    }
    let mut steps = 0usize;
    while !stack_done {
        steps += 1;
        if steps > opts.max_points.saturating_mul(64) {
            exhausted = true;
            break;
        }
        let sq: f64 = coords.iter().map(|&c| (c as f64 * mesh).powi(2)).sum();
        if sq <= reach * reach && coords.iter().any(|&c| c != 0) {
            visited += 1;
            let mut y = CMatrix::zeros(space.n(), space.n());
            for (c, e) in coords.iter().zip(&basis) {
                y += e * C64::new(*c as f64 * mesh, 0.0);
            }
            if cell_meets_ball(&y, &basis, mesh, radius) {
                if points.len() >= opts.max_points {
                    exhausted = true;
                    break;
                }
                let u = expm_skew_raw(&y);
                points.push(GroupElement::from_raw(space.group(), u));
            }
        }
        // advance
        let mut i = 0;
        loop {
            if i == dim {
                stack_done = true;
                break;
            }
            coords[i] += 1;
            if coords[i] > span {
                coords[i] = -span;
                i += 1;
            } else {
                break;
            }
        }
    }
    Ok(NetResult {
        kind: NetKind::NetNpp,
        epsilon,
        count: points.len(),
        points,
        budget_exhausted: exhausted,
        samples_used: visited,
        min_separation: None,
        probe_count: 0,
        probe_max_dist: None,
    })
}

/// False only when the cell `y + mesh [-1/2, 1/2]^dim` provably misses the
/// operator-norm ball of the given radius: for the norming functional `w` of
/// `y`, every cell point has norm at least `<w, y> - mesh/2 sum_i |<w, e_i>|`.
fn cell_meets_ball(y: &CMatrix, basis: &[CMatrix], mesh: f64, radius: f64) -> bool {
    let (values, vectors) = hermitian_eigen(&(y * C64::new(0.0, -1.0)));
    let top = (0..values.len()).fold(0, |b, j| if values[j].abs() > values[b].abs() { j } else { b });
    let q = vectors.column(top).into_owned();
    let w = &q * q.adjoint() * C64::new(0.0, values[top].signum());
    let pair = |a: &CMatrix| crate::groups::trace_inner(&w, a);
    let spread: f64 = basis.iter().map(|e| pair(e).abs()).sum();
    pair(y) - 0.5 * mesh * spread <= radius
}

/// Evaluated entropy bounds at one scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub epsilon: f64,
    pub dim_m: usize,
    pub theta: Option<f64>,
    pub diam: f64,
    pub diam_is_known: bool,
    pub kappa: Option<f64>,
    pub c: f64,
    pub big_c: f64,
    /// `(c theta / eps)^d`, quoted only when theta is known.
    pub lower_bound: Option<f64>,
    /// `(C diam / eps)^d`.
    pub upper_bound: f64,
    pub lower_applicable: bool,
    pub upper_applicable: bool,
}

/// Engineering defaults for the universal constants; not sharp.
pub const DEFAULT_LOWER_CONSTANT: f64 = 1.0 / 40.0;
pub const DEFAULT_UPPER_CONSTANT: f64 = 9.0;

/// Evaluates `(c theta/eps)^d <= N(M, eps) <= (C diam/eps)^d`. The upper
/// side applies for `eps <= diam` with `kappa = 1`, the lower side for
/// `eps <= theta/4` with `kappa = 1`.
pub fn covering_number_bounds(
    space: &HomSpace,
    inv: &InvariantReport,
    epsilon: f64,
    c: f64,
    big_c: f64,
) -> BoundReport {
    let d = space.dim_m() as i32;
    let theta = inv.theta_known;
    let diam = inv.diam();
    let kappa_one = inv.kappa_known == Some(1.0);
    BoundReport {
        epsilon,
        dim_m: space.dim_m(),
        theta,
        diam,
        diam_is_known: inv.diam_known.is_some(),
        kappa: inv.kappa_known,
        c,
        big_c,
        lower_bound: theta.map(|t| (c * t / epsilon).powi(d)),
        upper_bound: (big_c * diam / epsilon).powi(d),
        lower_applicable: kappa_one && theta.is_some_and(|t| epsilon <= t / 4.0),
        upper_applicable: kappa_one && epsilon <= diam,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateBranch {
    /// `dim H <= (1 - alpha) dim G`.
    A,
    /// A reducing subspace with dimension in `[alpha n, (1 - alpha) n]`.
    B,
    /// A reducing subspace of dimension `k >= alpha n` on which `H` acts as
    /// the full `U(k)` (or `SO(k)`).
    C,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub alpha: f64,
    pub theta: Option<f64>,
    pub diam: f64,
    /// Upper bound on kappa used for `1/kappa`.
    pub kappa_upper: Option<f64>,
    pub invariants_ok: bool,
    pub branch_a: bool,
    pub branch_b: bool,
    pub branch_c: bool,
    pub branch: Option<GateBranch>,
    pub satisfied: bool,
    pub witness: String,
}

/// Checks whether the two-sided entropy estimate with constants depending
/// only on `alpha` applies: `min{theta, diam, 1/kappa} >= alpha` plus one of
/// the structural conditions. All three conditions are evaluated; the
/// reported branch is the one the subgroup structure naturally supplies.
pub fn reducibility_gate(space: &HomSpace, inv: &InvariantReport, alpha: f64) -> Result<GateReport> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return invalid(format!("alpha must lie in (0, 1/2], got {alpha}"));
    }
    let n = space.n();
    let nf = n as f64;
    let in_range = |dim: usize| (dim as f64) >= alpha * nf - 1e-12 && (dim as f64) <= (1.0 - alpha) * nf + 1e-12;
    let branch_a = (space.dim_h() as f64) <= (1.0 - alpha) * space.dim_g() as f64 + 1e-12;
    let (reducing, full_blocks): (Vec<usize>, Vec<usize>) = match space.subgroup() {
        SubgroupSpec::Trivial => ((1..n).collect(), Vec::new()),
        SubgroupSpec::Special => (Vec::new(), Vec::new()),
        SubgroupSpec::TensorFactor { m, k } => ((1..*m).map(|j| j * k).collect(), Vec::new()),
        _ => {
            let part = space.partition().unwrap_or_default();
            let mut sums = Vec::new();
            for mask in 1u32..(1 << part.len()) - 1 {
                sums.push(part.iter().enumerate().filter(|(j, _)| mask & (1 << j) != 0).map(|(_, p)| *p).sum());
            }
            (sums, part)
        }
    };
    let b_dim = reducing.iter().copied().find(|&d| in_range(d));
    let c_dim = full_blocks.iter().copied().filter(|&k| k as f64 >= alpha * nf - 1e-12).max();
    let branch_b = b_dim.is_some();
    let branch_c = c_dim.is_some();
    let theta = inv.theta_known;
    let diam = inv.diam();
    let kup = kappa_upper(space);
    let invariants_ok = theta.is_some_and(|t| t >= alpha) && diam >= alpha && kup.is_some_and(|k| 1.0 / k >= alpha);
    let natural = match space.subgroup() {
        SubgroupSpec::Trivial => Some(GateBranch::A),
        SubgroupSpec::TensorFactor { .. } => Some(GateBranch::B),
        SubgroupSpec::Grassmann { .. } => Some(GateBranch::C),
        SubgroupSpec::BlockDiagonal { .. } => Some(if branch_c { GateBranch::C } else { GateBranch::B }),
        SubgroupSpec::Special => None,
    };
    let holds = |b: GateBranch| match b {
        GateBranch::A => branch_a,
        GateBranch::B => branch_b,
        GateBranch::C => branch_c,
    };
    let branch = natural
        .filter(|b| holds(*b))
        .or_else(|| [GateBranch::A, GateBranch::B, GateBranch::C].into_iter().find(|b| holds(*b)));
    let witness = match branch {
        Some(GateBranch::A) => format!("dim H = {} <= {:.4} dim G = {}", space.dim_h(), 1.0 - alpha, space.dim_g()),
        Some(GateBranch::B) => format!("reducing subspace of dimension {}", b_dim.unwrap_or(0)),
        Some(GateBranch::C) => format!("full block of dimension {}", c_dim.unwrap_or(0)),
        None => "no structural condition holds".to_string(),
    };
    Ok(GateReport {
        alpha,
        theta,
        diam,
        kappa_upper: kup,
        invariants_ok,
        branch_a,
        branch_b,
        branch_c,
        branch,
        satisfied: invariants_ok && branch.is_some(),
        witness,
    })
}

/// One row of the covering/packing chain at a fixed epsilon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub epsilon: f64,
    pub npp_certified: usize,
    pub ntilde: usize,
    pub ntilde_half: Option<usize>,
    pub violations: Vec<String>,
}

/// `N''(eps) <= Ntilde(eps) <= Ntilde(eps/2)`, the last standing in for the
/// covering number by sets of diameter `eps`.
pub fn chain_check(epsilon: f64, npp_certified: usize, ntilde: usize, ntilde_half: Option<usize>) -> ChainCheck {
    let mut violations = Vec::new();
    if npp_certified > ntilde {
        violations.push(format!("N''({epsilon}) = {npp_certified} exceeds Ntilde = {ntilde}"));
    }
    if let Some(h) = ntilde_half {
        if ntilde > h {
            violations.push(format!("Ntilde({epsilon}) = {ntilde} exceeds Ntilde(eps/2) = {h}"));
        }
    }
    ChainCheck { epsilon, npp_certified, ntilde, ntilde_half, violations }
}

/// Least-squares slope of `log count` against `-log eps`.
pub fn loglog_slope(epsilons: &[f64], counts: &[usize]) -> Result<f64> {
    if epsilons.len() != counts.len() || epsilons.len() < 2 {
        return invalid("need at least two matching (epsilon, count) pairs");
    }
    if counts.contains(&0) {
        return invalid("counts must be positive");
    }
    let xs: Vec<f64> = epsilons.iter().map(|e| -e.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Exact covering number of the unit circle by closed arcs of radius eps.
pub fn circle_covering_number(epsilon: f64) -> usize {
    (PI / epsilon - 1e-12).ceil().max(1.0) as usize
}
