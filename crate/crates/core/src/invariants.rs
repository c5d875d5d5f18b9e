//! The invariants of `M = G/H` that control its metric entropy: the norm
//! `kappa` of the projection onto `X`, the weaving radius `theta`, and the
//! diameter.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::groups::{
    haar_sample_rng, tangent_sample_rng, trace_inner, Component, GroupElement, GroupKind, HomSpace, SubgroupSpec,
};
use crate::matcore::{
    eigenphases_raw, expm_skew_raw, hermitian_eigen, hermitian_function, op_norm, CMatrix, Field, C64,
};
use crate::metrics::{quotient_dist_lower, quotient_dist_upper, CosetPoint, QuotientOptions};

/// Steps of the local ascent used by [`kappa_lower`].
pub const KAPPA_ASCENT_STEPS: usize = 50;

/// Exact `kappa` where it is known: the projection onto `X` is an operator
/// norm contraction for the trivial, determinant-one and two-block cases.
pub fn kappa_known(space: &HomSpace) -> Option<f64> {
    match space.subgroup() {
        SubgroupSpec::Trivial | SubgroupSpec::Special | SubgroupSpec::Grassmann { .. } => Some(1.0),
        SubgroupSpec::BlockDiagonal { partition } if partition.len() == 2 => Some(1.0),
        _ => None,
    }
}

/// Upper bound on `kappa`: `P_H` is a norm-one conditional expectation for
/// block-diagonal and tensor-factor subalgebras, so `||I - P_H|| <= 2`.
pub fn kappa_upper(space: &HomSpace) -> Option<f64> {
    kappa_known(space).or(match space.subgroup() {
        SubgroupSpec::BlockDiagonal { .. } | SubgroupSpec::TensorFactor { .. } => Some(2.0),
        _ => None,
    })
}

fn real_part_if(field: Field, mut m: CMatrix) -> CMatrix {
    if field == Field::Real {
        m.iter_mut().for_each(|z| z.im = 0.0);
    }
    m
}

/// `||P_X x||_inf / ||x||_inf`, with a 50-step ascent from `x`.
fn ascend_ratio(space: &HomSpace, mut x: CMatrix) -> f64 {
    let field = space.field();
    let mut best = 0.0f64;
    for _ in 0..=KAPPA_ASCENT_STEPS {
        let xn = op_norm(&x);
        if xn == 0.0 {
            break;
        }
        let y = space.project_x_raw(&x);
        best = best.max(op_norm(&y) / xn);
        // a norming functional of y: i s q q^H for the top eigenpair of -iy
        let (values, vectors) = hermitian_eigen(&(&y * C64::new(0.0, -1.0)));
        let top = (0..values.len()).fold(0, |b, j| if values[j].abs() > values[b].abs() { j } else { b });
        let q = vectors.column(top).into_owned();
        let g = &q * q.adjoint() * C64::new(0.0, values[top].signum());
        let w = real_part_if(field, space.project_x_raw(&g));
        // the unit-ball element of G maximizing <w, .>
        let h = &w * C64::new(0.0, -1.0);
        let next = hermitian_function(&h, |a| C64::new(0.0, if a.abs() < 1e-14 { 0.0 } else { a.signum() }));
        x = real_part_if(field, next);
    }
    best
}

/// Certified lower bound on `kappa = ||P_X||` over the operator norm.
/// Sample 0 lies in `X`, so the result is at least 1 up to rounding; every
/// other sample is a Gaussian element of the full algebra followed by a
/// local ascent. Samples are seeded by index, so the bound never decreases
/// as `samples` grows.
pub fn kappa_lower(space: &HomSpace, samples: usize, rng_seed: u64) -> Result<f64> {
    if samples == 0 {
        return invalid("kappa_lower needs at least one sample");
    }
    if space.dim_h() == 0 {
        return Ok(1.0);
    }
    let ratios: Vec<Result<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed.wrapping_add(i as u64));
            let component = if i == 0 { Component::X } else { Component::Full };
            let x = tangent_sample_rng(space, component, 1.0, &mut rng)?;
            Ok(ascend_ratio(space, x.matrix().as_matrix().clone()))
        })
        .collect();
    let mut best = 0.0f64;
    for r in ratios {
        best = best.max(r?);
    }
    Ok(best)
}

/// Units for a `theta` value: intrinsic `rho`, or the extrinsic operator
/// norm distance `|1 - e^{i rho}| = 2 sin(rho / 2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThetaUnit {
    Intrinsic,
    Extrinsic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaValue {
    pub value: f64,
    pub unit: ThetaUnit,
}

impl ThetaValue {
    pub fn intrinsic(&self) -> f64 {
        match self.unit {
            ThetaUnit::Intrinsic => self.value,
            ThetaUnit::Extrinsic => 2.0 * (self.value / 2.0).clamp(-1.0, 1.0).asin(),
        }
    }

    pub fn extrinsic(&self) -> f64 {
        match self.unit {
            ThetaUnit::Intrinsic => 2.0 * (self.value / 2.0).sin(),
            ThetaUnit::Extrinsic => self.value,
        }
    }
}

/// Tabulated `theta(M)`. Block-diagonal spaces with three or more blocks and
/// tensor-factor spaces carry the value 2 in extrinsic units (intrinsic pi);
/// the determinant-one quotient has no closed form here.
pub fn theta_known(space: &HomSpace) -> Option<ThetaValue> {
    let intrinsic_pi = Some(ThetaValue { value: PI, unit: ThetaUnit::Intrinsic });
    match space.subgroup() {
        SubgroupSpec::Trivial | SubgroupSpec::Grassmann { .. } => intrinsic_pi,
        SubgroupSpec::BlockDiagonal { partition } if partition.len() == 2 => intrinsic_pi,
        SubgroupSpec::BlockDiagonal { .. } | SubgroupSpec::TensorFactor { .. } => match space.group().kind {
            GroupKind::U => Some(ThetaValue { value: 2.0, unit: ThetaUnit::Extrinsic }),
            GroupKind::SO => None,
        },
        SubgroupSpec::Special => None,
    }
}

/// A group element of `H` outside `exp` of the open pi-ball of `H`, close to
/// the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaWitness {
    pub intrinsic: f64,
    pub extrinsic: f64,
    pub candidates: usize,
}

/// Generators of the standard torus of `G`, adapted to the block structure
/// of `H` in the real case so that its intersection with `H` is a maximal
/// torus of `H`.
fn torus_generators(space: &HomSpace) -> Vec<CMatrix> {
    let n = space.n();
    match space.group().kind {
        GroupKind::U => (0..n)
            .map(|j| {
                let mut m = CMatrix::zeros(n, n);
                m[(j, j)] = C64::new(0.0, 1.0);
                m
            })
            .collect(),
        GroupKind::SO => {
            let blocks: Vec<(usize, usize)> = match space.subgroup() {
                SubgroupSpec::TensorFactor { m, k } => (0..*m).map(|j| (j * k, *k)).collect(),
                _ => match space.partition() {
                    Some(part) => {
                        let mut start = 0;
                        part.iter()
                            .map(|p| {
                                let b = (start, *p);
                                start += p;
                                b
                            })
                            .collect()
                    }
                    None => vec![(0, n)],
                },
            };
            let mut out = Vec::new();
            for (start, size) in blocks {
                for pair in 0..size / 2 {
                    let (a, b) = (start + 2 * pair, start + 2 * pair + 1);
                    let mut m = CMatrix::zeros(n, n);
                    m[(a, b)] = C64::new(-1.0, 0.0);
                    m[(b, a)] = C64::new(1.0, 0.0);
                    out.push(m);
                }
            }
            out
        }
    }
}

/// Orthonormal basis of the part of the torus algebra lying in `H`, in
/// coordinates of the torus generators.
fn torus_in_h(space: &HomSpace, gens: &[CMatrix]) -> Vec<Vec<f64>> {
    let t = gens.len();
    if t == 0 {
        return Vec::new();
    }
    let px: Vec<CMatrix> = gens.iter().map(|g| space.project_x_raw(g)).collect();
    let gram = DMatrix::<f64>::from_fn(t, t, |i, j| trace_inner(&px[i], &px[j]));
    let eig = SymmetricEigen::new(gram);
    (0..t)
        .filter(|&c| eig.eigenvalues[c].abs() < 1e-9)
        .map(|c| eig.eigenvectors.column(c).iter().copied().collect())
        .collect()
}

/// Search over the torus of `H` for elements whose short logarithm leaves
/// `H` (or which have an eigenvalue at -1). The smallest `rho(u, I)` found
/// is an upper bound on `theta(M)`. Candidates are the projections onto the
/// torus of `pi * m` for integer `m` in `[-2, 2]^t`, followed by random
/// torus points, up to `search_budget` in total.
pub fn theta_witness_upper(space: &HomSpace, search_budget: usize, rng_seed: u64) -> Option<ThetaWitness> {
    let gens = torus_generators(space);
    let basis = torus_in_h(space, &gens);
    if basis.is_empty() || search_budget == 0 {
        return None;
    }
    let t = gens.len();
    let project = |coords: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; t];
        for b in &basis {
            let dot: f64 = b.iter().zip(coords).map(|(x, y)| x * y).sum();
            out.iter_mut().zip(b).for_each(|(o, bi)| *o += dot * bi);
        }
        out
    };
    // torus generators are orthogonal with equal norms, so coordinates can
    // be projected directly
    let to_matrix = |coords: &[f64]| -> CMatrix {
        let n = space.n();
        let mut m = CMatrix::zeros(n, n);
        for (c, g) in coords.iter().zip(&gens) {
            m += g * C64::new(*c, 0.0);
        }
        m
    };
    let lattice_size = 5usize.checked_pow(t as u32).unwrap_or(usize::MAX);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut best: Option<f64> = None;
    let mut examined = 0;
    for idx in 0..search_budget {
        let raw: Vec<f64> = if idx < lattice_size {
            let mut r = idx;
            (0..t)
                .map(|_| {
                    let digit = (r % 5) as f64 - 2.0;
                    r /= 5;
                    PI * digit
                })
                .collect()
        } else {
            (0..t).map(|_| rng.random_range(-2.0 * PI..2.0 * PI)).collect()
        };
        let h = to_matrix(&project(&raw));
        examined += 1;
        let u = expm_skew_raw(&h);
        let Some(rho) = weaving_defect(space, &u) else { continue };
        best = Some(best.map_or(rho, |b: f64| b.min(rho)));
    }
    best.map(|rho| ThetaWitness { intrinsic: rho, extrinsic: 2.0 * (rho / 2.0).sin(), candidates: examined })
}

/// `Some(rho(u, I))` when `u` in `H` has no logarithm in `H` of norm below pi.
fn weaving_defect(space: &HomSpace, u: &CMatrix) -> Option<f64> {
    let phases = eigenphases_raw(u).ok()?;
    let rho = phases.iter().fold(0.0f64, |a, p| a.max(p.abs()));
    if rho < 1e-9 {
        return None;
    }
    if PI - rho <= 1e-9 {
        return Some(PI);
    }
    let x = crate::matcore::logm_unitary_with_tol(&GroupElement::from_raw(space.group(), u.clone()), 1e-9).ok()?;
    let leak = op_norm(&space.project_x_raw(x.matrix().as_matrix()));
    (leak > 1e-8).then_some(rho)
}

/// Known diameter for the operator norm.
pub fn diam_known(space: &HomSpace) -> Option<f64> {
    if !space.norm().is_operator() {
        return None;
    }
    let n = space.n();
    match space.subgroup() {
        SubgroupSpec::Trivial => (space.group().kind == GroupKind::U || n >= 2).then_some(PI),
        SubgroupSpec::Grassmann { .. } => Some(PI / 2.0),
        SubgroupSpec::BlockDiagonal { partition } if partition.len() == 2 => Some(PI / 2.0),
        SubgroupSpec::Special => Some(PI / n as f64),
        _ => None,
    }
}

/// Which distance the diameter sampler maximizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiameterMetric {
    /// Certified lower bounds (exact where a closed form exists); the
    /// maximum is then a certified lower bound on the diameter.
    Certified,
    /// The multi-start upper bound from the optimizer.
    Optimized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiameterEstimate {
    pub known: Option<f64>,
    pub sampled: f64,
}

/// Sweep resolution along one-parameter subgroups.
const SWEEP_STEPS: usize = 64;

/// Largest sampled distance from the base coset. By homogeneity pairs
/// `(q(I), q(v))` suffice; `v` ranges over Haar samples and over the sweeps
/// `t -> q(e^{t x})`, `t = pi j / 64`, for unit directions `x` in `X`.
pub fn diameter_estimate(space: &HomSpace, samples: usize, rng_seed: u64) -> Result<DiameterEstimate> {
    diameter_estimate_with(space, samples, rng_seed, DiameterMetric::Certified)
}

pub fn diameter_estimate_with(
    space: &HomSpace,
    samples: usize,
    rng_seed: u64,
    metric: DiameterMetric,
) -> Result<DiameterEstimate> {
    if samples < 2 {
        return invalid("diameter_estimate needs at least two samples");
    }
    let base = CosetPoint::new(GroupElement::identity(space.group().clone()), space)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut targets = Vec::new();
    for _ in 0..samples {
        targets.push(haar_sample_rng(space.group(), &mut rng));
    }
    let directions = (samples / 16).max(1);
    for _ in 0..directions {
        let x = tangent_sample_rng(space, Component::X, 1.0, &mut rng)?;
        let unit = x.matrix().as_matrix() / C64::new(op_norm(x.matrix().as_matrix()), 0.0);
        for j in 1..=SWEEP_STEPS {
            let t = PI * j as f64 / SWEEP_STEPS as f64;
            targets.push(GroupElement::from_raw(space.group(), expm_skew_raw(&(&unit * C64::new(t, 0.0)))));
        }
    }
    let opts = QuotientOptions { restarts: 4, ..Default::default() };
    let dists: Vec<Result<f64>> = targets
        .into_par_iter()
        .map(|v| {
            let q = CosetPoint::new(v, space)?;
            match metric {
                DiameterMetric::Certified => quotient_dist_lower(&base, &q),
                DiameterMetric::Optimized => quotient_dist_upper(&base, &q, &opts),
            }
        })
        .collect();
    let mut sampled = 0.0f64;
    for d in dists {
        sampled = sampled.max(d?);
    }
    Ok(DiameterEstimate { known: diam_known(space), sampled })
}

/// Search budgets for [`invariant_report`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantBudget {
    pub kappa_samples: usize,
    pub theta_candidates: usize,
    pub diam_samples: usize,
}

impl Default for InvariantBudget {
    fn default() -> Self {
        InvariantBudget { kappa_samples: 64, theta_candidates: 4096, diam_samples: 256 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub space: String,
    pub dim_m: usize,
    pub kappa_known: Option<f64>,
    pub kappa_lower_bound: f64,
    /// Tabulated theta in intrinsic units.
    pub theta_known: Option<f64>,
    /// The tabulated theta as stated, with its unit.
    pub theta_table: Option<ThetaValue>,
    pub theta_upper_bound: Option<f64>,
    pub theta_upper_bound_extrinsic: Option<f64>,
    pub diam_known: Option<f64>,
    pub diam_lower_bound: f64,
}

impl InvariantReport {
    /// Best available theta: the known value, else the witness bound.
    pub fn theta(&self) -> Option<f64> {
        self.theta_known.or(self.theta_upper_bound)
    }

    /// Best available diameter: the known value, else the sampled bound.
    pub fn diam(&self) -> f64 {
        self.diam_known.unwrap_or(self.diam_lower_bound)
    }

    /// Known kappa, else the sampled lower bound.
    pub fn kappa(&self) -> f64 {
        self.kappa_known.unwrap_or(self.kappa_lower_bound)
    }
}

pub fn invariant_report(space: &HomSpace, budget: &InvariantBudget, rng_seed: u64) -> Result<InvariantReport> {
    let table = theta_known(space);
    let witness = theta_witness_upper(space, budget.theta_candidates, rng_seed);
    let diam = diameter_estimate(space, budget.diam_samples.max(2), rng_seed.wrapping_add(1))?;
    Ok(InvariantReport {
        space: space.to_string(),
        dim_m: space.dim_m(),
        kappa_known: kappa_known(space),
        kappa_lower_bound: kappa_lower(space, budget.kappa_samples.max(1), rng_seed.wrapping_add(2))?,
        theta_known: table.map(|t| t.intrinsic()),
        theta_table: table,
        theta_upper_bound: witness.as_ref().map(|w| w.intrinsic),
        theta_upper_bound_extrinsic: witness.as_ref().map(|w| w.extrinsic),
        diam_known: diam.known,
        diam_lower_bound: diam.sampled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupSpec;
    use crate::matcore::NormSpec;

    fn space(kind: GroupKind, n: usize, sub: SubgroupSpec) -> HomSpace {
        HomSpace::new(GroupSpec::new(kind, n).unwrap(), sub, NormSpec::Operator).unwrap()
    }

    #[test]
    fn kappa_grassmann_is_one() {
        for (n, k) in [(3, 1), (4, 2), (5, 2)] {
            let s = space(GroupKind::U, n, SubgroupSpec::Grassmann { k });
            let v = kappa_lower(&s, 8, 1).unwrap();
            assert!((v - 1.0).abs() <= 1e-9, "{v}");
        }
    }

    #[test]
    fn kappa_trivial_is_exactly_one() {
        let s = space(GroupKind::U, 3, SubgroupSpec::Trivial);
        assert_eq!(kappa_lower(&s, 4, 1).unwrap(), 1.0);
    }

    #[test]
    fn kappa_three_blocks_between_one_and_two() {
        let s = space(GroupKind::U, 3, SubgroupSpec::BlockDiagonal { partition: vec![1, 1, 1] });
        let v = kappa_lower(&s, 16, 3).unwrap();
        assert!(v >= 1.0 - 1e-12 && v <= 2.0 + 1e-6, "{v}");
        // the ascent finds more than the trivial value here
        assert!(v > 1.05, "{v}");
    }

    #[test]
    fn kappa_monotone_in_samples() {
        let s = space(GroupKind::U, 4, SubgroupSpec::TensorFactor { m: 2, k: 2 });
        let a = kappa_lower(&s, 4, 9).unwrap();
        let b = kappa_lower(&s, 8, 9).unwrap();
        assert!(b >= a);
    }

    #[test]
    fn theta_table() {
        let s = space(GroupKind::U, 5, SubgroupSpec::Grassmann { k: 2 });
        assert_eq!(theta_known(&s).unwrap().intrinsic(), PI);
        let s = space(GroupKind::U, 5, SubgroupSpec::BlockDiagonal { partition: vec![2, 3] });
        assert_eq!(theta_known(&s).unwrap().intrinsic(), PI);
        let s = space(GroupKind::U, 4, SubgroupSpec::TensorFactor { m: 2, k: 2 });
        let t = theta_known(&s).unwrap();
        assert_eq!(t.extrinsic(), 2.0);
        assert!((t.intrinsic() - PI).abs() < 1e-12);
        assert!(theta_known(&space(GroupKind::U, 3, SubgroupSpec::Special)).is_none());
    }

    #[test]
    fn theta_witness_special() {
        for n in 2..=5 {
            let s = space(GroupKind::U, n, SubgroupSpec::Special);
            let w = theta_witness_upper(&s, 4096, 1).unwrap();
            assert!(w.intrinsic <= 2.0 * PI / n as f64 + 1e-6, "n={n}: {}", w.intrinsic);
        }
    }

    #[test]
    fn theta_witness_trivial_and_two_blocks() {
        assert!(theta_witness_upper(&space(GroupKind::U, 3, SubgroupSpec::Trivial), 100, 1).is_none());
        let s = space(GroupKind::U, 2, SubgroupSpec::BlockDiagonal { partition: vec![1, 1] });
        let w = theta_witness_upper(&s, 100, 1).unwrap();
        assert!((w.intrinsic - PI).abs() < 1e-9);
        assert!(w.extrinsic <= 2.0 + 1e-3);
    }

    #[test]
    fn theta_witness_never_below_table() {
        for s in [
            space(GroupKind::U, 4, SubgroupSpec::TensorFactor { m: 2, k: 2 }),
            space(GroupKind::U, 3, SubgroupSpec::BlockDiagonal { partition: vec![1, 1, 1] }),
            space(GroupKind::SO, 4, SubgroupSpec::Grassmann { k: 2 }),
        ] {
            let known = theta_known(&s).unwrap().intrinsic();
            if let Some(w) = theta_witness_upper(&s, 2000, 4) {
                assert!(w.intrinsic >= known - 1e-6, "{s}: {}", w.intrinsic);
            }
        }
    }

    #[test]
    fn diameter_values() {
        let s = space(GroupKind::U, 3, SubgroupSpec::Trivial);
        let d = diameter_estimate(&s, 1000, 1).unwrap();
        assert_eq!(d.known, Some(PI));
        assert!(d.sampled >= 3.0 && d.sampled <= PI + 1e-6);
        let s = space(GroupKind::SO, 3, SubgroupSpec::Grassmann { k: 1 });
        let d = diameter_estimate(&s, 64, 1).unwrap();
        assert_eq!(d.known, Some(PI / 2.0));
        assert!(d.sampled <= PI / 2.0 + 1e-9);
        let s = space(GroupKind::U, 2, SubgroupSpec::Special);
        let d = diameter_estimate(&s, 64, 1).unwrap();
        assert!((d.sampled - PI / 2.0).abs() < 0.01);
    }
}
