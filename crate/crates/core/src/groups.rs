//! Groups U(n) and SO(n), their closed subgroups of the supported shapes,
//! Haar and tangent sampling, and the orthogonal projections of the Lie
//! algebra onto the subalgebra `H` and its complement `X`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matcore::{
    op_norm, skew_part, skew_residual, CMatrix, DenseMatrix, Field, NormSpec, ALGEBRAIC_TOL, C64, DECOMPOSITION_TOL,
    SKEW_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKind {
    U,
    SO,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupSpec {
    pub kind: GroupKind,
    pub n: usize,
}

impl GroupSpec {
    pub fn new(kind: GroupKind, n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("group size must be positive");
        }
        Ok(GroupSpec { kind, n })
    }

    pub(crate) fn for_field(field: Field, n: usize) -> Self {
        let kind = match field {
            Field::Real => GroupKind::SO,
            Field::Complex => GroupKind::U,
        };
        GroupSpec { kind, n }
    }

    pub fn field(&self) -> Field {
        match self.kind {
            GroupKind::U => Field::Complex,
            GroupKind::SO => Field::Real,
        }
    }

    /// Real dimension of the group.
    pub fn dim(&self) -> usize {
        match self.kind {
            GroupKind::U => self.n * self.n,
            GroupKind::SO => self.n * (self.n - 1) / 2,
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GroupKind::U => write!(f, "U{}", self.n),
            GroupKind::SO => write!(f, "SO{}", self.n),
        }
    }
}

/// Closed subgroup `H` of `G`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubgroupSpec {
    Trivial,
    /// Determinant one; only meaningful inside U(n).
    Special,
    /// Block-diagonal matrices for the given partition of n.
    BlockDiagonal {
        partition: Vec<usize>,
    },
    /// `I_m (x) y`: m identical k x k blocks along the diagonal.
    TensorFactor {
        m: usize,
        k: usize,
    },
    /// Stabilizer of a k-dimensional coordinate subspace.
    Grassmann {
        k: usize,
    },
}

impl fmt::Display for SubgroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubgroupSpec::Trivial => write!(f, "trivial"),
            SubgroupSpec::Special => write!(f, "special"),
            SubgroupSpec::BlockDiagonal { partition } => {
                let parts: Vec<String> = partition.iter().map(|p| p.to_string()).collect();
                write!(f, "block{}", parts.join("-"))
            }
            SubgroupSpec::TensorFactor { m, k } => write!(f, "tensor{m}x{k}"),
            SubgroupSpec::Grassmann { k } => write!(f, "grassmann{k}"),
        }
    }
}

/// Which part of the Lie algebra a tangent vector is known to live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    Full,
    H,
    X,
}

/// A skew-Hermitian (skew-symmetric in the real case) matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewElement {
    matrix: DenseMatrix,
    component: Component,
}

impl SkewElement {
    pub fn new(matrix: DenseMatrix) -> Result<Self> {
        if skew_residual(matrix.as_matrix()) > SKEW_TOL {
            return invalid("matrix is not skew-Hermitian to 1e-12");
        }
        Ok(SkewElement { matrix, component: Component::Full })
    }

    /// Validates membership in the requested component of `space`.
    pub fn in_component(space: &HomSpace, matrix: DenseMatrix, component: Component) -> Result<Self> {
        let x = Self::new(matrix)?;
        space.check_size(x.n())?;
        let scale = op_norm(x.matrix.as_matrix()).max(1.0);
        let residual = match component {
            Component::Full => 0.0,
            Component::H => op_norm(&space.project_x_raw(x.matrix.as_matrix())),
            Component::X => op_norm(&space.project_h_raw(x.matrix.as_matrix())),
        };
        if residual > ALGEBRAIC_TOL * scale {
            return invalid(format!("element is not in component {component:?}"));
        }
        Ok(SkewElement { matrix: x.matrix, component })
    }

    pub(crate) fn from_parts(matrix: DenseMatrix, component: Component) -> Self {
        SkewElement { matrix, component }
    }

    pub(crate) fn from_raw(field: Field, m: CMatrix, component: Component) -> Self {
        SkewElement { matrix: DenseMatrix::from_parts(field, skew_part(&m)), component }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn component(&self) -> Component {
        self.component
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn scale(&self, t: f64) -> SkewElement {
        let m = self.matrix.as_matrix() * C64::new(t, 0.0);
        SkewElement { matrix: DenseMatrix::from_parts(self.matrix.field(), m), component: self.component }
    }
}

/// An element of U(n) or SO(n).
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    matrix: DenseMatrix,
    group: GroupSpec,
}

impl GroupElement {
    pub fn new(matrix: DenseMatrix, group: GroupSpec) -> Result<Self> {
        if matrix.n() != group.n {
            return invalid(format!("expected {}x{} matrix", group.n, group.n));
        }
        if group.kind == GroupKind::SO && matrix.field() != Field::Real {
            return invalid("SO(n) elements must be real");
        }
        let m = matrix.as_matrix();
        let gram = m.adjoint() * m - CMatrix::identity(group.n, group.n);
        if gram.iter().any(|z| z.norm() > ALGEBRAIC_TOL) {
            return invalid("matrix is not unitary to 1e-10");
        }
        if group.kind == GroupKind::SO && (m.determinant().re - 1.0).abs() > DECOMPOSITION_TOL {
            return invalid("orthogonal matrix has determinant -1");
        }
        Ok(GroupElement { matrix, group })
    }

    pub(crate) fn from_parts(matrix: DenseMatrix, group: GroupSpec) -> Self {
        GroupElement { matrix, group }
    }

    pub(crate) fn from_raw(group: &GroupSpec, m: CMatrix) -> Self {
        GroupElement { matrix: DenseMatrix::from_parts(group.field(), m), group: group.clone() }
    }

    pub fn identity(group: GroupSpec) -> Self {
        GroupElement { matrix: DenseMatrix::identity(group.field(), group.n), group }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn n(&self) -> usize {
        self.group.n
    }

    pub fn adjoint(&self) -> GroupElement {
        GroupElement { matrix: self.matrix.adjoint(), group: self.group.clone() }
    }

    pub fn mul(&self, other: &GroupElement) -> Result<GroupElement> {
        if self.group != other.group {
            return invalid(format!("group mismatch: {} vs {}", self.group, other.group));
        }
        Ok(GroupElement { matrix: self.matrix.mul(&other.matrix)?, group: self.group.clone() })
    }
}

/// Orthonormal bases of the Lie algebra and of the complement `X`, computed
/// once per space.
#[derive(Debug)]
pub(crate) struct AlgebraBases {
    pub(crate) x_basis: Vec<CMatrix>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) h_basis: Vec<CMatrix>,
}

/// The homogeneous space `M = G/H` with a unitarily invariant norm.
#[derive(Clone)]
pub struct HomSpace {
    group: GroupSpec,
    subgroup: SubgroupSpec,
    norm: NormSpec,
    bases: OnceLock<Arc<AlgebraBases>>,
}

impl fmt::Debug for HomSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HomSpace")
            .field("group", &self.group)
            .field("subgroup", &self.subgroup)
            .field("norm", &self.norm)
            .finish()
    }
}

impl fmt::Display for HomSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.group, self.subgroup)
    }
}

impl HomSpace {
    pub fn new(group: GroupSpec, subgroup: SubgroupSpec, norm: NormSpec) -> Result<Self> {
        let n = group.n;
        match &subgroup {
            SubgroupSpec::Trivial => {}
            SubgroupSpec::Special => {
                if group.kind == GroupKind::SO {
                    return invalid("SO(n) has no proper determinant-one subgroup");
                }
            }
            SubgroupSpec::BlockDiagonal { partition } => {
                if partition.contains(&0) || partition.iter().sum::<usize>() != n {
                    return invalid(format!("partition {partition:?} is not a partition of {n}"));
                }
            }
            SubgroupSpec::TensorFactor { m, k } => {
                if *m == 0 || *k == 0 || m * k != n {
                    return invalid(format!("tensor factor {m}x{k} does not match n = {n}"));
                }
            }
            SubgroupSpec::Grassmann { k } => {
                if *k == 0 || *k >= n {
                    return invalid(format!("grassmann k must satisfy 0 < k < n, got k = {k}"));
                }
            }
        }
        let space = HomSpace { group, subgroup, norm, bases: OnceLock::new() };
        if space.dim_m() == 0 {
            return invalid(format!("{space} has dimension zero"));
        }
        Ok(space)
    }

    /// `G` itself, i.e. the quotient by the trivial subgroup.
    pub fn whole_group(group: GroupSpec, norm: NormSpec) -> Result<Self> {
        Self::new(group, SubgroupSpec::Trivial, norm)
    }

    pub fn grassmann(kind: GroupKind, n: usize, k: usize) -> Result<Self> {
        Self::new(GroupSpec::new(kind, n)?, SubgroupSpec::Grassmann { k }, NormSpec::Operator)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn subgroup(&self) -> &SubgroupSpec {
        &self.subgroup
    }

    pub fn norm(&self) -> &NormSpec {
        &self.norm
    }

    pub fn with_norm(&self, norm: NormSpec) -> HomSpace {
        HomSpace { group: self.group.clone(), subgroup: self.subgroup.clone(), norm, bases: self.bases.clone() }
    }

    pub fn n(&self) -> usize {
        self.group.n
    }

    pub fn field(&self) -> Field {
        self.group.field()
    }

    pub fn dim_g(&self) -> usize {
        self.group.dim()
    }

    pub fn dim_h(&self) -> usize {
        let n = self.group.n;
        let block_dim = |p: usize| match self.group.kind {
            GroupKind::U => p * p,
            GroupKind::SO => p * p.saturating_sub(1) / 2,
        };
        match &self.subgroup {
            SubgroupSpec::Trivial => 0,
            SubgroupSpec::Special => self.dim_g() - 1,
            SubgroupSpec::BlockDiagonal { partition } => partition.iter().map(|&p| block_dim(p)).sum(),
            SubgroupSpec::TensorFactor { k, .. } => block_dim(*k),
            SubgroupSpec::Grassmann { k } => block_dim(*k) + block_dim(n - k),
        }
    }

    /// Real dimension of `M`.
    pub fn dim_m(&self) -> usize {
        self.dim_g() - self.dim_h()
    }

    /// Block partition when `H` is block-diagonal (Grassmann included).
    pub fn partition(&self) -> Option<Vec<usize>> {
        match &self.subgroup {
            SubgroupSpec::BlockDiagonal { partition } => Some(partition.clone()),
            SubgroupSpec::Grassmann { k } => Some(vec![*k, self.group.n - k]),
            _ => None,
        }
    }

    pub(crate) fn check_size(&self, n: usize) -> Result<()> {
        if n != self.group.n {
            return invalid(format!("size mismatch: expected {}, got {n}", self.group.n));
        }
        Ok(())
    }

    pub(crate) fn project_h_raw(&self, x: &CMatrix) -> CMatrix {
        let n = self.group.n;
        match &self.subgroup {
            SubgroupSpec::Trivial => CMatrix::zeros(n, n),
            SubgroupSpec::Special => {
                let mean = x.trace() / C64::new(n as f64, 0.0);
                x - CMatrix::identity(n, n) * mean
            }
            SubgroupSpec::BlockDiagonal { .. } | SubgroupSpec::Grassmann { .. } => {
                let partition = self.partition().unwrap_or_default();
                let mut out = CMatrix::zeros(n, n);
                let mut start = 0;
                for p in partition {
                    out.view_mut((start, start), (p, p)).copy_from(&x.view((start, start), (p, p)));
                    start += p;
                }
                out
            }
            SubgroupSpec::TensorFactor { m, k } => {
                let mut avg = CMatrix::zeros(*k, *k);
                for j in 0..*m {
                    avg += x.view((j * k, j * k), (*k, *k));
                }
                avg /= C64::new(*m as f64, 0.0);
                let mut out = CMatrix::zeros(n, n);
                for j in 0..*m {
                    out.view_mut((j * k, j * k), (*k, *k)).copy_from(&avg);
                }
                out
            }
        }
    }

    pub(crate) fn project_x_raw(&self, x: &CMatrix) -> CMatrix {
        x - self.project_h_raw(x)
    }

    pub(crate) fn bases(&self) -> Arc<AlgebraBases> {
        self.bases.get_or_init(|| Arc::new(self.compute_bases())).clone()
    }

    fn compute_bases(&self) -> AlgebraBases {
        let full = algebra_basis(&self.group);
        let d = full.len();
        let px: Vec<CMatrix> = full.iter().map(|b| self.project_x_raw(b)).collect();
        let gram = DMatrix::<f64>::from_fn(d, d, |i, j| trace_inner(&full[i], &px[j]));
        let sym = (&gram + gram.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let mut x_basis = Vec::new();
        let mut h_basis = Vec::new();
        for (col, lambda) in eig.eigenvalues.iter().enumerate() {
            let mut m = CMatrix::zeros(self.group.n, self.group.n);
            for (i, b) in full.iter().enumerate() {
                m += b * C64::new(eig.eigenvectors[(i, col)], 0.0);
            }
            if *lambda > 0.5 {
                x_basis.push(m);
            } else {
                h_basis.push(m);
            }
        }
        AlgebraBases { x_basis, h_basis }
    }

    /// Coordinates of `x` in the orthonormal basis of `X`.
    pub fn x_coordinates(&self, x: &SkewElement) -> Result<Vec<f64>> {
        self.check_size(x.n())?;
        let b = self.bases();
        let px = self.project_x_raw(x.matrix().as_matrix());
        Ok(b.x_basis.iter().map(|e| trace_inner(e, &px)).collect())
    }

    /// The element of `X` with the given coordinates.
    pub fn from_x_coordinates(&self, coords: &[f64]) -> Result<SkewElement> {
        let b = self.bases();
        if coords.len() != b.x_basis.len() {
            return invalid(format!("expected {} coordinates, got {}", b.x_basis.len(), coords.len()));
        }
        let n = self.group.n;
        let mut m = CMatrix::zeros(n, n);
        for (c, e) in coords.iter().zip(&b.x_basis) {
            m += e * C64::new(*c, 0.0);
        }
        Ok(SkewElement::from_raw(self.field(), m, Component::X))
    }

    /// Representatives of the connected components of `H`. In the real
    /// block-diagonal case `H` is `S(O(n_1) x ... x O(n_m))`; elsewhere `H`
    /// is connected.
    pub fn component_representatives(&self) -> Vec<GroupElement> {
        let id = GroupElement::identity(self.group.clone());
        let partition = match (self.group.kind, self.partition()) {
            (GroupKind::SO, Some(p)) => p,
            _ => return vec![id],
        };
        let m = partition.len();
        let starts: Vec<usize> = partition
            .iter()
            .scan(0, |s, p| {
                let start = *s;
                *s += p;
                Some(start)
            })
            .collect();
        let mut reps = Vec::new();
        for mask in 0u32..(1 << m) {
            if mask.count_ones() % 2 != 0 {
                continue;
            }
            let mut d = CMatrix::identity(self.group.n, self.group.n);
            for (j, start) in starts.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    d[(*start, *start)] = C64::new(-1.0, 0.0);
                }
            }
            reps.push(GroupElement::from_raw(&self.group, d));
        }
        reps
    }
}

/// `Re tr(a^H b)`.
pub(crate) fn trace_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Orthonormal basis of the Lie algebra for `Re tr(a^H b)`.
pub(crate) fn algebra_basis(g: &GroupSpec) -> Vec<CMatrix> {
    let n = g.n;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(g.dim());
    if g.kind == GroupKind::U {
        for j in 0..n {
            let mut m = CMatrix::zeros(n, n);
            m[(j, j)] = C64::new(0.0, 1.0);
            out.push(m);
        }
    }
    for j in 0..n {
        for k in j + 1..n {
            let mut m = CMatrix::zeros(n, n);
            m[(j, k)] = C64::new(s, 0.0);
            m[(k, j)] = C64::new(-s, 0.0);
            out.push(m);
            if g.kind == GroupKind::U {
                let mut m = CMatrix::zeros(n, n);
                m[(j, k)] = C64::new(0.0, s);
                m[(k, j)] = C64::new(0.0, s);
                out.push(m);
            }
        }
    }
    out
}

fn ensure_space_size(space: &HomSpace, x: &SkewElement) -> Result<()> {
    space.check_size(x.n())
}

/// Orthogonal projection onto the subalgebra `H`.
pub fn project_h(space: &HomSpace, x: &SkewElement) -> Result<SkewElement> {
    ensure_space_size(space, x)?;
    let m = space.project_h_raw(x.matrix().as_matrix());
    Ok(SkewElement::from_raw(space.field(), m, Component::H))
}

/// Orthogonal projection onto the complement `X` of `H`.
pub fn project_x(space: &HomSpace, x: &SkewElement) -> Result<SkewElement> {
    ensure_space_size(space, x)?;
    let m = space.project_x_raw(x.matrix().as_matrix());
    Ok(SkewElement::from_raw(space.field(), m, Component::X))
}

pub(crate) fn gaussian_matrix<R: Rng + ?Sized>(field: Field, n: usize, rng: &mut R) -> CMatrix {
    match field {
        Field::Real => CMatrix::from_fn(n, n, |_, _| C64::new(rng.sample(StandardNormal), 0.0)),
        Field::Complex => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            CMatrix::from_fn(n, n, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(s * re, s * im)
            })
        }
    }
}

/// Haar-distributed element, deterministic in the seed.
pub fn haar_sample(g: &GroupSpec, rng_seed: u64) -> GroupElement {
    haar_sample_rng(g, &mut ChaCha8Rng::seed_from_u64(rng_seed))
}

/// Haar sample from a caller-owned generator: QR of a Gaussian matrix with
/// the diagonal of R normalized to positive reals.
pub fn haar_sample_rng<R: Rng + ?Sized>(g: &GroupSpec, rng: &mut R) -> GroupElement {
    let n = g.n;
    match g.kind {
        GroupKind::U => {
            let z = gaussian_matrix(Field::Complex, n, rng);
            let (q, r) = z.qr().unpack();
            let mut q = q;
            for j in 0..n {
                let d = r[(j, j)];
                let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
                q.column_mut(j).iter_mut().for_each(|e| *e *= phase);
            }
            GroupElement::from_raw(g, q)
        }
        GroupKind::SO => {
            let z = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
            let (q, r) = z.qr().unpack();
            let mut q = q;
            for j in 0..n {
                if r[(j, j)] < 0.0 {
                    q.column_mut(j).iter_mut().for_each(|e| *e = -*e);
                }
            }
            if q.determinant() < 0.0 {
                q.column_mut(0).iter_mut().for_each(|e| *e = -*e);
            }
            GroupElement::from_raw(g, q.map(|x| C64::new(x, 0.0)))
        }
    }
}

/// Random tangent vector in the requested component with
/// `||x||_inf = radius * U`, `U` uniform on `(0, 1]`.
pub fn tangent_sample(space: &HomSpace, component: Component, radius: f64, rng_seed: u64) -> Result<SkewElement> {
    tangent_sample_rng(space, component, radius, &mut ChaCha8Rng::seed_from_u64(rng_seed))
}

pub fn tangent_sample_rng<R: Rng + ?Sized>(
    space: &HomSpace,
    component: Component,
    radius: f64,
    rng: &mut R,
) -> Result<SkewElement> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let n = space.n();
    let z = skew_part(&gaussian_matrix(space.field(), n, rng));
    let x = match component {
        Component::Full => z,
        Component::H => space.project_h_raw(&z),
        Component::X => space.project_x_raw(&z),
    };
    let u = 1.0 - rng.random::<f64>();
    let norm = op_norm(&x);
    if norm == 0.0 {
        return Ok(SkewElement::from_raw(space.field(), x, component));
    }
    let scaled = x * C64::new(radius * u / norm, 0.0);
    Ok(SkewElement::from_raw(space.field(), scaled, component))
}
