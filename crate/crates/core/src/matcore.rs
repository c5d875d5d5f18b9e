//! Dense matrix numerics: unitarily invariant norms, the exponential of
//! skew-Hermitian matrices, the principal logarithm of unitaries, eigenphases
//! and principal angles between subspaces.
//!
//! Real matrices are carried as complex matrices with zero imaginary part and
//! a [`Field::Real`] tag, so every decomposition runs in complex arithmetic.
//! The Hermitian eigendecomposition is the workhorse; unitary spectra come
//! from a complex Schur form, which is diagonal for normal matrices.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::groups::{Component, GroupElement, GroupSpec, SkewElement};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Default tolerance for algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-10;
/// Default tolerance for claims resting on a decomposition.
pub const DECOMPOSITION_TOL: f64 = 1e-8;
/// Default tolerance for claims resting on an optimization.
pub const OPTIMIZATION_TOL: f64 = 1e-4;
/// Skew-symmetry residual accepted for tangent vectors.
pub const SKEW_TOL: f64 = 1e-12;
/// Minimal eigenphase distance from pi accepted by the principal logarithm.
pub const BRANCH_TOL: f64 = 1e-9;

/// Per-call tolerance overrides.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub algebraic: f64,
    pub decomposition: f64,
    pub optimization: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { algebraic: ALGEBRAIC_TOL, decomposition: DECOMPOSITION_TOL, optimization: OPTIMIZATION_TOL }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Field {
    Real,
    Complex,
}

/// A finite square matrix over the reals or the complex numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    field: Field,
    data: CMatrix,
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

impl DenseMatrix {
    pub fn new(field: Field, data: CMatrix) -> Result<Self> {
        if data.nrows() == 0 || data.nrows() != data.ncols() {
            return invalid(format!("expected a non-empty square matrix, got {}x{}", data.nrows(), data.ncols()));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("matrix has non-finite entries");
        }
        if field == Field::Real {
            let scale = max_abs(&data).max(1.0);
            if data.iter().any(|z| z.im.abs() > SKEW_TOL * scale) {
                return invalid("real matrix has imaginary entries");
            }
        }
        Ok(Self::from_parts(field, data))
    }

    pub fn from_real(data: &DMatrix<f64>) -> Result<Self> {
        Self::new(Field::Real, data.map(|x| C64::new(x, 0.0)))
    }

    /// Wraps computed data, dropping imaginary parts in the real case.
    pub(crate) fn from_parts(field: Field, mut data: CMatrix) -> Self {
        if field == Field::Real {
            data.iter_mut().for_each(|z| z.im = 0.0);
        }
        DenseMatrix { field, data }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        DenseMatrix { field, data: CMatrix::identity(n, n) }
    }

    pub fn zeros(field: Field, n: usize) -> Self {
        DenseMatrix { field, data: CMatrix::zeros(n, n) }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn adjoint(&self) -> DenseMatrix {
        DenseMatrix { field: self.field, data: self.data.adjoint() }
    }

    /// Field of a product or sum: complex wins.
    pub(crate) fn join(a: Field, b: Field) -> Field {
        if a == Field::Real && b == Field::Real {
            Field::Real
        } else {
            Field::Complex
        }
    }

    pub fn mul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n() != other.n() {
            return invalid("size mismatch in product");
        }
        Ok(DenseMatrix::from_parts(Self::join(self.field, other.field), &self.data * &other.data))
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n() != other.n() {
            return invalid("size mismatch in difference");
        }
        Ok(DenseMatrix::from_parts(Self::join(self.field, other.field), &self.data - &other.data))
    }
}

/// A symmetric gauge function on the singular values.
#[derive(Clone)]
pub enum Gauge {
    /// `sum_k w_k s_k` over singular values in decreasing order; the
    /// weights are non-negative and non-increasing.
    Weights(Vec<f64>),
    /// User supplied gauge, called with absolute values sorted decreasingly.
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

/// A unitarily invariant matrix norm.
#[derive(Clone)]
pub enum NormSpec {
    Operator,
    Schatten(f64),
    Gauge(Gauge),
}

impl fmt::Debug for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NormSpec({self})")
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormSpec::Operator => write!(f, "operator"),
            NormSpec::Schatten(p) if p.is_infinite() => write!(f, "schatten:inf"),
            NormSpec::Schatten(p) => write!(f, "schatten:{p}"),
            NormSpec::Gauge(Gauge::Weights(w)) => {
                let parts: Vec<String> = w.iter().map(|x| x.to_string()).collect();
                write!(f, "weights:{}", parts.join(","))
            }
            NormSpec::Gauge(Gauge::Custom(_)) => write!(f, "custom"),
        }
    }
}

impl FromStr for NormSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h.trim(), Some(t.trim())),
            None => (s, None),
        };
        match (head.to_ascii_lowercase().as_str(), tail) {
            ("operator" | "op" | "spectral", None) => Ok(NormSpec::Operator),
            ("schatten", Some(p)) => {
                let p = match p {
                    "inf" | "infinity" => f64::INFINITY,
                    other => other
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad Schatten exponent {other:?}")))?,
                };
                NormSpec::schatten(p)
            }
            ("weights", Some(w)) => {
                let weights = w
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::InvalidArgument(format!("bad weight list {w:?}")))?;
                NormSpec::weighted(weights)
            }
            _ => invalid(format!("unknown norm {s:?}")),
        }
    }
}

impl NormSpec {
    pub fn schatten(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return invalid(format!("Schatten exponent must be >= 1, got {p}"));
        }
        Ok(NormSpec::Schatten(p))
    }

    pub fn weighted(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || !(weights[0] > 0.0) {
            return invalid("gauge weights need a positive leading weight");
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.windows(2).any(|p| p[1] > p[0]) {
            return invalid("gauge weights must be finite, non-negative and non-increasing");
        }
        Ok(NormSpec::Gauge(Gauge::Weights(weights)))
    }

    pub fn custom(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        NormSpec::Gauge(Gauge::Custom(Arc::new(f)))
    }

    pub fn is_operator(&self) -> bool {
        matches!(self, NormSpec::Operator) || matches!(self, NormSpec::Schatten(p) if p.is_infinite())
    }

    /// Applies the symmetric gauge function to a vector of reals.
    pub fn gauge(&self, values: &[f64]) -> f64 {
        let mut v: Vec<f64> = values.iter().map(|x| x.abs()).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        let top = v.first().copied().unwrap_or(0.0);
        match self {
            NormSpec::Operator => top,
            NormSpec::Schatten(p) if p.is_infinite() => top,
            NormSpec::Schatten(p) => {
                if top == 0.0 {
                    return 0.0;
                }
                let sum: f64 = v.iter().map(|x| (x / top).powf(*p)).sum();
                top * sum.powf(1.0 / p)
            }
            NormSpec::Gauge(Gauge::Weights(w)) => v.iter().zip(w).map(|(x, w)| x * w).sum(),
            NormSpec::Gauge(Gauge::Custom(f)) => f(&v),
        }
    }
}

/// Singular values in decreasing order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Unitarily invariant norm of `x`: the gauge applied to its singular values.
pub fn schatten_norm(x: &DenseMatrix, spec: &NormSpec) -> f64 {
    spec.gauge(&singular_values(x.as_matrix()))
}

/// Like [`schatten_norm`] for unchecked data.
pub fn matrix_norm(m: &CMatrix, spec: &NormSpec) -> Result<f64> {
    let x = DenseMatrix::new(Field::Complex, m.clone())?;
    Ok(schatten_norm(&x, spec))
}

/// Operator norm, the most frequent special case.
pub(crate) fn op_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Eigendecomposition of the Hermitian part of `h`: eigenvalues ascending,
/// eigenvectors in columns.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(h.nrows(), h.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `V diag(f(lambda)) V^H` for the Hermitian matrix `h`.
pub(crate) fn hermitian_function(h: &CMatrix, f: impl Fn(f64) -> C64) -> CMatrix {
    let (values, v) = hermitian_eigen(h);
    let mut scaled = v.clone();
    for (j, lambda) in values.iter().enumerate() {
        let fj = f(*lambda);
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= fj);
    }
    scaled * v.adjoint()
}

/// Skew-Hermitian part `(x - x^H)/2`.
pub(crate) fn skew_part(x: &CMatrix) -> CMatrix {
    (x - x.adjoint()) * C64::new(0.5, 0.0)
}

/// Residual of skew-symmetry relative to the size of the entries.
pub(crate) fn skew_residual(x: &CMatrix) -> f64 {
    max_abs(&(x + x.adjoint())) / max_abs(x).max(1.0)
}

/// `e^x` for skew-Hermitian `x`, computed as `V diag(e^{i a}) V^H` from the
/// Hermitian matrix `-i x = V diag(a) V^H`.
pub(crate) fn expm_skew_raw(x: &CMatrix) -> CMatrix {
    let h = x * C64::new(0.0, -1.0);
    hermitian_function(&h, |a| C64::new(a.cos(), a.sin()))
}

/// Exponential of a tangent vector, landing in `U(n)` or `SO(n)`.
pub fn expm_skew(x: &SkewElement) -> GroupElement {
    let m = x.matrix();
    let group = GroupSpec::for_field(m.field(), m.n());
    let u = DenseMatrix::from_parts(m.field(), expm_skew_raw(m.as_matrix()));
    GroupElement::from_parts(u, group)
}

/// Exponential of a matrix that must be skew-Hermitian (skew-symmetric in
/// the real case) to within `1e-12`.
pub fn expm_skew_matrix(x: &DenseMatrix) -> Result<GroupElement> {
    let skew = SkewElement::new(x.clone())?;
    Ok(expm_skew(&skew))
}

/// Principal argument in `(-pi, pi]`.
pub fn principal_phase(z: C64) -> f64 {
    let p = z.im.atan2(z.re);
    if p <= -PI {
        PI
    } else {
        p
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Eigenvalues and unitary Schur vectors of a unitary matrix. For normal
/// input the triangular factor is diagonal up to rounding.
pub(crate) fn unitary_schur(u: &CMatrix) -> Result<(Vec<C64>, CMatrix)> {
    if let Some(schur) = Schur::try_new(u.clone(), f64::EPSILON, 50_000) {
        let (q, t) = schur.unpack();
        return Ok(((0..t.nrows()).map(|i| t[(i, i)]).collect(), q));
    }
    normal_eigen(u).ok_or_else(|| Error::Convergence("complex Schur iteration".into()))
}

/// Fallback for normal input when the Schur iteration stalls: the
/// eigenvectors of `Re u + c Im u` diagonalize `u` unless `c` makes two
/// distinct eigenvalues collide, so a few generic values of `c` are tried.
fn normal_eigen(u: &CMatrix) -> Option<(Vec<C64>, CMatrix)> {
    let half = C64::new(0.5, 0.0);
    let re = (u + u.adjoint()) * half;
    let im = (u - u.adjoint()) * C64::new(0.0, -0.5);
    for c in [0.577_215_664_9, -1.618_033_988_7, 3.359_885_666_2, -0.801_937_735_8] {
        let h = &re + &im * C64::new(c, 0.0);
        let (_, q) = hermitian_eigen(&h);
        let d = q.adjoint() * u * &q;
        let off = (0..d.nrows())
            .flat_map(|i| (0..d.ncols()).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| d[(i, j)].norm())
            .fold(0.0, f64::max);
        if off < DECOMPOSITION_TOL {
            return Some(((0..d.nrows()).map(|i| d[(i, i)]).collect(), q));
        }
    }
    None
}

/// Eigenphases of a unitary, each in `(-pi, pi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenphaseVector {
    phases: Vec<f64>,
}

impl EigenphaseVector {
    /// Sorts by decreasing absolute value; ties put the positive phase first.
    pub fn from_phases(mut phases: Vec<f64>) -> Self {
        phases.sort_by(|a, b| b.abs().total_cmp(&a.abs()).then(b.total_cmp(a)));
        EigenphaseVector { phases }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn max_abs(&self) -> f64 {
        self.phases.first().map(|p| p.abs()).unwrap_or(0.0)
    }

    pub fn spectrum(&self) -> Vec<C64> {
        self.phases.iter().map(|p| C64::new(p.cos(), p.sin())).collect()
    }
}

pub(crate) fn eigenphases_raw(u: &CMatrix) -> Result<Vec<f64>> {
    let (values, _) = unitary_schur(u)?;
    Ok(values.into_iter().map(principal_phase).collect())
}

pub fn eigenphases(u: &GroupElement) -> Result<EigenphaseVector> {
    Ok(EigenphaseVector::from_phases(eigenphases_raw(u.matrix().as_matrix())?))
}

/// Principal logarithm of `u` with the default branch tolerance.
pub fn logm_unitary(u: &GroupElement) -> Result<SkewElement> {
    logm_unitary_with_tol(u, BRANCH_TOL)
}

/// The unique `x` with `e^x = u` and `||x||_inf < pi`. Refuses inputs with an
/// eigenvalue within `branch_tol` (in phase) of -1.
pub fn logm_unitary_with_tol(u: &GroupElement, branch_tol: f64) -> Result<SkewElement> {
    let m = u.matrix();
    let (values, q) = unitary_schur(m.as_matrix())?;
    let phases: Vec<f64> = values.into_iter().map(principal_phase).collect();
    if let Some(&phase) = phases.iter().find(|p| PI - p.abs() <= branch_tol) {
        return Err(Error::BranchAmbiguity { phase, tolerance: branch_tol });
    }
    let mut scaled = q.clone();
    for (j, phase) in phases.iter().enumerate() {
        let z = C64::new(0.0, *phase);
        scaled.column_mut(j).iter_mut().for_each(|e| *e *= z);
    }
    let x = skew_part(&(scaled * q.adjoint()));
    Ok(SkewElement::from_parts(DenseMatrix::from_parts(m.field(), x), Component::Full))
}

/// An `n x k` matrix with orthonormal columns, spanning a `k`-dimensional
/// subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    field: Field,
    data: CMatrix,
}

impl Frame {
    pub fn new(field: Field, data: CMatrix) -> Result<Self> {
        let (n, k) = data.shape();
        if k == 0 || k > n {
            return invalid(format!("frame must be n x k with 1 <= k <= n, got {n}x{k}"));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("frame has non-finite entries");
        }
        let gram = data.adjoint() * &data - CMatrix::identity(k, k);
        if max_abs(&gram) > ALGEBRAIC_TOL {
            return invalid("frame columns are not orthonormal");
        }
        let mut data = data;
        if field == Field::Real {
            data.iter_mut().for_each(|z| z.im = 0.0);
        }
        Ok(Frame { field, data })
    }

    /// Columns `start..start + k` of a group element.
    pub fn from_columns(u: &GroupElement, start: usize, k: usize) -> Result<Self> {
        let n = u.n();
        if k == 0 || start + k > n {
            return invalid("column range out of bounds");
        }
        Ok(Frame { field: u.matrix().field(), data: u.matrix().as_matrix().columns(start, k).into_owned() })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn k(&self) -> usize {
        self.data.ncols()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.data
    }
}

pub(crate) fn principal_angles_raw(e: &CMatrix, f: &CMatrix) -> Vec<f64> {
    let k = e.ncols();
    let overlap = e.adjoint() * f;
    let mut cosines = singular_values(&overlap);
    cosines.reverse();
    let residual = f - e * &overlap;
    let sines = singular_values(&residual);
    (0..k)
        .map(|i| {
            let c = cosines[i].clamp(0.0, 1.0);
            let s = sines.get(i).copied().unwrap_or(0.0).clamp(0.0, 1.0);
            // arcsin is the well-conditioned branch for small angles
            if c * c >= 0.5 {
                s.asin()
            } else {
                c.acos()
            }
        })
        .collect()
}

/// Principal angles between the spans of two frames, in decreasing order.
pub fn principal_angles(e: &Frame, f: &Frame) -> Result<Vec<f64>> {
    if e.n() != f.n() || e.k() != f.k() {
        return invalid(format!("frame shapes differ: {}x{} vs {}x{}", e.n(), e.k(), f.n(), f.k()));
    }
    Ok(principal_angles_raw(&e.data, &f.data))
}
