//! Finite-dimensional involutive algebras realized as block-diagonal complex
//! matrix algebras.
//!
//! A single block of size `n` is the full matrix algebra `M_n(C)`; `n` blocks of
//! size one give the commutative (classical) algebra `C^n`. The involution is the
//! conjugate transpose and the norm is the spectral radius of `R*R`, which makes
//! every such algebra a C*-algebra.

use std::fmt;
use std::ops::{Add, Mul, Neg, Range, Sub};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default relative tolerance for eigenvalue grouping and Hermiticity checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Shape of the algebra: total dimension and the direct-sum block structure.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgebraDescriptor {
    dimension: usize,
    block_sizes: Vec<usize>,
}

impl AlgebraDescriptor {
    pub fn new(block_sizes: Vec<usize>) -> Result<Arc<Self>> {
        if block_sizes.is_empty() {
            return Err(Error::InvalidAlgebra("no blocks".into()));
        }
        if block_sizes.contains(&0) {
            return Err(Error::InvalidAlgebra("zero-sized block".into()));
        }
        let dimension = block_sizes.iter().sum();
        Ok(Arc::new(Self {
            dimension,
            block_sizes,
        }))
    }

    /// The full matrix algebra `M_n(C)`.
    pub fn full(n: usize) -> Arc<Self> {
        assert!(n > 0, "algebra dimension must be positive");
        Arc::new(Self {
            dimension: n,
            block_sizes: vec![n],
        })
    }

    /// The commutative algebra of diagonal `n x n` matrices.
    pub fn classical(n: usize) -> Arc<Self> {
        assert!(n > 0, "algebra dimension must be positive");
        Arc::new(Self {
            dimension: n,
            block_sizes: vec![1; n],
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn is_full(&self) -> bool {
        self.block_sizes.len() == 1
    }

    pub fn is_commutative(&self) -> bool {
        self.block_sizes.iter().all(|&b| b == 1)
    }

    /// Index ranges of the diagonal blocks, in order.
    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.block_sizes
            .iter()
            .map(|&b| {
                let r = start..start + b;
                start += b;
                r
            })
            .collect()
    }

    pub fn block_of(&self, index: usize) -> usize {
        let mut start = 0;
        for (b, &size) in self.block_sizes.iter().enumerate() {
            if index < start + size {
                return b;
            }
            start += size;
        }
        panic!("index {index} outside algebra of dimension {}", self.dimension);
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.block_of(i) == self.block_of(j)
    }

    /// Complex dimension of the algebra as a vector space, `sum b^2`.
    pub fn linear_dimension(&self) -> usize {
        self.block_sizes.iter().map(|b| b * b).sum()
    }
}

impl fmt::Display for AlgebraDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<String> = self.block_sizes.iter().map(|b| format!("M{b}")).collect();
        write!(f, "{}", blocks.join(" + "))
    }
}

/// An element of a block-diagonal matrix algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    algebra: Arc<AlgebraDescriptor>,
    matrix: CMatrix,
}

impl AlgebraElement {
    /// Wraps `matrix` as an element of `algebra`.
    ///
    /// Off-block entries up to `1e-12` in magnitude are cleared; anything larger is
    /// rejected.
    pub fn new(algebra: Arc<AlgebraDescriptor>, mut matrix: CMatrix) -> Result<Self> {
        let n = algebra.dimension();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: matrix.nrows().max(matrix.ncols()),
            });
        }
        if !algebra.is_full() {
            for i in 0..n {
                for j in 0..n {
                    if !algebra.same_block(i, j) {
                        if matrix[(i, j)].norm() > 1e-12 {
                            return Err(Error::OffBlockEntry { row: i, col: j });
                        }
                        matrix[(i, j)] = ZERO;
                    }
                }
            }
        }
        Ok(Self { algebra, matrix })
    }

    pub fn from_fn(
        algebra: Arc<AlgebraDescriptor>,
        f: impl FnMut(usize, usize) -> C64,
    ) -> Result<Self> {
        let n = algebra.dimension();
        Self::new(algebra, CMatrix::from_fn(n, n, f))
    }

    pub fn from_real_diagonal(algebra: Arc<AlgebraDescriptor>, diagonal: &[f64]) -> Result<Self> {
        let n = algebra.dimension();
        if diagonal.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: diagonal.len(),
            });
        }
        let d = CVector::from_iterator(n, diagonal.iter().map(|&x| C64::new(x, 0.0)));
        Ok(Self {
            algebra,
            matrix: CMatrix::from_diagonal(&d),
        })
    }

    pub fn identity(algebra: Arc<AlgebraDescriptor>) -> Self {
        let n = algebra.dimension();
        Self {
            algebra,
            matrix: CMatrix::identity(n, n),
        }
    }

    pub fn zero(algebra: Arc<AlgebraDescriptor>) -> Self {
        let n = algebra.dimension();
        Self {
            algebra,
            matrix: CMatrix::zeros(n, n),
        }
    }

    /// Rank-one projector `|v><v| / <v, v>`.
    pub fn rank_one_projector(algebra: Arc<AlgebraDescriptor>, v: &CVector) -> Result<Self> {
        let norm2 = v.norm_squared();
        if norm2 == 0.0 {
            return Err(Error::InvalidArgument("zero vector".into()));
        }
        let m = v * v.adjoint() / C64::new(norm2, 0.0);
        Self::new(algebra, m)
    }

    pub fn algebra(&self) -> &Arc<AlgebraDescriptor> {
        &self.algebra
    }

    pub fn dimension(&self) -> usize {
        self.algebra.dimension()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub(crate) fn with_matrix(&self, matrix: CMatrix) -> Self {
        Self {
            algebra: self.algebra.clone(),
            matrix,
        }
    }

    fn check_same_algebra(&self, other: &Self) -> Result<()> {
        if self.dimension() != other.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: other.dimension(),
            });
        }
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch);
        }
        Ok(())
    }

    /// The involution: conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.with_matrix(self.matrix.adjoint())
    }

    pub fn scale(&self, factor: C64) -> Self {
        self.with_matrix(&self.matrix * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.with_matrix(self.matrix.map(|z| z * factor))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_algebra(other)?;
        Ok(self.with_matrix(&self.matrix + &other.matrix))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_algebra(other)?;
        Ok(self.with_matrix(&self.matrix - &other.matrix))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same_algebra(other)?;
        Ok(self.with_matrix(&self.matrix * &other.matrix))
    }

    /// `AB - BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_same_algebra(other)?;
        Ok(self.with_matrix(&self.matrix * &other.matrix - &other.matrix * &self.matrix))
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry magnitude of `A - A*`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dimension();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tolerance: f64) -> bool {
        self.hermitian_deviation() <= tolerance * self.max_abs().max(1.0)
    }

    fn require_hermitian(&self, tolerance: f64) -> Result<()> {
        if self.is_hermitian(tolerance) {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                deviation: self.hermitian_deviation(),
            })
        }
    }

    /// Sorted distinct eigenvalues of a Hermitian element; eigenvalues closer than
    /// `tolerance` (relative to the largest magnitude) are merged.
    pub fn spectrum(&self, tolerance: f64) -> Result<Vec<f64>> {
        self.require_hermitian(tolerance)?;
        let (values, _) = hermitian_eigen(&self.matrix);
        Ok(group_eigenvalues(&values, tolerance)
            .into_iter()
            .map(|g| g.value)
            .collect())
    }

    pub fn spectral_decomposition(&self, tolerance: f64) -> Result<SpectralDecomposition> {
        self.require_hermitian(tolerance)?;
        let (values, vectors) = hermitian_eigen(&self.matrix);
        let groups = group_eigenvalues(&values, tolerance);
        let n = self.dimension();
        let pairs = groups
            .into_iter()
            .map(|g| {
                let mut cols: Vec<CVector> = g.indices.iter().map(|&k| vectors.column(k).into_owned()).collect();
                gram_schmidt(&mut cols);
                let mut p = CMatrix::zeros(n, n);
                for v in &cols {
                    p += v * v.adjoint();
                }
                (g.value, self.with_matrix(p))
            })
            .collect();
        Ok(SpectralDecomposition { pairs, tolerance })
    }

    /// C*-norm: square root of the largest eigenvalue of `R*R`.
    pub fn norm(&self) -> f64 {
        let rr = self.matrix.adjoint() * &self.matrix;
        let (values, _) = hermitian_eigen(&rr);
        values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }

    /// Hermitian, idempotent and of unit trace, all within `tolerance`.
    pub fn is_one_dim_projector(&self, tolerance: f64) -> bool {
        if self.hermitian_deviation() > tolerance {
            return false;
        }
        let sq = &self.matrix * &self.matrix;
        let idem = (sq - &self.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max);
        idem <= tolerance && (self.trace() - ONE).norm() <= tolerance
    }

    pub fn positivity_report(&self) -> PositivityReport {
        let rr = self.adjoint().with_matrix(self.matrix.adjoint() * &self.matrix);
        let scale = rr.max_abs().max(1.0);
        let (values, vectors) = hermitian_eigen(&rr.matrix);
        let min_eigenvalue = values.first().copied().unwrap_or(0.0);
        let roots = CVector::from_iterator(
            values.len(),
            values.iter().map(|&l| C64::new(l.max(0.0).sqrt(), 0.0)),
        );
        let sqrt = &vectors * CMatrix::from_diagonal(&roots) * vectors.adjoint();
        let sqrt_residual = max_abs(&(&sqrt * &sqrt - &rr.matrix));
        let rr_norm = values.last().copied().unwrap_or(0.0).max(0.0);
        let null_implication = rr_norm > 1e-20 || self.max_abs() <= 1e-10;
        PositivityReport {
            hermitian_deviation: rr.hermitian_deviation() / scale,
            min_eigenvalue,
            sqrt_residual: sqrt_residual / scale,
            null_implication,
            square_root: self.with_matrix(sqrt),
        }
    }

    /// `R*R` is positive with a principal square root, and vanishes only for `R = 0`.
    pub fn check_positivity_structure(&self) -> bool {
        self.positivity_report().holds()
    }

    /// Short stable digest of the quantized entries, used to key observables.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for b in self.algebra.block_sizes() {
            h.update((*b as u64).to_le_bytes());
        }
        for z in self.matrix.iter() {
            h.update(quantize(z.re).to_le_bytes());
            h.update(quantize(z.im).to_le_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }
}

fn quantize(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Outcome of [`AlgebraElement::positivity_report`].
#[derive(Debug, Clone)]
pub struct PositivityReport {
    pub hermitian_deviation: f64,
    pub min_eigenvalue: f64,
    pub sqrt_residual: f64,
    pub null_implication: bool,
    pub square_root: AlgebraElement,
}

impl PositivityReport {
    pub fn holds(&self) -> bool {
        self.hermitian_deviation <= 1e-12
            && self.min_eigenvalue >= -1e-12
            && self.sqrt_residual <= 1e-10
            && self.null_implication
    }
}

impl<'a> Add<&'a AlgebraElement> for &'a AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &'a AlgebraElement) -> AlgebraElement {
        self.try_add(rhs).expect("algebra mismatch in addition")
    }
}

impl<'a> Sub<&'a AlgebraElement> for &'a AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &'a AlgebraElement) -> AlgebraElement {
        self.try_sub(rhs).expect("algebra mismatch in subtraction")
    }
}

impl<'a> Mul<&'a AlgebraElement> for &'a AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: &'a AlgebraElement) -> AlgebraElement {
        self.try_mul(rhs).expect("algebra mismatch in multiplication")
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale_real(-1.0)
    }
}

/// Eigenvalue/projector pairs of a Hermitian element, ascending in eigenvalue.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub pairs: Vec<(f64, AlgebraElement)>,
    pub tolerance: f64,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|(l, _)| *l).collect()
    }

    /// `sum lambda_k p_k`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.pairs[0].1.dimension();
        self.pairs
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, (l, p)| acc + p.matrix().map(|z| z * *l))
    }

    /// Largest entry of `sum p_k - I`.
    pub fn resolution_residual(&self) -> f64 {
        let n = self.pairs[0].1.dimension();
        let sum = self
            .pairs
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, (_, p)| acc + p.matrix());
        max_abs(&(sum - CMatrix::identity(n, n)))
    }

    /// Largest deviation from `p_j p_k = delta_jk p_k` over all pairs.
    pub fn orthogonality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, (_, pj)) in self.pairs.iter().enumerate() {
            for (k, (_, pk)) in self.pairs.iter().enumerate() {
                let prod = pj.matrix() * pk.matrix();
                let target = if j == k { pk.matrix().clone() } else { CMatrix::zeros(prod.nrows(), prod.ncols()) };
                worst = worst.max(max_abs(&(prod - target)));
            }
        }
        worst
    }
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues ascending and
/// eigenvectors as the matching columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    // symmetrize so tiny rounding asymmetries do not leak into the solver
    let h = (m + m.adjoint()).map(|z| z * 0.5);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub(crate) struct EigenGroup {
    pub value: f64,
    pub indices: Vec<usize>,
}

/// Groups ascending eigenvalues whose consecutive gaps are at most
/// `tolerance * max(|lambda|)`.
pub(crate) fn group_eigenvalues(values: &[f64], tolerance: f64) -> Vec<EigenGroup> {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let gap = tolerance * if scale > 0.0 { scale } else { 1.0 };
    let mut groups: Vec<EigenGroup> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (k, &v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if v - last <= gap => g.indices.push(k),
            _ => groups.push(EigenGroup {
                value: 0.0,
                indices: vec![k],
            }),
        }
        last = v;
    }
    for g in &mut groups {
        g.value = g.indices.iter().map(|&k| values[k]).sum::<f64>() / g.indices.len() as f64;
    }
    groups
}

/// Modified Gram-Schmidt in place.
pub(crate) fn gram_schmidt(vectors: &mut [CVector]) {
    for k in 0..vectors.len() {
        for j in 0..k {
            let (head, tail) = vectors.split_at_mut(k);
            let overlap = head[j].dotc(&tail[0]);
            tail[0] -= &head[j] * overlap;
        }
        let norm = vectors[k].norm();
        if norm > 0.0 {
            vectors[k] /= C64::new(norm, 0.0);
        }
    }
}

/// Standard observables on the full 2x2 algebra.
pub mod pauli {
    use super::*;

    fn build(entries: [[C64; 2]; 2]) -> AlgebraElement {
        AlgebraElement::from_fn(AlgebraDescriptor::full(2), |i, j| entries[i][j])
            .expect("2x2 matrix fits the full algebra")
    }

    pub fn x() -> AlgebraElement {
        build([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn y() -> AlgebraElement {
        let i = C64::new(0.0, 1.0);
        build([[ZERO, -i], [i, ZERO]])
    }

    pub fn z() -> AlgebraElement {
        build([[ONE, ZERO], [ZERO, -ONE]])
    }
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    dimension: usize,
    block_sizes: Vec<usize>,
    matrix: Vec<Vec<[f64; 2]>>,
}

impl Serialize for AlgebraElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dimension();
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| [self.matrix[(i, j)].re, self.matrix[(i, j)].im]).collect())
            .collect();
        ElementRepr {
            dimension: n,
            block_sizes: self.algebra.block_sizes().to_vec(),
            matrix,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AlgebraElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = ElementRepr::deserialize(deserializer)?;
        let algebra = AlgebraDescriptor::new(repr.block_sizes).map_err(D::Error::custom)?;
        if algebra.dimension() != repr.dimension {
            return Err(D::Error::custom("block sizes do not sum to dimension"));
        }
        let n = repr.dimension;
        if repr.matrix.len() != n || repr.matrix.iter().any(|row| row.len() != n) {
            return Err(D::Error::custom("matrix shape does not match dimension"));
        }
        let m = CMatrix::from_fn(n, n, |i, j| C64::new(repr.matrix[i][j][0], repr.matrix[i][j][1]));
        AlgebraElement::new(algebra, m).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_element(rng: &mut impl Rng, n: usize) -> AlgebraElement {
        AlgebraElement::from_fn(AlgebraDescriptor::full(n), |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .unwrap()
    }

    fn random_hermitian(rng: &mut impl Rng, n: usize) -> AlgebraElement {
        let r = random_element(rng, n);
        (&r + &r.adjoint()).scale_real(0.5)
    }

    #[test]
    fn adjoint_cases() {
        let id = AlgebraElement::identity(AlgebraDescriptor::full(3));
        assert_eq!(id.adjoint(), id);
        let i = C64::new(0.0, 1.0);
        let d = AlgebraElement::from_fn(AlgebraDescriptor::full(2), |r, c| {
            if r != c { ZERO } else if r == 0 { i } else { -i }
        })
        .unwrap();
        assert_eq!(d.adjoint().matrix()[(0, 0)], -i);
        assert_eq!(d.adjoint().matrix()[(1, 1)], i);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = random_element(&mut rng, 4);
        let s = random_element(&mut rng, 4);
        assert_eq!(r.adjoint().adjoint(), r);
        let lhs = (&r * &s).adjoint();
        let rhs = &s.adjoint() * &r.adjoint();
        assert!(max_abs(&(lhs.matrix() - rhs.matrix())) <= 1e-14);
    }

    #[test]
    fn spectrum_examples() {
        assert_eq!(pauli::x().spectrum(DEFAULT_TOLERANCE).unwrap().len(), 2);
        let s = pauli::x().spectrum(DEFAULT_TOLERANCE).unwrap();
        assert!((s[0] + 1.0).abs() < 1e-12 && (s[1] - 1.0).abs() < 1e-12);
        let id = AlgebraElement::identity(AlgebraDescriptor::full(5));
        let s = id.spectrum(DEFAULT_TOLERANCE).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s[0] - 1.0).abs() < 1e-12);
        let d = AlgebraElement::from_real_diagonal(AlgebraDescriptor::full(3), &[0.0, 1.0, 1.0]).unwrap();
        let s = d.spectrum(DEFAULT_TOLERANCE).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s[0].abs() < 1e-12 && (s[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectrum_rejects_non_hermitian() {
        let m = AlgebraElement::from_fn(AlgebraDescriptor::full(2), |i, j| {
            if i == 0 && j == 1 { ONE } else { ZERO }
        })
        .unwrap();
        assert!(matches!(m.spectrum(DEFAULT_TOLERANCE), Err(Error::NotHermitian { .. })));
        assert!(m.spectral_decomposition(DEFAULT_TOLERANCE).is_err());
    }

    #[test]
    fn spectrum_is_the_same_in_a_larger_block_algebra() {
        // diag(2, 5) viewed inside M2 and inside C + C
        let full = AlgebraElement::from_real_diagonal(AlgebraDescriptor::full(2), &[2.0, 5.0]).unwrap();
        let classical = AlgebraElement::from_real_diagonal(AlgebraDescriptor::classical(2), &[2.0, 5.0]).unwrap();
        assert_eq!(full.spectrum(1e-9).unwrap(), classical.spectrum(1e-9).unwrap());
    }

    #[test]
    fn decomposition_of_diagonals() {
        let d = AlgebraElement::from_real_diagonal(AlgebraDescriptor::full(3), &[2.0, 2.0, 5.0]).unwrap();
        let sd = d.spectral_decomposition(DEFAULT_TOLERANCE).unwrap();
        assert_eq!(sd.pairs.len(), 2);
        assert!((sd.pairs[0].0 - 2.0).abs() < 1e-12);
        let p0 = AlgebraElement::from_real_diagonal(AlgebraDescriptor::full(3), &[1.0, 1.0, 0.0]).unwrap();
        assert!(max_abs(&(sd.pairs[0].1.matrix() - p0.matrix())) < 1e-12);
        assert!((sd.pairs[1].0 - 5.0).abs() < 1e-12);

        let sd = pauli::z().spectral_decomposition(DEFAULT_TOLERANCE).unwrap();
        assert!((sd.pairs[0].0 + 1.0).abs() < 1e-12);
        assert!((sd.pairs[0].1.matrix()[(1, 1)].re - 1.0).abs() < 1e-12);
        assert!((sd.pairs[1].1.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decomposition_reassembles_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=8 {
            let a = random_hermitian(&mut rng, n);
            let sd = a.spectral_decomposition(DEFAULT_TOLERANCE).unwrap();
            // oracle: direct reassembly against the input matrix
            assert!(max_abs(&(sd.reconstruct() - a.matrix())) <= 1e-10);
            assert!(sd.resolution_residual() <= 1e-8);
            assert!(sd.orthogonality_residual() <= 1e-8);
            assert!(sd.eigenvalues().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn norm_examples() {
        let id = AlgebraElement::identity(AlgebraDescriptor::full(4));
        assert!((id.norm() - 1.0).abs() < 1e-12);
        let v = CVector::from_vec(vec![ONE, ONE, ZERO]);
        let p = AlgebraElement::rank_one_projector(AlgebraDescriptor::full(3), &v).unwrap();
        assert!((p.scale_real(3.0).norm() - 3.0).abs() < 1e-12);
        assert_eq!(AlgebraElement::zero(AlgebraDescriptor::full(3)).norm(), 0.0);
    }

    #[test]
    fn one_dim_projector_predicate() {
        let alg = AlgebraDescriptor::full(3);
        let p = AlgebraElement::from_real_diagonal(alg.clone(), &[1.0, 0.0, 0.0]).unwrap();
        assert!(p.is_one_dim_projector(1e-12));
        let q = AlgebraElement::from_real_diagonal(alg.clone(), &[1.0, 1.0, 0.0]).unwrap();
        assert!(!q.is_one_dim_projector(1e-12));
        assert!(!AlgebraElement::identity(alg).is_one_dim_projector(1e-12));
    }

    #[test]
    fn positivity_examples() {
        let alg = AlgebraDescriptor::full(2);
        let zero = AlgebraElement::zero(alg.clone());
        let rep = zero.positivity_report();
        assert!(rep.holds());
        assert_eq!(rep.square_root.max_abs(), 0.0);

        let rep = pauli::x().positivity_report();
        assert!(rep.holds());
        let id = AlgebraElement::identity(alg);
        assert!(max_abs(&(rep.square_root.matrix() - id.matrix())) < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let r = random_element(&mut rng, 5);
            let rep = r.positivity_report();
            assert!(rep.min_eigenvalue >= -1e-12);
            assert!(rep.holds());
        }
    }

    #[test]
    fn commutator_examples() {
        let x = pauli::x();
        assert_eq!(x.commutator(&x).unwrap().max_abs(), 0.0);
        let a = AlgebraElement::from_real_diagonal(AlgebraDescriptor::full(2), &[1.0, 2.0]).unwrap();
        let b = AlgebraElement::from_real_diagonal(AlgebraDescriptor::full(2), &[3.0, 4.0]).unwrap();
        assert_eq!(a.commutator(&b).unwrap().max_abs(), 0.0);

        // oracle: hand-multiplied 2x2 products
        // XY = [[i, 0], [0, -i]], YX = [[-i, 0], [0, i]]
        let i = C64::new(0.0, 1.0);
        let xy_minus_yx = CMatrix::from_row_slice(2, 2, &[i - (-i), ZERO, ZERO, -i - i]);
        let c = x.commutator(&pauli::y()).unwrap();
        assert!(max_abs(&(c.matrix() - &xy_minus_yx)) < 1e-15);
        let two_i_z = pauli::z().scale(C64::new(0.0, 2.0));
        assert!(max_abs(&(c.matrix() - two_i_z.matrix())) < 1e-15);

        let big = AlgebraElement::identity(AlgebraDescriptor::full(3));
        assert!(matches!(x.commutator(&big), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn block_structure_is_enforced() {
        let alg = AlgebraDescriptor::new(vec![1, 2]).unwrap();
        assert_eq!(alg.dimension(), 3);
        assert_eq!(alg.linear_dimension(), 5);
        let bad = AlgebraElement::from_fn(alg.clone(), |_, _| ONE);
        assert!(matches!(bad, Err(Error::OffBlockEntry { .. })));
        let ok = AlgebraElement::from_fn(alg, |i, j| if (i == 0) == (j == 0) { ONE } else { ZERO });
        assert!(ok.is_ok());
        assert!(AlgebraDescriptor::new(vec![]).is_err());
        assert!(AlgebraDescriptor::new(vec![2, 0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let alg = AlgebraDescriptor::new(vec![2, 1]).unwrap();
        let e = AlgebraElement::from_fn(alg, |i, j| {
            if (i < 2) == (j < 2) { C64::new(i as f64, j as f64 - 0.5) } else { ZERO }
        })
        .unwrap();
        let s = serde_json::to_string(&e).unwrap();
        assert!(s.starts_with("{\"dimension\":3,\"block_sizes\":[2,1],\"matrix\":[[[0.0,-0.5]"));
        let back: AlgebraElement = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
        assert_eq!(back.fingerprint(), e.fingerprint());
    }
}
