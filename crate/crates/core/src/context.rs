//! Maximal commutative measurement contexts.
//!
//! In the full matrix algebra a maximal commutative subalgebra is fixed by an
//! orthonormal basis up to per-vector phases and ordering: its elements are exactly
//! the operators diagonal in that basis. Contexts are created on demand and kept in
//! a [`ContextRegistry`] keyed by a phase- and order-invariant fingerprint, so the
//! same subalgebra always receives the same id.

use std::cmp::Ordering;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::algebra::{
    group_eigenvalues, hermitian_eigen, AlgebraDescriptor, AlgebraElement, CMatrix, CVector, C64,
    DEFAULT_TOLERANCE,
};
use crate::error::{Error, Result};

/// Default fingerprint tolerance for context identity.
pub const CONTEXT_TOLERANCE: f64 = 1e-8;

/// Membership tolerance: an observable belongs to a context when its off-diagonal
/// part in the context basis is below this (relative to `max(1, |A|)`).
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-9;

const PHASE_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContextId(pub usize);

impl std::fmt::Display for ContextId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "xi{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct Context {
    id: ContextId,
    algebra: Arc<AlgebraDescriptor>,
    basis: CMatrix,
    fingerprint: Vec<Vec<f64>>,
}

impl Context {
    pub fn id(&self) -> ContextId {
        self.id
    }

    pub fn algebra(&self) -> &Arc<AlgebraDescriptor> {
        &self.algebra
    }

    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthonormal joint eigenbasis, one vector per column.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.basis.column(k).into_owned()
    }

    pub fn fingerprint(&self) -> &[Vec<f64>] {
        &self.fingerprint
    }

    /// Rank-one projector onto the `k`-th basis vector.
    pub fn projector(&self, k: usize) -> AlgebraElement {
        AlgebraElement::rank_one_projector(self.algebra.clone(), &self.vector(k))
            .expect("context vectors lie in the algebra's blocks")
    }

    /// A nondegenerate element generating the whole context: `sum_k (n-1-k) p_k`.
    pub fn generator(&self) -> AlgebraElement {
        let n = self.dimension();
        let weights = CVector::from_iterator(n, (0..n).map(|k| C64::new((n - 1 - k) as f64, 0.0)));
        let m = &self.basis * CMatrix::from_diagonal(&weights) * self.basis.adjoint();
        AlgebraElement::new(self.algebra.clone(), m).expect("generator respects block structure")
    }

    /// `<e_k, A e_k>` for every basis vector.
    pub fn diagonal_values(&self, a: &AlgebraElement) -> Vec<f64> {
        let m = self.basis.adjoint() * a.matrix() * &self.basis;
        (0..self.dimension()).map(|k| m[(k, k)].re).collect()
    }

    /// Largest off-diagonal magnitude of `A` in the context basis.
    pub fn off_diagonal(&self, a: &AlgebraElement) -> f64 {
        let m = self.basis.adjoint() * a.matrix() * &self.basis;
        let n = self.dimension();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst = worst.max(m[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// True iff `a` is a Hermitian element of this context's algebra that is diagonal
    /// in the context basis.
    pub fn contains(&self, a: &AlgebraElement) -> bool {
        if a.algebra() != &self.algebra {
            return false;
        }
        let scale = a.max_abs().max(1.0);
        a.is_hermitian(MEMBERSHIP_TOLERANCE) && self.off_diagonal(a) <= MEMBERSHIP_TOLERANCE * scale
    }

    pub fn export(&self) -> ContextExport {
        let n = self.dimension();
        ContextExport {
            id: self.id.0,
            block_sizes: self.algebra.block_sizes().to_vec(),
            basis: (0..n)
                .map(|k| (0..n).map(|i| [self.basis[(i, k)].re, self.basis[(i, k)].im]).collect())
                .collect(),
            fingerprint: self.fingerprint.clone(),
        }
    }
}

/// JSON form of a context: id, basis vectors as `[re, im]` lists, fingerprint rows.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ContextExport {
    pub id: usize,
    pub block_sizes: Vec<usize>,
    pub basis: Vec<Vec<[f64; 2]>>,
    pub fingerprint: Vec<Vec<f64>>,
}

/// Lazily materialized index set of contexts.
#[derive(Debug)]
pub struct ContextRegistry {
    tolerance: f64,
    contexts: RwLock<Vec<Arc<Context>>>,
}

impl Default for ContextRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl ContextRegistry {
    pub fn new() -> Self {
        Self::with_tolerance(CONTEXT_TOLERANCE)
    }

    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            contexts: RwLock::new(Vec::new()),
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn len(&self) -> usize {
        self.contexts.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: ContextId) -> Option<Arc<Context>> {
        self.contexts.read().unwrap().get(id.0).cloned()
    }

    pub fn contexts(&self) -> Vec<Arc<Context>> {
        self.contexts.read().unwrap().clone()
    }

    /// The context of the standard basis, ordered `e_1, ..., e_n`.
    pub fn standard(&self, algebra: &Arc<AlgebraDescriptor>) -> Arc<Context> {
        let n = algebra.dimension();
        let keys = (0..n).map(|k| vec![(n - 1 - k) as f64]).collect::<Vec<_>>();
        self.register(algebra, &CMatrix::identity(n, n), &keys)
            .expect("standard basis is orthonormal")
    }

    /// Canonicalizes `basis` (columns) with per-vector sort `keys` and returns the
    /// registered context, reusing an existing id when the basis matches one already
    /// stored up to phases, ordering, and the registry tolerance.
    pub fn register(
        &self,
        algebra: &Arc<AlgebraDescriptor>,
        basis: &CMatrix,
        keys: &[Vec<f64>],
    ) -> Result<Arc<Context>> {
        let n = algebra.dimension();
        if basis.nrows() != n || basis.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: basis.ncols(),
            });
        }
        let gram = basis.adjoint() * basis;
        let dev = crate::algebra::max_abs(&(gram - CMatrix::identity(n, n)));
        if dev > 1e-10 {
            return Err(Error::NonOrthonormalFrame { deviation: dev });
        }
        let (basis, _) = canonicalize(basis, keys);
        let fingerprint = fingerprint(&basis);

        if let Some(found) = self.find(algebra, &basis, &fingerprint) {
            return Ok(found);
        }
        let mut contexts = self.contexts.write().unwrap();
        // another writer may have inserted it between the read and the write lock
        if let Some(found) = contexts
            .iter()
            .find(|c| self.matches(c, algebra, &basis, &fingerprint))
        {
            return Ok(found.clone());
        }
        let ctx = Arc::new(Context {
            id: ContextId(contexts.len()),
            algebra: algebra.clone(),
            basis,
            fingerprint,
        });
        contexts.push(ctx.clone());
        Ok(ctx)
    }

    fn find(
        &self,
        algebra: &Arc<AlgebraDescriptor>,
        basis: &CMatrix,
        fp: &[Vec<f64>],
    ) -> Option<Arc<Context>> {
        self.contexts
            .read()
            .unwrap()
            .iter()
            .find(|c| self.matches(c, algebra, basis, fp))
            .cloned()
    }

    fn matches(&self, ctx: &Context, algebra: &Arc<AlgebraDescriptor>, basis: &CMatrix, fp: &[Vec<f64>]) -> bool {
        if ctx.algebra != *algebra || !fingerprints_match(&ctx.fingerprint, fp, self.tolerance) {
            return false;
        }
        // confirm directly: every new vector is parallel to some stored vector
        let overlaps = ctx.basis.adjoint() * basis;
        (0..basis.ncols()).all(|k| {
            (0..ctx.basis.ncols()).any(|j| 1.0 - overlaps[(j, k)].norm_sqr() <= self.tolerance)
        })
    }
}

/// Context of a single Hermitian observable whose spectrum is nondegenerate within
/// every block.
pub fn context_from_observable(a: &AlgebraElement, registry: &ContextRegistry) -> Result<Arc<Context>> {
    context_from_family(std::slice::from_ref(a), registry)
}

/// Context of a commuting Hermitian family whose joint eigenspaces are all
/// one-dimensional.
pub fn context_from_family(family: &[AlgebraElement], registry: &ContextRegistry) -> Result<Arc<Context>> {
    let first = family
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty observable family".into()))?;
    let algebra = first.algebra().clone();
    for a in family {
        if a.algebra() != &algebra {
            return Err(Error::AlgebraMismatch);
        }
        if !a.is_hermitian(DEFAULT_TOLERANCE) {
            return Err(Error::NotHermitian {
                deviation: a.hermitian_deviation(),
            });
        }
    }
    for (i, a) in family.iter().enumerate() {
        for b in &family[i + 1..] {
            let norm = a.commutator(b)?.norm();
            if norm > 1e-10 * a.max_abs().max(1.0) * b.max_abs().max(1.0) {
                return Err(Error::NonCommuting { norm });
            }
        }
    }
    let basis = joint_eigenbasis(&algebra, family)?;
    let keys: Vec<Vec<f64>> = (0..basis.ncols())
        .map(|k| {
            let v = basis.column(k);
            family.iter().map(|a| (v.adjoint() * a.matrix() * v)[(0, 0)].re).collect()
        })
        .collect();
    let ctx = registry.register(&algebra, &basis, &keys)?;
    for a in family {
        debug_assert!(ctx.contains(a), "family member not diagonal in its own context");
    }
    Ok(ctx)
}

/// Successive refinement: each member splits the current joint eigenspaces by its
/// own eigenvalues, block by block.
fn joint_eigenbasis(algebra: &Arc<AlgebraDescriptor>, family: &[AlgebraElement]) -> Result<CMatrix> {
    let n = algebra.dimension();
    let mut subspaces: Vec<CMatrix> = algebra
        .block_ranges()
        .into_iter()
        .map(|r| {
            let mut v = CMatrix::zeros(n, r.len());
            for (c, i) in r.enumerate() {
                v[(i, c)] = C64::new(1.0, 0.0);
            }
            v
        })
        .collect();
    for a in family {
        let mut refined = Vec::with_capacity(subspaces.len());
        for v in subspaces {
            if v.ncols() == 1 {
                refined.push(v);
                continue;
            }
            let compressed = v.adjoint() * a.matrix() * &v;
            let (values, vectors) = hermitian_eigen(&compressed);
            for g in group_eigenvalues_scaled(&values, a.max_abs().max(1.0)) {
                let w = DMatrix::from_fn(v.ncols(), g.len(), |i, j| vectors[(i, g[j])]);
                refined.push(&v * w);
            }
        }
        subspaces = refined;
    }
    if subspaces.iter().any(|v| v.ncols() > 1) {
        return Err(Error::Degenerate);
    }
    let mut basis = CMatrix::zeros(n, n);
    for (k, v) in subspaces.iter().enumerate() {
        basis.set_column(k, &v.column(0));
    }
    Ok(basis)
}

fn group_eigenvalues_scaled(values: &[f64], scale: f64) -> Vec<Vec<usize>> {
    // absolute grouping against the observable's scale, so a zero eigenvalue next to
    // a tiny one is still called degenerate
    let mut shifted = values.to_vec();
    shifted.push(scale);
    let mut groups: Vec<Vec<usize>> = group_eigenvalues(&shifted, DEFAULT_TOLERANCE)
        .into_iter()
        .map(|g| g.indices)
        .collect();
    for g in &mut groups {
        g.retain(|&k| k < values.len());
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// `A1 cos(alpha) + A2 sin(alpha)`.
pub fn interpolated_generator(a1: &AlgebraElement, a2: &AlgebraElement, alpha: f64) -> Result<AlgebraElement> {
    a1.scale_real(alpha.cos()).try_add(&a2.scale_real(alpha.sin()))
}

/// Canonical form of a basis: each vector's first component above `1e-10` in
/// magnitude is made real positive, and vectors are ordered by descending `keys`
/// (quantized to `1e-9`), ties broken by descending real parts.
pub fn canonicalize(basis: &CMatrix, keys: &[Vec<f64>]) -> (CMatrix, Vec<Vec<f64>>) {
    let n = basis.ncols();
    assert_eq!(keys.len(), n, "one key per basis vector");
    let mut cols: Vec<CVector> = (0..n).map(|k| basis.column(k).into_owned()).collect();
    for v in &mut cols {
        if let Some(pos) = v.iter().position(|z| z.norm() > PHASE_THRESHOLD) {
            let c = v[pos];
            let r = c.norm();
            let phase = c.conj() / r;
            for z in v.iter_mut() {
                *z *= phase;
            }
            v[pos] = C64::new(r, 0.0);
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ka = keys[a].iter().map(|x| quantize_key(*x));
        let kb = keys[b].iter().map(|x| quantize_key(*x));
        kb.cmp(ka).then_with(|| {
            for (za, zb) in cols[a].iter().zip(cols[b].iter()) {
                match zb.re.total_cmp(&za.re) {
                    Ordering::Equal => continue,
                    other => return other,
                }
            }
            Ordering::Equal
        })
    });
    let mut out = CMatrix::zeros(basis.nrows(), n);
    for (j, &k) in order.iter().enumerate() {
        out.set_column(j, &cols[k]);
    }
    (out, order.iter().map(|&k| keys[k].clone()).collect())
}

fn quantize_key(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

/// Fixed reference frame per dimension: a seeded random unitary.
fn reference_frame(n: usize) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0f1e_2d3c_4b5a_6978 ^ n as u64);
    let g = CMatrix::from_fn(n, n, |_, _| {
        C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    g.qr().q()
}

/// Rows `|<f_i, v_k>|^2` over the reference frame, one row per basis vector,
/// sorted lexicographically.
pub fn fingerprint(basis: &CMatrix) -> Vec<Vec<f64>> {
    let n = basis.nrows();
    let overlaps = reference_frame(n).adjoint() * basis;
    let mut rows: Vec<Vec<f64>> = (0..basis.ncols())
        .map(|k| (0..n).map(|i| overlaps[(i, k)].norm_sqr()).collect())
        .collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    rows
}

/// Order-free comparison: every row of `a` pairs off with a distinct row of `b`.
fn fingerprints_match(a: &[Vec<f64>], b: &[Vec<f64>], tolerance: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|ra| {
        let hit = b.iter().enumerate().position(|(j, rb)| {
            !used[j] && ra.iter().zip(rb).all(|(x, y)| (x - y).abs() <= tolerance)
        });
        match hit {
            Some(j) => {
                used[j] = true;
                true
            }
            None => false,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::pauli;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn full_diag(d: &[f64]) -> AlgebraElement {
        AlgebraElement::from_real_diagonal(AlgebraDescriptor::full(d.len()), d).unwrap()
    }

    #[test]
    fn pauli_z_context_is_standard_basis() {
        let reg = ContextRegistry::new();
        let ctx = context_from_observable(&pauli::z(), &reg).unwrap();
        assert!((ctx.basis()[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!((ctx.basis()[(1, 1)].re - 1.0).abs() < 1e-12);
        assert!(ctx.basis()[(1, 0)].norm() < 1e-12);
    }

    #[test]
    fn pauli_x_context_has_diagonal_eigenvectors() {
        let reg = ContextRegistry::new();
        let ctx = context_from_observable(&pauli::x(), &reg).unwrap();
        let b = ctx.basis();
        // (e1 + e2)/sqrt2 first (eigenvalue +1), then (e1 - e2)/sqrt2
        assert!((b[(0, 0)].re - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((b[(1, 0)].re - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((b[(0, 1)].re - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((b[(1, 1)].re + FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_observable_is_rejected() {
        let reg = ContextRegistry::new();
        let err = context_from_observable(&full_diag(&[1.0, 1.0, 2.0]), &reg).unwrap_err();
        assert_eq!(err, Error::Degenerate);
        assert!(reg.is_empty());
    }

    #[test]
    fn degenerate_observable_is_fine_in_a_classical_algebra() {
        let reg = ContextRegistry::new();
        let alg = AlgebraDescriptor::classical(3);
        let a = AlgebraElement::from_real_diagonal(alg.clone(), &[1.0, 1.0, 2.0]).unwrap();
        let b = AlgebraElement::from_real_diagonal(alg.clone(), &[3.0, -1.0, 0.5]).unwrap();
        let ca = context_from_observable(&a, &reg).unwrap();
        let cb = context_from_observable(&b, &reg).unwrap();
        assert_eq!(ca.id(), cb.id());
        assert_eq!(reg.standard(&alg).id(), ca.id());
        assert_eq!(reg.len(), 1);
    }

    #[test]
    fn identity_adds_nothing_to_a_family() {
        let reg = ContextRegistry::new();
        let z = context_from_observable(&pauli::z(), &reg).unwrap();
        let id = AlgebraElement::identity(AlgebraDescriptor::full(2));
        let zi = context_from_family(&[pauli::z(), id.clone()], &reg).unwrap();
        assert_eq!(z.id(), zi.id());
        let iz = context_from_family(&[id, pauli::z()], &reg).unwrap();
        assert_eq!(z.id(), iz.id());
    }

    #[test]
    fn non_commuting_family_is_rejected() {
        let reg = ContextRegistry::new();
        let err = context_from_family(&[pauli::x(), pauli::y()], &reg).unwrap_err();
        assert!(matches!(err, Error::NonCommuting { .. }));
    }

    #[test]
    fn jointly_degenerate_family_is_rejected() {
        let reg = ContextRegistry::new();
        let a = full_diag(&[1.0, 1.0, 2.0, 2.0]);
        let b = full_diag(&[0.0, 0.0, 1.0, 3.0]);
        assert_eq!(context_from_family(&[a, b], &reg).unwrap_err(), Error::Degenerate);
    }

    #[test]
    fn membership() {
        let reg = ContextRegistry::new();
        let z = context_from_observable(&pauli::z(), &reg).unwrap();
        assert!(z.contains(&pauli::z()));
        assert!(!z.contains(&pauli::x()));
        assert!(z.contains(&AlgebraElement::identity(AlgebraDescriptor::full(2))));
        let x = context_from_observable(&pauli::x(), &reg).unwrap();
        assert!(x.contains(&AlgebraElement::identity(AlgebraDescriptor::full(2))));
    }

    #[test]
    fn interpolated_generator_boundaries() {
        let a1 = pauli::z();
        let a2 = pauli::x();
        let g0 = interpolated_generator(&a1, &a2, 0.0).unwrap();
        assert_eq!(g0, a1);
        let g1 = interpolated_generator(&a1, &a2, PI / 2.0).unwrap();
        assert!(crate::algebra::max_abs(&(g1.matrix() - a2.matrix())) < 1e-15);
    }

    #[test]
    fn a_hundred_angles_give_a_hundred_contexts() {
        let reg = ContextRegistry::new();
        let mut ids = std::collections::BTreeSet::new();
        for k in 0..100 {
            let alpha = PI * (k as f64 + 0.5) / 100.0;
            let g = interpolated_generator(&pauli::z(), &pauli::x(), alpha).unwrap();
            ids.insert(context_from_observable(&g, &reg).unwrap().id());
        }
        assert_eq!(ids.len(), 100);
        // alpha = pi/4 again maps onto an existing id
        let g = interpolated_generator(&pauli::z(), &pauli::x(), PI * 25.5 / 100.0).unwrap();
        let before = reg.len();
        context_from_observable(&g, &reg).unwrap();
        assert_eq!(reg.len(), before);
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let reg = ContextRegistry::new();
        let g = interpolated_generator(&pauli::y(), &pauli::x(), 0.7).unwrap();
        let ctx = context_from_observable(&g, &reg).unwrap();
        let keys = vec![vec![1.0], vec![-1.0]];
        let (once, k1) = canonicalize(ctx.basis(), &keys);
        let (twice, k2) = canonicalize(&once, &k1);
        assert_eq!(once, twice);
        assert_eq!(k1, k2);
    }

    #[test]
    fn perturbed_basis_keeps_its_id() {
        let reg = ContextRegistry::new();
        let g = interpolated_generator(&pauli::z(), &pauli::x(), 0.3).unwrap();
        let ctx = context_from_observable(&g, &reg).unwrap();
        let eps: f64 = 1e-10;
        let rot = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(eps.cos(), 0.0),
                C64::new(-eps.sin(), 0.0),
                C64::new(eps.sin(), 0.0),
                C64::new(eps.cos(), 0.0),
            ],
        );
        // also swap order and rephase the vectors
        let mut b = rot * ctx.basis();
        b.swap_columns(0, 1);
        let phase = C64::from_polar(1.0, 1.3);
        for z in b.column_mut(0).iter_mut() {
            *z *= phase;
        }
        let again = reg.register(ctx.algebra(), &b, &[vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(again.id(), ctx.id());
        assert_eq!(reg.len(), 1);
    }

    #[test]
    fn context_elements_commute() {
        let reg = ContextRegistry::new();
        let g = interpolated_generator(&pauli::z(), &pauli::y(), 1.1).unwrap();
        let ctx = context_from_observable(&g, &reg).unwrap();
        let a = ctx.generator();
        let b = ctx.projector(1);
        assert!(ctx.contains(&a) && ctx.contains(&b));
        assert!(a.commutator(&b).unwrap().norm() <= 1e-9);
    }

    #[test]
    fn export_has_id_basis_fingerprint() {
        let reg = ContextRegistry::new();
        let ctx = reg.standard(&AlgebraDescriptor::full(2));
        let json = serde_json::to_value(ctx.export()).unwrap();
        assert_eq!(json["id"], 0);
        assert_eq!(json["basis"][0][0][0], 1.0);
        assert_eq!(json["fingerprint"].as_array().unwrap().len(), 2);
    }
}
