//! Gelfand–Naimark–Segal construction for block-diagonal matrix algebras.
//!
//! A state functional `Psi` turns the algebra into a pre-Hilbert space with
//! `<R, S> = Psi(R^* S)`. Quotienting by the null directions of this form gives the
//! GNS space; left multiplication becomes the representation `Pi`, and the class of
//! the unit is the cyclic vector.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{hermitian_eigen, AlgebraDescriptor, AlgebraElement, CMatrix, CVector, C64};
use crate::ensemble::QuantumState;
use crate::error::{Error, Result};
use crate::random::{random_density, random_element, random_hermitian, random_unit_vector};

/// Relative cutoff below which Gram eigenvalues count as null directions.
pub const RANK_TOLERANCE: f64 = 1e-10;
pub const GNS_SCHEMA_VERSION: u32 = 1;

/// A normalized positive linear functional `Psi(S) = tr(rho S)`.
#[derive(Debug, Clone)]
pub struct StateFunctional {
    algebra: Arc<AlgebraDescriptor>,
    rho: CMatrix,
}

impl StateFunctional {
    /// Validates `rho`: inside the algebra, Hermitian, unit trace, nonnegative.
    pub fn from_density(algebra: Arc<AlgebraDescriptor>, rho: CMatrix) -> Result<Self> {
        let rho = AlgebraElement::new(algebra.clone(), rho)?;
        let dev = rho.hermitian_deviation();
        if dev > 1e-12 {
            return Err(Error::NonPositiveFunctional(format!("density not Hermitian ({dev:.3e})")));
        }
        let tr = rho.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::NonPositiveFunctional(format!("trace {tr} differs from 1")));
        }
        let (values, _) = hermitian_eigen(rho.matrix());
        if values[0] < -1e-12 {
            return Err(Error::NonPositiveFunctional(format!("negative weight {:.3e}", values[0])));
        }
        Ok(Self {
            algebra,
            rho: rho.into_matrix(),
        })
    }

    pub fn from_vector_state(psi: &QuantumState) -> Self {
        Self {
            algebra: psi.algebra().clone(),
            rho: psi.projector().matrix().clone(),
        }
    }

    /// Normalized trace `tr(S) / n`.
    pub fn tracial(algebra: Arc<AlgebraDescriptor>) -> Self {
        let n = algebra.dimension();
        Self {
            rho: CMatrix::identity(n, n) / C64::new(n as f64, 0.0),
            algebra,
        }
    }

    pub fn algebra(&self) -> &Arc<AlgebraDescriptor> {
        &self.algebra
    }

    pub fn value(&self, s: &AlgebraElement) -> C64 {
        self.rho.component_mul(&s.matrix().transpose()).sum()
    }
}

/// Vector states `e_i`, `(e_i + e_j)/sqrt 2` and `(e_i + i e_j)/sqrt 2` within each
/// block. Their common null space is that of all vector states of the algebra.
pub fn vector_state_family(algebra: &Arc<AlgebraDescriptor>) -> Vec<StateFunctional> {
    let n = algebra.dimension();
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    let mut push = |v: CVector| {
        let psi = QuantumState::new(algebra.clone(), v).expect("vector inside one block");
        out.push(StateFunctional::from_vector_state(&psi));
    };
    for block in algebra.block_ranges() {
        for i in block.clone() {
            let mut v = CVector::zeros(n);
            v[i] = C64::new(1.0, 0.0);
            push(v);
            for j in i + 1..block.end {
                for phase in [C64::new(c, 0.0), C64::new(0.0, c)] {
                    let mut v = CVector::zeros(n);
                    v[i] = C64::new(c, 0.0);
                    v[j] = phase;
                    push(v);
                }
            }
        }
    }
    out
}

/// Matrix units `|p><q|` of `algebra` in block order.
fn matrix_units(algebra: &AlgebraDescriptor) -> Vec<(usize, usize)> {
    let mut units = Vec::with_capacity(algebra.linear_dimension());
    for block in algebra.block_ranges() {
        for p in block.clone() {
            for q in block.clone() {
                units.push((p, q));
            }
        }
    }
    units
}

/// `G[a][b] = Psi(E_a^* E_b)` for `E_a = |p><q|`, `E_b = |r><s|`, which is
/// `delta_pr rho[s][q]`.
fn gram(psi: &StateFunctional, units: &[(usize, usize)]) -> CMatrix {
    let m = units.len();
    CMatrix::from_fn(m, m, |a, b| {
        let (p, q) = units[a];
        let (r, s) = units[b];
        if p == r {
            psi.rho[(s, q)]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

#[derive(Debug, Clone)]
pub struct GnsSpace {
    psi: StateFunctional,
    units: Vec<(usize, usize)>,
    gram: CMatrix,
    /// Range eigenvectors of the Gram matrix, as columns.
    range: CMatrix,
    weights: Vec<f64>,
    vacuum: CVector,
}

impl GnsSpace {
    pub fn build(psi: &StateFunctional) -> Self {
        let units = matrix_units(&psi.algebra);
        let gram = gram(psi, &units);
        let (values, vectors) = hermitian_eigen(&gram);
        let top = values.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..values.len()).filter(|&k| values[k] > RANK_TOLERANCE * top).collect();
        let range = CMatrix::from_fn(units.len(), keep.len(), |i, j| vectors[(i, keep[j])]);
        let weights = keep.iter().map(|&k| values[k]).collect();
        let mut space = Self {
            psi: psi.clone(),
            units,
            gram,
            range,
            weights,
            vacuum: CVector::zeros(0),
        };
        space.vacuum = space.class(&AlgebraElement::identity(psi.algebra.clone()));
        space
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn functional(&self) -> &StateFunctional {
        &self.psi
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    fn coordinates(&self, r: &AlgebraElement) -> CVector {
        CVector::from_iterator(self.units.len(), self.units.iter().map(|&(p, q)| r.matrix()[(p, q)]))
    }

    /// The class `Phi(R)` as a vector in `C^rank`.
    pub fn class(&self, r: &AlgebraElement) -> CVector {
        let mut v = self.range.adjoint() * self.coordinates(r);
        for (x, w) in v.iter_mut().zip(&self.weights) {
            *x *= w.sqrt();
        }
        v
    }

    pub fn vacuum(&self) -> &CVector {
        &self.vacuum
    }

    /// `<Phi(R), Phi(S)>`.
    pub fn inner(&self, r: &AlgebraElement, s: &AlgebraElement) -> C64 {
        self.class(r).dotc(&self.class(s))
    }

    /// Matrix of `Pi(S)` on the GNS space.
    pub fn represent(&self, s: &AlgebraElement) -> Result<CMatrix> {
        if s.algebra() != &self.psi.algebra {
            return Err(Error::AlgebraMismatch);
        }
        let m = self.units.len();
        // left multiplication on coordinates: (SR)[p][q] = sum_t S[p][t] R[t][q]
        let left = CMatrix::from_fn(m, m, |a, b| {
            let (p, q) = self.units[a];
            let (t, q2) = self.units[b];
            if q == q2 {
                s.matrix()[(p, t)]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let mut pi = self.range.adjoint() * left * &self.range;
        for (i, wi) in self.weights.iter().enumerate() {
            for (j, wj) in self.weights.iter().enumerate() {
                pi[(i, j)] *= (wi / wj).sqrt();
            }
        }
        Ok(pi)
    }

    /// `<Phi(I), Pi(S) Phi(I)>`.
    pub fn vacuum_expectation(&self, s: &AlgebraElement) -> Result<C64> {
        Ok(self.vacuum.dotc(&(self.represent(s)? * &self.vacuum)))
    }

    /// True iff `|Phi(p) - Phi(I)| <= tolerance`.
    pub fn class_equality_check(&self, p: &AlgebraElement, tolerance: f64) -> bool {
        (self.class(p) - &self.vacuum).norm() <= tolerance
    }
}

/// Builds the GNS space of `psi`, which must be a functional on `algebra`.
pub fn build_gns(psi: &StateFunctional, algebra: &Arc<AlgebraDescriptor>) -> Result<GnsSpace> {
    if psi.algebra() != algebra {
        return Err(Error::AlgebraMismatch);
    }
    Ok(GnsSpace::build(psi))
}

/// Operator norm of `p A p - Psi(A) p` for the vector state `psi`.
pub fn compression_identity_check(psi: &QuantumState, a: &AlgebraElement) -> f64 {
    let p = psi.projector();
    let value = StateFunctional::from_vector_state(psi).value(a);
    let lhs = &(p * a) * p;
    (&lhs - &p.scale(value)).norm()
}

/// `|Psi(S) - Psi(p S p)|` for the vector state `psi`.
pub fn sandwich_residual(psi: &QuantumState, s: &AlgebraElement) -> f64 {
    let p = psi.projector();
    let f = StateFunctional::from_vector_state(psi);
    (f.value(s) - f.value(&(&(p * s) * p))).norm()
}

#[derive(Debug, Clone, Serialize)]
pub struct IdealReport {
    pub ideal_dimension: usize,
    pub quotient_dimension: usize,
    #[serde(skip)]
    pub basis: Vec<AlgebraElement>,
}

/// Basis of `J = {R : Psi(R^* R) = 0 for every Psi in family}`.
pub fn seminorm_ideal(algebra: &Arc<AlgebraDescriptor>, family: &[StateFunctional]) -> Result<IdealReport> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if family.iter().any(|f| f.algebra() != algebra) {
        return Err(Error::AlgebraMismatch);
    }
    let units = matrix_units(algebra);
    let total = family
        .iter()
        .map(|f| gram(f, &units))
        .fold(CMatrix::zeros(units.len(), units.len()), |acc, g| acc + g);
    let (values, vectors) = hermitian_eigen(&total);
    let top = values.iter().copied().fold(0.0, f64::max);
    let n = algebra.dimension();
    let basis: Vec<AlgebraElement> = (0..values.len())
        .filter(|&k| values[k] <= RANK_TOLERANCE * top)
        .map(|k| {
            let mut m = CMatrix::zeros(n, n);
            for (a, &(p, q)) in units.iter().enumerate() {
                m[(p, q)] = vectors[(a, k)];
            }
            AlgebraElement::new(algebra.clone(), m).expect("matrix units stay in the blocks")
        })
        .collect();
    Ok(IdealReport {
        ideal_dimension: basis.len(),
        quotient_dimension: units.len() - basis.len(),
        basis,
    })
}

/// Residuals of the GNS identities over random trials.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GnsReport {
    pub schema_version: u32,
    pub dimension: usize,
    pub trials: usize,
    pub pure_rank: usize,
    pub tracial_rank: usize,
    /// Largest `|<Phi(I), Pi(S) Phi(I)> - Psi(S)|`.
    pub expectation_residual: f64,
    /// Largest `|<Phi(R), Phi(S)> - Psi(R^* S)|`.
    pub scalar_product_residual: f64,
    /// Largest `|Pi(S1 S2) - Pi(S1) Pi(S2)|` and `|Pi(S^*) - Pi(S)^*|`.
    pub homomorphism_residual: f64,
    /// Largest operator norm of `p A p - Psi(A) p`.
    pub compression_residual: f64,
    /// Largest `|Psi(S) - Psi(p S p)|`.
    pub sandwich_residual: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Random trials on the full `n x n` algebra, alternating pure and full-rank mixed
/// states.
pub fn gns_check<R: Rng + ?Sized>(n: usize, trials: usize, rng: &mut R) -> Result<GnsReport> {
    if !(1..=8).contains(&n) {
        return Err(Error::InvalidArgument(format!("dimension {n} outside 1..=8")));
    }
    let algebra = AlgebraDescriptor::full(n);
    let e1 = {
        let mut v = CVector::zeros(n);
        v[0] = C64::new(1.0, 0.0);
        QuantumState::new(algebra.clone(), v)?
    };
    let pure_rank = GnsSpace::build(&StateFunctional::from_vector_state(&e1)).rank();
    let tracial_rank = GnsSpace::build(&StateFunctional::tracial(algebra.clone())).rank();

    let mut rep = GnsReport {
        schema_version: GNS_SCHEMA_VERSION,
        dimension: n,
        trials,
        pure_rank,
        tracial_rank,
        expectation_residual: 0.0,
        scalar_product_residual: 0.0,
        homomorphism_residual: 0.0,
        compression_residual: 0.0,
        sandwich_residual: 0.0,
        threshold: 1e-10,
        passed: false,
    };
    for t in 0..trials {
        let tau = QuantumState::new(algebra.clone(), random_unit_vector(n, rng))?;
        let psi = if t % 2 == 0 {
            StateFunctional::from_vector_state(&tau)
        } else {
            StateFunctional::from_density(algebra.clone(), random_density(&algebra, rng))?
        };
        let space = GnsSpace::build(&psi);
        let s1 = random_element(&algebra, rng);
        let s2 = random_element(&algebra, rng);
        let scale = s1.norm().max(1.0) * s2.norm().max(1.0);

        let exp = (space.vacuum_expectation(&s1)? - psi.value(&s1)).norm() / s1.norm().max(1.0);
        rep.expectation_residual = rep.expectation_residual.max(exp);
        let sp = (space.inner(&s1, &s2) - psi.value(&(&s1.adjoint() * &s2))).norm() / scale;
        rep.scalar_product_residual = rep.scalar_product_residual.max(sp);

        let p1 = space.represent(&s1)?;
        let p2 = space.represent(&s2)?;
        let p12 = space.represent(&(&s1 * &s2))?;
        let hom = (p12 - &p1 * &p2).norm() / scale;
        let adj = (space.represent(&s1.adjoint())? - p1.adjoint()).norm() / s1.norm().max(1.0);
        rep.homomorphism_residual = rep.homomorphism_residual.max(hom).max(adj);

        let a = random_hermitian(&algebra, rng);
        rep.compression_residual = rep
            .compression_residual
            .max(compression_identity_check(&tau, &a) / a.norm().max(1.0));
        rep.sandwich_residual = rep.sandwich_residual.max(sandwich_residual(&tau, &s1) / s1.norm().max(1.0));
    }
    rep.passed = rep.pure_rank == n
        && rep.tracial_rank == n * n
        && [
            rep.expectation_residual,
            rep.scalar_product_residual,
            rep.compression_residual,
            rep.sandwich_residual,
        ]
        .iter()
        .all(|r| *r <= rep.threshold)
        && rep.homomorphism_residual <= 1e-9;
    Ok(rep)
}
