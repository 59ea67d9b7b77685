//! Random algebra elements, vectors and density matrices for property checks.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{AlgebraDescriptor, AlgebraElement, CMatrix, CVector, C64};

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Element with independent complex Gaussian entries inside the blocks.
pub fn random_element<R: Rng + ?Sized>(algebra: &Arc<AlgebraDescriptor>, rng: &mut R) -> AlgebraElement {
    let n = algebra.dimension();
    let mut m = CMatrix::zeros(n, n);
    for block in algebra.block_ranges() {
        for i in block.clone() {
            for j in block.clone() {
                m[(i, j)] = gaussian(rng);
            }
        }
    }
    AlgebraElement::new(algebra.clone(), m).expect("entries stay inside the blocks")
}

pub fn random_hermitian<R: Rng + ?Sized>(algebra: &Arc<AlgebraDescriptor>, rng: &mut R) -> AlgebraElement {
    let r = random_element(algebra, rng);
    (&r + &r.adjoint()).scale_real(0.5)
}

/// Haar-distributed unit vector in `C^n`.
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    let v = CVector::from_iterator(n, (0..n).map(|_| gaussian(rng)));
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

/// Unit vector supported on one randomly chosen block of `algebra`.
pub fn random_block_vector<R: Rng + ?Sized>(algebra: &Arc<AlgebraDescriptor>, rng: &mut R) -> CVector {
    let ranges = algebra.block_ranges();
    let block = ranges[rng.random_range(0..ranges.len())].clone();
    let local = random_unit_vector(block.len(), rng);
    let mut v = CVector::zeros(algebra.dimension());
    for (k, i) in block.enumerate() {
        v[i] = local[k];
    }
    v
}

/// Full-rank density matrix `R R^* / tr(R R^*)` in `algebra`.
pub fn random_density<R: Rng + ?Sized>(algebra: &Arc<AlgebraDescriptor>, rng: &mut R) -> CMatrix {
    let r = random_element(algebra, rng);
    let m = r.matrix() * r.matrix().adjoint();
    let t = m.trace();
    m / t
}
