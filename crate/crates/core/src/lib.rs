//! Executable model of an algebraic reconstruction of quantum mechanics.
//!
//! Observables are Hermitian elements of a finite-dimensional C*-algebra,
//! measurement contexts are maximal commutative subalgebras, and an elementary
//! state assigns one character to every context it has touched. Quantum states
//! arise as classes of elementary states, averages over them obey the Born rule,
//! and the GNS construction recovers the Hilbert-space picture. The harmonic
//! oscillator module computes time-ordered Green's functions by two independent
//! routes.

pub mod algebra;
pub mod cli;
pub mod context;
pub mod elementary;
pub mod ensemble;
pub mod error;
pub mod kochen_specker;
pub mod gns;
pub mod measurement;
pub mod oscillator;
pub mod random;
pub mod rng;

pub use algebra::{AlgebraDescriptor, AlgebraElement, SpectralDecomposition, C64, CMatrix, CVector};
pub use error::{Error, Result};
