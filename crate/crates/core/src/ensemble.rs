//! Quantum states as classes of elementary states, and the probability spaces
//! they induce on each context.
//!
//! Sampling is per context and independent across contexts: no joint law over
//! incompatible observables is ever constructed. Empirical statistics are judged
//! against exact values with a fixed four-standard-error band.

use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraDescriptor, AlgebraElement, CVector, C64, DEFAULT_TOLERANCE};
use crate::context::Context;
use crate::elementary::{context_values, ElementaryState};
use crate::error::{Error, Result};
use crate::rng::SeedStreams;

/// Width of the statistical acceptance band, in standard errors.
pub const ACCEPTANCE_SIGMAS: f64 = 4.0;

const CHUNK: usize = 8192;

/// A unit vector `tau` and its projector `p_tau`.
#[derive(Debug, Clone)]
pub struct QuantumState {
    vector: CVector,
    projector: AlgebraElement,
    home: Option<(Arc<Context>, usize)>,
}

impl QuantumState {
    /// Normalizes `vector`. The vector must lie inside a single block so its
    /// projector belongs to the algebra.
    pub fn new(algebra: Arc<AlgebraDescriptor>, vector: CVector) -> Result<Self> {
        let n = algebra.dimension();
        if vector.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: vector.len(),
            });
        }
        let norm = vector.norm();
        if norm < 1e-300 || !norm.is_finite() {
            return Err(Error::InvalidArgument("state vector must be nonzero and finite".into()));
        }
        let vector = vector / C64::new(norm, 0.0);
        let projector = AlgebraElement::rank_one_projector(algebra, &vector).map_err(|e| match e {
            Error::OffBlockEntry { .. } => Error::InvalidArgument("state vector spans several blocks".into()),
            other => other,
        })?;
        Ok(Self {
            vector,
            projector,
            home: None,
        })
    }

    /// The `k`-th basis vector of `ctx`, remembering `ctx` as the context on which
    /// the class is stable.
    pub fn eigenstate(ctx: &Arc<Context>, k: usize) -> Result<Self> {
        if k >= ctx.dimension() {
            return Err(Error::IndexOutOfRange {
                index: k,
                dimension: ctx.dimension(),
            });
        }
        let mut psi = Self::new(ctx.algebra().clone(), ctx.vector(k))?;
        psi.home = Some((ctx.clone(), k));
        Ok(psi)
    }

    /// Spin-1/2 state polarized along the direction at angle `theta` from the x axis
    /// in the x-z plane.
    pub fn spin_half_polarized(theta: f64) -> Self {
        let v = CVector::from_vec(vec![
            C64::new((theta / 2.0 + std::f64::consts::FRAC_PI_4).sin(), 0.0),
            C64::new((theta / 2.0 + std::f64::consts::FRAC_PI_4).cos(), 0.0),
        ]);
        Self::new(AlgebraDescriptor::full(2), v).expect("unit vector in the full 2x2 algebra")
    }

    pub fn algebra(&self) -> &Arc<AlgebraDescriptor> {
        self.projector.algebra()
    }

    pub fn dimension(&self) -> usize {
        self.vector.len()
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn projector(&self) -> &AlgebraElement {
        &self.projector
    }

    pub fn home_context(&self) -> Option<&Arc<Context>> {
        self.home.as_ref().map(|(c, _)| c)
    }

    /// `<tau, A tau>`.
    pub fn inner_expectation(&self, a: &AlgebraElement) -> C64 {
        (self.vector.adjoint() * a.matrix() * &self.vector)[(0, 0)]
    }
}

/// `p_k = |<e_k, tau>|^2` over the basis of `ctx`.
pub fn born_distribution(psi: &QuantumState, ctx: &Context) -> Result<Vec<f64>> {
    if psi.dimension() != ctx.dimension() {
        return Err(Error::DimensionMismatch {
            expected: ctx.dimension(),
            actual: psi.dimension(),
        });
    }
    let amps = ctx.basis().adjoint() * psi.vector();
    Ok(amps.iter().map(|a| a.norm_sqr()).collect())
}

/// Inverse-CDF sampler over character indices.
#[derive(Debug, Clone)]
pub struct IndexSampler {
    cumulative: Vec<f64>,
}

impl IndexSampler {
    pub fn new(probabilities: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cumulative }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("nonempty distribution");
        let u = rng.random::<f64>() * total;
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1)
    }

    /// Counts of each index over `n` draws, split into fixed-size partitions that
    /// each own a sub-stream of `seed`.
    pub fn counts(&self, n: usize, seed: u64) -> Vec<u64> {
        let streams = SeedStreams::new(seed);
        let k = self.cumulative.len();
        let chunks = n.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = streams.stream(c as u64);
                let len = CHUNK.min(n - c * CHUNK);
                let mut counts = vec![0u64; k];
                for _ in 0..len {
                    counts[self.sample(&mut rng)] += 1;
                }
                counts
            })
            .reduce(
                || vec![0u64; k],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    }
}

/// Draws an elementary state of the class of `psi`: one Born-distributed layer per
/// requested context, plus the home context layer marked stable when `psi` has one.
pub fn sample_elementary_state<R: Rng + ?Sized>(
    psi: &QuantumState,
    contexts: &[Arc<Context>],
    rng: &mut R,
) -> Result<ElementaryState> {
    let mut phi = ElementaryState::new();
    phi.set_quantum_state(psi.clone());
    if let Some((home, _)) = &psi.home {
        let k = IndexSampler::new(&born_distribution(psi, home)?).sample(rng);
        phi.set_layer(home, k)?;
        let g = home.generator();
        phi.mark_stable(&g, (home.dimension() - 1 - k) as f64);
    }
    for ctx in contexts {
        if phi.layer(ctx.id()).is_some() {
            continue;
        }
        let k = IndexSampler::new(&born_distribution(psi, ctx)?).sample(rng);
        phi.set_layer(ctx, k)?;
    }
    Ok(phi)
}

/// `Psi_tau(A)`, read off `p_tau A p_tau = Psi_tau(A) p_tau` as `trace(p_tau A)`.
pub fn quantum_average_exact(psi: &QuantumState, a: &AlgebraElement) -> f64 {
    psi.projector().matrix().component_mul(&a.matrix().transpose()).sum().re
}

/// `|Psi(A + B) - Psi(A) - Psi(B)|`.
pub fn postulate6_linearity_check(psi: &QuantumState, a: &AlgebraElement, b: &AlgebraElement) -> Result<f64> {
    let sum = a.try_add(b)?;
    Ok((quantum_average_exact(psi, &sum) - quantum_average_exact(psi, a) - quantum_average_exact(psi, b)).abs())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HistogramBin {
    pub value: f64,
    pub count: u64,
    pub exact_probability: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnsembleReport {
    pub observable: String,
    pub context: usize,
    pub sample_count: usize,
    pub empirical_mean: f64,
    pub exact_mean: f64,
    pub standard_error: f64,
    pub histogram: Vec<HistogramBin>,
}

impl EnsembleReport {
    /// `|empirical - exact| <= 4 SE`, with an exact match required when SE is zero.
    pub fn within_band(&self) -> bool {
        let diff = (self.empirical_mean - self.exact_mean).abs();
        diff <= ACCEPTANCE_SIGMAS * self.standard_error || diff <= 1e-12
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "observable",
            "context",
            "sample_count",
            "empirical_mean",
            "exact_mean",
            "standard_error",
        ])?;
        out.write_record([
            self.observable.clone(),
            self.context.to_string(),
            self.sample_count.to_string(),
            self.empirical_mean.to_string(),
            self.exact_mean.to_string(),
            self.standard_error.to_string(),
        ])?;
        out.flush()?;
        Ok(())
    }

    pub fn write_histogram_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["value", "count", "exact_probability"])?;
        for b in &self.histogram {
            out.write_record([b.value.to_string(), b.count.to_string(), b.exact_probability.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Empirical mean of `A` over `n` elementary states sampled from `psi`, next to
/// the exact average `<tau, A tau>`.
pub fn ensemble_average<R: Rng + ?Sized>(
    psi: &QuantumState,
    a: &AlgebraElement,
    ctx: &Context,
    n: usize,
    rng: &mut R,
) -> Result<EnsembleReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let values = context_values(ctx, a)?;
    let born = born_distribution(psi, ctx)?;
    let counts = IndexSampler::new(&born).counts(n, rng.random());

    let spectrum = a.spectrum(DEFAULT_TOLERANCE)?;
    let mut histogram: Vec<HistogramBin> = spectrum
        .iter()
        .map(|&value| HistogramBin {
            value,
            count: 0,
            exact_probability: 0.0,
        })
        .collect();
    for (k, &v) in values.iter().enumerate() {
        let bin = histogram
            .iter_mut()
            .find(|b| b.value == v)
            .expect("context values are spectrum points");
        bin.count += counts[k];
        bin.exact_probability += born[k];
    }

    let nf = n as f64;
    let mean = histogram.iter().map(|b| b.value * b.count as f64).sum::<f64>() / nf;
    let var = if n > 1 {
        histogram
            .iter()
            .map(|b| b.count as f64 * (b.value - mean).powi(2))
            .sum::<f64>()
            / (nf - 1.0)
    } else {
        0.0
    };
    Ok(EnsembleReport {
        observable: a.fingerprint(),
        context: ctx.id().0,
        sample_count: n,
        empirical_mean: mean,
        exact_mean: psi.inner_expectation(a).re,
        standard_error: (var / nf).sqrt(),
        histogram,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ThresholdRow {
    pub threshold: f64,
    pub exact_first: f64,
    pub exact_second: f64,
    pub empirical_first: f64,
    pub empirical_second: f64,
    pub pooled_standard_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConsistencyReport {
    pub observable: String,
    pub contexts: (usize, usize),
    pub sample_count: usize,
    pub rows: Vec<ThresholdRow>,
    /// Largest difference between the two exact marginals.
    pub exact_discrepancy: f64,
}

impl ConsistencyReport {
    pub fn passed(&self) -> bool {
        self.exact_discrepancy <= 1e-12 && self.rows.iter().all(|r| r.passed)
    }
}

/// Exact `P(phi(A) <= lambda)` at each spectrum point, from one context.
pub fn exact_cumulative(psi: &QuantumState, a: &AlgebraElement, ctx: &Context) -> Result<Vec<(f64, f64)>> {
    let values = context_values(ctx, a)?;
    let born = born_distribution(psi, ctx)?;
    let spectrum = a.spectrum(DEFAULT_TOLERANCE)?;
    Ok(spectrum
        .iter()
        .map(|&s| {
            let p = values.iter().zip(&born).filter(|(v, _)| **v <= s).map(|(_, p)| p).sum();
            (s, p)
        })
        .collect())
}

/// Compares the distribution of a shared observable as seen from two contexts,
/// exactly and by sampling `n` states per context.
pub fn postulate5_consistency_check<R: Rng + ?Sized>(
    psi: &QuantumState,
    a: &AlgebraElement,
    ctx1: &Context,
    ctx2: &Context,
    n: usize,
    rng: &mut R,
) -> Result<ConsistencyReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let exact1 = exact_cumulative(psi, a, ctx1)?;
    let exact2 = exact_cumulative(psi, a, ctx2)?;
    let empirical = |ctx: &Context, seed: u64| -> Result<Vec<f64>> {
        let values = context_values(ctx, a)?;
        let counts = IndexSampler::new(&born_distribution(psi, ctx)?).counts(n, seed);
        Ok(exact1
            .iter()
            .map(|(s, _)| {
                values
                    .iter()
                    .zip(&counts)
                    .filter(|(v, _)| **v <= *s)
                    .map(|(_, c)| *c)
                    .sum::<u64>() as f64
                    / n as f64
            })
            .collect())
    };
    let (seed1, seed2) = (rng.random(), rng.random());
    let emp1 = empirical(ctx1, seed1)?;
    let emp2 = empirical(ctx2, seed2)?;

    let nf = n as f64;
    let rows = exact1
        .iter()
        .zip(&exact2)
        .zip(emp1.iter().zip(&emp2))
        .map(|(((s, e1), (_, e2)), (f1, f2))| {
            let pooled = (f1 + f2) / 2.0;
            let se = (pooled * (1.0 - pooled) * 2.0 / nf).max(0.0).sqrt();
            let diff = (f1 - f2).abs();
            ThresholdRow {
                threshold: *s,
                exact_first: *e1,
                exact_second: *e2,
                empirical_first: *f1,
                empirical_second: *f2,
                pooled_standard_error: se,
                passed: if se > 0.0 { diff <= ACCEPTANCE_SIGMAS * se } else { diff == 0.0 },
            }
        })
        .collect::<Vec<_>>();
    let exact_discrepancy = rows
        .iter()
        .map(|r| (r.exact_first - r.exact_second).abs())
        .fold(0.0, f64::max);
    Ok(ConsistencyReport {
        observable: a.fingerprint(),
        contexts: (ctx1.id().0, ctx2.id().0),
        sample_count: n,
        rows,
        exact_discrepancy,
    })
}
