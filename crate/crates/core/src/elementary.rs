//! Elementary states: one character per measurement context.
//!
//! A character of a maximal commutative context in the full matrix algebra is the
//! selection of one joint eigenvector `e_k`; it evaluates an observable `A` of the
//! context as `<e_k, A e_k>`. An [`ElementaryState`] stores such selections for the
//! contexts it has been asked about and remembers the observables on which it has
//! been made stable.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, CVector, C64, DEFAULT_TOLERANCE};
use crate::context::{Context, ContextId, ContextRegistry};
use crate::ensemble::{born_distribution, QuantumState};
use crate::error::{Error, Result};

/// Agreement tolerance for stability and character identities.
pub const STABILITY_TOLERANCE: f64 = 1e-9;

/// Character of a context: the index of the selected joint eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Character {
    pub context: ContextId,
    pub index: usize,
}

impl Character {
    /// Raw character value `<e_k, A e_k>`.
    pub fn value(&self, ctx: &Context, a: &AlgebraElement) -> f64 {
        let e = ctx.vector(self.index);
        (e.adjoint() * a.matrix() * &e)[(0, 0)].re
    }
}

/// An observable together with the value every layer must give it.
#[derive(Debug, Clone)]
pub struct StableRecord {
    pub observable: AlgebraElement,
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ElementaryState {
    layers: BTreeMap<ContextId, usize>,
    stable: BTreeMap<String, StableRecord>,
    quantum_state: Option<QuantumState>,
    rng_stream: Option<u64>,
    stability_reset_on_attach: bool,
}

impl ElementaryState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.rng_stream = Some(stream);
        self
    }

    pub fn rng_stream(&self) -> Option<u64> {
        self.rng_stream
    }

    pub fn layer(&self, ctx: ContextId) -> Option<usize> {
        self.layers.get(&ctx).copied()
    }

    pub fn layers(&self) -> impl Iterator<Item = Character> + '_ {
        self.layers.iter().map(|(&context, &index)| Character { context, index })
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn set_layer(&mut self, ctx: &Context, index: usize) -> Result<()> {
        if index >= ctx.dimension() {
            return Err(Error::IndexOutOfRange {
                index,
                dimension: ctx.dimension(),
            });
        }
        self.layers.insert(ctx.id(), index);
        Ok(())
    }

    pub(crate) fn retain_layers(&mut self, keep: impl Fn(ContextId) -> bool) {
        self.layers.retain(|&id, _| keep(id));
    }

    pub fn quantum_state(&self) -> Option<&QuantumState> {
        self.quantum_state.as_ref()
    }

    pub(crate) fn set_quantum_state(&mut self, psi: QuantumState) {
        self.quantum_state = Some(psi);
    }

    /// Attaches a new quantum state. Stability gained under a previous state is
    /// discarded and the reset is recorded in [`StateDump`].
    pub fn attach_state(&mut self, psi: QuantumState) {
        if !self.stable.is_empty() {
            self.stability_reset_on_attach = true;
        }
        self.stable.clear();
        self.quantum_state = Some(psi);
    }

    pub fn stable_records(&self) -> impl Iterator<Item = (&str, &StableRecord)> {
        self.stable.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn stable_fingerprints(&self) -> BTreeSet<String> {
        self.stable.keys().cloned().collect()
    }

    pub fn is_marked_stable(&self, a: &AlgebraElement) -> bool {
        self.stable.contains_key(&a.fingerprint())
    }

    pub(crate) fn mark_stable(&mut self, a: &AlgebraElement, value: f64) {
        self.stable.insert(
            a.fingerprint(),
            StableRecord {
                observable: a.clone(),
                value,
            },
        );
    }

    pub(crate) fn retain_stable(&mut self, keep: impl Fn(&AlgebraElement) -> bool) {
        self.stable.retain(|_, r| keep(&r.observable));
    }

    /// Value of `a` on the layer for `ctx`, reported as the nearest point of the
    /// spectrum of `a`.
    pub fn evaluate(&self, ctx: &Context, a: &AlgebraElement) -> Result<f64> {
        let values = context_values(ctx, a)?;
        let k = self.layer(ctx.id()).ok_or(Error::MissingLayer(ctx.id().0))?;
        Ok(values[k])
    }

    /// Raw character value `<e_k, A e_k>` without snapping to the spectrum.
    pub fn character_value(&self, ctx: &Context, a: &AlgebraElement) -> Result<f64> {
        if !ctx.contains(a) {
            return Err(Error::IncompatibleObservable { context: ctx.id().0 });
        }
        let index = self.layer(ctx.id()).ok_or(Error::MissingLayer(ctx.id().0))?;
        Ok(Character {
            context: ctx.id(),
            index,
        }
        .value(ctx, a))
    }

    /// Indices of `ctx` compatible with every stable observable the context contains.
    pub fn admissible_indices(&self, ctx: &Context) -> Vec<usize> {
        let mut allowed = vec![true; ctx.dimension()];
        for rec in self.stable.values() {
            if !ctx.contains(&rec.observable) {
                continue;
            }
            for (k, v) in ctx.diagonal_values(&rec.observable).into_iter().enumerate() {
                if (v - rec.value).abs() > STABILITY_TOLERANCE * rec.value.abs().max(1.0) {
                    allowed[k] = false;
                }
            }
        }
        (0..ctx.dimension()).filter(|&k| allowed[k]).collect()
    }

    /// Returns the layer index for `ctx`, creating it if absent.
    ///
    /// New layers are drawn from the Born distribution of the attached quantum
    /// state restricted to admissible indices, or uniformly over admissible indices
    /// when no state is attached or the restricted weight vanishes.
    pub fn ensure_layer<R: Rng + ?Sized>(&mut self, ctx: &Context, rng: &mut R) -> Result<usize> {
        if let Some(k) = self.layer(ctx.id()) {
            return Ok(k);
        }
        let admissible = self.admissible_indices(ctx);
        if admissible.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "stable observables admit no character on context {}",
                ctx.id()
            )));
        }
        let weights: Vec<f64> = match &self.quantum_state {
            Some(psi) => {
                let born = born_distribution(psi, ctx)?;
                admissible.iter().map(|&k| born[k]).collect()
            }
            None => vec![1.0; admissible.len()],
        };
        let total: f64 = weights.iter().sum();
        let pick = if total > 1e-14 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = admissible.len() - 1;
            for (j, w) in weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    chosen = j;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..admissible.len())
        };
        let k = admissible[pick];
        self.layers.insert(ctx.id(), k);
        Ok(k)
    }

    /// Assembles a state from explicit `(context, index)` assignments.
    pub fn construct_state(assignments: &BTreeMap<ContextId, usize>, registry: &ContextRegistry) -> Result<Self> {
        let mut phi = Self::new();
        for (&id, &index) in assignments {
            let ctx = registry.get(id).ok_or(Error::UnknownContext(id.0))?;
            phi.set_layer(&ctx, index)?;
        }
        Ok(phi)
    }

    /// State whose layer on `ctx` is `index` and whose layers on `others` agree with
    /// it on every observable they share with `ctx`.
    ///
    /// For each other context the admissible indices are those whose vectors overlap
    /// the chosen vector's block of the common subalgebra; `rule` picks among them.
    pub fn construct_stable_on<R: Rng + ?Sized>(
        ctx: &Arc<Context>,
        index: usize,
        others: &[Arc<Context>],
        rule: &mut ComplementRule<'_, R>,
    ) -> Result<Self> {
        let mut phi = Self::new();
        phi.set_layer(ctx, index)?;
        let generator = ctx.generator();
        let n = ctx.dimension();
        phi.mark_stable(&generator, (n - 1 - index) as f64);
        for other in others {
            if other.id() == ctx.id() {
                continue;
            }
            let allowed = shared_block_indices(ctx, index, other);
            let k = match rule {
                ComplementRule::LowestIndex => allowed[0],
                ComplementRule::Random(rng) => allowed[rng.random_range(0..allowed.len())],
            };
            phi.set_layer(other, k)?;
        }
        Ok(phi)
    }

    /// True iff every stored layer whose context contains `a` gives it the same
    /// value within `1e-9`.
    pub fn is_stable(&self, a: &AlgebraElement, registry: &ContextRegistry) -> bool {
        let mut seen: Option<f64> = None;
        for (&id, &k) in &self.layers {
            let Some(ctx) = registry.get(id) else { continue };
            if !ctx.contains(a) {
                continue;
            }
            let v = Character { context: id, index: k }.value(&ctx, a);
            match seen {
                None => seen = Some(v),
                Some(s) if (s - v).abs() > STABILITY_TOLERANCE * s.abs().max(1.0) => return false,
                _ => {}
            }
        }
        true
    }

    /// Checks the character identities on `samples` random elements of `ctx`.
    pub fn check_character_properties<R: Rng + ?Sized>(
        &self,
        ctx: &Context,
        samples: usize,
        rng: &mut R,
    ) -> Result<CharacterReport> {
        let index = self.layer(ctx.id()).ok_or(Error::MissingLayer(ctx.id().0))?;
        check_character(ctx, index, samples, rng)
    }

    pub fn dump(&self) -> StateDump {
        StateDump {
            layers: self.layers.iter().map(|(id, &k)| (id.0, k)).collect(),
            stable: self
                .stable
                .iter()
                .map(|(fp, r)| StableEntry {
                    fingerprint: fp.clone(),
                    value: r.value,
                })
                .collect(),
            rng_stream: self.rng_stream,
            has_quantum_state: self.quantum_state.is_some(),
            stability_reset_on_attach: self.stability_reset_on_attach,
        }
    }
}

/// How the free part of [`ElementaryState::construct_stable_on`] is assigned.
pub enum ComplementRule<'a, R: Rng + ?Sized> {
    LowestIndex,
    Random(&'a mut R),
}

impl ComplementRule<'static, rand_chacha::ChaCha8Rng> {
    pub fn lowest() -> Self {
        ComplementRule::LowestIndex
    }
}

/// Indices of `other` lying in the same minimal projector of the common
/// subalgebra of `ctx` and `other` as `ctx`'s vector `index`.
///
/// Minimal projectors of the intersection of two maximal commutative subalgebras
/// are the connected components of the bipartite overlap graph of their bases.
pub fn shared_block_indices(ctx: &Context, index: usize, other: &Context) -> Vec<usize> {
    let n = ctx.dimension();
    let overlaps = ctx.basis().adjoint() * other.basis();
    let linked = |i: usize, j: usize| overlaps[(i, j)].norm() > 1e-7;
    let mut in_ctx = vec![false; n];
    let mut in_other = vec![false; n];
    in_ctx[index] = true;
    let mut frontier = vec![(true, index)];
    while let Some((from_ctx, i)) = frontier.pop() {
        for j in 0..n {
            if from_ctx && !in_other[j] && linked(i, j) {
                in_other[j] = true;
                frontier.push((false, j));
            } else if !from_ctx && !in_ctx[j] && linked(j, i) {
                in_ctx[j] = true;
                frontier.push((true, j));
            }
        }
    }
    (0..n).filter(|&j| in_other[j]).collect()
}

/// Values of `a` at every character of `ctx`, each snapped to the nearest point of
/// the spectrum of `a`.
pub fn context_values(ctx: &Context, a: &AlgebraElement) -> Result<Vec<f64>> {
    if !ctx.contains(a) {
        return Err(Error::IncompatibleObservable { context: ctx.id().0 });
    }
    let spectrum = a.spectrum(DEFAULT_TOLERANCE)?;
    Ok(ctx
        .diagonal_values(a)
        .into_iter()
        .map(|d| nearest(&spectrum, d))
        .collect())
}

fn nearest(points: &[f64], x: f64) -> f64 {
    points
        .iter()
        .copied()
        .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))
        .expect("spectrum is never empty")
}

/// Residuals of the character identities for one context and character index.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CharacterReport {
    pub samples: usize,
    pub zero: f64,
    pub unit: f64,
    pub square_negativity: f64,
    pub spectrum_distance: f64,
    pub spectrum_exhausted: bool,
    pub linearity: f64,
    pub multiplicativity: f64,
}

impl CharacterReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.zero,
            self.unit,
            self.square_negativity,
            self.spectrum_distance,
            self.linearity,
            self.multiplicativity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passed(&self, tolerance: f64) -> bool {
        self.spectrum_exhausted && self.max_residual() <= tolerance
    }
}

/// Random element of `ctx`: `sum_k a_k p_k` with `a_k` drawn from a few levels so
/// degenerate spectra occur.
pub fn random_context_element<R: Rng + ?Sized>(ctx: &Context, rng: &mut R) -> AlgebraElement {
    let n = ctx.dimension();
    let levels = rng.random_range(1..=n);
    let palette: Vec<f64> = (0..levels).map(|_| rng.random_range(-3.0..3.0)).collect();
    let diag = CVector::from_iterator(n, (0..n).map(|_| C64::new(palette[rng.random_range(0..levels)], 0.0)));
    let m = ctx.basis() * nalgebra::DMatrix::from_diagonal(&diag) * ctx.basis().adjoint();
    AlgebraElement::new(ctx.algebra().clone(), m).expect("context elements respect the block structure")
}

pub(crate) fn check_character<R: Rng + ?Sized>(
    ctx: &Context,
    index: usize,
    samples: usize,
    rng: &mut R,
) -> Result<CharacterReport> {
    let chi = Character {
        context: ctx.id(),
        index,
    };
    let algebra = ctx.algebra().clone();
    let mut rep = CharacterReport {
        samples,
        zero: chi.value(ctx, &AlgebraElement::zero(algebra.clone())).abs(),
        unit: (chi.value(ctx, &AlgebraElement::identity(algebra)) - 1.0).abs(),
        spectrum_exhausted: true,
        ..Default::default()
    };
    for _ in 0..samples {
        let a = random_context_element(ctx, rng);
        let b = random_context_element(ctx, rng);
        let (x, y) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let va = chi.value(ctx, &a);
        let vb = chi.value(ctx, &b);

        let sq = chi.value(ctx, &(&a * &a));
        rep.square_negativity = rep.square_negativity.max((-sq).max(0.0));

        let spectrum = a.spectrum(DEFAULT_TOLERANCE)?;
        rep.spectrum_distance = rep.spectrum_distance.max((nearest(&spectrum, va) - va).abs());
        // every spectrum point is the value of some character of the context
        let attained: Vec<f64> = (0..ctx.dimension())
            .map(|k| Character { context: ctx.id(), index: k }.value(ctx, &a))
            .collect();
        if !spectrum
            .iter()
            .all(|s| attained.iter().any(|v| (v - s).abs() <= STABILITY_TOLERANCE * s.abs().max(1.0)))
        {
            rep.spectrum_exhausted = false;
        }

        let combo = &a.scale_real(x) + &b.scale_real(y);
        rep.linearity = rep.linearity.max((chi.value(ctx, &combo) - x * va - y * vb).abs());
        rep.multiplicativity = rep.multiplicativity.max((chi.value(ctx, &(&a * &b)) - va * vb).abs());
    }
    Ok(rep)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StableEntry {
    pub fingerprint: String,
    pub value: f64,
}

/// JSON dump of an elementary state.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StateDump {
    pub layers: Vec<(usize, usize)>,
    pub stable: Vec<StableEntry>,
    pub rng_stream: Option<u64>,
    pub has_quantum_state: bool,
    /// Stability is reset whenever a new quantum state is attached.
    pub stability_reset_on_attach: bool,
}
