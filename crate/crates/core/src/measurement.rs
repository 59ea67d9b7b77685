//! Reproducible measurements on elementary states.
//!
//! An instrument probes one context. Measuring `A` with it reads the value of the
//! instrument's layer, makes the state stable on `A`, keeps the stability of the
//! observables of that context, and throws away every other layer; discarded layers
//! are redrawn lazily from the Born distribution of the post-measurement state.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraDescriptor, AlgebraElement, CMatrix, CVector, C64};
use crate::context::{context_from_family, Context, ContextExport, ContextRegistry};
use crate::elementary::{context_values, ElementaryState, StateDump};
use crate::ensemble::QuantumState;
use crate::error::{Error, Result};

pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;

/// A measuring device built for one context.
#[derive(Debug, Clone)]
pub struct Instrument {
    pub context: Arc<Context>,
    pub label: String,
}

impl Instrument {
    pub fn new(context: Arc<Context>, label: impl Into<String>) -> Self {
        Self {
            context,
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub step: usize,
    pub instrument: usize,
    pub label: String,
    pub observable: String,
    pub value: f64,
    /// Fingerprints of the stable observables after the step.
    pub post_stable: Vec<String>,
}

/// Measures `a` with `inst` and updates `phi` in place.
pub fn measure<R: Rng + ?Sized>(
    phi: &mut ElementaryState,
    inst: &Instrument,
    a: &AlgebraElement,
    rng: &mut R,
) -> Result<f64> {
    let ctx = &inst.context;
    let values = context_values(ctx, a)?;
    let k = phi.ensure_layer(ctx, rng)?;
    let value = values[k];

    phi.retain_stable(|b| ctx.contains(b));
    phi.mark_stable(a, value);
    let id = ctx.id();
    phi.retain_layers(|other| other == id);

    if let Some(psi) = phi.quantum_state() {
        let collapsed = collapse(psi, ctx, &values, value)?;
        phi.set_quantum_state(collapsed);
    }
    Ok(value)
}

/// `P_v tau / |P_v tau|`, where `P_v` sums the basis projectors of `ctx` on which
/// the measured observable takes `value`. When `P_v tau` vanishes the lowest-index
/// basis vector with that value is used.
fn collapse(psi: &QuantumState, ctx: &Context, values: &[f64], value: f64) -> Result<QuantumState> {
    let n = ctx.dimension();
    let selected: Vec<usize> = (0..n).filter(|&j| values[j] == value).collect();
    let mut projected = CVector::zeros(n);
    for &j in &selected {
        let e = ctx.vector(j);
        let amp = e.dotc(psi.vector());
        projected += e * amp;
    }
    let vector = if projected.norm() < 1e-12 {
        ctx.vector(selected[0])
    } else {
        projected
    };
    QuantumState::new(ctx.algebra().clone(), vector)
}

/// Runs `plan` from `phi0`, returning one record per step and the final state.
pub fn run_sequence<R: Rng + ?Sized>(
    phi0: ElementaryState,
    plan: &[(Instrument, AlgebraElement)],
    rng: &mut R,
) -> Result<(Vec<MeasurementRecord>, ElementaryState)> {
    if plan.is_empty() {
        return Err(Error::InvalidArgument("measurement plan is empty".into()));
    }
    let mut phi = phi0;
    let mut records = Vec::with_capacity(plan.len());
    for (step, (inst, a)) in plan.iter().enumerate() {
        let value = measure(&mut phi, inst, a, rng)?;
        records.push(MeasurementRecord {
            step,
            instrument: inst.context.id().0,
            label: inst.label.clone(),
            observable: a.fingerprint(),
            value,
            post_stable: phi.stable_fingerprints().into_iter().collect(),
        });
    }
    Ok((records, phi))
}

fn spin1_matrices() -> [CMatrix; 3] {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| C64::new(x, 0.0);
    let i = |x: f64| C64::new(0.0, x);
    let z = C64::new(0.0, 0.0);
    [
        CMatrix::from_row_slice(3, 3, &[z, r(c), z, r(c), z, r(c), z, r(c), z]),
        CMatrix::from_row_slice(3, 3, &[z, i(-c), z, i(c), z, i(-c), z, i(c), z]),
        CMatrix::from_row_slice(3, 3, &[r(1.0), z, z, z, z, z, z, z, r(-1.0)]),
    ]
}

/// Spin-1 component `u . S` along a real direction.
pub fn spin_projection(direction: &[f64; 3]) -> AlgebraElement {
    let [sx, sy, sz] = spin1_matrices();
    let m = sx * C64::new(direction[0], 0.0) + sy * C64::new(direction[1], 0.0) + sz * C64::new(direction[2], 0.0);
    AlgebraElement::new(AlgebraDescriptor::full(3), m).expect("3x3 matrix in the full algebra")
}

pub fn spin_projection_squared(direction: &[f64; 3]) -> AlgebraElement {
    let s = spin_projection(direction);
    &s * &s
}

/// `S_x^2`, `S_y^2`, `S_z^2`.
pub fn spin1_squared_observables() -> [AlgebraElement; 3] {
    spin1_matrices().map(|s| AlgebraElement::new(AlgebraDescriptor::full(3), &s * &s).expect("full algebra"))
}

/// Squared spin projections along an orthonormal frame.
pub fn rotated_squared_family(frame: &[[f64; 3]; 3]) -> Result<[AlgebraElement; 3]> {
    let mut deviation: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let d: f64 = (0..3).map(|c| frame[i][c] * frame[j][c]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            deviation = deviation.max((d - target).abs());
        }
    }
    if deviation.is_nan() || deviation > 1e-10 {
        return Err(Error::NonOrthonormalFrame { deviation });
    }
    Ok(frame.map(|u| spin_projection_squared(&u)))
}

/// Rotation of the standard frame by `angle` about the x axis.
pub fn frame_about_x(angle: f64) -> [[f64; 3]; 3] {
    let (s, c) = angle.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]]
}

/// A measurement experiment read from JSON.
///
/// Observables are matrices given row by row; each entry is a real number or a
/// `[re, im]` pair. Each instrument names the observables whose joint eigenbasis
/// defines its context.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    #[serde(default)]
    pub block_sizes: Option<Vec<usize>>,
    #[serde(default)]
    pub state: Option<Vec<Entry>>,
    pub observables: BTreeMap<String, Vec<Vec<Entry>>>,
    pub instruments: BTreeMap<String, Vec<String>>,
    pub steps: Vec<PlanStep>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn to_complex(self) -> C64 {
        match self {
            Entry::Real(x) => C64::new(x, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanStep {
    pub instrument: String,
    pub observable: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transcript {
    pub schema_version: u32,
    pub seed: u64,
    pub contexts: Vec<ContextExport>,
    pub records: Vec<MeasurementRecord>,
    pub final_state: StateDump,
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("bad plan: {e}")))
    }

    pub fn execute<R: Rng + ?Sized>(&self, seed: u64, rng: &mut R) -> Result<Transcript> {
        let n = self
            .observables
            .values()
            .next()
            .map(|rows| rows.len())
            .ok_or_else(|| Error::InvalidArgument("plan defines no observables".into()))?;
        let algebra = match &self.block_sizes {
            Some(sizes) => AlgebraDescriptor::new(sizes.clone())?,
            None => AlgebraDescriptor::full(n),
        };
        let mut observables = BTreeMap::new();
        for (name, rows) in &self.observables {
            let dim = algebra.dimension();
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(Error::InvalidArgument(format!("observable {name} is not {dim}x{dim}")));
            }
            let m = CMatrix::from_fn(dim, dim, |i, j| rows[i][j].to_complex());
            observables.insert(name.clone(), AlgebraElement::new(algebra.clone(), m)?);
        }
        let lookup = |name: &str| {
            observables
                .get(name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown observable {name}")))
        };

        let registry = ContextRegistry::new();
        let mut instruments = BTreeMap::new();
        for (label, members) in &self.instruments {
            let family = members.iter().map(|m| lookup(m).cloned()).collect::<Result<Vec<_>>>()?;
            let ctx = context_from_family(&family, &registry)?;
            instruments.insert(label.clone(), Instrument::new(ctx, label.clone()));
        }
        let plan = self
            .steps
            .iter()
            .map(|s| {
                let inst = instruments
                    .get(&s.instrument)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown instrument {}", s.instrument)))?;
                Ok((inst.clone(), lookup(&s.observable)?.clone()))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut phi = ElementaryState::new().with_stream(0);
        if let Some(v) = &self.state {
            let v = CVector::from_iterator(v.len(), v.iter().map(|e| e.to_complex()));
            phi.attach_state(QuantumState::new(algebra.clone(), v)?);
        }
        let (records, phi) = run_sequence(phi, &plan, rng)?;
        Ok(Transcript {
            schema_version: TRANSCRIPT_SCHEMA_VERSION,
            seed,
            contexts: registry.contexts().iter().map(|c| c.export()).collect(),
            records,
            final_state: phi.dump(),
        })
    }
}
