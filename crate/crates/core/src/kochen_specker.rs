//! Exhaustive search for noncontextual value assignments on spin-1 rays.
//!
//! Each ray `r` stands for the squared spin projection `S_r^2`, whose spectrum is
//! `{0, 1}`. For any orthonormal frame the three squares sum to `2`, so a
//! context-independent assignment gives exactly one `0` per orthogonal triad, and
//! two orthogonal rays (which complete to a frame) can never both be `0`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Peres' 33-ray set as shipped with the crate.
pub const PERES_33_CSV: &str = include_str!("../data/peres33.csv");
pub const PERES_33_SHA256: &str = "3cb2a991493a2f1374f625620813b5c04983e68c2706d4f0910cd6481ccb3d76";

const ORTHOGONALITY_TOLERANCE: f64 = 1e-9;

/// A list of unit rays in `R^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySet {
    rays: Vec<[f64; 3]>,
}

impl RaySet {
    /// Normalizes each ray; rejects empty lists, zero vectors and repeated directions.
    pub fn new(rays: Vec<[f64; 3]>) -> Result<Self> {
        if rays.is_empty() {
            return Err(Error::MalformedRays("no rays".into()));
        }
        let mut unit = Vec::with_capacity(rays.len());
        for (i, r) in rays.iter().enumerate() {
            let norm = dot(r, r).sqrt();
            if !norm.is_finite() || norm < 1e-12 {
                return Err(Error::MalformedRays(format!("ray {i} has zero length")));
            }
            let u = [r[0] / norm, r[1] / norm, r[2] / norm];
            if let Some(j) = unit.iter().position(|v: &[f64; 3]| 1.0 - dot(v, &u).abs() < 1e-12) {
                return Err(Error::MalformedRays(format!("ray {i} repeats ray {j}")));
            }
            unit.push(u);
        }
        Ok(Self { rays: unit })
    }

    /// Parses `x,y,z` lines; `#` starts a comment, blank lines are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rays = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::MalformedRays(format!(
                    "line {}: expected 3 fields, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let mut r = [0.0; 3];
            for (c, f) in r.iter_mut().zip(&fields) {
                *c = f
                    .parse()
                    .map_err(|_| Error::MalformedRays(format!("line {}: cannot parse {f:?}", lineno + 1)))?;
            }
            rays.push(r);
        }
        Self::new(rays)
    }

    /// The built-in Peres set, after checking the embedded data against its digest.
    pub fn peres33() -> Self {
        assert_eq!(sha256_hex(PERES_33_CSV.as_bytes()), PERES_33_SHA256, "Peres ray data corrupted");
        Self::from_csv(PERES_33_CSV).expect("embedded ray set is well formed")
    }

    pub fn rays(&self) -> &[[f64; 3]] {
        &self.rays
    }

    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }

    pub fn orthogonal(&self, i: usize, j: usize) -> bool {
        dot(&self.rays[i], &self.rays[j]).abs() <= ORTHOGONALITY_TOLERANCE
    }

    pub fn orthogonal_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.orthogonal(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// All mutually orthogonal triples, computed from the coordinates.
    pub fn triads(&self) -> Vec<[usize; 3]> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if !self.orthogonal(i, j) {
                    continue;
                }
                for k in j + 1..n {
                    if self.orthogonal(i, k) && self.orthogonal(j, k) {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        out
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "UPPERCASE")]
pub enum KsOutcome {
    /// Value of `S_r^2` for each ray, in input order.
    Sat { assignment: Vec<u8> },
    /// The search space was exhausted without finding an admissible assignment.
    Unsat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KsReport {
    pub rays: usize,
    pub triads: usize,
    pub orthogonal_pairs: usize,
    /// Variable assignments tried, including forced ones.
    pub nodes: u64,
    #[serde(flatten)]
    pub outcome: KsOutcome,
}

impl KsReport {
    pub fn is_sat(&self) -> bool {
        matches!(self.outcome, KsOutcome::Sat { .. })
    }

    pub fn assignment(&self) -> Option<&[u8]> {
        match &self.outcome {
            KsOutcome::Sat { assignment } => Some(assignment),
            KsOutcome::Unsat => None,
        }
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        match &self.outcome {
            KsOutcome::Sat { assignment } => {
                let _ = write!(s, "SAT ");
                for v in assignment {
                    let _ = write!(s, "{v}");
                }
            }
            KsOutcome::Unsat => s.push_str("UNSAT"),
        }
        let _ = write!(
            s,
            " rays={} triads={} pairs={} nodes={}",
            self.rays, self.triads, self.orthogonal_pairs, self.nodes
        );
        s
    }
}

/// True iff `assignment` gives every triad exactly one zero and no orthogonal pair
/// two zeros.
pub fn is_admissible(rays: &RaySet, assignment: &[u8]) -> bool {
    assignment.len() == rays.len()
        && assignment.iter().all(|&v| v <= 1)
        && rays
            .triads()
            .iter()
            .all(|t| t.iter().filter(|&&i| assignment[i] == 0).count() == 1)
        && rays
            .orthogonal_pairs()
            .iter()
            .all(|&(i, j)| assignment[i] == 1 || assignment[j] == 1)
}

/// Backtracking search with propagation for a `{0, 1}` assignment satisfying the
/// triad and orthogonal-pair rules.
pub fn ks_noncontextual_search(rays: &RaySet) -> Result<KsReport> {
    let triads = rays.triads();
    if triads.is_empty() {
        return Err(Error::MalformedRays("no complete orthogonal triad".into()));
    }
    let pairs = rays.orthogonal_pairs();
    let mut search = Search::new(rays.len(), &triads, &pairs);
    let found = search.solve();
    let outcome = if found {
        let assignment: Vec<u8> = search.values.iter().map(|v| v.expect("complete assignment")).collect();
        debug_assert!(is_admissible(rays, &assignment));
        KsOutcome::Sat { assignment }
    } else {
        KsOutcome::Unsat
    };
    Ok(KsReport {
        rays: rays.len(),
        triads: triads.len(),
        orthogonal_pairs: pairs.len(),
        nodes: search.nodes,
        outcome,
    })
}

struct Search<'a> {
    values: Vec<Option<u8>>,
    triads: &'a [[usize; 3]],
    ray_triads: Vec<Vec<usize>>,
    neighbours: Vec<Vec<usize>>,
    order: Vec<usize>,
    trail: Vec<usize>,
    nodes: u64,
}

impl<'a> Search<'a> {
    fn new(n: usize, triads: &'a [[usize; 3]], pairs: &[(usize, usize)]) -> Self {
        let mut ray_triads = vec![Vec::new(); n];
        for (t, tri) in triads.iter().enumerate() {
            for &i in tri {
                ray_triads[i].push(t);
            }
        }
        let mut neighbours = vec![Vec::new(); n];
        for &(i, j) in pairs {
            neighbours[i].push(j);
            neighbours[j].push(i);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(ray_triads[i].len()), std::cmp::Reverse(neighbours[i].len()), i));
        Self {
            values: vec![None; n],
            triads,
            ray_triads,
            neighbours,
            order,
            trail: Vec::new(),
            nodes: 0,
        }
    }

    fn solve(&mut self) -> bool {
        let Some(&var) = self.order.iter().find(|&&i| self.values[i].is_none()) else {
            return true;
        };
        for value in [0u8, 1] {
            let mark = self.trail.len();
            if self.assign(var, value) && self.solve() {
                return true;
            }
            self.undo(mark);
        }
        false
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let i = self.trail.pop().unwrap();
            self.values[i] = None;
        }
    }

    /// Assigns and propagates; false on conflict (the caller undoes the trail).
    fn assign(&mut self, var: usize, value: u8) -> bool {
        let mut queue = vec![(var, value)];
        while let Some((i, v)) = queue.pop() {
            match self.values[i] {
                Some(existing) if existing == v => continue,
                Some(_) => return false,
                None => {}
            }
            self.nodes += 1;
            self.values[i] = Some(v);
            self.trail.push(i);
            if v == 0 {
                for &j in &self.neighbours[i] {
                    queue.push((j, 1));
                }
            }
            for &t in &self.ray_triads[i] {
                let tri = self.triads[t];
                let zeros = tri.iter().filter(|&&k| self.values[k] == Some(0)).count();
                let ones = tri.iter().filter(|&&k| self.values[k] == Some(1)).count();
                if zeros > 1 || ones > 2 {
                    return false;
                }
                if ones == 2 && zeros == 0 {
                    if let Some(&k) = tri.iter().find(|&&k| self.values[k].is_none()) {
                        queue.push((k, 0));
                    } else {
                        return false;
                    }
                }
            }
        }
        true
    }
}
