//! Harmonic oscillator Green's functions.
//!
//! Vacuum time-ordered correlations of the position operator are computed three
//! ways: by Wick pairing of the two-point function, on a truncated Fock space, and
//! by numerically differentiating the generating functional `Z(j)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{CMatrix, CVector, C64};
use crate::error::{Error, Result};
use crate::gns::StateFunctional;

pub const MAX_ORDER: usize = 12;
/// Default number of levels beyond the order kept by the Fock oracle.
pub const DEFAULT_EXTRA_LEVELS: usize = 6;

const I: C64 = C64::new(0.0, 1.0);

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveFrequency(omega))
    }
}

/// Oscillator ladder algebra on the first `cutoff` levels.
#[derive(Debug, Clone)]
pub struct FockTruncation {
    cutoff: usize,
    omega: f64,
    lowering: CMatrix,
}

impl FockTruncation {
    pub fn new(cutoff: usize, omega: f64) -> Result<Self> {
        check_omega(omega)?;
        if cutoff == 0 {
            return Err(Error::InvalidArgument("cutoff must be positive".into()));
        }
        let mut lowering = CMatrix::zeros(cutoff, cutoff);
        for k in 1..cutoff {
            lowering[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
        }
        Ok(Self {
            cutoff,
            omega,
            lowering,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn lowering(&self) -> &CMatrix {
        &self.lowering
    }

    pub fn raising(&self) -> CMatrix {
        self.lowering.adjoint()
    }

    /// `a^+ a^-`, exactly `diag(0, 1, ..., N-1)`.
    pub fn number(&self) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(
            self.cutoff,
            (0..self.cutoff).map(|k| C64::new(k as f64, 0.0)),
        ))
    }

    pub fn position(&self) -> CMatrix {
        (&self.lowering + self.raising()) / C64::new((2.0 * self.omega).sqrt(), 0.0)
    }

    pub fn momentum(&self) -> CMatrix {
        (self.raising() - &self.lowering) * (I * (self.omega / 2.0).sqrt())
    }

    pub fn hamiltonian(&self) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(
            self.cutoff,
            (0..self.cutoff).map(|k| C64::new(self.omega * (k as f64 + 0.5), 0.0)),
        ))
    }

    /// `Q(t) = (a^- e^{-i w t} + a^+ e^{i w t}) / sqrt(2 w)`.
    pub fn heisenberg_position(&self, t: f64) -> CMatrix {
        let phase = C64::from_polar(1.0, -self.omega * t);
        (&self.lowering * phase + self.raising() * phase.conj()) / C64::new((2.0 * self.omega).sqrt(), 0.0)
    }
}

/// `G(t1, t2) = e^{-i w |t1 - t2|} / (2 w)`.
pub fn two_point(t1: f64, t2: f64, omega: f64) -> Result<C64> {
    check_omega(omega)?;
    Ok(C64::from_polar(1.0 / (2.0 * omega), -omega * (t1 - t2).abs()))
}

/// The Feynman kernel `D^c(t) = i e^{-i w |t|} / (2 w)`.
pub fn feynman_kernel(t: f64, omega: f64) -> Result<C64> {
    Ok(I * two_point(t, 0.0, omega)?)
}

fn double_factorial_odd(n: usize) -> usize {
    (1..n).step_by(2).product()
}

/// All perfect matchings of `0..n`, each listed as pairs `(i, j)` with `i < j`.
/// The smallest unmatched index is always paired first.
pub fn perfect_matchings(n: usize) -> Result<Vec<Vec<(usize, usize)>>> {
    if n > MAX_ORDER {
        return Err(Error::OrderTooLarge { order: n, max: MAX_ORDER });
    }
    if n % 2 == 1 {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(double_factorial_odd(n));
    let mut current = Vec::with_capacity(n / 2);
    let remaining: Vec<usize> = (0..n).collect();
    extend_matchings(&remaining, &mut current, &mut out);
    Ok(out)
}

fn extend_matchings(remaining: &[usize], current: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
    let Some((&first, rest)) = remaining.split_first() else {
        out.push(current.clone());
        return;
    };
    for (k, &partner) in rest.iter().enumerate() {
        let mut next = rest.to_vec();
        next.remove(k);
        current.push((first, partner));
        extend_matchings(&next, current, out);
        current.pop();
    }
}

/// Sum over perfect matchings of products of [`two_point`]; zero for odd orders.
pub fn wick_green(times: &[f64], omega: f64) -> Result<C64> {
    check_omega(omega)?;
    let matchings = perfect_matchings(times.len())?;
    if times.len() % 2 == 1 {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok(matchings
        .par_iter()
        .map(|m| {
            m.iter()
                .map(|&(i, j)| C64::from_polar(1.0 / (2.0 * omega), -omega * (times[i] - times[j]).abs()))
                .product::<C64>()
        })
        .collect::<Vec<C64>>()
        .into_iter()
        .sum())
}

/// `<0| T Q(t_1) ... Q(t_n) |0>` on a Fock truncation with `cutoff` levels.
pub fn fock_oracle_green(times: &[f64], omega: f64, cutoff: usize) -> Result<C64> {
    check_omega(omega)?;
    let n = times.len();
    if n > MAX_ORDER {
        return Err(Error::OrderTooLarge { order: n, max: MAX_ORDER });
    }
    if cutoff < n + 2 {
        return Err(Error::CutoffTooSmall {
            cutoff,
            order: n,
            required: n + 2,
        });
    }
    let fock = FockTruncation::new(cutoff, omega)?;
    let mut sorted = times.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    // apply the earliest factor first
    let mut v = CVector::zeros(cutoff);
    v[0] = C64::new(1.0, 0.0);
    for &t in sorted.iter().rev() {
        v = fock.heisenberg_position(t) * v;
    }
    Ok(v[0])
}

pub fn default_cutoff(order: usize) -> usize {
    order + DEFAULT_EXTRA_LEVELS
}

/// `exp(-r a^+ a^-)` and its operator-norm distance to the vacuum projector.
pub fn ground_projector_limit(r: f64, cutoff: usize) -> Result<(CMatrix, f64)> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidArgument(format!("r must be nonnegative, got {r}")));
    }
    if cutoff == 0 {
        return Err(Error::InvalidArgument("cutoff must be positive".into()));
    }
    let diag: Vec<f64> = (0..cutoff).map(|k| (-r * k as f64).exp()).collect();
    let deviation = diag.iter().skip(1).copied().fold(0.0, f64::max);
    let m = CMatrix::from_diagonal(&CVector::from_iterator(cutoff, diag.iter().map(|&d| C64::new(d, 0.0))));
    Ok((m, deviation))
}

/// `|e^{-r N} H e^{-r N} - (w/2) e^{-2 r N}|` in operator norm.
pub fn ground_sandwich_residual(r: f64, omega: f64, cutoff: usize) -> Result<f64> {
    check_omega(omega)?;
    let fock = FockTruncation::new(cutoff, omega)?;
    let (e, _) = ground_projector_limit(r, cutoff)?;
    let (e2, _) = ground_projector_limit(2.0 * r, cutoff)?;
    let lhs = &e * fock.hamiltonian() * &e;
    Ok(operator_norm(&(lhs - e2 * C64::new(omega / 2.0, 0.0))))
}

fn operator_norm(m: &CMatrix) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryBound {
    /// `|Psi(e^{-r1 N} (a^+)^k (a^-)^l e^{-r2 N})|`.
    pub magnitude: f64,
    /// `e^{-r1 k - r2 l} * constant`.
    pub bound: f64,
    /// `|Psi((a^+)^k (a^-)^k)|^{1/2} |Psi((a^+)^l (a^-)^l)|^{1/2}`.
    pub constant: f64,
}

impl AuxiliaryBound {
    pub fn holds(&self) -> bool {
        self.magnitude <= self.bound * (1.0 + 1e-12) + 1e-300
    }
}

/// Evaluates the suppressed ladder monomial under `psi`, a functional on the
/// `cutoff x cutoff` matrices, together with its exponential bound.
pub fn auxiliary_limit_check(
    k: usize,
    l: usize,
    r1: f64,
    r2: f64,
    cutoff: usize,
    psi: &StateFunctional,
) -> Result<AuxiliaryBound> {
    if k + l == 0 {
        return Err(Error::InvalidArgument("k + l must be positive".into()));
    }
    if psi.algebra().dimension() != cutoff || !psi.algebra().is_full() {
        return Err(Error::DimensionMismatch {
            expected: cutoff,
            actual: psi.algebra().dimension(),
        });
    }
    let fock = FockTruncation::new(cutoff, 1.0)?;
    let a = fock.lowering().clone();
    let ad = fock.raising();
    let power = |m: &CMatrix, p: usize| (0..p).fold(CMatrix::identity(cutoff, cutoff), |acc, _| acc * m);
    let (e1, _) = ground_projector_limit(r1, cutoff)?;
    let (e2, _) = ground_projector_limit(r2, cutoff)?;
    let value = |m: CMatrix| {
        let el = crate::algebra::AlgebraElement::new(psi.algebra().clone(), m).expect("full algebra");
        psi.value(&el)
    };
    let magnitude = value(&e1 * power(&ad, k) * power(&a, l) * &e2).norm();
    let ck = value(power(&ad, k) * power(&a, k)).norm().sqrt();
    let cl = value(power(&ad, l) * power(&a, l)).norm().sqrt();
    let constant = ck * cl;
    Ok(AuxiliaryBound {
        magnitude,
        bound: (-r1 * k as f64 - r2 * l as f64).exp() * constant,
        constant,
    })
}

/// Uniform grid of `steps` points from `t_min` to `t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {steps}")));
        }
        if !(t_min.is_finite() && t_max.is_finite() && t_max > t_min) {
            return Err(Error::InvalidGrid(format!("bad interval [{t_min}, {t_max}]")));
        }
        Ok(Self { t_min, t_max, steps })
    }

    pub fn step(&self) -> f64 {
        (self.t_max - self.t_min) / (self.steps - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_min + k as f64 * self.step()
    }

    /// Trapezoid weight of point `k`.
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.steps {
            self.step() / 2.0
        } else {
            self.step()
        }
    }

    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = (t - self.t_min) / self.step();
        let k = x.round();
        if !(k >= 0.0 && k < self.steps as f64) || (x - k).abs() > 1e-9 {
            return Err(Error::OffGrid(t));
        }
        Ok(k as usize)
    }
}

/// A real source sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SourceFunction {
    pub grid: TimeGrid,
    pub samples: Vec<f64>,
}

impl SourceFunction {
    pub fn new(grid: TimeGrid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.steps {
            return Err(Error::DimensionMismatch {
                expected: grid.steps,
                actual: samples.len(),
            });
        }
        Ok(Self { grid, samples })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let samples = (0..grid.steps).map(|k| f(grid.time(k))).collect();
        Self { grid, samples }
    }

    /// Reads `t,j` rows; the times must form a uniform, increasing grid.
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut ts = Vec::new();
        let mut js = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::InvalidGrid(e.to_string()))?;
            if line == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
                continue;
            }
            if rec.len() != 2 {
                return Err(Error::InvalidGrid(format!("row {}: expected t,j", line + 1)));
            }
            let parse = |f: &str| {
                f.parse::<f64>()
                    .map_err(|_| Error::InvalidGrid(format!("row {}: cannot parse {f:?}", line + 1)))
            };
            ts.push(parse(&rec[0])?);
            js.push(parse(&rec[1])?);
        }
        if ts.len() < 2 {
            return Err(Error::InvalidGrid("need at least 2 samples".into()));
        }
        let grid = TimeGrid::new(ts[0], ts[ts.len() - 1], ts.len())?;
        for (k, t) in ts.iter().enumerate() {
            if (t - grid.time(k)).abs() > 1e-6 * grid.step() {
                return Err(Error::InvalidGrid(format!("sample {k} at t={t} breaks the uniform grid")));
            }
        }
        Self::new(grid, js)
    }
}

/// `sum_{a,b} x_a x_b D^c(t_a - t_b)` for sparse weighted sources `x` on the grid.
fn quadratic_form(grid: &TimeGrid, points: &[(usize, f64)], omega: f64) -> C64 {
    let dt = grid.step();
    let span = grid.steps;
    let kernel: Vec<C64> = (0..span)
        .map(|d| I * C64::from_polar(1.0 / (2.0 * omega), -omega * d as f64 * dt))
        .collect();
    points
        .par_iter()
        .map(|&(a, xa)| {
            points
                .iter()
                .map(|&(b, xb)| kernel[a.abs_diff(b)] * (xa * xb))
                .sum::<C64>()
        })
        .collect::<Vec<C64>>()
        .into_iter()
        .sum()
}

fn check_resolution(grid: &TimeGrid, omega: f64) -> Result<()> {
    check_omega(omega)?;
    let limit = 0.1 / omega;
    if grid.step() > limit {
        return Err(Error::GridTooCoarse {
            step: grid.step(),
            limit,
        });
    }
    Ok(())
}

/// `Z(j) = exp((i/2) int int j(t1) D^c(t1 - t2) j(t2))` by trapezoid quadrature.
pub fn generating_functional(j: &SourceFunction, omega: f64) -> Result<C64> {
    Ok(log_generating_functional(j, omega)?.exp())
}

/// The exponent of [`generating_functional`], free of branch ambiguity.
pub fn log_generating_functional(j: &SourceFunction, omega: f64) -> Result<C64> {
    check_resolution(&j.grid, omega)?;
    let points: Vec<(usize, f64)> = j
        .samples
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(k, v)| (k, v * j.grid.weight(k)))
        .collect();
    Ok(I * 0.5 * quadratic_form(&j.grid, &points, omega))
}

/// `(1/i)^n d^n Z / dj(t_1) ... dj(t_n)` at `j = 0`, by mixed central differences
/// of step `h` in the strengths of discrete delta sources at the given times.
pub fn functional_derivative_green(grid: &TimeGrid, times: &[f64], omega: f64, h: f64) -> Result<C64> {
    check_resolution(grid, omega)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("difference step must be positive, got {h}")));
    }
    let n = times.len();
    if n > MAX_ORDER {
        return Err(Error::OrderTooLarge { order: n, max: MAX_ORDER });
    }
    let idx = times.iter().map(|&t| grid.index_of(t)).collect::<Result<Vec<_>>>()?;
    let total: C64 = (0u32..1 << n)
        .into_par_iter()
        .map(|mask| {
            // a delta of strength s at grid point k is the sample s / w_k
            let mut points: Vec<(usize, f64)> = Vec::with_capacity(n);
            let mut sign = 1.0;
            for (bit, &k) in idx.iter().enumerate() {
                let s = if mask >> bit & 1 == 1 { h } else { -h };
                if s < 0.0 {
                    sign = -sign;
                }
                match points.iter_mut().find(|(p, _)| *p == k) {
                    Some((_, x)) => *x += s,
                    None => points.push((k, s)),
                }
            }
            let z = (I * 0.5 * quadratic_form(grid, &points, omega)).exp();
            z * sign
        })
        .collect::<Vec<C64>>()
        .into_iter()
        .sum();
    Ok(total / (2.0 * h).powi(n as i32) * (-I).powi(n as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraDescriptor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Independent oracle: `(1/2pi) int dE e^{-iEt} / (w^2 - E^2 - i eps)` by
    /// Simpson quadrature, with `1/(E^2 + 1)` subtracted to tame the tails.
    fn feynman_quadrature(t: f64, omega: f64, eps: f64) -> C64 {
        let reg = C64::new(omega * omega, -eps);
        let f = |e: f64| {
            let g = C64::new(1.0, 0.0) / (reg - e * e) + 1.0 / (e * e + 1.0);
            g * C64::from_polar(1.0, -e * t)
        };
        let (l, m) = (400.0, 800_000usize);
        let h = 2.0 * l / m as f64;
        let mut acc = f(-l) + f(l);
        for k in 1..m {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += f(-l + k as f64 * h) * w;
        }
        let integral = acc * (h / 3.0) - PI * (-t.abs()).exp();
        integral / (2.0 * PI)
    }

    /// Residue evaluation with finite regulator: `i e^{-i W |t|} / (2 W)`,
    /// `W = sqrt(w^2 - i eps)`.
    fn feynman_residue(t: f64, omega: f64, eps: f64) -> C64 {
        let w = C64::new(omega * omega, -eps).sqrt();
        I * (-I * w * t.abs()).exp() / (w * 2.0)
    }

    #[test]
    fn feynman_kernel_from_energy_integral() {
        for &(t, omega) in &[(0.0, 1.0), (0.7, 1.0), (-1.3, 2.0), (2.5, 0.5)] {
            let eps = 0.05;
            let quad = feynman_quadrature(t, omega, eps);
            let res = feynman_residue(t, omega, eps);
            assert!((quad - res).norm() < 1e-6, "t={t} w={omega}: {quad} vs {res}");
            let limit = feynman_residue(t, omega, 1e-6);
            assert!((limit - feynman_kernel(t, omega).unwrap()).norm() < 1e-5);
        }
    }

    #[test]
    fn two_point_examples() {
        assert!((two_point(0.3, 0.3, 1.0).unwrap() - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((two_point(PI, 0.0, 1.0).unwrap() - C64::new(-0.5, 0.0)).norm() < 1e-15);
        assert_eq!(two_point(1.0, 2.5, 0.7).unwrap(), two_point(2.5, 1.0, 0.7).unwrap());
        assert!(matches!(two_point(0.0, 0.0, 0.0), Err(Error::NonPositiveFrequency(_))));
        assert!(two_point(0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn fock_oracle_matches_two_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (a, b) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let omega = rng.random_range(0.3..3.0);
            let fock = fock_oracle_green(&[a, b], omega, default_cutoff(2)).unwrap();
            assert!((fock - two_point(a, b, omega).unwrap()).norm() <= 1e-12);
        }
        assert_eq!(fock_oracle_green(&[], 1.0, 2).unwrap(), C64::new(1.0, 0.0));
        assert!(matches!(fock_oracle_green(&[0.0; 4], 1.0, 5), Err(Error::CutoffTooSmall { .. })));
    }

    #[test]
    fn matching_counts() {
        for n in [0usize, 2, 4, 6, 8, 10, 12] {
            assert_eq!(perfect_matchings(n).unwrap().len(), double_factorial_odd(n).max(1));
        }
        assert_eq!(perfect_matchings(12).unwrap().len(), 10395);
        assert!(perfect_matchings(3).unwrap().is_empty());
        assert!(matches!(perfect_matchings(14), Err(Error::OrderTooLarge { .. })));
    }

    #[test]
    fn wick_examples_and_parity() {
        let g = wick_green(&[0.4, -1.1], 1.3).unwrap();
        assert_eq!(g, two_point(0.4, -1.1, 1.3).unwrap());
        assert!((wick_green(&[0.0; 4], 1.0).unwrap() - C64::new(0.75, 0.0)).norm() < 1e-15);
        assert_eq!(wick_green(&[0.1, 0.2, 0.3], 1.0).unwrap(), C64::new(0.0, 0.0));
        let f = fock_oracle_green(&[0.1, 0.2, 0.3], 1.0, 9).unwrap();
        assert!(f.norm() <= 1e-12);
    }

    #[test]
    fn wick_matches_fock_and_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [2usize, 4, 6] {
            for &omega in &[0.5, 1.0, 2.0] {
                for _ in 0..10 {
                    let mut times: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
                    let w = wick_green(&times, omega).unwrap();
                    let f = fock_oracle_green(&times, omega, default_cutoff(n)).unwrap();
                    assert!((w - f).norm() <= 1e-8, "n={n} w={omega}");
                    times.reverse();
                    assert!((wick_green(&times, omega).unwrap() - w).norm() <= 1e-12);
                    assert!((fock_oracle_green(&times, omega, default_cutoff(n)).unwrap() - f).norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn truncation_invariants() {
        let fock = FockTruncation::new(6, 1.7).unwrap();
        let comm = fock.lowering() * fock.raising() - fock.raising() * fock.lowering();
        for k in 0..5 {
            assert!((comm[(k, k)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let h = fock.hamiltonian();
        let expect = (fock.raising() * fock.lowering() + CMatrix::identity(6, 6) * C64::new(0.5, 0.0)) * C64::new(1.7, 0.0);
        assert!((h - expect).norm() < 1e-12);
        let qp = fock.position() * fock.momentum() - fock.momentum() * fock.position();
        for k in 0..5 {
            assert!((qp[(k, k)] - I).norm() < 1e-12);
        }
    }

    #[test]
    fn ground_projector_deviation() {
        for r in [0.0, 1.0, 2.0, 10.0] {
            let (_, dev) = ground_projector_limit(r, 8).unwrap();
            assert_eq!(dev, (-r).exp());
        }
        let r10 = ground_projector_limit(10.0, 8).unwrap().1;
        assert!((r10 - 4.54e-5).abs() < 1e-7);
        let res: Vec<f64> = [2.0, 4.0, 8.0]
            .iter()
            .map(|&r| ground_sandwich_residual(r, 1.0, 10).unwrap())
            .collect();
        assert!(res[0] > res[1] && res[1] > res[2] && res[2] < 1e-6);
        assert!(ground_projector_limit(-1.0, 4).is_err());
    }

    #[test]
    fn auxiliary_bounds() {
        let alg = AlgebraDescriptor::full(10);
        let tr = StateFunctional::tracial(alg.clone());
        let b = auxiliary_limit_check(1, 0, 5.0, 5.0, 10, &tr).unwrap();
        assert!(b.holds());
        assert!(auxiliary_limit_check(0, 0, 1.0, 1.0, 10, &tr).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = crate::random::random_density(&alg, &mut rng);
        let psi = StateFunctional::from_density(alg, rho).unwrap();
        let mags: Vec<AuxiliaryBound> = [2.0, 4.0]
            .iter()
            .map(|&r| auxiliary_limit_check(1, 0, r, 0.0, 10, &psi).unwrap())
            .collect();
        for m in &mags {
            assert!(m.holds());
        }
        // doubling r1 squares the exponential factor
        let f2 = mags[0].bound / mags[0].constant;
        let f4 = mags[1].bound / mags[1].constant;
        assert!((f4 - f2 * f2).abs() < 1e-15);
    }

    #[test]
    fn generating_functional_basics() {
        let grid = TimeGrid::new(-2.0, 2.0, 401).unwrap();
        let zero = SourceFunction::new(grid, vec![0.0; 401]).unwrap();
        assert_eq!(generating_functional(&zero, 1.0).unwrap(), C64::new(1.0, 0.0));

        let bump = SourceFunction::from_fn(grid, |t| (-(t * t)).exp());
        let scaled = SourceFunction::from_fn(grid, |t| 3.0 * (-(t * t)).exp());
        let l1 = log_generating_functional(&bump, 1.0).unwrap();
        let l3 = log_generating_functional(&scaled, 1.0).unwrap();
        assert!((generating_functional(&bump, 1.0).unwrap() - l1.exp()).norm() < 1e-15);
        assert!((l3 - l1 * 9.0).norm() < 1e-10);

        let coarse = TimeGrid::new(0.0, 10.0, 11).unwrap();
        let j = SourceFunction::new(coarse, vec![1.0; 11]).unwrap();
        assert!(matches!(generating_functional(&j, 1.0), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn twin_bump_cross_term_approaches_kernel() {
        let (t1, t2, omega) = (-0.5, 0.7, 1.0);
        let grid = TimeGrid::new(-3.0, 3.0, 6001).unwrap();
        let bump = |c: f64, s: f64| move |t: f64| (-(t - c) * (t - c) / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt());
        let mut errs = Vec::new();
        for s in [0.1, 0.05, 0.025] {
            let j1 = SourceFunction::from_fn(grid, bump(t1, s));
            let j2 = SourceFunction::from_fn(grid, bump(t2, s));
            let both = SourceFunction::new(grid, j1.samples.iter().zip(&j2.samples).map(|(a, b)| a + b).collect()).unwrap();
            let lz = |j: &SourceFunction| log_generating_functional(j, omega).unwrap();
            let cross = lz(&both) - lz(&j1) - lz(&j2);
            errs.push((cross - I * feynman_kernel(t1 - t2, omega).unwrap()).norm());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2] && errs[2] < 1e-3, "{errs:?}");
    }

    #[test]
    fn functional_derivative_route() {
        let grid = TimeGrid::new(-4.0, 4.0, 801).unwrap();
        let g = functional_derivative_green(&grid, &[0.0, 0.0], 1.0, 1e-3).unwrap();
        assert!((g - C64::new(0.5, 0.0)).norm() < 1e-3);
        let odd = functional_derivative_green(&grid, &[0.3], 1.0, 1e-3).unwrap();
        assert!(odd.norm() < 1e-9);

        let times = [-1.0, 0.5];
        let exact = wick_green(&times, 1.0).unwrap();
        let e1 = (functional_derivative_green(&grid, &times, 1.0, 0.2).unwrap() - exact).norm();
        let e2 = (functional_derivative_green(&grid, &times, 1.0, 0.1).unwrap() - exact).norm();
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");

        let four = [0.0, 0.3, -0.4, 1.0];
        let d4 = functional_derivative_green(&grid, &four, 1.0, 0.05).unwrap();
        assert!((d4 - wick_green(&four, 1.0).unwrap()).norm() < 1e-2);
        assert!(matches!(functional_derivative_green(&grid, &[0.005], 1.0, 1e-3), Err(Error::OffGrid(_))));
    }

    #[test]
    fn source_csv() {
        let s = SourceFunction::from_csv("t,j\n0,1\n0.05,2\n0.1,3\n".as_bytes()).unwrap();
        assert_eq!(s.grid.steps, 3);
        assert_eq!(s.samples, vec![1.0, 2.0, 3.0]);
        assert!(SourceFunction::from_csv("0,1\n0.05,2\n0.2,3\n".as_bytes()).is_err());
        assert!(SourceFunction::from_csv("0,1\n".as_bytes()).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
    }
}
