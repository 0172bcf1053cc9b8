//! One-period evolution operator and its eigen-decomposition.
//!
//! Eigenvalues are written `exp(-i theta_j)` with `theta_j` in `[0, 2 pi)`; the
//! corresponding frequency is `f_j = theta_j / (2 pi) * mod_freq_hz`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{Lattice, ModelSpec};
use crate::propagator::{coherent_state, Propagator, StateVector};
use crate::spectral::fold_frequency;

/// Eigenvalue gaps below this are treated as exact degeneracies.
pub const DEGENERACY_GAP: f64 = 1e-10;
const UNITARITY_LIMIT: f64 = 1e-6;
const PARITY_THRESHOLD: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::None => "none",
        }
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            "none" => Ok(Parity::None),
            other => Err(Error::Parse(format!("unknown parity label `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FloquetModes {
    pub lattice: Lattice,
    /// `vectors[j]` is `|chi_j(0)>` in the momentum basis.
    pub vectors: Vec<Vec<Complex64>>,
    /// Eigenvalues as returned by the Schur form, before any normalization.
    pub eigenvalues: Vec<Complex64>,
    pub phases_per_period: Vec<f64>,
    pub freqs_hz: Vec<f64>,
    pub parities: Vec<Parity>,
    pub mod_freq_hz: f64,
}

impl FloquetModes {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Largest `| |lambda_j| - 1 |`.
    pub fn eigenvalue_modulus_deviation(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| (l.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|V^H V - I|`.
    pub fn orthonormality_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, va) in self.vectors.iter().enumerate() {
            for (b, vb) in self.vectors.iter().enumerate().skip(a) {
                let g: Complex64 = va.iter().zip(vb).map(|(x, y)| x.conj() * y).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }

    /// Smallest circular distance from `theta_j` to any other eigenphase.
    pub fn phase_gap(&self, j: usize) -> f64 {
        let theta = self.phases_per_period[j];
        self.phases_per_period
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, &t)| {
                let d = (t - theta).rem_euclid(TAU);
                d.min(TAU - d)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Number of modes with more than half their weight on `|n| <= window`.
    pub fn support_count(&self, window: i64) -> usize {
        self.vectors
            .iter()
            .filter(|v| {
                let inside: f64 = v
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| self.lattice.momentum(*k).abs() <= window)
                    .map(|(_, c)| c.norm_sqr())
                    .sum();
                inside > 0.5
            })
            .count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyLine {
    pub i: usize,
    pub j: usize,
    pub delta_f_hz: f64,
    pub weight: f64,
}

/// Initial coherent state `(phi0, n0, sigma)` used by sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentSpec {
    pub phi0: f64,
    pub n0: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepEntry {
    pub drive: f64,
    pub lines: Vec<FrequencyLine>,
}

/// Largest entry of `|U^H U - I|`.
pub fn unitarity_deviation(u: &DMatrix<Complex64>) -> f64 {
    let g = u.adjoint() * u;
    let mut worst: f64 = 0.0;
    for ((r, c), z) in g.iter().enumerate().map(|(k, z)| ((k % g.nrows(), k / g.nrows()), z)) {
        let target = if r == c { 1.0 } else { 0.0 };
        worst = worst.max((z - target).norm());
    }
    worst
}

pub fn floquet_matrix(model: &ModelSpec, lattice: Lattice) -> Result<DMatrix<Complex64>> {
    floquet_matrix_with(&Propagator::default(), model, lattice)
}

/// Column `k` is the one-period evolution of `|n = k - n_max>`.
pub fn floquet_matrix_with(propagator: &Propagator, model: &ModelSpec, lattice: Lattice) -> Result<DMatrix<Complex64>> {
    model.validate()?;
    let size = lattice.size();
    let period = model.period();
    let columns = (0..size)
        .into_par_iter()
        .map(|k| {
            let mut col = vec![Complex64::new(0.0, 0.0); size];
            col[k] = Complex64::new(1.0, 0.0);
            propagator.integrate(model, &mut col, 0.0, period)?;
            Ok(col)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(size, size, |r, c| columns[c][r]))
}

fn parity_overlap(v: &[Complex64]) -> Complex64 {
    v.iter().zip(v.iter().rev()).map(|(a, b)| a.conj() * b).sum()
}

/// Classifies a normalized vector under `n -> -n`.
pub fn parity_classify(mode_column: &[Complex64]) -> Parity {
    // s = sum_n conj(c_n) c_{-n} is invariant under a global phase
    let s = parity_overlap(mode_column);
    if s.norm() <= PARITY_THRESHOLD {
        Parity::None
    } else if s.re > 0.0 {
        Parity::Even
    } else {
        Parity::Odd
    }
}

fn orthonormalize(vectors: &mut [Vec<Complex64>]) {
    for a in 0..vectors.len() {
        for b in 0..a {
            let (done, rest) = vectors.split_at_mut(a);
            let proj: Complex64 = done[b].iter().zip(&rest[0]).map(|(x, y)| x.conj() * y).sum();
            for (y, x) in rest[0].iter_mut().zip(&done[b]) {
                *y -= proj * x;
            }
        }
        let norm = vectors[a].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        vectors[a].iter_mut().for_each(|c| *c /= norm);
    }
}

// Rotates an orthonormal set spanning a degenerate eigenspace onto eigenvectors
// of the momentum-reflection operator restricted to that span.
fn parity_adapt(vectors: &mut [Vec<Complex64>]) {
    let m = vectors.len();
    let reflect = |v: &[Complex64]| v.iter().rev().copied().collect::<Vec<_>>();
    let reflected: Vec<Vec<Complex64>> = vectors.iter().map(|v| reflect(v)).collect();
    let restricted = DMatrix::from_fn(m, m, |a, b| {
        vectors[a]
            .iter()
            .zip(&reflected[b])
            .map(|(x, y)| x.conj() * y)
            .sum::<Complex64>()
    });
    let hermitian = (&restricted + restricted.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(hermitian);
    let size = vectors[0].len();
    let rotated: Vec<Vec<Complex64>> = (0..m)
        .map(|i| {
            (0..size)
                .map(|k| (0..m).map(|a| vectors[a][k] * eig.eigenvectors[(a, i)]).sum())
                .collect()
        })
        .collect();
    for (dst, src) in vectors.iter_mut().zip(rotated) {
        *dst = src;
    }
}

fn clusters(phases: &[f64]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (j, &theta) in phases.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if theta - phases[*g.last().unwrap()] < DEGENERACY_GAP => g.push(j),
            _ => groups.push(vec![j]),
        }
    }
    // the branch cut at 0 / 2 pi
    if groups.len() > 1 {
        let first = phases[groups[0][0]];
        let last = phases[*groups.last().unwrap().last().unwrap()];
        if first + TAU - last < DEGENERACY_GAP {
            let head = groups.remove(0);
            groups.last_mut().unwrap().extend(head);
        }
    }
    groups
}

pub fn eigendecompose(u: &DMatrix<Complex64>, mod_freq_hz: f64) -> Result<FloquetModes> {
    if !u.is_square() {
        return Err(Error::DimensionMismatch {
            expected: u.nrows(),
            got: u.ncols(),
        });
    }
    if u.nrows().is_multiple_of(2) {
        return Err(invalid("U", "dimension must be odd (symmetric momentum lattice)"));
    }
    if !(mod_freq_hz > 0.0) {
        return Err(invalid("mod_freq_hz", "must be > 0"));
    }
    let deviation = unitarity_deviation(u);
    if !(deviation <= UNITARITY_LIMIT) {
        return Err(Error::NotUnitary { deviation });
    }
    let size = u.nrows();
    let lattice = Lattice::new((size - 1) / 2);

    let schur = Schur::try_new(u.clone(), f64::EPSILON, 10_000).ok_or(Error::NumericFailure {
        t: 0.0,
        reason: "Schur iteration did not converge",
        achieved: deviation,
    })?;
    let (q, t) = schur.unpack();

    let mut order: Vec<(f64, usize)> = (0..size)
        .map(|j| {
            let theta = (-t[(j, j)].arg()).rem_euclid(TAU);
            (if theta >= TAU { 0.0 } else { theta }, j)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));

    let phases: Vec<f64> = order.iter().map(|&(theta, _)| theta).collect();
    let eigenvalues: Vec<Complex64> = order.iter().map(|&(_, j)| t[(j, j)]).collect();
    let mut vectors: Vec<Vec<Complex64>> = order
        .iter()
        .map(|&(_, j)| q.column(j).iter().copied().collect())
        .collect();

    for group in clusters(&phases).into_iter().filter(|g| g.len() > 1) {
        let mut block: Vec<Vec<Complex64>> = group.iter().map(|&j| vectors[j].clone()).collect();
        orthonormalize(&mut block);
        parity_adapt(&mut block);
        for (&j, v) in group.iter().zip(block) {
            vectors[j] = v;
        }
    }

    let freqs_hz = phases.iter().map(|theta| theta / TAU * mod_freq_hz).collect();
    let parities = vectors.iter().map(|v| parity_classify(v)).collect();
    Ok(FloquetModes {
        lattice,
        vectors,
        eigenvalues,
        phases_per_period: phases,
        freqs_hz,
        parities,
        mod_freq_hz,
    })
}

/// `P_j = |<chi_j|state>|^2`.
pub fn overlap_probabilities(modes: &FloquetModes, state: &StateVector) -> Result<Vec<f64>> {
    let amps = state.amplitudes();
    if amps.len() != modes.lattice.size() {
        return Err(Error::DimensionMismatch {
            expected: modes.lattice.size(),
            got: amps.len(),
        });
    }
    Ok(modes
        .vectors
        .iter()
        .map(|v| {
            v.iter()
                .zip(amps)
                .map(|(x, y)| x.conj() * y)
                .sum::<Complex64>()
                .norm_sqr()
        })
        .collect())
}

/// All unordered mode pairs with `P_i P_j >= threshold`, heaviest first.
pub fn dominant_frequencies(modes: &FloquetModes, state: &StateVector, threshold: f64) -> Result<Vec<FrequencyLine>> {
    if !(threshold > 0.0 && threshold <= 0.25) {
        return Err(invalid("threshold", format!("must lie in (0, 0.25], got {threshold}")));
    }
    let probs = overlap_probabilities(modes, state)?;
    // only modes with P >= threshold can pair above it (P_i P_j <= min(P) * 1)
    let candidates: Vec<usize> = (0..probs.len()).filter(|&j| probs[j] >= threshold).collect();
    let mut lines = Vec::new();
    for (a, &i) in candidates.iter().enumerate() {
        for &j in &candidates[a + 1..] {
            let weight = probs[i] * probs[j];
            if weight >= threshold {
                let delta = fold_frequency(modes.freqs_hz[j] - modes.freqs_hz[i], modes.mod_freq_hz);
                lines.push(FrequencyLine {
                    i,
                    j,
                    delta_f_hz: delta,
                    weight,
                });
            }
        }
    }
    lines.sort_by(|a, b| {
        b.weight
            .total_cmp(&a.weight)
            .then(a.delta_f_hz.total_cmp(&b.delta_f_hz))
    });
    Ok(lines)
}

/// Floquet analysis of one model: matrix, eigen-decomposition.
pub fn analyze(model: &ModelSpec, lattice: Lattice) -> Result<FloquetModes> {
    analyze_with(&Propagator::default(), model, lattice)
}

pub fn analyze_with(propagator: &Propagator, model: &ModelSpec, lattice: Lattice) -> Result<FloquetModes> {
    let u = floquet_matrix_with(propagator, model, lattice)?;
    eigendecompose(&u, model.mod_freq_hz())
}

/// Dominant lines for each drive strength (`alpha` or `kappa`) in `values`.
pub fn sweep_drive(
    template: &ModelSpec,
    lattice: Lattice,
    values: &[f64],
    state_spec: CoherentSpec,
    threshold: f64,
) -> Result<Vec<SweepEntry>> {
    sweep_drive_with(&Propagator::default(), template, lattice, values, state_spec, threshold)
}

pub fn sweep_drive_with(
    propagator: &Propagator,
    template: &ModelSpec,
    lattice: Lattice,
    values: &[f64],
    state_spec: CoherentSpec,
    threshold: f64,
) -> Result<Vec<SweepEntry>> {
    if values.is_empty() {
        return Err(invalid("values", "sweep needs at least one drive value"));
    }
    if !(threshold > 0.0 && threshold <= 0.25) {
        return Err(invalid("threshold", format!("must lie in (0, 0.25], got {threshold}")));
    }
    let state = coherent_state(state_spec.phi0, state_spec.n0, state_spec.sigma, lattice)?;
    let models = values
        .iter()
        .map(|&v| template.with_drive_strength(v))
        .collect::<Result<Vec<_>>>()?;
    models
        .par_iter()
        .zip(values.par_iter())
        .map(|(model, &drive)| {
            let modes = analyze_with(propagator, model, lattice)?;
            Ok(SweepEntry {
                drive,
                lines: dominant_frequencies(&modes, &state, threshold)?,
            })
        })
        .collect()
}

/// Probability `|<n|psi(t)>|^2` at `t = t_periods * T` from the Floquet expansion
/// of `initial`, evaluated as the double sum over mode pairs.
pub fn reconstruct_probability(modes: &FloquetModes, initial: &StateVector, n: i64, t_periods: u64) -> Result<f64> {
    let amps = initial.amplitudes();
    if amps.len() != modes.lattice.size() {
        return Err(Error::DimensionMismatch {
            expected: modes.lattice.size(),
            got: amps.len(),
        });
    }
    let k = modes
        .lattice
        .index_of(n)
        .ok_or_else(|| invalid("n", format!("{n} outside the lattice")))?;
    let proj: Vec<Complex64> = modes
        .vectors
        .iter()
        .map(|v| v.iter().zip(amps).map(|(x, y)| x.conj() * y).sum())
        .collect();
    let t = t_periods as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for (i, vi) in modes.vectors.iter().enumerate() {
        for (j, vj) in modes.vectors.iter().enumerate() {
            let phase = Complex64::cis(-(modes.phases_per_period[j] - modes.phases_per_period[i]) * t);
            total += phase * vj[k] * vi[k].conj() * proj[j] * proj[i].conj();
        }
    }
    Ok(total.re)
}
