//! Wavepackets on the momentum lattice and their Schrödinger evolution.
//!
//! Integration uses a fixed step of `period / steps_per_period` and classical
//! RK4 in the interaction picture of the free-rotor diagonal (Lawson's
//! integrating-factor RK4). Within a step starting at `t0` the amplitudes are
//! written as `c(t0 + s) = exp(-i n^2 s - i S(s)) b(s)`, where `S` integrates the
//! scalar diagonal shift. Only the hopping term is left for RK4, with bond
//! phases `exp(i (n^2 - m^2) s)` that stay bounded across the lattice. The
//! `n^2` rotation itself is applied exactly, so edge states with `|n| ~ n_max`
//! no longer limit the step size.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::model::{Lattice, ModelSpec};

pub const DEFAULT_STEPS_PER_PERIOD: usize = 4096;
const NORM_TOLERANCE: f64 = 1e-9;

/// Complex amplitudes `<n|psi>` on a lattice; entry `k` holds `n = k - n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    lattice: Lattice,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized to within 1e-9.
    pub fn from_amplitudes(lattice: Lattice, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != lattice.size() {
            return Err(Error::DimensionMismatch {
                expected: lattice.size(),
                got: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if !((norm - 1.0).abs() <= NORM_TOLERANCE) {
            return Err(invalid("amplitudes", format!("norm {norm} deviates from 1")));
        }
        Ok(Self { lattice, amplitudes })
    }

    /// Scales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(lattice: Lattice, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != lattice.size() {
            return Err(Error::DimensionMismatch {
                expected: lattice.size(),
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(invalid("amplitudes", "cannot normalize a zero or non-finite vector"));
        }
        amplitudes.iter_mut().for_each(|c| *c /= norm);
        Ok(Self { lattice, amplitudes })
    }

    /// Momentum eigenstate `|n>`.
    pub fn basis(lattice: Lattice, n: i64) -> Result<Self> {
        let k = lattice
            .index_of(n)
            .ok_or_else(|| invalid("n", format!("{n} outside lattice of n_max {}", lattice.n_max)))?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); lattice.size()];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Ok(Self { lattice, amplitudes })
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, n: i64) -> Option<Complex64> {
        self.lattice.index_of(n).map(|k| self.amplitudes[k])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amplitudes.len(),
                got: other.amplitudes.len(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Unnormalized Gaussian coherent-state amplitudes on the lattice.
pub(crate) fn coherent_amplitudes(phi0: f64, n0: f64, sigma: f64, lattice: Lattice) -> Vec<Complex64> {
    let prefactor = (sigma * sigma / std::f64::consts::PI).powf(0.25);
    lattice
        .momenta()
        .map(|n| {
            let dn = n as f64 - n0;
            let envelope = prefactor * (-0.5 * sigma * sigma * dn * dn).exp();
            Complex64::from_polar(envelope, -dn * phi0)
        })
        .collect()
}

/// Coherent state centred at `(phi0, n0)` with momentum width `1/sigma`,
/// renormalized on the truncated lattice.
pub fn coherent_state(phi0: f64, n0: f64, sigma: f64, lattice: Lattice) -> Result<StateVector> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid("sigma", format!("must be finite and > 0, got {sigma}")));
    }
    if !phi0.is_finite() || !n0.is_finite() {
        return Err(invalid("phi0/n0", "must be finite"));
    }
    StateVector::normalized(lattice, coherent_amplitudes(phi0, n0, sigma, lattice))
}

pub fn mean_momentum(state: &StateVector) -> f64 {
    state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(k, c)| state.lattice.momentum(k) as f64 * c.norm_sqr())
        .sum()
}

pub fn momentum_distribution(state: &StateVector) -> Vec<f64> {
    state.amplitudes.iter().map(|c| c.norm_sqr()).collect()
}

/// Uniformly sampled `<n>(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub dt_seconds: f64,
    pub t0_seconds: f64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(dt_seconds: f64, t0_seconds: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt_seconds > 0.0) || !dt_seconds.is_finite() {
            return Err(invalid("dt_seconds", "must be finite and > 0"));
        }
        if values.is_empty() {
            return Err(invalid("values", "time series must not be empty"));
        }
        Ok(Self {
            dt_seconds,
            t0_seconds,
            values,
        })
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| self.t0_seconds + k as f64 * self.dt_seconds)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        1.0 / self.dt_seconds
    }
}

/// One fixed-size integrating-factor RK4 step on a given lattice.
struct Stepper {
    h: f64,
    // bond phase exp(i (n_k^2 - n_{k-1}^2) s) for s = h/2 and s = h, index k >= 1
    bond_half: Vec<Complex64>,
    bond_full: Vec<Complex64>,
    // exp(-i n^2 h)
    free: Vec<Complex64>,
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Stepper {
    fn new(lattice: Lattice, h: f64) -> Self {
        let size = lattice.size();
        let gap = |k: usize| {
            let n = lattice.momentum(k) as f64;
            let m = n - 1.0;
            n * n - m * m
        };
        let bond = |s: f64| {
            (0..size)
                .map(|k| {
                    if k == 0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::cis(gap(k) * s)
                    }
                })
                .collect::<Vec<_>>()
        };
        let free = lattice
            .momenta()
            .map(|n| Complex64::cis(-((n * n) as f64) * h))
            .collect();
        let zeros = vec![Complex64::new(0.0, 0.0); size];
        Self {
            h,
            bond_half: bond(0.5 * h),
            bond_full: bond(h),
            free,
            k1: zeros.clone(),
            k2: zeros.clone(),
            k3: zeros.clone(),
            k4: zeros.clone(),
            tmp: zeros,
        }
    }

    // out = -i v (P b shifted), where P are the bond phases (None: all ones)
    fn rhs(out: &mut [Complex64], b: &[Complex64], v: f64, bond: Option<&[Complex64]>) {
        let size = b.len();
        let mi_v = Complex64::new(0.0, -v);
        for k in 0..size {
            let mut acc = Complex64::new(0.0, 0.0);
            match bond {
                None => {
                    if k > 0 {
                        acc += b[k - 1];
                    }
                    if k + 1 < size {
                        acc += b[k + 1];
                    }
                }
                Some(p) => {
                    if k > 0 {
                        acc += p[k] * b[k - 1];
                    }
                    if k + 1 < size {
                        acc += p[k + 1].conj() * b[k + 1];
                    }
                }
            }
            out[k] = mi_v * acc;
        }
    }

    fn step(&mut self, model: &ModelSpec, t0: f64, c: &mut [Complex64]) {
        let h = self.h;
        let (v0, vh, v1) = (model.coupling(t0), model.coupling(t0 + 0.5 * h), model.coupling(t0 + h));

        Self::rhs(&mut self.k1, c, v0, None);
        for ((t, y), k) in self.tmp.iter_mut().zip(c.iter()).zip(&self.k1) {
            *t = y + k * (0.5 * h);
        }
        Self::rhs(&mut self.k2, &self.tmp, vh, Some(&self.bond_half));
        for ((t, y), k) in self.tmp.iter_mut().zip(c.iter()).zip(&self.k2) {
            *t = y + k * (0.5 * h);
        }
        Self::rhs(&mut self.k3, &self.tmp, vh, Some(&self.bond_half));
        for ((t, y), k) in self.tmp.iter_mut().zip(c.iter()).zip(&self.k3) {
            *t = y + k * h;
        }
        Self::rhs(&mut self.k4, &self.tmp, v1, Some(&self.bond_full));

        let global = Complex64::cis(-model.diagonal_shift_integral(t0, t0 + h));
        for (j, y) in c.iter_mut().enumerate() {
            let b = *y + (self.k1[j] + 2.0 * self.k2[j] + 2.0 * self.k3[j] + self.k4[j]) * (h / 6.0);
            *y = self.free[j] * global * b;
        }
    }
}

/// Fixed-step Schrödinger integrator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Propagator {
    pub steps_per_period: usize,
}

impl Default for Propagator {
    fn default() -> Self {
        Self {
            steps_per_period: DEFAULT_STEPS_PER_PERIOD,
        }
    }
}

impl Propagator {
    pub fn new(steps_per_period: usize) -> Result<Self> {
        if steps_per_period == 0 {
            return Err(invalid("steps_per_period", "must be >= 1"));
        }
        Ok(Self { steps_per_period })
    }

    fn step_count(&self, model: &ModelSpec, span: f64) -> usize {
        let nominal = model.period() / self.steps_per_period as f64;
        // exact multiples of the nominal step must not round up
        ((span.abs() / nominal) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }

    /// Integrates `amps` in place from `t_start` to `t_end` (either direction).
    pub fn integrate(&self, model: &ModelSpec, amps: &mut [Complex64], t_start: f64, t_end: f64) -> Result<()> {
        if !t_start.is_finite() || !t_end.is_finite() {
            return Err(invalid("t_start/t_end", "must be finite"));
        }
        if t_end == t_start {
            return Ok(());
        }
        let steps = self.step_count(model, t_end - t_start);
        let h = (t_end - t_start) / steps as f64;
        let lattice = Lattice::new((amps.len() - 1) / 2);
        let mut stepper = Stepper::new(lattice, h);
        self.run(model, &mut stepper, amps, t_start, steps)
    }

    fn run(
        &self,
        model: &ModelSpec,
        stepper: &mut Stepper,
        amps: &mut [Complex64],
        t_start: f64,
        steps: usize,
    ) -> Result<()> {
        let h = stepper.h;
        let scale = t_start.abs().max((t_start + steps as f64 * h).abs());
        if scale + h.abs() == scale {
            return Err(Error::NumericFailure {
                t: t_start,
                reason: "step size underflow",
                achieved: f64::NAN,
            });
        }
        for j in 0..steps {
            stepper.step(model, t_start + j as f64 * h, amps);
        }
        let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        if !norm.is_finite() {
            return Err(Error::NumericFailure {
                t: t_start + steps as f64 * h,
                reason: "non-finite amplitudes",
                achieved: norm,
            });
        }
        Ok(())
    }

    pub fn evolve(&self, state: &StateVector, model: &ModelSpec, t_start: f64, t_end: f64) -> Result<StateVector> {
        let mut amps = state.amplitudes.clone();
        self.integrate(model, &mut amps, t_start, t_end)?;
        Ok(StateVector {
            lattice: state.lattice,
            amplitudes: amps,
        })
    }

    /// Samples `<n>` at `t' = k T / samples_per_period` for
    /// `k = 0 .. n_periods * samples_per_period`, starting from `t' = 0`.
    pub fn evolve_series(
        &self,
        state: &StateVector,
        model: &ModelSpec,
        n_periods: usize,
        samples_per_period: usize,
    ) -> Result<TimeSeries> {
        if n_periods == 0 {
            return Err(invalid("n_periods", "must be >= 1"));
        }
        if samples_per_period == 0 {
            return Err(invalid("samples_per_period", "must be >= 1"));
        }
        let interval = model.period() / samples_per_period as f64;
        let steps = self.step_count(model, interval);
        let mut stepper = Stepper::new(state.lattice, interval / steps as f64);
        let mut amps = state.amplitudes.clone();
        let total = n_periods * samples_per_period;
        let mut values = Vec::with_capacity(total);
        for k in 0..total {
            values.push(mean_momentum(&StateVector {
                lattice: state.lattice,
                amplitudes: amps.clone(),
            }));
            if k + 1 < total {
                self.run(model, &mut stepper, &mut amps, k as f64 * interval, steps)?;
            }
        }
        let dt = 1.0 / (model.mod_freq_hz() * samples_per_period as f64);
        TimeSeries::new(dt, 0.0, values)
    }
}

pub fn evolve(state: &StateVector, model: &ModelSpec, t_start: f64, t_end: f64) -> Result<StateVector> {
    Propagator::default().evolve(state, model, t_start, t_end)
}

pub fn evolve_series(
    state: &StateVector,
    model: &ModelSpec,
    n_periods: usize,
    samples_per_period: usize,
) -> Result<TimeSeries> {
    Propagator::default().evolve_series(state, model, n_periods, samples_per_period)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DriveSign, NistParams, TexasParams};
    use approx::assert_relative_eq;

    fn texas(alpha: f64) -> ModelSpec {
        ModelSpec::Texas(TexasParams::new(alpha, 6.0, 50e3).unwrap())
    }

    #[test]
    fn coherent_state_symmetric_at_origin() {
        let lat = Lattice::new(40);
        let s = coherent_state(0.0, 0.0, 1.2, lat).unwrap();
        for n in 1..=40 {
            let (a, b) = (s.amplitude(n).unwrap(), s.amplitude(-n).unwrap());
            assert_eq!(a, b);
            assert_eq!(a.im, 0.0);
            assert!(a.re >= 0.0);
        }
        assert!(mean_momentum(&s).abs() < 1e-12);
    }

    #[test]
    fn coherent_state_peak() {
        let s = coherent_state(0.0, 4.2, 1.2, Lattice::new(40)).unwrap();
        let dist = momentum_distribution(&s);
        let peak = dist.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(Lattice::new(40).momentum(peak), 4);
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_state_raw_norm() {
        // direct summation of (sigma^2/pi)^{1/2} exp(-sigma^2 n^2) over the lattice
        let sigma: f64 = 1.2;
        let direct: f64 = (-40..=40)
            .map(|n: i32| (sigma * sigma / std::f64::consts::PI).sqrt() * (-(sigma * sigma) * (n * n) as f64).exp())
            .sum();
        // Poisson summation: sum_n sqrt(s^2/pi) e^{-s^2 n^2} = sum_k e^{-pi^2 k^2 / s^2}
        let theta: f64 = (-3..=3)
            .map(|k: i32| (-(std::f64::consts::PI.powi(2)) * (k * k) as f64 / (sigma * sigma)).exp())
            .sum();
        assert_relative_eq!(direct, theta, max_relative = 1e-13);
        assert!((direct - 1.0).abs() < 3e-3);
        let raw: f64 = coherent_amplitudes(0.0, 0.0, sigma, Lattice::new(40))
            .iter()
            .map(|c| c.norm_sqr())
            .sum();
        assert_relative_eq!(raw, direct, max_relative = 1e-14);
    }

    #[test]
    fn coherent_state_rejects_bad_sigma() {
        assert!(coherent_state(0.0, 0.0, 0.0, Lattice::new(4)).is_err());
        assert!(coherent_state(0.0, 0.0, -1.0, Lattice::new(4)).is_err());
    }

    #[test]
    fn narrow_coherent_state_concentrates() {
        let s = coherent_state(0.3, 2.3, 20.0, Lattice::new(10)).unwrap();
        assert!(momentum_distribution(&s)[Lattice::new(10).index_of(2).unwrap()] > 1.0 - 1e-12);
    }

    #[test]
    fn mean_momentum_of_coherent_state_matches_direct_sum() {
        let lat = Lattice::new(40);
        let raw = coherent_amplitudes(0.0, 4.2, 1.2, lat);
        let norm: f64 = raw.iter().map(|c| c.norm_sqr()).sum();
        let direct: f64 = lat
            .momenta()
            .zip(&raw)
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum::<f64>()
            / norm;
        let s = coherent_state(0.0, 4.2, 1.2, lat).unwrap();
        assert_relative_eq!(mean_momentum(&s), direct, max_relative = 1e-13);
        assert!((direct - 4.2).abs() < 0.05);
    }

    #[test]
    fn basis_state_moments() {
        let s = StateVector::basis(Lattice::new(5), 3).unwrap();
        assert_eq!(mean_momentum(&s), 3.0);
        let z = StateVector::basis(Lattice::new(5), 0).unwrap();
        assert_eq!(momentum_distribution(&z)[5], 1.0);
        assert!(StateVector::basis(Lattice::new(5), 6).is_err());
    }

    #[test]
    fn from_amplitudes_checks() {
        let lat = Lattice::new(1);
        assert!(StateVector::from_amplitudes(lat, vec![Complex64::new(1.0, 0.0); 2]).is_err());
        assert!(StateVector::from_amplitudes(lat, vec![Complex64::new(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn free_evolution_phase() {
        let s = StateVector::basis(Lattice::new(8), 3).unwrap();
        let dt = 0.77;
        let out = evolve(&s, &texas(0.0), 0.1, 0.1 + dt).unwrap();
        let c = out.amplitude(3).unwrap();
        assert!((c - Complex64::cis(-9.0 * dt)).norm() < 1e-13);
        assert!((c.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_interval_is_identity() {
        let s = coherent_state(0.4, 1.0, 1.2, Lattice::new(10)).unwrap();
        assert_eq!(evolve(&s, &texas(9.7), 2.0, 2.0).unwrap(), s);
    }

    #[test]
    fn norm_is_preserved() {
        let s = coherent_state(0.0, 4.2, 1.2, Lattice::new(40)).unwrap();
        let m = texas(9.7);
        let out = evolve(&s, &m, 0.0, 3.0 * m.period()).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn step_halving_one_period() {
        let m = texas(9.7);
        let s = StateVector::basis(Lattice::new(40), 0).unwrap();
        let coarse = Propagator::default().evolve(&s, &m, 0.0, m.period()).unwrap();
        let fine = Propagator::new(2 * DEFAULT_STEPS_PER_PERIOD)
            .unwrap()
            .evolve(&s, &m, 0.0, m.period())
            .unwrap();
        for (a, b) in coarse.amplitudes().iter().zip(fine.amplitudes()) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn constant_series_at_zero_field() {
        let s = StateVector::basis(Lattice::new(8), 3).unwrap();
        let ts = evolve_series(&s, &texas(0.0), 3, 4).unwrap();
        assert_eq!(ts.values.len(), 12);
        assert!(ts.values.iter().all(|v| (v - 3.0).abs() < 1e-10));
        assert_relative_eq!(ts.dt_seconds, 1.0 / (50e3 * 4.0));
    }

    #[test]
    fn series_matches_direct_evolution() {
        let m = ModelSpec::Nist(NistParams::new(1.66, 0.29, 2.5, DriveSign::Minus, 250e3).unwrap());
        let s = coherent_state(0.0, 1.6, 1.2, Lattice::new(32)).unwrap();
        let ts = evolve_series(&s, &m, 2, 4).unwrap();
        let direct = evolve(&s, &m, 0.0, 5.0 * m.period() / 4.0).unwrap();
        assert!((ts.values[5] - mean_momentum(&direct)).abs() < 1e-12);
    }

    #[test]
    fn series_rejects_zero_lengths() {
        let s = StateVector::basis(Lattice::new(2), 0).unwrap();
        assert!(evolve_series(&s, &texas(1.0), 0, 4).is_err());
        assert!(evolve_series(&s, &texas(1.0), 4, 0).is_err());
    }

    #[test]
    fn time_series_validation() {
        assert!(TimeSeries::new(0.0, 0.0, vec![1.0]).is_err());
        assert!(TimeSeries::new(1.0, 0.0, vec![]).is_err());
    }
}
