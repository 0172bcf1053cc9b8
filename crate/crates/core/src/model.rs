//! The two periodically driven pendulum Hamiltonians in dimensionless form.
//!
//! Both models act on a momentum lattice `|n>` with integer `n` and share the
//! structure `H(t') = n^2 + s(t') + c(t') (|n><n+1| + |n+1><n|)`: a free-rotor
//! diagonal, an optional time-dependent scalar shift, and a single hopping
//! amplitude between neighbouring momenta. The classical counterpart is
//! `H(phi, n, t') = n^2 + s(t') + 2 c(t') cos(phi)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Amplitude-modulated standing wave (`cos^2` modulation of the lattice depth).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TexasParams {
    /// Dimensionless drive strength.
    pub alpha: f64,
    /// Dimensionless modulation frequency.
    pub omega: f64,
    /// Physical modulation frequency in Hz.
    pub mod_freq_hz: f64,
}

impl TexasParams {
    pub fn new(alpha: f64, omega: f64, mod_freq_hz: f64) -> Result<Self> {
        let p = Self {
            alpha,
            omega,
            mod_freq_hz,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters for drive strength `alpha` with the modulation frequency fixed
    /// by the recoil frequency (rad/s) and the modulation period (s).
    pub fn from_recoil(alpha: f64, recoil_freq_rad_s: f64, period_s: f64) -> Result<Self> {
        if !(recoil_freq_rad_s > 0.0) {
            return Err(invalid("recoil_freq_rad_s", "must be > 0"));
        }
        if !(period_s > 0.0) {
            return Err(invalid("period_s", "must be > 0"));
        }
        let omega_m = TAU / period_s;
        Self::new(alpha, omega_m / (4.0 * recoil_freq_rad_s), 1.0 / period_s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(invalid("alpha", format!("must be finite and >= 0, got {}", self.alpha)));
        }
        if !(self.omega > 0.0) || !(TAU / self.omega).is_finite() {
            return Err(invalid(
                "omega",
                format!("must be > 0 with a finite period, got {}", self.omega),
            ));
        }
        if !(self.mod_freq_hz > 0.0) || !self.mod_freq_hz.is_finite() {
            return Err(invalid(
                "mod_freq_hz",
                format!("must be finite and > 0, got {}", self.mod_freq_hz),
            ));
        }
        Ok(())
    }
}

/// Sign of the modulation term; selects the start phase of the experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriveSign {
    Plus,
    Minus,
}

impl DriveSign {
    pub fn value(self) -> f64 {
        match self {
            DriveSign::Plus => 1.0,
            DriveSign::Minus => -1.0,
        }
    }

    pub fn from_int(nu: i64) -> Result<Self> {
        match nu {
            1 => Ok(DriveSign::Plus),
            -1 => Ok(DriveSign::Minus),
            _ => Err(invalid("nu", format!("must be +1 or -1, got {nu}"))),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            DriveSign::Plus => DriveSign::Minus,
            DriveSign::Minus => DriveSign::Plus,
        }
    }
}

/// Phase-modulated `sin^2(phi/2)` lattice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NistParams {
    pub kappa: f64,
    pub epsilon: f64,
    /// Dimensionless modulation frequency.
    pub omega_t: f64,
    pub nu: DriveSign,
    pub mod_freq_hz: f64,
}

impl NistParams {
    pub fn new(kappa: f64, epsilon: f64, omega_t: f64, nu: DriveSign, mod_freq_hz: f64) -> Result<Self> {
        let p = Self {
            kappa,
            epsilon,
            omega_t,
            nu,
            mod_freq_hz,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(invalid("kappa", format!("must be finite and >= 0, got {}", self.kappa)));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(invalid("epsilon", format!("must lie in [0, 1), got {}", self.epsilon)));
        }
        if !(self.omega_t > 0.0) || !(TAU / self.omega_t).is_finite() {
            return Err(invalid(
                "omega_t",
                format!("must be > 0 with a finite period, got {}", self.omega_t),
            ));
        }
        if !(self.mod_freq_hz > 0.0) || !self.mod_freq_hz.is_finite() {
            return Err(invalid(
                "mod_freq_hz",
                format!("must be finite and > 0, got {}", self.mod_freq_hz),
            ));
        }
        Ok(())
    }

    fn modulation(&self, t: f64) -> f64 {
        1.0 + 2.0 * self.nu.value() * self.epsilon * (self.omega_t * t).cos()
    }

    fn depth(&self) -> f64 {
        self.omega_t * self.omega_t * self.kappa
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    Texas(TexasParams),
    Nist(NistParams),
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Texas(p) => p.validate(),
            ModelSpec::Nist(p) => p.validate(),
        }
    }

    /// Dimensionless modulation frequency (`omega` or `omega~`).
    pub fn omega(&self) -> f64 {
        match self {
            ModelSpec::Texas(p) => p.omega,
            ModelSpec::Nist(p) => p.omega_t,
        }
    }

    /// Drive period in dimensionless time.
    pub fn period(&self) -> f64 {
        TAU / self.omega()
    }

    pub fn mod_freq_hz(&self) -> f64 {
        match self {
            ModelSpec::Texas(p) => p.mod_freq_hz,
            ModelSpec::Nist(p) => p.mod_freq_hz,
        }
    }

    /// Seconds per unit of dimensionless time.
    pub fn seconds_per_unit_time(&self) -> f64 {
        1.0 / (self.mod_freq_hz() * self.period())
    }

    /// `alpha` for the Texas model, `kappa` for the NIST model.
    pub fn drive_strength(&self) -> f64 {
        match self {
            ModelSpec::Texas(p) => p.alpha,
            ModelSpec::Nist(p) => p.kappa,
        }
    }

    pub fn with_drive_strength(&self, value: f64) -> Result<Self> {
        let model = match *self {
            ModelSpec::Texas(p) => ModelSpec::Texas(TexasParams { alpha: value, ..p }),
            ModelSpec::Nist(p) => ModelSpec::Nist(NistParams { kappa: value, ..p }),
        };
        model.validate()?;
        Ok(model)
    }

    /// Nearest-neighbour hopping amplitude `<n|H|n+1>` at time `t`.
    pub fn coupling(&self, t: f64) -> f64 {
        match self {
            ModelSpec::Texas(p) => -(p.alpha * p.omega * p.omega / (16.0 * PI * PI)) * (1.0 + (p.omega * t).cos()),
            ModelSpec::Nist(p) => -(p.depth() / 4.0) * p.modulation(t),
        }
    }

    /// Scalar added to every diagonal element at time `t`.
    pub fn diagonal_shift(&self, t: f64) -> f64 {
        match self {
            ModelSpec::Texas(_) => 0.0,
            ModelSpec::Nist(p) => (p.depth() / 2.0) * p.modulation(t),
        }
    }

    /// Closed-form integral of [`Self::diagonal_shift`] over `[t0, t1]`.
    pub fn diagonal_shift_integral(&self, t0: f64, t1: f64) -> f64 {
        match self {
            ModelSpec::Texas(_) => 0.0,
            ModelSpec::Nist(p) => {
                let w = p.omega_t;
                let osc = 2.0 * p.nu.value() * p.epsilon * ((w * t1).sin() - (w * t0).sin()) / w;
                (p.depth() / 2.0) * ((t1 - t0) + osc)
            }
        }
    }

    /// Classical Hamiltonian written term by term as the sum of cosines, without
    /// collapsing the products. Used as the reference for the force terms.
    pub fn classical_energy(&self, phi: f64, n: f64, t: f64) -> f64 {
        match self {
            ModelSpec::Texas(p) => {
                let wt = p.omega * t;
                let bracket = phi.cos() + 0.5 * (phi - wt).cos() + 0.5 * (phi + wt).cos();
                n * n - (p.alpha * p.omega * p.omega / (8.0 * PI * PI)) * bracket
            }
            ModelSpec::Nist(p) => {
                let wt = p.omega_t * t;
                let ne = p.nu.value() * p.epsilon;
                let bracket = 1.0 + 2.0 * ne * wt.cos() - phi.cos() - ne * (phi - wt).cos() - ne * (phi + wt).cos();
                n * n + (p.depth() / 2.0) * bracket
            }
        }
    }
}

/// Truncated momentum lattice `n = -n_max ..= n_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    pub n_max: usize,
}

impl Lattice {
    pub fn new(n_max: usize) -> Self {
        Self { n_max }
    }

    pub fn size(&self) -> usize {
        2 * self.n_max + 1
    }

    /// Momentum of lattice index `k`.
    pub fn momentum(&self, k: usize) -> i64 {
        k as i64 - self.n_max as i64
    }

    pub fn index_of(&self, n: i64) -> Option<usize> {
        let k = n + self.n_max as i64;
        (0..self.size() as i64).contains(&k).then_some(k as usize)
    }

    pub fn momenta(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.size()).map(|k| self.momentum(k))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonanceEstimate {
    pub center_n: f64,
    pub center_phi: f64,
    pub half_width: f64,
}

/// Symmetric tridiagonal Hamiltonian at a fixed time.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub offdiag: f64,
}

/// Converts the experimental recoil frequency, modulation period and lattice
/// depth `V0/hbar` (rad/s) into dimensionless Texas parameters.
pub fn texas_from_physical(recoil_freq_rad_s: f64, period_s: f64, v0_over_hbar: f64) -> Result<TexasParams> {
    if !(v0_over_hbar > 0.0) {
        return Err(invalid("v0_over_hbar", "must be > 0"));
    }
    if !(period_s > 0.0) {
        return Err(invalid("period_s", "must be > 0"));
    }
    let alpha = 8.0 * recoil_freq_rad_s * period_s * period_s * v0_over_hbar;
    TexasParams::from_recoil(alpha, recoil_freq_rad_s, period_s)
}

pub fn hamiltonian_tridiagonal(model: &ModelSpec, t: f64, lattice: Lattice) -> Tridiagonal {
    let shift = model.diagonal_shift(t);
    let diag = lattice.momenta().map(|n| (n * n) as f64 + shift).collect();
    Tridiagonal {
        diag,
        offdiag: model.coupling(t),
    }
}

/// Hamilton's equations `(dphi/dt', dn/dt')`.
pub fn classical_rhs(model: &ModelSpec, phi: f64, n: f64, t: f64) -> (f64, f64) {
    // H = n^2 + s(t) + 2 c(t) cos(phi)
    (2.0 * n, 2.0 * model.coupling(t) * phi.sin())
}

/// Pendulum approximation of the three primary resonances: the central one
/// first, then the pair at `n = -omega/2, +omega/2`.
pub fn resonance_estimates(model: &ModelSpec) -> Vec<ResonanceEstimate> {
    let (central, outer, outer_phi) = match model {
        ModelSpec::Texas(p) => {
            let w0 = p.omega * p.alpha.sqrt() / (2.0 * PI);
            (w0, w0 / 2f64.sqrt(), [0.0, 0.0])
        }
        ModelSpec::Nist(p) => {
            let w0 = p.depth().sqrt();
            let wpm = (p.depth() * p.epsilon).sqrt();
            let phi = match p.nu {
                DriveSign::Minus => [-PI, PI],
                DriveSign::Plus => [0.0, 0.0],
            };
            (w0, wpm, phi)
        }
    };
    let half = model.omega() / 2.0;
    vec![
        ResonanceEstimate {
            center_n: 0.0,
            center_phi: 0.0,
            half_width: central,
        },
        ResonanceEstimate {
            center_n: -half,
            center_phi: outer_phi[0],
            half_width: outer,
        },
        ResonanceEstimate {
            center_n: half,
            center_phi: outer_phi[1],
            half_width: outer,
        },
    ]
}
