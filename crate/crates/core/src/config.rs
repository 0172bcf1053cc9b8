//! Run configuration: presets, key-value files and command-line overrides.
//!
//! A configuration is assembled from layers. Later layers win: preset, then
//! config file, then flags. The merged layer is resolved into a validated
//! [`RunConfig`], which prints back to the same key-value format.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::error::{invalid, Error, Result};
use crate::floquet::CoherentSpec;
use crate::model::{DriveSign, Lattice, ModelSpec, NistParams, TexasParams};

pub const PRESETS: [&str; 5] = ["texas-a8", "texas-a9.7", "texas-a13", "nist-250", "nist-222"];

/// Every field optional; `None` means "not set at this layer".
#[derive(Args, Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    /// Named parameter set to start from
    #[arg(long)]
    pub preset: Option<String>,
    /// `texas` or `nist`
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega_t: Option<f64>,
    /// Drive sign, +1 or -1
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mod_freq_hz: Option<f64>,

    #[arg(long, allow_hyphen_values = true)]
    pub phi0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub n0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub n_max: Option<usize>,

    #[arg(long)]
    pub periods: Option<usize>,
    #[arg(long)]
    pub samples_per_period: Option<usize>,
    #[arg(long)]
    pub steps_per_period: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub max_peaks: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,

    #[arg(long, allow_hyphen_values = true)]
    pub sweep_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sweep_stop: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sweep_step: Option<f64>,

    #[arg(long)]
    pub husimi_phi_points: Option<usize>,
    #[arg(long)]
    pub husimi_n_points: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub husimi_n_range: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub husimi_sigma: Option<f64>,
    /// Floquet mode index (eigenphase order); the initial state when unset
    #[arg(long)]
    pub husimi_mode: Option<usize>,

    #[arg(long)]
    pub strobe_phi_seeds: Option<usize>,
    #[arg(long)]
    pub strobe_n_seeds: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub strobe_n_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub strobe_n_hi: Option<f64>,
    #[arg(long)]
    pub strobe_periods: Option<usize>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($field:ident),* $(,)?) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl ConfigLayer {
    pub fn parse_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(&mut self, other: &ConfigLayer) {
        overlay!(
            self,
            other,
            preset,
            model,
            alpha,
            omega,
            kappa,
            epsilon,
            omega_t,
            nu,
            mod_freq_hz,
            phi0,
            n0,
            sigma,
            n_max,
            periods,
            samples_per_period,
            steps_per_period,
            threshold,
            max_peaks,
            output,
            sweep_start,
            sweep_stop,
            sweep_step,
            husimi_phi_points,
            husimi_n_points,
            husimi_n_range,
            husimi_sigma,
            husimi_mode,
            strobe_phi_seeds,
            strobe_n_seeds,
            strobe_n_lo,
            strobe_n_hi,
            strobe_periods,
        );
    }
}

// modulation period 20 us, recoil frequency 1.30e4 rad/s
const TEXAS_RECOIL_RAD_S: f64 = 1.30e4;
const TEXAS_PERIOD_S: f64 = 20e-6;

/// Parameter layer of a named preset.
pub fn preset(name: &str) -> Result<ConfigLayer> {
    let texas = |alpha: f64| -> Result<ConfigLayer> {
        let p = TexasParams::from_recoil(alpha, TEXAS_RECOIL_RAD_S, TEXAS_PERIOD_S)?;
        Ok(ConfigLayer {
            preset: Some(name.to_string()),
            model: Some("texas".into()),
            alpha: Some(p.alpha),
            omega: Some(p.omega),
            mod_freq_hz: Some(p.mod_freq_hz),
            phi0: Some(0.0),
            n0: Some(4.2),
            sigma: Some(1.2),
            n_max: Some(40),
            periods: Some(500),
            samples_per_period: Some(8),
            ..Default::default()
        })
    };
    let nist = |kappa: f64, epsilon: f64, omega_t: f64, nu: i64, mod_freq_hz: f64, n0: f64| ConfigLayer {
        preset: Some(name.to_string()),
        model: Some("nist".into()),
        kappa: Some(kappa),
        epsilon: Some(epsilon),
        omega_t: Some(omega_t),
        nu: Some(nu),
        mod_freq_hz: Some(mod_freq_hz),
        phi0: Some(0.0),
        n0: Some(n0),
        sigma: Some(1.2),
        n_max: Some(32),
        periods: Some(256),
        // one sample per period: the micromotion would otherwise alias into the band
        samples_per_period: Some(1),
        ..Default::default()
    };
    match name {
        "texas-a8" => texas(8.0),
        "texas-a9.7" => texas(9.7),
        "texas-a13" => texas(13.0),
        "nist-250" => Ok(nist(1.66, 0.29, 2.5, -1, 250e3, 1.6)),
        "nist-222" => Ok(nist(1.82, 0.30, 2.22, 1, 222e3, 2.0)),
        other => Err(invalid(
            "preset",
            format!("unknown preset `{other}`; known: {}", PRESETS.join(", ")),
        )),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepGrid {
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HusimiOptions {
    pub phi_points: usize,
    pub n_points: usize,
    pub n_range: f64,
    pub sigma: f64,
    pub mode: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrobeOptions {
    pub phi_seeds: usize,
    pub n_seeds: usize,
    pub n_lo: f64,
    pub n_hi: f64,
    pub periods: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub model: ModelSpec,
    pub initial: CoherentSpec,
    pub lattice: Lattice,
    pub periods: usize,
    pub samples_per_period: usize,
    pub steps_per_period: usize,
    pub threshold: f64,
    pub max_peaks: usize,
    pub output: PathBuf,
    pub sweep: Option<SweepGrid>,
    pub husimi: HusimiOptions,
    pub strobe: StrobeOptions,
}

fn required<T: Copy>(value: Option<T>, field: &'static str, model: &str) -> Result<T> {
    value.ok_or_else(|| invalid(field, format!("required for model `{model}`")))
}

fn positive_count(value: usize, field: &'static str) -> Result<usize> {
    if value == 0 {
        Err(invalid(field, "must be >= 1"))
    } else {
        Ok(value)
    }
}

impl RunConfig {
    /// Expands the preset named in `layer` (if any) underneath it and validates the result.
    pub fn resolve(layer: &ConfigLayer) -> Result<Self> {
        let mut merged = match &layer.preset {
            Some(name) => preset(name)?,
            None => ConfigLayer::default(),
        };
        merged.overlay(layer);
        Self::from_layer(&merged)
    }

    fn from_layer(c: &ConfigLayer) -> Result<Self> {
        let model_name = c
            .model
            .as_deref()
            .ok_or_else(|| invalid("model", "missing (set `model` or `preset`)"))?;
        let model = match model_name {
            "texas" => ModelSpec::Texas(TexasParams::new(
                required(c.alpha, "alpha", model_name)?,
                required(c.omega, "omega", model_name)?,
                required(c.mod_freq_hz, "mod_freq_hz", model_name)?,
            )?),
            "nist" => ModelSpec::Nist(NistParams::new(
                required(c.kappa, "kappa", model_name)?,
                required(c.epsilon, "epsilon", model_name)?,
                required(c.omega_t, "omega_t", model_name)?,
                DriveSign::from_int(required(c.nu, "nu", model_name)?)?,
                required(c.mod_freq_hz, "mod_freq_hz", model_name)?,
            )?),
            other => return Err(invalid("model", format!("expected `texas` or `nist`, got `{other}`"))),
        };

        let initial = CoherentSpec {
            phi0: c.phi0.unwrap_or(0.0),
            n0: c.n0.unwrap_or(0.0),
            sigma: c.sigma.unwrap_or(1.2),
        };
        if !initial.phi0.is_finite() {
            return Err(invalid("phi0", "must be finite"));
        }
        if !initial.n0.is_finite() {
            return Err(invalid("n0", "must be finite"));
        }
        if !(initial.sigma > 0.0 && initial.sigma.is_finite()) {
            return Err(invalid("sigma", "must be finite and > 0"));
        }
        let n_max = positive_count(c.n_max.unwrap_or(40), "n_max")?;
        if initial.n0.abs() > n_max as f64 {
            return Err(invalid(
                "n0",
                format!("|n0| = {} lies outside the lattice (n_max = {n_max})", initial.n0.abs()),
            ));
        }

        let threshold = c.threshold.unwrap_or(0.04);
        if !(threshold > 0.0 && threshold <= 0.25) {
            return Err(invalid("threshold", format!("must lie in (0, 0.25], got {threshold}")));
        }

        let sweep = match (c.sweep_start, c.sweep_stop, c.sweep_step) {
            (None, None, None) => None,
            (Some(start), Some(stop), Some(step)) => {
                if !(step > 0.0 && step.is_finite()) {
                    return Err(invalid("sweep_step", "must be finite and > 0"));
                }
                if !(stop >= start && start >= 0.0 && stop.is_finite()) {
                    return Err(invalid("sweep_stop", "need 0 <= sweep_start <= sweep_stop"));
                }
                Some(SweepGrid { start, stop, step })
            }
            _ => {
                return Err(invalid(
                    "sweep_start",
                    "sweep_start, sweep_stop and sweep_step must be set together",
                ))
            }
        };

        let husimi = HusimiOptions {
            phi_points: c.husimi_phi_points.unwrap_or(256),
            n_points: c.husimi_n_points.unwrap_or(256),
            n_range: c.husimi_n_range.unwrap_or(n_max as f64),
            sigma: c.husimi_sigma.unwrap_or(1.0),
            mode: c.husimi_mode,
        };
        if husimi.phi_points < 2 {
            return Err(invalid("husimi_phi_points", "must be >= 2"));
        }
        if husimi.n_points < 2 {
            return Err(invalid("husimi_n_points", "must be >= 2"));
        }
        if !(husimi.n_range > 0.0 && husimi.n_range.is_finite()) {
            return Err(invalid("husimi_n_range", "must be finite and > 0"));
        }
        if !(husimi.sigma > 0.0 && husimi.sigma.is_finite()) {
            return Err(invalid("husimi_sigma", "must be finite and > 0"));
        }
        let size = 2 * n_max + 1;
        if let Some(mode) = husimi.mode {
            if mode >= size {
                return Err(invalid(
                    "husimi_mode",
                    format!("index {mode} out of range (size {size})"),
                ));
            }
        }

        let strobe = StrobeOptions {
            phi_seeds: positive_count(c.strobe_phi_seeds.unwrap_or(20), "strobe_phi_seeds")?,
            n_seeds: positive_count(c.strobe_n_seeds.unwrap_or(20), "strobe_n_seeds")?,
            n_lo: c.strobe_n_lo.unwrap_or(-6.0),
            n_hi: c.strobe_n_hi.unwrap_or(6.0),
            periods: positive_count(c.strobe_periods.unwrap_or(300), "strobe_periods")?,
        };
        if !(strobe.n_lo.is_finite() && strobe.n_hi.is_finite() && strobe.n_lo <= strobe.n_hi) {
            return Err(invalid("strobe_n_hi", "need finite strobe_n_lo <= strobe_n_hi"));
        }

        Ok(RunConfig {
            preset: c.preset.clone(),
            model,
            initial,
            lattice: Lattice::new(n_max),
            periods: positive_count(c.periods.unwrap_or(500), "periods")?,
            samples_per_period: positive_count(c.samples_per_period.unwrap_or(8), "samples_per_period")?,
            steps_per_period: positive_count(c.steps_per_period.unwrap_or(4096), "steps_per_period")?,
            threshold,
            max_peaks: positive_count(c.max_peaks.unwrap_or(5), "max_peaks")?,
            output: c.output.clone().unwrap_or_else(|| PathBuf::from("out")),
            sweep,
            husimi,
            strobe,
        })
    }

    /// Fully expanded key-value text; parses back to the same configuration.
    pub fn to_resolved_string(&self) -> String {
        let mut out = Vec::<(String, String)>::new();
        let f = |v: f64| format!("{v:.16e}");
        match self.model {
            ModelSpec::Texas(p) => {
                out.push(("model".into(), "\"texas\"".into()));
                out.push(("alpha".into(), f(p.alpha)));
                out.push(("omega".into(), f(p.omega)));
                out.push(("mod_freq_hz".into(), f(p.mod_freq_hz)));
            }
            ModelSpec::Nist(p) => {
                out.push(("model".into(), "\"nist\"".into()));
                out.push(("kappa".into(), f(p.kappa)));
                out.push(("epsilon".into(), f(p.epsilon)));
                out.push(("omega_t".into(), f(p.omega_t)));
                out.push(("nu".into(), format!("{}", p.nu.value() as i64)));
                out.push(("mod_freq_hz".into(), f(p.mod_freq_hz)));
            }
        }
        out.push(("phi0".into(), f(self.initial.phi0)));
        out.push(("n0".into(), f(self.initial.n0)));
        out.push(("sigma".into(), f(self.initial.sigma)));
        out.push(("n_max".into(), self.lattice.n_max.to_string()));
        out.push(("periods".into(), self.periods.to_string()));
        out.push(("samples_per_period".into(), self.samples_per_period.to_string()));
        out.push(("steps_per_period".into(), self.steps_per_period.to_string()));
        out.push(("threshold".into(), f(self.threshold)));
        out.push(("max_peaks".into(), self.max_peaks.to_string()));
        out.push(("output".into(), toml_string(&self.output.to_string_lossy())));
        if let Some(g) = self.sweep {
            out.push(("sweep_start".into(), f(g.start)));
            out.push(("sweep_stop".into(), f(g.stop)));
            out.push(("sweep_step".into(), f(g.step)));
        }
        out.push(("husimi_phi_points".into(), self.husimi.phi_points.to_string()));
        out.push(("husimi_n_points".into(), self.husimi.n_points.to_string()));
        out.push(("husimi_n_range".into(), f(self.husimi.n_range)));
        out.push(("husimi_sigma".into(), f(self.husimi.sigma)));
        if let Some(m) = self.husimi.mode {
            out.push(("husimi_mode".into(), m.to_string()));
        }
        out.push(("strobe_phi_seeds".into(), self.strobe.phi_seeds.to_string()));
        out.push(("strobe_n_seeds".into(), self.strobe.n_seeds.to_string()));
        out.push(("strobe_n_lo".into(), f(self.strobe.n_lo)));
        out.push(("strobe_n_hi".into(), f(self.strobe.n_hi)));
        out.push(("strobe_periods".into(), self.strobe.periods.to_string()));

        let mut text = String::new();
        if let Some(name) = &self.preset {
            // informational only; the expanded values below are authoritative
            writeln!(text, "# preset: {name}").unwrap();
        }
        for (k, v) in out {
            writeln!(text, "{k} = {v}").unwrap();
        }
        text
    }
}

fn toml_string(s: &str) -> String {
    let mut out = String::from("\"");
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if c.is_control() => out.push_str(&format!("\\u{:04X}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
