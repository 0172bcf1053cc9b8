//! The five run commands. Each writes its data files plus `config.resolved`
//! into the configured output directory and returns what it wrote.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::classical::{seed_grid, OrbitIntegrator, PhasePoint};
use crate::config::RunConfig;
use crate::error::{invalid, Error, Result};
use crate::floquet::{
    analyze_with, dominant_frequencies, overlap_probabilities, sweep_drive_with, FloquetModes, FrequencyLine,
    SweepEntry,
};
use crate::husimi::{husimi_grid, PhaseGrid};
use crate::io;
use crate::propagator::{coherent_state, Propagator, StateVector, TimeSeries};
use crate::spectral::{peak_frequencies, SpectralPeak};

pub const SUPPORT_WINDOW: i64 = 5;

fn prepare_output(cfg: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.output)?;
    fs::write(cfg.output.join("config.resolved"), cfg.to_resolved_string())?;
    Ok(cfg.output.clone())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn initial_state(cfg: &RunConfig) -> Result<StateVector> {
    coherent_state(cfg.initial.phi0, cfg.initial.n0, cfg.initial.sigma, cfg.lattice)
}

#[derive(Clone, Debug)]
pub struct EvolveOutput {
    pub series: TimeSeries,
    pub peaks: Vec<SpectralPeak>,
}

/// `series.csv` and `peaks.csv`.
pub fn cmd_evolve(cfg: &RunConfig) -> Result<EvolveOutput> {
    let dir = prepare_output(cfg)?;
    let propagator = Propagator::new(cfg.steps_per_period)?;
    let series = propagator.evolve_series(&initial_state(cfg)?, &cfg.model, cfg.periods, cfg.samples_per_period)?;
    let peaks = peak_frequencies(&series, cfg.max_peaks)?;
    io::write_series(create(&dir, "series.csv")?, &io::SeriesTable::from(&series))?;
    io::write_peaks(create(&dir, "peaks.csv")?, &peaks)?;
    Ok(EvolveOutput { series, peaks })
}

#[derive(Clone, Debug)]
pub struct FloquetOutput {
    pub modes: FloquetModes,
    pub overlaps: Vec<f64>,
    pub lines: Vec<FrequencyLine>,
    /// Modes with more than half their weight on `|n| <= SUPPORT_WINDOW`.
    pub support_count: usize,
}

/// `modes.csv` and `lines.csv`.
pub fn cmd_floquet(cfg: &RunConfig) -> Result<FloquetOutput> {
    let dir = prepare_output(cfg)?;
    let modes = analyze_with(&Propagator::new(cfg.steps_per_period)?, &cfg.model, cfg.lattice)?;
    let state = initial_state(cfg)?;
    let overlaps = overlap_probabilities(&modes, &state)?;
    let lines = dominant_frequencies(&modes, &state, cfg.threshold)?;
    io::write_modes(create(&dir, "modes.csv")?, &io::mode_rows(&modes, &overlaps))?;
    io::write_lines(create(&dir, "lines.csv")?, &lines)?;
    let support_count = modes.support_count(SUPPORT_WINDOW);
    Ok(FloquetOutput {
        modes,
        overlaps,
        lines,
        support_count,
    })
}

/// `sweep.csv`; needs `sweep_start`, `sweep_stop` and `sweep_step`.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<SweepEntry>> {
    let grid = cfg.sweep.ok_or_else(|| {
        invalid(
            "sweep_start",
            "the sweep command needs sweep_start, sweep_stop, sweep_step",
        )
    })?;
    let dir = prepare_output(cfg)?;
    let entries = sweep_drive_with(
        &Propagator::new(cfg.steps_per_period)?,
        &cfg.model,
        cfg.lattice,
        &grid.values(),
        cfg.initial,
        cfg.threshold,
    )?;
    io::write_sweep(create(&dir, "sweep.csv")?, &io::sweep_rows(&entries))?;
    Ok(entries)
}

/// `husimi.txt` for Floquet mode `husimi_mode`, or for the initial state when unset.
pub fn cmd_husimi(cfg: &RunConfig) -> Result<PhaseGrid> {
    let state = match cfg.husimi.mode {
        None => initial_state(cfg)?,
        Some(index) => {
            let size = cfg.lattice.size();
            if index >= size {
                return Err(Error::IndexOutOfRange { index, size });
            }
            let modes = analyze_with(&Propagator::new(cfg.steps_per_period)?, &cfg.model, cfg.lattice)?;
            StateVector::normalized(cfg.lattice, modes.vectors[index].clone())?
        }
    };
    let h = &cfg.husimi;
    let grid = husimi_grid(&state, h.phi_points, h.n_points, h.n_range, h.sigma)?;
    let dir = prepare_output(cfg)?;
    grid.write(create(&dir, "husimi.txt")?)?;
    Ok(grid)
}

/// `section.csv` from the configured seed grid.
pub fn cmd_strobe(cfg: &RunConfig) -> Result<Vec<Vec<PhasePoint>>> {
    let dir = prepare_output(cfg)?;
    let s = &cfg.strobe;
    let seeds = seed_grid(s.phi_seeds, s.n_seeds, s.n_lo, s.n_hi);
    let orbits = OrbitIntegrator::new(cfg.steps_per_period)?.strobe_section(&cfg.model, &seeds, s.periods)?;
    io::write_section(create(&dir, "section.csv")?, &orbits)?;
    Ok(orbits)
}
