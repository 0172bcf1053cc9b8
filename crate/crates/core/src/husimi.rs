//! Husimi phase-space distributions on a `(phi, n)` grid.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::propagator::{coherent_amplitudes, StateVector};

pub const DEFAULT_PROBE_SIGMA: f64 = 1.0;
pub const DEFAULT_GRID_POINTS: usize = 256;

/// `values[b][a]` holds the density at `(phi_axis[a], n_axis[b])`.
///
/// The angle axis is half-open, `phi_a = -pi + 2 pi a / P`; the momentum axis
/// is closed, `n_b = -R + 2 R b / (N - 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGrid {
    pub phi_axis: Vec<f64>,
    pub n_axis: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

fn phi_axis(count: usize) -> Vec<f64> {
    let (lo, hi) = (-PI, PI);
    (0..count).map(|a| lo + (hi - lo) * a as f64 / count as f64).collect()
}

fn n_axis(count: usize, n_range: f64) -> Vec<f64> {
    let (lo, hi) = (-n_range, n_range);
    (0..count)
        .map(|b| lo + (hi - lo) * b as f64 / (count - 1) as f64)
        .collect()
}

impl PhaseGrid {
    pub fn value(&self, phi_index: usize, n_index: usize) -> f64 {
        self.values[n_index][phi_index]
    }

    pub fn n_range(&self) -> f64 {
        self.n_axis.last().copied().unwrap_or(0.0)
    }

    pub fn cell_area(&self) -> f64 {
        let dphi = 2.0 * PI / self.phi_axis.len() as f64;
        let dn = 2.0 * self.n_range() / (self.n_axis.len() - 1) as f64;
        dphi * dn
    }

    /// Grid sum times cell area over `2 pi`; close to one when the grid covers the state.
    pub fn normalization(&self) -> f64 {
        let total: f64 = self.values.iter().flatten().sum();
        total * self.cell_area() / (2.0 * PI)
    }

    /// `(phi_index, n_index)` of the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut top = f64::NEG_INFINITY;
        for (b, row) in self.values.iter().enumerate() {
            for (a, &v) in row.iter().enumerate() {
                if v > top {
                    top = v;
                    best = (a, b);
                }
            }
        }
        best
    }

    /// Largest `|values(phi, n) - values(-phi, -n)|` over the grid.
    pub fn reflection_asymmetry(&self) -> f64 {
        let p = self.phi_axis.len();
        let nn = self.n_axis.len();
        let mut worst: f64 = 0.0;
        for b in 0..nn {
            for a in 0..p {
                let mirrored = self.values[nn - 1 - b][(p - a) % p];
                worst = worst.max((self.values[b][a] - mirrored).abs());
            }
        }
        worst
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# phi: {:.16e} {:.16e} {}", -PI, PI, self.phi_axis.len())?;
        writeln!(
            out,
            "# n: {:.16e} {:.16e} {}",
            -self.n_range(),
            self.n_range(),
            self.n_axis.len()
        )?;
        for row in &self.values {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut header = |label: &str| -> Result<(f64, f64, usize)> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing `{label}` header")))??;
            let rest = line
                .strip_prefix(&format!("# {label}:"))
                .ok_or_else(|| Error::Parse(format!("expected `# {label}:` header, got `{line}`")))?;
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("`{label}` header needs min max count")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
            let count = fields[2]
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("{}: {e}", fields[2])))?;
            Ok((num(fields[0])?, num(fields[1])?, count))
        };
        let (_, _, phi_count) = header("phi")?;
        let (_, n_max, n_count) = header("n")?;
        if phi_count < 2 || n_count < 2 {
            return Err(Error::Parse("grid needs at least 2 points per axis".into()));
        }
        let mut values = Vec::with_capacity(n_count);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != phi_count {
                return Err(Error::DimensionMismatch {
                    expected: phi_count,
                    got: row.len(),
                });
            }
            values.push(row);
        }
        if values.len() != n_count {
            return Err(Error::DimensionMismatch {
                expected: n_count,
                got: values.len(),
            });
        }
        Ok(PhaseGrid {
            phi_axis: phi_axis(phi_count),
            n_axis: n_axis(n_count, n_max),
            values,
        })
    }
}

/// `|<phi_a n_b|state>|^2` with lattice-normalized coherent probes of width `sigma`.
pub fn husimi_grid(
    state: &StateVector,
    phi_points: usize,
    n_points: usize,
    n_range: f64,
    sigma: f64,
) -> Result<PhaseGrid> {
    if phi_points < 2 {
        return Err(invalid("phi_points", format!("need at least 2, got {phi_points}")));
    }
    if n_points < 2 {
        return Err(invalid("n_points", format!("need at least 2, got {n_points}")));
    }
    if !(n_range > 0.0 && n_range.is_finite()) {
        return Err(invalid("n_range", "must be finite and > 0"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", "must be finite and > 0"));
    }
    let lattice = state.lattice();
    let amps = state.amplitudes();
    let phis = phi_axis(phi_points);
    let ns = n_axis(n_points, n_range);
    let values = ns
        .par_iter()
        .map(|&n0| {
            phis.iter()
                .map(|&phi0| {
                    let probe = coherent_amplitudes(phi0, n0, sigma, lattice);
                    let norm: f64 = probe.iter().map(|c| c.norm_sqr()).sum();
                    let overlap: Complex64 = probe.iter().zip(amps).map(|(p, s)| p.conj() * s).sum();
                    overlap.norm_sqr() / norm
                })
                .collect()
        })
        .collect();
    Ok(PhaseGrid {
        phi_axis: phis,
        n_axis: ns,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Lattice;
    use crate::propagator::coherent_state;

    #[test]
    fn coherent_state_peaks_at_its_centre() {
        let lat = Lattice::new(12);
        let s = coherent_state(0.9, 2.3, 1.0, lat).unwrap();
        let g = husimi_grid(&s, 64, 49, 6.0, 1.0).unwrap();
        let (a, b) = g.argmax();
        let dphi = 2.0 * PI / 64.0;
        assert!((g.phi_axis[a] - 0.9).abs() <= dphi);
        assert!((g.n_axis[b] - 2.3).abs() <= 0.25);
    }

    #[test]
    fn momentum_eigenstate_is_flat_in_phi() {
        let lat = Lattice::new(8);
        let g = husimi_grid(&StateVector::basis(lat, 0).unwrap(), 32, 17, 4.0, 1.0).unwrap();
        for row in &g.values {
            assert!(row.iter().all(|v| (v - row[0]).abs() < 1e-12));
        }
        assert!(g.values.iter().flatten().all(|&v| v >= 0.0));
    }

    #[test]
    fn rejects_bad_grid() {
        let s = StateVector::basis(Lattice::new(2), 0).unwrap();
        assert!(husimi_grid(&s, 1, 4, 2.0, 1.0).is_err());
        assert!(husimi_grid(&s, 4, 1, 2.0, 1.0).is_err());
        assert!(husimi_grid(&s, 4, 4, 2.0, 0.0).is_err());
        assert!(husimi_grid(&s, 4, 4, -1.0, 1.0).is_err());
    }

    #[test]
    fn normalization_proxy() {
        let lat = Lattice::new(16);
        let s = coherent_state(0.0, 1.0, 1.2, lat).unwrap();
        let g = husimi_grid(&s, 128, 129, 16.0, 1.0).unwrap();
        assert!((g.normalization() - 1.0).abs() < 0.1, "{}", g.normalization());
    }

    #[test]
    fn text_round_trip() {
        let lat = Lattice::new(6);
        let s = coherent_state(-0.4, 1.5, 1.2, lat).unwrap();
        let g = husimi_grid(&s, 16, 11, 6.0, 1.0).unwrap();
        let mut buf = Vec::new();
        g.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# phi: "));
        let back = PhaseGrid::read(buf.as_slice()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn read_rejects_ragged() {
        let text = "# phi: -3 3 2\n# n: -1 1 2\n1 2\n3\n";
        assert!(PhaseGrid::read(text.as_bytes()).is_err());
    }
}
