//! Classical trajectories and stroboscopic sections.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::model::{classical_rhs, ModelSpec};
use crate::propagator::DEFAULT_STEPS_PER_PERIOD;

pub fn wrap_angle(phi: f64) -> f64 {
    let w = phi - TAU * ((phi + PI) / TAU).floor();
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub phi: f64,
    pub n: f64,
}

impl PhasePoint {
    pub fn new(phi: f64, n: f64) -> Self {
        PhasePoint {
            phi: wrap_angle(phi),
            n,
        }
    }

    /// Euclidean distance with the angle difference taken on the circle.
    pub fn distance(&self, other: &PhasePoint) -> f64 {
        let dphi = wrap_angle(self.phi - other.phi);
        dphi.hypot(self.n - other.n)
    }
}

/// Fixed-step RK4 integrator for `dphi/dt = 2n`, `dn/dt = -dH/dphi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrbitIntegrator {
    pub steps_per_period: usize,
}

impl Default for OrbitIntegrator {
    fn default() -> Self {
        OrbitIntegrator {
            steps_per_period: DEFAULT_STEPS_PER_PERIOD,
        }
    }
}

impl OrbitIntegrator {
    pub fn new(steps_per_period: usize) -> Result<Self> {
        if steps_per_period == 0 {
            return Err(invalid("steps_per_period", "must be >= 1"));
        }
        Ok(OrbitIntegrator { steps_per_period })
    }

    // phi is carried unwrapped; the right-hand side is 2 pi periodic in it
    fn advance(&self, model: &ModelSpec, state: (f64, f64), t_start: f64, t_end: f64) -> Result<(f64, f64)> {
        let span = t_end - t_start;
        if span == 0.0 {
            return Ok(state);
        }
        let nominal = model.period() / self.steps_per_period as f64;
        let steps = ((span / nominal) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        if h <= f64::EPSILON * t_end.abs().max(1.0) {
            return Err(Error::NumericFailure {
                t: t_start,
                reason: "step size underflow",
                achieved: h,
            });
        }
        let f = |t: f64, (phi, n): (f64, f64)| classical_rhs(model, phi, n, t);
        let (mut phi, mut n) = state;
        for k in 0..steps {
            let t = t_start + k as f64 * h;
            let k1 = f(t, (phi, n));
            let k2 = f(t + 0.5 * h, (phi + 0.5 * h * k1.0, n + 0.5 * h * k1.1));
            let k3 = f(t + 0.5 * h, (phi + 0.5 * h * k2.0, n + 0.5 * h * k2.1));
            let k4 = f(t + h, (phi + h * k3.0, n + h * k3.1));
            phi += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            n += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        if !(phi.is_finite() && n.is_finite()) {
            return Err(Error::NumericFailure {
                t: t_end,
                reason: "non-finite phase-space point",
                achieved: n,
            });
        }
        Ok((phi, n))
    }

    pub fn integrate_orbit(
        &self,
        model: &ModelSpec,
        start: PhasePoint,
        t_start: f64,
        t_end: f64,
    ) -> Result<PhasePoint> {
        if !(t_end >= t_start) {
            return Err(invalid("t_end", "must be >= t_start"));
        }
        model.validate()?;
        let (phi, n) = self.advance(model, (start.phi, start.n), t_start, t_end)?;
        Ok(PhasePoint::new(phi, n))
    }

    /// Points at `t = k T`, `k = 0..=n_periods`, for one seed.
    pub fn strobe_orbit(&self, model: &ModelSpec, start: PhasePoint, n_periods: usize) -> Result<Vec<PhasePoint>> {
        let period = model.period();
        let mut state = (start.phi, start.n);
        let mut points = Vec::with_capacity(n_periods + 1);
        points.push(PhasePoint::new(state.0, state.1));
        for k in 0..n_periods {
            state = self.advance(model, state, k as f64 * period, (k + 1) as f64 * period)?;
            points.push(PhasePoint::new(state.0, state.1));
        }
        Ok(points)
    }

    /// One strobe orbit per seed, in seed order.
    pub fn strobe_section(
        &self,
        model: &ModelSpec,
        starts: &[PhasePoint],
        n_periods: usize,
    ) -> Result<Vec<Vec<PhasePoint>>> {
        if n_periods == 0 {
            return Err(invalid("n_periods", "must be >= 1"));
        }
        model.validate()?;
        starts
            .par_iter()
            .map(|&s| self.strobe_orbit(model, s, n_periods))
            .collect()
    }
}

pub fn integrate_orbit(model: &ModelSpec, start: PhasePoint, t_start: f64, t_end: f64) -> Result<PhasePoint> {
    OrbitIntegrator::default().integrate_orbit(model, start, t_start, t_end)
}

pub fn strobe_section(model: &ModelSpec, starts: &[PhasePoint], n_periods: usize) -> Result<Vec<Vec<PhasePoint>>> {
    OrbitIntegrator::default().strobe_section(model, starts, n_periods)
}

/// Uniform seeds over `phi in [-pi, pi)` and `n in [n_lo, n_hi]`, phi varying fastest.
pub fn seed_grid(phi_count: usize, n_count: usize, n_lo: f64, n_hi: f64) -> Vec<PhasePoint> {
    let mut seeds = Vec::with_capacity(phi_count * n_count);
    for b in 0..n_count {
        let n = if n_count == 1 {
            n_lo
        } else {
            n_lo + (n_hi - n_lo) * b as f64 / (n_count - 1) as f64
        };
        for a in 0..phi_count {
            seeds.push(PhasePoint::new(-PI + TAU * a as f64 / phi_count as f64, n));
        }
    }
    seeds
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChaosTest {
    pub twin_offset: f64,
    pub periods: usize,
    pub separation_threshold: f64,
}

impl Default for ChaosTest {
    fn default() -> Self {
        ChaosTest {
            twin_offset: 1e-8,
            periods: 50,
            separation_threshold: 1.0,
        }
    }
}

impl ChaosTest {
    /// True if a twin displaced by `twin_offset` in `n` separates beyond the
    /// threshold at some strobe time.
    pub fn is_chaotic(&self, integrator: &OrbitIntegrator, model: &ModelSpec, start: PhasePoint) -> Result<bool> {
        let period = model.period();
        let mut a = (start.phi, start.n);
        let mut b = (start.phi, start.n + self.twin_offset);
        for k in 0..self.periods {
            let (t0, t1) = (k as f64 * period, (k + 1) as f64 * period);
            a = integrator.advance(model, a, t0, t1)?;
            b = integrator.advance(model, b, t0, t1)?;
            if PhasePoint::new(a.0, a.1).distance(&PhasePoint::new(b.0, b.1)) > self.separation_threshold {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChaosExtent {
    pub chaotic_seeds: Vec<usize>,
    pub max_abs_n: f64,
    /// Fraction of chaotic-seed strobe points with `|n| <= limit`.
    pub fraction_within: f64,
    pub limit: f64,
    pub total_points: usize,
}

/// Momentum extent of the chaotic sea from the strobe points of chaotic seeds.
pub fn chaos_extent(
    integrator: &OrbitIntegrator,
    model: &ModelSpec,
    seeds: &[PhasePoint],
    n_periods: usize,
    test: &ChaosTest,
    limit: f64,
) -> Result<ChaosExtent> {
    let flags = seeds
        .par_iter()
        .map(|&s| test.is_chaotic(integrator, model, s))
        .collect::<Result<Vec<bool>>>()?;
    let chaotic_seeds: Vec<usize> = flags.iter().enumerate().filter(|(_, &c)| c).map(|(k, _)| k).collect();
    let starts: Vec<PhasePoint> = chaotic_seeds.iter().map(|&k| seeds[k]).collect();
    let orbits = if starts.is_empty() {
        Vec::new()
    } else {
        integrator.strobe_section(model, &starts, n_periods)?
    };
    let points: Vec<&PhasePoint> = orbits.iter().flatten().collect();
    let max_abs_n = points.iter().map(|p| p.n.abs()).fold(0.0, f64::max);
    let inside = points.iter().filter(|p| p.n.abs() <= limit).count();
    let fraction_within = if points.is_empty() {
        1.0
    } else {
        inside as f64 / points.len() as f64
    };
    Ok(ChaosExtent {
        chaotic_seeds,
        max_abs_n,
        fraction_within,
        limit,
        total_points: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DriveSign, NistParams, TexasParams};

    fn texas(alpha: f64) -> ModelSpec {
        ModelSpec::Texas(TexasParams::new(alpha, 6.0, 50e3).unwrap())
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert!((wrap_angle(3.0 * PI + 0.5) - (-PI + 0.5)).abs() < 1e-12);
        assert!((wrap_angle(-0.3) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn free_rotation() {
        let p = integrate_orbit(&texas(0.0), PhasePoint::new(0.0, 3.0), 0.0, 1.0).unwrap();
        assert!((p.phi - wrap_angle(6.0)).abs() < 1e-12);
        assert_eq!(p.n, 3.0);
    }

    #[test]
    fn origin_is_fixed_on_symmetry_line() {
        let (_, dn) = classical_rhs(&texas(9.7), 0.0, 0.0, 0.0);
        assert_eq!(dn, 0.0);
        let p = integrate_orbit(&texas(9.7), PhasePoint::new(0.0, 0.0), 0.0, 5.0).unwrap();
        assert_eq!((p.phi, p.n), (0.0, 0.0));
    }

    #[test]
    fn step_halving_regular_orbit() {
        let m = texas(9.7);
        let t1 = 10.0 * m.period();
        let start = PhasePoint::new(0.0, 4.2);
        let a = OrbitIntegrator::new(4096)
            .unwrap()
            .integrate_orbit(&m, start, 0.0, t1)
            .unwrap();
        let b = OrbitIntegrator::new(8192)
            .unwrap()
            .integrate_orbit(&m, start, 0.0, t1)
            .unwrap();
        assert!(a.distance(&b) < 1e-8, "{}", a.distance(&b));
    }

    #[test]
    fn section_shape_and_determinism() {
        let m = ModelSpec::Nist(NistParams::new(1.66, 0.29, 2.5, DriveSign::Minus, 250e3).unwrap());
        let seeds = seed_grid(3, 2, -1.0, 1.0);
        let a = strobe_section(&m, &seeds, 4).unwrap();
        let b = strobe_section(&m, &seeds, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        assert!(a.iter().all(|o| o.len() == 5));
        assert_eq!(a[4][0], seeds[4]);
        assert!(a.iter().flatten().all(|p| (-PI..PI).contains(&p.phi)));
    }

    #[test]
    fn errors() {
        let m = texas(1.0);
        assert!(strobe_section(&m, &[PhasePoint::new(0.0, 0.0)], 0).is_err());
        assert!(integrate_orbit(&m, PhasePoint::new(0.0, 0.0), 1.0, 0.0).is_err());
        assert!(OrbitIntegrator::new(0).is_err());
    }

    #[test]
    fn seed_grid_layout() {
        let seeds = seed_grid(20, 20, -6.0, 6.0);
        assert_eq!(seeds.len(), 400);
        assert_eq!(seeds[0], PhasePoint::new(-PI, -6.0));
        assert_eq!(seeds[399].n, 6.0);
    }

    #[test]
    fn island_orbit_is_not_chaotic() {
        let m = texas(9.7);
        let test = ChaosTest::default();
        assert!(!test
            .is_chaotic(&OrbitIntegrator::default(), &m, PhasePoint::new(0.0, 4.2))
            .unwrap());
    }
}
