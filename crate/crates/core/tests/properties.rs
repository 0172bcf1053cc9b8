use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;

use dyntunnel::classical::{wrap_angle, PhasePoint};
use dyntunnel::config::{preset, ConfigLayer, RunConfig};
use dyntunnel::floquet::{dominant_frequencies, overlap_probabilities, parity_classify, FloquetModes, Parity};
use dyntunnel::husimi::{husimi_grid, PhaseGrid};
use dyntunnel::io;
use dyntunnel::model::classical_rhs;
use dyntunnel::spectral::{fold_frequency, phase_diff_to_hz, SpectralPeak};
use dyntunnel::*;

fn texas_strategy() -> impl Strategy<Value = ModelSpec> {
    (0.0..20.0f64, 1.0..10.0f64).prop_map(|(a, w)| ModelSpec::Texas(TexasParams::new(a, w, 50e3).unwrap()))
}

fn nist_strategy() -> impl Strategy<Value = ModelSpec> {
    (0.0..3.0f64, 0.0..0.5f64, 1.0..4.0f64, prop::bool::ANY).prop_map(|(k, e, w, plus)| {
        let nu = if plus { DriveSign::Plus } else { DriveSign::Minus };
        ModelSpec::Nist(NistParams::new(k, e, w, nu, 250e3).unwrap())
    })
}

fn any_model() -> impl Strategy<Value = ModelSpec> {
    prop_oneof![texas_strategy(), nist_strategy()]
}

fn finite() -> impl Strategy<Value = f64> {
    any::<f64>().prop_filter("finite", |x| x.is_finite())
}

fn reference_modes() -> &'static FloquetModes {
    static MODES: OnceLock<FloquetModes> = OnceLock::new();
    MODES.get_or_init(|| {
        let model = ModelSpec::Texas(TexasParams::new(5.0, 6.0, 50e3).unwrap());
        analyze(&model, Lattice::new(12)).unwrap()
    })
}

proptest! {
    #[test]
    fn classical_energy_collapses_to_single_cosine(model in any_model(), phi in -PI..PI, n in -8.0..8.0f64, t in 0.0..10.0f64) {
        let direct = model.classical_energy(phi, n, t);
        let collapsed = n * n + model.diagonal_shift(t) + 2.0 * model.coupling(t) * phi.cos();
        prop_assert!((direct - collapsed).abs() <= 1e-10 * direct.abs().max(1.0), "{direct} vs {collapsed}");
    }

    #[test]
    fn hamilton_equations_match_finite_differences(model in any_model(), phi in -PI..PI, n in -8.0..8.0f64, t in 0.0..10.0f64) {
        let h = 1e-5;
        let (dphi, dn) = classical_rhs(&model, phi, n, t);
        let d_dn = (model.classical_energy(phi, n + h, t) - model.classical_energy(phi, n - h, t)) / (2.0 * h);
        let d_dphi = (model.classical_energy(phi + h, n, t) - model.classical_energy(phi - h, n, t)) / (2.0 * h);
        prop_assert!((dphi - d_dn).abs() <= 1e-6 * dphi.abs().max(1.0));
        prop_assert!((dn + d_dphi).abs() <= 1e-6 * dn.abs().max(1.0));
    }

    #[test]
    fn coherent_states_are_normalized(phi in -PI..PI, n0 in -10.0..10.0f64, sigma in 0.3..3.0f64) {
        let s = coherent_state(phi, n0, sigma, Lattice::new(30)).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrapped_angles_are_in_range(phi in -1e4..1e4f64) {
        let w = wrap_angle(phi);
        prop_assert!((-PI..PI).contains(&w));
        let turns = (phi - w) / TAU;
        prop_assert!((turns - turns.round()).abs() < 1e-9);
        prop_assert_eq!(PhasePoint::new(phi, 0.0).phi, w);
    }

    #[test]
    fn folding_is_periodic_and_bounded(d in -1e6..1e6f64, k in -5i32..5) {
        let fm = 50e3;
        let a = fold_frequency(d, fm);
        let b = fold_frequency(d + k as f64 * fm, fm);
        prop_assert!((0.0..=fm / 2.0).contains(&a));
        prop_assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn phase_difference_is_periodic(ti in 0.0..TAU, tj in 0.0..TAU, k in -3i32..3) {
        let fm = 250e3;
        let a = phase_diff_to_hz(ti, tj, fm).unwrap();
        let b = phase_diff_to_hz(ti + k as f64 * TAU, tj, fm).unwrap();
        let c = phase_diff_to_hz(ti, tj - k as f64 * TAU, fm).unwrap();
        prop_assert!((a - b).abs() < 1e-6 && (a - c).abs() < 1e-6);
        prop_assert!((0.0..=fm / 2.0).contains(&a));
    }

    #[test]
    fn overlaps_are_complete(phi in -PI..PI, n0 in -4.0..4.0f64, sigma in 0.8..2.0f64) {
        let modes = reference_modes();
        let s = coherent_state(phi, n0, sigma, modes.lattice).unwrap();
        let total: f64 = overlap_probabilities(modes, &s).unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn lines_ignore_branch_of_mode_frequencies(phi in -PI..PI, n0 in -3.0..3.0f64, shifts in prop::collection::vec(-2i32..3, 25)) {
        let modes = reference_modes();
        let s = coherent_state(phi, n0, 1.2, modes.lattice).unwrap();
        let mut shifted = modes.clone();
        for (f, k) in shifted.freqs_hz.iter_mut().zip(&shifts) {
            *f += *k as f64 * modes.mod_freq_hz;
        }
        let a = dominant_frequencies(modes, &s, 0.01).unwrap();
        let b = dominant_frequencies(&shifted, &s, 0.01).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!((x.i, x.j, x.weight), (y.i, y.j, y.weight));
            prop_assert!((x.delta_f_hz - y.delta_f_hz).abs() < 1e-6);
        }
    }

    #[test]
    fn parity_of_constructed_vectors(re in prop::collection::vec(-1.0..1.0f64, 6), im in prop::collection::vec(-1.0..1.0f64, 6), odd in prop::bool::ANY, phase in 0.0..TAU) {
        let lat = Lattice::new(5);
        let sign = if odd { -1.0 } else { 1.0 };
        let mut v = vec![Complex64::new(0.0, 0.0); lat.size()];
        for n in 1..=5i64 {
            let c = Complex64::new(re[n as usize], im[n as usize]);
            v[lat.index_of(n).unwrap()] = c;
            v[lat.index_of(-n).unwrap()] = sign * c;
        }
        if !odd {
            v[lat.index_of(0).unwrap()] = Complex64::new(re[0], im[0]);
        }
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let v: Vec<Complex64> = v.iter().map(|c| c / norm * Complex64::cis(phase)).collect();
        prop_assert_eq!(parity_classify(&v), if odd { Parity::Odd } else { Parity::Even });
    }

    #[test]
    fn husimi_translates_with_linear_phase(phi in -PI..PI, n0 in -3.0..3.0f64, shift in 0usize..32) {
        let lat = Lattice::new(10);
        let s = coherent_state(phi, n0, 1.3, lat).unwrap();
        let points = 32;
        let delta = TAU * shift as f64 / points as f64;
        let shifted: Vec<Complex64> = s
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(k, c)| c * Complex64::cis(-(lat.momentum(k) as f64) * delta))
            .collect();
        let shifted = StateVector::from_amplitudes(lat, shifted).unwrap();
        let g = husimi_grid(&s, points, 9, 5.0, 1.0).unwrap();
        let h = husimi_grid(&shifted, points, 9, 5.0, 1.0).unwrap();
        for b in 0..9 {
            for a in 0..points {
                prop_assert!(g.values[b][a] >= 0.0);
                prop_assert!((h.values[b][(a + shift) % points] - g.values[b][a]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn peaks_csv_round_trip(rows in prop::collection::vec((finite(), finite()), 0..20)) {
        let peaks: Vec<SpectralPeak> = rows.iter().map(|&(f, p)| SpectralPeak { freq_hz: f, power: p }).collect();
        let mut buf = Vec::new();
        io::write_peaks(&mut buf, &peaks).unwrap();
        prop_assert_eq!(io::read_peaks(buf.as_slice()).unwrap(), peaks);
    }

    #[test]
    fn series_csv_round_trip(t in prop::collection::vec(finite(), 1..30), scale in finite()) {
        let table = io::SeriesTable { mean_n: t.iter().map(|x| x * 0.5 + scale).collect(), t_seconds: t };
        prop_assume!(table.mean_n.iter().all(|x| x.is_finite()));
        let mut buf = Vec::new();
        io::write_series(&mut buf, &table).unwrap();
        prop_assert_eq!(io::read_series(buf.as_slice()).unwrap(), table);
    }

    #[test]
    fn section_csv_round_trip(orbits in prop::collection::vec(prop::collection::vec((finite(), finite()), 1..5), 1..5)) {
        let orbits: Vec<Vec<PhasePoint>> =
            orbits.iter().map(|o| o.iter().map(|&(phi, n)| PhasePoint { phi, n }).collect()).collect();
        let mut buf = Vec::new();
        io::write_section(&mut buf, &orbits).unwrap();
        prop_assert_eq!(io::read_section(buf.as_slice()).unwrap(), orbits);
    }

    #[test]
    fn grid_text_round_trip(values in prop::collection::vec(0.0..1e3f64, 12), range in 0.5..50.0f64) {
        let s = StateVector::basis(Lattice::new(2), 0).unwrap();
        let mut g = husimi_grid(&s, 4, 3, range, 1.0).unwrap();
        for (b, row) in g.values.iter_mut().enumerate() {
            row.copy_from_slice(&values[4 * b..4 * b + 4]);
        }
        let mut buf = Vec::new();
        g.write(&mut buf).unwrap();
        prop_assert_eq!(PhaseGrid::read(buf.as_slice()).unwrap(), g);
    }

    #[test]
    fn resolved_config_round_trip(alpha in 0.0..20.0f64, n0 in -5.0..5.0f64, sigma in 0.5..2.0f64, threshold in 0.001..0.25f64) {
        let mut layer = preset("texas-a9.7").unwrap();
        layer.alpha = Some(alpha);
        layer.n0 = Some(n0);
        layer.sigma = Some(sigma);
        layer.threshold = Some(threshold);
        let cfg = RunConfig::resolve(&layer).unwrap();
        let back = RunConfig::resolve(&ConfigLayer::parse_str(&cfg.to_resolved_string()).unwrap()).unwrap();
        prop_assert_eq!(back, RunConfig { preset: None, ..cfg });
    }
}
