use std::f64::consts::PI;

use proptest::prelude::*;
use wqed::circuit::{circuit_to_model, model_to_circuit};
use wqed::krylov::LinearOperator;
use wqed::lattice::Branch;
use wqed::matching::{
    build_scatterer_auto, inelastic_threshold, scatter_single_photon, scatter_with, Incidence, MatchingOptions,
    ScattererSpec,
};
use wqed::matter::DipoleSpec;
use wqed::models::{
    build_full_coulomb, build_full_dipole, build_spin_boson, excitation_number, lowest_spectrum, spin_boson_basis,
    Gauge, SpinBosonModel, WaveguideSpec,
};
use wqed::polaron::solve_polaron;
use wqed::rwa_scattering::{transmission_coulomb_rwa, transmission_dipole_rwa};
use wqed::spectral::{self_energy_assembled, self_energy_rwa, spectral_density_dipole};
use wqed::sweeps::{Cell, Grid, Method, SweepPlan};
use wqed::{Complex64, Lattice};

fn lattice() -> Lattice {
    Lattice::new(1.0, -1.0 / PI).unwrap()
}

/// Frequencies strictly inside the default band.
fn in_band() -> impl Strategy<Value = f64> {
    let lat = lattice();
    let hw = lat.half_width();
    (-0.999..0.999f64).prop_map(move |u| lat.omega_c + u * hw)
}

fn small_dipole() -> DipoleSpec {
    DipoleSpec {
        grid_points: 512,
        ..DipoleSpec::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn retarded_root_solves_dispersion(e in in_band()) {
        let lat = lattice();
        let z = lat.root(e, Branch::Retarded).unwrap();
        prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        let back = lat.omega_c + lat.xi * (z + 1.0 / z);
        prop_assert!((back - Complex64::new(e, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn evanescent_root_decays(u in 1.001..3.0f64, above in any::<bool>()) {
        let lat = lattice();
        let e = lat.omega_c + if above { u } else { -u } * lat.half_width();
        let z = lat.root(e, Branch::Retarded).unwrap();
        prop_assert!(z.norm() < 1.0);
        prop_assert!((lat.omega_c + lat.xi * (z + 1.0 / z) - e).norm() < 1e-12);
    }

    #[test]
    fn rwa_amplitudes_are_unitary(w in in_band(), g in 0.0..0.6f64, delta in 0.5..1.5f64) {
        let lat = lattice();
        for p in [transmission_dipole_rwa(w, delta, g, &lat).unwrap(), transmission_coulomb_rwa(w, delta, g, &lat).unwrap()] {
            let u = p.t.norm_sqr() + (p.t - 1.0).norm_sqr();
            prop_assert!((u - 1.0).abs() < 1e-10, "{}", u);
        }
    }

    #[test]
    fn damping_is_half_spectral_density(w in in_band(), g in 0.0..1.0f64) {
        let lat = lattice();
        let s = self_energy_rwa(w, g, &lat).unwrap();
        let j = spectral_density_dipole(w, g, &lat).unwrap();
        prop_assert!((s.imag_part - 0.5 * j).abs() <= 1e-12 * j.max(1.0));
    }

    #[test]
    fn assembled_self_energy_matches_closed_form(w in in_band(), g in 0.0..1.0f64) {
        let lat = lattice();
        let closed = self_energy_rwa(w, g, &lat).unwrap().complex();
        let assembled = self_energy_assembled(w, g, &lat, Branch::Retarded).unwrap();
        prop_assert!((closed - assembled).norm() < 1e-10);
    }

    #[test]
    fn circuit_round_trip(omega_r in 0.5..5.0f64, frac in 0.01..0.49f64, g in 0.01..0.5f64, c_r in 0.1..10.0f64) {
        let xi_r = frac * omega_r;
        let d = model_to_circuit(omega_r, xi_r, g, c_r).unwrap();
        let m = circuit_to_model(&d.with_junction(0.1, 1.0, 0.0), 7).unwrap();
        prop_assert!((m.omega_r - omega_r).abs() < 1e-12 * omega_r);
        prop_assert!((m.xi_r - xi_r).abs() < 1e-12 * omega_r);
        prop_assert!((m.xi_r / m.omega_r - m.l_sigma / d.l_c).abs() < 1e-12);
    }

    #[test]
    fn csv_floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let mut t = wqed::sweeps::Table::new("probe", vec!["x".into()]);
        t.rows.push(vec![Cell::num(x)]);
        let csv = t.to_csv();
        let cell = csv.lines().nth(2).unwrap();
        prop_assert_eq!(cell.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn increasing_grids_validate(mut v in prop::collection::vec(0.0..0.5f64, 2..8)) {
        v.sort_by(f64::total_cmp);
        v.dedup();
        let plan = SweepPlan { method: Method::Polaron, g_grid: Grid::Values(v.clone()), ..SweepPlan::default() };
        prop_assert!(plan.validate().is_ok());
        if v.len() > 1 {
            v.reverse();
            let plan = SweepPlan { method: Method::Polaron, g_grid: Grid::Values(v), ..SweepPlan::default() };
            prop_assert!(plan.validate().is_err());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn spin_boson_is_hermitian_and_rwa_conserves_excitations(g in 0.0..0.5f64, delta in 0.5..1.5f64, coulomb in any::<bool>()) {
        let w = WaveguideSpec { photon_cutoff: 2, ..WaveguideSpec::default() };
        let gauge = if coulomb { Gauge::Coulomb } else { Gauge::Dipole };
        for rwa in [false, true] {
            let op = build_spin_boson(&w, delta, g, gauge, rwa).unwrap();
            prop_assert!(op.hermiticity_error() < 1e-12);
            if rwa {
                let h = op.csr();
                let n = excitation_number(&op, &spin_boson_basis(&w, true)).csr();
                let v: Vec<Complex64> = (0..op.dim).map(|i| Complex64::new((i as f64 * 0.37 + g).sin(), (i as f64 * 1.1).cos())).collect();
                let zero = Complex64::new(0.0, 0.0);
                let (mut a, mut b, mut c, mut d) = (vec![zero; op.dim], vec![zero; op.dim], vec![zero; op.dim], vec![zero; op.dim]);
                n.apply(&v, &mut a);
                h.apply(&a, &mut b);
                h.apply(&v, &mut c);
                n.apply(&c, &mut d);
                let err = b.iter().zip(&d).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                prop_assert!(err < 1e-12);
            }
        }
    }

    #[test]
    fn polaron_gap_is_suppressed_and_variational(g in 0.0..0.5f64) {
        let model = SpinBosonModel::new(lattice(), 401, 1.0, g, Gauge::Dipole).unwrap();
        let s = solve_polaron(&model).unwrap();
        prop_assert!(s.delta_r <= 1.0 && s.delta_r > 0.0);
        prop_assert!(s.residual < 1e-10);
        prop_assert!(s.energy_trace.last().unwrap() <= s.energy_trace.first().unwrap());
    }

    #[test]
    fn elastic_flux_and_reciprocity_below_threshold(g in 0.05..0.3f64, u in 0.02..0.98f64) {
        let spec = ScattererSpec { g, ..ScattererSpec::default() };
        let scat = build_scatterer_auto(&spec).unwrap();
        let lat = lattice();
        let top = inelastic_threshold(&scat).unwrap_or(lat.upper_edge()).min(lat.upper_edge());
        let w = lat.lower_edge() + u * (top - lat.lower_edge());
        let left = scatter_single_photon(&scat, w).unwrap();
        prop_assert!((left.big_t + left.big_r - 1.0).abs() < 1e-6);
        prop_assert!(left.flux_error < 1e-6);
        let right = scatter_with(&scat, w, MatchingOptions { incidence: Incidence::Right, ..MatchingOptions::default() }).unwrap();
        prop_assert!((left.big_t - right.big_t).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn gauges_coincide_without_coupling(levels in 2usize..5, cutoff in 1usize..3) {
        let w = WaveguideSpec { photon_cutoff: cutoff, ..WaveguideSpec::default() };
        let d = small_dipole();
        let a = lowest_spectrum(&build_full_coulomb(&w, &d, levels).unwrap(), 4).unwrap();
        let b = lowest_spectrum(&build_full_dipole(&w, &d, levels).unwrap(), 4).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn ground_energy_decreases_with_cutoff(g in 0.05..0.3f64) {
        let d = small_dipole();
        let (lambda, _) = wqed::matter::lambda_for_coupling(&d, g, 1.0).unwrap();
        let d = d.with_lambda(lambda);
        let e: Vec<f64> = (1..4)
            .map(|c| {
                let w = WaveguideSpec { photon_cutoff: c, ..WaveguideSpec::default() };
                lowest_spectrum(&build_full_dipole(&w, &d, 3).unwrap(), 1).unwrap()[0]
            })
            .collect();
        prop_assert!(e.windows(2).all(|p| p[1] <= p[0] + 1e-10), "{:?}", e);
    }
}
