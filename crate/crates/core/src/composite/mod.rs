//! Atom ⊗ photon-number models: a two-level atom in one quantized mode and
//! a lambda atom in two, truncated to finite photon windows and propagated
//! with a Krylov short-time propagator.

mod evolve;
mod fock;
mod hamiltonian;
mod raman;
mod sparse;

pub use evolve::{evolve_composite, expv, CompositeRun, CompositeTolerances, COMPOSITE_NORM_TOL, KRYLOV_TOL, LEAK_TOL};
pub use fock::{coherent_amplitudes, coherent_capture, FockComposite, PhotonWindow, DEFAULT_WINDOW_K, MIN_CAPTURED};
pub use hamiltonian::{build_2l_hamiltonian, build_3l_hamiltonian, CouplingTerms};
pub use raman::{raman_bso_compare, RamanReport};
pub use sparse::CsrMatrix;

use std::f64::consts::PI;

use crate::{DriveField, Result, C64};

/// Classical drive equivalent to a coherent state `alpha` of a mode coupled
/// with single-photon strength `g`: `g0M = 2g|α|`, `φ = π - arg α`,
/// instantaneous switching.
pub fn semiclassical_equivalent(g: f64, omega: f64, atom_freq: f64, alpha: C64) -> Result<DriveField> {
    DriveField::new(omega, 2.0 * g * alpha.norm())?
        .with_phi(PI - alpha.arg())
        .with_epsilon(atom_freq)
}

/// Two-level atom in `|0⟩` with one mode in the coherent state `alpha`,
/// evolved on the default window.
pub fn coherent_two_level_run(
    g: f64,
    omega: f64,
    atom_freq: f64,
    alpha: C64,
    terms: CouplingTerms,
    t_end: f64,
    dt: f64,
) -> Result<CompositeRun> {
    let window = PhotonWindow::around(alpha, DEFAULT_WINDOW_K);
    let (h, _) = build_2l_hamiltonian(g, omega, atom_freq, window, terms)?;
    let photons = coherent_amplitudes(alpha, window)?;
    let init = FockComposite::product(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], &[(window, photons)])?;
    evolve_composite(&h, &init, t_end, dt, CompositeTolerances::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiclassical::{default_dt, evolve_two_level};
    use crate::TwoLevelState;

    /// Max population deviation from the classical drive over one Rabi period.
    fn deviation(mean_photons: f64) -> f64 {
        let (omega, g_eff) = (10.0, 1.0);
        let alpha = C64::new(mean_photons.sqrt(), 0.0);
        let g = g_eff / (2.0 * alpha.norm());
        let t_end = 2.0 * PI / g_eff;
        let dt = default_dt(&DriveField::new(omega, g_eff).unwrap());
        let run = coherent_two_level_run(g, omega, omega, alpha, CouplingTerms::Full, t_end, dt).unwrap();
        let f = semiclassical_equivalent(g, omega, omega, alpha).unwrap();
        let sc = evolve_two_level(&f, TwoLevelState::ground(), t_end, dt).unwrap();
        run.population(1)
            .y()
            .iter()
            .zip(sc.population(1).y())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    #[test]
    fn equivalent_drive() {
        let f = semiclassical_equivalent(0.025, 10.0, 10.0, C64::new(20.0, 0.0)).unwrap();
        assert!((f.g0m() - 1.0).abs() < 1e-15 && (f.phi() - PI).abs() < 1e-15);
    }

    #[test]
    fn classical_correspondence_bound() {
        // Deviation ≤ C/|α|, C frozen from the |α|² = 100 run (0.241).
        const C: f64 = 0.25;
        for n in [100.0f64, 400.0, 1600.0] {
            let d = deviation(n);
            assert!(d <= C / n.sqrt(), "|α|² = {n}: deviation {d}");
        }
    }
}
