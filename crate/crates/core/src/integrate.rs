//! Fixed-step fourth-order Magnus propagation of `i ψ' = H(t) ψ` for small
//! dense Hermitian `H(t)`.
//!
//! Each step samples `H` at the two Gauss-Legendre nodes and applies the exact
//! exponential of the fourth-order Magnus generator, so the propagator is
//! unitary up to rounding and no renormalization is ever needed.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

use crate::{Error, Result, C64};

/// Steps per period of the fastest frequency present in `H(t)`.
pub const STEPS_PER_CYCLE: usize = 40;

/// Default bound on `| |ψ|² - |ψ0|² |` along a trajectory.
pub const NORM_TOL: f64 = 1e-9;

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3/6

/// Largest step that resolves angular frequency `fastest` with `steps_per_cycle`
/// samples per period.
pub fn max_step(fastest: f64, steps_per_cycle: usize) -> f64 {
    2.0 * PI / fastest / steps_per_cycle as f64
}

/// Refuses steps coarser than [`max_step`] (with a 1e-12 relative slack for
/// callers that pass exactly the bound).
pub fn check_step(dt: f64, fastest: f64, steps_per_cycle: usize) -> Result<()> {
    let required = max_step(fastest, steps_per_cycle);
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
    }
    if dt > required * (1.0 + 1e-12) {
        return Err(Error::StepTooCoarse { dt, required });
    }
    Ok(())
}

/// Uniform grid `0, h, ..., t_end` with `h <= dt` and an integer step count.
pub fn step_grid(t_end: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::Domain(format!("t_end must be >= 0, got {t_end}")));
    }
    if t_end == 0.0 {
        return Ok((0, dt));
    }
    let n = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((n, t_end / n as f64))
}

/// `exp(-i h H)` for Hermitian `H`, through its eigendecomposition.
pub fn expm_hermitian(h: &DMatrix<C64>, dt: f64) -> DMatrix<C64> {
    let n = h.nrows();
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &w) in eig.eigenvalues.iter().enumerate() {
        let phase = C64::from_polar(1.0, -w * dt);
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    scaled * v.adjoint()
}

/// One fourth-order Magnus step from `t` to `t + dt`.
pub fn magnus_step<F>(h: &F, t: f64, dt: f64, psi: &DVector<C64>) -> DVector<C64>
where
    F: Fn(f64) -> DMatrix<C64>,
{
    let h1 = h(t + (0.5 - GAUSS_OFFSET) * dt);
    let h2 = h(t + (0.5 + GAUSS_OFFSET) * dt);
    let comm = &h2 * &h1 - &h1 * &h2;
    let heff = (&h1 + &h2) * C64::new(0.5, 0.0) + comm * C64::new(0.0, -GAUSS_OFFSET * dt / 2.0);
    expm_hermitian(&heff, dt) * psi
}

/// Propagates `psi0` from 0 to `t_end`, returning every grid point
/// (including both ends).
pub fn propagate<F>(h: F, psi0: &DVector<C64>, t_end: f64, dt: f64) -> Result<(Vec<f64>, Vec<DVector<C64>>)>
where
    F: Fn(f64) -> DMatrix<C64>,
{
    let (n, step) = step_grid(t_end, dt)?;
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut psi = psi0.clone();
    times.push(0.0);
    states.push(psi.clone());
    for k in 0..n {
        let t = k as f64 * step;
        psi = magnus_step(&h, t, step, &psi);
        times.push(if k + 1 == n { t_end } else { (k + 1) as f64 * step });
        states.push(psi.clone());
    }
    Ok((times, states))
}

/// Fails with [`Error::NormDrift`] at the first sample whose squared norm
/// differs from 1 by more than `tol`.
pub fn check_norm(times: &[f64], norms: impl IntoIterator<Item = f64>, tol: f64) -> Result<()> {
    for (t, n) in times.iter().zip(norms) {
        let drift = (n - 1.0).abs();
        if !(drift <= tol) {
            return Err(Error::NormDrift { t: *t, drift, tol });
        }
    }
    Ok(())
}

/// Fails with [`Error::NotNormalized`] unless `| Σ|a|² - 1 | <= 1e-12`.
pub fn check_normalized(amps: &[C64]) -> Result<()> {
    let norm_sqr: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    if (norm_sqr - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { norm_sqr });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn static_hamiltonian_is_exact() {
        // σx with unit coupling: c1 = -i sin t.
        let h = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let psi0 = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let (t, s) = propagate(|_| h.clone(), &psi0, 2.0, 0.1).unwrap();
        assert_eq!(t.len(), 21);
        assert_eq!(*t.last().unwrap(), 2.0);
        let last = s.last().unwrap();
        assert!((last[0] - c(2.0f64.cos(), 0.0)).norm() < 1e-13);
        assert!((last[1] - c(0.0, -(2.0f64.sin()))).norm() < 1e-13);
    }

    #[test]
    fn fourth_order_convergence() {
        // Linearly chirped two-level system; exact answer from a very fine run.
        let h = |t: f64| DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(3.0 * t, 0.0)]);
        let psi0 = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let run = |dt| propagate(h, &psi0, 2.0, dt).unwrap().1.pop().unwrap();
        let exact = run(1e-4);
        let e1 = (run(0.04) - &exact).norm();
        let e2 = (run(0.02) - &exact).norm();
        let order = (e1 / e2).log2();
        assert!(order > 3.7 && order < 4.5, "observed order {order}");
    }

    #[test]
    fn step_checks() {
        assert!(check_step(max_step(20.0, 40), 20.0, 40).is_ok());
        match check_step(0.01, 20.0, 40) {
            Err(Error::StepTooCoarse { required, .. }) => assert!((required - PI / 400.0).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        assert_eq!(step_grid(1.0, 0.3).unwrap().0, 4);
        assert_eq!(step_grid(1.0, 0.25).unwrap().0, 4);
        assert_eq!(step_grid(0.0, 0.25).unwrap().0, 0);
    }

    #[test]
    fn normalization_checks() {
        assert!(check_normalized(&[c(0.6, 0.0), c(0.0, 0.8)]).is_ok());
        assert!(matches!(
            check_normalized(&[c(1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(check_norm(&[0.0, 1.0], [1.0, 1.0 + 2e-9], 1e-9).is_err());
    }
}
