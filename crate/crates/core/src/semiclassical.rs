//! Classical-field dynamics of the driven two-level and lambda systems.
//!
//! Two-level runs integrate in the frame rotating at the drive,
//! `c̃1 = e^{i(ωt+φ)} c1`, where the Hamiltonian is
//!
//! ```text
//! H̃ = [[0, h], [h*, ε-ω]],   h = -[g_o(t)(1 + e^{-2iθ}) + g_dc e^{-iθ}] / 2,   θ = ωt + φ
//! ```
//!
//! and the rotating-wave reference simply drops the `e^{-2iθ}` and dc terms.
//! The lambda system uses `c̃ = (c0, e^{iθ1} c1, e^{i(θ1-θ2)} c2)` with
//! `θj = νj t + φj`.

use log::warn;
use nalgebra::{DMatrix, DVector};
use std::io::{self, Write};

use crate::integrate::{self, NORM_TOL, STEPS_PER_CYCLE};
use crate::model::{g_envelope, StateVector};
use crate::{csv, DriveField, Error, LambdaConfig, Result, ThreeLevelState, TimeSeries, TwoLevelState, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    Rotating,
}

/// Per-level phase `θ_k(t) = rate_k t + offset_k` relating the two frames:
/// `c̃_k = e^{iθ_k} c_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    pub rates: Vec<f64>,
    pub offsets: Vec<f64>,
}

impl Rotation {
    pub fn two_level(field: &DriveField) -> Self {
        Self {
            rates: vec![0.0, field.omega()],
            offsets: vec![0.0, field.phi()],
        }
    }

    pub fn lambda(cfg: &LambdaConfig) -> Self {
        Self {
            rates: vec![0.0, cfg.nu1(), cfg.nu1() - cfg.nu2()],
            offsets: vec![0.0, cfg.phi1, cfg.phi1 - cfg.phi2],
        }
    }

    fn apply<S: StateVector>(&self, t: f64, s: &S, sign: f64) -> S {
        let a: Vec<C64> = s
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(k, c)| c * C64::from_polar(1.0, sign * (self.rates[k] * t + self.offsets[k])))
            .collect();
        S::from_amplitudes(&a)
    }
}

/// Sampled state of a few-level system, tagged with the frame it is stored in.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub frame: Frame,
    pub rotation: Rotation,
}

impl<S: StateVector> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&S> {
        self.states.last()
    }

    pub fn to_lab(&self) -> Self {
        self.convert(Frame::Lab)
    }

    pub fn to_rotating(&self) -> Self {
        self.convert(Frame::Rotating)
    }

    fn convert(&self, target: Frame) -> Self {
        if self.frame == target {
            return self.clone();
        }
        let sign = if target == Frame::Lab { -1.0 } else { 1.0 };
        let states = self
            .times
            .iter()
            .zip(&self.states)
            .map(|(&t, s)| self.rotation.apply(t, s, sign))
            .collect();
        Self {
            times: self.times.clone(),
            states,
            frame: target,
            rotation: self.rotation.clone(),
        }
    }

    /// `|c_level|²` at every sample; frame independent.
    pub fn population(&self, level: usize) -> TimeSeries {
        let y = self.states.iter().map(|s| s.population(level)).collect();
        TimeSeries::new(self.times.clone(), y).expect("trajectory grid is increasing")
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.states.iter().fold(0.0, |m, s| m.max((s.norm_sqr() - 1.0).abs()))
    }

    pub fn check_norm(&self, tol: f64) -> Result<()> {
        integrate::check_norm(&self.times, self.states.iter().map(|s| s.norm_sqr()), tol)
    }

    /// Writes `t,re_c0,im_c0,...,pop0,...` rows in the trajectory's frame.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let levels = S::LEVELS;
        let mut header = vec!["t".to_string()];
        for k in 0..levels {
            header.push(format!("re_c{k}"));
            header.push(format!("im_c{k}"));
        }
        for k in 0..levels {
            header.push(format!("pop{k}"));
        }
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        csv::write_header(w, &header)?;
        let mut row = Vec::with_capacity(1 + 3 * levels);
        for (t, s) in self.times.iter().zip(&self.states) {
            row.clear();
            row.push(*t);
            let a = s.amplitudes();
            for c in &a {
                row.push(c.re);
                row.push(c.im);
            }
            for c in &a {
                row.push(c.norm_sqr());
            }
            csv::write_row(w, &row)?;
        }
        Ok(())
    }
}

/// Step size the two-level solvers use by default: 40 steps per period of 2ω.
pub fn default_dt(field: &DriveField) -> f64 {
    integrate::max_step(2.0 * field.omega(), STEPS_PER_CYCLE)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TwoLevelTerms {
    counter_rotating: bool,
    dc: bool,
}

fn rotating_hamiltonian(field: DriveField, terms: TwoLevelTerms) -> impl Fn(f64) -> DMatrix<C64> {
    let det = C64::new(field.detuning(), 0.0);
    move |t| {
        let g = g_envelope(&field, t).expect("t >= 0 on the integration grid");
        let theta = field.omega() * t + field.phi();
        let mut h = C64::new(g, 0.0);
        if terms.counter_rotating {
            h += g * C64::from_polar(1.0, -2.0 * theta);
        }
        if terms.dc && field.g_dc() != 0.0 {
            h += field.g_dc() * C64::from_polar(1.0, -theta);
        }
        h *= -0.5;
        DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), h, h.conj(), det])
    }
}

fn run_two_level(
    field: &DriveField,
    init: TwoLevelState,
    t_end: f64,
    dt: f64,
    terms: TwoLevelTerms,
) -> Result<Trajectory<TwoLevelState>> {
    integrate::check_normalized(&init.amplitudes())?;
    integrate::check_step(dt, 2.0 * field.omega(), STEPS_PER_CYCLE)?;
    let rotation = Rotation::two_level(field);
    // The initial state is given in the lab frame.
    let psi0 = DVector::from_vec(rotation.apply(0.0, &init, 1.0).amplitudes());
    let (times, psis) = integrate::propagate(rotating_hamiltonian(*field, terms), &psi0, t_end, dt)?;
    let traj = Trajectory {
        times,
        states: psis
            .iter()
            .map(|p| TwoLevelState::from_amplitudes(p.as_slice()))
            .collect(),
        frame: Frame::Rotating,
        rotation,
    };
    traj.check_norm(NORM_TOL)?;
    Ok(traj)
}

/// Full (counter-rotating) dynamics of the ac-driven two-level system. Any
/// dc component of `field` is ignored; see [`evolve_two_level_dc`].
///
/// `init` is given in the lab frame; the trajectory is returned in the
/// rotating frame.
pub fn evolve_two_level(
    field: &DriveField,
    init: TwoLevelState,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory<TwoLevelState>> {
    run_two_level(
        field,
        init,
        t_end,
        dt,
        TwoLevelTerms {
            counter_rotating: true,
            dc: false,
        },
    )
}

/// As [`evolve_two_level`], with the static coupling `g_dc` added.
pub fn evolve_two_level_dc(
    field: &DriveField,
    init: TwoLevelState,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory<TwoLevelState>> {
    run_two_level(
        field,
        init,
        t_end,
        dt,
        TwoLevelTerms {
            counter_rotating: true,
            dc: true,
        },
    )
}

/// Rotating-wave dynamics: counter-rotating and dc terms removed.
pub fn rwa_reference(
    field: &DriveField,
    init: TwoLevelState,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory<TwoLevelState>> {
    run_two_level(
        field,
        init,
        t_end,
        dt,
        TwoLevelTerms {
            counter_rotating: false,
            dc: false,
        },
    )
}

/// Direct integration of the lab-frame Hamiltonian
/// `[[0, g(t)], [g(t), ε]]`, `g(t) = -g_o(t) cos(ωt+φ) - g_dc/2`.
/// Much slower than the rotating-frame solver; kept as an independent check.
pub fn evolve_two_level_lab(
    field: &DriveField,
    init: TwoLevelState,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory<TwoLevelState>> {
    integrate::check_normalized(&init.amplitudes())?;
    let fastest = field.epsilon().abs() + field.omega();
    integrate::check_step(dt, fastest, STEPS_PER_CYCLE)?;
    let f = *field;
    let eps = C64::new(f.epsilon(), 0.0);
    let h = move |t: f64| {
        let g = -g_envelope(&f, t).expect("t >= 0") * (f.omega() * t + f.phi()).cos() - 0.5 * f.g_dc();
        let g = C64::new(g, 0.0);
        DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), g, g, eps])
    };
    let psi0 = DVector::from_vec(init.amplitudes());
    let (times, psis) = integrate::propagate(h, &psi0, t_end, dt)?;
    let traj = Trajectory {
        times,
        states: psis
            .iter()
            .map(|p| TwoLevelState::from_amplitudes(p.as_slice()))
            .collect(),
        frame: Frame::Lab,
        rotation: Rotation::two_level(field),
    };
    traj.check_norm(NORM_TOL)?;
    Ok(traj)
}

/// Incoherent mixture of trajectories; populations are weight-averaged.
#[derive(Debug, Clone)]
pub struct Mixture<S> {
    pub weights: Vec<f64>,
    pub branches: Vec<Trajectory<S>>,
}

impl<S: StateVector> Mixture<S> {
    pub fn population(&self, level: usize) -> TimeSeries {
        let times = self.branches[0].times.clone();
        let mut y = vec![0.0; times.len()];
        for (w, b) in self.weights.iter().zip(&self.branches) {
            for (acc, s) in y.iter_mut().zip(&b.states) {
                *acc += w * s.population(level);
            }
        }
        TimeSeries::new(times, y).expect("trajectory grid is increasing")
    }
}

/// Starts from the diagonal density matrix `diag(1 - a0, a0)` and evolves
/// each pure branch, with (`counter_rotating`) or without the full coupling.
pub fn evolve_mixture(
    field: &DriveField,
    a0: f64,
    t_end: f64,
    dt: f64,
    counter_rotating: bool,
) -> Result<Mixture<TwoLevelState>> {
    if !(0.0..=1.0).contains(&a0) {
        return Err(Error::Domain(format!(
            "initial excited population must lie in [0, 1], got {a0}"
        )));
    }
    let run = |init| {
        if counter_rotating {
            evolve_two_level(field, init, t_end, dt)
        } else {
            rwa_reference(field, init, t_end, dt)
        }
    };
    Ok(Mixture {
        weights: vec![1.0 - a0, a0],
        branches: vec![run(TwoLevelState::ground())?, run(TwoLevelState::excited())?],
    })
}

/// Default lambda step: 40 steps per period of the fastest rotating-frame term.
pub fn lambda_default_dt(cfg: &LambdaConfig) -> f64 {
    integrate::max_step(lambda_fastest(cfg), STEPS_PER_CYCLE)
}

fn lambda_fastest(cfg: &LambdaConfig) -> f64 {
    2.0 * cfg.nu1().abs().max(cfg.nu2().abs()) + cfg.delta.abs()
}

fn lambda_hamiltonian(cfg: LambdaConfig, rwa: bool) -> impl Fn(f64) -> DMatrix<C64> {
    let half_g = 0.5 * cfg.g;
    move |t| {
        let th1 = cfg.nu1() * t + cfg.phi1;
        let th2 = cfg.nu2() * t + cfg.phi2;
        let one = C64::new(1.0, 0.0);
        let (a, b) = if rwa {
            (one, one)
        } else if cfg.cross_coupling {
            // Both fields on both legs: the coupling of each leg is
            // -g [cos θ1 + cos θ2] before the frame change.
            let sum = 2.0 * (th1.cos() + th2.cos());
            (C64::from_polar(sum, -th1), C64::from_polar(sum, th2))
        } else {
            (
                one + C64::from_polar(1.0, -2.0 * th1),
                one + C64::from_polar(1.0, 2.0 * th2),
            )
        };
        let a = -half_g * a;
        let b = -half_g * b;
        let z = C64::new(0.0, 0.0);
        DMatrix::from_row_slice(3, 3, &[z, a, z, a.conj(), C64::new(-cfg.delta, 0.0), b, z, b.conj(), z])
    }
}

fn run_lambda(
    cfg: &LambdaConfig,
    init: ThreeLevelState,
    t_end: f64,
    dt: f64,
    rwa: bool,
) -> Result<Trajectory<ThreeLevelState>> {
    cfg.validate()?;
    integrate::check_normalized(&init.amplitudes())?;
    if cfg.delta <= 0.0 && cfg.g > 0.0 {
        warn!(
            "one-photon detuning {} <= 0: the far-detuned Raman rate does not apply",
            cfg.delta
        );
    }
    integrate::check_step(dt, lambda_fastest(cfg), STEPS_PER_CYCLE)?;
    let rotation = Rotation::lambda(cfg);
    let psi0 = DVector::from_vec(rotation.apply(0.0, &init, 1.0).amplitudes());
    let (times, psis) = integrate::propagate(lambda_hamiltonian(*cfg, rwa), &psi0, t_end, dt)?;
    let traj = Trajectory {
        times,
        states: psis
            .iter()
            .map(|p| ThreeLevelState::from_amplitudes(p.as_slice()))
            .collect(),
        frame: Frame::Rotating,
        rotation,
    };
    traj.check_norm(NORM_TOL)?;
    Ok(traj)
}

/// Lambda system under both optical fields with their counter-rotating
/// terms kept. Returned in the lab frame; `init` is given in the lab frame.
pub fn evolve_lambda(
    cfg: &LambdaConfig,
    init: ThreeLevelState,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory<ThreeLevelState>> {
    Ok(run_lambda(cfg, init, t_end, dt, false)?.to_lab())
}

/// Rotating-wave lambda dynamics on the same grid as [`evolve_lambda`].
pub fn evolve_lambda_rwa(
    cfg: &LambdaConfig,
    init: ThreeLevelState,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory<ThreeLevelState>> {
    Ok(run_lambda(cfg, init, t_end, dt, true)?.to_lab())
}
