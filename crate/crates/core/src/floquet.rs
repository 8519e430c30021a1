//! Harmonic (Floquet) ladder of the rotating-frame state.
//!
//! With `β = e^{-i(2ωt+2φ)}` the rotating-frame amplitudes are expanded as
//! `c̃0 = Σ a_n βⁿ`, `c̃1 = Σ b_n βⁿ`, which turns the periodically driven
//! two-level system into the chain
//!
//! ```text
//! ȧ_n = 2inω a_n + i g_o/2 (b_n + b_{n-1})
//! ḃ_n = 2inω b_n - i(ε-ω) b_n + i g_o/2 (a_n + a_{n+1})
//! ```
//!
//! truncated hard at `|n| <= N`. `N = 0` is exactly the rotating-wave
//! approximation.

use nalgebra::{DMatrix, DVector};
use std::io::{self, Write};

use crate::integrate::{self, NORM_TOL, STEPS_PER_CYCLE};
use crate::model::{g_envelope, StateVector};
use crate::semiclassical::{Frame, Rotation, Trajectory};
use crate::{csv, DriveField, Error, Result, TimeSeries, TwoLevelState, C64};

/// Order used by ladder analyses unless told otherwise.
pub const DEFAULT_ORDER: usize = 3;

/// Coefficients `(a_n, b_n)` for `n` in `[-N, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicLadder {
    order: usize,
    a: Vec<C64>,
    b: Vec<C64>,
}

impl HarmonicLadder {
    pub fn zeros(order: usize) -> Self {
        let len = 2 * order + 1;
        Self {
            order,
            a: vec![C64::new(0.0, 0.0); len],
            b: vec![C64::new(0.0, 0.0); len],
        }
    }

    /// All amplitude in the `n = 0` rung.
    pub fn from_rotating_state(order: usize, s: TwoLevelState) -> Self {
        let mut l = Self::zeros(order);
        l.a[order] = s.c0;
        l.b[order] = s.c1;
        l
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn index(&self, n: i64) -> Option<usize> {
        let k = n + self.order as i64;
        (0..self.a.len() as i64).contains(&k).then_some(k as usize)
    }

    /// `a_n`, or zero outside the truncation.
    pub fn a(&self, n: i64) -> C64 {
        self.index(n).map_or(C64::new(0.0, 0.0), |k| self.a[k])
    }

    pub fn b(&self, n: i64) -> C64 {
        self.index(n).map_or(C64::new(0.0, 0.0), |k| self.b[k])
    }

    pub fn set(&mut self, n: i64, a: C64, b: C64) -> Result<()> {
        let k = self
            .index(n)
            .ok_or_else(|| Error::Domain(format!("rung {n} outside order {}", self.order)))?;
        self.a[k] = a;
        self.b[k] = b;
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a.iter().chain(&self.b).map(|c| c.norm_sqr()).sum()
    }

    fn to_vector(&self) -> DVector<C64> {
        DVector::from_iterator(self.a.len() * 2, self.a.iter().chain(&self.b).copied())
    }

    fn from_vector(order: usize, v: &DVector<C64>) -> Self {
        let len = 2 * order + 1;
        Self {
            order,
            a: v.rows(0, len).iter().copied().collect(),
            b: v.rows(len, len).iter().copied().collect(),
        }
    }
}

/// Rotating-frame amplitudes `(Σ a_n βⁿ, Σ b_n βⁿ)` at time `t`.
pub fn reconstruct(ladder: &HarmonicLadder, field: &DriveField, t: f64) -> TwoLevelState {
    let beta = C64::from_polar(1.0, -2.0 * (field.omega() * t + field.phi()));
    let n0 = -(ladder.order as i64);
    let mut power = beta.powi(n0 as i32);
    let mut c0 = C64::new(0.0, 0.0);
    let mut c1 = C64::new(0.0, 0.0);
    for (a, b) in ladder.a.iter().zip(&ladder.b) {
        c0 += a * power;
        c1 += b * power;
        power *= beta;
    }
    TwoLevelState::new(c0, c1)
}

/// Lab-frame amplitudes at time `t`.
pub fn reconstruct_lab(ladder: &HarmonicLadder, field: &DriveField, t: f64) -> TwoLevelState {
    let s = reconstruct(ladder, field, t);
    TwoLevelState::new(s.c0, s.c1 * C64::from_polar(1.0, -(field.omega() * t + field.phi())))
}

/// Ladder coefficients sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct LadderTrajectory {
    pub field: DriveField,
    pub order: usize,
    pub times: Vec<f64>,
    pub ladders: Vec<HarmonicLadder>,
}

impl LadderTrajectory {
    /// Reconstructed rotating-frame trajectory.
    pub fn reconstruct(&self) -> Trajectory<TwoLevelState> {
        Trajectory {
            times: self.times.clone(),
            states: self
                .times
                .iter()
                .zip(&self.ladders)
                .map(|(&t, l)| reconstruct(l, &self.field, t))
                .collect(),
            frame: Frame::Rotating,
            rotation: Rotation::two_level(&self.field),
        }
    }

    /// `max_t |x_n(t)|` for the `a` (or `b`) coefficient of rung `n`.
    pub fn max_abs(&self, n: i64, upper: bool) -> f64 {
        self.ladders
            .iter()
            .map(|l| if upper { l.b(n) } else { l.a(n) }.norm())
            .fold(0.0, f64::max)
    }

    /// Long-format rows `t,n,re_a,im_a,re_b,im_b`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        csv::write_header(w, &["t", "n", "re_a", "im_a", "re_b", "im_b"])?;
        let n = self.order as i64;
        for (t, l) in self.times.iter().zip(&self.ladders) {
            for k in -n..=n {
                let (a, b) = (l.a(k), l.b(k));
                csv::write_row(w, &[*t, k as f64, a.re, a.im, b.re, b.im])?;
            }
        }
        Ok(())
    }
}

/// Largest step accepted for a ladder of order `order`.
pub fn ladder_max_dt(field: &DriveField, order: usize) -> f64 {
    integrate::max_step(2.0 * order.max(1) as f64 * field.omega(), STEPS_PER_CYCLE)
}

fn ladder_generator(field: DriveField, order: usize) -> impl Fn(f64) -> DMatrix<C64> {
    let len = 2 * order + 1;
    let det = field.detuning();
    let omega = field.omega();
    move |t| {
        let mut k = DMatrix::from_element(2 * len, 2 * len, C64::new(0.0, 0.0));
        let c = C64::new(-0.5 * g_envelope(&field, t).expect("t >= 0"), 0.0);
        for i in 0..len {
            let n = i as f64 - order as f64;
            k[(i, i)] = C64::new(-2.0 * n * omega, 0.0);
            k[(len + i, len + i)] = C64::new(-2.0 * n * omega + det, 0.0);
            // a_n - b_n
            k[(i, len + i)] = c;
            k[(len + i, i)] = c;
            // a_n - b_{n-1}
            if i > 0 {
                k[(i, len + i - 1)] = c;
                k[(len + i - 1, i)] = c;
            }
        }
        k
    }
}

/// Evolves the truncated ladder from `init` (lab frame) placed in the `n = 0`
/// rung.
pub fn evolve_ladder(
    field: &DriveField,
    order: usize,
    init: TwoLevelState,
    t_end: f64,
    dt: f64,
) -> Result<LadderTrajectory> {
    integrate::check_normalized(&init.amplitudes())?;
    integrate::check_step(dt, 2.0 * order.max(1) as f64 * field.omega(), STEPS_PER_CYCLE)?;
    let rot = TwoLevelState::new(init.c0, init.c1 * C64::from_polar(1.0, field.phi()));
    let x0 = HarmonicLadder::from_rotating_state(order, rot).to_vector();
    let (times, xs) = integrate::propagate(ladder_generator(*field, order), &x0, t_end, dt)?;
    integrate::check_norm(&times, xs.iter().map(|x| x.norm_squared()), NORM_TOL)?;
    Ok(LadderTrajectory {
        field: *field,
        order,
        ladders: xs.iter().map(|x| HarmonicLadder::from_vector(order, x)).collect(),
        times,
    })
}

/// One row of [`truncation_scan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationRow {
    pub order: usize,
    /// `max_t | |c1|²_N - |c1|²_{N_max} |`
    pub deviation: f64,
}

/// Excited-state population error of every order `0..=n_max` against the
/// `n_max` ladder, all on the grid required by `n_max`. Starts in `|0⟩`.
pub fn truncation_scan(field: &DriveField, n_max: usize, t_end: f64) -> Result<Vec<TruncationRow>> {
    if n_max < 2 {
        return Err(Error::Domain(format!("truncation scan needs N_max >= 2, got {n_max}")));
    }
    let dt = ladder_max_dt(field, n_max);
    let pop = |order| -> Result<TimeSeries> {
        Ok(evolve_ladder(field, order, TwoLevelState::ground(), t_end, dt)?
            .reconstruct()
            .population(1))
    };
    let reference = pop(n_max)?;
    (0..=n_max)
        .map(|order| {
            let p = pop(order)?;
            let deviation = p
                .y()
                .iter()
                .zip(reference.y())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            Ok(TruncationRow { order, deviation })
        })
        .collect()
}
