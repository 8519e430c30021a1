//! Domain types and the drive-envelope helpers shared by every solver.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Parameters of the classical drive `-g_o(t) cos(ωt + φ)` acting on a
/// two-level system with transition frequency `epsilon`, optionally with a
/// static (dc) coupling `g_dc`.
///
/// The envelope switches on as `g_o(t) = g0M (1 - exp(-t/tau_sw))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDriveField", into = "RawDriveField")]
pub struct DriveField {
    omega: f64,
    g0m: f64,
    phi: f64,
    tau_sw: f64,
    g_dc: f64,
    epsilon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDriveField {
    omega: f64,
    #[serde(rename = "g0M")]
    g0m: f64,
    #[serde(default)]
    phi: f64,
    #[serde(default)]
    tau_sw: f64,
    #[serde(default)]
    g_dc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
}

impl TryFrom<RawDriveField> for DriveField {
    type Error = Error;

    fn try_from(raw: RawDriveField) -> Result<Self> {
        let mut field = DriveField::new(raw.omega, raw.g0m)?
            .with_phi(raw.phi)
            .with_tau_sw(raw.tau_sw)?
            .with_g_dc(raw.g_dc)?;
        if let Some(eps) = raw.epsilon {
            field = field.with_epsilon(eps)?;
        }
        Ok(field)
    }
}

impl From<DriveField> for RawDriveField {
    fn from(f: DriveField) -> Self {
        RawDriveField {
            omega: f.omega,
            g0m: f.g0m,
            phi: f.phi,
            tau_sw: f.tau_sw,
            g_dc: f.g_dc,
            epsilon: Some(f.epsilon),
        }
    }
}

fn finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::invalid(name, format!("must be finite, got {x}")))
    }
}

impl DriveField {
    /// Resonant drive (`epsilon = omega`), zero phase, instantaneous switching.
    pub fn new(omega: f64, g0m: f64) -> Result<Self> {
        if !(finite("omega", omega)? > 0.0) {
            return Err(Error::invalid("omega", format!("must be > 0, got {omega}")));
        }
        if finite("g0M", g0m)? < 0.0 {
            return Err(Error::invalid("g0M", format!("must be >= 0, got {g0m}")));
        }
        Ok(Self {
            omega,
            g0m,
            phi: 0.0,
            tau_sw: 0.0,
            g_dc: 0.0,
            epsilon: omega,
        })
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_tau_sw(mut self, tau_sw: f64) -> Result<Self> {
        if finite("tau_sw", tau_sw)? < 0.0 {
            return Err(Error::invalid("tau_sw", format!("must be >= 0, got {tau_sw}")));
        }
        self.tau_sw = tau_sw;
        Ok(self)
    }

    /// Switching constant of ten drive periods of the 2ω beat, `10/ω`.
    pub fn with_adiabatic_switching(self) -> Self {
        let tau = 10.0 / self.omega;
        Self { tau_sw: tau, ..self }
    }

    pub fn with_g_dc(mut self, g_dc: f64) -> Result<Self> {
        self.g_dc = finite("g_dc", g_dc)?;
        Ok(self)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.epsilon = finite("epsilon", epsilon)?;
        Ok(self)
    }

    pub fn with_g0m(mut self, g0m: f64) -> Result<Self> {
        if finite("g0M", g0m)? < 0.0 {
            return Err(Error::invalid("g0M", format!("must be >= 0, got {g0m}")));
        }
        self.g0m = g0m;
        Ok(self)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn g0m(&self) -> f64 {
        self.g0m
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }
    pub fn tau_sw(&self) -> f64 {
        self.tau_sw
    }
    pub fn g_dc(&self) -> f64 {
        self.g_dc
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `epsilon - omega`; zero on resonance.
    pub fn detuning(&self) -> f64 {
        self.epsilon - self.omega
    }

    /// Perturbation parameter `g0M / (4ω)`.
    pub fn eta(&self) -> f64 {
        self.g0m / (4.0 * self.omega)
    }

    pub fn envelope(&self, t: f64) -> Result<f64> {
        g_envelope(self, t)
    }

    pub fn mean_rabi(&self, t: f64) -> Result<f64> {
        g_mean(self, t)
    }

    /// Accumulated pulse area `g'_0(t) t = ∫_0^t g_o`.
    pub fn pulse_area(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::Domain(format!("time must be >= 0, got {t}")));
        }
        Ok(self.g0m * switched_time(self.tau_sw, t))
    }

    /// Time at which the accumulated pulse area reaches `area`.
    pub fn time_for_pulse_area(&self, area: f64) -> Result<f64> {
        if !(area >= 0.0) {
            return Err(Error::Domain(format!("pulse area must be >= 0, got {area}")));
        }
        if area == 0.0 {
            return Ok(0.0);
        }
        if self.g0m == 0.0 {
            return Err(Error::Domain("zero drive never reaches a nonzero pulse area".into()));
        }
        let target = area / self.g0m;
        // switched_time(t) is increasing with slope 1 - exp(-t/τ) <= 1, so
        // t >= target and t <= target + τ.
        let (mut lo, mut hi) = (target, target + self.tau_sw);
        if self.tau_sw == 0.0 {
            return Ok(target);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if switched_time(self.tau_sw, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Peak Rabi frequency that gives pulse area `area` at time `tau`, with
    /// the switching constant held fixed.
    pub fn g0m_for_pulse_area(&self, tau: f64, area: f64) -> Result<f64> {
        if !(tau > 0.0) {
            return Err(Error::Domain(format!("tau must be > 0, got {tau}")));
        }
        Ok(area / switched_time(self.tau_sw, tau))
    }
}

/// `∫_0^t (1 - exp(-s/τ)) ds`, computed without cancellation at small t/τ.
fn switched_time(tau_sw: f64, t: f64) -> f64 {
    if tau_sw == 0.0 {
        return t;
    }
    let x = t / tau_sw;
    if x < 0.1 {
        // x - (1 - e^{-x}) = x²/2 - x³/6 + x⁴/24 - ...
        let mut term = x * x / 2.0;
        let mut sum = 0.0;
        let mut k = 2.0;
        while term.abs() > 1e-18 * x * x {
            sum += term;
            k += 1.0;
            term *= -x / k;
        }
        tau_sw * sum
    } else {
        tau_sw * (x + (-x).exp_m1())
    }
}

/// Instantaneous Rabi envelope `g0M (1 - exp(-t/tau_sw))`; exactly `g0M` when
/// `tau_sw = 0`.
pub fn g_envelope(field: &DriveField, t: f64) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    if field.tau_sw == 0.0 {
        return Ok(field.g0m);
    }
    Ok(-field.g0m * (-t / field.tau_sw).exp_m1())
}

/// Time-averaged Rabi frequency `g'_0(t) = (1/t) ∫_0^t g_o`. The `t → 0⁺`
/// limit is 0 for a switched drive and `g0M` for instantaneous switching.
pub fn g_mean(field: &DriveField, t: f64) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    if field.tau_sw == 0.0 {
        return Ok(field.g0m);
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(field.g0m * switched_time(field.tau_sw, t) / t)
}

/// Fixed-size amplitude vector of a few-level system.
pub trait StateVector: Copy + std::fmt::Debug {
    const LEVELS: usize;

    fn from_amplitudes(a: &[C64]) -> Self;
    fn amplitudes(&self) -> Vec<C64>;

    fn population(&self, level: usize) -> f64 {
        self.amplitudes()[level].norm_sqr()
    }

    fn norm_sqr(&self) -> f64 {
        self.amplitudes().iter().map(|c| c.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelState {
    pub c0: C64,
    pub c1: C64,
}

impl TwoLevelState {
    pub fn new(c0: C64, c1: C64) -> Self {
        Self { c0, c1 }
    }
    pub fn ground() -> Self {
        Self::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    }
    pub fn excited() -> Self {
        Self::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    }
}

impl StateVector for TwoLevelState {
    const LEVELS: usize = 2;

    fn from_amplitudes(a: &[C64]) -> Self {
        Self::new(a[0], a[1])
    }
    fn amplitudes(&self) -> Vec<C64> {
        vec![self.c0, self.c1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeLevelState {
    pub c0: C64,
    pub c1: C64,
    pub c2: C64,
}

impl ThreeLevelState {
    pub fn new(c0: C64, c1: C64, c2: C64) -> Self {
        Self { c0, c1, c2 }
    }
    pub fn basis(level: usize) -> Self {
        let mut a = [C64::new(0.0, 0.0); 3];
        a[level] = C64::new(1.0, 0.0);
        Self::from_amplitudes(&a)
    }
}

impl StateVector for ThreeLevelState {
    const LEVELS: usize = 3;

    fn from_amplitudes(a: &[C64]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
    fn amplitudes(&self) -> Vec<C64> {
        vec![self.c0, self.c1, self.c2]
    }
}

/// Lambda system: `|0⟩` and `|2⟩` low-lying, `|1⟩` an optical frequency
/// above. Field 1 runs at `omega01 + delta` on `0↔1`, field 2 at
/// `omega12 + delta` on `1↔2`, each with Rabi frequency `g`.
///
/// Level energies are `E0 = 0`, `E1 = omega01`, `E2 = omega01 - omega12`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaConfig {
    pub omega01: f64,
    pub omega12: f64,
    pub delta: f64,
    pub g: f64,
    #[serde(default)]
    pub phi1: f64,
    #[serde(default)]
    pub phi2: f64,
    /// Let each field also drive the other leg off-resonantly.
    #[serde(default)]
    pub cross_coupling: bool,
}

impl LambdaConfig {
    /// Symmetric lambda system with splitting `delta_omega` around the
    /// optical scale `omega` (`omega01 = omega`, `omega12 = omega - delta_omega`).
    pub fn symmetric(omega: f64, delta_omega: f64, delta: f64, g: f64) -> Self {
        Self {
            omega01: omega,
            omega12: omega - delta_omega,
            delta,
            g,
            phi1: 0.0,
            phi2: 0.0,
            cross_coupling: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("omega01", self.omega01),
            ("omega12", self.omega12),
            ("delta", self.delta),
            ("g", self.g),
            ("phi1", self.phi1),
            ("phi2", self.phi2),
        ] {
            finite(name, x)?;
        }
        for (name, x) in [("omega01", self.omega01), ("omega12", self.omega12)] {
            if x <= 0.0 {
                return Err(Error::invalid(name, format!("must be > 0, got {x}")));
            }
        }
        if self.g < 0.0 {
            return Err(Error::invalid("g", format!("must be >= 0, got {}", self.g)));
        }
        Ok(())
    }

    /// Splitting of the two low-lying states, `|omega01 - omega12|`.
    pub fn delta_omega(&self) -> f64 {
        (self.omega01 - self.omega12).abs()
    }

    /// Energy of `|2⟩` relative to `|0⟩`.
    pub fn level2_energy(&self) -> f64 {
        self.omega01 - self.omega12
    }

    pub fn nu1(&self) -> f64 {
        self.omega01 + self.delta
    }

    pub fn nu2(&self) -> f64 {
        self.omega12 + self.delta
    }

    /// Effective two-photon coupling matrix element `g²/(4δ)`.
    pub fn raman_coupling(&self) -> f64 {
        self.g * self.g / (4.0 * self.delta)
    }

    /// Far-detuned Raman Rabi frequency `g²/(2δ)`: populations of `|0⟩`,`|2⟩`
    /// flop as `sin²(Ω t / 2)` in the same convention as the two-level drive.
    pub fn raman_rabi(&self) -> f64 {
        self.g * self.g / (2.0 * self.delta)
    }

    /// Exact flopping rate of the equal-leg three-level system under the RWA,
    /// `(sqrt(δ² + 2g²) - |δ|)/2`.
    pub fn raman_rabi_exact(&self) -> f64 {
        let d = self.delta.abs();
        0.5 * ((d * d + 2.0 * self.g * self.g).sqrt() - d)
    }

    /// Leg Rabi frequency that gives exact Raman rate `rate` at detuning `delta`.
    pub fn g_for_raman_rate(delta: f64, rate: f64) -> f64 {
        (2.0 * rate * (rate + delta.abs())).sqrt()
    }
}

/// Real samples of one observable on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    t: Vec<f64>,
    y: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if t.len() != y.len() {
            return Err(Error::InvalidSeries(format!(
                "length mismatch: {} times vs {} values",
                t.len(),
                y.len()
            )));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSeries("times must be strictly increasing".into()));
        }
        Ok(Self { t, y })
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn len(&self) -> usize {
        self.t.len()
    }
    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.t.first(), self.t.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Sample spacing if the grid is uniform to 1e-9 relative.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.t.len() < 2 {
            return None;
        }
        let dt = self.duration() / (self.t.len() - 1) as f64;
        let uniform = self
            .t
            .iter()
            .enumerate()
            .all(|(k, &t)| (t - (self.t[0] + k as f64 * dt)).abs() <= 1e-9 * dt.max(self.t[0].abs()));
        uniform.then_some(dt)
    }

    /// Samples with `t` in `[from, to]`.
    pub fn window(&self, from: f64, to: f64) -> Result<TimeSeries> {
        let (t, y): (Vec<f64>, Vec<f64>) = self
            .t
            .iter()
            .zip(&self.y)
            .filter(|(t, _)| **t >= from && **t <= to)
            .map(|(t, y)| (*t, *y))
            .unzip();
        TimeSeries::new(t, y)
    }

    pub fn max_abs(&self) -> f64 {
        self.y.iter().fold(0.0, |m, y| m.max(y.abs()))
    }
}

/// A sinusoidal component `amplitude · sin(freq · t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeak {
    pub freq: f64,
    pub amplitude: f64,
    pub phase: f64,
}

impl SpectralPeak {
    /// Builds a peak from the sine/cosine quadratures `s sin(ft) + c cos(ft)`.
    pub fn from_quadratures(freq: f64, s: f64, c: f64) -> Self {
        let mut phase = c.atan2(s);
        if phase <= -std::f64::consts::PI {
            phase += 2.0 * std::f64::consts::PI;
        }
        Self {
            freq,
            amplitude: s.hypot(c),
            phase,
        }
    }
}
