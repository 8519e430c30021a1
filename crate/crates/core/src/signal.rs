//! From trajectories to oscillation observables: residuals against the
//! rotating-wave reference, least-squares demodulation, windowed spectra and
//! the fixed-pulse-area observation-time scan.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::io::{self, Write};

use crate::semiclassical::{self, Trajectory};
use crate::{csv, DriveField, Error, Result, SpectralPeak, TimeSeries, TwoLevelState, C64};

/// Peaks must exceed this multiple of the median bin power.
pub const NOISE_FLOOR_FACTOR: f64 = 10.0;

/// Excited-population difference between a full run and its rotating-wave
/// reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    pub series: TimeSeries,
    pub field: Option<DriveField>,
    /// Initial excited population.
    pub a0: f64,
}

impl ResidualSeries {
    /// `t,residual`
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        write_series_csv(w, "residual", &self.series)
    }
}

/// Two-column CSV `t,<name>`.
pub fn write_series_csv<W: Write>(w: &mut W, name: &str, series: &TimeSeries) -> io::Result<()> {
    csv::write_header(w, &["t", name])?;
    for (t, y) in series.t().iter().zip(series.y()) {
        csv::write_row(w, &[*t, *y])?;
    }
    Ok(())
}

fn check_same_grid(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} vs {} samples", a.len(), b.len())));
    }
    if let Some((k, (x, y))) = a
        .iter()
        .zip(b)
        .enumerate()
        .find(|(_, (x, y))| (*x - *y).abs() > 1e-12 * x.abs().max(1.0))
    {
        return Err(Error::GridMismatch(format!("sample {k}: t = {x} vs {y}")));
    }
    Ok(())
}

/// `a - b` pointwise on a shared grid.
pub fn difference(a: &TimeSeries, b: &TimeSeries) -> Result<TimeSeries> {
    check_same_grid(a.t(), b.t())?;
    TimeSeries::new(a.t().to_vec(), a.y().iter().zip(b.y()).map(|(x, y)| x - y).collect())
}

/// `|c1|²_numeric - |c1|²_rwa` on the shared grid.
pub fn bso_residual(numeric: &Trajectory<TwoLevelState>, rwa: &Trajectory<TwoLevelState>) -> Result<ResidualSeries> {
    Ok(ResidualSeries {
        series: difference(&numeric.population(1), &rwa.population(1))?,
        field: None,
        a0: numeric.states.first().map_or(0.0, |s| s.c1.norm_sqr()),
    })
}

/// Solves `min |X c - y|` for the given columns.
fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    if n < columns.len() {
        return Err(Error::WindowTooShort(format!(
            "{n} samples for {} unknowns",
            columns.len()
        )));
    }
    let x = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    let svd = x.svd(true, true);
    let c = svd
        .solve(&DVector::from_column_slice(y), 1e-13)
        .map_err(|e| Error::InvalidSeries(e.to_string()))?;
    Ok(c.iter().copied().collect())
}

fn check_demod_input(series: &TimeSeries, freqs: &[f64], min_periods: f64) -> Result<()> {
    for &f in freqs {
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::Domain(format!("demodulation frequency must be > 0, got {f}")));
        }
    }
    series.uniform_step().ok_or(Error::NonUniform)?;
    let slowest = freqs.iter().copied().fold(f64::INFINITY, f64::min);
    let needed = min_periods * 2.0 * PI / slowest;
    if series.duration() < needed * (1.0 - 1e-9) {
        return Err(Error::WindowTooShort(format!(
            "window {} shorter than {min_periods} periods ({needed}) of {slowest}",
            series.duration()
        )));
    }
    Ok(())
}

/// Least-squares fit of `A sin(f t + θ) + const` over the whole series.
pub fn demodulate(series: &TimeSeries, freq: f64) -> Result<SpectralPeak> {
    Ok(demodulate_multi(series, &[freq])?[0])
}

/// Joint fit of several tones plus a constant offset.
pub fn demodulate_multi(series: &TimeSeries, freqs: &[f64]) -> Result<Vec<SpectralPeak>> {
    check_demod_input(series, freqs, 3.0)?;
    let t = series.t();
    let mut cols = Vec::with_capacity(2 * freqs.len() + 1);
    for &f in freqs {
        cols.push(t.iter().map(|t| (f * t).sin()).collect());
        cols.push(t.iter().map(|t| (f * t).cos()).collect());
    }
    cols.push(vec![1.0; t.len()]);
    let c = least_squares(&cols, series.y())?;
    Ok(freqs
        .iter()
        .enumerate()
        .map(|(k, &f)| SpectralPeak::from_quadratures(f, c[2 * k], c[2 * k + 1]))
        .collect())
}

/// Fit of `env(t) · A sin(f t + θ)` with a known slowly varying envelope
/// (no offset). Suited to sidebands riding on a Rabi oscillation, where
/// `env = sin(A(t))`. With the envelope known, one period of `freq` is
/// enough.
pub fn demodulate_enveloped(series: &TimeSeries, freq: f64, envelope: &[f64]) -> Result<SpectralPeak> {
    if envelope.len() != series.len() {
        return Err(Error::GridMismatch(format!(
            "envelope has {} samples, series {}",
            envelope.len(),
            series.len()
        )));
    }
    check_demod_input(series, &[freq], 1.0)?;
    let t = series.t();
    let cols = vec![
        t.iter().zip(envelope).map(|(t, e)| e * (freq * t).sin()).collect(),
        t.iter().zip(envelope).map(|(t, e)| e * (freq * t).cos()).collect(),
    ];
    let c = least_squares(&cols, series.y())?;
    Ok(SpectralPeak::from_quadratures(freq, c[0], c[1]))
}

/// Demodulation over consecutive windows of `window` duration, advanced by
/// `stride`. Each entry is `(window centre, peak)`.
pub fn demodulate_sliding(
    series: &TimeSeries,
    freq: f64,
    window: f64,
    stride: f64,
) -> Result<Vec<(f64, SpectralPeak)>> {
    if !(stride > 0.0) {
        return Err(Error::Domain(format!("stride must be > 0, got {stride}")));
    }
    let (t0, t1) = (series.t()[0], *series.t().last().unwrap());
    let mut out = Vec::new();
    let mut start = t0;
    while start + window <= t1 + 1e-12 {
        let w = series.window(start - 1e-12, start + window + 1e-12)?;
        out.push((start + window / 2.0, demodulate(&w, freq)?));
        start += stride;
    }
    Ok(out)
}

/// Windowed power spectrum and the peaks standing out of it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    /// Median bin power.
    pub floor: f64,
    pub peaks: Vec<SpectralPeak>,
}

impl SpectrumResult {
    /// Peak nearest `freq` within `tol`, if any.
    pub fn peak_near(&self, freq: f64, tol: f64) -> Option<&SpectralPeak> {
        self.peaks
            .iter()
            .filter(|p| (p.freq - freq).abs() <= tol)
            .min_by(|a, b| (a.freq - freq).abs().total_cmp(&(b.freq - freq).abs()))
    }

    /// Bin spacing in angular frequency.
    pub fn resolution(&self) -> f64 {
        self.freqs.get(1).copied().unwrap_or(0.0)
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        csv::write_header(w, &["freq", "power"])?;
        for (f, p) in self.freqs.iter().zip(&self.power) {
            csv::write_row(w, &[*f, *p])?;
        }
        Ok(())
    }
}

/// Hann-windowed spectrum of the mean-subtracted series. Peaks are local
/// maxima above [`NOISE_FLOOR_FACTOR`] times the median bin power, refined
/// by parabolic interpolation of the log magnitude.
pub fn spectrum(series: &TimeSeries) -> Result<SpectrumResult> {
    spectrum_with_floor(series, NOISE_FLOOR_FACTOR)
}

pub fn spectrum_with_floor(series: &TimeSeries, floor_factor: f64) -> Result<SpectrumResult> {
    let n = series.len();
    if n < 64 {
        return Err(Error::WindowTooShort(format!("spectrum needs >= 64 samples, got {n}")));
    }
    let dt = series.uniform_step().ok_or(Error::NonUniform)?;
    let mean = series.y().iter().sum::<f64>() / n as f64;
    let window: Vec<f64> = (0..n)
        .map(|k| 0.5 * (1.0 - (2.0 * PI * k as f64 / (n - 1) as f64).cos()))
        .collect();
    let wsum: f64 = window.iter().sum();
    let mut buf: Vec<C64> = series
        .y()
        .iter()
        .zip(&window)
        .map(|(y, w)| C64::new((y - mean) * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let bins = n / 2 + 1;
    let df = 2.0 * PI / (n as f64 * dt);
    let freqs: Vec<f64> = (0..bins).map(|k| k as f64 * df).collect();
    let power: Vec<f64> = buf[..bins].iter().map(|c| c.norm_sqr()).collect();
    let mut sorted = power.clone();
    sorted.sort_by(f64::total_cmp);
    let floor = if bins % 2 == 1 {
        sorted[bins / 2]
    } else {
        0.5 * (sorted[bins / 2 - 1] + sorted[bins / 2])
    };

    let t0 = series.t()[0];
    let mut peaks = Vec::new();
    for k in 1..bins - 1 {
        let p = power[k];
        if !(p > power[k - 1] && p >= power[k + 1] && p > floor_factor * floor) {
            continue;
        }
        let (a, b, c) = (
            buf[k - 1].norm().max(f64::MIN_POSITIVE).ln(),
            buf[k].norm().max(f64::MIN_POSITIVE).ln(),
            buf[k + 1].norm().max(f64::MIN_POSITIVE).ln(),
        );
        let denom = a - 2.0 * b + c;
        let offset = if denom.abs() > 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        // Hann main lobe relative to its centre value.
        let lobe = if offset == 0.0 {
            1.0
        } else {
            let x = PI * offset;
            (x.sin() / x) / (1.0 - offset * offset)
        };
        let amplitude = 2.0 * buf[k].norm() / wsum / lobe;
        let freq = (k as f64 + offset) * df;
        // arg Y is the cosine phase at the first sample, shifted by the
        // window centre; convert to the sine phase at t = 0.
        let cos_phase = buf[k].arg() + PI * offset * (n - 1) as f64 / n as f64;
        let phase = wrap_phase(cos_phase + PI / 2.0 - freq * t0);
        peaks.push(SpectralPeak { freq, amplitude, phase });
    }
    Ok(SpectrumResult {
        freqs,
        power,
        floor,
        peaks,
    })
}

/// Maps an angle into `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Options of [`gbso_scan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Pulse area held fixed across the scan.
    pub pulse_area: f64,
    /// Points whose rescaled `g0M` exceeds `max_drive_ratio · ω` are marked
    /// as failed.
    pub max_drive_ratio: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            pulse_area: PI / 2.0,
            max_drive_ratio: 1.0,
        }
    }
}

/// One observation time of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub tau: f64,
    /// Rescaled peak Rabi frequency, NaN if unreachable.
    pub g0m: f64,
    pub outcome: std::result::Result<ScanValue, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanValue {
    /// `|c1(τ)|² - |c1(τ)|²_rwa`.
    pub gbso: f64,
    pub pop1: f64,
    /// Tones fitted to the residual over the last few drive periods before
    /// `τ`: 2ω, 4ω and, with a dc component, ω. `None` if the run is too
    /// short to fit.
    pub tones: Option<Vec<SpectralPeak>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbsoScan {
    pub field: DriveField,
    pub points: Vec<ScanPoint>,
}

impl GbsoScan {
    /// GBSO against τ; fails if any point failed.
    pub fn series(&self) -> Result<TimeSeries> {
        let mut y = Vec::with_capacity(self.points.len());
        for p in &self.points {
            match &p.outcome {
                Ok(v) => y.push(v.gbso),
                Err(e) => return Err(Error::Domain(format!("scan point tau = {}: {e}", p.tau))),
            }
        }
        TimeSeries::new(self.points.iter().map(|p| p.tau).collect(), y)
    }

    fn with_dc(&self) -> bool {
        self.field.g_dc() != 0.0
    }

    /// `tau,gbso,amp_2w,phase_2w,amp_4w,phase_4w[,amp_1w,phase_1w]`; failed
    /// points carry NaN.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let mut header = vec!["tau", "gbso", "amp_2w", "phase_2w", "amp_4w", "phase_4w"];
        let tones = if self.with_dc() { 3 } else { 2 };
        if self.with_dc() {
            header.extend(["amp_1w", "phase_1w"]);
        }
        csv::write_header(w, &header)?;
        for p in &self.points {
            let mut row = vec![p.tau];
            match &p.outcome {
                Ok(v) => {
                    row.push(v.gbso);
                    match &v.tones {
                        Some(t) => t.iter().for_each(|pk| row.extend([pk.amplitude, pk.phase])),
                        None => row.extend(std::iter::repeat_n(f64::NAN, 2 * tones)),
                    }
                }
                Err(_) => row.extend(std::iter::repeat_n(f64::NAN, 1 + 2 * tones)),
            }
            csv::write_row(w, &row)?;
        }
        Ok(())
    }
}

/// `points` observation times starting where the rescaled drive equals
/// `g0m_start`, spaced over `periods` periods of 2ω.
pub fn scan_grid(
    template: &DriveField,
    g0m_start: f64,
    periods: f64,
    points: usize,
    pulse_area: f64,
) -> Result<Vec<f64>> {
    let start = template.with_g0m(g0m_start)?.time_for_pulse_area(pulse_area)?;
    let span = periods * PI / template.omega();
    Ok((0..points).map(|k| start + span * k as f64 / points as f64).collect())
}

fn scan_point(template: &DriveField, tau: f64, opts: &ScanOptions) -> ScanPoint {
    let mut point = ScanPoint {
        tau,
        g0m: f64::NAN,
        outcome: Err(String::new()),
    };
    let run = || -> std::result::Result<ScanValue, String> {
        let g0m = template
            .g0m_for_pulse_area(tau, opts.pulse_area)
            .map_err(|e| e.to_string())?;
        if g0m > opts.max_drive_ratio * template.omega() {
            return Err(format!(
                "pulse area {} unreachable at tau = {tau}: needs g0M = {g0m} > {} omega",
                opts.pulse_area, opts.max_drive_ratio
            ));
        }
        let field = template.with_g0m(g0m).map_err(|e| e.to_string())?;
        let dt = semiclassical::default_dt(&field);
        let full =
            semiclassical::evolve_two_level_dc(&field, TwoLevelState::ground(), tau, dt).map_err(|e| e.to_string())?;
        let rwa = semiclassical::rwa_reference(&field, TwoLevelState::ground(), tau, dt).map_err(|e| e.to_string())?;
        let residual = bso_residual(&full, &rwa).map_err(|e| e.to_string())?.series;
        let gbso = *residual.y().last().unwrap();
        let omega = field.omega();
        let mut freqs = vec![2.0 * omega, 4.0 * omega];
        if field.g_dc() != 0.0 {
            freqs.push(omega);
        }
        // Three periods of the slowest fitted tone, ending at τ.
        let slowest = if field.g_dc() != 0.0 { omega } else { 2.0 * omega };
        let span = 3.0 * 2.0 * PI / slowest;
        let tones = if tau >= span {
            residual
                .window(tau - span - 1e-9 * tau, tau)
                .and_then(|w| demodulate_multi(&w, &freqs))
                .ok()
        } else {
            None
        };
        Ok(ScanValue {
            gbso,
            pop1: full.last().unwrap().c1.norm_sqr(),
            tones,
        })
    };
    if let Ok(g) = template.g0m_for_pulse_area(tau, opts.pulse_area) {
        point.g0m = g;
    }
    point.outcome = run();
    if point.outcome.is_err() {
        point.g0m = f64::NAN;
    }
    point
}

/// For each τ, rescales `g0M` so the pulse area at τ is `opts.pulse_area`
/// (switching time held fixed), runs the full and rotating-wave dynamics
/// from `|0⟩` and records their excited-population difference at τ.
/// Points run in parallel; output order follows `tau_grid`.
pub fn gbso_scan(template: &DriveField, tau_grid: &[f64], opts: &ScanOptions) -> GbsoScan {
    let points = tau_grid
        .par_iter()
        .map(|&tau| scan_point(template, tau, opts))
        .collect();
    GbsoScan {
        field: *template,
        points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiclassical::{default_dt, evolve_two_level, rwa_reference};

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * dt).collect()
    }

    fn tone(t: &[f64], parts: &[(f64, f64, f64)]) -> TimeSeries {
        let y = t
            .iter()
            .map(|t| parts.iter().map(|(a, f, p)| a * (f * t + p).sin()).sum())
            .collect();
        TimeSeries::new(t.to_vec(), y).unwrap()
    }

    #[test]
    fn demodulate_exact_tone() {
        let t = grid(2001, PI / 1000.0); // 20 periods of f = 20
        let p = demodulate(&tone(&t, &[(0.3, 20.0, 0.7)]), 20.0).unwrap();
        assert!((p.amplitude - 0.3).abs() < 1e-10 && (p.phase - 0.7).abs() < 1e-10);
        let p = demodulate(&tone(&t, &[(1.0, 20.0, 0.0), (0.5, 40.0, 0.0)]), 40.0).unwrap();
        assert!((p.amplitude - 0.5).abs() < 1e-6);
    }

    #[test]
    fn demodulate_non_integer_periods() {
        let t = grid(1733, 0.0021);
        let s = tone(&t, &[(0.2, 17.3, -2.9), (0.05, 6.0, 0.0)]);
        let p = demodulate_multi(&s, &[17.3, 6.0]).unwrap();
        assert!((p[0].amplitude - 0.2).abs() < 1e-10 && (p[0].phase + 2.9).abs() < 1e-10);
    }

    #[test]
    fn demodulate_errors() {
        let s = tone(&grid(50, 0.01), &[(1.0, 20.0, 0.0)]);
        assert!(matches!(demodulate(&s, 20.0), Err(Error::WindowTooShort(_))));
        assert!(matches!(demodulate(&s, 0.0), Err(Error::Domain(_))));
        let s = TimeSeries::new(vec![0.0, 1.0, 3.0], vec![0.0; 3]).unwrap();
        assert!(matches!(demodulate(&s, 100.0), Err(Error::NonUniform)));
    }

    #[test]
    fn enveloped_fit_recovers_sideband_amplitude() {
        let t = grid(4001, 0.0025);
        let env: Vec<f64> = t.iter().map(|t| (0.8 * t).sin()).collect();
        let y = t
            .iter()
            .zip(&env)
            .map(|(t, e)| 0.07 * e * (12.0 * t + 0.4).sin())
            .collect();
        let s = TimeSeries::new(t.clone(), y).unwrap();
        let p = demodulate_enveloped(&s, 12.0, &env).unwrap();
        assert!((p.amplitude - 0.07).abs() < 1e-12 && (p.phase - 0.4).abs() < 1e-10);
    }

    #[test]
    fn spectrum_pure_tone() {
        let t = grid(1024, 0.01);
        let s = tone(&t, &[(0.4, 20.0, 0.3)]);
        let sp = spectrum(&s).unwrap();
        let strong: Vec<_> = sp.peaks.iter().filter(|p| p.amplitude > 0.01).collect();
        assert_eq!(strong.len(), 1);
        let p = strong[0];
        assert!((p.freq - 20.0).abs() < sp.resolution());
        let d = demodulate(&s, 20.0).unwrap();
        assert!((p.amplitude - d.amplitude).abs() < 0.05 * d.amplitude);
        assert!(matches!(
            spectrum(&tone(&grid(32, 0.1), &[(1.0, 1.0, 0.0)])),
            Err(Error::WindowTooShort(_))
        ));
    }

    #[test]
    fn spectrum_writes_csv() {
        let s = tone(&grid(128, 0.05), &[(1.0, 5.0, 0.0)]);
        let sp = spectrum(&s).unwrap();
        let mut buf = Vec::new();
        sp.write_csv(&mut buf).unwrap();
        let (h, rows) = csv::read_table(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(h, ["freq", "power"]);
        assert_eq!(rows.len(), 65);
    }

    fn residual(phi: f64, a0: f64, t_end: f64) -> TimeSeries {
        let f = DriveField::new(10.0, 1.0)
            .unwrap()
            .with_tau_sw(1.0)
            .unwrap()
            .with_phi(phi);
        let dt = default_dt(&f);
        let m = semiclassical::evolve_mixture(&f, a0, t_end, dt, true).unwrap();
        let r = semiclassical::evolve_mixture(&f, a0, t_end, dt, false).unwrap();
        difference(&m.population(1), &r.population(1)).unwrap()
    }

    #[test]
    fn residual_examples() {
        let f = DriveField::new(10.0, 1.0).unwrap().with_tau_sw(1.0).unwrap();
        let dt = default_dt(&f);
        let a = evolve_two_level(&f, TwoLevelState::ground(), 3.0, dt).unwrap();
        assert_eq!(bso_residual(&a, &a).unwrap().series.max_abs(), 0.0);
        let b = rwa_reference(&f, TwoLevelState::ground(), 3.5, dt).unwrap();
        assert!(matches!(bso_residual(&a, &b), Err(Error::GridMismatch(_))));

        let peak = residual(0.0, 0.0, 4.0 * PI).max_abs();
        assert!((peak - 0.025).abs() < 0.2 * 0.025, "peak {peak}");
        assert!(residual(0.0, 0.5, 4.0 * PI).max_abs() < 0.1 * 0.025);
    }

    #[test]
    fn residual_phase_laws() {
        let r0 = residual(0.3, 0.0, 2.0 * PI);
        let r_pi = residual(0.3 + PI, 0.0, 2.0 * PI);
        let r_half = residual(0.3 + PI / 2.0, 0.0, 2.0 * PI);
        let eta: f64 = 0.025;
        let mut worst: f64 = 0.0;
        for ((a, b), c) in r0.y().iter().zip(r_pi.y()).zip(r_half.y()) {
            assert!((a - b).abs() < 1e-12);
            worst = worst.max((a + c).abs());
        }
        // Only the odd harmonics flip; what is left is second order.
        assert!(worst < 5.0 * eta * eta, "{worst}");
    }

    #[test]
    fn demodulated_residual_near_pi_half() {
        let f = DriveField::new(10.0, 1.0).unwrap().with_tau_sw(1.0).unwrap();
        let tc = f.time_for_pulse_area(PI / 2.0).unwrap();
        let r = residual(0.0, 0.0, tc + 1.0);
        let half = 3.5 * PI / 20.0;
        let w = r.window(tc - half, tc + half).unwrap();
        let p = demodulate(&w, 20.0).unwrap();
        assert!((p.amplitude - 0.025).abs() < 0.15 * 0.025, "{}", p.amplitude);
    }

    #[test]
    fn harmonic_ratio_grows_with_drive() {
        let mut last = 0.0;
        for eta in [0.01, 0.04, 0.08, 0.15] {
            let f = DriveField::new(10.0, 40.0 * eta).unwrap().with_tau_sw(1.0).unwrap();
            // Window after switch-on where the Rabi envelope sin(A) is large.
            let tc = f.time_for_pulse_area(PI / 2.0).unwrap();
            let half = 4.0 * PI / 20.0;
            let dt = default_dt(&f);
            let full = evolve_two_level(&f, TwoLevelState::ground(), tc + half, dt).unwrap();
            let rwa = rwa_reference(&f, TwoLevelState::ground(), tc + half, dt).unwrap();
            let r = bso_residual(&full, &rwa).unwrap().series;
            let w = r.window(tc - half, tc + half).unwrap();
            let p = demodulate_multi(&w, &[20.0, 40.0]).unwrap();
            let ratio = p[1].amplitude / p[0].amplitude;
            assert!(ratio > last, "eta {eta}: ratio {ratio} <= {last}");
            last = ratio;
        }
    }

    #[test]
    fn gbso_scan_rwa_regime_is_flat() {
        let f = DriveField::new(1000.0, 1.0).unwrap().with_tau_sw(1.0).unwrap();
        // g0M ≈ 0.17 here, so η < 1e-4.
        let taus = [10.0, 12.0, 14.0];
        let scan = gbso_scan(&f, &taus, &ScanOptions::default());
        let s = scan.series().unwrap();
        assert!(s.max_abs() < 1e-4);
    }

    #[test]
    fn gbso_scan_follows_phase_law() {
        let f = DriveField::new(10.0, 1.0).unwrap().with_tau_sw(1.0).unwrap();
        let taus = scan_grid(&f, 1.0, 4.0, 24, PI / 2.0).unwrap();
        let a = gbso_scan(&f, &taus, &ScanOptions::default());
        let b = gbso_scan(&f.with_phi(PI / 2.0), &taus, &ScanOptions::default());
        let c = gbso_scan(&f.with_phi(PI), &taus, &ScanOptions::default());
        let (sa, sb, sc) = (a.series().unwrap(), b.series().unwrap(), c.series().unwrap());
        let mut err = 0.0;
        let mut norm = 0.0;
        for ((p, y), (yb, yc)) in a.points.iter().zip(sa.y()).zip(sb.y().iter().zip(sc.y())) {
            assert!((y + yb).abs() < 2e-3);
            assert!((y - yc).abs() < 1e-12);
            let model = p.g0m / 40.0 * (20.0 * p.tau).sin();
            err += (y - model).powi(2);
            norm += model * model;
        }
        assert!((err / norm).sqrt() < 0.2);
    }

    #[test]
    fn gbso_scan_marks_unreachable_points() {
        let f = DriveField::new(10.0, 1.0).unwrap().with_tau_sw(1.0).unwrap();
        let scan = gbso_scan(&f, &[0.05, 2.0], &ScanOptions::default());
        assert!(scan.points[0].outcome.is_err() && scan.points[0].g0m.is_nan());
        assert!(scan.points[1].outcome.is_ok());
        assert!(scan.series().is_err());
        let mut buf = Vec::new();
        scan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("tau,gbso,amp_2w,phase_2w,amp_4w,phase_4w\n"));
        assert!(text.lines().nth(1).unwrap().contains("NaN"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn demodulate_recovers_any_tone(a in 0.0f64..2.0, f in 5.0f64..50.0, ph in -PI..PI, off in -1.0f64..1.0) {
                let t = grid(3000, 0.004);
                let y = t.iter().map(|t| a * (f * t + ph).sin() + off).collect();
                let p = demodulate(&TimeSeries::new(t, y).unwrap(), f).unwrap();
                prop_assert!((p.amplitude - a).abs() < 1e-9);
                if a > 1e-3 {
                    prop_assert!(wrap_phase(p.phase - ph).abs() < 1e-8);
                }
                prop_assert!(p.phase > -PI && p.phase <= PI);
            }

            #[test]
            fn spectrum_agrees_with_demodulation(a in 0.1f64..2.0, f in 10.0f64..60.0, ph in -PI..PI) {
                let t = grid(2048, 0.01);
                let s = tone(&t, &[(a, f, ph)]);
                let sp = spectrum(&s).unwrap();
                let p = sp.peak_near(f, sp.resolution()).unwrap();
                prop_assert!((p.amplitude - a).abs() < 0.05 * a);
            }
        }
    }
}
