//! Binds each scenario to the library calls and the CSV files it produces.

use std::io;

use bsosim::analytic::{adiabatic_trajectory, bso_term};
use bsosim::composite::{
    build_2l_hamiltonian, coherent_amplitudes, evolve_composite, raman_bso_compare, semiclassical_equivalent,
    CompositeRun, CompositeTolerances, CouplingTerms, FockComposite, PhotonWindow,
};
use bsosim::semiclassical::{
    default_dt, evolve_lambda, evolve_lambda_rwa, evolve_mixture, evolve_two_level, evolve_two_level_dc,
    lambda_default_dt, rwa_reference,
};
use bsosim::signal::{
    bso_residual, demodulate_enveloped, demodulate_multi, difference, gbso_scan, scan_grid, spectrum, write_series_csv,
    ScanOptions,
};
use bsosim::{csv, DriveField, Error, ThreeLevelState, TimeSeries, TwoLevelState, C64};

use crate::config::*;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numeric(String),
    Io(String),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

/// Library errors: numerical breaches stay numeric, everything else is
/// blamed on the config key `field` (or the parameter the library names).
fn blame(field: &'static str) -> impl Fn(Error) -> RunError {
    move |e| match e {
        e if e.is_numeric_failure() => RunError::Numeric(e.to_string()),
        Error::InvalidParameter { ref name, .. } => RunError::Config(ConfigError::new(name.clone(), e.to_string())),
        Error::StepTooCoarse { .. } => RunError::Config(ConfigError::new("dt", e.to_string())),
        e => RunError::Config(ConfigError::new(field, e.to_string())),
    }
}

pub type Summary = Vec<(&'static str, f64)>;

#[derive(Debug, Default)]
pub struct RunOutput {
    /// File name and contents, in write order.
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Summary,
}

impl RunOutput {
    fn file(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<(), RunError> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((name.to_string(), buf));
        Ok(())
    }
}

fn check_dt(dt: f64, max: f64) -> Result<(), ConfigError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(ConfigError::new("dt", format!("dt must be > 0, got {dt}")));
    }
    if dt > max * (1.0 + 1e-12) {
        return Err(ConfigError::new(
            "dt",
            format!("time step {dt} too coarse; need dt <= {max}"),
        ));
    }
    Ok(())
}

fn check_positive(field: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("{field} must be > 0, got {x}")))
    }
}

fn resolve_dt(dt: &mut Option<f64>, max: f64) -> Result<f64, ConfigError> {
    let v = *dt.get_or_insert(max);
    check_dt(v, max)?;
    Ok(v)
}

/// Fills in defaults (`dt`, `t_end` from a pulse area, the matched Raman
/// drive) and checks everything that can be checked without running.
pub fn resolve(cfg: &mut ScenarioConfig) -> Result<(), RunError> {
    match &mut cfg.params {
        Params::Rabi(p) => {
            match (p.t_end, p.pulse_area) {
                (Some(_), Some(_)) => {
                    return Err(ConfigError::new("pulse_area", "give either t_end or pulse_area, not both").into())
                }
                (None, None) => return Err(ConfigError::new("t_end", "missing field `t_end`").into()),
                (None, Some(area)) => {
                    p.t_end = Some(p.field.time_for_pulse_area(area).map_err(blame("pulse_area"))?);
                }
                (Some(t), None) => check_positive("t_end", t)?,
            }
            resolve_dt(&mut p.dt, default_dt(&p.field))?;
            if let Some([a, b]) = p.demod_window {
                if !(a >= 0.0 && b > a) {
                    return Err(ConfigError::new("demod_window", "window must satisfy 0 <= from < to").into());
                }
            }
        }
        Params::Scan(p) => {
            let taus = tau_list(p)?;
            if taus.is_empty() || taus.iter().any(|t| !(*t > 0.0)) || taus.windows(2).any(|w| w[1] <= w[0]) {
                return Err(ConfigError::new("tau_grid", "τ grid must be non-empty, positive and increasing").into());
            }
            check_positive("max_drive_ratio", p.max_drive_ratio)?;
            check_positive("pulse_area", p.pulse_area)?;
        }
        Params::ArbitraryInit(p) => {
            if !(0.0..=1.0).contains(&p.a0) {
                return Err(ConfigError::new("a0", format!("a0 must lie in [0, 1], got {}", p.a0)).into());
            }
            check_positive("t_end", p.t_end)?;
            resolve_dt(&mut p.dt, default_dt(&p.field))?;
        }
        Params::Lambda(p) => {
            p.lambda.validate().map_err(blame("lambda"))?;
            if p.init_level > 2 {
                return Err(ConfigError::new("init_level", "init_level must be 0, 1 or 2").into());
            }
            check_positive("t_end", p.t_end)?;
            resolve_dt(&mut p.dt, lambda_default_dt(&p.lambda))?;
        }
        Params::Composite(p) => {
            check_positive("omega", p.omega)?;
            check_positive("t_end", p.t_end)?;
            check_positive("window_k", p.window_k)?;
            check_positive("leak_tol", p.leak_tol)?;
            check_positive("norm_tol", p.norm_tol)?;
            if !(p.g >= 0.0) || !(p.mean_photons >= 0.0) {
                return Err(ConfigError::new(
                    if p.g >= 0.0 { "mean_photons" } else { "g" },
                    "g and mean_photons must be >= 0",
                )
                .into());
            }
            let atom_freq = *p.atom_freq.get_or_insert(p.omega);
            let eq = semiclassical_equivalent(p.g, p.omega, atom_freq, alpha(p)).map_err(blame("g"))?;
            resolve_dt(&mut p.dt, default_dt(&eq))?;
            coherent_amplitudes(alpha(p), window(p)).map_err(blame("window_k"))?;
        }
        Params::Raman(p) => {
            p.lambda.validate().map_err(blame("lambda"))?;
            if p.field.is_none() {
                let f =
                    DriveField::new(p.lambda.delta_omega(), p.lambda.raman_rabi_exact()).map_err(blame("lambda"))?;
                p.field = Some(f);
            }
        }
        Params::Analytic(p) => {
            check_positive("t_end", p.t_end)?;
            let v = *p.dt.get_or_insert(default_dt(&p.field));
            check_positive("dt", v)?;
            if let Some(a0) = p.a0 {
                if !(0.0..=1.0).contains(&a0) {
                    return Err(ConfigError::new("a0", format!("a0 must lie in [0, 1], got {a0}")).into());
                }
            }
        }
    }
    Ok(())
}

/// Runs a resolved scenario.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, RunError> {
    match &cfg.params {
        Params::Rabi(p) => rabi(p, cfg.scenario == ScenarioKind::RabiDc),
        Params::Scan(p) => scan(p),
        Params::ArbitraryInit(p) => arbitrary_init(p),
        Params::Lambda(p) => lambda(p),
        Params::Composite(p) => composite(p),
        Params::Raman(p) => raman(p),
        Params::Analytic(p) => analytic(p),
    }
}

fn rabi(p: &RabiParams, dc: bool) -> Result<RunOutput, RunError> {
    let f = &p.field;
    let (t_end, dt) = (p.t_end.expect("resolved"), p.dt.expect("resolved"));
    let err = blame("field");
    let full = if dc || f.g_dc() != 0.0 {
        evolve_two_level_dc(f, TwoLevelState::ground(), t_end, dt)
    } else {
        evolve_two_level(f, TwoLevelState::ground(), t_end, dt)
    }
    .map_err(&err)?;
    let rwa = rwa_reference(f, TwoLevelState::ground(), t_end, dt).map_err(&err)?;
    let residual = bso_residual(&full, &rwa).map_err(&err)?;

    let mut out = RunOutput::default();
    out.file("trajectory.csv", |w| full.to_lab().write_csv(w))?;
    out.file("rwa.csv", |w| rwa.to_lab().write_csv(w))?;
    out.file("residual.csv", |w| residual.write_csv(w))?;

    let omega = f.omega();
    let freqs = [omega, 2.0 * omega];
    // A requested window must fit; the whole run is fitted only if long enough.
    let tones = match p.demod_window {
        Some([a, b]) => {
            let w = residual.series.window(a, b).map_err(blame("demod_window"))?;
            Some(demodulate_multi(&w, &freqs).map_err(blame("demod_window"))?)
        }
        None => demodulate_multi(&residual.series, &freqs).ok(),
    };
    let tone = |k: usize| {
        tones
            .as_ref()
            .map_or((f64::NAN, f64::NAN), |t| (t[k].amplitude, t[k].phase))
    };
    let last = full.last().expect("non-empty trajectory");
    out.summary = vec![
        ("t_end", t_end),
        ("pop1_final", last.c1.norm_sqr()),
        ("max_abs_residual", residual.series.max_abs()),
        ("amp_1w", tone(0).0),
        ("phase_1w", tone(0).1),
        ("amp_2w", tone(1).0),
        ("phase_2w", tone(1).1),
    ];
    Ok(out)
}

fn tau_list(p: &ScanParams) -> Result<Vec<f64>, ConfigError> {
    match &p.tau_grid {
        TauGrid::Explicit(v) => Ok(v.clone()),
        TauGrid::Span {
            g0m_start,
            periods,
            points,
        } => scan_grid(&p.field, *g0m_start, *periods, *points, p.pulse_area)
            .map_err(|e| ConfigError::new("tau_grid", e.to_string())),
    }
}

fn scan(p: &ScanParams) -> Result<RunOutput, RunError> {
    let taus = tau_list(p)?;
    let opts = ScanOptions {
        pulse_area: p.pulse_area,
        max_drive_ratio: p.max_drive_ratio,
    };
    let result = gbso_scan(&p.field, &taus, &opts);
    let failed = result.points.iter().filter(|pt| pt.outcome.is_err()).count();
    for pt in result.points.iter().filter(|pt| pt.outcome.is_err()) {
        log::warn!("τ = {}: {}", pt.tau, pt.outcome.as_ref().unwrap_err());
    }
    let mut out = RunOutput::default();
    out.file("scan.csv", |w| result.write_csv(w))?;

    let mut peaks = [f64::NAN; 3];
    // The spectrum needs every point and a uniform grid.
    match result.series().and_then(|s| spectrum(&s)) {
        Err(e) => log::warn!("no spectrum: {e}"),
        Ok(sp) => {
            out.file("spectrum.csv", |w| sp.write_csv(w))?;
            let tol = 2.0 * sp.resolution();
            for (slot, k) in peaks.iter_mut().zip([1.0, 2.0, 4.0]) {
                if let Some(pk) = sp.peak_near(k * p.field.omega(), tol) {
                    *slot = pk.amplitude;
                }
            }
        }
    }
    out.summary = vec![
        ("points", taus.len() as f64),
        ("failed", failed as f64),
        ("peak_1w", peaks[0]),
        ("peak_2w", peaks[1]),
        ("peak_4w", peaks[2]),
    ];
    Ok(out)
}

fn rms(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    (s / n.max(1) as f64).sqrt()
}

fn arbitrary_init(p: &ArbitraryInitParams) -> Result<RunOutput, RunError> {
    let dt = p.dt.expect("resolved");
    let err = blame("field");
    let full = evolve_mixture(&p.field, p.a0, p.t_end, dt, true).map_err(&err)?;
    let rwa = evolve_mixture(&p.field, p.a0, p.t_end, dt, false).map_err(&err)?;
    let residual = difference(&full.population(1), &rwa.population(1)).map_err(&err)?;
    let model = residual
        .t()
        .iter()
        .map(|&t| bso_term(&p.field, p.a0, t))
        .collect::<bsosim::Result<Vec<f64>>>()
        .map_err(&err)?;
    let model = TimeSeries::new(residual.t().to_vec(), model).map_err(&err)?;

    let mut out = RunOutput::default();
    out.file("residual.csv", |w| write_series_csv(w, "residual", &residual))?;
    out.file("analytic.csv", |w| write_series_csv(w, "residual", &model))?;
    let scale = rms(model.y().iter().copied());
    let dev = rms(residual.y().iter().zip(model.y()).map(|(a, b)| a - b));
    out.summary = vec![
        ("max_abs_residual", residual.max_abs()),
        ("rel_rms_vs_analytic", if scale > 0.0 { dev / scale } else { f64::NAN }),
    ];
    Ok(out)
}

fn lambda(p: &LambdaParams) -> Result<RunOutput, RunError> {
    let dt = p.dt.expect("resolved");
    let init = ThreeLevelState::basis(p.init_level);
    let err = blame("lambda");
    let full = evolve_lambda(&p.lambda, init, p.t_end, dt).map_err(&err)?;
    let rwa = evolve_lambda_rwa(&p.lambda, init, p.t_end, dt).map_err(&err)?;
    let residual = difference(&full.population(2), &rwa.population(2)).map_err(&err)?;
    let mut out = RunOutput::default();
    out.file("trajectory.csv", |w| full.write_csv(w))?;
    out.file("rwa.csv", |w| rwa.write_csv(w))?;
    out.file("residual.csv", |w| write_series_csv(w, "residual", &residual))?;
    let last = full.last().expect("non-empty trajectory");
    out.summary = vec![
        ("pop0_final", last.c0.norm_sqr()),
        ("pop1_max", full.population(1).max_abs()),
        ("pop2_final", last.c2.norm_sqr()),
        ("max_abs_residual", residual.max_abs()),
    ];
    Ok(out)
}

fn alpha(p: &CompositeParams) -> C64 {
    C64::from_polar(p.mean_photons.sqrt(), p.alpha_phase)
}

fn window(p: &CompositeParams) -> PhotonWindow {
    PhotonWindow::around(alpha(p), p.window_k)
}

fn composite(p: &CompositeParams) -> Result<RunOutput, RunError> {
    let dt = p.dt.expect("resolved");
    let atom_freq = p.atom_freq.expect("resolved");
    let (alpha, window) = (alpha(p), window(p));
    let build = |terms| build_2l_hamiltonian(p.g, p.omega, atom_freq, window, terms).map_err(blame("g"));
    let photons = coherent_amplitudes(alpha, window).map_err(blame("window_k"))?;
    let ground = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let init = FockComposite::product(&ground, &[(window, photons)]).map_err(blame("mean_photons"))?;
    let evolve = |terms| -> Result<(bsosim::composite::CsrMatrix, CompositeRun), RunError> {
        let (h, _) = build(terms)?;
        let tol = CompositeTolerances {
            leak_tol: p.leak_tol,
            norm_tol: p.norm_tol,
        };
        let run = evolve_composite(&h, &init, p.t_end, dt, tol).map_err(blame("t_end"))?;
        Ok((h, run))
    };
    let terms = match p.terms {
        Terms::Full => CouplingTerms::Full,
        Terms::RotatingOnly => CouplingTerms::RotatingOnly,
    };
    let (h, run) = evolve(terms)?;

    let eq = semiclassical_equivalent(p.g, p.omega, atom_freq, alpha).map_err(blame("g"))?;
    let sc = match terms {
        CouplingTerms::Full => evolve_two_level(&eq, TwoLevelState::ground(), p.t_end, dt),
        CouplingTerms::RotatingOnly => rwa_reference(&eq, TwoLevelState::ground(), p.t_end, dt),
    }
    .map_err(blame("dt"))?;
    let dev = run
        .population(1)
        .y()
        .iter()
        .zip(sc.population(1).y())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

    let mut out = RunOutput::default();
    out.file("populations.csv", |w| run.write_csv(w))?;
    out.file("semiclassical.csv", |w| sc.to_lab().write_csv(w))?;
    if p.export_hamiltonian {
        out.file("hamiltonian.csv", |w| h.write_coo(w))?;
    }
    let mut amp_2w = f64::NAN;
    let (mut drift, mut leak) = (run.max_norm_drift(), run.max_leakage());
    if p.bso_reference {
        let (_, reference) = evolve(CouplingTerms::RotatingOnly)?;
        drift = drift.max(reference.max_norm_drift());
        leak = leak.max(reference.max_leakage());
        let residual = difference(&run.population(1), &reference.population(1)).map_err(blame("dt"))?;
        let g_eff = eq.g0m();
        let env: Vec<f64> = residual.t().iter().map(|t| (g_eff * t).sin()).collect();
        amp_2w = demodulate_enveloped(&residual, 2.0 * p.omega, &env)
            .map(|pk| pk.amplitude)
            .unwrap_or(f64::NAN);
        out.file("reference_populations.csv", |w| reference.write_csv(w))?;
        out.file("residual.csv", |w| write_series_csv(w, "residual", &residual))?;
    }
    out.summary = vec![
        ("dim", h.dim() as f64),
        ("g_eff", eq.g0m()),
        ("max_deviation", dev),
        ("max_norm_drift", drift),
        ("max_leakage", leak),
        ("amp_2w", amp_2w),
    ];
    Ok(out)
}

fn raman(p: &RamanParams) -> Result<RunOutput, RunError> {
    let field = p.field.expect("resolved");
    let r = raman_bso_compare(&p.lambda, &field).map_err(blame("field"))?;
    let mut out = RunOutput::default();
    let row = [r.raman_bso_amp, r.direct_bso_amp, r.ratio];
    out.file("report.csv", |w| {
        csv::write_header(w, &["raman_bso_amp", "direct_bso_amp", "ratio"])?;
        csv::write_row(w, &row)
    })?;
    out.summary = vec![
        ("raman_bso_amp", r.raman_bso_amp),
        ("direct_bso_amp", r.direct_bso_amp),
        ("ratio", r.ratio),
    ];
    Ok(out)
}

fn analytic(p: &AnalyticParams) -> Result<RunOutput, RunError> {
    let (n, dt) = bsosim::integrate::step_grid(p.t_end, p.dt.expect("resolved")).map_err(blame("t_end"))?;
    let times: Vec<f64> = (0..=n).map(|k| if k == n { p.t_end } else { k as f64 * dt }).collect();
    let traj = adiabatic_trajectory(&p.field, &times).map_err(blame("field"))?;
    let mut out = RunOutput::default();
    out.file("trajectory.csv", |w| traj.write_csv(w))?;
    if let Some(a0) = p.a0 {
        let y = times
            .iter()
            .map(|&t| bso_term(&p.field, a0, t))
            .collect::<bsosim::Result<Vec<f64>>>()
            .map_err(blame("a0"))?;
        let s = TimeSeries::new(times.clone(), y).map_err(blame("t_end"))?;
        out.file("bso.csv", |w| write_series_csv(w, "residual", &s))?;
    }
    let last = traj.last().expect("non-empty trajectory");
    out.summary = vec![("pop1_final", last.c1.norm_sqr())];
    Ok(out)
}
