//! One line per primary acceptance criterion; the test fails if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use bsosim::analytic::{adiabatic_trajectory, bso_term};
use bsosim::composite::{
    build_2l_hamiltonian, build_3l_hamiltonian, coherent_amplitudes, coherent_two_level_run, evolve_composite,
    raman_bso_compare, semiclassical_equivalent, CompositeTolerances, CouplingTerms, CsrMatrix, FockComposite,
    PhotonWindow, DEFAULT_WINDOW_K,
};
use bsosim::floquet::{evolve_ladder, ladder_max_dt, truncation_scan};
use bsosim::semiclassical::{
    default_dt, evolve_lambda, evolve_mixture, evolve_two_level, evolve_two_level_dc, lambda_default_dt, rwa_reference,
    Trajectory,
};
use bsosim::signal::{demodulate, demodulate_enveloped, difference, gbso_scan, scan_grid, spectrum, ScanOptions};
use bsosim::{DriveField, LambdaConfig, ThreeLevelState, TimeSeries, TwoLevelState, C64};

const OMEGA: f64 = 10.0;
const ETA: f64 = 1.0 / (4.0 * OMEGA);

struct Outcome {
    pass: bool,
    detail: String,
}

/// Largest norm drift and Fock leakage seen by any run below.
#[derive(Default)]
struct Unitarity {
    drift: f64,
    leakage: f64,
    runs: usize,
}

impl Unitarity {
    fn traj<S: bsosim::model::StateVector>(&mut self, t: &Trajectory<S>) {
        self.drift = self.drift.max(t.max_norm_drift());
        self.runs += 1;
    }

    fn composite(&mut self, r: &bsosim::composite::CompositeRun) {
        self.drift = self.drift.max(r.max_norm_drift());
        self.leakage = self.leakage.max(r.max_leakage());
        self.runs += 1;
    }
}

fn field() -> DriveField {
    DriveField::new(OMEGA, 1.0).unwrap().with_tau_sw(1.0).unwrap()
}

fn fit_dt(t_end: f64, dt: f64) -> f64 {
    t_end / (t_end / dt).ceil()
}

fn max_diff(a: &TimeSeries, b: &TimeSeries) -> f64 {
    a.y().iter().zip(b.y()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn rms(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    (s / n as f64).sqrt()
}

fn analytic_agreement(u: &mut Unitarity) -> Outcome {
    let f = field();
    let t_end = 4.0 * PI;
    let num = evolve_two_level(&f, TwoLevelState::ground(), t_end, default_dt(&f)).unwrap();
    u.traj(&num);
    let ana = adiabatic_trajectory(&f, &num.times).unwrap();
    let d = max_diff(&num.population(1), &ana.population(1));
    let bound = 5.0 * ETA * ETA;
    Outcome {
        pass: d < bound,
        detail: format!("max |Δ|c1|²| = {d:.3e}, bound 5η² = {bound:.3e}"),
    }
}

fn phase_law(u: &mut Unitarity) -> Outcome {
    let f = field();
    let tau = f.time_for_pulse_area(PI / 2.0).unwrap();
    let dt = fit_dt(tau, default_dt(&f));
    let phis: Vec<f64> = (0..16).map(|k| k as f64 * PI / 16.0).collect();
    let ys: Vec<f64> = phis
        .iter()
        .map(|&phi| {
            let tr = evolve_two_level(&f.with_phi(phi), TwoLevelState::ground(), tau, dt).unwrap();
            u.traj(&tr);
            tr.last().unwrap().c1.norm_sqr()
        })
        .collect();
    let x: Vec<f64> = phis.iter().map(|p| 2.0 * OMEGA * tau + 2.0 * p).collect();
    let a = DMatrix::from_fn(16, 3, |i, j| [1.0, x[i].sin(), x[i].cos()][j]);
    let c = a
        .clone()
        .svd(true, true)
        .solve(&DVector::from_vec(ys.clone()), 1e-14)
        .unwrap();
    let amp = c[1].hypot(c[2]);
    let resid = rms(x.iter().zip(&ys).map(|(x, y)| y - 0.5 * (1.0 + 2.0 * ETA * x.sin())));
    Outcome {
        pass: (amp / ETA - 1.0).abs() < 0.1 && resid < 2e-3,
        detail: format!("τ = {tau:.4}, fitted amplitude {amp:.4e} (η = {ETA}), RMS vs law {resid:.2e}"),
    }
}

fn mixture_residual(f: &DriveField, a0: f64, t_end: f64) -> TimeSeries {
    let dt = default_dt(f);
    let full = evolve_mixture(f, a0, t_end, dt, true).unwrap();
    let rwa = evolve_mixture(f, a0, t_end, dt, false).unwrap();
    difference(&full.population(1), &rwa.population(1)).unwrap()
}

fn arbitrary_init(u: &mut Unitarity) -> Outcome {
    let f = field();
    let t_end = 2.0 * PI;
    let full = evolve_mixture(&f, 0.3, t_end, default_dt(&f), true).unwrap();
    full.branches.iter().for_each(|b| u.traj(b));
    let r = mixture_residual(&f, 0.3, t_end);
    let model: Vec<f64> = r.t().iter().map(|&t| bso_term(&f, 0.3, t).unwrap()).collect();
    let rel = rms(r.y().iter().zip(&model).map(|(a, b)| a - b)) / rms(model.iter().copied());
    let null = mixture_residual(&f, 0.5, t_end).max_abs();
    Outcome {
        pass: rel < 0.15 && null < 0.1 * ETA,
        detail: format!("A0 = 0.3 relative RMS {rel:.4}, A0 = 0.5 residual {null:.2e}"),
    }
}

fn floquet_ladder(u: &mut Unitarity) -> Outcome {
    let f = field();
    let t_end = 4.0 * PI;
    let dt0 = ladder_max_dt(&f, 0);
    let lad = evolve_ladder(&f, 0, TwoLevelState::ground(), t_end, dt0)
        .unwrap()
        .reconstruct();
    let rwa = rwa_reference(&f, TwoLevelState::ground(), t_end, dt0).unwrap();
    u.traj(&rwa);
    let d0 = lad.states.iter().zip(&rwa.states).fold(0.0f64, |m, (a, b)| {
        m.max((a.c0 - b.c0).norm()).max((a.c1 - b.c1).norm())
    });

    let dt2 = ladder_max_dt(&f, 2);
    let lad = evolve_ladder(&f, 2, TwoLevelState::ground(), t_end, dt2)
        .unwrap()
        .reconstruct();
    let direct = evolve_two_level(&f, TwoLevelState::ground(), t_end, dt2).unwrap();
    u.traj(&direct);
    let d2 = max_diff(&lad.population(1), &direct.population(1));

    let rows = truncation_scan(&f, 4, t_end).unwrap();
    let devs: Vec<f64> = rows[..rows.len() - 1].iter().map(|r| r.deviation).collect();
    let monotone = devs.windows(2).all(|w| w[0] <= 1e-10 || w[1] < w[0]);
    Outcome {
        pass: d0 < 1e-10 && d2 < 1e-4 && monotone,
        detail: format!(
            "N=0 vs RWA {d0:.1e}, N=2 vs direct {d2:.1e}, truncation [{}]",
            devs.iter().map(|d| format!("{d:.1e}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn show(peak: Option<f64>) -> String {
    peak.map_or("absent".into(), |a| format!("{a:.2e}"))
}

fn gbso_harmonics() -> Outcome {
    let template = DriveField::new(OMEGA, 1.0).unwrap().with_adiabatic_switching();
    let mut found = Vec::new();
    for target in [0.4 * OMEGA, 0.02 * OMEGA] {
        let taus = scan_grid(&template, target, 8.0, 128, PI / 2.0).unwrap();
        let scan = gbso_scan(&template, &taus, &ScanOptions::default());
        let sp = spectrum(&scan.series().unwrap()).unwrap();
        let tol = 2.0 * sp.resolution();
        let strength = |w: f64| sp.peak_near(w, tol).map(|p| p.amplitude);
        found.push((target, strength(2.0 * OMEGA), strength(4.0 * OMEGA)));
    }
    let (strong, weak) = (found[0], found[1]);
    Outcome {
        pass: strong.1.is_some() && strong.2.is_some() && weak.2.is_none(),
        detail: format!(
            "g0M/ω = 0.4: 2ω {}, 4ω {}; g0M/ω = 0.02: 4ω {}",
            show(strong.1),
            show(strong.2),
            show(weak.2)
        ),
    }
}

fn dc_effect(u: &mut Unitarity) -> Outcome {
    let f = field();
    let t_end = 8.0;
    let dt = default_dt(&f);
    let tc = f.time_for_pulse_area(PI / 2.0).unwrap();
    // Three periods of ω, plus one step so the sampled span covers them.
    let half = 3.0 * PI / OMEGA + dt;
    let rwa = rwa_reference(&f, TwoLevelState::ground(), t_end, dt).unwrap();
    let amp = |g_dc: f64, u: &mut Unitarity| {
        let full = evolve_two_level_dc(&f.with_g_dc(g_dc).unwrap(), TwoLevelState::ground(), t_end, dt).unwrap();
        u.traj(&full);
        let r = difference(&full.population(1), &rwa.population(1)).unwrap();
        demodulate(&r.window(tc - half, tc + half).unwrap(), OMEGA)
            .unwrap()
            .amplitude
    };
    let a0 = amp(0.0, u);
    let a5 = amp(0.5, u);
    let xs = [0.1, 0.2, 0.4];
    let ys: Vec<f64> = xs.iter().map(|&g| amp(g, u)).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    Outcome {
        pass: a5 > 10.0 * a0 && r2 > 0.95,
        detail: format!("ω-amplitude {a5:.3e} at g_dc = 0.5 vs {a0:.3e} at 0, R² = {r2:.6}"),
    }
}

fn composite_correspondence(u: &mut Unitarity) -> Outcome {
    let g_eff = 1.0;
    let alpha = C64::new(20.0, 0.0);
    let g = g_eff / (2.0 * alpha.norm());
    let t_end = 2.0 * PI / g_eff;
    let sc_field = semiclassical_equivalent(g, OMEGA, OMEGA, alpha).unwrap();
    let dt = default_dt(&sc_field);
    let full = coherent_two_level_run(g, OMEGA, OMEGA, alpha, CouplingTerms::Full, t_end, dt).unwrap();
    let jc = coherent_two_level_run(g, OMEGA, OMEGA, alpha, CouplingTerms::RotatingOnly, t_end, dt).unwrap();
    u.composite(&full);
    u.composite(&jc);
    let sc = evolve_two_level(&sc_field, TwoLevelState::ground(), t_end, dt).unwrap();
    let dev = max_diff(&full.population(1), &sc.population(1));
    let r = difference(&full.population(1), &jc.population(1)).unwrap();
    let env: Vec<f64> = r.t().iter().map(|t| (g_eff * t).sin()).collect();
    let amp = demodulate_enveloped(&r, 2.0 * OMEGA, &env).unwrap().amplitude;
    let target = g_eff / (4.0 * OMEGA);
    Outcome {
        pass: dev < 0.05 && amp > target / 2.0 && amp < 2.0 * target,
        detail: format!("max deviation {dev:.2e}, 2ω residual {amp:.4e} vs g_eff/4ω = {target}"),
    }
}

fn raman_suppression(u: &mut Unitarity) -> Outcome {
    let delta = 8.0;
    let g = LambdaConfig::g_for_raman_rate(delta, 1.0);
    let reports: Vec<_> = [10.0, 30.0, 100.0]
        .iter()
        .map(|&omega| {
            let cfg = LambdaConfig::symmetric(omega, 1.0, delta, g);
            let direct = DriveField::new(1.0, cfg.raman_rabi_exact()).unwrap();
            let tr = evolve_lambda(&cfg, ThreeLevelState::basis(0), 2.0 * PI, lambda_default_dt(&cfg)).unwrap();
            u.traj(&tr);
            raman_bso_compare(&cfg, &direct).unwrap()
        })
        .collect();
    let ratios: Vec<f64> = reports.iter().map(|r| r.ratio).collect();
    let amps: Vec<f64> = reports.iter().map(|r| r.raman_bso_amp).collect();
    let decreasing = amps.windows(2).all(|w| w[1] < w[0]);
    Outcome {
        pass: ratios[2] < 0.1 && decreasing,
        detail: format!(
            "Raman/direct at ω/Δω = 10, 30, 100: {}",
            ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

/// Every stored off-diagonal element must be one of `expected`, and every
/// expected element must be present with the given value.
fn pattern_matches(h: &CsrMatrix, expected: &[(usize, usize, f64)]) -> bool {
    let off: Vec<_> = h.triplets().filter(|(r, c, _)| r != c).collect();
    off.len() == expected.len()
        && expected
            .iter()
            .all(|&(r, c, v)| (h.get(r, c) - C64::new(v, 0.0)).norm() < 1e-14)
}

fn selection_rules() -> Outcome {
    let g = 0.07;
    let w = PhotonWindow::new(5, 14).unwrap();
    let mut ok = true;
    for terms in [CouplingTerms::Full, CouplingTerms::RotatingOnly] {
        let (h, s) = build_2l_hamiltonian(g, OMEGA, OMEGA, w, terms).unwrap();
        let mut expected = Vec::new();
        for n in w.n_lo..=w.n_hi {
            let ground = s.index(0, n, None).unwrap();
            let mut link = |m: usize, v: f64| {
                if let Some(up) = s.index(1, m, None) {
                    expected.push((up, ground, v));
                    expected.push((ground, up, v));
                }
            };
            link(n - 1, g * (n as f64).sqrt());
            if terms == CouplingTerms::Full {
                link(n + 1, g * (n as f64 + 1.0).sqrt());
            }
        }
        ok &= pattern_matches(&h, &expected);
    }

    let cfg = LambdaConfig::symmetric(50.0, 1.0, 5.0, g);
    let (w1, w2) = (PhotonWindow::new(3, 9).unwrap(), PhotonWindow::new(0, 6).unwrap());
    let (h, s) = build_3l_hamiltonian(&cfg, w1, w2, CouplingTerms::Full).unwrap();
    let mut expected = Vec::new();
    let mut zero_02 = true;
    for n in w1.n_lo..=w1.n_hi {
        for m in w2.n_lo..=w2.n_hi {
            let mut link = |a: Option<usize>, b: Option<usize>, v: f64| {
                if let (Some(a), Some(b)) = (a, b) {
                    expected.push((a, b, v));
                    expected.push((b, a, v));
                }
            };
            let low = s.index(0, n, Some(m));
            let side = s.index(2, n, Some(m));
            link(
                n.checked_sub(1).and_then(|k| s.index(1, k, Some(m))),
                low,
                g * (n as f64).sqrt(),
            );
            link(s.index(1, n + 1, Some(m)), low, g * (n as f64 + 1.0).sqrt());
            link(
                m.checked_sub(1).and_then(|k| s.index(1, n, Some(k))),
                side,
                g * (m as f64).sqrt(),
            );
            link(s.index(1, n, Some(m + 1)), side, g * (m as f64 + 1.0).sqrt());
        }
    }
    for (r, c, _) in h.triplets() {
        let (lr, lc) = (s.labels(r).0, s.labels(c).0);
        zero_02 &= !matches!((lr, lc), (0, 2) | (2, 0));
    }
    ok &= pattern_matches(&h, &expected) && zero_02;
    Outcome {
        pass: ok,
        detail: format!("two-level (full, rotating-only) and lambda patterns; direct 0↔2 absent: {zero_02}"),
    }
}

fn lambda_composite_run(u: &mut Unitarity) {
    let cfg = LambdaConfig::symmetric(20.0, 1.0, 4.0, 0.05);
    let alpha = C64::new(4.0, 0.0);
    let w = PhotonWindow::around(alpha, DEFAULT_WINDOW_K);
    let (h, _) = build_3l_hamiltonian(&cfg, w, w, CouplingTerms::Full).unwrap();
    let photons = coherent_amplitudes(alpha, w).unwrap();
    let atom = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
    let init = FockComposite::product(&atom, &[(w, photons.clone()), (w, photons)]).unwrap();
    let run = evolve_composite(&h, &init, 2.0, 0.01, CompositeTolerances::default()).unwrap();
    u.composite(&run);
}

#[test]
fn primary_criteria() {
    let mut u = Unitarity::default();
    let mut lines = Vec::new();
    let mut all = true;
    let mut check = |name: &str, budget: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let pass = o.pass && took <= budget;
        all &= pass;
        let line = format!(
            "{} {name}: {} [{:.2} s, budget {} s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
        println!("{line}");
        lines.push(line);
    };
    let s = Duration::from_secs;
    check("analytic/numeric agreement", s(1), &mut || analytic_agreement(&mut u));
    check("π/2 phase law", s(10), &mut || phase_law(&mut u));
    check("arbitrary initial population", s(1), &mut || arbitrary_init(&mut u));
    check("Floquet ladder", s(5), &mut || floquet_ladder(&mut u));
    check("GBSO harmonics", s(30), &mut gbso_harmonics);
    check("dc-field effect", s(10), &mut || dc_effect(&mut u));
    check("composite correspondence", s(60), &mut || {
        composite_correspondence(&mut u)
    });
    check("Raman suppression", s(120), &mut || raman_suppression(&mut u));
    check("selection rules", s(1), &mut selection_rules);
    check("unitarity", s(60), &mut || {
        lambda_composite_run(&mut u);
        Outcome {
            pass: u.drift < 1e-8 && u.leakage < 1e-6,
            detail: format!(
                "{} runs, max norm drift {:.1e}, max leakage {:.1e}",
                u.runs, u.drift, u.leakage
            ),
        }
    });
    assert!(
        all,
        "failed criteria:\n{}",
        lines
            .iter()
            .filter(|l| l.starts_with("FAIL"))
            .cloned()
            .collect::<Vec<_>>()
            .join("\n")
    );
}
