use nalgebra::{DMatrix, DVector};
use std::io::{self, Write};

use super::fock::FockComposite;
use super::sparse::CsrMatrix;
use crate::{csv, Error, Result, C64};

/// Default bound on the probability in the edge photon shells.
pub const LEAK_TOL: f64 = 1e-6;
/// Default bound on `| |ψ|² - 1 |` for composite runs.
pub const COMPOSITE_NORM_TOL: f64 = 1e-8;
/// Per-step error target of the Krylov propagator.
pub const KRYLOV_TOL: f64 = 1e-10;
const KRYLOV_MAX_DIM: usize = 40;
/// Sub-steps are chosen so that `‖H‖ h` stays below this.
const MAX_PHASE_PER_STEP: f64 = 8.0;

/// `exp(-i h H) v` by a Lanczos (Krylov) approximation with full
/// reorthogonalization. The subspace grows until the a-posteriori error
/// estimate drops below [`KRYLOV_TOL`] relative to `|v|`.
pub fn expv(h: &CsrMatrix, v: &[C64], step: f64) -> Result<Vec<C64>> {
    let dim = v.len();
    let beta0 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if beta0 == 0.0 {
        return Ok(v.to_vec());
    }
    let max_m = KRYLOV_MAX_DIM.min(dim);
    let mut basis: Vec<Vec<C64>> = vec![v.iter().map(|c| c / beta0).collect()];
    let mut alpha = Vec::with_capacity(max_m);
    let mut beta: Vec<f64> = Vec::with_capacity(max_m);
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut residual = f64::INFINITY;
    let scale = h.norm_bound().max(f64::MIN_POSITIVE);
    for j in 0..max_m {
        h.matvec(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // Full reorthogonalization (twice is enough).
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let b = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let coeffs = small_exp(&alpha, &beta, step);
        residual = if b <= 1e-14 * scale { 0.0 } else { b * coeffs[j].norm() };
        if residual < KRYLOV_TOL {
            let mut out = vec![C64::new(0.0, 0.0); dim];
            for (q, c) in basis.iter().zip(&coeffs) {
                for (o, qi) in out.iter_mut().zip(q) {
                    *o += beta0 * c * qi;
                }
            }
            return Ok(out);
        }
        beta.push(b);
        basis.push(w.iter().map(|c| c / b).collect());
    }
    Err(Error::KrylovNotConverged {
        residual,
        suggested: step / 2.0,
    })
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// First column of `exp(-i h T)` for the real symmetric tridiagonal `T`.
fn small_exp(alpha: &[f64], beta: &[f64], step: f64) -> Vec<C64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DVector::from_iterator(
        m,
        eig.eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &lam)| C64::from_polar(v[(0, k)], -lam * step)),
    );
    (0..m).map(|i| (0..m).map(|k| v[(i, k)] * phases[k]).sum()).collect()
}

/// Atomic populations, norm and edge-shell probability on the sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeRun {
    pub times: Vec<f64>,
    /// `populations[level][sample]`
    pub populations: Vec<Vec<f64>>,
    pub norm: Vec<f64>,
    pub leakage: Vec<f64>,
    pub final_state: FockComposite,
}

impl CompositeRun {
    pub fn population(&self, level: usize) -> crate::TimeSeries {
        crate::TimeSeries::new(self.times.clone(), self.populations[level].clone()).expect("increasing grid")
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norm.iter().fold(0.0, |m, n| m.max((n - 1.0).abs()))
    }

    pub fn max_leakage(&self) -> f64 {
        self.leakage.iter().copied().fold(0.0, f64::max)
    }

    /// `t,p0,p1[,p2],norm,leakage`
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let levels = self.populations.len();
        let mut header = vec!["t".to_string()];
        header.extend((0..levels).map(|k| format!("p{k}")));
        header.push("norm".into());
        header.push("leakage".into());
        csv::write_header(w, &header.iter().map(String::as_str).collect::<Vec<_>>())?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![*t];
            row.extend(self.populations.iter().map(|p| p[k]));
            row.push(self.norm[k]);
            row.push(self.leakage[k]);
            csv::write_row(w, &row)?;
        }
        Ok(())
    }
}

/// Tolerances of [`evolve_composite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeTolerances {
    pub leak_tol: f64,
    pub norm_tol: f64,
}

impl Default for CompositeTolerances {
    fn default() -> Self {
        Self {
            leak_tol: LEAK_TOL,
            norm_tol: COMPOSITE_NORM_TOL,
        }
    }
}

/// Propagates `init` under the time-independent `h`, sampling every `dt`
/// up to `t_end`. Each sample interval is split into equal sub-steps with
/// `‖H‖ h <= 8` so the Krylov space stays small. Aborts when the edge
/// shells or the norm breach the tolerances.
pub fn evolve_composite(
    h: &CsrMatrix,
    init: &FockComposite,
    t_end: f64,
    dt: f64,
    tol: CompositeTolerances,
) -> Result<CompositeRun> {
    if h.dim() != init.dim() {
        return Err(Error::Domain(format!(
            "operator dimension {} vs state {}",
            h.dim(),
            init.dim()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
    }
    let (n, dt) = crate::integrate::step_grid(t_end, dt)?;
    let sub = ((h.norm_bound() * dt / MAX_PHASE_PER_STEP).ceil() as usize).max(1);
    let h_sub = dt / sub as f64;

    let mut state = init.clone();
    let levels = state.levels();
    let mut run = CompositeRun {
        times: Vec::with_capacity(n + 1),
        populations: vec![Vec::with_capacity(n + 1); levels],
        norm: Vec::with_capacity(n + 1),
        leakage: Vec::with_capacity(n + 1),
        final_state: init.clone(),
    };
    let record = |run: &mut CompositeRun, t: f64, s: &FockComposite| -> Result<()> {
        let norm = s.norm_sqr();
        let leak = s.leakage();
        run.times.push(t);
        for (p, v) in run.populations.iter_mut().zip(s.populations()) {
            p.push(v);
        }
        run.norm.push(norm);
        run.leakage.push(leak);
        if !((norm - 1.0).abs() <= tol.norm_tol) {
            return Err(Error::NormDrift {
                t,
                drift: (norm - 1.0).abs(),
                tol: tol.norm_tol,
            });
        }
        if !(leak <= tol.leak_tol) {
            return Err(Error::Leakage {
                t,
                leakage: leak,
                tol: tol.leak_tol,
            });
        }
        Ok(())
    };
    record(&mut run, 0.0, &state)?;
    for k in 0..n {
        for _ in 0..sub {
            state.amps = expv(h, &state.amps, h_sub)?;
        }
        let t = if k + 1 == n { t_end } else { (k + 1) as f64 * dt };
        record(&mut run, t, &state)?;
    }
    run.final_state = state;
    Ok(run)
}
