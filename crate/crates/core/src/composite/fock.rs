use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Photon numbers kept for the coherent-state window unless overridden:
/// `|α|² ± k max(|α|, 1)`.
pub const DEFAULT_WINDOW_K: f64 = 7.0;

/// Smallest captured probability accepted for a truncated coherent state.
pub const MIN_CAPTURED: f64 = 1.0 - 1e-9;

/// Inclusive photon-number range `[n_lo, n_hi]` of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhotonWindow {
    pub n_lo: usize,
    pub n_hi: usize,
}

impl PhotonWindow {
    pub fn new(n_lo: usize, n_hi: usize) -> Result<Self> {
        if n_hi < n_lo {
            return Err(Error::Domain(format!("empty photon window [{n_lo}, {n_hi}]")));
        }
        Ok(Self { n_lo, n_hi })
    }

    /// Window around a coherent state of amplitude `alpha`, `k` standard
    /// deviations each side, widened by whole standard deviations while the
    /// captured probability is below `1 - 1e-10` (the Poisson tail is
    /// heavier than Gaussian at small `|α|`).
    pub fn around(alpha: C64, k: f64) -> Self {
        let mean = alpha.norm_sqr();
        let sigma = alpha.norm().max(1.0);
        let mut half = k * sigma;
        loop {
            let w = Self {
                n_lo: (mean - half).floor().max(0.0) as usize,
                n_hi: (mean + half).ceil() as usize,
            };
            if coherent_capture(alpha, w) >= 1.0 - 1e-10 {
                return w;
            }
            half += sigma;
        }
    }

    pub fn len(&self) -> usize {
        self.n_hi - self.n_lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: usize) -> bool {
        (self.n_lo..=self.n_hi).contains(&n)
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.n_lo + self.n_hi) as f64
    }

    /// True for the shells where truncation acts: `n_hi`, and `n_lo` unless
    /// it is the vacuum.
    pub fn is_edge(&self, n: usize) -> bool {
        n == self.n_hi || (n == self.n_lo && self.n_lo > 0)
    }
}

/// Probability captured by `window` for a coherent state of amplitude
/// `alpha`, evaluated in log space.
pub fn coherent_capture(alpha: C64, window: PhotonWindow) -> f64 {
    coherent_weights(alpha, window).iter().sum()
}

fn coherent_weights(alpha: C64, window: PhotonWindow) -> Vec<f64> {
    let mean = alpha.norm_sqr();
    if mean == 0.0 {
        return (window.n_lo..=window.n_hi)
            .map(|n| if n == 0 { 1.0 } else { 0.0 })
            .collect();
    }
    let ln_mean = mean.ln();
    let mut ln_fact: f64 = (1..=window.n_lo).map(|k| (k as f64).ln()).sum();
    let mut out = Vec::with_capacity(window.len());
    for n in window.n_lo..=window.n_hi {
        if n > window.n_lo {
            ln_fact += (n as f64).ln();
        }
        out.push((-mean + n as f64 * ln_mean - ln_fact).exp());
    }
    out
}

/// Coherent-state amplitudes `e^{-|α|²/2} αⁿ / √(n!)` over `window`,
/// renormalized to unit norm. Fails if the window captures less than
/// `1 - 1e-9` of the probability.
pub fn coherent_amplitudes(alpha: C64, window: PhotonWindow) -> Result<Vec<C64>> {
    let weights = coherent_weights(alpha, window);
    let captured: f64 = weights.iter().sum();
    if !(captured >= MIN_CAPTURED) {
        return Err(Error::WindowTooNarrow { captured });
    }
    let scale = captured.sqrt();
    let arg = alpha.arg();
    Ok(weights
        .iter()
        .zip(window.n_lo..)
        .map(|(w, n)| C64::from_polar(w.sqrt() / scale, n as f64 * arg))
        .collect())
}

/// Atom (2 or 3 levels) times one or two truncated photon modes.
///
/// Amplitudes are stored level-major, then mode 1, then mode 2.
#[derive(Debug, Clone, PartialEq)]
pub struct FockComposite {
    levels: usize,
    windows: Vec<PhotonWindow>,
    pub amps: Vec<C64>,
}

impl FockComposite {
    pub fn zeros(levels: usize, windows: Vec<PhotonWindow>) -> Result<Self> {
        if !(2..=3).contains(&levels) {
            return Err(Error::Domain(format!("atom must have 2 or 3 levels, got {levels}")));
        }
        if !(1..=2).contains(&windows.len()) {
            return Err(Error::Domain(format!(
                "one or two photon modes supported, got {}",
                windows.len()
            )));
        }
        let dim = levels * windows.iter().map(PhotonWindow::len).product::<usize>();
        Ok(Self {
            levels,
            windows,
            amps: vec![C64::new(0.0, 0.0); dim],
        })
    }

    /// Product state `atom ⊗ mode_1 [⊗ mode_2]`.
    pub fn product(atom: &[C64], modes: &[(PhotonWindow, Vec<C64>)]) -> Result<Self> {
        let mut s = Self::zeros(atom.len(), modes.iter().map(|m| m.0).collect())?;
        for (m, (w, a)) in modes.iter().enumerate() {
            if a.len() != w.len() {
                return Err(Error::Domain(format!(
                    "mode {m}: {} amplitudes for window of {}",
                    a.len(),
                    w.len()
                )));
            }
        }
        let ones = vec![C64::new(1.0, 0.0)];
        let second = modes.get(1).map_or(&ones, |m| &m.1);
        let mut k = 0;
        for c in atom {
            for a in &modes[0].1 {
                for b in second {
                    s.amps[k] = c * a * b;
                    k += 1;
                }
            }
        }
        Ok(s)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn windows(&self) -> &[PhotonWindow] {
        &self.windows
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    fn mode2_len(&self) -> usize {
        self.windows.get(1).map_or(1, PhotonWindow::len)
    }

    /// Flat index of `|level⟩|n⟩[|m⟩]`, if inside the windows.
    pub fn index(&self, level: usize, n: usize, m: Option<usize>) -> Option<usize> {
        if level >= self.levels || !self.windows[0].contains(n) {
            return None;
        }
        let j = match (self.windows.get(1), m) {
            (Some(w), Some(m)) if w.contains(m) => m - w.n_lo,
            (None, None) => 0,
            _ => return None,
        };
        Some((level * self.windows[0].len() + n - self.windows[0].n_lo) * self.mode2_len() + j)
    }

    /// Inverse of [`index`](Self::index): `(level, n, m)`.
    pub fn labels(&self, k: usize) -> (usize, usize, Option<usize>) {
        let m2 = self.mode2_len();
        let j = k % m2;
        let rest = k / m2;
        let n = rest % self.windows[0].len() + self.windows[0].n_lo;
        let level = rest / self.windows[0].len();
        (level, n, self.windows.get(1).map(|w| w.n_lo + j))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Atomic populations, traced over the photons.
    pub fn populations(&self) -> Vec<f64> {
        let block = self.dim() / self.levels;
        self.amps
            .chunks(block)
            .map(|b| b.iter().map(|c| c.norm_sqr()).sum())
            .collect()
    }

    /// Probability in the edge shells of any mode.
    pub fn leakage(&self) -> f64 {
        (0..self.dim())
            .filter(|&k| {
                let (_, n, m) = self.labels(k);
                self.windows[0].is_edge(n) || m.is_some_and(|m| self.windows[1].is_edge(m))
            })
            .map(|k| self.amps[k].norm_sqr())
            .sum()
    }

    /// Mean photon number of `mode`.
    pub fn mean_photons(&self, mode: usize) -> f64 {
        (0..self.dim())
            .map(|k| {
                let (_, n, m) = self.labels(k);
                let count = if mode == 0 { n } else { m.unwrap_or(0) };
                count as f64 * self.amps[k].norm_sqr()
            })
            .sum()
    }
}
