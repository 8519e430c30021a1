use super::fock::{FockComposite, PhotonWindow};
use super::sparse::CsrMatrix;
use crate::{Error, LambdaConfig, Result, C64};

/// Which parts of `(S_ij + S_ji)(a + a†)` to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingTerms {
    /// Co- and counter-rotating terms.
    #[default]
    Full,
    /// Energy-conserving terms only (Jaynes-Cummings form).
    RotatingOnly,
}

/// Two-level atom (splitting `atom_freq`) coupled to one mode of frequency
/// `omega`:
///
/// ```text
/// H = atom_freq |1⟩⟨1| + omega (n - n_c) + g (|0⟩⟨1| + |1⟩⟨0|)(a + a†)
/// ```
///
/// The constant `n_c` (window centre) only shifts the energy origin.
pub fn build_2l_hamiltonian(
    g: f64,
    omega: f64,
    atom_freq: f64,
    window: PhotonWindow,
    terms: CouplingTerms,
) -> Result<(CsrMatrix, FockComposite)> {
    let layout = FockComposite::zeros(2, vec![window])?;
    let nc = window.center();
    let mut t = Vec::with_capacity(4 * layout.dim());
    for n in window.n_lo..=window.n_hi {
        for level in 0..2 {
            let k = layout.index(level, n, None).unwrap();
            let e = level as f64 * atom_freq + omega * (n as f64 - nc);
            t.push((k, k, C64::new(e, 0.0)));
        }
        let ground = layout.index(0, n, None).unwrap();
        // Absorption |0,n⟩ → |1,n-1⟩.
        if n > 0 {
            if let Some(up) = layout.index(1, n - 1, None) {
                push_pair(&mut t, up, ground, g * (n as f64).sqrt());
            }
        }
        // Counter-rotating |0,n⟩ → |1,n+1⟩.
        if terms == CouplingTerms::Full {
            if let Some(up) = layout.index(1, n + 1, None) {
                push_pair(&mut t, up, ground, g * (n as f64 + 1.0).sqrt());
            }
        }
    }
    Ok((CsrMatrix::from_triplets(layout.dim(), t), layout))
}

fn push_pair(t: &mut Vec<(usize, usize, C64)>, i: usize, j: usize, v: f64) {
    t.push((i, j, C64::new(v, 0.0)));
    t.push((j, i, C64::new(v, 0.0)));
}

/// Lambda atom with two modes: mode 1 (`ν1 = ω01 + δ`, photons `n`) couples
/// `0↔1`, mode 2 (`ν2 = ω12 + δ`, photons `m`) couples `1↔2`, each with the
/// single-photon coupling `cfg.g`. Level energies are `0`, `ω01`,
/// `ω01 - ω12`; photon energies are measured from the window centres.
pub fn build_3l_hamiltonian(
    cfg: &LambdaConfig,
    window1: PhotonWindow,
    window2: PhotonWindow,
    terms: CouplingTerms,
) -> Result<(CsrMatrix, FockComposite)> {
    cfg.validate()?;
    if cfg.cross_coupling {
        return Err(Error::Domain(
            "cross-coupled legs are not modelled in the quantized lambda system".into(),
        ));
    }
    let layout = FockComposite::zeros(3, vec![window1, window2])?;
    let energies = [0.0, cfg.omega01, cfg.level2_energy()];
    let (c1, c2) = (window1.center(), window2.center());
    let g = cfg.g;
    let mut t = Vec::with_capacity(6 * layout.dim());
    for n in window1.n_lo..=window1.n_hi {
        for m in window2.n_lo..=window2.n_hi {
            for (level, e) in energies.iter().enumerate() {
                let k = layout.index(level, n, Some(m)).unwrap();
                let e = e + cfg.nu1() * (n as f64 - c1) + cfg.nu2() * (m as f64 - c2);
                t.push((k, k, C64::new(e, 0.0)));
            }
            // Leg 0↔1 through mode 1, mode 2 untouched.
            let low = layout.index(0, n, Some(m)).unwrap();
            if n > 0 {
                if let Some(up) = layout.index(1, n - 1, Some(m)) {
                    push_pair(&mut t, up, low, g * (n as f64).sqrt());
                }
            }
            if terms == CouplingTerms::Full {
                if let Some(up) = layout.index(1, n + 1, Some(m)) {
                    push_pair(&mut t, up, low, g * (n as f64 + 1.0).sqrt());
                }
            }
            // Leg 2↔1 through mode 2, mode 1 untouched: |2,m⟩ → |1,m-1⟩
            // conserves energy, |2,m⟩ → |1,m+1⟩ does not.
            let side = layout.index(2, n, Some(m)).unwrap();
            if m > 0 {
                if let Some(up) = layout.index(1, n, Some(m - 1)) {
                    push_pair(&mut t, up, side, g * (m as f64).sqrt());
                }
            }
            if terms == CouplingTerms::Full {
                if let Some(up) = layout.index(1, n, Some(m + 1)) {
                    push_pair(&mut t, up, side, g * (m as f64 + 1.0).sqrt());
                }
            }
        }
    }
    Ok((CsrMatrix::from_triplets(layout.dim(), t), layout))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_matrix_elements() {
        let w = PhotonWindow::new(10, 20).unwrap();
        let g = 0.3;
        let (h, s) = build_2l_hamiltonian(g, 10.0, 10.0, w, CouplingTerms::Full).unwrap();
        assert!(h.is_hermitian());
        let n = 15;
        let at = |l, n| s.index(l, n, None).unwrap();
        assert!((h.get(at(1, n - 1), at(0, n)).re - g * (n as f64).sqrt()).abs() < 1e-15);
        assert!((h.get(at(1, n + 1), at(0, n)).re - g * (n as f64 + 1.0).sqrt()).abs() < 1e-15);
        for a in w.n_lo..=w.n_hi {
            for b in w.n_lo..=w.n_hi {
                if a != b {
                    assert_eq!(h.get(at(0, a), at(0, b)), C64::new(0.0, 0.0));
                    assert_eq!(h.get(at(1, a), at(1, b)), C64::new(0.0, 0.0));
                }
            }
        }
        let (jc, _) = build_2l_hamiltonian(g, 10.0, 10.0, w, CouplingTerms::RotatingOnly).unwrap();
        assert_eq!(jc.get(at(1, n + 1), at(0, n)), C64::new(0.0, 0.0));
        assert!(jc.is_hermitian());
        // Resonant: |0,n⟩ and |1,n-1⟩ are degenerate.
        assert_eq!(h.get(at(0, n), at(0, n)), h.get(at(1, n - 1), at(1, n - 1)));
    }

    #[test]
    fn lambda_matrix_elements() {
        let cfg = LambdaConfig::symmetric(50.0, 1.0, 5.0, 0.1);
        let (w1, w2) = (PhotonWindow::new(3, 8).unwrap(), PhotonWindow::new(2, 7).unwrap());
        let (h, s) = build_3l_hamiltonian(&cfg, w1, w2, CouplingTerms::Full).unwrap();
        assert!(h.is_hermitian());
        let at = |l, n, m| s.index(l, n, Some(m)).unwrap();
        let (n, m) = (5, 4);
        assert!((h.get(at(1, n - 1, m), at(0, n, m)).re - 0.1 * (n as f64).sqrt()).abs() < 1e-15);
        assert!((h.get(at(2, n, m - 1), at(1, n, m)).re - 0.1 * (m as f64).sqrt()).abs() < 1e-15);
        for (r, c, _) in h.triplets() {
            let (lr, _, _) = s.labels(r);
            let (lc, _, _) = s.labels(c);
            assert!(!(lr == 0 && lc == 2) && !(lr == 2 && lc == 0));
        }
        // Two-photon resonance: |0,n,m⟩ and |2,n-1,m+1⟩ are degenerate.
        assert!((h.get(at(0, n, m), at(0, n, m)) - h.get(at(2, n - 1, m + 1), at(2, n - 1, m + 1))).norm() < 1e-12);
    }
}
