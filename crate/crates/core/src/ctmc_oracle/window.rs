//! Truncation windows with tail bounds on the mass that can leave them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Configuration, Model, ModelKind};

/// All particles are confined to `lo..=hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationWindow {
    pub lo: i64,
    pub hi: i64,
    /// Upper bound on the probability of reaching the boundary by time `t`.
    /// Certified for ASEP, PushASEP and AZRP; for ASAP it relies on the
    /// avalanche-length model described in [`window_for`] and the escaped
    /// mass reported by uniformization is the authoritative number.
    pub escape_bound: f64,
}

impl TruncationWindow {
    pub fn width(&self) -> i64 {
        self.hi - self.lo + 1
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.iter().all(|&v| v >= self.lo && v <= self.hi)
    }

    /// Window grown by `extra` sites on the right.
    pub fn extended_right(&self, extra: i64) -> TruncationWindow {
        TruncationWindow {
            lo: self.lo,
            hi: self.hi + extra,
            escape_bound: f64::NAN,
        }
    }

    /// Window grown by `extra` sites on each side.
    pub fn widened(&self, extra: i64) -> TruncationWindow {
        TruncationWindow {
            lo: self.lo - extra,
            hi: self.hi + extra,
            escape_bound: f64::NAN,
        }
    }
}

/// `P(Poisson(lambda) >= k)` for all `k` up to the point where it drops
/// below `floor`.
fn poisson_tails(lambda: f64, floor: f64) -> Vec<f64> {
    if lambda <= 0.0 {
        return vec![1.0, 0.0];
    }
    let kmax = (lambda + 40.0 * lambda.sqrt() + 200.0) as usize;
    let mut lp = -lambda;
    let mut pmf = Vec::with_capacity(kmax + 1);
    for j in 0..=kmax {
        if j > 0 {
            lp += lambda.ln() - (j as f64).ln();
        }
        pmf.push(lp.exp());
    }
    suffix_tails(&pmf, floor)
}

/// `P(S >= k)` where `S` counts successes (probability `mu`) before `r`
/// failures.
fn negbin_tails(r: usize, mu: f64, floor: f64) -> Vec<f64> {
    if r == 0 || mu <= 0.0 {
        return vec![1.0, 0.0];
    }
    let mut pmf = Vec::new();
    let mut lp = r as f64 * (1.0 - mu).ln();
    let mut k = 0usize;
    loop {
        pmf.push(lp.exp());
        let mean = r as f64 * mu / (1.0 - mu);
        if k as f64 > mean && lp.exp() < floor * 1e-3 {
            break;
        }
        lp += mu.ln() + ((k + r) as f64).ln() - ((k + 1) as f64).ln();
        k += 1;
    }
    suffix_tails(&pmf, floor)
}

fn suffix_tails(pmf: &[f64], floor: f64) -> Vec<f64> {
    let mut tails = vec![0.0; pmf.len() + 1];
    for j in (0..pmf.len()).rev() {
        tails[j] = tails[j + 1] + pmf[j];
    }
    // the mass beyond the computed range is far below `floor`
    let cut = tails
        .iter()
        .position(|&v| v < floor * 1e-3)
        .unwrap_or(tails.len() - 1);
    tails.truncate(cut + 1);
    tails
}

/// Smallest `k >= 1` with `tail[k + 1] <= tol`, and that tail value.
fn quantile(tails: &[f64], tol: f64) -> (i64, f64) {
    let mut k = 1;
    while k + 1 < tails.len() && tails[k + 1] > tol {
        k += 1;
    }
    (k as i64, tails.get(k + 1).copied().unwrap_or(0.0))
}

/// Window `[min(Y) - K_l, max(Y) + K_r]` such that the mass leaving it by
/// time `t` is at most `tol`.
///
/// The rightmost occupied site can only advance at rate `p` (ASEP, AZRP)
/// or `p * sum_k r_k <= p N` (PushASEP), and similarly on the left, so `K`
/// comes from a Poisson tail. For ASAP an event is one jump (total rate
/// `N`) plus an avalanche whose voluntary continuations are bounded by a
/// negative binomial with success probability `mu >= mu_n`; the left edge
/// only moves by left jumps (total rate `q N`).
pub fn window_for(model: &Model, y: &Configuration, t: f64, tol: f64) -> Result<TruncationWindow> {
    if y.is_empty() {
        return Err(Error::InvalidConfiguration("empty configuration".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParams(format!(
            "tolerance {tol} outside (0, 1)"
        )));
    }
    let n = y.len();
    let (p, q) = (model.p(), model.q());
    let floor = tol * 1e-3;
    let (kl, kr, bound) = match model.kind() {
        ModelKind::Asep | ModelKind::Azrp | ModelKind::Push => {
            let scale = if model.kind() == ModelKind::Push {
                n as f64
            } else {
                1.0
            };
            let (kr, br) = quantile(&poisson_tails(p * scale * t, floor), tol / 2.0);
            let (kl, bl) = quantile(&poisson_tails(q * scale * t, floor), tol / 2.0);
            let k = kr.max(kl);
            (k, k, br + bl)
        }
        ModelKind::Asap => {
            // avalanches only move right, so the left edge sees left jumps only
            let (kl, bl) = quantile(&poisson_tails(q * n as f64 * t, floor), tol / 2.0);
            let (ke, be) = quantile(&poisson_tails(n as f64 * t, floor), tol / 4.0);
            let (kg, bg) = quantile(&negbin_tails(ke as usize, model.mu(), floor), tol / 4.0);
            (kl, ke + kg + n as i64, bl + be + bg)
        }
    };
    let pos = y.positions();
    let lo = pos.iter().copied().min().unwrap_or(0) - kl;
    let hi = pos.iter().copied().max().unwrap_or(0) + kr;
    Ok(TruncationWindow {
        lo,
        hi,
        escape_bound: bound,
    })
}

/// Starting window for [`oracle_distribution`](super::oracle_distribution).
///
/// Same as [`window_for`] except for the right edge of ASAP, where only the
/// Poisson bound on the number of jumps is used. The caller moves that edge
/// out while the escaped mass, which bounds the truncation error a
/// posteriori, exceeds `tol`.
pub fn initial_window(
    model: &Model,
    y: &Configuration,
    t: f64,
    tol: f64,
) -> Result<TruncationWindow> {
    if model.kind() != ModelKind::Asap {
        return window_for(model, y, t, tol);
    }
    let full = window_for(model, y, t, tol)?;
    let (k, _) = quantile(&poisson_tails(y.len() as f64 * t, tol * 1e-3), tol);
    let hi = (y.positions().iter().copied().max().unwrap_or(0) + k).min(full.hi);
    Ok(TruncationWindow {
        lo: full.lo,
        hi,
        escape_bound: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_tail_values() {
        let t = poisson_tails(2.0, 1e-20);
        assert!((t[0] - 1.0).abs() < 1e-14);
        assert!((t[1] - (1.0 - (-2.0f64).exp())).abs() < 1e-14);
        let nb = negbin_tails(1, 0.5, 1e-20);
        // geometric: P(S >= k) = 0.5^k
        assert!((nb[3] - 0.125).abs() < 1e-14);
    }

    #[test]
    fn window_examples() {
        let m = Model::asep(0.5).unwrap();
        let y = Configuration::new(vec![0, 1]);
        let w = window_for(&m, &y, 0.0, 1e-10).unwrap();
        assert_eq!((w.lo, w.hi), (-1, 2));
        let w = window_for(&m, &y, 1.0, 1e-10).unwrap();
        assert!(w.escape_bound <= 1e-10);
        assert!(w.hi > 5 && w.hi - 1 < 40);
        let a = Model::asap(0.5, 0.4).unwrap();
        let wa = window_for(&a, &y, 1.0, 1e-10).unwrap();
        assert!(wa.width() > w.width());
    }
}
