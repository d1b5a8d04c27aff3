//! N-soliton solutions of the normalized KdV equation
//! `eta_t + 6 eta eta_x + eta_xxx = 0` in Hirota tau-function form.
//!
//! The tau function is
//!
//! ```text
//!   F = 1 + sum_{n=1..N} sum_{subsets S of size n} a(S) prod_{i in S} f_i,
//!   f_i = exp(-alpha_i (x - s_i) + alpha_i^3 t),
//!   a(S) = prod_{k<l in S} ((alpha_k - alpha_l)/(alpha_k + alpha_l))^2,
//! ```
//!
//! and the field is `eta = 2 (ln F)_xx` (positive, amplitude `alpha^2/2`
//! per soliton). Derivatives of `F` are
//!
//! ```text
//!   d^k F/dx^k = sum_S (-1)^k (sum_{i in S} alpha_i)^k a(S) prod f_i,
//! ```
//!
//! so for fixed `k` every subset term has the same sign and the sums can
//! be accumulated as stable log-sum-exps. The quotients entering `eta`
//! never form differences of nearly equal logs: the numerators of
//! `(ln F)_xx` and its derivatives are expanded as bilinear subset sums
//! with sign-definite kernels (see `engine`), which keeps full relative
//! precision even where `f_i` spans thousands of e-folds.
//!
//! Exponents are allowed far past `f64` range; nothing here overflows for
//! |exponents| well beyond 5000.

pub(crate) mod engine;

use crate::error::{Error, Result};
use crate::logsum::SignedLog;
use serde::{Deserialize, Serialize};

/// A single soliton: amplitude parameter `alpha` (amplitude `alpha^2/2`,
/// speed `alpha^2`) and phase offset (peak locus `phase + alpha^2 t`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Soliton {
    pub alpha: f64,
    pub phase: f64,
}

impl Soliton {
    pub fn new(alpha: f64, phase: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::domain("Soliton::new", format!("alpha must be positive and finite, got {alpha}")));
        }
        if !phase.is_finite() {
            return Err(Error::domain("Soliton::new", format!("phase must be finite, got {phase}")));
        }
        Ok(Soliton { alpha, phase })
    }
}

/// Evaluation frame for the field.
///
/// `Physical` value at `(x, t)` equals `6 *` the `Soliton` value at
/// `(x - t, t)`; this maps solutions of the normalized equation onto
/// `y_t + y_x + y_xxx + y y_x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalFrame {
    Soliton,
    Physical,
}

/// Evaluation tuning. Defaults are fine for every supported scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Hard cap on the number of solitons enumerated at one point.
    /// Solutions up to this size are evaluated by exact subset
    /// enumeration; larger solutions must be uniform ordered ladders and
    /// are evaluated through a sliding active window.
    pub max_window: usize,
    /// Windowed path only: a soliton is dropped from / factored out of
    /// the window once its (dressed) exponent clears this many nats.
    pub theta_drop: f64,
    /// Subset terms more than this many nats below the leading term are
    /// pruned from bilinear accumulations. 80 nats leaves the pruning
    /// error around 1e-17 relative even after kernel-spread headroom.
    pub pair_cut: f64,
    /// Upper bound on bilinear term pairs per point.
    pub pair_budget: usize,
    /// Force the windowed path even for small solutions (validation
    /// hook; requires a uniform ordered ladder).
    pub prefer_windowed: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            max_window: 24,
            theta_drop: 45.0,
            pair_cut: 80.0,
            pair_budget: 1 << 26,
            prefer_windowed: false,
        }
    }
}

/// Pairwise interaction coefficient
/// `a(k, l) = ((alpha_k - alpha_l)/(alpha_k + alpha_l))^2 in [0, 1)`.
pub fn interaction_coefficient(alpha_k: f64, alpha_l: f64) -> Result<f64> {
    if !(alpha_k > 0.0) || !(alpha_l > 0.0) {
        return Err(Error::domain(
            "interaction_coefficient",
            format!("amplitude parameters must be positive, got ({alpha_k}, {alpha_l})"),
        ));
    }
    let r = (alpha_k - alpha_l) / (alpha_k + alpha_l);
    Ok(r * r)
}

/// The field value together with its first two spatial derivatives in the
/// soliton frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaDerivatives {
    pub eta: f64,
    pub eta_x: f64,
    pub eta_xx: f64,
}

/// An immutable N-soliton solution with precomputed interaction data.
///
/// Safe to share across threads; every evaluation is a pure function of
/// `(x, t)`.
#[derive(Debug, Clone)]
pub struct NSolitonSolution {
    solitons: Vec<Soliton>,
    config: EvalConfig,
    pub(crate) data: engine::EngineData,
}

impl NSolitonSolution {
    pub fn new(solitons: Vec<Soliton>) -> Result<Self> {
        Self::with_config(solitons, EvalConfig::default())
    }

    pub fn with_config(solitons: Vec<Soliton>, config: EvalConfig) -> Result<Self> {
        if solitons.is_empty() {
            return Err(Error::InvalidSolution("need at least one soliton".into()));
        }
        for s in &solitons {
            if !(s.alpha > 0.0) || !s.alpha.is_finite() || !s.phase.is_finite() {
                return Err(Error::InvalidSolution(format!(
                    "bad soliton parameters alpha={}, phase={}",
                    s.alpha, s.phase
                )));
            }
        }
        // Equal amplitudes make a(k,l) = 0 and silently delete interaction
        // terms; almost certainly user error, so reject outright.
        let n = solitons.len();
        if n <= 4096 {
            for i in 0..n {
                for j in (i + 1)..n {
                    let (a, b) = (solitons[i].alpha, solitons[j].alpha);
                    if (a - b).abs() < 1e-9 * a.max(b) {
                        return Err(Error::InvalidSolution(format!(
                            "amplitude parameters {i} and {j} coincide (alpha = {a})"
                        )));
                    }
                }
            }
        } else {
            // Large solutions must be ladders; the ladder validation below
            // enforces strict spacing in O(n).
        }
        let data = engine::EngineData::build(&solitons, &config)?;
        Ok(NSolitonSolution {
            solitons,
            config,
            data,
        })
    }

    pub fn solitons(&self) -> &[Soliton] {
        &self.solitons
    }

    pub fn len(&self) -> usize {
        self.solitons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solitons.is_empty()
    }

    pub fn config(&self) -> &EvalConfig {
        &self.config
    }

    /// Largest amplitude parameter; sets the finite-difference scales.
    pub fn alpha_max(&self) -> f64 {
        self.solitons.iter().map(|s| s.alpha).fold(0.0, f64::max)
    }

    /// `d^order F / dx^order` at `(x, t)` as a signed log-magnitude pair.
    ///
    /// Supported orders are 0..=4; order 0 is the tau function itself
    /// (`F >= 1`). Use [`SignedLog::value`] for the plain-real view.
    pub fn tau_derivative(&self, order: usize, x: f64, t: f64) -> Result<SignedLog> {
        if order > 4 {
            return Err(Error::UnsupportedOrder(order));
        }
        self.check_point(x, t)?;
        let sums = engine::eval_point(self, x, t)?;
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        Ok(SignedLog::new(sign, sums.lse_dk[order]))
    }

    /// Field value `eta` at `(x, t)`.
    ///
    /// Soliton frame: `2 (ln F)_xx`, strictly positive. Physical frame:
    /// `6 * eta(x - t, t)`.
    pub fn eta(&self, x: f64, t: f64, frame: EvalFrame) -> Result<f64> {
        match frame {
            EvalFrame::Soliton => {
                self.check_point(x, t)?;
                Ok(2.0 * engine::eval_point(self, x, t)?.g)
            }
            EvalFrame::Physical => {
                self.check_point(x - t, t)?;
                Ok(6.0 * 2.0 * engine::eval_point(self, x - t, t)?.g)
            }
        }
    }

    /// `(eta, eta_x, eta_xx)` in the soliton frame, all from the exact
    /// closed form.
    pub fn eta_derivatives(&self, x: f64, t: f64) -> Result<EtaDerivatives> {
        self.check_point(x, t)?;
        let sums = engine::eval_point(self, x, t)?;
        Ok(EtaDerivatives {
            eta: 2.0 * sums.g,
            eta_x: 2.0 * sums.gx,
            eta_xx: 2.0 * sums.gxx,
        })
    }

    /// Centered finite-difference approximation of `eta_t` in the soliton
    /// frame, O(h^2) with h matched to the fastest soliton's time scale.
    pub fn eta_time_derivative(&self, x: f64, t: f64) -> Result<f64> {
        let h = self.time_step();
        let plus = self.eta(x, t + h, EvalFrame::Soliton)?;
        let minus = self.eta(x, t - h, EvalFrame::Soliton)?;
        Ok((plus - minus) / (2.0 * h))
    }

    /// Step used by [`Self::eta_time_derivative`]. The `alpha^(-11/3)`
    /// scaling balances O(h^2) truncation against roundoff in the
    /// O(alpha^11) third time derivative.
    pub fn time_step(&self) -> f64 {
        1e-4 * self.alpha_max().powf(-11.0 / 3.0)
    }

    fn check_point(&self, x: f64, t: f64) -> Result<()> {
        if !x.is_finite() || !t.is_finite() {
            return Err(Error::numeric(format!("non-finite evaluation point ({x}, {t})")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
