//! Subset-sum evaluation engine for the tau function and its log
//! derivatives.
//!
//! Two routes share one accumulation core:
//!
//! * **dense** (`n <= max_window`): exact enumeration of all `2^n - 1`
//!   subset masks, entirely in log domain, valid for arbitrary
//!   amplitudes and phases and for exponents far beyond `f64` range;
//! * **ladder** (`n > max_window`): for uniformly spaced, strictly
//!   decreasing amplitude ladders with ordered effective positions the
//!   sum telescopes. At a point `(x, t)` solitons whose exponent has
//!   saturated (the wave has passed well to the right) contribute an
//!   exactly known gauge factor plus a phase dressing of every remaining
//!   factor `f_i -> f_i * a(i, j)`; solitons far to the left are
//!   negligible. Only a short active window is enumerated. Dropped terms
//!   are bounded by `exp(-theta_drop)` relative to the kept sum, with a
//!   geometric tail over the train.
//!
//! Quotients `(ln F)_xx` and higher suffer catastrophic cancellation if
//! formed from the linear sums, so their numerators are accumulated as
//! bilinear subset sums with sign-definite kernels:
//!
//! ```text
//!   F F_xx  - F_x^2   = sum_{S,T} w_ST                   Phi_S Phi_T
//!   F F_xxx - F_x F_xx= sum_{S,T} w_ST * -(A_S + A_T)    Phi_S Phi_T
//!   F F_xxxx- F_xx^2  = sum_{S,T} w_ST * (A_S + A_T)^2   Phi_S Phi_T
//!   w_ST = a(S) a(T) (A_S - A_T)^2 / 2,   A_S = sum of alphas in S,
//! ```
//!
//! from which `(ln F)_xx = N/F^2`, `(ln F)_xxx = M1/F^2 - 2 (ln F)_xx D1`
//! and `(ln F)_xxxx = M2/F^2 - 2 (M1/F^2) D1 - 2 (ln F)_xxx D1 -
//! 2 ((ln F)_xx)^2` with `D1 = F_x / F`.

use super::{EvalConfig, NSolitonSolution, Soliton};
use crate::error::{Error, Result};
use crate::logsum::logsumexp2;

const SAT_RECHECK_DEPTH: usize = 5;

#[derive(Debug, Clone)]
pub(crate) enum EngineData {
    Dense(DenseData),
    Ladder(Box<LadderData>),
}

#[derive(Debug, Clone)]
pub(crate) struct DenseData {
    n: usize,
    /// Flattened `n x n` table of `ln a(i, j)`; diagonal entries unused.
    pair_ln_a: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct LadderData {
    n: usize,
    alpha1: f64,
    /// Uniform spacing `alpha_i - alpha_{i+1} > 0`.
    dalpha: f64,
    ln_dalpha: f64,
    alphas: Vec<f64>,
    phases: Vec<f64>,
    /// Effective positions at t = 0: phase + dressing by all faster
    /// solitons. Strictly decreasing.
    epos0: Vec<f64>,
    /// dress[i] = sum_{j<i} ln a(j, i)  (all faster solitons saturated).
    dress: Vec<f64>,
    /// g_lut[k] = sum_{d=1..k} ln d.
    g_lut: Vec<f64>,
    /// h_lut[q] = sum_{r=0..q} ln(2 alpha1 - r dalpha).
    h_lut: Vec<f64>,
    cum_alpha: Vec<f64>,
    cum_alpha3: Vec<f64>,
    cum_alpha_phase: Vec<f64>,
    /// cum_pair[m] = sum of ln a over all pairs inside the prefix 0..m.
    cum_pair: Vec<f64>,
    /// Evaluations are only valid for t >= t_min_safe (ordering of
    /// effective positions holds for all later times).
    t_min_safe: f64,
}

/// Per-index evaluation abscissa. `Split` evaluates indices below
/// `split` at `fast` and the rest at `slow` (used by the attenuation
/// factors, which bound fast neighbours at the right edge of a
/// neighbourhood and slow neighbours at the left edge).
#[derive(Debug, Clone, Copy)]
pub(crate) enum SplitAbscissa {
    Single(f64),
    Split { fast: f64, slow: f64, split: usize },
}

impl SplitAbscissa {
    #[inline]
    fn x_of(&self, i: usize) -> f64 {
        match *self {
            SplitAbscissa::Single(x) => x,
            SplitAbscissa::Split { fast, slow, split } => {
                if i < split {
                    fast
                } else {
                    slow
                }
            }
        }
    }

    fn split_index(&self) -> Option<usize> {
        match *self {
            SplitAbscissa::Single(_) => None,
            SplitAbscissa::Split { split, .. } => Some(split),
        }
    }
}

/// All per-point sums. Signs: `d^k F = (-1)^k exp(lse_dk[k])`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PointSums {
    pub ln_f: f64,
    pub lse_dk: [f64; 5],
    /// `(ln F)_xx`, `(ln F)_xxx`, `(ln F)_xxxx`.
    pub g: f64,
    pub gx: f64,
    pub gxx: f64,
}

impl EngineData {
    pub(crate) fn build(solitons: &[Soliton], config: &EvalConfig) -> Result<Self> {
        let n = solitons.len();
        let ladder = LadderData::try_build(solitons);
        if n > config.max_window || config.prefer_windowed {
            match ladder {
                Some(l) => Ok(EngineData::Ladder(Box::new(l))),
                None => Err(Error::InvalidSolution(format!(
                    "{n} solitons exceed the enumeration cap ({}) and the \
                     amplitudes do not form a uniformly spaced decreasing \
                     ladder with ordered positions",
                    config.max_window
                ))),
            }
        } else {
            let mut pair_ln_a = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let (a, b) = (solitons[i].alpha, solitons[j].alpha);
                        let r = (a - b) / (a + b);
                        pair_ln_a[i * n + j] = 2.0 * r.abs().ln();
                    }
                }
            }
            Ok(EngineData::Dense(DenseData { n, pair_ln_a }))
        }
    }
}

fn kahan_push(sum: &mut f64, comp: &mut f64, v: f64) {
    let y = v - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

impl LadderData {
    /// Returns `None` when the solitons are not a uniformly spaced,
    /// strictly decreasing ladder with ordered effective positions.
    fn try_build(solitons: &[Soliton]) -> Option<LadderData> {
        let n = solitons.len();
        if n < 2 {
            return None;
        }
        let alpha1 = solitons[0].alpha;
        let dalpha = (alpha1 - solitons[n - 1].alpha) / (n - 1) as f64;
        if !(dalpha > 0.0) {
            return None;
        }
        for i in 0..n - 1 {
            let step = solitons[i].alpha - solitons[i + 1].alpha;
            if (step - dalpha).abs() > 1e-6 * dalpha + 1e-12 * alpha1 {
                return None;
            }
        }

        let alphas: Vec<f64> = solitons.iter().map(|s| s.alpha).collect();
        let phases: Vec<f64> = solitons.iter().map(|s| s.phase).collect();
        let ln_dalpha = dalpha.ln();

        let mut g_lut = vec![0.0; n + 1];
        {
            let (mut s, mut c) = (0.0, 0.0);
            for k in 1..=n {
                kahan_push(&mut s, &mut c, (k as f64).ln());
                g_lut[k] = s;
            }
        }
        let hlen = 2 * n - 1;
        let mut h_lut = vec![0.0; hlen];
        {
            let (mut s, mut c) = (0.0, 0.0);
            for q in 0..hlen {
                let v = 2.0 * alpha1 - q as f64 * dalpha;
                if !(v > 0.0) {
                    return None;
                }
                kahan_push(&mut s, &mut c, v.ln());
                h_lut[q] = s;
            }
        }

        let mut lad = LadderData {
            n,
            alpha1,
            dalpha,
            ln_dalpha,
            alphas,
            phases,
            epos0: Vec::new(),
            dress: Vec::new(),
            g_lut,
            h_lut,
            cum_alpha: Vec::new(),
            cum_alpha3: Vec::new(),
            cum_alpha_phase: Vec::new(),
            cum_pair: Vec::new(),
            t_min_safe: f64::NEG_INFINITY,
        };

        let mut dress = vec![0.0; n];
        for (i, d) in dress.iter_mut().enumerate() {
            *d = lad.prefix_ln_a(i, i);
        }
        let epos0: Vec<f64> = (0..n)
            .map(|i| lad.phases[i] + dress[i] / lad.alphas[i])
            .collect();
        let mut t_min = f64::NEG_INFINITY;
        for i in 0..n - 1 {
            let gap = epos0[i] - epos0[i + 1];
            if !(gap > 0.0) {
                return None;
            }
            let dspeed = lad.alphas[i] * lad.alphas[i] - lad.alphas[i + 1] * lad.alphas[i + 1];
            t_min = t_min.max(-gap / dspeed);
        }

        let mut cum_alpha = vec![0.0; n + 1];
        let mut cum_alpha3 = vec![0.0; n + 1];
        let mut cum_alpha_phase = vec![0.0; n + 1];
        let mut cum_pair = vec![0.0; n + 1];
        let (mut sa, mut ca) = (0.0, 0.0);
        let (mut s3, mut c3) = (0.0, 0.0);
        let (mut sp, mut cp) = (0.0, 0.0);
        let (mut sq, mut cq) = (0.0, 0.0);
        for i in 0..n {
            let a = lad.alphas[i];
            kahan_push(&mut sa, &mut ca, a);
            kahan_push(&mut s3, &mut c3, a * a * a);
            kahan_push(&mut sp, &mut cp, a * lad.phases[i]);
            kahan_push(&mut sq, &mut cq, dress[i]);
            cum_alpha[i + 1] = sa;
            cum_alpha3[i + 1] = s3;
            cum_alpha_phase[i + 1] = sp;
            cum_pair[i + 1] = sq;
        }

        lad.epos0 = epos0;
        lad.dress = dress;
        lad.cum_alpha = cum_alpha;
        lad.cum_alpha3 = cum_alpha3;
        lad.cum_alpha_phase = cum_alpha_phase;
        lad.cum_pair = cum_pair;
        lad.t_min_safe = t_min * (1.0 - 1e-9) + 1e-12;
        Some(lad)
    }

    #[inline]
    fn ln_pair(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i != j);
        let d = i.abs_diff(j) as f64;
        let sum = 2.0 * self.alpha1 - (i + j) as f64 * self.dalpha;
        2.0 * ((d.ln() + self.ln_dalpha) - sum.ln())
    }

    /// `sum over q in lo..=hi of ln(2 alpha1 - q dalpha)`.
    #[inline]
    fn h_sum(&self, lo: usize, hi: usize) -> f64 {
        let upper = self.h_lut[hi];
        if lo == 0 {
            upper
        } else {
            upper - self.h_lut[lo - 1]
        }
    }

    /// `sum_{i < m, i != j} ln a(i, j)` in O(1).
    fn prefix_ln_a(&self, j: usize, m: usize) -> f64 {
        if m == 0 {
            return 0.0;
        }
        if j >= m {
            // distances j-m+1 ..= j
            let dist = self.g_lut[j] - self.g_lut[j - m];
            let sums = self.h_sum(j, j + m - 1);
            2.0 * (dist + m as f64 * self.ln_dalpha - sums)
        } else {
            let dist = self.g_lut[j] + self.g_lut[m - 1 - j];
            let sums = self.h_sum(j, j + m - 1) - (2.0 * self.alpha1 - (2 * j) as f64 * self.dalpha).ln();
            2.0 * (dist + (m - 1) as f64 * self.ln_dalpha - sums)
        }
    }

    #[inline]
    fn theta(&self, i: usize, x: f64, t: f64) -> f64 {
        let a = self.alphas[i];
        -a * (x - self.phases[i]) + a * a * a * t
    }

    #[inline]
    fn epos(&self, i: usize, t: f64) -> f64 {
        self.epos0[i] + self.alphas[i] * self.alphas[i] * t
    }

    #[inline]
    fn theta_hat(&self, i: usize, x: f64, t: f64) -> f64 {
        -self.alphas[i] * (x - self.epos(i, t))
    }

    fn sum_theta_prefix(&self, m: usize, x: f64, t: f64) -> f64 {
        -x * self.cum_alpha[m] + self.cum_alpha_phase[m] + t * self.cum_alpha3[m]
            + self.cum_pair[m]
    }

    /// Margin by which soliton `j` may be treated as saturated given the
    /// proposed prefix `0..m` and window `m..hi`: the log cost of the
    /// cheapest subset term that omits `j`.
    fn sat_margin(&self, j: usize, m: usize, hi: usize, absc: &SplitAbscissa, t: f64) -> f64 {
        let mut s = self.theta(j, absc.x_of(j), t) + self.prefix_ln_a(j, m);
        for i in m..hi {
            if i != j {
                s += self.ln_pair(i, j);
            }
        }
        s
    }

    /// Select the saturated prefix `0..m` and active window `m..hi`.
    ///
    /// At tail points the bilinear numerator of `(ln F)_xx` is itself
    /// suppressed by `exp(-|theta|)` of the nearest soliton relative to
    /// `F^2`, so the drop/saturation threshold is deepened by that local
    /// suppression (capped at 60 nats; fields below `exp(-60)` of their
    /// local scale are beyond every verification tolerance here).
    fn window(&self, cfg: &EvalConfig, absc: &SplitAbscissa, t: f64) -> Result<(usize, usize)> {
        if t < self.t_min_safe {
            return Err(Error::numeric(format!(
                "t = {t} precedes the ladder ordering range (t >= {})",
                self.t_min_safe
            )));
        }
        let n = self.n;
        // First index whose effective position has fallen at or below the
        // evaluation abscissa.
        let mut lo_s = 0usize;
        let mut hi_s = n;
        while lo_s < hi_s {
            let mid = (lo_s + hi_s) / 2;
            if self.epos(mid, t) > absc.x_of(mid) {
                lo_s = mid + 1;
            } else {
                hi_s = mid;
            }
        }
        let mut c = lo_s;
        // Robustness against the split-abscissa jump.
        while c > 0 && self.epos(c - 1, t) <= absc.x_of(c - 1) {
            c -= 1;
        }
        while c < n && self.epos(c, t) > absc.x_of(c) {
            c += 1;
        }

        // Singleton log weight of member i given saturated prefix 0..m.
        let weight = |i: usize, m: usize| {
            self.theta(i, absc.x_of(i), t) + self.prefix_ln_a(i, m)
        };

        let mut s_local = f64::INFINITY;
        for i in c.saturating_sub(1)..=c.min(n - 1) {
            s_local = s_local.min(weight(i, c).abs());
        }
        if !s_local.is_finite() {
            s_local = 0.0;
        }
        let t_star = cfg.theta_drop + s_local.min(60.0);

        // Fixpoint: shrinking the saturated prefix only increases member
        // weights, so the window grows monotonically and the iteration
        // terminates.
        let mut m = c;
        let mut hi = c;
        let extend = |hi: &mut usize, m: usize| {
            while *hi < n && *hi - m <= cfg.max_window && weight(*hi, m) >= -t_star {
                *hi += 1;
            }
        };
        extend(&mut hi, m);
        'outer: loop {
            if m == 0 {
                break;
            }
            let lim = m.saturating_sub(SAT_RECHECK_DEPTH);
            for j in (lim..m).rev() {
                if self.sat_margin(j, m, hi, absc, t) <= t_star {
                    m = j;
                    extend(&mut hi, m);
                    if hi - m > cfg.max_window {
                        return Err(Error::numeric(format!(
                            "active window {} exceeds cap {} (solitons too clustered)",
                            hi - m,
                            cfg.max_window
                        )));
                    }
                    continue 'outer;
                }
            }
            break;
        }
        if hi - m > cfg.max_window {
            return Err(Error::numeric(format!(
                "active window {} exceeds cap {}",
                hi - m,
                cfg.max_window
            )));
        }
        Ok((m, hi))
    }
}

/// Everything the mask enumeration needs about one evaluation point.
struct WinCtx {
    /// Saturated prefix size (global indices `0..m_sat`).
    m_sat: usize,
    /// Window global index range.
    lo: usize,
    hi: usize,
    /// Dressed member log factors `theta_i + sum_{j < m_sat} ln a(j, i)`.
    ln_g: Vec<f64>,
    alpha_w: Vec<f64>,
    /// Window-internal `ln a`, flattened p x p.
    pair_w: Vec<f64>,
    /// `ln C_U`: log of the factored-out saturated product.
    gauge: f64,
    /// Sum of saturated alphas.
    a_u: f64,
}

fn build_ctx(sol: &NSolitonSolution, absc: &SplitAbscissa, t: f64) -> Result<WinCtx> {
    let cfg = sol.config();
    match &sol.data {
        EngineData::Dense(d) => {
            let n = d.n;
            let sols = sol.solitons();
            let ln_g: Vec<f64> = (0..n)
                .map(|i| {
                    let s = &sols[i];
                    -s.alpha * (absc.x_of(i) - s.phase) + s.alpha.powi(3) * t
                })
                .collect();
            let alpha_w: Vec<f64> = sols.iter().map(|s| s.alpha).collect();
            let mut pair_w = vec![0.0; n * n];
            pair_w.copy_from_slice(&d.pair_ln_a);
            Ok(WinCtx {
                m_sat: 0,
                lo: 0,
                hi: n,
                ln_g,
                alpha_w,
                pair_w,
                gauge: 0.0,
                a_u: 0.0,
            })
        }
        EngineData::Ladder(lad) => {
            let (m, hi) = lad.window(cfg, absc, t)?;
            if let Some(split) = absc.split_index() {
                if m > split || hi < split {
                    return Err(Error::numeric(
                        "split evaluation geometry incompatible with saturation window".to_string(),
                    ));
                }
            }
            let p = hi - m;
            let mut ln_g = Vec::with_capacity(p);
            let mut alpha_w = Vec::with_capacity(p);
            for i in m..hi {
                ln_g.push(lad.theta(i, absc.x_of(i), t) + lad.prefix_ln_a(i, m));
                alpha_w.push(lad.alphas[i]);
            }
            let mut pair_w = vec![0.0; p * p];
            for a in 0..p {
                for b in 0..p {
                    if a != b {
                        pair_w[a * p + b] = lad.ln_pair(m + a, m + b);
                    }
                }
            }
            // For a split abscissa all saturated members sit on the fast
            // side, so the prefix theta sum uses the fast abscissa.
            let x_sat = absc.x_of(0);
            let gauge = if m == 0 {
                0.0
            } else {
                lad.sum_theta_prefix(m, x_sat, t)
            };
            Ok(WinCtx {
                m_sat: m,
                lo: m,
                hi,
                ln_g,
                alpha_w,
                pair_w,
                gauge,
                a_u: lad.cum_alpha[m],
            })
        }
    }
}

/// Streaming log-sum-exp accumulator (non-negative terms).
#[derive(Clone, Copy)]
struct Lse {
    max: f64,
    sum: f64,
}

impl Lse {
    fn new() -> Self {
        Lse {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    fn add(&mut self, l: f64) {
        if l == f64::NEG_INFINITY {
            return;
        }
        if l > self.max {
            if self.max == f64::NEG_INFINITY {
                self.max = l;
                self.sum = 1.0;
                return;
            }
            self.sum = self.sum * (self.max - l).exp() + 1.0;
            self.max = l;
        } else {
            self.sum += (l - self.max).exp();
        }
    }

    fn total(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Per-mask log weights and alpha sums over the window.
fn enumerate_masks(ctx: &WinCtx) -> (Vec<f64>, Vec<f64>) {
    let p = ctx.hi - ctx.lo;
    let size = 1usize << p;
    let mut ell = vec![0.0; size];
    let mut asum = vec![0.0; size];
    for mask in 1..size {
        let b = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let mut pairs = 0.0;
        let mut r = rest;
        while r != 0 {
            let i = r.trailing_zeros() as usize;
            pairs += ctx.pair_w[b * p + i];
            r &= r - 1;
        }
        ell[mask] = ell[rest] + ctx.ln_g[b] + pairs;
        asum[mask] = asum[rest] + ctx.alpha_w[b];
    }
    (ell, asum)
}

pub(crate) fn eval_point(sol: &NSolitonSolution, x: f64, t: f64) -> Result<PointSums> {
    let ctx = build_ctx(sol, &SplitAbscissa::Single(x), t)?;
    accumulate(sol, &ctx)
}

fn accumulate(sol: &NSolitonSolution, ctx: &WinCtx) -> Result<PointSums> {
    let cfg = sol.config();
    let (ell, asum) = enumerate_masks(ctx);
    let size = ell.len();

    // Linear sums: ln F and ln |d^k F|. Uniform sign (-1)^k per order.
    let mut lse = [Lse::new(); 5];
    for mask in 0..size {
        let full_ell = ctx.gauge + ell[mask];
        let full_a = ctx.a_u + asum[mask];
        lse[0].add(full_ell);
        if full_a > 0.0 {
            let ln_a = full_a.ln();
            let mut l = full_ell;
            for acc in lse.iter_mut().skip(1) {
                l += ln_a;
                acc.add(l);
            }
        }
    }
    if ctx.m_sat > 0 {
        // the standalone constant term of F
        lse[0].add(0.0);
    }

    // Windowed local ratios for the log-derivative combinations.
    let mut l0w = Lse::new();
    let mut l1w = Lse::new();
    for mask in 0..size {
        l0w.add(ell[mask]);
        if asum[mask] > 0.0 {
            l1w.add(ell[mask] + asum[mask].ln());
        }
    }
    let ln_f_w = l0w.total();
    let d1 = -((l1w.total() - ln_f_w).exp());

    // Bilinear sums over mask pairs. Masks are scanned in decreasing
    // weight order against a running-best floor: a pair can be skipped
    // once even the largest possible kernel cannot lift it within
    // pair_cut (+ slack for the M1/M2 kernel factors) of the best term
    // seen so far. The floor only rises, so the scan self-calibrates at
    // tail points where the dominant pair sits far below 2 * ell_max.
    let mut order: Vec<u32> = (0..size as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        ell[b as usize]
            .partial_cmp(&ell[a as usize])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let ell_top = ell[order[0] as usize];
    let alpha_total: f64 = ctx.alpha_w.iter().sum();
    let ln_kmax = if alpha_total > 0.0 {
        2.0 * alpha_total.ln()
    } else {
        0.0
    };
    let cut = cfg.pair_cut + 30.0;
    let mut best = f64::NEG_INFINITY;
    let mut acc_n = Lse::new();
    let mut acc_m1 = Lse::new();
    let mut acc_m2 = Lse::new();
    let mut pairs_scanned = 0usize;
    'rows: for ia in 0..size {
        let ma = order[ia] as usize;
        let la = ell[ma];
        if la + ell_top + ln_kmax < best - cut {
            break 'rows;
        }
        for &mb_u in order.iter().skip(ia + 1) {
            let mb = mb_u as usize;
            let l = la + ell[mb];
            if l + ln_kmax < best - cut {
                break;
            }
            pairs_scanned += 1;
            if pairs_scanned > cfg.pair_budget {
                return Err(Error::numeric(format!(
                    "bilinear sum exceeds the pair budget {}; solution too \
                     clustered at this point",
                    cfg.pair_budget
                )));
            }
            let da = asum[ma] - asum[mb];
            if da == 0.0 {
                continue;
            }
            let sa = asum[ma] + asum[mb];
            // kernel da^2 / 2, times two for the unordered pair
            let base = l + 2.0 * da.abs().ln();
            if base > best {
                best = base;
            }
            acc_n.add(base);
            let ln_sa = sa.ln();
            acc_m1.add(base + ln_sa);
            acc_m2.add(base + 2.0 * ln_sa);
        }
    }

    let g = (acc_n.total() - 2.0 * ln_f_w).exp();
    let m1f2 = -((acc_m1.total() - 2.0 * ln_f_w).exp());
    let m2f2 = (acc_m2.total() - 2.0 * ln_f_w).exp();
    let gx = m1f2 - 2.0 * g * d1;
    let gxx = m2f2 - 2.0 * m1f2 * d1 - 2.0 * gx * d1 - 2.0 * g * g;

    let ln_f = lse[0].total();
    Ok(PointSums {
        ln_f,
        lse_dk: [ln_f, lse[1].total(), lse[2].total(), lse[3].total(), lse[4].total()],
        g,
        gx,
        gxx,
    })
}

/// `ln R_k` for the attenuation factor `A_k = 1 / (1 + R_k)`:
/// the full subset sum (constant term included, the prefix subsets
/// `{1..k-1}` and `{1..k}` excluded), with fast members evaluated at
/// `xi_plus` and the rest at `xi_minus`, normalized by the
/// `a(1..k-1) f_1 ... f_{k-1}(xi_plus)` term.
///
/// `k` is 1-based.
pub(crate) fn ln_attenuation_ratio(
    sol: &NSolitonSolution,
    t: f64,
    xi_plus: f64,
    xi_minus: f64,
    k: usize,
) -> Result<f64> {
    let n = sol.len();
    if k == 0 || k > n {
        return Err(Error::domain(
            "interaction_factor",
            format!("soliton index {k} out of range 1..={n}"),
        ));
    }
    let split = k - 1; // count of fast-group members
    let absc = SplitAbscissa::Split {
        fast: xi_plus,
        slow: xi_minus,
        split,
    };
    let ctx = build_ctx(sol, &absc, t)?;
    if ctx.m_sat > split || ctx.hi < k {
        return Err(Error::numeric(
            "attenuation window does not cover the requested soliton".to_string(),
        ));
    }
    let p = ctx.hi - ctx.lo;
    let (ell, _asum) = enumerate_masks(&ctx);

    // Window-relative masks of P \ U = {m..k-1} and Q \ U = {m..k}.
    let pmask = mask_for_range(ctx.lo, split, ctx.lo, p);
    let qmask = mask_for_range(ctx.lo, k, ctx.lo, p);

    let mut num = Lse::new();
    for (mask, &l) in ell.iter().enumerate() {
        if mask == pmask || mask == qmask {
            continue;
        }
        num.add(ctx.gauge + l);
    }
    if ctx.m_sat > 0 || pmask == 0 {
        // the standalone constant term of the tau function
        num.add(0.0);
    }
    let ln_den = ctx.gauge + ell[pmask];
    Ok(num.total() - ln_den)
}

/// Window-relative bit mask for global index range `lo_range..hi_range`.
fn mask_for_range(lo_range: usize, hi_range: usize, win_lo: usize, p: usize) -> usize {
    let mut m = 0usize;
    for g in lo_range..hi_range {
        let rel = g - win_lo;
        debug_assert!(rel < p);
        m |= 1 << rel;
    }
    m
}

/// `sum_{i < j} ln a(i, j)` for 0-based `j`: the log of
/// `a(1..j+1) / a(1..j)` in 1-based subset notation.
pub(crate) fn ln_a_prefix_ratio(sol: &NSolitonSolution, j: usize) -> f64 {
    match &sol.data {
        EngineData::Dense(d) => {
            let mut s = 0.0;
            for i in 0..j {
                s += d.pair_ln_a[i * d.n + j];
            }
            s
        }
        EngineData::Ladder(lad) => lad.prefix_ln_a(j, j),
    }
}

/// `ln F` rebuilt from the constant plus gauge pieces; exposed for the
/// positivity check `F >= 1`.
#[allow(dead_code)]
pub(crate) fn ln_tau(sol: &NSolitonSolution, x: f64, t: f64) -> Result<f64> {
    Ok(logsumexp2(eval_point(sol, x, t)?.ln_f, f64::NEG_INFINITY))
}

#[cfg(test)]
pub(crate) fn ladder_data(sol: &NSolitonSolution) -> Option<&LadderData> {
    match &sol.data {
        EngineData::Ladder(l) => Some(l),
        EngineData::Dense(_) => None,
    }
}

#[cfg(test)]
impl LadderData {
    pub(crate) fn prefix_ln_a_test(&self, j: usize, m: usize) -> f64 {
        self.prefix_ln_a(j, m)
    }

    pub(crate) fn dress_test(&self) -> &[f64] {
        &self.dress
    }
}
