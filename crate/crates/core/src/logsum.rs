//! Signed log-domain arithmetic.
//!
//! Subset sums of the tau function involve terms `exp(theta)` whose
//! exponents reach several thousand, far past `f64` range. Every term is
//! therefore carried as a sign together with the natural log of its
//! magnitude, and sums are accumulated with a running-maximum shift so
//! that only ratios `exp(l - l_max) <= 1` are ever exponentiated.

/// A real number `sign * exp(ln_abs)`.
///
/// Zero is represented as `sign = 0.0, ln_abs = -inf`; the pair stays
/// meaningful for magnitudes far outside `f64` range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: f64,
    pub ln_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0.0,
        ln_abs: f64::NEG_INFINITY,
    };

    pub fn new(sign: f64, ln_abs: f64) -> Self {
        if sign == 0.0 || ln_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            SignedLog {
                sign: sign.signum(),
                ln_abs,
            }
        }
    }

    pub fn from_value(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            SignedLog {
                sign: v.signum(),
                ln_abs: v.abs().ln(),
            }
        }
    }

    /// Plain `f64` view; overflows to `+-inf` and underflows to 0.
    pub fn value(&self) -> f64 {
        self.sign * self.ln_abs.exp()
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0.0
    }

    pub fn mul(&self, other: &SignedLog) -> SignedLog {
        SignedLog::new(self.sign * other.sign, self.ln_abs + other.ln_abs)
    }

    pub fn scale(&self, factor: f64) -> SignedLog {
        if factor == 0.0 {
            return Self::ZERO;
        }
        SignedLog::new(self.sign * factor.signum(), self.ln_abs + factor.abs().ln())
    }

    pub fn neg(&self) -> SignedLog {
        SignedLog {
            sign: -self.sign,
            ln_abs: self.ln_abs,
        }
    }
}

/// Streaming signed log-sum accumulator with max-shift rescaling.
///
/// Internally keeps `pos - neg` relative to the running maximum exponent;
/// `exp` is only applied to non-positive arguments so no intermediate can
/// overflow. Cancellation between the positive and negative parts loses
/// relative precision exactly as the underlying subtraction does; callers
/// needing full relative accuracy must feed sign-definite terms.
#[derive(Debug, Clone)]
pub struct SignedLogSum {
    max_ln: f64,
    pos: f64,
    neg: f64,
}

impl SignedLogSum {
    pub fn new() -> Self {
        SignedLogSum {
            max_ln: f64::NEG_INFINITY,
            pos: 0.0,
            neg: 0.0,
        }
    }

    pub fn add_ln(&mut self, sign: f64, ln_abs: f64) {
        if sign == 0.0 || ln_abs == f64::NEG_INFINITY {
            return;
        }
        if ln_abs > self.max_ln {
            let shift = if self.max_ln == f64::NEG_INFINITY {
                0.0
            } else {
                (self.max_ln - ln_abs).exp()
            };
            self.pos *= shift;
            self.neg *= shift;
            self.max_ln = ln_abs;
        }
        let w = (ln_abs - self.max_ln).exp();
        if sign > 0.0 {
            self.pos += w;
        } else {
            self.neg += w;
        }
    }

    pub fn add(&mut self, term: SignedLog) {
        self.add_ln(term.sign, term.ln_abs);
    }

    pub fn total(&self) -> SignedLog {
        if self.max_ln == f64::NEG_INFINITY {
            return SignedLog::ZERO;
        }
        let diff = self.pos - self.neg;
        if diff == 0.0 {
            return SignedLog::ZERO;
        }
        SignedLog::new(diff.signum(), self.max_ln + diff.abs().ln())
    }
}

impl Default for SignedLogSum {
    fn default() -> Self {
        Self::new()
    }
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn logsumexp2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// `ln(1 + exp(x))`, stable for any `x`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln(sech(x))`, stable for any `x`.
pub fn ln_sech(x: f64) -> f64 {
    // ln cosh x = |x| - ln 2 + ln(1 + e^{-2|x|})
    -(x.abs() - std::f64::consts::LN_2 + (-2.0 * x.abs()).exp().ln_1p())
}
