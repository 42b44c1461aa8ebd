//! Minimal double-double arithmetic.
//!
//! The curve search compares objective values whose true differences shrink
//! to one ulp before the residual reaches its tolerance. Evaluating the
//! objective through these error-free transformations keeps its rounding
//! below that difference, so a step with a true decrease is never rejected
//! for noise (rounding is monotone).

/// An unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd {
        hi: s,
        lo: b - (s - a),
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd {
        hi: s,
        lo: (a - (s - bb)) + (b - bb),
    }
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let t = a * 134_217_729.0; // 2^27 + 1
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
pub(crate) fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    let (a_hi, a_lo) = split(a);
    let (b_hi, b_lo) = split(b);
    Dd {
        hi: p,
        lo: ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo,
    }
}

impl Dd {
    pub fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, other: Dd) -> Dd {
        let s = two_sum(self.hi, other.hi);
        quick_two_sum(s.hi, s.lo + self.lo + other.lo)
    }

    pub fn mul(self, other: Dd) -> Dd {
        let p = two_prod(self.hi, other.hi);
        quick_two_sum(p.hi, p.lo + self.hi * other.lo + self.lo * other.hi)
    }

    pub fn mul_f64(self, f: f64) -> Dd {
        let p = two_prod(self.hi, f);
        quick_two_sum(p.hi, p.lo + self.lo * f)
    }

    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.add(other.mul_f64(-q1));
        let q2 = r.to_f64() / other.hi;
        quick_two_sum(q1, q2)
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::from(0.0);
        }
        let s = self.hi.sqrt();
        let r = self.add(two_prod(s, s).neg());
        quick_two_sum(s, r.to_f64() / (2.0 * s))
    }

    pub fn powi(self, p: usize) -> Dd {
        let mut out = self;
        for _ in 1..p {
            out = out.mul(self);
        }
        out
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

/// Neumaier-compensated accumulator; `total_dd` recovers the running sum as
/// a double-double.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn add_dd(&mut self, v: Dd) {
        self.add(v.hi);
        self.add(v.lo);
    }

    pub fn total_dd(&self) -> Dd {
        two_sum(self.sum, self.carry)
    }
}
