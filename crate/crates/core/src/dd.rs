//! Double-double arithmetic (~106 bits of precision). Used as the extended
//! precision fallback for the hull orientation predicate when the plain f64
//! determinant is too close to zero to trust its sign.

/// Unevaluated sum hi + lo with |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: err }
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    // Dekker split; 2^27 + 1.
    let t = 134217729.0 * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let err = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    Dd { hi: p, lo: err }
}

impl Dd {
    #[inline]
    pub fn from(a: f64) -> Dd {
        Dd { hi: a, lo: 0.0 }
    }

    #[inline]
    pub fn add(self, other: Dd) -> Dd {
        let s = two_sum(self.hi, other.hi);
        let lo = s.lo + self.lo + other.lo;
        let r = two_sum(s.hi, lo);
        Dd { hi: r.hi, lo: r.lo }
    }

    #[inline]
    pub fn sub(self, other: Dd) -> Dd {
        self.add(Dd {
            hi: -other.hi,
            lo: -other.lo,
        })
    }

    #[inline]
    pub fn mul(self, other: Dd) -> Dd {
        let p = two_prod(self.hi, other.hi);
        let lo = p.lo + self.hi * other.lo + self.lo * other.hi;
        let r = two_sum(p.hi, lo);
        Dd { hi: r.hi, lo: r.lo }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Exact-difference helper: a - b as a double-double (error-free for f64).
#[inline]
pub fn diff(a: f64, b: f64) -> Dd {
    two_sum(a, -b)
}

/// Determinant of the 3x3 matrix with rows r0, r1, r2, in double-double.
pub fn det3(r0: [Dd; 3], r1: [Dd; 3], r2: [Dd; 3]) -> Dd {
    let m01 = r1[1].mul(r2[2]).sub(r1[2].mul(r2[1]));
    let m11 = r1[0].mul(r2[2]).sub(r1[2].mul(r2[0]));
    let m21 = r1[0].mul(r2[1]).sub(r1[1].mul(r2[0]));
    r0[0].mul(m01).sub(r0[1].mul(m11)).add(r0[2].mul(m21))
}
