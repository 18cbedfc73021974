//! Exact arithmetic in ℚ(√d).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// `a + b√d` with `d` square-free; for `d = 1` the `b` part is always zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldScalar {
    a: BigRational,
    b: BigRational,
    d: u32,
}

pub fn is_square_free(d: u32) -> bool {
    if d == 0 {
        return false;
    }
    let mut p = 2u64;
    while p * p <= d as u64 {
        if d as u64 % (p * p) == 0 {
            return false;
        }
        p += 1;
    }
    true
}

pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, m)) => {
            let n = BigInt::from_str(n.trim()).ok()?;
            let m = BigInt::from_str(m.trim()).ok()?;
            (!m.is_zero()).then(|| BigRational::new(n, m))
        }
        None => BigInt::from_str(s).ok().map(BigRational::from_integer),
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl FieldScalar {
    pub fn new(a: BigRational, b: BigRational, d: u32) -> Self {
        debug_assert!(is_square_free(d));
        if d == 1 {
            FieldScalar { a: a + b, b: BigRational::zero(), d }
        } else {
            FieldScalar { a, b, d }
        }
    }

    pub fn rational(a: BigRational, d: u32) -> Self {
        Self::new(a, BigRational::zero(), d)
    }

    pub fn from_ints(num: i64, den: i64, d: u32) -> Self {
        Self::rational(BigRational::new(num.into(), den.into()), d)
    }

    pub fn zero(d: u32) -> Self {
        Self::rational(BigRational::zero(), d)
    }

    pub fn one(d: u32) -> Self {
        Self::rational(BigRational::one(), d)
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn radical_part(&self) -> &BigRational {
        &self.b
    }

    pub fn radicand(&self) -> u32 {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    fn same_field(&self, other: &Self) {
        assert_eq!(self.d, other.d, "scalars from different fields");
    }

    /// Exact sign: compare `a²` with `b²d` when the parts disagree.
    pub fn signum(&self) -> Ordering {
        let sa = self.a.cmp(&BigRational::zero());
        let sb = self.b.cmp(&BigRational::zero());
        if sb == Ordering::Equal || sa == sb {
            return if sa == Ordering::Equal { sb } else { sa };
        }
        if sa == Ordering::Equal {
            return sb;
        }
        let a2 = &self.a * &self.a;
        let b2d = &self.b * &self.b * BigRational::from_integer(self.d.into());
        match a2.cmp(&b2d) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => unreachable!("√d is irrational for square-free d > 1"),
        }
    }

    pub fn inverse(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let norm = &self.a * &self.a - &self.b * &self.b * BigRational::from_integer(self.d.into());
        Some(FieldScalar { a: &self.a / &norm, b: -&self.b / &norm, d: self.d })
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            -self
        } else {
            self.clone()
        }
    }
}

impl PartialOrd for FieldScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FieldScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl Add for &FieldScalar {
    type Output = FieldScalar;
    fn add(self, o: &FieldScalar) -> FieldScalar {
        self.same_field(o);
        FieldScalar { a: &self.a + &o.a, b: &self.b + &o.b, d: self.d }
    }
}

impl Sub for &FieldScalar {
    type Output = FieldScalar;
    fn sub(self, o: &FieldScalar) -> FieldScalar {
        self.same_field(o);
        FieldScalar { a: &self.a - &o.a, b: &self.b - &o.b, d: self.d }
    }
}

impl Mul for &FieldScalar {
    type Output = FieldScalar;
    fn mul(self, o: &FieldScalar) -> FieldScalar {
        self.same_field(o);
        let d = BigRational::from_integer(self.d.into());
        FieldScalar {
            a: &self.a * &o.a + &self.b * &o.b * d,
            b: &self.a * &o.b + &self.b * &o.a,
            d: self.d,
        }
    }
}

impl Neg for &FieldScalar {
    type Output = FieldScalar;
    fn neg(self) -> FieldScalar {
        FieldScalar { a: -&self.a, b: -&self.b, d: self.d }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for FieldScalar {
            type Output = FieldScalar;
            fn $m(self, o: FieldScalar) -> FieldScalar {
                (&self).$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for FieldScalar {
    type Output = FieldScalar;
    fn neg(self) -> FieldScalar {
        -&self
    }
}

impl fmt::Display for FieldScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rad = |b: &BigRational| {
            if b.is_one() {
                format!("√{}", self.d)
            } else if *b == -BigRational::one() {
                format!("-√{}", self.d)
            } else {
                format!("{}√{}", fmt_rational(b), self.d)
            }
        };
        match (self.a.is_zero(), self.b.is_zero()) {
            (_, true) => write!(f, "{}", fmt_rational(&self.a)),
            (true, false) => write!(f, "{}", rad(&self.b)),
            (false, false) => {
                let sign = if self.b.is_negative() { "" } else { "+" };
                write!(f, "{}{}{}", fmt_rational(&self.a), sign, rad(&self.b))
            }
        }
    }
}
