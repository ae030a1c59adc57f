use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_rational::Rational32;

/// SI base dimensions, in exponent order.
pub const BASE_SYMBOLS: [&str; 7] = ["m", "kg", "s", "A", "K", "mol", "cd"];

/// Exponents of the seven SI base dimensions (length, mass, time, current,
/// temperature, amount of substance, luminous intensity).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct DimensionVector(pub [Rational32; 7]);

impl DimensionVector {
    pub const LENGTH: usize = 0;
    pub const MASS: usize = 1;
    pub const TIME: usize = 2;
    pub const CURRENT: usize = 3;
    pub const TEMPERATURE: usize = 4;
    pub const AMOUNT: usize = 5;
    pub const LUMINOUS: usize = 6;

    pub fn dimensionless() -> Self {
        DimensionVector::default()
    }

    /// Builds a vector from integer exponents.
    pub fn from_ints(exps: [i32; 7]) -> Self {
        DimensionVector(exps.map(Rational32::from_integer))
    }

    /// A single base dimension raised to `k`.
    pub fn base(index: usize, k: i32) -> Self {
        let mut exps = [0; 7];
        exps[index] = k;
        DimensionVector::from_ints(exps)
    }

    pub fn is_dimensionless(&self) -> bool {
        self.0.iter().all(|e| *e == Rational32::from_integer(0))
    }

    pub fn scale(&self, k: Rational32) -> Self {
        DimensionVector(self.0.map(|e| e * k))
    }

    pub fn powi(&self, k: i32) -> Self {
        self.scale(Rational32::from_integer(k))
    }
}

impl Add for DimensionVector {
    type Output = DimensionVector;
    fn add(self, rhs: Self) -> Self {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o += r;
        }
        DimensionVector(out)
    }
}

impl Sub for DimensionVector {
    type Output = DimensionVector;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for DimensionVector {
    type Output = DimensionVector;
    fn neg(self) -> Self {
        DimensionVector(self.0.map(|e| -e))
    }
}

impl fmt::Display for DimensionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_dimensionless() {
            return f.write_str("1");
        }
        let mut first = true;
        for (sym, e) in BASE_SYMBOLS.iter().zip(self.0) {
            if e == Rational32::from_integer(0) {
                continue;
            }
            if !first {
                f.write_str("·")?;
            }
            first = false;
            f.write_str(sym)?;
            if e != Rational32::from_integer(1) {
                if e.is_integer() {
                    write!(f, "^{}", e.numer())?;
                } else {
                    write!(f, "^({}/{})", e.numer(), e.denom())?;
                }
            }
        }
        Ok(())
    }
}
