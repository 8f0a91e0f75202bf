//! Binary fixed-point reals for long products of factors near 1.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

const FRAC_BITS: usize = 256;

/// `raw / 2^256`, truncated toward negative infinity after every product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixed {
    raw: BigInt,
}

impl Fixed {
    pub fn one() -> Self {
        Fixed {
            raw: BigInt::one() << FRAC_BITS,
        }
    }

    pub fn from_rational(r: &BigRational) -> Self {
        Fixed {
            raw: (r.numer() << FRAC_BITS).div_floor(r.denom()),
        }
    }

    pub fn mul(&self, other: &Fixed) -> Fixed {
        Fixed {
            raw: (&self.raw * &other.raw) >> FRAC_BITS,
        }
    }

    pub fn to_f64(&self) -> f64 {
        // Shift down first so the integer conversion cannot overflow.
        let shift = self.raw.bits().saturating_sub(120) as usize;
        let shift = shift.min(FRAC_BITS);
        let top = (&self.raw >> shift).to_f64().unwrap_or(f64::NAN);
        top * 2f64.powi(shift as i32 - FRAC_BITS as i32)
    }

    /// Decimal expansion with `digits` significant digits (truncated).
    pub fn to_decimal(&self, digits: usize) -> String {
        if self.raw.is_zero() {
            return "0".into();
        }
        let neg = self.raw.is_negative();
        let mag = self.raw.abs();
        let int_part = &mag >> FRAC_BITS;
        let mut frac = &mag - (&int_part << FRAC_BITS);
        let mut out = int_part.to_string();
        let mut significant = if int_part.is_zero() { 0 } else { out.len() };
        out.push('.');
        let ten = BigInt::from(10);
        while significant < digits {
            frac *= &ten;
            let d = &frac >> FRAC_BITS;
            frac -= &d << FRAC_BITS;
            out.push_str(&d.to_string());
            if significant > 0 || !d.is_zero() {
                significant += 1;
            }
        }
        if neg {
            out.insert(0, '-');
        }
        out
    }
}
