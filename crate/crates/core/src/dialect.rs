//! The fixed implementation-defined dialect shared by sema and the oracle.
//!
//! Plain `char` is signed and 8 bits wide, `short` 16, `int` 32, `long` and
//! `long long` 64, pointers 64. Integers use two's complement.

pub const CHAR_BITS: u32 = 8;
pub const SHORT_BITS: u32 = 16;
pub const INT_BITS: u32 = 32;
pub const LONG_BITS: u32 = 64;
pub const LONG_LONG_BITS: u32 = 64;
pub const POINTER_BYTES: u64 = 8;
pub const PLAIN_CHAR_SIGNED: bool = true;

/// Maximum nesting of `#include` and of macro expansion chains.
pub const MAX_PREPROCESS_DEPTH: usize = 32;

/// Truncate `value` to `bits` and reinterpret it with the given signedness.
pub fn wrap(value: i128, bits: u32, signed: bool) -> i128 {
    if bits >= 128 {
        return value;
    }
    let mask: i128 = (1i128 << bits) - 1;
    let raw = value & mask;
    if signed && bits > 0 && raw & (1i128 << (bits - 1)) != 0 {
        raw - (1i128 << bits)
    } else {
        raw
    }
}

/// Whether `value` is representable in an integer of the given shape.
pub fn fits(value: i128, bits: u32, signed: bool) -> bool {
    if signed {
        let min = -(1i128 << (bits - 1));
        let max = (1i128 << (bits - 1)) - 1;
        (min..=max).contains(&value)
    } else {
        value >= 0 && value < (1i128 << bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_two_complement() {
        assert_eq!(wrap(255, 8, true), -1);
        assert_eq!(wrap(-1, 8, false), 255);
        assert_eq!(wrap(1 << 32, 32, false), 0);
        assert_eq!(wrap(i32::MAX as i128 + 1, 32, true), i32::MIN as i128);
    }

    #[test]
    fn fits_bounds() {
        assert!(fits(-128, 8, true));
        assert!(!fits(128, 8, true));
        assert!(!fits(-1, 32, false));
        assert!(fits(u32::MAX as i128, 32, false));
    }
}
