//! Controllable floating-point precision.
//!
//! All state is stored as `f64`; the precision mode decides how arithmetic is
//! performed on it:
//!
//! - [`PrecisionMode::Native64`] — plain IEEE binary64 operations.
//! - [`PrecisionMode::Native32`] — every operation is executed in IEEE
//!   binary32 (operands cast down, the result cast back). Values flowing
//!   through a native32 computation are always exactly representable in
//!   binary32, so the casts are lossless.
//! - [`PrecisionMode::Emulated`] — operations are executed in binary64 and
//!   the result of every single operation is rounded (ties to even) to a
//!   format with the given exponent and mantissa widths, including subnormal
//!   handling and overflow to infinity.
//!
//! `Emulated { exponent_bits: 8, mantissa_bits: 23 }` rounds exactly like a
//! conversion to native `f32`; `Emulated { 5, 10 }` is IEEE half precision.
//!
//! Transcendental functions go through `libm` in every mode so results do not
//! depend on the platform's math library.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arithmetic precision for training and optimizer steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionMode {
    Native64,
    Native32,
    Emulated { exponent_bits: u32, mantissa_bits: u32 },
}

impl PrecisionMode {
    /// Emulated mode with validated field widths.
    pub fn emulated(exponent_bits: u32, mantissa_bits: u32) -> Result<Self> {
        let mode = PrecisionMode::Emulated { exponent_bits, mantissa_bits };
        mode.validate()?;
        Ok(mode)
    }

    pub fn validate(&self) -> Result<()> {
        if let PrecisionMode::Emulated { exponent_bits, mantissa_bits } = *self {
            if !(2..=11).contains(&exponent_bits) {
                return Err(Error::invalid(format!(
                    "emulated exponent_bits must be in [2, 11], got {exponent_bits}"
                )));
            }
            if !(1..=52).contains(&mantissa_bits) {
                return Err(Error::invalid(format!(
                    "emulated mantissa_bits must be in [1, 52], got {mantissa_bits}"
                )));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for PrecisionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PrecisionMode::Native64 => write!(f, "native64"),
            PrecisionMode::Native32 => write!(f, "native32"),
            PrecisionMode::Emulated { exponent_bits, mantissa_bits } => {
                write!(f, "emulated:{exponent_bits},{mantissa_bits}")
            }
        }
    }
}

impl std::str::FromStr for PrecisionMode {
    type Err = Error;

    /// Accepts `native64`, `native32`, or `emulated:E,M`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "native64" => Ok(PrecisionMode::Native64),
            "native32" => Ok(PrecisionMode::Native32),
            _ => {
                let rest = s
                    .strip_prefix("emulated:")
                    .ok_or_else(|| Error::invalid(format!("unknown precision mode `{s}`")))?;
                let (e, m) = rest
                    .split_once(',')
                    .ok_or_else(|| Error::invalid("expected emulated:E,M"))?;
                let exponent_bits: u32 =
                    e.trim().parse().map_err(|_| Error::invalid("bad exponent bits"))?;
                let mantissa_bits: u32 =
                    m.trim().parse().map_err(|_| Error::invalid("bad mantissa bits"))?;
                PrecisionMode::emulated(exponent_bits, mantissa_bits)
            }
        }
    }
}

/// Rounds `x` to the nearest representable value of the mode's format
/// (ties to even). Preserves signed zero and infinities; NaN maps to NaN;
/// values beyond the format's rounding boundary become infinite.
pub fn quantize(x: f64, mode: PrecisionMode) -> f64 {
    match mode {
        PrecisionMode::Native64 => x,
        PrecisionMode::Native32 => x as f32 as f64,
        PrecisionMode::Emulated { exponent_bits, mantissa_bits } => {
            quantize_emulated(x, exponent_bits, mantissa_bits)
        }
    }
}

/// `2^e` for `e` in `[-1074, 1023]`, constructed exactly from bits.
fn exp2i(e: i64) -> f64 {
    debug_assert!((-1074..=1023).contains(&e));
    if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else {
        f64::from_bits(1u64 << (e + 1074))
    }
}

fn quantize_emulated(x: f64, ebits: u32, mbits: u32) -> f64 {
    debug_assert!((2..=11).contains(&ebits) && (1..=52).contains(&mbits));
    if x.is_nan() {
        return f64::NAN;
    }
    if x == 0.0 || x.is_infinite() {
        return x;
    }

    let bias = (1i64 << (ebits - 1)) - 1;
    let emin = 1 - bias; // smallest normal exponent
    let emax = bias; // largest normal exponent
    let mag = x.abs();

    // Below the smallest normal the grid spacing is fixed at 2^(emin - mbits).
    // Scale to integers, round, scale back; the scale factor can exceed the
    // f64 exponent range so it is applied in two exact power-of-two steps.
    if mag < exp2i(emin) {
        let shift = mbits as i64 - emin;
        let (s1, s2) = (shift / 2, shift - shift / 2);
        let q = (mag * exp2i(s1) * exp2i(s2)).round_ties_even();
        let back = q * exp2i(-s1) * exp2i(-s2);
        return if x.is_sign_negative() { -back } else { back };
    }

    // Normal range: round the trailing 52-mbits mantissa bits away by integer
    // arithmetic on the raw representation. A carry out of the mantissa flows
    // into the exponent field, which is exactly the required behavior.
    let shift = 52 - mbits;
    let bits = mag.to_bits();
    let rounded = if shift == 0 {
        bits
    } else {
        let half = 1u64 << (shift - 1);
        let rem = bits & ((1u64 << shift) - 1);
        let base = bits >> shift;
        let up = rem > half || (rem == half && base & 1 == 1);
        (base + u64::from(up)) << shift
    };
    let e = ((rounded >> 52) & 0x7FF) as i64 - 1023;
    let out = if e > emax { f64::INFINITY } else { f64::from_bits(rounded) };
    if x.is_sign_negative() {
        -out
    } else {
        out
    }
}

/// Arithmetic under a fixed precision. Implementations are zero-overhead for
/// the native modes so training kernels can be monomorphized per mode.
pub trait Arith: Copy {
    /// Rounds a raw binary64 value into the format.
    fn round(self, x: f64) -> f64;
    fn add(self, a: f64, b: f64) -> f64;
    fn sub(self, a: f64, b: f64) -> f64;
    fn mul(self, a: f64, b: f64) -> f64;
    fn div(self, a: f64, b: f64) -> f64;
    fn sqrt(self, a: f64) -> f64;
    fn tanh(self, a: f64) -> f64;
    fn exp(self, a: f64) -> f64;
}

/// Plain binary64 arithmetic.
#[derive(Debug, Clone, Copy)]
pub struct F64Arith;

impl Arith for F64Arith {
    #[inline]
    fn round(self, x: f64) -> f64 {
        x
    }
    #[inline]
    fn add(self, a: f64, b: f64) -> f64 {
        a + b
    }
    #[inline]
    fn sub(self, a: f64, b: f64) -> f64 {
        a - b
    }
    #[inline]
    fn mul(self, a: f64, b: f64) -> f64 {
        a * b
    }
    #[inline]
    fn div(self, a: f64, b: f64) -> f64 {
        a / b
    }
    #[inline]
    fn sqrt(self, a: f64) -> f64 {
        libm::sqrt(a)
    }
    #[inline]
    fn tanh(self, a: f64) -> f64 {
        libm::tanh(a)
    }
    #[inline]
    fn exp(self, a: f64) -> f64 {
        libm::exp(a)
    }
}

/// True binary32 arithmetic on f32-representable operands.
#[derive(Debug, Clone, Copy)]
pub struct F32Arith;

impl Arith for F32Arith {
    #[inline]
    fn round(self, x: f64) -> f64 {
        x as f32 as f64
    }
    #[inline]
    fn add(self, a: f64, b: f64) -> f64 {
        (a as f32 + b as f32) as f64
    }
    #[inline]
    fn sub(self, a: f64, b: f64) -> f64 {
        (a as f32 - b as f32) as f64
    }
    #[inline]
    fn mul(self, a: f64, b: f64) -> f64 {
        (a as f32 * b as f32) as f64
    }
    #[inline]
    fn div(self, a: f64, b: f64) -> f64 {
        (a as f32 / b as f32) as f64
    }
    #[inline]
    fn sqrt(self, a: f64) -> f64 {
        libm::sqrtf(a as f32) as f64
    }
    #[inline]
    fn tanh(self, a: f64) -> f64 {
        libm::tanhf(a as f32) as f64
    }
    #[inline]
    fn exp(self, a: f64) -> f64 {
        libm::expf(a as f32) as f64
    }
}

/// Binary64 arithmetic with the result of every operation rounded to an
/// emulated format.
#[derive(Debug, Clone, Copy)]
pub struct EmulatedArith {
    ebits: u32,
    mbits: u32,
}

impl EmulatedArith {
    pub fn new(exponent_bits: u32, mantissa_bits: u32) -> Self {
        EmulatedArith { ebits: exponent_bits, mbits: mantissa_bits }
    }
}

impl Arith for EmulatedArith {
    #[inline]
    fn round(self, x: f64) -> f64 {
        quantize_emulated(x, self.ebits, self.mbits)
    }
    #[inline]
    fn add(self, a: f64, b: f64) -> f64 {
        self.round(a + b)
    }
    #[inline]
    fn sub(self, a: f64, b: f64) -> f64 {
        self.round(a - b)
    }
    #[inline]
    fn mul(self, a: f64, b: f64) -> f64 {
        self.round(a * b)
    }
    #[inline]
    fn div(self, a: f64, b: f64) -> f64 {
        self.round(a / b)
    }
    #[inline]
    fn sqrt(self, a: f64) -> f64 {
        self.round(libm::sqrt(a))
    }
    #[inline]
    fn tanh(self, a: f64) -> f64 {
        self.round(libm::tanh(a))
    }
    #[inline]
    fn exp(self, a: f64) -> f64 {
        self.round(libm::exp(a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn native64_is_identity() {
        for x in [0.0, -0.0, 1.5, -3.25e100, f64::INFINITY, f64::MIN_POSITIVE] {
            assert_eq!(quantize(x, PrecisionMode::Native64).to_bits(), x.to_bits());
        }
    }

    #[test]
    fn half_precision_drops_small_tail() {
        // 1 + 2^-20 is below half the ulp of 1.0 in binary16 (ulp = 2^-10).
        let half = PrecisionMode::Emulated { exponent_bits: 5, mantissa_bits: 10 };
        assert_eq!(quantize(1.0 + f64::powi(2.0, -20), half), 1.0);
        // 1 + 2^-10 is exactly representable.
        let x = 1.0 + f64::powi(2.0, -10);
        assert_eq!(quantize(x, half), x);
        // Tie at 1 + 2^-11 rounds to even (down to 1.0).
        assert_eq!(quantize(1.0 + f64::powi(2.0, -11), half), 1.0);
        // Tie at 1 + 3*2^-11 rounds to even (up to 1 + 2^-10 + 2^-10).
        assert_eq!(quantize(1.0 + 3.0 * f64::powi(2.0, -11), half), 1.0 + 2.0 * f64::powi(2.0, -10));
    }

    #[test]
    fn half_precision_known_values() {
        let half = PrecisionMode::Emulated { exponent_bits: 5, mantissa_bits: 10 };
        // Largest binary16 normal is 65504; beyond the rounding midpoint
        // (65520) everything overflows to infinity.
        assert_eq!(quantize(65504.0, half), 65504.0);
        assert_eq!(quantize(65519.0, half), 65504.0);
        assert_eq!(quantize(65520.0, half), f64::INFINITY);
        assert_eq!(quantize(-65520.0, half), f64::NEG_INFINITY);
        // Smallest binary16 subnormal is 2^-24; half of it rounds to zero.
        assert_eq!(quantize(f64::powi(2.0, -24), half), f64::powi(2.0, -24));
        assert_eq!(quantize(f64::powi(2.0, -25), half), 0.0);
        assert_eq!(quantize(1.5 * f64::powi(2.0, -25), half), f64::powi(2.0, -24));
        // Sign is preserved through the subnormal path.
        assert_eq!(quantize(-f64::powi(2.0, -25), half).to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn specials_preserved() {
        let half = PrecisionMode::Emulated { exponent_bits: 5, mantissa_bits: 10 };
        assert!(quantize(f64::NAN, half).is_nan());
        assert_eq!(quantize(f64::INFINITY, half), f64::INFINITY);
        assert_eq!(quantize(f64::NEG_INFINITY, half), f64::NEG_INFINITY);
        assert_eq!(quantize(0.0, half).to_bits(), 0.0f64.to_bits());
        assert_eq!(quantize(-0.0, half).to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn emulated_f32_matches_native_cast() {
        let mode = PrecisionMode::Emulated { exponent_bits: 8, mantissa_bits: 23 };
        let mut rng = crate::rng::SplitMix64::new(0xF32);
        for _ in 0..200_000 {
            let x = f64::from_bits(rng.next_u64());
            let q = quantize(x, mode);
            let c = x as f32 as f64;
            if x.is_nan() {
                assert!(q.is_nan());
            } else {
                assert_eq!(q.to_bits(), c.to_bits(), "x = {x:e} ({:#x})", x.to_bits());
            }
        }
    }

    #[test]
    fn emulated_full_width_is_identity() {
        let mode = PrecisionMode::Emulated { exponent_bits: 11, mantissa_bits: 52 };
        let mut rng = crate::rng::SplitMix64::new(9);
        for _ in 0..50_000 {
            let x = f64::from_bits(rng.next_u64());
            if x.is_nan() {
                continue;
            }
            assert_eq!(quantize(x, mode).to_bits(), x.to_bits());
        }
    }

    #[test]
    fn quantize_idempotent() {
        let modes = [
            PrecisionMode::Native32,
            PrecisionMode::Emulated { exponent_bits: 5, mantissa_bits: 10 },
            PrecisionMode::Emulated { exponent_bits: 4, mantissa_bits: 3 },
            PrecisionMode::Emulated { exponent_bits: 2, mantissa_bits: 1 },
        ];
        let mut rng = crate::rng::SplitMix64::new(77);
        for _ in 0..50_000 {
            let x = f64::from_bits(rng.next_u64());
            if x.is_nan() {
                continue;
            }
            for mode in modes {
                let once = quantize(x, mode);
                let twice = quantize(once, mode);
                assert_eq!(once.to_bits(), twice.to_bits(), "mode {mode}, x {x:e}");
            }
        }
    }

    #[test]
    fn mode_validation() {
        assert!(PrecisionMode::emulated(5, 10).is_ok());
        assert!(PrecisionMode::emulated(1, 10).is_err());
        assert!(PrecisionMode::emulated(12, 10).is_err());
        assert!(PrecisionMode::emulated(5, 0).is_err());
        assert!(PrecisionMode::emulated(5, 53).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["native64", "native32", "emulated:5,10"] {
            let mode: PrecisionMode = s.parse().unwrap();
            assert_eq!(mode.to_string(), s);
        }
        assert!("float16".parse::<PrecisionMode>().is_err());
        assert!("emulated:99,2".parse::<PrecisionMode>().is_err());
    }

    #[test]
    fn native32_arith_matches_f32_ops() {
        let a32 = F32Arith;
        let (a, b) = (1.1f32 as f64, 3.7f32 as f64);
        assert_eq!(a32.add(a, b), (1.1f32 + 3.7f32) as f64);
        assert_eq!(a32.mul(a, b), (1.1f32 * 3.7f32) as f64);
        assert_eq!(a32.div(a, b), (1.1f32 / 3.7f32) as f64);
    }
}
