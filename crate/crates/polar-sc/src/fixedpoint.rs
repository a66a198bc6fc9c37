//! q-bit sign-magnitude LLR arithmetic of the processing element, plus the
//! channel quantizer.
//!
//! A PE works on `q`-bit values: one sign bit and a `q-1`-bit magnitude.
//! Negative zero is never representable: every constructor and every
//! operation canonicalizes `mag == 0` to a positive sign, so equality on
//! [`QLlr`] is value equality.

use thiserror::Error;

use crate::code::Bit;

#[derive(Debug, Error)]
pub enum FixedPointError {
    #[error("quantization width {0} outside supported range 3..=8")]
    InvalidWidth(u8),
    #[error("value {value} not representable in {q} sign-magnitude bits")]
    OutOfRange { value: i32, q: u8 },
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("saturation multiplier must be positive, got {0}")]
    NonPositiveSatSigma(f64),
}

/// Smallest supported quantization width in bits (sign included).
pub const MIN_Q: u8 = 3;
/// Largest supported quantization width in bits (sign included).
pub const MAX_Q: u8 = 8;

/// Largest representable magnitude for a `q`-bit value.
pub fn max_mag(q: u8) -> u8 {
    debug_assert!((MIN_Q..=MAX_Q).contains(&q));
    (1u8 << (q - 1)) - 1
}

/// A sign-magnitude quantized LLR. Sign bit set means negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct QLlr {
    sign: bool,
    mag: u8,
}

impl QLlr {
    /// Builds a value, normalizing negative zero to positive zero.
    ///
    /// Magnitude range is the producer's responsibility; the arithmetic in
    /// this module never emits a magnitude above `max_mag(q)` for its `q`.
    pub fn new(sign: bool, mag: u8) -> Self {
        QLlr {
            sign: sign && mag != 0,
            mag,
        }
    }

    pub fn zero() -> Self {
        QLlr {
            sign: false,
            mag: 0,
        }
    }

    /// True when the value is negative (sign bit set).
    pub fn sign(self) -> bool {
        self.sign
    }

    pub fn mag(self) -> u8 {
        self.mag
    }

    /// Sign flip, canonical on zero.
    pub fn negate(self) -> Self {
        QLlr::new(!self.sign, self.mag)
    }

    /// Two's-complement-style integer view, used as the test bridge to exact
    /// integer arithmetic.
    pub fn to_signed(self) -> i32 {
        if self.sign {
            -(self.mag as i32)
        } else {
            self.mag as i32
        }
    }

    /// Inverse of [`QLlr::to_signed`] for values representable in `q` bits.
    pub fn from_signed(value: i32, q: u8) -> Result<Self, FixedPointError> {
        if !(MIN_Q..=MAX_Q).contains(&q) {
            return Err(FixedPointError::InvalidWidth(q));
        }
        let limit = max_mag(q) as i32;
        if value.abs() > limit {
            return Err(FixedPointError::OutOfRange { value, q });
        }
        Ok(QLlr::new(value < 0, value.unsigned_abs() as u8))
    }

    /// The hard decision carried by this value: 0 unless strictly negative.
    pub fn decision(self) -> Bit {
        self.sign as Bit
    }
}

/// Channel quantizer parameters: total width `q` and the clip point as a
/// multiple of the noise standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantSpec {
    q: u8,
    sat_sigma: f64,
}

/// Default clip multiplier; chosen as the best-performing saturation level
/// across quantization widths.
pub const DEFAULT_SAT_SIGMA: f64 = 3.0;

impl QuantSpec {
    /// Spec with the default +/-3 sigma saturation.
    pub fn new(q: u8) -> Result<Self, FixedPointError> {
        Self::with_sat_sigma(q, DEFAULT_SAT_SIGMA)
    }

    pub fn with_sat_sigma(q: u8, sat_sigma: f64) -> Result<Self, FixedPointError> {
        if !(MIN_Q..=MAX_Q).contains(&q) {
            return Err(FixedPointError::InvalidWidth(q));
        }
        if !(sat_sigma > 0.0) {
            return Err(FixedPointError::NonPositiveSatSigma(sat_sigma));
        }
        Ok(QuantSpec { q, sat_sigma })
    }

    pub fn q(self) -> u8 {
        self.q
    }

    pub fn sat_sigma(self) -> f64 {
        self.sat_sigma
    }

    pub fn max_mag(self) -> u8 {
        max_mag(self.q)
    }
}

/// PE `f` path: sign is the XOR of input signs, magnitude the minimum.
pub fn pe_f(a: QLlr, b: QLlr) -> QLlr {
    QLlr::new(a.sign ^ b.sign, a.mag.min(b.mag))
}

/// PE `g` path: `b + a` or `b - a` selected by the partial sum, computed
/// exactly and then saturated to the `q`-bit magnitude range.
pub fn pe_g(a: QLlr, b: QLlr, us: Bit, q: u8) -> QLlr {
    let mut ignored = 0u64;
    pe_g_counted(a, b, us, q, &mut ignored)
}

/// [`pe_g`] with a saturation-event counter for diagnostics.
pub fn pe_g_counted(a: QLlr, b: QLlr, us: Bit, q: u8, saturations: &mut u64) -> QLlr {
    debug_assert!(us <= 1);
    let a_int = if us == 1 { -a.to_signed() } else { a.to_signed() };
    let sum = a_int + b.to_signed();
    let limit = max_mag(q) as i32;
    let clamped = if sum > limit {
        *saturations += 1;
        limit
    } else if sum < -limit {
        *saturations += 1;
        -limit
    } else {
        sum
    };
    QLlr::new(clamped < 0, clamped.unsigned_abs() as u8)
}

/// Maps a received BPSK sample to a quantized LLR.
///
/// The sample is clipped to `+/- sat_sigma * sigma` and scaled linearly so
/// the clip point lands on the full-scale magnitude; rounding is to nearest
/// with ties away from zero. A nonnegative sample maps to a nonnegative LLR
/// (bit 0 more likely), matching the 0 -> +1 modulation polarity. The
/// 2/sigma^2 LLR scaling is absorbed by the linear map; min-sum decoding is
/// invariant under positive scaling so no further calibration is needed.
pub fn quantize_channel(y: f64, sigma: f64, spec: QuantSpec) -> Result<QLlr, FixedPointError> {
    if !(sigma > 0.0) {
        return Err(FixedPointError::NonPositiveSigma(sigma));
    }
    let clip = spec.sat_sigma * sigma;
    let clipped = y.clamp(-clip, clip);
    let scaled = clipped / clip * spec.max_mag() as f64;
    // f64::round ties away from zero.
    let mag = scaled.abs().round() as u8;
    Ok(QLlr::new(y < 0.0, mag))
}
