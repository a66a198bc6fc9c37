//! Code representation: frozen-set construction, bit-reversal permutation and
//! the butterfly encoder.
//!
//! All public interfaces index the input word `u` in natural order; the
//! bit-reversed ordering of the encoder graph is applied internally by
//! [`PolarCode::encode`]. Codewords are indexed in natural channel order.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::channel;

/// A single binary symbol, 0 or 1.
pub type Bit = u8;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("code length {0} must be a power of two >= 2")]
    InvalidLength(usize),
    #[error("information bit count {k} invalid for code length {n}")]
    InvalidInfoCount { k: usize, n: usize },
    #[error("input length {got} does not match code length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("frozen position {0} carries a nonzero bit")]
    FrozenBitSet(usize),
    #[error("symbol at index {0} is not in {{0,1}}")]
    NonBinary(usize),
    #[error("invalid design Eb/N0 / rate combination: {0}")]
    BadDesignPoint(#[from] channel::ChannelError),
    #[error("bad frozen mask file: {0}")]
    BadMask(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reverses the `m` low-order bits of `i`.
///
/// This is the permutation relating the natural input order to the wire
/// order of the encoder/decoder butterfly. It is an involution.
///
/// Panics if `i >= 2^m` or `m > usize::BITS`.
pub fn bit_reverse(i: usize, m: u32) -> usize {
    assert!(m <= usize::BITS, "bit width {m} too large");
    assert!(
        (m == usize::BITS) || i < (1usize << m),
        "index {i} out of range for bit width {m}"
    );
    if m == 0 {
        return 0;
    }
    i.reverse_bits() >> (usize::BITS - m)
}

/// Permutes a slice in place by the bit-reversal of its indices.
///
/// Panics if the length is not a power of two.
pub fn bit_reverse_permute<T>(data: &mut [T]) {
    let n = data.len();
    assert!(n.is_power_of_two(), "length {n} must be a power of two");
    let m = n.trailing_zeros();
    for i in 0..n {
        let j = bit_reverse(i, m);
        if i < j {
            data.swap(i, j);
        }
    }
}

/// Applies the raw butterfly network in place: for every stage `s`, each pair
/// of positions at distance `2^s` is replaced by `(a ^ b, b)`.
///
/// No bit-reversal is applied; over GF(2) the map is its own inverse. The
/// full encoder is this transform composed with [`bit_reverse_permute`].
///
/// Panics if the length is not a power of two.
pub fn butterfly_transform(bits: &mut [Bit]) {
    let n = bits.len();
    assert!(n.is_power_of_two(), "length {n} must be a power of two");
    let mut stride = 1;
    while stride < n {
        for block in (0..n).step_by(2 * stride) {
            for j in 0..stride {
                bits[block + j] ^= bits[block + j + stride];
            }
        }
        stride *= 2;
    }
}

/// Bhattacharyya parameters of the `n` synthesized bit channels, in natural
/// input order, starting from the raw-channel parameter `z0`.
///
/// One level of the recursion maps a parameter `z` to the pair
/// `(2z - z^2, z^2)`; the first child is the degraded channel, the second the
/// upgraded one. Index bits are consumed most-significant first, so entry `i`
/// of the result corresponds to input position `i` in natural order.
pub fn bhattacharyya_parameters(n: usize, z0: f64) -> Vec<f64> {
    assert!(n.is_power_of_two() && n >= 1);
    let mut zs = vec![z0];
    while zs.len() < n {
        let mut next = Vec::with_capacity(zs.len() * 2);
        for &z in &zs {
            next.push(2.0 * z - z * z);
            next.push(z * z);
        }
        zs = next;
    }
    zs
}

/// A polar code: length, frozen mask and construction metadata.
///
/// `frozen[i] == true` means input position `i` (natural order) is frozen to
/// zero; the decoder forces those positions regardless of the soft values.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCode {
    n: usize,
    m: u32,
    k: usize,
    frozen: Vec<bool>,
    design_snr_db: f64,
}

impl PolarCode {
    /// Builds an `(n, k)` code with the Bhattacharyya-parameter heuristic.
    ///
    /// The raw-channel parameter is `z0 = exp(-1/(2 sigma^2))` with `sigma`
    /// taken from `design_snr_db` (Eb/N0) at rate `k/n`. The `k` positions
    /// with the smallest parameters carry information; on ties the lower
    /// natural index is frozen.
    pub fn construct(n: usize, k: usize, design_snr_db: f64) -> Result<Self, CodeError> {
        if !n.is_power_of_two() || n < 2 {
            return Err(CodeError::InvalidLength(n));
        }
        if k == 0 || k > n {
            return Err(CodeError::InvalidInfoCount { k, n });
        }
        let rate = k as f64 / n as f64;
        let sigma = channel::ebn0_to_sigma(design_snr_db, rate)?;
        let z0 = (-1.0 / (2.0 * sigma * sigma)).exp();
        let z = bhattacharyya_parameters(n, z0);

        // Ascending reliability cost; ties prefer the higher index for
        // information so the lower natural index ends up frozen.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| z[a].partial_cmp(&z[b]).unwrap().then(b.cmp(&a)));

        let mut frozen = vec![true; n];
        for &idx in order.iter().take(k) {
            frozen[idx] = false;
        }
        Ok(Self {
            n,
            m: n.trailing_zeros(),
            k,
            frozen,
            design_snr_db,
        })
    }

    /// Wraps an explicit frozen mask (`true` = frozen), natural index order.
    ///
    /// Unlike [`PolarCode::construct`] this accepts `k = 0` (every position
    /// frozen), which is occasionally useful as a degenerate test code.
    pub fn from_frozen_mask(frozen: Vec<bool>, design_snr_db: f64) -> Result<Self, CodeError> {
        let n = frozen.len();
        if !n.is_power_of_two() || n < 2 {
            return Err(CodeError::InvalidLength(n));
        }
        let k = frozen.iter().filter(|&&f| !f).count();
        Ok(Self {
            n,
            m: n.trailing_zeros(),
            k,
            frozen,
            design_snr_db,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// log2 of the code length.
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn design_snr_db(&self) -> f64 {
        self.design_snr_db
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    /// Information positions in increasing natural order.
    pub fn info_positions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&i| !self.frozen[i])
    }

    /// Scatters `k` information bits into a full input word, frozen
    /// positions zero.
    pub fn info_to_input(&self, info: &[Bit]) -> Result<Vec<Bit>, CodeError> {
        if info.len() != self.k {
            return Err(CodeError::LengthMismatch {
                expected: self.k,
                got: info.len(),
            });
        }
        let mut u = vec![0u8; self.n];
        for (pos, &b) in self.info_positions().zip(info) {
            u[pos] = b;
        }
        Ok(u)
    }

    /// Encodes a full input word (natural order) into a codeword.
    ///
    /// The input is bit-reverse permuted and pushed through the butterfly
    /// network; equivalently `c = bitrev(u) * F^{(x)m}` over GF(2). Nonzero
    /// frozen positions are rejected since they signal that the caller and
    /// the construction disagree about the mask.
    pub fn encode(&self, u: &[Bit]) -> Result<Vec<Bit>, CodeError> {
        if u.len() != self.n {
            return Err(CodeError::LengthMismatch {
                expected: self.n,
                got: u.len(),
            });
        }
        for (i, &b) in u.iter().enumerate() {
            if b > 1 {
                return Err(CodeError::NonBinary(i));
            }
            if self.frozen[i] && b != 0 {
                return Err(CodeError::FrozenBitSet(i));
            }
        }
        let mut x = u.to_vec();
        bit_reverse_permute(&mut x);
        butterfly_transform(&mut x);
        Ok(x)
    }

    /// Writes the frozen mask as a single line of `n` characters over
    /// `{0,1}` ('1' = frozen), natural index order, newline-terminated.
    pub fn save_mask<P: AsRef<Path>>(&self, path: P) -> Result<(), CodeError> {
        let mut out = String::with_capacity(self.n + 1);
        for &f in &self.frozen {
            out.push(if f { '1' } else { '0' });
        }
        out.push('\n');
        let mut file = fs::File::create(path)?;
        file.write_all(out.as_bytes())?;
        Ok(())
    }

    /// Loads a frozen mask written by [`PolarCode::save_mask`].
    ///
    /// The mask file does not record the design SNR, so the caller supplies
    /// whatever value it wants stored as metadata.
    pub fn load_mask<P: AsRef<Path>>(path: P, design_snr_db: f64) -> Result<Self, CodeError> {
        let text = fs::read_to_string(path)?;
        let line = text.trim_end_matches(['\n', '\r']);
        if line.is_empty() {
            return Err(CodeError::BadMask("empty file".into()));
        }
        let mut frozen = Vec::with_capacity(line.len());
        for (i, ch) in line.chars().enumerate() {
            match ch {
                '0' => frozen.push(false),
                '1' => frozen.push(true),
                other => {
                    return Err(CodeError::BadMask(format!(
                        "character {other:?} at index {i}"
                    )))
                }
            }
        }
        Self::from_frozen_mask(frozen, design_snr_db)
    }
}
