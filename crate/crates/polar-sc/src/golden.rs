//! Reference successive-cancellation decoders used as oracles: exact
//! likelihood-ratio domain, exact LLR domain, min-sum LLR domain, and a
//! quantized min-sum variant running on the sign-magnitude PE arithmetic.
//!
//! All four share one recursion over the decoding graph. A block of size
//! `2^(l+1)` activates stage `l` twice: an `f` pass feeding the left
//! half-block and, once the left half is decoded, a `g` pass conditioned on
//! the re-encoded left half (the partial sums). Channel values pair up as
//! adjacent positions, matching the bit-reversed input ordering of the
//! encoder.

use std::collections::HashMap;

use thiserror::Error;

use crate::code::{bit_reverse, Bit, PolarCode};
use crate::fixedpoint::{pe_f, pe_g, QLlr};

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("input length {got} does not match code length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("likelihood ratios must be finite and nonnegative, got {0}")]
    InvalidLr(f64),
    #[error("LLR values must be finite, got {0}")]
    InvalidLlr(f64),
    #[error("f is undefined for a likelihood-ratio pair summing to zero")]
    DegenerateLrPair,
    #[error("division by a zero likelihood ratio in g")]
    ZeroLrDivisor,
    #[error("the exact LR decoder supports n <= {max}, got n = {n}")]
    UnsupportedLength { n: usize, max: usize },
}

/// Decoder flavor selector. `QuantMinsum` carries the sign-magnitude width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderVariant {
    LrExact,
    LlrExact,
    LlrMinsum,
    QuantMinsum(u8),
}

impl DecoderVariant {
    pub fn name(self) -> &'static str {
        match self {
            DecoderVariant::LrExact => "lr",
            DecoderVariant::LlrExact => "llr",
            DecoderVariant::LlrMinsum => "minsum",
            DecoderVariant::QuantMinsum(_) => "quant",
        }
    }

    /// Quantization width, 0 for the floating-point variants.
    pub fn q(self) -> u8 {
        match self {
            DecoderVariant::QuantMinsum(q) => q,
            _ => 0,
        }
    }
}

/// Exact LR decoders are only trusted up to this block length; beyond it,
/// products of likelihood ratios drift out of the comfortable f64 range.
pub const LR_EXACT_MAX_N: usize = 64;

// Cap applied inside the total LR ops so that intermediate products stay
// finite; squaring the cap still fits in f64.
const LR_CAP: f64 = 1e150;

/// f in the likelihood-ratio domain: `(1 + ab) / (a + b)`.
///
/// The all-zero pair is rejected here; the decode path substitutes the
/// maximal-uncertainty value 1 instead (see [`LrDomain`]).
pub fn f_lr(a: f64, b: f64) -> Result<f64, DecodeError> {
    for v in [a, b] {
        if !v.is_finite() || v < 0.0 {
            return Err(DecodeError::InvalidLr(v));
        }
    }
    if a + b == 0.0 {
        return Err(DecodeError::DegenerateLrPair);
    }
    Ok((1.0 + a * b) / (a + b))
}

/// g in the likelihood-ratio domain: `a * b` when the partial sum is 0,
/// `b / a` when it is 1.
pub fn g_lr(a: f64, b: f64, us: Bit) -> Result<f64, DecodeError> {
    for v in [a, b] {
        if !v.is_finite() || v < 0.0 {
            return Err(DecodeError::InvalidLr(v));
        }
    }
    if us == 1 {
        if a == 0.0 {
            return Err(DecodeError::ZeroLrDivisor);
        }
        Ok(b / a)
    } else {
        Ok(a * b)
    }
}

fn f_lr_total(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        return 1.0;
    }
    ((1.0 + a * b) / (a + b)).clamp(1.0 / LR_CAP, LR_CAP)
}

fn g_lr_total(a: f64, b: f64, us: Bit) -> f64 {
    let v = if us == 1 {
        b / a.max(f64::MIN_POSITIVE)
    } else {
        a * b
    };
    v.clamp(1.0 / LR_CAP, LR_CAP)
}

/// Exact f in the LLR domain: `2 atanh(tanh(La/2) tanh(Lb/2))`.
///
/// The tanh product is clamped just inside (-1, 1) so the result stays
/// finite for saturated inputs; the error introduced is far below
/// simulation noise.
pub fn f_llr_exact(la: f64, lb: f64) -> f64 {
    const EPS: f64 = 1e-12;
    let t = ((la / 2.0).tanh() * (lb / 2.0).tanh()).clamp(-(1.0 - EPS), 1.0 - EPS);
    2.0 * t.atanh()
}

/// Min-sum approximation of f: `sign(La) sign(Lb) min(|La|, |Lb|)`, with
/// the sign of zero taken as positive.
pub fn f_minsum(la: f64, lb: f64) -> f64 {
    let negative = (la < 0.0) != (lb < 0.0);
    let mag = la.abs().min(lb.abs());
    if negative {
        -mag
    } else {
        mag
    }
}

/// g in the LLR domain: `La + Lb` or `Lb - La` selected by the partial sum.
pub fn g_llr(la: f64, lb: f64, us: Bit) -> f64 {
    if us == 1 {
        lb - la
    } else {
        la + lb
    }
}

/// Hard decision in the LR domain: 0 when the ratio is at least 1.
pub fn decision_lr(lr: f64) -> Bit {
    u8::from(lr < 1.0)
}

/// Hard decision in the LLR domain: 0 when the value is nonnegative
/// (including negative zero).
pub fn decision_llr(llr: f64) -> Bit {
    u8::from(llr < 0.0)
}

/// One soft-value domain: the f/g pair plus the hard-decision rule.
pub trait ScDomain {
    type Value: Copy + Default + std::fmt::Debug;

    fn f(&self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn g(&self, a: Self::Value, b: Self::Value, us: Bit) -> Self::Value;
    fn decide(&self, v: Self::Value) -> Bit;

    /// Largest supported block length, if restricted.
    fn max_len(&self) -> Option<usize> {
        None
    }

    /// Per-value input validation.
    fn check_input(&self, _v: Self::Value) -> Result<(), DecodeError> {
        Ok(())
    }
}

/// Exact likelihood-ratio domain (supported up to [`LR_EXACT_MAX_N`]).
pub struct LrDomain;

impl ScDomain for LrDomain {
    type Value = f64;

    fn f(&self, a: f64, b: f64) -> f64 {
        f_lr_total(a, b)
    }

    fn g(&self, a: f64, b: f64, us: Bit) -> f64 {
        g_lr_total(a, b, us)
    }

    fn decide(&self, v: f64) -> Bit {
        decision_lr(v)
    }

    fn max_len(&self) -> Option<usize> {
        Some(LR_EXACT_MAX_N)
    }

    fn check_input(&self, v: f64) -> Result<(), DecodeError> {
        if !v.is_finite() || v < 0.0 {
            return Err(DecodeError::InvalidLr(v));
        }
        Ok(())
    }
}

/// Exact LLR domain.
pub struct LlrDomain;

impl ScDomain for LlrDomain {
    type Value = f64;

    fn f(&self, a: f64, b: f64) -> f64 {
        f_llr_exact(a, b)
    }

    fn g(&self, a: f64, b: f64, us: Bit) -> f64 {
        g_llr(a, b, us)
    }

    fn decide(&self, v: f64) -> Bit {
        decision_llr(v)
    }

    fn check_input(&self, v: f64) -> Result<(), DecodeError> {
        if !v.is_finite() {
            return Err(DecodeError::InvalidLlr(v));
        }
        Ok(())
    }
}

/// Min-sum LLR domain.
pub struct MinsumDomain;

impl ScDomain for MinsumDomain {
    type Value = f64;

    fn f(&self, a: f64, b: f64) -> f64 {
        f_minsum(a, b)
    }

    fn g(&self, a: f64, b: f64, us: Bit) -> f64 {
        g_llr(a, b, us)
    }

    fn decide(&self, v: f64) -> Bit {
        decision_llr(v)
    }

    fn check_input(&self, v: f64) -> Result<(), DecodeError> {
        if !v.is_finite() {
            return Err(DecodeError::InvalidLlr(v));
        }
        Ok(())
    }
}

/// Quantized min-sum domain on sign-magnitude values, the software twin of
/// the hardware processing element.
pub struct QuantDomain {
    pub q: u8,
}

impl ScDomain for QuantDomain {
    type Value = QLlr;

    fn f(&self, a: QLlr, b: QLlr) -> QLlr {
        pe_f(a, b)
    }

    fn g(&self, a: QLlr, b: QLlr, us: Bit) -> QLlr {
        pe_g(a, b, us, self.q)
    }

    fn decide(&self, v: QLlr) -> Bit {
        v.decision()
    }
}

/// Decoder output: estimated input word plus optional per-node traces.
///
/// `node_trace` maps a graph node `(stage l, node j)` to the soft value it
/// produced; every node fires exactly once per frame. `partial_sum_trace`
/// maps each g node to the partial sum it consumed. `stage_activations[l]`
/// counts how many times stage `l` fired.
#[derive(Debug, Clone)]
pub struct DecodeResult<V> {
    pub u_hat: Vec<Bit>,
    pub node_trace: Option<HashMap<(u32, usize), V>>,
    pub partial_sum_trace: Option<HashMap<(u32, usize), Bit>>,
    pub stage_activations: Vec<u64>,
}

/// Wire index of a graph node.
///
/// Stage `l` is carved into sub-blocks `s` of `2^(l+1)` input bits; within a
/// sub-block the pass is either the f phase or the g phase and `p` is the
/// processing-element slot. In the drawn graph this node sits on wire
/// `bitrev(s) + phase * 2^(m-1-l) + p * 2^(m-l)`.
pub fn node_index(m: u32, l: u32, s: usize, g_phase: bool, p: usize) -> usize {
    debug_assert!(l < m);
    debug_assert!(s < (1usize << (m - 1 - l)));
    debug_assert!(p < (1usize << l));
    bit_reverse(s, m - 1 - l) + ((g_phase as usize) << (m - 1 - l)) + (p << (m - l))
}

struct TraceState<V> {
    node: HashMap<(u32, usize), V>,
    partial_sum: HashMap<(u32, usize), Bit>,
}

/// Runs successive cancellation over `channel_values` with the chosen
/// domain. `trace` enables the per-node maps in the result.
pub fn decode_sc<D: ScDomain>(
    domain: &D,
    channel_values: &[D::Value],
    code: &PolarCode,
    trace: bool,
) -> Result<DecodeResult<D::Value>, DecodeError> {
    let n = code.n();
    if channel_values.len() != n {
        return Err(DecodeError::LengthMismatch {
            expected: n,
            got: channel_values.len(),
        });
    }
    if let Some(max) = domain.max_len() {
        if n > max {
            return Err(DecodeError::UnsupportedLength { n, max });
        }
    }
    for &v in channel_values {
        domain.check_input(v)?;
    }

    let m = code.m();
    // Scratch per recursion depth: soft values for the half-block and the
    // re-encoded bits of both halves.
    let mut arena: Vec<(Vec<D::Value>, Vec<Bit>)> = (0..m)
        .map(|d| {
            (
                vec![D::Value::default(); n >> (d + 1)],
                vec![0u8; n >> d],
            )
        })
        .collect();
    let mut u_hat = vec![0u8; n];
    let mut beta_root = vec![0u8; n];
    let mut stage_activations = vec![0u64; m as usize];
    let mut tracer = trace.then(|| TraceState {
        node: HashMap::new(),
        partial_sum: HashMap::new(),
    });

    decode_block(
        domain,
        m,
        channel_values,
        code.frozen_mask(),
        &mut u_hat,
        &mut beta_root,
        &mut arena,
        0,
        &mut stage_activations,
        &mut tracer,
    );

    Ok(DecodeResult {
        u_hat,
        node_trace: tracer.as_mut().map(|t| std::mem::take(&mut t.node)),
        partial_sum_trace: tracer.map(|t| t.partial_sum),
        stage_activations,
    })
}

#[allow(clippy::too_many_arguments)]
fn decode_block<D: ScDomain>(
    domain: &D,
    m: u32,
    alpha: &[D::Value],
    frozen: &[bool],
    u_out: &mut [Bit],
    beta_out: &mut [Bit],
    arena: &mut [(Vec<D::Value>, Vec<Bit>)],
    u_base: usize,
    stage_activations: &mut [u64],
    tracer: &mut Option<TraceState<D::Value>>,
) {
    let size = alpha.len();
    if size == 1 {
        let bit = if frozen[0] { 0 } else { domain.decide(alpha[0]) };
        u_out[0] = bit;
        beta_out[0] = bit;
        return;
    }

    let half = size / 2;
    let l = size.trailing_zeros() - 1;
    let s = u_base >> (l + 1);
    let ((child_alpha, betas), rest) = arena.split_first_mut().unwrap();

    // f pass feeding the left half-block.
    stage_activations[l as usize] += 1;
    for p in 0..half {
        let v = domain.f(alpha[2 * p], alpha[2 * p + 1]);
        child_alpha[p] = v;
        if let Some(t) = tracer {
            t.node.insert((l, node_index(m, l, s, false, p)), v);
        }
    }
    let (beta_left, beta_right) = betas.split_at_mut(half);
    decode_block(
        domain,
        m,
        child_alpha,
        &frozen[..half],
        &mut u_out[..half],
        beta_left,
        rest,
        u_base,
        stage_activations,
        tracer,
    );

    // g pass conditioned on the re-encoded left half.
    stage_activations[l as usize] += 1;
    for p in 0..half {
        let us = beta_left[p];
        let v = domain.g(alpha[2 * p], alpha[2 * p + 1], us);
        child_alpha[p] = v;
        if let Some(t) = tracer {
            let j = node_index(m, l, s, true, p);
            t.partial_sum.insert((l, j), us);
            t.node.insert((l, j), v);
        }
    }
    decode_block(
        domain,
        m,
        child_alpha,
        &frozen[half..],
        &mut u_out[half..],
        beta_right,
        rest,
        u_base + half,
        stage_activations,
        tracer,
    );

    // Re-encode this block: interleave the kernel outputs of the halves.
    for p in 0..half {
        beta_out[2 * p] = beta_left[p] ^ beta_right[p];
        beta_out[2 * p + 1] = beta_right[p];
    }
}

/// Exact-LR decode, supported for `n <= 64`.
pub fn decode_lr(
    channel_lrs: &[f64],
    code: &PolarCode,
    trace: bool,
) -> Result<DecodeResult<f64>, DecodeError> {
    decode_sc(&LrDomain, channel_lrs, code, trace)
}

/// Exact LLR decode.
pub fn decode_llr(
    channel_llrs: &[f64],
    code: &PolarCode,
    trace: bool,
) -> Result<DecodeResult<f64>, DecodeError> {
    decode_sc(&LlrDomain, channel_llrs, code, trace)
}

/// Min-sum LLR decode.
pub fn decode_minsum(
    channel_llrs: &[f64],
    code: &PolarCode,
    trace: bool,
) -> Result<DecodeResult<f64>, DecodeError> {
    decode_sc(&MinsumDomain, channel_llrs, code, trace)
}

/// Quantized min-sum decode on sign-magnitude values.
pub fn decode_quant(
    channel: &[QLlr],
    code: &PolarCode,
    q: u8,
    trace: bool,
) -> Result<DecodeResult<QLlr>, DecodeError> {
    decode_sc(&QuantDomain { q }, channel, code, trace)
}
