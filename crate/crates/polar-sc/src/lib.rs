//! Polar-code toolkit built around the successive-cancellation (SC) line
//! decoder architecture.
//!
//! The crate has three layers:
//!
//! * algorithm: [`code`] (construction, bit reversal, butterfly encoder) and
//!   [`golden`] (reference SC decoders in the LR, LLR and min-sum domains);
//! * hardware model: [`fixedpoint`] (q-bit sign-magnitude processing-element
//!   arithmetic and the channel quantizer) and [`line`] (cycle-accurate
//!   simulator of the line architecture: n/2 PEs, a 2n-1 cell LLR register
//!   bank, n-1 partial-sum cells and the stage/bit control machinery);
//! * measurement: [`channel`] (BPSK over AWGN with reproducible per-frame
//!   noise streams), [`campaign`] (Monte-Carlo FER/BER sweeps with CSV
//!   output) and [`complexity`] (closed-form hardware cost and throughput
//!   estimates).
//!
//! The line simulator is bit-exact against the quantized min-sum golden
//! decoder; the test suite treats that equivalence as the ground truth for
//! the control and memory-map logic.

pub mod campaign;
pub mod channel;
pub mod code;
pub mod complexity;
pub mod fixedpoint;
pub mod golden;
pub mod line;

pub use campaign::{run_campaign, CampaignConfig, CampaignVariant, FerRecord};
pub use channel::ChannelSpec;
pub use code::{bit_reverse, butterfly_transform, Bit, PolarCode};
pub use complexity::{complexity_report, throughput_estimate, ComplexityReport, UnitCosts};
pub use fixedpoint::{pe_f, pe_g, quantize_channel, QLlr, QuantSpec};
pub use golden::{decode_sc, DecodeResult, DecoderVariant};
pub use line::{ffs_star, selector_fg, CycleRecord, LineMachine, PeFunc};
