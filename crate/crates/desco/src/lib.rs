//! Streaming erasure codes for burst channels with per-receiver decoding
//! deadlines.
//!
//! The building block is the diagonally-interleaved streaming code: each
//! channel packet carries a slot's source sub-symbols plus parity rows that
//! protect diagonals of earlier sub-symbols, so a receiver can rebuild a
//! length-B burst within a fixed delay T. On top of it sit multicast
//! constructions that serve two deadlines from one parity stream: embedding
//! a second, opposite-slope code into the same parity rows (delay pair
//! (T, αT + B) at the single-user rate), interference-aligned and
//! concatenated variants, and a source-expansion wrapper for unequal row
//! counts.
//!
//! Everything is exhaustively checkable: [`oracle::oracle_decode`] replays a
//! scenario with full Gaussian elimination to find the earliest possible
//! recovery time of every erased sub-symbol, and the `verify_*`/`sweep`
//! entry points certify a code by running every burst placement against its
//! deadline contract.

pub mod channel;
pub mod embed;
pub mod field;
pub mod linalg;
pub mod musco;
pub mod oracle;
pub mod rate;
pub mod report;
pub mod sco;
pub mod stream;
pub mod sweep;

pub use channel::ErasurePattern;
pub use embed::{
    decode_user1, decode_user2, desco_construct, desco_encode, recursive_nonurgent_decode, t2_star,
    verify_desco, DescoCode,
};
pub use field::{Field, FieldElement};
pub use musco::{
    capacity, ccsco_construct, ccsco_decode_user, converse_rate_bound, expanded_decode_user1,
    expanded_decode_user2, expanded_musco_construct, iasco_construct, iasco_decode_user1,
    iasco_decode_user2, iasco_from_tables, source_expand, verify_iasco, CcscoCode, CcscoUser,
    ExpandedCode, IascoCode,
};
pub use oracle::{oracle_decode, oracle_decode_values};
pub use rate::Rate;
pub use report::{DecodeFailure, DecodeReport, TraceStep};
pub use sco::{
    choose_coefficients, diagonal_main, diagonal_opposite, sco_decode_burst, sco_parity,
    single_user_code, verify_code, Orientation, ScoCode,
};
pub use stream::{Cell, ChannelSymbol, SourceStream, StreamCode};
pub use sweep::{
    converse_experiment, sweep, write_sweep_csv, AnyCode, ConverseOutcome, Decoder, SweepOutcome,
    SweepRow,
};

/// Errors surfaced by constructions, verification, and decoding.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Arguments outside the valid domain (zero lengths, out-of-range
    /// bursts, deadlines below the single-user floor, ...).
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// No coefficient assignment in the search family satisfied the
    /// contract.
    #[error("construction failed: {0}")]
    ConstructionFailed(String),

    /// A verification sweep found a scenario where a receiver misses its
    /// deadline.
    #[error("receiver {receiver} not certified: {failure}")]
    NotCertified {
        receiver: u8,
        #[source]
        failure: report::DecodeFailure,
    },

    /// A single decode did not complete.
    #[error("decode failed: {0}")]
    Decode(#[from] report::DecodeFailure),
}
