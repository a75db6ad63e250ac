//! Ground-truth decoding by exhaustive Gaussian elimination.
//!
//! The oracle inserts every received parity equation in arrival order, so a
//! sub-symbol's recorded recovery slot is the earliest slot at which *any*
//! decoder could have computed it. Structured decoders are validated against
//! it: they may schedule equations differently, but they can never beat the
//! oracle, and a certified construction must never miss a deadline the
//! oracle meets.

use std::collections::BTreeMap;

use crate::channel::ErasurePattern;
use crate::linalg::LinearSystem;
use crate::report::DecodeReport;
use crate::stream::{Cell, ChannelSymbol, StreamCode};

/// Insert parity row `k` of slot `t` into `sys` as an equation over the
/// erased cells, substituting received (and pre-stream zero) sub-symbols
/// into the right-hand side. Returns the cells the insertion determined.
///
/// # Panics
/// If slot `t` was not received, or the equation contradicts earlier ones —
/// both indicate a bug in the caller or the code tables, not a channel
/// condition.
pub(crate) fn insert_parity_row<C: StreamCode + ?Sized>(
    sys: &mut LinearSystem<Cell>,
    code: &C,
    received: &[Option<ChannelSymbol>],
    pattern: &ErasurePattern,
    t: i64,
    k: usize,
) -> Vec<(Cell, i64)> {
    let field = code.field();
    let sym = received[t as usize]
        .as_ref()
        .expect("inserting a parity row from an erased slot");
    let mut unknowns: Vec<(Cell, crate::field::FieldElement)> = Vec::new();
    let mut rhs = sym.parity[k];
    for (cell, coeff) in code.parity_terms(t, k) {
        let (ct, cr) = cell;
        if ct >= 0 && pattern.is_erased(ct) {
            unknowns.push((cell, coeff));
        } else if ct >= 0 {
            let value = received[ct as usize]
                .as_ref()
                .expect("non-erased slot missing from received stream")
                .source[cr];
            rhs -= coeff * value;
        }
        // ct < 0: pre-stream cells are zero and contribute nothing.
    }
    if unknowns.is_empty() {
        debug_assert!(rhs.is_zero(), "received parity inconsistent with sources");
        return Vec::new();
    }
    let _ = field;
    sys.add_equation(&unknowns, rhs, t)
        .expect("received parities are consistent by construction")
        .into_iter()
        .map(|(cell, _value, at)| (cell, at))
        .collect()
}

/// Decode by inserting all received parity rows with slots in
/// `[window_start, window_end]`, in slot order. Equations that touch no
/// erased cell are skipped. Returns the report plus the solved system, for
/// callers that want the recovered values as well as the times.
pub(crate) fn ge_decode_system<C: StreamCode + ?Sized>(
    code: &C,
    received: &[Option<ChannelSymbol>],
    pattern: &ErasurePattern,
    window_start: i64,
    window_end: i64,
) -> (DecodeReport, LinearSystem<Cell>) {
    let mut sys: LinearSystem<Cell> = LinearSystem::new(code.field());
    let horizon = received.len() as i64;
    for t in window_start.max(0)..=window_end.min(horizon - 1) {
        if received[t as usize].is_none() {
            continue;
        }
        for k in 0..code.parity_rows() {
            insert_parity_row(&mut sys, code, received, pattern, t, k);
        }
    }
    let recovered_at: BTreeMap<Cell, i64> = sys
        .solved()
        .iter()
        .map(|(&cell, &(_, at))| (cell, at))
        .collect();
    let report = DecodeReport {
        burst: pattern.bursts().first().copied().unwrap_or((0, 0)),
        recovered_at,
        trace: Vec::new(),
        failure: None,
    };
    (report, sys)
}

/// [`ge_decode_system`] without the system.
pub(crate) fn ge_decode<C: StreamCode + ?Sized>(
    code: &C,
    received: &[Option<ChannelSymbol>],
    pattern: &ErasurePattern,
    window_start: i64,
    window_end: i64,
) -> DecodeReport {
    ge_decode_system(code, received, pattern, window_start, window_end).0
}

/// The delay oracle: earliest possible recovery slot of every erased cell,
/// using the full window. Cells absent from the report are information-
/// theoretically unrecoverable from the received symbols.
///
/// The report carries no failure; callers judge the times against whatever
/// deadline they care about.
pub fn oracle_decode<C: StreamCode + ?Sized>(
    code: &C,
    received: &[Option<ChannelSymbol>],
    pattern: &ErasurePattern,
) -> DecodeReport {
    ge_decode(code, received, pattern, 0, received.len() as i64 - 1)
}

/// Like [`oracle_decode`], but also return each recovered cell's value.
pub fn oracle_decode_values<C: StreamCode + ?Sized>(
    code: &C,
    received: &[Option<ChannelSymbol>],
    pattern: &ErasurePattern,
) -> BTreeMap<Cell, (crate::field::FieldElement, i64)> {
    let (_, sys) = ge_decode_system(code, received, pattern, 0, received.len() as i64 - 1);
    sys.solved().clone()
}
