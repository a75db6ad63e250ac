//! Exhaustive burst-placement sweeps, the interchange descriptor that feeds
//! them, and the squeezed-deadline replay.
//!
//! A sweep fixes a receiver and walks every burst offset through one period
//! and every burst length up to the contract, decoding each scenario twice:
//! once with the receiver's own windowed decoder and once with the
//! exhaustive-elimination oracle. Emitting both makes the gap visible —
//! structural recovery times are honest upper bounds, the oracle's are
//! exact minima — and a scenario where the structural decoder misses a
//! deadline the oracle meets would be a decoder bug, not a code bug.

use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ErasurePattern;
use crate::embed::{decode_user1, decode_user2, DescoCode};
use crate::field::{Field, FieldElement};
use crate::musco::{
    ccsco_decode_user, expanded_decode_user1, expanded_decode_user2, iasco_decode_user1,
    iasco_decode_user2, CcscoCode, ExpandedCode, IascoCode,
};
use crate::oracle::oracle_decode;
use crate::rate::Rate;
use crate::report::DecodeReport;
use crate::stream::{Cell, ChannelSymbol, SourceStream, StreamCode};
use crate::{converse_rate_bound, desco_construct, Error};

/// Any of the constructions, as one serializable descriptor — the
/// interchange format between constructing a code and sweeping it.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnyCode {
    Desco(DescoCode),
    Ccsco(CcscoCode),
    Iasco(IascoCode),
    Expanded(ExpandedCode),
}

impl AnyCode {
    pub fn num_users(&self) -> usize {
        match self {
            AnyCode::Ccsco(c) => c.num_users(),
            _ => 2,
        }
    }

    pub fn is_certified(&self) -> bool {
        match self {
            AnyCode::Desco(c) => c.is_certified(),
            AnyCode::Ccsco(c) => c.is_certified(),
            AnyCode::Iasco(c) => c.is_certified(),
            AnyCode::Expanded(c) => c.is_certified(),
        }
    }

    /// Receiver `user`'s contract: (burst length, repair deadline).
    pub fn contract(&self, user: usize) -> Result<(usize, i64), Error> {
        if user >= self.num_users() {
            return Err(Error::InvalidParameters(format!(
                "receiver {user} out of range ({} receivers)",
                self.num_users()
            )));
        }
        Ok(match (self, user) {
            (AnyCode::Desco(c), 0) => (c.user1_burst(), c.user1_delay()),
            (AnyCode::Desco(c), _) => (c.user2_burst(), c.t2_star()),
            (AnyCode::Iasco(c), 0) => (c.user1_burst(), c.user1_delay()),
            (AnyCode::Iasco(c), _) => (c.user2_burst(), c.user2_delay()),
            (AnyCode::Expanded(c), 0) => (c.user1_burst(), c.user1_delay()),
            (AnyCode::Expanded(c), _) => (c.user2_burst(), c.user2_delay()),
            (AnyCode::Ccsco(c), u) => c.contract(u),
        })
    }

    /// Burst offsets for receiver `user` repeat (modulo the stream edge)
    /// beyond this span.
    pub fn period(&self, user: usize) -> Result<i64, Error> {
        self.contract(user)?; // range check
        Ok(match self {
            AnyCode::Desco(c) => c.period(),
            AnyCode::Ccsco(c) => c.period(user),
            AnyCode::Iasco(c) => c.period(),
            AnyCode::Expanded(c) => c.period(),
        })
    }

    /// Publication lag of the slowest embedded stream: parities referencing
    /// a burst keep arriving this long past its repair deadline, so default
    /// sweep horizons extend this far beyond it.
    pub fn lag(&self) -> i64 {
        match self {
            AnyCode::Desco(c) => c.delta(),
            AnyCode::Ccsco(_) => 0,
            AnyCode::Iasco(c) => c.shift(),
            AnyCode::Expanded(c) => {
                (c.inner().delta() + c.sigma() as i64 - 1).div_euclid(c.sigma() as i64)
            }
        }
    }

    /// Decode one burst with receiver `user`'s own windowed decoder, holding
    /// the result to its contract.
    pub fn structural_decode(
        &self,
        user: usize,
        received: &[Option<ChannelSymbol>],
        pattern: &ErasurePattern,
    ) -> Result<DecodeReport, Error> {
        if user >= self.num_users() {
            return Err(Error::InvalidParameters(format!(
                "receiver {user} out of range ({} receivers)",
                self.num_users()
            )));
        }
        match (self, user) {
            (AnyCode::Desco(c), 0) => decode_user1(c, received, pattern),
            (AnyCode::Desco(c), _) => decode_user2(c, received, pattern),
            (AnyCode::Iasco(c), 0) => iasco_decode_user1(c, received, pattern),
            (AnyCode::Iasco(c), _) => iasco_decode_user2(c, received, pattern),
            (AnyCode::Expanded(c), 0) => expanded_decode_user1(c, received, pattern),
            (AnyCode::Expanded(c), _) => expanded_decode_user2(c, received, pattern),
            (AnyCode::Ccsco(c), u) => ccsco_decode_user(c, u, received, pattern),
        }
    }
}

impl StreamCode for AnyCode {
    fn field(&self) -> Field {
        match self {
            AnyCode::Desco(c) => c.field(),
            AnyCode::Ccsco(c) => c.field(),
            AnyCode::Iasco(c) => c.field(),
            AnyCode::Expanded(c) => c.field(),
        }
    }

    fn source_rows(&self) -> usize {
        match self {
            AnyCode::Desco(c) => c.source_rows(),
            AnyCode::Ccsco(c) => c.source_rows(),
            AnyCode::Iasco(c) => c.source_rows(),
            AnyCode::Expanded(c) => c.source_rows(),
        }
    }

    fn parity_rows(&self) -> usize {
        match self {
            AnyCode::Desco(c) => c.parity_rows(),
            AnyCode::Ccsco(c) => c.parity_rows(),
            AnyCode::Iasco(c) => c.parity_rows(),
            AnyCode::Expanded(c) => c.parity_rows(),
        }
    }

    fn parity_terms(&self, t: i64, k: usize) -> Vec<(Cell, FieldElement)> {
        match self {
            AnyCode::Desco(c) => c.parity_terms(t, k),
            AnyCode::Ccsco(c) => c.parity_terms(t, k),
            AnyCode::Iasco(c) => c.parity_terms(t, k),
            AnyCode::Expanded(c) => c.parity_terms(t, k),
        }
    }

    fn lookback(&self) -> i64 {
        match self {
            AnyCode::Desco(c) => c.lookback(),
            AnyCode::Ccsco(c) => c.lookback(),
            AnyCode::Iasco(c) => c.lookback(),
            AnyCode::Expanded(c) => c.lookback(),
        }
    }
}

/// Which decoder judged a sweep row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    /// The receiver's own windowed decoder.
    Structural,
    /// Exhaustive elimination over everything received.
    Oracle,
}

/// One erased cell's outcome in one swept scenario, under one decoder.
/// `recovered_at`/`delay` are empty when the decoder never determined the
/// cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    pub offset: i64,
    pub burst_len: usize,
    pub symbol_time: i64,
    pub sub_row: usize,
    pub recovered_at: Option<i64>,
    pub delay: Option<i64>,
    pub decoder: Decoder,
}

/// Everything one sweep produced.
#[derive(Clone, Debug)]
pub struct SweepOutcome {
    /// One row per (scenario, decoder, erased cell), ordered by offset,
    /// then burst length, then decoder (structural first), then cell.
    pub rows: Vec<SweepRow>,
    /// Worst delay the structural decoder achieved, over cells it
    /// recovered.
    pub worst_structural: Option<i64>,
    /// Worst delay over the oracle's recoveries.
    pub worst_oracle: Option<i64>,
    /// Whether the structural decoder met the receiver's deadline for every
    /// cell of every scenario.
    pub all_within_contract: bool,
}

/// Decode every scenario of receiver `user`: burst offsets `[0, period)`,
/// burst lengths `[1, contract]`, on the zero stream (recovery times are
/// value-independent). Each scenario's horizon defaults to just past the
/// last parity that can reference its burst; an explicit `horizon` applies
/// to every scenario and must cover the largest one.
pub fn sweep(code: &AnyCode, user: usize, horizon: Option<i64>) -> Result<SweepOutcome, Error> {
    let (burst, delay) = code.contract(user)?;
    let period = code.period(user)?;
    let lag = code.lag();
    if let Some(h) = horizon {
        let need = period - 1 + burst as i64 + delay;
        if h < need {
            return Err(Error::InvalidParameters(format!(
                "horizon {h} cannot judge a burst at offset {} against delay {delay}; \
                 need at least {need}",
                period - 1
            )));
        }
    }
    let per_offset: Vec<(Vec<SweepRow>, bool)> = (0..period)
        .into_par_iter()
        .map(|j| -> Result<(Vec<SweepRow>, bool), Error> {
            let mut rows = Vec::new();
            let mut ok = true;
            for blen in 1..=burst {
                let h = horizon.unwrap_or(j + blen as i64 + delay + lag + 1);
                let stream = SourceStream::zeros(code.field(), code.source_rows(), h as usize);
                let sent = code.encode(&stream);
                let pattern = ErasurePattern::single_burst(j, blen, h)?;
                let received = pattern.apply(&sent);
                let structural = code.structural_decode(user, &received, &pattern)?;
                ok &= structural.success();
                let oracle = oracle_decode(code, &received, &pattern);
                for (decoder, report) in [
                    (Decoder::Structural, &structural),
                    (Decoder::Oracle, &oracle),
                ] {
                    for tau in pattern.erased() {
                        for r in 0..code.source_rows() {
                            let at = report.recovered_at.get(&(tau, r)).copied();
                            rows.push(SweepRow {
                                offset: j,
                                burst_len: blen,
                                symbol_time: tau,
                                sub_row: r,
                                recovered_at: at,
                                delay: at.map(|a| a - tau),
                                decoder,
                            });
                        }
                    }
                }
            }
            Ok((rows, ok))
        })
        .collect::<Result<_, Error>>()?;

    let all_within_contract = per_offset.iter().all(|(_, ok)| *ok);
    let rows: Vec<SweepRow> = per_offset.into_iter().flat_map(|(rows, _)| rows).collect();
    let worst = |which: Decoder| {
        rows.iter()
            .filter(|r| r.decoder == which)
            .filter_map(|r| r.delay)
            .max()
    };
    Ok(SweepOutcome {
        worst_structural: worst(Decoder::Structural),
        worst_oracle: worst(Decoder::Oracle),
        all_within_contract,
        rows,
    })
}

/// Write sweep rows as CSV: a fixed header, one line per row, empty fields
/// for cells a decoder never recovered. Output is byte-deterministic for a
/// given row list.
pub fn write_sweep_csv<W: io::Write>(out: W, rows: &[SweepRow]) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record([
        "offset",
        "burst_len",
        "symbol_time",
        "sub_row",
        "recovered_at",
        "delay",
        "decoder",
    ])
    .map_err(into_io)?;
    for row in rows {
        w.serialize(row).map_err(into_io)?;
    }
    w.flush()
}

fn into_io(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Outcome of squeezing the long deadline below `αT + B` and replaying the
/// adversarial burst pattern against the best certified code.
#[derive(Clone, Debug)]
pub struct ConverseOutcome {
    /// The deadline under test.
    pub t2: i64,
    /// Rate ceiling for any scheme honoring `(B, ·)` / `(αB, t2)`.
    pub bound: Rate,
    /// Whether the full-rate family can meet `t2` at all (`t2 >= αT + B`).
    pub feasible: bool,
    /// Periods of the adversarial pattern in the final replay.
    pub periods: usize,
    /// Erased cells whose in-horizon deadline passed unrecovered:
    /// `(cell, recovery slot if ever)`.
    pub misses: Vec<(Cell, Option<i64>)>,
    /// Worst delay among cells the oracle did recover.
    pub worst_delay: Option<i64>,
}

/// Replay bursts of `αB` every `(α−1)B + t2` slots against a certified
/// `(B, T, α)` code and ask the oracle whether every erased cell is
/// recoverable within `t2`.
///
/// At `t2 >= αT + B` the replay comes out clean; below it the pattern
/// defeats even exhaustive elimination, witnessing that the deadline pair
/// cannot be served at rate `T/(T+B)` — the regime where
/// [`converse_rate_bound`] bites. The replay starts at 4 periods and
/// doubles to 32 while no miss appears, so a clean result is not an
/// artifact of a short horizon. Only cells whose deadline falls inside the
/// horizon are judged; edge cells never count as misses.
pub fn converse_experiment(
    field: Field,
    b: usize,
    t: usize,
    alpha: usize,
    t2: i64,
) -> Result<ConverseOutcome, Error> {
    let bound = converse_rate_bound(b, t2, alpha)?;
    let code = desco_construct(field, b, t, alpha)?;
    let feasible = t2 >= code.t2_star();
    // t2 >= B (checked by the bound), so each period has receive room.
    let period = (alpha as i64 - 1) * b as i64 + t2;
    let per_period = alpha * b;
    let mut periods = 4usize;
    loop {
        let horizon = period * periods as i64 + t2 + 1;
        let stream = SourceStream::zeros(field, code.t(), horizon as usize);
        let sent = code.encode(&stream);
        let pattern = ErasurePattern::periodic_burst(per_period, period, horizon)?;
        let received = pattern.apply(&sent);
        let report = oracle_decode(&code, &received, &pattern);
        let mut misses = Vec::new();
        for tau in pattern.erased() {
            if tau + t2 >= horizon {
                continue;
            }
            for r in 0..code.t() {
                match report.recovered_at.get(&(tau, r)) {
                    Some(&at) if at <= tau + t2 => {}
                    got => misses.push(((tau, r), got.copied())),
                }
            }
        }
        if misses.is_empty() && !feasible && periods < 32 {
            periods *= 2;
            continue;
        }
        return Ok(ConverseOutcome {
            t2,
            bound,
            feasible,
            periods,
            misses,
            worst_delay: report.worst_delay(),
        });
    }
}
