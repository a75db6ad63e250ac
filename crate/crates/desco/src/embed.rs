//! Diversity-embedded streaming codes: one parity stream, two deadlines.
//!
//! A `(B, T, α)` construction embeds two diagonal codes into the same `B`
//! parity rows. The forward code covers the single-user contract — bursts
//! of `B` repaired within `T` — and a backward code with slope `α−1` rides
//! along, delayed by `Δ = T + B` slots: each transmitted parity row is
//! `q[t] = p_fwd[t] + p_bwd[t−Δ]`. A receiver that only ever sees short
//! bursts decodes the forward code directly, because every backward term
//! inside its decoding window predates the burst. A receiver hit by bursts
//! up to `αB` peels the two streams apart and still finishes within
//! `αT + B`, and both ride the same `T/(T+B)`-rate channel stream.

use crate::channel::ErasurePattern;
use crate::field::Field;
use crate::linalg::LinearSystem;
use crate::oracle::{ge_decode, insert_parity_row};
use crate::report::{DecodeFailure, DecodeReport, TraceStep};
use crate::sco::{candidate_tables, reverse_table, Orientation, ScoCode};
use crate::stream::{Cell, ChannelSymbol, SourceStream, StreamCode};
use crate::Error;

/// Worst-case delay of the long-deadline receiver: `αT + B`.
pub fn t2_star(b: usize, t: usize, alpha: usize) -> i64 {
    (alpha * t + b) as i64
}

/// A `(B, T, α)` two-deadline code: forward code `c1`, backward code `c2`
/// embedded at lag `delta`.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "DescoWire", into = "DescoWire")]
pub struct DescoCode {
    c1: ScoCode,
    c2: ScoCode,
    alpha: usize,
    /// Publication lag of the backward stream inside the combined parity.
    delta: i64,
    certified: bool,
}

/// On-disk form: both coefficient tables as raw bit patterns.
/// Deserialization re-validates shape and range but trusts `certified`.
#[derive(serde::Serialize, serde::Deserialize)]
struct DescoWire {
    field_bits: u8,
    b: usize,
    t: usize,
    alpha: usize,
    forward: Vec<Vec<u8>>,
    backward: Vec<Vec<u8>>,
    certified: bool,
}

impl From<DescoCode> for DescoWire {
    fn from(code: DescoCode) -> DescoWire {
        DescoWire {
            field_bits: code.field().bits(),
            b: code.b(),
            t: code.t(),
            alpha: code.alpha,
            forward: crate::sco::table_to_bytes(code.c1.coeffs()),
            backward: crate::sco::table_to_bytes(code.c2.coeffs()),
            certified: code.certified,
        }
    }
}

impl TryFrom<DescoWire> for DescoCode {
    type Error = Error;

    fn try_from(wire: DescoWire) -> Result<DescoCode, Error> {
        let field = crate::sco::field_from_bits(wire.field_bits)?;
        let forward = crate::sco::table_from_bytes(field, &wire.forward)?;
        let backward = crate::sco::table_from_bytes(field, &wire.backward)?;
        let mut code =
            DescoCode::from_tables(field, wire.b, wire.t, wire.alpha, forward, backward)?;
        code.certified = wire.certified;
        Ok(code)
    }
}

impl DescoCode {
    /// Assemble a code from explicit coefficient tables. `forward` weights
    /// the forward diagonals; `backward` weights the backward ones, stored
    /// in the same row-per-parity layout. The result is not certified; see
    /// [`verify_desco`].
    pub fn from_tables(
        field: Field,
        b: usize,
        t: usize,
        alpha: usize,
        forward: Vec<Vec<crate::field::FieldElement>>,
        backward: Vec<Vec<crate::field::FieldElement>>,
    ) -> Result<DescoCode, Error> {
        check_shape(b, t, alpha)?;
        let c1 = ScoCode::new(field, b, t, 1, Orientation::Main, forward)?;
        let c2 = ScoCode::new(field, b, t, alpha - 1, Orientation::Opposite, backward)?;
        Ok(DescoCode {
            c1,
            c2,
            alpha,
            delta: (t + b) as i64,
            certified: false,
        })
    }

    pub fn b(&self) -> usize {
        self.c1.b()
    }

    pub fn t(&self) -> usize {
        self.c1.t()
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// Lag between a backward parity's computation and its transmission.
    pub fn delta(&self) -> i64 {
        self.delta
    }

    pub fn c1(&self) -> &ScoCode {
        &self.c1
    }

    pub fn c2(&self) -> &ScoCode {
        &self.c2
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    /// Longest burst the short-deadline receiver tolerates.
    pub fn user1_burst(&self) -> usize {
        self.b()
    }

    /// Repair deadline of the short-deadline receiver.
    pub fn user1_delay(&self) -> i64 {
        self.c1.delay_contract()
    }

    /// Longest burst the long-deadline receiver tolerates.
    pub fn user2_burst(&self) -> usize {
        self.alpha * self.b()
    }

    /// Repair deadline of the long-deadline receiver: `αT + B`.
    pub fn t2_star(&self) -> i64 {
        t2_star(self.b(), self.t(), self.alpha)
    }

    /// Burst offsets repeat (modulo the stream edge) beyond this span, so
    /// sweeps and certification cover `[0, period)`.
    pub fn period(&self) -> i64 {
        (self.t2_star() + self.delta).max(self.lookback() + 1)
    }
}

fn check_shape(b: usize, t: usize, alpha: usize) -> Result<(), Error> {
    if b == 0 || t < b {
        return Err(Error::InvalidParameters(format!(
            "two-deadline code needs 1 <= B <= T, got ({b}, {t})"
        )));
    }
    if alpha < 2 {
        return Err(Error::InvalidParameters(format!(
            "deadline factor must be at least 2, got {alpha}"
        )));
    }
    Ok(())
}

impl StreamCode for DescoCode {
    fn field(&self) -> Field {
        self.c1.field()
    }

    fn source_rows(&self) -> usize {
        self.t()
    }

    fn parity_rows(&self) -> usize {
        self.b()
    }

    /// `q_k[t] = p_fwd_k[t] + p_bwd_k[t − Δ]`. The two supports never
    /// overlap: forward terms reach back at most `T+B−1` slots, backward
    /// ones start `Δ + (α−1)` slots back.
    fn parity_terms(&self, t: i64, k: usize) -> Vec<(Cell, crate::field::FieldElement)> {
        let mut terms = self.c1.parity_terms(t, k);
        terms.extend(self.c2.parity_terms(t - self.delta, k));
        terms
    }

    fn lookback(&self) -> i64 {
        self.delta + self.c2.lookback()
    }
}

/// Transmit a stream through the combined code (convenience wrapper).
pub fn desco_encode(code: &DescoCode, stream: &SourceStream) -> Vec<ChannelSymbol> {
    code.encode(stream)
}

pub(crate) fn single_burst_of(pattern: &ErasurePattern) -> Result<(i64, usize), Error> {
    let bursts = pattern.bursts();
    let [(start, len)] = bursts.as_slice() else {
        return Err(Error::InvalidParameters(format!(
            "burst decode expects exactly one burst, got {}",
            bursts.len()
        )));
    };
    Ok((*start, *len))
}

/// Short-deadline decode: repair the burst from the parity slots within
/// `T` of its end. Backward terms inside that window predate a
/// contract-length burst, so the receiver never waits on the other stream.
pub fn decode_user1(
    code: &DescoCode,
    received: &[Option<ChannelSymbol>],
    pattern: &ErasurePattern,
) -> Result<DecodeReport, Error> {
    let (j, blen) = single_burst_of(pattern)?;
    let i = j + blen as i64;
    let delay = code.user1_delay();
    if (received.len() as i64) < i + delay {
        return Err(Error::InvalidParameters(format!(
            "horizon {} too short to decode burst [{j}, {i}) within delay {delay}",
            received.len()
        )));
    }
    let mut report = ge_decode(code, received, pattern, i, i - 1 + delay);
    let cells: Vec<Cell> = pattern
        .erased()
        .flat_map(|tau| (0..code.t()).map(move |r| (tau, r)))
        .collect();
    report.enforce_deadline(cells, delay);
    Ok(report)
}

/// Everything the staged decode accumulates before deadline cleanup.
struct Cascade {
    sys: LinearSystem<Cell>,
    trace: Vec<TraceStep>,
    burst: (i64, usize),
    failure: Option<DecodeFailure>,
}

impl Cascade {
    fn into_report(self) -> DecodeReport {
        let recovered_at = self
            .sys
            .solved()
            .iter()
            .map(|(&cell, &(_, at))| (cell, at))
            .collect();
        DecodeReport {
            burst: self.burst,
            recovered_at,
            trace: self.trace,
            failure: self.failure,
        }
    }
}

/// The non-urgent stages of the long-deadline decode, in schedule order:
///
/// 1. Backward diagonals through the burst, from backward parities exposed
///    once the forward window has passed (their forward share touches only
///    received cells) but before any deadline-critical parity.
/// 2. Splitting the first `T` post-burst parity slots: every erased cell
///    their backward shares reference must be determined by stage 1, at
///    which point the forward share of each slot is effectively exposed.
/// 3. Forward diagonals anchored on the burst's trailing `B` slots, walked
///    from the trailing edge inward.
/// 4. Alternating rounds moving one forward anchor deeper into the burst,
///    then the backward anchors that unblocks.
fn nonurgent_cascade(
    code: &DescoCode,
    received: &[Option<ChannelSymbol>],
    pattern: &ErasurePattern,
) -> Result<Cascade, Error> {
    let (j, blen) = single_burst_of(pattern)?;
    let i = j + blen as i64;
    let t2 = code.t2_star();
    if (received.len() as i64) < i + t2 {
        return Err(Error::InvalidParameters(format!(
            "horizon {} too short to decode burst [{j}, {i}) within delay {t2}",
            received.len()
        )));
    }
    let t_len = code.t() as i64;
    let b_len = code.b() as i64;
    let ell = (code.alpha - 1) as i64;
    // Parities at or past this slot are the deadline equations of erased
    // cells; the cascade leaves them to the urgent stage.
    let deadline_edge = j + t2;

    let mut sys: LinearSystem<Cell> = LinearSystem::new(code.field());
    let mut trace = Vec::new();
    let mut failure = None;

    // Stage 1: backward diagonals anchored inside the burst. A parity at
    // slot `t >= i + T` has its forward share entirely on received cells,
    // and `t < deadline_edge` keeps it off the urgent equations.
    for n in j..=(i - b_len - 1) {
        let mut recovered = Vec::new();
        for k0 in 0..code.b() {
            let t = n + (k0 as i64 + 1) * ell + code.delta;
            if t < i + t_len || t >= deadline_edge {
                continue;
            }
            recovered.extend(insert_parity_row(&mut sys, code, received, pattern, t, k0));
        }
        trace.push(TraceStep::BackDiagonal {
            anchor: n,
            recovered,
        });
    }

    // Stage 2: check that each post-burst parity slot's backward share is
    // now determined, recording when the slot's forward share becomes
    // usable. No equations are inserted: elimination already substitutes
    // recovered cells, this stage just audits the schedule.
    'split: for tp in i..(i + t_len) {
        let mut available_at = tp;
        for k in 0..code.b() {
            for (cell, _) in code.c2.parity_terms(tp - code.delta, k) {
                if cell.0 < 0 || !pattern.is_erased(cell.0) {
                    continue;
                }
                match sys.determined_at(cell) {
                    Some(at) => available_at = available_at.max(at),
                    None => {
                        failure = Some(DecodeFailure::StagePrecondition {
                            stage: "parity-split",
                            detail: format!(
                                "combined slot {tp} needs cell ({}, {}) before its \
                                 backward share can be peeled",
                                cell.0, cell.1
                            ),
                        });
                        break 'split;
                    }
                }
            }
        }
        trace.push(TraceStep::ParitySplit {
            time: tp,
            available_at,
        });
    }

    if failure.is_none() {
        // Stage 3: forward diagonals anchored on the trailing B burst
        // slots, trailing edge first. Only parities landing inside the
        // just-split window [i, i+T) exist for these anchors.
        for n in (i - b_len..=i - 1).rev() {
            let mut recovered = Vec::new();
            let lo = (i - n - t_len).max(0);
            let hi = (b_len - 1).min(i - 1 - n);
            for k0 in lo..=hi {
                let t = n + t_len + k0;
                recovered.extend(insert_parity_row(
                    &mut sys,
                    code,
                    received,
                    pattern,
                    t,
                    k0 as usize,
                ));
            }
            trace.push(TraceStep::FrontDiagonal {
                anchor: n,
                recovered,
            });
        }

        // Stage 4: each round inserts the full forward anchor one slot
        // deeper into the burst, then the next band of backward anchors
        // past the burst's tail-B edge.
        for round in 1..=(t_len - b_len - 1) {
            let n1 = i - b_len - round;
            let mut recovered = Vec::new();
            for k0 in 0..code.b() {
                let t = n1 + t_len + k0 as i64;
                recovered.extend(insert_parity_row(&mut sys, code, received, pattern, t, k0));
            }
            trace.push(TraceStep::AlternateMain {
                round: round as usize,
                anchor: n1,
                recovered,
            });
            for n in (i - b_len + (round - 1) * ell)..=(i - b_len + round * ell - 1) {
                let mut recovered = Vec::new();
                for k0 in 0..code.b() {
                    let t = n + (k0 as i64 + 1) * ell + code.delta;
                    if t >= deadline_edge {
                        continue;
                    }
                    recovered.extend(insert_parity_row(&mut sys, code, received, pattern, t, k0));
                }
                trace.push(TraceStep::AlternateOpposite {
                    round: round as usize,
                    anchor: n,
                    recovered,
                });
            }
        }
    }

    Ok(Cascade {
        sys,
        trace,
        burst: (j, blen),
        failure,
    })
}

/// Run only the non-urgent stages of the long-deadline decode and check
/// that they determine every cell in rows `[0, T−B)`. Cells in the last
/// `B` rows may legitimately wait for their deadline equations, which this
/// entry point does not insert.
pub fn recursive_nonurgent_decode(
    code: &DescoCode,
    received: &[Option<ChannelSymbol>],
    pattern: &ErasurePattern,
) -> Result<DecodeReport, Error> {
    let cascade = nonurgent_cascade(code, received, pattern)?;
    let t2 = code.t2_star();
    let nonurgent: Vec<Cell> = pattern
        .erased()
        .flat_map(|tau| (0..code.t() - code.b()).map(move |r| (tau, r)))
        .collect();
    let mut report = cascade.into_report();
    report.enforce_deadline(nonurgent, t2);
    Ok(report)
}

/// Long-deadline decode: the non-urgent cascade, then each still-missing
/// cell in the last `B` rows from the one parity row published exactly at
/// its deadline — the backward equation whose own diagonal cell it is.
/// Judges every erased cell against the `αT + B` contract.
pub fn decode_user2(
    code: &DescoCode,
    received: &[Option<ChannelSymbol>],
    pattern: &ErasurePattern,
) -> Result<DecodeReport, Error> {
    let mut cascade = nonurgent_cascade(code, received, pattern)?;
    let t2 = code.t2_star();
    let urgent_floor = code.t() - code.b();
    if cascade.failure.is_none() {
        'urgent: for tau in pattern.erased() {
            for r in 0..code.t() {
                let cell = (tau, r);
                if cascade.sys.is_determined(cell) {
                    continue;
                }
                if r < urgent_floor {
                    // No parity published this late still touches the cell.
                    cascade.failure = Some(DecodeFailure::MissedDeadline {
                        cell,
                        deadline: tau + t2,
                        recovered_at: None,
                    });
                    break 'urgent;
                }
                let k0 = code.t() - 1 - r;
                insert_parity_row(&mut cascade.sys, code, received, pattern, tau + t2, k0);
                match cascade.sys.determined_at(cell) {
                    Some(at) => cascade.trace.push(TraceStep::UrgentAtDeadline {
                        cell,
                        recovered_at: at,
                    }),
                    None => {
                        cascade.failure = Some(DecodeFailure::MissedDeadline {
                            cell,
                            deadline: tau + t2,
                            recovered_at: None,
                        });
                        break 'urgent;
                    }
                }
            }
        }
    }
    let cells: Vec<Cell> = pattern
        .erased()
        .flat_map(|tau| (0..code.t()).map(move |r| (tau, r)))
        .collect();
    let mut report = cascade.into_report();
    report.enforce_deadline(cells, t2);
    Ok(report)
}

/// Certify both receivers' contracts by exhausting every burst length and
/// every offset through one period, on the zero stream (recovery slots are
/// value-independent, so the zero stream certifies every stream).
pub fn verify_desco(code: &DescoCode) -> Result<(), Error> {
    let t2 = code.t2_star();
    for j in 0..code.period() {
        for blen in 1..=code.user2_burst() {
            let horizon = j + blen as i64 + t2 + 1;
            let stream = SourceStream::zeros(code.field(), code.t(), horizon as usize);
            let sent = code.encode(&stream);
            let pattern = ErasurePattern::single_burst(j, blen, horizon)?;
            let received = pattern.apply(&sent);
            if blen <= code.user1_burst() {
                let report = decode_user1(code, &received, &pattern)?;
                if let Some(failure) = report.failure {
                    return Err(Error::NotCertified {
                        receiver: 1,
                        failure,
                    });
                }
            }
            let report = decode_user2(code, &received, &pattern)?;
            if let Some(failure) = report.failure {
                return Err(Error::NotCertified {
                    receiver: 2,
                    failure,
                });
            }
        }
    }
    Ok(())
}

/// Search the candidate-table family for a certified `(B, T, α)` pair.
///
/// Pairs are tried in a deterministic diagonal order over (forward table,
/// backward table) indices, so cheap tables are preferred and the result
/// is reproducible. The backward candidate is the forward table mirrored
/// across the source rows, which preserves each diagonal's weight profile
/// under the slope change.
pub fn desco_construct(field: Field, b: usize, t: usize, alpha: usize) -> Result<DescoCode, Error> {
    check_shape(b, t, alpha)?;
    let mains = candidate_tables(field, b, t);
    let n = mains.len();
    const PAIR_CAP: usize = 4096;
    let mut tried = 0usize;
    for d in 0..n {
        let mut pairs: Vec<(usize, usize)> = (0..=d).map(|i1| (i1, d)).collect();
        pairs.extend((0..d).map(|i2| (d, i2)));
        for (i1, i2) in pairs {
            if tried >= PAIR_CAP {
                return Err(Error::ConstructionFailed(format!(
                    "no table pair among the first {tried} certifies ({b}, {t}) \
                     with deadline factor {alpha} over GF(2^{})",
                    field.bits()
                )));
            }
            tried += 1;
            let mut code = DescoCode::from_tables(
                field,
                b,
                t,
                alpha,
                mains[i1].clone(),
                reverse_table(&mains[i2]),
            )?;
            if verify_desco(&code).is_ok() {
                code.certified = true;
                return Ok(code);
            }
        }
    }
    Err(Error::ConstructionFailed(format!(
        "all {tried} table pairs fail ({b}, {t}) with deadline factor {alpha} over GF(2^{})",
        field.bits()
    )))
}
