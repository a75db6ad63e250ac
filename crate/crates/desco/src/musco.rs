//! Two-receiver constructions beyond embedding, and the rate limits they
//! live under.
//!
//! [`capacity`] maps a pair of burst/deadline contracts to the best
//! achievable rate where that rate is settled, [`converse_rate_bound`] gives
//! the upper bound that bites when the second deadline is squeezed below
//! `αT + B`, and three constructions trade rate against generality:
//!
//! * [`ccsco_construct`] — concatenation: every receiver gets its own parity
//!   rows, tiled over a shared source block. Works for any contract list,
//!   pays for it in rate.
//! * [`iasco_construct`] — interference alignment: two same-shape codes at
//!   slopes 1 and α share the parity rows, the second one shifted far enough
//!   that the first receiver's decoding window never sees it.
//! * [`expanded_musco_construct`] — source expansion: run a `(2, 3, 2)`
//!   embedded code at double symbol rate and re-packetize, turning its
//!   deadline pair into `(2, 4)` outer slots at rate 3/5 — above what
//!   concatenation offers for those contracts.

use crate::channel::ErasurePattern;
use crate::embed::{decode_user1, decode_user2, single_burst_of, DescoCode};
use crate::field::{Field, FieldElement};
use crate::oracle::ge_decode;
use crate::rate::Rate;
use crate::report::{DecodeFailure, DecodeReport};
use crate::sco::{candidate_tables, lcm, single_user_code, Orientation, ScoCode};
use crate::stream::{Cell, ChannelSymbol, SourceStream, StreamCode};
use crate::{desco_construct, Error};

// ---------------------------------------------------------------------------
// Rate limits

/// Best achievable rate for receiver contracts `(b1, t1)` and `(b2, t2)`
/// sharing one channel stream, where the answer is settled; the region label
/// names which regime the contracts fall in. Regions:
///
/// * `"a/b"` — `t2 >= αt1 + b1`: the second deadline is loose enough that
///   embedding serves both receivers at the single-user rate `t1/(t1+b1)`.
/// * `"c"` — `max(b2, t1) + b1 <= t2`: rate `(t2−b1)/(t2−b1+b2)`.
/// * `"f"` — `t1 <= t2 <= t1 + b1` and `b2 <= t1`: rate `t1/(t1+b2)`.
/// * `"g"` — `t2 <= t1`: the second receiver dominates, single-user rate
///   `t2/(t2+b2)`.
/// * `"d/e"` — both deadlines equal their burst lengths: time sharing is
///   optimal, rate `1/(1 + b1/t1 + b2/t2)`.
/// * `"open"` — none of the above; the rate is not settled and `None` is
///   returned.
///
/// Adjacent regions overlap on their boundaries; the label of the first
/// match (in the order above) is returned after checking that every
/// matching region agrees on the rate.
pub fn capacity(
    b1: usize,
    t1: usize,
    b2: usize,
    t2: usize,
) -> Result<(&'static str, Option<Rate>), Error> {
    if b1 == 0 || t1 < b1 || b2 == 0 || t2 < b2 {
        return Err(Error::InvalidParameters(format!(
            "each receiver needs 1 <= B <= T, got ({b1}, {t1}) and ({b2}, {t2})"
        )));
    }
    if !b2.is_multiple_of(b1) || b2 / b1 < 2 {
        return Err(Error::InvalidParameters(format!(
            "the second burst length must be an integer multiple >= 2 of the \
             first, got {b2} vs {b1}"
        )));
    }
    let alpha = b2 / b1;

    let mut matches: Vec<(&'static str, Rate)> = Vec::new();
    if t2 >= alpha * t1 + b1 {
        matches.push(("a/b", Rate::new(t1 as u64, (t1 + b1) as u64)));
    }
    if b2.max(t1) + b1 <= t2 {
        matches.push(("c", Rate::new((t2 - b1) as u64, (t2 - b1 + b2) as u64)));
    }
    if t1 <= t2 && t2 <= t1 + b1 && b2 <= t1 {
        matches.push(("f", Rate::new(t1 as u64, (t1 + b2) as u64)));
    }
    if t2 <= t1 {
        matches.push(("g", Rate::new(t2 as u64, (t2 + b2) as u64)));
    }
    if t1 == b1 && t2 == b2 {
        matches.push(("d/e", concat_rate(&[(b1, t1), (b2, t2)])));
    }

    match matches.split_first() {
        None => Ok(("open", None)),
        Some((&(label, rate), rest)) => {
            for &(other, other_rate) in rest {
                assert_eq!(
                    rate, other_rate,
                    "overlapping regions {label} and {other} disagree on the rate"
                );
            }
            Ok((label, Some(rate)))
        }
    }
}

/// Rate of serving every contract with its own parity rows:
/// `1 / (1 + Σ b_i/t_i)`, exactly.
fn concat_rate(contracts: &[(usize, usize)]) -> Rate {
    let num: u64 = contracts.iter().map(|&(_, t)| t as u64).product();
    let den: u64 = num
        + contracts
            .iter()
            .enumerate()
            .map(|(i, &(b, _))| {
                b as u64
                    * contracts
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, &(_, t))| t as u64)
                        .product::<u64>()
            })
            .sum::<u64>();
    Rate::new(num, den)
}

/// Upper bound on the rate of any code whose first receiver repairs bursts
/// of `b1` within some delay and whose second repairs `α·b1` within `t2`:
/// `(t2 − b1) / ((α−1)·b1 + t2)`.
///
/// The bound sits below the single-user rate `t/(t+b1)` exactly when
/// `t2 < αt + b1`, which is why no construction can beat the `αT + B`
/// second deadline of the embedded codes at full rate.
pub fn converse_rate_bound(b1: usize, t2: i64, alpha: usize) -> Result<Rate, Error> {
    if b1 == 0 || alpha < 2 || t2 < b1 as i64 {
        return Err(Error::InvalidParameters(format!(
            "rate bound needs b1 >= 1, alpha >= 2 and t2 >= b1, got ({b1}, {t2}, {alpha})"
        )));
    }
    Ok(Rate::new(
        (t2 - b1 as i64) as u64,
        ((alpha - 1) * b1) as u64 + t2 as u64,
    ))
}

// ---------------------------------------------------------------------------
// Concatenation

/// One receiver's share of a concatenated code.
#[derive(Clone, Debug)]
pub struct CcscoUser {
    /// Contracted burst length, in channel slots.
    burst: usize,
    /// Contracted repair deadline, in channel slots.
    delay: i64,
    /// The certified single-user code serving this receiver, in reduced
    /// form (source rows gcd-reduced, interleaved back up by its step).
    code: ScoCode,
    /// How many independent copies tile the shared source rows.
    copies: usize,
    /// First of this user's parity rows in the transmitted packet.
    parity_offset: usize,
}

impl CcscoUser {
    pub fn burst(&self) -> usize {
        self.burst
    }

    pub fn delay(&self) -> i64 {
        self.delay
    }

    pub fn code(&self) -> &ScoCode {
        &self.code
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    fn parity_rows(&self) -> usize {
        self.copies * self.code.b()
    }
}

/// Concatenated multi-receiver code: the source block is sized so every
/// receiver's reduced code tiles it in row bands, and each receiver's parity
/// rows are appended to the packet. Receiver `u` ignores everyone else's
/// parity and decodes its own bands independently.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "CcscoWire", into = "CcscoWire")]
pub struct CcscoCode {
    field: Field,
    users: Vec<CcscoUser>,
    /// Shared source rows per slot: lcm of the reduced source row counts.
    rows: usize,
    certified: bool,
}

/// On-disk form: each receiver's contract and reduced code. The tiling
/// (row count, copies, parity offsets) is recomputed on load; `certified`
/// is trusted.
#[derive(serde::Serialize, serde::Deserialize)]
struct CcscoWire {
    field_bits: u8,
    users: Vec<CcscoUserWire>,
    certified: bool,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct CcscoUserWire {
    burst: usize,
    delay: i64,
    code: ScoCode,
}

impl From<CcscoCode> for CcscoWire {
    fn from(code: CcscoCode) -> CcscoWire {
        CcscoWire {
            field_bits: code.field.bits(),
            users: code
                .users
                .into_iter()
                .map(|u| CcscoUserWire {
                    burst: u.burst,
                    delay: u.delay,
                    code: u.code,
                })
                .collect(),
            certified: code.certified,
        }
    }
}

impl TryFrom<CcscoWire> for CcscoCode {
    type Error = Error;

    fn try_from(wire: CcscoWire) -> Result<CcscoCode, Error> {
        let field = crate::sco::field_from_bits(wire.field_bits)?;
        let parts = wire
            .users
            .into_iter()
            .map(|u| (u.burst, u.delay, u.code))
            .collect();
        let mut code = assemble_ccsco(field, parts)?;
        code.certified = wire.certified;
        Ok(code)
    }
}

/// Tile per-receiver codes over a shared source block. Each code must carry
/// the contract it claims (shape times step), in main orientation, over the
/// shared field.
fn assemble_ccsco(field: Field, parts: Vec<(usize, i64, ScoCode)>) -> Result<CcscoCode, Error> {
    if parts.is_empty() {
        return Err(Error::InvalidParameters(
            "concatenation needs at least one receiver contract".into(),
        ));
    }
    for (burst, delay, code) in &parts {
        if code.field() != field
            || code.orientation() != Orientation::Main
            || code.burst_contract() != *burst
            || code.delay_contract() != *delay
        {
            return Err(Error::InvalidParameters(format!(
                "receiver code does not match its claimed ({burst}, {delay}) contract"
            )));
        }
    }
    let rows = parts.iter().fold(1, |acc, (_, _, c)| lcm(acc, c.t()));
    let mut users = Vec::with_capacity(parts.len());
    let mut parity_offset = 0;
    for (burst, delay, code) in parts {
        let copies = rows / code.t();
        let user = CcscoUser {
            burst,
            delay,
            code,
            copies,
            parity_offset,
        };
        parity_offset += user.parity_rows();
        users.push(user);
    }
    Ok(CcscoCode {
        field,
        users,
        rows,
        certified: false,
    })
}

impl CcscoCode {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn users(&self) -> &[CcscoUser] {
        &self.users
    }

    /// Contract of receiver `user`: (burst length, repair deadline).
    pub fn contract(&self, user: usize) -> (usize, i64) {
        (self.users[user].burst, self.users[user].delay)
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    /// Burst offsets for receiver `user` repeat beyond this span (its code's
    /// lookback is `T_u + B_u − step`, so one extra slot covers the stream
    /// edge plus a steady-state placement).
    pub fn period(&self, user: usize) -> i64 {
        self.users[user].burst as i64 + self.users[user].delay
    }
}

/// Receiver `user`'s view of the packet: the shared source rows plus only
/// its own parity band, renumbered from zero.
struct UserBand<'a> {
    ccsco: &'a CcscoCode,
    user: usize,
}

impl StreamCode for UserBand<'_> {
    fn field(&self) -> Field {
        self.ccsco.field
    }

    fn source_rows(&self) -> usize {
        self.ccsco.rows
    }

    fn parity_rows(&self) -> usize {
        self.ccsco.users[self.user].parity_rows()
    }

    fn parity_terms(&self, t: i64, k: usize) -> Vec<(Cell, FieldElement)> {
        let u = &self.ccsco.users[self.user];
        let copy = k / u.code.b();
        let band = copy * u.code.t();
        u.code
            .parity_terms(t, k % u.code.b())
            .into_iter()
            .map(|((tau, r), c)| ((tau, band + r), c))
            .collect()
    }

    fn lookback(&self) -> i64 {
        self.ccsco.users[self.user].code.lookback()
    }
}

impl StreamCode for CcscoCode {
    fn field(&self) -> Field {
        self.field
    }

    fn source_rows(&self) -> usize {
        self.rows
    }

    fn parity_rows(&self) -> usize {
        self.users.iter().map(CcscoUser::parity_rows).sum()
    }

    fn parity_terms(&self, t: i64, k: usize) -> Vec<(Cell, FieldElement)> {
        let user = self
            .users
            .iter()
            .position(|u| k < u.parity_offset + u.parity_rows())
            .expect("parity row out of range");
        let view = UserBand { ccsco: self, user };
        view.parity_terms(t, k - self.users[user].parity_offset)
    }

    fn lookback(&self) -> i64 {
        self.users
            .iter()
            .map(|u| u.code.lookback())
            .max()
            .unwrap_or(0)
    }
}

/// Serve every `(burst, delay)` contract in `contracts` by concatenation.
/// Each receiver's code is certified standalone and the assembly is
/// re-certified through the packet layout before being returned.
///
/// The achieved rate is exactly `1 / (1 + Σ b_i/t_i)`.
pub fn ccsco_construct(field: Field, contracts: &[(usize, usize)]) -> Result<CcscoCode, Error> {
    let mut parts = Vec::with_capacity(contracts.len());
    for &(b, t) in contracts {
        parts.push((b, t as i64, single_user_code(field, b, t)?));
    }
    let mut code = assemble_ccsco(field, parts)?;
    verify_ccsco(&code)?;
    code.certified = true;
    debug_assert_eq!(code.rate(), concat_rate(contracts));
    Ok(code)
}

/// Re-run every burst scenario of every receiver through the assembled
/// packet layout (the per-user codes are already certified standalone).
fn verify_ccsco(code: &CcscoCode) -> Result<(), Error> {
    for user in 0..code.num_users() {
        let (burst, delay) = code.contract(user);
        for j in 0..=code.period(user) {
            for blen in 1..=burst {
                let horizon = j + blen as i64 + delay + 1;
                let stream = SourceStream::zeros(code.field, code.rows, horizon as usize);
                let sent = code.encode(&stream);
                let pattern = ErasurePattern::single_burst(j, blen, horizon)?;
                let received = pattern.apply(&sent);
                let report = ccsco_decode_user(code, user, &received, &pattern)?;
                if let Some(failure) = report.failure {
                    return Err(Error::NotCertified {
                        receiver: user as u8 + 1,
                        failure,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Decode one burst as receiver `user`, using only that receiver's parity
/// band over the slots within its deadline of the burst's end, and holding
/// the result to its contract.
pub fn ccsco_decode_user(
    code: &CcscoCode,
    user: usize,
    received: &[Option<ChannelSymbol>],
    pattern: &ErasurePattern,
) -> Result<DecodeReport, Error> {
    if user >= code.num_users() {
        return Err(Error::InvalidParameters(format!(
            "receiver {user} out of range ({} receivers)",
            code.num_users()
        )));
    }
    let (j, blen) = single_burst_of(pattern)?;
    let i = j + blen as i64;
    let (_, delay) = code.contract(user);
    if (received.len() as i64) < i + delay {
        return Err(Error::InvalidParameters(format!(
            "horizon {} too short to decode burst [{j}, {i}) within delay {delay}",
            received.len()
        )));
    }
    let u = &code.users[user];
    let band: Vec<Option<ChannelSymbol>> = received
        .iter()
        .map(|sym| {
            sym.as_ref().map(|s| ChannelSymbol {
                source: s.source.clone(),
                parity: s.parity[u.parity_offset..u.parity_offset + u.parity_rows()].to_vec(),
            })
        })
        .collect();
    let view = UserBand { ccsco: code, user };
    let mut report = ge_decode(&view, &band, pattern, i, i - 1 + delay);
    let cells: Vec<Cell> = pattern
        .erased()
        .flat_map(|tau| (0..code.rows).map(move |r| (tau, r)))
        .collect();
    report.enforce_deadline(cells, delay);
    Ok(report)
}

// ---------------------------------------------------------------------------
// Interference alignment

/// Two same-shape `(B, T)` codes sharing the parity rows: `c1` at slope 1
/// for the short deadline, `c2` at slope `α` for the long one, the latter
/// published `shift` slots late so that `q[t] = p1[t] + p2[t − shift]`.
///
/// With `shift >= T + B − α`, every `c2` term inside the short receiver's
/// decoding window predates any contract-length burst — the alignment that
/// lets that receiver decode as if `c2` did not exist. The long receiver
/// reads only the parities past the short window, where the `c1` share
/// touches received cells only, and finishes by `T2 = αT + shift`.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "IascoWire", into = "IascoWire")]
pub struct IascoCode {
    c1: ScoCode,
    c2: ScoCode,
    alpha: usize,
    shift: i64,
    certified: bool,
}

/// On-disk form: both coefficient tables as raw bit patterns.
/// Deserialization re-validates shape and range but trusts `certified`.
#[derive(serde::Serialize, serde::Deserialize)]
struct IascoWire {
    field_bits: u8,
    b: usize,
    t: usize,
    alpha: usize,
    shift: i64,
    slope1: Vec<Vec<u8>>,
    slope_alpha: Vec<Vec<u8>>,
    certified: bool,
}

impl From<IascoCode> for IascoWire {
    fn from(code: IascoCode) -> IascoWire {
        IascoWire {
            field_bits: code.c1.field().bits(),
            b: code.b(),
            t: code.t(),
            alpha: code.alpha,
            shift: code.shift,
            slope1: crate::sco::table_to_bytes(code.c1.coeffs()),
            slope_alpha: crate::sco::table_to_bytes(code.c2.coeffs()),
            certified: code.certified,
        }
    }
}

impl TryFrom<IascoWire> for IascoCode {
    type Error = Error;

    fn try_from(wire: IascoWire) -> Result<IascoCode, Error> {
        let field = crate::sco::field_from_bits(wire.field_bits)?;
        let slope1 = crate::sco::table_from_bytes(field, &wire.slope1)?;
        let slope_alpha = crate::sco::table_from_bytes(field, &wire.slope_alpha)?;
        let mut code = iasco_from_tables(
            field,
            wire.b,
            wire.t,
            wire.alpha,
            Some(wire.shift),
            slope1,
            slope_alpha,
        )?;
        code.certified = wire.certified;
        Ok(code)
    }
}

/// Assemble an interference-aligned code from explicit coefficient tables
/// (uncertified; see [`verify_iasco`]). `shift` defaults as in
/// [`iasco_construct`].
pub fn iasco_from_tables(
    field: Field,
    b: usize,
    t: usize,
    alpha: usize,
    shift: Option<i64>,
    slope1: Vec<Vec<FieldElement>>,
    slope_alpha: Vec<Vec<FieldElement>>,
) -> Result<IascoCode, Error> {
    let shift = check_iasco_shape(b, t, alpha, shift)?;
    Ok(IascoCode {
        c1: ScoCode::new(field, b, t, 1, Orientation::Main, slope1)?,
        c2: ScoCode::new(field, b, t, alpha, Orientation::Main, slope_alpha)?,
        alpha,
        shift,
        certified: false,
    })
}

/// Validate the aligned shape and resolve the default shift
/// `max(T, T + B − α)`.
fn check_iasco_shape(b: usize, t: usize, alpha: usize, shift: Option<i64>) -> Result<i64, Error> {
    if b == 0 || t < b {
        return Err(Error::InvalidParameters(format!(
            "aligned code needs 1 <= B <= T, got ({b}, {t})"
        )));
    }
    if alpha < 2 {
        return Err(Error::InvalidParameters(format!(
            "deadline factor must be at least 2, got {alpha}"
        )));
    }
    let shift = shift.unwrap_or_else(|| (t as i64).max(t as i64 + b as i64 - alpha as i64));
    if shift < 0 {
        return Err(Error::InvalidParameters(format!(
            "publication shift must be nonnegative, got {shift}"
        )));
    }
    Ok(shift)
}

impl IascoCode {
    pub fn b(&self) -> usize {
        self.c1.b()
    }

    pub fn t(&self) -> usize {
        self.c1.t()
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// Publication lag of the slope-α stream inside the combined parity.
    pub fn shift(&self) -> i64 {
        self.shift
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

    pub fn user1_burst(&self) -> usize {
        self.b()
    }

    pub fn user1_delay(&self) -> i64 {
        self.c1.delay_contract()
    }

    pub fn user2_burst(&self) -> usize {
        self.alpha * self.b()
    }

    /// Repair deadline of the long receiver: `αT + shift`.
    pub fn user2_delay(&self) -> i64 {
        (self.alpha * self.t()) as i64 + self.shift
    }

    /// Burst offsets repeat (modulo the stream edge) beyond this span.
    pub fn period(&self) -> i64 {
        (self.user2_delay() + (self.t() + self.b()) as i64).max(self.lookback() + 1)
    }
}

impl StreamCode for IascoCode {
    fn field(&self) -> Field {
        self.c1.field()
    }

    fn source_rows(&self) -> usize {
        self.c1.t()
    }

    fn parity_rows(&self) -> usize {
        self.c1.b()
    }

    fn parity_terms(&self, t: i64, k: usize) -> Vec<(Cell, FieldElement)> {
        let mut terms = self.c1.parity_terms(t, k);
        terms.extend(self.c2.parity_terms(t - self.shift, k));
        terms
    }

    fn lookback(&self) -> i64 {
        self.c1.lookback().max(self.shift + self.c2.lookback())
    }
}

/// Short-deadline decode: the parity slots within `T` of the burst's end,
/// held to delay `T`. With the default shift the slope-α share of those
/// slots predates any contract-length burst.
pub fn iasco_decode_user1(
    code: &IascoCode,
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

/// Long-deadline decode: only the parity slots past the short receiver's
/// window, `[i + T, i − 1 + T2]`. There the slope-1 share touches received
/// cells only, so each combined parity acts as a pure slope-α equation; the
/// slope-α code then repairs bursts up to `αB` within `T2 = αT + shift`.
pub fn iasco_decode_user2(
    code: &IascoCode,
    received: &[Option<ChannelSymbol>],
    pattern: &ErasurePattern,
) -> Result<DecodeReport, Error> {
    let (j, blen) = single_burst_of(pattern)?;
    let i = j + blen as i64;
    let delay = code.user2_delay();
    if (received.len() as i64) < i + delay {
        return Err(Error::InvalidParameters(format!(
            "horizon {} too short to decode burst [{j}, {i}) within delay {delay}",
            received.len()
        )));
    }
    let mut report = ge_decode(code, received, pattern, i + code.t() as i64, i - 1 + delay);
    let cells: Vec<Cell> = pattern
        .erased()
        .flat_map(|tau| (0..code.t()).map(move |r| (tau, r)))
        .collect();
    report.enforce_deadline(cells, delay);
    Ok(report)
}

/// Certify both receivers' contracts over every burst length and offset
/// through one period, on the zero stream.
pub fn verify_iasco(code: &IascoCode) -> Result<(), Error> {
    let t2 = code.user2_delay();
    for j in 0..code.period() {
        for blen in 1..=code.user2_burst() {
            let horizon = j + blen as i64 + t2 + 1;
            let stream = SourceStream::zeros(code.field(), code.t(), horizon as usize);
            let sent = code.encode(&stream);
            let pattern = ErasurePattern::single_burst(j, blen, horizon)?;
            let received = pattern.apply(&sent);
            if blen <= code.user1_burst() {
                let report = iasco_decode_user1(code, &received, &pattern)?;
                if let Some(failure) = report.failure {
                    return Err(Error::NotCertified {
                        receiver: 1,
                        failure,
                    });
                }
            }
            let report = iasco_decode_user2(code, &received, &pattern)?;
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

/// Build a certified interference-aligned `(B, T, α)` code. `shift` defaults
/// to `max(T, T + B − α)`, the smallest lag that both keeps the slope-α
/// share out of the short receiver's window and leaves the long receiver a
/// full slope-α reach; smaller shifts are accepted and judged by
/// certification (they usually fail honestly).
///
/// The search tries (slope-1 table, slope-α table) index pairs in the same
/// diagonal order as the embedded construction.
pub fn iasco_construct(
    field: Field,
    b: usize,
    t: usize,
    alpha: usize,
    shift: Option<i64>,
) -> Result<IascoCode, Error> {
    let shift = check_iasco_shape(b, t, alpha, shift)?;
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
                    "no table pair among the first {tried} certifies aligned ({b}, {t}) \
                     with deadline factor {alpha} over GF(2^{})",
                    field.bits()
                )));
            }
            tried += 1;
            let mut code = iasco_from_tables(
                field,
                b,
                t,
                alpha,
                Some(shift),
                mains[i1].clone(),
                mains[i2].clone(),
            )?;
            if verify_iasco(&code).is_ok() {
                code.certified = true;
                return Ok(code);
            }
        }
    }
    Err(Error::ConstructionFailed(format!(
        "all {tried} table pairs fail aligned ({b}, {t}) with deadline factor {alpha} \
         over GF(2^{})",
        field.bits()
    )))
}

// ---------------------------------------------------------------------------
// Source expansion

/// Split each slot of `stream` into `sigma` consecutive slots: slot `i`'s
/// rows `[q·m, (q+1)·m)` become slot `σi + q` of the result, where `m` is
/// the row count divided by `sigma`.
pub fn source_expand(stream: &SourceStream, sigma: usize) -> SourceStream {
    assert!(sigma >= 1, "expansion factor must be at least 1");
    assert_eq!(
        stream.rows() % sigma,
        0,
        "row count must divide evenly into {sigma} sub-slots"
    );
    let m = stream.rows() / sigma;
    let horizon = stream.horizon() as usize * sigma;
    let slots: Vec<Vec<FieldElement>> = (0..horizon as i64)
        .map(|s| {
            let (outer, q) = (
                s.div_euclid(sigma as i64),
                s.rem_euclid(sigma as i64) as usize,
            );
            (0..m).map(|r| stream.get((outer, q * m + r))).collect()
        })
        .collect();
    SourceStream::from_slots(stream.field(), m, slots)
}

/// An embedded code run at `sigma` times the symbol rate and re-packetized:
/// each outer packet carries `sigma` consecutive inner slots' source rows
/// and parity rows. An outer burst of `β` packets is an inner burst of
/// `σβ` slots, and an inner delay of `d` slots becomes
/// `⌈(d + σ − 1) / σ⌉ = (d + σ − 1) div σ` outer slots — so the inner
/// `(B, T, α)` contracts compress into outer deadlines roughly `T/σ` and
/// `(αT + B)/σ` while the rate is unchanged.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "ExpandedWire", into = "ExpandedWire")]
pub struct ExpandedCode {
    inner: DescoCode,
    sigma: usize,
    certified: bool,
}

/// On-disk form: the inner code plus the expansion factor. `certified` is
/// trusted.
#[derive(serde::Serialize, serde::Deserialize)]
struct ExpandedWire {
    inner: DescoCode,
    sigma: usize,
    certified: bool,
}

impl From<ExpandedCode> for ExpandedWire {
    fn from(code: ExpandedCode) -> ExpandedWire {
        ExpandedWire {
            inner: code.inner,
            sigma: code.sigma,
            certified: code.certified,
        }
    }
}

impl TryFrom<ExpandedWire> for ExpandedCode {
    type Error = Error;

    fn try_from(wire: ExpandedWire) -> Result<ExpandedCode, Error> {
        if wire.sigma == 0 || !wire.inner.b().is_multiple_of(wire.sigma) {
            return Err(Error::InvalidParameters(format!(
                "expansion factor {} must divide the inner parity row count {}",
                wire.sigma,
                wire.inner.b()
            )));
        }
        Ok(ExpandedCode {
            inner: wire.inner,
            sigma: wire.sigma,
            certified: wire.certified,
        })
    }
}

impl ExpandedCode {
    pub fn inner(&self) -> &DescoCode {
        &self.inner
    }

    /// Inner slots per outer packet.
    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    /// Longest outer burst the short-deadline receiver tolerates.
    pub fn user1_burst(&self) -> usize {
        self.inner.user1_burst() / self.sigma
    }

    /// Short deadline in outer slots.
    pub fn user1_delay(&self) -> i64 {
        outer_delay(self.inner.user1_delay(), self.sigma)
    }

    /// Longest outer burst the long-deadline receiver tolerates.
    pub fn user2_burst(&self) -> usize {
        self.inner.user2_burst() / self.sigma
    }

    /// Long deadline in outer slots.
    pub fn user2_delay(&self) -> i64 {
        outer_delay(self.inner.t2_star(), self.sigma)
    }

    /// Burst offsets repeat (modulo the stream edge) beyond this span.
    pub fn period(&self) -> i64 {
        self.inner.period().div_euclid(self.sigma as i64) + 2
    }

    /// Map an inner cell to the outer cell carrying it.
    fn contract_cell(&self, (tau, r): Cell) -> Cell {
        let sigma = self.sigma as i64;
        (
            tau.div_euclid(sigma),
            tau.rem_euclid(sigma) as usize * self.inner.t() + r,
        )
    }
}

/// Worst outer recovery delay implied by an inner delay `d`: the inner cell
/// may sit in the last sub-slot of its packet while recovery lands in the
/// first sub-slot of a later one.
fn outer_delay(d: i64, sigma: usize) -> i64 {
    (d + sigma as i64 - 1).div_euclid(sigma as i64)
}

impl StreamCode for ExpandedCode {
    fn field(&self) -> Field {
        self.inner.field()
    }

    fn source_rows(&self) -> usize {
        self.sigma * self.inner.t()
    }

    fn parity_rows(&self) -> usize {
        self.sigma * self.inner.b()
    }

    /// Outer parity row `k` is inner parity row `k mod B` of inner slot
    /// `σt + (k div B)`. Rows from the packet's later sub-slots may check
    /// cells in the packet's own earlier sub-slots (same outer `t`); that is
    /// still causal at the packet level.
    fn parity_terms(&self, t: i64, k: usize) -> Vec<(Cell, FieldElement)> {
        let b = self.inner.b();
        let inner_slot = self.sigma as i64 * t + (k / b) as i64;
        self.inner
            .parity_terms(inner_slot, k % b)
            .into_iter()
            .map(|(cell, c)| (self.contract_cell(cell), c))
            .collect()
    }

    fn lookback(&self) -> i64 {
        self.inner.lookback().div_euclid(self.sigma as i64) + 1
    }
}

/// Map an outer erasure scenario to the inner code's coordinates: outer slot
/// `t` carries inner slots `[σt, σ(t+1))`, all erased or all received
/// together.
fn expand_scenario(
    code: &ExpandedCode,
    received: &[Option<ChannelSymbol>],
    pattern: &ErasurePattern,
) -> Result<(Vec<Option<ChannelSymbol>>, ErasurePattern), Error> {
    let sigma = code.sigma;
    let bursts: Vec<(i64, usize)> = pattern
        .bursts()
        .into_iter()
        .map(|(start, len)| (start * sigma as i64, len * sigma))
        .collect();
    let inner_pattern = ErasurePattern::from_bursts(&bursts, pattern.horizon() * sigma as i64)?;
    let t_in = code.inner.t();
    let b_in = code.inner.b();
    let mut inner = Vec::with_capacity(received.len() * sigma);
    for sym in received {
        match sym {
            None => inner.extend((0..sigma).map(|_| None)),
            Some(s) => {
                for q in 0..sigma {
                    inner.push(Some(ChannelSymbol {
                        source: s.source[q * t_in..(q + 1) * t_in].to_vec(),
                        parity: s.parity[q * b_in..(q + 1) * b_in].to_vec(),
                    }));
                }
            }
        }
    }
    Ok((inner, inner_pattern))
}

/// Re-express an inner decode report in outer coordinates. The staged trace
/// is dropped — its anchors live on the inner lattice.
fn contract_report(code: &ExpandedCode, burst: (i64, usize), inner: DecodeReport) -> DecodeReport {
    let sigma = code.sigma as i64;
    DecodeReport {
        burst,
        recovered_at: inner
            .recovered_at
            .iter()
            .map(|(&cell, &at)| (code.contract_cell(cell), at.div_euclid(sigma)))
            .collect(),
        trace: Vec::new(),
        failure: inner.failure.map(|f| match f {
            DecodeFailure::MissedDeadline {
                cell,
                deadline,
                recovered_at,
            } => DecodeFailure::MissedDeadline {
                cell: code.contract_cell(cell),
                deadline: deadline.div_euclid(sigma),
                recovered_at: recovered_at.map(|at| at.div_euclid(sigma)),
            },
            precondition => precondition,
        }),
    }
}

fn expanded_decode(
    code: &ExpandedCode,
    received: &[Option<ChannelSymbol>],
    pattern: &ErasurePattern,
    long_deadline: bool,
) -> Result<DecodeReport, Error> {
    let (j, blen) = single_burst_of(pattern)?;
    let delay = if long_deadline {
        code.user2_delay()
    } else {
        code.user1_delay()
    };
    let (inner_received, inner_pattern) = expand_scenario(code, received, pattern)?;
    let inner_report = if long_deadline {
        decode_user2(&code.inner, &inner_received, &inner_pattern)?
    } else {
        decode_user1(&code.inner, &inner_received, &inner_pattern)?
    };
    let mut report = contract_report(code, (j, blen), inner_report);
    let cells: Vec<Cell> = pattern
        .erased()
        .flat_map(|tau| (0..code.source_rows()).map(move |r| (tau, r)))
        .collect();
    report.enforce_deadline(cells, delay);
    Ok(report)
}

/// Short-deadline decode of an outer burst (up to [`ExpandedCode::user1_burst`]
/// packets), held to [`ExpandedCode::user1_delay`] outer slots.
pub fn expanded_decode_user1(
    code: &ExpandedCode,
    received: &[Option<ChannelSymbol>],
    pattern: &ErasurePattern,
) -> Result<DecodeReport, Error> {
    expanded_decode(code, received, pattern, false)
}

/// Long-deadline decode of an outer burst (up to [`ExpandedCode::user2_burst`]
/// packets), held to [`ExpandedCode::user2_delay`] outer slots.
pub fn expanded_decode_user2(
    code: &ExpandedCode,
    received: &[Option<ChannelSymbol>],
    pattern: &ErasurePattern,
) -> Result<DecodeReport, Error> {
    expanded_decode(code, received, pattern, true)
}

/// Certify both receivers over every outer burst length and offset through
/// one period, on the zero stream.
fn verify_expanded(code: &ExpandedCode) -> Result<(), Error> {
    for j in 0..code.period() {
        for blen in 1..=code.user2_burst() {
            let horizon = j + blen as i64 + code.user2_delay() + 2;
            let stream = SourceStream::zeros(code.field(), code.source_rows(), horizon as usize);
            let sent = code.encode(&stream);
            let pattern = ErasurePattern::single_burst(j, blen, horizon)?;
            let received = pattern.apply(&sent);
            if blen <= code.user1_burst() {
                let report = expanded_decode_user1(code, &received, &pattern)?;
                if let Some(failure) = report.failure {
                    return Err(Error::NotCertified {
                        receiver: 1,
                        failure,
                    });
                }
            }
            let report = expanded_decode_user2(code, &received, &pattern)?;
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

/// The source-expanded construction for the contract pair `(1, 2)` /
/// `(2, 4)`: a certified inner `(2, 3, 2)` embedded code at double symbol
/// rate, re-packetized two inner slots per packet. Rate 3/5 — above the 4/7
/// that concatenating `(1, 2)` and `(2, 4)` codes achieves — with a single
/// outer erasure repaired within 2 slots and double erasures within 4.
pub fn expanded_musco_construct(field: Field) -> Result<ExpandedCode, Error> {
    let inner = desco_construct(field, 2, 3, 2)?;
    let mut code = ExpandedCode {
        inner,
        sigma: 2,
        certified: false,
    };
    verify_expanded(&code)?;
    code.certified = true;
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::oracle_decode;

    fn gf2() -> Field {
        Field::new(1)
    }

    #[test]
    fn settled_regions_and_their_rates() {
        assert_eq!(capacity(1, 2, 2, 4).unwrap(), ("c", Some(Rate::new(3, 5))));
        assert_eq!(
            capacity(1, 2, 2, 5).unwrap(),
            ("a/b", Some(Rate::new(2, 3)))
        );
        // Deadlines equal to the burst lengths: time sharing.
        assert_eq!(
            capacity(2, 2, 4, 4).unwrap(),
            ("d/e", Some(Rate::new(1, 3)))
        );
        // Second deadline at or below the first: its contract dominates.
        assert_eq!(capacity(2, 5, 4, 4).unwrap(), ("g", Some(Rate::new(1, 2))));
        // Between the settled regions nothing matches.
        assert_eq!(capacity(2, 3, 4, 5).unwrap(), ("open", None));
    }

    #[test]
    fn region_boundaries_agree() {
        // t2 = αt1 + b1 sits in both the loose region and region c.
        let (label, rate) = capacity(1, 2, 2, 5).unwrap();
        assert_eq!(label, "a/b");
        assert_eq!(rate, Some(Rate::new(4, 6)));
        // t2 = t1 + b1 with b2 <= t1 sits in both c and f.
        let (label, rate) = capacity(1, 2, 2, 3).unwrap();
        assert_eq!(label, "c");
        assert_eq!(rate, Some(Rate::new(1, 2)));
        // t2 = t1 sits in both f and g.
        let (label, rate) = capacity(2, 4, 4, 4).unwrap();
        assert_eq!(label, "f");
        assert_eq!(rate, Some(Rate::new(1, 2)));
    }

    #[test]
    fn capacity_rejects_non_multiple_bursts() {
        assert!(matches!(
            capacity(2, 4, 3, 8),
            Err(Error::InvalidParameters(_))
        ));
        assert!(matches!(
            capacity(2, 4, 2, 8),
            Err(Error::InvalidParameters(_))
        ));
        assert!(matches!(
            capacity(1, 2, 2, 1),
            Err(Error::InvalidParameters(_))
        ));
    }

    #[test]
    fn squeezed_deadlines_push_the_bound_below_the_single_user_rate() {
        // At t2 = αt + b the bound meets the single-user rate exactly...
        assert_eq!(converse_rate_bound(1, 5, 2).unwrap(), Rate::new(2, 3));
        // ...and below it the bound drops strictly under t/(t+b).
        for t2 in 2..5 {
            let bound = converse_rate_bound(1, t2, 2).unwrap();
            assert!(bound < Rate::new(2, 3), "t2={t2} bound {bound:?}");
        }
        assert!(matches!(
            converse_rate_bound(2, 1, 2),
            Err(Error::InvalidParameters(_))
        ));
    }

    #[test]
    fn concatenation_tiles_the_shared_rows() {
        let code = ccsco_construct(gf2(), &[(1, 2), (2, 4)]).unwrap();
        assert!(code.is_certified());
        assert_eq!(code.rate(), Rate::new(1, 2));
        // Both contracts reduce to (1, 2) shapes over two shared rows, one
        // copy each, one parity row each.
        assert_eq!(code.source_rows(), 2);
        assert_eq!(code.parity_rows(), 2);
        assert_eq!(code.users()[0].copies(), 1);
        assert_eq!(code.users()[1].copies(), 1);
        assert_eq!(code.contract(0), (1, 2));
        assert_eq!(code.contract(1), (2, 4));
    }

    #[test]
    fn each_receiver_meets_its_own_deadline_exactly() {
        let code = ccsco_construct(gf2(), &[(1, 2), (2, 4)]).unwrap();
        for user in 0..code.num_users() {
            let (burst, delay) = code.contract(user);
            let mut worst = 0;
            for j in 0..code.period(user) {
                for blen in 1..=burst {
                    let horizon = j + blen as i64 + delay + 1;
                    let stream =
                        SourceStream::zeros(code.field(), code.source_rows(), horizon as usize);
                    let sent = code.encode(&stream);
                    let pattern = ErasurePattern::single_burst(j, blen, horizon).unwrap();
                    let received = pattern.apply(&sent);
                    let report = ccsco_decode_user(&code, user, &received, &pattern).unwrap();
                    assert!(report.success(), "user {user} j={j} blen={blen}");
                    worst = worst.max(report.worst_delay().unwrap());
                }
            }
            assert_eq!(worst, delay, "user {user}");
        }
    }

    #[test]
    fn aligned_construction_hits_the_frozen_deadline_pair() {
        let code = iasco_construct(gf2(), 1, 2, 2, None).unwrap();
        assert!(code.is_certified());
        assert_eq!(code.shift(), 2);
        assert_eq!(code.user2_delay(), 6);
        assert_eq!(code.rate(), Rate::new(2, 3));

        let mut worst1 = 0;
        let mut worst2 = 0;
        for j in 0..code.period() {
            for blen in 1..=code.user2_burst() {
                let horizon = j + blen as i64 + code.user2_delay() + 1;
                let stream = SourceStream::zeros(code.field(), code.t(), horizon as usize);
                let sent = code.encode(&stream);
                let pattern = ErasurePattern::single_burst(j, blen, horizon).unwrap();
                let received = pattern.apply(&sent);
                if blen <= code.user1_burst() {
                    let report = iasco_decode_user1(&code, &received, &pattern).unwrap();
                    assert!(report.success());
                    worst1 = worst1.max(report.worst_delay().unwrap());
                }
                let report = iasco_decode_user2(&code, &received, &pattern).unwrap();
                assert!(report.success());
                worst2 = worst2.max(report.worst_delay().unwrap());
            }
        }
        assert_eq!(worst1, 2);
        // The long receiver ignores the parities inside the short window,
        // so its worst delay lands exactly on the contract.
        assert_eq!(worst2, 6);
    }

    #[test]
    fn long_receiver_never_reads_the_short_window() {
        // The full-window oracle beats the aligned receiver's restricted
        // window here: the parities it skips would repair this burst early.
        let code = iasco_construct(gf2(), 1, 2, 2, None).unwrap();
        let j = 4;
        let horizon = j + 2 + code.user2_delay() + 1;
        let stream = SourceStream::zeros(code.field(), code.t(), horizon as usize);
        let sent = code.encode(&stream);
        let pattern = ErasurePattern::single_burst(j, 2, horizon).unwrap();
        let received = pattern.apply(&sent);
        let aligned = iasco_decode_user2(&code, &received, &pattern).unwrap();
        let oracle = oracle_decode(&code, &received, &pattern);
        assert!(oracle.worst_delay().unwrap() < aligned.worst_delay().unwrap());
    }

    #[test]
    fn zero_shift_fails_certification_honestly() {
        assert!(matches!(
            iasco_construct(gf2(), 1, 2, 2, Some(0)),
            Err(Error::ConstructionFailed(_))
        ));
    }

    #[test]
    fn expansion_reshapes_rows_into_sub_slots() {
        let field = Field::new(8);
        let stream = SourceStream::random(field, 6, 4, 7);
        let inner = source_expand(&stream, 2);
        assert_eq!(inner.rows(), 3);
        assert_eq!(inner.horizon(), 8);
        for t in 0..4i64 {
            for r in 0..6 {
                assert_eq!(
                    stream.get((t, r)),
                    inner.get((2 * t + (r / 3) as i64, r % 3))
                );
            }
        }
    }

    #[test]
    fn expanded_packets_carry_two_inner_slots() {
        let field = Field::new(8);
        let code = expanded_musco_construct(field).unwrap();
        assert!(code.is_certified());
        assert_eq!(code.rate(), Rate::new(3, 5));
        assert_eq!((code.user1_burst(), code.user1_delay()), (1, 2));
        assert_eq!((code.user2_burst(), code.user2_delay()), (2, 4));

        // Outer encoding is exactly the inner encoding of the expanded
        // stream, re-packetized.
        let stream = SourceStream::random(field, code.source_rows(), 12, 99);
        let sent = code.encode(&stream);
        let inner_sent = code.inner().encode(&source_expand(&stream, 2));
        for t in 0..12usize {
            for q in 0..2 {
                let inner = &inner_sent[2 * t + q];
                assert_eq!(sent[t].source[q * 3..(q + 1) * 3], inner.source[..]);
                assert_eq!(sent[t].parity[q * 2..(q + 1) * 2], inner.parity[..]);
            }
        }
    }

    #[test]
    fn expanded_receivers_meet_the_outer_contracts() {
        let code = expanded_musco_construct(gf2()).unwrap();
        let mut worst1 = 0;
        let mut worst2 = 0;
        for j in 0..code.period() {
            for blen in 1..=2usize {
                let horizon = j + blen as i64 + code.user2_delay() + 2;
                let stream =
                    SourceStream::zeros(code.field(), code.source_rows(), horizon as usize);
                let sent = code.encode(&stream);
                let pattern = ErasurePattern::single_burst(j, blen, horizon).unwrap();
                let received = pattern.apply(&sent);
                if blen == 1 {
                    let report = expanded_decode_user1(&code, &received, &pattern).unwrap();
                    assert!(report.success(), "user1 j={j}: {:?}", report.failure);
                    worst1 = worst1.max(report.worst_delay().unwrap());
                }
                let report = expanded_decode_user2(&code, &received, &pattern).unwrap();
                assert!(
                    report.success(),
                    "user2 j={j} blen={blen}: {:?}",
                    report.failure
                );
                worst2 = worst2.max(report.worst_delay().unwrap());
            }
        }
        assert!(worst1 <= 2);
        assert!(worst2 <= 4);
    }
}
