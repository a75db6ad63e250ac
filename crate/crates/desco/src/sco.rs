//! Single-stream streaming erasure codes over diagonal checksums.
//!
//! A `(B, T)` code sends `T` source rows and `B` parity rows per slot. Each
//! parity row is a weighted sum along a diagonal through the source lattice,
//! so a burst of up to `B` erased slots is repaired within `T` slots of each
//! loss. Running the same layout with a slot stride of `step` interleaves
//! `step` independent copies and scales the contract to bursts of
//! `step * B` repaired within `step * T`.

use serde::{Deserialize, Serialize};

use crate::channel::ErasurePattern;
use crate::field::{Field, FieldElement};
use crate::oracle;
use crate::report::DecodeReport;
use crate::stream::{Cell, ChannelSymbol, SourceStream, StreamCode};
use crate::Error;

/// Slope of a code's diagonals relative to the flow of time.
///
/// `Main` diagonals climb forward (later slots carry higher rows); the
/// parity for the diagonal anchored at `n` appears after its last cell.
/// `Opposite` diagonals climb backward and publish immediately after their
/// anchor, which is their *latest* cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Main,
    Opposite,
}

/// Cells of the forward diagonal anchored at slot `anchor`: row `r` sits at
/// slot `anchor + r`.
pub fn diagonal_main(anchor: i64, rows: usize) -> Vec<Cell> {
    (0..rows).map(|r| (anchor + r as i64, r)).collect()
}

/// Cells of the backward diagonal anchored at slot `anchor` with slope
/// `step`: row `r` sits at slot `anchor - r * step`.
pub fn diagonal_opposite(anchor: i64, rows: usize, step: i64) -> Vec<Cell> {
    (0..rows).map(|r| (anchor - r as i64 * step, r)).collect()
}

/// A single diagonally-interleaved streaming code.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ScoWire", into = "ScoWire")]
pub struct ScoCode {
    field: Field,
    b: usize,
    t: usize,
    step: usize,
    orientation: Orientation,
    /// `coeffs[k][r]` weights source row `r` in parity row `k`.
    coeffs: Vec<Vec<FieldElement>>,
    certified: bool,
}

/// On-disk form of a code: coefficients as raw bit patterns plus the field
/// they live in. Deserialization re-validates shape and range but trusts
/// the `certified` flag.
#[derive(Serialize, Deserialize)]
struct ScoWire {
    field_bits: u8,
    b: usize,
    t: usize,
    step: usize,
    orientation: Orientation,
    coeffs: Vec<Vec<u8>>,
    certified: bool,
}

impl From<ScoCode> for ScoWire {
    fn from(code: ScoCode) -> ScoWire {
        ScoWire {
            field_bits: code.field.bits(),
            b: code.b,
            t: code.t,
            step: code.step,
            orientation: code.orientation,
            coeffs: table_to_bytes(&code.coeffs),
            certified: code.certified,
        }
    }
}

impl TryFrom<ScoWire> for ScoCode {
    type Error = Error;

    fn try_from(wire: ScoWire) -> Result<ScoCode, Error> {
        let field = field_from_bits(wire.field_bits)?;
        let coeffs = table_from_bytes(field, &wire.coeffs)?;
        let mut code = ScoCode::new(field, wire.b, wire.t, wire.step, wire.orientation, coeffs)?;
        if wire.certified {
            code.certified = true;
        }
        Ok(code)
    }
}

pub(crate) fn field_from_bits(bits: u8) -> Result<Field, Error> {
    if !(1..=8).contains(&bits) {
        return Err(Error::InvalidParameters(format!(
            "field must be GF(2^m) with 1 <= m <= 8, got m = {bits}"
        )));
    }
    Ok(Field::new(bits))
}

pub(crate) fn table_to_bytes(table: &[Vec<FieldElement>]) -> Vec<Vec<u8>> {
    table
        .iter()
        .map(|row| row.iter().map(FieldElement::value).collect())
        .collect()
}

pub(crate) fn table_from_bytes(
    field: Field,
    table: &[Vec<u8>],
) -> Result<Vec<Vec<FieldElement>>, Error> {
    table
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| {
                    if (v as u16) < field.order() {
                        Ok(field.element(v))
                    } else {
                        Err(Error::InvalidParameters(format!(
                            "0x{v:02x} is not an element of GF(2^{})",
                            field.bits()
                        )))
                    }
                })
                .collect()
        })
        .collect()
}

impl ScoCode {
    /// Assemble a code from an explicit coefficient table (`b` rows of `t`
    /// weights each). The result is not certified; see [`verify_code`].
    pub fn new(
        field: Field,
        b: usize,
        t: usize,
        step: usize,
        orientation: Orientation,
        coeffs: Vec<Vec<FieldElement>>,
    ) -> Result<Self, Error> {
        if t == 0 || step == 0 {
            return Err(Error::InvalidParameters(format!(
                "degenerate code shape ({b}, {t}) with step {step}"
            )));
        }
        if b > t {
            return Err(Error::InvalidParameters(format!(
                "more parity rows than source rows ({b} > {t})"
            )));
        }
        if coeffs.len() != b || coeffs.iter().any(|row| row.len() != t) {
            return Err(Error::InvalidParameters(format!(
                "coefficient table must be {b} x {t}"
            )));
        }
        for row in &coeffs {
            for &c in row {
                if c.field() != field {
                    return Err(Error::InvalidParameters(
                        "coefficient from a different field".into(),
                    ));
                }
            }
        }
        Ok(ScoCode {
            field,
            b,
            t,
            step,
            orientation,
            coeffs,
            certified: false,
        })
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn coeffs(&self) -> &[Vec<FieldElement>] {
        &self.coeffs
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    pub(crate) fn mark_certified(&mut self) {
        self.certified = true;
    }

    /// Longest burst the code contracts to repair.
    pub fn burst_contract(&self) -> usize {
        self.b * self.step
    }

    /// Worst-case repair delay the code contracts, in slots.
    pub fn delay_contract(&self) -> i64 {
        (self.t * self.step) as i64
    }

    /// Slot offsets repeat with this period for sweep purposes.
    pub fn period(&self) -> i64 {
        ((self.t + self.b) * self.step) as i64
    }

    /// Anchor of the diagonal that parity row `k` of slot `time` checks.
    pub fn anchor(&self, time: i64, k: usize) -> i64 {
        let step = self.step as i64;
        match self.orientation {
            Orientation::Main => time - (self.t + k) as i64 * step,
            Orientation::Opposite => time - (k as i64 + 1) * step,
        }
    }

    /// The slot at which the equation for diagonal `anchor`, parity row `k`,
    /// is published.
    pub fn publish_time(&self, anchor: i64, k: usize) -> i64 {
        let step = self.step as i64;
        match self.orientation {
            Orientation::Main => anchor + (self.t + k) as i64 * step,
            Orientation::Opposite => anchor + (k as i64 + 1) * step,
        }
    }
}

impl StreamCode for ScoCode {
    fn field(&self) -> Field {
        self.field
    }

    fn source_rows(&self) -> usize {
        self.t
    }

    fn parity_rows(&self) -> usize {
        self.b
    }

    fn parity_terms(&self, t: i64, k: usize) -> Vec<(Cell, FieldElement)> {
        let anchor = self.anchor(t, k);
        let step = self.step as i64;
        let mut terms = Vec::new();
        for (r, &c) in self.coeffs[k].iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let cell = match self.orientation {
                Orientation::Main => (anchor + r as i64 * step, r),
                Orientation::Opposite => (anchor - r as i64 * step, r),
            };
            terms.push((cell, c));
        }
        terms
    }

    fn lookback(&self) -> i64 {
        ((self.t + self.b - 1) * self.step) as i64
    }
}

/// Parity rows of slot `t` (convenience wrapper over stream encoding).
pub fn sco_parity(code: &ScoCode, stream: &SourceStream, t: i64) -> Vec<FieldElement> {
    code.encode_slot(stream, t).parity
}

/// Repair a single burst with the code's own equations, inserting parity
/// rows in arrival order up to the contract deadline of the last erased
/// slot, then judge every erased cell against the contract delay.
pub fn sco_decode_burst(
    code: &ScoCode,
    received: &[Option<ChannelSymbol>],
    pattern: &ErasurePattern,
) -> Result<DecodeReport, Error> {
    let bursts = pattern.bursts();
    let [(start, len)] = bursts.as_slice() else {
        return Err(Error::InvalidParameters(format!(
            "burst decode expects exactly one burst, got {}",
            bursts.len()
        )));
    };
    let (j, b) = (*start, *len as i64);
    let i = j + b;
    let delay = code.delay_contract();
    if (received.len() as i64) < i + delay {
        return Err(Error::InvalidParameters(format!(
            "horizon {} too short to decode burst [{j}, {i}) within delay {delay}",
            received.len()
        )));
    }
    let mut report = oracle::ge_decode(code, received, pattern, i, i - 1 + delay);
    let cells: Vec<Cell> = pattern
        .erased()
        .flat_map(|tau| (0..code.source_rows()).map(move |r| (tau, r)))
        .collect();
    report.enforce_deadline(cells, delay);
    Ok(report)
}

/// Certify the code's `(step*B, step*T)` contract by exhausting every burst
/// length up to the contract and every offset through two periods (stream
/// edge plus steady state), on the zero stream. Recovery slots do not depend
/// on the transmitted values — pivot structure is value-free — so the zero
/// stream certifies every stream.
pub fn verify_code(code: &ScoCode) -> Result<(), Error> {
    assert_eq!(
        code.orientation,
        Orientation::Main,
        "standalone delay contracts are defined for main-orientation codes"
    );
    let cap = code.burst_contract();
    let delay = code.delay_contract();
    for j in 0..2 * code.period() {
        for b in 1..=cap {
            let horizon = j + b as i64 + delay;
            let stream = SourceStream::zeros(code.field, code.t, horizon as usize);
            let sent = code.encode(&stream);
            let pattern = ErasurePattern::single_burst(j, b, horizon)?;
            let received = pattern.apply(&sent);
            let report = sco_decode_burst(code, &received, &pattern)?;
            if let Some(failure) = report.failure {
                return Err(Error::NotCertified {
                    receiver: 1,
                    failure,
                });
            }
        }
    }
    Ok(())
}

/// Deterministic coefficient-table candidates for a `(b, t)` layout, in the
/// order the constructors try them. Every table puts weight on row `k` (the
/// diagonal entry, always 1) plus a tail drawn from rows `[b, t)`; that
/// support shape is what keeps equations published after a burst free of
/// erased cells outside their own diagonal.
pub(crate) fn candidate_tables(field: Field, b: usize, t: usize) -> Vec<Vec<Vec<FieldElement>>> {
    let one = field.one();
    let zero = field.zero();
    let g = field.generator();
    let tail = t - b;
    let mut seen: std::collections::BTreeSet<Vec<Vec<u8>>> = std::collections::BTreeSet::new();
    let mut out: Vec<Vec<Vec<FieldElement>>> = Vec::new();
    let mut push = |table: Vec<Vec<FieldElement>>, out: &mut Vec<Vec<Vec<FieldElement>>>| {
        let bytes: Vec<Vec<u8>> = table
            .iter()
            .map(|row| row.iter().map(|c| c.value()).collect())
            .collect();
        if seen.insert(bytes) {
            out.push(table);
        }
    };
    let build =
        |mut weight: Box<dyn FnMut(usize, usize) -> FieldElement>| -> Vec<Vec<FieldElement>> {
            (0..b)
                .map(|k| {
                    (0..t)
                        .map(|r| {
                            if r == k {
                                one
                            } else if r >= b {
                                weight(k, r)
                            } else {
                                zero
                            }
                        })
                        .collect()
                })
                .collect()
        };

    // Strided ones: row k's tail visits rows congruent to k modulo b.
    push(
        build(Box::new(
            move |k, r| {
                if (r - k) % b == 0 {
                    one
                } else {
                    zero
                }
            },
        )),
        &mut out,
    );
    // Dense ones: full tail.
    push(build(Box::new(move |_, _| one)), &mut out);
    // Dense with geometric weights, so square tail minors are Vandermonde.
    if field.bits() >= 2 {
        push(
            build(Box::new(move |k, r| g.pow((k * (r - b)) as i64))),
            &mut out,
        );
    }
    // Exhaustive tail supports, when the profile space is small enough.
    if b * tail <= 16 && tail > 0 {
        for mask in 0u32..(1u32 << (b * tail)) {
            push(
                build(Box::new(move |k, r| {
                    if mask >> (k * tail + (r - b)) & 1 == 1 {
                        one
                    } else {
                        zero
                    }
                })),
                &mut out,
            );
            if field.bits() >= 2 {
                push(
                    build(Box::new(move |k, r| {
                        if mask >> (k * tail + (r - b)) & 1 == 1 {
                            g.pow((k * (r - b)) as i64)
                        } else {
                            zero
                        }
                    })),
                    &mut out,
                );
            }
        }
    }
    out
}

/// Reverse a main-orientation table across the source rows. A backward code
/// with the reversed table covers each diagonal with the same weights the
/// forward code would, which is how backward candidates are generated.
pub(crate) fn reverse_table(table: &[Vec<FieldElement>]) -> Vec<Vec<FieldElement>> {
    table
        .iter()
        .map(|row| row.iter().rev().copied().collect())
        .collect()
}

/// First candidate table that certifies a `(b, t)` code with the given
/// orientation and stride.
///
/// `Main` codes are certified against their burst contract before being
/// returned. `Opposite` codes only ever run inside a paired construction,
/// where certification happens at the pair level, so the first candidate is
/// returned uncertified.
pub fn choose_coefficients(
    field: Field,
    b: usize,
    t: usize,
    orientation: Orientation,
    step: usize,
) -> Result<ScoCode, Error> {
    if b == 0 {
        // No parity at all: vacuously certified (nothing is contracted).
        let mut code = ScoCode::new(field, 0, t, step, orientation, Vec::new())?;
        code.mark_certified();
        return Ok(code);
    }
    match orientation {
        Orientation::Main => {
            for table in candidate_tables(field, b, t) {
                let mut code = ScoCode::new(field, b, t, step, orientation, table)?;
                if verify_code(&code).is_ok() {
                    code.mark_certified();
                    return Ok(code);
                }
            }
            Err(Error::ConstructionFailed(format!(
                "no candidate table certifies a ({b}, {t}) code with step {step} over GF(2^{})",
                field.bits()
            )))
        }
        Orientation::Opposite => {
            let table = reverse_table(&candidate_tables(field, b, t)[0]);
            ScoCode::new(field, b, t, step, orientation, table)
        }
    }
}

/// Certified code for a `(b, t)` single-receiver contract: the layout is
/// reduced by `gcd(b, t)` and run at that stride, which meets the same
/// contract with a shorter coefficient table.
pub fn single_user_code(field: Field, b: usize, t: usize) -> Result<ScoCode, Error> {
    if t == 0 || b > t {
        return Err(Error::InvalidParameters(format!(
            "single-user contract needs 1 <= B <= T, got ({b}, {t})"
        )));
    }
    if b == 0 {
        return choose_coefficients(field, 0, t, Orientation::Main, 1);
    }
    let g = gcd(b, t);
    choose_coefficients(field, b / g, t / g, Orientation::Main, g)
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}
