//! Source streams, channel symbols, and the encoding contract shared by all
//! code constructions.
//!
//! Time is an `i64` slot index. Streams are simulated over `[0, horizon)`;
//! reads at negative times return zero sub-symbols, which models the
//! semi-infinite stream's quiet past without special-casing warm-up.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::{Field, FieldElement};
use crate::rate::Rate;

/// One source sub-symbol's coordinates: (time slot, row within the slot).
/// Rows are 0-based; a (B,T) code carries T source rows per slot.
pub type Cell = (i64, usize);

/// The source sequence over a finite simulation window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceStream {
    field: Field,
    rows: usize,
    slots: Vec<Vec<FieldElement>>,
}

impl SourceStream {
    pub fn zeros(field: Field, rows: usize, horizon: usize) -> SourceStream {
        SourceStream {
            field,
            rows,
            slots: vec![vec![field.zero(); rows]; horizon],
        }
    }

    /// Deterministic pseudorandom stream: same seed, same stream.
    pub fn random(field: Field, rows: usize, horizon: usize, seed: u64) -> SourceStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let slots = (0..horizon)
            .map(|_| {
                (0..rows)
                    .map(|_| field.element(rng.gen_range(0..field.order()) as u8))
                    .collect()
            })
            .collect();
        SourceStream { field, rows, slots }
    }

    /// # Panics
    /// If any slot's length differs from `rows`, or a value is from the
    /// wrong field.
    pub fn from_slots(field: Field, rows: usize, slots: Vec<Vec<FieldElement>>) -> SourceStream {
        for slot in &slots {
            assert_eq!(slot.len(), rows, "source slot with wrong row count");
            for v in slot {
                assert_eq!(v.field(), field, "source value from wrong field");
            }
        }
        SourceStream { field, rows, slots }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn horizon(&self) -> i64 {
        self.slots.len() as i64
    }

    /// Sub-symbol at `cell`; times before the stream start read as zero.
    ///
    /// # Panics
    /// If the time is at or past the horizon, or the row is out of range —
    /// an encoder reading there is a bug, not a boundary condition.
    pub fn get(&self, cell: Cell) -> FieldElement {
        let (t, r) = cell;
        assert!(r < self.rows, "row {r} out of range");
        if t < 0 {
            return self.field.zero();
        }
        assert!(
            t < self.horizon(),
            "read at time {t} beyond horizon {}",
            self.horizon()
        );
        self.slots[t as usize][r]
    }

    pub fn set(&mut self, cell: Cell, value: FieldElement) {
        let (t, r) = cell;
        assert!(
            t >= 0 && t < self.horizon() && r < self.rows,
            "cell out of range"
        );
        assert_eq!(value.field(), self.field, "value from wrong field");
        self.slots[t as usize][r] = value;
    }

    pub fn slot(&self, t: i64) -> &[FieldElement] {
        assert!(t >= 0 && t < self.horizon());
        &self.slots[t as usize]
    }

    /// All cells in the window, time-major.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let rows = self.rows;
        (0..self.horizon()).flat_map(move |t| (0..rows).map(move |r| (t, r)))
    }
}

/// One transmitted packet x[t]: the slot's source sub-symbols in the clear
/// plus the parity sub-symbols protecting earlier slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelSymbol {
    pub source: Vec<FieldElement>,
    pub parity: Vec<FieldElement>,
}

/// A linear streaming code: T source rows carried systematically, plus a
/// fixed number of parity rows per slot, each parity a causal linear
/// functional of the source.
pub trait StreamCode {
    fn field(&self) -> Field;

    /// Source sub-symbols per slot.
    fn source_rows(&self) -> usize;

    /// Parity sub-symbols per slot.
    fn parity_rows(&self) -> usize;

    /// Parity row `k` of slot `t` as a linear combination of source cells.
    /// May include cells at negative times (implicitly zero). Every cell's
    /// time must be <= `t`: a parity may check cells in its own packet
    /// (packet-expanding wrappers do), but never future ones.
    fn parity_terms(&self, t: i64, k: usize) -> Vec<(Cell, FieldElement)>;

    /// Upper bound on how far back a parity at time t reaches (t − lookback
    /// is the earliest referenced slot). Used to size sweep windows.
    fn lookback(&self) -> i64;

    fn rate(&self) -> Rate {
        Rate::new(
            self.source_rows() as u64,
            (self.source_rows() + self.parity_rows()) as u64,
        )
    }

    fn encode_slot(&self, stream: &SourceStream, t: i64) -> ChannelSymbol {
        assert_eq!(
            stream.rows(),
            self.source_rows(),
            "stream/code row mismatch"
        );
        let parity = (0..self.parity_rows())
            .map(|k| {
                self.parity_terms(t, k).into_iter().fold(
                    self.field().zero(),
                    |acc, (cell, coeff)| {
                        debug_assert!(cell.0 <= t, "non-causal parity term");
                        acc + coeff * stream.get(cell)
                    },
                )
            })
            .collect();
        ChannelSymbol {
            source: stream.slot(t).to_vec(),
            parity,
        }
    }

    fn encode(&self, stream: &SourceStream) -> Vec<ChannelSymbol> {
        (0..stream.horizon())
            .map(|t| self.encode_slot(stream, t))
            .collect()
    }
}
