//! What a decode attempt produced: per-cell recovery times, the order in
//! which the decoder walked the code's diagonals, and how it failed if it
//! did.

use std::collections::BTreeMap;

use crate::stream::Cell;

/// One step of a staged burst decode, in execution order. `recovered` lists
/// the cells the step determined, with the slot at which each value became
/// computable from the channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceStep {
    /// Recovered an opposite-slope diagonal from its exposed parities.
    BackDiagonal {
        anchor: i64,
        recovered: Vec<(Cell, i64)>,
    },
    /// Peeled the other code's contribution off a combined parity slot,
    /// making that slot's own parities available at `available_at`.
    ParitySplit { time: i64, available_at: i64 },
    /// Recovered a main-slope diagonal near the burst's trailing edge.
    FrontDiagonal {
        anchor: i64,
        recovered: Vec<(Cell, i64)>,
    },
    /// Alternating rounds: a main-slope diagonal deeper into the burst...
    AlternateMain {
        round: usize,
        anchor: i64,
        recovered: Vec<(Cell, i64)>,
    },
    /// ...then the opposite-slope diagonals it unblocks.
    AlternateOpposite {
        round: usize,
        anchor: i64,
        recovered: Vec<(Cell, i64)>,
    },
    /// A deadline-critical cell recovered from the last parity that can
    /// reach it in time.
    UrgentAtDeadline { cell: Cell, recovered_at: i64 },
}

impl TraceStep {
    /// The diagonal this step visited, if it visited one: (slope, anchor)
    /// where slope 'A' is the main code and 'B' the opposite one.
    pub fn diagonal(&self) -> Option<(char, i64)> {
        match *self {
            TraceStep::BackDiagonal { anchor, .. } => Some(('B', anchor)),
            TraceStep::FrontDiagonal { anchor, .. } => Some(('A', anchor)),
            TraceStep::AlternateMain { anchor, .. } => Some(('A', anchor)),
            TraceStep::AlternateOpposite { anchor, .. } => Some(('B', anchor)),
            _ => None,
        }
    }
}

/// Why a decode did not meet its contract.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DecodeFailure {
    #[error("cell ({},{}) due at {deadline} {}", cell.0, cell.1,
            match recovered_at { Some(t) => format!("recovered late at {t}"), None => "never recovered".into() })]
    MissedDeadline {
        cell: Cell,
        deadline: i64,
        recovered_at: Option<i64>,
    },
    #[error("decode stage {stage} precondition failed: {detail}")]
    StagePrecondition { stage: &'static str, detail: String },
}

/// Outcome of decoding one erasure scenario.
#[derive(Clone, Debug)]
pub struct DecodeReport {
    /// The burst this decode faced: (first erased slot, length).
    pub burst: (i64, usize),
    /// Recovery slot per erased cell. A cell recovered at slot `t` was
    /// computable from symbols received through `t`.
    pub recovered_at: BTreeMap<Cell, i64>,
    pub trace: Vec<TraceStep>,
    pub failure: Option<DecodeFailure>,
}

impl DecodeReport {
    pub fn success(&self) -> bool {
        self.failure.is_none()
    }

    /// Recovery delay of one cell: recovery slot minus the cell's own slot.
    pub fn delay_of(&self, cell: Cell) -> Option<i64> {
        self.recovered_at.get(&cell).map(|&t| t - cell.0)
    }

    /// Worst recovery delay over all recovered cells.
    pub fn worst_delay(&self) -> Option<i64> {
        self.recovered_at.iter().map(|(&(t, _), &at)| at - t).max()
    }

    /// Sets `failure` if any of `cells` is missing or recovered later than
    /// `delay` slots after its own slot; returns overall success.
    pub fn enforce_deadline(&mut self, cells: impl IntoIterator<Item = Cell>, delay: i64) -> bool {
        if self.failure.is_some() {
            return false;
        }
        for cell in cells {
            let deadline = cell.0 + delay;
            match self.recovered_at.get(&cell) {
                Some(&at) if at <= deadline => {}
                got => {
                    self.failure = Some(DecodeFailure::MissedDeadline {
                        cell,
                        deadline,
                        recovered_at: got.copied(),
                    });
                    return false;
                }
            }
        }
        true
    }

    /// Diagonal visit order, for checking a staged decode against the
    /// expected schedule.
    pub fn diagonal_order(&self) -> Vec<(char, i64)> {
        self.trace.iter().filter_map(TraceStep::diagonal).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report_with(times: &[(Cell, i64)]) -> DecodeReport {
        DecodeReport {
            burst: (0, 1),
            recovered_at: times.iter().copied().collect(),
            trace: Vec::new(),
            failure: None,
        }
    }

    #[test]
    fn worst_delay_is_max_over_cells() {
        let r = report_with(&[((3, 0), 5), ((3, 1), 9), ((4, 0), 6)]);
        assert_eq!(r.worst_delay(), Some(6));
        assert_eq!(r.delay_of((3, 1)), Some(6));
        assert_eq!(r.delay_of((4, 0)), Some(2));
        assert_eq!(r.delay_of((9, 9)), None);
    }

    #[test]
    fn enforce_deadline_flags_late_and_missing_cells() {
        let mut ok = report_with(&[((0, 0), 4)]);
        assert!(ok.enforce_deadline([(0, 0)], 4));
        assert!(ok.success());

        let mut late = report_with(&[((0, 0), 5)]);
        assert!(!late.enforce_deadline([(0, 0)], 4));
        assert!(matches!(
            late.failure,
            Some(DecodeFailure::MissedDeadline {
                cell: (0, 0),
                deadline: 4,
                recovered_at: Some(5)
            })
        ));

        let mut missing = report_with(&[]);
        assert!(!missing.enforce_deadline([(2, 1)], 4));
        assert!(matches!(
            missing.failure,
            Some(DecodeFailure::MissedDeadline {
                recovered_at: None,
                ..
            })
        ));
    }
}
