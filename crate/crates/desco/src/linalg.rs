//! Incremental Gaussian elimination over small finite fields.
//!
//! Decoders feed equations in one at a time and need to know, for every
//! unknown, the earliest point at which it became determined. Each equation
//! carries a timestamp (the slot at which its parity was observed); a row's
//! timestamp is the max over every equation algebraically combined into it,
//! so when a row shrinks to a single variable, the row's timestamp is exactly
//! when that value became computable from the channel.

use std::collections::BTreeMap;

use crate::field::{Field, FieldElement};

/// The system has no solution: a new equation contradicts earlier ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("inconsistent linear system: equation contradicts earlier equations")]
pub struct Inconsistent;

#[derive(Clone, Debug)]
struct Row<V> {
    coeffs: BTreeMap<V, FieldElement>,
    rhs: FieldElement,
    time: i64,
}

/// A growing reduced system. Invariants: every stored row is normalized to a
/// leading 1 on its pivot variable; a pivot variable appears in no other row;
/// a row with exactly one variable is a determined value, mirrored in
/// `solved` together with its timestamp.
pub struct LinearSystem<V> {
    field: Field,
    rows: Vec<Row<V>>,
    pivots: BTreeMap<V, usize>,
    solved: BTreeMap<V, (FieldElement, i64)>,
}

impl<V: Copy + Ord> LinearSystem<V> {
    pub fn new(field: Field) -> LinearSystem<V> {
        LinearSystem {
            field,
            rows: Vec::new(),
            pivots: BTreeMap::new(),
            solved: BTreeMap::new(),
        }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn value(&self, var: V) -> Option<FieldElement> {
        self.solved.get(&var).map(|&(v, _)| v)
    }

    pub fn determined_at(&self, var: V) -> Option<i64> {
        self.solved.get(&var).map(|&(_, t)| t)
    }

    pub fn is_determined(&self, var: V) -> bool {
        self.solved.contains_key(&var)
    }

    pub fn solved(&self) -> &BTreeMap<V, (FieldElement, i64)> {
        &self.solved
    }

    /// Alias for [`add_equation`](Self::add_equation): feed one equation into
    /// the running elimination and collect whatever it newly determines.
    pub fn solve_incremental(
        &mut self,
        terms: &[(V, FieldElement)],
        rhs: FieldElement,
        time: i64,
    ) -> Result<Vec<(V, FieldElement, i64)>, Inconsistent> {
        self.add_equation(terms, rhs, time)
    }

    /// Insert `sum(coeff * var) = rhs`, observed at `time`. Returns the
    /// variables this insertion newly determined, with values and the
    /// timestamps at which they became computable (sorted by variable).
    pub fn add_equation(
        &mut self,
        terms: &[(V, FieldElement)],
        rhs: FieldElement,
        time: i64,
    ) -> Result<Vec<(V, FieldElement, i64)>, Inconsistent> {
        let mut row = Row {
            coeffs: BTreeMap::new(),
            rhs,
            time,
        };
        for &(var, coeff) in terms {
            debug_assert_eq!(coeff.field(), self.field, "coefficient from wrong field");
            let entry = row.coeffs.entry(var).or_insert_with(|| self.field.zero());
            *entry += coeff;
        }
        row.coeffs.retain(|_, c| !c.is_zero());

        // Reduce against existing pivot rows. Elimination only introduces
        // non-pivot variables, so each pivot is cleared at most once and the
        // loop terminates.
        loop {
            let hit = row
                .coeffs
                .iter()
                .find_map(|(var, _)| self.pivots.get(var).map(|&idx| (*var, idx)));
            let Some((var, idx)) = hit else { break };
            let factor = row.coeffs[&var];
            let pivot_row = &self.rows[idx];
            for (&pv, &pc) in &pivot_row.coeffs {
                let entry = row.coeffs.entry(pv).or_insert_with(|| self.field.zero());
                *entry -= factor * pc;
            }
            row.rhs -= factor * pivot_row.rhs;
            row.time = row.time.max(pivot_row.time);
            row.coeffs.retain(|_, c| !c.is_zero());
        }

        if row.coeffs.is_empty() {
            return if row.rhs.is_zero() {
                Ok(Vec::new())
            } else {
                Err(Inconsistent)
            };
        }

        // Normalize on the smallest variable and install as a pivot row.
        let pivot = *row.coeffs.keys().next().unwrap();
        let lead = row.coeffs[&pivot];
        if lead != self.field.one() {
            let inv = lead.inv();
            for c in row.coeffs.values_mut() {
                *c *= inv;
            }
            row.rhs *= inv;
        }
        let new_idx = self.rows.len();
        self.rows.push(row);
        self.pivots.insert(pivot, new_idx);

        // Back-substitute the new pivot out of every older row.
        let mut determined = Vec::new();
        let (before, rest) = self.rows.split_at_mut(new_idx);
        let new_row = &rest[0];
        for (idx, other) in before.iter_mut().enumerate() {
            let Some(&factor) = other.coeffs.get(&pivot) else {
                continue;
            };
            for (&pv, &pc) in &new_row.coeffs {
                let entry = other.coeffs.entry(pv).or_insert_with(|| self.field.zero());
                *entry -= factor * pc;
            }
            other.rhs -= factor * new_row.rhs;
            other.time = other.time.max(new_row.time);
            other.coeffs.retain(|_, c| !c.is_zero());
            if other.coeffs.len() == 1 {
                let (&v, &c) = other.coeffs.iter().next().unwrap();
                debug_assert_eq!(c, self.field.one(), "pivot row lost normalization");
                if let std::collections::btree_map::Entry::Vacant(e) = self.solved.entry(v) {
                    e.insert((other.rhs, other.time));
                    determined.push((v, other.rhs, other.time));
                }
                let _ = idx;
            }
        }
        let new_row = &self.rows[new_idx];
        if new_row.coeffs.len() == 1 && !self.solved.contains_key(&pivot) {
            self.solved.insert(pivot, (new_row.rhs, new_row.time));
            determined.push((pivot, new_row.rhs, new_row.time));
        }

        determined.sort_by_key(|&(v, _, _)| v);
        Ok(determined)
    }
}
