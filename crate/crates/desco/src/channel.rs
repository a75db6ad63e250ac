//! Burst-erasure channel models.
//!
//! A pattern is the set of erased slot indices over a simulation window.
//! Patterns serialize as a list of `[start, length]` bursts so sweep configs
//! stay human-readable.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::stream::ChannelSymbol;
use crate::Error;

/// Which slots the channel drops. Slots before time 0 are never erased:
/// nothing is transmitted there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErasurePattern {
    erased: BTreeSet<i64>,
    horizon: i64,
}

impl ErasurePattern {
    /// A single burst of `len` consecutive erasures starting at `start`.
    pub fn single_burst(start: i64, len: usize, horizon: i64) -> Result<ErasurePattern, Error> {
        let end = start + len as i64;
        if start < 0 || end > horizon {
            return Err(Error::InvalidParameters(format!(
                "burst [{start}, {end}) outside window [0, {horizon})"
            )));
        }
        Ok(ErasurePattern {
            erased: (start..end).collect(),
            horizon,
        })
    }

    /// The periodic channel: in every period of `period` slots, the first
    /// `erasures_per_period` are dropped.
    pub fn periodic_burst(
        erasures_per_period: usize,
        period: i64,
        horizon: i64,
    ) -> Result<ErasurePattern, Error> {
        if period <= 0 || erasures_per_period as i64 > period {
            return Err(Error::InvalidParameters(format!(
                "periodic pattern with {erasures_per_period} erasures per period {period}"
            )));
        }
        let mut erased = BTreeSet::new();
        let mut start = 0;
        while start < horizon {
            for t in start..(start + erasures_per_period as i64).min(horizon) {
                erased.insert(t);
            }
            start += period;
        }
        Ok(ErasurePattern { erased, horizon })
    }

    /// Arbitrary bursts, given as (start, length) pairs. Bursts may touch;
    /// overlaps are unioned.
    pub fn from_bursts(bursts: &[(i64, usize)], horizon: i64) -> Result<ErasurePattern, Error> {
        let mut erased = BTreeSet::new();
        for &(start, len) in bursts {
            let end = start + len as i64;
            if start < 0 || end > horizon {
                return Err(Error::InvalidParameters(format!(
                    "burst [{start}, {end}) outside window [0, {horizon})"
                )));
            }
            erased.extend(start..end);
        }
        Ok(ErasurePattern { erased, horizon })
    }

    pub fn horizon(&self) -> i64 {
        self.horizon
    }

    pub fn is_erased(&self, t: i64) -> bool {
        self.erased.contains(&t)
    }

    pub fn erased(&self) -> impl Iterator<Item = i64> + '_ {
        self.erased.iter().copied()
    }

    pub fn erased_count(&self) -> usize {
        self.erased.len()
    }

    /// Maximal runs of consecutive erasures, as (start, length).
    pub fn bursts(&self) -> Vec<(i64, usize)> {
        let mut out: Vec<(i64, usize)> = Vec::new();
        for &t in &self.erased {
            match out.last_mut() {
                Some((start, len)) if *start + *len as i64 == t => *len += 1,
                _ => out.push((t, 1)),
            }
        }
        out
    }

    /// Pass transmitted symbols through the channel. Slots outside the
    /// transmitted range simply don't appear; erased in-range slots become
    /// `None`.
    pub fn apply(&self, sent: &[ChannelSymbol]) -> Vec<Option<ChannelSymbol>> {
        sent.iter()
            .enumerate()
            .map(|(t, sym)| (!self.is_erased(t as i64)).then(|| sym.clone()))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct PatternWire {
    horizon: i64,
    bursts: Vec<(i64, usize)>,
}

impl Serialize for ErasurePattern {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        PatternWire {
            horizon: self.horizon,
            bursts: self.bursts(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ErasurePattern {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<ErasurePattern, D::Error> {
        let wire = PatternWire::deserialize(de)?;
        ErasurePattern::from_bursts(&wire.bursts, wire.horizon).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_burst_erases_exactly_its_range() {
        let p = ErasurePattern::single_burst(3, 2, 10).unwrap();
        assert!(!p.is_erased(2));
        assert!(p.is_erased(3));
        assert!(p.is_erased(4));
        assert!(!p.is_erased(5));
        assert_eq!(p.bursts(), vec![(3, 2)]);
    }

    #[test]
    fn out_of_range_burst_is_a_parameter_error() {
        assert!(matches!(
            ErasurePattern::single_burst(8, 5, 10),
            Err(Error::InvalidParameters(_))
        ));
    }

    #[test]
    fn periodic_pattern_matches_hand_expansion() {
        // 2 erasures every 5 slots over 12: {0,1,5,6,10,11}.
        let p = ErasurePattern::periodic_burst(2, 5, 12).unwrap();
        assert_eq!(p.erased().collect::<Vec<_>>(), vec![0, 1, 5, 6, 10, 11]);
        assert_eq!(p.bursts(), vec![(0, 2), (5, 2), (10, 2)]);
    }

    #[test]
    fn adjacent_bursts_merge_in_burst_view() {
        let p = ErasurePattern::from_bursts(&[(0, 2), (2, 1), (7, 1)], 10).unwrap();
        assert_eq!(p.bursts(), vec![(0, 3), (7, 1)]);
    }

    #[test]
    fn serde_round_trips_via_burst_list() {
        let p = ErasurePattern::from_bursts(&[(1, 2), (4, 3)], 9).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"horizon":9,"bursts":[[1,2],[4,3]]}"#);
        let back: ErasurePattern = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn negative_start_is_a_parameter_error() {
        assert!(ErasurePattern::single_burst(-1, 2, 10).is_err());
    }
}
