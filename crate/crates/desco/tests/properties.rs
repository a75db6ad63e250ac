//! Randomized property suites: field axioms, elimination-order independence,
//! erasure-pattern algebra, value-correct decoding, and stress cases past the
//! single-burst contract.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use proptest::prelude::*;

use desco::field::{ff_add, ff_mul};
use desco::linalg::LinearSystem;
use desco::{
    ccsco_construct, converse_experiment, desco_construct, iasco_construct, oracle_decode_values,
    AnyCode, ChannelSymbol, ErasurePattern, Field, FieldElement, Rate, ScoCode, SourceStream,
    StreamCode,
};

fn arb_field() -> impl Strategy<Value = Field> {
    (1u8..=8).prop_map(Field::new)
}

/// Any raw byte folded into the field.
fn el(field: Field, raw: u8) -> FieldElement {
    field.element((raw as u16 % field.order()) as u8)
}

proptest! {
    #[test]
    fn field_axioms(field in arb_field(), a: u8, b: u8, c: u8) {
        let (x, y, z) = (el(field, a), el(field, b), el(field, c));
        prop_assert_eq!(x + y, y + x);
        prop_assert_eq!((x + y) + z, x + (y + z));
        prop_assert_eq!(x * y, y * x);
        prop_assert_eq!((x * y) * z, x * (y * z));
        prop_assert_eq!(x * (y + z), x * y + x * z);
        prop_assert_eq!(x + field.zero(), x);
        prop_assert_eq!(x * field.one(), x);
        // Characteristic 2: every element is its own additive inverse.
        prop_assert_eq!(x + x, field.zero());
        prop_assert_eq!(x - y, x + y);
        prop_assert_eq!(ff_add(x, y), x + y);
        prop_assert_eq!(ff_mul(x, y), x * y);
        if !y.is_zero() {
            prop_assert_eq!(y * y.inv(), field.one());
            prop_assert_eq!((x / y) * y, x);
        }
    }
}

#[test]
fn generator_spans_every_multiplicative_group() {
    for bits in 1..=8u8 {
        let field = Field::new(bits);
        let g = field.generator();
        let mut seen = std::collections::HashSet::new();
        let mut x = field.one();
        for _ in 0..field.order() - 1 {
            assert!(!x.is_zero());
            assert!(
                seen.insert(x.value()),
                "GF(2^{bits}) generator cycles early"
            );
            x *= g;
        }
        assert_eq!(x, field.one(), "GF(2^{bits}) generator order wrong");
    }
}

proptest! {
    /// Gaussian elimination settles the same values and rank no matter the
    /// order equations arrive in.
    #[test]
    fn elimination_is_insertion_order_independent(
        field in arb_field(),
        nvars in 1usize..=6,
        solution_raw in proptest::collection::vec(any::<u8>(), 6),
        eq_raws in proptest::collection::vec(
            (any::<u8>(), proptest::collection::vec(any::<u8>(), 6)),
            1..=10,
        ),
        order in proptest::collection::vec(any::<usize>(), 10),
    ) {
        let solution: Vec<FieldElement> =
            (0..nvars).map(|v| el(field, solution_raw[v])).collect();
        // Each raw row picks a variable subset (mask) and coefficients; the
        // right-hand side is computed from the planted solution, so the
        // system is consistent by construction.
        let eqs: Vec<(Vec<(usize, FieldElement)>, FieldElement)> = eq_raws
            .iter()
            .map(|(mask, coeff_raws)| {
                let terms: Vec<(usize, FieldElement)> = (0..nvars)
                    .filter(|v| mask >> v & 1 == 1)
                    .map(|v| (v, el(field, coeff_raws[v])))
                    .collect();
                let rhs = terms
                    .iter()
                    .fold(field.zero(), |acc, &(v, c)| acc + c * solution[v]);
                (terms, rhs)
            })
            .collect();

        let mut natural = LinearSystem::new(field);
        for (i, (terms, rhs)) in eqs.iter().enumerate() {
            prop_assert!(natural.solve_incremental(terms, *rhs, i as i64).is_ok());
        }
        let mut permuted: Vec<usize> = (0..eqs.len()).collect();
        // Fisher-Yates driven by the fuzzed index vector.
        for i in (1..permuted.len()).rev() {
            permuted.swap(i, order[i] % (i + 1));
        }
        let mut shuffled = LinearSystem::new(field);
        for &i in &permuted {
            let (terms, rhs) = &eqs[i];
            prop_assert!(shuffled.solve_incremental(terms, *rhs, i as i64).is_ok());
        }

        prop_assert_eq!(natural.rank(), shuffled.rank());
        let values = |sys: &LinearSystem<usize>| -> BTreeMap<usize, FieldElement> {
            sys.solved().iter().map(|(&v, &(x, _))| (v, x)).collect()
        };
        prop_assert_eq!(values(&natural), values(&shuffled));
        for (&v, &(x, _)) in natural.solved() {
            prop_assert_eq!(x, solution[v]);
        }
    }

    /// A contradicting equation is reported, not absorbed.
    #[test]
    fn contradictions_are_detected(field in arb_field(), raw in 1u8..=255) {
        let mut sys: LinearSystem<usize> = LinearSystem::new(field);
        let one = field.one();
        sys.add_equation(&[(0, one)], field.zero(), 0).unwrap();
        let clash = sys.add_equation(&[(0, one)], el(field, raw.max(1)), 1);
        if el(field, raw.max(1)).is_zero() {
            prop_assert!(clash.is_ok());
        } else {
            prop_assert!(clash.is_err());
        }
    }
}

proptest! {
    #[test]
    fn single_burst_erases_exactly_its_range(
        start in 0i64..50,
        len in 1usize..=10,
        margin in 0i64..20,
    ) {
        let horizon = start + len as i64 + margin;
        let p = ErasurePattern::single_burst(start, len, horizon).unwrap();
        prop_assert_eq!(p.erased().collect::<Vec<_>>(),
            (start..start + len as i64).collect::<Vec<_>>());
        prop_assert_eq!(p.erased_count(), len);
        prop_assert_eq!(p.bursts(), vec![(start, len)]);
        for t in 0..horizon {
            prop_assert_eq!(p.is_erased(t), t >= start && t < start + len as i64);
        }
    }

    #[test]
    fn separated_bursts_stay_separate(
        j1 in 0i64..20,
        len1 in 1usize..=5,
        gap in 1i64..10,
        len2 in 1usize..=5,
        margin in 0i64..10,
    ) {
        let j2 = j1 + len1 as i64 + gap;
        let horizon = j2 + len2 as i64 + margin;
        let p = ErasurePattern::from_bursts(&[(j1, len1), (j2, len2)], horizon).unwrap();
        prop_assert_eq!(p.erased_count(), len1 + len2);
        prop_assert_eq!(p.bursts(), vec![(j1, len1), (j2, len2)]);
    }

    #[test]
    fn periodic_pattern_repeats_exactly(
        erasures in 1usize..=3,
        slack in 0usize..=5,
        periods in 1i64..=4,
    ) {
        let period = (erasures + 1 + slack) as i64;
        let horizon = period * periods;
        let p = ErasurePattern::periodic_burst(erasures, period, horizon).unwrap();
        prop_assert_eq!(p.erased_count(), erasures * periods as usize);
        for t in 0..horizon {
            prop_assert_eq!(p.is_erased(t), (t % period) < erasures as i64);
        }
    }
}

/// Certified codes the decode-level properties draw from, built once.
fn roster() -> &'static [AnyCode] {
    static ROSTER: OnceLock<Vec<AnyCode>> = OnceLock::new();
    ROSTER.get_or_init(|| {
        let gf2 = Field::new(1);
        let gf256 = Field::new(8);
        vec![
            AnyCode::Desco(desco_construct(gf2, 1, 2, 2).unwrap()),
            AnyCode::Desco(desco_construct(gf256, 2, 3, 2).unwrap()),
            AnyCode::Desco(desco_construct(gf256, 1, 3, 3).unwrap()),
            AnyCode::Iasco(iasco_construct(gf2, 1, 2, 2, None).unwrap()),
            AnyCode::Ccsco(ccsco_construct(gf2, &[(1, 2), (2, 4)]).unwrap()),
        ]
    })
}

fn encode_all(code: &AnyCode, stream: &SourceStream, horizon: i64) -> Vec<ChannelSymbol> {
    (0..horizon).map(|t| code.encode_slot(stream, t)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Erasing a burst never garbles data: every cell the oracle recovers
    /// carries the value that was sent, within the receiver's deadline.
    #[test]
    fn oracle_recovers_true_values_within_deadline(
        pick in 0usize..5,
        j_raw in 0i64..64,
        blen_raw in 0usize..16,
        seed: u64,
    ) {
        let code = &roster()[pick];
        let weak = code.num_users() - 1;
        let (strong_burst, strong_delay) = code.contract(0).unwrap();
        let (weak_burst, weak_delay) = code.contract(weak).unwrap();
        let j = j_raw % code.period(weak).unwrap();
        let blen = 1 + blen_raw % weak_burst;
        let horizon = j + blen as i64 + weak_delay + code.lag() + 2;

        let stream = SourceStream::random(code.field(), code.source_rows(), horizon as usize, seed);
        let sent = encode_all(code, &stream, horizon);
        let pattern = ErasurePattern::single_burst(j, blen, horizon).unwrap();
        let received = pattern.apply(&sent);

        let deadline = if blen <= strong_burst { strong_delay } else { weak_delay };
        let recovered = oracle_decode_values(code, &received, &pattern);
        for tau in pattern.erased() {
            for r in 0..code.source_rows() {
                let (value, when) = recovered
                    .get(&(tau, r))
                    .copied()
                    .unwrap_or_else(|| panic!("cell ({tau},{r}) unrecovered"));
                prop_assert_eq!(value, stream.get((tau, r)));
                prop_assert!(when - tau <= deadline,
                    "cell ({tau},{r}) recovered at {when}, past deadline {deadline}");
            }
        }
    }

    /// Bursts spaced at least one decoding window apart are each repaired on
    /// their own contract, even though the setting only promises one burst.
    #[test]
    fn well_separated_bursts_decode_independently(
        pick in 0usize..3,
        j_raw in 0i64..32,
        blen1_raw in 0usize..8,
        blen2_raw in 0usize..8,
        extra in 0i64..5,
        seed: u64,
    ) {
        let code = &roster()[pick];
        let weak = code.num_users() - 1;
        let (weak_burst, weak_delay) = code.contract(weak).unwrap();
        let j1 = j_raw % code.period(weak).unwrap();
        let blen1 = 1 + blen1_raw % weak_burst;
        let blen2 = 1 + blen2_raw % weak_burst;
        // Start-to-start spacing: the worst window a full burst needs.
        let gap = weak_burst as i64 + weak_delay + extra;
        let j2 = j1 + gap;
        let horizon = j2 + blen2 as i64 + weak_delay + code.lag() + 2;

        let stream = SourceStream::random(code.field(), code.source_rows(), horizon as usize, seed);
        let sent = encode_all(code, &stream, horizon);
        let pattern = ErasurePattern::from_bursts(&[(j1, blen1), (j2, blen2)], horizon).unwrap();
        let received = pattern.apply(&sent);

        let recovered = oracle_decode_values(code, &received, &pattern);
        for tau in pattern.erased() {
            for r in 0..code.source_rows() {
                let (value, when) = recovered
                    .get(&(tau, r))
                    .copied()
                    .unwrap_or_else(|| panic!("cell ({tau},{r}) unrecovered"));
                prop_assert_eq!(value, stream.get((tau, r)));
                prop_assert!(when - tau <= weak_delay,
                    "cell ({tau},{r}) recovered at {when}, past deadline {weak_delay}");
            }
        }
    }

    /// Received symbols pass through unchanged; erased ones are gone.
    #[test]
    fn applying_a_pattern_masks_exactly_the_erased_slots(
        j_raw in 0i64..16,
        blen_raw in 0usize..4,
        seed: u64,
    ) {
        let code = &roster()[0];
        let horizon = 24i64;
        let j = j_raw % 16;
        let blen = 1 + blen_raw % 4;
        let stream = SourceStream::random(code.field(), code.source_rows(), horizon as usize, seed);
        let sent = encode_all(code, &stream, horizon);
        let pattern = ErasurePattern::single_burst(j, blen, horizon).unwrap();
        let received = pattern.apply(&sent);
        prop_assert_eq!(received.len(), sent.len());
        for (t, slot) in received.iter().enumerate() {
            if pattern.is_erased(t as i64) {
                prop_assert!(slot.is_none());
            } else {
                prop_assert_eq!(slot.as_ref(), Some(&sent[t]));
            }
        }
    }
}

proptest! {
    /// Code descriptors survive the JSON round trip exactly.
    #[test]
    fn single_user_descriptors_round_trip(
        field in arb_field(),
        b in 1usize..=3,
        t_extra in 0usize..=3,
        step in 1usize..=3,
        main in any::<bool>(),
        raws in proptest::collection::vec(any::<u8>(), 18),
    ) {
        let t = b + t_extra;
        let orientation = if main {
            desco::Orientation::Main
        } else {
            desco::Orientation::Opposite
        };
        let coeffs: Vec<Vec<FieldElement>> = (0..b)
            .map(|k| (0..t).map(|j| el(field, raws[k * t + j])).collect())
            .collect();
        let code = ScoCode::new(field, b, t, step, orientation, coeffs).unwrap();
        let json = serde_json::to_string(&code).unwrap();
        let back: ScoCode = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, code);
    }

    /// Exact rational rates: reduction and cross-multiplication ordering.
    #[test]
    fn rates_reduce_and_order_exactly(
        a in 1u64..=1000,
        b in 1u64..=1000,
        c in 1u64..=1000,
        d in 1u64..=1000,
        k in 1u64..=12,
    ) {
        prop_assert_eq!(Rate::new(k * a, k * b), Rate::new(a, b));
        let left = Rate::new(a, b);
        let right = Rate::new(c, d);
        prop_assert_eq!(left < right, (a as u128) * (d as u128) < (c as u128) * (b as u128));
        prop_assert_eq!(left == right, (a as u128) * (d as u128) == (c as u128) * (b as u128));
    }
}

/// At the exact contract deadline the adversarial periodic channel decodes
/// clean — the infeasibility really starts one slot below it.
#[test]
fn periodic_channel_is_clean_at_the_exact_deadline() {
    let out = converse_experiment(Field::new(1), 1, 2, 2, 5).unwrap();
    assert!(out.feasible);
    assert!(out.misses.is_empty());
    assert_eq!(out.worst_delay, Some(5));
}
