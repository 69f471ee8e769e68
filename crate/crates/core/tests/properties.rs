mod common;

use std::collections::BTreeSet;

use fourswap::conditions::{
    emit_script, evaluate, parse_script, satisfying_paths, session_hash, Condition, EvalContext, Preimage, Witness,
};
use fourswap::rpredicate::{r_predicate, KnowledgeFlags, Path};
use fourswap::{Party, Round};
use proptest::prelude::*;

const SESSION: u64 = 7;

fn preimage(i: u8) -> Preimage {
    Preimage(vec![0xab, i])
}

fn party() -> impl Strategy<Value = Party> {
    prop_oneof![Just(Party::A), Just(Party::B), (0u8..2).prop_map(Party::Miner)]
}

fn condition() -> impl Strategy<Value = Condition> {
    let leaf = prop_oneof![
        (0u8..4).prop_map(|i| Condition::Hashlock(session_hash(SESSION, &preimage(i)))),
        (0u64..8).prop_map(Condition::AbsTimelock),
        (0u64..4).prop_map(Condition::RelTimelock),
        (prop::collection::btree_set(party(), 1..4), 1usize..4).prop_map(|(signers, t)| {
            let threshold = t.min(signers.len());
            Condition::SigBy { signers, threshold }
        }),
        Just(Condition::AnyoneCanSpend),
    ];
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(Condition::All),
            prop::collection::vec(inner, 1..4).prop_map(Condition::Any),
        ]
    })
}

fn witness() -> impl Strategy<Value = Witness> {
    (prop::collection::btree_set(0u8..4, 0..4), prop::collection::btree_set(party(), 0..4))
        .prop_map(|(p, s)| Witness::signed_by(s).with_preimages(p.into_iter().map(preimage)))
}

fn ctx() -> impl Strategy<Value = EvalContext> {
    (0u64..12, 0u64..6).prop_map(|(current_round, source_confirm_round): (Round, Round)| EvalContext {
        current_round,
        source_confirm_round,
        session: SESSION,
    })
}

proptest! {
    #[test]
    fn evaluate_is_monotone(c in condition(), w in witness(), extra in witness(), ctx in ctx(), later in 0u64..5) {
        if evaluate(&c, &w, &ctx) {
            let mut more = w.clone();
            more.preimages.extend(extra.preimages);
            more.signers.extend(extra.signers);
            let later_ctx = EvalContext { current_round: ctx.current_round + later, ..ctx };
            prop_assert!(evaluate(&c, &more, &later_ctx));
        }
    }

    #[test]
    fn evaluate_agrees_with_paths(c in condition(), w in witness(), ctx in ctx()) {
        let by_paths = satisfying_paths(&c).iter().any(|p| p.covered(&w, &ctx));
        prop_assert_eq!(evaluate(&c, &w, &ctx), by_paths);
    }

    #[test]
    fn script_round_trip(c in condition()) {
        let text = emit_script(&c);
        prop_assert_eq!(parse_script(&text).unwrap(), c.normalize());
        prop_assert_eq!(emit_script(&parse_script(&text).unwrap()), text);
    }

    #[test]
    fn normalize_keeps_semantics(c in condition(), w in witness(), ctx in ctx()) {
        prop_assert_eq!(evaluate(&c, &w, &ctx), evaluate(&c.normalize(), &w, &ctx));
    }

    #[test]
    fn ledger_invariants_hold(seed in any::<u64>()) {
        common::fuzz_run(seed, 40).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn r_predicate_is_monotone(bits in 0u8..32, more in 0u8..32, p in 0usize..10, who in 0usize..3) {
        let party = [Party::A, Party::B, Party::Miner(0)][who];
        let path = Path::ALL[p];
        let small = KnowledgeFlags::from_bits(bits);
        let big = KnowledgeFlags::from_bits(bits | more);
        if r_predicate(path, party, small) {
            prop_assert!(r_predicate(path, party, big));
        }
    }
}

#[test]
fn fuzz_workload_is_not_trivial() {
    let stats: Vec<_> = (0..50).map(|s| common::fuzz_run(s, 40).unwrap()).collect();
    assert!(stats.iter().map(|s| s.confirmed).sum::<usize>() > 50);
    let distinct: BTreeSet<usize> = stats.iter().map(|s| s.confirmed).collect();
    assert!(distinct.len() > 2);
}
