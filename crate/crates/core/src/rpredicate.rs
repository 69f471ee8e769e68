//! The timelock-relaxed redeem predicate over (path, party, known
//! preimages), the matching reachability function, and an exhaustive
//! comparison against the condition evaluator on the built 4-Swap locks.

use std::collections::BTreeSet;
use std::fmt;

use crate::conditions::{evaluate, Condition, EvalContext, Witness};
use crate::swaps::{names, Protocol, Secret, Variant};
use crate::types::{Chain, Party};

/// The miner as seen by the predicate.
pub const MINER: Party = Party::Miner(0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Path {
    ClaimBA,
    ClaimAB,
    EclaimAB,
    ErefundAA,
    RefundAA,
    RefundBB,
    Slash1AM,
    Slash1BM,
    Slash2AM,
    Slash2BM,
}

impl Path {
    pub const ALL: [Path; 10] = [
        Path::ClaimBA,
        Path::ClaimAB,
        Path::EclaimAB,
        Path::ErefundAA,
        Path::RefundAA,
        Path::RefundBB,
        Path::Slash1AM,
        Path::Slash1BM,
        Path::Slash2AM,
        Path::Slash2BM,
    ];

    /// Lock and disjunct index implementing this path.
    pub fn disjunct(self) -> (Chain, usize) {
        match self {
            Path::ClaimBA => (Chain::B, 0),
            Path::RefundBB => (Chain::B, 1),
            Path::Slash1BM => (Chain::B, 2),
            Path::Slash2BM => (Chain::B, 3),
            Path::ClaimAB => (Chain::A, 0),
            Path::EclaimAB => (Chain::A, 1),
            Path::ErefundAA => (Chain::A, 2),
            Path::RefundAA => (Chain::A, 3),
            Path::Slash1AM => (Chain::A, 4),
            Path::Slash2AM => (Chain::A, 5),
        }
    }

    pub fn is_slash(self) -> bool {
        matches!(self, Path::Slash1AM | Path::Slash1BM | Path::Slash2AM | Path::Slash2BM)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Path::ClaimBA => "claim_B-A",
            Path::ClaimAB => "claim_A-B",
            Path::EclaimAB => "eclaim_A-B",
            Path::ErefundAA => "erefund_A-A",
            Path::RefundAA => "refund_A-A",
            Path::RefundBB => "refund_B-B",
            Path::Slash1AM => "slash_1,A-M",
            Path::Slash1BM => "slash_1,B-M",
            Path::Slash2AM => "slash_2,A-M",
            Path::Slash2BM => "slash_2,B-M",
        })
    }
}

/// Which preimages the spender holds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KnowledgeFlags {
    pub h_m: bool,
    pub h_br: bool,
    pub h_e: bool,
    pub h_r1: bool,
    pub h_r2: bool,
}

impl KnowledgeFlags {
    /// Bit 0 = h_m, 1 = h_br, 2 = h_e, 3 = h_r1, 4 = h_r2.
    pub fn from_bits(bits: u8) -> Self {
        KnowledgeFlags {
            h_m: bits & 1 != 0,
            h_br: bits & 2 != 0,
            h_e: bits & 4 != 0,
            h_r1: bits & 8 != 0,
            h_r2: bits & 16 != 0,
        }
    }

    pub fn all() -> impl Iterator<Item = KnowledgeFlags> {
        (0u8..32).map(KnowledgeFlags::from_bits)
    }

    pub fn secrets(self) -> Vec<Secret> {
        [(self.h_m, Secret::M), (self.h_br, Secret::Br), (self.h_e, Secret::E), (self.h_r1, Secret::R1), (self.h_r2, Secret::R2)]
            .into_iter()
            .filter(|(on, _)| *on)
            .map(|(_, s)| s)
            .collect()
    }
}

impl fmt::Display for KnowledgeFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = |x: bool| u8::from(x);
        write!(f, "m={} br={} e={} r1={} r2={}", b(self.h_m), b(self.h_br), b(self.h_e), b(self.h_r1), b(self.h_r2))
    }
}

pub fn r_predicate(path: Path, party: Party, k: KnowledgeFlags) -> bool {
    match path {
        Path::ClaimBA => party == Party::A && k.h_m && k.h_br,
        Path::ClaimAB => party == Party::B && k.h_m,
        Path::EclaimAB => party == Party::B && k.h_m && k.h_e,
        Path::RefundAA | Path::ErefundAA => party == Party::A && k.h_r1,
        Path::RefundBB => party == Party::B && k.h_r2,
        Path::Slash1AM | Path::Slash1BM => k.h_m && k.h_r1,
        Path::Slash2AM | Path::Slash2BM => k.h_m && k.h_br && k.h_r2,
    }
}

/// Which secrets are already public, and whether `s_e` was shared.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReachState {
    pub pub_m: bool,
    pub pub_r1: bool,
    pub pub_r2: bool,
    pub pub_br: bool,
    pub shared: bool,
}

/// Redeeming transactions each party can initiate in `state`.
pub fn reachability(state: ReachState) -> BTreeSet<(Party, Path)> {
    let mut out = BTreeSet::from([
        (Party::B, Path::ClaimAB),
        (Party::B, Path::RefundBB),
        (Party::A, Path::ErefundAA),
        (Party::A, Path::RefundAA),
    ]);
    if state.shared {
        out.insert((Party::B, Path::EclaimAB));
    }
    if state.pub_m {
        out.insert((Party::A, Path::ClaimBA));
    }
    if state.pub_m && state.pub_r1 {
        out.extend([(MINER, Path::Slash1AM), (MINER, Path::Slash1BM)]);
    }
    if state.pub_m && state.pub_br && state.pub_r2 {
        out.extend([(MINER, Path::Slash2AM), (MINER, Path::Slash2BM)]);
    }
    out
}

/// The state after the given path's transaction is published.
pub fn publish_effect(state: ReachState, path: Path) -> ReachState {
    let mut s = state;
    match path {
        Path::ClaimAB | Path::EclaimAB => s.pub_m = true,
        Path::ClaimBA => {
            s.pub_m = true;
            s.pub_br = true;
        }
        Path::ErefundAA | Path::RefundAA => s.pub_r1 = true,
        Path::RefundBB => s.pub_r2 = true,
        Path::Slash1AM | Path::Slash1BM | Path::Slash2AM | Path::Slash2BM => {}
    }
    s
}

/// Every state reachable from `start` by publishing reachable paths.
pub fn reachable_states(start: ReachState) -> BTreeSet<ReachState> {
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(s) = stack.pop() {
        for (_, path) in reachability(s) {
            let next = publish_effect(s, path);
            if seen.insert(next) {
                stack.push(next);
            }
        }
    }
    seen
}

/// What `party` knows in `state`: its own secrets plus everything public.
pub fn knowledge_in(state: ReachState, party: Party) -> KnowledgeFlags {
    match party {
        Party::A => KnowledgeFlags { h_m: state.pub_m, h_br: true, h_e: true, h_r1: true, h_r2: state.pub_r2 },
        Party::B => KnowledgeFlags { h_m: true, h_br: state.pub_br, h_e: state.shared, h_r1: state.pub_r1, h_r2: true },
        Party::Miner(_) => KnowledgeFlags {
            h_m: state.pub_m,
            h_br: state.pub_br,
            h_e: false,
            h_r1: state.pub_r1,
            h_r2: state.pub_r2,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disagreement {
    pub flags: KnowledgeFlags,
    pub party: Party,
    pub path: Path,
    pub predicate: bool,
    pub evaluator: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub cases: usize,
    pub disagreements: Vec<Disagreement>,
}

impl EquivalenceReport {
    pub fn ok(&self) -> bool {
        self.disagreements.is_empty()
    }
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cases={} disagreements={}", self.cases, self.disagreements.len())?;
        for d in &self.disagreements {
            writeln!(f, "{}\t{}\t{}\tpredicate={}\tevaluator={}", d.flags, d.party, d.path, d.predicate, d.evaluator)?;
        }
        Ok(())
    }
}

/// Deliberate lock mutations for checking that the oracle notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// A's claim on chain B no longer requires `s_br`.
    DropBrFromClaimB,
}

fn lock_conditions(protocol: &Protocol, fault: Option<Fault>) -> [Condition; 2] {
    let cond = |name: &str| protocol.template(name).tx.outputs[0].condition.clone();
    let lock_a = cond(names::LOCK_A);
    let mut lock_b = cond(names::LOCK_B);
    if fault == Some(Fault::DropBrFromClaimB) {
        let br = Condition::Hashlock(protocol.secrets.digest(Secret::Br));
        if let Condition::Any(disjuncts) = &mut lock_b {
            if let Condition::All(leaves) = &mut disjuncts[0] {
                leaves.retain(|l| *l != br);
            }
        }
    }
    [lock_a, lock_b]
}

/// Compares [`r_predicate`] with the evaluator on every flag vector, party
/// and path, timelocks relaxed.
pub fn oracle_equivalence(protocol: &Protocol, fault: Option<Fault>) -> EquivalenceReport {
    assert_eq!(protocol.variant, Variant::FourSwap, "the predicate describes full 4-Swap");
    let locks = lock_conditions(protocol, fault);
    let ctx = EvalContext::relaxed(protocol.params.session);
    let mut cases = 0;
    let mut disagreements = Vec::new();
    for flags in KnowledgeFlags::all() {
        let preimages: Vec<_> = flags.secrets().into_iter().map(|s| protocol.secrets.preimage(s).clone()).collect();
        for party in [Party::A, Party::B, MINER] {
            let witness = Witness::signed_by([party]).with_preimages(preimages.iter().cloned());
            for path in Path::ALL {
                cases += 1;
                let (chain, i) = path.disjunct();
                let evaluator = locks[chain.index()].disjuncts().get(i).is_some_and(|c| evaluate(c, &witness, &ctx));
                let predicate = r_predicate(path, party, flags);
                if evaluator != predicate {
                    disagreements.push(Disagreement { flags, party, path, predicate, evaluator });
                }
            }
        }
    }
    EquivalenceReport { cases, disagreements }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::swaps::SwapParams;

    fn flags(bits: u8) -> KnowledgeFlags {
        KnowledgeFlags::from_bits(bits)
    }

    #[test]
    fn predicate_rows() {
        let m = KnowledgeFlags { h_m: true, ..Default::default() };
        assert!(r_predicate(Path::ClaimAB, Party::B, m));
        assert!(!r_predicate(Path::ClaimAB, Party::A, m));
        let m_r1 = KnowledgeFlags { h_r1: true, ..m };
        assert!(r_predicate(Path::Slash1AM, MINER, m_r1));
        assert!(!r_predicate(Path::Slash2BM, MINER, m_r1));
        assert!(r_predicate(Path::ErefundAA, Party::A, flags(8)));
    }

    #[test]
    fn reachability_rows() {
        let base = reachability(ReachState::default());
        assert_eq!(
            base,
            BTreeSet::from([
                (Party::B, Path::ClaimAB),
                (Party::B, Path::RefundBB),
                (Party::A, Path::ErefundAA),
                (Party::A, Path::RefundAA),
            ])
        );
        let shared = reachability(ReachState { shared: true, ..Default::default() });
        assert_eq!(shared.difference(&base).copied().collect::<Vec<_>>(), vec![(Party::B, Path::EclaimAB)]);
        let both = reachability(ReachState { pub_m: true, pub_r1: true, ..Default::default() });
        assert!(both.contains(&(MINER, Path::Slash1AM)) && both.contains(&(MINER, Path::Slash1BM)));
    }

    #[test]
    fn evaluator_agrees_on_built_locks() {
        let p = Protocol::new(Variant::FourSwap, SwapParams::default(), 11).unwrap();
        let report = oracle_equivalence(&p, None);
        assert_eq!(report.cases, 32 * 3 * 10);
        assert!(report.ok(), "{report}");
    }

    #[test]
    fn dropped_leaf_is_detected() {
        let p = Protocol::new(Variant::FourSwap, SwapParams::default(), 11).unwrap();
        let report = oracle_equivalence(&p, Some(Fault::DropBrFromClaimB));
        assert!(!report.ok());
        assert!(report.disagreements.iter().all(|d| d.path == Path::ClaimBA));
    }

    #[test]
    fn empty_knowledge_only_denies() {
        for party in [Party::A, Party::B, MINER] {
            assert!(Path::ALL.iter().all(|&p| !r_predicate(p, party, KnowledgeFlags::default())));
        }
    }

    #[test]
    fn fixpoint_states_agree_with_predicate() {
        for shared in [false, true] {
            for state in reachable_states(ReachState { shared, ..Default::default() }) {
                let reach = reachability(state);
                for party in [Party::A, Party::B, MINER] {
                    let k = knowledge_in(state, party);
                    for path in Path::ALL {
                        if path.is_slash() != party.is_miner() {
                            continue;
                        }
                        assert_eq!(reach.contains(&(party, path)), r_predicate(path, party, k), "{state:?} {party} {path}");
                    }
                }
            }
        }
    }
}
