//! Spending-condition algebra.
//!
//! A [`Condition`] is a tree of hashlocks, timelocks, signer requirements and
//! anyone-can-spend leaves under `All`/`Any`. Outputs of every transaction in
//! the simulator are guarded by one. Two independent routes decide whether a
//! witness satisfies a condition: [`evaluate`] walks the tree directly, while
//! [`satisfying_paths`] expands it into disjunctive normal form so a witness
//! can be checked against each [`RedeemPath`].

mod script;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::types::{Party, Round};

pub use script::{emit_script, parse_script, ScriptError};

/// Identifier mixed into every hashlock digest, scoping secrets to one swap.
pub type SessionId = u64;

/// Output of the session hash.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Digest(pub [u8; 32]);

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", &hex::encode(self.0)[..12])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

/// A hashlock preimage (secret).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Preimage(pub Vec<u8>);

impl fmt::Debug for Preimage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Preimage({})", hex::encode(&self.0[..self.0.len().min(6)]))
    }
}

/// `H(sid ‖ preimage)` with SHA-256.
pub fn session_hash(session: SessionId, preimage: &Preimage) -> Digest {
    let mut hasher = Sha256::new();
    hasher.update(session.to_be_bytes());
    hasher.update(&preimage.0);
    Digest(hasher.finalize().into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Timelock {
    /// Spendable once the round is strictly greater than the bound.
    Absolute(Round),
    /// Spendable once at least this many rounds passed since the source
    /// output confirmed.
    Relative(Round),
}

impl Timelock {
    pub fn is_open(self, ctx: &EvalContext) -> bool {
        match self {
            Timelock::Absolute(t) => ctx.current_round > t,
            Timelock::Relative(t) => ctx.current_round.saturating_sub(ctx.source_confirm_round) >= t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    Hashlock(Digest),
    AbsTimelock(Round),
    RelTimelock(Round),
    SigBy { signers: BTreeSet<Party>, threshold: usize },
    AnyoneCanSpend,
    All(Vec<Condition>),
    Any(Vec<Condition>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConditionError {
    #[error("empty {0} node")]
    EmptyNode(&'static str),
    #[error("signer threshold {threshold} out of range for {count} signers")]
    BadThreshold { threshold: usize, count: usize },
}

impl Condition {
    /// Signature of a single party.
    pub fn sig(party: Party) -> Self {
        Condition::SigBy { signers: BTreeSet::from([party]), threshold: 1 }
    }

    /// All of the listed parties must sign.
    pub fn multisig(parties: impl IntoIterator<Item = Party>) -> Self {
        let signers: BTreeSet<Party> = parties.into_iter().collect();
        let threshold = signers.len();
        Condition::SigBy { signers, threshold }
    }

    pub fn validate(&self) -> Result<(), ConditionError> {
        match self {
            Condition::SigBy { signers, threshold } => {
                if *threshold == 0 || *threshold > signers.len() {
                    return Err(ConditionError::BadThreshold {
                        threshold: *threshold,
                        count: signers.len(),
                    });
                }
                Ok(())
            }
            Condition::All(children) | Condition::Any(children) => {
                if children.is_empty() {
                    let kind = if matches!(self, Condition::All(_)) { "All" } else { "Any" };
                    return Err(ConditionError::EmptyNode(kind));
                }
                children.iter().try_for_each(Condition::validate)
            }
            _ => Ok(()),
        }
    }

    /// Top-level disjuncts (a non-`Any` condition is its own single disjunct).
    pub fn disjuncts(&self) -> &[Condition] {
        match self {
            Condition::Any(children) => children,
            other => std::slice::from_ref(other),
        }
    }

    /// Flattens nested `All`/`Any` of the same kind and unwraps singletons.
    pub fn normalize(&self) -> Condition {
        match self {
            Condition::All(children) | Condition::Any(children) => {
                let is_all = matches!(self, Condition::All(_));
                let mut flat = Vec::with_capacity(children.len());
                for child in children.iter().map(Condition::normalize) {
                    match child {
                        Condition::All(inner) if is_all => flat.extend(inner),
                        Condition::Any(inner) if !is_all => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                if flat.len() == 1 {
                    flat.pop().unwrap()
                } else if is_all {
                    Condition::All(flat)
                } else {
                    Condition::Any(flat)
                }
            }
            leaf => leaf.clone(),
        }
    }
}

/// Data offered by a spender.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Witness {
    pub preimages: BTreeSet<Preimage>,
    pub signers: BTreeSet<Party>,
    /// Index into [`satisfying_paths`] of the guarded condition. Advisory:
    /// it only selects which timelocks gate activity.
    pub chosen_path: Option<usize>,
}

impl Witness {
    pub fn signed_by(parties: impl IntoIterator<Item = Party>) -> Self {
        Witness { signers: parties.into_iter().collect(), ..Default::default() }
    }

    pub fn with_preimages(mut self, preimages: impl IntoIterator<Item = Preimage>) -> Self {
        self.preimages.extend(preimages);
        self
    }

    pub fn with_path(mut self, path: usize) -> Self {
        self.chosen_path = Some(path);
        self
    }
}

/// Round context in which a spend is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalContext {
    pub current_round: Round,
    pub source_confirm_round: Round,
    pub session: SessionId,
}

impl EvalContext {
    /// A context where every timelock is open.
    pub fn relaxed(session: SessionId) -> Self {
        EvalContext { current_round: Round::MAX, source_confirm_round: 0, session }
    }
}

/// Decides whether `witness` satisfies `condition` in `ctx`.
pub fn evaluate(condition: &Condition, witness: &Witness, ctx: &EvalContext) -> bool {
    match condition {
        Condition::Hashlock(digest) => {
            witness.preimages.iter().any(|p| session_hash(ctx.session, p) == *digest)
        }
        Condition::AbsTimelock(t) => Timelock::Absolute(*t).is_open(ctx),
        Condition::RelTimelock(t) => Timelock::Relative(*t).is_open(ctx),
        Condition::SigBy { signers, threshold } => {
            signers.intersection(&witness.signers).count() >= *threshold
        }
        Condition::AnyoneCanSpend => true,
        Condition::All(children) => children.iter().all(|c| evaluate(c, witness, ctx)),
        Condition::Any(children) => children.iter().any(|c| evaluate(c, witness, ctx)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SignerRequirement {
    pub signers: BTreeSet<Party>,
    pub threshold: usize,
}

/// One conjunctive way of spending an output.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RedeemPath {
    pub required_preimages: BTreeSet<Digest>,
    pub required_signers: Vec<SignerRequirement>,
    pub timelocks: BTreeSet<Timelock>,
    pub anyone_can_spend: bool,
}

impl RedeemPath {
    /// True when the witness supplies every preimage and signature on the
    /// path, ignoring timelocks.
    pub fn covered_ignoring_time(&self, witness: &Witness, session: SessionId) -> bool {
        let revealed: BTreeSet<Digest> =
            witness.preimages.iter().map(|p| session_hash(session, p)).collect();
        self.required_preimages.is_subset(&revealed)
            && self
                .required_signers
                .iter()
                .all(|req| req.signers.intersection(&witness.signers).count() >= req.threshold)
    }

    pub fn timelocks_open(&self, ctx: &EvalContext) -> bool {
        self.timelocks.iter().all(|t| t.is_open(ctx))
    }

    pub fn covered(&self, witness: &Witness, ctx: &EvalContext) -> bool {
        self.covered_ignoring_time(witness, ctx.session) && self.timelocks_open(ctx)
    }

    /// Whether `party` alone (no preimages) can walk this path.
    pub fn needs_only_signature_of(&self, party: Party) -> bool {
        self.required_preimages.is_empty()
            && !self.anyone_can_spend
            && !self.required_signers.is_empty()
            && self.required_signers.iter().all(|r| {
                r.signers.contains(&party) && r.threshold <= 1
            })
    }
}

/// Expands a condition into its disjunctive normal form, one [`RedeemPath`]
/// per distinct conjunct, in left-to-right tree order.
pub fn satisfying_paths(condition: &Condition) -> Vec<RedeemPath> {
    let mut out: Vec<RedeemPath> = Vec::new();
    for conjunct in dnf(condition) {
        let mut path = RedeemPath::default();
        for leaf in conjunct {
            match leaf {
                Condition::Hashlock(d) => {
                    path.required_preimages.insert(*d);
                }
                Condition::AbsTimelock(t) => {
                    path.timelocks.insert(Timelock::Absolute(*t));
                }
                Condition::RelTimelock(t) => {
                    path.timelocks.insert(Timelock::Relative(*t));
                }
                Condition::SigBy { signers, threshold } => {
                    let req = SignerRequirement { signers: signers.clone(), threshold: *threshold };
                    if !path.required_signers.contains(&req) {
                        path.required_signers.push(req);
                    }
                }
                Condition::AnyoneCanSpend => path.anyone_can_spend = true,
                Condition::All(_) | Condition::Any(_) => unreachable!("dnf yields leaves only"),
            }
        }
        path.required_signers.sort();
        if !out.contains(&path) {
            out.push(path);
        }
    }
    out
}

fn dnf(condition: &Condition) -> Vec<Vec<&Condition>> {
    match condition {
        Condition::Any(children) => children.iter().flat_map(dnf).collect(),
        Condition::All(children) => {
            let mut acc: Vec<Vec<&Condition>> = vec![Vec::new()];
            for child in children {
                let expanded = dnf(child);
                acc = acc
                    .iter()
                    .flat_map(|prefix| {
                        expanded.iter().map(move |suffix| {
                            let mut joined = prefix.clone();
                            joined.extend(suffix.iter().copied());
                            joined
                        })
                    })
                    .collect();
            }
            acc
        }
        leaf => vec![vec![leaf]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn secret(tag: u8) -> Preimage {
        Preimage(vec![tag; 32])
    }

    fn ctx(round: Round) -> EvalContext {
        EvalContext { current_round: round, source_confirm_round: 0, session: 7 }
    }

    fn lock(tag: u8) -> Condition {
        Condition::Hashlock(session_hash(7, &secret(tag)))
    }

    #[test]
    fn anyone_can_spend_needs_nothing() {
        let c = Condition::Any(vec![Condition::AnyoneCanSpend]);
        assert!(evaluate(&c, &Witness::default(), &ctx(0)));
    }

    #[test]
    fn absolute_timelock_is_strict() {
        let c = Condition::All(vec![lock(1), Condition::AbsTimelock(10)]);
        let w = Witness::default().with_preimages([secret(1)]);
        assert!(evaluate(&c, &w, &ctx(11)));
        assert!(!evaluate(&c, &w, &ctx(10)));
    }

    #[test]
    fn relative_timelock_counts_from_source() {
        let c = Condition::RelTimelock(3);
        let mut cx = ctx(8);
        cx.source_confirm_round = 5;
        assert!(evaluate(&c, &Witness::default(), &cx));
        cx.current_round = 7;
        assert!(!evaluate(&c, &Witness::default(), &cx));
    }

    #[test]
    fn slash_disjunct_needs_no_signer() {
        let c = Condition::All(vec![lock(1), lock(2), Condition::AnyoneCanSpend]);
        let w = Witness::default().with_preimages([secret(1), secret(2)]);
        assert!(evaluate(&c, &w, &ctx(0)));
        let partial = Witness::default().with_preimages([secret(1)]);
        assert!(!evaluate(&c, &partial, &ctx(0)));
    }

    #[test]
    fn hashlock_is_session_scoped() {
        let c = lock(1);
        let w = Witness::default().with_preimages([secret(1)]);
        let mut other = ctx(0);
        other.session = 8;
        assert!(evaluate(&c, &w, &ctx(0)));
        assert!(!evaluate(&c, &w, &other));
    }

    #[test]
    fn threshold_signatures() {
        let c = Condition::SigBy { signers: BTreeSet::from([Party::A, Party::B]), threshold: 1 };
        assert!(evaluate(&c, &Witness::signed_by([Party::B]), &ctx(0)));
        let both = Condition::multisig([Party::A, Party::B]);
        assert!(!evaluate(&both, &Witness::signed_by([Party::B]), &ctx(0)));
        assert!(evaluate(&both, &Witness::signed_by([Party::A, Party::B]), &ctx(0)));
    }

    #[test]
    fn paths_of_disjunction_and_distribution() {
        let (x, y, z) = (lock(1), lock(2), lock(3));
        assert_eq!(satisfying_paths(&Condition::Any(vec![x.clone(), y.clone()])).len(), 2);
        let paths = satisfying_paths(&Condition::All(vec![x, Condition::Any(vec![y, z])]));
        assert_eq!(paths.len(), 2);
        let d = |t| session_hash(7, &secret(t));
        assert_eq!(paths[0].required_preimages, BTreeSet::from([d(1), d(2)]));
        assert_eq!(paths[1].required_preimages, BTreeSet::from([d(1), d(3)]));
    }

    #[test]
    fn duplicate_conjuncts_collapse() {
        let c = Condition::Any(vec![lock(1), lock(1)]);
        assert_eq!(satisfying_paths(&c).len(), 1);
    }

    #[test]
    fn validation_rejects_malformed() {
        assert!(Condition::All(vec![]).validate().is_err());
        let bad = Condition::SigBy { signers: BTreeSet::from([Party::A]), threshold: 2 };
        assert_eq!(bad.validate(), Err(ConditionError::BadThreshold { threshold: 2, count: 1 }));
        assert!(Condition::multisig([Party::A, Party::B]).validate().is_ok());
    }

    #[test]
    fn normalize_flattens() {
        let (x, y, z) = (lock(1), lock(2), lock(3));
        let nested = Condition::All(vec![
            Condition::All(vec![x.clone(), y.clone()]),
            Condition::Any(vec![z.clone()]),
        ]);
        assert_eq!(nested.normalize(), Condition::All(vec![x, y, z]));
    }
}
