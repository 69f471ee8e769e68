//! Two UTXO chains with mempools, a global round clock and fee-collecting
//! miners.
//!
//! A [`WorldState`] is a plain value. Every operation is available both as a
//! mutating `apply_*` method that reports the [`LedgerEvent`]s it produced and
//! as a snapshot-returning wrapper (`publish`, `confirm`, `step_round`) that
//! leaves the original untouched.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::conditions::{
    evaluate, satisfying_paths, Condition, ConditionError, EvalContext, Preimage, SessionId,
    Witness,
};
use crate::types::{Amount, Chain, Party, Round};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TxId(pub [u8; 32]);

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(&self.0[..5]))
    }
}

impl fmt::Debug for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TxId({self})")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Outpoint {
    pub tx: TxId,
    pub index: u32,
}

impl fmt::Display for Outpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.tx, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Output {
    pub value: Amount,
    pub condition: Condition,
    /// Intended recipient, for documentation only.
    pub beneficiary_note: Option<String>,
}

impl Output {
    pub fn new(value: Amount, condition: Condition) -> Self {
        Output { value, condition, beneficiary_note: None }
    }

    pub fn to_party(value: Amount, party: Party) -> Self {
        Output { value, condition: Condition::sig(party), beneficiary_note: Some(party.to_string()) }
    }

    pub fn noted(mut self, note: impl Into<String>) -> Self {
        self.beneficiary_note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Input {
    pub outpoint: Outpoint,
    pub witness: Witness,
}

/// A transaction. Its id commits to the chain, label, spent outpoints and
/// outputs, but not to witnesses or publication metadata, so a pre-signed
/// template keeps its id when it is completed and published.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transaction {
    id: TxId,
    pub chain: Chain,
    pub label: String,
    pub inputs: Vec<Input>,
    pub outputs: Vec<Output>,
    pub publisher: Option<Party>,
    pub publish_round: Option<Round>,
}

impl Transaction {
    pub fn new(chain: Chain, label: impl Into<String>, inputs: Vec<Input>, outputs: Vec<Output>) -> Self {
        let label = label.into();
        let mut hasher = Sha256::new();
        hasher.update([chain.index() as u8]);
        hasher.update(label.as_bytes());
        for input in &inputs {
            hasher.update(input.outpoint.tx.0);
            hasher.update(input.outpoint.index.to_be_bytes());
        }
        for output in &outputs {
            hasher.update(output.value.to_be_bytes());
            hasher.update(format!("{:?}", output.condition).as_bytes());
        }
        let id = TxId(hasher.finalize().into());
        Transaction { id, chain, label, inputs, outputs, publisher: None, publish_round: None }
    }

    pub fn id(&self) -> TxId {
        self.id
    }

    pub fn outpoint(&self, index: u32) -> Outpoint {
        Outpoint { tx: self.id, index }
    }

    pub fn output_total(&self) -> Amount {
        self.outputs.iter().map(|o| o.value).sum()
    }

    pub fn revealed_preimages(&self) -> impl Iterator<Item = &Preimage> {
        self.inputs.iter().flat_map(|i| i.witness.preimages.iter())
    }

    fn spends(&self) -> impl Iterator<Item = Outpoint> + '_ {
        self.inputs.iter().map(|i| i.outpoint)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CreatedOutput {
    pub output: Output,
    pub confirm_round: Round,
    pub spent_by: Option<TxId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainState {
    pub confirmed: Vec<(Round, Transaction)>,
    pub mempool: BTreeMap<TxId, Transaction>,
    /// Every output created by a confirmed transaction, spent or not.
    pub outputs: BTreeMap<Outpoint, CreatedOutput>,
}

impl ChainState {
    pub fn utxo_set(&self) -> impl Iterator<Item = (&Outpoint, &Output)> {
        self.outputs.iter().filter(|(_, c)| c.spent_by.is_none()).map(|(op, c)| (op, &c.output))
    }

    pub fn is_unspent(&self, outpoint: &Outpoint) -> bool {
        self.outputs.get(outpoint).is_some_and(|c| c.spent_by.is_none())
    }

    pub fn is_confirmed(&self, id: TxId) -> bool {
        self.confirmed.iter().any(|(_, tx)| tx.id() == id)
    }

    pub fn confirmation_round(&self, id: TxId) -> Option<Round> {
        self.confirmed.iter().find(|(_, tx)| tx.id() == id).map(|(r, _)| *r)
    }

    fn input_total(&self, tx: &Transaction) -> Option<Amount> {
        tx.spends().map(|op| self.outputs.get(&op).map(|c| c.output.value)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("negative genesis balance {amount} for {party} on chain {chain}")]
    NegativeBalance { party: Party, chain: Chain, amount: i64 },
    #[error("input {0} does not reference a confirmed output")]
    UnknownOutpoint(Outpoint),
    #[error("input {0} lives on the other chain")]
    CrossChainInput(Outpoint),
    #[error("outpoint {0} spent twice by one transaction")]
    DuplicateInput(Outpoint),
    #[error("outputs {outputs} exceed inputs {inputs}")]
    ValueImbalance { inputs: Amount, outputs: Amount },
    #[error("transaction has no inputs")]
    NoInputs,
    #[error(transparent)]
    MalformedCondition(#[from] ConditionError),
    #[error("transaction {0} is not in the mempool")]
    NotInMempool(TxId),
    #[error("transaction {0} is not active yet")]
    TimelockNotExpired(TxId),
    #[error("transaction {0} spends an already spent output")]
    Conflict(TxId),
    #[error("a witness of transaction {0} does not satisfy its output condition")]
    ConditionUnsatisfied(TxId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Genesis,
    Publish,
    Confirm,
    Evict,
    /// Off-chain message between parties.
    Message,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Genesis => "genesis",
            EventKind::Publish => "publish",
            EventKind::Confirm => "confirm",
            EventKind::Evict => "evict",
            EventKind::Message => "message",
        })
    }
}

/// One line of the trace log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEvent {
    pub round: Round,
    pub chain: Option<Chain>,
    pub kind: EventKind,
    pub tx: Option<TxId>,
    pub label: String,
    pub actor: Party,
    pub fee: Amount,
}

impl fmt::Display for LedgerEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let chain = self.chain.map_or_else(|| "-".to_string(), |c| c.to_string());
        let tx = self.tx.map_or_else(|| "-".to_string(), |t| t.to_string());
        write!(
            f,
            "round={} chain={} kind={} tx={} actor={} fee={} label={}",
            self.round, chain, self.kind, tx, self.actor, self.fee, self.label
        )
    }
}

/// Snapshot of both chains, their mempools and what every party knows.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldState {
    pub round: Round,
    pub session: SessionId,
    chains: [ChainState; 2],
    knowledge: BTreeMap<Party, BTreeSet<Preimage>>,
    /// Preimages that appeared in any witness, mempool or chain. Miners read
    /// this set directly.
    revealed: BTreeSet<Preimage>,
    /// Revealed during the current round; parties observe them next round.
    pending_reveal: BTreeSet<Preimage>,
    fees: BTreeMap<Party, [Amount; 2]>,
    genesis: BTreeMap<(Party, Chain), Amount>,
    supply: [Amount; 2],
}

impl WorldState {
    /// Materializes each balance as a single signature-guarded UTXO.
    pub fn genesis(session: SessionId, balances: &[(Party, Chain, i64)]) -> Result<Self, LedgerError> {
        let mut world = WorldState {
            round: 0,
            session,
            chains: Default::default(),
            knowledge: BTreeMap::from([(Party::A, BTreeSet::new()), (Party::B, BTreeSet::new())]),
            revealed: BTreeSet::new(),
            pending_reveal: BTreeSet::new(),
            fees: BTreeMap::new(),
            genesis: BTreeMap::new(),
            supply: [0, 0],
        };
        for &(party, chain, amount) in balances {
            if amount < 0 {
                return Err(LedgerError::NegativeBalance { party, chain, amount });
            }
        }
        for chain in Chain::BOTH {
            let outputs: Vec<Output> = balances
                .iter()
                .filter(|(_, c, _)| *c == chain)
                .map(|&(party, _, amount)| Output::to_party(amount as Amount, party))
                .collect();
            if outputs.is_empty() {
                continue;
            }
            let tx = Transaction::new(chain, "genesis", Vec::new(), outputs);
            for (i, out) in tx.outputs.iter().enumerate() {
                let party: Party = out.beneficiary_note.as_deref().unwrap().parse().unwrap();
                *world.genesis.entry((party, chain)).or_default() += out.value;
                world.chains[chain.index()].outputs.insert(
                    tx.outpoint(i as u32),
                    CreatedOutput { output: out.clone(), confirm_round: 0, spent_by: None },
                );
            }
            world.supply[chain.index()] = tx.output_total();
            world.chains[chain.index()].confirmed.push((0, tx));
        }
        Ok(world)
    }

    pub fn chain(&self, chain: Chain) -> &ChainState {
        &self.chains[chain.index()]
    }

    pub fn supply(&self, chain: Chain) -> Amount {
        self.supply[chain.index()]
    }

    pub fn genesis_balance(&self, party: Party, chain: Chain) -> Amount {
        self.genesis.get(&(party, chain)).copied().unwrap_or(0)
    }

    pub fn knows(&self, party: Party, preimage: &Preimage) -> bool {
        if party.is_miner() {
            return self.revealed.contains(preimage);
        }
        self.knowledge.get(&party).is_some_and(|k| k.contains(preimage))
    }

    pub fn knowledge(&self, party: Party) -> BTreeSet<Preimage> {
        if party.is_miner() {
            return self.revealed.clone();
        }
        self.knowledge.get(&party).cloned().unwrap_or_default()
    }

    /// Every preimage that has appeared in a witness so far.
    pub fn revealed(&self) -> &BTreeSet<Preimage> {
        &self.revealed
    }

    /// Immediate knowledge: own secrets and off-chain messages.
    pub fn learn(&mut self, party: Party, preimage: Preimage) {
        self.knowledge.entry(party).or_default().insert(preimage);
    }

    pub fn fees_collected(&self, miner: Party, chain: Chain) -> Amount {
        self.fees.get(&miner).map_or(0, |f| f[chain.index()])
    }

    pub fn total_fees(&self, chain: Chain) -> Amount {
        self.fees.values().map(|f| f[chain.index()]).sum()
    }

    pub fn miners(&self) -> impl Iterator<Item = Party> + '_ {
        self.fees.keys().copied()
    }

    /// Looks up the confirmed output behind an outpoint on `chain`.
    pub fn output(&self, chain: Chain, outpoint: &Outpoint) -> Option<&CreatedOutput> {
        self.chain(chain).outputs.get(outpoint)
    }

    pub fn fee_of(&self, tx: &Transaction) -> Option<Amount> {
        self.chain(tx.chain).input_total(tx).and_then(|i| i.checked_sub(tx.output_total()))
    }

    fn check_well_formed(&self, tx: &Transaction) -> Result<Amount, LedgerError> {
        if tx.inputs.is_empty() {
            return Err(LedgerError::NoInputs);
        }
        let mut seen = BTreeSet::new();
        for op in tx.spends() {
            if !seen.insert(op) {
                return Err(LedgerError::DuplicateInput(op));
            }
            if !self.chain(tx.chain).outputs.contains_key(&op) {
                if self.chain(tx.chain.other()).outputs.contains_key(&op) {
                    return Err(LedgerError::CrossChainInput(op));
                }
                return Err(LedgerError::UnknownOutpoint(op));
            }
        }
        for out in &tx.outputs {
            out.condition.validate()?;
        }
        let inputs = self.chain(tx.chain).input_total(tx).unwrap_or(0);
        let outputs = tx.output_total();
        if outputs > inputs {
            return Err(LedgerError::ValueImbalance { inputs, outputs });
        }
        Ok(inputs - outputs)
    }

    /// Adds `tx` to its chain's mempool. Re-publishing a known id is a no-op.
    pub fn apply_publish(&mut self, mut tx: Transaction, publisher: Party) -> Result<Vec<LedgerEvent>, LedgerError> {
        let fee = self.check_well_formed(&tx)?;
        let chain = tx.chain;
        let state = &self.chains[chain.index()];
        if state.mempool.contains_key(&tx.id()) || state.is_confirmed(tx.id()) {
            return Ok(Vec::new());
        }
        if let Some(op) = tx.spends().find(|op| !state.is_unspent(op)) {
            let _ = op;
            return Err(LedgerError::Conflict(tx.id()));
        }
        for p in tx.revealed_preimages() {
            if self.revealed.insert(p.clone()) {
                self.pending_reveal.insert(p.clone());
            }
        }
        tx.publisher = Some(publisher);
        tx.publish_round = Some(self.round);
        let event = LedgerEvent {
            round: self.round,
            chain: Some(chain),
            kind: EventKind::Publish,
            tx: Some(tx.id()),
            label: tx.label.clone(),
            actor: publisher,
            fee,
        };
        self.chains[chain.index()].mempool.insert(tx.id(), tx);
        Ok(vec![event])
    }

    pub fn publish(&self, tx: Transaction, publisher: Party) -> Result<WorldState, LedgerError> {
        let mut next = self.clone();
        next.apply_publish(tx, publisher)?;
        Ok(next)
    }

    /// Whether every input of `tx` is spendable at the current round along
    /// the path its witness selects.
    pub fn is_active(&self, tx: &Transaction) -> bool {
        tx.inputs.iter().all(|input| {
            let Some(created) = self.output(tx.chain, &input.outpoint) else {
                return false;
            };
            let ctx = EvalContext {
                current_round: self.round,
                source_confirm_round: created.confirm_round,
                session: self.session,
            };
            let paths = satisfying_paths(&created.output.condition);
            let candidates: Vec<_> = match input.witness.chosen_path {
                Some(i) => paths.get(i).into_iter().collect(),
                None => paths.iter().collect(),
            };
            candidates.into_iter().any(|p| {
                p.covered_ignoring_time(&input.witness, self.session) && p.timelocks_open(&ctx)
            })
        })
    }

    /// Ids of mempool transactions sharing an input with `tx`.
    pub fn conflicts(&self, tx: &Transaction) -> BTreeSet<TxId> {
        let spends: BTreeSet<Outpoint> = tx.spends().collect();
        self.chain(tx.chain)
            .mempool
            .values()
            .filter(|other| other.id() != tx.id() && other.spends().any(|op| spends.contains(&op)))
            .map(Transaction::id)
            .collect()
    }

    /// Confirms a mempool transaction on behalf of `miner`.
    pub fn apply_confirm(&mut self, miner: Party, chain: Chain, id: TxId) -> Result<Vec<LedgerEvent>, LedgerError> {
        let tx = self.chain(chain).mempool.get(&id).cloned().ok_or(LedgerError::NotInMempool(id))?;
        if tx.spends().any(|op| !self.chain(chain).is_unspent(&op)) {
            return Err(LedgerError::Conflict(id));
        }
        for input in &tx.inputs {
            let created = &self.chain(chain).outputs[&input.outpoint];
            let unlocked = EvalContext {
                current_round: Round::MAX,
                source_confirm_round: created.confirm_round,
                session: self.session,
            };
            if !evaluate(&created.output.condition, &input.witness, &unlocked) {
                return Err(LedgerError::ConditionUnsatisfied(id));
            }
        }
        if !self.is_active(&tx) {
            return Err(LedgerError::TimelockNotExpired(id));
        }
        let fee = self.fee_of(&tx).expect("validated at publication");
        let rivals = self.conflicts(&tx);
        let round = self.round;
        let state = &mut self.chains[chain.index()];
        state.mempool.remove(&id);
        for op in tx.spends() {
            state.outputs.get_mut(&op).expect("checked").spent_by = Some(id);
        }
        for (i, out) in tx.outputs.iter().enumerate() {
            state.outputs.insert(
                tx.outpoint(i as u32),
                CreatedOutput { output: out.clone(), confirm_round: round, spent_by: None },
            );
        }
        let mut events = vec![LedgerEvent {
            round,
            chain: Some(chain),
            kind: EventKind::Confirm,
            tx: Some(id),
            label: tx.label.clone(),
            actor: miner,
            fee,
        }];
        for rival in rivals {
            let gone = state.mempool.remove(&rival).expect("listed by conflicts");
            events.push(LedgerEvent {
                round,
                chain: Some(chain),
                kind: EventKind::Evict,
                tx: Some(rival),
                label: gone.label,
                actor: miner,
                fee: 0,
            });
        }
        state.confirmed.push((round, tx));
        self.fees.entry(miner).or_default()[chain.index()] += fee;
        Ok(events)
    }

    pub fn confirm(&self, miner: Party, chain: Chain, id: TxId) -> Result<WorldState, LedgerError> {
        let mut next = self.clone();
        next.apply_confirm(miner, chain, id)?;
        Ok(next)
    }

    /// Advances the clock and lets every party observe last round's reveals.
    pub fn apply_step_round(&mut self) {
        self.round += 1;
        let fresh = std::mem::take(&mut self.pending_reveal);
        for known in self.knowledge.values_mut() {
            known.extend(fresh.iter().cloned());
        }
    }

    pub fn step_round(&self) -> WorldState {
        let mut next = self.clone();
        next.apply_step_round();
        next
    }

    /// Jumps the clock forward to `round`, propagating reveals once.
    pub fn apply_advance_to(&mut self, round: Round) {
        if round > self.round {
            self.apply_step_round();
            self.round = round;
        }
    }

    /// Sum of unspent outputs that `party`'s signature alone can spend now.
    pub fn balance(&self, party: Party, chain: Chain) -> Amount {
        self.chain(chain)
            .outputs
            .values()
            .filter(|c| c.spent_by.is_none())
            .filter(|c| {
                let ctx = EvalContext {
                    current_round: self.round,
                    source_confirm_round: c.confirm_round,
                    session: self.session,
                };
                satisfying_paths(&c.output.condition)
                    .iter()
                    .any(|p| p.needs_only_signature_of(party) && p.timelocks_open(&ctx))
            })
            .map(|c| c.output.value)
            .sum()
    }

    /// Value of unspent outputs nobody can claim with a bare signature yet.
    pub fn unattributed(&self, chain: Chain, parties: &[Party]) -> Amount {
        let owned: Amount = parties.iter().map(|p| self.balance(*p, chain)).sum();
        let utxo: Amount = self.chain(chain).utxo_set().map(|(_, o)| o.value).sum();
        utxo.saturating_sub(owned)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::session_hash;

    fn world() -> WorldState {
        WorldState::genesis(1, &[(Party::A, Chain::A, 105), (Party::B, Chain::A, 15)]).unwrap()
    }

    fn genesis_outpoint(w: &WorldState, chain: Chain, index: u32) -> Outpoint {
        w.chain(chain).confirmed[0].1.outpoint(index)
    }

    fn pay(w: &WorldState, from: Party, index: u32, to: Party, value: Amount) -> Transaction {
        let input = Input { outpoint: genesis_outpoint(w, Chain::A, index), witness: Witness::signed_by([from]) };
        Transaction::new(Chain::A, "pay", vec![input], vec![Output::to_party(value, to)])
    }

    #[test]
    fn empty_genesis() {
        let w = WorldState::genesis(1, &[]).unwrap();
        assert_eq!(w.round, 0);
        assert!(w.chain(Chain::A).confirmed.is_empty());
        assert!(w.chain(Chain::B).mempool.is_empty());
    }

    #[test]
    fn genesis_balances() {
        let w = world();
        let total: Amount = w.chain(Chain::A).utxo_set().map(|(_, o)| o.value).sum();
        assert_eq!(total, 120);
        assert_eq!(w.chain(Chain::A).utxo_set().count(), 2);
        assert_eq!(w.balance(Party::A, Chain::A), 105);
        assert_eq!(w.balance(Party::B, Chain::A), 15);
        assert_eq!(w.balance(Party::A, Chain::B), 0);
    }

    #[test]
    fn negative_genesis_rejected() {
        let err = WorldState::genesis(1, &[(Party::A, Chain::B, -1)]).unwrap_err();
        assert!(matches!(err, LedgerError::NegativeBalance { .. }));
    }

    #[test]
    fn publish_is_idempotent() {
        let w = world();
        let tx = pay(&w, Party::A, 0, Party::B, 100);
        let w1 = w.publish(tx.clone(), Party::A).unwrap();
        let w2 = w1.publish(tx, Party::A).unwrap();
        assert_eq!(w2.chain(Chain::A).mempool.len(), 1);
        assert_eq!(w1, w2);
    }

    #[test]
    fn malformed_transactions_rejected() {
        let w = world();
        let too_much = pay(&w, Party::A, 0, Party::B, 106);
        assert!(matches!(w.publish(too_much, Party::A), Err(LedgerError::ValueImbalance { .. })));
        let op = genesis_outpoint(&w, Chain::A, 0);
        let input = Input { outpoint: op, witness: Witness::signed_by([Party::A]) };
        let cross = Transaction::new(Chain::B, "x", vec![input.clone()], vec![]);
        assert_eq!(w.publish(cross, Party::A), Err(LedgerError::CrossChainInput(op)));
        let dup = Transaction::new(Chain::A, "d", vec![input.clone(), input], vec![]);
        assert_eq!(w.publish(dup, Party::A), Err(LedgerError::DuplicateInput(op)));
    }

    #[test]
    fn confirm_moves_value_and_pays_fee() {
        let w = world();
        let tx = pay(&w, Party::A, 0, Party::B, 104);
        let id = tx.id();
        let w = w.publish(tx, Party::A).unwrap().confirm(Party::Miner(0), Chain::A, id).unwrap();
        assert_eq!(w.balance(Party::B, Chain::A), 15 + 104);
        assert_eq!(w.fees_collected(Party::Miner(0), Chain::A), 1);
        assert!(w.chain(Chain::A).mempool.is_empty());
    }

    #[test]
    fn conflicting_transactions_and_double_spend() {
        let w = world();
        let t1 = pay(&w, Party::A, 0, Party::B, 100);
        let t2 = pay(&w, Party::A, 0, Party::A, 103);
        let w = w.publish(t1.clone(), Party::A).unwrap().publish(t2.clone(), Party::A).unwrap();
        assert_eq!(w.conflicts(&t1), BTreeSet::from([t2.id()]));
        assert_eq!(w.conflicts(&t2), BTreeSet::from([t1.id()]));
        let mut after = w.confirm(Party::Miner(0), Chain::A, t2.id()).unwrap();
        assert!(after.chain(Chain::A).mempool.is_empty(), "loser evicted");
        after.chains[0].mempool.insert(t1.id(), t1.clone());
        assert_eq!(after.confirm(Party::Miner(0), Chain::A, t1.id()), Err(LedgerError::Conflict(t1.id())));
    }

    #[test]
    fn timelocked_spend_waits() {
        let w = world();
        let lock = Transaction::new(
            Chain::A,
            "lock",
            vec![Input { outpoint: genesis_outpoint(&w, Chain::A, 0), witness: Witness::signed_by([Party::A]) }],
            vec![Output::new(100, Condition::All(vec![Condition::sig(Party::A), Condition::AbsTimelock(20)]))],
        );
        let lock_id = lock.id();
        let mut w = w.publish(lock, Party::A).unwrap().confirm(Party::Miner(0), Chain::A, lock_id).unwrap();
        let refund = Transaction::new(
            Chain::A,
            "refund",
            vec![Input { outpoint: Outpoint { tx: lock_id, index: 0 }, witness: Witness::signed_by([Party::A]) }],
            vec![Output::to_party(99, Party::A)],
        );
        w.apply_publish(refund.clone(), Party::A).unwrap();
        w.round = 20;
        assert!(!w.is_active(&refund));
        assert_eq!(w.confirm(Party::Miner(0), Chain::A, refund.id()), Err(LedgerError::TimelockNotExpired(refund.id())));
        w.round = 25;
        assert!(w.is_active(&refund));
        assert!(w.confirm(Party::Miner(0), Chain::A, refund.id()).is_ok());
    }

    #[test]
    fn wrong_witness_is_rejected() {
        let w = world();
        let tx = pay(&w, Party::B, 0, Party::B, 100);
        let id = tx.id();
        let w = w.publish(tx, Party::B).unwrap();
        assert_eq!(w.confirm(Party::Miner(0), Chain::A, id), Err(LedgerError::ConditionUnsatisfied(id)));
    }

    #[test]
    fn preimages_observed_next_round() {
        let secret = Preimage(vec![3; 32]);
        let w = world();
        let lock = Transaction::new(
            Chain::A,
            "lock",
            vec![Input { outpoint: genesis_outpoint(&w, Chain::A, 1), witness: Witness::signed_by([Party::B]) }],
            vec![Output::new(15, Condition::Hashlock(session_hash(1, &secret)))],
        );
        let lock_id = lock.id();
        let w = w.publish(lock, Party::B).unwrap().confirm(Party::Miner(0), Chain::A, lock_id).unwrap();
        let claim = Transaction::new(
            Chain::A,
            "claim",
            vec![Input {
                outpoint: Outpoint { tx: lock_id, index: 0 },
                witness: Witness::default().with_preimages([secret.clone()]),
            }],
            vec![Output::to_party(15, Party::B)],
        );
        let w = w.publish(claim, Party::B).unwrap();
        assert!(!w.knows(Party::A, &secret));
        assert!(w.knows(Party::Miner(0), &secret), "miners read the mempool directly");
        let w = w.step_round();
        assert!(w.knows(Party::A, &secret));
        assert_eq!(w.round, 1);
        assert_eq!(w.step_round().round, 2);
    }

    #[test]
    fn trace_line_format() {
        let e = LedgerEvent {
            round: 3,
            chain: Some(Chain::B),
            kind: EventKind::Confirm,
            tx: None,
            label: "4s/claim_b".into(),
            actor: Party::Miner(1),
            fee: 1,
        };
        assert_eq!(e.to_string(), "round=3 chain=B kind=confirm tx=- actor=M1 fee=1 label=4s/claim_b");
    }
}
