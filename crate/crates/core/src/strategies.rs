//! Party strategies, miner policies, the round-based simulation runner and
//! utility accounting.
//!
//! Each round A moves, then B, then the miner of each chain confirms at most
//! one transaction. Runs stop once every output is back under a plain
//! signature and both mempools are empty, or at the horizon.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::conditions::{satisfying_paths, session_hash, Condition, EvalContext, Witness};
use crate::ledger::{Input, LedgerEvent, Outpoint, Output, Transaction, TxId, WorldState};
use crate::swaps::{names, Move, Protocol, SwapState, TxKind};
use crate::types::{Amount, Chain, Party, Round};

/// Behaviour of A or B.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartyStrategy {
    Honest,
    /// Honest until `k` swap transactions are confirmed; afterwards only
    /// timelocked refunds. `k = 0` also withholds every setup message.
    AbandonAfter(usize),
    /// Once both locks are confirmed, publish the own refund with `delta`
    /// extra fee, then continue honestly.
    BribeRefund(Amount),
    /// A publishes the chain-B lock before the chain-A lock is confirmed.
    PublishCounterpartyLockEarly,
    Scripted(BTreeMap<Round, Move>),
}

impl fmt::Display for PartyStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartyStrategy::Honest => f.write_str("honest"),
            PartyStrategy::AbandonAfter(k) => write!(f, "abandon-after:{k}"),
            PartyStrategy::BribeRefund(d) => write!(f, "bribe-refund:{d}"),
            PartyStrategy::PublishCounterpartyLockEarly => f.write_str("publish-counterparty-lock-early"),
            PartyStrategy::Scripted(_) => f.write_str("scripted"),
        }
    }
}

impl FromStr for PartyStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = s.split_once(':').map_or((s, None), |(n, a)| (n, Some(a)));
        let number = |a: Option<&str>| -> Result<u64, String> {
            a.ok_or_else(|| format!("strategy `{name}` needs an argument"))?
                .parse()
                .map_err(|_| format!("bad argument in `{s}`"))
        };
        match name {
            "honest" => Ok(PartyStrategy::Honest),
            "abandon-after" => Ok(PartyStrategy::AbandonAfter(number(arg)? as usize)),
            "bribe-refund" => Ok(PartyStrategy::BribeRefund(number(arg)?)),
            "publish-counterparty-lock-early" => Ok(PartyStrategy::PublishCounterpartyLockEarly),
            _ => Err(format!("unknown strategy `{s}`")),
        }
    }
}

/// Block-building policy of a miner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MinerPolicy {
    /// Slash whenever possible (largest output first); otherwise confirm the
    /// highest-fee active transaction, holding back any that conflicts with
    /// a higher-fee transaction that is not active yet.
    GreedySlash,
    /// Highest-fee active transaction, nothing else.
    Greedy,
    /// Like `GreedySlash` without slashing: serves bribers.
    CensorVictim,
    Scripted(BTreeMap<(Round, Chain), MinerChoice>),
}

impl fmt::Display for MinerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MinerPolicy::GreedySlash => "greedy-slash",
            MinerPolicy::Greedy => "greedy",
            MinerPolicy::CensorVictim => "censor-victim",
            MinerPolicy::Scripted(_) => "scripted",
        })
    }
}

impl FromStr for MinerPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy-slash" => Ok(MinerPolicy::GreedySlash),
            "greedy" => Ok(MinerPolicy::Greedy),
            "censor-victim" => Ok(MinerPolicy::CensorVictim),
            _ => Err(format!("unknown miner policy `{s}`")),
        }
    }
}

/// Names accepted by [`PartyStrategy::from_str`] and [`MinerPolicy::from_str`].
pub fn strategy_library() -> Vec<(&'static str, &'static str)> {
    vec![
        ("honest", "follow the protocol"),
        ("abandon-after:K", "stop after K confirmed swap transactions, keep only timelocked refunds"),
        ("bribe-refund:D", "publish own refund with D extra fee once both locks confirm"),
        ("publish-counterparty-lock-early", "A publishes the chain-B lock first"),
        ("greedy-slash", "miner: slash if possible, else highest fee, honouring pending bribes"),
        ("greedy", "miner: highest-fee active transaction"),
        ("censor-victim", "miner: highest fee, honouring pending bribes, never slashes"),
    ]
}

/// What a miner does with one confirmation slot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum MinerChoice {
    Confirm(TxId),
    /// Construct and confirm a transaction spending `outpoint` along the
    /// anyone-can-spend path `path`.
    Slash { outpoint: Outpoint, path: usize },
    Skip,
}

impl fmt::Display for MinerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MinerChoice::Confirm(id) => write!(f, "confirm {id}"),
            MinerChoice::Slash { outpoint, path } => write!(f, "slash {outpoint} path {path}"),
            MinerChoice::Skip => f.write_str("skip"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyProfile {
    pub a: PartyStrategy,
    pub b: PartyStrategy,
    pub miner: [MinerPolicy; 2],
    /// Miners per chain, taking turns round-robin.
    pub miners: u8,
}

impl StrategyProfile {
    pub fn honest() -> Self {
        StrategyProfile { a: PartyStrategy::Honest, b: PartyStrategy::Honest, miner: [MinerPolicy::GreedySlash, MinerPolicy::GreedySlash], miners: 1 }
    }

    pub fn with(party: Party, strategy: PartyStrategy) -> Self {
        let mut p = StrategyProfile::honest();
        match party {
            Party::A => p.a = strategy,
            Party::B => p.b = strategy,
            Party::Miner(_) => {}
        }
        p
    }

    pub fn strategy(&self, party: Party) -> &PartyStrategy {
        match party {
            Party::B => &self.b,
            _ => &self.a,
        }
    }
}

/// Miner confirming on `chain` in `round` when `n` miners take turns.
pub fn miner_for(round: Round, chain: Chain, n: u8) -> Party {
    let _ = chain;
    Party::Miner((round.saturating_sub(1) % n.max(1) as u64) as u8)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ActionKind {
    Party(Move),
    Miner(Chain, MinerChoice),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Action {
    pub round: Round,
    pub actor: Party,
    pub kind: ActionKind,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ActionKind::Party(m) => write!(f, "round={} actor={} action={m}", self.round, self.actor),
            ActionKind::Miner(c, m) => write!(f, "round={} actor={} chain={c} action={m}", self.round, self.actor),
        }
    }
}

/// Net token change per actor and chain.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Utility {
    pub per_chain: BTreeMap<Party, [i64; 2]>,
    /// Value still locked in outputs nobody owns outright.
    pub unresolved: [i64; 2],
}

impl Utility {
    pub fn of(&self, actor: Party) -> i64 {
        self.per_chain.get(&actor).map_or(0, |v| v[0] + v[1])
    }

    pub fn on(&self, actor: Party, chain: Chain) -> i64 {
        self.per_chain.get(&actor).map_or(0, |v| v[chain.index()])
    }

    pub fn miners_total(&self) -> i64 {
        self.per_chain.iter().filter(|(p, _)| p.is_miner()).map(|(_, v)| v[0] + v[1]).sum()
    }

    pub fn chain_sum(&self, chain: Chain) -> i64 {
        self.per_chain.values().map(|v| v[chain.index()]).sum::<i64>() + self.unresolved[chain.index()]
    }

    /// Utility of every party and miner at `world`, relative to `initial`.
    pub fn measure(initial: &WorldState, world: &WorldState) -> Utility {
        let mut actors: BTreeSet<Party> = [Party::A, Party::B].into();
        actors.extend(world.miners());
        for chain in Chain::BOTH {
            for (_, o) in world.chain(chain).utxo_set() {
                if let Some(p) = sole_owner(&o.condition) {
                    actors.insert(p);
                }
            }
        }
        let mut per_chain = BTreeMap::new();
        let mut unresolved = [0i64; 2];
        for chain in Chain::BOTH {
            let mut owned = 0i64;
            for &actor in &actors {
                let bal = world.balance(actor, chain) as i64;
                owned += bal;
                let delta = bal - initial.balance(actor, chain) as i64 + world.fees_collected(actor, chain) as i64;
                per_chain.entry(actor).or_insert([0i64; 2])[chain.index()] = delta;
            }
            let utxo: i64 = world.chain(chain).utxo_set().map(|(_, o)| o.value as i64).sum();
            unresolved[chain.index()] = utxo - owned;
        }
        Utility { per_chain, unresolved }
    }
}

fn sole_owner(c: &Condition) -> Option<Party> {
    match c {
        Condition::SigBy { signers, threshold: 1 } if signers.len() == 1 => signers.iter().next().copied(),
        _ => None,
    }
}

/// Every unspent output sits under a single plain signature.
pub fn resolved(world: &WorldState) -> bool {
    Chain::BOTH.iter().all(|&c| {
        world.chain(c).mempool.is_empty() && world.chain(c).utxo_set().all(|(_, o)| sole_owner(&o.condition).is_some())
    })
}

/// A finished simulation.
#[derive(Debug, Clone)]
pub struct Trace {
    pub actions: Vec<Action>,
    pub events: Vec<LedgerEvent>,
    pub delivered: BTreeSet<&'static str>,
    pub initial: WorldState,
    pub final_state: SwapState,
    pub utility: Utility,
    /// Reached quiescence before the horizon.
    pub completed: bool,
    /// A party's strategy departed from the honest action at least once.
    pub deviated: BTreeSet<Party>,
    /// Sum over rounds of value held in unresolved outputs.
    pub capital_lockup: u64,
}

impl Trace {
    pub fn confirmations(&self) -> usize {
        self.events.iter().filter(|e| e.kind == crate::ledger::EventKind::Confirm).count()
    }

    /// Round of the last confirmation.
    pub fn completion_round(&self) -> Option<Round> {
        self.events.iter().filter(|e| e.kind == crate::ledger::EventKind::Confirm).map(|e| e.round).max()
    }

    pub fn confirmed_labels(&self) -> Vec<&str> {
        self.events
            .iter()
            .filter(|e| e.kind == crate::ledger::EventKind::Confirm)
            .map(|e| e.label.as_str())
            .collect()
    }

    /// Trace log followed by the utility summary block.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out.push_str("# utilities\n");
        out.push_str(&render_utility(&self.utility));
        out
    }
}

pub fn render_utility(u: &Utility) -> String {
    let mut out = format!("{:<6} {:>8} {:>8} {:>8}\n", "actor", "chain_a", "chain_b", "total");
    for (p, v) in &u.per_chain {
        out.push_str(&format!("{:<6} {:>8} {:>8} {:>8}\n", p.to_string(), v[0], v[1], v[0] + v[1]));
    }
    if u.unresolved != [0, 0] {
        out.push_str(&format!("{:<6} {:>8} {:>8}\n", "locked", u.unresolved[0], u.unresolved[1]));
    }
    out
}

pub fn utility_of(trace: &Trace, actor: Party) -> i64 {
    trace.utility.of(actor)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("horizon {horizon} too small: must exceed t4 + 2 = {min}")]
pub struct HorizonError {
    pub horizon: Round,
    pub min: Round,
}

/// Slash opportunities on `chain`: unspent outputs with an anyone-can-spend
/// path whose preimages are all public. Largest value first.
pub fn slash_options(world: &WorldState, chain: Chain) -> Vec<(Amount, Outpoint, usize)> {
    let known: BTreeSet<_> = world.revealed().iter().map(|p| session_hash(world.session, p)).collect();
    let mut out = Vec::new();
    for (op, created) in &world.chain(chain).outputs {
        if created.spent_by.is_some() {
            continue;
        }
        let ctx = EvalContext { current_round: world.round, source_confirm_round: created.confirm_round, session: world.session };
        let paths = satisfying_paths(&created.output.condition);
        if let Some(i) = paths.iter().position(|p| {
            p.anyone_can_spend && p.required_signers.is_empty() && p.required_preimages.is_subset(&known) && p.timelocks_open(&ctx)
        }) {
            out.push((created.output.value, *op, i));
        }
    }
    out.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    out
}

/// The transaction a miner builds to take `outpoint` along `path`.
pub fn slash_tx(world: &WorldState, chain: Chain, outpoint: Outpoint, path: usize, miner: Party) -> Option<Transaction> {
    let created = world.output(chain, &outpoint)?;
    let p = satisfying_paths(&created.output.condition).into_iter().nth(path)?;
    let preimages = world.revealed().iter().filter(|pre| p.required_preimages.contains(&session_hash(world.session, pre))).cloned();
    let input = Input { outpoint, witness: Witness::default().with_preimages(preimages).with_path(path) };
    Some(Transaction::new(chain, "slash", vec![input], vec![Output::to_party(created.output.value, miner)]))
}

/// Active mempool transactions a miner may confirm, best first. With
/// `honour_bribes`, transactions conflicting with a higher-fee inactive one
/// are held back.
pub fn confirm_candidates(world: &WorldState, chain: Chain, honour_bribes: bool) -> Vec<(Amount, TxId)> {
    let pool = &world.chain(chain).mempool;
    let mut out: Vec<(Amount, TxId)> = pool
        .values()
        .filter(|tx| world.is_active(tx))
        .filter(|tx| {
            let fee = world.fee_of(tx).unwrap_or(0);
            !honour_bribes
                || !world.conflicts(tx).iter().any(|id| {
                    let rival = &pool[id];
                    !world.is_active(rival) && world.fee_of(rival).unwrap_or(0) > fee
                })
        })
        .map(|tx| (world.fee_of(tx).unwrap_or(0), tx.id()))
        .collect();
    out.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    out
}

impl MinerPolicy {
    pub fn decide(&self, world: &WorldState, chain: Chain) -> MinerChoice {
        match self {
            MinerPolicy::GreedySlash => {
                if let Some(&(_, outpoint, path)) = slash_options(world, chain).first() {
                    return MinerChoice::Slash { outpoint, path };
                }
                confirm_candidates(world, chain, true).first().map_or(MinerChoice::Skip, |c| MinerChoice::Confirm(c.1))
            }
            MinerPolicy::Greedy => {
                confirm_candidates(world, chain, false).first().map_or(MinerChoice::Skip, |c| MinerChoice::Confirm(c.1))
            }
            MinerPolicy::CensorVictim => {
                confirm_candidates(world, chain, true).first().map_or(MinerChoice::Skip, |c| MinerChoice::Confirm(c.1))
            }
            MinerPolicy::Scripted(plan) => plan.get(&(world.round, chain)).cloned().unwrap_or(MinerChoice::Skip),
        }
    }
}

/// Applies a miner's choice. Invalid choices are ignored.
pub fn apply_miner_choice(world: &mut WorldState, chain: Chain, miner: Party, choice: &MinerChoice) -> Vec<LedgerEvent> {
    match choice {
        MinerChoice::Skip => Vec::new(),
        MinerChoice::Confirm(id) => world.apply_confirm(miner, chain, *id).unwrap_or_default(),
        MinerChoice::Slash { outpoint, path } => {
            let Some(tx) = slash_tx(world, chain, *outpoint, *path, miner) else { return Vec::new() };
            let id = tx.id();
            let mut next = world.clone();
            let Ok(mut events) = next.apply_publish(tx, miner) else { return Vec::new() };
            match next.apply_confirm(miner, chain, id) {
                Ok(more) => {
                    events.extend(more);
                    *world = next;
                    events
                }
                Err(_) => Vec::new(),
            }
        }
    }
}

struct PartyRunner<'a> {
    party: Party,
    strategy: &'a PartyStrategy,
    bribed: bool,
}

impl PartyRunner<'_> {
    fn decide(&mut self, p: &Protocol, s: &SwapState) -> Move {
        let honest = p.honest_action(s, self.party);
        match self.strategy {
            PartyStrategy::Honest => honest,
            PartyStrategy::AbandonAfter(k) => {
                if p.confirmed_count(s) < *k {
                    return honest;
                }
                p.templates
                    .values()
                    .filter(|t| t.publisher == self.party && t.kind.is_timelocked_refund())
                    .find(|t| p.can_publish(s, self.party, t.name) && !p.pending_spend(s, t.name))
                    .map_or(Move::Wait, |t| Move::publish(t.name))
            }
            PartyStrategy::BribeRefund(delta) => {
                let refund = if self.party == Party::A { names::REFUND_A } else { names::REFUND_B };
                if !self.bribed
                    && p.is_confirmed(s, names::LOCK_A)
                    && p.is_confirmed(s, names::LOCK_B)
                    && p.bribe_tx(s, self.party, refund, *delta).is_some()
                {
                    self.bribed = true;
                    return Move::Bribe(refund.to_string(), *delta);
                }
                honest
            }
            PartyStrategy::PublishCounterpartyLockEarly => {
                if self.party == Party::A && p.ready(s, Party::A, names::LOCK_B).is_some() && !p.is_published(s, names::LOCK_A) {
                    return Move::publish(names::LOCK_B);
                }
                honest
            }
            PartyStrategy::Scripted(plan) => plan.get(&s.world.round).cloned().unwrap_or(Move::Wait),
        }
    }
}

/// Setup messages that reach their recipient under `profile`.
pub fn delivered_under(protocol: &Protocol, profile: &StrategyProfile) -> BTreeSet<&'static str> {
    let mut delivered = protocol.deliverable();
    for party in [Party::A, Party::B] {
        if *profile.strategy(party) == PartyStrategy::AbandonAfter(0) {
            for name in protocol.sent_by(party) {
                delivered.remove(name);
            }
        }
    }
    delivered
}

/// Runs `profile` against `protocol` until quiescence or `horizon`.
pub fn simulate(protocol: &Protocol, profile: &StrategyProfile, horizon: Round) -> Result<Trace, HorizonError> {
    simulate_with_delivery(protocol, profile, delivered_under(protocol, profile), horizon)
}

/// Like [`simulate`], with the delivered setup messages given explicitly.
pub fn simulate_with_delivery(
    protocol: &Protocol,
    profile: &StrategyProfile,
    delivered: BTreeSet<&'static str>,
    horizon: Round,
) -> Result<Trace, HorizonError> {
    let min = protocol.params.t4 + 2;
    if horizon <= min {
        return Err(HorizonError { horizon, min });
    }
    let mut deviated = BTreeSet::new();
    for party in [Party::A, Party::B] {
        if !protocol.sent_by(party).iter().all(|n| delivered.contains(n)) {
            deviated.insert(party);
        }
    }
    let mut state = protocol.initial_state(delivered.clone());
    let mut runners = [
        PartyRunner { party: Party::A, strategy: &profile.a, bribed: false },
        PartyRunner { party: Party::B, strategy: &profile.b, bribed: false },
    ];
    let mut actions = Vec::new();
    let mut events = Vec::new();
    let mut completed = false;
    let mut capital_lockup = 0u64;
    while state.world.round <= horizon {
        let round = state.world.round;
        for runner in runners.iter_mut() {
            let honest = protocol.honest_action(&state, runner.party);
            let mv = runner.decide(protocol, &state);
            if mv != honest {
                deviated.insert(runner.party);
            }
            if mv != Move::Wait {
                if let Ok(evs) = protocol.apply_move(&mut state, runner.party, &mv) {
                    events.extend(evs);
                    actions.push(Action { round, actor: runner.party, kind: ActionKind::Party(mv) });
                }
            }
            if protocol.variant.zero_delay() {
                drain_mempools(protocol, profile, &mut state, &mut actions, &mut events);
            }
        }
        for chain in Chain::BOTH {
            let miner = miner_for(round, chain, profile.miners);
            let choice = profile.miner[chain.index()].decide(&state.world, chain);
            let evs = apply_miner_choice(&mut state.world, chain, miner, &choice);
            if !evs.is_empty() {
                events.extend(evs);
                actions.push(Action { round, actor: miner, kind: ActionKind::Miner(chain, choice) });
            }
        }
        capital_lockup += Chain::BOTH
            .iter()
            .flat_map(|&c| state.world.chain(c).utxo_set().filter(|(_, o)| sole_owner(&o.condition).is_none()).map(|(_, o)| o.value))
            .sum::<u64>();
        if resolved(&state.world) {
            completed = true;
            break;
        }
        state.world.apply_step_round();
    }
    let utility = Utility::measure(&protocol.genesis, &state.world);
    Ok(Trace {
        actions,
        events,
        delivered,
        initial: protocol.genesis.clone(),
        final_state: state,
        utility,
        completed,
        deviated,
        capital_lockup,
    })
}

fn drain_mempools(p: &Protocol, profile: &StrategyProfile, state: &mut SwapState, actions: &mut Vec<Action>, events: &mut Vec<LedgerEvent>) {
    for chain in Chain::BOTH {
        let miner = miner_for(state.world.round, chain, profile.miners);
        loop {
            let choice = profile.miner[chain.index()].decide(&state.world, chain);
            let evs = apply_miner_choice(&mut state.world, chain, miner, &choice);
            if evs.is_empty() {
                break;
            }
            events.extend(evs);
            actions.push(Action { round: state.world.round, actor: miner, kind: ActionKind::Miner(chain, choice) });
        }
    }
    let _ = p;
}

/// Feeds recorded actions back through the ledger.
pub fn replay(protocol: &Protocol, delivered: BTreeSet<&'static str>, actions: &[Action], until: Round) -> SwapState {
    let mut state = protocol.initial_state(delivered);
    let mut i = 0;
    while state.world.round <= until {
        while i < actions.len() && actions[i].round == state.world.round {
            let a = &actions[i];
            match &a.kind {
                ActionKind::Party(mv) => {
                    let _ = protocol.apply_move(&mut state, a.actor, mv);
                }
                ActionKind::Miner(chain, choice) => {
                    apply_miner_choice(&mut state.world, *chain, a.actor, choice);
                }
            }
            i += 1;
        }
        if state.world.round == until {
            break;
        }
        state.world.apply_step_round();
    }
    state
}

/// Number of confirmations up to and including the first principal lock.
pub fn first_principal_lock(protocol: &Protocol, trace: &Trace) -> Option<usize> {
    trace
        .confirmed_labels()
        .iter()
        .position(|l| protocol.template_kind(l) == Some(TxKind::Lock))
        .map(|i| i + 1)
}

/// One deviation run compared with the all-honest run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepCase {
    pub party: Party,
    pub strategy: String,
    pub utility: i64,
    pub honest_utility: i64,
    pub confirmations: usize,
    pub deviated: bool,
    /// Deviation started at or after the first principal lock.
    pub after_lock: bool,
}

impl SweepCase {
    pub fn penalized(&self) -> bool {
        self.utility < self.honest_utility
    }
}

/// Every `AbandonAfter(k)` for both parties, `k` up to one past the honest
/// transaction count.
pub fn grief_sweep(protocol: &Protocol, horizon: Round) -> Result<(Trace, Vec<SweepCase>), HorizonError> {
    let honest = simulate(protocol, &StrategyProfile::honest(), horizon)?;
    let first_lock = first_principal_lock(protocol, &honest).unwrap_or(0);
    let mut cases = Vec::new();
    for party in [Party::A, Party::B] {
        for k in 0..=honest.confirmations() + 1 {
            let strategy = PartyStrategy::AbandonAfter(k);
            let t = simulate(protocol, &StrategyProfile::with(party, strategy.clone()), horizon)?;
            cases.push(SweepCase {
                party,
                strategy: strategy.to_string(),
                utility: t.utility.of(party),
                honest_utility: honest.utility.of(party),
                confirmations: t.confirmations(),
                deviated: t.deviated.contains(&party),
                after_lock: k >= first_lock,
            });
        }
    }
    Ok((honest, cases))
}

/// Bribe amounts tried against a lock of value `locked`.
pub fn bribe_amounts(locked: Amount) -> Vec<Amount> {
    let mut v = vec![1, locked / 2, locked.saturating_sub(1)];
    v.dedup();
    v
}

/// `BribeRefund(delta)` for both parties over [`bribe_amounts`] of the lock
/// each party refunds from.
pub fn bribe_sweep(protocol: &Protocol, horizon: Round) -> Result<Vec<SweepCase>, HorizonError> {
    let honest = simulate(protocol, &StrategyProfile::honest(), horizon)?;
    let mut cases = Vec::new();
    for party in [Party::A, Party::B] {
        let lock = if party == Party::A { names::LOCK_A } else { names::LOCK_B };
        let locked = protocol.template(lock).tx.outputs[0].value;
        for delta in bribe_amounts(locked) {
            let strategy = PartyStrategy::BribeRefund(delta);
            let t = simulate(protocol, &StrategyProfile::with(party, strategy.clone()), horizon)?;
            cases.push(SweepCase {
                party,
                strategy: strategy.to_string(),
                utility: t.utility.of(party),
                honest_utility: honest.utility.of(party),
                confirmations: t.confirmations(),
                deviated: t.deviated.contains(&party),
                after_lock: true,
            });
        }
    }
    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::swaps::{SwapParams, Variant};

    fn run(variant: Variant, profile: StrategyProfile) -> Trace {
        let p = Protocol::new(variant, SwapParams::default(), 3).unwrap();
        simulate(&p, &profile, 60).unwrap()
    }

    #[test]
    fn honest_four_swap() {
        let t = run(Variant::FourSwap, StrategyProfile::honest());
        assert!(t.completed);
        assert_eq!(t.confirmations(), 4);
        assert_eq!(t.utility.of(Party::A), -2);
        assert_eq!(t.utility.of(Party::B), -2);
        assert_eq!(t.utility.miners_total(), 4);
        assert_eq!(t.utility.on(Party::A, Chain::B), 98);
        assert!(t.deviated.is_empty());
        for c in Chain::BOTH {
            assert_eq!(t.utility.chain_sum(c), 0);
        }
    }

    #[test]
    fn b_abandons_after_both_locks() {
        let t = run(Variant::FourSwap, StrategyProfile::with(Party::B, PartyStrategy::AbandonAfter(2)));
        assert_eq!(t.utility.of(Party::A), 3);
        assert_eq!(t.utility.of(Party::B), -7);
        assert_eq!(t.confirmations(), 4);
    }

    #[test]
    fn abandon_at_setup_changes_nothing() {
        for party in [Party::A, Party::B] {
            let t = run(Variant::FourSwap, StrategyProfile::with(party, PartyStrategy::AbandonAfter(0)));
            assert_eq!(t.confirmations(), 0);
            assert!(t.utility.per_chain.values().all(|v| *v == [0, 0]));
        }
    }

    #[test]
    fn tn_abandonment_is_free_for_the_quitter() {
        let t = run(Variant::TierNolan, StrategyProfile::with(Party::B, PartyStrategy::AbandonAfter(1)));
        assert_eq!(t.utility.of(Party::B), 0);
        assert_eq!(t.utility.of(Party::A), -2);
        assert!(t.capital_lockup >= 100 * 40);
    }

    #[test]
    fn slash_beats_bribe() {
        let t = run(Variant::FourSwap, StrategyProfile::with(Party::B, PartyStrategy::BribeRefund(50)));
        assert!(t.confirmed_labels().contains(&"slash"));
        assert!(t.utility.of(Party::B) < -2);
    }

    #[test]
    fn tn_bribe_pays_off() {
        let t = run(Variant::TierNolan, StrategyProfile::with(Party::B, PartyStrategy::BribeRefund(5)));
        assert!(t.utility.of(Party::B) > 0, "{}", t.render());
    }

    #[test]
    fn sweep_table_shape() {
        let expect = [
            (Variant::TierNolan, 4, false, false),
            (Variant::Hedged, 6, true, false),
            (Variant::GriefFree, 5, true, false),
            (Variant::FourSwap, 4, true, true),
        ];
        for (variant, txs, grief_safe, bribe_safe) in expect {
            let p = Protocol::new(variant, SwapParams::default(), 3).unwrap();
            let (honest, cases) = grief_sweep(&p, 60).unwrap();
            let worst = cases.iter().map(|c| c.confirmations).chain([honest.confirmations()]).max().unwrap();
            assert_eq!(worst, txs, "{variant}");
            let relevant: Vec<_> = cases.iter().filter(|c| c.deviated && c.after_lock).collect();
            assert!(!relevant.is_empty());
            assert_eq!(relevant.iter().all(|c| c.penalized()), grief_safe, "{variant}: {relevant:#?}");
            let bribes = bribe_sweep(&p, 60).unwrap();
            assert_eq!(bribes.iter().all(|c| c.penalized()), bribe_safe, "{variant}: {bribes:#?}");
        }
    }

    #[test]
    fn horizon_must_cover_refunds() {
        let p = Protocol::new(Variant::FourSwap, SwapParams::default(), 3).unwrap();
        assert_eq!(simulate(&p, &StrategyProfile::honest(), 42).unwrap_err(), HorizonError { horizon: 42, min: 42 });
    }

    #[test]
    fn replay_reproduces_terminal_state() {
        let p = Protocol::new(Variant::FourSwap, SwapParams::default(), 3).unwrap();
        let t = simulate(&p, &StrategyProfile::with(Party::B, PartyStrategy::AbandonAfter(2)), 60).unwrap();
        let end = t.final_state.world.round;
        assert_eq!(replay(&p, t.delivered.clone(), &t.actions, end), t.final_state);
    }

    #[test]
    fn strategy_names_parse() {
        assert_eq!("abandon-after:3".parse(), Ok(PartyStrategy::AbandonAfter(3)));
        assert_eq!("bribe-refund:7".parse(), Ok(PartyStrategy::BribeRefund(7)));
        assert!("abandon-after".parse::<PartyStrategy>().is_err());
        assert_eq!("greedy-slash".parse(), Ok(MinerPolicy::GreedySlash));
        for (name, _) in strategy_library() {
            let concrete = name.replace(['K', 'D'], "1");
            assert!(concrete.parse::<PartyStrategy>().is_ok() || concrete.parse::<MinerPolicy>().is_ok(), "{name}");
        }
    }
}
