//! The swap as a perfect-information extensive-form game.
//!
//! Nodes are ledger states: every leaf carries the world it ends in, and
//! every menu is computed from the state it belongs to. Identical states
//! reached along different histories share one node, so the tree is stored
//! as a DAG. A round gives A, then B, then the miner of chain A and of
//! chain B one decision each. Parties with nothing to do but wait get no
//! node, and a round in which nothing happens jumps the clock to the next
//! timelock expiry.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::conditions::{Condition, Witness};
use crate::ledger::{Input, Output, Transaction, WorldState};
use crate::strategies::{
    apply_miner_choice, bribe_amounts, miner_for, resolved, simulate_with_delivery, slash_options, Action, ActionKind,
    HorizonError, MinerChoice, MinerPolicy, PartyStrategy, StrategyProfile, Utility,
};
use crate::swaps::{names, Move, Protocol, SwapParams, SwapState, TxKind, Variant};
use crate::types::{Amount, Chain, Party, Round};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Setup and locking; once both locks confirm, parties play honestly.
    Base,
    /// From B's first chance to claim.
    Claim,
    /// After B leaves without claiming.
    Refund,
    Full,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Base => "base",
            Phase::Claim => "claim",
            Phase::Refund => "refund",
            Phase::Full => "full",
        })
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "base" => Ok(Phase::Base),
            "claim" => Ok(Phase::Claim),
            "refund" => Ok(Phase::Refund),
            "full" => Ok(Phase::Full),
            _ => Err(format!("unknown phase `{s}` (expected base, claim, refund or full)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GameOptions {
    pub phase: Phase,
    /// Miners per chain, taking turns round-robin.
    pub miners: u8,
    /// Where a slash is possible, offer the miner nothing else.
    pub prune_slash: bool,
    /// Defaults to `t4 + 3`.
    pub horizon: Option<Round>,
    /// Bribe amounts offered in addition to `bribe_amounts(locked)`.
    pub extra_bribes: Vec<Amount>,
    /// Extra weight, in permille, a party puts on tokens of the chain it is
    /// swapping into.
    pub exchange_bonus: i64,
    pub max_nodes: usize,
}

impl Default for GameOptions {
    fn default() -> Self {
        GameOptions {
            phase: Phase::Full,
            miners: 1,
            prune_slash: true,
            horizon: None,
            extra_bribes: Vec::new(),
            exchange_bonus: 30,
            max_nodes: 2_000_000,
        }
    }
}

impl GameOptions {
    pub fn phase(phase: Phase) -> Self {
        GameOptions { phase, ..GameOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("the game is defined for 4s, not {0}")]
    Variant(Variant),
    #[error(transparent)]
    Horizon(#[from] HorizonError),
    #[error("game tree exceeds {0} nodes")]
    TooLarge(usize),
    #[error("the honest run never reaches the root of the {0} phase")]
    NoRoot(Phase),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameAction {
    Send(&'static str),
    Withhold(&'static str),
    Party(Move),
    /// Wait, and never claim for the rest of the game.
    Leave,
    Miner(Chain, MinerChoice),
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub label: String,
    pub action: GameAction,
    pub child: NodeId,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum GameNode {
    Decision { actor: Party, chain: Option<Chain>, round: Round, edges: Vec<Edge> },
    Leaf { utility: Utility, world: WorldState, end_round: Round },
}

#[derive(Debug, Clone)]
pub struct GameTree {
    pub phase: Phase,
    pub nodes: Vec<GameNode>,
    pub root: NodeId,
    /// Children before parents.
    pub topo: Vec<NodeId>,
    /// First edge by which each node was reached.
    pub parent: Vec<Option<(NodeId, usize)>>,
    /// Honest actions played before the root.
    pub prefix: Vec<Action>,
    pub deliverable: BTreeSet<&'static str>,
    pub miners: u8,
    pub horizon: Round,
    pub exchange_bonus: i64,
    /// Per refund template, the smallest bribe for which the locked value no
    /// longer exceeds the largest fee plus the bribe.
    pub bribe_bound: BTreeMap<&'static str, Amount>,
}

impl GameTree {
    pub fn node(&self, id: NodeId) -> &GameNode {
        &self.nodes[id]
    }

    pub fn edges(&self, id: NodeId) -> &[Edge] {
        match &self.nodes[id] {
            GameNode::Decision { edges, .. } => edges,
            GameNode::Leaf { .. } => &[],
        }
    }

    pub fn actor(&self, id: NodeId) -> Option<Party> {
        match &self.nodes[id] {
            GameNode::Decision { actor, .. } => Some(*actor),
            GameNode::Leaf { .. } => None,
        }
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        matches!(self.nodes[id], GameNode::Leaf { .. })
    }

    pub fn decision_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, GameNode::Decision { .. })).count()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.len() - self.decision_count()
    }

    pub fn utility(&self, leaf: NodeId) -> &Utility {
        match &self.nodes[leaf] {
            GameNode::Leaf { utility, .. } => utility,
            GameNode::Decision { .. } => panic!("node {leaf} is not a leaf"),
        }
    }

    pub fn end_round(&self, leaf: NodeId) -> Round {
        match &self.nodes[leaf] {
            GameNode::Leaf { end_round, .. } => *end_round,
            GameNode::Decision { .. } => panic!("node {leaf} is not a leaf"),
        }
    }

    /// The quantity `actor` maximizes at `leaf`.
    pub fn preference(&self, actor: Party, leaf: NodeId) -> i64 {
        let u = self.utility(leaf);
        let (home, away) = (1000, 1000 + self.exchange_bonus);
        match actor {
            Party::A => home * u.on(Party::A, Chain::A) + away * u.on(Party::A, Chain::B),
            Party::B => away * u.on(Party::B, Chain::A) + home * u.on(Party::B, Chain::B),
            Party::Miner(_) => u.of(actor),
        }
    }

    pub fn players(&self) -> Vec<Party> {
        let mut out = vec![Party::A, Party::B];
        out.extend((0..self.miners).map(Party::Miner));
        out
    }

    /// Labels along the first history reaching `id`.
    pub fn history(&self, id: NodeId) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = id;
        while let Some((p, e)) = self.parent[cur] {
            out.push(format!("{} {}", actor_name(self.actor(p).expect("parent is a decision")), self.edges(p)[e].label));
            cur = p;
        }
        out.reverse();
        out
    }

    /// Whether the first path to `id` offers a bribe at or above its bound.
    pub fn oversized_bribe_before(&self, id: NodeId) -> bool {
        let mut cur = id;
        while let Some((p, e)) = self.parent[cur] {
            if let GameAction::Party(Move::Bribe(name, d)) = &self.edges(p)[e].action {
                if self.bribe_bound.get(name.as_str()).is_none_or(|b| d >= b) {
                    return true;
                }
            }
            cur = p;
        }
        false
    }

    /// Decision nodes reachable from `root`, children first.
    pub fn decisions_below(&self, root: NodeId) -> Vec<NodeId> {
        let mut seen = HashSet::new();
        let mut order = Vec::new();
        let mut stack = vec![(root, false)];
        while let Some((n, expanded)) = stack.pop() {
            if self.is_leaf(n) {
                continue;
            }
            if expanded {
                order.push(n);
                continue;
            }
            if !seen.insert(n) {
                continue;
            }
            stack.push((n, true));
            for e in self.edges(n) {
                if !seen.contains(&e.child) {
                    stack.push((e.child, false));
                }
            }
        }
        order
    }

    /// Round-tagged actions for the prefix and the given edges.
    pub fn actions_along(&self, path: &[(NodeId, usize)]) -> (BTreeSet<&'static str>, Vec<Action>) {
        let mut delivered = self.deliverable.clone();
        let mut actions = self.prefix.clone();
        for &(n, e) in path {
            let GameNode::Decision { actor, round, edges, .. } = &self.nodes[n] else { continue };
            match &edges[e].action {
                GameAction::Send(_) | GameAction::Leave => {}
                GameAction::Party(Move::Wait) => {}
                GameAction::Withhold(name) => {
                    delivered.remove(name);
                }
                GameAction::Party(mv) => actions.push(Action { round: *round, actor: *actor, kind: ActionKind::Party(mv.clone()) }),
                GameAction::Miner(c, choice) => {
                    actions.push(Action { round: *round, actor: *actor, kind: ActionKind::Miner(*c, choice.clone()) })
                }
            }
        }
        (delivered, actions)
    }

    /// Re-simulates a root-to-leaf path with scripted strategies.
    pub fn resimulate(&self, protocol: &Protocol, path: &[(NodeId, usize)]) -> Result<Utility, HorizonError> {
        let (delivered, actions) = self.actions_along(path);
        let mut a = std::collections::BTreeMap::new();
        let mut b = std::collections::BTreeMap::new();
        let mut miner = [std::collections::BTreeMap::new(), std::collections::BTreeMap::new()];
        for act in actions {
            match act.kind {
                ActionKind::Party(mv) if act.actor == Party::A => {
                    a.insert(act.round, mv);
                }
                ActionKind::Party(mv) => {
                    b.insert(act.round, mv);
                }
                ActionKind::Miner(c, choice) => {
                    miner[c.index()].insert((act.round, c), choice);
                }
            }
        }
        let [ma, mb] = miner;
        let profile = StrategyProfile {
            a: PartyStrategy::Scripted(a),
            b: PartyStrategy::Scripted(b),
            miner: [MinerPolicy::Scripted(ma), MinerPolicy::Scripted(mb)],
            miners: self.miners,
        };
        Ok(simulate_with_delivery(protocol, &profile, delivered, self.horizon)?.utility)
    }
}

fn actor_name(p: Party) -> String {
    if p.is_miner() { "M".to_string() } else { p.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Stage {
    SendA,
    SendB,
    Party(u8),
    Miner(u8),
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Key {
    state: SwapState,
    stage: Stage,
    left: [bool; 2],
    /// Something happened this round.
    busy: bool,
}

struct Choice {
    label: String,
    action: GameAction,
    next: Key,
}

enum Point {
    Leaf(Key),
    Decision { key: Key, actor: Party, chain: Option<Chain>, choices: Vec<Choice> },
}

impl Point {
    fn key(&self) -> &Key {
        match self {
            Point::Leaf(k) | Point::Decision { key: k, .. } => k,
        }
    }
}

struct Builder<'a> {
    p: &'a Protocol,
    opts: &'a GameOptions,
    horizon: Round,
    events: Vec<Round>,
    nodes: Vec<GameNode>,
    parent: Vec<Option<(NodeId, usize)>>,
    topo: Vec<NodeId>,
    memo: HashMap<Key, NodeId>,
}

const PARTIES: [Party; 2] = [Party::A, Party::B];

fn is_claim(p: &Protocol, mv: &Move) -> bool {
    matches!(mv, Move::Publish(n) if matches!(p.template_kind(n), Some(TxKind::Claim | TxKind::EarlyClaim)))
}

impl Builder<'_> {
    fn settle(&self, mut key: Key) -> Point {
        loop {
            match key.stage {
                Stage::SendA | Stage::SendB => {
                    let (party, next) = if key.stage == Stage::SendA { (Party::A, Stage::SendB) } else { (Party::B, Stage::Party(0)) };
                    let sent = self.p.sent_by(party);
                    let names = sent.iter().copied().collect::<Vec<_>>().join(",");
                    let mut send = key.clone();
                    send.stage = next;
                    let mut withhold = key.clone();
                    withhold.state.delivered.retain(|n| !sent.contains(n));
                    withhold.stage = if party == Party::A { Stage::Done } else { next };
                    let first = sent.iter().next().copied().unwrap_or("");
                    let choices = vec![
                        Choice { label: format!("send {names}"), action: GameAction::Send(first), next: send },
                        Choice { label: format!("withhold {names}"), action: GameAction::Withhold(first), next: withhold },
                    ];
                    return Point::Decision { key, actor: party, chain: None, choices };
                }
                Stage::Party(i) => {
                    let choices = self.party_choices(&key, PARTIES[i as usize]);
                    if choices.is_empty() {
                        key = self.after(key);
                        continue;
                    }
                    return Point::Decision { key, actor: PARTIES[i as usize], chain: None, choices };
                }
                Stage::Miner(c) => {
                    let chain = Chain::BOTH[c as usize];
                    let choices = self.miner_choices(&key, chain);
                    if choices.is_empty() {
                        key = self.after(key);
                        continue;
                    }
                    let actor = miner_for(key.state.world.round, chain, self.opts.miners);
                    return Point::Decision { key, actor, chain: Some(chain), choices };
                }
                Stage::Done => return Point::Leaf(key),
            }
        }
    }

    /// The key after the current stage, closing the round after chain B's miner.
    fn after(&self, mut key: Key) -> Key {
        key.stage = match key.stage {
            Stage::Party(0) => Stage::Party(1),
            Stage::Party(_) => Stage::Miner(0),
            Stage::Miner(0) => Stage::Miner(1),
            Stage::Miner(_) => return self.close_round(key),
            other => other,
        };
        key
    }

    fn close_round(&self, mut key: Key) -> Key {
        if resolved(&key.state.world) {
            key.stage = Stage::Done;
            return key;
        }
        let world = &mut key.state.world;
        world.apply_step_round();
        if !key.busy {
            let next = self.events.iter().copied().find(|&e| e >= world.round).unwrap_or(self.horizon + 1).min(self.horizon + 1);
            world.apply_advance_to(next);
        }
        key.busy = false;
        key.stage = if world.round > self.horizon { Stage::Done } else { Stage::Party(0) };
        key
    }

    fn party_choices(&self, key: &Key, party: Party) -> Vec<Choice> {
        let p = self.p;
        let s = &key.state;
        let i = if party == Party::A { 0 } else { 1 };
        let forced = self.opts.phase == Phase::Base && p.is_confirmed(s, names::LOCK_A) && p.is_confirmed(s, names::LOCK_B);
        let moves: Vec<Move> = if forced {
            let h = p.honest_action(s, party);
            if h == Move::Wait { Vec::new() } else { vec![h] }
        } else {
            let mut m: Vec<Move> = p.legal_moves(s, party, &[]).into_iter().filter(|m| *m != Move::Wait).collect();
            if key.left[i] {
                m.retain(|mv| !is_claim(p, mv));
            }
            for b in self.bribes(s, party) {
                if !m.contains(&b) {
                    m.push(b);
                }
            }
            m
        };
        if moves.is_empty() {
            return Vec::new();
        }
        let claim_open = moves.iter().any(|mv| is_claim(p, mv));
        let mut out = Vec::new();
        for mv in moves {
            let mut next = key.clone();
            if p.apply_move(&mut next.state, party, &mv).is_err() {
                continue;
            }
            next.busy = true;
            let next = self.after(next);
            out.push(Choice { label: mv.to_string(), action: GameAction::Party(mv), next });
        }
        if !forced {
            let mut next = key.clone();
            let (label, action) = if claim_open {
                next.left[i] = true;
                ("leave".to_string(), GameAction::Leave)
            } else {
                ("wait".to_string(), GameAction::Party(Move::Wait))
            };
            out.push(Choice { label, action, next: self.after(next) });
        }
        out
    }

    /// Refunds raced against a pending counterparty spend, with extra fee.
    fn bribes(&self, s: &SwapState, party: Party) -> Vec<Move> {
        let p = self.p;
        let mut out = Vec::new();
        for t in p.templates.values() {
            if t.publisher != party || !t.kind.is_refund() {
                continue;
            }
            if !p.pending_spend_by(s, t.name, party.counterparty()) || p.pending_spend_by(s, t.name, party) {
                continue;
            }
            let op = t.tx.inputs[0].outpoint;
            let Some(locked) = s.world.output(t.chain(), &op).map(|o| o.output.value) else { continue };
            let mut deltas = bribe_amounts(locked);
            deltas.extend(&self.opts.extra_bribes);
            deltas.sort_unstable();
            deltas.dedup();
            for d in deltas {
                if p.bribe_tx(s, party, t.name, d).is_some() {
                    out.push(Move::Bribe(t.name.to_string(), d));
                }
            }
        }
        out
    }

    fn miner_choices(&self, key: &Key, chain: Chain) -> Vec<Choice> {
        let world = &key.state.world;
        let miner = miner_for(world.round, chain, self.opts.miners);
        let mut options: Vec<MinerChoice> =
            slash_options(world, chain).into_iter().map(|(_, outpoint, path)| MinerChoice::Slash { outpoint, path }).collect();
        if options.is_empty() || !self.opts.prune_slash {
            options.extend(world.chain(chain).mempool.iter().filter(|(_, tx)| world.is_active(tx)).map(|(id, _)| MinerChoice::Confirm(*id)));
        }
        let mut out = Vec::new();
        for choice in options {
            let label = miner_label(world, chain, &choice);
            let mut next = key.clone();
            if apply_miner_choice(&mut next.state.world, chain, miner, &choice).is_empty() {
                continue;
            }
            next.busy = true;
            out.push(Choice { label, action: GameAction::Miner(chain, choice), next: self.after(next) });
        }
        out
    }

    fn node(&mut self, key: Key, parent: Option<(NodeId, usize)>) -> Result<NodeId, GameError> {
        let point = self.settle(key);
        if let Some(&id) = self.memo.get(point.key()) {
            return Ok(id);
        }
        if self.nodes.len() >= self.opts.max_nodes {
            return Err(GameError::TooLarge(self.opts.max_nodes));
        }
        let id = self.nodes.len();
        self.parent.push(parent);
        match point {
            Point::Leaf(key) => {
                let world = key.state.world.clone();
                let utility = Utility::measure(&self.p.genesis, &world);
                self.nodes.push(GameNode::Leaf { utility, end_round: world.round, world });
                self.memo.insert(key, id);
            }
            Point::Decision { key, actor, chain, choices } => {
                let round = key.state.world.round;
                self.nodes.push(GameNode::Decision { actor, chain, round, edges: Vec::new() });
                let mut edges = Vec::with_capacity(choices.len());
                for (j, c) in choices.into_iter().enumerate() {
                    let child = self.node(c.next, Some((id, j)))?;
                    edges.push(Edge { label: c.label, action: c.action, child });
                }
                if let GameNode::Decision { edges: slot, .. } = &mut self.nodes[id] {
                    *slot = edges;
                }
                self.memo.insert(key, id);
            }
        }
        self.topo.push(id);
        Ok(id)
    }

    /// Plays honestly from round 1 until `stop` accepts a decision point.
    fn honest_walk(&self, start: Key, stop: impl Fn(&Point) -> bool) -> Option<(Point, Vec<Action>)> {
        let mut key = start;
        let mut actions = Vec::new();
        loop {
            let point = self.settle(key);
            if stop(&point) {
                return Some((point, actions));
            }
            let Point::Decision { key: k, actor, chain, choices } = point else { return None };
            let wanted = match chain {
                None => GameAction::Party(self.p.honest_action(&k.state, actor)),
                Some(c) => GameAction::Miner(c, MinerPolicy::GreedySlash.decide(&k.state.world, c)),
            };
            let choice = choices
                .into_iter()
                .find(|c| c.action == wanted || (wanted == GameAction::Party(Move::Wait) && c.action == GameAction::Leave))?;
            match &choice.action {
                GameAction::Party(mv) if *mv != Move::Wait => {
                    actions.push(Action { round: k.state.world.round, actor, kind: ActionKind::Party(mv.clone()) })
                }
                GameAction::Miner(c, m) => {
                    actions.push(Action { round: k.state.world.round, actor, kind: ActionKind::Miner(*c, m.clone()) })
                }
                _ => {}
            }
            key = choice.next;
        }
    }
}

fn miner_label(world: &WorldState, chain: Chain, choice: &MinerChoice) -> String {
    let label_of = |id| {
        world.chain(chain).mempool.get(&id).map(|tx| tx.label.clone()).or_else(|| {
            world.chain(chain).confirmed.iter().find(|(_, tx)| tx.id() == id).map(|(_, tx)| tx.label.clone())
        })
    };
    match choice {
        MinerChoice::Confirm(id) => format!("confirm {}", label_of(*id).unwrap_or_else(|| id.to_string())),
        MinerChoice::Slash { outpoint, path } => {
            format!("slash {} path {path}", label_of(outpoint.tx).unwrap_or_else(|| outpoint.to_string()))
        }
        MinerChoice::Skip => "skip".to_string(),
    }
}

/// Builds the game tree of `protocol` for the requested phase.
pub fn build_tree(protocol: &Protocol, opts: &GameOptions) -> Result<GameTree, GameError> {
    if protocol.variant != Variant::FourSwap {
        return Err(GameError::Variant(protocol.variant));
    }
    let params = &protocol.params;
    let min = params.t4 + 2;
    let horizon = opts.horizon.unwrap_or(params.t4 + 3);
    if horizon <= min {
        return Err(HorizonError { horizon, min }.into());
    }
    let mut events = vec![params.t1 + 1, params.t2 + 1, params.t4 + 1];
    events.sort_unstable();
    events.dedup();
    let mut b = Builder {
        p: protocol,
        opts,
        horizon,
        events,
        nodes: Vec::new(),
        parent: Vec::new(),
        topo: Vec::new(),
        memo: HashMap::new(),
    };
    let deliverable = protocol.deliverable();
    let start = |stage| Key { state: protocol.initial_state(deliverable.clone()), stage, left: [false; 2], busy: false };
    let (root_key, prefix) = match opts.phase {
        Phase::Full | Phase::Base => (start(Stage::SendA), Vec::new()),
        Phase::Claim | Phase::Refund => {
            let claim_root = |pt: &Point| match pt {
                Point::Decision { actor: Party::B, chain: None, choices, .. } => {
                    choices.iter().any(|c| matches!(&c.action, GameAction::Party(mv) if is_claim(protocol, mv)))
                }
                _ => false,
            };
            let (point, prefix) = b.honest_walk(start(Stage::Party(0)), claim_root).ok_or(GameError::NoRoot(opts.phase))?;
            let Point::Decision { key, choices, .. } = point else { return Err(GameError::NoRoot(opts.phase)) };
            if opts.phase == Phase::Claim {
                (key, prefix)
            } else {
                let leave = choices.into_iter().find(|c| c.action == GameAction::Leave).ok_or(GameError::NoRoot(opts.phase))?;
                (leave.next, prefix)
            }
        }
    };
    let root = b.node(root_key, None)?;
    Ok(GameTree {
        phase: opts.phase,
        nodes: b.nodes,
        root,
        topo: b.topo,
        parent: b.parent,
        prefix,
        deliverable,
        miners: opts.miners.max(1),
        horizon,
        exchange_bonus: opts.exchange_bonus,
        bribe_bound: bribe_bounds(protocol),
    })
}

fn bribe_bounds(protocol: &Protocol) -> BTreeMap<&'static str, Amount> {
    let max_fee = protocol.params.fees.max();
    let mut out = BTreeMap::new();
    for t in protocol.templates.values().filter(|t| t.kind.is_refund()) {
        let op = t.tx.inputs[0].outpoint;
        let Some(src) = protocol.templates.values().find(|s| s.id() == op.tx) else { continue };
        let locked = src.tx.outputs[op.index as usize].value;
        out.insert(t.name, locked.saturating_sub(max_fee));
    }
    out
}

/// Builds the default-seeded 4S game for `params`.
pub fn build_default(params: SwapParams, phase: Phase) -> Result<GameTree, GameError> {
    let protocol = Protocol::new(Variant::FourSwap, params, 0).map_err(|_| GameError::Variant(Variant::FourSwap))?;
    build_tree(&protocol, &GameOptions::phase(phase))
}

/// A pure strategy profile with its consequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    /// Chosen edge at every decision node.
    pub choice: Vec<Option<usize>>,
    /// Leaf reached from every node.
    pub outcome: Vec<NodeId>,
    /// Induced path from the root.
    pub path: Vec<(NodeId, usize)>,
    pub leaf: NodeId,
}

impl Solution {
    /// Completes a profile by following it from every node.
    pub fn from_choices(tree: &GameTree, choice: Vec<Option<usize>>) -> Option<Solution> {
        let mut outcome = vec![usize::MAX; tree.nodes.len()];
        for &n in &tree.topo {
            outcome[n] = if tree.is_leaf(n) { n } else { outcome[tree.edges(n).get(choice[n]?)?.child] };
        }
        let mut path = Vec::new();
        let mut cur = tree.root;
        while !tree.is_leaf(cur) {
            let e = choice[cur]?;
            path.push((cur, e));
            cur = tree.edges(cur)[e].child;
        }
        Some(Solution { choice, outcome, path, leaf: cur })
    }

    pub fn path_labels(&self, tree: &GameTree) -> Vec<String> {
        self.path
            .iter()
            .map(|&(n, e)| format!("{} {}", actor_name(tree.actor(n).expect("decision")), tree.edges(n)[e].label))
            .collect()
    }
}

/// Orders two edges of a node for its actor: higher preference, then earlier
/// termination, then the smaller label.
fn edge_order(tree: &GameTree, actor: Party, a: (NodeId, &str), b: (NodeId, &str)) -> Ordering {
    tree.preference(actor, a.0)
        .cmp(&tree.preference(actor, b.0))
        .then_with(|| tree.end_round(b.0).cmp(&tree.end_round(a.0)))
        .then_with(|| b.1.cmp(a.1))
}

pub fn backward_induction(tree: &GameTree) -> Solution {
    let mut choice = vec![None; tree.nodes.len()];
    let mut outcome = vec![usize::MAX; tree.nodes.len()];
    for &n in &tree.topo {
        match &tree.nodes[n] {
            GameNode::Leaf { .. } => outcome[n] = n,
            GameNode::Decision { actor, edges, .. } => {
                let best = (0..edges.len())
                    .max_by(|&i, &j| {
                        edge_order(tree, *actor, (outcome[edges[i].child], &edges[i].label), (outcome[edges[j].child], &edges[j].label))
                    })
                    .expect("decision nodes have an action");
                choice[n] = Some(best);
                outcome[n] = outcome[edges[best].child];
            }
        }
    }
    Solution::from_choices(tree, choice).expect("every decision node has a choice")
}

/// Nodes where some player gains by deviating from `choice` in the subgame
/// below, over all its pure continuations.
pub fn spne_violations(tree: &GameTree, choice: &[Option<usize>]) -> Vec<(NodeId, Party)> {
    let Some(sol) = Solution::from_choices(tree, choice.to_vec()) else {
        return vec![(tree.root, Party::A)];
    };
    let mut out = Vec::new();
    for player in tree.players() {
        let mut best = vec![i64::MIN; tree.nodes.len()];
        for &n in &tree.topo {
            best[n] = match &tree.nodes[n] {
                GameNode::Leaf { .. } => tree.preference(player, n),
                GameNode::Decision { actor, edges, .. } if *actor == player => {
                    edges.iter().map(|e| best[e.child]).max().expect("non-empty")
                }
                GameNode::Decision { edges, .. } => best[edges[choice[n].expect("complete")].child],
            };
            if !tree.is_leaf(n) && tree.preference(player, sol.outcome[n]) < best[n] {
                out.push((n, player));
            }
        }
    }
    out
}

pub fn verify_spne(tree: &GameTree, choice: &[Option<usize>]) -> bool {
    spne_violations(tree, choice).is_empty()
}

/// Every pure profile of the subgame at `root` that is subgame perfect and
/// resolves ties by earliest termination, then label. Exhaustive search,
/// abandoning a partial profile as soon as a fully assigned subgame fails.
pub fn brute_force(tree: &GameTree, root: NodeId) -> Vec<Vec<(NodeId, usize)>> {
    let order = tree.decisions_below(root);
    let index: HashMap<NodeId, usize> = order.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let players = tree.players();
    let mut found = Vec::new();
    let mut assign = vec![0usize; order.len()];
    let mut outcome = vec![0usize; order.len()];
    let mut best = vec![vec![0i64; players.len()]; order.len()];
    search(tree, &order, &index, &players, 0, &mut assign, &mut outcome, &mut best, &mut found);
    found
}

#[allow(clippy::too_many_arguments)]
fn search(
    tree: &GameTree,
    order: &[NodeId],
    index: &HashMap<NodeId, usize>,
    players: &[Party],
    k: usize,
    assign: &mut Vec<usize>,
    outcome: &mut Vec<NodeId>,
    best: &mut Vec<Vec<i64>>,
    found: &mut Vec<Vec<(NodeId, usize)>>,
) {
    if k == order.len() {
        found.push(order.iter().zip(assign.iter()).map(|(&n, &e)| (n, e)).collect());
        return;
    }
    let n = order[k];
    let edges = tree.edges(n);
    let actor = tree.actor(n).expect("decision");
    let leaf_of = |child: NodeId, outcome: &Vec<NodeId>| if tree.is_leaf(child) { child } else { outcome[index[&child]] };
    let best_of = |child: NodeId, p: usize, best: &Vec<Vec<i64>>| {
        if tree.is_leaf(child) { tree.preference(players[p], child) } else { best[index[&child]][p] }
    };
    for (j, e) in edges.iter().enumerate() {
        let leaf = leaf_of(e.child, outcome);
        let tie_ok = edges.iter().enumerate().all(|(i, other)| {
            i == j || edge_order(tree, actor, (leaf, &e.label), (leaf_of(other.child, outcome), &other.label)) == Ordering::Greater
        });
        if !tie_ok {
            continue;
        }
        let mut row = vec![0i64; players.len()];
        let mut ok = true;
        for (p, &player) in players.iter().enumerate() {
            row[p] = if player == actor {
                edges.iter().map(|o| best_of(o.child, p, best)).max().expect("non-empty")
            } else {
                best_of(e.child, p, best)
            };
            if tree.preference(player, leaf) < row[p] {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        assign[k] = j;
        outcome[k] = leaf;
        best[k] = row;
        search(tree, order, index, players, k + 1, assign, outcome, best, found);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BruteForceReport {
    pub subgames: usize,
    pub mismatches: Vec<NodeId>,
}

/// Compares `solution` with [`brute_force`] on every subgame with at most
/// `limit` decision nodes.
pub fn check_brute_force(tree: &GameTree, solution: &Solution, limit: usize) -> BruteForceReport {
    let mut report = BruteForceReport::default();
    for &n in &tree.topo {
        if tree.is_leaf(n) || !small_subgame(tree, n, limit) {
            continue;
        }
        report.subgames += 1;
        let profiles = brute_force(tree, n);
        let agrees = profiles.len() == 1 && profiles[0].iter().all(|&(m, e)| solution.choice[m] == Some(e));
        if !agrees {
            report.mismatches.push(n);
        }
    }
    report
}

fn small_subgame(tree: &GameTree, root: NodeId, limit: usize) -> bool {
    let mut seen = HashSet::new();
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        if tree.is_leaf(n) || !seen.insert(n) {
            continue;
        }
        if seen.len() > limit {
            return false;
        }
        stack.extend(tree.edges(n).iter().map(|e| e.child));
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlashViolation {
    pub node: NodeId,
    pub history: Vec<String>,
    pub slash_value: i64,
    pub alternative: String,
    pub alternative_value: i64,
}

impl fmt::Display for SlashViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "node {}: slash {} <= {} {} after [{}]",
            self.node,
            self.slash_value,
            self.alternative,
            self.alternative_value,
            self.history.join("; ")
        )
    }
}

/// Miner nodes where some non-slash action is worth at least as much to the
/// miner as its best slash. Meaningful on trees built without pruning.
/// Nodes reached through a bribe that leaves the locked value at or below
/// the largest fee plus the bribe are out of scope.
pub fn check_slashing_dominance(tree: &GameTree) -> Vec<SlashViolation> {
    let sol = backward_induction(tree);
    let mut out = Vec::new();
    for n in 0..tree.nodes.len() {
        let GameNode::Decision { actor, chain: Some(_), edges, .. } = &tree.nodes[n] else { continue };
        if tree.oversized_bribe_before(n) {
            continue;
        }
        let is_slash = |e: &Edge| matches!(e.action, GameAction::Miner(_, MinerChoice::Slash { .. }));
        let value = |e: &Edge| tree.preference(*actor, sol.outcome[e.child]);
        let Some(slash_value) = edges.iter().filter(|e| is_slash(e)).map(value).max() else { continue };
        for e in edges.iter().filter(|e| !is_slash(e)) {
            let v = value(e);
            if v >= slash_value {
                out.push(SlashViolation {
                    node: n,
                    history: tree.history(n),
                    slash_value,
                    alternative: e.label.clone(),
                    alternative_value: v,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiMinerReport {
    pub miners: u8,
    pub leaf_pairs: usize,
    pub mismatches: Vec<String>,
    pub same_path: bool,
}

impl MultiMinerReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty() && self.same_path
    }
}

/// Builds the tree with one miner and with `n` round-robin miners and
/// compares them node by node.
pub fn multi_miner_equivalence(protocol: &Protocol, opts: &GameOptions, n: u8) -> Result<MultiMinerReport, GameError> {
    let single = build_tree(protocol, &GameOptions { miners: 1, ..opts.clone() })?;
    let many = build_tree(protocol, &GameOptions { miners: n.max(1), ..opts.clone() })?;
    let mut mismatches = Vec::new();
    let mut leaf_pairs = 0;
    let mut seen = HashSet::new();
    let mut stack = vec![(single.root, many.root)];
    while let Some((x, y)) = stack.pop() {
        if !seen.insert((x, y)) {
            continue;
        }
        match (&single.nodes[x], &many.nodes[y]) {
            (GameNode::Leaf { utility: u, .. }, GameNode::Leaf { utility: v, .. }) => {
                leaf_pairs += 1;
                let same = [Party::A, Party::B].iter().all(|&p| Chain::BOTH.iter().all(|&c| u.on(p, c) == v.on(p, c)))
                    && u.miners_total() == v.miners_total();
                if !same {
                    mismatches.push(format!("leaf after [{}]", many.history(y).join("; ")));
                }
            }
            (GameNode::Decision { actor: a, edges: ex, .. }, GameNode::Decision { actor: b, edges: ey, .. }) => {
                let same_actor = a == b || (a.is_miner() && b.is_miner());
                let same_menu = ex.len() == ey.len() && ex.iter().zip(ey).all(|(e, f)| e.label == f.label);
                if !same_actor || !same_menu {
                    mismatches.push(format!("menu after [{}]", many.history(y).join("; ")));
                    continue;
                }
                stack.extend(ex.iter().zip(ey).map(|(e, f)| (e.child, f.child)));
            }
            _ => mismatches.push(format!("shape after [{}]", many.history(y).join("; "))),
        }
    }
    let same_path = backward_induction(&single).path_labels(&single) == backward_induction(&many).path_labels(&many);
    Ok(MultiMinerReport { miners: n, leaf_pairs, mismatches, same_path })
}

/// Graphviz rendering; the induced path of `highlight` is drawn in red.
pub fn export_dot(tree: &GameTree, highlight: Option<&Solution>) -> String {
    let on_path: HashSet<(NodeId, usize)> = highlight.map(|s| s.path.iter().copied().collect()).unwrap_or_default();
    let mut out = String::from("digraph game {\n  node [fontname=\"Helvetica\"];\n");
    for (id, node) in tree.nodes.iter().enumerate() {
        match node {
            GameNode::Decision { actor, round, .. } => {
                let _ = writeln!(out, "  n{id} [shape=box, label=\"{} r{round}\"];", actor_name(*actor));
            }
            GameNode::Leaf { utility, .. } => {
                let _ = writeln!(
                    out,
                    "  n{id} [shape=ellipse, label=\"({}, {}, {})\"];",
                    utility.of(Party::A),
                    utility.of(Party::B),
                    utility.miners_total()
                );
            }
        }
    }
    for (id, node) in tree.nodes.iter().enumerate() {
        let GameNode::Decision { edges, .. } = node else { continue };
        for (j, e) in edges.iter().enumerate() {
            let style = if on_path.contains(&(id, j)) { ", color=red, penwidth=2" } else { "" };
            let _ = writeln!(out, "  n{id} -> n{} [label=\"{}\"{style}];", e.child, e.label.replace('"', "'"));
        }
    }
    out.push_str("}\n");
    out
}

/// Actions of the induced path, prefix included.
pub fn induced_actions(tree: &GameTree, solution: &Solution) -> (BTreeSet<&'static str>, Vec<Action>) {
    tree.actions_along(&solution.path)
}

/// Whether the induced path plays exactly the honest simulation.
pub fn matches_honest(protocol: &Protocol, tree: &GameTree, solution: &Solution) -> bool {
    let mut profile = StrategyProfile::honest();
    profile.miners = tree.miners;
    let Ok(trace) = simulate_with_delivery(protocol, &profile, protocol.deliverable(), tree.horizon) else { return false };
    let (delivered, actions) = induced_actions(tree, solution);
    let no_leave = solution.path.iter().all(|&(n, e)| tree.edges(n)[e].action != GameAction::Leave);
    delivered == protocol.deliverable() && no_leave && actions == trace.actions
}

/// The equilibrium path named by the theorem: both templates sent, B
/// publishes the chain-A lock, A the chain-B lock, B claims, then A claims,
/// each confirmed, and no refunds. Waiting and sharing `s_e` may come in
/// between.
pub fn follows_theorem_path(tree: &GameTree, solution: &Solution) -> bool {
    let steps: Vec<String> =
        solution.path_labels(tree).into_iter().filter(|l| l != "A share s_e" && !l.ends_with(" wait")).collect();
    let b_claim = steps.iter().find(|s| s.starts_with("B publish ") && s.contains("claim_a")).cloned();
    let Some(b_claim) = b_claim else { return false };
    let claim_name = b_claim.trim_start_matches("B publish ").to_string();
    let expected = [
        format!("A send {}", names::LOCK_A),
        format!("B send {}", names::LOCK_B),
        format!("B publish {}", names::LOCK_A),
        format!("M confirm {}", names::LOCK_A),
        format!("A publish {}", names::LOCK_B),
        format!("M confirm {}", names::LOCK_B),
        b_claim,
        format!("M confirm {claim_name}"),
        format!("A publish {}", names::CLAIM_B),
        format!("M confirm {}", names::CLAIM_B),
    ];
    steps == expected
}

/// Human-readable solver report.
pub fn render_report(tree: &GameTree, solution: &Solution) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "phase={} nodes={} decisions={} leaves={} miners={} horizon={}",
        tree.phase,
        tree.nodes.len(),
        tree.decision_count(),
        tree.leaf_count(),
        tree.miners,
        tree.horizon
    );
    if !tree.prefix.is_empty() {
        let _ = writeln!(out, "prefix:");
        for a in &tree.prefix {
            let _ = writeln!(out, "  {a}");
        }
    }
    let _ = writeln!(out, "induced path:");
    for &(n, e) in &solution.path {
        let GameNode::Decision { actor, round, edges, .. } = &tree.nodes[n] else { continue };
        let _ = writeln!(out, "  r{round} {} {}", actor_name(*actor), edges[e].label);
    }
    let u = tree.utility(solution.leaf);
    let _ = writeln!(
        out,
        "leaf: A={} B={} miners={} end_round={}",
        u.of(Party::A),
        u.of(Party::B),
        u.miners_total(),
        tree.end_round(solution.leaf)
    );
    out
}

/// One line per decision node: actor, round, chosen action and the
/// resulting utilities.
pub fn profile_table(tree: &GameTree, solution: &Solution) -> String {
    let mut out = String::from("node\tactor\tround\tchoice\tA\tB\tM\n");
    for (n, node) in tree.nodes.iter().enumerate() {
        let GameNode::Decision { actor, round, edges, .. } = node else { continue };
        let Some(e) = solution.choice[n] else { continue };
        let u = tree.utility(solution.outcome[n]);
        let _ = writeln!(
            out,
            "{n}\t{actor}\t{round}\t{}\t{}\t{}\t{}",
            edges[e].label,
            u.of(Party::A),
            u.of(Party::B),
            u.miners_total()
        );
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FuzzReport {
    pub histories: usize,
    pub injected: usize,
    pub improvements: Vec<String>,
}

/// Samples histories, lets the acting party publish and confirm a random
/// wallet transaction outside the game's menus, replays the equilibrium
/// continuation and records any gain over the equilibrium value.
pub fn deviation_fuzz(protocol: &Protocol, tree: &GameTree, solution: &Solution, samples: usize, seed: u64) -> FuzzReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = FuzzReport::default();
    for _ in 0..samples {
        report.histories += 1;
        let mut path = Vec::new();
        let mut cur = tree.root;
        let mut target = None;
        while let GameNode::Decision { actor, edges, .. } = &tree.nodes[cur] {
            if !actor.is_miner() && rng.gen_bool(0.3) {
                target = Some(cur);
                break;
            }
            let e = if rng.gen_bool(0.7) { solution.choice[cur].expect("complete") } else { rng.gen_range(0..edges.len()) };
            path.push((cur, e));
            cur = edges[e].child;
        }
        let Some(node) = target else { continue };
        let GameNode::Decision { actor, round, .. } = tree.nodes[node] else { continue };
        let (delivered, before) = tree.actions_along(&path);
        let mut state = protocol.initial_state(delivered);
        apply_actions(protocol, &mut state, &before);
        state.world.apply_advance_to(round);
        if !inject(&mut state.world, actor, &mut rng) {
            continue;
        }
        report.injected += 1;
        let mut rest = Vec::new();
        let mut n = node;
        while let Some(e) = solution.choice.get(n).copied().flatten() {
            rest.push((n, e));
            n = tree.edges(n)[e].child;
        }
        let full: Vec<_> = path.iter().chain(rest.iter()).copied().collect();
        let (_, actions) = tree.actions_along(&full);
        apply_actions(protocol, &mut state, &actions[before.len()..]);
        let after = Utility::measure(&protocol.genesis, &state.world);
        let baseline = tree.preference(actor, solution.outcome[node]);
        let (home, away) = (1000, 1000 + tree.exchange_bonus);
        let got = match actor {
            Party::A => home * after.on(Party::A, Chain::A) + away * after.on(Party::A, Chain::B),
            _ => away * after.on(Party::B, Chain::A) + home * after.on(Party::B, Chain::B),
        };
        if got > baseline {
            report.improvements.push(format!("{actor} gains {got} > {baseline} after [{}]", tree.history(node).join("; ")));
        }
    }
    report
}

fn apply_actions(protocol: &Protocol, state: &mut SwapState, actions: &[Action]) {
    for a in actions {
        state.world.apply_advance_to(a.round);
        match &a.kind {
            ActionKind::Party(mv) => {
                let _ = protocol.apply_move(state, a.actor, mv);
            }
            ActionKind::Miner(c, choice) => {
                apply_miner_choice(&mut state.world, *c, a.actor, choice);
            }
        }
    }
}

/// Publishes and confirms a random transfer out of one of `party`'s plain
/// wallet outputs.
fn inject(world: &mut WorldState, party: Party, rng: &mut ChaCha8Rng) -> bool {
    let chain = Chain::BOTH[rng.gen_range(0..2)];
    let sig = Condition::sig(party);
    let reserved: BTreeSet<_> = world.chain(chain).mempool.values().flat_map(|tx| tx.inputs.iter().map(|i| i.outpoint)).collect();
    let Some((op, value)) = world
        .chain(chain)
        .utxo_set()
        .find(|(op, o)| o.condition == sig && !reserved.contains(op))
        .map(|(op, o)| (*op, o.value))
    else {
        return false;
    };
    let fee = rng.gen_range(0..=value.min(5));
    let gift = rng.gen_range(0..=(value - fee).min(20));
    let recipient = if rng.gen_bool(0.5) { party.counterparty() } else { Party::Miner(0) };
    let mut outputs = vec![Output::to_party(value - fee - gift, party)];
    if gift > 0 {
        outputs.push(Output::to_party(gift, recipient));
    }
    let tx = Transaction::new(chain, "fuzz", vec![Input { outpoint: op, witness: Witness::signed_by([party]) }], outputs);
    let id = tx.id();
    let miner = miner_for(world.round, chain, 1);
    world.apply_publish(tx, party).is_ok() && world.apply_confirm(miner, chain, id).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::swaps::FeeSchedule;

    fn protocol() -> Protocol {
        Protocol::new(Variant::FourSwap, SwapParams::default(), 3).unwrap()
    }

    fn tree(phase: Phase) -> GameTree {
        build_tree(&protocol(), &GameOptions::phase(phase)).unwrap()
    }

    fn labels(t: &GameTree, n: NodeId) -> Vec<String> {
        t.edges(n).iter().map(|e| e.label.clone()).collect()
    }

    #[test]
    fn base_root_and_withhold_leaf() {
        let t = tree(Phase::Base);
        assert_eq!(t.actor(t.root), Some(Party::A));
        assert_eq!(labels(&t, t.root), vec!["send lock_a", "withhold lock_a"]);
        let withhold = t.edges(t.root)[1].child;
        let u = t.utility(withhold);
        assert_eq!((u.of(Party::A), u.of(Party::B), u.miners_total()), (0, 0, 0));
    }

    #[test]
    fn claim_root_is_b_choosing_claim_or_leave() {
        let t = tree(Phase::Claim);
        assert_eq!(t.actor(t.root), Some(Party::B));
        assert_eq!(labels(&t, t.root), vec!["publish eclaim_a", "leave"]);
    }

    #[test]
    fn toy_tree_picks_better_leaf() {
        let mut t = tree(Phase::Base);
        let leaf = |a: i64| {
            let mut u = Utility::default();
            u.per_chain.insert(Party::A, [a, 0]);
            GameNode::Leaf { utility: u, world: protocol().genesis, end_round: 1 }
        };
        t.nodes = vec![
            GameNode::Decision {
                actor: Party::A,
                chain: None,
                round: 1,
                edges: vec![
                    Edge { label: "x".into(), action: GameAction::Leave, child: 1 },
                    Edge { label: "y".into(), action: GameAction::Leave, child: 2 },
                ],
            },
            leaf(1),
            leaf(0),
        ];
        t.topo = vec![1, 2, 0];
        t.parent = vec![None, Some((0, 0)), Some((0, 1))];
        t.root = 0;
        let sol = backward_induction(&t);
        assert_eq!(sol.path, vec![(0, 0)]);
        assert!(verify_spne(&t, &sol.choice));
        assert_eq!(export_dot(&t, None).matches("shape=").count(), 3);
    }

    #[test]
    fn full_tree_solves_to_honest_path() {
        let p = protocol();
        let t = build_tree(&p, &GameOptions::default()).unwrap();
        let sol = backward_induction(&t);
        assert!(follows_theorem_path(&t, &sol), "{}", render_report(&t, &sol));
        assert!(matches_honest(&p, &t, &sol));
        assert!(verify_spne(&t, &sol.choice));
        let u = t.utility(sol.leaf);
        assert_eq!((u.of(Party::A), u.of(Party::B), u.miners_total()), (-2, -2, 4));
    }

    #[test]
    fn refund_phase_ends_in_both_refunds() {
        let t = tree(Phase::Refund);
        let sol = backward_induction(&t);
        let path = sol.path_labels(&t);
        assert!(path.contains(&"A publish refund_a".to_string()), "{path:?}");
        assert!(path.contains(&"B publish refund_b".to_string()), "{path:?}");
        assert!(path.iter().all(|l| !l.contains("claim")));
        assert!(verify_spne(&t, &sol.choice));
    }

    #[test]
    fn leaving_after_locks_is_not_spne() {
        let t = tree(Phase::Claim);
        let mut sol = backward_induction(&t);
        sol.choice[t.root] = Some(1);
        assert!(!verify_spne(&t, &sol.choice));
    }

    #[test]
    fn all_wait_is_not_spne() {
        let t = tree(Phase::Claim);
        let choice: Vec<Option<usize>> = (0..t.nodes.len())
            .map(|n| {
                let edges = t.edges(n);
                if edges.is_empty() {
                    return None;
                }
                let waiting = edges.iter().position(|e| matches!(e.action, GameAction::Leave | GameAction::Party(Move::Wait)));
                Some(waiting.unwrap_or(0))
            })
            .collect();
        assert!(!verify_spne(&t, &choice));
    }

    #[test]
    fn brute_force_agrees_on_small_subgames() {
        let t = tree(Phase::Claim);
        let sol = backward_induction(&t);
        let report = check_brute_force(&t, &sol, 12);
        assert!(report.subgames > 0);
        assert!(report.mismatches.is_empty(), "{:?}", report.mismatches);
    }

    #[test]
    fn leaves_match_resimulation() {
        let p = protocol();
        let t = tree(Phase::Claim);
        let sol = backward_induction(&t);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut paths = vec![sol.path.clone()];
        for _ in 0..40 {
            let mut path = Vec::new();
            let mut cur = t.root;
            while !t.is_leaf(cur) {
                let e = rng.gen_range(0..t.edges(cur).len());
                path.push((cur, e));
                cur = t.edges(cur)[e].child;
            }
            paths.push(path);
        }
        for path in paths {
            let leaf = path.last().map_or(t.root, |&(n, e)| t.edges(n)[e].child);
            assert_eq!(&t.resimulate(&p, &path).unwrap(), t.utility(leaf));
        }
    }

    #[test]
    fn slashing_dominates_on_unpruned_claim_tree() {
        let p = protocol();
        let t = build_tree(&p, &GameOptions { phase: Phase::Claim, prune_slash: false, ..GameOptions::default() }).unwrap();
        assert!(t.nodes.iter().any(|n| matches!(n, GameNode::Decision { edges, .. }
            if edges.iter().any(|e| matches!(e.action, GameAction::Miner(_, MinerChoice::Slash { .. }))))));
        assert!(check_slashing_dominance(&t).is_empty());
    }

    #[test]
    fn bribe_near_locked_value_breaks_dominance_when_in_scope() {
        let p = protocol();
        let mut t = build_tree(&p, &GameOptions { prune_slash: false, ..GameOptions::default() }).unwrap();
        assert!(check_slashing_dominance(&t).is_empty());
        assert_eq!(t.bribe_bound.get("refund_b"), Some(&114));
        for bound in t.bribe_bound.values_mut() {
            *bound = Amount::MAX;
        }
        let v = check_slashing_dominance(&t);
        assert!(!v.is_empty());
        assert!(v.iter().all(|x| x.history.iter().any(|h| h.contains("+114"))), "{}", v[0]);
    }

    #[test]
    fn fee_above_locked_value_breaks_dominance() {
        let params = SwapParams {
            principal_b: 1,
            premium_a: 1,
            bribe_premium_b: 0,
            fees: FeeSchedule::flat(5),
            ..SwapParams::default()
        };
        let p = Protocol::new_unchecked(Variant::FourSwap, params, 3).unwrap();
        let mut t = build_tree(&p, &GameOptions { phase: Phase::Claim, prune_slash: false, ..GameOptions::default() }).unwrap();
        t.bribe_bound.clear();
        assert!(check_slashing_dominance(&t).is_empty());
        t.bribe_bound = p.templates.values().filter(|x| x.kind.is_refund()).map(|x| (x.name, Amount::MAX)).collect();
        assert!(!check_slashing_dominance(&t).is_empty());
    }

    #[test]
    fn pruned_and_unpruned_agree() {
        let p = protocol();
        let pruned = build_tree(&p, &GameOptions::phase(Phase::Claim)).unwrap();
        let full = build_tree(&p, &GameOptions { phase: Phase::Claim, prune_slash: false, ..GameOptions::default() }).unwrap();
        let (a, b) = (backward_induction(&pruned), backward_induction(&full));
        assert_eq!(a.path_labels(&pruned), b.path_labels(&full));
        let (ua, ub) = (pruned.utility(a.leaf), full.utility(b.leaf));
        assert_eq!((ua.of(Party::A), ua.of(Party::B)), (ub.of(Party::A), ub.of(Party::B)));
    }

    #[test]
    fn two_miners_match_one() {
        let report = multi_miner_equivalence(&protocol(), &GameOptions::phase(Phase::Claim), 2).unwrap();
        assert!(report.ok(), "{report:?}");
        assert!(report.leaf_pairs > 0);
    }

    #[test]
    fn dot_lists_every_node() {
        let t = tree(Phase::Base);
        let sol = backward_induction(&t);
        let dot = export_dot(&t, Some(&sol));
        assert_eq!(dot.matches("shape=").count(), t.decision_count() + t.leaf_count());
        assert_eq!(dot.matches("color=red").count(), sol.path.len());
    }

    #[test]
    fn fuzzed_transfers_never_help() {
        let p = protocol();
        let t = tree(Phase::Claim);
        let sol = backward_induction(&t);
        let report = deviation_fuzz(&p, &t, &sol, 200, 5);
        assert!(report.injected > 0);
        assert!(report.improvements.is_empty(), "{:?}", report.improvements);
    }

    #[test]
    fn phase_names_parse() {
        for ph in [Phase::Base, Phase::Claim, Phase::Refund, Phase::Full] {
            assert_eq!(ph.to_string().parse::<Phase>(), Ok(ph));
        }
        assert!("half".parse::<Phase>().is_err());
    }
}
