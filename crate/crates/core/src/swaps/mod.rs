//! Swap protocols: parameters, secrets, pre-signed transaction templates and
//! the honest driver of each variant.
//!
//! Every variant is materialized as a [`Protocol`]: a genesis world plus a set
//! of named [`Template`]s. Parties never build arbitrary transactions; they
//! publish templates, optionally topped up with a bribe fee, and share
//! secrets off-chain. [`SwapState`] is the run-time state the drivers read.

mod baselines;
mod fourswap;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conditions::{session_hash, Digest, Preimage, SessionId, Witness};
use crate::ledger::{EventKind, Input, LedgerError, LedgerEvent, Outpoint, Output, Transaction, TxId, WorldState};
use crate::types::{Amount, Chain, Party, Round};

pub use fourswap::{build_lock_a, build_lock_b, run_setup, SetupLeg};

/// Template names shared by all variants. `*_a` templates live on chain A.
pub mod names {
    pub const PREM_A: &str = "prem_a";
    pub const PREM_B: &str = "prem_b";
    pub const PREM_REFUND_A: &str = "prem_refund_a";
    pub const PREM_REFUND_B: &str = "prem_refund_b";
    pub const LOCK_A: &str = "lock_a";
    pub const LOCK_B: &str = "lock_b";
    pub const CLAIM_A: &str = "claim_a";
    pub const ECLAIM_A: &str = "eclaim_a";
    pub const EREFUND_A: &str = "erefund_a";
    pub const REFUND_A: &str = "refund_a";
    pub const CLAIM_B: &str = "claim_b";
    pub const REFUND_B: &str = "refund_b";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "tn")]
    TierNolan,
    #[serde(rename = "hedged")]
    Hedged,
    #[serde(rename = "gf")]
    GriefFree,
    #[serde(rename = "4s-v1")]
    FourSwapV1,
    #[serde(rename = "4s")]
    FourSwap,
}

impl Variant {
    pub const ALL: [Variant; 5] =
        [Variant::TierNolan, Variant::Hedged, Variant::GriefFree, Variant::FourSwapV1, Variant::FourSwap];

    /// Published transactions are confirmed within the same step.
    pub fn zero_delay(self) -> bool {
        self == Variant::FourSwapV1
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Variant::TierNolan => "Tier-Nolan",
            Variant::Hedged => "Hedged",
            Variant::GriefFree => "Grief-Free",
            Variant::FourSwapV1 => "4-Swap v1",
            Variant::FourSwap => "4-Swap",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::TierNolan => "tn",
            Variant::Hedged => "hedged",
            Variant::GriefFree => "gf",
            Variant::FourSwapV1 => "4s-v1",
            Variant::FourSwap => "4s",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.to_string() == s)
            .ok_or_else(|| format!("unknown variant `{s}` (expected tn, hedged, gf, 4s-v1 or 4s)"))
    }
}

/// Fee paid by the publisher of each kind of transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeeSchedule {
    pub premium: Amount,
    pub lock: Amount,
    pub redeem: Amount,
}

impl FeeSchedule {
    pub fn flat(fee: Amount) -> Self {
        FeeSchedule { premium: fee, lock: fee, redeem: fee }
    }

    pub fn max(&self) -> Amount {
        self.premium.max(self.lock).max(self.redeem)
    }
}

impl Default for FeeSchedule {
    fn default() -> Self {
        FeeSchedule::flat(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwapParams {
    pub principal_a: Amount,
    pub principal_b: Amount,
    pub premium_a: Amount,
    pub premium_b: Amount,
    pub bribe_premium_a: Amount,
    pub bribe_premium_b: Amount,
    pub t1: Round,
    pub t2: Round,
    pub t4: Round,
    pub fees: FeeSchedule,
    pub session: SessionId,
    /// Spare balance each party holds on each chain for fees and bribes.
    pub reserve: Amount,
}

impl Default for SwapParams {
    fn default() -> Self {
        SwapParams {
            principal_a: 100,
            principal_b: 100,
            premium_a: 10,
            premium_b: 15,
            bribe_premium_a: 5,
            bribe_premium_b: 5,
            t1: 10,
            t2: 20,
            t4: 40,
            fees: FeeSchedule::default(),
            session: 1,
            reserve: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("premium_b ({premium_b}) must exceed premium_a ({premium_a})")]
    PremiumOrder { premium_a: Amount, premium_b: Amount },
    #[error("premiums must exceed the largest fee ({fee})")]
    PremiumBelowFee { fee: Amount },
    #[error("timelocks must satisfy t1 < t2 < t4 with t4 - t2 >= 2 (got {t1}, {t2}, {t4})")]
    TimelockOrder { t1: Round, t2: Round, t4: Round },
    #[error("reserve {reserve} cannot cover fees")]
    ReserveTooSmall { reserve: Amount },
}

impl SwapParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, v) in [
            ("principal_a", self.principal_a),
            ("principal_b", self.principal_b),
            ("premium_a", self.premium_a),
            ("premium_b", self.premium_b),
            ("bribe_premium_a", self.bribe_premium_a),
            ("bribe_premium_b", self.bribe_premium_b),
            ("fees.premium", self.fees.premium),
            ("fees.lock", self.fees.lock),
            ("fees.redeem", self.fees.redeem),
        ] {
            if v == 0 {
                return Err(ParamError::NotPositive(name));
            }
        }
        if self.premium_b <= self.premium_a {
            return Err(ParamError::PremiumOrder { premium_a: self.premium_a, premium_b: self.premium_b });
        }
        if self.premium_a.min(self.premium_b) <= self.fees.max() {
            return Err(ParamError::PremiumBelowFee { fee: self.fees.max() });
        }
        if !(self.t1 < self.t2 && self.t2 < self.t4 && self.t4 - self.t2 >= 2) || self.t1 == 0 {
            return Err(ParamError::TimelockOrder { t1: self.t1, t2: self.t2, t4: self.t4 });
        }
        if self.reserve < 4 * self.fees.max() {
            return Err(ParamError::ReserveTooSmall { reserve: self.reserve });
        }
        Ok(())
    }

    /// Value of the 4-Swap lock on chain A: `P_a + p_b + x_a`.
    pub fn lock_a_value(&self) -> Amount {
        self.principal_a + self.premium_b + self.bribe_premium_a
    }

    /// Value of the 4-Swap lock on chain B: `P_b + p_a + x_b`.
    pub fn lock_b_value(&self) -> Amount {
        self.principal_b + self.premium_a + self.bribe_premium_b
    }
}

/// Names of the hashlock secrets. `S` is the single secret of the baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Secret {
    M,
    R2,
    R1,
    E,
    Br,
    S,
}

impl Secret {
    pub fn owner(self) -> Party {
        match self {
            Secret::M | Secret::R2 => Party::B,
            Secret::R1 | Secret::E | Secret::Br | Secret::S => Party::A,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Secret::M => "s_m",
            Secret::R2 => "s_r2",
            Secret::R1 => "s_r1",
            Secret::E => "s_e",
            Secret::Br => "s_br",
            Secret::S => "s",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SecretSet {
    pub session: SessionId,
    preimages: BTreeMap<Secret, Preimage>,
}

impl SecretSet {
    /// Samples 32-byte preimages for `names` from a seeded stream.
    pub fn sample(session: SessionId, names: &[Secret], seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut preimages = BTreeMap::new();
        for &name in names {
            let mut bytes = vec![0u8; 32];
            rng.fill_bytes(&mut bytes);
            preimages.insert(name, Preimage(bytes));
        }
        SecretSet { session, preimages }
    }

    pub fn preimage(&self, name: Secret) -> &Preimage {
        &self.preimages[&name]
    }

    pub fn digest(&self, name: Secret) -> Digest {
        session_hash(self.session, self.preimage(name))
    }

    pub fn digests(&self) -> BTreeMap<Secret, Digest> {
        self.preimages.keys().map(|&n| (n, self.digest(n))).collect()
    }

    pub fn names(&self) -> impl Iterator<Item = Secret> + '_ {
        self.preimages.keys().copied()
    }

    pub fn all_distinct(&self) -> bool {
        let set: BTreeSet<&Preimage> = self.preimages.values().collect();
        set.len() == self.preimages.len()
    }

    pub fn name_of(&self, preimage: &Preimage) -> Option<Secret> {
        self.preimages.iter().find(|(_, p)| *p == preimage).map(|(n, _)| *n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TxKind {
    Premium,
    Lock,
    Claim,
    EarlyClaim,
    EarlyRefund,
    Refund,
    PremiumRefund,
}

impl TxKind {
    /// Kinds an abandoning party still publishes.
    pub fn is_timelocked_refund(self) -> bool {
        matches!(self, TxKind::Refund | TxKind::PremiumRefund)
    }

    pub fn is_refund(self) -> bool {
        matches!(self, TxKind::Refund | TxKind::PremiumRefund | TxKind::EarlyRefund)
    }
}

/// A pre-built transaction a party may publish.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub name: &'static str,
    pub kind: TxKind,
    pub publisher: Party,
    pub tx: Transaction,
    /// Secrets filled into the first input's witness at publication.
    pub needs: Vec<Secret>,
    /// Counterparty signature handed over during setup is required.
    pub needs_delivery: bool,
}

impl Template {
    pub fn chain(&self) -> Chain {
        self.tx.chain
    }

    pub fn id(&self) -> TxId {
        self.tx.id()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SwapError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("{party} lacks funds on chain {chain} for {what}")]
    InsufficientFunds { party: Party, chain: Chain, what: &'static str },
    #[error("digest of {0} missing from setup")]
    SetupIncomplete(&'static str),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("{party} cannot perform `{action}` now")]
    IllegalMove { party: Party, action: String },
}

/// A protocol-level action of a party.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Move {
    Publish(String),
    /// Publish a template with `delta` added to its fee.
    Bribe(String, Amount),
    Share(Secret),
    Wait,
}

impl Move {
    pub fn publish(name: &str) -> Move {
        Move::Publish(name.to_string())
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Publish(n) => write!(f, "publish {n}"),
            Move::Bribe(n, d) => write!(f, "bribe {n} +{d}"),
            Move::Share(s) => write!(f, "share {}", s.name()),
            Move::Wait => f.write_str("wait"),
        }
    }
}

/// A fully set-up swap: genesis world and all templates.
#[derive(Debug, Clone)]
pub struct Protocol {
    pub variant: Variant,
    pub params: SwapParams,
    pub secrets: SecretSet,
    pub templates: BTreeMap<&'static str, Template>,
    pub genesis: WorldState,
    pub transcript: Vec<SetupLeg>,
}

/// World plus the setup messages that actually reached their recipient.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SwapState {
    pub world: WorldState,
    pub delivered: BTreeSet<&'static str>,
}

impl Protocol {
    pub fn new(variant: Variant, params: SwapParams, seed: u64) -> Result<Protocol, SwapError> {
        params.validate()?;
        Protocol::new_unchecked(variant, params, seed)
    }

    /// Builds without parameter validation, for deliberately broken setups.
    pub fn new_unchecked(variant: Variant, params: SwapParams, seed: u64) -> Result<Protocol, SwapError> {
        match variant {
            Variant::FourSwap | Variant::FourSwapV1 => fourswap::build(variant, params, seed),
            _ => baselines::build_baseline(variant, params, seed),
        }
    }

    pub fn template(&self, name: &str) -> &Template {
        self.templates.get(name).unwrap_or_else(|| panic!("no template `{name}` in {}", self.variant))
    }

    pub fn template_names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.templates.keys().copied()
    }

    /// Templates whose counterparty signature travels in a setup message.
    pub fn deliverable(&self) -> BTreeSet<&'static str> {
        self.templates.values().filter(|t| t.needs_delivery).map(|t| t.name).collect()
    }

    /// State at round 1 with the given setup messages delivered.
    pub fn initial_state(&self, delivered: BTreeSet<&'static str>) -> SwapState {
        let mut world = self.genesis.clone();
        for name in self.secrets.names() {
            world.learn(name.owner(), self.secrets.preimage(name).clone());
        }
        world.apply_step_round();
        SwapState { world, delivered }
    }

    pub fn honest_start(&self) -> SwapState {
        self.initial_state(self.deliverable())
    }

    /// Setup messages a party sends to its counterparty.
    pub fn sent_by(&self, party: Party) -> BTreeSet<&'static str> {
        self.templates
            .values()
            .filter(|t| t.needs_delivery && t.publisher == party.counterparty())
            .map(|t| t.name)
            .collect()
    }

    pub fn template_kind(&self, label: &str) -> Option<TxKind> {
        let base = label.split('+').next().unwrap_or(label);
        self.templates.get(base).map(|t| t.kind)
    }

    /// The template transaction with the publisher's secrets filled in.
    pub fn instantiate(&self, state: &SwapState, party: Party, name: &str) -> Option<Transaction> {
        let template = self.templates.get(name)?;
        if template.publisher != party {
            return None;
        }
        if template.needs_delivery && !state.delivered.contains(template.name) {
            return None;
        }
        let mut tx = template.tx.clone();
        for &secret in &template.needs {
            let p = self.secrets.preimage(secret);
            if !state.world.knows(party, p) {
                return None;
            }
            tx.inputs[0].witness.preimages.insert(p.clone());
        }
        Some(tx)
    }

    /// Published or confirmed, by template id.
    pub fn is_published(&self, state: &SwapState, name: &str) -> bool {
        let t = self.template(name);
        let chain = state.world.chain(t.chain());
        chain.mempool.contains_key(&t.id()) || chain.is_confirmed(t.id())
    }

    pub fn is_confirmed(&self, state: &SwapState, name: &str) -> bool {
        let t = self.template(name);
        state.world.chain(t.chain()).is_confirmed(t.id())
    }

    pub fn is_pending(&self, state: &SwapState, name: &str) -> bool {
        let t = self.template(name);
        state.world.chain(t.chain()).mempool.contains_key(&t.id())
    }

    /// Any pending transaction by `by` spending the first input of `name`.
    pub fn pending_spend_by(&self, state: &SwapState, name: &str, by: Party) -> bool {
        let t = self.template(name);
        let op = t.tx.inputs[0].outpoint;
        state
            .world
            .chain(t.chain())
            .mempool
            .values()
            .any(|tx| tx.publisher == Some(by) && tx.inputs.iter().any(|i| i.outpoint == op))
    }

    /// Whether any pending transaction spends the first input of `name`.
    pub fn pending_spend(&self, state: &SwapState, name: &str) -> bool {
        self.pending_spend_by(state, name, Party::A) || self.pending_spend_by(state, name, Party::B)
    }

    fn inputs_live(&self, state: &SwapState, tx: &Transaction) -> bool {
        tx.inputs.iter().all(|i| state.world.chain(tx.chain).is_unspent(&i.outpoint))
    }

    /// Publishable right now and active.
    pub fn can_publish(&self, state: &SwapState, party: Party, name: &str) -> bool {
        self.ready(state, party, name).is_some_and(|tx| state.world.is_active(&tx))
    }

    /// Constructible, inputs live, and not yet published.
    pub fn ready(&self, state: &SwapState, party: Party, name: &str) -> Option<Transaction> {
        let tx = self.instantiate(state, party, name)?;
        if self.is_published(state, name)
            || !self.inputs_live(state, &tx)
            || self.pending_spend_by(state, name, party)
        {
            return None;
        }
        Some(tx)
    }

    /// The template topped up with a wallet input that adds `delta` to the fee.
    pub fn bribe_tx(&self, state: &SwapState, party: Party, name: &str, delta: Amount) -> Option<Transaction> {
        let base = self.ready(state, party, name)?;
        let chain = base.chain;
        let reserved: BTreeSet<Outpoint> = state
            .world
            .chain(chain)
            .mempool
            .values()
            .flat_map(|tx| tx.inputs.iter().map(|i| i.outpoint))
            .collect();
        let sig = crate::conditions::Condition::sig(party);
        let (op, value) = state
            .world
            .chain(chain)
            .utxo_set()
            .find(|(op, o)| o.condition == sig && o.value >= delta && !reserved.contains(op))
            .map(|(op, o)| (*op, o.value))?;
        let mut inputs = base.inputs.clone();
        inputs.push(Input { outpoint: op, witness: Witness::signed_by([party]) });
        let mut outputs = base.outputs.clone();
        outputs.push(Output::to_party(value - delta, party));
        Some(Transaction::new(chain, format!("{}+bribe", base.label), inputs, outputs))
    }

    /// Applies a party's move to the state.
    pub fn apply_move(&self, state: &mut SwapState, party: Party, mv: &Move) -> Result<Vec<LedgerEvent>, SwapError> {
        let illegal = || SwapError::IllegalMove { party, action: mv.to_string() };
        match mv {
            Move::Wait => Ok(Vec::new()),
            Move::Publish(name) => {
                let tx = self.ready(state, party, name).ok_or_else(illegal)?;
                Ok(state.world.apply_publish(tx, party)?)
            }
            Move::Bribe(name, delta) => {
                let tx = self.bribe_tx(state, party, name, *delta).ok_or_else(illegal)?;
                Ok(state.world.apply_publish(tx, party)?)
            }
            Move::Share(secret) => {
                if secret.owner() != party || !self.secrets.names().any(|n| n == *secret) {
                    return Err(illegal());
                }
                let to = party.counterparty();
                let p = self.secrets.preimage(*secret).clone();
                if state.world.knows(to, &p) {
                    return Ok(Vec::new());
                }
                state.world.learn(to, p);
                Ok(vec![LedgerEvent {
                    round: state.world.round,
                    chain: None,
                    kind: EventKind::Message,
                    tx: None,
                    label: format!("share {}", secret.name()),
                    actor: party,
                    fee: 0,
                }])
            }
        }
    }

    /// Moves a party may take: every publishable active template, bribes
    /// against a pending conflicting counterparty transaction, secret
    /// sharing, and waiting.
    pub fn legal_moves(&self, state: &SwapState, party: Party, bribes: &[Amount]) -> Vec<Move> {
        let mut moves = Vec::new();
        for (name, t) in &self.templates {
            if t.publisher != party {
                continue;
            }
            let Some(tx) = self.ready(state, party, name) else { continue };
            if state.world.is_active(&tx) {
                moves.push(Move::publish(name));
            } else if t.kind.is_refund()
                && self.pending_spend_by(state, name, party.counterparty())
                && !self.pending_spend_by(state, name, party)
            {
                for &d in bribes {
                    if self.bribe_tx(state, party, name, d).is_some() {
                        moves.push(Move::Bribe(name.to_string(), d));
                    }
                }
            }
        }
        if let Some(mv) = self.share_move(state, party) {
            moves.push(mv);
        }
        moves.push(Move::Wait);
        moves
    }

    fn share_move(&self, state: &SwapState, party: Party) -> Option<Move> {
        if self.variant != Variant::FourSwap || party != Party::A {
            return None;
        }
        let s_e = self.secrets.preimage(Secret::E);
        let ready = self.is_confirmed(state, names::LOCK_B)
            && state.world.chain(Chain::A).is_unspent(&self.template(names::LOCK_A).tx.outpoint(0))
            && !state.world.knows(Party::B, s_e);
        ready.then_some(Move::Share(Secret::E))
    }

    /// The honest protocol action of `party`.
    pub fn honest_action(&self, state: &SwapState, party: Party) -> Move {
        match self.variant {
            Variant::FourSwap | Variant::FourSwapV1 => fourswap::honest_action(self, state, party),
            _ => baselines::honest_action(self, state, party),
        }
    }

    /// Confirmed swap transactions (genesis excluded).
    pub fn confirmed_count(&self, state: &SwapState) -> usize {
        Chain::BOTH
            .iter()
            .map(|&c| state.world.chain(c).confirmed.iter().filter(|(_, tx)| tx.label != "genesis").count())
            .sum()
    }
}

/// First template in `names` the party can publish now.
fn first_publishable(p: &Protocol, s: &SwapState, party: Party, names: &[&str]) -> Option<Move> {
    names.iter().find(|n| p.can_publish(s, party, n)).map(|n| Move::publish(n))
}

/// A refund that does not race a pending counterparty spend.
fn uncontested_refund(p: &Protocol, s: &SwapState, party: Party, names: &[&str]) -> Option<Move> {
    names
        .iter()
        .find(|n| p.can_publish(s, party, n) && !p.pending_spend(s, n))
        .map(|n| Move::publish(n))
}

/// Genesis outpoint of `party` on `chain`; genesis pays A first, then B.
fn genesis_outpoint(world: &WorldState, party: Party, chain: Chain) -> Result<(Outpoint, Amount), SwapError> {
    let genesis = &world.chain(chain).confirmed.first().ok_or(SwapError::InsufficientFunds {
        party,
        chain,
        what: "genesis",
    })?;
    let tx = &genesis.1;
    tx.outputs
        .iter()
        .position(|o| o.beneficiary_note.as_deref() == Some(&party.to_string()))
        .map(|i| (tx.outpoint(i as u32), tx.outputs[i].value))
        .ok_or(SwapError::InsufficientFunds { party, chain, what: "genesis" })
}

/// A funding input with the amount it contributes and who receives change.
struct Funding {
    party: Party,
    outpoint: Outpoint,
    available: Amount,
    contributes: Amount,
}

impl Funding {
    fn wallet(world: &WorldState, party: Party, chain: Chain, contributes: Amount, what: &'static str) -> Result<Funding, SwapError> {
        let (outpoint, available) = genesis_outpoint(world, party, chain)?;
        if available < contributes {
            return Err(SwapError::InsufficientFunds { party, chain, what });
        }
        Ok(Funding { party, outpoint, available, contributes })
    }
}

/// A transaction moving wallet funds (and optionally an existing output)
/// into `locked`, returning change to each wallet. The publisher pays `fee`
/// out of its own change.
fn funding_tx(
    chain: Chain,
    label: &'static str,
    wallets: Vec<Funding>,
    extra: Option<(Outpoint, Witness)>,
    locked: Output,
    publisher: Party,
    fee: Amount,
) -> Result<Transaction, SwapError> {
    let mut inputs = Vec::new();
    if let Some((op, w)) = extra {
        inputs.push(Input { outpoint: op, witness: w });
    }
    let mut outputs = vec![locked];
    for f in &wallets {
        inputs.push(Input { outpoint: f.outpoint, witness: Witness::signed_by([f.party]) });
        let mut change = f.available - f.contributes;
        if f.party == publisher {
            change = change.checked_sub(fee).ok_or(SwapError::InsufficientFunds { party: f.party, chain, what: label })?;
        }
        outputs.push(Output::to_party(change, f.party));
    }
    Ok(Transaction::new(chain, label, inputs, outputs))
}

/// Spends output 0 of `source` along `path`, paying `payouts` with the fee
/// taken from the publisher's share.
fn redeem_tx(
    source: &Transaction,
    label: &'static str,
    path: usize,
    signer: Party,
    payouts: &[(Party, Amount)],
    fee: Amount,
) -> Transaction {
    let input = Input { outpoint: source.outpoint(0), witness: Witness::signed_by([signer]).with_path(path) };
    let outputs = payouts
        .iter()
        .map(|&(p, v)| (p, if p == signer { v.saturating_sub(fee) } else { v }))
        .filter(|(_, v)| *v > 0)
        .map(|(p, v)| Output::to_party(v, p))
        .collect();
    Transaction::new(source.chain, label, vec![input], outputs)
}

fn template(name: &'static str, kind: TxKind, publisher: Party, tx: Transaction, needs: &[Secret], needs_delivery: bool) -> Template {
    Template { name, kind, publisher, tx, needs: needs.to_vec(), needs_delivery }
}
