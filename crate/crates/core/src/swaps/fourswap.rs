//! 4-Swap: cross-published locks carrying both principals, griefing and
//! bribery premiums, with slash paths on both chains. The zero-delay first
//! version shares the template layout but has no bribery machinery.

use std::collections::BTreeMap;

use serde::Serialize;

use super::names::*;
use super::{
    first_publishable, funding_tx, redeem_tx, template, uncontested_refund, Funding, Move, Protocol,
    Secret, SecretSet, SwapError, SwapParams, SwapState, Template, TxKind, Variant,
};
use crate::conditions::{Condition, Digest};
use crate::ledger::{Output, Transaction, WorldState};
use crate::types::{Chain, Party};

/// One off-chain setup message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SetupLeg {
    pub from: Party,
    pub to: Party,
    pub items: Vec<String>,
}

const FULL_SECRETS: [Secret; 5] = [Secret::M, Secret::R2, Secret::R1, Secret::E, Secret::Br];
const V1_SECRETS: [Secret; 2] = [Secret::M, Secret::R1];

fn digest(digests: &BTreeMap<Secret, Digest>, s: Secret) -> Result<Condition, SwapError> {
    digests.get(&s).map(|d| Condition::Hashlock(*d)).ok_or(SwapError::SetupIncomplete(s.name()))
}

fn genesis(params: &SwapParams, session_bribes: bool) -> WorldState {
    let (xa, xb) = if session_bribes { (params.bribe_premium_a, params.bribe_premium_b) } else { (0, 0) };
    let r = params.reserve;
    let balances = [
        (Party::A, Chain::A, (params.principal_a + xa + r) as i64),
        (Party::B, Chain::A, (params.premium_b + r) as i64),
        (Party::A, Chain::B, (params.premium_a + r) as i64),
        (Party::B, Chain::B, (params.principal_b + xb + r) as i64),
    ];
    WorldState::genesis(params.session, &balances).expect("amounts are non-negative")
}

/// Condition of the chain-A lock: claim, early-claim, erefund, refund,
/// slash_1, slash_2.
pub fn lock_a_condition(params: &SwapParams, d: &BTreeMap<Secret, Digest>) -> Result<Condition, SwapError> {
    let (m, e, r1, r2, br) =
        (digest(d, Secret::M)?, digest(d, Secret::E)?, digest(d, Secret::R1)?, digest(d, Secret::R2)?, digest(d, Secret::Br)?);
    Ok(Condition::Any(vec![
        Condition::All(vec![m.clone(), Condition::sig(Party::B), Condition::AbsTimelock(params.t1)]),
        Condition::All(vec![m.clone(), e, Condition::sig(Party::B)]),
        Condition::All(vec![r1.clone(), Condition::sig(Party::A)]),
        Condition::All(vec![r1.clone(), Condition::sig(Party::A), Condition::AbsTimelock(params.t2)]),
        Condition::All(vec![m.clone(), r1, Condition::AnyoneCanSpend]),
        Condition::All(vec![m, br, r2, Condition::AnyoneCanSpend]),
    ]))
}

/// Condition of the chain-B lock: claim, refund, slash_1, slash_2.
pub fn lock_b_condition(params: &SwapParams, d: &BTreeMap<Secret, Digest>) -> Result<Condition, SwapError> {
    let (m, r1, r2, br) = (digest(d, Secret::M)?, digest(d, Secret::R1)?, digest(d, Secret::R2)?, digest(d, Secret::Br)?);
    Ok(Condition::Any(vec![
        Condition::All(vec![m.clone(), br.clone(), Condition::sig(Party::A)]),
        Condition::All(vec![r2.clone(), Condition::sig(Party::B), Condition::AbsTimelock(params.t4)]),
        Condition::All(vec![m.clone(), r1, Condition::AnyoneCanSpend]),
        Condition::All(vec![m, br, r2, Condition::AnyoneCanSpend]),
    ]))
}

/// The chain-A lock, funded by A's `P_a + x_a` and B's `p_b`, published by B.
pub fn build_lock_a(params: &SwapParams, digests: &BTreeMap<Secret, Digest>, world: &WorldState) -> Result<Transaction, SwapError> {
    let condition = lock_a_condition(params, digests)?;
    lock_tx(Chain::A, LOCK_A, params, world, condition, params.principal_a + params.bribe_premium_a, params.premium_b)
}

/// The chain-B lock, funded by B's `P_b + x_b` and A's `p_a`, published by A.
pub fn build_lock_b(params: &SwapParams, digests: &BTreeMap<Secret, Digest>, world: &WorldState) -> Result<Transaction, SwapError> {
    let condition = lock_b_condition(params, digests)?;
    lock_tx(Chain::B, LOCK_B, params, world, condition, params.principal_b + params.bribe_premium_b, params.premium_a)
}

/// Cross-funded lock on `chain`: the chain's owner contributes `own`, the
/// counterparty `premium`, and the counterparty publishes.
fn lock_tx(
    chain: Chain,
    label: &'static str,
    params: &SwapParams,
    world: &WorldState,
    condition: Condition,
    own: u64,
    premium: u64,
) -> Result<Transaction, SwapError> {
    let (owner, publisher) = match chain {
        Chain::A => (Party::A, Party::B),
        Chain::B => (Party::B, Party::A),
    };
    let wallets = vec![
        Funding::wallet(world, owner, chain, own, "principal")?,
        Funding::wallet(world, publisher, chain, premium, "premium")?,
    ];
    let locked = Output::new(own + premium, condition).noted(format!("{label} joint"));
    funding_tx(chain, label, wallets, None, locked, publisher, params.fees.lock)
}

fn full_templates(params: &SwapParams, secrets: &SecretSet, world: &WorldState) -> Result<Vec<Template>, SwapError> {
    let d = secrets.digests();
    let lock_a = build_lock_a(params, &d, world)?;
    let lock_b = build_lock_b(params, &d, world)?;
    let fee = params.fees.redeem;
    let (pa, pb, qa, qb, xa, xb) = (
        params.principal_a,
        params.principal_b,
        params.premium_a,
        params.premium_b,
        params.bribe_premium_a,
        params.bribe_premium_b,
    );
    let claim_payout = [(Party::B, pa + qb), (Party::A, xa)];
    Ok(vec![
        template(CLAIM_A, TxKind::Claim, Party::B, redeem_tx(&lock_a, CLAIM_A, 0, Party::B, &claim_payout, fee), &[Secret::M], false),
        template(
            ECLAIM_A,
            TxKind::EarlyClaim,
            Party::B,
            redeem_tx(&lock_a, ECLAIM_A, 1, Party::B, &claim_payout, fee),
            &[Secret::M, Secret::E],
            false,
        ),
        template(
            EREFUND_A,
            TxKind::EarlyRefund,
            Party::A,
            redeem_tx(&lock_a, EREFUND_A, 2, Party::A, &[(Party::A, pa + xa), (Party::B, qb)], fee),
            &[Secret::R1],
            false,
        ),
        template(
            REFUND_A,
            TxKind::Refund,
            Party::A,
            redeem_tx(&lock_a, REFUND_A, 3, Party::A, &[(Party::A, pa + qb + xa)], fee),
            &[Secret::R1],
            false,
        ),
        template(
            CLAIM_B,
            TxKind::Claim,
            Party::A,
            redeem_tx(&lock_b, CLAIM_B, 0, Party::A, &[(Party::A, pb + qa), (Party::B, xb)], fee),
            &[Secret::M, Secret::Br],
            false,
        ),
        template(
            REFUND_B,
            TxKind::Refund,
            Party::B,
            redeem_tx(&lock_b, REFUND_B, 1, Party::B, &[(Party::B, pb + qa + xb)], fee),
            &[Secret::R2],
            false,
        ),
        template(LOCK_A, TxKind::Lock, Party::B, lock_a, &[], true),
        template(LOCK_B, TxKind::Lock, Party::A, lock_b, &[], true),
    ])
}

fn v1_templates(params: &SwapParams, secrets: &SecretSet, world: &WorldState) -> Result<Vec<Template>, SwapError> {
    let m = Condition::Hashlock(secrets.digest(Secret::M));
    let r1 = Condition::Hashlock(secrets.digest(Secret::R1));
    let cond_a = Condition::Any(vec![
        Condition::All(vec![m.clone(), Condition::sig(Party::B), Condition::AbsTimelock(params.t1)]),
        Condition::All(vec![r1, Condition::sig(Party::A)]),
        Condition::All(vec![Condition::sig(Party::A), Condition::AbsTimelock(params.t2)]),
    ]);
    let cond_b = Condition::Any(vec![
        Condition::All(vec![m, Condition::sig(Party::A)]),
        Condition::All(vec![Condition::sig(Party::B), Condition::AbsTimelock(params.t4)]),
    ]);
    let (pa, pb, qa, qb) = (params.principal_a, params.principal_b, params.premium_a, params.premium_b);
    let lock_a = lock_tx(Chain::A, LOCK_A, params, world, cond_a, pa, qb)?;
    let lock_b = lock_tx(Chain::B, LOCK_B, params, world, cond_b, pb, qa)?;
    let fee = params.fees.redeem;
    Ok(vec![
        template(CLAIM_A, TxKind::Claim, Party::B, redeem_tx(&lock_a, CLAIM_A, 0, Party::B, &[(Party::B, pa + qb)], fee), &[Secret::M], false),
        template(
            EREFUND_A,
            TxKind::EarlyRefund,
            Party::A,
            redeem_tx(&lock_a, EREFUND_A, 1, Party::A, &[(Party::A, pa), (Party::B, qb)], fee),
            &[Secret::R1],
            false,
        ),
        template(REFUND_A, TxKind::Refund, Party::A, redeem_tx(&lock_a, REFUND_A, 2, Party::A, &[(Party::A, pa + qb)], fee), &[], false),
        template(CLAIM_B, TxKind::Claim, Party::A, redeem_tx(&lock_b, CLAIM_B, 0, Party::A, &[(Party::A, pb + qa)], fee), &[Secret::M], false),
        template(REFUND_B, TxKind::Refund, Party::B, redeem_tx(&lock_b, REFUND_B, 1, Party::B, &[(Party::B, pb + qa)], fee), &[], false),
        template(LOCK_A, TxKind::Lock, Party::B, lock_a, &[], true),
        template(LOCK_B, TxKind::Lock, Party::A, lock_b, &[], true),
    ])
}

/// Secrets, templates and message legs produced by the off-chain setup.
pub type Setup = (SecretSet, BTreeMap<&'static str, Template>, Vec<SetupLeg>);

/// Runs the off-chain setup of full 4-Swap: samples secrets, builds every
/// template, and records the three message legs. Nothing is published.
pub fn run_setup(params: &SwapParams, seed: u64) -> Result<Setup, SwapError> {
    let world = genesis(params, true);
    let secrets = SecretSet::sample(params.session, &FULL_SECRETS, seed);
    let templates: BTreeMap<_, _> = full_templates(params, &secrets, &world)?.into_iter().map(|t| (t.name, t)).collect();
    let transcript = transcript(&secrets, &templates, true);
    Ok((secrets, templates, transcript))
}

fn transcript(secrets: &SecretSet, t: &BTreeMap<&'static str, Template>, full: bool) -> Vec<SetupLeg> {
    let h = |s: Secret| format!("H({})={}", s.name(), &secrets.digest(s).to_string()[..16]);
    let id = |n: &str| format!("{n}:{}", t[n].id());
    let mut first = vec![h(Secret::M)];
    if full {
        first.push(h(Secret::R2));
    }
    first.push(format!("utxo p_b:{}", t[LOCK_A].tx.inputs[1].outpoint));
    let mut second = vec![format!("{} (signed by A)", id(LOCK_A)), id(CLAIM_A), h(Secret::R1)];
    if full {
        second.extend([h(Secret::E), h(Secret::Br)]);
    }
    second.push(format!("utxo p_a:{}", t[LOCK_B].tx.inputs[1].outpoint));
    let third = vec![format!("{} (signed by B)", id(LOCK_B)), id(CLAIM_B)];
    vec![
        SetupLeg { from: Party::B, to: Party::A, items: first },
        SetupLeg { from: Party::A, to: Party::B, items: second },
        SetupLeg { from: Party::B, to: Party::A, items: third },
    ]
}

pub(super) fn build(variant: Variant, params: SwapParams, seed: u64) -> Result<Protocol, SwapError> {
    let full = variant == Variant::FourSwap;
    let genesis = genesis(&params, full);
    let secrets = SecretSet::sample(params.session, if full { &FULL_SECRETS } else { &V1_SECRETS }, seed);
    let list = if full { full_templates(&params, &secrets, &genesis)? } else { v1_templates(&params, &secrets, &genesis)? };
    let templates: BTreeMap<_, _> = list.into_iter().map(|t| (t.name, t)).collect();
    let transcript = transcript(&secrets, &templates, full);
    Ok(Protocol { variant, params, secrets, templates, genesis, transcript })
}

pub(super) fn honest_action(p: &Protocol, s: &SwapState, party: Party) -> Move {
    let lock_a_live = p.is_confirmed(s, LOCK_A) && s.world.chain(Chain::A).is_unspent(&p.template(LOCK_A).tx.outpoint(0));
    match party {
        Party::A => {
            if let Some(m) = first_publishable(p, s, party, &[CLAIM_B]) {
                return m;
            }
            if lock_a_live && !p.is_published(s, LOCK_B) {
                if p.can_publish(s, party, LOCK_B) {
                    return Move::publish(LOCK_B);
                }
                if !s.delivered.contains(LOCK_B) {
                    if let Some(m) = uncontested_refund(p, s, party, &[EREFUND_A]) {
                        return m;
                    }
                }
            }
            if let Some(m) = p.share_move(s, party) {
                return m;
            }
            uncontested_refund(p, s, party, &[REFUND_A]).unwrap_or(Move::Wait)
        }
        Party::B => {
            if let Some(m) = first_publishable(p, s, party, &[LOCK_A]) {
                return m;
            }
            let claims: &[&str] = if p.templates.contains_key(ECLAIM_A) { &[ECLAIM_A, CLAIM_A] } else { &[CLAIM_A] };
            if let Some(m) = first_publishable(p, s, party, claims) {
                return m;
            }
            uncontested_refund(p, s, party, &[REFUND_B]).unwrap_or(Move::Wait)
        }
        Party::Miner(_) => Move::Wait,
    }
}
