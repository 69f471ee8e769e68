//! Tier-Nolan, Hedged and Grief-Free swaps, each driven by a single secret
//! `s` held by A.
//!
//! A's lock on chain A refunds after `t4` and B's lock on chain B after `t2`,
//! so the party revealing `s` first always has time to be paid. In the
//! premium variants A, who claims first, posts the larger premium.

use std::collections::BTreeMap;

use super::names::*;
use super::{
    first_publishable, funding_tx, redeem_tx, template, uncontested_refund, Funding, Move, Protocol,
    Secret, SecretSet, SwapError, SwapParams, SwapState, Template, TxKind, Variant,
};
use crate::conditions::{Condition, Witness};
use crate::ledger::{Output, Transaction, WorldState};
use crate::types::{Amount, Chain, Party, Round};

/// Hash-and-signature claim by `claimer`, timelocked refund by `owner`.
fn htlc(secrets: &SecretSet, claimer: Party, owner: Party, refund_after: Round) -> Condition {
    Condition::Any(vec![
        Condition::All(vec![Condition::Hashlock(secrets.digest(Secret::S)), Condition::sig(claimer)]),
        Condition::All(vec![Condition::sig(owner), Condition::AbsTimelock(refund_after)]),
    ])
}

/// Premium output: joint spend into the counterparty's lock, or a
/// timelocked refund to its owner.
fn premium_condition(owner: Party, refund_after: Round) -> Condition {
    Condition::Any(vec![
        Condition::multisig([Party::A, Party::B]),
        Condition::All(vec![Condition::sig(owner), Condition::AbsTimelock(refund_after)]),
    ])
}

fn premiums(params: &SwapParams) -> (Amount, Amount) {
    let high = params.premium_a.max(params.premium_b);
    let low = params.premium_a.min(params.premium_b);
    (high, low)
}

pub(super) fn build_baseline(variant: Variant, params: SwapParams, seed: u64) -> Result<Protocol, SwapError> {
    let (pi_a, pi_b) = if variant == Variant::TierNolan { (0, 0) } else { premiums(&params) };
    let r = params.reserve;
    let balances = [
        (Party::A, Chain::A, (params.principal_a + r) as i64),
        (Party::B, Chain::A, (pi_b + r) as i64),
        (Party::A, Chain::B, (pi_a + r) as i64),
        (Party::B, Chain::B, (params.principal_b + r) as i64),
    ];
    let genesis = WorldState::genesis(params.session, &balances).expect("amounts are non-negative");
    let secrets = SecretSet::sample(params.session, &[Secret::S], seed);
    let list = match variant {
        Variant::TierNolan => tier_nolan(&params, &secrets, &genesis)?,
        Variant::Hedged | Variant::GriefFree => premium_variant(variant, &params, &secrets, &genesis, pi_a, pi_b)?,
        _ => unreachable!("4-Swap variants are built elsewhere"),
    };
    let templates: BTreeMap<_, _> = list.into_iter().map(|t| (t.name, t)).collect();
    Ok(Protocol { variant, params, secrets, templates, genesis, transcript: Vec::new() })
}

fn redeems(params: &SwapParams, lock_a: &Transaction, lock_b: &Transaction) -> Vec<Template> {
    let fee = params.fees.redeem;
    let (va, vb) = (lock_a.outputs[0].value, lock_b.outputs[0].value);
    vec![
        template(CLAIM_B, TxKind::Claim, Party::A, redeem_tx(lock_b, CLAIM_B, 0, Party::A, &[(Party::A, vb)], fee), &[Secret::S], false),
        template(CLAIM_A, TxKind::Claim, Party::B, redeem_tx(lock_a, CLAIM_A, 0, Party::B, &[(Party::B, va)], fee), &[Secret::S], false),
        template(REFUND_A, TxKind::Refund, Party::A, redeem_tx(lock_a, REFUND_A, 1, Party::A, &[(Party::A, va)], fee), &[], false),
        template(REFUND_B, TxKind::Refund, Party::B, redeem_tx(lock_b, REFUND_B, 1, Party::B, &[(Party::B, vb)], fee), &[], false),
    ]
}

fn tier_nolan(params: &SwapParams, secrets: &SecretSet, world: &WorldState) -> Result<Vec<Template>, SwapError> {
    let lock_a = funding_tx(
        Chain::A,
        LOCK_A,
        vec![Funding::wallet(world, Party::A, Chain::A, params.principal_a, "principal")?],
        None,
        Output::new(params.principal_a, htlc(secrets, Party::B, Party::A, params.t4)),
        Party::A,
        params.fees.lock,
    )?;
    let lock_b = funding_tx(
        Chain::B,
        LOCK_B,
        vec![Funding::wallet(world, Party::B, Chain::B, params.principal_b, "principal")?],
        None,
        Output::new(params.principal_b, htlc(secrets, Party::A, Party::B, params.t2)),
        Party::B,
        params.fees.lock,
    )?;
    let mut out = redeems(params, &lock_a, &lock_b);
    out.push(template(LOCK_A, TxKind::Lock, Party::A, lock_a, &[], false));
    out.push(template(LOCK_B, TxKind::Lock, Party::B, lock_b, &[], false));
    Ok(out)
}

fn premium_tx(params: &SwapParams, world: &WorldState, owner: Party, chain: Chain, value: Amount, label: &'static str) -> Result<Transaction, SwapError> {
    funding_tx(
        chain,
        label,
        vec![Funding::wallet(world, owner, chain, value, "premium")?],
        None,
        Output::new(value, premium_condition(owner, params.t1)),
        owner,
        params.fees.premium,
    )
}

fn premium_refund(params: &SwapParams, prem: &Transaction, owner: Party, label: &'static str) -> Template {
    let value = prem.outputs[0].value;
    let tx = redeem_tx(prem, label, 1, owner, &[(owner, value)], params.fees.redeem);
    template(label, TxKind::PremiumRefund, owner, tx, &[], false)
}

fn premium_variant(
    variant: Variant,
    params: &SwapParams,
    secrets: &SecretSet,
    world: &WorldState,
    pi_a: Amount,
    pi_b: Amount,
) -> Result<Vec<Template>, SwapError> {
    let joint = Witness::signed_by([Party::A, Party::B]).with_path(0);
    let prem_a = premium_tx(params, world, Party::A, Chain::B, pi_a, PREM_A)?;
    let mut out = Vec::new();

    // Hedged moves B's premium into A's lock through its own output; Grief-Free
    // spends B's wallet directly inside A's lock.
    let lock_a = if variant == Variant::Hedged {
        let prem_b = premium_tx(params, world, Party::B, Chain::A, pi_b, PREM_B)?;
        let lock = funding_tx(
            Chain::A,
            LOCK_A,
            vec![Funding::wallet(world, Party::A, Chain::A, params.principal_a, "principal")?],
            Some((prem_b.outpoint(0), joint.clone())),
            Output::new(params.principal_a + pi_b, htlc(secrets, Party::B, Party::A, params.t4)),
            Party::A,
            params.fees.lock,
        )?;
        out.push(premium_refund(params, &prem_b, Party::B, PREM_REFUND_B));
        out.push(template(PREM_B, TxKind::Premium, Party::B, prem_b, &[], false));
        lock
    } else {
        funding_tx(
            Chain::A,
            LOCK_A,
            vec![
                Funding::wallet(world, Party::A, Chain::A, params.principal_a, "principal")?,
                Funding::wallet(world, Party::B, Chain::A, pi_b, "premium")?,
            ],
            None,
            Output::new(params.principal_a + pi_b, htlc(secrets, Party::B, Party::A, params.t4)),
            Party::A,
            params.fees.lock,
        )?
    };
    let lock_b = funding_tx(
        Chain::B,
        LOCK_B,
        vec![Funding::wallet(world, Party::B, Chain::B, params.principal_b, "principal")?],
        Some((prem_a.outpoint(0), joint)),
        Output::new(params.principal_b + pi_a, htlc(secrets, Party::A, Party::B, params.t2)),
        Party::B,
        params.fees.lock,
    )?;
    out.extend(redeems(params, &lock_a, &lock_b));
    out.push(premium_refund(params, &prem_a, Party::A, PREM_REFUND_A));
    out.push(template(PREM_A, TxKind::Premium, Party::A, prem_a, &[], false));
    out.push(template(LOCK_A, TxKind::Lock, Party::A, lock_a, &[], true));
    out.push(template(LOCK_B, TxKind::Lock, Party::B, lock_b, &[], true));
    Ok(out)
}

pub(super) fn honest_action(p: &Protocol, s: &SwapState, party: Party) -> Move {
    let confirmed = |n: &str| p.templates.contains_key(n) && p.is_confirmed(s, n);
    let (own_claim, own_lock, own_refunds): (&str, &str, &[&'static str]) = match party {
        Party::A => (CLAIM_B, LOCK_A, &[REFUND_A, PREM_REFUND_A]),
        Party::B => (CLAIM_A, LOCK_B, &[REFUND_B, PREM_REFUND_B]),
        Party::Miner(_) => return Move::Wait,
    };
    if let Some(m) = first_publishable(p, s, party, &[own_claim]) {
        return m;
    }
    let own_premium = if party == Party::A { PREM_A } else { PREM_B };
    if p.templates.contains_key(own_premium) {
        if let Some(m) = first_publishable(p, s, party, &[own_premium]) {
            return m;
        }
    }
    let lock_ready = match (p.variant, party) {
        (Variant::TierNolan, Party::A) => true,
        (Variant::Hedged, Party::A) => confirmed(PREM_A) && confirmed(PREM_B),
        (Variant::GriefFree, Party::A) => confirmed(PREM_A),
        (_, _) => confirmed(LOCK_A),
    };
    if lock_ready {
        if let Some(m) = first_publishable(p, s, party, &[own_lock]) {
            return m;
        }
    }
    let refunds: Vec<&str> = own_refunds.iter().copied().filter(|n| p.templates.contains_key(n)).collect();
    uncontested_refund(p, s, party, &refunds).unwrap_or(Move::Wait)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_sets() {
        let count = |v| Protocol::new(v, SwapParams::default(), 1).unwrap().templates.len();
        assert_eq!(count(Variant::TierNolan), 6);
        assert_eq!(count(Variant::Hedged), 10);
        assert_eq!(count(Variant::GriefFree), 8);
    }

    #[test]
    fn premium_locks_carry_counterparty_premium() {
        let p = Protocol::new(Variant::Hedged, SwapParams::default(), 1).unwrap();
        assert_eq!(p.template(LOCK_A).tx.outputs[0].value, 110);
        assert_eq!(p.template(LOCK_B).tx.outputs[0].value, 115);
        let g = Protocol::new(Variant::GriefFree, SwapParams::default(), 1).unwrap();
        assert_eq!(g.template(LOCK_A).tx.inputs.len(), 2);
        assert_eq!(g.template(LOCK_A).tx.outputs[0].value, 110);
    }

    #[test]
    fn tn_initiator_locks_first() {
        let p = Protocol::new(Variant::TierNolan, SwapParams::default(), 1).unwrap();
        let s = p.honest_start();
        assert_eq!(p.honest_action(&s, Party::A), Move::publish(LOCK_A));
        assert_eq!(p.honest_action(&s, Party::B), Move::Wait);
    }
}
