//! Random ledger workloads shared by the property and acceptance tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use fourswap::conditions::{session_hash, Condition, Preimage, Witness};
use fourswap::ledger::{Input, Outpoint, Output, Transaction, TxId, WorldState};
use fourswap::{Amount, Chain, Party};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub enum Op {
    Publish(Transaction, Party),
    Confirm(Party, Chain, TxId),
    Step,
}

const PARTIES: [Party; 2] = [Party::A, Party::B];

fn secrets() -> Vec<Preimage> {
    (0u8..3).map(|i| Preimage(vec![0x5e, i])).collect()
}

fn random_condition(rng: &mut ChaCha8Rng, session: u64, depth: u8) -> Condition {
    let party = *PARTIES.choose(rng).unwrap();
    let pick = if depth == 0 { rng.gen_range(0..5) } else { rng.gen_range(0..7) };
    match pick {
        0 | 1 => Condition::sig(party),
        2 => Condition::All(vec![
            Condition::sig(party),
            Condition::Hashlock(session_hash(session, secrets().choose(rng).unwrap())),
        ]),
        3 => Condition::All(vec![Condition::sig(party), Condition::AbsTimelock(rng.gen_range(0..6))]),
        4 => Condition::All(vec![Condition::sig(party), Condition::RelTimelock(rng.gen_range(0..4))]),
        5 => Condition::AnyoneCanSpend,
        _ => Condition::Any((0..rng.gen_range(1..3)).map(|_| random_condition(rng, session, depth - 1)).collect()),
    }
}

fn random_tx(rng: &mut ChaCha8Rng, world: &WorldState, serial: u32) -> Option<(Transaction, Party)> {
    let chain = *Chain::BOTH.choose(rng).unwrap();
    let mut pool: Vec<(Outpoint, Amount)> = world.chain(chain).outputs.iter().map(|(op, c)| (*op, c.output.value)).collect();
    if rng.gen_bool(0.05) {
        pool.extend(world.chain(chain.other()).outputs.iter().map(|(op, c)| (*op, c.output.value)));
    }
    if pool.is_empty() {
        return None;
    }
    let n = rng.gen_range(1..=2.min(pool.len()));
    let chosen: Vec<(Outpoint, Amount)> = pool.choose_multiple(rng, n).copied().collect();
    let total: Amount = chosen.iter().map(|(_, v)| v).sum();
    let inputs = chosen
        .iter()
        .map(|(op, _)| {
            let signers: Vec<Party> = PARTIES.into_iter().filter(|_| rng.gen_bool(0.6)).collect();
            let preimages: Vec<Preimage> = secrets().into_iter().filter(|_| rng.gen_bool(0.3)).collect();
            Input { outpoint: *op, witness: Witness::signed_by(signers).with_preimages(preimages) }
        })
        .collect();
    let budget = if rng.gen_bool(0.05) { total + 1 } else { total.saturating_sub(rng.gen_range(0..3)) };
    let first = rng.gen_range(0..=budget);
    let mut outputs = vec![Output::new(first, random_condition(rng, world.session, 2))];
    if rng.gen_bool(0.5) {
        outputs.push(Output::new(budget - first, random_condition(rng, world.session, 2)));
    }
    let tx = Transaction::new(chain, format!("fuzz{serial}"), inputs, outputs);
    Some((tx, *PARTIES.choose(rng).unwrap()))
}

/// Applies `op`, ignoring rejected operations.
pub fn apply(world: &WorldState, op: &Op) -> WorldState {
    match op {
        Op::Publish(tx, p) => world.publish(tx.clone(), *p).unwrap_or_else(|_| world.clone()),
        Op::Confirm(m, c, id) => world.confirm(*m, *c, *id).unwrap_or_else(|_| world.clone()),
        Op::Step => world.step_round(),
    }
}

pub fn genesis(rng: &mut ChaCha8Rng, session: u64) -> (WorldState, [Amount; 2]) {
    let mut balances = Vec::new();
    let mut supply = [0; 2];
    for chain in Chain::BOTH {
        for party in PARTIES {
            let v: i64 = rng.gen_range(0..200);
            supply[chain.index()] += v as Amount;
            balances.push((party, chain, v));
        }
    }
    (WorldState::genesis(session, &balances).expect("non-negative balances"), supply)
}

fn check_invariants(world: &WorldState, supply: [Amount; 2]) -> Result<(), String> {
    for chain in Chain::BOTH {
        let state = world.chain(chain);
        let utxo: Amount = state.utxo_set().map(|(_, o)| o.value).sum();
        if utxo + world.total_fees(chain) != supply[chain.index()] {
            return Err(format!(
                "chain {chain}: utxo {utxo} + fees {} != supply {}",
                world.total_fees(chain),
                supply[chain.index()]
            ));
        }
        let mut spent = BTreeSet::new();
        for (_, tx) in &state.confirmed {
            for input in &tx.inputs {
                if !spent.insert(input.outpoint) {
                    return Err(format!("chain {chain}: {} spent twice", input.outpoint));
                }
                let created = state.outputs.get(&input.outpoint).ok_or("spent output missing")?;
                if created.spent_by != Some(tx.id()) {
                    return Err(format!("chain {chain}: {} spent_by mismatch", input.outpoint));
                }
            }
        }
        for tx in state.mempool.values() {
            if tx.inputs.iter().any(|i| !state.is_unspent(&i.outpoint)) {
                return Err(format!("chain {chain}: mempool tx {} spends a spent output", tx.label));
            }
        }
    }
    Ok(())
}

fn active_ids(world: &WorldState) -> Vec<(Chain, TxId)> {
    Chain::BOTH
        .into_iter()
        .flat_map(|c| world.chain(c).mempool.values().filter(|tx| world.is_active(tx)).map(move |tx| (c, tx.id())))
        .collect()
}

/// Result of one fuzz run.
#[derive(Debug, Default)]
pub struct FuzzStats {
    pub ops: usize,
    pub confirmed: usize,
}

/// Runs `steps` random operations from seed `seed`, checking conservation,
/// the absence of double spends, that active transactions stay active as
/// rounds advance and that replaying the operations reproduces the state.
pub fn fuzz_run(seed: u64, steps: usize) -> Result<FuzzStats, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (start, supply) = genesis(&mut rng, seed);
    let mut world = start.clone();
    let mut ops = Vec::new();
    let mut stats = FuzzStats::default();
    check_invariants(&world, supply)?;
    for serial in 0..steps as u32 {
        let roll = rng.gen_range(0..10);
        let op = if roll < 5 {
            match random_tx(&mut rng, &world, serial) {
                Some((tx, p)) => Op::Publish(tx, p),
                None => Op::Step,
            }
        } else if roll < 9 {
            let chain = *Chain::BOTH.choose(&mut rng).unwrap();
            let ids: Vec<TxId> = world.chain(chain).mempool.keys().copied().collect();
            match ids.choose(&mut rng) {
                Some(id) => Op::Confirm(Party::Miner(rng.gen_range(0..2)), chain, *id),
                None => Op::Step,
            }
        } else {
            Op::Step
        };
        let before = active_ids(&world);
        let next = apply(&world, &op);
        if matches!(op, Op::Step) {
            for (c, id) in before {
                if let Some(tx) = next.chain(c).mempool.get(&id) {
                    if !next.is_active(tx) {
                        return Err(format!("seed {seed}: {} became inactive at round {}", tx.label, next.round));
                    }
                }
            }
        }
        if let Op::Confirm(_, c, _) = op {
            stats.confirmed += next.chain(c).confirmed.len() - world.chain(c).confirmed.len();
        }
        check_invariants(&next, supply).map_err(|e| format!("seed {seed} op {serial}: {e}"))?;
        world = next;
        ops.push(op);
    }
    let replay = ops.iter().fold(start, |w, op| apply(&w, op));
    if replay != world {
        return Err(format!("seed {seed}: replay diverged"));
    }
    stats.ops = ops.len();
    Ok(stats)
}
