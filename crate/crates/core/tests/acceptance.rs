//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.

mod common;

use std::time::{Duration, Instant};

use fourswap::cli::table_rows;
use fourswap::game::{
    backward_induction, build_tree, check_brute_force, check_slashing_dominance, follows_theorem_path, matches_honest,
    multi_miner_equivalence, verify_spne, GameOptions,
};
use fourswap::ledger::EventKind;
use fourswap::rpredicate::oracle_equivalence;
use fourswap::strategies::{bribe_sweep, grief_sweep, simulate, PartyStrategy, StrategyProfile};
use fourswap::swaps::{FeeSchedule, Protocol, SwapParams, Variant};
use fourswap::Party;

const HORIZON: u64 = 60;

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion(id: u8, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Result<String, String>) -> bool {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    let mut outcome = match result {
        Ok(detail) => Outcome { pass: true, detail },
        Err(detail) => Outcome { pass: false, detail },
    };
    if let Some(b) = budget {
        if elapsed > b {
            outcome.pass = false;
            outcome.detail = format!("{} (over budget {:?})", outcome.detail, b);
        }
    }
    println!(
        "{} {id}. {name}: {} [{:.2}s]",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed.as_secs_f64()
    );
    outcome.pass
}

fn four_swap(params: SwapParams) -> Protocol {
    Protocol::new(Variant::FourSwap, params, 0).expect("valid params")
}

fn table_counts() -> Result<String, String> {
    let rows = table_rows(&SwapParams::default(), 0).map_err(|e| e.to_string())?;
    let expected = [
        (Variant::TierNolan, 4, false),
        (Variant::Hedged, 6, true),
        (Variant::GriefFree, 5, true),
        (Variant::FourSwap, 4, true),
    ];
    for (row, (v, txns, grief)) in rows.iter().zip(expected) {
        if row.variant != v || row.txns != txns || row.griefing_resistant != grief {
            return Err(format!(
                "{}: txns {} griefing {} (expected {txns} {grief})",
                row.variant, row.txns, row.griefing_resistant
            ));
        }
    }
    Ok(rows.iter().map(|r| format!("{}={}", r.variant, r.txns)).collect::<Vec<_>>().join(" "))
}

fn spne_theorem() -> Result<String, String> {
    let protocol = four_swap(SwapParams::default());
    let tree = build_tree(&protocol, &GameOptions::default()).map_err(|e| e.to_string())?;
    let sol = backward_induction(&tree);
    if !follows_theorem_path(&tree, &sol) {
        return Err(format!("induced path {:?}", sol.path_labels(&tree)));
    }
    if !matches_honest(&protocol, &tree, &sol) {
        return Err("induced actions differ from the honest run".into());
    }
    if !verify_spne(&tree, &sol.choice) {
        return Err("profile is not subgame perfect".into());
    }
    let report = check_brute_force(&tree, &sol, 12);
    if report.subgames == 0 || !report.mismatches.is_empty() {
        return Err(format!("brute force: {} subgames, mismatches at {:?}", report.subgames, report.mismatches));
    }
    Ok(format!("{} decisions, {} brute-forced subgames agree", tree.decision_count(), report.subgames))
}

fn fees_paid(events: &[fourswap::ledger::LedgerEvent], party: Party) -> i64 {
    events.iter().filter(|e| e.kind == EventKind::Publish && e.actor == party).map(|e| e.fee as i64).sum()
}

fn griefing_lemma() -> Result<String, String> {
    let params = SwapParams::default();
    let protocol = four_swap(params.clone());
    let (_, cases) = grief_sweep(&protocol, HORIZON).map_err(|e| e.to_string())?;
    let judged: Vec<_> = cases.iter().filter(|c| c.deviated && c.after_lock).collect();
    if judged.is_empty() {
        return Err("no abandonment after the first lock".into());
    }
    if let Some(c) = judged.iter().find(|c| !c.penalized()) {
        return Err(format!("{} {} not penalized: {} vs {}", c.party, c.strategy, c.utility, c.honest_utility));
    }
    let both_locked = StrategyProfile::with(Party::B, PartyStrategy::AbandonAfter(2));
    let trace = simulate(&protocol, &both_locked, HORIZON).map_err(|e| e.to_string())?;
    let gap = params.premium_b as i64 - params.premium_a as i64;
    let want_a = gap - fees_paid(&trace.events, Party::A);
    let want_b = -gap - fees_paid(&trace.events, Party::B);
    let (got_a, got_b) = (trace.utility.of(Party::A), trace.utility.of(Party::B));
    if (got_a, got_b) != (want_a, want_b) || (got_a, got_b) != (3, -7) {
        return Err(format!("case 2 deltas A {got_a:+} B {got_b:+}, expected A {want_a:+} B {want_b:+}"));
    }
    Ok(format!("{} cases penalized, case 2 deltas A {got_a:+} B {got_b:+}", judged.len()))
}

fn slashing_lemma() -> Result<String, String> {
    let mut grids = 0;
    let mut bribes = 0;
    for premium_a in [10, 12, 14] {
        for premium_b in [15, 20, 30] {
            for fee in [1, 2, 3] {
                let params = SwapParams { premium_a, premium_b, fees: FeeSchedule::flat(fee), ..SwapParams::default() };
                if params.validate().is_err() {
                    continue;
                }
                grids += 1;
                let protocol = four_swap(params);
                let tree = build_tree(&protocol, &GameOptions { prune_slash: false, ..GameOptions::default() })
                    .map_err(|e| e.to_string())?;
                if let Some(v) = check_slashing_dominance(&tree).first() {
                    return Err(format!("p_a={premium_a} p_b={premium_b} fee={fee}: {v}"));
                }
                let cases = bribe_sweep(&protocol, HORIZON).map_err(|e| e.to_string())?;
                if let Some(c) = cases.iter().find(|c| !c.penalized()) {
                    return Err(format!("p_a={premium_a} p_b={premium_b} fee={fee}: {} {} not deterred", c.party, c.strategy));
                }
                bribes += cases.len();
            }
        }
    }
    if grids == 0 {
        return Err("no valid grid point".into());
    }
    Ok(format!("{grids} parameter sets, {bribes} bribe cases deterred"))
}

fn multi_miner() -> Result<String, String> {
    let protocol = four_swap(SwapParams::default());
    let mut pairs = 0;
    for n in [2, 3] {
        let r = multi_miner_equivalence(&protocol, &GameOptions::default(), n).map_err(|e| e.to_string())?;
        if !r.ok() || r.leaf_pairs == 0 {
            return Err(format!("{n} miners: {:?} same_path={}", r.mismatches.first(), r.same_path));
        }
        pairs += r.leaf_pairs;
    }
    Ok(format!("{pairs} leaf pairs identical"))
}

fn r_predicate() -> Result<String, String> {
    let report = oracle_equivalence(&four_swap(SwapParams::default()), None);
    if report.cases != 32 * 3 * 10 || !report.ok() {
        return Err(report.to_string());
    }
    Ok(format!("{} cases, 0 disagreements", report.cases))
}

fn ledger_fuzz() -> Result<String, String> {
    let mut confirmed = 0;
    for seed in 0..10_000u64 {
        confirmed += common::fuzz_run(seed, 40)?.confirmed;
    }
    Ok(format!("10000 runs, {confirmed} confirmations"))
}

fn latency_order() -> Result<String, String> {
    let round = |v| -> Result<u64, String> {
        let p = Protocol::new(v, SwapParams::default(), 0).map_err(|e| e.to_string())?;
        let t = simulate(&p, &StrategyProfile::honest(), HORIZON).map_err(|e| e.to_string())?;
        t.completion_round().ok_or_else(|| format!("{v} did not complete"))
    };
    let (fs, hedged, gf) = (round(Variant::FourSwap)?, round(Variant::Hedged)?, round(Variant::GriefFree)?);
    if fs < hedged && fs < gf {
        Ok(format!("4s {fs} < hedged {hedged}, gf {gf}"))
    } else {
        Err(format!("4s {fs}, hedged {hedged}, gf {gf}"))
    }
}

#[test]
fn acceptance() {
    let results = [
        criterion(1, "comparison table", Some(Duration::from_secs(10)), table_counts),
        criterion(2, "equilibrium path", Some(Duration::from_secs(60)), spne_theorem),
        criterion(3, "griefing penalty", None, griefing_lemma),
        criterion(4, "slashing dominance", None, slashing_lemma),
        criterion(5, "multi-miner equivalence", None, multi_miner),
        criterion(6, "redeem predicate oracle", None, r_predicate),
        criterion(7, "ledger fuzz", None, ledger_fuzz),
        criterion(8, "honest latency order", None, latency_order),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
