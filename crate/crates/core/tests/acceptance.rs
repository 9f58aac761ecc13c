//! Acceptance suite: one line per criterion with its verdict, runtime and
//! budget. Exits non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fpl_core::integration::{complexified_phenomenon, end_to_end_check, integrate, HiddenForm, IntegrationConfig};
use fpl_core::painting::{form_token, generate_painting, location_token, Painting, PaintingSpec, COLOUR_FORM_ASPECT, LOCATION_ASPECT};
use fpl_core::phenomenon::{compare_law, probabilise_painting, run_frequency_experiment};
use fpl_core::prob::{
    count_statistical_structures, event_probability, find_n0, generate_algebra, meta_probability, structure_index,
    validate_measure, AlgebraOptions, Event, Measure, SearchOptions, Universe,
};
use fpl_core::puzzle::{board_adjacency, solve_by_borders, solve_by_location, BorderOptions, FragmentPool, PuzzleMode};
use fpl_core::runner::{self, Format, Invocation, Job};
use fpl_core::Rational;

type Verdict = Result<String, String>;
type Criterion = (u32, &'static str, u64, fn() -> Verdict);

fn reference_spec() -> PaintingSpec {
    PaintingSpec::new(10, 10, &[60, 30, 10], 7)
}

fn reference_painting() -> Painting {
    generate_painting(&reference_spec()).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn source_adjacency(p: &Painting) -> BTreeSet<(String, String, fpl_core::painting::Dir)> {
    p.adjacency_graph().into_iter().map(|(a, b, d)| (form_token(a), form_token(b), d)).collect()
}

fn form_labels(p: &Painting) -> BTreeMap<String, u32> {
    p.tiles().iter().map(|t| (form_token(t.form), t.label)).collect()
}

fn histogram(p: &Painting) -> BTreeMap<u32, u64> {
    let mut h = BTreeMap::new();
    for t in p.tiles() {
        *h.entry(t.label).or_insert(0) += 1;
    }
    h
}

fn location_puzzle() -> Verdict {
    let p = reference_painting();
    for seed in 0..20 {
        let a = solve_by_location(FragmentPool::from_painting(&p, PuzzleMode::Location, 1, seed).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let r = &a.report;
        ensure(r.placements == 100 && r.trials == r.placements && r.fragments_drawn == 100, || {
            format!("seed {seed}: {} placements, {} trials", r.placements, r.trials)
        })?;
        let board = &a.boards[0];
        for t in p.tiles() {
            let here = board.get(t.x, t.y).and_then(|d| d.value(LOCATION_ASPECT));
            ensure(here == Some(location_token(t.x, t.y).as_str()), || format!("seed {seed}: cell ({}, {}) misplaced", t.x, t.y))?;
        }
    }
    Ok("20 seeds, 100 placements and 0 failed trials each".into())
}

fn border_puzzle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let mut sides = BTreeSet::new();
    for i in 0..50u64 {
        let spec = common::fuzz_spec(&mut rng, 12, 1000 + i);
        sides.insert((spec.width, spec.height));
        let p = generate_painting(&spec).map_err(|e| e.to_string())?;
        let pool = FragmentPool::from_painting(&p, PuzzleMode::Border, 1, i).map_err(|e| e.to_string())?;
        let a = solve_by_borders(pool, BorderOptions::default()).map_err(|e| format!("painting {i}: {e}"))?;
        let board = &a.boards[0];
        ensure(board_adjacency(board) == source_adjacency(&p), || format!("painting {i}: adjacency differs"))?;
        let labels = form_labels(&p);
        let mut h = BTreeMap::new();
        for d in board.pieces() {
            let f = d.value(COLOUR_FORM_ASPECT).ok_or("fragment without colour form")?;
            *h.entry(labels[f]).or_insert(0u64) += 1;
        }
        ensure(h == histogram(&p), || format!("painting {i}: histogram differs"))?;
    }
    Ok(format!("50 paintings, {} distinct shapes, adjacency and histograms exact", sides.len()))
}

/// Probability that the last of `replicas` boards completes after draw
/// `threshold`, by shuffling copies of every tile: board `k` is complete
/// once every tile has been seen `k` times.
fn simulated_last_completion(tiles: usize, replicas: usize, threshold: usize, trials: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut urn: Vec<usize> = (0..tiles).flat_map(|t| std::iter::repeat_n(t, replicas)).collect();
    let mut late = 0;
    for _ in 0..trials {
        urn.shuffle(&mut rng);
        let mut seen = vec![0usize; tiles];
        let mut last = 0;
        for (i, &t) in urn.iter().enumerate() {
            seen[t] += 1;
            if seen[t] == replicas {
                last = i + 1;
            }
        }
        if last > threshold {
            late += 1;
        }
    }
    late as f64 / trials as f64
}

fn multi_replica() -> Verdict {
    let p = reference_painting();
    let expected = source_adjacency(&p);
    let mut late = 0;
    for seed in 0..20 {
        let pool = FragmentPool::from_painting(&p, PuzzleMode::Border, 10, seed).map_err(|e| e.to_string())?;
        let a = solve_by_borders(pool, BorderOptions::default()).map_err(|e| e.to_string())?;
        let r = &a.report;
        ensure(r.completed_replicas == 10 && r.placements == 1000 && r.completion_order.len() == 10, || {
            format!("seed {seed}: {} boards after {} placements", r.completed_replicas, r.placements)
        })?;
        ensure(a.boards.iter().all(|b| board_adjacency(b) == expected), || format!("seed {seed}: a board differs from the source"))?;
        let draws: Vec<u64> = r.completion_order.iter().map(|c| c.draw_index).collect();
        ensure(draws.windows(2).all(|w| w[0] <= w[1]), || format!("seed {seed}: completion log out of order"))?;
        if draws.last().copied().unwrap_or(0) > 900 {
            late += 1;
        }
    }
    let oracle = simulated_last_completion(100, 10, 900, 2000);
    ensure(late >= 15, || format!("last completion after draw 900 in only {late}/20 seeds"))?;
    Ok(format!("10 boards and 1000 placements in 20/20 seeds; last completion after draw 900 in {late}/20 (simulated probability {oracle:.3})"))
}

fn frequency_convergence() -> Verdict {
    let p = reference_painting();
    let ph = probabilise_painting(&p);
    let law = ph.law();
    let mut within = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let d = compare_law(&run_frequency_experiment(&ph, 100_000, seed), &law).map_err(|e| e.to_string())?;
        worst = worst.max(d.sup_distance);
        if d.sup_distance <= 0.01 {
            within += 1;
        }
    }
    ensure(within >= 19, || format!("sup distance <= 0.01 in {within}/20 seeds"))?;
    Ok(format!("sup distance <= 0.01 in {within}/20 seeds, worst {worst:.4}"))
}

fn lln() -> Verdict {
    let coin = fpl_core::phenomenon::RandomPhenomenon::from_weights("coin", Universe::labels(2).unwrap(), &[1, 1]).unwrap();
    let half = Rational::new(1, 2);
    let oracle = common::binomial_within(10_000, 1, 2, 0.02);
    let est = meta_probability(&coin, "1", &half, 0.02, 10_000, 200, 2024).map_err(|e| e.to_string())?;
    ensure((est - oracle).abs() <= 0.01, || format!("estimate {est} vs oracle {oracle}"))?;
    let s = find_n0(&coin, "1", &half, 0.1, 0.05, 200, 2024, SearchOptions::default()).map_err(|e| e.to_string())?;
    ensure(s.n0 <= 512, || format!("N0 = {}", s.n0))?;
    Ok(format!("estimate {est:.4} vs oracle {oracle:.5}; N0 = {} (estimate {:.3})", s.n0, s.estimate))
}

fn axioms() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut algebras = 0u64;
    let mut pairs = 0u64;
    for n in 1..=5usize {
        let universe = Universe::labels(n as u32).unwrap();
        let full = (1u32 << n) - 1;
        let event = |mask: u32| Event::from_indices(n, (0..n).filter(|i| mask >> i & 1 == 1));
        // every generator family for small universes, sampled families beyond
        let mut families: Vec<Vec<u32>> = Vec::new();
        if n <= 3 {
            for fam in 0u64..(1 << (1 << n)) {
                families.push((0..=full).filter(|m| fam >> m & 1 == 1).collect());
            }
        } else {
            for a in 0..=full {
                for b in a..=full {
                    families.push(vec![a, b]);
                }
            }
            for _ in 0..300 {
                let k = rand::Rng::gen_range(&mut rng, 0..6);
                families.push((0..k).map(|_| rand::Rng::gen_range(&mut rng, 0..=full)).collect());
            }
        }
        for _ in 0..4 {
            // random rational atoms, zeros allowed
            let weights: Vec<u64> = (0..n).map(|_| rand::Rng::gen_range(&mut rng, 0..7)).collect();
            let weights = if weights.iter().all(|&w| w == 0) { vec![1; n] } else { weights };
            let total: u64 = weights.iter().sum();
            let m = Measure::from_counts(universe.clone(), &weights).map_err(|e| e.to_string())?;
            let atom = |i: usize| BigRational::new(BigInt::from(weights[i]), BigInt::from(total));
            for fam in &families {
                for complement in [false, true] {
                    let gens: Vec<Event> = fam.iter().map(|&g| event(g)).collect();
                    let alg = generate_algebra(&universe, &gens, AlgebraOptions { complement_closure: complement })
                        .map_err(|e| e.to_string())?;
                    let expected: BTreeSet<Event> = common::brute_closure(n, fam, complement).into_iter().map(event).collect();
                    ensure(alg.events() == &expected, || format!("n={n} gens={fam:?}: closure differs"))?;
                    let report = validate_measure(&m, &alg);
                    ensure(report.passed(), || format!("n={n} gens={fam:?}: {report:?}"))?;
                    algebras += 1;
                    // exact norm, range and disjoint additivity against direct atom sums
                    let prob = |e: &Event| -> BigRational { e.iter().map(atom).sum() };
                    for a in alg.events() {
                        let pa = event_probability(&m, a).map_err(|e| e.to_string())?;
                        ensure(pa.0 == prob(a), || format!("P({a:?}) = {pa}"))?;
                        ensure(pa.0 >= BigRational::from_integer(0.into()) && pa.0 <= BigRational::from_integer(1.into()), || {
                            format!("P({a:?}) out of range")
                        })?;
                        for b in alg.events() {
                            if a.is_disjoint(b) {
                                let pu = event_probability(&m, &a.union(b)).map_err(|e| e.to_string())?;
                                ensure(pu.0 == prob(a) + prob(b), || format!("additivity fails on {a:?}, {b:?}"))?;
                                pairs += 1;
                            }
                        }
                    }
                    let norm = event_probability(&m, &universe.full()).map_err(|e| e.to_string())?;
                    ensure(norm == Rational::one(), || "P(U) != 1".into())?;
                }
            }
        }
    }
    Ok(format!("{algebras} algebras on universes of size 1..=5, {pairs} disjoint pairs, all exact"))
}

fn integration_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut tiles = 0u64;
    for i in 0..50u64 {
        let form = HiddenForm::generate(&common::fuzz_spec(&mut rng, 12, 5000 + i), None).map_err(|e| e.to_string())?;
        let config = IntegrationConfig { confirmation_replicas: 3, ..Default::default() };
        let res = integrate(complexified_phenomenon(&form, i), config).map_err(|e| format!("form {i}: {e}"))?;
        // oracle: label counts read straight off the form
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for t in form.tiles() {
            *counts.entry(t.r).or_insert(0) += 1;
        }
        let total: u64 = counts.values().sum();
        let oracle: Vec<BigRational> = counts.values().map(|&c| BigRational::new(c.into(), total.into())).collect();
        let got: Vec<BigRational> = res.law.atoms().iter().map(|a| a.0.clone()).collect();
        ensure(got == oracle, || format!("form {i}: law {got:?} vs {oracle:?}"))?;
        let pair_sum: u64 = res.per_pair_counts.iter().map(|c| c.count).sum();
        let label_sum: u64 = res.per_label.values().sum();
        ensure(res.n_phi_total == total && label_sum == total && pair_sum == total && res.total_labels == total, || {
            format!("form {i}: count identities fail")
        })?;
        for (r, n) in &res.per_label {
            let from_pairs: u64 = res.per_pair_counts.iter().filter(|c| c.r == *r).map(|c| c.count).sum();
            ensure(from_pairs == *n && counts[r] == *n, || format!("form {i}: label {r} counts disagree"))?;
        }
        ensure(res.replicas_used_for_confirmation == 3, || format!("form {i}: {} replicas", res.replicas_used_for_confirmation))?;
        tiles += total;
    }
    Ok(format!("50 forms ({tiles} tiles): laws exact, count identities hold, 3 replicas agree"))
}

fn end_to_end() -> Verdict {
    let form = HiddenForm::generate(&reference_spec(), None).map_err(|e| e.to_string())?;
    let mut within = 0;
    let mut worst: f64 = 0.0;
    for seed in 1..=20 {
        let r = end_to_end_check(&form, 100_000, seed, IntegrationConfig::default()).map_err(|e| e.to_string())?;
        ensure(r.exact_recovery, || format!("seed {seed}: integrated law differs from the form"))?;
        worst = worst.max(r.sup_distance);
        if r.sup_distance <= 0.01 {
            within += 1;
        }
    }
    ensure(within >= 19, || format!("sup distance <= 0.01 in {within}/20 seeds"))?;

    // a run manifest written here must reproduce
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let form_path = dir.path().join("form.json");
    std::fs::write(&form_path, serde_json::to_vec(&form).unwrap()).map_err(|e| e.to_string())?;
    let inv = Invocation {
        job: Job::EndToEnd { form: form_path, draws: 100_000, tolerance: 0.01, integration: IntegrationConfig::default() },
        seed: Some(1),
        format: Format::Json,
        out: Some(dir.path().join("run")),
        jobs: None,
        config_path: None,
    };
    let outcome = runner::run(&inv, &mut std::io::sink()).map_err(|e| e.to_string())?;
    ensure(outcome.exit_code == 0, || "end-to-end run failed its check".into())?;
    let rep = runner::reproduce(&outcome.manifest_path.unwrap()).map_err(|e| e.to_string())?;
    ensure(rep.passed, || format!("manifest did not reproduce: {rep:?}"))?;
    Ok(format!("sup distance <= 0.01 in {within}/20 seeds, worst {worst:.4}; exact recovery 20/20; manifest reproduces"))
}

fn structure_count() -> Verdict {
    let mut checked = 0;
    for n in 0..=8u64 {
        for q in 1..=4usize {
            let all = common::compositions(n, q);
            let count = count_statistical_structures(n, q as u64);
            ensure(count == all.len().into(), || format!("N={n} q={q}: {count} vs {}", all.len()))?;
            let ranks: BTreeSet<_> = all.iter().map(|c| structure_index(c)).collect();
            ensure(ranks.len() == all.len() && ranks.iter().all(|r| r < &count), || format!("N={n} q={q}: ranks not a bijection"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} (N, q) pairs match enumeration"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "location puzzle certainty", 1, location_puzzle),
        (2, "border puzzle fidelity", 30, border_puzzle),
        (3, "multi-replica completion", 5, multi_replica),
        (4, "frequency convergence", 5, frequency_convergence),
        (5, "meta-probability", 10, lln),
        (6, "measure and algebra axioms", 10, axioms),
        (7, "semantic integration exactness", 60, integration_exactness),
        (8, "end-to-end coherence", 10, end_to_end),
        (9, "statistical structure count", 1, structure_count),
    ];
    let mut failed = 0;
    for (id, name, budget, f) in criteria {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let verdict = match verdict {
            Ok(d) if elapsed > Duration::from_secs(budget) => Err(format!("over budget; {d}")),
            v => v,
        };
        let (tag, detail) = match &verdict {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {id} [{name}]: {tag} in {:.2}s (budget {budget}s): {detail}", elapsed.as_secs_f64());
        if verdict.is_err() {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
