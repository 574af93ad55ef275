//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits with
//! a non-zero status if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use continual_dp::adversarial::{
    adjacent_pair, gen_event_level, gen_user_level, spread_of, transformation, witness_pair, GenParams, SpreadSpec,
    Target, WitnessKind,
};
use continual_dp::counter::{levels, BinaryMechanism, ScaleMode};
use continual_dp::diff::{diff_release, needs_degree, sensitivity_bound, Adjacency, ReleaseConfig, Sensitivity};
use continual_dp::funcs::{static_sensitivity, GraphFunction};
use continual_dp::graph::{check_adjacency, AdjacencyKind, EdgeKey, Graph, GraphSequence, Regime, Update, Weight};
use continual_dp::monotone::{additive_error, monotone_release_values, power_budget, SvtAnswer, SvtState};
use continual_dp::noise::RandomSource;
use continual_dp::oracle::{checked_pair_sensitivity, compare_with_table, max_sensitivity, pair_sensitivity, OracleScope, Verdict};

/// Outcome of one criterion: pass flag and a one-line summary.
type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn kind_of(adjacency: Adjacency) -> AdjacencyKind {
    match adjacency {
        Adjacency::Edge => AdjacencyKind::EdgeEvent,
        Adjacency::Node => AdjacencyKind::NodeEvent,
    }
}

/// Random incremental sequence: up to `n` nodes, `t` steps, weights in
/// `1..=w`. Each step may add one node and inserts absent edges among present
/// nodes with probability `p`.
fn random_incremental(rng: &mut ChaCha8Rng, n: u64, t: usize, w: Weight, p: f64) -> GraphSequence {
    let start = rng.gen_range(1..=n);
    let mut g = Graph::new(w);
    for v in 0..start {
        g.add_node(v);
    }
    for i in 0..start {
        for j in i + 1..start {
            if rng.gen_bool(p) {
                g.insert_edge(i, j, rng.gen_range(1..=w)).unwrap();
            }
        }
    }
    let initial = g.clone();
    let mut next = start;
    let mut updates = Vec::new();
    for _ in 0..t {
        let mut u = Update::empty();
        if next < n && rng.gen_bool(0.3) {
            u.v_ins.insert(next);
            next += 1;
        }
        for i in 0..next {
            for j in i + 1..next {
                let k = EdgeKey::of(i, j);
                if g.weight(&k).is_none() && rng.gen_bool(p) {
                    u.e_ins.insert(k, rng.gen_range(1..=w));
                }
            }
        }
        u.apply_to(&mut g, 0).unwrap();
        updates.push(u);
    }
    GraphSequence::new(initial, updates)
}

/// Edge-count stream over `nodes` nodes: each step inserts one absent edge
/// with probability `p`.
fn sparse_edge_sequence(seed: u64, nodes: u64, t: usize, p: f64) -> GraphSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = Graph::from_parts(1, 0..nodes, []).unwrap();
    let mut absent: Vec<EdgeKey> = (0..nodes)
        .flat_map(|i| (i + 1..nodes).map(move |j| EdgeKey::of(i, j)))
        .collect();
    let updates = (0..t)
        .map(|_| {
            if !absent.is_empty() && rng.gen_bool(p) {
                let k = absent.swap_remove(rng.gen_range(0..absent.len()));
                Update::insert_edge(k.u(), k.v(), 1)
            } else {
                Update::empty()
            }
        })
        .collect();
    GraphSequence::new(initial, updates)
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let functions = [
        GraphFunction::EdgeCount,
        GraphFunction::HighDegree { tau: 2 },
        GraphFunction::HighDegree { tau: 3 },
        GraphFunction::DegreeHistogram,
        GraphFunction::TriangleCount,
        GraphFunction::KStarCount { k: 2 },
        GraphFunction::KStarCount { k: 3 },
        GraphFunction::MstWeight,
    ];
    let mut cells = Vec::new();
    for adjacency in [Adjacency::Edge, Adjacency::Node] {
        for f in functions {
            let weights: Vec<Weight> = if f == GraphFunction::MstWeight { vec![1, 2, 3] } else { vec![1] };
            let degrees: Vec<Option<usize>> = if needs_degree(&f, adjacency) {
                (1..=4).map(Some).collect()
            } else {
                vec![None]
            };
            for &w in &weights {
                for &d in &degrees {
                    cells.push((f, adjacency, Regime::Incremental, w, d));
                }
            }
        }
    }
    cells.push((GraphFunction::EdgeCount, Adjacency::Edge, Regime::FullyDynamic, 1, None));
    let mut violations = Vec::new();
    let mut tight = 0;
    for &(f, adjacency, regime, w, d) in &cells {
        let scope = OracleScope::new(5, 4, w, d, regime);
        let report = match max_sensitivity(&f, adjacency, &scope) {
            Ok(r) => r,
            Err(e) => return (false, format!("{f} {adjacency}: oracle error {e}")),
        };
        let bound = sensitivity_bound(&f, adjacency, regime, d, w).expect("finite cell");
        if let Some((a, b)) = &report.witness {
            let check = checked_pair_sensitivity(&f, a, b, kind_of(adjacency));
            if check.as_ref().ok() != Some(&report.value) {
                return (false, format!("{f} {adjacency}: witness re-evaluation {check:?} != {}", report.value));
            }
        }
        match compare_with_table(report.value, bound) {
            Verdict::Violation => violations.push(format!("{f} {adjacency} W={w} D={d:?}: {} > {bound:?}", report.value)),
            Verdict::Tight => tight += 1,
            Verdict::Sound => {}
        }
    }
    let elapsed = started.elapsed();
    let ok = violations.is_empty() && elapsed <= Duration::from_secs(600);
    (
        ok,
        format!(
            "{} cells at n=5 T=4, {} tight, {} violations {:?}, {:.1}s (limit 600s)",
            cells.len(),
            tight,
            violations.len(),
            violations,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for w in [2u32, 3] {
        let scope = OracleScope::new(5, 4, w, None, Regime::Incremental);
        let oracle = max_sensitivity(&GraphFunction::MstWeight, Adjacency::Edge, &scope).unwrap().value;
        let pair = witness_pair(WitnessKind::MstTight, Adjacency::Edge, 3, w as usize).unwrap();
        let adjacent = check_adjacency(&pair.a, &pair.b, AdjacencyKind::EdgeEvent).unwrap().is_some();
        let fixture = pair_sensitivity(&pair.function, &pair.a, &pair.b).unwrap();
        let target = f64::from(2 * w - 2);
        ok &= adjacent && oracle == target && fixture == target;
        notes.push(format!("W={w}: oracle {oracle}, fixture {fixture}, 2W-2 {target}"));
    }
    let cases: Vec<(WitnessKind, Adjacency, usize, Option<GraphFunction>)> = vec![
        (WitnessKind::HighDegreeFullyDynamic, Adjacency::Edge, 3, None),
        (WitnessKind::HighDegreeFullyDynamic, Adjacency::Node, 3, None),
        (WitnessKind::HighDegreeFullyDynamic, Adjacency::Edge, 3, Some(GraphFunction::DegreeHistogram)),
        (WitnessKind::HighDegreeFullyDynamic, Adjacency::Node, 3, Some(GraphFunction::DegreeHistogram)),
        (WitnessKind::TrianglesFullyDynamic, Adjacency::Edge, 0, None),
        (WitnessKind::TrianglesFullyDynamic, Adjacency::Node, 0, None),
        (WitnessKind::KStarFullyDynamic, Adjacency::Edge, 2, None),
        (WitnessKind::KStarFullyDynamic, Adjacency::Node, 2, None),
        (WitnessKind::KStarFullyDynamic, Adjacency::Edge, 3, None),
        (WitnessKind::KStarFullyDynamic, Adjacency::Node, 3, None),
        (WitnessKind::EdgesFullyDynamic, Adjacency::Node, 0, None),
        (WitnessKind::MstFullyDynamic, Adjacency::Edge, 3, None),
        (WitnessKind::MstFullyDynamic, Adjacency::Node, 3, None),
        (WitnessKind::MatchingIncremental, Adjacency::Edge, 0, None),
        (WitnessKind::MatchingIncremental, Adjacency::Node, 0, None),
        (WitnessKind::MatchingIncremental, Adjacency::Edge, 0, Some(GraphFunction::MaxWeightMatching)),
        (WitnessKind::MinCutIncremental, Adjacency::Edge, 3, None),
        (WitnessKind::MinCutIncremental, Adjacency::Node, 3, None),
    ];
    let mut failures = Vec::new();
    let mut checked = 0;
    for (kind, adjacency, param, over) in cases {
        for t in [3usize, 4, 6] {
            let pair = witness_pair(kind, adjacency, t, param).unwrap();
            let f = over.unwrap_or(pair.function);
            let unbounded = sensitivity_bound(&f, adjacency, pair.regime, Some(4), 3).unwrap() == Sensitivity::Unbounded;
            let adjacent = check_adjacency(&pair.a, &pair.b, kind_of(adjacency)).unwrap().is_some();
            let value = pair_sensitivity(&f, &pair.a, &pair.b).unwrap();
            checked += 1;
            if !(unbounded && adjacent && value >= t as f64) {
                failures.push(format!(
                    "{kind:?}/{adjacency}/{f} T={t}: value {value}, adjacent {adjacent}, unbounded cell {unbounded}"
                ));
            }
        }
    }
    ok &= failures.is_empty();
    (
        ok,
        format!("{}; {checked} unbounded fixtures >= T, failures {:?}", notes.join("; "), failures),
    )
}

fn closed_form(target: Target, sigma: &[bool], w: f64, d: f64, t: usize) -> f64 {
    let s = sigma[..t].iter().filter(|&&b| b).count() as f64;
    let big_t = sigma.len() as f64;
    match target {
        Target::MstEdge => w * s + big_t,
        Target::MstNode | Target::CutEdge | Target::CutNode | Target::MatchingNode => w * s,
        Target::MatchingEdge => w * s + w * big_t,
        Target::EdgesEdge | Target::HighDegreeEdge | Target::HistogramEdge | Target::TrianglesEdge | Target::KStarEdge => s,
        Target::EdgesNode | Target::HighDegreeNode | Target::HistogramNode | Target::TrianglesNode | Target::KStarNode => {
            d * s
        }
    }
}

fn criterion_3() -> Outcome {
    let horizons = [1usize, 2, 3, 4, 5, 8, 13, 21, 32];
    let mut jobs = Vec::new();
    for target in Target::ALL {
        let weighted = matches!(
            target,
            Target::MstEdge | Target::MstNode | Target::CutEdge | Target::CutNode | Target::MatchingEdge | Target::MatchingNode
        );
        let node_counting = target.adjacency() == Adjacency::Node && !weighted;
        for &t in &horizons {
            if target == Target::CutEdge && t > 8 {
                continue;
            }
            let weights: Vec<Weight> = if weighted { (1..=5).collect() } else { vec![1] };
            let degrees: Vec<usize> = if node_counting { vec![4, 5] } else { vec![4] };
            for &w in &weights {
                for &d in &degrees {
                    for rep in 0..3u64 {
                        jobs.push((target, t, w, d, rep));
                    }
                }
            }
        }
    }
    let failures: Vec<String> = jobs
        .par_iter()
        .filter_map(|&(target, t, w, d, rep)| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 * t as u64 + 10 * u64::from(w) + rep + d as u64 * 7919);
            let sigma: Vec<bool> = match rep {
                0 => vec![true; t],
                _ => (0..t).map(|_| rng.gen_bool(0.5)).collect(),
            };
            let p = GenParams {
                weight: w,
                max_degree: d,
                tau: 2,
                k: d - 1,
            };
            let g = match gen_event_level(target, &sigma, &p) {
                Ok(g) => g,
                Err(e) => return Some(format!("{} T={t} W={w}: {e}", target.name())),
            };
            let graphs = g.sequence.materialize().unwrap();
            for (i, graph) in graphs.iter().enumerate() {
                let want = closed_form(target, &sigma, f64::from(w), d as f64, i + 1);
                let got = g.function.eval_scalar(graph).unwrap();
                if got != want || g.expected[i] != want {
                    return Some(format!(
                        "{} T={t} W={w} D={d} t={}: evaluator {got}, generator {}, closed form {want}",
                        target.name(),
                        i + 1,
                        g.expected[i]
                    ));
                }
            }
            let flip_at = rng.gen_range(1..=t);
            match adjacent_pair(target, &sigma, flip_at, &p) {
                Ok(pair) if pair.witness.step == flip_at => None,
                Ok(pair) => Some(format!("{} flip {flip_at}: witness step {}", target.name(), pair.witness.step)),
                Err(e) => Some(format!("{} flip {flip_at}: {e}", target.name())),
            }
        })
        .collect();
    (
        failures.is_empty(),
        format!(
            "{} generator runs (T in {horizons:?}, cut-edge T<=8, W<=5), failures {:?}",
            jobs.len(),
            failures.iter().take(5).collect::<Vec<_>>()
        ),
    )
}

fn criterion_4() -> Outcome {
    let functions = [
        GraphFunction::EdgeCount,
        GraphFunction::HighDegree { tau: 2 },
        GraphFunction::DegreeHistogram,
        GraphFunction::TriangleCount,
        GraphFunction::KStarCount { k: 2 },
        GraphFunction::KStarCount { k: 3 },
        GraphFunction::MstWeight,
    ];
    let failures: Vec<String> = (0..500u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(40_000 + i);
            let n = rng.gen_range(2..=6);
            let t = rng.gen_range(1..=10);
            let w = rng.gen_range(1..=3);
            let seq = random_incremental(&mut rng, n, t, w, 0.25);
            let d = seq.max_degree().unwrap().max(1);
            let graphs = seq.materialize().unwrap();
            for f in functions {
                let cfg = ReleaseConfig {
                    function: f,
                    adjacency: Adjacency::Edge,
                    epsilon: 1.0,
                    delta: 0.1,
                    max_degree: Some(d),
                };
                let report = diff_release(&seq, &cfg, &RandomSource::from_seed(i).with_noise_off()).unwrap();
                for (step, g) in report.steps.iter().zip(&graphs) {
                    let truth = f.eval(g).unwrap().coords(step.released.len());
                    if step.released != truth {
                        return Some(format!("sequence {i} {f} t={}: {:?} != {truth:?}", step.t, step.released));
                    }
                }
            }
            None
        })
        .collect();
    (
        failures.is_empty(),
        format!("500 sequences x 7 statistics, exact match; failures {:?}", failures.iter().take(3).collect::<Vec<_>>()),
    )
}

fn edge_count_trials(horizon: usize, trials: u64, seed: u64, epsilon: f64, delta: f64) -> Vec<(f64, f64)> {
    let seq = sparse_edge_sequence(seed, 40, horizon, 0.3);
    let cfg = ReleaseConfig {
        function: GraphFunction::EdgeCount,
        adjacency: Adjacency::Edge,
        epsilon,
        delta,
        max_degree: None,
    };
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let r = diff_release(&seq, &cfg, &RandomSource::from_seed(seed * 10_000 + i)).unwrap();
            (r.max_abs_error(), r.bound)
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let started = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for t in [256usize, 1024] {
        let results = edge_count_trials(t, 200, t as u64, 1.0, 0.05);
        let within = results.iter().filter(|(e, b)| e <= b).count();
        ok &= within >= 186;
        notes.push(format!("T={t}: {within}/200 within bound {:.2}", results[0].1));
    }
    let elapsed = started.elapsed();
    ok &= elapsed <= Duration::from_secs(120);
    (ok, format!("{} (need >= 186), {:.1}s (limit 120s)", notes.join("; "), elapsed.as_secs_f64()))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn criterion_6() -> Outcome {
    let small = median(edge_count_trials(64, 100, 64, 1.0, 0.05).into_iter().map(|x| x.0).collect());
    let large = median(edge_count_trials(4096, 100, 4096, 1.0, 0.05).into_iter().map(|x| x.0).collect());
    let ratio = large / small;
    let limit = 3.0 * (12.0f64 / 6.0).powf(1.5) * (levels(4096) as f64 / levels(64) as f64);
    (
        ratio <= limit,
        format!("median max error T=64 {small:.2}, T=4096 {large:.2}, ratio {ratio:.3} <= {limit:.3}"),
    )
}

fn criterion_7() -> Outcome {
    let started = Instant::now();
    let (t, w, epsilon, beta, delta) = (128usize, 2u32, 1.0, 0.5, 0.1);
    let rho = static_sensitivity(&GraphFunction::MinCut, w).unwrap();
    let mut successes = 0usize;
    let mut max_tops = 0usize;
    let mut budget = 0usize;
    let mut tops_ok = true;
    for s in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(700 + s);
        let sigma: Vec<bool> = (0..t).map(|_| rng.gen_bool(0.5)).collect();
        let p = GenParams {
            weight: w,
            ..GenParams::default()
        };
        let g = gen_event_level(Target::CutNode, &sigma, &p).unwrap();
        let graphs = g.sequence.materialize().unwrap();
        let truth: Vec<f64> = graphs.par_iter().map(|x| GraphFunction::MinCut.eval_scalar(x).unwrap()).collect();
        let n = g.sequence.max_node_count().unwrap();
        let range = (n as f64) * f64::from(w);
        let alpha = additive_error(epsilon, beta, rho, range, t, delta);
        budget = power_budget(beta, range);
        let runs: Vec<(bool, usize)> = (0..100u64)
            .into_par_iter()
            .map(|r| {
                let src = RandomSource::from_seed(7_000_000 + 1000 * s + r);
                let (out, state) = monotone_release_values(&truth, epsilon, beta, rho, range, delta, &src).unwrap();
                let within = truth
                    .iter()
                    .zip(&out)
                    .filter(|(f, _)| **f >= 1.0)
                    .all(|(f, o)| f - alpha <= *o && *o <= (1.0 + beta) * f + alpha);
                (within, state.increases())
            })
            .collect();
        for (within, tops) in runs {
            successes += usize::from(within);
            max_tops = max_tops.max(tops);
            tops_ok &= tops <= budget;
        }
    }
    let need = 450.0 - 2.0 * (500.0f64 * 0.1 * 0.9).sqrt();
    let elapsed = started.elapsed();
    let ok = successes as f64 >= need && tops_ok && elapsed <= Duration::from_secs(180);
    (
        ok,
        format!(
            "{successes}/500 runs inside the sandwich (need >= {need:.2}), max Tops {max_tops} <= c {budget}, {:.1}s (limit 180s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut mismatches = 0;
    let mut cases = 0;
    for value in 0..10 {
        for threshold in 0..10 {
            for c in 1..=10usize {
                cases += 1;
                let mut svt = SvtState::new(1.0, 1.0, c, RandomSource::from_seed(cases).with_noise_off()).unwrap();
                let mut above = 0;
                for q in 0..(2 * c + 3) {
                    let v = f64::from(value) - if q % 3 == 2 { 0.5 } else { 0.0 };
                    let thr = f64::from(threshold);
                    let want = if above >= c {
                        SvtAnswer::Abort
                    } else if v >= thr {
                        above += 1;
                        SvtAnswer::Above
                    } else {
                        SvtAnswer::Below
                    };
                    if svt.query(v, thr).unwrap() != want {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    (mismatches == 0, format!("{cases} (value, threshold, c) traces, {mismatches} mismatching answers"))
}

fn toy_spread() -> SpreadSpec {
    let f = GraphFunction::MaxCardinalityMatching;
    let g1 = Graph::from_parts(1, 0..4, [(0, 1, 1), (2, 3, 1)]).unwrap();
    let g2 = Graph::from_parts(1, 0..4, [(0, 1, 1), (0, 2, 1)]).unwrap();
    let ell = transformation(&g1, &g2).unwrap().len();
    let gap = (f.eval_scalar(&g1).unwrap() - f.eval_scalar(&g2).unwrap()).abs();
    SpreadSpec {
        function: f,
        g1,
        g2,
        spared: EdgeKey::of(0, 1),
        ell,
        gap,
    }
}

fn criterion_9() -> Outcome {
    let specs = vec![
        toy_spread(),
        spread_of(&GraphFunction::MaxCardinalityMatching, 6, 1).unwrap(),
        spread_of(&GraphFunction::MstWeight, 4, 3).unwrap(),
    ];
    let mut failures = Vec::new();
    let mut pairs = 0;
    for spec in &specs {
        let ell = spec.ell;
        if ell != 2 && ell != 4 {
            failures.push(format!("unexpected ell {ell}"));
            continue;
        }
        for len in 1..=4usize {
            let horizon = 2 * ell * len;
            let strings: Vec<Vec<bool>> = (0..1u32 << len).map(|m| (0..len).map(|i| m >> i & 1 == 1).collect()).collect();
            let mut values = Vec::new();
            for bits in &strings {
                let seq = gen_user_level(spec, bits, horizon).unwrap();
                let mut graphs = vec![seq.initial.clone()];
                graphs.extend(seq.materialize().unwrap());
                for (i, g) in graphs.iter().enumerate() {
                    if i % (4 * ell) == 0 && *g != spec.g1 {
                        failures.push(format!("ell={ell} bits={bits:?}: H_{i} != G1"));
                    }
                    if i % (4 * ell) == 2 * ell && *g != spec.g2 {
                        failures.push(format!("ell={ell} bits={bits:?}: H_{i} != G2"));
                    }
                }
                values.push(
                    graphs
                        .iter()
                        .map(|g| spec.function.eval_scalar(g).unwrap())
                        .collect::<Vec<f64>>(),
                );
            }
            for a in 0..strings.len() {
                for b in a + 1..strings.len() {
                    pairs += 1;
                    let gap = values[a].iter().zip(&values[b]).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                    if gap < spec.gap {
                        failures.push(format!("ell={ell} {:?} vs {:?}: gap {gap} < {}", strings[a], strings[b], spec.gap));
                    }
                }
            }
        }
    }
    (
        failures.is_empty(),
        format!(
            "{} spread pairs (ell in {:?}), {pairs} bit-string pairs, failures {:?}",
            specs.len(),
            specs.iter().map(|s| s.ell).collect::<Vec<_>>(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut failures = Vec::new();
    let epsilon = 1.0;
    for t in [8usize, 64, 1000] {
        let x = levels(t);
        let p = GenParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(t as u64);
        let sigma: Vec<bool> = (0..t).map(|_| rng.gen_bool(0.5)).collect();
        let flip_at = rng.gen_range(1..=t);
        let pair = adjacent_pair(Target::EdgesEdge, &sigma, flip_at, &p).unwrap();
        let cfg = ReleaseConfig {
            function: GraphFunction::EdgeCount,
            adjacency: Adjacency::Edge,
            epsilon,
            delta: 0.05,
            max_degree: None,
        };
        let ra = diff_release(&pair.a.sequence, &cfg, &RandomSource::from_seed(1)).unwrap();
        let rb = diff_release(&pair.b.sequence, &cfg, &RandomSource::from_seed(1)).unwrap();
        let (ta, tb) = (&ra.traces[0], &rb.traces[0]);
        for step in 1..=t {
            let touching = ta.iter().filter(|r| r.start <= step && step <= r.end).count();
            if touching > x {
                failures.push(format!("T={t} step {step}: {touching} p-sums > x={x}"));
            }
        }
        let min_scale = ra.gamma * x as f64 / epsilon;
        if let Some(r) = ta.iter().find(|r| r.scale < min_scale) {
            failures.push(format!("T={t}: p-sum scale {} < {min_scale}", r.scale));
        }
        let mut total = 0.0;
        for (a, b) in ta.iter().zip(tb) {
            let ratio = (a.clean - b.clean).abs() / a.scale;
            total += ratio;
            if ratio > epsilon / x as f64 + 1e-12 {
                failures.push(format!("T={t} p-sum [{}, {}]: shift/scale {ratio} > eps/x", a.start, a.end));
            }
        }
        if total > epsilon + 1e-12 {
            failures.push(format!("T={t}: total shift/scale {total} > eps"));
        }
        if ta.len() != tb.len() {
            failures.push(format!("T={t}: trace lengths differ"));
        }
    }
    let mech_ok = [8usize, 64, 1000].iter().all(|&t| {
        let mut m = BinaryMechanism::with_width(t, 1.0, epsilon, ScaleMode::Composed, RandomSource::from_seed(3)).unwrap();
        (0..t).for_each(|_| {
            m.feed(1.0).unwrap();
        });
        m.trace().iter().all(|r| r.scale >= levels(t) as f64 / epsilon)
    });
    if !mech_ok {
        failures.push("bare mechanism scale below x/eps".into());
    }
    (
        failures.is_empty(),
        format!("T in [8, 64, 1000]: participation <= x, scale >= Gamma x/eps, neighbour shift <= eps; failures {failures:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("sensitivity-table soundness", criterion_1),
        ("tightness and unbounded fixtures", criterion_2),
        ("generator identities", criterion_3),
        ("zero-noise reconstruction", criterion_4),
        ("binary-mechanism error", criterion_5),
        ("polylog growth", criterion_6),
        ("monotone mechanism", criterion_7),
        ("SVT structure", criterion_8),
        ("user-level construction", criterion_9),
        ("privacy structure audit", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = run();
        if !ok {
            failed += 1;
        }
        println!("criterion {} ({name}): {} | {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
