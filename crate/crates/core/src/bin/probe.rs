//! Scratch measurement harness used while calibrating the test suites.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use clpi::cpl::{full_set_interdiction, incremental_interdiction, CplConfig, TbChoice};
use clpi::baselines::{cut_baseline, discrete_baseline};
use clpi::harness::{extract_subgraph, sample_pairs};
use clpi::weights::{uniform_functions, WeightFunction};
use clpi::Graph;

/// Uniform random edges (Erdos-Renyi flavor) with average degree 2m.
fn er_edges(n: usize, m: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = std::collections::HashSet::new();
    // chain for connectivity
    for v in 1..n {
        edges.insert((v - 1, v));
    }
    while edges.len() < n * m {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u < v {
            edges.insert((u, v));
        } else if v < u {
            edges.insert((v, u));
        }
    }
    let mut out: Vec<(usize, usize)> = edges.into_iter().collect();
    out.sort_unstable();
    out
}

/// Preferential-attachment edges, SNAP-flavored heavy-tailed topology.
fn ba_edges(n: usize, m: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut endpoints: Vec<usize> = Vec::new();
    let core = m + 1;
    for u in 0..core {
        for v in (u + 1)..core {
            edges.push((u, v));
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    for v in core..n {
        let mut targets = std::collections::HashSet::new();
        while targets.len() < m {
            let t = endpoints[rng.gen_range(0..endpoints.len())];
            targets.insert(t);
        }
        for &t in &targets {
            edges.push((v, t));
            endpoints.push(v);
            endpoints.push(t);
        }
    }
    edges
}

fn run_combo(
    g: &Graph,
    fs: &[WeightFunction<f64>],
    pairs: &clpi::TargetPairs,
    t: f64,
    eps: f64,
    k: usize,
    label: &str,
    cplc: &str,
    tb: TbChoice,
) -> (f64, u64, u32, usize) {
    let mut cfg = CplConfig::new(t, eps).unwrap();
    cfg.k = k;
    cfg.tb = tb;
    let start = Instant::now();
    let res = match cplc {
        "ii" => incremental_interdiction(g, fs, pairs, &cfg).unwrap(),
        _ => full_set_interdiction(g, fs, pairs, &cfg).unwrap(),
    };
    println!(
        "{label:8} T={t:5} eps={eps:4}: norm={:10.2} queries={:8} rounds={:3} maxpaths={:4} updates={:7} wall={:?} per_round={:?}",
        res.x.norm(),
        res.queries,
        res.rounds,
        res.max_stored_paths,
        res.updates,
        start.elapsed(),
        res.per_round_paths,
    );
    (res.x.norm(), res.queries, res.rounds, res.max_stored_paths)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map(String::as_str).unwrap_or("concave");
    let density: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2);
    let k_arg: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(20);
    let num_pairs: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(10);

    let gen_kind = std::env::var("PROBE_GEN").unwrap_or_else(|_| "ba".into());
    let src_n: usize = std::env::var("PROBE_N").ok().and_then(|s| s.parse().ok()).unwrap_or(1200);
    let sub_n: usize = std::env::var("PROBE_SUB").ok().and_then(|s| s.parse().ok()).unwrap_or(200);
    let edges = if gen_kind == "er" { er_edges(src_n, density, 42) } else { ba_edges(src_n, density, 42) };
    let text: String = edges.iter().map(|(u, v)| format!("{u} {v}\n")).collect();
    let full = Graph::from_edge_list_str(&text, true).unwrap();
    println!("source graph: n={} arcs={} (m={density}, k={k_arg}, |S|={num_pairs})", full.node_count(), full.arc_count());

    match mode {
        "concave" => {
            let g = extract_subgraph(&full, 0, sub_n);
            println!("subgraph: n={} arcs={}", g.node_count(), g.arc_count());
            let pairs = sample_pairs(&g, num_pairs, 1).unwrap();
            let fs = uniform_functions(&WeightFunction::concave(1.0, 0.0).unwrap(), g.node_count());
            for t in [6.0, 10.0] {
                let ii_te = run_combo(&g, &fs, &pairs, t, 0.1, k_arg, "II-TE", "ii", TbChoice::Te);
                let fi_te = run_combo(&g, &fs, &pairs, t, 0.1, k_arg, "FI-TE", "fi", TbChoice::Te);
                let ii_jsg = run_combo(&g, &fs, &pairs, t, 0.1, k_arg, "II-JSG", "ii", TbChoice::Jsg);
                let fi_jsg = run_combo(&g, &fs, &pairs, t, 0.1, k_arg, "FI-JSG", "fi", TbChoice::Jsg);
                println!(
                    "  -> query ratios: TE {:.2}x JSG {:.2}x",
                    fi_te.1 as f64 / ii_te.1 as f64,
                    fi_jsg.1 as f64 / ii_jsg.1 as f64
                );
                if t == 10.0 {
                    let start = Instant::now();
                    let cut = cut_baseline(&g, &fs, &pairs, t, 0.1, k_arg).unwrap();
                    println!("CUT      norm={:.2} rounds={} wall={:?}", cut.x.norm(), cut.rounds, start.elapsed());
                    let start = Instant::now();
                    let disc = discrete_baseline(&g, &fs, &pairs, t, 0.1, k_arg).unwrap();
                    println!("DISCRETE norm={:.2} rounds={} wall={:?}", disc.x.norm(), disc.rounds, start.elapsed());
                    println!(
                        "  -> dominance: CUT/FI-JSG = {:.1}x, DIS1/FI-JSG = {:.1}x",
                        cut.x.norm() / fi_jsg.0,
                        disc.x.norm() / fi_jsg.0
                    );
                }
            }
        }
        "linear" => {
            let g = extract_subgraph(&full, 0, 200);
            let pairs = sample_pairs(&g, 10, 1).unwrap();
            let fs = uniform_functions(&WeightFunction::linear(1.0, 0.0).unwrap(), 200);
            let mut queries = Vec::new();
            for t in [20.0, 40.0, 60.0, 80.0, 100.0] {
                let r = run_combo(&g, &fs, &pairs, t, 0.1, 20, "II-TE", "ii", TbChoice::Te);
                queries.push(r.1 as f64);
            }
            let max = queries.iter().cloned().fold(f64::MIN, f64::max);
            let min = queries.iter().cloned().fold(f64::MAX, f64::min);
            println!("II-TE query spread over T: {:.3}", (max - min) / min);
        }
        "epsilon" => {
            let g = extract_subgraph(&full, 0, 200);
            let pairs = sample_pairs(&g, 10, 1).unwrap();
            let fs = uniform_functions(&WeightFunction::concave(1.0, 0.0).unwrap(), 200);
            for eps in [0.05, 0.5] {
                run_combo(&g, &fs, &pairs, 8.0, eps, 20, "II-TE", "ii", TbChoice::Te);
                run_combo(&g, &fs, &pairs, 8.0, eps, 20, "II-JSG", "ii", TbChoice::Jsg);
                run_combo(&g, &fs, &pairs, 8.0, eps, 20, "FI-TE", "fi", TbChoice::Te);
                run_combo(&g, &fs, &pairs, 8.0, eps, 20, "FI-JSG", "fi", TbChoice::Jsg);
            }
        }
        "suite" => {
            // one feasibility-suite sample: all four families x four combos
            let g = extract_subgraph(&full, 7, 200);
            let pairs = sample_pairs(&g, 5, 3).unwrap();
            let fams: Vec<(&str, WeightFunction<f64>)> = vec![
                ("concave", WeightFunction::concave(1.0, 0.0).unwrap()),
                ("convex", WeightFunction::convex(1.0, 0.0).unwrap()),
                ("linear", WeightFunction::linear(1.0, 0.0).unwrap()),
                ("step", WeightFunction::step(1.0, 0.0).unwrap()),
            ];
            let start_all = Instant::now();
            for (name, f) in &fams {
                let fs = uniform_functions(f, 200);
                println!("--- family {name}");
                run_combo(&g, &fs, &pairs, 6.0, 0.1, 8, "II-TE", "ii", TbChoice::Te);
                run_combo(&g, &fs, &pairs, 6.0, 0.1, 8, "II-JSG", "ii", TbChoice::Jsg);
                run_combo(&g, &fs, &pairs, 6.0, 0.1, 8, "FI-TE", "fi", TbChoice::Te);
                run_combo(&g, &fs, &pairs, 6.0, 0.1, 8, "FI-JSG", "fi", TbChoice::Jsg);
            }
            println!("one full suite graph: {:?}", start_all.elapsed());
        }
        other => eprintln!("unknown probe mode {other}"),
    }
}
