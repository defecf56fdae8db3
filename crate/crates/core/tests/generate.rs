use std::collections::{BTreeSet, HashMap};

use localpop::decompose::channel_indegree;
use localpop::generate::{
    generate, generate_with_trace, write_citations, write_labels, ArrivalOrder, GenerateError, GeneratorConfig,
    GroupSpec,
};
use localpop::graph::{edge_matrix, LabeledDigraph};
use localpop::groups::{Group, Tier, HIERARCHY};
use localpop::ingest::{read_citations, read_labels, CitationFormat, LabelFormat};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random configuration whose demands sit well inside the expected
/// capacity of every channel.
fn random_config(seed: u64) -> GeneratorConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tier = if rng.gen_bool(0.5) { Tier::Category } else { Tier::Subcategory };
    let mut codes: Vec<u8> = match tier {
        Tier::Category => HIERARCHY.iter().map(|c| c.code).collect(),
        Tier::Subcategory => HIERARCHY
            .iter()
            .flat_map(|c| c.subcategories.iter().map(|s| s.code))
            .collect(),
    };
    codes.shuffle(&mut rng);
    let k = rng.gen_range(2..=codes.len().min(6));
    let groups: Vec<GroupSpec> = codes[..k]
        .iter()
        .map(|&code| GroupSpec {
            code,
            size: rng.gen_range(20..300),
        })
        .collect();
    let edges = groups
        .iter()
        .map(|gi| {
            groups
                .iter()
                .map(|gj| {
                    let cap = u64::from(gi.size) * u64::from(gj.size) / 5;
                    rng.gen_range(0..=cap.min(4000))
                })
                .collect()
        })
        .collect();
    GeneratorConfig {
        tier,
        groups,
        edges,
        smoothing: rng.gen_range(0.2..3.0),
        seed,
        arrival: if rng.gen_bool(0.5) {
            ArrivalOrder::Shuffled
        } else {
            ArrivalOrder::Interleaved
        },
    }
}

fn edge_set(g: &LabeledDigraph) -> BTreeSet<(u64, u64)> {
    g.edges().map(|(s, t)| (g.original_id(s), g.original_id(t))).collect()
}

#[test]
fn generated_matrix_matches_target_exactly() {
    for seed in 0..40 {
        let cfg = random_config(seed);
        let g = generate(&cfg).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        let got = edge_matrix(&g, cfg.tier);
        let want = cfg.target_matrix();
        assert_eq!(got.groups, want.groups, "seed {seed}");
        assert_eq!(got.counts, want.counts, "seed {seed}");
        assert_eq!(g.vertex_count() as u64, cfg.vertex_count());
        for spec in &cfg.groups {
            let group = Group::new(cfg.tier, spec.code).unwrap();
            assert_eq!(g.group_vertices(group).len(), spec.size as usize);
        }
    }
}

#[test]
fn edges_point_backward_in_arrival_order() {
    for seed in 0..10 {
        let cfg = random_config(100 + seed);
        let g = generate(&cfg).unwrap();
        let ids: BTreeSet<u64> = g.vertices().map(|v| g.original_id(v)).collect();
        assert_eq!(ids, (0..cfg.vertex_count()).collect());
        let edges = edge_set(&g);
        assert_eq!(edges.len(), g.edge_count(), "no duplicate edges");
        assert!(edges.iter().all(|&(s, t)| s > t));
    }
}

#[test]
fn seeded_runs_are_deterministic() {
    let cfg = random_config(7);
    let a = edge_set(&generate(&cfg).unwrap());
    let b = edge_set(&generate(&cfg).unwrap());
    assert_eq!(a, b);
    let other = GeneratorConfig { seed: 8, ..cfg };
    assert_ne!(a, edge_set(&generate(&other).unwrap()));
}

#[test]
fn trace_counters_equal_channel_indegrees() {
    for seed in 0..10 {
        let cfg = random_config(200 + seed);
        let (g, trace) = generate_with_trace(&cfg).unwrap();
        for (i, &src) in trace.groups.iter().enumerate() {
            for (j, &dst) in trace.groups.iter().enumerate() {
                let dest = Group::new(cfg.tier, dst).unwrap();
                let source = Group::new(cfg.tier, src).unwrap();
                let channel = channel_indegree(&g, dest, source, None).unwrap();
                let by_vertex: HashMap<_, _> = channel.vertices.iter().copied().zip(channel.counts.iter().copied()).collect();
                for (r, v) in trace.members[j].iter().enumerate() {
                    assert_eq!(trace.counters[i][j][r], by_vertex[v], "seed {seed} {src}->{dst} rank {r}");
                }
            }
        }
    }
}

#[test]
fn written_files_ingest_back_to_the_same_graph() {
    let cfg = random_config(3);
    let g = generate(&cfg).unwrap();
    let mut citations = Vec::new();
    let mut labels = Vec::new();
    write_citations(&g, &mut citations).unwrap();
    write_labels(&g, &mut labels).unwrap();
    let set = read_labels(labels.as_slice(), &LabelFormat::default()).unwrap();
    assert_eq!(set.report.labeled, g.vertex_count() as u64);
    let (edges, report) = read_citations(citations.as_slice(), &set.labels, &CitationFormat::default()).unwrap();
    assert!(report.is_conserved());
    assert_eq!(report.retained_edge_count, g.edge_count() as u64);
    let back: BTreeSet<(u64, u64)> = edges.into_iter().collect();
    assert_eq!(back, edge_set(&g));
    for v in g.vertices() {
        assert_eq!(set.labels[&g.original_id(v)], g.label(v));
    }
}

#[test]
fn infeasible_demand_is_reported() {
    let cfg = GeneratorConfig {
        tier: Tier::Category,
        groups: vec![GroupSpec { code: 1, size: 5 }, GroupSpec { code: 2, size: 5 }],
        edges: vec![vec![11, 0], vec![0, 0]],
        smoothing: 1.0,
        seed: 0,
        arrival: ArrivalOrder::Shuffled,
    };
    assert!(matches!(
        generate(&cfg),
        Err(GenerateError::Infeasible { src: 1, dst: 1, demanded: 11, capacity: 10 })
    ));
    let full = GeneratorConfig {
        edges: vec![vec![10, 0], vec![0, 10]],
        ..cfg
    };
    let g = generate(&full).unwrap();
    assert_eq!(g.edge_count(), 20);
}
