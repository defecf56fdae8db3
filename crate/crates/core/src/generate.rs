//! Synthetic labeled citation graphs with per-channel preferential
//! attachment.
//!
//! Vertices arrive one at a time. Each target-matrix cell `(g, h)` is split
//! into per-arrival quotas over the arrivals of `g`, and every arrival of
//! `g` cites its quota of earlier `h` vertices. The chance of citing a
//! vertex `v` is proportional to `k_gh(v) + a`, where `k_gh` counts only
//! the citations `v` has received from group `g`. Each ordered pair of
//! groups therefore grows its own popularity ranking.

use std::collections::HashSet;
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EdgeMatrix, GraphBuilder, GraphError, LabeledDigraph, VertexId};
use crate::groups::{category_info, Group, GroupError, GroupLabel, Tier, HIERARCHY};

/// Consecutive duplicate draws tolerated before switching to exact
/// sampling without replacement.
const MAX_REJECTIONS: usize = 100;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid group: {0}")]
    Group(#[from] GroupError),
    #[error("group {0} listed twice")]
    DuplicateGroup(u8),
    #[error("group {0} has no vertices")]
    EmptyGroup(u8),
    #[error("edge matrix is {rows}x{cols}, expected {expected}x{expected}")]
    Shape { rows: usize, cols: usize, expected: usize },
    #[error("smoothing must be positive and finite, got {0}")]
    Smoothing(f64),
    #[error("too many vertices for 32-bit ids")]
    TooManyVertices,
    #[error(
        "cell {src} -> {dst} demands {demanded} edges but the arrival order allows at most {capacity}"
    )]
    Infeasible {
        src: u8,
        dst: u8,
        demanded: u64,
        capacity: u64,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub code: u8,
    pub size: u32,
}

/// How the group of each successive arrival is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalOrder {
    /// Next group drawn in proportion to its remaining vertex count.
    #[default]
    Shuffled,
    /// Deterministic smooth interleaving in proportion to group size.
    Interleaved,
}

fn default_smoothing() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub tier: Tier,
    pub groups: Vec<GroupSpec>,
    /// `edges[i][j]`: citations from `groups[i]` to `groups[j]`.
    pub edges: Vec<Vec<u64>>,
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub arrival: ArrivalOrder,
}

impl GeneratorConfig {
    pub fn vertex_count(&self) -> u64 {
        self.groups.iter().map(|g| u64::from(g.size)).sum()
    }

    /// The target as an [`EdgeMatrix`] with groups in ascending code order,
    /// the layout [`crate::graph::edge_matrix`] produces.
    pub fn target_matrix(&self) -> EdgeMatrix {
        let mut order: Vec<usize> = (0..self.groups.len()).collect();
        order.sort_by_key(|&i| self.groups[i].code);
        let mut m = EdgeMatrix::zeros(self.tier, order.iter().map(|&i| self.groups[i].code).collect());
        for (a, &i) in order.iter().enumerate() {
            for (b, &j) in order.iter().enumerate() {
                m.counts[a][b] = self.edges[i][j];
            }
        }
        m
    }

    pub fn validate(&self) -> Result<(), GenerateError> {
        let k = self.groups.len();
        let mut seen = HashSet::new();
        for g in &self.groups {
            Group::new(self.tier, g.code)?;
            if !seen.insert(g.code) {
                return Err(GenerateError::DuplicateGroup(g.code));
            }
            if g.size == 0 {
                return Err(GenerateError::EmptyGroup(g.code));
            }
        }
        if self.vertex_count() > u64::from(u32::MAX) {
            return Err(GenerateError::TooManyVertices);
        }
        if self.edges.len() != k || self.edges.iter().any(|r| r.len() != k) {
            return Err(GenerateError::Shape {
                rows: self.edges.len(),
                cols: self.edges.iter().map(Vec::len).max().unwrap_or(0),
                expected: k,
            });
        }
        if !(self.smoothing > 0.0 && self.smoothing.is_finite()) {
            return Err(GenerateError::Smoothing(self.smoothing));
        }
        Ok(())
    }

    /// A category-level configuration shaped like the USPTO citation
    /// network: group sizes are the category patent counts times `scale`,
    /// each vertex makes `citations_per_vertex` citations on average, and a
    /// fraction `internal` of them stay inside the citing category. The rest
    /// spread over the other categories in proportion to their size.
    pub fn uspcn_shaped(scale: f64, citations_per_vertex: f64, internal: f64, seed: u64) -> GeneratorConfig {
        let sizes: Vec<u32> = HIERARCHY
            .iter()
            .map(|c| ((c.patents as f64 * scale).round() as u32).max(1))
            .collect();
        let total: f64 = sizes.iter().map(|&s| f64::from(s)).sum();
        let edges = sizes
            .iter()
            .enumerate()
            .map(|(i, &si)| {
                let row = f64::from(si) * citations_per_vertex;
                let others = total - f64::from(si);
                sizes
                    .iter()
                    .enumerate()
                    .map(|(j, &sj)| {
                        let cell = if i == j {
                            row * internal
                        } else {
                            row * (1.0 - internal) * f64::from(sj) / others
                        };
                        cell.round() as u64
                    })
                    .collect()
            })
            .collect();
        GeneratorConfig {
            tier: Tier::Category,
            groups: HIERARCHY
                .iter()
                .zip(sizes)
                .map(|(c, size)| GroupSpec { code: c.code, size })
                .collect(),
            edges,
            smoothing: 1.0,
            seed,
            arrival: ArrivalOrder::Shuffled,
        }
    }
}

/// Per-channel attachment counters at the end of generation.
///
/// `counters[i][j][r]` is the counter of channel `groups[i] -> groups[j]`
/// for the `r`-th vertex of `groups[j]` in arrival order (indices into
/// [`Trace::members`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub groups: Vec<u8>,
    pub members: Vec<Vec<VertexId>>,
    pub counters: Vec<Vec<Vec<u32>>>,
}

fn vertex_label(tier: Tier, code: u8) -> Result<GroupLabel, GenerateError> {
    let sub = match tier {
        Tier::Subcategory => code,
        Tier::Category => {
            category_info(u32::from(code))
                .ok_or(GroupError::UnknownCategory(u32::from(code)))?
                .subcategories[0]
                .code
        }
    };
    Ok(GroupLabel::from_subcategory(u32::from(sub))?)
}

fn arrival_sequence(config: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Vec<u16> {
    let mut seq: Vec<u16> = Vec::with_capacity(config.vertex_count() as usize);
    match config.arrival {
        ArrivalOrder::Shuffled => {
            for (i, g) in config.groups.iter().enumerate() {
                seq.extend(std::iter::repeat_n(i as u16, g.size as usize));
            }
            seq.shuffle(rng);
        }
        ArrivalOrder::Interleaved => {
            let total = config.vertex_count() as i64;
            let sizes: Vec<i64> = config.groups.iter().map(|g| i64::from(g.size)).collect();
            let mut credit = vec![0i64; sizes.len()];
            for _ in 0..total {
                for (c, s) in credit.iter_mut().zip(&sizes) {
                    *c += s;
                }
                let pick = (0..sizes.len()).max_by_key(|&i| (credit[i], -(i as i64))).expect("groups");
                credit[pick] -= total;
                seq.push(pick as u16);
            }
        }
    }
    seq
}

/// Splits `demand` over arrivals with the given capacities: near-uniform
/// with a random remainder, overflow pushed to later then earlier arrivals.
fn quota_schedule(demand: u64, capacity: &[u32], rng: &mut ChaCha8Rng) -> Option<Vec<u32>> {
    let n = capacity.len();
    if capacity.iter().map(|&c| u64::from(c)).sum::<u64>() < demand {
        return None;
    }
    if demand == 0 {
        return Some(vec![0; n]);
    }
    let base = demand / n as u64;
    let extra = (demand % n as u64) as usize;
    let mut wanted = vec![base; n];
    for i in rand::seq::index::sample(rng, n, extra) {
        wanted[i] += 1;
    }
    let mut quota = vec![0u32; n];
    let mut carry = 0u64;
    for i in 0..n {
        let want = wanted[i] + carry;
        let q = want.min(u64::from(capacity[i]));
        quota[i] = q as u32;
        carry = want - q;
    }
    for i in (0..n).rev() {
        if carry == 0 {
            break;
        }
        let add = carry.min(u64::from(capacity[i] - quota[i]));
        quota[i] += add as u32;
        carry -= add;
    }
    debug_assert_eq!(carry, 0);
    Some(quota)
}

struct Channel {
    /// One entry per citation received through this channel.
    targets: Vec<u32>,
    /// Counter per member of the destination group.
    counts: Vec<u32>,
}

pub fn generate(config: &GeneratorConfig) -> Result<LabeledDigraph, GenerateError> {
    generate_with_trace(config).map(|(g, _)| g)
}

/// Generates a graph and returns the final per-channel counters.
pub fn generate_with_trace(config: &GeneratorConfig) -> Result<(LabeledDigraph, Trace), GenerateError> {
    config.validate()?;
    let k = config.groups.len();
    let a = config.smoothing;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let arrivals = arrival_sequence(config, &mut rng);

    // Capacity of each arrival of g toward h: the h vertices already present.
    let mut capacity: Vec<Vec<Vec<u32>>> = config
        .groups
        .iter()
        .map(|g| vec![Vec::with_capacity(g.size as usize); k])
        .collect();
    let mut present = vec![0u32; k];
    for &g in &arrivals {
        let g = g as usize;
        for h in 0..k {
            capacity[g][h].push(present[h]);
        }
        present[g] += 1;
    }

    let mut quotas: Vec<Vec<Vec<u32>>> = vec![Vec::with_capacity(k); k];
    for g in 0..k {
        for h in 0..k {
            let q = quota_schedule(config.edges[g][h], &capacity[g][h], &mut rng).ok_or_else(|| {
                GenerateError::Infeasible {
                    src: config.groups[g].code,
                    dst: config.groups[h].code,
                    demanded: config.edges[g][h],
                    capacity: capacity[g][h].iter().map(|&c| u64::from(c)).sum(),
                }
            })?;
            quotas[g].push(q);
        }
    }
    drop(capacity);

    let labels: Vec<GroupLabel> = config
        .groups
        .iter()
        .map(|g| vertex_label(config.tier, g.code))
        .collect::<Result<_, _>>()?;
    let total_edges: u64 = config.edges.iter().flatten().sum();
    let mut builder = GraphBuilder::with_capacity(arrivals.len(), total_edges as usize);

    let mut members: Vec<Vec<u32>> = config.groups.iter().map(|g| Vec::with_capacity(g.size as usize)).collect();
    let mut channels: Vec<Vec<Channel>> = (0..k)
        .map(|_| {
            (0..k)
                .map(|h| Channel {
                    targets: Vec::new(),
                    counts: Vec::with_capacity(config.groups[h].size as usize),
                })
                .collect()
        })
        .collect();
    let mut rank = vec![0usize; k];
    let mut chosen: Vec<u32> = Vec::new();
    let mut taken: HashSet<u32> = HashSet::new();

    for (t, &g) in arrivals.iter().enumerate() {
        let g = g as usize;
        let id = t as u64;
        builder.add_vertex(id, labels[g])?;
        let r = rank[g];
        rank[g] += 1;
        for h in 0..k {
            let q = quotas[g][h][r] as usize;
            if q == 0 {
                continue;
            }
            let pool = &members[h];
            let channel = &channels[g][h];
            chosen.clear();
            taken.clear();
            let uniform_weight = a * pool.len() as f64;
            let total_weight = uniform_weight + channel.targets.len() as f64;
            let mut rejections = 0;
            while chosen.len() < q && rejections < MAX_REJECTIONS {
                let local = if rng.gen::<f64>() * total_weight < uniform_weight {
                    rng.gen_range(0..pool.len()) as u32
                } else {
                    channel.targets[rng.gen_range(0..channel.targets.len())]
                };
                if taken.insert(local) {
                    chosen.push(local);
                    rejections = 0;
                } else {
                    rejections += 1;
                }
            }
            if chosen.len() < q {
                exact_draw(&mut rng, &channel.counts, a, q, &mut chosen, &mut taken);
            }
            let channel = &mut channels[g][h];
            for &local in &chosen {
                builder.add_edge(id, u64::from(members[h][local as usize]))?;
                channel.counts[local as usize] += 1;
                channel.targets.push(local);
            }
        }
        members[g].push(t as u32);
        for source in channels.iter_mut() {
            source[g].counts.push(0);
        }
    }

    let graph = builder.build()?;
    let trace = Trace {
        groups: config.groups.iter().map(|g| g.code).collect(),
        members: members
            .into_iter()
            .map(|m| m.into_iter().map(VertexId).collect())
            .collect(),
        counters: channels
            .into_iter()
            .map(|row| row.into_iter().map(|c| c.counts).collect())
            .collect(),
    };
    Ok((graph, trace))
}

/// Completes `chosen` to `q` distinct members by sequential weighted
/// sampling without replacement, weights `count + a`.
fn exact_draw(
    rng: &mut ChaCha8Rng,
    counts: &[u32],
    a: f64,
    q: usize,
    chosen: &mut Vec<u32>,
    taken: &mut HashSet<u32>,
) {
    let mut candidates: Vec<(u32, f64)> = (0..counts.len() as u32)
        .filter(|i| !taken.contains(i))
        .map(|i| (i, f64::from(counts[i as usize]) + a))
        .collect();
    let mut total: f64 = candidates.iter().map(|c| c.1).sum();
    while chosen.len() < q {
        let mut u = rng.gen::<f64>() * total;
        let mut pick = candidates.len() - 1;
        for (idx, &(_, w)) in candidates.iter().enumerate() {
            if u < w {
                pick = idx;
                break;
            }
            u -= w;
        }
        let (local, w) = candidates.swap_remove(pick);
        total -= w;
        taken.insert(local);
        chosen.push(local);
    }
}

/// Writes edges as `CITING,CITED` rows of original ids.
pub fn write_citations<W: Write>(graph: &LabeledDigraph, mut out: W) -> io::Result<()> {
    writeln!(out, "CITING,CITED")?;
    for (s, t) in graph.edges() {
        writeln!(out, "{},{}", graph.original_id(s), graph.original_id(t))?;
    }
    out.flush()
}

/// Writes vertex labels as `PATENT,CAT,SUBCAT` rows.
pub fn write_labels<W: Write>(graph: &LabeledDigraph, mut out: W) -> io::Result<()> {
    writeln!(out, "PATENT,CAT,SUBCAT")?;
    for v in graph.vertices() {
        let l = graph.label(v);
        writeln!(out, "{},{},{}", graph.original_id(v), l.category(), l.subcategory())?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::edge_matrix;

    fn two_groups(diag: u64, off: u64) -> GeneratorConfig {
        GeneratorConfig {
            tier: Tier::Category,
            groups: vec![GroupSpec { code: 1, size: 1000 }, GroupSpec { code: 2, size: 1000 }],
            edges: vec![vec![diag, off], vec![off, diag]],
            smoothing: 1.0,
            seed: 3,
            arrival: ArrivalOrder::Shuffled,
        }
    }

    #[test]
    fn zero_matrix_gives_no_edges() {
        let g = generate(&two_groups(0, 0)).unwrap();
        assert_eq!(g.vertex_count(), 2000);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn two_group_matrix_is_exact() {
        let c = two_groups(5000, 500);
        let g = generate(&c).unwrap();
        assert_eq!(edge_matrix(&g, Tier::Category), c.target_matrix());
    }

    #[test]
    fn infeasible_cell_is_named() {
        let mut c = two_groups(0, 0);
        c.groups[0].size = 3;
        c.groups[1].size = 2;
        c.edges[0][0] = 4; // at most 0 + 1 + 2 = 3
        match generate(&c) {
            Err(GenerateError::Infeasible { src: 1, dst: 1, demanded: 4, capacity: 3 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quota_schedule_respects_capacity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let caps = [0, 1, 2, 3, 10, 10];
        let q = quota_schedule(20, &caps, &mut rng).unwrap();
        assert_eq!(q.iter().map(|&v| u64::from(v)).sum::<u64>(), 20);
        assert!(q.iter().zip(&caps).all(|(a, b)| a <= b));
        assert!(quota_schedule(27, &caps, &mut rng).is_none());
    }

    #[test]
    fn validation() {
        let mut c = two_groups(1, 1);
        c.smoothing = 0.0;
        assert!(matches!(c.validate(), Err(GenerateError::Smoothing(_))));
        let mut c = two_groups(1, 1);
        c.groups[1].code = 1;
        assert!(matches!(c.validate(), Err(GenerateError::DuplicateGroup(1))));
        let mut c = two_groups(1, 1);
        c.groups[1].code = 7;
        assert!(matches!(c.validate(), Err(GenerateError::Group(_))));
        let mut c = two_groups(1, 1);
        c.edges.pop();
        assert!(matches!(c.validate(), Err(GenerateError::Shape { .. })));
    }

    #[test]
    fn interleaved_order_is_proportional() {
        let mut c = two_groups(0, 0);
        c.groups[1].size = 3000;
        c.arrival = ArrivalOrder::Interleaved;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let seq = arrival_sequence(&c, &mut rng);
        assert_eq!(seq.iter().filter(|&&g| g == 0).count(), 1000);
        for w in seq.chunks(4) {
            assert_eq!(w.iter().filter(|&&g| g == 0).count(), 1);
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = GeneratorConfig::uspcn_shaped(0.001, 5.0, 0.9, 11);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<GeneratorConfig>(&json).unwrap(), c);
        let minimal = r#"{"tier":"2","groups":[{"code":11,"size":5}],"edges":[[3]]}"#;
        let m: GeneratorConfig = serde_json::from_str(minimal).unwrap();
        assert_eq!(m.smoothing, 1.0);
        assert_eq!(m.arrival, ArrivalOrder::Shuffled);
    }
}
