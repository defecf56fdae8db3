//! Immutable labeled digraph in compressed sparse form.
//!
//! Forward adjacency lists the cited vertices of each vertex, reverse
//! adjacency lists its citers. Both are sorted per row. Original (external)
//! identifiers are remapped to dense indices on construction.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{Group, GroupLabel, Tier};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge endpoint {0} has no group label")]
    UnlabeledEndpoint(u64),
    #[error("self-loop on vertex {0}")]
    SelfLoop(u64),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(u64, u64),
    #[error("vertex {id} labeled twice with different labels ({first} and {second})")]
    ConflictingLabel {
        id: u64,
        first: GroupLabel,
        second: GroupLabel,
    },
    #[error("graph exceeds {} vertices", u32::MAX)]
    TooManyVertices,
}

/// Dense vertex index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<VertexId>,
}

impl Csr {
    /// Builds rows from `(row, col)` pairs and sorts each row. Returns the
    /// first repeated pair, if any.
    fn from_pairs(n: usize, pairs: &[(u32, u32)]) -> (Csr, Option<(u32, u32)>) {
        let mut offsets = vec![0usize; n + 1];
        for &(r, _) in pairs {
            offsets[r as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![VertexId(0); pairs.len()];
        for &(r, c) in pairs {
            let slot = &mut cursor[r as usize];
            targets[*slot] = VertexId(c);
            *slot += 1;
        }
        let mut dup = None;
        for r in 0..n {
            let row = &mut targets[offsets[r]..offsets[r + 1]];
            row.sort_unstable();
            if dup.is_none() {
                if let Some(w) = row.windows(2).find(|w| w[0] == w[1]) {
                    dup = Some((r as u32, w[0].0));
                }
            }
        }
        (Csr { offsets, targets }, dup)
    }

    #[inline]
    fn row(&self, v: VertexId) -> &[VertexId] {
        &self.targets[self.offsets[v.index()]..self.offsets[v.index() + 1]]
    }
}

/// Incremental builder for [`LabeledDigraph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    index: HashMap<u64, VertexId>,
    original: Vec<u64>,
    labels: Vec<GroupLabel>,
    edges: Vec<(u32, u32)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(vertices: usize, edges: usize) -> Self {
        GraphBuilder {
            index: HashMap::with_capacity(vertices),
            original: Vec::with_capacity(vertices),
            labels: Vec::with_capacity(vertices),
            edges: Vec::with_capacity(edges),
        }
    }

    /// Registers a vertex. Re-adding with the same label is a no-op.
    pub fn add_vertex(&mut self, id: u64, label: GroupLabel) -> Result<VertexId, GraphError> {
        match self.index.entry(id) {
            Entry::Occupied(e) => {
                let v = *e.get();
                let first = self.labels[v.index()];
                if first != label {
                    return Err(GraphError::ConflictingLabel {
                        id,
                        first,
                        second: label,
                    });
                }
                Ok(v)
            }
            Entry::Vacant(e) => {
                let next = u32::try_from(self.original.len()).map_err(|_| GraphError::TooManyVertices)?;
                e.insert(VertexId(next));
                self.original.push(id);
                self.labels.push(label);
                Ok(VertexId(next))
            }
        }
    }

    pub fn vertex(&self, id: u64) -> Option<VertexId> {
        self.index.get(&id).copied()
    }

    /// Adds an edge between two registered vertices.
    pub fn add_edge(&mut self, source: u64, target: u64) -> Result<(), GraphError> {
        if source == target {
            return Err(GraphError::SelfLoop(source));
        }
        let s = self.vertex(source).ok_or(GraphError::UnlabeledEndpoint(source))?;
        let t = self.vertex(target).ok_or(GraphError::UnlabeledEndpoint(target))?;
        self.edges.push((s.0, t.0));
        Ok(())
    }

    pub fn build(self) -> Result<LabeledDigraph, GraphError> {
        let n = self.original.len();
        let (forward, dup) = Csr::from_pairs(n, &self.edges);
        if let Some((s, t)) = dup {
            return Err(GraphError::DuplicateEdge(
                self.original[s as usize],
                self.original[t as usize],
            ));
        }
        let reversed: Vec<(u32, u32)> = self.edges.iter().map(|&(s, t)| (t, s)).collect();
        let (reverse, _) = Csr::from_pairs(n, &reversed);
        drop(reversed);

        let mut categories: BTreeMap<u8, Vec<VertexId>> = BTreeMap::new();
        let mut subcategories: BTreeMap<u8, Vec<VertexId>> = BTreeMap::new();
        for (i, l) in self.labels.iter().enumerate() {
            categories.entry(l.category()).or_default().push(VertexId(i as u32));
            subcategories.entry(l.subcategory()).or_default().push(VertexId(i as u32));
        }

        Ok(LabeledDigraph {
            index: self.index,
            original: self.original,
            labels: self.labels,
            forward,
            reverse,
            categories,
            subcategories,
        })
    }
}

/// Builds a graph from edges given in original identifiers. Vertices are
/// the edge endpoints, numbered in order of first appearance.
pub fn build_graph<I>(edges: I, labels: &HashMap<u64, GroupLabel>) -> Result<LabeledDigraph, GraphError>
where
    I: IntoIterator<Item = (u64, u64)>,
{
    let edges = edges.into_iter();
    let mut b = GraphBuilder::with_capacity(0, edges.size_hint().0);
    for (s, t) in edges {
        for id in [s, t] {
            if b.vertex(id).is_none() {
                let label = *labels.get(&id).ok_or(GraphError::UnlabeledEndpoint(id))?;
                b.add_vertex(id, label)?;
            }
        }
        b.add_edge(s, t)?;
    }
    b.build()
}

/// Immutable directed graph with a [`GroupLabel`] on every vertex.
#[derive(Debug, Clone)]
pub struct LabeledDigraph {
    index: HashMap<u64, VertexId>,
    original: Vec<u64>,
    labels: Vec<GroupLabel>,
    forward: Csr,
    reverse: Csr,
    categories: BTreeMap<u8, Vec<VertexId>>,
    subcategories: BTreeMap<u8, Vec<VertexId>>,
}

impl LabeledDigraph {
    pub fn vertex_count(&self) -> usize {
        self.original.len()
    }

    pub fn edge_count(&self) -> usize {
        self.forward.targets.len()
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = VertexId> {
        (0..self.original.len() as u32).map(VertexId)
    }

    #[inline]
    pub fn label(&self, v: VertexId) -> GroupLabel {
        self.labels[v.index()]
    }

    pub fn labels(&self) -> &[GroupLabel] {
        &self.labels
    }

    pub fn original_id(&self, v: VertexId) -> u64 {
        self.original[v.index()]
    }

    pub fn vertex(&self, original: u64) -> Option<VertexId> {
        self.index.get(&original).copied()
    }

    /// Vertices cited by `v`.
    #[inline]
    pub fn out_neighbors(&self, v: VertexId) -> &[VertexId] {
        self.forward.row(v)
    }

    /// Vertices citing `v`.
    #[inline]
    pub fn in_neighbors(&self, v: VertexId) -> &[VertexId] {
        self.reverse.row(v)
    }

    pub fn in_degree(&self, v: VertexId) -> usize {
        self.in_neighbors(v).len()
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        self.out_neighbors(v).len()
    }

    /// All edges as (source, target), ordered by source then target.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.vertices()
            .flat_map(move |s| self.out_neighbors(s).iter().map(move |&t| (s, t)))
    }

    fn group_map(&self, tier: Tier) -> &BTreeMap<u8, Vec<VertexId>> {
        match tier {
            Tier::Category => &self.categories,
            Tier::Subcategory => &self.subcategories,
        }
    }

    /// Group codes present in the graph at `tier`, ascending.
    pub fn group_codes(&self, tier: Tier) -> Vec<u8> {
        self.group_map(tier).keys().copied().collect()
    }

    /// Members of `group`, ascending by vertex id. Empty if absent.
    pub fn group_vertices(&self, group: Group) -> &[VertexId] {
        self.group_map(group.tier())
            .get(&group.code())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Edge counts between groups at one tier. Rows are source groups, columns
/// destination groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeMatrix {
    pub tier: Tier,
    pub groups: Vec<u8>,
    pub counts: Vec<Vec<u64>>,
}

impl EdgeMatrix {
    pub fn zeros(tier: Tier, groups: Vec<u8>) -> Self {
        let k = groups.len();
        EdgeMatrix {
            tier,
            groups,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn position(&self, code: u8) -> Option<usize> {
        self.groups.iter().position(|&g| g == code)
    }

    /// Count of edges from `source` to `dest`; zero for absent groups.
    pub fn get(&self, source: u8, dest: u8) -> u64 {
        match (self.position(source), self.position(dest)) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, source: u8) -> u64 {
        self.position(source).map_or(0, |i| self.counts[i].iter().sum())
    }

    pub fn column_sum(&self, dest: u8) -> u64 {
        self.position(dest)
            .map_or(0, |j| self.counts.iter().map(|r| r[j]).sum())
    }

    /// Sums subcategory cells into their categories. Identity at tier 1.
    pub fn to_categories(&self) -> EdgeMatrix {
        if self.tier == Tier::Category {
            return self.clone();
        }
        let mut cats: Vec<u8> = self.groups.iter().map(|g| g / 10).collect();
        cats.dedup();
        let mut out = EdgeMatrix::zeros(Tier::Category, cats);
        for (i, &gi) in self.groups.iter().enumerate() {
            let ci = out.position(gi / 10).expect("category present");
            for (j, &gj) in self.groups.iter().enumerate() {
                let cj = out.position(gj / 10).expect("category present");
                out.counts[ci][cj] += self.counts[i][j];
            }
        }
        out
    }
}

/// Tallies edges between the groups present in `graph` at `tier`.
pub fn edge_matrix(graph: &LabeledDigraph, tier: Tier) -> EdgeMatrix {
    let groups = graph.group_codes(tier);
    let mut slot = [usize::MAX; 100];
    for (i, &g) in groups.iter().enumerate() {
        slot[g as usize] = i;
    }
    let mut m = EdgeMatrix::zeros(tier, groups);
    let code: Vec<usize> = graph
        .labels()
        .iter()
        .map(|l| slot[l.code(tier) as usize])
        .collect();
    for s in graph.vertices() {
        let row = &mut m.counts[code[s.index()]];
        for t in graph.out_neighbors(s) {
            row[code[t.index()]] += 1;
        }
    }
    m
}
