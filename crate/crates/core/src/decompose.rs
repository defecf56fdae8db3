//! Internal / external / per-source-group indegree decomposition.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{LabeledDigraph, VertexId};
use crate::groups::{Group, GroupError, Tier};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecomposeError {
    #[error("scope {0} contains no vertices")]
    EmptyScope(String),
    #[error(transparent)]
    UnknownGroup(#[from] GroupError),
    #[error("group {group} lies outside scope category {scope}")]
    OutOfScope { group: Group, scope: u8 },
}

/// Contiguous run of one group's vertices inside a [`DegreeDecomposition`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GroupSpan {
    pub code: u8,
    pub start: usize,
    pub end: usize,
}

/// Per-vertex indegree split at one tier.
///
/// When `scope` names a category, only vertices of that category are listed
/// and only edges with both endpoints inside it are counted.
#[derive(Debug, Clone)]
pub struct DegreeDecomposition {
    pub tier: Tier,
    pub scope: Option<u8>,
    pub vertices: Vec<VertexId>,
    pub spans: Vec<GroupSpan>,
    pub global_in: Vec<u32>,
    pub internal_in: Vec<u32>,
    pub external_in: Vec<u32>,
}

/// Borrowed view of one group's rows.
#[derive(Debug, Clone, Copy)]
pub struct GroupView<'a> {
    pub code: u8,
    pub vertices: &'a [VertexId],
    pub global_in: &'a [u32],
    pub internal_in: &'a [u32],
    pub external_in: &'a [u32],
}

impl GroupView<'_> {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn externally_popular_fraction(&self) -> f64 {
        popular_fraction(self.external_in)
    }
}

fn popular_fraction(external: &[u32]) -> f64 {
    if external.is_empty() {
        return 0.0;
    }
    external.iter().filter(|&&e| e >= 1).count() as f64 / external.len() as f64
}

impl DegreeDecomposition {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn group_codes(&self) -> impl Iterator<Item = u8> + '_ {
        self.spans.iter().map(|s| s.code)
    }

    pub fn group(&self, code: u8) -> Option<GroupView<'_>> {
        let s = self.spans.iter().find(|s| s.code == code)?;
        Some(GroupView {
            code,
            vertices: &self.vertices[s.start..s.end],
            global_in: &self.global_in[s.start..s.end],
            internal_in: &self.internal_in[s.start..s.end],
            external_in: &self.external_in[s.start..s.end],
        })
    }

    pub fn groups(&self) -> impl Iterator<Item = GroupView<'_>> {
        self.spans.iter().map(move |s| self.group(s.code).expect("span exists"))
    }

    /// Writes `vertex,group,global,internal,external` rows, with original
    /// vertex identifiers.
    pub fn write_columns<W: Write>(&self, graph: &LabeledDigraph, mut out: W) -> io::Result<()> {
        writeln!(out, "vertex,group,global,internal,external")?;
        for view in self.groups() {
            for i in 0..view.len() {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    graph.original_id(view.vertices[i]),
                    view.code,
                    view.global_in[i],
                    view.internal_in[i],
                    view.external_in[i]
                )?;
            }
        }
        Ok(())
    }
}

fn check_scope(scope: Option<u8>) -> Result<(), DecomposeError> {
    if let Some(c) = scope {
        Group::new(Tier::Category, c)?;
    }
    Ok(())
}

/// Splits every in-scope vertex's indegree into internal (same group at
/// `tier`) and external parts.
pub fn decompose_indegree(
    graph: &LabeledDigraph,
    tier: Tier,
    scope: Option<u8>,
) -> Result<DegreeDecomposition, DecomposeError> {
    check_scope(scope)?;
    let codes: Vec<u8> = match scope {
        None => graph.group_codes(tier),
        Some(c) => graph
            .group_codes(tier)
            .into_iter()
            .filter(|&g| match tier {
                Tier::Category => g == c,
                Tier::Subcategory => g / 10 == c,
            })
            .collect(),
    };
    if codes.is_empty() {
        return Err(DecomposeError::EmptyScope(
            scope.map_or_else(|| "graph".to_string(), |c| format!("category {c}")),
        ));
    }

    let in_scope = |u: VertexId| scope.is_none_or(|c| graph.label(u).category() == c);
    let parts: Vec<(u8, Vec<VertexId>, Vec<u32>, Vec<u32>, Vec<u32>)> = codes
        .par_iter()
        .map(|&code| {
            let group = Group::new(tier, code).expect("codes come from labels");
            let members = graph.group_vertices(group);
            let mut global = Vec::with_capacity(members.len());
            let mut internal = Vec::with_capacity(members.len());
            let mut external = Vec::with_capacity(members.len());
            for &v in members {
                let (mut i, mut e) = (0u32, 0u32);
                for &u in graph.in_neighbors(v) {
                    if !in_scope(u) {
                        continue;
                    }
                    if graph.label(u).code(tier) == code {
                        i += 1;
                    } else {
                        e += 1;
                    }
                }
                global.push(i + e);
                internal.push(i);
                external.push(e);
            }
            (code, members.to_vec(), global, internal, external)
        })
        .collect();

    let mut d = DegreeDecomposition {
        tier,
        scope,
        vertices: Vec::new(),
        spans: Vec::with_capacity(parts.len()),
        global_in: Vec::new(),
        internal_in: Vec::new(),
        external_in: Vec::new(),
    };
    for (code, vs, g, i, e) in parts {
        let start = d.vertices.len();
        d.vertices.extend(vs);
        d.global_in.extend(g);
        d.internal_in.extend(i);
        d.external_in.extend(e);
        d.spans.push(GroupSpan {
            code,
            start,
            end: d.vertices.len(),
        });
    }
    Ok(d)
}

/// Fraction of decomposed vertices with at least one external in-link.
pub fn externally_popular_fraction(d: &DegreeDecomposition) -> f64 {
    popular_fraction(&d.external_in)
}

/// Indegree of each vertex of `dest` counting only edges from `source`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelVector {
    pub dest: Group,
    pub source: Group,
    pub vertices: Vec<VertexId>,
    pub counts: Vec<u32>,
}

impl ChannelVector {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

fn check_group(group: Group, scope: Option<u8>) -> Result<(), DecomposeError> {
    Group::new(group.tier(), group.code())?;
    match scope {
        Some(c) if group.category() != c => Err(DecomposeError::OutOfScope { group, scope: c }),
        _ => Ok(()),
    }
}

pub fn channel_indegree(
    graph: &LabeledDigraph,
    dest: Group,
    source: Group,
    scope: Option<u8>,
) -> Result<ChannelVector, DecomposeError> {
    check_scope(scope)?;
    check_group(dest, scope)?;
    check_group(source, scope)?;
    let vertices = graph.group_vertices(dest).to_vec();
    let counts = vertices
        .iter()
        .map(|&v| {
            graph
                .in_neighbors(v)
                .iter()
                .filter(|&&u| source.contains(graph.label(u)))
                .count() as u32
        })
        .collect();
    Ok(ChannelVector {
        dest,
        source,
        vertices,
        counts,
    })
}

/// Every channel into `dest` from the groups at `source_tier` (within
/// `scope`), in one pass. Sources with no vertices in the graph are omitted;
/// sources present but never citing `dest` yield all-zero vectors.
pub fn channels_into(
    graph: &LabeledDigraph,
    dest: Group,
    source_tier: Tier,
    scope: Option<u8>,
) -> Result<Vec<ChannelVector>, DecomposeError> {
    check_scope(scope)?;
    check_group(dest, scope)?;
    let sources: Vec<u8> = graph
        .group_codes(source_tier)
        .into_iter()
        .filter(|&c| {
            scope.is_none_or(|s| match source_tier {
                Tier::Category => c == s,
                Tier::Subcategory => c / 10 == s,
            })
        })
        .collect();
    let mut slot = [usize::MAX; 100];
    for (i, &c) in sources.iter().enumerate() {
        slot[c as usize] = i;
    }
    let vertices = graph.group_vertices(dest).to_vec();
    let mut counts = vec![vec![0u32; vertices.len()]; sources.len()];
    for (row, &v) in vertices.iter().enumerate() {
        for &u in graph.in_neighbors(v) {
            let s = slot[graph.label(u).code(source_tier) as usize];
            if s != usize::MAX {
                counts[s][row] += 1;
            }
        }
    }
    Ok(sources
        .into_iter()
        .zip(counts)
        .map(|(code, counts)| ChannelVector {
            dest,
            source: Group::new(source_tier, code).expect("codes come from labels"),
            vertices: vertices.clone(),
            counts,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::graph::build_graph;
    use crate::groups::GroupLabel;

    fn label(sub: u32) -> GroupLabel {
        GroupLabel::from_subcategory(sub).unwrap()
    }

    fn fixture() -> LabeledDigraph {
        let labels: HashMap<u64, GroupLabel> = [
            (100, label(11)),
            (101, label(11)),
            (102, label(12)),
            (103, label(12)),
            (104, label(21)),
            (105, label(21)),
        ]
        .into_iter()
        .collect();
        let edges = [
            (101, 100),
            (102, 100),
            (103, 100),
            (104, 100),
            (103, 102),
            (105, 104),
            (105, 101),
            (104, 102),
            (102, 101),
        ];
        build_graph(edges, &labels).unwrap()
    }

    fn row(g: &LabeledDigraph, d: &DegreeDecomposition, id: u64) -> (u32, u32, u32) {
        let v = g.vertex(id).unwrap();
        let i = d.vertices.iter().position(|&x| x == v).unwrap();
        (d.global_in[i], d.internal_in[i], d.external_in[i])
    }

    #[test]
    fn fixture_tier1_by_hand() {
        let g = fixture();
        let d = decompose_indegree(&g, Tier::Category, None).unwrap();
        assert_eq!(d.len(), 6);
        assert_eq!(row(&g, &d, 100), (4, 3, 1));
        assert_eq!(row(&g, &d, 101), (2, 1, 1));
        assert_eq!(row(&g, &d, 102), (2, 1, 1));
        assert_eq!(row(&g, &d, 104), (1, 1, 0));
        assert_eq!(row(&g, &d, 105), (0, 0, 0));
        assert!((externally_popular_fraction(&d) - 0.5).abs() < 1e-15);
        let cat1 = d.group(1).unwrap();
        assert_eq!(cat1.len(), 4);
        assert!((cat1.externally_popular_fraction() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn fixture_tier2_scoped() {
        let g = fixture();
        let d = decompose_indegree(&g, Tier::Subcategory, Some(1)).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.group_codes().collect::<Vec<_>>(), vec![11, 12]);
        // edge 104->100 comes from category 2 and is ignored in scope 1
        assert_eq!(row(&g, &d, 100), (3, 1, 2));
        assert_eq!(row(&g, &d, 101), (1, 0, 1));
        assert_eq!(row(&g, &d, 102), (1, 1, 0));
    }

    #[test]
    fn no_cross_edges_means_no_external() {
        let labels: HashMap<u64, GroupLabel> = (0..6)
            .map(|i| (i, label(if i < 3 { 11 } else { 41 })))
            .collect();
        let g = build_graph([(1, 0), (2, 0), (2, 1), (4, 3), (5, 3)], &labels).unwrap();
        let d = decompose_indegree(&g, Tier::Category, None).unwrap();
        assert!(d.external_in.iter().all(|&e| e == 0));
        assert_eq!(d.internal_in, d.global_in);
        assert_eq!(externally_popular_fraction(&d), 0.0);
    }

    #[test]
    fn empty_scope_rejected() {
        let g = fixture();
        assert!(matches!(
            decompose_indegree(&g, Tier::Subcategory, Some(5)),
            Err(DecomposeError::EmptyScope(_))
        ));
        assert!(matches!(
            decompose_indegree(&g, Tier::Subcategory, Some(9)),
            Err(DecomposeError::UnknownGroup(_))
        ));
    }

    #[test]
    fn channels_by_hand() {
        let g = fixture();
        let c = channel_indegree(&g, Group::Category(1), Group::Category(2), None).unwrap();
        let by_id: HashMap<u64, u32> = c
            .vertices
            .iter()
            .zip(&c.counts)
            .map(|(&v, &n)| (g.original_id(v), n))
            .collect();
        assert_eq!(by_id[&100], 1);
        assert_eq!(by_id[&101], 1);
        assert_eq!(by_id[&102], 1);
        assert_eq!(by_id[&103], 0);
        assert_eq!(c.total(), 3);

        let zero = channel_indegree(&g, Group::Category(2), Group::Category(1), None).unwrap();
        assert!(zero.counts.iter().all(|&n| n == 0));

        let cross = channel_indegree(&g, Group::Category(1), Group::Subcategory(21), None).unwrap();
        assert_eq!(cross.counts, c.counts);
    }

    #[test]
    fn channels_into_matches_single_channels() {
        let g = fixture();
        for scope in [None, Some(1)] {
            let dest = Group::Subcategory(11);
            for ch in channels_into(&g, dest, Tier::Subcategory, scope).unwrap() {
                let single = channel_indegree(&g, dest, ch.source, scope).unwrap();
                assert_eq!(ch, single);
            }
        }
        assert_eq!(
            channels_into(&g, Group::Subcategory(11), Tier::Subcategory, Some(1))
                .unwrap()
                .len(),
            2
        );
    }

    #[test]
    fn channel_scope_and_codes_checked() {
        let g = fixture();
        assert!(matches!(
            channel_indegree(&g, Group::Subcategory(11), Group::Subcategory(21), Some(1)),
            Err(DecomposeError::OutOfScope { .. })
        ));
        assert!(matches!(
            channel_indegree(&g, Group::Category(8), Group::Category(1), None),
            Err(DecomposeError::UnknownGroup(_))
        ));
    }

    #[test]
    fn columns_export() {
        let g = fixture();
        let d = decompose_indegree(&g, Tier::Category, None).unwrap();
        let mut buf = Vec::new();
        d.write_columns(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("vertex,group,global,internal,external\n"));
        assert!(text.contains("\n100,1,4,3,1\n"));
        assert_eq!(text.lines().count(), 7);
    }
}
