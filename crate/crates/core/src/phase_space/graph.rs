use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::PI;

use serde::Serialize;

use super::{Cover, Region};
use crate::error::{Error, Result};

/// Simple undirected graph on `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NerveGraph {
    adjacency: Vec<Vec<usize>>,
}

impl NerveGraph {
    /// Builds from an edge list; loops and duplicates are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut sets = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidArgument(format!("edge ({a}, {b}) outside 0..{n}")));
            }
            if a != b {
                sets[a].insert(b);
                sets[b].insert(a);
            }
        }
        Ok(Self { adjacency: sets.into_iter().map(|s| s.into_iter().collect()).collect() })
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }
}

/// Vertices `i ~ j` iff the closures of `U_i` and `U_j` meet. Exact for
/// bands on one axis, balls, and unions of either.
pub fn nerve_graph(cover: &Cover) -> Result<NerveGraph> {
    let kinds: BTreeSet<&str> = cover.regions.iter().map(leaf_kind).collect::<Result<_>>()?;
    if kinds.len() > 1 {
        return Err(Error::UnsupportedCover(format!("mixed region types {kinds:?}")));
    }
    let n = cover.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if cover.regions[i].closures_meet(&cover.regions[j])? {
                edges.push((i, j));
            }
        }
    }
    NerveGraph::from_edges(n, &edges)
}

fn leaf_kind(r: &Region) -> Result<&'static str> {
    match r {
        Region::Union { parts } => {
            let kinds: BTreeSet<&str> = parts.iter().map(leaf_kind).collect::<Result<_>>()?;
            match kinds.len() {
                1 => Ok(kinds.into_iter().next().expect("one kind")),
                _ => Err(Error::UnsupportedCover(format!("union of mixed regions {kinds:?}"))),
            }
        }
        Region::Band { .. } | Region::Ball { .. } | Region::Sphere => Ok(r.kind()),
        Region::Intersection { .. } => Err(Error::UnsupportedCover("nerve of intersection regions".into())),
    }
}

fn cap_area(rho: f64) -> f64 {
    2.0 * PI * (1.0 - rho.min(PI).cos())
}

/// Degree bound for the nerve of a greedy cover of radius `r`: neighbours
/// lie within `2r`, are `r/2`-separated, so their disjoint `r/4`-caps fit
/// in the `3r`-cap.
pub fn nerve_degree_bound(r: f64) -> usize {
    (cap_area(3.0 * r) / cap_area(r / 4.0)).floor() as usize
}

/// Graph distances from `source`, `None` beyond `max_depth` or unreachable.
pub fn bfs_distances(graph: &NerveGraph, source: usize, max_depth: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; graph.len()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].expect("queued vertices have a distance");
        if d == max_depth {
            continue;
        }
        for &w in graph.neighbors(v) {
            if dist[w].is_none() {
                dist[w] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// A vertex coloring.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Coloring {
    pub colors: Vec<usize>,
    pub count: usize,
}

impl Coloring {
    /// Smallest graph distance between distinct same-colored vertices,
    /// `None` if no color is repeated within distance `limit`.
    pub fn min_same_color_distance(&self, graph: &NerveGraph, limit: usize) -> Option<usize> {
        (0..graph.len())
            .filter_map(|v| {
                bfs_distances(graph, v, limit)
                    .into_iter()
                    .enumerate()
                    .filter(|&(w, d)| w != v && d.is_some() && self.colors[w] == self.colors[v])
                    .filter_map(|(_, d)| d)
                    .min()
            })
            .min()
    }

    /// Same-colored vertices at distance `≥ k + 1`.
    pub fn is_distance_coloring(&self, graph: &NerveGraph, k: usize) -> bool {
        self.min_same_color_distance(graph, k).is_none()
    }
}

/// Greedy coloring of the `k`-th power graph in vertex order: uses at most
/// `Δ(Υ^k) + 1 ≤ d^k + 1` colors.
pub fn power_graph_coloring(graph: &NerveGraph, k: usize) -> Coloring {
    let n = graph.len();
    let mut colors: Vec<Option<usize>> = vec![None; n];
    for v in 0..n {
        let used: BTreeSet<usize> = bfs_distances(graph, v, k)
            .into_iter()
            .enumerate()
            .filter(|&(w, d)| w != v && d.is_some())
            .filter_map(|(w, _)| colors[w])
            .collect();
        colors[v] = Some((0..).find(|c| !used.contains(c)).expect("unbounded range"));
    }
    let colors: Vec<usize> = colors.into_iter().map(|c| c.expect("all colored")).collect();
    let count = colors.iter().max().map_or(0, |m| m + 1);
    Coloring { colors, count }
}

/// A cover obtained by merging same-colored regions, with the refinement map.
#[derive(Clone, Debug)]
pub struct MergedCover {
    pub cover: Cover,
    /// `map[i]` is the merged region containing original region `i`.
    pub map: Vec<usize>,
}

/// One region per color, the union of the regions of that color.
pub fn merge_refinement(cover: &Cover, coloring: &Coloring) -> Result<MergedCover> {
    if coloring.colors.len() != cover.len() {
        return Err(Error::LengthMismatch { expected: cover.len(), got: coloring.colors.len() });
    }
    // Relabel colors densely in order of first appearance.
    let mut relabel = vec![usize::MAX; coloring.count];
    let mut next = 0;
    let map: Vec<usize> = coloring
        .colors
        .iter()
        .map(|&c| {
            if relabel[c] == usize::MAX {
                relabel[c] = next;
                next += 1;
            }
            relabel[c]
        })
        .collect();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); next];
    for (i, &l) in map.iter().enumerate() {
        groups[l].push(i);
    }
    let regions: Vec<Region> = groups
        .iter()
        .map(|g| match g.as_slice() {
            [single] => cover.regions[*single].clone(),
            _ => Region::Union { parts: g.iter().map(|&i| cover.regions[i].clone()).collect() },
        })
        .collect();
    let labels =
        groups.iter().map(|g| g.iter().map(|&i| cover.labels[i].as_str()).collect::<Vec<_>>().join("+")).collect();
    Ok(MergedCover { cover: Cover { regions, labels, band: None }, map })
}

/// `p`-fold iterated star of an index set in the nerve.
pub fn star(graph: &NerveGraph, indices: &[usize], p: usize) -> Vec<usize> {
    let mut current: BTreeSet<usize> = indices.iter().copied().collect();
    for _ in 0..p {
        let grown: BTreeSet<usize> =
            current.iter().flat_map(|&v| graph.neighbors(v).iter().copied().chain(std::iter::once(v))).collect();
        if grown == current {
            break;
        }
        current = grown;
    }
    current.into_iter().collect()
}
