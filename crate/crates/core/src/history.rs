//! Finite truncations of the history graph.

use std::collections::{HashMap, VecDeque};

use crate::expansion::{Csr, Layers, NONE};
use crate::graph::TypedGraph;
use crate::vers::{Vers, VersError, Word};

/// Color given to vertical (tree) edges in exported graphs.
pub const VERTICAL: &str = "@vertical";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HVertex {
    pub level: usize,
    pub index: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HEdge {
    pub level: usize,
    pub index: u32,
}

/// Levels `0..=depth` of the history graph with per-level adjacency.
#[derive(Debug, Clone)]
pub struct HistoryTruncation {
    pub(crate) layers: Layers,
    adjacency: Vec<Csr>,
    offsets: Vec<usize>,
}

pub fn history(vers: &Vers, depth: usize) -> HistoryTruncation {
    let mut layers = Layers::from_base(vers.rules().clone());
    layers.grow_to(depth);
    HistoryTruncation::from_layers(layers)
}

impl HistoryTruncation {
    pub(crate) fn from_layers(layers: Layers) -> Self {
        let adjacency = layers.levels.iter().map(|l| Csr::build(l.len(), &l.edges)).collect();
        let mut offsets = vec![0];
        for l in &layers.levels {
            offsets.push(offsets.last().unwrap() + l.len());
        }
        HistoryTruncation { layers, adjacency, offsets }
    }

    pub fn depth(&self) -> usize {
        self.layers.depth()
    }

    pub fn level_size(&self, level: usize) -> usize {
        self.layers.levels[level].len()
    }

    pub fn edge_count(&self, level: usize) -> usize {
        self.layers.levels[level].edges.len()
    }

    pub fn root(&self) -> HVertex {
        HVertex { level: 0, index: 0 }
    }

    pub fn vertices(&self, level: usize) -> impl Iterator<Item = HVertex> {
        (0..self.level_size(level) as u32).map(move |index| HVertex { level, index })
    }

    pub fn word(&self, v: HVertex) -> Word {
        self.layers.word(v.level, v.index)
    }

    pub fn id(&self, v: HVertex) -> String {
        self.layers.vertex_id(v.level, v.index)
    }

    pub fn vertex_type(&self, v: HVertex) -> &str {
        self.layers.type_name(v.level, v.index)
    }

    pub fn find(&self, word: &Word) -> Option<HVertex> {
        self.layers.find(word).map(|(level, index)| HVertex { level, index })
    }

    fn require(&self, word: &Word) -> Result<HVertex, VersError> {
        self.find(word).ok_or_else(|| VersError::UnknownWord(word.id()))
    }

    pub fn pred(&self, v: HVertex) -> Option<HVertex> {
        (v.level > 0).then(|| HVertex { level: v.level - 1, index: self.layers.levels[v.level].parent[v.index as usize] })
    }

    /// The ancestor `k` levels up.
    pub fn ancestor(&self, mut v: HVertex, k: usize) -> HVertex {
        for _ in 0..k {
            v = self.pred(v).expect("ancestor above the root");
        }
        v
    }

    pub fn children(&self, v: HVertex) -> impl Iterator<Item = HVertex> {
        let level = v.level + 1;
        self.layers.children(v.level, v.index).map(move |index| HVertex { level, index })
    }

    /// Distinct horizontal neighbours (loops included).
    pub fn neighbors(&self, v: HVertex) -> impl Iterator<Item = HVertex> + '_ {
        self.adjacency[v.level].neighbors(v.index).iter().map(move |&index| HVertex { level: v.level, index })
    }

    pub fn horizontal_edges(&self, level: usize) -> impl Iterator<Item = HEdge> {
        (0..self.edge_count(level) as u32).map(move |index| HEdge { level, index })
    }

    pub fn endpoints(&self, e: HEdge) -> (HVertex, HVertex) {
        let le = &self.layers.levels[e.level].edges[e.index as usize];
        (HVertex { level: e.level, index: le.from }, HVertex { level: e.level, index: le.to })
    }

    pub fn edge_color(&self, e: HEdge) -> &str {
        self.layers.color_name(self.layers.levels[e.level].edges[e.index as usize].color)
    }

    pub fn edge_id(&self, e: HEdge) -> String {
        self.layers.edge_id(e.level, e.index)
    }

    /// Base loop index and replacement-edge indices, oldest first.
    pub fn provenance(&self, e: HEdge) -> (usize, Vec<usize>) {
        let (seed, reps) = self.layers.provenance(e.level, e.index);
        (seed as usize, reps.into_iter().map(usize::from).collect())
    }

    /// Γ_level as a standalone graph.
    pub fn level_graph(&self, level: usize) -> TypedGraph {
        self.layers.to_graph(level)
    }

    /// The whole truncation; vertical edges are colored [`VERTICAL`].
    pub fn to_graph(&self) -> TypedGraph {
        let mut g = TypedGraph::new();
        let mut base = Vec::new();
        for level in 0..=self.depth() {
            base.push(g.vertex_count());
            for v in self.vertices(level) {
                g.add_vertex(self.id(v), self.vertex_type(v)).expect("word ids are unique");
            }
        }
        for level in 1..=self.depth() {
            for v in self.vertices(level) {
                let p = self.pred(v).unwrap();
                g.add_edge_at(
                    format!("v:{}", self.id(v)),
                    base[level - 1] + p.index as usize,
                    base[level] + v.index as usize,
                    VERTICAL,
                )
                .expect("one vertical edge per non-root vertex");
            }
        }
        for level in 0..=self.depth() {
            for e in self.horizontal_edges(level) {
                let (a, b) = self.endpoints(e);
                g.add_edge_at(
                    format!("h:{}", self.edge_id(e)),
                    base[level] + a.index as usize,
                    base[level] + b.index as usize,
                    self.edge_color(e),
                )
                .expect("provenance ids are unique");
            }
        }
        g
    }

    fn global(&self, v: HVertex) -> usize {
        self.offsets[v.level] + v.index as usize
    }

    /// BFS over levels `0..=max_level`, stopping once `v` is reached or the
    /// frontier passes `radius`.
    pub(crate) fn distance_within(&self, u: HVertex, v: HVertex, max_level: usize, radius: usize) -> Option<usize> {
        if u.level > max_level || v.level > max_level {
            return None;
        }
        if u == v {
            return Some(0);
        }
        // Bounded searches touch few vertices; a map keeps them cheap.
        let bounded = radius < usize::MAX;
        let mut dense = if bounded { Vec::new() } else { vec![u32::MAX; self.offsets[max_level + 1]] };
        let mut sparse: HashMap<usize, u32> = HashMap::new();
        let mut queue = VecDeque::new();
        let target = self.global(v);
        let mut visit = |x: HVertex, d: u32, queue: &mut VecDeque<(HVertex, u32)>| -> bool {
            let g = self.global(x);
            let fresh = if bounded {
                sparse.insert(g, d).is_none()
            } else if dense[g] == u32::MAX {
                dense[g] = d;
                true
            } else {
                false
            };
            if fresh {
                queue.push_back((x, d));
            }
            fresh && g == target
        };
        visit(u, 0, &mut queue);
        while let Some((x, d)) = queue.pop_front() {
            if d as usize >= radius {
                continue;
            }
            let nd = d + 1;
            if let Some(p) = self.pred(x) {
                if visit(p, nd, &mut queue) {
                    return Some(nd as usize);
                }
            }
            if x.level < max_level {
                for c in self.layers.children(x.level, x.index) {
                    if visit(HVertex { level: x.level + 1, index: c }, nd, &mut queue) {
                        return Some(nd as usize);
                    }
                }
            }
            for &y in self.adjacency[x.level].neighbors(x.index) {
                if visit(HVertex { level: x.level, index: y }, nd, &mut queue) {
                    return Some(nd as usize);
                }
            }
        }
        None
    }

    /// Distance in the history graph, computed in the truncation restricted to
    /// levels at most the deeper endpoint's level.
    pub fn distance(&self, u: HVertex, v: HVertex) -> Option<usize> {
        self.distance_within(u, v, u.level.max(v.level), usize::MAX)
    }

    /// Distance in the entire truncation, with no level restriction.
    pub fn truncation_distance(&self, u: HVertex, v: HVertex) -> Option<usize> {
        self.distance_within(u, v, self.depth(), usize::MAX)
    }

    /// Distances within one level from `src`, up to `radius`.
    pub(crate) fn horizontal_ball(&self, level: usize, src: u32, radius: usize) -> HashMap<u32, (u32, u32)> {
        // value: (distance, BFS parent)
        let mut seen = HashMap::new();
        seen.insert(src, (0, NONE));
        let mut queue = VecDeque::from([src]);
        while let Some(x) = queue.pop_front() {
            let d = seen[&x].0;
            if d as usize >= radius {
                continue;
            }
            for &y in self.adjacency[level].neighbors(x) {
                seen.entry(y).or_insert_with(|| {
                    queue.push_back(y);
                    (d + 1, x)
                });
            }
        }
        seen
    }
}

/// The unique edge one level up whose expansion produced `e`.
pub fn spanning_lift(h: &HistoryTruncation, e: HEdge) -> Result<HEdge, VersError> {
    if e.level == 0 {
        return Err(VersError::LevelZero);
    }
    if e.level > h.depth() {
        return Err(VersError::LevelOutOfRange { level: e.level, depth: h.depth() });
    }
    let parent = h.layers.levels[e.level].edges[e.index as usize].parent;
    Ok(HEdge { level: e.level - 1, index: parent })
}

/// History-graph distance between two words of the truncation.
pub fn at_distance(h: &HistoryTruncation, u: &Word, v: &Word) -> Result<Option<usize>, VersError> {
    let a = h.require(u)?;
    let b = h.require(v)?;
    Ok(h.distance(a, b))
}

/// Keeps the levels divisible by `k`, joining each kept vertex to its
/// ancestor `k` levels up; horizontal edges keep their colors.
pub fn tree_power(h: &HistoryTruncation, k: usize) -> TypedGraph {
    assert!(k >= 1, "power must be positive");
    let mut g = TypedGraph::new();
    let mut base = HashMap::new();
    for level in (0..=h.depth()).step_by(k) {
        base.insert(level, g.vertex_count());
        for v in h.vertices(level) {
            g.add_vertex(h.id(v), h.vertex_type(v)).expect("word ids are unique");
        }
    }
    for level in (k..=h.depth()).step_by(k) {
        for v in h.vertices(level) {
            let p = h.ancestor(v, k);
            g.add_edge_at(
                format!("v:{}", h.id(v)),
                base[&(level - k)] + p.index as usize,
                base[&level] + v.index as usize,
                VERTICAL,
            )
            .expect("one vertical edge per kept non-root vertex");
        }
    }
    for level in (0..=h.depth()).step_by(k) {
        for e in h.horizontal_edges(level) {
            let (a, b) = h.endpoints(e);
            g.add_edge_at(
                format!("h:{}", h.edge_id(e)),
                base[&level] + a.index as usize,
                base[&level] + b.index as usize,
                h.edge_color(e),
            )
            .expect("provenance ids are unique");
        }
    }
    g
}
