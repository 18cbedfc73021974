//! Expansivity checks over abstract paths and geodesic-square search.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expansion::{Csr, Layers, NONE};
use crate::graph::{bfs_distance, TypedGraph};
use crate::history::{HVertex, HistoryTruncation};
use crate::vers::{Rules, Vers, VersError};
use crate::expand;

#[derive(Debug, Error)]
pub enum HyperbolicityError {
    #[error("square size must be at least 1")]
    ZeroSize,
    #[error("truncation depth {depth} is smaller than the square size {size}")]
    DepthTooSmall { depth: usize, size: usize },
    #[error("unknown color {0:?}")]
    UnknownColor(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Forward,
    Backward,
}

/// A simple path `v₀ … vₙ` described by colors, orientations and the types
/// they force on its vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AbstractPath {
    pub colors: Vec<String>,
    pub orientations: Vec<Orientation>,
    pub types: Vec<String>,
}

impl AbstractPath {
    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    /// Vertices `v0..vn`; edge `ej` joins `vj` and `v(j+1)` in its orientation.
    pub fn to_graph(&self) -> TypedGraph {
        let mut g = TypedGraph::new();
        for (j, t) in self.types.iter().enumerate() {
            g.add_vertex(format!("v{j}"), t.clone()).expect("distinct names");
        }
        for (j, (c, o)) in self.colors.iter().zip(&self.orientations).enumerate() {
            let (a, b) = match o {
                Orientation::Forward => (j, j + 1),
                Orientation::Backward => (j + 1, j),
            };
            g.add_edge_at(format!("e{j}"), a, b, c.clone()).expect("distinct names");
        }
        g
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathOptions {
    /// Emit only one of each path and its reversal.
    pub dedup_reversal: bool,
    /// Only use types reachable from the start vertex.
    pub reachable_only: bool,
    /// Restrict edge colors to this set.
    pub colors: Option<Vec<String>>,
    /// Only use paths whose corners occur in some `Γ_m`; see [`realized_corners`].
    pub realizable: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExpandingOptions {
    pub paths: PathOptions,
    /// Also fail when descendants come closer than `n`.
    pub fail_below: bool,
}

#[derive(Debug, Clone)]
struct RawPath {
    choices: Vec<usize>,
    types: Vec<u16>,
}

/// Depth-first enumeration in lexicographic order of
/// `(c₁, o₁, c₂, o₂, …)`, forward before backward.
pub struct AbstractPaths {
    rules: Arc<Rules>,
    colors: Vec<u16>,
    type_ok: Vec<bool>,
    n: usize,
    dedup: bool,
    corners: Option<HashSet<Corner>>,
    stack: Vec<usize>,
    types: Vec<u16>,
    state: EnumState,
}

#[derive(PartialEq, Eq)]
enum EnumState {
    Fresh,
    Running,
    Done,
}

impl AbstractPaths {
    fn new(vers: &Vers, n: usize, opts: &PathOptions) -> Result<Self, HyperbolicityError> {
        let rules = vers.rules().clone();
        let colors = match &opts.colors {
            None => (0..rules.color_names.len() as u16).collect(),
            Some(list) => {
                let mut cs = BTreeSet::new();
                for c in list {
                    cs.insert(*rules.color_index.get(c).ok_or_else(|| HyperbolicityError::UnknownColor(c.clone()))?);
                }
                cs.into_iter().collect()
            }
        };
        let type_ok = if opts.reachable_only {
            let reach = vers.reachable_types();
            rules.type_names.iter().map(|t| reach.contains(t)).collect()
        } else {
            vec![true; rules.type_names.len()]
        };
        let state = if n == 0 { EnumState::Done } else { EnumState::Fresh };
        let corners = opts.realizable.then(|| corner_closure(&rules));
        Ok(AbstractPaths {
            rules,
            colors,
            type_ok,
            n,
            dedup: opts.dedup_reversal,
            corners,
            stack: Vec::new(),
            types: Vec::new(),
            state,
        })
    }

    fn ends(&self, choice: usize) -> (u16, u16) {
        let (a, b) = self.rules.kappa[self.colors[choice / 2] as usize];
        if choice % 2 == 0 {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Half-edge labels of a choice at its first and second vertex.
    fn labels(&self, choice: usize) -> (HalfEdge, HalfEdge) {
        let c = self.colors[choice / 2];
        if choice % 2 == 0 {
            (HalfEdge::Out(c), HalfEdge::In(c))
        } else {
            (HalfEdge::In(c), HalfEdge::Out(c))
        }
    }

    fn fits(&self, pos: usize, choice: usize) -> bool {
        let (p, q) = self.ends(choice);
        if !(self.type_ok[p as usize] && self.type_ok[q as usize] && (pos == 0 || self.types[pos] == p)) {
            return false;
        }
        let Some(corners) = &self.corners else { return true };
        let (here, there) = self.labels(choice);
        let at_p = match pos {
            0 => Corner::new(p, &[here]),
            _ => Corner::new(p, &[self.labels(self.stack[pos - 1]).1, here]),
        };
        corners.contains(&at_p) && corners.contains(&Corner::new(q, &[there]))
    }

    /// Extends the stack to a full path, resuming after `resume` at the top.
    fn fill(&mut self, mut resume: Option<usize>) -> bool {
        let width = 2 * self.colors.len();
        loop {
            let pos = self.stack.len();
            if pos == self.n {
                return true;
            }
            let from = resume.map_or(0, |c| c + 1);
            resume = None;
            match (from..width).find(|&c| self.fits(pos, c)) {
                Some(c) => {
                    let (p, q) = self.ends(c);
                    if pos == 0 {
                        self.types = vec![p];
                    }
                    self.types.push(q);
                    self.stack.push(c);
                }
                None => {
                    let Some(c) = self.stack.pop() else { return false };
                    self.types.truncate(self.stack.len() + 1);
                    resume = Some(c);
                }
            }
        }
    }

    fn next_raw(&mut self) -> Option<RawPath> {
        loop {
            let found = match self.state {
                EnumState::Done => return None,
                EnumState::Fresh => {
                    self.state = EnumState::Running;
                    self.fill(None)
                }
                EnumState::Running => {
                    let c = self.stack.pop().expect("running enumeration holds a full path");
                    self.types.truncate(self.stack.len() + 1);
                    self.fill(Some(c))
                }
            };
            if !found {
                self.state = EnumState::Done;
                return None;
            }
            if self.dedup {
                let rev: Vec<usize> = self.stack.iter().rev().map(|c| c ^ 1).collect();
                if rev < self.stack {
                    continue;
                }
            }
            return Some(RawPath { choices: self.stack.clone(), types: self.types.clone() });
        }
    }

    fn publish(&self, raw: &RawPath) -> AbstractPath {
        let r = &self.rules;
        AbstractPath {
            colors: raw.choices.iter().map(|c| r.color_names[self.colors[c / 2] as usize].clone()).collect(),
            orientations: raw
                .choices
                .iter()
                .map(|c| if c % 2 == 0 { Orientation::Forward } else { Orientation::Backward })
                .collect(),
            types: raw.types.iter().map(|&t| r.type_names[t as usize].clone()).collect(),
        }
    }
}

impl Iterator for AbstractPaths {
    type Item = AbstractPath;

    fn next(&mut self) -> Option<AbstractPath> {
        self.next_raw().map(|raw| self.publish(&raw))
    }
}

/// Label of an edge as seen from one endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum HalfEdge {
    Out(u16),
    In(u16),
    Loop(u16),
}

/// A vertex type with at most two incident half-edge labels, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Corner {
    ty: u16,
    labels: Vec<HalfEdge>,
}

impl Corner {
    fn new(ty: u16, labels: &[HalfEdge]) -> Corner {
        let mut labels = labels.to_vec();
        labels.sort();
        Corner { ty, labels }
    }

    /// Every sub-multiset of size at most two of a vertex star.
    fn all_of(ty: u16, star: &[HalfEdge], out: &mut Vec<Corner>) {
        out.push(Corner::new(ty, &[]));
        for i in 0..star.len() {
            out.push(Corner::new(ty, &star[i..=i]));
            for j in i + 1..star.len() {
                out.push(Corner::new(ty, &[star[i], star[j]]));
            }
        }
    }
}

/// Corners occurring at some vertex of some `Γ_m`.
///
/// Every edge of `Γ_{m+1}` is a replacement of one edge of `Γ_m`, so the
/// corners at the children of `y` depend only on the type of `y` and on the
/// (at most two) edges of `y` they descend from. Expanding each corner once
/// in isolation and closing under that step is therefore exact.
fn corner_closure(rules: &Arc<Rules>) -> HashSet<Corner> {
    let mut seen = HashSet::new();
    let mut queue = Vec::new();
    let base: Vec<HalfEdge> = rules.base.iter().map(|&c| HalfEdge::Loop(c)).collect();
    Corner::all_of(rules.start, &base, &mut queue);
    while let Some(corner) = queue.pop() {
        if !seen.insert(corner.clone()) {
            continue;
        }
        let mut ty = vec![corner.ty];
        let mut edges = Vec::new();
        for &l in &corner.labels {
            match l {
                HalfEdge::Out(c) => {
                    ty.push(rules.kappa[c as usize].1);
                    edges.push((0, ty.len() as u32 - 1, c));
                }
                HalfEdge::In(c) => {
                    ty.push(rules.kappa[c as usize].0);
                    edges.push((ty.len() as u32 - 1, 0, c));
                }
                HalfEdge::Loop(c) => edges.push((0, 0, c)),
            }
        }
        let names = (0..ty.len()).map(|j| format!("v{j}")).collect();
        let mut layers = Layers::from_parts(rules.clone(), names, ty, &edges);
        layers.grow();
        let level = &layers.levels[1];
        for x in layers.children(0, 0) {
            let star: Vec<HalfEdge> = level
                .edges
                .iter()
                .filter_map(|e| match (e.from == x, e.to == x) {
                    (true, true) => Some(HalfEdge::Loop(e.color)),
                    (true, false) => Some(HalfEdge::Out(e.color)),
                    (false, true) => Some(HalfEdge::In(e.color)),
                    (false, false) => None,
                })
                .collect();
            Corner::all_of(level.ty[x as usize], &star, &mut queue);
        }
    }
    seen
}

/// Type and half-edge labels of every corner that occurs in some `Γ_m`,
/// rendered as `type: l1 l2` with labels `color>` (outgoing), `>color`
/// (incoming) or `color@` (loop), in string order.
pub fn realized_corners(vers: &Vers) -> BTreeSet<String> {
    let rules = vers.rules();
    let render = |l: &HalfEdge| match *l {
        HalfEdge::Out(c) => format!("{}>", rules.color_names[c as usize]),
        HalfEdge::In(c) => format!(">{}", rules.color_names[c as usize]),
        HalfEdge::Loop(c) => format!("{}@", rules.color_names[c as usize]),
    };
    corner_closure(rules)
        .iter()
        .filter(|c| c.labels.len() == 2)
        .map(|c| {
            let (a, b) = (render(&c.labels[0]), render(&c.labels[1]));
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            format!("{}: {a} {b}", rules.type_names[c.ty as usize])
        })
        .collect()
}

/// All κ-consistent abstract paths of length `n`.
pub fn enumerate_abstract_paths(vers: &Vers, n: usize, opts: &PathOptions) -> Result<AbstractPaths, HyperbolicityError> {
    AbstractPaths::new(vers, n, opts)
}

/// A pair of depth-`n` descendants of a path's endpoints that are too close.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub path: AbstractPath,
    pub source: String,
    pub target: String,
    pub distance: usize,
    /// Vertex ids of a shortest walk from `source` to `target`.
    pub geodesic: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ExpansionVerdict {
    Expanding,
    NotExpanding(Witness),
}

impl ExpansionVerdict {
    pub fn is_expanding(&self) -> bool {
        matches!(self, ExpansionVerdict::Expanding)
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            ExpansionVerdict::Expanding => None,
            ExpansionVerdict::NotExpanding(w) => Some(w),
        }
    }
}

struct RawWitness {
    layers: Layers,
    walk: Vec<u32>,
}

/// Descendant range of seed vertex `seed` at the deepest level.
fn descendants(layers: &Layers, seed: u32) -> (u32, u32) {
    let (mut lo, mut hi) = (seed, seed + 1);
    for l in 0..layers.depth() {
        let cs = &layers.levels[l].child_start;
        lo = cs[lo as usize];
        hi = cs[hi as usize];
    }
    (lo, hi)
}

fn check_path(rules: &Arc<Rules>, paths: &AbstractPaths, raw: &RawPath, n: usize, fail_below: bool) -> Option<RawWitness> {
    let names = (0..=n).map(|j| format!("v{j}")).collect();
    let edges: Vec<(u32, u32, u16)> = raw
        .choices
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let color = paths.colors[c / 2];
            let (a, b) = (j as u32, j as u32 + 1);
            if c % 2 == 0 {
                (a, b, color)
            } else {
                (b, a, color)
            }
        })
        .collect();
    let mut layers = Layers::from_parts(rules.clone(), names, raw.types.clone(), &edges);
    layers.grow_to(n);
    let (s_lo, s_hi) = descendants(&layers, 0);
    let (t_lo, t_hi) = descendants(&layers, n as u32);
    if s_lo == s_hi || t_lo == t_hi {
        return None;
    }
    let bottom = &layers.levels[n];
    let csr = Csr::build(bottom.len(), &bottom.edges);
    let mut dist = vec![u32::MAX; bottom.len()];
    let mut parent = vec![NONE; bottom.len()];
    let mut touched = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    for a in s_lo..s_hi {
        for &x in &touched {
            dist[x as usize] = u32::MAX;
        }
        touched.clear();
        dist[a as usize] = 0;
        touched.push(a);
        queue.push_back(a);
        while let Some(x) = queue.pop_front() {
            let d = dist[x as usize];
            if d as usize >= n {
                continue;
            }
            for &y in csr.neighbors(x) {
                if dist[y as usize] == u32::MAX {
                    dist[y as usize] = d + 1;
                    parent[y as usize] = x;
                    touched.push(y);
                    queue.push_back(y);
                }
            }
        }
        let hit = (t_lo..t_hi).find(|&b| {
            let d = dist[b as usize];
            d as usize == n || (fail_below && (d as usize) < n)
        });
        if let Some(b) = hit {
            let mut walk = vec![b];
            while *walk.last().unwrap() != a {
                walk.push(parent[*walk.last().unwrap() as usize]);
            }
            walk.reverse();
            return Some(RawWitness { layers, walk });
        }
    }
    None
}

const CHUNK: usize = 512;

/// Whether no abstract path of length `n` has depth-`n` descendants of its
/// endpoints at distance exactly `n` (at most `n` with `fail_below`).
pub fn is_n_expanding(vers: &Vers, n: usize, opts: &ExpandingOptions) -> Result<ExpansionVerdict, HyperbolicityError> {
    let mut paths = AbstractPaths::new(vers, n, &opts.paths)?;
    let rules = vers.rules().clone();
    loop {
        let chunk: Vec<RawPath> = std::iter::from_fn(|| paths.next_raw()).take(CHUNK).collect();
        if chunk.is_empty() {
            return Ok(ExpansionVerdict::Expanding);
        }
        let found = chunk
            .par_iter()
            .map(|raw| check_path(&rules, &paths, raw, n, opts.fail_below).map(|w| (raw, w)))
            .find_first(Option::is_some)
            .flatten();
        if let Some((raw, w)) = found {
            let ids: Vec<String> = w.walk.iter().map(|&v| w.layers.vertex_id(n, v)).collect();
            return Ok(ExpansionVerdict::NotExpanding(Witness {
                path: paths.publish(raw),
                source: ids[0].clone(),
                target: ids.last().unwrap().clone(),
                distance: ids.len() - 1,
                geodesic: ids,
            }));
        }
    }
}

/// Smallest `n ≤ n_max` for which the VERS is `n`-expanding.
pub fn find_expanding_constant(vers: &Vers, n_max: usize, opts: &ExpandingOptions) -> Result<Option<usize>, HyperbolicityError> {
    for n in 1..=n_max {
        if is_n_expanding(vers, n, opts)?.is_expanding() {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Re-derives a witness through the public graph API: expand the path `n`
/// times, check the walk and recompute the distance.
pub fn verify_witness(vers: &Vers, n: usize, w: &Witness) -> Result<bool, VersError> {
    let mut g = w.path.to_graph();
    for _ in 0..n {
        g = expand(vers, &g)?;
    }
    let prefix = |id: &str, root: &str| id == root || id.starts_with(&format!("{root}."));
    if !prefix(&w.source, "v0") || !prefix(&w.target, &format!("v{}", w.path.len())) {
        return Ok(false);
    }
    let adj = g.adjacency();
    let walk_ok = w.geodesic.windows(2).all(|p| {
        match (g.vertex_index(&p[0]), g.vertex_index(&p[1])) {
            (Some(a), Some(b)) => adj[a].contains(&b),
            _ => false,
        }
    });
    let d = bfs_distance(&g, &w.source, &w.target)?;
    Ok(walk_ok && w.geodesic.len() == w.distance + 1 && d == Some(w.distance))
}

/// Two horizontal and two vertical geodesics of length `size`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GeodesicSquare {
    pub size: usize,
    pub top_level: usize,
    /// Top-left, top-right, bottom-left, bottom-right.
    pub corners: [String; 4],
    pub top: Vec<String>,
    pub bottom: Vec<String>,
    pub left: Vec<String>,
    pub right: Vec<String>,
}

type Ball = HashMap<u32, (u32, u32)>;

fn ball_path(h: &HistoryTruncation, level: usize, ball: &Ball, to: u32) -> Vec<String> {
    let mut walk = vec![to];
    loop {
        let p = ball[walk.last().unwrap()].1;
        if p == NONE {
            break;
        }
        walk.push(p);
    }
    walk.reverse();
    walk.into_iter().map(|index| h.id(HVertex { level, index })).collect()
}

fn vertical_path(h: &HistoryTruncation, bottom: HVertex, n: usize) -> Vec<String> {
    let mut walk = vec![bottom];
    for _ in 0..n {
        walk.push(h.pred(*walk.last().unwrap()).unwrap());
    }
    walk.reverse();
    walk.into_iter().map(|v| h.id(v)).collect()
}

/// All geodesic `n`-squares whose levels lie in the truncation.
///
/// Horizontal distance never increases going up, so along a square every
/// intermediate pair is at horizontal distance exactly `n`; the search
/// descends from top pairs keeping only such pairs.
pub fn find_geodesic_squares(h: &HistoryTruncation, n: usize) -> Result<Vec<GeodesicSquare>, HyperbolicityError> {
    if n == 0 {
        return Err(HyperbolicityError::ZeroSize);
    }
    if h.depth() < n {
        return Err(HyperbolicityError::DepthTooSmall { depth: h.depth(), size: n });
    }
    let mut out = Vec::new();
    for k in 0..=h.depth() - n {
        let tops: Vec<(u32, u32)> = (0..h.level_size(k) as u32)
            .into_par_iter()
            .flat_map_iter(|a| {
                let ball = h.horizontal_ball(k, a, n);
                let mut bs: Vec<u32> =
                    ball.iter().filter(|(&b, &(d, _))| b > a && d as usize == n).map(|(&b, _)| b).collect();
                bs.sort_unstable();
                bs.into_iter().map(move |b| (a, b))
            })
            .collect();
        // (top pair, current pair)
        let mut frontier: Vec<((u32, u32), (u32, u32))> = tops.iter().map(|&p| (p, p)).collect();
        let mut balls: HashMap<u32, Ball> = HashMap::new();
        for j in 1..=n {
            let level = k + j;
            let sources: BTreeSet<u32> = frontier
                .iter()
                .flat_map(|&(_, (a, _))| h.children(HVertex { level: level - 1, index: a }).map(|c| c.index))
                .collect();
            balls = sources.into_par_iter().map(|s| (s, h.horizontal_ball(level, s, n))).collect();
            let mut next = Vec::new();
            for &(top, (a, b)) in &frontier {
                for ca in h.children(HVertex { level: level - 1, index: a }) {
                    let ball = &balls[&ca.index];
                    for cb in h.children(HVertex { level: level - 1, index: b }) {
                        if ball.get(&cb.index).is_some_and(|&(d, _)| d as usize == n) {
                            next.push((top, (ca.index, cb.index)));
                        }
                    }
                }
            }
            frontier = next;
            if frontier.is_empty() {
                break;
            }
        }
        let mut top_ok: HashMap<(u32, u32), bool> = HashMap::new();
        for &(top, (u, v)) in &frontier {
            let tu = HVertex { level: k, index: top.0 };
            let tv = HVertex { level: k, index: top.1 };
            let ok = *top_ok.entry(top).or_insert_with(|| h.distance_within(tu, tv, k, n) == Some(n));
            if !ok {
                continue;
            }
            let bu = HVertex { level: k + n, index: u };
            let bv = HVertex { level: k + n, index: v };
            if h.distance_within(bu, bv, k + n, n) != Some(n) {
                continue;
            }
            let top_ball = h.horizontal_ball(k, top.0, n);
            out.push(GeodesicSquare {
                size: n,
                top_level: k,
                corners: [h.id(tu), h.id(tv), h.id(bu), h.id(bv)],
                top: ball_path(h, k, &top_ball, top.1),
                bottom: ball_path(h, k + n, &balls[&u], v),
                left: vertical_path(h, bu, n),
                right: vertical_path(h, bv, n),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::document::{parse_spec, SpecBody};
    use crate::history::history;
    use crate::selfsimilar::vers_from_automaton;

    fn vers(name: &str) -> Vers {
        match parse_spec(bundled::get(name).unwrap().as_bytes()).unwrap().body {
            SpecBody::Automaton(a) => vers_from_automaton(&a).unwrap(),
            SpecBody::Ifs(f) => crate::ifs::vers_from_ifs(&f, false).unwrap().vers,
            SpecBody::Ers(e) => crate::ers::vers_from_ers(&e).unwrap(),
            SpecBody::Vers(v) => v,
        }
    }

    /// Squares by plain BFS on whole truncation graphs, one source at a time.
    fn brute_force_squares(v: &Vers, n: usize, depth: usize) -> BTreeSet<[String; 4]> {
        let mut out = BTreeSet::new();
        for k in 0..=depth - n {
            let top = history(v, k);
            let bottom = history(v, k + n);
            let (tg, bg) = (top.to_graph(), bottom.to_graph());
            let (tl, bl) = (bottom.level_graph(k), bottom.level_graph(k + n));
            let at = |g: &TypedGraph, a: &str, b: &str| g.distances_from(g.vertex_index(a).unwrap())[g.vertex_index(b).unwrap()];
            for a in bottom.vertices(k) {
                for b in bottom.vertices(k) {
                    let (ia, ib) = (bottom.id(a), bottom.id(b));
                    if a.index >= b.index || at(&tl, &ia, &ib) != Some(n) || at(&tg, &ia, &ib) != Some(n) {
                        continue;
                    }
                    for u in bottom.vertices(k + n).filter(|&u| bottom.ancestor(u, n) == a) {
                        for w in bottom.vertices(k + n).filter(|&w| bottom.ancestor(w, n) == b) {
                            let (iu, iw) = (bottom.id(u), bottom.id(w));
                            if at(&bl, &iu, &iw) == Some(n) && at(&bg, &iu, &iw) == Some(n) {
                                out.insert([ia.clone(), ib.clone(), iu, iw]);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn squares_match_brute_force() {
        for (name, depth) in [("odometer-automaton", 6), ("basilica-automaton", 5), ("sierpinski-ifs", 4), ("basilica-ers", 3)] {
            let v = vers(name);
            let h = history(&v, depth);
            for n in 1..=2 {
                let found: BTreeSet<[String; 4]> = find_geodesic_squares(&h, n).unwrap().into_iter().map(|s| s.corners).collect();
                assert_eq!(found, brute_force_squares(&v, n, depth), "{name}, n = {n}");
            }
        }
    }

    #[test]
    fn odometer_has_only_unit_squares() {
        let h = history(&vers("odometer-automaton"), 8);
        assert_eq!(find_geodesic_squares(&h, 1).unwrap().len(), 254);
        for n in 2..=4 {
            assert!(find_geodesic_squares(&h, n).unwrap().is_empty(), "n = {n}");
        }
    }

    #[test]
    fn square_paths_have_the_right_shape() {
        let h = history(&vers("basilica-automaton"), 5);
        for s in find_geodesic_squares(&h, 2).unwrap() {
            for side in [&s.top, &s.bottom, &s.left, &s.right] {
                assert_eq!(side.len(), 3);
            }
            assert_eq!((s.top[0].as_str(), s.top[2].as_str()), (s.corners[0].as_str(), s.corners[1].as_str()));
            assert_eq!((s.bottom[0].as_str(), s.bottom[2].as_str()), (s.corners[2].as_str(), s.corners[3].as_str()));
        }
        assert!(matches!(find_geodesic_squares(&h, 0), Err(HyperbolicityError::ZeroSize)));
        assert!(matches!(find_geodesic_squares(&h, 6), Err(HyperbolicityError::DepthTooSmall { .. })));
    }

    #[test]
    fn enumeration_counts_kappa_consistent_sequences() {
        let v = vers("sierpinski-ifs");
        let kappa = v.kappa();
        let colors: Vec<&str> = v.colors().iter().map(String::as_str).collect();
        for n in 1..=3 {
            // Every sequence of (color, orientation) whose types chain up.
            let mut count = 0;
            let total = (2 * colors.len()).pow(n as u32);
            for code in 0..total {
                let mut rest = code;
                let mut prev: Option<&str> = None;
                let mut ok = true;
                for _ in 0..n {
                    let (c, back) = (colors[(rest % (2 * colors.len())) / 2], rest % 2 == 1);
                    rest /= 2 * colors.len();
                    let (a, b) = kappa.get(c).unwrap();
                    let (p, q) = if back { (b, a) } else { (a, b) };
                    if prev.is_some_and(|t| t != p) {
                        ok = false;
                        break;
                    }
                    prev = Some(q);
                }
                count += ok as usize;
            }
            let paths: Vec<AbstractPath> = enumerate_abstract_paths(&v, n, &PathOptions::default()).unwrap().collect();
            assert_eq!(paths.len(), count, "n = {n}");
            let distinct: BTreeSet<(Vec<String>, Vec<Orientation>)> =
                paths.iter().map(|p| (p.colors.clone(), p.orientations.clone())).collect();
            assert_eq!(distinct.len(), count);
            let dedup = PathOptions { dedup_reversal: true, ..PathOptions::default() };
            let halved = enumerate_abstract_paths(&v, n, &dedup).unwrap().count();
            assert!(2 * halved >= count && halved < count, "n = {n}: {halved} of {count}");
        }
    }

    /// Two-edge corners seen in `Γ_0 … Γ_m`.
    fn observed_corners(v: &Vers, m: usize) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut g = crate::expansion::gamma(v, 0);
        for level in 0..=m {
            if level > 0 {
                g = expand(v, &g).unwrap();
            }
            for (i, x) in g.vertices().iter().enumerate() {
                let mut star: Vec<String> = g
                    .edges()
                    .iter()
                    .filter_map(|e| match (e.from == i, e.to == i) {
                        (true, true) => Some(format!("{}@", e.color)),
                        (true, false) => Some(format!("{}>", e.color)),
                        (false, true) => Some(format!(">{}", e.color)),
                        (false, false) => None,
                    })
                    .collect();
                star.sort();
                for a in 0..star.len() {
                    for b in a + 1..star.len() {
                        out.insert(format!("{}: {} {}", x.ty, star[a], star[b]));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn corner_closure_matches_observed_corners() {
        for name in ["basilica-automaton", "odometer-automaton", "sierpinski-ifs", "basilica-ers"] {
            let v = vers(name);
            let observed = observed_corners(&v, 5);
            let closure = realized_corners(&v);
            assert!(observed.is_subset(&closure), "{name}: {:?}", observed.difference(&closure).collect::<Vec<_>>());
            assert_eq!(observed, closure, "{name}");
        }
    }

    #[test]
    fn basilica_ers_expands_only_along_realizable_paths() {
        let v = vers("basilica-ers");
        let plain = ExpandingOptions::default();
        let w = is_n_expanding(&v, 4, &plain).unwrap();
        let w = w.witness().expect("a barycenter with two ι-halves never separates");
        assert!(verify_witness(&v, 4, w).unwrap());
        let realizable = ExpandingOptions { paths: PathOptions { realizable: true, ..PathOptions::default() }, ..plain };
        assert_eq!(find_expanding_constant(&v, 8, &realizable).unwrap(), Some(3));
    }

    #[test]
    fn grigorchuk_is_not_expanding_even_along_realizable_paths() {
        let v = vers("grigorchuk-automaton");
        let opts = ExpandingOptions { paths: PathOptions { realizable: true, ..PathOptions::default() }, ..ExpandingOptions::default() };
        for n in 1..=3 {
            let verdict = is_n_expanding(&v, n, &opts).unwrap();
            assert!(verify_witness(&v, n, verdict.witness().expect("not expanding")).unwrap());
        }
        assert!(matches!(
            is_n_expanding(&v, 1, &ExpandingOptions { paths: PathOptions { colors: Some(vec!["z".into()]), ..PathOptions::default() }, ..opts }),
            Err(HyperbolicityError::UnknownColor(_))
        ));
    }
}
