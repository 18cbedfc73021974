//! Level-by-level expansion of κ-compatible graphs.
//!
//! The engine stores each level with integer indices. Children of a vertex
//! are contiguous and ordered by letter declaration order, and parents are
//! laid out in order, so the descendants of any contiguous block form a
//! contiguous block.

use std::sync::Arc;

use rayon::prelude::*;

use crate::graph::{validate_kappa_compatible, TypedGraph};
use crate::vers::{child_id, Rules, Vers, VersError, Word};

pub(crate) const NONE: u32 = u32::MAX;
const PAR_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LevelEdge {
    pub from: u32,
    pub to: u32,
    pub color: u16,
    /// Index of the spanning lift in the previous level (seed edge index at level 0).
    pub parent: u32,
    /// Index of the producing replacement edge within its replacement graph.
    pub rep: u16,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Level {
    pub parent: Vec<u32>,
    pub letter: Vec<u16>,
    pub ty: Vec<u16>,
    /// `child_start[v]..child_start[v + 1]` are the children of `v`; filled
    /// once the next level exists.
    pub child_start: Vec<u32>,
    pub edges: Vec<LevelEdge>,
}

impl Level {
    pub fn len(&self) -> usize {
        self.ty.len()
    }
}

/// Compressed undirected adjacency of one level; loops appear once and
/// parallel edges are merged.
#[derive(Debug, Clone, Default)]
pub(crate) struct Csr {
    start: Vec<u32>,
    nbr: Vec<u32>,
}

impl Csr {
    pub fn build(n: usize, edges: &[LevelEdge]) -> Csr {
        let mut deg = vec![0u32; n + 1];
        for e in edges {
            deg[e.from as usize] += 1;
            if e.from != e.to {
                deg[e.to as usize] += 1;
            }
        }
        let mut start = vec![0u32; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + deg[i];
        }
        let mut fill = start.clone();
        let mut nbr = vec![0u32; start[n] as usize];
        for e in edges {
            nbr[fill[e.from as usize] as usize] = e.to;
            fill[e.from as usize] += 1;
            if e.from != e.to {
                nbr[fill[e.to as usize] as usize] = e.from;
                fill[e.to as usize] += 1;
            }
        }
        // Dedup each row in place, compacting into a fresh layout.
        let mut out_start = Vec::with_capacity(n + 1);
        let mut out = Vec::with_capacity(nbr.len());
        out_start.push(0);
        for i in 0..n {
            let row = &mut nbr[start[i] as usize..start[i + 1] as usize];
            row.sort_unstable();
            let mut last = NONE;
            for &y in row.iter() {
                if y != last {
                    out.push(y);
                    last = y;
                }
            }
            out_start.push(out.len() as u32);
        }
        Csr { start: out_start, nbr: out }
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.nbr[self.start[v as usize] as usize..self.start[v as usize + 1] as usize]
    }
}

fn expand_edge<'a>(rules: &'a Rules, prev: &'a Level, j: usize, e: &'a LevelEdge) -> impl Iterator<Item = LevelEdge> + 'a {
    rules.reps[e.color as usize].iter().enumerate().map(move |(k, r)| {
        let a = if r.from_t { e.to } else { e.from };
        let b = if r.to_t { e.to } else { e.from };
        LevelEdge {
            from: prev.child_start[a as usize] + rules.letter_offset[r.from_letter as usize] as u32,
            to: prev.child_start[b as usize] + rules.letter_offset[r.to_letter as usize] as u32,
            color: r.color,
            parent: j as u32,
            rep: k as u16,
        }
    })
}

/// Seed graph plus its successive expansions.
#[derive(Debug, Clone)]
pub(crate) struct Layers {
    pub rules: Arc<Rules>,
    pub seed_names: Vec<String>,
    pub seed_edge_ids: Vec<String>,
    pub levels: Vec<Level>,
}

impl Layers {
    /// Γ₀: the base bouquet at ε.
    pub fn from_base(rules: Arc<Rules>) -> Layers {
        let edges = rules
            .base
            .iter()
            .enumerate()
            .map(|(k, &c)| LevelEdge { from: 0, to: 0, color: c, parent: k as u32, rep: 0 })
            .collect();
        let level = Level { parent: vec![NONE], letter: vec![u16::MAX], ty: vec![rules.start], child_start: Vec::new(), edges };
        let ids = (0..rules.base.len()).map(|k| format!("b{k}")).collect();
        Layers { rules, seed_names: vec![String::new()], seed_edge_ids: ids, levels: vec![level] }
    }

    /// Seeds with an arbitrary graph, checking types and κ-compatibility.
    pub fn from_graph(vers: &Vers, g: &TypedGraph) -> Result<Layers, VersError> {
        let rules = vers.rules().clone();
        let report = validate_kappa_compatible(g, &vers.kappa())?;
        if !report.is_ok() {
            return Err(VersError::NotKappaCompatible(report));
        }
        let mut ty = Vec::with_capacity(g.vertex_count());
        for v in g.vertices() {
            let t = rules
                .type_index
                .get(&v.ty)
                .ok_or_else(|| VersError::UnknownType { vertex: v.id.clone(), ty: v.ty.clone() })?;
            ty.push(*t);
        }
        let edges = g
            .edges()
            .iter()
            .enumerate()
            .map(|(k, e)| LevelEdge {
                from: e.from as u32,
                to: e.to as u32,
                color: rules.color_index[&e.color],
                parent: k as u32,
                rep: 0,
            })
            .collect();
        let n = g.vertex_count();
        let level = Level { parent: vec![NONE; n], letter: vec![u16::MAX; n], ty, child_start: Vec::new(), edges };
        Ok(Layers {
            rules,
            seed_names: g.vertices().iter().map(|v| v.id.clone()).collect(),
            seed_edge_ids: g.edges().iter().map(|e| e.id.clone()).collect(),
            levels: vec![level],
        })
    }

    /// Seeds with an abstract graph given by types and `(from, to, color)` edges.
    pub fn from_parts(rules: Arc<Rules>, names: Vec<String>, ty: Vec<u16>, edges: &[(u32, u32, u16)]) -> Layers {
        let n = ty.len();
        let edges: Vec<LevelEdge> = edges
            .iter()
            .enumerate()
            .map(|(k, &(from, to, color))| LevelEdge { from, to, color, parent: k as u32, rep: 0 })
            .collect();
        let ids = (0..edges.len()).map(|k| format!("e{k}")).collect();
        let level = Level { parent: vec![NONE; n], letter: vec![u16::MAX; n], ty, child_start: Vec::new(), edges };
        Layers { rules, seed_names: names, seed_edge_ids: ids, levels: vec![level] }
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// Appends the expansion of the deepest level.
    pub fn grow(&mut self) {
        let rules = self.rules.clone();
        let prev = self.levels.last_mut().expect("at least the seed level");
        let n = prev.len();
        let mut child_start = Vec::with_capacity(n + 1);
        let mut next = Level::default();
        let mut count = 0u32;
        for v in 0..n {
            child_start.push(count);
            for &x in &rules.out_letters[prev.ty[v] as usize] {
                next.parent.push(v as u32);
                next.letter.push(x);
                next.ty.push(rules.letter_to[x as usize]);
                count += 1;
            }
        }
        child_start.push(count);
        prev.child_start = child_start;
        let prev = &*prev;
        next.edges = if prev.edges.len() >= PAR_THRESHOLD {
            prev.edges.par_iter().enumerate().flat_map_iter(|(j, e)| expand_edge(&rules, prev, j, e)).collect()
        } else {
            prev.edges.iter().enumerate().flat_map(|(j, e)| expand_edge(&rules, prev, j, e)).collect()
        };
        self.levels.push(next);
    }

    pub fn grow_to(&mut self, depth: usize) {
        while self.depth() < depth {
            self.grow();
        }
    }

    /// Child of `v` (at `level`) along `letter`, when the letter leaves `v`'s type.
    pub fn child(&self, level: usize, v: u32, letter: u16) -> Option<u32> {
        let lv = &self.levels[level];
        if self.rules.letter_from[letter as usize] != lv.ty[v as usize] || lv.child_start.is_empty() {
            return None;
        }
        Some(lv.child_start[v as usize] + self.rules.letter_offset[letter as usize] as u32)
    }

    pub fn children(&self, level: usize, v: u32) -> std::ops::Range<u32> {
        let cs = &self.levels[level].child_start;
        if cs.is_empty() {
            0..0
        } else {
            cs[v as usize]..cs[v as usize + 1]
        }
    }

    /// Seed vertex and letters (base-level-first) of a vertex.
    pub fn lineage(&self, level: usize, v: u32) -> (u32, Vec<u16>) {
        let mut letters = Vec::with_capacity(level);
        let mut cur = v;
        for l in (1..=level).rev() {
            letters.push(self.levels[l].letter[cur as usize]);
            cur = self.levels[l].parent[cur as usize];
        }
        letters.reverse();
        (cur, letters)
    }

    pub fn vertex_id(&self, level: usize, v: u32) -> String {
        let (seed, letters) = self.lineage(level, v);
        let mut id = self.seed_names[seed as usize].clone();
        for x in letters {
            id = child_id(&id, &self.rules.letter_names[x as usize]);
        }
        id
    }

    /// Letters only; meaningful for single-root layers such as Γₙ.
    pub fn word(&self, level: usize, v: u32) -> Word {
        let (_, letters) = self.lineage(level, v);
        Word(letters.into_iter().map(|x| self.rules.letter_names[x as usize].clone()).collect())
    }

    /// Seed edge index and replacement indices, oldest first.
    pub fn provenance(&self, level: usize, e: u32) -> (u32, Vec<u16>) {
        let mut reps = Vec::with_capacity(level);
        let mut cur = e;
        for l in (1..=level).rev() {
            let edge = &self.levels[l].edges[cur as usize];
            reps.push(edge.rep);
            cur = edge.parent;
        }
        reps.reverse();
        (self.levels[0].edges[cur as usize].parent, reps)
    }

    pub fn edge_id(&self, level: usize, e: u32) -> String {
        let (seed, reps) = self.provenance(level, e);
        let mut id = self.seed_edge_ids[seed as usize].clone();
        for r in reps {
            id.push('/');
            id.push_str(&r.to_string());
        }
        id
    }

    pub fn type_name(&self, level: usize, v: u32) -> &str {
        &self.rules.type_names[self.levels[level].ty[v as usize] as usize]
    }

    pub fn color_name(&self, c: u16) -> &str {
        &self.rules.color_names[c as usize]
    }

    pub fn to_graph(&self, level: usize) -> TypedGraph {
        let lv = &self.levels[level];
        let mut g = TypedGraph::new();
        for v in 0..lv.len() as u32 {
            g.add_vertex(self.vertex_id(level, v), self.type_name(level, v)).expect("word ids are unique");
        }
        for (k, e) in lv.edges.iter().enumerate() {
            g.add_edge_at(self.edge_id(level, k as u32), e.from as usize, e.to as usize, self.color_name(e.color))
                .expect("provenance ids are unique");
        }
        g
    }

    /// Vertex at `word` below the single root of a Γ-style layer stack.
    pub fn find(&self, word: &Word) -> Option<(usize, u32)> {
        if word.len() > self.depth() || self.levels[0].len() != 1 {
            return None;
        }
        let mut cur = 0u32;
        for (l, name) in word.letters().iter().enumerate() {
            let x = *self.rules.letter_index.get(name)?;
            cur = self.child(l, cur, x)?;
        }
        Some((word.len(), cur))
    }
}

/// Expands a κ-compatible graph once.
///
/// The child of vertex `u` along letter `x` is named `u.x` (just `x` when
/// `u` is the empty id); the `k`-th edge produced from edge `e` of `g` is
/// named `e/k`.
pub fn expand(vers: &Vers, g: &TypedGraph) -> Result<TypedGraph, VersError> {
    let mut layers = Layers::from_graph(vers, g)?;
    layers.grow();
    Ok(layers.to_graph(1))
}

/// Γₙ, with vertex ids the word ids of L_n and edge ids `b{k}/r₁/…/rₙ`.
pub fn gamma(vers: &Vers, n: usize) -> TypedGraph {
    let mut layers = Layers::from_base(vers.rules().clone());
    layers.grow_to(n);
    layers.to_graph(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vers::{Marker, ReplacementGraph, Shift, Slot, VersDefinition};

    /// Full binary shift; one color whose replacement joins 0·i to 1·t.
    fn binary() -> Vers {
        let mut sigma = Shift::new("s");
        sigma.add_letter("0", "s", "s");
        sigma.add_letter("1", "s", "s");
        let mut rep = ReplacementGraph::default();
        rep.push(Slot::new("0", Marker::I), Slot::new("1", Marker::T), "c");
        rep.push(Slot::new("1", Marker::I), Slot::new("1", Marker::I), "c");
        Vers::new(VersDefinition {
            sigma,
            colors: vec!["c".into()],
            kappa: [("c".into(), ("s".into(), "s".into()))].into(),
            replacements: [("c".into(), rep)].into(),
            base: vec!["c".into()],
        })
        .unwrap()
    }

    #[test]
    fn gamma_zero_is_bouquet() {
        let g = gamma(&binary(), 0);
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edge_triples(), vec![("", "", "c")]);
        assert_eq!(g.edges()[0].id, "b0");
    }

    #[test]
    fn gamma_levels() {
        let v = binary();
        let g1 = gamma(&v, 1);
        assert_eq!(g1.edge_triples(), vec![("0", "1", "c"), ("1", "1", "c")]);
        let g2 = gamma(&v, 2);
        assert_eq!(g2.vertex_count(), 4);
        // 0→1 expands to 0.0→1.1 and 0.1→0.1; the loop at 1 to 1.0→1.1 and 1.1 loop.
        assert_eq!(
            g2.edge_triples(),
            vec![("0.0", "1.1", "c"), ("0.1", "0.1", "c"), ("1.0", "1.1", "c"), ("1.1", "1.1", "c")]
        );
        let ids: Vec<_> = g2.edges().iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["b0/0/0", "b0/0/1", "b0/1/0", "b0/1/1"]);
    }

    #[test]
    fn expand_names_children_after_parents() {
        let v = binary();
        let g = expand(&v, &gamma(&v, 1)).unwrap();
        assert!(crate::graph::graph_equal(&g, &gamma(&v, 2)));
        assert!(expand(&v, &TypedGraph::new()).unwrap().is_empty());
    }

    #[test]
    fn expand_rejects_incompatible_input() {
        let v = binary();
        let mut g = TypedGraph::new();
        g.add_vertex("u", "zz").unwrap();
        assert!(matches!(expand(&v, &g), Err(VersError::UnknownType { .. })));
    }

    #[test]
    fn find_and_word_agree() {
        let v = binary();
        let mut l = Layers::from_base(v.rules().clone());
        l.grow_to(3);
        for idx in 0..l.levels[3].len() as u32 {
            let w = l.word(3, idx);
            assert_eq!(l.find(&w), Some((3, idx)));
        }
        assert_eq!(l.find(&Word::parse_id("0.2")), None);
    }

    #[test]
    fn csr_merges_parallel_edges() {
        let e = |from, to| LevelEdge { from, to, color: 0, parent: 0, rep: 0 };
        let c = Csr::build(3, &[e(0, 1), e(1, 0), e(2, 2)]);
        assert_eq!(c.neighbors(0), [1]);
        assert_eq!(c.neighbors(1), [0]);
        assert_eq!(c.neighbors(2), [2]);
    }
}
