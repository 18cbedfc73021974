//! Finite colored and typed multigraphs.
//!
//! Vertices and edges are addressed by canonical string ids. Loops and
//! parallel edges are allowed; walks ignore edge orientation.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Type assigned to original vertices by [`barycentric_subdivision`].
pub const VTYPE: &str = "vtype";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("duplicate vertex id {0:?}")]
    DuplicateVertex(String),
    #[error("duplicate edge id {0:?}")]
    DuplicateEdge(String),
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("edge {edge:?} has color {color:?}, which has no kappa entry")]
    UnknownColor { edge: String, color: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub id: String,
    pub ty: String,
}

/// A directed colored edge; `from`/`to` index into [`TypedGraph::vertices`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub color: String,
}

#[derive(Debug, Clone, Default)]
pub struct TypedGraph {
    vertices: Vec<Vertex>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    edge_ids: HashSet<String>,
}

impl TypedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, id: impl Into<String>, ty: impl Into<String>) -> Result<usize, GraphError> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(GraphError::DuplicateVertex(id));
        }
        let idx = self.vertices.len();
        self.index.insert(id.clone(), idx);
        self.vertices.push(Vertex { id, ty: ty.into() });
        Ok(idx)
    }

    /// Adds an edge between vertex indices.
    pub fn add_edge_at(
        &mut self,
        id: impl Into<String>,
        from: usize,
        to: usize,
        color: impl Into<String>,
    ) -> Result<usize, GraphError> {
        let id = id.into();
        for end in [from, to] {
            if end >= self.vertices.len() {
                return Err(GraphError::UnknownVertex(format!("#{end}")));
            }
        }
        if !self.edge_ids.insert(id.clone()) {
            return Err(GraphError::DuplicateEdge(id));
        }
        self.edges.push(Edge { id, from, to, color: color.into() });
        Ok(self.edges.len() - 1)
    }

    pub fn add_edge(
        &mut self,
        id: impl Into<String>,
        from: &str,
        to: &str,
        color: impl Into<String>,
    ) -> Result<usize, GraphError> {
        let f = self.require(from)?;
        let t = self.require(to)?;
        self.add_edge_at(id, f, t, color)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains_vertex(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn vertex_type(&self, id: &str) -> Option<&str> {
        self.vertex_index(id).map(|i| self.vertices[i].ty.as_str())
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        // Linear scan; edge lookup by id is rare outside tests.
        self.edges.iter().find(|e| e.id == id)
    }

    /// Endpoint ids of edge `e`.
    pub fn endpoints(&self, e: &Edge) -> (&str, &str) {
        (&self.vertices[e.from].id, &self.vertices[e.to].id)
    }

    fn require(&self, id: &str) -> Result<usize, GraphError> {
        self.vertex_index(id).ok_or_else(|| GraphError::UnknownVertex(id.to_string()))
    }

    /// Undirected adjacency lists; a loop contributes its vertex once.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            adj[e.from].push(e.to);
            if e.from != e.to {
                adj[e.to].push(e.from);
            }
        }
        adj
    }

    /// Undirected BFS distances from `src`; `None` marks unreachable vertices.
    pub fn distances_from(&self, src: usize) -> Vec<Option<usize>> {
        bfs_all(&self.adjacency(), src)
    }

    /// Sorted `(from, to, color)` triples, the edge multiset up to edge ids.
    pub fn edge_triples(&self) -> Vec<(&str, &str, &str)> {
        let mut t: Vec<_> = self
            .edges
            .iter()
            .map(|e| (self.vertices[e.from].id.as_str(), self.vertices[e.to].id.as_str(), e.color.as_str()))
            .collect();
        t.sort_unstable();
        t
    }

    /// Colors in first-use order.
    pub fn colors(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.edges.iter().map(|e| e.color.as_str()).filter(|c| seen.insert(*c)).collect()
    }
}

/// A vertex in a graph document: a bare id, or an id with a type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexDoc {
    Id(String),
    Typed {
        id: String,
        #[serde(rename = "type")]
        ty: String,
    },
}

impl VertexDoc {
    pub fn id(&self) -> &str {
        match self {
            VertexDoc::Id(id) | VertexDoc::Typed { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub id: String,
    pub from: String,
    pub to: String,
    pub color: String,
}

/// JSON form of a [`TypedGraph`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    #[serde(default)]
    pub vertices: Vec<VertexDoc>,
    #[serde(default)]
    pub edges: Vec<EdgeDoc>,
}

impl TypedGraph {
    /// Untyped vertices get `default_type`.
    pub fn from_document(doc: &GraphDocument, default_type: &str) -> Result<Self, GraphError> {
        let mut g = TypedGraph::new();
        for v in &doc.vertices {
            match v {
                VertexDoc::Id(id) => g.add_vertex(id.clone(), default_type)?,
                VertexDoc::Typed { id, ty } => g.add_vertex(id.clone(), ty.clone())?,
            };
        }
        for e in &doc.edges {
            g.add_edge(e.id.clone(), &e.from, &e.to, e.color.clone())?;
        }
        Ok(g)
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            vertices: self.vertices.iter().map(|v| VertexDoc::Typed { id: v.id.clone(), ty: v.ty.clone() }).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    id: e.id.clone(),
                    from: self.vertices[e.from].id.clone(),
                    to: self.vertices[e.to].id.clone(),
                    color: e.color.clone(),
                })
                .collect(),
        }
    }
}

pub(crate) fn bfs_all(adj: &[Vec<usize>], src: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    let mut queue = VecDeque::new();
    dist[src] = Some(0);
    queue.push_back(src);
    while let Some(x) = queue.pop_front() {
        let d = dist[x].unwrap() + 1;
        for &y in &adj[x] {
            if dist[y].is_none() {
                dist[y] = Some(d);
                queue.push_back(y);
            }
        }
    }
    dist
}

/// Color to endpoint-type map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KappaMap {
    entries: BTreeMap<String, (String, String)>,
}

impl KappaMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, color: impl Into<String>, from: impl Into<String>, to: impl Into<String>) {
        self.entries.insert(color.into(), (from.into(), to.into()));
    }

    pub fn get(&self, color: &str) -> Option<(&str, &str)> {
        self.entries.get(color).map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn contains(&self, color: &str) -> bool {
        self.entries.contains_key(color)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, (&str, &str))> {
        self.entries.iter().map(|(c, (a, b))| (c.as_str(), (a.as_str(), b.as_str())))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<C: Into<String>, A: Into<String>, B: Into<String>> FromIterator<(C, A, B)> for KappaMap {
    fn from_iter<I: IntoIterator<Item = (C, A, B)>>(iter: I) -> Self {
        let mut k = KappaMap::new();
        for (c, a, b) in iter {
            k.insert(c, a, b);
        }
        k
    }
}

/// Outcome of [`validate_kappa_compatible`]: the ids of offending edges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KappaReport {
    pub violations: Vec<String>,
}

impl KappaReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for KappaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            write!(f, "ok")
        } else {
            write!(f, "kappa violations on edges: {}", self.violations.join(", "))
        }
    }
}

pub fn validate_kappa_compatible(g: &TypedGraph, kappa: &KappaMap) -> Result<KappaReport, GraphError> {
    let mut report = KappaReport::default();
    for e in g.edges() {
        let (k1, k2) = kappa.get(&e.color).ok_or_else(|| GraphError::UnknownColor {
            edge: e.id.clone(),
            color: e.color.clone(),
        })?;
        if g.vertices[e.from].ty != k1 || g.vertices[e.to].ty != k2 {
            report.violations.push(e.id.clone());
        }
    }
    Ok(report)
}

/// Length of a shortest undirected walk, `None` across components.
pub fn bfs_distance(g: &TypedGraph, u: &str, v: &str) -> Result<Option<usize>, GraphError> {
    let s = g.require(u)?;
    let t = g.require(v)?;
    if s == t {
        return Ok(Some(0));
    }
    Ok(g.distances_from(s)[t])
}

/// Labeled equality: vertex ids with types, plus the `(from, to, color)` multiset.
pub fn graph_equal(g1: &TypedGraph, g2: &TypedGraph) -> bool {
    if g1.vertex_count() != g2.vertex_count() || g1.edge_count() != g2.edge_count() {
        return false;
    }
    let types_match = g1.vertices().iter().all(|v| g2.vertex_type(&v.id) == Some(v.ty.as_str()));
    types_match && g1.edge_triples() == g2.edge_triples()
}

/// Color of the half of a `c`-colored edge next to its origin.
pub fn iota_color(c: &str) -> String {
    format!("{c}_i")
}

/// Color of the half of a `c`-colored edge next to its terminus.
pub fn tau_color(c: &str) -> String {
    format!("{c}_t")
}

/// Splits every edge at a midpoint vertex named after the edge.
///
/// Original vertices get type [`VTYPE`]; a midpoint gets its edge's color as
/// type. A midpoint id equal to an existing vertex id is primed (`'`) until
/// unique.
pub fn barycentric_subdivision(g: &TypedGraph) -> TypedGraph {
    let mut out = TypedGraph::new();
    for v in g.vertices() {
        out.add_vertex(v.id.clone(), VTYPE).expect("source ids are unique");
    }
    for e in g.edges() {
        let mut id = e.id.clone();
        while out.contains_vertex(&id) {
            id.push('\'');
        }
        let mid = out.add_vertex(id, e.color.clone()).expect("primed until unique");
        out.add_edge_at(format!("{}/i", e.id), e.from, mid, iota_color(&e.color))
            .expect("distinct source edge ids give distinct halves");
        out.add_edge_at(format!("{}/t", e.id), mid, e.to, tau_color(&e.color))
            .expect("distinct source edge ids give distinct halves");
    }
    out
}

/// The kappa map under which [`barycentric_subdivision`] output is compatible.
pub fn subdivision_kappa<'a>(colors: impl IntoIterator<Item = &'a str>) -> KappaMap {
    let mut k = KappaMap::new();
    for c in colors {
        k.insert(iota_color(c), VTYPE, c);
        k.insert(tau_color(c), c, VTYPE);
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> TypedGraph {
        let mut g = TypedGraph::new();
        for v in ["a", "b", "c"] {
            g.add_vertex(v, "x").unwrap();
        }
        g.add_edge("e1", "a", "b", "c").unwrap();
        g.add_edge("e2", "c", "b", "c").unwrap();
        g
    }

    #[test]
    fn loop_on_matching_type_is_compatible() {
        let mut g = TypedGraph::new();
        g.add_vertex("u", "s").unwrap();
        g.add_edge("l", "u", "u", "c").unwrap();
        let k: KappaMap = [("c", "s", "s")].into_iter().collect();
        assert!(validate_kappa_compatible(&g, &k).unwrap().is_ok());
    }

    #[test]
    fn swapped_types_are_reported() {
        let mut g = TypedGraph::new();
        g.add_vertex("u", "a").unwrap();
        g.add_vertex("v", "b").unwrap();
        g.add_edge("e", "u", "v", "c").unwrap();
        let k: KappaMap = [("c", "b", "a")].into_iter().collect();
        assert_eq!(validate_kappa_compatible(&g, &k).unwrap().violations, vec!["e".to_string()]);
    }

    #[test]
    fn missing_kappa_entry_is_an_error() {
        let g = path3();
        let err = validate_kappa_compatible(&g, &KappaMap::new()).unwrap_err();
        assert!(matches!(err, GraphError::UnknownColor { .. }));
    }

    #[test]
    fn distances() {
        let mut g = path3();
        assert_eq!(bfs_distance(&g, "a", "a").unwrap(), Some(0));
        assert_eq!(bfs_distance(&g, "a", "c").unwrap(), Some(2));
        g.add_vertex("z", "x").unwrap();
        assert_eq!(bfs_distance(&g, "a", "z").unwrap(), None);
        assert!(matches!(bfs_distance(&g, "a", "q"), Err(GraphError::UnknownVertex(_))));
    }

    #[test]
    fn duplicates_are_rejected() {
        let mut g = path3();
        assert!(matches!(g.add_vertex("a", "x"), Err(GraphError::DuplicateVertex(_))));
        assert!(matches!(g.add_edge("e1", "a", "c", "c"), Err(GraphError::DuplicateEdge(_))));
    }

    #[test]
    fn equality_counts_parallel_edges() {
        let g = path3();
        assert!(graph_equal(&g, &g.clone()));
        let mut h = g.clone();
        h.add_edge("e3", "a", "b", "c").unwrap();
        assert!(!graph_equal(&g, &h));
        let mut t = TypedGraph::new();
        for v in ["a", "b", "c"] {
            t.add_vertex(v, "y").unwrap();
        }
        t.add_edge("x1", "a", "b", "c").unwrap();
        t.add_edge("x2", "c", "b", "c").unwrap();
        assert!(!graph_equal(&g, &t));
    }

    #[test]
    fn subdivision_of_single_edge() {
        let mut g = TypedGraph::new();
        g.add_vertex("u", "any").unwrap();
        g.add_vertex("v", "any").unwrap();
        g.add_edge("e", "u", "v", "c").unwrap();
        let b = barycentric_subdivision(&g);
        assert_eq!(b.vertex_count(), 3);
        assert_eq!(b.vertex_type("e"), Some("c"));
        assert_eq!(b.vertex_type("u"), Some(VTYPE));
        assert_eq!(b.edge_triples(), vec![("e", "v", "c_t"), ("u", "e", "c_i")]);
        assert!(barycentric_subdivision(&TypedGraph::new()).is_empty());
    }

    #[test]
    fn subdivision_primes_colliding_midpoints() {
        let mut g = TypedGraph::new();
        g.add_vertex("x", "").unwrap();
        g.add_edge("x", "x", "x", "c").unwrap();
        let b = barycentric_subdivision(&g);
        assert_eq!(b.vertex_type("x'"), Some("c"));
        assert_eq!(b.vertex_type("x"), Some(VTYPE));
    }

    #[test]
    fn document_round_trip() {
        let g = path3();
        let json = serde_json::to_string(&g.to_document()).unwrap();
        let back = TypedGraph::from_document(&serde_json::from_str(&json).unwrap(), "other").unwrap();
        assert!(graph_equal(&g, &back));
        let bare: GraphDocument = serde_json::from_str(r#"{"vertices":["u"],"edges":[]}"#).unwrap();
        assert_eq!(TypedGraph::from_document(&bare, VTYPE).unwrap().vertex_type("u"), Some(VTYPE));
    }

}
