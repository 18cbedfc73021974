//! Edge replacement systems and their vertex-and-edge replacement form.
//!
//! `E₁` is the base graph; `E_{k+1}` replaces every `c`-colored edge by a
//! copy of `X_c` glued at `ι_c`, `τ_c`. Edge ids of `E_k` are words of `k`
//! letters joined by `.`, base edge first. The same letter ids name the
//! Σ-edges of [`vers_from_ers`], so `Γ_n` and the subdivided `E_n` share
//! vertex ids once original vertices are padded with `V`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{iota_color, tau_color, GraphDocument, GraphError, TypedGraph, VTYPE};
use crate::ifs::BASE_COLOR;
use crate::vers::{Marker, ReplacementGraph, Shift, Slot, Vers, VersDefinition, VersError, WORD_SEPARATOR};

/// Σ-vertex of the base bouquet.
pub const ERS_START: &str = "s";
/// The loop at [`VTYPE`] that carries original vertices down the tree.
pub const PERSIST_LETTER: &str = "V";

const SEP: &str = ".";

#[derive(Debug, Error)]
pub enum ErsError {
    #[error("invalid ERS: {0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("word {word} is not an edge of E_{depth}")]
    NotInLanguage { word: String, depth: usize },
    #[error("words must have equal length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Vers(#[from] VersError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErsReplacement {
    pub graph: GraphDocument,
    pub iota: String,
    pub tau: String,
}

/// Unvalidated ERS, mirroring the JSON document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErsDefinition {
    pub colors: Vec<String>,
    pub base: GraphDocument,
    pub replacements: BTreeMap<String, ErsReplacement>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Kind {
    Edge,
    Vertex,
}

/// Where a Σ-letter comes from: `None` is the base graph.
type Item = (Option<usize>, Kind, String);

#[derive(Debug, Clone)]
struct Rep {
    graph: TypedGraph,
    iota: usize,
    tau: usize,
}

/// A structurally valid ERS with its Σ-letter names.
#[derive(Debug, Clone)]
pub struct Ers {
    def: ErsDefinition,
    color_index: HashMap<String, usize>,
    base: TypedGraph,
    reps: Vec<Rep>,
    letter_of: HashMap<Item, String>,
    item_of: HashMap<String, Item>,
}

fn bad(msg: impl Into<String>) -> ErsError {
    ErsError::Invalid(msg.into())
}

fn check_name(what: &str, name: &str) -> Result<(), ErsError> {
    if name.is_empty() || name.contains(WORD_SEPARATOR) {
        return Err(bad(format!("{what} {name:?} must be non-empty and free of '{WORD_SEPARATOR}'")));
    }
    Ok(())
}

impl Ers {
    pub fn new(def: ErsDefinition) -> Result<Self, ErsError> {
        let mut color_index = HashMap::new();
        for (i, c) in def.colors.iter().enumerate() {
            check_name("color", c)?;
            if c == ERS_START || c == VTYPE || c == BASE_COLOR {
                return Err(bad(format!("color name {c:?} is reserved")));
            }
            if color_index.insert(c.clone(), i).is_some() {
                return Err(bad(format!("duplicate color {c:?}")));
            }
        }
        let check_colors = |g: &TypedGraph, what: &str| -> Result<(), ErsError> {
            for v in g.vertices() {
                check_name("vertex", &v.id)?;
            }
            for e in g.edges() {
                check_name("edge", &e.id)?;
                if !color_index.contains_key(&e.color) {
                    return Err(bad(format!("{what}: edge {:?} has unknown color {:?}", e.id, e.color)));
                }
            }
            Ok(())
        };
        let base = TypedGraph::from_document(&def.base, VTYPE)?;
        check_colors(&base, "base")?;
        let mut reps = Vec::new();
        for c in &def.colors {
            let r = def.replacements.get(c).ok_or_else(|| bad(format!("color {c:?} has no replacement")))?;
            let graph = TypedGraph::from_document(&r.graph, VTYPE)?;
            check_colors(&graph, &format!("replacement {c}"))?;
            let find = |v: &str| graph.vertex_index(v).ok_or_else(|| bad(format!("replacement {c}: unknown vertex {v:?}")));
            let (iota, tau) = (find(&r.iota)?, find(&r.tau)?);
            if iota == tau {
                return Err(bad(format!("replacement {c}: iota and tau coincide")));
            }
            reps.push(Rep { graph, iota, tau });
        }
        if let Some(extra) = def.replacements.keys().find(|k| !color_index.contains_key(*k)) {
            return Err(bad(format!("replacement for unknown color {extra:?}")));
        }

        let mut items: Vec<Item> = Vec::new();
        items.extend(base.edges().iter().map(|e| (None, Kind::Edge, e.id.clone())));
        items.extend(base.vertices().iter().map(|v| (None, Kind::Vertex, v.id.clone())));
        for (c, r) in reps.iter().enumerate() {
            items.extend(r.graph.edges().iter().map(|e| (Some(c), Kind::Edge, e.id.clone())));
            items.extend(
                r.graph
                    .vertices()
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != r.iota && i != r.tau)
                    .map(|(_, v)| (Some(c), Kind::Vertex, v.id.clone())),
            );
        }
        let mut count: HashMap<&str, usize> = HashMap::from([(PERSIST_LETTER, 1)]);
        for (_, _, n) in &items {
            *count.entry(n).or_default() += 1;
        }
        let mut letter_of = HashMap::new();
        let mut item_of = HashMap::new();
        for item in &items {
            let origin = item.0.map_or(ERS_START, |c| def.colors[c].as_str());
            let kind = if item.1 == Kind::Edge { "e" } else { "v" };
            let id = if count[item.2.as_str()] == 1 { item.2.clone() } else { format!("{origin}:{kind}:{}", item.2) };
            if item_of.insert(id.clone(), item.clone()).is_some() {
                return Err(bad(format!("letter id {id:?} is ambiguous")));
            }
            letter_of.insert(item.clone(), id);
        }
        Ok(Ers { def, color_index, base, reps, letter_of, item_of })
    }

    pub fn definition(&self) -> &ErsDefinition {
        &self.def
    }

    pub fn colors(&self) -> &[String] {
        &self.def.colors
    }

    pub fn base(&self) -> &TypedGraph {
        &self.base
    }

    fn letter(&self, origin: Option<usize>, kind: Kind, name: &str) -> &str {
        &self.letter_of[&(origin, kind, name.to_string())]
    }

    /// Splits a word on `.` when present, otherwise into characters.
    pub fn parse_word(&self, s: &str) -> Vec<String> {
        if s.contains(WORD_SEPARATOR) {
            s.split(WORD_SEPARATOR).map(str::to_string).collect()
        } else {
            s.chars().map(String::from).collect()
        }
    }
}

impl TryFrom<ErsDefinition> for Ers {
    type Error = ErsError;
    fn try_from(def: ErsDefinition) -> Result<Self, ErsError> {
        Ers::new(def)
    }
}

/// Violations of the expanding conditions; empty means expanding.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ErsReport {
    pub violations: Vec<String>,
}

impl ErsReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn is_expanding_ers(e: &Ers) -> ErsReport {
    let mut violations = Vec::new();
    let isolated = |g: &TypedGraph| -> Vec<String> {
        let adj = g.adjacency();
        g.vertices().iter().zip(&adj).filter(|(_, a)| a.is_empty()).map(|(v, _)| v.id.clone()).collect()
    };
    for v in isolated(&e.base) {
        violations.push(format!("base vertex {v} is isolated"));
    }
    for (c, r) in e.def.colors.iter().zip(&e.reps) {
        for v in isolated(&r.graph) {
            violations.push(format!("replacement {c}: vertex {v} is isolated"));
        }
        if r.graph.vertex_count() <= 2 {
            violations.push(format!("replacement {c}: no vertex besides iota and tau"));
        }
        for edge in r.graph.edges() {
            if (edge.from, edge.to) == (r.iota, r.tau) || (edge.from, edge.to) == (r.tau, r.iota) {
                violations.push(format!("replacement {c}: edge {} joins iota and tau", edge.id));
            }
        }
    }
    ErsReport { violations }
}

fn join(prefix: &str, letter: &str) -> String {
    format!("{prefix}{SEP}{letter}")
}

/// `E_n`; all vertices have type [`VTYPE`].
pub fn full_expansion(e: &Ers, n: usize) -> TypedGraph {
    assert!(n >= 1, "E_n is defined for n >= 1");
    let mut g = TypedGraph::new();
    for v in e.base.vertices() {
        g.add_vertex(e.letter(None, Kind::Vertex, &v.id), VTYPE).expect("letter ids are unique");
    }
    for edge in e.base.edges() {
        g.add_edge_at(e.letter(None, Kind::Edge, &edge.id), edge.from, edge.to, edge.color.clone())
            .expect("letter ids are unique");
    }
    for _ in 1..n {
        let mut next = TypedGraph::new();
        for v in g.vertices() {
            next.add_vertex(v.id.clone(), VTYPE).expect("copied from a valid graph");
        }
        for edge in g.edges() {
            let c = e.color_index[&edge.color];
            let r = &e.reps[c];
            let mut map = vec![usize::MAX; r.graph.vertex_count()];
            map[r.iota] = edge.from;
            map[r.tau] = edge.to;
            for (i, v) in r.graph.vertices().iter().enumerate() {
                if i != r.iota && i != r.tau {
                    let id = join(&edge.id, e.letter(Some(c), Kind::Vertex, &v.id));
                    map[i] = next.add_vertex(id, VTYPE).expect("words are unique");
                }
            }
            for f in r.graph.edges() {
                let id = join(&edge.id, e.letter(Some(c), Kind::Edge, &f.id));
                next.add_edge_at(id, map[f.from], map[f.to], f.color.clone()).expect("words are unique");
            }
        }
        g = next;
    }
    g
}

/// Barycentric subdivision of `E_n` renamed into the vertex ids of `Γ_n`:
/// original vertices are padded with [`PERSIST_LETTER`] to `n` letters.
pub fn subdivided_expansion(e: &Ers, n: usize) -> TypedGraph {
    let bary = crate::graph::barycentric_subdivision(&full_expansion(e, n));
    let mut out = TypedGraph::new();
    for v in bary.vertices() {
        let id = if v.ty == VTYPE {
            let len = v.id.split(WORD_SEPARATOR).count();
            (len..n).fold(v.id.clone(), |id, _| join(&id, PERSIST_LETTER))
        } else {
            v.id.clone()
        };
        out.add_vertex(id, v.ty.clone()).expect("padding keeps ids distinct");
    }
    for edge in bary.edges() {
        out.add_edge_at(edge.id.clone(), edge.from, edge.to, edge.color.clone()).expect("same edges");
    }
    out
}

/// Splits `bary(X_c)` into the replacement graphs of `c_i` and `c_t`:
/// halves touching `τ_c` go to `c_t`, all others to `c_i`.
pub fn partition_bary(e: &Ers, color: &str) -> Result<(ReplacementGraph, ReplacementGraph), ErsError> {
    let c = *e.color_index.get(color).ok_or_else(|| bad(format!("unknown color {color:?}")))?;
    let r = &e.reps[c];
    let mut gi = ReplacementGraph::default();
    let mut gt = ReplacementGraph::default();
    // `v` is a vertex of X_c; `side` is the marker of the replacement graph.
    let vertex_slot = |v: usize, side: Marker| -> Slot {
        if v == r.iota || v == r.tau {
            Slot::new(PERSIST_LETTER, side)
        } else {
            let inner = side.other();
            Slot::new(e.letter(Some(c), Kind::Vertex, &r.graph.vertices()[v].id), inner)
        }
    };
    for f in r.graph.edges() {
        let mid = e.letter(Some(c), Kind::Edge, &f.id);
        let halves = [(f.from, true, iota_color(&f.color)), (f.to, false, tau_color(&f.color))];
        for (v, outward, half_color) in halves {
            let (target, side) = if v == r.tau { (&mut gt, Marker::T) } else { (&mut gi, Marker::I) };
            let vs = vertex_slot(v, side);
            let ms = Slot::new(mid, side.other());
            if outward {
                target.push(vs, ms, half_color);
            } else {
                target.push(ms, vs, half_color);
            }
        }
    }
    Ok((gi, gt))
}

/// The VERS whose `Γ_n` is the barycentric subdivision of `E_n`.
pub fn vers_from_ers(e: &Ers) -> Result<Vers, ErsError> {
    let mut sigma = Shift::new(ERS_START);
    sigma.add_type(VTYPE);
    for c in &e.def.colors {
        sigma.add_type(c.clone());
    }
    sigma.add_letter(PERSIST_LETTER, VTYPE, VTYPE);
    for edge in e.base.edges() {
        sigma.add_letter(e.letter(None, Kind::Edge, &edge.id), ERS_START, edge.color.clone());
    }
    for v in e.base.vertices() {
        sigma.add_letter(e.letter(None, Kind::Vertex, &v.id), ERS_START, VTYPE);
    }
    for (c, r) in e.reps.iter().enumerate() {
        let name = &e.def.colors[c];
        for f in r.graph.edges() {
            sigma.add_letter(e.letter(Some(c), Kind::Edge, &f.id), name.clone(), f.color.clone());
        }
        for (i, v) in r.graph.vertices().iter().enumerate() {
            if i != r.iota && i != r.tau {
                sigma.add_letter(e.letter(Some(c), Kind::Vertex, &v.id), name.clone(), VTYPE);
            }
        }
    }

    let mut colors = vec![BASE_COLOR.to_string()];
    let mut kappa = BTreeMap::from([(BASE_COLOR.to_string(), (ERS_START.to_string(), ERS_START.to_string()))]);
    let mut replacements = BTreeMap::new();
    let mut r0 = ReplacementGraph::default();
    for edge in e.base.edges() {
        let mid = Slot::new(e.letter(None, Kind::Edge, &edge.id), Marker::I);
        let (from, to) = e.base.endpoints(edge);
        let from = Slot::new(e.letter(None, Kind::Vertex, from), Marker::I);
        let to = Slot::new(e.letter(None, Kind::Vertex, to), Marker::I);
        r0.push(from, mid.clone(), iota_color(&edge.color));
        r0.push(mid, to, tau_color(&edge.color));
    }
    replacements.insert(BASE_COLOR.to_string(), r0);
    for c in &e.def.colors {
        let (gi, gt) = partition_bary(e, c)?;
        let (ci, ct) = (iota_color(c), tau_color(c));
        kappa.insert(ci.clone(), (VTYPE.to_string(), c.clone()));
        kappa.insert(ct.clone(), (c.clone(), VTYPE.to_string()));
        replacements.insert(ci.clone(), gi);
        replacements.insert(ct.clone(), gt);
        colors.push(ci);
        colors.push(ct);
    }
    let def = VersDefinition { sigma, colors, kappa, replacements, base: vec![BASE_COLOR.to_string()] };
    Ok(Vers::new(def)?)
}

/// Endpoints of the `E_k` edge named by `word` (`k = word.len()`).
fn edge_endpoints(e: &Ers, word: &[String]) -> Result<(String, String), ErsError> {
    let not_in = |k: usize| ErsError::NotInLanguage { word: word[..k].join(SEP), depth: k };
    let first = word.first().ok_or_else(|| not_in(0))?;
    let Some((None, Kind::Edge, name)) = e.item_of.get(first) else { return Err(not_in(1)) };
    let edge = e.base.edge(name).expect("base letters name base edges");
    let (f, t) = e.base.endpoints(edge);
    let mut ends = (e.letter(None, Kind::Vertex, f).to_string(), e.letter(None, Kind::Vertex, t).to_string());
    let mut color = e.color_index[&edge.color];
    for k in 1..word.len() {
        let Some((Some(c), Kind::Edge, name)) = e.item_of.get(&word[k]) else { return Err(not_in(k + 1)) };
        if *c != color {
            return Err(not_in(k + 1));
        }
        let r = &e.reps[*c];
        let f = r.graph.edge(name).expect("letters name replacement edges");
        let prefix = word[..k].join(SEP);
        let name_of = |v: usize| {
            if v == r.iota {
                ends.0.clone()
            } else if v == r.tau {
                ends.1.clone()
            } else {
                join(&prefix, e.letter(Some(*c), Kind::Vertex, &r.graph.vertices()[v].id))
            }
        };
        ends = (name_of(f.from), name_of(f.to));
        color = e.color_index[&f.color];
    }
    Ok(ends)
}

/// Whether every pair of equal-length prefixes of `u`, `v` are equal or
/// adjacent edges of the corresponding `E_k`.
pub fn gluing_related_at_depth(e: &Ers, u: &[String], v: &[String]) -> Result<bool, ErsError> {
    if u.len() != v.len() {
        return Err(ErsError::LengthMismatch(u.len(), v.len()));
    }
    let mut related = true;
    for k in 1..=u.len() {
        let (a, b) = (edge_endpoints(e, &u[..k])?, edge_endpoints(e, &v[..k])?);
        let adjacent = a.0 == b.0 || a.0 == b.1 || a.1 == b.0 || a.1 == b.1;
        related &= u[..k] == v[..k] || adjacent;
    }
    Ok(related)
}
