//! VERS definitions, validation and words.
//!
//! A [`VersDefinition`] is unchecked data (typically parsed from JSON).
//! [`Vers`] is a validated definition together with an interned rule table
//! used by the expansion engine.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, KappaMap, KappaReport, TypedGraph};

/// Separator between letters in a word id.
pub const WORD_SEPARATOR: char = '.';

/// Endpoint marker of a replacement-graph vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Marker {
    #[serde(rename = "i")]
    I,
    #[serde(rename = "t")]
    T,
}

impl Marker {
    pub fn other(self) -> Marker {
        match self {
            Marker::I => Marker::T,
            Marker::T => Marker::I,
        }
    }
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Marker::I => "i",
            Marker::T => "t",
        })
    }
}

/// A replacement-graph vertex `letter·marker`, serialized as `["x","i"]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot(pub String, pub Marker);

impl Slot {
    pub fn new(letter: impl Into<String>, marker: Marker) -> Self {
        Slot(letter.into(), marker)
    }

    pub fn letter(&self) -> &str {
        &self.0
    }

    pub fn marker(&self) -> Marker {
        self.1
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}·{}", self.0, self.1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplacementEdge {
    pub from: Slot,
    pub to: Slot,
    pub color: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplacementGraph {
    pub edges: Vec<ReplacementEdge>,
}

impl ReplacementGraph {
    pub fn push(&mut self, from: Slot, to: Slot, color: impl Into<String>) {
        self.edges.push(ReplacementEdge { from, to, color: color.into() });
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftVertex {
    pub id: String,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub ty: Option<String>,
}

/// A shift-alphabet letter: an edge of Σ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftLetter {
    pub id: String,
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
}

/// The shift (Σ, s): vertices are types, edges are letters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shift {
    pub vertices: Vec<ShiftVertex>,
    pub edges: Vec<ShiftLetter>,
    pub start: String,
}

impl Shift {
    pub fn new(start: impl Into<String>) -> Self {
        let start = start.into();
        Shift { vertices: vec![ShiftVertex { id: start.clone(), ty: None }], edges: Vec::new(), start }
    }

    pub fn add_type(&mut self, id: impl Into<String>) {
        self.vertices.push(ShiftVertex { id: id.into(), ty: None });
    }

    pub fn add_letter(&mut self, id: impl Into<String>, from: impl Into<String>, to: impl Into<String>) {
        self.edges.push(ShiftLetter { id: id.into(), from: from.into(), to: to.into(), color: None });
    }

    /// Σ as a graph whose vertex types equal vertex ids.
    pub fn to_graph(&self) -> Result<TypedGraph, GraphError> {
        let mut g = TypedGraph::new();
        for v in &self.vertices {
            g.add_vertex(v.id.clone(), v.id.clone())?;
        }
        for l in &self.edges {
            g.add_edge(l.id.clone(), &l.from, &l.to, l.id.clone())?;
        }
        Ok(g)
    }
}

/// Unvalidated VERS data, mirroring the JSON document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersDefinition {
    pub sigma: Shift,
    pub colors: Vec<String>,
    pub kappa: BTreeMap<String, (String, String)>,
    pub replacements: BTreeMap<String, ReplacementGraph>,
    pub base: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnknownStart(String),
    DuplicateType(String),
    DuplicateLetter(String),
    BadLetterName(String),
    LetterEndpoint { letter: String, vertex: String },
    DuplicateColor(String),
    MissingKappa(String),
    KappaUnknownType { color: String, ty: String },
    UndeclaredColor { context: String, color: String },
    MissingReplacement(String),
    UnknownLetter { color: String, letter: String },
    SlotOutsideUniverse { color: String, slot: Slot, expected: String, found: String },
    ReplacementKappa { color: String, edge: usize, edge_color: String },
    BaseLoopType { color: String, kappa: (String, String), start: String },
    TooLarge(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            UnknownStart(s) => write!(f, "start vertex {s:?} is not a vertex of sigma"),
            DuplicateType(t) => write!(f, "sigma vertex {t:?} declared twice"),
            DuplicateLetter(l) => write!(f, "sigma letter {l:?} declared twice"),
            BadLetterName(l) => write!(f, "letter name {l:?} is empty or contains '{WORD_SEPARATOR}'"),
            LetterEndpoint { letter, vertex } => write!(f, "letter {letter:?} uses unknown sigma vertex {vertex:?}"),
            DuplicateColor(c) => write!(f, "color {c:?} declared twice"),
            MissingKappa(c) => write!(f, "kappa has no entry for color {c:?}"),
            KappaUnknownType { color, ty } => write!(f, "kappa({color:?}) uses unknown type {ty:?}"),
            UndeclaredColor { context, color } => write!(f, "{context} uses undeclared color {color:?}"),
            MissingReplacement(c) => write!(f, "no replacement graph for color {c:?}"),
            UnknownLetter { color, letter } => write!(f, "replacement for {color:?} uses unknown letter {letter:?}"),
            SlotOutsideUniverse { color, slot, expected, found } => write!(
                f,
                "replacement for {color:?}: vertex {slot} needs a letter starting at {expected:?}, \
                 but it starts at {found:?}"
            ),
            ReplacementKappa { color, edge, edge_color } => write!(
                f,
                "replacement for {color:?}: edge #{edge} colored {edge_color:?} is not kappa-compatible"
            ),
            BaseLoopType { color, kappa, start } => write!(
                f,
                "base loop {color:?} has kappa ({}, {}), expected ({start}, {start})",
                kappa.0, kappa.1
            ),
            TooLarge(what) => write!(f, "too many {what}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VersReport {
    pub violations: Vec<Violation>,
}

impl VersReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for VersReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum VersError {
    #[error("invalid VERS:\n{0}")]
    Invalid(VersReport),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("vertex {vertex:?} has type {ty:?}, which is not a sigma vertex")]
    UnknownType { vertex: String, ty: String },
    #[error("graph is not kappa-compatible: {0}")]
    NotKappaCompatible(KappaReport),
    #[error("unknown word {0:?}")]
    UnknownWord(String),
    #[error("level-0 edges have no spanning lift")]
    LevelZero,
    #[error("level {level} exceeds truncation depth {depth}")]
    LevelOutOfRange { level: usize, depth: usize },
}

const MAX_SYMBOLS: usize = u16::MAX as usize;

/// Checks every structural invariant of a VERS and lists the failures.
pub fn validate_vers(def: &VersDefinition) -> VersReport {
    let mut out = Vec::new();
    let mut types = HashSet::new();
    for v in &def.sigma.vertices {
        if !types.insert(v.id.as_str()) {
            out.push(Violation::DuplicateType(v.id.clone()));
        }
    }
    if !types.contains(def.sigma.start.as_str()) {
        out.push(Violation::UnknownStart(def.sigma.start.clone()));
    }
    let mut letters: HashMap<&str, (&str, &str)> = HashMap::new();
    for l in &def.sigma.edges {
        if l.id.is_empty() || l.id.contains(WORD_SEPARATOR) {
            out.push(Violation::BadLetterName(l.id.clone()));
        }
        for end in [&l.from, &l.to] {
            if !types.contains(end.as_str()) {
                out.push(Violation::LetterEndpoint { letter: l.id.clone(), vertex: end.clone() });
            }
        }
        if letters.insert(l.id.as_str(), (l.from.as_str(), l.to.as_str())).is_some() {
            out.push(Violation::DuplicateLetter(l.id.clone()));
        }
    }
    let mut colors = HashSet::new();
    for c in &def.colors {
        if !colors.insert(c.as_str()) {
            out.push(Violation::DuplicateColor(c.clone()));
        }
    }
    if types.len() >= MAX_SYMBOLS {
        out.push(Violation::TooLarge("sigma vertices".into()));
    }
    if letters.len() >= MAX_SYMBOLS {
        out.push(Violation::TooLarge("letters".into()));
    }
    if colors.len() >= MAX_SYMBOLS {
        out.push(Violation::TooLarge("colors".into()));
    }
    for c in &def.colors {
        match def.kappa.get(c) {
            None => out.push(Violation::MissingKappa(c.clone())),
            Some((a, b)) => {
                for t in [a, b] {
                    if !types.contains(t.as_str()) {
                        out.push(Violation::KappaUnknownType { color: c.clone(), ty: t.clone() });
                    }
                }
            }
        }
    }
    for c in def.kappa.keys() {
        if !colors.contains(c.as_str()) {
            out.push(Violation::UndeclaredColor { context: "kappa".into(), color: c.clone() });
        }
    }
    for c in def.replacements.keys() {
        if !colors.contains(c.as_str()) {
            out.push(Violation::UndeclaredColor { context: "replacements".into(), color: c.clone() });
        }
    }
    for c in &def.colors {
        let Some(rep) = def.replacements.get(c) else {
            out.push(Violation::MissingReplacement(c.clone()));
            continue;
        };
        let Some((k1, k2)) = def.kappa.get(c) else { continue };
        for (idx, e) in rep.edges.iter().enumerate() {
            let mut slot_types = [None, None];
            for (k, slot) in [&e.from, &e.to].into_iter().enumerate() {
                let Some(&(lf, lt)) = letters.get(slot.letter()) else {
                    out.push(Violation::UnknownLetter { color: c.clone(), letter: slot.0.clone() });
                    continue;
                };
                let expected = match slot.marker() {
                    Marker::I => k1,
                    Marker::T => k2,
                };
                if lf != expected {
                    out.push(Violation::SlotOutsideUniverse {
                        color: c.clone(),
                        slot: slot.clone(),
                        expected: expected.clone(),
                        found: lf.to_string(),
                    });
                }
                slot_types[k] = Some(lt);
            }
            match def.kappa.get(&e.color) {
                None if !colors.contains(e.color.as_str()) => out.push(Violation::UndeclaredColor {
                    context: format!("replacement for {c:?}"),
                    color: e.color.clone(),
                }),
                None => {}
                Some((e1, e2)) => {
                    if let [Some(a), Some(b)] = slot_types {
                        if a != e1 || b != e2 {
                            out.push(Violation::ReplacementKappa {
                                color: c.clone(),
                                edge: idx,
                                edge_color: e.color.clone(),
                            });
                        }
                    }
                }
            }
        }
    }
    for c in &def.base {
        match def.kappa.get(c) {
            None if !colors.contains(c.as_str()) => {
                out.push(Violation::UndeclaredColor { context: "base".into(), color: c.clone() })
            }
            None => {}
            Some((a, b)) => {
                if *a != def.sigma.start || *b != def.sigma.start {
                    out.push(Violation::BaseLoopType {
                        color: c.clone(),
                        kappa: (a.clone(), b.clone()),
                        start: def.sigma.start.clone(),
                    });
                }
            }
        }
    }
    VersReport { violations: out }
}

/// One edge of an interned replacement graph.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RepRule {
    pub from_letter: u16,
    pub from_t: bool,
    pub to_letter: u16,
    pub to_t: bool,
    pub color: u16,
}

/// Interned form of a valid VERS.
#[derive(Debug)]
pub(crate) struct Rules {
    pub type_names: Vec<String>,
    pub type_index: HashMap<String, u16>,
    pub start: u16,
    pub letter_names: Vec<String>,
    pub letter_index: HashMap<String, u16>,
    pub letter_from: Vec<u16>,
    pub letter_to: Vec<u16>,
    /// Position of a letter among the letters leaving its origin type.
    pub letter_offset: Vec<u16>,
    /// Letters leaving each type, in declaration order.
    pub out_letters: Vec<Vec<u16>>,
    pub color_names: Vec<String>,
    pub color_index: HashMap<String, u16>,
    pub kappa: Vec<(u16, u16)>,
    pub reps: Vec<Vec<RepRule>>,
    pub base: Vec<u16>,
}

impl Rules {
    fn compile(def: &VersDefinition) -> Rules {
        let type_names: Vec<String> = def.sigma.vertices.iter().map(|v| v.id.clone()).collect();
        let type_index: HashMap<String, u16> =
            type_names.iter().enumerate().map(|(i, t)| (t.clone(), i as u16)).collect();
        let letter_names: Vec<String> = def.sigma.edges.iter().map(|l| l.id.clone()).collect();
        let letter_index: HashMap<String, u16> =
            letter_names.iter().enumerate().map(|(i, l)| (l.clone(), i as u16)).collect();
        let letter_from: Vec<u16> = def.sigma.edges.iter().map(|l| type_index[&l.from]).collect();
        let letter_to: Vec<u16> = def.sigma.edges.iter().map(|l| type_index[&l.to]).collect();
        let mut out_letters = vec![Vec::new(); type_names.len()];
        let mut letter_offset = vec![0u16; letter_names.len()];
        for (x, &f) in letter_from.iter().enumerate() {
            letter_offset[x] = out_letters[f as usize].len() as u16;
            out_letters[f as usize].push(x as u16);
        }
        let color_names = def.colors.clone();
        let color_index: HashMap<String, u16> =
            color_names.iter().enumerate().map(|(i, c)| (c.clone(), i as u16)).collect();
        let kappa = color_names
            .iter()
            .map(|c| {
                let (a, b) = &def.kappa[c];
                (type_index[a], type_index[b])
            })
            .collect();
        let reps = color_names
            .iter()
            .map(|c| {
                def.replacements[c]
                    .edges
                    .iter()
                    .map(|e| RepRule {
                        from_letter: letter_index[e.from.letter()],
                        from_t: e.from.marker() == Marker::T,
                        to_letter: letter_index[e.to.letter()],
                        to_t: e.to.marker() == Marker::T,
                        color: color_index[&e.color],
                    })
                    .collect()
            })
            .collect();
        let base = def.base.iter().map(|c| color_index[c]).collect();
        Rules {
            start: type_index[&def.sigma.start],
            type_names,
            type_index,
            letter_names,
            letter_index,
            letter_from,
            letter_to,
            letter_offset,
            out_letters,
            color_names,
            color_index,
            kappa,
            reps,
            base,
        }
    }
}

/// A validated VERS.
#[derive(Debug, Clone)]
pub struct Vers {
    def: VersDefinition,
    rules: Arc<Rules>,
}

impl Vers {
    pub fn new(def: VersDefinition) -> Result<Self, VersError> {
        let report = validate_vers(&def);
        if !report.is_ok() {
            return Err(VersError::Invalid(report));
        }
        let rules = Arc::new(Rules::compile(&def));
        Ok(Vers { def, rules })
    }

    pub fn definition(&self) -> &VersDefinition {
        &self.def
    }

    pub fn colors(&self) -> &[String] {
        &self.def.colors
    }

    pub fn start(&self) -> &str {
        &self.def.sigma.start
    }

    pub fn replacement(&self, color: &str) -> Option<&ReplacementGraph> {
        self.def.replacements.get(color)
    }

    pub fn kappa(&self) -> KappaMap {
        self.def.kappa.iter().map(|(c, (a, b))| (c.clone(), a.clone(), b.clone())).collect()
    }

    /// Σ-vertices reachable from the start vertex.
    pub fn reachable_types(&self) -> Vec<String> {
        let r = &self.rules;
        let mut seen = vec![false; r.type_names.len()];
        let mut stack = vec![r.start];
        seen[r.start as usize] = true;
        while let Some(t) = stack.pop() {
            for &x in &r.out_letters[t as usize] {
                let to = r.letter_to[x as usize];
                if !seen[to as usize] {
                    seen[to as usize] = true;
                    stack.push(to);
                }
            }
        }
        r.type_names.iter().zip(seen).filter(|(_, s)| *s).map(|(t, _)| t.clone()).collect()
    }

    pub(crate) fn rules(&self) -> &Arc<Rules> {
        &self.rules
    }
}

impl TryFrom<VersDefinition> for Vers {
    type Error = VersError;

    fn try_from(def: VersDefinition) -> Result<Self, Self::Error> {
        Vers::new(def)
    }
}

/// A word over the shift alphabet, stored base-level-first.
///
/// The id joins the letters with [`WORD_SEPARATOR`]; the empty word has id `""`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<String>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn parse_id(id: &str) -> Self {
        if id.is_empty() {
            Word::empty()
        } else {
            Word(id.split(WORD_SEPARATOR).map(str::to_string).collect())
        }
    }

    /// Parses newest-letter-first notation: single-character letters may be
    /// juxtaposed (`"10"`), longer ones separated by `.`.
    pub fn from_reading(s: &str) -> Self {
        let mut letters: Vec<String> = if s.contains(WORD_SEPARATOR) {
            s.split(WORD_SEPARATOR).map(str::to_string).collect()
        } else {
            s.chars().map(String::from).collect()
        };
        letters.reverse();
        Word(letters)
    }

    /// Newest-letter-first rendering, the inverse of [`Word::from_reading`].
    pub fn reading(&self) -> String {
        let sep = if self.0.iter().all(|l| l.chars().count() == 1) { "" } else { "." };
        self.0.iter().rev().map(String::as_str).collect::<Vec<_>>().join(sep)
    }

    pub fn id(&self) -> String {
        self.0.join(".")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[String] {
        &self.0
    }

    /// Appends the newest letter.
    pub fn push(&mut self, letter: impl Into<String>) {
        self.0.push(letter.into());
    }

    /// The word one level up (newest letter removed).
    pub fn pred(&self) -> Option<Word> {
        (!self.0.is_empty()).then(|| Word(self.0[..self.0.len() - 1].to_vec()))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Child id of `parent` under `letter`.
pub(crate) fn child_id(parent: &str, letter: &str) -> String {
    if parent.is_empty() {
        letter.to_string()
    } else {
        let mut s = String::with_capacity(parent.len() + 1 + letter.len());
        s.push_str(parent);
        s.push(WORD_SEPARATOR);
        s.push_str(letter);
        s
    }
}
