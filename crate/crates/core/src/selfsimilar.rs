//! Automaton groups given by wreath recursions.
//!
//! Words passed to [`act`] are in reading order: the first letter is the one
//! the state reads first. Graph vertex ids use the stored (base-level-first)
//! order of [`crate::vers::Word`], which is the reverse.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::TypedGraph;
use crate::vers::{Marker, ReplacementGraph, Shift, Slot, Vers, VersDefinition, VersError};

/// The single Σ-vertex of the full shift.
pub const SHIFT_TYPE: &str = "t";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub state: String,
    #[serde(rename = "in")]
    pub input: usize,
    pub out: usize,
    pub next: String,
}

/// Unvalidated automaton, mirroring the JSON document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomatonDefinition {
    pub alphabet: usize,
    pub states: Vec<String>,
    pub transitions: Vec<Transition>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AutomatonViolation {
    EmptyAlphabet,
    DuplicateState(String),
    BadStateName(String),
    LetterOutOfRange { state: String, letter: usize },
    DuplicateTransition { state: String, letter: usize },
    MissingTransition { state: String, letter: usize },
    NotBijection { state: String },
    UndefinedRestriction { state: String, letter: usize, next: String },
}

impl fmt::Display for AutomatonViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use AutomatonViolation::*;
        match self {
            EmptyAlphabet => write!(f, "alphabet is empty"),
            DuplicateState(s) => write!(f, "state {s:?} declared twice"),
            BadStateName(s) => write!(f, "state name {s:?} is empty"),
            LetterOutOfRange { state, letter } => write!(f, "state {state:?} has a transition on letter {letter} outside the alphabet"),
            DuplicateTransition { state, letter } => write!(f, "state {state:?} has two transitions reading {letter}"),
            MissingTransition { state, letter } => write!(f, "state {state:?} has no transition reading {letter}"),
            NotBijection { state } => write!(f, "outputs of state {state:?} do not form a permutation"),
            UndefinedRestriction { state, letter, next } => {
                write!(f, "state {state:?} on {letter} moves to {next:?}, which has no transitions")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AutomatonReport {
    pub violations: Vec<AutomatonViolation>,
    /// Restrictions outside the declared states that the transitions define.
    pub completion: Vec<String>,
}

impl AutomatonReport {
    /// Valid and restriction-closed as declared.
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty() && self.completion.is_empty()
    }
}

impl fmt::Display for AutomatonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let mut lines: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        if !self.completion.is_empty() {
            lines.push(format!("not restriction-closed; completion adds {:?}", self.completion));
        }
        write!(f, "{}", lines.join("\n"))
    }
}

#[derive(Debug, Error)]
pub enum AutomatonError {
    #[error("invalid automaton:\n{0}")]
    Invalid(AutomatonReport),
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("letter {letter} outside the alphabet of size {size}")]
    UnknownLetter { letter: usize, size: usize },
    #[error(transparent)]
    Vers(#[from] VersError),
}

pub fn validate_automaton(def: &AutomatonDefinition) -> AutomatonReport {
    let d = def.alphabet;
    let mut violations = Vec::new();
    if d == 0 {
        violations.push(AutomatonViolation::EmptyAlphabet);
    }
    let mut declared = HashSet::new();
    for s in &def.states {
        if s.is_empty() {
            violations.push(AutomatonViolation::BadStateName(s.clone()));
        }
        if !declared.insert(s.as_str()) {
            violations.push(AutomatonViolation::DuplicateState(s.clone()));
        }
    }
    let mut table: HashMap<&str, Vec<Option<(usize, &str)>>> = HashMap::new();
    for t in &def.transitions {
        let row = table.entry(t.state.as_str()).or_insert_with(|| vec![None; d]);
        if t.input >= d || t.out >= d {
            violations.push(AutomatonViolation::LetterOutOfRange { state: t.state.clone(), letter: t.input.max(t.out) });
            continue;
        }
        if row[t.input].replace((t.out, t.next.as_str())).is_some() {
            violations.push(AutomatonViolation::DuplicateTransition { state: t.state.clone(), letter: t.input });
        }
    }
    // Restriction closure from the declared states, in discovery order.
    let mut order: Vec<&str> = def.states.iter().map(String::as_str).collect();
    let mut seen: HashSet<&str> = declared.clone();
    let mut completion = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let s = order[i];
        i += 1;
        let Some(row) = table.get(s) else {
            for letter in 0..d {
                violations.push(AutomatonViolation::MissingTransition { state: s.to_string(), letter });
            }
            continue;
        };
        let mut outs = vec![false; d];
        for (letter, entry) in row.iter().enumerate() {
            let Some((out, next)) = *entry else {
                violations.push(AutomatonViolation::MissingTransition { state: s.to_string(), letter });
                continue;
            };
            outs[out] = true;
            if !table.contains_key(next) {
                violations.push(AutomatonViolation::UndefinedRestriction {
                    state: s.to_string(),
                    letter,
                    next: next.to_string(),
                });
            } else if seen.insert(next) {
                completion.push(next.to_string());
                order.push(next);
            }
        }
        if row.iter().all(Option::is_some) && !outs.iter().all(|&b| b) {
            violations.push(AutomatonViolation::NotBijection { state: s.to_string() });
        }
    }
    AutomatonReport { violations, completion }
}

/// A validated, restriction-closed automaton.
#[derive(Debug, Clone)]
pub struct WreathAutomaton {
    d: usize,
    states: Vec<String>,
    index: HashMap<String, usize>,
    perm: Vec<Vec<usize>>,
    restrict: Vec<Vec<usize>>,
}

impl WreathAutomaton {
    /// Requires the declared states to be restriction-closed.
    pub fn new(def: &AutomatonDefinition) -> Result<Self, AutomatonError> {
        let report = validate_automaton(def);
        if !report.is_ok() {
            return Err(AutomatonError::Invalid(report));
        }
        Ok(Self::build(def, &report))
    }

    /// Accepts undeclared restrictions, appending them as extra states.
    pub fn completed(def: &AutomatonDefinition) -> Result<Self, AutomatonError> {
        let report = validate_automaton(def);
        if !report.violations.is_empty() {
            return Err(AutomatonError::Invalid(report));
        }
        Ok(Self::build(def, &report))
    }

    fn build(def: &AutomatonDefinition, report: &AutomatonReport) -> Self {
        let states: Vec<String> = def.states.iter().chain(&report.completion).cloned().collect();
        let index: HashMap<String, usize> = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let d = def.alphabet;
        let mut perm = vec![vec![0; d]; states.len()];
        let mut restrict = vec![vec![0; d]; states.len()];
        for t in &def.transitions {
            if let Some(&g) = index.get(&t.state) {
                perm[g][t.input] = t.out;
                restrict[g][t.input] = index[&t.next];
            }
        }
        WreathAutomaton { d, states, index, perm, restrict }
    }

    pub fn alphabet_size(&self) -> usize {
        self.d
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    fn state(&self, g: &str) -> Result<usize, AutomatonError> {
        self.index.get(g).copied().ok_or_else(|| AutomatonError::UnknownState(g.to_string()))
    }

    /// σ_g(x).
    pub fn sigma(&self, g: &str, x: usize) -> Result<usize, AutomatonError> {
        let s = self.state(g)?;
        self.perm[s].get(x).copied().ok_or(AutomatonError::UnknownLetter { letter: x, size: self.d })
    }

    /// The restriction g_x.
    pub fn restriction(&self, g: &str, x: usize) -> Result<&str, AutomatonError> {
        let s = self.state(g)?;
        let r = *self.restrict[s].get(x).ok_or(AutomatonError::UnknownLetter { letter: x, size: self.d })?;
        Ok(&self.states[r])
    }

    fn act_index(&self, mut g: usize, w: &[usize]) -> Vec<usize> {
        w.iter()
            .map(|&x| {
                let y = self.perm[g][x];
                g = self.restrict[g][x];
                y
            })
            .collect()
    }
}

/// Image of the reading-order word `w` under state `g`.
pub fn act(a: &WreathAutomaton, g: &str, w: &[usize]) -> Result<Vec<usize>, AutomatonError> {
    let s = a.state(g)?;
    if let Some(&x) = w.iter().find(|&&x| x >= a.d) {
        return Err(AutomatonError::UnknownLetter { letter: x, size: a.d });
    }
    Ok(a.act_index(s, w))
}

/// Vertex id of a reading-order word.
fn word_id(w: &[usize]) -> String {
    w.iter().rev().map(|x| x.to_string()).collect::<Vec<_>>().join(".")
}

/// Level-`n` Schreier graph: a `g`-colored edge `u → g(u)` for each state
/// and word, ordered by word (stored order) then state.
pub fn schreier_graph(a: &WreathAutomaton, n: usize) -> TypedGraph {
    let d = a.d;
    let total = d.checked_pow(n as u32).expect("level too large");
    // Stored-order words in lexicographic order, kept in reading order.
    let words: Vec<Vec<usize>> = (0..total)
        .map(|mut k| {
            let mut stored = vec![0; n];
            for slot in stored.iter_mut().rev() {
                *slot = k % d;
                k /= d;
            }
            stored.reverse();
            stored
        })
        .collect();
    let mut g = TypedGraph::new();
    let mut ids = Vec::with_capacity(total);
    for w in &words {
        let id = word_id(w);
        g.add_vertex(id.clone(), SHIFT_TYPE).expect("distinct words");
        ids.push(id);
    }
    for (w, id) in words.iter().zip(&ids) {
        for (s, name) in a.states.iter().enumerate() {
            let image = word_id(&a.act_index(s, w));
            g.add_edge(format!("{name}@{id}"), id, &image, name.clone()).expect("distinct ids");
        }
    }
    g
}

/// The VERS whose Γₙ are the Schreier graphs of `a`.
pub fn vers_from_automaton(a: &WreathAutomaton) -> Result<Vers, AutomatonError> {
    let mut sigma = Shift::new(SHIFT_TYPE);
    for x in 0..a.d {
        sigma.add_letter(x.to_string(), SHIFT_TYPE, SHIFT_TYPE);
    }
    let mut replacements: std::collections::BTreeMap<String, ReplacementGraph> =
        a.states.iter().map(|g| (g.clone(), ReplacementGraph::default())).collect();
    for (h, name) in a.states.iter().enumerate() {
        for x in 0..a.d {
            let g = &a.states[a.restrict[h][x]];
            let y = a.perm[h][x];
            replacements.get_mut(g).unwrap().push(
                Slot::new(x.to_string(), Marker::I),
                Slot::new(y.to_string(), Marker::T),
                name.clone(),
            );
        }
    }
    let def = VersDefinition {
        sigma,
        colors: a.states.clone(),
        kappa: a.states.iter().map(|g| (g.clone(), (SHIFT_TYPE.to_string(), SHIFT_TYPE.to_string()))).collect(),
        replacements,
        base: a.states.clone(),
    };
    Ok(Vers::new(def)?)
}
