//! Machine-readable command results and the oracle comparison.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::document::{SpecBody, SpecDocument};
use crate::ers::{subdivided_expansion, vers_from_ers, ErsError};
use crate::expansion::gamma;
use crate::graph::TypedGraph;
use crate::ifs::{cell_intersection_oracle, vers_from_ifs, IfsError, PcfIfs};
use crate::selfsimilar::{schreier_graph, vers_from_automaton, AutomatonError};
use crate::vers::Word;

/// Maximum number of differences listed in a report.
pub const MAX_DIFFS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// The checked property holds.
    Holds,
    /// A witness or difference was found.
    Fails,
    /// The check could not decide, or the command failed.
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Fails => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    /// Hex SHA-256 of the input document, empty when there is none.
    pub digest: String,
    pub verdict: Verdict,
    pub details: Value,
    pub elapsed_ms: u128,
}

impl Report {
    pub fn new(command: impl Into<String>, digest: impl Into<String>, verdict: Verdict, details: Value) -> Self {
        Report { command: command.into(), digest: digest.into(), verdict, details, elapsed_ms: 0 }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// One summary line followed by the details.
    pub fn render_human(&self) -> String {
        let mut out = format!("{}: {} ({} ms)\n", self.command, self.verdict, self.elapsed_ms);
        if let Value::Object(map) = &self.details {
            for (k, v) in map {
                match v {
                    Value::String(s) => out.push_str(&format!("  {k}: {s}\n")),
                    Value::Array(items) => {
                        out.push_str(&format!("  {k}:\n"));
                        for item in items {
                            let line = item.as_str().map(str::to_string).unwrap_or_else(|| item.to_string());
                            out.push_str(&format!("    - {line}\n"));
                        }
                    }
                    other => out.push_str(&format!("  {k}: {other}\n")),
                }
            }
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("oracle comparison is not defined for {0} documents")]
    UnsupportedKind(&'static str),
    #[error("level must be at least 1")]
    LevelZero,
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Ifs(#[from] IfsError),
    #[error(transparent)]
    Ers(#[from] ErsError),
}

/// Multiset difference of `(from, to, color)` triples, capped at [`MAX_DIFFS`].
fn triple_diffs(vers_side: &TypedGraph, oracle_side: &TypedGraph) -> Vec<String> {
    let count = |g: &TypedGraph| {
        let mut m: BTreeMap<(String, String, String), i64> = BTreeMap::new();
        for (f, t, c) in g.edge_triples() {
            *m.entry((f.to_string(), t.to_string(), c.to_string())).or_default() += 1;
        }
        m
    };
    let mut diffs = Vec::new();
    let vertex_ids = |g: &TypedGraph| g.vertices().iter().map(|v| (v.id.clone(), v.ty.clone())).collect::<BTreeMap<_, _>>();
    let (va, vb) = (vertex_ids(vers_side), vertex_ids(oracle_side));
    for (id, ty) in &va {
        if vb.get(id) != Some(ty) {
            diffs.push(format!("vertex {id}:{ty} only on the VERS side"));
        }
    }
    for (id, ty) in &vb {
        if va.get(id) != Some(ty) {
            diffs.push(format!("vertex {id}:{ty} only on the oracle side"));
        }
    }
    let (a, b) = (count(vers_side), count(oracle_side));
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    for k in keys {
        let d = a.get(k).copied().unwrap_or(0) - b.get(k).copied().unwrap_or(0);
        if d != 0 {
            let side = if d > 0 { "VERS" } else { "oracle" };
            diffs.push(format!("edge {} -> {} [{}] x{} only on the {side} side", k.0, k.1, k.2, d.abs()));
        }
    }
    diffs.truncate(MAX_DIFFS);
    diffs
}

/// Adjacency in `Γ_n` against non-empty cell intersections, over all
/// unordered pairs of distinct level-`n` words. Returns the differences
/// (capped) and the number of adjacent pairs on each side.
pub fn ifs_intersection_diffs(f: &PcfIfs, n: usize) -> Result<(Vec<String>, usize, usize), IfsError> {
    let v = vers_from_ifs(f, false)?;
    let g = gamma(&v.vers, n);
    let reading: Vec<Vec<usize>> = g
        .vertices()
        .iter()
        .map(|x| {
            let w = Word::parse_id(&x.id);
            w.letters().iter().rev().map(|l| f.letter_index(l).expect("Γ_n letters are IFS letters")).collect()
        })
        .collect();
    let mut adjacent = std::collections::BTreeSet::new();
    for e in g.edges() {
        if e.from != e.to {
            adjacent.insert((e.from.min(e.to), e.from.max(e.to)));
        }
    }
    let count = reading.len();
    let oracle: Vec<(usize, usize)> = (0..count)
        .into_par_iter()
        .flat_map_iter(|i| {
            let reading = &reading;
            (i + 1..count).filter_map(move |j| {
                let hit = !cell_intersection_oracle(f, &reading[i], &reading[j]).expect("distinct words of equal length").is_empty();
                hit.then_some((i, j))
            })
        })
        .collect();
    let oracle_set: std::collections::BTreeSet<(usize, usize)> = oracle.iter().copied().collect();
    let name = |i: usize| g.vertices()[i].id.clone();
    let mut diffs: Vec<String> = adjacent
        .difference(&oracle_set)
        .map(|&(i, j)| format!("{} -- {} adjacent but cells are disjoint", name(i), name(j)))
        .chain(oracle_set.difference(&adjacent).map(|&(i, j)| format!("{} -- {} cells meet but not adjacent", name(i), name(j))))
        .collect();
    diffs.truncate(MAX_DIFFS);
    Ok((diffs, adjacent.len(), oracle_set.len()))
}

/// Compares `Γ_n` with the independent construction for the document kind:
/// Schreier graphs, the cell-intersection sweep, or subdivided `E_n`.
pub fn oracle_compare(doc: &SpecDocument, n: usize) -> Result<Report, OracleError> {
    if n == 0 {
        return Err(OracleError::LevelZero);
    }
    let (diffs, details) = match &doc.body {
        SpecBody::Vers(_) => return Err(OracleError::UnsupportedKind("vers")),
        SpecBody::Automaton(a) => {
            let g = gamma(&vers_from_automaton(a)?, n);
            let s = schreier_graph(a, n);
            (triple_diffs(&g, &s), json!({"vers_edges": g.edge_count(), "oracle_edges": s.edge_count()}))
        }
        SpecBody::Ifs(f) => {
            let (diffs, a, b) = ifs_intersection_diffs(f, n)?;
            (diffs, json!({"adjacent_pairs": a, "intersecting_pairs": b}))
        }
        SpecBody::Ers(e) => {
            let g = gamma(&vers_from_ers(e)?, n);
            let s = subdivided_expansion(e, n);
            (triple_diffs(&g, &s), json!({"vers_edges": g.edge_count(), "oracle_edges": s.edge_count()}))
        }
    };
    let mut details = details;
    let obj = details.as_object_mut().expect("details are objects");
    obj.insert("kind".into(), json!(doc.kind().name()));
    obj.insert("level".into(), json!(n));
    obj.insert("equal".into(), json!(diffs.is_empty()));
    obj.insert("diffs".into(), json!(diffs));
    let verdict = if diffs.is_empty() { Verdict::Holds } else { Verdict::Fails };
    Ok(Report::new("oracle", doc.digest.clone(), verdict, details))
}
