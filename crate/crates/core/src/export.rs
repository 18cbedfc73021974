//! Deterministic DOT, GraphML and JSON output.
//!
//! Output order is the graph's own vertex and edge order, which every
//! producer in this crate fixes independently of thread count.

use std::fmt::Write;

use crate::graph::TypedGraph;
use crate::history::{HistoryTruncation, VERTICAL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Dot,
    GraphMl,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dot" => Ok(Format::Dot),
            "graphml" => Ok(Format::GraphMl),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format {s:?} (expected dot, graphml or json)")),
        }
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;").replace('\'', "&apos;")
}

/// Horizontal edges are solid and labeled with their color; edges colored
/// [`VERTICAL`] are dashed.
pub fn to_dot(g: &TypedGraph) -> String {
    let mut out = String::from("digraph G {\n");
    for v in g.vertices() {
        writeln!(out, "  \"{}\" [type=\"{}\"];", dot_escape(&v.id), dot_escape(&v.ty)).unwrap();
    }
    for e in g.edges() {
        let (f, t) = g.endpoints(e);
        let style = if e.color == VERTICAL {
            "style=dashed".to_string()
        } else {
            format!("style=solid, label=\"{}\"", dot_escape(&e.color))
        };
        writeln!(out, "  \"{}\" -> \"{}\" [id=\"{}\", {style}];", dot_escape(f), dot_escape(t), dot_escape(&e.id)).unwrap();
    }
    out.push_str("}\n");
    out
}

pub fn to_graphml(g: &TypedGraph) -> String {
    let mut out = String::from(concat!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n",
        "  <key id=\"type\" for=\"node\" attr.name=\"type\" attr.type=\"string\"/>\n",
        "  <key id=\"color\" for=\"edge\" attr.name=\"color\" attr.type=\"string\"/>\n",
        "  <graph id=\"G\" edgedefault=\"directed\">\n",
    ));
    for v in g.vertices() {
        writeln!(out, "    <node id=\"{}\"><data key=\"type\">{}</data></node>", xml_escape(&v.id), xml_escape(&v.ty)).unwrap();
    }
    for e in g.edges() {
        let (f, t) = g.endpoints(e);
        writeln!(
            out,
            "    <edge id=\"{}\" source=\"{}\" target=\"{}\"><data key=\"color\">{}</data></edge>",
            xml_escape(&e.id),
            xml_escape(f),
            xml_escape(t),
            xml_escape(&e.color)
        )
        .unwrap();
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

pub fn to_json(g: &TypedGraph) -> String {
    let mut s = serde_json::to_string_pretty(&g.to_document()).expect("graph documents serialize");
    s.push('\n');
    s
}

pub fn export(g: &TypedGraph, format: Format) -> String {
    match format {
        Format::Dot => to_dot(g),
        Format::GraphMl => to_graphml(g),
        Format::Json => to_json(g),
    }
}

/// Exports all levels with vertical edges marked as in [`HistoryTruncation::to_graph`].
pub fn export_history(h: &HistoryTruncation, format: Format) -> String {
    export(&h.to_graph(), format)
}
