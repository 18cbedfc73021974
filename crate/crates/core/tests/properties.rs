//! Property tests over random graphs, random edge replacement systems and
//! the bundled documents.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use proptest::prelude::*;

use vers_core::bundled;
use vers_core::document::{parse_spec, SpecBody};
use vers_core::ers::{subdivided_expansion, vers_from_ers, Ers, ErsDefinition};
use vers_core::history::VERTICAL;
use vers_core::ifs::{cell_intersection_oracle, cell_membership, ifs_power, vers_from_ifs, IfsColor, PcfIfs};
use vers_core::{
    barycentric_subdivision, bfs_distance, gamma, graph_equal, history, spanning_lift, tree_power, HVertex, TypedGraph, Vers,
};

fn body(name: &str) -> SpecBody {
    parse_spec(bundled::get(name).unwrap().as_bytes()).unwrap().body
}

fn vers(name: &str) -> Vers {
    match body(name) {
        SpecBody::Automaton(a) => vers_core::selfsimilar::vers_from_automaton(&a).unwrap(),
        SpecBody::Ifs(f) => vers_from_ifs(&f, false).unwrap().vers,
        SpecBody::Ers(e) => vers_from_ers(&e).unwrap(),
        SpecBody::Vers(v) => v,
    }
}

fn ifs(name: &str) -> PcfIfs {
    match body(name) {
        SpecBody::Ifs(f) => f,
        _ => panic!("{name} is not an IFS"),
    }
}

fn all_vers() -> Vec<(&'static str, Vers)> {
    bundled::names().map(|n| (n, vers(n))).collect()
}

fn small_graph() -> impl Strategy<Value = TypedGraph> {
    (1usize..8).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, prop::bool::ANY), 0..14).prop_map(move |edges| {
            let mut g = TypedGraph::new();
            for i in 0..n {
                g.add_vertex(format!("v{i}"), "t").unwrap();
            }
            for (k, (a, b, red)) in edges.into_iter().enumerate() {
                g.add_edge(format!("e{k}"), &format!("v{a}"), &format!("v{b}"), if red { "r" } else { "b" }).unwrap();
            }
            g
        })
    })
}

/// All-pairs undirected distances by Floyd–Warshall.
fn floyd_warshall(g: &TypedGraph) -> Vec<Vec<Option<usize>>> {
    let n = g.vertex_count();
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for e in g.edges() {
        if e.from != e.to {
            d[e.from][e.to] = Some(1);
            d[e.to][e.from] = Some(1);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subdivision_counts_and_bipartition(g in small_graph()) {
        let b = barycentric_subdivision(&g);
        prop_assert_eq!(b.vertex_count(), g.vertex_count() + g.edge_count());
        prop_assert_eq!(b.edge_count(), 2 * g.edge_count());
        for e in b.edges() {
            let (from, to) = b.endpoints(e);
            let (tf, tt) = (b.vertex_type(from).unwrap(), b.vertex_type(to).unwrap());
            // Exactly one endpoint of each half is an original vertex.
            prop_assert!(g.contains_vertex(from) != g.contains_vertex(to), "{} -> {} ({} -> {})", from, to, tf, tt);
        }
        for v in g.vertices() {
            let degree = g.edges().iter().map(|e| (e.from == g.vertex_index(&v.id).unwrap()) as usize + (e.to == g.vertex_index(&v.id).unwrap()) as usize).sum::<usize>();
            let i = b.vertex_index(&v.id).unwrap();
            let bdegree = b.edges().iter().filter(|e| e.from == i || e.to == i).count();
            prop_assert_eq!(degree, bdegree);
        }
    }

    #[test]
    fn bfs_matches_floyd_warshall(g in small_graph()) {
        let d = floyd_warshall(&g);
        for (i, u) in g.vertices().iter().enumerate() {
            for (j, v) in g.vertices().iter().enumerate() {
                prop_assert_eq!(bfs_distance(&g, &u.id, &v.id).unwrap(), d[i][j]);
                prop_assert_eq!(g.distances_from(i)[j], d[i][j]);
            }
        }
    }

    #[test]
    fn lifting_never_increases_distance(which in 0usize..6, level in 1usize..6, a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let (_, v) = &all_vers()[which];
        let h = history(v, level);
        let size = h.level_size(level);
        let (u, w) = (HVertex { level, index: a.index(size) as u32 }, HVertex { level, index: b.index(size) as u32 });
        let g = h.level_graph(level);
        let gp = h.level_graph(level - 1);
        let d = g.distances_from(u.index as usize)[w.index as usize];
        let (pu, pw) = (h.pred(u).unwrap(), h.pred(w).unwrap());
        let dp = gp.distances_from(pu.index as usize)[pw.index as usize];
        if let Some(d) = d {
            prop_assert!(dp.is_some_and(|dp| dp <= d), "{:?} vs {:?}", dp, d);
        }
    }
}

/// Letter paths of length `n` from the start type.
fn word_count(v: &Vers, n: usize) -> usize {
    let sigma = &v.definition().sigma;
    let mut count: HashMap<&str, usize> = HashMap::from([(sigma.start.as_str(), 1)]);
    for _ in 0..n {
        let mut next = HashMap::new();
        for l in &sigma.edges {
            if let Some(&c) = count.get(l.from.as_str()) {
                *next.entry(l.to.as_str()).or_insert(0) += c;
            }
        }
        count = next;
    }
    count.values().sum()
}

/// Edges of `Γ_n` counted by color through the replacement rules.
fn edge_count(v: &Vers, n: usize) -> usize {
    let mut count: BTreeMap<String, usize> = BTreeMap::new();
    for c in &v.definition().base {
        *count.entry(c.clone()).or_insert(0) += 1;
    }
    for _ in 0..n {
        let mut next = BTreeMap::new();
        for (c, k) in &count {
            for e in &v.replacement(c).unwrap().edges {
                *next.entry(e.color.clone()).or_insert(0) += k;
            }
        }
        count = next;
    }
    count.values().sum()
}

#[test]
fn level_sizes_follow_the_shift_and_the_rules() {
    for (name, v) in all_vers() {
        for n in 0..=5 {
            let g = gamma(&v, n);
            assert_eq!(g.vertex_count(), word_count(&v, n), "{name}, n = {n}");
            assert_eq!(g.edge_count(), edge_count(&v, n), "{name}, n = {n}");
        }
    }
}

/// Random ERS with colors `p`, `q`; replacement graphs never join ι to τ
/// directly, and the base graph may have loops.
fn random_ers() -> impl Strategy<Value = Ers> {
    let replacement = (0usize..3).prop_flat_map(|inner| {
        let n = inner + 2;
        prop::collection::vec((0..n, 0..n, prop::bool::ANY), 1..5).prop_map(move |edges| (n, edges))
    });
    let base = prop::collection::vec((0usize..2, 0usize..2, prop::bool::ANY), 1..3);
    (prop::bool::ANY, replacement.clone(), replacement, base).prop_filter_map("invalid ERS", |(two, rp, rq, base)| {
        let colors: Vec<&str> = if two { vec!["p", "q"] } else { vec!["p"] };
        let color = |flag: bool| if two && flag { "q" } else { "p" };
        let graph = |(n, edges): &(usize, Vec<(usize, usize, bool)>)| {
            let names: Vec<String> = (0..*n).map(|i| match i { 0 => "i".into(), 1 => "t".into(), _ => format!("m{i}") }).collect();
            let edges: Vec<serde_json::Value> = edges
                .iter()
                .enumerate()
                .filter(|(_, &(a, b, _))| !matches!((a, b), (0, 1) | (1, 0)))
                .map(|(k, &(a, b, f))| serde_json::json!({ "id": format!("{k}"), "from": names[a], "to": names[b], "color": color(f) }))
                .collect();
            serde_json::json!({ "graph": { "vertices": names, "edges": edges }, "iota": "i", "tau": "t" })
        };
        let mut replacements = serde_json::Map::new();
        replacements.insert("p".into(), graph(&rp));
        if two {
            replacements.insert("q".into(), graph(&rq));
        }
        let base_edges: Vec<serde_json::Value> = base
            .iter()
            .enumerate()
            .map(|(k, &(a, b, f))| serde_json::json!({ "id": format!("B{k}"), "from": format!("x{a}"), "to": format!("x{b}"), "color": color(f) }))
            .collect();
        let def = serde_json::json!({
            "colors": colors,
            "base": { "vertices": ["x0", "x1"], "edges": base_edges },
            "replacements": replacements,
        });
        let def: ErsDefinition = serde_json::from_value(def).ok()?;
        Ers::new(def).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ers_levels_are_subdivided_expansions(e in random_ers()) {
        let v = vers_from_ers(&e).unwrap();
        for n in 1..=3 {
            prop_assert!(graph_equal(&gamma(&v, n), &subdivided_expansion(&e, n)), "level {}", n);
        }
    }

    /// The cells joined by an edge meet where the cells joined by its
    /// spanning lift meet, unless the lift is a loop.
    #[test]
    fn intersection_points_persist_under_lifts(right in prop::bool::ANY, level in 2usize..5, pick in any::<prop::sample::Index>()) {
        let f = ifs(if right { "sierpinski-right-ifs" } else { "sierpinski-ifs" });
        let h = history(&vers_from_ifs(&f, false).unwrap().vers, level);
        let edges: Vec<_> = h.horizontal_edges(level).filter(|&e| { let (a, b) = h.endpoints(e); a != b }).collect();
        let e = edges[pick.index(edges.len())];
        let reading = |v: HVertex| -> Vec<usize> {
            h.word(v).letters().iter().rev().map(|l| f.letter_index(l).unwrap()).collect()
        };
        let (a, b) = h.endpoints(e);
        let here = cell_intersection_oracle(&f, &reading(a), &reading(b)).unwrap();
        prop_assert_eq!(here.len(), 1);
        let lift = spanning_lift(&h, e).unwrap();
        let (la, lb) = h.endpoints(lift);
        if la != lb {
            let there = cell_intersection_oracle(&f, &reading(la), &reading(lb)).unwrap();
            prop_assert_eq!(here, there);
        }
    }
}

#[test]
fn colors_carry_consistent_point_data() {
    for name in ["sierpinski-ifs", "sierpinski-right-ifs"] {
        let f = ifs(name);
        let crit: BTreeSet<_> = f.critical_points().into_iter().collect();
        let pcrit: BTreeSet<_> = f.post_critical_points().into_iter().collect();
        for full in [false, true] {
            let v = vers_from_ifs(&f, full).unwrap();
            for (c, meaning) in v.vers.colors().iter().zip(&v.colors) {
                assert_eq!(&meaning.name(&f), c);
                match *meaning {
                    IfsColor::Base => assert_eq!(c, "c0"),
                    IfsColor::Crit { x, y, p } => {
                        assert!(x < y && c.starts_with('('));
                        let p = f.point(p);
                        assert!(crit.contains(p));
                        assert!(cell_membership(&f, p, x).unwrap() && cell_membership(&f, p, y).unwrap());
                    }
                    IfsColor::PCrit { x, y, p, q } => {
                        assert!(x < y && c.starts_with('['));
                        let (p, q) = (f.point(p), f.point(q));
                        assert!(pcrit.contains(p) && pcrit.contains(q));
                        assert!(cell_membership(&f, p, x).unwrap() && cell_membership(&f, q, y).unwrap());
                    }
                }
            }
        }
    }
}

/// `tree_power(history(R_Φ, 2k), k)` against `history(R_{Φ^k}, 2)`, after
/// renaming each level-`jk` vertex to its word of `k`-letter blocks and
/// forgetting colors.
#[test]
fn tree_power_matches_power_history() {
    let f = ifs("sierpinski-ifs");
    for k in [2usize, 3] {
        let p = ifs_power(&f, k).unwrap();
        let power = history(&vers_from_ifs(&p, false).unwrap().vers, 2).to_graph();
        let tower = tree_power(&history(&vers_from_ifs(&f, false).unwrap().vers, 2 * k), k);
        // Reading words of Φ split into blocks of k are reading words of Φ^k.
        let rename = |id: &str| -> String {
            let reading: String = id.split('.').filter(|s| !s.is_empty()).rev().collect();
            let blocks: Vec<String> = reading.as_bytes().chunks(k).map(|c| String::from_utf8(c.to_vec()).unwrap()).collect();
            blocks.into_iter().rev().collect::<Vec<_>>().join(".")
        };
        let shape = |g: &TypedGraph, map: &dyn Fn(&str) -> String| -> (BTreeSet<String>, BTreeMap<(String, String, bool), usize>) {
            let vs = g.vertices().iter().map(|v| map(&v.id)).collect();
            let mut es = BTreeMap::new();
            for e in g.edges() {
                let (a, b) = g.endpoints(e);
                *es.entry((map(a), map(b), e.color == VERTICAL)).or_insert(0) += 1;
            }
            (vs, es)
        };
        assert_eq!(shape(&tower, &rename), shape(&power, &|s: &str| s.to_string()), "k = {k}");
    }
}
