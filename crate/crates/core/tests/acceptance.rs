//! Acceptance criteria, one line of output per criterion.
//!
//! Runs without the libtest harness so the PASS/FAIL lines are always
//! printed. The process exits non-zero if any criterion fails other than
//! those in [`KNOWN_FAILURES`], or if one of those unexpectedly passes.

use std::collections::{BTreeSet, HashMap};
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vers_core::bundled;
use vers_core::document::{parse_spec, SpecBody};
use vers_core::ers::{is_expanding_ers, subdivided_expansion, vers_from_ers, Ers};
use vers_core::hyperbolicity::{find_expanding_constant, find_geodesic_squares, is_n_expanding, verify_witness, ExpandingOptions, PathOptions};
use vers_core::ifs::{ifs_power, post_critical_closure, ratio_condition_check, vers_from_ifs, Address, FieldScalar, PcfIfs};
use vers_core::report::ifs_intersection_diffs;
use vers_core::selfsimilar::{schreier_graph, vers_from_automaton, WreathAutomaton};
use vers_core::{at_distance, gamma, graph_equal, history, HVertex, HistoryTruncation, Vers};

/// Wall-clock budgets. Release-mode figures; the test profile is optimized.
const BUDGET_SCHREIER: Duration = Duration::from_secs(5);
const BUDGET_IFS_INTERSECTION: Duration = Duration::from_secs(30);
const BUDGET_ERS_CORRESPONDENCE: Duration = Duration::from_secs(10);

const SCHREIER_MAX_LEVEL: usize = 8;
const IFS_MAX_LEVEL: usize = 5;
const ERS_MAX_LEVEL: usize = 8;
const SIERPINSKI_SQUARE_DEPTH: usize = 10;
const ERS_EXPANDING_SEARCH: usize = 8;
const ERS_SQUARE_DEPTH: usize = 12;
const ODOMETER_DEPTH: usize = 8;
const ODOMETER_MAX_SQUARE: usize = 3;
const RANDOM_PAIRS: usize = 1000;
const SEED: u64 = 0x5eed_0001;

/// Criteria that cannot hold as stated. Criterion 10: the history
/// predecessor drops the first letter of the tree word, which on the
/// odometer cycle is `x -> x / 2`, so the ancestors `n` levels above two
/// vertices at distance `n` are at distance at most 1 and no `n`-square
/// exists for `n >= 2`.
const KNOWN_FAILURES: [usize; 1] = [10];

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn automaton(name: &str) -> WreathAutomaton {
    match parse_spec(bundled::get(name).unwrap().as_bytes()).unwrap().body {
        SpecBody::Automaton(a) => a,
        _ => panic!("{name} is not an automaton"),
    }
}

fn ifs(name: &str) -> PcfIfs {
    match parse_spec(bundled::get(name).unwrap().as_bytes()).unwrap().body {
        SpecBody::Ifs(f) => f,
        _ => panic!("{name} is not an IFS"),
    }
}

fn ers(name: &str) -> Ers {
    match parse_spec(bundled::get(name).unwrap().as_bytes()).unwrap().body {
        SpecBody::Ers(e) => e,
        _ => panic!("{name} is not an ERS"),
    }
}

fn bundled_vers() -> Vec<(&'static str, Vers)> {
    bundled::names()
        .map(|name| {
            let v = match parse_spec(bundled::get(name).unwrap().as_bytes()).unwrap().body {
                SpecBody::Automaton(a) => vers_from_automaton(&a).unwrap(),
                SpecBody::Ifs(f) => vers_from_ifs(&f, false).unwrap().vers,
                SpecBody::Ers(e) => vers_from_ers(&e).unwrap(),
                SpecBody::Vers(v) => v,
            };
            (name, v)
        })
        .collect()
}

fn c1_schreier_equality() -> Outcome {
    let start = Instant::now();
    for name in ["basilica-automaton", "grigorchuk-automaton"] {
        let a = automaton(name);
        let v = vers_from_automaton(&a).unwrap();
        for n in 1..=SCHREIER_MAX_LEVEL {
            ensure(graph_equal(&gamma(&v, n), &schreier_graph(&a, n)), || format!("{name}: level {n} differs"))?;
        }
    }
    let t = start.elapsed();
    ensure(t < BUDGET_SCHREIER, || format!("took {t:?}, budget {BUDGET_SCHREIER:?}"))?;
    Ok(format!("basilica, grigorchuk, n <= {SCHREIER_MAX_LEVEL}, {t:.2?}"))
}

fn c2_no_parallel_same_color() -> Outcome {
    for name in ["basilica-automaton", "grigorchuk-automaton"] {
        let v = vers_from_automaton(&automaton(name)).unwrap();
        for n in 1..=SCHREIER_MAX_LEVEL {
            let g = gamma(&v, n);
            let mut seen = BTreeSet::new();
            for (f, t, c) in g.edge_triples() {
                ensure(seen.insert((f, t, c)), || format!("{name}, level {n}: two {c}-edges {f} -> {t}"))?;
            }
        }
    }
    Ok(format!("n <= {SCHREIER_MAX_LEVEL}"))
}

fn c3_grigorchuk_not_expanding() -> Outcome {
    let v = vers_from_automaton(&automaton("grigorchuk-automaton")).unwrap();
    let allowed: Vec<String> = ["b", "c", "d"].map(String::from).into();
    let opts = ExpandingOptions {
        paths: PathOptions { colors: Some(allowed.clone()), ..PathOptions::default() },
        ..ExpandingOptions::default()
    };
    let mut found = Vec::new();
    for n in 1..=3 {
        let verdict = is_n_expanding(&v, n, &opts).unwrap();
        let w = verdict.witness().ok_or_else(|| format!("n = {n}: no witness"))?;
        ensure(w.path.colors.iter().all(|c| allowed.contains(c)), || format!("n = {n}: witness uses {:?}", w.path.colors))?;
        ensure(verify_witness(&v, n, w).unwrap(), || format!("n = {n}: witness does not re-verify"))?;
        found.push(w.path.colors.join(""));
    }
    Ok(format!("witness paths {}", found.join(", ")))
}

fn c4_sierpinski_colors() -> Outcome {
    let f = ifs("sierpinski-ifs");
    let v = vers_from_ifs(&f, false).unwrap();
    let got: BTreeSet<&str> = v.vers.colors().iter().map(String::as_str).collect();
    let want: BTreeSet<&str> = ["c0", "(1,2)_a", "(1,3)_b", "(2,3)_c", "[l,r]_{1,2}", "[l,t]_{1,3}", "[r,t]_{2,3}"].into();
    ensure(got == want, || format!("colors {got:?}"))?;
    Ok(format!("{} colors", got.len()))
}

fn c5_ifs_intersection() -> Outcome {
    let f = ifs("sierpinski-ifs");
    let start = Instant::now();
    let mut pairs = 0;
    for n in 1..=IFS_MAX_LEVEL {
        let (diffs, adjacent, intersecting) = ifs_intersection_diffs(&f, n).unwrap();
        ensure(diffs.is_empty(), || format!("level {n}: {diffs:?}"))?;
        ensure(adjacent == intersecting, || format!("level {n}: {adjacent} vs {intersecting}"))?;
        pairs += adjacent;
    }
    let t = start.elapsed();
    ensure(t < BUDGET_IFS_INTERSECTION, || format!("took {t:?}, budget {BUDGET_IFS_INTERSECTION:?}"))?;
    Ok(format!("n <= {IFS_MAX_LEVEL}, {pairs} adjacent pairs, {t:.2?}"))
}

fn c6_post_critical() -> Outcome {
    let f = ifs("sierpinski-ifs");
    let (pc, pcrit) = post_critical_closure(&f);
    let want_pc: Vec<Address> = (0..3).map(|x| Address::new(vec![x], vec![]).unwrap()).collect();
    ensure(pc == want_pc, || format!("PC = {pc:?}"))?;
    let q = |a: i64, b: i64, r: i64, s: i64| {
        FieldScalar::new(num_rational::BigRational::new(a.into(), b.into()), num_rational::BigRational::new(r.into(), s.into()), 3)
    };
    let want: BTreeSet<Vec<FieldScalar>> =
        [vec![q(0, 1, 0, 1), q(0, 1, 0, 1)], vec![q(1, 1, 0, 1), q(0, 1, 0, 1)], vec![q(1, 2, 0, 1), q(0, 1, 1, 2)]].into();
    let got: BTreeSet<Vec<FieldScalar>> = pcrit.into_iter().collect();
    ensure(got == want, || format!("PCrit = {got:?}"))?;
    ensure(ratio_condition_check(&f), || "ratio condition fails".into())?;
    let v = vers_from_ifs(&f, false).unwrap();
    let squares = find_geodesic_squares(&history(&v.vers, SIERPINSKI_SQUARE_DEPTH), 2).unwrap();
    ensure(squares.is_empty(), || format!("2-square with corners {:?}", squares[0].corners))?;
    Ok(format!("PC, PCrit exact; ratio condition holds; no 2-squares to depth {SIERPINSKI_SQUARE_DEPTH}"))
}

fn c7_power_lemma() -> Outcome {
    let f = ifs("sierpinski-ifs");
    let base: BTreeSet<&Vec<FieldScalar>> = f.post_critical_points().into_iter().collect();
    for k in [2, 3] {
        let p = ifs_power(&f, k).unwrap();
        for q in p.post_critical_points() {
            ensure(base.contains(q), || format!("k = {k}: {} not post-critical for the base", f.point_name(q)))?;
        }
    }
    Ok("k in {2, 3}".into())
}

fn c8_ers_correspondence() -> Outcome {
    let e = ers("basilica-ers");
    let v = vers_from_ers(&e).unwrap();
    let start = Instant::now();
    for n in 1..=ERS_MAX_LEVEL {
        ensure(graph_equal(&gamma(&v, n), &subdivided_expansion(&e, n)), || format!("level {n} differs"))?;
    }
    let t = start.elapsed();
    ensure(t < BUDGET_ERS_CORRESPONDENCE, || format!("took {t:?}, budget {BUDGET_ERS_CORRESPONDENCE:?}"))?;
    Ok(format!("n <= {ERS_MAX_LEVEL}, {t:.2?}"))
}

fn c9_ers_expanding() -> Outcome {
    let e = ers("basilica-ers");
    ensure(is_expanding_ers(&e).is_ok(), || "basilica ERS is not expanding".into())?;
    let v = vers_from_ers(&e).unwrap();
    // Unrestricted abstract paths include a barycenter with two ι-halves,
    // which no Γ_m contains and whose endpoints stay at distance n forever.
    let opts = ExpandingOptions { paths: PathOptions { realizable: true, ..PathOptions::default() }, ..ExpandingOptions::default() };
    let n = find_expanding_constant(&v, ERS_EXPANDING_SEARCH, &opts)
        .unwrap()
        .ok_or_else(|| format!("no expanding constant up to {ERS_EXPANDING_SEARCH}"))?;
    let squares = find_geodesic_squares(&history(&v, ERS_SQUARE_DEPTH), n).unwrap();
    ensure(squares.is_empty(), || format!("{n}-square with corners {:?}", squares[0].corners))?;
    Ok(format!("expanding constant {n}; no {n}-squares to depth {ERS_SQUARE_DEPTH}"))
}

fn c10_odometer_squares() -> Outcome {
    let v = vers_from_automaton(&automaton("odometer-automaton")).unwrap();
    let h = history(&v, ODOMETER_DEPTH);
    let counts: Vec<usize> = (1..=ODOMETER_MAX_SQUARE + 1).map(|n| find_geodesic_squares(&h, n).unwrap().len()).collect();
    for n in 1..=ODOMETER_MAX_SQUARE {
        ensure(counts[n] == 0 || counts[n - 1] > 0, || format!("{}-squares present but no {n}-squares", n + 1))?;
    }
    let missing: Vec<usize> = (1..=ODOMETER_MAX_SQUARE).filter(|&n| counts[n - 1] == 0).collect();
    ensure(missing.is_empty(), || format!("square counts for n = 1..={}: {counts:?}; none of size {missing:?}", ODOMETER_MAX_SQUARE + 1))?;
    Ok(format!("square counts {counts:?}"))
}

type DistanceCache = HashMap<(usize, usize, u32), Vec<Option<usize>>>;

fn level_distances(h: &HistoryTruncation, key: usize, level: usize, cache: &mut DistanceCache, src: u32) -> Vec<Option<usize>> {
    cache
        .entry((key, level, src))
        .or_insert_with(|| {
            let g = h.level_graph(level);
            g.distances_from(src as usize)
        })
        .clone()
}

fn c11_lift_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let all = bundled_vers();
    let depth = 6;
    let hs: Vec<(&str, HistoryTruncation)> = all.iter().map(|(n, v)| (*n, history(v, depth))).collect();
    let mut cache = HashMap::new();
    let mut checked = 0;
    for i in 0..RANDOM_PAIRS {
        let key = i % hs.len();
        let (name, h) = &hs[key];
        let level = rng.gen_range(1..=depth);
        let size = h.level_size(level) as u32;
        let (a, b) = (rng.gen_range(0..size), rng.gen_range(0..size));
        let (u, v) = (HVertex { level, index: a }, HVertex { level, index: b });
        let (pu, pv) = (h.pred(u).unwrap(), h.pred(v).unwrap());
        let d = level_distances(h, key, level, &mut cache, a)[b as usize];
        let dp = level_distances(h, key, level - 1, &mut cache, pu.index)[pv.index as usize];
        match (d, dp) {
            (Some(d), Some(dp)) => ensure(dp <= d, || format!("{name}: {} -- {} at {d}, predecessors at {dp}", h.id(u), h.id(v)))?,
            (Some(_), None) => return Err(format!("{name}: predecessors of connected pair are disconnected")),
            (None, _) => continue,
        }
        checked += 1;
    }
    Ok(format!("{checked} connected pairs over {} histories", hs.len()))
}

fn c12_truncation_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let all = bundled_vers();
    let levels = [2usize, 3, 4];
    let mut agree = 0;
    let per = RANDOM_PAIRS.div_ceil(all.len() * levels.len());
    for (name, v) in &all {
        for &m in &levels {
            let (hm, hd) = (history(v, m), history(v, m + 2));
            for _ in 0..per {
                let lu = m;
                let lv = rng.gen_range(0..=m);
                let u = HVertex { level: lu, index: rng.gen_range(0..hm.level_size(lu) as u32) };
                let w = HVertex { level: lv, index: rng.gen_range(0..hm.level_size(lv) as u32) };
                let (wu, ww) = (hm.word(u), hm.word(w));
                let shallow = at_distance(&hm, &wu, &ww).unwrap();
                let deep_u = hd.find(&wu).unwrap();
                let deep_w = hd.find(&ww).unwrap();
                let deep = hd.truncation_distance(deep_u, deep_w);
                ensure(shallow == deep, || format!("{name}: {wu} -- {ww}: {shallow:?} at depth {m}, {deep:?} at depth {}", m + 2))?;
                agree += 1;
            }
        }
    }
    Ok(format!("{agree} pairs agree"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("schreier equality", c1_schreier_equality),
        ("no same-colored parallel edges", c2_no_parallel_same_color),
        ("grigorchuk is not n-expanding", c3_grigorchuk_not_expanding),
        ("sierpinski color set", c4_sierpinski_colors),
        ("ifs intersection equivalence", c5_ifs_intersection),
        ("post-critical data and no 2-squares", c6_post_critical),
        ("power lemma", c7_power_lemma),
        ("ers subdivision correspondence", c8_ers_correspondence),
        ("ers expansivity and no squares", c9_ers_expanding),
        ("odometer square lifting", c10_odometer_squares),
        ("lift monotonicity", c11_lift_monotonicity),
        ("truncation exactness", c12_truncation_exactness),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = 0;
    panic::set_hook(Box::new(|_| {}));
    for (i, (name, run)) in criteria.iter().enumerate() {
        let label = format!("criterion {:>2}: {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let known = KNOWN_FAILURES.contains(&(i + 1));
        match outcome {
            Ok(detail) => {
                println!("PASS {label} ({detail})");
                if known {
                    unexpected += 1;
                    println!("     criterion {} is listed as a known failure but passed", i + 1);
                }
            }
            Err(detail) => {
                println!("FAIL {label} ({detail})");
                if known {
                    println!("     known failure, see KNOWN_FAILURES");
                } else {
                    unexpected += 1;
                }
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected outcomes");
        std::process::exit(1);
    }
}
