//! Affine post-critically finite iterated function systems over ℚ(√d).
//!
//! Words are in reading order with the leftmost letter applied first, so
//! `K_{xw}` is the image of `K_x` under `φ_w`. An [`Address`] `u^{-ω}v`
//! denotes the left-infinite word `…uuv`; its rightmost letter is applied
//! last.

pub mod field;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use field::FieldScalar;
pub use crate::history::tree_power;

use crate::vers::{Marker, ReplacementGraph, Shift, Slot, Vers, VersDefinition, VersError};
use field::{is_square_free, parse_rational};

pub type Point = Vec<FieldScalar>;

/// Name of the color carried by the base loop.
pub const BASE_COLOR: &str = "c0";
/// The single Σ-vertex of the full shift.
pub const SHIFT_TYPE: &str = "s";

#[derive(Debug, Error)]
pub enum IfsError {
    #[error("sqrt parameter {0} is not a square-free positive integer")]
    BadRadicand(u32),
    #[error("cannot parse scalar {0:?}")]
    BadScalar(String),
    #[error("map {map}: {msg}")]
    BadMap { map: usize, msg: String },
    #[error("map {0} is not invertible")]
    Singular(usize),
    #[error("map {0} has certified ratio at least 1")]
    NotContracting(usize),
    #[error("the alphabet is empty")]
    EmptyAlphabet,
    #[error("letter names must be unique, non-empty and free of '.'; got {0:?}")]
    BadLetter(String),
    #[error("unknown letter {0:?}")]
    UnknownLetter(String),
    #[error("address has an empty period")]
    EmptyPeriod,
    #[error("identification {index}: {alpha} and {beta} evaluate to different points")]
    IdentificationMismatch { index: usize, alpha: String, beta: String },
    #[error("identification {index}: both addresses end in letter {letter:?}")]
    SameCell { index: usize, letter: String },
    #[error("point {0} is not in the critical/post-critical database")]
    NotInDatabase(String),
    #[error("color {color}: both preimages lie in cell {letter:?}")]
    SamePreimageCell { color: String, letter: String },
    #[error("words must have equal length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("words must differ")]
    EqualWords,
    #[error("ratio override {0} is not in [certified ratio, 1)")]
    BadRatio(String),
    #[error(transparent)]
    Vers(#[from] VersError),
}

/// A scalar in a document: an integer, a rational string, or `{"a", "b"}`
/// for `a + b√d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarDoc {
    Int(i64),
    Text(String),
    Parts {
        #[serde(default)]
        a: Option<String>,
        #[serde(default)]
        b: Option<String>,
    },
}

impl ScalarDoc {
    fn to_scalar(&self, d: u32) -> Result<FieldScalar, IfsError> {
        let rat = |s: &Option<String>| match s {
            None => Ok(BigRational::zero()),
            Some(t) => parse_rational(t).ok_or_else(|| IfsError::BadScalar(t.clone())),
        };
        match self {
            ScalarDoc::Int(n) => Ok(FieldScalar::rational(BigRational::from_integer((*n).into()), d)),
            ScalarDoc::Text(t) => {
                Ok(FieldScalar::rational(parse_rational(t).ok_or_else(|| IfsError::BadScalar(t.clone()))?, d))
            }
            ScalarDoc::Parts { a, b } => Ok(FieldScalar::new(rat(a)?, rat(b)?, d)),
        }
    }

    fn from_scalar(s: &FieldScalar) -> ScalarDoc {
        let r = |q: &BigRational| if q.is_integer() { q.numer().to_string() } else { format!("{}/{}", q.numer(), q.denom()) };
        if s.radical_part().is_zero() {
            ScalarDoc::Text(r(s.rational_part()))
        } else {
            ScalarDoc::Parts { a: Some(r(s.rational_part())), b: Some(r(s.radical_part())) }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapDoc {
    #[serde(rename = "A")]
    pub a: Vec<Vec<ScalarDoc>>,
    pub b: Vec<ScalarDoc>,
}

/// Letters as a string (characters, or `.`-separated for longer names) or a list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LettersDoc {
    Text(String),
    List(Vec<String>),
}

impl Default for LettersDoc {
    fn default() -> Self {
        LettersDoc::Text(String::new())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressDoc {
    pub period: LettersDoc,
    #[serde(default)]
    pub tail: LettersDoc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentificationDoc {
    pub alpha: AddressDoc,
    pub beta: AddressDoc,
}

fn default_sqrt() -> u32 {
    1
}

/// Unvalidated IFS, mirroring the JSON document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IfsDocument {
    pub dimension: usize,
    #[serde(default = "default_sqrt")]
    pub sqrt: u32,
    pub maps: Vec<MapDoc>,
    pub critical: Vec<IdentificationDoc>,
    /// Letter names; defaults to `1..=N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub letters: Option<Vec<String>>,
    /// Optional names for points, used in color names.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, Vec<ScalarDoc>>,
    /// Contraction ratio to use instead of the certified one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<String>,
}

type Matrix = Vec<Vec<FieldScalar>>;

/// Solves `m · x = rhs` for each right-hand column; `None` when singular.
fn solve(mut m: Matrix, mut rhs: Matrix) -> Option<Matrix> {
    let n = m.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        rhs.swap(col, piv);
        let inv = m[col][col].inverse()?;
        for v in m[col].iter_mut().chain(rhs[col].iter_mut()) {
            *v = &*v * &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..n {
                    m[r][c] = &m[r][c] - &(&f * &m[col][c]);
                }
                for c in 0..rhs[r].len() {
                    rhs[r][c] = &rhs[r][c] - &(&f * &rhs[col][c]);
                }
            }
        }
    }
    Some(rhs)
}

/// `x ↦ A x + b` on column vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineMap {
    pub a: Matrix,
    pub b: Point,
}

impl AffineMap {
    pub fn identity(dim: usize, d: u32) -> Self {
        let a = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { FieldScalar::one(d) } else { FieldScalar::zero(d) }).collect())
            .collect();
        AffineMap { a, b: vec![FieldScalar::zero(d); dim] }
    }

    fn dim(&self) -> usize {
        self.b.len()
    }

    fn radicand(&self) -> u32 {
        self.b[0].radicand()
    }

    pub fn apply(&self, p: &Point) -> Point {
        (0..self.dim())
            .map(|i| {
                self.a[i].iter().zip(p).fold(self.b[i].clone(), |acc, (x, y)| &acc + &(x * y))
            })
            .collect()
    }

    /// `self` first, then `next`.
    pub fn then(&self, next: &AffineMap) -> AffineMap {
        let n = self.dim();
        let a = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).fold(FieldScalar::zero(self.radicand()), |acc, k| &acc + &(&next.a[i][k] * &self.a[k][j])))
                    .collect()
            })
            .collect();
        AffineMap { a, b: next.apply(&self.b) }
    }

    pub fn inverse(&self) -> Option<AffineMap> {
        let n = self.dim();
        let d = self.radicand();
        let id = AffineMap::identity(n, d).a;
        let inv = solve(self.a.clone(), id)?;
        let neg_b: Point = self.b.iter().map(|x| -x).collect();
        let shifted = AffineMap { a: inv.clone(), b: vec![FieldScalar::zero(d); n] }.apply(&neg_b);
        Some(AffineMap { a: inv, b: shifted })
    }

    /// The unique solution of `p = A p + b`.
    pub fn fixed_point(&self) -> Option<Point> {
        let n = self.dim();
        let d = self.radicand();
        let m: Matrix = (0..n)
            .map(|i| (0..n).map(|j| &AffineMap::identity(n, d).a[i][j] - &self.a[i][j]).collect())
            .collect();
        let rhs = self.b.iter().map(|x| vec![x.clone()]).collect();
        Some(solve(m, rhs)?.into_iter().map(|mut r| r.remove(0)).collect())
    }

    /// Squared operator-norm bound: `μ` when `AᵀA = μI`, else `‖A‖_F²`.
    pub fn ratio_squared(&self) -> FieldScalar {
        let n = self.dim();
        let d = self.radicand();
        let ata: Matrix = (0..n)
            .map(|i| {
                (0..n).map(|j| (0..n).fold(FieldScalar::zero(d), |acc, k| &acc + &(&self.a[k][i] * &self.a[k][j]))).collect()
            })
            .collect();
        let mu = ata[0][0].clone();
        let similarity =
            (0..n).all(|i| (0..n).all(|j| if i == j { ata[i][j] == mu } else { ata[i][j].is_zero() }));
        if similarity {
            mu
        } else {
            (0..n).fold(FieldScalar::zero(d), |acc, i| &acc + &ata[i][i])
        }
    }
}

/// The left-infinite word `…uuu v`, normalized: `u` primitive and `v` as
/// short as possible.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address {
    period: Vec<usize>,
    tail: Vec<usize>,
}

impl Address {
    pub fn new(period: Vec<usize>, tail: Vec<usize>) -> Result<Self, IfsError> {
        if period.is_empty() {
            return Err(IfsError::EmptyPeriod);
        }
        let p = period.len();
        let root = (1..=p).find(|&q| p % q == 0 && (q..p).all(|i| period[i] == period[i - q])).unwrap();
        let mut period = period[..root].to_vec();
        let mut tail = std::collections::VecDeque::from(tail);
        // The letter just left of the tail continues the period.
        while tail.front() == Some(&period[0]) {
            tail.pop_front();
            period.rotate_left(1);
        }
        Ok(Address { period, tail: tail.into() })
    }

    pub fn period(&self) -> &[usize] {
        &self.period
    }

    pub fn tail(&self) -> &[usize] {
        &self.tail
    }

    /// Rightmost letter.
    pub fn last(&self) -> usize {
        *self.tail.last().unwrap_or_else(|| self.period.last().unwrap())
    }

    /// Drops the rightmost letter.
    pub fn shift(&self) -> Address {
        let mut a = self.clone();
        if a.tail.pop().is_none() {
            a.period.rotate_right(1);
        }
        a
    }

    /// `…uuv w`.
    pub fn append(&self, w: &[usize]) -> Address {
        let mut tail = self.tail.clone();
        tail.extend_from_slice(w);
        Address { period: self.period.clone(), tail }
    }

    /// Letter at position `i` counted from the right (0 is the rightmost).
    pub fn letter_from_right(&self, i: usize) -> usize {
        let t = self.tail.len();
        if i < t {
            self.tail[t - 1 - i]
        } else {
            let p = self.period.len();
            self.period[p - 1 - (i - t) % p]
        }
    }

    pub fn render(&self, letters: &[String]) -> String {
        format!("({})^-ω{}", join_letters(&self.period, letters), join_letters(&self.tail, letters))
    }
}

fn single_char(letters: &[String]) -> bool {
    letters.iter().all(|l| l.chars().count() == 1)
}

fn join_letters(w: &[usize], letters: &[String]) -> String {
    let sep = if single_char(letters) { "" } else { "." };
    w.iter().map(|&x| letters[x].as_str()).collect::<Vec<_>>().join(sep)
}

fn render_point(p: &Point) -> String {
    format!("({})", p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
}

/// Critical and post-critical points with their addresses.
#[derive(Debug, Clone, Default)]
struct PointDb {
    points: Vec<Point>,
    index: HashMap<Point, usize>,
    addresses: Vec<BTreeSet<Address>>,
    critical: Vec<Address>,
    post_critical: Vec<Address>,
    crit: Vec<usize>,
    pcrit: Vec<usize>,
    member: Vec<Vec<bool>>,
    preimage: Vec<Vec<Option<usize>>>,
}

/// A validated pcf IFS with its point database.
#[derive(Debug, Clone)]
pub struct PcfIfs {
    d: u32,
    letters: Vec<String>,
    maps: Vec<AffineMap>,
    identifications: Vec<(Address, Address)>,
    labels: Vec<(String, Point)>,
    ratio: Option<BigRational>,
    db: PointDb,
}

impl PcfIfs {
    pub fn new(
        d: u32,
        letters: Vec<String>,
        maps: Vec<AffineMap>,
        identifications: Vec<(Address, Address)>,
        labels: Vec<(String, Point)>,
        ratio: Option<BigRational>,
    ) -> Result<Self, IfsError> {
        if !is_square_free(d) {
            return Err(IfsError::BadRadicand(d));
        }
        if maps.is_empty() {
            return Err(IfsError::EmptyAlphabet);
        }
        let mut seen = BTreeSet::new();
        for l in &letters {
            if l.is_empty() || l.contains('.') || !seen.insert(l) {
                return Err(IfsError::BadLetter(l.clone()));
            }
        }
        if letters.len() != maps.len() {
            return Err(IfsError::BadLetter(format!("{} names for {} maps", letters.len(), maps.len())));
        }
        for (i, m) in maps.iter().enumerate() {
            m.inverse().ok_or(IfsError::Singular(i))?;
            if m.ratio_squared() >= FieldScalar::one(d) {
                return Err(IfsError::NotContracting(i));
            }
        }
        let mut f = PcfIfs { d, letters, maps, identifications, labels, ratio: None, db: PointDb::default() };
        if let Some(r) = ratio {
            let r2 = FieldScalar::rational(&r * &r, d);
            if r2 < f.certified_ratio_squared() || r >= BigRational::one() {
                return Err(IfsError::BadRatio(r.to_string()));
            }
            f.ratio = Some(r);
        }
        f.build_db()?;
        Ok(f)
    }

    pub fn from_document(doc: &IfsDocument) -> Result<Self, IfsError> {
        let d = doc.sqrt;
        if !is_square_free(d) {
            return Err(IfsError::BadRadicand(d));
        }
        let n = doc.maps.len();
        let letters = doc.letters.clone().unwrap_or_else(|| (1..=n).map(|i| i.to_string()).collect());
        let mut maps = Vec::with_capacity(n);
        for (i, m) in doc.maps.iter().enumerate() {
            let bad = |msg: &str| IfsError::BadMap { map: i, msg: msg.to_string() };
            if m.b.len() != doc.dimension || m.a.len() != doc.dimension {
                return Err(bad("dimension mismatch"));
            }
            let mut a = Vec::with_capacity(doc.dimension);
            for row in &m.a {
                if row.len() != doc.dimension {
                    return Err(bad("matrix is not square"));
                }
                a.push(row.iter().map(|x| x.to_scalar(d)).collect::<Result<Vec<_>, _>>()?);
            }
            let b = m.b.iter().map(|x| x.to_scalar(d)).collect::<Result<Vec<_>, _>>()?;
            maps.push(AffineMap { a, b });
        }
        let parse = |l: &LettersDoc| parse_letters_doc(l, &letters);
        let mut identifications = Vec::new();
        for c in &doc.critical {
            let alpha = Address::new(parse(&c.alpha.period)?, parse(&c.alpha.tail)?)?;
            let beta = Address::new(parse(&c.beta.period)?, parse(&c.beta.tail)?)?;
            identifications.push((alpha, beta));
        }
        let mut labels = Vec::new();
        for (name, coords) in &doc.labels {
            let p = coords.iter().map(|x| x.to_scalar(d)).collect::<Result<Vec<_>, _>>()?;
            labels.push((name.clone(), p));
        }
        let ratio = match &doc.ratio {
            None => None,
            Some(s) => Some(parse_rational(s).ok_or_else(|| IfsError::BadScalar(s.clone()))?),
        };
        PcfIfs::new(d, letters, maps, identifications, labels, ratio)
    }

    pub fn to_document(&self) -> IfsDocument {
        let scalar_rows = |m: &AffineMap| MapDoc {
            a: m.a.iter().map(|r| r.iter().map(ScalarDoc::from_scalar).collect()).collect(),
            b: m.b.iter().map(ScalarDoc::from_scalar).collect(),
        };
        let names = |w: &[usize]| LettersDoc::List(w.iter().map(|&x| self.letters[x].clone()).collect());
        let addr = |a: &Address| AddressDoc { period: names(&a.period), tail: names(&a.tail) };
        IfsDocument {
            dimension: self.dimension(),
            sqrt: self.d,
            maps: self.maps.iter().map(scalar_rows).collect(),
            critical: self.identifications.iter().map(|(a, b)| IdentificationDoc { alpha: addr(a), beta: addr(b) }).collect(),
            letters: Some(self.letters.clone()),
            labels: self.labels.iter().map(|(n, p)| (n.clone(), p.iter().map(ScalarDoc::from_scalar).collect())).collect(),
            ratio: self.ratio.as_ref().map(|r| r.to_string()),
        }
    }

    fn build_db(&mut self) -> Result<(), IfsError> {
        let critical: BTreeSet<Address> = self.identifications.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
        for (index, (a, b)) in self.identifications.iter().enumerate() {
            if a.last() == b.last() {
                return Err(IfsError::SameCell { index, letter: self.letters[a.last()].clone() });
            }
            if self.point_of_address(a) != self.point_of_address(b) {
                return Err(IfsError::IdentificationMismatch {
                    index,
                    alpha: a.render(&self.letters),
                    beta: b.render(&self.letters),
                });
            }
        }
        let mut post: BTreeSet<Address> = BTreeSet::new();
        let mut work: Vec<Address> = critical.iter().map(Address::shift).collect();
        while let Some(a) = work.pop() {
            if post.insert(a.clone()) {
                work.push(a.shift());
            }
        }
        let mut db = PointDb {
            critical: critical.iter().cloned().collect(),
            post_critical: post.iter().cloned().collect(),
            ..PointDb::default()
        };
        let intern = |db: &mut PointDb, a: &Address| -> usize {
            let p = self.point_of_address(a);
            let id = *db.index.entry(p.clone()).or_insert_with(|| {
                db.points.push(p);
                db.addresses.push(BTreeSet::new());
                db.points.len() - 1
            });
            db.addresses[id].insert(a.clone());
            id
        };
        let crit: BTreeSet<usize> = critical.iter().map(|a| intern(&mut db, a)).collect();
        let pcrit: BTreeSet<usize> = post.iter().map(|a| intern(&mut db, a)).collect();
        db.crit = crit.into_iter().collect();
        db.pcrit = pcrit.into_iter().collect();
        let n = self.letters.len();
        db.member = db.addresses.iter().map(|set| (0..n).map(|z| set.iter().any(|a| a.last() == z)).collect()).collect();
        let mut preimage = vec![vec![None; n]; db.points.len()];
        for (id, set) in db.addresses.iter().enumerate() {
            for a in set {
                let shifted = self.point_of_address(&a.shift());
                preimage[id][a.last()] = Some(db.index[&shifted]);
            }
        }
        db.preimage = preimage;
        self.db = db;
        Ok(())
    }

    pub fn radicand(&self) -> u32 {
        self.d
    }

    pub fn dimension(&self) -> usize {
        self.maps[0].dim()
    }

    pub fn letters(&self) -> &[String] {
        &self.letters
    }

    pub fn letter_count(&self) -> usize {
        self.letters.len()
    }

    pub fn map(&self, x: usize) -> &AffineMap {
        &self.maps[x]
    }

    pub fn letter_index(&self, name: &str) -> Result<usize, IfsError> {
        self.letters.iter().position(|l| l == name).ok_or_else(|| IfsError::UnknownLetter(name.to_string()))
    }

    /// Parses a reading-order word: characters when every letter name is one
    /// character long, `.`-separated names otherwise.
    pub fn parse_word(&self, s: &str) -> Result<Vec<usize>, IfsError> {
        parse_letters_doc(&LettersDoc::Text(s.to_string()), &self.letters)
    }

    pub fn render_word(&self, w: &[usize]) -> String {
        join_letters(w, &self.letters)
    }

    /// `φ_w` with the leftmost letter applied first.
    pub fn word_map(&self, w: &[usize]) -> AffineMap {
        w.iter().fold(AffineMap::identity(self.dimension(), self.d), |m, &x| m.then(&self.maps[x]))
    }

    pub fn apply_word(&self, p: &Point, w: &[usize]) -> Point {
        w.iter().fold(p.clone(), |q, &x| self.maps[x].apply(&q))
    }

    pub fn point_of_address(&self, a: &Address) -> Point {
        let fixed = self.word_map(&a.period).fixed_point().expect("contracting maps have a unique fixed point");
        self.apply_word(&fixed, &a.tail)
    }

    /// Normalized addresses appearing in the identifications.
    pub fn critical_addresses(&self) -> &[Address] {
        &self.db.critical
    }

    /// All shifts of critical addresses.
    pub fn post_critical_addresses(&self) -> &[Address] {
        &self.db.post_critical
    }

    pub fn critical_points(&self) -> Vec<&Point> {
        self.db.crit.iter().map(|&i| &self.db.points[i]).collect()
    }

    pub fn post_critical_points(&self) -> Vec<&Point> {
        self.db.pcrit.iter().map(|&i| &self.db.points[i]).collect()
    }

    /// Database point by id, as referenced by [`IfsColor`].
    pub fn point(&self, id: usize) -> &Point {
        &self.db.points[id]
    }

    pub fn point_id(&self, p: &Point) -> Result<usize, IfsError> {
        self.db.index.get(p).copied().ok_or_else(|| IfsError::NotInDatabase(render_point(p)))
    }

    pub fn addresses_of(&self, p: &Point) -> Result<Vec<&Address>, IfsError> {
        Ok(self.db.addresses[self.point_id(p)?].iter().collect())
    }

    /// Label of a point if one was given, otherwise its coordinates.
    pub fn point_name(&self, p: &Point) -> String {
        self.labels.iter().find(|(_, q)| q == p).map(|(n, _)| n.clone()).unwrap_or_else(|| render_point(p))
    }

    /// Certified bound on the squared contraction ratio of every map.
    pub fn certified_ratio_squared(&self) -> FieldScalar {
        self.maps.iter().map(AffineMap::ratio_squared).max().expect("at least one map")
    }

    /// The override when present, otherwise the certified bound.
    pub fn ratio_squared(&self) -> FieldScalar {
        match &self.ratio {
            Some(r) => FieldScalar::rational(r * r, self.d),
            None => self.certified_ratio_squared(),
        }
    }

    fn in_cell(&self, mut p: usize, w: &[usize]) -> bool {
        for &z in w.iter().rev() {
            if !self.db.member[p][z] {
                return false;
            }
            p = self.db.preimage[p][z].expect("member points have preimages");
        }
        true
    }
}

fn parse_letters_doc(doc: &LettersDoc, letters: &[String]) -> Result<Vec<usize>, IfsError> {
    let names: Vec<String> = match doc {
        LettersDoc::List(v) => v.clone(),
        LettersDoc::Text(s) if s.is_empty() => Vec::new(),
        LettersDoc::Text(s) if single_char(letters) => s.chars().map(String::from).collect(),
        LettersDoc::Text(s) => s.split('.').map(str::to_string).collect(),
    };
    names
        .iter()
        .map(|n| letters.iter().position(|l| l == n).ok_or_else(|| IfsError::UnknownLetter(n.clone())))
        .collect()
}

pub fn point_of_address(f: &PcfIfs, a: &Address) -> Point {
    f.point_of_address(a)
}

/// Shift closure of the critical addresses and its points.
pub fn post_critical_closure(f: &PcfIfs) -> (Vec<Address>, Vec<Point>) {
    (f.post_critical_addresses().to_vec(), f.post_critical_points().into_iter().cloned().collect())
}

/// Whether `p` lies in `K_z`, judged by the database addresses of `p`.
pub fn cell_membership(f: &PcfIfs, p: &Point, z: usize) -> Result<bool, IfsError> {
    let id = f.point_id(p)?;
    Ok(f.db.member[id].get(z).copied().unwrap_or(false))
}

/// Color of the IFS VERS; point fields are database ids (see [`PcfIfs::point`]).
///
/// `Crit` joins `x·w` and `y·w` through critical `p ∈ K_x ∩ K_y`. `PCrit`
/// carries post-critical `p ∈ K_x` on the origin side and `q ∈ K_y` on the
/// terminus side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IfsColor {
    Base,
    Crit { x: usize, y: usize, p: usize },
    PCrit { x: usize, y: usize, p: usize, q: usize },
}

impl IfsColor {
    pub fn name(&self, f: &PcfIfs) -> String {
        let l = |x: usize| f.letters[x].as_str();
        let pn = |p: usize| f.point_name(&f.db.points[p]);
        match *self {
            IfsColor::Base => BASE_COLOR.to_string(),
            IfsColor::Crit { x, y, p } => format!("({},{})_{}", l(x), l(y), pn(p)),
            IfsColor::PCrit { x, y, p, q } => format!("[{},{}]_{{{},{}}}", pn(p), pn(q), l(x), l(y)),
        }
    }

    /// Point on the origin side of an edge with this color, with its cell.
    pub fn origin_datum(&self) -> Option<(usize, usize)> {
        match *self {
            IfsColor::Base => None,
            IfsColor::Crit { x, p, .. } => Some((p, x)),
            IfsColor::PCrit { x, p, .. } => Some((p, x)),
        }
    }

    /// Point on the terminus side of an edge with this color, with its cell.
    pub fn terminus_datum(&self) -> Option<(usize, usize)> {
        match *self {
            IfsColor::Base => None,
            IfsColor::Crit { y, p, .. } => Some((p, y)),
            IfsColor::PCrit { y, q, .. } => Some((q, y)),
        }
    }
}

type RepEdge = ((usize, Marker), (usize, Marker), IfsColor);

fn replacement_edges(f: &PcfIfs, color: IfsColor) -> Result<Vec<RepEdge>, IfsError> {
    let n = f.letter_count();
    let db = &f.db;
    let mut out = Vec::new();
    let (Some((pi, xx)), Some((pt, yy))) = (color.origin_datum(), color.terminus_datum()) else {
        for x in 0..n {
            out.push(((x, Marker::I), (x, Marker::T), IfsColor::Base));
        }
        for &p in &db.crit {
            for x in 0..n {
                for y in x + 1..n {
                    if db.member[p][x] && db.member[p][y] {
                        out.push(((x, Marker::I), (y, Marker::T), IfsColor::Crit { x, y, p }));
                    }
                }
            }
        }
        return Ok(out);
    };
    let p2 = db.preimage[pi][xx].expect("color data lies in its cell");
    let q2 = db.preimage[pt][yy].expect("color data lies in its cell");
    for z in (0..n).filter(|&z| db.member[p2][z]) {
        for v in (0..n).filter(|&v| db.member[q2][v]) {
            match z.cmp(&v) {
                std::cmp::Ordering::Less => {
                    out.push(((z, Marker::I), (v, Marker::T), IfsColor::PCrit { x: z, y: v, p: p2, q: q2 }))
                }
                std::cmp::Ordering::Greater => {
                    out.push(((v, Marker::T), (z, Marker::I), IfsColor::PCrit { x: v, y: z, p: q2, q: p2 }))
                }
                std::cmp::Ordering::Equal => {
                    return Err(IfsError::SamePreimageCell { color: color.name(f), letter: f.letters[z].clone() })
                }
            }
        }
    }
    Ok(out)
}

/// The IFS VERS together with the meaning of each color.
#[derive(Debug, Clone)]
pub struct IfsVers {
    pub vers: Vers,
    /// Aligned with `vers.colors()`.
    pub colors: Vec<IfsColor>,
}

impl IfsVers {
    pub fn color(&self, name: &str) -> Option<IfsColor> {
        self.vers.colors().iter().position(|c| c == name).map(|i| self.colors[i])
    }
}

/// Builds the VERS of `f`. By default only colors reachable from the base
/// color are emitted; `full` emits every post-critical color.
pub fn vers_from_ifs(f: &PcfIfs, full: bool) -> Result<IfsVers, IfsError> {
    let n = f.letter_count();
    let db = &f.db;
    let mut colors: BTreeSet<IfsColor> = BTreeSet::from([IfsColor::Base]);
    if full {
        for &p in &db.crit {
            for x in 0..n {
                for y in x + 1..n {
                    if db.member[p][x] && db.member[p][y] {
                        colors.insert(IfsColor::Crit { x, y, p });
                    }
                }
            }
        }
        for x in 0..n {
            for y in x + 1..n {
                for &p in db.pcrit.iter().filter(|&&p| db.member[p][x]) {
                    for &q in db.pcrit.iter().filter(|&&q| db.member[q][y]) {
                        colors.insert(IfsColor::PCrit { x, y, p, q });
                    }
                }
            }
        }
    }
    let mut reps: BTreeMap<IfsColor, Vec<RepEdge>> = BTreeMap::new();
    let mut work: Vec<IfsColor> = colors.iter().copied().collect();
    while let Some(c) = work.pop() {
        if reps.contains_key(&c) {
            continue;
        }
        let edges = replacement_edges(f, c)?;
        for e in &edges {
            if colors.insert(e.2) {
                work.push(e.2);
            }
        }
        reps.insert(c, edges);
    }
    let ordered: Vec<IfsColor> = colors.into_iter().collect();
    let names: Vec<String> = ordered.iter().map(|c| c.name(f)).collect();
    let mut sigma = Shift::new(SHIFT_TYPE);
    for l in &f.letters {
        sigma.add_letter(l.clone(), SHIFT_TYPE, SHIFT_TYPE);
    }
    let mut replacements = BTreeMap::new();
    for (c, name) in ordered.iter().zip(&names) {
        let mut g = ReplacementGraph::default();
        for ((x, mx), (y, my), col) in &reps[c] {
            g.push(Slot::new(f.letters[*x].clone(), *mx), Slot::new(f.letters[*y].clone(), *my), col.name(f));
        }
        replacements.insert(name.clone(), g);
    }
    let def = VersDefinition {
        sigma,
        colors: names.clone(),
        kappa: names.iter().map(|c| (c.clone(), (SHIFT_TYPE.to_string(), SHIFT_TYPE.to_string()))).collect(),
        replacements,
        base: vec![BASE_COLOR.to_string()],
    };
    Ok(IfsVers { vers: Vers::new(def)?, colors: ordered })
}

/// `K_u ∩ K_v` for distinct reading-order words of equal length, computed
/// by peeling letters off critical points.
pub fn cell_intersection_oracle(f: &PcfIfs, u: &[usize], v: &[usize]) -> Result<Vec<Point>, IfsError> {
    if u.len() != v.len() {
        return Err(IfsError::LengthMismatch(u.len(), v.len()));
    }
    if u == v {
        return Err(IfsError::EqualWords);
    }
    if let Some(&x) = u.iter().chain(v).find(|&&x| x >= f.letter_count()) {
        return Err(IfsError::UnknownLetter(x.to_string()));
    }
    let common = u.iter().rev().zip(v.iter().rev()).take_while(|(a, b)| a == b).count();
    let cut = u.len() - common;
    let (head_u, x) = (&u[..cut - 1], u[cut - 1]);
    let (head_v, y) = (&v[..cut - 1], v[cut - 1]);
    let suffix = &u[cut..];
    let db = &f.db;
    let mut out: Vec<Point> = db
        .crit
        .iter()
        .filter(|&&r| {
            db.member[r][x]
                && db.member[r][y]
                && f.in_cell(db.preimage[r][x].unwrap(), head_u)
                && f.in_cell(db.preimage[r][y].unwrap(), head_v)
        })
        .map(|&r| f.apply_word(&db.points[r], suffix))
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

fn block_address(a: &Address, k: usize, n: usize) -> Address {
    let t = a.tail().len().div_ceil(k) * k;
    let p = a.period().len().lcm(&k);
    let pack = |range: std::ops::Range<usize>| -> Vec<usize> {
        // range is counted from the right; emit reading order
        let letters: Vec<usize> = range.rev().map(|i| a.letter_from_right(i)).collect();
        letters.chunks(k).map(|c| c.iter().fold(0, |acc, &x| acc * n + x)).collect()
    };
    Address::new(pack(t..t + p), pack(0..t)).expect("period is non-empty")
}

/// `Φ^k`: letters are the reading-order words of length `k`.
pub fn ifs_power(f: &PcfIfs, k: usize) -> Result<PcfIfs, IfsError> {
    assert!(k >= 1, "power must be positive");
    let n = f.letter_count();
    let words: Vec<Vec<usize>> = (0..n.pow(k as u32))
        .map(|mut m| {
            let mut w = vec![0; k];
            for slot in w.iter_mut().rev() {
                *slot = m % n;
                m /= n;
            }
            w
        })
        .collect();
    let sep = if single_char(&f.letters) { "" } else { "_" };
    let letters: Vec<String> =
        words.iter().map(|w| w.iter().map(|&x| f.letters[x].as_str()).collect::<Vec<_>>().join(sep)).collect();
    let maps = words.iter().map(|w| f.word_map(w)).collect();
    // Points of K_B ∩ K_B' for blocks with common suffix w of length j < k.
    let mut groups: BTreeMap<Point, BTreeSet<Address>> = BTreeMap::new();
    for j in 0..k {
        for w in words.iter().map(|w| &w[k - j..]).collect::<BTreeSet<_>>() {
            for &s in &f.db.crit {
                let r = f.apply_word(&f.db.points[s], w);
                let entry = groups.entry(r).or_default();
                for a in &f.db.addresses[s] {
                    entry.insert(block_address(&a.append(w), k, n));
                }
            }
        }
    }
    let mut identifications = Vec::new();
    for addrs in groups.values() {
        let addrs: Vec<&Address> = addrs.iter().collect();
        let first = addrs[0];
        let Some(other) = addrs.iter().find(|a| a.last() != first.last()) else { continue };
        for a in &addrs[1..] {
            let partner = if a.last() != first.last() { first } else { other };
            identifications.push((partner.clone(), (*a).clone()));
        }
    }
    PcfIfs::new(f.d, letters, maps, identifications, f.labels.clone(), f.ratio.as_ref().map(|r| r.pow(k as i32)))
}

/// Whether `ρ² · max‖p−q‖² < min‖p−q‖²` over distinct post-critical points.
pub fn ratio_condition_check(f: &PcfIfs) -> bool {
    let pts = f.post_critical_points();
    if pts.len() < 2 {
        return true;
    }
    let mut dists = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            let d2 = p.iter().zip(q.iter()).fold(FieldScalar::zero(f.d), |acc, (a, b)| &acc + &(a - b).square());
            dists.push(d2);
        }
    }
    let min = dists.iter().min().unwrap();
    let max = dists.iter().max().unwrap();
    &f.ratio_squared() * max < *min
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = |v: &[usize]| v.iter().map(|x| (x + 1).to_string()).collect::<Vec<_>>().join(".");
        write!(f, "({})^-ω{}", w(&self.period), w(&self.tail))
    }
}
