//! Boolean functions and relations, their 0/1 tensors, and the support map.
//!
//! Bit strings are stored as integers with position 0 as the most
//! significant bit, matching the tensor layout: the tuple `011` of a ternary
//! relation is `0b011`, and the entry it selects in the relation tensor is
//! the flat index 3.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::parse::{strip_comment, ParseError};
use crate::scalar::{Backend, Scalar};
use crate::tensor::{Leg, Result, Tensor, TensorError};

/// Largest arity the bitmask representations support.
pub const MAX_ARITY: usize = 20;

/// `f : {0,1}^m -> {0,1}` as a truth table indexed by the input string.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoolFunction {
    arity: usize,
    table: Vec<bool>,
}

impl BoolFunction {
    pub fn new(arity: usize, table: Vec<bool>) -> std::result::Result<Self, String> {
        if arity > MAX_ARITY {
            return Err(format!("arity {arity} exceeds {MAX_ARITY}"));
        }
        if table.len() != 1 << arity {
            return Err(format!("arity {arity} needs a table of {} bits, got {}", 1usize << arity, table.len()));
        }
        Ok(BoolFunction { arity, table })
    }

    /// From a string of `0`/`1` characters such as `"0001"`.
    pub fn from_bits(arity: usize, bits: &str) -> std::result::Result<Self, String> {
        let table = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("unexpected character `{other}` in truth table")),
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        BoolFunction::new(arity, table)
    }

    /// From the low `2^arity` bits of `mask`; bit `x` is `f(x)`.
    pub fn from_mask(arity: usize, mask: u64) -> Self {
        assert!(arity <= 6, "mask form holds at most 6 inputs");
        BoolFunction { arity, table: (0..1usize << arity).map(|x| mask >> x & 1 == 1).collect() }
    }

    pub fn from_fn(arity: usize, f: impl Fn(&[bool]) -> bool) -> Self {
        let table = (0..1u64 << arity).map(|x| f(&bits_of(x, arity))).collect();
        BoolFunction { arity, table }
    }

    /// Inverse of [`BoolFunction::from_mask`].
    pub fn mask(&self) -> u64 {
        assert!(self.arity <= 6, "mask form holds at most 6 inputs");
        self.table.iter().enumerate().fold(0, |m, (x, &b)| m | (b as u64) << x)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    /// `f(x)` with `x` packed most significant first.
    pub fn eval_index(&self, x: u64) -> bool {
        self.table[x as usize]
    }

    pub fn eval(&self, x: &[bool]) -> bool {
        self.table[pack(x) as usize]
    }

    pub fn constant(arity: usize, value: bool) -> Self {
        BoolFunction { arity, table: vec![value; 1 << arity] }
    }

    /// The projection onto input `i`.
    pub fn projection(arity: usize, i: usize) -> Self {
        BoolFunction::from_fn(arity, |x| x[i])
    }

    pub fn and() -> Self {
        BoolFunction::from_fn(2, |x| x[0] && x[1])
    }

    pub fn or() -> Self {
        BoolFunction::from_fn(2, |x| x[0] || x[1])
    }

    pub fn xor() -> Self {
        BoolFunction::from_fn(2, |x| x[0] ^ x[1])
    }

    pub fn not() -> Self {
        BoolFunction::from_fn(1, |x| !x[0])
    }

    pub fn majority() -> Self {
        BoolFunction::from_fn(3, |x| x.iter().filter(|&&b| b).count() >= 2)
    }

    /// The graph `{x f(x)}` as an `(m+1)`-ary relation.
    pub fn graph(&self) -> BoolRelation {
        let tuples = (0..1u64 << self.arity).map(|x| x << 1 | self.table[x as usize] as u64).collect();
        BoolRelation { arity: self.arity + 1, tuples }
    }

    pub fn to_bit_string(&self) -> String {
        self.table.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for BoolFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}[{}]", self.arity, self.to_bit_string())
    }
}

/// A subset of `{0,1}^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoolRelation {
    arity: usize,
    tuples: BTreeSet<u64>,
}

impl BoolRelation {
    pub fn new(arity: usize, tuples: impl IntoIterator<Item = u64>) -> std::result::Result<Self, String> {
        if arity > MAX_ARITY {
            return Err(format!("arity {arity} exceeds {MAX_ARITY}"));
        }
        let tuples: BTreeSet<u64> = tuples.into_iter().collect();
        if let Some(t) = tuples.iter().find(|&&t| t >> arity != 0) {
            return Err(format!("tuple {t:#b} does not fit arity {arity}"));
        }
        Ok(BoolRelation { arity, tuples })
    }

    /// From bit strings such as `["00", "11"]`.
    pub fn from_strs<S: AsRef<str>>(arity: usize, tuples: &[S]) -> std::result::Result<Self, String> {
        let parsed = tuples.iter().map(|s| parse_tuple(s.as_ref(), arity)).collect::<std::result::Result<Vec<_>, _>>()?;
        BoolRelation::new(arity, parsed)
    }

    pub fn empty(arity: usize) -> Self {
        BoolRelation { arity, tuples: BTreeSet::new() }
    }

    pub fn full(arity: usize) -> Self {
        BoolRelation { arity, tuples: (0..1u64 << arity).collect() }
    }

    /// `{0,1}^n` minus the single tuple `t`.
    pub fn all_but(arity: usize, t: u64) -> Self {
        let mut r = BoolRelation::full(arity);
        r.tuples.remove(&t);
        r
    }

    /// The clause relation `{0,1}^k \ {0^k}`.
    pub fn or_clause(k: usize) -> Self {
        BoolRelation::all_but(k, 0)
    }

    /// `{0^n, 1^n}`.
    pub fn all_equal(arity: usize) -> Self {
        BoolRelation { arity, tuples: [0, (1u64 << arity) - 1].into_iter().collect() }
    }

    pub fn equality() -> Self {
        BoolRelation::all_equal(2)
    }

    pub fn disequality() -> Self {
        BoolRelation { arity: 2, tuples: [0b01, 0b10].into_iter().collect() }
    }

    /// `x <= y`, i.e. `{00, 01, 11}`.
    pub fn order() -> Self {
        BoolRelation { arity: 2, tuples: [0b00, 0b01, 0b11].into_iter().collect() }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &BTreeSet<u64> {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: u64) -> bool {
        self.tuples.contains(&t)
    }

    pub fn contains_bits(&self, t: &[bool]) -> bool {
        t.len() == self.arity && self.tuples.contains(&pack(t))
    }

    pub fn tuple_strings(&self) -> Vec<String> {
        self.tuples.iter().map(|&t| tuple_string(t, self.arity)).collect()
    }
}

impl fmt::Display for BoolRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.tuple_strings().join(","))
    }
}

/// Packs bits most significant first.
pub fn pack(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| acc << 1 | b as u64)
}

/// Unpacks the low `n` bits of `x`, most significant first.
pub fn bits_of(x: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| x >> (n - 1 - i) & 1 == 1).collect()
}

fn tuple_string(t: u64, n: usize) -> String {
    bits_of(t, n).into_iter().map(|b| if b { '1' } else { '0' }).collect()
}

fn parse_tuple(s: &str, n: usize) -> std::result::Result<u64, String> {
    if n == 0 && s == "()" {
        return Ok(0);
    }
    if s.len() != n {
        return Err(format!("tuple `{s}` has length {}, expected {n}", s.len()));
    }
    let mut t = 0u64;
    for c in s.chars() {
        t = t << 1
            | match c {
                '0' => 0,
                '1' => 1,
                other => return Err(format!("unexpected character `{other}` in tuple `{s}`")),
            };
    }
    Ok(t)
}

fn binary_legs(prefix: &str, n: usize) -> Vec<Leg> {
    (0..n).map(|i| Leg::new(format!("{prefix}{i}"), 2)).collect()
}

/// `sum_x |x>|f(x)>`: legs `x0..x{m-1}` then `y`, entry 1 where `y = f(x)`.
pub fn encode_function(f: &BoolFunction) -> Tensor {
    let mut legs = binary_legs("x", f.arity);
    legs.push(Leg::new("y", 2));
    Tensor::from_fn(legs, Backend::Exact, |idx| {
        let (x, y) = idx.split_at(f.arity);
        let x = x.iter().fold(0u64, |a, &b| a << 1 | b as u64);
        Scalar::int((f.eval_index(x) == (y[0] == 1)) as i64)
    })
    .expect("binary legs with distinct labels")
}

/// Characteristic tensor of `r`: legs `x0..x{n-1}`, entry 1 exactly on `r`.
pub fn encode_relation(r: &BoolRelation) -> Tensor {
    Tensor::from_fn(binary_legs("x", r.arity), Backend::Exact, |idx| {
        let t = idx.iter().fold(0u64, |a, &b| a << 1 | b as u64);
        Scalar::int(r.contains(t) as i64)
    })
    .expect("binary legs with distinct labels")
}

/// The relation of index tuples carrying a nonzero entry. Float entries count
/// as zero below `1e-9` times the tensor's Frobenius norm.
pub fn support(t: &Tensor) -> Result<BoolRelation> {
    if let Some(leg) = t.legs().iter().find(|l| l.dim != 2) {
        return Err(TensorError::NonBinaryLeg { label: leg.label.clone(), dim: leg.dim });
    }
    if t.rank() > MAX_ARITY {
        return Err(TensorError::TooLarge { entries: 1u128 << t.rank(), cap: 1 << MAX_ARITY });
    }
    let scale = t.frobenius_norm();
    let tuples = t
        .nonzero_flat()
        .into_iter()
        .filter(|&k| !t.get_flat(k).is_negligible(1e-9, scale))
        .map(|k| k as u64);
    Ok(BoolRelation { arity: t.rank(), tuples: tuples.collect() })
}

/// Named members of the standard tensor library.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StandardTensor {
    And,
    Or,
    Xor,
    Not,
    Copy3,
    Swap,
    Cnot,
    Bell,
    BellCostate,
    ZeroBra,
    OneBra,
    Plus,
}

impl StandardTensor {
    pub const ALL: [StandardTensor; 12] = [
        StandardTensor::And,
        StandardTensor::Or,
        StandardTensor::Xor,
        StandardTensor::Not,
        StandardTensor::Copy3,
        StandardTensor::Swap,
        StandardTensor::Cnot,
        StandardTensor::Bell,
        StandardTensor::BellCostate,
        StandardTensor::ZeroBra,
        StandardTensor::OneBra,
        StandardTensor::Plus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StandardTensor::And => "AND",
            StandardTensor::Or => "OR",
            StandardTensor::Xor => "XOR",
            StandardTensor::Not => "NOT",
            StandardTensor::Copy3 => "COPY3",
            StandardTensor::Swap => "SWAP",
            StandardTensor::Cnot => "CNOT",
            StandardTensor::Bell => "BELL",
            StandardTensor::BellCostate => "BELL_COSTATE",
            StandardTensor::ZeroBra => "ZERO_BRA",
            StandardTensor::OneBra => "ONE_BRA",
            StandardTensor::Plus => "PLUS",
        }
    }

    /// The tensor on the exact backend.
    ///
    /// Function tensors (AND, OR, XOR, NOT) have inputs `x0, x1` and output
    /// `y`. Gates (SWAP, CNOT) are operators with legs `out0, out1, in0, in1`;
    /// CNOT controls on qubit 0. BELL and its costate are the unnormalised
    /// `|00> + |11>` on `x0, x1`; one-leg vectors use `x0`.
    pub fn tensor(self) -> Tensor {
        let gate = |f: fn(usize, usize) -> (usize, usize)| {
            Tensor::from_fn(
                vec![Leg::new("out0", 2), Leg::new("out1", 2), Leg::new("in0", 2), Leg::new("in1", 2)],
                Backend::Exact,
                |i| Scalar::int((f(i[2], i[3]) == (i[0], i[1])) as i64),
            )
            .expect("valid legs")
        };
        let vector = |v: [i64; 2]| Tensor::from_ints(&[("x0", 2)], &v).expect("valid legs");
        match self {
            StandardTensor::And => encode_function(&BoolFunction::and()),
            StandardTensor::Or => encode_function(&BoolFunction::or()),
            StandardTensor::Xor => encode_function(&BoolFunction::xor()),
            StandardTensor::Not => encode_function(&BoolFunction::not()),
            StandardTensor::Copy3 => encode_relation(&BoolRelation::all_equal(3)),
            StandardTensor::Swap => gate(|a, b| (b, a)),
            StandardTensor::Cnot => gate(|a, b| (a, a ^ b)),
            StandardTensor::Bell | StandardTensor::BellCostate => encode_relation(&BoolRelation::equality()),
            StandardTensor::ZeroBra => vector([1, 0]),
            StandardTensor::OneBra => vector([0, 1]),
            StandardTensor::Plus => vector([1, 1]),
        }
    }
}

impl FromStr for StandardTensor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        StandardTensor::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown standard tensor `{s}`"))
    }
}

/// Looks up a standard tensor by name (case-insensitive).
pub fn standard_tensor(name: &str) -> std::result::Result<Tensor, String> {
    name.parse::<StandardTensor>().map(StandardTensor::tensor)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(k, l)| (k + 1, strip_comment(l))).filter(|(_, l)| !l.is_empty())
}

fn read_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    kw: &str,
) -> std::result::Result<(usize, usize), ParseError> {
    let (line, text) = lines.next().ok_or_else(|| ParseError::new(1, format!("missing `{kw} N` header")))?;
    let mut words = text.split_whitespace();
    if words.next() != Some(kw) {
        return Err(ParseError::new(line, format!("expected `{kw} N` header")));
    }
    let n: usize = words
        .next()
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| ParseError::new(line, format!("expected an arity after `{kw}`")))?;
    if words.next().is_some() {
        return Err(ParseError::new(line, "trailing text after header"));
    }
    if n > MAX_ARITY {
        return Err(ParseError::new(line, format!("arity {n} exceeds {MAX_ARITY}")));
    }
    Ok((line, n))
}

/// Parses a relation file: `rel n`, then one n-bit tuple per line (`()` for
/// the empty tuple of a nullary relation).
pub fn parse_rel(text: &str) -> std::result::Result<BoolRelation, ParseError> {
    let mut lines = content_lines(text);
    let (_, n) = read_header(&mut lines, "rel")?;
    let mut tuples = BTreeSet::new();
    for (line, t) in lines {
        let v = parse_tuple(t, n).map_err(|e| ParseError::new(line, e))?;
        if !tuples.insert(v) {
            return Err(ParseError::new(line, format!("duplicate tuple `{t}`")));
        }
    }
    Ok(BoolRelation { arity: n, tuples })
}

pub fn write_rel(r: &BoolRelation) -> String {
    let mut out = format!("rel {}\n", r.arity);
    for t in &r.tuples {
        out.push_str(&if r.arity == 0 { "()".to_string() } else { tuple_string(*t, r.arity) });
        out.push('\n');
    }
    out
}

/// Parses a function file: `fun m`, then the `2^m`-bit truth table.
pub fn parse_fun(text: &str) -> std::result::Result<BoolFunction, ParseError> {
    let mut lines = content_lines(text);
    let (hline, m) = read_header(&mut lines, "fun")?;
    let Some((line, bits)) = lines.next() else {
        return Err(ParseError::new(hline, "missing truth table"));
    };
    if let Some((extra, _)) = lines.next() {
        return Err(ParseError::new(extra, "unexpected text after truth table"));
    }
    BoolFunction::from_bits(m, bits).map_err(|e| ParseError::new(line, e))
}

pub fn write_fun(f: &BoolFunction) -> String {
    format!("fun {}\n{}\n", f.arity, f.to_bit_string())
}
