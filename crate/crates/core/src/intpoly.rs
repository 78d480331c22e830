//! Sparse multivariate polynomials with unbounded integer coefficients.
//!
//! Terms live in a `BTreeMap` keyed by [`Monomial`], whose ordering is
//! graded lexicographic, so equality, hashing, and the textual form are all
//! canonical. Zero coefficients are never stored.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Pow, ToPrimitive, Zero};

use crate::error::PolyError;
use crate::field::{mod_add, mod_mul, mod_pow};

/// Product of variables raised to positive powers, stored as `(var, exp)`
/// pairs sorted by variable index. Variable indices are zero-based.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<(u32, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(index: usize) -> Self {
        Monomial(vec![(index as u32, 1)])
    }

    /// Builds a monomial from `(var, exp)` pairs in any order; zero exponents
    /// are dropped and repeated variables are combined.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut map = BTreeMap::new();
        for (v, e) in pairs {
            *map.entry(v as u32).or_insert(0u32) += e;
        }
        Monomial(map.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, var: usize) -> u32 {
        self.0
            .iter()
            .find(|&&(v, _)| v as usize == var)
            .map_or(0, |&(_, e)| e)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0.iter().map(|&(v, e)| (v as usize, e))
    }

    fn max_var(&self) -> Option<usize> {
        self.0.last().map(|&(v, _)| v as usize)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }
}

impl Ord for Monomial {
    /// Graded lexicographic: total degree first, then the exponent of the
    /// lowest-indexed variable where the two differ (higher wins).
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(&(va, ea)), Some(&(vb, eb))) => match va.cmp(&vb) {
                    // `self` has a positive exponent where `other` has zero.
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match ea.cmp(&eb) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        ord => return ord,
                    },
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (k, &(v, e)) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("*")?;
            }
            write!(f, "x{}", v + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// Integer-coefficient polynomial in `num_vars` variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SparsePoly {
    num_vars: usize,
    terms: BTreeMap<Monomial, BigInt>,
}

impl SparsePoly {
    pub fn zero(num_vars: usize) -> Self {
        SparsePoly {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(num_vars: usize) -> Self {
        Self::constant(1, num_vars)
    }

    pub fn constant(c: impl Into<BigInt>, num_vars: usize) -> Self {
        Self::from_terms(num_vars, [(Monomial::one(), c.into())])
    }

    /// The polynomial `x_{index+1}`.
    ///
    /// Panics if `index >= num_vars`.
    pub fn var(index: usize, num_vars: usize) -> Self {
        assert!(index < num_vars, "variable {index} out of range");
        Self::from_terms(num_vars, [(Monomial::var(index), BigInt::one())])
    }

    /// Sums the given terms; like monomials are combined and zero
    /// coefficients dropped.
    ///
    /// Panics if a monomial mentions a variable `>= num_vars`.
    pub fn from_terms(
        num_vars: usize,
        terms: impl IntoIterator<Item = (Monomial, BigInt)>,
    ) -> Self {
        let mut out = SparsePoly::zero(num_vars);
        for (m, c) in terms {
            if let Some(v) = m.max_var() {
                assert!(v < num_vars, "monomial variable {v} out of range");
            }
            out.add_term(m, c);
        }
        out
    }

    fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .next()
                .is_some_and(|(m, c)| m.is_one() && c.is_one())
    }

    /// Number of stored (nonzero) terms.
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> BigInt {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().next_back().map_or(0, Monomial::degree)
    }

    /// Largest absolute coefficient; 0 for the zero polynomial.
    pub fn weight(&self) -> BigUint {
        self.terms
            .values()
            .map(|c| c.magnitude().clone())
            .max()
            .unwrap_or_default()
    }

    /// `(total degree, max |coefficient|)`.
    pub fn metrics(&self) -> (u32, BigUint) {
        (self.degree(), self.weight())
    }

    fn check_vars(&self, other: &SparsePoly) -> Result<(), PolyError> {
        if self.num_vars != other.num_vars {
            return Err(PolyError::VarCountMismatch {
                left: self.num_vars,
                right: other.num_vars,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &SparsePoly) -> Result<SparsePoly, PolyError> {
        self.check_vars(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &SparsePoly) -> Result<SparsePoly, PolyError> {
        self.check_vars(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &SparsePoly) -> Result<SparsePoly, PolyError> {
        self.check_vars(other)?;
        if self.is_one() {
            return Ok(other.clone());
        }
        if other.is_one() {
            return Ok(self.clone());
        }
        let mut out = SparsePoly::zero(self.num_vars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &BigInt) -> SparsePoly {
        if c.is_zero() {
            return SparsePoly::zero(self.num_vars);
        }
        SparsePoly {
            num_vars: self.num_vars,
            terms: self
                .terms
                .iter()
                .map(|(m, x)| (m.clone(), x * c))
                .collect(),
        }
    }

    fn check_arity(&self, got: usize) -> Result<(), PolyError> {
        if got != self.num_vars {
            return Err(PolyError::ArityMismatch {
                expected: self.num_vars,
                got,
            });
        }
        Ok(())
    }

    /// Exact value at an integer point.
    pub fn eval_int(&self, point: &[BigInt]) -> Result<BigInt, PolyError> {
        self.check_arity(point.len())?;
        let mut acc = BigInt::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m.pairs() {
                t *= Pow::pow(&point[v], e);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Value at a point of `F_m^n`. Coefficients are reduced into `[0, m)`
    /// first, so negative coefficients map to `m - (|c| mod m)`.
    pub fn eval_mod(&self, point: &[u64], m: u64) -> Result<u64, PolyError> {
        self.check_arity(point.len())?;
        Ok(self.reduce_mod(m).eval(point))
    }

    /// Coefficients reduced modulo `m`, ready for repeated evaluation.
    pub fn reduce_mod(&self, m: u64) -> ModPoly {
        let modulus = BigInt::from(m);
        let terms = self
            .terms
            .iter()
            .filter_map(|(mono, c)| {
                let r = reduce_big(c, &modulus);
                (r != 0).then(|| (r, mono.0.clone()))
            })
            .collect();
        ModPoly {
            modulus: m,
            num_vars: self.num_vars,
            terms,
        }
    }

    /// Parses the textual form produced by `Display`, e.g.
    /// `3*x1^2*x2 - x2 + 7`. Variables are `x1..=xN`, one-based.
    pub fn parse(text: &str, num_vars: usize) -> Result<SparsePoly, PolyError> {
        Parser::new(text, num_vars).parse_poly()
    }
}

pub(crate) fn reduce_big(c: &BigInt, modulus: &BigInt) -> u64 {
    c.mod_floor(modulus)
        .to_u64()
        .expect("residue below a u64 modulus")
}

impl fmt::Display for SparsePoly {
    /// Terms in descending graded-lex order; unit coefficients are omitted.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.sign() == Sign::Minus;
            match (k, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mag = c.magnitude();
            if m.is_one() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        Ok(())
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&SparsePoly> for &SparsePoly {
            type Output = SparsePoly;

            /// Panics on a variable-count mismatch; use the `checked_` form
            /// for untrusted operands.
            fn $method(self, rhs: &SparsePoly) -> SparsePoly {
                self.$checked(rhs).expect("polynomial variable counts differ")
            }
        }

        impl $tr<SparsePoly> for SparsePoly {
            type Output = SparsePoly;

            fn $method(self, rhs: SparsePoly) -> SparsePoly {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl Neg for &SparsePoly {
    type Output = SparsePoly;

    fn neg(self) -> SparsePoly {
        SparsePoly {
            num_vars: self.num_vars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for SparsePoly {
    type Output = SparsePoly;

    fn neg(self) -> SparsePoly {
        -&self
    }
}

/// A [`SparsePoly`] with coefficients reduced modulo a word-sized prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModPoly {
    modulus: u64,
    num_vars: usize,
    terms: Vec<(u64, Vec<(u32, u32)>)>,
}

impl ModPoly {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Panics if `point` is shorter than the variable count.
    pub fn eval(&self, point: &[u64]) -> u64 {
        debug_assert_eq!(point.len(), self.num_vars);
        let m = self.modulus;
        let mut acc = 0;
        for (c, mono) in &self.terms {
            let mut t = *c;
            for &(v, e) in mono {
                t = mod_mul(t, mod_pow(point[v as usize], e as u64, m), m);
            }
            acc = mod_add(acc, t, m);
        }
        acc
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    num_vars: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, num_vars: usize) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
            num_vars,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, PolyError> {
        Err(PolyError::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn digits(&mut self) -> Result<&'a str, PolyError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected digits");
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits"))
    }

    fn parse_poly(&mut self) -> Result<SparsePoly, PolyError> {
        let mut out = SparsePoly::zero(self.num_vars);
        let mut first = true;
        loop {
            let sign = match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    1
                }
                Some(b'-') => {
                    self.pos += 1;
                    -1
                }
                None if !first => break,
                _ if first => 1,
                Some(c) => return self.err(format!("unexpected '{}'", c as char)),
                None => unreachable!(),
            };
            first = false;
            // `a + -b` is accepted as `a - b`.
            let sign = match self.peek() {
                Some(b'-') => {
                    self.pos += 1;
                    -sign
                }
                _ => sign,
            };
            let (m, c) = self.parse_term()?;
            out.add_term(m, c * sign);
            if self.peek().is_none() {
                break;
            }
        }
        Ok(out)
    }

    fn parse_term(&mut self) -> Result<(Monomial, BigInt), PolyError> {
        let mut coef = BigInt::one();
        let mut pairs = Vec::new();
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_digit() => {
                    let d = self.digits()?;
                    coef *= d.parse::<BigInt>().expect("digit string");
                }
                Some(b'x') => {
                    self.pos += 1;
                    let idx: usize = match self.digits()?.parse() {
                        Ok(i) => i,
                        Err(_) => return self.err("variable index too large"),
                    };
                    if idx == 0 || idx > self.num_vars {
                        return self.err(format!(
                            "variable x{idx} outside x1..x{}",
                            self.num_vars
                        ));
                    }
                    let mut e = 1u32;
                    if self.peek() == Some(b'^') {
                        self.pos += 1;
                        self.skip_ws();
                        e = match self.digits()?.parse() {
                            Ok(e) => e,
                            Err(_) => return self.err("exponent too large"),
                        };
                    }
                    pairs.push((idx - 1, e));
                }
                _ => return self.err("expected a coefficient or variable"),
            }
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok((Monomial::from_pairs(pairs), coef))
    }
}
