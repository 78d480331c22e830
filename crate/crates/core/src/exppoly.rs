//! Exponential polynomials `sum_i f_i(x) * exp(g_i(x) / h_i(x))` with integer
//! polynomial coefficients and exponent fractions.
//!
//! An [`ExpPoly`] is a formal expression. Addition concatenates term lists and
//! multiplication distributes with `exp(g/h) * exp(g'/h') = exp((g h' + g' h) / (h h'))`;
//! like terms are only merged by [`ExpPoly::condense`], and exponent
//! fractions are never reduced, so `exp(x)` and `exp((x^2 - 2x)/(x - 2))`
//! stay distinct terms until condensed.

use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{ExpPolyError, PolyError};
use crate::field::{mod_add, mod_inv, mod_mul, mod_pow, FieldParams};
use crate::intpoly::{ModPoly, SparsePoly};

/// One term `f * exp(g / h)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExpTerm {
    f: SparsePoly,
    g: SparsePoly,
    h: SparsePoly,
}

impl ExpTerm {
    /// Rejects a zero denominator; use [`ExpTerm::with_any_denominator`] to
    /// represent a term whose domain is empty.
    pub fn new(f: SparsePoly, g: SparsePoly, h: SparsePoly) -> Result<Self, ExpPolyError> {
        if h.is_zero() {
            return Err(ExpPolyError::EmptyDomain { term: 0 });
        }
        Self::with_any_denominator(f, g, h)
    }

    /// Like [`ExpTerm::new`] but keeps `h = 0`. Such a term makes every
    /// evaluation undefined and is reported by [`ExpPoly::condense`].
    pub fn with_any_denominator(
        f: SparsePoly,
        g: SparsePoly,
        h: SparsePoly,
    ) -> Result<Self, ExpPolyError> {
        let n = f.num_vars();
        for other in [&g, &h] {
            if other.num_vars() != n {
                return Err(PolyError::VarCountMismatch {
                    left: n,
                    right: other.num_vars(),
                }
                .into());
            }
        }
        Ok(ExpTerm { f, g, h })
    }

    /// `f * exp(0 / 1)`.
    pub fn polynomial(f: SparsePoly) -> Self {
        let n = f.num_vars();
        ExpTerm {
            f,
            g: SparsePoly::zero(n),
            h: SparsePoly::one(n),
        }
    }

    pub fn coefficient(&self) -> &SparsePoly {
        &self.f
    }

    pub fn numerator(&self) -> &SparsePoly {
        &self.g
    }

    pub fn denominator(&self) -> &SparsePoly {
        &self.h
    }

    pub fn num_vars(&self) -> usize {
        self.f.num_vars()
    }

    /// True when the exponent is literally `0 / 1`.
    pub fn is_exp_free(&self) -> bool {
        self.g.is_zero() && self.h.is_one()
    }

    fn degree(&self) -> u32 {
        self.f.degree().max(self.g.degree()).max(self.h.degree())
    }

    fn weight(&self) -> BigUint {
        self.f.weight().max(self.g.weight()).max(self.h.weight())
    }

    fn mul(&self, other: &ExpTerm) -> ExpTerm {
        let g = if self.g.is_zero() {
            &other.g * &self.h
        } else if other.g.is_zero() {
            &self.g * &other.h
        } else {
            &(&self.g * &other.h) + &(&other.g * &self.h)
        };
        ExpTerm {
            f: &self.f * &other.f,
            g,
            h: &self.h * &other.h,
        }
    }
}

/// Result of evaluating an exponential polynomial over the reals at a
/// rational point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignClass {
    Zero,
    NonZero,
    Undefined,
}

/// A formal sum of [`ExpTerm`]s in construction order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExpPoly {
    num_vars: usize,
    terms: Vec<ExpTerm>,
}

impl ExpPoly {
    pub fn empty(num_vars: usize) -> Self {
        ExpPoly {
            num_vars,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(
        num_vars: usize,
        terms: impl IntoIterator<Item = ExpTerm>,
    ) -> Result<Self, ExpPolyError> {
        let mut out = ExpPoly::empty(num_vars);
        for t in terms {
            out.push(t)?;
        }
        Ok(out)
    }

    pub fn push(&mut self, term: ExpTerm) -> Result<(), ExpPolyError> {
        if term.num_vars() != self.num_vars {
            return Err(PolyError::VarCountMismatch {
                left: self.num_vars,
                right: term.num_vars(),
            }
            .into());
        }
        self.terms.push(term);
        Ok(())
    }

    /// The single term `f * exp(0/1)`.
    pub fn polynomial(f: SparsePoly) -> Self {
        ExpPoly {
            num_vars: f.num_vars(),
            terms: vec![ExpTerm::polynomial(f)],
        }
    }

    pub fn constant(c: impl Into<BigInt>, num_vars: usize) -> Self {
        Self::polynomial(SparsePoly::constant(c, num_vars))
    }

    pub fn one(num_vars: usize) -> Self {
        Self::constant(1, num_vars)
    }

    /// The single term `1 * exp(g / h)`; `h` may be zero.
    pub fn exp_of(g: SparsePoly, h: SparsePoly) -> Result<Self, ExpPolyError> {
        let n = g.num_vars();
        let t = ExpTerm::with_any_denominator(SparsePoly::one(n), g, h)?;
        Ok(ExpPoly {
            num_vars: n,
            terms: vec![t],
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn width(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Max total degree over all `f_i, g_i, h_i`.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(ExpTerm::degree).max().unwrap_or(0)
    }

    /// Max absolute integer coefficient over all `f_i, g_i, h_i`.
    pub fn weight(&self) -> BigUint {
        self.terms.iter().map(ExpTerm::weight).max().unwrap_or_default()
    }

    /// `(width k, degree d, weight w)`; the empty sum has `(0, 0, 0)`.
    pub fn metrics(&self) -> (usize, u32, BigUint) {
        (self.width(), self.degree(), self.weight())
    }

    /// True when every exponent is literally `0 / 1`, i.e. this is a plain
    /// polynomial written as a sum.
    pub fn is_exp_free(&self) -> bool {
        self.terms.iter().all(ExpTerm::is_exp_free)
    }

    /// Sum of the coefficient polynomials. Meaningful as "the polynomial this
    /// expression denotes" only when [`ExpPoly::is_exp_free`] holds.
    pub fn coefficient_sum(&self) -> SparsePoly {
        self.terms
            .iter()
            .fold(SparsePoly::zero(self.num_vars), |acc, t| &acc + &t.f)
    }

    fn check_vars(&self, other: &ExpPoly) -> Result<(), PolyError> {
        if self.num_vars != other.num_vars {
            return Err(PolyError::VarCountMismatch {
                left: self.num_vars,
                right: other.num_vars,
            });
        }
        Ok(())
    }

    /// Term-list concatenation.
    pub fn checked_add(&self, other: &ExpPoly) -> Result<ExpPoly, PolyError> {
        self.check_vars(other)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(ExpPoly {
            num_vars: self.num_vars,
            terms,
        })
    }

    /// Distributes into `k * k'` terms in row-major order.
    pub fn checked_mul(&self, other: &ExpPoly) -> Result<ExpPoly, PolyError> {
        self.check_vars(other)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.mul(b));
            }
        }
        Ok(ExpPoly {
            num_vars: self.num_vars,
            terms,
        })
    }

    /// Multiplies every coefficient polynomial by `c`.
    pub fn scale(&self, c: &SparsePoly) -> ExpPoly {
        ExpPoly {
            num_vars: self.num_vars,
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm {
                    f: &t.f * c,
                    g: t.g.clone(),
                    h: t.h.clone(),
                })
                .collect(),
        }
    }

    /// Merges terms whose exponent fractions agree as polynomial identities
    /// (`g_i h_j - g_j h_i = 0`), summing their coefficients. Each class keeps
    /// the fraction of its lowest-index member; classes whose coefficient sum
    /// is the zero polynomial are dropped.
    pub fn condense(&self) -> Result<ExpPoly, ExpPolyError> {
        if let Some(term) = self.terms.iter().position(|t| t.h.is_zero()) {
            return Err(ExpPolyError::EmptyDomain { term });
        }
        let probe = FractionProbe::new(self.num_vars);
        let fingerprints: Vec<(u64, u64)> =
            self.terms.iter().map(|t| probe.fingerprint(t)).collect();

        let mut classes: Vec<(usize, SparsePoly)> = Vec::new();
        for (i, term) in self.terms.iter().enumerate() {
            let found = classes.iter_mut().find(|(rep, _)| {
                probe.may_be_equal(fingerprints[*rep], fingerprints[i])
                    && same_fraction(&self.terms[*rep], term)
            });
            match found {
                Some((_, sum)) => *sum = &*sum + &term.f,
                None => classes.push((i, term.f.clone())),
            }
        }
        let terms = classes
            .into_iter()
            .filter(|(_, sum)| !sum.is_zero())
            .map(|(rep, f)| ExpTerm {
                f,
                g: self.terms[rep].g.clone(),
                h: self.terms[rep].h.clone(),
            })
            .collect();
        Ok(ExpPoly {
            num_vars: self.num_vars,
            terms,
        })
    }

    /// True when no two exponent fractions are identical and no denominator
    /// is zero.
    pub fn is_condensed(&self) -> bool {
        match self.condense() {
            Ok(c) => c.width() == self.width() && c == *self,
            Err(_) => false,
        }
    }

    /// `sum_i f_i(u) * a^(g_i(v) / h_i(v) mod q) mod p`, or `None` when some
    /// `h_i(v) = 0 mod q`.
    pub fn eval_finite(
        &self,
        u: &[u64],
        v: &[u64],
        params: &FieldParams,
    ) -> Result<Option<u64>, PolyError> {
        for got in [u.len(), v.len()] {
            if got != self.num_vars {
                return Err(PolyError::ArityMismatch {
                    expected: self.num_vars,
                    got,
                });
            }
        }
        Ok(self.prepare(params.p(), params.q()).eval(u, v, params.a()))
    }

    /// Reduces all coefficients once for repeated evaluation at fixed `(p, q)`.
    pub fn prepare(&self, p: u64, q: u64) -> PreparedExpPoly {
        PreparedExpPoly {
            p,
            q,
            terms: self
                .terms
                .iter()
                .map(|t| (t.f.reduce_mod(p), t.g.reduce_mod(q), t.h.reduce_mod(q)))
                .collect(),
        }
    }

    /// Exact zero/nonzero/undefined classification at an integer point.
    ///
    /// Terms are grouped by equal rational exponent (checked by exact
    /// cross-multiplication) and coefficients summed per group. Because
    /// `e^{a_1}, ..., e^{a_k}` are linearly independent over the algebraic
    /// numbers for distinct rationals `a_i`, the value is zero exactly when
    /// every group sum vanishes.
    pub fn rational_sign_class(&self, x: &[BigInt]) -> Result<SignClass, PolyError> {
        if x.len() != self.num_vars {
            return Err(PolyError::ArityMismatch {
                expected: self.num_vars,
                got: x.len(),
            });
        }
        let mut values = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let h = t.h.eval_int(x)?;
            if h.is_zero() {
                return Ok(SignClass::Undefined);
            }
            values.push((t.f.eval_int(x)?, t.g.eval_int(x)?, h));
        }
        let mut groups: Vec<(BigInt, BigInt, BigInt)> = Vec::new();
        for (f, g, h) in values {
            match groups
                .iter_mut()
                .find(|(gg, hh, _)| &g * hh == gg * &h)
            {
                Some((_, _, sum)) => *sum += f,
                None => groups.push((g, h, f)),
            }
        }
        if groups.iter().all(|(_, _, s)| s.is_zero()) {
            Ok(SignClass::Zero)
        } else {
            Ok(SignClass::NonZero)
        }
    }

    /// Parses the `Display` form:
    /// `[f_1] * EXP( [g_1] / [h_1] ) + [f_2] * EXP( [g_2] / [h_2] )`, or `0`.
    pub fn parse(text: &str, num_vars: usize) -> Result<ExpPoly, ExpPolyError> {
        let trimmed = text.trim();
        let mut out = ExpPoly::empty(num_vars);
        if trimmed == "0" {
            return Ok(out);
        }
        let mut rest = trimmed;
        let base = text.len() - text.trim_start().len();
        let at = |rest: &str| base + trimmed.len() - rest.len();
        let perr = |pos: usize, msg: &str| -> ExpPolyError {
            PolyError::Parse {
                pos,
                msg: msg.to_string(),
            }
            .into()
        };
        loop {
            let mut parts = Vec::with_capacity(3);
            for (k, sep) in [("*", "EXP("), ("/", ""), (")", "")].iter().enumerate() {
                rest = rest.trim_start();
                rest = rest
                    .strip_prefix('[')
                    .ok_or_else(|| perr(at(rest), "expected '['"))?;
                let close = rest
                    .find(']')
                    .ok_or_else(|| perr(at(rest), "unclosed '['"))?;
                let poly = SparsePoly::parse(&rest[..close], num_vars).map_err(|e| match e {
                    PolyError::Parse { pos, msg } => perr(at(rest) + pos, &msg),
                    other => other.into(),
                })?;
                parts.push(poly);
                rest = rest[close + 1..].trim_start();
                rest = rest
                    .strip_prefix(sep.0)
                    .ok_or_else(|| perr(at(rest), &format!("expected '{}'", sep.0)))?;
                if !sep.1.is_empty() {
                    rest = rest.trim_start();
                    rest = rest
                        .strip_prefix(sep.1)
                        .ok_or_else(|| perr(at(rest), "expected 'EXP('"))?;
                }
                let _ = k;
            }
            let h = parts.pop().expect("three parts");
            let g = parts.pop().expect("three parts");
            let f = parts.pop().expect("three parts");
            out.push(ExpTerm::with_any_denominator(f, g, h)?)?;
            rest = rest.trim_start();
            if rest.is_empty() {
                return Ok(out);
            }
            rest = rest
                .strip_prefix('+')
                .ok_or_else(|| perr(at(rest), "expected '+' between terms"))?;
        }
    }
}

fn same_fraction(a: &ExpTerm, b: &ExpTerm) -> bool {
    if a.h == b.h {
        return a.g == b.g;
    }
    &a.g * &b.h == &b.g * &a.h
}

/// Evaluates exponent fractions at a fixed pseudo-random point modulo a
/// large prime. Distinct fingerprints prove two fractions differ; equal ones
/// fall through to the exact polynomial check.
struct FractionProbe {
    point: Vec<u64>,
}

const PROBE_PRIME: u64 = (1 << 61) - 1;

impl FractionProbe {
    fn new(num_vars: usize) -> Self {
        // splitmix64 stream; any fixed point works since the exact check
        // backs every positive answer.
        let mut state = 0x9E37_79B9_7F4A_7C15u64;
        let point = (0..num_vars)
            .map(|_| {
                state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
                let mut z = state;
                z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
                (z ^ (z >> 31)) % PROBE_PRIME
            })
            .collect();
        FractionProbe { point }
    }

    fn fingerprint(&self, t: &ExpTerm) -> (u64, u64) {
        (
            t.g.reduce_mod(PROBE_PRIME).eval(&self.point),
            t.h.reduce_mod(PROBE_PRIME).eval(&self.point),
        )
    }

    fn may_be_equal(&self, (ga, ha): (u64, u64), (gb, hb): (u64, u64)) -> bool {
        mod_mul(ga, hb, PROBE_PRIME) == mod_mul(gb, ha, PROBE_PRIME)
    }
}

/// An [`ExpPoly`] with coefficients reduced for a fixed `(p, q)`.
#[derive(Debug, Clone)]
pub struct PreparedExpPoly {
    p: u64,
    q: u64,
    terms: Vec<(ModPoly, ModPoly, ModPoly)>,
}

impl PreparedExpPoly {
    /// `a` must lie in the order-`q` subgroup of `F_p^*`.
    pub fn eval(&self, u: &[u64], v: &[u64], a: u64) -> Option<u64> {
        let mut acc = 0;
        for (f, g, h) in &self.terms {
            let hv = h.eval(v);
            let inv = mod_inv(hv, self.q).ok()?;
            let alpha = mod_mul(g.eval(v), inv, self.q);
            let term = mod_mul(f.eval(u), mod_pow(a, alpha, self.p), self.p);
            acc = mod_add(acc, term, self.p);
        }
        Some(acc)
    }
}

impl fmt::Display for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "[{}] * EXP( [{}] / [{}] )", t.f, t.g, t.h)?;
        }
        Ok(())
    }
}

impl Add<&ExpPoly> for &ExpPoly {
    type Output = ExpPoly;

    /// Panics on a variable-count mismatch.
    fn add(self, rhs: &ExpPoly) -> ExpPoly {
        self.checked_add(rhs).expect("exp-poly variable counts differ")
    }
}

impl Mul<&ExpPoly> for &ExpPoly {
    type Output = ExpPoly;

    /// Panics on a variable-count mismatch.
    fn mul(self, rhs: &ExpPoly) -> ExpPoly {
        self.checked_mul(rhs).expect("exp-poly variable counts differ")
    }
}

impl Zero for SignClass {
    fn zero() -> Self {
        SignClass::Zero
    }

    fn is_zero(&self) -> bool {
        *self == SignClass::Zero
    }
}

impl Add for SignClass {
    type Output = SignClass;

    /// Only here to satisfy `Zero`; not a meaningful operation.
    fn add(self, rhs: SignClass) -> SignClass {
        match (self, rhs) {
            (SignClass::Undefined, _) | (_, SignClass::Undefined) => SignClass::Undefined,
            (SignClass::Zero, x) | (x, SignClass::Zero) => x,
            _ => SignClass::NonZero,
        }
    }
}
