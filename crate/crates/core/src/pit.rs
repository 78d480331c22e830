//! Randomized zero and equivalence testing, plus an exact zero oracle.
//!
//! Trial `i` of a test draws from its own ChaCha stream keyed by
//! `(seed, i)`, so trials can run in parallel and the verdict (including the
//! witness, always the lowest-index rejecting trial) depends only on the
//! circuit, the plan and the seed.

use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::circuit::{Circuit, PreparedCircuit};
use crate::error::{FieldError, PitError};
use crate::exppoly::{ExpPoly, SignClass};
use crate::field::{find_subgroup_element, generate_prime_pair, is_prime, FieldParams, PrimePair, MAX_MODULUS};

/// Width, degree and weight bounds used to size the fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bounds {
    pub k: usize,
    pub d: u32,
    pub w: BigUint,
}

impl Bounds {
    pub fn new(k: usize, d: u32, w: impl Into<BigUint>) -> Self {
        Bounds { k, d, w: w.into() }
    }

    /// The largest width, degree and weight over both halves of a fraction,
    /// with width and weight at least one.
    pub fn of_fraction(p: &ExpPoly, q: &ExpPoly) -> Bounds {
        let (k1, d1, w1) = p.metrics();
        let (k2, d2, w2) = q.metrics();
        Bounds {
            k: k1.max(k2).max(1),
            d: d1.max(d2),
            w: w1.max(w2).max(BigUint::one()),
        }
    }
}

/// Everything needed to run a randomized test reproducibly.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPlan {
    pub params: FieldParams,
    pub repetitions: u64,
    pub seed: u64,
    pub bounds: Bounds,
    /// Single-trial error bound for these bounds at this `q`.
    pub epsilon: f64,
}

/// `8 d k^4 / q + q^(-1/(k^2 - 1))`; the second term is dropped for `k = 1`.
pub fn single_trial_error(k: usize, d: u32, q: u64) -> f64 {
    let k = k as f64;
    let poly = 8.0 * f64::from(d) * k.powi(4) / q as f64;
    let sub = if k > 1.0 {
        (q as f64).powf(-1.0 / (k * k - 1.0))
    } else {
        0.0
    };
    poly + sub
}

/// `ceil(ln(1/delta) / ln(1/epsilon))`, at least one.
pub fn repetitions_for(epsilon: f64, delta: f64) -> u64 {
    if epsilon <= 0.0 {
        return 1;
    }
    ((1.0 / delta).ln() / (1.0 / epsilon).ln()).ceil().max(1.0) as u64
}

fn min_q(bounds: &Bounds) -> Result<u64, PitError> {
    let kw = BigUint::from(bounds.k) * &bounds.w;
    let floor = BigUint::from(2u32) * &kw * &kw + 1u32;
    floor
        .to_u64()
        .filter(|&f| f <= MAX_MODULUS)
        .ok_or(PitError::Field(FieldError::SearchExhausted))
}

/// The smallest pair with `q > 2 (k w)^2`, ignoring the error bound.
pub fn regime_pair(k: usize, w: impl Into<BigUint>) -> Result<PrimePair, PitError> {
    Ok(generate_prime_pair(min_q(&Bounds::new(k, 0, w))?)?)
}

/// Chooses `q > 2 (k w)^2` with single-trial error below one (doubling the
/// search floor until it is), then `p`, `a`, and enough repetitions for
/// overall error `delta`. With `q_override` the given prime is used as is and
/// must satisfy both conditions.
pub fn select_params(
    bounds: Bounds,
    delta: f64,
    seed: u64,
    q_override: Option<u64>,
) -> Result<TestPlan, PitError> {
    if bounds.k == 0 || bounds.w.is_zero() {
        return Err(PitError::InvalidPlan("width and weight must be at least 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(PitError::InvalidPlan(format!("delta = {delta} is not in (0, 1)")));
    }
    let floor = min_q(&bounds)?;
    let q = match q_override {
        Some(q) => {
            if !is_prime(q) {
                return Err(PitError::InvalidPlan(format!("q = {q} is not prime")));
            }
            if q < floor {
                return Err(PitError::InvalidPlan(format!(
                    "q = {q} does not exceed 2(kw)^2 = {}",
                    floor - 1
                )));
            }
            let eps = single_trial_error(bounds.k, bounds.d, q);
            if eps >= 1.0 {
                return Err(PitError::InvalidPlan(format!(
                    "q = {q} gives single-trial error bound {eps:.4} >= 1"
                )));
            }
            q
        }
        None => {
            let mut floor = floor;
            loop {
                let pair = generate_prime_pair(floor)?;
                if single_trial_error(bounds.k, bounds.d, pair.q) < 1.0 {
                    break pair.q;
                }
                floor = floor
                    .checked_mul(2)
                    .filter(|&f| f <= MAX_MODULUS)
                    .ok_or(FieldError::SearchExhausted)?;
            }
        }
    };
    let PrimePair { p, q } = generate_prime_pair(q)?;
    let a = find_subgroup_element(p, q, seed)?;
    let params = FieldParams::new(p, q, a)?;
    let epsilon = single_trial_error(bounds.k, bounds.d, q);
    Ok(TestPlan {
        params,
        repetitions: repetitions_for(epsilon, delta),
        seed,
        bounds,
        epsilon,
    })
}

/// Deterministic stream for trial `index` of a test seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A point certifying that a circuit is not identically zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// The circuit evaluates to `value != 0` at `(u, v)` with generator `a`.
    Finite {
        u: Vec<u64>,
        v: Vec<u64>,
        a: u64,
        value: u64,
    },
    /// Both halves of the fraction are nonzero over the reals at `x`.
    Real { x: Vec<BigInt> },
}

impl Witness {
    fn to_json(&self) -> serde_json::Value {
        match self {
            Witness::Finite { u, v, a, value } => {
                json!({ "u": u, "v": v, "a": a, "value": value })
            }
            Witness::Real { x } => {
                json!({ "x": x.iter().map(|b| b.to_string()).collect::<Vec<_>>() })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    AcceptZero,
    RejectNonZero(Witness),
    EmptyDomain,
    Inconclusive(String),
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::AcceptZero => "accept_zero",
            Verdict::RejectNonZero(_) => "reject_nonzero",
            Verdict::EmptyDomain => "empty_domain",
            Verdict::Inconclusive(_) => "inconclusive",
        }
    }
}

/// A verdict with the context needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub verdict: Verdict,
    /// Trials run up to and including the deciding one.
    pub trials: u64,
    pub params: Option<FieldParams>,
    pub seed: u64,
    pub wall_time: Option<Duration>,
}

impl TestReport {
    /// JSON object with `decision`, `trials`, `params`, `witness`, `seed`,
    /// plus `reason` and `wall_time_ms` when present. Keys are sorted, so
    /// equal reports serialize to equal bytes.
    pub fn to_json(&self) -> String {
        let mut obj = json!({
            "decision": self.verdict.name(),
            "trials": self.trials,
            "seed": self.seed,
            "params": self.params.map(|f| json!({ "p": f.p(), "q": f.q(), "a": f.a() })),
            "witness": match &self.verdict {
                Verdict::RejectNonZero(w) => w.to_json(),
                _ => serde_json::Value::Null,
            },
        });
        if let Verdict::Inconclusive(reason) = &self.verdict {
            obj["reason"] = json!(reason);
        }
        if let Some(t) = self.wall_time {
            obj["wall_time_ms"] = json!(t.as_secs_f64() * 1e3);
        }
        serde_json::to_string_pretty(&obj).expect("plain data serializes")
    }
}

/// One uniformly random query `(u, v, a)` for trial `index`.
pub fn sample_point(params: &FieldParams, n: usize, seed: u64, index: u64) -> (Vec<u64>, Vec<u64>, u64) {
    let mut rng = trial_rng(seed, index);
    let u = (0..n).map(|_| rng.random_range(0..params.p())).collect();
    let v = (0..n).map(|_| rng.random_range(0..params.q())).collect();
    let a = params.subgroup_element(rng.random_range(0..params.q()));
    (u, v, a)
}

fn run_trial(prep: &PreparedCircuit, plan: &TestPlan, index: u64) -> Option<Witness> {
    let (u, v, a) = sample_point(&plan.params, prep.num_inputs(), plan.seed, index);
    match prep.eval(&u, &v, a) {
        Some(value) if value != 0 => Some(Witness::Finite { u, v, a, value }),
        _ => None,
    }
}

/// Runs the plan's trials and rejects on the first defined nonzero value.
pub fn test_zero_report(c: &Circuit, plan: &TestPlan) -> TestReport {
    let start = Instant::now();
    let prep = c.prepare(plan.params.p(), plan.params.q());
    let found = (0..plan.repetitions)
        .into_par_iter()
        .find_map_first(|i| run_trial(&prep, plan, i).map(|w| (i, w)));
    let (verdict, trials) = match found {
        Some((i, w)) => (Verdict::RejectNonZero(w), i + 1),
        None => (Verdict::AcceptZero, plan.repetitions),
    };
    TestReport {
        verdict,
        trials,
        params: Some(plan.params),
        seed: plan.seed,
        wall_time: Some(start.elapsed()),
    }
}

pub fn test_zero(c: &Circuit, plan: &TestPlan) -> Verdict {
    test_zero_report(c, plan).verdict
}

/// Tests `c1 - c2`. The difference is defined only where both are.
pub fn test_equiv(c1: &Circuit, c2: &Circuit, plan: &TestPlan) -> Result<Verdict, PitError> {
    Ok(test_zero(&Circuit::difference(c1, c2)?, plan))
}

/// Exact answer to "is this circuit zero wherever it is defined".
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", content = "reason", rename_all = "snake_case")]
pub enum OracleOutcome {
    Zero,
    NonZero,
    EmptyDomain,
    Inconclusive(String),
}

/// Converts to `P / P'`, condenses both, and reads off the answer:
/// a zero exponent denominator or an empty `P'` means the domain is empty,
/// an empty `P` means zero.
pub fn exact_zero_oracle(c: &Circuit, term_cap: usize) -> OracleOutcome {
    let (p, q) = match c.to_fraction(term_cap) {
        Ok(pq) => pq,
        Err(e) => return OracleOutcome::Inconclusive(e.to_string()),
    };
    let (Ok(cq), Ok(cp)) = (q.condense(), p.condense()) else {
        return OracleOutcome::EmptyDomain;
    };
    if cq.is_empty() {
        OracleOutcome::EmptyDomain
    } else if cp.is_empty() {
        OracleOutcome::Zero
    } else {
        OracleOutcome::NonZero
    }
}

/// `max(20 d k^2, 20)` for the fraction's width and degree.
pub fn real_model_range(p: &ExpPoly, q: &ExpPoly) -> u64 {
    let b = Bounds::of_fraction(p, q);
    (20 * u64::from(b.d) * (b.k as u64).pow(2)).max(20)
}

/// One real-model trial at `x`: nonzero iff both halves are nonzero.
pub fn real_model_trial(p: &ExpPoly, q: &ExpPoly, x: &[BigInt]) -> bool {
    let nz = |e: &ExpPoly| e.rational_sign_class(x).ok() == Some(SignClass::NonZero);
    nz(q) && nz(p)
}

pub fn sample_integer_point(n: usize, range: u64, seed: u64, index: u64) -> Vec<BigInt> {
    let mut rng = trial_rng(seed, index);
    (0..n).map(|_| BigInt::from(rng.random_range(1..=range))).collect()
}

/// Samples `x` uniformly from `{1, ..., B}^n` with `B = max(20 d k^2, 20)`
/// and rejects at the first point where the circuit is defined and nonzero.
pub fn real_model_test(c: &Circuit, trials: u64, seed: u64, term_cap: usize) -> TestReport {
    let start = Instant::now();
    let report = |verdict, trials| TestReport {
        verdict,
        trials,
        params: None,
        seed,
        wall_time: Some(start.elapsed()),
    };
    let (p, q) = match c.to_fraction(term_cap) {
        Ok(pq) => pq,
        Err(e) => return report(Verdict::Inconclusive(e.to_string()), 0),
    };
    let range = real_model_range(&p, &q);
    let n = c.num_inputs();
    let found = (0..trials).into_par_iter().find_map_first(|i| {
        let x = sample_integer_point(n, range, seed, i);
        real_model_trial(&p, &q, &x).then_some((i, x))
    });
    match found {
        Some((i, x)) => report(Verdict::RejectNonZero(Witness::Real { x }), i + 1),
        None => report(Verdict::AcceptZero, trials),
    }
}
