//! Circuits over `+`, `*`, `/` and `exp` with at most one `exp` gate on any
//! path, their evaluation over `(F_p, F_q)`, and conversion to a fraction
//! `P / P'` of exponential polynomials.

mod builders;
pub mod gen;
mod json;

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{CircuitError, ValidationError};
use crate::exppoly::{ExpPoly, ExpTerm};
use crate::field::{mod_add, mod_inv, mod_mul, mod_pow, FieldParams};
use crate::intpoly::{reduce_big, SparsePoly};

pub use builders::{attention, constant, glu, softmax, softmax_sum, softmax_sum_minus_one};
pub use json::{CircuitDef, GateDef, KindTag};

/// Default cap on the number of terms in any intermediate of [`Circuit::to_fraction`].
pub const DEFAULT_TERM_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GateId(pub u32);

impl fmt::Display for GateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GateKind {
    /// Reads input coordinate `var` (zero-based).
    Input { var: usize },
    Const { value: BigInt },
    Add,
    Mul,
    /// Children are `[numerator, denominator]`.
    Div,
    Exp,
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Input { .. } => "input",
            GateKind::Const { .. } => "const",
            GateKind::Add => "add",
            GateKind::Mul => "mul",
            GateKind::Div => "div",
            GateKind::Exp => "exp",
        }
    }

    fn fan_in_ok(&self, n: usize) -> Result<(), &'static str> {
        match self {
            GateKind::Input { .. } | GateKind::Const { .. } if n != 0 => Err("0"),
            GateKind::Add | GateKind::Mul if n == 0 => Err(">= 1"),
            GateKind::Div if n != 2 => Err("2"),
            GateKind::Exp if n != 1 => Err("1"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    pub id: GateId,
    pub kind: GateKind,
    pub children: Vec<GateId>,
}

/// A validated circuit. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    num_inputs: usize,
    output: GateId,
    gates: Vec<Gate>,
    index: HashMap<GateId, usize>,
    /// Indices into `gates` for the output cone, children before parents.
    order: Vec<usize>,
}

/// Value on a wire: an `F_p` coordinate and an `F_q` coordinate, each
/// possibly undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DualValue {
    pub num: Option<u64>,
    pub exp: Option<u64>,
}

impl Circuit {
    /// Validates `gates` and builds the circuit.
    pub fn new(
        num_inputs: usize,
        output: GateId,
        gates: Vec<Gate>,
    ) -> Result<Circuit, ValidationError> {
        let mut index = HashMap::with_capacity(gates.len());
        for (i, g) in gates.iter().enumerate() {
            if index.insert(g.id, i).is_some() {
                return Err(ValidationError::DuplicateId(g.id));
            }
        }
        for g in &gates {
            if let Some(&missing) = g.children.iter().find(|c| !index.contains_key(c)) {
                return Err(ValidationError::DanglingReference {
                    from: g.id,
                    to: missing,
                });
            }
            if let Err(expected) = g.kind.fan_in_ok(g.children.len()) {
                return Err(ValidationError::FanInViolation {
                    id: g.id,
                    kind: g.kind.name(),
                    got: g.children.len(),
                    expected,
                });
            }
            if let GateKind::Input { var } = g.kind {
                if var >= num_inputs {
                    return Err(ValidationError::InputOutOfRange {
                        id: g.id,
                        var,
                        num_inputs,
                    });
                }
            }
        }
        let Some(&out_idx) = index.get(&output) else {
            return Err(ValidationError::MissingOutput(output));
        };

        let all = topological(&gates, &index, 0..gates.len())?;
        check_exp_depth(&gates, &index, &all)?;
        let order = topological(&gates, &index, std::iter::once(out_idx))?;
        Ok(Circuit {
            num_inputs,
            output,
            gates,
            index,
            order,
        })
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn output(&self) -> GateId {
        self.output
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, id: GateId) -> Option<&Gate> {
        self.index.get(&id).map(|&i| &self.gates[i])
    }

    /// Number of gates, including any outside the output cone.
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Gates feeding the output, children before parents.
    pub fn cone(&self) -> impl Iterator<Item = &Gate> + '_ {
        self.order.iter().map(move |&i| &self.gates[i])
    }

    pub fn contains_exp(&self) -> bool {
        self.cone().any(|g| g.kind == GateKind::Exp)
    }

    /// Compiles the output cone with constants reduced mod `p` and `q`.
    pub fn prepare(&self, p: u64, q: u64) -> PreparedCircuit {
        let (bp, bq) = (BigInt::from(p), BigInt::from(q));
        let slot: HashMap<GateId, usize> = self
            .order
            .iter()
            .enumerate()
            .map(|(s, &i)| (self.gates[i].id, s))
            .collect();
        let ops = self
            .cone()
            .map(|g| {
                let ch: Vec<usize> = g.children.iter().map(|c| slot[c]).collect();
                match &g.kind {
                    GateKind::Input { var } => Op::Input(*var),
                    GateKind::Const { value } => {
                        Op::Const(reduce_big(value, &bp), reduce_big(value, &bq))
                    }
                    GateKind::Add => Op::Add(ch),
                    GateKind::Mul => Op::Mul(ch),
                    GateKind::Div => Op::Div(ch[0], ch[1]),
                    GateKind::Exp => Op::Exp(ch[0]),
                }
            })
            .collect();
        PreparedCircuit {
            p,
            q,
            num_inputs: self.num_inputs,
            ops,
        }
    }

    fn check_arity(&self, u: &[u64], v: &[u64]) -> Result<(), CircuitError> {
        for got in [u.len(), v.len()] {
            if got != self.num_inputs {
                return Err(CircuitError::ArityMismatch {
                    expected: self.num_inputs,
                    got,
                });
            }
        }
        Ok(())
    }

    /// Dual-track value of the output gate at `(u, v)` with `exp(x) = a^x`.
    pub fn eval_dual(
        &self,
        u: &[u64],
        v: &[u64],
        params: &FieldParams,
    ) -> Result<DualValue, CircuitError> {
        self.check_arity(u, v)?;
        Ok(self.prepare(params.p(), params.q()).eval_dual(u, v, params.a()))
    }

    /// The `F_p` coordinate of [`Circuit::eval_dual`]; `None` means undefined.
    pub fn eval_finite(
        &self,
        u: &[u64],
        v: &[u64],
        params: &FieldParams,
    ) -> Result<Option<u64>, CircuitError> {
        Ok(self.eval_dual(u, v, params)?.num)
    }

    /// Rewrites the circuit as `P / P'` following its structure gate by gate.
    ///
    /// Intermediates are not condensed. Fails with `TermBlowup` as soon as
    /// any intermediate would exceed `term_cap` terms.
    pub fn to_fraction(&self, term_cap: usize) -> Result<(ExpPoly, ExpPoly), CircuitError> {
        let n = self.num_inputs;
        let mut memo: HashMap<GateId, (ExpPoly, ExpPoly)> = HashMap::new();
        for g in self.cone() {
            let cap = |w: usize| -> Result<(), CircuitError> {
                if w > term_cap {
                    Err(CircuitError::TermBlowup {
                        gate: g.id,
                        cap: term_cap,
                    })
                } else {
                    Ok(())
                }
            };
            let mul = |a: &ExpPoly, b: &ExpPoly| -> Result<ExpPoly, CircuitError> {
                cap(a.width().saturating_mul(b.width()))?;
                Ok(a * b)
            };
            let kids: Vec<&(ExpPoly, ExpPoly)> = g.children.iter().map(|c| &memo[c]).collect();
            let value = match &g.kind {
                GateKind::Input { var } => {
                    (ExpPoly::polynomial(SparsePoly::var(*var, n)), ExpPoly::one(n))
                }
                GateKind::Const { value } => (ExpPoly::constant(value.clone(), n), ExpPoly::one(n)),
                GateKind::Add => {
                    let mut num = ExpPoly::empty(n);
                    for (i, (p, _)) in kids.iter().enumerate() {
                        let mut term = p.clone();
                        for (j, (_, d)) in kids.iter().enumerate() {
                            if j != i {
                                term = mul(&term, d)?;
                            }
                        }
                        cap(num.width() + term.width())?;
                        num = &num + &term;
                    }
                    (num, product(kids.iter().map(|k| &k.1), &mul)?)
                }
                GateKind::Mul => (
                    product(kids.iter().map(|k| &k.0), &mul)?,
                    product(kids.iter().map(|k| &k.1), &mul)?,
                ),
                GateKind::Div => {
                    let ((p1, d1), (p2, d2)) = (kids[0], kids[1]);
                    (mul(p1, d2)?, mul(p2, d1)?)
                }
                GateKind::Exp => {
                    let (p1, d1) = kids[0];
                    debug_assert!(p1.is_exp_free() && d1.is_exp_free());
                    let e = ExpPoly::from_terms(
                        n,
                        [ExpTerm::with_any_denominator(
                            SparsePoly::one(n),
                            p1.coefficient_sum(),
                            d1.coefficient_sum(),
                        )
                        .expect("children share the variable count")],
                    )
                    .expect("variable counts agree");
                    (e, ExpPoly::one(n))
                }
            };
            cap(value.0.width())?;
            cap(value.1.width())?;
            memo.insert(g.id, value);
        }
        Ok(memo.remove(&self.output).expect("output is in its own cone"))
    }

    /// `c1 - c2` as `Add(c1, Mul(Const(-1), c2))`, on fresh gate ids.
    pub fn difference(c1: &Circuit, c2: &Circuit) -> Result<Circuit, CircuitError> {
        if c1.num_inputs != c2.num_inputs {
            return Err(CircuitError::ArityMismatch {
                expected: c1.num_inputs,
                got: c2.num_inputs,
            });
        }
        let mut b = CircuitBuilder::new(c1.num_inputs);
        let o1 = b.import(c1);
        let o2 = b.import(c2);
        let out = b.sub(o1, o2);
        Ok(b.build(out)?)
    }
}

fn product<'a>(
    items: impl Iterator<Item = &'a ExpPoly>,
    mul: &impl Fn(&ExpPoly, &ExpPoly) -> Result<ExpPoly, CircuitError>,
) -> Result<ExpPoly, CircuitError> {
    let mut acc: Option<ExpPoly> = None;
    for item in items {
        acc = Some(match acc {
            None => item.clone(),
            Some(a) => mul(&a, item)?,
        });
    }
    Ok(acc.expect("fan-in is at least one"))
}

/// Post-order DFS from `roots`; errors on a back edge.
fn topological(
    gates: &[Gate],
    index: &HashMap<GateId, usize>,
    roots: impl Iterator<Item = usize>,
) -> Result<Vec<usize>, ValidationError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark = vec![Mark::New; gates.len()];
    let mut order = Vec::with_capacity(gates.len());
    for root in roots {
        if mark[root] != Mark::New {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Open;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(child) = gates[node].children.get(*next) {
                *next += 1;
                let c = index[child];
                match mark[c] {
                    Mark::New => {
                        mark[c] = Mark::Open;
                        stack.push((c, 0));
                    }
                    Mark::Open => return Err(ValidationError::CyclicGraph(gates[c].id)),
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                order.push(node);
                stack.pop();
            }
        }
    }
    Ok(order)
}

/// Counts `exp` gates on the heaviest path into each gate and reports the
/// first gate reached by two of them, with that path.
fn check_exp_depth(
    gates: &[Gate],
    index: &HashMap<GateId, usize>,
    order: &[usize],
) -> Result<(), ValidationError> {
    let mut depth = vec![0u32; gates.len()];
    let mut via: Vec<Option<usize>> = vec![None; gates.len()];
    for &i in order {
        let g = &gates[i];
        let best = g
            .children
            .iter()
            .map(|c| index[c])
            .max_by_key(|&c| (depth[c], std::cmp::Reverse(c)));
        let base = best.map_or(0, |c| depth[c]);
        via[i] = best;
        depth[i] = base + u32::from(g.kind == GateKind::Exp);
        if depth[i] > 1 {
            let mut path = vec![g.id];
            let mut cur = via[i];
            while let Some(c) = cur {
                path.push(gates[c].id);
                cur = via[c];
            }
            path.reverse();
            return Err(ValidationError::NestedExponentiation { path });
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum Op {
    Input(usize),
    Const(u64, u64),
    Add(Vec<usize>),
    Mul(Vec<usize>),
    Div(usize, usize),
    Exp(usize),
}

/// A circuit compiled for repeated evaluation at fixed `(p, q)`.
#[derive(Debug, Clone)]
pub struct PreparedCircuit {
    p: u64,
    q: u64,
    num_inputs: usize,
    ops: Vec<Op>,
}

fn lift(a: Option<u64>, b: Option<u64>, f: impl Fn(u64, u64) -> u64) -> Option<u64> {
    Some(f(a?, b?))
}

impl PreparedCircuit {
    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    /// Panics if `u` or `v` is shorter than the input count.
    pub fn eval_dual(&self, u: &[u64], v: &[u64], a: u64) -> DualValue {
        let (p, q) = (self.p, self.q);
        let mut vals: Vec<DualValue> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let val = match op {
                Op::Input(i) => DualValue {
                    num: Some(u[*i] % p),
                    exp: Some(v[*i] % q),
                },
                Op::Const(bp, bq) => DualValue {
                    num: Some(*bp),
                    exp: Some(*bq),
                },
                Op::Add(ch) | Op::Mul(ch) => {
                    let is_add = matches!(op, Op::Add(_));
                    let mut acc = vals[ch[0]];
                    for &c in &ch[1..] {
                        let x = vals[c];
                        acc = if is_add {
                            DualValue {
                                num: lift(acc.num, x.num, |s, t| mod_add(s, t, p)),
                                exp: lift(acc.exp, x.exp, |s, t| mod_add(s, t, q)),
                            }
                        } else {
                            DualValue {
                                num: lift(acc.num, x.num, |s, t| mod_mul(s, t, p)),
                                exp: lift(acc.exp, x.exp, |s, t| mod_mul(s, t, q)),
                            }
                        };
                    }
                    acc
                }
                Op::Div(n, d) => {
                    let (n, d) = (vals[*n], vals[*d]);
                    let div = |s: Option<u64>, t: Option<u64>, m: u64| {
                        Some(mod_mul(s?, mod_inv(t?, m).ok()?, m))
                    };
                    DualValue {
                        num: div(n.num, d.num, p),
                        exp: div(n.exp, d.exp, q),
                    }
                }
                Op::Exp(c) => DualValue {
                    num: vals[*c].exp.map(|alpha| mod_pow(a, alpha, p)),
                    exp: None,
                },
            };
            vals.push(val);
        }
        *vals.last().expect("cone contains the output")
    }

    pub fn eval(&self, u: &[u64], v: &[u64], a: u64) -> Option<u64> {
        self.eval_dual(u, v, a).num
    }
}

/// Appends gates with sequential ids.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    num_inputs: usize,
    gates: Vec<Gate>,
    inputs: HashMap<usize, GateId>,
}

impl CircuitBuilder {
    pub fn new(num_inputs: usize) -> Self {
        CircuitBuilder {
            num_inputs,
            gates: Vec::new(),
            inputs: HashMap::new(),
        }
    }

    fn push(&mut self, kind: GateKind, children: Vec<GateId>) -> GateId {
        let id = GateId(self.gates.len() as u32);
        self.gates.push(Gate { id, kind, children });
        id
    }

    /// The input gate for `var`, created on first use.
    pub fn input(&mut self, var: usize) -> GateId {
        if let Some(&id) = self.inputs.get(&var) {
            return id;
        }
        let id = self.push(GateKind::Input { var }, vec![]);
        self.inputs.insert(var, id);
        id
    }

    pub fn constant(&mut self, value: impl Into<BigInt>) -> GateId {
        self.push(
            GateKind::Const {
                value: value.into(),
            },
            vec![],
        )
    }

    pub fn add(&mut self, children: Vec<GateId>) -> GateId {
        self.push(GateKind::Add, children)
    }

    pub fn mul(&mut self, children: Vec<GateId>) -> GateId {
        self.push(GateKind::Mul, children)
    }

    pub fn div(&mut self, num: GateId, den: GateId) -> GateId {
        self.push(GateKind::Div, vec![num, den])
    }

    pub fn exp(&mut self, child: GateId) -> GateId {
        self.push(GateKind::Exp, vec![child])
    }

    pub fn neg(&mut self, x: GateId) -> GateId {
        let m = self.constant(-1);
        self.mul(vec![m, x])
    }

    pub fn sub(&mut self, x: GateId, y: GateId) -> GateId {
        let ny = self.neg(y);
        self.add(vec![x, ny])
    }

    /// Copies the output cone of `c` and returns the new id of its output.
    pub fn import(&mut self, c: &Circuit) -> GateId {
        let mut map: HashMap<GateId, GateId> = HashMap::new();
        for g in c.cone() {
            let children = g.children.iter().map(|x| map[x]).collect();
            let id = match &g.kind {
                GateKind::Input { var } => self.input(*var),
                kind => self.push(kind.clone(), children),
            };
            map.insert(g.id, id);
        }
        map[&c.output]
    }

    pub fn build(self, output: GateId) -> Result<Circuit, ValidationError> {
        Circuit::new(self.num_inputs, output, self.gates)
    }
}

#[cfg(test)]
mod tests;
