//! Softmax, attention and gated linear units as families of single-output
//! circuits, one per output coordinate.

use super::{Circuit, CircuitBuilder, GateId};
use crate::error::CircuitError;

fn positive(dims: &[(&str, usize)]) -> Result<(), CircuitError> {
    match dims.iter().find(|(_, v)| *v == 0) {
        Some((name, _)) => Err(CircuitError::InvalidDims(format!("{name} must be positive"))),
        None => Ok(()),
    }
}

fn finish(b: CircuitBuilder, out: GateId) -> Circuit {
    b.build(out).expect("builder output is well formed")
}

/// `softmax(x)_i = exp(x_i) / sum_j exp(x_j)` over inputs `x_0 .. x_{n-1}`.
pub fn softmax(n: usize) -> Result<Vec<Circuit>, CircuitError> {
    positive(&[("n", n)])?;
    Ok((0..n)
        .map(|i| {
            let mut b = CircuitBuilder::new(n);
            let exps: Vec<GateId> = (0..n)
                .map(|j| {
                    let x = b.input(j);
                    b.exp(x)
                })
                .collect();
            let den = b.add(exps.clone());
            let out = b.div(exps[i], den);
            finish(b, out)
        })
        .collect())
}

/// `sum_i softmax(x)_i`, which is 1 wherever it is defined.
pub fn softmax_sum(n: usize) -> Result<Circuit, CircuitError> {
    softmax_sum_plus(n, None)
}

/// `sum_i softmax(x)_i - 1`, which vanishes wherever it is defined.
pub fn softmax_sum_minus_one(n: usize) -> Result<Circuit, CircuitError> {
    softmax_sum_plus(n, Some(-1))
}

fn softmax_sum_plus(n: usize, shift: Option<i64>) -> Result<Circuit, CircuitError> {
    positive(&[("n", n)])?;
    let mut b = CircuitBuilder::new(n);
    let exps: Vec<GateId> = (0..n)
        .map(|j| {
            let x = b.input(j);
            b.exp(x)
        })
        .collect();
    let den = b.add(exps.clone());
    let mut terms: Vec<GateId> = exps.iter().map(|&e| b.div(e, den)).collect();
    if let Some(s) = shift {
        terms.push(b.constant(s));
    }
    let out = b.add(terms);
    Ok(finish(b, out))
}

/// The constant `value` as a circuit over `num_inputs` unused inputs.
pub fn constant(num_inputs: usize, value: i64) -> Circuit {
    let mut b = CircuitBuilder::new(num_inputs);
    let c = b.constant(value);
    finish(b, c)
}

/// Single-head attention `softmax(Q K^T / sqrt(d_k)) V`.
///
/// Inputs are `Q` (`m x d_k`), then `K` (`n x d_k`), then `V` (`n x d_v`),
/// each row-major. Returns the `m * d_v` output coordinates row-major.
pub fn attention(m: usize, n: usize, d_k: usize, d_v: usize) -> Result<Vec<Circuit>, CircuitError> {
    positive(&[("m", m), ("n", n), ("d_k", d_k), ("d_v", d_v)])?;
    let root = (0..=d_k).find(|r| r * r >= d_k).unwrap_or(d_k);
    if root * root != d_k {
        return Err(CircuitError::InvalidDims(format!(
            "d_k = {d_k} is not a perfect square"
        )));
    }
    let q_var = |i: usize, t: usize| i * d_k + t;
    let k_var = |k: usize, t: usize| m * d_k + k * d_k + t;
    let v_var = |k: usize, j: usize| m * d_k + n * d_k + k * d_v + j;
    let num_inputs = m * d_k + n * d_k + n * d_v;

    let mut out = Vec::with_capacity(m * d_v);
    for i in 0..m {
        for j in 0..d_v {
            let mut b = CircuitBuilder::new(num_inputs);
            let scale = b.constant(root as u64);
            let exps: Vec<GateId> = (0..n)
                .map(|k| {
                    let prods: Vec<GateId> = (0..d_k)
                        .map(|t| {
                            let q = b.input(q_var(i, t));
                            let kk = b.input(k_var(k, t));
                            b.mul(vec![q, kk])
                        })
                        .collect();
                    let dot = b.add(prods);
                    let score = b.div(dot, scale);
                    b.exp(score)
                })
                .collect();
            let weighted: Vec<GateId> = (0..n)
                .map(|k| {
                    let v = b.input(v_var(k, j));
                    b.mul(vec![v, exps[k]])
                })
                .collect();
            let num = b.add(weighted);
            let den = b.add(exps);
            let o = b.div(num, den);
            out.push(finish(b, o));
        }
    }
    Ok(out)
}

/// `GLU(x)_i = (x V)_i * sigmoid((x W)_i)`, written as
/// `(x V)_i / (1 + exp(-(x W)_i))`.
///
/// Inputs are `x` (`n`), then `W` (`n x m`), then `V` (`n x m`), row-major.
/// Returns the `m` output coordinates.
pub fn glu(n: usize, m: usize) -> Result<Vec<Circuit>, CircuitError> {
    positive(&[("n", n), ("m", m)])?;
    let w_var = |j: usize, i: usize| n + j * m + i;
    let v_var = |j: usize, i: usize| n + n * m + j * m + i;
    let num_inputs = n + 2 * n * m;
    Ok((0..m)
        .map(|i| {
            let mut b = CircuitBuilder::new(num_inputs);
            let dot = |b: &mut CircuitBuilder, var: &dyn Fn(usize) -> usize| {
                let prods: Vec<GateId> = (0..n)
                    .map(|j| {
                        let x = b.input(j);
                        let w = b.input(var(j));
                        b.mul(vec![x, w])
                    })
                    .collect();
                b.add(prods)
            };
            let xv = dot(&mut b, &|j| v_var(j, i));
            let xw = dot(&mut b, &|j| w_var(j, i));
            let neg = b.neg(xw);
            let e = b.exp(neg);
            let one = b.constant(1);
            let den = b.add(vec![one, e]);
            let out = b.div(xv, den);
            finish(b, out)
        })
        .collect())
}
