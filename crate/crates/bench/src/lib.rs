//! Benchmark fixtures shared by the criterion targets.

use expid::{Circuit, ExpPoly, SparsePoly};

/// `(sum_i exp(x_i))^2`: n^2 terms, n(n-1)/2 duplicate exponent pairs.
pub fn squared_exp_sum(n: usize) -> ExpPoly {
    let mut s = ExpPoly::empty(n);
    for i in 0..n {
        let e = ExpPoly::exp_of(SparsePoly::var(i, n), SparsePoly::constant(1, n)).expect("h = 1");
        s = &s + &e;
    }
    &s * &s
}

/// Deterministic input vectors for a circuit over F_p x F_q.
pub fn points(c: &Circuit, p: u64, q: u64) -> (Vec<u64>, Vec<u64>) {
    let n = c.num_inputs() as u64;
    let u = (0..n).map(|i| (7 * i + 3) % p).collect();
    let v = (0..n).map(|i| (5 * i + 1) % q).collect();
    (u, v)
}
