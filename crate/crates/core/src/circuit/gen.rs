//! Random circuits and identity-preserving rewrites, for testing and
//! benchmarking.

use std::collections::HashMap;

use num_bigint::BigInt;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::{Circuit, CircuitBuilder, GateId, GateKind};

/// A random valid circuit with `num_inputs` input gates and exactly
/// `num_gates` gates in total (at least `num_inputs + 1`). The last gate is
/// the output. Binary `add`/`mul`/`div`, small constants in `[-3, 3]`, and
/// `exp` only over exp-free subcircuits.
pub fn random_circuit<R: Rng + ?Sized>(rng: &mut R, num_inputs: usize, num_gates: usize) -> Circuit {
    assert!(num_inputs >= 1 && num_gates > num_inputs);
    let mut b = CircuitBuilder::new(num_inputs);
    let mut ids: Vec<GateId> = (0..num_inputs).map(|v| b.input(v)).collect();
    let mut has_exp: Vec<bool> = vec![false; num_inputs];
    while ids.len() < num_gates {
        let exp_free: Vec<usize> = (0..ids.len()).filter(|&i| !has_exp[i]).collect();
        // Bias toward later gates so the output cone tends to be deep.
        let pick = |rng: &mut R| {
            let n = ids.len();
            let lo = n.saturating_sub(4);
            if rng.random_bool(0.6) {
                rng.random_range(lo..n)
            } else {
                rng.random_range(0..n)
            }
        };
        let roll = rng.random_range(0..100);
        let (id, e) = if roll < 10 || (ids.len() + 1 == num_gates && roll < 15) {
            (b.constant(rng.random_range(-3i64..=3)), false)
        } else if roll < 35 {
            let (x, y) = (pick(rng), pick(rng));
            (b.add(vec![ids[x], ids[y]]), has_exp[x] || has_exp[y])
        } else if roll < 60 {
            let (x, y) = (pick(rng), pick(rng));
            (b.mul(vec![ids[x], ids[y]]), has_exp[x] || has_exp[y])
        } else if roll < 75 {
            let (x, y) = (pick(rng), pick(rng));
            (b.div(ids[x], ids[y]), has_exp[x] || has_exp[y])
        } else {
            let x = *exp_free.choose(rng).expect("inputs are exp-free");
            (b.exp(ids[x]), true)
        };
        ids.push(id);
        has_exp.push(e);
    }
    let out = *ids.last().expect("at least one gate");
    b.build(out).expect("generator keeps circuits valid")
}

/// A circuit computing the same function by a different gate structure:
/// children of `add`/`mul` are shuffled, `exp(a + b)` becomes
/// `exp(a) * exp(b)`, `a / b` becomes `a * (1 / b)`, and constants `c`
/// become `(c - 1) + 1`. Each rewrite is applied with probability one half.
pub fn equivalent_rewrite<R: Rng + ?Sized>(rng: &mut R, c: &Circuit) -> Circuit {
    let mut b = CircuitBuilder::new(c.num_inputs());
    let mut map: HashMap<GateId, GateId> = HashMap::new();
    for g in c.cone() {
        let mut children: Vec<GateId> = g.children.iter().map(|x| map[x]).collect();
        let flip = rng.random_bool(0.5);
        let id = match &g.kind {
            GateKind::Input { var } => b.input(*var),
            GateKind::Const { value } if flip => {
                let lo = b.constant(value - BigInt::from(1));
                let one = b.constant(1);
                b.add(vec![lo, one])
            }
            GateKind::Const { value } => b.constant(value.clone()),
            GateKind::Add | GateKind::Mul => {
                children.shuffle(rng);
                if g.kind == GateKind::Add {
                    b.add(children)
                } else {
                    b.mul(children)
                }
            }
            GateKind::Div if flip => {
                let one = b.constant(1);
                let inv = b.div(one, children[1]);
                b.mul(vec![children[0], inv])
            }
            GateKind::Div => b.div(children[0], children[1]),
            GateKind::Exp => {
                let child = c.gate(g.children[0]).expect("validated");
                if flip && child.kind == GateKind::Add {
                    let parts = child
                        .children
                        .iter()
                        .map(|x| b.exp(map[x]))
                        .collect();
                    b.mul(parts)
                } else {
                    b.exp(children[0])
                }
            }
        };
        map.insert(g.id, id);
    }
    b.build(map[&c.output()]).expect("rewrites keep circuits valid")
}
