use super::gen::{equivalent_rewrite, random_circuit};
use super::*;
use crate::error::ValidationError;
use crate::exppoly::PreparedExpPoly;
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params() -> FieldParams {
    FieldParams::new(23, 11, 2).unwrap()
}

fn exp_x() -> Circuit {
    let mut b = CircuitBuilder::new(1);
    let x = b.input(0);
    let e = b.exp(x);
    b.build(e).unwrap()
}

fn gate(id: u32, kind: GateKind, children: &[u32]) -> Gate {
    Gate {
        id: GateId(id),
        kind,
        children: children.iter().map(|&c| GateId(c)).collect(),
    }
}

#[test]
fn eval_exp_example() {
    assert_eq!(exp_x().eval_finite(&[5], &[3], &params()).unwrap(), Some(8));
    assert!(exp_x().eval_finite(&[5, 1], &[3], &params()).is_err());
}

#[test]
fn eval_division_by_zero_is_undefined() {
    let mut b = CircuitBuilder::new(1);
    let one = b.constant(1);
    let x = b.input(0);
    let d = b.div(one, x);
    let c = b.build(d).unwrap();
    assert_eq!(c.eval_finite(&[0], &[4], &params()).unwrap(), None);
    assert_eq!(c.eval_finite(&[2], &[4], &params()).unwrap(), Some(12));
    // Only the num coordinate matters at the output.
    let dual = c.eval_dual(&[2], &[0], &params()).unwrap();
    assert_eq!(dual, DualValue { num: Some(12), exp: None });
}

#[test]
fn exp_of_undefined_exponent_is_undefined() {
    let mut b = CircuitBuilder::new(1);
    let one = b.constant(1);
    let x = b.input(0);
    let d = b.div(one, x);
    let e = b.exp(d);
    let c = b.build(e).unwrap();
    assert_eq!(c.eval_dual(&[3], &[0], &params()).unwrap(), DualValue { num: None, exp: None });
    // A zero num coordinate under the exp is irrelevant.
    assert!(c.eval_finite(&[0], &[3], &params()).unwrap().is_some());
}

#[test]
fn product_of_exps_matches_exp_of_sum_exhaustively() {
    let mut b = CircuitBuilder::new(2);
    let (x, y) = (b.input(0), b.input(1));
    let (ex, ey) = (b.exp(x), b.exp(y));
    let m = b.mul(vec![ex, ey]);
    let lhs = b.build(m).unwrap();
    let mut b = CircuitBuilder::new(2);
    let (x, y) = (b.input(0), b.input(1));
    let s = b.add(vec![x, y]);
    let e = b.exp(s);
    let rhs = b.build(e).unwrap();
    let (pl, pr) = (lhs.prepare(23, 11), rhs.prepare(23, 11));
    for a in (0..11).map(|j| params().subgroup_element(j)) {
        for v0 in 0..11 {
            for v1 in 0..11 {
                for u in [[0, 0], [4, 19]] {
                    assert_eq!(pl.eval(&u, &[v0, v1], a), pr.eval(&u, &[v0, v1], a));
                }
            }
        }
    }
}

#[test]
fn validation_rejects_nested_exp_with_path() {
    let mut b = CircuitBuilder::new(1);
    let x = b.input(0);
    let e1 = b.exp(x);
    let one = b.constant(1);
    let s = b.add(vec![e1, one]);
    let e2 = b.exp(s);
    let err = b.build(e2).unwrap_err();
    let ValidationError::NestedExponentiation { path } = err else {
        panic!("wrong error {err:?}");
    };
    assert_eq!(path, vec![GateId(0), GateId(1), GateId(3), GateId(4)]);
}

#[test]
fn validation_rejects_nested_exp_outside_output_cone() {
    let gates = vec![
        gate(0, GateKind::Input { var: 0 }, &[]),
        gate(1, GateKind::Exp, &[0]),
        gate(2, GateKind::Exp, &[1]),
    ];
    assert!(matches!(
        Circuit::new(1, GateId(0), gates),
        Err(ValidationError::NestedExponentiation { .. })
    ));
}

#[test]
fn validation_errors() {
    let x = || gate(0, GateKind::Input { var: 0 }, &[]);
    let cases: Vec<(Vec<Gate>, u32, ValidationError)> = vec![
        (
            vec![x(), gate(1, GateKind::Div, &[0])],
            1,
            ValidationError::FanInViolation { id: GateId(1), kind: "div", got: 1, expected: "2" },
        ),
        (
            vec![x(), gate(1, GateKind::Add, &[])],
            1,
            ValidationError::FanInViolation { id: GateId(1), kind: "add", got: 0, expected: ">= 1" },
        ),
        (
            vec![x(), gate(1, GateKind::Exp, &[0, 0])],
            1,
            ValidationError::FanInViolation { id: GateId(1), kind: "exp", got: 2, expected: "1" },
        ),
        (
            vec![x(), gate(1, GateKind::Add, &[0, 7])],
            1,
            ValidationError::DanglingReference { from: GateId(1), to: GateId(7) },
        ),
        (vec![x()], 5, ValidationError::MissingOutput(GateId(5))),
        (vec![x(), x()], 0, ValidationError::DuplicateId(GateId(0))),
        (
            vec![gate(0, GateKind::Input { var: 3 }, &[])],
            0,
            ValidationError::InputOutOfRange { id: GateId(0), var: 3, num_inputs: 1 },
        ),
        (
            vec![x(), gate(1, GateKind::Add, &[0, 2]), gate(2, GateKind::Mul, &[1])],
            2,
            ValidationError::CyclicGraph(GateId(1)),
        ),
    ];
    for (gates, out, expected) in cases {
        assert_eq!(Circuit::new(1, GateId(out), gates), Err(expected));
    }
}

#[test]
fn self_loop_is_a_cycle() {
    let gates = vec![gate(0, GateKind::Add, &[0])];
    assert_eq!(
        Circuit::new(0, GateId(0), gates),
        Err(ValidationError::CyclicGraph(GateId(0)))
    );
}

fn sp(s: &str, n: usize) -> SparsePoly {
    SparsePoly::parse(s, n).unwrap()
}

#[test]
fn fraction_examples() {
    let (p, q) = exp_x().to_fraction(DEFAULT_TERM_CAP).unwrap();
    assert_eq!(p, ExpPoly::exp_of(sp("x1", 1), sp("1", 1)).unwrap());
    assert_eq!(q, ExpPoly::one(1));

    let mut b = CircuitBuilder::new(2);
    let (x, y) = (b.input(0), b.input(1));
    let d = b.div(x, y);
    let (p, q) = b.build(d).unwrap().to_fraction(DEFAULT_TERM_CAP).unwrap();
    assert_eq!(p, ExpPoly::polynomial(sp("x1", 2)));
    assert_eq!(q, ExpPoly::polynomial(sp("x2", 2)));

    let s = softmax(2).unwrap();
    let (p, q) = s[0].to_fraction(DEFAULT_TERM_CAP).unwrap();
    assert_eq!(p, ExpPoly::exp_of(sp("x1", 2), sp("1", 2)).unwrap());
    let expected = &ExpPoly::exp_of(sp("x1", 2), sp("1", 2)).unwrap()
        + &ExpPoly::exp_of(sp("x2", 2), sp("1", 2)).unwrap();
    assert_eq!(q, expected);
}

#[test]
fn fraction_respects_term_cap() {
    // (x + 1)^8 as a product of eight binary sums has 2^8 terms.
    let mut b = CircuitBuilder::new(1);
    let x = b.input(0);
    let one = b.constant(1);
    let s = b.add(vec![x, one]);
    let m = b.mul(vec![s; 8]);
    let c = b.build(m).unwrap();
    assert_eq!(c.to_fraction(256).unwrap().0.width(), 256);
    assert!(matches!(
        c.to_fraction(255),
        Err(CircuitError::TermBlowup { gate: GateId(3), cap: 255 })
    ));
}

fn big(x: u32) -> BigUint {
    BigUint::from(x)
}

#[test]
fn builder_metrics() {
    let sm = softmax(3).unwrap();
    assert_eq!(sm.len(), 3);
    for c in &sm {
        let (p, q) = c.to_fraction(DEFAULT_TERM_CAP).unwrap();
        assert_eq!(p.metrics(), (1, 1, big(1)));
        assert_eq!(q.metrics(), (3, 1, big(1)));
    }

    let g = glu(2, 1).unwrap();
    assert_eq!(g.len(), 1);
    assert_eq!(g[0].num_inputs(), 6);
    let (_, q) = g[0].to_fraction(DEFAULT_TERM_CAP).unwrap();
    assert_eq!(q.metrics(), (2, 2, big(1)));

    let at = attention(1, 2, 4, 1).unwrap();
    assert_eq!(at.len(), 1);
    assert_eq!(at[0].num_inputs(), 14);
    let (_, q) = at[0].to_fraction(DEFAULT_TERM_CAP).unwrap();
    assert_eq!(q.metrics(), (2, 2, big(2)));

    let at = attention(2, 3, 9, 2).unwrap();
    assert_eq!(at.len(), 4);
    let (_, q) = at[3].to_fraction(DEFAULT_TERM_CAP).unwrap();
    assert_eq!(q.metrics(), (3, 2, big(3)));
}

#[test]
fn builder_dimension_errors() {
    assert!(matches!(softmax(0), Err(CircuitError::InvalidDims(_))));
    assert!(matches!(attention(1, 2, 3, 1), Err(CircuitError::InvalidDims(_))));
    assert!(matches!(glu(0, 1), Err(CircuitError::InvalidDims(_))));
    assert!(softmax_sum_minus_one(3).unwrap().contains_exp());
}

#[test]
fn json_round_trip_and_strictness() {
    for c in softmax(3).unwrap().into_iter().chain(glu(2, 2).unwrap()) {
        assert_eq!(Circuit::from_json(&c.to_json()).unwrap(), c);
    }
    let text = r#"{"num_inputs": 1, "output": 2, "gates": [
        {"id": 0, "kind": "input", "var": 0},
        {"id": 1, "kind": "const", "value": "-123456789012345678901234567890"},
        {"id": 2, "kind": "mul", "children": [0, 1]}]}"#;
    let c = Circuit::from_json(text).unwrap();
    assert_eq!(c.len(), 3);

    let unknown = text.replace("\"var\": 0", "\"var\": 0, \"weight\": 3");
    assert!(matches!(Circuit::from_json(&unknown), Err(CircuitError::Parse(_))));
    let bad_int = text.replace("-1234", "12x4");
    assert!(matches!(Circuit::from_json(&bad_int), Err(CircuitError::Parse(_))));
    let bad_kind = text.replace("\"mul\"", "\"pow\"");
    assert!(matches!(Circuit::from_json(&bad_kind), Err(CircuitError::Parse(_))));
    let numeric_value = text.replace("\"-123456789012345678901234567890\"", "5");
    assert!(matches!(Circuit::from_json(&numeric_value), Err(CircuitError::Parse(_))));
    let invalid = text.replace("[0, 1]", "[0, 9]");
    assert!(matches!(Circuit::from_json(&invalid), Err(CircuitError::Validation(_))));
}

#[test]
fn difference_of_identical_circuits_evaluates_to_zero() {
    let c = &softmax(3).unwrap()[1];
    let d = Circuit::difference(c, c).unwrap();
    let prep = d.prepare(23, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let u: Vec<u64> = (0..3).map(|_| rng.random_range(0..23)).collect();
        let v: Vec<u64> = (0..3).map(|_| rng.random_range(0..11)).collect();
        let a = params().subgroup_element(rng.random_range(0..11));
        assert!(matches!(prep.eval(&u, &v, a), None | Some(0)));
    }
    assert!(Circuit::difference(c, &exp_x()).is_err());
}

fn fraction_value(p: &PreparedExpPoly, q: &PreparedExpPoly, u: &[u64], v: &[u64], a: u64) -> Option<u64> {
    let den = q.eval(u, v, a)?;
    let inv = mod_inv(den, 23).ok()?;
    Some(mod_mul(p.eval(u, v, a)?, inv, 23))
}

/// True when no division sits below the divisor of another division. For
/// such circuits the circuit and its fraction have the same domain.
fn divisors_division_free(c: &Circuit) -> bool {
    fn has_div(c: &Circuit, id: GateId) -> bool {
        let g = c.gate(id).unwrap();
        g.kind == GateKind::Div || g.children.iter().any(|&ch| has_div(c, ch))
    }
    c.cone()
        .filter(|g| g.kind == GateKind::Div)
        .all(|g| !has_div(c, g.children[1]))
}

#[test]
fn fraction_agrees_with_circuit_exhaustively() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut domain_checked = 0;
    for round in 0..20 {
        let n = 1 + round % 2;
        let gates = rng.random_range(n + 2..=12);
        let c = random_circuit(&mut rng, n, gates);
        let (p, q) = c.to_fraction(DEFAULT_TERM_CAP).unwrap();
        let (pc, pp, pq) = (c.prepare(23, 11), p.prepare(23, 11), q.prepare(23, 11));
        let same_domain = divisors_division_free(&c);
        domain_checked += usize::from(same_domain);
        let points: Vec<Vec<u64>> = if n == 1 {
            (0..23).map(|x| vec![x]).collect()
        } else {
            (0..23 * 23).map(|x| vec![x / 23, x % 23]).collect()
        };
        let vpoints: Vec<Vec<u64>> = points.iter().filter(|x| x.iter().all(|&c| c < 11)).cloned().collect();
        for a in (0..11).map(|j| params().subgroup_element(j)) {
            for u in &points {
                for v in &vpoints {
                    let lhs = pc.eval(u, v, a);
                    let rhs = fraction_value(&pp, &pq, u, v, a);
                    if lhs.is_some() || same_domain {
                        assert_eq!(lhs, rhs, "circuit {round} at u={u:?} v={v:?} a={a}");
                    }
                }
            }
        }
    }
    assert!(domain_checked >= 5, "only {domain_checked} circuits exercised the domain check");
}

#[test]
fn nested_divisor_widens_fraction_domain() {
    // 1 / (1 / (x - y)) is undefined at x = y, while its fraction (x - y) / 1 is 0.
    let mut b = CircuitBuilder::new(2);
    let (x, y) = (b.input(0), b.input(1));
    let diff = b.sub(x, y);
    let one = b.constant(1);
    let inner = b.div(one, diff);
    let outer = b.div(one, inner);
    let c = b.build(outer).unwrap();
    assert_eq!(c.eval_finite(&[4, 4], &[1, 1], &params()).unwrap(), None);
    let (p, q) = c.to_fraction(DEFAULT_TERM_CAP).unwrap();
    assert_eq!(p.eval_finite(&[4, 4], &[1, 1], &params()).unwrap(), Some(0));
    assert_eq!(q.eval_finite(&[4, 4], &[1, 1], &params()).unwrap(), Some(1));
}

#[test]
fn random_circuits_are_valid_and_sized() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let n = rng.random_range(1..=3);
        let g = rng.random_range(n + 1..=10);
        let c = random_circuit(&mut rng, n, g);
        assert_eq!(c.len(), g);
        assert_eq!(c.num_inputs(), n);
        assert_eq!(Circuit::from_json(&c.to_json()).unwrap(), c);
    }
}

#[test]
fn rewrites_preserve_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let c = random_circuit(&mut rng, 2, 10);
        let r = equivalent_rewrite(&mut rng, &c);
        let (pc, pr) = (c.prepare(23, 11), r.prepare(23, 11));
        for _ in 0..50 {
            let u = [rng.random_range(0..23), rng.random_range(0..23)];
            let v = [rng.random_range(0..11), rng.random_range(0..11)];
            let a = params().subgroup_element(rng.random_range(0..11));
            if let (Some(x), Some(y)) = (pc.eval(&u, &v, a), pr.eval(&u, &v, a)) {
                assert_eq!(x, y);
            }
        }
    }
}
