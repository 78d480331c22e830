use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use expid::circuit::{self, gen, DEFAULT_TERM_CAP};
use expid::descartes::{self, SparseUnivariate};
use expid::FieldParams;
use expid_bench::{points, squared_exp_sum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn eval(c: &mut Criterion) {
    let params = FieldParams::generate(10_007, 0).unwrap();
    let (p, q, a) = (params.p(), params.q(), params.a());
    let mut group = c.benchmark_group("eval_dual");
    for n in [4usize, 16, 64] {
        let circ = circuit::softmax_sum(n).unwrap();
        let prepared = circ.prepare(p, q);
        let (u, v) = points(&circ, p, q);
        group.bench_with_input(BenchmarkId::new("softmax_sum", n), &n, |b, _| {
            b.iter(|| prepared.eval_dual(black_box(&u), black_box(&v), a))
        });
    }
    let attn = circuit::attention(2, 4, 4, 2).unwrap().remove(0);
    let prepared = attn.prepare(p, q);
    let (u, v) = points(&attn, p, q);
    group.bench_function("attention_2x4x4x2", |b| {
        b.iter(|| prepared.eval_dual(black_box(&u), black_box(&v), a))
    });
    group.finish();
}

fn to_fraction(c: &mut Criterion) {
    let mut group = c.benchmark_group("to_fraction");
    for n in [2usize, 3, 4, 5] {
        let circ = circuit::softmax_sum(n).unwrap();
        group.bench_with_input(BenchmarkId::new("softmax_sum", n), &n, |b, _| {
            b.iter(|| circ.to_fraction(DEFAULT_TERM_CAP).unwrap())
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let randoms: Vec<_> = (0..32).map(|_| gen::random_circuit(&mut rng, 3, 10)).collect();
    group.bench_function("random_10_gates_x32", |b| {
        b.iter(|| {
            for r in &randoms {
                let _ = black_box(r.to_fraction(DEFAULT_TERM_CAP));
            }
        })
    });
    group.finish();
}

fn condense(c: &mut Criterion) {
    let mut group = c.benchmark_group("condense");
    for n in [4usize, 8, 16] {
        let e = squared_exp_sum(n);
        group.bench_with_input(BenchmarkId::new("squared_exp_sum", n), &n, |b, _| {
            b.iter(|| e.condense().unwrap())
        });
    }
    group.finish();
}

fn root_count(c: &mut Criterion) {
    let mut group = c.benchmark_group("count_roots");
    for q_min in [101u64, 1_009, 10_007] {
        let params = FieldParams::generate(q_min, 0).unwrap();
        let f = SparseUnivariate::new(vec![0, 1, 3], vec![1, 2, params.p() - 3], params.p(), params.q()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(params.q()), &params, |b, params| {
            b.iter(|| descartes::count_roots_in_subgroup(black_box(&f), params))
        });
    }
    group.finish();
}

criterion_group!(benches, eval, to_fraction, condense, root_count);
criterion_main!(benches);
