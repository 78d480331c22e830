//! Root counting for sparse polynomials `sum_i beta_i z^alpha_i` over `F_p`
//! on the order-`q` subgroup `G = <a>`, and the experiments around it.

use std::collections::HashSet;
use std::io::Write;

use num_integer::{binomial, Integer};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::LabError;
use crate::field::{find_subgroup_element, mod_add, mod_mul, mod_pow, FieldParams};
use crate::pit::trial_rng;

/// Largest instance space [`exhaustive_bound_scan`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 10_000_000;

/// `sum_i beta_i z^alpha_i` with distinct exponents in `[0, q)` kept sorted
/// and nonzero coefficients in `[1, p)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SparseUnivariate {
    alphas: Vec<u64>,
    betas: Vec<u64>,
}

impl SparseUnivariate {
    /// Terms may be given in any order; they are sorted by exponent.
    pub fn new(alphas: Vec<u64>, betas: Vec<u64>, p: u64, q: u64) -> Result<Self, LabError> {
        if alphas.len() != betas.len() {
            return Err(LabError::InvalidPolynomial(format!(
                "{} exponents but {} coefficients",
                alphas.len(),
                betas.len()
            )));
        }
        if let Some(a) = alphas.iter().find(|&&a| a >= q) {
            return Err(LabError::InvalidPolynomial(format!("exponent {a} is not below q = {q}")));
        }
        if let Some(b) = betas.iter().find(|&&b| b == 0 || b >= p) {
            return Err(LabError::InvalidPolynomial(format!("coefficient {b} is not in [1, {p})")));
        }
        let mut terms: Vec<(u64, u64)> = alphas.into_iter().zip(betas).collect();
        terms.sort_unstable();
        if terms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(LabError::InvalidPolynomial("repeated exponent".into()));
        }
        let (alphas, betas) = terms.into_iter().unzip();
        Ok(SparseUnivariate { alphas, betas })
    }

    pub fn alphas(&self) -> &[u64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[u64] {
        &self.betas
    }

    /// Number of terms.
    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

/// Number of `z` in `{a^0, ..., a^(q-1)}` with `f(z) = 0`, using `O(k q)`
/// multiplications.
pub fn count_roots_in_subgroup(f: &SparseUnivariate, params: &FieldParams) -> u64 {
    let (p, q, a) = (params.p(), params.q(), params.a());
    let steps: Vec<u64> = f.alphas.iter().map(|&e| mod_pow(a, e, p)).collect();
    let mut terms = f.betas.clone();
    let mut roots = 0;
    for _ in 0..q {
        let mut sum = 0;
        for (t, &s) in terms.iter_mut().zip(&steps) {
            sum = mod_add(sum, *t, p);
            *t = mod_mul(*t, s, p);
        }
        roots += u64::from(sum == 0);
    }
    roots
}

/// Replaces every exponent `alpha` by `c * alpha mod q`.
pub fn rotate_exponents(f: &SparseUnivariate, c: u64, q: u64) -> Result<SparseUnivariate, LabError> {
    if c % q == 0 {
        return Err(LabError::PreconditionViolation(format!("c = {c} is 0 mod q = {q}")));
    }
    let alphas = f
        .alphas
        .iter()
        .map(|&e| ((u128::from(e) * u128::from(c)) % u128::from(q)) as u64)
        .collect();
    // Coefficient range is already validated; only the order changes.
    SparseUnivariate::new(alphas, f.betas.clone(), u64::MAX, q)
}

/// Outcome of searching `c` in `[1, n)` for small residues `alpha_i c mod N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KelleyReport {
    /// Smallest `c` minimizing `max_i min(r_i, N - r_i)`.
    pub c_symmetric: u64,
    pub symmetric_residue: u64,
    /// Smallest `c` minimizing `max_i r_i`.
    pub c_one_sided: u64,
    pub one_sided_residue: u64,
    /// `N / n^(1/t)`.
    pub bound: f64,
    pub symmetric_met: bool,
    pub one_sided_met: bool,
}

/// Exhaustive search over `c` in `[1, n)` for both the symmetric residue
/// `max_i min(alpha_i c mod N, N - alpha_i c mod N)` and the one-sided
/// residue `max_i (alpha_i c mod N)`, ties going to the smallest `c`.
///
/// Requires `n <= N / gcd(alphas, N)`. When every exponent is `0 mod N` the
/// answer is `c = 1` with residue 0 for any `n`.
pub fn kelley_search(alphas: &[u64], modulus: u64, n: u64) -> Result<KelleyReport, LabError> {
    if alphas.is_empty() || modulus == 0 {
        return Err(LabError::PreconditionViolation(
            "need at least one exponent and a positive modulus".into(),
        ));
    }
    let t = alphas.len() as f64;
    let bound = modulus as f64 / (n.max(1) as f64).powf(1.0 / t);
    if alphas.iter().all(|&a| a % modulus == 0) {
        return Ok(KelleyReport {
            c_symmetric: 1,
            symmetric_residue: 0,
            c_one_sided: 1,
            one_sided_residue: 0,
            bound,
            symmetric_met: true,
            one_sided_met: true,
        });
    }
    let g = alphas.iter().fold(modulus, |g, &a| g.gcd(&a));
    if n < 2 || n > modulus / g {
        return Err(LabError::PreconditionViolation(format!(
            "n = {n} must lie in [2, N / gcd = {}]",
            modulus / g
        )));
    }
    let residues = |c: u64| {
        alphas.iter().fold((0, 0), |(sym, one), &a| {
            let r = ((u128::from(a) * u128::from(c)) % u128::from(modulus)) as u64;
            (sym.max(r.min(modulus - r)), one.max(r))
        })
    };
    let (mut best_sym, mut best_one) = ((u64::MAX, 0), (u64::MAX, 0));
    for c in 1..n {
        let (sym, one) = residues(c);
        if sym < best_sym.0 {
            best_sym = (sym, c);
        }
        if one < best_one.0 {
            best_one = (one, c);
        }
    }
    Ok(KelleyReport {
        c_symmetric: best_sym.1,
        symmetric_residue: best_sym.0,
        c_one_sided: best_one.1,
        one_sided_residue: best_one.0,
        bound,
        symmetric_met: best_sym.0 as f64 <= bound,
        one_sided_met: best_one.0 as f64 <= bound,
    })
}

/// `q^(1 - 1/(k-1))` for `k >= 2`; a single term never vanishes on `G`,
/// so the bound is 0 for `k <= 1`.
pub fn descartes_bound(k: usize, q: u64) -> f64 {
    if k <= 1 {
        0.0
    } else {
        (q as f64).powf(1.0 - 1.0 / (k as f64 - 1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub k: usize,
    pub p: u64,
    pub q: u64,
    pub instances: u64,
    pub max_count: u64,
    /// Lexicographically smallest instance attaining `max_count`.
    pub argmax: SparseUnivariate,
    pub tight_bound: f64,
    pub safe_bound: f64,
    pub tight_violations: u64,
    pub safe_violations: u64,
}

fn join(xs: &[u64]) -> String {
    xs.iter().map(u64::to_string).collect::<Vec<_>>().join(";")
}

/// Writes a header and one row per report.
pub fn write_scan_csv<W: Write>(reports: &[ScanReport], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "k",
        "p",
        "q",
        "instances",
        "max_count",
        "paper_bound",
        "safe_bound",
        "argmax_alphas",
        "argmax_betas",
    ])?;
    for r in reports {
        w.write_record([
            r.k.to_string(),
            r.p.to_string(),
            r.q.to_string(),
            r.instances.to_string(),
            r.max_count.to_string(),
            format!("{:.6}", r.tight_bound),
            format!("{:.6}", r.safe_bound),
            join(&r.argmax.alphas),
            join(&r.argmax.betas),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// All increasing `(k-1)`-subsets of `[1, q)`, lexicographically.
fn exponent_subsets(size: usize, q: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut cur: Vec<u64> = (1..=size as u64).collect();
    if size as u64 >= q {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..size).rev().find(|&i| cur[i] < q - (size - i) as u64) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..size {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Enumerates every instance with `alpha_1 = 0` and `beta_1 = 1` (dividing
/// by `beta_1 z^alpha_1` does not change the roots in `G`).
pub fn exhaustive_bound_scan(k: usize, params: &FieldParams) -> Result<ScanReport, LabError> {
    let (p, q, a) = (params.p(), params.q(), params.a());
    if k == 0 || k as u64 > q {
        return Err(LabError::PreconditionViolation(format!("k = {k} must lie in [1, q]")));
    }
    let rest = k - 1;
    let space = binomial(u128::from(q - 1), rest as u128)
        .checked_mul(u128::from(p - 1).checked_pow(rest as u32).unwrap_or(u128::MAX))
        .unwrap_or(u128::MAX);
    if space > EXHAUSTIVE_LIMIT {
        return Err(LabError::SpaceTooLarge(space));
    }
    let tight_bound = descartes_bound(k, q);
    let safe_bound = 2.0 * tight_bound;
    // Tolerance for comparing integer counts against irrational bounds.
    let over = |count: u64, bound: f64| count as f64 > bound + 1e-9;
    let powers: Vec<u64> = (0..q).map(|j| mod_pow(a, j, p)).collect();

    let subsets = exponent_subsets(rest, q);
    let per_subset: Vec<(u64, u64, u64, Vec<u64>, Vec<u64>)> = subsets
        .par_iter()
        .map(|exps| {
            // cols[i][j] = (a^j)^exps[i]
            let cols: Vec<Vec<u64>> = exps
                .iter()
                .map(|&e| (0..q).map(|j| powers[((j * e) % q) as usize]).collect())
                .collect();
            let mut betas = vec![1u64; rest];
            let (mut best, mut best_betas) = (0u64, betas.clone());
            let (mut tight_v, mut safe_v) = (0, 0);
            let mut first = true;
            loop {
                let count = (0..q as usize)
                    .filter(|&j| {
                        cols.iter()
                            .zip(&betas)
                            .fold(1u64, |s, (col, &b)| mod_add(s, mod_mul(b, col[j], p), p))
                            == 0
                    })
                    .count() as u64;
                tight_v += u64::from(over(count, tight_bound));
                safe_v += u64::from(over(count, safe_bound));
                if first || count > best {
                    best = count;
                    best_betas.clone_from(&betas);
                    first = false;
                }
                // Odometer over betas in lexicographic order.
                let Some(i) = (0..rest).rev().find(|&i| betas[i] < p - 1) else {
                    break;
                };
                betas[i] += 1;
                betas[i + 1..].iter_mut().for_each(|b| *b = 1);
            }
            (best, tight_v, safe_v, exps.clone(), best_betas)
        })
        .collect();

    let (mut max_count, mut argmax) = (0, (Vec::new(), Vec::new()));
    let (mut tight_violations, mut safe_violations) = (0, 0);
    for (i, (best, pv, sv, exps, betas)) in per_subset.into_iter().enumerate() {
        tight_violations += pv;
        safe_violations += sv;
        // Subsets arrive in lexicographic order, so strict improvement keeps
        // the smallest argmax.
        if i == 0 || best > max_count {
            max_count = best;
            argmax = (exps, betas);
        }
    }
    let mut alphas = vec![0];
    alphas.extend(argmax.0);
    let mut betas = vec![1];
    betas.extend(argmax.1);
    Ok(ScanReport {
        k,
        p,
        q,
        instances: space as u64,
        max_count,
        argmax: SparseUnivariate { alphas, betas },
        tight_bound,
        safe_bound,
        tight_violations,
        safe_violations,
    })
}

/// Uniformly random instance with `k` distinct exponents.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, k: usize, params: &FieldParams) -> SparseUnivariate {
    let (p, q) = (params.p(), params.q());
    let mut alphas: Vec<u64> = sample(rng, q as usize, k).into_iter().map(|e| e as u64).collect();
    alphas.sort_unstable();
    let betas = (0..k).map(|_| rng.random_range(1..p)).collect();
    SparseUnivariate { alphas, betas }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureReport {
    pub k: usize,
    pub p: u64,
    pub q: u64,
    pub samples: u64,
    pub max_count: u64,
    /// `max_count / q`.
    pub max_fraction: f64,
    /// The lowest-index sample attaining `max_count`.
    pub worst: Option<SparseUnivariate>,
}

/// Root counts of `samples` random `k`-term instances; sample `i` uses its
/// own stream keyed by `(seed, i)`.
pub fn conjecture_scan(
    params: &FieldParams,
    k: usize,
    samples: u64,
    seed: u64,
) -> Result<ConjectureReport, LabError> {
    if k == 0 || k as u64 > params.q() {
        return Err(LabError::PreconditionViolation(format!("k = {k} must lie in [1, q]")));
    }
    let best = (0..samples)
        .into_par_iter()
        .map(|i| {
            let f = random_instance(&mut trial_rng(seed, i), k, params);
            (count_roots_in_subgroup(&f, params), std::cmp::Reverse(i), f)
        })
        .max_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    let (max_count, worst) = match best {
        Some((c, _, f)) => (c, Some(f)),
        None => (0, None),
    };
    Ok(ConjectureReport {
        k,
        p: params.p(),
        q: params.q(),
        samples,
        max_count,
        max_fraction: max_count as f64 / params.q() as f64,
        worst,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrtReport {
    pub p: u64,
    pub q: u64,
    /// The order-`q` element whose powers are the evaluation points.
    pub g: u64,
    /// Whether every residue class was enumerated.
    pub exhaustive: bool,
    pub elements_checked: u64,
    pub pairs_checked: u64,
    /// Bijective when exhaustive; injective on the sample otherwise.
    pub injective: bool,
    pub homomorphism: bool,
    pub unit_to_ones: bool,
    pub zero_to_zero: bool,
}

impl CrtReport {
    pub fn holds(&self) -> bool {
        self.injective && self.homomorphism && self.unit_to_ones && self.zero_to_zero
    }
}

fn evaluate_all(f: &[u64], points: &[u64], p: u64) -> Vec<u64> {
    points
        .iter()
        .map(|&z| f.iter().rev().fold(0, |acc, &c| mod_add(mod_mul(acc, z, p), c, p)))
        .collect()
}

fn cyclic_mul(f: &[u64], g: &[u64], p: u64) -> Vec<u64> {
    let q = f.len();
    let mut out = vec![0; q];
    for (i, &x) in f.iter().enumerate() {
        for (j, &y) in g.iter().enumerate() {
            let k = (i + j) % q;
            out[k] = mod_add(out[k], mod_mul(x, y, p), p);
        }
    }
    out
}

fn decode(mut index: u64, p: u64, q: usize) -> Vec<u64> {
    (0..q)
        .map(|_| {
            let c = index % p;
            index /= p;
            c
        })
        .collect()
}

/// Checks that `f -> (f(1), f(g), ..., f(g^(q-1)))` is a ring isomorphism
/// `F_p[x]/(x^q - 1) -> F_p^q`. Small rings (`p^q <= 10^6`) are enumerated in
/// full; otherwise 1000 random pairs are checked.
pub fn verify_crt_isomorphism(p: u64, q: u64, seed: u64) -> Result<CrtReport, LabError> {
    let g = find_subgroup_element(p, q, seed)?;
    let points: Vec<u64> = (0..q).map(|j| mod_pow(g, j, p)).collect();
    let qs = q as usize;
    let size = (q < 64).then(|| p.checked_pow(q as u32)).flatten();
    let exhaustive = size.is_some_and(|s| s <= 1_000_000);
    let mut rng = trial_rng(seed, 0);
    let (elements, pairs): (Vec<Vec<u64>>, Vec<(usize, usize)>) = if exhaustive {
        let n = size.expect("checked above");
        let elements: Vec<Vec<u64>> = (0..n).map(|i| decode(i, p, qs)).collect();
        let pairs = if n * n <= 10_000_000 {
            (0..n as usize).flat_map(|i| (0..n as usize).map(move |j| (i, j))).collect()
        } else {
            (0..1000)
                .map(|_| (rng.random_range(0..n as usize), rng.random_range(0..n as usize)))
                .collect()
        };
        (elements, pairs)
    } else {
        let elements: Vec<Vec<u64>> = (0..2000)
            .map(|_| (0..qs).map(|_| rng.random_range(0..p)).collect())
            .collect();
        let pairs = (0..1000).map(|i| (2 * i, 2 * i + 1)).collect();
        (elements, pairs)
    };

    let images: Vec<Vec<u64>> = elements.par_iter().map(|f| evaluate_all(f, &points, p)).collect();
    let injective = {
        let distinct_inputs: HashSet<&Vec<u64>> = elements.iter().collect();
        let distinct_images: HashSet<&Vec<u64>> = images.iter().collect();
        distinct_inputs.len() == distinct_images.len()
    };
    let homomorphism = pairs.par_iter().all(|&(i, j)| {
        let (f, h) = (&elements[i], &elements[j]);
        let sum: Vec<u64> = f.iter().zip(h).map(|(&x, &y)| mod_add(x, y, p)).collect();
        let prod = cyclic_mul(f, h, p);
        let (ef, eh) = (&images[i], &images[j]);
        evaluate_all(&sum, &points, p)
            .iter()
            .zip(ef.iter().zip(eh))
            .all(|(&s, (&x, &y))| s == mod_add(x, y, p))
            && evaluate_all(&prod, &points, p)
                .iter()
                .zip(ef.iter().zip(eh))
                .all(|(&m, (&x, &y))| m == mod_mul(x, y, p))
    });
    let mut one = vec![0; qs];
    one[0] = 1;
    Ok(CrtReport {
        p,
        q,
        g,
        exhaustive,
        elements_checked: elements.len() as u64,
        pairs_checked: pairs.len() as u64,
        injective,
        homomorphism,
        unit_to_ones: evaluate_all(&one, &points, p).iter().all(|&x| x == 1),
        zero_to_zero: evaluate_all(&vec![0; qs], &points, p).iter().all(|&x| x == 0),
    })
}
