//! `expid`: identity testing for circuits with exponentiation gates.
//!
//! Exit codes: 0 accept (or success), 1 reject, 2 parse error,
//! 3 invalid circuit or configuration, 4 inconclusive.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use expid::circuit::{self, DEFAULT_TERM_CAP};
use expid::descartes;
use expid::field::find_subgroup_element;
use expid::pit::{self, Bounds, TestReport};
use expid::{Circuit, CircuitError, ExpPoly, FieldParams, OracleOutcome, Verdict};
use num_bigint::BigUint;
use serde_json::json;

#[derive(Parser)]
#[command(name = "expid", version, about = "Randomized identity testing for circuits with exp gates")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SeedArg {
    /// RNG seed; falls back to EXPID_SEED, then 0.
    #[arg(long, env = "EXPID_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct TestOpts {
    /// Target overall error probability.
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[command(flatten)]
    seed: SeedArg,
    /// Use this prime for q instead of choosing one.
    #[arg(long)]
    q: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_TERM_CAP)]
    term_cap: usize,
    /// Override the number of trials.
    #[arg(long)]
    trials: Option<u64>,
    /// Width, degree and weight bounds as `k,d,w`; skips fraction conversion.
    #[arg(long, value_parser = parse_bounds)]
    bounds: Option<Bounds>,
    /// Write the verdict JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall time in the verdict (makes output nondeterministic).
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a circuit file and print its fraction metrics.
    Validate {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TERM_CAP)]
        term_cap: usize,
    },
    /// Test whether a circuit is zero wherever it is defined.
    TestZero {
        file: PathBuf,
        #[command(flatten)]
        opts: TestOpts,
    },
    /// Test whether two circuits agree wherever both are defined.
    TestEquiv {
        first: PathBuf,
        second: PathBuf,
        #[command(flatten)]
        opts: TestOpts,
    },
    /// Decide zeroness exactly through the fraction normal form.
    Oracle {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TERM_CAP)]
        term_cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test at random integer points with exact arithmetic.
    RealTest {
        file: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value_t = DEFAULT_TERM_CAP)]
        term_cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timing: bool,
    },
    /// Root-counting experiments on the order-q subgroup.
    Descartes {
        #[command(subcommand)]
        command: DescartesCommand,
    },
    /// Print the smallest (p, q) with q > 2(kw)^2 and an element of order q.
    GenParams {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        w: u64,
        /// Also print a full test plan for this degree.
        #[arg(long)]
        d: Option<u32>,
        #[arg(long, default_value_t = 1e-6)]
        delta: f64,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Write builder circuits, one file per output coordinate.
    Example {
        name: ExampleName,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        dk: Option<usize>,
        #[arg(long)]
        dv: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum DescartesCommand {
    /// Enumerate all normalized k-term instances and report the max root count.
    Scan {
        #[arg(long)]
        k: usize,
        /// Smallest acceptable q; p is the smallest prime 1 mod q.
        #[arg(long)]
        q: u64,
        #[command(flatten)]
        seed: SeedArg,
        /// CSV output path (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Max root fraction over random k-term instances.
    Conjecture {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        q: u64,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search c in [1, n) minimizing residues alpha_i c mod N.
    Kelley {
        /// Comma-separated exponents.
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<u64>,
        #[arg(long)]
        modulus: u64,
        #[arg(long)]
        n: u64,
    },
    /// Check F_p[x]/(x^q - 1) -> F_p^q is a ring isomorphism.
    Crt {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
        #[command(flatten)]
        seed: SeedArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleName {
    Softmax,
    SoftmaxSum,
    SoftmaxSumMinusOne,
    Attention,
    Glu,
    One,
}

struct Fail {
    code: u8,
    msg: String,
}

fn fail(code: u8, msg: impl ToString) -> Fail {
    Fail {
        code,
        msg: msg.to_string(),
    }
}

const ACCEPT: u8 = 0;
const REJECT: u8 = 1;
const PARSE: u8 = 2;
const INVALID: u8 = 3;
const INCONCLUSIVE: u8 = 4;

fn parse_bounds(s: &str) -> Result<Bounds, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [k, d, w] = parts[..] else {
        return Err("expected k,d,w".into());
    };
    Ok(Bounds::new(
        k.parse().map_err(|e| format!("k: {e}"))?,
        d.parse().map_err(|e| format!("d: {e}"))?,
        w.parse::<BigUint>().map_err(|e| format!("w: {e}"))?,
    ))
}

fn load(path: &Path) -> Result<Circuit, Fail> {
    let text = fs::read_to_string(path).map_err(|e| fail(PARSE, format!("{}: {e}", path.display())))?;
    Circuit::from_json(&text).map_err(|e| match e {
        CircuitError::Validation(v) => fail(INVALID, format!("{}: {v}", path.display())),
        other => fail(PARSE, format!("{}: {other}", path.display())),
    })
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Fail> {
    match out {
        Some(path) => fs::write(path, format!("{text}\n"))
            .map_err(|e| fail(INVALID, format!("{}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn verdict_code(v: &Verdict) -> u8 {
    match v {
        Verdict::AcceptZero | Verdict::EmptyDomain => ACCEPT,
        Verdict::RejectNonZero(_) => REJECT,
        Verdict::Inconclusive(_) => INCONCLUSIVE,
    }
}

fn metrics_json(e: &ExpPoly) -> serde_json::Value {
    let (k, d, w) = e.metrics();
    json!({ "k": k, "d": d, "w": w.to_string() })
}

fn run_test(c: &Circuit, opts: &TestOpts) -> Result<u8, Fail> {
    let seed = opts.seed.seed;
    let bounds = match &opts.bounds {
        Some(b) => b.clone(),
        None => match c.to_fraction(opts.term_cap) {
            Ok((p, q)) => Bounds::of_fraction(&p, &q),
            Err(e) => {
                let report = TestReport {
                    verdict: Verdict::Inconclusive(format!("{e}; pass --bounds to test anyway")),
                    trials: 0,
                    params: None,
                    seed,
                    wall_time: None,
                };
                emit(&report.to_json(), opts.out.as_deref())?;
                return Ok(INCONCLUSIVE);
            }
        },
    };
    let mut plan =
        pit::select_params(bounds, opts.delta, seed, opts.q).map_err(|e| fail(INVALID, e))?;
    if let Some(t) = opts.trials {
        plan.repetitions = t;
    }
    let mut report = pit::test_zero_report(c, &plan);
    if !opts.timing {
        report.wall_time = None;
    }
    emit(&report.to_json(), opts.out.as_deref())?;
    Ok(verdict_code(&report.verdict))
}

fn fields_for(q_min: u64, seed: u64) -> Result<FieldParams, Fail> {
    FieldParams::generate(q_min, seed).map_err(|e| fail(INVALID, e))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

fn descartes(cmd: DescartesCommand) -> Result<u8, Fail> {
    match cmd {
        DescartesCommand::Scan { k, q, seed, out } => {
            let params = fields_for(q, seed.seed)?;
            let report = descartes::exhaustive_bound_scan(k, &params).map_err(|e| fail(INVALID, e))?;
            let mut buf = Vec::new();
            descartes::write_scan_csv(&[report], &mut buf).map_err(|e| fail(INVALID, e))?;
            let text = String::from_utf8(buf).expect("csv output is utf-8");
            emit(text.trim_end(), out.as_deref())?;
        }
        DescartesCommand::Conjecture {
            k,
            q,
            samples,
            seed,
            out,
        } => {
            let params = fields_for(q, seed.seed)?;
            let report = descartes::conjecture_scan(&params, k, samples, seed.seed)
                .map_err(|e| fail(INVALID, e))?;
            emit(&to_json(&report), out.as_deref())?;
        }
        DescartesCommand::Kelley { alphas, modulus, n } => {
            let report = descartes::kelley_search(&alphas, modulus, n).map_err(|e| fail(INVALID, e))?;
            emit(&to_json(&report), None)?;
        }
        DescartesCommand::Crt { p, q, seed } => {
            let report =
                descartes::verify_crt_isomorphism(p, q, seed.seed).map_err(|e| fail(INVALID, e))?;
            emit(&to_json(&report), None)?;
            if !report.holds() {
                return Ok(REJECT);
            }
        }
    }
    Ok(ACCEPT)
}

fn need(v: Option<usize>, flag: &str) -> Result<usize, Fail> {
    v.ok_or_else(|| fail(INVALID, format!("--{flag} is required for this example")))
}

fn example(
    name: ExampleName,
    (n, m, dk, dv): (Option<usize>, Option<usize>, Option<usize>, Option<usize>),
    out: &Path,
) -> Result<u8, Fail> {
    let invalid = |e: CircuitError| fail(INVALID, e);
    let (stem, circuits) = match name {
        ExampleName::Softmax => ("softmax", circuit::softmax(need(n, "n")?).map_err(invalid)?),
        ExampleName::SoftmaxSum => (
            "softmax_sum",
            vec![circuit::softmax_sum(need(n, "n")?).map_err(invalid)?],
        ),
        ExampleName::SoftmaxSumMinusOne => (
            "softmax_sum_minus_one",
            vec![circuit::softmax_sum_minus_one(need(n, "n")?).map_err(invalid)?],
        ),
        ExampleName::Attention => (
            "attention",
            circuit::attention(need(m, "m")?, need(n, "n")?, need(dk, "dk")?, need(dv, "dv")?)
                .map_err(invalid)?,
        ),
        ExampleName::Glu => ("glu", circuit::glu(need(n, "n")?, need(m, "m")?).map_err(invalid)?),
        ExampleName::One => ("one", vec![circuit::constant(n.unwrap_or(1), 1)]),
    };
    fs::create_dir_all(out).map_err(|e| fail(INVALID, format!("{}: {e}", out.display())))?;
    for (i, c) in circuits.iter().enumerate() {
        let path = if circuits.len() == 1 {
            out.join(format!("{stem}.json"))
        } else {
            out.join(format!("{stem}_{}.json", i + 1))
        };
        emit(&c.to_json(), Some(&path))?;
        println!("{}", path.display());
    }
    Ok(ACCEPT)
}

fn run(cli: Cli) -> Result<u8, Fail> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| fail(INVALID, e))?;
    }
    match cli.command {
        Command::Validate { file, term_cap } => {
            let c = load(&file)?;
            let fraction = match c.to_fraction(term_cap) {
                Ok((p, q)) => json!({ "numerator": metrics_json(&p), "denominator": metrics_json(&q) }),
                Err(e) => json!(e.to_string()),
            };
            let summary = json!({
                "valid": true,
                "gates": c.len(),
                "num_inputs": c.num_inputs(),
                "fraction": fraction,
            });
            emit(&to_json(&summary), None)?;
            Ok(ACCEPT)
        }
        Command::TestZero { file, opts } => run_test(&load(&file)?, &opts),
        Command::TestEquiv {
            first,
            second,
            opts,
        } => {
            let (c1, c2) = (load(&first)?, load(&second)?);
            let diff = Circuit::difference(&c1, &c2).map_err(|e| fail(INVALID, e))?;
            run_test(&diff, &opts)
        }
        Command::Oracle {
            file,
            term_cap,
            out,
        } => {
            let outcome = pit::exact_zero_oracle(&load(&file)?, term_cap);
            emit(&to_json(&outcome), out.as_deref())?;
            Ok(match outcome {
                OracleOutcome::Zero | OracleOutcome::EmptyDomain => ACCEPT,
                OracleOutcome::NonZero => REJECT,
                OracleOutcome::Inconclusive(_) => INCONCLUSIVE,
            })
        }
        Command::RealTest {
            file,
            trials,
            seed,
            term_cap,
            out,
            timing,
        } => {
            let mut report = pit::real_model_test(&load(&file)?, trials, seed.seed, term_cap);
            if !timing {
                report.wall_time = None;
            }
            emit(&report.to_json(), out.as_deref())?;
            Ok(verdict_code(&report.verdict))
        }
        Command::Descartes { command } => descartes(command),
        Command::GenParams {
            k,
            w,
            d,
            delta,
            seed,
        } => {
            let pair = pit::regime_pair(k, w).map_err(|e| fail(INVALID, e))?;
            let a = find_subgroup_element(pair.p, pair.q, seed.seed).map_err(|e| fail(INVALID, e))?;
            let mut out = json!({ "p": pair.p, "q": pair.q, "a": a });
            if let Some(d) = d {
                let plan = pit::select_params(Bounds::new(k, d, w), delta, seed.seed, None)
                    .map_err(|e| fail(INVALID, e))?;
                out["plan"] = json!({
                    "p": plan.params.p(),
                    "q": plan.params.q(),
                    "a": plan.params.a(),
                    "epsilon": plan.epsilon,
                    "repetitions": plan.repetitions,
                });
            }
            emit(&to_json(&out), None)?;
            Ok(ACCEPT)
        }
        Command::Example {
            name,
            n,
            m,
            dk,
            dv,
            out,
        } => example(name, (n, m, dk, dv), &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { PARSE } else { ACCEPT });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
