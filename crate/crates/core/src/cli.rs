//! Command-line front end. Every JSON document carries `"v": 1`.
//!
//! Exit codes: 0 success, 1 usage or malformed input, 2 domain error.

use std::io::Read;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::budget::{budget_report, parse_rational, BoundScalar, DEFAULT_K0, ELEMENTARY_COUNT};
use crate::decompose::{check_certificate, decompose_full, Certificate, Mode, Strategy};
use crate::elwords::{gen_set_s_d, uniform_set};
use crate::error::Error;
use crate::random;
use crate::ring::{Mat, Ring};
use crate::spectral::{gap_table, Action, Family};
use crate::unimodular::{bezout, reduce_unimodular, UniSeq};

pub const SEED_ENV: &str = "ELGEN_SEED";

#[derive(Parser, Debug)]
#[command(name = "elgen", version, about = "Bounded elementary factorization certificates")]
pub struct Cli {
    /// Seed for every random choice; the ELGEN_SEED variable overrides it.
    #[arg(long, global = true, default_value_t = random::DEFAULT_SEED)]
    pub seed: u64,
    /// Indented JSON.
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Worker threads for batch work (default 1).
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Emit a generating set.
    Gens(GensArgs),
    /// Factor SL_m matrices into certificates.
    Decompose(DecomposeArgs),
    /// Check certificates read from a file or stdin.
    Verify(InputArgs),
    /// Evaluate the scalar budget of the property (T) argument.
    Budget(BudgetArgs),
    /// Reduce a unimodular sequence.
    Reduce(ReduceArgs),
    /// Spectral gaps of Schreier graphs.
    Spectral(SpectralArgs),
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Input file; stdin when absent.
    #[arg(long)]
    pub input: Option<String>,
}

#[derive(Args, Debug)]
pub struct GensArgs {
    /// The uniform set for SL_m(Z).
    #[arg(long, conflicts_with = "sd")]
    pub uniform: bool,
    /// S_d over Z, or over M_n(Z) with --block n.
    #[arg(long)]
    pub sd: bool,
    #[arg(long, default_value_t = 12)]
    pub m: usize,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long)]
    pub block: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Shallow,
    Deep,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StrategyArg {
    Recursive,
    Dv2,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Decompose this many random SL_m(Z) elements instead of reading input.
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    /// Word length for random inputs.
    #[arg(long, default_value_t = 30)]
    pub len: usize,
    /// Reduce random inputs modulo q.
    #[arg(long = "mod")]
    pub modulus: Option<u64>,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Shallow)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = StrategyArg::Recursive)]
    pub strategy: StrategyArg,
}

#[derive(Args, Debug)]
pub struct BudgetArgs {
    #[arg(long, default_value_t = 1)]
    pub l: u64,
    /// Rational, for example 1/10 or 0.1.
    #[arg(long, default_value = "1")]
    pub eps0: String,
    /// Defaults to 0.999999 times the threshold.
    #[arg(long)]
    pub eps1: Option<String>,
    #[arg(long, default_value_t = ELEMENTARY_COUNT)]
    pub count: u64,
    #[arg(long, default_value_t = DEFAULT_K0)]
    pub k0: u64,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated integers instead of a JSON sequence.
    #[arg(long, allow_hyphen_values = true)]
    pub seq: Option<String>,
    /// Work over Z/q with --seq.
    #[arg(long = "mod")]
    pub modulus: Option<u64>,
    /// Also emit Bezout coefficients.
    #[arg(long)]
    pub bezout: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum FamilyArg {
    Elementary,
    Uniform,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ActionArg {
    Projective,
    Vectors,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum Format {
    Json,
    Tsv,
}

#[derive(Args, Debug)]
pub struct SpectralArgs {
    /// `a..b` (inclusive), `a-b`, or a comma list.
    #[arg(long, default_value = "3..6")]
    pub n_range: String,
    #[arg(long, default_value_t = 2)]
    pub q: u64,
    #[arg(long, value_enum, default_value_t = FamilyArg::Both)]
    pub family: FamilyArg,
    #[arg(long, value_enum, default_value_t = ActionArg::Projective)]
    pub action: ActionArg,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

enum Fail {
    Usage(String),
    Domain(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        if e.is_domain() {
            Fail::Domain(e.to_string())
        } else {
            Fail::Usage(e.to_string())
        }
    }
}

/// Outcome of one invocation.
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn document<T: Serialize>(x: &T) -> Result<Value, Fail> {
    let mut v = serde_json::to_value(x).map_err(|e| Fail::Usage(e.to_string()))?;
    if let Value::Object(m) = &mut v {
        m.insert("v".into(), Value::from(1));
    }
    Ok(v)
}

fn render(v: &Value, pretty: bool) -> String {
    let s = if pretty { serde_json::to_string_pretty(v) } else { serde_json::to_string(v) };
    s.expect("json values always serialize") + "\n"
}

fn read_input(a: &InputArgs, stdin: &mut dyn Read) -> Result<String, Fail> {
    match &a.input {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Fail::Usage(format!("{p}: {e}"))),
        None => {
            let mut s = String::new();
            stdin.read_to_string(&mut s).map_err(|e| Fail::Usage(format!("stdin: {e}")))?;
            Ok(s)
        }
    }
}

fn parse_json(s: &str) -> Result<Value, Fail> {
    serde_json::from_str(s).map_err(|e| Fail::Usage(format!("invalid JSON: {e}")))
}

fn big(v: &Value) -> Result<BigInt, Fail> {
    match v {
        Value::Number(n) => n.to_string().parse().map_err(|_| Fail::Usage(format!("not an integer: {n}"))),
        Value::String(s) => s.trim().parse().map_err(|_| Fail::Usage(format!("not an integer: {s:?}"))),
        _ => Err(Fail::Usage("matrix entries must be integers".into())),
    }
}

/// A matrix document, or a bare nested array of integers over `Z`.
fn matrix(v: &Value) -> Result<Mat, Fail> {
    if let Value::Array(rows) = v {
        let rows: Vec<Vec<BigInt>> = rows
            .iter()
            .map(|r| match r {
                Value::Array(xs) => xs.iter().map(big).collect(),
                _ => Err(Fail::Usage("matrix rows must be arrays".into())),
            })
            .collect::<Result<_, _>>()?;
        let n = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != c) {
            return Err(Fail::Usage("ragged matrix".into()));
        }
        return Mat::from_flat(Ring::Integers, n, c, rows.into_iter().flatten().collect()).map_err(Fail::from);
    }
    serde_json::from_value(v.clone()).map_err(|e| Fail::Usage(format!("invalid matrix: {e}")))
}

fn matrices(v: &Value) -> Result<(Vec<Mat>, bool), Fail> {
    // An array of matrices (documents or nested arrays) is a batch.
    if let Value::Array(items) = v {
        let batch = !items.is_empty() && items.iter().all(|x| x.is_object() || x.get(0).is_some_and(Value::is_array));
        if batch {
            return Ok((items.iter().map(matrix).collect::<Result<_, _>>()?, true));
        }
    }
    Ok((vec![matrix(v)?], false))
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, Fail> {
    rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().map_err(|e| Fail::Usage(e.to_string()))
}

fn gens(a: &GensArgs) -> Result<Value, Fail> {
    let set = if a.sd {
        let ring = match a.block {
            Some(n) => Ring::matrix(Ring::Integers, n)?,
            None => Ring::Integers,
        };
        gen_set_s_d(&ring, a.d)?
    } else {
        uniform_set(a.m, a.d)?
    };
    document(&set)
}

fn decompose(a: &DecomposeArgs, seed: u64, threads: usize, stdin: &mut dyn Read) -> Result<Value, Fail> {
    let (inputs, batch) = match a.random {
        Some(count) => {
            let mut g = random::rng(seed);
            let ms: Vec<Mat> = (0..count)
                .map(|_| {
                    let t = random::sl(&mut g, a.m, a.len);
                    match a.modulus {
                        Some(q) => t.reduce_mod(q),
                        None => t,
                    }
                })
                .collect();
            (ms, count != 1)
        }
        None => matrices(&parse_json(&read_input(&a.input, stdin)?)?)?,
    };
    if a.modulus.is_some() && a.random.is_none() {
        return Err(Fail::Usage("--mod applies to --random inputs; give modular matrices as documents".into()));
    }
    let mode = match a.mode {
        ModeArg::Shallow => Mode::Shallow,
        ModeArg::Deep => Mode::Deep,
    };
    let strategy = match a.strategy {
        StrategyArg::Recursive => Strategy::Recursive,
        StrategyArg::Dv2 => Strategy::Dv2,
    };
    let run = |t: &Mat| decompose_full(t, a.d, mode, strategy);
    let certs: Vec<Result<Certificate, Error>> = pool(threads)?.install(|| inputs.par_iter().map(run).collect());
    let certs: Vec<Certificate> = certs.into_iter().collect::<Result<_, _>>()?;
    if batch {
        Ok(Value::Array(certs.iter().map(document).collect::<Result<_, _>>()?))
    } else {
        document(&certs[0])
    }
}

#[derive(Serialize)]
struct Verdict {
    valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn verify(a: &InputArgs, threads: usize, stdin: &mut dyn Read) -> Result<(Value, bool), Fail> {
    let v = parse_json(&read_input(a, stdin)?)?;
    let (items, batch) = match v {
        Value::Array(xs) => (xs, true),
        x => (vec![x], false),
    };
    let check = |x: &Value| -> Verdict {
        match serde_json::from_value::<Certificate>(x.clone()) {
            Ok(c) => match check_certificate(&c) {
                Ok(()) => Verdict { valid: true, error: None },
                Err(e) => Verdict { valid: false, error: Some(e) },
            },
            Err(e) => Verdict { valid: false, error: Some(format!("not a certificate: {e}")) },
        }
    };
    let verdicts: Vec<Verdict> = pool(threads)?.install(|| items.par_iter().map(check).collect());
    let all = verdicts.iter().all(|v| v.valid);
    let out = if batch {
        let mut m = serde_json::Map::new();
        m.insert("v".into(), Value::from(1));
        m.insert("valid".into(), Value::from(all));
        m.insert("results".into(), serde_json::to_value(&verdicts).expect("plain data"));
        Value::Object(m)
    } else {
        document(&verdicts[0])?
    };
    Ok((out, all))
}

fn budget(a: &BudgetArgs) -> Result<(Value, bool), Fail> {
    let eps0 = BoundScalar::rational(parse_rational(&a.eps0)?);
    let eps1 = a.eps1.as_deref().map(parse_rational).transpose()?.map(BoundScalar::rational);
    if a.l == 0 {
        return Err(Fail::Usage("--l must be at least 1".into()));
    }
    let r = budget_report(a.l, a.k0, a.count, &eps0, eps1)?;
    Ok((document(&r)?, r.verified))
}

#[derive(Serialize)]
struct ReduceOut {
    input: UniSeq,
    coefficients: Vec<Mat>,
    reduced: UniSeq,
    #[serde(skip_serializing_if = "Option::is_none")]
    bezout: Option<Vec<Mat>>,
}

fn reduce(a: &ReduceArgs, stdin: &mut dyn Read) -> Result<Value, Fail> {
    let seq = match &a.seq {
        Some(s) => {
            let xs: Vec<i64> = s
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| Fail::Usage(format!("not an integer: {x:?}"))))
                .collect::<Result<_, _>>()?;
            match a.modulus {
                Some(q) => UniSeq::modular(q, &xs)?,
                None => UniSeq::integers(&xs),
            }
        }
        None => {
            let v = parse_json(&read_input(&a.input, stdin)?)?;
            let s: UniSeq = serde_json::from_value(v).map_err(|e| Fail::Usage(format!("invalid sequence: {e}")))?;
            UniSeq::new(s.ring, s.elements)?
        }
    };
    let r = reduce_unimodular(&seq)?;
    let bez = if a.bezout { Some(bezout(&seq)?.coefficients) } else { None };
    document(&ReduceOut { input: seq, coefficients: r.coefficients, reduced: r.reduced, bezout: bez })
}

fn parse_range(s: &str) -> Result<Vec<usize>, Fail> {
    let bad = || Fail::Usage(format!("bad range {s:?}"));
    let num = |x: &str| x.trim().parse::<usize>().map_err(|_| bad());
    let out: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let b = b.trim_start_matches('=');
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = s.split_once('-') {
        (num(a)?..=num(b)?).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

fn spectral(a: &SpectralArgs, threads: usize) -> Result<String, Fail> {
    let ns = parse_range(&a.n_range)?;
    let families = match a.family {
        FamilyArg::Elementary => vec![Family::Elementary],
        FamilyArg::Uniform => vec![Family::Uniform],
        FamilyArg::Both => vec![Family::Elementary, Family::Uniform],
    };
    let action = match a.action {
        ActionArg::Projective => Action::Projective,
        ActionArg::Vectors => Action::Vectors,
    };
    let t = pool(threads)?.install(|| gap_table(&ns, a.q, &families, action, a.tol, threads > 1))?;
    Ok(match a.format {
        Format::Tsv => t.to_tsv(),
        Format::Json => render(&document(&t)?, false),
    })
}

fn effective_seed(flag: u64, env: Option<String>) -> Result<u64, Fail> {
    match env {
        Some(s) if !s.trim().is_empty() => s.trim().parse().map_err(|_| Fail::Usage(format!("{SEED_ENV}={s:?} is not an integer"))),
        _ => Ok(flag),
    }
}

fn dispatch(cli: &Cli, env_seed: Option<String>, stdin: &mut dyn Read) -> Result<(String, i32), Fail> {
    let seed = effective_seed(cli.seed, env_seed)?;
    let out = |v: Value| render(&v, cli.pretty);
    Ok(match &cli.command {
        Command::Gens(a) => (out(gens(a)?), 0),
        Command::Decompose(a) => (out(decompose(a, seed, cli.threads, stdin)?), 0),
        Command::Verify(a) => {
            let (v, ok) = verify(a, cli.threads, stdin)?;
            (out(v), if ok { 0 } else { 2 })
        }
        Command::Budget(a) => {
            let (v, ok) = budget(a)?;
            (out(v), if ok { 0 } else { 2 })
        }
        Command::Reduce(a) => (out(reduce(a, stdin)?), 0),
        Command::Spectral(a) => {
            let s = spectral(a, cli.threads)?;
            let s = if cli.pretty && a.format == Format::Json { out(parse_json(&s)?) } else { s };
            (s, 0)
        }
    })
}

/// Run with explicit arguments (including the program name), seed variable
/// and stdin.
pub fn run(args: &[String], env_seed: Option<String>, stdin: &mut dyn Read) -> Outcome {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let (stdout, stderr) = if code == 0 { (text, String::new()) } else { (String::new(), text) };
            return Outcome { code, stdout, stderr };
        }
    };
    match dispatch(&cli, env_seed, stdin) {
        Ok((stdout, code)) => Outcome { code, stdout, stderr: String::new() },
        Err(Fail::Usage(m)) => Outcome { code: 1, stdout: String::new(), stderr: format!("error: {m}\n") },
        Err(Fail::Domain(m)) => Outcome { code: 2, stdout: String::new(), stderr: format!("error: {m}\n") },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str], stdin: &str) -> Outcome {
        let mut argv = vec!["elgen".to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        run(&argv, None, &mut stdin.as_bytes())
    }

    #[test]
    fn uniform_set_json() {
        let o = call(&["gens", "--uniform", "--m", "12"], "");
        assert_eq!(o.code, 0, "{}", o.stderr);
        let v: Value = serde_json::from_str(&o.stdout).unwrap();
        assert_eq!(v["v"], 1);
        assert_eq!(v["matrices"].as_array().unwrap().len(), 60);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(call(&["frobnicate"], "").code, 1);
        assert_eq!(call(&["gens", "--bogus"], "").code, 1);
        assert_eq!(call(&["decompose"], "not json").code, 1);
        assert_eq!(call(&["--help"], "").code, 0);
    }

    #[test]
    fn domain_errors_exit_two() {
        assert_eq!(call(&["decompose"], "[[2,0,0],[0,1,0],[0,0,1]]").code, 2);
        assert_eq!(call(&["reduce", "--seq", "2,4,6"], "").code, 2);
    }

    #[test]
    fn decompose_then_verify() {
        let o = call(&["decompose", "--random", "1", "--m", "6", "--len", "15"], "");
        assert_eq!(o.code, 0, "{}", o.stderr);
        let ok = call(&["verify"], &o.stdout);
        assert_eq!(ok.code, 0, "{}", ok.stdout);
        let bad = o.stdout.replacen("\"v\":1", "\"v\":7", 1);
        assert_eq!(call(&["verify"], &bad).code, 2);
    }

    #[test]
    fn budget_example() {
        let o = call(&["budget", "--l", "1", "--eps0", "1/10", "--count", "340"], "");
        assert_eq!(o.code, 0, "{}", o.stderr);
        let v: Value = serde_json::from_str(&o.stdout).unwrap();
        assert!((v["threshold"]["approx"].as_f64().unwrap() - 1.1103e-5).abs() < 1e-9);
        assert_eq!(v["k"], 60);
    }

    #[test]
    fn reduce_sequence() {
        let o = call(&["reduce", "--seq", "6,10,15", "--bezout"], "");
        assert_eq!(o.code, 0, "{}", o.stderr);
        let v: Value = serde_json::from_str(&o.stdout).unwrap();
        assert_eq!(v["coefficients"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn spectral_formats() {
        let o = call(&["spectral", "--n-range", "3..4", "--format", "tsv"], "");
        assert_eq!(o.code, 0, "{}", o.stderr);
        assert_eq!(o.stdout.lines().count(), 5);
        assert_eq!(parse_range("3-5").ok(), Some(vec![3, 4, 5]));
        assert_eq!(parse_range("3,6").ok(), Some(vec![3, 6]));
    }

    #[test]
    fn env_seed_overrides() {
        assert_eq!(effective_seed(5, Some("9".into())).ok(), Some(9));
        assert_eq!(effective_seed(5, None).ok(), Some(5));
        assert!(effective_seed(5, Some("x".into())).is_err());
    }
}
