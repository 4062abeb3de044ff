//! Command-line front end.
//!
//! Every subcommand reads its parameters from one table, so the same keys
//! work as `--key value` flags and as `key=value` lines in a config file.
//! Flags override the file, which overrides the defaults. The effective
//! configuration and its hash open every output stream, and every record
//! carries the hash.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::str::FromStr;

use clap::{Arg, ArgMatches, Command};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::cf::{cylinder, expand_rational, gauss_measure, ClosedEnd, Word};
use crate::error::Error;
use crate::growth::{parse_growth, series_test, GrowthExpr, Verdict};
use crate::mc::{mc_experiment, McConfig};
use crate::pressure::{
    f_eval, hdim_dispatch, pressure, s_of_b, solve_s, Alphabet, BranchOverride, Engine, FKind, FSpec,
};
use crate::tails::{asymptotic_envelope, measure_of_event, weighted_tail_sum, Bracket, Measure, Threshold};
use crate::weights::{parse_decimal, Weights};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_DOMAIN: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "WPQ_THREADS";

struct Param {
    key: &'static str,
    default: Option<&'static str>,
    help: &'static str,
}

const fn p(key: &'static str, default: Option<&'static str>, help: &'static str) -> Param {
    Param { key, default, help }
}

struct Sub {
    name: &'static str,
    about: &'static str,
    params: &'static [Param],
}

const T_HELP: &str = "exponents t_0,...,t_{m-1} as exact decimals";
const PSI_HELP: &str = "growth function Psi(n), e.g. pow(4), poly(3), doubleexp(e,2), n^2*log(n)";

const SUBCOMMANDS: &[Sub] = &[
    Sub {
        name: "expand",
        about: "Continued-fraction digits and convergents of a rational in [0, 1)",
        params: &[p("x", None, "rational or decimal, e.g. 3/7"), p("max-depth", Some("64"), "digit limit")],
    },
    Sub {
        name: "cylinder",
        about: "Exact endpoints and length of a cylinder",
        params: &[p("word", None, "digits a_1,...,a_n")],
    },
    Sub {
        name: "gauss-measure",
        about: "Gauss measure of a cylinder",
        params: &[p("word", None, "digits a_1,...,a_n")],
    },
    Sub {
        name: "tail-sum",
        about: "Bracket of the sum of prod 1/(a_i(a_i+1)) over prod a_i^{t_i} >= g",
        params: &[
            p("t", None, T_HELP),
            p("g", None, "threshold g >= 1"),
            p("cutoff", Some("10000"), "explicit enumeration cutoff per coordinate"),
        ],
    },
    Sub {
        name: "event-measure",
        about: "Bracket of the measure of {x : prod a_i(x)^{t_i} >= g}",
        params: &[
            p("t", None, T_HELP),
            p("g", None, "threshold g >= 1"),
            p("measure", Some("lebesgue"), "lebesgue or gauss"),
            p("cutoff", Some("10000"), "explicit enumeration cutoff per coordinate"),
        ],
    },
    Sub {
        name: "f-eval",
        about: "Value of a penalty multiplier f(s)",
        params: &[
            p("kind", Some("general"), "single, pair, unit(m) or general"),
            p("t", None, T_HELP),
            p("s", None, "point in [0, 1]"),
        ],
    },
    Sub {
        name: "pressure",
        about: "Pressure of -s ln|T'| - c over digits {1..M} or all digits",
        params: &[
            p("alphabet", Some("inf"), "M or inf"),
            p("s", None, "potential parameter"),
            p("c", Some("0"), "constant subtracted from the potential"),
            p("engine", Some("spectral"), "spectral or wordsum"),
            p("grid", Some("32"), "Chebyshev grid size (spectral)"),
            p("depth", Some("8"), "word length (wordsum)"),
        ],
    },
    Sub {
        name: "solve-s",
        about: "Root of P(s) = f(s) ln B",
        params: &[
            p("b", None, "B > 1"),
            p("t", Some("1,1"), T_HELP),
            p("kind", Some("auto"), "auto, single, pair, unit(m) or general"),
            p("alphabet", Some("inf"), "M, inf, or schedule for the finite-alphabet ladder"),
            p("tol", Some("1e-8"), "bisection tolerance"),
            p("engine", Some("spectral"), "spectral or wordsum"),
            p("grid", Some("32"), "Chebyshev grid size"),
            p("depth", Some("8"), "word length (wordsum)"),
            p("max-alphabet", Some("65536"), "largest M in the schedule"),
        ],
    },
    Sub {
        name: "dim",
        about: "Hausdorff dimension of the limsup set",
        params: &[
            p("psi", None, PSI_HELP),
            p("t", None, T_HELP),
            p("tol", Some("1e-8"), "root tolerance"),
            p("branch", None, "override for non-preset growth: one, finite:<B> or infinite:<b>"),
        ],
    },
    Sub {
        name: "series",
        about: "Convergence test for the series deciding the Lebesgue measure",
        params: &[p("psi", None, PSI_HELP), p("t", None, T_HELP), p("horizon", Some("10000"), "partial-sum length")],
    },
    Sub {
        name: "simulate",
        about: "Monte Carlo hit statistics over a window of indices",
        params: &[
            p("psi", None, PSI_HELP),
            p("t", None, T_HELP),
            p("base", Some("gauss"), "gauss or lebesgue"),
            p("samples", Some("1000"), "number of sampled points"),
            p("window", Some("1,1000"), "index window n0,n1"),
            p("seed", Some("0"), "64-bit seed"),
            p("digits", None, "digits per sample (default: what the window needs)"),
            p("cutoff", Some("10000"), "enumeration cutoff for the analytic bracket"),
            p("hits-out", None, "path for a CSV dump of every hit"),
        ],
    },
];

const FORMATS: [&str; 2] = ["json-lines", "csv"];

/// Failure of a run, with its exit code.
#[derive(Debug)]
struct CliError {
    code: i32,
    kind: &'static str,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, kind: "usage", message: message.into() }
    }

    fn parse(key: &str, err: impl std::fmt::Display) -> Self {
        Self { code: EXIT_PARSE, kind: "parse", message: format!("--{key}: {err}") }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Parse { .. } | Error::UnknownIdentifier(_) => (EXIT_PARSE, "parse"),
            Error::Domain(_) | Error::GrowthBelowOne { .. } | Error::Budget { .. } | Error::BranchUnresolved(_) => {
                (EXIT_DOMAIN, "domain")
            }
            Error::NoConvergence { .. } | Error::Config(_) => (EXIT_NUMERICAL, "numerical"),
        };
        Self { code, kind, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn command() -> Command {
    let mut cmd = Command::new("wpq")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Metrical quantities of continued-fraction limsup sets with weighted products of digits")
        .subcommand_required(true)
        .arg(
            Arg::new("format")
                .long("format")
                .global(true)
                .value_name("FORMAT")
                .help("json-lines (default) or csv"),
        )
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_name("FILE")
                .help("key=value file; flags take precedence"),
        );
    for sub in SUBCOMMANDS {
        let mut sc = Command::new(sub.name).about(sub.about);
        for prm in sub.params {
            let help = match prm.default {
                Some(d) => format!("{} [default: {d}]", prm.help),
                None => prm.help.to_string(),
            };
            sc = sc.arg(
                Arg::new(prm.key)
                    .long(prm.key)
                    .value_name("VALUE")
                    .allow_negative_numbers(true)
                    .help(help),
            );
        }
        cmd = cmd.subcommand(sc);
    }
    cmd
}

fn read_config_file(path: &str) -> CliResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read config file {path}: {e}")))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("{path}:{}: expected key=value", i + 1)))?;
        out.insert(k.trim().trim_start_matches("--").to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Defaults, then the config file, then flags.
fn effective_config(sub: &Sub, m: &ArgMatches) -> CliResult<BTreeMap<String, String>> {
    let mut cfg = BTreeMap::new();
    cfg.insert("format".to_string(), FORMATS[0].to_string());
    for prm in sub.params {
        if let Some(d) = prm.default {
            cfg.insert(prm.key.to_string(), d.to_string());
        }
    }
    if let Some(path) = m.get_one::<String>("config") {
        for (k, v) in read_config_file(path)? {
            if k != "format" && !sub.params.iter().any(|p| p.key == k) {
                return Err(CliError::usage(format!("config key `{k}` is not a parameter of {}", sub.name)));
            }
            cfg.insert(k, v);
        }
    }
    if let Some(f) = m.get_one::<String>("format") {
        cfg.insert("format".into(), f.clone());
    }
    for prm in sub.params {
        if let Some(v) = m.get_one::<String>(prm.key) {
            cfg.insert(prm.key.to_string(), v.clone());
        }
    }
    if !FORMATS.contains(&cfg["format"].as_str()) {
        return Err(CliError::usage(format!("unknown format `{}` (expected json-lines or csv)", cfg["format"])));
    }
    for prm in sub.params {
        if prm.default.is_none() && !cfg.contains_key(prm.key) && !optional(sub.name, prm.key) {
            return Err(CliError::usage(format!("{} needs --{}", sub.name, prm.key)));
        }
    }
    Ok(cfg)
}

fn optional(sub: &str, key: &str) -> bool {
    matches!((sub, key), ("dim", "branch") | ("simulate", "digits") | ("simulate", "hits-out"))
}

/// First 16 hex digits of the SHA-256 of the canonical configuration.
fn config_hash(sub: &str, cfg: &BTreeMap<String, String>) -> String {
    let mut canon = format!("wpq {}\nsubcommand={sub}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in cfg {
        let _ = writeln!(canon, "{k}={v}");
    }
    let digest = Sha256::digest(canon.as_bytes());
    format!("{digest:x}")[..16].to_string()
}

/// Typed access to the effective configuration.
struct Params<'a> {
    cfg: &'a BTreeMap<String, String>,
}

impl Params<'_> {
    fn raw(&self, key: &str) -> CliResult<&str> {
        self.cfg
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| CliError::usage(format!("missing --{key}")))
    }

    fn opt(&self, key: &str) -> Option<&str> {
        self.cfg.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)?.trim().parse::<T>().map_err(|e| CliError::parse(key, e))
    }

    fn rational(&self, key: &str) -> CliResult<BigRational> {
        parse_decimal(self.raw(key)?).map_err(|e| CliError::parse(key, e))
    }

    fn float(&self, key: &str) -> CliResult<f64> {
        let v: f64 = self.get(key)?;
        if v.is_nan() {
            return Err(CliError::parse(key, "NaN is not a number"));
        }
        Ok(v)
    }

    fn growth(&self, key: &str) -> CliResult<GrowthExpr> {
        parse_growth(self.raw(key)?).map_err(|e| CliError::parse(key, e))
    }
}

/// Decimal string with 17 significant digits.
pub fn num(x: f64) -> Value {
    Value::String(if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    })
}

fn rat(r: &BigRational) -> Value {
    Value::String(r.to_string())
}

fn big(i: &BigInt) -> Value {
    Value::String(i.to_string())
}

fn bracket(b: &Bracket) -> Value {
    json!([num(b.lo), num(b.hi)])
}

fn pair(lo: f64, hi: f64) -> Value {
    json!([num(lo), num(hi)])
}

/// Collects records in the chosen format.
struct Output {
    csv: bool,
    hash: String,
    text: String,
    csv_seen: HashSet<String>,
}

impl Output {
    fn header(&mut self, sub: &str, cfg: &BTreeMap<String, String>) {
        if self.csv {
            let _ = writeln!(self.text, "# wpq {}", env!("CARGO_PKG_VERSION"));
            let _ = writeln!(self.text, "# subcommand={sub}");
            for (k, v) in cfg {
                let _ = writeln!(self.text, "# {k}={v}");
            }
            let _ = writeln!(self.text, "# config_hash={}", self.hash);
        } else {
            let config: Map<String, Value> = cfg.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
            self.record(
                "header",
                vec![
                    ("tool", json!("wpq")),
                    ("version", json!(env!("CARGO_PKG_VERSION"))),
                    ("subcommand", json!(sub)),
                    ("config", Value::Object(config)),
                ],
            );
        }
    }

    fn record(&mut self, kind: &str, fields: Vec<(&str, Value)>) {
        if self.csv {
            if self.csv_seen.insert(kind.to_string()) {
                let names: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
                let _ = writeln!(self.text, "record,config_hash,{}", names.join(","));
            }
            let cells: Vec<String> = fields.iter().map(|(_, v)| csv_cell(v)).collect();
            let _ = writeln!(self.text, "{kind},{},{}", self.hash, cells.join(","));
        } else {
            let mut obj = Map::new();
            obj.insert("record".into(), json!(kind));
            obj.insert("config_hash".into(), json!(self.hash));
            for (k, v) in fields {
                obj.insert(k.into(), v);
            }
            let _ = writeln!(self.text, "{}", Value::Object(obj));
        }
    }
}

fn csv_plain(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(csv_plain).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

fn csv_cell(v: &Value) -> String {
    let s = csv_plain(v);
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

fn weights(p: &Params) -> CliResult<Weights> {
    p.get::<Weights>("t")
}

fn engine(p: &Params) -> CliResult<Engine> {
    match p.raw("engine")? {
        "spectral" => Ok(Engine::Spectral { grid: p.get("grid")? }),
        "wordsum" => Ok(Engine::WordSum { depth: p.get("depth")? }),
        other => Err(CliError::parse("engine", format!("unknown engine `{other}` (expected spectral or wordsum)"))),
    }
}

fn closed_name(c: ClosedEnd) -> &'static str {
    match c {
        ClosedEnd::Left => "left",
        ClosedEnd::Right => "right",
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Convergent => "convergent",
        Verdict::Divergent => "divergent",
        Verdict::Undecided => "undecided",
    }
}

fn dispatch(sub: &str, p: &Params, out: &mut Output) -> CliResult<()> {
    match sub {
        "expand" => {
            let x = p.rational("x")?;
            let depth: usize = p.get("max-depth")?;
            let w = expand_rational(&x, depth)?;
            let conv = crate::cf::convergents(&w);
            let complete = w.value() == x;
            out.record(
                "expansion",
                vec![
                    ("x", rat(&x)),
                    ("word", json!(w.digits())),
                    ("convergents", Value::Array(conv.iter().map(|c| json!(format!("{}/{}", c.p, c.q))).collect())),
                    ("complete", json!(complete)),
                ],
            );
        }
        "cylinder" => {
            let w: Word = p.get("word")?;
            let c = cylinder(&w);
            let len = c.length();
            out.record(
                "cylinder",
                vec![
                    ("word", json!(w.digits())),
                    ("order", json!(c.order())),
                    ("left", rat(&c.left)),
                    ("right", rat(&c.right)),
                    ("closed", json!(closed_name(c.closed))),
                    ("length", rat(&len)),
                    ("length_approx", num(num_traits::ToPrimitive::to_f64(&len).unwrap_or(f64::NAN))),
                    ("q_n", big(&c.q)),
                    ("q_prev", big(&c.q_prev)),
                ],
            );
        }
        "gauss-measure" => {
            let w: Word = p.get("word")?;
            let mv = gauss_measure(&cylinder(&w));
            out.record(
                "gauss_measure",
                vec![
                    ("word", json!(w.digits())),
                    ("value", num(mv.value)),
                    ("abs_error", num(mv.abs_error)),
                    ("bracket", pair(mv.value - mv.abs_error, mv.value + mv.abs_error)),
                ],
            );
        }
        "tail-sum" => {
            let t = weights(p)?;
            let g: Threshold = p.get("g")?;
            let b = weighted_tail_sum(&t, &g, p.get("cutoff")?)?;
            let env = asymptotic_envelope(&t, g.ln().exp())?;
            out.record(
                "tail_sum",
                vec![
                    ("t", json!(t.to_string())),
                    ("g", rat(g.exact().expect("parsed thresholds are exact"))),
                    ("bracket", bracket(&b)),
                    ("exact", b.exact.as_ref().map_or(Value::Null, rat)),
                    ("width", num(b.width())),
                    ("envelope", num(env)),
                ],
            );
        }
        "event-measure" => {
            let t = weights(p)?;
            let g: Threshold = p.get("g")?;
            let measure: Measure = p.get("measure")?;
            let b = measure_of_event(&t, &g, measure, p.get("cutoff")?)?;
            out.record(
                "event_measure",
                vec![
                    ("t", json!(t.to_string())),
                    ("g", rat(g.exact().expect("parsed thresholds are exact"))),
                    ("measure", json!(measure.to_string())),
                    ("bracket", bracket(&b)),
                    ("exact", b.exact.as_ref().map_or(Value::Null, rat)),
                    ("width", num(b.width())),
                ],
            );
        }
        "f-eval" => {
            let t = weights(p)?;
            let kind: FKind = p.get("kind")?;
            let spec = FSpec::new(t.clone(), kind)?;
            let s = p.float("s")?;
            let f = f_eval(&spec, s)?;
            out.record(
                "f_value",
                vec![("kind", json!(spec.kind().to_string())), ("t", json!(t.to_string())), ("s", num(s)), ("f", num(f))],
            );
        }
        "pressure" => {
            let alphabet: Alphabet = p.get("alphabet")?;
            let e = engine(p)?;
            let s = p.float("s")?;
            let v = pressure(alphabet, s, p.float("c")?, e)?;
            out.record(
                "pressure",
                vec![
                    ("alphabet", json!(alphabet.to_string())),
                    ("engine", json!(p.raw("engine")?)),
                    ("s", num(s)),
                    ("value", num(v.value)),
                    ("abs_error", num(v.abs_error)),
                    ("residual", num(v.residual)),
                    ("iterations", json!(v.iterations)),
                    ("grid", json!(v.grid)),
                ],
            );
        }
        "solve-s" => {
            let t = weights(p)?;
            let kind = match p.raw("kind")? {
                "auto" => match t.len() {
                    1 => FKind::Single,
                    2 => FKind::Pair,
                    _ => FKind::GeneralIter,
                },
                _ => p.get("kind")?,
            };
            let spec = FSpec::new(t.clone(), kind)?;
            let b = p.float("b")?;
            let tol = p.float("tol")?;
            if p.raw("alphabet")? == "schedule" {
                let r = s_of_b(b, &spec, tol, p.get("grid")?, p.get("max-alphabet")?)?;
                for &(m, s) in &r.schedule {
                    out.record("schedule", vec![("alphabet", json!(m)), ("s", num(s))]);
                }
                out.record(
                    "s_of_b",
                    vec![
                        ("kind", json!(spec.kind().to_string())),
                        ("b", num(b)),
                        ("value", num(r.value)),
                        ("abs_error", num(r.abs_error)),
                        ("full_alphabet", r.full_alphabet.map_or(Value::Null, num)),
                        ("lower_bound_only", json!(r.lower_bound_only)),
                    ],
                );
            } else {
                let alphabet: Alphabet = p.get("alphabet")?;
                let r = solve_s(alphabet, b, &spec, tol, engine(p)?)?;
                out.record(
                    "root",
                    vec![
                        ("kind", json!(spec.kind().to_string())),
                        ("alphabet", json!(alphabet.to_string())),
                        ("b", num(b)),
                        ("s", num(r.s)),
                        ("bracket", pair(r.lo, r.hi)),
                        ("evaluations", json!(r.evaluations)),
                        ("pressure_error", num(r.pressure_error)),
                    ],
                );
            }
        }
        "dim" => {
            let e = p.growth("psi")?;
            let t = weights(p)?;
            let over = match p.opt("branch") {
                Some(b) => Some(b.parse::<BranchOverride>().map_err(|e| CliError::parse("branch", e))?),
                None => None,
            };
            let d = hdim_dispatch(&e, &t, over, p.float("tol")?)?;
            let dg = &d.diagnostics;
            let candidates: Vec<Value> =
                dg.candidates.iter().map(|(name, s)| json!({"name": name, "s": num(*s)})).collect();
            out.record(
                "dimension",
                vec![
                    ("psi", json!(e.text())),
                    ("t", json!(t.to_string())),
                    ("lower", num(d.lower)),
                    ("upper", num(d.upper)),
                    ("value", num(d.value())),
                    ("branch", json!(d.branch.to_string())),
                    ("source", json!(dg.source)),
                    ("b_base", dg.b_base.map_or(Value::Null, num)),
                    ("alphabet", json!(dg.alphabet.to_string())),
                    ("grid", json!(dg.grid)),
                    ("tol", num(dg.tol)),
                    ("engine_error", num(dg.engine_error)),
                    ("candidates", Value::Array(candidates)),
                    ("reduction_agreement", dg.reduction_agreement.map_or(Value::Null, num)),
                ],
            );
        }
        "series" => {
            let e = p.growth("psi")?;
            let t = weights(p)?;
            let v = series_test(&e, &t, p.get("horizon")?)?;
            out.record(
                "series",
                vec![
                    ("psi", json!(e.text())),
                    ("t", json!(t.to_string())),
                    ("verdict", json!(verdict_name(v.verdict))),
                    ("window_verdict", json!(verdict_name(v.window_verdict))),
                    ("partial_sum", num(v.partial_sum)),
                    ("horizon", json!(v.horizon)),
                    ("evidence", json!(v.tail_evidence)),
                ],
            );
        }
        "simulate" => {
            let e = p.growth("psi")?;
            let t = weights(p)?;
            let window = p.raw("window")?;
            let (n0, n1) = window
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse::<u64>().ok()?, b.trim().parse::<u64>().ok()?)))
                .ok_or_else(|| CliError::parse("window", format!("expected n0,n1, got `{window}`")))?;
            let mut cfg = McConfig::new(t.clone(), e.clone(), p.get("base")?, (n0, n1), p.get("samples")?, p.get("seed")?);
            cfg.cutoff = p.get("cutoff")?;
            cfg.digits = p.opt("digits").map(|_| p.get("digits")).transpose()?;
            let hits_out = p.opt("hits-out");
            cfg.keep_hits = hits_out.is_some();
            let s = mc_experiment(&cfg)?;
            if let Some(path) = hits_out {
                let mut csv = String::from("sampleId,n,logProduct,logPsi\n");
                for (id, h) in &s.hits {
                    let _ = writeln!(csv, "{id},{},{:.16e},{:.16e}", h.n, h.log_product, h.log_psi);
                }
                std::fs::write(path, csv).map_err(|e| CliError::usage(format!("cannot write {path}: {e}")))?;
            }
            out.record(
                "simulation",
                vec![
                    ("psi", json!(e.text())),
                    ("t", json!(t.to_string())),
                    ("base", json!(cfg.base.to_string())),
                    ("window", json!([n0, n1])),
                    ("samples", json!(s.samples)),
                    ("hit_samples", json!(s.hit_samples)),
                    ("empirical_hit_prob", num(s.empirical_hit_prob)),
                    ("hit_prob_sigma", num(s.hit_prob_sigma)),
                    ("mean_hit_count", num(s.mean_hit_count)),
                    ("analytic_bracket", bracket(&s.analytic_bracket)),
                    ("union_bound", num(s.union_bound)),
                    ("unresolved_ties", json!(s.unresolved_ties)),
                    ("note", json!("window surrogate: P(at least one hit in [n0, n1]), not the limsup event")),
                ],
            );
        }
        other => return Err(CliError::usage(format!("unknown subcommand `{other}`"))),
    }
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    // a second run in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn error_record(err: &CliError, csv: bool, hash: &str) -> String {
    if csv {
        format!(
            "record,config_hash,code,kind,message\nerror,{hash},{},{},{}\n",
            err.code,
            err.kind,
            csv_cell(&json!(err.message))
        )
    } else {
        let v = json!({"record": "error", "config_hash": hash, "code": err.code, "kind": err.kind, "message": err.message});
        format!("{v}\n")
    }
}

/// Run with the given arguments (program name first). Returns the exit code
/// and the text for standard output.
pub fn run<I, S>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let matches = match command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            return (code, e.render().to_string());
        }
    };
    let (name, sub_m) = matches.subcommand().expect("subcommand is required");
    let sub = SUBCOMMANDS.iter().find(|s| s.name == name).expect("registered subcommand");
    let cfg = match effective_config(sub, sub_m) {
        Ok(c) => c,
        Err(e) => {
            let csv = sub_m.get_one::<String>("format").is_some_and(|f| f == "csv");
            return (e.code, error_record(&e, csv, ""));
        }
    };
    let hash = config_hash(name, &cfg);
    let csv = cfg["format"] == "csv";
    let mut out = Output { csv, hash: hash.clone(), text: String::new(), csv_seen: HashSet::new() };
    out.header(name, &cfg);
    let result = configure_threads().and_then(|()| dispatch(name, &Params { cfg: &cfg }, &mut out));
    match result {
        Ok(()) => (EXIT_OK, out.text),
        Err(e) => {
            let mut text = out.text;
            if csv {
                text.push_str(&error_record(&e, true, &hash));
            } else {
                text.push_str(&error_record(&e, false, &hash));
            }
            (e.code, text)
        }
    }
}
