use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use linv_core::engine::{EngineError, Engine, ReportSummary, Verdict};
use linv_core::fixtures::{
    element_to_json, load_fixture_with_precision, validate_arithmetic, FixtureJson, GaloisProblem, Param,
    RefinementJson,
};
use linv_core::galois::GaloisError;
use linv_core::linalg::LinalgError;
use linv_core::padic::{FieldElement, PadicError};
use linv_core::special::{adjoint_cm_data, cross_checks, family_refinements, CrossCheck};
use linv_core::synth::{adjoint_cm_fixture, cm_fixture, gaussian_fixture, random_fixture, SynthOptions};
use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

const OK: u8 = 0;
const INVALID: u8 = 1;
const SINGULAR: u8 = 2;
const SHORTFALL: u8 = 3;

#[derive(Parser)]
#[command(name = "linv", version, about = "L-invariants of Artin motives from fixture files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    /// Q(i) at p = 5 with ι(i) the Teichmüller lift of 2.
    Qi,
    /// Q(i) at p = 5 with ι(i) the Teichmüller lift of 3.
    QiTeich3,
    Cm,
    Adjcm,
    Synthetic,
}

#[derive(Subcommand)]
enum Command {
    /// Load a fixture and run the arithmetic consistency checks.
    Validate { fixture: PathBuf },
    /// Compute the L-invariant of one refinement or sweep a refinement family.
    Compute {
        fixture: PathBuf,
        #[arg(long, conflicts_with = "sweep")]
        refinement: Option<String>,
        /// Comma-separated values, e.g. `s=0,1,1/2,∞`.
        #[arg(long)]
        sweep: Option<String>,
        /// Second family parameter, for families with a `t` direction.
        #[arg(long, requires = "sweep")]
        t: Option<String>,
        #[arg(long)]
        cross_check: bool,
        #[arg(long)]
        precision: Option<i64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Emit a synthetic fixture.
    Gen {
        #[arg(value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 40)]
        precision: i64,
        #[arg(long, default_value_t = 100)]
        digits: i64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn resolve(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    if let Ok(dirs) = std::env::var("LINV_FIXTURE_DIR") {
        for dir in std::env::split_paths(&dirs) {
            let candidate = dir.join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

fn load(path: &Path, precision: Option<i64>) -> Result<GaloisProblem, u8> {
    let path = resolve(path);
    let bytes = std::fs::read(&path).map_err(|e| {
        eprintln!("cannot read {}: {e}", path.display());
        INVALID
    })?;
    load_fixture_with_precision(&bytes, precision).map_err(|e| {
        eprintln!("invalid fixture {}:\n{e}", path.display());
        INVALID
    })
}

fn is_shortfall(err: &EngineError) -> bool {
    matches!(
        err,
        EngineError::Padic(PadicError::PrecisionExhausted)
            | EngineError::NoRegularRefinement { .. }
            | EngineError::Linalg(LinalgError::AmbiguousRank { .. })
            | EngineError::Linalg(LinalgError::Padic(PadicError::PrecisionExhausted))
            | EngineError::Galois(GaloisError::Linalg(LinalgError::AmbiguousRank { .. }))
    )
}

fn engine_failure(prob: &GaloisProblem, err: &EngineError) -> u8 {
    if is_shortfall(err) {
        eprintln!("precision shortfall: {err}; retry with --precision {} or more", 2 * prob.precision);
        SHORTFALL
    } else {
        eprintln!("error: {err}");
        INVALID
    }
}

fn parse_scalar(prob: &GaloisProblem, token: &str) -> Result<Param, String> {
    let token = token.trim();
    if matches!(token, "∞" | "inf" | "infinity") {
        return Ok(Param::Infinity);
    }
    let (num, den) = token.split_once('/').unwrap_or((token, "1"));
    let parse = |s: &str| s.trim().parse::<BigInt>().map_err(|_| format!("bad parameter `{token}`"));
    let (num, den) = (parse(num)?, parse(den)?);
    if den == BigInt::from(0) {
        return Ok(Param::Infinity);
    }
    let q = num_rational::BigRational::new(num, den);
    Ok(Param::Finite(FieldElement::from_rational(&prob.working, &q)))
}

#[derive(Serialize)]
struct Row {
    s: String,
    #[serde(flatten)]
    report: ReportSummary,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    cross_checks: Vec<CheckRow>,
}

#[derive(Serialize)]
struct CheckRow {
    #[serde(flatten)]
    check: Option<CrossCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn check_rows(checks: Vec<Result<CrossCheck, String>>) -> Vec<CheckRow> {
    checks
        .into_iter()
        .map(|c| match c {
            Ok(check) => CheckRow { check: Some(check), error: None },
            Err(e) => CheckRow { check: None, error: Some(e) },
        })
        .collect()
}

fn print_text(row: &Row) {
    let r = &row.report;
    println!("refinement      {}", r.refinement);
    println!("p, N            {}, {}", r.p, r.precision);
    println!("d, d⁺, f        {}, {}, {}", r.d, r.d_plus, r.f);
    println!("regulator       {}", r.reg);
    if !r.regular {
        println!("verdict         singular");
        return;
    }
    println!("e               {}", r.e);
    if let Some(v) = &r.value {
        println!("L               {v}");
    }
    if let Some(c) = r.certified_precision {
        println!("certified       {c} digits");
    }
    for line in &r.basis_audit {
        println!("audit           {line}");
    }
    for c in &row.cross_checks {
        match (&c.check, &c.error) {
            (Some(c), _) => println!(
                "cross-check     {}: {} ({} digits)",
                c.name,
                if c.agrees { "agree" } else { "DISAGREE" },
                c.digits
            ),
            (_, Some(e)) => println!("cross-check     {e}"),
            _ => {}
        }
    }
}

fn print_sweep_text(rows: &[Row]) {
    println!("{:<12} {:>4} {:>6}  value", "s", "e", "digits");
    for row in rows {
        let r = &row.report;
        if !r.regular {
            println!("{:<12} {:>4} {:>6}  singular", row.s, "-", "-");
            continue;
        }
        let flags: Vec<String> = row
            .cross_checks
            .iter()
            .filter_map(|c| c.check.as_ref())
            .map(|c| format!("{}={}", c.name, if c.agrees { "agree" } else { "DISAGREE" }))
            .collect();
        println!(
            "{:<12} {:>4} {:>6}  {} {}",
            row.s,
            r.e,
            r.certified_precision.unwrap_or(0),
            r.value.as_deref().unwrap_or(""),
            flags.join(" ")
        );
    }
}

fn validate(path: &Path) -> u8 {
    let prob = match load(path, None) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let report = validate_arithmetic(&prob);
    println!("{report}");
    if report.passed() {
        OK
    } else {
        INVALID
    }
}

fn run_one(prob: &GaloisProblem, engine: &Engine, label: &str, r: &linv_core::fixtures::Refinement, cross: bool) -> Result<Row, EngineError> {
    let verdict = engine.l_invariant(r)?;
    let checks = match (&verdict, cross) {
        (Verdict::Regular(rep), true) => check_rows(cross_checks(prob, r, rep)),
        _ => Vec::new(),
    };
    Ok(Row {
        s: label.to_string(),
        report: verdict.summary(prob),
        cross_checks: checks,
    })
}

#[allow(clippy::too_many_arguments)]
fn compute(
    path: &Path,
    refinement: Option<String>,
    sweep: Option<String>,
    t: Option<String>,
    cross: bool,
    precision: Option<i64>,
    format: Format,
) -> u8 {
    let prob = match load(path, precision) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let engine = match Engine::new(&prob) {
        Ok(e) => e,
        Err(e) => return engine_failure(&prob, &e),
    };
    if let Some(spec) = sweep {
        let Some(family) = prob.special.family.clone() else {
            eprintln!("--sweep requires a fixture with a refinement family");
            return INVALID;
        };
        let list = spec.trim().strip_prefix("s=").unwrap_or(spec.trim());
        let t = match t.map(|t| parse_scalar(&prob, &t)).transpose() {
            Ok(Some(Param::Finite(t))) => Some(t),
            Ok(Some(Param::Infinity)) => {
                eprintln!("t must be finite");
                return INVALID;
            }
            Ok(None) => None,
            Err(e) => {
                eprintln!("{e}");
                return INVALID;
            }
        };
        let params: Result<Vec<(String, Param)>, String> = list
            .split(',')
            .map(|tok| parse_scalar(&prob, tok).map(|p| (tok.trim().to_string(), p)))
            .collect();
        let params = match params {
            Ok(p) => p,
            Err(e) => {
                eprintln!("{e}");
                return INVALID;
            }
        };
        let rows: Vec<Result<Row, EngineError>> = params
            .par_iter()
            .map(|(label, s)| {
                let mut r = family.refinement(s, t.as_ref());
                r.name = format!("s={label}");
                run_one(&prob, &engine, label, &r, cross)
            })
            .collect();
        let mut out = Vec::new();
        for row in rows {
            match row {
                Ok(r) => out.push(r),
                Err(e) => return engine_failure(&prob, &e),
            }
        }
        match format {
            Format::Json => println!("{}", serde_json::to_string_pretty(&out).unwrap()),
            Format::Text => print_sweep_text(&out),
        }
        return if out.iter().any(|r| !r.report.regular) {
            SINGULAR
        } else if out.iter().any(|r| r.cross_checks.iter().any(|c| c.check.as_ref().is_some_and(|c| !c.agrees))) {
            SHORTFALL
        } else {
            OK
        };
    }
    let name = refinement.unwrap_or_else(|| prob.refinements.first().map(|r| r.name.clone()).unwrap_or_default());
    let Some(r) = prob.refinement(&name).cloned() else {
        eprintln!("no refinement named `{name}`");
        return INVALID;
    };
    let row = match run_one(&prob, &engine, &name, &r, cross) {
        Ok(row) => row,
        Err(e) => return engine_failure(&prob, &e),
    };
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&row).unwrap()),
        Format::Text => print_text(&row),
    }
    if !row.report.regular {
        SINGULAR
    } else if row.cross_checks.iter().any(|c| c.check.as_ref().is_some_and(|c| !c.agrees)) {
        SHORTFALL
    } else {
        OK
    }
}

fn with_family_refinements(json: FixtureJson, digits: i64) -> Option<FixtureJson> {
    let prob = load_fixture_with_precision(serde_json::to_string(&json).ok()?.as_bytes(), Some(digits)).ok()?;
    let data = adjoint_cm_data(&prob).ok()?;
    let extra = family_refinements(&prob, &data).ok()?;
    let mut json = json;
    for (r, _, _) in extra {
        json.refinements.push(RefinementJson {
            name: r.name,
            basis: r.basis.iter().map(|v| v.iter().map(element_to_json).collect()).collect(),
            motivic: false,
        });
    }
    Some(json)
}

fn generate(kind: Kind, seed: u64, precision: i64, digits: i64) -> Option<FixtureJson> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        Kind::Qi => Some(gaussian_fixture(2, precision, digits)),
        Kind::QiTeich3 => Some(gaussian_fixture(3, precision, digits)),
        Kind::Cm => Some(cm_fixture(&mut rng, precision, digits)),
        Kind::Adjcm => (0..64).find_map(|_| with_family_refinements(adjoint_cm_fixture(&mut rng, precision, digits), digits)),
        Kind::Synthetic => {
            let opts = SynthOptions {
                precision,
                digits,
                refinements: 2,
                ..SynthOptions::default()
            };
            Some(random_fixture(&mut rng, &opts).json)
        }
    }
}

fn gen(kind: Kind, seed: u64, precision: i64, digits: i64, output: Option<PathBuf>) -> u8 {
    let Some(json) = generate(kind, seed, precision, digits) else {
        eprintln!("no admissible fixture found");
        return INVALID;
    };
    let text = serde_json::to_string_pretty(&json).unwrap();
    match output {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, text + "\n") {
                eprintln!("cannot write {}: {e}", path.display());
                return INVALID;
            }
        }
        None => println!("{text}"),
    }
    OK
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { INVALID } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Validate { fixture } => validate(&fixture),
        Command::Compute {
            fixture,
            refinement,
            sweep,
            t,
            cross_check,
            precision,
            format,
        } => compute(&fixture, refinement, sweep, t, cross_check, precision, format),
        Command::Gen {
            kind,
            seed,
            precision,
            digits,
            output,
        } => gen(kind, seed, precision, digits, output),
    };
    ExitCode::from(code)
}
