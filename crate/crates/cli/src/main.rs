use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use recurrencelab::cantor::{apply_insertions, verify_plan, InsertionPlan, Oracle};
use recurrencelab::phi::{parse_phi, PhiSpec};
use recurrencelab::plan::{plan_full_dimension, PlanCaps, PlanOptions, ProfileTarget};
use recurrencelab::rates::{
    box_dimension, close_return_witnesses, fp_log_counts, running_extremes, PlanSampling, RateTrajectory,
};
use recurrencelab::return_time::{return_time_naive, return_times_all, return_times_prime_all};
use recurrencelab::shift::{Alphabet, Base, FreeSymbols, Word};
use recurrencelab::{Error, ErrorKind, ExtReal};

const CAP_ENV: &str = "RECURRENCELAB_CAP";
const MIN_CAP: u64 = 1_000;

/// Return-time rates on the full shift and full-dimension insertion plans.
///
/// Results go to stdout as JSON lines; a human summary goes to stderr.
#[derive(Parser)]
#[command(name = "recurrencelab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dimension verdict and construction case for (φ, α, β).
    Classify(TargetArgs),
    /// Generate an insertion plan for a full-dimension target.
    Plan(PlanArgs),
    /// Materialize a prefix of the point realizing a plan.
    Build(BuildArgs),
    /// First return times R_n (or R'_n) of a word.
    ReturnTimes(ReturnTimesArgs),
    /// Rate trajectory log R_n / φ(n) and its tail extremes.
    Rates(RatesArgs),
    /// Lengths n with R_n < n^(α+ε), rechecked by distance.
    Witnesses(WitnessArgs),
    /// Box-counting dimension of F_p from exact cylinder counts.
    Dim(DimArgs),
    /// Plan, materialize, and check R_n = ℓ_{i+1} on every certified n.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct TargetArgs {
    /// Gauge function, e.g. "log(n)", "n", "2*log(n)^1.5".
    #[arg(long)]
    phi: String,
    /// Lower rate (number or "inf").
    #[arg(long)]
    alpha: ExtReal,
    /// Upper rate (number or "inf").
    #[arg(long)]
    beta: ExtReal,
    /// Window used when γ and δ have to be estimated numerically.
    #[arg(long, default_value_t = 10_000)]
    estimate_horizon: u64,
}

#[derive(Args)]
struct CapArgs {
    /// Largest decimal length of any generated n_i or ℓ_i.
    #[arg(long, default_value_t = 20_000)]
    max_digits: u64,
    /// φ evaluations allowed per search.
    #[arg(long, default_value_t = 1_000_000)]
    search_evals: u64,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    target: TargetArgs,
    /// Number of plan terms.
    #[arg(long, default_value_t = 12)]
    horizon: u64,
    /// F_p block length.
    #[arg(long, default_value_t = 3)]
    p: u32,
    /// Alphabet size.
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[command(flatten)]
    caps: CapArgs,
    /// Write the plan here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    /// Plan JSON produced by `plan`.
    #[arg(long)]
    plan: PathBuf,
    /// Prefix length.
    #[arg(long)]
    len: u64,
    /// F_p interior symbols: "const:S" or "seed:N".
    #[arg(long, default_value = "const:0", value_parser = parse_free)]
    free: FreeSymbols,
    /// Materialization cap (overridden by RECURRENCELAB_CAP).
    #[arg(long, default_value_t = 1_000_000)]
    cap: u64,
    /// Write the digits here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WordArgs {
    /// File holding a digit string ("-" for stdin).
    #[arg(long, conflicts_with = "input")]
    word: Option<PathBuf>,
    /// The digit string itself.
    #[arg(long)]
    input: Option<String>,
    /// Alphabet size.
    #[arg(long, default_value_t = 2)]
    m: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Fast,
    Naive,
}

impl From<OracleArg> for Oracle {
    fn from(o: OracleArg) -> Self {
        match o {
            OracleArg::Fast => Oracle::Fast,
            OracleArg::Naive => Oracle::Naive,
        }
    }
}

#[derive(Args)]
struct ReturnTimesArgs {
    #[command(flatten)]
    word: WordArgs,
    /// Report R'_n (returns at shift ≥ n).
    #[arg(long)]
    prime: bool,
    #[arg(long, value_enum, default_value_t = OracleArg::Fast)]
    oracle: OracleArg,
}

#[derive(Args)]
struct RatesArgs {
    /// Word file; rates are observed on it.
    #[arg(long, conflicts_with_all = ["input", "plan"])]
    word: Option<PathBuf>,
    /// Digit string; rates are observed on it.
    #[arg(long, conflicts_with = "plan")]
    input: Option<String>,
    /// Plan JSON; rates are predicted from it.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[arg(long)]
    phi: String,
    /// Range "lo:hi" of n; plans default to their bracket breakpoints.
    #[arg(long, value_parser = parse_range)]
    range: Option<(u64, u64)>,
    /// Fraction of trailing entries used for the extremes.
    #[arg(long, default_value_t = 0.5)]
    tail: f64,
}

#[derive(Args)]
struct WitnessArgs {
    #[command(flatten)]
    word: WordArgs,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
}

#[derive(Args)]
struct DimArgs {
    /// F_p block length.
    #[arg(long)]
    fp: u32,
    #[arg(long, default_value_t = 2)]
    m: u32,
    /// Depths "start:end:step".
    #[arg(long, value_parser = parse_depths)]
    depths: (u64, u64, u64),
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long, default_value_t = 12)]
    horizon: u64,
    #[arg(long, default_value_t = 3)]
    p: u32,
    #[arg(long, default_value_t = 2)]
    m: u32,
    /// Materialization cap (overridden by RECURRENCELAB_CAP).
    #[arg(long, default_value_t = 1_000_000)]
    cap: u64,
    #[arg(long, default_value = "const:0", value_parser = parse_free)]
    free: FreeSymbols,
    #[arg(long, value_enum, default_value_t = OracleArg::Fast)]
    oracle: OracleArg,
    /// Fraction of trailing breakpoints used for rate estimates.
    #[arg(long, default_value_t = 0.5)]
    tail: f64,
    /// Relative tolerance when comparing estimates with α and β.
    #[arg(long, default_value_t = 0.1)]
    rate_tol: f64,
    #[command(flatten)]
    caps: CapArgs,
}

fn parse_free(s: &str) -> Result<FreeSymbols, String> {
    let (kind, value) = s.split_once(':').ok_or("expected const:S or seed:N")?;
    match kind {
        "const" => value.parse().map(FreeSymbols::Constant).map_err(|e| format!("bad symbol: {e}")),
        "seed" => value.parse().map(FreeSymbols::Seeded).map_err(|e| format!("bad seed: {e}")),
        _ => Err(format!("unknown free-symbol mode '{kind}'")),
    }
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: u64 = lo.parse().map_err(|e| format!("{e}"))?;
    let hi: u64 = hi.parse().map_err(|e| format!("{e}"))?;
    if lo == 0 || hi < lo {
        return Err(format!("need 1 ≤ lo ≤ hi, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn parse_depths(s: &str) -> Result<(u64, u64, u64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts[..] else { return Err("expected start:end:step".into()) };
    let nums = [a, b, c].map(|t| t.parse::<u64>());
    match nums {
        [Ok(a), Ok(b), Ok(c)] if c > 0 && a <= b => Ok((a, b, c)),
        _ => Err(format!("'{s}' is not start:end:step with step > 0 and start ≤ end")),
    }
}

/// Command failures, each mapped to its own exit code.
enum Failure {
    Lib(Error),
    Io(String),
    /// Verification ran and found mismatches.
    Mismatch,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Input => 3,
        ErrorKind::Capacity => 4,
        ErrorKind::Guard => 5,
        ErrorKind::Search => 6,
        ErrorKind::Estimation => 7,
    }
}

fn kind_name(kind: ErrorKind) -> &'static str {
    match kind {
        ErrorKind::Input => "input",
        ErrorKind::Capacity => "capacity",
        ErrorKind::Guard => "guard",
        ErrorKind::Search => "search",
        ErrorKind::Estimation => "estimation",
    }
}

type Out = BufWriter<io::StdoutLock<'static>>;

fn emit<T: Serialize>(out: &mut Out, value: &T) -> Result<(), Failure> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn effective_cap(flag: u64) -> Result<u64, Failure> {
    let cap = match std::env::var(CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("{CAP_ENV}='{v}' is not an integer")))?,
        Err(_) => flag,
    };
    if cap < MIN_CAP {
        return Err(Error::Invalid(format!("materialization cap must be ≥ {MIN_CAP}, got {cap}")).into());
    }
    Ok(cap)
}

fn read_text(path: &Path) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
    }
}

fn load_word(path: Option<&Path>, input: Option<&str>, m: u32) -> Result<Word, Failure> {
    let text = match (path, input) {
        (Some(p), _) => read_text(p)?,
        (None, Some(s)) => s.to_owned(),
        (None, None) => return Err(Error::Invalid("give --word or --input".into()).into()),
    };
    let digits: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    Ok(Word::parse(&digits, Alphabet::new(m)?)?)
}

fn load_plan(path: &Path) -> Result<InsertionPlan, Failure> {
    let plan: InsertionPlan = serde_json::from_str(&read_text(path)?)
        .map_err(|e| Error::InvalidPlan(format!("{}: {e}", path.display())))?;
    plan.validate()?;
    Ok(plan)
}

fn target(args: &TargetArgs) -> Result<ProfileTarget, Failure> {
    let phi = parse_phi(&args.phi)?;
    Ok(ProfileTarget::new(phi, args.alpha, args.beta, args.estimate_horizon)?)
}

fn options(p: u32, m: u32, caps: &CapArgs) -> Result<PlanOptions, Failure> {
    Ok(PlanOptions {
        p,
        alphabet: Alphabet::new(m)?,
        caps: PlanCaps { max_digits: caps.max_digits, search_evals: caps.search_evals },
    })
}

fn classify(args: TargetArgs, out: &mut Out) -> Result<(), Failure> {
    let t = target(&args)?;
    let c = t.classify();
    eprintln!(
        "dimension {} (γ = {}, δ = {}, case {})",
        c.dimension,
        c.gamma,
        c.delta,
        c.case.map_or("-".to_string(), |k| k.to_string())
    );
    emit(out, &json!({ "phi": t.phi.to_string(), "alpha": t.alpha, "beta": t.beta, "classification": c }))
}

fn plan(args: PlanArgs, out: &mut Out) -> Result<(), Failure> {
    let t = target(&args.target)?;
    let plan = plan_full_dimension(&t, args.horizon, &options(args.p, args.m, &args.caps)?)?;
    eprintln!("case {} plan with {} terms", plan.case_tag, plan.len());
    if let Some(why) = &plan.truncated {
        eprintln!("stopped early: {why}");
    }
    match args.out {
        Some(path) => {
            fs::write(&path, serde_json::to_string(&plan)? + "\n")?;
            emit(out, &json!({ "written": path, "terms": plan.len(), "truncated": plan.truncated }))
        }
        None => emit(out, &plan),
    }
}

fn build(args: BuildArgs, out: &mut Out) -> Result<(), Failure> {
    let cap = effective_cap(args.cap)?;
    let plan = load_plan(&args.plan)?;
    let seq = apply_insertions(Base::Fp { p: plan.p, free: args.free }, &plan)?.with_cap(cap);
    let word = seq.prefix(args.len)?;
    eprintln!("{} symbols, {} insertions", word.len(), seq.events().len());
    match args.out {
        Some(path) => {
            fs::write(&path, format!("{word}\n"))?;
            emit(out, &json!({ "written": path, "len": word.len() }))
        }
        None => {
            writeln!(out, "{word}")?;
            Ok(())
        }
    }
}

fn return_times(args: ReturnTimesArgs, out: &mut Out) -> Result<(), Failure> {
    let w = load_word(args.word.word.as_deref(), args.word.input.as_deref(), args.word.m)?;
    let all = match (args.prime, args.oracle) {
        (true, _) => return_times_prime_all(&w),
        (false, OracleArg::Fast) => return_times_all(&w),
        (false, OracleArg::Naive) => {
            (1..=w.len()).map(|n| return_time_naive(&w, n)).collect::<Result<Vec<_>, _>>()?
        }
    };
    let exact = all.iter().filter(|r| r.is_exact()).count();
    for (k, r) in all.iter().enumerate() {
        emit(out, &json!({ "n": k + 1, "R": r }))?;
    }
    eprintln!("{} lengths, {exact} settled exactly", all.len());
    Ok(())
}

fn rates(args: RatesArgs, out: &mut Out) -> Result<(), Failure> {
    let phi: PhiSpec = parse_phi(&args.phi)?;
    let traj = match &args.plan {
        Some(path) => {
            let plan = load_plan(path)?;
            let sampling = args.range.map_or(PlanSampling::Breakpoints, |(lo, hi)| PlanSampling::Range(lo..=hi));
            RateTrajectory::from_plan(&plan, &phi, sampling)?
        }
        None => {
            let w = load_word(args.word.as_deref(), args.input.as_deref(), args.m)?;
            let (lo, hi) = args.range.unwrap_or((1, w.len() as u64));
            RateTrajectory::from_word(&w, &phi, lo..=hi)?
        }
    };
    for e in &traj.entries {
        emit(out, e)?;
    }
    let est = running_extremes(&traj, args.tail)?;
    eprintln!(
        "estimates over the last {} entries: liminf ≈ {:.6}, limsup ≈ {:.6}",
        est.window, est.alpha_hat, est.beta_hat
    );
    emit(out, &json!({ "estimate": est }))
}

fn witnesses(args: WitnessArgs, out: &mut Out) -> Result<(), Failure> {
    let w = load_word(args.word.word.as_deref(), args.word.input.as_deref(), args.word.m)?;
    let found = close_return_witnesses(&w, args.alpha, args.eps)?;
    for c in &found {
        emit(out, c)?;
    }
    let failed = found.iter().filter(|c| !c.rechecked).count();
    eprintln!("{} witnesses, {failed} failed the distance recheck", found.len());
    Ok(())
}

fn dim(args: DimArgs, out: &mut Out) -> Result<(), Failure> {
    if args.fp <= 2 {
        return Err(Error::Invalid(format!("F_p needs p > 2, got {}", args.fp)).into());
    }
    let (a, b, s) = args.depths;
    let counts = fp_log_counts(args.fp, args.m, (a..=b).step_by(s as usize));
    let fit = box_dimension(&counts, args.m)?;
    let expected = f64::from(args.fp - 2) / f64::from(args.fp);
    eprintln!("box dimension ≈ {:.6} over {} depths (exact {expected:.6})", fit.estimate, fit.depths);
    emit(out, &json!({ "p": args.fp, "m": args.m, "fit": fit, "expected": expected }))
}

fn within(estimate: f64, target: ExtReal, tol: f64) -> Option<bool> {
    target.finite().map(|t| (estimate - t).abs() <= tol * t.abs().max(1.0))
}

fn verify(args: VerifyArgs, out: &mut Out) -> Result<(), Failure> {
    let cap = effective_cap(args.cap)?;
    let t = target(&args.target)?;
    let plan = plan_full_dimension(&t, args.horizon, &options(args.p, args.m, &args.caps)?)?;
    let report = verify_plan(&plan, args.free, cap, args.oracle.into())?;
    let estimate = RateTrajectory::from_plan(&plan, &t.phi, PlanSampling::Breakpoints)
        .and_then(|traj| running_extremes(&traj, args.tail))
        .ok();
    let rates = estimate.map(|e| {
        json!({
            "estimate": e,
            "alpha_ok": within(e.alpha_hat, t.alpha, args.rate_tol),
            "beta_ok": within(e.beta_hat, t.beta, args.rate_tol),
        })
    });
    let status = if !report.passed() {
        "FAIL"
    } else if report.checked == 0 {
        "UNCHECKED"
    } else {
        "PASS"
    };
    let needed = report.skipped.first().map(|b| (&b.ell + &b.hi).to_string());
    emit(
        out,
        &json!({
            "status": status,
            "case": plan.case_tag,
            "terms": plan.len(),
            "truncated": plan.truncated,
            "cap": cap,
            "report": report,
            "rates": rates,
        }),
    )?;
    eprintln!(
        "{status}: {} lengths checked in {} brackets, {} mismatches, {} brackets beyond the cap",
        report.checked,
        report.brackets.len(),
        report.mismatches.len(),
        report.skipped.len()
    );
    for m in report.mismatches.iter().take(20) {
        eprintln!("  n = {}: predicted {}, observed {:?}", m.n, m.predicted, m.observed);
    }
    match status {
        "PASS" => Ok(()),
        "FAIL" => Err(Failure::Mismatch),
        _ => Err(match needed {
            Some(requested) => Error::Capacity { requested, cap },
            None => Error::InvalidPlan("no certified bracket to check".into()),
        }
        .into()),
    }
}

fn run(cli: Cli, out: &mut Out) -> Result<(), Failure> {
    match cli.command {
        Command::Classify(a) => classify(a, out),
        Command::Plan(a) => plan(a, out),
        Command::Build(a) => build(a, out),
        Command::ReturnTimes(a) => return_times(a, out),
        Command::Rates(a) => rates(a, out),
        Command::Witnesses(a) => witnesses(a, out),
        Command::Dim(a) => dim(a, out),
        Command::Verify(a) => verify(a, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = BufWriter::new(io::stdout().lock());
    let result = run(cli, &mut out);
    let code = match result {
        Ok(()) => 0,
        Err(failure) => {
            let (code, kind, message) = match &failure {
                Failure::Lib(e) => (exit_code(e.kind()), kind_name(e.kind()), e.to_string()),
                Failure::Io(msg) => (exit_code(ErrorKind::Input), "io", msg.clone()),
                Failure::Mismatch => (1, "mismatch", "return times differ from the plan".into()),
            };
            if !matches!(failure, Failure::Mismatch) {
                let _ = emit(&mut out, &json!({ "error": { "kind": kind, "message": message } }));
                eprintln!("error: {message}");
            }
            code
        }
    };
    let _ = out.flush();
    ExitCode::from(code)
}
