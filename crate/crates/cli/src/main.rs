//! `odocoe`: decide orbit equivalence and conjugacy of odometer products,
//! emit and re-check certificates.
//!
//! Exit status: 0 positive / verified, 1 negative / failed, 2 usage or input error.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use odocoe::cert::{CertError, Certificate};
use odocoe::cocycle::{
    verify_coe_tables, verify_conj_tables, CocycleError, MaterializedCoe, MaterializedConj, VerificationReport,
    VerifyConfig,
};
use odocoe::decide::{
    coe_decide, conj_decide, eig_group, eig_group_oracle, eig_truncation, free_group_counterexample_check,
    k_invariant, CoeVerdict, DecideError,
};
use odocoe::dynamics::DynamicsError;
use odocoe::supernatural::parse_list;
use odocoe::witness::{build_coe_witness, build_conj_witness, WitnessError};
use odocoe::Supernatural;

mod selftest;

#[derive(Parser)]
#[command(name = "odocoe", version, about = "Orbit equivalence and conjugacy of odometer products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Budget {
    /// Truncation level of the exhaustive checks
    #[arg(long, default_value_t = 4)]
    level: u32,
    /// Radius of the group-element box
    #[arg(long, default_value_t = 6)]
    radius: u32,
}

impl Budget {
    fn config(self) -> VerifyConfig {
        VerifyConfig::new(self.level, self.radius)
    }
}

#[derive(Args)]
struct Output {
    /// Write the certificate to this file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the machine-readable form instead of the summary
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum WitnessKind {
    Coe,
    Conj,
}

#[derive(Subcommand)]
enum Command {
    /// Decide orbit equivalence of the products for Ms and Ns (comma-separated supernaturals)
    Coe {
        ms: String,
        ns: String,
        /// Build, check and embed an explicit orbit equivalence
        #[arg(long)]
        witness: bool,
        #[command(flatten)]
        budget: Budget,
        #[command(flatten)]
        output: Output,
    },
    /// Decide conjugacy of the products for Ms and Ns
    Conj {
        ms: String,
        ns: String,
        /// Build, check and embed an explicit conjugacy
        #[arg(long)]
        witness: bool,
        #[command(flatten)]
        budget: Budget,
        #[command(flatten)]
        output: Output,
    },
    /// K-theoretic invariant of the product for Ms
    Kinv {
        ms: String,
        #[arg(long)]
        json: bool,
    },
    /// Eigenvalue group of the k-th power of the odometer for M
    Eig {
        m: String,
        #[arg(allow_hyphen_values = true)]
        k: i64,
        /// Also enumerate the eigenvalues at this level and compare
        #[arg(long)]
        level: Option<u32>,
        #[arg(long)]
        json: bool,
    },
    /// Non-conjugacy analysis of the free-group pair built from primes p, q and n
    Counterexample {
        p: u64,
        q: u64,
        n: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Build an explicit witness and emit it as a certificate
    Witness {
        #[arg(value_enum)]
        kind: WitnessKind,
        ms: String,
        ns: String,
        #[command(flatten)]
        budget: Budget,
        #[command(flatten)]
        output: Output,
    },
    /// Re-check a certificate file
    Verify {
        file: PathBuf,
        /// Level of the table checks (default: the embedded one)
        #[arg(long)]
        level: Option<u32>,
        /// Radius of the table checks (default: the embedded one)
        #[arg(long)]
        radius: Option<u32>,
        #[arg(long)]
        json: bool,
    },
    /// Randomized cross-checks of the decision procedures and witness builders
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long)]
        json: bool,
    },
}

/// What a command prints and how it exits.
struct Outcome {
    positive: bool,
    text: String,
}

enum Failure {
    Usage(String),
    Failed(String),
}

impl From<DecideError> for Failure {
    fn from(e: DecideError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<CertError> for Failure {
    fn from(e: CertError) -> Self {
        match e {
            CertError::Hash { .. } => Failure::Failed(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

impl From<CocycleError> for Failure {
    fn from(e: CocycleError) -> Self {
        match e {
            CocycleError::Dynamics(DynamicsError::Guard { .. }) => {
                Failure::Usage(format!("{e}; choose a smaller --level"))
            }
            e => Failure::Failed(e.to_string()),
        }
    }
}

impl From<WitnessError> for Failure {
    fn from(e: WitnessError) -> Self {
        match e {
            WitnessError::Cocycle(e) => e.into(),
            e => Failure::Failed(e.to_string()),
        }
    }
}

fn parse(text: &str) -> Result<Vec<Supernatural>, Failure> {
    parse_list(text).map_err(|e| Failure::Usage(e.to_string()))
}

fn show(xs: &[Supernatural]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn emit(cert: &Certificate, output: &Output, summary: String, positive: bool) -> Result<Outcome, Failure> {
    let json = cert.to_json();
    if let Some(path) = &output.out {
        fs::write(path, &json).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    let text = if output.json { json } else { summary };
    Ok(Outcome { positive, text })
}

fn report_block(text: &mut String, report: &VerificationReport) {
    for line in report.to_string().lines() {
        let _ = writeln!(text, "  {line}");
    }
}

fn cmd_coe(ms: &str, ns: &str, witness: bool, budget: Budget, output: &Output) -> Result<Outcome, Failure> {
    let (ms, ns) = (parse(ms)?, parse(ns)?);
    let d = coe_decide(&ms, &ns)?;
    let mut text = format!("Ms = ({})\nNs = ({})\n", show(&ms), show(&ns));
    match &d.verdict {
        CoeVerdict::Equivalent { sigma, pairs } => {
            text.push_str("orbit equivalent\n");
            for (i, (j, pair)) in sigma.iter().zip(pairs).enumerate() {
                let _ = writeln!(text, "  {} * {} = {} * {}", pair.m, ms[i], pair.n, ns[*j]);
            }
        }
        CoeVerdict::NotEquivalent { obstruction } => {
            let _ = writeln!(text, "not orbit equivalent: {obstruction}");
        }
    }
    if !(witness && d.equivalent()) {
        let cert = Certificate::coe(&ms, &ns, None)?;
        return emit(&cert, output, text, d.equivalent());
    }
    let cfg = budget.config();
    let w = build_coe_witness(&d)?;
    let m = MaterializedCoe::from_witness(&w, cfg)?;
    let report = verify_coe_tables(&m, cfg)?;
    text.push_str("witness:\n");
    for note in &w.notes {
        let _ = writeln!(text, "  {note}");
    }
    report_block(&mut text, &report);
    let cert = Certificate::coe(&ms, &ns, Some((&m, cfg)))?;
    emit(&cert, output, text, report.passed())
}

fn cmd_conj(ms: &str, ns: &str, witness: bool, budget: Budget, output: &Output) -> Result<Outcome, Failure> {
    let (ms, ns) = (parse(ms)?, parse(ns)?);
    let d = conj_decide(&ms, &ns)?;
    let mut text = format!("Ms = ({})\nNs = ({})\n", show(&ms), show(&ns));
    if d.conjugate {
        text.push_str("conjugate\n");
    } else {
        text.push_str("not conjugate\n");
    }
    for b in &d.blocks {
        let _ = writeln!(
            text,
            "  class {:?}: L = {}, left {:?} -> Z/{:?}, right {:?} -> Z/{:?}",
            b.key, b.l, b.left, b.m, b.right, b.n
        );
        if let Some((s, t)) = &b.conjugator {
            let _ = writeln!(text, "    S = {s}, T = {t}");
        }
    }
    if let Some(f) = &d.failure {
        let _ = writeln!(text, "  failing: {f}");
    }
    if !(witness && d.conjugate) {
        let cert = Certificate::conj(&ms, &ns, None)?;
        return emit(&cert, output, text, d.conjugate);
    }
    let cfg = budget.config();
    let w = build_conj_witness(&d)?;
    let m = MaterializedConj::from_witness(&w, cfg)?;
    let report = verify_conj_tables(&m, cfg)?;
    let _ = writeln!(text, "witness:\n  rho = {}", m.rho);
    report_block(&mut text, &report);
    let cert = Certificate::conj(&ms, &ns, Some((&m, cfg)))?;
    emit(&cert, output, text, report.passed())
}

fn cmd_witness(kind: WitnessKind, ms: &str, ns: &str, budget: Budget, output: &Output) -> Result<Outcome, Failure> {
    let (msl, nsl) = (parse(ms)?, parse(ns)?);
    let positive = match kind {
        WitnessKind::Coe => coe_decide(&msl, &nsl)?.equivalent(),
        WitnessKind::Conj => conj_decide(&msl, &nsl)?.conjugate,
    };
    if !positive {
        return Err(Failure::Failed("no witness: the decision is negative".into()));
    }
    match kind {
        WitnessKind::Coe => cmd_coe(ms, ns, true, budget, output),
        WitnessKind::Conj => cmd_conj(ms, ns, true, budget, output),
    }
}

fn cmd_kinv(ms: &str, json: bool) -> Result<Outcome, Failure> {
    let ms = parse(ms)?;
    let k = k_invariant(&ms)?;
    if json {
        let text = serde_json::to_string_pretty(&k).expect("serializes");
        return Ok(Outcome { positive: true, text });
    }
    let mut text = format!("rank {}, {} summands, total {}\n", k.rank, k.entries.len(), k.total);
    for e in &k.entries {
        let subset: Vec<usize> = e.subset.iter().map(|i| i + 1).collect();
        let _ = writeln!(text, "  I = {subset:?}: Z[1/{}]", e.product);
    }
    Ok(Outcome { positive: true, text })
}

fn cmd_eig(m: &str, k: i64, level: Option<u32>, json: bool) -> Result<Outcome, Failure> {
    let m: Supernatural = m.parse().map_err(|e: odocoe::supernatural::SupernaturalError| Failure::Usage(e.to_string()))?;
    let t = eig_group(&m, k)?;
    let mut value = serde_json::json!({ "m": m.to_string(), "k": k, "group": t.supernatural().to_string() });
    let mut text = format!("M = {m}, k = {k}: E = {t}\n");
    let mut agree = true;
    if let Some(level) = level {
        let oracle = eig_group_oracle(&m, k, level)?;
        let truncated = eig_truncation(&m, k, level)?;
        agree = oracle == truncated;
        let list: Vec<String> = oracle.iter().map(ToString::to_string).collect();
        let _ = writeln!(
            text,
            "level {level}: {} eigenvalues {{{}}}, {}",
            oracle.len(),
            list.join(", "),
            if agree { "agrees with the truncation" } else { "DISAGREES with the truncation" }
        );
        value["level"] = level.into();
        value["eigenvalues"] = list.into();
        value["agrees"] = agree.into();
    }
    let text = if json { serde_json::to_string_pretty(&value).expect("serializes") } else { text };
    Ok(Outcome { positive: agree, text })
}

fn cmd_counterexample(p: u64, q: u64, n: u64, output: &Output) -> Result<Outcome, Failure> {
    let r = free_group_counterexample_check(p, q, n)?;
    let mut text = format!("Ms = ({}), Ns = ({})\n", show(&r.ms), show(&r.ns));
    let _ = writeln!(text, "orbit equivalence: CITED ({})", r.coe_cited);
    let _ = writeln!(text, "assumed lemma: {}", r.assumed_lemma);
    let _ = writeln!(text, "E(gamma_a) = {}", r.gamma_eigenvalues);
    for c in &r.comparisons {
        let _ = writeln!(text, "  {} [{}]", c.claim, if c.holds { "certified" } else { "FAILED" });
    }
    let _ = writeln!(text, "odometer shadow orbit equivalent: {}", r.shadow_coe);
    let verdict = if r.certified() { "non-conjugacy CERTIFIED" } else { "non-conjugacy NOT certified" };
    let _ = writeln!(text, "{verdict}");
    let cert = Certificate::counterexample(p, q, n)?;
    emit(&cert, output, text, r.certified())
}

fn cmd_verify(file: &PathBuf, level: Option<u32>, radius: Option<u32>, json: bool) -> Result<Outcome, Failure> {
    let body = fs::read_to_string(file).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", file.display())))?;
    let cert: Certificate = body.parse()?;
    let cfg = match (cert.embedded_config(), level, radius) {
        (Some(c), l, r) => Some(VerifyConfig::new(l.unwrap_or(c.level), r.unwrap_or(c.radius))),
        (None, Some(l), r) => Some(VerifyConfig::new(l, r.unwrap_or(6))),
        (None, None, Some(r)) => Some(VerifyConfig::new(4, r)),
        (None, None, None) => None,
    };
    let check = cert.check(cfg).map_err(|e| match e {
        CertError::Cocycle(CocycleError::Incompatible(msg)) => Failure::Usage(msg),
        e => e.into(),
    })?;
    if json {
        let text = serde_json::to_string_pretty(&check).expect("serializes");
        return Ok(Outcome { positive: check.passed(), text });
    }
    let mut text = format!("{} certificate, hash {}\n", cert.kind, cert.hash);
    let _ = writeln!(text, "decision reproduced: {}", check.decision_reproduced);
    if let Some(report) = &check.report {
        report_block(&mut text, report);
    }
    text.push_str(if check.passed() { "certificate verified\n" } else { "certificate FAILED\n" });
    Ok(Outcome { positive: check.passed(), text })
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    match cli.command {
        Command::Coe { ms, ns, witness, budget, output } => cmd_coe(&ms, &ns, witness, budget, &output),
        Command::Conj { ms, ns, witness, budget, output } => cmd_conj(&ms, &ns, witness, budget, &output),
        Command::Kinv { ms, json } => cmd_kinv(&ms, json),
        Command::Eig { m, k, level, json } => cmd_eig(&m, k, level, json),
        Command::Counterexample { p, q, n, output } => cmd_counterexample(p, q, n, &output),
        Command::Witness { kind, ms, ns, budget, output } => cmd_witness(kind, &ms, &ns, budget, &output),
        Command::Verify { file, level, radius, json } => cmd_verify(&file, level, radius, json),
        Command::Selftest { seed, count, json } => selftest::run(seed, count, json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{}", out.text);
            if !out.text.ends_with('\n') {
                println!();
            }
            ExitCode::from(if out.positive { 0 } else { 1 })
        }
        Err(Failure::Failed(msg)) => {
            eprintln!("odocoe: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("odocoe: {msg}");
            ExitCode::from(2)
        }
    }
}
