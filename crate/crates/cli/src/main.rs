mod canonical;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use seqprice::exante::{solve_exante_with, ColumnMode, ExAnteConfig, ExAnteSolution};
use seqprice::experiments::{bench, BenchConfig};
use seqprice::instances::monotone_lb::{gen_monotone_lb, monotone_lb_sizes, DEFAULT_EPS as MONO_EPS};
use seqprice::instances::random::{gen_random_gs, gen_random_subadditive, RandomFamily};
use seqprice::instances::rrs_lb::{gen_rrs_lb, DEFAULT_EPS as RRS_EPS};
use seqprice::instances::xos_lb::{gen_xos_lb, XosLbConfig, DEFAULT_EPS as XOS_EPS};
use seqprice::mechanisms::{
    monte_carlo, GsConfig, GsMechanism, McReport, Mechanism, MonotoneM2, MonotoneN, OcrsSequential,
    SubadditiveMechanism,
};
use seqprice::pricing::PriceRepr;
use seqprice::rrs::RrsScheme;
use seqprice::suites::{self, SuiteReport};
use seqprice::{check_class, BuyerDistribution, Instance, RandomPricing, ValuationClass};

use canonical::to_canonical;

#[derive(Parser)]
#[command(name = "seqprice", version, about = "Sequential item pricing experiments")]
struct Cli {
    /// Report errors on standard error as JSON objects.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Solve the ex ante relaxation of an instance.
    Solve(SolveArgs),
    /// Simulate a mechanism.
    #[command(after_help = "CSV columns (--csv): trial,revenue")]
    Run(RunArgs),
    /// Run verification suites; exits 1 if any check fails.
    Verify(VerifyArgs),
    /// Ratio of ex ante revenue to the subadditive mechanism's revenue.
    #[command(after_help = "CSV columns: m,n,instance,family,ea_rev,revenue,stderr,ratio,\
skip_rate,hull_violations,verifier_checks,verifier_failures")]
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    MonotoneLb,
    XosLb,
    RrsLb,
    Coverage,
    BudgetedAdditive,
    XosRandom,
    RandomGs,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    family: Family,
    /// Item count (monotone-lb, rrs-lb and the random families).
    #[arg(long)]
    m: Option<usize>,
    /// Buyer count; monotone-lb defaults to the number of active buyers.
    #[arg(long)]
    n: Option<usize>,
    /// Slack of the lower-bound instances.
    #[arg(long)]
    eps: Option<f64>,
    /// Parameter t of xos-lb (m = t^4 * 2^t).
    #[arg(long, default_value_t = 2)]
    t: usize,
    /// Support size per buyer for the random families.
    #[arg(long, default_value_t = 2)]
    support: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Columns {
    Auto,
    Product,
    Reference,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Extra candidate prices, comma separated.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Columns::Auto)]
    columns: Columns,
    #[arg(long, default_value_t = seqprice::exante::DEFAULT_MAX_COLUMNS)]
    max_columns: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismKind {
    OcrsSeq,
    Subadd,
    Gs,
    MonoN,
    MonoM2,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Ex ante solution from `solve`; solved with default settings if absent.
    #[arg(long)]
    exante: Option<PathBuf>,
    #[arg(long, value_enum)]
    mechanism: MechanismKind,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-trial revenues as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Rrs,
    Ocrs,
    Hull,
    Instances,
    Demand,
    Mechanisms,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Smaller batches and fewer trials.
    #[arg(long)]
    quick: bool,
    /// Write the reports as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Restrict to one random family; all three by default.
    #[arg(long, value_enum)]
    family: Option<Family>,
    #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    buyers: usize,
    #[arg(long, default_value_t = 2)]
    support: usize,
    #[arg(long, default_value_t = 3)]
    instances: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure of a command: bad input (exit 2) or a failed computation or
/// check (exit 1).
#[derive(Debug)]
enum Failure {
    Usage(String),
    Check(String),
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure::Usage(e.to_string())
    }
    fn check(e: impl std::fmt::Display) -> Self {
        Failure::Check(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

/// An instance plus an optional reference pricing per buyer.
#[derive(Serialize, Deserialize)]
struct InstanceFile {
    m: usize,
    buyers: Vec<BuyerEntry>,
}

#[derive(Serialize, Deserialize)]
struct BuyerEntry {
    #[serde(flatten)]
    dist: BuyerDistribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference: Option<RandomPricing>,
}

impl InstanceFile {
    fn new(instance: Instance, reference: Option<Vec<RandomPricing>>) -> Self {
        let mut refs = reference.map(|r| r.into_iter().map(Some).collect::<Vec<_>>());
        InstanceFile {
            m: instance.m,
            buyers: instance
                .buyers
                .into_iter()
                .enumerate()
                .map(|(i, dist)| BuyerEntry {
                    dist,
                    reference: refs.as_mut().and_then(|r| r[i].take()),
                })
                .collect(),
        }
    }

    fn split(self) -> seqprice::Result<(Instance, Option<Vec<RandomPricing>>)> {
        let mut refs = Vec::new();
        let mut buyers = Vec::new();
        for b in self.buyers {
            refs.push(b.reference);
            buyers.push(b.dist);
        }
        let instance = Instance::new(self.m, buyers)?;
        let reference = if refs.iter().all(Option::is_some) && !refs.is_empty() {
            Some(refs.into_iter().map(Option::unwrap).collect::<Vec<_>>())
        } else {
            None
        };
        if let Some(r) = &reference {
            for p in r {
                p.validate()?;
                if p.m() != instance.m {
                    return Err(seqprice::Error::DimensionMismatch {
                        expected: instance.m,
                        found: p.m(),
                    });
                }
            }
        }
        Ok((instance, reference))
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    exante: &'a ExAnteSolution,
    mechanism: &'static str,
    trials: usize,
    seed: u64,
    mean_revenue: f64,
    stderr: f64,
    /// `exante.value / mean_revenue`; "inf" when nothing sold.
    ratio: PriceRepr,
    /// `availability[i][j]`: fraction of trials with item `j` unsold when
    /// buyer `i` arrived.
    availability: &'a [Vec<f64>],
    buyer_mean: &'a [f64],
    buyer_stderr: &'a [f64],
    max_revenue: f64,
    skip_rate: f64,
    hull_violations: usize,
}

fn write_output(path: Option<&Path>, text: &str) -> CmdResult {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn read_instance(path: &Path) -> Result<(Instance, Option<Vec<RandomPricing>>), Failure> {
    let file: InstanceFile = read_json(path)?;
    file.split().map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn canonical<T: Serialize>(value: &T) -> Result<String, Failure> {
    to_canonical(value).map_err(Failure::check)
}

fn random_family(f: Family) -> Option<RandomFamily> {
    match f {
        Family::Coverage => Some(RandomFamily::Coverage),
        Family::BudgetedAdditive => Some(RandomFamily::BudgetedAdditive),
        Family::XosRandom => Some(RandomFamily::XosRandom),
        _ => None,
    }
}

fn cmd_gen(a: &GenArgs) -> CmdResult {
    let need_m = || a.m.ok_or_else(|| Failure::usage("--m is required for this family"));
    let file = match a.family {
        Family::MonotoneLb => {
            let m = need_m()?;
            let eps = a.eps.unwrap_or(MONO_EPS);
            let n = match a.n {
                Some(n) => n,
                None => monotone_lb_sizes(m, usize::MAX).map_err(Failure::usage)?.1,
            };
            let g = gen_monotone_lb(m, n, eps).map_err(Failure::usage)?;
            InstanceFile::new(g.instance, Some(g.reference))
        }
        Family::XosLb => {
            let g = gen_xos_lb(&XosLbConfig::new(a.t, a.eps.unwrap_or(XOS_EPS)), a.seed)
                .map_err(Failure::usage)?;
            InstanceFile::new(g.instance, Some(g.reference))
        }
        Family::RrsLb => {
            let lb = gen_rrs_lb(need_m()?, a.eps.unwrap_or(RRS_EPS)).map_err(Failure::usage)?;
            let d = lb.distribution().map_err(Failure::usage)?;
            let instance = Instance::new(lb.m, vec![d]).map_err(Failure::check)?;
            InstanceFile::new(instance, Some(vec![RandomPricing::point(lb.pricing())]))
        }
        Family::RandomGs => {
            let inst = gen_random_gs(need_m()?, a.n.unwrap_or(2), a.support, a.seed).map_err(Failure::usage)?;
            InstanceFile::new(inst, None)
        }
        f => {
            let family = random_family(f).expect("remaining families are random");
            let inst = gen_random_subadditive(need_m()?, a.n.unwrap_or(2), a.support, family, a.seed)
                .map_err(Failure::usage)?;
            InstanceFile::new(inst, None)
        }
    };
    write_output(a.out.as_deref(), &canonical(&file)?)
}

fn solve(
    instance: &Instance,
    reference: Option<&[RandomPricing]>,
    grid: &[f64],
    columns: Columns,
    max_columns: usize,
) -> Result<ExAnteSolution, Failure> {
    let mode = match columns {
        Columns::Auto => ColumnMode::Auto,
        Columns::Product => ColumnMode::Product,
        Columns::Reference => ColumnMode::Reference,
    };
    if mode == ColumnMode::Reference && reference.is_none() {
        return Err(Failure::usage("--columns reference needs reference pricings in the instance"));
    }
    let config = ExAnteConfig {
        max_columns,
        ..ExAnteConfig::default()
    };
    let sol = solve_exante_with(&instance.buyers, grid, reference, mode, &config).map_err(Failure::check)?;
    sol.check_invariants(&instance.buyers).map_err(Failure::check)?;
    Ok(sol)
}

fn cmd_solve(a: &SolveArgs) -> CmdResult {
    if let Some(x) = a.grid.iter().find(|x| !(**x >= 0.0)) {
        return Err(Failure::usage(format!("grid price {x}")));
    }
    let (instance, reference) = read_instance(&a.instance)?;
    let sol = solve(&instance, reference.as_deref(), &a.grid, a.columns, a.max_columns)?;
    write_output(a.out.as_deref(), &canonical(&sol)?)
}

/// Scheme for buyer `d`: the identity when every valuation is gross
/// substitutes, scaling otherwise.
fn scheme_for(d: &BuyerDistribution) -> RrsScheme {
    let gs = d.iter().all(|(_, v)| {
        check_class(v, ValuationClass::GrossSubstitutes).is_ok_and(|r| r.holds)
    });
    if gs {
        RrsScheme::GrossSubstitutes
    } else {
        RrsScheme::Subadditive { alpha: None }
    }
}

fn build_mechanism(
    kind: MechanismKind,
    instance: Instance,
    sol: ExAnteSolution,
    seed: u64,
) -> seqprice::Result<Box<dyn Mechanism>> {
    Ok(match kind {
        MechanismKind::OcrsSeq => {
            let schemes = instance.buyers.iter().map(scheme_for).collect();
            Box::new(OcrsSequential::new(instance, sol, schemes)?)
        }
        MechanismKind::Subadd => Box::new(SubadditiveMechanism::new(instance, sol)?),
        MechanismKind::Gs => Box::new(GsMechanism::new(
            instance,
            sol,
            GsConfig {
                seed,
                ..GsConfig::default()
            },
        )?),
        MechanismKind::MonoN => Box::new(MonotoneN::new(instance, sol)?),
        MechanismKind::MonoM2 => Box::new(MonotoneM2::new(instance, sol)?),
    })
}

fn cmd_run(a: &RunArgs) -> CmdResult {
    if a.trials == 0 {
        return Err(Failure::usage("--trials must be positive"));
    }
    let (instance, reference) = read_instance(&a.instance)?;
    let sol = match &a.exante {
        Some(p) => {
            let sol: ExAnteSolution = read_json(p)?;
            sol.check_invariants(&instance.buyers)
                .map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
            sol
        }
        None => solve(
            &instance,
            reference.as_deref(),
            &[],
            Columns::Auto,
            seqprice::exante::DEFAULT_MAX_COLUMNS,
        )?,
    };
    let mech = build_mechanism(a.mechanism, instance, sol.clone(), a.seed).map_err(Failure::check)?;
    let mc: McReport = monte_carlo(mech.as_ref(), a.trials, a.seed, a.csv.is_some()).map_err(Failure::check)?;
    let report = RunReport {
        exante: &sol,
        mechanism: mech.name(),
        trials: mc.trials,
        seed: a.seed,
        mean_revenue: mc.mean,
        stderr: mc.stderr,
        ratio: PriceRepr(if mc.mean > 0.0 { sol.value / mc.mean } else { f64::INFINITY }),
        availability: &mc.availability,
        buyer_mean: &mc.buyer_mean,
        buyer_stderr: &mc.buyer_stderr,
        max_revenue: mc.max_revenue,
        skip_rate: mc.skip_rate,
        hull_violations: mc.hull_violations,
    };
    if let (Some(path), Some(revs)) = (&a.csv, &mc.revenues) {
        let mut csv = String::from("trial,revenue\n");
        for (t, r) in revs.iter().enumerate() {
            csv += &format!("{t},{}\n", canonical::format_g(*r, 12));
        }
        write_output(Some(path), &csv)?;
    }
    write_output(a.out.as_deref(), &canonical(&report)?)
}

#[derive(Serialize)]
struct SuiteJson<'a> {
    name: &'a str,
    passed: bool,
    checks: usize,
    failures: &'a [String],
    notes: &'a [String],
    seconds: f64,
}

fn run_suites(suite: Suite, seed: u64, quick: bool) -> Vec<SuiteReport> {
    let scale = |full: usize, small: usize| if quick { small } else { full };
    let mut out = Vec::new();
    let want = |s: Suite| suite == s || suite == Suite::All;
    if want(Suite::Hull) {
        out.push(suites::hull_random(seed, scale(200, 50)));
        out.push(suites::hull_gs_exact(seed ^ 1, scale(100, 25)));
    }
    if want(Suite::Rrs) {
        out.push(suites::rrs_subadditive(seed ^ 2, scale(100, 25)));
    }
    if want(Suite::Ocrs) {
        out.push(suites::gs_rrs_ocrs(seed ^ 3, scale(100, 25)));
        out.push(suites::ocrs_subadditive(seed ^ 4, scale(50, 15)));
    }
    if want(Suite::Demand) {
        out.push(suites::demand_ground_truth(seed ^ 5, scale(1000, 200)));
    }
    if want(Suite::Instances) {
        out.push(suites::xos_lb(seed ^ 6));
        let ells: &[usize] = if quick { &[2, 3] } else { &[2, 3, 5, 7] };
        out.push(suites::monotone_lb(seed ^ 7, ells, scale(10_000, 1000)));
        let ms: &[usize] = if quick { &[10, 17] } else { &[10, 17, 26] };
        out.push(suites::rrs_lb(ms, 25));
    }
    if want(Suite::Mechanisms) {
        out.push(suites::gs_halving(seed ^ 8, scale(20, 4), scale(100_000, 20_000)));
        out.push(suites::availability(seed ^ 9, scale(10_000, 2000)));
    }
    out
}

fn cmd_verify(a: &VerifyArgs, json: bool) -> CmdResult {
    let reports = run_suites(a.suite, a.seed, a.quick);
    let rows: Vec<SuiteJson> = reports
        .iter()
        .map(|r| SuiteJson {
            name: r.name,
            passed: r.passed(),
            checks: r.checks,
            failures: &r.failures,
            notes: &r.notes,
            seconds: r.elapsed.as_secs_f64(),
        })
        .collect();
    if json {
        print!("{}", canonical(&rows)?);
    } else {
        for r in &reports {
            let tag = if r.passed() { "PASS" } else { "FAIL" };
            println!("{tag} {} ({} checks, {:.2}s)", r.name, r.checks, r.elapsed.as_secs_f64());
            for n in &r.notes {
                println!("    {n}");
            }
            for f in r.failures.iter().take(10) {
                println!("    failed: {f}");
            }
        }
    }
    if let Some(p) = &a.out {
        write_output(Some(p), &canonical(&rows)?)?;
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} of {} suites failed", reports.len())));
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> CmdResult {
    let families = match a.family {
        None => BenchConfig::default().families,
        Some(f) => vec![random_family(f).ok_or_else(|| Failure::usage("bench needs a random subadditive family"))?],
    };
    let config = BenchConfig {
        sizes: a.sizes.clone(),
        families,
        buyers: a.buyers,
        support: a.support,
        instances: a.instances,
        trials: a.trials,
        seed: a.seed,
    };
    let rows = bench(&config).map_err(Failure::check)?;
    let g = |x: f64| canonical::format_g(x, 12);
    let mut csv = String::from(
        "m,n,instance,family,ea_rev,revenue,stderr,ratio,skip_rate,hull_violations,verifier_checks,verifier_failures\n",
    );
    let mut failures = 0;
    for r in &rows {
        let family = serde_json::to_value(r.family).map_err(Failure::check)?;
        csv += &format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.m,
            r.n,
            r.instance,
            family.as_str().unwrap_or_default(),
            g(r.ea_rev),
            g(r.revenue),
            g(r.stderr),
            g(r.ratio),
            g(r.skip_rate),
            r.hull_violations,
            r.verifier_checks,
            r.verifier_failures
        );
        failures += r.verifier_failures;
    }
    write_output(a.out.as_deref(), &csv)?;
    if failures > 0 {
        return Err(Failure::Check(format!("{failures} verifier checks failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if std::env::args().any(|a| a == "--json") && e.use_stderr() {
                let msg = serde_json::json!({"error": "usage", "message": e.to_string().trim()});
                eprintln!("{msg}");
            } else {
                let _ = e.print();
            }
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a, cli.json),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (kind, msg, code) = match f {
                Failure::Usage(m) => ("usage", m, 2),
                Failure::Check(m) => ("failure", m, 1),
            };
            if cli.json {
                eprintln!("{}", serde_json::json!({"error": kind, "message": msg}));
            } else {
                eprintln!("error: {msg}");
            }
            ExitCode::from(code)
        }
    }
}
