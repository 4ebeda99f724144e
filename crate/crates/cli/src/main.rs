//! `walktail`: spectra, tail bounds, sample-size plans, exact oracles,
//! Monte Carlo estimates and the verification suite for reversible-chain
//! sample means, from the command line.
//!
//! Exit codes: 0 success, 1 verification counterexample, 2 input error.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;
use walktail::bounds::{
    evaluate_family, plan_all, plan_samples, verify_subgaussian, BoundFamily, BoundQuery,
    SubgaussianProfile,
};
use walktail::chain::{build_chain, InitialDistribution, ReversibleChain};
use walktail::io::{parse_chain_spec, parse_value_list};
use walktail::observable::{
    normalize_function, observable_from_normalized, AffineMap, NormalizationMode,
    ObservableFunction,
};
use walktail::oracle::{
    chernoff_exact, exact_tail_with_mode, mgf, norm_bound_check, operator_norm, TailMode,
};
use walktail::simulate::empirical_tail;
use walktail::spectrum::{spectrum, Spectrum};
use walktail::suite::{run_chain_suite, run_full_suite, SuiteConfig, SuiteReport};

#[derive(Parser)]
#[command(
    name = "walktail",
    version,
    about = "Tail bounds, exact oracles and Monte Carlo for sums sampled along reversible Markov chains",
    after_help = "Thresholds (--gamma) are on the normalized scale of the observable \
                  (centered, and scaled to max-abs 1 unless a subgaussian profile is given); \
                  pass --normalize to apply the normalization and echo the affine map."
)]
struct Cli {
    /// Emit machine-readable JSON instead of text
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary distribution, eigenvalues, alpha and beta of a chain
    Spectrum {
        #[arg(long)]
        chain: PathBuf,
    },
    /// Evaluate tail bounds for one deviation threshold and walk length
    Bound(BoundArgs),
    /// Smallest walk length per family reaching a target failure probability
    Plan(PlanArgs),
    /// Exact reference computations on small chains
    Oracle(OracleArgs),
    /// Seeded Monte Carlo tail estimate with an exact binomial interval
    Simulate(SimulateArgs),
    /// Run the verification suite (built-in grid, or one supplied chain)
    Verify(VerifyArgs),
}

#[derive(Args)]
struct FunctionArgs {
    #[arg(long)]
    chain: PathBuf,
    /// Observable: JSON array or one value per line
    #[arg(long)]
    function: PathBuf,
    /// Center (and in bounded mode rescale) the observable instead of
    /// requiring it pre-normalized; the applied affine map is reported
    #[arg(long)]
    normalize: bool,
    /// Starting distribution: "stationary" or a file of probabilities
    #[arg(long, default_value = "stationary")]
    q: String,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    common: FunctionArgs,
    #[arg(long, allow_negative_numbers = true)]
    gamma: f64,
    #[arg(long)]
    n: u64,
    /// Comma-separated family list (default: every applicable family)
    #[arg(long, value_delimiter = ',')]
    family: Vec<String>,
    /// Bennett slack parameter (default: smallest feasible)
    #[arg(long)]
    t: Option<f64>,
    /// Subgaussian tail prefactor C (enables the subgaussian families)
    #[arg(long = "subgaussian-c")]
    subgaussian_c: Option<f64>,
    /// Subgaussian tail rate K
    #[arg(long = "subgaussian-k")]
    subgaussian_k: Option<f64>,
    /// Widen the subgaussian beta-form validity window to the beta^2
    /// threshold (the estimate turns trivial at its endpoint)
    #[arg(long = "subgaussian-extended-range")]
    subgaussian_extended_range: bool,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    common: FunctionArgs,
    #[arg(long, allow_negative_numbers = true)]
    gamma: f64,
    /// Target failure probability in (0, 1)
    #[arg(long)]
    epsilon: f64,
    #[arg(long, value_delimiter = ',')]
    family: Vec<String>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long = "subgaussian-c")]
    subgaussian_c: Option<f64>,
    #[arg(long = "subgaussian-k")]
    subgaussian_k: Option<f64>,
    #[arg(long = "subgaussian-extended-range")]
    subgaussian_extended_range: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleMode {
    /// E_q e^{r S_n}
    Mgf,
    /// Exact P_q(S_n/n > gamma)
    Tail,
    /// min_r e^{-r n gamma} E_q e^{r S_n}
    Chernoff,
    /// Weighted operator norm of the tilted transition
    Opnorm,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TailModeArg {
    Auto,
    Enumeration,
    LatticeDp,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: FunctionArgs,
    #[arg(long, value_enum)]
    mode: OracleMode,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    #[arg(long)]
    n: Option<u64>,
    /// Tilt parameter for mgf / opnorm
    #[arg(long, allow_negative_numbers = true)]
    r: Option<f64>,
    #[arg(long = "tail-mode", value_enum, default_value = "auto")]
    tail_mode: TailModeArg,
    /// Also check the closed-form norm estimate at --r (opnorm mode)
    #[arg(long = "check-norm-bound")]
    check_norm_bound: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: FunctionArgs,
    #[arg(long, allow_negative_numbers = true)]
    gamma: f64,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Check one supplied chain instead of the built-in grid
    #[arg(long)]
    chain: Option<PathBuf>,
    /// Run the full built-in suite (the default when no chain is given)
    #[arg(long)]
    suite: bool,
    #[arg(long, default_value_t = 0x5EED_CA5C)]
    seed: u64,
    /// Number of random chains in the built-in grid
    #[arg(long, default_value_t = 20)]
    chains: usize,
    /// Monte Carlo trials per calibration cell
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Shrink every grid for a quick smoke run
    #[arg(long)]
    quick: bool,
}

/// 12 significant digits, plain notation where it stays readable.
fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-4..12).contains(&magnitude) {
        let decimals = (11 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_chain(path: &Path) -> Result<ReversibleChain> {
    let spec = parse_chain_spec(&read_to_string(path)?)?;
    Ok(build_chain(&spec)?)
}

struct Prepared {
    chain: ReversibleChain,
    observable: ObservableFunction,
    affine: Option<AffineMap>,
    q: InitialDistribution,
    spectrum: Spectrum,
}

/// Chain, raw observable values and start distribution; the oracle and the
/// simulator accept the observable exactly as supplied.
struct PreparedRaw {
    chain: ReversibleChain,
    values: Vec<f64>,
    affine: Option<AffineMap>,
    q: InitialDistribution,
}

fn load_common(common: &FunctionArgs) -> Result<(ReversibleChain, Vec<f64>, InitialDistribution)> {
    let chain = load_chain(&common.chain)?;
    let raw = parse_value_list(&read_to_string(&common.function)?)?;
    if raw.len() != chain.states() {
        bail!(
            "function has {} values but the chain has {} states",
            raw.len(),
            chain.states()
        );
    }
    let q = match common.q.as_str() {
        "stationary" => InitialDistribution::stationary(&chain),
        path => {
            let values = parse_value_list(&read_to_string(Path::new(path))?)?;
            InitialDistribution::new(values, &chain)?
        }
    };
    Ok((chain, raw, q))
}

/// For the bound pipeline: the observable must be normalized (or
/// `--normalize` supplied), since the bound statements assume it.
fn prepare(common: &FunctionArgs, mode: NormalizationMode) -> Result<Prepared> {
    let (chain, raw, q) = load_common(common)?;
    let (observable, affine) = if common.normalize {
        let (obs, map) = normalize_function(&raw, &chain, mode)?;
        (obs, Some(map))
    } else {
        let obs = observable_from_normalized(&raw, &chain, mode)
            .map_err(|e| anyhow!("{e}; pass --normalize to apply it"))?;
        (obs, None)
    };
    let spectrum = spectrum(&chain)?;
    Ok(Prepared {
        chain,
        observable,
        affine,
        q,
        spectrum,
    })
}

/// For the oracle and the simulator: any observable goes; `--normalize`
/// optionally maps it to the bounds' normalized scale first.
fn prepare_raw(common: &FunctionArgs) -> Result<PreparedRaw> {
    let (chain, raw, q) = load_common(common)?;
    let (values, affine) = if common.normalize {
        let (obs, map) = normalize_function(&raw, &chain, NormalizationMode::Bounded)?;
        (obs.values().to_vec(), Some(map))
    } else {
        (raw, None)
    };
    Ok(PreparedRaw {
        chain,
        values,
        affine,
        q,
    })
}

fn parse_families(
    names: &[String],
    subgaussian: bool,
) -> Result<Vec<BoundFamily>> {
    if names.is_empty() {
        let mut families = BoundFamily::BOUNDED.to_vec();
        if subgaussian {
            families.push(BoundFamily::SubgaussianBeta);
            families.push(BoundFamily::SubgaussianAlpha);
        }
        return Ok(families);
    }
    names
        .iter()
        .map(|name| {
            BoundFamily::parse(name).ok_or_else(|| {
                anyhow!(
                    "unknown family {name:?}; valid: {}",
                    BoundFamily::ALL
                        .iter()
                        .map(|f| f.name())
                        .collect::<Vec<_>>()
                        .join(", ")
                )
            })
        })
        .collect()
}

fn subgaussian_profile(
    c: Option<f64>,
    k: Option<f64>,
    observable: &ObservableFunction,
) -> Result<Option<SubgaussianProfile>> {
    match (c, k) {
        (None, None) => Ok(None),
        (Some(c), Some(k)) => Ok(Some(SubgaussianProfile::new(c, k, observable.max_abs())?)),
        _ => bail!("subgaussian profiles need both --subgaussian-c and --subgaussian-k"),
    }
}

fn build_query(
    gamma: f64,
    n: u64,
    prepared: &Prepared,
    t: Option<f64>,
    profile: Option<SubgaussianProfile>,
    extended: bool,
) -> Result<BoundQuery> {
    if !(gamma > 0.0) {
        bail!("gamma must be positive, got {gamma}");
    }
    let mut query = BoundQuery::from_parts(
        gamma,
        n,
        &prepared.observable,
        &prepared.spectrum,
        prepared.q.q_norm(),
    );
    query.t = t;
    query.subgaussian = profile;
    query.extended_range = extended;
    query.validate()?;
    Ok(query)
}

fn inputs_json(prepared: &Prepared, common: &FunctionArgs) -> serde_json::Value {
    serde_json::json!({
        "chain": common.chain.display().to_string(),
        "function": common.function.display().to_string(),
        "states": prepared.chain.states(),
        "variance": prepared.observable.variance(),
        "maxAbs": prepared.observable.max_abs(),
        "alpha": prepared.spectrum.alpha(),
        "beta": prepared.spectrum.beta(),
        "qNorm": prepared.q.q_norm(),
        "normalized": prepared.affine.is_some(),
        "affineMap": prepared.affine,
    })
}

fn print_context(prepared: &Prepared) {
    println!(
        "chain: {} states, alpha = {}, beta = {}",
        prepared.chain.states(),
        sig12(prepared.spectrum.alpha()),
        sig12(prepared.spectrum.beta()),
    );
    println!(
        "observable: V = {}, max|f| = {}, qNorm = {}",
        sig12(prepared.observable.variance()),
        sig12(prepared.observable.max_abs()),
        sig12(prepared.q.q_norm()),
    );
    if let Some(map) = &prepared.affine {
        println!(
            "normalization applied: f = (raw - {}) / {}",
            sig12(map.shift),
            sig12(map.scale)
        );
    }
    if prepared.spectrum.beta_is_degenerate() {
        println!("warning: beta = 1 (bipartite-like walk); beta-family bounds are trivial");
    }
}

fn cmd_spectrum(path: &Path, json: bool) -> Result<()> {
    let chain = load_chain(path)?;
    let sp = spectrum(&chain)?;
    if json {
        println!(
            "{}",
            serde_json::json!({
                "command": "spectrum",
                "inputs": { "chain": path.display().to_string() },
                "states": chain.states(),
                "stationary": chain.stationary(),
                "eigenvalues": sp.eigenvalues(),
                "alpha": sp.alpha(),
                "beta": sp.beta(),
                "betaDegenerate": sp.beta_is_degenerate(),
            })
        );
        return Ok(());
    }
    println!("states: {}", chain.states());
    println!(
        "stationary: [{}]",
        chain
            .stationary()
            .iter()
            .map(|v| sig12(*v))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!(
        "eigenvalues: [{}]",
        sp.eigenvalues()
            .iter()
            .map(|v| sig12(*v))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("alpha: {}", sig12(sp.alpha()));
    println!("beta:  {}", sig12(sp.beta()));
    if sp.beta_is_degenerate() {
        println!("warning: beta = 1 (bipartite-like walk); beta-family bounds are trivial");
    }
    Ok(())
}

fn cmd_bound(args: &BoundArgs, json: bool) -> Result<()> {
    let mode = if args.subgaussian_c.is_some() || args.subgaussian_k.is_some() {
        NormalizationMode::Subgaussian
    } else {
        NormalizationMode::Bounded
    };
    let prepared = prepare(&args.common, mode)?;
    let profile = subgaussian_profile(args.subgaussian_c, args.subgaussian_k, &prepared.observable)?;
    let families = parse_families(&args.family, profile.is_some())?;
    let query = build_query(
        args.gamma,
        args.n,
        &prepared,
        args.t,
        profile,
        args.subgaussian_extended_range,
    )?;

    let profile_check = profile.map(|p| {
        verify_subgaussian(
            prepared.observable.values(),
            prepared.chain.stationary(),
            &p,
        )
    });

    let mut results = Vec::new();
    for family in &families {
        results.push(evaluate_family(*family, &query)?);
    }
    let best = results
        .iter()
        .filter(|r| r.feasible)
        .min_by(|a, b| a.value.partial_cmp(&b.value).unwrap())
        .map(|r| r.family);

    if json {
        println!(
            "{}",
            serde_json::json!({
                "command": "bound",
                "inputs": inputs_json(&prepared, &args.common),
                "gamma": args.gamma,
                "n": args.n,
                "results": results,
                "bestFamily": best.map(|f| f.name()),
                "subgaussianProfileCheck": profile_check,
            })
        );
        return Ok(());
    }

    print_context(&prepared);
    println!("gamma = {}, n = {}", sig12(args.gamma), args.n);
    if let Some(check) = &profile_check {
        println!(
            "subgaussian profile: {} (worst margin {})",
            if check.pass { "verified" } else { "VIOLATED" },
            sig12(check.worst_margin)
        );
    }
    println!(
        "{:<18} {:>18} {:>14} {:>18} {:>9}  conditions",
        "family", "value", "tilt r", "rate/sample", "feasible"
    );
    for r in &results {
        let conditions = r
            .conditions
            .iter()
            .map(|c| format!("{}{}", if c.ok { "+" } else { "!" }, c.name))
            .collect::<Vec<_>>()
            .join(" ");
        let marker = if best == Some(r.family) { " *best" } else { "" };
        let note = r.note.as_deref().unwrap_or("");
        println!(
            "{:<18} {:>18} {:>14} {:>18} {:>9}  {conditions}{marker} {note}",
            r.family.name(),
            sig12(r.value),
            sig12(r.r_used),
            sig12(r.exponent_per_sample),
            r.feasible,
        );
        if let Some(log_form) = r.log_form_value {
            println!("{:<18} {:>18}  (companion log-form)", "", sig12(log_form));
        }
    }
    Ok(())
}

fn cmd_plan(args: &PlanArgs, json: bool) -> Result<()> {
    let mode = if args.subgaussian_c.is_some() || args.subgaussian_k.is_some() {
        NormalizationMode::Subgaussian
    } else {
        NormalizationMode::Bounded
    };
    let prepared = prepare(&args.common, mode)?;
    let profile = subgaussian_profile(args.subgaussian_c, args.subgaussian_k, &prepared.observable)?;
    let families = parse_families(&args.family, profile.is_some())?;
    let query = build_query(
        args.gamma,
        1,
        &prepared,
        args.t,
        profile,
        args.subgaussian_extended_range,
    )?;
    if !(args.epsilon > 0.0 && args.epsilon < 1.0) {
        bail!("epsilon must lie in (0, 1), got {}", args.epsilon);
    }

    let comparison = plan_all(&query, args.epsilon, &families);

    // Sanity: squaring the target at most doubles the best plan (plus a
    // rounding step), since bounds decay exponentially in n.
    let sanity = comparison.best.as_ref().map(|best| {
        let family = best.family;
        let n = best.n.unwrap();
        let squared = plan_samples(family, &query, args.epsilon * args.epsilon).ok();
        serde_json::json!({
            "epsilonSquaredPlan": squared,
            "twicePlanPlusOne": 2 * n + 1,
            "ok": squared.map(|m| m <= 2 * n + 1),
        })
    });

    if json {
        println!(
            "{}",
            serde_json::json!({
                "command": "plan",
                "inputs": inputs_json(&prepared, &args.common),
                "gamma": args.gamma,
                "epsilon": args.epsilon,
                "plans": comparison.plans,
                "best": comparison.best,
                "sanity": sanity,
            })
        );
        return Ok(());
    }

    print_context(&prepared);
    println!(
        "gamma = {}, target failure probability = {}",
        sig12(args.gamma),
        sig12(args.epsilon)
    );
    println!("{:<18} {:>14}", "family", "samples n");
    for plan in &comparison.plans {
        match plan.n {
            Some(n) => println!("{:<18} {n:>14}", plan.family.name()),
            None => println!(
                "{:<18} {:>14}  ({})",
                plan.family.name(),
                "-",
                plan.error.as_deref().unwrap_or("infeasible")
            ),
        }
    }
    match &comparison.best {
        Some(best) => {
            println!("best: {} with n = {}", best.family.name(), best.n.unwrap());
            if let Some(s) = &sanity {
                println!(
                    "sanity: plan(epsilon^2) = {} <= 2 plan(epsilon) + 1 = {}",
                    s["epsilonSquaredPlan"], s["twicePlanPlusOne"]
                );
            }
        }
        None => println!("no family reaches the target"),
    }
    Ok(())
}

fn raw_inputs_json(prepared: &PreparedRaw, common: &FunctionArgs) -> serde_json::Value {
    serde_json::json!({
        "chain": common.chain.display().to_string(),
        "function": common.function.display().to_string(),
        "states": prepared.chain.states(),
        "qNorm": prepared.q.q_norm(),
        "normalized": prepared.affine.is_some(),
        "affineMap": prepared.affine,
    })
}

fn print_raw_context(prepared: &PreparedRaw) {
    println!(
        "chain: {} states, qNorm = {}",
        prepared.chain.states(),
        sig12(prepared.q.q_norm()),
    );
    if let Some(map) = &prepared.affine {
        println!(
            "normalization applied: f = (raw - {}) / {}",
            sig12(map.shift),
            sig12(map.scale)
        );
    }
}

fn cmd_oracle(args: &OracleArgs, json: bool) -> Result<()> {
    let prepared = prepare_raw(&args.common)?;
    let f = prepared.values.as_slice();
    let q = prepared.q.q();
    let need = |value: Option<f64>, flag: &str| -> Result<f64> {
        value.ok_or_else(|| anyhow!("--{flag} is required for this mode"))
    };
    let mut report = serde_json::json!({
        "command": "oracle",
        "inputs": raw_inputs_json(&prepared, &args.common),
    });
    match args.mode {
        OracleMode::Mgf => {
            let r = need(args.r, "r")?;
            let n = args.n.ok_or_else(|| anyhow!("--n is required"))?;
            let value = mgf(&prepared.chain, f, q, r, n);
            report["kind"] = "mgf".into();
            report["r"] = r.into();
            report["n"] = n.into();
            report["value"] = value.into();
            if !json {
                print_raw_context(&prepared);
                println!("E exp(r S_n) at r = {}, n = {n}: {}", sig12(r), sig12(value));
            }
        }
        OracleMode::Tail => {
            let gamma = need(args.gamma, "gamma")?;
            let n = args.n.ok_or_else(|| anyhow!("--n is required"))?;
            let mode = match args.tail_mode {
                TailModeArg::Auto => TailMode::Auto,
                TailModeArg::Enumeration => TailMode::Enumeration,
                TailModeArg::LatticeDp => TailMode::LatticeDp,
            };
            let computation = exact_tail_with_mode(&prepared.chain, f, q, gamma, n, mode)
                .map_err(|e| match &e {
                    walktail::OracleError::TooLarge { .. }
                        if args.tail_mode == TailModeArg::Enumeration =>
                    {
                        match walktail::oracle::LatticeEmbedding::find(
                            f,
                            walktail::oracle::DEFAULT_MAX_DENOMINATOR,
                        ) {
                            Some(emb) => anyhow!(
                                "{e}; a lattice embedding with denominator {} exists, retry with --tail-mode lattice-dp",
                                emb.denominator
                            ),
                            None => anyhow!("{e}"),
                        }
                    }
                    _ => anyhow!("{e}"),
                })?;
            report["kind"] = "tail".into();
            report["gamma"] = gamma.into();
            report["n"] = n.into();
            report["value"] = computation.value.into();
            report["mode"] = computation.mode.into();
            report["budgetUsed"] = serde_json::json!(computation.budget_used as u64);
            if !json {
                print_raw_context(&prepared);
                println!(
                    "P(S_n/n > {}) at n = {n}: {}  [{} mode, budget {}]",
                    sig12(gamma),
                    sig12(computation.value),
                    computation.mode,
                    computation.budget_used
                );
            }
        }
        OracleMode::Chernoff => {
            let gamma = need(args.gamma, "gamma")?;
            let n = args.n.ok_or_else(|| anyhow!("--n is required"))?;
            let (value, r_star) = chernoff_exact(&prepared.chain, f, q, gamma, n);
            report["kind"] = "chernoff".into();
            report["gamma"] = gamma.into();
            report["n"] = n.into();
            report["value"] = value.into();
            report["rStar"] = r_star.into();
            if !json {
                print_raw_context(&prepared);
                println!(
                    "min_r exp(-r n gamma) E exp(r S_n) = {} at r = {}",
                    sig12(value),
                    sig12(r_star)
                );
            }
        }
        OracleMode::Opnorm => {
            let r = need(args.r, "r")?;
            let value = operator_norm(&prepared.chain, f, r);
            report["kind"] = "opnorm".into();
            report["r"] = r.into();
            report["value"] = value.into();
            if args.check_norm_bound {
                let check = norm_bound_check(&prepared.chain, f, r)?;
                report["normBoundCheck"] = serde_json::to_value(&check)?;
                if !json {
                    print_raw_context(&prepared);
                    println!(
                        "weighted operator norm at r = {}: {}",
                        sig12(r),
                        sig12(value)
                    );
                    println!(
                        "closed-form bound on norm^2: {} (exact {}, margin {}, {})",
                        sig12(check.analytic_bound),
                        sig12(check.exact_norm_squared),
                        sig12(check.margin),
                        if check.ok { "holds" } else { "VIOLATED" }
                    );
                }
            } else if !json {
                print_raw_context(&prepared);
                println!(
                    "weighted operator norm at r = {}: {}",
                    sig12(r),
                    sig12(value)
                );
            }
        }
    }
    if json {
        println!("{report}");
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, json: bool) -> Result<()> {
    let prepared = prepare_raw(&args.common)?;
    if args.trials < 1 {
        bail!("need at least one trial");
    }
    let estimate = empirical_tail(
        &prepared.chain,
        &prepared.values,
        prepared.q.q(),
        args.gamma,
        args.n,
        args.trials,
        args.seed,
    );
    if json {
        println!(
            "{}",
            serde_json::json!({
                "gamma": estimate.gamma,
                "n": estimate.n,
                "trials": estimate.trials,
                "seed": estimate.seed,
                "estimate": estimate.point_estimate,
                "ciLow": estimate.ci_low,
                "ciHigh": estimate.ci_high,
            })
        );
        return Ok(());
    }
    print_raw_context(&prepared);
    println!(
        "empirical P(S_n/n > {}) over {} walks (seed {}): {}",
        sig12(args.gamma),
        args.trials,
        args.seed,
        sig12(estimate.point_estimate)
    );
    println!(
        "95% Clopper-Pearson interval: [{}, {}]  ({} exceedances)",
        sig12(estimate.ci_low),
        sig12(estimate.ci_high),
        estimate.exceed_count
    );
    Ok(())
}

fn cmd_verify(args: &VerifyArgs, json: bool) -> Result<ExitCode> {
    let mut cfg = SuiteConfig {
        seed: args.seed,
        chain_count: args.chains,
        mc_trials: args.trials,
        ..SuiteConfig::default()
    };
    if args.quick {
        cfg.chain_count = cfg.chain_count.min(4);
        cfg.n_values = vec![1, 2, 4];
        cfg.gamma_grid = vec![0.15, 0.45, 0.75];
        cfg.mc_trials = cfg.mc_trials.min(5_000);
        cfg.mc_cells = 4;
        cfg.planner_queries = 8;
        cfg.norm_tilts_per_chain = 6;
    }
    let started = Instant::now();
    let report: SuiteReport = match &args.chain {
        Some(path) => run_chain_suite(&load_chain(path)?, &cfg),
        None => run_full_suite(&cfg),
    };
    for check in &report.checks {
        if json {
            println!(
                "{}",
                serde_json::json!({
                    "check": check.name,
                    "cells": check.cells,
                    "failures": check.failures.len(),
                    "pass": check.pass(),
                    "info": check.info,
                })
            );
        } else {
            println!(
                "{} {:<24} {:>6} cells{}",
                if check.pass() { "ok  " } else { "FAIL" },
                check.name,
                check.cells,
                check
                    .info
                    .as_deref()
                    .map(|i| format!("  [{i}]"))
                    .unwrap_or_default()
            );
        }
    }
    if !json {
        println!("elapsed: {:.2}s", started.elapsed().as_secs_f64());
    }
    if let Some(failure) = report.first_failure() {
        eprintln!("counterexample: {}", failure.description);
        eprintln!("replay inputs: {}", failure.replay);
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Spectrum { chain } => cmd_spectrum(chain, cli.json).map(|()| ExitCode::SUCCESS),
        Command::Bound(args) => cmd_bound(args, cli.json).map(|()| ExitCode::SUCCESS),
        Command::Plan(args) => cmd_plan(args, cli.json).map(|()| ExitCode::SUCCESS),
        Command::Oracle(args) => cmd_oracle(args, cli.json).map(|()| ExitCode::SUCCESS),
        Command::Simulate(args) => cmd_simulate(args, cli.json).map(|()| ExitCode::SUCCESS),
        Command::Verify(args) => cmd_verify(args, cli.json),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
