//! `nplan`: generate, solve, featurize, train, plan and validate.
//!
//! Exit codes: 0 plan found or plan valid, 1 unsolvable or invalid,
//! 2 resource limit, 3 input error.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use nplan::benchgen::{manifest_json, GeneratorSpec};
use nplan::ccwl::Pooling;
use nplan::model::{ModelFile, Provenance};
use nplan::pddl::{parse_domain, parse_problem};
use nplan::search::{astar, gbfs, Blind, GoalCount, Heuristic, LearnedHeuristic, Limits, Outcome, SearchResult};
use nplan::task::{format_plan, ground, parse_plan, GroundTask, PlanValidation};
use nplan::training::{
    build_cost_dataset, build_ranking_constraints, train, CostLoss, Method, PlanTrace, RankSolver, TrainConfig,
    TrainingInstance,
};

const EXIT_OK: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_LIMIT: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "nplan", version, about = "Learned heuristics for numeric planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate benchmark instances.
    Gen(GenArgs),
    /// Find a cost-optimal plan with blind A*.
    SolveOpt(SolveOptArgs),
    /// Print the feature vector of a state as a CSV row.
    Featurize(FeaturizeArgs),
    /// Fit a color table and a linear heuristic from solved instances.
    Train(TrainArgs),
    /// Search for a plan.
    Plan(PlanArgs),
    /// Check a plan against a task.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainKind {
    Ccblocksworld,
    Ferry,
    Spanner,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    domain: DomainKind,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated `a:b:c` triples: blocks:bases:capacity,
    /// cars:locations:capacity or spanners:nuts:locations.
    #[arg(long)]
    sizes: String,
    /// Instances per size.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// The k-th instance written uses seed `seed + k`.
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct TaskArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    problem: PathBuf,
}

#[derive(Args, Clone, Copy)]
struct LimitArgs {
    #[arg(long, default_value_t = 1_000_000)]
    max_expansions: u64,
    #[arg(long, default_value_t = 300.0)]
    max_seconds: f64,
}

impl From<LimitArgs> for Limits {
    fn from(a: LimitArgs) -> Self {
        Limits { max_expansions: a.max_expansions, max_seconds: a.max_seconds }
    }
}

#[derive(Args)]
struct SolveOptArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    limits: LimitArgs,
    /// Plan file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturizeArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[arg(long)]
    model: PathBuf,
    /// `PLAN:k`, the state after the first k steps of PLAN; the initial state otherwise.
    #[arg(long)]
    state_from_plan: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Squared,
    Epsilon,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Simplex,
    Subgradient,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    domain: PathBuf,
    /// Directory of problem files; `domain.pddl` in it is skipped.
    #[arg(long)]
    problems: PathBuf,
    /// Directory holding `<problem stem>.plan` files.
    #[arg(long)]
    plans: PathBuf,
    /// Solve problems without a plan file by blind A* and store the plan.
    #[arg(long)]
    solve_missing: bool,
    #[command(flatten)]
    limits: LimitArgs,
    #[arg(long, default_value = "rank")]
    method: Method,
    #[arg(long = "iterations", short = 'L', default_value_t = 1)]
    iterations: usize,
    /// Regularization weight; 1e-4 for cost, 0.01 for rank when absent.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value = "sum")]
    pooling: Pooling,
    #[arg(long, value_enum, default_value = "squared")]
    loss: LossArg,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "simplex")]
    solver: SolverArg,
    /// Also write the regression rows or ranking constraints as CSV.
    #[arg(long)]
    dump_dataset: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    task: TaskArgs,
    /// `blind`, `goal-count` or `model:PATH`.
    #[arg(long, default_value = "blind")]
    heuristic: String,
    #[arg(long, value_enum, default_value = "gbfs")]
    search: SearchArg,
    #[command(flatten)]
    limits: LimitArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchArg {
    Gbfs,
    Astar,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[arg(long)]
    plan: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::SolveOpt(a) => cmd_solve_opt(a),
        Command::Featurize(a) => cmd_featurize(a),
        Command::Train(a) => cmd_train(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn load_task(domain: &Path, problem: &Path) -> Result<GroundTask> {
    let d = parse_domain(&read(domain)?).with_context(|| format!("parsing {}", domain.display()))?;
    let p = parse_problem(&read(problem)?, &d).with_context(|| format!("parsing {}", problem.display()))?;
    ground(&d, &p).with_context(|| format!("grounding {}", problem.display()))
}

fn load_model(path: &Path) -> Result<ModelFile> {
    ModelFile::from_json(&read(path)?).with_context(|| format!("loading model {}", path.display()))
}

fn parse_sizes(text: &str) -> Result<Vec<[usize; 3]>> {
    text.split(',')
        .map(|part| {
            let nums: Vec<usize> = part
                .split(':')
                .map(|n| n.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| anyhow!("bad size `{part}`"))?;
            <[usize; 3]>::try_from(nums).map_err(|_| anyhow!("size `{part}` needs three numbers a:b:c"))
        })
        .collect()
}

fn cmd_gen(a: GenArgs) -> Result<u8> {
    let sizes = parse_sizes(&a.sizes)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut entries = Vec::new();
    let mut domain_text = None;
    let mut k = 0u64;
    for [x, y, z] in sizes {
        for _ in 0..a.count {
            let seed = a.seed + k;
            let spec = match a.domain {
                DomainKind::Ccblocksworld => GeneratorSpec::Ccblocksworld { blocks: x, bases: y, capacity: z, seed },
                DomainKind::Ferry => GeneratorSpec::Ferry { cars: x, locations: y, capacity: z, seed },
                DomainKind::Spanner => GeneratorSpec::Spanner { spanners: x, nuts: y, locations: z, seed },
            };
            let generated = spec.generate()?;
            k += 1;
            let file = format!("problem{k:02}.pddl");
            write_atomic(&a.out.join(&file), &generated.problem)?;
            domain_text.get_or_insert(generated.domain);
            entries.push((file, spec));
        }
    }
    if let Some(d) = domain_text {
        write_atomic(&a.out.join("domain.pddl"), &d)?;
    }
    let mut manifest = serde_json::to_string_pretty(&manifest_json(&entries))?;
    manifest.push('\n');
    write_atomic(&a.out.join("manifest.json"), &manifest)?;
    println!("wrote {} instances to {}", entries.len(), a.out.display());
    Ok(EXIT_OK)
}

fn plan_text(task: &GroundTask, result: &SearchResult) -> Option<String> {
    match &result.outcome {
        Outcome::Plan { actions, cost } => {
            let names: Vec<&str> = actions.iter().map(|&i| task.actions[i].name.as_str()).collect();
            Some(format_plan(&names, Some(*cost)))
        }
        _ => None,
    }
}

fn report(task: &GroundTask, result: &SearchResult, out: Option<&Path>, stats: Option<&Path>) -> Result<u8> {
    if let Some(path) = stats {
        let mut text = serde_json::to_string_pretty(&result.stats_json())?;
        text.push('\n');
        write_atomic(path, &text)?;
    }
    let code = match &result.outcome {
        Outcome::Plan { .. } => {
            emit(out, &plan_text(task, result).unwrap_or_default())?;
            EXIT_OK
        }
        Outcome::Unsolvable => {
            eprintln!("unsolvable");
            EXIT_NEGATIVE
        }
        Outcome::ResourceLimit => {
            eprintln!("resource limit reached");
            EXIT_LIMIT
        }
    };
    log::info!("expansions: {}", result.stats.expansions);
    Ok(code)
}

fn cmd_solve_opt(a: SolveOptArgs) -> Result<u8> {
    let task = load_task(&a.task.domain, &a.task.problem)?;
    let result = astar(&task, &Blind, a.limits.into());
    report(&task, &result, a.out.as_deref(), a.stats.as_deref())
}

fn cmd_featurize(a: FeaturizeArgs) -> Result<u8> {
    let task = load_task(&a.task.domain, &a.task.problem)?;
    let model = load_model(&a.model)?;
    let state = match &a.state_from_plan {
        None => task.initial.clone(),
        Some(spec) => {
            let (file, k) = spec.rsplit_once(':').ok_or_else(|| anyhow!("--state-from-plan expects PLAN:k"))?;
            let k: usize = k.parse().map_err(|_| anyhow!("bad step count `{k}`"))?;
            let plan = parse_plan(&read(Path::new(file))?)?;
            if k > plan.len() {
                bail!("plan has {} steps, asked for state {k}", plan.len());
            }
            let mut state = task.initial.clone();
            for (i, name) in plan[..k].iter().enumerate() {
                let id =
                    task.action_by_name(name).ok_or_else(|| anyhow!("plan step {}: unknown action `{name}`", i + 1))?;
                state =
                    task.apply(&state, id).ok_or_else(|| anyhow!("plan step {}: `{name}` is not applicable", i + 1))?;
            }
            state
        }
    };
    let h = LearnedHeuristic::new(model.ccwl, model.heuristic);
    let phi = h.features(&task, &state)?;
    let row: Vec<String> = phi.iter().map(f64::to_string).collect();
    emit(a.out.as_deref(), &format!("{}\n", row.join(",")))?;
    Ok(EXIT_OK)
}

fn problem_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "pddl") && p.file_stem().is_some_and(|s| s != "domain"));
    files.sort();
    Ok(files)
}

fn cmd_train(a: TrainArgs) -> Result<u8> {
    let domain_text = read(&a.domain)?;
    let domain = parse_domain(&domain_text).with_context(|| format!("parsing {}", a.domain.display()))?;
    let files = problem_files(&a.problems)?;
    if files.is_empty() {
        bail!("no problem files in {}", a.problems.display());
    }
    let mut instances = Vec::new();
    let mut names = Vec::new();
    for file in &files {
        let problem = parse_problem(&read(file)?, &domain).with_context(|| format!("parsing {}", file.display()))?;
        let task = ground(&domain, &problem).with_context(|| format!("grounding {}", file.display()))?;
        let stem = file.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let plan_path = a.plans.join(format!("{stem}.plan"));
        let trace = if plan_path.exists() {
            let plan = parse_plan(&read(&plan_path)?).with_context(|| format!("parsing {}", plan_path.display()))?;
            PlanTrace::from_plan(&task, &plan).with_context(|| format!("replaying {}", plan_path.display()))?
        } else if a.solve_missing {
            let result = astar(&task, &Blind, a.limits.into());
            let actions = match &result.outcome {
                Outcome::Plan { actions, .. } => actions,
                Outcome::Unsolvable => {
                    log::warn!("skipping unsolvable {}", file.display());
                    continue;
                }
                Outcome::ResourceLimit => bail!("could not solve {} within the limits", file.display()),
            };
            fs::create_dir_all(&a.plans)?;
            write_atomic(&plan_path, &plan_text(&task, &result).unwrap_or_default())?;
            PlanTrace::from_action_ids(&task, actions)?
        } else {
            bail!("missing plan {} (use --solve-missing)", plan_path.display());
        };
        instances.push(TrainingInstance { task, trace });
        names.push(file.file_name().unwrap_or_default().to_string_lossy().into_owned());
    }

    let mut config =
        TrainConfig { iterations: a.iterations, pooling: a.pooling, method: a.method, ..TrainConfig::default() };
    let lambda = a.lambda.unwrap_or(match a.method {
        Method::Cost => config.cost.lambda,
        Method::Rank => config.rank.lambda,
    });
    config.cost.lambda = lambda;
    config.rank.lambda = lambda;
    config.cost.loss = match a.loss {
        LossArg::Squared => CostLoss::Squared,
        LossArg::Epsilon => CostLoss::EpsilonInsensitive(a.epsilon),
    };
    config.rank.solver = match a.solver {
        SolverArg::Simplex => RankSolver::Simplex,
        SolverArg::Subgradient => RankSolver::Subgradient,
    };

    let (ccwl, heuristic) = train(&instances, &config)?;
    if let Some(path) = &a.dump_dataset {
        let csv = match a.method {
            Method::Cost => build_cost_dataset(&instances, &ccwl)?.to_csv(ccwl.feature_len()),
            Method::Rank => build_ranking_constraints(&instances, &ccwl)?.to_csv(),
        };
        write_atomic(path, &csv)?;
    }
    let loss = match config.cost.loss {
        CostLoss::Squared => serde_json::json!("squared"),
        CostLoss::EpsilonInsensitive(e) => serde_json::json!({ "epsilon": e }),
    };
    let solver = match config.rank.solver {
        RankSolver::Simplex => "simplex",
        RankSolver::Subgradient => "subgradient",
    };
    let model = ModelFile {
        ccwl,
        heuristic,
        provenance: Provenance {
            domain: domain.name.clone(),
            training_instances: names,
            config: serde_json::json!({
                "method": a.method.name(),
                "iterations": a.iterations,
                "pooling": a.pooling.name(),
                "lambda": lambda,
                "loss": loss,
                "solver": solver,
            }),
        },
    };
    write_atomic(&a.out, &model.to_json())?;
    eprintln!(
        "trained {} model: {} colors, objective {}",
        a.method.name(),
        model.ccwl.num_colors(),
        model.heuristic.objective
    );
    Ok(EXIT_OK)
}

fn cmd_plan(a: PlanArgs) -> Result<u8> {
    let task = load_task(&a.task.domain, &a.task.problem)?;
    let learned;
    let h: &dyn Heuristic = match a.heuristic.as_str() {
        "blind" => &Blind,
        "goal-count" => &GoalCount,
        other => {
            let path = other.strip_prefix("model:").ok_or_else(|| anyhow!("unknown heuristic `{other}`"))?;
            let model = load_model(Path::new(path))?;
            learned = LearnedHeuristic::new(model.ccwl, model.heuristic);
            learned.supports(&task)?;
            &learned
        }
    };
    let result = match a.search {
        SearchArg::Gbfs => gbfs(&task, h, a.limits.into()),
        SearchArg::Astar => astar(&task, h, a.limits.into()),
    };
    report(&task, &result, a.out.as_deref(), a.stats.as_deref())
}

fn cmd_validate(a: ValidateArgs) -> Result<u8> {
    let task = load_task(&a.task.domain, &a.task.problem)?;
    let plan = parse_plan(&read(&a.plan)?).with_context(|| format!("parsing {}", a.plan.display()))?;
    match task.validate_plan(&plan) {
        Ok(PlanValidation::Valid { cost, .. }) => {
            println!("valid cost {cost}");
            Ok(EXIT_OK)
        }
        Ok(PlanValidation::Invalid { step, reason }) => {
            println!("invalid step {step}: {reason}");
            Ok(EXIT_NEGATIVE)
        }
        Err(e) => {
            println!("invalid: {e}");
            Ok(EXIT_NEGATIVE)
        }
    }
}
