//! `hba`: run the experiments in hba-core from the command line.
//!
//! Exit codes: 0 when every assertion of the run holds, 1 when an assertion
//! fails, 2 for bad input or runtime errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hba_core::behaviours::EvoParams;
use hba_core::bisim::{self, LabelledChain};
use hba_core::games78::{enumerate_games, filter_dominant_player2, has_dominant_action, OrdinalGame};
use hba_core::harness::{
    self, emit, Assertion, ExperimentKind, ExperimentPlan, Format, Generator, Metadata, OpponentKind, Record,
};
use hba_core::hyptest::{Score, WeightScheme};
use hba_core::priors::{compute_prior, PriorKind, PriorSpec};
use hba_core::rng::Streams;

#[derive(Parser)]
#[command(name = "hba", version, about = "Type-based interaction experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Multiplies rounds, processes, steps and repetitions.
    #[arg(long, global = true, default_value_t = 1.0)]
    scale: f64,
    /// Output directory for data files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// The 78 strictly ordinal 2x2 games.
    Games78 {
        #[command(subcommand)]
        action: GamesAction,
    },
    /// Generate a type pool for player 2 of one game.
    GenTypes {
        #[arg(long)]
        game: usize,
        #[arg(long, default_value = "lft")]
        generator: String,
        #[command(flatten)]
        evo: EvoArgs,
    },
    /// Prior beliefs over a generated type pool.
    Priors {
        #[arg(long)]
        game: usize,
        #[arg(long, default_value = "lft")]
        generator: String,
        /// Comma-separated method names; all ten by default.
        #[arg(long)]
        methods: Option<String>,
        #[arg(long, default_value_t = 5)]
        horizon: usize,
        /// Number of types taken from the pool.
        #[arg(long, default_value_t = 10)]
        types: usize,
        #[command(flatten)]
        evo: EvoArgs,
    },
    /// HBA against generated or fictitious opponents on the 78 games.
    Simulate(SimulateArgs),
    /// Online behavioural hypothesis testing.
    Hyptest(HyptestArgs),
    /// Posterior convergence traces for the example fixtures.
    BeliefTrace {
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        every: Option<usize>,
    },
    /// Labelled Markov chains.
    Bisim {
        #[command(subcommand)]
        action: BisimAction,
    },
}

#[derive(Subcommand)]
enum GamesAction {
    List {
        /// Only games where player 2 has no dominant action.
        #[arg(long)]
        filtered: bool,
    },
}

#[derive(Subcommand)]
enum BisimAction {
    /// Compare two chains and print the verdict and partition.
    Check {
        a: PathBuf,
        b: PathBuf,
        /// Fail unless the verdict matches.
        #[arg(long, value_enum)]
        expect: Option<Expect>,
    },
    /// Write a random chain and a lumpable copy of it.
    Example { dir: PathBuf },
    /// Random bisimilar and non-bisimilar pairs.
    Suite {
        #[arg(long, default_value_t = 12)]
        pairs: usize,
    },
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Expect {
    Bisimilar,
    Distinct,
}

#[derive(Args, Clone)]
struct EvoArgs {
    #[arg(long, default_value_t = 20)]
    population: usize,
    #[arg(long, default_value_t = 10)]
    generations: usize,
}

impl EvoArgs {
    fn params(&self) -> EvoParams {
        EvoParams { population: self.population, generations: self.generations, ..EvoParams::default() }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Full plan as JSON; the flags below override it.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Comma-separated game ids.
    #[arg(long)]
    games: Option<String>,
    #[arg(long)]
    max_games: Option<usize>,
    #[arg(long)]
    generator: Option<String>,
    /// Comma-separated subset of rt, fp, cfp.
    #[arg(long)]
    opponents: Option<String>,
    /// Comma-separated prior method names.
    #[arg(long)]
    priors: Option<String>,
    #[arg(long)]
    rounds_rt: Option<usize>,
    #[arg(long)]
    rounds_fp: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args)]
struct HyptestArgs {
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Opponent setting: random behaviours or adaptive generated types.
    #[arg(long, default_value = "random")]
    kind: String,
    #[arg(long)]
    processes: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    /// Null samples N.
    #[arg(long)]
    samples: Option<usize>,
    /// Comma-separated score functions, e.g. `1,2,3`.
    #[arg(long)]
    scores: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    actions: Option<usize>,
    /// Processes whose per-step trace is written.
    #[arg(long)]
    trace: Option<usize>,
}

fn split(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

fn load_plan(path: Option<&Path>, kind: ExperimentKind, g: &Global) -> Result<ExperimentPlan> {
    let mut plan = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading plan {}", p.display()))?;
            let plan: ExperimentPlan = serde_json::from_str(&text).with_context(|| format!("parsing plan {}", p.display()))?;
            if plan.kind != kind {
                bail!("plan {} is for a different experiment", p.display());
            }
            plan
        }
        None => ExperimentPlan::new(kind, g.seed),
    };
    if path.is_none() || g.seed != 0 {
        plan.seed = g.seed;
    }
    if path.is_none() || g.scale != 1.0 {
        plan.scale = g.scale;
    }
    Ok(plan)
}

struct Output<'a> {
    global: &'a Global,
    meta: Metadata,
}

impl Output<'_> {
    fn write<T: Record>(&self, name: &str, rows: &[T]) -> Result<()> {
        if let Some(dir) = &self.global.out {
            let format: Format = self.global.format.into();
            let path = dir.join(format!("{name}.{}", format.extension()));
            emit::emit(&self.meta, rows, format, &path)?;
            println!("wrote {} rows to {}", rows.len(), path.display());
        }
        Ok(())
    }

    fn write_plan(&self, plan: &ExperimentPlan) -> Result<()> {
        if let Some(dir) = &self.global.out {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join("plan.json");
            std::fs::write(&path, serde_json::to_string_pretty(plan)?).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

fn report(assertions: &[Assertion]) -> bool {
    for a in assertions {
        println!("{} {}: {}", if a.passed { "ok  " } else { "FAIL" }, a.name, a.detail);
    }
    assertions.iter().all(|a| a.passed)
}

fn find_game(id: usize) -> Result<OrdinalGame> {
    enumerate_games().into_iter().find(|g| g.id == id).with_context(|| format!("no game with id {id}"))
}

fn games_list(g: &Global, filtered: bool) -> Result<bool> {
    #[derive(serde::Serialize, serde::Deserialize)]
    struct GameRow {
        id: usize,
        class: String,
        p1: String,
        p2: String,
        p2_dominant: bool,
    }
    impl Record for GameRow {
        const COLUMNS: &'static [&'static str] = &["id", "class", "p1", "p2", "p2_dominant"];
    }
    let all = enumerate_games();
    let games = if filtered { filter_dominant_player2(&all) } else { all.clone() };
    let ranks = |m: [[u8; 2]; 2]| format!("{}{}/{}{}", m[0][0], m[0][1], m[1][0], m[1][1]);
    let rows: Vec<GameRow> = games
        .iter()
        .map(|og| GameRow {
            id: og.id,
            class: format!("{:?}", og.class),
            p1: ranks(og.p1),
            p2: ranks(og.p2),
            p2_dominant: has_dominant_action(og, 1),
        })
        .collect();
    println!("{:>3} {:<11} {:<6} {:<6} {}", "id", "class", "p1", "p2", "p2-dominant");
    for r in &rows {
        println!("{:>3} {:<11} {:<6} {:<6} {}", r.id, r.class, r.p1, r.p2, r.p2_dominant);
    }
    let out = Output { global: g, meta: Metadata { plan_hash: "games78".into(), seed: g.seed } };
    out.write(if filtered { "games78-filtered" } else { "games78" }, &rows)?;
    Ok(report(&[Assertion { name: "game-count".into(), passed: all.len() == 78, detail: format!("{} games", all.len()) }]))
}

fn type_pool(g: &Global, game: usize, generator: &str, evo: &EvoArgs) -> Result<(OrdinalGame, Vec<hba_core::BehaviourRef>)> {
    let og = find_game(game)?;
    let gen = Generator::parse(generator)?;
    let mut rng = Streams::new(g.seed).stream("types");
    let pool = harness::generate_types(gen, &og.to_game(), &evo.params(), &mut rng)?;
    Ok((og, pool))
}

fn gen_types(g: &Global, game: usize, generator: &str, evo: &EvoArgs) -> Result<bool> {
    let (_, pool) = type_pool(g, game, generator, evo)?;
    for (k, t) in pool.iter().enumerate() {
        println!("{k:>3} {}", t.id());
    }
    Ok(report(&[Assertion {
        name: "enough-distinct-types".into(),
        passed: pool.len() >= 10,
        detail: format!("{} distinct types", pool.len()),
    }]))
}

#[allow(clippy::too_many_arguments)]
fn priors(g: &Global, game: usize, generator: &str, methods: Option<&str>, horizon: usize, types: usize, evo: &EvoArgs) -> Result<bool> {
    let (og, mut pool) = type_pool(g, game, generator, evo)?;
    pool.truncate(types);
    let kinds: Vec<PriorKind> = match methods {
        Some(m) => split(m).map(PriorKind::parse).collect::<hba_core::Result<_>>()?,
        None => PriorKind::all(),
    };
    let game = og.to_game();
    let mut ok = true;
    for kind in kinds {
        let spec = PriorSpec { horizon, ..PriorSpec::new(kind).with_seed(g.seed) };
        let p = compute_prior(&spec, &game, &pool, 0)?;
        let valid = p.probs.iter().all(|x| *x > 0.0) && (p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9;
        ok &= valid;
        let shown: Vec<String> = p.probs.iter().map(|x| format!("{x:.4}")).collect();
        println!("{:<16} [{}]{}", kind.name(), shown.join(", "), if p.fallback { " (uniform fallback)" } else { "" });
    }
    Ok(report(&[Assertion { name: "prior-support".into(), passed: ok, detail: "every prior has full support and sums to 1".into() }]))
}

fn simulate(g: &Global, a: &SimulateArgs) -> Result<bool> {
    let mut plan = load_plan(a.plan.as_deref(), ExperimentKind::MatrixPriors, g)?;
    if let Some(s) = &a.games {
        plan.games = split(s).map(|x| x.parse().with_context(|| format!("bad game id {x:?}"))).collect::<Result<_>>()?;
    }
    if a.max_games.is_some() {
        plan.max_games = a.max_games;
    }
    if let Some(s) = &a.generator {
        plan.generator = Generator::parse(s)?;
    }
    if let Some(s) = &a.opponents {
        plan.opponents = split(s).map(OpponentKind::parse).collect::<hba_core::Result<_>>()?;
    }
    if let Some(s) = &a.priors {
        plan.priors = split(s).map(PriorKind::parse).collect::<hba_core::Result<_>>()?;
    }
    plan.rounds_rt = a.rounds_rt.unwrap_or(plan.rounds_rt);
    plan.rounds_fp = a.rounds_fp.unwrap_or(plan.rounds_fp);
    plan.repetitions = a.repetitions.unwrap_or(plan.repetitions);
    plan.planner_depth = a.depth.unwrap_or(plan.planner_depth);
    log::info!("plan hash {}", plan.hash());
    let ds = harness::run_matrix_experiment(&plan)?;
    let out = Output { global: g, meta: plan.metadata() };
    out.write_plan(&plan)?;
    out.write("matrix", &ds.rows)?;
    out.write("matrix-exceptions", &ds.exceptions)?;
    let plays = ds.summaries();
    println!("{} plays, {} rows, {} exceptions", plays.len(), ds.rows.len(), ds.exceptions.len());
    for e in &ds.exceptions {
        println!("exception {}: {} ({})", e.item, e.code, e.detail);
    }
    let names: Vec<String> = plan.priors.iter().map(|k| k.name()).collect();
    if names.iter().any(|n| n == "uniform") && plays.len() >= 2 {
        for other in names.iter().filter(|n| *n != "uniform") {
            for (metric, t) in ds.compare(other, "uniform")? {
                println!(
                    "{other} vs uniform {metric}: mean diff {:+.4}, t {:.3}, p two-sided {:.4}, p greater {:.4}",
                    t.mean_diff, t.t, t.p_two_sided, t.p_greater
                );
            }
        }
    }
    Ok(report(&harness::matrix_assertions(&ds)))
}

fn hyptest(g: &Global, a: &HyptestArgs) -> Result<bool> {
    let kind = match a.kind.as_str() {
        "random" => ExperimentKind::HyptestRandom,
        "adaptive" => ExperimentKind::HyptestAdaptive,
        k => bail!("unknown hypothesis-test setting {k:?}"),
    };
    let mut plan = load_plan(a.plan.as_deref(), kind, g)?;
    plan.processes = a.processes.unwrap_or(plan.processes);
    plan.steps = a.steps.unwrap_or(plan.steps);
    plan.num_actions = a.actions.unwrap_or(plan.num_actions);
    plan.trace_processes = a.trace.unwrap_or(plan.trace_processes);
    if let Some(n) = a.samples {
        plan.hyptest.samples = n;
    }
    if let Some(s) = &a.scores {
        plan.hyptest.scores = split(s).map(Score::parse).collect::<hba_core::Result<_>>()?;
    }
    if let Some(s) = &a.scheme {
        plan.hyptest.scheme = WeightScheme::parse(s)?;
    }
    if let Some(x) = a.alpha {
        plan.hyptest.alpha = x;
    }
    let ds = harness::run_hyptest_experiment(&plan)?;
    let out = Output { global: g, meta: plan.metadata() };
    out.write_plan(&plan)?;
    out.write("hyptest", &ds.rows)?;
    if plan.trace_processes > 0 {
        out.write("hyptest-trace", &ds.traces)?;
    }
    Ok(report(&harness::hyptest_assertions(&plan, &ds)))
}

fn belief_trace(g: &Global, plan_path: Option<&Path>, steps: Option<usize>, every: Option<usize>) -> Result<bool> {
    let mut plan = load_plan(plan_path, ExperimentKind::BeliefConvergence, g)?;
    plan.belief_steps = steps.unwrap_or(plan.belief_steps);
    plan.belief_every = every.unwrap_or(plan.belief_every);
    let rows = harness::run_belief_convergence(&plan)?;
    let out = Output { global: g, meta: plan.metadata() };
    out.write_plan(&plan)?;
    out.write("belief", &rows)?;
    for f in harness::BeliefFixture::ALL {
        for mode in ["product", "sum", "correlated"] {
            if let Some(r) = rows.iter().filter(|r| r.fixture == f.name() && r.mode == mode).max_by_key(|r| r.t) {
                println!("{:<17} {:<10} t={:<5} error {:.4}{}", r.fixture, r.mode, r.t, r.error, if r.degenerate { " degenerate" } else { "" });
            }
        }
    }
    Ok(report(&harness::belief_assertions(&rows)))
}

fn read_chain(p: &Path) -> Result<LabelledChain> {
    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    LabelledChain::from_json(&text).with_context(|| format!("parsing chain {}", p.display()))
}

fn bisim_cmd(g: &Global, action: &BisimAction) -> Result<bool> {
    match action {
        BisimAction::Check { a, b, expect } => {
            let (x, y) = (read_chain(a)?, read_chain(b)?);
            let r = bisim::bisimulation_check(&x, &y);
            println!("{}", if r.bisimilar { "bisimilar" } else { "not bisimilar" });
            for (k, class) in r.partition.iter().enumerate() {
                let names: Vec<String> =
                    class.iter().map(|(c, n)| format!("{}:{}", if *c == 0 { "a" } else { "b" }, [&x, &y][*c].names[*n])).collect();
                println!("class {k}: {}", names.join(" "));
            }
            if let Some(w) = &r.witness {
                let names: Vec<String> = w.iter().map(|(c, n)| format!("{}:{}", if *c == 0 { "a" } else { "b" }, [&x, &y][*c].names[*n])).collect();
                println!("distinguishing class: {}", names.join(" "));
            }
            for t in [1, 10, 50] {
                println!(
                    "P(term within {t}): a {:.6} b {:.6}",
                    bisim::termination_probability(&x, Some(t)),
                    bisim::termination_probability(&y, Some(t))
                );
            }
            let mut checks =
                vec![Assertion { name: "partition-valid".into(), passed: bisim::is_bisimulation(&x, &y, &r.partition), detail: format!("{} classes", r.partition.len()) }];
            if let Some(e) = expect {
                let want = *e == Expect::Bisimilar;
                checks.push(Assertion { name: "expected-verdict".into(), passed: r.bisimilar == want, detail: format!("bisimilar = {}", r.bisimilar) });
            }
            Ok(report(&checks))
        }
        BisimAction::Example { dir } => {
            let mut rng = Streams::new(g.seed).stream("example");
            let c = bisim::random_chain(4, 1, &mut rng);
            let d = bisim::split_node(&c, 1, 0.3)?;
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, chain) in [("a.json", &c), ("b.json", &d), ("c.json", &bisim::without_term(&c)?)] {
                let p = dir.join(name);
                std::fs::write(&p, chain.to_json()?).with_context(|| format!("writing {}", p.display()))?;
                println!("wrote {}", p.display());
            }
            Ok(true)
        }
        BisimAction::Suite { pairs } => {
            let mut plan = ExperimentPlan::new(ExperimentKind::BisimSuite, g.seed);
            plan.bisim_pairs = *pairs;
            let rows = harness::run_bisim_suite(&plan)?;
            let out = Output { global: g, meta: plan.metadata() };
            out.write("bisim", &rows)?;
            let gap = rows.iter().filter(|r| r.relation == "split").map(|r| r.max_gap).fold(0.0, f64::max);
            let sound = rows.iter().all(|r| r.bisimilar == (r.relation == "split"));
            Ok(report(&[
                Assertion { name: "verdicts".into(), passed: sound, detail: format!("{} pairs", rows.len()) },
                Assertion { name: "termination-agrees".into(), passed: gap <= 1e-9, detail: format!("max gap {gap:.2e}") },
            ]))
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    if !(g.scale > 0.0 && g.scale.is_finite()) {
        bail!("--scale must be positive");
    }
    match &cli.command {
        Command::Games78 { action: GamesAction::List { filtered } } => games_list(g, *filtered),
        Command::GenTypes { game, generator, evo } => gen_types(g, *game, generator, evo),
        Command::Priors { game, generator, methods, horizon, types, evo } => priors(g, *game, generator, methods.as_deref(), *horizon, *types, evo),
        Command::Simulate(a) => simulate(g, a),
        Command::Hyptest(a) => hyptest(g, a),
        Command::BeliefTrace { plan, steps, every } => belief_trace(g, plan.as_deref(), *steps, *every),
        Command::Bisim { action } => bisim_cmd(g, action),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
