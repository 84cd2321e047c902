use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use parisian::config::parse_model;
use parisian::simulate::{self, Request, SimConfig, Target};
use parisian::verification::{self, SUITES};
use parisian::{Error, Evaluator, Identity, IdentityValue, LevyModel, Scenario};

use crate::{Cli, Command, Format, ScenarioArgs, SimArgs};

const DEFAULT_SIM_PATHS: u64 = 10_000;
const DEFAULT_VERIFY_PATHS: u64 = 20_000;

const BUILTIN_MODELS: [(&str, &str); 4] = [
    ("brownian", include_str!("../../../models/brownian.json")),
    ("brownian_driftless", include_str!("../../../models/brownian_driftless.json")),
    ("cramer_lundberg", include_str!("../../../models/cramer_lundberg.json")),
    ("jump_diffusion", include_str!("../../../models/jump_diffusion.json")),
];

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidModel { .. } | Error::ConfigSyntax { .. } | Error::SimConfig(_) | Error::Domain(_) => 2,
            _ => 1,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self { code: 2, message: format!("writing output: {e}") }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn load_model(spec: &str) -> Result<LevyModel, Failure> {
    if let Some((_, text)) = BUILTIN_MODELS.iter().find(|(name, _)| *name == spec) {
        return Ok(parse_model(text)?);
    }
    let text = fs::read_to_string(spec)
        .map_err(|e| Failure::usage(format!("cannot read model file `{spec}`: {e}")))?;
    parse_model(&text).map_err(|e| Failure::usage(format!("{spec}: {e}")))
}

fn scenario(s: &ScenarioArgs) -> Result<Scenario, Failure> {
    Ok(Scenario::new(s.q, s.r, s.a, s.b, s.x, s.theta)?)
}

fn sim_config(sim: &SimArgs, default_paths: u64) -> SimConfig {
    SimConfig {
        n_paths: sim.paths.unwrap_or(default_paths),
        seed: sim.seed,
        euler_step: sim.step,
        horizon: sim.horizon,
        antithetic: sim.antithetic,
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::usage(format!("writing output: {e}")))
        }
    }
}

fn csv_text(rows: &[Vec<String>]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::usage(format!("writing output: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn pretty_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(v, w)| format!("{v:<w$}")).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn table(format: Format, rows: &[Vec<String>]) -> Result<String, Failure> {
    match format {
        Format::Csv => csv_text(rows),
        Format::Pretty => Ok(pretty_table(rows)),
    }
}

fn scenario_cells(s: &Scenario) -> Vec<String> {
    [s.q, s.r, s.a, s.b, s.x, s.theta].iter().map(f64::to_string).collect()
}

const SCENARIO_HEADER: [&str; 6] = ["q", "r", "a", "b", "x", "theta"];

fn header(first: &str, rest: &[&str]) -> Vec<String> {
    std::iter::once(first)
        .chain(SCENARIO_HEADER)
        .chain(rest.iter().copied())
        .map(String::from)
        .collect()
}

fn evaluate(model: &LevyModel, id: Identity, s: &Scenario) -> Result<IdentityValue, Error> {
    Evaluator::for_scenario(model, s)?.evaluate(id, s)
}

pub fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::usage("thread count must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot start {n} worker threads: {e}")))?;
    }
    let out = cli.output.as_deref();
    match &cli.command {
        Command::Eval { identity, scenario: sa, trace } => {
            let id: Identity = identity.parse()?;
            let model = load_model(&cli.model)?;
            let s = scenario(sa)?;
            let v = evaluate(&model, id, &s)?;
            let mut rows = vec![
                header("identity", &["value"]),
                std::iter::once(id.name().to_string())
                    .chain(scenario_cells(&s))
                    .chain([v.value.to_string()])
                    .collect(),
            ];
            let mut text = table(cli.format, &rows)?;
            if *trace {
                rows = vec![vec!["kernel".into(), "value".into()]];
                rows.extend(v.kernel_trace.iter().map(|(k, x)| vec![k.clone(), x.to_string()]));
                rows.push(vec!["source".into(), v.source.to_string()]);
                text.push('\n');
                text.push_str(&table(cli.format, &rows)?);
            }
            emit(out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { targets, scenario: sa, sim, trace } => {
            let targets = targets
                .split(',')
                .map(|t| t.trim().parse::<Target>())
                .collect::<Result<Vec<_>, _>>()?;
            let model = load_model(&cli.model)?;
            let s = scenario(sa)?;
            let cfg = sim_config(sim, DEFAULT_SIM_PATHS);
            if *trace {
                simulate_traces(&model, &targets, &s, &cfg, out)
            } else {
                simulate_estimates(&model, &targets, &s, &cfg, cli.format, out)
            }
        }
        Command::Verify { suite, sim } => {
            let specs = verification::suite_by_name(suite)
                .ok_or_else(|| Failure::usage(format!("unknown suite `{suite}`; expected one of {SUITES:?}")))?;
            let cfg = sim_config(sim, DEFAULT_VERIFY_PATHS);
            let report = verification::run_suite(&specs, &cfg)?;
            let text = match cli.format {
                Format::Csv => report.to_csv(),
                Format::Pretty => report.to_pretty(),
            };
            emit(out, &text)?;
            if report.passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("{} of {} checks failed", report.failures(), report.results.len());
                Ok(ExitCode::from(1))
            }
        }
        Command::Sweep {
            identities,
            var,
            from,
            to,
            steps,
            scenario: sa,
        } => {
            let ids = identities
                .split(',')
                .map(|t| t.trim().parse::<Identity>())
                .collect::<Result<Vec<_>, _>>()?;
            let model = load_model(&cli.model)?;
            sweep(&model, &ids, var, *from, *to, *steps, sa, cli.format, out)
        }
    }
}

fn simulate_estimates(
    model: &LevyModel,
    targets: &[Target],
    s: &Scenario,
    cfg: &SimConfig,
    format: Format,
    out: Option<&Path>,
) -> Outcome {
    let reqs: Vec<Request> = targets.iter().map(|&target| Request { target, scenario: *s }).collect();
    let est = simulate::estimate_many(model, &reqs, cfg)?;
    let mut rows = vec![header("target", &["mean", "std_error", "n", "analytic", "bias_note"])];
    for (t, e) in targets.iter().zip(&est) {
        let analytic = evaluate(model, t.identity(), s).map_or_else(|_| String::new(), |v| v.value.to_string());
        rows.push(
            std::iter::once(t.name().to_string())
                .chain(scenario_cells(s))
                .chain([
                    e.mean.to_string(),
                    e.std_error.to_string(),
                    e.n.to_string(),
                    analytic,
                    e.bias_note.clone(),
                ])
                .collect(),
        );
    }
    emit(out, &table(format, &rows)?)?;
    Ok(ExitCode::SUCCESS)
}

fn simulate_traces(model: &LevyModel, targets: &[Target], s: &Scenario, cfg: &SimConfig, out: Option<&Path>) -> Outcome {
    let mode = targets[0].mode();
    if targets.iter().any(|t| t.mode() != mode) {
        return Err(Failure::usage("traced targets must share one path mode"));
    }
    for &target in targets {
        simulate::check_request(model, &Request { target, scenario: *s }, cfg)?;
    }
    let mut text = String::new();
    for path in 0..cfg.n_paths {
        let o = simulate::simulate_path(model, s, mode, cfg, path)?;
        text.push_str(&format!(
            "# path {path} mode {mode:?} stop {:?} at {} injections {} dividends {}\n",
            o.stop_reason, o.stop_time, o.discounted_injections, o.discounted_dividends
        ));
        for e in &o.log {
            text.push_str(&e.to_string());
            text.push('\n');
        }
    }
    emit(out, &text)?;
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    model: &LevyModel,
    ids: &[Identity],
    var: &str,
    from: f64,
    to: f64,
    steps: usize,
    sa: &ScenarioArgs,
    format: Format,
    out: Option<&Path>,
) -> Outcome {
    if !(from.is_finite() && to.is_finite()) {
        return Err(Failure::usage("sweep bounds must be finite"));
    }
    if steps == 0 {
        return Err(Failure::usage("sweep needs at least one grid point"));
    }
    if steps > 1 && from == to {
        return Err(Failure::usage(format!("degenerate grid: from = to = {from} with {steps} steps")));
    }
    if steps == 1 && from != to {
        return Err(Failure::usage("a one-point grid needs from = to"));
    }
    let set: fn(&mut ScenarioArgs, f64) = match var {
        "q" => |s, v| s.q = v,
        "r" => |s, v| s.r = v,
        "a" => |s, v| s.a = v,
        "b" => |s, v| s.b = v,
        "x" => |s, v| s.x = v,
        "theta" => |s, v| s.theta = v,
        other => return Err(Failure::usage(format!("cannot sweep `{other}`; expected q, r, a, b, x or theta"))),
    };
    let mut rows = vec![std::iter::once(var.to_string())
        .chain(ids.iter().map(|i| i.name().to_string()))
        .collect::<Vec<_>>()];
    let mut failures = 0;
    for k in 0..steps {
        let v = if steps == 1 {
            from
        } else {
            from + (to - from) * k as f64 / (steps - 1) as f64
        };
        let mut args = *sa;
        set(&mut args, v);
        let s = scenario(&args)?;
        let mut row = vec![v.to_string()];
        for &id in ids {
            match evaluate(model, id, &s) {
                Ok(val) => row.push(val.value.to_string()),
                Err(e) => {
                    eprintln!("{var} = {v}: {id}: {e}");
                    failures += 1;
                    row.push("NaN".into());
                }
            }
        }
        rows.push(row);
    }
    emit(out, &table(format, &rows)?)?;
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
