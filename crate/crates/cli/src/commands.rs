use std::fmt;
use std::path::Path;

use drawcouple::bounds::{chernoff_upper_bound, serfling_variance, subgaussian_tail_bound, variance_factor};
use drawcouple::coupling::{polya_coupling, screening_coupling};
use drawcouple::harness::suites::{diagnostics_suite, theorem1_suite, theorem2_suite, theorem3_suite, Grid};
use drawcouple::harness::{mc_tail_check, McConfig, Verdict, VerificationReport};
use drawcouple::oracle::{cx_dominates, exact_polya_dist, exact_sample_dist, icx_dominates, SampleMode};
use drawcouple::samplers::{draw_polya, draw_with_replacement, draw_without_replacement};
use drawcouple::{Error, Population64, RngStreamSpec};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    BoundArgs, Command, CoupleArgs, ExactArgs, GridArg, Mode, OrderArgs, Output, Run, SampleArgs, Suite, TailArgs,
    VerifyArgs,
};

/// A failure that maps to exit status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<Error> for UsageError {
    fn from(e: Error) -> Self {
        UsageError(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

pub enum Outcome {
    Success,
    Failed,
}

pub fn execute(command: Command) -> Result<Outcome, UsageError> {
    match command {
        Command::Sample(a) => sample(a),
        Command::Couple(a) => couple(a),
        Command::Exact(a) => exact(a),
        Command::OrderCheck(a) => order_check(a),
        Command::Bound(a) => bound(a),
        Command::Tail(a) => tail(a),
        Command::Verify(a) => verify(a),
    }
}

fn load(path: &Path) -> Result<Population64, UsageError> {
    Population64::load(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn seed(run: &Run) -> Result<u64, UsageError> {
    run.seed.ok_or_else(|| usage("--seed is required for stochastic commands"))
}

fn need(value: Option<u64>, flag: &str) -> Result<u64, UsageError> {
    value.ok_or_else(|| usage(format!("{flag} is required with --mode polya")))
}

fn emit(output: &Output, value: &impl Serialize) -> Result<(), UsageError> {
    let mut text = serde_json::to_string(value).map_err(|e| usage(e.to_string()))?;
    text.push('\n');
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_reports(output: &Output, reports: &[VerificationReport]) -> Result<Outcome, UsageError> {
    emit(output, &reports)?;
    let count = |v| reports.iter().filter(|r| r.verdict == v).count();
    let failed = count(Verdict::Fail);
    eprintln!(
        "{} reports: {} pass, {failed} fail, {} inconclusive",
        reports.len(),
        count(Verdict::Pass),
        count(Verdict::Inconclusive)
    );
    for r in reports.iter().filter(|r| r.failed()) {
        eprintln!("  FAIL {} statistic={} reference={} ci={}", r.check, r.statistic, r.reference, r.ci);
    }
    Ok(if failed > 0 { Outcome::Failed } else { Outcome::Success })
}

fn mc_config(run: &Run, replicates: usize) -> Result<McConfig, UsageError> {
    if run.threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    Ok(McConfig::new(replicates, seed(run)?).threads(run.threads))
}

fn sample(a: SampleArgs) -> Result<Outcome, UsageError> {
    let pop = load(&a.pop)?;
    let master = seed(&a.run)?;
    if a.mode == Mode::Polya {
        need(a.d, "--d")?;
    }
    let mut samples = Vec::with_capacity(a.replicates);
    let mut values = Vec::with_capacity(a.replicates);
    for r in 0..a.replicates as u64 {
        let spec = RngStreamSpec::new(master, r);
        let ids = match a.mode {
            Mode::With => draw_with_replacement(&pop, a.n, spec),
            Mode::Without => draw_without_replacement(&pop, a.n, spec)?,
            Mode::Polya => draw_polya(&pop, need(a.d, "--d")?, a.n, spec)?,
        };
        values.push(pop.cumulative_value(&ids)?);
        samples.push(ids);
    }
    emit(
        &a.output,
        &json!({"mode": mode_name(a.mode), "n": a.n, "seed": master, "samples": samples, "values": values}),
    )?;
    Ok(Outcome::Success)
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::With => "with",
        Mode::Without => "without",
        Mode::Polya => "polya",
    }
}

fn couple(a: CoupleArgs) -> Result<Outcome, UsageError> {
    let pop = load(&a.pop)?;
    let master = seed(&a.run)?;
    let mut out: Vec<Value> = Vec::with_capacity(a.replicates);
    for r in 0..a.replicates as u64 {
        let spec = RngStreamSpec::new(master, r);
        let record = match a.mode {
            Mode::Polya => {
                let trace = polya_coupling(&pop, need(a.d, "--d")?, need(a.big_d, "--D")?, a.n, spec)?;
                serde_json::to_value(trace)
            }
            Mode::Without => serde_json::to_value(screening_coupling(&pop, a.n, spec)?),
            Mode::With => return Err(usage("couple takes --mode without (screening) or --mode polya")),
        };
        out.push(record.map_err(|e| usage(e.to_string()))?);
    }
    if out.len() == 1 {
        emit(&a.output, &out[0])?;
    } else {
        emit(&a.output, &out)?;
    }
    Ok(Outcome::Success)
}

fn exact(a: ExactArgs) -> Result<Outcome, UsageError> {
    let pop = load(&a.pop)?;
    let law = match a.mode {
        Mode::With => exact_sample_dist(&pop, a.n, SampleMode::With)?,
        Mode::Without => exact_sample_dist(&pop, a.n, SampleMode::Without)?,
        Mode::Polya => exact_polya_dist(&pop, need(a.d, "--d")?, a.n)?,
    };
    emit(&a.output, &law)?;
    Ok(Outcome::Success)
}

fn order_check(a: OrderArgs) -> Result<Outcome, UsageError> {
    let pop = load(&a.pop)?;
    let (order, params) = match a.mode {
        Mode::Polya => {
            let (d, big_d) = (need(a.d, "--d")?, need(a.big_d, "--D")?);
            if d >= big_d {
                return Err(usage("order-check needs d < D"));
            }
            let w = exact_polya_dist(&pop, d, a.n)?;
            let z = exact_polya_dist(&pop, big_d, a.n)?;
            (cx_dominates(&w, &z, a.tol), json!({"order": "cx", "n": a.n, "d": d, "D": big_d}))
        }
        Mode::With | Mode::Without => {
            let x = exact_sample_dist(&pop, a.n, SampleMode::Without)?;
            let y = exact_sample_dist(&pop, a.n, SampleMode::With)?;
            (icx_dominates(&x, &y, a.tol), json!({"order": "icx", "n": a.n}))
        }
    };
    let report = VerificationReport::upper_bound("order_check", params, order.violation(), 0.0, a.tol)
        .info(json!({"holds": order.holds, "witness": order.witness}));
    emit_reports(&a.output, &[report])
}

fn bound(a: BoundArgs) -> Result<Outcome, UsageError> {
    let pop = load(&a.pop)?;
    let stats = pop.stats();
    let size = pop.len();
    let (v, serfling) = match variance_factor(&stats, size, a.n) {
        Ok(v) => (Some(v), None),
        Err(Error::UniformWeights) => (None, Some(serfling_variance(stats.delta, size, a.n)?)),
        Err(e) => return Err(e.into()),
    };
    let mut out = json!({"delta": stats.delta, "alpha": stats.alpha, "v": v, "serfling": serfling});
    if !a.t.is_empty() {
        let factor = v.or(serfling).unwrap_or(0.0);
        let tails = a
            .t
            .iter()
            .map(|&t| Ok(json!({"t": t, "bound": subgaussian_tail_bound(factor, t)?})))
            .collect::<Result<Vec<_>, Error>>()?;
        out["tail"] = json!(tails);
    }
    if let Some(level) = a.a {
        out["chernoff"] = serde_json::to_value(chernoff_upper_bound(&pop, a.n, level)?).map_err(|e| usage(e.to_string()))?;
    }
    emit(&a.output, &out)?;
    Ok(Outcome::Success)
}

fn tail(a: TailArgs) -> Result<Outcome, UsageError> {
    let pop = load(&a.pop)?;
    let cfg = mc_config(&a.run, a.replicates)?;
    let reports = mc_tail_check(&pop, a.n, &a.t, &cfg)?;
    emit_reports(&a.output, &reports)
}

fn verify(a: VerifyArgs) -> Result<Outcome, UsageError> {
    let cfg = mc_config(&a.run, a.replicates)?;
    let grid = match a.grid {
        GridArg::Small => Grid::Small,
        GridArg::Full => Grid::Full,
    };
    let reports = match a.suite {
        Suite::Theorem1 => theorem1_suite(grid, a.tol, &cfg)?,
        Suite::Theorem2 => theorem2_suite(&cfg)?,
        Suite::Theorem3 => theorem3_suite(a.tol, &cfg)?,
        Suite::Diagnostics => diagnostics_suite(&cfg)?,
    };
    emit_reports(&a.output, &reports)
}
