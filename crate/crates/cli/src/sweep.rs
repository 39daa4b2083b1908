//! Parameter-grid sweeps: the cross product of dotted-key value lists, one
//! isolated engine run per cell, one metrics row per cell.

use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;

use clap::Args;

use uvmsim::log::Metrics;
use uvmsim::{run_scenario, ScenarioConfig};

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Grid spec: semicolon-separated `key=v1,v2,...` lists, crossed.
    #[arg(long)]
    pub grid: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Parallel cells.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Extra fixed overrides applied to every cell.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<String>,
}

/// Parses `key=v1,v2;key2=w1,w2` into axes. An empty spec is an empty grid.
pub fn parse_grid(spec: &str) -> Result<Vec<GridAxis>, String> {
    let mut axes = Vec::new();
    for part in spec.split(';').filter(|p| !p.trim().is_empty()) {
        let (key, values) = part
            .split_once('=')
            .ok_or_else(|| format!("grid axis `{part}` is not key=v1,v2,..."))?;
        let values: Vec<String> = values
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(format!("grid axis `{key}` has no values"));
        }
        axes.push(GridAxis {
            key: key.trim().to_string(),
            values,
        });
    }
    Ok(axes)
}

/// All index combinations of the axes, in row-major order.
pub fn grid_cells(axes: &[GridAxis]) -> Vec<Vec<(String, String)>> {
    if axes.is_empty() {
        return Vec::new();
    }
    let mut cells = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(cells.len() * axis.values.len());
        for cell in &cells {
            for v in &axis.values {
                let mut c = cell.clone();
                c.push((axis.key.clone(), v.clone()));
                next.push(c);
            }
        }
        cells = next;
    }
    cells
}

pub struct CellResult {
    pub index: usize,
    pub assignments: Vec<(String, String)>,
    pub outcome: Result<Metrics, String>,
}

/// Runs every cell (optionally in parallel) and returns results in grid
/// order. Per-cell failures are recorded; the sweep continues.
pub fn run_grid(
    base: &ScenarioConfig,
    cells: Vec<Vec<(String, String)>>,
    jobs: usize,
) -> Vec<CellResult> {
    let jobs = jobs.max(1);
    let work: Vec<(usize, Vec<(String, String)>)> = cells.into_iter().enumerate().collect();
    let queue = Mutex::new(work.into_iter());
    let results = Mutex::new(Vec::new());

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let item = queue.lock().unwrap().next();
                let Some((index, assignments)) = item else {
                    break;
                };
                let mut cfg = base.clone();
                let mut outcome = Ok(());
                for (key, value) in &assignments {
                    if let Err(e) = cfg.apply_override(key, value) {
                        outcome = Err(e);
                        break;
                    }
                }
                let outcome = match outcome {
                    Err(e) => Err(e),
                    Ok(()) => run_scenario(&cfg)
                        .map(|log| log.metrics())
                        .map_err(|e| e.to_string()),
                };
                results.lock().unwrap().push(CellResult {
                    index,
                    assignments,
                    outcome,
                });
            });
        }
    });

    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|r| r.index);
    results
}

/// Summary CSV: one row per cell with the grid keys, status and headline
/// metrics.
pub fn summary_csv(axes: &[GridAxis], results: &[CellResult]) -> String {
    let mut out = String::new();
    for axis in axes {
        out.push_str(&axis.key);
        out.push(',');
    }
    out.push_str(
        "status,final_position_error,final_orientation_error,max_envelope_ratio,\
         min_clearance,lyapunov_violations,observer_settle_time,estimation_settle_time\n",
    );
    for r in results {
        for (_, v) in &r.assignments {
            out.push_str(v);
            out.push(',');
        }
        match &r.outcome {
            Ok(m) => {
                let opt = |x: Option<f64>| {
                    x.map_or(String::from(""), |v| format!("{v:?}"))
                };
                out.push_str(&format!(
                    "ok,{:?},{:?},{:?},{:?},{},{},{}\n",
                    m.final_position_error,
                    m.final_orientation_error,
                    m.max_envelope_ratio,
                    m.min_clearance,
                    m.lyapunov_violations,
                    opt(m.observer_settle_time),
                    opt(m.estimation_settle_time),
                ));
            }
            Err(e) => {
                out.push_str(&format!("error: {},,,,,,,\n", e.replace(',', ";")));
            }
        }
    }
    out
}

pub fn cmd_sweep(args: &SweepArgs) -> u8 {
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return 2;
        }
    };
    let mut base = match ScenarioConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: config does not parse: {e}");
            return 2;
        }
    };
    if let Err(code) = crate::apply_overrides(&mut base, &args.overrides) {
        return code;
    }
    let axes = match parse_grid(&args.grid) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cells = grid_cells(&axes);
    let total = cells.len();
    let results = run_grid(&base, cells, args.jobs);

    let dir = crate::resolve_out(&args.out);
    if let Err(e) = fs::create_dir_all(&dir) {
        eprintln!("error: creating {}: {e}", dir.display());
        return 1;
    }
    let path = dir.join("sweep_summary.csv");
    if let Err(e) = fs::write(&path, summary_csv(&axes, &results)) {
        eprintln!("error: writing {}: {e}", path.display());
        return 1;
    }
    let failures = results.iter().filter(|r| r.outcome.is_err()).count();
    println!(
        "sweep complete: {total} cells, {failures} failed; summary in {}",
        path.display()
    );
    0
}
