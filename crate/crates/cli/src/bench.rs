//! Benchmark harness: runs a directory of QDIMACS instances against a
//! matrix of solver configurations, in parallel, and writes one CSV row per
//! (instance, configuration) pair.

use clap::Args;
use qsolve::engine::{solve, SolverConfig, Verdict};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Mutex;

#[derive(Args)]
pub struct BenchArgs {
    /// Directory containing `.qdimacs` files.
    #[arg(long)]
    dir: PathBuf,

    /// Output CSV file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Comma-separated configuration names (default: the full matrix
    /// dq,dq-ncl,dq-ncu,dq-n,dq-nq,dq-lin,dq-linldq).
    #[arg(long, value_delimiter = ',')]
    configs: Vec<String>,

    /// Worker threads.
    #[arg(long, default_value_t = 4)]
    jobs: usize,

    /// Per-run wall-clock limit in seconds.
    #[arg(long, value_name = "S")]
    max_time: Option<f64>,

    /// Per-run conflict limit.
    #[arg(long, value_name = "N")]
    max_conflicts: Option<u64>,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

struct Task {
    instance: String,
    path: PathBuf,
    config: String,
}

struct Row {
    instance: String,
    config: String,
    verdict: &'static str,
    seconds: f64,
    conflicts: u64,
    decisions: u64,
    gen_cl_hits: u64,
    gen_cu_hits: u64,
}

pub fn run(args: &BenchArgs) -> ExitCode {
    let configs: Vec<String> = if args.configs.is_empty() {
        SolverConfig::preset_names()
            .iter()
            .map(|s| s.to_string())
            .collect()
    } else {
        args.configs.clone()
    };
    for c in &configs {
        if SolverConfig::preset(c).is_none() {
            eprintln!("error: unknown configuration `{c}`");
            return ExitCode::from(1);
        }
    }

    let mut paths: Vec<PathBuf> = match std::fs::read_dir(&args.dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "qdimacs"))
            .collect(),
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.dir.display());
            return ExitCode::from(1);
        }
    };
    paths.sort();
    if paths.is_empty() {
        eprintln!("error: no .qdimacs files in {}", args.dir.display());
        return ExitCode::from(1);
    }

    let mut tasks: Vec<Task> = Vec::new();
    for p in &paths {
        let name = p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        for c in &configs {
            tasks.push(Task {
                instance: name.clone(),
                path: p.clone(),
                config: c.clone(),
            });
        }
    }

    let queue = Mutex::new(tasks.into_iter());
    let rows: Mutex<Vec<Row>> = Mutex::new(Vec::new());
    let errors: Mutex<Vec<String>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..args.jobs.max(1) {
            scope.spawn(|| loop {
                let task = { queue.lock().unwrap().next() };
                let Some(task) = task else { break };
                match run_one(&task, args) {
                    Ok(row) => rows.lock().unwrap().push(row),
                    Err(e) => errors.lock().unwrap().push(e),
                }
            });
        }
    });
    let errors = errors.into_inner().unwrap();
    if !errors.is_empty() {
        for e in &errors {
            eprintln!("error: {e}");
        }
        return ExitCode::from(1);
    }

    let mut rows = rows.into_inner().unwrap();
    rows.sort_by(|a, b| (&a.instance, &a.config).cmp(&(&b.instance, &b.config)));
    let mut csv = String::from(
        "instance,config,verdict,seconds,conflicts,decisions,gen_cl_hits,gen_cu_hits\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{:.3},{},{},{},{}\n",
            r.instance,
            r.config,
            r.verdict,
            r.seconds,
            r.conflicts,
            r.decisions,
            r.gen_cl_hits,
            r.gen_cu_hits
        ));
    }
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, csv) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{csv}"),
    }
    ExitCode::from(0)
}

fn run_one(task: &Task, args: &BenchArgs) -> Result<Row, String> {
    let bytes = std::fs::read(&task.path)
        .map_err(|e| format!("cannot read {}: {e}", task.path.display()))?;
    let (psi, _) = qsolve::qdimacs::parse(&bytes)
        .map_err(|e| format!("{}: {e}", task.path.display()))?;
    let mut cfg = SolverConfig::preset(&task.config).expect("validated earlier");
    cfg.max_seconds = args.max_time;
    cfg.max_conflicts = args.max_conflicts;
    cfg.seed = args.seed;
    let start = std::time::Instant::now();
    let r = solve(&psi, cfg);
    Ok(Row {
        instance: task.instance.clone(),
        config: task.config.clone(),
        verdict: match r.verdict {
            Verdict::Sat => "SAT",
            Verdict::Unsat => "UNSAT",
            Verdict::Unknown(_) => "UNKNOWN",
        },
        seconds: start.elapsed().as_secs_f64(),
        conflicts: r.stats.conflicts,
        decisions: r.stats.decisions,
        gen_cl_hits: r.stats.gen_cl_successes,
        gen_cu_hits: r.stats.gen_cu_successes,
    })
}
