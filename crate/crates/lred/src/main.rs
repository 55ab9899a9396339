use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, ValueEnum};

use lred::run::{run, to_json, Command, Outcome, EXIT_ERROR};
use lred::spec::{load, load_candidates, LoadedProblem};
use lred::{corpus_files, report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Symmetry reduction of differential equations, including non-transverse actions.
#[derive(Debug, Parser)]
#[command(name = "lred", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Problem files; with none, the whole fixture corpus
    files: Vec<PathBuf>,
    #[arg(long)]
    max_degree: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_num: Option<f64>,
    #[arg(long)]
    tol_fd: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Fixtures processed in parallel
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Extra residual candidates (JSON array of fields)
    #[arg(long)]
    candidates: Option<PathBuf>,
}

fn apply_flags(lp: &mut LoadedProblem, cli: &Cli) {
    let o = &mut lp.problem.options;
    if let Some(d) = cli.max_degree {
        o.max_degree = d;
    }
    if let Some(s) = cli.seed {
        o.seed = s;
        lp.problem.numeric = lred_core::numcheck::NumericEnv::new(lp.problem.numeric.defs.clone(), lp.problem.numeric.params.clone(), s);
    }
    if let Some(t) = cli.tol_num {
        o.tol_num = t;
    }
    if let Some(t) = cli.tol_fd {
        o.tol_fd = t;
    }
}

fn one(path: &PathBuf, cli: &Cli) -> (String, i32, f64) {
    let mut lp = match load(path) {
        Ok(lp) => lp,
        Err(e) => return (format!("{e}\n"), EXIT_ERROR, 0.0),
    };
    apply_flags(&mut lp, cli);
    let extra = match &cli.candidates {
        Some(c) => match load_candidates(c, &lp.problem) {
            Ok(v) => v,
            Err(e) => return (format!("{e}\n"), EXIT_ERROR, 0.0),
        },
        None => Vec::new(),
    };
    let Outcome { report, exit, seconds } = run(cli.command, &lp, &extra);
    let text = match cli.format {
        Format::Json => to_json(&report),
        Format::Text => report::render_text(&report),
    };
    (text, exit, seconds)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let files = if cli.files.is_empty() {
        match corpus_files() {
            Ok(f) => f,
            Err(e) => {
                eprintln!("cannot read the fixture corpus: {e}");
                return ExitCode::from(EXIT_ERROR as u8);
            }
        }
    } else {
        cli.files.clone()
    };
    let results: Vec<Mutex<Option<(String, i32, f64)>>> = files.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..cli.jobs.max(1).min(files.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= files.len() {
                    break;
                }
                *results[i].lock().expect("result slot") = Some(one(&files[i], &cli));
            });
        }
    });
    let mut code = 0;
    for (path, r) in files.iter().zip(results) {
        let (text, exit, seconds) = r.into_inner().expect("result slot").expect("every fixture ran");
        print!("{text}");
        if cli.format == Format::Text {
            println!("({} finished in {seconds:.2}s, exit {exit})\n", path.display());
        }
        code = match (code, exit) {
            (EXIT_ERROR, _) | (_, EXIT_ERROR) => EXIT_ERROR,
            (a, b) => a.max(b),
        };
    }
    ExitCode::from(code as u8)
}
