use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use umlk::authoring::load_exercise;
use umlk::model::ExerciseSpec;
use umlk::store::Store;
use umlk::{evaluate_exercise, parse_document, EvaluationReport, ParseError};

const EXIT_IO: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_INVALID: u8 = 3;

#[derive(Parser)]
#[command(
    name = "umlk",
    version,
    about = "Grade UML use case diagrams against reference solutions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grade one diagram, or every *.json file in a directory.
    Grade {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check a solution file and list its issues.
    Validate { path: PathBuf },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "UMLK_DATA_DIR", default_value = "data")]
        data: PathBuf,
        #[arg(long, env = "UMLK_BIND", default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Ndjson,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Grade {
            solution,
            input,
            format,
        } => grade(&solution, &input, format),
        Command::Validate { path } => validate(&path),
        Command::Serve { data, bind } => serve(data, bind),
    };
    ExitCode::from(code)
}

fn read(path: &Path) -> Result<String, u8> {
    fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_IO
    })
}

fn load_solution(path: &Path) -> Result<ExerciseSpec, u8> {
    load_exercise(&read(path)?).map_err(|issues| {
        eprintln!("error: {} is not a valid solution file", path.display());
        for issue in issues {
            eprintln!("  {}", issue_line(&issue));
        }
        EXIT_INVALID
    })
}

fn issue_line(issue: &umlk::model::AuthoringIssue) -> String {
    let code = serde_json::to_value(issue.code).ok();
    let code = code.as_ref().and_then(|v| v.as_str()).unwrap_or("?");
    match &issue.ref_id {
        Some(r) => format!("{code} [{r}] {}", issue.detail),
        None => format!("{code} {}", issue.detail),
    }
}

fn collect_inputs(input: &Path) -> io::Result<Vec<PathBuf>> {
    if !input.is_dir() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut paths = Vec::new();
    for entry in fs::read_dir(input)? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

enum Graded {
    Report(Box<EvaluationReport>),
    ParseFailed(ParseError),
    Unreadable(io::Error),
}

fn grade(solution: &Path, input: &Path, format: Format) -> u8 {
    let spec = match load_solution(solution) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let paths = match collect_inputs(input) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot list {}: {e}", input.display());
            return EXIT_IO;
        }
    };
    let results: Vec<(PathBuf, Graded)> = paths
        .into_par_iter()
        .map(|path| {
            let graded = match fs::read_to_string(&path) {
                Err(e) => Graded::Unreadable(e),
                Ok(text) => match parse_document(&text) {
                    Ok(doc) => Graded::Report(Box::new(evaluate_exercise(&spec, &doc))),
                    Err(e) => Graded::ParseFailed(e),
                },
            };
            (path, graded)
        })
        .collect();

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut csv = matches!(format, Format::Csv).then(|| {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["path", "solution", "completeness", "syntactic", "semantic"])
            .expect("in-memory write");
        w
    });
    let mut code = 0;
    for (path, graded) in &results {
        let shown = path.display().to_string();
        let report = match graded {
            Graded::Report(r) => r,
            Graded::ParseFailed(e) => {
                eprintln!("{shown}: {} {}", e.code.as_str(), e);
                code = code.max(EXIT_PARSE);
                continue;
            }
            Graded::Unreadable(e) => {
                eprintln!("error: cannot read {shown}: {e}");
                code = EXIT_IO;
                continue;
            }
        };
        let written = match format {
            Format::Ndjson => writeln!(out, "{}", json!({"path": shown, "report": report})),
            Format::Csv => {
                let w = csv.as_mut().expect("csv writer");
                w.write_record([
                    shown.clone(),
                    report.solution_index.to_string(),
                    format!("{:?}", report.completeness.overall),
                    report.syntactic.len().to_string(),
                    report.semantic.len().to_string(),
                ])
                .map_err(io::Error::other)
            }
            Format::Text => write_text(&mut out, &shown, report),
        };
        if let Err(e) = written {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
    }
    if let Some(w) = csv {
        let bytes = w.into_inner().expect("in-memory flush");
        if let Err(e) = out.write_all(&bytes) {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
    }
    code
}

fn write_text(out: &mut impl Write, path: &str, report: &EvaluationReport) -> io::Result<()> {
    writeln!(
        out,
        "{path}: completeness {:.3}, {} syntactic, {} semantic (solution {})",
        report.completeness.overall,
        report.syntactic.len(),
        report.semantic.len(),
        report.solution_index
    )?;
    for d in report.diagnostics() {
        writeln!(out, "  {} {}", d.rule.as_str(), d.message)?;
    }
    Ok(())
}

fn validate(path: &Path) -> u8 {
    let text = match read(path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    match load_exercise(&text) {
        Ok(spec) => {
            println!("{}: ok ({} solution(s))", path.display(), spec.solutions.len());
            0
        }
        Err(issues) => {
            for issue in &issues {
                println!("{}: {}", path.display(), issue_line(issue));
            }
            EXIT_INVALID
        }
    }
}

fn serve(data: PathBuf, bind: SocketAddr) -> u8 {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(io::stderr)
        .init();
    let store = match Store::open(&data) {
        Ok(s) => Arc::new(s),
        Err(e) => {
            eprintln!("error: cannot open {}: {e}", data.display());
            return EXIT_IO;
        }
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
    };
    runtime.block_on(async {
        let listener = match tokio::net::TcpListener::bind(bind).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: cannot bind {bind}: {e}");
                return EXIT_IO;
            }
        };
        tracing::info!(%bind, data = %data.display(), "listening");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        };
        if let Err(e) = umlk::service::serve(store.clone(), listener, shutdown).await {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
        match store.sync() {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_IO
            }
        }
    })
}
