//! `ksineq`: verify Kochen–Specker proofs and derive the inequalities they
//! imply.
//!
//! Exit codes: 0 verified/derived, 2 not a KS proof, 3 input error,
//! 4 search budget exceeded.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ksineq::assign::{BoundMode, ClassicalBound, SearchConfig, DEFAULT_NODE_CAP};
use ksineq::catalog;
use ksineq::derive::Form;
use ksineq::exec::Execution;
use ksineq::io::{InputError, Loaded, Mode, ProofFile};
use ksineq::pipeline::{self, Options, PipelineError};

#[derive(Parser)]
#[command(name = "ksineq", version, about = "Verify Kochen-Specker proofs and derive noncontextuality inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the input is a Kochen-Specker proof.
    Verify(Run),
    /// Derive, certify and print the inequality.
    Derive(Run),
    /// Compute the exact classical maximum of F by branch and bound.
    Bound(Run),
    /// Write the machine-readable derivation record.
    Export(Run),
    /// List built-in proofs, or print one as a proof file.
    Catalog {
        /// Entry to print.
        name: Option<String>,
    },
}

#[derive(Args)]
struct Run {
    /// Built-in proof to load.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    catalog: Option<String>,
    /// Proof file to load.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Presentation form of the inequality.
    #[arg(long, default_value = "projector")]
    form: Form,
    /// Construction to use; overrides the file's mode.
    #[arg(long)]
    mode: Option<Mode>,
    /// Compute the exact classical maximum instead of certifying F <= -1.
    #[arg(long)]
    exact_bound: bool,
    /// Node cap for exact branch and bound.
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    node_cap: u64,
    /// Write the derivation record here.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Run every search on one thread.
    #[arg(long)]
    sequential: bool,
}

impl Run {
    fn options(&self, exact: bool) -> Options {
        let execution = if self.sequential { Execution::Sequential } else { Execution::default() };
        Options {
            mode: self.mode,
            form: self.form,
            bound: if exact || self.exact_bound { BoundMode::Exact } else { BoundMode::CertifyOnly },
            config: SearchConfig { execution, node_cap: self.node_cap },
        }
    }

    fn load(&self) -> Result<Loaded, PipelineError> {
        let file = match (&self.catalog, &self.input) {
            (Some(name), _) => catalog::find(name)
                .ok_or_else(|| {
                    PipelineError::Usage(format!(
                        "unknown catalog entry '{name}' (known: {})",
                        catalog::names().join(", ")
                    ))
                })?
                .file(),
            (None, Some(path)) => ProofFile::read(path)?,
            (None, None) => return Err(PipelineError::Usage("give --catalog or --input".into())),
        };
        Ok(file.load()?)
    }
}

fn write_output(path: &PathBuf, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text)
        .map_err(|e| PipelineError::Input(InputError { location: path.display().to_string(), message: e.to_string() }))
}

fn verify(run: &Run) -> Result<(), PipelineError> {
    let loaded = run.load()?;
    let opts = run.options(false);
    let v = pipeline::verify(&loaded, &opts)?;
    print!("{}", pipeline::render_certificate(&loaded.set, &v.certificate));
    if !v.bases.is_empty() || v.edge_count > 0 {
        println!("orthogonal pairs: {}, bases: {}", v.edge_count, v.bases.len());
    }
    if !v.certificate.is_proof() {
        return Err(PipelineError::NotKsProof(Box::new(v.certificate)));
    }
    if loaded.file.derivation.is_some() {
        pipeline::check_record(&loaded, &opts)?;
        println!("record: matches a fresh derivation");
    }
    Ok(())
}

fn derive(run: &Run) -> Result<(), PipelineError> {
    let loaded = run.load()?;
    let d = derive_or_explain(&loaded, &run.options(false))?;
    print!("{}", pipeline::render_derivation(&loaded, &d));
    if let Some(path) = &run.output {
        write_output(path, &pipeline::export(&loaded, &d)?.to_toml())?;
    }
    Ok(())
}

fn bound(run: &Run) -> Result<(), PipelineError> {
    let loaded = run.load()?;
    let opts = run.options(true);
    let d = derive_or_explain(&loaded, &opts)?;
    let ClassicalBound::Exact { max, argmax, nodes } = &d.inequality.certificates.classical else {
        unreachable!("bound always runs the exact search")
    };
    println!("max F = {max}");
    println!("argmax: {}", argmax.render(&loaded.set));
    println!("nodes: {nodes} (informational)");
    println!("inequality ({} form): {}", d.presentation.form, d.presentation.render(&loaded.set));
    println!("quantum value: {}", d.presentation.quantum_value);
    if let Some(path) = &run.output {
        write_output(path, &pipeline::export(&loaded, &d)?.to_toml())?;
    }
    Ok(())
}

fn export(run: &Run) -> Result<(), PipelineError> {
    let loaded = run.load()?;
    let d = derive_or_explain(&loaded, &run.options(false))?;
    let text = pipeline::export(&loaded, &d)?.to_toml();
    match &run.output {
        Some(path) => write_output(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn list_catalog(name: Option<&str>) -> Result<(), PipelineError> {
    match name {
        None => {
            for e in catalog::entries() {
                println!("{:<18} {}", e.name, e.description());
            }
            Ok(())
        }
        Some(n) => {
            let e = catalog::find(n).ok_or_else(|| {
                PipelineError::Usage(format!("unknown catalog entry '{n}' (known: {})", catalog::names().join(", ")))
            })?;
            print!("{}", e.source);
            Ok(())
        }
    }
}

/// Derivation that prints the refuting certificate, witness included, when
/// the input is not a proof.
fn derive_or_explain(loaded: &Loaded, opts: &Options) -> Result<pipeline::Derivation, PipelineError> {
    pipeline::derive(loaded, opts).inspect_err(|e| {
        if let Some(cert) = e.certificate() {
            print!("{}", pipeline::render_certificate(&loaded.set, cert));
        }
    })
}

/// One-line error record on stderr.
fn report(e: &PipelineError) {
    let message = e.to_string().replace('"', "'");
    eprintln!("error: kind={} exit={} message=\"{}\"", e.kind(), e.exit_code(), message);
    if let PipelineError::Input(inner) = e {
        eprintln!("  at {}: {}", inner.location, inner.message);
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version go to stdout with status 0; misuse is an input error
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Verify(run) => verify(run),
        Command::Derive(run) => derive(run),
        Command::Bound(run) => bound(run),
        Command::Export(run) => export(run),
        Command::Catalog { name } => list_catalog(name.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
