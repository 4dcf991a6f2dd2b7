//! `condsep`: file-driven front end to condsep-core.
//!
//! Every run writes one JSON document to `--out` (or stdout) and a short
//! summary to stderr. Exit statuses:
//!
//! | code | meaning                                              |
//! |------|------------------------------------------------------|
//! | 0    | success, separable-certified, verification passed     |
//! | 1    | entangled-certified (including a failed PPT test)    |
//! | 2    | inconclusive search, or verification failed          |
//! | 64   | unreadable or malformed input, bad command line      |
//! | 65   | input violates a density-matrix or weight invariant  |
//! | 70   | numerical failure on valid input (singular σ_e, ...) |

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{Map, Value};

use condsep_core::io::{read_decomposition, read_density, read_distribution, DecompositionFile, MatrixFile};
use condsep_core::search::{ppt_check_with, SearchConfig, SearchReport, Verdict};
use condsep_core::states::{
    bell_state, build_extension, dedegenerate_weights, random_density, random_separable_with_rank, werner_state,
    ExtensionState,
};
use condsep_core::theorem1::extract;
use condsep_core::{
    classical_cmi, classify, partial_trace, quantum_cmi, saturation_residual, search_extension, verify_extension,
    von_neumann_entropy, DensityMatrix, Error, SubsystemDims, Tolerances,
};

const EXIT_OK: u8 = 0;
const EXIT_ENTANGLED: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_PARSE: u8 = 64;
const EXIT_VALIDATION: u8 = 65;
const EXIT_NUMERICAL: u8 = 70;

#[derive(Parser, Debug)]
#[command(name = "condsep", version, about = "Separability certificates for bipartite density matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Master seed for random generation and search restarts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Tolerance override, e.g. `--tol cond2=1e-8`. Repeatable.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,

    /// Write the result document here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Record the residual after every sweep of every search restart.
    #[arg(long, global = true)]
    trace: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Von Neumann entropy (bits) of a state.
    Entropy {
        #[arg(long)]
        rho: PathBuf,
    },
    /// Conditional mutual information of σ on (e, x, y), or of a joint distribution.
    Cmi {
        #[arg(long, conflicts_with = "distribution", required_unless_present = "distribution")]
        sigma: Option<PathBuf>,
        #[arg(long)]
        distribution: Option<PathBuf>,
    },
    /// Conditionally separable extension of a separable decomposition.
    BuildExtension {
        #[arg(long)]
        decomposition: PathBuf,
    },
    /// Checks the four extension conditions for σ against ρ (default: tr_e σ).
    Verify {
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        rho: Option<PathBuf>,
    },
    /// Recovers a separable decomposition from an extension σ.
    Extract {
        #[arg(long)]
        sigma: PathBuf,
    },
    /// Positive-partial-transpose test.
    Ppt {
        #[arg(long)]
        rho: PathBuf,
    },
    /// Searches for a separable decomposition.
    Search(SearchArgs),
    /// PPT test, then the search when the state is PPT.
    Classify(SearchArgs),
    /// Generates states and decompositions.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long)]
    rho: PathBuf,
    /// Independent random restarts.
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Ensemble size; defaults to (dx·dy)².
    #[arg(long)]
    terms: Option<usize>,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    /// Largest residual accepted as a separable certificate.
    #[arg(long, default_value_t = 1e-7)]
    residual_target: f64,
    /// Run restarts on one thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Subcommand, Debug)]
enum GenCommand {
    /// Random density matrix G G^H / tr(G G^H).
    Density {
        /// Comma-separated subsystem dimensions.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        /// Comma-separated labels; defaults to x,y or e,x,y by count.
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<String>>,
        /// Rank; defaults to full rank.
        #[arg(long)]
        rank: Option<usize>,
    },
    /// Random separable decomposition, together with the state it represents.
    Separable {
        /// dx,dy
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        terms: usize,
        #[arg(long, default_value_t = 1)]
        factor_rank: usize,
    },
    /// Two-qubit Werner state p |Φ+><Φ+| + (1 − p) I/4.
    Werner {
        #[arg(long)]
        p: f64,
    },
    /// The Bell state |Φ+>.
    Bell,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Entropy { .. } => "entropy",
            Command::Cmi { .. } => "cmi",
            Command::BuildExtension { .. } => "build-extension",
            Command::Verify { .. } => "verify",
            Command::Extract { .. } => "extract",
            Command::Ppt { .. } => "ppt",
            Command::Search(_) => "search",
            Command::Classify(_) => "classify",
            Command::Gen(_) => "gen",
        }
    }

    fn uses_seed(&self) -> bool {
        matches!(
            self,
            Command::Search(_) | Command::Classify(_) | Command::Gen(GenCommand::Density { .. } | GenCommand::Separable { .. })
        )
    }
}

enum Failure {
    Input(String),
    Core(Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) | Failure::Core(Error::Parse(_)) => EXIT_PARSE,
            Failure::Core(e) if e.is_validation() => EXIT_VALIDATION,
            Failure::Core(_) => EXIT_NUMERICAL,
        }
    }

    fn kind(&self) -> &'static str {
        match self.code() {
            EXIT_PARSE => "parse",
            EXIT_VALIDATION => "validation",
            _ => "numerical",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Input(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

struct Outcome {
    payload: Value,
    exit: u8,
    summary: String,
}

#[derive(Serialize)]
struct Document<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    tolerances: &'a Tolerances,
    #[serde(flatten)]
    payload: Map<String, Value>,
    exit_code: u8,
    timing: Timing,
}

#[derive(Serialize)]
struct Timing {
    elapsed_seconds: f64,
}

fn to_object<T: Serialize>(value: &T) -> Map<String, Value> {
    match serde_json::to_value(value).expect("serializable") {
        Value::Object(m) => m,
        other => Map::from_iter([("value".to_string(), other)]),
    }
}

fn merge(parts: impl IntoIterator<Item = Map<String, Value>>) -> Value {
    let mut out = Map::new();
    for part in parts {
        out.extend(part);
    }
    Value::Object(out)
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_density(path: &Path, tols: &Tolerances) -> Result<DensityMatrix, Failure> {
    Ok(read_density(&read_text(path)?, tols)?)
}

fn load_extension(path: &Path, tols: &Tolerances) -> Result<ExtensionState, Failure> {
    Ok(ExtensionState::new(load_density(path, tols)?)?)
}

fn search_config(args: &SearchArgs, seed: u64, trace: bool, tols: &Tolerances) -> SearchConfig {
    SearchConfig {
        n_terms: args.terms,
        restarts: args.restarts,
        max_iters: args.max_iters,
        seed,
        residual_target: args.residual_target,
        parallel: !args.serial,
        trace,
        tolerances: *tols,
        ..Default::default()
    }
}

fn verdict_outcome(report: &SearchReport) -> Outcome {
    let exit = match report.verdict {
        Verdict::SeparableCertified => EXIT_OK,
        Verdict::EntangledCertified => EXIT_ENTANGLED,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    };
    let residual = report.residual.map_or("n/a".to_string(), |r| format!("{r:.3e}"));
    let mut summary = format!(
        "{} (PPT min eigenvalue {:.3e}, residual {residual})",
        report.verdict.as_str(),
        report.ppt_min_eigenvalue
    );
    if let Some(note) = &report.note {
        summary.push_str(&format!("\nnote: {note}"));
    }
    Outcome {
        payload: Value::Object(to_object(report)),
        exit,
        summary,
    }
}

fn default_labels(n: usize) -> Result<Vec<String>, Failure> {
    let labels: &[&str] = match n {
        1 => &["s"],
        2 => &["x", "y"],
        3 => &["e", "x", "y"],
        _ => return Err(Failure::Input(format!("--labels is required for {n} subsystems"))),
    };
    Ok(labels.iter().map(|s| s.to_string()).collect())
}

fn run(cli: &Cli, tols: &Tolerances) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Entropy { rho } => {
            let rho = load_density(rho, tols)?;
            let s = von_neumann_entropy(&rho)?;
            #[derive(Serialize)]
            struct P {
                entropy_bits: f64,
                dim: usize,
                eigenvalues: Vec<f64>,
            }
            let p = P {
                entropy_bits: s,
                dim: rho.dim(),
                eigenvalues: rho.eig()?.eigenvalues,
            };
            Ok(Outcome {
                payload: Value::Object(to_object(&p)),
                exit: EXIT_OK,
                summary: format!("S = {s:.12} bits"),
            })
        }
        Command::Cmi { sigma: Some(sigma), .. } => {
            let sigma = load_density(sigma, tols)?;
            let report = quantum_cmi(&sigma)?;
            let saturation = match saturation_residual(&sigma, tols.log_cutoff) {
                Ok(r) => Some(r),
                Err(Error::Singular { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            let mut payload = to_object(&report);
            payload.insert("saturation_residual".into(), serde_json::to_value(saturation).expect("f64"));
            Ok(Outcome {
                payload: Value::Object(payload),
                exit: EXIT_OK,
                summary: format!("I(x:y|e) = {:.12} bits", report.cmi),
            })
        }
        Command::Cmi { distribution, .. } => {
            let path = distribution.as_ref().expect("clap requires one input");
            let p = read_distribution(&read_text(path)?, tols)?;
            let cmi = classical_cmi(&p);
            #[derive(Serialize)]
            struct P {
                cmi: f64,
                conditional_independence_residual: f64,
            }
            let payload = P {
                cmi,
                conditional_independence_residual: p.conditional_independence_residual(),
            };
            Ok(Outcome {
                payload: Value::Object(to_object(&payload)),
                exit: EXIT_OK,
                summary: format!("I(x:y|e) = {cmi:.12} bits"),
            })
        }
        Command::BuildExtension { decomposition } => {
            let d = read_decomposition(&read_text(decomposition)?, tols)?;
            let spread = dedegenerate_weights(&d);
            let ext = build_extension(&spread)?;
            let mut payload = to_object(ext.sigma());
            payload.insert("weights".into(), serde_json::to_value(spread.weights()).expect("f64"));
            payload.insert("weights_split".into(), Value::Bool(spread.len() != d.len()));
            payload.insert(
                "decomposition".into(),
                serde_json::to_value(DecompositionFile::from_decomposition(&spread)).expect("serializable"),
            );
            Ok(Outcome {
                payload: Value::Object(payload),
                exit: EXIT_OK,
                summary: format!("extension with dim(e) = {}", ext.de()),
            })
        }
        Command::Verify { sigma, rho } => {
            let sigma = load_extension(sigma, tols)?;
            let rho = match rho {
                Some(path) => load_density(path, tols)?,
                None => partial_trace(sigma.sigma(), &["x", "y"])?,
            };
            let cert = verify_extension(&rho, &sigma, tols)?;
            let failed = cert.verdict.failed();
            let summary = if failed.is_empty() {
                "all four conditions hold".to_string()
            } else {
                format!("failed conditions {failed:?}")
            };
            Ok(Outcome {
                payload: Value::Object(to_object(&cert)),
                exit: if cert.verdict.overall { EXIT_OK } else { EXIT_INCONCLUSIVE },
                summary,
            })
        }
        Command::Extract { sigma } => {
            let sigma = load_extension(sigma, tols)?;
            let x = extract(&sigma, tols)?;
            let mut payload = to_object(&DecompositionFile::from_decomposition(&x.decomposition));
            payload.insert("off_block_residual".into(), x.blocks.off_block_residual.into());
            payload.insert("max_clip".into(), x.max_clip.into());
            payload.insert("reconstruction_residual".into(), x.reconstruction_residual.into());
            Ok(Outcome {
                payload: Value::Object(payload),
                exit: EXIT_OK,
                summary: format!(
                    "{} terms, reconstruction residual {:.3e}",
                    x.decomposition.len(),
                    x.reconstruction_residual
                ),
            })
        }
        Command::Ppt { rho } => {
            let rho = load_density(rho, tols)?;
            let ppt = ppt_check_with(&rho, tols.ppt)?;
            Ok(Outcome {
                payload: Value::Object(to_object(&ppt)),
                exit: if ppt.is_ppt { EXIT_OK } else { EXIT_ENTANGLED },
                summary: format!(
                    "min eigenvalue of the partial transpose {:.12}: {}",
                    ppt.min_eigenvalue,
                    if ppt.is_ppt { "PPT" } else { "NPT, entangled" }
                ),
            })
        }
        Command::Search(args) => {
            let rho = load_density(&args.rho, tols)?;
            let report = search_extension(&rho, &search_config(args, cli.seed, cli.trace, tols))?;
            Ok(verdict_outcome(&report))
        }
        Command::Classify(args) => {
            let rho = load_density(&args.rho, tols)?;
            let report = classify(&rho, &search_config(args, cli.seed, cli.trace, tols))?;
            Ok(verdict_outcome(&report))
        }
        Command::Gen(g) => gen(g, cli.seed),
    }
}

fn gen(g: &GenCommand, seed: u64) -> Result<Outcome, Failure> {
    let state = |rho: DensityMatrix, summary: String| Outcome {
        payload: Value::Object(to_object(&rho)),
        exit: EXIT_OK,
        summary,
    };
    match g {
        GenCommand::Density { dims, labels, rank } => {
            let labels = match labels {
                Some(l) => l.clone(),
                None => default_labels(dims.len())?,
            };
            let layout = SubsystemDims::new(labels, dims.iter().copied())?;
            let rank = rank.unwrap_or(layout.total());
            let rho = random_density(&layout, rank, seed)?;
            Ok(state(rho, format!("random state on {dims:?}, rank {rank}")))
        }
        GenCommand::Separable {
            dims,
            terms,
            factor_rank,
        } => {
            let &[dx, dy] = dims.as_slice() else {
                return Err(Failure::Input(format!("--dims takes dx,dy, got {dims:?}")));
            };
            let d = random_separable_with_rank((dx, dy), *terms, *factor_rank, seed)?;
            let payload = merge([
                to_object(&MatrixFile::from_density(&d.reconstruct())),
                to_object(&DecompositionFile::from_decomposition(&d)),
            ]);
            Ok(Outcome {
                payload,
                exit: EXIT_OK,
                summary: format!("separable state with {} terms on {dx}x{dy}", d.len()),
            })
        }
        GenCommand::Werner { p } => Ok(state(werner_state(*p)?, format!("Werner state, p = {p}"))),
        GenCommand::Bell => Ok(state(bell_state(), "Bell state".into())),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}").and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(format!("cannot write to stdout: {e}")),
                _ => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let start = Instant::now();
    let mut tols = Tolerances::default();
    let outcome = cli
        .tol
        .iter()
        .try_for_each(|arg| tols.apply_override(arg).map_err(|e| Failure::Input(e.to_string())))
        .and_then(|_| run(&cli, &tols));

    let (payload, exit) = match outcome {
        Ok(o) => {
            eprintln!("{}", o.summary);
            (o.payload, o.exit)
        }
        Err(f) => {
            eprintln!("error ({}): {}", f.kind(), f.message());
            let error = Value::Object(Map::from_iter([
                ("kind".to_string(), Value::from(f.kind())),
                ("message".to_string(), Value::from(f.message())),
            ]));
            (Value::Object(Map::from_iter([("error".to_string(), error)])), f.code())
        }
    };
    let payload = match payload {
        Value::Object(m) => m,
        other => Map::from_iter([("value".to_string(), other)]),
    };
    let doc = Document {
        tool: "condsep",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        seed: cli.command.uses_seed().then_some(cli.seed),
        tolerances: &tols,
        payload,
        exit_code: exit,
        timing: Timing {
            elapsed_seconds: start.elapsed().as_secs_f64(),
        },
    };
    let text = serde_json::to_string_pretty(&doc).expect("serializable");
    if let Err(e) = emit(&text, cli.out.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_NUMERICAL);
    }
    ExitCode::from(exit)
}
