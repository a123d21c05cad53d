use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod output;

/// Constrained-subspace circuits, Lie closures and the fuzzy-sphere Ising model.
#[derive(Parser, Debug)]
#[command(name = "zdress", version)]
struct Cli {
    /// Directory for CSV/DAT outputs and the run manifest (overrides ZDRESS_OUT_DIR).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check every commutator identity with exact coefficients.
    VerifyIdentities,
    /// Dimension of the Lie closure projected to a sector.
    Closure(ClosureArgs),
    /// Sector dimension counts.
    Dim(DimArgs),
    /// Gate decomposition checks.
    Gates {
        #[command(subcommand)]
        action: GatesAction,
    },
    /// Jacobian rank of a circuit on its sector.
    Jacobian(JacobianArgs),
    /// Random-target reachability.
    Reach(ReachArgs),
    /// Exact diagonalisation of the fuzzy-sphere model.
    Ed(EdArgs),
    /// Spectrum with quantum numbers, optionally rescaled to conformal dimensions.
    Spectrum(SpectrumArgs),
    /// Ground state by VQE.
    Vqe(VqeArgs),
    /// Ground and excited states by VQD.
    Vqd(VqdArgs),
    /// Greedy construction of a rank-spanning circuit.
    BuildSpanning(SpanningArgs),
}

#[derive(Args, Debug)]
struct ClosureArgs {
    /// `hamming:N,K`, `fuzzy:NORB` or `bempa:MODES,BITS,TOTAL`.
    #[arg(long)]
    sector: String,
    /// Generators in Pauli-sum line format, blocks separated by `---`.
    #[arg(long, conflicts_with = "pool")]
    gens: Option<PathBuf>,
    /// Built-in pool: all-pair, adjacent, fuzzy or bempa.
    #[arg(long)]
    pool: Option<String>,
    /// Close over complex skew-Hermitian matrices and target su(w).
    #[arg(long)]
    complex: bool,
    /// Exit 1 unless the dimension equals this value.
    #[arg(long)]
    expect: Option<usize>,
}

#[derive(Args, Debug)]
struct DimArgs {
    /// Fuzzy-sphere sector with this many orbitals (2N qubits).
    #[arg(long, conflicts_with_all = ["qubits", "weight"])]
    fuzzy_n: Option<usize>,
    #[arg(long, requires = "weight")]
    qubits: Option<usize>,
    #[arg(long, requires = "qubits")]
    weight: Option<usize>,
    /// Also write the basis states as CSV (to --out, else stdout).
    #[arg(long)]
    list: bool,
}

#[derive(Subcommand, Debug)]
enum GatesAction {
    /// Max decomposition error per kind and the resource table.
    Verify {
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Write every decomposition at θ = 0.3 in the line format.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct CircuitArgs {
    /// Circuit file; the shipped N = 4 circuit when omitted.
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Sector override; defaults to the fuzzy sector when the input state lies in it.
    #[arg(long)]
    sector: Option<String>,
}

#[derive(Args, Debug)]
struct JacobianArgs {
    #[command(flatten)]
    circuit: CircuitArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Extra random evaluation points.
    #[arg(long, default_value_t = 0)]
    points: usize,
}

#[derive(Args, Debug)]
struct ReachArgs {
    #[command(flatten)]
    circuit: CircuitArgs,
    #[arg(long, default_value_t = 100)]
    targets: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    /// Keep only the first K gates.
    #[arg(long)]
    truncate: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// `critical` or comma-separated `s=..,v0=..,v1=..,h=..`.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    v0: Option<f64>,
    #[arg(long)]
    v1: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Args, Debug)]
struct EdArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of levels to print (all when omitted).
    #[arg(long)]
    levels: Option<usize>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Emit `energy,dimension,ell,z2` with the stress tensor at 3.
    #[arg(long)]
    rescale: bool,
    /// Append the bootstrap reference column and percentage deviations.
    #[arg(long, requires = "rescale")]
    bootstrap_compare: bool,
}

#[derive(Args, Debug)]
struct VqeArgs {
    #[arg(long)]
    circuit: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 3)]
    seed: u64,
    /// Trace file, two columns `iteration cost`.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VqdArgs {
    #[arg(long)]
    circuit: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 2)]
    levels: usize,
    /// One group per excited level, e.g. `--betas 10 30,20`.
    #[arg(long, num_args = 1..)]
    betas: Vec<String>,
    #[arg(long, default_value_t = 3)]
    seed: u64,
    /// Trace file prefix; level k goes to `<prefix>_<k>.dat`.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpanningArgs {
    #[arg(long)]
    sector: String,
    /// Input basis state as a bit string.
    #[arg(long)]
    input: String,
    /// Gate pool: fuzzy, all-pair or adjacent.
    #[arg(long, default_value = "fuzzy")]
    pool: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the circuit file.
    #[arg(long)]
    write: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let out = cli.out.clone().or_else(|| std::env::var_os("ZDRESS_OUT_DIR").map(PathBuf::from));
    match commands::run(cli.command, out) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.is::<commands::UsageError>() => {
            eprintln!("error: {e}");
            eprintln!("see `zdress help` for usage");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
