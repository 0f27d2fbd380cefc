//! `cvgate`: gate simulations, figure tables and gate-sequence plans.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvgate::benchmarks::InputState;
use cvgate::C64;
use serde::Serialize;

use output::Format;

#[derive(Parser)]
#[command(name = "cvgate", version, about = "Measurement-induced X-gate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply one heralded gate to an input state.
    Gate(GateArgs),
    /// Fidelity against transmission for several ancilla efficiencies.
    Fig2(Fig2Args),
    /// Fidelity and success probability against the homodyne window.
    Fig3(Fig3Args),
    /// Cat-state fidelity against the highest photon number.
    Fig4(Fig4Args),
    /// Six-gate plan for the cubic phase gate.
    Cubic(CubicArgs),
    /// Factor a polynomial of X, or a truncated potential, into gates.
    Plan(PlanArgs),
    /// Cat state from an even (or odd) polynomial of a†.
    Cat(CatArgs),
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct Common {
    /// Fock-space truncation.
    #[arg(long, default_value_t = 50)]
    pub dim: usize,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Accept results whose truncated tail weight exceeds 1e-6.
    #[arg(long)]
    pub allow_truncation: bool,
}

fn parse_complex(s: &str) -> Result<C64, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("bad number '{t}'"))
    };
    match s.split_once(',') {
        Some((re, im)) => Ok(C64::new(num(re)?, num(im)?)),
        None => Ok(C64::new(num(s)?, 0.0)),
    }
}

fn parse_input(s: &str) -> Result<InputState, String> {
    s.parse::<InputState>().map_err(|e| e.to_string())
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct GateArgs {
    /// Coefficient of a, as `re` or `re,im`.
    #[arg(long, default_value = "1.5", value_parser = parse_complex, allow_hyphen_values = true)]
    pub lm: C64,
    /// Coefficient of a†, as `re` or `re,im`.
    #[arg(long, default_value = "1.5", value_parser = parse_complex, allow_hyphen_values = true)]
    pub lp: C64,
    /// `fock:N`, `squeezed:XI`, `coherent:B` (amplitude iB) or `coherent:RE,IM`.
    #[arg(long, default_value = "fock:1", value_parser = parse_input)]
    pub input: InputState,
    /// Beam-splitter transmission.
    #[arg(long, default_value_t = 0.8)]
    pub t: f64,
    /// Single-photon purity of the ancilla.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Homodyne window half-width; a sharp outcome when omitted.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Initial Gauss-Legendre nodes for the window.
    #[arg(long, default_value_t = 16)]
    pub nodes: usize,
    /// Skip the correction pass.
    #[arg(long)]
    pub uncorrected: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct Fig2Args {
    #[arg(
        long = "input",
        value_parser = parse_input,
        default_values = ["coherent:0.1", "coherent:1", "squeezed:0.1", "fock:1"]
    )]
    pub inputs: Vec<InputState>,
    #[arg(long = "eta", value_delimiter = ',', default_values_t = [1.0, 0.8, 0.6, 0.4])]
    pub etas: Vec<f64>,
    /// Gate strength λ in 1 + λ(a + a†).
    #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.05)]
    pub t_min: f64,
    #[arg(long, default_value_t = 0.99)]
    pub t_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub t_step: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct Fig3Args {
    #[arg(long = "input", value_parser = parse_input, default_values = ["fock:1", "coherent:1"])]
    pub inputs: Vec<InputState>,
    #[arg(long = "eta", value_delimiter = ',', default_values_t = [1.0, 0.8])]
    pub etas: Vec<f64>,
    #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eps_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eps_max: f64,
    /// Number of logarithmically spaced half-widths.
    #[arg(long, default_value_t = 41)]
    pub n_eps: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct Fig4Args {
    #[arg(long = "beta", value_delimiter = ',', default_values_t = [1.0, 2.0, 3.0])]
    pub betas: Vec<f64>,
    #[arg(
        long = "nmax",
        value_delimiter = ',',
        default_values_t = [0usize, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20]
    )]
    pub n_maxes: Vec<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct CubicArgs {
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub chi: f64,
    /// Per-step transmissions for the attenuation schedule.
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<f64>>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct PlanArgs {
    /// Real parts of the coefficients of X^0, X^1, ...
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "potential")]
    pub poly: Option<Vec<f64>>,
    /// Imaginary parts matching `--poly`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "poly")]
    pub poly_im: Option<Vec<f64>>,
    /// Potential coefficients v_k of V(x) = Σ v_k x^k.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub potential: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mean_x: f64,
    /// Taylor order of the truncated exponential.
    #[arg(long, default_value_t = 6)]
    pub order: usize,
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<f64>>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct CatArgs {
    #[arg(long, default_value_t = 3.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 16)]
    pub nmax: usize,
    /// Odd cat N(|β⟩ − |−β⟩) instead of the even one.
    #[arg(long)]
    pub odd: bool,
    /// Build the state with corrected gates at this transmission per step.
    #[arg(long)]
    pub sequence_t: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Gate(a) => commands::gate(a),
        Command::Fig2(a) => commands::fig2(a),
        Command::Fig3(a) => commands::fig3(a),
        Command::Fig4(a) => commands::fig4(a),
        Command::Cubic(a) => commands::cubic(a),
        Command::Plan(a) => commands::plan(a),
        Command::Cat(a) => commands::cat(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cvgate: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
