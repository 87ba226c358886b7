//! Command-line front end: deterministic CSV datasets plus a metadata
//! sidecar for every scenario.
//!
//! All state flows through flags (or an optional `--config` key = value
//! file; flags win on conflict).  Outputs are byte-identical across runs:
//! every grid is evaluated in a fixed order and floats are printed with 17
//! significant digits.

mod config;
mod output;
mod scenarios;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "qtunnel",
    version,
    about = "Wavepacket tunnelling through a rectangular barrier: transmission amplitudes, delay kernels, transmitted pulses and timing diagnostics",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    scenario: Scenario,
}

/// Flags shared by every scenario; unset values fall back to config-file
/// entries and then to scenario defaults (recorded in the .meta sidecar).
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Barrier opacity beta = sqrt(2 W) d
    #[arg(long)]
    beta: Option<f64>,
    /// Barrier height W
    #[arg(long = "W")]
    w: Option<f64>,
    /// Barrier width d
    #[arg(long)]
    d: Option<f64>,
    /// Packet spatial width sigma
    #[arg(long)]
    sigma: Option<f64>,
    /// Packet width as a fraction of the barrier width: sigma = gamma d
    #[arg(long)]
    gamma: Option<f64>,
    /// Packet mean momentum p0
    #[arg(long)]
    p0: Option<f64>,
    /// Evaluation time
    #[arg(long)]
    t: Option<f64>,
    /// Comma-separated list of evaluation times
    #[arg(long)]
    times: Option<String>,
    /// Momentum-grid edge
    #[arg(long)]
    pmax: Option<f64>,
    /// Grid point count
    #[arg(long)]
    n: Option<usize>,
    /// Pulse normalization: ratio | absolute
    #[arg(long)]
    mode: Option<String>,
    /// Output CSV path (the .meta sidecar shares the basename)
    #[arg(long)]
    out: Option<String>,
    /// Optional key = value file with the same keys; flags win
    #[arg(long)]
    config: Option<String>,
}

#[derive(Subcommand)]
enum Scenario {
    /// Delay kernel: transform of T - 1 plus the smooth kernel part at p0
    Dad(CommonArgs),
    /// Transmission amplitude and superoscillation band curves over momentum
    Transmission(CommonArgs),
    /// Transmitted pulse by the momentum-integral route at one time
    Pulse(CommonArgs),
    /// Kernel moments by the derivative and direct routes
    Moments(CommonArgs),
    /// Transmitted-peak positions over a list of times with a line fit
    Trajectory(CommonArgs),
    /// Regular part of the delay kernel (reproduces the opaque-barrier
    /// kernel figure)
    Figure1(CommonArgs),
    /// Exact vs high-barrier normalized pulse shapes
    Figure2(CommonArgs),
    /// Exact vs wide-barrier (complex shift) normalized pulse shapes
    Figure3(CommonArgs),
    /// Phase-time saturation with barrier width
    Hartman {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated opacities; the width varies at fixed height
        #[arg(long = "beta-list")]
        beta_list: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.scenario {
        Scenario::Dad(a) => scenarios::dad(a),
        Scenario::Transmission(a) => scenarios::transmission(a),
        Scenario::Pulse(a) => scenarios::pulse(a),
        Scenario::Moments(a) => scenarios::moments(a),
        Scenario::Trajectory(a) => scenarios::trajectory(a),
        Scenario::Figure1(a) => scenarios::figure1(a),
        Scenario::Figure2(a) => scenarios::figure2(a),
        Scenario::Figure3(a) => scenarios::figure3(a),
        Scenario::Hartman { common, beta_list } => scenarios::hartman(common, beta_list),
    };
    if let Err(msg) = outcome {
        eprintln!("error: {msg}");
        std::process::exit(1);
    }
}
