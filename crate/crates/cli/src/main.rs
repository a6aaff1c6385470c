use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use exactgrowth_cli::config::{CommandKind, ExperimentConfig, OdeMethod, QValue};
use exactgrowth_cli::{load_config, run, Failure, EXIT_CONFIG, EXIT_OK};

#[derive(Parser, Debug)]
#[command(name = "exactgrowth", version, about = "Exact growth functionals on weighted radial Sobolev spaces")]
struct Cli {
    /// JSON experiment config; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output stem for `<stem>.csv`, `<stem>.json` and `<stem>.timing.json`.
    #[arg(long, global = true)]
    output: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Default, Clone)]
struct SpaceFlags {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// β₀ and the coefficient table for one space.
    Constants(SpaceFlags),
    /// Equimeasurability and maximal bounds over a random corpus.
    Symmetrize {
        #[command(flatten)]
        space: SpaceFlags,
        #[arg(long)]
        functions: Option<usize>,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Closed-form consistency checks.
    Verify(SpaceFlags),
    /// Moser-sequence sharpness sweep.
    Sweep {
        #[command(flatten)]
        space: SpaceFlags,
        #[arg(long)]
        beta_mult: Option<f64>,
        /// A number or `crit`.
        #[arg(long)]
        q: Option<String>,
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<u64>>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Estimates of the sequence constant μ(h).
    MuH {
        #[command(flatten)]
        space: SpaceFlags,
        #[arg(long, value_delimiter = ',')]
        h: Option<Vec<f64>>,
        #[arg(long)]
        terms: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Radial fourth-order Navier problem.
    SolveOde {
        #[command(flatten)]
        space: SpaceFlags,
        #[arg(long, value_enum)]
        method: Option<OdeMethod>,
        #[arg(long)]
        nonlinearity: Option<String>,
        #[arg(long)]
        coefficient: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
    },
}

impl Command {
    fn kind(&self) -> CommandKind {
        match self {
            Command::Constants(_) => CommandKind::Constants,
            Command::Symmetrize { .. } => CommandKind::Symmetrize,
            Command::Verify(_) => CommandKind::Verify,
            Command::Sweep { .. } => CommandKind::Sweep,
            Command::MuH { .. } => CommandKind::MuH,
            Command::SolveOde { .. } => CommandKind::SolveOde,
        }
    }

    fn space(&self) -> &SpaceFlags {
        match self {
            Command::Constants(s) | Command::Verify(s) => s,
            Command::Symmetrize { space, .. }
            | Command::Sweep { space, .. }
            | Command::MuH { space, .. }
            | Command::SolveOde { space, .. } => space,
        }
    }
}

fn apply(cfg: &mut ExperimentConfig, cmd: &Command) {
    let s = cmd.space();
    let sp = &mut cfg.space;
    if let Some(v) = s.k {
        sp.k = v;
    }
    if let Some(v) = s.p {
        sp.p = v;
    }
    if let Some(v) = s.eta {
        sp.eta = v;
    }
    if let Some(v) = s.theta {
        sp.theta = v;
    }
    if s.gamma.is_some() {
        sp.gamma = s.gamma;
    }
    if let Some(v) = s.cells {
        cfg.grid.cells = v;
    }
    if let Some(v) = s.radius {
        cfg.grid.radius = v;
    }
    let p = &mut cfg.params;
    match cmd {
        Command::Symmetrize { functions, nu, alpha, .. } => {
            p.functions = functions.unwrap_or(p.functions);
            p.nu = nu.unwrap_or(p.nu);
            p.alpha = alpha.or(p.alpha);
        }
        Command::Sweep { beta_mult, q, n, epsilon, .. } => {
            p.beta_mult = beta_mult.unwrap_or(p.beta_mult);
            if let Some(q) = q {
                p.q = QValue::parse(q);
            }
            if let Some(n) = n {
                p.n = n.clone();
            }
            p.epsilon = epsilon.unwrap_or(p.epsilon);
        }
        Command::MuH { h, terms, restarts, iterations, .. } => {
            if let Some(h) = h {
                p.h = h.clone();
            }
            p.terms = terms.unwrap_or(p.terms);
            p.restarts = restarts.unwrap_or(p.restarts);
            p.iterations = iterations.unwrap_or(p.iterations);
        }
        Command::SolveOde { method, nonlinearity, coefficient, lambda, .. } => {
            p.method = method.unwrap_or(p.method);
            if let Some(n) = nonlinearity {
                p.nonlinearity = n.clone();
            }
            p.coefficient = coefficient.unwrap_or(p.coefficient);
            p.lambda = lambda.unwrap_or(p.lambda);
        }
        Command::Constants(_) | Command::Verify(_) => {}
    }
}

fn build(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match (&cli.config, &cli.command) {
        (Some(path), _) => load_config(path)?,
        (None, Some(cmd)) => ExperimentConfig::new(cmd.kind()),
        (None, None) => {
            return Err(Failure { code: EXIT_CONFIG, message: "no subcommand and no --config given".into() });
        }
    };
    if let Some(cmd) = &cli.command {
        if cmd.kind() != cfg.command {
            return Err(Failure {
                code: EXIT_CONFIG,
                message: format!("command: config says {:?}, command line says {}", cfg.command.name(), cmd.kind().name()),
            });
        }
        apply(&mut cfg, cmd);
    }
    if let Some(o) = &cli.output {
        cfg.output_path = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { EXIT_OK as u8 });
        }
    };
    match build(&cli).and_then(|cfg| run(&cfg)) {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("exactgrowth: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
