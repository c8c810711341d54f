//! `secrecy-lab` command-line driver.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigError, ExperimentConfig};

const PRECEDENCE: &str = "\
Configuration precedence, highest first:
  1. command-line flags
  2. fields of the --config JSON file (--model replaces its \"model\")
  3. the SECRECY_LAB_SEED environment variable (seed only)
  4. built-in defaults

Every output starts with '#' comment lines holding the resolved
configuration as JSON; pass that JSON back through --config to reproduce
the run. Exit status: 0 on success, 2 on configuration errors, 1 on
runtime errors. Nothing is written when a run fails.";

#[derive(Parser, Debug)]
#[command(name = "secrecy-lab", version, about = "Secrecy-rate experiments for block-fading channels with a hybrid jam-or-listen adversary", after_help = PRECEDENCE)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// JSON channel model file.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Transmit power.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pt: Option<f64>,
    /// Jamming power.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pj: Option<f64>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// RNG seed [default: $SECRECY_LAB_SEED, else 1].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output path [default: stdout].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// No-feedback lower and upper bounds at one power pair.
    Bounds {
        /// Also report the rate achievable without jammer CSI.
        #[arg(long)]
        no_jammer_csi: bool,
    },
    /// Upper bound along a power-scaling path pt = c_t P^k_t, pj = c_j P^k_j.
    Sweep {
        /// Comma-separated ascending P values [default: 1,10,100,1000,10000].
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        grid: Vec<f64>,
        #[arg(long)]
        pt_coef: Option<f64>,
        #[arg(long)]
        pt_exp: Option<f64>,
        #[arg(long)]
        pj_coef: Option<f64>,
        #[arg(long)]
        pj_exp: Option<f64>,
    },
    /// Bounds against several adversaries, colluding or not.
    Multi,
    /// Renewal-reward secrecy rates with 1-bit ACK/NAK feedback.
    Feedback {
        /// mrc, plain_arq, main_csi or all [default: all].
        #[arg(long)]
        scheme: Option<String>,
        /// Fixed group rate; optimized when absent.
        #[arg(long)]
        rate: Option<f64>,
        /// Renewal epochs per rate [default: samples / 4].
        #[arg(long)]
        renewals: Option<usize>,
        #[arg(long)]
        t_max: Option<usize>,
    },
    /// Outage-constrained secret rate with key banking.
    Delay {
        /// Comma-separated outage budgets [default: 0.2].
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        alpha: Vec<f64>,
        /// no_feedback or one_bit [default: no_feedback].
        #[arg(long)]
        key_mode: Option<String>,
    },
    /// Block-level protocol session against a chosen adversary.
    Simulate {
        /// arq or delay [default: arq].
        #[arg(long)]
        protocol: Option<String>,
        /// always_eavesdrop, always_jam, bernoulli:Q, periodic:K or trace:PATH.
        #[arg(long)]
        adversary: Option<String>,
        /// worst_case or per_block [default: worst_case].
        #[arg(long)]
        accounting: Option<String>,
        /// ARQ scheme [default: mrc].
        #[arg(long)]
        scheme: Option<String>,
        /// ARQ group rate.
        #[arg(long)]
        rate: Option<f64>,
        /// ARQ session length [default: 100000].
        #[arg(long)]
        blocks: Option<usize>,
        #[arg(long)]
        t_max: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        r_tilde: Option<f64>,
        #[arg(long)]
        r_s: Option<f64>,
        #[arg(long)]
        r_key: Option<f64>,
        /// Blocks per superblock [default: 100].
        #[arg(long)]
        m1: Option<usize>,
        /// Superblocks [default: 100].
        #[arg(long)]
        m2: Option<usize>,
        /// Also write per-block events as JSON lines.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Stochastic-dominance test of the eavesdropper gain over the jammed main gain.
    Dominance,
    /// Data series for the reference figures.
    Figures {
        /// fig1, fig2, fig3 or all [default: all].
        #[arg(long)]
        figure: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Bounds { .. } => "bounds",
            Command::Sweep { .. } => "sweep",
            Command::Multi => "multi",
            Command::Feedback { .. } => "feedback",
            Command::Delay { .. } => "delay",
            Command::Simulate { .. } => "simulate",
            Command::Dominance => "dominance",
            Command::Figures { .. } => "figures",
        }
    }
}

fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn set_list(slot: &mut Option<Vec<f64>>, flag: Vec<f64>) {
    if !flag.is_empty() {
        *slot = Some(flag);
    }
}

/// Applies flags over the file configuration.
fn merge(cli: &Cli) -> anyhow::Result<(ExperimentConfig, Option<PathBuf>)> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let name = cli.command.name();
    if let Some(cmd) = &cfg.command {
        if cmd != name {
            return config::bad(format!("config file is for {cmd:?}, not {name:?}"));
        }
    }
    cfg.command = Some(name.to_string());
    if let Some(p) = &c.model {
        cfg.model = Some(ExperimentConfig::load_model(p)?);
    }
    set(&mut cfg.pt, c.pt);
    set(&mut cfg.pj, c.pj);
    set(&mut cfg.samples, c.samples);
    set(&mut cfg.seed, c.seed);
    if cfg.seed.is_none() {
        if let Ok(s) = std::env::var(config::SEED_ENV) {
            let seed = s
                .trim()
                .parse()
                .map_err(|_| ConfigError(format!("{} must be an unsigned integer, got {s:?}", config::SEED_ENV)))?;
            cfg.seed = Some(seed);
        }
    }
    let mut events = None;
    match &cli.command {
        Command::Bounds { no_jammer_csi } => {
            if *no_jammer_csi {
                cfg.no_jammer_csi = Some(true);
            }
        }
        Command::Sweep { grid, pt_coef, pt_exp, pj_coef, pj_exp } => {
            set_list(&mut cfg.grid, grid.clone());
            let mut pt = cfg.pt_scaling.unwrap_or(secrecy_lab::bounds::PowerScaling::linear());
            let mut pj = cfg.pj_scaling.unwrap_or(secrecy_lab::bounds::PowerScaling::linear());
            pt.coef = pt_coef.unwrap_or(pt.coef);
            pt.exponent = pt_exp.unwrap_or(pt.exponent);
            pj.coef = pj_coef.unwrap_or(pj.coef);
            pj.exponent = pj_exp.unwrap_or(pj.exponent);
            cfg.pt_scaling = Some(pt);
            cfg.pj_scaling = Some(pj);
        }
        Command::Multi | Command::Dominance => {}
        Command::Feedback { scheme, rate, renewals, t_max } => {
            set(&mut cfg.scheme, scheme.clone());
            set(&mut cfg.rate, *rate);
            set(&mut cfg.renewals, *renewals);
            set(&mut cfg.t_max, *t_max);
        }
        Command::Delay { alpha, key_mode } => {
            set_list(&mut cfg.alpha, alpha.clone());
            set(&mut cfg.key_mode, key_mode.clone());
        }
        Command::Simulate {
            protocol,
            adversary,
            accounting,
            scheme,
            rate,
            blocks,
            t_max,
            gamma,
            r_tilde,
            r_s,
            r_key,
            m1,
            m2,
            events: ev,
        } => {
            set(&mut cfg.protocol, protocol.clone());
            set(&mut cfg.adversary, adversary.clone());
            set(&mut cfg.accounting, accounting.clone());
            set(&mut cfg.scheme, scheme.clone());
            set(&mut cfg.rate, *rate);
            set(&mut cfg.blocks, *blocks);
            set(&mut cfg.t_max, *t_max);
            set(&mut cfg.gamma, *gamma);
            set(&mut cfg.r_tilde, *r_tilde);
            set(&mut cfg.r_s, *r_s);
            set(&mut cfg.r_key, *r_key);
            set(&mut cfg.m1, *m1);
            set(&mut cfg.m2, *m2);
            events = ev.clone();
        }
        Command::Figures { figure } => set(&mut cfg.figure, figure.clone()),
    }
    Ok((cfg, events))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (mut cfg, events_path) = merge(&cli)?;
    if cli.common.threads == Some(0) {
        return config::bad("--threads must be >= 1");
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.common.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build()?;
    let want_events = events_path.is_some();
    let report = pool.install(|| commands::execute(&mut cfg, want_events))?;

    let mut text = report.render(&cfg)?;
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &cli.common.out {
        Some(path) => std::fs::write(path, &text)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    if let (Some(path), Some(events)) = (events_path, &report.events) {
        std::fs::write(path, events)?;
    }
    Ok(())
}

fn is_config_error(err: &anyhow::Error) -> bool {
    if err.downcast_ref::<ConfigError>().is_some() {
        return true;
    }
    matches!(
        err.downcast_ref::<secrecy_lab::Error>(),
        Some(secrecy_lab::Error::Config(_) | secrecy_lab::Error::Usage(_))
    )
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_config_error(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
