//! Driver behind the `mess` binary.
//!
//! Each subcommand is a function taking a validated [`RunConfig`] and
//! returning the [`RunReport`] it wrote to `report.json`. The binary maps
//! errors to exit codes with [`CliError::exit_code`].

use std::path::PathBuf;

use mess::datagen::BrusselatorConfig;
use mess::matio::MatrixFormat;
use mess::report::RunReport;
use mess::{EpsilonRule, MessError, PlateauCriterion, PodTarget, StopConfig};
use thiserror::Error;

pub mod args;
mod commands;

pub use commands::{cmd_basis, cmd_compare, cmd_compress, cmd_gen, cmd_rom, cmd_sample, cmd_sweep};

use args::{Cli, CliCommand, CriterionArg, EpsModeArg, FormatArg, MethodArg, SourceArg};

pub const REPORT_FILE: &str = "report.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const ROM_FILE: &str = "rom_error.csv";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Mess(#[from] MessError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2 for bad input or configuration, 3 for unreadable or malformed
    /// files, 4 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Mess(e) => match e {
                MessError::Io { .. } | MessError::Format { .. } => 3,
                MessError::Numerical(_) => 4,
                MessError::Validation(_)
                | MessError::Parameter(_)
                | MessError::Degenerate(_)
                | MessError::Stream { .. } => 2,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Gen,
    Sample,
    Basis,
    Compress,
    Compare,
    Sweep,
    Rom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    Brusselator(BrusselatorConfig),
    RandomWalk {
        dim: usize,
        n_snapshots: usize,
        step_scale: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisMethod {
    Mess,
    Pod(PodTarget),
}

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    /// Guessed from the input extension when absent.
    pub input_format: Option<MatrixFormat>,
    pub out: PathBuf,
    /// Matrix output format; falls back to the input format, then CSV.
    pub format: Option<MatrixFormat>,
    pub eps: Option<EpsilonRule>,
    pub eps_list: Vec<EpsilonRule>,
    pub stop: StopConfig,
    pub streaming: bool,
    pub method: BasisMethod,
    pub rank_tol: f64,
    pub seed: u64,
    pub threads: usize,
    pub source: Source,
}

/// The sweep grid 0.01, 0.02, ..., 0.25 of the diameter.
pub fn default_sweep_grid() -> Vec<EpsilonRule> {
    (1..=25)
        .map(|k| EpsilonRule::RelativeToDiameter(k as f64 / 100.0))
        .collect()
}

impl RunConfig {
    pub fn new(command: Command, out: impl Into<PathBuf>) -> Self {
        Self {
            command,
            input: None,
            input_format: None,
            out: out.into(),
            format: None,
            eps: None,
            eps_list: default_sweep_grid(),
            stop: StopConfig::default(),
            streaming: false,
            method: BasisMethod::Mess,
            rank_tol: mess::DEFAULT_RANK_TOL,
            seed: 0,
            threads: 1,
            source: Source::Brusselator(BrusselatorConfig::default()),
        }
    }

    pub fn with_input(mut self, path: impl Into<PathBuf>) -> Self {
        self.input = Some(path.into());
        self
    }

    pub fn with_eps(mut self, rule: EpsilonRule) -> Self {
        self.eps = Some(rule);
        self
    }

    /// Checks flag combinations and ranges; runs before any computation.
    pub fn validate(&self) -> Result<()> {
        use Command::*;
        let needs_input = matches!(self.command, Sample | Basis | Compress | Compare | Sweep);
        if needs_input && self.input.is_none() {
            return Err(CliError::Usage("--input is required".into()));
        }
        let needs_eps = match self.command {
            Sample | Compress | Compare | Rom => true,
            Basis => self.method == BasisMethod::Mess,
            Gen | Sweep => false,
        };
        match self.eps {
            Some(rule) => rule.validate()?,
            None if needs_eps => return Err(CliError::Usage("--eps is required".into())),
            None => {}
        }
        if self.command == Sweep {
            if self.eps_list.is_empty() {
                return Err(CliError::Usage("the radius list is empty".into()));
            }
            for rule in &self.eps_list {
                rule.validate()?;
            }
        }
        if self.stop.enabled {
            self.stop.validate()?;
        }
        if !(self.rank_tol.is_finite() && self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(CliError::Usage(format!(
                "rank tolerance must lie in (0, 1), got {}",
                self.rank_tol
            )));
        }
        if self.threads == 0 {
            return Err(CliError::Usage("thread count must be at least 1".into()));
        }
        if let BasisMethod::Pod(PodTarget::EnergyEps(e)) = self.method {
            if !(e > 0.0 && e < 1.0) {
                return Err(CliError::Usage(format!(
                    "energy level must lie in (0, 1), got {e}"
                )));
            }
        }
        match self.source {
            Source::Brusselator(cfg) if matches!(self.command, Gen | Rom) => cfg.validate()?,
            Source::RandomWalk { step_scale, .. }
                if !(step_scale.is_finite() && step_scale > 0.0) =>
            {
                return Err(CliError::Usage("step scale must be positive".into()))
            }
            _ => {}
        }
        Ok(())
    }
}

fn format_of(arg: FormatArg) -> MatrixFormat {
    match arg {
        FormatArg::Csv => MatrixFormat::Csv,
        FormatArg::Messbin => MatrixFormat::MessBin,
        FormatArg::Pgm => MatrixFormat::Pgm,
    }
}

fn rule_of(mode: EpsModeArg, eps: f64) -> EpsilonRule {
    match mode {
        EpsModeArg::Absolute => EpsilonRule::Absolute(eps),
        EpsModeArg::Relative => EpsilonRule::RelativeToDiameter(eps),
    }
}

fn brusselator_of(a: &args::BrusselatorArgs) -> BrusselatorConfig {
    BrusselatorConfig {
        grid_points: a.grid_points,
        alpha: a.alpha,
        t_end: a.t_end,
        n_snapshots: a.snapshots,
        dt_internal: a.dt,
        ..BrusselatorConfig::default()
    }
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        let (command, output) = match &cli.command {
            CliCommand::Gen(a) => (Command::Gen, &a.output),
            CliCommand::Sample(a) => (Command::Sample, &a.output),
            CliCommand::Basis(a) => (Command::Basis, &a.output),
            CliCommand::Compress(a) => (Command::Compress, &a.output),
            CliCommand::Compare(a) => (Command::Compare, &a.output),
            CliCommand::Sweep(a) => (Command::Sweep, &a.output),
            CliCommand::Rom(a) => (Command::Rom, &a.output),
        };
        let mut cfg = RunConfig::new(command, output.out.clone());
        cfg.format = output.format.map(format_of);
        cfg.threads = output.threads;

        match cli.command {
            CliCommand::Gen(a) => {
                cfg.seed = a.seed;
                cfg.source = match a.source {
                    SourceArg::Brusselator => Source::Brusselator(brusselator_of(&a.brusselator)),
                    SourceArg::RandomWalk => Source::RandomWalk {
                        dim: a.dim,
                        n_snapshots: a.brusselator.snapshots,
                        step_scale: a.step_scale,
                    },
                };
            }
            CliCommand::Sample(a) | CliCommand::Compress(a) | CliCommand::Compare(a) => {
                cfg.input = Some(a.input.input);
                cfg.input_format = a.input.input_format.map(format_of);
                cfg.eps = Some(rule_of(a.eps.eps_mode, a.eps.eps));
                cfg.rank_tol = a.rank_tol;
                cfg.streaming = a.stop.streaming;
                if let (Some(tol), Some(window)) = (a.stop.stop_tol, a.stop.stop_window) {
                    cfg.stop = StopConfig::enabled(tol, window);
                    cfg.stop.criterion = match a.stop.stop_criterion {
                        CriterionArg::Potential => PlateauCriterion::Potential,
                        CriterionArg::Entropy => PlateauCriterion::DynamicalEntropy,
                    };
                }
            }
            CliCommand::Basis(a) => {
                cfg.input = Some(a.input.input);
                cfg.input_format = a.input.input_format.map(format_of);
                cfg.eps = a.eps.map(|e| rule_of(a.eps_mode, e));
                cfg.rank_tol = a.rank_tol;
                cfg.method = match (a.method, a.rank, a.energy_eps) {
                    (MethodArg::Mess, _, _) => BasisMethod::Mess,
                    (MethodArg::Pod, Some(r), _) => BasisMethod::Pod(PodTarget::Rank(r)),
                    (MethodArg::Pod, None, e) => {
                        BasisMethod::Pod(PodTarget::EnergyEps(e.unwrap_or(0.01)))
                    }
                };
            }
            CliCommand::Sweep(a) => {
                cfg.input = Some(a.input.input);
                cfg.input_format = a.input.input_format.map(format_of);
                cfg.rank_tol = a.rank_tol;
                if let Some(list) = a.eps_list {
                    cfg.eps_list = list.into_iter().map(|e| rule_of(a.eps_mode, e)).collect();
                }
            }
            CliCommand::Rom(a) => {
                cfg.eps = Some(rule_of(a.eps_mode, a.eps));
                cfg.rank_tol = a.rank_tol;
                cfg.source = Source::Brusselator(brusselator_of(&a.brusselator));
            }
        }
        cfg
    }
}

/// Validates and dispatches.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    log::info!("{:?} with {} thread(s)", cfg.command, cfg.threads);
    match cfg.command {
        Command::Gen => cmd_gen(cfg),
        Command::Sample => cmd_sample(cfg),
        Command::Basis => cmd_basis(cfg),
        Command::Compress => cmd_compress(cfg),
        Command::Compare => cmd_compare(cfg),
        Command::Sweep => cmd_sweep(cfg),
        Command::Rom => cmd_rom(cfg),
    }
}

/// Parses `argv`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&RunConfig::from(cli)) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let code = |e: MessError| CliError::from(e).exit_code();
        assert_eq!(code(MessError::Parameter("x".into())), 2);
        assert_eq!(code(MessError::Validation("x".into())), 2);
        assert_eq!(code(MessError::Degenerate("x".into())), 2);
        assert_eq!(
            code(MessError::Format {
                offset: 3,
                message: "x".into()
            }),
            3
        );
        assert_eq!(
            code(MessError::Io {
                path: "p".into(),
                source: std::io::Error::other("x")
            }),
            3
        );
        assert_eq!(code(MessError::Numerical("x".into())), 4);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
    }

    #[test]
    fn required_flags() {
        let cfg = RunConfig::new(Command::Sample, "out");
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
        let cfg = cfg.with_input("x.csv");
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
        let cfg = cfg.with_eps(EpsilonRule::RelativeToDiameter(0.05));
        assert!(cfg.validate().is_ok());

        let mut pod = RunConfig::new(Command::Basis, "out").with_input("x.csv");
        pod.method = BasisMethod::Pod(PodTarget::EnergyEps(0.1));
        assert!(pod.validate().is_ok());
        pod.method = BasisMethod::Pod(PodTarget::EnergyEps(1.5));
        assert_eq!(pod.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn ranges_are_checked_up_front() {
        let base = RunConfig::new(Command::Compress, "out").with_input("x.csv");
        let bad = [
            base.clone().with_eps(EpsilonRule::RelativeToDiameter(1.0)),
            base.clone().with_eps(EpsilonRule::Absolute(0.0)),
            RunConfig {
                threads: 0,
                ..base.clone().with_eps(EpsilonRule::Absolute(1.0))
            },
            RunConfig {
                rank_tol: 0.0,
                ..base.clone().with_eps(EpsilonRule::Absolute(1.0))
            },
            RunConfig {
                stop: StopConfig::enabled(1e-3, 0),
                ..base.clone().with_eps(EpsilonRule::Absolute(1.0))
            },
        ];
        for cfg in bad {
            assert_eq!(cfg.validate().unwrap_err().exit_code(), 2, "{cfg:?}");
        }
        let mut sweep = RunConfig::new(Command::Sweep, "out").with_input("x.csv");
        assert_eq!(sweep.eps_list.len(), 25);
        sweep.eps_list.clear();
        assert!(matches!(sweep.validate(), Err(CliError::Usage(_))));
    }

    #[test]
    fn flags_map_onto_the_config() {
        use clap::Parser;
        let cli = Cli::try_parse_from([
            "mess",
            "sample",
            "--input",
            "x.bin",
            "--eps",
            "0.5",
            "--eps-mode",
            "absolute",
            "--stop-tol",
            "1e-4",
            "--stop-window",
            "3",
            "--out",
            "o",
            "--threads",
            "2",
        ])
        .unwrap();
        let cfg = RunConfig::from(cli);
        assert_eq!(cfg.command, Command::Sample);
        assert_eq!(cfg.eps, Some(EpsilonRule::Absolute(0.5)));
        assert!(cfg.stop.enabled);
        assert_eq!((cfg.stop.potential_tol, cfg.stop.window), (1e-4, 3));
        assert_eq!(cfg.threads, 2);

        let cli = Cli::try_parse_from([
            "mess",
            "sweep",
            "--input",
            "x.csv",
            "--eps-list",
            "0.1,0.2",
            "--out",
            "o",
        ])
        .unwrap();
        let cfg = RunConfig::from(cli);
        assert_eq!(
            cfg.eps_list,
            vec![
                EpsilonRule::RelativeToDiameter(0.1),
                EpsilonRule::RelativeToDiameter(0.2)
            ]
        );
    }
}
