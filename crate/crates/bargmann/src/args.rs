//! Command-line arguments and the resolved run configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use bargmann_core::models::Model;
use bargmann_core::Tolerances;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::CliError;
use crate::formats::Payload;
use crate::output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "bargmann",
    version,
    about = "Gauge-invariant geometry of quantum state families"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Built-in model: spin_half, spin_half_angles, spin_one, veronese, lll, qwz.
    #[arg(long)]
    pub model: Option<String>,
    /// Model parameter, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_assignment)]
    pub params: Vec<(String, f64)>,
    /// Grid nodes per axis.
    #[arg(long, value_name = "N1xN2", value_parser = parse_grid)]
    pub grid: Option<GridSpec>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Finite-difference step.
    #[arg(long = "h", value_name = "STEP")]
    pub step: Option<f64>,
    /// Tolerance override, repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE", value_parser = parse_assignment)]
    pub tol: Vec<(String, f64)>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    #[serde(skip)]
    pub dry_run: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Two- and three-point invariants of a point set.
    Invariants {
        #[command(flatten)]
        common: Common,
        /// JSON file holding an array of parameter points.
        #[arg(long, value_name = "PATH")]
        points: Option<PathBuf>,
        /// Inline point `x1,x2`, repeatable.
        #[arg(long = "point", value_name = "X1,X2", value_parser = parse_vector, allow_hyphen_values = true)]
        inline: Vec<Coords>,
    },
    /// Sweep g, omega or T over a grid.
    Geometry {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Which::All)]
        which: Which,
        /// Parameter box `lo:hi` per axis, comma separated. Periodic models
        /// default to one period, others to a model-specific box.
        #[arg(long, value_name = "LO:HI,LO:HI", allow_hyphen_values = true)]
        range: Option<String>,
    },
    /// Berry phase of a circular parameter loop by three methods.
    Berry {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
        center: Coords,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 1024)]
        samples: usize,
        /// Reference point for the triangle fan and the connection; the
        /// loop center when absent. Repeatable.
        #[arg(long = "reference", value_parser = parse_vector, allow_hyphen_values = true)]
        references: Vec<Coords>,
    },
    /// Reconstruct states from an invariant set.
    Tomography {
        #[command(flatten)]
        common: Common,
        /// Invariant-set JSON file.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        anchor: usize,
        /// Self-test on this many random states instead of reading a file.
        #[arg(long)]
        random: Option<usize>,
        /// Projective dimension of the random states.
        #[arg(long, default_value_t = 4)]
        dim: usize,
    },
    /// Band observables over the Brillouin zone.
    Band {
        #[command(subcommand)]
        command: BandCommand,
    },
    /// Curves in the projective line: T profile, reconstruction, turning.
    Curve {
        #[command(flatten)]
        common: Common,
        /// `figure8`, `circle:R` or `winding:N:S`.
        #[arg(long, default_value = "figure8")]
        curve: String,
        #[arg(long, value_enum, default_value_t = CurveAction::Profile)]
        action: CurveAction,
        #[arg(long, default_value_t = 2048)]
        samples: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum BandCommand {
    /// Wilson-line polarization, from a model or a Bloch-grid file.
    Polarization {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Position cumulants by both routes.
    Cumulants {
        #[command(flatten)]
        common: Common,
        /// Single order 1, 2 or 3; all three when absent.
        #[arg(long)]
        order: Option<usize>,
        /// Wavevector step of the generating-function differences.
        #[arg(long, default_value_t = bargmann_core::band::GENERATING_STEP)]
        qstep: f64,
    },
    /// sigma(q) for q along the first axis, with the second-order fit.
    Conductivity {
        #[command(flatten)]
        common: Common,
        /// Wavevector magnitudes, comma separated.
        #[arg(long, value_parser = parse_vector, default_value = "0.2,0.1,0.05")]
        q: Coords,
    },
    /// Write a model's band states as a Bloch-grid file.
    Export {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = PayloadArg::Json)]
        payload: PayloadArg,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    G,
    Omega,
    T,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveAction {
    Profile,
    Reconstruct,
    Intersection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PayloadArg {
    Json,
    Binary,
}

impl From<PayloadArg> for Payload {
    fn from(p: PayloadArg) -> Self {
        match p {
            PayloadArg::Json => Payload::Json,
            PayloadArg::Binary => Payload::Binary,
        }
    }
}

/// Comma-separated reals.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Coords(pub Vec<f64>);

/// Grid sizes written `N1xN2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct GridSpec(pub Vec<usize>);

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("{v:?} is not a number"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    s.split(['x', 'X'])
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad grid size {p:?} in {s:?}"))
        })
        .collect::<Result<_, _>>()
        .map(GridSpec)
}

fn parse_vector(s: &str) -> Result<Coords, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("{p:?} is not a number"))
        })
        .collect::<Result<_, _>>()
        .map(Coords)
}

/// Everything that determines a run, after defaults and validation.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub model: Option<String>,
    pub parameters: BTreeMap<String, f64>,
    pub grid: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub h: f64,
    pub tolerances: BTreeMap<String, f64>,
    pub seed: u64,
    pub options: serde_json::Value,
    #[serde(skip)]
    pub resolved_model: Option<Model>,
    #[serde(skip)]
    pub tol: Tolerances,
}

impl RunConfig {
    pub fn resolve(
        command: &str,
        common: &Common,
        options: serde_json::Value,
    ) -> Result<RunConfig, CliError> {
        let mut tol = Tolerances::DEFAULT;
        for (name, value) in &common.tol {
            if !tol.set(name, *value) {
                return Err(CliError::Input(format!(
                    "unknown tolerance {name}; known: {}",
                    Tolerances::NAMES.join(", ")
                )));
            }
        }
        let mut tolerances = BTreeMap::new();
        for name in Tolerances::NAMES {
            tolerances.insert(name.to_string(), tol.get(name).expect("listed name"));
        }
        let resolved_model = match &common.model {
            Some(name) => Some(Model::from_name(name, &common.params)?),
            None if !common.params.is_empty() => {
                return Err(CliError::Input("--param needs --model".into()));
            }
            None => None,
        };
        if let Some(GridSpec(grid)) = &common.grid {
            if grid.is_empty() || grid.contains(&0) {
                return Err(CliError::Input("grid is empty".into()));
            }
        }
        let h = common.step.unwrap_or(bargmann_core::deriv::DEFAULT_STEP);
        if !(h > 0.0 && h.is_finite()) {
            return Err(CliError::Input(format!("step must be positive, got {h}")));
        }
        Ok(RunConfig {
            command: command.to_string(),
            model: common.model.clone(),
            parameters: common.params.iter().cloned().collect(),
            grid: common.grid.clone().map(|g| g.0),
            out: common.out.clone(),
            format: common.format,
            h,
            tolerances,
            seed: common.seed,
            options,
            resolved_model,
            tol,
        })
    }

    pub fn model(&self) -> Result<&Model, CliError> {
        self.resolved_model
            .as_ref()
            .ok_or_else(|| CliError::Input(format!("{} needs --model", self.command)))
    }

    pub fn grid(&self) -> Result<&[usize], CliError> {
        self.grid
            .as_deref()
            .ok_or_else(|| CliError::Input(format!("{} needs --grid", self.command)))
    }
}
