//! The `grushin` command line.
//!
//! Every run is a pure function of its arguments. The parsed configuration
//! is echoed into the output: as a leading `# config ...` line in CSV and
//! OBJ files, and as a `"config"` field in JSON documents.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::embedding::{write_mesh, IsometryOutcome, MeshFormat, RevolutionProfile};
use crate::error::{GrushinError, Result};
use crate::evolution::{self, Boundary, Equation, EvolutionConfig, SensitivityProtocol};
use crate::geodesics::{self, PhasePoint};
use crate::geometry::GrushinModel;
use crate::spectral::{self, FiberOperator, Quantization, Side};
use crate::tube::{self, TestFunction, TubeBand};

#[derive(Parser, Debug)]
#[command(
    name = "grushin",
    version,
    about = "Geometry and quantization diagnostics for the alpha-Grushin cylinder"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Gaussian curvature K, mean curvature H and effective potential
    /// -K + H^2 of the revolution embedding (CSV).
    Curvature(CurvatureArgs),
    /// Tessellated surface of revolution isometric to the metric: the
    /// trumpet bell, winded bell or alpha-embedding (OBJ or CSV).
    Embed(EmbedArgs),
    /// One geodesic of the Hamiltonian H = (px^2 + |x|^(2 alpha) py^2)/2 (CSV).
    Geodesic(GeodesicArgs),
    /// Endpoints at time T of unit-speed geodesics from one point: the
    /// geodesic wavefront (CSV).
    Wavefront(WavefrontArgs),
    /// First conjugate time along a geodesic, from the Jacobi determinant (JSON).
    Conjugate(ConjugateArgs),
    /// Limit-point / limit-circle class of a fiber endpoint of the intrinsic
    /// (Delta - cK) or extrinsic (Delta - K + H^2) Laplacian (JSON).
    Classify(ClassifyArgs),
    /// Numerical Weyl alternative: masses of the solutions of
    /// -u'' + (V_k - i)u = 0 toward an endpoint (JSON).
    Weyl(WeylArgs),
    /// Deficiency indices per Fourier mode and essential self-adjointness
    /// verdict (JSON).
    Deficiency(DeficiencyArgs),
    /// Thin-tube check: shifted Rayleigh quotients Q_eps + (pi/2eps)^2
    /// against the extrinsic-Laplacian quotient (CSV).
    TubeCheck(TubeArgs),
    /// Heat or Schrodinger evolution of one Fourier fiber (CSV).
    Evolve(EvolveArgs),
    /// Dirichlet-versus-Neumann sensitivity of the heat flow at a
    /// singular endpoint, the dynamical trace of self-adjointness (CSV).
    BcSensitivity(SensitivityArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
#[group(required = true, multiple = false)]
pub struct ModelArgs {
    /// Metric exponent alpha of dx^2 + |x|^(-2 alpha) dy^2.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Grushin metric with the n^2-winded bell embedding.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winded: Option<u32>,
}

impl ModelArgs {
    fn model(&self) -> Result<GrushinModel> {
        match (self.alpha, self.winded) {
            (Some(a), None) => GrushinModel::alpha(a),
            (None, Some(n)) => GrushinModel::winded(n),
            _ => Err(GrushinError::invalid(
                "exactly one of --alpha and --winded is required",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantizationKind {
    Intrinsic,
    Extrinsic,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FiberArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Quantization: intrinsic (Delta - cK) or extrinsic (Delta - K + H^2).
    #[arg(long, value_enum)]
    pub quantization: QuantizationKind,
    /// Curvature coupling c of the intrinsic Laplacian.
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    /// Fourier mode k.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub k: i64,
}

impl FiberArgs {
    fn quantization(&self) -> Quantization {
        match self.quantization {
            QuantizationKind::Intrinsic => Quantization::Intrinsic { c: self.c },
            QuantizationKind::Extrinsic => Quantization::Extrinsic,
        }
    }

    fn operator(&self) -> Result<FiberOperator> {
        FiberOperator::new(self.model.model()?, self.quantization(), self.k)
    }
}

fn parse_side(op: &FiberOperator, text: &str) -> Result<Side> {
    match text {
        "left" => Ok(Side::Left),
        "right" => Ok(Side::Right),
        "inf" | "+inf" | "infinity" => op.side_at(f64::INFINITY),
        "-inf" => op.side_at(f64::NEG_INFINITY),
        other => {
            let x: f64 = other
                .parse()
                .map_err(|_| GrushinError::invalid(format!("unrecognized endpoint '{other}'")))?;
            op.side_at(x)
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct CurvatureArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Evaluation points.
    #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Lower end of the x range.
    #[arg(long)]
    pub x_min: f64,
    /// Upper end of the x range.
    #[arg(long)]
    pub x_max: f64,
    /// Samples along x.
    #[arg(long, default_value_t = 50)]
    pub nx: usize,
    /// Samples around the circle.
    #[arg(long, default_value_t = 64)]
    pub ny: usize,
    /// Sweep the whole circle, wrapping a winded bell n^2 times.
    #[arg(long)]
    pub full_winding: bool,
    #[arg(long, value_enum, default_value_t = MeshFormat::Obj)]
    #[serde(skip)]
    pub format: MeshFormat,
    /// Also report the finite-difference isometry check on the x samples
    /// (written to standard error).
    #[arg(long)]
    pub verify: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct GeodesicArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Initial x.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: f64,
    /// Initial y.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub y0: f64,
    /// Initial momentum p_x.
    #[arg(long, allow_hyphen_values = true)]
    pub px: f64,
    /// Initial momentum p_y.
    #[arg(long, allow_hyphen_values = true)]
    pub py: f64,
    /// Final time (negative runs backwards).
    #[arg(long = "T", allow_hyphen_values = true)]
    pub t_end: f64,
    /// Fixed implicit-midpoint steps.
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct WavefrontArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Initial x.
    #[arg(long)]
    pub x0: f64,
    /// Initial y.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub y0: f64,
    /// Final time.
    #[arg(long = "T", allow_hyphen_values = true)]
    pub t_end: f64,
    /// Number of equally spaced launch angles.
    #[arg(long, default_value_t = 256)]
    pub angles: usize,
    /// Fixed implicit-midpoint steps.
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct ConjugateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Initial x.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: f64,
    /// Initial y.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub y0: f64,
    /// Initial momentum p_x.
    #[arg(long, allow_hyphen_values = true)]
    pub px: f64,
    /// Initial momentum p_y.
    #[arg(long, allow_hyphen_values = true)]
    pub py: f64,
    /// Search horizon for the first conjugate time.
    #[arg(long)]
    pub t_max: f64,
    /// Fixed implicit-midpoint steps.
    #[arg(long, default_value_t = 20_000)]
    pub steps: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub fiber: FiberArgs,
    /// Endpoint: a number, `inf`, `left` or `right`; both ends when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub endpoint: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct WeylArgs {
    #[command(flatten)]
    pub fiber: FiberArgs,
    /// Endpoint: a number, `inf`, `left` or `right`.
    #[arg(long, allow_hyphen_values = true)]
    pub endpoint: String,
    /// Strictly decreasing cutoffs; defaults depend on the endpoint.
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct DeficiencyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Quantization: intrinsic (Delta - cK) or extrinsic (Delta - K + H^2).
    #[arg(long, value_enum)]
    pub quantization: QuantizationKind,
    /// Curvature coupling c of the intrinsic Laplacian.
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    /// Smallest Fourier mode.
    #[arg(long, default_value_t = -5, allow_hyphen_values = true)]
    pub k_min: i64,
    /// Largest Fourier mode.
    #[arg(long, default_value_t = 5, allow_hyphen_values = true)]
    pub k_max: i64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct TubeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Lower end of the x range.
    #[arg(long)]
    pub x_min: f64,
    /// Upper end of the x range.
    #[arg(long)]
    pub x_max: f64,
    /// Fourier mode k.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub k: i64,
    /// Strictly decreasing tube half-thicknesses.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.05, 0.025])]
    pub eps: Vec<f64>,
    /// Gauss-Legendre nodes per axis.
    #[arg(long, default_value_t = tube::DEFAULT_NODES)]
    pub nodes: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub fiber: FiberArgs,
    /// Lower end of the x range.
    #[arg(long)]
    pub x_min: f64,
    /// Upper end of the x range.
    #[arg(long)]
    pub x_max: f64,
    /// Grid points, both boundary nodes included.
    #[arg(long, default_value_t = 801)]
    pub n: usize,
    /// Boundary condition at the left end.
    #[arg(long, value_enum, default_value_t = Boundary::Dirichlet)]
    pub bc_left: Boundary,
    /// Boundary condition at the right end.
    #[arg(long, value_enum, default_value_t = Boundary::Dirichlet)]
    pub bc_right: Boundary,
    /// Heat (u_t = -Hu) or Schrodinger (i psi_t = H psi/2).
    #[arg(long, value_enum, default_value_t = Equation::Heat)]
    pub equation: Equation,
    /// Final time.
    #[arg(long = "T")]
    pub t_end: f64,
    /// Time step; defaults to the grid spacing.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Record a snapshot every this many steps.
    #[arg(long, default_value_t = 10)]
    pub save_every: usize,
    /// Center of the Gaussian initial datum; defaults to mid-interval.
    #[arg(long)]
    pub center: Option<f64>,
    /// Width of the Gaussian initial datum.
    #[arg(long, default_value_t = 0.1)]
    pub width: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub fiber: FiberArgs,
    /// The singular endpoint: a number, `left` or `right`.
    #[arg(long, allow_hyphen_values = true)]
    pub endpoint: String,
    /// Strictly decreasing cutoff distances from the endpoint.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.05, 0.025, 0.0125])]
    pub deltas: Vec<f64>,
    /// Final time.
    #[arg(long = "T", default_value_t = 0.1)]
    pub t_end: f64,
    /// Width of the Gaussian initial datum.
    #[arg(long, default_value_t = 0.1)]
    pub width: f64,
    /// Probe center; defaults to one unit from the singular end.
    #[arg(long)]
    pub center: Option<f64>,
    /// Regular truncation carrying a Dirichlet condition.
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    pub far_end: f64,
    /// Grid points, both boundary nodes included.
    #[arg(long, default_value_t = 4001)]
    pub n: usize,
    /// Heat (u_t = -Hu) or Schrodinger (i psi_t = H psi/2).
    #[arg(long, value_enum, default_value_t = Equation::Heat)]
    pub equation: Equation,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl Command {
    fn out_path(&self) -> Option<&PathBuf> {
        match self {
            Command::Curvature(a) => a.output.out.as_ref(),
            Command::Embed(a) => a.output.out.as_ref(),
            Command::Geodesic(a) => a.output.out.as_ref(),
            Command::Wavefront(a) => a.output.out.as_ref(),
            Command::Conjugate(a) => a.output.out.as_ref(),
            Command::Classify(a) => a.output.out.as_ref(),
            Command::Weyl(a) => a.output.out.as_ref(),
            Command::Deficiency(a) => a.output.out.as_ref(),
            Command::TubeCheck(a) => a.output.out.as_ref(),
            Command::Evolve(a) => a.output.out.as_ref(),
            Command::BcSensitivity(a) => a.output.out.as_ref(),
        }
    }

    fn config_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).unwrap_or(serde_json::Value::Null);
        if let Command::Embed(a) = self {
            if let Some(obj) = v.get_mut("embed").and_then(|e| e.as_object_mut()) {
                let f = match a.format {
                    MeshFormat::Obj => "obj",
                    MeshFormat::Csv => "csv",
                };
                obj.insert("format".into(), json!(f));
            }
        }
        v
    }
}

fn header(buf: &mut Vec<u8>, config: &serde_json::Value) -> Result<()> {
    writeln!(buf, "# config {config}")?;
    Ok(())
}

fn json_document(config: &serde_json::Value, result: impl Serialize) -> Result<Vec<u8>> {
    let doc = json!({ "config": config, "result": result });
    let mut s = serde_json::to_vec_pretty(&doc).map_err(|e| GrushinError::numerical(e.to_string(), None))?;
    s.push(b'\n');
    Ok(s)
}

/// Executes one parsed command and returns the bytes of its output.
pub fn execute(command: &Command, diagnostics: &mut dyn Write) -> Result<Vec<u8>> {
    let config = command.config_json();
    let mut buf = Vec::new();
    match command {
        Command::Curvature(a) => {
            let m = a.model.model()?;
            header(&mut buf, &config)?;
            writeln!(buf, "x,gaussian,mean,effective_potential")?;
            for &x in &a.x {
                let s = m.curvature_sample(x)?;
                writeln!(buf, "{},{},{},{}", s.x, s.gaussian, s.mean, s.effective_potential)?;
            }
        }
        Command::Embed(a) => {
            let profile = RevolutionProfile::new(a.model.model()?);
            let mesh = profile.generate_mesh((a.x_min, a.x_max), a.nx, a.ny, a.full_winding)?;
            if a.verify {
                let xs: Vec<f64> = (0..a.nx)
                    .map(|i| a.x_min + (a.x_max - a.x_min) * i as f64 / (a.nx - 1) as f64)
                    .collect();
                for row in profile.verify_isometry(&xs, crate::embedding::ISOMETRY_STEP) {
                    match row {
                        IsometryOutcome::Checked(r) => writeln!(
                            diagnostics,
                            "isometry x={} E_err={:e} F_err={:e} G_err={:e}",
                            r.x, r.e_err, r.f_err, r.g_err
                        )?,
                        IsometryOutcome::Flagged { x, reason } => {
                            writeln!(diagnostics, "isometry x={x} flagged: {reason}")?
                        }
                    }
                }
            }
            header(&mut buf, &config)?;
            write_mesh(&mesh, a.format, &mut buf)?;
        }
        Command::Geodesic(a) => {
            let start = PhasePoint::new(a.x0, a.y0, a.px, a.py);
            let traj = geodesics::geodesic_flow(a.model.model()?, start, a.t_end, a.steps)?;
            header(&mut buf, &config)?;
            writeln!(buf, "t,x,y,px,py")?;
            for (t, p) in traj {
                writeln!(buf, "{t},{},{},{},{}", p.x, p.y, p.px, p.py)?;
            }
        }
        Command::Wavefront(a) => {
            let front = geodesics::wavefront(a.model.model()?, (a.x0, a.y0), a.t_end, a.angles, a.steps)?;
            header(&mut buf, &config)?;
            writeln!(buf, "theta,x_end,y_end")?;
            for p in front {
                writeln!(buf, "{},{},{}", p.theta, p.x, p.y)?;
            }
        }
        Command::Conjugate(a) => {
            let start = PhasePoint::new(a.x0, a.y0, a.px, a.py);
            let t = geodesics::conjugate_time(a.model.model()?, start, a.t_max, a.steps)?;
            buf = json_document(&config, json!({ "conjugate_time": t }))?;
        }
        Command::Classify(a) => {
            let op = a.fiber.operator()?;
            let sides = match &a.endpoint {
                Some(e) => vec![parse_side(&op, e)?],
                None => vec![Side::Left, Side::Right],
            };
            let records = sides
                .into_iter()
                .map(|s| spectral::classification_record(&op, s))
                .collect::<Result<Vec<_>>>()?;
            buf = json_document(&config, records)?;
        }
        Command::Weyl(a) => {
            let op = a.fiber.operator()?;
            let side = parse_side(&op, &a.endpoint)?;
            let cutoffs = if a.cutoffs.is_empty() {
                op.default_cutoffs(side)
            } else {
                a.cutoffs.clone()
            };
            let report = spectral::weyl_numerical_check(&op, side, &cutoffs)?;
            let analytic = op.classify_endpoint(side).ok();
            buf = json_document(&config, json!({ "weyl": report, "analytic": analytic }))?;
        }
        Command::Deficiency(a) => {
            if a.k_min > a.k_max {
                return Err(GrushinError::invalid("k-min must not exceed k-max"));
            }
            let q = match a.quantization {
                QuantizationKind::Intrinsic => Quantization::Intrinsic { c: a.c },
                QuantizationKind::Extrinsic => Quantization::Extrinsic,
            };
            let report = spectral::deficiency_report(a.model.model()?, q, a.k_min..=a.k_max)?;
            buf = json_document(&config, report)?;
        }
        Command::TubeCheck(a) => {
            let eps0 = *a
                .eps
                .first()
                .ok_or_else(|| GrushinError::invalid("at least one epsilon is required"))?;
            let band = TubeBand::new(a.model.model()?, (a.x_min, a.x_max), eps0, a.k)?;
            let psi = TestFunction::spanning(&band);
            let rows = tube::convergence_study(&band, &psi, &a.eps, a.nodes)?;
            header(&mut buf, &config)?;
            writeln!(buf, "epsilon,q_shifted,target,error,ratio")?;
            for r in rows {
                let ratio = r.ratio.map(|v| v.to_string()).unwrap_or_default();
                writeln!(
                    buf,
                    "{},{},{},{},{ratio}",
                    r.epsilon, r.q_shifted, r.target, r.error
                )?;
            }
        }
        Command::Evolve(a) => {
            let op = a.fiber.operator()?;
            let cfg = EvolutionConfig {
                interval: (a.x_min, a.x_max),
                n: a.n,
                bc: (a.bc_left, a.bc_right),
                dt: a.dt,
                equation: a.equation,
                t_end: a.t_end,
                save_every: a.save_every,
            };
            let disc = evolution::discretize(&op, cfg.interval, cfg.n, cfg.bc)?;
            let center = a.center.unwrap_or(0.5 * (a.x_min + a.x_max));
            let init = evolution::gaussian(&disc.grid, center, a.width);
            let sol = evolution::evolve_discrete(&op, &disc, &cfg, &init)?;
            let d = &sol.diagnostics;
            match a.equation {
                Equation::Schrodinger => writeln!(
                    diagnostics,
                    "norm drift per unit time {:e}, lowest eigenvalue {}",
                    d.norm_drift_per_unit_time, d.lowest_eigenvalue
                )?,
                Equation::Heat => writeln!(
                    diagnostics,
                    "norm nonincreasing {}, lowest eigenvalue {}",
                    d.norm_nonincreasing, d.lowest_eigenvalue
                )?,
            }
            header(&mut buf, &config)?;
            sol.write_csv(&mut buf)?;
        }
        Command::BcSensitivity(a) => {
            let op = a.fiber.operator()?;
            let side = parse_side(&op, &a.endpoint)?;
            let protocol = SensitivityProtocol {
                equation: a.equation,
                t_end: a.t_end,
                width: a.width,
                center: a.center,
                far_end: a.far_end,
                n: a.n,
                dt_factor: 1.0,
            };
            let rows = evolution::bc_sensitivity(&op, side, &a.deltas, &protocol)?;
            header(&mut buf, &config)?;
            writeln!(buf, "delta,sensitivity_dirichlet_vs_neumann")?;
            for r in rows {
                writeln!(buf, "{},{}", r.delta, r.sensitivity)?;
            }
        }
    }
    Ok(buf)
}

/// Parses `args`, runs the command and writes its output to the `--out`
/// file or to `stdout`. Returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
            } else {
                let _ = write!(stdout, "{rendered}");
            }
            return code;
        }
    };
    let result = execute(&cli.command, stderr).and_then(|bytes| match cli.command.out_path() {
        Some(path) => std::fs::write(path, bytes).map_err(GrushinError::from),
        None => stdout.write_all(&bytes).map_err(GrushinError::from),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}
