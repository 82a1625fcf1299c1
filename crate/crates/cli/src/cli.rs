use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crossfield::job::{run_job, JobResult, JobStatus};
use crossfield::HoleSpec;

use crate::error::{AppError, Result, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};
use crate::request::parse_request;
use crate::service::{serve, AppState};

#[derive(Debug, Parser)]
#[command(name = "crossfield", version, about = "Boundary-aligned cross fields with prescribed singular holes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the minimal field with holes of prescribed degree.
    Solve(SolveArgs),
    /// Hole and renormalized energies.
    #[command(subcommand)]
    Energy(EnergyCommand),
    /// Classify boundary corners and assign their singular indices.
    Corners(CornersArgs),
    /// Poincare-Hopf ledger for a hole configuration.
    Check(HoleArgs),
    /// Harmonic potential H and its iso-lines.
    Hfield(HfieldArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum EnergyCommand {
    /// Energy of the holed domain.
    Holes(HoleArgs),
    /// Renormalized energy W of point singularities.
    Renorm(RenormArgs),
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    /// JSON request document; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Domain preset such as `disk:1`, `annulus:0.4,1` or `polygon:square`.
    #[arg(long)]
    pub preset: Option<String>,
    /// Target edge length for presets.
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<f64>,
    /// Gmsh 2.2 ASCII mesh file.
    #[arg(long)]
    pub msh: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Result JSON path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SVG output path.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HoleArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// Hole as `x,y,radius,degree`; repeatable.
    #[arg(long = "hole", value_parser = parse_hole, allow_hyphen_values = true)]
    pub holes: Vec<HoleSpec>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub holes: HoleArgs,
    /// `CR` or `P1`.
    #[arg(long)]
    pub space: Option<String>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<f64>,
    /// Ginzburg-Landau penalty epsilon.
    #[arg(long, allow_hyphen_values = true)]
    pub gl_eps: Option<f64>,
    /// Hole indices constrained to unit norm, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub unit_norm: Vec<usize>,
    /// Solve even when the degrees contradict the topological target.
    #[arg(long)]
    pub override_topology: bool,
    /// Leave the field values out of the result.
    #[arg(long)]
    pub no_field: bool,
}

#[derive(Debug, Args)]
pub struct RenormArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// Singularity as `x,y,degree`; repeatable.
    #[arg(long = "point", value_parser = parse_point, allow_hyphen_values = true)]
    pub points: Vec<(f64, f64, i32)>,
    /// Allow mixed-sign degrees.
    #[arg(long)]
    pub signed: bool,
    /// Hole radii for the expansion check, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rho: Vec<f64>,
    /// CSV path for the expansion check.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CornersArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// Turning angle below which a boundary vertex is smooth.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct HfieldArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// Source as `x,y,k` with `k` in quarters; repeatable.
    #[arg(long = "source", value_parser = parse_point, allow_hyphen_values = true)]
    pub sources: Vec<(f64, f64, i32)>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listening port; defaults to `PORT` or 8080.
    #[arg(long)]
    pub port: Option<u16>,
}

fn numbers(s: &str, n: usize, what: &str) -> std::result::Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("'{t}' is not a number")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {what}"));
    }
    Ok(v)
}

fn integer(x: f64) -> std::result::Result<i32, String> {
    if x.fract() != 0.0 || x.abs() > i32::MAX as f64 {
        return Err(format!("degree {x} is not an integer"));
    }
    Ok(x as i32)
}

fn parse_hole(s: &str) -> std::result::Result<HoleSpec, String> {
    let v = numbers(s, 4, "x,y,radius,degree")?;
    Ok(HoleSpec::disk([v[0], v[1]], v[2], integer(v[3])?))
}

fn parse_point(s: &str) -> std::result::Result<(f64, f64, i32), String> {
    let v = numbers(s, 3, "x,y,degree")?;
    Ok((v[0], v[1], integer(v[2])?))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| AppError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, data: &str) -> Result<()> {
    std::fs::write(path, data).map_err(|source| AppError::Io { path: path.display().to_string(), source })
}

fn object<'a>(v: &'a mut Value, key: &str) -> Result<&'a mut Map<String, Value>> {
    let Value::Object(map) = v else { return Err(AppError::field("", "expected a JSON object")) };
    let slot = map.entry(key).or_insert_with(|| json!({}));
    match slot {
        Value::Object(m) => Ok(m),
        _ => Err(AppError::field(key, "expected a JSON object")),
    }
}

fn base_document(m: &MeshArgs) -> Result<Value> {
    let mut doc = match &m.config {
        Some(p) => serde_json::from_str(&read(p)?)
            .map_err(|e| AppError::field("", format!("{}: malformed JSON: {e}", p.display())))?,
        None => json!({}),
    };
    if !doc.is_object() {
        return Err(AppError::field("", "config must be a JSON object"));
    }
    if m.preset.is_some() || m.msh.is_some() {
        doc["mesh"] = json!({});
    }
    if m.preset.is_some() || m.msh.is_some() || m.h.is_some() {
        let mesh = object(&mut doc, "mesh")?;
        if let Some(p) = &m.preset {
            mesh.insert("preset".into(), json!(p));
        }
        if let Some(p) = &m.msh {
            mesh.insert("msh".into(), json!(read(p)?));
        }
        if let Some(h) = m.h {
            mesh.insert("h".into(), json!(h));
        }
    }
    Ok(doc)
}

fn hole_document(a: &HoleArgs) -> Result<Value> {
    let mut doc = base_document(&a.mesh)?;
    if !a.holes.is_empty() {
        doc["holes"] = serde_json::to_value(&a.holes).expect("holes");
    }
    Ok(doc)
}

fn points(p: &[(f64, f64, i32)]) -> (Value, Value) {
    (p.iter().map(|&(x, y, _)| json!([x, y])).collect(), p.iter().map(|&(_, _, d)| json!(d)).collect())
}

/// Builds the request document for a subcommand from its config file and flags.
pub fn request_document(cmd: &Command) -> Result<(&'static str, Value, &OutArgs)> {
    Ok(match cmd {
        Command::Solve(a) => {
            let mut doc = hole_document(&a.holes)?;
            if let Some(s) = &a.space {
                doc["space"] = json!(s.to_ascii_uppercase());
            }
            let opts = object(&mut doc, "options")?;
            if let Some(n) = a.max_iter {
                opts.insert("max_iter".into(), json!(n));
            }
            if let Some(t) = a.tol {
                opts.insert("tol".into(), json!(t));
            }
            if let Some(e) = a.gl_eps {
                opts.insert("gl_penalty".into(), json!(e));
            }
            if !a.unit_norm.is_empty() {
                opts.insert("unit_norm_holes".into(), json!(a.unit_norm));
            }
            if a.override_topology {
                opts.insert("override_topology".into(), json!(true));
            }
            let outputs = object(&mut doc, "outputs")?;
            if a.holes.out.svg.is_some() {
                outputs.insert("svg".into(), json!(true));
            }
            if a.no_field {
                outputs.insert("field".into(), json!(false));
            }
            ("solve", doc, &a.holes.out)
        }
        Command::Check(a) => ("check", hole_document(a)?, &a.out),
        Command::Energy(EnergyCommand::Holes(a)) => ("energy_holes", hole_document(a)?, &a.out),
        Command::Energy(EnergyCommand::Renorm(a)) => {
            let mut doc = base_document(&a.mesh)?;
            if !a.points.is_empty() {
                let (pts, degs) = points(&a.points);
                doc["config"] = json!({"points": pts, "degrees": degs});
            }
            if a.signed {
                doc["signed"] = json!(true);
            }
            if !a.rho.is_empty() {
                doc["rhos"] = json!(a.rho);
            }
            ("energy_renorm", doc, &a.out)
        }
        Command::Corners(a) => {
            let mut doc = base_document(&a.mesh)?;
            if let Some(t) = a.threshold {
                doc["threshold"] = json!(t);
            }
            ("corners", doc, &a.out)
        }
        Command::Hfield(a) => {
            let mut doc = base_document(&a.mesh)?;
            if !a.sources.is_empty() {
                doc["sources"] = a.sources.iter().map(|&(x, y, k)| json!({"point": [x, y], "k": k})).collect();
            }
            if let Some(n) = a.levels {
                doc["levels"] = json!(n);
            }
            ("hfield", doc, &a.out)
        }
        Command::Serve(_) => return Err(AppError::Internal("serve has no request document".into())),
    })
}

fn emit(result: &JobResult, out: &OutArgs, csv: Option<&PathBuf>) -> Result<()> {
    let doc = result.canonical();
    match &out.out {
        Some(p) => write(p, &doc)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{doc}");
        }
    }
    if let Some(p) = &out.svg {
        match &result.svg {
            Some(svg) => write(p, svg)?,
            None => eprintln!("warning: this operation produces no SVG"),
        }
    }
    if let Some(p) = csv {
        match &result.csv {
            Some(c) => write(p, c)?,
            None => eprintln!("warning: no expansion rows; pass --rho to produce CSV"),
        }
    }
    Ok(())
}

fn execute(cmd: &Command) -> Result<i32> {
    if let Command::Serve(a) = cmd {
        let port = match a.port {
            Some(p) => p,
            None => match std::env::var("PORT") {
                Ok(s) => s.parse().map_err(|_| AppError::field("PORT", format!("'{s}' is not a port")))?,
                Err(_) => 8080,
            },
        };
        let rt = tokio::runtime::Builder::new_multi_thread()
            .enable_all()
            .build()
            .map_err(|e| AppError::Internal(e.to_string()))?;
        rt.block_on(serve(port, AppState::from_env()))
            .map_err(|source| AppError::Io { path: format!("port {port}"), source })?;
        return Ok(EXIT_OK);
    }
    let (op, doc, out) = request_document(cmd)?;
    let req = parse_request(op, doc)?;
    let result = run_job(&req)?;
    let csv = match cmd {
        Command::Energy(EnergyCommand::Renorm(a)) => a.csv.as_ref(),
        _ => None,
    };
    emit(&result, out, csv)?;
    Ok(match result.status {
        JobStatus::Ok => EXIT_OK,
        JobStatus::CheckFailed => {
            let b = &result.body;
            eprintln!(
                "check failed: u_target {} but holes place {} (deficit {})",
                b["u_target"], b["placed"], b["deficit"]
            );
            EXIT_VALIDATION
        }
        JobStatus::NotConverged => {
            eprintln!("solver did not converge");
            EXIT_NOT_CONVERGED
        }
    })
}

/// Parses `argv` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
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
    fn hole_and_point_flags() {
        let h = parse_hole("-0.6, 0, 0.1, -2").unwrap();
        assert_eq!((h.center, h.radius, h.degree), ([-0.6, 0.0], 0.1, -2));
        assert!(parse_hole("0,0,0.1").is_err());
        assert!(parse_hole("0,0,0.1,x").is_err());
        assert!(parse_hole("0,0,0.1,2.5").is_err());
        assert_eq!(parse_point("1,2,3").unwrap(), (1.0, 2.0, 3));
    }

    #[test]
    fn flags_override_the_config_mesh() {
        let cli = Cli::try_parse_from(["crossfield", "solve", "--preset", "disk:1", "--max-iter", "5", "--svg", "x.svg"]).unwrap();
        let (op, doc, _) = request_document(&cli.command).unwrap();
        assert_eq!(op, "solve");
        assert_eq!(doc, json!({"mesh": {"preset": "disk:1"}, "options": {"max_iter": 5}, "outputs": {"svg": true}}));
    }
}
