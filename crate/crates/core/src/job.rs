//! Content-addressed job requests shared by the command line and the HTTP service.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::assembly::SpaceKind;
use crate::corners::{assign_boundary_singularities, corner_report};
use crate::degree::measured_hole_degrees;
use crate::energy::{core_energy, expansion_check, expansion_csv, hole_energy_of, renormalized_energy, BoundaryFlux, SingularityConfig};
use crate::error::{Error, Result};
use crate::export::{canonical_json, canonical_json_value, field_json, field_svg, iso_svg, mesh_svg};
use crate::hfield::{default_levels, iso_lines, solve_hfield, HSource};
use crate::locate::Locator;
use crate::mesh::{boundary_analysis, drill_holes, parse_msh, preset_domain, HoleSpec, Mesh, Preset, DEFAULT_CORNER_THRESHOLD};
use crate::solver::{detect_singular_triangles, solve_on_mesh, SolveOptions};
use crate::topology::ph_check;

pub const DEFAULT_H: f64 = 0.05;

/// A preset given either as `kind:params` text or as a tagged object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PresetRef {
    Text(String),
    Spec(Preset),
}

impl PresetRef {
    pub fn resolve(&self) -> Result<Preset> {
        match self {
            PresetRef::Text(s) => Preset::parse(s),
            PresetRef::Spec(p) => Ok(p.clone()),
        }
    }
}

/// Exactly one of `preset`, `msh` or `mesh_id`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<PresetRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msh: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_id: Option<String>,
}

impl MeshSource {
    pub fn preset(spec: &str, h: f64) -> Self {
        Self { preset: Some(PresetRef::Text(spec.into())), h: Some(h), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.preset.is_some() as u8 + self.msh.is_some() as u8 + self.mesh_id.is_some() as u8;
        if n != 1 {
            return Err(Error::Invalid("mesh: exactly one of preset, msh or mesh_id is required".into()));
        }
        if let Some(h) = self.h {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Invalid(format!("mesh.h: must be positive, got {h}")));
            }
        }
        Ok(())
    }

    /// Content hash of the source, used as the mesh id.
    pub fn id(&self) -> Result<String> {
        Ok(sha256_hex(&canonical_json(self)?))
    }

    pub fn load(&self) -> Result<Mesh> {
        self.validate()?;
        if let Some(p) = &self.preset {
            return preset_domain(&p.resolve()?, self.h.unwrap_or(DEFAULT_H));
        }
        if let Some(text) = &self.msh {
            return parse_msh(text);
        }
        Err(Error::Invalid("mesh.mesh_id: unresolved mesh id".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub field: bool,
    pub svg: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self { field: true, svg: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRequest {
    pub mesh: MeshSource,
    #[serde(default)]
    pub holes: Vec<HoleSpec>,
    #[serde(default)]
    pub space: SpaceKind,
    #[serde(default)]
    pub options: SolveOptions,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolesRequest {
    pub mesh: MeshSource,
    #[serde(default)]
    pub holes: Vec<HoleSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenormRequest {
    pub mesh: MeshSource,
    pub config: SingularityConfig,
    /// Defaults to `g = tau^d` with `d` the total degree.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<BoundaryFlux>,
    #[serde(default)]
    pub signed: bool,
    /// Hole radii for the expansion residual sequence.
    #[serde(default)]
    pub rhos: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CornersRequest {
    pub mesh: MeshSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HFieldRequest {
    pub mesh: MeshSource,
    pub sources: Vec<HSource>,
    #[serde(default = "default_level_count")]
    pub levels: usize,
}

fn default_level_count() -> usize {
    12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum JobRequest {
    Solve(SolveRequest),
    Check(HolesRequest),
    EnergyHoles(HolesRequest),
    EnergyRenorm(RenormRequest),
    Corners(CornersRequest),
    Hfield(HFieldRequest),
}

impl JobRequest {
    pub fn op(&self) -> &'static str {
        match self {
            JobRequest::Solve(_) => "solve",
            JobRequest::Check(_) => "check",
            JobRequest::EnergyHoles(_) => "energy_holes",
            JobRequest::EnergyRenorm(_) => "energy_renorm",
            JobRequest::Corners(_) => "corners",
            JobRequest::Hfield(_) => "hfield",
        }
    }

    pub fn mesh(&self) -> &MeshSource {
        match self {
            JobRequest::Solve(r) => &r.mesh,
            JobRequest::Check(r) | JobRequest::EnergyHoles(r) => &r.mesh,
            JobRequest::EnergyRenorm(r) => &r.mesh,
            JobRequest::Corners(r) => &r.mesh,
            JobRequest::Hfield(r) => &r.mesh,
        }
    }

    pub fn mesh_mut(&mut self) -> &mut MeshSource {
        match self {
            JobRequest::Solve(r) => &mut r.mesh,
            JobRequest::Check(r) | JobRequest::EnergyHoles(r) => &mut r.mesh,
            JobRequest::EnergyRenorm(r) => &mut r.mesh,
            JobRequest::Corners(r) => &mut r.mesh,
            JobRequest::Hfield(r) => &mut r.mesh,
        }
    }

    /// sha256 of the canonical request JSON.
    pub fn id(&self) -> Result<String> {
        Ok(sha256_hex(&canonical_json(self)?))
    }
}

pub fn sha256_hex(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Ok,
    CheckFailed,
    NotConverged,
}

/// Result of a job. `body` holds no timing so equal requests give equal bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct JobResult {
    pub status: JobStatus,
    pub body: Value,
    pub svg: Option<String>,
    pub csv: Option<String>,
}

impl JobResult {
    pub fn canonical(&self) -> String {
        canonical_json_value(&self.body)
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn check_holes_inside(mesh: &Mesh, holes: &[HoleSpec]) -> Result<()> {
    let loc = Locator::new(mesh);
    for (i, h) in holes.iter().enumerate() {
        h.validate().map_err(|e| Error::Invalid(format!("holes[{i}]: {e}")))?;
        if loc.locate(h.center).is_none() {
            return Err(Error::Placement(format!("holes[{i}]: center lies outside the domain")));
        }
    }
    Ok(())
}

fn mesh_summary(mesh: &Mesh) -> Value {
    json!({
        "vertices": mesh.num_vertices(),
        "triangles": mesh.num_triangles(),
        "chi": mesh.euler_characteristic(),
        "loops": mesh.boundary_loops.len(),
    })
}

/// Runs a job whose mesh source is a preset or MSH text.
pub fn run_job(req: &JobRequest) -> Result<JobResult> {
    run_job_on(req, &req.mesh().load()?)
}

/// Cheap validation done before a solve is queued: hole placement, options
/// and the topological ledger.
pub fn preflight(req: &JobRequest, mesh: &Mesh) -> Result<()> {
    if let JobRequest::Solve(r) = req {
        check_holes_inside(mesh, &r.holes)?;
        r.options.validate(r.holes.len())?;
        let ledger = ph_check(mesh, &r.holes)?;
        if !ledger.pass && !r.options.override_topology {
            return Err(Error::Infeasible { target: ledger.u_target, placed: ledger.placed });
        }
    }
    Ok(())
}

/// Runs a job on an already loaded mesh.
pub fn run_job_on(req: &JobRequest, mesh: &Mesh) -> Result<JobResult> {
    match req {
        JobRequest::Solve(r) => run_solve(mesh, r),
        JobRequest::Check(r) => {
            check_holes_inside(mesh, &r.holes)?;
            let ledger = ph_check(mesh, &r.holes)?;
            let status = if ledger.pass { JobStatus::Ok } else { JobStatus::CheckFailed };
            let mut body = to_value(&ledger);
            body["op"] = json!("check");
            Ok(JobResult { status, body, svg: None, csv: None })
        }
        JobRequest::EnergyHoles(r) => {
            check_holes_inside(mesh, &r.holes)?;
            let drilled = drill_holes(mesh, &r.holes)?;
            let e_rho = hole_energy_of(&drilled)?;
            let core: f64 = r.holes.iter().map(|h| core_energy(&[h.degree], h.radius.max(f64::MIN_POSITIVE))).sum();
            Ok(JobResult {
                status: JobStatus::Ok,
                body: json!({
                    "op": "energy_holes",
                    "mesh": mesh_summary(&drilled),
                    "e_rho": e_rho,
                    "core_energy": core,
                    "degrees": r.holes.iter().map(|h| h.degree).collect::<Vec<_>>(),
                }),
                svg: Some(mesh_svg(&drilled)),
                csv: None,
            })
        }
        JobRequest::EnergyRenorm(r) => {
            let flux = r.flux.clone().unwrap_or(BoundaryFlux::TangentPower(r.config.total_degree() as i32));
            let mut report = renormalized_energy(mesh, &r.config, &flux, r.signed)?;
            let mut body = json!({"op": "energy_renorm"});
            let mut csv = None;
            if !r.rhos.is_empty() {
                if let Some(x) = r.rhos.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
                    return Err(Error::Invalid(format!("rhos: {x} is not a positive radius")));
                }
                let rows = expansion_check(mesh, &r.config, &flux, &r.rhos)?;
                if let Some(last) = rows.last() {
                    report.e_rho = Some(last.e_rho);
                    report.core_energy = Some(last.core_energy);
                }
                csv = Some(expansion_csv(&rows));
                body["expansion"] = to_value(&rows);
            }
            body["report"] = to_value(&report);
            Ok(JobResult { status: JobStatus::Ok, body, svg: None, csv })
        }
        JobRequest::Corners(r) => {
            let th = r.threshold.unwrap_or(DEFAULT_CORNER_THRESHOLD);
            if !(0.0..std::f64::consts::PI).contains(&th) {
                return Err(Error::Invalid(format!("threshold: {th} outside [0, pi)")));
            }
            let ba = boundary_analysis(mesh, th);
            let alphas: Vec<f64> = ba.corners.iter().map(|c| c.alpha).collect();
            let res = assign_boundary_singularities(&alphas, ba.chi)?;
            let report: Vec<Value> = corner_report(&res)
                .into_iter()
                .zip(&ba.corners)
                .map(|(e, c)| {
                    let mut v = to_value(&e);
                    v["vertex"] = json!(c.vertex);
                    v["position"] = json!(mesh.vertices[c.vertex]);
                    v
                })
                .collect();
            Ok(JobResult {
                status: JobStatus::Ok,
                body: json!({
                    "op": "corners",
                    "chi": ba.chi,
                    "scenario": res.assignment.scenario,
                    "energy": res.energy,
                    "scenario_energy": res.scenario_energy,
                    "corners": report,
                    "interior": res.interior.indices(),
                    "split_halves": res.split_halves,
                    "candidates": res.candidates,
                }),
                svg: None,
                csv: None,
            })
        }
        JobRequest::Hfield(r) => {
            let sol = solve_hfield(mesh, &r.sources)?;
            let lines = iso_lines(mesh, &sol.values, &default_levels(&sol.values, r.levels));
            Ok(JobResult {
                status: JobStatus::Ok,
                body: json!({"op": "hfield", "mesh": mesh_summary(mesh), "solution": sol}),
                svg: Some(iso_svg(mesh, &lines)),
                csv: None,
            })
        }
    }
}

fn run_solve(mesh: &Mesh, r: &SolveRequest) -> Result<JobResult> {
    check_holes_inside(mesh, &r.holes)?;
    r.options.validate(r.holes.len())?;
    let drilled = drill_holes(mesh, &r.holes)?;
    let ledger = ph_check(&drilled, &r.holes)?;
    let sol = solve_on_mesh(&drilled, r.space, &r.options)?;
    let degrees = measured_hole_degrees(&sol.field, &sol.space);
    let e_rho = hole_energy_of(&drilled)?;
    let scan = detect_singular_triangles(&sol.field, &drilled);
    let mut body = json!({
        "op": "solve",
        "space": r.space.as_str(),
        "mesh": mesh_summary(&drilled),
        "ledger": ledger,
        "report": sol.report,
        "hole_degrees": degrees,
        "energy": {"dirichlet": sol.report.dirichlet_energy, "e_rho": e_rho},
        "singular_triangles": scan.singular.len(),
    });
    if r.outputs.field {
        body["field"] = field_json(&sol.field);
    }
    let svg = r.outputs.svg.then(|| field_svg(&drilled, &sol.space, &sol.field));
    let status = if sol.report.converged { JobStatus::Ok } else { JobStatus::NotConverged };
    Ok(JobResult { status, body, svg, csv: None })
}
