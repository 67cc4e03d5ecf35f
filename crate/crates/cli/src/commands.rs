//! Subcommand bodies. Each returns the `result` object of the output envelope
//! plus any side files to write next to it.

use anyhow::Context;
use serde_json::{json, Value};

use anisoperi::body::{wulff_membership, ConvexBody, Membership};
use anisoperi::density::{
    audit_fibers, audit_fibers_along, constants, density_codim1, density_codim2, lower_bound_sup, restrict_density,
    DensityField,
};
use anisoperi::frame::Frame;
use anisoperi::john::{john_of_body, nonsharp_chain, JohnOptions};
use anisoperi::mesh::{generate, off::read_off, off::write_off, verify_inequality, MeshSurface};
use anisoperi::projection::{min_projection, ratio_rhs_from_area, SearchOptions};
use anisoperi::sampling::sphere_directions;
use anisoperi::transport::{covering_check, solve_neumann, CoveringOptions};
use anisoperi::xray::{run_xray, strictness_experiment, ProgramOptions, SolveOptions, XrayOptions};

use crate::config::{DensityChoice, ExperimentConfig, MeshSource};

pub struct Outcome {
    pub result: Value,
    /// `(file name, contents)` written to the output directory.
    pub files: Vec<(String, String)>,
}

impl Outcome {
    fn json(result: Value) -> Self {
        Self { result, files: Vec::new() }
    }
}

fn body_of(cfg: &ExperimentConfig) -> anyhow::Result<ConvexBody> {
    let desc = cfg.body.as_ref().ok_or_else(|| anisoperi::Error::Schema("config needs a body".into()))?;
    Ok(desc.build()?)
}

fn check_split(cfg: &ExperimentConfig, body: &ConvexBody) -> anyhow::Result<()> {
    if cfg.n + cfg.m != body.dim() || cfg.n == 0 || cfg.m == 0 {
        return Err(anisoperi::Error::DimensionMismatch { expected: body.dim(), got: cfg.n + cfg.m }.into());
    }
    Ok(())
}

fn search(seed: u64) -> SearchOptions {
    SearchOptions { seed, ..Default::default() }
}

pub fn body_info(cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<Outcome> {
    let body = body_of(cfg)?;
    check_split(cfg, &body)?;
    let d = body.dim();
    let dirs = sphere_directions(d, cfg.body_info.support_samples, seed);
    let support: Vec<Value> = dirs.iter().map(|u| json!({ "direction": u, "value": body.support(u) })).collect();
    // membership sanity: support points lie on the boundary, scaled copies in/out
    let probes = sphere_directions(d, cfg.body_info.membership_samples, seed.wrapping_add(1));
    let (mut inside_ok, mut outside_ok, mut wulff_agree) = (0usize, 0usize, 0usize);
    for (k, u) in probes.iter().enumerate() {
        let p = body.support_point(u);
        let inner: Vec<f64> = p.iter().map(|x| 0.9 * x).collect();
        let outer: Vec<f64> = p.iter().map(|x| 1.1 * x).collect();
        inside_ok += body.contains(&inner) as usize;
        outside_ok += (!body.contains(&outer)) as usize;
        if k < 50 {
            let w = wulff_membership(&body, &inner, 2000)?;
            wulff_agree += (w.class != Membership::Out) as usize;
        }
    }
    let proj = min_projection(&body, cfg.n, search(seed))?;
    Ok(Outcome::json(json!({
        "dim": d,
        "provenance": body.provenance(),
        "circumradius": body.circumradius(),
        "support_tol": body.support_tol(),
        "exact_volume": body.exact_volume(),
        "support_samples": support,
        "membership": {
            "probes": probes.len(),
            "shrunk_support_points_inside": inside_ok,
            "dilated_support_points_outside": outside_ok,
            "wulff_oracle_checked": probes.len().min(50),
            "wulff_oracle_agrees": wulff_agree,
        },
        "w_star": {
            "area": proj.area,
            "area_tol": proj.area_tol,
            "certified": proj.is_certified_min,
            "stationary": proj.stationary,
            "frame": proj.frame.vectors(),
        },
        "ratio_rhs": ratio_rhs_from_area(proj.area, cfg.n),
    })))
}

fn density_field(cfg: &ExperimentConfig, body: &ConvexBody) -> anyhow::Result<DensityField> {
    let root = body
        .root_ellipsoid()
        .ok_or_else(|| anisoperi::Error::Schema("density candidates need an ellipsoid or a long body".into()))?
        .clone();
    let base = match cfg.density.kind {
        DensityChoice::Codim1 => {
            if cfg.m != 1 {
                return Err(anisoperi::Error::Schema("codim1 density needs m = 1".into()).into());
            }
            density_codim1(&root)
        }
        DensityChoice::Codim2 => density_codim2(&root, cfg.density.sigma, cfg.m)?,
    };
    Ok(restrict_density(&base, body)?)
}

pub fn density_audit(cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<Outcome> {
    let body = body_of(cfg)?;
    check_split(cfg, &body)?;
    let field = density_field(cfg, &body)?;
    let report = audit_fibers(&field, cfg.density.fibers, seed, cfg.density.tol)?;
    let e = field.ellipsoid();
    let d = e.dim();
    // fibers along the longest principal axes
    let axes: Vec<Vec<f64>> = (d - cfg.m..d).map(|i| e.principal_axis(i)).collect();
    let long = audit_fibers_along(&field, &Frame::from_vectors(&axes)?, cfg.density.fibers.min(2000), seed ^ 0x1, cfg.density.tol)?;
    let unit_fibers = long.records.iter().filter(|r| (r.integral - 1.0).abs() <= 1e-9).count();
    let mass_exact = field.total_mass_exact();
    let mass_quad = field.total_mass_quadrature(cfg.density.quadrature_order);
    let w_star = min_projection(&body, cfg.n, search(seed))?;
    Ok(Outcome {
        result: json!({
            "kind": field.kind(),
            "sigma": field.sigma(),
            "fibers": report.records.len(),
            "max_integral": report.max_integral,
            "max_slack": 1.0 - report.max_integral,
            "violations": report.violations,
            "passed": report.passed(),
            "longest_axis_fibers": long.records.len(),
            "longest_axis_max_integral": long.max_integral,
            "longest_axis_unit_fibers": unit_fibers,
            "total_mass_exact": mass_exact,
            "total_mass_quadrature": mass_quad,
            "w_star": w_star.area,
        }),
        files: vec![("density_audit.csv".into(), report.to_csv())],
    })
}

fn xray_options(cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<XrayOptions> {
    let x = &cfg.xray;
    let mut po = ProgramOptions::new(cfg.n, cfg.m, x.res, x.fibers);
    po.offset_spacing = x.offset_spacing;
    po.bundle_spacing = x.bundle_spacing;
    po.seed = seed;
    po.memory_cap_bytes = x.memory_cap_mb << 20;
    let mut o = XrayOptions::new(po);
    o.solve = SolveOptions { method: x.method.parse()?, iterations: x.iterations, ..Default::default() };
    o.audit_fibers = x.audit_fibers;
    o.densify = x.densify;
    Ok(o)
}

pub fn xray(cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<Outcome> {
    let body = body_of(cfg)?;
    check_split(cfg, &body)?;
    let opts = xray_options(cfg, seed)?;
    if !cfg.xray.ladder.is_empty() {
        let report = strictness_experiment(&body, &opts, &cfg.xray.ladder, 0.01)?;
        let mut csv = String::from("res,certified_lower,sampled_upper,w_star,gap\n");
        for r in &report.rows {
            csv.push_str(&format!("{},{:?},{:?},{:?},{:?}\n", r.res, r.certified_lower, r.sampled_upper, r.w_star, r.gap));
        }
        return Ok(Outcome { result: serde_json::to_value(&report)?, files: vec![("gap_table.csv".into(), csv)] });
    }
    let run = run_xray(&body, &opts)?;
    let s = &run.solution;
    let solution = json!({
        "schema": "anisoperi-xray-solution/1",
        "method": s.method,
        "variables": run.program.grid.variables(),
        "masses": s.masses,
        "objective": s.objective,
        "dual_bound": s.dual_bound,
        "certificate_scale": s.certificate_scale,
        "certified_lower": s.certified_lower,
        "sampled_upper": s.sampled_upper(),
        "iterations": s.iterations,
        "converged": s.converged,
    });
    let mut files = vec![("solution.json".into(), serde_json::to_string(&solution)?)];
    if cfg.xray.write_program {
        let (row_ptr, cols, vals) = run.program.rows.parts();
        let program = json!({
            "schema": "anisoperi-xray-program/1",
            "dim": run.program.grid.dim(),
            "res": run.program.grid.res(),
            "lower_corner": run.program.grid.lower_corner(),
            "voxel_size": run.program.grid.voxel_size(),
            "variables": run.program.grid.variables(),
            "row_ptr": row_ptr,
            "cols": cols,
            "vals": vals,
            "bound": 1.0,
        });
        files.push(("program.json".into(), serde_json::to_string(&program)?));
    }
    Ok(Outcome {
        result: json!({
            "variables": run.program.variable_count(),
            "constraints": run.program.constraint_count(),
            "nonzeros": run.program.rows.nnz(),
            "densified_rows": run.densified_rows,
            "method": s.method,
            "objective": s.objective,
            "dual_bound": s.dual_bound,
            "iterations": s.iterations,
            "converged": s.converged,
            "certificate": run.certificate,
        }),
        files,
    })
}

fn mesh_of(cfg: &ExperimentConfig) -> anyhow::Result<MeshSurface> {
    match cfg.mesh.as_ref().ok_or_else(|| anisoperi::Error::Schema("config needs a mesh".into()))? {
        MeshSource::Generate { surface, h } => Ok(generate(surface, *h)?),
        MeshSource::Off { path } => {
            let text = std::fs::read_to_string(path).map_err(anisoperi::Error::Io).with_context(|| format!("reading {path}"))?;
            Ok(read_off(&text)?)
        }
    }
}

pub fn verify(cfg: &ExperimentConfig, _seed: u64) -> anyhow::Result<Outcome> {
    let body = body_of(cfg)?;
    check_split(cfg, &body)?;
    let mesh = mesh_of(cfg)?;
    let sup = match cfg.sup_lower {
        Some(s) => s,
        None => lower_bound_sup(&body, cfg.n, cfg.m)?,
    };
    let report = verify_inequality(&mesh, &body, cfg.n, cfg.m, sup)?;
    let components = mesh.components()?;
    let per_component: Vec<bool> = components
        .iter()
        .map(|c| verify_inequality(c, &body, cfg.n, cfg.m, sup).map(|r| r.holds()))
        .collect::<Result<_, _>>()?;
    Ok(Outcome {
        result: json!({
            "triangles": mesh.triangles().len(),
            "report": report,
            "holds": report.holds(),
            "components_hold": per_component,
        }),
        files: vec![("mesh.off".into(), write_off(&mesh))],
    })
}

pub fn transport(cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<Outcome> {
    let body = body_of(cfg)?;
    let mesh = mesh_of(cfg)?;
    let sol = solve_neumann(&mesh, &body)?;
    let t = &cfg.transport;
    let opts = CoveringOptions { samples: t.samples, delta: t.delta, region_scale: t.region_scale, tol: t.tol, seed };
    let report = covering_check(&mesh, &sol, &body, &opts)?;
    Ok(Outcome::json(json!({
        "rhs": sol.rhs,
        "cg_iterations": sol.iterations,
        "relative_residual": sol.relative_residual,
        "mesh_h": mesh.mesh_h(),
        "covering": report,
    })))
}

pub fn john(cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<Outcome> {
    let body = body_of(cfg)?;
    check_split(cfg, &body)?;
    let j = &cfg.john;
    let opts = JohnOptions { tol: j.tol, samples: j.samples, facet_budget: j.facet_budget, seed, ..Default::default() };
    let res = john_of_body(&body, &opts)?;
    let chain = nonsharp_chain(&body, cfg.n, cfg.m, &res, search(seed))?;
    Ok(Outcome::json(json!({ "john": res.report(j.samples), "nonsharp": chain })))
}

pub fn constants_cmd(cfg: &ExperimentConfig, _seed: u64) -> anyhow::Result<Outcome> {
    let (tilde, c) = constants(cfg.n, cfg.m)?;
    Ok(Outcome::json(json!({ "n": cfg.n, "m": cfg.m, "c_tilde": tilde, "c": c })))
}
