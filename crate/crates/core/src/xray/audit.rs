//! Certificates for voxel solutions, densification and the strictness ladder.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::program::{build_program, fiber_integral, FiberSpec, ProgramOptions, VoxelProgram};
use super::solve::{solve, LpSolution, SolveOptions};
use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::linalg::{add, dot, norm, scaled};
use crate::projection::{min_projection, SearchOptions};
use crate::sampling::{grassmann_frames, orthonormalize, rng, sphere_directions, Kronecker};

/// Audited integrals above `1 + DENSIFY_EXCESS` flag the program as under-sampled.
pub const DENSIFY_EXCESS: f64 = 0.25;
/// Rows refined in a densification round.
pub const BINDING_ROWS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub fibers: usize,
    /// Largest fiber integral seen (program rows and fresh fibers).
    pub certificate_scale: f64,
    pub certified_lower: f64,
    pub sampled_upper: f64,
    pub fresh_max: f64,
    /// `|W*|` of the body inflated by one voxel diameter.
    pub outer_estimate: f64,
    pub sandwich_holds: bool,
    pub needs_densification: bool,
    /// `1 + 2 · voxel diameter / min width`.
    pub discretization_bound: f64,
    /// Max integral of the rescaled density over a second fresh batch.
    pub reaudit_max: f64,
    pub reaudit_within_bound: bool,
    /// Fresh fibers that exceeded one, worst first (at most `BINDING_ROWS`).
    #[serde(skip)]
    pub violating: Vec<FiberSpec>,
}

/// Smallest width over many directions, halved (inradius of a symmetric body).
pub fn inradius_estimate(body: &ConvexBody) -> f64 {
    if let ConvexBody::Ellipsoid(e) = body {
        return e.semi_axes()[0];
    }
    sphere_directions(body.dim(), 4000, 11).iter().map(|u| body.support(u)).fold(f64::INFINITY, f64::min)
}

/// `(1 + δ/r)^n |W*|` bounds the shadow of the body inflated by `δ`.
pub fn outer_shadow_estimate(body: &ConvexBody, n: usize, delta: f64) -> Result<f64> {
    let proj = min_projection(body, n, SearchOptions::default())?;
    let r = inradius_estimate(body);
    Ok((proj.area + proj.area_tol) * (1.0 + delta / r).powi(n as i32))
}

/// Quasi-random fibers hitting the body (frames from a shifted sequence,
/// offsets uniform in the orthogonal complement of each frame).
pub fn fresh_fibers(body: &ConvexBody, m: usize, count: usize, seed: u64) -> Vec<FiberSpec> {
    let d = body.dim();
    let n = d - m;
    let frames = grassmann_frames(d, m, count, seed.wrapping_mul(0x2545_f491).wrapping_add(77));
    let mut offsets = Kronecker::new(n, seed ^ 0xa0d1);
    let r = body.circumradius();
    let mut out = Vec::with_capacity(count);
    let mut k = 0;
    while out.len() < count {
        let basis = &frames[k % frames.len()];
        k += 1;
        let frame = Frame::new(basis.clone()).expect("sampled frame is orthonormal");
        let comp = frame.complement().expect("m < d").vectors();
        let u: Vec<f64> = offsets.next_point().iter().map(|x| (2.0 * x - 1.0) * r).collect();
        if norm(&u) > r {
            continue;
        }
        let mut point = vec![0.0; d];
        for (c, ui) in comp.iter().zip(&u) {
            point = add(&point, &scaled(c, *ui));
        }
        let pr = norm(&point);
        if pr > 0.0 && pr > body.support(&scaled(&point, 1.0 / pr)) {
            continue;
        }
        out.push(FiberSpec { point, frame: frame.vectors() });
    }
    out
}

fn integrals(program: &VoxelProgram, masses: &[f64], fibers: &[FiberSpec]) -> Vec<f64> {
    let field = program.field(masses);
    let spacing = program.options.bundle_spacing;
    fibers.par_iter().map(|f| fiber_integral(&program.grid, f, spacing, &field)).collect()
}

/// Audits `solution` on `fresh` unseen fibers, fills in its certificate
/// fields and re-audits the rescaled density on a second batch.
pub fn audit(
    program: &VoxelProgram,
    solution: &mut LpSolution,
    body: &ConvexBody,
    fresh: usize,
    seed: u64,
) -> Result<Certificate> {
    let m = program.options.m;
    let n = program.options.n;
    if solution.masses.len() != program.variable_count() {
        return Err(Error::DimensionMismatch { expected: program.variable_count(), got: solution.masses.len() });
    }
    let batch = fresh_fibers(body, m, fresh, seed);
    let vals = integrals(program, &solution.masses, &batch);
    let fresh_max = vals.iter().cloned().fold(0.0, f64::max);
    let scale = fresh_max.max(solution.max_row_load);
    let certified_lower = if scale > 0.0 { solution.objective / scale.max(1.0) } else { 0.0 };
    solution.certificate_scale = Some(scale);
    solution.certified_lower = Some(certified_lower);

    let mut order: Vec<usize> = (0..batch.len()).filter(|&i| vals[i] > 1.0).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let violating = order.iter().take(BINDING_ROWS).map(|&i| batch[i].clone()).collect();

    let diam = program.grid.voxel_diameter();
    let outer_estimate = outer_shadow_estimate(body, n, diam)?;
    let discretization_bound = 1.0 + 2.0 * diam / (2.0 * inradius_estimate(body));

    let rescale = if scale > 1.0 { 1.0 / scale } else { 1.0 };
    let scaled_masses: Vec<f64> = solution.masses.iter().map(|x| x * rescale).collect();
    let second = fresh_fibers(body, m, fresh, seed.wrapping_add(0x5ec0_0d));
    let reaudit_max = integrals(program, &scaled_masses, &second).into_iter().fold(0.0, f64::max);

    Ok(Certificate {
        fibers: batch.len(),
        certificate_scale: scale,
        certified_lower,
        sampled_upper: solution.objective,
        fresh_max,
        outer_estimate,
        sandwich_holds: certified_lower <= outer_estimate + 1e-9,
        needs_densification: fresh_max > 1.0 + DENSIFY_EXCESS,
        discretization_bound,
        reaudit_max,
        reaudit_within_bound: reaudit_max <= discretization_bound,
        violating,
    })
}

/// Perturbed copies of the `BINDING_ROWS` most loaded rows (plus extra
/// fibers), tilted and shifted by about one voxel.
pub fn densify(
    program: &VoxelProgram,
    solution: &LpSolution,
    extra: &[FiberSpec],
    copies: usize,
    seed: u64,
) -> VoxelProgram {
    let loads = program.rows.mul(&solution.masses);
    let mut order: Vec<usize> = (0..loads.len()).collect();
    order.sort_by(|&a, &b| loads[b].total_cmp(&loads[a]));
    let d = program.grid.dim();
    let edge = program.grid.voxel_size().iter().cloned().fold(f64::INFINITY, f64::min);
    let reach = norm(program.grid.lower_corner());
    let tilt = edge / reach;
    let mut r = rng(seed ^ 0xd15e);
    let mut out: Vec<FiberSpec> = extra.to_vec();
    let seeds = order.iter().take(BINDING_ROWS).map(|&i| &program.fibers[i]).chain(extra.iter());
    for base in seeds {
        for _ in 0..copies {
            let cols: Vec<Vec<f64>> = base
                .frame
                .iter()
                .map(|v| v.iter().map(|x| x + tilt * r.sample::<f64, _>(StandardNormal)).collect())
                .collect();
            let Some(q) = orthonormalize(&cols, d) else { continue };
            let frame = Frame::new(q).expect("orthonormalized");
            let shift: Vec<f64> = (0..d).map(|_| 0.5 * edge * (2.0 * r.random::<f64>() - 1.0)).collect();
            let moved = add(&base.point, &shift);
            // offsets are stored orthogonal to the fiber
            let mut point = moved.clone();
            for v in frame.vectors() {
                point = add(&point, &scaled(&v, -dot(&moved, &v)));
            }
            out.push(FiberSpec { point, frame: frame.vectors() });
        }
    }
    program.with_fibers(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XrayOptions {
    pub program: ProgramOptions,
    pub solve: SolveOptions,
    pub audit_fibers: usize,
    pub densify: bool,
    pub densify_copies: usize,
}

impl XrayOptions {
    pub fn new(program: ProgramOptions) -> Self {
        Self { program, solve: SolveOptions::default(), audit_fibers: 10_000, densify: true, densify_copies: 8 }
    }
}

#[derive(Clone, Debug)]
pub struct XrayRun {
    pub program: VoxelProgram,
    pub solution: LpSolution,
    pub certificate: Certificate,
    pub densified_rows: usize,
}

/// Build, solve, one densification round, audit.
pub fn run_xray(body: &ConvexBody, opts: &XrayOptions) -> Result<XrayRun> {
    let mut program = build_program(body, opts.program)?;
    let mut solution = solve(&program, &opts.solve)?;
    let mut densified_rows = 0;
    if opts.densify {
        let probe = fresh_fibers(body, opts.program.m, opts.audit_fibers.min(2000), opts.program.seed ^ 0xfeed);
        let vals = integrals(&program, &solution.masses, &probe);
        let mut hot: Vec<usize> = (0..probe.len()).filter(|&i| vals[i] > 1.0).collect();
        hot.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        let extra: Vec<FiberSpec> = hot.iter().take(BINDING_ROWS).map(|&i| probe[i].clone()).collect();
        let before = program.constraint_count();
        program = densify(&program, &solution, &extra, opts.densify_copies, opts.program.seed);
        densified_rows = program.constraint_count() - before;
        solution = solve(&program, &opts.solve)?;
    }
    let certificate = audit(&program, &mut solution, body, opts.audit_fibers, opts.program.seed.wrapping_add(1))?;
    Ok(XrayRun { program, solution, certificate, densified_rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrictnessRow {
    pub res: usize,
    pub certified_lower: f64,
    pub sampled_upper: f64,
    pub w_star: f64,
    /// `1 - certified_lower / |W*|`.
    pub gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapTrend {
    Persistent,
    Closing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrictnessReport {
    pub rows: Vec<StrictnessRow>,
    pub min_gap: f64,
    pub trend: GapTrend,
}

/// The gap is called closing when it falls under half of its first value
/// or under `closing_floor`.
pub fn strictness_experiment(
    body: &ConvexBody,
    base: &XrayOptions,
    ladder: &[usize],
    closing_floor: f64,
) -> Result<StrictnessReport> {
    if ladder.is_empty() {
        return Err(Error::InvalidInput("empty resolution ladder".into()));
    }
    let w_star = min_projection(body, base.program.n, SearchOptions::default())?.area;
    let mut rows = Vec::new();
    for &res in ladder {
        let mut opts = *base;
        opts.program.res = res;
        let run = run_xray(body, &opts)?;
        let cl = run.certificate.certified_lower;
        rows.push(StrictnessRow { res, certified_lower: cl, sampled_upper: run.solution.objective, w_star, gap: 1.0 - cl / w_star });
    }
    let min_gap = rows.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    let last = rows.last().expect("nonempty").gap;
    let trend = if last < 0.5 * rows[0].gap || last < closing_floor { GapTrend::Closing } else { GapTrend::Persistent };
    Ok(StrictnessReport { rows, min_gap, trend })
}
