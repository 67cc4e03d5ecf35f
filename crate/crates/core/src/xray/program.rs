//! Sparse X-ray constraint rows over inner voxels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::VoxelGrid;
use crate::body::{ball_volume, ConvexBody};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::linalg::{add, norm, scaled};
use crate::sampling::{grassmann_frames, rng};

/// Compressed sparse rows with `u32` column indices and `f32` weights.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRows {
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f32>,
}

impl SparseRows {
    pub fn new(ncols: usize) -> Self {
        Self { ncols, row_ptr: vec![0], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn push_row(&mut self, entries: &[(u32, f64)]) {
        for &(c, v) in entries {
            self.cols.push(c);
            self.vals.push(v as f32);
        }
        self.row_ptr.push(self.cols.len());
    }

    pub fn nrows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f32]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let (c, v) = self.row(r);
        c.iter().zip(v).map(|(&j, &w)| w as f64 * x[j as usize]).sum()
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows()).into_par_iter().map(|r| self.row_dot(r, x)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows())
            .map(|r| self.row(r).1.iter().map(|&w| w as f64).sum())
            .collect()
    }

    pub fn transpose(&self) -> SparseRows {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.cols {
            counts[c as usize + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut fill = counts.clone();
        let mut cols = vec![0u32; self.nnz()];
        let mut vals = vec![0f32; self.nnz()];
        for r in 0..self.nrows() {
            let (c, v) = self.row(r);
            for (&j, &w) in c.iter().zip(v) {
                let k = fill[j as usize];
                cols[k] = r as u32;
                vals[k] = w;
                fill[j as usize] += 1;
            }
        }
        SparseRows { ncols: self.nrows(), row_ptr: counts, cols, vals }
    }

    /// CSR triplet view `(row_ptr, cols, vals)`.
    pub fn parts(&self) -> (&[usize], &[u32], &[f32]) {
        (&self.row_ptr, &self.cols, &self.vals)
    }

    pub fn bytes(&self) -> usize {
        self.nnz() * 8 + self.row_ptr.len() * 8
    }
}

/// An affine fiber `point + span(frame)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub point: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramOptions {
    pub n: usize,
    pub m: usize,
    pub res: usize,
    /// Number of fiber direction frames sampled on the Grassmannian.
    pub fibers: usize,
    /// Offset lattice spacing in units of the smallest voxel edge (at most 1).
    pub offset_spacing: f64,
    /// Spacing of the line bundle that integrates plane fibers, in voxel edges.
    pub bundle_spacing: f64,
    pub seed: u64,
    pub memory_cap_bytes: usize,
}

impl ProgramOptions {
    pub fn new(n: usize, m: usize, res: usize, fibers: usize) -> Self {
        Self { n, m, res, fibers, offset_spacing: 0.5, bundle_spacing: 0.5, seed: 0, memory_cap_bytes: 2 << 30 }
    }
}

/// Line integral of a voxel field `value(voxel)` along `p + tα`.
pub fn line_integral(grid: &VoxelGrid, p: &[f64], alpha: &[f64], value: impl Fn(usize) -> f64) -> f64 {
    let mut s = 0.0;
    grid.traverse(p, alpha, |v, l| s += l * value(v));
    s
}

/// Integral of a voxel field over a fiber; planes are swept by parallel
/// lines along the first frame vector.
pub fn fiber_integral(grid: &VoxelGrid, fiber: &FiberSpec, bundle_spacing: f64, value: impl Fn(usize) -> f64) -> f64 {
    let mut entries = Vec::new();
    fiber_row(grid, fiber, bundle_spacing, 0.5, &mut |v, w| entries.push((v, w)));
    entries.iter().map(|&(v, w)| w * value(v)).sum()
}

/// Visits `(voxel, weight)` pairs of a fiber.
fn fiber_row(grid: &VoxelGrid, fiber: &FiberSpec, bundle_spacing: f64, shift: f64, visit: &mut impl FnMut(usize, f64)) {
    let alpha = &fiber.frame[0];
    match fiber.frame.len() {
        1 => grid.traverse(&fiber.point, alpha, &mut *visit),
        _ => {
            let h = bundle_spacing * min_edge(grid);
            let reach = box_radius(grid);
            bundle(reach, h, shift, &fiber.frame[1..], &mut |u: &[f64]| {
                let mut p = fiber.point.clone();
                for (k, r) in fiber.frame[1..].iter().enumerate() {
                    p = add(&p, &scaled(r, u[k]));
                }
                let cell = h.powi(u.len() as i32);
                grid.traverse(&p, alpha, |v, l| visit(v, l * cell));
            });
        }
    }
}

/// Lattice points `u ∈ [-reach, reach]^k` at spacing `h`, shifted by `shift·h`.
fn bundle(reach: f64, h: f64, shift: f64, span: &[Vec<f64>], visit: &mut impl FnMut(&[f64])) {
    let k = span.len();
    let per = (2.0 * reach / h).ceil() as usize + 1;
    let mut u = vec![0.0; k];
    for id in 0..per.pow(k as u32) {
        let mut rest = id;
        for ui in u.iter_mut() {
            *ui = -reach + ((rest % per) as f64 + shift) * h;
            rest /= per;
        }
        if norm(&u) <= reach {
            visit(&u);
        }
    }
}

fn min_edge(grid: &VoxelGrid) -> f64 {
    grid.voxel_size().iter().cloned().fold(f64::INFINITY, f64::min)
}

fn box_radius(grid: &VoxelGrid) -> f64 {
    norm(grid.lower_corner())
}

/// Linear program `max Σ vol·f_v` subject to sampled X-ray rows `A f <= 1`.
#[derive(Clone, Debug)]
pub struct VoxelProgram {
    pub grid: VoxelGrid,
    pub options: ProgramOptions,
    pub rows: SparseRows,
    pub columns: SparseRows,
    pub fibers: Vec<FiberSpec>,
}

impl VoxelProgram {
    pub fn variable_count(&self) -> usize {
        self.grid.variable_count()
    }

    pub fn constraint_count(&self) -> usize {
        self.rows.nrows()
    }

    /// Objective weight of every variable (the voxel volume).
    pub fn cost(&self) -> f64 {
        self.grid.voxel_volume()
    }

    /// Voxel field of a variable vector (zero off the inner mask).
    pub fn field<'a>(&'a self, masses: &'a [f64]) -> impl Fn(usize) -> f64 + 'a {
        move |v| self.grid.variable_of(v).map_or(0.0, |k| masses[k])
    }

    /// Adds rows for new fibers.
    pub fn with_fibers(&self, extra: Vec<FiberSpec>) -> VoxelProgram {
        let built: Vec<(FiberSpec, Vec<(u32, f64)>)> = extra
            .into_par_iter()
            .filter_map(|f| {
                let row = build_row(&self.grid, &f, self.options.bundle_spacing);
                (!row.is_empty()).then_some((f, row))
            })
            .collect();
        let mut rows = self.rows.clone();
        let mut fibers = self.fibers.clone();
        for (f, r) in built {
            rows.push_row(&r);
            fibers.push(f);
        }
        let columns = rows.transpose();
        VoxelProgram { grid: self.grid.clone(), options: self.options, rows, columns, fibers }
    }
}

fn build_row(grid: &VoxelGrid, fiber: &FiberSpec, bundle_spacing: f64) -> Vec<(u32, f64)> {
    let mut acc: Vec<(u32, f64)> = Vec::new();
    fiber_row(grid, fiber, bundle_spacing, 0.5, &mut |v, w| {
        if let Some(k) = grid.variable_of(v) {
            acc.push((k as u32, w));
        }
    });
    acc.sort_unstable_by_key(|e| e.0);
    let mut merged: Vec<(u32, f64)> = Vec::with_capacity(acc.len());
    for (k, w) in acc {
        match merged.last_mut() {
            Some(last) if last.0 == k => last.1 += w,
            _ => merged.push((k, w)),
        }
    }
    merged
}

/// Bytes a program with these options is expected to need.
pub fn estimate_bytes(body: &ConvexBody, opts: &ProgramOptions) -> usize {
    let d = body.dim();
    let r = body.circumradius();
    let edge = 2.0 * body.bounding_half_widths().iter().cloned().fold(f64::INFINITY, f64::min) / opts.res as f64;
    let h = opts.offset_spacing.min(1.0) * edge;
    let rows = opts.fibers as f64 * ball_volume(opts.n) * (r / h).powi(opts.n as i32);
    let lines_per_row = if opts.m == 1 { 1.0 } else { ball_volume(opts.m - 1) * (r / (opts.bundle_spacing * edge)).powi(opts.m as i32 - 1) };
    let per_line = 2.0 * r / edge * (d as f64).sqrt();
    let nnz = rows * lines_per_row * per_line.min(opts.res.pow(d as u32) as f64);
    // row and column copies of (u32, f32) entries plus fiber records
    (nnz * 16.0 + rows * (8.0 * (d * (opts.m + 1)) as f64 + 48.0)) as usize
}

/// Samples fibers (quasi-uniform frames times shifted offset lattices in the
/// orthogonal complement) and assembles the constraint rows.
pub fn build_program(body: &ConvexBody, opts: ProgramOptions) -> Result<VoxelProgram> {
    let d = body.dim();
    if opts.n + opts.m != d || opts.m == 0 || opts.n == 0 {
        return Err(Error::InvalidInput(format!("need n + m = {d} with n, m >= 1")));
    }
    if !(opts.offset_spacing > 0.0 && opts.offset_spacing <= 1.0) || !(opts.bundle_spacing > 0.0) {
        return Err(Error::InvalidInput("offset spacing must lie in (0, 1] voxel edges".into()));
    }
    if opts.fibers == 0 {
        return Err(Error::InvalidInput("need at least one fiber direction".into()));
    }
    let estimated = estimate_bytes(body, &opts);
    if estimated > opts.memory_cap_bytes {
        return Err(Error::ProgramTooLarge {
            estimated_bytes: estimated,
            cap_bytes: opts.memory_cap_bytes,
            advice: "reduce the grid resolution or the number of fiber directions, or coarsen the offset spacing".into(),
        });
    }
    let grid = VoxelGrid::new(body, opts.res)?;
    let h = opts.offset_spacing * min_edge(&grid);
    let reach = box_radius(&grid);
    let frames = grassmann_frames(d, opts.m, opts.fibers, opts.seed);
    let shifts: Vec<f64> = {
        use rand::Rng;
        let mut r = rng(opts.seed.wrapping_add(0x5eed));
        (0..frames.len()).map(|_| r.random::<f64>()).collect()
    };
    let per_frame: Vec<Vec<(FiberSpec, Vec<(u32, f64)>)>> = frames
        .par_iter()
        .zip(shifts.par_iter())
        .map(|(basis, &shift)| {
            let frame = Frame::new(basis.clone()).expect("sampled frame is orthonormal");
            let comp = frame.complement().expect("m < d").vectors();
            let vectors = frame.vectors();
            let mut out = Vec::new();
            bundle(reach, h, shift, &comp, &mut |u: &[f64]| {
                let mut point = vec![0.0; d];
                for (k, c) in comp.iter().enumerate() {
                    point = add(&point, &scaled(c, u[k]));
                }
                let r = norm(&point);
                if r > 0.0 && r > body.support(&scaled(&point, 1.0 / r)) + body.support_tol() {
                    return;
                }
                let fiber = FiberSpec { point, frame: vectors.clone() };
                let row = build_row(&grid, &fiber, opts.bundle_spacing);
                if !row.is_empty() {
                    out.push((fiber, row));
                }
            });
            out
        })
        .collect();
    let mut rows = SparseRows::new(grid.variable_count());
    let mut fibers = Vec::new();
    for (f, r) in per_frame.into_iter().flatten() {
        rows.push_row(&r);
        fibers.push(f);
    }
    let columns = rows.transpose();
    Ok(VoxelProgram { grid, options: opts, rows, columns, fibers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::Ellipsoid;

    #[test]
    fn disk_program_sizes() {
        let disk = ConvexBody::from(Ellipsoid::ball(2, 1.0).unwrap());
        let p = build_program(&disk, ProgramOptions::new(1, 1, 64, 360)).unwrap();
        assert!((2900..3300).contains(&p.variable_count()));
        assert!(p.constraint_count() > 360 * 64);
        assert_eq!(p.columns.nnz(), p.rows.nnz());
    }

    #[test]
    fn row_weights_are_bounded_by_box_chord() {
        let ball = ConvexBody::from(Ellipsoid::ball(3, 1.0).unwrap());
        let p = build_program(&ball, ProgramOptions::new(2, 1, 12, 10)).unwrap();
        let diag = 2.0 * norm(p.grid.lower_corner());
        for s in p.rows.row_sums() {
            assert!(s > 0.0 && s <= diag + 1e-6);
        }
    }

    #[test]
    fn plane_rows_from_line_bundles() {
        let ball = ConvexBody::from(Ellipsoid::ball(4, 1.0).unwrap());
        let mut o = ProgramOptions::new(2, 2, 8, 4);
        o.offset_spacing = 1.0;
        o.bundle_spacing = 1.0;
        let p = build_program(&ball, o).unwrap();
        assert!(p.constraint_count() > 0);
        // every plane row integrates at most the plane area inside the box
        let reach = norm(p.grid.lower_corner());
        for s in p.rows.row_sums() {
            assert!(s <= std::f64::consts::PI * reach * reach * 1.5);
        }
    }

    #[test]
    fn oversized_programs_are_rejected() {
        let ball = ConvexBody::from(Ellipsoid::ball(3, 1.0).unwrap());
        let mut o = ProgramOptions::new(2, 1, 96, 2000);
        o.memory_cap_bytes = 1 << 20;
        assert!(matches!(build_program(&ball, o), Err(Error::ProgramTooLarge { .. })));
    }
}
