//! Solvers for the voxel packing program `max c·Σx` s.t. `Ax <= 1`, `x >= 0`.
//!
//! The default is multiplicative weights on both sides of the equivalent
//! matrix game `min_z max_y yᵀ(A/c)z` over simplices (an extragradient
//! scheme with adaptive steps). Every few iterations the current voxel
//! weights are filled up to the tightest row, which gives a feasible primal
//! value; the averaged row weights give an upper bound.

use serde::{Deserialize, Serialize};

use super::program::VoxelProgram;
use crate::error::{Error, Result};

/// Largest instance handed to the exact simplex oracle.
pub const SIMPLEX_MAX_VARS: usize = 2000;
pub const SIMPLEX_MAX_ROWS: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Mw,
    Simplex,
}

impl std::str::FromStr for SolveMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mw" => Ok(SolveMethod::Mw),
            "simplex" => Ok(SolveMethod::Simplex),
            other => Err(Error::InvalidInput(format!("unknown method '{other}' (expected mw or simplex)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub method: SolveMethod,
    pub iterations: usize,
    /// Stop when `(upper - lower) / lower` drops below this.
    pub gap_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { method: SolveMethod::Mw, iterations: 3000, gap_tol: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub method: SolveMethod,
    /// Density value on each inner voxel (variable order of the program).
    pub masses: Vec<f64>,
    /// `Σ vol · f_v`; also the sampled upper value.
    pub objective: f64,
    /// Upper bound on the program optimum from the dual side.
    pub dual_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest program row `Σ w f` (at most one).
    pub max_row_load: f64,
    pub certificate_scale: Option<f64>,
    pub certified_lower: Option<f64>,
}

impl LpSolution {
    pub fn sampled_upper(&self) -> f64 {
        self.objective
    }
}

pub fn solve(program: &VoxelProgram, opts: &SolveOptions) -> Result<LpSolution> {
    if program.variable_count() == 0 {
        return Err(Error::InvalidInput("program has no inner voxels".into()));
    }
    match opts.method {
        SolveMethod::Mw => Ok(solve_mw(program, opts)),
        SolveMethod::Simplex => solve_simplex(program),
    }
}

fn softmax_log(logits: &[f64]) -> Vec<f64> {
    let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = mx + logits.iter().map(|l| (l - mx).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

fn kl(log_u: &[f64], log_v: &[f64]) -> f64 {
    log_u.iter().zip(log_v).map(|(a, b)| a.exp() * (a - b)).sum::<f64>().max(0.0)
}

fn exp_all(logp: &[f64]) -> Vec<f64> {
    logp.iter().map(|l| l.exp()).collect()
}

fn solve_mw(p: &VoxelProgram, opts: &SolveOptions) -> LpSolution {
    let (a, at) = (&p.rows, &p.columns);
    let (n, m) = (p.variable_count(), p.constraint_count());
    let c = p.cost();
    if m == 0 {
        // nothing constrains the voxels
        return LpSolution {
            method: SolveMethod::Mw,
            masses: vec![0.0; n],
            objective: 0.0,
            dual_bound: f64::INFINITY,
            iterations: 0,
            converged: false,
            max_row_load: 0.0,
            certificate_scale: None,
            certified_lower: None,
        };
    }
    let mmax = a.parts().2.iter().cloned().fold(0f32, f32::max) as f64 / c;
    let mut eta = 16.0 / mmax;
    let mut lz = softmax_log(&vec![0.0; n]);
    let mut ly = softmax_log(&vec![0.0; m]);
    let mut zsum = vec![0.0; n];
    let mut ysum = vec![0.0; m];
    let mut epoch_end = 64;
    let mut best_z = exp_all(&lz);
    let mut best_load = f64::INFINITY;
    let mut dual_best = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let load = |z: &[f64]| a.mul(z).into_iter().fold(0.0, f64::max) / c;
    while iterations < opts.iterations {
        let z = exp_all(&lz);
        let y = exp_all(&ly);
        let gz: Vec<f64> = at.mul(&y).into_iter().map(|v| v / c).collect();
        let gy: Vec<f64> = a.mul(&z).into_iter().map(|v| v / c).collect();
        let (lzn, lyn, zh, yh) = loop {
            let lzh = softmax_log(&lz.iter().zip(&gz).map(|(l, g)| l - eta * g).collect::<Vec<_>>());
            let lyh = softmax_log(&ly.iter().zip(&gy).map(|(l, g)| l + eta * g).collect::<Vec<_>>());
            let zh = exp_all(&lzh);
            let yh = exp_all(&lyh);
            let gz2: Vec<f64> = at.mul(&yh).into_iter().map(|v| v / c).collect();
            let gy2: Vec<f64> = a.mul(&zh).into_iter().map(|v| v / c).collect();
            let lzn = softmax_log(&lz.iter().zip(&gz2).map(|(l, g)| l - eta * g).collect::<Vec<_>>());
            let lyn = softmax_log(&ly.iter().zip(&gy2).map(|(l, g)| l + eta * g).collect::<Vec<_>>());
            // local smoothness test of the extragradient step
            let lhs: f64 = eta
                * (gz2.iter().zip(&gz).zip(lzh.iter().zip(&lzn)).map(|((g2, g), (h, nn))| (g2 - g) * (h.exp() - nn.exp())).sum::<f64>()
                    - gy2.iter().zip(&gy).zip(lyh.iter().zip(&lyn)).map(|((g2, g), (h, nn))| (g2 - g) * (h.exp() - nn.exp())).sum::<f64>());
            let rhs = kl(&lzn, &lzh) + kl(&lzh, &lz) + kl(&lyn, &lyh) + kl(&lyh, &ly);
            if lhs <= rhs || eta < 1e-6 / mmax {
                break (lzn, lyn, zh, yh);
            }
            eta *= 0.5;
        };
        lz = lzn;
        ly = lyn;
        for (s, v) in zsum.iter_mut().zip(&zh) {
            *s += eta * v;
        }
        for (s, v) in ysum.iter_mut().zip(&yh) {
            *s += eta * v;
        }
        iterations += 1;
        eta *= 1.02;
        if iterations % 20 == 0 || iterations == opts.iterations || iterations == epoch_end {
            let total: f64 = zsum.iter().sum();
            let zbar: Vec<f64> = zsum.iter().map(|v| v / total).collect();
            for cand in [zbar, zh] {
                let l = load(&cand);
                if l < best_load {
                    best_load = l;
                    best_z = cand;
                }
            }
            let ytotal: f64 = ysum.iter().sum();
            let prices = at.mul(&ysum.iter().map(|v| v / ytotal).collect::<Vec<_>>());
            let lo = prices.into_iter().fold(f64::INFINITY, f64::min) / c;
            if lo > 0.0 {
                dual_best = dual_best.min(1.0 / lo);
            }
            if dual_best * best_load - 1.0 <= opts.gap_tol {
                converged = true;
                break;
            }
            if iterations == epoch_end {
                // restart the averages from the current iterates
                zsum.iter_mut().for_each(|v| *v = 0.0);
                ysum.iter_mut().for_each(|v| *v = 0.0);
                epoch_end *= 2;
            }
        }
    }
    let scale = 1.0 / (c * best_load);
    let masses: Vec<f64> = best_z.iter().map(|z| z * scale).collect();
    let max_row_load = a.mul(&masses).into_iter().fold(0.0, f64::max);
    LpSolution {
        method: SolveMethod::Mw,
        objective: c * masses.iter().sum::<f64>(),
        masses,
        dual_bound: dual_best,
        iterations,
        converged,
        max_row_load,
        certificate_scale: None,
        certified_lower: None,
    }
}

fn solve_simplex(p: &VoxelProgram) -> Result<LpSolution> {
    let (n, m) = (p.variable_count(), p.constraint_count());
    if n > SIMPLEX_MAX_VARS || m > SIMPLEX_MAX_ROWS {
        return Err(Error::InvalidInput(format!(
            "simplex oracle handles at most {SIMPLEX_MAX_VARS} variables and {SIMPLEX_MAX_ROWS} rows (got {n} and {m})"
        )));
    }
    let mut lp = microlp::Problem::new(microlp::OptimizationDirection::Maximize);
    let vars: Vec<_> = (0..n).map(|_| lp.add_var(p.cost(), (0.0, f64::INFINITY))).collect();
    for r in 0..m {
        let (cols, vals) = p.rows.row(r);
        let expr: Vec<_> = cols.iter().zip(vals).map(|(&j, &w)| (vars[j as usize], w as f64)).collect();
        lp.add_constraint(&expr, microlp::ComparisonOp::Le, 1.0);
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::Numerical(format!("simplex: {e}")))?
        .into_solution()
        .map_err(|e| Error::Numerical(format!("simplex: {e:?}")))?;
    let masses: Vec<f64> = vars.iter().map(|v| sol.var_value(*v).max(0.0)).collect();
    let max_row_load = p.rows.mul(&masses).into_iter().fold(0.0, f64::max);
    Ok(LpSolution {
        method: SolveMethod::Simplex,
        objective: sol.objective(),
        dual_bound: sol.objective(),
        masses,
        iterations: 0,
        converged: true,
        max_row_load,
        certificate_scale: None,
        certified_lower: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{ConvexBody, Ellipsoid};
    use crate::xray::program::{build_program, ProgramOptions};

    fn tiny_disk() -> VoxelProgram {
        let disk = ConvexBody::from(Ellipsoid::ball(2, 1.0).unwrap());
        build_program(&disk, ProgramOptions::new(1, 1, 8, 24)).unwrap()
    }

    #[test]
    fn mw_matches_simplex_on_tiny_disk() {
        let p = tiny_disk();
        let exact = solve(&p, &SolveOptions { method: SolveMethod::Simplex, ..Default::default() }).unwrap();
        let mw = solve(&p, &SolveOptions { iterations: 20_000, ..Default::default() }).unwrap();
        assert!(mw.max_row_load <= 1.0 + 1e-5);
        assert!(mw.objective <= exact.objective * (1.0 + 1e-6));
        assert!((mw.objective / exact.objective - 1.0).abs() < 0.01, "{} vs {}", mw.objective, exact.objective);
        assert!(mw.dual_bound >= exact.objective * (1.0 - 1e-6));
    }

    #[test]
    fn simplex_rejects_large_programs() {
        let disk = ConvexBody::from(Ellipsoid::ball(2, 1.0).unwrap());
        let p = build_program(&disk, ProgramOptions::new(1, 1, 64, 60)).unwrap();
        let o = SolveOptions { method: SolveMethod::Simplex, ..Default::default() };
        assert!(solve(&p, &o).is_err());
    }

    #[test]
    fn method_names_parse() {
        assert_eq!("mw".parse::<SolveMethod>().unwrap(), SolveMethod::Mw);
        assert!("pdlp".parse::<SolveMethod>().is_err());
    }
}
