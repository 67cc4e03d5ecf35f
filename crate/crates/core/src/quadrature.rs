//! Numerical integration: adaptive Gauss-Kronrod on intervals, product
//! rules on spheres and balls, and chord integrals of `1/sqrt(1 - |Λx|²)`
//! with double-double endpoint handling.

use std::num::NonZeroUsize;

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi, GaussLegendre};
use twofloat::TwoFloat;

use crate::body::Ellipsoid;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Integral estimate with an error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive G7-K15 quadrature: the interval with the largest error
/// estimate is bisected until the total error is below `abs_tol` or
/// `max_intervals` is reached.
pub fn integrate_adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64, max_intervals: usize) -> Quad {
    let (v, e) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        if total_err <= abs_tol || parts.len() >= max_intervals {
            let value = parts.iter().map(|p| p.2).sum();
            return Quad { value, error: total_err, intervals: parts.len() };
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = parts.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(order.max(1)).expect("positive"));
    rule.iter().map(|&(x, w)| (x, w)).collect()
}

/// Product rule on `S^{d-1}` from nested hyperspherical angles: the last
/// angle is a midpoint rule with `2 order` points, the others Gauss-Jacobi
/// in `cos`-type coordinates.
pub fn sphere_rule(d: usize, order: usize) -> Vec<(Vec<f64>, f64)> {
    match d {
        0 => Vec::new(),
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => {
            let k = 2 * order;
            (0..k)
                .map(|j| {
                    let t = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / k as f64;
                    (vec![t.cos(), t.sin()], 2.0 * std::f64::consts::PI / k as f64)
                })
                .collect()
        }
        _ => {
            // x_0 = t, rest = sqrt(1 - t²) · S^{d-2}, measure (1 - t²)^{(d-3)/2} dt
            let inner = sphere_rule(d - 1, order);
            let exponent = FiniteAboveNegOneF64::new(0.5 * (d as f64 - 3.0)).expect("exponent above -1");
            let rule = GaussJacobi::new(NonZeroUsize::new(order.max(1)).expect("positive"), exponent, exponent);
            let mut out = Vec::with_capacity(order * inner.len());
            for &(t, wt) in rule.iter() {
                let s = (1.0 - t * t).sqrt();
                for (u, wu) in &inner {
                    let mut p = Vec::with_capacity(d);
                    p.push(t);
                    p.extend(u.iter().map(|x| s * x));
                    out.push((p, wt * wu));
                }
            }
            out
        }
    }
}

/// `∫_{B^d} f(y) dy` in polar form with `r = sin θ`, which removes an
/// inverse square-root singularity `1/sqrt(1 - r²)` at the sphere. The
/// callback receives the point and `sqrt(1 - r²) = cos θ` so integrands of
/// that type can be evaluated without cancellation.
pub fn ball_integral_sine(d: usize, angular: usize, radial: usize, f: impl Fn(&[f64], f64) -> f64) -> f64 {
    let sphere = sphere_rule(d, angular);
    let mut total = 0.0;
    for (z, w) in gauss_legendre(radial) {
        let theta = 0.25 * std::f64::consts::PI * (z + 1.0);
        let (r, c) = (theta.sin(), theta.cos());
        let wr = 0.25 * std::f64::consts::PI * w * r.powi(d as i32 - 1) * c;
        for (u, wu) in &sphere {
            let y: Vec<f64> = u.iter().map(|x| r * x).collect();
            total += wr * wu * f(&y, c);
        }
    }
    total
}

/// The chord `{t : |N(tα + ω)| <= 1}` of an ellipsoid `N = ΛQᵀ` along a
/// line, with endpoints resolved to double-double precision.
#[derive(Clone, Debug)]
pub struct LineChord {
    normalizing: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    omega: Vec<f64>,
    t1: TwoFloat,
    t2: TwoFloat,
}

impl LineChord {
    /// `None` when the line misses the interior (or is tangent to within
    /// `1e-14` in `1 - |Λx|²`).
    pub fn new(e: &Ellipsoid, alpha: &[f64], omega: &[f64]) -> Option<Self> {
        let n = e.normalizing_matrix();
        let d = e.dim();
        let normalizing: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| n[(i, j)]).collect()).collect();
        let mut chord = Self {
            normalizing,
            alpha: alpha.to_vec(),
            omega: omega.to_vec(),
            t1: TwoFloat::from(0.0),
            t2: TwoFloat::from(0.0),
        };
        let reach = crate::linalg::norm(omega) + 2.0 * e.semi_axes()[d - 1] + 1.0;
        // g is concave along the line: golden-section search for its peak
        let (mut lo, mut hi) = (-reach, reach);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let a = hi - phi * (hi - lo);
            let b = lo + phi * (hi - lo);
            if chord.g(a) < chord.g(b) {
                lo = a;
            } else {
                hi = b;
            }
        }
        let peak = 0.5 * (lo + hi);
        if chord.g(peak) <= 1e-14 {
            return None;
        }
        let far = 2.0 * e.semi_axes()[d - 1] + 1.0;
        chord.t1 = chord.polish(chord.bisect(peak - far, peak));
        chord.t2 = chord.polish(chord.bisect(peak + far, peak));
        Some(chord)
    }

    fn g(&self, t: f64) -> f64 {
        let x: Vec<f64> = self.alpha.iter().zip(&self.omega).map(|(a, w)| t * a + w).collect();
        1.0 - self
            .normalizing
            .iter()
            .map(|row| crate::linalg::dot(row, &x).powi(2))
            .sum::<f64>()
    }

    fn g_dd(&self, t: TwoFloat) -> TwoFloat {
        let x: Vec<TwoFloat> = self.alpha.iter().zip(&self.omega).map(|(&a, &w)| t * a + w).collect();
        let mut s = TwoFloat::from(0.0);
        for row in &self.normalizing {
            let mut y = TwoFloat::from(0.0);
            for (&nij, &xj) in row.iter().zip(&x) {
                y += xj * nij;
            }
            s += y * y;
        }
        TwoFloat::from(1.0) - s
    }

    fn dg(&self, t: f64) -> f64 {
        let x: Vec<f64> = self.alpha.iter().zip(&self.omega).map(|(a, w)| t * a + w).collect();
        -2.0 * self
            .normalizing
            .iter()
            .map(|row| crate::linalg::dot(row, &x) * crate::linalg::dot(row, &self.alpha))
            .sum::<f64>()
    }

    /// Root of `g` between an outside point and an inside point.
    fn bisect(&self, mut outside: f64, mut inside: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (outside + inside);
            if mid == outside || mid == inside {
                break;
            }
            if self.g(mid) > 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (outside + inside)
    }

    fn polish(&self, t: f64) -> TwoFloat {
        let mut r = TwoFloat::from(t);
        for _ in 0..4 {
            let slope = self.dg(r.hi());
            if slope == 0.0 {
                break;
            }
            r -= self.g_dd(r) / slope;
        }
        r
    }

    pub fn endpoints(&self) -> (f64, f64) {
        (self.t1.hi(), self.t2.hi())
    }

    pub fn length(&self) -> f64 {
        (self.t2 - self.t1).hi()
    }

    /// `t(s) = T₁ + L(3s² - 2s³)` in double-double, computed from the
    /// nearer endpoint.
    fn t_of(&self, s: f64) -> TwoFloat {
        let len = self.t2 - self.t1;
        if s <= 0.5 {
            self.t1 + len * (s * s * (3.0 - 2.0 * s))
        } else {
            let u = 1.0 - s;
            self.t2 - len * (u * u * (1.0 + 2.0 * s))
        }
    }

    fn s_of(&self, t: f64) -> f64 {
        let len = self.t2 - self.t1;
        let from_lo = ((TwoFloat::from(t) - self.t1) / len).hi();
        let from_hi = ((self.t2 - TwoFloat::from(t)) / len).hi();
        if from_lo <= 0.0 {
            return 0.0;
        }
        if from_hi <= 0.0 {
            return 1.0;
        }
        // invert 3s² - 2s³ against whichever endpoint is nearer
        let (mut lo, mut hi) = (0.0f64, 0.5f64);
        let (target, flip) = if from_lo <= from_hi { (from_lo, false) } else { (from_hi, true) };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if mid * mid * (3.0 - 2.0 * mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        if flip {
            1.0 - s
        } else {
            s
        }
    }

    /// `∫ w(x(t)) / sqrt(1 - |N x(t)|²) dt` over the sub-chord `[ta, tb]`.
    pub fn integrate_weighted(&self, ta: f64, tb: f64, abs_tol: f64, w: impl Fn(&[f64]) -> f64) -> Quad {
        let len = self.length();
        let (a, b) = self.endpoints();
        let sa = if ta <= a { 0.0 } else { self.s_of(ta) };
        let sb = if tb >= b { 1.0 } else { self.s_of(tb) };
        if sb <= sa {
            return Quad { value: 0.0, error: 0.0, intervals: 0 };
        }
        let integrand = |s: f64| {
            let t = self.t_of(s);
            let g = self.g_dd(t).hi();
            if g <= 0.0 {
                return 0.0;
            }
            let x: Vec<f64> = self.alpha.iter().zip(&self.omega).map(|(a, o)| t.hi() * a + o).collect();
            6.0 * len * s * (1.0 - s) / g.sqrt() * w(&x)
        };
        integrate_adaptive(integrand, sa, sb, abs_tol, 400)
    }

    /// `∫ dt / sqrt(1 - |N x(t)|²)` over the whole chord.
    pub fn integrate(&self, abs_tol: f64) -> Quad {
        let (a, b) = self.endpoints();
        self.integrate_weighted(a, b, abs_tol, |_| 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kronrod_integrates_smooth_functions() {
        let q = integrate_adaptive(|x: f64| x.exp(), 0.0, 1.0, 1e-14, 50);
        assert!((q.value - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn kronrod_handles_endpoint_singularity_by_subdivision() {
        let q = integrate_adaptive(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-8, 2000);
        assert!((q.value - 2.0).abs() < 1e-6, "{q:?}");
    }

    #[test]
    fn sphere_rule_area_and_moments() {
        for d in 2..=5 {
            let rule = sphere_rule(d, 12);
            let area: f64 = rule.iter().map(|p| p.1).sum();
            let exact = crate::sampling::sphere_area(d);
            assert!((area - exact).abs() < 1e-12 * exact, "d={d} {area} {exact}");
            let second: f64 = rule.iter().map(|(u, w)| w * u[d - 1] * u[d - 1]).sum();
            assert!((second - area / d as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_integral_of_singular_weight() {
        // ∫_{B^3} 1/sqrt(1 - |y|²) = π²
        let v = ball_integral_sine(3, 8, 16, |_, c| 1.0 / c);
        assert!((v - PI * PI).abs() < 1e-12);
    }

    #[test]
    fn unit_disk_chord_through_centre() {
        let e = Ellipsoid::ball(2, 1.0).unwrap();
        let c = LineChord::new(&e, &[1.0, 0.0], &[0.0, 0.0]).unwrap();
        let (a, b) = c.endpoints();
        assert!((a + 1.0).abs() < 1e-15 && (b - 1.0).abs() < 1e-15);
        assert!((c.integrate(1e-13).value - PI).abs() < 1e-12);
    }

    #[test]
    fn off_centre_chord_keeps_value() {
        let e = Ellipsoid::axis_aligned(&[1.0, 2.0, 3.0]).unwrap();
        let c = LineChord::new(&e, &[1.0, 0.0, 0.0], &[0.3, 1.5, 0.9]).unwrap();
        assert!((c.integrate(1e-13).value - PI).abs() < 1e-11);
    }

    #[test]
    fn missing_line_has_no_chord() {
        let e = Ellipsoid::ball(3, 1.0).unwrap();
        assert!(LineChord::new(&e, &[1.0, 0.0, 0.0], &[0.0, 1.2, 0.0]).is_none());
    }
}
