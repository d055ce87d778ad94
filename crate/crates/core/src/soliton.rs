//! Reflectionless Riemann-Hilbert solutions: the residue linear system,
//! evaluation of `M^sol`, Taylor data at `z = 0`, reconstruction of
//! `x(y, t)` and `u = x_t`, and the closed-form single loop soliton.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{domain, numerical, validation, OvError, Result};
use crate::linalg::{col_sum, Mat3};
use crate::spectral::{expand_orbit, BasePole, OrbitPole, PoleKind, ScatteringData, SQRT3};

/// Largest residual accepted from the linear solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Imaginary part above which a reconstructed `x` is rejected.
pub const REALITY_TOL: f64 = 1e-9;

/// Solved residues of the partial-fraction expansion
/// `M(z) = I + sum_k R_k / (z - p_k)`, where `R_k` has the single nonzero
/// column `orbit[k].to` equal to `residues[k]`.
#[derive(Clone, Debug)]
pub struct ResidueCoefficients {
    pub orbit: Vec<OrbitPole>,
    pub residues: Vec<[C64; 3]>,
    /// `max |A w - b|` of the solved system.
    pub residual: f64,
    pub y: f64,
    pub t: f64,
}

/// `M^sol(0)` and `M^sol'(0)` with the coefficients they came from.
#[derive(Clone, Debug)]
pub struct OuterSolution {
    pub m0: Mat3,
    pub m1: Mat3,
    pub coeffs: ResidueCoefficients,
}

/// Sampled parametric curve `y -> (x(y,t), u(y,t))`.
#[derive(Clone, Debug, Serialize)]
pub struct ParametricProfile {
    pub samples: Vec<(f64, f64, f64)>,
    pub t: f64,
    pub monotone_x: bool,
}

/// Solves the residue system for reflectionless data at `(y, t)`.
pub fn assemble_and_solve(data: &ScatteringData, y: f64, t: f64) -> Result<ResidueCoefficients> {
    if !data.reflection.is_zero() {
        return validation("assemble_and_solve needs reflectionless data");
    }
    solve_orbit(expand_orbit(&data.poles)?, y, t)
}

/// Solves the residue system for an already expanded orbit.
///
/// With `E_i = Q_from - Q_to` at `p_i` and `a_i = -c_i e^{E_i}`, the unknown
/// residue column `w_i` satisfies `w_i = a_i M_from(p_i)`. Rows with
/// `Re E_i > 0` are divided by `a_i`, so no exponential with positive real
/// part is ever formed.
pub fn solve_orbit(orbit: Vec<OrbitPole>, y: f64, t: f64) -> Result<ResidueCoefficients> {
    let n = orbit.len();
    if n == 0 {
        return Ok(ResidueCoefficients { orbit, residues: Vec::new(), residual: 0.0, y, t });
    }
    let mut a = DMatrix::<C64>::zeros(3 * n, 3 * n);
    let mut b = DVector::<C64>::zeros(3 * n);
    for (i, pi) in orbit.iter().enumerate() {
        let e = pi.exponent(y, t);
        if !e.re.is_finite() || !e.im.is_finite() {
            return numerical(format!("non-finite exponent at pole {}", pi.z));
        }
        let (diag, coup, rhs) = if e.re <= 0.0 {
            let ai = -pi.c * e.exp();
            (C64::new(1.0, 0.0), ai, ai)
        } else {
            let bi = -(-e).exp() / pi.c;
            (bi, C64::new(1.0, 0.0), C64::new(1.0, 0.0))
        };
        for r in 0..3 {
            a[(3 * i + r, 3 * i + r)] += diag;
        }
        b[3 * i + pi.from] = rhs;
        for (m, pm) in orbit.iter().enumerate() {
            if m != i && pm.to == pi.from {
                let k = coup / (pi.z - pm.z);
                for r in 0..3 {
                    a[(3 * i + r, 3 * m + r)] -= k;
                }
            }
        }
    }
    let (w, residual) = crate::linalg::solve(a, b)?;
    if residual > RESIDUAL_TOL {
        return numerical(format!("residue system residual {residual:e} exceeds {RESIDUAL_TOL:e}"));
    }
    let residues = (0..n).map(|i| [w[3 * i], w[3 * i + 1], w[3 * i + 2]]).collect();
    Ok(ResidueCoefficients { orbit, residues, residual, y, t })
}

impl ResidueCoefficients {
    /// `M^sol(z)`.
    pub fn eval_msol(&self, z: C64) -> Result<Mat3> {
        let mut m = Mat3::identity();
        for (p, w) in self.orbit.iter().zip(&self.residues) {
            let d = z - p.z;
            if d.norm() < 1e-10 {
                return domain(format!("z = {z} is within 1e-10 of the pole {}", p.z));
            }
            for r in 0..3 {
                m[(r, p.to)] += w[r] / d;
            }
        }
        Ok(m)
    }

    /// Taylor data at `z = 0` from `1/(z - p) = -1/p - z/p^2 + O(z^2)`.
    pub fn outer_taylor(&self) -> OuterSolution {
        let mut m0 = Mat3::identity();
        let mut m1 = Mat3::zeros();
        for (p, w) in self.orbit.iter().zip(&self.residues) {
            for r in 0..3 {
                m0[(r, p.to)] -= w[r] / p.z;
                m1[(r, p.to)] -= w[r] / (p.z * p.z);
            }
        }
        OuterSolution { m0, m1, coeffs: self.clone() }
    }
}

impl OuterSolution {
    /// `y + sum_j [M1]_{j3} / sum_j [M0]_{j3}`.
    pub fn x_of_y(&self) -> Result<f64> {
        let y = self.coeffs.y;
        let den = col_sum(&self.m0, 2);
        if den.norm() < 1e-300 {
            return domain(format!("reconstruction denominator vanishes at y = {y}"));
        }
        let corr = col_sum(&self.m1, 2) / den;
        check_real(corr, y)?;
        Ok(y + corr.re)
    }
}

fn check_real(v: C64, y: f64) -> Result<()> {
    if !v.re.is_finite() || !v.im.is_finite() {
        return numerical(format!("non-finite reconstruction at y = {y}"));
    }
    if v.im.abs() > REALITY_TOL * v.re.abs().max(1.0) {
        return numerical(format!("x(y) has imaginary part {:e} at y = {y}", v.im));
    }
    Ok(())
}

/// `x(y, t)` for reflectionless data.
pub fn x_at(data: &ScatteringData, y: f64, t: f64) -> Result<f64> {
    assemble_and_solve(data, y, t)?.outer_taylor().x_of_y()
}

/// `x(y, t)` for an expanded orbit.
pub fn x_at_orbit(orbit: &[OrbitPole], y: f64, t: f64) -> Result<f64> {
    solve_orbit(orbit.to_vec(), y, t)?.outer_taylor().x_of_y()
}

/// Default step for the `t`-derivative.
pub fn default_step(t: f64) -> f64 {
    1e-4 * t.abs().max(1.0)
}

/// Central difference of `f` at `t` with one Richardson step:
/// `(4 D(h/2) - D(h))/3`.
pub fn richardson<F: Fn(f64) -> Result<f64>>(f: F, t: f64, h: f64) -> Result<f64> {
    let d = |h: f64| -> Result<f64> { Ok((f(t + h)? - f(t - h)?) / (2.0 * h)) };
    let d1 = d(h)?;
    let d2 = d(0.5 * h)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// `u(y, t) = x_t` at fixed `y`, Richardson-extrapolated central differences.
pub fn u_of_y(data: &ScatteringData, y: f64, t: f64) -> Result<f64> {
    u_of_y_step(data, y, t, default_step(t))
}

pub fn u_of_y_step(data: &ScatteringData, y: f64, t: f64, h: f64) -> Result<f64> {
    let orbit = expand_orbit(&data.poles)?;
    if !data.reflection.is_zero() {
        return validation("u_of_y needs reflectionless data");
    }
    u_of_y_orbit(&orbit, y, t, h)
}

pub fn u_of_y_orbit(orbit: &[OrbitPole], y: f64, t: f64, h: f64) -> Result<f64> {
    if orbit.is_empty() {
        return Ok(0.0);
    }
    richardson(|s| x_at_orbit(orbit, y, s), t, h)
}

/// The closed-form single loop soliton.
///
/// With `e = (c/(2 sqrt3 rho)) exp(-sqrt3 rho (y + t/rho^2))` and
/// `k = cos(phi + pi/3)`:
/// `u = (12/rho^2) e (k - e + k e^2)/(1 - 4 k e + e^2)^2`,
/// `x = y + (2 sqrt3/rho)(-2 k e + e^2)/(1 - 4 k e + e^2)`.
/// `c_hat` must be real.
pub fn single_loop_soliton(rho: f64, phi: f64, c_hat: C64, y: f64, t: f64) -> Result<(f64, f64)> {
    if !(rho > 0.0) {
        return validation(format!("rho must be positive, got {rho}"));
    }
    if c_hat.im.abs() > 1e-12 * c_hat.norm() {
        return validation(format!("c_hat = {c_hat} must be real"));
    }
    let k = (phi + std::f64::consts::PI / 3.0).cos();
    let e = c_hat.re / (2.0 * SQRT3 * rho) * (-SQRT3 * rho * (y + t / (rho * rho))).exp();
    if e.is_infinite() {
        return Ok((y + 2.0 * SQRT3 / rho, 0.0));
    }
    let den = 1.0 - 4.0 * k * e + e * e;
    if den.abs() < 1e-14 * (1.0 + e * e) {
        return domain(format!("single-soliton denominator vanishes at y = {y}"));
    }
    let u = 12.0 / (rho * rho) * e * (k - e + k * e * e) / (den * den);
    let x = y + 2.0 * SQRT3 / rho * (-2.0 * k * e + e * e) / den;
    Ok((x, u))
}

/// Closed form for one type-1 base pole: `rho = |xi|`, `phi = pi/3`,
/// `c_hat = c`.
pub fn single_from_pole(p: &BasePole, y: f64, t: f64) -> Result<(f64, f64)> {
    if p.kind != PoleKind::Type1 {
        return validation("closed form is matched for type-1 poles");
    }
    single_loop_soliton(p.rho(), std::f64::consts::PI / 3.0, p.c, y, t)
}

/// Evaluates `(x, u)` on a grid.
pub fn profile(data: &ScatteringData, y_grid: &[f64], t: f64) -> Result<ParametricProfile> {
    if y_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return validation("y grid must be strictly increasing");
    }
    let orbit = expand_orbit(&data.poles)?;
    if !data.reflection.is_zero() {
        return validation("profile needs reflectionless data");
    }
    profile_orbit(&orbit, y_grid, t)
}

pub fn profile_orbit(orbit: &[OrbitPole], y_grid: &[f64], t: f64) -> Result<ParametricProfile> {
    use rayon::prelude::*;
    let h = default_step(t);
    let samples: Vec<Result<(f64, f64, f64)>> = y_grid
        .par_iter()
        .map(|&y| {
            let attach = |e: OvError| tag(e, y);
            let x = x_at_orbit(orbit, y, t).map_err(attach)?;
            let u = u_of_y_orbit(orbit, y, t, h).map_err(attach)?;
            Ok((y, x, u))
        })
        .collect();
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let monotone_x = samples.windows(2).all(|w| w[1].1 > w[0].1);
    Ok(ParametricProfile { samples, t, monotone_x })
}

fn tag(e: OvError, y: f64) -> OvError {
    match e {
        OvError::Validation(m) => OvError::Validation(format!("y = {y}: {m}")),
        OvError::Domain(m) => OvError::Domain(format!("y = {y}: {m}")),
        OvError::Gate(m) => OvError::Gate(format!("y = {y}: {m}")),
        OvError::Numerical(m) => OvError::Numerical(format!("y = {y}: {m}")),
        other => other,
    }
}

/// Factor multiplying the constant of the soliton with modulus `rho_a` once
/// a soliton with larger modulus `rho_b` has separated to its right.
pub fn pair_shift(rho_a: f64, rho_b: f64) -> f64 {
    let (a, b) = (rho_a, rho_b);
    ((b - a) / (b + a)).powi(2) * (a * a - a * b + b * b) / (a * a + a * b + b * b)
}

/// Sum of single solitons with asymptotically shifted constants for type-1
/// data. Returns `(x - y, u)` at `(y, t)`.
///
/// Each soliton's constant is multiplied by `pair_shift` for every soliton
/// of larger modulus, and its `x` is offset by `2 sqrt3/rho_m` for each of
/// those.
pub fn resolved_sum(poles: &[BasePole], y: f64, t: f64) -> Result<(f64, f64)> {
    let mut dx = 0.0;
    let mut u = 0.0;
    for (n, p) in poles.iter().enumerate() {
        if p.kind != PoleKind::Type1 {
            return validation("resolved_sum is defined for type-1 poles");
        }
        let mut c = p.c;
        for (m, q) in poles.iter().enumerate() {
            if m != n && q.rho() > p.rho() {
                c *= pair_shift(p.rho(), q.rho());
            }
        }
        let (x, un) = single_loop_soliton(p.rho(), std::f64::consts::PI / 3.0, c, y, t)?;
        dx += x - y;
        u += un;
    }
    Ok((dx, u))
}

/// `sup_y |u - u_resolved|` at time `t` over the window spanned by the
/// soliton centres `y = -t/rho^2` widened by `pad`, on `n` points.
/// Returns `(y_min, y_max, sup)`.
pub fn resolution_error(data: &ScatteringData, t: f64, pad: f64, n: usize) -> Result<(f64, f64, f64)> {
    if data.poles.is_empty() || n < 2 || !(pad >= 0.0) {
        return validation("resolution error needs poles, n >= 2 and pad >= 0");
    }
    let centres: Vec<f64> = data.poles.iter().map(|p| -t / (p.rho() * p.rho())).collect();
    let lo = centres.iter().cloned().fold(f64::INFINITY, f64::min) - pad;
    let hi = centres.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + pad;
    let ys: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let exact = profile(data, &ys, t)?;
    let mut sup = 0.0f64;
    for (y, _, u) in &exact.samples {
        let (_, ur) = resolved_sum(&data.poles, *y, t)?;
        sup = sup.max((u - ur).abs());
    }
    Ok((lo, hi, sup))
}
