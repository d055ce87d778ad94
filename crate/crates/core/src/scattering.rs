//! Direct scattering: the reciprocal transform of an initial profile, Jost
//! solutions of the 3x3 spectral problem, the reflection coefficient on the
//! real line and discrete poles on the ray `arg z = pi/6`.
//!
//! Integrations run along a path parametrized by a real `s`. On the path the
//! Jost equation reads `Psi_s = y_s [Lambda, Psi] + (1/3) (ln q)_s K Psi`,
//! where `K` is the constant coupling matrix of the spectral problem. The
//! path is the `x`-line for sampled profiles and a complex detour in `y`
//! around the zeros of `x_y` for loop solitons.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, numerical, validation, Result};
use crate::fourier::Fourier;
use crate::linalg::Mat3;
use crate::ode::{dopri5, OdeOptions};
use crate::spectral::{lambdas, omega, BasePole, PoleKind, SampledReflection, SQRT3};

/// `|u0|` and `|u0''|` bound at the grid ends.
pub const END_TOL: f64 = 1e-10;

/// `|r|` ceiling for a regular scattering problem.
pub const R_CEILING: f64 = 1.0 - 1e-6;

/// The coupling matrix `K` with `U = (q_x/(3q)) K`.
pub fn coupling() -> Mat3 {
    let w = omega();
    let a = C64::new(1.0, 0.0) - w * w;
    let b = C64::new(1.0, 0.0) - w;
    let z = C64::new(0.0, 0.0);
    Mat3::new(z, a, b, b, z, a, a, b, z)
}

/// Coefficients of the Jost equation at one path parameter.
#[derive(Clone, Copy, Debug)]
pub struct PathPoint {
    pub y: C64,
    /// `dy/ds`.
    pub dy: C64,
    /// `d(ln q)/ds`.
    pub dlogq: C64,
}

/// An integration path for the Jost equation.
pub trait SpectralPath: Sync {
    /// Parameter interval. The left end stands for `-infinity`.
    fn range(&self) -> (f64, f64);
    fn point(&self, s: f64) -> PathPoint;
    /// Interior points where the integrator must stop.
    fn breaks(&self) -> Vec<f64> {
        Vec::new()
    }
    /// A parameter where `y` is real, used to match the two Jost solutions.
    fn default_match(&self) -> f64;
}

/// Which infinity a Jost solution is normalized at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    FromPlus,
    FromMinus,
}

/// Sampled initial profile with its reciprocal transform.
#[derive(Clone, Debug)]
pub struct InitialProfile {
    x: Vec<f64>,
    u0: Vec<f64>,
    u0xx: Vec<f64>,
    q: Vec<f64>,
    qx: Vec<f64>,
    y: Vec<f64>,
    dx: f64,
}

impl InitialProfile {
    /// Builds `q = (1 - u0'')^{1/3}` and `y(x) = x - int_x^inf (q - 1)` from
    /// samples on a uniform grid. Derivatives and the cumulative integral are
    /// spectral.
    pub fn from_samples(x: &[f64], u0: &[f64]) -> Result<Self> {
        let n = x.len();
        if n != u0.len() || n < 16 {
            return validation("profile needs >= 16 matching (x, u0) samples");
        }
        let dx = (x[n - 1] - x[0]) / (n - 1) as f64;
        if !(dx > 0.0) {
            return validation("profile grid must be increasing");
        }
        for (k, xk) in x.iter().enumerate() {
            if (xk - (x[0] + k as f64 * dx)).abs() > 1e-9 * dx.max(xk.abs()) {
                return validation(format!("profile grid is not uniform at index {k}"));
            }
        }
        if u0.iter().any(|v| !v.is_finite()) {
            return validation("profile contains non-finite values");
        }
        let f = Fourier::new(n, n as f64 * dx)?;
        let u0xx = f.derivative(u0, 2);
        let u0xxx = f.derivative(u0, 3);
        for k in [0, n - 1] {
            if u0[k].abs() > END_TOL || u0xx[k].abs() > END_TOL {
                return validation(format!(
                    "profile does not decay at x = {}: |u0| = {:e}, |u0''| = {:e}",
                    x[k],
                    u0[k].abs(),
                    u0xx[k].abs()
                ));
            }
        }
        let mut q = Vec::with_capacity(n);
        let mut qx = Vec::with_capacity(n);
        for k in 0..n {
            let base = 1.0 - u0xx[k];
            if !(base > 0.0) {
                return domain(format!("1 - u0'' = {base} <= 0 at x = {}", x[k]));
            }
            let qk = base.cbrt();
            q.push(qk);
            qx.push(-u0xxx[k] / (3.0 * qk * qk));
        }
        // spectral antiderivative of q - 1 minus its mean, plus the linear part
        let g: Vec<f64> = q.iter().map(|v| v - 1.0).collect();
        let mean = g.iter().sum::<f64>() / n as f64;
        let mut gh = f.forward(&g.iter().map(|v| v - mean).collect::<Vec<_>>());
        for (v, &k) in gh.iter_mut().zip(f.wavenumbers()) {
            *v = if k == 0.0 { C64::new(0.0, 0.0) } else { *v / C64::new(0.0, k) };
        }
        if let Some(m) = f.nyquist() {
            gh[m] = C64::new(0.0, 0.0);
        }
        let anti = f.inverse(&gh);
        let big_g: Vec<f64> = (0..n).map(|k| anti[k] + mean * (x[k] - x[0])).collect();
        let total = big_g[n - 1];
        let y: Vec<f64> = (0..n).map(|k| x[k] - (total - big_g[k])).collect();
        Ok(InitialProfile { x: x.to_vec(), u0: u0.to_vec(), u0xx, q, qx, y, dx })
    }

    /// Samples `f` on `n` uniform points of `[a, b]`.
    pub fn from_fn(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let x: Vec<f64> = (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect();
        let u: Vec<f64> = x.iter().map(|&s| f(s)).collect();
        Self::from_samples(&x, &u)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn u0(&self) -> &[f64] {
        &self.u0
    }

    pub fn u0xx(&self) -> &[f64] {
        &self.u0xx
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// `y(x)` on the grid.
    pub fn y_map(&self) -> &[f64] {
        &self.y
    }

    /// `int (q - 1) dx` over the grid.
    pub fn q_excess(&self) -> f64 {
        self.y[self.y.len() - 1] - self.y[0] - (self.x[self.x.len() - 1] - self.x[0])
    }

    /// Four-point Lagrange interpolation of a grid array.
    fn interp(&self, v: &[f64], s: f64) -> f64 {
        let n = v.len();
        let t = (s - self.x[0]) / self.dx;
        let k = (t.floor() as isize).clamp(1, n as isize - 3) as usize;
        let u = t - k as f64;
        let (a, b, c, d) = (v[k - 1], v[k], v[k + 1], v[k + 2]);
        let l0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
        let l1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
        let l2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
        let l3 = (u + 1.0) * u * (u - 1.0) / 6.0;
        a * l0 + b * l1 + c * l2 + d * l3
    }
}

impl SpectralPath for InitialProfile {
    fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn point(&self, s: f64) -> PathPoint {
        let q = self.interp(&self.q, s);
        let qx = self.interp(&self.qx, s);
        PathPoint {
            y: C64::new(self.interp(&self.y, s), 0.0),
            dy: C64::new(q, 0.0),
            dlogq: C64::new(qx / q, 0.0),
        }
    }

    fn default_match(&self) -> f64 {
        0.0f64.clamp(self.x[0], self.x[self.x.len() - 1])
    }
}

/// Exact single loop soliton at `t = 0` in the reciprocal variable, with the
/// `x - y` part scaled by `1 + eta`.
///
/// `x = y + (1 + eta)(2 sqrt3/rho) e/(1 + e)`, `e = (c/(2 sqrt3 rho)) e^{-sqrt3 rho y}`.
/// The path follows the real `y`-axis except for a compact bump of height
/// `0.6/rho` over the loop, which avoids the zeros of `x_y`.
#[derive(Clone, Debug)]
pub struct LoopSolitonPath {
    pub rho: f64,
    pub c: f64,
    pub eta: f64,
    center: f64,
    half_width: f64,
    height: f64,
    extent: f64,
}

impl LoopSolitonPath {
    /// From a type-1 base pole with real positive norming constant.
    pub fn new(pole: &BasePole, eta: f64) -> Result<Self> {
        pole.validate()?;
        if pole.kind != PoleKind::Type1 {
            return validation("loop soliton path needs a type-1 pole");
        }
        if pole.c.im.abs() > 1e-12 * pole.c.norm() || !(pole.c.re > 0.0) {
            return validation(format!("norming constant {} must be real and positive", pole.c));
        }
        if !(eta.abs() < 0.2) {
            return validation(format!("perturbation eta = {eta} must satisfy |eta| < 0.2"));
        }
        let rho = pole.rho();
        let c = pole.c.re;
        let center = (c / (2.0 * SQRT3 * rho)).ln() / (SQRT3 * rho);
        Ok(LoopSolitonPath {
            rho,
            c,
            eta,
            center,
            half_width: 2.0 / rho,
            height: 0.6 / rho,
            extent: 40.0 / (SQRT3 * rho),
        })
    }

    /// Centre of the loop, where `e = 1`.
    pub fn center(&self) -> f64 {
        self.center
    }

    fn e(&self, y: C64) -> C64 {
        (self.c / (2.0 * SQRT3 * self.rho)) * (-SQRT3 * self.rho * y).exp()
    }

    /// `x(y)` on the real axis.
    pub fn x_of_y(&self, y: f64) -> f64 {
        let e = self.e(C64::new(y, 0.0)).re;
        y + (1.0 + self.eta) * 2.0 * SQRT3 / self.rho * e / (1.0 + e)
    }

    /// `u(y)`; the closed form scaled by `1 + eta`.
    pub fn u_of_y(&self, y: f64) -> f64 {
        let e = self.e(C64::new(y, 0.0)).re;
        let d = 1.0 + e;
        -(1.0 + self.eta) * 6.0 / (self.rho * self.rho) * e / (d * d)
    }

    /// `(x_y, x_yy)` at complex `y`.
    fn x_derivatives(&self, y: C64) -> (C64, C64) {
        let e = self.e(y);
        let d = 1.0 + e;
        let a = 1.0 + self.eta;
        let xy = 1.0 - a * 6.0 * e / (d * d);
        let xyy = a * 6.0 * SQRT3 * self.rho * e * (1.0 - e) / (d * d * d);
        (xy, xyy)
    }
}

impl SpectralPath for LoopSolitonPath {
    fn range(&self) -> (f64, f64) {
        (self.center - self.extent, self.center + self.extent)
    }

    fn point(&self, s: f64) -> PathPoint {
        let tau = (s - self.center) / self.half_width;
        let (b, db) = if tau.abs() < 1.0 {
            let w = 1.0 - tau * tau;
            (w.powi(4), -8.0 * tau * w.powi(3) / self.half_width)
        } else {
            (0.0, 0.0)
        };
        let y = C64::new(s, self.height * b);
        let dy = C64::new(1.0, self.height * db);
        let (xy, xyy) = self.x_derivatives(y);
        PathPoint { y, dy, dlogq: -xyy / xy * dy }
    }

    fn breaks(&self) -> Vec<f64> {
        vec![self.center - self.half_width, self.center + self.half_width]
    }

    fn default_match(&self) -> f64 {
        self.center + self.half_width + 0.5 / self.rho
    }
}

fn ode_options() -> OdeOptions {
    OdeOptions { rtol: 1e-11, atol: 1e-14, h0: 1e-3, max_steps: 2_000_000 }
}

/// Stop points from `s0` to `s1` through the path breaks.
fn legs(path: &dyn SpectralPath, s0: f64, s1: f64) -> Vec<f64> {
    let (lo, hi) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
    let mut pts = vec![s0];
    let mut inner: Vec<f64> = path.breaks().into_iter().filter(|b| *b > lo && *b < hi).collect();
    inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if s0 > s1 {
        inner.reverse();
    }
    pts.extend(inner);
    pts.push(s1);
    pts
}

fn check_z(z: C64) -> Result<()> {
    if !(z.norm() > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return validation(format!("spectral parameter z = {z} must be finite and nonzero"));
    }
    Ok(())
}

/// Column `l` of `Psi e^{...}` normalized at the chosen infinity, evaluated at `s`.
pub fn jost_column(
    path: &dyn SpectralPath,
    z: C64,
    l: usize,
    direction: Direction,
    s: f64,
) -> Result<[C64; 3]> {
    check_z(z)?;
    let lam = lambdas(z);
    let k = coupling();
    let (lo, hi) = path.range();
    let start = if direction == Direction::FromPlus { hi } else { lo };
    let mut m = vec![C64::new(0.0, 0.0); 3];
    m[l] = C64::new(1.0, 0.0);
    let pts = legs(path, start, s);
    for w in pts.windows(2) {
        m = dopri5(
            |s, m, dm| {
                let p = path.point(s);
                let g = p.dlogq / 3.0;
                for r in 0..3 {
                    let km = k[(r, 0)] * m[0] + k[(r, 1)] * m[1] + k[(r, 2)] * m[2];
                    dm[r] = p.dy * (lam[r] - lam[l]) * m[r] + g * km;
                }
            },
            w[0],
            w[1],
            &m,
            ode_options(),
        )
        .map_err(|e| crate::OvError::Numerical(format!("Jost column at z = {z}: {e}")))?;
    }
    Ok([m[0], m[1], m[2]])
}

/// Row `j` of `Psi^{-1}` normalized at the chosen infinity, evaluated at `s`.
pub fn jost_row(
    path: &dyn SpectralPath,
    z: C64,
    j: usize,
    direction: Direction,
    s: f64,
) -> Result<[C64; 3]> {
    check_z(z)?;
    let lam = lambdas(z);
    let k = coupling();
    let (lo, hi) = path.range();
    let start = if direction == Direction::FromPlus { hi } else { lo };
    let mut n = vec![C64::new(0.0, 0.0); 3];
    n[j] = C64::new(1.0, 0.0);
    let pts = legs(path, start, s);
    for w in pts.windows(2) {
        n = dopri5(
            |s, n, dn| {
                let p = path.point(s);
                let g = p.dlogq / 3.0;
                for c in 0..3 {
                    let nk = n[0] * k[(0, c)] + n[1] * k[(1, c)] + n[2] * k[(2, c)];
                    dn[c] = p.dy * (lam[j] - lam[c]) * n[c] - g * nk;
                }
            },
            w[0],
            w[1],
            &n,
            ode_options(),
        )
        .map_err(|e| crate::OvError::Numerical(format!("Jost row at z = {z}: {e}")))?;
    }
    Ok([n[0], n[1], n[2]])
}

/// Full Jost matrix `Psi` normalized at one infinity, sampled at `nodes`.
#[derive(Clone, Debug)]
pub struct JostSolution {
    pub z: C64,
    pub direction: Direction,
    pub s: Vec<f64>,
    pub psi: Vec<Mat3>,
}

/// Integrates all three columns from the chosen infinity and records `Psi`
/// at each node. Columns that grow in the integration direction keep their
/// relative accuracy, so the result is reliable where the growth is
/// moderate.
pub fn jost_solve(
    path: &dyn SpectralPath,
    z: C64,
    direction: Direction,
    nodes: &[f64],
) -> Result<JostSolution> {
    check_z(z)?;
    let (lo, hi) = path.range();
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    if direction == Direction::FromPlus {
        order.sort_by(|a, b| nodes[*b].partial_cmp(&nodes[*a]).unwrap());
    } else {
        order.sort_by(|a, b| nodes[*a].partial_cmp(&nodes[*b]).unwrap());
    }
    let lam = lambdas(z);
    let k = coupling();
    let mut state: Vec<C64> = Mat3::identity().iter().copied().collect();
    let mut s_now = if direction == Direction::FromPlus { hi } else { lo };
    let mut psi = vec![Mat3::zeros(); nodes.len()];
    for idx in order {
        let target = nodes[idx];
        if !(target >= lo && target <= hi) {
            return validation(format!("node {target} outside the path range"));
        }
        for w in legs(path, s_now, target).windows(2) {
            state = dopri5(
                |s, m, dm| {
                    let p = path.point(s);
                    let g = p.dlogq / 3.0;
                    // column-major 3x3
                    for col in 0..3 {
                        for r in 0..3 {
                            let mut km = C64::new(0.0, 0.0);
                            for a in 0..3 {
                                km += k[(r, a)] * m[3 * col + a];
                            }
                            dm[3 * col + r] = p.dy * (lam[r] - lam[col]) * m[3 * col + r] + g * km;
                        }
                    }
                },
                w[0],
                w[1],
                &state,
                ode_options(),
            )?;
        }
        s_now = target;
        psi[idx] = Mat3::from_column_slice(&state);
    }
    Ok(JostSolution { z, direction, s: nodes.to_vec(), psi })
}

/// The stable 2x2 scattering block at a real `z`, matched at `s_match`.
///
/// For `z > 0` entries are `s_{jl} = (Psi_-^{-1})_j . (Psi_+)_l e^{(lambda_l - lambda_j) y}`,
/// for `z < 0` the roles of the two infinities are swapped, `j, l in {0, 1}`.
pub fn scattering_block(path: &dyn SpectralPath, z: f64, s_match: f64) -> Result<[[C64; 2]; 2]> {
    let zc = C64::new(z, 0.0);
    check_z(zc)?;
    let (rows_from, cols_from) = if z > 0.0 {
        (Direction::FromMinus, Direction::FromPlus)
    } else {
        (Direction::FromPlus, Direction::FromMinus)
    };
    let y = path.point(s_match).y;
    let lam = lambdas(zc);
    let rows = [jost_row(path, zc, 0, rows_from, s_match)?, jost_row(path, zc, 1, rows_from, s_match)?];
    let cols = [
        jost_column(path, zc, 0, cols_from, s_match)?,
        jost_column(path, zc, 1, cols_from, s_match)?,
    ];
    let mut b = [[C64::new(0.0, 0.0); 2]; 2];
    for j in 0..2 {
        for l in 0..2 {
            let dot: C64 = (0..3).map(|a| rows[j][a] * cols[l][a]).sum();
            b[j][l] = dot * ((lam[l] - lam[j]) * y).exp();
        }
    }
    Ok(b)
}

/// `r(z)` from the scattering block: `-s21/s22` for `z > 0`, `t21/t11` for `z < 0`.
pub fn reflection_at(path: &dyn SpectralPath, z: f64, s_match: f64) -> Result<C64> {
    let b = scattering_block(path, z, s_match)?;
    let r = if z > 0.0 { -b[1][0] / b[1][1] } else { b[1][0] / b[0][0] };
    if !r.re.is_finite() || !r.im.is_finite() {
        return numerical(format!("reflection coefficient is not finite at z = {z}"));
    }
    if r.norm() >= R_CEILING {
        return numerical(format!("|r({z})| = {} is too close to 1", r.norm()));
    }
    Ok(r)
}

/// `r` on a real grid, in parallel, matched at the path default.
pub fn reflection(path: &dyn SpectralPath, z_grid: &[f64]) -> Result<Vec<C64>> {
    let s_match = path.default_match();
    z_grid.par_iter().map(|&z| reflection_at(path, z, s_match)).collect()
}

/// `r` sampled on `n` uniform points of `[-zmax, zmax]`, with `r(0) = 0`.
pub fn sampled_reflection(path: &dyn SpectralPath, zmax: f64, n: usize) -> Result<SampledReflection> {
    if n < 3 || !(zmax > 0.0) {
        return validation("reflection grid needs n >= 3 and zmax > 0");
    }
    let z: Vec<f64> = (0..n).map(|k| -zmax + 2.0 * zmax * k as f64 / (n - 1) as f64).collect();
    let s_match = path.default_match();
    let v: Vec<C64> = z
        .par_iter()
        .map(|&s| {
            if s.abs() < 1e-12 * zmax {
                Ok(C64::new(0.0, 0.0))
            } else {
                reflection_at(path, s, s_match)
            }
        })
        .collect::<Result<_>>()?;
    SampledReflection::new(&z, &v)
}

fn on_ray(rho: f64) -> C64 {
    C64::from_polar(rho, PI / 6.0)
}

/// The scattering denominator `a(z)`: the third component of the third
/// column from `-infinity`, read at `+infinity`. Its zeros near the ray
/// `arg z = pi/6` are the type-1 poles.
pub fn denominator_at(path: &dyn SpectralPath, z: C64) -> Result<C64> {
    let (_, hi) = path.range();
    Ok(jost_column(path, z, 2, Direction::FromMinus, hi)?[2])
}

/// `a(rho e^{i pi/6})`.
pub fn denominator(path: &dyn SpectralPath, rho: f64) -> Result<C64> {
    denominator_at(path, on_ray(rho))
}

/// Norming constant at a zero `z` of the denominator: `c = -b/a'(z)`, where
/// `b` is the proportionality factor between the third column from
/// `-infinity` and the first column from `+infinity`.
pub fn norming_constant(path: &dyn SpectralPath, z: C64, s_match: f64) -> Result<C64> {
    let lam = lambdas(z);
    let y = path.point(s_match).y;
    let v = jost_column(path, z, 2, Direction::FromMinus, s_match)?;
    let w = jost_column(path, z, 0, Direction::FromPlus, s_match)?;
    let ph = ((lam[2] - lam[0]) * y).exp();
    let num: C64 = (0..3).map(|a| w[a].conj() * v[a] * ph).sum();
    let den: f64 = (0..3).map(|a| w[a].norm_sqr()).sum();
    let b = num / den;
    let da = derivative(path, z)?;
    if da.norm() == 0.0 {
        return numerical(format!("denominator has a multiple zero at z = {z}"));
    }
    Ok(-b / da)
}

/// `a'(z)` by a Richardson-extrapolated central difference along the ray direction.
fn derivative(path: &dyn SpectralPath, z: C64) -> Result<C64> {
    let u = C64::from_polar(1.0, PI / 6.0);
    let h = 1e-4 * z.norm();
    let d = |h: f64| -> Result<C64> {
        Ok((denominator_at(path, z + u * h)? - denominator_at(path, z - u * h)?) / (2.0 * h * u))
    };
    Ok((4.0 * d(h / 2.0)? - d(h)?) / 3.0)
}

/// Controls for [`pole_search`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PoleSearchOptions {
    pub rho_min: f64,
    pub rho_max: f64,
    pub samples: usize,
    /// Accept a zero if `|a| < tol` after refinement.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PoleSearchOptions {
    fn default() -> Self {
        PoleSearchOptions { rho_min: 0.2, rho_max: 3.0, samples: 57, tol: 1e-8, max_iter: 50 }
    }
}

/// Located poles plus notes on rejected brackets.
#[derive(Clone, Debug, Default)]
pub struct PoleSearch {
    pub poles: Vec<BasePole>,
    pub diagnostics: Vec<String>,
}

/// Scans `rho` for sign changes of `Im a(rho e^{i pi/6})`, refines each
/// bracket by complex secant steps projected to the ray and extracts the
/// norming constant.
pub fn pole_search(path: &dyn SpectralPath, opts: PoleSearchOptions) -> Result<PoleSearch> {
    if !(opts.rho_min > 0.0) || !(opts.rho_max > opts.rho_min) || opts.samples < 2 {
        return validation("pole search needs 0 < rho_min < rho_max and >= 2 samples");
    }
    let grid: Vec<f64> = (0..opts.samples)
        .map(|k| opts.rho_min + (opts.rho_max - opts.rho_min) * k as f64 / (opts.samples - 1) as f64)
        .collect();
    let vals: Vec<C64> = grid.par_iter().map(|&r| denominator(path, r)).collect::<Result<_>>()?;
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(1e-300);
    let mut out = PoleSearch::default();
    let s_match = path.default_match();
    for k in 0..grid.len() - 1 {
        let (a0, a1) = (vals[k], vals[k + 1]);
        if a0.im * a1.im > 0.0 || (a0.im == 0.0 && k > 0) {
            continue;
        }
        let (mut r0, mut r1, mut f0, mut f1) = (grid[k], grid[k + 1], a0, a1);
        for _ in 0..opts.max_iter {
            let df = f1 - f0;
            if df.norm() == 0.0 {
                break;
            }
            let step = (f1 * (r1 - r0) / df).re;
            let r2 = (r1 - step).clamp(grid[k] - 0.5 * (grid[k + 1] - grid[k]), grid[k + 1] * 1.5);
            r0 = r1;
            f0 = f1;
            r1 = r2;
            f1 = denominator(path, r1)?;
            if (r1 - r0).abs() < 1e-13 * r1 {
                break;
            }
        }
        // the zero may sit slightly off the ray; finish with complex Newton steps
        let mut z = on_ray(r1);
        let mut fz = f1;
        if fz.norm() < 1e-2 * scale {
            for _ in 0..8 {
                let dz = fz / derivative(path, z)?;
                z -= dz;
                fz = denominator_at(path, z)?;
                if dz.norm() < 1e-14 * z.norm() {
                    break;
                }
            }
        }
        if !(fz.norm() <= opts.tol * scale.max(1.0)) {
            out.diagnostics.push(format!(
                "bracket [{}, {}] rejected: |a| = {:e} at z = {z}",
                grid[k],
                grid[k + 1],
                fz.norm()
            ));
            continue;
        }
        let rho = z.norm();
        if out.poles.iter().any(|p| (p.rho() - rho).abs() < 1e-8 * rho) {
            continue;
        }
        let off = z.arg() - PI / 6.0;
        if off.abs() > 1e-10 {
            out.diagnostics.push(format!("zero at z = {z} is {off:e} rad off the ray; projected"));
        }
        let c = norming_constant(path, z, s_match)?;
        out.poles.push(BasePole::on_ray(rho, c, PoleKind::Type1)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::conj;
    use crate::spectral::SymmetryConstants;

    fn gaussian(a: f64) -> InitialProfile {
        InitialProfile::from_fn(-10.0, 10.0, 801, |x| a * (-x * x).exp()).unwrap()
    }

    #[test]
    fn zero_profile() {
        let p = InitialProfile::from_fn(-5.0, 5.0, 101, |_| 0.0).unwrap();
        assert!(p.q().iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!(p.y_map().iter().zip(p.x()).all(|(y, x)| (y - x).abs() < 1e-12));
        for z in [0.7, -1.3] {
            assert_eq!(reflection_at(&p, z, 0.0).unwrap(), C64::new(0.0, 0.0));
        }
        let j = jost_solve(&p, C64::new(0.4, 0.3), Direction::FromPlus, &[-2.0, 1.0]).unwrap();
        assert!(j.psi.iter().all(|m| (m - Mat3::identity()).iter().all(|v| v.norm() < 1e-15)));
        let s = pole_search(&p, PoleSearchOptions::default()).unwrap();
        assert!(s.poles.is_empty());
    }

    #[test]
    fn gaussian_profile_transform() {
        let p = gaussian(0.1);
        assert!(p.q().iter().all(|v| *v > 0.0));
        let y = p.y_map();
        assert!(y.windows(2).all(|w| w[1] > w[0]));
        let dx = p.x()[1] - p.x()[0];
        for k in 1..y.len() - 1 {
            let dy = (y[k + 1] - y[k - 1]) / (2.0 * dx);
            assert!((dy - p.q()[k]).abs() < 1e-4, "k = {k}");
        }
    }

    #[test]
    fn assumption_violation() {
        // u0'' = 4 at x = 0
        let r = InitialProfile::from_fn(-10.0, 10.0, 801, |x| -2.0 * (-x * x).exp());
        assert!(matches!(r, Err(crate::OvError::Domain(_))));
        assert!(InitialProfile::from_fn(-1.0, 1.0, 101, |x| (-x * x).exp()).is_err());
    }

    #[test]
    fn jost_determinant_and_symmetry() {
        let p = gaussian(0.3);
        let nodes: Vec<f64> = (0..21).map(|k| -10.0 + k as f64).collect();
        let s = SymmetryConstants::new();
        for z in [C64::new(0.5, 0.2), C64::new(-0.3, 0.4)] {
            for dir in [Direction::FromPlus, Direction::FromMinus] {
                let a = jost_solve(&p, z, dir, &nodes).unwrap();
                let b = jost_solve(&p, z.conj(), dir, &nodes).unwrap();
                for (ma, mb) in a.psi.iter().zip(&b.psi) {
                    assert!((ma.determinant() - 1.0).norm() < 1e-8);
                    let mirrored = s.gamma1 * conj(mb) * s.gamma1;
                    let d = (ma - mirrored).iter().fold(0.0f64, |m, v| m.max(v.norm()));
                    assert!(d < 1e-8 * (1.0 + ma.norm()), "z = {z}, d = {d}");
                }
            }
        }
    }

    #[test]
    fn reflection_matching_point_independence_and_symmetry() {
        let p = gaussian(0.5);
        for z in [0.3, 0.7, 2.0, 4.5] {
            let r1 = reflection_at(&p, z, 0.0).unwrap();
            let r2 = reflection_at(&p, z, 2.5).unwrap();
            assert!((r1 - r2).norm() < 1e-6, "z = {z}");
            assert!(r1.norm() > 1e-4);
            let rm = reflection_at(&p, -z, -1.5).unwrap();
            let want = C64::from_polar(1.0, -PI / 3.0) * r1.conj();
            assert!((rm - want).norm() < 1e-7, "z = {z}: {rm} vs {want}");
        }
    }

    #[test]
    fn trace_formula() {
        let p = gaussian(0.5);
        let zs: Vec<f64> = (1..=1200).map(|k| k as f64 * 0.01).collect();
        let r = reflection(&p, &zs).unwrap();
        let f: Vec<f64> = zs.iter().zip(&r).map(|(z, r)| (1.0 - r.norm_sqr()).ln() / (z * z)).collect();
        // trapezoid on [0, 12] with f(0) = 0
        let h = 0.01;
        let integral = h * (f.iter().sum::<f64>() - 0.5 * f[f.len() - 1]);
        let rhs = SQRT3 / PI * integral;
        assert!((p.q_excess() - rhs).abs() < 1e-5, "{} vs {rhs}", p.q_excess());
    }

    #[test]
    fn loop_soliton_round_trip() {
        let pole = BasePole::on_ray(1.0, C64::new(1.0, 0.0), PoleKind::Type1).unwrap();
        let path = LoopSolitonPath::new(&pole, 0.0).unwrap();
        let found = pole_search(&path, PoleSearchOptions::default()).unwrap();
        assert_eq!(found.poles.len(), 1, "{:?}", found.diagnostics);
        let got = found.poles[0];
        assert!((got.xi - pole.xi).norm() < 1e-4 * pole.xi.norm());
        assert!((got.c - pole.c).norm() < 1e-3 * pole.c.norm(), "c = {}", got.c);
        for z in [-2.0, -0.5, 0.4, 1.5] {
            assert!(reflection_at(&path, z, path.default_match()).unwrap().norm() < 1e-3);
        }
    }

    #[test]
    fn perturbed_soliton_pole_moves_continuously() {
        let pole = BasePole::on_ray(1.2, C64::new(2.0, 0.0), PoleKind::Type1).unwrap();
        let opts = PoleSearchOptions { rho_min: 0.6, rho_max: 2.0, samples: 29, ..Default::default() };
        let mut shifts = Vec::new();
        for eta in [0.005, 0.01] {
            let path = LoopSolitonPath::new(&pole, eta).unwrap();
            let f = pole_search(&path, opts).unwrap();
            assert_eq!(f.poles.len(), 1, "{:?}", f.diagnostics);
            shifts.push((f.poles[0].xi - pole.xi).norm());
        }
        assert!(shifts[1] > 0.0 && shifts[1] < 0.5);
        // first order in eta
        assert!((shifts[1] / shifts[0] - 2.0).abs() < 0.2, "{shifts:?}");
    }
}
