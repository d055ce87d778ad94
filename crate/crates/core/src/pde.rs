//! Pseudospectral integrators for the OV equation on a periodic domain.
//!
//! The Eulerian form is `u_t = -u u_x + 3 d_x^{-1} u`, the integrated version
//! of `(u_t + u u_x)_x = 3u`. Loop solitons are multivalued in `x`, so a
//! second integrator works in the material label `y`, where `p = x_y` and
//! `w = x_t = u` obey `p_t = w_y` and `w_t = 3 d_y^{-1}(w p)`.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{domain, validation, Result};
use crate::fourier::Fourier;
use crate::soliton::ParametricProfile;
use crate::spectral::SQRT3;

/// RK4 stability bound for the purely imaginary linear spectrum.
const RK4_IMAG_LIMIT: f64 = 2.8;

/// Real field on a uniform periodic grid `x_j = x0 + j L/M`.
#[derive(Clone, Debug, Serialize)]
pub struct FieldState {
    pub x0: f64,
    pub length: f64,
    pub t: f64,
    pub u: Vec<f64>,
}

impl FieldState {
    pub fn new(x0: f64, length: f64, u: Vec<f64>) -> Result<Self> {
        if u.len() < 8 || !(length > 0.0) {
            return validation("field needs >= 8 modes and L > 0");
        }
        if u.iter().any(|v| !v.is_finite()) {
            return validation("field contains non-finite values");
        }
        Ok(FieldState { x0, length, t: 0.0, u })
    }

    /// Samples `f` on the grid of `modes` points starting at `x0`.
    pub fn from_fn(x0: f64, length: f64, modes: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let u = (0..modes).map(|j| f(x0 + j as f64 * length / modes as f64)).collect();
        Self::new(x0, length, u)
    }

    pub fn modes(&self) -> usize {
        self.u.len()
    }

    pub fn dx(&self) -> f64 {
        self.length / self.u.len() as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.u.len()).map(|j| self.x0 + j as f64 * dx).collect()
    }

    pub fn mean(&self) -> f64 {
        self.u.iter().sum::<f64>() / self.u.len() as f64
    }

    /// Fraction of the spectral energy in the highest third of the modes.
    pub fn high_mode_fraction(&self) -> Result<f64> {
        let f = Fourier::new(self.modes(), self.length)?;
        Ok(high_fraction(&f, &f.forward(&self.u)))
    }
}

fn high_fraction(f: &Fourier, uh: &[C64]) -> f64 {
    let kmax = f.wavenumbers().iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let (mut hi, mut all) = (0.0, 0.0);
    for (v, k) in uh.iter().zip(f.wavenumbers()) {
        let e = v.norm_sqr();
        all += e;
        if k.abs() > 2.0 * kmax / 3.0 {
            hi += e;
        }
    }
    if all == 0.0 {
        0.0
    } else {
        hi / all
    }
}

/// Controls for [`evolve`] and [`evolve_lagrangian`].
#[derive(Clone, Debug, Serialize)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Record a snapshot every this many steps (and at the end).
    pub snap_every: usize,
    /// Advective CFL bound `dt max|u| / dx`.
    pub cfl: f64,
    /// If set, abort when `|u|` at the domain edge exceeds this value.
    pub boundary_tol: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { dt: 1e-2, t_end: 1.0, snap_every: 100, cfl: 0.5, boundary_tol: None }
    }
}

/// Snapshots of a run, plus the reason it stopped early, if any.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory<S> {
    pub snapshots: Vec<S>,
    pub failure: Option<String>,
    pub steps: usize,
}

fn check_options(opts: &EvolveOptions, length: f64, dx: f64, umax: f64) -> Result<usize> {
    if !(opts.dt > 0.0) || !(opts.t_end >= 0.0) || opts.snap_every == 0 || !(opts.cfl > 0.0) {
        return validation("need dt > 0, T >= 0, snap_every >= 1 and cfl > 0");
    }
    let adv = opts.dt * umax / dx;
    if adv > opts.cfl {
        return validation(format!("CFL violated: dt max|u|/dx = {adv} > {}", opts.cfl));
    }
    // the longest mode rotates at 3/k_min = 3 L/(2 pi)
    let lin = opts.dt * 3.0 * length / (2.0 * std::f64::consts::PI);
    if lin > RK4_IMAG_LIMIT {
        return validation(format!(
            "dt = {} too large for the dispersive term: dt 3L/(2 pi) = {lin} > {RK4_IMAG_LIMIT}",
            opts.dt
        ));
    }
    Ok((opts.t_end / opts.dt).round() as usize)
}

/// Right-hand side `-(u^2/2)_x + 3 d_x^{-1} u` in Fourier space.
struct Eulerian {
    f: Fourier,
    cut: Vec<bool>,
}

impl Eulerian {
    fn new(modes: usize, length: f64) -> Result<Self> {
        let f = Fourier::new(modes, length)?;
        let kmax = f.wavenumbers().iter().fold(0.0f64, |m, k| m.max(k.abs()));
        let cut = f.wavenumbers().iter().map(|k| k.abs() > 2.0 * kmax / 3.0).collect();
        Ok(Eulerian { f, cut })
    }

    fn rhs(&self, uh: &[C64], out: &mut [C64]) {
        let mut v = uh.to_vec();
        for (x, &c) in v.iter_mut().zip(&self.cut) {
            if c {
                *x = C64::new(0.0, 0.0);
            }
        }
        let u = self.f.inverse(&v);
        let sq: Vec<f64> = u.iter().map(|a| 0.5 * a * a).collect();
        let sh = self.f.forward(&sq);
        for j in 0..uh.len() {
            let k = self.f.wavenumbers()[j];
            out[j] = if k == 0.0 || self.cut[j] {
                C64::new(0.0, 0.0)
            } else {
                -C64::new(0.0, k) * sh[j] + 3.0 * uh[j] / C64::new(0.0, k)
            };
        }
        if let Some(m) = self.f.nyquist() {
            out[m] = C64::new(0.0, 0.0);
        }
    }
}

fn rk4<F: Fn(&[C64], &mut [C64])>(rhs: &F, y: &mut [C64], h: f64) {
    let n = y.len();
    let zero = C64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut tmp = vec![zero; n];
    rhs(y, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    rhs(&tmp, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    rhs(&tmp, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    rhs(&tmp, &mut k4);
    for i in 0..n {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Integrates the Eulerian form with classical RK4 and 2/3 dealiasing.
pub fn evolve(u0: &FieldState, opts: &EvolveOptions) -> Result<Trajectory<FieldState>> {
    if u0.mean().abs() > 1e-12 * (1.0 + u0.u.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
        return validation(format!("initial mean {} must vanish", u0.mean()));
    }
    let umax = u0.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let steps = check_options(opts, u0.length, u0.dx(), umax)?;
    let e = Eulerian::new(u0.modes(), u0.length)?;
    let mut uh = e.f.forward(&u0.u);
    let mut out = Trajectory { snapshots: vec![u0.clone()], failure: None, steps: 0 };
    let mut last = u0.clone();
    let rhs = |a: &[C64], b: &mut [C64]| e.rhs(a, b);
    for n in 1..=steps {
        rk4(&rhs, &mut uh, opts.dt);
        let t = u0.t + n as f64 * opts.dt;
        let healthy = uh.iter().all(|v| v.re.is_finite() && v.im.is_finite());
        if !healthy {
            out.failure = Some(format!("non-finite field at t = {t}; last good state at t = {}", last.t));
            out.snapshots.push(last);
            return Ok(out);
        }
        out.steps = n;
        if n % opts.snap_every == 0 || n == steps {
            let u = e.f.inverse(&uh);
            let state = FieldState { x0: u0.x0, length: u0.length, t, u };
            if let Some(tol) = opts.boundary_tol {
                let edge = state.u[0].abs().max(state.u[state.u.len() - 1].abs());
                if edge > tol {
                    out.failure = Some(format!("|u| = {edge:e} at the boundary at t = {t}"));
                    out.snapshots.push(state);
                    return Ok(out);
                }
            }
            last = state.clone();
            out.snapshots.push(state);
        }
    }
    Ok(out)
}

/// Sup and L2 distance between an exact profile and an Eulerian state over
/// `window` (or the whole grid).
pub fn compare(exact: &ParametricProfile, state: &FieldState, window: Option<(f64, f64)>) -> Result<(f64, f64)> {
    let s = &exact.samples;
    if s.len() < 2 {
        return validation("exact profile needs >= 2 samples");
    }
    if s.windows(2).any(|w| !(w[1].1 > w[0].1)) {
        return domain("exact profile is not monotone in x; a loop cannot be compared on an x-grid");
    }
    let (a, b) = window.unwrap_or((s[0].1, s[s.len() - 1].1));
    let (mut linf, mut l2) = (0.0f64, 0.0);
    let dx = state.dx();
    let mut k = 0;
    for (x, u) in state.grid().iter().zip(&state.u) {
        if *x < a || *x > b || *x < s[0].1 || *x > s[s.len() - 1].1 {
            continue;
        }
        while k + 2 < s.len() && s[k + 1].1 < *x {
            k += 1;
        }
        let (x0, x1) = (s[k].1, s[k + 1].1);
        let lam = (x - x0) / (x1 - x0);
        let ue = s[k].2 * (1.0 - lam) + s[k + 1].2 * lam;
        let d = (u - ue).abs();
        linf = linf.max(d);
        l2 += d * d * dx;
    }
    Ok((linf, l2.sqrt()))
}

/// Lagrangian state: `p = x_y` and `w = u` on a uniform periodic `y`-grid.
#[derive(Clone, Debug, Serialize)]
pub struct LagrangianState {
    pub y0: f64,
    pub length: f64,
    pub t: f64,
    pub p: Vec<f64>,
    pub w: Vec<f64>,
}

impl LagrangianState {
    pub fn new(y0: f64, length: f64, p: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if p.len() != w.len() || p.len() < 8 || !(length > 0.0) {
            return validation("Lagrangian state needs matching p, w with >= 8 modes and L > 0");
        }
        if p.iter().chain(&w).any(|v| !v.is_finite()) {
            return validation("Lagrangian state contains non-finite values");
        }
        Ok(LagrangianState { y0, length, t: 0.0, p, w })
    }

    /// Exact single loop soliton of modulus `rho` and real norming constant
    /// `c > 0` at `t = 0`.
    pub fn single_soliton(rho: f64, c: f64, y0: f64, length: f64, modes: usize) -> Result<Self> {
        if !(rho > 0.0) || !(c > 0.0) {
            return validation("single soliton needs rho > 0 and c > 0");
        }
        let dy = length / modes as f64;
        let (mut p, mut w) = (Vec::with_capacity(modes), Vec::with_capacity(modes));
        for j in 0..modes {
            let y = y0 + j as f64 * dy;
            let e = c / (2.0 * SQRT3 * rho) * (-SQRT3 * rho * y).exp();
            // written in 1/e for large e
            let g = if e > 1.0 { (1.0 / e) / (1.0 + 1.0 / e).powi(2) } else { e / (1.0 + e).powi(2) };
            p.push(1.0 - 6.0 * g);
            w.push(-6.0 / (rho * rho) * g);
        }
        Self::new(y0, length, p, w)
    }

    pub fn modes(&self) -> usize {
        self.p.len()
    }

    pub fn dy(&self) -> f64 {
        self.length / self.p.len() as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let d = self.dy();
        (0..self.p.len()).map(|j| self.y0 + j as f64 * d).collect()
    }

    /// `x(y) = y_R - int_y^{y_R} p`, anchored at the last grid point.
    pub fn x(&self) -> Result<Vec<f64>> {
        let f = Fourier::new(self.modes(), self.length)?;
        let g: Vec<f64> = self.p.iter().map(|v| v - 1.0).collect();
        let anti = antiderivative(&f, &g, self.dy());
        let y = self.grid();
        let n = y.len();
        Ok((0..n).map(|k| y[k] - (anti[n - 1] - anti[k])).collect())
    }

    /// Parametric `(y, x, u)` samples.
    pub fn profile(&self) -> Result<ParametricProfile> {
        let x = self.x()?;
        let samples: Vec<(f64, f64, f64)> =
            self.grid().into_iter().zip(x).zip(&self.w).map(|((y, x), u)| (y, x, *u)).collect();
        let monotone_x = samples.windows(2).all(|w| w[1].1 > w[0].1);
        Ok(ParametricProfile { samples, t: self.t, monotone_x })
    }

    /// Scales `u` by `1 + eta` as a function of `x` and relabels.
    ///
    /// With `q = (1 - u_xx)^{1/3}` the new label obeys
    /// `dy'/dy = (1 + eta - eta p^3)^{1/3}`, so `p' = p / (dy'/dy)`. The new
    /// fields are resampled on the original uniform grid, the labels being
    /// anchored at the right end.
    pub fn perturb_amplitude(&self, eta: f64) -> Result<Self> {
        let n = self.modes();
        let jac: Vec<f64> = self.p.iter().map(|p| (1.0 + eta - eta * p * p * p).cbrt()).collect();
        if jac.iter().any(|j| !(*j > 0.0)) {
            return domain(format!("perturbation eta = {eta} makes 1 - u_xx change sign"));
        }
        let f = Fourier::new(n, self.length)?;
        let g: Vec<f64> = jac.iter().map(|v| v - 1.0).collect();
        let anti = antiderivative(&f, &g, self.dy());
        let y = self.grid();
        let ynew: Vec<f64> = (0..n).map(|k| y[k] - (anti[n - 1] - anti[k])).collect();
        let p1: Vec<f64> = self.p.iter().zip(&jac).map(|(p, j)| p / j).collect();
        let w1: Vec<f64> = self.w.iter().map(|w| (1.0 + eta) * w).collect();
        let mut p = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        let mut k = 1;
        for target in &y {
            if *target < ynew[0] || *target > ynew[n - 1] {
                // outside the relabelled range the fields are at rest
                p.push(1.0);
                w.push(0.0);
                continue;
            }
            while k + 2 < n && ynew[k + 1] < *target {
                k += 1;
            }
            let j = k.clamp(1, n - 3);
            let xs = [ynew[j - 1], ynew[j], ynew[j + 1], ynew[j + 2]];
            p.push(lagrange4(&xs, &[p1[j - 1], p1[j], p1[j + 1], p1[j + 2]], *target));
            w.push(lagrange4(&xs, &[w1[j - 1], w1[j], w1[j + 1], w1[j + 2]], *target));
        }
        let mut out = Self::new(self.y0, self.length, p, w)?;
        out.t = self.t;
        Ok(out)
    }
}

fn lagrange4(xs: &[f64; 4], vs: &[f64; 4], x: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        let mut l = 1.0;
        for j in 0..4 {
            if i != j {
                l *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        s += vs[i] * l;
    }
    s
}

/// Antiderivative of a sampled function whose periodic part is smooth:
/// spectral for `g - mean`, exact for the mean.
fn antiderivative(f: &Fourier, g: &[f64], dy: f64) -> Vec<f64> {
    let n = g.len();
    let mean = g.iter().sum::<f64>() / n as f64;
    let mut gh = f.forward(&g.iter().map(|v| v - mean).collect::<Vec<_>>());
    for (v, &k) in gh.iter_mut().zip(f.wavenumbers()) {
        *v = if k == 0.0 { C64::new(0.0, 0.0) } else { *v / C64::new(0.0, k) };
    }
    if let Some(m) = f.nyquist() {
        gh[m] = C64::new(0.0, 0.0);
    }
    let a = f.inverse(&gh);
    (0..n).map(|k| a[k] - a[0] + mean * k as f64 * dy).collect()
}

/// Right-hand side of `p_t = w_y`, `w_t = 3 d_y^{-1}(w p)` in Fourier space.
struct Lagrangian {
    f: Fourier,
    cut: Vec<bool>,
}

impl Lagrangian {
    fn rhs(&self, s: &[C64], out: &mut [C64]) {
        let n = self.f.len();
        let (ph, wh) = s.split_at(n);
        let mut w1 = wh.to_vec();
        let mut p1 = ph.to_vec();
        for j in 0..n {
            if self.cut[j] {
                w1[j] = C64::new(0.0, 0.0);
                p1[j] = C64::new(0.0, 0.0);
            }
        }
        let w = self.f.inverse(&w1);
        let p = self.f.inverse(&p1);
        let prod: Vec<f64> = w.iter().zip(&p).map(|(a, b)| a * b).collect();
        let prh = self.f.forward(&prod);
        let (op, ow) = out.split_at_mut(n);
        for j in 0..n {
            let k = self.f.wavenumbers()[j];
            if k == 0.0 || self.cut[j] {
                op[j] = C64::new(0.0, 0.0);
                ow[j] = C64::new(0.0, 0.0);
            } else {
                op[j] = C64::new(0.0, k) * wh[j];
                ow[j] = 3.0 * prh[j] / C64::new(0.0, k);
            }
        }
        if let Some(m) = self.f.nyquist() {
            op[m] = C64::new(0.0, 0.0);
            ow[m] = C64::new(0.0, 0.0);
        }
    }
}

/// Integrates the Lagrangian system with RK4 and 2/3 dealiasing.
pub fn evolve_lagrangian(s0: &LagrangianState, opts: &EvolveOptions) -> Result<Trajectory<LagrangianState>> {
    let n = s0.modes();
    let wmax = s0.w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let steps = check_options(opts, s0.length, s0.dy(), wmax)?;
    let f = Fourier::new(n, s0.length)?;
    let kmax = f.wavenumbers().iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let cut = f.wavenumbers().iter().map(|k| k.abs() > 2.0 * kmax / 3.0).collect();
    let l = Lagrangian { f, cut };
    let mut state: Vec<C64> = l.f.forward(&s0.p);
    state.extend(l.f.forward(&s0.w));
    let mut out = Trajectory { snapshots: vec![s0.clone()], failure: None, steps: 0 };
    let mut last = s0.clone();
    let rhs = |a: &[C64], b: &mut [C64]| l.rhs(a, b);
    for k in 1..=steps {
        rk4(&rhs, &mut state, opts.dt);
        let t = s0.t + k as f64 * opts.dt;
        if !state.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            out.failure = Some(format!("non-finite field at t = {t}; last good state at t = {}", last.t));
            out.snapshots.push(last);
            return Ok(out);
        }
        out.steps = k;
        if k % opts.snap_every == 0 || k == steps {
            let p = l.f.inverse(&state[..n]);
            let w = l.f.inverse(&state[n..]);
            let snap = LagrangianState { y0: s0.y0, length: s0.length, t, p, w };
            if let Some(tol) = opts.boundary_tol {
                let edge = snap.w[0].abs().max(snap.w[n - 1].abs());
                if edge > tol {
                    out.failure = Some(format!("|u| = {edge:e} at the boundary at t = {t}"));
                    out.snapshots.push(snap);
                    return Ok(out);
                }
            }
            last = snap.clone();
            out.snapshots.push(snap);
        }
    }
    Ok(out)
}

/// Best single-soliton fit `u = -6 g/rho^2`, `g = e/(1+e)^2`,
/// `e = e^{-sqrt3 rho (y - y_c)}`, to samples `(y, u)` by Gauss-Newton.
/// Returns `(rho, y_c, sup residual)`.
pub fn fit_single_soliton(y: &[f64], u: &[f64], guess: (f64, f64)) -> Result<(f64, f64, f64)> {
    let model = |rho: f64, yc: f64, y: f64| -> f64 {
        let a = -SQRT3 * rho * (y - yc);
        // e/(1+e)^2 = 1/(4 cosh^2(a/2))
        let ch = (0.5 * a).cosh();
        -6.0 / (rho * rho) / (4.0 * ch * ch)
    };
    let (mut rho, mut yc) = guess;
    if !(rho > 0.0) {
        return validation("fit needs a positive rho guess");
    }
    for _ in 0..60 {
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let (hr, hy) = (1e-6 * rho, 1e-6);
        for (yi, ui) in y.iter().zip(u) {
            let r = model(rho, yc, *yi) - ui;
            let jr = (model(rho + hr, yc, *yi) - model(rho - hr, yc, *yi)) / (2.0 * hr);
            let jy = (model(rho, yc + hy, *yi) - model(rho, yc - hy, *yi)) / (2.0 * hy);
            a11 += jr * jr;
            a12 += jr * jy;
            a22 += jy * jy;
            b1 += jr * r;
            b2 += jy * r;
        }
        let det = a11 * a22 - a12 * a12;
        if !(det.abs() > 0.0) {
            return crate::error::numerical("singular normal equations in the soliton fit");
        }
        let dr = (a22 * b1 - a12 * b2) / det;
        let dyc = (a11 * b2 - a12 * b1) / det;
        rho -= dr;
        yc -= dyc;
        if !(rho > 0.0) {
            return crate::error::numerical("soliton fit left rho > 0");
        }
        if dr.abs() < 1e-13 * rho && dyc.abs() < 1e-12 {
            break;
        }
    }
    let sup = y.iter().zip(u).fold(0.0f64, |m, (yi, ui)| m.max((model(rho, yc, *yi) - ui).abs()));
    Ok((rho, yc, sup))
}
