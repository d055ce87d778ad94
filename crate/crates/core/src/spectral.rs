//! Spectral-plane constants, the phase function, pole orbits and the
//! phase-point geometry shared by the other modules.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Result};
use crate::linalg::{perm, Mat3};

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Tolerance on `arg xi - pi/6` for base poles.
pub const ARG_TOL: f64 = 1e-12;

/// Primitive cube root of unity `e^{2 pi i/3}`.
pub fn omega() -> C64 {
    C64::new(-0.5, 0.5 * SQRT3)
}

/// `omega^k` for any integer `k`.
pub fn omega_pow(k: i32) -> C64 {
    match k.rem_euclid(3) {
        0 => C64::new(1.0, 0.0),
        1 => omega(),
        _ => omega().conj(),
    }
}

/// The constant `omega` together with the symmetry permutations.
#[derive(Clone, Debug)]
pub struct SymmetryConstants {
    pub omega: C64,
    pub gamma1: Mat3,
    pub gamma2: Mat3,
    pub gamma3: Mat3,
    pub gamma4: Mat3,
}

impl SymmetryConstants {
    pub fn new() -> Self {
        SymmetryConstants {
            omega: omega(),
            gamma1: perm([[0, 1, 0], [1, 0, 0], [0, 0, 1]]),
            gamma2: perm([[0, 0, 1], [0, 1, 0], [1, 0, 0]]),
            gamma3: perm([[1, 0, 0], [0, 0, 1], [0, 1, 0]]),
            gamma4: perm([[0, 0, 1], [1, 0, 0], [0, 1, 0]]),
        }
    }
}

impl Default for SymmetryConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// Diagonal of `Lambda(z)`: `(z omega, z omega^2, z)`.
pub fn lambdas(z: C64) -> [C64; 3] {
    [z * omega(), z * omega().conj(), z]
}

/// Diagonal of `Q = y Lambda + t Lambda^{-1}`.
pub fn q_exponents(z: C64, y: f64, t: f64) -> [C64; 3] {
    let l = lambdas(z);
    [y * l[0] + t / l[0], y * l[1] + t / l[1], y * l[2] + t / l[2]]
}

/// Phase `theta(z) = -(sqrt3/2)(xi z - 1/z)`.
pub fn theta(z: C64, xi: f64) -> Result<C64> {
    if z == C64::new(0.0, 0.0) {
        return domain("theta is undefined at z = 0");
    }
    Ok(-0.5 * SQRT3 * (xi * z - 1.0 / z))
}

/// Derivative `theta'(z) = -(sqrt3/2)(xi + 1/z^2)`.
pub fn theta_prime(z: C64, xi: f64) -> Result<C64> {
    if z == C64::new(0.0, 0.0) {
        return domain("theta' is undefined at z = 0");
    }
    Ok(-0.5 * SQRT3 * (xi + 1.0 / (z * z)))
}

/// `exp(2 i t theta(xi_n))` in the form `exp(-i sqrt3 (y xi_n - t/xi_n))`,
/// which stays well defined at `t = 0`.
pub fn exp_factor(xi_n: C64, y: f64, t: f64) -> Result<C64> {
    Ok(exp_factor_log(xi_n, y, t)?.exp())
}

/// Logarithm of [`exp_factor`].
pub fn exp_factor_log(xi_n: C64, y: f64, t: f64) -> Result<C64> {
    if xi_n == C64::new(0.0, 0.0) {
        return domain("exp_factor is undefined at xi_n = 0");
    }
    Ok(C64::new(0.0, -SQRT3) * (y * xi_n - t / xi_n))
}

/// Residue channel of a base pole.
///
/// `Type1` places the residue in column 3 driven by column 1, `Type2` in
/// column 1 driven by column 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoleKind {
    Type1,
    Type2,
}

impl PoleKind {
    /// `(from, to)` column indices at the base pole.
    pub fn slot(self) -> (usize, usize) {
        match self {
            PoleKind::Type1 => (0, 2),
            PoleKind::Type2 => (2, 0),
        }
    }
}

/// A discrete eigenvalue on the ray `arg z = pi/6` with its norming constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasePole {
    pub xi: C64,
    pub c: C64,
    pub kind: PoleKind,
}

impl BasePole {
    pub fn new(xi: C64, c: C64, kind: PoleKind) -> Result<Self> {
        let p = BasePole { xi, c, kind };
        p.validate()?;
        Ok(p)
    }

    /// Pole at `rho e^{i pi/6}`.
    pub fn on_ray(rho: f64, c: C64, kind: PoleKind) -> Result<Self> {
        Self::new(C64::from_polar(rho, PI / 6.0), c, kind)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi.norm() > 0.0) || !self.xi.norm().is_finite() {
            return validation(format!("pole {} has non-positive modulus", self.xi));
        }
        if (self.xi.arg() - PI / 6.0).abs() > ARG_TOL {
            return validation(format!(
                "pole {} is off the ray arg z = pi/6 (arg = {:.15})",
                self.xi,
                self.xi.arg()
            ));
        }
        if !(self.c.norm() > 0.0) || !self.c.norm().is_finite() {
            return validation(format!("pole {} has zero norming constant", self.xi));
        }
        Ok(())
    }

    pub fn rho(&self) -> f64 {
        self.xi.norm()
    }
}

/// One member of a symmetry orbit.
///
/// The residue condition reads
/// `Res_{z} M[:, to] = -c e^{Q_from(z) - Q_to(z)} M[:, from](z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitPole {
    pub z: C64,
    pub c: C64,
    pub from: usize,
    pub to: usize,
    /// Index of the generating base pole.
    pub base: usize,
    /// Position inside the orbit, `0..6`.
    pub image: usize,
}

impl OrbitPole {
    /// `Q_from - Q_to` at the pole.
    pub fn exponent(&self, y: f64, t: f64) -> C64 {
        let q = q_exponents(self.z, y, t);
        q[self.from] - q[self.to]
    }
}

const SIGMA: [usize; 3] = [1, 2, 0];
const TAU: [usize; 3] = [1, 0, 2];

/// Expands base poles into the full `6N` orbit.
///
/// Ordering: entry `n + kN` is image `k` of base pole `n`, with points
/// `xi, omega conj(xi), omega xi, omega^2 conj(xi), omega^2 xi, conj(xi)`.
/// The first `3N` entries lie in the upper half plane.
pub fn expand_orbit(poles: &[BasePole]) -> Result<Vec<OrbitPole>> {
    let n = poles.len();
    let mut out = Vec::with_capacity(6 * n);
    let w = omega();
    let w2 = w.conj();
    for k in 0..6 {
        for (b, p) in poles.iter().enumerate() {
            let (j, l) = p.kind.slot();
            let (z, c, from, to) = match k {
                0 => (p.xi, p.c, j, l),
                1 => (w * p.xi.conj(), p.c.conj() * w, TAU[SIGMA[j]], TAU[SIGMA[l]]),
                2 => (w * p.xi, p.c * w, SIGMA[SIGMA[j]], SIGMA[SIGMA[l]]),
                3 => (
                    w2 * p.xi.conj(),
                    p.c.conj() * w2,
                    TAU[SIGMA[SIGMA[j]]],
                    TAU[SIGMA[SIGMA[l]]],
                ),
                4 => (w2 * p.xi, p.c * w2, SIGMA[j], SIGMA[l]),
                _ => (p.xi.conj(), p.c.conj(), TAU[j], TAU[l]),
            };
            out.push(OrbitPole { z, c, from, to, base: b, image: k });
        }
    }
    for a in 0..out.len() {
        for b in (a + 1)..out.len() {
            if (out[a].z - out[b].z).norm() < 1e-10 {
                return validation(format!(
                    "duplicate orbit pole {} (base poles too symmetric)",
                    out[a].z
                ));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// `y/t < 0`, six phase points.
    I,
    /// `y/t > 0`, no phase points.
    II,
}

/// Phase-point geometry at `xi = y/t`.
#[derive(Clone, Debug)]
pub struct PhaseGeometry {
    pub xi_ratio: f64,
    pub region: Region,
    /// `1/sqrt|xi|`; `None` in region II.
    pub kappa: Option<f64>,
    /// `kappa_{nj} = (-1)^j omega^n kappa`, stored at index `2n + j`.
    pub phase_points: Vec<C64>,
}

impl PhaseGeometry {
    pub fn point(&self, n: usize, j: usize) -> C64 {
        self.phase_points[2 * n + j]
    }

    /// Whether real `s` lies in `I = (-inf, -kappa) U (kappa, inf)`.
    pub fn in_interval(&self, s: f64) -> bool {
        match self.kappa {
            Some(k) => s.abs() > k,
            None => false,
        }
    }
}

pub fn phase_geometry(y: f64, t: f64) -> Result<PhaseGeometry> {
    if !(t > 0.0) {
        return domain(format!("phase geometry needs t > 0, got {t}"));
    }
    let xi = y / t;
    if xi == 0.0 {
        return domain("y/t = 0 lies on the region boundary");
    }
    if xi > 0.0 {
        return Ok(PhaseGeometry {
            xi_ratio: xi,
            region: Region::II,
            kappa: None,
            phase_points: Vec::new(),
        });
    }
    let kappa = 1.0 / (-xi).sqrt();
    let mut pts = Vec::with_capacity(6);
    for n in 0..3 {
        for j in 0..2 {
            let s = if j == 0 { 1.0 } else { -1.0 };
            pts.push(s * omega_pow(n as i32) * kappa);
        }
    }
    Ok(PhaseGeometry {
        xi_ratio: xi,
        region: Region::I,
        kappa: Some(kappa),
        phase_points: pts,
    })
}

/// Reflection coefficient sampled on a uniform symmetric grid.
///
/// Off-grid values use monotone piecewise cubic Hermite interpolation on the
/// real and imaginary parts separately; outside the grid `r = 0`.
#[derive(Clone, Debug)]
pub struct SampledReflection {
    z0: f64,
    dz: f64,
    re: Vec<f64>,
    im: Vec<f64>,
    dre: Vec<f64>,
    dim: Vec<f64>,
}

impl SampledReflection {
    /// `z` must be uniform and increasing.
    pub fn new(z: &[f64], values: &[C64]) -> Result<Self> {
        if z.len() != values.len() || z.len() < 3 {
            return validation("reflection samples need >= 3 matching (z, r) pairs");
        }
        let dz = (z[z.len() - 1] - z[0]) / (z.len() - 1) as f64;
        if !(dz > 0.0) {
            return validation("reflection grid must be increasing");
        }
        for (k, zk) in z.iter().enumerate() {
            if (zk - (z[0] + k as f64 * dz)).abs() > 1e-9 * dz.max(zk.abs()) {
                return validation(format!("reflection grid is not uniform at index {k}"));
            }
        }
        let re: Vec<f64> = values.iter().map(|v| v.re).collect();
        let im: Vec<f64> = values.iter().map(|v| v.im).collect();
        let dre = pchip_slopes(&re, dz);
        let dim = pchip_slopes(&im, dz);
        Ok(SampledReflection { z0: z[0], dz, re, im, dre, dim })
    }

    /// Samples `f` on `n` points spanning `[-zmax, zmax]`.
    pub fn from_fn(zmax: f64, n: usize, f: impl Fn(f64) -> C64) -> Result<Self> {
        let z: Vec<f64> = (0..n)
            .map(|k| -zmax + 2.0 * zmax * k as f64 / (n - 1) as f64)
            .collect();
        let v: Vec<C64> = z.iter().map(|&s| f(s)).collect();
        Self::new(&z, &v)
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.re.len()).map(|k| self.z0 + k as f64 * self.dz).collect()
    }

    pub fn values(&self) -> Vec<C64> {
        self.re.iter().zip(&self.im).map(|(a, b)| C64::new(*a, *b)).collect()
    }

    pub fn z_min(&self) -> f64 {
        self.z0
    }

    pub fn z_max(&self) -> f64 {
        self.z0 + (self.re.len() - 1) as f64 * self.dz
    }

    pub fn eval(&self, z: f64) -> C64 {
        let n = self.re.len();
        let s = (z - self.z0) / self.dz;
        if !(s >= 0.0) || s > (n - 1) as f64 {
            return C64::new(0.0, 0.0);
        }
        let k = (s.floor() as usize).min(n - 2);
        let u = s - k as f64;
        C64::new(
            hermite(self.re[k], self.re[k + 1], self.dre[k], self.dre[k + 1], self.dz, u),
            hermite(self.im[k], self.im[k + 1], self.dim[k], self.dim[k + 1], self.dz, u),
        )
    }

    pub fn sup_abs(&self) -> f64 {
        self.re
            .iter()
            .zip(&self.im)
            .fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }
}

fn hermite(p0: f64, p1: f64, m0: f64, m1: f64, h: f64, u: f64) -> f64 {
    let u2 = u * u;
    let u3 = u2 * u;
    (2.0 * u3 - 3.0 * u2 + 1.0) * p0
        + (u3 - 2.0 * u2 + u) * h * m0
        + (-2.0 * u3 + 3.0 * u2) * p1
        + (u3 - u2) * h * m1
}

/// Fritsch-Carlson slopes for a monotone cubic interpolant.
fn pchip_slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            d[k] = 2.0 / (1.0 / delta[k - 1] + 1.0 / delta[k]);
        }
    }
    d[0] = end_slope(delta[0], delta.get(1).copied().unwrap_or(delta[0]));
    d[n - 1] = end_slope(delta[n - 2], if n > 2 { delta[n - 3] } else { delta[n - 2] });
    d
}

fn end_slope(d0: f64, d1: f64) -> f64 {
    let m = 1.5 * d0 - 0.5 * d1;
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Reflection datum on the real line.
#[derive(Clone, Debug)]
pub enum Reflection {
    Zero,
    Sampled(SampledReflection),
}

impl Reflection {
    pub fn eval(&self, z: f64) -> C64 {
        match self {
            Reflection::Zero => C64::new(0.0, 0.0),
            Reflection::Sampled(s) => s.eval(z),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Reflection::Zero => true,
            Reflection::Sampled(s) => s.sup_abs() == 0.0,
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match self {
            Reflection::Zero => 0.0,
            Reflection::Sampled(s) => s.sup_abs(),
        }
    }

    /// Half-width of the support, `0` for `Zero`.
    pub fn z_max(&self) -> f64 {
        match self {
            Reflection::Zero => 0.0,
            Reflection::Sampled(s) => s.z_max().max(-s.z_min()),
        }
    }
}

/// Reflection coefficient plus base poles.
#[derive(Clone, Debug)]
pub struct ScatteringData {
    pub reflection: Reflection,
    pub poles: Vec<BasePole>,
}

/// Threshold for `|r|` at the grid ends.
pub const END_DECAY_TOL: f64 = 1e-8;

impl ScatteringData {
    pub fn reflectionless(poles: Vec<BasePole>) -> Result<Self> {
        let d = ScatteringData { reflection: Reflection::Zero, poles };
        d.validate()?;
        Ok(d)
    }

    pub fn new(reflection: Reflection, poles: Vec<BasePole>) -> Result<Self> {
        let d = ScatteringData { reflection, poles };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.poles {
            p.validate()?;
        }
        for a in 0..self.poles.len() {
            for b in (a + 1)..self.poles.len() {
                if (self.poles[a].xi - self.poles[b].xi).norm() < 1e-10 {
                    return validation(format!("duplicate base pole {}", self.poles[a].xi));
                }
            }
        }
        if let Reflection::Sampled(s) = &self.reflection {
            if s.sup_abs() >= 1.0 {
                return validation("sup |r| must be < 1");
            }
            let v = s.values();
            let ends = v[0].norm().max(v[v.len() - 1].norm());
            if ends >= END_DECAY_TOL {
                return validation(format!(
                    "|r| = {ends:e} at the grid ends exceeds {END_DECAY_TOL:e}"
                ));
            }
        }
        Ok(())
    }

    pub fn orbit(&self) -> Result<Vec<OrbitPole>> {
        expand_orbit(&self.poles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn omega_identities() {
        let w = omega();
        assert!(close(w * w * w, C64::new(1.0, 0.0), 1e-15));
        assert!(close(1.0 + w + w * w, C64::new(0.0, 0.0), 1e-15));
    }

    #[test]
    fn gamma_matrices() {
        let s = SymmetryConstants::new();
        let id = Mat3::identity();
        assert_eq!(s.gamma1 * s.gamma1, id);
        assert_eq!(s.gamma2 * s.gamma2, id);
        assert_eq!(s.gamma3 * s.gamma3, id);
        assert_eq!(s.gamma4 * s.gamma4 * s.gamma4, id);
        assert!(close(s.gamma4.determinant(), C64::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn theta_examples() {
        let v = theta(C64::new(1.0, 0.0), -1.0).unwrap();
        assert!(close(v, C64::new(SQRT3, 0.0), 1e-15));
        let v = theta(C64::new(0.0, 1.0), 0.0).unwrap();
        assert!(close(v, C64::new(0.0, -0.5 * SQRT3), 1e-15));
        let k = 1.7;
        let d = theta_prime(C64::new(k, 0.0), -1.0 / (k * k)).unwrap();
        assert!(d.norm() < 1e-15);
        assert!(theta(C64::new(0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn exp_factor_examples() {
        let xi = C64::from_polar(1.3, PI / 6.0);
        assert!(close(exp_factor(xi, 0.0, 0.0).unwrap(), C64::new(1.0, 0.0), 1e-15));
        let e = C64::from_polar(1.0, PI / 6.0);
        let v = exp_factor(e, 1.0, 0.0).unwrap();
        let want = (0.5 * SQRT3).exp() * C64::from_polar(1.0, -1.5);
        assert!(close(v, want, 1e-14));
        // 2 i t theta(xi) at small t with y = xi_ratio * t
        let t = 1e-8;
        let y = 1.0;
        let two_it_theta = C64::new(0.0, 2.0 * t) * theta(e, y / t).unwrap();
        assert!(close(two_it_theta.exp(), v, 1e-7));
        for &(y, t) in &[(0.3, 2.0), (-1.0, 0.5), (2.0, 0.0)] {
            let m = exp_factor(xi, y, t).unwrap().norm();
            let want = (SQRT3 * xi.im * (y + t / xi.norm_sqr())).exp();
            assert!((m - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn unit_orbit() {
        let p = BasePole::on_ray(1.0, C64::new(1.0, 0.0), PoleKind::Type1).unwrap();
        let orb = expand_orbit(&[p]).unwrap();
        let want = [
            C64::from_polar(1.0, PI / 6.0),
            C64::new(0.0, 1.0),
            C64::from_polar(1.0, 5.0 * PI / 6.0),
            C64::from_polar(1.0, -5.0 * PI / 6.0),
            C64::new(0.0, -1.0),
            C64::from_polar(1.0, -PI / 6.0),
        ];
        for (o, w) in orb.iter().zip(want.iter()) {
            assert!(close(o.z, *w, 1e-14), "{} vs {}", o.z, w);
        }
        assert!(expand_orbit(&[]).unwrap().is_empty());
    }

    #[test]
    fn orbit_constants() {
        let c = C64::new(0.4, -0.9);
        let p = BasePole::on_ray(0.8, c, PoleKind::Type1).unwrap();
        let o = expand_orbit(&[p]).unwrap();
        let w = omega();
        assert!(close(o[1].c, c.conj() * w, 1e-15));
        assert!(close(o[2].c, c * w, 1e-15));
        assert!(close(o[3].c, o[2].c.conj(), 1e-15));
        assert!(close(o[4].c, o[1].c.conj(), 1e-15));
        assert!(close(o[5].c, c.conj(), 1e-15));
        assert!(close(o[3].z, o[2].z.conj(), 1e-15));
        assert!(close(o[4].z, o[1].z.conj(), 1e-15));
    }

    #[test]
    fn off_ray_rejected() {
        let xi = C64::from_polar(1.0, PI / 6.0 + 1e-9);
        assert!(BasePole::new(xi, C64::new(1.0, 0.0), PoleKind::Type1).is_err());
        assert!(BasePole::on_ray(1.0, C64::new(0.0, 0.0), PoleKind::Type1).is_err());
    }

    #[test]
    fn geometry_examples() {
        let g = phase_geometry(-4.0, 4.0).unwrap();
        assert_eq!(g.region, Region::I);
        assert!((g.kappa.unwrap() - 1.0).abs() < 1e-15);
        let w = omega();
        let want = [
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
            w,
            -w,
            w * w,
            -w * w,
        ];
        for (p, q) in g.phase_points.iter().zip(want.iter()) {
            assert!(close(*p, *q, 1e-15));
        }
        let g = phase_geometry(1.0, 1.0).unwrap();
        assert_eq!(g.region, Region::II);
        assert!(g.phase_points.is_empty());
        let g = phase_geometry(-1.0, 4.0).unwrap();
        assert!((g.kappa.unwrap() - 2.0).abs() < 1e-14);
        assert!(phase_geometry(0.0, 1.0).is_err());
        for &(y, t) in &[(-3.0, 7.0), (-0.2, 11.0)] {
            let g = phase_geometry(y, t).unwrap();
            for (i, p) in g.phase_points.iter().enumerate() {
                assert!((p.norm() - g.kappa.unwrap()).abs() < 1e-14);
                // stationary for the phase rotated by omega^n
                let back = *p * omega_pow(-((i / 2) as i32));
                assert!(theta_prime(back, g.xi_ratio).unwrap().norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pchip_reproduces_nodes_and_linear_data() {
        let s = SampledReflection::from_fn(2.0, 41, |z| C64::new(0.1 * z, -0.05 * z)).unwrap();
        for &z in &[-1.93, -0.5, 0.0, 0.77, 1.99] {
            assert!(close(s.eval(z), C64::new(0.1 * z, -0.05 * z), 1e-14));
        }
        assert_eq!(s.eval(2.5), C64::new(0.0, 0.0));
    }
}
