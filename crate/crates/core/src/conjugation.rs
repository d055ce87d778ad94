//! Scalar conjugation: `nu`, `delta`, the partition of the poles, `T`,
//! `F_1..F_3`, the Taylor data of `F_3` at zero, the phase-point value
//! `F^0_{12}` and the shifted norming constants.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{domain, Result};
use crate::quad::{cauchy, integrate, integrate_real, QuadOptions, Side};
use crate::spectral::{
    omega, theta, BasePole, PhaseGeometry, PoleKind, Reflection, Region, SQRT3,
};

/// Quadrature tolerances for every integral in this module.
pub fn quad_options() -> QuadOptions {
    QuadOptions { abs_tol: 1e-13, rel_tol: 1e-10, max_intervals: 20000 }
}

/// `nu(z) = -log(1 - |r(z)|^2)/(2 pi)`.
pub fn nu(r: &Reflection, z: f64) -> Result<f64> {
    nu_value(r.eval(z), z)
}

fn nu_value(r: C64, z: f64) -> Result<f64> {
    let a = r.norm_sqr();
    if a >= 1.0 {
        return domain(format!("|r({z})| = {} is not < 1", a.sqrt()));
    }
    Ok(-(-a).ln_1p() / (2.0 * PI))
}

/// Index sets over base poles.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LambdaPartition {
    /// Type 1 with `Im theta(xi_n) < 0`.
    pub l1: Vec<usize>,
    /// Type 2 with `Im theta(omega xi_n) > 0`.
    pub l2: Vec<usize>,
    /// Type 1 with `Im theta(xi_n) > 0`.
    pub l3: Vec<usize>,
    /// Type 2 with `Im theta(omega xi_n) < 0`.
    pub l4: Vec<usize>,
}

impl LambdaPartition {
    /// `Lambda^+ = Lambda_1 U Lambda_2`.
    pub fn plus(&self) -> Vec<usize> {
        let mut v = self.l1.clone();
        v.extend(&self.l2);
        v.sort_unstable();
        v
    }

    /// `Lambda^- = Lambda_3 U Lambda_4`.
    pub fn minus(&self) -> Vec<usize> {
        let mut v = self.l3.clone();
        v.extend(&self.l4);
        v.sort_unstable();
        v
    }
}

/// Relative size of `Im theta` below which a pole counts as degenerate.
const DEGENERATE_TOL: f64 = 1e-12;

pub fn lambda_partition(poles: &[BasePole], xi_ratio: f64) -> Result<LambdaPartition> {
    let mut p = LambdaPartition::default();
    for (n, pole) in poles.iter().enumerate() {
        let z = match pole.kind {
            PoleKind::Type1 => pole.xi,
            PoleKind::Type2 => omega() * pole.xi,
        };
        let th = theta(z, xi_ratio)?;
        let scale = 0.5 * SQRT3 * (xi_ratio.abs() * z.norm() + 1.0 / z.norm());
        if th.im.abs() <= DEGENERATE_TOL * scale {
            return domain(format!(
                "pole {} lies on a critical trajectory (Im theta = 0) at y/t = {xi_ratio}",
                pole.xi
            ));
        }
        match (pole.kind, th.im < 0.0) {
            (PoleKind::Type1, true) => p.l1.push(n),
            (PoleKind::Type1, false) => p.l3.push(n),
            (PoleKind::Type2, true) => p.l4.push(n),
            (PoleKind::Type2, false) => p.l2.push(n),
        }
    }
    Ok(p)
}

/// Values of `T` and `F_1, F_2, F_3` at one point.
#[derive(Clone, Copy, Debug)]
pub struct FValues {
    pub t: C64,
    pub f1: C64,
    pub f2: C64,
    pub f3: C64,
}

impl FValues {
    /// `F_ij = F_i/F_j`, `i, j` in `1..=3`.
    pub fn f_ij(&self, i: usize, j: usize) -> C64 {
        let f = [self.f1, self.f2, self.f3];
        f[i - 1] / f[j - 1]
    }
}

/// Conjugation data at one `(y, t)`.
#[derive(Clone, Debug)]
pub struct Conjugation {
    pub reflection: Reflection,
    pub poles: Vec<BasePole>,
    pub geometry: PhaseGeometry,
    pub partition: LambdaPartition,
    pub opts: QuadOptions,
}

impl Conjugation {
    pub fn new(reflection: Reflection, poles: Vec<BasePole>, geometry: PhaseGeometry) -> Result<Self> {
        let partition = lambda_partition(&poles, geometry.xi_ratio)?;
        Ok(Conjugation { reflection, poles, geometry, partition, opts: quad_options() })
    }

    pub fn nu(&self, s: f64) -> Result<f64> {
        nu(&self.reflection, s)
    }

    /// Pieces of `I` on which `nu` can be nonzero, as `[a, b]` pairs.
    pub fn support_pieces(&self) -> Vec<(f64, f64)> {
        let Some(k) = self.geometry.kappa else { return Vec::new() };
        let zm = self.reflection.z_max();
        if self.reflection.is_zero() || k >= zm {
            return Vec::new();
        }
        vec![(-zm, -k), (k, zm)]
    }

    fn nu_c(&self, s: f64) -> C64 {
        C64::new(self.nu(s).unwrap_or(f64::NAN), 0.0)
    }

    /// `int_I nu(s)/(s - z) ds`; `side` selects the boundary value for
    /// `z` on `I`.
    pub fn cauchy_nu(&self, z: C64, side: Option<Side>) -> Result<C64> {
        let on_i = z.im == 0.0 && self.geometry.in_interval(z.re);
        let side = match (on_i, side) {
            (true, None) => {
                return domain(format!("delta at z = {z} on I needs a side"));
            }
            (true, Some(s)) => s,
            (false, _) => Side::Principal,
        };
        let mut acc = C64::new(0.0, 0.0);
        for (a, b) in self.support_pieces() {
            acc += cauchy(|s| self.nu_c(s), a, b, z, side, self.opts)?;
        }
        if !acc.re.is_finite() || !acc.im.is_finite() {
            return domain(format!("Cauchy integral of nu is not finite at z = {z}"));
        }
        Ok(acc)
    }

    /// `delta(z) = exp(i int_I nu(s)/(s - z) ds)`.
    pub fn delta(&self, z: C64, side: Option<Side>) -> Result<C64> {
        Ok((C64::new(0.0, 1.0) * self.cauchy_nu(z, side)?).exp())
    }

    fn pole_product(&self, z: C64) -> Result<C64> {
        let w = omega();
        let mut acc = C64::new(1.0, 0.0);
        let mut factor = |num: C64, den: C64, what: &str| -> Result<()> {
            if den.norm() < 1e-12 || num.norm() < 1e-12 {
                return domain(format!("T evaluated at its {what} (z = {z})"));
            }
            acc *= num / den;
            Ok(())
        };
        for &n in &self.partition.l1 {
            let x = self.poles[n].xi;
            factor(z - x.conj(), z - x, &format!("Lambda_1 factor of pole {x}"))?;
        }
        for &n in &self.partition.l2 {
            let x = self.poles[n].xi;
            factor(z - w * w * x.conj(), z - w * x, &format!("Lambda_2 factor of pole {x}"))?;
        }
        Ok(acc)
    }

    /// `T(z)`.
    pub fn t_fn(&self, z: C64, side: Option<Side>) -> Result<C64> {
        Ok(self.pole_product(z)? * self.delta(z, side)?)
    }

    /// `T`, `F_1 = T(z)/T(omega^2 z)`, `F_2 = F_1(omega z)`,
    /// `F_3 = F_1(omega^2 z)`.
    pub fn t_and_f(&self, z: C64, side: Option<Side>) -> Result<FValues> {
        let w = omega();
        let t0 = self.t_fn(z, side)?;
        let t1 = self.t_fn(w * z, None)?;
        let t2 = self.t_fn(w * w * z, None)?;
        Ok(FValues { t: t0, f1: t0 / t2, f2: t1 / t0, f3: t2 / t1 })
    }

    /// `(F_3^0, F_3^1)`.
    pub fn f3_taylor(&self) -> Result<(C64, C64)> {
        let w = omega();
        let w2 = w * w;
        let mut f0 = C64::new(1.0, 0.0);
        for n in self.partition.minus() {
            let x = self.poles[n].xi;
            f0 *= (w2 * x.conj() * w * x) / (x * x.conj());
        }
        for n in self.partition.plus() {
            let x = self.poles[n].xi;
            f0 *= (x * x.conj()) / (w * x.conj() * w2 * x);
        }
        let Some(kappa) = self.geometry.kappa else {
            return Ok((f0, C64::new(0.0, 0.0)));
        };
        let zm = self.reflection.z_max();
        let integral = if self.reflection.is_zero() || kappa >= zm {
            0.0
        } else {
            let bad = std::cell::Cell::new(None);
            let v = integrate_real(
                |s| {
                    let a = self.reflection.eval(s).norm_sqr();
                    if a >= 1.0 {
                        bad.set(Some(s));
                        return 0.0;
                    }
                    (-a).ln_1p() / (s * s)
                },
                kappa,
                zm,
                self.opts,
            );
            if let Some(s) = bad.get() {
                return domain(format!("|r({s})| >= 1 in the F_3^1 integral"));
            }
            v?
        };
        Ok((f0, SQRT3 * f0 / PI * integral))
    }

    /// `kappa_{0j} = (-1)^j kappa`.
    fn phase_point(&self, j: usize) -> Result<f64> {
        match (self.geometry.region, self.geometry.kappa) {
            (Region::I, Some(k)) if j < 2 => Ok(if j == 0 { k } else { -k }),
            _ => domain("phase points exist only in region I (j in {0, 1})"),
        }
    }

    /// Unit interval of `I` adjacent to `kappa_{0j}`.
    fn xi_interval(&self, j: usize) -> Result<(f64, f64)> {
        let p = self.phase_point(j)?;
        Ok(if j == 0 { (p, p + 1.0) } else { (p - 1.0, p) })
    }

    /// `beta(kappa_{0j}, z)`.
    ///
    /// The subtracted characteristic function is supported on the unit
    /// interval of `I` adjacent to the phase point, and the logarithm is
    /// normalized to vanish at `z = kappa_{0j}`.
    pub fn beta(&self, j: usize, z: C64) -> Result<C64> {
        let p = self.phase_point(j)?;
        let nu0 = self.nu(p)?;
        let (xa, xb) = self.xi_interval(j)?;
        let zm = self.reflection.z_max();
        let mut acc = C64::new(0.0, 0.0);
        if !self.reflection.is_zero() {
            let at_p = (z - p).norm() == 0.0;
            let g = |s: f64| C64::new(self.nu(s).unwrap_or(f64::NAN) - nu0, 0.0);
            acc += if at_p {
                integrate(|s| g(s) / (s - p), xa, xb, self.opts)?
            } else {
                let side = if z.im == 0.0 && z.re > xa && z.re < xb { Side::Plus } else { Side::Principal };
                cauchy(g, xa, xb, z, side, self.opts)?
            };
            let rest: Vec<(f64, f64)> = if j == 0 {
                vec![(-zm, -p), (xb, zm)]
            } else {
                vec![(-zm, xa), (-p, zm)]
            };
            for (a, b) in rest {
                if b > a && a < zm && b > -zm {
                    let (a, b) = (a.max(-zm), b.min(zm));
                    acc += cauchy(|s| self.nu_c(s), a, b, z, Side::Principal, self.opts)?;
                }
            }
        }
        let log_term = if j == 0 { (p + 1.0 - z).ln() } else { (z - p + 1.0).ln() };
        Ok(acc + nu0 * log_term)
    }

    /// `F^0_{12}(kappa_{0j}) = f_1 f_2 e^{2 i beta(kappa_{0j}, kappa_{0j})}`.
    pub fn f12_at_phase_point(&self, j: usize) -> Result<C64> {
        let p = C64::new(self.phase_point(j)?, 0.0);
        let w = omega();
        let w2 = w * w;
        let mut f1 = C64::new(1.0, 0.0);
        for &n in &self.partition.l1 {
            let x = self.poles[n].xi;
            let a = (p - x) / (p - x.conj());
            f1 *= a * a * (p - w * x.conj()) / (p - w * x) * (p - w2 * x.conj()) / (p - w2 * x);
        }
        let mut f2 = C64::new(1.0, 0.0);
        for &n in &self.partition.l2 {
            let x = self.poles[n].xi;
            let a = (p - w * x) / (p - w2 * x.conj());
            f2 *= a * a * (p - x.conj()) / (p - w2 * x) * (p - w * x.conj()) / (p - x);
        }
        let b = self.beta(j, p)?;
        Ok(f1 * f2 * (C64::new(0.0, 2.0) * b).exp())
    }

    /// `c_hat_n = c_n exp((i/pi) int_I log(1 - |r|^2)/(s - xi_n) ds)`.
    pub fn shifted_norming_constants(&self) -> Result<Vec<C64>> {
        let mut out = Vec::with_capacity(self.poles.len());
        for p in &self.poles {
            let mut acc = C64::new(0.0, 0.0);
            for (a, b) in self.support_pieces() {
                let v = integrate(
                    |s| C64::new((-self.reflection.eval(s).norm_sqr()).ln_1p(), 0.0) / (s - p.xi),
                    a,
                    b,
                    self.opts,
                )?;
                acc += v;
            }
            out.push(p.c * (C64::new(0.0, 1.0 / PI) * acc).exp());
        }
        Ok(out)
    }

    /// Same constants through `c_hat = c delta(xi)^{-2}`.
    pub fn shifted_via_delta(&self) -> Result<Vec<C64>> {
        self.poles
            .iter()
            .map(|p| Ok(p.c / self.delta(p.xi, None)?.powi(2)))
            .collect()
    }

    /// Base poles with their constants replaced by `c_hat`.
    pub fn shifted_poles(&self) -> Result<Vec<BasePole>> {
        let c = self.shifted_norming_constants()?;
        Ok(self
            .poles
            .iter()
            .zip(c)
            .map(|(p, c)| BasePole { xi: p.xi, c, kind: p.kind })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{phase_geometry, SampledReflection};

    fn synthetic(amp: f64) -> Reflection {
        Reflection::Sampled(
            SampledReflection::from_fn(12.0, 2401, |z| {
                C64::from_polar(amp * (-(z - 0.3).powi(2) / 2.0).exp(), 0.7 * z)
            })
            .unwrap(),
        )
    }

    fn even(amp: f64) -> Reflection {
        Reflection::Sampled(
            SampledReflection::from_fn(12.0, 2401, |z| {
                C64::from_polar(amp * (-z * z / 2.0).exp(), 0.4 * z)
            })
            .unwrap(),
        )
    }

    #[test]
    fn nu_examples() {
        assert_eq!(nu(&Reflection::Zero, 1.0).unwrap(), 0.0);
        let r = (1.0 - (-2.0 * PI).exp()).sqrt();
        assert!((nu_value(C64::new(r, 0.0), 0.0).unwrap() - 1.0).abs() < 1e-13);
        let v = nu_value(C64::new(0.0, 0.1), 0.0).unwrap();
        assert!((v + 0.99f64.ln() / (2.0 * PI)).abs() < 1e-15);
        assert!(nu_value(C64::new(1.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn delta_trivial_and_normalized() {
        let g = phase_geometry(-2.0, 8.0).unwrap();
        let c = Conjugation::new(Reflection::Zero, vec![], g.clone()).unwrap();
        assert_eq!(c.delta(C64::new(0.3, 0.2), None).unwrap(), C64::new(1.0, 0.0));
        let c = Conjugation::new(synthetic(0.5), vec![], g).unwrap();
        let far = c.delta(C64::new(1e7, 1e7), None).unwrap();
        assert!((far - 1.0).norm() < 1e-6);
        assert!(c.delta(C64::new(5.0, 0.0), None).is_err());
    }

    #[test]
    fn delta_jump() {
        let g = phase_geometry(-1.0, 4.0).unwrap();
        let c = Conjugation::new(synthetic(0.5), vec![], g).unwrap();
        for &s in &[-3.1, -2.5, 2.2, 2.9, 4.0] {
            let z = C64::new(s, 0.0);
            let p = c.delta(z, Some(Side::Plus)).unwrap();
            let m = c.delta(z, Some(Side::Minus)).unwrap();
            let want = 1.0 - c.reflection.eval(s).norm_sqr();
            assert!((p / m - want).norm() < 1e-6);
        }
    }

    #[test]
    fn partition_matches_modulus_rule() {
        for &xi in &[-0.5, -2.0, 0.7] {
            let mut poles = Vec::new();
            for k in 0..8 {
                let rho = 0.3 + 0.37 * k as f64;
                let kind = if k % 2 == 0 { PoleKind::Type1 } else { PoleKind::Type2 };
                poles.push(BasePole::on_ray(rho, C64::new(1.0, 0.0), kind).unwrap());
            }
            let p = lambda_partition(&poles, xi).unwrap();
            for (n, pole) in poles.iter().enumerate() {
                let inside = xi > 0.0 || pole.rho() < 1.0 / (-xi).sqrt();
                let z = if pole.kind == PoleKind::Type1 { pole.xi } else { omega() * pole.xi };
                let neg = theta(z, xi).unwrap().im < 0.0;
                match pole.kind {
                    PoleKind::Type1 => {
                        assert_eq!(p.l1.contains(&n), neg);
                        assert_eq!(p.l1.contains(&n), inside);
                    }
                    PoleKind::Type2 => assert_eq!(p.l4.contains(&n), neg),
                }
            }
        }
        assert_eq!(lambda_partition(&[], -1.0).unwrap(), LambdaPartition::default());
        let crit = BasePole::on_ray(1.0, C64::new(1.0, 0.0), PoleKind::Type1).unwrap();
        assert!(lambda_partition(&[crit], -1.0).is_err());
    }

    fn config(r: Reflection) -> Conjugation {
        let poles = vec![
            BasePole::on_ray(0.6, C64::new(1.0, 0.0), PoleKind::Type1).unwrap(),
            BasePole::on_ray(2.1, C64::new(0.5, 0.0), PoleKind::Type1).unwrap(),
            BasePole::on_ray(0.8, C64::from_polar(1.0, PI / 3.0), PoleKind::Type2).unwrap(),
            BasePole::on_ray(1.7, C64::from_polar(2.0, -PI / 3.0), PoleKind::Type2).unwrap(),
        ];
        Conjugation::new(r, poles, phase_geometry(-1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn product_identity_and_f1_jump() {
        let c = config(synthetic(0.5));
        for k in 0..30 {
            let z = C64::from_polar(0.2 + 0.13 * k as f64, 0.77 * k as f64 + 0.05);
            let f = c.t_and_f(z, None).unwrap();
            assert!((f.f1 * f.f2 * f.f3 - 1.0).norm() < 1e-10);
        }
        for &s in &[-2.7, 1.4, 3.3] {
            let z = C64::new(s, 0.0);
            let p = c.t_and_f(z, Some(Side::Plus)).unwrap();
            let m = c.t_and_f(z, Some(Side::Minus)).unwrap();
            let want = 1.0 - c.reflection.eval(s).norm_sqr();
            assert!((p.f1 / m.f1 - want).norm() < 1e-6);
        }
    }

    #[test]
    fn f1_zeros_and_poles_follow_definition() {
        let c = config(Reflection::Zero);
        let w = omega();
        let x = c.poles[0].xi;
        let small = |z: C64| c.t_and_f(z, None).unwrap().f1.norm();
        let eps = C64::new(1e-7, 0.0);
        assert!(small(x.conj() + eps) < 1e-5);
        assert!(small(w * x + eps) < 1e-5);
        assert!(small(x + eps) > 1e5);
        assert!(small(w * x.conj() + eps) > 1e5);
        assert!(c.t_and_f(x, None).is_err());
    }

    #[test]
    fn f3_taylor_data() {
        let c = config(Reflection::Zero);
        let (f0, f1) = c.f3_taylor().unwrap();
        assert!((f0 - 1.0).norm() < 1e-14);
        assert_eq!(f1, C64::new(0.0, 0.0));
        let h = 1e-5;
        let lim = c.t_and_f(C64::new(h, h), None).unwrap().f3;
        assert!((lim - f0).norm() < 1e-4);
        let c = Conjugation::new(synthetic(0.5), vec![], phase_geometry(-1.0, 1.0).unwrap()).unwrap();
        let (f0, f1) = c.f3_taylor().unwrap();
        assert_eq!(f0, C64::new(1.0, 0.0));
        assert!(f1.re < 0.0 && f1.im == 0.0);
    }

    #[test]
    fn f12_is_unimodular() {
        let c = config(synthetic(0.5));
        for j in 0..2 {
            let v = c.f12_at_phase_point(j).unwrap();
            assert!((v.norm() - 1.0).abs() < 1e-8);
        }
        let c = Conjugation::new(Reflection::Zero, vec![], phase_geometry(-1.0, 1.0).unwrap()).unwrap();
        assert!((c.f12_at_phase_point(0).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn f12_mirror_symmetry_without_poles() {
        let c = Conjugation::new(even(0.5), vec![], phase_geometry(-1.0, 2.0).unwrap()).unwrap();
        let a = c.f12_at_phase_point(0).unwrap();
        let b = c.f12_at_phase_point(1).unwrap();
        assert!((a - b.conj()).norm() < 1e-8);
    }

    #[test]
    fn beta_holder() {
        let c = Conjugation::new(synthetic(0.5), vec![], phase_geometry(-1.0, 1.0).unwrap()).unwrap();
        let p = 1.0;
        let b0 = c.beta(0, C64::new(p, 0.0)).unwrap();
        assert!(b0.im.abs() < 1e-12);
        let mut cmax: f64 = 0.0;
        for &phi in &[-0.4, 0.0, 0.4] {
            for k in 1..8 {
                let s = 0.5f64.powi(k);
                let z = C64::new(p, 0.0) + C64::from_polar(s, phi);
                let d = (c.beta(0, z).unwrap() - b0).norm();
                cmax = cmax.max(d / s.sqrt());
            }
        }
        assert!(cmax < 2.0, "fitted constant {cmax}");
    }

    #[test]
    fn shifted_constants() {
        let poles = vec![BasePole::on_ray(0.7, C64::new(1.0, 0.0), PoleKind::Type1).unwrap()];
        let g = phase_geometry(-1.0, 1.0).unwrap();
        let c = Conjugation::new(Reflection::Zero, poles.clone(), g.clone()).unwrap();
        assert_eq!(c.shifted_norming_constants().unwrap()[0], poles[0].c);
        let c = Conjugation::new(synthetic(0.5), poles.clone(), g.clone()).unwrap();
        let a = c.shifted_norming_constants().unwrap()[0];
        let b = c.shifted_via_delta().unwrap()[0];
        assert!((a.norm() - b.norm()).abs() < 1e-7);
        assert!((a - b).norm() < 1e-7);
        // log(1 - |r|^2) scales linearly for small r, so the log shift does too
        let s1 = Conjugation::new(synthetic(0.01), poles.clone(), g.clone()).unwrap();
        let s2 = Conjugation::new(synthetic(0.02), poles, g).unwrap();
        let l1 = (s1.shifted_norming_constants().unwrap()[0] / C64::new(1.0, 0.0)).ln().norm();
        let l2 = (s2.shifted_norming_constants().unwrap()[0] / C64::new(1.0, 0.0)).ln().norm();
        assert!((l2 / l1 - 4.0).abs() < 1e-3);
    }
}
