//! Parabolic cylinder model at the phase points, the correction matrices
//! `A_0`, `A_1`, the corrections `g`, `f`, and the long-time asymptotic
//! formulas in regions I and II.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::conjugation::Conjugation;
use crate::error::{domain, validation, OvError, Result};
use crate::linalg::{col_sum, inverse, Mat3};
use crate::soliton::{default_step, richardson, solve_orbit, u_of_y_orbit, OuterSolution, ResidueCoefficients};
use crate::special::gamma;
use crate::spectral::{
    expand_orbit, phase_geometry, PhaseGeometry, Region, ScatteringData,
    SymmetryConstants, SQRT3,
};

/// Parabolic cylinder data for one value of `r_0`.
#[derive(Clone, Copy, Debug)]
pub struct PcData {
    pub r0: C64,
    pub nu: f64,
    pub beta12: C64,
    pub beta21: C64,
    pub m1pc: Mat3,
}

/// `beta_12`, `beta_21` and `M_1^pc` for `0 <= |r0| < 1`.
///
/// `beta_12 beta_21 = -nu` for these formulas.
pub fn pc_coefficients(r0: C64) -> Result<PcData> {
    let a = r0.norm_sqr();
    if !(a < 1.0) {
        return domain(format!("|r0| = {} must be < 1", a.sqrt()));
    }
    if a == 0.0 {
        let z = C64::new(0.0, 0.0);
        return Ok(PcData { r0, nu: 0.0, beta12: z, beta21: z, m1pc: Mat3::zeros() });
    }
    let nu = -(-a).ln_1p() / (2.0 * PI);
    let s = (2.0 * PI).sqrt() * (-PI * nu / 2.0).exp();
    let i = C64::new(0.0, 1.0);
    let beta12 = s * C64::from_polar(1.0, PI / 4.0) / (r0 * gamma(C64::new(0.0, -nu)));
    let beta21 = -s * C64::from_polar(1.0, -PI / 4.0) / (r0.conj() * gamma(C64::new(0.0, nu)));
    let mut m1pc = Mat3::zeros();
    m1pc[(0, 1)] = -i * beta12;
    m1pc[(1, 0)] = i * beta21;
    Ok(PcData { r0, nu, beta12, beta21, m1pc })
}

/// `c_{nj} = 2 sqrt3 / kappa_{nj}^3`.
pub fn c_nj(kappa_nj: C64) -> C64 {
    2.0 * SQRT3 / kappa_nj.powi(3)
}

/// `r_0` at `kappa_{0j}`:
/// `-conj(r(kappa)) F12^0^{-1} e^{-2 i nu log sqrt(c t)} (8 sqrt3 t/kappa)^{-i nu}`,
/// with `c` and `kappa` taken by modulus so every factor but `r` is a phase.
pub fn r0_at(conj: &Conjugation, j: usize, t: f64) -> Result<C64> {
    let k = match conj.geometry.kappa {
        Some(k) if conj.geometry.region == Region::I => k,
        _ => return domain("r0 is defined in region I only"),
    };
    if !(t > 0.0) {
        return domain("r0 needs t > 0");
    }
    let p = if j == 0 { k } else { -k };
    let r = conj.reflection.eval(p);
    if r.norm() == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let nu = conj.nu(p)?;
    let g0 = conj.f12_at_phase_point(j)?;
    let c = 2.0 * SQRT3 / k.powi(3);
    let phase = -2.0 * nu * (c * t).sqrt().ln() - nu * (8.0 * SQRT3 * t / k).ln();
    Ok(-r.conj() / g0 * C64::from_polar(1.0, phase))
}

/// `M_1^pc` at `kappa_{nj}` from the value at `kappa_{0j}`.
pub fn m1pc_rotated(m: &Mat3, n: usize) -> Mat3 {
    let g = SymmetryConstants::new();
    let g4 = g.gamma4;
    let g4i = g4.transpose();
    match n % 3 {
        0 => *m,
        1 => g4i * m * g4,
        _ => g4 * m * g4i,
    }
}

/// `A_k = sum_{n, j} M(kappa_nj) M_1^pc(kappa_nj) M(kappa_nj)^{-1} / (sqrt(c_nj) kappa_nj^k)`
/// over the six phase points.
pub fn a_matrices(
    outer: &ResidueCoefficients,
    geometry: &PhaseGeometry,
    pc: &[PcData; 2],
) -> Result<(Mat3, Mat3)> {
    if geometry.region != Region::I {
        return domain("A_0, A_1 are defined in region I only");
    }
    let mut a0 = Mat3::zeros();
    let mut a1 = Mat3::zeros();
    for n in 0..3 {
        for j in 0..2 {
            let p = geometry.point(n, j);
            let m1 = m1pc_rotated(&pc[j].m1pc, n);
            if m1 == Mat3::zeros() {
                continue;
            }
            let m = outer.eval_msol(p)?;
            let mi = inverse(&m).map_err(|_| {
                OvError::Numerical(format!("M^out is singular at the phase point {p}"))
            })?;
            let term = m * m1 * mi / c_nj(p).sqrt();
            a0 += term;
            a1 += term / p;
        }
    }
    Ok((a0, a1))
}

/// `g = F_3^1/F_3^0 + sum_j [M1]_{j3} / sum_j [M0]_{j3}`.
pub fn g_correction(outer: &OuterSolution, f3: (C64, C64)) -> Result<f64> {
    let den = col_sum(&outer.m0, 2);
    if den.norm() < 1e-300 {
        return domain("g: vanishing denominator");
    }
    let v = f3.1 / f3.0 + col_sum(&outer.m1, 2) / den;
    if v.im.abs() > 1e-9 * v.re.abs().max(1.0) {
        return Err(OvError::Numerical(format!("g has imaginary part {:e}", v.im)));
    }
    Ok(v.re)
}

/// `f = F_3^1/F_3^0 + sum_j [A_1 M0]_{j3}/sum_j [M0]_{j3} + sum_j [A_0 M1]_{j3}/sum_j [M0]_{j3}`.
pub fn f_correction(outer: &OuterSolution, f3: (C64, C64), a0: &Mat3, a1: &Mat3) -> Result<C64> {
    let den = col_sum(&outer.m0, 2);
    if den.norm() < 1e-300 {
        return domain("f: vanishing denominator");
    }
    Ok(f3.1 / f3.0 + col_sum(&(a1 * outer.m0), 2) / den + col_sum(&(a0 * outer.m1), 2) / den)
}

/// Tunables of [`asymptotic_solution`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AsymptoticOptions {
    /// Refuse `t < t_min`.
    pub t_min: f64,
}

impl Default for AsymptoticOptions {
    fn default() -> Self {
        AsymptoticOptions { t_min: 10.0 }
    }
}

/// Asymptotic `(x, u)` with the intermediate scalars.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticResult {
    pub y: f64,
    pub t: f64,
    pub u: f64,
    pub x: f64,
    pub region: Region,
    /// `t^-3/4` in region I, `t^-1` in region II.
    pub error_order: &'static str,
    pub g: f64,
    /// `(Re, Im)` of `f`; region I only.
    pub f: Option<(f64, f64)>,
    pub f_t: Option<f64>,
    pub f3_0: (f64, f64),
    pub f3_1: (f64, f64),
    /// `nu(kappa)`, `nu(-kappa)`; region I only.
    pub nu_phase: Option<(f64, f64)>,
    /// Shifted constants of the base poles.
    pub c_hat: Vec<(f64, f64)>,
}

/// Everything that depends on `(y, t)` at fixed `y`.
struct Pieces {
    conj: Conjugation,
    coeffs: ResidueCoefficients,
    outer: OuterSolution,
    f3: (C64, C64),
    c_hat: Vec<C64>,
}

fn pieces(data: &ScatteringData, y: f64, t: f64) -> Result<Pieces> {
    let geometry = phase_geometry(y, t)?;
    let conj = Conjugation::new(data.reflection.clone(), data.poles.clone(), geometry)?;
    let shifted = conj.shifted_poles()?;
    let c_hat = shifted.iter().map(|p| p.c).collect();
    let coeffs = solve_orbit(expand_orbit(&shifted)?, y, t)?;
    let outer = coeffs.outer_taylor();
    let f3 = conj.f3_taylor()?;
    Ok(Pieces { conj, coeffs, outer, f3, c_hat })
}

fn f_value(data: &ScatteringData, y: f64, t: f64) -> Result<(C64, Pieces)> {
    let p = pieces(data, y, t)?;
    if data.reflection.is_zero() {
        return Ok((p.f3.1 / p.f3.0, p));
    }
    let pc = [pc_coefficients(r0_at(&p.conj, 0, t)?)?, pc_coefficients(r0_at(&p.conj, 1, t)?)?];
    let (a0, a1) = a_matrices(&p.coeffs, &p.conj.geometry, &pc)?;
    Ok((f_correction(&p.outer, p.f3, &a0, &a1)?, p))
}

/// `f(y, t)` in region I.
pub fn f_at(data: &ScatteringData, y: f64, t: f64) -> Result<C64> {
    Ok(f_value(data, y, t)?.0)
}

/// The asymptotic formulas.
///
/// Region II: `u = u_sol(y, t; c_hat)`, `x = y + g`.
/// Region I: `u = u_sol + t^{-1/2} Re f_t`, `x = y + g + t^{-1/2} Re f`.
pub fn asymptotic_solution(
    data: &ScatteringData,
    y: f64,
    t: f64,
    opts: AsymptoticOptions,
) -> Result<AsymptoticResult> {
    if !(opts.t_min > 0.0) {
        return validation("t_min must be positive");
    }
    if !(t >= opts.t_min) {
        return Err(OvError::Gate(format!(
            "t = {t} is below T_min = {}; the asymptotic formulas are not applied",
            opts.t_min
        )));
    }
    let (f, p) = match phase_geometry(y, t)?.region {
        Region::I => {
            let (f, p) = f_value(data, y, t)?;
            (Some(f), p)
        }
        Region::II => (None, pieces(data, y, t)?),
    };
    let g = g_correction(&p.outer, p.f3)?;
    let u_sol = u_of_y_orbit(&p.coeffs.orbit, y, t, default_step(t))?;
    let region = p.conj.geometry.region;
    let (u, x, f_t, nu_phase) = match region {
        Region::II => (u_sol, y + g, None, None),
        Region::I => {
            let f = f.expect("region I computes f");
            let s = t.sqrt().recip();
            let f_t = if data.reflection.is_zero() {
                0.0
            } else {
                richardson(|tt| Ok(f_at(data, y, tt)?.re), t, default_step(t))?
            };
            let k = p.conj.geometry.kappa.expect("region I has kappa");
            let nus = (p.conj.nu(k)?, p.conj.nu(-k)?);
            (u_sol + s * f_t, y + g + s * f.re, Some(f_t), Some(nus))
        }
    };
    Ok(AsymptoticResult {
        y,
        t,
        u,
        x,
        region,
        error_order: match region {
            Region::I => "t^-3/4",
            Region::II => "t^-1",
        },
        g,
        f: f.map(|v| (v.re, v.im)),
        f_t,
        f3_0: (p.f3.0.re, p.f3.0.im),
        f3_1: (p.f3.1.re, p.f3.1.im),
        nu_phase,
        c_hat: p.c_hat.iter().map(|c| (c.re, c.im)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::conj;
    use crate::soliton::{u_of_y, x_at};
    use crate::spectral::{BasePole, PoleKind, Reflection, SampledReflection};

    fn refl(amp: f64) -> Reflection {
        Reflection::Sampled(
            SampledReflection::from_fn(14.0, 2801, |z| {
                C64::from_polar(amp * z * z * (-z * z / 4.0).exp(), 0.3 * z)
            })
            .unwrap(),
        )
    }

    #[test]
    fn beta_moduli() {
        for k in 0..40 {
            let nu = 1e-4 * (2.0f64 / 1e-4).powf(k as f64 / 39.0);
            let a = (-(-2.0 * PI * nu).exp_m1()).sqrt();
            let d = pc_coefficients(C64::from_polar(a, 0.3 * k as f64)).unwrap();
            // conditioning of nu in 1 - |r0|^2 grows like e^{2 pi nu}
            assert!((d.nu - nu).abs() < 1e-15 * (2.0 * PI * nu).exp() + 1e-13 * nu);
            assert!((d.beta12.norm() - d.nu.sqrt()).abs() < 1e-12);
            assert!((d.beta21.norm() - d.nu.sqrt()).abs() < 1e-12);
            let prod = d.beta12 * d.beta21;
            assert!((prod + d.nu).norm() < 1e-12 * d.nu.max(1.0));
        }
        let z = pc_coefficients(C64::new(0.0, 0.0)).unwrap();
        assert_eq!(z.m1pc, Mat3::zeros());
        let small = pc_coefficients(C64::new(1e-9, 0.0)).unwrap();
        assert!(small.m1pc.iter().all(|v| v.norm() < 1e-8));
        assert!(pc_coefficients(C64::new(1.0, 0.0)).is_err());
    }

    fn data(amp: f64) -> ScatteringData {
        ScatteringData::new(
            refl(amp),
            vec![
                BasePole::on_ray(0.7, C64::new(1.0, 0.0), PoleKind::Type1).unwrap(),
                BasePole::on_ray(1.6, C64::new(2.0, 0.0), PoleKind::Type1).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn r0_modulus() {
        let d = data(0.3);
        let g = phase_geometry(-50.0, 100.0).unwrap();
        let c = Conjugation::new(d.reflection.clone(), d.poles.clone(), g).unwrap();
        for j in 0..2 {
            let k = if j == 0 { 2f64.sqrt() } else { -(2f64.sqrt()) };
            let want = d.reflection.eval(k).norm();
            let a = r0_at(&c, j, 100.0).unwrap();
            let b = r0_at(&c, j, 400.0).unwrap();
            assert!((a.norm() - want).abs() < 1e-8);
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
        let z = Conjugation::new(Reflection::Zero, vec![], phase_geometry(-1.0, 1.0).unwrap()).unwrap();
        assert_eq!(r0_at(&z, 0, 10.0).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn a_matrices_structure() {
        let d = data(0.3);
        let (y, t) = (-50.0, 100.0);
        let g = phase_geometry(y, t).unwrap();
        let c = Conjugation::new(d.reflection.clone(), d.poles.clone(), g.clone()).unwrap();
        let pc = [
            pc_coefficients(r0_at(&c, 0, t).unwrap()).unwrap(),
            pc_coefficients(r0_at(&c, 1, t).unwrap()).unwrap(),
        ];
        let coeffs = solve_orbit(expand_orbit(&d.poles).unwrap(), y, t).unwrap();
        let (a0, a1) = a_matrices(&coeffs, &g, &pc).unwrap();
        // linear in M_1^pc
        let pc2 = pc.map(|p| PcData { m1pc: p.m1pc * C64::new(2.0, 0.0), ..p });
        let (b0, b1) = a_matrices(&coeffs, &g, &pc2).unwrap();
        assert!((b0 - a0 * C64::new(2.0, 0.0)).iter().all(|v| v.norm() < 1e-12));
        assert!((b1 - a1 * C64::new(2.0, 0.0)).iter().all(|v| v.norm() < 1e-12));
        // identity outer solution
        let empty = solve_orbit(vec![], y, t).unwrap();
        let (e0, _) = a_matrices(&empty, &g, &pc).unwrap();
        let mut want = Mat3::zeros();
        for n in 0..3 {
            for j in 0..2 {
                want += m1pc_rotated(&pc[j].m1pc, n) / c_nj(g.point(n, j)).sqrt();
            }
        }
        assert!((e0 - want).iter().all(|v| v.norm() < 1e-14));
        // without solitons the printed formulas give gamma1 * conj(A0) * gamma1 = A0^H
        let s = SymmetryConstants::new();
        let mirrored = s.gamma1 * conj(&e0) * s.gamma1;
        assert!((mirrored - e0.adjoint()).iter().all(|v| v.norm() < 1e-12));
        // vanish with r = 0
        let z = [pc_coefficients(C64::new(0.0, 0.0)).unwrap(); 2];
        let (z0, z1) = a_matrices(&coeffs, &g, &z).unwrap();
        assert_eq!(z0, Mat3::zeros());
        assert_eq!(z1, Mat3::zeros());
    }

    #[test]
    fn reflectionless_matches_soliton_engine() {
        let d = ScatteringData::reflectionless(data(0.1).poles).unwrap();
        for &(y, t) in &[(-30.0, 20.0), (-3.0, 12.0), (4.0, 15.0)] {
            let a = asymptotic_solution(&d, y, t, AsymptoticOptions::default()).unwrap();
            assert_eq!(a.x, x_at(&d, y, t).unwrap());
            assert_eq!(a.u, u_of_y(&d, y, t).unwrap());
        }
    }

    #[test]
    fn g_without_poles_is_f3_ratio() {
        let d = ScatteringData::new(refl(0.3), vec![]).unwrap();
        let (y, t) = (-20.0, 40.0);
        let a = asymptotic_solution(&d, y, t, AsymptoticOptions::default()).unwrap();
        assert!((a.g - a.f3_1.0).abs() < 1e-14);
        assert!(a.g < 0.0);
    }

    #[test]
    fn gate() {
        let d = ScatteringData::reflectionless(vec![]).unwrap();
        let e = asymptotic_solution(&d, -1.0, 5.0, AsymptoticOptions::default()).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        let ok = asymptotic_solution(&d, -1.0, 5.0, AsymptoticOptions { t_min: 1.0 });
        assert!(ok.is_ok());
    }

    #[test]
    fn correction_decay() {
        let d = data(0.3);
        let ratio = -0.5;
        let mut pts = Vec::new();
        for k in 0..6 {
            let t = 50.0 * 2f64.powf(k as f64 * 4.0 / 5.0);
            let f = f_at(&d, ratio * t, t).unwrap();
            pts.push((t.ln(), (f.norm() / t.sqrt()).ln()));
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope + 0.5).abs() < 0.1, "slope {slope}");
    }
}
