//! Adaptive Gauss-Kronrod quadrature and Cauchy-type integrals.

use num_complex::Complex64 as C64;

use crate::error::{numerical, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-12, rel_tol: 1e-10, max_intervals: 4000 }
    }
}

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += s * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Globally adaptive 15-point Kronrod rule on `[a, b]`.
pub fn integrate<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<C64> {
    integrate_with_breaks(f, a, b, &[], opts)
}

/// As [`integrate`], with extra interior breakpoints.
pub fn integrate_with_breaks<F: Fn(f64) -> C64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<C64> {
    if a == b {
        return Ok(C64::new(0.0, 0.0));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.extend(inner);
    pts.push(hi);
    let mut segs: Vec<(f64, f64, C64, f64)> = Vec::new();
    for w in pts.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(&f, w[0], w[1]);
            segs.push((w[0], w[1], v, e));
        }
    }
    loop {
        let total: C64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if !total.re.is_finite() || !total.im.is_finite() {
            return numerical("quadrature produced a non-finite value");
        }
        if err <= opts.abs_tol.max(opts.rel_tol * total.norm()) {
            return Ok(total * sign);
        }
        if segs.len() >= opts.max_intervals {
            return numerical(format!(
                "quadrature did not converge on [{lo}, {hi}] (error estimate {err:e})"
            ));
        }
        let (imax, _) = segs
            .iter()
            .enumerate()
            .fold((0, -1.0), |m, (i, s)| if s.3 > m.1 { (i, s.3) } else { m });
        let (a0, b0, _, _) = segs.swap_remove(imax);
        let m = 0.5 * (a0 + b0);
        if !(m > a0 && m < b0) {
            return numerical("quadrature interval underflow");
        }
        let (v1, e1) = gk15(&f, a0, m);
        let (v2, e2) = gk15(&f, m, b0);
        segs.push((a0, m, v1, e1));
        segs.push((m, b0, v2, e2));
    }
}

/// Real-valued convenience wrapper.
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64> {
    Ok(integrate(|s| C64::new(f(s), 0.0), a, b, opts)?.re)
}

/// Which boundary value of a Cauchy integral to return for `z` on the
/// integration interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Limit from the upper half plane.
    Plus,
    /// Limit from the lower half plane.
    Minus,
    /// Principal value.
    Principal,
}

/// `int_a^b f(s)/(s - z) ds` for `z` anywhere in the plane.
///
/// The value `f(x0)`, `x0` the projection of `z` onto `[a, b]`, is subtracted
/// and its integral `log((b - z)/(a - z))` added back in closed form. For
/// real `z` inside `(a, b)` the boundary value selected by `side` is returned.
pub fn cauchy<F: Fn(f64) -> C64>(
    f: F,
    a: f64,
    b: f64,
    z: C64,
    side: Side,
    opts: QuadOptions,
) -> Result<C64> {
    let width = b - a;
    let dist = if z.re < a {
        (z - a).norm()
    } else if z.re > b {
        (z - b).norm()
    } else {
        z.im.abs()
    };
    if dist > 0.5 * width {
        return integrate(|s| f(s) / (s - z), a, b, opts);
    }
    let x0 = z.re.clamp(a, b);
    let f0 = f(x0);
    let on = z.im == 0.0 && z.re > a && z.re < b;
    let rem = integrate_with_breaks(
        |s| {
            let d = s - z;
            if d.norm() == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                (f(s) - f0) / d
            }
        },
        a,
        b,
        &[x0],
        opts,
    )?;
    let log_term = if on {
        let pv = ((b - z.re) / (z.re - a)).ln();
        let jump = match side {
            Side::Plus => C64::new(0.0, std::f64::consts::PI),
            Side::Minus => C64::new(0.0, -std::f64::consts::PI),
            Side::Principal => C64::new(0.0, 0.0),
        };
        C64::new(pv, 0.0) + jump
    } else {
        (b - z).ln() - (a - z).ln()
    };
    Ok(rem + f0 * log_term)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| C64::new(x * x * x - x, 2.0 * x), 0.0, 2.0, QuadOptions::default())
            .unwrap();
        assert!((v - C64::new(2.0, 4.0)).norm() < 1e-13);
    }

    #[test]
    fn oscillatory() {
        let v = integrate_real(|x| (20.0 * x).sin(), 0.0, 3.0, QuadOptions::default()).unwrap();
        let want = (1.0 - (60.0f64).cos()) / 20.0;
        assert!((v - want).abs() < 1e-11);
    }

    #[test]
    fn cauchy_plemelj() {
        let f = |s: f64| C64::new((-s * s).exp(), 0.0);
        let o = QuadOptions::default();
        let x = 0.3;
        let p = cauchy(f, -4.0, 4.0, C64::new(x, 0.0), Side::Plus, o).unwrap();
        let m = cauchy(f, -4.0, 4.0, C64::new(x, 0.0), Side::Minus, o).unwrap();
        let jump = p - m;
        assert!((jump - C64::new(0.0, 2.0 * std::f64::consts::PI * (-x * x).exp())).norm() < 1e-12);
        let near = cauchy(f, -4.0, 4.0, C64::new(x, 1e-9), Side::Principal, o).unwrap();
        assert!((near - p).norm() < 1e-7);
        let far = cauchy(f, -4.0, 4.0, C64::new(x, 3.0), Side::Principal, o).unwrap();
        let direct = integrate(|s| f(s) / (s - C64::new(x, 3.0)), -4.0, 4.0, o).unwrap();
        assert!((far - direct).norm() < 1e-12);
    }
}
