//! Adaptive Dormand-Prince integration for complex systems.

use num_complex::Complex64 as C64;

use crate::error::{numerical, Result};

/// Step-size control for [`dopri5`].
#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-11, atol: 1e-13, h0: 1e-2, max_steps: 2_000_000 }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..y.len() {
        let mut s = C64::new(0.0, 0.0);
        for (c, k) in terms {
            s += k[i] * *c;
        }
        out[i] = y[i] + s * h;
    }
}

/// Dormand-Prince 5(4) from `t0` to `t1` (either direction). `f(t, y, dy)`.
pub fn dopri5<F>(mut f: F, t0: f64, t1: f64, y0: &[C64], opts: OdeOptions) -> Result<Vec<C64>>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut y = y0.to_vec();
    if span == 0.0 {
        return Ok(y);
    }
    let mut t = t0;
    let mut h = opts.h0.min(span);
    let z = C64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![z; n], vec![z; n], vec![z; n], vec![z; n], vec![z; n], vec![z; n], vec![z; n]);
    let mut tmp = vec![z; n];
    let mut ynew = vec![z; n];
    f(t, &y, &mut k1);
    let mut steps = 0;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return numerical("ODE integration exceeded the step limit");
        }
        let rest = (t1 - t).abs();
        if h > rest {
            h = rest;
        }
        let hs = h * dir;
        axpy(&mut tmp, &y, hs, &[(A21, &k1)]);
        f(t + hs / 5.0, &tmp, &mut k2);
        axpy(&mut tmp, &y, hs, &[(A31, &k1), (A32, &k2)]);
        f(t + 0.3 * hs, &tmp, &mut k3);
        axpy(&mut tmp, &y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f(t + 0.8 * hs, &tmp, &mut k4);
        axpy(&mut tmp, &y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        f(t + 8.0 / 9.0 * hs, &tmp, &mut k5);
        axpy(&mut tmp, &y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        f(t + hs, &tmp, &mut k6);
        axpy(&mut ynew, &y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        f(t + hs, &ynew, &mut k7);
        let mut err = 0.0f64;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                * hs;
            let sc = opts.atol + opts.rtol * y[i].norm().max(ynew[i].norm());
            err = err.max(e.norm() / sc);
        }
        if !err.is_finite() {
            h *= 0.2;
            if h < 1e-14 * span {
                return numerical("ODE integration produced a non-finite value");
            }
            continue;
        }
        if err <= 1.0 {
            t += hs;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).min(5.0) };
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            if h < 1e-14 * span {
                return numerical("ODE step size underflow");
            }
        }
    }
    Ok(y)
}
