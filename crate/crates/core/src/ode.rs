//! Adaptive Dormand–Prince 5(4) integration of small real systems.

use crate::error::{GrushinError, Result};

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Fifth-order weights equal the last row of A; these are the differences
// to the embedded fourth-order solution.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y′ = f(t, y)` from `t0` to `t1` (either direction) and
/// returns `y(t1)`. `h0` is the initial step magnitude.
pub fn dopri5<const N: usize>(
    f: impl FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t1: f64,
    h0: f64,
    tol: Tolerance,
) -> Result<[f64; N]> {
    dopri5_until(f, t0, y0, t1, h0, tol, |_| false).map(|(_, y, _)| y)
}

/// As [`dopri5`], but stops at the first accepted step where `stop(y)`
/// holds. Returns `(t, y, stopped)`.
pub fn dopri5_until<const N: usize>(
    mut f: impl FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t1: f64,
    h0: f64,
    tol: Tolerance,
    stop: impl Fn(&[f64; N]) -> bool,
) -> Result<(f64, [f64; N], bool)> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((t0, y0, false));
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = h0.abs().min(span.abs()).max(f64::EPSILON * span.abs());
    let mut k = [[0.0; N]; 7];
    k[0] = f(t, &y);
    for _ in 0..tol.max_steps {
        let remaining = (t1 - t) * dir;
        if remaining <= 0.0 {
            return Ok((t, y, false));
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = h * dir;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += hs * a * kj[i];
                    }
                }
            }
            k[s] = f(t + C[s] * hs, &ys);
        }
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            for i in 0..N {
                y_new[i] += hs * A[6][j] * kj[i];
            }
        }
        let mut err = 0.0f64;
        for i in 0..N {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let scale = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((hs * e / scale).abs());
        }
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            h *= 0.1;
            if h < 1e-15 * (t.abs() + 1.0) {
                return Err(GrushinError::numerical(
                    format!("ODE solution blew up near t = {t}"),
                    None,
                ));
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            y = y_new;
            // FSAL: the seventh stage is f at the accepted point.
            k[0] = k[6];
            if stop(&y) {
                return Ok((t, y, true));
            }
            let grow = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= grow;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h < 1e-15 * (t.abs() + 1.0) {
                return Err(GrushinError::numerical(
                    format!("ODE step size underflow near t = {t}"),
                    Some(err),
                ));
            }
        }
    }
    Err(GrushinError::numerical(
        format!("ODE integration exceeded {} steps before t = {t1}", tol.max_steps),
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y = dopri5(
            |_, y: &[f64; 1]| [-y[0]],
            0.0,
            [1.0],
            3.0,
            0.1,
            Tolerance::default(),
        )
        .unwrap();
        assert!((y[0] - (-3f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let y = dopri5(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            2.0,
            [2f64.sin(), 2f64.cos()],
            0.0,
            0.01,
            Tolerance::default(),
        )
        .unwrap();
        assert!(y[0].abs() < 1e-9);
        assert!((y[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stop_predicate_halts_early() {
        let (t, y, stopped) = dopri5_until(
            |_, y: &[f64; 1]| [y[0]],
            0.0,
            [1.0],
            100.0,
            0.1,
            Tolerance::default(),
            |y| y[0] > 1e6,
        )
        .unwrap();
        assert!(stopped && t < 20.0 && y[0] > 1e6);
    }

    #[test]
    fn blow_up_is_reported() {
        let r = dopri5(
            |_, y: &[f64; 1]| [y[0] * y[0]],
            0.0,
            [1.0],
            2.0,
            0.1,
            Tolerance::default(),
        );
        assert!(r.is_err());
    }
}
