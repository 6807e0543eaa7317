//! Embedded Dormand-Prince 5(4) integrator with adaptive step control.
//!
//! The pulse-train pump makes the drift discontinuous, so callers split the
//! integration range at pump breakpoints via [`integrate_segmented`]; the
//! stepper itself never steps across a segment boundary.

use crate::Error;

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
const E1: f64 = B1 - 5179.0 / 57600.0;
const E3: f64 = B3 - 7571.0 / 16695.0;
const E4: f64 = B4 - 393.0 / 640.0;
const E5: f64 = B5 + 92097.0 / 339200.0;
const E6: f64 = B6 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

/// Integrate dy/dt = f(t, y) from t0 to t1 in place.
pub fn integrate<const N: usize, F>(
    f: &F,
    t0: f64,
    t1: f64,
    y: &mut [f64; N],
    rtol: f64,
    atol: f64,
) -> Result<(), Error>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if t1 <= t0 {
        return Ok(());
    }
    let span = t1 - t0;
    let mut t = t0;
    let mut h = (span / 100.0).min(0.1);
    let mut k1 = f(t, y);
    let mut rejected_in_a_row = 0u32;
    loop {
        if t >= t1 {
            return Ok(());
        }
        h = h.min(t1 - t);
        // remaining interval below rounding resolution: nothing left to do
        if h <= 4.0 * f64::EPSILON * t.abs().max(span) {
            return Ok(());
        }
        let stage = |c: &[(f64, &[f64; N])]| {
            let mut yt = *y;
            for i in 0..N {
                for (a, k) in c {
                    yt[i] += h * a * k[i];
                }
            }
            yt
        };
        let k2 = f(t + C2 * h, &stage(&[(A21, &k1)]));
        let k3 = f(t + C3 * h, &stage(&[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &stage(&[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &stage(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &stage(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let mut y_new = *y;
        for i in 0..N {
            y_new[i] += h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        let k7 = f(t + h, &y_new);
        let mut err_norm = 0.0f64;
        for i in 0..N {
            let err = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = atol + rtol * y[i].abs().max(y_new[i].abs());
            err_norm += (err / scale) * (err / scale);
        }
        err_norm = (err_norm / N as f64).sqrt();
        if !err_norm.is_finite() {
            return Err(Error::Solver {
                what: "ode step produced non-finite error estimate",
                residual: err_norm,
            });
        }
        if err_norm <= 1.0 {
            t += h;
            *y = y_new;
            k1 = k7; // FSAL
            rejected_in_a_row = 0;
            let factor = if err_norm == 0.0 {
                5.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            rejected_in_a_row += 1;
            if rejected_in_a_row > 60 {
                return Err(Error::Solver {
                    what: "ode step size underflow",
                    residual: err_norm,
                });
            }
            h *= (0.9 * err_norm.powf(-0.2)).clamp(0.1, 0.9);
            if h < 1e-14 * span {
                return Err(Error::Solver {
                    what: "ode step size underflow",
                    residual: err_norm,
                });
            }
        }
    }
}

/// Integrate from t0 to t1, restarting the stepper at each interior
/// breakpoint so that drift discontinuities align with step endpoints.
pub fn integrate_segmented<const N: usize, F>(
    f: &F,
    t0: f64,
    t1: f64,
    breaks: &[f64],
    y: &mut [f64; N],
    rtol: f64,
    atol: f64,
) -> Result<(), Error>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut edges: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x > t0 && x < t1)
        .collect();
    edges.push(t1);
    let mut t = t0;
    for edge in edges {
        integrate(f, t, edge, y, rtol, atol)?;
        t = edge;
    }
    Ok(())
}
