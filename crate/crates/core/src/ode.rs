//! Classical fixed-step Runge–Kutta integration.

use crate::norms::Vector;

/// One RK4 step of `y' = f(t, y)` with step `h` (which may be negative).
pub fn rk4_step<F, E>(f: &mut F, t: f64, y: &Vector, h: f64) -> Result<Vector, E>
where
    F: FnMut(f64, &Vector) -> Result<Vector, E>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &(y + &k1 * (0.5 * h)))?;
    let k3 = f(t + 0.5 * h, &(y + &k2 * (0.5 * h)))?;
    let k4 = f(t + h, &(y + &k3 * h))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Integrates from `t0` to `t1` in `steps` equal steps, returning every state
/// including the initial one.
pub fn rk4_fixed<F, E>(mut f: F, t0: f64, t1: f64, y0: Vector, steps: usize) -> Result<Vec<(f64, Vector)>, E>
where
    F: FnMut(f64, &Vector) -> Result<Vector, E>,
{
    let steps = steps.max(1);
    let h = (t1 - t0) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = y0;
    out.push((t0, y.clone()));
    for i in 0..steps {
        let t = t0 + h * i as f64;
        y = rk4_step(&mut f, t, &y, h)?;
        let t_next = if i + 1 == steps { t1 } else { t0 + h * (i + 1) as f64 };
        out.push((t_next, y.clone()));
    }
    Ok(out)
}
