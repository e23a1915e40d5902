//! Derivative-free minimisers used by the likelihood fits.

/// Options for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Convergence tolerance on the spread of simplex function values.
    pub tol: f64,
    /// Restarts from the incumbent with a fresh simplex.
    pub restarts: usize,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-8,
            restarts: 3,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead simplex minimisation. Non-finite objective values are treated
/// as `+inf`, so constraints can be expressed by returning `f64::INFINITY`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let n = x0.len();
    if n == 0 {
        let value = eval(x0);
        return Minimum {
            x: vec![],
            value,
            evaluations: 1,
            converged: value.is_finite(),
        };
    }

    let mut best_x = x0.to_vec();
    let mut best_v = eval(x0);
    let mut evaluations = 1;
    let mut converged = false;

    for round in 0..=opts.restarts {
        let step = opts.initial_step / (1 << round) as f64;
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((best_x.clone(), best_v));
        for i in 0..n {
            let mut x = best_x.clone();
            let delta = if x[i].abs() > 1e-8 { step * x[i].abs().max(0.25) } else { step };
            x[i] += delta;
            let v = eval(&x);
            evaluations += 1;
            simplex.push((x, v));
        }

        let mut round_converged = false;
        for _ in 0..opts.max_iter {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let lo = simplex[0].1;
            let hi = simplex[n].1;
            if lo.is_finite() && (hi - lo).abs() <= opts.tol * (lo.abs() + opts.tol) {
                round_converged = true;
                break;
            }
            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (w - c))
                    .collect()
            };
            let xr = along(-1.0);
            let vr = eval(&xr);
            evaluations += 1;
            if vr < simplex[0].1 {
                let xe = along(-2.0);
                let ve = eval(&xe);
                evaluations += 1;
                simplex[n] = if ve < vr { (xe, ve) } else { (xr, vr) };
            } else if vr < simplex[n - 1].1 {
                simplex[n] = (xr, vr);
            } else {
                let (xc, vc) = if vr < simplex[n].1 {
                    let xc = along(-0.5);
                    let vc = eval(&xc);
                    (xc, vc)
                } else {
                    let xc = along(0.5);
                    let vc = eval(&xc);
                    (xc, vc)
                };
                evaluations += 1;
                if vc < simplex[n].1.min(vr) {
                    simplex[n] = (xc, vc);
                } else {
                    let x_best = simplex[0].0.clone();
                    for (x, v) in simplex.iter_mut().skip(1) {
                        for (xi, bi) in x.iter_mut().zip(&x_best) {
                            *xi = bi + 0.5 * (*xi - bi);
                        }
                        *v = eval(x);
                        evaluations += 1;
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let improved = simplex[0].1 < best_v - opts.tol * (best_v.abs() + opts.tol);
        if simplex[0].1 <= best_v {
            best_x = simplex[0].0.clone();
            best_v = simplex[0].1;
        }
        converged = round_converged;
        if round > 0 && !improved {
            break;
        }
    }

    Minimum {
        x: best_x,
        value: best_v,
        evaluations,
        converged,
    }
}

/// Golden-section search for a minimum of a unimodal function on `[lo, hi]`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let m = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            NelderMeadOptions {
                max_iter: 2000,
                tol: 1e-14,
                ..Default::default()
            },
        );
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn respects_infinite_barrier() {
        let m = nelder_mead(
            |x| if x[0] < 0.5 { f64::INFINITY } else { (x[0] - 0.2).powi(2) },
            &[1.0],
            NelderMeadOptions::default(),
        );
        assert!(m.x[0] >= 0.5 && m.x[0] < 0.51, "{:?}", m.x);
    }

    #[test]
    fn golden() {
        let (x, _) = golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
    }
}
