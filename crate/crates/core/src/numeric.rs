//! Small numerical kernels shared by the physics modules: bracketed root
//! refinement, composite Simpson quadrature, least-squares lines and 2x2
//! linear solves.

use crate::{Error, Result};

/// Composite Simpson weights for `nodes` equally spaced samples with spacing
/// `step`. `nodes` must be odd and at least 3.
pub fn simpson_weights(nodes: usize, step: f64) -> Result<Vec<f64>> {
    if nodes < 3 || nodes.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "Simpson quadrature needs an odd node count >= 3, got {nodes}"
        )));
    }
    let last = nodes - 1;
    Ok((0..nodes)
        .map(|i| {
            let w = if i == 0 || i == last {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * step / 3.0
        })
        .collect())
}

/// Integrates equally spaced samples with composite Simpson's rule.
pub fn simpson(values: &[f64], step: f64) -> Result<f64> {
    let weights = simpson_weights(values.len(), step)?;
    Ok(weights.iter().zip(values).map(|(w, v)| w * v).sum())
}

/// Scans `[lo, hi]` with a uniform step anchored at `hi` and returns every
/// sub-interval across which `f` changes sign (or hits zero exactly at the
/// left node). Intervals are returned in ascending order.
pub fn scan_brackets<F>(mut f: F, lo: f64, hi: f64, step: f64) -> Result<Vec<(f64, f64)>>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(hi > lo) || !(step > 0.0) {
        return Err(Error::InvalidInput(format!(
            "bad scan interval [{lo}, {hi}] step {step}"
        )));
    }
    let mut xs = Vec::new();
    let mut x = hi;
    while x > lo {
        xs.push(x);
        x = hi - step * xs.len() as f64;
    }
    xs.push(lo);
    xs.reverse();

    let values = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let mut brackets = Vec::new();
    for i in 0..xs.len() - 1 {
        let (fa, fb) = (values[i], values[i + 1]);
        if fa == 0.0 || fa.signum() != fb.signum() && fb != 0.0 {
            brackets.push((xs[i], xs[i + 1]));
        }
    }
    if values[xs.len() - 1] == 0.0 {
        let n = xs.len();
        brackets.push((xs[n - 2], xs[n - 1]));
    }
    Ok(brackets)
}

/// Refines a root of `f` inside a sign-changing bracket: bisection first
/// shrinks the bracket, then safeguarded secant steps converge to `xtol`.
/// Secant iterates that leave the current bracket fall back to bisection.
pub fn refine_root<F>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut flo = f(lo)?;
    let mut fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::InvalidInput(format!(
            "interval [{lo}, {hi}] does not bracket a root"
        )));
    }

    // Bisection down to a thousandth of the initial width.
    let target = (hi - lo) * 1e-3;
    while hi - lo > target {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }

    let (mut x0, mut f0) = (lo, flo);
    let (mut x1, mut f1) = (hi, fhi);
    for _ in 0..200 {
        let mut x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !x2.is_finite() || x2 <= lo || x2 >= hi {
            x2 = 0.5 * (lo + hi);
        }
        let f2 = f(x2)?;
        if f2 == 0.0 {
            return Ok(x2);
        }
        if f2.signum() == flo.signum() {
            lo = x2;
            flo = f2;
        } else {
            hi = x2;
        }
        let step = (x2 - x1).abs();
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        if step < xtol || hi - lo < xtol {
            return Ok(x2);
        }
    }
    Err(Error::NoConvergence)
}

/// Ordinary least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub rms_residual: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidInput(
            "linear fit needs at least two paired samples".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) * n {
        return Err(Error::DegenerateFit);
    }
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - slope * xi - intercept).powi(2))
        .sum();
    Ok(LinearFit {
        slope,
        intercept,
        rms_residual: (ss / n).sqrt(),
    })
}

/// Solves `m * x = rhs` for a 2x2 matrix given row-major. Returns the
/// solution and the determinant; `None` when the determinant vanishes
/// relative to the matrix scale.
pub fn solve_2x2(m: [[f64; 2]; 2], rhs: [f64; 2]) -> (Option<[f64; 2]>, f64) {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 || det.abs() <= 1e-12 * scale * scale {
        return (None, det);
    }
    let x0 = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
    let x1 = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
    (Some([x0, x1]), det)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let step = 0.1;
        let xs: Vec<f64> = (0..21).map(|i| i as f64 * step).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x * x - 2.0 * x + 1.0).collect();
        let got = simpson(&ys, step).unwrap();
        let exact = 2.0_f64.powi(4) / 4.0 - 4.0 + 2.0;
        assert!((got - exact).abs() < 1e-12, "{got} vs {exact}");
    }

    #[test]
    fn simpson_rejects_even_node_count() {
        assert!(simpson(&[1.0, 2.0, 3.0, 4.0], 1.0).is_err());
    }

    #[test]
    fn refine_root_finds_cosine_zero() {
        let root = refine_root(|x| Ok(x.cos()), 1.0, 2.0, 1e-14).unwrap();
        assert!((root - std::f64::consts::FRAC_PI_2).abs() < 1e-13);
    }

    #[test]
    fn scan_brackets_locates_all_sign_changes() {
        let br = scan_brackets(|x| Ok((x - 1.3) * (x - 2.7)), 0.0, 4.0, 0.5).unwrap();
        assert_eq!(br.len(), 2);
        assert!(br[0].0 <= 1.3 && 1.3 <= br[0].1);
        assert!(br[1].0 <= 2.7 && 2.7 <= br[1].1);
    }

    #[test]
    fn linear_fit_recovers_line_and_flags_zero_variance() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| -0.7 * v + 2.0).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert!((fit.slope + 0.7).abs() < 1e-14);
        assert!((fit.intercept - 2.0).abs() < 1e-14);
        assert_eq!(
            linear_fit(&[2.0; 3], &[1.0, 2.0, 3.0]),
            Err(Error::DegenerateFit)
        );
    }

    #[test]
    fn singular_2x2_is_reported() {
        let (sol, _) = solve_2x2([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0]);
        assert!(sol.is_none());
        let (sol, det) = solve_2x2([[2.0, 1.0], [1.0, 3.0]], [3.0, 5.0]);
        assert_eq!(det, 5.0);
        let [a, b] = sol.unwrap();
        assert!((a - 0.8).abs() < 1e-15 && (b - 1.4).abs() < 1e-15);
    }
}
