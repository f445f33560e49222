//! Least-squares fits used by the dynamical and asymptotic experiments.

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};

/// `y(t) = amplitude * exp(-decay t) * sin^2(rate t) + drift * t`.
///
/// The linear term absorbs slow heating of the receiving mode, which would
/// otherwise pull the fitted rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RabiFit {
    pub rate: f64,
    pub decay: f64,
    pub amplitude: f64,
    pub drift: f64,
    pub rms_residual: f64,
}

impl RabiFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (-self.decay * t).exp() * (self.rate * t).sin().powi(2) + self.drift * t
    }
}

fn rabi_model(p: &Vector4<f64>, t: f64) -> (f64, Vector4<f64>) {
    let (a, w, g, b) = (p[0], p[1], p[2], p[3]);
    let env = (-g * t).exp();
    let s = (w * t).sin();
    let osc = a * env * s * s;
    let grad = Vector4::new(env * s * s, a * env * (2.0 * w * t).sin() * t, -t * osc, t);
    (osc + b * t, grad)
}

fn initial_rate(ts: &[f64], ys: &[f64]) -> Option<f64> {
    let (imax, &ymax) = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(ymax > 0.0) {
        return None;
    }
    let last = *ys.last()?;
    if imax + 1 < ys.len() && last < 0.9 * ymax && ts[imax] > 0.0 {
        Some(std::f64::consts::FRAC_PI_2 / ts[imax])
    } else {
        // rising over the whole window: invert sin^2 at the end point
        let t_end = *ts.last()?;
        let frac = (last / ymax.max(1.0)).clamp(1e-12, 1.0);
        Some(frac.sqrt().asin() / t_end)
    }
}

/// Levenberg-Marquardt fit of a damped Rabi curve.
pub fn fit_damped_rabi(ts: &[f64], ys: &[f64]) -> Result<RabiFit> {
    if ts.len() != ys.len() || ts.len() < 4 {
        return Err(Error::FitFailed(format!(
            "need at least 4 matching samples, got {} and {}",
            ts.len(),
            ys.len()
        )));
    }
    let w0 = initial_rate(ts, ys).ok_or_else(|| Error::FitFailed("no signal to fit".into()))?;
    let amp0 = ys.iter().copied().fold(0.0, f64::max).max(1.0);
    let cost = |p: &Vector4<f64>| -> f64 {
        ts.iter()
            .zip(ys)
            .map(|(&t, &y)| (rabi_model(p, t).0 - y).powi(2))
            .sum()
    };
    let mut p = Vector4::new(amp0, w0, 0.0, 0.0);
    let mut c = cost(&p);
    let mut lambda = 1e-3;
    for _ in 0..500 {
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for (&t, &y) in ts.iter().zip(ys) {
            let (f, g) = rabi_model(&p, t);
            jtj += g * g.transpose();
            jtr += g * (y - f);
        }
        let mut improved = false;
        for _ in 0..40 {
            let mut m = jtj;
            for i in 0..4 {
                m[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(step) = m.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let ct = cost(&trial);
            if ct < c {
                let rel = (c - ct) / c.max(f64::MIN_POSITIVE);
                p = trial;
                c = ct;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel < 1e-15 {
                    return finish(p, c, ts.len());
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    finish(p, c, ts.len())
}

fn finish(p: Vector4<f64>, cost: f64, n: usize) -> Result<RabiFit> {
    if !p.iter().all(|x| x.is_finite()) {
        return Err(Error::FitFailed("non-finite parameters".into()));
    }
    Ok(RabiFit {
        amplitude: p[0],
        rate: p[1].abs(),
        decay: p[2],
        drift: p[3],
        rms_residual: (cost / n as f64).sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% interval on the slope.
    pub ci_half_width: f64,
    pub points: usize,
}

/// Ordinary least squares of `ln y` against `ln x`.
///
/// The residual variance is floored at the rounding level of the data, so
/// an exact power law still reports an interval that widens as the fit
/// window narrows.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::FitFailed("need at least 3 matching samples".into()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::FitFailed("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::FitFailed("degenerate abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let scale = ly.iter().fold(0.0f64, |m, y| m.max(y.abs())).max(1.0);
    let floor = (f64::EPSILON * scale).powi(2);
    let var = (ss / (n - 2.0)).max(floor);
    Ok(SlopeFit {
        slope,
        intercept,
        ci_half_width: 1.96 * (var / sxx).sqrt(),
        points: xs.len(),
    })
}
