//! Bernstein-basis polynomial algebra.
//!
//! A polynomial of degree `n` on the unit interval is held as its `n+1`
//! control points. The representation has the properties the rest of the
//! pipeline leans on: endpoint interpolation (the curve starts at the first
//! control point and ends at the last), derivative coefficients are scaled
//! finite differences of the originals, the definite integral is the
//! coefficient mean, and the curve never leaves the convex hull of its
//! control points. One [`Spline`] is a day: one polynomial per hour with a
//! declared continuity depth across the knots (0 none, 1 value, 2 value and
//! first derivative).

use crate::linalg::{lu_factor, DMat, LinalgError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BernsteinError {
    #[error("basis index {k} out of range for degree {n}")]
    IndexOutOfRange { k: usize, n: usize },
    #[error("evaluation point {x} outside the unit interval")]
    PointOutOfRange { x: f64 },
    #[error("degree-0 polynomial has no derivative")]
    DegreeZero,
    #[error("continuity depth {depth} exceeds degree {degree}")]
    DepthExceedsDegree { depth: usize, degree: usize },
    #[error("hour {hour} has {got} samples, degree {degree} needs at least {need}")]
    TooFewSamples { hour: usize, got: usize, need: usize, degree: usize },
    #[error("hour {hour} sample abscissa {x} outside the unit interval")]
    SampleOutOfRange { hour: usize, x: f64 },
    #[error("rank-deficient fit (too few distinct sample abscissae): {0}")]
    RankDeficient(#[from] LinalgError),
    #[error("spline has no hours")]
    Empty,
}

/// Control points of one Bernstein polynomial on the unit interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlPoly {
    coeffs: Vec<f64>,
}

impl ControlPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a polynomial needs at least one control point");
        ControlPoly { coeffs }
    }

    pub fn constant(value: f64, degree: usize) -> Self {
        ControlPoly { coeffs: vec![value; degree + 1] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Evaluate at `x` in `[0,1]` by the de Casteljau recurrence.
    ///
    /// Panics if `x` is outside the unit interval.
    pub fn eval(&self, x: f64) -> f64 {
        assert!((0.0..=1.0).contains(&x), "evaluation point {x} outside [0,1]");
        let mut beta = self.coeffs.clone();
        let n = beta.len();
        for round in 1..n {
            for k in 0..n - round {
                beta[k] = beta[k] * (1.0 - x) + beta[k + 1] * x;
            }
        }
        beta[0]
    }

    /// Derivative polynomial: coefficients `n * (c[k+1] - c[k])`, degree `n-1`.
    pub fn derivative(&self) -> Result<ControlPoly, BernsteinError> {
        let n = self.degree();
        if n == 0 {
            return Err(BernsteinError::DegreeZero);
        }
        let coeffs = self
            .coeffs
            .windows(2)
            .map(|w| n as f64 * (w[1] - w[0]))
            .collect();
        Ok(ControlPoly { coeffs })
    }

    /// Definite integral over an interval of the given length in hours:
    /// `length * mean(coeffs)`.
    pub fn integral(&self, interval_length: f64) -> f64 {
        assert!(interval_length > 0.0, "interval length must be positive");
        let sum: f64 = self.coeffs.iter().sum();
        interval_length * sum / self.coeffs.len() as f64
    }

    /// Convex-hull bounds `(min, max)` of the control points; the curve
    /// stays inside them on the whole interval.
    pub fn hull_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &c in &self.coeffs {
            lo = lo.min(c);
            hi = hi.max(c);
        }
        (lo, hi)
    }
}

/// One Bernstein basis function `b_{k,n}(x) = C(n,k) x^k (1-x)^(n-k)`.
pub fn basis_eval(k: usize, n: usize, x: f64) -> Result<f64, BernsteinError> {
    if k > n {
        return Err(BernsteinError::IndexOutOfRange { k, n });
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(BernsteinError::PointOutOfRange { x });
    }
    Ok(binomial(n, k) * x.powi(k as i32) * (1.0 - x).powi((n - k) as i32))
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// A day of net-load or generation: `H` hourly polynomials plus the number
/// of endpoint conditions matched at each interior knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spline {
    pub hours: Vec<ControlPoly>,
    pub continuity_depth: usize,
}

impl Spline {
    pub fn len(&self) -> usize {
        self.hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hours.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.hours[0].degree()
    }

    /// Evaluate at absolute time `t` in `[0, H]` hours. Knots belong to the
    /// following hour; `t = H` evaluates the last hour at its right endpoint.
    pub fn eval_at(&self, t: f64) -> f64 {
        let (hour, x) = self.locate(t);
        self.hours[hour].eval(x)
    }

    /// Map absolute time to (hour index, local coordinate).
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let h_count = self.hours.len();
        assert!(
            t >= 0.0 && t <= h_count as f64,
            "time {t} outside the spline horizon of {h_count} hours"
        );
        let hour = (t.floor() as usize).min(h_count - 1);
        (hour, t - hour as f64)
    }

    /// Worst knot mismatch over the declared continuity depth.
    pub fn knot_error(&self) -> f64 {
        let mut worst = 0.0f64;
        let n = self.degree();
        for w in self.hours.windows(2) {
            let (a, b) = (w[0].coeffs(), w[1].coeffs());
            if self.continuity_depth >= 1 {
                worst = worst.max((a[n] - b[0]).abs());
            }
            if self.continuity_depth >= 2 {
                worst = worst.max(((a[n] - a[n - 1]) - (b[1] - b[0])).abs());
            }
        }
        worst
    }
}

/// A fitted spline together with the root-mean-square residual over the
/// samples it was fitted to.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplineFit {
    pub spline: Spline,
    pub rms_residual: f64,
}

/// Equality-constrained least squares over a whole day.
///
/// `samples[h]` holds `(time-fraction, value)` pairs for hour `h`; each hour
/// needs at least `n+1` of them. The squared residual is minimized jointly
/// over all hours subject to `depth` matching conditions at every interior
/// knot, by direct solve of the KKT system.
pub fn fit_spline(
    samples: &[Vec<(f64, f64)>],
    n: usize,
    depth: usize,
) -> Result<SplineFit, BernsteinError> {
    if samples.is_empty() {
        return Err(BernsteinError::Empty);
    }
    if depth > n {
        return Err(BernsteinError::DepthExceedsDegree { depth, degree: n });
    }
    let h_count = samples.len();
    let width = n + 1;
    for (h, hour) in samples.iter().enumerate() {
        if hour.len() < width {
            return Err(BernsteinError::TooFewSamples {
                hour: h,
                got: hour.len(),
                need: width,
                degree: n,
            });
        }
        for &(x, _) in hour {
            if !(0.0..=1.0).contains(&x) {
                return Err(BernsteinError::SampleOutOfRange { hour: h, x });
            }
        }
    }

    let nvar = h_count * width;
    let ncon = depth * h_count.saturating_sub(1);
    let dim = nvar + ncon;
    let mut kkt = DMat::zeros(dim, dim);
    let mut rhs = vec![0.0; dim];

    // Normal equations, block-diagonal per hour: 2 A^T A and 2 A^T y.
    let mut row = vec![0.0; width];
    for (h, hour) in samples.iter().enumerate() {
        let base = h * width;
        for &(x, y) in hour {
            for (k, rk) in row.iter_mut().enumerate() {
                *rk = basis_eval(k, n, x).expect("validated above");
            }
            for a in 0..width {
                rhs[base + a] += 2.0 * row[a] * y;
                for b in 0..width {
                    kkt.add_to(base + a, base + b, 2.0 * row[a] * row[b]);
                }
            }
        }
    }

    // Knot constraints, mirrored into both off-diagonal KKT blocks.
    let mut con = 0;
    for h in 0..h_count.saturating_sub(1) {
        let left = h * width;
        let right = (h + 1) * width;
        if depth >= 1 {
            let r = nvar + con;
            for (col, w) in [(left + n, 1.0), (right, -1.0)] {
                kkt.set(r, col, w);
                kkt.set(col, r, w);
            }
            con += 1;
        }
        if depth >= 2 {
            let r = nvar + con;
            for (col, w) in [
                (left + n, 1.0),
                (left + n - 1, -1.0),
                (right + 1, -1.0),
                (right, 1.0),
            ] {
                kkt.set(r, col, w);
                kkt.set(col, r, w);
            }
            con += 1;
        }
    }
    debug_assert_eq!(con, ncon);

    let solution = lu_factor(kkt, 1e-9)?.solve(&rhs)?;

    let hours: Vec<ControlPoly> = (0..h_count)
        .map(|h| ControlPoly::new(solution[h * width..(h + 1) * width].to_vec()))
        .collect();
    let spline = Spline { hours, continuity_depth: depth };

    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for (h, hour) in samples.iter().enumerate() {
        for &(x, y) in hour {
            let e = spline.hours[h].eval(x) - y;
            sum_sq += e * e;
            count += 1;
        }
    }
    Ok(SplineFit { spline, rms_residual: (sum_sq / count as f64).sqrt() })
}

/// Dense evaluation of a spline at multiples of `step` hours, from 0 to the
/// end of the horizon inclusive.
pub fn resample(spline: &Spline, step: f64) -> Vec<(f64, f64)> {
    assert!(step > 0.0, "step must be positive");
    let horizon = spline.len() as f64;
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let t = k as f64 * step;
        if t > horizon + 1e-9 {
            break;
        }
        let t = t.min(horizon);
        out.push((t, spline.eval_at(t)));
        k += 1;
    }
    out
}
