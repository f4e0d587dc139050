use std::io::Write;

use serde::Serialize;

use super::solver::{solve_lagrangian_from, LagrangianPoint, SolverConfig};
use crate::error::{Error, Result};
use crate::instance::{compute_d_bounds, Model};

/// Rate increases larger than this between sorted points are rejected.
pub const MONOTONE_TOL: f64 = 1e-7;
const KNOT_TOL: f64 = 1e-12;

/// Sampled rate-distortion curve with its lower convex envelope.
#[derive(Debug, Clone, Serialize)]
pub struct RDCurve {
    /// Ascending in distortion.
    pub points: Vec<LagrangianPoint>,
    pub d_min: f64,
    pub d_max: f64,
    /// Rate at `d_max`; zero unless no constant learner output is reachable.
    pub rate_floor: f64,
    /// Envelope knots `(d, R)`, ascending in `d`.
    pub envelope: Vec<(f64, f64)>,
}

/// `0` followed by 50 log-spaced values on `[1e-3, 1e4]`.
pub fn default_lambda_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    let n = 50;
    for i in 0..n {
        let e = -3.0 + 7.0 * i as f64 / (n - 1) as f64;
        g.push(10f64.powf(e));
    }
    g
}

pub fn sweep_lambda(model: &Model, grid: &[f64], config: &SolverConfig) -> Result<RDCurve> {
    if grid.is_empty() {
        return Err(Error::Domain("empty lambda grid".into()));
    }
    let mut lambdas = grid.to_vec();
    if lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(Error::Domain("lambda grid values must be finite and nonnegative".into()));
    }
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let bounds = compute_d_bounds(model)?;
    let mut points = Vec::with_capacity(lambdas.len());
    let mut warm: Option<Vec<Vec<f64>>> = None;
    for &l in &lambdas {
        let pt = solve_lagrangian_from(model, l, config, warm.as_deref()).map_err(|e| annotate(e, l))?;
        if l > 0.0 {
            warm = Some(pt.rows.clone());
        }
        points.push(pt);
    }
    let zero = if lambdas[0] == 0.0 {
        None
    } else {
        Some(solve_lagrangian_from(model, 0.0, config, None).map_err(|e| annotate(e, 0.0))?)
    };
    let right_end = zero.as_ref().unwrap_or(&points[0]);
    let d_max = right_end.avg_distortion;
    let rate_floor = right_end.rate;
    RDCurve::from_points(points, bounds.d_min.min(d_max), d_max, rate_floor)
}

fn annotate(e: Error, lambda: f64) -> Error {
    match e {
        Error::Convergence {
            iterations,
            last_gap,
            context,
        } => Error::Convergence {
            iterations,
            last_gap,
            context: format!("{context} (sweep at lambda {lambda})"),
        },
        other => other,
    }
}

impl RDCurve {
    /// Assemble a curve from solved points: sort, dedupe, check
    /// monotonicity and build the envelope.
    pub fn from_points(mut points: Vec<LagrangianPoint>, d_min: f64, d_max: f64, rate_floor: f64) -> Result<RDCurve> {
        points.sort_by(|a, b| a.avg_distortion.total_cmp(&b.avg_distortion).then(a.rate.total_cmp(&b.rate)));
        points.dedup_by(|b, a| (b.avg_distortion - a.avg_distortion).abs() <= KNOT_TOL);
        points.retain(|p| p.avg_distortion <= d_max + KNOT_TOL);
        for w in points.windows(2) {
            if w[1].rate > w[0].rate + MONOTONE_TOL {
                return Err(Error::Convergence {
                    iterations: 0,
                    last_gap: w[1].rate - w[0].rate,
                    context: format!(
                        "rate increases with distortion between lambda {} and lambda {}",
                        w[0].lambda, w[1].lambda
                    ),
                });
            }
        }
        let mut knots: Vec<(f64, f64)> = points.iter().map(|p| (p.avg_distortion, p.rate)).collect();
        if knots.last().is_none_or(|k| (k.0 - d_max).abs() > KNOT_TOL) {
            knots.push((d_max, rate_floor));
        }
        let envelope = lower_hull(&knots);
        Ok(RDCurve {
            points,
            d_min,
            d_max,
            rate_floor,
            envelope,
        })
    }

    pub fn max_rate(&self) -> f64 {
        self.envelope[0].1
    }

    fn check_range(&self, d: f64) -> Result<()> {
        let slack = KNOT_TOL * (1.0 + self.d_max.abs());
        if d.is_nan() || d < self.d_min - slack || d > self.d_max + slack {
            return Err(Error::Range(format!("d = {d} outside [{}, {}]", self.d_min, self.d_max)));
        }
        Ok(())
    }

    fn slopes(&self) -> Vec<f64> {
        self.envelope
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    /// `(segment index, is knot)` locating `d` on the envelope.
    fn locate(&self, d: f64) -> (usize, Option<usize>) {
        let e = &self.envelope;
        let scale = KNOT_TOL * (1.0 + d.abs());
        if let Some(k) = e.iter().position(|k| (k.0 - d).abs() <= scale) {
            return (k.min(e.len().saturating_sub(2)), Some(k));
        }
        let seg = e.windows(2).position(|w| d > w[0].0 && d < w[1].0).unwrap_or(0);
        (seg, None)
    }

    /// Rate on the envelope; constant to the left of the first knot.
    pub fn rate_at_distortion(&self, d: f64) -> Result<f64> {
        self.check_range(d)?;
        let e = &self.envelope;
        if d <= e[0].0 {
            return Ok(e[0].1);
        }
        if d >= e[e.len() - 1].0 {
            return Ok(e[e.len() - 1].1);
        }
        let (seg, knot) = self.locate(d);
        if let Some(k) = knot {
            return Ok(e[k].1);
        }
        let (a, b) = (e[seg], e[seg + 1]);
        Ok(a.1 + (b.1 - a.1) * (d - a.0) / (b.0 - a.0))
    }

    /// `-dR/dd` of the envelope; mean of the adjacent slopes at a knot.
    pub fn lambda_star(&self, d: f64) -> Result<f64> {
        if !(d > self.d_min && d < self.d_max) {
            return Err(Error::Range(format!(
                "lambda* needs d strictly inside ({}, {}), got {d}",
                self.d_min, self.d_max
            )));
        }
        Ok(-self.slope_at(d))
    }

    fn slope_at(&self, d: f64) -> f64 {
        let s = self.slopes();
        if s.is_empty() {
            return 0.0;
        }
        if d <= self.envelope[0].0 {
            return s[0];
        }
        let (seg, knot) = self.locate(d);
        match knot {
            Some(0) => s[0],
            Some(k) if k >= s.len() => s[s.len() - 1],
            Some(k) => 0.5 * (s[k - 1] + s[k]),
            None => s[seg],
        }
    }

    /// True when `d` sits on an envelope knot with unequal adjacent slopes.
    pub fn is_kink(&self, d: f64) -> bool {
        let s = self.slopes();
        match self.locate(d).1 {
            Some(k) if k > 0 && k < s.len() => (s[k - 1] - s[k]).abs() > 1e-9 * s[k - 1].abs().max(1.0),
            _ => false,
        }
    }

    /// Distortion-rate function `D(R)` and `D'(R) = 1 / R'(D)`.
    pub fn invert_to_distortion(&self, rate: f64) -> Result<Inversion> {
        let e = &self.envelope;
        let (r_hi, r_lo) = (e[0].1, e[e.len() - 1].1);
        let slack = 1e-12 * (1.0 + r_hi);
        if rate.is_nan() || rate < r_lo - slack || rate > r_hi + slack {
            return Err(Error::Range(format!("rate {rate} outside [{r_lo}, {r_hi}]")));
        }
        let rate = rate.clamp(r_lo, r_hi);
        if e.len() == 1 {
            return Ok(Inversion {
                d: e[0].0,
                d_prime: 0.0,
                saturated: true,
                kink: false,
            });
        }
        // Smallest d attaining the rate.
        let mut d = e[e.len() - 1].0;
        for w in e.windows(2) {
            if rate <= w[0].1 && rate >= w[1].1 {
                d = if w[0].1 == w[1].1 {
                    w[0].0
                } else {
                    w[0].0 + (w[1].0 - w[0].0) * (w[0].1 - rate) / (w[0].1 - w[1].1)
                };
                break;
            }
        }
        let slope = self.slope_at(d);
        Ok(Inversion {
            d,
            d_prime: if slope != 0.0 { 1.0 / slope } else { f64::NEG_INFINITY },
            saturated: false,
            kink: self.is_kink(d),
        })
    }

    /// CSV with header `lambda,distortion,rate_nats,rate_bits`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["lambda", "distortion", "rate_nats", "rate_bits"])?;
        for p in &self.points {
            w.write_record([
                p.lambda.to_string(),
                p.avg_distortion.to_string(),
                p.rate.to_string(),
                (p.rate / std::f64::consts::LN_2).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Export(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inversion {
    pub d: f64,
    /// Negative except on flat envelope pieces.
    pub d_prime: f64,
    /// Single-point curve: no slope information.
    pub saturated: bool,
    /// `d` sits on a kink of the envelope.
    pub kink: bool,
}

/// Lower convex hull of points sorted by x (Andrew's monotone chain).
pub fn lower_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}
