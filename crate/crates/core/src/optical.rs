//! Optical potential of the matter fermions: evaluation, minima, the laser
//! polarization triad, and the shaping ramps for mass and tunneling steps.
//! Proportionality constants are 1; only relative geometry matters.

use crate::error::{Result, SimError};
use std::f64::consts::{FRAC_PI_4, PI};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shape {
    pub f: f64,
    pub g: f64,
    pub h: f64,
    pub phi: f64,
}

impl Shape {
    pub const STANDARD: Shape = Shape { f: 0.0, g: 0.0, h: 0.0, phi: 0.0 };

    fn weights(&self) -> Result<(f64, f64, f64)> {
        let d = [1.0 + self.f + self.h, 1.0 + self.g + self.h, 1.0 + self.f + self.g + self.h];
        if d.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(SimError::Parameter(format!("degenerate potential denominators {d:?}")));
        }
        Ok((1.0 / d[0], 1.0 / d[1], (self.f + self.g + self.h) / d[2]))
    }
}

/// V(x,y) = a cos²(πx+π/2) + b cos²(πy+π/2) + c cos²(π(x+y)/2 + φ)
pub fn v_mat(x: f64, y: f64, s: &Shape) -> Result<f64> {
    let (a, b, c) = s.weights()?;
    Ok(a * (PI * x + PI / 2.0).cos().powi(2) + b * (PI * y + PI / 2.0).cos().powi(2) + c * (PI * (x + y) / 2.0 + s.phi).cos().powi(2))
}

pub fn v_mat_gradient(x: f64, y: f64, s: &Shape) -> Result<[f64; 2]> {
    let (a, b, c) = s.weights()?;
    let t = (PI * (x + y) + 2.0 * s.phi).sin() * c * PI / 2.0;
    Ok([a * PI * (2.0 * PI * x).sin() - t, b * PI * (2.0 * PI * y).sin() - t])
}

pub fn v_mat_hessian(x: f64, y: f64, s: &Shape) -> Result<[[f64; 2]; 2]> {
    let (a, b, c) = s.weights()?;
    let t = (PI * (x + y) + 2.0 * s.phi).cos() * c * PI * PI / 2.0;
    let xx = 2.0 * a * PI * PI * (2.0 * PI * x).cos() - t;
    let yy = 2.0 * b * PI * PI * (2.0 * PI * y).cos() - t;
    Ok([[xx, -t], [-t, yy]])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// Local minima inside the window: damped descent from a grid, Newton polish,
/// positive-definite Hessian, duplicates within 1e−6 merged.
pub fn v_mat_minima(s: &Shape, w: &Window) -> Result<Vec<Minimum>> {
    s.weights()?;
    // grid offset off the symmetric points so no start sits on a saddle
    let per_unit = 6;
    let nx = ((w.x1 - w.x0) * per_unit as f64).ceil() as usize + 1;
    let ny = ((w.y1 - w.y0) * per_unit as f64).ceil() as usize + 1;
    let mut found: Vec<Minimum> = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let mut p = [w.x0 + (i as f64 + 0.0371) / per_unit as f64, w.y0 + (j as f64 + 0.0593) / per_unit as f64];
            let mut step = 0.02;
            for _ in 0..4000 {
                let gr = v_mat_gradient(p[0], p[1], s)?;
                let v = v_mat(p[0], p[1], s)?;
                let trial = [p[0] - step * gr[0], p[1] - step * gr[1]];
                if v_mat(trial[0], trial[1], s)? <= v {
                    p = trial;
                    step *= 1.2;
                } else {
                    step *= 0.5;
                }
                if gr[0].hypot(gr[1]) < 1e-6 || step < 1e-14 {
                    break;
                }
            }
            for _ in 0..20 {
                let gr = v_mat_gradient(p[0], p[1], s)?;
                let hs = v_mat_hessian(p[0], p[1], s)?;
                let det = hs[0][0] * hs[1][1] - hs[0][1] * hs[1][0];
                if det.abs() < 1e-14 {
                    break;
                }
                let dx = (hs[1][1] * gr[0] - hs[0][1] * gr[1]) / det;
                let dy = (hs[0][0] * gr[1] - hs[1][0] * gr[0]) / det;
                p = [p[0] - dx, p[1] - dy];
                if dx.hypot(dy) < 1e-15 {
                    break;
                }
            }
            let hs = v_mat_hessian(p[0], p[1], s)?;
            let pd = hs[0][0] > 1e-9 && hs[0][0] * hs[1][1] - hs[0][1] * hs[1][0] > 1e-12;
            let tol = 1e-9;
            let inside = p[0] >= w.x0 - tol && p[0] <= w.x1 + tol && p[1] >= w.y0 - tol && p[1] <= w.y1 + tol;
            if pd && inside && !found.iter().any(|m| (m.x - p[0]).hypot(m.y - p[1]) < 1e-6) {
                found.push(Minimum { x: p[0], y: p[1], value: v_mat(p[0], p[1], s)? });
            }
        }
    }
    found.sort_by(|a, b| (a.y, a.x).partial_cmp(&(b.y, b.x)).unwrap_or(std::cmp::Ordering::Equal));
    Ok(found)
}

/// Barrier along the straight segment between two points: max − start value.
pub fn segment_barrier(from: (f64, f64), to: (f64, f64), s: &Shape, samples: usize) -> Result<f64> {
    let mut top = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for k in 0..=samples {
        let u = k as f64 / samples as f64;
        let v = v_mat(from.0 + u * (to.0 - from.0), from.1 + u * (to.1 - from.1), s)?;
        top = top.max(v);
        low = low.min(v);
    }
    Ok(top - low)
}

// ---- polarizations ---------------------------------------------------------

/// 1 − 4ξ⁴ − 2ξ√(2+4ξ²)
pub fn polarization_discriminant(xi: f64) -> f64 {
    1.0 - 4.0 * xi.powi(4) - 2.0 * xi * (2.0 + 4.0 * xi * xi).sqrt()
}

/// ζ with |k₃| = |k₁|: ζ² = ξ² + 1/2.
pub fn zeta(xi: f64) -> f64 {
    (xi * xi + 0.5).sqrt()
}

pub fn wave_vectors(xi: f64) -> [[f64; 3]; 3] {
    [[PI, 0.0, PI * xi], [0.0, PI, PI * xi], [PI / 2.0, PI / 2.0, PI * zeta(xi)]]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Polarizations {
    pub xi: f64,
    pub alpha: [f64; 3],
    pub e: [[f64; 3]; 3],
    /// discriminant > 0 and ξ > 0
    pub valid: bool,
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

pub fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// ê₁ ∝ (−ξ, α₁, 1), ê₂ ∝ (α₂, −ξ, 1), ê₃ ∝ (α₃, −α₃ − 2ζ, 1). The ξ entries
/// of ê₁, ê₂ carry a minus sign: that is what makes each ê transverse to its
/// k and the triad orthogonal with these α's.
pub fn polarization_vectors(xi: f64) -> Polarizations {
    let disc = polarization_discriminant(xi);
    let valid = xi > 0.0 && disc > 0.0;
    if !valid {
        return Polarizations { xi, alpha: [f64::NAN; 3], e: [[f64::NAN; 3]; 3], valid };
    }
    let s = disc.sqrt();
    let r = (2.0 + 4.0 * xi * xi).sqrt();
    let alpha = [(1.0 - s) / (2.0 * xi), (1.0 + s) / (2.0 * xi), (-1.0 - 2.0 * xi * xi + s) / r];
    let e = [
        unit([-xi, alpha[0], 1.0]),
        unit([alpha[1], -xi, 1.0]),
        unit([alpha[2], -alpha[2] - 2.0 * zeta(xi), 1.0]),
    ];
    Polarizations { xi, alpha, e, valid }
}

/// Largest |êᵢ·êⱼ|, i ≠ j.
pub fn max_cross_dot(p: &Polarizations) -> f64 {
    let e = &p.e;
    [dot(&e[0], &e[1]), dot(&e[0], &e[2]), dot(&e[1], &e[2])].iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Largest |êᵢ·k̂ᵢ|.
pub fn max_transverse_dot(p: &Polarizations) -> f64 {
    let k = wave_vectors(p.xi);
    (0..3).map(|i| dot(&p.e[i], &unit(k[i])).abs()).fold(0.0, f64::max)
}

/// Smallest ξ > 0 where the discriminant vanishes (bisection).
pub fn validity_boundary() -> f64 {
    let (mut lo, mut hi) = (1e-9, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if polarization_discriminant(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// s > λ_mat / (2√2)
pub fn lattice_spacing_ok(spacing: f64, lambda_mat: f64) -> bool {
    spacing > lambda_mat / (2.0 * 2f64.sqrt())
}

// ---- shaping ---------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapingStep {
    Eh,
    Oh,
    Ev,
    Ov,
    Mass,
}

impl ShapingStep {
    pub const ALL: [ShapingStep; 5] = [ShapingStep::Eh, ShapingStep::Oh, ShapingStep::Ev, ShapingStep::Ov, ShapingStep::Mass];

    pub fn tag(self) -> &'static str {
        match self {
            ShapingStep::Eh => "eh",
            ShapingStep::Oh => "oh",
            ShapingStep::Ev => "ev",
            ShapingStep::Ov => "ov",
            ShapingStep::Mass => "mass",
        }
    }

    /// Configuration held during the step.
    pub fn hold(self, amplitude: f64) -> Shape {
        match self {
            ShapingStep::Eh => Shape { f: amplitude, phi: FRAC_PI_4, ..Shape::STANDARD },
            ShapingStep::Oh => Shape { f: amplitude, phi: -FRAC_PI_4, ..Shape::STANDARD },
            ShapingStep::Ev => Shape { g: amplitude, phi: FRAC_PI_4, ..Shape::STANDARD },
            ShapingStep::Ov => Shape { g: amplitude, phi: -FRAC_PI_4, ..Shape::STANDARD },
            ShapingStep::Mass => Shape { h: amplitude, ..Shape::STANDARD },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapePoint {
    pub t: f64,
    pub shape: Shape,
}

/// Raised-cosine ramp to the hold configuration over `ramp`, hold, ramp back.
pub fn shaping_schedule(step: ShapingStep, amplitude: f64, duration: f64, ramp: f64, samples: usize) -> Result<Vec<ShapePoint>> {
    if !(amplitude > 0.0) || !(duration > 0.0) || !(ramp > 0.0) || 2.0 * ramp > duration || samples < 2 {
        return Err(SimError::Parameter("need amplitude > 0, 0 < 2·ramp ≤ duration, samples ≥ 2".into()));
    }
    let target = step.hold(amplitude);
    let weight = |t: f64| -> f64 {
        let u = if t < ramp {
            t / ramp
        } else if t > duration - ramp {
            (duration - t) / ramp
        } else {
            1.0
        };
        0.5 * (1.0 - (PI * u.clamp(0.0, 1.0)).cos())
    };
    Ok((0..samples)
        .map(|k| {
            let t = duration * k as f64 / (samples - 1) as f64;
            let w = weight(t);
            ShapePoint { t, shape: Shape { f: w * target.f, g: w * target.g, h: w * target.h, phi: w * target.phi } }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let s = Shape { f: 0.7, g: 0.2, h: 0.3, phi: 0.4 };
        let (x, y, h) = (0.31, -0.77, 1e-5);
        let g = v_mat_gradient(x, y, &s).unwrap();
        let fx = (v_mat(x + h, y, &s).unwrap() - v_mat(x - h, y, &s).unwrap()) / (2.0 * h);
        let fy = (v_mat(x, y + h, &s).unwrap() - v_mat(x, y - h, &s).unwrap()) / (2.0 * h);
        assert!((g[0] - fx).abs() < 1e-8 && (g[1] - fy).abs() < 1e-8);
        let hs = v_mat_hessian(x, y, &s).unwrap();
        let gxy = (v_mat_gradient(x, y + h, &s).unwrap()[0] - v_mat_gradient(x, y - h, &s).unwrap()[0]) / (2.0 * h);
        assert!((hs[0][1] - gxy).abs() < 1e-6);
    }

    #[test]
    fn degenerate_denominators_rejected() {
        assert!(v_mat(0.0, 0.0, &Shape { f: -1.0, ..Shape::STANDARD }).is_err());
    }

    #[test]
    fn ramp_endpoints_are_standard() {
        let s = shaping_schedule(ShapingStep::Ov, 2.0, 1.0, 0.25, 41).unwrap();
        assert_eq!(s[0].shape, Shape::STANDARD);
        assert!(s.last().unwrap().shape.g.abs() < 1e-15);
        assert!((s[20].shape.g - 2.0).abs() < 1e-15 && (s[20].shape.phi + FRAC_PI_4).abs() < 1e-15);
    }
}
