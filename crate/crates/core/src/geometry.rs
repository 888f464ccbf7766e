//! Geometry of the expectation-value space: projection hulls, region labels,
//! altitude angles and finite differences on nonuniform grids.

use alloc::vec::Vec;
use core::fmt;

use crate::rdm::Coords;

/// Point `(x, y)` of a two-dimensional projection.
pub type Point2 = [f64; 2];

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull by Andrew's monotone chain, counter-clockwise, without
/// collinear vertices. Non-finite points are ignored.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut p: Vec<Point2> = points
        .iter()
        .copied()
        .filter(|q| q[0].is_finite() && q[1].is_finite())
        .collect();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * p.len());
    for &q in &p {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
            hull.pop();
        }
        hull.push(q);
    }
    let lower = hull.len() + 1;
    for &q in p.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
            hull.pop();
        }
        hull.push(q);
    }
    hull.pop();
    hull
}

/// Whether `q` lies inside or within `tol` of a counter-clockwise hull.
pub fn hull_contains(hull: &[Point2], q: Point2, tol: f64) -> bool {
    match hull.len() {
        0 => false,
        1 => (hull[0][0] - q[0]).abs() <= tol && (hull[0][1] - q[1]).abs() <= tol,
        _ => (0..hull.len()).all(|i| {
            let a = hull[i];
            let b = hull[(i + 1) % hull.len()];
            let len = libm::hypot(b[0] - a[0], b[1] - a[1]);
            cross(a, b, q) >= -tol * len.max(1.0)
        }),
    }
}

/// Projection of the expectation triple onto two of its axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Projection {
    /// `(⟨Λ̂⟩, ⟨Ĝ⟩)`
    LambdaG,
    /// `(⟨Ŵ⟩, ⟨Ĝ⟩)`
    WG,
}

impl Projection {
    pub fn project(self, c: &Coords) -> Point2 {
        match self {
            Projection::LambdaG => [c.lambda, c.g],
            Projection::WG => [c.w, c.g],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RegionLabel {
    Fpc,
    EcAlpha,
    EcBeta,
    Fec,
    None,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 5] = [
        RegionLabel::Fpc,
        RegionLabel::EcAlpha,
        RegionLabel::EcBeta,
        RegionLabel::Fec,
        RegionLabel::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionLabel::Fpc => "FPC",
            RegionLabel::EcAlpha => "EC_alpha",
            RegionLabel::EcBeta => "EC_beta",
            RegionLabel::Fec => "FEC",
            RegionLabel::None => "NONE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classification thresholds. A signature counts as condensed when it
/// exceeds its threshold by more than `margin`; single determinants sit
/// exactly at 1 and must not be labelled.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Thresholds {
    pub theta_d: f64,
    pub theta_g: f64,
    pub margin: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            theta_d: 1.0,
            theta_g: 1.0,
            margin: 1e-9,
        }
    }
}

pub fn classify(lambda_d: f64, lambda_g: f64, exp_lambda: f64, t: &Thresholds) -> RegionLabel {
    let d = lambda_d > t.theta_d + t.margin;
    let g = lambda_g > t.theta_g + t.margin;
    match (d, g) {
        (true, true) => RegionLabel::Fec,
        (true, false) => RegionLabel::Fpc,
        (false, true) if exp_lambda >= 0.0 => RegionLabel::EcAlpha,
        (false, true) => RegionLabel::EcBeta,
        (false, false) => RegionLabel::None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PolarAxis {
    Lambda,
    W,
    G,
}

/// Frame for altitude angles: polar axis and origin.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AngleFrame {
    pub axis: PolarAxis,
    pub origin: [f64; 3],
}

impl Default for AngleFrame {
    fn default() -> Self {
        AngleFrame {
            axis: PolarAxis::G,
            origin: [0.0; 3],
        }
    }
}

/// `arcsin(z/‖v‖)` of `v − origin`; `None` at the origin.
pub fn altitude_angle(v: [f64; 3], frame: &AngleFrame) -> Option<f64> {
    let d = [
        v[0] - frame.origin[0],
        v[1] - frame.origin[1],
        v[2] - frame.origin[2],
    ];
    let n = libm::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    if !(n > 0.0) {
        return None;
    }
    let z = match frame.axis {
        PolarAxis::Lambda => d[0],
        PolarAxis::W => d[1],
        PolarAxis::G => d[2],
    };
    Some(libm::asin((z / n).clamp(-1.0, 1.0)))
}

pub fn mean(x: &[f64]) -> Option<f64> {
    (!x.is_empty()).then(|| x.iter().sum::<f64>() / x.len() as f64)
}

/// Sample standard deviation (denominator `n − 1`).
pub fn std_dev(x: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let m = mean(x)?;
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    Some(libm::sqrt(ss / (x.len() - 1) as f64))
}

/// `σ/μ` with the sample standard deviation.
pub fn coefficient_of_variation(x: &[f64]) -> Option<f64> {
    let m = mean(x)?;
    let s = std_dev(x)?;
    (m != 0.0).then(|| s / m)
}

/// Median of the finite values.
pub fn median(x: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = x.iter().copied().filter(|a| a.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// First derivative on a strictly increasing grid: three-point central
/// differences inside, one-sided three-point formulas at the ends.
/// Masked (`None`) inputs mask every output that uses them.
pub fn derivative(x: &[f64], y: &[Option<f64>]) -> Vec<Option<f64>> {
    let n = x.len();
    assert_eq!(n, y.len());
    let mut out = alloc::vec![None; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        if let (Some(a), Some(b)) = (y[0], y[1]) {
            let d = (b - a) / (x[1] - x[0]);
            out[0] = Some(d);
            out[1] = Some(d);
        }
        return out;
    }
    let three = |i0: usize, at: usize| -> Option<f64> {
        let (a, b, c) = (y[i0]?, y[i0 + 1]?, y[i0 + 2]?);
        if a == b && b == c {
            return Some(0.0);
        }
        let (x0, x1, x2) = (x[i0], x[i0 + 1], x[i0 + 2]);
        let t = x[at];
        // derivative of the quadratic through the three points
        let l0 = (2.0 * t - x1 - x2) / ((x0 - x1) * (x0 - x2));
        let l1 = (2.0 * t - x0 - x2) / ((x1 - x0) * (x1 - x2));
        let l2 = (2.0 * t - x0 - x1) / ((x2 - x0) * (x2 - x1));
        Some(a * l0 + b * l1 + c * l2)
    };
    out[0] = three(0, 0);
    for i in 1..n - 1 {
        out[i] = three(i - 1, i);
    }
    out[n - 1] = three(n - 3, n - 1);
    out
}

/// Euclidean norm of the componentwise derivative of a curve.
pub fn curve_speed(x: &[f64], curve: &[Option<[f64; 3]>]) -> Vec<Option<f64>> {
    let comps: Vec<Vec<Option<f64>>> = (0..3)
        .map(|c| {
            let y: Vec<Option<f64>> = curve.iter().map(|p| p.map(|v| v[c])).collect();
            derivative(x, &y)
        })
        .collect();
    (0..x.len())
        .map(|i| {
            let (a, b, c) = (comps[0][i]?, comps[1][i]?, comps[2][i]?);
            Some(libm::sqrt(a * a + b * b + c * c))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn hull_of_square_with_interior() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5], [0.5, 0.0]];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        for p in pts {
            assert!(hull_contains(&h, p, 1e-12));
        }
        assert!(!hull_contains(&h, [1.5, 0.5], 1e-12));
    }

    #[test]
    fn thresholds_logic() {
        let t = Thresholds::default();
        assert_eq!(classify(1.4, 0.3, 0.0, &t), RegionLabel::Fpc);
        assert_eq!(classify(1.2, 1.2, 0.0, &t), RegionLabel::Fec);
        assert_eq!(classify(0.4, 1.8, -3.0, &t), RegionLabel::EcBeta);
        assert_eq!(classify(0.4, 1.8, 3.0, &t), RegionLabel::EcAlpha);
        assert_eq!(classify(1.0, 1.0, 0.0, &t), RegionLabel::None);
    }

    #[test]
    fn label_round_trip() {
        for l in RegionLabel::ALL {
            assert_eq!(RegionLabel::parse(l.as_str()), Some(l));
        }
    }

    #[test]
    fn altitude_angles() {
        let f = AngleFrame::default();
        let half_pi = core::f64::consts::FRAC_PI_2;
        assert!((altitude_angle([0.0, 0.0, 2.0], &f).unwrap() - half_pi).abs() < 1e-15);
        assert_eq!(altitude_angle([1.0, -2.0, 0.0], &f), Some(0.0));
        assert_eq!(altitude_angle([0.0; 3], &f), None);
    }

    #[test]
    fn statistics() {
        assert_eq!(coefficient_of_variation(&[2.0, 2.0, 2.0]), Some(0.0));
        assert_eq!(coefficient_of_variation(&[1.0]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn derivative_exact_for_quadratics() {
        let x = [0.0, 0.1, 0.25, 0.3, 0.6, 1.0];
        let y: Vec<Option<f64>> = x.iter().map(|t| Some(3.0 * t * t - t + 2.0)).collect();
        for (t, d) in x.iter().zip(derivative(&x, &y)) {
            assert!((d.unwrap() - (6.0 * t - 1.0)).abs() < 1e-12);
        }
        let mut masked = y.clone();
        masked[2] = None;
        let d = derivative(&x, &masked);
        assert!(d[1].is_none() && d[3].is_none() && d[4].is_some());
        let speed = curve_speed(&x, &vec![Some([1.0, 2.0, 3.0]); x.len()]);
        assert!(speed.iter().all(|s| *s == Some(0.0)));
    }
}
