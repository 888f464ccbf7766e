//! Random sampling of the coupling sphere and region-matched endpoints.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigen::{SolverConfig, SolverError};
use crate::geometry::{classify, convex_hull, Point2, Projection, RegionLabel, Thresholds};
use crate::hamiltonian::HamiltonianParams;
use crate::model::{Model, PointObservables, StateSelection};

/// `count` directions `(λ, w, g)` uniform on the unit sphere, `ε = 0`.
pub fn sphere_directions(count: usize, seed: u64) -> Vec<HamiltonianParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sphere_direction(&mut rng)).collect()
}

/// One uniform direction: uniform height and azimuth.
pub fn sphere_direction<R: Rng>(rng: &mut R) -> HamiltonianParams {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..core::f64::consts::TAU);
    let rho = libm::sqrt((1.0 - z * z).max(0.0));
    HamiltonianParams::two_body(rho * libm::cos(phi), rho * libm::sin(phi), z)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub params: HamiltonianParams,
    pub result: Result<PointObservables, SolverError>,
    pub label: Option<RegionLabel>,
}

impl SamplePoint {
    pub fn obs(&self) -> Option<&PointObservables> {
        self.result.as_ref().ok()
    }
}

/// Ground-state signatures and label at one parameter point.
pub fn evaluate_point(
    model: &Model,
    params: &HamiltonianParams,
    solver: &SolverConfig,
    selection: StateSelection,
    thresholds: &Thresholds,
) -> SamplePoint {
    let result = model
        .solve(params, solver, None)
        .map(|sol| model.observables(&sol, selection, true));
    let label = result.as_ref().ok().map(|o| {
        classify(
            o.lambda_d.unwrap_or(0.0),
            o.lambda_g.unwrap_or(0.0),
            o.coords.lambda,
            thresholds,
        )
    });
    SamplePoint {
        params: *params,
        result,
        label,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleCloud {
    pub particles: usize,
    pub points: Vec<SamplePoint>,
    /// `(⟨Λ̂⟩, ⟨Ĝ⟩)` hull.
    pub hull_lambda_g: Vec<Point2>,
    /// `(⟨Ŵ⟩, ⟨Ĝ⟩)` hull.
    pub hull_w_g: Vec<Point2>,
}

impl SampleCloud {
    pub fn from_points(particles: usize, points: Vec<SamplePoint>) -> Self {
        let project = |p: Projection| -> Vec<Point2> {
            points
                .iter()
                .filter_map(|s| s.obs().map(|o| p.project(&o.coords)))
                .collect()
        };
        SampleCloud {
            particles,
            hull_lambda_g: convex_hull(&project(Projection::LambdaG)),
            hull_w_g: convex_hull(&project(Projection::WG)),
            points,
        }
    }

    pub fn hull(&self, p: Projection) -> &[Point2] {
        match p {
            Projection::LambdaG => &self.hull_lambda_g,
            Projection::WG => &self.hull_w_g,
        }
    }

    pub fn count(&self, label: RegionLabel) -> usize {
        self.points.iter().filter(|p| p.label == Some(label)).count()
    }

    pub fn valid(&self) -> usize {
        self.points.iter().filter(|p| p.result.is_ok()).count()
    }
}

/// Sequential sphere sample; the std front end runs the same points in parallel.
pub fn sample_sphere(
    model: &Model,
    count: usize,
    seed: u64,
    solver: &SolverConfig,
    selection: StateSelection,
    thresholds: &Thresholds,
) -> SampleCloud {
    let points = sphere_directions(count, seed)
        .iter()
        .map(|p| evaluate_point(model, p, solver, selection, thresholds))
        .collect();
    SampleCloud::from_points(model.particles(), points)
}

/// Rejection sampling of sphere directions whose ground state carries one of
/// `labels`. Draws stop after `max_draws`; fewer than `count` endpoints may
/// be returned.
pub fn select_endpoints(
    model: &Model,
    labels: &[RegionLabel],
    count: usize,
    seed: u64,
    max_draws: usize,
    solver: &SolverConfig,
    thresholds: &Thresholds,
) -> Vec<HamiltonianParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..max_draws {
        if out.len() >= count {
            break;
        }
        let p = sphere_direction(&mut rng);
        let s = evaluate_point(model, &p, solver, StateSelection::Ensemble, thresholds);
        if s.label.map_or(false, |l| labels.contains(&l)) {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::hull_contains;
    use crate::model::Blocking;

    #[test]
    fn directions_are_unit_and_seeded() {
        let a = sphere_directions(50, 3);
        assert_eq!(a, sphere_directions(50, 3));
        assert_ne!(a, sphere_directions(50, 4));
        assert!(a.iter().all(|p| (p.two_body_norm() - 1.0).abs() < 1e-12 && p.epsilon == 0.0));
    }

    #[test]
    fn cloud_points_inside_hulls() {
        let m = Model::new(4, Blocking::Parity).unwrap();
        let c = sample_sphere(
            &m,
            60,
            11,
            &SolverConfig::default(),
            StateSelection::Ensemble,
            &Thresholds::default(),
        );
        assert_eq!(c.valid(), 60);
        for p in &c.points {
            let o = p.obs().unwrap();
            for pr in [Projection::LambdaG, Projection::WG] {
                assert!(hull_contains(c.hull(pr), pr.project(&o.coords), 1e-9));
            }
        }
    }

    #[test]
    fn lipkin_beta_direction_is_beta() {
        let m = Model::new(4, Blocking::Parity).unwrap();
        let p = HamiltonianParams::two_body(1.0, -2.0, 0.0).scaled(1.0 / libm::sqrt(5.0));
        let s = evaluate_point(&m, &p, &SolverConfig::default(), StateSelection::Ensemble, &Thresholds::default());
        assert_eq!(s.label, Some(RegionLabel::EcBeta));
        let p = HamiltonianParams::two_body(-1.0, -2.0, 0.0).scaled(1.0 / libm::sqrt(5.0));
        let s = evaluate_point(&m, &p, &SolverConfig::default(), StateSelection::Ensemble, &Thresholds::default());
        assert_eq!(s.label, Some(RegionLabel::EcAlpha));
        let p = HamiltonianParams::two_body(0.0, 0.0, 1.0);
        let s = evaluate_point(&m, &p, &SolverConfig::default(), StateSelection::Ensemble, &Thresholds::default());
        assert_eq!(s.label, Some(RegionLabel::Fpc));
    }
}
