//! CSV rows and JSON summaries built from core results.

use fecx_core::geometry::{Point2, RegionLabel};
use fecx_core::hamiltonian::HamiltonianParams;
use fecx_core::sampling::{SampleCloud, SamplePoint};
use fecx_core::trajectory::{EnsembleStats, Jump, Leap, TrajectoryRecord};
use serde::Serialize;

use crate::output::{num, opt};

pub const SAMPLE_HEADER: &[&str] = &[
    "lambda", "w", "g", "energy", "lamD", "lamG", "expL", "expW", "expG", "label", "degeneracy", "valid",
];

pub fn sample_row(p: &SamplePoint) -> Vec<String> {
    let mut row = vec![num(p.params.lambda), num(p.params.w), num(p.params.g)];
    match p.obs() {
        Some(o) => {
            row.extend([
                num(o.energy),
                opt(o.lambda_d),
                opt(o.lambda_g),
                num(o.coords.lambda),
                num(o.coords.w),
                num(o.coords.g),
                p.label.map(|l| l.as_str().to_owned()).unwrap_or_default(),
                o.degeneracy.to_string(),
                "true".into(),
            ]);
        }
        None => {
            row.extend(std::iter::repeat(String::new()).take(8));
            row.push("false".into());
        }
    }
    row
}

pub const TRAJECTORY_HEADER: &[&str] = &[
    "chi", "lamD", "lamG", "expL", "expW", "expG", "energy", "dE", "d2E", "speed", "phi", "degeneracy", "flags",
    "dE_fd", "phi_params",
];

pub fn trajectory_rows(r: &TrajectoryRecord) -> Vec<Vec<String>> {
    r.samples
        .iter()
        .map(|s| {
            let o = s.obs.as_ref();
            vec![
                num(s.chi),
                opt(o.and_then(|o| o.lambda_d)),
                opt(o.and_then(|o| o.lambda_g)),
                opt(o.map(|o| o.coords.lambda)),
                opt(o.map(|o| o.coords.w)),
                opt(o.map(|o| o.coords.g)),
                opt(o.map(|o| o.energy)),
                opt(s.de),
                opt(s.d2e),
                opt(s.speed),
                opt(s.phi),
                o.map(|o| o.degeneracy.to_string()).unwrap_or_default(),
                s.flags.to_string(),
                opt(s.de_fd),
                opt(s.phi_params),
            ]
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct LabelCount {
    pub label: &'static str,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleSummary {
    pub n_particles: usize,
    pub count: usize,
    pub valid: usize,
    pub labels: Vec<LabelCount>,
    pub fec_fraction: f64,
    pub max_lambda_d: Option<f64>,
    pub max_lambda_g: Option<f64>,
    pub lambda_d_bound: f64,
    pub lambda_g_bound: f64,
    /// Points whose signatures exceed a bound by more than `1e-9`.
    pub bound_violations: usize,
    pub hull_lambda_g: Vec<Point2>,
    pub hull_w_g: Vec<Point2>,
}

pub fn sample_summary(cloud: &SampleCloud) -> SampleSummary {
    let n = cloud.particles;
    let dmax = fecx_core::rdm::lambda_d_bound(n, 2 * n);
    let gmax = fecx_core::rdm::lambda_g_bound(n);
    let fold = |f: fn(&fecx_core::model::PointObservables) -> Option<f64>| {
        cloud
            .points
            .iter()
            .filter_map(|p| p.obs().and_then(f))
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    };
    let violations = cloud
        .points
        .iter()
        .filter_map(|p| p.obs())
        .filter(|o| o.lambda_d.map_or(false, |d| d > dmax + 1e-9) || o.lambda_g.map_or(false, |g| g > gmax + 1e-9))
        .count();
    SampleSummary {
        n_particles: n,
        count: cloud.points.len(),
        valid: cloud.valid(),
        labels: RegionLabel::ALL
            .into_iter()
            .map(|l| LabelCount {
                label: l.as_str(),
                count: cloud.count(l),
            })
            .collect(),
        fec_fraction: cloud.count(RegionLabel::Fec) as f64 / cloud.points.len().max(1) as f64,
        max_lambda_d: fold(|o| o.lambda_d),
        max_lambda_g: fold(|o| o.lambda_g),
        lambda_d_bound: dmax,
        lambda_g_bound: gmax,
        bound_violations: violations,
        hull_lambda_g: cloud.hull_lambda_g.clone(),
        hull_w_g: cloud.hull_w_g.clone(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySummary {
    pub n_particles: usize,
    pub params_i: HamiltonianParams,
    pub params_f: HamiltonianParams,
    pub samples: usize,
    pub max_speed: Option<f64>,
    pub chi_at_max_speed: Option<f64>,
    pub phi_at_max_speed: Option<f64>,
    pub max_abs_d2e: Option<f64>,
    pub leaps: Vec<Leap>,
    pub jumps: Vec<Jump>,
    pub failures: Vec<String>,
}

pub fn trajectory_summary(r: &TrajectoryRecord) -> TrajectorySummary {
    let best = r.max_speed();
    TrajectorySummary {
        n_particles: r.particles,
        params_i: r.params_i,
        params_f: r.params_f,
        samples: r.samples.len(),
        max_speed: best.map(|b| b.0),
        chi_at_max_speed: best.map(|b| r.samples[b.1].chi),
        phi_at_max_speed: best.and_then(|b| r.samples[b.1].phi),
        max_abs_d2e: r.max_abs_d2e(),
        leaps: r.leaps.clone(),
        jumps: r.jumps.clone(),
        failures: r.failures.iter().map(|(chi, e)| format!("chi {chi}: {e}")).collect(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    pub n_particles: usize,
    pub from: String,
    pub to: String,
    pub label_particles: usize,
    pub stats: Option<EnsembleStats>,
    pub error: Option<String>,
    pub trajectories: Vec<TrajectorySummary>,
}

pub const DERIVATIVES_HEADER: &[&str] = &["chi", "energy", "dE", "dE_fd", "d2E", "degeneracy", "flags"];

pub fn derivative_rows(r: &TrajectoryRecord) -> Vec<Vec<String>> {
    r.samples
        .iter()
        .map(|s| {
            vec![
                num(s.chi),
                opt(s.energy()),
                opt(s.de),
                opt(s.de_fd),
                opt(s.d2e),
                s.obs.as_ref().map(|o| o.degeneracy.to_string()).unwrap_or_default(),
                s.flags.to_string(),
            ]
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivativesSummary {
    pub particles: Vec<usize>,
    pub params_i: HamiltonianParams,
    pub params_f: HamiltonianParams,
    pub max_abs_d2e: Vec<Option<f64>>,
    /// `max |d²E/dχ²|` strictly increases with the particle number.
    pub d2e_strictly_increasing: bool,
    pub runs: Vec<TrajectorySummary>,
}
