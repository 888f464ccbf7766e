//! Linear trajectories `H(χ) = (1 − χ) H_i + χ H_f` through parameter space.

use alloc::vec::Vec;
use core::fmt;

use crate::eigen::{SolverConfig, SolverError};
use crate::geometry::{
    altitude_angle, coefficient_of_variation, curve_speed, derivative, median, std_dev, AngleFrame,
};
use crate::hamiltonian::HamiltonianParams;
use crate::model::{Model, ModelSolution, PointObservables, StateSelection};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrajectoryConfig {
    pub grid: usize,
    pub refine: bool,
    /// Refine around samples whose speed exceeds this multiple of the median.
    pub refine_factor: f64,
    /// Largest number of samples after refinement.
    pub refine_cap: usize,
    /// Coordinate displacement over the median that marks a leap.
    pub leap_factor: f64,
    /// Jump in `dE/dχ` over the median adjacent change that marks a kink.
    pub jump_factor: f64,
    /// Compute `λ_D` and `λ_G` at every sample.
    pub rdms: bool,
    pub selection: StateSelection,
    pub frame: AngleFrame,
    pub solver: SolverConfig,
    pub warm_start: bool,
    /// Bisection steps used to pin down a level crossing.
    pub crossing_steps: usize,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            grid: 201,
            refine: false,
            refine_factor: 5.0,
            refine_cap: 1001,
            leap_factor: 10.0,
            jump_factor: 10.0,
            rdms: true,
            selection: StateSelection::Ensemble,
            frame: AngleFrame::default(),
            solver: SolverConfig::default(),
            warm_start: true,
            crossing_steps: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryError {
    GridTooSmall { grid: usize },
    ZeroEndpoint,
    TooFewRecords,
    NoValidRecords,
}

impl fmt::Display for TrajectoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrajectoryError::GridTooSmall { grid } => {
                write!(f, "trajectory grid of {grid} points is below the minimum of 16")
            }
            TrajectoryError::ZeroEndpoint => f.write_str("trajectory endpoint has all couplings zero"),
            TrajectoryError::TooFewRecords => f.write_str("ensemble statistics need at least two trajectories"),
            TrajectoryError::NoValidRecords => f.write_str("every trajectory in the ensemble is masked"),
        }
    }
}

impl core::error::Error for TrajectoryError {}

/// Per-sample condition bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Flags(pub u16);

impl Flags {
    pub const DEGENERATE: Flags = Flags(1);
    /// Hellmann–Feynman derivative taken over a degenerate level.
    pub const HF_UNRELIABLE: Flags = Flags(2);
    pub const LEAP: Flags = Flags(4);
    pub const JUMP: Flags = Flags(8);
    pub const MASKED: Flags = Flags(16);
    pub const REFINED: Flags = Flags(32);
    pub const CROSSING: Flags = Flags(64);

    const NAMES: [(Flags, &'static str); 7] = [
        (Flags::DEGENERATE, "degenerate"),
        (Flags::HF_UNRELIABLE, "hf_unreliable"),
        (Flags::LEAP, "leap"),
        (Flags::JUMP, "jump"),
        (Flags::MASKED, "masked"),
        (Flags::REFINED, "refined"),
        (Flags::CROSSING, "crossing"),
    ];

    pub fn contains(self, other: Flags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn insert(&mut self, other: Flags) {
        self.0 |= other.0;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn names(self) -> impl Iterator<Item = &'static str> {
        Self::NAMES
            .into_iter()
            .filter(move |(f, _)| self.contains(*f))
            .map(|(_, n)| n)
    }
}

impl fmt::Display for Flags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, n) in self.names().enumerate() {
            if k > 0 {
                f.write_str("|")?;
            }
            f.write_str(n)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub chi: f64,
    pub obs: Option<PointObservables>,
    /// Hellmann–Feynman `dE/dχ`.
    pub de: Option<f64>,
    /// Finite-difference `dE/dχ` for cross-checking.
    pub de_fd: Option<f64>,
    pub d2e: Option<f64>,
    pub speed: Option<f64>,
    /// Altitude of the expectation point.
    pub phi: Option<f64>,
    /// Altitude of the parameter vector `(λ, w, g)` with `g` as the pole.
    pub phi_params: Option<f64>,
    pub flags: Flags,
}

impl TrajectorySample {
    pub fn energy(&self) -> Option<f64> {
        self.obs.as_ref().map(|o| o.energy)
    }

    pub fn coords(&self) -> Option<[f64; 3]> {
        self.obs.as_ref().map(|o| o.coords.as_array())
    }
}

/// Adjacent samples whose coordinates move by much more than the median step.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Leap {
    pub chi_left: f64,
    pub chi_right: f64,
    pub displacement: f64,
    pub median_displacement: f64,
    /// Largest half-interval displacement after one bisection, over `displacement`.
    pub persistence: f64,
    pub confirmed: bool,
}

/// A located level crossing of the ground state.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Crossing {
    pub chi: f64,
    /// Separation of the two crossing branches at `chi`.
    pub gap: f64,
    pub slope_left: f64,
    pub slope_right: f64,
    pub width: f64,
    /// The slope change survived bisection down to `width`. A steep but
    /// smooth stretch passes through intermediate slopes and is not sharp.
    pub sharp: bool,
}

/// Discontinuity in `dE/dχ` between adjacent samples.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Jump {
    pub chi_left: f64,
    pub chi_right: f64,
    pub size: f64,
    pub median: f64,
    pub crossing: Option<Crossing>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub particles: usize,
    pub params_i: HamiltonianParams,
    pub params_f: HamiltonianParams,
    pub samples: Vec<TrajectorySample>,
    pub leaps: Vec<Leap>,
    pub jumps: Vec<Jump>,
    pub failures: Vec<(f64, SolverError)>,
}

impl TrajectoryRecord {
    pub fn chi(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.chi).collect()
    }

    pub fn max_speed(&self) -> Option<(f64, usize)> {
        self.samples
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.speed.map(|v| (v, i)))
            .fold(None, |best, (v, i)| match best {
                Some((b, _)) if b >= v => best,
                _ => Some((v, i)),
            })
    }

    pub fn max_abs_d2e(&self) -> Option<f64> {
        self.samples
            .iter()
            .filter_map(|s| s.d2e)
            .map(f64::abs)
            .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }

    /// Speeds divided by their maximum.
    pub fn normalized_speed(&self) -> Vec<Option<f64>> {
        let m = self.max_speed().map(|m| m.0);
        self.samples
            .iter()
            .map(|s| match (s.speed, m) {
                (Some(v), Some(m)) if m > 0.0 => Some(v / m),
                (Some(_), _) => Some(0.0),
                _ => None,
            })
            .collect()
    }
}

/// Evenly spaced grid on `[0, 1]` with both ends.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    let d = (points - 1) as f64;
    (0..points).map(|i| i as f64 / d).collect()
}

struct Evaluator<'a> {
    model: &'a Model,
    params_i: HamiltonianParams,
    params_f: HamiltonianParams,
    cfg: &'a TrajectoryConfig,
    last: Option<(f64, ModelSolution)>,
    spacing: f64,
}

impl<'a> Evaluator<'a> {
    fn params(&self, chi: f64) -> HamiltonianParams {
        self.params_i.lerp(&self.params_f, chi)
    }

    fn solve(&mut self, chi: f64) -> Result<ModelSolution, SolverError> {
        let p = self.params(chi);
        let guess = match &self.last {
            Some((c, s)) if self.cfg.warm_start && (c - chi).abs() <= 2.5 * self.spacing => Some(s),
            _ => None,
        };
        let sol = self.model.solve(&p, &self.cfg.solver, guess)?;
        Ok(sol)
    }

    fn remember(&mut self, chi: f64, sol: ModelSolution) {
        if self.cfg.warm_start {
            self.last = Some((chi, sol));
        }
    }

    fn sample(&mut self, chi: f64, rdms: bool) -> Result<TrajectorySample, SolverError> {
        let sol = self.solve(chi)?;
        let obs = self.model.observables(&sol, self.cfg.selection, rdms);
        self.remember(chi, sol);
        let mut flags = Flags::default();
        if obs.degeneracy > 1 {
            flags.insert(Flags::DEGENERATE);
            flags.insert(Flags::HF_UNRELIABLE);
        }
        let dir = self.params_f.difference(&self.params_i);
        let de = obs.directional_derivative(&dir);
        let p = obs.params;
        let phi_params = altitude_angle([p.lambda, p.w, p.g], &AngleFrame::default());
        let phi = altitude_angle(obs.coords.as_array(), &self.cfg.frame);
        Ok(TrajectorySample {
            chi,
            obs: Some(obs),
            de: Some(de),
            de_fd: None,
            d2e: None,
            speed: None,
            phi,
            phi_params,
            flags,
        })
    }

    /// Energy and HF slope of the first ground vector at `chi`.
    fn branch_point(&mut self, chi: f64) -> Result<BranchPoint, SolverError> {
        let sol = self.solve(chi)?;
        let obs = self.model.observables(&sol, StateSelection::Pure, false);
        let dir = self.params_f.difference(&self.params_i);
        Ok(BranchPoint {
            chi,
            energy: obs.energy,
            slope: obs.directional_derivative(&dir),
            splitting: sol.splitting().unwrap_or(f64::INFINITY),
        })
    }
}

struct BranchPoint {
    chi: f64,
    energy: f64,
    slope: f64,
    splitting: f64,
}

fn masked(chi: f64) -> TrajectorySample {
    TrajectorySample {
        chi,
        obs: None,
        de: None,
        de_fd: None,
        d2e: None,
        speed: None,
        phi: None,
        phi_params: None,
        flags: Flags::MASKED,
    }
}

/// Solves the ground state along the segment and derives speeds, energy
/// derivatives, leaps and kinks.
pub fn run_trajectory(
    model: &Model,
    params_i: &HamiltonianParams,
    params_f: &HamiltonianParams,
    cfg: &TrajectoryConfig,
) -> Result<TrajectoryRecord, TrajectoryError> {
    if cfg.grid < 16 {
        return Err(TrajectoryError::GridTooSmall { grid: cfg.grid });
    }
    if params_i.is_zero() || params_f.is_zero() {
        return Err(TrajectoryError::ZeroEndpoint);
    }
    let mut ev = Evaluator {
        model,
        params_i: *params_i,
        params_f: *params_f,
        cfg,
        last: None,
        spacing: 1.0 / (cfg.grid - 1) as f64,
    };
    let mut failures = Vec::new();
    let mut samples: Vec<TrajectorySample> = Vec::with_capacity(cfg.grid);
    for chi in uniform_grid(cfg.grid) {
        samples.push(eval_or_mask(&mut ev, chi, &mut failures));
    }
    finish_derivatives(&mut samples);

    if cfg.refine {
        loop {
            let speeds: Vec<f64> = samples.iter().filter_map(|s| s.speed).collect();
            let Some(med) = median(&speeds) else { break };
            let mut new_chi: Vec<f64> = Vec::new();
            for i in 0..samples.len() {
                if samples[i].speed.map_or(false, |v| v > cfg.refine_factor * med && v > 0.0) {
                    for j in [i.wrapping_sub(1), i] {
                        if j + 1 < samples.len() && j < samples.len() {
                            let (a, b) = (samples[j].chi, samples[j + 1].chi);
                            if b - a > 1e-9 {
                                new_chi.push(0.5 * (a + b));
                            }
                        }
                    }
                }
            }
            new_chi.sort_by(f64::total_cmp);
            new_chi.dedup();
            let room = cfg.refine_cap.saturating_sub(samples.len());
            new_chi.truncate(room);
            if new_chi.is_empty() {
                break;
            }
            ev.spacing = 0.0;
            for chi in new_chi {
                let mut s = eval_or_mask(&mut ev, chi, &mut failures);
                s.flags.insert(Flags::REFINED);
                insert_sorted(&mut samples, s);
            }
            finish_derivatives(&mut samples);
        }
    }

    let leaps = detect_leaps(&mut ev, &mut samples, &mut failures);
    finish_derivatives(&mut samples);
    let jumps = detect_jumps(&mut ev, &mut samples);

    Ok(TrajectoryRecord {
        particles: model.particles(),
        params_i: *params_i,
        params_f: *params_f,
        samples,
        leaps,
        jumps,
        failures,
    })
}

fn eval_or_mask(ev: &mut Evaluator<'_>, chi: f64, failures: &mut Vec<(f64, SolverError)>) -> TrajectorySample {
    match ev.sample(chi, ev.cfg.rdms) {
        Ok(s) => s,
        Err(e) => {
            failures.push((chi, e));
            masked(chi)
        }
    }
}

fn insert_sorted(samples: &mut Vec<TrajectorySample>, s: TrajectorySample) {
    let pos = samples.partition_point(|x| x.chi < s.chi);
    samples.insert(pos, s);
}

/// Recomputes speed, finite-difference slope and `d²E/dχ²` from the
/// per-sample values.
fn finish_derivatives(samples: &mut [TrajectorySample]) {
    let x: Vec<f64> = samples.iter().map(|s| s.chi).collect();
    let coords: Vec<Option<[f64; 3]>> = samples.iter().map(|s| s.coords()).collect();
    let speed = curve_speed(&x, &coords);
    let energy: Vec<Option<f64>> = samples.iter().map(|s| s.energy()).collect();
    let de_fd = derivative(&x, &energy);
    let de: Vec<Option<f64>> = samples.iter().map(|s| s.de).collect();
    let d2e = derivative(&x, &de);
    for (i, s) in samples.iter_mut().enumerate() {
        s.speed = speed[i];
        s.de_fd = de_fd[i];
        s.d2e = d2e[i];
    }
}

fn displacement(a: &TrajectorySample, b: &TrajectorySample) -> Option<f64> {
    let (p, q) = (a.obs.as_ref()?, b.obs.as_ref()?);
    Some(p.coords.distance(&q.coords))
}

fn detect_leaps(
    ev: &mut Evaluator<'_>,
    samples: &mut Vec<TrajectorySample>,
    failures: &mut Vec<(f64, SolverError)>,
) -> Vec<Leap> {
    let disp: Vec<Option<f64>> = samples.windows(2).map(|w| displacement(&w[0], &w[1])).collect();
    let finite: Vec<f64> = disp.iter().flatten().copied().collect();
    let Some(med) = median(&finite) else {
        return Vec::new();
    };
    let threshold = ev.cfg.leap_factor * med;
    // displacements at roundoff level never count, even on flat stretches
    let scale = samples
        .iter()
        .filter_map(|s| s.coords())
        .flat_map(|c| c.into_iter().map(f64::abs))
        .fold(1.0f64, f64::max);
    let floor = 1e-8 * scale;
    let candidates: Vec<(f64, f64, f64)> = disp
        .iter()
        .enumerate()
        .filter_map(|(i, d)| {
            let d = (*d)?;
            (d > threshold && d > floor).then(|| (samples[i].chi, samples[i + 1].chi, d))
        })
        .collect();
    let mut leaps = Vec::with_capacity(candidates.len());
    for (a, b, d) in candidates {
        // one bisection: a discontinuity keeps its full size in one half
        ev.spacing = 0.0;
        let mid = 0.5 * (a + b);
        let mut s = eval_or_mask(ev, mid, failures);
        s.flags.insert(Flags::REFINED);
        let ia = samples.partition_point(|x| x.chi < a);
        let ib = samples.partition_point(|x| x.chi < b);
        let halves = [displacement(&samples[ia], &s), displacement(&s, &samples[ib])];
        let half = halves.iter().flatten().fold(0.0f64, |m, v| m.max(*v));
        // a smooth steep stretch halves under bisection, a jump does not
        let confirmed = half > threshold && half >= 0.75 * d;
        insert_sorted(samples, s);
        if confirmed {
            for c in [a, mid, b] {
                let k = samples.partition_point(|x| x.chi < c);
                samples[k].flags.insert(Flags::LEAP);
            }
        }
        leaps.push(Leap {
            chi_left: a,
            chi_right: b,
            displacement: d,
            median_displacement: med,
            persistence: half / d,
            confirmed,
        });
    }
    leaps
}

fn detect_jumps(ev: &mut Evaluator<'_>, samples: &mut [TrajectorySample]) -> Vec<Jump> {
    let diffs: Vec<Option<f64>> = samples
        .windows(2)
        .map(|w| Some((w[1].de? - w[0].de?).abs()))
        .collect();
    let finite: Vec<f64> = diffs.iter().flatten().copied().collect();
    let Some(med) = median(&finite) else {
        return Vec::new();
    };
    let mut jumps = Vec::new();
    for (i, d) in diffs.iter().enumerate() {
        let Some(d) = *d else { continue };
        if !(d > ev.cfg.jump_factor * med && d > 1e-12) {
            continue;
        }
        let (a, b) = (samples[i].chi, samples[i + 1].chi);
        let (sa, sb) = (samples[i].de.unwrap(), samples[i + 1].de.unwrap());
        let crossing = locate_crossing(ev, a, b, sa, sb).ok();
        if crossing.as_ref().map_or(false, |c| !c.sharp) {
            continue;
        }
        samples[i].flags.insert(Flags::JUMP);
        samples[i + 1].flags.insert(Flags::JUMP);
        if crossing.as_ref().map_or(false, |c| c.gap <= ev.cfg.solver.deg_tol) {
            samples[i].flags.insert(Flags::CROSSING);
            samples[i + 1].flags.insert(Flags::CROSSING);
        }
        jumps.push(Jump {
            chi_left: a,
            chi_right: b,
            size: d,
            median: med,
            crossing,
        });
    }
    jumps
}

/// Bisection on which branch the ground state follows, identified by its
/// Hellmann–Feynman slope.
///
/// When both ends of the final bracket still sit on their own branch, the
/// gap is the mismatch at the midpoint of the two branch lines drawn from
/// the bracket ends; for levels that truly cross it shrinks with the
/// bracket. Otherwise the levels repel and the smallest splitting seen is
/// reported instead.
fn locate_crossing(
    ev: &mut Evaluator<'_>,
    a: f64,
    b: f64,
    slope_a: f64,
    slope_b: f64,
) -> Result<Crossing, SolverError> {
    ev.spacing = 0.0;
    let jump = (slope_b - slope_a).abs();
    let mut lo = ev.branch_point(a)?;
    let mut hi = ev.branch_point(b)?;
    let mut min_split = f64::INFINITY;
    let mut smooth = false;
    for _ in 0..ev.cfg.crossing_steps {
        if hi.chi - lo.chi <= 1e-14 {
            break;
        }
        let m = ev.branch_point(0.5 * (lo.chi + hi.chi))?;
        min_split = min_split.min(m.splitting);
        if (m.slope - slope_a).abs().min((m.slope - slope_b).abs()) > 0.25 * jump {
            // the slope passes through intermediate values: no crossing
            min_split = min_split.min(lo.splitting).min(hi.splitting);
            smooth = true;
            break;
        }
        if (m.slope - slope_a).abs() <= (m.slope - slope_b).abs() {
            lo = m;
        } else {
            hi = m;
        }
    }
    let mid = 0.5 * (lo.chi + hi.chi);
    let separated = !smooth && (hi.slope - lo.slope).abs() >= 0.5 * jump;
    let gap = if separated {
        let ea = lo.energy + lo.slope * (mid - lo.chi);
        let eb = hi.energy + hi.slope * (mid - hi.chi);
        (ea - eb).abs()
    } else {
        min_split
    };
    Ok(Crossing {
        chi: mid,
        gap,
        slope_left: slope_a,
        slope_right: slope_b,
        width: hi.chi - lo.chi,
        sharp: separated,
    })
}

/// Spread of the speed maxima over a set of trajectories.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleStats {
    pub count: usize,
    pub max_speeds: Vec<f64>,
    pub phi_at_max: Vec<f64>,
    /// `σ/μ` of `max_speeds`.
    pub cv_max_speed: f64,
    /// Sample standard deviation of `phi_at_max`.
    pub phi_spread: f64,
    pub cv_phi: Option<f64>,
}

pub fn ensemble_stats(records: &[TrajectoryRecord]) -> Result<EnsembleStats, TrajectoryError> {
    if records.len() < 2 {
        return Err(TrajectoryError::TooFewRecords);
    }
    let mut max_speeds = Vec::new();
    let mut phi_at_max = Vec::new();
    for r in records {
        if let Some((v, i)) = r.max_speed() {
            max_speeds.push(v);
            phi_at_max.push(r.samples[i].phi.unwrap_or(f64::NAN));
        }
    }
    if max_speeds.len() < 2 {
        return Err(TrajectoryError::NoValidRecords);
    }
    let cv = coefficient_of_variation(&max_speeds).ok_or(TrajectoryError::NoValidRecords)?;
    let phis: Vec<f64> = phi_at_max.iter().copied().filter(|p| p.is_finite()).collect();
    Ok(EnsembleStats {
        count: max_speeds.len(),
        cv_max_speed: cv,
        phi_spread: std_dev(&phis).unwrap_or(0.0),
        cv_phi: coefficient_of_variation(&phis).map(f64::abs),
        max_speeds,
        phi_at_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Blocking;

    fn quick() -> TrajectoryConfig {
        TrajectoryConfig {
            grid: 21,
            ..TrajectoryConfig::default()
        }
    }

    #[test]
    fn constant_trajectory() {
        let m = Model::new(4, Blocking::Parity).unwrap();
        let p = HamiltonianParams::two_body(0.3, 0.4, 0.5);
        let r = run_trajectory(&m, &p, &p, &quick()).unwrap();
        for s in &r.samples {
            assert_eq!(s.speed, Some(0.0));
            assert_eq!(s.energy(), r.samples[0].energy());
        }
        assert!(r.leaps.is_empty());
    }

    #[test]
    fn hf_matches_finite_differences() {
        let m = Model::new(4, Blocking::Parity).unwrap();
        let a = HamiltonianParams::two_body(-1.0, -2.0, 0.0).scaled(1.0 / libm::sqrt(5.0));
        let b = HamiltonianParams::two_body(0.2, 0.5, 0.8);
        let cfg = TrajectoryConfig {
            grid: 401,
            rdms: false,
            ..TrajectoryConfig::default()
        };
        let r = run_trajectory(&m, &a, &b, &cfg).unwrap();
        let smooth = |s: &TrajectorySample| s.flags.is_empty();
        let mut checked = 0;
        for w in r.samples.windows(3).filter(|w| w.iter().all(smooth)) {
            let s = &w[1];
            let (hf, fd) = (s.de.unwrap(), s.de_fd.unwrap());
            assert!((hf - fd).abs() <= 1e-4 * hf.abs().max(1.0), "{} {hf} {fd}", s.chi);
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn positive_scaling_invariance() {
        let m = Model::new(4, Blocking::Parity).unwrap();
        let a = HamiltonianParams::two_body(0.5, -0.3, 0.2);
        let b = HamiltonianParams::two_body(-0.1, 0.2, 0.9);
        let r1 = run_trajectory(&m, &a, &b, &quick()).unwrap();
        let r2 = run_trajectory(&m, &a.scaled(2.5), &b.scaled(2.5), &quick()).unwrap();
        for (s, t) in r1.samples.iter().zip(&r2.samples) {
            let (o, q) = (s.obs.as_ref().unwrap(), t.obs.as_ref().unwrap());
            assert!(o.coords.distance(&q.coords) < 1e-8);
            assert!((2.5 * o.energy - q.energy).abs() < 1e-9);
            assert!((o.lambda_d.unwrap() - q.lambda_d.unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_setup() {
        let m = Model::new(4, Blocking::Parity).unwrap();
        let p = HamiltonianParams::two_body(1.0, 0.0, 0.0);
        let small = TrajectoryConfig {
            grid: 8,
            ..TrajectoryConfig::default()
        };
        assert!(matches!(
            run_trajectory(&m, &p, &p, &small),
            Err(TrajectoryError::GridTooSmall { .. })
        ));
        assert!(matches!(
            run_trajectory(&m, &p, &HamiltonianParams::two_body(0.0, 0.0, 0.0), &quick()),
            Err(TrajectoryError::ZeroEndpoint)
        ));
    }

    #[test]
    fn ensemble_statistics() {
        let m = Model::new(4, Blocking::Parity).unwrap();
        let a = HamiltonianParams::two_body(0.5, -0.3, 0.2);
        let b = HamiltonianParams::two_body(-0.1, 0.2, 0.9);
        let r = run_trajectory(&m, &a, &b, &quick()).unwrap();
        let s = ensemble_stats(&[r.clone(), r.clone()]).unwrap();
        assert_eq!(s.cv_max_speed, 0.0);
        assert!(matches!(ensemble_stats(&[r]), Err(TrajectoryError::TooFewRecords)));
    }

    #[test]
    fn flags_display() {
        let mut f = Flags::DEGENERATE;
        f.insert(Flags::LEAP);
        assert_eq!(alloc::format!("{f}"), "degenerate|leap");
        assert_eq!(alloc::format!("{}", Flags::default()), "");
    }
}
