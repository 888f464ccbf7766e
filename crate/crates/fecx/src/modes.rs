//! The five run modes. Work items run on a rayon pool and are collected by
//! index, so outputs never depend on completion order.

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use fecx_core::analytic::{
    build_ansatz, class_algebra_report, level_crossing_scan, verify_annihilation, AnsatzKind, ClassAlgebraReport,
    Conventions, CrossingScan, PairCount, PhaseOrder,
};
use fecx_core::fock::SectorBasis;
use fecx_core::geometry::{classify, RegionLabel};
use fecx_core::hamiltonian::{build_g_pair, HamiltonianParams, Term};
use fecx_core::model::Model;
use fecx_core::rdm::{direct_g, map_d_to_g, one_rdm, two_rdm, Ensemble};
use fecx_core::sampling::{select_endpoints, sphere_directions, SampleCloud, SamplePoint};
use fecx_core::trajectory::{ensemble_stats, run_trajectory, TrajectoryRecord};

use crate::config::{Endpoint, Mode, RunConfig};
use crate::output::{FileEntry, OutputDir};
use crate::records::*;

/// What a run produced. `failures` lists solver failures and failed
/// checks; a non-empty list means the outputs are partial.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub files: Vec<FileEntry>,
    pub failures: Vec<String>,
}

impl RunOutcome {
    pub fn complete(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    mode: &'static str,
    seed: u64,
    n_particles: usize,
    status: &'static str,
    failures: &'a [String],
    config: &'a RunConfig,
    files: &'a [FileEntry],
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    pool: rayon::ThreadPool,
    out: OutputDir,
    failures: Vec<String>,
}

/// Runs `cfg` and writes its outputs plus `manifest.json`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let mut ctx = Ctx {
        cfg,
        pool: builder.build().context("building the worker pool")?,
        out: OutputDir::create(&cfg.out)?,
        failures: Vec::new(),
    };
    match cfg.mode {
        Mode::Sample => sample(&mut ctx)?,
        Mode::Trajectory => trajectory(&mut ctx)?,
        Mode::Ensemble => ensemble(&mut ctx)?,
        Mode::Derivatives => derivatives(&mut ctx)?,
        Mode::Verify => verify(&mut ctx)?,
    }
    let files = ctx.out.files().to_vec();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        mode: cfg.mode.as_str(),
        seed: cfg.seed,
        n_particles: cfg.n_particles,
        status: if ctx.failures.is_empty() { "complete" } else { "partial" },
        failures: &ctx.failures,
        config: cfg,
        files: &files,
    };
    ctx.out.write_json("manifest.json", "manifest", &manifest)?;
    Ok(RunOutcome {
        files: ctx.out.files().to_vec(),
        failures: ctx.failures,
    })
}

fn needs_full(params: &[HamiltonianParams]) -> bool {
    params.iter().any(|p| p.epsilon != 0.0)
}

fn model(cfg: &RunConfig, n: usize, params: &[HamiltonianParams]) -> Result<Model> {
    let blocking = cfg.blocking.resolve(n, needs_full(params));
    Model::new(n, blocking).with_context(|| format!("building the N = {n} model"))
}

fn evaluate(ctx: &Ctx<'_>, model: &Model, points: &[HamiltonianParams]) -> Vec<SamplePoint> {
    let cfg = ctx.cfg;
    let rdms = cfg.rdms_enabled(model.particles());
    ctx.pool.install(|| {
        points
            .par_iter()
            .map(|p| {
                let result = model
                    .solve(p, &cfg.solver, None)
                    .map(|sol| model.observables(&sol, cfg.selection, rdms));
                let label = result.as_ref().ok().and_then(|o| {
                    Some(classify(o.lambda_d?, o.lambda_g?, o.coords.lambda, &cfg.thresholds))
                });
                SamplePoint {
                    params: *p,
                    result,
                    label,
                }
            })
            .collect()
    })
}

fn sample(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let n = cfg.n_particles;
    let m = model(cfg, n, &[])?;
    let dirs = sphere_directions(cfg.sample.count, cfg.seed);
    let points = evaluate(ctx, &m, &dirs);
    for p in &points {
        if let Err(e) = &p.result {
            ctx.failures.push(format!("sample at {:?}: {e}", p.params));
        }
    }
    let cloud = SampleCloud::from_points(n, points);
    let rows: Vec<Vec<String>> = cloud.points.iter().map(sample_row).collect();
    ctx.out.write_csv("sample.csv", "sample-cloud", SAMPLE_HEADER, &rows)?;
    ctx.out.write_json("sample_summary.json", "sample-summary", &sample_summary(&cloud))?;
    Ok(())
}

/// Rejection-samples `count` directions labelled `label` by ground states
/// at the configured label particle number.
fn region_endpoints(ctx: &Ctx<'_>, label: &str, count: usize, seed: u64) -> Result<Vec<HamiltonianParams>> {
    let cfg = ctx.cfg;
    let l = RegionLabel::parse(label).ok_or_else(|| anyhow!("unknown region `{label}`"))?;
    let m = model(cfg, cfg.endpoints.label_particles, &[])?;
    let found = select_endpoints(&m, &[l], count, seed, cfg.endpoints.max_draws, &cfg.solver, &cfg.thresholds);
    if found.len() < count {
        bail!(
            "found {} of {count} `{label}` endpoints in {} draws",
            found.len(),
            cfg.endpoints.max_draws
        );
    }
    Ok(found)
}

fn resolve(ctx: &Ctx<'_>, e: &Endpoint, seed: u64) -> Result<HamiltonianParams> {
    match e {
        Endpoint::Params(p) => Ok(*p),
        Endpoint::Direction(d) => Endpoint::direction(d).ok_or_else(|| anyhow!("unknown direction `{d}`")),
        Endpoint::Region(r) => Ok(region_endpoints(ctx, r, 1, seed)?[0]),
    }
}

fn endpoints(ctx: &Ctx<'_>) -> Result<(HamiltonianParams, HamiltonianParams)> {
    let e = &ctx.cfg.endpoints;
    Ok((
        resolve(ctx, &e.initial, ctx.cfg.seed)?,
        resolve(ctx, &e.final_, ctx.cfg.seed.wrapping_add(1))?,
    ))
}

fn one_trajectory(
    cfg: &RunConfig,
    n: usize,
    pi: &HamiltonianParams,
    pf: &HamiltonianParams,
) -> Result<TrajectoryRecord> {
    let m = model(cfg, n, &[*pi, *pf])?;
    run_trajectory(&m, pi, pf, &cfg.trajectory_for(n)).map_err(|e| anyhow!("trajectory at N = {n}: {e}"))
}

fn note_failures(failures: &mut Vec<String>, r: &TrajectoryRecord) {
    for (chi, e) in &r.failures {
        failures.push(format!("N = {} trajectory at chi {chi}: {e}", r.particles));
    }
}

fn trajectory(ctx: &mut Ctx<'_>) -> Result<()> {
    let (pi, pf) = endpoints(ctx)?;
    let r = one_trajectory(ctx.cfg, ctx.cfg.n_particles, &pi, &pf)?;
    note_failures(&mut ctx.failures, &r);
    ctx.out.write_csv("trajectory.csv", "trajectory", TRAJECTORY_HEADER, &trajectory_rows(&r))?;
    ctx.out.write_json("trajectory_summary.json", "trajectory-summary", &trajectory_summary(&r))?;
    Ok(())
}

fn ensemble(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let n = cfg.n_particles;
    let count = cfg.ensemble.count;
    let starts = region_endpoints(ctx, &cfg.ensemble.from, count, cfg.seed)?;
    let ends = region_endpoints(ctx, &cfg.ensemble.to, count, cfg.seed.wrapping_add(1))?;
    let pairs: Vec<(HamiltonianParams, HamiltonianParams)> = starts.into_iter().zip(ends).collect();
    let m = model(cfg, n, &[])?;
    let tcfg = cfg.trajectory_for(n);
    let results: Vec<Result<TrajectoryRecord, String>> = ctx.pool.install(|| {
        pairs
            .par_iter()
            .map(|(a, b)| run_trajectory(&m, a, b, &tcfg).map_err(|e| e.to_string()))
            .collect()
    });
    let mut records = Vec::with_capacity(results.len());
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(r) => {
                note_failures(&mut ctx.failures, &r);
                if cfg.ensemble.write_trajectories {
                    let name = format!("trajectories/traj_{k:03}.csv");
                    ctx.out.write_csv(&name, "trajectory", TRAJECTORY_HEADER, &trajectory_rows(&r))?;
                }
                records.push(r);
            }
            Err(e) => ctx.failures.push(format!("trajectory {k}: {e}")),
        }
    }
    let (stats, error) = match ensemble_stats(&records) {
        Ok(s) => (Some(s), None),
        Err(e) => {
            ctx.failures.push(format!("ensemble statistics: {e}"));
            (None, Some(e.to_string()))
        }
    };
    let summary = EnsembleSummary {
        n_particles: n,
        from: cfg.ensemble.from.clone(),
        to: cfg.ensemble.to.clone(),
        label_particles: cfg.endpoints.label_particles,
        stats,
        error,
        trajectories: records.iter().map(trajectory_summary).collect(),
    };
    ctx.out.write_json("ensemble_stats.json", "ensemble-stats", &summary)?;
    Ok(())
}

fn derivatives(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let mut particles = cfg.derivatives.particles.clone();
    if particles.is_empty() {
        particles.push(cfg.n_particles);
    }
    let (pi, pf) = endpoints(ctx)?;
    let runs: Vec<Result<TrajectoryRecord>> = ctx
        .pool
        .install(|| particles.par_iter().map(|&n| one_trajectory(cfg, n, &pi, &pf)).collect());
    let mut records = Vec::with_capacity(runs.len());
    for r in runs {
        let r = r?;
        note_failures(&mut ctx.failures, &r);
        let name = format!("derivatives_n{}.csv", r.particles);
        ctx.out.write_csv(&name, "derivatives", DERIVATIVES_HEADER, &derivative_rows(&r))?;
        records.push(r);
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by_key(|&k| records[k].particles);
    let maxima: Vec<Option<f64>> = order.iter().map(|&k| records[k].max_abs_d2e()).collect();
    let increasing = maxima.windows(2).all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if b > a));
    let summary = DerivativesSummary {
        particles: order.iter().map(|&k| records[k].particles).collect(),
        params_i: pi,
        params_f: pf,
        max_abs_d2e: maxima,
        d2e_strictly_increasing: increasing,
        runs: order.iter().map(|&k| trajectory_summary(&records[k])).collect(),
    };
    ctx.out.write_json("derivatives_summary.json", "derivatives-summary", &summary)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnihilationCheck {
    pub kind: AnsatzKind,
    pub conventions: Conventions,
    pub draws: usize,
    pub max_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MappingCheck {
    pub states: usize,
    pub max_abs_difference: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub n_particles: usize,
    pub tolerance: f64,
    pub annihilation: Vec<AnnihilationCheck>,
    pub mapping: Option<MappingCheck>,
    pub class_algebra: Option<ClassAlgebraReport>,
    pub crossing: Option<CrossingScan>,
    pub pass: bool,
}

/// Largest `N` for which the direct `²G` construction is attempted.
const MAPPING_MAX_PARTICLES: usize = 6;
/// Largest `N` for the exhaustive class tables.
const CLASS_MAX_PARTICLES: usize = 10;
const IDENTITY_TOL: f64 = 1e-10;
const MAPPING_TOL: f64 = 1e-12;

/// `‖Ĝ v‖` over random `(c1, c2)` on the unit circle for both beta kinds,
/// under every phase and pair-count convention.
pub fn annihilation_checks(n: usize, draws: usize, seed: u64) -> Result<Vec<AnnihilationCheck>> {
    let basis = SectorBasis::enumerate(n, None)?;
    let g = build_g_pair(&basis);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angles: Vec<f64> = (0..draws).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    let mut out = Vec::new();
    for kind in [AnsatzKind::Beta1, AnsatzKind::Beta2] {
        for pair_count in [PairCount::Upper, PairCount::Lower] {
            for order in [PhaseOrder::Column, PhaseOrder::Ascending] {
                let conv = Conventions { pair_count, order };
                let mut worst = 0.0f64;
                for &t in &angles {
                    let s = build_ansatz(kind, t.cos(), t.sin(), &basis, conv)?;
                    worst = worst.max(verify_annihilation(&s, &g)?);
                }
                out.push(AnnihilationCheck {
                    kind,
                    conventions: conv,
                    draws,
                    max_residual: worst,
                    pass: worst <= IDENTITY_TOL,
                });
            }
        }
    }
    Ok(out)
}

/// Elementwise `|map(²D, ¹D) − ²G|` over ground states at random sphere
/// directions.
pub fn mapping_check(n: usize, states: usize, seed: u64, solver: &fecx_core::eigen::SolverConfig) -> Result<MappingCheck> {
    let m = Model::new(n, fecx_core::model::Blocking::Parity)?;
    let mut worst = 0.0f64;
    for p in sphere_directions(states, seed) {
        let sol = m.solve(&p, solver, None)?;
        let (s, v) = sol.ground_members()[0];
        let basis = &m.sectors()[s].basis;
        let vs = [v.to_vec()];
        let ens = Ensemble::new(basis, &vs, None)?;
        let mapped = map_d_to_g(&two_rdm(basis, &ens), &one_rdm(basis, &ens))?;
        let direct = direct_g(basis, &ens);
        for (a, b) in mapped.matrix.data.iter().zip(&direct.matrix.data) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(MappingCheck {
        states,
        max_abs_difference: worst,
        pass: worst <= MAPPING_TOL,
    })
}

fn verify(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let v = &cfg.verify;
    let n = cfg.n_particles;
    let annihilation = annihilation_checks(n, v.coefficient_draws, cfg.seed)?;
    let mapping = if n <= MAPPING_MAX_PARTICLES && v.mapping_states > 0 {
        Some(mapping_check(n, v.mapping_states, cfg.seed, &cfg.solver)?)
    } else {
        None
    };
    let class_algebra = if v.class_algebra && n <= CLASS_MAX_PARTICLES {
        Some(class_algebra_report(n)?)
    } else {
        None
    };
    let crossing = if v.crossing_scan {
        let m = model(cfg, n, &[])?;
        Some(level_crossing_scan(&m, v.crossing_grid, &cfg.solver)?)
    } else {
        None
    };
    let mut pass = true;
    for a in annihilation.iter().filter(|a| !a.pass) {
        pass = false;
        ctx.failures.push(format!(
            "annihilation {} {:?}: residual {:e}",
            a.kind.as_str(),
            a.conventions,
            a.max_residual
        ));
    }
    if let Some(m) = mapping.as_ref().filter(|m| !m.pass) {
        pass = false;
        ctx.failures.push(format!("mapping identity: difference {:e}", m.max_abs_difference));
    }
    if let Some(c) = &class_algebra {
        if c.max_cross_j > 1e-12 || c.max_unclassified > 1e-12 {
            pass = false;
            ctx.failures.push("class algebra: Ĝ leaves the class families".into());
        }
    }
    let report = VerifyReport {
        n_particles: n,
        tolerance: IDENTITY_TOL,
        annihilation,
        mapping,
        class_algebra,
        crossing,
        pass,
    };
    ctx.out.write_json("verify_report.json", "verify-report", &report)?;
    if v.export_operators {
        export_operators(ctx)?;
    }
    if v.export_rdms {
        export_rdms(ctx)?;
    }
    Ok(())
}

fn export_operators(ctx: &mut Ctx<'_>) -> Result<()> {
    let m = model(ctx.cfg, ctx.cfg.n_particles, &[])?;
    for (k, s) in m.sectors().iter().enumerate() {
        for t in Term::ALL {
            let name = format!("operators/{}_sector{k}.txt", t.name());
            ctx.out.write_triples(&name, "operator", s.terms.term(t).triples())?;
        }
    }
    Ok(())
}

fn export_rdms(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let p = cfg.verify.rdm_point;
    let m = model(cfg, cfg.n_particles, &[p])?;
    let sol = m.solve(&p, &cfg.solver, None)?;
    let r = m.rdms(&sol, cfg.selection);
    ctx.out.write_triples("rdms/one_rdm.txt", "rdm", r.one.matrix.triples(0.0))?;
    ctx.out.write_triples("rdms/two_rdm.txt", "rdm", r.two.matrix.triples(0.0))?;
    ctx.out.write_triples("rdms/g_tilde.txt", "rdm", r.g_tilde.matrix.triples(0.0))?;
    let obs = m.observables(&sol, cfg.selection, false);
    #[derive(Serialize)]
    struct RdmRecord {
        params: HamiltonianParams,
        energy: f64,
        #[serde(rename = "lambda_D")]
        lambda_d: f64,
        #[serde(rename = "lambda_G")]
        lambda_g: f64,
        coords: fecx_core::rdm::Coords,
        degeneracy: usize,
    }
    ctx.out.write_json(
        "rdms/rdm_set.json",
        "rdm",
        &RdmRecord {
            params: p,
            energy: obs.energy,
            lambda_d: r.lambda_d,
            lambda_g: r.lambda_g,
            coords: obs.coords,
            degeneracy: obs.degeneracy,
        },
    )?;
    Ok(())
}
