//! Lowest eigenpairs of real symmetric operators.
//!
//! Small problems are diagonalized densely. Larger ones use a restarted block
//! Krylov iteration with full reorthogonalization and locking of converged
//! pairs; the expansion vectors are the Ritz residuals, which keeps every
//! basis vector inside the block Krylov space of the start vectors.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{axpy, dot, norm, normalize, orthogonalize, LinearOperator};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SolverConfig {
    /// Number of lowest eigenpairs requested (raised to at least 2).
    pub k: usize,
    pub deg_tol: f64,
    /// Relative residual target: `‖Hv − Ev‖ ≤ tol · max(1, |E|)`.
    pub tol: f64,
    /// Dimensions up to this size are diagonalized densely.
    pub dense_threshold: usize,
    /// Krylov runs on dimensions up to this size fall back to dense
    /// diagonalization when they fail or meet a ground cluster wider than
    /// half the basis.
    pub dense_fallback: usize,
    pub block: usize,
    /// Largest basis kept between restarts.
    pub max_basis: usize,
    pub max_matvecs: usize,
    /// Always run a deflated probe from a fresh random vector after the
    /// requested pairs converge. Without it the probe only runs when a
    /// degenerate cluster fills the whole block or guesses were given.
    pub probe: bool,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 4,
            deg_tol: 1e-8,
            tol: 1e-9,
            dense_threshold: 200,
            dense_fallback: 2000,
            block: 4,
            max_basis: 40,
            max_matvecs: 40_000,
            probe: false,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    EmptyOperator,
    DimensionMismatch { expected: usize, found: usize },
    NotConverged { best_residual: f64, matvecs: usize },
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::EmptyOperator => f.write_str("operator has dimension zero"),
            SolverError::DimensionMismatch { expected, found } => {
                write!(f, "start vector has length {found}, expected {expected}")
            }
            SolverError::NotConverged {
                best_residual,
                matvecs,
            } => write!(
                f,
                "eigensolver did not converge after {matvecs} products (best residual {best_residual:e})"
            ),
        }
    }
}

impl core::error::Error for SolverError {}

/// Bottom of the spectrum with the detected ground degeneracy.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundSolution {
    pub energies: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub degeneracy: usize,
    /// `energies[d] − energies[0]`; `None` when every returned level is degenerate.
    pub gap: Option<f64>,
    pub matvecs: usize,
    pub dense: bool,
}

impl GroundSolution {
    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn ground_vectors(&self) -> &[Vec<f64>] {
        &self.vectors[..self.degeneracy]
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    fn from_pairs(mut pairs: Vec<Pair>, k: usize, deg_tol: f64, matvecs: usize, dense: bool) -> Self {
        pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
        let e0 = pairs[0].value;
        let degeneracy = pairs.iter().filter(|p| p.value - e0 <= deg_tol).count();
        let keep = k.max(degeneracy + 1).min(pairs.len());
        pairs.truncate(keep);
        let gap = pairs.get(degeneracy).map(|p| p.value - e0);
        let mut s = GroundSolution {
            energies: Vec::with_capacity(keep),
            vectors: Vec::with_capacity(keep),
            residuals: Vec::with_capacity(keep),
            degeneracy,
            gap,
            matvecs,
            dense,
        };
        for p in pairs {
            s.energies.push(p.value);
            s.vectors.push(p.vector);
            s.residuals.push(p.residual);
        }
        s
    }
}

#[derive(Debug, Clone)]
struct Pair {
    value: f64,
    vector: Vec<f64>,
    residual: f64,
}

/// Lowest `cfg.k` eigenpairs of `op`.
pub fn ground_subspace<A: LinearOperator + ?Sized>(
    op: &A,
    cfg: &SolverConfig,
) -> Result<GroundSolution, SolverError> {
    ground_subspace_from(op, cfg, &[])
}

/// As [`ground_subspace`], seeding the iteration with `guesses` (for example
/// the ground subspace of a neighbouring parameter point).
pub fn ground_subspace_from<A: LinearOperator + ?Sized>(
    op: &A,
    cfg: &SolverConfig,
    guesses: &[Vec<f64>],
) -> Result<GroundSolution, SolverError> {
    let n = op.dim();
    if n == 0 {
        return Err(SolverError::EmptyOperator);
    }
    if let Some(g) = guesses.iter().find(|g| g.len() != n) {
        return Err(SolverError::DimensionMismatch {
            expected: n,
            found: g.len(),
        });
    }
    let k = cfg.k.max(2).min(n);
    if n <= cfg.dense_threshold {
        return Ok(dense_solve(op, k, cfg.deg_tol));
    }
    match KrylovRun::new(op, cfg).solve(k, guesses) {
        Err(SolverError::NotConverged { matvecs, .. }) if n <= cfg.dense_fallback => {
            let mut s = dense_solve(op, k, cfg.deg_tol);
            s.matvecs += matvecs;
            Ok(s)
        }
        r => r,
    }
}

/// Residual `‖A v − θ v‖`.
pub fn residual<A: LinearOperator + ?Sized>(op: &A, value: f64, v: &[f64]) -> f64 {
    let mut av = vec![0.0; v.len()];
    op.apply(v, &mut av);
    axpy(-value, v, &mut av);
    norm(&av)
}

/// Dense row-major copy of `op`, column by column.
pub fn to_dense<A: LinearOperator + ?Sized>(op: &A) -> Vec<f64> {
    let n = op.dim();
    let mut m = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            m[i * n + j] = col[i];
        }
    }
    m
}

/// Full spectrum with eigenvectors, ascending.
pub fn dense_eigen(n: usize, data: &[f64]) -> Vec<(f64, Vec<f64>)> {
    let (vals, vecs) = crate::linalg::symmetric_eigen(n, data);
    vals.into_iter()
        .enumerate()
        .map(|(j, v)| (v, vecs[j * n..(j + 1) * n].to_vec()))
        .collect()
}

fn dense_solve<A: LinearOperator + ?Sized>(op: &A, k: usize, deg_tol: f64) -> GroundSolution {
    let n = op.dim();
    let spectrum = dense_eigen(n, &to_dense(op));
    let e0 = spectrum[0].0;
    let degeneracy = spectrum.iter().filter(|p| p.0 - e0 <= deg_tol).count();
    let keep = k.max(degeneracy + 1).min(n);
    let pairs = spectrum
        .into_iter()
        .take(keep)
        .map(|(value, vector)| {
            let r = residual(op, value, &vector);
            Pair {
                value,
                vector,
                residual: r,
            }
        })
        .collect();
    GroundSolution::from_pairs(pairs, k, deg_tol, n, true)
}

struct KrylovRun<'a, A: ?Sized> {
    op: &'a A,
    cfg: &'a SolverConfig,
    n: usize,
    rng: ChaCha8Rng,
    matvecs: usize,
    best_residual: f64,
}

impl<'a, A: LinearOperator + ?Sized> KrylovRun<'a, A> {
    fn new(op: &'a A, cfg: &'a SolverConfig) -> Self {
        KrylovRun {
            op,
            cfg,
            n: op.dim(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            matvecs: 0,
            best_residual: f64::INFINITY,
        }
    }

    fn random_vector(&mut self) -> Vec<f64> {
        (0..self.n).map(|_| self.rng.gen_range(-1.0..1.0)).collect()
    }

    fn start_block(&mut self, guesses: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let b = self.cfg.block.max(1);
        let mut block: Vec<Vec<f64>> = guesses.to_vec();
        if block.is_empty() {
            let scale = 1.0 / libm::sqrt(self.n as f64);
            let mut v: Vec<f64> = vec![scale; self.n];
            for x in v.iter_mut() {
                *x += 1e-6 * self.rng.gen_range(-1.0..1.0);
            }
            block.push(v);
        }
        while block.len() < b.max(guesses.len() + 1) {
            let v = self.random_vector();
            block.push(v);
        }
        block
    }

    fn solve(mut self, k: usize, guesses: &[Vec<f64>]) -> Result<GroundSolution, SolverError> {
        let mut locked: Vec<Pair> = Vec::new();
        let starts = self.start_block(guesses);
        self.lock_lowest(&mut locked, k, starts)?;
        loop {
            locked.sort_by(|a, b| a.value.total_cmp(&b.value));
            let e0 = locked[0].value;
            let cluster = locked
                .iter()
                .filter(|p| p.value - e0 <= self.cfg.deg_tol)
                .count();
            if locked.len() >= self.n {
                break;
            }
            if cluster >= locked.len() {
                if cluster > self.cfg.max_basis / 2 && self.n <= self.cfg.dense_fallback {
                    // locking a wide multiplet one vector at a time costs
                    // more than the dense problem
                    let mut s = dense_solve(self.op, k, self.cfg.deg_tol);
                    s.matvecs += self.matvecs;
                    return Ok(s);
                }
                // every level found is degenerate: look further up
                let more = k.min(self.n - locked.len());
                let starts = (0..self.cfg.block.max(1)).map(|_| self.random_vector()).collect();
                self.lock_lowest(&mut locked, more, starts)?;
                continue;
            }
            // guesses that are exact eigenvectors of an excited level converge
            // at once and would hide the true ground level, so seeded runs
            // always probe
            let largest_cluster = max_cluster(&locked, self.cfg.deg_tol);
            let probe = self.cfg.probe || !guesses.is_empty();
            if !(probe || largest_cluster >= self.cfg.block.max(1)) {
                break;
            }
            let top = locked[k.min(locked.len()) - 1].value;
            let before = locked.len();
            let starts = vec![self.random_vector(), self.random_vector()];
            self.lock_lowest(&mut locked, 1, starts)?;
            let found = locked[before].value;
            if found >= top - self.cfg.deg_tol {
                locked.pop();
                break;
            }
        }
        Ok(GroundSolution::from_pairs(
            locked,
            k,
            self.cfg.deg_tol,
            self.matvecs,
            false,
        ))
    }

    fn apply(&mut self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.op.apply(x, &mut y);
        self.matvecs += 1;
        y
    }

    /// Adds `count` eigenpairs orthogonal to `locked`.
    fn lock_lowest(
        &mut self,
        locked: &mut Vec<Pair>,
        count: usize,
        starts: Vec<Vec<f64>>,
    ) -> Result<(), SolverError> {
        let target = locked.len() + count;
        let block = self.cfg.block.max(1);
        let max_basis = self.cfg.max_basis.max(2 * block + count + 2);
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut images: Vec<Vec<f64>> = Vec::new();
        let mut h: Vec<f64> = Vec::new(); // row-major, stride max_basis

        let mut pending = starts;
        loop {
            // expand with pending vectors
            let mut added = 0;
            for mut v in core::mem::take(&mut pending) {
                if basis.len() >= max_basis {
                    break;
                }
                let before = norm(&v);
                if before == 0.0 {
                    continue;
                }
                orthogonalize(&mut v, locked.iter().map(|p| p.vector.as_slice()));
                orthogonalize(&mut v, basis.iter().map(Vec::as_slice));
                if normalize(&mut v) <= 1e-10 * before {
                    continue;
                }
                let av = self.apply(&v);
                if h.is_empty() {
                    h = vec![0.0; max_basis * max_basis];
                }
                let j = basis.len();
                basis.push(v);
                for i in 0..=j {
                    let x = dot(&basis[i], &av);
                    h[i * max_basis + j] = x;
                    h[j * max_basis + i] = x;
                }
                images.push(av);
                added += 1;
            }
            if added == 0 && basis.len() + locked.len() < self.n && basis.len() < max_basis {
                // invariant subspace reached without the wanted levels
                let v = self.random_vector();
                pending.push(v);
                continue;
            }

            let m = basis.len();
            let (theta, s) = small_eigen(&h, max_basis, m);
            let wanted = (target - locked.len()).min(m);

            // Ritz pairs of the lowest wanted levels
            let expand = (wanted + block).min(m);
            let ys = combine_many(&basis, &s, m, 0..expand, self.n);
            let mut rs = combine_many(&images, &s, m, 0..expand, self.n);
            let mut ritz: Vec<(f64, Vec<f64>, Vec<f64>, f64)> = Vec::with_capacity(expand);
            for (c, (y, mut r)) in ys.into_iter().zip(rs.drain(..)).enumerate() {
                axpy(-theta[c], &y, &mut r);
                // residual of the deflated problem; the locked vectors carry
                // residuals of their own that would otherwise set a floor
                orthogonalize(&mut r, locked.iter().map(|p| p.vector.as_slice()));
                let rn = norm(&r);
                ritz.push((theta[c], y, r, rn));
            }

            // lock the converged prefix
            let mut nlock = 0;
            for (t, _, _, rn) in ritz.iter().take(wanted) {
                if *rn <= self.cfg.tol * 0.5 * libm::fmax(1.0, t.abs()) {
                    nlock += 1;
                } else {
                    break;
                }
            }
            let full_space = m + locked.len() >= self.n;
            if let Some((t, _, _, rn)) = ritz.get(nlock) {
                if nlock < wanted {
                    self.best_residual = libm::fmin(self.best_residual, rn / libm::fmax(1.0, t.abs()));
                }
            }
            if full_space {
                // exhausted space: every Ritz pair is exact up to roundoff
                nlock = wanted;
            }
            let newly: Vec<(f64, Vec<f64>, Vec<f64>, f64)> = ritz.drain(..nlock).collect();
            for (value, vector, _, rn) in newly {
                locked.push(Pair {
                    value,
                    vector,
                    residual: rn,
                });
            }
            if locked.len() >= target {
                return Ok(());
            }
            if self.matvecs >= self.cfg.max_matvecs {
                return Err(SolverError::NotConverged {
                    best_residual: self.best_residual,
                    matvecs: self.matvecs,
                });
            }

            // residual directions of the lowest unconverged levels
            pending = ritz
                .iter()
                .take(block)
                .filter(|r| r.3 > 0.0)
                .map(|r| r.2.clone())
                .collect();

            if nlock > 0 || m + pending.len() > max_basis {
                // restart on the remaining Ritz vectors, which are already
                // orthogonal to the ones just locked
                let keep = (max_basis / 2).max(wanted - nlock + block).min(m - nlock);
                let nb = combine_many(&basis, &s, m, nlock..nlock + keep, self.n);
                for x in h.iter_mut() {
                    *x = 0.0;
                }
                images = combine_many(&images, &s, m, nlock..nlock + keep, self.n);
                basis = nb;
                for (i, c) in (nlock..nlock + keep).enumerate() {
                    h[i * max_basis + i] = theta[c];
                }
            }
        }
    }
}

fn max_cluster(sorted: &[Pair], tol: f64) -> usize {
    let mut best = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].value - sorted[i].value <= tol {
            j += 1;
        }
        best = best.max(j - i);
        i = j;
    }
    best
}

/// `Σ_i s[c·m + i] v_i` for every `c` in `cols`. The vectors are streamed
/// once in row chunks rather than once per combination.
fn combine_many(
    vectors: &[Vec<f64>],
    s: &[f64],
    m: usize,
    cols: core::ops::Range<usize>,
    n: usize,
) -> Vec<Vec<f64>> {
    const CHUNK: usize = 512;
    let mut out: Vec<Vec<f64>> = cols.clone().map(|_| vec![0.0; n]).collect();
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        for (i, v) in vectors.iter().enumerate().take(m) {
            let src = &v[start..end];
            for (o, c) in out.iter_mut().zip(cols.clone()) {
                let a = s[c * m + i];
                if a != 0.0 {
                    for (d, x) in o[start..end].iter_mut().zip(src) {
                        *d += a * x;
                    }
                }
            }
        }
        start = end;
    }
    out
}

/// Eigen-decomposition of the leading `m × m` block of `h`; eigenvector `c`
/// occupies `s[c*m..(c+1)*m]`.
fn small_eigen(h: &[f64], stride: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut block = Vec::with_capacity(m * m);
    for i in 0..m {
        block.extend_from_slice(&h[i * stride..i * stride + m]);
    }
    crate::linalg::symmetric_eigen(m, &block)
}
