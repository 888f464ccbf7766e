//! Reduced density matrices and the condensation signatures derived from them.
//!
//! Conventions, with `r = 2N` orbitals:
//!
//! * `¹D^i_j = ⟨a†_i a_j⟩`, trace `N`.
//! * `²D^{i,j}_{k,l} = ⟨a†_i a†_j a_l a_k⟩` stored on geminals `i < j`,
//!   `k < l`, trace `N(N−1)/2`. A determinant has `λ_D = 1`.
//! * `²G^{i,j}_{k,l} = ⟨a†_i a_j a†_l a_k⟩` on particle-hole pairs, row
//!   `i·r + j`, column `k·r + l`.
//! * `G̃ = ²G − ¹D^i_j ¹D^l_k`. For a pure state it is the Gram matrix of
//!   the vectors `a†_l a_k|Ψ⟩` projected off `|Ψ⟩`, so every particle-hole
//!   excitation of a determinant contributes an eigenvalue 1.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::fock::{combinations, SectorBasis};
use crate::hamiltonian::{HamiltonianParams, ModelTerms};
use crate::linalg::{dot, largest_symmetric_eigenvalue, quadratic_form};

#[derive(Debug, Clone, PartialEq)]
pub enum RdmError {
    Empty,
    WeightMismatch { vectors: usize, weights: usize },
    InvalidWeights,
    NotNormalized { index: usize, norm: f64 },
    DimensionMismatch { expected: usize, found: usize },
    ShapeMismatch,
}

impl fmt::Display for RdmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RdmError::Empty => f.write_str("no state vectors given"),
            RdmError::WeightMismatch { vectors, weights } => {
                write!(f, "{weights} weights for {vectors} vectors")
            }
            RdmError::InvalidWeights => f.write_str("weights must be nonnegative and sum to 1"),
            RdmError::NotNormalized { index, norm } => {
                write!(f, "vector {index} has norm {norm}, expected 1")
            }
            RdmError::DimensionMismatch { expected, found } => {
                write!(f, "vector length {found} does not match basis dimension {expected}")
            }
            RdmError::ShapeMismatch => f.write_str("matrices belong to different orbital counts"),
        }
    }
}

impl core::error::Error for RdmError {}

/// Validated mixture `Σ_k w_k |v_k⟩⟨v_k|`.
#[derive(Debug, Clone, Copy)]
pub struct Ensemble<'a> {
    vectors: &'a [Vec<f64>],
    weights: Option<&'a [f64]>,
}

const NORM_TOL: f64 = 1e-8;

impl<'a> Ensemble<'a> {
    /// Equal weights when `weights` is `None`.
    pub fn new(
        basis: &SectorBasis,
        vectors: &'a [Vec<f64>],
        weights: Option<&'a [f64]>,
    ) -> Result<Self, RdmError> {
        Self::with_dim(basis.len(), vectors, weights)
    }

    pub fn with_dim(
        dim: usize,
        vectors: &'a [Vec<f64>],
        weights: Option<&'a [f64]>,
    ) -> Result<Self, RdmError> {
        if vectors.is_empty() {
            return Err(RdmError::Empty);
        }
        if let Some(w) = weights {
            if w.len() != vectors.len() {
                return Err(RdmError::WeightMismatch {
                    vectors: vectors.len(),
                    weights: w.len(),
                });
            }
            let total: f64 = w.iter().sum();
            if w.iter().any(|x| !(*x >= 0.0)) || (total - 1.0).abs() > 1e-10 {
                return Err(RdmError::InvalidWeights);
            }
        }
        for (index, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(RdmError::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            let norm = libm::sqrt(dot(v, v));
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(RdmError::NotNormalized { index, norm });
            }
        }
        Ok(Ensemble { vectors, weights })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn weight(&self, k: usize) -> f64 {
        match self.weights {
            Some(w) => w[k],
            None => 1.0 / self.vectors.len() as f64,
        }
    }

    pub fn members(&self) -> impl Iterator<Item = (f64, &'a [f64])> + '_ {
        let v = self.vectors;
        (0..v.len()).map(move |k| (self.weight(k), v[k].as_slice()))
    }

    /// `Σ_k w_k ⟨v_k|A|v_k⟩`.
    pub fn expectation<A: crate::linalg::LinearOperator + ?Sized>(&self, op: &A) -> f64 {
        self.members().map(|(w, v)| w * quadratic_form(op, v)).sum()
    }
}

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.dim + c]
    }

    #[inline]
    fn add(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.dim + c] += v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for r in 0..self.dim {
            for c in 0..r {
                m = m.max((self.get(r, c) - self.get(c, r)).abs());
            }
        }
        m
    }

    pub fn largest_eigenvalue(&self) -> f64 {
        largest_symmetric_eigenvalue(self.dim, &self.data)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        crate::linalg::symmetric_eigenvalues(self.dim, &self.data)
    }

    /// Nonzero entries as `(row, col, value)`, row-major.
    pub fn triples(&self, cutoff: f64) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let d = self.dim;
        self.data
            .iter()
            .enumerate()
            .filter(move |(_, v)| v.abs() > cutoff)
            .map(move |(k, &v)| (k / d, k % d, v))
    }

    fn mirror_upper(&mut self) {
        for r in 0..self.dim {
            for c in 0..r {
                let v = self.get(c, r);
                self.data[r * self.dim + c] = v;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneRdm {
    pub orbitals: usize,
    pub matrix: Matrix,
}

impl OneRdm {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }
}

/// Index of geminal `(i, j)`, `i < j`, in lexicographic order.
#[inline]
pub fn geminal_index(orbitals: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < orbitals);
    i * (2 * orbitals - i - 1) / 2 + (j - i - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoRdm {
    pub orbitals: usize,
    pub matrix: Matrix,
}

impl TwoRdm {
    /// `⟨a†_i a†_j a_l a_k⟩` for arbitrary orbital labels.
    pub fn element(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        if i == j || k == l {
            return 0.0;
        }
        let (a, sa) = if i < j { (geminal_index(self.orbitals, i, j), 1.0) } else { (geminal_index(self.orbitals, j, i), -1.0) };
        let (b, sb) = if k < l { (geminal_index(self.orbitals, k, l), 1.0) } else { (geminal_index(self.orbitals, l, k), -1.0) };
        sa * sb * self.matrix.get(a, b)
    }

    pub fn lambda(&self) -> f64 {
        self.matrix.largest_eigenvalue()
    }

    /// `(⟨Λ̂⟩, ⟨Ŵ⟩, ⟨Ĝ⟩)` by contraction with the two-body terms.
    pub fn contract_terms(&self) -> Coords {
        let n = self.orbitals / 2;
        let mut l = 0.0;
        let mut w = 0.0;
        let mut g = 0.0;
        for p in 0..n {
            for q in 0..n {
                l += self.element(p, q, p + n, q + n) + self.element(p + n, q + n, p, q);
                w += self.element(p + n, q, p, q + n);
                g += self.element(2 * p, 2 * p + 1, 2 * q, 2 * q + 1);
            }
        }
        Coords {
            lambda: l,
            w,
            g,
        }
    }

    /// `¹D` recovered by partial trace, `¹D^i_k = Σ_j ²D^{i,j}_{k,j} / (N − 1)`.
    pub fn partial_trace(&self, particles: usize) -> OneRdm {
        let r = self.orbitals;
        let mut m = Matrix::zeros(r);
        let scale = 1.0 / (particles as f64 - 1.0);
        for i in 0..r {
            for k in 0..r {
                let s: f64 = (0..r).map(|j| self.element(i, j, k, j)).sum();
                m.add(i, k, s * scale);
            }
        }
        OneRdm {
            orbitals: r,
            matrix: m,
        }
    }
}

/// Particle-hole matrix over pairs `(i, j)`, row index `i·r + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleHoleMatrix {
    pub orbitals: usize,
    pub matrix: Matrix,
}

impl ParticleHoleMatrix {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let r = self.orbitals;
        self.matrix.get(i * r + j, k * r + l)
    }

    pub fn lambda(&self) -> f64 {
        self.matrix.largest_eigenvalue()
    }
}

/// `²G^{i,j}_{k,l} = δ_jl ¹D^i_k − ²D^{i,l}_{k,j}`.
pub fn map_d_to_g(two: &TwoRdm, one: &OneRdm) -> Result<ParticleHoleMatrix, RdmError> {
    if two.orbitals != one.orbitals {
        return Err(RdmError::ShapeMismatch);
    }
    let r = two.orbitals;
    let mut m = Matrix::zeros(r * r);
    for i in 0..r {
        for j in 0..r {
            for k in 0..r {
                for l in 0..r {
                    let mut v = -two.element(i, l, k, j);
                    if j == l {
                        v += one.get(i, k);
                    }
                    m.data[(i * r + j) * r * r + k * r + l] = v;
                }
            }
        }
    }
    Ok(ParticleHoleMatrix {
        orbitals: r,
        matrix: m,
    })
}

/// `²G` straight from its definition, as the Gram matrix of the vectors
/// `a†_l a_k|Ψ⟩` on the full `N`-particle sector. Cost grows as `r⁴·dim`;
/// meant for checking [`map_d_to_g`] on small systems.
pub fn direct_g(basis: &SectorBasis, ens: &Ensemble<'_>) -> ParticleHoleMatrix {
    let r = basis.orbitals();
    let full = crate::fock::binomial(r, basis.particles()) as usize;
    let mut m = Matrix::zeros(r * r);
    let mut hops = vec![0.0; r * r * full];
    for (w, v) in ens.members() {
        hops.iter_mut().for_each(|x| *x = 0.0);
        for (idx, s) in basis.states().iter().enumerate() {
            let c = v[idx];
            if c == 0.0 {
                continue;
            }
            let bits = s.bits();
            for k in 0..r {
                if bits & (1 << k) == 0 {
                    continue;
                }
                for l in 0..r {
                    let (t, sign) = if l == k {
                        (bits, 1.0)
                    } else if bits & (1 << l) != 0 {
                        continue;
                    } else {
                        (bits ^ (1 << k) ^ (1 << l), crate::fock::hop_sign(bits, l, k))
                    };
                    hops[(k * r + l) * full + crate::fock::colex_rank(t)] += sign * c;
                }
            }
        }
        for a in 0..r * r {
            let x = &hops[a * full..(a + 1) * full];
            for b in a..r * r {
                let g = w * dot(x, &hops[b * full..(b + 1) * full]);
                m.add(a, b, g);
                if a != b {
                    m.add(b, a, g);
                }
            }
        }
    }
    ParticleHoleMatrix {
        orbitals: r,
        matrix: m,
    }
}

/// `G̃ = ²G − ¹D^i_j ¹D^l_k`.
pub fn modified_g(g: &ParticleHoleMatrix, one: &OneRdm) -> Result<ParticleHoleMatrix, RdmError> {
    if g.orbitals != one.orbitals {
        return Err(RdmError::ShapeMismatch);
    }
    let r = g.orbitals;
    let mut m = g.matrix.clone();
    for i in 0..r {
        for j in 0..r {
            let a = one.get(i, j);
            if a == 0.0 {
                continue;
            }
            for k in 0..r {
                for l in 0..r {
                    m.data[(i * r + j) * r * r + k * r + l] -= a * one.get(l, k);
                }
            }
        }
    }
    Ok(ParticleHoleMatrix {
        orbitals: r,
        matrix: m,
    })
}

/// `¹D` of an ensemble, accumulated state by state.
pub fn one_rdm(basis: &SectorBasis, ens: &Ensemble<'_>) -> OneRdm {
    let r = basis.orbitals();
    let mut m = Matrix::zeros(r);
    let full = (1u64 << r) - 1;
    for (w, v) in ens.members() {
        for (idx, s) in basis.states().iter().enumerate() {
            let c = v[idx];
            if c == 0.0 {
                continue;
            }
            let bits = s.bits();
            let mut occ = bits;
            while occ != 0 {
                let j = occ.trailing_zeros() as usize;
                occ &= occ - 1;
                m.add(j, j, w * c * c);
                let mut empty = !bits & full as u32;
                while empty != 0 {
                    let i = empty.trailing_zeros() as usize;
                    empty &= empty - 1;
                    if i < j {
                        continue;
                    }
                    let t = bits ^ (1 << j) ^ (1 << i);
                    if let Some(ti) = basis.rank_bits(t) {
                        // ⟨t| a†_i a_j |s⟩ contributes to ¹D^i_j
                        let val = w * v[ti] * c * crate::fock::hop_sign(bits, i, j);
                        m.add(i, j, val);
                        m.add(j, i, val);
                    }
                }
            }
        }
    }
    OneRdm {
        orbitals: r,
        matrix: m,
    }
}

/// `²D` of an ensemble, `Σ_t u_t u_tᵀ` over `(N−2)`-particle states `t` with
/// `u_t(k,l) = ⟨t| a_l a_k |Ψ⟩`.
pub fn two_rdm(basis: &SectorBasis, ens: &Ensemble<'_>) -> TwoRdm {
    let n = basis.particles();
    let r = basis.orbitals();
    let dim = r * (r - 1) / 2;
    let mut m = Matrix::zeros(dim);
    let full = ((1u64 << r) - 1) as u32;
    let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity((n + 2) * (n + 1) / 2);
    let mut u: Vec<(usize, f64)> = Vec::with_capacity(entries.capacity());
    for t in combinations(r, n - 2) {
        // states reachable from t by adding a pair, with the sign of a_l a_k
        entries.clear();
        let holes = !t & full;
        let mut hk = holes;
        while hk != 0 {
            let k = hk.trailing_zeros() as usize;
            hk &= hk - 1;
            let mut hl = hk;
            while hl != 0 {
                let l = hl.trailing_zeros() as usize;
                hl &= hl - 1;
                let s = t | (1 << k) | (1 << l);
                if let Some(si) = basis.rank_bits(s) {
                    // a_k first: the orbitals below k are those of t below k;
                    // then a_l sees t below l
                    let below = (t & ((1u32 << k) - 1)).count_ones() + (t & ((1u32 << l) - 1)).count_ones();
                    let sign = if below & 1 == 0 { 1.0 } else { -1.0 };
                    entries.push((geminal_index(r, k, l), si, sign));
                }
            }
        }
        if entries.is_empty() {
            continue;
        }
        for (w, v) in ens.members() {
            u.clear();
            u.extend(
                entries
                    .iter()
                    .map(|&(g, si, sign)| (g, sign * v[si]))
                    .filter(|e| e.1 != 0.0),
            );
            for (a, &(ga, xa)) in u.iter().enumerate() {
                let wx = w * xa;
                for &(gb, xb) in &u[a..] {
                    if gb >= ga {
                        m.add(ga, gb, wx * xb);
                    } else {
                        m.add(gb, ga, wx * xb);
                    }
                }
            }
        }
    }
    // the loop above filled each unordered pair once, on the upper triangle
    // (diagonal terms once as well)
    m.mirror_upper();
    TwoRdm {
        orbitals: r,
        matrix: m,
    }
}

/// Expectation coordinates `(⟨Λ̂⟩, ⟨Ŵ⟩, ⟨Ĝ⟩)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Coords {
    pub lambda: f64,
    pub w: f64,
    pub g: f64,
}

impl Coords {
    pub fn as_array(&self) -> [f64; 3] {
        [self.lambda, self.w, self.g]
    }

    pub fn distance(&self, other: &Coords) -> f64 {
        let d = [self.lambda - other.lambda, self.w - other.w, self.g - other.g];
        libm::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
    }

    pub fn scaled_add(&self, w: f64, other: &Coords) -> Coords {
        Coords {
            lambda: self.lambda + w * other.lambda,
            w: self.w + w * other.w,
            g: self.g + w * other.g,
        }
    }
}

/// Ensemble expectations of the two-body terms and of `Ê`.
pub fn expectation_coords(terms: &ModelTerms, ens: &Ensemble<'_>) -> (Coords, f64) {
    (
        Coords {
            lambda: ens.expectation(&terms.lambda),
            w: ens.expectation(&terms.w),
            g: ens.expectation(&terms.g),
        },
        ens.expectation(&terms.e),
    )
}

/// `ε⟨Ê⟩ + (λ/2)⟨Λ̂⟩ + (w/2)⟨Ŵ⟩ − g⟨Ĝ⟩`.
pub fn energy_from_coords(params: &HamiltonianParams, coords: &Coords, e: f64) -> f64 {
    let w = params.term_weights();
    w[0] * e + w[1] * coords.lambda + w[2] * coords.w + w[3] * coords.g
}

/// Signatures and matrices of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Rdms {
    pub one: OneRdm,
    pub two: TwoRdm,
    pub g_tilde: ParticleHoleMatrix,
    pub lambda_d: f64,
    pub lambda_g: f64,
}

/// `¹D`, `²D`, and `G̃` of an ensemble with their largest eigenvalues.
pub fn compute_rdms(basis: &SectorBasis, ens: &Ensemble<'_>) -> Rdms {
    let one = one_rdm(basis, ens);
    let two = two_rdm(basis, ens);
    let g = map_d_to_g(&two, &one).expect("same orbital count");
    let g_tilde = modified_g(&g, &one).expect("same orbital count");
    let lambda_d = two.lambda();
    let lambda_g = g_tilde.lambda();
    Rdms {
        one,
        two,
        g_tilde,
        lambda_d,
        lambda_g,
    }
}

/// Accumulates `¹D` and `²D` of several sector ensembles into one state,
/// each sector carrying a total weight.
#[derive(Debug, Clone)]
pub struct RdmAccumulator {
    orbitals: usize,
    one: Matrix,
    two: Matrix,
    total: f64,
}

impl RdmAccumulator {
    pub fn new(orbitals: usize) -> Self {
        RdmAccumulator {
            orbitals,
            one: Matrix::zeros(orbitals),
            two: Matrix::zeros(orbitals * (orbitals - 1) / 2),
            total: 0.0,
        }
    }

    pub fn add(&mut self, weight: f64, basis: &SectorBasis, ens: &Ensemble<'_>) {
        assert_eq!(basis.orbitals(), self.orbitals);
        let one = one_rdm(basis, ens);
        let two = two_rdm(basis, ens);
        for (a, b) in self.one.data.iter_mut().zip(&one.matrix.data) {
            *a += weight * b;
        }
        for (a, b) in self.two.data.iter_mut().zip(&two.matrix.data) {
            *a += weight * b;
        }
        self.total += weight;
    }

    pub fn finish(self) -> Rdms {
        let one = OneRdm {
            orbitals: self.orbitals,
            matrix: self.one,
        };
        let two = TwoRdm {
            orbitals: self.orbitals,
            matrix: self.two,
        };
        let g = map_d_to_g(&two, &one).expect("same orbital count");
        let g_tilde = modified_g(&g, &one).expect("same orbital count");
        Rdms {
            lambda_d: two.lambda(),
            lambda_g: g_tilde.lambda(),
            one,
            two,
            g_tilde,
        }
    }
}

/// Upper bound on `λ_D` for `N` fermions in `r` orbitals, `N(r − N + 2)/(2r)`.
pub fn lambda_d_bound(particles: usize, orbitals: usize) -> f64 {
    let (n, r) = (particles as f64, orbitals as f64);
    n * (r - n + 2.0) / (2.0 * r)
}

/// Upper bound on `λ_G`, `N/2`.
pub fn lambda_g_bound(particles: usize) -> f64 {
    particles as f64 / 2.0
}
