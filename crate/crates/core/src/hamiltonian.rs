//! Sparse matrices of the model terms and their parameterized combination
//!
//! `H = ε Ê + (λ/2) Λ̂ + (w/2) Ŵ − g Ĝ` with
//!
//! * `Ê = Σ_i (n_i − n_{i+N})`
//! * `Λ̂ = Σ_{p,q} (a†_p a†_q a_{q+N} a_{p+N} + a†_{p+N} a†_{q+N} a_q a_p)`
//! * `Ŵ = Σ_{p,q} a†_{p+N} a†_q a_{q+N} a_p`
//! * `Ĝ = Σ_{p,q} a†_{2p−1} a†_{2p} a_{2q} a_{2q−1}`
//!
//! with all indices running over `1..=N` and self-pair terms `p = q` kept.
//! Each string set is closed under adjoint, so row `r` of a term is read off
//! from the term acting on basis state `r`.

use alloc::vec::Vec;
use core::fmt;

use crate::fock::{apply_ops_unchecked, low_mask, BasisId, Ladder, SectorBasis};
use crate::linalg::LinearOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HamiltonianParams {
    pub epsilon: f64,
    pub lambda: f64,
    pub w: f64,
    pub g: f64,
}

impl HamiltonianParams {
    pub const fn new(epsilon: f64, lambda: f64, w: f64, g: f64) -> Self {
        HamiltonianParams {
            epsilon,
            lambda,
            w,
            g,
        }
    }

    /// `ε = 0` point with the given `(λ, w, g)`.
    pub const fn two_body(lambda: f64, w: f64, g: f64) -> Self {
        Self::new(0.0, lambda, w, g)
    }

    pub fn two_body_norm(&self) -> f64 {
        libm::sqrt(self.lambda * self.lambda + self.w * self.w + self.g * self.g)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(c * self.epsilon, c * self.lambda, c * self.w, c * self.g)
    }

    /// `(1 − χ) self + χ other`.
    pub fn lerp(&self, other: &Self, chi: f64) -> Self {
        if self == other {
            return *self;
        }
        let a = 1.0 - chi;
        Self::new(
            a * self.epsilon + chi * other.epsilon,
            a * self.lambda + chi * other.lambda,
            a * self.w + chi * other.w,
            a * self.g + chi * other.g,
        )
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self::new(
            self.epsilon - other.epsilon,
            self.lambda - other.lambda,
            self.w - other.w,
            self.g - other.g,
        )
    }

    /// Weights multiplying `[Ê, Λ̂, Ŵ, Ĝ]`.
    pub fn term_weights(&self) -> [f64; 4] {
        [self.epsilon, 0.5 * self.lambda, 0.5 * self.w, -self.g]
    }

    pub fn is_zero(&self) -> bool {
        self.epsilon == 0.0 && self.lambda == 0.0 && self.w == 0.0 && self.g == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Term {
    E,
    Lambda,
    W,
    G,
}

impl Term {
    pub const ALL: [Term; 4] = [Term::E, Term::Lambda, Term::W, Term::G];

    pub fn name(self) -> &'static str {
        match self {
            Term::E => "E",
            Term::Lambda => "Lambda",
            Term::W => "W",
            Term::G => "G",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorError {
    BasisMismatch { expected: BasisId, found: BasisId },
    DimensionMismatch { expected: usize, found: usize },
}

impl fmt::Display for OperatorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorError::BasisMismatch { expected, found } => {
                write!(f, "operator basis mismatch: expected {expected:?}, found {found:?}")
            }
            OperatorError::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
        }
    }
}

impl core::error::Error for OperatorError {}

/// Real sparse matrix in compressed-row form over a [`SectorBasis`].
///
/// Columns within a row are strictly increasing and no stored value is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    basis: BasisId,
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseOperator {
    fn from_rows<S, F>(basis: &S, mut row: F) -> Self
    where
        S: StateSpace + ?Sized,
        F: FnMut(usize, u32, &mut Vec<(u32, f64)>),
    {
        let dim = basis.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut scratch: Vec<(u32, f64)> = Vec::new();
        for k in 0..dim {
            scratch.clear();
            row(k, basis.representative(k), &mut scratch);
            push_merged_row(&mut scratch, &mut cols, &mut vals);
            row_ptr.push(cols.len());
        }
        SparseOperator {
            basis: basis.id(),
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn basis_id(&self) -> BasisId {
        self.basis
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b]
            .iter()
            .zip(&self.vals[a..b])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// `(row, col, value)` in row-major order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.cols[a..b].binary_search(&(c as u32)) {
            Ok(k) => self.vals[a + k],
            Err(_) => 0.0,
        }
    }

    /// Exact symmetry of the stored entries.
    pub fn is_symmetric(&self) -> bool {
        self.triples().all(|(r, c, v)| self.get(c, r) == v)
    }

    /// Row-major dense copy; intended for small bases.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = alloc::vec![0.0; self.dim * self.dim];
        for (r, c, v) in self.triples() {
            d[r * self.dim + c] = v;
        }
        d
    }

    /// `Σ_t weights[t] · terms[t]`, dropping entries that cancel exactly.
    pub fn linear_combination(terms: &[(&SparseOperator, f64)]) -> Result<Self, OperatorError> {
        let first = terms.first().map(|t| t.0);
        let (basis, dim) = match first {
            Some(op) => (op.basis, op.dim),
            None => {
                return Err(OperatorError::DimensionMismatch {
                    expected: 1,
                    found: 0,
                })
            }
        };
        for (op, _) in terms {
            if op.basis != basis {
                return Err(OperatorError::BasisMismatch {
                    expected: basis,
                    found: op.basis,
                });
            }
        }
        let active: Vec<(&SparseOperator, f64)> =
            terms.iter().copied().filter(|(_, w)| *w != 0.0).collect();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let cap: usize = active.iter().map(|(op, _)| op.nnz()).sum();
        let mut cols = Vec::with_capacity(cap);
        let mut vals = Vec::with_capacity(cap);
        let mut scratch: Vec<(u32, f64)> = Vec::new();
        for r in 0..dim {
            scratch.clear();
            for (op, w) in &active {
                let (a, b) = (op.row_ptr[r], op.row_ptr[r + 1]);
                scratch.extend(op.cols[a..b].iter().zip(&op.vals[a..b]).map(|(&c, &v)| (c, w * v)));
            }
            push_merged_row(&mut scratch, &mut cols, &mut vals);
            row_ptr.push(cols.len());
        }
        cols.shrink_to_fit();
        vals.shrink_to_fit();
        Ok(SparseOperator {
            basis,
            dim,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::linear_combination(&[(self, c)]).expect("single operator")
    }
}

fn push_merged_row(scratch: &mut Vec<(u32, f64)>, cols: &mut Vec<u32>, vals: &mut Vec<f64>) {
    scratch.sort_unstable_by_key(|e| e.0);
    let mut k = 0;
    while k < scratch.len() {
        let c = scratch[k].0;
        let mut v = 0.0;
        while k < scratch.len() && scratch[k].0 == c {
            v += scratch[k].1;
            k += 1;
        }
        if v != 0.0 {
            cols.push(c);
            vals.push(v);
        }
    }
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (r, yr) in y.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut s = 0.0;
            for k in a..b {
                s += self.vals[k] * x[self.cols[k] as usize];
            }
            *yr = s;
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some((0..self.dim).map(|r| self.get(r, r)).collect())
    }
}

#[inline]
fn for_each_bit(mut m: u32, mut f: impl FnMut(usize)) {
    while m != 0 {
        f(m.trailing_zeros() as usize);
        m &= m - 1;
    }
}

/// A real basis the term builders can fill: a Fock sector, or a
/// symmetry-adapted space whose vectors are combinations of Fock states.
pub trait StateSpace {
    fn id(&self) -> BasisId;
    fn particles(&self) -> usize;
    fn len(&self) -> usize;
    /// Occupation pattern standing for basis vector `k`.
    fn representative(&self, k: usize) -> u32;
    /// Index and weight of the basis vector that `|bits⟩` contributes to in
    /// the row of basis vector `row`; `None` if it contributes nothing.
    fn locate(&self, row: usize, bits: u32) -> Option<(u32, f64)>;
}

impl StateSpace for SectorBasis {
    fn id(&self) -> BasisId {
        SectorBasis::id(self)
    }

    fn particles(&self) -> usize {
        SectorBasis::particles(self)
    }

    fn len(&self) -> usize {
        SectorBasis::len(self)
    }

    fn representative(&self, k: usize) -> u32 {
        self.state(k).bits()
    }

    #[inline]
    fn locate(&self, _row: usize, bits: u32) -> Option<(u32, f64)> {
        let col = self
            .rank_bits(bits)
            .expect("model terms conserve particle number and upper-level parity");
        Some((col as u32, 1.0))
    }
}

#[inline]
fn push_string<S: StateSpace + ?Sized>(
    basis: &S,
    row: usize,
    bits: u32,
    ops: &[Ladder],
    coeff: f64,
    out: &mut Vec<(u32, f64)>,
) {
    if let Some((t, sign)) = apply_ops_unchecked(bits, ops) {
        if let Some((col, w)) = basis.locate(row, t) {
            out.push((col, coeff * w * f64::from(sign)));
        }
    }
}

/// `Ê`: diagonal `n_lower − n_upper`.
pub fn build_e<S: StateSpace + ?Sized>(basis: &S) -> SparseOperator {
    let n = basis.particles();
    SparseOperator::from_rows(basis, |row, bits, out| {
        let lower = (bits & low_mask(n)).count_ones() as f64;
        let upper = (bits >> n).count_ones() as f64;
        if let Some((col, w)) = basis.locate(row, bits) {
            out.push((col, w * (lower - upper)));
        }
    })
}

/// `Λ̂`: moves two particles between the levels within their columns.
pub fn build_lambda<S: StateSpace + ?Sized>(basis: &S) -> SparseOperator {
    let n = basis.particles();
    let mask = low_mask(n);
    SparseOperator::from_rows(basis, |row, bits, out| {
        let lower = bits & mask;
        let upper = (bits >> n) & mask;
        let upper_only = upper & !lower;
        let lower_only = lower & !upper;
        // a†_p a†_q a_{q+N} a_{p+N}
        for_each_bit(upper_only, |p| {
            for_each_bit(upper_only & !(1 << p), |q| {
                let ops = [
                    Ladder::Create(p),
                    Ladder::Create(q),
                    Ladder::Annihilate(q + n),
                    Ladder::Annihilate(p + n),
                ];
                push_string(basis, row, bits, &ops, 1.0, out);
            })
        });
        // a†_{p+N} a†_{q+N} a_q a_p
        for_each_bit(lower_only, |p| {
            for_each_bit(lower_only & !(1 << p), |q| {
                let ops = [
                    Ladder::Create(p + n),
                    Ladder::Create(q + n),
                    Ladder::Annihilate(q),
                    Ladder::Annihilate(p),
                ];
                push_string(basis, row, bits, &ops, 1.0, out);
            })
        });
    })
}

/// `Ŵ`: exchanges one particle up and one down, keeping level occupations.
pub fn build_w<S: StateSpace + ?Sized>(basis: &S) -> SparseOperator {
    let n = basis.particles();
    let mask = low_mask(n);
    SparseOperator::from_rows(basis, |row, bits, out| {
        let lower = bits & mask;
        let upper = (bits >> n) & mask;
        let lower_only = lower & !upper;
        let upper_only = upper & !lower;
        // p = q survives only on doubly occupied columns
        for_each_bit(lower & upper, |p| {
            let ops = [
                Ladder::Create(p + n),
                Ladder::Create(p),
                Ladder::Annihilate(p + n),
                Ladder::Annihilate(p),
            ];
            push_string(basis, row, bits, &ops, 1.0, out);
        });
        for_each_bit(lower_only, |p| {
            for_each_bit(upper_only, |q| {
                let ops = [
                    Ladder::Create(p + n),
                    Ladder::Create(q),
                    Ladder::Annihilate(q + n),
                    Ladder::Annihilate(p),
                ];
                push_string(basis, row, bits, &ops, 1.0, out);
            })
        });
    })
}

/// Bit mask (one bit per slot) of fully occupied and fully empty
/// `(2k−1, 2k)` pair slots.
#[inline]
pub(crate) fn pair_slots(bits: u32, slots: usize) -> (u32, u32) {
    let mut full = 0u32;
    let mut empty = 0u32;
    for s in 0..slots {
        match (bits >> (2 * s)) & 3 {
            3 => full |= 1 << s,
            0 => empty |= 1 << s,
            _ => {}
        }
    }
    (full, empty)
}

/// `Ĝ`: moves a filled adjacent pair to an empty adjacent pair.
pub fn build_g_pair<S: StateSpace + ?Sized>(basis: &S) -> SparseOperator {
    let slots = basis.particles();
    SparseOperator::from_rows(basis, |row, bits, out| {
        let (full, empty) = pair_slots(bits, slots);
        for_each_bit(full, |q| {
            let (q1, q2) = (2 * q, 2 * q + 1);
            for_each_bit(empty | (1 << q), |p| {
                let ops = [
                    Ladder::Create(2 * p),
                    Ladder::Create(2 * p + 1),
                    Ladder::Annihilate(q2),
                    Ladder::Annihilate(q1),
                ];
                push_string(basis, row, bits, &ops, 1.0, out);
            })
        });
    })
}

/// The four term matrices of one basis, built once and recombined for
/// every parameter point.
#[derive(Debug, Clone)]
pub struct ModelTerms {
    basis: BasisId,
    pub e: SparseOperator,
    pub lambda: SparseOperator,
    pub w: SparseOperator,
    pub g: SparseOperator,
}

impl ModelTerms {
    pub fn build<S: StateSpace + ?Sized>(basis: &S) -> Self {
        ModelTerms {
            basis: basis.id(),
            e: build_e(basis),
            lambda: build_lambda(basis),
            w: build_w(basis),
            g: build_g_pair(basis),
        }
    }

    pub fn basis_id(&self) -> BasisId {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.e.dim
    }

    pub fn term(&self, t: Term) -> &SparseOperator {
        match t {
            Term::E => &self.e,
            Term::Lambda => &self.lambda,
            Term::W => &self.w,
            Term::G => &self.g,
        }
    }

    /// `ε Ê + (λ/2) Λ̂ + (w/2) Ŵ − g Ĝ`.
    pub fn assemble(&self, params: &HamiltonianParams) -> SparseOperator {
        let w = params.term_weights();
        SparseOperator::linear_combination(&[
            (&self.e, w[0]),
            (&self.lambda, w[1]),
            (&self.w, w[2]),
            (&self.g, w[3]),
        ])
        .expect("terms share one basis")
    }

    /// Like [`assemble`](Self::assemble) but checks the target basis.
    pub fn assemble_for(
        &self,
        params: &HamiltonianParams,
        basis: &impl StateSpace,
    ) -> Result<SparseOperator, OperatorError> {
        if basis.id() != self.basis {
            return Err(OperatorError::BasisMismatch {
                expected: basis.id(),
                found: self.basis,
            });
        }
        Ok(self.assemble(params))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{FockState, Parity};

    fn idx(b: &SectorBasis, orbs: &[usize]) -> usize {
        b.rank(FockState::from_orbitals(orbs)).unwrap()
    }

    #[test]
    fn e_diagonal_values() {
        let b = SectorBasis::enumerate(2, None).unwrap();
        let e = build_e(&b);
        assert_eq!(e.get(idx(&b, &[0, 1]), idx(&b, &[0, 1])), 2.0);
        assert_eq!(e.get(idx(&b, &[2, 3]), idx(&b, &[2, 3])), -2.0);
        assert_eq!(e.get(idx(&b, &[0, 2]), idx(&b, &[0, 2])), 0.0);
    }

    #[test]
    fn lambda_pair_scattering() {
        let b = SectorBasis::enumerate(2, None).unwrap();
        let l = build_lambda(&b);
        assert_eq!(l.get(idx(&b, &[0, 1]), idx(&b, &[2, 3])), 2.0);
        assert_eq!(l.get(idx(&b, &[0, 2]), idx(&b, &[0, 2])), 0.0);
        for (r, c, _) in l.triples() {
            let dr = b.state(r).upper_count(2) as i32;
            let dc = b.state(c).upper_count(2) as i32;
            assert_eq!((dr - dc).abs(), 2);
        }
    }

    #[test]
    fn w_preserves_level_occupation() {
        let b = SectorBasis::enumerate(4, None).unwrap();
        let w = build_w(&b);
        for (r, c, _) in w.triples() {
            assert_eq!(b.state(r).upper_count(4), b.state(c).upper_count(4));
        }
        let b2 = SectorBasis::enumerate(2, None).unwrap();
        let w2 = build_w(&b2);
        assert_eq!(w2.get(idx(&b2, &[0, 1]), idx(&b2, &[2, 3])), 0.0);
        assert!(w2.get(idx(&b2, &[0, 3]), idx(&b2, &[0, 3])) >= 0.0);
        assert_ne!(w2.get(idx(&b2, &[1, 2]), idx(&b2, &[0, 3])), 0.0);
    }

    #[test]
    fn g_moves_pairs() {
        let b = SectorBasis::enumerate(2, None).unwrap();
        let g = build_g_pair(&b);
        let (s12, s34, s13) = (idx(&b, &[0, 1]), idx(&b, &[2, 3]), idx(&b, &[0, 2]));
        assert_eq!(g.get(s12, s12), 1.0);
        assert_eq!(g.get(s34, s12), 1.0);
        assert_eq!(g.row(s13).count(), 0);
    }

    #[test]
    fn g_diagonal_counts_pairs() {
        let b = SectorBasis::enumerate(4, None).unwrap();
        let g = build_g_pair(&b);
        for (k, s) in b.states().iter().enumerate() {
            let (full, _) = pair_slots(s.bits(), 4);
            assert_eq!(g.get(k, k), full.count_ones() as f64);
        }
    }

    #[test]
    fn assembled_operators_are_symmetric() {
        for parity in [None, Some(Parity::Even), Some(Parity::Odd)] {
            let b = SectorBasis::enumerate(6, parity).unwrap();
            let terms = ModelTerms::build(&b);
            for t in Term::ALL {
                assert!(terms.term(t).is_symmetric(), "{t:?}");
            }
            let h = terms.assemble(&HamiltonianParams::new(0.3, 0.7, -1.1, 0.4));
            assert!(h.is_symmetric());
            assert!(h.triples().all(|(_, _, v)| v != 0.0));
        }
    }

    #[test]
    fn single_term_combinations() {
        let b = SectorBasis::enumerate(4, None).unwrap();
        let terms = ModelTerms::build(&b);
        let h = terms.assemble(&HamiltonianParams::two_body(0.0, 0.0, 1.0));
        assert_eq!(h, terms.g.scaled(-1.0));
        let h = terms.assemble(&HamiltonianParams::two_body(2.0, 0.0, 0.0));
        assert_eq!(h, terms.lambda);
    }

    #[test]
    fn parity_blocks_decouple() {
        let b = SectorBasis::enumerate(4, None).unwrap();
        let h = ModelTerms::build(&b).assemble(&HamiltonianParams::new(0.5, 1.0, 1.0, 1.0));
        for (r, c, _) in h.triples() {
            assert_eq!(
                Parity::of(b.state(r).upper_count(4)),
                Parity::of(b.state(c).upper_count(4))
            );
        }
    }

    #[test]
    fn basis_mismatch_is_reported() {
        let even = SectorBasis::enumerate(4, Some(Parity::Even)).unwrap();
        let odd = SectorBasis::enumerate(4, Some(Parity::Odd)).unwrap();
        let terms = ModelTerms::build(&even);
        let err = terms.assemble_for(&HamiltonianParams::two_body(1.0, 0.0, 0.0), &odd);
        assert!(matches!(err, Err(OperatorError::BasisMismatch { .. })));
    }
}
