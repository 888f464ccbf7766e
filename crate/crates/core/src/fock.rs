//! Occupation-number basis for `2N` spinless orbitals holding `N` fermions.
//!
//! Orbitals are written 1-based in documentation (`1..=2N`) and stored as
//! 0-based bit positions: orbital `k` lives in bit `k - 1`. Orbitals
//! `1..=N` form the lower level and `N+1..=2N` the upper level, so orbital
//! `p` and `p + N` share a "column".
//!
//! Fermionic signs follow the ascending Jordan–Wigner ordering: a state is
//! `a†_{o1} a†_{o2} … |0⟩` with `o1 < o2 < …`, and each creator or
//! annihilator acting on orbital `k` contributes `(-1)^(occupied orbitals
//! below k)`.

use alloc::vec::Vec;
use core::fmt;

/// Largest supported particle count (`2N` orbitals must fit in a `u32`).
pub const MAX_PARTICLES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FockError {
    OddParticleCount(usize),
    TooFewParticles(usize),
    TooManyParticles(usize),
    OrbitalOutOfRange { orbital: usize, orbitals: usize },
}

impl fmt::Display for FockError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FockError::OddParticleCount(n) => write!(f, "particle count must be even, got {n}"),
            FockError::TooFewParticles(n) => write!(f, "particle count must be at least 2, got {n}"),
            FockError::TooManyParticles(n) => {
                write!(f, "particle count {n} exceeds the supported maximum {MAX_PARTICLES}")
            }
            FockError::OrbitalOutOfRange { orbital, orbitals } => {
                write!(f, "orbital index {orbital} outside 0..{orbitals}")
            }
        }
    }
}

impl core::error::Error for FockError {}

/// Bit pattern of occupied orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FockState(pub u32);

impl FockState {
    /// Builds a state from 0-based orbital indices.
    pub fn from_orbitals(orbitals: &[usize]) -> Self {
        FockState(orbitals.iter().fold(0u32, |acc, &o| acc | (1 << o)))
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_occupied(self, orbital: usize) -> bool {
        (self.0 >> orbital) & 1 == 1
    }

    #[inline]
    pub fn particle_count(self) -> u32 {
        self.0.count_ones()
    }

    /// Occupied orbitals among `N+1..=2N`.
    #[inline]
    pub fn upper_count(self, n: usize) -> u32 {
        (self.0 >> n).count_ones()
    }

    /// Occupied orbitals among `1..=N`.
    #[inline]
    pub fn lower_count(self, n: usize) -> u32 {
        (self.0 & low_mask(n)).count_ones()
    }

    /// 0-based indices of occupied orbitals, ascending.
    pub fn orbitals(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        core::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let o = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(o)
            }
        })
    }
}

impl fmt::Display for FockState {
    /// Prints the 1-based occupied orbitals, e.g. `{1,2}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, o) in self.orbitals().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", o + 1)?;
        }
        f.write_str("}")
    }
}

#[inline]
pub(crate) fn low_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Parity of the upper-level occupation count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(count: u32) -> Self {
        if count % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// A single fermionic ladder operator on a 0-based orbital.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

/// Applies a written operator string (leftmost operator acts last).
///
/// Returns `Ok(None)` when the string annihilates the state.
pub fn apply_ops(
    state: FockState,
    ops: &[Ladder],
    orbitals: usize,
) -> Result<Option<(FockState, i8)>, FockError> {
    for op in ops {
        let o = match *op {
            Ladder::Create(o) | Ladder::Annihilate(o) => o,
        };
        if o >= orbitals {
            return Err(FockError::OrbitalOutOfRange { orbital: o, orbitals });
        }
    }
    Ok(apply_ops_unchecked(state.0, ops).map(|(b, s)| (FockState(b), s)))
}

/// `a†_{c1} a†_{c2} … a_{d1} a_{d2} …` applied to `state`.
///
/// `creators` and `annihilators` hold 0-based orbitals in written order.
pub fn apply_string(
    state: FockState,
    creators: &[usize],
    annihilators: &[usize],
    orbitals: usize,
) -> Result<Option<(FockState, i8)>, FockError> {
    let ops: Vec<Ladder> = creators
        .iter()
        .map(|&o| Ladder::Create(o))
        .chain(annihilators.iter().map(|&o| Ladder::Annihilate(o)))
        .collect();
    apply_ops(state, &ops, orbitals)
}

#[inline]
pub(crate) fn apply_ops_unchecked(mut bits: u32, ops: &[Ladder]) -> Option<(u32, i8)> {
    let mut sign = 1i8;
    for op in ops.iter().rev() {
        let (o, create) = match *op {
            Ladder::Create(o) => (o, true),
            Ladder::Annihilate(o) => (o, false),
        };
        let m = 1u32 << o;
        let occupied = bits & m != 0;
        if occupied == create {
            return None;
        }
        if (bits & (m - 1)).count_ones() & 1 == 1 {
            sign = -sign;
        }
        bits ^= m;
    }
    Some((bits, sign))
}

/// Sign picked up by `a†_i a_j` (`i != j`) on a state where `j` is occupied
/// and `i` empty.
#[inline]
pub(crate) fn hop_sign(bits: u32, i: usize, j: usize) -> f64 {
    let after = bits ^ (1 << j);
    let n = (bits & ((1u32 << j) - 1)).count_ones() + (after & ((1u32 << i) - 1)).count_ones();
    if n & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Binomial coefficient table `C(n, k)` for `n < 33`.
pub(crate) struct Binomial {
    table: [[u64; 33]; 33],
}

impl Binomial {
    pub(crate) const fn new() -> Self {
        let mut table = [[0u64; 33]; 33];
        let mut n = 0;
        while n < 33 {
            table[n][0] = 1;
            let mut k = 1;
            while k <= n {
                table[n][k] = table[n - 1][k - 1] + if k < n { table[n - 1][k] } else { 0 };
                k += 1;
            }
            n += 1;
        }
        Binomial { table }
    }

    #[inline]
    pub(crate) fn get(&self, n: usize, k: usize) -> u64 {
        if k > n {
            0
        } else {
            self.table[n][k]
        }
    }
}

pub(crate) static BINOMIAL: Binomial = Binomial::new();

/// `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> u64 {
    BINOMIAL.get(n, k)
}

/// Rank of a bit pattern among patterns of equal popcount ordered by integer
/// value (combinatorial number system).
#[inline]
pub fn colex_rank(bits: u32) -> usize {
    let mut r = 0u64;
    let mut b = bits;
    let mut k = 1;
    while b != 0 {
        let p = b.trailing_zeros() as usize;
        r += BINOMIAL.get(p, k);
        b &= b - 1;
        k += 1;
    }
    r as usize
}

/// Next larger integer with the same popcount (Gosper's hack).
#[inline]
pub(crate) fn next_combination(x: u32) -> Option<u32> {
    let c = x & x.wrapping_neg();
    let r = x.checked_add(c)?;
    Some((((r ^ x) >> 2) / c) | r)
}

/// All bit patterns on `orbitals` bits with `particles` set bits, ascending.
pub(crate) fn combinations(orbitals: usize, particles: usize) -> impl Iterator<Item = u32> {
    let first = (particles <= orbitals).then(|| low_mask(particles));
    let limit = 1u64 << orbitals;
    core::iter::successors(first, |&x| if x == 0 { None } else { next_combination(x) })
        .take_while(move |&x| (x as u64) < limit)
}

/// Identifies which sector a basis spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BasisId {
    pub particles: u8,
    pub parity: Option<Parity>,
    /// Slot-permutation symmetric subspace rather than the Fock sector.
    pub reduced: bool,
}

/// Fixed-`N` basis, optionally restricted to one upper-level parity.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    n: usize,
    parity: Option<Parity>,
    states: Vec<FockState>,
    // colex rank over the unfiltered sector -> dense index; only for filtered bases.
    lookup: Option<Vec<u32>>,
}

const ABSENT: u32 = u32::MAX;

impl SectorBasis {
    /// Enumerates the popcount-`N` patterns on `2N` orbitals in ascending
    /// integer order, keeping only states of the requested parity.
    pub fn enumerate(n: usize, parity: Option<Parity>) -> Result<Self, FockError> {
        if n < 2 {
            return Err(FockError::TooFewParticles(n));
        }
        if n % 2 == 1 {
            return Err(FockError::OddParticleCount(n));
        }
        if n > MAX_PARTICLES {
            return Err(FockError::TooManyParticles(n));
        }
        let orbitals = 2 * n;
        let full = BINOMIAL.get(orbitals, n) as usize;
        let mut states = Vec::with_capacity(if parity.is_some() { full / 2 + 1 } else { full });
        let mut lookup = parity.map(|_| alloc::vec![ABSENT; full]);
        for (r, bits) in combinations(orbitals, n).enumerate() {
            let s = FockState(bits);
            if let Some(p) = parity {
                if Parity::of(s.upper_count(n)) != p {
                    continue;
                }
                if let Some(l) = lookup.as_mut() {
                    l[r] = states.len() as u32;
                }
            }
            states.push(s);
        }
        Ok(SectorBasis {
            n,
            parity,
            states,
            lookup,
        })
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn orbitals(&self) -> usize {
        2 * self.n
    }

    pub fn parity(&self) -> Option<Parity> {
        self.parity
    }

    pub fn id(&self) -> BasisId {
        BasisId {
            particles: self.n as u8,
            parity: self.parity,
            reduced: false,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> FockState {
        self.states[index]
    }

    /// Dense index of `state`, or `None` if it lies outside this basis.
    #[inline]
    pub fn rank(&self, state: FockState) -> Option<usize> {
        let bits = state.0;
        if bits.count_ones() as usize != self.n || (bits as u64) >> self.orbitals() != 0 {
            return None;
        }
        let r = colex_rank(bits);
        match &self.lookup {
            None => Some(r),
            Some(l) => {
                let i = l[r];
                (i != ABSENT).then_some(i as usize)
            }
        }
    }

    /// Same as [`rank`](Self::rank) for a state already known to hold `N`
    /// particles on `2N` orbitals.
    #[inline]
    pub(crate) fn rank_bits(&self, bits: u32) -> Option<usize> {
        let r = colex_rank(bits);
        match &self.lookup {
            None => Some(r),
            Some(l) => {
                let i = l[r];
                (i != ABSENT).then_some(i as usize)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_sizes() {
        assert_eq!(SectorBasis::enumerate(2, None).unwrap().len(), 6);
        assert_eq!(SectorBasis::enumerate(4, None).unwrap().len(), 70);
        assert_eq!(SectorBasis::enumerate(10, None).unwrap().len(), 184_756);
        let even = SectorBasis::enumerate(4, Some(Parity::Even)).unwrap();
        let odd = SectorBasis::enumerate(4, Some(Parity::Odd)).unwrap();
        assert_eq!(even.len() + odd.len(), 70);
        assert!(even.states().iter().all(|s| s.upper_count(4) % 2 == 0));
    }

    #[test]
    fn rejects_invalid_particle_counts() {
        assert_eq!(SectorBasis::enumerate(3, None).unwrap_err(), FockError::OddParticleCount(3));
        assert_eq!(SectorBasis::enumerate(0, None).unwrap_err(), FockError::TooFewParticles(0));
        assert_eq!(SectorBasis::enumerate(18, None).unwrap_err(), FockError::TooManyParticles(18));
    }

    #[test]
    fn rank_round_trip() {
        for parity in [None, Some(Parity::Even), Some(Parity::Odd)] {
            let b = SectorBasis::enumerate(6, parity).unwrap();
            for (k, &s) in b.states().iter().enumerate() {
                assert_eq!(b.rank(s), Some(k));
            }
            assert!(b.states().windows(2).all(|w| w[0] < w[1]));
        }
        let even = SectorBasis::enumerate(2, Some(Parity::Even)).unwrap();
        assert_eq!(even.rank(FockState::from_orbitals(&[0, 2])), None);
        assert_eq!(even.rank(FockState::from_orbitals(&[0])), None);
    }

    #[test]
    fn pair_transfer_sign() {
        // a†3 a†4 a2 a1 |{1,2}> = +|{3,4}>
        let s = FockState::from_orbitals(&[0, 1]);
        let (t, sign) = apply_string(s, &[2, 3], &[1, 0], 4).unwrap().unwrap();
        assert_eq!(t, FockState::from_orbitals(&[2, 3]));
        assert_eq!(sign, 1);
        // number operator on an occupied pair
        let (t, sign) = apply_string(s, &[0, 1], &[1, 0], 4).unwrap().unwrap();
        assert_eq!((t, sign), (s, 1));
        // a2 on an empty orbital
        let s13 = FockState::from_orbitals(&[0, 2]);
        assert_eq!(apply_string(s13, &[0, 1], &[1, 0], 4).unwrap(), None);
    }

    #[test]
    fn repeated_orbitals_annihilate() {
        let s = FockState::from_orbitals(&[0, 1]);
        assert_eq!(apply_string(s, &[2, 2], &[1, 0], 4).unwrap(), None);
        assert_eq!(apply_string(s, &[2, 3], &[0, 0], 4).unwrap(), None);
    }

    #[test]
    fn out_of_range_orbital() {
        let s = FockState::from_orbitals(&[0, 1]);
        assert!(matches!(
            apply_string(s, &[4], &[0], 4),
            Err(FockError::OrbitalOutOfRange { orbital: 4, orbitals: 4 })
        ));
    }

    #[test]
    fn displays_one_based() {
        assert_eq!(alloc::format!("{}", FockState::from_orbitals(&[0, 3])), "{1,4}");
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(24, 12), 2_704_156);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn hop_sign_matches_string() {
        let b = SectorBasis::enumerate(4, None).unwrap();
        for &s in b.states() {
            for j in s.orbitals() {
                for i in 0..8 {
                    if s.is_occupied(i) {
                        continue;
                    }
                    let (_, sign) = apply_string(s, &[i], &[j], 8).unwrap().unwrap();
                    assert_eq!(hop_sign(s.0, i, j), sign as f64);
                }
            }
        }
    }
}
