//! The slot-permutation symmetric subspace.
//!
//! Every term of the Hamiltonian commutes with permutations of the `N/2`
//! pair slots (a slot is the lower pair `(2s, 2s+1)` together with the upper
//! pair `(N+2s, N+2s+1)`). The symmetric subspace is spanned by one vector
//! per orbit of Fock states,
//!
//! `|O⟩ = |O|^{-1/2} Σ_{t ∈ O} σ(t) |t⟩`,
//!
//! where `σ(t)` is the fermionic sign of carrying the orbit representative
//! onto `t`. Orbits whose stabilizer contains an odd permutation of
//! fermions (two identical slots holding an odd number of particles each)
//! have no symmetric vector and are dropped. The subspace is a few hundred
//! times smaller than the Fock sector at `N = 12`; it holds the ground state
//! wherever that state is symmetric, which the test suite checks against
//! the full sectors.

use alloc::vec::Vec;

use crate::fock::{BasisId, FockError, Parity, SectorBasis, MAX_PARTICLES};
use crate::hamiltonian::StateSpace;

const SLOT_TYPES: u32 = 16;

/// Symmetric orbit basis of one parity sector.
#[derive(Debug, Clone)]
pub struct OrbitBasis {
    n: usize,
    parity: Option<Parity>,
    /// Representatives (slot types non-decreasing), ascending.
    reps: Vec<u32>,
    sizes: Vec<f64>,
}

/// Slot `s` content as a 4-bit type: lower pair in bits 0–1, upper pair in
/// bits 2–3.
#[inline]
fn slot_type(bits: u32, n: usize, s: usize) -> u32 {
    ((bits >> (2 * s)) & 3) | (((bits >> (n + 2 * s)) & 3) << 2)
}

#[inline]
fn place(n: usize, s: usize, t: u32) -> u32 {
    ((t & 3) << (2 * s)) | ((t >> 2) << (n + 2 * s))
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |a, b| a * b as f64)
}

impl OrbitBasis {
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
        let slots = n / 2;
        let mut reps = Vec::new();
        let mut sizes = Vec::new();
        let mut types = Vec::with_capacity(slots);
        fill(n, slots, 0, n, &mut types, &mut |ts: &[u32]| {
            // an odd slot type may appear at most once
            if ts.windows(2).any(|w| w[0] == w[1] && w[0].count_ones() % 2 == 1) {
                return;
            }
            let bits = ts.iter().enumerate().fold(0u32, |acc, (s, &t)| acc | place(n, s, t));
            let upper = (bits >> n).count_ones();
            if parity.map_or(false, |p| Parity::of(upper) != p) {
                return;
            }
            let mut size = factorial(slots);
            let mut k = 0;
            while k < ts.len() {
                let mut m = k;
                while m < ts.len() && ts[m] == ts[k] {
                    m += 1;
                }
                size /= factorial(m - k);
                k = m;
            }
            reps.push(bits);
            sizes.push(size);
        });
        let mut order: Vec<usize> = (0..reps.len()).collect();
        order.sort_by_key(|&i| reps[i]);
        let reps: Vec<u32> = order.iter().map(|&i| reps[i]).collect();
        let sizes: Vec<f64> = order.iter().map(|&i| sizes[i]).collect();
        Ok(OrbitBasis {
            n,
            parity,
            reps,
            sizes,
        })
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn parity(&self) -> Option<Parity> {
        self.parity
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn representatives(&self) -> &[u32] {
        &self.reps
    }

    /// Number of Fock states in orbit `k`.
    pub fn orbit_size(&self, k: usize) -> f64 {
        self.sizes[k]
    }

    /// Orbit index and sign `σ` of a Fock state, or `None` when the orbit
    /// has no symmetric vector.
    pub fn canonicalize(&self, bits: u32) -> Option<(usize, f64)> {
        let (rep, sign) = canonical(bits, self.n)?;
        let k = self.reps.binary_search(&rep).ok()?;
        Some((k, sign))
    }

    /// Fock-sector amplitudes of a symmetric-space vector.
    pub fn lift(&self, v: &[f64], sector: &SectorBasis) -> Vec<f64> {
        assert_eq!(v.len(), self.len());
        sector
            .states()
            .iter()
            .map(|s| match self.canonicalize(s.bits()) {
                Some((k, sign)) => sign * v[k] / libm::sqrt(self.sizes[k]),
                None => 0.0,
            })
            .collect()
    }

    /// Components `⟨O|v⟩` of a Fock-sector vector.
    pub fn restrict(&self, v: &[f64], sector: &SectorBasis) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.len()];
        for (s, &x) in sector.states().iter().zip(v) {
            if let Some((k, sign)) = self.canonicalize(s.bits()) {
                out[k] += sign * x / libm::sqrt(self.sizes[k]);
            }
        }
        out
    }
}

/// Non-decreasing slot-type sequences of length `slots` holding `left`
/// particles.
fn fill(n: usize, slots: usize, min: u32, left: usize, ts: &mut Vec<u32>, out: &mut dyn FnMut(&[u32])) {
    if ts.len() == slots {
        if left == 0 {
            out(ts);
        }
        return;
    }
    let remaining = slots - ts.len();
    if left > 4 * remaining {
        return;
    }
    for t in min..SLOT_TYPES {
        let c = t.count_ones() as usize;
        if c > left {
            continue;
        }
        ts.push(t);
        fill(n, slots, t, left - c, ts, out);
        ts.pop();
    }
}

/// Representative of the orbit of `bits` and the sign `σ` with
/// `|bits⟩ = σ U|rep⟩`. `None` if the orbit is odd under its stabilizer.
fn canonical(bits: u32, n: usize) -> Option<(u32, f64)> {
    let slots = n / 2;
    let mut order = [0usize; MAX_PARTICLES / 2];
    let mut types = [0u32; MAX_PARTICLES / 2];
    for s in 0..slots {
        types[s] = slot_type(bits, n, s);
        order[s] = s;
    }
    // stable insertion sort: rep slot k is slot order[k] of the state
    for i in 1..slots {
        let mut j = i;
        while j > 0 && types[order[j - 1]] > types[order[j]] {
            order.swap(j - 1, j);
            j -= 1;
        }
    }
    let mut rep = 0u32;
    for (k, &s) in order[..slots].iter().enumerate() {
        let t = types[s];
        if k > 0 && types[order[k - 1]] == t && t.count_ones() % 2 == 1 {
            return None;
        }
        rep |= place(n, k, t);
    }
    // images of the representative's orbitals, taken in ascending order
    let mut seq = [0u8; 2 * MAX_PARTICLES];
    let mut len = 0;
    let mut m = rep;
    while m != 0 {
        let o = m.trailing_zeros() as usize;
        m &= m - 1;
        let (base, off) = if o < n { (0, o) } else { (n, o - n) };
        seq[len] = (base + 2 * order[off / 2] + off % 2) as u8;
        len += 1;
    }
    let mut inversions = 0u32;
    for a in 0..len {
        for b in a + 1..len {
            if seq[a] > seq[b] {
                inversions += 1;
            }
        }
    }
    Some((rep, if inversions % 2 == 0 { 1.0 } else { -1.0 }))
}

impl StateSpace for OrbitBasis {
    fn id(&self) -> BasisId {
        BasisId {
            particles: self.n as u8,
            parity: self.parity,
            reduced: true,
        }
    }

    fn particles(&self) -> usize {
        self.n
    }

    fn len(&self) -> usize {
        self.reps.len()
    }

    fn representative(&self, k: usize) -> u32 {
        self.reps[k]
    }

    #[inline]
    fn locate(&self, row: usize, bits: u32) -> Option<(u32, f64)> {
        let (k, sign) = self.canonicalize(bits)?;
        Some((k as u32, sign * libm::sqrt(self.sizes[row] / self.sizes[k])))
    }
}
