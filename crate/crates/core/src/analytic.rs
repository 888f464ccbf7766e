//! Closed-form candidate ground states and the Lipkin-class algebra of the
//! pairing term.
//!
//! A pair slot `s` (`0 ≤ s < N/2`) groups the columns `2s` and `2s+1`: the
//! lower pair `(2s, 2s+1)` and the upper pair `(N+2s, N+2s+1)`. In a
//! Lipkin-like state every column holds exactly one particle, so each slot is
//! lower-filled, upper-filled or crossed (one particle on each level, two
//! ways). Class `|i, j⟩_L` has `i` upper-filled and `j` crossed slots.
//!
//! `Ĝ` moves a filled adjacent pair into an empty one. Acting on a Lipkin
//! state it either swaps a slot between lower- and upper-filled (staying
//! Lipkin-like) or produces a state with one slot holding four particles and
//! another slot empty. Those form the non-Lipkin classes `|i, j⟩_NL`, where
//! `i` counts upper pairs including the one inside the four-particle slot.

use alloc::vec::Vec;
use core::fmt;

use crate::eigen::{ground_subspace_from, SolverConfig, SolverError};
use crate::fock::{binomial, FockState, Parity, SectorBasis};
use crate::hamiltonian::{build_g_pair, HamiltonianParams, SparseOperator};
use crate::linalg::{dot, norm, LinearOperator};
use crate::model::Model;

#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticError {
    ClassOutOfRange { n: usize, i: usize, j: usize },
    ParticleMismatch { expected: usize, found: usize },
    Coefficients { c1: f64, c2: f64 },
    /// The basis does not contain any state of the requested superposition.
    EmptyProjection,
    BasisMismatch,
    NotBeta,
    Solver(SolverError),
}

impl fmt::Display for AnalyticError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticError::ClassOutOfRange { n, i, j } => {
                write!(f, "class (i={i}, j={j}) outside the allowed range for N={n}")
            }
            AnalyticError::ParticleMismatch { expected, found } => {
                write!(f, "basis holds {found} particles, expected {expected}")
            }
            AnalyticError::Coefficients { c1, c2 } => {
                write!(f, "coefficients ({c1}, {c2}) are not on the unit circle")
            }
            AnalyticError::EmptyProjection => f.write_str("superposition has no support on this basis"),
            AnalyticError::BasisMismatch => f.write_str("state and operator use different bases"),
            AnalyticError::NotBeta => f.write_str("annihilation check applies to beta kinds only"),
            AnalyticError::Solver(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for AnalyticError {}

impl From<SolverError> for AnalyticError {
    fn from(e: SolverError) -> Self {
        AnalyticError::Solver(e)
    }
}

/// Content of one pair slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Lower,
    Upper,
    Cross,
    /// Both pairs filled.
    Quad,
    Empty,
    /// Anything else (a column with two particles but the slot not full, or
    /// an empty column next to a singly occupied one).
    Broken,
}

pub fn slot_kind(state: FockState, n: usize, slot: usize) -> SlotKind {
    let b = state.bits();
    let lo = (b >> (2 * slot)) & 3;
    let up = (b >> (n + 2 * slot)) & 3;
    match (lo, up) {
        (3, 0) => SlotKind::Lower,
        (0, 3) => SlotKind::Upper,
        (1, 2) | (2, 1) => SlotKind::Cross,
        (3, 3) => SlotKind::Quad,
        (0, 0) => SlotKind::Empty,
        _ => SlotKind::Broken,
    }
}

/// No column holds two particles.
pub fn is_lipkin(state: FockState, n: usize) -> bool {
    let mask = (1u32 << n) - 1;
    let b = state.bits();
    (b & mask) ^ ((b >> n) & mask) == mask
}

/// Each adjacent pair `(2s, 2s+1)` is either empty or full.
pub fn is_bcs(state: FockState) -> bool {
    let b = state.bits();
    (b ^ (b >> 1)) & 0x5555_5555 == 0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ClassFamily {
    Lipkin,
    NonLipkin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LipkinClass {
    pub family: ClassFamily,
    pub i: usize,
    pub j: usize,
    pub n: usize,
}

impl fmt::Display for LipkinClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.family {
            ClassFamily::Lipkin => "L",
            ClassFamily::NonLipkin => "NL",
        };
        write!(f, "|{},{}>_{}", self.i, self.j, tag)
    }
}

impl LipkinClass {
    /// Lipkin class; `j ≤ N/2`, `i ≤ N/2 − j`.
    pub fn lipkin(n: usize, i: usize, j: usize) -> Result<Self, AnalyticError> {
        let h = n / 2;
        if n % 2 == 1 || j > h || i > h - j {
            return Err(AnalyticError::ClassOutOfRange { n, i, j });
        }
        Ok(LipkinClass {
            family: ClassFamily::Lipkin,
            i,
            j,
            n,
        })
    }

    /// Non-Lipkin class; one four-particle slot, one empty slot, `j` crossed
    /// and `i − 1` upper-filled slots, so `1 ≤ i ≤ N/2 − j − 1`.
    pub fn non_lipkin(n: usize, i: usize, j: usize) -> Result<Self, AnalyticError> {
        let h = n / 2;
        if n % 2 == 1 || h < 2 || i == 0 || j + 2 > h || i - 1 > h - 2 - j {
            return Err(AnalyticError::ClassOutOfRange { n, i, j });
        }
        Ok(LipkinClass {
            family: ClassFamily::NonLipkin,
            i,
            j,
            n,
        })
    }

    /// Every Lipkin class at `N`, ordered by `j` then `i`.
    pub fn all_lipkin(n: usize) -> Vec<Self> {
        let h = n / 2;
        (0..=h)
            .flat_map(|j| (0..=h - j).map(move |i| (i, j)))
            .filter_map(|(i, j)| Self::lipkin(n, i, j).ok())
            .collect()
    }

    pub fn all_non_lipkin(n: usize) -> Vec<Self> {
        let h = n / 2;
        if h < 2 {
            return Vec::new();
        }
        (0..=h - 2)
            .flat_map(|j| (1..=h - 1 - j).map(move |i| (i, j)))
            .filter_map(|(i, j)| Self::non_lipkin(n, i, j).ok())
            .collect()
    }

    /// Number of slot arrangements, `C(N/2, j)·C(N/2 − j, i)` for Lipkin
    /// classes. A crossed slot can be realised in two ways, which this count
    /// does not distinguish.
    pub fn slot_arrangements(&self) -> u64 {
        let h = self.n / 2;
        match self.family {
            ClassFamily::Lipkin => binomial(h, self.j) * binomial(h - self.j, self.i),
            ClassFamily::NonLipkin => {
                (h * (h - 1)) as u64 * binomial(h - 2, self.j) * binomial(h - 2 - self.j, self.i - 1)
            }
        }
    }

    /// Number of Fock states in the class: `2^j` times the slot count.
    pub fn fock_count(&self) -> u64 {
        self.slot_arrangements() << self.j
    }

    pub fn upper_count(&self) -> usize {
        2 * self.i + self.j
    }
}

/// Class of a state, or `None` for states outside every Lipkin and
/// non-Lipkin class.
pub fn classify_state(state: FockState, n: usize) -> Option<LipkinClass> {
    let (mut upper, mut cross, mut quad, mut empty) = (0usize, 0usize, 0usize, 0usize);
    for s in 0..n / 2 {
        match slot_kind(state, n, s) {
            SlotKind::Lower => {}
            SlotKind::Upper => upper += 1,
            SlotKind::Cross => cross += 1,
            SlotKind::Quad => quad += 1,
            SlotKind::Empty => empty += 1,
            SlotKind::Broken => return None,
        }
    }
    match (quad, empty) {
        (0, 0) => Some(LipkinClass {
            family: ClassFamily::Lipkin,
            i: upper,
            j: cross,
            n,
        }),
        (1, 1) => Some(LipkinClass {
            family: ClassFamily::NonLipkin,
            i: upper + 1,
            j: cross,
            n,
        }),
        _ => None,
    }
}

/// States of `basis` belonging to `cls`, in basis order (each enters the
/// class superposition with coefficient `+1`).
pub fn enumerate_class(cls: &LipkinClass, basis: &SectorBasis) -> Result<Vec<FockState>, AnalyticError> {
    check_particles(cls.n, basis)?;
    let valid = match cls.family {
        ClassFamily::Lipkin => LipkinClass::lipkin(cls.n, cls.i, cls.j).is_ok(),
        ClassFamily::NonLipkin => LipkinClass::non_lipkin(cls.n, cls.i, cls.j).is_ok(),
    };
    if !valid {
        return Err(AnalyticError::ClassOutOfRange {
            n: cls.n,
            i: cls.i,
            j: cls.j,
        });
    }
    Ok(basis
        .states()
        .iter()
        .copied()
        .filter(|&s| classify_state(s, cls.n) == Some(*cls))
        .collect())
}

fn check_particles(n: usize, basis: &SectorBasis) -> Result<(), AnalyticError> {
    if basis.particles() != n {
        return Err(AnalyticError::ParticleMismatch {
            expected: n,
            found: basis.particles(),
        });
    }
    Ok(())
}

/// Coefficients of `Ĝ|i,j⟩_L` on unnormalized class sums as displayed in
/// the appendix of the source: `(N−j)`, `(i+1)`, `(N−j−i+1)` on the Lipkin
/// classes `i`, `i+1`, `i−1` and `2, 1, 1` on the non-Lipkin classes `i`,
/// `i+1`, `i−1`. Targets outside the allowed range are dropped.
pub fn displayed_g_coefficients(cls: &LipkinClass) -> Vec<(LipkinClass, f64)> {
    g_coefficients(cls, cls.n as f64)
}

/// The same expansion with the slot count `N/2` in place of `N`; this is
/// what the pairing operator actually produces.
pub fn slot_g_coefficients(cls: &LipkinClass) -> Vec<(LipkinClass, f64)> {
    g_coefficients(cls, (cls.n / 2) as f64)
}

fn g_coefficients(cls: &LipkinClass, m: f64) -> Vec<(LipkinClass, f64)> {
    let (n, i, j) = (cls.n, cls.i as f64, cls.j as f64);
    let mut out = Vec::new();
    let mut push = |c: Result<LipkinClass, AnalyticError>, v: f64| {
        if let Ok(c) = c {
            out.push((c, v));
        }
    };
    push(LipkinClass::lipkin(n, cls.i, cls.j), m - j);
    push(LipkinClass::lipkin(n, cls.i + 1, cls.j), i + 1.0);
    if cls.i > 0 {
        push(LipkinClass::lipkin(n, cls.i - 1, cls.j), m - j - i + 1.0);
    }
    push(LipkinClass::non_lipkin(n, cls.i, cls.j), 2.0);
    push(LipkinClass::non_lipkin(n, cls.i + 1, cls.j), 1.0);
    if cls.i > 0 {
        push(LipkinClass::non_lipkin(n, cls.i - 1, cls.j), 1.0);
    }
    out
}

/// One output class of a brute-force `Ĝ` application.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassComponent {
    pub class: LipkinClass,
    /// Mean amplitude over the class states.
    pub coefficient: f64,
    /// Largest deviation of a single amplitude from the mean; zero when the
    /// output is an exact multiple of the class sum.
    pub spread: f64,
    /// Class states reached with a nonzero amplitude.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassAction {
    pub source: LipkinClass,
    pub components: Vec<ClassComponent>,
    /// Norm of the output outside every class.
    pub unclassified_norm: f64,
    /// Largest amplitude on a class with a different `j`.
    pub cross_j: f64,
}

impl ClassAction {
    pub fn coefficient(&self, class: &LipkinClass) -> f64 {
        self.components
            .iter()
            .find(|c| c.class == *class)
            .map_or(0.0, |c| c.coefficient)
    }
}

/// Unnormalized class sum over `basis`.
pub fn class_vector(cls: &LipkinClass, basis: &SectorBasis) -> Result<Vec<f64>, AnalyticError> {
    let mut v = alloc::vec![0.0; basis.len()];
    for s in enumerate_class(cls, basis)? {
        v[basis.rank(s).expect("class state in basis")] = 1.0;
    }
    Ok(v)
}

/// `Ĝ` applied to the unnormalized class sum and decomposed into class sums.
pub fn g_action_on_class(
    cls: &LipkinClass,
    basis: &SectorBasis,
    g: &SparseOperator,
) -> Result<ClassAction, AnalyticError> {
    if g.basis_id() != basis.id() {
        return Err(AnalyticError::BasisMismatch);
    }
    let x = class_vector(cls, basis)?;
    let mut y = alloc::vec![0.0; basis.len()];
    g.apply(&x, &mut y);
    let mut groups: Vec<(LipkinClass, Vec<f64>)> = Vec::new();
    let mut unclassified = 0.0;
    for (k, &a) in y.iter().enumerate() {
        match classify_state(basis.state(k), cls.n) {
            Some(c) => match groups.iter_mut().find(|g| g.0 == c) {
                Some(g) => g.1.push(a),
                None => groups.push((c, alloc::vec![a])),
            },
            None => unclassified += a * a,
        }
    }
    groups.sort_by(|a, b| a.0.cmp(&b.0));
    let mut cross_j: f64 = 0.0;
    let mut components = Vec::new();
    for (c, amps) in groups {
        let support = amps.iter().filter(|a| **a != 0.0).count();
        if support == 0 {
            continue;
        }
        let mean = amps.iter().sum::<f64>() / amps.len() as f64;
        let spread = amps.iter().map(|a| libm::fabs(a - mean)).fold(0.0, f64::max);
        if c.j != cls.j {
            cross_j = amps.iter().map(|a| libm::fabs(*a)).fold(cross_j, f64::max);
        }
        components.push(ClassComponent {
            class: c,
            coefficient: mean,
            spread,
            support,
        });
    }
    Ok(ClassAction {
        source: *cls,
        components,
        unclassified_norm: libm::sqrt(unclassified),
        cross_j,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassSizeRow {
    pub class: LipkinClass,
    pub slot_arrangements: u64,
    pub fock_count: u64,
    pub enumerated: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoefficientRow {
    pub source: LipkinClass,
    pub target: LipkinClass,
    pub displayed: f64,
    pub slot_count: f64,
    pub brute_force: f64,
}

/// Class sizes and `Ĝ` coefficients at one `N`, with every disagreement
/// between the displayed coefficients and brute force listed.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassAlgebraReport {
    pub n: usize,
    pub sizes: Vec<ClassSizeRow>,
    pub lipkin_states: usize,
    pub lipkin_classified: usize,
    pub actions: Vec<ClassAction>,
    pub coefficients: Vec<CoefficientRow>,
    pub max_cross_j: f64,
    pub max_spread: f64,
    pub max_unclassified: f64,
    /// Rows where the displayed coefficient differs from brute force. Brute
    /// force also produces targets the display omits; those appear with a
    /// displayed value of zero.
    pub displayed_mismatches: Vec<CoefficientRow>,
    pub slot_count_mismatches: Vec<CoefficientRow>,
}

pub fn class_algebra_report(n: usize) -> Result<ClassAlgebraReport, AnalyticError> {
    let basis = SectorBasis::enumerate(n, None).map_err(|_| AnalyticError::ClassOutOfRange { n, i: 0, j: 0 })?;
    let g = build_g_pair(&basis);
    let mut sizes = Vec::new();
    let mut lipkin_classified = 0;
    for c in LipkinClass::all_lipkin(n).into_iter().chain(LipkinClass::all_non_lipkin(n)) {
        let enumerated = enumerate_class(&c, &basis)?.len();
        if c.family == ClassFamily::Lipkin {
            lipkin_classified += enumerated;
        }
        sizes.push(ClassSizeRow {
            class: c,
            slot_arrangements: c.slot_arrangements(),
            fock_count: c.fock_count(),
            enumerated,
        });
    }
    let lipkin_states = basis.states().iter().filter(|&&s| is_lipkin(s, n)).count();
    let mut actions = Vec::new();
    let mut coefficients = Vec::new();
    let (mut max_cross_j, mut max_spread, mut max_unclassified) = (0.0f64, 0.0f64, 0.0f64);
    for c in LipkinClass::all_lipkin(n) {
        let a = g_action_on_class(&c, &basis, &g)?;
        max_cross_j = max_cross_j.max(a.cross_j);
        max_unclassified = max_unclassified.max(a.unclassified_norm);
        max_spread = a.components.iter().map(|x| x.spread).fold(max_spread, f64::max);
        let displayed = displayed_g_coefficients(&c);
        let slot = slot_g_coefficients(&c);
        let mut targets: Vec<LipkinClass> = displayed.iter().map(|t| t.0).collect();
        for comp in &a.components {
            if !targets.contains(&comp.class) {
                targets.push(comp.class);
            }
        }
        targets.sort();
        let lookup = |list: &[(LipkinClass, f64)], t: &LipkinClass| {
            list.iter().find(|x| x.0 == *t).map_or(0.0, |x| x.1)
        };
        for t in targets {
            coefficients.push(CoefficientRow {
                source: c,
                target: t,
                displayed: lookup(&displayed, &t),
                slot_count: lookup(&slot, &t),
                brute_force: a.coefficient(&t),
            });
        }
        actions.push(a);
    }
    let differs = |x: f64, y: f64| libm::fabs(x - y) > 1e-12;
    let displayed_mismatches = coefficients
        .iter()
        .filter(|r| differs(r.displayed, r.brute_force))
        .cloned()
        .collect();
    let slot_count_mismatches = coefficients
        .iter()
        .filter(|r| differs(r.slot_count, r.brute_force))
        .cloned()
        .collect();
    Ok(ClassAlgebraReport {
        n,
        sizes,
        lipkin_states,
        lipkin_classified,
        actions,
        coefficients,
        max_cross_j,
        max_spread,
        max_unclassified,
        displayed_mismatches,
        slot_count_mismatches,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum AnsatzKind {
    Beta1,
    Beta2,
    Alpha1,
    Alpha2,
    Fpc,
}

impl AnsatzKind {
    pub const ALL: [AnsatzKind; 5] = [
        AnsatzKind::Beta1,
        AnsatzKind::Beta2,
        AnsatzKind::Alpha1,
        AnsatzKind::Alpha2,
        AnsatzKind::Fpc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AnsatzKind::Beta1 => "beta1",
            AnsatzKind::Beta2 => "beta2",
            AnsatzKind::Alpha1 => "alpha1",
            AnsatzKind::Alpha2 => "alpha2",
            AnsatzKind::Fpc => "fpc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_beta(self) -> bool {
        matches!(self, AnsatzKind::Beta1 | AnsatzKind::Beta2)
    }
}

/// Which occupation the pair-count sign `(−1)^L` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PairCount {
    /// Pairs on the upper level, `⌊n_upper / 2⌋`.
    #[default]
    Upper,
    /// The displayed formula, a sum over orbitals `1..=N`: `⌊n_lower / 2⌋`.
    Lower,
}

/// Reference ordering of the Lipkin-like product states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PhaseOrder {
    /// Column by column: the creator of column `p` (lower or upper) is
    /// written in position `p`. Relative to the ascending order this costs
    /// `(−1)^(#{(p, q) : q > p, p upper-occupied, q lower-occupied})`.
    #[default]
    Column,
    /// Plain ascending orbital order, the basis convention.
    Ascending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Conventions {
    pub pair_count: PairCount,
    pub order: PhaseOrder,
}

/// Sign turning a column-ordered Lipkin product into the ascending order.
pub fn column_sign(state: FockState, n: usize) -> f64 {
    let mask = (1u32 << n) - 1;
    let b = state.bits();
    let lower = b & mask;
    let upper = (b >> n) & mask;
    let mut inversions = 0u32;
    let mut m = upper;
    while m != 0 {
        let p = m.trailing_zeros();
        inversions += (lower >> p >> 1).count_ones();
        m &= m - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn pair_sign(state: FockState, n: usize, count: PairCount, primed: bool) -> f64 {
    let k = match count {
        PairCount::Upper => state.upper_count(n),
        PairCount::Lower => state.lower_count(n),
    } + primed as u32;
    if (k / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzState {
    pub kind: AnsatzKind,
    pub c1: f64,
    pub c2: f64,
    pub conventions: Conventions,
    pub basis: crate::fock::BasisId,
    pub vector: Vec<f64>,
}

/// Unit vector of the Lipkin-like states with upper count of `parity`,
/// carrying the ordering phase and (when `sign` is set) the pair sign.
pub fn lipkin_direction(
    basis: &SectorBasis,
    parity: Parity,
    conv: Conventions,
    sign: Option<bool>,
) -> Vec<f64> {
    let n = basis.particles();
    let mut v: Vec<f64> = basis
        .states()
        .iter()
        .map(|&s| {
            if !is_lipkin(s, n) || Parity::of(s.upper_count(n)) != parity {
                return 0.0;
            }
            let order = match conv.order {
                PhaseOrder::Column => column_sign(s, n),
                PhaseOrder::Ascending => 1.0,
            };
            let pair = sign.map_or(1.0, |primed| pair_sign(s, n, conv.pair_count, primed));
            order * pair
        })
        .collect();
    let nv = norm(&v);
    if nv > 0.0 {
        v.iter_mut().for_each(|x| *x /= nv);
    }
    v
}

/// Expands one of the closed-form states over `basis`.
///
/// The two-coefficient kinds combine the unit even- and odd-upper-count
/// directions, `c1·ê + c2·ô` (with the sign pattern of the kind), so the
/// result has unit norm for any `c1² + c2² = 1`. On a parity-filtered basis
/// the missing direction is dropped and the remainder renormalized.
pub fn build_ansatz(
    kind: AnsatzKind,
    c1: f64,
    c2: f64,
    basis: &SectorBasis,
    conv: Conventions,
) -> Result<AnsatzState, AnalyticError> {
    let vector = match kind {
        AnsatzKind::Fpc => {
            let v: Vec<f64> = basis
                .states()
                .iter()
                .map(|&s| if is_bcs(s) { 1.0 } else { 0.0 })
                .collect();
            v
        }
        _ => {
            if libm::fabs(c1 * c1 + c2 * c2 - 1.0) > 1e-10 {
                return Err(AnalyticError::Coefficients { c1, c2 });
            }
            let (sign, ce, co) = match kind {
                AnsatzKind::Beta1 => (Some(false), c1, c2),
                AnsatzKind::Beta2 => (Some(true), c2, c1),
                AnsatzKind::Alpha1 => (None, c1, c2),
                AnsatzKind::Alpha2 => (None, c2, -c1),
                AnsatzKind::Fpc => unreachable!(),
            };
            let e = lipkin_direction(basis, Parity::Even, conv, sign);
            let o = lipkin_direction(basis, Parity::Odd, conv, sign);
            e.iter().zip(&o).map(|(a, b)| ce * a + co * b).collect()
        }
    };
    let mut vector = vector;
    let nv = norm(&vector);
    if nv < 1e-12 {
        return Err(AnalyticError::EmptyProjection);
    }
    vector.iter_mut().for_each(|x| *x /= nv);
    Ok(AnsatzState {
        kind,
        c1,
        c2,
        conventions: conv,
        basis: basis.id(),
        vector,
    })
}

/// `‖Ĝ v‖` for a beta-kind state.
pub fn verify_annihilation(state: &AnsatzState, g: &SparseOperator) -> Result<f64, AnalyticError> {
    if !state.kind.is_beta() {
        return Err(AnalyticError::NotBeta);
    }
    apply_norm(state, g)
}

/// `‖A v‖` for any state on the operator's basis.
pub fn apply_norm(state: &AnsatzState, op: &SparseOperator) -> Result<f64, AnalyticError> {
    if op.basis_id() != state.basis {
        return Err(AnalyticError::BasisMismatch);
    }
    let mut y = alloc::vec![0.0; state.vector.len()];
    op.apply(&state.vector, &mut y);
    Ok(norm(&y))
}

/// Norm of the part of `v` on states that are not Lipkin-like.
pub fn non_lipkin_norm(basis: &SectorBasis, v: &[f64]) -> f64 {
    let n = basis.particles();
    let s: f64 = basis
        .states()
        .iter()
        .zip(v)
        .filter(|(st, _)| !is_lipkin(**st, n))
        .map(|(_, x)| x * x)
        .sum();
    libm::sqrt(s)
}

/// Copies a sector vector into a basis that contains the sector.
pub fn embed(from: &SectorBasis, v: &[f64], into: &SectorBasis) -> Vec<f64> {
    let mut out = alloc::vec![0.0; into.len()];
    for (s, &x) in from.states().iter().zip(v) {
        out[into.rank(*s).expect("sector contained in target basis")] = x;
    }
    out
}

/// Best two-coefficient fit of an ansatz family to a ground subspace.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnsatzFit {
    pub c1: f64,
    pub c2: f64,
    /// `⟨ψ|P|ψ⟩` for the best unit combination `ψ`, `P` the ground projector.
    pub fidelity: f64,
    /// Smallest such value over the family: 1 when both directions lie in
    /// the ground subspace.
    pub min_fidelity: f64,
}

/// Projects orthonormal `ground` vectors (over `basis`) onto the even and
/// odd directions of `family` (`Beta1` or `Alpha1`) and returns the
/// combination with the largest overlap.
pub fn fit_coefficients(
    family: AnsatzKind,
    basis: &SectorBasis,
    ground: &[Vec<f64>],
    conv: Conventions,
) -> Result<AnsatzFit, AnalyticError> {
    let sign = match family {
        AnsatzKind::Beta1 | AnsatzKind::Beta2 => Some(false),
        AnsatzKind::Alpha1 | AnsatzKind::Alpha2 => None,
        AnsatzKind::Fpc => {
            let f = build_ansatz(AnsatzKind::Fpc, 1.0, 0.0, basis, conv)?;
            let fid: f64 = ground.iter().map(|g| { let x = dot(g, &f.vector); x * x }).sum();
            return Ok(AnsatzFit {
                c1: 1.0,
                c2: 0.0,
                fidelity: fid,
                min_fidelity: fid,
            });
        }
    };
    let dirs = [
        lipkin_direction(basis, Parity::Even, conv, sign),
        lipkin_direction(basis, Parity::Odd, conv, sign),
    ];
    let mut m = [0.0f64; 4];
    for g in ground {
        if g.len() != basis.len() {
            return Err(AnalyticError::BasisMismatch);
        }
        let p = [dot(g, &dirs[0]), dot(g, &dirs[1])];
        for a in 0..2 {
            for b in 0..2 {
                m[2 * a + b] += p[a] * p[b];
            }
        }
    }
    let (vals, vecs) = crate::linalg::symmetric_eigen(2, &m);
    let (mut c1, mut c2) = (vecs[2], vecs[3]);
    if c1 < 0.0 || (c1 == 0.0 && c2 < 0.0) {
        c1 = -c1;
        c2 = -c2;
    }
    Ok(AnsatzFit {
        c1,
        c2,
        fidelity: vals[1],
        min_fidelity: vals[0],
    })
}

/// Ground subspace of `model` at `params` embedded into the full basis.
pub fn ground_in_full_basis(
    model: &Model,
    params: &HamiltonianParams,
    cfg: &SolverConfig,
    full: &SectorBasis,
) -> Result<Vec<Vec<f64>>, AnalyticError> {
    let sol = model.solve(params, cfg, None)?;
    Ok(sol
        .ground_members()
        .into_iter()
        .map(|(s, v)| {
            let sector = &model.sectors()[s];
            embed(&sector.basis, &sector.lift(v), full)
        })
        .collect())
}

/// `(1, −2, 0)/√5`: the direction `½(Λ̂ − 2Ŵ)/√5` whose ground level is the
/// exactly doubly degenerate beta pair.
pub fn beta_direction() -> HamiltonianParams {
    HamiltonianParams::two_body(1.0, -2.0, 0.0).scaled(1.0 / libm::sqrt(5.0))
}

/// `(−1, −2, 0)/√5`, the alpha counterpart.
pub fn alpha_direction() -> HamiltonianParams {
    HamiltonianParams::two_body(-1.0, -2.0, 0.0).scaled(1.0 / libm::sqrt(5.0))
}

pub fn pairing_direction() -> HamiltonianParams {
    HamiltonianParams::two_body(0.0, 0.0, 1.0)
}

/// `H + σ b bᵀ` for unit vectors `b`: pushes the given directions out of the
/// bottom of the spectrum.
struct Deflated<'a> {
    op: &'a SparseOperator,
    dirs: &'a [Vec<f64>],
    shift: f64,
}

impl LinearOperator for Deflated<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply(x, y);
        for b in self.dirs {
            crate::linalg::axpy(self.shift * dot(b, x), b, y);
        }
    }
}

/// One point of the beta-to-pairing scan.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanPoint {
    pub chi: f64,
    /// `⟨b|H|b⟩` of the beta direction (equal in both sectors).
    pub e_beta: f64,
    /// Lowest level orthogonal to the beta directions.
    pub e_other: f64,
    /// `e_other − e_beta`: positive while the beta pair is the ground level.
    pub gap: f64,
    /// `max ‖H b − ⟨b|H|b⟩ b‖` over the beta directions.
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LevelCrossing {
    pub chi: f64,
    /// `|gap|` at the located point.
    pub gap: f64,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CrossingScan {
    pub n: usize,
    pub start: HamiltonianParams,
    pub end: HamiltonianParams,
    pub points: Vec<ScanPoint>,
    pub crossing: Option<LevelCrossing>,
    pub max_coupling: f64,
}

/// Follows `H(χ) = (1−χ)·beta_direction + χ·pairing_direction` on a uniform
/// grid of `grid` points. The beta directions of both parity sectors are
/// tracked explicitly; every other level is found with those directions
/// shifted out of the spectrum. A sign change of the gap is refined by
/// bisection.
pub fn level_crossing_scan(model: &Model, grid: usize, cfg: &SolverConfig) -> Result<CrossingScan, AnalyticError> {
    let start = beta_direction();
    let end = pairing_direction();
    let sectors = model.sectors();
    let betas: Vec<Vec<Vec<f64>>> = sectors
        .iter()
        .map(|s| {
            let mut out = Vec::new();
            for p in [Parity::Even, Parity::Odd] {
                let mut d = s.restrict(&lipkin_direction(&s.basis, p, Conventions::default(), Some(false)));
                if norm(&d) > 0.5 {
                    crate::linalg::normalize(&mut d);
                    out.push(d);
                }
            }
            out
        })
        .collect();
    let cfg = &SolverConfig { k: 2, ..cfg.clone() };
    let mut warm: Vec<Vec<Vec<f64>>> = alloc::vec![Vec::new(); sectors.len()];
    let mut eval = |chi: f64| -> Result<ScanPoint, AnalyticError> {
        let params = start.lerp(&end, chi);
        let mut e_beta = f64::INFINITY;
        let mut e_other = f64::INFINITY;
        let mut coupling: f64 = 0.0;
        for ((s, dirs), guesses) in sectors.iter().zip(&betas).zip(warm.iter_mut()) {
            let h = s.terms.assemble(&params);
            let mut y = alloc::vec![0.0; h.dim()];
            let mut top = f64::NEG_INFINITY;
            for b in dirs {
                h.apply(b, &mut y);
                let e = dot(b, &y);
                crate::linalg::axpy(-e, b, &mut y);
                coupling = coupling.max(norm(&y));
                e_beta = e_beta.min(e);
                top = top.max(e);
            }
            // a modest shift keeps the spectrum narrow; it grows only if the
            // shifted beta level still comes out lowest
            let mut shift = 2.0 * libm::fabs(top) + 1.0;
            let sol = loop {
                let op = Deflated {
                    op: &h,
                    dirs,
                    shift,
                };
                let sol = ground_subspace_from(&op, cfg, guesses)?;
                let leak: f64 = dirs.iter().map(|b| { let x = dot(b, &sol.vectors[0]); x * x }).sum();
                if leak < 0.5 {
                    break sol;
                }
                shift *= 4.0;
            };
            e_other = e_other.min(sol.ground_energy());
            *guesses = sol.vectors;
        }
        Ok(ScanPoint {
            chi,
            e_beta,
            e_other,
            gap: e_other - e_beta,
            coupling,
        })
    };
    let chis = crate::trajectory::uniform_grid(grid.max(2));
    let mut points = Vec::with_capacity(chis.len());
    for &c in &chis {
        points.push(eval(c)?);
    }
    let mut crossing = None;
    if let Some(k) = points.windows(2).position(|w| w[0].gap > 0.0 && w[1].gap <= 0.0) {
        let (mut a, mut b) = (points[k].chi, points[k + 1].chi);
        let (mut fa, mut fb) = (points[k].gap, points[k + 1].gap);
        let mut best = if fa.abs() < fb.abs() { points[k].clone() } else { points[k + 1].clone() };
        // Illinois false position: the gap is smooth on either side of the
        // crossing, so this converges in a handful of solves
        let mut side = 0i8;
        for _ in 0..80 {
            if best.gap.abs() <= 1e-12 || b - a <= 1e-15 {
                break;
            }
            let mut m = (a * fb - b * fa) / (fb - fa);
            if !(m > a && m < b) {
                m = 0.5 * (a + b);
            }
            let p = eval(m)?;
            if p.gap > 0.0 {
                a = m;
                fa = p.gap;
                if side == 1 {
                    fb *= 0.5;
                }
                side = 1;
            } else {
                b = m;
                fb = p.gap;
                if side == -1 {
                    fa *= 0.5;
                }
                side = -1;
            }
            if p.gap.abs() < best.gap.abs() {
                best = p.clone();
            }
            // refinement points join the profile so the coupling bound covers them too
            points.push(p);
        }
        crossing = Some(LevelCrossing {
            chi: best.chi,
            gap: best.gap.abs(),
            bracket: (a, b),
        });
    }
    points.sort_by(|x, y| x.chi.total_cmp(&y.chi));
    let max_coupling = points.iter().map(|p| p.coupling).fold(0.0, f64::max);
    Ok(CrossingScan {
        n: model.particles(),
        start,
        end,
        points,
        crossing,
        max_coupling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::dense_eigen;
    use crate::hamiltonian::ModelTerms;
    use crate::model::Blocking;

    #[test]
    fn class_sizes_and_completeness() {
        for n in [2, 4, 6, 8] {
            let r = class_algebra_report(n).unwrap();
            assert_eq!(r.lipkin_states, 1 << n);
            assert_eq!(r.lipkin_classified, r.lipkin_states);
            for row in &r.sizes {
                assert_eq!(row.fock_count as usize, row.enumerated, "{}", row.class);
            }
        }
    }

    #[test]
    fn g_action_is_a_class_expansion() {
        for n in [4, 6, 8] {
            let r = class_algebra_report(n).unwrap();
            assert_eq!(r.max_cross_j, 0.0);
            assert_eq!(r.max_spread, 0.0);
            assert_eq!(r.max_unclassified, 0.0);
            assert!(r.slot_count_mismatches.is_empty(), "{:?}", r.slot_count_mismatches);
        }
    }

    #[test]
    fn fpc_at_two_particles() {
        let b = SectorBasis::enumerate(2, None).unwrap();
        let f = build_ansatz(AnsatzKind::Fpc, 1.0, 0.0, &b, Conventions::default()).unwrap();
        let h = 1.0 / libm::sqrt(2.0);
        for (k, s) in b.states().iter().enumerate() {
            let want = if *s == FockState::from_orbitals(&[0, 1]) || *s == FockState::from_orbitals(&[2, 3]) {
                h
            } else {
                0.0
            };
            assert!((f.vector[k] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn beta_pair_is_annihilated_and_ground() {
        for n in [4, 6] {
            let b = SectorBasis::enumerate(n, None).unwrap();
            let t = ModelTerms::build(&b);
            let h = t.assemble(&beta_direction());
            let pairs = dense_eigen(b.len(), &h.to_dense());
            let e0 = pairs[0].0;
            assert!((pairs[1].0 - e0).abs() < 1e-10 && pairs[2].0 - e0 > 1e-3);
            let ground: Vec<Vec<f64>> = pairs[..2].iter().map(|p| p.1.clone()).collect();
            let fit = fit_coefficients(AnsatzKind::Beta1, &b, &ground, Conventions::default()).unwrap();
            assert!(fit.min_fidelity > 1.0 - 1e-10, "{fit:?}");
            for count in [PairCount::Upper, PairCount::Lower] {
                for order in [PhaseOrder::Column, PhaseOrder::Ascending] {
                    let conv = Conventions { pair_count: count, order };
                    for kind in [AnsatzKind::Beta1, AnsatzKind::Beta2] {
                        let s = build_ansatz(kind, 0.6, 0.8, &b, conv).unwrap();
                        assert!(verify_annihilation(&s, &t.g).unwrap() < 1e-12);
                    }
                }
            }
            let asc = Conventions {
                order: PhaseOrder::Ascending,
                ..Conventions::default()
            };
            let fit = fit_coefficients(AnsatzKind::Beta1, &b, &ground, asc).unwrap();
            assert!(fit.min_fidelity < 0.99);
        }
    }

    #[test]
    fn alpha_pair_fits_and_couples() {
        let b = SectorBasis::enumerate(4, None).unwrap();
        let t = ModelTerms::build(&b);
        let h = t.assemble(&alpha_direction());
        let pairs = dense_eigen(b.len(), &h.to_dense());
        let d = pairs.iter().filter(|p| p.0 - pairs[0].0 < 1e-8).count();
        let ground: Vec<Vec<f64>> = pairs[..d].iter().map(|p| p.1.clone()).collect();
        let fit = fit_coefficients(AnsatzKind::Alpha1, &b, &ground, Conventions::default()).unwrap();
        assert!(fit.min_fidelity > 1.0 - 1e-10, "{fit:?}");
        let c = 1.0 / libm::sqrt(2.0);
        for kind in [AnsatzKind::Alpha1, AnsatzKind::Alpha2] {
            let a = build_ansatz(kind, c, c, &b, Conventions::default()).unwrap();
            let mut y = alloc::vec![0.0; b.len()];
            t.g.apply(&a.vector, &mut y);
            assert!(non_lipkin_norm(&b, &y) > 0.1);
            assert!(verify_annihilation(&a, &t.g).is_err());
        }
    }

    #[test]
    fn crossing_at_four_particles() {
        let m = Model::new(4, Blocking::Parity).unwrap();
        let s = level_crossing_scan(&m, 21, &SolverConfig::default()).unwrap();
        assert!(s.max_coupling < 1e-10);
        let c = s.crossing.unwrap();
        assert!(c.gap <= 1e-10);
        assert!(s.points[0].gap > 0.0 && s.points.last().unwrap().gap < 0.0);
    }
}
