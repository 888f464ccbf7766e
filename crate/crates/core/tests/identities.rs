//! Exact identities: the particle-hole map, beta annihilation and the
//! Lipkin class algebra.

use std::collections::BTreeMap;

use fecx_core::analytic::{
    build_ansatz, class_algebra_report, classify_state, AnsatzKind, ClassFamily, Conventions, LipkinClass, PairCount,
    PhaseOrder,
};
use fecx_core::eigen::SolverConfig;
use fecx_core::fock::{FockState, SectorBasis};
use fecx_core::hamiltonian::build_g_pair;
use fecx_core::linalg::{norm, LinearOperator};
use fecx_core::model::{Blocking, Model};
use fecx_core::rdm::{map_d_to_g, one_rdm, two_rdm, Ensemble};
use fecx_core::sampling::sphere_directions;
use fecx_oracle::{dense_terms, DirectRdms, FockSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn choose(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, t| acc * (n - t) / (t + 1))
}

#[test]
fn mapped_g_equals_ladder_g_for_random_ground_states() {
    let n = 4;
    let r = 2 * n;
    let space = FockSpace::new(r);
    let model = Model::new(n, Blocking::Parity).unwrap();
    let cfg = SolverConfig::default();
    let mut worst = 0.0f64;
    for p in sphere_directions(200, 17) {
        let sol = model.solve(&p, &cfg, None).unwrap();
        let (s, v) = sol.ground_members()[0];
        let basis = &model.sectors()[s].basis;
        let idx: Vec<u32> = basis.states().iter().map(|x| x.bits()).collect();
        let vs = [v.to_vec()];
        let ens = Ensemble::new(basis, &vs, None).unwrap();
        let mapped = map_d_to_g(&two_rdm(basis, &ens), &one_rdm(basis, &ens)).unwrap();
        let direct = DirectRdms::new(&space, &space.embed(v, &idx));
        for i in 0..r {
            for j in 0..r {
                for k in 0..r {
                    for l in 0..r {
                        worst = worst.max((mapped.get(i, j, k, l) - direct.g(i, j, k, l)).abs());
                    }
                }
            }
        }
    }
    assert!(worst <= 1e-12, "largest difference {worst:e}");
}

fn conventions() -> Vec<Conventions> {
    let mut out = Vec::new();
    for pair_count in [PairCount::Upper, PairCount::Lower] {
        for order in [PhaseOrder::Column, PhaseOrder::Ascending] {
            out.push(Conventions { pair_count, order });
        }
    }
    out
}

#[test]
fn beta_states_are_annihilated_by_pair_hopping() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for n in [4, 6, 8] {
        let basis = SectorBasis::enumerate(n, None).unwrap();
        let g = build_g_pair(&basis);
        let mut y = vec![0.0; basis.len()];
        for conv in conventions() {
            for _ in 0..20 {
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let b1 = build_ansatz(AnsatzKind::Beta1, t.cos(), t.sin(), &basis, conv).unwrap();
                let b2 = build_ansatz(AnsatzKind::Beta2, t.cos(), t.sin(), &basis, conv).unwrap();
                // any vector of the span
                let (a, b) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let mix: Vec<f64> = b1.vector.iter().zip(&b2.vector).map(|(x, z)| a * x + b * z).collect();
                for v in [&b1.vector, &b2.vector, &mix] {
                    g.apply(v, &mut y);
                    assert!(norm(&y) <= 1e-10 * norm(v).max(1.0), "N = {n} {conv:?}: {:e}", norm(&y));
                }
            }
        }
    }
}

#[test]
fn beta_annihilation_holds_for_the_dense_operator() {
    let n = 4;
    let space = FockSpace::new(2 * n);
    let t = dense_terms(&space, n);
    let basis = SectorBasis::enumerate(n, None).unwrap();
    let idx: Vec<u32> = basis.states().iter().map(|x| x.bits()).collect();
    for k in 0..20 {
        let th = 0.31 * k as f64;
        for kind in [AnsatzKind::Beta1, AnsatzKind::Beta2] {
            let s = build_ansatz(kind, th.cos(), th.sin(), &basis, Conventions::default()).unwrap();
            let out = &t.g * space.embed(&s.vector, &idx);
            assert!(out.norm() <= 1e-10);
        }
    }
}

/// Slot-by-slot class of a state, computed from the bit pattern alone.
fn slot_class(bits: u32, n: usize) -> Option<(usize, usize)> {
    let (mut i, mut j) = (0, 0);
    for s in 0..n / 2 {
        let lo = (bits >> (2 * s)) & 3;
        let up = (bits >> (n + 2 * s)) & 3;
        match (lo, up) {
            (3, 0) => {}
            (0, 3) => i += 1,
            (1, 2) | (2, 1) => j += 1,
            _ => return None,
        }
    }
    Some((i, j))
}

#[test]
fn class_sizes_follow_binomial_counts() {
    for n in [4, 6, 8] {
        let h = (n / 2) as u64;
        let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for bits in 0u32..1 << (2 * n) {
            if bits.count_ones() as usize != n {
                continue;
            }
            if let Some(ij) = slot_class(bits, n) {
                *counts.entry(ij).or_default() += 1;
                let c = classify_state(FockState(bits), n).unwrap();
                assert_eq!((c.family, c.i, c.j), (ClassFamily::Lipkin, ij.0, ij.1));
            }
        }
        for j in 0..=h {
            for i in 0..=h - j {
                let arrangements = choose(h, j) * choose(h - j, i);
                let cls = LipkinClass::lipkin(n, i as usize, j as usize).unwrap();
                assert_eq!(cls.slot_arrangements(), arrangements);
                // each crossed slot has two realisations
                let want = arrangements << j;
                assert_eq!(counts.get(&(i as usize, j as usize)).copied().unwrap_or(0), want, "N = {n} |{i},{j}>");
            }
        }
        let report = class_algebra_report(n).unwrap();
        for row in &report.sizes {
            assert_eq!(row.fock_count as usize, row.enumerated);
        }
    }
}

#[test]
fn pair_hopping_conserves_crossed_slots() {
    for n in [4, 6, 8] {
        let report = class_algebra_report(n).unwrap();
        assert!(report.max_cross_j <= 1e-12, "N = {n}: {}", report.max_cross_j);
        assert!(report.max_unclassified <= 1e-12);
        assert!(report.max_spread <= 1e-12);
        // the slot-count expansion is the closed form the tests hold to
        assert!(report.slot_count_mismatches.is_empty(), "{:?}", report.slot_count_mismatches);
    }
}
