//! Sparse constructions against dense ladder-operator products.

use fecx_core::eigen::SolverConfig;
use fecx_core::fock::{Parity, SectorBasis};
use fecx_core::hamiltonian::{build_e, build_g_pair, build_lambda, build_w, HamiltonianParams, ModelTerms, SparseOperator};
use fecx_core::model::{Blocking, Model};
use fecx_core::rdm::{direct_g, map_d_to_g, one_rdm, two_rdm, Ensemble};
use fecx_oracle::{dense_terms, jacobi_eigen, DirectRdms, FockSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn states(basis: &SectorBasis) -> Vec<u32> {
    basis.states().iter().map(|s| s.bits()).collect()
}

fn assert_entrywise(name: &str, sparse: &SparseOperator, space: &FockSpace, full: &nalgebra::DMatrix<f64>, idx: &[u32]) {
    let dense = space.restrict(full, idx);
    for r in 0..idx.len() {
        for c in 0..idx.len() {
            let d = (sparse.get(r, c) - dense[(r, c)]).abs();
            assert!(d <= 1e-14, "{name} ({r}, {c}): {} vs {}", sparse.get(r, c), dense[(r, c)]);
        }
    }
}

#[test]
fn terms_equal_elementary_products() {
    for n in [2, 4] {
        let space = FockSpace::new(2 * n);
        let t = dense_terms(&space, n);
        for parity in [None, Some(Parity::Even), Some(Parity::Odd)] {
            let basis = SectorBasis::enumerate(n, parity).unwrap();
            let idx = states(&basis);
            assert_entrywise("E", &build_e(&basis), &space, &t.e, &idx);
            assert_entrywise("Lambda", &build_lambda(&basis), &space, &t.lambda, &idx);
            assert_entrywise("W", &build_w(&basis), &space, &t.w, &idx);
            assert_entrywise("G", &build_g_pair(&basis), &space, &t.g, &idx);
        }
    }
}

#[test]
fn parity_sectors_exhaust_the_dense_coupling() {
    let n = 4;
    let space = FockSpace::new(2 * n);
    let t = dense_terms(&space, n);
    let h = t.hamiltonian(0.0, 0.7, -0.3, 1.1);
    let even = states(&SectorBasis::enumerate(n, Some(Parity::Even)).unwrap());
    let odd = states(&SectorBasis::enumerate(n, Some(Parity::Odd)).unwrap());
    for &a in &even {
        for &b in &odd {
            assert_eq!(h[(a as usize, b as usize)], 0.0);
        }
    }
}

#[test]
fn assembled_hamiltonian_equals_dense_sum() {
    let n = 4;
    let space = FockSpace::new(2 * n);
    let t = dense_terms(&space, n);
    let basis = SectorBasis::enumerate(n, None).unwrap();
    let idx = states(&basis);
    let terms = ModelTerms::build(&basis);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let p = HamiltonianParams::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let h = terms.assemble(&p);
        let dense = space.restrict(&t.hamiltonian(p.epsilon, p.lambda, p.w, p.g), &idx);
        for r in 0..idx.len() {
            for c in 0..idx.len() {
                assert!((h.get(r, c) - dense[(r, c)]).abs() <= 1e-14);
            }
        }
    }
}

#[test]
fn krylov_ground_energies_match_full_diagonalization() {
    let krylov = SolverConfig {
        dense_threshold: 0,
        ..SolverConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [2, 4] {
        let space = FockSpace::new(2 * n);
        let t = dense_terms(&space, n);
        let idx = fecx_oracle::sector_states(n);
        let model = Model::new(n, Blocking::Full).unwrap();
        for k in 0..8 {
            let eps = if k % 2 == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) };
            let p = HamiltonianParams::new(eps, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let h = space.restrict(&t.hamiltonian(p.epsilon, p.lambda, p.w, p.g), &idx);
            let (vals, _) = jacobi_eigen(&h);
            let sol = model.solve(&p, &krylov, None).unwrap();
            assert!(
                (sol.ground_energy() - vals[0]).abs() <= 1e-9,
                "N = {n} at {p:?}: {} vs {}",
                sol.ground_energy(),
                vals[0]
            );
        }
    }
}

#[test]
fn rdms_equal_ladder_expectations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [2, 4] {
        let r = 2 * n;
        let space = FockSpace::new(r);
        let basis = SectorBasis::enumerate(n, None).unwrap();
        let idx = states(&basis);
        for _ in 0..3 {
            let mut v: Vec<f64> = (0..basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= nv);
            let direct = DirectRdms::new(&space, &space.embed(&v, &idx));
            let vs = [v];
            let ens = Ensemble::new(&basis, &vs, None).unwrap();
            let d1 = one_rdm(&basis, &ens);
            let d2 = two_rdm(&basis, &ens);
            let g = direct_g(&basis, &ens);
            let mapped = map_d_to_g(&d2, &d1).unwrap();
            for i in 0..r {
                for j in 0..r {
                    assert!((d1.get(i, j) - direct.one(i, j)).abs() <= 1e-12);
                    for k in 0..r {
                        for l in 0..r {
                            let want2 = direct.two(i, j, k, l);
                            assert!((d2.element(i, j, k, l) - want2).abs() <= 1e-12, "2D {i}{j}{k}{l}");
                            let wantg = direct.g(i, j, k, l);
                            assert!((g.get(i, j, k, l) - wantg).abs() <= 1e-12, "direct G {i}{j}{k}{l}");
                            assert!((mapped.get(i, j, k, l) - wantg).abs() <= 1e-12, "mapped G {i}{j}{k}{l}");
                        }
                    }
                }
            }
        }
    }
}
