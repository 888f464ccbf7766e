use std::sync::OnceLock;

use fecx_core::eigen::SolverConfig;
use fecx_core::fock::{apply_string, colex_rank, FockState, Parity, SectorBasis};
use fecx_core::geometry::{coefficient_of_variation, convex_hull, hull_contains};
use fecx_core::hamiltonian::{HamiltonianParams, ModelTerms};
use fecx_core::linalg::quadratic_form;
use fecx_core::model::{Blocking, Model};
use fecx_core::rdm::{compute_rdms, energy_from_coords, expectation_coords, lambda_d_bound, lambda_g_bound, Ensemble};
use fecx_oracle::FockSpace;
use proptest::prelude::*;

const N: usize = 4;

fn space() -> &'static FockSpace {
    static S: OnceLock<FockSpace> = OnceLock::new();
    S.get_or_init(|| FockSpace::new(2 * N))
}

fn basis() -> &'static SectorBasis {
    static B: OnceLock<SectorBasis> = OnceLock::new();
    B.get_or_init(|| SectorBasis::enumerate(N, None).unwrap())
}

fn terms() -> &'static ModelTerms {
    static T: OnceLock<ModelTerms> = OnceLock::new();
    T.get_or_init(|| ModelTerms::build(basis()))
}

fn occupation(n: usize) -> impl Strategy<Value = u32> {
    proptest::sample::subsequence((0..2 * n).collect::<Vec<_>>(), n)
        .prop_map(|orbs| orbs.iter().fold(0u32, |b, &o| b | 1 << o))
}

fn unit_state() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, basis().len()).prop_filter_map("zero vector", |mut v| {
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        (nv > 1e-3).then(|| {
            v.iter_mut().for_each(|x| *x /= nv);
            v
        })
    })
}

fn params() -> impl Strategy<Value = HamiltonianParams> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("zero couplings", |p| p.1.abs() + p.2.abs() + p.3.abs() > 1e-3)
        .prop_map(|(e, l, w, g)| HamiltonianParams::new(e, l, w, g))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_inverts_enumeration(n in prop_oneof![Just(2usize), Just(4), Just(6)], seed in any::<u64>()) {
        let b = SectorBasis::enumerate(n, None).unwrap();
        let k = (seed % b.len() as u64) as usize;
        let s = b.state(k);
        prop_assert_eq!(b.rank(s), Some(k));
        prop_assert_eq!(colex_rank(s.bits()), k);
    }

    #[test]
    fn colex_order_is_numeric_order(a in occupation(6), b in occupation(6)) {
        prop_assert_eq!(a.cmp(&b), colex_rank(a).cmp(&colex_rank(b)));
    }

    #[test]
    fn hop_signs_match_ladder_matrices(bits in occupation(N), p in 0..2 * N, q in 0..2 * N) {
        let out = apply_string(FockState(bits), &[p], &[q], 2 * N).unwrap();
        let m = space().string(&[(p, true), (q, false)]);
        for row in 0..space().dim() {
            let want = m[(row, bits as usize)];
            let got = match out {
                Some((s, sign)) if s.bits() as usize == row => sign as f64,
                _ => 0.0,
            };
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn hamiltonian_is_symmetric_and_parity_blocked(p in params()) {
        let h = terms().assemble(&p);
        prop_assert!(h.is_symmetric());
        let b = basis();
        let two_body = HamiltonianParams { epsilon: 0.0, ..p };
        let h2 = terms().assemble(&two_body);
        for (r, c, v) in h2.triples() {
            let pr = Parity::of(b.state(r).upper_count(N));
            let pc = Parity::of(b.state(c).upper_count(N));
            prop_assert!(v == 0.0 || pr == pc);
        }
    }

    #[test]
    fn rdm_traces_and_bounds(v in unit_state()) {
        let vs = [v];
        let ens = Ensemble::new(basis(), &vs, None).unwrap();
        let r = compute_rdms(basis(), &ens);
        let n = N as f64;
        prop_assert!((r.one.matrix.trace() - n).abs() < 1e-10);
        prop_assert!((r.two.matrix.trace() - n * (n - 1.0) / 2.0).abs() < 1e-10);
        for x in r.one.matrix.eigenvalues() {
            prop_assert!(x > -1e-10 && x < 1.0 + 1e-10);
        }
        prop_assert!(r.two.matrix.eigenvalues().iter().all(|&x| x > -1e-10));
        prop_assert!(r.lambda_d <= lambda_d_bound(N, 2 * N) + 1e-9);
        prop_assert!(r.lambda_g <= lambda_g_bound(N) + 1e-9);
        let pt = r.two.partial_trace(N);
        for (a, b) in pt.matrix.data.iter().zip(&r.one.matrix.data) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_is_linear_in_the_coordinates(v in unit_state(), p in params()) {
        let vs = [v];
        let ens = Ensemble::new(basis(), &vs, None).unwrap();
        let (c, e) = expectation_coords(terms(), &ens);
        let direct = quadratic_form(&terms().assemble(&p), &vs[0]);
        prop_assert!((energy_from_coords(&p, &c, e) - direct).abs() < 1e-10);
        let cc = compute_rdms(basis(), &ens).two.contract_terms();
        prop_assert!((cc.lambda - c.lambda).abs() < 1e-10);
        prop_assert!((cc.w - c.w).abs() < 1e-10);
        prop_assert!((cc.g - c.g).abs() < 1e-10);
    }

    #[test]
    fn ground_energy_scales_with_couplings(p in params(), c in 0.1f64..10.0) {
        static M: OnceLock<Model> = OnceLock::new();
        let m = M.get_or_init(|| Model::new(N, Blocking::Full).unwrap());
        let cfg = SolverConfig::default();
        let e = m.solve(&p, &cfg, None).unwrap().ground_energy();
        let es = m.solve(&p.scaled(c), &cfg, None).unwrap().ground_energy();
        prop_assert!((es - c * e).abs() < 1e-9 * c.max(1.0) * (1.0 + e.abs()));
    }

    #[test]
    fn hull_contains_every_point(pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..60)) {
        let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
        let hull = convex_hull(&pts);
        for q in &pts {
            prop_assert!(hull_contains(&hull, *q, 1e-9));
        }
        for h in &hull {
            prop_assert!(pts.contains(h));
        }
    }

    #[test]
    fn variation_coefficient_ignores_scale(x in proptest::collection::vec(0.1f64..100.0, 2..40), s in 0.01f64..100.0) {
        let a = coefficient_of_variation(&x).unwrap();
        let y: Vec<f64> = x.iter().map(|v| v * s).collect();
        let b = coefficient_of_variation(&y).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn interpolation_hits_both_endpoints(p in params(), q in params()) {
        prop_assert_eq!(p.lerp(&q, 0.0), p);
        prop_assert_eq!(p.lerp(&q, 1.0), q);
    }
}
