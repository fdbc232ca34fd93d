use lattice_vae::lattice::{
    cell_constants, e8_nearest, matched_delta, theta_coefficients, LatticeBasis, LatticeKind,
    ScaledProductLattice,
};
use lattice_vae::rng::seeded;
use proptest::prelude::*;

const KINDS: [LatticeKind; 4] = [
    LatticeKind::Z,
    LatticeKind::Z2,
    LatticeKind::A2,
    LatticeKind::E8,
];

fn product(kind: LatticeKind, deltas: &[f64]) -> ScaledProductLattice {
    ScaledProductLattice::new(LatticeBasis::new(kind), deltas.to_vec()).unwrap()
}

fn kind_strategy() -> impl Strategy<Value = LatticeKind> {
    prop::sample::select(KINDS.to_vec())
}

// two blocks with independent scales, plus a point and an integer shift
fn case() -> impl Strategy<Value = (LatticeKind, Vec<f64>, Vec<f64>, Vec<i64>)> {
    kind_strategy().prop_flat_map(|kind| {
        let t = 2 * kind.dim();
        (
            Just(kind),
            prop::collection::vec(0.2f64..3.0, 2),
            prop::collection::vec(-20.0f64..20.0, t),
            prop::collection::vec(-6i64..=6, t),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn nearest_point_matches_exhaustive_search((kind, deltas, v, _) in case()) {
        let l = product(kind, &deltas);
        let fast = l.nearest_point(&v).unwrap();
        let slow = l.brute_force_nearest(&v, None).unwrap();
        prop_assert_eq!(fast.coeffs, slow.coeffs);
    }

    #[test]
    fn quantizing_a_lattice_point_returns_it((kind, deltas, _, c) in case()) {
        let l = product(kind, &deltas);
        let p = l.point(c.clone()).unwrap();
        prop_assert_eq!(l.nearest_point(&p.embedding).unwrap().coeffs, c);
    }

    #[test]
    fn dithers_quantize_to_the_origin((kind, deltas, _, _) in case(), seed in any::<u64>()) {
        let l = product(kind, &deltas);
        let mut rng = seeded(seed);
        for _ in 0..20 {
            let u = l.sample_dither(&mut rng);
            prop_assert!(l.nearest_point(&u).unwrap().is_origin());
        }
    }

    #[test]
    fn quantization_commutes_with_lattice_shifts((kind, deltas, v, c) in case()) {
        let l = product(kind, &deltas);
        let p = l.point(c.clone()).unwrap();
        let w: Vec<f64> = v.iter().zip(&p.embedding).map(|(a, b)| a + b).collect();
        let base = l.nearest_point(&v).unwrap().coeffs;
        let shifted = l.nearest_point(&w).unwrap().coeffs;
        let want: Vec<i64> = base.iter().zip(&c).map(|(a, b)| a + b).collect();
        prop_assert_eq!(shifted, want);
    }

    #[test]
    fn lattice_norms_are_integers((kind, deltas, _, c) in case()) {
        let l = product(kind, &deltas);
        let basis = LatticeBasis::new(kind);
        let m = kind.dim();
        let p = l.point(c.clone()).unwrap();
        for (b, block) in c.chunks(m).enumerate() {
            let x = basis.embed(block);
            let norm: f64 = x.iter().map(|v| v * v).sum();
            prop_assert!((norm - norm.round()).abs() < 1e-9);
            prop_assert_eq!(norm.round() as u64, p.norm_sq_unscaled[b]);
        }
    }
}

#[test]
fn quantizer_examples() {
    let z2 = ScaledProductLattice::unit(LatticeKind::Z2);
    assert_eq!(z2.nearest_point(&[0.4, -1.6]).unwrap().coeffs, vec![0, -2]);
    let a2 = ScaledProductLattice::unit(LatticeKind::A2);
    let p = a2.nearest_point(&[0.0, 0.9]).unwrap();
    assert!((p.embedding[0]).abs() < 1e-12 && (p.embedding[1] - 1.0).abs() < 1e-12);
    assert_eq!(
        a2.nearest_point(&[0.8, 0.4]).unwrap(),
        a2.brute_force_nearest(&[0.8, 0.4], Some(3.0)).unwrap()
    );
    assert_eq!(e8_nearest(&[0.4; 8]).unwrap(), [0.5; 8]);
    let mut x = [0.0; 8];
    x[0] = 1.1;
    x[1] = 0.9;
    let mut want = [0.0; 8];
    want[0] = 1.0;
    want[1] = 1.0;
    assert_eq!(e8_nearest(&x).unwrap(), want);
}

#[test]
fn scaled_e8_matches_e8_nearest() {
    let l = ScaledProductLattice::uniform(LatticeBasis::new(LatticeKind::E8), 1, 0.5).unwrap();
    let mut rng = seeded(3);
    for _ in 0..1000 {
        let g: Vec<f64> = (0..8)
            .map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng))
            .collect();
        let norm = g.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        let v: Vec<f64> = g.iter().map(|x| x / norm).collect();
        let de_scaled: Vec<f64> = v.iter().map(|x| x / 0.5).collect();
        let want: Vec<f64> = e8_nearest(&de_scaled)
            .unwrap()
            .iter()
            .map(|x| x * 0.5)
            .collect();
        let fast = l.nearest_point(&v).unwrap();
        let slow = l.brute_force_nearest(&v, None).unwrap();
        assert_eq!(fast.coeffs, slow.coeffs);
        for (a, b) in fast.embedding.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn a2_dither_second_moment() {
    let a2 = ScaledProductLattice::unit(LatticeKind::A2);
    let c = cell_constants(&a2, 100_000, &mut seeded(4)).unwrap();
    let exact = LatticeBasis::new(LatticeKind::A2).exact_second_moment();
    assert!(
        (c.second_moment - exact).abs() < 3.0 * c.stderr,
        "{c:?} vs {exact}"
    );
    assert!(c.nsm > 1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::E));
}

#[test]
fn matched_delta_gives_the_requested_second_moment() {
    for kind in [LatticeKind::Z, LatticeKind::A2, LatticeKind::E8] {
        let basis = LatticeBasis::new(kind);
        let delta = matched_delta(&basis, 0.37).unwrap();
        let l = ScaledProductLattice::uniform(basis, 1, delta).unwrap();
        let c = cell_constants(&l, 50_000, &mut seeded(5)).unwrap();
        assert!(
            (c.second_moment - 0.37).abs() < 3.0 * c.stderr,
            "{kind}: {c:?}"
        );
    }
    let e8 = LatticeBasis::new(LatticeKind::E8);
    let published = matched_delta(&e8, e8.exact_nsm()).unwrap();
    assert!((published - 1.0).abs() < 1e-12);
}

#[test]
fn theta_sanity() {
    for kind in KINDS {
        let t = theta_coefficients(&LatticeBasis::new(kind), 6).unwrap();
        assert_eq!(t.get(&0), Some(&1), "{kind}");
        assert!(t.keys().all(|&k| k <= 6));
    }
}
