use lindoptics::channel::{
    choi_of, cp_witness, is_completely_positive, kraus_of, KrausSet, SuperoperatorMap, DEFAULT_CP_TOL,
};
use lindoptics::lindblad::{random_generator, rhs};
use lindoptics::operator::{expectation, fock_expectation, max_norm, FockSectorRep, Statistics};
use lindoptics::optics::{
    attenuation_exponent, diffusion_cross_section, optical_theorem_residual, summarize, Beam, Medium, Quadrature,
    StructureFunction,
};
use lindoptics::sample;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn peaked_table() -> StructureFunction {
    let q: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.005).collect();
    let s = q
        .iter()
        .map(|q| 1.0 + 0.8 * (-((q - 2.0) / 0.4).powi(2)).exp() - 0.7 * (-q * q).exp())
        .collect();
    StructureFunction::tabulated(q, s).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fock_sector_reproduces_the_trace(seed in any::<u64>(), n in 1usize..=4, bose in any::<bool>()) {
        let mut r = rng(seed);
        let stats = if bose { Statistics::Bose } else { Statistics::Fermi };
        let a = sample::hermitian(&mut r, n, 1.0);
        let w = sample::density_matrix(&mut r, n);
        let f = fock_expectation(
            &FockSectorRep::new(a.clone(), stats).unwrap(),
            &FockSectorRep::new(w.matrix().clone(), stats).unwrap(),
        ).unwrap();
        prop_assert!((f - expectation(&a, &w).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn cp_iff_no_witness(seed in any::<u64>(), d in 1usize..=3, weight in 0.0f64..1.0) {
        let mut r = rng(seed);
        let k = KrausSet::new(sample::trace_preserving_kraus(&mut r, d, 2)).unwrap();
        let map = SuperoperatorMap::from_kraus(&k).combine(1.0 - weight, &SuperoperatorMap::transpose(d), weight).unwrap();
        let v = is_completely_positive(&map, DEFAULT_CP_TOL).unwrap();
        match cp_witness(&map, DEFAULT_CP_TOL) {
            None => prop_assert!(v.is_cp()),
            Some(w) => {
                prop_assert!(!v.is_cp());
                prop_assert!(w.n <= d);
                prop_assert!(w.value < 0.0);
                prop_assert!((w.recompute(&map).re - w.value).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn choi_kraus_round_trip(seed in any::<u64>(), d in 1usize..=4, count in 1usize..=5) {
        let mut r = rng(seed);
        let map = SuperoperatorMap::from_kraus(&KrausSet::new(sample::trace_preserving_kraus(&mut r, d, count)).unwrap());
        let back = SuperoperatorMap::from_kraus(&kraus_of(&choi_of(&map), DEFAULT_CP_TOL).unwrap());
        for _ in 0..10 {
            let x = sample::ginibre(&mut r, d, 1.0);
            prop_assert!(max_norm(&(map.apply(&x) - back.apply(&x))) < 1e-10);
        }
    }

    #[test]
    fn derived_gamma_conserves_trace(seed in any::<u64>(), d in 1usize..=5, n_ls in 0usize..=3) {
        let mut r = rng(seed);
        let gen = random_generator(&mut r, d, n_ls, 1.0);
        let w = sample::density_matrix(&mut r, d);
        prop_assert!(rhs(&gen, &w).unwrap().trace().norm() < 1e-12);
    }

    #[test]
    fn units_rescaling_leaves_attenuation_unchanged(alpha in 0.2f64..5.0, lambda in 0.5f64..4.0) {
        let m = Medium::new(2e-3, 4.0, 1e7, peaked_table()).unwrap();
        let scaled = Medium { structure: m.structure.with_scaled_argument(alpha), ..m.clone() };
        let q = Quadrature::new(24, 4).unwrap();
        let a = summarize(&m, &Beam::new(lambda).unwrap(), &q).unwrap();
        let b = summarize(&scaled, &Beam::new(alpha * lambda).unwrap(), &q).unwrap();
        for (x, y) in [(a.sigma_d, b.sigma_d), (a.sigma, b.sigma), (a.contrast, b.contrast)] {
            prop_assert!((x / y - 1.0).abs() < 1e-12, "{x} vs {y}");
        }
        prop_assert!(b.optical_theorem_residual < 1e-12);
        // the phase and the refractive index carry λ explicitly
        prop_assert!((b.chi / a.chi / alpha - 1.0).abs() < 1e-12);
    }
}

#[test]
fn sigma_increases_with_density_thickness_and_b_squared() {
    let beam = Beam::new(1.8).unwrap();
    let q = Quadrature::default();
    let sigma = |n_o: f64, b: f64, d: f64| {
        attenuation_exponent(&Medium::new(n_o, b, d, peaked_table()).unwrap(), &beam, &q).unwrap()
    };
    let grid = [0.5, 1.0, 2.0, 4.0];
    for w in grid.windows(2) {
        assert!(sigma(w[0] * 1e-3, 5.0, 1e6) < sigma(w[1] * 1e-3, 5.0, 1e6));
        assert!(sigma(1e-3, 5.0, w[0] * 1e6) < sigma(1e-3, 5.0, w[1] * 1e6));
        assert!(sigma(1e-3, w[0], 1e6) < sigma(1e-3, w[1], 1e6));
        assert!(sigma(1e-3, -w[0], 1e6) < sigma(1e-3, -w[1], 1e6));
    }
    // doubling D doubles Σ
    assert!((sigma(1e-3, 5.0, 2e6) / sigma(1e-3, 5.0, 1e6) - 2.0).abs() < 1e-14);
}

#[test]
fn shared_quadrature_balance_for_a_peaked_table() {
    let m = Medium::new(1e-3, 5.0, 1e6, peaked_table()).unwrap();
    for lambda in [0.7, 2.0, 5.0] {
        let beam = Beam::new(lambda).unwrap();
        for q in [Quadrature::with_order(3).unwrap(), Quadrature::new(32, 5).unwrap()] {
            assert!(optical_theorem_residual(&m, &beam, &q).unwrap() < 1e-12);
            assert!(diffusion_cross_section(&m, &beam, &q).unwrap() > 0.0);
        }
    }
}
