use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use smoothnn::metric::{region_mass, Metric, Region, Shape, Space};
use smoothnn::rng::seeded;

fn spaces() -> Vec<Space> {
    vec![
        Space::unit_interval(),
        Space::unit_square(),
        Space::unit_square().with_metric(Metric::LInfinity),
        Space::cube(-1.0, 2.0, 3),
        Space::new(
            Shape::Ball {
                radius: 1.0,
                dim: 3,
            },
            Metric::Euclidean,
        )
        .unwrap(),
    ]
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0x6d65),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn metric_axioms(seed in any::<u64>(), which in 0usize..5) {
        let space = &spaces()[which];
        let mut rng = seeded(seed);
        for _ in 0..10_000 / 64 {
            let x = space.sample_base(&mut rng);
            let y = space.sample_base(&mut rng);
            let z = space.sample_base(&mut rng);
            let d = |a: &[f64], b: &[f64]| space.distance(a, b).unwrap();
            prop_assert_eq!(d(&x, &x), 0.0);
            prop_assert!(d(&x, &y) > 0.0);
            prop_assert_eq!(d(&x, &y), d(&y, &x));
            let slack = 4.0 * f64::EPSILON * (d(&x, &y) + d(&y, &z));
            prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + slack);
        }
    }

}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn disjoint_union_mass_is_additive(
        seed in any::<u64>(),
        cuts in prop::collection::vec(0.05f64..0.95, 3),
    ) {
        let mut c = cuts.clone();
        c.sort_by(f64::total_cmp);
        let sq = Space::unit_square();
        // vertical strips [0,c0], [c0,c1], [c2,1] never overlap
        let parts = vec![
            Region::Cuboid { lo: vec![0.0, 0.0], hi: vec![c[0], 1.0] },
            Region::Cuboid { lo: vec![c[0], 0.2], hi: vec![c[1], 0.7] },
            Region::Cuboid { lo: vec![c[2], 0.0], hi: vec![1.0, 0.5] },
        ];
        let mut rng = seeded(seed);
        let sum: f64 = parts.iter().map(|p| region_mass(&sq, p, 0, &mut rng).unwrap().mass).sum();
        let u = region_mass(&sq, &Region::Union { parts }, 20_000, &mut rng).unwrap();
        prop_assert!(!u.exact);
        prop_assert!((u.mass - sum).abs() <= 3.0 * u.std_err.max(1e-12), "{} vs {}", u.mass, sum);
    }

    #[test]
    fn base_sampler_matches_sub_box_mass(
        seed in any::<u64>(),
        a in 0.0f64..0.6, b in 0.0f64..0.6, w in 0.1f64..0.4, h in 0.1f64..0.4,
    ) {
        let sq = Space::unit_square();
        let n = 20_000;
        let mut rng = seeded(seed);
        let hits = (0..n)
            .filter(|_| {
                let p = sq.sample_base(&mut rng);
                p[0] >= a && p[0] <= a + w && p[1] >= b && p[1] <= b + h
            })
            .count();
        let want = w * h;
        let se = (want * (1.0 - want) / n as f64).sqrt();
        prop_assert!((hits as f64 / n as f64 - want).abs() <= 3.0 * se);
    }
}
