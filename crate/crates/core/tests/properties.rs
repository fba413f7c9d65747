use proptest::prelude::*;
use tomobench_core::projector::Projector;
use tomobench_core::*;

fn grid_strategy(side: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..2.0, side * side)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn phantoms_are_pure(seed in any::<u64>(), side in 16usize..48) {
        let spec = PhantomSpec::random_ellipses(seed, side);
        let a = make_random_ellipses(&spec).unwrap();
        let b = spec.generate().unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn projector_is_linear(x in grid_strategy(12), y in grid_strategy(12), a in -3.0f64..3.0, views in 1usize..9) {
        let g = ScanGeometry::full_angle(views, 18, 1.0).unwrap();
        let p = Projector::new(&g, 12).unwrap();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + v).collect();
        let (px, py, pm) = (p.forward(&x), p.forward(&y), p.forward(&mix));
        for i in 0..pm.len() {
            prop_assert!((pm[i] - (a * px[i] + py[i])).abs() <= 1e-10 * (1.0 + pm[i].abs()));
        }
    }

    #[test]
    fn adjoint_dot_test(x in grid_strategy(12), seed in any::<u64>(), views in 1usize..9) {
        let g = ScanGeometry::full_angle(views, 18, 0.9).unwrap();
        let p = Projector::with_pixel_size(&g, 12, 0.9).unwrap();
        let mut rng = tomobench_core::rng::Stream::new(seed, 0);
        let y: Vec<f64> = (0..g.n_rays()).map(|_| rng.uniform() - 0.5).collect();
        let ax = p.forward(&x);
        let aty = p.adjoint(&y);
        let lhs: f64 = ax.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&aty).map(|(a, b)| a * b).sum();
        let scale = ax.iter().map(|v| v * v).sum::<f64>().sqrt() * y.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn pearson_is_bounded_and_symmetric(x in grid_strategy(6), y in grid_strategy(6)) {
        let a = ImageGrid::from_values(6, 1.0, x).unwrap();
        let b = ImageGrid::from_values(6, 1.0, y).unwrap();
        if let (Ok(r1), Ok(r2)) = (pearson_r(&a, &b), pearson_r(&b, &a)) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r1));
            prop_assert!((r1 - r2).abs() < 1e-14);
        }
    }

    #[test]
    fn tv_is_homogeneous(x in grid_strategy(8), a in -5.0f64..5.0) {
        let img = ImageGrid::from_values(8, 1.0, x).unwrap();
        let scaled = img.with_values(img.values().iter().map(|v| a * v).collect());
        let (t, ts) = (tv_value(&img), tv_value(&scaled));
        prop_assert!((ts - a.abs() * t).abs() <= 1e-10 * (1.0 + ts));
    }

    #[test]
    fn noise_depends_only_on_seed_ray_and_mean(seed in 1u64.., n0 in 1.0f64..1e5) {
        let g = ScanGeometry::full_angle(3, 6, 1.0).unwrap();
        let sino = Sinogram::new(g.clone(), (0..18).map(|i| i as f64 * 0.1).collect()).unwrap();
        let a = simulate_counts(&sino, n0, seed).unwrap();
        let b = simulate_counts(&sino, n0, seed).unwrap();
        prop_assert_eq!(&a.counts, &b.counts);
        // changing one ray's mean leaves the others untouched
        let mut v = sino.values().to_vec();
        v[7] += 1.0;
        let c = simulate_counts(&Sinogram::new(g, v).unwrap(), n0, seed).unwrap();
        for i in (0..18).filter(|&i| i != 7) {
            prop_assert_eq!(a.counts[i], c.counts[i]);
        }
    }
}
