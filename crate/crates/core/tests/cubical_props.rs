use proptest::prelude::*;
use taco_core::cubical::oracle::oracle_persistence;
use taco_core::cubical::{compute_persistence, CubicalComplex, PersistenceDiagram};

fn image(max_dim: usize, levels: u32) -> impl Strategy<Value = ([usize; 3], Vec<f64>)> {
    (1..=max_dim, 1..=max_dim, 1..=max_dim).prop_flat_map(move |(x, y, z)| {
        (
            Just([x, y, z]),
            proptest::collection::vec((0..levels).prop_map(f64::from), x * y * z),
        )
    })
}

fn persistence(dims: [usize; 3], values: &[f64]) -> (CubicalComplex, PersistenceDiagram) {
    let k = CubicalComplex::from_voxel_values(dims, values).unwrap();
    let d = compute_persistence(&k);
    (k, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn matches_oracle((dims, values) in image(5, 8)) {
        let (k, d) = persistence(dims, &values);
        prop_assert_eq!(d, oracle_persistence(&k));
    }

    #[test]
    fn euler_characteristic_at_every_level((dims, values) in image(5, 6)) {
        let (k, d) = persistence(dims, &values);
        let mut levels = values.clone();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        for t in levels {
            let b = d.betti_at(t);
            prop_assert_eq!(b[0] as i64 - b[1] as i64 + b[2] as i64, k.euler_characteristic_at(t));
        }
    }

    #[test]
    fn shift_and_scale_laws((dims, values) in image(5, 8), shift in -20i32..20, scale in 1u32..6) {
        let (_, d) = persistence(dims, &values);
        let c = f64::from(shift);
        let shifted: Vec<f64> = values.iter().map(|v| v + c).collect();
        prop_assert_eq!(persistence(dims, &shifted).1, d.map_values(|v| v + c));
        let l = f64::from(scale) * 0.5;
        let scaled: Vec<f64> = values.iter().map(|v| v * l).collect();
        prop_assert_eq!(persistence(dims, &scaled).1, d.map_values(|v| v * l));
    }

    #[test]
    fn exactly_one_essential_class((dims, values) in image(4, 5)) {
        let (_, d) = persistence(dims, &values);
        prop_assert_eq!(d.essential_count(0), 1);
        prop_assert_eq!(d.pairs().iter().filter(|p| p.essential).count(), 1);
        prop_assert!(d.pairs().iter().all(|p| p.birth <= p.death));
        prop_assert!(d.pairs().iter().all(|p| p.essential || p.death > p.birth));
    }

    #[test]
    fn monotone_complex((dims, values) in image(4, 8)) {
        prop_assert!(persistence(dims, &values).0.is_monotone());
    }
}

/// Mirroring the image changes the canonical cell order among equal values
/// but not the diagram.
#[test]
fn mirrored_image_has_the_same_diagram() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let dims = [rng.random_range(1..=5), rng.random_range(1..=5), rng.random_range(1..=5)];
        let n = dims.iter().product::<usize>();
        let values: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..3u32))).collect();
        let mirrored: Vec<f64> = (0..n)
            .map(|i| {
                let (x, y, z) = (i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1]));
                values[(dims[0] - 1 - x) + dims[0] * ((dims[1] - 1 - y) + dims[1] * (dims[2] - 1 - z))]
            })
            .collect();
        assert_eq!(persistence(dims, &values).1, persistence(dims, &mirrored).1);
    }
}

#[test]
fn torus_like_ring_in_3d() {
    // a 4x4x1 ring of low voxels around a high 2x2 center
    let mut v = vec![0.0; 16];
    for (x, y) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        v[x + 4 * y] = 1.0;
    }
    let (_, d) = persistence([4, 4, 1], &v);
    assert_eq!(d.slice(1), vec![(0.0, 1.0)]);
    assert!(d.slice(2).is_empty());
}
