use proptest::prelude::*;
use taco_core::pc_io::{load_xyz, sample_mesh, save_xyz, PointCloud, TriangleMesh};
use taco_core::voxel::{decode_binary_image, encode_binary_image, voxelize};

/// Disjoint right triangles along x with legs `s`, so each sample can be
/// attributed to its triangle by its x coordinate.
fn strip_mesh(sizes: &[f64]) -> TriangleMesh {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, &s) in sizes.iter().enumerate() {
        let x0 = 10.0 * i as f64;
        let k = vertices.len();
        vertices.extend([[x0, 0.0, 0.0], [x0 + s, 0.0, 0.0], [x0, s, 0.0]]);
        faces.push([k, k + 1, k + 2]);
    }
    TriangleMesh::new(vertices, faces).unwrap()
}

fn counts(cloud: &PointCloud, n_tri: usize) -> Vec<usize> {
    let mut c = vec![0; n_tri];
    for p in &cloud.points {
        c[(p[0] / 10.0).floor() as usize] += 1;
    }
    c
}

#[test]
fn nine_to_one_area_split() {
    // legs 3 and 1 give areas 4.5 and 0.5
    let cloud = sample_mesh(&strip_mesh(&[3.0, 1.0]), 100_000, 42).unwrap();
    let c = counts(&cloud, 2);
    let share = c[0] as f64 / 100_000.0;
    assert!((share - 0.9).abs() <= 0.01, "{c:?}");
    assert!(((1.0 - share) - 0.1).abs() <= 0.01, "{c:?}");
}

#[test]
fn triangle_frequencies_pass_chi_square() {
    let sizes = [1.0, 2.0, 0.5, 3.0, 1.5];
    let areas: Vec<f64> = sizes.iter().map(|s| s * s / 2.0).collect();
    let total: f64 = areas.iter().sum();
    let n = 100_000;
    for seed in [1, 2, 3] {
        let c = counts(&sample_mesh(&strip_mesh(&sizes), n, seed).unwrap(), sizes.len());
        let chi2: f64 = c
            .iter()
            .zip(&areas)
            .map(|(&o, a)| {
                let e = n as f64 * a / total;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        // upper 0.001 quantile of chi-square with 4 degrees of freedom
        assert!(chi2 < 18.467, "seed {seed}: chi2 {chi2}, counts {c:?}");
    }
}

#[test]
fn xyz_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.xyz");
    let cloud = PointCloud::new(vec![[0.1, -2.5e-7, 3.0], [1.0 / 3.0, 2.0f64.sqrt(), -0.0]]).unwrap();
    save_xyz(&path, &cloud, &["made by a test".into()]).unwrap();
    assert_eq!(load_xyz(&path).unwrap().points, cloud.points);
}

fn cloud_strategy() -> impl Strategy<Value = Vec<[f64; 3]>> {
    // multiples of 1/1024 keep every translation below exact
    proptest::collection::vec(
        (-512i32..512, -512i32..512, -512i32..512).prop_map(|(a, b, c)| [a, b, c].map(|v| f64::from(v) / 1024.0)),
        1..200,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(80))]

    #[test]
    fn sample_size_is_exact(n in 1usize..500, seed in any::<u64>()) {
        prop_assert_eq!(sample_mesh(&strip_mesh(&[1.0, 2.0]), n, seed).unwrap().len(), n);
    }

    #[test]
    fn voxelization_properties(pts in cloud_strategy(), rho_k in 1u32..8) {
        let rho = f64::from(rho_k) * 0.0625;
        let cloud = PointCloud::new(pts.clone()).unwrap();
        let img = voxelize(&cloud, rho).unwrap();
        prop_assert!(img.active_count() >= 1);
        prop_assert!(img.active_count() <= pts.len());
        let (lo, hi) = cloud.bounds();
        for k in 0..3 {
            let expect = (((hi[k] - lo[k]) / rho).ceil() as usize).max(1);
            prop_assert_eq!(img.dims()[k], expect);
        }
        // translating the cloud translates the origin and leaves voxels alone
        let t = [1.5, -3.25, 0.75];
        let moved = voxelize(&cloud.translated(t), rho).unwrap();
        prop_assert_eq!(moved.dims(), img.dims());
        prop_assert_eq!(moved.voxels(), img.voxels());
        for k in 0..3 {
            prop_assert_eq!(moved.origin[k], img.origin[k] + t[k]);
        }
        // point order is irrelevant
        let mut rev = pts.clone();
        rev.reverse();
        let reversed = voxelize(&PointCloud::new(rev).unwrap(), rho).unwrap();
        prop_assert_eq!(reversed.voxels(), img.voxels());
        // binary volume codec round trip
        let back = decode_binary_image(&encode_binary_image(&img).unwrap()).unwrap();
        prop_assert_eq!(back.voxels(), img.voxels());
        prop_assert_eq!(back.dims(), img.dims());
    }
}
