//! Exact L1 (Manhattan) distance transform on a 3D grid.
//!
//! Two raster sweeps suffice for the L1 metric: the forward sweep relaxes
//! against the `-x, -y, -z` neighbours, the backward sweep against
//! `+x, +y, +z`. Any shortest lattice path can be split at the
//! componentwise maximum of its endpoints into a monotone-increasing leg
//! followed by a monotone-decreasing leg, which is exactly what the two
//! sweeps propagate.

use crate::voxel::Dims;

pub const UNREACHED: u32 = u32::MAX;

/// For every voxel, the L1 distance in index units to the nearest voxel
/// with `seed == true`, or [`UNREACHED`] when there are no seeds.
pub fn l1_distance_transform(dims: Dims, seeds: &[bool]) -> Vec<u32> {
    let [nx, ny, nz] = dims;
    debug_assert_eq!(seeds.len(), nx * ny * nz);
    let sx = 1;
    let sy = nx;
    let sz = nx * ny;
    let mut d: Vec<u32> = seeds.iter().map(|&s| if s { 0 } else { UNREACHED }).collect();

    let relax = |d: &mut [u32], i: usize, j: usize| {
        let cand = d[j].saturating_add(1);
        if cand < d[i] {
            d[i] = cand;
        }
    };

    let mut i = 0;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if x > 0 {
                    relax(&mut d, i, i - sx);
                }
                if y > 0 {
                    relax(&mut d, i, i - sy);
                }
                if z > 0 {
                    relax(&mut d, i, i - sz);
                }
                i += 1;
            }
        }
    }
    for z in (0..nz).rev() {
        for y in (0..ny).rev() {
            for x in (0..nx).rev() {
                i -= 1;
                if x + 1 < nx {
                    relax(&mut d, i, i + sx);
                }
                if y + 1 < ny {
                    relax(&mut d, i, i + sy);
                }
                if z + 1 < nz {
                    relax(&mut d, i, i + sz);
                }
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxel::unravel;
    use proptest::prelude::*;

    fn brute_force(dims: Dims, seeds: &[bool]) -> Vec<u32> {
        let n = seeds.len();
        (0..n)
            .map(|i| {
                let p = unravel(dims, i);
                (0..n)
                    .filter(|&j| seeds[j])
                    .map(|j| {
                        let q = unravel(dims, j);
                        (0..3).map(|k| p[k].abs_diff(q[k]) as u32).sum::<u32>()
                    })
                    .min()
                    .unwrap_or(UNREACHED)
            })
            .collect()
    }

    #[test]
    fn single_seed_diamond() {
        let dims = [5, 5, 1];
        let mut seeds = vec![false; 25];
        seeds[12] = true;
        let d = l1_distance_transform(dims, &seeds);
        assert_eq!(
            d,
            vec![4, 3, 2, 3, 4, 3, 2, 1, 2, 3, 2, 1, 0, 1, 2, 3, 2, 1, 2, 3, 4, 3, 2, 3, 4]
        );
    }

    #[test]
    fn no_seeds() {
        assert!(l1_distance_transform([2, 2, 2], &[false; 8]).iter().all(|&v| v == UNREACHED));
    }

    fn image() -> impl Strategy<Value = (Dims, Vec<bool>)> {
        (1usize..=6, 1usize..=6, 1usize..=6).prop_flat_map(|(x, y, z)| {
            (Just([x, y, z]), proptest::collection::vec(prop::bool::weighted(0.2), x * y * z))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]
        #[test]
        fn matches_all_pairs_scan((dims, seeds) in image()) {
            prop_assert_eq!(l1_distance_transform(dims, &seeds), brute_force(dims, &seeds));
        }
    }
}
