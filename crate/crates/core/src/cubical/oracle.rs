//! Reference persistence by plain left-to-right reduction of the full
//! boundary matrix. No clearing, no union-find, and equal values are
//! tie-broken by descending cell index. Meant for small complexes only.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{compute_persistence, CubicalComplex, PersistenceDiagram, PersistencePair};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub trials: usize,
    pub matches: usize,
    /// Dims and voxel values of the first mismatching image, if any.
    pub first_mismatch: Option<([usize; 3], Vec<f64>)>,
}

/// Compares [`compute_persistence`] with [`oracle_persistence`] on random
/// images with each side in `1..=max_dim` and integer values in
/// `0..levels`.
pub fn oracle_suite(trials: usize, max_dim: usize, levels: u32, seed: u64) -> Result<OracleReport> {
    if max_dim == 0 || levels == 0 {
        return Err(Error::Invalid("max_dim and levels must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport {
        trials,
        matches: 0,
        first_mismatch: None,
    };
    for _ in 0..trials {
        let dims: [usize; 3] = std::array::from_fn(|_| rng.random_range(1..=max_dim));
        let n = dims.iter().product();
        let values: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..levels))).collect();
        let k = CubicalComplex::from_voxel_values(dims, &values)?;
        if compute_persistence(&k) == oracle_persistence(&k) {
            report.matches += 1;
        } else if report.first_mismatch.is_none() {
            report.first_mismatch = Some((dims, values));
        }
    }
    Ok(report)
}

pub fn oracle_persistence(k: &CubicalComplex) -> PersistenceDiagram {
    let n = k.len();
    let grid = k.grid();
    let coords = |c: usize| [c % grid[0], (c / grid[0]) % grid[1], c / (grid[0] * grid[1])];
    let dim = |c: usize| coords(c).iter().filter(|&&x| x % 2 == 1).count();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        k.value(a)
            .total_cmp(&k.value(b))
            .then(dim(a).cmp(&dim(b)))
            .then(b.cmp(&a))
    });
    let mut rank = vec![0; n];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }

    let boundary = |c: usize| -> BTreeSet<usize> {
        let p = coords(c);
        let mut out = BTreeSet::new();
        for axis in 0..3 {
            if p[axis] % 2 == 1 {
                for side in [p[axis] - 1, p[axis] + 1] {
                    let mut q = p;
                    q[axis] = side;
                    out.insert(rank[q[0] + grid[0] * (q[1] + grid[1] * q[2])]);
                }
            }
        }
        out
    };

    let mut columns: Vec<BTreeSet<usize>> = order.iter().map(|&c| boundary(c)).collect();
    let mut low_owner: Vec<Option<usize>> = vec![None; n];
    for j in 0..n {
        while let Some(&low) = columns[j].last() {
            match low_owner[low] {
                Some(i) => {
                    let other = columns[i].clone();
                    columns[j] = columns[j].symmetric_difference(&other).copied().collect();
                }
                None => {
                    low_owner[low] = Some(j);
                    break;
                }
            }
        }
    }

    let top = k.max_value();
    let mut pairs = Vec::new();
    for j in 0..n {
        let cell = order[j];
        if let Some(&low) = columns[j].last() {
            let (b, d) = (k.value(order[low]), k.value(cell));
            if d > b {
                pairs.push(PersistencePair {
                    birth: b,
                    death: d,
                    dim: dim(cell) - 1,
                    essential: false,
                });
            }
        } else if low_owner[j].is_none() {
            pairs.push(PersistencePair {
                birth: k.value(cell),
                death: top,
                dim: dim(cell),
                essential: true,
            });
        }
    }
    PersistenceDiagram::new(pairs)
}
