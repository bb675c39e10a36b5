//! Boundary-matrix reduction with clearing.
//!
//! Cells are ordered by `(value, dim, index)`. Columns of dimension 3 and 2
//! are reduced top-down; every pivot found while reducing dimension `d`
//! clears the column of that pivot in dimension `d - 1`. Edges are then
//! paired with a union-find sweep, which produces the same 0-dimensional
//! pairing as reducing the edge columns.

use super::{CubicalComplex, PersistenceDiagram, PersistencePair};

const NONE: u32 = u32::MAX;

/// Filtration order of the cells and the rank of each cell in it.
pub(super) fn filtration_order(k: &CubicalComplex) -> (Vec<u32>, Vec<u32>) {
    let dims: Vec<u8> = (0..k.len()).map(|c| k.dim(c) as u8).collect();
    let values = k.values();
    let mut order: Vec<u32> = (0..k.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        let (a, b) = (a as usize, b as usize);
        values[a]
            .total_cmp(&values[b])
            .then(dims[a].cmp(&dims[b]))
            .then(a.cmp(&b))
    });
    let mut rank = vec![0u32; k.len()];
    for (r, &c) in order.iter().enumerate() {
        rank[c as usize] = r as u32;
    }
    (order, rank)
}

/// Symmetric difference of two ascending lists.
fn add_columns(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

pub fn compute_persistence(k: &CubicalComplex) -> PersistenceDiagram {
    let n = k.len();
    let (order, rank) = filtration_order(k);
    let value_at = |r: u32| k.value(order[r as usize] as usize);
    let dim_at = |r: u32| k.dim(order[r as usize] as usize);
    let top = k.max_value();

    let mut pairs = Vec::new();
    let mut push = |birth: f64, death: f64, dim: usize, essential: bool| {
        if essential || death > birth {
            pairs.push(PersistencePair {
                birth,
                death: if essential { top } else { death },
                dim,
                essential,
            });
        }
    };

    // rank of a row -> slot in `store` holding the reduced column with that pivot
    let mut pivot_slot = vec![NONE; n];
    let mut cleared = vec![false; n];
    let mut store: Vec<Vec<u32>> = Vec::new();
    let mut col = Vec::with_capacity(64);
    let mut scratch = Vec::with_capacity(64);

    for d in [3usize, 2] {
        for j in 0..n as u32 {
            if cleared[j as usize] || dim_at(j) != d {
                continue;
            }
            col.clear();
            col.extend(k.faces(order[j as usize] as usize).map(|f| rank[f]));
            col.sort_unstable();
            while let Some(&low) = col.last() {
                let slot = pivot_slot[low as usize];
                if slot == NONE {
                    break;
                }
                add_columns(&col, &store[slot as usize], &mut scratch);
                std::mem::swap(&mut col, &mut scratch);
            }
            match col.last() {
                Some(&low) => {
                    pivot_slot[low as usize] = store.len() as u32;
                    cleared[low as usize] = true;
                    store.push(col.clone());
                    push(value_at(low), value_at(j), d - 1, false);
                }
                None => push(value_at(j), top, d, true),
            }
        }
    }
    drop(store);

    // union-find over vertices, keyed by rank; the root is the oldest vertex
    let mut parent: Vec<u32> = (0..n as u32).collect();
    for e in 0..n as u32 {
        if dim_at(e) != 1 {
            continue;
        }
        let mut ends = k.faces(order[e as usize] as usize).map(|f| rank[f]);
        let (u, v) = (ends.next().unwrap(), ends.next().unwrap());
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru == rv {
            if !cleared[e as usize] {
                push(value_at(e), top, 1, true);
            }
            continue;
        }
        let (elder, younger) = if ru < rv { (ru, rv) } else { (rv, ru) };
        parent[younger as usize] = elder;
        push(value_at(younger), value_at(e), 0, false);
    }
    for r in 0..n as u32 {
        if dim_at(r) == 0 && find(&mut parent, r) == r {
            push(value_at(r), top, 0, true);
        }
    }

    PersistenceDiagram::new(pairs)
}
