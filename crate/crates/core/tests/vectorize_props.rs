use proptest::prelude::*;
use taco_core::cubical::{PersistenceDiagram, PersistencePair};
use taco_core::vectorize::{
    betti_amplitude, bottleneck_amplitude, entropy, heat_amplitude, heat_function, landscape_amplitude,
    vectorize_diagram, wasserstein_amplitude, SamplingConfig, BLOCK_LEN,
};

fn pairs() -> impl Strategy<Value = Vec<(usize, f64, f64)>> {
    proptest::collection::vec((0usize..3, 0u32..40, 1u32..40), 0..12)
        .prop_map(|v| v.into_iter().map(|(d, b, l)| (d, f64::from(b) * 0.25, f64::from(b + l) * 0.25)).collect())
}

fn diagram(p: &[(usize, f64, f64)]) -> PersistenceDiagram {
    p.iter()
        .map(|&(dim, birth, death)| PersistencePair {
            birth,
            death,
            dim,
            essential: false,
        })
        .collect()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn block_ignores_pair_order(mut p in pairs(), seed in any::<u64>()) {
        let cfg = SamplingConfig::default();
        let a = vectorize_diagram(&diagram(&p), &cfg);
        // deterministic shuffle
        let mut s = seed;
        for i in (1..p.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            p.swap(i, (s >> 33) as usize % (i + 1));
        }
        let b = vectorize_diagram(&diagram(&p), &cfg);
        prop_assert_eq!(a.values().len(), BLOCK_LEN);
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!(rel_close(*x, *y, 1e-12), "{} vs {}", x, y);
        }
    }

    #[test]
    fn adding_a_bar_increases_w1(p in pairs(), b in 0u32..40, l in 1u32..40) {
        let slice: Vec<(f64, f64)> = p.iter().map(|&(_, b, d)| (b, d)).collect();
        let mut more = slice.clone();
        more.push((f64::from(b), f64::from(b + l)));
        prop_assert!(wasserstein_amplitude(&more, 1.0) > wasserstein_amplitude(&slice, 1.0));
    }

    #[test]
    fn amplitude_ordering(p in pairs()) {
        let s: Vec<(f64, f64)> = p.iter().map(|&(_, b, d)| (b, d)).collect();
        let (w1, w2, bn) = (wasserstein_amplitude(&s, 1.0), wasserstein_amplitude(&s, 2.0), bottleneck_amplitude(&s));
        prop_assert!(bn <= w2 * (1.0 + 1e-12) && w2 <= w1 * (1.0 + 1e-12));
    }

    #[test]
    fn scaling_laws(p in pairs(), k in 1u32..16) {
        let lambda = f64::from(k) * 0.5;
        let s: Vec<(f64, f64)> = p.iter().map(|&(_, b, d)| (b, d)).collect();
        let t: Vec<(f64, f64)> = s.iter().map(|&(b, d)| (b * lambda, d * lambda)).collect();
        prop_assert!(rel_close(entropy(&t), entropy(&s), 1e-12));
        prop_assert!(rel_close(wasserstein_amplitude(&t, 1.0), lambda * wasserstein_amplitude(&s, 1.0), 1e-12));
        prop_assert!(rel_close(wasserstein_amplitude(&t, 2.0), lambda * wasserstein_amplitude(&s, 2.0), 1e-12));
        prop_assert!(rel_close(bottleneck_amplitude(&t), lambda * bottleneck_amplitude(&s), 1e-12));
    }
}

#[test]
fn doubling_samples_changes_norms_by_at_most_one_percent() {
    let s = [(0.0, 1.0), (0.2, 0.7), (0.4, 0.9), (0.15, 0.35)];
    let (b1, b2) = betti_amplitude(&s, 100);
    let (c1, c2) = betti_amplitude(&s, 200);
    assert!(rel_close(b1, c1, 0.01) && rel_close(b2, c2, 0.01), "{b1} {c1} {b2} {c2}");
    let l = landscape_amplitude(&s, 100, [1, 2]);
    let m = landscape_amplitude(&s, 200, [1, 2]);
    for (x, y) in l.iter().zip(&m) {
        assert!(rel_close(x.0, y.0, 0.01) && rel_close(x.1, y.1, 0.01), "{x:?} {y:?}");
    }
    let (h1, h2) = heat_amplitude(&s, 20, 0.15);
    let (k1, k2) = heat_amplitude(&s, 40, 0.15);
    assert!(rel_close(h1, k1, 0.01) && rel_close(h2, k2, 0.01), "{h1} {k1} {h2} {k2}");
}

/// Composite Simpson rule on a fine grid over the same square.
fn simpson_heat(slice: &[(f64, f64)], sigma: f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    assert!(n % 2 == 0);
    let h = (hi - lo) / n as f64;
    let w = |i: usize| match i {
        0 => 1.0,
        i if i == n => 1.0,
        i if i % 2 == 1 => 4.0,
        _ => 2.0,
    };
    let (mut l1, mut l2) = (0.0, 0.0);
    for i in 0..=n {
        for j in 0..=n {
            let f = heat_function(slice, sigma, lo + i as f64 * h, lo + j as f64 * h);
            let wt = w(i) * w(j) * h * h / 9.0;
            l1 += wt * f.abs();
            l2 += wt * f * f;
        }
    }
    (l1, l2.sqrt())
}

#[test]
fn heat_matches_dense_quadrature() {
    let s = [(0.0, 1.0)];
    let (l1, l2) = heat_amplitude(&s, 20, 0.15);
    let (q1, q2) = simpson_heat(&s, 0.15, 0.0, 1.0, 800);
    assert!(l1 > 0.0);
    assert!(rel_close(l1, q1, 0.05), "{l1} vs {q1}");
    assert!(rel_close(l2, q2, 0.05), "{l2} vs {q2}");
}

#[test]
fn only_h0_content_leaves_other_slots_zero() {
    let d = diagram(&[(0, 0.0, 1.0), (0, 0.5, 2.0)]);
    let block = vectorize_diagram(&d, &SamplingConfig::default());
    for (i, v) in block.values().iter().enumerate() {
        if i % 3 != 0 {
            assert_eq!(*v, 0.0, "slot {i}");
        }
    }
    assert!(vectorize_diagram(&diagram(&[]), &SamplingConfig::default()).values().iter().all(|&v| v == 0.0));
}
