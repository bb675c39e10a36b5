#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use taco_core::pc_io::{Point3, PointCloud};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Sphere,
    Torus,
    TwoBalls,
}

pub const SHAPES: [Shape; 3] = [Shape::Sphere, Shape::Torus, Shape::TwoBalls];

impl Shape {
    pub fn label(self) -> &'static str {
        match self {
            Shape::Sphere => "sphere",
            Shape::Torus => "torus",
            Shape::TwoBalls => "two_balls",
        }
    }
}

fn unit_vector(rng: &mut impl Rng) -> Point3 {
    loop {
        let v: Point3 = [
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-9 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Uniformly random rotation from a normalized Gaussian quaternion.
fn random_rotation(rng: &mut impl Rng) -> [[f64; 3]; 3] {
    let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn sample_point(shape: Shape, rng: &mut impl Rng) -> Point3 {
    match shape {
        Shape::Sphere => unit_vector(rng).map(|v| 0.4 * v),
        Shape::Torus => {
            let (big, small) = (0.4, 0.15);
            // rejection on the tube angle gives area-uniform samples
            loop {
                let u = rng.random_range(0.0..std::f64::consts::TAU);
                let v = rng.random_range(0.0..std::f64::consts::TAU);
                let w = rng.random_range(0.0..big + small);
                if w <= big + small * v.cos() {
                    let r = big + small * v.cos();
                    return [r * u.cos(), r * u.sin(), small * v.sin()];
                }
            }
        }
        Shape::TwoBalls => {
            let radius = 0.25;
            let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            loop {
                let p: Point3 = std::array::from_fn(|_| rng.random_range(-radius..radius));
                if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= radius * radius {
                    return [p[0] + side * 0.4, p[1], p[2]];
                }
            }
        }
    }
}

/// A randomly rotated and slightly rescaled sample of `shape`.
pub fn synthetic_cloud(shape: Shape, n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rot = random_rotation(&mut rng);
    let scale = rng.random_range(0.9..1.1);
    let points = (0..n)
        .map(|_| {
            let p = sample_point(shape, &mut rng);
            std::array::from_fn(|i| scale * (rot[i][0] * p[0] + rot[i][1] * p[1] + rot[i][2] * p[2]))
        })
        .collect();
    PointCloud::new(points).unwrap().with_label(shape.label())
}
