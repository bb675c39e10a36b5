//! Point-cloud and mesh I/O, plus area-weighted surface sampling.
//!
//! Two text formats are supported: XYZ (one point per line, `#` comments,
//! trailing columns ignored) and ASCII OFF.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub label: Option<String>,
}

impl PointCloud {
    /// Validates that the cloud is non-empty and every coordinate is finite.
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("point cloud has no points".into()));
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::Invalid(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self {
            points,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Componentwise minimum and maximum.
    pub fn bounds(&self) -> (Point3, Point3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.points {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Length of the axis-aligned bounding-box diagonal.
    pub fn diagonal(&self) -> f64 {
        let (lo, hi) = self.bounds();
        (0..3).map(|k| (hi[k] - lo[k]).powi(2)).sum::<f64>().sqrt()
    }

    pub fn translated(&self, t: Point3) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| [p[0] + t[0], p[1] + t[1], p[2] + t[2]])
                .collect(),
            label: self.label.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (i, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&v| v >= n) {
                return Err(Error::Mesh(format!(
                    "face {i} references vertex {bad}, mesh has {n} vertices"
                )));
            }
        }
        let mesh = Self { vertices, faces };
        if !mesh.face_areas().iter().any(|&a| a > 0.0) {
            return Err(Error::Mesh("no face with positive area".into()));
        }
        Ok(mesh)
    }

    pub fn face_areas(&self) -> Vec<f64> {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i]);
                triangle_area(a, b, c)
            })
            .collect()
    }
}

fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn triangle_area(a: Point3, b: Point3, c: Point3) -> f64 {
    let n = cross(sub(b, a), sub(c, a));
    0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_xyz(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    parse_xyz(&read_text(path)?, path)
}

pub fn parse_xyz(text: &str, path: &Path) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let perr = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let mut p = [0.0; 3];
        let mut fields = line.split_whitespace();
        for (k, slot) in p.iter_mut().enumerate() {
            let tok = fields
                .next()
                .ok_or_else(|| perr(format!("expected 3 coordinates, found {k}")))?;
            let v: f64 = tok
                .parse()
                .map_err(|_| perr(format!("not a number: {tok:?}")))?;
            if !v.is_finite() {
                return Err(perr(format!("non-finite coordinate {tok:?}")));
            }
            *slot = v;
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "no points".into(),
        });
    }
    Ok(PointCloud {
        points,
        label: None,
    })
}

/// Writes one `x y z` line per point at full precision, preceded by the
/// given comment lines.
pub fn save_xyz(path: impl AsRef<Path>, cloud: &PointCloud, comments: &[String]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    for p in &cloud.points {
        out.push_str(&format!("{:?} {:?} {:?}\n", p[0], p[1], p[2]));
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_off(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    parse_off(&read_text(path)?, path)
}

/// Parses ASCII OFF. Polygons with more than three vertices are
/// fan-triangulated around their first vertex.
pub fn parse_off(text: &str, path: &Path) -> Result<TriangleMesh> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    // (line number, tokens) with comments and blanks stripped
    let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
    });

    let (hline, header) = lines.next().ok_or_else(|| perr(1, "missing OFF header".into()))?;
    let counts: Vec<&str> = match header.first() {
        Some(&"OFF") if header.len() > 1 => header[1..].to_vec(),
        Some(&"OFF") => lines
            .next()
            .ok_or_else(|| perr(hline + 1, "missing counts line".into()))?
            .1,
        // some ModelNet files glue the counts onto the keyword: "OFF1234 5678 0"
        Some(tok) if tok.starts_with("OFF") => {
            let mut v = vec![&tok[3..]];
            v.extend_from_slice(&header[1..]);
            v
        }
        _ => return Err(perr(hline, "expected \"OFF\" header".into())),
    };
    if counts.len() < 2 {
        return Err(perr(hline, "counts line needs vertex and face counts".into()));
    }
    let parse_count = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| perr(hline, format!("bad count {s:?}")))
    };
    let nv = parse_count(counts[0])?;
    let nf = parse_count(counts[1])?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, toks) = lines
            .next()
            .ok_or_else(|| perr(0, format!("expected {nv} vertices")))?;
        if toks.len() < 3 {
            return Err(perr(ln, "vertex needs 3 coordinates".into()));
        }
        let mut p = [0.0; 3];
        for k in 0..3 {
            p[k] = toks[k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| perr(ln, format!("bad coordinate {:?}", toks[k])))?;
        }
        vertices.push(p);
    }

    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, toks) = lines
            .next()
            .ok_or_else(|| perr(0, format!("expected {nf} faces")))?;
        let idx: Vec<usize> = toks
            .iter()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| perr(ln, "bad face index".into()))?;
        let k = *idx.first().ok_or_else(|| perr(ln, "empty face".into()))?;
        if k < 3 || idx.len() < k + 1 {
            return Err(perr(ln, format!("face declares {k} vertices")));
        }
        let poly = &idx[1..=k];
        if let Some(&bad) = poly.iter().find(|&&v| v >= nv) {
            return Err(perr(ln, format!("vertex index {bad} out of range (< {nv})")));
        }
        for j in 1..k - 1 {
            faces.push([poly[0], poly[j], poly[j + 1]]);
        }
    }
    TriangleMesh::new(vertices, faces)
}

/// Draws `n` points uniformly over the mesh surface: a triangle is picked
/// with probability proportional to its area, then a point inside it with
/// the square-root barycentric map.
pub fn sample_mesh(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::Invalid("sample count must be positive".into()));
    }
    let areas = mesh.face_areas();
    let mut cdf = Vec::with_capacity(areas.len());
    let mut total = 0.0;
    for a in &areas {
        total += a;
        cdf.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::Mesh("mesh has zero total area".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            let fi = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            let [a, b, c] = mesh.faces[fi].map(|i| mesh.vertices[i]);
            let s = rng.random::<f64>().sqrt();
            let r2 = rng.random::<f64>();
            let (wa, wb, wc) = (1.0 - s, s * (1.0 - r2), s * r2);
            [
                wa * a[0] + wb * b[0] + wc * c[0],
                wa * a[1] + wb * b[1] + wc * c[1],
                wa * a[2] + wb * b[2] + wc * c[2],
            ]
        })
        .collect();
    Ok(PointCloud {
        points,
        label: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn xyz_basic_and_comments() {
        let c = parse_xyz("0 0 0\n1 0 0", p()).unwrap();
        assert_eq!(c.points, vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let c = parse_xyz("# header\n0 0 0 0.5 0.5 0.5\n\n1 2 3\n", p()).unwrap();
        assert_eq!(c.points, vec![[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]]);
    }

    #[test]
    fn xyz_rejects_nan_with_line_number() {
        match parse_xyz("0 0 nan", p()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        match parse_xyz("0 0 0\n1 2", p()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn off_quad_is_fan_triangulated() {
        let text = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        let m = parse_off(text, p()).unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn off_tetrahedron() {
        let text = "OFF\n4 4 6\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 1 3\n3 0 2 3\n3 1 2 3\n";
        let m = parse_off(text, p()).unwrap();
        assert_eq!((m.vertices.len(), m.faces.len()), (4, 4));
        // glued header variant
        let glued = text.replacen("OFF\n4 4 6", "OFF4 4 6", 1);
        assert_eq!(parse_off(&glued, p()).unwrap(), m);
    }

    #[test]
    fn off_index_out_of_range() {
        let text = "OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 99\n";
        assert!(matches!(parse_off(text, p()), Err(Error::Parse { line: 7, .. })));
    }

    #[test]
    fn off_bad_header() {
        assert!(parse_off("PLY\n", p()).is_err());
        assert!(parse_off("OFF\n", p()).is_err());
    }

    #[test]
    fn zero_area_mesh_rejected() {
        let err = TriangleMesh::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], vec![[0, 1, 2]]);
        assert!(err.is_err());
    }

    #[test]
    fn single_triangle_containment_and_determinism() {
        let m = TriangleMesh::new(
            vec![[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let c = sample_mesh(&m, 1000, 7).unwrap();
        assert_eq!(c.len(), 1000);
        for q in &c.points {
            assert!((q[2] - 1.0).abs() < 1e-12);
            assert!(q[0] >= 0.0 && q[1] >= 0.0 && q[0] + q[1] <= 1.0 + 1e-12);
        }
        assert_eq!(c, sample_mesh(&m, 1000, 7).unwrap());
        assert_ne!(c, sample_mesh(&m, 1000, 8).unwrap());
    }
}
