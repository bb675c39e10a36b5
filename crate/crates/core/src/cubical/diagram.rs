use std::cmp::Ordering;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PersistencePair {
    pub birth: f64,
    pub death: f64,
    pub dim: usize,
    /// The class never dies; `death` holds the image's maximum intensity.
    pub essential: bool,
}

impl PersistencePair {
    pub fn lifetime(&self) -> f64 {
        self.death - self.birth
    }

    fn cmp_canonical(&self, other: &Self) -> Ordering {
        self.dim
            .cmp(&other.dim)
            .then(self.birth.total_cmp(&other.birth))
            .then(self.death.total_cmp(&other.death))
            .then(self.essential.cmp(&other.essential))
    }
}

/// Multiset of persistence pairs across homology dimensions 0, 1, 2.
/// Pairs are kept sorted by `(dim, birth, death, essential)`, so two
/// diagrams are equal as multisets iff they compare equal.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PersistenceDiagram {
    pairs: Vec<PersistencePair>,
}

impl PersistenceDiagram {
    pub fn new(mut pairs: Vec<PersistencePair>) -> Self {
        pairs.sort_by(PersistencePair::cmp_canonical);
        Self { pairs }
    }

    pub fn pairs(&self) -> &[PersistencePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `(birth, death)` pairs of one homology dimension.
    pub fn slice(&self, dim: usize) -> Vec<(f64, f64)> {
        self.pairs
            .iter()
            .filter(|p| p.dim == dim)
            .map(|p| (p.birth, p.death))
            .collect()
    }

    pub fn essential_count(&self, dim: usize) -> usize {
        self.pairs.iter().filter(|p| p.dim == dim && p.essential).count()
    }

    pub fn without_essential(&self) -> Self {
        Self {
            pairs: self.pairs.iter().copied().filter(|p| !p.essential).collect(),
        }
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(
            self.pairs
                .iter()
                .map(|p| PersistencePair {
                    birth: f(p.birth),
                    death: f(p.death),
                    ..*p
                })
                .collect(),
        )
    }

    /// Betti numbers of the sublevel set at `t`, counting essential classes
    /// as alive forever.
    pub fn betti_at(&self, t: f64) -> [usize; 3] {
        let mut b = [0; 3];
        for p in &self.pairs {
            if p.birth <= t && (p.essential || t < p.death) {
                b[p.dim] += 1;
            }
        }
        b
    }

    /// Text dump, one `dim birth death essential` line per pair.
    pub fn to_text(&self) -> String {
        self.pairs
            .iter()
            .map(|p| format!("{} {:?} {:?} {}\n", p.dim, p.birth, p.death, p.essential))
            .collect()
    }
}

impl FromIterator<PersistencePair> for PersistenceDiagram {
    fn from_iter<I: IntoIterator<Item = PersistencePair>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}
