use crate::error::{Error, Result};
use crate::filtration::GrayscaleImage3D;
use crate::voxel::Dims;

#[derive(Clone, Debug, PartialEq)]
pub struct CubicalComplex {
    voxel_dims: Dims,
    grid: Dims,
    values: Vec<f64>,
}

impl CubicalComplex {
    pub fn from_image(img: &GrayscaleImage3D) -> Self {
        Self::build(img.dims, &img.values)
    }

    pub fn from_voxel_values(dims: Dims, values: &[f64]) -> Result<Self> {
        let img = GrayscaleImage3D::new(dims, values.to_vec())?;
        Ok(Self::from_image(&img))
    }

    fn build(voxel_dims: Dims, voxel_values: &[f64]) -> Self {
        let grid = voxel_dims.map(|d| 2 * d + 1);
        let mut values = vec![f64::INFINITY; grid.iter().product()];
        let [nx, ny, _] = voxel_dims;
        for (v, &val) in voxel_values.iter().enumerate() {
            let (i, j, k) = (v % nx, (v / nx) % ny, v / (nx * ny));
            for dc in 0..3 {
                for db in 0..3 {
                    let row = (2 * i) + grid[0] * ((2 * j + db) + grid[1] * (2 * k + dc));
                    for slot in &mut values[row..row + 3] {
                        if val < *slot {
                            *slot = val;
                        }
                    }
                }
            }
        }
        Self {
            voxel_dims,
            grid,
            values,
        }
    }

    pub fn voxel_dims(&self) -> Dims {
        self.voxel_dims
    }

    /// Extent of the cell grid, `2n + 1` per axis.
    pub fn grid(&self) -> Dims {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    #[inline]
    pub fn coords(&self, cell: usize) -> [usize; 3] {
        let [gx, gy, _] = self.grid;
        [cell % gx, (cell / gx) % gy, cell / (gx * gy)]
    }

    #[inline]
    pub fn index(&self, [a, b, c]: [usize; 3]) -> usize {
        a + self.grid[0] * (b + self.grid[1] * c)
    }

    #[inline]
    pub fn dim(&self, cell: usize) -> usize {
        self.coords(cell).iter().filter(|&&c| c % 2 == 1).count()
    }

    /// Codimension-one faces of `cell`, two per odd coordinate.
    pub fn faces(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        let p = self.coords(cell);
        let strides = [1, self.grid[0], self.grid[0] * self.grid[1]];
        (0..3)
            .filter(move |&k| p[k] % 2 == 1)
            .flat_map(move |k| [cell - strides[k], cell + strides[k]])
    }

    /// Number of cells of each dimension.
    pub fn census(&self) -> [usize; 4] {
        let mut out = [0; 4];
        for c in 0..self.len() {
            out[self.dim(c)] += 1;
        }
        out
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Euler characteristic of the sublevel complex `{cells with value <= t}`.
    pub fn euler_characteristic_at(&self, t: f64) -> i64 {
        (0..self.len())
            .filter(|&c| self.values[c] <= t)
            .map(|c| if self.dim(c) % 2 == 0 { 1 } else { -1 })
            .sum()
    }

    /// Checks that every face is no later than its cofaces.
    pub fn is_monotone(&self) -> bool {
        (0..self.len()).all(|c| self.faces(c).all(|f| self.values[f] <= self.values[c]))
    }
}

impl TryFrom<&GrayscaleImage3D> for CubicalComplex {
    type Error = Error;
    fn try_from(img: &GrayscaleImage3D) -> Result<Self> {
        Ok(Self::from_image(img))
    }
}
