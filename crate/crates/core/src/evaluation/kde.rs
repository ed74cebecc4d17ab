use serde::{Deserialize, Serialize};

use crate::error::KdeError;
use crate::geometry::Vec2;

/// Square evaluation grid of `cells x cells` points at cell centres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub cells: usize,
}

impl GridSpec {
    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.cells as f64
    }

    pub fn axis(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.cells).map(|i| self.min + (i as f64 + 0.5) * h).collect()
    }
}

/// Density values indexed `[i_n * cells + j_e]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub spec: GridSpec,
    pub n_axis: Vec<f64>,
    pub e_axis: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: (f64, f64),
}

impl DensityGrid {
    pub fn at(&self, i_n: usize, j_e: usize) -> f64 {
        self.values[i_n * self.spec.cells + j_e]
    }

    /// Riemann sum of the density over the grid.
    pub fn integral(&self) -> f64 {
        let h = self.spec.step();
        self.values.iter().sum::<f64>() * h * h
    }

    pub fn argmax(&self) -> (f64, f64) {
        let (k, _) = self.values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty grid");
        (self.n_axis[k / self.spec.cells], self.e_axis[k % self.spec.cells])
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `1.06 * sd * n^(-1/5)` with the sample standard deviation.
pub fn silverman_bandwidth(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    1.06 * var.sqrt() * n.powf(-0.2)
}

/// Product-Gaussian kernel density estimate with per-axis Silverman bandwidths.
pub fn spatial_kde(positions: &[Vec2], grid: &GridSpec) -> Result<DensityGrid, KdeError> {
    if positions.len() < 2 {
        return Err(KdeError::TooFewPoints(positions.len()));
    }
    if grid.cells == 0 || grid.max.partial_cmp(&grid.min) != Some(std::cmp::Ordering::Greater) {
        return Err(KdeError::Grid(format!("{grid:?}")));
    }
    let ns: Vec<f64> = positions.iter().map(|p| p.n).collect();
    let es: Vec<f64> = positions.iter().map(|p| p.e).collect();
    let hn = silverman_bandwidth(&ns);
    let he = silverman_bandwidth(&es);
    if hn.is_nan() || hn <= 0.0 {
        return Err(KdeError::ZeroVariance("north"));
    }
    if he.is_nan() || he <= 0.0 {
        return Err(KdeError::ZeroVariance("east"));
    }
    let axis = grid.axis();
    let c = grid.cells;
    let kernel = |xs: &[f64], h: f64| -> Vec<f64> {
        let norm = 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt());
        let mut k = vec![0.0; xs.len() * c];
        for (i, &x) in xs.iter().enumerate() {
            for (j, &g) in axis.iter().enumerate() {
                let u = (g - x) / h;
                k[i * c + j] = norm * (-0.5 * u * u).exp();
            }
        }
        k
    };
    let kn = kernel(&ns, hn);
    let ke = kernel(&es, he);
    // density[a][b] = mean_i kn[i][a] * ke[i][b]
    let mut values = vec![0.0; c * c];
    for i in 0..positions.len() {
        let rn = &kn[i * c..(i + 1) * c];
        let re = &ke[i * c..(i + 1) * c];
        for (a, &wa) in rn.iter().enumerate() {
            if wa < 1e-300 {
                continue;
            }
            let row = &mut values[a * c..(a + 1) * c];
            for (v, &wb) in row.iter_mut().zip(re) {
                *v += wa * wb;
            }
        }
    }
    let inv = 1.0 / positions.len() as f64;
    values.iter_mut().for_each(|v| *v *= inv);
    Ok(DensityGrid { spec: *grid, n_axis: axis.clone(), e_axis: axis, values, bandwidth: (hn, he) })
}
