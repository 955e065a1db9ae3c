//! Grid beliefs over target positions: Bayes updates from binary detections
//! and forward prediction under bounded random target motion.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{detection_likelihood, AgentState, SensorModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeliefError {
    #[error("observation has zero probability under the prior")]
    DegeneratePosterior,
    #[error("likelihood field has {found} cells, grid has {expected}")]
    GeometryMismatch { expected: usize, found: usize },
    #[error("likelihood {value} at cell {cell} is outside [0, 1]")]
    InvalidLikelihood { cell: usize, value: f64 },
    #[error("grid must have at least one cell and a positive cell size")]
    EmptyGrid,
    #[error("belief weights must be non-negative with a positive sum")]
    InvalidWeights,
}

/// Target motion: a uniform random step within `max_speed` meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetModel {
    pub max_speed: f64,
}

/// Geometry of a belief grid. `origin` is the world position of the lower
/// left corner of cell `(0, 0)`; cells are stored row-major with rows along y.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    pub origin: [f64; 2],
}

impl GridGeometry {
    pub fn new(width: usize, height: usize, cell_size: f64, origin: [f64; 2]) -> Result<Self, BeliefError> {
        if width == 0 || height == 0 || !(cell_size > 0.0) {
            return Err(BeliefError::EmptyGrid);
        }
        Ok(Self {
            width,
            height,
            cell_size,
            origin,
        })
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    pub fn center(&self, cell: usize) -> [f64; 2] {
        let (col, row) = (cell % self.width, cell / self.width);
        [
            self.origin[0] + (col as f64 + 0.5) * self.cell_size,
            self.origin[1] + (row as f64 + 0.5) * self.cell_size,
        ]
    }

    /// Cell containing `p`, if inside the grid.
    pub fn locate(&self, p: [f64; 2]) -> Option<usize> {
        let col = ((p[0] - self.origin[0]) / self.cell_size).floor();
        let row = ((p[1] - self.origin[1]) / self.cell_size).floor();
        if col < 0.0 || row < 0.0 || col >= self.width as f64 || row >= self.height as f64 {
            return None;
        }
        Some(self.index(col as usize, row as usize))
    }

    /// Inclusive column/row ranges of cells whose centers may lie within
    /// `radius` of `p`.
    fn window(&self, p: [f64; 2], radius: f64) -> Option<(usize, usize, usize, usize)> {
        let to_cells = |v: f64, o: f64| (v - o) / self.cell_size - 0.5;
        let c0 = to_cells(p[0] - radius, self.origin[0]).ceil().max(0.0);
        let c1 = to_cells(p[0] + radius, self.origin[0])
            .floor()
            .min(self.width as f64 - 1.0);
        let r0 = to_cells(p[1] - radius, self.origin[1]).ceil().max(0.0);
        let r1 = to_cells(p[1] + radius, self.origin[1])
            .floor()
            .min(self.height as f64 - 1.0);
        if c1 < c0 || r1 < r0 {
            return None;
        }
        Some((c0 as usize, c1 as usize, r0 as usize, r1 as usize))
    }
}

/// Discretized probability distribution over one target's position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefGrid {
    #[serde(flatten)]
    pub geometry: GridGeometry,
    pub mass: Vec<f64>,
}

impl BeliefGrid {
    pub fn uniform(geometry: GridGeometry) -> Self {
        let n = geometry.cells();
        Self {
            geometry,
            mass: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(geometry: GridGeometry, cell: usize) -> Self {
        let mut mass = vec![0.0; geometry.cells()];
        mass[cell] = 1.0;
        Self { geometry, mass }
    }

    /// Normalizes non-negative weights into a belief.
    pub fn from_weights(geometry: GridGeometry, weights: Vec<f64>) -> Result<Self, BeliefError> {
        if weights.len() != geometry.cells() {
            return Err(BeliefError::GeometryMismatch {
                expected: geometry.cells(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(BeliefError::InvalidWeights);
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(BeliefError::InvalidWeights);
        }
        Ok(Self {
            geometry,
            mass: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Posterior after observing `detected` with per-cell detection
    /// likelihoods `likelihood`. Non-detection uses the complement.
    pub fn bayes_update(&self, likelihood: &[f64], detected: bool) -> Result<Self, BeliefError> {
        if likelihood.len() != self.mass.len() {
            return Err(BeliefError::GeometryMismatch {
                expected: self.mass.len(),
                found: likelihood.len(),
            });
        }
        if let Some((cell, &value)) = likelihood
            .iter()
            .enumerate()
            .find(|(_, l)| !(0.0..=1.0).contains(*l))
        {
            return Err(BeliefError::InvalidLikelihood { cell, value });
        }
        let mut mass: Vec<f64> = self
            .mass
            .iter()
            .zip(likelihood)
            .map(|(&m, &l)| if detected { l * m } else { (1.0 - l) * m })
            .collect();
        let total: f64 = mass.iter().sum();
        if !(total > 0.0) {
            return Err(BeliefError::DegeneratePosterior);
        }
        mass.iter_mut().for_each(|m| *m /= total);
        Ok(Self {
            geometry: self.geometry,
            mass,
        })
    }

    /// [`bayes_update`](Self::bayes_update), falling back to a uniform belief
    /// when the observation is impossible under the prior.
    pub fn update_or_reset(&self, likelihood: &[f64], detected: bool) -> Self {
        match self.bayes_update(likelihood, detected) {
            Ok(b) => b,
            Err(BeliefError::DegeneratePosterior) => {
                log::warn!("impossible observation under the current belief; resetting to uniform");
                Self::uniform(self.geometry)
            }
            Err(e) => panic!("belief update with mismatched likelihood: {e}"),
        }
    }

    /// Spreads each cell's mass uniformly over the disk of radius
    /// `max_speed * steps`. Disk cells falling off the grid are dropped and
    /// the rest renormalized per source cell, so total mass is conserved.
    pub fn predict(&self, model: &TargetModel, steps: usize) -> Self {
        let radius = model.max_speed * steps as f64 / self.geometry.cell_size;
        if steps == 0 || radius < 1.0 {
            return self.clone();
        }
        let (w, h) = (self.geometry.width, self.geometry.height);
        let reach = radius.floor() as usize;
        // Half-width of the disk on each row offset.
        let spans: Vec<usize> = (0..=reach)
            .map(|dy| {
                let dy = dy as f64;
                (radius * radius - dy * dy + 1e-9).sqrt().floor() as usize
            })
            .collect();

        let cols_in = |col: usize, span: usize| -> usize {
            let lo = col.saturating_sub(span);
            let hi = (col + span).min(w - 1);
            hi - lo + 1
        };

        // Mass each source sends to every in-grid cell of its disk.
        let mut share = vec![0.0; w * h];
        for row in 0..h {
            for col in 0..w {
                let m = self.mass[row * w + col];
                if m == 0.0 {
                    continue;
                }
                let mut count = 0;
                for (dy, &span) in spans.iter().enumerate() {
                    let n = cols_in(col, span);
                    if row + dy < h {
                        count += n;
                    }
                    if dy > 0 && row >= dy {
                        count += n;
                    }
                }
                share[row * w + col] = m / count as f64;
            }
        }

        // Row prefix sums make each disk row an O(1) range query.
        let mut prefix = vec![0.0; h * (w + 1)];
        for row in 0..h {
            for col in 0..w {
                prefix[row * (w + 1) + col + 1] = prefix[row * (w + 1) + col] + share[row * w + col];
            }
        }
        let range = |row: usize, col: usize, span: usize| -> f64 {
            let lo = col.saturating_sub(span);
            let hi = (col + span).min(w - 1) + 1;
            prefix[row * (w + 1) + hi] - prefix[row * (w + 1) + lo]
        };

        let mut mass = vec![0.0; w * h];
        for row in 0..h {
            for col in 0..w {
                let mut acc = 0.0;
                for (dy, &span) in spans.iter().enumerate() {
                    if row + dy < h {
                        acc += range(row + dy, col, span);
                    }
                    if dy > 0 && row >= dy {
                        acc += range(row - dy, col, span);
                    }
                }
                mass[row * w + col] = acc;
            }
        }
        let total: f64 = mass.iter().sum();
        mass.iter_mut().for_each(|m| *m /= total);
        Self {
            geometry: self.geometry,
            mass,
        }
    }

    /// Detection likelihood at every cell center.
    pub fn likelihood_field(&self, agent: &AgentState, sensor: &SensorModel) -> Vec<f64> {
        let mut field = vec![0.0; self.mass.len()];
        if let Some((c0, c1, r0, r1)) = self.geometry.window(agent.position(), sensor.range) {
            for row in r0..=r1 {
                for col in c0..=c1 {
                    let cell = self.geometry.index(col, row);
                    field[cell] = detection_likelihood(agent, self.geometry.center(cell), sensor);
                }
            }
        }
        field
    }

    /// Probability that the camera on `agent` detects the target, averaged
    /// over this belief.
    pub fn expected_detection(&self, agent: &AgentState, sensor: &SensorModel) -> f64 {
        let Some((c0, c1, r0, r1)) = self.geometry.window(agent.position(), sensor.range) else {
            return 0.0;
        };
        let mut acc = 0.0;
        for row in r0..=r1 {
            for col in c0..=c1 {
                let cell = self.geometry.index(col, row);
                let m = self.mass[cell];
                if m > 0.0 {
                    acc += m * detection_likelihood(agent, self.geometry.center(cell), sensor);
                }
            }
        }
        acc.clamp(0.0, 1.0)
    }

    /// Rasterizes a mixture of Gaussian blobs, evaluated at cell centers.
    pub fn from_gaussian_mixture(
        geometry: GridGeometry,
        blobs: &[GaussianBlob],
    ) -> Result<Self, BeliefError> {
        let mut weights = vec![0.0; geometry.cells()];
        for blob in blobs {
            let [[a, b], [c, d]] = blob.covariance;
            let det = a * d - b * c;
            if !(det > 0.0) || !(a > 0.0) || !(blob.weight >= 0.0) {
                return Err(BeliefError::InvalidWeights);
            }
            let (ia, ib, ic, id) = (d / det, -b / det, -c / det, a / det);
            let norm = blob.weight / (2.0 * std::f64::consts::PI * det.sqrt());
            for (cell, w) in weights.iter_mut().enumerate() {
                let p = geometry.center(cell);
                let (dx, dy) = (p[0] - blob.mean[0], p[1] - blob.mean[1]);
                let q = dx * (ia * dx + ib * dy) + dy * (ic * dx + id * dy);
                *w += norm * (-0.5 * q).exp();
            }
        }
        Self::from_weights(geometry, weights)
    }
}

/// One component of a Gaussian-mixture prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianBlob {
    pub mean: [f64; 2],
    pub covariance: [[f64; 2]; 2],
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}
