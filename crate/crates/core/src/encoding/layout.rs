use serde::{Deserialize, Serialize};

use super::{EncodingError, SparseActivation};

/// Receptive-field profile along one input dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldShape {
    /// Binary tiles; one active cell per tiling.
    Rectangular,
    /// Linear hats centered on grid points.
    Triangular,
    /// `cos²` hats centered on grid points.
    SmoothProduct,
}

/// How per-dimension field values are merged into one cell value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combine {
    AndMin,
    Product,
}

/// Input clamping event reported by [`BasisLayout::clamp`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clamp {
    pub dim: usize,
    pub value: f64,
    pub clamped: f64,
}

/// Tiling geometry of a coarse-coded input space.
///
/// Each dimension `d` is spanned by `cells_per_dim - 1` tiles of width
/// `w_d = (max_d - min_d) / (cells_per_dim - 1)`; the extra tile absorbs the
/// per-tiling shift `offsets[t] · w_d`. Global cell ids interleave tilings:
/// `id = flat_cell · tilings + t`, so striding by `tilings / k` samples `k`
/// whole tilings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisLayout {
    pub ranges: Vec<(f64, f64)>,
    pub tilings: usize,
    pub cells_per_dim: usize,
    /// Fractional shift of each tiling, in tile widths. Defaults to `t / tilings`.
    #[serde(default)]
    pub offsets: Vec<f64>,
    pub field_shape: FieldShape,
    #[serde(default = "default_combine")]
    pub combine: Combine,
}

fn default_combine() -> Combine {
    Combine::Product
}

impl BasisLayout {
    pub fn new(
        ranges: Vec<(f64, f64)>,
        tilings: usize,
        cells_per_dim: usize,
        field_shape: FieldShape,
        combine: Combine,
    ) -> Result<Self, EncodingError> {
        let offsets = (0..tilings).map(|t| t as f64 / tilings as f64).collect();
        let layout = BasisLayout {
            ranges,
            tilings,
            cells_per_dim,
            offsets,
            field_shape,
            combine,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn with_offsets(mut self, offsets: Vec<f64>) -> Result<Self, EncodingError> {
        self.offsets = offsets;
        self.validate()?;
        Ok(self)
    }

    /// Fills default offsets when none were given, then checks invariants.
    pub fn normalized(mut self) -> Result<Self, EncodingError> {
        if self.offsets.is_empty() {
            self.offsets = (0..self.tilings).map(|t| t as f64 / self.tilings as f64).collect();
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), EncodingError> {
        let bad = |m: String| Err(EncodingError::Layout(m));
        if self.ranges.is_empty() {
            return bad("at least one dimension is required".into());
        }
        for (d, &(lo, hi)) in self.ranges.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("range {d} must satisfy min < max, got ({lo}, {hi})"));
            }
        }
        if self.tilings < 1 {
            return bad("tilings must be at least 1".into());
        }
        if self.cells_per_dim < 2 {
            return bad("cells_per_dim must be at least 2".into());
        }
        if self.offsets.len() != self.tilings {
            return bad(format!("{} offsets given for {} tilings", self.offsets.len(), self.tilings));
        }
        for (t, &o) in self.offsets.iter().enumerate() {
            if !(0.0..1.0).contains(&o) {
                return bad(format!("offset {t} must lie in [0, 1), got {o}"));
            }
            if self.offsets[..t].contains(&o) {
                return bad(format!("offset {t} duplicates an earlier tiling"));
            }
        }
        if self
            .cells_per_dim
            .checked_pow(self.ranges.len() as u32)
            .and_then(|c| c.checked_mul(self.tilings))
            .is_none()
        {
            return bad("cell count overflows".into());
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        self.ranges.len()
    }

    /// Total cell count `p = tilings · cells_per_dim^dims`.
    pub fn cell_count(&self) -> usize {
        self.cells_per_tiling() * self.tilings
    }

    pub fn cells_per_tiling(&self) -> usize {
        self.cells_per_dim.pow(self.dims() as u32)
    }

    /// Tile width along `dim`.
    pub fn tile_width(&self, dim: usize) -> f64 {
        let (lo, hi) = self.ranges[dim];
        (hi - lo) / (self.cells_per_dim - 1) as f64
    }

    /// Quantization step along `dim`: tile width over tiling count.
    pub fn resolution(&self, dim: usize) -> f64 {
        self.tile_width(dim) / self.tilings as f64
    }

    /// `(tiling, cell index within tiling)` of a global id.
    pub fn split_index(&self, id: usize) -> (usize, usize) {
        (id % self.tilings, id / self.tilings)
    }

    /// Clamps `q` into the declared ranges and lists what moved.
    pub fn clamp(&self, q: &[f64]) -> Result<(Vec<f64>, Vec<Clamp>), EncodingError> {
        if q.len() != self.dims() {
            return Err(EncodingError::Dimension {
                got: q.len(),
                expected: self.dims(),
            });
        }
        let mut events = Vec::new();
        let clamped = q
            .iter()
            .zip(&self.ranges)
            .enumerate()
            .map(|(dim, (&v, &(lo, hi)))| {
                let c = if v.is_nan() { lo } else { v.clamp(lo, hi) };
                if c != v {
                    events.push(Clamp { dim, value: v, clamped: c });
                }
                c
            })
            .collect();
        Ok((clamped, events))
    }

    /// Maps `q` to its sparse basis activation.
    ///
    /// Rectangular fields give one unit-valued cell per tiling; triangular
    /// and smooth fields are a partition of unity within each tiling.
    /// Out-of-range inputs are clamped with a logged warning.
    pub fn encode(&self, q: &[f64]) -> Result<SparseActivation, EncodingError> {
        let (q, events) = self.clamp(q)?;
        for e in events {
            log::warn!("input {} = {} outside range, clamped to {}", e.dim, e.value, e.clamped);
        }
        Ok(self.encode_clamped(&q))
    }

    fn encode_clamped(&self, q: &[f64]) -> SparseActivation {
        let dims = self.dims();
        let mut pairs = Vec::with_capacity(self.tilings << dims);
        let mut per_dim: Vec<[(usize, f64); 2]> = vec![[(0, 0.0); 2]; dims];
        for (t, &offset) in self.offsets.iter().enumerate() {
            for d in 0..dims {
                let (lo, _) = self.ranges[d];
                let u = (q[d] - lo) / self.tile_width(d) + offset;
                per_dim[d] = self.field_1d(u);
            }
            let start = pairs.len();
            // Cartesian product over dimensions, two candidates per dimension.
            for combo in 0..(1usize << dims) {
                let mut flat = 0;
                let mut value = match self.combine {
                    Combine::Product => 1.0,
                    Combine::AndMin => f64::INFINITY,
                };
                for (d, cands) in per_dim.iter().enumerate() {
                    let (cell, v) = cands[(combo >> d) & 1];
                    flat = flat * self.cells_per_dim + cell;
                    value = match self.combine {
                        Combine::Product => value * v,
                        Combine::AndMin => value.min(v),
                    };
                }
                if value > 0.0 {
                    pairs.push((flat * self.tilings + t, value));
                }
            }
            if self.combine == Combine::AndMin && self.field_shape != FieldShape::Rectangular {
                let total: f64 = pairs[start..].iter().map(|p| p.1).sum();
                for p in &mut pairs[start..] {
                    p.1 /= total;
                }
            }
        }
        SparseActivation::from_pairs(self.cell_count(), pairs)
    }

    /// One-dimensional field values at shifted coordinate `u` (in tile
    /// widths). The second slot carries zero weight when only one cell is hit.
    fn field_1d(&self, u: f64) -> [(usize, f64); 2] {
        let last = self.cells_per_dim - 1;
        match self.field_shape {
            FieldShape::Rectangular => {
                let mut cell = u.floor();
                // On a boundary the lower cell wins.
                if cell == u && u > 0.0 {
                    cell -= 1.0;
                }
                [((cell.max(0.0) as usize).min(last), 1.0), (0, 0.0)]
            }
            FieldShape::Triangular | FieldShape::SmoothProduct => {
                if u <= 0.0 {
                    return [(0, 1.0), (0, 0.0)];
                }
                if u >= last as f64 {
                    return [(last, 1.0), (0, 0.0)];
                }
                let c = u.floor();
                let f = u - c;
                let (a, b) = if self.field_shape == FieldShape::Triangular {
                    (1.0 - f, f)
                } else {
                    let s = (std::f64::consts::FRAC_PI_2 * f).sin();
                    (1.0 - s * s, s * s)
                };
                [(c as usize, a), (c as usize + 1, b)]
            }
        }
    }

    /// Stable digest of the geometry, for matching stored weights.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("layout serializes")
    }
}
