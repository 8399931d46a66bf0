//! Space-time staggered grid and the field containers living on it.
//!
//! Densities `f` sit at cell centres and at the interior integer times
//! `k/P, k = 1..P-1`; the endpoint images `f0`, `f1` are fixed data. Momenta
//! `m` sit on cell faces at half-integer times `(k - 1/2)/P, k = 1..P`, one
//! block per spatial axis. Everything is stored flat in column-major order
//! (first spatial axis fastest, time slowest).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{OtError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    /// Reflecting boundary: no flux through the outer faces.
    Mirror,
    /// Wrap-around boundary: the first and last face coincide.
    Periodic,
}

impl BoundaryKind {
    /// Number of faces removed from an axis: 1 for mirror, 0 for periodic.
    pub fn kappa(self) -> usize {
        match self {
            BoundaryKind::Mirror => 1,
            BoundaryKind::Periodic => 0,
        }
    }
}

impl std::str::FromStr for BoundaryKind {
    type Err = OtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mirror" | "neumann" => Ok(BoundaryKind::Mirror),
            "periodic" => Ok(BoundaryKind::Periodic),
            other => Err(OtError::InvalidArgument(format!("unknown boundary kind '{other}'"))),
        }
    }
}

/// Length of the colour axis of RGB grids.
pub const COLOR_CHANNELS: usize = 3;

/// Grid description: the single source of truth for every array shape.
///
/// One spatial axis describes a signal, two a grayscale image and three an
/// RGB image whose third axis is the colour axis. The colour axis carries its
/// own boundary kind; all other axes use `spatial_boundary`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGridSpec", into = "RawGridSpec")]
pub struct GridSpec {
    spatial_dims: Vec<usize>,
    time_steps: usize,
    spatial_boundary: BoundaryKind,
    color_boundary: BoundaryKind,
}

#[derive(Serialize, Deserialize)]
struct RawGridSpec {
    spatial_dims: Vec<usize>,
    time_steps: usize,
    spatial_boundary: BoundaryKind,
    color_boundary: BoundaryKind,
}

impl TryFrom<RawGridSpec> for GridSpec {
    type Error = OtError;

    fn try_from(raw: RawGridSpec) -> Result<Self> {
        GridSpec::new(raw.spatial_dims, raw.time_steps, raw.spatial_boundary, raw.color_boundary)
    }
}

impl From<GridSpec> for RawGridSpec {
    fn from(g: GridSpec) -> Self {
        RawGridSpec {
            spatial_dims: g.spatial_dims,
            time_steps: g.time_steps,
            spatial_boundary: g.spatial_boundary,
            color_boundary: g.color_boundary,
        }
    }
}

impl GridSpec {
    pub fn new(
        spatial_dims: Vec<usize>,
        time_steps: usize,
        spatial_boundary: BoundaryKind,
        color_boundary: BoundaryKind,
    ) -> Result<Self> {
        if spatial_dims.is_empty() || spatial_dims.len() > 3 {
            return Err(OtError::InvalidGrid(format!(
                "expected 1 to 3 spatial axes, got {}",
                spatial_dims.len()
            )));
        }
        if let Some(axis) = spatial_dims.iter().position(|&n| n == 0) {
            return Err(OtError::InvalidGrid(format!("spatial axis {axis} has zero length")));
        }
        if spatial_dims.len() == 3 && spatial_dims[2] != COLOR_CHANNELS {
            return Err(OtError::InvalidGrid(format!(
                "the third axis is the colour axis and must have length {COLOR_CHANNELS}, got {}",
                spatial_dims[2]
            )));
        }
        if time_steps < 2 {
            return Err(OtError::InvalidGrid(format!("time_steps must be at least 2, got {time_steps}")));
        }
        Ok(GridSpec {
            spatial_dims,
            time_steps,
            spatial_boundary,
            color_boundary,
        })
    }

    pub fn signal(n: usize, time_steps: usize, boundary: BoundaryKind) -> Result<Self> {
        Self::new(vec![n], time_steps, boundary, BoundaryKind::Periodic)
    }

    pub fn grayscale(n1: usize, n2: usize, time_steps: usize, boundary: BoundaryKind) -> Result<Self> {
        Self::new(vec![n1, n2], time_steps, boundary, BoundaryKind::Periodic)
    }

    pub fn rgb(
        n1: usize,
        n2: usize,
        time_steps: usize,
        spatial_boundary: BoundaryKind,
        color_boundary: BoundaryKind,
    ) -> Result<Self> {
        Self::new(vec![n1, n2, COLOR_CHANNELS], time_steps, spatial_boundary, color_boundary)
    }

    pub fn spatial_dims(&self) -> &[usize] {
        &self.spatial_dims
    }

    pub fn time_steps(&self) -> usize {
        self.time_steps
    }

    pub fn spatial_boundary(&self) -> BoundaryKind {
        self.spatial_boundary
    }

    pub fn color_boundary(&self) -> BoundaryKind {
        self.color_boundary
    }

    pub fn ndim(&self) -> usize {
        self.spatial_dims.len()
    }

    pub fn color_axis(&self) -> Option<usize> {
        (self.ndim() == 3).then_some(2)
    }

    pub fn boundary(&self, axis: usize) -> BoundaryKind {
        if Some(axis) == self.color_axis() {
            self.color_boundary
        } else {
            self.spatial_boundary
        }
    }

    /// Number of cells in one spatial layer.
    pub fn cells(&self) -> usize {
        self.spatial_dims.iter().product()
    }

    /// Spatial shape of the momentum block for `axis`.
    pub fn face_dims(&self, axis: usize) -> Vec<usize> {
        let mut dims = self.spatial_dims.clone();
        dims[axis] -= self.boundary(axis).kappa();
        dims
    }

    pub fn face_block_len(&self, axis: usize) -> usize {
        self.face_dims(axis).iter().product::<usize>() * self.time_steps
    }

    /// Axes whose momentum block is non-empty. A mirror axis of length one has
    /// no interior face and carries no momentum.
    pub fn active_axes(&self) -> Vec<usize> {
        (0..self.ndim()).filter(|&a| self.face_block_len(a) > 0).collect()
    }

    /// Shape of arrays at cell centres and half-integer times (`cells × P`):
    /// the range of the constraint operator and the domain of the energy.
    pub fn midpoint_dims(&self) -> Vec<usize> {
        let mut d = self.spatial_dims.clone();
        d.push(self.time_steps);
        d
    }

    /// Shape of the interior density (`cells × (P-1)`).
    pub fn interior_dims(&self) -> Vec<usize> {
        let mut d = self.spatial_dims.clone();
        d.push(self.time_steps - 1);
        d
    }

    pub fn m_len(&self) -> usize {
        (0..self.ndim()).map(|a| self.face_block_len(a)).sum()
    }

    pub fn f_len(&self) -> usize {
        self.cells() * (self.time_steps - 1)
    }

    pub fn midpoint_len(&self) -> usize {
        self.cells() * self.time_steps
    }

    pub fn sizes(&self) -> FieldSizes {
        field_sizes(self)
    }
}

/// Flattened lengths and per-block shapes for a grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldSizes {
    pub m_len: usize,
    pub f_len: usize,
    /// Full shape of every momentum block, time last.
    pub m_blocks: Vec<Vec<usize>>,
    /// Full shape of the interior density, time last.
    pub f_shape: Vec<usize>,
    /// Length of `A (m, f)`, i.e. of `f⁻`.
    pub constraint_len: usize,
}

pub fn field_sizes(spec: &GridSpec) -> FieldSizes {
    let m_blocks = (0..spec.ndim())
        .map(|a| {
            let mut d = spec.face_dims(a);
            d.push(spec.time_steps());
            d
        })
        .collect();
    FieldSizes {
        m_len: spec.m_len(),
        f_len: spec.f_len(),
        m_blocks,
        f_shape: spec.interior_dims(),
        constraint_len: spec.midpoint_len(),
    }
}

/// Momentum samples, one block per spatial axis, concatenated.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    data: Vec<f64>,
    offsets: Vec<usize>,
}

impl FaceField {
    pub fn zeros(grid: &GridSpec) -> Self {
        let offsets = block_offsets(grid);
        FaceField {
            data: vec![0.0; *offsets.last().unwrap()],
            offsets,
        }
    }

    pub fn from_blocks(grid: &GridSpec, blocks: Vec<Vec<f64>>) -> Result<Self> {
        if blocks.len() != grid.ndim() {
            return Err(OtError::shape("FaceField", "blocks", grid.ndim(), blocks.len()));
        }
        for (axis, b) in blocks.iter().enumerate() {
            let expected = grid.face_block_len(axis);
            if b.len() != expected {
                return Err(OtError::shape("FaceField", axis_label(grid, axis), expected, b.len()));
            }
        }
        Ok(FaceField {
            data: blocks.concat(),
            offsets: block_offsets(grid),
        })
    }

    pub fn unflatten(grid: &GridSpec, v: &[f64]) -> Result<Self> {
        let offsets = block_offsets(grid);
        let expected = *offsets.last().unwrap();
        if v.len() != expected {
            return Err(OtError::shape("FaceField::unflatten", "m (all blocks × time)", expected, v.len()));
        }
        Ok(FaceField {
            data: v.to_vec(),
            offsets,
        })
    }

    pub(crate) fn from_vec_unchecked(grid: &GridSpec, data: Vec<f64>) -> Self {
        let offsets = block_offsets(grid);
        debug_assert_eq!(data.len(), *offsets.last().unwrap());
        FaceField { data, offsets }
    }

    /// Column-major linearisation: block 0, block 1, ... each with time slowest.
    pub fn flatten(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        self.check(grid)?;
        Ok(self.data.clone())
    }

    pub fn check(&self, grid: &GridSpec) -> Result<()> {
        let offsets = block_offsets(grid);
        if offsets.len() != self.offsets.len() {
            return Err(OtError::shape("FaceField", "blocks", grid.ndim(), self.num_blocks()));
        }
        for axis in 0..grid.ndim() {
            let expected = offsets[axis + 1] - offsets[axis];
            let got = self.offsets[axis + 1] - self.offsets[axis];
            if expected != got {
                return Err(OtError::shape("FaceField", axis_label(grid, axis), expected, got));
            }
        }
        Ok(())
    }

    pub fn num_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn block(&self, axis: usize) -> &[f64] {
        &self.data[self.offsets[axis]..self.offsets[axis + 1]]
    }

    pub fn block_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.data[self.offsets[axis]..self.offsets[axis + 1]]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

fn block_offsets(grid: &GridSpec) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(grid.ndim() + 1);
    offsets.push(0);
    for axis in 0..grid.ndim() {
        offsets.push(offsets[axis] + grid.face_block_len(axis));
    }
    offsets
}

fn axis_label(grid: &GridSpec, axis: usize) -> String {
    let dims = grid.face_dims(axis);
    format!("m{} (faces {:?} × {} times)", axis + 1, dims, grid.time_steps())
}

/// Density samples: the free interior layers plus the fixed endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterField {
    interior: Vec<f64>,
    f0: Arc<[f64]>,
    f1: Arc<[f64]>,
}

impl CenterField {
    pub fn new(grid: &GridSpec, interior: Vec<f64>, f0: Arc<[f64]>, f1: Arc<[f64]>) -> Result<Self> {
        check_endpoint(grid, &f0, "f0")?;
        check_endpoint(grid, &f1, "f1")?;
        if interior.len() != grid.f_len() {
            return Err(OtError::shape(
                "CenterField",
                format!("interior ({} cells × {} layers)", grid.cells(), grid.time_steps() - 1),
                grid.f_len(),
                interior.len(),
            ));
        }
        Ok(CenterField { interior, f0, f1 })
    }

    /// Builds the interior from a function of the spatial multi-index and the
    /// interior layer `k = 1..P-1`.
    pub fn from_fn(
        grid: &GridSpec,
        f0: Arc<[f64]>,
        f1: Arc<[f64]>,
        mut value: impl FnMut(&[usize], usize) -> f64,
    ) -> Result<Self> {
        let mut interior = Vec::with_capacity(grid.f_len());
        for k in 1..grid.time_steps() {
            crate::nd::for_each_index(grid.spatial_dims(), |idx| interior.push(value(idx, k)));
        }
        Self::new(grid, interior, f0, f1)
    }

    pub fn unflatten(grid: &GridSpec, v: &[f64], f0: Arc<[f64]>, f1: Arc<[f64]>) -> Result<Self> {
        Self::new(grid, v.to_vec(), f0, f1)
    }

    pub fn flatten(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        if self.interior.len() != grid.f_len() {
            return Err(OtError::shape("CenterField::flatten", "interior", grid.f_len(), self.interior.len()));
        }
        check_endpoint(grid, &self.f0, "f0")?;
        Ok(self.interior.clone())
    }

    pub fn interior(&self) -> &[f64] {
        &self.interior
    }

    pub fn f0(&self) -> &[f64] {
        &self.f0
    }

    pub fn f1(&self) -> &[f64] {
        &self.f1
    }

    pub fn endpoints(&self) -> (Arc<[f64]>, Arc<[f64]>) {
        (self.f0.clone(), self.f1.clone())
    }

    pub fn time_steps(&self) -> usize {
        self.interior.len() / self.f0.len().max(1) + 1
    }

    /// Layer `k = 0..=P`, endpoints included.
    pub fn layer(&self, k: usize) -> &[f64] {
        let cells = self.f0.len();
        let p = self.time_steps();
        match k {
            0 => &self.f0,
            k if k == p => &self.f1,
            k => &self.interior[(k - 1) * cells..k * cells],
        }
    }
}

pub(crate) fn check_endpoint(grid: &GridSpec, v: &[f64], name: &'static str) -> Result<()> {
    if v.len() != grid.cells() {
        return Err(OtError::shape(
            name,
            format!("spatial {:?}", grid.spatial_dims()),
            grid.cells(),
            v.len(),
        ));
    }
    Ok(())
}

/// Per-iteration trace emitted by the primal-dual engine.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Transport energy after each iteration; `+inf` where the density
    /// midpoints were negative (serialised as `null`).
    #[serde(with = "extended_reals")]
    pub energy_trace: Vec<f64>,
    /// `‖A(m, f) − f⁻‖₂` after each iteration.
    pub residual_trace: Vec<f64>,
    /// Largest change of the scaled dual variables in each iteration.
    pub dual_residual_trace: Vec<f64>,
    pub iterations: usize,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn final_energy(&self) -> Option<f64> {
        self.energy_trace.last().copied()
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.residual_trace.last().copied()
    }

    pub fn final_dual_residual(&self) -> Option<f64> {
        self.dual_residual_trace.last().copied()
    }
}

mod extended_reals {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let opt: Vec<Option<f64>> = v.iter().map(|x| x.is_finite().then_some(*x)).collect();
        opt.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let opt: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(opt.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ends(grid: &GridSpec) -> (Arc<[f64]>, Arc<[f64]>) {
        let v: Arc<[f64]> = vec![1.0; grid.cells()].into();
        (v.clone(), v)
    }

    #[test]
    fn kappa_values() {
        assert_eq!(BoundaryKind::Mirror.kappa(), 1);
        assert_eq!(BoundaryKind::Periodic.kappa(), 0);
    }

    #[test]
    fn flatten_is_column_major() {
        // one interior layer [[1,3],[2,4]], rows along axis 1
        let grid = GridSpec::grayscale(2, 2, 2, BoundaryKind::Mirror).unwrap();
        let layer = [[1.0, 3.0], [2.0, 4.0]];
        let (f0, f1) = ends(&grid);
        let f = CenterField::from_fn(&grid, f0, f1, |idx, _| layer[idx[0]][idx[1]]).unwrap();
        assert_eq!(f.flatten(&grid).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn mirror_face_block_size() {
        let grid = GridSpec::signal(4, 2, BoundaryKind::Mirror).unwrap();
        let sizes = grid.sizes();
        assert_eq!(sizes.m_blocks, vec![vec![3, 2]]);
        let m = FaceField::zeros(&grid);
        assert_eq!(m.flatten(&grid).unwrap().len(), 6);
    }

    #[test]
    fn field_sizes_examples() {
        let mirror = GridSpec::signal(4, 4, BoundaryKind::Mirror).unwrap().sizes();
        assert_eq!((mirror.m_len, mirror.f_len), (12, 12));
        let periodic = GridSpec::signal(4, 4, BoundaryKind::Periodic).unwrap().sizes();
        assert_eq!(periodic.m_len, 16);

        let rgb = GridSpec::rgb(2, 2, 2, BoundaryKind::Mirror, BoundaryKind::Periodic).unwrap();
        let lens: Vec<usize> = (0..3).map(|a| rgb.face_block_len(a)).collect();
        assert_eq!(lens, vec![2 * 3 * 2, 2 * 3 * 2, 2 * 2 * 3 * 2]);
        assert_eq!(rgb.sizes().m_blocks[2], vec![2, 2, 3, 2]);
    }

    #[test]
    fn invalid_grids_rejected() {
        assert!(GridSpec::signal(4, 1, BoundaryKind::Mirror).is_err());
        assert!(GridSpec::signal(0, 4, BoundaryKind::Mirror).is_err());
        assert!(GridSpec::new(vec![2, 2, 4], 4, BoundaryKind::Mirror, BoundaryKind::Periodic).is_err());
        assert!(GridSpec::new(vec![2, 2, 3, 3], 4, BoundaryKind::Mirror, BoundaryKind::Periodic).is_err());
    }

    #[test]
    fn shape_errors_name_the_axis() {
        let grid = GridSpec::rgb(2, 2, 2, BoundaryKind::Mirror, BoundaryKind::Periodic).unwrap();
        let err = FaceField::from_blocks(&grid, vec![vec![0.0; 12], vec![0.0; 11], vec![0.0; 24]]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("m2") && msg.contains("12"), "{msg}");

        let (f0, f1) = ends(&grid);
        let err = CenterField::new(&grid, vec![0.0; 5], f0, f1).unwrap_err();
        assert!(err.to_string().contains("expected 12"), "{err}");
    }

    #[test]
    fn layers_include_endpoints() {
        let grid = GridSpec::signal(2, 3, BoundaryKind::Mirror).unwrap();
        let f = CenterField::new(&grid, vec![2.0, 2.0, 3.0, 3.0], vec![1.0, 1.0].into(), vec![4.0, 4.0].into()).unwrap();
        let layers: Vec<f64> = (0..=3).map(|k| f.layer(k)[0]).collect();
        assert_eq!(layers, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn grid_serde_validates() {
        let grid = GridSpec::rgb(4, 3, 8, BoundaryKind::Mirror, BoundaryKind::Periodic).unwrap();
        let s = serde_json::to_string(&grid).unwrap();
        assert_eq!(serde_json::from_str::<GridSpec>(&s).unwrap(), grid);
        let bad = s.replace("\"time_steps\":8", "\"time_steps\":1");
        assert!(serde_json::from_str::<GridSpec>(&bad).is_err());
    }

    #[test]
    fn report_serialises_infinite_energy_as_null() {
        let r = RunReport {
            energy_trace: vec![f64::INFINITY, 0.5],
            residual_trace: vec![1.0, 0.0],
            dual_residual_trace: vec![1.0, 0.1],
            iterations: 2,
            wall_time_s: 0.0,
        };
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("[null,0.5]"));
        assert_eq!(serde_json::from_str::<RunReport>(&s).unwrap(), r);
    }

    fn any_grid() -> impl Strategy<Value = GridSpec> {
        let b = prop_oneof![Just(BoundaryKind::Mirror), Just(BoundaryKind::Periodic)];
        (1usize..4, 1usize..5, 1usize..5, 2usize..5, b.clone(), b).prop_map(|(nd, n1, n2, p, sb, cb)| {
            let dims = match nd {
                1 => vec![n1],
                2 => vec![n1, n2],
                _ => vec![n1, n2, 3],
            };
            GridSpec::new(dims, p, sb, cb).unwrap()
        })
    }

    proptest! {
        #[test]
        fn flatten_round_trips(grid in any_grid(), seed in any::<u64>()) {
            let gen = |n: usize, s: u64| -> Vec<f64> {
                (0..n).map(|i| ((i as u64).wrapping_mul(2654435761).wrapping_add(s) % 1000) as f64 / 7.0).collect()
            };
            let m = FaceField::unflatten(&grid, &gen(grid.m_len(), seed)).unwrap();
            prop_assert_eq!(FaceField::unflatten(&grid, &m.flatten(&grid).unwrap()).unwrap(), m.clone());

            let (f0, f1) = ends(&grid);
            let f = CenterField::unflatten(&grid, &gen(grid.f_len(), seed ^ 1), f0.clone(), f1.clone()).unwrap();
            let back = CenterField::unflatten(&grid, &f.flatten(&grid).unwrap(), f0, f1).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
