//! Space-time grid scans: classify every node of a regular grid, label
//! connected components of selected strata, probe the concentration of
//! finite-difference smoothness defects.
//!
//! The scan is data-parallel over nodes (deterministic for any worker
//! count); component labeling is a sequential union-find pass over the
//! finished grid.

pub mod output;

use crate::classify::{classify_point, CellScale, ClassifyOptions, StratumLabel};
use crate::error::{EikonalError, Result};
use crate::field::ScalarField;
use crate::geometry;
use crate::hopflax::SpaceTimePoint;
use crate::tol::Tolerances;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A regular space-time grid over `box x (t_min, t_max]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    /// Nodes per spatial axis.
    pub space_res: Vec<usize>,
    /// Nodes along the time axis.
    pub t_res: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(EikonalError::InvalidArgument(m));
        if self.lo.len() != self.hi.len() || self.lo.len() != self.space_res.len() {
            return bad("grid spec dimension mismatch".into());
        }
        if self.lo.is_empty() || self.lo.len() > 2 {
            return bad("grid supports 1 or 2 spatial dimensions".into());
        }
        if self.lo.iter().zip(&self.hi).any(|(l, h)| l >= h) {
            return bad("grid box must have lo < hi".into());
        }
        if !(self.t_min > 0.0) {
            return bad(format!("t_min must be positive, got {}", self.t_min));
        }
        if self.t_min >= self.t_max {
            return bad("t range must have t_min < t_max".into());
        }
        if self.space_res.iter().any(|&r| r < 8) || self.t_res < 8 {
            return bad("grid resolutions must be at least 8".into());
        }
        Ok(())
    }

    pub fn spatial_dim(&self) -> usize {
        self.lo.len()
    }

    pub fn node_count(&self) -> usize {
        self.space_res.iter().product::<usize>() * self.t_res
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.space_res[axis] - 1) as f64
    }

    pub fn t_spacing(&self) -> f64 {
        (self.t_max - self.t_min) / (self.t_res - 1) as f64
    }

    pub fn cell(&self) -> CellScale {
        CellScale {
            space: (0..self.spatial_dim())
                .map(|a| self.spacing(a))
                .fold(0.0, f64::max),
            time: self.t_spacing(),
        }
    }

    /// Grid index coordinates of a flat node index: spatial first, `t` last.
    pub fn unravel(&self, index: usize) -> Vec<usize> {
        let mut rest = index;
        let mut coords = Vec::with_capacity(self.spatial_dim() + 1);
        for a in 0..self.spatial_dim() {
            coords.push(rest % self.space_res[a]);
            rest /= self.space_res[a];
        }
        coords.push(rest);
        coords
    }

    pub fn ravel(&self, coords: &[usize]) -> usize {
        let mut idx = coords[self.spatial_dim()];
        for a in (0..self.spatial_dim()).rev() {
            idx = idx * self.space_res[a] + coords[a];
        }
        idx
    }

    /// Physical coordinates `(x..., t)` of a node.
    pub fn node_point(&self, index: usize) -> (Vec<f64>, f64) {
        let c = self.unravel(index);
        let x: Vec<f64> = (0..self.spatial_dim())
            .map(|a| self.lo[a] + self.spacing(a) * c[a] as f64)
            .collect();
        let t = self.t_min + self.t_spacing() * c[self.spatial_dim()] as f64;
        (x, t)
    }
}

/// One scanned node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeRecord {
    pub label: StratumLabel,
    pub u: f64,
    /// `|grad u|` where defined (Smooth/T1/P0 nodes), NaN otherwise.
    pub grad_norm: f64,
}

/// The classified grid.
#[derive(Debug, Clone)]
pub struct LabeledGrid {
    pub spec: GridSpec,
    pub nodes: Vec<NodeRecord>,
    pub valid: Vec<bool>,
    pub errors: Vec<(usize, String)>,
    /// Nodes whose termination check hit its search cap.
    pub capped_nodes: usize,
}

impl LabeledGrid {
    pub fn label(&self, index: usize) -> Option<StratumLabel> {
        self.valid[index].then(|| self.nodes[index].label)
    }

    pub fn count(&self, label: StratumLabel) -> usize {
        (0..self.nodes.len())
            .filter(|&i| self.label(i) == Some(label))
            .count()
    }
}

/// Classifies every node of the grid. Deterministic: the result is a pure
/// function of `(field, spec, tol)` regardless of the rayon pool shape.
pub fn scan_grid(field: &dyn ScalarField, spec: &GridSpec, tol: &Tolerances) -> Result<LabeledGrid> {
    spec.validate()?;
    if spec.spatial_dim() != field.dim() {
        return Err(EikonalError::InvalidArgument(format!(
            "grid dimension {} != field dimension {}",
            spec.spatial_dim(),
            field.dim()
        )));
    }
    let opts = ClassifyOptions::scan(tol.clone(), spec.cell());
    let results: Vec<std::result::Result<(NodeRecord, bool), String>> = (0..spec.node_count())
        .into_par_iter()
        .map(|i| {
            let (x, t) = spec.node_point(i);
            let p = SpaceTimePoint::new(x, t).map_err(|e| e.to_string())?;
            let class = classify_point(field, &p, &opts).map_err(|e| e.to_string())?;
            let grad_norm = class
                .gradient
                .as_ref()
                .map(|g| geometry::norm(&g.spatial))
                .unwrap_or(f64::NAN);
            let capped = matches!(class.diagnostics.termination_capped, Some(true));
            Ok((
                NodeRecord {
                    label: class.label,
                    u: class.diagnostics.u,
                    grad_norm,
                },
                capped,
            ))
        })
        .collect();

    let mut nodes = Vec::with_capacity(results.len());
    let mut valid = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    let mut capped_nodes = 0;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((node, capped)) => {
                nodes.push(node);
                valid.push(true);
                if capped {
                    capped_nodes += 1;
                }
            }
            Err(msg) => {
                nodes.push(NodeRecord {
                    label: StratumLabel::Smooth,
                    u: f64::NAN,
                    grad_norm: f64::NAN,
                });
                valid.push(false);
                errors.push((i, msg));
            }
        }
    }
    Ok(LabeledGrid {
        spec: spec.clone(),
        nodes,
        valid,
        errors,
        capped_nodes,
    })
}

/// Neighborhood notion for component labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjacency {
    Faces,
    /// Faces plus all diagonals (Chebyshev-1 neighbors). The default: thin
    /// strata run diagonally through the grid and face-only adjacency
    /// fragments them spuriously.
    FacesAndDiagonals,
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// One labeled connected component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentInfo {
    pub id: usize,
    pub size: usize,
    /// Physical bounding box over `(x..., t)`.
    pub bbox_lo: Vec<f64>,
    pub bbox_hi: Vec<f64>,
    /// A representative node, in physical coordinates.
    pub representative: Vec<f64>,
}

/// Report of the component structure of selected strata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentReport {
    pub schema_version: String,
    pub strata: Vec<StratumLabel>,
    pub adjacency: Adjacency,
    pub label_counts: BTreeMap<String, usize>,
    pub component_count: usize,
    pub components: Vec<ComponentInfo>,
    /// `(id_a, id_b, min distance)` over component pairs — the
    /// almost-connectedness probe. Distances at grid scale mean the grid
    /// cannot separate the two components; they are reported, never
    /// interpreted as a proof.
    pub min_distances: Vec<(usize, usize, f64)>,
    pub capped_termination_nodes: usize,
    pub node_errors: usize,
    pub notes: String,
}

/// Union-find labeling of the selected strata over the scanned grid.
pub fn label_components(
    grid: &LabeledGrid,
    strata: &[StratumLabel],
    adjacency: Adjacency,
) -> ComponentReport {
    let spec = &grid.spec;
    let n = spec.node_count();
    let selected: Vec<bool> = (0..n)
        .map(|i| grid.label(i).is_some_and(|l| strata.contains(&l)))
        .collect();

    let dims: Vec<usize> = spec
        .space_res
        .iter()
        .copied()
        .chain(std::iter::once(spec.t_res))
        .collect();
    let ndim = dims.len();

    let mut uf = UnionFind::new(n);
    let offsets = neighbor_offsets(ndim, adjacency);
    for i in 0..n {
        if !selected[i] {
            continue;
        }
        let c = spec.unravel(i);
        'offs: for off in &offsets {
            let mut nc = c.clone();
            for a in 0..ndim {
                let v = nc[a] as isize + off[a];
                if v < 0 || v as usize >= dims[a] {
                    continue 'offs;
                }
                nc[a] = v as usize;
            }
            let j = spec.ravel(&nc);
            if j > i && selected[j] {
                uf.union(i, j);
            }
        }
    }

    // collect components
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        if selected[i] {
            members.entry(uf.find(i)).or_default().push(i);
        }
    }
    let mut comps: Vec<Vec<usize>> = members.into_values().collect();
    comps.sort_by_key(|m| (usize::MAX - m.len(), m[0]));

    let phys = |i: usize| -> Vec<f64> {
        let (x, t) = spec.node_point(i);
        x.into_iter().chain(std::iter::once(t)).collect()
    };

    let components: Vec<ComponentInfo> = comps
        .iter()
        .enumerate()
        .map(|(id, m)| {
            let pts: Vec<Vec<f64>> = m.iter().map(|&i| phys(i)).collect();
            let d = ndim;
            let mut lo = vec![f64::INFINITY; d];
            let mut hi = vec![f64::NEG_INFINITY; d];
            for p in &pts {
                for a in 0..d {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
            ComponentInfo {
                id,
                size: m.len(),
                bbox_lo: lo,
                bbox_hi: hi,
                representative: pts[0].clone(),
            }
        })
        .collect();

    // pairwise minimum distances on subsampled members
    let mut min_distances = Vec::new();
    let samples: Vec<Vec<Vec<f64>>> = comps
        .iter()
        .map(|m| {
            let stride = (m.len() / 512).max(1);
            m.iter().step_by(stride).map(|&i| phys(i)).collect()
        })
        .collect();
    for a in 0..comps.len() {
        for b in a + 1..comps.len() {
            let mut best = f64::INFINITY;
            for p in &samples[a] {
                for q in &samples[b] {
                    best = best.min(geometry::dist(p, q));
                }
            }
            min_distances.push((a, b, best));
        }
    }

    let mut label_counts = BTreeMap::new();
    for label in [
        StratumLabel::Smooth,
        StratumLabel::Sigma,
        StratumLabel::T1,
        StratumLabel::P0,
        StratumLabel::Ambiguous,
    ] {
        label_counts.insert(label.as_str().to_string(), grid.count(label));
    }

    ComponentReport {
        schema_version: crate::SCHEMA_VERSION.to_string(),
        strata: strata.to_vec(),
        adjacency,
        label_counts,
        component_count: components.len(),
        components,
        min_distances,
        capped_termination_nodes: grid.capped_nodes,
        node_errors: grid.errors.len(),
        notes: String::new(),
    }
}

fn neighbor_offsets(ndim: usize, adjacency: Adjacency) -> Vec<Vec<isize>> {
    let mut offsets = Vec::new();
    let count = 3usize.pow(ndim as u32);
    for code in 0..count {
        let mut rest = code;
        let mut off = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            off.push((rest % 3) as isize - 1);
            rest /= 3;
        }
        let l1: isize = off.iter().map(|v| v.abs()).sum();
        match adjacency {
            Adjacency::Faces if l1 == 1 => offsets.push(off),
            Adjacency::FacesAndDiagonals if l1 > 0 => offsets.push(off),
            _ => {}
        }
    }
    offsets
}

/// Finite-difference smoothness defects of order `k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefectMap {
    pub order: usize,
    /// Jump estimator per node: largest discrepancy between forward and
    /// backward one-sided estimates of the order-`k` derivative over the
    /// axes. Zero where the stencil does not fit.
    pub defects: Vec<f64>,
    pub threshold: f64,
    pub flagged: Vec<bool>,
}

impl DefectMap {
    pub fn flagged_indices(&self) -> Vec<usize> {
        (0..self.flagged.len()).filter(|&i| self.flagged[i]).collect()
    }
}

/// Order-`k` derivative jump estimators from the stored `u` samples.
///
/// At a node, a one-sided stencil on each side estimates the `k`-th
/// derivative along each axis; their discrepancy is `O(h)` where `u` is
/// `C^(k+1)` and approximately the jump size where the `k`-th derivative is
/// discontinuous. Defects must concentrate within one cell of singular
/// strata for the regularity claims to hold on the rest.
pub fn smoothness_probe(grid: &LabeledGrid, order: usize, threshold_fraction: f64) -> DefectMap {
    let spec = &grid.spec;
    let n = spec.node_count();
    let dims: Vec<usize> = spec
        .space_res
        .iter()
        .copied()
        .chain(std::iter::once(spec.t_res))
        .collect();
    let spacings: Vec<f64> = (0..spec.spatial_dim())
        .map(|a| spec.spacing(a))
        .chain(std::iter::once(spec.t_spacing()))
        .collect();
    let ndim = dims.len();
    let binom: Vec<f64> = (0..=order)
        .map(|j| binomial(order, j) * if j % 2 == 0 { 1.0 } else { -1.0 })
        .collect();

    // first pass: one-sided estimates and a central magnitude scale
    let mut defects = vec![0.0; n];
    let mut central_mags: Vec<f64> = Vec::new();
    for i in 0..n {
        if !grid.valid[i] {
            continue;
        }
        let c = spec.unravel(i);
        let mut worst: f64 = 0.0;
        let mut have_any = false;
        for a in 0..ndim {
            if c[a] < order || c[a] + order >= dims[a] {
                continue;
            }
            let h = spacings[a];
            let sample = |off: isize| -> Option<f64> {
                let mut nc = c.clone();
                nc[a] = (nc[a] as isize + off) as usize;
                let j = spec.ravel(&nc);
                grid.valid[j].then(|| grid.nodes[j].u)
            };
            let mut fwd = 0.0;
            let mut bwd = 0.0;
            let mut ok = true;
            for (j, w) in binom.iter().enumerate() {
                // forward k-th difference on [0..k], backward on [-k..0]
                match (sample((order - j) as isize), sample(-(j as isize))) {
                    (Some(a1), Some(a2)) => {
                        fwd += w * a1;
                        bwd += w * a2;
                    }
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let hk = h.powi(order as i32);
            let d_plus = fwd / hk;
            let d_minus = bwd / hk;
            worst = worst.max((d_plus - d_minus).abs());
            central_mags.push(0.5 * (d_plus + d_minus).abs());
            have_any = true;
        }
        if have_any {
            defects[i] = worst;
        }
    }

    // scale: the largest central magnitude seen anywhere; for piecewise
    // smooth solutions this bounds the one-sided O(h u^(k+1)) bias of the
    // jump estimator while staying below genuine derivative jumps
    let scale = central_mags.iter().copied().fold(0.0, f64::max);
    let threshold = threshold_fraction * (1.0 + scale);
    let flagged = defects.iter().map(|&d| d > threshold).collect();
    DefectMap {
        order,
        defects,
        threshold,
        flagged,
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for j in 0..k {
        r = r * (n - j) as f64 / (j + 1) as f64;
    }
    r
}

/// Chebyshev distance in grid cells between a node and the nearest node of
/// any singular stratum (Sigma, T1, P0); used to check that smoothness
/// defects concentrate on the singular set.
pub fn cells_to_singular(grid: &LabeledGrid, index: usize) -> usize {
    let spec = &grid.spec;
    let c = spec.unravel(index);
    let mut best = usize::MAX;
    for i in 0..spec.node_count() {
        match grid.label(i) {
            Some(StratumLabel::Sigma) | Some(StratumLabel::T1) | Some(StratumLabel::P0) => {
                let d = spec
                    .unravel(i)
                    .iter()
                    .zip(&c)
                    .map(|(a, b)| a.abs_diff(*b))
                    .max()
                    .unwrap_or(usize::MAX);
                best = best.min(d);
            }
            _ => {}
        }
    }
    best
}
