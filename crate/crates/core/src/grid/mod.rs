//! Uniform grids in `ℝ^k`, discrete fields valued in `⊕^k E` or `⊕^k E*`,
//! finite-difference jets and CSV I/O.

mod convergence;
mod march;

pub use convergence::{convergence_study, fit_order, ConvergenceReport};
pub use march::{march_evolutionary, Evolution, MarchReport};

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebroid::{LieAlgebroid, MorphismJet};
use crate::error::{check_len, Error, Result};
use crate::prolongation::{CoWhitneyPoint, Side, WhitneyPoint};

/// Rectangular uniform grid. Node `i` on axis `A` sits at
/// `origin[A] + i * spacing[A]`; periodic axes wrap with period
/// `shape[A] * spacing[A]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    pub periodic: Vec<bool>,
}

impl Grid {
    pub fn new(
        shape: Vec<usize>,
        spacing: Vec<f64>,
        origin: Vec<f64>,
        periodic: Vec<bool>,
    ) -> Result<Self> {
        let k = shape.len();
        if k == 0 {
            return Err(Error::Invalid("grid needs at least one axis".into()));
        }
        check_len("grid spacing", k, spacing.len())?;
        check_len("grid origin", k, origin.len())?;
        check_len("grid periodic flags", k, periodic.len())?;
        if shape.contains(&0) {
            return Err(Error::Invalid(
                "grid axes must have at least one node".into(),
            ));
        }
        if spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::Invalid("grid spacing must be positive".into()));
        }
        Ok(Grid {
            shape,
            spacing,
            origin,
            periodic,
        })
    }

    /// `points^k` nodes of spacing `1 / points` on the periodic unit box.
    pub fn periodic_unit(k: usize, points: usize) -> Result<Self> {
        Grid::new(
            vec![points; k],
            vec![1.0 / points as f64; k],
            vec![0.0; k],
            vec![true; k],
        )
    }

    pub fn k(&self) -> usize {
        self.shape.len()
    }

    pub fn node_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// Row-major index, first axis slowest.
    pub fn index(&self, node: &[usize]) -> usize {
        node.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &s)| acc * s + i)
    }

    pub fn node(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.k()];
        for a in (0..self.k()).rev() {
            out[a] = index % self.shape[a];
            index /= self.shape[a];
        }
        out
    }

    pub fn coords(&self, node: &[usize]) -> Vec<f64> {
        (0..self.k())
            .map(|a| self.origin[a] + node[a] as f64 * self.spacing[a])
            .collect()
    }

    fn check_node(&self, node: &[usize]) -> Result<()> {
        check_len("grid node", self.k(), node.len())?;
        for (a, (&i, &s)) in node.iter().zip(&self.shape).enumerate() {
            if i >= s {
                return Err(Error::Invalid(format!(
                    "node index {i} out of range on axis {a} (size {s})"
                )));
            }
        }
        Ok(())
    }

    /// Neighbor at `offset` along `axis`, wrapping on periodic axes.
    pub fn neighbor(&self, node: &[usize], axis: usize, offset: isize) -> Option<Vec<usize>> {
        let s = self.shape[axis] as isize;
        let mut j = node[axis] as isize + offset;
        if self.periodic[axis] {
            j = j.rem_euclid(s);
        } else if j < 0 || j >= s {
            return None;
        }
        let mut out = node.to_vec();
        out[axis] = j as usize;
        Some(out)
    }

    /// Central differences along `axis` are available at `node`.
    pub fn is_interior(&self, node: &[usize], axis: usize) -> bool {
        if self.periodic[axis] {
            self.shape[axis] >= 3
        } else {
            node[axis] >= 1 && node[axis] + 1 < self.shape[axis]
        }
    }

    /// Nodes interior along every axis, in index order.
    pub fn interior_nodes(&self) -> Vec<Vec<usize>> {
        (0..self.node_count())
            .map(|i| self.node(i))
            .filter(|nd| (0..self.k()).all(|a| self.is_interior(nd, a)))
            .collect()
    }

    /// `Π h_A`, the cell volume used by discrete L² norms.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }
}

/// Difference stencil for first derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Stencil {
    /// Second-order central difference.
    Central,
    /// First-order forward difference.
    Forward,
}

/// `∂f/∂t^A` at `node` from samples of `f` at neighbouring nodes.
pub fn fd_apply(
    grid: &Grid,
    node: &[usize],
    axis: usize,
    stencil: Stencil,
    mut sample: impl FnMut(&[usize]) -> Result<DVector<f64>>,
) -> Result<DVector<f64>> {
    grid.check_node(node)?;
    if axis >= grid.k() {
        return Err(Error::SlotOutOfRange {
            index: axis,
            k: grid.k(),
        });
    }
    let h = grid.spacing[axis];
    let boundary = || Error::BoundaryNode {
        node: node.to_vec(),
        axis,
    };
    match stencil {
        Stencil::Central => {
            if !grid.is_interior(node, axis) {
                return Err(boundary());
            }
            let p = grid.neighbor(node, axis, 1).ok_or_else(boundary)?;
            let m = grid.neighbor(node, axis, -1).ok_or_else(boundary)?;
            Ok((sample(&p)? - sample(&m)?) / (2.0 * h))
        }
        Stencil::Forward => {
            let p = grid.neighbor(node, axis, 1).ok_or_else(boundary)?;
            Ok((sample(&p)? - sample(node)?) / h)
        }
    }
}

/// Fiber layout of a discrete field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Layout {
    pub side: Side,
    pub n: usize,
    pub m: usize,
    pub k: usize,
}

impl Layout {
    pub fn width(&self) -> usize {
        self.n + self.m * self.k
    }

    /// Column names after the `t` columns.
    pub fn headers(&self) -> Vec<String> {
        let mut h: Vec<String> = (1..=self.n).map(|i| format!("q{i}")).collect();
        match self.side {
            Side::Lagrangian => {
                for a in 1..=self.m {
                    for s in 1..=self.k {
                        h.push(format!("y_{a}_{s}"));
                    }
                }
            }
            Side::Hamiltonian => {
                for s in 1..=self.k {
                    for a in 1..=self.m {
                        h.push(format!("p_{s}_{a}"));
                    }
                }
            }
        }
        h
    }
}

/// A discrete map from a grid into `⊕^k E` or `⊕^k E*`. Each node stores the
/// flattened point (see [`WhitneyPoint::flat`], [`CoWhitneyPoint::flat`]).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridField {
    pub grid: Grid,
    pub layout: Layout,
    pub data: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, layout: Layout, data: Vec<f64>) -> Result<Self> {
        check_len("grid slots", grid.k(), layout.k)?;
        check_len(
            "grid field data",
            grid.node_count() * layout.width(),
            data.len(),
        )?;
        Ok(GridField { grid, layout, data })
    }

    /// Samples `f(t)` (a flattened point) at every node.
    pub fn from_fn(grid: Grid, layout: Layout, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let w = layout.width();
        let mut data = Vec::with_capacity(grid.node_count() * w);
        for i in 0..grid.node_count() {
            let v = f(&grid.coords(&grid.node(i)));
            check_len("sampled point", w, v.len())?;
            data.extend(v);
        }
        GridField::new(grid, layout, data)
    }

    pub fn point(&self, node: &[usize]) -> &[f64] {
        let w = self.layout.width();
        let i = self.grid.index(node);
        &self.data[i * w..(i + 1) * w]
    }

    pub fn point_vector(&self, node: &[usize]) -> DVector<f64> {
        DVector::from_column_slice(self.point(node))
    }

    pub fn whitney(&self, node: &[usize]) -> Result<WhitneyPoint> {
        let l = self.layout;
        if l.side != Side::Lagrangian {
            return Err(Error::Invalid("field is valued in the dual bundle".into()));
        }
        WhitneyPoint::from_flat(l.n, l.m, l.k, self.point(node))
    }

    pub fn cowhitney(&self, node: &[usize]) -> Result<CoWhitneyPoint> {
        let l = self.layout;
        if l.side != Side::Hamiltonian {
            return Err(Error::Invalid("field is valued in the Whitney sum".into()));
        }
        CoWhitneyPoint::from_flat(l.n, l.m, l.k, self.point(node))
    }

    /// `∂/∂t^A` of every component at `node`.
    pub fn jet(&self, node: &[usize], axis: usize, stencil: Stencil) -> Result<DVector<f64>> {
        fd_apply(&self.grid, node, axis, stencil, |nd| {
            Ok(self.point_vector(nd))
        })
    }

    /// Largest absolute entry over all nodes.
    pub fn amax(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.grid.k()).map(|a| format!("t{a}")).collect();
        header.extend(self.layout.headers());
        wr.write_record(&header)?;
        for i in 0..self.grid.node_count() {
            let node = self.grid.node(i);
            let mut row: Vec<String> = self
                .grid
                .coords(&node)
                .iter()
                .map(|v| v.to_string())
                .collect();
            row.extend(self.point(&node).iter().map(|v| v.to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a field written by [`GridField::write_csv`]. Rows may come in any
    /// order; every axis is marked non-periodic.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let k = header.iter().take_while(|h| h.starts_with('t')).count();
        let n = header[k..]
            .iter()
            .take_while(|h| h.starts_with('q'))
            .count();
        let rest = &header[k + n..];
        if k == 0 {
            return Err(Error::Invalid("CSV header has no t columns".into()));
        }
        let side = match rest.first().map(|s| s.chars().next()) {
            Some(Some('y')) => Side::Lagrangian,
            Some(Some('p')) => Side::Hamiltonian,
            _ => return Err(Error::Invalid("CSV header has no y_ or p_ columns".into())),
        };
        if !rest.len().is_multiple_of(k) {
            return Err(Error::Invalid(
                "fiber column count is not a multiple of k".into(),
            ));
        }
        let layout = Layout {
            side,
            n,
            m: rest.len() / k,
            k,
        };
        if layout.headers() != header[k..] {
            return Err(Error::Invalid(format!(
                "unexpected column order; expected {:?}",
                layout.headers()
            )));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Invalid(format!("bad number {s:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            check_len("CSV row", header.len(), row.len())?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Invalid("CSV has no rows".into()));
        }
        let mut shape = Vec::with_capacity(k);
        let mut spacing = Vec::with_capacity(k);
        let mut origin = Vec::with_capacity(k);
        for a in 0..k {
            let mut vals: Vec<f64> = rows.iter().map(|r| r[a]).collect();
            vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
            vals.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * (1.0 + y.abs()));
            let h = if vals.len() > 1 {
                vals[1] - vals[0]
            } else {
                1.0
            };
            for w in vals.windows(2) {
                if ((w[1] - w[0]) - h).abs() > 1e-6 * h {
                    return Err(Error::Invalid(format!("axis t{} is not uniform", a + 1)));
                }
            }
            shape.push(vals.len());
            spacing.push(h);
            origin.push(vals[0]);
        }
        let grid = Grid::new(shape, spacing, origin, vec![false; k])?;
        if rows.len() != grid.node_count() {
            return Err(Error::Invalid(format!(
                "expected {} rows for a full grid, found {}",
                grid.node_count(),
                rows.len()
            )));
        }
        let w = layout.width();
        let mut data = vec![f64::NAN; grid.node_count() * w];
        for row in &rows {
            let node: Vec<usize> = (0..k)
                .map(|a| ((row[a] - grid.origin[a]) / grid.spacing[a]).round() as usize)
                .collect();
            let i = grid.index(&node);
            data[i * w..(i + 1) * w].copy_from_slice(&row[k..]);
        }
        if data.iter().any(|v| v.is_nan()) {
            return Err(Error::Invalid("grid has unpopulated nodes".into()));
        }
        GridField::new(grid, layout, data)
    }
}

/// Morphism jet of a Lagrangian-side field at `node`.
pub fn grid_morphism_jet(
    field: &GridField,
    node: &[usize],
    stencil: Stencil,
) -> Result<MorphismJet> {
    let b = field.whitney(node)?;
    let (n, m, k) = (field.layout.n, field.layout.m, field.layout.k);
    let mut base_derivative = DMatrix::zeros(n, k);
    let mut fiber_derivative = Vec::with_capacity(k);
    for axis in 0..k {
        let d = field.jet(node, axis, stencil)?;
        for i in 0..n {
            base_derivative[(i, axis)] = d[i];
        }
        fiber_derivative.push(DMatrix::from_row_slice(m, k, &d.as_slice()[n..]));
    }
    Ok(MorphismJet {
        base: b.q,
        base_derivative,
        fiber: b.y,
        fiber_derivative,
    })
}

/// Whether `alg` is (numerically) the standard algebroid `TQ`.
fn is_standard(alg: &LieAlgebroid) -> bool {
    let n = alg.base_dim();
    if n == 0 || alg.rank() != n {
        return false;
    }
    [
        vec![0.0; n],
        vec![0.37; n],
        (0..n).map(|i| 0.1 - 0.3 * i as f64).collect(),
    ]
    .iter()
    .all(|q| {
        (alg.anchor_at(q) - DMatrix::identity(n, n)).amax() == 0.0
            && alg.structure_at(q).data.iter().all(|&c| c == 0.0)
    })
}

/// Lifts base values `q(t)` to `(q, ∂q/∂t^A)` on the standard algebroid.
/// Central differences inside, second-order one-sided differences on
/// non-periodic boundaries.
pub fn first_prolongation(alg: &LieAlgebroid, grid: &Grid, q: &[Vec<f64>]) -> Result<GridField> {
    if !is_standard(alg) {
        return Err(Error::NoCanonicalLift);
    }
    let n = alg.base_dim();
    let k = grid.k();
    check_len("base values", grid.node_count(), q.len())?;
    for v in q {
        check_len("base point", n, v.len())?;
    }
    for a in 0..k {
        if !grid.periodic[a] && grid.shape[a] < 3 {
            return Err(Error::Invalid(
                "one-sided stencils need three nodes per axis".into(),
            ));
        }
    }
    let at = |nd: &[usize]| &q[grid.index(nd)];
    let layout = Layout {
        side: Side::Lagrangian,
        n,
        m: n,
        k,
    };
    let mut data = Vec::with_capacity(grid.node_count() * layout.width());
    for idx in 0..grid.node_count() {
        let node = grid.node(idx);
        let mut y = DMatrix::zeros(n, k);
        for a in 0..k {
            let h = grid.spacing[a];
            let d: Vec<f64> = if grid.is_interior(&node, a) {
                let p = at(&grid.neighbor(&node, a, 1).unwrap());
                let m = at(&grid.neighbor(&node, a, -1).unwrap());
                (0..n).map(|i| (p[i] - m[i]) / (2.0 * h)).collect()
            } else {
                let dir: isize = if node[a] == 0 { 1 } else { -1 };
                let f0 = at(&node);
                let f1 = at(&grid.neighbor(&node, a, dir).unwrap());
                let f2 = at(&grid.neighbor(&node, a, 2 * dir).unwrap());
                (0..n)
                    .map(|i| dir as f64 * (-3.0 * f0[i] + 4.0 * f1[i] - f2[i]) / (2.0 * h))
                    .collect()
            };
            for i in 0..n {
                y[(i, a)] = d[i];
            }
        }
        data.extend(WhitneyPoint::new(at(&node).clone(), y).flat());
    }
    GridField::new(grid.clone(), layout, data)
}

/// L∞ and discrete L² norms of per-node residual vectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Norms {
    pub linf: f64,
    pub l2: f64,
}

impl Norms {
    /// `l2 = sqrt(Σ |r|² · cell_volume)`.
    pub fn of<'a>(values: impl IntoIterator<Item = &'a [f64]>, cell_volume: f64) -> Norms {
        let mut linf = 0.0_f64;
        let mut sq = 0.0;
        for v in values {
            for &x in v {
                linf = linf.max(x.abs());
                sq += x * x;
            }
        }
        Norms {
            linf,
            l2: (sq * cell_volume).sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn grid2(nx: usize, ny: usize, h: f64) -> Grid {
        Grid::new(vec![nx, ny], vec![h, h], vec![0.0, 0.0], vec![false, false]).unwrap()
    }

    #[test]
    fn indexing_round_trips() {
        let g = grid2(4, 5, 0.1);
        for i in 0..g.node_count() {
            assert_eq!(g.index(&g.node(i)), i);
        }
        assert_eq!(g.node(7), vec![1, 2]);
        assert_eq!(g.interior_nodes().len(), 2 * 3);
    }

    #[test]
    fn central_jet_exact_on_quadratics() {
        let g = grid2(5, 5, 0.25);
        let layout = Layout {
            side: Side::Lagrangian,
            n: 1,
            m: 0,
            k: 2,
        };
        let f =
            GridField::from_fn(g, layout, |t| vec![3.0 * t[0] * t[0] - t[0] * t[1] + 2.0]).unwrap();
        let d = f.jet(&[2, 3], 0, Stencil::Central).unwrap();
        assert!((d[0] - (6.0 * 0.5 - 0.75)).abs() < 1e-13);
        assert!(matches!(
            f.jet(&[0, 3], 0, Stencil::Central),
            Err(Error::BoundaryNode { axis: 0, .. })
        ));
    }

    #[test]
    fn periodic_axis_wraps() {
        let g = Grid::periodic_unit(1, 8).unwrap();
        assert_eq!(g.neighbor(&[0], 0, -1), Some(vec![7]));
        assert!(g.is_interior(&[0], 0));
    }

    #[test]
    fn first_prolongation_of_affine_map() {
        let g = grid2(4, 4, 0.5);
        let q: Vec<Vec<f64>> = (0..16)
            .map(|i| {
                let t = g.coords(&g.node(i));
                vec![t[0] + t[1]]
            })
            .collect();
        let f = first_prolongation(&models::standard_algebroid(1), &g, &q).unwrap();
        for i in 0..16 {
            let b = f.whitney(&g.node(i)).unwrap();
            assert!((b.y[(0, 0)] - 1.0).abs() < 1e-14);
            assert!((b.y[(0, 1)] - 1.0).abs() < 1e-14);
        }
        assert!(matches!(
            first_prolongation(&models::so3(), &g, &q),
            Err(Error::NoCanonicalLift)
        ));
    }

    #[test]
    fn csv_round_trip() {
        let g = grid2(3, 4, 0.5);
        let layout = Layout {
            side: Side::Hamiltonian,
            n: 1,
            m: 2,
            k: 2,
        };
        let f = GridField::from_fn(g, layout, |t| vec![t[0], t[1], 1.0, -t[0], 0.25]).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t1,t2,q1,p_1_1,p_1_2,p_2_1,p_2_2"));
        let back = GridField::read_csv(&buf[..]).unwrap();
        assert_eq!(back.layout, f.layout);
        assert_eq!(back.grid.shape, f.grid.shape);
        for (a, b) in back.data.iter().zip(&f.data) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
