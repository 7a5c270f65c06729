//! Ambient grid, finite-cell background mesh and its skeleton/ghost faces.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Point, Scalar};
use crate::splines::{KnotFace, KnotVector, TensorBSplineBasis};

/// Rectangular grid over the ambient box. Spacing may vary per direction and
/// per element (graded grids).
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientGrid<T> {
    breaks: [Vec<T>; 2],
}

impl<T: Scalar> AmbientGrid<T> {
    pub fn uniform(lo: Point<T>, hi: Point<T>, cells: [usize; 2]) -> Result<Self> {
        let kx = KnotVector::open(lo[0], hi[0], cells[0], 1)?;
        let ky = KnotVector::open(lo[1], hi[1], cells[1], 1)?;
        Ok(Self {
            breaks: [kx.breakpoints().to_vec(), ky.breakpoints().to_vec()],
        })
    }

    pub fn from_breakpoints(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        // validated through the knot-vector constructor
        KnotVector::from_breakpoints(x.clone(), 1)?;
        KnotVector::from_breakpoints(y.clone(), 1)?;
        Ok(Self { breaks: [x, y] })
    }

    pub fn breakpoints(&self, axis: usize) -> &[T] {
        &self.breaks[axis]
    }

    pub fn cells(&self) -> [usize; 2] {
        [self.breaks[0].len() - 1, self.breaks[1].len() - 1]
    }

    pub fn num_cells(&self) -> usize {
        let [nx, ny] = self.cells();
        nx * ny
    }

    pub fn bounds(&self) -> (Point<T>, Point<T>) {
        (
            [self.breaks[0][0], self.breaks[1][0]],
            [*self.breaks[0].last().unwrap(), *self.breaks[1].last().unwrap()],
        )
    }

    pub fn area(&self) -> T {
        let (lo, hi) = self.bounds();
        (hi[0] - lo[0]) * (hi[1] - lo[1])
    }

    #[inline]
    pub fn cell_index(&self, ij: [usize; 2]) -> usize {
        ij[0] + ij[1] * self.cells()[0]
    }

    #[inline]
    pub fn cell_ij(&self, c: usize) -> [usize; 2] {
        let nx = self.cells()[0];
        [c % nx, c / nx]
    }

    pub fn cell_bounds(&self, c: usize) -> (Point<T>, Point<T>) {
        let [i, j] = self.cell_ij(c);
        (
            [self.breaks[0][i], self.breaks[1][j]],
            [self.breaks[0][i + 1], self.breaks[1][j + 1]],
        )
    }

    /// Element size along `axis` of element `e` in that direction.
    pub fn spacing(&self, axis: usize, e: usize) -> T {
        self.breaks[axis][e + 1] - self.breaks[axis][e]
    }

    /// Smallest element size over both directions.
    pub fn min_spacing(&self) -> T {
        (0..2)
            .flat_map(|a| self.breaks[a].windows(2).map(|w| w[1] - w[0]))
            .fold(T::infinity(), T::min)
    }

    /// Spline basis of the given degree aligned with this grid.
    pub fn basis(&self, degree: usize) -> Result<TensorBSplineBasis<T>> {
        TensorBSplineBasis::new(
            KnotVector::from_breakpoints(self.breaks[0].clone(), degree)?,
            KnotVector::from_breakpoints(self.breaks[1].clone(), degree)?,
        )
    }

    /// Uniform refinement: every element split into `factor` equal parts.
    pub fn refined(&self, factor: usize) -> Self {
        let split = |b: &[T]| {
            let mut out = Vec::with_capacity((b.len() - 1) * factor + 1);
            for w in b.windows(2) {
                for s in 0..factor {
                    out.push(w[0] + (w[1] - w[0]) * T::from_usize_lossy(s) / T::from_usize_lossy(factor));
                }
            }
            out.push(*b.last().unwrap());
            out
        };
        Self {
            breaks: [split(&self.breaks[0]), split(&self.breaks[1])],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellClass {
    Interior,
    Cut,
    Exterior,
}

/// Interior face of the background mesh. `plus` is the cell with the smaller
/// index (left or below); the normal is the axis unit vector from plus to minus.
#[derive(Debug, Clone, PartialEq)]
pub struct Face<T> {
    pub plus: usize,
    pub minus: usize,
    pub knot: KnotFace,
    /// Position of the face along its normal axis.
    pub coordinate: T,
    /// Tangential interval covered by the face.
    pub extent: (T, T),
    pub ghost: bool,
}

impl<T: Scalar> Face<T> {
    pub fn axis(&self) -> usize {
        self.knot.axis
    }

    pub fn normal(&self) -> Point<T> {
        let mut n = [T::zero(); 2];
        n[self.knot.axis] = T::one();
        n
    }

    pub fn point(&self, t: T) -> Point<T> {
        let mut p = [T::zero(); 2];
        p[self.knot.axis] = self.coordinate;
        p[1 - self.knot.axis] = t;
        p
    }
}

#[derive(Debug, Clone)]
pub struct BackgroundMesh<T> {
    grid: AmbientGrid<T>,
    class: Vec<CellClass>,
    active: Vec<usize>,
    active_pos: Vec<Option<usize>>,
    faces: Vec<Face<T>>,
    face_lookup: HashMap<KnotFace, usize>,
}

/// Compact numbering of the basis functions supported on the background mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveFunctions {
    pub to_compact: Vec<Option<usize>>,
    pub to_global: Vec<usize>,
}

impl ActiveFunctions {
    pub fn len(&self) -> usize {
        self.to_global.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_global.is_empty()
    }

    #[inline]
    pub fn compact(&self, global: usize) -> Option<usize> {
        self.to_compact[global]
    }
}

impl<T: Scalar> BackgroundMesh<T> {
    /// Classifies every ambient cell and keeps those intersecting the domain.
    pub fn build<F>(grid: AmbientGrid<T>, classifier: F) -> Result<Self>
    where
        F: Fn(usize, Point<T>, Point<T>) -> CellClass + Sync,
    {
        let class: Vec<CellClass> = (0..grid.num_cells())
            .into_par_iter()
            .map(|c| {
                let (lo, hi) = grid.cell_bounds(c);
                classifier(c, lo, hi)
            })
            .collect();
        Self::from_classes(grid, class)
    }

    pub fn from_classes(grid: AmbientGrid<T>, class: Vec<CellClass>) -> Result<Self> {
        assert_eq!(class.len(), grid.num_cells());
        let active: Vec<usize> = (0..class.len())
            .filter(|&c| class[c] != CellClass::Exterior)
            .collect();
        if active.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let mut active_pos = vec![None; class.len()];
        for (p, &c) in active.iter().enumerate() {
            active_pos[c] = Some(p);
        }
        let [nx, ny] = grid.cells();
        let mut faces = Vec::new();
        let is_active = |c: usize| class[c] != CellClass::Exterior;
        for axis in 0..2 {
            let (n_line, n_along) = if axis == 0 { (nx, ny) } else { (ny, nx) };
            for along in 0..n_along {
                for line in 1..n_line {
                    let (plus, minus) = if axis == 0 {
                        (grid.cell_index([line - 1, along]), grid.cell_index([line, along]))
                    } else {
                        (grid.cell_index([along, line - 1]), grid.cell_index([along, line]))
                    };
                    if !(is_active(plus) && is_active(minus)) {
                        continue;
                    }
                    let tb = grid.breakpoints(1 - axis);
                    faces.push(Face {
                        plus,
                        minus,
                        knot: KnotFace { axis, line, along },
                        coordinate: grid.breakpoints(axis)[line],
                        extent: (tb[along], tb[along + 1]),
                        ghost: class[plus] == CellClass::Cut || class[minus] == CellClass::Cut,
                    });
                }
            }
        }
        let face_lookup = faces.iter().enumerate().map(|(i, f)| (f.knot, i)).collect();
        Ok(Self {
            grid,
            class,
            active,
            active_pos,
            faces,
            face_lookup,
        })
    }

    pub fn grid(&self) -> &AmbientGrid<T> {
        &self.grid
    }

    pub fn class(&self, cell: usize) -> CellClass {
        self.class[cell]
    }

    pub fn classes(&self) -> &[CellClass] {
        &self.class
    }

    /// Ambient indices of active cells in ascending order.
    pub fn active_cells(&self) -> &[usize] {
        &self.active
    }

    pub fn active_position(&self, cell: usize) -> Option<usize> {
        self.active_pos[cell]
    }

    pub fn num_cut(&self) -> usize {
        self.class.iter().filter(|&&c| c == CellClass::Cut).count()
    }

    pub fn skeleton_faces(&self) -> &[Face<T>] {
        &self.faces
    }

    pub fn ghost_faces(&self) -> impl Iterator<Item = &Face<T>> {
        self.faces.iter().filter(|f| f.ghost)
    }

    pub fn num_ghost(&self) -> usize {
        self.faces.iter().filter(|f| f.ghost).count()
    }

    /// Element size normal to the face: mean of the two adjacent cells.
    pub fn face_h(&self, face: &Face<T>) -> T {
        let a = face.axis();
        let e = face.knot.line;
        (self.grid.spacing(a, e - 1) + self.grid.spacing(a, e)) * T::lit(0.5)
    }

    /// Basis functions whose support meets an active cell.
    pub fn active_functions(&self, basis: &TensorBSplineBasis<T>) -> ActiveFunctions {
        let n = basis.num_functions();
        let k = basis.degree();
        let mut flag = vec![false; n];
        for &c in &self.active {
            let [ci, cj] = self.grid.cell_ij(c);
            for j in cj..=cj + k {
                for i in ci..=ci + k {
                    flag[basis.global_index([i, j])] = true;
                }
            }
        }
        let mut to_compact = vec![None; n];
        let mut to_global = Vec::new();
        for (g, &f) in flag.iter().enumerate() {
            if f {
                to_compact[g] = Some(to_global.len());
                to_global.push(g);
            }
        }
        ActiveFunctions {
            to_compact,
            to_global,
        }
    }

    /// Skeleton faces on which the k-th normal-derivative jump of global
    /// function `g` may be nonzero.
    pub fn faces_of_support(&self, basis: &TensorBSplineBasis<T>, g: usize) -> Vec<usize> {
        let ij = basis.tensor_index(g);
        let mut out = Vec::new();
        for axis in 0..2 {
            let normal = basis.dir(axis).support(ij[axis]);
            let tangent = basis.dir(1 - axis).support(ij[1 - axis]);
            let n_el = basis.dir(axis).num_elements();
            // knot lines bounding the support in the normal direction
            let lo = (*normal.start()).max(1);
            let hi = (*normal.end() + 1).min(n_el - 1);
            for along in tangent.clone() {
                for line in lo..=hi {
                    if let Some(&f) = self.face_lookup.get(&KnotFace { axis, line, along }) {
                        out.push(f);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// CSV dump of the cell classification and the face sets.
    pub fn write_csv<W: Write>(&self, cells: &mut W, faces: &mut W) -> Result<()> {
        writeln!(cells, "cell,i,j,class")?;
        for (c, cl) in self.class.iter().enumerate() {
            let [i, j] = self.grid.cell_ij(c);
            let name = match cl {
                CellClass::Interior => "interior",
                CellClass::Cut => "cut",
                CellClass::Exterior => "exterior",
            };
            writeln!(cells, "{c},{i},{j},{name}")?;
        }
        writeln!(faces, "axis,coordinate,extent_lo,extent_hi,plus,minus,ghost")?;
        for f in &self.faces {
            writeln!(
                faces,
                "{},{},{},{},{},{},{}",
                f.axis(),
                f.coordinate,
                f.extent.0,
                f.extent.1,
                f.plus,
                f.minus,
                u8::from(f.ghost)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_grid(n: usize) -> AmbientGrid<f64> {
        AmbientGrid::uniform([0.0, 0.0], [1.0, 1.0], [n, n]).unwrap()
    }

    #[test]
    fn all_interior_counts() {
        for n in [1, 2, 5, 8] {
            let mesh = BackgroundMesh::build(full_grid(n), |_, _, _| CellClass::Interior).unwrap();
            assert_eq!(mesh.skeleton_faces().len(), 2 * n * (n - 1));
            assert_eq!(mesh.num_ghost(), 0);
            let basis = mesh.grid().basis(2).unwrap();
            let act = mesh.active_functions(&basis);
            assert_eq!(act.len(), basis.num_functions());
            assert!(act.to_global.iter().enumerate().all(|(i, &g)| i == g));
        }
    }

    #[test]
    fn single_cut_cell_ghost_faces() {
        let grid = full_grid(5);
        let center = grid.cell_index([2, 2]);
        let mesh = BackgroundMesh::build(grid.clone(), |c, _, _| {
            if c == center { CellClass::Cut } else { CellClass::Interior }
        })
        .unwrap();
        assert_eq!(mesh.num_ghost(), 4);
        assert!(mesh.ghost_faces().all(|f| f.plus == center || f.minus == center));
        let corner = grid.cell_index([0, 0]);
        let mesh = BackgroundMesh::build(grid, |c, _, _| {
            if c == corner { CellClass::Cut } else { CellClass::Interior }
        })
        .unwrap();
        assert_eq!(mesh.num_ghost(), 2);
    }

    #[test]
    fn all_cut_ghost_equals_skeleton() {
        let mesh = BackgroundMesh::build(full_grid(6), |_, _, _| CellClass::Cut).unwrap();
        assert_eq!(mesh.num_ghost(), mesh.skeleton_faces().len());
    }

    #[test]
    fn exterior_cells_are_dropped_from_skeleton() {
        let grid = full_grid(4);
        // keep only the left column
        let mesh = BackgroundMesh::build(grid.clone(), |c, _, _| {
            if grid.cell_ij(c)[0] == 0 { CellClass::Cut } else { CellClass::Exterior }
        })
        .unwrap();
        assert_eq!(mesh.active_cells().len(), 4);
        assert_eq!(mesh.skeleton_faces().len(), 3);
        for f in mesh.skeleton_faces() {
            assert!(mesh.active_position(f.plus).is_some() && mesh.active_position(f.minus).is_some());
            assert!(f.plus < f.minus);
        }
        assert!(matches!(
            BackgroundMesh::build(full_grid(2), |_, _, _| CellClass::Exterior),
            Err(Error::EmptyDomain)
        ));
    }

    #[test]
    fn one_active_cell_has_square_of_degree_plus_one_functions() {
        let grid = full_grid(6);
        let only = grid.cell_index([3, 2]);
        let mesh = BackgroundMesh::build(grid, |c, _, _| {
            if c == only { CellClass::Cut } else { CellClass::Exterior }
        })
        .unwrap();
        for k in 1..=3 {
            let basis = mesh.grid().basis(k).unwrap();
            assert_eq!(mesh.active_functions(&basis).len(), (k + 1) * (k + 1));
        }
    }

    #[test]
    fn faces_of_support_interior_function() {
        let mesh = BackgroundMesh::build(full_grid(10), |_, _, _| CellClass::Interior).unwrap();
        let basis = mesh.grid().basis(2).unwrap();
        let g = basis.global_index([5, 5]);
        let faces = mesh.faces_of_support(&basis, g);
        // support spans 3 elements per direction: 4 knot lines x 3 rows, per axis
        assert_eq!(faces.len(), 2 * 4 * 3);
        for &f in &faces {
            let face = &mesh.skeleton_faces()[f];
            let t = 0.5 * (face.extent.0 + face.extent.1);
            let jump = basis.kth_normal_jump(face.knot, t).unwrap();
            assert!(jump.functions.contains(&g));
        }
        // every face with a nonzero jump of g is reported
        let mut count = 0;
        for face in mesh.skeleton_faces() {
            let t = 0.5 * (face.extent.0 + face.extent.1);
            let jump = basis.kth_normal_jump(face.knot, t).unwrap();
            if jump.functions.iter().zip(&jump.values).any(|(&f, &v)| f == g && v.abs() > 1e-12) {
                count += 1;
            }
        }
        assert_eq!(count, faces.len());
    }

    #[test]
    fn faces_of_support_corner_function() {
        let mesh = BackgroundMesh::build(full_grid(5), |_, _, _| CellClass::Interior).unwrap();
        let basis = mesh.grid().basis(2).unwrap();
        let g = basis.global_index([0, 0]);
        let faces = mesh.faces_of_support(&basis, g);
        // function 0 lives on cell (0,0) only: its right and top faces
        assert_eq!(faces.len(), 2);
    }

    #[test]
    fn refine_and_csv() {
        let grid = AmbientGrid::<f64>::from_breakpoints(vec![0.0, 0.1, 0.4, 1.0], vec![0.0, 1.0]).unwrap();
        let fine = grid.refined(2);
        assert_eq!(fine.cells(), [6, 2]);
        assert!((fine.spacing(0, 1) - 0.05).abs() < 1e-15);
        let mesh = BackgroundMesh::build(fine, |_, _, _| CellClass::Interior).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        mesh.write_csv(&mut a, &mut b).unwrap();
        let cells = String::from_utf8(a).unwrap();
        assert_eq!(cells.lines().count(), 13);
        assert!(String::from_utf8(b).unwrap().starts_with("axis,coordinate"));
    }
}
