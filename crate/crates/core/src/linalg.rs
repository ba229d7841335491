//! Dense and sparse exact linear algebra over a finite field.

use crate::field::{Elt, FiniteField};

/// Dense row-major matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Elt>,
}

impl std::fmt::Debug for Mat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Mat {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                write!(f, "{:>4}", self[(r, c)].0)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = Elt;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Elt {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Elt {
        &mut self.data[r * self.cols + c]
    }
}

impl Mat {
    pub fn zero(rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, data: vec![Elt(0); rows * cols] }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zero(n, n);
        for i in 0..n {
            m[(i, i)] = Elt(1);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Elt>>, cols: usize) -> Mat {
        let r = rows.len();
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            assert_eq!(row.len(), cols);
            data.extend(row);
        }
        Mat { rows: r, cols, data }
    }

    pub fn row(&self, r: usize) -> &[Elt] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<Elt> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn mul(&self, f: &FiniteField, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Mat::zero(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a.0 == 0 {
                    continue;
                }
                for c in 0..other.cols {
                    let b = other[(k, c)];
                    if b.0 != 0 {
                        out[(r, c)] = f.add(out[(r, c)], f.mul(a, b));
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, f: &FiniteField, v: &[Elt]) -> Vec<Elt> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        let mut out = vec![Elt(0); self.rows];
        for r in 0..self.rows {
            let mut acc = Elt(0);
            for c in 0..self.cols {
                let a = self[(r, c)];
                if a.0 != 0 && v[c].0 != 0 {
                    acc = f.add(acc, f.mul(a, v[c]));
                }
            }
            out[r] = acc;
        }
        out
    }

    pub fn add(&self, f: &FiniteField, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.add(a, b)).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, f: &FiniteField, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.sub(a, b)).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, f: &FiniteField, s: Elt) -> Mat {
        let data = self.data.iter().map(|&a| f.mul(a, s)).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zero(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)];
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.0 == 0)
    }

    /// In-place reduced row echelon form; returns pivot column indices.
    pub fn rref(&mut self, f: &FiniteField) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| self[(i, c)].0 != 0) else {
                continue;
            };
            for k in 0..self.cols {
                self.data.swap(r * self.cols + k, pr * self.cols + k);
            }
            let inv = f.inv(self[(r, c)]);
            for k in c..self.cols {
                self[(r, k)] = f.mul(self[(r, k)], inv);
            }
            for i in 0..self.rows {
                if i != r && self[(i, c)].0 != 0 {
                    let factor = self[(i, c)];
                    for k in c..self.cols {
                        let sub = f.mul(factor, self[(r, k)]);
                        self[(i, k)] = f.sub(self[(i, k)], sub);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self, f: &FiniteField) -> usize {
        let mut m = self.clone();
        m.rref(f).len()
    }

    /// Basis of the right kernel, one vector per row of the result.
    pub fn kernel(&self, f: &FiniteField) -> Mat {
        let mut m = self.clone();
        let pivots = m.rref(f);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = Mat::zero(free.len(), self.cols);
        for (i, &fc) in free.iter().enumerate() {
            out[(i, fc)] = Elt(1);
            for (pr, &pc) in pivots.iter().enumerate() {
                out[(i, pc)] = f.neg(m[(pr, fc)]);
            }
        }
        out
    }

    /// Basis of the column space, as columns of the result.
    pub fn image(&self, f: &FiniteField) -> Mat {
        let mut m = self.clone();
        let pivots = m.rref(f);
        let mut out = Mat::zero(self.rows, pivots.len());
        for (j, &c) in pivots.iter().enumerate() {
            for r in 0..self.rows {
                out[(r, j)] = self[(r, c)];
            }
        }
        out
    }

    /// Solve self * x = b; None if inconsistent. Returns one solution.
    pub fn solve(&self, f: &FiniteField, b: &[Elt]) -> Option<Vec<Elt>> {
        assert_eq!(self.rows, b.len(), "dimension mismatch");
        let mut aug = Mat::zero(self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug[(r, c)] = self[(r, c)];
            }
            aug[(r, self.cols)] = b[r];
        }
        let pivots = aug.rref(f);
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![Elt(0); self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = aug[(r, self.cols)];
        }
        Some(x)
    }

    pub fn inverse(&self, f: &FiniteField) -> Option<Mat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Mat::zero(n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug[(r, c)] = self[(r, c)];
            }
            aug[(r, n + r)] = Elt(1);
        }
        let pivots = aug.rref(f);
        if pivots.len() < n || pivots[n - 1] >= n {
            return None;
        }
        let mut out = Mat::zero(n, n);
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] = aug[(r, n + c)];
            }
        }
        Some(out)
    }
}

/// A subspace of F_q^n given by spanning vectors, with reduction and a
/// section for the quotient. Rows of `echelon` are an rref basis.
pub struct Subspace {
    pub ambient: usize,
    pub echelon: Mat,
    pub pivots: Vec<usize>,
}

impl Subspace {
    pub fn from_spanning(f: &FiniteField, vectors: Vec<Vec<Elt>>, ambient: usize) -> Subspace {
        let mut m = Mat::from_rows(vectors, ambient);
        let pivots = m.rref(f);
        let rank = pivots.len();
        m.rows = rank;
        m.data.truncate(rank * ambient);
        Subspace { ambient, echelon: m, pivots }
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    /// Reduce v modulo the subspace (subtract echelon rows at pivots).
    pub fn reduce(&self, f: &FiniteField, v: &[Elt]) -> Vec<Elt> {
        let mut v = v.to_vec();
        for (r, &c) in self.pivots.iter().enumerate() {
            if v[c].0 != 0 {
                let factor = v[c];
                for k in 0..self.ambient {
                    let sub = f.mul(factor, self.echelon[(r, k)]);
                    v[k] = f.sub(v[k], sub);
                }
            }
        }
        v
    }

    pub fn contains(&self, f: &FiniteField, v: &[Elt]) -> bool {
        self.reduce(f, v).iter().all(|e| e.0 == 0)
    }
}

/// Quotient of F_q^n by a subspace, with coordinates given by the non-pivot
/// (free) positions of the subspace's echelon form.
pub struct Quotient {
    pub space: Subspace,
    pub free: Vec<usize>,
}

impl Quotient {
    pub fn new(f: &FiniteField, relations: Vec<Vec<Elt>>, ambient: usize) -> Quotient {
        let space = Subspace::from_spanning(f, relations, ambient);
        let free = (0..ambient).filter(|c| !space.pivots.contains(c)).collect();
        Quotient { space, free }
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// Coordinates of the class of v.
    pub fn project(&self, f: &FiniteField, v: &[Elt]) -> Vec<Elt> {
        let red = self.space.reduce(f, v);
        self.free.iter().map(|&c| red[c]).collect()
    }

    /// Canonical representative of the class with the given coordinates.
    pub fn section(&self, coords: &[Elt]) -> Vec<Elt> {
        let mut v = vec![Elt(0); self.space.ambient];
        for (i, &c) in self.free.iter().enumerate() {
            v[c] = coords[i];
        }
        v
    }

    /// Matrix of a linear map on the ambient space descended to the quotient.
    /// Panics if the map does not preserve the relation subspace.
    pub fn descend(&self, f: &FiniteField, ambient_map: &Mat) -> Mat {
        // check the relations are preserved
        for r in 0..self.space.echelon.rows {
            let img = ambient_map.apply(f, self.space.echelon.row(r));
            assert!(
                self.space.contains(f, &img),
                "map does not descend to the quotient"
            );
        }
        let n = self.dim();
        let mut out = Mat::zero(n, n);
        for (j, _) in self.free.iter().enumerate() {
            let mut coords = vec![Elt(0); n];
            coords[j] = Elt(1);
            let v = self.section(&coords);
            let img = self.project(f, &ambient_map.apply(f, &v));
            for i in 0..n {
                out[(i, j)] = img[i];
            }
        }
        out
    }
}

/// Sparse vector: sorted (index, value) pairs with nonzero values.
pub type SparseVec = Vec<(usize, Elt)>;

pub fn sparse_add_scaled(f: &FiniteField, a: &SparseVec, b: &SparseVec, s: Elt) -> SparseVec {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            let v = f.mul(b[j].1, s);
            if v.0 != 0 {
                out.push((b[j].0, v));
            }
            j += 1;
        } else {
            let v = f.add(a[i].1, f.mul(b[j].1, s));
            if v.0 != 0 {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Incremental echelon basis of sparse vectors, used for span closures and
/// membership tests in large ambient spaces.
#[derive(Default)]
pub struct SparseEchelon {
    /// pivot index -> vector with leading (smallest-index) entry 1 there
    rows: std::collections::BTreeMap<usize, SparseVec>,
}

impl SparseEchelon {
    pub fn new() -> SparseEchelon {
        SparseEchelon::default()
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn reduce(&self, f: &FiniteField, v: &SparseVec) -> SparseVec {
        let mut v = v.clone();
        loop {
            let Some(&(lead, val)) = v.first() else { return v };
            match self.rows.get(&lead) {
                Some(row) => v = sparse_add_scaled(f, &v, row, f.neg(val)),
                None => return v,
            }
        }
    }

    /// Insert v; returns true if it enlarged the span.
    pub fn insert(&mut self, f: &FiniteField, v: &SparseVec) -> bool {
        let v = self.reduce(f, v);
        match v.first() {
            None => false,
            Some(&(lead, val)) => {
                let inv = f.inv(val);
                let normalized: SparseVec =
                    v.iter().map(|&(i, x)| (i, f.mul(x, inv))).collect();
                self.rows.insert(lead, normalized);
                true
            }
        }
    }

    pub fn contains(&self, f: &FiniteField, v: &SparseVec) -> bool {
        self.reduce(f, v).is_empty()
    }
}

/// Dimension of the kernel of a linear map given column-wise as sparse
/// vectors (column j = image of basis vector j).
pub fn sparse_kernel_dim(f: &FiniteField, cols: Vec<SparseVec>) -> usize {
    let mut ech = SparseEchelon::new();
    let mut rank = 0;
    let n = cols.len();
    for c in cols {
        if ech.insert(f, &c) {
            rank += 1;
        }
    }
    n - rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_kernel_trivial() {
        let f = FiniteField::new(5, 1).unwrap();
        let m = Mat::identity(4);
        assert_eq!(m.kernel(&f).rows, 0);
        let z = Mat::zero(4, 4);
        assert_eq!(z.kernel(&f).rows, 4);
    }

    #[test]
    fn rank_nullity_random_f9() {
        let f = FiniteField::new(3, 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let mut m = Mat::zero(20, 20);
            for e in m.data.iter_mut() {
                *e = Elt(rng.gen_range(0..9));
            }
            let rank = m.rank(&f);
            let nullity = m.kernel(&f).rows;
            assert_eq!(rank + nullity, 20);
            // kernel vectors are killed
            let ker = m.kernel(&f);
            for r in 0..ker.rows {
                assert!(m.apply(&f, ker.row(r)).iter().all(|e| e.0 == 0));
            }
        }
    }

    #[test]
    fn solve_and_inverse() {
        let f = FiniteField::new(7, 1).unwrap();
        let m = Mat::from_rows(
            vec![
                vec![f.from_int(2), f.from_int(1)],
                vec![f.from_int(3), f.from_int(4)],
            ],
            2,
        );
        let inv = m.inverse(&f).unwrap();
        assert_eq!(m.mul(&f, &inv), Mat::identity(2));
        let b = vec![f.from_int(4), f.from_int(6)];
        let x = m.solve(&f, &b).unwrap();
        assert_eq!(m.apply(&f, &x), b);
    }

    #[test]
    fn quotient_project_section() {
        let f = FiniteField::new(3, 1).unwrap();
        // quotient of F_3^3 by span{(1,1,0)}
        let q = Quotient::new(&f, vec![vec![Elt(1), Elt(1), Elt(0)]], 3);
        assert_eq!(q.dim(), 2);
        let v = vec![Elt(2), Elt(1), Elt(1)];
        let coords = q.project(&f, &v);
        let w = q.section(&coords);
        // v - w must lie in the subspace
        let diff: Vec<Elt> = v.iter().zip(&w).map(|(&a, &b)| f.sub(a, b)).collect();
        assert!(q.space.contains(&f, &diff));
    }

    #[test]
    fn sparse_echelon_membership() {
        let f = FiniteField::new(5, 1).unwrap();
        let mut ech = SparseEchelon::new();
        assert!(ech.insert(&f, &vec![(0, Elt(2)), (3, Elt(1))]));
        assert!(ech.insert(&f, &vec![(1, Elt(1))]));
        assert!(!ech.insert(&f, &vec![(0, Elt(4)), (1, Elt(3)), (3, Elt(2))]));
        assert!(ech.contains(&f, &vec![(0, Elt(1)), (3, Elt(3))]));
        assert!(!ech.contains(&f, &vec![(2, Elt(1))]));
    }
}
