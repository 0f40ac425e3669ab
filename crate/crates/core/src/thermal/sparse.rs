//! Compressed sparse row storage for the 27-point nodal coupling pattern of a
//! structured hexahedral mesh.

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix whose pattern couples every node with the nodes of the
    /// cells it touches. Columns within a row are sorted.
    pub fn structured(node_dims: [usize; 3]) -> Self {
        let [nx, ny, nz] = node_dims;
        let n = nx * ny * nz;
        assert!(n <= u32::MAX as usize, "mesh too large for 32-bit column indices");
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(n * 27);
        row_ptr.push(0);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    for kk in k.saturating_sub(1)..(k + 2).min(nz) {
                        for jj in j.saturating_sub(1)..(j + 2).min(ny) {
                            for ii in i.saturating_sub(1)..(i + 2).min(nx) {
                                cols.push((ii + nx * (jj + ny * kk)) as u32);
                            }
                        }
                    }
                    row_ptr.push(cols.len());
                }
            }
        }
        let vals = vec![0.0; cols.len()];
        Self { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    #[inline]
    fn position(&self, row: usize, col: usize) -> Option<usize> {
        let start = self.row_ptr[row];
        let slice = &self.cols[start..self.row_ptr[row + 1]];
        slice.binary_search(&(col as u32)).ok().map(|p| start + p)
    }

    /// Add `v` to entry `(row, col)`, which must be in the pattern.
    #[inline]
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let p = self
            .position(row, col)
            .unwrap_or_else(|| panic!("entry ({row}, {col}) outside sparsity pattern"));
        self.vals[p] += v;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.position(row, col).map_or(0.0, |p| self.vals[p])
    }

    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[row]..self.row_ptr[row + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (row, out) in y.iter_mut().enumerate() {
            let (s, e) = (self.row_ptr[row], self.row_ptr[row + 1]);
            let mut acc = 0.0;
            for (c, v) in self.cols[s..e].iter().zip(&self.vals[s..e]) {
                acc += v * x[*c as usize];
            }
            *out = acc;
        }
    }

    /// Row-major dense copy. Only sensible for tiny meshes.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        d
    }
}
