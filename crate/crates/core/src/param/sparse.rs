//! Fixed-pattern sparse SPD systems: the symbolic Cholesky factorization is
//! computed once and reused for every numeric refactorization.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{MatMut, Side};

use super::ParamError;

/// Lower triangle (including the diagonal) of a symmetric `n × n` pattern in
/// compressed columns.
pub(crate) struct SpdPattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    symbolic: SymbolicLlt<usize>,
}

impl SpdPattern {
    /// `entries` are `(row, col)` pairs; either triangle may be given and
    /// duplicates are merged. The diagonal is always present.
    pub fn new(n: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, ParamError> {
        let mut pairs: Vec<(usize, usize)> =
            entries.into_iter().map(|(r, c)| if r >= c { (c, r) } else { (r, c) }).collect();
        pairs.extend((0..n).map(|i| (i, i)));
        pairs.sort_unstable();
        pairs.dedup();
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(pairs.len());
        for &(c, r) in &pairs {
            col_ptr[c + 1] += 1;
            row_idx.push(r);
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
        let symbolic = SymbolicLlt::try_new(sym, Side::Lower).map_err(|e| ParamError::Solver(format!("{e:?}")))?;
        Ok(SpdPattern { n, col_ptr, row_idx, symbolic })
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Value slot of entry `(row, col)`, taken in the lower triangle.
    pub fn slot(&self, row: usize, col: usize) -> usize {
        let (r, c) = if row >= col { (row, col) } else { (col, row) };
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        let k = self.row_idx[range.clone()].binary_search(&r).expect("entry in pattern");
        range.start + k
    }

    /// Factors the matrix with the given values and solves for `rhs` in
    /// place (`rhs` holds `ncols` columns of length `n`, column-major).
    pub fn solve(&self, values: &[f64], rhs: &mut [f64], ncols: usize) -> Result<(), ParamError> {
        let sym = SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.col_ptr, None, &self.row_idx);
        let mat = SparseColMatRef::new(sym, values);
        let llt = Llt::try_new_with_symbolic(self.symbolic.clone(), mat, Side::Lower)
            .map_err(|e| ParamError::Solver(format!("{e:?}")))?;
        llt.solve_in_place(MatMut::from_column_major_slice_mut(rhs, self.n, ncols));
        if rhs.iter().any(|x| !x.is_finite()) {
            return Err(ParamError::Solver("non-finite solution".into()));
        }
        Ok(())
    }
}
