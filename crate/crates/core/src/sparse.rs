//! Compressed sparse rows plus the linear solvers used by the saddle systems.
//!
//! Direct solves go through faer's sparse LU; the iterative option is
//! right-preconditioned restarted GMRES with a block upper-triangular
//! preconditioner for `[K, -B^T; -B, 0]`.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Zero matrix with the given (unsorted, possibly repeated) column lists per row.
    pub fn with_pattern(ncols: usize, mut rows: Vec<Vec<usize>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            indices.extend_from_slice(r);
            indptr.push(indices.len());
        }
        let nnz = indices.len();
        Csr {
            nrows: rows.len(),
            ncols,
            indptr,
            indices,
            data: vec![0.0; nnz],
        }
    }

    /// Sums duplicate entries; the result does not depend on triplet order
    /// beyond floating-point summation of duplicates in sorted order.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut data: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Csr {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn zeros_like(&self) -> Self {
        Csr {
            data: vec![0.0; self.data.len()],
            ..self.clone()
        }
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        let k = self.indices[s..e]
            .binary_search(&c)
            .unwrap_or_else(|_| panic!("entry ({r}, {c}) outside the sparsity pattern"));
        self.data[s + k] += v;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        match self.indices[s..e].binary_search(&c) {
            Ok(k) => self.data[s + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for r in 0..self.nrows {
            let mut s = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            y[r] = s;
        }
        y
    }

    /// `y = A^T x`.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        for r in 0..self.nrows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += self.data[k] * xr;
            }
        }
        y
    }

    pub fn transpose(&self) -> Csr {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                t.push((self.indices[k], r, self.data[k]));
            }
        }
        Csr::from_triplets(self.ncols, self.nrows, t)
    }

    /// `self + s * other` for matrices sharing one pattern.
    pub fn plus_scaled(&self, s: f64, other: &Csr) -> Csr {
        assert_eq!(self.indices, other.indices, "patterns differ");
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        out
    }

    /// Max-abs entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Restriction to the given row and column index maps (`usize::MAX` drops).
    pub fn restrict(&self, row_map: &[usize], n_rows: usize, col_map: &[usize], n_cols: usize) -> Csr {
        let mut t = Vec::new();
        for r in 0..self.nrows {
            let rr = row_map[r];
            if rr == usize::MAX {
                continue;
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                let cc = col_map[self.indices[k]];
                if cc != usize::MAX {
                    t.push((rr, cc, self.data[k]));
                }
            }
        }
        Csr::from_triplets(n_rows, n_cols, t)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.data[k])))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Sparse LU factorization of a square matrix given by triplets.
pub struct LuSolver {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl LuSolver {
    pub fn from_triplets(n: usize, t: &[(usize, usize, f64)]) -> Result<Self> {
        let trip: Vec<Triplet<usize, usize, f64>> = t.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::Solver(format!("sparse matrix assembly: {e:?}")))?;
        let lu = m.sp_lu().map_err(|e| Error::Solver(format!("sparse LU: {e:?}")))?;
        Ok(LuSolver { n, lu })
    }

    pub fn from_csr(a: &Csr) -> Result<Self> {
        let t: Vec<_> = a.triplets().collect();
        LuSolver::from_triplets(a.nrows, &t)
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut b = Mat::<f64>::from_fn(self.n, 1, |i, _| rhs[i]);
        self.lu.solve_in_place(b.as_mut());
        let x: Vec<f64> = (0..self.n).map(|i| b[(i, 0)]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("singular saddle system (non-finite solution)".into()));
        }
        Ok(x)
    }
}

/// `[K, -B^T; -B, (-C)]` as triplets; `k` is `n x n`, `b` is `m x n`, `c`
/// optional `m x m` stabilizing block.
pub fn saddle_triplets(k: &Csr, b: &Csr, c: Option<&Csr>) -> Vec<(usize, usize, f64)> {
    let n = k.nrows;
    let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(k.nnz() + 2 * b.nnz());
    t.extend(k.triplets());
    for (r, col, v) in b.triplets() {
        t.push((n + r, col, -v));
        t.push((col, n + r, -v));
    }
    if let Some(c) = c {
        for (r, col, v) in c.triplets() {
            t.push((n + r, n + col, -v));
        }
    }
    t
}

pub fn saddle_matvec(k: &Csr, b: &Csr, x: &[f64]) -> Vec<f64> {
    let n = k.nrows;
    let (u, p) = x.split_at(n);
    let mut top = k.matvec(u);
    let bt = b.matvec_t(p);
    for i in 0..n {
        top[i] -= bt[i];
    }
    let bot = b.matvec(u);
    top.extend(bot.iter().map(|v| -v));
    top
}

pub const AUTO_DIRECT_LIMIT: usize = 40_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolverKind {
    /// Direct below [`AUTO_DIRECT_LIMIT`] unknowns, Krylov above.
    #[default]
    Auto,
    Direct,
    Krylov,
}

/// Block-diagonal LU: one factorization per group of unknowns, couplings
/// between groups dropped.
pub struct BlockLu {
    groups: Vec<Vec<usize>>,
    lus: Vec<LuSolver>,
}

impl BlockLu {
    /// `block[i]` is the group of unknown `i`; an empty slice means one group.
    pub fn new(a: &Csr, block: &[usize]) -> Result<Self> {
        if block.is_empty() {
            return Ok(BlockLu {
                groups: vec![(0..a.nrows).collect()],
                lus: vec![LuSolver::from_csr(a)?],
            });
        }
        let ng = block.iter().max().map_or(0, |m| m + 1);
        let mut groups = vec![Vec::new(); ng];
        let mut local = vec![0; a.nrows];
        for (i, &g) in block.iter().enumerate() {
            local[i] = groups[g].len();
            groups[g].push(i);
        }
        let lus = (0..ng)
            .map(|g| {
                let map: Vec<usize> = (0..a.nrows).map(|i| if block[i] == g { local[i] } else { usize::MAX }).collect();
                LuSolver::from_csr(&a.restrict(&map, groups[g].len(), &map, groups[g].len()))
            })
            .collect::<Result<_>>()?;
        Ok(BlockLu { groups, lus })
    }

    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; r.len()];
        for (g, lu) in self.groups.iter().zip(&self.lus) {
            let rg: Vec<f64> = g.iter().map(|&i| r[i]).collect();
            for (&i, v) in g.iter().zip(lu.solve(&rg)?) {
                x[i] = v;
            }
        }
        Ok(x)
    }
}

/// Solves `[K, -B^T; -B, 0] x = rhs` to relative residual `tol`.
/// `velocity_blocks` groups velocity unknowns for the Krylov preconditioner.
#[allow(clippy::too_many_arguments)]
pub fn solve_saddle(
    k: &Csr,
    b: &Csr,
    pressure_mass_diag: &[f64],
    velocity_blocks: &[usize],
    rhs: &[f64],
    kind: LinearSolverKind,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let bn = norm2(rhs);
    if bn == 0.0 {
        return Ok(vec![0.0; rhs.len()]);
    }
    let kind = match kind {
        LinearSolverKind::Auto if rhs.len() <= AUTO_DIRECT_LIMIT => LinearSolverKind::Direct,
        LinearSolverKind::Auto => LinearSolverKind::Krylov,
        k => k,
    };
    match kind {
        LinearSolverKind::Direct => {
            let lu = LuSolver::from_triplets(k.nrows + b.nrows, &saddle_triplets(k, b, None))?;
            let mut x = lu.solve(rhs)?;
            // one step of iterative refinement
            for _ in 0..2 {
                let ax = saddle_matvec(k, b, &x);
                let r: Vec<f64> = rhs.iter().zip(&ax).map(|(a, b)| a - b).collect();
                if norm2(&r) <= tol * bn {
                    return Ok(x);
                }
                let dx = lu.solve(&r)?;
                for (xi, d) in x.iter_mut().zip(dx) {
                    *xi += d;
                }
            }
            let ax = saddle_matvec(k, b, &x);
            let res = norm2(&rhs.iter().zip(&ax).map(|(a, b)| a - b).collect::<Vec<_>>()) / bn;
            if res > tol {
                return Err(Error::Solver(format!(
                    "direct saddle solve residual {res:.3e} above tolerance {tol:.1e}"
                )));
            }
            Ok(x)
        }
        _ => {
            let klu = BlockLu::new(k, velocity_blocks)?;
            let n = k.nrows;
            let prec = |r: &[f64]| -> Result<Vec<f64>> {
                // upper block-triangular: S ~ -M_p (lumped)
                let yp: Vec<f64> = r[n..]
                    .iter()
                    .zip(pressure_mass_diag)
                    .map(|(v, m)| -v / m)
                    .collect();
                let bt = b.matvec_t(&yp);
                let ru: Vec<f64> = (0..n).map(|i| r[i] + bt[i]).collect();
                let mut y = klu.solve(&ru)?;
                y.extend(yp);
                Ok(y)
            };
            gmres(|x| saddle_matvec(k, b, x), prec, rhs, tol, 60, max_iter)
        }
    }
}

/// Restarted GMRES with right preconditioning, zero initial guess.
pub fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    prec: impl Fn(&[f64]) -> Result<Vec<f64>>,
    rhs: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = rhs.len();
    let bn = norm2(rhs);
    let mut x = vec![0.0; n];
    let mut total = 0;
    loop {
        let ax = apply(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(a, b)| a - b).collect();
        let beta = norm2(&r);
        if beta <= tol * bn {
            return Ok(x);
        }
        if total >= max_iter {
            return Err(Error::Solver(format!(
                "GMRES stopped after {total} iterations at relative residual {:.3e}",
                beta / bn
            )));
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|a| a / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut m = 0;
        while m < restart && total < max_iter {
            let zm = prec(&v[m])?;
            let mut w = apply(&zm);
            z.push(zm);
            for i in 0..=m {
                h[i][m] = dot(&w, &v[i]);
                for (wj, vj) in w.iter_mut().zip(&v[i]) {
                    *wj -= h[i][m] * vj;
                }
            }
            h[m + 1][m] = norm2(&w);
            for i in 0..m {
                let t = cs[i] * h[i][m] + sn[i] * h[i + 1][m];
                h[i + 1][m] = -sn[i] * h[i][m] + cs[i] * h[i + 1][m];
                h[i][m] = t;
            }
            let d = (h[m][m].powi(2) + h[m + 1][m].powi(2)).sqrt();
            cs[m] = h[m][m] / d;
            sn[m] = h[m + 1][m] / d;
            let hm1 = h[m + 1][m];
            h[m][m] = d;
            h[m + 1][m] = 0.0;
            g[m + 1] = -sn[m] * g[m];
            g[m] *= cs[m];
            total += 1;
            let happy = hm1 <= 1e-300;
            if !happy {
                v.push(w.iter().map(|a| a / hm1).collect());
            }
            m += 1;
            if g[m].abs() <= tol * bn || happy {
                break;
            }
        }
        let mut y = vec![0.0; m];
        for i in (0..m).rev() {
            let mut s = g[i];
            for j in i + 1..m {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for j in 0..m {
            for (xi, zj) in x.iter_mut().zip(&z[j]) {
                *xi += y[j] * zj;
            }
        }
    }
}
