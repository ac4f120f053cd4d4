//! Dense complex matrices and tensor-leg index bookkeeping.
//!
//! Everything downstream (Choi states, process tensors, witnesses) lives in a
//! tensor product of small legs; the helpers here handle Kronecker products,
//! partial traces, partial transposes, and leg permutations over explicit
//! per-leg dimension lists.

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat(pub nd::Array2<C64>);

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat(nd::Array2::zeros((rows, cols)))
    }

    pub fn identity(n: usize) -> Self {
        CMat(nd::Array2::eye(n))
    }

    /// Build from a function of (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        CMat(nd::Array2::from_shape_fn((rows, cols), |(i, j)| f(i, j)))
    }

    /// Build from nested rows; panics on ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { entries[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.nrows())
        } else {
            Err(Error::NotSquare { rows: self.nrows(), cols: self.ncols() })
        }
    }

    pub fn t(&self) -> CMat {
        CMat(self.0.t().to_owned())
    }

    pub fn conj(&self) -> CMat {
        CMat(self.0.mapv(|z| z.conj()))
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMat {
        CMat(self.0.t().mapv(|z| z.conj()))
    }

    pub fn matmul(&self, rhs: &CMat) -> CMat {
        CMat(self.0.dot(&rhs.0))
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat(self.0.mapv(|z| z * s))
    }

    pub fn scale_re(&self, s: f64) -> CMat {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.0.diag().sum()
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Real part of the Hilbert-Schmidt inner product Tr[A† B].
    pub fn inner_re(&self, rhs: &CMat) -> f64 {
        self.0
            .iter()
            .zip(rhs.0.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    pub fn inner(&self, rhs: &CMat) -> C64 {
        self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// Largest absolute deviation from Hermiticity.
    pub fn herm_deviation(&self) -> f64 {
        let n = self.nrows();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Symmetrise to (M + M†)/2, rejecting deviations above `tol`.
    pub fn hermitize(&self, tol: f64) -> Result<CMat> {
        self.require_square()?;
        let dev = self.herm_deviation();
        if dev > tol {
            return Err(Error::NotHermitian { dev, tol });
        }
        let dag = self.dagger();
        Ok(CMat((&self.0 + &dag.0).mapv(|z| z * 0.5)))
    }

    /// Kronecker product, `self` on the most significant index factor.
    pub fn kron(&self, rhs: &CMat) -> CMat {
        let (ar, ac) = (self.nrows(), self.ncols());
        let (br, bc) = (rhs.nrows(), rhs.ncols());
        let mut out = nd::Array2::zeros((ar * br, ac * bc));
        for i in 0..ar {
            for j in 0..ac {
                let a = self.0[(i, j)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for p in 0..br {
                    for q in 0..bc {
                        out[(i * br + p, j * bc + q)] = a * rhs.0[(p, q)];
                    }
                }
            }
        }
        CMat(out)
    }
}

impl std::ops::Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        CMat(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        CMat(&self.0 - &rhs.0)
    }
}

/// Kronecker product of a list of factors, first entry most significant.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMat>) -> CMat {
    let mut it = factors.into_iter();
    let first = it.next().expect("kron_all needs at least one factor").clone();
    it.fold(first, |acc, m| acc.kron(m))
}

fn check_dims(m: &CMat, dims: &[usize]) -> Result<()> {
    let n: usize = dims.iter().product();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimMismatch(format!(
            "matrix is {}x{} but leg dims {:?} give {}",
            m.nrows(),
            m.ncols(),
            dims,
            n
        )));
    }
    Ok(())
}

/// Strides for a multi-index with `dims[0]` most significant.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for l in (0..dims.len().saturating_sub(1)).rev() {
        s[l] = s[l + 1] * dims[l + 1];
    }
    s
}

fn unpack(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for l in (0..dims.len()).rev() {
        out[l] = idx % dims[l];
        idx /= dims[l];
    }
}

/// Partial trace over the legs *not* listed in `keep`; `keep` must be strictly
/// increasing positions into `dims`. Kept legs retain their relative order.
pub fn partial_trace(m: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    check_dims(m, dims)?;
    for w in keep.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::DimMismatch("keep positions must be strictly increasing".into()));
        }
    }
    if let Some(&last) = keep.last() {
        if last >= dims.len() {
            return Err(Error::BadLeg { leg: last, num_legs: dims.len() });
        }
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|l| !keep.contains(l)).collect();
    let st = strides(dims);
    let keep_dim: usize = keep.iter().map(|&l| dims[l]).product();
    let trace_dim: usize = traced.iter().map(|&l| dims[l]).product();
    let keep_dims: Vec<usize> = keep.iter().map(|&l| dims[l]).collect();
    let trace_dims: Vec<usize> = traced.iter().map(|&l| dims[l]).collect();

    let mut out = CMat::zeros(keep_dim, keep_dim);
    let mut kr = vec![0usize; keep.len()];
    let mut kc = vec![0usize; keep.len()];
    let mut tv = vec![0usize; traced.len()];
    for r in 0..keep_dim {
        unpack(r, &keep_dims, &mut kr);
        for c in 0..keep_dim {
            unpack(c, &keep_dims, &mut kc);
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..trace_dim {
                unpack(t, &trace_dims, &mut tv);
                let mut row = 0usize;
                let mut col = 0usize;
                for (x, &l) in keep.iter().enumerate() {
                    row += kr[x] * st[l];
                    col += kc[x] * st[l];
                }
                for (x, &l) in traced.iter().enumerate() {
                    row += tv[x] * st[l];
                    col += tv[x] * st[l];
                }
                acc += m.0[(row, col)];
            }
            out.0[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Transpose the listed legs in place (partial transpose).
pub fn partial_transpose(m: &CMat, dims: &[usize], flip: &[usize]) -> Result<CMat> {
    check_dims(m, dims)?;
    for &l in flip {
        if l >= dims.len() {
            return Err(Error::BadLeg { leg: l, num_legs: dims.len() });
        }
    }
    let n = m.nrows();
    let st = strides(dims);
    let mut out = CMat::zeros(n, n);
    let mut ri = vec![0usize; dims.len()];
    let mut ci = vec![0usize; dims.len()];
    for r in 0..n {
        unpack(r, dims, &mut ri);
        for c in 0..n {
            unpack(c, dims, &mut ci);
            let mut rr = 0usize;
            let mut cc = 0usize;
            for l in 0..dims.len() {
                if flip.contains(&l) {
                    rr += ci[l] * st[l];
                    cc += ri[l] * st[l];
                } else {
                    rr += ri[l] * st[l];
                    cc += ci[l] * st[l];
                }
            }
            out.0[(rr, cc)] = m.0[(r, c)];
        }
    }
    Ok(out)
}

/// Reorder legs so that output leg `p` is input leg `perm[p]`.
pub fn permute_legs(m: &CMat, dims: &[usize], perm: &[usize]) -> Result<CMat> {
    check_dims(m, dims)?;
    if perm.len() != dims.len() {
        return Err(Error::DimMismatch("permutation length != number of legs".into()));
    }
    let mut seen = vec![false; dims.len()];
    for &p in perm {
        if p >= dims.len() || seen[p] {
            return Err(Error::DimMismatch(format!("invalid permutation {perm:?}")));
        }
        seen[p] = true;
    }
    let n = m.nrows();
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let st_out = strides(&out_dims);
    let mut out = CMat::zeros(n, n);
    let mut ri = vec![0usize; dims.len()];
    let mut ci = vec![0usize; dims.len()];
    for r in 0..n {
        unpack(r, dims, &mut ri);
        for c in 0..n {
            unpack(c, dims, &mut ci);
            let mut rr = 0usize;
            let mut cc = 0usize;
            for (pos, &p) in perm.iter().enumerate() {
                rr += ri[p] * st_out[pos];
                cc += ci[p] * st_out[pos];
            }
            out.0[(rr, cc)] = m.0[(r, c)];
        }
    }
    Ok(out)
}

/// Lift an operator given on the legs `at` (in that order) to the full space,
/// identity elsewhere. `at` positions refer to `dims`.
pub fn lift(op: &CMat, dims: &[usize], at: &[usize]) -> Result<CMat> {
    let op_dim: usize = at.iter().map(|&l| dims[l]).product();
    if op.nrows() != op_dim || op.ncols() != op_dim {
        return Err(Error::DimMismatch(format!(
            "operator is {}x{} but target legs give {}",
            op.nrows(),
            op.ncols(),
            op_dim
        )));
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|l| !at.contains(l)).collect();
    let rest_dim: usize = rest.iter().map(|&l| dims[l]).product();
    let big = op.kron(&CMat::identity(rest_dim));
    // `big` has leg order [at..., rest...]; permute back to natural order.
    let mut big_dims: Vec<usize> = at.iter().map(|&l| dims[l]).collect();
    big_dims.extend(rest.iter().map(|&l| dims[l]));
    let src_order: Vec<usize> = at.iter().chain(rest.iter()).copied().collect();
    // perm[p] = position in `big` of natural leg p.
    let mut perm = vec![0usize; dims.len()];
    for (big_pos, &nat) in src_order.iter().enumerate() {
        perm[nat] = big_pos;
    }
    permute_legs(&big, &big_dims, &perm)
}

/// Two-sided conjugation L·m·L† with L = lift(op, dims, at), contracting only
/// the acting legs so the cost stays at N²·dim(op) rather than N³.
pub fn conjugate_on_legs(m: &CMat, op: &CMat, dims: &[usize], at: &[usize]) -> Result<CMat> {
    check_dims(m, dims)?;
    let at_dims: Vec<usize> = at.iter().map(|&l| dims[l]).collect();
    let op_dim: usize = at_dims.iter().product();
    if op.nrows() != op_dim || op.ncols() != op_dim {
        return Err(Error::DimMismatch(format!(
            "operator is {}x{} but target legs give {}",
            op.nrows(),
            op.ncols(),
            op_dim
        )));
    }
    let st = strides(dims);
    // Offset of each acting-leg code within a full row index, and the
    // complementary split of a full index into (code, remainder).
    let mut offsets = vec![0usize; op_dim];
    let at_st = strides(&at_dims);
    for (a, off) in offsets.iter_mut().enumerate() {
        *off = at
            .iter()
            .enumerate()
            .map(|(i, &l)| (a / at_st[i]) % at_dims[i] * st[l])
            .sum();
    }
    let split = |idx: usize| -> (usize, usize) {
        let mut code = 0usize;
        for (i, &l) in at.iter().enumerate() {
            code += (idx / st[l]) % dims[l] * at_st[i];
        }
        (code, idx - offsets[code])
    };
    let n = m.nrows();
    let mut left = nd::Array2::<C64>::zeros((n, n));
    for r in 0..n {
        let (a, base) = split(r);
        let mut row = left.row_mut(r);
        for (ap, &off) in offsets.iter().enumerate() {
            let w = op.0[(a, ap)];
            if w.norm_sqr() > 0.0 {
                row.scaled_add(w, &m.0.row(base + off));
            }
        }
    }
    let mut out = nd::Array2::<C64>::zeros((n, n));
    for c in 0..n {
        let (a, base) = split(c);
        let mut col = out.column_mut(c);
        for (ap, &off) in offsets.iter().enumerate() {
            let w = op.0[(a, ap)].conj();
            if w.norm_sqr() > 0.0 {
                col.scaled_add(w, &left.column(base + off));
            }
        }
    }
    Ok(CMat(out))
}
