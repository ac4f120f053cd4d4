//! LAPACK-backed decompositions and the matrix functions built on them.
//!
//! The FFI layer talks to the system reference LAPACK directly (zheev,
//! zgesvd); buffers are transposed into column-major scratch space around
//! each call so the rest of the crate can stay row-major.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::mat::CMat;

/// Column-major copy of a row-major matrix buffer.
fn to_col_major(m: &CMat) -> Vec<C64> {
    let (r, c) = (m.nrows(), m.ncols());
    let mut buf = vec![C64::new(0.0, 0.0); r * c];
    for i in 0..r {
        for j in 0..c {
            buf[j * r + i] = m.0[(i, j)];
        }
    }
    buf
}

fn from_col_major(buf: &[C64], r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |i, j| buf[j * r + i])
}

fn zheev(m: &CMat, with_vecs: bool) -> Result<(Vec<f64>, Option<CMat>)> {
    let n = m.require_square()?;
    if n == 0 {
        return Ok((Vec::new(), with_vecs.then(|| CMat::zeros(0, 0))));
    }
    let mut a = to_col_major(m);
    let mut w = vec![0.0f64; n];
    let mut rwork = vec![0.0f64; 3 * n.max(1)];
    let jobz = if with_vecs { b'V' } else { b'N' } as i8;
    let uplo = b'L' as i8;
    let ni = n as i32;
    let mut info: i32 = 0;
    // workspace query
    let mut wkopt = C64::new(0.0, 0.0);
    let query: i32 = -1;
    unsafe {
        lapack_sys::zheev_(
            &jobz,
            &uplo,
            &ni,
            a.as_mut_ptr().cast(),
            &ni,
            w.as_mut_ptr(),
            (&mut wkopt as *mut C64).cast(),
            &query,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Eig(format!("zheev workspace query failed (info={info})")));
    }
    let lwork = (wkopt.re as i32).max(1);
    let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
    unsafe {
        lapack_sys::zheev_(
            &jobz,
            &uplo,
            &ni,
            a.as_mut_ptr().cast(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr().cast(),
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Eig(format!("zheev failed to converge (info={info})")));
    }
    let vecs = with_vecs.then(|| from_col_major(&a, n, n));
    Ok((w, vecs))
}

/// `jobu`/`jobvt` follow zgesvd conventions ('A', 'S', 'N').
fn zgesvd(m: &CMat, jobu: u8, jobvt: u8) -> Result<(Option<CMat>, Vec<f64>, Option<CMat>)> {
    let (r, c) = (m.nrows(), m.ncols());
    let k = r.min(c);
    if k == 0 {
        return Err(Error::Svd("empty matrix".into()));
    }
    let mut a = to_col_major(m);
    let mut s = vec![0.0f64; k];
    let ucols = match jobu {
        b'A' => r,
        b'S' => k,
        _ => 0,
    };
    let vtrows = match jobvt {
        b'A' => c,
        b'S' => k,
        _ => 0,
    };
    let mut u = vec![C64::new(0.0, 0.0); (r * ucols).max(1)];
    let mut vt = vec![C64::new(0.0, 0.0); (vtrows * c).max(1)];
    let mut rwork = vec![0.0f64; 5 * k.max(1)];
    let (ri, ci) = (r as i32, c as i32);
    let ldu = r.max(1) as i32;
    let ldvt = vtrows.max(1) as i32;
    let ju = jobu as i8;
    let jvt = jobvt as i8;
    let mut info: i32 = 0;
    let mut wkopt = C64::new(0.0, 0.0);
    let query: i32 = -1;
    unsafe {
        lapack_sys::zgesvd_(
            &ju,
            &jvt,
            &ri,
            &ci,
            a.as_mut_ptr().cast(),
            &ri,
            s.as_mut_ptr(),
            u.as_mut_ptr().cast(),
            &ldu,
            vt.as_mut_ptr().cast(),
            &ldvt,
            (&mut wkopt as *mut C64).cast(),
            &query,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Svd(format!("zgesvd workspace query failed (info={info})")));
    }
    let lwork = (wkopt.re as i32).max(1);
    let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
    unsafe {
        lapack_sys::zgesvd_(
            &ju,
            &jvt,
            &ri,
            &ci,
            a.as_mut_ptr().cast(),
            &ri,
            s.as_mut_ptr(),
            u.as_mut_ptr().cast(),
            &ldu,
            vt.as_mut_ptr().cast(),
            &ldvt,
            work.as_mut_ptr().cast(),
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Svd(format!("zgesvd failed to converge (info={info})")));
    }
    let um = (ucols > 0).then(|| from_col_major(&u, r, ucols));
    let vtm = (vtrows > 0).then(|| from_col_major(&vt, vtrows, c));
    Ok((um, s, vtm))
}

/// Hermitian eigendecomposition: eigenvalues ascending, eigenvectors as
/// columns. The input is symmetrised first; callers are expected to have
/// validated Hermiticity to their own tolerance.
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    m.require_square()?;
    let dag = m.dagger();
    let sym = CMat((&m.0 + &dag.0).mapv(|z| z * 0.5));
    let (vals, vecs) = zheev(&sym, true)?;
    Ok((vals, vecs.expect("requested eigenvectors")))
}

pub fn eigh_vals(m: &CMat) -> Result<Vec<f64>> {
    let dag = m.dagger();
    let sym = CMat((&m.0 + &dag.0).mapv(|z| z * 0.5));
    Ok(zheev(&sym, false)?.0)
}

/// Rebuild U f(diag) U† from an eigendecomposition.
/// U f(L) U^dag for a real-valued spectral function.
pub fn rebuild_re(vals: &[f64], vecs: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    rebuild(vals, vecs, |v| C64::new(f(v), 0.0))
}

pub fn rebuild(vals: &[f64], vecs: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let n = vecs.nrows();
    let mut scaled = vecs.0.clone();
    for (j, &v) in vals.iter().enumerate() {
        let fv = f(v);
        for i in 0..n {
            scaled[(i, j)] *= fv;
        }
    }
    CMat(scaled.dot(&vecs.0.t().mapv(|z| z.conj())))
}

/// Nearest positive semidefinite matrix in Frobenius norm: clamp negative
/// eigenvalues to zero.
pub fn project_psd(m: &CMat) -> Result<CMat> {
    let (vals, vecs) = eigh(m)?;
    Ok(rebuild(&vals, &vecs, |v| C64::new(v.max(0.0), 0.0)))
}

/// exp(-i t H) for Hermitian H.
pub fn expm_i_h(h: &CMat, t: f64) -> Result<CMat> {
    let (vals, vecs) = eigh(h)?;
    Ok(rebuild(&vals, &vecs, |v| C64::new(0.0, -v * t).exp()))
}

/// Matrix logarithm of a PSD-ish Hermitian matrix with eigenvalues floored
/// at `floor` before taking logs.
pub fn logm_floored(m: &CMat, floor: f64) -> Result<CMat> {
    let (vals, vecs) = eigh(m)?;
    Ok(rebuild(&vals, &vecs, |v| C64::new(v.max(floor).ln(), 0.0)))
}

/// Square root of a PSD Hermitian matrix (negative eigenvalues clamped).
pub fn sqrtm_psd(m: &CMat) -> Result<CMat> {
    let (vals, vecs) = eigh(m)?;
    Ok(rebuild(&vals, &vecs, |v| C64::new(v.max(0.0).sqrt(), 0.0)))
}

/// Thin singular value decomposition M = U diag(s) V†.
pub fn svd_thin(m: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let (u, s, vt) = zgesvd(m, b'S', b'S')?;
    Ok((u.expect("requested U"), s, vt.expect("requested V^T")))
}

/// Moore-Penrose pseudoinverse with singular values below
/// `rcond * sigma_max` discarded.
pub fn pinv(m: &CMat, rcond: f64) -> Result<CMat> {
    let (u, s, vt) = svd_thin(m)?;
    let smax = s.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = rcond * smax;
    // pinv = V S^+ U†
    let mut v = vt.dagger();
    for (j, &sv) in s.iter().enumerate() {
        let inv = if sv > cutoff && sv > 0.0 { 1.0 / sv } else { 0.0 };
        for i in 0..v.nrows() {
            v.0[(i, j)] *= inv;
        }
    }
    Ok(v.matmul(&u.dagger()))
}

/// Numerical rank at relative threshold `rcond`.
pub fn matrix_rank(m: &CMat, rcond: f64) -> Result<usize> {
    let s = singular_values(m)?;
    let smax = s.iter().cloned().fold(0.0f64, f64::max);
    Ok(s.iter().filter(|&&sv| sv > rcond * smax && sv > 0.0).count())
}

pub fn singular_values(m: &CMat) -> Result<Vec<f64>> {
    let (_, s, _) = zgesvd(m, b'N', b'N')?;
    Ok(s)
}

/// Trace norm of a Hermitian matrix (sum of |eigenvalues|).
pub fn trace_norm_herm(m: &CMat) -> Result<f64> {
    Ok(eigh_vals(m)?.iter().map(|v| v.abs()).sum())
}

/// Trace distance (1/2)||a - b||_1 between Hermitian matrices.
pub fn trace_distance(a: &CMat, b: &CMat) -> Result<f64> {
    Ok(0.5 * trace_norm_herm(&(a - b))?)
}

/// Uhlmann fidelity F(a, b) = (Tr sqrt(sqrt(a) b sqrt(a)))^2 for PSD inputs.
pub fn uhlmann_fidelity(a: &CMat, b: &CMat) -> Result<f64> {
    let ra = sqrtm_psd(a)?;
    let inner = ra.matmul(b).matmul(&ra);
    let root = sqrtm_psd(&inner.hermitize(1e-8).unwrap_or(inner))?;
    Ok(root.trace().re.powi(2))
}

/// Random unitary via the polar factor of a complex Gaussian matrix.
pub fn haar_unitary<R: rand::Rng>(d: usize, rng: &mut R) -> Result<CMat> {
    let gauss = |rng: &mut R| {
        // Box-Muller from two uniforms
        let u1: f64 = rng.gen::<f64>().max(1e-300);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let g = CMat::from_fn(d, d, |_, _| C64::new(gauss(rng), gauss(rng)));
    let (u, _s, vt) = svd_thin(&g)?;
    Ok(u.matmul(&vt))
}
