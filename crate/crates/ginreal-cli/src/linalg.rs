//! Thin wrappers over the system BLAS/LAPACK (OpenBLAS).

use cblas_sys::{cblas_dgemm, CBLAS_LAYOUT, CBLAS_TRANSPOSE};
use std::os::raw::c_int;
use std::sync::Once;

extern "C" {
    fn openblas_set_num_threads(n: c_int);
}

/// Trials are the unit of parallelism; BLAS itself stays single-threaded.
pub(crate) fn single_threaded_blas() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| unsafe { openblas_set_num_threads(1) });
}

/// `c ← alpha·a·b` for column-major `n×n` matrices.
pub(crate) fn gemm(n: usize, alpha: f64, a: &[f64], b: &[f64], c: &mut [f64]) {
    assert!(a.len() == n * n && b.len() == n * n && c.len() == n * n);
    let k = n as c_int;
    unsafe {
        cblas_dgemm(
            CBLAS_LAYOUT::CblasColMajor,
            CBLAS_TRANSPOSE::CblasNoTrans,
            CBLAS_TRANSPOSE::CblasNoTrans,
            k,
            k,
            k,
            alpha,
            a.as_ptr(),
            k,
            b.as_ptr(),
            k,
            0.0,
            c.as_mut_ptr(),
            k,
        );
    }
}

/// Reusable buffers for [`real_eigenvalues`].
#[derive(Debug, Default)]
pub(crate) struct EigenWorkspace {
    tau: Vec<f64>,
    wr: Vec<f64>,
    wi: Vec<f64>,
    work: Vec<f64>,
}

/// Real eigenvalues of the column-major `n×n` matrix `a` (destroyed), read off
/// as the 1×1 diagonal blocks of the real Schur form: Householder reduction to
/// Hessenberg form followed by the multishift QR of `dhseqr`. A nonzero LAPACK
/// `info` is returned as the error.
pub(crate) fn real_eigenvalues(n: usize, a: &mut [f64], ws: &mut EigenWorkspace) -> Result<Vec<f64>, i32> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let k = n as c_int;
    ws.tau.resize(n.max(2) - 1, 0.0);
    ws.wr.resize(n, 0.0);
    ws.wi.resize(n, 0.0);
    let lwork = 64 * n.max(16);
    ws.work.resize(lwork, 0.0);
    let lw = lwork as c_int;
    let mut info: c_int = 0;
    unsafe {
        lapack_sys::dgehrd_(&k, &1, &k, a.as_mut_ptr(), &k, ws.tau.as_mut_ptr(), ws.work.as_mut_ptr(), &lw, &mut info);
    }
    if info != 0 {
        return Err(info);
    }
    // dhseqr reads only the Hessenberg part but clear the reflectors anyway
    for j in 0..n {
        for i in j + 2..n {
            a[i + j * n] = 0.0;
        }
    }
    let mut z = [0.0f64; 1];
    unsafe {
        lapack_sys::dhseqr_(
            b"E".as_ptr() as *const _,
            b"N".as_ptr() as *const _,
            &k,
            &1,
            &k,
            a.as_mut_ptr(),
            &k,
            ws.wr.as_mut_ptr(),
            ws.wi.as_mut_ptr(),
            z.as_mut_ptr(),
            &1,
            ws.work.as_mut_ptr(),
            &lw,
            &mut info,
        );
    }
    if info != 0 {
        return Err(info);
    }
    let mut eigs: Vec<f64> = ws.wr.iter().zip(&ws.wi).filter(|(_, &im)| im == 0.0).map(|(&re, _)| re).collect();
    eigs.sort_by(f64::total_cmp);
    Ok(eigs)
}
