//! Row-major matmul kernels for the forward and adjoint products.
//!
//! Three orientations cover everything the graph needs without materializing
//! transposes: C += A*B, C += A*B^T, C += A^T*B. Each takes explicit leading
//! dimensions so callers can tile over column ranges of a larger matrix.
//! Inner loops are unrolled so LLVM vectorizes them; accumulation order is
//! fixed, so results are bit-reproducible across runs.

use crate::tensor::Scalar;

const LANES: usize = 16;

/// C[M,N] += A[M,K] * B[K,N], rows strided by the `ld*` leading dimensions.
#[allow(clippy::too_many_arguments)]
pub fn matmul_acc_ld<E: Scalar>(
    a: &[E],
    lda: usize,
    b: &[E],
    ldb: usize,
    c: &mut [E],
    ldc: usize,
    m: usize,
    k: usize,
    n: usize,
) {
    for i in 0..m {
        let arow = &a[i * lda..i * lda + k];
        let crow = &mut c[i * ldc..i * ldc + n];
        let mut kk = 0;
        while kk + 4 <= k {
            axpy4(
                crow,
                [arow[kk], arow[kk + 1], arow[kk + 2], arow[kk + 3]],
                &b[kk * ldb..kk * ldb + n],
                &b[(kk + 1) * ldb..(kk + 1) * ldb + n],
                &b[(kk + 2) * ldb..(kk + 2) * ldb + n],
                &b[(kk + 3) * ldb..(kk + 3) * ldb + n],
            );
            kk += 4;
        }
        while kk < k {
            axpy(crow, arow[kk], &b[kk * ldb..kk * ldb + n]);
            kk += 1;
        }
    }
}

/// C[M,K] += A[M,N] * B[K,N]^T (dot-product formulation).
#[allow(clippy::too_many_arguments)]
pub fn matmul_nt_acc_ld<E: Scalar>(
    a: &[E],
    lda: usize,
    b: &[E],
    ldb: usize,
    c: &mut [E],
    ldc: usize,
    m: usize,
    k: usize,
    n: usize,
) {
    for i in 0..m {
        let arow = &a[i * lda..i * lda + n];
        let crow = &mut c[i * ldc..i * ldc + k];
        for kk in 0..k {
            crow[kk] += dot(arow, &b[kk * ldb..kk * ldb + n]);
        }
    }
}

/// C[K,N] += A[M,K]^T * B[M,N] (axpy formulation over rows of B).
#[allow(clippy::too_many_arguments)]
pub fn matmul_tn_acc_ld<E: Scalar>(
    a: &[E],
    lda: usize,
    b: &[E],
    ldb: usize,
    c: &mut [E],
    ldc: usize,
    m: usize,
    k: usize,
    n: usize,
) {
    for i in 0..m {
        let arow = &a[i * lda..i * lda + k];
        let brow = &b[i * ldb..i * ldb + n];
        let mut kk = 0;
        while kk + 2 <= k {
            axpy(&mut c[kk * ldc..kk * ldc + n], arow[kk], brow);
            axpy(&mut c[(kk + 1) * ldc..(kk + 1) * ldc + n], arow[kk + 1], brow);
            kk += 2;
        }
        if kk < k {
            axpy(&mut c[kk * ldc..kk * ldc + n], arow[kk], brow);
        }
    }
}

/// C[M,N] += A[M,K] * B[K,N], all contiguous.
pub fn matmul_acc<E: Scalar>(a: &[E], b: &[E], c: &mut [E], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    matmul_acc_ld(a, k, b, n, c, n, m, k, n);
}

/// C[M,K] += A[M,N] * B[K,N]^T, all contiguous.
pub fn matmul_nt_acc<E: Scalar>(a: &[E], b: &[E], c: &mut [E], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * k);
    matmul_nt_acc_ld(a, n, b, n, c, k, m, k, n);
}

/// C[K,N] += A[M,K]^T * B[M,N], all contiguous.
pub fn matmul_tn_acc<E: Scalar>(a: &[E], b: &[E], c: &mut [E], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(c.len(), k * n);
    matmul_tn_acc_ld(a, k, b, n, c, n, m, k, n);
}

#[inline]
fn axpy<E: Scalar>(c: &mut [E], a: E, b: &[E]) {
    let n = c.len();
    let b = &b[..n];
    for j in 0..n {
        c[j] = a.mul_add_v(b[j], c[j]);
    }
}

#[inline]
fn axpy4<E: Scalar>(c: &mut [E], a: [E; 4], b0: &[E], b1: &[E], b2: &[E], b3: &[E]) {
    let n = c.len();
    let (b0, b1, b2, b3) = (&b0[..n], &b1[..n], &b2[..n], &b3[..n]);
    for j in 0..n {
        let t = a[3].mul_add_v(b3[j], c[j]);
        let t = a[2].mul_add_v(b2[j], t);
        let t = a[1].mul_add_v(b1[j], t);
        c[j] = a[0].mul_add_v(b0[j], t);
    }
}

/// Dot product with a fixed lane structure (deterministic, vectorizable).
#[inline]
pub fn dot<E: Scalar>(a: &[E], b: &[E]) -> E {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let chunks = n / LANES;
    let mut acc = [E::ZERO; LANES];
    for ci in 0..chunks {
        let av = &a[ci * LANES..(ci + 1) * LANES];
        let bv = &b[ci * LANES..(ci + 1) * LANES];
        for l in 0..LANES {
            acc[l] = av[l].mul_add_v(bv[l], acc[l]);
        }
    }
    let mut tail = E::ZERO;
    for j in chunks * LANES..n {
        tail = a[j].mul_add_v(b[j], tail);
    }
    // pairwise fold keeps a fixed order
    let mut width = LANES;
    while width > 1 {
        width /= 2;
        for l in 0..width {
            acc[l] = acc[l] + acc[l + width];
        }
    }
    acc[0] + tail
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    c[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        c
    }

    fn close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn kernels_match_naive() {
        let mut rng = crate::rng::RngState::new(17);
        for &(m, k, n) in &[(1, 1, 1), (3, 5, 7), (4, 16, 9), (8, 33, 17), (5, 64, 49)] {
            let a: Vec<f64> = (0..m * k).map(|_| rng.next_normal()).collect();
            let b: Vec<f64> = (0..k * n).map(|_| rng.next_normal()).collect();
            let want = naive(&a, &b, m, k, n);

            let mut c = vec![0.0; m * n];
            matmul_acc(&a, &b, &mut c, m, k, n);
            close(&c, &want);

            let mut bt = vec![0.0; k * n];
            for p in 0..k {
                for j in 0..n {
                    bt[j * k + p] = b[p * n + j];
                }
            }
            let mut c2 = vec![0.0; m * n];
            matmul_nt_acc(&a, &bt, &mut c2, m, n, k);
            close(&c2, &want);

            let mut at = vec![0.0; m * k];
            for i in 0..m {
                for p in 0..k {
                    at[p * m + i] = a[i * k + p];
                }
            }
            let mut c3 = vec![0.0; m * n];
            matmul_tn_acc(&at, &b, &mut c3, k, m, n);
            close(&c3, &want);
        }
    }

    #[test]
    fn tiled_calls_match_whole_matrix_call() {
        let mut rng = crate::rng::RngState::new(23);
        let (m, k, n) = (7, 20, 53);
        let a: Vec<f64> = (0..m * k).map(|_| rng.next_normal()).collect();
        let b: Vec<f64> = (0..k * n).map(|_| rng.next_normal()).collect();
        let mut whole = vec![0.0; m * n];
        matmul_acc(&a, &b, &mut whole, m, k, n);

        let mut tiled = vec![0.0; m * n];
        let tile = 16;
        let mut n0 = 0;
        while n0 < n {
            let nt = tile.min(n - n0);
            matmul_acc_ld(&a, k, &b[n0..], n, &mut tiled[n0..], n, m, k, nt);
            n0 += nt;
        }
        close(&tiled, &whole);
    }

    #[test]
    fn dot_matches_sequential() {
        let mut rng = crate::rng::RngState::new(4);
        for n in [0, 1, 15, 16, 17, 100] {
            let a: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
            let want: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            assert!((dot(&a, &b) - want).abs() < 1e-9);
        }
    }

    #[test]
    fn accumulation_is_additive() {
        let a = vec![1.0f32, 2.0, 3.0, 4.0];
        let b = vec![1.0f32, 0.0, 0.0, 1.0];
        let mut c = vec![10.0f32; 4];
        matmul_acc(&a, &b, &mut c, 2, 2, 2);
        assert_eq!(c, vec![11.0, 12.0, 13.0, 14.0]);
    }
}
