//! Slice-level matrix kernels. All three accumulate into `out`.
//!
//! Work is split across rayon workers by output row only, so every output
//! element is reduced in the same order regardless of thread count.

use rayon::prelude::*;

use super::Scalar;

const PAR_THRESHOLD: usize = 1 << 18;

/// `out[m×p] += a[m×k] · b[k×p]`
pub fn matmul_acc<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, p: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * p);
    debug_assert_eq!(out.len(), m * p);
    if p == 0 {
        return;
    }
    let row = |(i, out_row): (usize, &mut [T])| {
        let a_row = &a[i * k..(i + 1) * k];
        for (l, &av) in a_row.iter().enumerate() {
            if av == T::zero() {
                continue;
            }
            let b_row = &b[l * p..(l + 1) * p];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    };
    if m * k * p >= PAR_THRESHOLD {
        out.par_chunks_mut(p).enumerate().for_each(row);
    } else {
        out.chunks_mut(p).enumerate().for_each(row);
    }
}

/// `out[m×p] += a[m×k] · b[p×k]ᵀ`
pub fn matmul_nt_acc<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, p: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), p * k);
    debug_assert_eq!(out.len(), m * p);
    if p == 0 {
        return;
    }
    let row = |(i, out_row): (usize, &mut [T])| {
        let a_row = &a[i * k..(i + 1) * k];
        for (j, o) in out_row.iter_mut().enumerate() {
            let b_row = &b[j * k..(j + 1) * k];
            let mut acc = T::zero();
            for (&x, &y) in a_row.iter().zip(b_row) {
                acc += x * y;
            }
            *o += acc;
        }
    };
    if m * k * p >= PAR_THRESHOLD {
        out.par_chunks_mut(p).enumerate().for_each(row);
    } else {
        out.chunks_mut(p).enumerate().for_each(row);
    }
}

/// `out[m×p] += a[r×m]ᵀ · b[r×p]`
pub fn matmul_tn_acc<T: Scalar>(a: &[T], b: &[T], out: &mut [T], r: usize, m: usize, p: usize) {
    debug_assert_eq!(a.len(), r * m);
    debug_assert_eq!(b.len(), r * p);
    debug_assert_eq!(out.len(), m * p);
    if p == 0 {
        return;
    }
    let row = |(i, out_row): (usize, &mut [T])| {
        for s in 0..r {
            let av = a[s * m + i];
            if av == T::zero() {
                continue;
            }
            let b_row = &b[s * p..(s + 1) * p];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    };
    if r * m * p >= PAR_THRESHOLD {
        out.par_chunks_mut(p).enumerate().for_each(row);
    } else {
        out.chunks_mut(p).enumerate().for_each(row);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::SeededRng;

    #[test]
    fn transposed_variants_agree_with_plain_product() {
        let mut rng = SeededRng::new(9);
        let (m, k, p) = (6, 4, 5);
        let a: Vec<f64> = rng.randn::<f64>(&[m, k]).into_data();
        let b: Vec<f64> = rng.randn::<f64>(&[k, p]).into_data();
        let mut plain = vec![0.0; m * p];
        matmul_acc(&a, &b, &mut plain, m, k, p);

        let mut bt = vec![0.0; k * p];
        for i in 0..k {
            for j in 0..p {
                bt[j * k + i] = b[i * p + j];
            }
        }
        let mut nt = vec![0.0; m * p];
        matmul_nt_acc(&a, &bt, &mut nt, m, k, p);

        let mut at = vec![0.0; k * m];
        for i in 0..m {
            for j in 0..k {
                at[j * m + i] = a[i * k + j];
            }
        }
        let mut tn = vec![0.0; m * p];
        matmul_tn_acc(&at, &b, &mut tn, k, m, p);

        for i in 0..m * p {
            assert!((plain[i] - nt[i]).abs() < 1e-12);
            assert!((plain[i] - tn[i]).abs() < 1e-12);
        }
    }
}
