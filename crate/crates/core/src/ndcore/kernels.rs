//! Shape-checked forward kernels over flat row-major buffers.
//!
//! Both the eager [`Tensor`](super::Tensor) methods and the recording
//! [`Graph`](super::Graph) call into these, so the two paths can never drift.

use super::error::{NdError, Result};

pub(crate) fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

pub(crate) fn check_finite(op: &'static str, data: &[f64]) -> Result<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NdError::NonFinite { op })
    }
}

pub(crate) fn check_rank(shape: &[usize]) -> Result<()> {
    if shape.is_empty() || shape.len() > 3 {
        return Err(NdError::InvalidShape {
            shape: shape.to_vec(),
            reason: "rank must be 1, 2 or 3".into(),
        });
    }
    Ok(())
}

/// `c += alpha * op(a) * op(b)` with arbitrary strides; all dims in elements.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    beta: f64,
    c: &mut [f64],
) {
    assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for v in c[..m * n].iter_mut() {
            *v *= beta;
        }
        return;
    }
    let last = |rs: isize, cs: isize, rows: usize, cols: usize| (rows as isize - 1) * rs + (cols as isize - 1) * cs;
    assert!((last(rsa, csa, m, k) as usize) < a.len());
    assert!((last(rsb, csb, k, n) as usize) < b.len());
    // SAFETY: the asserts above keep every strided access inside `a`, `b`
    // and the first m*n elements of `c`; the buffers do not alias.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub(crate) fn matmul(a_shape: &[usize], a: &[f64], b_shape: &[usize], b: &[f64]) -> Result<(Vec<usize>, Vec<f64>)> {
    if a_shape.len() != 2 || b_shape.len() != 2 || a_shape[1] != b_shape[0] {
        return Err(NdError::Shape {
            op: "matmul",
            lhs: a_shape.to_vec(),
            rhs: b_shape.to_vec(),
        });
    }
    let (m, k, n) = (a_shape[0], a_shape[1], b_shape[1]);
    let mut out = vec![0.0; m * n];
    gemm(m, k, n, a, k as isize, 1, b, n as isize, 1, 0.0, &mut out);
    Ok((vec![m, n], out))
}

pub(crate) fn batch_matmul(
    a_shape: &[usize],
    a: &[f64],
    b_shape: &[usize],
    b: &[f64],
) -> Result<(Vec<usize>, Vec<f64>)> {
    if a_shape.len() != 3 || b_shape.len() != 3 || a_shape[0] != b_shape[0] || a_shape[2] != b_shape[1] {
        return Err(NdError::Shape {
            op: "batch_matmul",
            lhs: a_shape.to_vec(),
            rhs: b_shape.to_vec(),
        });
    }
    let (bs, m, k, n) = (a_shape[0], a_shape[1], a_shape[2], b_shape[2]);
    let mut out = vec![0.0; bs * m * n];
    for i in 0..bs {
        gemm(
            m,
            k,
            n,
            &a[i * m * k..(i + 1) * m * k],
            k as isize,
            1,
            &b[i * k * n..(i + 1) * k * n],
            n as isize,
            1,
            0.0,
            &mut out[i * m * n..(i + 1) * m * n],
        );
    }
    Ok((vec![bs, m, n], out))
}

/// Swaps the last two axes of a rank-2 or rank-3 buffer.
pub(crate) fn transpose_last(shape: &[usize], x: &[f64]) -> Result<(Vec<usize>, Vec<f64>)> {
    if shape.len() < 2 {
        return Err(NdError::InvalidShape {
            shape: shape.to_vec(),
            reason: "transpose needs rank >= 2".into(),
        });
    }
    let r = shape.len();
    let (rows, cols) = (shape[r - 2], shape[r - 1]);
    let batch = numel(&shape[..r - 2]);
    let mut out = vec![0.0; x.len()];
    for bi in 0..batch {
        let off = bi * rows * cols;
        for i in 0..rows {
            for j in 0..cols {
                out[off + j * rows + i] = x[off + i * cols + j];
            }
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape.swap(r - 2, r - 1);
    Ok((new_shape, out))
}

/// Softmax along the last axis, with the row max subtracted first.
pub(crate) fn softmax_last(shape: &[usize], x: &[f64]) -> Vec<f64> {
    let cols = *shape.last().expect("rank >= 1");
    let mut out = vec![0.0; x.len()];
    if cols == 0 {
        return out;
    }
    for (row_in, row_out) in x.chunks_exact(cols).zip(out.chunks_exact_mut(cols)) {
        let max = row_in.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (o, &v) in row_out.iter_mut().zip(row_in) {
            *o = (v - max).exp();
            sum += *o;
        }
        for o in row_out.iter_mut() {
            *o /= sum;
        }
    }
    out
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn same_shape(op: &'static str, a: &[usize], b: &[usize]) -> Result<()> {
    if a != b {
        return Err(NdError::Shape {
            op,
            lhs: a.to_vec(),
            rhs: b.to_vec(),
        });
    }
    Ok(())
}

/// Block layout of a concat/select along `axis`: (outer, axis_len, inner).
pub(crate) fn axis_blocks(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    (numel(&shape[..axis]), shape[axis], numel(&shape[axis + 1..]))
}

pub(crate) fn concat(
    a_shape: &[usize],
    a: &[f64],
    b_shape: &[usize],
    b: &[f64],
    axis: usize,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let mismatch = || NdError::Shape {
        op: "concat",
        lhs: a_shape.to_vec(),
        rhs: b_shape.to_vec(),
    };
    if a_shape.len() != b_shape.len() || axis >= a_shape.len() {
        return Err(mismatch());
    }
    for (d, (x, y)) in a_shape.iter().zip(b_shape).enumerate() {
        if d != axis && x != y {
            return Err(mismatch());
        }
    }
    let (outer, na, inner) = axis_blocks(a_shape, axis);
    let nb = b_shape[axis];
    let (ba, bb) = (na * inner, nb * inner);
    let mut out = Vec::with_capacity(a.len() + b.len());
    for o in 0..outer {
        out.extend_from_slice(&a[o * ba..(o + 1) * ba]);
        out.extend_from_slice(&b[o * bb..(o + 1) * bb]);
    }
    let mut shape = a_shape.to_vec();
    shape[axis] = na + nb;
    Ok((shape, out))
}

/// Picks `index` along `axis`, dropping that axis.
pub(crate) fn select(shape: &[usize], x: &[f64], axis: usize, index: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    if shape.len() < 2 || axis >= shape.len() || index >= shape[axis] {
        return Err(NdError::InvalidShape {
            shape: shape.to_vec(),
            reason: format!("cannot select index {index} on axis {axis}"),
        });
    }
    let (outer, len, inner) = axis_blocks(shape, axis);
    let mut out = Vec::with_capacity(outer * inner);
    for o in 0..outer {
        let start = (o * len + index) * inner;
        out.extend_from_slice(&x[start..start + inner]);
    }
    let mut new_shape = shape.to_vec();
    new_shape.remove(axis);
    Ok((new_shape, out))
}
