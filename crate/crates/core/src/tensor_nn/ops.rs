//! Differentiable operations.
//!
//! Shapes are explicit and minimal: activations travel as 2-D row-major
//! buffers `[rows, cols]`, attention uses the contiguous `[B, h, L, d]`
//! head-major layout produced by [`split_heads`].

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::error::{CoreError, Result};

use super::tensor::{Scalar, Tensor};

fn shape2(t: &Tensor<impl Scalar>, what: &str) -> Result<(usize, usize)> {
    let s = t.shape();
    if s.len() != 2 {
        return Err(CoreError::ShapeMismatch(format!("{what} must be 2-D, got {s:?}")));
    }
    Ok((s[0], s[1]))
}

fn matmul_raw<T: Scalar>(x: &[T], w: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    for i in 0..m {
        let xrow = &x[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (ki, &xv) in xrow.iter().enumerate() {
            let wrow = &w[ki * n..(ki + 1) * n];
            for (o, &wv) in orow.iter_mut().zip(wrow) {
                *o = *o + xv * wv;
            }
        }
    }
}

/// `x [M,K] @ w [K,N] -> [M,N]`.
pub fn matmul<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>) -> Result<Tensor<T>> {
    let (m, k) = shape2(x, "matmul lhs")?;
    let (k2, n) = shape2(w, "matmul rhs")?;
    if k != k2 {
        return Err(CoreError::ShapeMismatch(format!("matmul inner dims {k} vs {k2}")));
    }
    let mut out = vec![T::zero(); m * n];
    matmul_raw(&x.node.borrow().data, &w.node.borrow().data, m, k, n, &mut out);

    let (xp, wp) = (x.clone(), w.clone());
    Ok(Tensor::from_op(
        vec![m, n],
        out,
        vec![x.clone(), w.clone()],
        Box::new(move |gout| {
            let xd = xp.node.borrow();
            let wd = wp.node.borrow();
            let mut dx = vec![T::zero(); m * k];
            for i in 0..m {
                let gy = &gout[i * n..(i + 1) * n];
                let dxrow = &mut dx[i * k..(i + 1) * k];
                for (ki, d) in dxrow.iter_mut().enumerate() {
                    let wrow = &wd.data[ki * n..(ki + 1) * n];
                    let mut acc = T::zero();
                    for (g, wv) in gy.iter().zip(wrow) {
                        acc = acc + *g * *wv;
                    }
                    *d = acc;
                }
            }
            let mut dw = vec![T::zero(); k * n];
            for i in 0..m {
                let xrow = &xd.data[i * k..(i + 1) * k];
                let gy = &gout[i * n..(i + 1) * n];
                for (ki, &xv) in xrow.iter().enumerate() {
                    let drow = &mut dw[ki * n..(ki + 1) * n];
                    for (d, &g) in drow.iter_mut().zip(gy) {
                        *d = *d + xv * g;
                    }
                }
            }
            vec![dx, dw]
        }),
    ))
}

/// Broadcast-add a bias row: `x [M,N] + b [N]`.
pub fn add_bias<T: Scalar>(x: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (m, n) = shape2(x, "add_bias input")?;
    if b.shape() != vec![n] {
        return Err(CoreError::ShapeMismatch(format!(
            "bias shape {:?} vs cols {n}",
            b.shape()
        )));
    }
    let bd = b.to_vec();
    let mut out = x.to_vec();
    for row in out.chunks_mut(n) {
        for (o, &bv) in row.iter_mut().zip(&bd) {
            *o = *o + bv;
        }
    }
    Ok(Tensor::from_op(
        vec![m, n],
        out,
        vec![x.clone(), b.clone()],
        Box::new(move |gout| {
            let dx = gout.to_vec();
            let mut db = vec![T::zero(); n];
            for row in gout.chunks(n) {
                for (d, &g) in db.iter_mut().zip(row) {
                    *d = *d + g;
                }
            }
            vec![dx, db]
        }),
    ))
}

/// Elementwise sum of two same-shape tensors.
pub fn add<T: Scalar>(x: &Tensor<T>, y: &Tensor<T>) -> Result<Tensor<T>> {
    if x.shape() != y.shape() {
        return Err(CoreError::ShapeMismatch(format!(
            "add {:?} vs {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let out: Vec<T> = x
        .node
        .borrow()
        .data
        .iter()
        .zip(&y.node.borrow().data)
        .map(|(&a, &b)| a + b)
        .collect();
    Ok(Tensor::from_op(
        x.shape(),
        out,
        vec![x.clone(), y.clone()],
        Box::new(move |gout| vec![gout.to_vec(), gout.to_vec()]),
    ))
}

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let out: Vec<T> =
        x.node.borrow().data.iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect();
    let xp = x.clone();
    Tensor::from_op(
        x.shape(),
        out,
        vec![x.clone()],
        Box::new(move |gout| {
            let xd = xp.node.borrow();
            vec![gout
                .iter()
                .zip(&xd.data)
                .map(|(&g, &v)| if v > T::zero() { g } else { T::zero() })
                .collect()]
        }),
    )
}

pub fn sigmoid<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let out: Vec<T> = x
        .node
        .borrow()
        .data
        .iter()
        .map(|&v| T::one() / (T::one() + (-v).exp()))
        .collect();
    let cache = out.clone();
    Tensor::from_op(
        x.shape(),
        out,
        vec![x.clone()],
        Box::new(move |gout| {
            vec![gout
                .iter()
                .zip(&cache)
                .map(|(&g, &y)| g * y * (T::one() - y))
                .collect()]
        }),
    )
}

/// Last-dimension standardization with affine rescale, eps = 1e-5.
pub fn layer_norm<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (m, n) = shape2(x, "layer_norm input")?;
    if gamma.shape() != vec![n] || beta.shape() != vec![n] {
        return Err(CoreError::ShapeMismatch(format!(
            "layer_norm affine shapes {:?}/{:?} vs cols {n}",
            gamma.shape(),
            beta.shape()
        )));
    }
    let eps = T::c(1e-5);
    let xd = x.to_vec();
    let gd = gamma.to_vec();
    let bd = beta.to_vec();
    let mut out = vec![T::zero(); m * n];
    let mut xhat = vec![T::zero(); m * n];
    let mut inv_std = vec![T::zero(); m];
    let nf = T::c(n as f64);
    for i in 0..m {
        let row = &xd[i * n..(i + 1) * n];
        let mean = row.iter().fold(T::zero(), |a, &v| a + v) / nf;
        let var = row.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean)) / nf;
        let istd = T::one() / (var + eps).sqrt();
        inv_std[i] = istd;
        for j in 0..n {
            let xh = (row[j] - mean) * istd;
            xhat[i * n + j] = xh;
            out[i * n + j] = gd[j] * xh + bd[j];
        }
    }
    let gp = gamma.clone();
    Ok(Tensor::from_op(
        vec![m, n],
        out,
        vec![x.clone(), gamma.clone(), beta.clone()],
        Box::new(move |gout| {
            let gd = gp.node.borrow();
            let mut dx = vec![T::zero(); m * n];
            let mut dgamma = vec![T::zero(); n];
            let mut dbeta = vec![T::zero(); n];
            for i in 0..m {
                let go = &gout[i * n..(i + 1) * n];
                let xh = &xhat[i * n..(i + 1) * n];
                let mut sum_dxhat = T::zero();
                let mut sum_dxhat_xhat = T::zero();
                for j in 0..n {
                    let dxh = go[j] * gd.data[j];
                    sum_dxhat = sum_dxhat + dxh;
                    sum_dxhat_xhat = sum_dxhat_xhat + dxh * xh[j];
                    dgamma[j] = dgamma[j] + go[j] * xh[j];
                    dbeta[j] = dbeta[j] + go[j];
                }
                let mean_dxhat = sum_dxhat / nf;
                let mean_dxhat_xhat = sum_dxhat_xhat / nf;
                for j in 0..n {
                    let dxh = go[j] * gd.data[j];
                    dx[i * n + j] = inv_std[i] * (dxh - mean_dxhat - xh[j] * mean_dxhat_xhat);
                }
            }
            vec![dx, dgamma, dbeta]
        }),
    ))
}

/// Reinterpret the buffer under a new shape (row-major, same length).
pub fn reshape<T: Scalar>(x: &Tensor<T>, shape: Vec<usize>) -> Result<Tensor<T>> {
    let product: usize = shape.iter().product();
    if product != x.len() {
        return Err(CoreError::ShapeMismatch(format!(
            "reshape {:?} -> {shape:?}",
            x.shape()
        )));
    }
    Ok(Tensor::from_op(
        shape,
        x.to_vec(),
        vec![x.clone()],
        Box::new(move |gout| vec![gout.to_vec()]),
    ))
}

/// `[B*L, h*d] -> [B, h, L, d]` head-major blocks for attention.
pub fn split_heads<T: Scalar>(
    x: &Tensor<T>,
    batch: usize,
    seq_len: usize,
    n_heads: usize,
) -> Result<Tensor<T>> {
    let (rows, dim) = shape2(x, "split_heads input")?;
    if rows != batch * seq_len || dim % n_heads != 0 {
        return Err(CoreError::ShapeMismatch(format!(
            "split_heads rows {rows} vs {batch}x{seq_len}, dim {dim} over {n_heads} heads"
        )));
    }
    let d = dim / n_heads;
    let xd = x.to_vec();
    let mut out = vec![T::zero(); xd.len()];
    for b in 0..batch {
        for h in 0..n_heads {
            for l in 0..seq_len {
                let src = (b * seq_len + l) * dim + h * d;
                let dst = (((b * n_heads + h) * seq_len) + l) * d;
                out[dst..dst + d].copy_from_slice(&xd[src..src + d]);
            }
        }
    }
    Ok(Tensor::from_op(
        vec![batch, n_heads, seq_len, d],
        out,
        vec![x.clone()],
        Box::new(move |gout| {
            let mut dx = vec![T::zero(); gout.len()];
            for b in 0..batch {
                for h in 0..n_heads {
                    for l in 0..seq_len {
                        let dst = (b * seq_len + l) * dim + h * d;
                        let src = (((b * n_heads + h) * seq_len) + l) * d;
                        dx[dst..dst + d].copy_from_slice(&gout[src..src + d]);
                    }
                }
            }
            vec![dx]
        }),
    ))
}

/// Inverse of [`split_heads`]: `[B, h, L, d] -> [B*L, h*d]`.
pub fn merge_heads<T: Scalar>(x: &Tensor<T>) -> Result<Tensor<T>> {
    let s = x.shape();
    if s.len() != 4 {
        return Err(CoreError::ShapeMismatch(format!("merge_heads needs 4-D, got {s:?}")));
    }
    let (batch, n_heads, seq_len, d) = (s[0], s[1], s[2], s[3]);
    let dim = n_heads * d;
    let xd = x.to_vec();
    let mut out = vec![T::zero(); xd.len()];
    for b in 0..batch {
        for h in 0..n_heads {
            for l in 0..seq_len {
                let src = (((b * n_heads + h) * seq_len) + l) * d;
                let dst = (b * seq_len + l) * dim + h * d;
                out[dst..dst + d].copy_from_slice(&xd[src..src + d]);
            }
        }
    }
    Ok(Tensor::from_op(
        vec![batch * seq_len, dim],
        out,
        vec![x.clone()],
        Box::new(move |gout| {
            let mut dx = vec![T::zero(); gout.len()];
            for b in 0..batch {
                for h in 0..n_heads {
                    for l in 0..seq_len {
                        let dst = (((b * n_heads + h) * seq_len) + l) * d;
                        let src = (b * seq_len + l) * dim + h * d;
                        dx[dst..dst + d].copy_from_slice(&gout[src..src + d]);
                    }
                }
            }
            vec![dx]
        }),
    ))
}

/// `softmax(Q K^T / sqrt(d)) V` per (batch, head) block.
///
/// Inputs share the `[B, h, L, d]` layout; softmax rows sum to one.
pub fn scaled_dot_attention<T: Scalar>(
    q: &Tensor<T>,
    k: &Tensor<T>,
    v: &Tensor<T>,
) -> Result<Tensor<T>> {
    let s = q.shape();
    if s.len() != 4 || k.shape() != s || v.shape() != s {
        return Err(CoreError::ShapeMismatch(format!(
            "attention shapes {:?}/{:?}/{:?}",
            q.shape(),
            k.shape(),
            v.shape()
        )));
    }
    let (batch, n_heads, l, d) = (s[0], s[1], s[2], s[3]);
    let blocks = batch * n_heads;
    let scale = T::one() / T::c(d as f64).sqrt();

    let qd = q.to_vec();
    let kd = k.to_vec();
    let vd = v.to_vec();
    let mut out = vec![T::zero(); qd.len()];
    let mut probs = vec![T::zero(); blocks * l * l];

    for blk in 0..blocks {
        let qb = &qd[blk * l * d..(blk + 1) * l * d];
        let kb = &kd[blk * l * d..(blk + 1) * l * d];
        let vb = &vd[blk * l * d..(blk + 1) * l * d];
        let pb = &mut probs[blk * l * l..(blk + 1) * l * l];
        for i in 0..l {
            let qi = &qb[i * d..(i + 1) * d];
            let row = &mut pb[i * l..(i + 1) * l];
            let mut max = T::neg_infinity();
            for (j, r) in row.iter_mut().enumerate() {
                let kj = &kb[j * d..(j + 1) * d];
                let mut dot = T::zero();
                for (a, b) in qi.iter().zip(kj) {
                    dot = dot + *a * *b;
                }
                *r = dot * scale;
                if *r > max {
                    max = *r;
                }
            }
            let mut sum = T::zero();
            for r in row.iter_mut() {
                *r = (*r - max).exp();
                sum = sum + *r;
            }
            for r in row.iter_mut() {
                *r = *r / sum;
            }
            let oi = &mut out[blk * l * d + i * d..blk * l * d + (i + 1) * d];
            for j in 0..l {
                let p = pb[i * l + j];
                let vj = &vb[j * d..(j + 1) * d];
                for (o, &vv) in oi.iter_mut().zip(vj) {
                    *o = *o + p * vv;
                }
            }
        }
    }

    let (qp, kp, vp) = (q.clone(), k.clone(), v.clone());
    Ok(Tensor::from_op(
        s,
        out,
        vec![q.clone(), k.clone(), v.clone()],
        Box::new(move |gout| {
            let qd = qp.node.borrow();
            let kd = kp.node.borrow();
            let vd = vp.node.borrow();
            let mut dq = vec![T::zero(); qd.data.len()];
            let mut dk = vec![T::zero(); qd.data.len()];
            let mut dv = vec![T::zero(); qd.data.len()];
            for blk in 0..blocks {
                let qb = &qd.data[blk * l * d..(blk + 1) * l * d];
                let kb = &kd.data[blk * l * d..(blk + 1) * l * d];
                let vb = &vd.data[blk * l * d..(blk + 1) * l * d];
                let pb = &probs[blk * l * l..(blk + 1) * l * l];
                let gb = &gout[blk * l * d..(blk + 1) * l * d];
                for i in 0..l {
                    let gi = &gb[i * d..(i + 1) * d];
                    // dV and dProbs
                    let mut dprobs = vec![T::zero(); l];
                    for j in 0..l {
                        let vj = &vb[j * d..(j + 1) * d];
                        let p = pb[i * l + j];
                        let dvj = &mut dv[blk * l * d + j * d..blk * l * d + (j + 1) * d];
                        let mut dot = T::zero();
                        for ((g, vv), dvv) in gi.iter().zip(vj).zip(dvj.iter_mut()) {
                            dot = dot + *g * *vv;
                            *dvv = *dvv + p * *g;
                        }
                        dprobs[j] = dot;
                    }
                    // softmax backward
                    let mut inner = T::zero();
                    for j in 0..l {
                        inner = inner + dprobs[j] * pb[i * l + j];
                    }
                    for j in 0..l {
                        let dscore = pb[i * l + j] * (dprobs[j] - inner) * scale;
                        let kj = &kb[j * d..(j + 1) * d];
                        let qi = &qb[i * d..(i + 1) * d];
                        let dqi = &mut dq[blk * l * d + i * d..blk * l * d + (i + 1) * d];
                        for (dqv, &kv) in dqi.iter_mut().zip(kj) {
                            *dqv = *dqv + dscore * kv;
                        }
                        let dkj = &mut dk[blk * l * d + j * d..blk * l * d + (j + 1) * d];
                        for (dkv, &qv) in dkj.iter_mut().zip(qi) {
                            *dkv = *dkv + dscore * qv;
                        }
                    }
                }
            }
            vec![dq, dk, dv]
        }),
    ))
}

/// Inverted dropout: keeps with probability `1-p` and rescales.
/// Identity when `train` is false or `p == 0`.
pub fn dropout<T: Scalar, R: Rng + ?Sized>(
    x: &Tensor<T>,
    p: f64,
    train: bool,
    rng: &mut R,
) -> Tensor<T> {
    if !train || p <= 0.0 {
        return Tensor::from_op(
            x.shape(),
            x.to_vec(),
            vec![x.clone()],
            Box::new(move |gout| vec![gout.to_vec()]),
        );
    }
    let keep = T::c(1.0 / (1.0 - p));
    let mask: Vec<T> = x
        .node
        .borrow()
        .data
        .iter()
        .map(|_| if rng.gen::<f64>() < p { T::zero() } else { keep })
        .collect();
    let out: Vec<T> =
        x.node.borrow().data.iter().zip(&mask).map(|(&v, &m)| v * m).collect();
    Tensor::from_op(
        x.shape(),
        out,
        vec![x.clone()],
        Box::new(move |gout| {
            vec![gout.iter().zip(&mask).map(|(&g, &m)| g * m).collect()]
        }),
    )
}

/// Replace the given rows of `x [M,N]` with the vector `m [N]`.
/// Gradients flow into `m` from the replaced rows and into `x` everywhere
/// else; used for the learnable mask-embedding variant.
pub fn substitute_rows<T: Scalar>(
    x: &Tensor<T>,
    rows: &[usize],
    m: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (nrows, n) = shape2(x, "substitute_rows input")?;
    if m.shape() != vec![n] {
        return Err(CoreError::ShapeMismatch(format!(
            "mask vector {:?} vs cols {n}",
            m.shape()
        )));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= nrows) {
        return Err(CoreError::ShapeMismatch(format!("row {bad} out of {nrows}")));
    }
    let md = m.to_vec();
    let mut out = x.to_vec();
    for &r in rows {
        out[r * n..(r + 1) * n].copy_from_slice(&md);
    }
    let rows_owned: Vec<usize> = rows.to_vec();
    Ok(Tensor::from_op(
        vec![nrows, n],
        out,
        vec![x.clone(), m.clone()],
        Box::new(move |gout| {
            let mut dx = gout.to_vec();
            let mut dm = vec![T::zero(); n];
            for &r in &rows_owned {
                let row = &gout[r * n..(r + 1) * n];
                for (d, &g) in dm.iter_mut().zip(row) {
                    *d = *d + g;
                }
                dx[r * n..(r + 1) * n].fill(T::zero());
            }
            vec![dx, dm]
        }),
    ))
}

/// Mean absolute error over all elements; subgradient at ties is 0.
pub fn l1_loss<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<Tensor<T>> {
    if pred.shape() != target.shape() {
        return Err(CoreError::ShapeMismatch(format!(
            "l1 shapes {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let td = target.to_vec();
    let pd = pred.to_vec();
    let n = T::c(pd.len() as f64);
    let loss = pd
        .iter()
        .zip(&td)
        .fold(T::zero(), |a, (&p, &t)| a + (p - t).abs())
        / n;
    Ok(Tensor::from_op(
        vec![1],
        vec![loss],
        vec![pred.clone(), target.clone()],
        Box::new(move |gout| {
            let g = gout[0] / n;
            let dp = pd
                .iter()
                .zip(&td)
                .map(|(&p, &t)| {
                    if p > t {
                        g
                    } else if p < t {
                        -g
                    } else {
                        T::zero()
                    }
                })
                .collect();
            vec![dp, Vec::new()]
        }),
    ))
}

/// Mean binary cross-entropy with probabilities clamped to
/// `[1e-7, 1 - 1e-7]`; clamped positions get zero gradient.
pub fn bce_loss<T: Scalar>(p: &Tensor<T>, y: &Tensor<T>) -> Result<Tensor<T>> {
    if p.shape() != y.shape() {
        return Err(CoreError::ShapeMismatch(format!(
            "bce shapes {:?} vs {:?}",
            p.shape(),
            y.shape()
        )));
    }
    let lo = T::c(1e-7);
    let hi = T::one() - lo;
    let pd = p.to_vec();
    let yd = y.to_vec();
    let n = T::c(pd.len() as f64);
    let mut loss = T::zero();
    for (&pv, &yv) in pd.iter().zip(&yd) {
        let pc = pv.max(lo).min(hi);
        loss = loss - (yv * pc.ln() + (T::one() - yv) * (T::one() - pc).ln());
    }
    loss = loss / n;
    Ok(Tensor::from_op(
        vec![1],
        vec![loss],
        vec![p.clone(), y.clone()],
        Box::new(move |gout| {
            let g = gout[0] / n;
            let dp = pd
                .iter()
                .zip(&yd)
                .map(|(&pv, &yv)| {
                    if pv < lo || pv > hi {
                        T::zero()
                    } else {
                        g * (pv - yv) / (pv * (T::one() - pv))
                    }
                })
                .collect();
            vec![dp, Vec::new()]
        }),
    ))
}

/// Fixed-weight contraction to a scalar; the gradient-check probe.
pub fn dot_const<T: Scalar>(x: &Tensor<T>, weights: &[T]) -> Result<Tensor<T>> {
    if weights.len() != x.len() {
        return Err(CoreError::ShapeMismatch(format!(
            "dot_const weights {} vs {}",
            weights.len(),
            x.len()
        )));
    }
    let value = x
        .node
        .borrow()
        .data
        .iter()
        .zip(weights)
        .fold(T::zero(), |a, (&v, &w)| a + v * w);
    let w: Vec<T> = weights.to_vec();
    Ok(Tensor::from_op(
        vec![1],
        vec![value],
        vec![x.clone()],
        Box::new(move |gout| vec![w.iter().map(|&wv| wv * gout[0]).collect()]),
    ))
}

/// `x W + b` with gradients for all three operands.
pub fn linear<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    add_bias(&matmul(x, w)?, b)
}

/// Projection weights for one attention layer.
pub struct AttentionParams<T: Scalar> {
    pub wq: Tensor<T>,
    pub bq: Tensor<T>,
    pub wk: Tensor<T>,
    pub bk: Tensor<T>,
    pub wv: Tensor<T>,
    pub bv: Tensor<T>,
    pub wo: Tensor<T>,
    pub bo: Tensor<T>,
}

/// Per-head projection, scaled dot-product attention, concat, output
/// projection. `x` is `[B*L, D]`; output keeps that shape.
pub fn multi_head_attention<T: Scalar>(
    x: &Tensor<T>,
    params: &AttentionParams<T>,
    batch: usize,
    seq_len: usize,
    n_heads: usize,
) -> Result<Tensor<T>> {
    let (_, d_model) = shape2(x, "attention input")?;
    if d_model % n_heads != 0 {
        return Err(CoreError::ShapeMismatch(format!(
            "d_model {d_model} not divisible by {n_heads} heads"
        )));
    }
    let q = split_heads(&linear(x, &params.wq, &params.bq)?, batch, seq_len, n_heads)?;
    let k = split_heads(&linear(x, &params.wk, &params.bk)?, batch, seq_len, n_heads)?;
    let v = split_heads(&linear(x, &params.wv, &params.bv)?, batch, seq_len, n_heads)?;
    let attended = merge_heads(&scaled_dot_attention(&q, &k, &v)?)?;
    linear(&attended, &params.wo, &params.bo)
}

/// All tensors of one pre-norm transformer block.
pub struct BlockParams<T: Scalar> {
    pub ln1_gamma: Tensor<T>,
    pub ln1_beta: Tensor<T>,
    pub attn: AttentionParams<T>,
    pub ln2_gamma: Tensor<T>,
    pub ln2_beta: Tensor<T>,
    pub ffn_w1: Tensor<T>,
    pub ffn_b1: Tensor<T>,
    pub ffn_w2: Tensor<T>,
    pub ffn_b2: Tensor<T>,
}

/// Pre-norm residual block:
/// `h = x + drop(MHA(LN(x)))`, then `h + drop(W2 relu(W1 LN(h)))`.
#[allow(clippy::too_many_arguments)]
pub fn transformer_block<T: Scalar, R: Rng + ?Sized>(
    x: &Tensor<T>,
    params: &BlockParams<T>,
    batch: usize,
    seq_len: usize,
    n_heads: usize,
    dropout_p: f64,
    train: bool,
    rng: &mut R,
) -> Result<Tensor<T>> {
    let normed = layer_norm(x, &params.ln1_gamma, &params.ln1_beta)?;
    let attended = multi_head_attention(&normed, &params.attn, batch, seq_len, n_heads)?;
    let h = add(x, &dropout(&attended, dropout_p, train, rng))?;

    let normed2 = layer_norm(&h, &params.ln2_gamma, &params.ln2_beta)?;
    let hidden = relu(&linear(&normed2, &params.ffn_w1, &params.ffn_b1)?);
    let ffn_out = linear(&hidden, &params.ffn_w2, &params.ffn_b2)?;
    add(&h, &dropout(&ffn_out, dropout_p, train, rng))
}
