//! Forward and backward kernels.
//!
//! Feature maps are `[height, width, channels]`. Linear maps act on the last
//! axis, so a `[rows, in]` input is processed row by row.

use crate::{shape_err, NnError, Tensor};

/// `y = x W^T + b` over the last axis of `x`. `weight` is `[out, in]`.
pub fn linear_forward(x: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor, NnError> {
    let (out_dim, in_dim) = matrix_dims(weight, "linear")?;
    if x.last_dim() != in_dim || x.is_empty() || bias.shape() != [out_dim] {
        return Err(shape_err(
            "linear",
            format!("x {:?}, weight {:?}, bias {:?}", x.shape(), weight.shape(), bias.shape()),
        ));
    }
    x.ensure_finite("linear")?;
    let rows = x.len() / in_dim;
    let (w, b) = (weight.data(), bias.data());
    let mut y = Vec::with_capacity(rows * out_dim);
    for xr in x.data().chunks_exact(in_dim) {
        for o in 0..out_dim {
            y.push(b[o] + dot(&w[o * in_dim..(o + 1) * in_dim], xr));
        }
    }
    let mut shape = x.shape().to_vec();
    *shape.last_mut().expect("non-scalar") = out_dim;
    Tensor::from_vec(&shape, y)
}

pub struct LinearGrads {
    pub dx: Tensor,
    pub dweight: Tensor,
    pub dbias: Tensor,
}

pub fn linear_backward(x: &Tensor, weight: &Tensor, dy: &Tensor) -> Result<LinearGrads, NnError> {
    let (out_dim, in_dim) = matrix_dims(weight, "linear_backward")?;
    let rows = x.len() / in_dim.max(1);
    if x.last_dim() != in_dim || dy.last_dim() != out_dim || dy.len() != rows * out_dim {
        return Err(shape_err(
            "linear_backward",
            format!("x {:?}, weight {:?}, dy {:?}", x.shape(), weight.shape(), dy.shape()),
        ));
    }
    dy.ensure_finite("linear_backward")?;
    let w = weight.data();
    let mut dx = vec![0.0; x.len()];
    let mut dw = vec![0.0; weight.len()];
    let mut db = vec![0.0; out_dim];
    for ((xr, dyr), dxr) in x
        .data()
        .chunks_exact(in_dim)
        .zip(dy.data().chunks_exact(out_dim))
        .zip(dx.chunks_exact_mut(in_dim))
    {
        for (o, &g) in dyr.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            db[o] += g;
            axpy(g, xr, &mut dw[o * in_dim..(o + 1) * in_dim]);
            axpy(g, &w[o * in_dim..(o + 1) * in_dim], dxr);
        }
    }
    Ok(LinearGrads {
        dx: Tensor::from_vec(x.shape(), dx)?,
        dweight: Tensor::from_vec(weight.shape(), dw)?,
        dbias: Tensor::vector(db),
    })
}

fn matrix_dims(w: &Tensor, op: &'static str) -> Result<(usize, usize), NnError> {
    match *w.shape() {
        [o, i] if o > 0 && i > 0 => Ok((o, i)),
        _ => Err(shape_err(op, format!("weight must be [out, in], got {:?}", w.shape()))),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn relu_forward(x: &Tensor) -> Tensor {
    map(x, |v| v.max(0.0))
}

/// Gradient of ReLU; the derivative at 0 is taken as 0.
pub fn relu_backward(x: &Tensor, dy: &Tensor) -> Result<Tensor, NnError> {
    zip(x, dy, "relu_backward", |xv, g| if xv > 0.0 { g } else { 0.0 })
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_forward(x: &Tensor) -> Tensor {
    map(x, sigmoid)
}

/// Takes the forward output `y = sigmoid(x)`.
pub fn sigmoid_backward(y: &Tensor, dy: &Tensor) -> Result<Tensor, NnError> {
    zip(y, dy, "sigmoid_backward", |s, g| g * s * (1.0 - s))
}

fn map(x: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::from_vec(x.shape(), x.data().iter().map(|&v| f(v)).collect()).expect("same shape")
}

fn zip(a: &Tensor, b: &Tensor, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor, NnError> {
    if a.shape() != b.shape() {
        return Err(shape_err(op, format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Tensor::from_vec(a.shape(), a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect())
}

/// Column-wise maximum over the rows whose `mask` entry is set.
///
/// Returns the pooled `[features]` vector and, per feature, the winning row.
/// Ties go to the lowest row index. With no present rows the output is the
/// zero vector and every argmax is `None`.
pub fn set_max_pool(points: &Tensor, mask: &[bool]) -> Result<(Tensor, Vec<Option<usize>>), NnError> {
    let (rows, feats) = match *points.shape() {
        [r, f] => (r, f),
        _ => return Err(shape_err("set_max_pool", format!("points must be 2-D, got {:?}", points.shape()))),
    };
    if mask.len() != rows {
        return Err(shape_err("set_max_pool", format!("{} mask entries for {rows} rows", mask.len())));
    }
    let mut out = vec![0.0; feats];
    let mut arg = vec![None; feats];
    for (r, row) in points.data().chunks_exact(feats.max(1)).enumerate() {
        if !mask[r] {
            continue;
        }
        for f in 0..feats {
            match arg[f] {
                Some(_) if row[f] <= out[f] => {}
                _ => {
                    out[f] = row[f];
                    arg[f] = Some(r);
                }
            }
        }
    }
    Ok((Tensor::vector(out), arg))
}

/// Routes `dy` to the argmax rows; all other rows get zero gradient.
pub fn set_max_pool_backward(argmax: &[Option<usize>], rows: usize, dy: &Tensor) -> Result<Tensor, NnError> {
    let feats = argmax.len();
    if dy.len() != feats {
        return Err(shape_err("set_max_pool_backward", format!("dy has {} entries for {feats} features", dy.len())));
    }
    let mut dx = Tensor::zeros(&[rows, feats]);
    for (f, r) in argmax.iter().enumerate() {
        if let Some(r) = *r {
            dx.data_mut()[r * feats + f] += dy.data()[f];
        }
    }
    Ok(dx)
}

/// Cross-entropy of `softmax(logits)` against `label`, with its gradient
/// `softmax - onehot`.
pub fn softmax_cross_entropy(logits: &Tensor, label: usize) -> Result<(f64, Tensor), NnError> {
    let k = logits.len();
    if label >= k {
        return Err(shape_err("softmax_cross_entropy", format!("label {label} with {k} logits")));
    }
    logits.ensure_finite("softmax_cross_entropy")?;
    let probs = softmax(logits.data());
    let max = logits.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.data().iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    let loss = log_sum - logits.data()[label];
    let mut grad = probs;
    grad[label] -= 1.0;
    Ok((loss, Tensor::from_vec(logits.shape(), grad)?))
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn hwc(x: &Tensor, op: &'static str) -> Result<(usize, usize, usize), NnError> {
    match *x.shape() {
        [h, w, c] => Ok((h, w, c)),
        _ => Err(shape_err(op, format!("expected [h, w, c], got {:?}", x.shape()))),
    }
}

fn conv_dims(x: &Tensor, weight: &Tensor, op: &'static str) -> Result<(usize, usize, usize, usize), NnError> {
    let (h, w, cin) = hwc(x, op)?;
    match *weight.shape() {
        [cout, 3, 3, ci] if ci == cin && cout > 0 => Ok((h, w, cin, cout)),
        _ => Err(shape_err(op, format!("weight {:?} for input {:?}", weight.shape(), x.shape()))),
    }
}

/// Reorders `[cout, 3, 3, cin]` weights to `[3, 3, cin, cout]`.
fn weights_tap_major(weight: &[f64], cin: usize, cout: usize) -> Vec<f64> {
    let mut t = vec![0.0; weight.len()];
    for o in 0..cout {
        for tap in 0..9 {
            for i in 0..cin {
                t[(tap * cin + i) * cout + o] = weight[(o * 9 + tap) * cin + i];
            }
        }
    }
    t
}

/// 3x3 convolution, stride 1, zero padding 1. `weight` is
/// `[cout, 3, 3, cin]`; input and output are `[h, w, c]`.
pub fn conv3x3_forward(x: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor, NnError> {
    let (h, w, cin, cout) = conv_dims(x, weight, "conv3x3")?;
    if bias.shape() != [cout] {
        return Err(shape_err("conv3x3", format!("bias {:?} for {cout} channels", bias.shape())));
    }
    x.ensure_finite("conv3x3")?;
    let wt = weights_tap_major(weight.data(), cin, cout);
    let xd = x.data();
    let mut y = vec![0.0; h * w * cout];
    for r in 0..h {
        for c in 0..w {
            let out = &mut y[(r * w + c) * cout..(r * w + c + 1) * cout];
            out.copy_from_slice(bias.data());
            for ky in 0..3 {
                let rr = r as isize + ky as isize - 1;
                if rr < 0 || rr >= h as isize {
                    continue;
                }
                for kx in 0..3 {
                    let cc = c as isize + kx as isize - 1;
                    if cc < 0 || cc >= w as isize {
                        continue;
                    }
                    let base = (rr as usize * w + cc as usize) * cin;
                    let tap = ky * 3 + kx;
                    for i in 0..cin {
                        let xv = xd[base + i];
                        if xv != 0.0 {
                            axpy(xv, &wt[(tap * cin + i) * cout..(tap * cin + i + 1) * cout], out);
                        }
                    }
                }
            }
        }
    }
    Tensor::from_vec(&[h, w, cout], y)
}

pub struct ConvGrads {
    pub dx: Tensor,
    pub dweight: Tensor,
    pub dbias: Tensor,
}

pub fn conv3x3_backward(x: &Tensor, weight: &Tensor, dy: &Tensor) -> Result<ConvGrads, NnError> {
    let (h, w, cin, cout) = conv_dims(x, weight, "conv3x3_backward")?;
    if dy.shape() != [h, w, cout] {
        return Err(shape_err("conv3x3_backward", format!("dy {:?}", dy.shape())));
    }
    dy.ensure_finite("conv3x3_backward")?;
    let wt = weights_tap_major(weight.data(), cin, cout);
    let (xd, gd) = (x.data(), dy.data());
    let mut dx = vec![0.0; x.len()];
    let mut dwt = vec![0.0; wt.len()];
    let mut db = vec![0.0; cout];
    for r in 0..h {
        for c in 0..w {
            let g = &gd[(r * w + c) * cout..(r * w + c + 1) * cout];
            axpy(1.0, g, &mut db);
            for ky in 0..3 {
                let rr = r as isize + ky as isize - 1;
                if rr < 0 || rr >= h as isize {
                    continue;
                }
                for kx in 0..3 {
                    let cc = c as isize + kx as isize - 1;
                    if cc < 0 || cc >= w as isize {
                        continue;
                    }
                    let base = (rr as usize * w + cc as usize) * cin;
                    let tap = ky * 3 + kx;
                    for i in 0..cin {
                        let k = (tap * cin + i) * cout;
                        dx[base + i] += dot(g, &wt[k..k + cout]);
                        axpy(xd[base + i], g, &mut dwt[k..k + cout]);
                    }
                }
            }
        }
    }
    let mut dw = vec![0.0; weight.len()];
    for o in 0..cout {
        for tap in 0..9 {
            for i in 0..cin {
                dw[(o * 9 + tap) * cin + i] = dwt[(tap * cin + i) * cout + o];
            }
        }
    }
    Ok(ConvGrads {
        dx: Tensor::from_vec(x.shape(), dx)?,
        dweight: Tensor::from_vec(weight.shape(), dw)?,
        dbias: Tensor::vector(db),
    })
}

/// 2x2 average pooling with stride 2. A trailing odd row or column is
/// dropped.
pub fn avg_pool2_forward(x: &Tensor) -> Result<Tensor, NnError> {
    let (h, w, c) = hwc(x, "avg_pool2")?;
    let (oh, ow) = (h / 2, w / 2);
    if oh == 0 || ow == 0 {
        return Err(shape_err("avg_pool2", format!("input {:?} too small", x.shape())));
    }
    let xd = x.data();
    let mut y = vec![0.0; oh * ow * c];
    for r in 0..oh {
        for col in 0..ow {
            let out = &mut y[(r * ow + col) * c..(r * ow + col + 1) * c];
            for (dr, dc) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let base = ((2 * r + dr) * w + 2 * col + dc) * c;
                axpy(0.25, &xd[base..base + c], out);
            }
        }
    }
    Tensor::from_vec(&[oh, ow, c], y)
}

pub fn avg_pool2_backward(input_shape: &[usize], dy: &Tensor) -> Result<Tensor, NnError> {
    let (h, w, c) = match *input_shape {
        [h, w, c] => (h, w, c),
        _ => return Err(shape_err("avg_pool2_backward", format!("input shape {input_shape:?}"))),
    };
    let (oh, ow) = (h / 2, w / 2);
    if dy.shape() != [oh, ow, c] {
        return Err(shape_err("avg_pool2_backward", format!("dy {:?} for input {input_shape:?}", dy.shape())));
    }
    let mut dx = vec![0.0; h * w * c];
    for r in 0..oh {
        for col in 0..ow {
            let g = &dy.data()[(r * ow + col) * c..(r * ow + col + 1) * c];
            for (dr, dc) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let base = ((2 * r + dr) * w + 2 * col + dc) * c;
                axpy(0.25, g, &mut dx[base..base + c]);
            }
        }
    }
    Tensor::from_vec(input_shape, dx)
}

/// Mean over the spatial axes: `[h, w, c] -> [c]`.
pub fn global_avg_pool_forward(x: &Tensor) -> Result<Tensor, NnError> {
    let (h, w, c) = hwc(x, "global_avg_pool")?;
    let mut y = vec![0.0; c];
    for px in x.data().chunks_exact(c) {
        axpy(1.0, px, &mut y);
    }
    let n = (h * w) as f64;
    y.iter_mut().for_each(|v| *v /= n);
    Ok(Tensor::vector(y))
}

pub fn global_avg_pool_backward(input_shape: &[usize], dy: &Tensor) -> Result<Tensor, NnError> {
    let (h, w, c) = match *input_shape {
        [h, w, c] if dy.len() == c => (h, w, c),
        _ => {
            return Err(shape_err(
                "global_avg_pool_backward",
                format!("dy {:?} for input {input_shape:?}", dy.shape()),
            ))
        }
    };
    let scale = 1.0 / (h * w) as f64;
    let mut dx = Vec::with_capacity(h * w * c);
    for _ in 0..h * w {
        dx.extend(dy.data().iter().map(|g| g * scale));
    }
    Tensor::from_vec(input_shape, dx)
}

/// Scales channel `k` of an `[h, w, c]` map by `gate[k]`.
pub fn channel_scale_forward(features: &Tensor, gate: &Tensor) -> Result<Tensor, NnError> {
    let (_, _, c) = hwc(features, "channel_scale")?;
    if gate.len() != c {
        return Err(shape_err("channel_scale", format!("{} gate values for {c} channels", gate.len())));
    }
    let g = gate.data();
    let data = features
        .data()
        .chunks_exact(c)
        .flat_map(|px| px.iter().zip(g).map(|(v, s)| v * s))
        .collect();
    Tensor::from_vec(features.shape(), data)
}

/// Returns `(d features, d gate)`.
pub fn channel_scale_backward(features: &Tensor, gate: &Tensor, dy: &Tensor) -> Result<(Tensor, Tensor), NnError> {
    let (_, _, c) = hwc(features, "channel_scale_backward")?;
    if gate.len() != c || dy.shape() != features.shape() {
        return Err(shape_err(
            "channel_scale_backward",
            format!("features {:?}, gate {:?}, dy {:?}", features.shape(), gate.shape(), dy.shape()),
        ));
    }
    let g = gate.data();
    let mut dfeat = Vec::with_capacity(features.len());
    let mut dgate = vec![0.0; c];
    for (px, gy) in features.data().chunks_exact(c).zip(dy.data().chunks_exact(c)) {
        for k in 0..c {
            dfeat.push(gy[k] * g[k]);
            dgate[k] += gy[k] * px[k];
        }
    }
    Ok((Tensor::from_vec(features.shape(), dfeat)?, Tensor::vector(dgate)))
}
