//! Spatial kernels with reverse-mode gradients.
//!
//! Every reduction accumulates in f64 with a fixed (channel, ky, kx)
//! order per output element, identical to a naive per-pixel loop. The
//! fast path only restructures the iteration into whole-plane sweeps, so
//! outputs are bit-identical to the reference loops and independent of
//! the rayon thread count (each output plane is owned by one task).

use rayon::prelude::*;

use crate::tensor4::Tensor4;

/// acc[y][x] += src[y+dy][x+dx] * wv over the valid intersection.
#[inline]
fn add_shifted(acc: &mut [f64], src: &[f64], h: usize, w: usize, dy: i64, dx: i64, wv: f64) {
    let y0 = (-dy).max(0) as usize;
    let y1 = ((h as i64 - dy).min(h as i64)).max(0) as usize;
    let x0 = (-dx).max(0) as usize;
    let x1 = ((w as i64 - dx).min(w as i64)).max(0) as usize;
    if y0 >= y1 || x0 >= x1 {
        return;
    }
    for y in y0..y1 {
        let src_off = ((y as i64 + dy) as usize) * w + ((x0 as i64 + dx) as usize);
        let src_row = &src[src_off..src_off + (x1 - x0)];
        let acc_row = &mut acc[y * w + x0..y * w + x1];
        for (a, s) in acc_row.iter_mut().zip(src_row) {
            *a += s * wv;
        }
    }
}

/// Row-major dot of `a[y][x] * b[y+dy][x+dx]` over the valid intersection.
#[inline]
fn dot_shifted(a: &[f64], b: &[f64], h: usize, w: usize, dy: i64, dx: i64) -> f64 {
    let y0 = (-dy).max(0) as usize;
    let y1 = ((h as i64 - dy).min(h as i64)).max(0) as usize;
    let x0 = (-dx).max(0) as usize;
    let x1 = ((w as i64 - dx).min(w as i64)).max(0) as usize;
    let mut acc = 0.0;
    if y0 >= y1 || x0 >= x1 {
        return acc;
    }
    for y in y0..y1 {
        let b_off = ((y as i64 + dy) as usize) * w + ((x0 as i64 + dx) as usize);
        let a_row = &a[y * w + x0..y * w + x1];
        let b_row = &b[b_off..b_off + (x1 - x0)];
        for (av, bv) in a_row.iter().zip(b_row) {
            acc += av * bv;
        }
    }
    acc
}

/// Same-size convolution: kernel `k` in {1, 3}, zero padding `k/2`.
/// Weights are `[co, ci, k, k]`, bias `[co]`.
pub fn conv2d_forward(input: &Tensor4, weight: &[f64], bias: &[f64], co: usize, k: usize) -> Tensor4 {
    let (n, ci, h, w) = input.shape();
    debug_assert_eq!(weight.len(), co * ci * k * k);
    debug_assert_eq!(bias.len(), co);
    let pad = (k / 2) as i64;
    let mut out = Tensor4::zeros(n, co, h, w);
    let plane = h * w;
    out.data
        .par_chunks_mut(plane)
        .enumerate()
        .for_each(|(idx, acc)| {
            let nn = idx / co;
            let c_out = idx % co;
            acc.fill(bias[c_out]);
            for c_in in 0..ci {
                let src = input.plane(nn, c_in);
                let w_base = (c_out * ci + c_in) * k * k;
                for ky in 0..k {
                    for kx in 0..k {
                        let wv = weight[w_base + ky * k + kx];
                        add_shifted(acc, src, h, w, ky as i64 - pad, kx as i64 - pad, wv);
                    }
                }
            }
        });
    out
}

/// Gradients of [`conv2d_forward`]: input gradient, weight gradient, bias
/// gradient.
pub fn conv2d_backward(
    input: &Tensor4,
    weight: &[f64],
    dout: &Tensor4,
    co: usize,
    k: usize,
) -> (Tensor4, Vec<f64>, Vec<f64>) {
    let (n, ci, h, w) = input.shape();
    let pad = (k / 2) as i64;
    let plane = h * w;

    let mut din = Tensor4::zeros(n, ci, h, w);
    din.data
        .par_chunks_mut(plane)
        .enumerate()
        .for_each(|(idx, acc)| {
            let nn = idx / ci;
            let c_in = idx % ci;
            for c_out in 0..co {
                let src = dout.plane(nn, c_out);
                let w_base = (c_out * ci + c_in) * k * k;
                for ky in 0..k {
                    for kx in 0..k {
                        let wv = weight[w_base + ky * k + kx];
                        add_shifted(acc, src, h, w, pad - ky as i64, pad - kx as i64, wv);
                    }
                }
            }
        });

    let mut dw = vec![0.0f64; co * ci * k * k];
    dw.par_chunks_mut(ci * k * k)
        .enumerate()
        .for_each(|(c_out, chunk)| {
            for c_in in 0..ci {
                for ky in 0..k {
                    for kx in 0..k {
                        let mut acc = 0.0;
                        for nn in 0..n {
                            acc += dot_shifted(
                                dout.plane(nn, c_out),
                                input.plane(nn, c_in),
                                h,
                                w,
                                ky as i64 - pad,
                                kx as i64 - pad,
                            );
                        }
                        chunk[(c_in * k + ky) * k + kx] = acc;
                    }
                }
            }
        });

    let mut db = vec![0.0f64; co];
    db.par_iter_mut().enumerate().for_each(|(c_out, slot)| {
        let mut acc = 0.0;
        for nn in 0..n {
            for v in dout.plane(nn, c_out) {
                acc += v;
            }
        }
        *slot = acc;
    });

    (din, dw, db)
}

/// Stride-2 transposed convolution with 3x3 kernels that exactly doubles
/// the spatial dims. Weights are `[ci, co, 3, 3]`, bias `[co]`.
pub fn convt2d_forward(input: &Tensor4, weight: &[f64], bias: &[f64], co: usize) -> Tensor4 {
    let (n, ci, h, w) = input.shape();
    debug_assert_eq!(weight.len(), ci * co * 9);
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = Tensor4::zeros(n, co, oh, ow);
    let plane = oh * ow;
    out.data
        .par_chunks_mut(plane)
        .enumerate()
        .for_each(|(idx, acc)| {
            let nn = idx / co;
            let c_out = idx % co;
            acc.fill(bias[c_out]);
            for c_in in 0..ci {
                let src = input.plane(nn, c_in);
                let w_base = (c_in * co + c_out) * 9;
                for ky in 0..3i64 {
                    for kx in 0..3i64 {
                        let wv = weight[w_base as usize + (ky * 3 + kx) as usize];
                        // out[2 iy + ky - 1][2 ix + kx - 1] += in[iy][ix] * wv
                        for iy in 0..h {
                            let oy = 2 * iy as i64 + ky - 1;
                            if oy < 0 || oy >= oh as i64 {
                                continue;
                            }
                            let src_row = &src[iy * w..(iy + 1) * w];
                            let acc_row =
                                &mut acc[(oy as usize) * ow..(oy as usize) * ow + ow];
                            for (ix, &sv) in src_row.iter().enumerate() {
                                let ox = 2 * ix as i64 + kx - 1;
                                if ox < 0 || ox >= ow as i64 {
                                    continue;
                                }
                                acc_row[ox as usize] += sv * wv;
                            }
                        }
                    }
                }
            }
        });
    out
}

/// Gradients of [`convt2d_forward`].
pub fn convt2d_backward(
    input: &Tensor4,
    weight: &[f64],
    dout: &Tensor4,
    co: usize,
) -> (Tensor4, Vec<f64>, Vec<f64>) {
    let (n, ci, h, w) = input.shape();
    let (_, _, oh, ow) = dout.shape();
    let plane = h * w;

    let mut din = Tensor4::zeros(n, ci, h, w);
    din.data
        .par_chunks_mut(plane)
        .enumerate()
        .for_each(|(idx, acc)| {
            let nn = idx / ci;
            let c_in = idx % ci;
            for c_out in 0..co {
                let src = dout.plane(nn, c_out);
                let w_base = (c_in * co + c_out) * 9;
                for ky in 0..3i64 {
                    for kx in 0..3i64 {
                        let wv = weight[w_base as usize + (ky * 3 + kx) as usize];
                        for iy in 0..h as i64 {
                            let oy = 2 * iy + ky - 1;
                            if oy < 0 || oy >= oh as i64 {
                                continue;
                            }
                            for ix in 0..w as i64 {
                                let ox = 2 * ix + kx - 1;
                                if ox < 0 || ox >= ow as i64 {
                                    continue;
                                }
                                acc[(iy as usize) * w + ix as usize] +=
                                    src[(oy as usize) * ow + ox as usize] * wv;
                            }
                        }
                    }
                }
            }
        });

    let mut dw = vec![0.0f64; ci * co * 9];
    dw.par_chunks_mut(co * 9)
        .enumerate()
        .for_each(|(c_in, chunk)| {
            for c_out in 0..co {
                for ky in 0..3i64 {
                    for kx in 0..3i64 {
                        let mut acc = 0.0;
                        for nn in 0..n {
                            let src = input.plane(nn, c_in);
                            let gout = dout.plane(nn, c_out);
                            for iy in 0..h as i64 {
                                let oy = 2 * iy + ky - 1;
                                if oy < 0 || oy >= oh as i64 {
                                    continue;
                                }
                                for ix in 0..w as i64 {
                                    let ox = 2 * ix + kx - 1;
                                    if ox < 0 || ox >= ow as i64 {
                                        continue;
                                    }
                                    acc += src[(iy as usize) * w + ix as usize]
                                        * gout[(oy as usize) * ow + ox as usize];
                                }
                            }
                        }
                        chunk[(c_out * 3 + ky as usize) * 3 + kx as usize] = acc;
                    }
                }
            }
        });

    let mut db = vec![0.0f64; co];
    db.par_iter_mut().enumerate().for_each(|(c_out, slot)| {
        let mut acc = 0.0;
        for nn in 0..n {
            for v in dout.plane(nn, c_out) {
                acc += v;
            }
        }
        *slot = acc;
    });

    (din, dw, db)
}

/// 2x2 max pooling, stride 2. Ties keep the first element in scan order
/// (top-left, top-right, bottom-left, bottom-right). Returns the pooled
/// tensor and the per-output argmax index (0..=3) for routing gradients.
pub fn maxpool_forward(input: &Tensor4) -> (Tensor4, Vec<u8>) {
    let (n, c, h, w) = input.shape();
    assert!(h % 2 == 0 && w % 2 == 0, "pooling needs even dims, got {h}x{w}");
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor4::zeros(n, c, oh, ow);
    let mut aux = vec![0u8; n * c * oh * ow];
    let plane = oh * ow;
    out.data
        .par_chunks_mut(plane)
        .zip(aux.par_chunks_mut(plane))
        .enumerate()
        .for_each(|(idx, (dst, marks))| {
            let nn = idx / c;
            let cc = idx % c;
            let src = input.plane(nn, cc);
            for y in 0..oh {
                for x in 0..ow {
                    let base = (2 * y) * w + 2 * x;
                    let cands = [src[base], src[base + 1], src[base + w], src[base + w + 1]];
                    let mut best = 0usize;
                    for (i, &v) in cands.iter().enumerate().skip(1) {
                        if v > cands[best] {
                            best = i;
                        }
                    }
                    dst[y * ow + x] = cands[best];
                    marks[y * ow + x] = best as u8;
                }
            }
        });
    (out, aux)
}

/// Route pooled gradients back to the argmax positions.
pub fn maxpool_backward(dout: &Tensor4, aux: &[u8], in_h: usize, in_w: usize) -> Tensor4 {
    let (n, c, oh, ow) = dout.shape();
    let mut din = Tensor4::zeros(n, c, in_h, in_w);
    let plane_in = in_h * in_w;
    let plane_out = oh * ow;
    din.data
        .par_chunks_mut(plane_in)
        .enumerate()
        .for_each(|(idx, dst)| {
            let src = &dout.data[idx * plane_out..(idx + 1) * plane_out];
            let marks = &aux[idx * plane_out..(idx + 1) * plane_out];
            for y in 0..oh {
                for x in 0..ow {
                    let m = marks[y * ow + x] as usize;
                    let (dy, dx) = (m / 2, m % 2);
                    dst[(2 * y + dy) * in_w + 2 * x + dx] = src[y * ow + x];
                }
            }
        });
    din
}

pub fn relu_forward(input: &Tensor4) -> Tensor4 {
    let mut out = input.clone();
    out.data.iter_mut().for_each(|v| {
        if *v < 0.0 {
            *v = 0.0;
        }
    });
    out
}

/// ReLU gradient; the subgradient at exactly 0 is 0.
pub fn relu_backward(input: &Tensor4, dout: &Tensor4) -> Tensor4 {
    let mut din = dout.clone();
    for (d, &x) in din.data.iter_mut().zip(input.data.iter()) {
        if x <= 0.0 {
            *d = 0.0;
        }
    }
    din
}

/// Concatenate along the channel axis.
pub fn concat_forward(parts: &[&Tensor4]) -> Tensor4 {
    let (n, _, h, w) = parts[0].shape();
    let total_c: usize = parts.iter().map(|p| p.c).sum();
    for p in parts {
        assert_eq!((p.n, p.h, p.w), (n, h, w), "concat spatial dims");
    }
    let mut out = Tensor4::zeros(n, total_c, h, w);
    let plane = h * w;
    for nn in 0..n {
        let mut c_off = 0;
        for p in parts {
            for cc in 0..p.c {
                let dst = out.plane_mut(nn, c_off + cc);
                dst.copy_from_slice(p.plane(nn, cc));
            }
            c_off += p.c;
        }
    }
    let _ = plane;
    out
}

/// Split a concatenated gradient back into per-part gradients.
pub fn concat_backward(dout: &Tensor4, channels: &[usize]) -> Vec<Tensor4> {
    let (n, _, h, w) = dout.shape();
    let mut outs: Vec<Tensor4> = channels.iter().map(|&c| Tensor4::zeros(n, c, h, w)).collect();
    for nn in 0..n {
        let mut c_off = 0;
        for (part, &c) in outs.iter_mut().zip(channels) {
            for cc in 0..c {
                part.plane_mut(nn, cc).copy_from_slice(dout.plane(nn, c_off + cc));
            }
            c_off += c;
        }
    }
    outs
}
