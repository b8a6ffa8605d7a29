//! Grouped 2-D convolution: im2col + matmul primary path, plus a naive
//! direct-loop reference used as the correctness oracle in tests.
//!
//! Group k convolves input channel slice [k*Cin/g, (k+1)*Cin/g) into output
//! slice [k*Cout/g, (k+1)*Cout/g); there is no cross-group mixing.

use crate::error::{Error, Result};
use crate::linalg::{matmul_acc_ld, matmul_nt_acc_ld, matmul_tn_acc_ld};
use crate::tensor::{Scalar, Tensor};

/// Column-tile width: keeps a K x TILE patch block resident in L2 while the
/// kernels sweep the M (or K) dimension over it.
const TILE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub stride: usize,
    pub padding: usize,
    pub groups: usize,
}

impl ConvSpec {
    pub fn new(stride: usize, padding: usize, groups: usize) -> Self {
        ConvSpec { stride, padding, groups }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvGeom {
    pub batch: usize,
    pub cin: usize,
    pub h: usize,
    pub w: usize,
    pub cout: usize,
    pub kh: usize,
    pub kw: usize,
    pub ho: usize,
    pub wo: usize,
    pub stride: usize,
    pub pad: usize,
    pub groups: usize,
    pub cin_g: usize,
    pub cout_g: usize,
}

pub(crate) fn conv_geom(x_shape: &[usize], w_shape: &[usize], spec: ConvSpec) -> Result<ConvGeom> {
    if x_shape.len() != 4 {
        return Err(Error::shape("conv2d", format!("input must be [B,C,H,W], got {:?}", x_shape)));
    }
    if w_shape.len() != 4 {
        return Err(Error::shape(
            "conv2d",
            format!("weight must be [Cout,Cin/g,kH,kW], got {:?}", w_shape),
        ));
    }
    let (batch, cin, h, w) = (x_shape[0], x_shape[1], x_shape[2], x_shape[3]);
    let (cout, wcin, kh, kw) = (w_shape[0], w_shape[1], w_shape[2], w_shape[3]);
    let g = spec.groups;
    if g == 0 {
        return Err(Error::InvalidArgument("groups must be positive".into()));
    }
    if cin % g != 0 || cout % g != 0 {
        return Err(Error::InvalidArgument(format!(
            "channel counts must divide by groups: Cin={cin}, Cout={cout}, groups={g}"
        )));
    }
    if wcin != cin / g {
        return Err(Error::shape(
            "conv2d",
            format!("weight expects Cin/g={} input channels, input has Cin/g={}", wcin, cin / g),
        ));
    }
    if spec.stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    if h + 2 * spec.padding < kh || w + 2 * spec.padding < kw {
        return Err(Error::shape(
            "conv2d",
            format!(
                "spatial underflow: input {h}x{w} with padding {} is smaller than kernel {kh}x{kw}",
                spec.padding
            ),
        ));
    }
    let ho = (h + 2 * spec.padding - kh) / spec.stride + 1;
    let wo = (w + 2 * spec.padding - kw) / spec.stride + 1;
    Ok(ConvGeom {
        batch,
        cin,
        h,
        w,
        cout,
        kh,
        kw,
        ho,
        wo,
        stride: spec.stride,
        pad: spec.padding,
        groups: g,
        cin_g: cin / g,
        cout_g: cout / g,
    })
}

/// Expand one image's group slice into the [Cin/g*kH*kW, Ho*Wo] patch matrix.
fn im2col<E: Scalar>(src: &[E], geo: &ConvGeom, col: &mut [E]) {
    let (h, w, kh, kw, ho, wo, s, pad) = (
        geo.h, geo.w, geo.kh, geo.kw, geo.ho, geo.wo, geo.stride, geo.pad,
    );
    let n = ho * wo;
    debug_assert_eq!(src.len(), geo.cin_g * h * w);
    debug_assert_eq!(col.len(), geo.cin_g * kh * kw * n);
    for c in 0..geo.cin_g {
        let plane = &src[c * h * w..(c + 1) * h * w];
        for ky in 0..kh {
            for kx in 0..kw {
                let row = ((c * kh + ky) * kw + kx) * n;
                for oy in 0..ho {
                    let dst = &mut col[row + oy * wo..row + (oy + 1) * wo];
                    let iy = (oy * s + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        dst.fill(E::ZERO);
                        continue;
                    }
                    let srow = &plane[iy as usize * w..(iy as usize + 1) * w];
                    if s == 1 {
                        // ix = ox + kx - pad; copy the contiguous valid span
                        let shift = kx as isize - pad as isize;
                        let lo = (-shift).max(0) as usize; // first valid ox
                        let hi = ((w as isize - shift).max(0) as usize).min(wo);
                        dst[..lo.min(wo)].fill(E::ZERO);
                        if lo < hi {
                            let start = (lo as isize + shift) as usize;
                            dst[lo..hi].copy_from_slice(&srow[start..start + (hi - lo)]);
                        }
                        dst[hi.max(lo.min(wo))..].fill(E::ZERO);
                    } else {
                        for (ox, d) in dst.iter_mut().enumerate() {
                            let ix = (ox * s + kx) as isize - pad as isize;
                            *d = if ix >= 0 && ix < w as isize {
                                srow[ix as usize]
                            } else {
                                E::ZERO
                            };
                        }
                    }
                }
            }
        }
    }
}

/// Scatter-add the patch-matrix gradient back onto one image's group slice.
fn col2im_acc<E: Scalar>(col: &[E], geo: &ConvGeom, dst: &mut [E]) {
    let (h, w, kh, kw, ho, wo, s, pad) = (
        geo.h, geo.w, geo.kh, geo.kw, geo.ho, geo.wo, geo.stride, geo.pad,
    );
    let n = ho * wo;
    for c in 0..geo.cin_g {
        let plane = &mut dst[c * h * w..(c + 1) * h * w];
        for ky in 0..kh {
            for kx in 0..kw {
                let row = ((c * kh + ky) * kw + kx) * n;
                for oy in 0..ho {
                    let iy = (oy * s + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src = &col[row + oy * wo..row + (oy + 1) * wo];
                    let drow = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                    for (ox, &v) in src.iter().enumerate() {
                        let ix = (ox * s + kx) as isize - pad as isize;
                        if ix >= 0 && ix < w as isize {
                            drow[ix as usize] += v;
                        }
                    }
                }
            }
        }
    }
}

fn is_pointwise(geo: &ConvGeom) -> bool {
    geo.kh == 1 && geo.kw == 1 && geo.stride == 1 && geo.pad == 0
}

pub fn conv2d_forward<E: Scalar>(
    x: &Tensor<E>,
    weight: &Tensor<E>,
    bias: Option<&Tensor<E>>,
    spec: ConvSpec,
) -> Result<Tensor<E>> {
    let geo = conv_geom(x.shape(), weight.shape(), spec)?;
    if let Some(b) = bias {
        if b.shape() != [geo.cout] {
            return Err(Error::shape(
                "conv2d",
                format!("bias shape {:?} does not match Cout={}", b.shape(), geo.cout),
            ));
        }
    }
    let n = geo.ho * geo.wo;
    let k = geo.cin_g * geo.kh * geo.kw;
    let mut out = Tensor::zeros(&[geo.batch, geo.cout, geo.ho, geo.wo]);
    let mut col = vec![E::ZERO; k * n];
    let xd = x.data();
    let wd = weight.data();
    let od = out.data_mut();
    for b in 0..geo.batch {
        for g in 0..geo.groups {
            let src =
                &xd[(b * geo.cin + g * geo.cin_g) * geo.h * geo.w..(b * geo.cin + (g + 1) * geo.cin_g) * geo.h * geo.w];
            let wg = &wd[g * geo.cout_g * k..(g + 1) * geo.cout_g * k];
            let og = &mut od[(b * geo.cout + g * geo.cout_g) * n..(b * geo.cout + (g + 1) * geo.cout_g) * n];
            let patches: &[E] = if is_pointwise(&geo) {
                src
            } else {
                im2col(src, &geo, &mut col);
                &col
            };
            let mut n0 = 0;
            while n0 < n {
                let nt = TILE.min(n - n0);
                matmul_acc_ld(wg, k, &patches[n0..], n, &mut og[n0..], n, geo.cout_g, k, nt);
                n0 += nt;
            }
        }
        if let Some(bt) = bias {
            let bd = bt.data();
            for c in 0..geo.cout {
                let orow = &mut od[(b * geo.cout + c) * n..(b * geo.cout + c + 1) * n];
                for v in orow {
                    *v += bd[c];
                }
            }
        }
    }
    Ok(out)
}

pub struct ConvGrads<E: Scalar> {
    pub dx: Option<Tensor<E>>,
    pub dweight: Tensor<E>,
    pub dbias: Option<Tensor<E>>,
}

pub fn conv2d_backward<E: Scalar>(
    x: &Tensor<E>,
    weight: &Tensor<E>,
    dy: &Tensor<E>,
    spec: ConvSpec,
    need_dx: bool,
    need_dbias: bool,
) -> Result<ConvGrads<E>> {
    let geo = conv_geom(x.shape(), weight.shape(), spec)?;
    let n = geo.ho * geo.wo;
    let k = geo.cin_g * geo.kh * geo.kw;
    debug_assert_eq!(dy.shape(), [geo.batch, geo.cout, geo.ho, geo.wo]);

    let mut dx = if need_dx { Some(Tensor::zeros(x.shape())) } else { None };
    let mut dweight = Tensor::zeros(weight.shape());
    let mut dbias = if need_dbias { Some(Tensor::zeros(&[geo.cout])) } else { None };

    let mut col = vec![E::ZERO; k * n];
    let mut dcol = vec![E::ZERO; k * n];
    let xd = x.data();
    let wd = weight.data();
    let dyd = dy.data();
    let pointwise = is_pointwise(&geo);

    for b in 0..geo.batch {
        for g in 0..geo.groups {
            let x_lo = (b * geo.cin + g * geo.cin_g) * geo.h * geo.w;
            let x_hi = (b * geo.cin + (g + 1) * geo.cin_g) * geo.h * geo.w;
            let src = &xd[x_lo..x_hi];
            let wg = &wd[g * geo.cout_g * k..(g + 1) * geo.cout_g * k];
            let dyg = &dyd[(b * geo.cout + g * geo.cout_g) * n..(b * geo.cout + (g + 1) * geo.cout_g) * n];

            // dW_g += dY_g * col^T
            let dwg = &mut dweight.data_mut()[g * geo.cout_g * k..(g + 1) * geo.cout_g * k];
            let patches: &[E] = if pointwise {
                src
            } else {
                im2col(src, &geo, &mut col);
                &col
            };
            let mut n0 = 0;
            while n0 < n {
                let nt = TILE.min(n - n0);
                matmul_nt_acc_ld(&dyg[n0..], n, &patches[n0..], n, dwg, k, geo.cout_g, k, nt);
                n0 += nt;
            }

            if let Some(dx) = dx.as_mut() {
                let dxg = &mut dx.data_mut()[x_lo..x_hi];
                if pointwise {
                    let mut n0 = 0;
                    while n0 < n {
                        let nt = TILE.min(n - n0);
                        matmul_tn_acc_ld(wg, k, &dyg[n0..], n, &mut dxg[n0..], n, geo.cout_g, k, nt);
                        n0 += nt;
                    }
                } else {
                    dcol.fill(E::ZERO);
                    let mut n0 = 0;
                    while n0 < n {
                        let nt = TILE.min(n - n0);
                        matmul_tn_acc_ld(wg, k, &dyg[n0..], n, &mut dcol[n0..], n, geo.cout_g, k, nt);
                        n0 += nt;
                    }
                    col2im_acc(&dcol, &geo, dxg);
                }
            }
        }
        if let Some(db) = dbias.as_mut() {
            let dbd = db.data_mut();
            for c in 0..geo.cout {
                let row = &dyd[(b * geo.cout + c) * n..(b * geo.cout + c + 1) * n];
                let mut s = E::ZERO;
                for &v in row {
                    s += v;
                }
                dbd[c] += s;
            }
        }
    }
    Ok(ConvGrads { dx, dweight, dbias })
}

/// Direct-loop grouped convolution, the correctness oracle. Same contract as
/// [`conv2d_forward`], no shared code with the im2col path.
pub fn conv2d_naive<E: Scalar>(
    x: &Tensor<E>,
    weight: &Tensor<E>,
    bias: Option<&Tensor<E>>,
    spec: ConvSpec,
) -> Result<Tensor<E>> {
    let geo = conv_geom(x.shape(), weight.shape(), spec)?;
    let mut out = Tensor::zeros(&[geo.batch, geo.cout, geo.ho, geo.wo]);
    let xd = x.data();
    let wd = weight.data();
    let od = out.data_mut();
    for b in 0..geo.batch {
        for co in 0..geo.cout {
            let g = co / geo.cout_g;
            let base_ci = g * geo.cin_g;
            for oy in 0..geo.ho {
                for ox in 0..geo.wo {
                    let mut acc = match bias {
                        Some(bt) => bt.data()[co],
                        None => E::ZERO,
                    };
                    for ci in 0..geo.cin_g {
                        for ky in 0..geo.kh {
                            let iy = (oy * geo.stride + ky) as isize - geo.pad as isize;
                            if iy < 0 || iy >= geo.h as isize {
                                continue;
                            }
                            for kx in 0..geo.kw {
                                let ix = (ox * geo.stride + kx) as isize - geo.pad as isize;
                                if ix < 0 || ix >= geo.w as isize {
                                    continue;
                                }
                                let xv = xd[((b * geo.cin + base_ci + ci) * geo.h + iy as usize) * geo.w
                                    + ix as usize];
                                let wv = wd[((co * geo.cin_g + ci) * geo.kh + ky) * geo.kw + kx];
                                acc = acc + xv * wv;
                            }
                        }
                    }
                    od[((b * geo.cout + co) * geo.ho + oy) * geo.wo + ox] = acc;
                }
            }
        }
    }
    Ok(out)
}
