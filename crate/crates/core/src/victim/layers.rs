use super::{Act, Layer};

pub(super) fn output_shape(layer: &Layer, act: Act) -> Result<Act, String> {
    match (layer, act) {
        (Layer::Conv2d { out_ch, in_ch, .. }, Act::Spatial { c, h, w }) => {
            if *in_ch != c {
                return Err(format!("conv expects {in_ch} input channels, got {c}"));
            }
            Ok(Act::Spatial { c: *out_ch, h, w })
        }
        (Layer::Relu, a) => Ok(a),
        (Layer::MaxPool2, Act::Spatial { c, h, w }) => {
            if h < 2 || w < 2 {
                return Err(format!("cannot pool a {h}x{w} map"));
            }
            Ok(Act::Spatial { c, h: h / 2, w: w / 2 })
        }
        (Layer::GlobalAvgPool, Act::Spatial { c, .. }) => Ok(Act::Flat(c)),
        (Layer::Dense { out, inp, .. }, Act::Flat(n)) => {
            if *inp != n {
                return Err(format!("dense expects {inp} inputs, got {n}"));
            }
            Ok(Act::Flat(*out))
        }
        (Layer::Dense { .. }, Act::Spatial { .. }) => Err("dense layer needs a flat input".into()),
        (_, Act::Flat(_)) => Err("spatial layer after a flat activation".into()),
    }
}

fn spatial(a: Act) -> (usize, usize, usize) {
    match a {
        Act::Spatial { c, h, w } => (c, h, w),
        Act::Flat(n) => (n, 1, 1),
    }
}

/// Valid output range along one axis for kernel offset `k` (0..3).
fn span(k: usize, n: usize) -> std::ops::Range<usize> {
    match k {
        0 => 1..n,
        1 => 0..n,
        _ => 0..n.saturating_sub(1),
    }
}

pub(super) fn forward(layer: &Layer, act: Act, x: &[f64]) -> (Vec<f64>, Vec<u32>) {
    let (c, h, w) = spatial(act);
    match layer {
        Layer::Conv2d {
            out_ch,
            in_ch,
            weights,
            bias,
        } => {
            let mut y = vec![0.0; out_ch * h * w];
            for co in 0..*out_ch {
                let out = &mut y[co * h * w..(co + 1) * h * w];
                out.fill(bias[co] as f64);
                for ci in 0..*in_ch {
                    let inp = &x[ci * h * w..(ci + 1) * h * w];
                    for ky in 0..3 {
                        for kx in 0..3 {
                            let k = weights[((co * in_ch + ci) * 3 + ky) * 3 + kx] as f64;
                            for oy in span(ky, h) {
                                let iy = oy + ky - 1;
                                for ox in span(kx, w) {
                                    out[oy * w + ox] += k * inp[iy * w + ox + kx - 1];
                                }
                            }
                        }
                    }
                }
            }
            (y, vec![])
        }
        Layer::Relu => (x.iter().map(|v| v.max(0.0)).collect(), vec![]),
        Layer::MaxPool2 => {
            let (oh, ow) = (h / 2, w / 2);
            let mut y = Vec::with_capacity(c * oh * ow);
            let mut arg = Vec::with_capacity(c * oh * ow);
            for ch in 0..c {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let cands = [(0, 0), (0, 1), (1, 0), (1, 1)].map(|(dy, dx)| ch * h * w + (2 * oy + dy) * w + 2 * ox + dx);
                        let mut best = cands[0];
                        for &k in &cands[1..] {
                            if x[k] > x[best] {
                                best = k;
                            }
                        }
                        y.push(x[best]);
                        arg.push(best as u32);
                    }
                }
            }
            (y, arg)
        }
        Layer::GlobalAvgPool => {
            let n = (h * w) as f64;
            ((0..c).map(|ch| x[ch * h * w..(ch + 1) * h * w].iter().sum::<f64>() / n).collect(), vec![])
        }
        Layer::Dense { out, inp, weights, bias } => (
            (0..*out)
                .map(|o| {
                    let row = &weights[o * inp..(o + 1) * inp];
                    bias[o] as f64 + row.iter().zip(x).map(|(w, v)| *w as f64 * v).sum::<f64>()
                })
                .collect(),
            vec![],
        ),
    }
}

pub(super) fn backward(layer: &Layer, act: Act, x: &[f64], argmax: &[u32], g: &[f64]) -> Vec<f64> {
    let (c, h, w) = spatial(act);
    match layer {
        Layer::Conv2d {
            out_ch,
            in_ch,
            weights,
            ..
        } => {
            let mut dx = vec![0.0; in_ch * h * w];
            for co in 0..*out_ch {
                let gy = &g[co * h * w..(co + 1) * h * w];
                for ci in 0..*in_ch {
                    let d = &mut dx[ci * h * w..(ci + 1) * h * w];
                    for ky in 0..3 {
                        for kx in 0..3 {
                            let k = weights[((co * in_ch + ci) * 3 + ky) * 3 + kx] as f64;
                            for oy in span(ky, h) {
                                let iy = oy + ky - 1;
                                for ox in span(kx, w) {
                                    d[iy * w + ox + kx - 1] += k * gy[oy * w + ox];
                                }
                            }
                        }
                    }
                }
            }
            dx
        }
        Layer::Relu => x.iter().zip(g).map(|(v, g)| if *v > 0.0 { *g } else { 0.0 }).collect(),
        Layer::MaxPool2 => {
            let mut dx = vec![0.0; x.len()];
            for (k, gv) in argmax.iter().zip(g) {
                dx[*k as usize] += gv;
            }
            dx
        }
        Layer::GlobalAvgPool => {
            let n = (h * w) as f64;
            (0..c).flat_map(|ch| std::iter::repeat_n(g[ch] / n, h * w)).collect()
        }
        Layer::Dense { out, inp, weights, .. } => {
            let mut dx = vec![0.0; *inp];
            for o in 0..*out {
                for (i, d) in dx.iter_mut().enumerate() {
                    *d += weights[o * inp + i] as f64 * g[o];
                }
            }
            dx
        }
    }
}
