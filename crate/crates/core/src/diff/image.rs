pub fn clamp01_forward(img: &[f64]) -> Vec<f64> {
    img.iter().map(|v| v.clamp(0.0, 1.0)).collect()
}

/// Passes `g` where the pre-clamp value lies in `[0, 1]`, boundaries included.
pub fn clamp01_backward(img: &[f64], g: &[f64]) -> Vec<f64> {
    img.iter()
        .zip(g)
        .map(|(v, g)| if (0.0..=1.0).contains(v) { *g } else { 0.0 })
        .collect()
}

/// Interleaved `h × w × 3` to planar `3 × h × w`.
pub fn hwc_to_chw(img: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; img.len()];
    for p in 0..h * w {
        for c in 0..3 {
            out[c * h * w + p] = img[3 * p + c];
        }
    }
    out
}

pub fn chw_to_hwc(img: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; img.len()];
    for p in 0..h * w {
        for c in 0..3 {
            out[3 * p + c] = img[c * h * w + p];
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct AxisTap {
    i0: usize,
    i1: usize,
    w1: f64,
}

fn axis_taps(src: usize, dst: usize) -> Vec<AxisTap> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = s.floor() as usize;
            AxisTap {
                i0,
                i1: (i0 + 1).min(src - 1),
                w1: s - i0 as f64,
            }
        })
        .collect()
}

/// Bilinear resize of interleaved RGB images, aligned on pixel centers and
/// clamped at the borders. [`Resize::backward`] is the exact transpose of
/// [`Resize::forward`].
#[derive(Clone, Debug, PartialEq)]
pub struct Resize {
    pub in_h: usize,
    pub in_w: usize,
    pub out_h: usize,
    pub out_w: usize,
    rows: Vec<AxisTap>,
    cols: Vec<AxisTap>,
}

impl Resize {
    /// # Panics
    /// If any size is zero.
    pub fn new(in_h: usize, in_w: usize, out_h: usize, out_w: usize) -> Self {
        assert!(in_h > 0 && in_w > 0 && out_h > 0 && out_w > 0, "resize sizes must be positive");
        Self {
            in_h,
            in_w,
            out_h,
            out_w,
            rows: axis_taps(in_h, out_h),
            cols: axis_taps(in_w, out_w),
        }
    }

    fn for_each_tap(&self, mut f: impl FnMut(usize, usize, f64)) {
        for (y, r) in self.rows.iter().enumerate() {
            for (x, c) in self.cols.iter().enumerate() {
                let dst = y * self.out_w + x;
                let taps = [
                    (r.i0, c.i0, (1.0 - r.w1) * (1.0 - c.w1)),
                    (r.i0, c.i1, (1.0 - r.w1) * c.w1),
                    (r.i1, c.i0, r.w1 * (1.0 - c.w1)),
                    (r.i1, c.i1, r.w1 * c.w1),
                ];
                for (sy, sx, w) in taps {
                    if w != 0.0 {
                        f(dst, sy * self.in_w + sx, w);
                    }
                }
            }
        }
    }

    pub fn forward(&self, img: &[f64]) -> Vec<f64> {
        assert_eq!(img.len(), 3 * self.in_h * self.in_w, "resize input shape");
        let mut out = vec![0.0; 3 * self.out_h * self.out_w];
        self.for_each_tap(|d, s, w| {
            for c in 0..3 {
                out[3 * d + c] += w * img[3 * s + c];
            }
        });
        out
    }

    pub fn backward(&self, g: &[f64]) -> Vec<f64> {
        assert_eq!(g.len(), 3 * self.out_h * self.out_w, "resize gradient shape");
        let mut out = vec![0.0; 3 * self.in_h * self.in_w];
        self.for_each_tap(|d, s, w| {
            for c in 0..3 {
                out[3 * s + c] += w * g[3 * d + c];
            }
        });
        out
    }
}
