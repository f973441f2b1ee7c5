/// RGB texture, row-major with texel `(col, row)` at index `row * width + col`.
/// Values live in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct Texture {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f64>,
}

/// One bilinear tap: texel index and its interpolation weight.
pub type Tap = (u32, f64);

impl Texture {
    pub fn uniform(width: u32, height: u32, rgb: [f64; 3]) -> Self {
        let n = (width * height) as usize;
        Self {
            width,
            height,
            data: rgb.iter().copied().cycle().take(3 * n).collect(),
        }
    }

    pub fn texel_count(&self) -> usize {
        (self.width * self.height) as usize
    }

    pub fn texel(&self, i: u32) -> [f64; 3] {
        let k = 3 * i as usize;
        [self.data[k], self.data[k + 1], self.data[k + 2]]
    }

    /// Mean of one channel over all texels.
    pub fn channel_mean(&self, c: usize) -> f64 {
        self.data.iter().skip(c).step_by(3).sum::<f64>() / self.texel_count() as f64
    }

    pub fn is_valid(&self) -> bool {
        self.data.len() == 3 * self.texel_count()
            && self.data.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v))
    }

    /// Bilinear taps at `uv` with repeat wrapping; texel centers sit at
    /// `(i + 0.5) / width`. The four weights sum to 1.
    pub fn taps(&self, uv: [f64; 2]) -> [Tap; 4] {
        let (w, h) = (self.width as i64, self.height as i64);
        let x = uv[0] * w as f64 - 0.5;
        let y = uv[1] * h as f64 - 0.5;
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let (x0, y0) = (x0 as i64, y0 as i64);
        let col = |c: i64| c.rem_euclid(w);
        let row = |r: i64| r.rem_euclid(h);
        let idx = |r: i64, c: i64| (row(r) * w + col(c)) as u32;
        [
            (idx(y0, x0), (1.0 - fx) * (1.0 - fy)),
            (idx(y0, x0 + 1), fx * (1.0 - fy)),
            (idx(y0 + 1, x0), (1.0 - fx) * fy),
            (idx(y0 + 1, x0 + 1), fx * fy),
        ]
    }

    pub fn sample(&self, uv: [f64; 2]) -> ([f64; 3], [Tap; 4]) {
        let taps = self.taps(uv);
        let mut rgb = [0.0; 3];
        for (i, wgt) in taps {
            let t = self.texel(i);
            for c in 0..3 {
                rgb[c] += wgt * t[c];
            }
        }
        (rgb, taps)
    }
}
