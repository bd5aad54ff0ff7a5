use super::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RenderMapping {
    /// `(v − min) / (max − min)`.
    Linear,
    /// `(log₁₀ max(v, floor) − log₁₀ floor) / (log₁₀ max − log₁₀ floor)`.
    Log { floor: f64 },
}

/// 16-bit grayscale image, row 0 at the top (largest imaginary part).
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u16>,
    /// Text describing the mapping and the pictured region.
    pub sidecar: String,
}

impl Raster {
    /// Binary portable graymap, maxval 65535, big-endian samples.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        for p in &self.pixels {
            out.extend_from_slice(&p.to_be_bytes());
        }
        out
    }
}

/// One-parameter fields are drawn directly; two-parameter fields are summed
/// over the σ₁ axes and drawn over σ₂. Masked border rows and columns are
/// cropped; other masked cells are black.
pub fn render(field: &ScalarField, mapping: RenderMapping) -> Raster {
    let (plane, nx, ny, b, projected) = if field.q() == 1 {
        (field.values.clone(), field.shape[0], field.shape[1], field.boxes[0], false)
    } else {
        let inner = field.shape[0] * field.shape[1];
        let plane = field
            .values
            .chunks(inner)
            .map(|c| {
                let valid: Vec<f64> = c.iter().copied().filter(|v| v.is_finite()).collect();
                if valid.is_empty() {
                    f64::NAN
                } else {
                    valid.iter().sum()
                }
            })
            .collect();
        (plane, field.shape[2], field.shape[3], field.boxes[1], true)
    };
    let col_valid = |i: usize| (0..ny).any(|j| plane[i + nx * j].is_finite());
    let row_valid = |j: usize| (0..nx).any(|i| plane[i + nx * j].is_finite());
    let (i0, i1) = match ((0..nx).find(|&i| col_valid(i)), (0..nx).rev().find(|&i| col_valid(i))) {
        (Some(a), Some(b)) => (a, b + 1),
        _ => (0, 0),
    };
    let (j0, j1) = match ((0..ny).find(|&j| row_valid(j)), (0..ny).rev().find(|&j| row_valid(j))) {
        (Some(a), Some(b)) => (a, b + 1),
        _ => (0, 0),
    };
    let (width, height) = (i1 - i0, j1 - j0);
    let shown: Vec<f64> =
        (j0..j1).flat_map(|j| (i0..i1).map(move |i| (i, j))).map(|(i, j)| plane[i + nx * j]).filter(|v| v.is_finite()).collect();
    let min = shown.iter().copied().fold(f64::INFINITY, f64::min);
    let max = shown.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi, transform): (f64, f64, Box<dyn Fn(f64) -> f64>) = match mapping {
        RenderMapping::Linear => (min, max, Box::new(|v| v)),
        RenderMapping::Log { floor } => {
            (floor.log10(), max.max(floor).log10(), Box::new(move |v: f64| v.max(floor).log10()))
        }
    };
    let mut pixels = Vec::with_capacity(width * height);
    for j in (j0..j1).rev() {
        for i in i0..i1 {
            let v = plane[i + nx * j];
            let t = if v.is_finite() && hi > lo { ((transform(v) - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
            pixels.push((t * 65535.0).round() as u16);
        }
    }
    let node = |i: usize, j: usize| b.node(i, j, nx, ny);
    let (a, z) = if width > 0 && height > 0 { (node(i0, j0), node(i1 - 1, j1 - 1)) } else { (node(0, 0), node(0, 0)) };
    let mut sidecar = String::new();
    sidecar.push_str(&format!("width {width}\nheight {height}\n"));
    match mapping {
        RenderMapping::Linear => sidecar.push_str("mapping linear\n"),
        RenderMapping::Log { floor } => sidecar.push_str(&format!("mapping log10\nfloor {floor:e}\n")),
    }
    sidecar.push_str(&format!("value_min {min:e}\nvalue_max {max:e}\ngray = 65535 * clamp((t(v) - {lo:e}) / ({hi:e} - {lo:e}), 0, 1)\n"));
    sidecar.push_str(&format!("region {:?} {:?} {:?} {:?}\n", a.re, z.re, a.im, z.im));
    sidecar.push_str("orientation top row is the largest imaginary part\n");
    if projected {
        sidecar.push_str("projection sum over sigma1, image over sigma2\n");
    }
    Raster { width, height, pixels, sidecar }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::Rect;

    #[test]
    fn crops_masked_border() {
        let mut f = ScalarField::from_fn(vec![Rect::new(0.0, 1.0, 0.0, 1.0)], vec![6, 4], |p| Some(p[0].re + p[0].im));
        for k in 0..f.len() {
            let idx = f.unflat(k);
            if idx[0] == 0 || idx[0] == 5 || idx[1] == 0 || idx[1] == 3 {
                f.values[k] = f64::NAN;
            }
        }
        let r = render(&f, RenderMapping::Linear);
        assert_eq!((r.width, r.height), (4, 2));
        let pgm = r.to_pgm();
        assert!(pgm.starts_with(b"P5\n4 2\n65535\n"));
        assert_eq!(pgm.len(), b"P5\n4 2\n65535\n".len() + 16);
        // bottom-left is the smallest value, top-right the largest
        assert_eq!(r.pixels[4], 0);
        assert_eq!(r.pixels[3], 65535);
    }

    #[test]
    fn log_mapping_floors() {
        let f = ScalarField::from_fn(vec![Rect::new(0.0, 1.0, 0.0, 0.0)], vec![3, 1], |p| Some([0.0, 1e-3, 1.0][(p[0].re * 2.0) as usize]));
        let r = render(&f, RenderMapping::Log { floor: 1e-6 });
        assert_eq!(r.pixels, vec![0, 32768, 65535]);
        assert!(r.sidecar.contains("mapping log10"));
    }
}
