//! Pixel resampling shared by augmentation and resizing.

/// Bilinear sample at continuous `(x, y)`; pixels outside the grid read as 0.
pub(crate) fn bilinear_zero(data: &[f64], height: usize, width: usize, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (x0, y0) = (x0 as isize, y0 as isize);
    let px = |r: isize, c: isize| -> f64 {
        if r < 0 || c < 0 || r >= height as isize || c >= width as isize {
            0.0
        } else {
            data[r as usize * width + c as usize]
        }
    };
    let top = px(y0, x0) * (1.0 - fx) + px(y0, x0 + 1) * fx;
    let bottom = px(y0 + 1, x0) * (1.0 - fx) + px(y0 + 1, x0 + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Bilinear sample with coordinates clamped to the grid (edge replication).
pub(crate) fn bilinear_clamped(data: &[f64], height: usize, width: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (width - 1) as f64);
    let y = y.clamp(0.0, (height - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
    let top = lerp(data[y0 * width + x0], data[y0 * width + x1], fx);
    let bottom = lerp(data[y1 * width + x0], data[y1 * width + x1], fx);
    lerp(top, bottom, fy)
}

/// Nearest-neighbor sample; outside the grid reads as 0.
pub(crate) fn nearest_zero(data: &[u8], height: usize, width: usize, x: f64, y: f64) -> u8 {
    let c = x.round();
    let r = y.round();
    if r < 0.0 || c < 0.0 || r >= height as f64 || c >= width as f64 {
        0
    } else {
        data[r as usize * width + c as usize]
    }
}

/// Normalized 1-D Gaussian kernel of radius `ceil(3 sigma)`.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with edge replication.
pub(crate) fn gaussian_blur(data: &[f64], height: usize, width: usize, sigma: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; data.len()];
    for r in 0..height {
        for c in 0..width {
            tmp[r * width + c] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * data[r * width + clamp(c as isize + i as isize - radius, width)])
                .sum();
        }
    }
    let mut out = vec![0.0; data.len()];
    for r in 0..height {
        for c in 0..width {
            out[r * width + c] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * tmp[clamp(r as isize + i as isize - radius, height) * width + c])
                .sum();
        }
    }
    out
}
