//! Smoothed-noise test images: white noise blurred by repeated box filters,
//! giving spatially correlated intensities.

use scenestat_core::grid::GrayImage;
use scenestat_core::rng;

/// Separable box blur with clamped edges.
fn box_blur(src: &[f64], w: usize, h: usize, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let pass = |src: &[f64], horizontal: bool| -> Vec<f64> {
        let mut out = vec![0.0; src.len()];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for d in -r..=r {
                    let (xx, yy) = if horizontal {
                        ((x as isize + d).clamp(0, w as isize - 1) as usize, y)
                    } else {
                        (x, (y as isize + d).clamp(0, h as isize - 1) as usize)
                    };
                    acc += src[yy * w + xx];
                }
                out[y * w + x] = acc / (2 * r + 1) as f64;
            }
        }
        out
    };
    pass(&pass(src, true), false)
}

/// One `size×size` image from stream `index` of `seed`.
pub fn smoothed_noise(seed: u64, index: u64, size: usize, radius: usize, passes: usize) -> GrayImage {
    let mut r = rng::seeded_stream(seed, index);
    let mut v: Vec<f64> = (0..size * size).map(|_| rng::unit(&mut r)).collect();
    for _ in 0..passes {
        v = box_blur(&v, size, size, radius);
    }
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let pixels = v
        .iter()
        .map(|x| ((x - lo) / span * 255.0).round() as u8)
        .collect();
    GrayImage::new(size, size, pixels).expect("dimensions match")
}
