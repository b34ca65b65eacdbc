//! Minimal log-log line plots rendered to PNG.

use std::path::Path;

use image::{Rgb, RgbImage};

use super::HarnessError;

const WIDTH: u32 = 640;
const HEIGHT: u32 = 480;
const MARGIN: u32 = 48;
const PALETTE: [[u8; 3]; 6] = [[31, 119, 180], [214, 39, 40], [44, 160, 44], [148, 103, 189], [255, 127, 14], [23, 190, 207]];

fn line(img: &mut RgbImage, a: (i64, i64), b: (i64, i64), color: Rgb<u8>) {
    let (mut x, mut y) = a;
    let (dx, dy) = ((b.0 - x).abs(), -(b.1 - y).abs());
    let (sx, sy) = (if x < b.0 { 1 } else { -1 }, if y < b.1 { 1 } else { -1 });
    let mut err = dx + dy;
    loop {
        if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
        if (x, y) == b {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn marker(img: &mut RgbImage, c: (i64, i64), color: Rgb<u8>) {
    for d in -3..=3 {
        line(img, (c.0 - 3, c.1 + d), (c.0 + 3, c.1 + d), color);
    }
}

/// Draws each `(x, y)` series as a polyline with markers on log-log axes,
/// with tick marks at integer decades. Non-positive points are skipped.
pub fn plot_loglog(path: &Path, series: &[(Vec<f64>, Vec<f64>)]) -> Result<(), HarnessError> {
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|(xs, ys)| {
            xs.iter()
                .zip(ys)
                .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
                .map(|(x, y)| (x.log10(), y.log10()))
                .collect()
        })
        .collect();
    let all: Vec<&(f64, f64)> = pts.iter().flatten().collect();
    if all.is_empty() {
        return Err(HarnessError::Plot("no positive data to plot".into()));
    }
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = all.iter().map(|p| f(p)).fold(f64::INFINITY, f64::min);
        let hi = all.iter().map(|p| f(p)).fold(f64::NEG_INFINITY, f64::max);
        let pad = ((hi - lo) * 0.1).max(0.05);
        (lo - pad, hi + pad)
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let (w, h) = ((WIDTH - 2 * MARGIN) as f64, (HEIGHT - 2 * MARGIN) as f64);
    let px = |x: f64, y: f64| {
        let u = MARGIN as f64 + (x - x0) / (x1 - x0) * w;
        let v = (HEIGHT - MARGIN) as f64 - (y - y0) / (y1 - y0) * h;
        (u.round() as i64, v.round() as i64)
    };

    let mut img = RgbImage::from_pixel(WIDTH, HEIGHT, Rgb([255, 255, 255]));
    let black = Rgb([0, 0, 0]);
    let (l, r, t, b) = (MARGIN as i64, (WIDTH - MARGIN) as i64, MARGIN as i64, (HEIGHT - MARGIN) as i64);
    line(&mut img, (l, b), (r, b), black);
    line(&mut img, (l, b), (l, t), black);
    line(&mut img, (l, t), (r, t), black);
    line(&mut img, (r, b), (r, t), black);
    for d in (x0.ceil() as i64)..=(x1.floor() as i64) {
        let (u, _) = px(d as f64, y0);
        line(&mut img, (u, b), (u, b - 8), black);
    }
    for d in (y0.ceil() as i64)..=(y1.floor() as i64) {
        let (_, v) = px(x0, d as f64);
        line(&mut img, (l, v), (l + 8, v), black);
    }
    for (i, s) in pts.iter().enumerate() {
        let color = Rgb(PALETTE[i % PALETTE.len()]);
        for w in s.windows(2) {
            line(&mut img, px(w[0].0, w[0].1), px(w[1].0, w[1].1), color);
        }
        for p in s {
            marker(&mut img, px(p.0, p.1), color);
        }
    }
    img.save(path).map_err(|e| HarnessError::Plot(e.to_string()))
}
