//! Light-field containers, sampling geometry, and the view-interpolation
//! drivers.
//!
//! A light field is stored per channel as a 4-D array indexed
//! `(s, t, y, x)`: camera row, camera column, pixel row, pixel column.
//! Horizontal-parallax-only (HPO) sets have a single camera row.
//!
//! The drivers slice the coarse views into epipolar-plane images (one per
//! image scanline), inpaint the missing rows with
//! [`reconstruct_epi`](crate::reconstruct::reconstruct_epi), and reassemble
//! the dense views. The camera axis is padded up to the next multiple of
//! `2^scales` so the dyadic filter cascade operates on a friendly grid;
//! padded rows carry no measurements (forcing replicated data there would
//! contradict the measured parallax) and are cropped away afterwards, so the
//! output never contains extrapolated views beyond the last input camera.

use crate::reconstruct::{reconstruct_epi, IterationParams, SamplingMask};
use crate::shearlet::{build_system, ShearletConfig, ShearletSystem};
use crate::{Error, Result};
use ndarray::{Array2, Array4, ArrayView2};
use rayon::prelude::*;

/// Multi-channel light field. All channels share one camera grid
/// `(n_s, n_t)`; image dimensions may differ per channel (subsampled chroma
/// planes keep their own resolution).
#[derive(Debug, Clone, PartialEq)]
pub struct LightField {
    channels: Vec<Array4<f64>>,
}

impl LightField {
    /// Builds a light field from per-channel `(s, t, y, x)` arrays.
    pub fn new(channels: Vec<Array4<f64>>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Params("light field needs at least one channel".into()));
        }
        let (n_s, n_t, _, _) = channels[0].dim();
        for (c, ch) in channels.iter().enumerate() {
            let dim = ch.dim();
            if dim.0 == 0 || dim.1 == 0 || dim.2 == 0 || dim.3 == 0 {
                return Err(Error::Params(format!(
                    "channel {c} has an empty axis: {dim:?}"
                )));
            }
            if (dim.0, dim.1) != (n_s, n_t) {
                return Err(Error::Params(format!(
                    "channel {c} has camera grid {:?}, expected {:?}",
                    (dim.0, dim.1),
                    (n_s, n_t)
                )));
            }
        }
        Ok(LightField { channels })
    }

    /// Builds an HPO light field (one camera row) from per-channel view
    /// stacks shaped `(t, y, x)`.
    pub fn from_hpo_views(channels: Vec<ndarray::Array3<f64>>) -> Result<Self> {
        let channels = channels
            .into_iter()
            .map(|ch| {
                let (t, y, x) = ch.dim();
                ch.into_shape_with_order((1, t, y, x))
                    .map_err(|e| Error::Params(format!("bad view stack: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        LightField::new(channels)
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// `(n_s, n_t, height, width)` of channel 0. Channels always share the
    /// camera grid; use [`Self::channel_dims`] for per-channel image sizes.
    pub fn dim(&self) -> (usize, usize, usize, usize) {
        self.channels[0].dim()
    }

    /// Image `(height, width)` of one channel.
    pub fn channel_dims(&self, c: usize) -> (usize, usize) {
        let (_, _, h, w) = self.channels[c].dim();
        (h, w)
    }

    /// Extracts one channel as its own light field.
    pub fn single_channel(&self, c: usize) -> LightField {
        LightField {
            channels: vec![self.channels[c].clone()],
        }
    }

    pub fn is_hpo(&self) -> bool {
        self.dim().0 == 1
    }

    pub fn channel(&self, c: usize) -> &Array4<f64> {
        &self.channels[c]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut Array4<f64> {
        &mut self.channels[c]
    }

    pub fn view(&self, c: usize, s: usize, t: usize) -> ArrayView2<'_, f64> {
        self.channels[c]
            .index_axis(ndarray::Axis(0), s)
            .index_axis_move(ndarray::Axis(0), t)
    }

    /// Horizontal EPI for camera row `s`, image scanline `y`:
    /// shape `(n_t, width)` — camera index along axis 0.
    pub fn extract_epi_h(&self, c: usize, s: usize, y: usize) -> Array2<f64> {
        let ch = &self.channels[c];
        let (_, n_t, _, w) = ch.dim();
        Array2::from_shape_fn((n_t, w), |(t, x)| ch[(s, t, y, x)])
    }

    pub fn insert_epi_h(&mut self, c: usize, s: usize, y: usize, epi: &Array2<f64>) {
        let ch = &mut self.channels[c];
        let (_, n_t, _, w) = ch.dim();
        assert_eq!(epi.dim(), (n_t, w), "EPI shape mismatch");
        for t in 0..n_t {
            for x in 0..w {
                ch[(s, t, y, x)] = epi[(t, x)];
            }
        }
    }

    /// Vertical EPI for camera column `t`, image pixel column `x`:
    /// shape `(n_s, height)` — camera index along axis 0.
    pub fn extract_epi_v(&self, c: usize, t: usize, x: usize) -> Array2<f64> {
        let ch = &self.channels[c];
        let (n_s, _, h, _) = ch.dim();
        Array2::from_shape_fn((n_s, h), |(s, y)| ch[(s, t, y, x)])
    }

    pub fn insert_epi_v(&mut self, c: usize, t: usize, x: usize, epi: &Array2<f64>) {
        let ch = &mut self.channels[c];
        let (n_s, _, h, _) = ch.dim();
        assert_eq!(epi.dim(), (n_s, h), "EPI shape mismatch");
        for s in 0..n_s {
            for y in 0..h {
                ch[(s, t, y, x)] = epi[(s, y)];
            }
        }
    }
}

/// Pinhole-array geometry used for sampling plans. `focal_px` is the focal
/// length expressed in pixels; depths and camera steps share one scene unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraGeometry {
    pub focal_px: f64,
    pub z_min: f64,
}

impl CameraGeometry {
    pub fn new(focal_px: f64, z_min: f64) -> Result<Self> {
        if !(focal_px > 0.0 && focal_px.is_finite()) {
            return Err(Error::Params(format!("focal length {focal_px} must be > 0")));
        }
        if !(z_min > 0.0 && z_min.is_finite()) {
            return Err(Error::Params(format!("minimum depth {z_min} must be > 0")));
        }
        Ok(CameraGeometry { focal_px, z_min })
    }

    /// Largest camera step (scene units) that keeps the disparity between
    /// adjacent views at or below `max_disparity_px` for every depth
    /// `z >= z_min`: `Δt = (z_min / f) · Δv`.
    pub fn camera_step_bound(&self, max_disparity_px: f64) -> f64 {
        self.z_min / self.focal_px * max_disparity_px
    }

    /// Disparity in pixels between adjacent views spaced `camera_step` apart
    /// for a point at depth `z`: `Δv = (f / z) · Δt`. Nearer points move
    /// more.
    pub fn disparity_px(&self, z: f64, camera_step: f64) -> f64 {
        self.focal_px / z * camera_step
    }
}

/// Scale count for a maximal disparity of `d_max` pixels between adjacent
/// coarse views: `⌈log2 d_max⌉`, at least 1.
pub fn scales_for_disparity(d_max: usize) -> u32 {
    assert!(d_max >= 1);
    let mut scales = usize::BITS - (d_max - 1).leading_zeros(); // ceil(log2)
    if scales == 0 {
        scales = 1;
    }
    scales
}

/// Rounds the dense camera count up to the next multiple of `2^scales`.
fn padded_rows(n_dense: usize, scales: u32) -> usize {
    let block = 1usize << scales;
    n_dense.div_ceil(block) * block
}

/// Options shared by the view-interpolation drivers.
#[derive(Debug, Clone)]
pub struct DriverOptions {
    /// Directional scale count; `None` derives `⌈log2 d_max⌉`.
    pub scales: Option<u32>,
    pub shearlet: ShearletConfig,
    pub iteration: IterationParams,
    /// Write one solver log line per iteration to standard output
    /// (`iter=… lambda=… alpha=… residual=…`). Lines from concurrently
    /// reconstructed EPIs interleave; no cross-EPI ordering is guaranteed.
    pub log_iterations: bool,
}

impl Default for DriverOptions {
    fn default() -> Self {
        DriverOptions {
            scales: None,
            // Inpainting needs the cone-weighted duals; the exact-inverse
            // normalization reconstructs poorly when rows are missing.
            shearlet: ShearletConfig::cone_weighted(),
            iteration: IterationParams::default(),
            log_iterations: false,
        }
    }
}

/// Per-EPI completion report passed to the driver progress callback.
#[derive(Debug, Clone, Copy)]
pub struct EpiReport {
    pub channel: usize,
    /// Camera row (HPO pass) or camera column (vertical pass).
    pub slice: usize,
    /// Image scanline (horizontal EPIs) or pixel column (vertical EPIs).
    pub scanline: usize,
    pub final_residual: f64,
}

pub type ProgressFn<'a> = &'a (dyn Fn(&EpiReport) + Sync);

/// Densifies the camera axis of each horizontal EPI of an HPO light field:
/// `m` coarse views spaced `d_max` pixels of disparity apart become
/// `(m−1)·d_max + 1` views with at most 1 px of disparity between neighbors.
///
/// `d_max = 1` simply returns a copy (the input is already dense).
pub fn reconstruct_hpo(
    coarse: &LightField,
    d_max: usize,
    options: &DriverOptions,
    progress: Option<ProgressFn>,
) -> Result<LightField> {
    if !coarse.is_hpo() {
        return Err(Error::Params(
            "HPO driver expects a single camera row; use the full-parallax driver".into(),
        ));
    }
    let dense = densify_axis_t(coarse, d_max, options, progress)?;
    Ok(dense)
}

/// Densifies the `t` (camera-column) axis of every camera row. Helper shared
/// by [`reconstruct_hpo`] and the first pass of [`reconstruct_full_parallax`].
fn densify_axis_t(
    coarse: &LightField,
    d_max: usize,
    options: &DriverOptions,
    progress: Option<ProgressFn>,
) -> Result<LightField> {
    let (n_s, m, _, _) = coarse.dim();
    if d_max == 0 {
        return Err(Error::Params("d_max must be >= 1".into()));
    }
    if d_max == 1 {
        return Ok(coarse.clone());
    }
    if m < 2 {
        return Err(Error::Params(format!(
            "need at least 2 views along the camera axis, got {m}"
        )));
    }
    let scales = options.scales.unwrap_or_else(|| scales_for_disparity(d_max));
    let n_dense = (m - 1) * d_max + 1;
    let n_pad = padded_rows(n_dense, scales);
    let mask = SamplingMask::build_mask(n_pad, d_max, m)?;

    // Channels can have different widths (subsampled chroma); the system is
    // rebuilt only when the width changes.
    let mut cached: Option<(usize, ShearletSystem)> = None;
    let mut out_channels = Vec::with_capacity(coarse.n_channels());
    for c in 0..coarse.n_channels() {
        let (h, w) = coarse.channel_dims(c);
        if cached.as_ref().map(|(cw, _)| *cw) != Some(w) {
            cached = Some((w, build_system(n_pad, w, scales, &options.shearlet)?));
        }
        let system = &cached.as_ref().unwrap().1;
        let mut dense_ch = Array4::zeros((n_s, n_dense, h, w));
        for s in 0..n_s {
            // One EPI per scanline, reconstructed independently in parallel.
            let epis: Vec<(usize, Array2<f64>)> = (0..h)
                .into_par_iter()
                .map(|y| -> Result<(usize, Array2<f64>)> {
                    let mut meas = Array2::zeros((n_pad, w));
                    for (i, &row) in mask.measured_rows().iter().enumerate() {
                        let src = coarse.view(c, s, i);
                        meas.row_mut(row).assign(&src.row(y));
                    }
                    let mut final_residual = 0.0;
                    let log_lines = options.log_iterations;
                    let mut track = |log: &crate::reconstruct::IterationLog| {
                        final_residual = log.residual;
                        if log_lines {
                            // One println per line keeps each record atomic
                            // even when scanlines are solved in parallel.
                            println!("{}", log.render());
                        }
                    };
                    let full = reconstruct_epi(
                        &meas,
                        &mask,
                        system,
                        &options.iteration,
                        Some(&mut track),
                    )
                    .map_err(|e| Error::Epi {
                        channel: c,
                        slice: s,
                        scanline: y,
                        source: Box::new(e),
                    })?;
                    if let Some(cb) = progress {
                        cb(&EpiReport {
                            channel: c,
                            slice: s,
                            scanline: y,
                            final_residual,
                        });
                    }
                    Ok((y, full.slice(ndarray::s![..n_dense, ..]).to_owned()))
                })
                .collect::<Result<Vec<_>>>()?;
            for (y, epi) in epis {
                for t in 0..n_dense {
                    for x in 0..w {
                        dense_ch[(s, t, y, x)] = epi[(t, x)];
                    }
                }
            }
        }
        out_channels.push(dense_ch);
    }
    LightField::new(out_channels)
}

/// Densifies a full-parallax camera grid in two passes: first every camera
/// row along `t`, then every camera column of the intermediate result along
/// `s` (using vertical EPIs). An `m_s × m_t` grid with `d_max` px of
/// disparity between adjacent coarse views becomes
/// `((m_s−1)·d_max+1) × ((m_t−1)·d_max+1)`.
pub fn reconstruct_full_parallax(
    coarse: &LightField,
    d_max: usize,
    options: &DriverOptions,
    progress: Option<ProgressFn>,
) -> Result<LightField> {
    let (m_s, _, _, _) = coarse.dim();
    if m_s < 2 {
        return Err(Error::Params(
            "full-parallax driver expects at least 2 camera rows".into(),
        ));
    }
    // Pass 1: densify t within each camera row.
    let inter = densify_axis_t(coarse, d_max, options, progress)?;
    // Pass 2: densify s within each camera column, via the transposed view.
    let swapped = transpose_cameras(&inter);
    let dense_swapped = densify_axis_t(&swapped, d_max, options, progress)?;
    Ok(transpose_cameras(&dense_swapped))
}

/// Swaps the camera axes and the pixel axes together, so vertical EPIs of
/// the input become horizontal EPIs of the output.
fn transpose_cameras(lf: &LightField) -> LightField {
    let channels = (0..lf.n_channels())
        .map(|c| {
            let ch = lf.channel(c);
            let (n_s, n_t, h, w) = ch.dim();
            Array4::from_shape_fn((n_t, n_s, w, h), |(t, s, x, y)| ch[(s, t, y, x)])
        })
        .collect();
    LightField::new(channels).expect("transpose preserves validity")
}

/// Synthetic-focus rendering: every view is shifted by `disparity` pixels per
/// camera step toward the grid center (bilinear interpolation, circular
/// wrap — consistent with the reconstruction's circular image model) and the
/// shifted views are averaged. Content at that disparity aligns and stays
/// sharp; other depths blur. Returns one image per channel.
pub fn refocus(lf: &LightField, disparity: f64) -> Vec<Array2<f64>> {
    let (n_s, n_t, _, _) = lf.dim();
    let s_c = (n_s as f64 - 1.0) / 2.0;
    let t_c = (n_t as f64 - 1.0) / 2.0;
    let scale = 1.0 / (n_s * n_t) as f64;
    (0..lf.n_channels())
        .map(|c| {
            let (h, w) = lf.channel_dims(c);
            let mut acc = Array2::zeros((h, w));
            for s in 0..n_s {
                for t in 0..n_t {
                    let dy = (s as f64 - s_c) * disparity;
                    let dx = (t as f64 - t_c) * disparity;
                    let view = lf.view(c, s, t);
                    for y in 0..h {
                        for x in 0..w {
                            acc[(y, x)] += sample_bilinear_wrap(&view, y as f64 + dy, x as f64 + dx);
                        }
                    }
                }
            }
            acc.mapv_into(|v| v * scale)
        })
        .collect()
}

fn sample_bilinear_wrap(img: &ArrayView2<f64>, y: f64, x: f64) -> f64 {
    let (h, w) = img.dim();
    let y0 = y.floor();
    let x0 = x.floor();
    let fy = y - y0;
    let fx = x - x0;
    let iy = (y0 as i64).rem_euclid(h as i64) as usize;
    let ix = (x0 as i64).rem_euclid(w as i64) as usize;
    let iy1 = (iy + 1) % h;
    let ix1 = (ix + 1) % w;
    (1.0 - fy) * ((1.0 - fx) * img[(iy, ix)] + fx * img[(iy, ix1)])
        + fy * ((1.0 - fx) * img[(iy1, ix)] + fx * img[(iy1, ix1)])
}

/// Mean squared error between two equally shaped images.
pub fn mse(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim(), "MSE needs equal shapes");
    let n = (a.len()) as f64;
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n
}

/// Peak signal-to-noise ratio `10·log10(peak² / MSE)` in dB; identical
/// inputs give `+∞`.
pub fn psnr(a: &ArrayView2<f64>, b: &ArrayView2<f64>, peak: f64) -> f64 {
    assert!(peak > 0.0, "peak must be > 0");
    let m = mse(a, b);
    if m == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / m).log10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    /// Vertical-stripe HPO scene: a Gaussian stripe at `pos` in view 0 moves
    /// `step_px` pixels per view (circular). All scanlines identical.
    fn stripe_views(n_t: usize, h: usize, w: usize, pos: f64, step_px: f64) -> Array3<f64> {
        let sigma = 1.5;
        Array3::from_shape_fn((n_t, h, w), |(t, _y, x)| {
            let c = (pos + step_px * t as f64).rem_euclid(w as f64);
            let mut d = (x as f64 - c).abs();
            d = d.min(w as f64 - d);
            20.0 + 180.0 * (-0.5 * (d / sigma).powi(2)).exp()
        })
    }

    #[test]
    fn geometry_bound_and_disparity_are_consistent() {
        let g = CameraGeometry::new(50.0, 2.0).unwrap();
        let step = g.camera_step_bound(1.0);
        assert!((step - 0.04).abs() < 1e-15);
        // At the nearest depth, that step produces exactly 1 px of disparity…
        assert!((g.disparity_px(2.0, step) - 1.0).abs() < 1e-12);
        // …and farther points move strictly less.
        assert!(g.disparity_px(5.0, step) < 1.0);
        assert!(CameraGeometry::new(0.0, 1.0).is_err());
        assert!(CameraGeometry::new(50.0, -1.0).is_err());
    }

    #[test]
    fn scale_count_follows_ceil_log2() {
        assert_eq!(scales_for_disparity(1), 1);
        assert_eq!(scales_for_disparity(2), 1);
        assert_eq!(scales_for_disparity(3), 2);
        assert_eq!(scales_for_disparity(4), 2);
        assert_eq!(scales_for_disparity(5), 3);
        assert_eq!(scales_for_disparity(16), 4);
        assert_eq!(scales_for_disparity(17), 5);
    }

    #[test]
    fn padding_rounds_up_to_dyadic_multiples() {
        assert_eq!(padded_rows(241, 4), 256);
        assert_eq!(padded_rows(256, 4), 256);
        assert_eq!(padded_rows(9, 1), 10);
        assert_eq!(padded_rows(17, 2), 20);
    }

    #[test]
    fn epi_extract_insert_round_trip() {
        let ch = Array4::from_shape_fn((2, 3, 4, 5), |(s, t, y, x)| {
            (s * 1000 + t * 100 + y * 10 + x) as f64
        });
        let mut lf = LightField::new(vec![ch]).unwrap();
        let epi_h = lf.extract_epi_h(0, 1, 2);
        assert_eq!(epi_h.dim(), (3, 5));
        assert_eq!(epi_h[(2, 4)], 1224.0);
        let epi_v = lf.extract_epi_v(0, 2, 3);
        assert_eq!(epi_v.dim(), (2, 4));
        assert_eq!(epi_v[(1, 3)], 1233.0);
        let before = lf.clone();
        let h = epi_h.clone();
        lf.insert_epi_h(0, 1, 2, &h);
        let v = epi_v.clone();
        lf.insert_epi_v(0, 2, 3, &v);
        assert_eq!(lf, before, "reinserting extracted EPIs is a no-op");
    }

    #[test]
    fn channel_grids_must_match_but_image_sizes_may_differ() {
        // Same camera grid, different image sizes (subsampled chroma): fine.
        let y = Array4::zeros((1, 2, 4, 8));
        let u = Array4::zeros((1, 2, 2, 4));
        let lf = LightField::new(vec![y, u]).unwrap();
        assert_eq!(lf.channel_dims(0), (4, 8));
        assert_eq!(lf.channel_dims(1), (2, 4));
        let only_u = lf.single_channel(1);
        assert_eq!(only_u.n_channels(), 1);
        assert_eq!(only_u.channel_dims(0), (2, 4));
        // Different camera grids: rejected.
        let a = Array4::zeros((1, 2, 3, 4));
        let b = Array4::zeros((1, 3, 3, 4));
        assert!(LightField::new(vec![a, b]).is_err());
        assert!(LightField::new(vec![]).is_err());
    }

    #[test]
    fn psnr_golden_values() {
        let a = Array2::from_elem((8, 8), 10.0);
        let ident = psnr(&a.view(), &a.view(), 255.0);
        assert!(ident.is_infinite() && ident > 0.0);
        let b = a.mapv(|v| v + 1.0);
        // Uniform error of 1 at peak 255: 20·log10(255).
        let got = psnr(&a.view(), &b.view(), 255.0);
        assert!((got - 48.130803608679374).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn refocus_at_true_integer_disparity_is_exact() {
        // Stripe moving exactly 1 px per view; 9 views, odd count keeps the
        // reference view integral.
        let views = stripe_views(9, 4, 64, 7.3, 1.0);
        let lf = LightField::from_hpo_views(vec![views]).unwrap();
        let sharp = refocus(&lf, 1.0);
        let center = lf.view(0, 0, 4).to_owned();
        let err = (&sharp[0] - &center)
            .mapv(f64::abs)
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "aligned refocus should reproduce the center view, err {err}");

        // Refocusing at the wrong disparity must blur: contrast collapses.
        let blurred = refocus(&lf, -1.0);
        let spread = |img: &Array2<f64>| {
            let mean = img.mean().unwrap();
            img.mapv(|v| (v - mean) * (v - mean)).mean().unwrap()
        };
        assert!(
            spread(&sharp[0]) > 3.0 * spread(&blurred[0]),
            "sharp {} vs blurred {}",
            spread(&sharp[0]),
            spread(&blurred[0])
        );
    }

    #[test]
    fn hpo_driver_densifies_a_moving_stripe() {
        // Truth: 9 dense views, stripe moves 1 px/view. Coarse: every 2nd
        // view (5 views, d_max = 2).
        let dense_truth = stripe_views(9, 6, 32, 11.0, 1.0);
        let coarse_views = Array3::from_shape_fn((5, 6, 32), |(i, y, x)| {
            dense_truth[(2 * i, y, x)]
        });
        let coarse = LightField::from_hpo_views(vec![coarse_views]).unwrap();
        let mut opts = DriverOptions::default();
        opts.iteration.n_iter = 40;
        let dense = reconstruct_hpo(&coarse, 2, &opts, None).unwrap();
        assert_eq!(dense.dim(), (1, 9, 6, 32));

        // Measured views are reproduced exactly.
        for i in 0..5 {
            let got = dense.view(0, 0, 2 * i);
            let want = coarse.view(0, 0, i);
            let err = (&got.to_owned() - &want)
                .mapv(f64::abs)
                .iter()
                .cloned()
                .fold(0.0, f64::max);
            assert!(err < 1e-9, "measured view {i} drifted by {err}");
        }

        // Interpolated views match the truth well.
        let mut worst = f64::INFINITY;
        for t in 0..9 {
            let got = dense.view(0, 0, t).to_owned();
            let want = Array2::from_shape_fn((6, 32), |(y, x)| dense_truth[(t, y, x)]);
            let p = psnr(&got.view(), &want.view(), 200.0);
            worst = worst.min(p);
        }
        assert!(worst > 25.0, "worst per-view PSNR {worst:.2} dB");
    }

    #[test]
    fn hpo_driver_passthrough_and_validation() {
        let views = stripe_views(3, 2, 16, 3.0, 1.0);
        let lf = LightField::from_hpo_views(vec![views]).unwrap();
        let out = reconstruct_hpo(&lf, 1, &DriverOptions::default(), None).unwrap();
        assert_eq!(&out, &lf, "d_max = 1 is a passthrough");
        assert!(reconstruct_hpo(&lf, 0, &DriverOptions::default(), None).is_err());

        let single = LightField::from_hpo_views(vec![stripe_views(1, 2, 16, 3.0, 1.0)]).unwrap();
        assert!(reconstruct_hpo(&single, 2, &DriverOptions::default(), None).is_err());
    }

    #[test]
    fn full_parallax_driver_densifies_both_axes() {
        // Truth: 5×5 dense grid, dot moves (1, 1) px per dense view step.
        let (h, w) = (16, 16);
        let truth = |s: usize, t: usize| -> Array2<f64> {
            Array2::from_shape_fn((h, w), |(y, x)| {
                let cy = (4.0 + s as f64).rem_euclid(h as f64);
                let cx = (5.0 + t as f64).rem_euclid(w as f64);
                let mut dy = (y as f64 - cy).abs();
                dy = dy.min(h as f64 - dy);
                let mut dx = (x as f64 - cx).abs();
                dx = dx.min(w as f64 - dx);
                30.0 + 150.0 * (-0.5 * ((dy * dy + dx * dx) / 2.25)).exp()
            })
        };
        let mut coarse_ch = Array4::zeros((3, 3, h, w));
        for s in 0..3 {
            for t in 0..3 {
                let v = truth(2 * s, 2 * t);
                for y in 0..h {
                    for x in 0..w {
                        coarse_ch[(s, t, y, x)] = v[(y, x)];
                    }
                }
            }
        }
        let coarse = LightField::new(vec![coarse_ch]).unwrap();
        let mut opts = DriverOptions::default();
        opts.iteration.n_iter = 30;
        let dense = reconstruct_full_parallax(&coarse, 2, &opts, None).unwrap();
        assert_eq!(dense.dim(), (5, 5, h, w));

        let mut worst = f64::INFINITY;
        for s in 0..5 {
            for t in 0..5 {
                let got = dense.view(0, s, t).to_owned();
                let want = truth(s, t);
                worst = worst.min(psnr(&got.view(), &want.view(), 180.0));
            }
        }
        assert!(worst > 20.0, "worst per-view PSNR {worst:.2} dB");
    }

    #[test]
    fn camera_transpose_is_an_involution() {
        let ch = Array4::from_shape_fn((2, 3, 4, 5), |(s, t, y, x)| {
            (s * 1000 + t * 100 + y * 10 + x) as f64
        });
        let lf = LightField::new(vec![ch]).unwrap();
        let back = transpose_cameras(&transpose_cameras(&lf));
        assert_eq!(back, lf);
        let tr = transpose_cameras(&lf);
        assert_eq!(tr.dim(), (3, 2, 5, 4));
        assert_eq!(tr.channel(0)[(1, 0, 2, 3)], lf.channel(0)[(0, 1, 3, 2)]);
    }
}
