//! Evaluation harness: leave-N-out experiments, PSNR reports, synthetic
//! ground-truth generation, and difference maps.
//!
//! The synthetic generator is the project's ground-truth oracle: it renders
//! densely sampled line-EPIs (Lambertian lines over a seeded textured
//! background plane) whose reconstruction quality can be measured exactly.

use crate::dataset::ChannelLayout;
use crate::lightfield::{
    psnr, reconstruct_full_parallax, reconstruct_hpo, scales_for_disparity, DriverOptions,
    LightField,
};
use crate::reconstruct::IterationParams;
use crate::{Error, Result};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// How multichannel PSNR is aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsnrMode {
    /// PSNR per channel, then the arithmetic mean (default).
    ChannelAverage,
    /// PSNR of the luma plane only (Rec. 601 weights for RGB; channel 0 for
    /// YUV).
    Luma,
}

impl PsnrMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PsnrMode::ChannelAverage => "channel-average",
            PsnrMode::Luma => "luma",
        }
    }
}

/// Everything an evaluation run needs besides the data itself.
#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub dataset: String,
    pub options: DriverOptions,
    pub psnr_mode: PsnrMode,
    pub layout: ChannelLayout,
    /// Peak sample value for PSNR (e.g. 255 for 8-bit data).
    pub peak: f64,
}

/// Reproducibility snapshot recorded into every report.
#[derive(Debug, Clone)]
pub struct ConfigSnapshot {
    pub iteration: IterationParams,
    pub scales: u32,
    pub d_max_effective: usize,
    pub psnr_mode: &'static str,
}

/// Result of a leave-N-out run.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub dataset: String,
    /// `(view index, PSNR dB)` for exactly the held-out views, in view
    /// order. Grid sets use row-major view indices.
    pub per_view: Vec<(usize, f64)>,
    /// Arithmetic mean of the finite per-view values (a perfectly
    /// reconstructed view reports `+∞` and is excluded from the mean).
    pub mean_psnr: f64,
    pub config: ConfigSnapshot,
    pub wall_time_seconds: f64,
}

impl EvalReport {
    /// A trivial run holds out nothing (leave-1-out).
    pub fn is_trivial(&self) -> bool {
        self.per_view.is_empty()
    }

    /// CSV rendering: header `view_index,psnr_db`, one row per held-out
    /// view, final row `mean,<value>`. Values use round-trippable float
    /// formatting so totals recompute from rows exactly.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("view_index,psnr_db\n");
        for (idx, db) in &self.per_view {
            out.push_str(&format!("{idx},{db}\n"));
        }
        out.push_str(&format!("mean,{}\n", self.mean_psnr));
        out
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())
            .map_err(|e| Error::io(path.to_owned(), e))
    }
}

fn mean_of_finite(values: impl Iterator<Item = f64>) -> f64 {
    let finite: Vec<f64> = values.filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        f64::NAN
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    }
}

/// Rec. 601 luma plane of an RGB triple.
pub fn luma_601(r: &Array2<f64>, g: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let mut y = Array2::zeros(r.dim());
    for ((yv, &rv), (&gv, &bv)) in y
        .iter_mut()
        .zip(r.iter())
        .zip(g.iter().zip(b.iter()))
    {
        *yv = 0.299 * rv + 0.587 * gv + 0.114 * bv;
    }
    y
}

/// PSNR between two views of possibly several channels, honoring the mode.
fn view_psnr(
    got: &[Array2<f64>],
    want: &[Array2<f64>],
    mode: PsnrMode,
    layout: ChannelLayout,
    peak: f64,
) -> f64 {
    match (mode, got.len()) {
        (PsnrMode::Luma, 3) => match layout {
            ChannelLayout::Rgb => {
                let a = luma_601(&got[0], &got[1], &got[2]);
                let b = luma_601(&want[0], &want[1], &want[2]);
                psnr(&a.view(), &b.view(), peak)
            }
            ChannelLayout::Yuv => psnr(&got[0].view(), &want[0].view(), peak),
        },
        _ => mean_of_finite(
            got.iter()
                .zip(want.iter())
                .map(|(a, b)| psnr(&a.view(), &b.view(), peak)),
        ),
    }
}

/// Leave-N-out evaluation: keeps every `n`-th view (along both camera axes
/// for grid sets), reconstructs the skipped ones at an effective maximal
/// disparity of `n · per_view_dmax`, and scores exactly the held-out views
/// that lie between kept views (trailing views past the last kept one cannot
/// be reconstructed without extrapolation and are excluded).
pub fn leave_n_out(
    lf_full: &LightField,
    n: usize,
    per_view_dmax: usize,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    leave_n_out_with_reconstruction(lf_full, n, per_view_dmax, cfg).map(|(report, _)| report)
}

/// [`leave_n_out`] variant that also returns the reconstructed dense light
/// field (for difference maps and inspection). `None` for the trivial n=1
/// run. Held-out original view `(s, t)` sits at dense view index
/// `(s·per_view_dmax, t·per_view_dmax)`.
pub fn leave_n_out_with_reconstruction(
    lf_full: &LightField,
    n: usize,
    per_view_dmax: usize,
    cfg: &EvalConfig,
) -> Result<(EvalReport, Option<LightField>)> {
    if n < 1 {
        return Err(Error::Params("leave-N needs N >= 1".into()));
    }
    if per_view_dmax < 1 {
        return Err(Error::Params("per-view disparity must be >= 1".into()));
    }
    let started = Instant::now();
    let (n_s, n_t, _, _) = lf_full.dim();
    let d_eff = n * per_view_dmax;
    let scales = cfg.options.scales.unwrap_or_else(|| scales_for_disparity(d_eff));

    let snapshot = |d| ConfigSnapshot {
        iteration: cfg.options.iteration.clone(),
        scales,
        d_max_effective: d,
        psnr_mode: cfg.psnr_mode.as_str(),
    };

    if n == 1 {
        // Nothing is held out; flag the trivial run instead of failing.
        return Ok((
            EvalReport {
                dataset: cfg.dataset.clone(),
                per_view: Vec::new(),
                mean_psnr: f64::NAN,
                config: snapshot(d_eff),
                wall_time_seconds: started.elapsed().as_secs_f64(),
            },
            None,
        ));
    }

    let kept_t = (n_t + n - 1) / n; // views 0, n, 2n, …
    if kept_t < 2 {
        return Err(Error::Params(format!(
            "keeping every {n}-th of {n_t} views leaves {kept_t}; need >= 2"
        )));
    }
    let grid_set = n_s > 1;
    let kept_s = if grid_set { (n_s + n - 1) / n } else { 1 };
    if grid_set && kept_s < 2 {
        return Err(Error::Params(format!(
            "keeping every {n}-th of {n_s} camera rows leaves {kept_s}; need >= 2"
        )));
    }

    // Assemble the coarse input from the kept views.
    let coarse_channels = (0..lf_full.n_channels())
        .map(|c| {
            let (h, w) = lf_full.channel_dims(c);
            ndarray::Array4::from_shape_fn((kept_s, kept_t, h, w), |(si, ti, y, x)| {
                let s = if grid_set { si * n } else { 0 };
                lf_full.channel(c)[(s, ti * n, y, x)]
            })
        })
        .collect();
    let coarse = LightField::new(coarse_channels)?;

    let mut options = cfg.options.clone();
    options.scales = Some(scales);
    let dense = if grid_set {
        reconstruct_full_parallax(&coarse, d_eff, &options, None)?
    } else {
        reconstruct_hpo(&coarse, d_eff, &options, None)?
    };

    // Score held-out original views: view i sits at dense index i·per_view_dmax.
    let last_t = (kept_t - 1) * n;
    let last_s = if grid_set { (kept_s - 1) * n } else { 0 };
    let mut per_view = Vec::new();
    for s in 0..=last_s {
        for t in 0..=last_t {
            let kept = (!grid_set || s % n == 0) && t % n == 0;
            if kept {
                continue;
            }
            let got: Vec<Array2<f64>> = (0..dense.n_channels())
                .map(|c| {
                    dense
                        .view(c, s * per_view_dmax, t * per_view_dmax)
                        .to_owned()
                })
                .collect();
            let want: Vec<Array2<f64>> = (0..lf_full.n_channels())
                .map(|c| lf_full.view(c, s, t).to_owned())
                .collect();
            let db = view_psnr(&got, &want, cfg.psnr_mode, cfg.layout, cfg.peak);
            per_view.push((s * n_t + t, db));
        }
    }
    let mean_psnr = mean_of_finite(per_view.iter().map(|&(_, v)| v));

    Ok((
        EvalReport {
            dataset: cfg.dataset.clone(),
            per_view,
            mean_psnr,
            config: snapshot(d_eff),
            wall_time_seconds: started.elapsed().as_secs_f64(),
        },
        Some(dense),
    ))
}

/// One Lambertian line of a synthetic EPI: `position` is the intersection
/// with row 0 (pixels, may be fractional), `disparity` the pixel shift per
/// EPI row (the line's slope), `intensity` its constant value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticLine {
    pub position: f64,
    pub disparity: f64,
    pub intensity: f64,
}

/// Cross-section radius of rendered lines, in pixels. Rendered views are
/// band-limited by the camera's pixel aperture, so the ground truth uses a
/// smooth profile rather than hard single-pixel stripes.
const LINE_SIGMA: f64 = 1.2;

/// Renders a densely sampled ground-truth EPI of `height` rows × `width`
/// columns: Lambertian lines (constant intensity along slope = disparity)
/// over a seeded smooth background plane at disparity 0. Nearer lines
/// (larger disparity) occlude farther ones; the background is farthest.
/// Disparities must lie in `[0, 1]` px/row — the dense-sampling premise.
/// Returns the EPI and a reproducibility description.
pub fn make_synthetic_epi(
    width: usize,
    height: usize,
    lines: &[SyntheticLine],
    texture_seed: u64,
) -> Result<(Array2<f64>, String)> {
    if width < 2 || height < 2 {
        return Err(Error::Params("EPI needs at least 2×2 samples".into()));
    }
    for (i, line) in lines.iter().enumerate() {
        if !(0.0..=1.0).contains(&line.disparity) {
            return Err(Error::Params(format!(
                "line {i} disparity {} outside [0, 1] px/row (dense EPI rows)",
                line.disparity
            )));
        }
        if !line.intensity.is_finite() || !line.position.is_finite() {
            return Err(Error::Params(format!("line {i} has non-finite parameters")));
        }
    }

    // Background plane: smooth circular 1-D texture, constant along rows
    // (disparity 0), strictly positive and below typical line intensities.
    let mut rng = ChaCha8Rng::seed_from_u64(texture_seed);
    let harmonics: Vec<(f64, f64, f64)> = (1..=6)
        .map(|k| {
            (
                k as f64,
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.5..1.0) / k as f64,
            )
        })
        .collect();
    let background: Vec<f64> = (0..width)
        .map(|v| {
            let phase = v as f64 / width as f64 * std::f64::consts::TAU;
            40.0 + 10.0
                * harmonics
                    .iter()
                    .map(|&(k, p, a)| a * (k * phase + p).cos())
                    .sum::<f64>()
        })
        .collect();

    let mut epi = Array2::from_shape_fn((height, width), |(_, v)| background[v]);

    // Far-to-near: draw in ascending disparity so nearer lines overwrite.
    let mut order: Vec<&SyntheticLine> = lines.iter().collect();
    order.sort_by(|a, b| a.disparity.total_cmp(&b.disparity));
    for line in order {
        for t in 0..height {
            let center = (line.position + line.disparity * t as f64).rem_euclid(width as f64);
            for v in 0..width {
                let mut d = (v as f64 - center).abs();
                d = d.min(width as f64 - d); // circular distance
                let coverage = (-0.5 * (d / LINE_SIGMA).powi(2)).exp();
                epi[(t, v)] = (1.0 - coverage) * epi[(t, v)] + coverage * line.intensity;
            }
        }
    }

    let description = format!(
        "synthetic EPI {width}x{height}, sigma={LINE_SIGMA}, seed={texture_seed}, lines={:?}",
        lines
            .iter()
            .map(|l| (l.position, l.disparity, l.intensity))
            .collect::<Vec<_>>()
    );
    Ok((epi, description))
}

/// Scaled absolute difference `clamp(gain·|a−b|, 0, peak)` for visual
/// inspection of reconstruction errors.
pub fn diff_map(a: &Array2<f64>, b: &Array2<f64>, gain: f64, peak: f64) -> Result<Array2<f64>> {
    if a.dim() != b.dim() {
        return Err(Error::GridMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if !(gain > 0.0) || !(peak > 0.0) {
        return Err(Error::Params("diff map gain and peak must be > 0".into()));
    }
    Ok(Array2::from_shape_fn(a.dim(), |idx| {
        (gain * (a[idx] - b[idx]).abs()).clamp(0.0, peak)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    fn stripe_views(n_t: usize, h: usize, w: usize, step_px: f64) -> Array3<f64> {
        Array3::from_shape_fn((n_t, h, w), |(t, _y, x)| {
            let c = (9.0 + step_px * t as f64).rem_euclid(w as f64);
            let mut d = (x as f64 - c).abs();
            d = d.min(w as f64 - d);
            20.0 + 200.0 * (-0.5 * (d / 1.5).powi(2)).exp()
        })
    }

    fn eval_config() -> EvalConfig {
        let mut options = DriverOptions::default();
        options.iteration.n_iter = 30;
        EvalConfig {
            dataset: "unit".into(),
            options,
            psnr_mode: PsnrMode::ChannelAverage,
            layout: ChannelLayout::Rgb,
            peak: 255.0,
        }
    }

    #[test]
    fn zero_disparity_line_is_a_vertical_stripe() {
        let (epi, desc) = make_synthetic_epi(
            32,
            16,
            &[SyntheticLine {
                position: 10.0,
                disparity: 0.0,
                intensity: 200.0,
            }],
            3,
        )
        .unwrap();
        for t in 0..16 {
            assert_eq!(epi[(t, 10)], epi[(0, 10)], "stripe must be constant down rows");
        }
        assert!((epi[(0, 10)] - 200.0).abs() < 1e-9, "line center hits its intensity");
        assert!(desc.contains("seed=3"));
    }

    #[test]
    fn larger_disparity_occludes_at_crossings() {
        // Lines cross at row 8, column 10: d=1 line starts at 2, d=0 at 10.
        let near = SyntheticLine {
            position: 2.0,
            disparity: 1.0,
            intensity: 250.0,
        };
        let far = SyntheticLine {
            position: 10.0,
            disparity: 0.0,
            intensity: 100.0,
        };
        let (epi, _) = make_synthetic_epi(32, 16, &[far, near], 0).unwrap();
        // At the crossing the nearer (larger-disparity) line wins.
        assert!(
            (epi[(8, 10)] - 250.0).abs() < 1.0,
            "crossing pixel {} should be the near line",
            epi[(8, 10)]
        );
        // Away from the crossing the far line shows its own intensity.
        assert!((epi[(0, 10)] - 100.0).abs() < 1.0);
    }

    #[test]
    fn generator_is_deterministic_and_seed_sensitive() {
        let lines = [SyntheticLine {
            position: 5.0,
            disparity: 0.5,
            intensity: 150.0,
        }];
        let (a, _) = make_synthetic_epi(64, 32, &lines, 7).unwrap();
        let (b, _) = make_synthetic_epi(64, 32, &lines, 7).unwrap();
        assert_eq!(a, b, "same seed must reproduce bit-identically");
        let (c, _) = make_synthetic_epi(64, 32, &lines, 8).unwrap();
        assert_ne!(a, c, "different seed must change the background texture");
    }

    #[test]
    fn generator_rejects_undense_disparities() {
        let bad = [SyntheticLine {
            position: 0.0,
            disparity: 1.5,
            intensity: 100.0,
        }];
        assert!(make_synthetic_epi(32, 16, &bad, 0).is_err());
        let negative = [SyntheticLine {
            position: 0.0,
            disparity: -0.1,
            intensity: 100.0,
        }];
        assert!(make_synthetic_epi(32, 16, &negative, 0).is_err());
    }

    #[test]
    fn diff_map_contract() {
        let a = Array2::from_shape_fn((4, 4), |(y, x)| (y * 4 + x) as f64);
        let same = diff_map(&a, &a, 5.0, 255.0).unwrap();
        assert!(same.iter().all(|&v| v == 0.0));

        let b = a.mapv(|v| v + 10.0);
        let g1 = diff_map(&a, &b, 2.0, 255.0).unwrap();
        let g2 = diff_map(&a, &b, 4.0, 255.0).unwrap();
        assert!(g1.iter().all(|&v| v == 20.0));
        assert!(g2.iter().all(|&v| v == 40.0), "gain doubling doubles values");

        let saturated = diff_map(&a, &b, 100.0, 255.0).unwrap();
        assert!(saturated.iter().all(|&v| v == 255.0), "clamps at peak");

        let small = Array2::zeros((2, 2));
        assert!(diff_map(&a, &small, 1.0, 255.0).is_err());
    }

    #[test]
    fn csv_report_recomputes_from_rows() {
        let report = EvalReport {
            dataset: "x".into(),
            per_view: vec![(1, 30.5), (3, f64::INFINITY), (5, 29.25)],
            mean_psnr: (30.5 + 29.25) / 2.0,
            config: ConfigSnapshot {
                iteration: IterationParams::default(),
                scales: 2,
                d_max_effective: 4,
                psnr_mode: "channel-average",
            },
            wall_time_seconds: 0.0,
        };
        let csv = report.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("view_index,psnr_db"));

        // Recompute the mean from the rows exactly (infinite rows excluded).
        let mut values = Vec::new();
        let mut mean_row = None;
        for line in lines {
            let (k, v) = line.split_once(',').unwrap();
            if k == "mean" {
                mean_row = Some(v.parse::<f64>().unwrap());
            } else {
                k.parse::<usize>().unwrap();
                values.push(v.parse::<f64>().unwrap());
            }
        }
        let finite: Vec<f64> = values.iter().cloned().filter(|v| v.is_finite()).collect();
        let recomputed = finite.iter().sum::<f64>() / finite.len() as f64;
        assert_eq!(mean_row, Some(recomputed), "mean row must equal row mean");
        assert_eq!(values.len(), 3);
    }

    #[test]
    fn luma_weights_are_rec601() {
        let r = Array2::from_elem((1, 1), 100.0);
        let g = Array2::from_elem((1, 1), 200.0);
        let b = Array2::from_elem((1, 1), 50.0);
        let y = luma_601(&r, &g, &b);
        assert!((y[(0, 0)] - (0.299 * 100.0 + 0.587 * 200.0 + 0.114 * 50.0)).abs() < 1e-12);
    }

    #[test]
    fn leave_two_out_scores_only_held_out_views() {
        // 9 dense stripe views; keep 0,2,4,6,8; score 1,3,5,7.
        let lf = LightField::from_hpo_views(vec![stripe_views(9, 4, 32, 1.0)]).unwrap();
        let report = leave_n_out(&lf, 2, 1, &eval_config()).unwrap();
        let indices: Vec<usize> = report.per_view.iter().map(|&(i, _)| i).collect();
        assert_eq!(indices, vec![1, 3, 5, 7]);
        assert!(!report.is_trivial());
        assert!(
            report.mean_psnr > 25.0,
            "stripe interpolation should be easy, got {}",
            report.mean_psnr
        );
        assert_eq!(report.config.d_max_effective, 2);
        assert!(report.wall_time_seconds >= 0.0);
    }

    #[test]
    fn leave_one_out_is_flagged_trivial() {
        let lf = LightField::from_hpo_views(vec![stripe_views(5, 4, 16, 1.0)]).unwrap();
        let report = leave_n_out(&lf, 1, 1, &eval_config()).unwrap();
        assert!(report.is_trivial());
        assert!(report.mean_psnr.is_nan());
    }

    #[test]
    fn insufficient_views_error() {
        let lf = LightField::from_hpo_views(vec![stripe_views(3, 4, 16, 1.0)]).unwrap();
        assert!(leave_n_out(&lf, 5, 1, &eval_config()).is_err());
    }

    #[test]
    fn trailing_views_beyond_last_kept_are_excluded() {
        // 8 views, n=3: kept 0,3,6; held-out 1,2,4,5 — view 7 trails past
        // the last kept view and is not scored.
        let lf = LightField::from_hpo_views(vec![stripe_views(8, 4, 32, 1.0)]).unwrap();
        let report = leave_n_out(&lf, 3, 1, &eval_config()).unwrap();
        let indices: Vec<usize> = report.per_view.iter().map(|&(i, _)| i).collect();
        assert_eq!(indices, vec![1, 2, 4, 5]);
    }
}
