//! Dataset ingestion, image persistence, and the shearlet-system cache.
//!
//! Multiview sets are described by a small JSON manifest (name, view file
//! pattern, camera grid, channel layout, per-channel maximal disparity, bit
//! depth, leave-N protocol). Views are PNG/PNM images or — for video-derived
//! sets — planar raw YUV files with per-plane dimensions declared in the
//! manifest. Float imagery (EPIs, difference maps) uses the PFM format.
//! Built shearlet systems can be cached to disk and restored without
//! recomputing the filter cascades.

use crate::lightfield::LightField;
use crate::shearlet::{element_count, enumerate_labels, Normalization, ShearletSystem};
use crate::{Error, Result};
use ndarray::{Array2, Array4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};

/// Color layout of a dataset's channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ChannelLayout {
    Rgb,
    Yuv,
}

/// Width/height of one plane of a raw planar view file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPlane {
    pub width: usize,
    pub height: usize,
}

/// Description of a multiview dataset on disk.
///
/// `view_pattern` is a printf-style template using `%d` / `%0Nd`
/// placeholders: one placeholder is filled with the view index (the column
/// index for single-row sets, the row-major linear index otherwise); two
/// placeholders are filled with (row, column).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub view_pattern: String,
    /// Camera grid `(n_s, n_t)`: rows × columns; HPO sets use `n_s = 1`.
    pub grid: (usize, usize),
    pub channel_layout: ChannelLayout,
    /// Maximal disparity between adjacent views, per channel. A single entry
    /// applies to every channel.
    pub d_max: Vec<usize>,
    pub bit_depth: u32,
    /// Leave-N protocol this dataset is evaluated with.
    pub leave_n: usize,
    /// Plane dimensions for raw planar YUV view files; absent for image
    /// formats.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_planes: Option<Vec<RawPlane>>,
    /// Directory the view pattern is resolved against; set by
    /// [`load_manifest`], not stored in the JSON.
    #[serde(skip)]
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.grid.0 == 0 || self.grid.1 == 0 {
            return Err(Error::Dataset("camera grid must be non-empty".into()));
        }
        if self.d_max.is_empty() || self.d_max.iter().any(|&d| d < 1) {
            return Err(Error::Dataset(
                "d_max needs at least one entry, all >= 1".into(),
            ));
        }
        if !(self.bit_depth == 8 || self.bit_depth == 16) {
            return Err(Error::Dataset(format!(
                "bit depth {} unsupported (8 or 16)",
                self.bit_depth
            )));
        }
        if self.leave_n < 1 {
            return Err(Error::Dataset("leave_n must be >= 1".into()));
        }
        if let Some(planes) = &self.raw_planes {
            if planes.is_empty() || planes.iter().any(|p| p.width == 0 || p.height == 0) {
                return Err(Error::Dataset("raw plane dimensions must be > 0".into()));
            }
            if self.bit_depth != 8 {
                return Err(Error::Dataset(
                    "raw planar views are 8-bit only".into(),
                ));
            }
        }
        Ok(())
    }

    /// Peak sample value at the declared bit depth.
    pub fn peak(&self) -> f64 {
        ((1u32 << self.bit_depth) - 1) as f64
    }

    /// Maximal disparity of channel `c` (single-entry manifests apply that
    /// entry to all channels).
    pub fn d_max_for_channel(&self, c: usize) -> usize {
        if self.d_max.len() == 1 {
            self.d_max[0]
        } else {
            self.d_max[c.min(self.d_max.len() - 1)]
        }
    }

    /// Path of the view at grid position `(s, t)`.
    pub fn view_path(&self, s: usize, t: usize) -> Result<PathBuf> {
        let name = expand_pattern(&self.view_pattern, self.grid, s, t)?;
        Ok(self.root.join(name))
    }
}

/// Reads and validates a manifest; the containing directory becomes the root
/// for view paths.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.to_owned(), e))?;
    let mut manifest: DatasetManifest = serde_json::from_str(&text)?;
    manifest.root = path.parent().unwrap_or(Path::new(".")).to_owned();
    manifest.validate()?;
    Ok(manifest)
}

/// Expands a printf-style `%d`/`%0Nd` pattern. One placeholder receives the
/// view index (column for single-row grids, row-major linear index
/// otherwise); two placeholders receive (row, column).
fn expand_pattern(pattern: &str, grid: (usize, usize), s: usize, t: usize) -> Result<String> {
    let single_index = if grid.0 == 1 { t } else { s * grid.1 + t };
    let mut fills = Vec::new();
    let mut out = String::new();
    let bytes = pattern.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            if i + 1 < bytes.len() && bytes[i + 1] == b'%' {
                out.push('%');
                i += 2;
                continue;
            }
            let mut j = i + 1;
            let mut width = 0usize;
            let mut zero_pad = false;
            if j < bytes.len() && bytes[j] == b'0' {
                zero_pad = true;
                j += 1;
            }
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                width = width * 10 + (bytes[j] - b'0') as usize;
                j += 1;
            }
            if j >= bytes.len() || bytes[j] != b'd' {
                return Err(Error::Dataset(format!(
                    "bad placeholder in view pattern {pattern:?} (only %d / %0Nd)"
                )));
            }
            fills.push((out.len(), width, zero_pad));
            out.push('\u{0}'); // slot marker, replaced below
            i = j + 1;
        } else {
            out.push(bytes[i] as char);
            i += 1;
        }
    }
    let values: Vec<usize> = match fills.len() {
        1 => vec![single_index],
        2 => vec![s, t],
        n => {
            return Err(Error::Dataset(format!(
                "view pattern {pattern:?} has {n} placeholders; expected 1 or 2"
            )))
        }
    };
    // Replace slot markers back-to-front so recorded offsets stay valid.
    let mut result = out;
    for ((offset, width, zero_pad), value) in fills.into_iter().zip(values).rev() {
        let rendered = if zero_pad {
            format!("{value:0width$}")
        } else {
            format!("{value:width$}")
        };
        result.replace_range(offset..offset + 1, &rendered);
    }
    Ok(result)
}

// ---------------------------------------------------------------------------
// Image decode/encode
// ---------------------------------------------------------------------------

/// Decodes an image into per-channel planes scaled to `[0, peak]`.
/// Gray sources give one channel, color sources three; 8- and 16-bit inputs
/// are both normalized to the declared peak.
pub fn load_image_channels(path: &Path, peak: f64) -> Result<Vec<Array2<f64>>> {
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path.to_owned(), io),
        other => Error::Image(other),
    })?;
    let scale = peak / 65535.0;
    use image::DynamicImage;
    let channels = match img {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLuma16(_) => {
            let g = img.to_luma16();
            let (w, h) = g.dimensions();
            vec![Array2::from_shape_fn((h as usize, w as usize), |(y, x)| {
                g.get_pixel(x as u32, y as u32).0[0] as f64 * scale
            })]
        }
        _ => {
            let rgb = img.to_rgb16();
            let (w, h) = rgb.dimensions();
            (0..3)
                .map(|c| {
                    Array2::from_shape_fn((h as usize, w as usize), |(y, x)| {
                        rgb.get_pixel(x as u32, y as u32).0[c] as f64 * scale
                    })
                })
                .collect()
        }
    };
    Ok(channels)
}

/// Encodes per-channel planes (1 = gray, 3 = color; equal shapes) to a PNG
/// or PNM file at the given bit depth, clamping and rounding to integers.
/// `.pfm` paths write floats instead (lossless for intermediates).
pub fn save_image_channels(
    path: &Path,
    channels: &[Array2<f64>],
    bit_depth: u32,
) -> Result<()> {
    if channels.is_empty() {
        return Err(Error::Params("no channels to save".into()));
    }
    let dims = channels[0].dim();
    if channels.iter().any(|c| c.dim() != dims) {
        return Err(Error::Params(
            "channels with different shapes cannot share one image file".into(),
        ));
    }
    if path.extension().and_then(|e| e.to_str()) == Some("pfm") {
        return write_pfm(path, channels);
    }
    let (h, w) = dims;
    let peak = ((1u32 << bit_depth) - 1) as f64;
    let quant = |v: f64| v.clamp(0.0, peak).round();
    let result = match (channels.len(), bit_depth) {
        (1, 8) => {
            let buf = image::GrayImage::from_fn(w as u32, h as u32, |x, y| {
                image::Luma([quant(channels[0][(y as usize, x as usize)]) as u8])
            });
            buf.save(path)
        }
        (1, 16) => {
            let buf = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_fn(
                w as u32,
                h as u32,
                |x, y| image::Luma([quant(channels[0][(y as usize, x as usize)]) as u16]),
            );
            buf.save(path)
        }
        (3, 8) => {
            let buf = image::RgbImage::from_fn(w as u32, h as u32, |x, y| {
                image::Rgb([
                    quant(channels[0][(y as usize, x as usize)]) as u8,
                    quant(channels[1][(y as usize, x as usize)]) as u8,
                    quant(channels[2][(y as usize, x as usize)]) as u8,
                ])
            });
            buf.save(path)
        }
        (3, 16) => {
            let buf = image::ImageBuffer::<image::Rgb<u16>, Vec<u16>>::from_fn(
                w as u32,
                h as u32,
                |x, y| {
                    image::Rgb([
                        quant(channels[0][(y as usize, x as usize)]) as u16,
                        quant(channels[1][(y as usize, x as usize)]) as u16,
                        quant(channels[2][(y as usize, x as usize)]) as u16,
                    ])
                },
            );
            buf.save(path)
        }
        (n, d) => {
            return Err(Error::Params(format!(
                "unsupported save layout: {n} channels at {d} bits"
            )))
        }
    };
    result.map_err(Error::Image)
}

// ---------------------------------------------------------------------------
// PFM (portable float map)
// ---------------------------------------------------------------------------

/// Writes a PFM file: `Pf` (1 channel) or `PF` (3 channels), dimensions,
/// negative scale (little-endian), then rows bottom-to-top as f32.
pub fn write_pfm(path: &Path, channels: &[Array2<f64>]) -> Result<()> {
    let color = match channels.len() {
        1 => false,
        3 => true,
        n => {
            return Err(Error::Params(format!(
                "PFM stores 1 or 3 channels, got {n}"
            )))
        }
    };
    let (h, w) = channels[0].dim();
    if channels.iter().any(|c| c.dim() != (h, w)) {
        return Err(Error::Params("PFM channels must share one shape".into()));
    }
    let mut bytes = Vec::with_capacity(32 + 4 * w * h * channels.len());
    bytes.extend_from_slice(if color { b"PF\n" } else { b"Pf\n" });
    bytes.extend_from_slice(format!("{w} {h}\n").as_bytes());
    bytes.extend_from_slice(b"-1.0\n");
    for y in (0..h).rev() {
        for x in 0..w {
            for ch in channels {
                bytes.extend_from_slice(&(ch[(y, x)] as f32).to_le_bytes());
            }
        }
    }
    write_atomic(path, &bytes)
}

/// Reads a PFM file into per-channel planes (1 or 3).
pub fn read_pfm(path: &Path) -> Result<Vec<Array2<f64>>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.to_owned(), e))?;
    let bad = |msg: &str| Error::Dataset(format!("{}: {msg}", path.display()));
    // Header: four whitespace-separated tokens (magic, width, height,
    // scale), each terminated by a single whitespace byte.
    fn token(bytes: &[u8], pos: &mut usize) -> Option<String> {
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos >= bytes.len() {
            return None;
        }
        let tok = String::from_utf8_lossy(&bytes[start..*pos]).into_owned();
        *pos += 1; // single whitespace terminator
        Some(tok)
    }
    let mut pos = 0;
    let magic = token(&bytes, &mut pos).ok_or_else(|| bad("truncated header"))?;
    let color = match magic.as_str() {
        "PF" => true,
        "Pf" => false,
        _ => return Err(bad("not a PFM file")),
    };
    let w: usize = token(&bytes, &mut pos)
        .ok_or_else(|| bad("truncated header"))?
        .parse()
        .map_err(|_| bad("bad width"))?;
    let h: usize = token(&bytes, &mut pos)
        .ok_or_else(|| bad("truncated header"))?
        .parse()
        .map_err(|_| bad("bad height"))?;
    let scale: f64 = token(&bytes, &mut pos)
        .ok_or_else(|| bad("truncated header"))?
        .parse()
        .map_err(|_| bad("bad scale"))?;
    let little_endian = scale < 0.0;
    let n_ch = if color { 3 } else { 1 };
    let data = &bytes[pos..];
    if data.len() < w * h * n_ch * 4 {
        return Err(bad("truncated pixel data"));
    }
    let mut channels = vec![Array2::zeros((h, w)); n_ch];
    let mut off = 0;
    for y in (0..h).rev() {
        for x in 0..w {
            for ch in channels.iter_mut() {
                let raw: [u8; 4] = data[off..off + 4].try_into().unwrap();
                let v = if little_endian {
                    f32::from_le_bytes(raw)
                } else {
                    f32::from_be_bytes(raw)
                };
                ch[(y, x)] = v as f64 * scale.abs();
                off += 4;
            }
        }
    }
    Ok(channels)
}

// ---------------------------------------------------------------------------
// Raw planar YUV
// ---------------------------------------------------------------------------

/// Reads one raw planar 8-bit view file (planes concatenated in declared
/// order, e.g. Y then U then V at their own dimensions).
pub fn read_raw_planar(path: &Path, planes: &[RawPlane]) -> Result<Vec<Array2<f64>>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.to_owned(), e))?;
    let need: usize = planes.iter().map(|p| p.width * p.height).sum();
    if bytes.len() != need {
        return Err(Error::Dataset(format!(
            "{}: raw file holds {} bytes, planes need {need}",
            path.display(),
            bytes.len()
        )));
    }
    let mut out = Vec::with_capacity(planes.len());
    let mut off = 0;
    for p in planes {
        let plane = Array2::from_shape_fn((p.height, p.width), |(y, x)| {
            bytes[off + y * p.width + x] as f64
        });
        off += p.width * p.height;
        out.push(plane);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Views <-> LightField
// ---------------------------------------------------------------------------

/// Loads every view named by the manifest into a light field (channels in
/// manifest order, views in grid order). Decoding runs concurrently; the
/// result is deterministic.
pub fn load_views(manifest: &DatasetManifest) -> Result<LightField> {
    manifest.validate()?;
    let (n_s, n_t) = manifest.grid;
    let peak = manifest.peak();
    let jobs: Vec<(usize, usize)> = (0..n_s)
        .flat_map(|s| (0..n_t).map(move |t| (s, t)))
        .collect();
    let decoded: Vec<Vec<Array2<f64>>> = jobs
        .par_iter()
        .map(|&(s, t)| -> Result<Vec<Array2<f64>>> {
            let path = manifest.view_path(s, t)?;
            let view_id = s * n_t + t;
            let channels = if let Some(planes) = &manifest.raw_planes {
                read_raw_planar(&path, planes)
            } else {
                load_image_channels(&path, peak)
            };
            channels.map_err(|e| {
                Error::Dataset(format!(
                    "view {view_id} ({}): {e}",
                    path.display()
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n_channels = decoded[0].len();
    let mut channels = Vec::with_capacity(n_channels);
    for c in 0..n_channels {
        let dims = decoded[0][c].dim();
        let mut ch = Array4::zeros((n_s, n_t, dims.0, dims.1));
        for (idx, view) in decoded.iter().enumerate() {
            if view.len() != n_channels {
                return Err(Error::Dataset(format!(
                    "view {idx} has {} channels, view 0 has {n_channels}",
                    view.len()
                )));
            }
            if view[c].dim() != dims {
                return Err(Error::Dataset(format!(
                    "view {idx} channel {c} is {:?}, view 0 is {dims:?}",
                    view[c].dim()
                )));
            }
            let (s, t) = jobs[idx];
            for y in 0..dims.0 {
                for x in 0..dims.1 {
                    ch[(s, t, y, x)] = view[c][(y, x)];
                }
            }
        }
        channels.push(ch);
    }
    LightField::new(channels)
}

/// Writes every view of a light field into `directory` using the same
/// printf-style pattern as manifests. Returns the number of files written.
/// Channels must share one shape per view (save subsampled layouts one
/// channel at a time).
pub fn save_views(
    lf: &LightField,
    directory: &Path,
    pattern: &str,
    bit_depth: u32,
) -> Result<usize> {
    fs::create_dir_all(directory).map_err(|e| Error::io(directory.to_owned(), e))?;
    let (n_s, n_t, _, _) = lf.dim();
    let mut written = 0;
    for s in 0..n_s {
        for t in 0..n_t {
            let name = expand_pattern(pattern, (n_s, n_t), s, t)?;
            let path = directory.join(name);
            let channels: Vec<Array2<f64>> = (0..lf.n_channels())
                .map(|c| lf.view(c, s, t).to_owned())
                .collect();
            save_image_channels(&path, &channels, bit_depth)?;
            written += 1;
        }
    }
    Ok(written)
}

// ---------------------------------------------------------------------------
// Shearlet-system cache
// ---------------------------------------------------------------------------

const CACHE_MAGIC: &[u8; 4] = b"SHLC";
const CACHE_VERSION: u8 = 1;

/// Serializes a built system: magic `SHLC`, version, grid dims (u32 LE ×2),
/// scale count, element count (u16 LE), per-element complex f32 grids
/// (interleaved re/im, row-major), then the frame-function grid (f32), the
/// normalization tag, the coverage floor (f64 LE), and the system
/// fingerprint (u64 LE). Written atomically.
pub fn cache_system(system: &ShearletSystem, path: &Path) -> Result<()> {
    let (n_t, n_v) = system.grid();
    let elements = system.analysis_filters();
    let mut bytes =
        Vec::with_capacity(32 + elements.len() * n_t * n_v * 8 + n_t * n_v * 4);
    bytes.extend_from_slice(CACHE_MAGIC);
    bytes.push(CACHE_VERSION);
    bytes.extend_from_slice(&(n_t as u32).to_le_bytes());
    bytes.extend_from_slice(&(n_v as u32).to_le_bytes());
    bytes.push(system.scales() as u8);
    bytes.extend_from_slice(&(elements.len() as u16).to_le_bytes());
    for grid in elements {
        for z in grid.iter() {
            bytes.extend_from_slice(&(z.re as f32).to_le_bytes());
            bytes.extend_from_slice(&(z.im as f32).to_le_bytes());
        }
    }
    for &f in system.frame_function().iter() {
        bytes.extend_from_slice(&(f as f32).to_le_bytes());
    }
    bytes.push(match system.normalization() {
        Normalization::IncludedElements => 0,
        Normalization::ConeWeighted => 1,
    });
    bytes.extend_from_slice(&system.coverage_floor().to_le_bytes());
    bytes.extend_from_slice(&system.id().to_le_bytes());
    write_atomic(path, &bytes)
}

/// Restores a cached system, validating format, grid, and scale count
/// against the caller's expectation; any mismatch is an explicit
/// rebuild-needed error, never silent reuse. Dual filters are recomputed
/// from the restored analysis grids and frame function.
pub fn load_cached_system(
    path: &Path,
    expected_grid: (usize, usize),
    expected_scales: u32,
) -> Result<ShearletSystem> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path.to_owned(), e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)
        .map_err(|e| Error::io(path.to_owned(), e))?;
    let bad = |msg: String| Error::Cache(format!("{}: {msg}", path.display()));

    fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize) -> Option<&'a [u8]> {
        if *pos + n > bytes.len() {
            return None;
        }
        let slice = &bytes[*pos..*pos + n];
        *pos += n;
        Some(slice)
    }
    let mut pos = 0usize;
    macro_rules! take {
        ($n:expr) => {
            take(&bytes, &mut pos, $n).ok_or_else(|| bad("truncated".into()))?
        };
    }

    if take!(4) != CACHE_MAGIC {
        return Err(bad("bad magic; not a system cache".into()));
    }
    let version = take!(1)[0];
    if version != CACHE_VERSION {
        return Err(bad(format!(
            "format version {version} (expected {CACHE_VERSION}); rebuild needed"
        )));
    }
    let n_t = u32::from_le_bytes(take!(4).try_into().unwrap()) as usize;
    let n_v = u32::from_le_bytes(take!(4).try_into().unwrap()) as usize;
    let scales = take!(1)[0] as u32;
    let count = u16::from_le_bytes(take!(2).try_into().unwrap()) as usize;
    if (n_t, n_v) != expected_grid {
        return Err(bad(format!(
            "grid {n_t}x{n_v} does not match expected {}x{}; rebuild needed",
            expected_grid.0, expected_grid.1
        )));
    }
    if scales != expected_scales {
        return Err(bad(format!(
            "scale count {scales} does not match expected {expected_scales}; rebuild needed"
        )));
    }
    if count != element_count(scales) {
        return Err(bad(format!(
            "element count {count} inconsistent with {scales} scales"
        )));
    }

    let mut analysis = Vec::with_capacity(count);
    for _ in 0..count {
        let raw = take!(n_t * n_v * 8);
        let mut grid = Array2::zeros((n_t, n_v));
        for (i, z) in grid.iter_mut().enumerate() {
            let re = f32::from_le_bytes(raw[8 * i..8 * i + 4].try_into().unwrap());
            let im = f32::from_le_bytes(raw[8 * i + 4..8 * i + 8].try_into().unwrap());
            *z = Complex64::new(re as f64, im as f64);
        }
        analysis.push(grid);
    }
    let raw = take!(n_t * n_v * 4);
    let mut frame = Array2::zeros((n_t, n_v));
    for (i, f) in frame.iter_mut().enumerate() {
        *f = f32::from_le_bytes(raw[4 * i..4 * i + 4].try_into().unwrap()) as f64;
    }
    let normalization = match take!(1)[0] {
        0 => Normalization::IncludedElements,
        1 => Normalization::ConeWeighted,
        other => return Err(bad(format!("unknown normalization tag {other}"))),
    };
    let coverage_floor = f64::from_le_bytes(take!(8).try_into().unwrap());
    let id = u64::from_le_bytes(take!(8).try_into().unwrap());
    if pos != bytes.len() {
        return Err(bad("trailing bytes after cache payload".into()));
    }

    ShearletSystem::from_parts(
        n_t,
        n_v,
        scales,
        normalization,
        coverage_floor,
        enumerate_labels(scales),
        analysis,
        frame,
        id,
    )
}

/// Writes a file atomically: temp file in the same directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.to_owned(), e))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "cache".into()),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(tmp.clone(), e))?;
        f.write_all(bytes).map_err(|e| Error::io(tmp.clone(), e))?;
        f.sync_all().map_err(|e| Error::io(tmp.clone(), e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path.to_owned(), e))
}
