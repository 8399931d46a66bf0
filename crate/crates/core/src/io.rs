//! Loading endpoint data and writing frame sequences.
//!
//! Images are stored with x fastest, then y, then the colour channel. Raw
//! frame dumps append the time axis as the slowest one.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageReader};
use serde::{Deserialize, Serialize};

use crate::error::{OtError, Result};
use crate::grid::{BoundaryKind, GridSpec, COLOR_CHANNELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    /// One real per line.
    SignalCsv,
    /// 8-bit grayscale or RGB PNG.
    ImagePng,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    None,
    /// Scale both inputs to mass 1, then by the mean of the original masses.
    EqualizeMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    PngSeq,
    RawF64,
}

macro_rules! snake_case_from_str {
    ($ty:ty, $($name:literal => $val:expr),+) => {
        impl std::str::FromStr for $ty {
            type Err = OtError;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().replace('-', "_").as_str() {
                    $($name => Ok($val),)+
                    other => Err(OtError::InvalidArgument(format!(
                        concat!("unknown ", stringify!($ty), " '{}' (expected one of: ", $($name, " ",)+ ")"),
                        other
                    ))),
                }
            }
        }
    };
}

snake_case_from_str!(InputMode, "signal_csv" => InputMode::SignalCsv, "image_png" => InputMode::ImagePng);
snake_case_from_str!(Normalization, "none" => Normalization::None, "equalize_mass" => Normalization::EqualizeMass);
snake_case_from_str!(OutputFormat, "png_seq" => OutputFormat::PngSeq, "raw_f64" => OutputFormat::RawF64);

/// Grid parameters that do not come from the input files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    pub time_steps: usize,
    pub spatial_boundary: BoundaryKind,
    pub color_boundary: BoundaryKind,
    pub normalization: Normalization,
}

/// A loaded endpoint: samples plus spatial shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Endpoint {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

pub fn read_signal_csv(path: &Path) -> Result<Endpoint> {
    let text = fs::read_to_string(path).map_err(|e| OtError::io(path, e))?;
    let mut data = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let field = line.trim();
        if field.is_empty() {
            continue;
        }
        let v: f64 = field
            .parse()
            .map_err(|_| OtError::format(path, format!("line {}: '{field}' is not a number", line_no + 1)))?;
        data.push(v);
    }
    if data.is_empty() {
        return Err(OtError::format(path, "no samples"));
    }
    Ok(Endpoint {
        dims: vec![data.len()],
        data,
    })
}

/// Reads an 8-bit PNG; alpha channels are dropped.
pub fn read_png(path: &Path) -> Result<Endpoint> {
    let img = ImageReader::open(path)
        .map_err(|e| OtError::io(path, e))?
        .decode()
        .map_err(|e| OtError::format(path, e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let to_unit = |v: u8| v as f64 / 255.0;
    match img {
        DynamicImage::ImageLuma8(buf) => Ok(Endpoint {
            dims: vec![w, h],
            data: buf.into_raw().into_iter().map(to_unit).collect(),
        }),
        DynamicImage::ImageLumaA8(_) => {
            let buf = img.to_luma8();
            Ok(Endpoint {
                dims: vec![w, h],
                data: buf.into_raw().into_iter().map(to_unit).collect(),
            })
        }
        DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => {
            let buf = img.to_rgb8();
            let raw = buf.as_raw();
            let mut data = vec![0.0; w * h * COLOR_CHANNELS];
            for pix in 0..w * h {
                for c in 0..COLOR_CHANNELS {
                    data[pix + w * h * c] = to_unit(raw[pix * COLOR_CHANNELS + c]);
                }
            }
            Ok(Endpoint {
                dims: vec![w, h, COLOR_CHANNELS],
                data,
            })
        }
        other => Err(OtError::format(
            path,
            format!("expected an 8-bit grayscale or RGB PNG, got {:?}", other.color()),
        )),
    }
}

/// Applies the two-step normalisation: mass 1 each, then a common factor.
pub fn equalize_mass(f0: &mut [f64], f1: &mut [f64]) -> Result<()> {
    let m0: f64 = f0.iter().sum();
    let m1: f64 = f1.iter().sum();
    if !(m0 > 0.0 && m1 > 0.0) {
        return Err(OtError::InvalidArgument(format!(
            "mass equalisation needs positive masses, got {m0} and {m1}"
        )));
    }
    let common = 0.5 * (m0 + m1);
    f0.iter_mut().for_each(|v| *v = *v / m0 * common);
    f1.iter_mut().for_each(|v| *v = *v / m1 * common);
    Ok(())
}

pub fn load_inputs(path0: &Path, path1: &Path, mode: InputMode, opts: &LoadOptions) -> Result<(Vec<f64>, Vec<f64>, GridSpec)> {
    let read = |p: &Path| match mode {
        InputMode::SignalCsv => read_signal_csv(p),
        InputMode::ImagePng => read_png(p),
    };
    let e0 = read(path0)?;
    let e1 = read(path1)?;
    if e0.dims != e1.dims {
        return Err(OtError::InvalidArgument(format!(
            "input shapes differ: {} is {:?}, {} is {:?}",
            path0.display(),
            e0.dims,
            path1.display(),
            e1.dims
        )));
    }
    let grid = GridSpec::new(e0.dims, opts.time_steps, opts.spatial_boundary, opts.color_boundary)?;
    let (mut f0, mut f1) = (e0.data, e1.data);
    if opts.normalization == Normalization::EqualizeMass {
        equalize_mass(&mut f0, &mut f1)?;
    }
    Ok((f0, f1, grid))
}

pub fn frame_file_name(k: usize) -> String {
    format!("frame_{k:04}.png")
}

pub const RAW_FRAMES_FILE: &str = "frames.f64";
pub const RAW_SIDECAR_FILE: &str = "frames.json";

/// Shape description written next to a raw dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSidecar {
    /// Axis lengths, fastest first; the last axis is time.
    pub shape: Vec<usize>,
    pub axis_order: Vec<String>,
    pub dtype: String,
}

fn axis_names(grid: &GridSpec) -> Vec<String> {
    let names: &[&str] = match grid.ndim() {
        1 => &["x", "time"],
        2 => &["x", "y", "time"],
        _ => &["x", "y", "channel", "time"],
    };
    names.iter().map(|s| s.to_string()).collect()
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn write_png(path: &Path, grid: &GridSpec, frame: &[f64]) -> Result<()> {
    let dims = grid.spatial_dims();
    let (w, h) = (dims[0], dims.get(1).copied().unwrap_or(1));
    let err = |e: image::ImageError| OtError::format(path, e.to_string());
    if grid.color_axis().is_some() {
        let mut raw = vec![0u8; w * h * COLOR_CHANNELS];
        for pix in 0..w * h {
            for c in 0..COLOR_CHANNELS {
                raw[pix * COLOR_CHANNELS + c] = quantize(frame[pix + w * h * c]);
            }
        }
        image::RgbImage::from_raw(w as u32, h as u32, raw).unwrap().save(path).map_err(err)
    } else {
        let raw = frame.iter().map(|&v| quantize(v)).collect();
        image::GrayImage::from_raw(w as u32, h as u32, raw).unwrap().save(path).map_err(err)
    }
}

/// Mean over the colour channels of an RGB frame.
pub fn intensity(grid: &GridSpec, frame: &[f64]) -> Result<Vec<f64>> {
    if grid.color_axis().is_none() {
        return Err(OtError::InvalidArgument("intensity needs an RGB grid".into()));
    }
    let plane = grid.cells() / COLOR_CHANNELS;
    Ok((0..plane)
        .map(|i| (0..COLOR_CHANNELS).map(|c| frame[i + plane * c]).sum::<f64>() / COLOR_CHANNELS as f64)
        .collect())
}

pub fn intensity_file_name(k: usize) -> String {
    format!("intensity_{k:04}.png")
}

/// Writes the frames and returns the created file names.
pub fn emit_frames(frames: &[Vec<f64>], grid: &GridSpec, out_dir: &Path, format: OutputFormat) -> Result<Vec<String>> {
    fs::create_dir_all(out_dir).map_err(|e| OtError::io(out_dir, e))?;
    for (k, frame) in frames.iter().enumerate() {
        if frame.len() != grid.cells() {
            return Err(OtError::shape("emit_frames", format!("frame {k}"), grid.cells(), frame.len()));
        }
    }
    match format {
        OutputFormat::PngSeq => {
            let mut names = Vec::with_capacity(frames.len());
            for (k, frame) in frames.iter().enumerate() {
                let name = frame_file_name(k);
                write_png(&out_dir.join(&name), grid, frame)?;
                names.push(name);
            }
            Ok(names)
        }
        OutputFormat::RawF64 => {
            let bytes: Vec<u8> = frames.iter().flatten().flat_map(|v| v.to_le_bytes()).collect();
            let path = out_dir.join(RAW_FRAMES_FILE);
            fs::write(&path, bytes).map_err(|e| OtError::io(&path, e))?;
            let mut shape = grid.spatial_dims().to_vec();
            shape.push(frames.len());
            let sidecar = RawSidecar {
                shape,
                axis_order: axis_names(grid),
                dtype: "float64-le".into(),
            };
            write_json(&out_dir.join(RAW_SIDECAR_FILE), &sidecar)?;
            Ok(vec![RAW_FRAMES_FILE.into(), RAW_SIDECAR_FILE.into()])
        }
    }
}

/// Writes `(R+G+B)/3` of every frame as grayscale PNGs.
pub fn emit_intensity(frames: &[Vec<f64>], grid: &GridSpec, out_dir: &Path) -> Result<Vec<String>> {
    let dims = grid.spatial_dims();
    let gray = GridSpec::new(dims[..2].to_vec(), grid.time_steps(), grid.spatial_boundary(), grid.color_boundary())?;
    let mut names = Vec::with_capacity(frames.len());
    for (k, frame) in frames.iter().enumerate() {
        let name = intensity_file_name(k);
        write_png(&out_dir.join(&name), &gray, &intensity(grid, frame)?)?;
        names.push(name);
    }
    Ok(names)
}

/// Reads a raw dump back as one vector per frame.
pub fn read_raw_frames(dir: &Path) -> Result<(RawSidecar, Vec<Vec<f64>>)> {
    let sidecar: RawSidecar = read_json(&dir.join(RAW_SIDECAR_FILE))?;
    let path = dir.join(RAW_FRAMES_FILE);
    let bytes = fs::read(&path).map_err(|e| OtError::io(&path, e))?;
    let (frame_len, count) = match sidecar.shape.split_last() {
        Some((&t, spatial)) => (spatial.iter().product::<usize>(), t),
        None => return Err(OtError::format(dir.join(RAW_SIDECAR_FILE), "empty shape")),
    };
    if bytes.len() != 8 * frame_len * count {
        return Err(OtError::format(
            &path,
            format!("expected {} bytes for shape {:?}, found {}", 8 * frame_len * count, sidecar.shape, bytes.len()),
        ));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let frames = if frame_len == 0 {
        vec![Vec::new(); count]
    } else {
        values.chunks(frame_len).map(<[f64]>::to_vec).collect()
    };
    Ok((sidecar, frames))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| OtError::format(path, e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| OtError::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| OtError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| OtError::format(path, e.to_string()))
}

/// Absolute form of `p`, falling back to `p` when it cannot be resolved.
pub(crate) fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}
