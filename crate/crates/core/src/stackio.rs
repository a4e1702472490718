//! Frame-stack ingest and projected-image output.

use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageFormat};

use crate::error::{Error, Result};
use crate::raster::Raster8;

/// Ordered T×H×W stack of 8-bit frames from one recording.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameStack {
    frames: Vec<Raster8>,
    height: usize,
    width: usize,
    video_id: String,
}

impl FrameStack {
    pub const BIT_DEPTH: u32 = 8;

    pub fn new(video_id: impl Into<String>, frames: Vec<Raster8>) -> Result<Self> {
        let first = frames.first().ok_or(Error::Empty)?;
        let (height, width) = first.dims();
        if let Some(bad) = frames.iter().find(|f| f.dims() != (height, width)) {
            return Err(Error::GeometryMismatch {
                expected: (height, width),
                found: bad.dims(),
            });
        }
        Ok(Self {
            frames,
            height,
            width,
            video_id: video_id.into(),
        })
    }

    pub fn frames(&self) -> &[Raster8] {
        &self.frames
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }
}

/// How multi-channel frames are reduced to one channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ChannelPolicy {
    /// ITU-R BT.601 luma.
    #[default]
    Luma,
    /// Take a single channel by index.
    Channel(usize),
}

/// Loads every file in `dir` whose name matches `pattern` as one stack.
///
/// Frames are ordered by the last run of digits in the file stem, then by
/// name, so `frame_7` and `frame_07` sort the same way and the directory
/// listing order never matters. The video id is the directory name.
pub fn load_stack(dir: &Path, pattern: &str, channel: ChannelPolicy) -> Result<FrameStack> {
    let matcher =
        glob::Pattern::new(pattern).map_err(|e| Error::InvalidParams(format!("bad pattern `{pattern}`: {e}")))?;
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| matcher.matches(n))
        })
        .collect();
    if paths.is_empty() {
        return Err(Error::EmptyStack {
            dir: dir.to_path_buf(),
            pattern: pattern.to_string(),
        });
    }
    paths.sort_by(|a, b| frame_order(a, b));

    let frames = paths
        .iter()
        .map(|p| read_gray8(p, channel))
        .collect::<Result<Vec<_>>>()?;
    let video_id = dir.file_name().and_then(|n| n.to_str()).unwrap_or("video").to_string();
    FrameStack::new(video_id, frames)
}

fn frame_order(a: &Path, b: &Path) -> Ordering {
    let name = |p: &Path| p.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
    let (na, nb) = (name(a), name(b));
    let key = |n: &str| trailing_number(stem(n));
    match (key(&na), key(&nb)) {
        (Some(x), Some(y)) => x.cmp(&y).then_with(|| na.cmp(&nb)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => na.cmp(&nb),
    }
}

fn stem(name: &str) -> &str {
    name.rsplit_once('.').map_or(name, |(s, _)| s)
}

/// Last run of ASCII digits in `s`, parsed as an integer.
pub(crate) fn trailing_number(s: &str) -> Option<u128> {
    let bytes = s.as_bytes();
    let end = bytes.iter().rposition(u8::is_ascii_digit)? + 1;
    let start = bytes[..end]
        .iter()
        .rposition(|b| !b.is_ascii_digit())
        .map_or(0, |i| i + 1);
    s[start..end].parse().ok()
}

/// Decodes one image file as an 8-bit single-channel raster.
pub fn read_gray8(path: &Path, channel: ChannelPolicy) -> Result<Raster8> {
    let img = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    to_gray8(img, channel).map_err(|reason| Error::Decode {
        path: path.to_path_buf(),
        reason,
    })
}

fn to_gray8(img: DynamicImage, channel: ChannelPolicy) -> std::result::Result<Raster8, String> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match img {
        DynamicImage::ImageLuma8(g) => match channel {
            ChannelPolicy::Luma | ChannelPolicy::Channel(0) => g.into_raw(),
            ChannelPolicy::Channel(c) => return Err(format!("channel {c} out of range (1 channel)")),
        },
        DynamicImage::ImageLumaA8(g) => pick(g.as_raw(), 2, channel, |px| px[0])?,
        DynamicImage::ImageRgb8(g) => pick(g.as_raw(), 3, channel, bt601)?,
        DynamicImage::ImageRgba8(g) => pick(g.as_raw(), 4, channel, bt601)?,
        other => return Err(format!("unsupported pixel format {:?}; expected 8-bit", other.color())),
    };
    Raster8::new(h, w, data).map_err(|e| e.to_string())
}

fn pick(
    raw: &[u8],
    stride: usize,
    channel: ChannelPolicy,
    luma: fn(&[u8]) -> u8,
) -> std::result::Result<Vec<u8>, String> {
    match channel {
        ChannelPolicy::Luma => Ok(raw.chunks_exact(stride).map(luma).collect()),
        ChannelPolicy::Channel(c) if c < stride => Ok(raw.chunks_exact(stride).map(|px| px[c]).collect()),
        ChannelPolicy::Channel(c) => Err(format!("channel {c} out of range ({stride} channels)")),
    }
}

fn bt601(px: &[u8]) -> u8 {
    let y = 0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]);
    crate::raster::round_half_up_u8(y)
}

/// Canonical output name: `<projection>_<video>[_<op>...].png`.
pub fn output_name(projection: &str, video_id: &str, ops: &[&str]) -> String {
    let mut name = format!("{projection}_{video_id}");
    for op in ops {
        name.push('_');
        name.push_str(op);
    }
    name.push_str(".png");
    name
}

/// Writes `img` as a lossless grayscale PNG named by [`output_name`].
pub fn write_image(img: &Raster8, out_dir: &Path, projection: &str, video_id: &str, ops: &[&str]) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(output_name(projection, video_id, ops));
    write_png(img, &path)?;
    Ok(path)
}

pub fn write_png(img: &Raster8, path: &Path) -> Result<()> {
    let buf = GrayImage::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
        .expect("buffer length matches dimensions");
    buf.save_with_format(path, ImageFormat::Png).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(other.to_string())),
    })
}
