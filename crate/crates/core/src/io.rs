//! File formats: images, masks, CSV tables and template files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::eval::{format_score, parse_score, ScoreRecord};
use crate::geometry::{CircleParams, NormalizedIris};
use crate::identify::Candidate;
use crate::image::{BinaryMask, GrayImage};
use crate::templates::{self, EyeLabel, Template, TemplateError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Template {
        path: PathBuf,
        source: TemplateError,
    },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Writes via a sibling temp file and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".part");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Loads a PGM or PNG (any bit depth or colour type) as luminance in `[0, 1]`.
pub fn read_gray_image(path: &Path) -> Result<GrayImage, IoError> {
    let img = image::open(path).map_err(|source| IoError::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let luma = img.to_luma32f();
    let (w, h) = (luma.width() as usize, luma.height() as usize);
    GrayImage::from_fn(w, h, |x, y| f64::from(luma.get_pixel(x as u32, y as u32).0[0]))
        .map_err(|e| parse_err(path, 0, e.to_string()))
}

/// Loads a mask; a pixel is set when its 8-bit value exceeds 127.
pub fn read_mask(path: &Path) -> Result<BinaryMask, IoError> {
    let img = read_gray_image(path)?;
    Ok(BinaryMask::from_fn(img.width(), img.height(), |x, y| img.get(x, y) > 0.5))
}

fn pgm_bytes(width: usize, height: usize, values: impl Iterator<Item = u8>) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values);
    out
}

/// Binary PGM with intensities rounded to 8 bits.
pub fn write_gray_pgm(path: &Path, img: &GrayImage) -> Result<(), IoError> {
    let px = img.pixels().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8);
    write_atomic(path, &pgm_bytes(img.width(), img.height(), px))
}

pub fn write_mask_pgm(path: &Path, mask: &BinaryMask) -> Result<(), IoError> {
    let px = mask.bits().iter().map(|&b| if b { 255 } else { 0 });
    write_atomic(path, &pgm_bytes(mask.width(), mask.height(), px))
}

/// Polar texture and mask as two PGMs, `angular_res` wide.
pub fn write_normalized(image_path: &Path, mask_path: &Path, iris: &NormalizedIris) -> Result<(), IoError> {
    let (r, a) = (iris.radial_res(), iris.angular_res());
    let px = iris.image().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8);
    write_atomic(image_path, &pgm_bytes(a, r, px))?;
    let m = iris.mask().iter().map(|&b| if b { 255 } else { 0 });
    write_atomic(mask_path, &pgm_bytes(a, r, m))
}

pub fn read_normalized(image_path: &Path, mask_path: &Path) -> Result<NormalizedIris, IoError> {
    let img = read_gray_image(image_path)?;
    let mask = read_mask(mask_path)?;
    if !(mask.width() == img.width() && mask.height() == img.height()) {
        return Err(parse_err(mask_path, 0, "polar mask and image sizes differ"));
    }
    NormalizedIris::new(img.height(), img.width(), img.pixels().to_vec(), mask.bits().to_vec())
        .map_err(|e| parse_err(image_path, 0, e.to_string()))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>, IoError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(f))
}

fn records(path: &Path) -> Result<Vec<(u64, csv::StringRecord)>, IoError> {
    let mut r = reader(path)?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err(path))?;
            let line = rec.position().map_or(0, |p| p.line());
            Ok((line, rec))
        })
        .collect()
}

fn field<'r>(path: &Path, line: u64, rec: &'r csv::StringRecord, i: usize, name: &str) -> Result<&'r str, IoError> {
    rec.get(i).ok_or_else(|| parse_err(path, line, format!("missing column {name}")))
}

fn number(path: &Path, line: u64, rec: &csv::StringRecord, i: usize, name: &str) -> Result<f64, IoError> {
    let s = field(path, line, rec, i, name)?;
    s.parse().map_err(|_| parse_err(path, line, format!("{name}: not a number: {s:?}")))
}

fn eye(path: &Path, line: u64, s: &str) -> Result<EyeLabel, IoError> {
    EyeLabel::parse(s).ok_or_else(|| parse_err(path, line, format!("unknown eye label {s:?}")))
}

fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub const CIRCLES_HEADER: [&str; 7] = ["image_id", "px", "py", "pr", "ix", "iy", "ir"];

pub fn read_circles_csv(path: &Path) -> Result<Vec<(String, CircleParams)>, IoError> {
    records(path)?
        .into_iter()
        .map(|(line, rec)| {
            let id = field(path, line, &rec, 0, "image_id")?.to_string();
            let v: Vec<f64> = (1..7)
                .map(|i| number(path, line, &rec, i, CIRCLES_HEADER[i]))
                .collect::<Result<_, _>>()?;
            let c = CircleParams::new(v[0], v[1], v[2], v[3], v[4], v[5])
                .map_err(|e| parse_err(path, line, e.to_string()))?;
            Ok((id, c))
        })
        .collect()
}

pub fn circles_csv(rows: &[(String, CircleParams)]) -> Vec<u8> {
    to_csv(
        &CIRCLES_HEADER,
        rows.iter().map(|(id, c)| {
            let mut r = vec![id.clone()];
            r.extend([c.px, c.py, c.pr, c.ix, c.iy, c.ir].iter().map(|v| v.to_string()));
            r
        }),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRow {
    pub image_id: String,
    pub eye: EyeLabel,
    pub values: Vec<f64>,
}

/// `image_id, eye, v1..vd`; all rows must share one dimension.
pub fn read_embeddings_csv(path: &Path) -> Result<Vec<EmbeddingRow>, IoError> {
    let rows: Vec<EmbeddingRow> = records(path)?
        .into_iter()
        .map(|(line, rec)| {
            let image_id = field(path, line, &rec, 0, "image_id")?.to_string();
            let eye = eye(path, line, field(path, line, &rec, 1, "eye")?)?;
            let values = (2..rec.len())
                .map(|i| number(path, line, &rec, i, &format!("v{}", i - 1)))
                .collect::<Result<Vec<_>, _>>()?;
            if values.is_empty() {
                return Err(parse_err(path, line, "embedding has no values"));
            }
            Ok(EmbeddingRow { image_id, eye, values })
        })
        .collect::<Result<_, _>>()?;
    if let Some(first) = rows.first() {
        if let Some(bad) = rows.iter().find(|r| r.values.len() != first.values.len()) {
            return Err(parse_err(path, 0, format!("{}: dimension differs from first row", bad.image_id)));
        }
    }
    Ok(rows)
}

pub const SCORES_HEADER: [&str; 5] = ["method_id", "probe_id", "gallery_id", "genuine", "score"];

pub fn read_scores_csv(path: &Path) -> Result<Vec<ScoreRecord>, IoError> {
    records(path)?
        .into_iter()
        .map(|(line, rec)| {
            let f = |i| field(path, line, &rec, i, SCORES_HEADER[i]);
            let genuine = match f(3)? {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(parse_err(path, line, format!("genuine must be 0 or 1, got {other:?}"))),
            };
            let raw = f(4)?;
            let score = parse_score(raw).map_err(|_| parse_err(path, line, format!("bad score {raw:?}")))?;
            Ok(ScoreRecord {
                method_id: f(0)?.to_string(),
                probe_id: f(1)?.to_string(),
                gallery_id: f(2)?.to_string(),
                genuine,
                score,
            })
        })
        .collect()
}

pub fn scores_csv(records: &[ScoreRecord]) -> Vec<u8> {
    to_csv(
        &SCORES_HEADER,
        records.iter().map(|r| {
            vec![
                r.method_id.clone(),
                r.probe_id.clone(),
                r.gallery_id.clone(),
                if r.genuine { "1" } else { "0" }.to_string(),
                format_score(r.score),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub identity_id: String,
    pub eye: EyeLabel,
    /// Resolved against the manifest's directory.
    pub template_path: PathBuf,
}

/// `identity_id, eye, template_path`.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>, IoError> {
    let base = path.parent().unwrap_or(Path::new("."));
    records(path)?
        .into_iter()
        .map(|(line, rec)| {
            let identity_id = field(path, line, &rec, 0, "identity_id")?.to_string();
            if identity_id.is_empty() {
                return Err(parse_err(path, line, "empty identity_id"));
            }
            let eye = eye(path, line, field(path, line, &rec, 1, "eye")?)?;
            let p = Path::new(field(path, line, &rec, 2, "template_path")?);
            Ok(ManifestRow {
                identity_id,
                eye,
                template_path: if p.is_absolute() { p.to_path_buf() } else { base.join(p) },
            })
        })
        .collect()
}

/// Manifest rows with paths written relative to `base` where possible.
pub fn manifest_csv(rows: &[ManifestRow], base: &Path) -> Vec<u8> {
    to_csv(
        &["identity_id", "eye", "template_path"],
        rows.iter().map(|r| {
            let p = r.template_path.strip_prefix(base).unwrap_or(&r.template_path);
            vec![r.identity_id.clone(), r.eye.as_str().to_string(), p.display().to_string()]
        }),
    )
}

pub fn candidates_csv(rows: &[(String, Candidate)]) -> Vec<u8> {
    to_csv(
        &["probe_id", "rank", "identity_id", "score"],
        rows.iter().map(|(probe, c)| {
            vec![probe.clone(), c.rank.to_string(), c.identity_id.clone(), c.score.to_string()]
        }),
    )
}

pub fn read_candidates_csv(path: &Path) -> Result<Vec<(String, Candidate)>, IoError> {
    records(path)?
        .into_iter()
        .map(|(line, rec)| {
            let probe = field(path, line, &rec, 0, "probe_id")?.to_string();
            let rank_s = field(path, line, &rec, 1, "rank")?;
            let rank = rank_s
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad rank {rank_s:?}")))?;
            Ok((
                probe,
                Candidate {
                    identity_id: field(path, line, &rec, 2, "identity_id")?.to_string(),
                    score: number(path, line, &rec, 3, "score")?,
                    rank,
                },
            ))
        })
        .collect()
}

/// `image_id, eye` rows.
pub fn read_eye_labels(path: &Path) -> Result<Vec<(String, EyeLabel)>, IoError> {
    records(path)?
        .into_iter()
        .map(|(line, rec)| {
            let id = field(path, line, &rec, 0, "image_id")?.to_string();
            Ok((id, eye(path, line, field(path, line, &rec, 1, "eye")?)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRow {
    pub probe_id: String,
    pub gallery_id: String,
    pub genuine: bool,
}

/// `probe_id, gallery_id, genuine` rows.
pub fn read_pairs(path: &Path) -> Result<Vec<PairRow>, IoError> {
    records(path)?
        .into_iter()
        .map(|(line, rec)| {
            let genuine = match field(path, line, &rec, 2, "genuine")? {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(parse_err(path, line, format!("genuine must be 0 or 1, got {other:?}"))),
            };
            Ok(PairRow {
                probe_id: field(path, line, &rec, 0, "probe_id")?.to_string(),
                gallery_id: field(path, line, &rec, 1, "gallery_id")?.to_string(),
                genuine,
            })
        })
        .collect()
}

/// Two-column `image_id, reasons` table of rejected images.
pub fn rejections_csv(rows: &[(String, String)]) -> Vec<u8> {
    to_csv(&["image_id", "reasons"], rows.iter().map(|(a, b)| vec![a.clone(), b.clone()]))
}

pub fn read_template(path: &Path) -> Result<Template, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    templates::deserialize_canonical(&bytes).map_err(|source| IoError::Template {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_template(path: &Path, t: &Template) -> Result<(), IoError> {
    write_atomic(path, &templates::serialize_canonical(t))
}

pub fn write_wire_template(path: &Path, t: &Template) -> Result<(), IoError> {
    write_atomic(path, &templates::serialize_wire(t))
}
