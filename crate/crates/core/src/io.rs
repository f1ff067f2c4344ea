//! Matrix, mask and image files.
//!
//! CSV matrices are plain comma-separated numeric rows with no header, one
//! line per matrix row. Grayscale images are binary (P5) or ASCII (P2) PGM
//! with maxval 255, mapped to matrices with entries in `[0, 255]`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use image::codecs::pnm::{PnmDecoder, PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder};

use crate::error::{invalid, Error, Result};
use crate::matcore::DenseMatrix;
use crate::solvers::ObservationMask;

/// On-disk matrix encoding, chosen from the file extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Pgm,
}

impl MatrixFormat {
    /// `.pgm` and `.pnm` are images, anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
        {
            Some(ext) if ext == "pgm" || ext == "pnm" => MatrixFormat::Pgm,
            _ => MatrixFormat::Csv,
        }
    }
}

fn parse_error(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_string(),
        line,
        message: message.into(),
    }
}

/// Parses CSV matrix text. `source` names the input in error messages.
pub fn parse_matrix_csv<R: Read>(reader: R, source: &str) -> Result<DenseMatrix> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in csv.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(source, line, e.to_string())
        })?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(parse_error(
                    source,
                    line,
                    format!("expected {c} fields, found {}", record.len()),
                ))
            }
            Some(_) => {}
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                parse_error(
                    source,
                    line,
                    format!("field {} is not a number: `{field}`", j + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(parse_error(
                    source,
                    line,
                    format!("field {} is not finite", j + 1),
                ));
            }
            values.push(v);
        }
        rows += 1;
    }
    match cols {
        Some(c) if c > 0 => Ok(DenseMatrix::from_row_slice(rows, c, &values)),
        _ => Err(parse_error(source, 1, "no matrix rows")),
    }
}

pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let file = File::open(path)?;
    parse_matrix_csv(BufReader::new(file), &path.display().to_string())
}

/// Writes every entry with 17 significant digits, enough to round-trip.
pub fn format_matrix_csv(m: &DenseMatrix) -> String {
    let mut out = String::with_capacity(m.len() * 24);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.16e}", m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, m: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(format_matrix_csv(m).as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Decodes a P2 or P5 graymap with maxval 255.
pub fn parse_pgm<R: Read>(reader: R) -> Result<DenseMatrix> {
    let mut bytes = Vec::new();
    BufReader::new(reader).read_to_end(&mut bytes)?;
    let decoder = PnmDecoder::new(std::io::Cursor::new(bytes))?;
    let image = match DynamicImage::from_decoder(decoder)? {
        DynamicImage::ImageLuma8(img) => img,
        other => {
            return invalid(format!(
                "expected an 8-bit graymap, found {:?}",
                other.color()
            ))
        }
    };
    let (w, h) = image.dimensions();
    Ok(DenseMatrix::from_fn(h as usize, w as usize, |i, j| {
        image.get_pixel(j as u32, i as u32)[0] as f64
    }))
}

pub fn read_pgm(path: &Path) -> Result<DenseMatrix> {
    parse_pgm(File::open(path)?)
}

/// Rounds and clamps an entry to a gray level.
pub fn to_gray(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Encodes `m` as a graymap; entries are clamped to `[0, 255]` and rounded.
pub fn encode_pgm<W: Write>(writer: W, m: &DenseMatrix, ascii: bool) -> Result<()> {
    let (h, w) = m.shape();
    let (Ok(w32), Ok(h32)) = (u32::try_from(w), u32::try_from(h)) else {
        return invalid("image dimensions exceed u32");
    };
    let mut pixels = Vec::with_capacity(w * h);
    for i in 0..h {
        for j in 0..w {
            pixels.push(to_gray(m[(i, j)]));
        }
    }
    let encoding = if ascii {
        SampleEncoding::Ascii
    } else {
        SampleEncoding::Binary
    };
    PnmEncoder::new(writer)
        .with_subtype(PnmSubtype::Graymap(encoding))
        .write_image(&pixels, w32, h32, ExtendedColorType::L8)?;
    Ok(())
}

/// Writes a binary (P5) graymap.
pub fn write_pgm(path: &Path, m: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_pgm(&mut w, m, false)?;
    w.flush()?;
    Ok(())
}

/// Reads CSV or PGM depending on the extension.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    match MatrixFormat::from_path(path) {
        MatrixFormat::Csv => read_matrix_csv(path),
        MatrixFormat::Pgm => read_pgm(path),
    }
}

/// Writes CSV or PGM depending on the extension.
pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    match MatrixFormat::from_path(path) {
        MatrixFormat::Csv => write_matrix_csv(path, m),
        MatrixFormat::Pgm => write_pgm(path, m),
    }
}

/// A CSV of 0/1 entries; 1 marks an observed entry.
pub fn parse_mask_csv<R: Read>(reader: R, source: &str) -> Result<ObservationMask> {
    let m = parse_matrix_csv(reader, source)?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if v != 0.0 && v != 1.0 {
                return Err(parse_error(
                    source,
                    i + 1,
                    format!("mask entries must be 0 or 1, found {v}"),
                ));
            }
        }
    }
    ObservationMask::from_dense(m.map(|v| v == 1.0))
}

pub fn read_mask_csv(path: &Path) -> Result<ObservationMask> {
    parse_mask_csv(
        BufReader::new(File::open(path)?),
        &path.display().to_string(),
    )
}

pub fn format_mask_csv(mask: &ObservationMask) -> String {
    let (rows, cols) = mask.shape();
    let mut out = String::with_capacity(rows * cols * 2);
    for i in 0..rows {
        for j in 0..cols {
            if j > 0 {
                out.push(',');
            }
            out.push(if mask.contains(i, j) { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}
