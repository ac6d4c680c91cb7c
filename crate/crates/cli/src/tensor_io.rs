//! Tensor and label file I/O.
//!
//! The binary tensor layout (canonical fixture format, extension `.tnsr`):
//! bytes 0-3 the magic `TNSR`, byte 4 the format version (1), byte 5 the
//! order N, bytes 6-7 reserved zero, then N little-endian u64 extents, then
//! the payload as little-endian f64 with the first index fastest.
//!
//! CSV matrices hold one sample per row; loading one yields an order-2 tensor
//! with features on mode 0 and samples on mode 1 (the sample mode last, as
//! the solvers expect). Floats are written with 17 significant digits so a
//! round-trip reproduces the exact bits.

use std::io::Read;
use std::path::Path;

use hyperntf_core::tensor::{DenseMatrix, DenseTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

const MAGIC: &[u8; 4] = b"TNSR";
const VERSION: u8 = 1;

/// 17-significant-digit float formatting; exact f64 round-trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_tnsr_bytes(t: &DenseTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * t.order() + 8 * t.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(t.order() as u8);
    out.extend_from_slice(&[0u8, 0u8]);
    for &d in t.dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_tnsr_bytes(bytes: &[u8], path: &Path) -> Result<DenseTensor, CliError> {
    let ctx = path.display();
    if bytes.len() < 8 {
        return Err(CliError::Data(format!(
            "{ctx}: truncated header, {} bytes",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(CliError::Data(format!("{ctx}: bad magic at offset 0")));
    }
    if bytes[4] != VERSION {
        return Err(CliError::Data(format!(
            "{ctx}: unsupported version {} at offset 4",
            bytes[4]
        )));
    }
    let order = bytes[5] as usize;
    if order == 0 {
        return Err(CliError::Data(format!("{ctx}: zero order at offset 5")));
    }
    if bytes[6] != 0 || bytes[7] != 0 {
        return Err(CliError::Data(format!(
            "{ctx}: nonzero reserved bytes at offset 6"
        )));
    }
    let dims_end = 8 + 8 * order;
    if bytes.len() < dims_end {
        return Err(CliError::Data(format!(
            "{ctx}: truncated at offset {}, expected {order} extents",
            bytes.len()
        )));
    }
    let mut dims = Vec::with_capacity(order);
    for i in 0..order {
        let mut buf = [0u8; 8];
        buf.copy_from_slice(&bytes[8 + 8 * i..16 + 8 * i]);
        dims.push(u64::from_le_bytes(buf) as usize);
    }
    let total: usize = dims.iter().product();
    let expected = dims_end + 8 * total;
    if bytes.len() != expected {
        return Err(CliError::Data(format!(
            "{ctx}: payload length mismatch at offset {dims_end}: have {} bytes, dims {:?} need {expected}",
            bytes.len(),
            dims
        )));
    }
    let mut data = Vec::with_capacity(total);
    for i in 0..total {
        let mut buf = [0u8; 8];
        buf.copy_from_slice(&bytes[dims_end + 8 * i..dims_end + 8 * i + 8]);
        data.push(f64::from_le_bytes(buf));
    }
    DenseTensor::new(dims, data).map_err(|e| CliError::Data(format!("{ctx}: {e}")))
}

pub fn save_tnsr(t: &DenseTensor, path: &Path) -> Result<(), CliError> {
    crate::report::atomic_write(path, &write_tnsr_bytes(t))
}

pub fn load_tnsr(path: &Path) -> Result<DenseTensor, CliError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    read_tnsr_bytes(&bytes, path)
}

/// Numeric CSV rows; a non-numeric first line is treated as a header and
/// skipped.
pub fn read_csv_rows(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse()).collect();
        match parsed {
            Ok(row) => {
                if let Some(first) = rows.first() {
                    if row.len() != first.len() {
                        return Err(CliError::Data(format!(
                            "{}: line {} has {} fields, expected {}",
                            path.display(),
                            lineno + 1,
                            row.len(),
                            first.len()
                        )));
                    }
                }
                rows.push(row);
            }
            Err(e) => {
                if lineno == 0 {
                    continue; // header line
                }
                return Err(CliError::Data(format!(
                    "{}: line {}: {e}",
                    path.display(),
                    lineno + 1
                )));
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no numeric rows",
            path.display()
        )));
    }
    Ok(rows)
}

/// CSV matrix (rows are samples) as an order-2 tensor with samples on the
/// last mode.
pub fn load_csv_tensor(path: &Path) -> Result<DenseTensor, CliError> {
    let rows = read_csv_rows(path)?;
    let m = rows.len();
    let d = rows[0].len();
    let mut data = vec![0.0; d * m];
    for (r, row) in rows.iter().enumerate() {
        data[r * d..(r + 1) * d].copy_from_slice(row);
    }
    DenseTensor::new(vec![d, m], data).map_err(|e| CliError::Data(e.to_string()))
}

/// Load a tensor by extension: `.tnsr` binary, anything else as CSV.
pub fn load_tensor(path: &Path) -> Result<DenseTensor, CliError> {
    if path.extension().and_then(|e| e.to_str()) == Some("tnsr") {
        load_tnsr(path)
    } else {
        load_csv_tensor(path)
    }
}

/// Reject tensors with negative entries, naming the first offender.
pub fn require_nonnegative(t: &DenseTensor, path: &Path) -> Result<(), CliError> {
    if let Some((index, value)) = t.first_negative() {
        return Err(CliError::Data(format!(
            "{}: negative entry {value} at linear index {index}",
            path.display()
        )));
    }
    Ok(())
}

/// Matrix rows (samples) to CSV with a generated header `c1..cD` unless one
/// is supplied.
pub fn matrix_csv(m: &DenseMatrix, header: Option<&[String]>) -> String {
    let mut out = String::new();
    match header {
        Some(names) => {
            out.push_str(&names.join(","));
        }
        None => {
            let names: Vec<String> = (1..=m.cols()).map(|j| format!("c{j}")).collect();
            out.push_str(&names.join(","));
        }
    }
    out.push('\n');
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(m.get(i, j)));
        }
        out.push('\n');
    }
    out
}

/// Order-1 or order-2 tensor to sample-rows CSV (inverse of
/// [`load_csv_tensor`]).
pub fn tensor_csv(t: &DenseTensor) -> Result<String, CliError> {
    let (d, m) = match t.dims() {
        [d] => (*d, 1),
        [d, m] => (*d, *m),
        other => {
            return Err(CliError::Config(format!(
                "CSV export supports order 1 or 2, tensor has dims {other:?}"
            )))
        }
    };
    let mut out = String::new();
    let names: Vec<String> = (1..=d).map(|j| format!("c{j}")).collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for s in 0..m {
        for f in 0..d {
            if f > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(t.data()[f + d * s]));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Single-column integer label CSV.
pub fn load_labels(path: &Path) -> Result<Vec<usize>, CliError> {
    let rows = read_csv_rows(path)?;
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != 1 {
                return Err(CliError::Data(format!(
                    "{}: label row {} has {} fields, expected 1",
                    path.display(),
                    i + 1,
                    row.len()
                )));
            }
            let v = row[0];
            if v < 0.0 || v.fract() != 0.0 {
                return Err(CliError::Data(format!(
                    "{}: label row {} is not a nonnegative integer",
                    path.display(),
                    i + 1
                )));
            }
            Ok(v as usize)
        })
        .collect()
}

fn read_be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32, CliError> {
    if bytes.len() < offset + 4 {
        return Err(CliError::Data(format!(
            "{}: truncated at offset {offset}",
            path.display()
        )));
    }
    let mut buf = [0u8; 4];
    buf.copy_from_slice(&bytes[offset..offset + 4]);
    Ok(u32::from_be_bytes(buf))
}

/// IDX image/label pair (the common handwritten-digit dump layout: big-endian
/// magic 0x00000803 for images, 0x00000801 for labels). Pixels rescale to
/// [0, 1]; samples land on the last tensor mode. A `limit` below the stored
/// count takes a seeded subsample without replacement.
pub fn import_idx(
    images_path: &Path,
    labels_path: &Path,
    limit: usize,
    seed: u64,
) -> Result<(DenseTensor, Vec<usize>), CliError> {
    let read_all = |p: &Path| -> Result<Vec<u8>, CliError> {
        let mut bytes = Vec::new();
        std::fs::File::open(p)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
        Ok(bytes)
    };
    let images = read_all(images_path)?;
    let labels = read_all(labels_path)?;

    if read_be_u32(&images, 0, images_path)? != 0x0000_0803 {
        return Err(CliError::Data(format!(
            "{}: bad image magic at offset 0",
            images_path.display()
        )));
    }
    if read_be_u32(&labels, 0, labels_path)? != 0x0000_0801 {
        return Err(CliError::Data(format!(
            "{}: bad label magic at offset 0",
            labels_path.display()
        )));
    }
    let count = read_be_u32(&images, 4, images_path)? as usize;
    let rows = read_be_u32(&images, 8, images_path)? as usize;
    let cols = read_be_u32(&images, 12, images_path)? as usize;
    let label_count = read_be_u32(&labels, 4, labels_path)? as usize;
    if label_count != count {
        return Err(CliError::Data(format!(
            "image count {count} does not match label count {label_count}"
        )));
    }
    let pixels = rows * cols;
    if images.len() != 16 + count * pixels {
        return Err(CliError::Data(format!(
            "{}: payload length mismatch, {} bytes for {count} images of {rows}x{cols}",
            images_path.display(),
            images.len()
        )));
    }
    if labels.len() != 8 + count {
        return Err(CliError::Data(format!(
            "{}: payload length mismatch, {} bytes for {count} labels",
            labels_path.display(),
            labels.len()
        )));
    }

    let take = if limit == 0 || limit >= count {
        (0..count).collect::<Vec<usize>>()
    } else {
        // partial Fisher-Yates over the index range
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx: Vec<usize> = (0..count).collect();
        for i in 0..limit {
            let j = rng.random_range(i..count);
            idx.swap(i, j);
        }
        idx.truncate(limit);
        idx
    };

    let m = take.len();
    let mut data = vec![0.0; pixels * m];
    let mut out_labels = Vec::with_capacity(m);
    for (s, &img) in take.iter().enumerate() {
        out_labels.push(labels[8 + img] as usize);
        let base = 16 + img * pixels;
        // IDX stores row-major pixels; tensor is (row, col, sample)
        for r in 0..rows {
            for c in 0..cols {
                data[r + rows * c + pixels * s] = images[base + r * cols + c] as f64 / 255.0;
            }
        }
    }
    let t = DenseTensor::new(vec![rows, cols, m], data).map_err(|e| CliError::Data(e.to_string()))?;
    Ok((t, out_labels))
}
