//! NSPM coefficient file format (binary, little-endian).
//!
//! Layout: magic `NSPM` (4E 53 50 4D), format version u32 = 1, rows u32,
//! cols u32, bin count m u32, then m f64 time stamps in seconds, then
//! m*rows*cols f64 coefficients in bin-major, row-major order. Readers
//! reject wrong magic or version and any size mismatch.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::ActivationTensor;
use crate::spatial::PixelGrid;

pub const MAGIC: [u8; 4] = *b"NSPM";
pub const VERSION: u32 = 1;

pub fn write_nspm_to<W: Write>(writer: &mut W, acts: &ActivationTensor) -> std::io::Result<()> {
    writer.write_all(&MAGIC)?;
    writer.write_all(&VERSION.to_le_bytes())?;
    writer.write_all(&(acts.grid.rows as u32).to_le_bytes())?;
    writer.write_all(&(acts.grid.cols as u32).to_le_bytes())?;
    writer.write_all(&(acts.bins() as u32).to_le_bytes())?;
    for &t in &acts.time_bins {
        writer.write_all(&t.to_le_bytes())?;
    }
    for bin in &acts.coeffs {
        for &v in bin {
            writer.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_nspm(path: &Path, acts: &ActivationTensor) -> Result<()> {
    let wrap = |e| Error::Io { path: path.display().to_string(), source: e };
    let file = File::create(path).map_err(wrap)?;
    let mut writer = BufWriter::new(file);
    write_nspm_to(&mut writer, acts).map_err(wrap)?;
    writer.flush().map_err(wrap)
}

pub fn read_nspm_from<R: Read>(reader: &mut R) -> Result<ActivationTensor> {
    let mut magic = [0u8; 4];
    read_exact(reader, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:02X?}, expected {:02X?} (\"NSPM\")",
            magic, MAGIC
        )));
    }
    let version = read_u32(reader, "version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported NSPM version {version}, expected {VERSION}")));
    }
    let rows = read_u32(reader, "rows")? as usize;
    let cols = read_u32(reader, "cols")? as usize;
    let bins = read_u32(reader, "bin count")? as usize;
    let grid = PixelGrid::new(rows, cols)
        .map_err(|e| Error::Format(format!("invalid grid in NSPM header: {e}")))?;
    if bins == 0 {
        return Err(Error::Format("NSPM file declares zero time bins".into()));
    }
    let mut time_bins = Vec::with_capacity(bins);
    for i in 0..bins {
        let t = read_f64(reader, &format!("time stamp {i}"))?;
        if !t.is_finite() {
            return Err(Error::Format(format!("non-finite time stamp {i}")));
        }
        time_bins.push(t);
    }
    let mut coeffs = Vec::with_capacity(bins);
    for j in 0..bins {
        let mut bin = Vec::with_capacity(grid.n());
        for i in 0..grid.n() {
            let v = read_f64(reader, &format!("coefficient {i} of bin {j}"))?;
            if !v.is_finite() {
                return Err(Error::Format(format!("non-finite coefficient {i} in bin {j}")));
            }
            bin.push(v);
        }
        coeffs.push(bin);
    }
    let mut trailing = [0u8; 1];
    match reader.read(&mut trailing) {
        Ok(0) => {}
        Ok(_) => return Err(Error::Format("trailing bytes after NSPM payload".into())),
        Err(e) => return Err(Error::Format(format!("read after payload failed: {e}"))),
    }
    Ok(ActivationTensor { grid, time_bins, coeffs })
}

pub fn read_nspm(path: &Path) -> Result<ActivationTensor> {
    let file = File::open(path).map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    read_nspm_from(&mut BufReader::new(file))
}

fn read_exact<R: Read>(reader: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    reader
        .read_exact(buf)
        .map_err(|_| Error::Format(format!("truncated NSPM file while reading {what}")))
}

fn read_u32<R: Read>(reader: &mut R, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(reader, &mut buf, what)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64<R: Read>(reader: &mut R, what: &str) -> Result<f64> {
    let mut buf = [0u8; 8];
    read_exact(reader, &mut buf, what)?;
    Ok(f64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Lcg64;

    fn sample_tensor() -> ActivationTensor {
        let grid = PixelGrid::new(3, 4).unwrap();
        let mut rng = Lcg64::new(8);
        ActivationTensor {
            grid,
            time_bins: vec![0.01, 0.02],
            coeffs: vec![rng.fill(12, 10.0), rng.fill(12, 10.0)],
        }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let acts = sample_tensor();
        let mut buf = Vec::new();
        write_nspm_to(&mut buf, &acts).unwrap();
        let back = read_nspm_from(&mut buf.as_slice()).unwrap();
        assert_eq!(acts, back);
        // Header arithmetic: 4 magic + 3*4 dims + 4 version + 2*8 stamps.
        assert_eq!(buf.len(), 4 + 4 + 12 + 16 + 2 * 12 * 8);
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let acts = sample_tensor();
        let mut buf = Vec::new();
        write_nspm_to(&mut buf, &acts).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(read_nspm_from(&mut bad_magic.as_slice()), Err(Error::Format(_))));

        let mut bad_version = buf.clone();
        bad_version[4] = 9;
        assert!(matches!(read_nspm_from(&mut bad_version.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_non_finite_payload() {
        let acts = sample_tensor();
        let mut buf = Vec::new();
        write_nspm_to(&mut buf, &acts).unwrap();
        let first_coeff = 4 + 4 + 12 + 16;
        buf[first_coeff..first_coeff + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(read_nspm_from(&mut buf.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_truncation_and_trailing_garbage() {
        let acts = sample_tensor();
        let mut buf = Vec::new();
        write_nspm_to(&mut buf, &acts).unwrap();

        let truncated = &buf[..buf.len() - 3];
        assert!(matches!(read_nspm_from(&mut &truncated[..]), Err(Error::Format(_))));

        let mut padded = buf.clone();
        padded.push(0);
        assert!(matches!(read_nspm_from(&mut padded.as_slice()), Err(Error::Format(_))));
    }
}
