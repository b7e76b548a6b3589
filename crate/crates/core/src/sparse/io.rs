//! `DSM1` binary matrix files.
//!
//! Layout, all integers little-endian `u64`, values little-endian `f64`:
//!
//! ```text
//! "DSM1" | n_rows | n_cols | nnz | row_start[n_rows + 1] | col_index[nnz] | value[nnz]
//! ```
//!
//! Only the row copy is written; the column copy is rebuilt on load.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CsrMatrix, DualSparseMatrix};
use crate::error::{Error, Result};

pub const DSM_MAGIC: &[u8; 4] = b"DSM1";

pub fn write_dsm<W: Write>(m: &DualSparseMatrix, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let csr = m.by_rows();
    w.write_all(DSM_MAGIC)?;
    for header in [csr.n_rows(), csr.n_cols(), csr.nnz()] {
        w.write_all(&(header as u64).to_le_bytes())?;
    }
    for &v in csr.row_start().iter().chain(csr.col_index()) {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    for &v in csr.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dsm<R: Read>(reader: R) -> Result<DualSparseMatrix> {
    let mut r = BufReader::new(reader);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::BadFormat("truncated header".to_string()))?;
    if &magic != DSM_MAGIC {
        return Err(Error::BadFormat(format!("bad magic {magic:?}")));
    }
    let n_rows = read_len(&mut r)?;
    let n_cols = read_len(&mut r)?;
    let nnz = read_len(&mut r)?;
    let row_start = read_indices(&mut r, n_rows + 1)?;
    let col_index = read_indices(&mut r, nnz)?;
    let mut value = Vec::with_capacity(nnz);
    let mut buf = [0u8; 8];
    for _ in 0..nnz {
        r.read_exact(&mut buf)
            .map_err(|_| Error::BadFormat("truncated values".to_string()))?;
        value.push(f64::from_le_bytes(buf));
    }
    if r.read(&mut buf)? != 0 {
        return Err(Error::BadFormat("trailing bytes".to_string()));
    }
    let csr = CsrMatrix::from_parts(n_rows, n_cols, row_start, col_index, value)?;
    Ok(DualSparseMatrix::from_rows(csr))
}

fn read_len<R: Read>(r: &mut R) -> Result<usize> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::BadFormat("truncated header".to_string()))?;
    usize::try_from(u64::from_le_bytes(buf))
        .map_err(|_| Error::BadFormat("length does not fit in memory".to_string()))
}

fn read_indices<R: Read>(r: &mut R, count: usize) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(count.min(1 << 28));
    for _ in 0..count {
        out.push(read_len(r)?);
    }
    Ok(out)
}

impl DualSparseMatrix {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_dsm(self, std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_dsm(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DualSparseMatrix {
        DualSparseMatrix::from_triplets(&[(0, 1, 0.25), (2, 0, -1.5), (2, 2, 3.0)], 3, 4).unwrap()
    }

    #[test]
    fn byte_exact_round_trip() {
        let m = sample();
        let mut bytes = Vec::new();
        write_dsm(&m, &mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"DSM1");
        assert_eq!(bytes.len(), 4 + 3 * 8 + 4 * 8 + 3 * 8 + 3 * 8);
        let back = read_dsm(&bytes[..]).unwrap();
        assert_eq!(back, m);
        let mut again = Vec::new();
        write_dsm(&back, &mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn header_layout() {
        let mut bytes = Vec::new();
        write_dsm(&sample(), &mut bytes).unwrap();
        let word = |k: usize| u64::from_le_bytes(bytes[4 + 8 * k..12 + 8 * k].try_into().unwrap());
        assert_eq!((word(0), word(1), word(2)), (3, 4, 3));
        // row_start = [0, 1, 1, 3]
        assert_eq!((word(3), word(4), word(5), word(6)), (0, 1, 1, 3));
    }

    #[test]
    fn corrupt_files_rejected() {
        let mut bytes = Vec::new();
        write_dsm(&sample(), &mut bytes).unwrap();
        assert!(read_dsm(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(read_dsm(&extra[..]).is_err());
        let mut magic = bytes.clone();
        magic[3] = b'2';
        assert!(read_dsm(&magic[..]).is_err());
        // column index out of range
        let mut bad = bytes.clone();
        let col0 = 4 + 3 * 8 + 4 * 8;
        bad[col0..col0 + 8].copy_from_slice(&9u64.to_le_bytes());
        assert!(read_dsm(&bad[..]).is_err());
    }
}
