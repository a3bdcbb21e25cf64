//! Little-endian binary primitives for index snapshots. Readers treat any
//! structural surprise (bad magic, truncation, absurd lengths, trailing
//! bytes) as a corrupt-snapshot error naming the file.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::IndexError;

pub(crate) const VERSION: u32 = 1;

// Sanity caps so a corrupt header cannot drive huge allocations.
const MAX_DIM: u32 = 1 << 16;
const MAX_COUNT: u64 = 1 << 40;
const MAX_STR: u32 = 1 << 20;
pub(crate) const MAX_GROUP: u32 = 1 << 20;

pub(crate) struct SnapshotReader<R: Read> {
    inner: R,
    path: PathBuf,
}

impl<R: Read> SnapshotReader<R> {
    pub fn new(inner: R, path: &Path) -> Self {
        SnapshotReader {
            inner,
            path: path.to_path_buf(),
        }
    }

    pub fn corrupt(&self, message: impl Into<String>) -> IndexError {
        IndexError::Corrupt {
            path: self.path.clone(),
            message: message.into(),
        }
    }

    fn fill(&mut self, buf: &mut [u8]) -> Result<(), IndexError> {
        self.inner.read_exact(buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                self.corrupt("unexpected end of file")
            } else {
                IndexError::Io {
                    path: self.path.clone(),
                    source: e,
                }
            }
        })
    }

    pub fn expect_magic(&mut self, magic: &[u8; 4]) -> Result<(), IndexError> {
        let mut got = [0u8; 4];
        self.fill(&mut got)?;
        if &got != magic {
            return Err(self.corrupt(format!(
                "bad magic {:?}, expected {:?}",
                got,
                std::str::from_utf8(magic).unwrap_or("?")
            )));
        }
        Ok(())
    }

    pub fn read_u32(&mut self) -> Result<u32, IndexError> {
        let mut buf = [0u8; 4];
        self.fill(&mut buf)?;
        Ok(u32::from_le_bytes(buf))
    }

    pub fn read_u64(&mut self) -> Result<u64, IndexError> {
        let mut buf = [0u8; 8];
        self.fill(&mut buf)?;
        Ok(u64::from_le_bytes(buf))
    }

    pub fn read_version(&mut self) -> Result<u32, IndexError> {
        let version = self.read_u32()?;
        if version != VERSION {
            return Err(self.corrupt(format!("unsupported version {version}")));
        }
        Ok(version)
    }

    pub fn read_dim(&mut self) -> Result<usize, IndexError> {
        let dim = self.read_u32()?;
        if dim == 0 || dim > MAX_DIM {
            return Err(self.corrupt(format!("implausible dim {dim}")));
        }
        Ok(dim as usize)
    }

    pub fn read_count(&mut self) -> Result<usize, IndexError> {
        let count = self.read_u64()?;
        if count == 0 || count > MAX_COUNT {
            return Err(self.corrupt(format!("implausible document count {count}")));
        }
        Ok(count as usize)
    }

    pub fn read_string(&mut self) -> Result<String, IndexError> {
        let len = self.read_u32()?;
        if len > MAX_STR {
            return Err(self.corrupt(format!("implausible string length {len}")));
        }
        let mut buf = vec![0u8; len as usize];
        self.fill(&mut buf)?;
        String::from_utf8(buf).map_err(|_| self.corrupt("doc_id is not UTF-8"))
    }

    /// Reads `len` f32 values, bit-exact.
    pub fn read_f32s(&mut self, len: usize) -> Result<Vec<f32>, IndexError> {
        let bytes = len
            .checked_mul(4)
            .ok_or_else(|| self.corrupt("vector payload overflows"))?;
        let mut buf = vec![0u8; bytes];
        self.fill(&mut buf)?;
        Ok(buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    pub fn expect_eof(mut self) -> Result<(), IndexError> {
        let mut buf = [0u8; 1];
        match self.inner.read(&mut buf) {
            Ok(0) => Ok(()),
            Ok(_) => Err(self.corrupt("trailing bytes after payload")),
            Err(e) => Err(IndexError::Io {
                path: self.path.clone(),
                source: e,
            }),
        }
    }
}

pub(crate) struct SnapshotWriter<W: Write> {
    inner: W,
    path: PathBuf,
    written: u64,
}

impl<W: Write> SnapshotWriter<W> {
    pub fn new(inner: W, path: &Path) -> Self {
        SnapshotWriter {
            inner,
            path: path.to_path_buf(),
            written: 0,
        }
    }

    fn put(&mut self, bytes: &[u8]) -> Result<(), IndexError> {
        self.inner.write_all(bytes).map_err(|e| IndexError::Io {
            path: self.path.clone(),
            source: e,
        })?;
        self.written += bytes.len() as u64;
        Ok(())
    }

    pub fn write_magic(&mut self, magic: &[u8; 4]) -> Result<(), IndexError> {
        self.put(magic)
    }

    pub fn write_u32(&mut self, v: u32) -> Result<(), IndexError> {
        self.put(&v.to_le_bytes())
    }

    pub fn write_u64(&mut self, v: u64) -> Result<(), IndexError> {
        self.put(&v.to_le_bytes())
    }

    pub fn write_string(&mut self, s: &str) -> Result<(), IndexError> {
        self.write_u32(s.len() as u32)?;
        self.put(s.as_bytes())
    }

    pub fn write_f32s(&mut self, values: &[f32]) -> Result<(), IndexError> {
        for &v in values {
            self.put(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Flushes and reports total bytes written.
    pub fn finish(mut self) -> Result<u64, IndexError> {
        self.inner.flush().map_err(|e| IndexError::Io {
            path: self.path.clone(),
            source: e,
        })?;
        Ok(self.written)
    }
}
