// SPDX-License-Identifier: MIT OR Apache-2.0

//! ADMP file layout, all integers little-endian:
//!
//! ```text
//! "ADMP" | u32 version | u64 meta_len | meta JSON (UTF-8)
//! block 0 .. block N*L-1, each T*d f32
//! u64 offset of each block | u64 block_count | u64 footer_offset | "ADMP"
//! ```

use std::borrow::Cow;
use std::cell::RefCell;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use super::{Activations, DumpMeta, MemoryDump};
use crate::error::{Error, Result};

pub const ADMP_MAGIC: &[u8; 4] = b"ADMP";
pub const ADMP_VERSION: u32 = 1;
const TRAILER_LEN: u64 = 8 + 8 + 4;

/// Streams blocks to `W` in `(sample, layer)` order.
pub struct DumpWriter<W: Write> {
    out: W,
    meta: DumpMeta,
    offsets: Vec<u64>,
    cursor: u64,
}

impl<W: Write> DumpWriter<W> {
    pub fn new(mut out: W, meta: DumpMeta) -> Result<Self> {
        meta.validate()?;
        let json = serde_json::to_vec(&meta)?;
        out.write_all(ADMP_MAGIC)?;
        out.write_all(&ADMP_VERSION.to_le_bytes())?;
        out.write_all(&(json.len() as u64).to_le_bytes())?;
        out.write_all(&json)?;
        let cursor = 16 + json.len() as u64;
        Ok(Self {
            out,
            offsets: Vec::with_capacity(meta.block_count()),
            meta,
            cursor,
        })
    }

    pub fn push_block(&mut self, block: &[f32]) -> Result<()> {
        if block.len() != self.meta.block_len() {
            return Err(Error::ShapeMismatch(format!(
                "block {} has {} values, meta declares {} x {}",
                self.offsets.len(),
                block.len(),
                self.meta.positions,
                self.meta.hidden
            )));
        }
        if self.offsets.len() == self.meta.block_count() {
            return Err(Error::ShapeMismatch("more blocks than samples x layers".into()));
        }
        let mut bytes = Vec::with_capacity(block.len() * 4);
        for v in block {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        self.out.write_all(&bytes)?;
        self.offsets.push(self.cursor);
        self.cursor += bytes.len() as u64;
        Ok(())
    }

    /// Writes the offset footer and returns the sink.
    pub fn finish(mut self) -> Result<W> {
        if self.offsets.len() != self.meta.block_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} blocks written, meta declares {}",
                self.offsets.len(),
                self.meta.block_count()
            )));
        }
        let footer = self.cursor;
        for o in &self.offsets {
            self.out.write_all(&o.to_le_bytes())?;
        }
        self.out.write_all(&(self.offsets.len() as u64).to_le_bytes())?;
        self.out.write_all(&footer.to_le_bytes())?;
        self.out.write_all(ADMP_MAGIC)?;
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Writes a dump file from blocks in `(sample, layer)` order.
pub fn write_dump<'a, I>(path: &Path, meta: DumpMeta, blocks: I) -> Result<()>
where
    I: IntoIterator<Item = &'a [f32]>,
{
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = DumpWriter::new(BufWriter::new(File::create(path)?), meta)?;
    for b in blocks {
        w.push_block(b)?;
    }
    w.finish()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Random-access reader. Validates the header, declared sizes and footer on
/// open.
pub struct DumpReader<R> {
    inner: RefCell<R>,
    meta: DumpMeta,
    offsets: Vec<u64>,
}

impl DumpReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        Self::new(BufReader::new(File::open(path)?))
    }
}

impl<R: Read + Seek> DumpReader<R> {
    pub fn new(mut r: R) -> Result<Self> {
        let len = r.seek(SeekFrom::End(0))?;
        r.seek(SeekFrom::Start(0))?;
        let mut magic = [0; 4];
        r.read_exact(&mut magic).map_err(|_| Error::BadMagic { expected: "ADMP" })?;
        if &magic != ADMP_MAGIC {
            return Err(Error::BadMagic { expected: "ADMP" });
        }
        let version = read_u32(&mut r)?;
        if version != ADMP_VERSION {
            return Err(Error::VersionUnsupported(version));
        }
        let meta_len = read_u64(&mut r)?;
        if meta_len > len {
            return Err(Error::Corrupt(format!("metadata length {meta_len} exceeds file length {len}")));
        }
        let mut json = vec![0; meta_len as usize];
        r.read_exact(&mut json)?;
        let meta: DumpMeta = serde_json::from_slice(&json)?;
        meta.validate()?;
        if meta.dump_version != ADMP_VERSION {
            return Err(Error::VersionUnsupported(meta.dump_version));
        }

        let blocks = meta.block_count() as u64;
        let block_bytes = meta.block_len() as u64 * 4;
        let data_start = 16 + meta_len;
        let footer = data_start + blocks * block_bytes;
        let expected = footer + blocks * 8 + TRAILER_LEN;
        if len != expected {
            return Err(Error::Corrupt(format!("file is {len} bytes, header implies {expected}")));
        }
        r.seek(SeekFrom::Start(expected - TRAILER_LEN))?;
        let count = read_u64(&mut r)?;
        let footer_at = read_u64(&mut r)?;
        r.read_exact(&mut magic)?;
        if &magic != ADMP_MAGIC {
            return Err(Error::BadMagic { expected: "ADMP" });
        }
        if count != blocks || footer_at != footer {
            return Err(Error::Corrupt("footer disagrees with metadata".into()));
        }
        r.seek(SeekFrom::Start(footer))?;
        let offsets = (0..blocks).map(|_| read_u64(&mut r)).collect::<Result<Vec<_>>>()?;
        for (k, &o) in offsets.iter().enumerate() {
            if o != data_start + k as u64 * block_bytes {
                return Err(Error::Corrupt(format!("block {k} offset {o} is out of place")));
            }
        }
        Ok(Self {
            inner: RefCell::new(r),
            meta,
            offsets,
        })
    }

    pub fn read_slice(&self, sample: usize, layer_id: u32) -> Result<Vec<f32>> {
        let k = self.meta.block_index(sample, layer_id)?;
        let mut bytes = vec![0; self.meta.block_len() * 4];
        {
            let mut r = self.inner.borrow_mut();
            r.seek(SeekFrom::Start(self.offsets[k]))?;
            r.read_exact(&mut bytes)?;
        }
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    /// Loads every block sequentially.
    pub fn read_all(&self) -> Result<MemoryDump> {
        let mut r = self.inner.borrow_mut();
        let n = self.meta.block_count() * self.meta.block_len();
        r.seek(SeekFrom::Start(self.offsets.first().copied().unwrap_or(0)))?;
        let mut bytes = vec![0; n * 4];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        MemoryDump::from_parts(self.meta.clone(), data)
    }
}

impl<R: Read + Seek> Activations for DumpReader<R> {
    fn meta(&self) -> &DumpMeta {
        &self.meta
    }

    fn block(&self, sample: usize, layer_id: u32) -> Result<Cow<'_, [f32]>> {
        self.read_slice(sample, layer_id).map(Cow::Owned)
    }
}

#[cfg(test)]
mod tests {
    use std::io::Cursor;

    use super::*;
    use crate::activations::test_meta;

    fn sample_dump() -> MemoryDump {
        let meta = test_meta(3, vec![0, 4], 5, 2);
        let data = (0..3 * 2 * 10).map(|i| i as f32 * 0.5 - 7.0).collect();
        MemoryDump::from_parts(meta, data).unwrap()
    }

    #[test]
    fn size_arithmetic() {
        let dump = sample_dump();
        let bytes = dump.to_bytes();
        let meta_len = serde_json::to_vec(dump.meta()).unwrap().len();
        assert_eq!(bytes.len(), 16 + meta_len + 3 * 2 * 5 * 2 * 4 + 6 * 8 + 20);
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = sample_dump().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(DumpReader::new(Cursor::new(bytes)), Err(Error::BadMagic { .. })));
        let mut bytes = sample_dump().to_bytes();
        bytes[4] = 9;
        assert!(matches!(DumpReader::new(Cursor::new(bytes)), Err(Error::VersionUnsupported(9))));
    }

    #[test]
    fn truncated_and_padded_files_rejected() {
        let bytes = sample_dump().to_bytes();
        let short = bytes[..bytes.len() - 1].to_vec();
        assert!(matches!(DumpReader::new(Cursor::new(short)), Err(Error::Corrupt(_))));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(DumpReader::new(Cursor::new(long)), Err(Error::Corrupt(_))));
    }

    #[test]
    fn writer_rejects_wrong_shapes() {
        let mut w = DumpWriter::new(Vec::new(), test_meta(1, vec![0], 2, 2)).unwrap();
        assert!(matches!(w.push_block(&[1.0; 3]), Err(Error::ShapeMismatch(_))));
        w.push_block(&[1.0; 4]).unwrap();
        assert!(w.push_block(&[1.0; 4]).is_err());
        let w = DumpWriter::new(Vec::new(), test_meta(2, vec![0], 2, 2)).unwrap();
        assert!(w.finish().is_err());
    }

    #[test]
    fn random_access_matches_sequential() {
        let dump = sample_dump();
        let reader = DumpReader::new(Cursor::new(dump.to_bytes())).unwrap();
        let all = reader.read_all().unwrap();
        assert_eq!(all, dump);
        for s in (0..3).rev() {
            for l in [4, 0] {
                assert_eq!(reader.read_slice(s, l).unwrap(), dump.block_ref(s, l).unwrap());
            }
        }
        assert!(matches!(reader.read_slice(0, 3), Err(Error::IndexOutOfRange { .. })));
    }
}
