//! The `MGT1` tensor container.
//!
//! ```text
//! magic      4 bytes  "MGT1"
//! count      u64
//! entries    count times:
//!   name_len u32, name (UTF-8)
//!   dtype    u8 (1 = f32)
//!   rank     u32
//!   dims     rank times u64
//!   payload  4 * product(dims) bytes, f32 row-major
//! ```
//!
//! All integers and floats are little-endian. Readers validate the whole
//! header chain against the file length before any payload is read.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::neural::Tensor;

pub const MAGIC: &[u8; 4] = b"MGT1";
pub const DTYPE_F32: u8 = 1;

/// A named tensor as stored in a container.
pub type NamedTensor = (String, Tensor<f32>);

fn validate_for_write(tensors: &[NamedTensor]) -> Result<()> {
    let mut seen = HashSet::new();
    for (name, t) in tensors {
        if !seen.insert(name.as_str()) {
            return Err(Error::Format(format!("duplicate tensor name {name:?}")));
        }
        if t.rank() == 0 || t.shape().contains(&0) {
            return Err(Error::Format(format!(
                "tensor {name:?} has shape {:?}; dims must be nonzero and rank at least 1",
                t.shape()
            )));
        }
        if u32::try_from(name.len()).is_err() || u32::try_from(t.rank()).is_err() {
            return Err(Error::Format(format!("tensor {name:?} header does not fit")));
        }
    }
    Ok(())
}

pub fn write_to<W: Write>(mut w: W, tensors: &[NamedTensor]) -> Result<(), std::io::Error> {
    w.write_all(MAGIC)?;
    w.write_all(&(tensors.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(1 << 16);
    for (name, t) in tensors {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[DTYPE_F32])?;
        w.write_all(&(t.rank() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for chunk in t.data().chunks(1 << 14) {
            buf.clear();
            for v in chunk {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
    }
    w.flush()
}

pub fn encode_container(tensors: &[NamedTensor]) -> Result<Vec<u8>> {
    validate_for_write(tensors)?;
    let mut out = Vec::new();
    write_to(&mut out, tensors).expect("writing to memory cannot fail");
    Ok(out)
}

pub fn write_container(path: impl AsRef<Path>, tensors: &[NamedTensor]) -> Result<()> {
    let path = path.as_ref();
    validate_for_write(tensors)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_to(BufWriter::new(file), tensors).map_err(|e| Error::io(path, e))
}

struct EntryHeader {
    name: String,
    dims: Vec<usize>,
    payload_offset: u64,
}

struct Scanner<R> {
    inner: R,
    pos: u64,
    len: u64,
}

impl<R: Read + Seek> Scanner<R> {
    fn need(&self, n: u64, what: &str) -> Result<()> {
        if self.len - self.pos < n {
            return Err(Error::Corrupt {
                offset: self.pos,
                reason: format!("truncated {what}: need {n} bytes, {} remain", self.len - self.pos),
            });
        }
        Ok(())
    }

    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        self.need(N as u64, what)?;
        let mut b = [0u8; N];
        self.inner.read_exact(&mut b).map_err(|e| Error::Corrupt {
            offset: self.pos,
            reason: format!("reading {what}: {e}"),
        })?;
        self.pos += N as u64;
        Ok(b)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        self.bytes::<4>(what).map(u32::from_le_bytes)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        self.bytes::<8>(what).map(u64::from_le_bytes)
    }

    fn skip(&mut self, n: u64, what: &str) -> Result<()> {
        self.need(n, what)?;
        self.inner.seek(SeekFrom::Current(n as i64)).map_err(|e| Error::Corrupt {
            offset: self.pos,
            reason: format!("seeking past {what}: {e}"),
        })?;
        self.pos += n;
        Ok(())
    }

    fn headers(&mut self) -> Result<Vec<EntryHeader>> {
        if self.bytes::<4>("magic")? != *MAGIC {
            return Err(Error::Corrupt {
                offset: 0,
                reason: "bad magic, expected MGT1".into(),
            });
        }
        let count = self.u64("entry count")?;
        let mut headers = Vec::new();
        let mut names = HashSet::new();
        for i in 0..count {
            let at = self.pos;
            let name_len = self.u32("name length")? as u64;
            self.need(name_len, "name")?;
            let mut raw = vec![0u8; name_len as usize];
            self.inner.read_exact(&mut raw).map_err(|e| Error::Corrupt {
                offset: self.pos,
                reason: format!("reading name: {e}"),
            })?;
            self.pos += name_len;
            let name = String::from_utf8(raw).map_err(|_| Error::Corrupt {
                offset: at + 4,
                reason: format!("entry {i} name is not UTF-8"),
            })?;
            let dtype_at = self.pos;
            let [dtype] = self.bytes::<1>("dtype")?;
            if dtype != DTYPE_F32 {
                return Err(Error::Corrupt {
                    offset: dtype_at,
                    reason: format!("unknown dtype code {dtype} for {name:?}"),
                });
            }
            let rank = self.u32("rank")? as u64;
            self.need(rank.saturating_mul(8), "dims")?;
            let mut dims = Vec::with_capacity(rank as usize);
            let mut elems: u64 = 1;
            for _ in 0..rank {
                let d_at = self.pos;
                let d = self.u64("dim")?;
                elems = elems.checked_mul(d).filter(|_| d > 0).ok_or_else(|| Error::Corrupt {
                    offset: d_at,
                    reason: format!("invalid dimension {d} for {name:?}"),
                })?;
                dims.push(d as usize);
            }
            if rank == 0 {
                return Err(Error::Corrupt {
                    offset: self.pos - 4,
                    reason: format!("tensor {name:?} has rank 0"),
                });
            }
            let payload = elems.checked_mul(4).ok_or_else(|| Error::Corrupt {
                offset: self.pos,
                reason: format!("payload size overflows for {name:?}"),
            })?;
            let payload_offset = self.pos;
            self.skip(payload, "payload")?;
            if !names.insert(name.clone()) {
                return Err(Error::Corrupt {
                    offset: at,
                    reason: format!("duplicate tensor name {name:?}"),
                });
            }
            headers.push(EntryHeader {
                name,
                dims,
                payload_offset,
            });
        }
        if self.pos != self.len {
            return Err(Error::Corrupt {
                offset: self.pos,
                reason: format!("{} trailing bytes after last entry", self.len - self.pos),
            });
        }
        Ok(headers)
    }
}

fn read_from<R: Read + Seek>(inner: R, len: u64) -> Result<Vec<NamedTensor>> {
    let mut scanner = Scanner { inner, pos: 0, len };
    let headers = scanner.headers()?;
    let mut r = scanner.inner;
    let mut out = Vec::with_capacity(headers.len());
    let mut buf = vec![0u8; 1 << 16];
    for h in headers {
        let corrupt = |e: std::io::Error| Error::Corrupt {
            offset: h.payload_offset,
            reason: format!("reading payload of {:?}: {e}", h.name),
        };
        r.seek(SeekFrom::Start(h.payload_offset)).map_err(corrupt)?;
        let n: usize = h.dims.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut remaining = n * 4;
        while remaining > 0 {
            let take = remaining.min(buf.len());
            r.read_exact(&mut buf[..take]).map_err(corrupt)?;
            data.extend(
                buf[..take]
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            );
            remaining -= take;
        }
        out.push((h.name, Tensor::from_vec(&h.dims, data)?));
    }
    Ok(out)
}

pub fn decode_container(bytes: &[u8]) -> Result<Vec<NamedTensor>> {
    read_from(std::io::Cursor::new(bytes), bytes.len() as u64)
}

pub fn read_container(path: impl AsRef<Path>) -> Result<Vec<NamedTensor>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    read_from(BufReader::new(file), len)
}

/// Removes and returns the tensor called `name`.
pub fn take(tensors: &mut Vec<NamedTensor>, name: &str) -> Result<Tensor<f32>> {
    let i = tensors
        .iter()
        .position(|(n, _)| n == name)
        .ok_or_else(|| Error::Format(format!("container has no tensor named {name:?}")))?;
    Ok(tensors.remove(i).1)
}

/// Stores arbitrary bytes (e.g. a JSON manifest) as a rank-1 tensor with one
/// byte value per element.
pub fn bytes_tensor(bytes: &[u8]) -> Tensor<f32> {
    let data = if bytes.is_empty() {
        vec![0.0]
    } else {
        bytes.iter().map(|&b| b as f32).collect()
    };
    Tensor::from_vec(&[data.len()], data).expect("rank-1 length matches")
}

pub fn tensor_bytes(t: &Tensor<f32>) -> Result<Vec<u8>> {
    t.data()
        .iter()
        .map(|&v| {
            if (0.0..=255.0).contains(&v) && v.fract() == 0.0 {
                Ok(v as u8)
            } else {
                Err(Error::Format(format!("value {v} is not a byte")))
            }
        })
        .collect()
}
