//! Binary container for named numeric arrays.
//!
//! Layout (little endian): 8-byte magic, `u32` format version, `u32` array
//! count, then per array a `u16`-prefixed UTF-8 name, a dtype byte
//! (1 = f64, 2 = u64), a rank byte, `u64` dimensions and the raw values.
//! The file ends with the SHA-256 digest of everything before it.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::CheckpointError;

pub const MAGIC: &[u8; 8] = b"FFLTCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum ArrayData {
    F64(Vec<f64>),
    U64(Vec<u64>),
}

impl ArrayData {
    fn len(&self) -> usize {
        match self {
            ArrayData::F64(v) => v.len(),
            ArrayData::U64(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: ArrayData,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    arrays: Vec<NamedArray>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn arrays(&self) -> &[NamedArray] {
        &self.arrays
    }

    fn insert(&mut self, array: NamedArray) {
        debug_assert_eq!(array.shape.iter().product::<usize>(), array.data.len());
        match self.arrays.iter_mut().find(|a| a.name == array.name) {
            Some(slot) => *slot = array,
            None => self.arrays.push(array),
        }
    }

    pub fn put_f64(&mut self, name: impl Into<String>, shape: Vec<usize>, values: Vec<f64>) {
        self.insert(NamedArray { name: name.into(), shape, data: ArrayData::F64(values) });
    }

    pub fn put_u64(&mut self, name: impl Into<String>, shape: Vec<usize>, values: Vec<u64>) {
        self.insert(NamedArray { name: name.into(), shape, data: ArrayData::U64(values) });
    }

    pub fn put_scalar_u64(&mut self, name: impl Into<String>, value: u64) {
        self.put_u64(name, vec![1], vec![value]);
    }

    pub fn put_scalar_f64(&mut self, name: impl Into<String>, value: f64) {
        self.put_f64(name, vec![1], vec![value]);
    }

    pub fn get(&self, name: &str) -> Option<&NamedArray> {
        self.arrays.iter().find(|a| a.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn f64s(&self, name: &str) -> Result<&[f64], CheckpointError> {
        match self.get(name).map(|a| &a.data) {
            Some(ArrayData::F64(v)) => Ok(v),
            Some(_) => Err(CheckpointError::Malformed(format!("array `{name}` is not f64"))),
            None => Err(CheckpointError::MissingArray(name.into())),
        }
    }

    pub fn u64s(&self, name: &str) -> Result<&[u64], CheckpointError> {
        match self.get(name).map(|a| &a.data) {
            Some(ArrayData::U64(v)) => Ok(v),
            Some(_) => Err(CheckpointError::Malformed(format!("array `{name}` is not u64"))),
            None => Err(CheckpointError::MissingArray(name.into())),
        }
    }

    pub fn scalar_u64(&self, name: &str) -> Result<u64, CheckpointError> {
        self.u64s(name)?.first().copied().ok_or_else(|| CheckpointError::Malformed(format!("array `{name}` is empty")))
    }

    pub fn scalar_f64(&self, name: &str) -> Result<f64, CheckpointError> {
        self.f64s(name)?.first().copied().ok_or_else(|| CheckpointError::Malformed(format!("array `{name}` is empty")))
    }

    /// f64 array with an expected shape.
    pub fn f64s_shaped(&self, name: &str, expected: &[usize]) -> Result<&[f64], CheckpointError> {
        let values = self.f64s(name)?;
        let shape = &self.get(name).expect("present").shape;
        if shape != expected {
            return Err(CheckpointError::Shape { name: name.into(), found: shape.clone(), expected: expected.to_vec() });
        }
        Ok(values)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        for a in &self.arrays {
            out.extend_from_slice(&(a.name.len() as u16).to_le_bytes());
            out.extend_from_slice(a.name.as_bytes());
            out.push(match a.data {
                ArrayData::F64(_) => 1,
                ArrayData::U64(_) => 2,
            });
            out.push(a.shape.len() as u8);
            for &d in &a.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            match &a.data {
                ArrayData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                ArrayData::U64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let mut r = Reader { bytes, pos: MAGIC.len() };
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(CheckpointError::Version { found: version, supported: FORMAT_VERSION });
        }
        if bytes.len() < MAGIC.len() + 8 + 32 {
            return Err(CheckpointError::Malformed("file too short".into()));
        }
        let body_end = bytes.len() - 32;
        if Sha256::digest(&bytes[..body_end]).as_slice() != &bytes[body_end..] {
            return Err(CheckpointError::Checksum);
        }
        let r = &mut Reader { bytes: &bytes[..body_end], pos: r.pos };
        let count = r.u32()? as usize;
        let mut ck = Checkpoint::new();
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec()).map_err(|_| CheckpointError::Malformed("array name is not UTF-8".into()))?;
            let dtype = r.u8()?;
            let rank = r.u8()? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u64()? as usize);
            }
            let n = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or_else(|| CheckpointError::Malformed(format!("shape of `{name}` overflows")))?;
            let raw = r.take(n.checked_mul(8).ok_or_else(|| CheckpointError::Malformed("array too large".into()))?)?;
            let words = raw.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")));
            let data = match dtype {
                1 => ArrayData::F64(words.map(f64::from_bits).collect()),
                2 => ArrayData::U64(words.collect()),
                other => return Err(CheckpointError::Malformed(format!("unknown dtype {other}"))),
            };
            ck.insert(NamedArray { name, shape, data });
        }
        if r.pos != body_end {
            return Err(CheckpointError::Malformed("trailing bytes".into()));
        }
        Ok(ck)
    }

    /// Writes atomically through a temporary file in the same directory.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let io = |source| CheckpointError::Io { path: path.to_path_buf(), source };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io)?;
        }
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp).map_err(io)?;
            f.write_all(&self.to_bytes()).map_err(io)?;
            f.sync_all().map_err(io)?;
        }
        fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let bytes = fs::read(path).map_err(|source| CheckpointError::Io { path: path.to_path_buf(), source })?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| CheckpointError::Malformed("unexpected end of data".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
