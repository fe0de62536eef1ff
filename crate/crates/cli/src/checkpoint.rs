//! Binary checkpoint format for parameter groups.
//!
//! Layout: magic `CLCK`, u32 version, u32 parameter count, then one
//! header record per parameter (u16 name length, name bytes, u8
//! trainable, u8 dtype, u8 rank, u64 dims...), followed by raw
//! little-endian f32 payloads in header order. Round-trips bit-exactly.

use std::io::{Read, Write};
use std::path::Path;

use cogload_core::tensor_nn::{ParamEntry, ParamGroup};

use crate::error::{CliError, Result};

const MAGIC: &[u8; 4] = b"CLCK";
const VERSION: u32 = 1;
const DTYPE_F32: u8 = 0;

pub fn save(params: &ParamGroup<f32>, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for e in params.entries() {
        let name = e.name.as_bytes();
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name);
        buf.push(u8::from(e.trainable));
        buf.push(DTYPE_F32);
        buf.push(e.shape.len() as u8);
        for &d in &e.shape {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
    }
    for e in params.entries() {
        for v in &e.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path).map_err(CliError::io(path))?;
    f.write_all(&buf).map_err(CliError::io(path))?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(CliError::Data(format!(
                "checkpoint {} truncated at byte {}",
                self.path.display(),
                self.pos
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
}

pub fn load(path: &Path) -> Result<ParamGroup<f32>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(CliError::io(path))?
        .read_to_end(&mut bytes)
        .map_err(CliError::io(path))?;
    let mut cur = Cursor { bytes: &bytes, pos: 0, path };

    if cur.take(4)? != MAGIC {
        return Err(CliError::Data(format!("{} is not a checkpoint", path.display())));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(CliError::Data(format!(
            "checkpoint version {version} unsupported (expected {VERSION})"
        )));
    }
    let n = cur.u32()? as usize;
    struct Header {
        name: String,
        trainable: bool,
        shape: Vec<usize>,
    }
    let mut headers = Vec::with_capacity(n);
    for _ in 0..n {
        let name_len = cur.u16()? as usize;
        let name = String::from_utf8(cur.take(name_len)?.to_vec())
            .map_err(|_| CliError::Data(format!("{}: invalid name bytes", path.display())))?;
        let trainable = cur.u8()? != 0;
        let dtype = cur.u8()?;
        if dtype != DTYPE_F32 {
            return Err(CliError::Data(format!("{}: unknown dtype {dtype}", path.display())));
        }
        let rank = cur.u8()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(cur.u64()? as usize);
        }
        headers.push(Header { name, trainable, shape });
    }
    let mut group = ParamGroup::new();
    for h in headers {
        let len: usize = h.shape.iter().product();
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f32::from_le_bytes(cur.take(4)?.try_into().unwrap()));
        }
        group.push(ParamEntry { name: h.name, shape: h.shape, data, trainable: h.trainable })?;
    }
    if cur.pos != bytes.len() {
        return Err(CliError::Data(format!(
            "{}: {} trailing bytes",
            path.display(),
            bytes.len() - cur.pos
        )));
    }
    Ok(group)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cogload_core::model::{build_model, EncoderConfig, HeadConfig};
    use cogload_core::seeding::stream_rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let enc = EncoderConfig { n_blocks: 2, d_model: 16, n_heads: 2, ..Default::default() };
        let mut rng = stream_rng(3, 0);
        let mut params = build_model::<f32, _>(&enc, &HeadConfig::downstream(), &mut rng).unwrap();
        params.set_trainable(|n| n.starts_with("enc."), false);
        save(&params, &path).unwrap();
        let loaded = load(&path).unwrap();
        assert_eq!(params, loaded);
        // bytes are stable across rewrites
        let first = std::fs::read(&path).unwrap();
        save(&loaded, &path).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("not.ckpt");
        std::fs::write(&path, b"hello world").unwrap();
        assert!(load(&path).is_err());
    }
}
