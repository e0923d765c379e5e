//! Binary model format, little-endian:
//!
//! ```text
//! "CSEG" | version u32 | vocab_size u32 | hidden u32 | n_outputs u32
//! | class names (u32 byte length + UTF-8), n_outputs - 1 of them
//! | vocabulary hash (u32 byte length + UTF-8, possibly empty)
//! | W1, b1, W2, b2 as f32, row-major
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::model::{Params, ScorerModel};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CSEG";
pub const FORMAT_VERSION: u32 = 1;

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    put_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn write_model<W: Write>(mut w: W, model: &ScorerModel) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(&mut w, FORMAT_VERSION)?;
    put_u32(&mut w, model.vocab_size() as u32)?;
    put_u32(&mut w, model.hidden() as u32)?;
    put_u32(&mut w, model.n_outputs() as u32)?;
    for name in model.classes() {
        put_str(&mut w, name)?;
    }
    put_str(&mut w, model.vocab_hash())?;
    let mut buf = Vec::with_capacity(model.params().len() * 4);
    for block in model.params().blocks() {
        for &x in block {
            buf.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn save_model(path: &Path, model: &ScorerModel) -> Result<()> {
    let mut buf = Vec::new();
    write_model(&mut buf, model)?;
    fs::write(path, buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::BadModelFile(format!(
                "truncated while reading {what} at byte {}",
                self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u32(what)? as usize;
        let b = self.take(len, what)?;
        String::from_utf8(b.to_vec())
            .map_err(|_| Error::BadModelFile(format!("{what} is not UTF-8")))
    }
}

pub fn read_model<R: Read>(mut r: R) -> Result<ScorerModel> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut c = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    if c.take(4, "magic")? != MAGIC {
        return Err(Error::BadModelFile("wrong magic header".into()));
    }
    let version = c.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let vocab_size = c.u32("vocabulary size")? as usize;
    let hidden = c.u32("hidden width")? as usize;
    let n_outputs = c.u32("output count")? as usize;
    if vocab_size == 0 || hidden == 0 || n_outputs < 3 {
        return Err(Error::BadModelFile(format!(
            "invalid dimensions {vocab_size}x{hidden}x{n_outputs}"
        )));
    }
    let classes = (0..n_outputs - 1)
        .map(|_| c.string("class name"))
        .collect::<Result<Vec<_>>>()?;
    let vocab_hash = c.string("vocabulary hash")?;
    let mut params = Params::zeros(vocab_size, hidden, n_outputs);
    for block in params.blocks_mut() {
        let raw = c.take(block.len() * 4, "parameters")?;
        for (x, b) in block.iter_mut().zip(raw.chunks_exact(4)) {
            *x = f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64;
        }
    }
    if c.pos != bytes.len() {
        return Err(Error::BadModelFile(format!(
            "{} trailing bytes",
            bytes.len() - c.pos
        )));
    }
    if !params.is_finite() {
        return Err(Error::BadModelFile("non-finite parameters".into()));
    }
    Ok(ScorerModel::from_parts(
        vocab_size, hidden, classes, vocab_hash, params,
    ))
}

pub fn load_model(path: &Path) -> Result<ScorerModel> {
    read_model(fs::File::open(path)?)
}
