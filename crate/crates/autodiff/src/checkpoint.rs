//! Named-parameter archive.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! b"MDFNCKPT"  u32 version
//! u32 len, utf-8 config text (key=value lines)
//! u32 record count
//! per record: u32 name len, name bytes, u32 rank, rank x u32 dims, f32 payload
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use indexmap::IndexMap;

use crate::error::{Result, TensorError};
use crate::tensor::{numel, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"MDFNCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    /// Free-form `key=value` lines echoing the configuration that produced
    /// the tensors.
    pub config: String,
    pub tensors: IndexMap<String, Tensor<f32>>,
}

fn bad(msg: impl Into<String>) -> TensorError {
    TensorError::Checkpoint(msg.into())
}

fn write_len<W: Write>(w: &mut W, n: usize) -> Result<()> {
    let n = u32::try_from(n).map_err(|_| bad("length exceeds u32"))?;
    w.write_u32::<LittleEndian>(n)?;
    Ok(())
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_u32::<LittleEndian>(CHECKPOINT_VERSION)?;
        write_len(&mut w, self.config.len())?;
        w.write_all(self.config.as_bytes())?;
        write_len(&mut w, self.tensors.len())?;
        for (name, t) in &self.tensors {
            write_len(&mut w, name.len())?;
            w.write_all(name.as_bytes())?;
            write_len(&mut w, t.shape().len())?;
            for &d in t.shape() {
                write_len(&mut w, d)?;
            }
            for &v in t.data() {
                w.write_f32::<LittleEndian>(v)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(bad("bad magic"));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let config = read_string(&mut r)?;
        let count = r.read_u32::<LittleEndian>()? as usize;
        let mut tensors = IndexMap::with_capacity(count);
        for _ in 0..count {
            let name = read_string(&mut r)?;
            let rank = r.read_u32::<LittleEndian>()? as usize;
            if rank > 8 {
                return Err(bad(format!("record `{name}` has rank {rank}")));
            }
            let shape = (0..rank)
                .map(|_| r.read_u32::<LittleEndian>().map(|d| d as usize))
                .collect::<std::io::Result<Vec<_>>>()?;
            let mut data = vec![0f32; numel(&shape)];
            r.read_f32_into::<LittleEndian>(&mut data)?;
            if tensors.insert(name.clone(), Tensor::new(shape, data)?).is_some() {
                return Err(bad(format!("duplicate record `{name}`")));
            }
        }
        Ok(Self { config, tensors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_string<R: Read>(r: &mut R) -> Result<String> {
    let len = r.read_u32::<LittleEndian>()? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| bad("string is not utf-8"))
}
