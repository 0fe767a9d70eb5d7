//! Binary parameter checkpoints.
//!
//! Layout: the 9-byte magic `LESACKPT1`, then per tensor a `u16` name length,
//! the UTF-8 name, a `u8` rank, `rank` little-endian `u32` dims and the `f64`
//! little-endian payload in row-major order. A zero name length ends the tensor
//! list; it is followed by a `u32` byte count and a UTF-8 JSON trailer.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::nn::{ParamStore, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 9] = b"LESACKPT1";

pub fn write_checkpoint<W: Write>(mut w: W, store: &ParamStore, trailer: &str) -> Result<()> {
    let io = |e| Error::io("<checkpoint>", e);
    w.write_all(CHECKPOINT_MAGIC).map_err(io)?;
    for (name, t) in store.named_values() {
        let name_len = u16::try_from(name.len())
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Format(format!("bad tensor name length for {name:?}")))?;
        w.write_all(&name_len.to_le_bytes()).map_err(io)?;
        w.write_all(name.as_bytes()).map_err(io)?;
        let rank = u8::try_from(t.shape().len()).map_err(|_| Error::Format("rank exceeds 255".into()))?;
        w.write_all(&[rank]).map_err(io)?;
        for &d in t.shape() {
            let d = u32::try_from(d).map_err(|_| Error::Format("dimension exceeds u32".into()))?;
            w.write_all(&d.to_le_bytes()).map_err(io)?;
        }
        let mut buf = Vec::with_capacity(t.len() * 8);
        for x in t.data() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf).map_err(io)?;
    }
    w.write_all(&0u16.to_le_bytes()).map_err(io)?;
    let trailer_len = u32::try_from(trailer.len()).map_err(|_| Error::Format("trailer too large".into()))?;
    w.write_all(&trailer_len.to_le_bytes()).map_err(io)?;
    w.write_all(trailer.as_bytes()).map_err(io)?;
    w.flush().map_err(io)
}

pub struct CheckpointContents {
    pub tensors: Vec<(String, Tensor)>,
    pub trailer: String,
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<CheckpointContents> {
    let mut magic = [0u8; 9];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!(
            "bad checkpoint magic {:?}",
            String::from_utf8_lossy(&magic)
        )));
    }
    let mut tensors = Vec::new();
    loop {
        let mut len = [0u8; 2];
        read_exact(&mut r, &mut len, "tensor name length")?;
        let len = u16::from_le_bytes(len) as usize;
        if len == 0 {
            break;
        }
        let mut name = vec![0u8; len];
        read_exact(&mut r, &mut name, "tensor name")?;
        let name = String::from_utf8(name).map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
        let mut rank = [0u8; 1];
        read_exact(&mut r, &mut rank, "rank")?;
        let mut shape = Vec::with_capacity(rank[0] as usize);
        for _ in 0..rank[0] {
            let mut d = [0u8; 4];
            read_exact(&mut r, &mut d, "dimension")?;
            shape.push(u32::from_le_bytes(d) as usize);
        }
        let count: usize = shape.iter().product();
        let mut payload = vec![0u8; count * 8];
        read_exact(&mut r, &mut payload, "tensor payload")?;
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        tensors.push((name, Tensor::from_vec(&shape, data)?));
    }
    let mut tlen = [0u8; 4];
    read_exact(&mut r, &mut tlen, "trailer length")?;
    let mut trailer = vec![0u8; u32::from_le_bytes(tlen) as usize];
    read_exact(&mut r, &mut trailer, "trailer")?;
    let trailer = String::from_utf8(trailer).map_err(|_| Error::Format("trailer is not UTF-8".into()))?;
    Ok(CheckpointContents { tensors, trailer })
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Format(format!("checkpoint truncated while reading {what}")))
}
