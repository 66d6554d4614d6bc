//! On-disk formats for processed datasets and evaluation users.
//!
//! Dataset layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes  "SAECF-DS"
//! version      u32
//! num_users    u64
//! num_items    u64
//! nnz          u64
//! row_offsets  (num_users + 1) x u32
//! col_indices  nnz x u32
//! user ids     num_users x (u32 byte length, UTF-8 bytes)
//! item ids     num_items x (u32 byte length, UTF-8 bytes)
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvalUser, InteractionDataset};
use crate::error::{Error, Result};

pub const DATASET_MAGIC: &[u8; 8] = b"SAECF-DS";
pub const DATASET_VERSION: u32 = 1;

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let out = &self.buf[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::Format(format!(
                "truncated while reading {what} at byte {} ({} bytes available)",
                self.pos,
                self.buf.len()
            ))),
        }
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    pub(crate) fn len(&mut self, what: &str) -> Result<usize> {
        let v = self.u64(what)?;
        usize::try_from(v).map_err(|_| Error::Format(format!("{what} {v} too large")))
    }

    pub(crate) fn u32_array(&mut self, n: usize, what: &str) -> Result<Vec<u32>> {
        let bytes = n
            .checked_mul(4)
            .ok_or_else(|| Error::Format(format!("{what} length overflows")))?;
        let raw = self.take(bytes, what)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub(crate) fn f32_array(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        Ok(self
            .u32_array(n, what)?
            .into_iter()
            .map(f32::from_bits)
            .collect())
    }

    pub(crate) fn string(&mut self, what: &str) -> Result<String> {
        let n = self.u32(what)? as usize;
        let bytes = self.take(n, what)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Format(format!("{what} is not UTF-8")))
    }

    pub(crate) fn magic(&mut self, magic: &[u8; 8]) -> Result<()> {
        let got = self.take(8, "magic")?;
        if got != magic {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(magic)
            )));
        }
        Ok(())
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub(crate) fn write_string(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v)
        .map_err(|_| Error::invalid(format!("{what} {v} exceeds the 32-bit format limit")))
}

pub fn save_dataset(ds: &InteractionDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let write = || -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        w.write_all(DATASET_MAGIC).map_err(io)?;
        w.write_all(&DATASET_VERSION.to_le_bytes()).map_err(io)?;
        for n in [ds.num_users(), ds.num_items(), ds.nnz()] {
            w.write_all(&(n as u64).to_le_bytes()).map_err(io)?;
        }
        for &off in ds.row_offsets() {
            w.write_all(&to_u32(off, "row offset")?.to_le_bytes())
                .map_err(io)?;
        }
        for &c in ds.col_indices() {
            w.write_all(&c.to_le_bytes()).map_err(io)?;
        }
        for id in ds.user_ids().iter().chain(ds.item_ids()) {
            write_string(&mut w, id).map_err(io)?;
        }
        w.flush().map_err(io)
    };
    write()
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<InteractionDataset> {
    let path = path.as_ref();
    let buf = read_file(path)?;
    let mut r = Reader::new(&buf);
    r.magic(DATASET_MAGIC)?;
    let version = r.u32("version")?;
    if version != DATASET_VERSION {
        return Err(Error::VersionMismatch {
            expected: DATASET_VERSION,
            found: version,
        });
    }
    let num_users = r.len("num_users")?;
    let num_items = r.len("num_items")?;
    let nnz = r.len("nnz")?;
    let row_offsets = r
        .u32_array(num_users.saturating_add(1), "row_offsets")?
        .into_iter()
        .map(|o| o as usize)
        .collect();
    let col_indices = r.u32_array(nnz, "col_indices")?;
    let user_ids = (0..num_users)
        .map(|_| r.string("user id"))
        .collect::<Result<Vec<_>>>()?;
    let item_ids = (0..num_items)
        .map(|_| r.string("item id"))
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    InteractionDataset::from_csr(row_offsets, col_indices, user_ids, item_ids)
}

#[derive(Serialize, Deserialize)]
struct EvalUsersFile {
    num_items: usize,
    users: Vec<EvalUser>,
}

/// Writes evaluation users as JSON; item indices refer to the train vocabulary.
pub fn save_eval_users(users: &[EvalUser], num_items: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(
        &mut w,
        &EvalUsersFile {
            num_items,
            users: users.to_vec(),
        },
    )?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads evaluation users and checks them against the expected vocabulary size.
pub fn load_eval_users(path: impl AsRef<Path>, num_items: usize) -> Result<Vec<EvalUser>> {
    let path = path.as_ref();
    let parsed: EvalUsersFile = serde_json::from_slice(&read_file(path)?)?;
    if parsed.num_items != num_items {
        return Err(Error::Format(format!(
            "{} was written for {} items, dataset has {num_items}",
            path.display(),
            parsed.num_items
        )));
    }
    for user in &parsed.users {
        user.validate(num_items)?;
    }
    Ok(parsed.users)
}
