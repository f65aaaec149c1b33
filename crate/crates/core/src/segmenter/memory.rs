//! Object-token memory and its `L2GT` file: magic, version, count, then per
//! token `id_len u32, id bytes, dim u32, dim f32, trained_epochs u32`, all
//! little-endian.

use std::collections::BTreeMap;
use std::path::Path;

use super::augmented::ObjectToken;
use crate::error::{L2gError, Result};

pub const TOKEN_MAGIC: &[u8; 4] = b"L2GT";
pub const TOKEN_VERSION: u32 = 1;

/// One token per instance id. Writing one entry never touches another.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TokenMemory {
    tokens: BTreeMap<String, ObjectToken>,
}

impl TokenMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ObjectToken> {
        self.tokens.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.tokens.keys().map(String::as_str)
    }

    /// Stores `token` under its id, replacing any previous entry.
    pub fn add(&mut self, token: ObjectToken) {
        self.tokens.insert(token.instance_id.clone(), token);
    }

    /// Serialised bytes of one entry.
    pub fn entry_bytes(&self, id: &str) -> Option<Vec<u8>> {
        self.tokens.get(id).map(encode_token)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(TOKEN_MAGIC);
        out.extend_from_slice(&TOKEN_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.tokens.len() as u32).to_le_bytes());
        for t in self.tokens.values() {
            out.extend(encode_token(t));
        }
        out
    }

    pub fn decode(buf: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let mut take = |n: usize, field: &str| -> Result<&[u8]> {
            if pos + n > buf.len() {
                return Err(L2gError::format(field, format!("truncated at byte {pos}")));
            }
            let s = &buf[pos..pos + n];
            pos += n;
            Ok(s)
        };
        let u32_of = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
        if take(4, "magic")? != TOKEN_MAGIC {
            return Err(L2gError::format("magic", "expected \"L2GT\""));
        }
        let version = u32_of(take(4, "version")?);
        if version != TOKEN_VERSION {
            return Err(L2gError::format("version", format!("unsupported version {version}")));
        }
        let count = u32_of(take(4, "count")?);
        let mut memory = TokenMemory::new();
        for i in 0..count {
            let id_len = u32_of(take(4, &format!("token[{i}].id_len"))?) as usize;
            let id_bytes = take(id_len, &format!("token[{i}].id"))?;
            let id = String::from_utf8(id_bytes.to_vec())
                .map_err(|_| L2gError::format(format!("token[{i}].id"), "not valid UTF-8"))?;
            let field = format!("token `{id}`");
            let dim = u32_of(take(4, &field)?) as usize;
            let vector = take(dim * 4, &field)?
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect();
            let trained_epochs = u32_of(take(4, &field)?);
            memory.add(ObjectToken { instance_id: id, vector, trained_epochs, loss_history: Vec::new() });
        }
        if pos != buf.len() {
            return Err(L2gError::format("trailer", format!("{} unexpected trailing bytes", buf.len() - pos)));
        }
        Ok(memory)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }
}

fn encode_token(t: &ObjectToken) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(t.instance_id.len() as u32).to_le_bytes());
    out.extend_from_slice(t.instance_id.as_bytes());
    out.extend_from_slice(&(t.vector.len() as u32).to_le_bytes());
    for v in &t.vector {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&t.trained_epochs.to_le_bytes());
    out
}
