use crate::{CoreError, Result};
use serde::{Deserialize, Serialize};

pub type TokenId = u32;

/// Token inventory: content tokens plus the CTC blank and the end-of-sequence
/// marker. Content tokens are every id that is neither blank nor eos.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    tokens: Vec<String>,
    blank_id: TokenId,
    eos_id: TokenId,
}

impl Vocab {
    pub fn new(tokens: Vec<String>, blank_id: TokenId, eos_id: TokenId) -> Result<Self> {
        if tokens.len() < 3 {
            return Err(CoreError::InvalidInput(format!(
                "vocab needs at least 3 symbols, got {}",
                tokens.len()
            )));
        }
        if blank_id == eos_id {
            return Err(CoreError::InvalidInput(
                "blank and eos must be distinct".into(),
            ));
        }
        let n = tokens.len() as TokenId;
        if blank_id >= n || eos_id >= n {
            return Err(CoreError::InvalidInput(format!(
                "blank_id {blank_id} / eos_id {eos_id} out of range for vocab of {n}"
            )));
        }
        for (i, a) in tokens.iter().enumerate() {
            if tokens[i + 1..].contains(a) {
                return Err(CoreError::InvalidInput(format!(
                    "duplicate token symbol {a:?}"
                )));
            }
        }
        Ok(Self {
            tokens,
            blank_id,
            eos_id,
        })
    }

    /// Standard synthetic layout: `n_content` content tokens `t0..`, then
    /// blank, then eos.
    pub fn synthetic(n_content: usize) -> Result<Self> {
        if n_content == 0 {
            return Err(CoreError::InvalidInput(
                "need at least one content token".into(),
            ));
        }
        let mut tokens: Vec<String> = (0..n_content).map(|i| format!("t{i}")).collect();
        tokens.push("<b>".into());
        tokens.push("<eos>".into());
        let blank = n_content as TokenId;
        let eos = n_content as TokenId + 1;
        Self::new(tokens, blank, eos)
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn blank(&self) -> TokenId {
        self.blank_id
    }

    pub fn eos(&self) -> TokenId {
        self.eos_id
    }

    pub fn symbol(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, id: TokenId) -> bool {
        (id as usize) < self.tokens.len()
    }

    pub fn is_content(&self, id: TokenId) -> bool {
        self.contains(id) && id != self.blank_id && id != self.eos_id
    }

    /// Content token ids in ascending order.
    pub fn content_ids(&self) -> Vec<TokenId> {
        (0..self.tokens.len() as TokenId)
            .filter(|&id| id != self.blank_id && id != self.eos_id)
            .collect()
    }

    /// Beam-expansion candidates: every non-blank id (content plus eos),
    /// ascending.
    pub fn candidate_ids(&self) -> Vec<TokenId> {
        (0..self.tokens.len() as TokenId)
            .filter(|&id| id != self.blank_id)
            .collect()
    }
}
