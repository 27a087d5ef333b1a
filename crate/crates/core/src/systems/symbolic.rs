use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite symbol sequence: an itinerary or a cylinder label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolicWord {
    symbols: Vec<u8>,
    alphabet: u16,
}

impl SymbolicWord {
    pub fn new(symbols: Vec<u8>, alphabet: u16) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyWord);
        }
        if alphabet == 0 {
            return Err(Error::Parameter("alphabet must be nonempty".into()));
        }
        if let Some(&s) = symbols.iter().find(|&&s| u16::from(s) >= alphabet) {
            return Err(Error::Parameter(format!(
                "symbol {s} outside alphabet of size {alphabet}"
            )));
        }
        Ok(Self { symbols, alphabet })
    }

    /// Binary word from an ASCII string of '0'/'1', handy in tests.
    pub fn binary(s: &str) -> Result<Self> {
        let symbols = s
            .bytes()
            .map(|b| match b {
                b'0' => Ok(0u8),
                b'1' => Ok(1u8),
                _ => Err(Error::Parameter(format!("not a binary digit: {}", b as char))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(symbols, 2)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn alphabet(&self) -> u16 {
        self.alphabet
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    /// The length-`n` prefix as a fresh word.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::IndexOutOfRange(format!(
                "prefix length {n} of word of length {}",
                self.len()
            )));
        }
        Ok(Self {
            symbols: self.symbols[..n].to_vec(),
            alphabet: self.alphabet,
        })
    }
}
