//! Residue sequences fed to the statistics modules.

use crate::certified_eval::{residue_window, ExponentSpec, PrecisionPolicy, Residue};
use crate::error::{Error, Result};

/// A deterministic sequence `u_n ∈ {0, …, m-1}` indexed by `n ≥ 0`.
pub trait ResidueSource: Sync {
    fn modulus(&self) -> u64;

    /// `u_start, …, u_{start+count-1}`.
    fn residues(&self, start: u64, count: usize) -> Result<Vec<Residue>>;

    /// The exponent, for sources that are Piatetski-Shapiro sequences.
    fn exponent(&self) -> Option<&ExponentSpec> {
        None
    }

    fn describe(&self) -> String;
}

pub(crate) fn check_modulus(m: u64) -> Result<()> {
    if m < 2 {
        return Err(Error::ModulusTooSmall { m, min: 2 });
    }
    if m > u64::from(Residue::MAX) {
        return Err(Error::ModulusTooLarge {
            m,
            max: u64::from(Residue::MAX),
        });
    }
    Ok(())
}

/// `⌊n^c⌋ mod m`.
#[derive(Clone, Debug)]
pub struct PsSequence {
    pub c: ExponentSpec,
    pub m: u64,
    pub policy: PrecisionPolicy,
}

impl PsSequence {
    pub fn new(c: ExponentSpec, m: u64, policy: PrecisionPolicy) -> Result<Self> {
        check_modulus(m)?;
        policy.validate()?;
        Ok(PsSequence { c, m, policy })
    }
}

impl ResidueSource for PsSequence {
    fn modulus(&self) -> u64 {
        self.m
    }

    fn residues(&self, start: u64, count: usize) -> Result<Vec<Residue>> {
        Ok(residue_window(start, count, &self.c, self.m, &self.policy)?)
    }

    fn exponent(&self) -> Option<&ExponentSpec> {
        Some(&self.c)
    }

    fn describe(&self) -> String {
        format!("floor(n^{}) mod {}", self.c, self.m)
    }
}

/// The constant sequence `u_n = symbol`.
#[derive(Clone, Debug)]
pub struct ConstantSequence {
    pub m: u64,
    pub symbol: Residue,
}

impl ConstantSequence {
    pub fn new(m: u64, symbol: Residue) -> Result<Self> {
        check_modulus(m)?;
        if u64::from(symbol) >= m {
            return Err(Error::SymbolOutOfRange {
                index: 0,
                symbol,
                m,
            });
        }
        Ok(ConstantSequence { m, symbol })
    }
}

impl ResidueSource for ConstantSequence {
    fn modulus(&self) -> u64 {
        self.m
    }

    fn residues(&self, _start: u64, count: usize) -> Result<Vec<Residue>> {
        Ok(vec![self.symbol; count])
    }

    fn describe(&self) -> String {
        format!("constant {} mod {}", self.symbol, self.m)
    }
}

/// A stored sequence with `u_1 = values[0]`.
#[derive(Clone, Debug)]
pub struct StoredSequence {
    pub m: u64,
    pub values: Vec<Residue>,
}

impl StoredSequence {
    pub fn new(m: u64, values: Vec<Residue>) -> Result<Self> {
        check_modulus(m)?;
        if let Some(index) = values.iter().position(|&s| u64::from(s) >= m) {
            return Err(Error::SymbolOutOfRange {
                index,
                symbol: values[index],
                m,
            });
        }
        Ok(StoredSequence { m, values })
    }
}

impl ResidueSource for StoredSequence {
    fn modulus(&self) -> u64 {
        self.m
    }

    fn residues(&self, start: u64, count: usize) -> Result<Vec<Residue>> {
        let end = start.checked_add(count as u64).filter(|&e| start >= 1 && e - 1 <= self.values.len() as u64);
        match end {
            Some(_) => Ok(self.values[start as usize - 1..start as usize - 1 + count].to_vec()),
            None => Err(Error::WindowTooShort {
                len: self.values.len(),
                k: (start.saturating_add(count as u64).saturating_sub(1)) as usize,
            }),
        }
    }

    fn describe(&self) -> String {
        format!("stored sequence of length {} mod {}", self.values.len(), self.m)
    }
}
