//! Permutation pairs `(pi0, pi1)` over an alphabet of `d` symbols.
//!
//! Symbols are `0..d`. Positions are 0-based in the API (`pi0(a) == 0` means
//! `a` is the leftmost interval) and 1-based in every serialized form.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    /// `top[j]` is the symbol at position `j` of the domain.
    top: Vec<usize>,
    /// `bot[j]` is the symbol at position `j` of the image.
    bot: Vec<usize>,
}

/// Serialized form, positions 1-based.
#[derive(Serialize, Deserialize)]
struct PermRepr {
    d: usize,
    pi0: Vec<usize>,
    pi1: Vec<usize>,
}

fn invert(pos: &[usize]) -> Result<Vec<usize>> {
    let d = pos.len();
    let mut out = vec![usize::MAX; d];
    for (sym, &p) in pos.iter().enumerate() {
        if p >= d || out[p] != usize::MAX {
            return Err(Error::InvalidPermutation(format!("{pos:?} is not a bijection onto 0..{d}")));
        }
        out[p] = sym;
    }
    Ok(out)
}

impl Permutation {
    /// Build from the two rows, each listing symbols left to right.
    pub fn from_rows(top: Vec<usize>, bot: Vec<usize>) -> Result<Self> {
        let d = top.len();
        if d < 2 || bot.len() != d {
            return Err(Error::InvalidPermutation(format!("rows of length {} and {}", d, bot.len())));
        }
        // Validates that both rows are bijections.
        invert(&top)?;
        invert(&bot)?;
        Ok(Permutation { top, bot })
    }

    /// Build from `pi0`, `pi1` given as symbol -> 0-based position.
    pub fn from_positions(pi0: &[usize], pi1: &[usize]) -> Result<Self> {
        Self::from_rows(invert(pi0)?, invert(pi1)?)
    }

    /// `pi0` is the identity and `pi1(a) = mono[a]` (1-based positions).
    pub fn from_monodromy(mono: &[usize]) -> Result<Self> {
        let d = mono.len();
        let top: Vec<usize> = (0..d).collect();
        let pos: Vec<usize> = mono
            .iter()
            .map(|&m| m.checked_sub(1).ok_or_else(|| Error::InvalidPermutation("positions are 1-based".into())))
            .collect::<Result<_>>()?;
        Self::from_rows(top, invert(&pos)?)
    }

    /// The permutation `(d d-1 ... 1)`.
    pub fn symmetric(d: usize) -> Self {
        Self::from_monodromy(&(1..=d).rev().collect::<Vec<_>>()).expect("valid for d >= 2")
    }

    pub fn identity(d: usize) -> Self {
        Self::from_monodromy(&(1..=d).collect::<Vec<_>>()).expect("valid for d >= 2")
    }

    pub fn d(&self) -> usize {
        self.top.len()
    }

    pub fn top(&self) -> &[usize] {
        &self.top
    }

    pub fn bot(&self) -> &[usize] {
        &self.bot
    }

    /// Row `eps` (0 = domain order, 1 = image order).
    pub fn row(&self, eps: u8) -> &[usize] {
        if eps == 0 {
            &self.top
        } else {
            &self.bot
        }
    }

    /// 0-based position of `sym` in row `eps`.
    pub fn pos(&self, eps: u8, sym: usize) -> usize {
        self.row(eps).iter().position(|&s| s == sym).expect("symbol in range")
    }

    pub fn pi0(&self, sym: usize) -> usize {
        self.pos(0, sym)
    }

    pub fn pi1(&self, sym: usize) -> usize {
        self.pos(1, sym)
    }

    /// `pi~ = pi1 o pi0^-1` as a map on 0-based positions.
    pub fn monodromy(&self) -> Vec<usize> {
        let p1 = invert(&self.bot).expect("valid");
        self.top.iter().map(|&s| p1[s]).collect()
    }

    /// `pi^ = pi0 o pi1^-1`, the inverse of [`Self::monodromy`].
    pub fn inverse_monodromy(&self) -> Vec<usize> {
        let p0 = invert(&self.top).expect("valid");
        self.bot.iter().map(|&s| p0[s]).collect()
    }

    /// No proper prefix `{0..k}` of positions is invariant under the monodromy.
    pub fn is_irreducible(&self) -> bool {
        let m = self.monodromy();
        let mut hi = 0;
        for (k, &v) in m.iter().enumerate().take(self.d() - 1) {
            hi = hi.max(v);
            if hi == k {
                return false;
            }
        }
        true
    }

    /// Last symbol of row `eps`.
    pub fn last(&self, eps: u8) -> usize {
        *self.row(eps).last().expect("non-empty")
    }

    /// The permutation after one induction step of type `eps`.
    ///
    /// Type 0: the last symbol of the bottom row moves to just after the
    /// last top symbol in the bottom row. Type 1: the last top symbol moves
    /// to just after the last bottom symbol in the top row.
    pub fn induced(&self, eps: u8) -> Permutation {
        let (winner, moved_row) = if eps == 0 { (self.last(0), &self.bot) } else { (self.last(1), &self.top) };
        let mut row = moved_row.clone();
        let loser = row.pop().expect("non-empty");
        let at = row.iter().position(|&s| s == winner).expect("winner in row") + 1;
        row.insert(at, loser);
        if eps == 0 {
            Permutation { top: self.top.clone(), bot: row }
        } else {
            Permutation { top: row, bot: self.bot.clone() }
        }
    }

    /// Monodromy as a 1-based string, e.g. `"4 3 2 1"`.
    pub fn monodromy_string(&self) -> String {
        self.monodromy().iter().map(|v| (v + 1).to_string()).collect::<Vec<_>>().join(" ")
    }

    /// Two-row display with letters, e.g. `"A B C D / D C B A"`.
    pub fn rows_string(&self) -> String {
        let f = |r: &[usize]| r.iter().map(|&s| symbol_name(s)).collect::<Vec<_>>().join(" ");
        format!("{} / {}", f(&self.top), f(&self.bot))
    }
}

/// Letter name of a symbol: `A`, `B`, ..., `Z`, then `S26`, `S27`, ...
pub fn symbol_name(s: usize) -> String {
    if s < 26 {
        ((b'A' + s as u8) as char).to_string()
    } else {
        format!("S{s}")
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({})", self.rows_string())
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rows_string())
    }
}

impl std::str::FromStr for Permutation {
    type Err = Error;

    /// Parses a monodromy one-liner such as `"4 3 2 1"` or `"4,3,2,1"`.
    fn from_str(s: &str) -> Result<Self> {
        let mono: Vec<usize> = s
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
            .collect::<Result<_>>()?;
        Self::from_monodromy(&mono)
    }
}

impl Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.d();
        PermRepr { d, pi0: (0..d).map(|a| self.pi0(a) + 1).collect(), pi1: (0..d).map(|a| self.pi1(a) + 1).collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let r = PermRepr::deserialize(de)?;
        let zero = |v: &[usize]| v.iter().map(|&p| p.wrapping_sub(1)).collect::<Vec<_>>();
        if r.pi0.len() != r.d {
            return Err(serde::de::Error::custom("pi0 length differs from d"));
        }
        Permutation::from_positions(&zero(&r.pi0), &zero(&r.pi1)).map_err(serde::de::Error::custom)
    }
}
