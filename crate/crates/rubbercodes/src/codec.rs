//! Constrained skeleton spaces with exact counting and ranking, and the
//! message capacity of every rubber variant.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::channel::{ChannelKind, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(usize),
    #[error("run length must be at least 1")]
    ZeroRunLength,
    #[error("block symbol {b} outside alphabet of size {q}")]
    BlockSymbolOutOfRange { b: Symbol, q: usize },
    #[error("{z} zeros do not fit in length {length}")]
    TooManyZeros { z: usize, length: usize },
    #[error("index {index} out of range for a space of {count} sequences")]
    IndexOutOfRange { index: BigUint, count: BigUint },
    #[error("sequence has length {got}, expected {want}")]
    WrongLength { got: usize, want: usize },
    #[error("sequence violates the {0} constraint")]
    ConstraintViolated(String),
    #[error("effective skeleton length is negative ({0})")]
    NegativeLength(i64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Which sequences a skeleton space admits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// Every symbol in `1..q`.
    NoZero,
    /// No `r` consecutive copies of `b`.
    AvoidBlock { b: Symbol, r: usize },
    /// Exactly `z` zero symbols.
    ExactZeros { z: usize },
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::NoZero => write!(f, "no-zero"),
            Constraint::AvoidBlock { b, r } => write!(f, "avoid-block({b},{r})"),
            Constraint::ExactZeros { z } => write!(f, "exact-zeros({z})"),
        }
    }
}

/// A constrained family of q-ary sequences of fixed length with a
/// bijection to `0..count`.
///
/// Block-avoiding spaces (including [`Constraint::NoZero`], which is
/// avoid-block(0,1)) are ordered lexicographically. Exact-zero spaces use a
/// mixed-radix index: the lexicographic rank of the zero positions is the
/// major digit and the nonzero word, read in base q-1, the minor one.
#[derive(Debug, Clone)]
pub struct SkeletonSpace {
    q: usize,
    constraint: Constraint,
    length: usize,
    // completions[l][k]: number of admissible suffixes of length l when the
    // trailing run of the block symbol has length k
    completions: Vec<Vec<BigUint>>,
}

impl SkeletonSpace {
    pub fn new(q: usize, constraint: Constraint, length: usize) -> Result<Self, CodecError> {
        if q < 2 {
            return Err(CodecError::AlphabetTooSmall(q));
        }
        if q > 256 {
            return Err(CodecError::InvalidParams(format!(
                "alphabet size {q} exceeds 256"
            )));
        }
        let completions = match constraint {
            Constraint::NoZero => block_table(q, 1, length),
            Constraint::AvoidBlock { b, r } => {
                if r == 0 {
                    return Err(CodecError::ZeroRunLength);
                }
                if b as usize >= q {
                    return Err(CodecError::BlockSymbolOutOfRange { b, q });
                }
                block_table(q, r, length)
            }
            Constraint::ExactZeros { z } => {
                if z > length {
                    return Err(CodecError::TooManyZeros { z, length });
                }
                Vec::new()
            }
        };
        Ok(SkeletonSpace {
            q,
            constraint,
            length,
            completions,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn length(&self) -> usize {
        self.length
    }

    fn block(&self) -> Option<(Symbol, usize)> {
        match self.constraint {
            Constraint::NoZero => Some((0, 1)),
            Constraint::AvoidBlock { b, r } => Some((b, r)),
            Constraint::ExactZeros { .. } => None,
        }
    }

    /// Exact number of sequences in the space.
    pub fn count(&self) -> BigUint {
        match self.constraint {
            Constraint::ExactZeros { z } => {
                binomial(self.length, z) * BigUint::from(self.q - 1).pow((self.length - z) as u32)
            }
            _ => self.completions[self.length][0].clone(),
        }
    }

    pub fn contains(&self, seq: &[Symbol]) -> bool {
        self.check(seq).is_ok()
    }

    fn check(&self, seq: &[Symbol]) -> Result<(), CodecError> {
        if seq.len() != self.length {
            return Err(CodecError::WrongLength {
                got: seq.len(),
                want: self.length,
            });
        }
        let violated = || CodecError::ConstraintViolated(self.constraint.to_string());
        if seq.iter().any(|&s| s as usize >= self.q) {
            return Err(violated());
        }
        match self.block() {
            Some((b, r)) => {
                let mut run = 0;
                for &s in seq {
                    run = if s == b { run + 1 } else { 0 };
                    if run >= r {
                        return Err(violated());
                    }
                }
            }
            None => {
                let Constraint::ExactZeros { z } = self.constraint else {
                    unreachable!()
                };
                if seq.iter().filter(|&&s| s == 0).count() != z {
                    return Err(violated());
                }
            }
        }
        Ok(())
    }

    /// The `index`-th sequence of the space.
    pub fn unrank(&self, index: &BigUint) -> Result<Vec<Symbol>, CodecError> {
        let count = self.count();
        if *index >= count {
            return Err(CodecError::IndexOutOfRange {
                index: index.clone(),
                count,
            });
        }
        Ok(match self.block() {
            Some((b, r)) => self.unrank_block(index.clone(), b, r),
            None => self.unrank_zeros(index),
        })
    }

    /// Inverse of [`SkeletonSpace::unrank`].
    pub fn rank(&self, seq: &[Symbol]) -> Result<BigUint, CodecError> {
        self.check(seq)?;
        Ok(match self.block() {
            Some((b, r)) => self.rank_block(seq, b, r),
            None => self.rank_zeros(seq),
        })
    }

    fn unrank_block(&self, mut index: BigUint, b: Symbol, r: usize) -> Vec<Symbol> {
        let mut out = Vec::with_capacity(self.length);
        let mut run = 0;
        for pos in 0..self.length {
            let rest = self.length - pos - 1;
            for s in 0..self.q as Symbol {
                let next = if s == b { run + 1 } else { 0 };
                if next >= r {
                    continue;
                }
                let block = &self.completions[rest][next];
                if index < *block {
                    out.push(s);
                    run = next;
                    break;
                }
                index -= block;
            }
        }
        out
    }

    fn rank_block(&self, seq: &[Symbol], b: Symbol, r: usize) -> BigUint {
        let mut index = BigUint::zero();
        let mut run = 0;
        for (pos, &x) in seq.iter().enumerate() {
            let rest = self.length - pos - 1;
            for s in 0..x {
                let next = if s == b { run + 1 } else { 0 };
                if next < r {
                    index += &self.completions[rest][next];
                }
            }
            run = if x == b { run + 1 } else { 0 };
        }
        index
    }

    fn unrank_zeros(&self, index: &BigUint) -> Vec<Symbol> {
        let Constraint::ExactZeros { z } = self.constraint else {
            unreachable!()
        };
        let radix = BigUint::from(self.q - 1).pow((self.length - z) as u32);
        let positions = unrank_combination(self.length, z, &(index / &radix));
        let mut word = index % &radix;
        let base = BigUint::from(self.q - 1);
        let mut digits = vec![0 as Symbol; self.length - z];
        for d in digits.iter_mut().rev() {
            *d = (&word % &base).to_u8().unwrap_or(0) + 1;
            word /= &base;
        }
        let mut out = Vec::with_capacity(self.length);
        let mut digits = digits.into_iter();
        let mut zeros = positions.iter().peekable();
        for pos in 0..self.length {
            if zeros.peek() == Some(&&pos) {
                zeros.next();
                out.push(0);
            } else {
                out.push(digits.next().unwrap_or(1));
            }
        }
        out
    }

    fn rank_zeros(&self, seq: &[Symbol]) -> BigUint {
        let Constraint::ExactZeros { z } = self.constraint else {
            unreachable!()
        };
        let positions: Vec<usize> = (0..seq.len()).filter(|&i| seq[i] == 0).collect();
        let base = BigUint::from(self.q - 1);
        let mut word = BigUint::zero();
        for &s in seq.iter().filter(|&&s| s != 0) {
            word = word * &base + BigUint::from(s - 1);
        }
        let radix = base.pow((self.length - z) as u32);
        rank_combination(self.length, &positions) * radix + word
    }
}

fn block_table(q: usize, r: usize, length: usize) -> Vec<Vec<BigUint>> {
    let others = BigUint::from(q - 1);
    let mut table = vec![vec![BigUint::one(); r]];
    for l in 1..=length {
        let prev = &table[l - 1];
        let row: Vec<BigUint> = (0..r)
            .map(|k| {
                let mut v = &others * &prev[0];
                if k + 1 < r {
                    v += &prev[k + 1];
                }
                v
            })
            .collect();
        table.push(row);
    }
    table
}

/// Exact binomial coefficient.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Lexicographic rank of a strictly increasing subset of `0..n`.
pub fn rank_combination(n: usize, positions: &[usize]) -> BigUint {
    let k = positions.len();
    let mut rank = BigUint::zero();
    let mut start = 0;
    for (i, &p) in positions.iter().enumerate() {
        for v in start..p {
            rank += binomial(n - 1 - v, k - 1 - i);
        }
        start = p + 1;
    }
    rank
}

/// Inverse of [`rank_combination`]; `rank` must be below `C(n,k)`.
pub fn unrank_combination(n: usize, k: usize, rank: &BigUint) -> Vec<usize> {
    let mut rank = rank.clone();
    let mut out = Vec::with_capacity(k);
    let mut v = 0;
    for i in 0..k {
        loop {
            let block = binomial(n - 1 - v, k - 1 - i);
            if rank < block {
                break;
            }
            rank -= block;
            v += 1;
        }
        out.push(v);
        v += 1;
    }
    out
}

/// Smallest `k` with `base^k >= x`. `None` when no such `k` exists
/// (base 1 and x > 1).
pub fn ceil_log(base: usize, x: &BigUint) -> Option<usize> {
    let mut k = 0;
    let mut p = BigUint::one();
    let base = BigUint::from(base);
    while p < *x {
        if base <= BigUint::one() {
            return None;
        }
        p *= &base;
        k += 1;
    }
    Some(k)
}

/// Coding strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// One-symbol rubber, zero-free skeletons, symmetric channel.
    Rubber1,
    /// Rubber of `r` zeros with delete-previous, symmetric channel.
    RubberR,
    /// Rubber of `r` copies of an extremal symbol with correct-previous,
    /// Z or inverse-Z channel.
    Modified,
    /// One-symbol rubber with information zeros and a check sequence.
    Lebedev,
    /// Direction-adaptive modified rubber for the unidirectional channel.
    Unidirectional,
    /// Modified-rubber sender paired with a delete-previous receiver. Used
    /// to show that the verifier catches a wrong decoder.
    Broken,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Rubber1,
        Method::RubberR,
        Method::Modified,
        Method::Lebedev,
        Method::Unidirectional,
        Method::Broken,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Method::Rubber1 => "rubber1",
            Method::RubberR => "rubberr",
            Method::Modified => "modified",
            Method::Lebedev => "lebedev",
            Method::Unidirectional => "unidir",
            Method::Broken => "broken",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Method {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.token() == s)
            .ok_or_else(|| CodecError::InvalidParams(format!("unknown method `{s}`")))
    }
}

/// Method plus block parameters. `r` is the rubber run length, `z` the
/// number of information zeros (Lebedev only).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeParams {
    pub method: Method,
    pub q: usize,
    pub n: usize,
    pub t: usize,
    pub r: usize,
    pub z: usize,
    pub channel: ChannelKind,
}

impl CodeParams {
    /// Parameters with the method's default channel and `r = 1`
    /// (`r = 2` for modified, broken and unidirectional), `z = 0`.
    pub fn new(method: Method, q: usize, n: usize, t: usize) -> Self {
        let (r, channel) = match method {
            Method::Rubber1 | Method::RubberR | Method::Lebedev => (1, ChannelKind::Symmetric(q)),
            Method::Modified | Method::Broken => (2, ChannelKind::Z(q)),
            Method::Unidirectional => (2, ChannelKind::Unidirectional(q)),
        };
        CodeParams {
            method,
            q,
            n,
            t,
            r,
            z: 0,
            channel,
        }
    }

    pub fn with_r(mut self, r: usize) -> Self {
        self.r = r;
        self
    }

    pub fn with_z(mut self, z: usize) -> Self {
        self.z = z;
        self
    }

    /// Selects the channel; only meaningful for the modified rubber, which
    /// runs on either Z or inverse Z.
    pub fn on(mut self, channel: ChannelKind) -> Self {
        self.channel = channel;
        self
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        let bad = |m: String| Err(CodecError::InvalidParams(m));
        if self.q < 2 {
            return Err(CodecError::AlphabetTooSmall(self.q));
        }
        if self.q > 256 {
            return bad(format!("alphabet size {} exceeds 256", self.q));
        }
        if self.channel.q() != self.q {
            return bad("channel alphabet differs from q".into());
        }
        if self.r == 0 {
            return Err(CodecError::ZeroRunLength);
        }
        if self.z > 0 && self.method != Method::Lebedev {
            return bad("z is only valid with lebedev".into());
        }
        let channel_ok = match self.method {
            Method::Rubber1 | Method::RubberR | Method::Lebedev => {
                matches!(self.channel, ChannelKind::Symmetric(_))
            }
            Method::Modified => {
                matches!(self.channel, ChannelKind::Z(_) | ChannelKind::InverseZ(_))
            }
            Method::Broken => matches!(self.channel, ChannelKind::Z(_)),
            Method::Unidirectional => matches!(self.channel, ChannelKind::Unidirectional(_)),
        };
        if !channel_ok {
            return bad(format!(
                "{} does not run on the {} channel",
                self.method,
                self.channel.token()
            ));
        }
        match self.method {
            Method::Rubber1 | Method::Lebedev if self.r != 1 => {
                bad(format!("{} uses r = 1", self.method))
            }
            Method::Modified | Method::Broken | Method::Unidirectional if self.r < 2 => {
                bad(format!("{} needs r >= 2", self.method))
            }
            Method::Lebedev if self.q == 2 && self.z > 0 => {
                bad("lebedev with information zeros needs q >= 3".into())
            }
            _ => Ok(()),
        }
    }

    /// Rubber symbol of the method on its channel (before any direction
    /// commitment for unidirectional codes).
    pub fn rubber_symbol(&self) -> Symbol {
        match (self.method, &self.channel) {
            (Method::Modified, ChannelKind::InverseZ(_)) => 0,
            (Method::Modified | Method::Broken | Method::Unidirectional, _) => {
                (self.q - 1) as Symbol
            }
            _ => 0,
        }
    }

    /// Length of the Lebedev check sequence.
    pub fn check_len(&self) -> Result<usize, CodecError> {
        let variants = binomial(self.z + self.t, self.z);
        ceil_log(self.q - 1, &variants)
            .ok_or_else(|| CodecError::InvalidParams("check sequence needs q >= 3".into()))
    }

    /// Skeleton length, i.e. the number of protected symbols.
    pub fn skeleton_len(&self) -> Result<usize, CodecError> {
        self.validate()?;
        let (n, t, r) = (self.n as i64, self.t as i64, self.r as i64);
        let len = match self.method {
            Method::Rubber1 => n - 2 * t,
            Method::RubberR => n - (r + 1) * t,
            Method::Modified | Method::Broken => n - r * t,
            Method::Lebedev => {
                let h = self.check_len()? as i64;
                if h > 0 && h >= n - 2 * t {
                    return Err(CodecError::InvalidParams(format!(
                        "check sequence of length {h} leaves no room in n-2t = {}",
                        n - 2 * t
                    )));
                }
                n - 2 * t - h
            }
            Method::Unidirectional if t == 0 => n,
            Method::Unidirectional => n - r * t - 2,
        };
        if len < 0 {
            return Err(CodecError::NegativeLength(len));
        }
        if self.method == Method::Lebedev && (len as usize) < self.z {
            return Err(CodecError::TooManyZeros {
                z: self.z,
                length: len as usize,
            });
        }
        Ok(len as usize)
    }

    /// The skeleton space whose elements are the transmitted messages.
    pub fn skeleton_space(&self) -> Result<SkeletonSpace, CodecError> {
        let len = self.skeleton_len()?;
        let constraint = match self.method {
            Method::Rubber1 => Constraint::NoZero,
            Method::RubberR => Constraint::AvoidBlock { b: 0, r: self.r },
            Method::Modified | Method::Broken | Method::Unidirectional => Constraint::AvoidBlock {
                b: self.rubber_symbol(),
                r: self.r,
            },
            Method::Lebedev => Constraint::ExactZeros { z: self.z },
        };
        SkeletonSpace::new(self.q, constraint, len)
    }
}

/// Number of messages the method transmits in a block.
pub fn message_capacity(params: &CodeParams) -> Result<BigUint, CodecError> {
    Ok(params.skeleton_space()?.count())
}

/// Capacity when the unidirectional code is judged against the
/// modified-rubber target length `n - r t`.
pub fn unidirectional_target_capacity(params: &CodeParams) -> Result<BigUint, CodecError> {
    let len = params.n as i64 - (params.r * params.t) as i64;
    if len < 0 {
        return Err(CodecError::NegativeLength(len));
    }
    let b = (params.q - 1) as Symbol;
    Ok(SkeletonSpace::new(
        params.q,
        Constraint::AvoidBlock { b, r: params.r },
        len as usize,
    )?
    .count())
}
