//! 1-rubber with information zeros.
//!
//! The skeleton carries exactly `z` zeros. A transmitted information zero
//! is pushed rather than treated as a rubber, so the receiver cannot tell
//! the two apart on its own. Once the sender sees the skeleton in place it
//! appends a short check word naming which received zeros were
//! information zeros, and the decoder keeps the unique skeleton whose
//! replay explains the whole received word.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use super::{first_entries, Emission, RubberError, Session};
use crate::channel::Symbol;
use crate::codec::{binomial, rank_combination, CodeParams, CodecError, Method};

/// Sizes of the skeleton and check word inside a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LebedevLayout {
    pub q: usize,
    pub n: usize,
    pub t: usize,
    pub z: usize,
    /// Check word length.
    pub check_len: usize,
    /// Skeleton length `n - 2t - check_len`.
    pub skeleton_len: usize,
}

impl LebedevLayout {
    pub fn new(params: &CodeParams) -> Result<Self, CodecError> {
        if params.method != Method::Lebedev {
            return Err(CodecError::InvalidParams(
                "layout needs the lebedev method".into(),
            ));
        }
        Ok(LebedevLayout {
            q: params.q,
            n: params.n,
            t: params.t,
            z: params.z,
            check_len: params.check_len()?,
            skeleton_len: params.skeleton_len()?,
        })
    }

    /// Check word for the surviving zeros, given as indices into the list
    /// of live received zeros. Indices that do not form a `z`-subset of
    /// `0..z+t` fall back to subset rank 0.
    pub fn check_word(&self, survivors: &[usize]) -> Vec<Symbol> {
        let universe = self.z + self.t;
        let representable = survivors.len() == self.z
            && survivors.windows(2).all(|w| w[0] < w[1])
            && survivors.last().is_none_or(|&s| s < universe);
        let g = if representable {
            rank_combination(universe, survivors)
        } else {
            BigUint::zero()
        };
        let mut index = binomial(universe, self.z) - 1u32 - g;
        let base = BigUint::from(self.q - 1);
        let mut digits = vec![0; self.check_len];
        for d in digits.iter_mut().rev() {
            let digit = (&index % &base).to_u8().unwrap_or(0);
            *d = digit + 1;
            index /= &base;
        }
        digits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Info,
    Data,
    Rubber,
}

/// Stack entry: value plus, for information zeros, the ordinal of the
/// received zero that placed it.
type Entry = (Symbol, Option<usize>);

#[derive(Debug, Clone)]
pub struct LebedevSession {
    layout: LebedevLayout,
    target: Vec<Symbol>,
    stack: Vec<Entry>,
    /// Liveness of each received zero so far.
    zeros: Vec<bool>,
    latched: bool,
    received: Vec<Symbol>,
    /// Channel zeros that hit data symbols before the check word was fixed.
    spurious: usize,
}

impl LebedevSession {
    pub fn new(params: &CodeParams, skeleton: &[Symbol]) -> Result<Self, RubberError> {
        let layout = LebedevLayout::new(params)?;
        let space = params.skeleton_space()?;
        if !space.contains(skeleton) {
            return Err(CodecError::ConstraintViolated(format!("{skeleton:?}")).into());
        }
        Ok(Self::from_layout(layout, skeleton))
    }

    fn from_layout(layout: LebedevLayout, skeleton: &[Symbol]) -> Self {
        LebedevSession {
            layout,
            target: skeleton.to_vec(),
            stack: Vec::new(),
            zeros: Vec::new(),
            latched: false,
            received: Vec::new(),
            spurious: 0,
        }
    }

    pub fn layout(&self) -> &LebedevLayout {
        &self.layout
    }

    /// Skeleton followed by the check word once it is fixed.
    pub fn target(&self) -> &[Symbol] {
        &self.target
    }

    pub fn latched(&self) -> bool {
        self.latched
    }

    pub fn spurious_zeros(&self) -> usize {
        self.spurious
    }

    fn on_prefix(&self, len: usize) -> bool {
        self.stack
            .iter()
            .take(len)
            .zip(&self.target)
            .all(|(e, &s)| e.0 == s)
    }

    fn target_at(&self, i: usize) -> Symbol {
        self.target.get(i).copied().unwrap_or(1)
    }

    fn choose(&self) -> (Symbol, Kind) {
        let on_track = self
            .stack
            .iter()
            .enumerate()
            .all(|(i, e)| e.0 == self.target_at(i));
        if !on_track {
            return (0, Kind::Rubber);
        }
        match self.target_at(self.stack.len()) {
            0 => (0, Kind::Info),
            x => (x, Kind::Data),
        }
    }

    fn latch(&mut self) {
        let n0 = self.layout.skeleton_len;
        let live: Vec<usize> = self
            .zeros
            .iter()
            .enumerate()
            .filter(|(_, &alive)| alive)
            .map(|(i, _)| i)
            .collect();
        let survivors: Vec<usize> = self.stack[..n0]
            .iter()
            .filter(|e| e.0 == 0)
            .map(|e| {
                e.1.and_then(|tag| live.iter().position(|&o| o == tag))
                    .unwrap_or(usize::MAX)
            })
            .collect();
        let word = self.layout.check_word(&survivors);
        self.target.extend(word);
        self.latched = true;
    }
}

impl Session for LebedevSession {
    fn next_symbol(&self) -> Emission {
        let (symbol, kind) = self.choose();
        Emission {
            symbol,
            rubber: kind == Kind::Rubber,
        }
    }

    fn rubber_symbol(&self) -> Symbol {
        0
    }

    fn feed(&mut self, sent: Symbol, received: Symbol) -> Result<(), RubberError> {
        if received as usize >= self.layout.q {
            return Err(RubberError::SymbolOutOfRange {
                symbol: received,
                q: self.layout.q,
            });
        }
        let (_, kind) = self.choose();
        self.received.push(received);
        if received == 0 {
            let ordinal = self.zeros.len();
            self.zeros.push(true);
            if kind == Kind::Info {
                self.stack.push((0, Some(ordinal)));
            } else {
                if kind == Kind::Data && sent != 0 && !self.latched {
                    self.spurious += 1;
                }
                if let Some((_, Some(tag))) = self.stack.pop() {
                    self.zeros[tag] = false;
                    self.zeros[ordinal] = false;
                }
            }
        } else {
            self.stack.push((received, None));
        }
        let n0 = self.layout.skeleton_len;
        if !self.latched && self.stack.len() >= n0 && self.on_prefix(n0) {
            self.latch();
        }
        Ok(())
    }

    fn stack(&self) -> Vec<Symbol> {
        self.stack.iter().map(|e| e.0).collect()
    }

    fn decode(&self) -> Result<Vec<Symbol>, RubberError> {
        decode_received(&self.layout, &self.received)
    }

    fn progress(&self) -> usize {
        self.stack
            .iter()
            .enumerate()
            .take_while(|&(i, e)| e.0 == self.target_at(i))
            .count()
    }
}

/// Skeletons that some push/pop reading of the received zeros leaves at
/// the bottom of the stack. Information zeros can only sit inside the
/// skeleton, and at most `z + t` of them are ever placed.
fn candidates(layout: &LebedevLayout, y: &[Symbol]) -> BTreeSet<Vec<Symbol>> {
    fn walk(
        layout: &LebedevLayout,
        y: &[Symbol],
        stack: &mut Vec<Symbol>,
        pushes: usize,
        out: &mut BTreeSet<Vec<Symbol>>,
    ) {
        let n0 = layout.skeleton_len;
        let Some((&v, rest)) = y.split_first() else {
            if stack.len() >= n0 && stack[..n0].iter().filter(|&&s| s == 0).count() == layout.z {
                out.insert(stack[..n0].to_vec());
            }
            return;
        };
        if v != 0 {
            stack.push(v);
            walk(layout, rest, stack, pushes, out);
            stack.pop();
            return;
        }
        if stack.len() < n0 && pushes < layout.z + layout.t {
            stack.push(0);
            walk(layout, rest, stack, pushes + 1, out);
            stack.pop();
        }
        let popped = stack.pop();
        walk(layout, rest, stack, pushes, out);
        if let Some(s) = popped {
            stack.push(s);
        }
    }
    let mut out = BTreeSet::new();
    walk(layout, y, &mut Vec::new(), 0, &mut out);
    out
}

/// Number of positions where the sender for `skeleton`, fed `y` as
/// feedback, would have sent something other than `y`.
fn replay_errors(layout: &LebedevLayout, skeleton: &[Symbol], y: &[Symbol]) -> usize {
    let mut session = LebedevSession::from_layout(*layout, skeleton);
    let mut errors = 0;
    for &v in y {
        let sent = session.next_symbol().symbol;
        if sent != v {
            errors += 1;
        }
        // received symbols are range checked by the caller
        let _ = session.feed(sent, v);
    }
    errors
}

/// Decodes a full received block: the unique skeleton whose replay needs
/// at most `t` errors.
pub fn decode_received(layout: &LebedevLayout, y: &[Symbol]) -> Result<Vec<Symbol>, RubberError> {
    if y.len() < layout.n {
        return first_entries(&[], layout.skeleton_len);
    }
    if let Some(&s) = y.iter().find(|&&s| s as usize >= layout.q) {
        return Err(RubberError::SymbolOutOfRange {
            symbol: s,
            q: layout.q,
        });
    }
    let found: Vec<Vec<Symbol>> = candidates(layout, y)
        .into_iter()
        .filter(|m| replay_errors(layout, m, y) <= layout.t)
        .collect();
    match found.len() {
        0 => Err(RubberError::NoCandidate),
        1 => Ok(found.into_iter().next().unwrap_or_default()),
        k => Err(RubberError::Ambiguous(k)),
    }
}

/// One Lebedev block under an explicit pattern.
pub fn lebedev_encode_round_trip(
    params: &CodeParams,
    message: &BigUint,
    pattern: &crate::channel::ErrorPattern,
) -> Result<super::RoundTrip, RubberError> {
    if params.method != Method::Lebedev {
        return Err(CodecError::InvalidParams("expected the lebedev method".into()).into());
    }
    super::round_trip(params, message, pattern)
}
