//! Modified rubber for a channel whose errors all go one way, with the
//! way unknown to the receiver in advance.
//!
//! The sender behaves like the Z-channel modified rubber until the first
//! completed run of `q-1`. Right after a run the sender spends one symbol
//! on the direction: `0` confirms downward errors (the run corrects the
//! symbol below it, as usual), `q-1` announces upward errors. In the
//! upward case the receiver discards the run and the symbol below it and
//! from then on reads every symbol complemented, which turns upward
//! errors into downward ones.

use std::sync::Arc;

use num_bigint::BigUint;

use super::{first_entries, Emission, RoundTrip, RubberError, Session};
use crate::channel::{Direction, ErrorPattern, Symbol};
use crate::codec::{CodeParams, CodecError, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnidirState {
    /// Direction not yet known.
    Unknown,
    /// A run is on top; the next symbol resolves the direction.
    Awaiting,
    Down,
    Up,
}

#[derive(Debug, Clone)]
pub struct UnidirSession {
    q: usize,
    r: usize,
    target: Arc<[Symbol]>,
    skeleton_len: usize,
    state: UnidirState,
    stack: Vec<Symbol>,
    /// The sender has seen an upward error.
    up_seen: bool,
}

impl UnidirSession {
    pub fn new(params: &CodeParams, skeleton: &[Symbol]) -> Result<Self, RubberError> {
        if params.method != Method::Unidirectional {
            return Err(
                CodecError::InvalidParams("expected the unidirectional method".into()).into(),
            );
        }
        let space = params.skeleton_space()?;
        if !space.contains(skeleton) {
            return Err(CodecError::ConstraintViolated(format!("{skeleton:?}")).into());
        }
        Ok(UnidirSession {
            q: params.q,
            r: params.r,
            target: skeleton.into(),
            skeleton_len: skeleton.len(),
            state: UnidirState::Unknown,
            stack: Vec::new(),
            up_seen: false,
        })
    }

    pub fn state(&self) -> UnidirState {
        self.state
    }

    fn top(&self) -> Symbol {
        (self.q - 1) as Symbol
    }

    fn run_on_top(&self) -> bool {
        let b = self.top();
        self.stack.len() >= self.r
            && self.stack[self.stack.len() - self.r..]
                .iter()
                .all(|&s| s == b)
    }

    fn target_at(&self, i: usize) -> Symbol {
        self.target.get(i).copied().unwrap_or(0)
    }

    fn on_track(&self) -> bool {
        self.stack
            .iter()
            .enumerate()
            .all(|(i, &s)| s == self.target_at(i))
    }

    fn bump_top(&mut self) -> Result<(), RubberError> {
        let top = self
            .stack
            .last_mut()
            .ok_or(RubberError::AutomatonViolation(
                "correction on an empty stack",
            ))?;
        if *top as usize + 1 >= self.q {
            return Err(RubberError::AutomatonViolation(
                "correction leaves the alphabet",
            ));
        }
        *top += 1;
        Ok(())
    }

    fn cascade(&mut self) -> Result<(), RubberError> {
        while self.run_on_top() {
            self.stack.truncate(self.stack.len() - self.r);
            self.bump_top()?;
        }
        Ok(())
    }
}

impl Session for UnidirSession {
    fn next_symbol(&self) -> Emission {
        let b = self.top();
        match self.state {
            UnidirState::Awaiting => Emission {
                symbol: if self.up_seen { b } else { 0 },
                rubber: true,
            },
            UnidirState::Unknown if self.up_seen => Emission {
                symbol: b,
                rubber: true,
            },
            state => {
                let on_track = self.on_track();
                let next = if on_track {
                    self.target_at(self.stack.len())
                } else {
                    b
                };
                let symbol = if state == UnidirState::Up {
                    b - next
                } else {
                    next
                };
                Emission {
                    symbol,
                    rubber: !on_track,
                }
            }
        }
    }

    fn rubber_symbol(&self) -> Symbol {
        match self.state {
            UnidirState::Up => 0,
            _ => self.top(),
        }
    }

    fn feed(&mut self, sent: Symbol, received: Symbol) -> Result<(), RubberError> {
        if received as usize >= self.q {
            return Err(RubberError::SymbolOutOfRange {
                symbol: received,
                q: self.q,
            });
        }
        if received > sent {
            self.up_seen = true;
        }
        let b = self.top();
        match self.state {
            UnidirState::Unknown => {
                self.stack.push(received);
                if self.run_on_top() {
                    self.state = UnidirState::Awaiting;
                }
            }
            UnidirState::Awaiting if received == 0 => {
                self.stack.truncate(self.stack.len() - self.r);
                self.bump_top()?;
                self.cascade()?;
                self.state = UnidirState::Down;
            }
            UnidirState::Awaiting if received == b => {
                self.stack.truncate(self.stack.len() - self.r);
                self.stack.pop();
                self.state = UnidirState::Up;
            }
            UnidirState::Awaiting => {
                return Err(RubberError::AutomatonViolation(
                    "direction symbol is neither 0 nor q-1",
                ));
            }
            UnidirState::Down => {
                self.stack.push(received);
                self.cascade()?;
            }
            UnidirState::Up => {
                self.stack.push(b - received);
                self.cascade()?;
            }
        }
        Ok(())
    }

    fn stack(&self) -> Vec<Symbol> {
        self.stack.clone()
    }

    fn decode(&self) -> Result<Vec<Symbol>, RubberError> {
        first_entries(&self.stack, self.skeleton_len)
    }

    fn progress(&self) -> usize {
        self.stack
            .iter()
            .enumerate()
            .take_while(|&(i, &s)| s == self.target_at(i))
            .count()
    }
}

/// One unidirectional block; the pattern fixes the error direction.
pub fn unidirectional_round_trip(
    params: &CodeParams,
    message: &BigUint,
    pattern: &ErrorPattern,
) -> Result<RoundTrip, RubberError> {
    if params.method != Method::Unidirectional {
        return Err(CodecError::InvalidParams("expected the unidirectional method".into()).into());
    }
    super::round_trip(params, message, pattern)
}

/// Both directions of one message under the same error positions.
pub fn both_directions(
    params: &CodeParams,
    message: &BigUint,
    overrides: &[(usize, Symbol)],
) -> Result<[RoundTrip; 2], RubberError> {
    let run = |d: Direction| {
        let p = ErrorPattern::new(params.n, overrides.to_vec(), params.t)?.with_direction(d);
        unidirectional_round_trip(params, message, &p)
    };
    Ok([run(Direction::Down)?, run(Direction::Up)?])
}
