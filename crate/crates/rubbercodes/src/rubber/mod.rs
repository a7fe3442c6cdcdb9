//! Feedback encoders and stack decoders for the rubber variants.
//!
//! Every strategy is a [`Session`]: one value that holds the sender's
//! state and the receiver's state side by side. Noiseless feedback means
//! the sender can keep an exact copy of the receiver, so a single object
//! suffices; the verifier clones sessions at adversary branch points.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use thiserror::Error;

use crate::channel::{build_graph, ChannelError, ChannelGraph, ChannelKind, ErrorPattern, Symbol};
use crate::codec::{CodeParams, CodecError, Method};

mod lebedev;
mod unidir;

pub use lebedev::{lebedev_encode_round_trip, LebedevLayout, LebedevSession};
pub use unidir::{both_directions, unidirectional_round_trip, UnidirSession, UnidirState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RubberError {
    #[error("automaton violation: {0}")]
    AutomatonViolation(&'static str),
    #[error("symbol {symbol} outside alphabet of size {q}")]
    SymbolOutOfRange { symbol: Symbol, q: usize },
    #[error("inadmissible error pattern: {0}")]
    Inadmissible(#[from] ChannelError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("pattern covers {got} positions, block has {want}")]
    PatternLength { got: usize, want: usize },
    #[error("receiver stack holds {got} entries, skeleton needs {need}")]
    ShortStack { got: usize, need: usize },
    #[error("no message explains the received word")]
    NoCandidate,
    #[error("{0} messages explain the received word")]
    Ambiguous(usize),
}

/// What the receiver does once `r` rubber symbols sit on top of its stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunAction {
    DeletePrevious,
    /// Add `delta` (+1 or -1) to the entry below the run.
    CorrectPrevious(i8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RubberRule {
    pub q: usize,
    pub b: Symbol,
    pub r: usize,
    pub action: RunAction,
}

impl RubberRule {
    pub fn delete(q: usize, b: Symbol, r: usize) -> Self {
        RubberRule {
            q,
            b,
            r,
            action: RunAction::DeletePrevious,
        }
    }

    pub fn correct(q: usize, b: Symbol, r: usize, delta: i8) -> Self {
        RubberRule {
            q,
            b,
            r,
            action: RunAction::CorrectPrevious(delta),
        }
    }
}

/// The receiver's working estimate of the skeleton.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ReceiverStack(Vec<Symbol>);

impl ReceiverStack {
    pub fn new() -> Self {
        ReceiverStack(Vec::new())
    }

    pub fn from_entries(entries: Vec<Symbol>) -> Self {
        ReceiverStack(entries)
    }

    pub fn entries(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when the top `r` entries are all `b`.
    pub fn run_on_top(&self, b: Symbol, r: usize) -> bool {
        self.0.len() >= r && self.0[self.0.len() - r..].iter().all(|&s| s == b)
    }

    /// Pushes `y` and resolves a completed rubber run. A correction that
    /// turns the new top into `b` and completes another run is resolved in
    /// turn, so the stack never ends a step with a completed run on top.
    pub fn step(&mut self, rule: &RubberRule, y: Symbol) -> Result<(), RubberError> {
        if y as usize >= rule.q {
            return Err(RubberError::SymbolOutOfRange {
                symbol: y,
                q: rule.q,
            });
        }
        self.0.push(y);
        while self.run_on_top(rule.b, rule.r) {
            self.0.truncate(self.0.len() - rule.r);
            match rule.action {
                RunAction::DeletePrevious => {
                    self.0.pop();
                    break;
                }
                RunAction::CorrectPrevious(delta) => {
                    let top = self.0.last_mut().ok_or(RubberError::AutomatonViolation(
                        "correction on an empty stack",
                    ))?;
                    let v = *top as i32 + delta as i32;
                    if v < 0 || v >= rule.q as i32 {
                        return Err(RubberError::AutomatonViolation(
                            "correction leaves the alphabet",
                        ));
                    }
                    *top = v as Symbol;
                }
            }
        }
        Ok(())
    }

    /// Length of the longest prefix that agrees with `target` followed by
    /// endless `pad` symbols.
    pub fn agreement(&self, target: &[Symbol], pad: Symbol) -> usize {
        self.0
            .iter()
            .enumerate()
            .take_while(|&(i, &s)| s == target.get(i).copied().unwrap_or(pad))
            .count()
    }
}

/// One receiver update.
pub fn receiver_step(
    stack: &ReceiverStack,
    rule: &RubberRule,
    y: Symbol,
) -> Result<ReceiverStack, RubberError> {
    let mut next = stack.clone();
    next.step(rule, y)?;
    Ok(next)
}

/// Sender bookkeeping: the target and a mirror of the receiver stack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenderState {
    pub target: Arc<[Symbol]>,
    pub pad: Symbol,
    pub stack: ReceiverStack,
    pub sent: usize,
}

impl SenderState {
    pub fn new(target: &[Symbol], pad: Symbol) -> Self {
        SenderState {
            target: target.into(),
            pad,
            stack: ReceiverStack::new(),
            sent: 0,
        }
    }

    pub fn on_track(&self) -> bool {
        self.stack.agreement(&self.target, self.pad) == self.stack.len()
    }

    fn target_at(&self, i: usize) -> Symbol {
        self.target.get(i).copied().unwrap_or(self.pad)
    }
}

/// Steering rule: while the mirrored stack is a prefix of the padded
/// target, send the next target symbol; otherwise send the rubber.
pub fn sender_next(state: &SenderState, rule: &RubberRule) -> Symbol {
    if state.on_track() {
        state.target_at(state.stack.len())
    } else {
        rule.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    None,
    Standard,
    /// A non-rubber symbol received as the rubber symbol.
    TowardsRubber,
    /// An intentionally sent rubber symbol was corrupted.
    Correction,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::None => "none",
            ErrorKind::Standard => "standard",
            ErrorKind::TowardsRubber => "towards_rubber",
            ErrorKind::Correction => "correction",
        })
    }
}

/// A symbol chosen by the sender, flagged when it is an intentional
/// rubber (or a direction-resolution symbol) rather than target data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emission {
    pub symbol: Symbol,
    pub rubber: bool,
}

pub fn classify(emission: Emission, rubber_symbol: Symbol, received: Symbol) -> ErrorKind {
    if received == emission.symbol {
        ErrorKind::None
    } else if received == rubber_symbol {
        ErrorKind::TowardsRubber
    } else if emission.rubber {
        ErrorKind::Correction
    } else {
        ErrorKind::Standard
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    /// Zero-based position in the block.
    pub position: usize,
    pub sent: Symbol,
    pub received: Symbol,
    pub kind: ErrorKind,
    /// Receiver stack after the step.
    pub stack: Vec<Symbol>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub steps: Vec<StepRecord>,
}

impl Transcript {
    pub fn sent(&self) -> Vec<Symbol> {
        self.steps.iter().map(|s| s.sent).collect()
    }

    pub fn received(&self) -> Vec<Symbol> {
        self.steps.iter().map(|s| s.received).collect()
    }

    pub fn count(&self, kind: ErrorKind) -> usize {
        self.steps.iter().filter(|s| s.kind == kind).count()
    }

    /// t0 in the accounting: errors that produced the rubber symbol.
    pub fn towards_rubber(&self) -> usize {
        self.count(ErrorKind::TowardsRubber)
    }

    pub fn standard(&self) -> usize {
        self.count(ErrorKind::Standard)
    }

    pub fn corrections(&self) -> usize {
        self.count(ErrorKind::Correction)
    }

    pub fn errors(&self) -> usize {
        self.steps.iter().filter(|s| s.sent != s.received).count()
    }

    pub fn final_stack(&self) -> &[Symbol] {
        self.steps.last().map(|s| s.stack.as_slice()).unwrap_or(&[])
    }
}

/// Joint sender/receiver state of one strategy.
pub trait Session: Clone + Send {
    fn next_symbol(&self) -> Emission;
    /// Rubber symbol used to classify errors at the current step.
    fn rubber_symbol(&self) -> Symbol;
    fn feed(&mut self, sent: Symbol, received: Symbol) -> Result<(), RubberError>;
    fn stack(&self) -> Vec<Symbol>;
    /// Decoded skeleton once the block is complete.
    fn decode(&self) -> Result<Vec<Symbol>, RubberError>;
    /// Length of the receiver's correct prefix, padding included.
    fn progress(&self) -> usize;
}

/// Sessions of the stack-automaton methods: 1-rubber, r-rubber, modified
/// rubber and the deliberately broken decoder.
#[derive(Debug, Clone)]
pub struct StackSession {
    rule: RubberRule,
    decoder_rule: RubberRule,
    sender: SenderState,
    receiver: ReceiverStack,
    skeleton_len: usize,
}

impl StackSession {
    pub fn new(params: &CodeParams, skeleton: &[Symbol]) -> Result<Self, RubberError> {
        let len = params.skeleton_len()?;
        if skeleton.len() != len {
            return Err(CodecError::WrongLength {
                got: skeleton.len(),
                want: len,
            }
            .into());
        }
        let q = params.q;
        let top = (q - 1) as Symbol;
        let (rule, decoder_rule, pad) = match params.method {
            Method::Rubber1 => {
                let rule = RubberRule::delete(q, 0, 1);
                (rule, rule, 1)
            }
            Method::RubberR => {
                let rule = RubberRule::delete(q, 0, params.r);
                (rule, rule, 1)
            }
            Method::Modified => {
                let b = params.rubber_symbol();
                let delta = if b == top { 1 } else { -1 };
                let rule = RubberRule::correct(q, b, params.r, delta);
                (rule, rule, top - b)
            }
            Method::Broken => (
                RubberRule::correct(q, top, params.r, 1),
                RubberRule::delete(q, top, params.r),
                0,
            ),
            Method::Lebedev | Method::Unidirectional => {
                return Err(CodecError::InvalidParams(format!(
                    "{} does not use a plain stack session",
                    params.method
                ))
                .into())
            }
        };
        Ok(StackSession {
            rule,
            decoder_rule,
            sender: SenderState::new(skeleton, pad),
            receiver: ReceiverStack::new(),
            skeleton_len: len,
        })
    }

    pub fn rule(&self) -> &RubberRule {
        &self.rule
    }

    pub fn sender(&self) -> &SenderState {
        &self.sender
    }
}

impl Session for StackSession {
    fn next_symbol(&self) -> Emission {
        let symbol = sender_next(&self.sender, &self.rule);
        Emission {
            symbol,
            rubber: !self.sender.on_track(),
        }
    }

    fn rubber_symbol(&self) -> Symbol {
        self.rule.b
    }

    fn feed(&mut self, _sent: Symbol, received: Symbol) -> Result<(), RubberError> {
        self.sender.stack.step(&self.rule, received)?;
        self.sender.sent += 1;
        self.receiver.step(&self.decoder_rule, received)
    }

    fn stack(&self) -> Vec<Symbol> {
        self.receiver.entries().to_vec()
    }

    fn decode(&self) -> Result<Vec<Symbol>, RubberError> {
        first_entries(self.receiver.entries(), self.skeleton_len)
    }

    fn progress(&self) -> usize {
        self.receiver
            .agreement(&self.sender.target, self.sender.pad)
    }
}

pub(crate) fn first_entries(stack: &[Symbol], len: usize) -> Result<Vec<Symbol>, RubberError> {
    if stack.len() < len {
        return Err(RubberError::ShortStack {
            got: stack.len(),
            need: len,
        });
    }
    Ok(stack[..len].to_vec())
}

/// A session of any method.
#[derive(Debug, Clone)]
pub enum AnySession {
    Stack(StackSession),
    Lebedev(LebedevSession),
    Unidir(UnidirSession),
}

impl AnySession {
    pub fn new(params: &CodeParams, skeleton: &[Symbol]) -> Result<Self, RubberError> {
        Ok(match params.method {
            Method::Lebedev => AnySession::Lebedev(LebedevSession::new(params, skeleton)?),
            Method::Unidirectional => AnySession::Unidir(UnidirSession::new(params, skeleton)?),
            _ => AnySession::Stack(StackSession::new(params, skeleton)?),
        })
    }
}

macro_rules! delegate {
    ($self:ident, $s:ident => $e:expr) => {
        match $self {
            AnySession::Stack($s) => $e,
            AnySession::Lebedev($s) => $e,
            AnySession::Unidir($s) => $e,
        }
    };
}

impl Session for AnySession {
    fn next_symbol(&self) -> Emission {
        delegate!(self, s => s.next_symbol())
    }

    fn rubber_symbol(&self) -> Symbol {
        delegate!(self, s => s.rubber_symbol())
    }

    fn feed(&mut self, sent: Symbol, received: Symbol) -> Result<(), RubberError> {
        delegate!(self, s => s.feed(sent, received))
    }

    fn stack(&self) -> Vec<Symbol> {
        delegate!(self, s => s.stack())
    }

    fn decode(&self) -> Result<Vec<Symbol>, RubberError> {
        delegate!(self, s => s.decode())
    }

    fn progress(&self) -> usize {
        delegate!(self, s => s.progress())
    }
}

/// Runs `n` steps. `adversary(position, sent)` returns the received
/// symbol; an adversary error aborts the run. A receiver failure ends the
/// run early and is returned as the decode result.
pub fn drive<S: Session>(
    session: &mut S,
    n: usize,
    mut adversary: impl FnMut(usize, Symbol) -> Result<Symbol, RubberError>,
) -> Result<(Transcript, Result<Vec<Symbol>, RubberError>), RubberError> {
    let mut transcript = Transcript::default();
    for position in 0..n {
        let emission = session.next_symbol();
        let received = adversary(position, emission.symbol)?;
        let kind = classify(emission, session.rubber_symbol(), received);
        let fed = session.feed(emission.symbol, received);
        transcript.steps.push(StepRecord {
            position,
            sent: emission.symbol,
            received,
            kind,
            stack: session.stack(),
        });
        if let Err(e) = fed {
            return Ok((transcript, Err(e)));
        }
    }
    let decoded = session.decode();
    Ok((transcript, decoded))
}

/// Result of one simulated block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundTrip {
    pub message: BigUint,
    pub transcript: Transcript,
    pub decoded: Result<BigUint, RubberError>,
}

impl RoundTrip {
    pub fn ok(&self) -> bool {
        self.decoded.as_ref() == Ok(&self.message)
    }
}

/// Adversary that replays an explicit pattern, rejecting any step the
/// channel (and, for unidirectional codes, the hidden direction) forbids.
pub fn pattern_adversary<'a>(
    pattern: &'a ErrorPattern,
    graph: &'a ChannelGraph,
    unidirectional: bool,
) -> impl FnMut(usize, Symbol) -> Result<Symbol, RubberError> + 'a {
    move |pos, sent| {
        let received = pattern.at(pos).unwrap_or(sent);
        pattern.check_step(graph, unidirectional, pos, sent, received)?;
        Ok(received)
    }
}

fn round_trip_with(
    params: &CodeParams,
    message: &BigUint,
    pattern: &ErrorPattern,
) -> Result<RoundTrip, RubberError> {
    if pattern.n() != params.n {
        return Err(RubberError::PatternLength {
            got: pattern.n(),
            want: params.n,
        });
    }
    if pattern.budget() > params.t {
        return Err(ChannelError::BudgetExceeded {
            errors: pattern.budget(),
            budget: params.t,
        }
        .into());
    }
    let space = params.skeleton_space()?;
    let skeleton = space.unrank(message)?;
    let unidirectional = matches!(params.channel, ChannelKind::Unidirectional(_));
    let graph = if unidirectional {
        params.channel.graph_for(pattern.direction())?
    } else {
        build_graph(&params.channel)?
    };
    let mut session = AnySession::new(params, &skeleton)?;
    let (transcript, decoded) = drive(
        &mut session,
        params.n,
        pattern_adversary(pattern, &graph, unidirectional),
    )?;
    let decoded = decoded.and_then(|s| space.rank(&s).map_err(RubberError::from));
    Ok(RoundTrip {
        message: message.clone(),
        transcript,
        decoded,
    })
}

/// One block of a stack-automaton method (1-rubber, r-rubber, modified,
/// broken) under an explicit pattern.
pub fn encode_round_trip(
    params: &CodeParams,
    message: &BigUint,
    pattern: &ErrorPattern,
) -> Result<RoundTrip, RubberError> {
    if matches!(params.method, Method::Lebedev | Method::Unidirectional) {
        return Err(CodecError::InvalidParams(format!(
            "use the dedicated round trip for {}",
            params.method
        ))
        .into());
    }
    round_trip_with(params, message, pattern)
}

/// One block of any method.
pub fn round_trip(
    params: &CodeParams,
    message: &BigUint,
    pattern: &ErrorPattern,
) -> Result<RoundTrip, RubberError> {
    round_trip_with(params, message, pattern)
}
