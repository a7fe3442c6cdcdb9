//! Exhaustive and randomized checks of the feedback strategies.
//!
//! The exhaustive search walks every message against every adaptive
//! adversary: at each step the adversary sees the symbol about to be sent
//! and may replace it by any channel output while budget remains. Once the
//! budget is spent the rest of the block is forced, so it is run straight
//! through instead of branched.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_bigint::{BigUint, RandBigInt};
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::channel::{
    allowed_outputs, build_graph, ChannelError, ChannelGraph, ChannelKind, Direction, Symbol,
};
use crate::codec::{binomial, CodeParams, CodecError};
use crate::rubber::{
    classify, AnySession, ErrorKind, RoundTrip, RubberError, Session, StepRecord, Transcript,
};

pub const DEFAULT_CAP: u64 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Rubber(#[from] RubberError),
    #[error("search space exceeds the cap of {cap} leaves (bound {bound})")]
    CapExceeded { bound: BigUint, cap: u64 },
    #[error("{0} messages is too many to enumerate")]
    TooManyMessages(BigUint),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Worker threads; messages are split between them.
    pub jobs: usize,
    /// Upper limit on adversary leaves.
    pub cap: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            jobs: 1,
            cap: DEFAULT_CAP,
        }
    }
}

/// A message and adversary for which decoding fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub message: BigUint,
    pub skeleton: Vec<Symbol>,
    /// Error direction, for unidirectional codes.
    pub direction: Option<Direction>,
    /// Zero-based positions and the symbols received there.
    pub overrides: Vec<(usize, Symbol)>,
    pub sent: Vec<Symbol>,
    pub received: Vec<Symbol>,
    pub decoded: Result<Vec<Symbol>, RubberError>,
}

impl Counterexample {
    /// The adversary in the `pos:symbol,...` form accepted by the CLI,
    /// with one-based positions.
    pub fn errors_spec(&self) -> String {
        if self.overrides.is_empty() {
            return "none".into();
        }
        self.overrides
            .iter()
            .map(|(p, y)| format!("{}:{}", p + 1, y))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Verified,
    Counterexample(Box<Counterexample>),
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub params: CodeParams,
    pub messages: BigUint,
    pub leaves: u64,
    /// Fewest unused symbols left after the skeleton was first complete,
    /// over all successful leaves.
    pub min_slack: Option<usize>,
    /// Leaves whose transcript contains an error that produced the rubber.
    pub towards_rubber_leaves: u64,
    pub outcome: Outcome,
    pub elapsed: Duration,
}

impl VerificationReport {
    pub fn verified(&self) -> bool {
        self.outcome == Outcome::Verified
    }
}

/// Upper bound on the number of adversary leaves.
pub fn leaf_bound(params: &CodeParams) -> Result<BigUint, VerifyError> {
    let messages = params.skeleton_space()?.count();
    let (graphs, _) = graphs(params)?;
    let degree = graphs
        .iter()
        .flat_map(|(_, g)| (0..g.q_in()).map(move |x| allowed_outputs(g, x as Symbol)))
        .map(|o| o.map(|v| v.len()))
        .try_fold(1, |acc, d| d.map(|d| acc.max(d)))?;
    let mut per_message = BigUint::zero();
    for j in 0..=params.t.min(params.n) {
        per_message += binomial(params.n, j) * BigUint::from(degree - 1).pow(j as u32);
    }
    Ok(messages * per_message * BigUint::from(graphs.len()))
}

type Graphs = Vec<(Option<Direction>, ChannelGraph)>;

fn graphs(params: &CodeParams) -> Result<(Graphs, bool), VerifyError> {
    params.validate()?;
    if let ChannelKind::Unidirectional(_) = params.channel {
        let mut out = Vec::new();
        for d in Direction::BOTH {
            out.push((Some(d), params.channel.graph_for(d)?));
        }
        Ok((out, true))
    } else {
        Ok((vec![(None, build_graph(&params.channel)?)], false))
    }
}

struct Failure {
    overrides: Vec<(usize, Symbol)>,
    sent: Vec<Symbol>,
    received: Vec<Symbol>,
    decoded: Result<Vec<Symbol>, RubberError>,
}

struct Walk<'a> {
    n: usize,
    skeleton: &'a [Symbol],
    graph: &'a ChannelGraph,
    direction: Option<Direction>,
    leaves: &'a AtomicU64,
    cap: u64,
    abort: &'a AtomicBool,
    min_slack: usize,
    towards_rubber: u64,
    sent: Vec<Symbol>,
    received: Vec<Symbol>,
    overrides: Vec<(usize, Symbol)>,
    /// Towards-rubber errors on the current path.
    path_towards: usize,
}

enum Stop {
    Cap,
    Fail(Failure),
}

impl Walk<'_> {
    fn outputs(&self, x: Symbol) -> Vec<Symbol> {
        let mut out = vec![x];
        for y in allowed_outputs(self.graph, x).unwrap_or_default() {
            let ok = match self.direction {
                Some(Direction::Down) => y < x,
                Some(Direction::Up) => y > x,
                None => y != x,
            };
            if ok {
                out.push(y);
            }
        }
        out
    }

    /// Step at which the receiver last came to hold the whole skeleton.
    fn track<S: Session>(&self, session: &S, done_at: Option<usize>, pos: usize) -> Option<usize> {
        if session.progress() < self.skeleton.len() {
            None
        } else {
            done_at.or(Some(pos + 1))
        }
    }

    fn leaf<S: Session>(
        &mut self,
        session: &S,
        done_at: Option<usize>,
        fed: Result<(), RubberError>,
    ) -> Result<(), Stop> {
        let count = self.leaves.fetch_add(1, Ordering::Relaxed) + 1;
        if count > self.cap || self.abort.load(Ordering::Relaxed) {
            self.abort.store(true, Ordering::Relaxed);
            return Err(Stop::Cap);
        }
        if self.path_towards > 0 {
            self.towards_rubber += 1;
        }
        let decoded = fed.and_then(|_| session.decode());
        if decoded.as_deref() == Ok(self.skeleton) {
            if let Some(step) = done_at {
                self.min_slack = self.min_slack.min(self.n - step);
            }
            return Ok(());
        }
        Err(Stop::Fail(Failure {
            overrides: self.overrides.clone(),
            sent: self.sent.clone(),
            received: self.received.clone(),
            decoded,
        }))
    }

    fn explore<S: Session>(
        &mut self,
        mut session: S,
        pos: usize,
        budget: usize,
        mut done_at: Option<usize>,
    ) -> Result<(), Stop> {
        let depth = self.sent.len();
        let result = self.explore_inner(&mut session, pos, budget, &mut done_at);
        self.sent.truncate(depth);
        self.received.truncate(depth);
        result
    }

    fn explore_inner<S: Session>(
        &mut self,
        session: &mut S,
        mut pos: usize,
        budget: usize,
        done_at: &mut Option<usize>,
    ) -> Result<(), Stop> {
        while pos < self.n {
            let emission = session.next_symbol();
            let x = emission.symbol;
            let outs = if budget > 0 { self.outputs(x) } else { vec![x] };
            if outs.len() > 1 {
                for &y in &outs {
                    let mut branch = session.clone();
                    self.sent.push(x);
                    self.received.push(y);
                    let fed = branch.feed(x, y);
                    let done = self.track(&branch, *done_at, pos);
                    let spent = usize::from(y != x);
                    let towards =
                        classify(emission, session.rubber_symbol(), y) == ErrorKind::TowardsRubber;
                    self.path_towards += usize::from(towards);
                    if y != x {
                        self.overrides.push((pos, y));
                    }
                    let r = match fed {
                        Ok(()) => self.explore(branch, pos + 1, budget - spent, done),
                        Err(e) => self.leaf(&branch, done, Err(e)),
                    };
                    if y != x {
                        self.overrides.pop();
                    }
                    self.path_towards -= usize::from(towards);
                    self.sent.pop();
                    self.received.pop();
                    r?;
                }
                return Ok(());
            }
            self.sent.push(x);
            self.received.push(x);
            let fed = session.feed(x, x);
            *done_at = self.track(session, *done_at, pos);
            if fed.is_err() {
                return self.leaf(session, *done_at, fed);
            }
            pos += 1;
        }
        self.leaf(session, *done_at, Ok(()))
    }
}

struct MessageResult {
    leaves_ok: bool,
    min_slack: usize,
    towards_rubber: u64,
    failure: Option<(Option<Direction>, Failure)>,
}

fn check_message(
    params: &CodeParams,
    skeleton: &[Symbol],
    graphs: &Graphs,
    leaves: &AtomicU64,
    cap: u64,
    abort: &AtomicBool,
) -> Result<MessageResult, VerifyError> {
    let mut min_slack = usize::MAX;
    let mut towards_rubber = 0;
    for (direction, graph) in graphs {
        let session = AnySession::new(params, skeleton)?;
        let mut walk = Walk {
            n: params.n,
            skeleton,
            graph,
            direction: *direction,
            leaves,
            cap,
            abort,
            min_slack: usize::MAX,
            towards_rubber: 0,
            sent: Vec::new(),
            received: Vec::new(),
            overrides: Vec::new(),
            path_towards: 0,
        };
        let r = walk.explore(session, 0, params.t, None);
        min_slack = min_slack.min(walk.min_slack);
        towards_rubber += walk.towards_rubber;
        match r {
            Ok(()) => {}
            Err(Stop::Cap) => {
                return Ok(MessageResult {
                    leaves_ok: false,
                    min_slack,
                    towards_rubber,
                    failure: None,
                })
            }
            Err(Stop::Fail(f)) => {
                return Ok(MessageResult {
                    leaves_ok: true,
                    min_slack,
                    towards_rubber,
                    failure: Some((*direction, f)),
                })
            }
        }
    }
    Ok(MessageResult {
        leaves_ok: true,
        min_slack,
        towards_rubber,
        failure: None,
    })
}

/// Checks every message against every admissible adaptive adversary.
pub fn verify_exhaustive(
    params: &CodeParams,
    options: VerifyOptions,
) -> Result<VerificationReport, VerifyError> {
    let start = Instant::now();
    let space = params.skeleton_space()?;
    let (graphs, _) = graphs(params)?;
    let bound = leaf_bound(params)?;
    if bound > BigUint::from(options.cap) {
        return Err(VerifyError::CapExceeded {
            bound,
            cap: options.cap,
        });
    }
    let messages = space.count();
    let total = messages
        .to_u64()
        .ok_or_else(|| VerifyError::TooManyMessages(messages.clone()))?;

    let leaves = AtomicU64::new(0);
    let abort = AtomicBool::new(false);
    let next = AtomicU64::new(0);
    // smallest failing message index seen so far
    let first_fail = AtomicU64::new(u64::MAX);
    let results: Mutex<Vec<(u64, MessageResult)>> = Mutex::new(Vec::new());
    let error: Mutex<Option<VerifyError>> = Mutex::new(None);

    let worker = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        if i >= total || abort.load(Ordering::Relaxed) || i > first_fail.load(Ordering::Relaxed) {
            break;
        }
        let outcome = space
            .unrank(&BigUint::from(i))
            .map_err(VerifyError::from)
            .and_then(|s| check_message(params, &s, &graphs, &leaves, options.cap, &abort));
        match outcome {
            Ok(r) => {
                if r.failure.is_some() {
                    first_fail.fetch_min(i, Ordering::Relaxed);
                }
                let stop = !r.leaves_ok;
                results.lock().expect("results lock").push((i, r));
                if stop {
                    break;
                }
            }
            Err(e) => {
                abort.store(true, Ordering::Relaxed);
                error.lock().expect("error lock").get_or_insert(e);
                break;
            }
        }
    };
    let jobs = options.jobs.max(1);
    if jobs == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..jobs {
                s.spawn(worker);
            }
        });
    }
    if let Some(e) = error.into_inner().expect("error lock") {
        return Err(e);
    }
    let mut results = results.into_inner().expect("results lock");
    if results.iter().any(|(_, r)| !r.leaves_ok) {
        return Err(VerifyError::CapExceeded {
            bound,
            cap: options.cap,
        });
    }
    results.sort_by_key(|(i, _)| *i);
    let towards_rubber_leaves = results.iter().map(|(_, r)| r.towards_rubber).sum();
    let min_slack = results
        .iter()
        .map(|(_, r)| r.min_slack)
        .min()
        .filter(|&s| s != usize::MAX);
    let counterexample = results
        .into_iter()
        .find_map(|(i, r)| r.failure.map(|f| (i, f)));
    let outcome = match counterexample {
        None => Outcome::Verified,
        Some((i, (direction, f))) => {
            let message = BigUint::from(i);
            Outcome::Counterexample(Box::new(Counterexample {
                skeleton: space.unrank(&message)?,
                message,
                direction,
                overrides: f.overrides,
                sent: f.sent,
                received: f.received,
                decoded: f.decoded,
            }))
        }
    };
    Ok(VerificationReport {
        params: params.clone(),
        messages,
        leaves: leaves.load(Ordering::Relaxed),
        min_slack,
        towards_rubber_leaves,
        outcome,
        elapsed: start.elapsed(),
    })
}

/// Random generator for one trial of a seeded experiment.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// One block against an adversary that, while budget remains, picks the
/// received symbol uniformly among the channel outputs of the sent one.
/// Unidirectional codes use `direction`, or a random one when it is `None`.
pub fn random_round_trip(
    params: &CodeParams,
    message: &BigUint,
    direction: Option<Direction>,
    rng: &mut ChaCha8Rng,
) -> Result<RoundTrip, VerifyError> {
    let space = params.skeleton_space()?;
    let skeleton = space.unrank(message)?;
    let (graphs, _) = graphs(params)?;
    let pick = rng.gen_range(0..graphs.len());
    let (direction, graph) = graphs
        .iter()
        .find(|(d, _)| d.is_some() && *d == direction)
        .unwrap_or(&graphs[pick]);
    let mut session = AnySession::new(params, &skeleton)?;
    let mut budget = params.t;
    let mut transcript = Transcript::default();
    let mut fed = Ok(());
    for position in 0..params.n {
        let emission = session.next_symbol();
        let x = emission.symbol;
        let received = if budget > 0 {
            let outs: Vec<Symbol> = allowed_outputs(graph, x)?
                .into_iter()
                .filter(|&y| match direction {
                    Some(Direction::Down) => y <= x,
                    Some(Direction::Up) => y >= x,
                    None => true,
                })
                .collect();
            outs[rng.gen_range(0..outs.len())]
        } else {
            x
        };
        if received != x {
            budget -= 1;
        }
        let kind = classify(emission, session.rubber_symbol(), received);
        fed = session.feed(x, received);
        transcript.steps.push(StepRecord {
            position,
            sent: x,
            received,
            kind,
            stack: session.stack(),
        });
        if fed.is_err() {
            break;
        }
    }
    let decoded = fed
        .and_then(|_| session.decode())
        .and_then(|s| space.rank(&s).map_err(RubberError::from));
    Ok(RoundTrip {
        message: message.clone(),
        transcript,
        decoded,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomSummary {
    pub trials: u64,
    pub successes: u64,
    pub mean_errors: f64,
    /// Mean number of symbols spent beyond the skeleton length before the
    /// receiver first held the whole skeleton (failures count as `n`).
    pub mean_overhead: f64,
}

impl RandomSummary {
    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.successes as f64 / self.trials as f64
    }
}

/// Monte Carlo run with uniformly random messages.
pub fn simulate_random(
    params: &CodeParams,
    trials: u64,
    seed: u64,
) -> Result<RandomSummary, VerifyError> {
    let space = params.skeleton_space()?;
    let count = space.count();
    let len = space.length();
    let mut successes = 0;
    let mut errors = 0usize;
    let mut overhead = 0usize;
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let message = rng.gen_biguint_below(&count);
        let rt = random_round_trip(params, &message, None, &mut rng)?;
        errors += rt.transcript.errors();
        let done = completion_step(&rt.transcript, &space.unrank(&message)?).unwrap_or(params.n);
        overhead += done.saturating_sub(len);
        if rt.ok() {
            successes += 1;
        }
    }
    let denom = trials.max(1) as f64;
    Ok(RandomSummary {
        trials,
        successes,
        mean_errors: errors as f64 / denom,
        mean_overhead: overhead as f64 / denom,
    })
}

/// First step count after which the receiver stack starts with the skeleton.
pub fn completion_step(transcript: &Transcript, skeleton: &[Symbol]) -> Option<usize> {
    transcript
        .steps
        .iter()
        .position(|s| s.stack.starts_with(skeleton))
        .map(|i| i + 1)
}

/// `log2` of an arbitrary-size integer; `-inf` for zero.
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return x.to_f64().map(f64::log2).unwrap_or(f64::INFINITY);
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(0.0);
    top.log2() + shift as f64
}

/// Message count and rate `log_q(M) / n` of a code.
pub fn measure_rate(params: &CodeParams) -> Result<(BigUint, f64), VerifyError> {
    let count = params.skeleton_space()?.count();
    let rate = if count.is_zero() || params.n == 0 {
        0.0
    } else {
        log2_big(&count) / (params.q as f64).log2() / params.n as f64
    };
    Ok((count, rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::Method;

    #[test]
    fn rubber1_small_verifies() {
        let p = CodeParams::new(Method::Rubber1, 3, 6, 1);
        let r = verify_exhaustive(&p, VerifyOptions::default()).unwrap();
        assert!(r.verified());
        assert_eq!(r.messages, BigUint::from(16u32));
        // every message has 1 clean leaf plus 6 positions x 2 alternatives,
        // minus branches cut off by nothing: the count is exact here
        assert_eq!(r.leaves, 16 * (1 + 6 * 2));
        assert_eq!(r.min_slack, Some(0));
        // each message has 4 nonzero positions plus 2 padding positions
        // where the adversary can send the rubber
        assert_eq!(r.towards_rubber_leaves, 16 * 6);
    }

    #[test]
    fn z_channel_never_forges_the_rubber() {
        for channel in [ChannelKind::Z(2), ChannelKind::InverseZ(2)] {
            let p = CodeParams::new(Method::Modified, 2, 10, 2).on(channel);
            let r = verify_exhaustive(&p, VerifyOptions::default()).unwrap();
            assert!(r.verified());
            assert_eq!(r.towards_rubber_leaves, 0);
        }
    }

    #[test]
    fn broken_decoder_is_caught() {
        let p = CodeParams::new(Method::Broken, 3, 6, 1);
        let r = verify_exhaustive(&p, VerifyOptions::default()).unwrap();
        let Outcome::Counterexample(c) = r.outcome else {
            panic!("broken decoder verified")
        };
        assert_eq!(c.overrides.len(), 1);
        assert_ne!(c.decoded.as_ref().ok(), Some(&c.skeleton));
        assert!(c.errors_spec().contains(':'));
    }

    #[test]
    fn jobs_do_not_change_the_result() {
        let p = CodeParams::new(Method::Modified, 3, 7, 2);
        let a = verify_exhaustive(
            &p,
            VerifyOptions {
                jobs: 1,
                cap: DEFAULT_CAP,
            },
        )
        .unwrap();
        let b = verify_exhaustive(
            &p,
            VerifyOptions {
                jobs: 4,
                cap: DEFAULT_CAP,
            },
        )
        .unwrap();
        assert!(a.verified() && b.verified());
        assert_eq!(a.leaves, b.leaves);
    }

    #[test]
    fn cap_is_enforced() {
        let p = CodeParams::new(Method::Rubber1, 3, 10, 2);
        let e = verify_exhaustive(&p, VerifyOptions { jobs: 1, cap: 10 }).unwrap_err();
        assert!(matches!(e, VerifyError::CapExceeded { .. }));
    }

    #[test]
    fn random_runs_are_reproducible() {
        let p = CodeParams::new(Method::Rubber1, 3, 8, 2);
        let a = simulate_random(&p, 50, 7).unwrap();
        let b = simulate_random(&p, 50, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.successes, 50);
    }

    #[test]
    fn rate_of_small_code() {
        let p = CodeParams::new(Method::Rubber1, 3, 6, 1);
        let (m, rate) = measure_rate(&p).unwrap();
        assert_eq!(m, BigUint::from(16u32));
        assert!((rate - 16f64.log(3.0) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn big_log() {
        let x = BigUint::from(1u32) << 3000u32;
        assert!((log2_big(&x) - 3000.0).abs() < 1e-9);
        assert!((log2_big(&BigUint::from(8u32)) - 3.0).abs() < 1e-12);
    }
}
