//! Discrete channels as bipartite input/output graphs and adversarial
//! error patterns over them.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A channel symbol. Alphabets are the contiguous range `0..q`.
pub type Symbol = u8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(usize),
    #[error("symbol {symbol} outside alphabet of size {q}")]
    SymbolOutOfRange { symbol: Symbol, q: usize },
    #[error("missing noiseless edge ({0},{0})")]
    MissingIdentityEdge(Symbol),
    #[error("complement relabel needs equal alphabets, got {q_in} and {q_out}")]
    UnequalAlphabets { q_in: usize, q_out: usize },
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("error position {pos} outside block of length {n}")]
    PositionOutOfRange { pos: usize, n: usize },
    #[error("position {0} is overridden twice")]
    DuplicatePosition(usize),
    #[error("{errors} errors exceed budget {budget}")]
    BudgetExceeded { errors: usize, budget: usize },
    #[error("edge ({sent},{received}) at position {pos} is not in the channel")]
    ForbiddenEdge {
        pos: usize,
        sent: Symbol,
        received: Symbol,
    },
    #[error("error at position {pos} contradicts the {direction} direction of the codeword")]
    DirectionViolation { pos: usize, direction: Direction },
}

/// Hidden per-codeword direction of a unidirectional channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// Errors only decrease symbols (Z-type).
    Down,
    /// Errors only increase symbols (inverse-Z-type).
    Up,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Down, Direction::Up];

    pub fn flip(self) -> Direction {
        match self {
            Direction::Down => Direction::Up,
            Direction::Up => Direction::Down,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Down => "down",
            Direction::Up => "up",
        })
    }
}

/// Bipartite graph of admissible (sent, received) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChannelGraph {
    q_in: usize,
    q_out: usize,
    edges: BTreeSet<(Symbol, Symbol)>,
}

impl ChannelGraph {
    /// Builds a graph after checking alphabet bounds and that every input
    /// can pass through unchanged.
    pub fn new(
        q_in: usize,
        q_out: usize,
        edges: impl IntoIterator<Item = (Symbol, Symbol)>,
    ) -> Result<Self, ChannelError> {
        if q_in < 2 || q_out < 2 {
            return Err(ChannelError::AlphabetTooSmall(q_in.min(q_out)));
        }
        if q_in > 256 || q_out > 256 {
            return Err(ChannelError::SymbolOutOfRange {
                symbol: Symbol::MAX,
                q: q_in.max(q_out),
            });
        }
        let edges: BTreeSet<_> = edges.into_iter().collect();
        for &(x, y) in &edges {
            if x as usize >= q_in {
                return Err(ChannelError::SymbolOutOfRange { symbol: x, q: q_in });
            }
            if y as usize >= q_out {
                return Err(ChannelError::SymbolOutOfRange {
                    symbol: y,
                    q: q_out,
                });
            }
        }
        for x in 0..q_in {
            let x = x as Symbol;
            if x as usize >= q_out || !edges.contains(&(x, x)) {
                return Err(ChannelError::MissingIdentityEdge(x));
            }
        }
        Ok(ChannelGraph { q_in, q_out, edges })
    }

    pub fn q_in(&self) -> usize {
        self.q_in
    }

    pub fn q_out(&self) -> usize {
        self.q_out
    }

    pub fn edges(&self) -> &BTreeSet<(Symbol, Symbol)> {
        &self.edges
    }

    pub fn contains(&self, x: Symbol, y: Symbol) -> bool {
        self.edges.contains(&(x, y))
    }
}

/// Named channel families.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Symmetric(usize),
    Z(usize),
    InverseZ(usize),
    /// Z or inverse Z, fixed per codeword and unknown to both ends.
    Unidirectional(usize),
    Custom(ChannelGraph),
}

impl ChannelKind {
    pub fn q(&self) -> usize {
        match self {
            ChannelKind::Symmetric(q)
            | ChannelKind::Z(q)
            | ChannelKind::InverseZ(q)
            | ChannelKind::Unidirectional(q) => *q,
            ChannelKind::Custom(g) => g.q_in,
        }
    }

    /// The graph in force for one codeword. Unidirectional channels need
    /// the hidden direction; other kinds ignore it.
    pub fn graph_for(&self, direction: Direction) -> Result<ChannelGraph, ChannelError> {
        match self {
            ChannelKind::Unidirectional(q) => match direction {
                Direction::Down => build_graph(&ChannelKind::Z(*q)),
                Direction::Up => build_graph(&ChannelKind::InverseZ(*q)),
            },
            other => build_graph(other),
        }
    }

    /// Parses the CLI tokens `sym`, `z`, `invz`, `unidir`.
    pub fn from_token(token: &str, q: usize) -> Option<ChannelKind> {
        match token {
            "sym" => Some(ChannelKind::Symmetric(q)),
            "z" => Some(ChannelKind::Z(q)),
            "invz" => Some(ChannelKind::InverseZ(q)),
            "unidir" => Some(ChannelKind::Unidirectional(q)),
            _ => None,
        }
    }

    pub fn token(&self) -> &'static str {
        match self {
            ChannelKind::Symmetric(_) => "sym",
            ChannelKind::Z(_) => "z",
            ChannelKind::InverseZ(_) => "invz",
            ChannelKind::Unidirectional(_) => "unidir",
            ChannelKind::Custom(_) => "custom",
        }
    }
}

fn check_q(q: usize) -> Result<(), ChannelError> {
    if q < 2 {
        Err(ChannelError::AlphabetTooSmall(q))
    } else {
        Ok(())
    }
}

/// Expands a channel kind to its edge set. A unidirectional channel
/// expands to the union of its two direction graphs; direction consistency
/// is enforced by [`is_admissible`].
pub fn build_graph(kind: &ChannelKind) -> Result<ChannelGraph, ChannelError> {
    let q = kind.q();
    check_q(q)?;
    let identity = (0..q).map(|i| (i as Symbol, i as Symbol));
    let down = (1..q).map(|i| (i as Symbol, (i - 1) as Symbol));
    let up = (0..q - 1).map(|i| (i as Symbol, (i + 1) as Symbol));
    match kind {
        ChannelKind::Symmetric(_) => ChannelGraph::new(
            q,
            q,
            (0..q).flat_map(|x| (0..q).map(move |y| (x as Symbol, y as Symbol))),
        ),
        ChannelKind::Z(_) => ChannelGraph::new(q, q, identity.chain(down)),
        ChannelKind::InverseZ(_) => ChannelGraph::new(q, q, identity.chain(up)),
        ChannelKind::Unidirectional(_) => ChannelGraph::new(q, q, identity.chain(down).chain(up)),
        ChannelKind::Custom(g) => Ok(g.clone()),
    }
}

/// Output symbols reachable from `x`, in increasing order.
pub fn allowed_outputs(graph: &ChannelGraph, x: Symbol) -> Result<Vec<Symbol>, ChannelError> {
    if x as usize >= graph.q_in {
        return Err(ChannelError::SymbolOutOfRange {
            symbol: x,
            q: graph.q_in,
        });
    }
    Ok(graph
        .edges
        .range((x, 0)..=(x, Symbol::MAX))
        .map(|&(_, y)| y)
        .collect())
}

/// Maps `x -> q-1-x` on both sides of every edge.
pub fn relabel_complement(graph: &ChannelGraph) -> Result<ChannelGraph, ChannelError> {
    if graph.q_in != graph.q_out {
        return Err(ChannelError::UnequalAlphabets {
            q_in: graph.q_in,
            q_out: graph.q_out,
        });
    }
    let top = (graph.q_in - 1) as Symbol;
    ChannelGraph::new(
        graph.q_in,
        graph.q_out,
        graph.edges.iter().map(|&(x, y)| (top - x, top - y)),
    )
}

/// Complements every symbol of a sequence over an alphabet of size `q`.
pub fn complement(seq: &[Symbol], q: usize) -> Vec<Symbol> {
    let top = (q - 1) as Symbol;
    seq.iter().map(|&s| top - s).collect()
}

/// True iff `received` is reachable from `sent` with at most `t` symbol
/// changes. For unidirectional channels all changes must share one sign.
pub fn is_admissible(
    kind: &ChannelKind,
    sent: &[Symbol],
    received: &[Symbol],
    t: usize,
) -> Result<bool, ChannelError> {
    if sent.len() != received.len() {
        return Err(ChannelError::LengthMismatch(sent.len(), received.len()));
    }
    let q = kind.q();
    for &s in sent.iter().chain(received) {
        if s as usize >= q {
            return Err(ChannelError::SymbolOutOfRange { symbol: s, q });
        }
    }
    let graph = build_graph(kind)?;
    let mut errors = 0;
    let mut sign = 0i32;
    for (&x, &y) in sent.iter().zip(received) {
        if x == y {
            continue;
        }
        errors += 1;
        if !graph.contains(x, y) {
            return Ok(false);
        }
        if matches!(kind, ChannelKind::Unidirectional(_)) {
            let s = if y > x { 1 } else { -1 };
            if sign != 0 && sign != s {
                return Ok(false);
            }
            sign = s;
        }
    }
    Ok(errors <= t)
}

/// An explicit adversary: fixed received symbols at chosen positions.
/// Positions are zero-based. For unidirectional channels the pattern also
/// fixes the hidden direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorPattern {
    n: usize,
    overrides: Vec<(usize, Symbol)>,
    budget: usize,
    direction: Direction,
}

impl ErrorPattern {
    pub fn new(
        n: usize,
        mut overrides: Vec<(usize, Symbol)>,
        budget: usize,
    ) -> Result<Self, ChannelError> {
        overrides.sort_unstable();
        for w in overrides.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ChannelError::DuplicatePosition(w[0].0));
            }
        }
        if let Some(&(pos, _)) = overrides.iter().find(|(p, _)| *p >= n) {
            return Err(ChannelError::PositionOutOfRange { pos, n });
        }
        if overrides.len() > budget {
            return Err(ChannelError::BudgetExceeded {
                errors: overrides.len(),
                budget,
            });
        }
        Ok(ErrorPattern {
            n,
            overrides,
            budget,
            direction: Direction::Down,
        })
    }

    pub fn none(n: usize, budget: usize) -> Self {
        ErrorPattern {
            n,
            overrides: Vec::new(),
            budget,
            direction: Direction::Down,
        }
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn overrides(&self) -> &[(usize, Symbol)] {
        &self.overrides
    }

    /// Received symbol forced at `pos`, if any.
    pub fn at(&self, pos: usize) -> Option<Symbol> {
        self.overrides
            .binary_search_by_key(&pos, |&(p, _)| p)
            .ok()
            .map(|i| self.overrides[i].1)
    }

    /// Checks one adaptive step against the active graph and direction.
    pub fn check_step(
        &self,
        graph: &ChannelGraph,
        unidirectional: bool,
        pos: usize,
        sent: Symbol,
        received: Symbol,
    ) -> Result<(), ChannelError> {
        if received as usize >= graph.q_out() {
            return Err(ChannelError::SymbolOutOfRange {
                symbol: received,
                q: graph.q_out(),
            });
        }
        if sent == received {
            return Ok(());
        }
        if unidirectional {
            let up = received > sent;
            if up != (self.direction == Direction::Up) {
                return Err(ChannelError::DirectionViolation {
                    pos,
                    direction: self.direction,
                });
            }
        }
        if !graph.contains(sent, received) {
            return Err(ChannelError::ForbiddenEdge {
                pos,
                sent,
                received,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edges(kind: ChannelKind) -> Vec<(Symbol, Symbol)> {
        build_graph(&kind)
            .unwrap()
            .edges()
            .iter()
            .copied()
            .collect()
    }

    #[test]
    fn z3_edges() {
        let mut want = vec![(0, 0), (1, 1), (2, 2), (1, 0), (2, 1)];
        want.sort();
        assert_eq!(edges(ChannelKind::Z(3)), want);
    }

    #[test]
    fn small_graphs() {
        assert_eq!(
            edges(ChannelKind::Symmetric(2)),
            vec![(0, 0), (0, 1), (1, 0), (1, 1)]
        );
        assert_eq!(
            edges(ChannelKind::InverseZ(2)),
            vec![(0, 0), (0, 1), (1, 1)]
        );
        assert!(build_graph(&ChannelKind::Z(1)).is_err());
    }

    #[test]
    fn outputs() {
        let z3 = build_graph(&ChannelKind::Z(3)).unwrap();
        assert_eq!(allowed_outputs(&z3, 2).unwrap(), vec![1, 2]);
        let s2 = build_graph(&ChannelKind::Symmetric(2)).unwrap();
        assert_eq!(allowed_outputs(&s2, 0).unwrap(), vec![0, 1]);
        let iz3 = build_graph(&ChannelKind::InverseZ(3)).unwrap();
        assert_eq!(allowed_outputs(&iz3, 2).unwrap(), vec![2]);
        assert!(allowed_outputs(&iz3, 3).is_err());
    }

    #[test]
    fn complement_maps_z_to_inverse_z() {
        for q in 2..=6 {
            let z = build_graph(&ChannelKind::Z(q)).unwrap();
            let iz = build_graph(&ChannelKind::InverseZ(q)).unwrap();
            assert_eq!(relabel_complement(&z).unwrap(), iz);
            assert_eq!(relabel_complement(&iz).unwrap(), z);
            let s = build_graph(&ChannelKind::Symmetric(q)).unwrap();
            assert_eq!(relabel_complement(&s).unwrap(), s);
        }
        let z5 = build_graph(&ChannelKind::Z(5)).unwrap();
        assert_eq!(
            relabel_complement(&relabel_complement(&z5).unwrap()).unwrap(),
            z5
        );
    }

    #[test]
    fn admissibility() {
        assert!(is_admissible(&ChannelKind::Z(2), &[1, 1, 0], &[1, 0, 0], 1).unwrap());
        assert!(!is_admissible(&ChannelKind::Unidirectional(2), &[1, 0], &[0, 1], 2).unwrap());
        assert!(is_admissible(&ChannelKind::Symmetric(2), &[0, 1, 1], &[0, 1, 1], 0).unwrap());
        assert!(!is_admissible(&ChannelKind::Z(2), &[0], &[1], 1).unwrap());
        assert!(!is_admissible(&ChannelKind::Symmetric(3), &[0, 0], &[1, 2], 1).unwrap());
        assert!(is_admissible(&ChannelKind::Symmetric(3), &[0], &[0, 1], 1).is_err());
    }

    #[test]
    fn custom_graph_needs_identity() {
        assert_eq!(
            ChannelGraph::new(2, 2, [(0, 0), (0, 1)]),
            Err(ChannelError::MissingIdentityEdge(1))
        );
    }

    #[test]
    fn pattern_validation() {
        assert!(ErrorPattern::new(4, vec![(1, 0), (1, 2)], 2).is_err());
        assert!(ErrorPattern::new(4, vec![(4, 0)], 2).is_err());
        assert!(ErrorPattern::new(4, vec![(0, 0), (2, 1)], 1).is_err());
        let p = ErrorPattern::new(4, vec![(2, 1), (0, 0)], 2).unwrap();
        assert_eq!(p.at(0), Some(0));
        assert_eq!(p.at(1), None);
        assert_eq!(p.overrides(), &[(0, 0), (2, 1)]);
    }
}
