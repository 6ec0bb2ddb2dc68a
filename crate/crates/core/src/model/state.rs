//! States of the non-absorbed space `E = {1, 2, ...}^r` and the linearization
//! used for matrix work.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// A point of `E = ℕ^r` with every coordinate at least 1.
///
/// The cemetery point is never a `State`; see [`Target::Absorbed`](super::Target).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(Vec<u32>);

impl State {
    pub fn new(coords: Vec<u32>) -> Result<Self, ModelError> {
        if coords.is_empty() {
            return Err(ModelError::InvalidState("state needs at least one coordinate".into()));
        }
        if let Some(pos) = coords.iter().position(|&c| c == 0) {
            return Err(ModelError::InvalidState(format!(
                "coordinate {} of {:?} is 0; states live in {{1,2,...}}^r",
                pos + 1,
                coords
            )));
        }
        Ok(State(coords))
    }

    /// One-dimensional state `k`.
    pub fn one(k: u32) -> Result<Self, ModelError> {
        State::new(vec![k])
    }

    pub fn coords(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|x| = x_1 + ... + x_r`.
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }

    /// `x + e_i`.
    pub fn incremented(&self, i: usize) -> State {
        let mut c = self.0.clone();
        c[i] += 1;
        State(c)
    }

    /// `x - e_i`, or `None` when that leaves `E`.
    pub fn decremented(&self, i: usize) -> Option<State> {
        if self.0[i] <= 1 {
            return None;
        }
        let mut c = self.0.clone();
        c[i] -= 1;
        Some(State(c))
    }

    /// The minimal state `(1, ..., 1)`.
    pub fn is_unit(&self) -> bool {
        self.0.iter().all(|&c| c == 1)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc as u64
}

/// Number of compositions of `total` into `parts` positive integers.
fn compositions(total: u64, parts: u64) -> u64 {
    if parts == 0 {
        return u64::from(total == 0);
    }
    if total < parts {
        return 0;
    }
    binomial(total - 1, parts - 1)
}

/// The finite set `{x ∈ ℕ^r : |x| ≤ max_shell}` with a fixed bijection onto
/// `0..len()`.
///
/// Ordering is graded lexicographic: shells `|x| = r, r+1, ..., max_shell` in
/// increasing order, and inside a shell the coordinate tuples in ascending
/// lexicographic order. For `r = 1` this is simply `k ↦ k - 1`. The rank of a
/// state is computed combinatorially: shells below `s` hold `C(s-1, r)` states.
#[derive(Clone, Debug)]
pub struct Lattice {
    dim: usize,
    max_shell: u64,
    states: Vec<State>,
}

impl Lattice {
    pub fn new(dim: usize, max_shell: u64) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::InvalidState("lattice dimension must be >= 1".into()));
        }
        if max_shell < dim as u64 {
            return Err(ModelError::InvalidState(format!(
                "shell bound {max_shell} is below the minimal shell {dim}"
            )));
        }
        let count = binomial(max_shell, dim as u64);
        let mut states = Vec::with_capacity(count as usize);
        let mut buf = vec![0u32; dim];
        for shell in dim as u64..=max_shell {
            enumerate_shell(shell, 0, &mut buf, &mut states);
        }
        debug_assert_eq!(states.len() as u64, count);
        Ok(Lattice { dim, max_shell, states })
    }

    /// Number of states a lattice of this shape would hold, without building it.
    pub fn count(dim: usize, max_shell: u64) -> u64 {
        if max_shell < dim as u64 {
            0
        } else {
            binomial(max_shell, dim as u64)
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_shell(&self) -> u64 {
        self.max_shell
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &State {
        &self.states[index]
    }

    /// Inverse of [`Lattice::state`].
    pub fn index_of(&self, x: &State) -> Option<usize> {
        if x.dim() != self.dim {
            return None;
        }
        let shell = x.total();
        if shell > self.max_shell {
            return None;
        }
        let r = self.dim as u64;
        let mut rank = binomial(shell - 1, r);
        let mut rem = shell;
        let coords = x.coords();
        for (i, &c) in coords.iter().enumerate().take(self.dim - 1) {
            let parts_after = r - i as u64 - 1;
            for v in 1..u64::from(c) {
                rank += compositions(rem - v, parts_after);
            }
            rem -= u64::from(c);
        }
        Some(rank as usize)
    }

    /// Index range of the states with `|x| = shell`.
    pub fn shell_range(&self, shell: u64) -> std::ops::Range<usize> {
        let r = self.dim as u64;
        if shell < r || shell > self.max_shell {
            return 0..0;
        }
        let start = binomial(shell - 1, r) as usize;
        let end = binomial(shell, r) as usize;
        start..end
    }
}

fn enumerate_shell(rem: u64, pos: usize, buf: &mut [u32], out: &mut Vec<State>) {
    let r = buf.len();
    if pos == r - 1 {
        buf[pos] = rem as u32;
        out.push(State(buf.to_vec()));
        return;
    }
    let parts_after = (r - pos - 1) as u64;
    for v in 1..=rem - parts_after {
        buf[pos] = v as u32;
        enumerate_shell(rem - v, pos + 1, buf, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_coordinates() {
        assert!(State::new(vec![1, 0]).is_err());
        assert!(State::new(vec![]).is_err());
        assert_eq!(State::new(vec![2, 3]).unwrap().total(), 5);
    }

    #[test]
    fn one_dimensional_lattice_is_shifted_identity() {
        let lat = Lattice::new(1, 10).unwrap();
        assert_eq!(lat.len(), 10);
        for k in 1..=10u32 {
            let x = State::one(k).unwrap();
            assert_eq!(lat.index_of(&x), Some(k as usize - 1));
        }
        assert_eq!(lat.index_of(&State::one(11).unwrap()), None);
    }

    #[test]
    fn rank_matches_enumeration_order() {
        for dim in 1..=4 {
            let lat = Lattice::new(dim, 9).unwrap();
            assert_eq!(lat.len() as u64, Lattice::count(dim, 9));
            for (i, x) in lat.states().iter().enumerate() {
                assert_eq!(lat.index_of(x), Some(i), "dim {dim} state {x}");
            }
        }
    }

    #[test]
    fn shells_are_graded_and_lexicographic() {
        let lat = Lattice::new(2, 5).unwrap();
        let shell4: Vec<_> = lat.shell_range(4).map(|i| lat.state(i).coords().to_vec()).collect();
        assert_eq!(shell4, vec![vec![1, 3], vec![2, 2], vec![3, 1]]);
        let totals: Vec<u64> = lat.states().iter().map(State::total).collect();
        assert!(totals.windows(2).all(|w| w[0] <= w[1]));
    }
}
