use rayon::prelude::*;

use super::SpectralError;
use crate::model::{AbsorbedChain, Lattice, State, Target};

/// Largest number of retained states a truncation may hold.
pub const STATE_BUDGET: u64 = 4_000_000;
/// Vectors shorter than this are multiplied serially.
const PAR_THRESHOLD: usize = 32_768;

/// Sparse sub-Markov generator of the chain restricted to
/// `{x : |x| ≤ N}`, with every jump leaving that set redirected to `∂`.
///
/// Rows are in [`Lattice`] order. Off-diagonal entries are stored twice, by
/// row and by column, so that `Lf` and `νL` are both gather operations with a
/// fixed summation order.
#[derive(Clone, Debug)]
pub struct TruncatedGenerator {
    lattice: Lattice,
    row_ptr: Vec<usize>,
    row_col: Vec<usize>,
    row_val: Vec<f64>,
    col_ptr: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    total: Vec<f64>,
    absorption: Vec<f64>,
    killed: Vec<f64>,
    lambda: f64,
}

/// Builds the truncation at shell `n` (capped at the chain's capacity).
///
/// Requires `n ≥ 2` in dimension one and `n ≥ r` in dimension `r > 1`.
pub fn truncate(chain: &dyn AbsorbedChain, n: u64) -> Result<TruncatedGenerator, SpectralError> {
    let r = chain.dim();
    let min = if r == 1 { 2 } else { r as u64 };
    if n < min {
        return Err(SpectralError::InvalidInput(format!("truncation level {n} is below {min}")));
    }
    let shell = chain.capacity().map_or(n, |c| n.min(c));
    let count = Lattice::count(r, shell);
    if count > STATE_BUDGET {
        return Err(SpectralError::Budget(format!(
            "{count} retained states exceed the budget of {STATE_BUDGET}"
        )));
    }
    let lattice = Lattice::new(r, shell)?;
    let rows: Vec<_> = lattice
        .states()
        .par_iter()
        .map(|x| chain.transitions_from(x))
        .collect::<Result<_, _>>()?;
    let len = lattice.len();
    let mut row_ptr = Vec::with_capacity(len + 1);
    let mut row_col = Vec::new();
    let mut row_val = Vec::new();
    let mut total = Vec::with_capacity(len);
    let mut absorption = Vec::with_capacity(len);
    let mut killed = Vec::with_capacity(len);
    row_ptr.push(0);
    for list in &rows {
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(list.transitions.len());
        let mut abs = 0.0;
        let mut kill = 0.0;
        for t in &list.transitions {
            match &t.target {
                Target::Absorbed => abs += t.rate,
                Target::State(y) => match lattice.index_of(y) {
                    Some(j) => match entries.iter_mut().find(|(c, _)| *c == j) {
                        Some(e) => e.1 += t.rate,
                        None => entries.push((j, t.rate)),
                    },
                    None => kill += t.rate,
                },
            }
        }
        entries.sort_by_key(|e| e.0);
        for (j, q) in entries {
            row_col.push(j);
            row_val.push(q);
        }
        row_ptr.push(row_col.len());
        total.push(list.total_rate);
        absorption.push(abs + kill);
        killed.push(kill);
    }
    let (col_ptr, col_row, col_val) = transpose(len, &row_ptr, &row_col, &row_val);
    let lambda = total.iter().copied().fold(0.0, f64::max);
    Ok(TruncatedGenerator {
        lattice,
        row_ptr,
        row_col,
        row_val,
        col_ptr,
        col_row,
        col_val,
        total,
        absorption,
        killed,
        lambda,
    })
}

fn transpose(len: usize, ptr: &[usize], idx: &[usize], val: &[f64]) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let mut counts = vec![0usize; len + 1];
    for &j in idx {
        counts[j + 1] += 1;
    }
    for j in 0..len {
        counts[j + 1] += counts[j];
    }
    let t_ptr = counts.clone();
    let mut next = counts;
    let mut t_idx = vec![0; idx.len()];
    let mut t_val = vec![0.0; idx.len()];
    for i in 0..len {
        for k in ptr[i]..ptr[i + 1] {
            let j = idx[k];
            t_idx[next[j]] = i;
            t_val[next[j]] = val[k];
            next[j] += 1;
        }
    }
    (t_ptr, t_idx, t_val)
}

impl TruncatedGenerator {
    pub fn len(&self) -> usize {
        self.total.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total.is_empty()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn states(&self) -> &[State] {
        self.lattice.states()
    }

    pub fn index_of(&self, x: &State) -> Option<usize> {
        self.lattice.index_of(x)
    }

    /// Largest retained shell.
    pub fn level(&self) -> u64 {
        self.lattice.max_shell()
    }

    /// Off-diagonal entries `(y, q_xy)` of row `i`, `y` ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.row_col[range.clone()].iter().copied().zip(self.row_val[range].iter().copied())
    }

    /// Off-diagonal entries `(x, q_xy)` of column `j`, `x` ascending.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.col_row[range.clone()].iter().copied().zip(self.col_val[range].iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.row_col.len()
    }

    /// Total jump rate of the model at state `i`.
    pub fn total_rate(&self, i: usize) -> f64 {
        self.total[i]
    }

    /// Rate from state `i` to `∂`: the model's absorption plus truncation killing.
    /// This is `-L𝟙_E`.
    pub fn absorption(&self) -> &[f64] {
        &self.absorption
    }

    /// The truncation-killing part of [`absorption`](Self::absorption).
    pub fn killed(&self) -> &[f64] {
        &self.killed
    }

    /// `Λ`, the largest total rate.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `L f` for `f` on the retained states, extended by zero to `∂`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.apply_into(f, &mut out);
        out
    }

    pub fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        let row = |(i, o): (usize, &mut f64)| {
            let mut acc = -self.total[i] * f[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.row_val[k] * f[self.row_col[k]];
            }
            *o = acc;
        };
        if self.len() >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(row);
        } else {
            out.iter_mut().enumerate().for_each(row);
        }
    }

    /// `ν L` for a row vector `ν` on the retained states.
    pub fn apply_left(&self, nu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.apply_left_into(nu, &mut out);
        out
    }

    pub fn apply_left_into(&self, nu: &[f64], out: &mut [f64]) {
        let col = |(j, o): (usize, &mut f64)| {
            let mut acc = -self.total[j] * nu[j];
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                acc += self.col_val[k] * nu[self.col_row[k]];
            }
            *o = acc;
        };
        if self.len() >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(col);
        } else {
            out.iter_mut().enumerate().for_each(col);
        }
    }

    /// The kernel `P = I + L/θ`, for `θ ≥ Λ`.
    pub(crate) fn kernel(&self, theta: f64) -> UniformKernel<'_> {
        let inv = 1.0 / theta;
        UniformKernel {
            gen: self,
            diag: self.total.iter().map(|t| 1.0 - t * inv).collect(),
            row_val: self.row_val.iter().map(|q| q * inv).collect(),
            col_val: self.col_val.iter().map(|q| q * inv).collect(),
        }
    }

    /// Whether every retained state reaches every other one.
    pub fn is_irreducible(&self) -> bool {
        let n = self.len();
        let reach = |adj: &dyn Fn(usize) -> Vec<usize>| {
            let mut seen = vec![false; n];
            let mut stack = vec![0];
            seen[0] = true;
            let mut count = 1;
            while let Some(i) = stack.pop() {
                for j in adj(i) {
                    if !seen[j] {
                        seen[j] = true;
                        count += 1;
                        stack.push(j);
                    }
                }
            }
            count == n
        };
        n > 0
            && reach(&|i| self.row(i).filter(|e| e.1 > 0.0).map(|e| e.0).collect())
            && reach(&|j| self.column(j).filter(|e| e.1 > 0.0).map(|e| e.0).collect())
    }

    /// Dense copy of `L` restricted to the retained states.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = -self.total[i];
            for (j, q) in self.row(i) {
                row[j] += q;
            }
        }
        m
    }
}

/// Uniformized kernel with precomputed entries.
pub(crate) struct UniformKernel<'a> {
    gen: &'a TruncatedGenerator,
    diag: Vec<f64>,
    row_val: Vec<f64>,
    col_val: Vec<f64>,
}

impl UniformKernel<'_> {
    /// `ν ↦ ν P` into `out`.
    pub(crate) fn step_left(&self, nu: &[f64], out: &mut [f64]) {
        let g = self.gen;
        let col = |(j, o): (usize, &mut f64)| {
            let range = g.col_ptr[j]..g.col_ptr[j + 1];
            let mut acc = self.diag[j] * nu[j];
            for (&v, &i) in self.col_val[range.clone()].iter().zip(&g.col_row[range]) {
                acc += v * nu[i];
            }
            *o = acc;
        };
        if g.len() >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(col);
        } else {
            out.iter_mut().enumerate().for_each(col);
        }
    }

    /// `f ↦ P f` into `out`.
    pub(crate) fn step_right(&self, f: &[f64], out: &mut [f64]) {
        let g = self.gen;
        let row = |(i, o): (usize, &mut f64)| {
            let range = g.row_ptr[i]..g.row_ptr[i + 1];
            let mut acc = self.diag[i] * f[i];
            for (&v, &j) in self.row_val[range.clone()].iter().zip(&g.row_col[range]) {
                acc += v * f[j];
            }
            *o = acc;
        };
        if g.len() >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(row);
        } else {
            out.iter_mut().enumerate().for_each(row);
        }
    }
}
