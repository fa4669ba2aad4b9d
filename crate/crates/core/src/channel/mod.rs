//! Compound channel instances: generation, rank verification, and file I/O.

mod io;

use std::fmt;

use rand::seq::index;
use serde::Serialize;
use thiserror::Error;

use crate::matcore::{numerical_rank, ComplexMatrix, MatError, RankTolerance};
use crate::rng::{complex_gaussian_matrix, derive_rng, DOMAIN_CHANNEL, DOMAIN_SUBSET_SAMPLE};

pub use io::{channel_from_json, channel_to_json, load_channel, save_channel, ChannelParseError};

/// Stacked row counts up to this size are verified exhaustively.
pub const EXHAUSTIVE_ROW_LIMIT: usize = 24;
/// Number of row subsets drawn when the stack is too tall for enumeration.
pub const SAMPLED_SUBSETS: usize = 10_000;
/// Largest antenna or state count accepted anywhere.
pub const MAX_DIMENSION: usize = 4096;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid channel specification: {0}")]
    Spec(String),
    #[error("rank condition failed on all {attempts} generation attempts")]
    GenerationFailed { attempts: u32 },
    #[error(transparent)]
    Parse(#[from] ChannelParseError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Receiver index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum User {
    One,
    Two,
}

impl User {
    pub const BOTH: [User; 2] = [User::One, User::Two];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            User::One => 0,
            User::Two => 1,
        }
    }

    #[inline]
    pub fn other(self) -> User {
        match self {
            User::One => User::Two,
            User::Two => User::One,
        }
    }

    /// 1-based label as used in file keys.
    #[inline]
    pub fn number(self) -> usize {
        self.index() + 1
    }
}

impl fmt::Display for User {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// The transmitter's state set: `J_k` matrices `H_k^j` of size `N_k × M`
/// per receiver. Noise is unit variance per receive antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundChannelSet {
    m: usize,
    antennas: [usize; 2],
    states: [usize; 2],
    matrices: [Vec<ComplexMatrix>; 2],
}

impl CompoundChannelSet {
    /// Assembles a channel set, checking counts and shapes. `h1[j]` is
    /// `H_1^{j+1}`. The rank condition is not checked here; see
    /// [`verify_rank_condition`].
    pub fn new(
        m: usize,
        n1: usize,
        n2: usize,
        h1: Vec<ComplexMatrix>,
        h2: Vec<ComplexMatrix>,
    ) -> Result<Self, ChannelError> {
        check_counts(m, n1, n2, h1.len(), h2.len())?;
        for (user, (hs, n)) in [(&h1, n1), (&h2, n2)].into_iter().enumerate() {
            for (j, h) in hs.iter().enumerate() {
                if h.rows() != n || h.cols() != m {
                    return Err(ChannelError::Spec(format!(
                        "H_{}_{} is {}x{}, expected {n}x{m}",
                        user + 1,
                        j + 1,
                        h.rows(),
                        h.cols()
                    )));
                }
            }
        }
        Ok(Self { m, antennas: [n1, n2], states: [h1.len(), h2.len()], matrices: [h1, h2] })
    }

    /// Transmit antenna count `M`.
    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    /// Receive antenna count `N_k`.
    #[inline]
    pub fn antennas(&self, k: User) -> usize {
        self.antennas[k.index()]
    }

    /// State count `J_k`.
    #[inline]
    pub fn states(&self, k: User) -> usize {
        self.states[k.index()]
    }

    /// `H_k^j` with `j` 0-based.
    #[inline]
    pub fn h(&self, k: User, j: usize) -> &ComplexMatrix {
        &self.matrices[k.index()][j]
    }

    pub fn matrices(&self, k: User) -> &[ComplexMatrix] {
        &self.matrices[k.index()]
    }

    /// All states of user `k` stacked into a `(J_k·N_k) × M` matrix.
    pub fn stacked_user(&self, k: User) -> ComplexMatrix {
        ComplexMatrix::vstack(self.m, self.matrices(k))
    }

    /// Every row of every matrix, user 1 first, with its provenance.
    pub fn stacked_rows(&self) -> (ComplexMatrix, Vec<RowLabel>) {
        let mut labels = Vec::new();
        for k in User::BOTH {
            for j in 0..self.states(k) {
                for row in 0..self.antennas(k) {
                    labels.push(RowLabel { user: k, state: j + 1, row: row + 1 });
                }
            }
        }
        let all = ComplexMatrix::vstack(self.m, self.matrices[0].iter().chain(&self.matrices[1]));
        (all, labels)
    }

    /// Same channel with the two receivers exchanged.
    pub fn swap_users(&self) -> Self {
        Self {
            m: self.m,
            antennas: [self.antennas[1], self.antennas[0]],
            states: [self.states[1], self.states[0]],
            matrices: [self.matrices[1].clone(), self.matrices[0].clone()],
        }
    }
}

fn check_counts(m: usize, n1: usize, n2: usize, j1: usize, j2: usize) -> Result<(), ChannelError> {
    for (name, v) in [("M", m), ("N1", n1), ("N2", n2), ("J1", j1), ("J2", j2)] {
        if v == 0 || v > MAX_DIMENSION {
            return Err(ChannelError::Spec(format!("{name} = {v} must lie in 1..={MAX_DIMENSION}")));
        }
    }
    Ok(())
}

/// Identifies one row of the stacked channel (all indices 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RowLabel {
    pub user: User,
    pub state: usize,
    pub row: usize,
}

impl fmt::Display for RowLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "H_{}_{}[{}]", self.user, self.state, self.row)
    }
}

/// Parameters for drawing a random compound channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelGenSpec {
    pub m: usize,
    pub n1: usize,
    pub n2: usize,
    pub j1: usize,
    pub j2: usize,
    pub seed: u64,
    pub max_resamples: u32,
}

impl ChannelGenSpec {
    pub fn new(m: usize, n1: usize, n2: usize, j1: usize, j2: usize, seed: u64) -> Self {
        Self { m, n1, n2, j1, j2, seed, max_resamples: 8 }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        check_counts(self.m, self.n1, self.n2, self.j1, self.j2)?;
        if self.max_resamples == 0 {
            return Err(ChannelError::Spec("max_resamples must be at least 1".into()));
        }
        Ok(())
    }
}

/// Draws a channel with i.i.d. unit-variance circularly symmetric complex
/// Gaussian entries and checks the rank condition, retrying on sub-seed
/// `(seed, attempt)` until it holds or `max_resamples` attempts are spent.
pub fn generate_compound(spec: &ChannelGenSpec, tol: RankTolerance) -> Result<CompoundChannelSet, ChannelError> {
    spec.validate()?;
    for attempt in 0..spec.max_resamples {
        let mut rng = derive_rng(spec.seed, DOMAIN_CHANNEL, u64::from(attempt));
        let h1 = (0..spec.j1).map(|_| complex_gaussian_matrix(&mut rng, spec.n1, spec.m)).collect();
        let h2 = (0..spec.j2).map(|_| complex_gaussian_matrix(&mut rng, spec.n2, spec.m)).collect();
        let ch = CompoundChannelSet::new(spec.m, spec.n1, spec.n2, h1, h2)?;
        if verify_rank_condition(&ch, tol)?.passed {
            return Ok(ch);
        }
    }
    Err(ChannelError::GenerationFailed { attempts: spec.max_resamples })
}

/// Outcome of a rank-condition check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankConditionReport {
    pub passed: bool,
    /// Rows per checked subset: `min(M, total rows)`.
    pub subset_size: usize,
    pub total_rows: usize,
    pub exhaustive: bool,
    pub subsets_checked: u64,
    pub failures: Vec<Vec<RowLabel>>,
}

/// Checks that every choice of `M` stacked rows has numerical rank `M`.
///
/// When fewer than `M` rows exist in total, the single subset of all rows
/// must have full row rank. Stacks of up to [`EXHAUSTIVE_ROW_LIMIT`] rows are
/// enumerated exhaustively in lexicographic order; taller stacks are checked
/// on [`SAMPLED_SUBSETS`] subsets drawn uniformly from a fixed-key generator,
/// so the same channel always gets the same sample.
pub fn verify_rank_condition(ch: &CompoundChannelSet, tol: RankTolerance) -> Result<RankConditionReport, ChannelError> {
    let (rows, labels) = ch.stacked_rows();
    let total = rows.rows();
    let size = ch.m().min(total);
    let mut failures = Vec::new();
    let mut checked = 0u64;

    let mut check = |subset: &[usize]| -> Result<(), ChannelError> {
        checked += 1;
        if numerical_rank(&rows.select_rows(subset), tol)? < size {
            failures.push(subset.iter().map(|&i| labels[i]).collect());
        }
        Ok(())
    };

    let exhaustive = total <= EXHAUSTIVE_ROW_LIMIT;
    if exhaustive {
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            check(&subset)?;
            if !next_combination(&mut subset, total) {
                break;
            }
        }
    } else {
        let mut rng = derive_rng(0, DOMAIN_SUBSET_SAMPLE, 0);
        for _ in 0..SAMPLED_SUBSETS {
            let mut subset = index::sample(&mut rng, total, size).into_vec();
            subset.sort_unstable();
            check(&subset)?;
        }
    }

    Ok(RankConditionReport {
        passed: failures.is_empty(),
        subset_size: size,
        total_rows: total,
        exhaustive,
        subsets_checked: checked,
        failures,
    })
}

/// Advances a sorted k-subset of `0..n` to its lexicographic successor.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let Some(i) = (0..k).rev().find(|&i| subset[i] < n - k + i) else {
        return false;
    };
    subset[i] += 1;
    for t in (i + 1)..k {
        subset[t] = subset[t - 1] + 1;
    }
    true
}
