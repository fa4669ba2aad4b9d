//! Ergodic block-fading MISO broadcast channel with confidential messages.
//!
//! Each block draws a common state `H[t]` and per-user state indices
//! `A_k[t]`. The transmitter knows `H[t]` (hence all `J1 + J2` candidate
//! channel vectors) but not `A_k[t]`. Stream `k` is zero-forced against the
//! first `min(J_k', M − 1)` states of the other user and sent at a rate
//! matched to its own state-averaged quality; the unnulled states of the
//! other user leak, and the leakage is subtracted per block.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{generate_compound, ChannelError, ChannelGenSpec, CompoundChannelSet, User};
use crate::matcore::{null_space_basis, ComplexMatrix, MatError, RankTolerance};
use crate::region::{time_share, RateRegion, RegionError, Q};
use crate::rng::{derive_rng, derive_seed, DOMAIN_BLOCK, DOMAIN_FADING_STATE};
use crate::sdof::{estimate_sdof, GridError, SdofEstimate};

pub const DEFAULT_COMMON_STATES: usize = 4;
/// Direct gains at or below this magnitude count as degenerate.
pub const GAIN_FLOOR: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ErgodicError {
    #[error("invalid fading process: {0}")]
    Spec(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(
        "degenerate block in common state {common_state}: direct gain of user {user} \
         at state {state} is at most {GAIN_FLOOR:e} for every candidate beamformer"
    )]
    DegenerateBlock { common_state: usize, user: User, state: usize },
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// Number of user `k`'s states the other user's beamformer nulls.
pub fn nulled_states(m: usize, j_k: usize) -> usize {
    j_k.min(m.saturating_sub(1))
}

/// Unit-norm zero-forcing beamformers for one common state.
#[derive(Debug, Clone, PartialEq)]
pub struct ZfBeamformers {
    pub v1: Vec<Complex64>,
    pub v2: Vec<Complex64>,
}

impl ZfBeamformers {
    pub fn v(&self, k: User) -> &[Complex64] {
        match k {
            User::One => &self.v1,
            User::Two => &self.v2,
        }
    }
}

/// `hᴴ v` where the single-row state matrix stores `hᴴ`.
fn effective_gain(h: &ComplexMatrix, v: &[Complex64]) -> Complex64 {
    h.row(0).iter().zip(v).map(|(a, b)| a * b).sum()
}

fn normalized(v: Vec<Complex64>) -> Vec<Complex64> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Chooses `v_k ⟂ {h_k'^1 .. h_k'^n}` with `n = min(J_k', M − 1)`: the first
/// null-space basis column, or the normalized sum of all basis columns when
/// the first leaves some direct gain `|h_k^jᴴ v_k|` at or below the floor.
///
/// Returns `(user, state)` (1-based state) of a direct gain that stays
/// degenerate under both candidates.
pub fn zf_beamformers(
    ch: &CompoundChannelSet,
    tol: RankTolerance,
) -> Result<Result<ZfBeamformers, (User, usize)>, MatError> {
    let m = ch.m();
    let mut found = Vec::with_capacity(2);
    for k in User::BOTH {
        let o = k.other();
        let n = nulled_states(m, ch.states(o));
        let rows: Vec<&ComplexMatrix> = ch.matrices(o)[..n].iter().collect();
        let basis = null_space_basis(&ComplexMatrix::vstack(m, rows), tol)?;
        let first = basis.column(0);
        let sum = normalized((0..m).map(|r| (0..basis.cols()).map(|c| basis[(r, c)]).sum()).collect());
        let weak = |v: &[Complex64]| (0..ch.states(k)).find(|&j| effective_gain(ch.h(k, j), v).norm() <= GAIN_FLOOR);
        let chosen = match weak(&first) {
            None => first,
            Some(_) => match weak(&sum) {
                None => sum,
                Some(j) => return Ok(Err((k, j + 1))),
            },
        };
        found.push(chosen);
    }
    let v2 = found.pop().expect("two beamformers");
    let v1 = found.pop().expect("two beamformers");
    Ok(Ok(ZfBeamformers { v1, v2 }))
}

/// Effective gains `φ_{k,i}^j = h_k^jᴴ v_i` plus the nulling pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct ZfBlockGains {
    /// `phi[k][i][j]`: user `k`, stream `i`, state `j` (0-based).
    phi: [[Vec<Complex64>; 2]; 2],
    /// States `0..nulled[k]` of user `k` do not see stream `k'`.
    nulled: [usize; 2],
}

impl ZfBlockGains {
    pub fn new(phi: [[Vec<Complex64>; 2]; 2], nulled: [usize; 2]) -> Result<Self, ErgodicError> {
        for k in 0..2 {
            let states = phi[k][0].len();
            if states == 0 || phi[k][1].len() != states {
                return Err(ErgodicError::Spec(format!(
                    "user {} needs equal, nonzero gain counts for both streams",
                    k + 1
                )));
            }
            if nulled[k] > states {
                return Err(ErgodicError::Spec(format!("user {} has {states} states but {} nulled", k + 1, nulled[k])));
            }
        }
        Ok(Self { phi, nulled })
    }

    pub fn from_beamformers(ch: &CompoundChannelSet, bf: &ZfBeamformers) -> Self {
        let gains = |k: User, i: User| -> Vec<Complex64> {
            (0..ch.states(k)).map(|j| effective_gain(ch.h(k, j), bf.v(i))).collect()
        };
        let m = ch.m();
        Self {
            phi: [
                [gains(User::One, User::One), gains(User::One, User::Two)],
                [gains(User::Two, User::One), gains(User::Two, User::Two)],
            ],
            nulled: [nulled_states(m, ch.states(User::One)), nulled_states(m, ch.states(User::Two))],
        }
    }

    pub fn phi(&self, k: User, stream: User, j: usize) -> Complex64 {
        self.phi[k.index()][stream.index()][j]
    }

    pub fn states(&self, k: User) -> usize {
        self.phi[k.index()][0].len()
    }

    pub fn nulled(&self, k: User) -> usize {
        self.nulled[k.index()]
    }

    /// Largest `|φ|` over the gains the beamformers are meant to null.
    pub fn max_nulled_gain(&self) -> f64 {
        User::BOTH
            .into_iter()
            .flat_map(|k| (0..self.nulled(k)).map(move |j| self.phi(k, k.other(), j).norm()))
            .fold(0.0, f64::max)
    }
}

/// Per-user stream powers.
pub type StreamPowers = [f64; 2];

/// `(1/J_k) Σ_j log₂(1 + p_k|φ_{k,k}^j|² / (1 + p_k'|φ_{k,k'}^j|²))` with the
/// interference term present only for unnulled states.
pub fn tx_rate(g: &ZfBlockGains, k: User, p: StreamPowers) -> f64 {
    let (pk, po) = (p[k.index()], p[k.other().index()]);
    let states = g.states(k);
    let total: f64 = (0..states)
        .map(|j| {
            let signal = pk * g.phi(k, k, j).norm_sqr();
            let interference = if j < g.nulled(k) { 0.0 } else { po * g.phi(k, k.other(), j).norm_sqr() };
            (1.0 + signal / (1.0 + interference)).log2()
        })
        .sum();
    total / states as f64
}

/// `(1/J_k') Σ_{unnulled j} log₂(1 + p_k|φ_{k',k}^j|²)`.
pub fn leakage(g: &ZfBlockGains, k: User, p: StreamPowers) -> f64 {
    let o = k.other();
    let pk = p[k.index()];
    let states = g.states(o);
    let total: f64 = (g.nulled(o)..states).map(|j| (1.0 + pk * g.phi(o, k, j).norm_sqr()).log2()).sum();
    total / states as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockRateRecord {
    pub t: u64,
    pub tx_rate: [f64; 2],
    pub leakage: [f64; 2],
    pub secrecy_rate: [f64; 2],
}

impl BlockRateRecord {
    /// Leakage exceeded the transmission rate for at least one user.
    pub fn leak_violation(&self) -> bool {
        (0..2).any(|k| self.leakage[k] > self.tx_rate[k])
    }
}

pub fn block_secrecy_rates(g: &ZfBlockGains, p: StreamPowers, t: u64) -> BlockRateRecord {
    let tx = User::BOTH.map(|k| tx_rate(g, k, p));
    let leak = User::BOTH.map(|k| leakage(g, k, p));
    BlockRateRecord {
        t,
        tx_rate: tx,
        leakage: leak,
        secrecy_rate: [(tx[0] - leak[0]).max(0.0), (tx[1] - leak[1]).max(0.0)],
    }
}

/// One block's draw: the common state (0-based) and the user state indices
/// `A_k[t]` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockDraw {
    pub t: u64,
    pub common_state: usize,
    pub state: [usize; 2],
}

/// The common-state alphabet with its per-state channels, beamformers and
/// gains. Block draws are pure functions of `(seed, t)`.
#[derive(Debug, Clone)]
pub struct FadingProcess {
    m: usize,
    states: [usize; 2],
    seed: u64,
    channels: Vec<CompoundChannelSet>,
    beamformers: Vec<ZfBeamformers>,
    gains: Vec<ZfBlockGains>,
}

impl FadingProcess {
    pub fn new(
        m: usize,
        j1: usize,
        j2: usize,
        common_state_count: usize,
        seed: u64,
        tol: RankTolerance,
    ) -> Result<Self, ErgodicError> {
        if m < 2 {
            return Err(ErgodicError::Spec(format!("M = {m}: zero-forcing needs at least 2 antennas")));
        }
        if common_state_count == 0 {
            return Err(ErgodicError::Spec("common_state_count must be at least 1".into()));
        }
        let mut channels = Vec::with_capacity(common_state_count);
        let mut beamformers = Vec::with_capacity(common_state_count);
        let mut gains = Vec::with_capacity(common_state_count);
        for s in 0..common_state_count {
            let sub = derive_seed(seed, DOMAIN_FADING_STATE, s as u64);
            let ch = generate_compound(&ChannelGenSpec::new(m, 1, 1, j1, j2, sub), tol)?;
            let bf = zf_beamformers(&ch, tol)?.map_err(|(user, state)| ErgodicError::DegenerateBlock {
                common_state: s,
                user,
                state,
            })?;
            gains.push(ZfBlockGains::from_beamformers(&ch, &bf));
            beamformers.push(bf);
            channels.push(ch);
        }
        Ok(Self { m, states: [j1, j2], seed, channels, beamformers, gains })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn states(&self, k: User) -> usize {
        self.states[k.index()]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn common_state_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, s: usize) -> &CompoundChannelSet {
        &self.channels[s]
    }

    pub fn beamformers(&self, s: usize) -> &ZfBeamformers {
        &self.beamformers[s]
    }

    pub fn gains(&self, s: usize) -> &ZfBlockGains {
        &self.gains[s]
    }

    /// Draw for block `t` (1-based); uniform, independent marginals.
    pub fn sample_block(&self, t: u64) -> BlockDraw {
        let mut rng = derive_rng(self.seed, DOMAIN_BLOCK, t);
        let common_state = rng.random_range(0..self.channels.len());
        let a1 = rng.random_range(1..=self.states[0]);
        let a2 = rng.random_range(1..=self.states[1]);
        BlockDraw { t, common_state, state: [a1, a2] }
    }

    /// Secrecy accounting for block `t`.
    pub fn block_record(&self, t: u64, p: StreamPowers) -> BlockRateRecord {
        block_secrecy_rates(&self.gains[self.sample_block(t).common_state], p, t)
    }

    /// Per-common-state secrecy rates averaged uniformly: the exact
    /// expectation of a block's secrecy rate.
    pub fn analytic_rates(&self, p: StreamPowers) -> [f64; 2] {
        let n = self.gains.len() as f64;
        let mut acc = [0.0; 2];
        for g in &self.gains {
            let r = block_secrecy_rates(g, p, 0).secrecy_rate;
            acc[0] += r[0];
            acc[1] += r[1];
        }
        [acc[0] / n, acc[1] / n]
    }
}

/// Constant per-block power split of a total `P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerPolicy {
    Full1,
    Full2,
    Equal,
    /// Fraction of `P` given to user 1.
    Split(f64),
}

impl PowerPolicy {
    pub const DEFAULTS: [PowerPolicy; 3] = [PowerPolicy::Full1, PowerPolicy::Full2, PowerPolicy::Equal];

    pub fn powers(self, total: f64) -> StreamPowers {
        let frac = self.user1_fraction();
        [frac * total, (1.0 - frac) * total]
    }

    pub fn user1_fraction(self) -> f64 {
        match self {
            PowerPolicy::Full1 => 1.0,
            PowerPolicy::Full2 => 0.0,
            PowerPolicy::Equal => 0.5,
            PowerPolicy::Split(f) => f,
        }
    }
}

impl fmt::Display for PowerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerPolicy::Full1 => f.write_str("full1"),
            PowerPolicy::Full2 => f.write_str("full2"),
            PowerPolicy::Equal => f.write_str("equal"),
            PowerPolicy::Split(x) => write!(f, "split({x})"),
        }
    }
}

impl FromStr for PowerPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full1" => Ok(PowerPolicy::Full1),
            "full2" => Ok(PowerPolicy::Full2),
            "equal" => Ok(PowerPolicy::Equal),
            _ => {
                let inner = s.strip_prefix("split(").and_then(|r| r.strip_suffix(')')).ok_or_else(|| {
                    format!("unknown power policy {s:?}; expected full1, full2, equal or split(<fraction>)")
                })?;
                let frac: f64 = inner.trim().parse().map_err(|_| format!("bad split fraction {inner:?}"))?;
                if !(0.0..=1.0).contains(&frac) {
                    return Err(format!("split fraction {frac} outside [0, 1]"));
                }
                Ok(PowerPolicy::Split(frac))
            }
        }
    }
}

impl Serialize for PowerPolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PowerPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Block-averaged secrecy rates with their Monte Carlo spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AveragedRates {
    pub blocks: u64,
    pub mean: [f64; 2],
    /// Sample standard deviation over blocks divided by `√m`.
    pub std_error: [f64; 2],
    /// Fraction of blocks whose leakage exceeded the transmission rate for
    /// some user.
    pub leak_violation_freq: f64,
}

/// Averages blocks `1..=m`. Blocks are evaluated in parallel and summed in
/// ascending order, so the result matches a sequential run bit for bit.
pub fn averaged_secrecy_rates(fp: &FadingProcess, p: StreamPowers, m: u64) -> Result<AveragedRates, ErgodicError> {
    if m == 0 {
        return Err(ErgodicError::Spec("block count must be at least 1".into()));
    }
    let per_state: Vec<BlockRateRecord> = fp.gains.iter().map(|g| block_secrecy_rates(g, p, 0)).collect();
    let draws: Vec<usize> = (1..=m).into_par_iter().map(|t| fp.sample_block(t).common_state).collect();

    let mut sum = [0.0; 2];
    let mut violations = 0u64;
    for &s in &draws {
        let r = &per_state[s];
        sum[0] += r.secrecy_rate[0];
        sum[1] += r.secrecy_rate[1];
        violations += u64::from(r.leak_violation());
    }
    let n = m as f64;
    let mean = [sum[0] / n, sum[1] / n];
    let mut sq = [0.0; 2];
    for &s in &draws {
        for k in 0..2 {
            let d = per_state[s].secrecy_rate[k] - mean[k];
            sq[k] += d * d;
        }
    }
    let std_error = if m < 2 { [0.0; 2] } else { sq.map(|v| (v / (n - 1.0)).sqrt() / n.sqrt()) };
    Ok(AveragedRates { blocks: m, mean, std_error, leak_violation_freq: violations as f64 / n })
}

/// Slopes of the averaged secrecy rates against `log₂ P` under `policy`.
pub fn estimate_ergodic_sdof(
    fp: &FadingProcess,
    policy: PowerPolicy,
    m: u64,
    grid_db: &[f64],
) -> Result<[SdofEstimate; 2], ErgodicError> {
    let est = estimate_sdof::<ErgodicError, _>(grid_db, |total| {
        Ok(averaged_secrecy_rates(fp, policy.powers(total), m)?.mean.to_vec())
    })?;
    Ok([est[0], est[1]])
}

fn qi(v: usize) -> Q {
    Q::from_integer(v as i128)
}

/// High-SNR slopes the scheme attains under `policy`: transmission slope
/// `n_k/J_k`, plus `(J_k − n_k)/J_k` when the other stream is silent, minus
/// the leakage slope `(J_k' − n_k')/J_k'`, floored at zero.
pub fn policy_slope_target(m: usize, j1: usize, j2: usize, policy: PowerPolicy) -> [Q; 2] {
    let frac = policy.user1_fraction();
    let active = [frac > 0.0, frac < 1.0];
    let j = [j1, j2];
    let n = [nulled_states(m, j1), nulled_states(m, j2)];
    let mut out = [Q::from_integer(0); 2];
    for k in 0..2 {
        let o = 1 - k;
        if !active[k] {
            continue;
        }
        let mut tx = Q::new(n[k] as i128, j[k] as i128);
        if !active[o] {
            tx += Q::new((j[k] - n[k]) as i128, j[k] as i128);
        }
        let leak = Q::new((j[o] - n[o]) as i128, j[o] as i128);
        out[k] = (tx - leak).max(Q::from_integer(0));
    }
    out
}

/// `f(J1, J2) = (M−1)/J1 + (M−1)/J2 − 1 − (M−1)/(J1+J2)`, defined for
/// `J1, J2 ≥ M`; the flag is `f > 0`.
pub fn f_classifier(m: usize, j1: usize, j2: usize) -> Result<(Q, bool), ErgodicError> {
    if j1 < m || j2 < m || m == 0 {
        return Err(ErgodicError::Domain(format!(
            "f(J1, J2) needs J1 >= M and J2 >= M (M = {m}, J1 = {j1}, J2 = {j2})"
        )));
    }
    let d = qi(m - 1);
    let f = d / qi(j1) + d / qi(j2) - Q::from_integer(1) - d / qi(j1 + j2);
    Ok((f, f > Q::from_integer(0)))
}

/// `r_s = (M−1)/J1 + (M−1)/J2 − 1`.
pub fn symmetric_point(m: usize, j1: usize, j2: usize) -> Q {
    let d = qi(m.saturating_sub(1));
    d / qi(j1) + d / qi(j2) - Q::from_integer(1)
}

/// Achievable s.d.o.f. region over `(r1, r2)`.
pub fn ergodic_region(m: usize, j1: usize, j2: usize) -> Result<RateRegion<Q>, ErgodicError> {
    if m == 0 || j1 == 0 || j2 == 0 {
        return Err(ErgodicError::Domain("M, J1 and J2 must be at least 1".into()));
    }
    let (zero, one) = (Q::from_integer(0), Q::from_integer(1));
    let d = qi(m - 1);
    let points = match (j1 < m, j2 < m) {
        (true, true) => vec![vec![one, zero], vec![zero, one], vec![one, one]],
        (true, false) => {
            let a = d / qi(j2);
            vec![vec![zero, one], vec![a, zero], vec![a, a]]
        }
        (false, true) => {
            let a = d / qi(j1);
            vec![vec![one, zero], vec![zero, a], vec![a, a]]
        }
        (false, false) => {
            let mut pts = vec![vec![d / qi(j2), zero], vec![zero, d / qi(j1)]];
            if f_classifier(m, j1, j2)?.1 {
                let rs = symmetric_point(m, j1, j2);
                pts.push(vec![rs, rs]);
            }
            pts
        }
    };
    Ok(time_share(&points)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::Halfspace;

    const TOL: RankTolerance = RankTolerance::DEFAULT;

    fn q(n: i128, d: i128) -> Q {
        Q::new(n, d)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn singleton_alphabets_always_draw_state_one() {
        let fp = FadingProcess::new(2, 1, 1, 3, 7, TOL).unwrap();
        for t in 1..=500 {
            assert_eq!(fp.sample_block(t).state, [1, 1]);
        }
    }

    #[test]
    fn state_frequencies_match_uniform() {
        let fp = FadingProcess::new(3, 4, 3, DEFAULT_COMMON_STATES, 11, TOL).unwrap();
        let m = 100_000u64;
        let mut a1 = [0u64; 4];
        let mut h = [0u64; DEFAULT_COMMON_STATES];
        for t in 1..=m {
            let d = fp.sample_block(t);
            a1[d.state[0] - 1] += 1;
            h[d.common_state] += 1;
        }
        let check = |count: u64, p: f64| {
            let sigma = (m as f64 * p * (1.0 - p)).sqrt();
            assert!((count as f64 - m as f64 * p).abs() <= 3.0 * sigma, "{count} vs {p}");
        };
        a1.iter().for_each(|&n| check(n, 0.25));
        h.iter().for_each(|&n| check(n, 0.25));
    }

    #[test]
    fn draws_are_deterministic() {
        let a = FadingProcess::new(3, 2, 2, 4, 5, TOL).unwrap();
        let b = FadingProcess::new(3, 2, 2, 4, 5, TOL).unwrap();
        for t in [1, 2, 99, 1_000_000] {
            assert_eq!(a.sample_block(t), b.sample_block(t));
        }
        assert_eq!(a.gains(2), b.gains(2));
    }

    #[test]
    fn two_user_zero_forcing() {
        let fp = FadingProcess::new(2, 1, 1, 1, 3, TOL).unwrap();
        let g = fp.gains(0);
        assert!(g.phi(User::Two, User::One, 0).norm() < 1e-12);
        assert!(g.phi(User::One, User::Two, 0).norm() < 1e-12);
        assert!(g.phi(User::One, User::One, 0).norm() > GAIN_FLOOR);
        let bf = fp.beamformers(0);
        for v in [&bf.v1, &bf.v2] {
            assert!((v.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn large_alphabet_nulls_first_m_minus_one_states() {
        let fp = FadingProcess::new(3, 2, 4, 2, 9, TOL).unwrap();
        let g = fp.gains(0);
        assert_eq!(g.nulled(User::Two), 2);
        for j in 0..2 {
            assert!(g.phi(User::Two, User::One, j).norm() < 1e-12);
        }
        for j in 2..4 {
            assert!(g.phi(User::Two, User::One, j).norm() > 1e-6);
        }
    }

    #[test]
    fn nulled_gain_sweep() {
        let fp = FadingProcess::new(4, 5, 3, 1000, 2024, TOL).unwrap();
        for t in 1..=1000 {
            let s = fp.sample_block(t).common_state;
            assert!(fp.gains(s).max_nulled_gain() <= 1e-10, "block {t}");
        }
    }

    #[test]
    fn scalar_rate_examples() {
        let g = ZfBlockGains::new([[vec![c(1.0)], vec![c(0.0)]], [vec![c(0.0)], vec![c(1.0)]]], [1, 1]).unwrap();
        assert!((tx_rate(&g, User::One, [3.0, 3.0]) - 2.0).abs() < 1e-15);
        assert_eq!(tx_rate(&g, User::One, [0.0, 3.0]), 0.0);
        assert_eq!(leakage(&g, User::One, [3.0, 3.0]), 0.0);
        let r = block_secrecy_rates(&g, [3.0, 3.0], 1);
        assert_eq!(r.secrecy_rate, r.tx_rate);
        assert_eq!(r.secrecy_rate[0], r.secrecy_rate[1]);
    }

    #[test]
    fn interference_and_leakage_follow_nulling_pattern() {
        // User 2 has four states, the first two nulled against stream 1.
        let g = ZfBlockGains::new(
            [
                [vec![c(1.0), c(2.0)], vec![c(0.0), c(0.0)]],
                [vec![c(0.0), c(0.0), c(1.0), c(3.0)], vec![c(1.0), c(1.0), c(2.0), c(1.0)]],
            ],
            [2, 2],
        )
        .unwrap();
        let p = [4.0, 2.0];
        let leak = ((1.0f64 + 4.0).log2() + (1.0f64 + 36.0).log2()) / 4.0;
        assert!((leakage(&g, User::One, p) - leak).abs() < 1e-15);
        let tx2 = ((1.0f64 + 2.0).log2()
            + (1.0f64 + 2.0).log2()
            + (1.0f64 + 8.0 / 5.0).log2()
            + (1.0f64 + 2.0 / 37.0).log2())
            / 4.0;
        assert!((tx_rate(&g, User::Two, p) - tx2).abs() < 1e-15);
        assert_eq!(leakage(&g, User::Two, p), 0.0);
    }

    #[test]
    fn clamp_when_leakage_dominates() {
        let g =
            ZfBlockGains::new([[vec![c(0.01)], vec![c(0.0)]], [vec![c(0.0), c(10.0)], vec![c(1.0), c(1.0)]]], [1, 1])
                .unwrap();
        let r = block_secrecy_rates(&g, [100.0, 0.0], 4);
        assert!(r.leakage[0] > r.tx_rate[0]);
        assert_eq!(r.secrecy_rate[0], 0.0);
        assert!(r.leak_violation());
    }

    #[test]
    fn gain_shape_validation() {
        assert!(ZfBlockGains::new([[vec![], vec![]], [vec![c(1.0)], vec![c(1.0)]]], [0, 0]).is_err());
        assert!(ZfBlockGains::new([[vec![c(1.0)], vec![c(1.0)]], [vec![c(1.0)], vec![c(1.0)]]], [2, 0]).is_err());
    }

    #[test]
    fn averaging_edge_cases() {
        let fp = FadingProcess::new(3, 2, 2, 4, 1, TOL).unwrap();
        let one = averaged_secrecy_rates(&fp, [10.0, 10.0], 1).unwrap();
        assert_eq!(one.mean, fp.block_record(1, [10.0, 10.0]).secrecy_rate);
        let zero = averaged_secrecy_rates(&fp, [0.0, 0.0], 50).unwrap();
        assert_eq!(zero.mean, [0.0, 0.0]);
        assert!(averaged_secrecy_rates(&fp, [1.0, 1.0], 0).is_err());
    }

    #[test]
    fn parallel_average_matches_sequential_sum() {
        let fp = FadingProcess::new(4, 5, 5, 4, 77, TOL).unwrap();
        let p = [1e3, 1e3];
        let avg = averaged_secrecy_rates(&fp, p, 5000).unwrap();
        let mut s = [0.0; 2];
        for t in 1..=5000 {
            let r = fp.block_record(t, p);
            s[0] += r.secrecy_rate[0];
            s[1] += r.secrecy_rate[1];
        }
        assert_eq!(avg.mean, [s[0] / 5000.0, s[1] / 5000.0]);
    }

    #[test]
    fn monte_carlo_agrees_with_plug_in_expectation() {
        let fp = FadingProcess::new(3, 2, 2, DEFAULT_COMMON_STATES, 404, TOL).unwrap();
        let p = [5e5, 5e5];
        let avg = averaged_secrecy_rates(&fp, p, 100_000).unwrap();
        // Oracle: per-state parallel-channel rates from the raw gains.
        let mut expect = [0.0; 2];
        for s in 0..fp.common_state_count() {
            let ch = fp.channel(s);
            for k in User::BOTH {
                let v = fp.beamformers(s).v(k);
                let mean_rate: f64 =
                    (0..2).map(|j| (1.0 + p[k.index()] * effective_gain(ch.h(k, j), v).norm_sqr()).log2()).sum::<f64>()
                        / 2.0;
                expect[k.index()] += mean_rate / fp.common_state_count() as f64;
            }
        }
        for k in 0..2 {
            assert!((avg.mean[k] - expect[k]).abs() <= 3.0 * avg.std_error[k], "{avg:?} {expect:?}");
            assert!((fp.analytic_rates(p)[k] - expect[k]).abs() < 1e-12);
        }
        assert_eq!(avg.leak_violation_freq, 0.0);
    }

    #[test]
    fn fully_nulled_slopes_and_zero_leakage() {
        let fp = FadingProcess::new(3, 2, 2, DEFAULT_COMMON_STATES, 8, TOL).unwrap();
        let est = estimate_ergodic_sdof(&fp, PowerPolicy::Equal, 10_000, &crate::sdof::DEFAULT_SNR_GRID_DB).unwrap();
        assert!((est[0].slope - 1.0).abs() < 0.05 && (est[1].slope - 1.0).abs() < 0.05, "{est:?}");
        for t in 1..=200 {
            assert_eq!(fp.block_record(t, [1e8, 1e8]).leakage, [0.0, 0.0]);
        }
    }

    #[test]
    fn policy_targets() {
        assert_eq!(policy_slope_target(3, 2, 4, PowerPolicy::Full1), [q(1, 2), q(0, 1)]);
        assert_eq!(policy_slope_target(3, 2, 4, PowerPolicy::Full2), [q(0, 1), q(1, 1)]);
        assert_eq!(policy_slope_target(3, 2, 4, PowerPolicy::Equal), [q(1, 2), q(1, 2)]);
        assert_eq!(policy_slope_target(7, 8, 8, PowerPolicy::Equal), [q(1, 2), q(1, 2)]);
        assert_eq!(policy_slope_target(7, 8, 8, PowerPolicy::Full1), [q(3, 4), q(0, 1)]);
        assert_eq!(policy_slope_target(3, 2, 2, PowerPolicy::Split(0.3)), [q(1, 1), q(1, 1)]);
    }

    #[test]
    fn policy_parsing() {
        for p in [PowerPolicy::Full1, PowerPolicy::Full2, PowerPolicy::Equal, PowerPolicy::Split(0.25)] {
            assert_eq!(p.to_string().parse::<PowerPolicy>().unwrap(), p);
        }
        assert!("split(1.5)".parse::<PowerPolicy>().is_err());
        assert!("half".parse::<PowerPolicy>().is_err());
        assert_eq!(PowerPolicy::Split(0.25).powers(8.0), [2.0, 6.0]);
    }

    #[test]
    fn f_examples() {
        assert_eq!(f_classifier(7, 8, 8).unwrap(), (q(1, 8), true));
        assert_eq!(f_classifier(2, 4, 4).unwrap(), (q(-5, 8), false));
        assert_eq!(f_classifier(5, 6, 9).unwrap(), f_classifier(5, 9, 6).unwrap());
        assert!(f_classifier(3, 2, 4).is_err());
        assert_eq!(symmetric_point(2, 4, 4), q(-1, 2));
    }

    #[test]
    fn region_examples() {
        let square = ergodic_region(3, 2, 2).unwrap();
        let mut v = square.outer_vertices();
        v.sort();
        assert_eq!(v, vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)], vec![q(1, 1), q(1, 1)]]);

        let t3 = ergodic_region(3, 2, 4).unwrap();
        let hs = t3.inequalities();
        assert!(hs.contains(&Halfspace::upper(2, 0, q(1, 2))));
        assert!(hs.contains(&Halfspace::new(vec![q(1, 1), q(1, 1)], q(1, 1))));
        assert_eq!(hs.len(), 4);

        let mirror = ergodic_region(3, 4, 2).unwrap();
        assert!(mirror.inequalities().contains(&Halfspace::upper(2, 1, q(1, 2))));

        let t4 = ergodic_region(7, 8, 8).unwrap();
        let mut v = t4.outer_vertices();
        v.sort();
        assert_eq!(v, vec![vec![q(0, 1), q(3, 4)], vec![q(1, 2), q(1, 2)], vec![q(3, 4), q(0, 1)]]);

        let flat = ergodic_region(2, 4, 4).unwrap();
        let mut v = flat.outer_vertices();
        v.sort();
        assert_eq!(v, vec![vec![q(0, 1), q(1, 4)], vec![q(1, 4), q(0, 1)]]);
    }
}
