//! Constant-state compound MIMO broadcast channel with confidential messages.
//!
//! Confidential streams of user `k` are beamformed into the common null
//! space of every state of the other user; the common stream occupies the
//! orthogonal complement of both confidential subspaces. With Gaussian
//! superposition inputs the rates reduce to log-determinants.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::channel::{CompoundChannelSet, User};
use crate::matcore::{logdet2_hpd, null_space_basis, numerical_rank, ComplexMatrix, MatError, RankTolerance};
use crate::region::{Halfspace, RateRegion, RegionError, Q};
use crate::sdof::{estimate_sdof, GridError, SdofEstimate};

/// Relative orthogonality residual a certified beamformer must meet.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaussianError {
    #[error("{0}")]
    Infeasible(FeasibilityViolation),
    #[error("beamformer construction failed: {0}")]
    Construction(String),
    #[error("invalid power allocation: {0}")]
    Power(String),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// A requested confidential stream count above the nulling bound
/// `min(N_k, M − J_k'·N_k')`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityViolation {
    pub user: User,
    pub requested: usize,
    pub n: usize,
    pub m: usize,
    pub other_states: usize,
    pub other_antennas: usize,
    pub bound: usize,
}

impl fmt::Display for FeasibilityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.user;
        let o = k.other();
        write!(
            f,
            "infeasible r{k} = {}: bound min(N{k}, M - J{o}*N{o}) = min({}, {} - {}*{}) = {}",
            self.requested, self.n, self.m, self.other_states, self.other_antennas, self.bound
        )
    }
}

/// Largest `r_k` the null-space construction supports:
/// `min(N_k, max(0, M − J_k'·N_k'))`.
pub fn confidential_bound(m: usize, n_k: usize, j_other: usize, n_other: usize) -> usize {
    n_k.min(m.saturating_sub(j_other.saturating_mul(n_other)))
}

/// Checks `r1`, `r2` against the nulling bounds for `ch`'s dimensions.
pub fn check_feasibility(m: usize, n: [usize; 2], j: [usize; 2], r: [usize; 2]) -> Result<(), GaussianError> {
    for k in User::BOTH {
        let (i, o) = (k.index(), k.other().index());
        let bound = confidential_bound(m, n[i], j[o], n[o]);
        if r[i] > bound {
            return Err(GaussianError::Infeasible(FeasibilityViolation {
                user: k,
                requested: r[i],
                n: n[i],
                m,
                other_states: j[o],
                other_antennas: n[o],
                bound,
            }));
        }
    }
    Ok(())
}

/// Confidential beamformers `V1`, `V2` (orthonormal columns).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidentialBeamformers {
    pub v1: ComplexMatrix,
    pub v2: ComplexMatrix,
}

impl ConfidentialBeamformers {
    pub fn v(&self, k: User) -> &ComplexMatrix {
        match k {
            User::One => &self.v1,
            User::Two => &self.v2,
        }
    }
}

/// Full beamformer set `(V0, V1, V2)`; `K` is the column count of `V0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub v0: ComplexMatrix,
    pub v1: ComplexMatrix,
    pub v2: ComplexMatrix,
}

impl BeamformerSet {
    pub fn common_streams(&self) -> usize {
        self.v0.cols()
    }

    pub fn streams(&self, k: User) -> usize {
        self.v(k).cols()
    }

    pub fn v(&self, k: User) -> &ComplexMatrix {
        match k {
            User::One => &self.v1,
            User::Two => &self.v2,
        }
    }
}

/// Numerical evidence that a beamformer set meets the nulling and rank
/// conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    /// Largest `‖H_k'^l V_k‖_F / ‖H_k'^l‖_F` over users and states.
    pub max_leak_residual: f64,
    /// `‖V0ᴴ [V1 V2]‖_F`.
    pub common_cross_residual: f64,
    /// Largest `‖VᴴV − I‖_F` over the three beamformers.
    pub max_gram_error: f64,
    /// Whether `rank(H_k^j V_k) = r_k` held for every state.
    pub ranks_ok: bool,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.max_leak_residual <= ORTHOGONALITY_TOLERANCE
            && self.common_cross_residual <= ORTHOGONALITY_TOLERANCE
            && self.max_gram_error <= ORTHOGONALITY_TOLERANCE
            && self.ranks_ok
    }
}

fn gram_error(v: &ComplexMatrix) -> f64 {
    v.adjoint().matmul(v).sub(&ComplexMatrix::identity(v.cols())).frobenius_norm()
}

fn leak_residual(ch: &CompoundChannelSet, v: &ComplexMatrix, k: User) -> f64 {
    ch.matrices(k.other())
        .iter()
        .map(|h| {
            let scale = h.frobenius_norm();
            if scale == 0.0 {
                0.0
            } else {
                h.matmul(v).frobenius_norm() / scale
            }
        })
        .fold(0.0, f64::max)
}

fn ranks_hold(ch: &CompoundChannelSet, v: &ComplexMatrix, k: User, tol: RankTolerance) -> Result<bool, MatError> {
    for h in ch.matrices(k) {
        if numerical_rank(&h.matmul(v), tol)? != v.cols() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Builds `V_k` from the first `r_k` columns of the null space of user
/// `k'`'s stacked states, then certifies orthogonality and rank.
pub fn build_confidential_beamformers(
    ch: &CompoundChannelSet,
    r1: usize,
    r2: usize,
    tol: RankTolerance,
) -> Result<ConfidentialBeamformers, GaussianError> {
    let n = [ch.antennas(User::One), ch.antennas(User::Two)];
    let j = [ch.states(User::One), ch.states(User::Two)];
    check_feasibility(ch.m(), n, j, [r1, r2])?;

    let mut built = Vec::with_capacity(2);
    for (k, r) in [(User::One, r1), (User::Two, r2)] {
        let basis = null_space_basis(&ch.stacked_user(k.other()), tol)?;
        if basis.cols() < r {
            return Err(GaussianError::Construction(format!(
                "null space of user {}'s stacked states has dimension {}, need {r}",
                k.other(),
                basis.cols()
            )));
        }
        let v = basis.leading_columns(r);
        let residual = leak_residual(ch, &v, k);
        if residual > ORTHOGONALITY_TOLERANCE {
            return Err(GaussianError::Construction(format!(
                "V{k} leaks into user {} with relative residual {residual:.3e}",
                k.other()
            )));
        }
        if !ranks_hold(ch, &v, k, tol)? {
            return Err(GaussianError::Construction(format!("rank(H_{k}^j V{k}) < {r} for some state j")));
        }
        built.push(v);
    }
    let v2 = built.pop().expect("two beamformers");
    let v1 = built.pop().expect("two beamformers");
    Ok(ConfidentialBeamformers { v1, v2 })
}

/// Adds the common beamformer: an orthonormal basis of the orthogonal
/// complement of `span[V1 V2]`, so `K = M − rank[V1 V2]`.
pub fn build_common_beamformer(
    partial: ConfidentialBeamformers,
    tol: RankTolerance,
) -> Result<BeamformerSet, GaussianError> {
    let confidential = partial.v1.hstack(&partial.v2);
    let v0 = null_space_basis(&confidential.adjoint(), tol)?;
    let cross = v0.adjoint().matmul(&confidential).frobenius_norm();
    if cross > ORTHOGONALITY_TOLERANCE {
        return Err(GaussianError::Construction(format!("V0 is not orthogonal to [V1 V2] (residual {cross:.3e})")));
    }
    Ok(BeamformerSet { v0, v1: partial.v1, v2: partial.v2 })
}

/// Both construction steps.
pub fn build_beamformers(
    ch: &CompoundChannelSet,
    r1: usize,
    r2: usize,
    tol: RankTolerance,
) -> Result<BeamformerSet, GaussianError> {
    build_common_beamformer(build_confidential_beamformers(ch, r1, r2, tol)?, tol)
}

/// Re-derives every condition the construction promises.
pub fn certify(ch: &CompoundChannelSet, bf: &BeamformerSet, tol: RankTolerance) -> Result<Certificate, GaussianError> {
    let confidential = bf.v1.hstack(&bf.v2);
    Ok(Certificate {
        max_leak_residual: leak_residual(ch, &bf.v1, User::One).max(leak_residual(ch, &bf.v2, User::Two)),
        common_cross_residual: bf.v0.adjoint().matmul(&confidential).frobenius_norm(),
        max_gram_error: [&bf.v0, &bf.v1, &bf.v2].into_iter().map(gram_error).fold(0.0, f64::max),
        ranks_ok: ranks_hold(ch, &bf.v1, User::One, tol)? && ranks_hold(ch, &bf.v2, User::Two, tol)?,
    })
}

/// Per-stream powers for the common and confidential streams.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerAllocation {
    pub total: f64,
    pub p0: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(total: f64, p0: Vec<f64>, p1: Vec<f64>, p2: Vec<f64>) -> Result<Self, GaussianError> {
        let all = p0.iter().chain(&p1).chain(&p2);
        if !(total.is_finite() && total >= 0.0) {
            return Err(GaussianError::Power(format!("total power {total} must be finite and >= 0")));
        }
        if all.clone().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(GaussianError::Power("stream powers must be finite and >= 0".into()));
        }
        let sum: f64 = all.sum();
        if sum > total * (1.0 + 1e-12) {
            return Err(GaussianError::Power(format!("stream powers sum to {sum} > {total}")));
        }
        Ok(Self { total, p0, p1, p2 })
    }

    pub fn confidential(&self, k: User) -> &[f64] {
        match k {
            User::One => &self.p1,
            User::Two => &self.p2,
        }
    }

    fn check_shapes(&self, bf: &BeamformerSet) -> Result<(), GaussianError> {
        let got = (self.p0.len(), self.p1.len(), self.p2.len());
        let want = (bf.common_streams(), bf.streams(User::One), bf.streams(User::Two));
        if got != want {
            return Err(GaussianError::Power(format!("stream counts {got:?} do not match beamformers {want:?}")));
        }
        Ok(())
    }
}

/// Splits `P` evenly over all `K + r1 + r2` beamforming directions.
pub fn equal_power(bf: &BeamformerSet, total: f64) -> PowerAllocation {
    let k = bf.common_streams();
    let (r1, r2) = (bf.streams(User::One), bf.streams(User::Two));
    let streams = k + r1 + r2;
    let each = if streams == 0 { 0.0 } else { total / streams as f64 };
    PowerAllocation { total, p0: vec![each; k], p1: vec![each; r1], p2: vec![each; r2] }
}

fn sqrt_all(p: &[f64]) -> Vec<f64> {
    p.iter().map(|x| x.sqrt()).collect()
}

/// `log₂|I + H V diag(p) Vᴴ Hᴴ|` evaluated as `log₂|I + G Gᴴ|` with
/// `G = H V diag(√p)`.
fn logdet_through(h: &ComplexMatrix, v: &ComplexMatrix, p: &[f64]) -> Result<f64, MatError> {
    logdet2_hpd(&h.matmul(&v.scale_columns(&sqrt_all(p))).gram_plus_identity())
}

/// `I(U; Y_{k,j})`: common-message rate at user `k`, state `j` (0-based).
pub fn rate_common(
    ch: &CompoundChannelSet,
    bf: &BeamformerSet,
    pa: &PowerAllocation,
    k: User,
    j: usize,
) -> Result<f64, GaussianError> {
    pa.check_shapes(bf)?;
    let h = ch.h(k, j);
    let both = bf.v0.hstack(bf.v(k));
    let p: Vec<f64> = pa.p0.iter().chain(pa.confidential(k)).copied().collect();
    let with_common = logdet_through(h, &both, &p)?;
    let without = logdet_through(h, bf.v(k), pa.confidential(k))?;
    Ok((with_common - without).max(0.0))
}

/// `I(V_k; Y_{k,j} | U)`.
pub fn rate_confidential(
    ch: &CompoundChannelSet,
    bf: &BeamformerSet,
    pa: &PowerAllocation,
    k: User,
    j: usize,
) -> Result<f64, GaussianError> {
    pa.check_shapes(bf)?;
    Ok(logdet_through(ch.h(k, j), bf.v(k), pa.confidential(k))?)
}

/// Information the other user's state `l` (0-based) gathers about stream
/// `k` given the common stream and its own stream.
pub fn rate_leakage(
    ch: &CompoundChannelSet,
    bf: &BeamformerSet,
    pa: &PowerAllocation,
    k: User,
    l: usize,
) -> Result<f64, GaussianError> {
    pa.check_shapes(bf)?;
    Ok(logdet_through(ch.h(k.other(), l), bf.v(k), pa.confidential(k))?)
}

/// Rates in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateTriple {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
}

impl RateTriple {
    pub fn confidential(&self, k: User) -> f64 {
        match k {
            User::One => self.r1,
            User::Two => self.r2,
        }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.r0, self.r1, self.r2]
    }
}

/// Rates guaranteed across every state pair: `R0 = min_{k,j} I(U;Y_{k,j})`
/// and `R_k = [min_j I(V_k;Y_{k,j}|U) − max_l leakage(k,l)]₊`.
pub fn worst_case_rates(
    ch: &CompoundChannelSet,
    bf: &BeamformerSet,
    pa: &PowerAllocation,
) -> Result<RateTriple, GaussianError> {
    let mut r0 = f64::INFINITY;
    let mut rk = [0.0; 2];
    for k in User::BOTH {
        let mut served = f64::INFINITY;
        for j in 0..ch.states(k) {
            r0 = r0.min(rate_common(ch, bf, pa, k, j)?);
            served = served.min(rate_confidential(ch, bf, pa, k, j)?);
        }
        let leaked = max_leakage_of(ch, bf, pa, k)?;
        rk[k.index()] = (served - leaked).max(0.0);
    }
    Ok(RateTriple { r0, r1: rk[0], r2: rk[1] })
}

fn max_leakage_of(
    ch: &CompoundChannelSet,
    bf: &BeamformerSet,
    pa: &PowerAllocation,
    k: User,
) -> Result<f64, GaussianError> {
    let mut worst: f64 = 0.0;
    for l in 0..ch.states(k.other()) {
        worst = worst.max(rate_leakage(ch, bf, pa, k, l)?);
    }
    Ok(worst)
}

/// Largest leakage over both users and all states.
pub fn max_leakage(ch: &CompoundChannelSet, bf: &BeamformerSet, pa: &PowerAllocation) -> Result<f64, GaussianError> {
    Ok(max_leakage_of(ch, bf, pa, User::One)?.max(max_leakage_of(ch, bf, pa, User::Two)?))
}

/// Slopes of `(R0, R1, R2)` against `log₂ P` under equal power.
pub fn estimate_rates_sdof(
    ch: &CompoundChannelSet,
    bf: &BeamformerSet,
    grid_db: &[f64],
) -> Result<[SdofEstimate; 3], GaussianError> {
    let est =
        estimate_sdof::<GaussianError, _>(grid_db, |p| Ok(worst_case_rates(ch, bf, &equal_power(bf, p))?.to_vec()))?;
    Ok([est[0], est[1], est[2]])
}

/// An exact `(r0, r1, r2)` d.o.f. tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofPoint {
    pub r0: Q,
    pub r1: Q,
    pub r2: Q,
}

impl DofPoint {
    pub fn to_vec(self) -> Vec<Q> {
        vec![self.r0, self.r1, self.r2]
    }

    pub fn to_f64(self) -> [f64; 3] {
        let f = |q: Q| *q.numer() as f64 / *q.denom() as f64;
        [f(self.r0), f(self.r1), f(self.r2)]
    }
}

/// Slopes the scheme attains with certified beamformers and equal power:
/// `r_k` per confidential message and `min_k(min(N_k, M) − r_k)` for the
/// common message.
pub fn scheme_dof(m: usize, n: [usize; 2], r: [usize; 2]) -> DofPoint {
    let r0 = (0..2).map(|i| n[i].min(m).saturating_sub(r[i])).min().unwrap_or(0);
    DofPoint { r0: Q::from_integer(r0 as i128), r1: Q::from_integer(r[0] as i128), r2: Q::from_integer(r[1] as i128) }
}

/// Achievable s.d.o.f. region over `(r0, r1, r2)`.
///
/// * `J1N1 < M`, `J2N2 < M`: `r_k ≤ min(N_k, M − J_k'N_k')`, `r0 + r_k ≤ N_k`.
/// * exactly one product `≥ M`: that user's opponent gets no confidential
///   d.o.f. (e.g. `r1 = 0` when `J2N2 ≥ M`), the other keeps its bound,
///   and `r0 ≤ min(N_k, N_k' − r_k')`.
/// * both `≥ M`: common message only, `r0 ≤ min(M, N1, N2)`.
pub fn constant_state_region(
    m: usize,
    n1: usize,
    n2: usize,
    j1: usize,
    j2: usize,
) -> Result<RateRegion<Q>, GaussianError> {
    let zi = |v: usize| Q::from_integer(v as i128);
    let bound1 = confidential_bound(m, n1, j2, n2);
    let bound2 = confidential_bound(m, n2, j1, n1);
    let open1 = j1.saturating_mul(n1) < m;
    let open2 = j2.saturating_mul(n2) < m;
    let (one, zero) = (Q::from_integer(1), Q::from_integer(0));
    let sum = |k: usize| {
        let mut normal = vec![one, zero, zero];
        normal[k] = one;
        normal
    };

    let hs = match (open1, open2) {
        (true, true) => vec![
            Halfspace::upper(3, 1, zi(bound1)),
            Halfspace::upper(3, 2, zi(bound2)),
            Halfspace::new(sum(1), zi(n1)),
            Halfspace::new(sum(2), zi(n2)),
        ],
        (true, false) => vec![
            Halfspace::upper(3, 1, zero),
            Halfspace::upper(3, 2, zi(bound2)),
            Halfspace::upper(3, 0, zi(n1)),
            Halfspace::new(sum(2), zi(n2)),
        ],
        (false, true) => vec![
            Halfspace::upper(3, 2, zero),
            Halfspace::upper(3, 1, zi(bound1)),
            Halfspace::upper(3, 0, zi(n2)),
            Halfspace::new(sum(1), zi(n1)),
        ],
        (false, false) => vec![
            Halfspace::upper(3, 1, zero),
            Halfspace::upper(3, 2, zero),
            Halfspace::upper(3, 0, zi(m.min(n1).min(n2))),
        ],
    };
    Ok(RateRegion::from_halfspaces(3, hs, true)?)
}
