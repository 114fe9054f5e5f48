//! Correlation structures for the utility noise.
//!
//! A [`CorrelationSpec`] fixes the correlation matrix of the noise vector.
//! Exact block rank is realised by copying one draw per block to every
//! member; every other correlated variant is realised as a Gaussian linear
//! factor `zeta = L g` with unit-norm rows, see [`make_sampler`].

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::choice::{InstanceSpec, NoiseFamily, ScoreVector};
use crate::error::{Error, Result};

/// Tolerance on the smallest eigenvalue for a matrix to count as PSD.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Default relative tolerance for [`numeric_rank`].
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-8;

/// Largest entry change the PSD repair may make before construction fails.
const MAX_REPAIR_SHIFT: f64 = 0.01;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Assignment of each arm to one of `r` nonempty blocks.
///
/// Block ids are `0..r`. Serialized as the per-arm assignment list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct BlockPartition {
    assignment: Vec<usize>,
    num_blocks: usize,
}

impl BlockPartition {
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        if assignment.is_empty() {
            return Err(Error::domain("partition must cover at least one arm"));
        }
        let num_blocks = assignment.iter().max().map_or(0, |&m| m + 1);
        let mut seen = vec![false; num_blocks];
        for &b in &assignment {
            seen[b] = true;
        }
        if let Some(empty) = seen.iter().position(|&s| !s) {
            return Err(Error::domain(format!("block {empty} has no members")));
        }
        Ok(Self {
            assignment,
            num_blocks,
        })
    }

    /// Builds a partition of `0..n` from explicit member lists.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut assignment = vec![usize::MAX; n];
        for (b, members) in blocks.iter().enumerate() {
            for &arm in members {
                if arm >= n {
                    return Err(Error::domain(format!("arm {arm} outside 0..{n}")));
                }
                if assignment[arm] != usize::MAX {
                    return Err(Error::domain(format!("arm {arm} assigned twice")));
                }
                assignment[arm] = b;
            }
        }
        if let Some(missing) = assignment.iter().position(|&b| b == usize::MAX) {
            return Err(Error::domain(format!("arm {missing} is not assigned")));
        }
        Self::new(assignment)
    }

    /// Every arm in its own block.
    pub fn singletons(n: usize) -> Self {
        Self {
            assignment: (0..n).collect(),
            num_blocks: n,
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn block_of(&self, arm: usize) -> usize {
        self.assignment[arm]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.num_blocks];
        for (arm, &b) in self.assignment.iter().enumerate() {
            blocks[b].push(arm);
        }
        blocks
    }
}

impl TryFrom<Vec<usize>> for BlockPartition {
    type Error = Error;

    fn try_from(value: Vec<usize>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<BlockPartition> for Vec<usize> {
    fn from(p: BlockPartition) -> Self {
        p.assignment
    }
}

/// Symmetric matrix with unit diagonal. Serialized row-major as nested rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CorrelationMatrix {
    data: DMatrix<f64>,
}

impl CorrelationMatrix {
    /// Validates symmetry, unit diagonal and positive semidefiniteness.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self::candidate(rows)?;
        let min_eig = m.min_eigenvalue();
        if min_eig < -PSD_TOLERANCE {
            return Err(Error::domain(format!(
                "correlation matrix is not PSD (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(m)
    }

    /// Checks shape, symmetry and unit diagonal but not definiteness.
    ///
    /// Used for matrices that are being diagnosed rather than sampled from.
    pub fn candidate(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::domain("empty correlation matrix"));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::domain(format!(
                "row {bad} does not have {n} entries"
            )));
        }
        let data = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_dmatrix(data)
    }

    pub(crate) fn from_dmatrix(data: DMatrix<f64>) -> Result<Self> {
        let n = data.nrows();
        for i in 0..n {
            if !data[(i, i)].is_finite() || (data[(i, i)] - 1.0).abs() > SYMMETRY_TOLERANCE {
                return Err(Error::domain(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..i {
                let (a, b) = (data[(i, j)], data[(j, i)]);
                if !a.is_finite() || (a - b).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::domain(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(Self { data })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.data[(i, j)]).collect())
            .collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.data.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOLERANCE
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &CorrelationMatrix) -> f64 {
        (&self.data - &other.data).amax()
    }
}

impl TryFrom<Vec<Vec<f64>>> for CorrelationMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<CorrelationMatrix> for Vec<Vec<f64>> {
    fn from(m: CorrelationMatrix) -> Self {
        m.rows()
    }
}

/// Correlation structure of the noise vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CorrelationRepr", into = "CorrelationRepr")]
pub enum CorrelationSpec {
    Independent,
    /// Identical noise within a block, independent across blocks.
    BlockRank(BlockPartition),
    /// Within-block correlation `1 - eta`, cross-block Gaussian mutual
    /// information `eta_tilde`. The matrix is derived from the other fields.
    NoisyBlockRank {
        partition: BlockPartition,
        eta_tilde: f64,
        eta: f64,
        matrix: CorrelationMatrix,
    },
    /// Rank-two construction: arm `i` loads on `(cos a_i, sin a_i)`.
    Planar {
        angles: Vec<f64>,
    },
    Explicit(CorrelationMatrix),
}

impl CorrelationSpec {
    pub fn noisy_block(partition: BlockPartition, eta_tilde: f64, eta: f64) -> Result<Self> {
        let matrix = build_noisy_block_matrix(&partition, eta_tilde, eta)?;
        Ok(CorrelationSpec::NoisyBlockRank {
            partition,
            eta_tilde,
            eta,
            matrix,
        })
    }

    pub fn planar(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::domain("planar spec needs at least one angle"));
        }
        if let Some(a) = angles.iter().find(|a| !a.is_finite()) {
            return Err(Error::domain(format!("non-finite planar angle {a}")));
        }
        Ok(CorrelationSpec::Planar { angles })
    }

    /// Number of arms the structure is defined on; `None` for independent
    /// noise, which fits any dimension.
    pub fn dim(&self) -> Option<usize> {
        match self {
            CorrelationSpec::Independent => None,
            CorrelationSpec::BlockRank(p) => Some(p.len()),
            CorrelationSpec::NoisyBlockRank { partition, .. } => Some(partition.len()),
            CorrelationSpec::Planar { angles } => Some(angles.len()),
            CorrelationSpec::Explicit(m) => Some(m.dim()),
        }
    }

    /// Whether the structure is realised by copying draws within blocks,
    /// which is valid for every noise family.
    pub fn is_copy_based(&self) -> bool {
        matches!(
            self,
            CorrelationSpec::Independent | CorrelationSpec::BlockRank(_)
        )
    }

    /// The correlation matrix on `n` arms.
    pub fn matrix(&self, n: usize) -> CorrelationMatrix {
        match self {
            CorrelationSpec::Independent => CorrelationMatrix::identity(n),
            CorrelationSpec::BlockRank(p) => build_block_matrix(p),
            CorrelationSpec::NoisyBlockRank { matrix, .. } | CorrelationSpec::Explicit(matrix) => {
                matrix.clone()
            }
            CorrelationSpec::Planar { angles } => {
                let v = planar_loadings(angles);
                CorrelationMatrix {
                    data: &v * v.transpose(),
                }
            }
        }
    }

    /// Block structure when one is declared.
    pub fn partition(&self) -> Option<&BlockPartition> {
        match self {
            CorrelationSpec::BlockRank(p) => Some(p),
            CorrelationSpec::NoisyBlockRank { partition, .. } => Some(partition),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "snake_case")]
enum CorrelationRepr {
    Independent,
    BlockRank {
        assignment: BlockPartition,
    },
    NoisyBlockRank {
        assignment: BlockPartition,
        eta_tilde: f64,
        eta: f64,
    },
    Planar {
        angles: Vec<f64>,
    },
    Explicit {
        matrix: CorrelationMatrix,
    },
}

impl TryFrom<CorrelationRepr> for CorrelationSpec {
    type Error = Error;

    fn try_from(repr: CorrelationRepr) -> Result<Self> {
        Ok(match repr {
            CorrelationRepr::Independent => CorrelationSpec::Independent,
            CorrelationRepr::BlockRank { assignment } => CorrelationSpec::BlockRank(assignment),
            CorrelationRepr::NoisyBlockRank {
                assignment,
                eta_tilde,
                eta,
            } => CorrelationSpec::noisy_block(assignment, eta_tilde, eta)?,
            CorrelationRepr::Planar { angles } => CorrelationSpec::planar(angles)?,
            CorrelationRepr::Explicit { matrix } => CorrelationSpec::Explicit(matrix),
        })
    }
}

impl From<CorrelationSpec> for CorrelationRepr {
    fn from(spec: CorrelationSpec) -> Self {
        match spec {
            CorrelationSpec::Independent => CorrelationRepr::Independent,
            CorrelationSpec::BlockRank(assignment) => CorrelationRepr::BlockRank { assignment },
            CorrelationSpec::NoisyBlockRank {
                partition,
                eta_tilde,
                eta,
                ..
            } => CorrelationRepr::NoisyBlockRank {
                assignment: partition,
                eta_tilde,
                eta,
            },
            CorrelationSpec::Planar { angles } => CorrelationRepr::Planar { angles },
            CorrelationSpec::Explicit(matrix) => CorrelationRepr::Explicit { matrix },
        }
    }
}

/// 1 within blocks, 0 across.
pub fn build_block_matrix(partition: &BlockPartition) -> CorrelationMatrix {
    let n = partition.len();
    CorrelationMatrix {
        data: DMatrix::from_fn(n, n, |i, j| {
            if partition.block_of(i) == partition.block_of(j) {
                1.0
            } else {
                0.0
            }
        }),
    }
}

/// Cross-block correlation whose Gaussian mutual information equals `eta_tilde`.
pub fn cross_block_correlation(eta_tilde: f64) -> f64 {
    (-(-2.0 * eta_tilde).exp_m1()).sqrt()
}

fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if !(0.0..1.0).contains(&v) {
        return Err(Error::domain(format!("{name} = {v} outside [0, 1)")));
    }
    Ok(())
}

/// Matrix of the `(r, eta_tilde, eta)` noisy block-rank model.
///
/// Within-block entries are exactly `1 - eta`; cross-block entries are the
/// correlation whose Gaussian mutual information is `eta_tilde`. When the
/// result is indefinite it is repaired by clipping eigenvalues at zero and
/// renormalising the diagonal; a repair that moves any entry by more than
/// 0.01 is rejected.
pub fn build_noisy_block_matrix(
    partition: &BlockPartition,
    eta_tilde: f64,
    eta: f64,
) -> Result<CorrelationMatrix> {
    check_unit_interval("eta", eta)?;
    check_unit_interval("eta_tilde", eta_tilde)?;
    let n = partition.len();
    let cross = cross_block_correlation(eta_tilde);
    let raw = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if partition.block_of(i) == partition.block_of(j) {
            1.0 - eta
        } else {
            cross
        }
    });
    let eig = SymmetricEigen::new(raw.clone());
    if eig.eigenvalues.min() >= -PSD_TOLERANCE {
        return CorrelationMatrix::from_dmatrix(raw);
    }

    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let psd = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let scale: Vec<f64> = (0..n).map(|i| psd[(i, i)].sqrt()).collect();
    let repaired = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            let v = psd[(i, j)] / (scale[i] * scale[j]);
            v.clamp(-1.0, 1.0)
        }
    });
    // restore exact symmetry lost to rounding
    let repaired = (&repaired + repaired.transpose()) * 0.5;
    let shift = (&repaired - &raw).amax();
    if !shift.is_finite() || shift > MAX_REPAIR_SHIFT {
        return Err(Error::Construction(format!(
            "eta = {eta}, eta_tilde = {eta_tilde} need a PSD repair moving entries by {shift:.4}"
        )));
    }
    let m = CorrelationMatrix::from_dmatrix(repaired)?;
    if !m.is_psd() {
        return Err(Error::Construction(
            "PSD repair did not produce a PSD matrix".into(),
        ));
    }
    Ok(m)
}

/// Mutual information in nats of a standard bivariate Gaussian pair with
/// correlation `rho`.
pub fn gaussian_mi(rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::domain(format!("|rho| = {} must be < 1", rho.abs())));
    }
    Ok(-0.5 * (-rho * rho).ln_1p())
}

/// Number of singular values above `tol` times the largest one.
pub fn numeric_rank(matrix: &CorrelationMatrix, tol: f64) -> usize {
    let sv = matrix.data.clone().singular_values();
    let largest = sv.max();
    if largest <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * largest).count()
}

/// Outcome of checking a matrix against the noisy block-rank conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoisyBlockReport {
    /// Largest shortfall of a within-block entry below `1 - eta`.
    pub within_violation: f64,
    /// Largest excess of a cross-block pairwise Gaussian MI over `eta_tilde`.
    pub cross_violation: f64,
    pub min_eigenvalue: f64,
    pub psd: bool,
    pub passed: bool,
}

pub fn validate_noisy_block(
    matrix: &CorrelationMatrix,
    partition: &BlockPartition,
    eta_tilde: f64,
    eta: f64,
) -> Result<NoisyBlockReport> {
    let n = matrix.dim();
    if partition.len() != n {
        return Err(Error::domain(format!(
            "partition covers {} arms but matrix is {n}x{n}",
            partition.len()
        )));
    }
    let mut within: f64 = 0.0;
    let mut cross: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = matrix.get(i, j);
            if partition.block_of(i) == partition.block_of(j) {
                within = within.max((1.0 - eta) - v);
            } else {
                let mi = gaussian_mi(v).unwrap_or(f64::INFINITY);
                cross = cross.max(mi - eta_tilde);
            }
        }
    }
    let min_eigenvalue = matrix.min_eigenvalue();
    let psd = min_eigenvalue >= -PSD_TOLERANCE;
    Ok(NoisyBlockReport {
        within_violation: within,
        cross_violation: cross,
        min_eigenvalue,
        psd,
        passed: within <= 1e-9 && cross <= 1e-9 && psd,
    })
}

/// Sparse linear factor: arm `i` draws `sum_c w_ic g_c` over latent iid
/// standard normals `g`. Every row has unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFactor {
    latent_dim: usize,
    /// Row `i` is `entries[offsets[i]..offsets[i + 1]]`.
    offsets: Vec<usize>,
    entries: Vec<(usize, f64)>,
}

impl LinearFactor {
    fn from_dense(l: &DMatrix<f64>) -> Result<Self> {
        let rows: Vec<Vec<(usize, f64)>> = (0..l.nrows())
            .map(|i| {
                (0..l.ncols())
                    .filter_map(|c| {
                        let w = l[(i, c)];
                        (w != 0.0).then_some((c, w))
                    })
                    .collect()
            })
            .collect();
        Self::from_rows(l.ncols(), rows)
    }

    fn from_rows(latent_dim: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        for row in &rows {
            offsets.push(offsets.last().copied().unwrap_or(0) + row.len());
        }
        let f = Self {
            latent_dim,
            offsets,
            entries: rows.into_iter().flatten().collect(),
        };
        for i in 0..f.num_arms() {
            let norm = f.row_norm(i);
            if (norm - 1.0).abs() > 1e-8 {
                return Err(Error::Construction(format!(
                    "factor row {i} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(f)
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn num_arms(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn row(&self, arm: usize) -> &[(usize, f64)] {
        &self.entries[self.offsets[arm]..self.offsets[arm + 1]]
    }

    pub fn row_norm(&self, arm: usize) -> f64 {
        self.row(arm).iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.num_arms(), self.latent_dim);
        for i in 0..self.num_arms() {
            for &(c, w) in self.row(i) {
                l[(i, c)] = w;
            }
        }
        l
    }
}

/// Sampling realisation of a correlation structure.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplerFactor {
    /// Identity factor: one independent draw per arm.
    Identity,
    /// One draw per block, copied to each member.
    BlockCopy(BlockPartition),
    /// Gaussian linear factor.
    LinearFactor(LinearFactor),
}

impl SamplerFactor {
    /// Noise covariance of arms `a` and `b` (unit noise variance).
    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        match self {
            SamplerFactor::Identity => f64::from(u8::from(a == b)),
            SamplerFactor::BlockCopy(p) => f64::from(u8::from(p.block_of(a) == p.block_of(b))),
            SamplerFactor::LinearFactor(f) => {
                let rb = f.row(b);
                f.row(a)
                    .iter()
                    .map(|&(c, w)| {
                        rb.iter()
                            .filter(|&&(d, _)| d == c)
                            .map(|&(_, v)| w * v)
                            .sum::<f64>()
                    })
                    .sum()
            }
        }
    }
}

/// Chooses how to draw noise with the requested correlation.
///
/// Linear factors are only meaningful for Gaussian noise; asking for one with
/// any other family is a configuration error.
pub fn make_sampler(spec: &CorrelationSpec, noise: &NoiseFamily) -> Result<SamplerFactor> {
    let factor = match spec {
        CorrelationSpec::Independent => return Ok(SamplerFactor::Identity),
        CorrelationSpec::BlockRank(p) => return Ok(SamplerFactor::BlockCopy(p.clone())),
        CorrelationSpec::Planar { angles } => LinearFactor::from_dense(&planar_loadings(angles))?,
        CorrelationSpec::NoisyBlockRank {
            partition,
            eta_tilde,
            eta,
            matrix,
        } => match structured_noisy_factor(partition, *eta_tilde, *eta, matrix) {
            Some(f) => f,
            None => eigen_factor(matrix)?,
        },
        CorrelationSpec::Explicit(matrix) => eigen_factor(matrix)?,
    };
    if *noise != NoiseFamily::StdGaussian {
        return Err(Error::config(format!(
            "{noise:?} noise cannot be correlated through a linear factor; \
             only independent and exact block-rank structures support it"
        )));
    }
    Ok(SamplerFactor::LinearFactor(factor))
}

/// `zeta_i = sqrt(rho) g_0 + sqrt(1 - eta - rho) g_block(i) + sqrt(eta) e_i`.
///
/// Reproduces the unrepaired noisy block matrix exactly with at most seven
/// latent draws per triple, instead of a dense `n`-dimensional draw.
fn structured_noisy_factor(
    partition: &BlockPartition,
    eta_tilde: f64,
    eta: f64,
    matrix: &CorrelationMatrix,
) -> Option<LinearFactor> {
    let cross = cross_block_correlation(eta_tilde);
    let shared = 1.0 - eta - cross;
    if shared < 0.0 {
        return None;
    }
    let n = partition.len();
    let r = partition.num_blocks();
    let rows = (0..n)
        .map(|i| {
            let mut row = Vec::with_capacity(3);
            if cross > 0.0 {
                row.push((0, cross.sqrt()));
            }
            if shared > 0.0 {
                row.push((1 + partition.block_of(i), shared.sqrt()));
            }
            if eta > 0.0 {
                row.push((1 + r + i, eta.sqrt()));
            }
            row
        })
        .collect();
    let factor = LinearFactor::from_rows(1 + r + n, rows).ok()?;
    let reproduced = factor.dense() * factor.dense().transpose();
    ((&reproduced - matrix.as_dmatrix()).amax() <= 1e-12).then_some(factor)
}

/// Factor from the eigendecomposition, clipping tiny negative eigenvalues and
/// dropping null directions.
fn eigen_factor(matrix: &CorrelationMatrix) -> Result<LinearFactor> {
    let n = matrix.dim();
    let eig = SymmetricEigen::new(matrix.as_dmatrix().clone());
    let largest = eig.eigenvalues.max().max(0.0);
    let keep: Vec<usize> = (0..n)
        .filter(|&c| eig.eigenvalues[c] > 1e-12 * largest)
        .collect();
    let mut l = DMatrix::zeros(n, keep.len());
    for (col, &c) in keep.iter().enumerate() {
        let s = eig.eigenvalues[c].max(0.0).sqrt();
        for i in 0..n {
            l[(i, col)] = eig.eigenvectors[(i, c)] * s;
        }
    }
    for i in 0..n {
        let norm = l.row(i).norm();
        if norm > 0.0 {
            l.row_mut(i).scale_mut(1.0 / norm);
        }
    }
    LinearFactor::from_dense(&l)
}

/// `n x 2` matrix of unit loadings `(cos a, sin a)`.
///
/// Components that differ from zero only by rounding are zeroed, so that
/// antipodal angles give exactly negated draws.
fn planar_loadings(angles: &[f64]) -> DMatrix<f64> {
    let clean = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
    DMatrix::from_fn(angles.len(), 2, |i, c| {
        let (s, co) = angles[i].sin_cos();
        if c == 0 {
            clean(co)
        } else {
            clean(s)
        }
    })
}

/// Angles of the planar rank-two construction on `k` arms, in `[0, 2pi)`.
///
/// First arm at 0, last at pi, the rest alternating between pi/4 (even
/// 1-based position) and -pi/4 (odd position).
pub fn planar_angles(k: usize) -> Result<Vec<f64>> {
    if k < 4 || !k.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "planar construction needs even k >= 4, got {k}"
        )));
    }
    Ok((1..=k)
        .map(|pos| {
            if pos == 1 {
                0.0
            } else if pos == k {
                PI
            } else if pos % 2 == 0 {
                FRAC_PI_4
            } else {
                TAU - FRAC_PI_4
            }
        })
        .collect())
}

/// Planar instance: scores `(mu + epsilon, mu, ..., mu)` with Gaussian noise
/// loading on the planar directions.
pub fn planar_instance(k: usize, mu: f64, epsilon: f64) -> Result<InstanceSpec> {
    if !(epsilon >= 0.0) {
        return Err(Error::domain(format!("epsilon = {epsilon} must be >= 0")));
    }
    let angles = planar_angles(k)?;
    let mut scores = vec![mu; k];
    scores[0] = mu + epsilon;
    InstanceSpec::new(
        ScoreVector::new(scores)?,
        NoiseFamily::StdGaussian,
        CorrelationSpec::planar(angles)?,
    )
}

/// Resolution of the grid angles are snapped to: 1/4096 of a turn.
const TURN_GRID: f64 = 4096.0;

/// Angle as a fraction of a full turn in `[0, 1)`, snapped onto the dyadic
/// grid when it lies within rounding distance of it so that sector widths of
/// grid directions are computed exactly.
fn to_turns(angle: f64) -> f64 {
    let t = (angle / TAU).rem_euclid(1.0);
    let scaled = t * TURN_GRID;
    let snapped = scaled.round();
    if (scaled - snapped).abs() <= 1e-9 {
        (snapped / TURN_GRID).rem_euclid(1.0)
    } else {
        t
    }
}

/// Win probabilities of equal-score arms under planar loadings.
///
/// Each arm wins on the arc of directions closer to its own angle than to any
/// other; arcs are bounded by midpoints between consecutive distinct angles.
/// Arms sharing a direction split its arc evenly.
pub fn sector_win_probs(angles: &[f64]) -> Vec<f64> {
    if angles.is_empty() {
        return Vec::new();
    }
    let mut order: Vec<(f64, usize)> = angles
        .iter()
        .enumerate()
        .map(|(i, &a)| (to_turns(a), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut directions: Vec<(f64, Vec<usize>)> = Vec::new();
    for (t, arm) in order {
        match directions.last_mut() {
            Some((last, members)) if t - *last <= 1e-12 => members.push(arm),
            _ => directions.push((t, vec![arm])),
        }
    }
    if directions.len() > 1 {
        let first = directions[0].0;
        let last = directions[directions.len() - 1].0;
        if first + 1.0 - last <= 1e-12 {
            let (_, wrapped) = directions.pop().expect("nonempty");
            directions[0].1.extend(wrapped);
        }
    }

    let mut probs = vec![0.0; angles.len()];
    let m = directions.len();
    for (idx, (t, members)) in directions.iter().enumerate() {
        let width = if m == 1 {
            1.0
        } else {
            let prev = directions[(idx + m - 1) % m].0;
            let next = directions[(idx + 1) % m].0;
            ((t - prev).rem_euclid(1.0) + (next - t).rem_euclid(1.0)) / 2.0
        };
        let share = width / members.len() as f64;
        for &arm in members {
            probs[arm] = share;
        }
    }
    probs
}
