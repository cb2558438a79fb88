//! ZF precoding, sensing beam synthesis, the rho-weighted ISAC transmit
//! covariance, beampattern evaluation, and SINR/rate computation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::UserChannel;
use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{farfield_steering, nearfield_focusing, ArrayGeometry, PolarPoint};

/// Whether beams are designed with the near-field or the far-field model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamDesign {
    Nfbf,
    Ffbf,
}

impl BeamDesign {
    pub fn label(&self) -> &'static str {
        match self {
            BeamDesign::Nfbf => "nfbf",
            BeamDesign::Ffbf => "ffbf",
        }
    }
}

/// Unit-norm precoding columns, users first; `power_allocation` in watts.
#[derive(Debug, Clone)]
pub struct Precoder {
    pub columns: Vec<DVector<Complex64>>,
    pub power_allocation: Vec<f64>,
    pub model_tag: BeamDesign,
}

/// Hermitian PSD transmit covariance with trace equal to the power budget.
#[derive(Debug, Clone)]
pub struct TransmitCovariance {
    matrix: DMatrix<Complex64>,
    total_power: f64,
}

impl TransmitCovariance {
    /// Validates Hermitian symmetry, positive semidefiniteness and the trace.
    pub fn new(matrix: DMatrix<Complex64>, total_power: f64) -> Result<Self> {
        let herm_gap = (&matrix - matrix.adjoint()).norm();
        if herm_gap > 1e-10 * (1.0 + matrix.norm()) {
            return Err(Error::InvalidArgument(format!(
                "covariance not Hermitian (gap {herm_gap:.3e})"
            )));
        }
        let eigs = matrix.symmetric_eigenvalues();
        let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 * (1.0 + total_power) {
            return Err(Error::InvalidArgument(format!(
                "covariance not PSD (min eigenvalue {min_eig:.3e})"
            )));
        }
        let trace: f64 = matrix.diagonal().iter().map(|z| z.re).sum();
        if (trace - total_power).abs() > 1e-9 * (1.0 + total_power) {
            return Err(Error::InvalidArgument(format!(
                "trace {trace} does not match total power {total_power}"
            )));
        }
        Ok(Self {
            matrix,
            total_power,
        })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }
}

/// Zero-forcing precoder from the right pseudo-inverse of the stacked
/// channel matrix; columns are normalized to unit norm.
pub fn zf_precoder(channels: &[UserChannel], tag: BeamDesign) -> Result<Precoder> {
    let k = channels.len();
    if k == 0 {
        return Err(Error::InvalidArgument("no user channels".into()));
    }
    let n = channels[0].vector.len();
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "{k} users exceed {n} transmit elements"
        )));
    }
    // rows are h_k^H
    let stack = DMatrix::from_fn(k, n, |r, c| channels[r].vector[c].conj());
    let sv = crate::channel::singular_values_squared(&stack);
    let max = sv.iter().cloned().fold(0.0f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || (max / min).sqrt() > 1e10 {
        return Err(Error::SingularChannels(singularity_detail(channels)));
    }
    let gram = &stack * stack.adjoint(); // K x K
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::SingularChannels(singularity_detail(channels)))?;
    let pinv = stack.adjoint() * inv; // N x K
    let columns = (0..k)
        .map(|j| {
            let col = pinv.column(j).into_owned();
            let norm = col.norm();
            col / Complex64::new(norm, 0.0)
        })
        .collect();
    Ok(Precoder {
        columns,
        power_allocation: vec![1.0 / k as f64; k],
        model_tag: tag,
    })
}

fn singularity_detail(channels: &[UserChannel]) -> String {
    let mut worst = (0usize, 0usize, 0.0f64);
    for i in 0..channels.len() {
        for j in (i + 1)..channels.len() {
            if let Ok(c) = crate::channel::channel_correlation(&channels[i], &channels[j]) {
                if c > worst.2 {
                    worst = (i, j, c);
                }
            }
        }
    }
    format!(
        "channel stack is rank deficient; users {} and {} have squared correlation {:.6}",
        worst.0, worst.1, worst.2
    )
}

/// Unit-norm sensing beam toward the target: matched near-field focusing for
/// NFBF, angle-only plane-wave steering for FFBF.
pub fn sensing_beam(
    geom: &ArrayGeometry,
    target: &PolarPoint,
    model: BeamDesign,
) -> Result<DVector<Complex64>> {
    let v = match model {
        BeamDesign::Nfbf => nearfield_focusing(geom, target, false)?,
        BeamDesign::Ffbf => farfield_steering(geom, target.angle())?,
    };
    Ok(v.entries)
}

/// ISAC transmit covariance: convex combination of the equal-power ZF
/// communication covariance and the rank-one sensing covariance,
/// `R = (1 - rho) R_comm + rho P s s^H`, with trace exactly P.
pub fn isac_covariance(
    prec: &Precoder,
    sense: &DVector<Complex64>,
    rho: f64,
    total_power: f64,
) -> Result<TransmitCovariance> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidArgument(format!("rho {rho} outside [0, 1]")));
    }
    let n = sense.len();
    let k = prec.columns.len();
    let mut r = DMatrix::<Complex64>::zeros(n, n);
    let per_user = (1.0 - rho) * total_power / k as f64;
    for w in &prec.columns {
        let wn = w / Complex64::new(w.norm(), 0.0);
        r += &wn * wn.adjoint() * Complex64::new(per_user, 0.0);
    }
    let sn = sense / Complex64::new(sense.norm(), 0.0);
    r += &sn * sn.adjoint() * Complex64::new(rho * total_power, 0.0);
    // renormalize the trace against accumulated rounding
    let trace: f64 = r.diagonal().iter().map(|z| z.re).sum();
    if trace > 0.0 {
        r *= Complex64::new(total_power / trace, 0.0);
    }
    TransmitCovariance::new(r, total_power)
}

/// Angle x range evaluation lattice.
#[derive(Debug, Clone)]
pub struct AngleRangeGrid {
    pub angles: Vec<f64>,
    pub ranges: Vec<f64>,
}

impl AngleRangeGrid {
    /// 1-degree angle steps over (-90, 90] and 60 log-spaced ranges 1-100 m.
    pub fn default_grid() -> Self {
        let angles = (0..180).map(|i| (-89.0 + i as f64).to_radians()).collect();
        let ranges = log_spaced(1.0, 100.0, 60);
        Self { angles, ranges }
    }
}

pub fn log_spaced(min: f64, max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![min];
    }
    let (lmin, lmax) = (min.ln(), max.ln());
    (0..count)
        .map(|i| (lmin + (lmax - lmin) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Normalized beampattern over the grid, peak at 1.
#[derive(Debug, Clone)]
pub struct BeampatternGrid {
    pub angles: Vec<f64>,
    pub ranges: Vec<f64>,
    /// power[(i, j)] for angle i, range j; max entry is 1.
    pub power: DMatrix<f64>,
}

/// Transmit power density `a_nf(theta, r)^H R a_nf(theta, r)` over the grid,
/// normalized to peak 1. Evaluation always uses the exact near-field
/// response regardless of how R was designed.
pub fn beampattern(
    cov: &TransmitCovariance,
    geom: &ArrayGeometry,
    grid: &AngleRangeGrid,
) -> Result<BeampatternGrid> {
    let factor = psd_factor(cov.matrix());
    let nr = grid.ranges.len();
    let values = exec::map_indices(grid.angles.len() * nr, |idx| {
        beampattern_point(&factor, geom, grid, idx)
    });
    beampattern_finish(grid, values)
}

/// Sequential evaluation path; identical output to [`beampattern`].
pub fn beampattern_serial(
    cov: &TransmitCovariance,
    geom: &ArrayGeometry,
    grid: &AngleRangeGrid,
) -> Result<BeampatternGrid> {
    let factor = psd_factor(cov.matrix());
    let nr = grid.ranges.len();
    let values = exec::map_indices_seq(grid.angles.len() * nr, |idx| {
        beampattern_point(&factor, geom, grid, idx)
    });
    beampattern_finish(grid, values)
}

fn beampattern_point(
    factor: &DMatrix<Complex64>,
    geom: &ArrayGeometry,
    grid: &AngleRangeGrid,
    idx: usize,
) -> Result<f64> {
    let nr = grid.ranges.len();
    let (i, j) = (idx / nr, idx % nr);
    let a = crate::geometry::point_response(geom, grid.angles[i], grid.ranges[j])?;
    Ok((factor.adjoint() * &a.entries).norm_squared())
}

fn beampattern_finish(grid: &AngleRangeGrid, values: Vec<Result<f64>>) -> Result<BeampatternGrid> {
    let na = grid.angles.len();
    let nr = grid.ranges.len();
    let mut power = DMatrix::zeros(na, nr);
    let mut peak = 0.0f64;
    for (idx, v) in values.into_iter().enumerate() {
        let v = v?;
        power[(idx / nr, idx % nr)] = v;
        peak = peak.max(v);
    }
    if peak > 0.0 {
        power /= peak;
    }
    Ok(BeampatternGrid {
        angles: grid.angles.clone(),
        ranges: grid.ranges.clone(),
        power,
    })
}

/// Low-rank factor B with R = B B^H, from the eigendecomposition.
fn psd_factor(r: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = nalgebra::SymmetricEigen::new(r.clone());
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > max * 1e-14)
        .collect();
    let n = r.nrows();
    let mut b = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let scale = Complex64::new(eig.eigenvalues[i].max(0.0).sqrt(), 0.0);
        b.set_column(c, &(eig.eigenvectors.column(i) * scale));
    }
    b
}

/// Per-user SINR and sum rate under the rho-weighted design:
/// `SINR_k = p_k |h_k^H w_k|^2 / (sum_j p_j |h_k^H w_j|^2 + rho P |h_k^H s|^2 + sigma^2)`
/// with `p_k = (1 - rho) P / K`, rate in bit/s/Hz.
pub fn sinr_and_rate(
    channels: &[UserChannel],
    prec: &Precoder,
    sense: &DVector<Complex64>,
    rho: f64,
    total_power: f64,
    noise_power: f64,
) -> Result<(Vec<f64>, f64)> {
    if !(noise_power > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise_power must be > 0, got {noise_power}"
        )));
    }
    if channels.len() != prec.columns.len() {
        return Err(Error::InvalidArgument(format!(
            "{} channels vs {} precoder columns",
            channels.len(),
            prec.columns.len()
        )));
    }
    let k = channels.len();
    let p_user = (1.0 - rho) * total_power / k as f64;
    let p_sense = rho * total_power;
    let mut sinrs = Vec::with_capacity(k);
    for (ki, h) in channels.iter().enumerate() {
        let mut interference = p_sense * h.vector.dotc(sense).norm_sqr();
        let mut signal = 0.0;
        for (j, w) in prec.columns.iter().enumerate() {
            let g = h.vector.dotc(w).norm_sqr();
            if j == ki {
                signal = p_user * g;
            } else {
                interference += p_user * g;
            }
        }
        sinrs.push(signal / (interference + noise_power));
    }
    let rate = sinrs.iter().map(|s| (1.0 + s).log2()).sum();
    Ok((sinrs, rate))
}
