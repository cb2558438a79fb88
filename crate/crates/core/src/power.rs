//! Minimum transmit power under per-user SINR thresholds and a fixed
//! illumination power at the sensing target, with beam directions fixed by
//! the ZF/sensing design.
//!
//! The problem is a linear program in the per-stream powers: each SINR
//! constraint rewrites as
//! `p_k G[k][k] - gamma sum_{j != k} p_j G[k][j] >= gamma sigma^2`
//! and the target constraint is `sum_j p_j G[T][j] >= Gamma`. With K + 1
//! streams the optimum sits on a vertex, so exhaustive active-set
//! enumeration over all constraint subsets is exact.

use nalgebra::{DMatrix, DVector};

use crate::beamforming::{sensing_beam, zf_precoder, BeamDesign};
use crate::channel::UserChannel;
use crate::error::{Error, Result};
use crate::geometry::{nearfield_focusing, ArrayGeometry, PolarPoint};

/// Fixed-direction power allocation problem.
///
/// `gains[k][j] = |h_k^H w_j|^2` for users `k < K`; row `K` is the target
/// illumination row `|a_nf(target)^H w_j|^2`. Column `K` is the sensing
/// stream.
#[derive(Debug, Clone)]
pub struct PowerProblem {
    pub gains: DMatrix<f64>,
    pub sinr_threshold: f64,
    pub target_power_floor: f64,
    pub noise_power: f64,
}

impl PowerProblem {
    pub fn num_users(&self) -> usize {
        self.gains.nrows() - 1
    }

    fn validate(&self) -> Result<()> {
        if self.gains.nrows() != self.gains.ncols() {
            return Err(Error::InvalidArgument("gain matrix must be square".into()));
        }
        if self.gains.nrows() < 2 {
            return Err(Error::InvalidArgument(
                "need at least one user and the sensing stream".into(),
            ));
        }
        if self.gains.iter().any(|&g| g < 0.0 || !g.is_finite()) {
            return Err(Error::InvalidArgument("gains must be finite and >= 0".into()));
        }
        for k in 0..self.num_users() {
            if !(self.gains[(k, k)] > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "diagonal gain of user {k} must be > 0"
                )));
            }
        }
        if !(self.sinr_threshold > 0.0) || !(self.target_power_floor > 0.0) {
            return Err(Error::InvalidArgument(
                "sinr_threshold and target_power_floor must be > 0".into(),
            ));
        }
        if !(self.noise_power > 0.0) {
            return Err(Error::InvalidArgument("noise_power must be > 0".into()));
        }
        Ok(())
    }
}

/// Which constraint is tight at the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    UserSinr(usize),
    TargetPower,
    NonNegative(usize),
}

#[derive(Debug, Clone)]
pub struct PowerSolution {
    /// Watts per stream, users first then sensing.
    pub powers: Vec<f64>,
    pub total: f64,
    pub feasible: bool,
    pub binding: Vec<Constraint>,
    /// For infeasible problems: the SINR row that cannot be satisfied.
    pub certificate: Option<usize>,
}

/// Build the allocation problem for the paper scenario: ZF user beams and
/// the sensing beam under `model`, with all gains evaluated against the true
/// near-field channels and the true near-field target response.
pub fn build_power_problem(
    true_channels: &[UserChannel],
    design_channels: &[UserChannel],
    geom: &ArrayGeometry,
    target: &PolarPoint,
    model: BeamDesign,
    gamma: f64,
    target_power_floor: f64,
    noise_power: f64,
) -> Result<PowerProblem> {
    let prec = zf_precoder(design_channels, model)?;
    let sense = sensing_beam(geom, target, model)?;
    let k = true_channels.len();
    let a_target = nearfield_focusing(geom, target, false)?.entries;
    let mut gains = DMatrix::zeros(k + 1, k + 1);
    for (j, w) in prec.columns.iter().chain(std::iter::once(&sense)).enumerate() {
        for (i, h) in true_channels.iter().enumerate() {
            gains[(i, j)] = h.vector.dotc(w).norm_sqr();
        }
        gains[(k, j)] = a_target.dotc(w).norm_sqr();
    }
    let prob = PowerProblem {
        gains,
        sinr_threshold: gamma,
        target_power_floor,
        noise_power,
    };
    prob.validate()?;
    Ok(prob)
}

/// Minimize total power subject to the SINR and illumination constraints by
/// exhaustive active-set enumeration (exact for the small stream counts of
/// this problem).
pub fn min_power(prob: &PowerProblem) -> Result<PowerSolution> {
    prob.validate()?;
    let k = prob.num_users();
    let n = k + 1; // streams
    let gamma = prob.sinr_threshold;
    let sigma2 = prob.noise_power;

    // constraint rows a . p >= b, ordered: K SINR rows, target row, n sign rows
    let mut rows: Vec<(DVector<f64>, f64, Constraint)> = Vec::new();
    for u in 0..k {
        let mut a = DVector::zeros(n);
        for j in 0..n {
            a[j] = if j == u {
                prob.gains[(u, u)]
            } else {
                -gamma * prob.gains[(u, j)]
            };
        }
        rows.push((a, gamma * sigma2, Constraint::UserSinr(u)));
    }
    {
        let mut a = DVector::zeros(n);
        for j in 0..n {
            a[j] = prob.gains[(k, j)];
        }
        rows.push((a, prob.target_power_floor, Constraint::TargetPower));
    }
    for j in 0..n {
        let mut a = DVector::zeros(n);
        a[j] = 1.0;
        rows.push((a, 0.0, Constraint::NonNegative(j)));
    }

    let tol = 1e-9;
    let scale = 1.0 + sigma2 + prob.target_power_floor;
    let mut best: Option<(f64, DVector<f64>, Vec<usize>)> = None;
    for subset in subsets_of_size(rows.len(), n) {
        let mut a = DMatrix::zeros(n, n);
        let mut b = DVector::zeros(n);
        for (r, &ri) in subset.iter().enumerate() {
            a.set_row(r, &rows[ri].0.transpose());
            b[r] = rows[ri].1;
        }
        let Some(p) = a.lu().solve(&b) else { continue };
        if !p.iter().all(|v| v.is_finite()) {
            continue;
        }
        // feasibility of the full system
        let feasible = rows.iter().all(|(ar, br, _)| {
            ar.dot(&p) >= br - tol * scale.max(br.abs())
        });
        if !feasible {
            continue;
        }
        let total: f64 = p.iter().sum();
        if best.as_ref().map_or(true, |(bt, _, _)| total < bt - 1e-12) {
            best = Some((total, p, subset.clone()));
        }
    }

    match best {
        Some((total, p, _)) => {
            let binding = rows
                .iter()
                .filter(|(ar, br, _)| (ar.dot(&p) - br).abs() <= 1e-7 * scale.max(br.abs()))
                .map(|&(_, _, c)| c)
                .collect();
            Ok(PowerSolution {
                powers: p.iter().cloned().collect(),
                total,
                feasible: true,
                binding,
                certificate: None,
            })
        }
        None => Ok(PowerSolution {
            powers: vec![0.0; n],
            total: f64::INFINITY,
            feasible: false,
            binding: Vec::new(),
            certificate: Some(infeasibility_certificate(prob)),
        })
    }
}

/// The SINR row with the largest normalized interference load; when the
/// user-only subsystem has spectral radius >= 1 this is the row that cannot
/// be satisfied at any power.
fn infeasibility_certificate(prob: &PowerProblem) -> usize {
    let k = prob.num_users();
    let gamma = prob.sinr_threshold;
    let mut worst = (0usize, f64::NEG_INFINITY);
    for u in 0..k {
        let load: f64 = (0..k)
            .filter(|&j| j != u)
            .map(|j| gamma * prob.gains[(u, j)] / prob.gains[(u, u)])
            .sum();
        if load > worst.1 {
            worst = (u, load);
        }
    }
    worst.0
}

fn subsets_of_size(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    rec(0, m, k, &mut cur, &mut out);
    out
}

/// One [`min_power`] solve per SINR threshold (thresholds in dB).
pub fn power_sweep(
    base: &PowerProblem,
    gamma_list_db: &[f64],
) -> Result<Vec<(f64, PowerSolution)>> {
    let mut out = Vec::with_capacity(gamma_list_db.len());
    for &gdb in gamma_list_db {
        let mut prob = base.clone();
        prob.sinr_threshold = 10f64.powf(gdb / 10.0);
        out.push((gdb, min_power(&prob)?));
    }
    Ok(out)
}
