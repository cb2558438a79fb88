//! Point-to-point and multi-user channel synthesis plus the DoF and
//! correlation analyses.
//!
//! Multi-user channels follow the multipath model
//! `h = sqrt(N) * sum_l beta_l a(p_l)` with one LoS path of unit gain and
//! optional scatterer paths. The "far-field design" variant replaces every
//! path response by the plane-wave steering vector at the path's angle while
//! keeping the same complex gains; it is the mismatched model used for
//! precoding while the true near-field channel is used for evaluation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{
    farfield_steering, nearfield_focusing, ArrayGeometry, PolarPoint,
};

/// Propagation model used to assemble a channel from its paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelModel {
    FarField,
    NearField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    LineOfSight,
    Scatterer,
}

/// One propagation path: where it is and its complex gain.
#[derive(Debug, Clone)]
pub struct PathComponent {
    pub location: PolarPoint,
    pub gain: Complex64,
    pub kind: PathKind,
}

/// Multipath channel of a single-antenna user.
#[derive(Debug, Clone)]
pub struct UserChannel {
    pub vector: DVector<Complex64>,
    pub paths: Vec<PathComponent>,
    pub user_location: PolarPoint,
}

/// Point-to-point MIMO channel between two parallel broadside-aligned ULAs.
#[derive(Debug, Clone)]
pub struct MimoChannel {
    pub matrix: DMatrix<Complex64>,
    pub tx_geom: ArrayGeometry,
    pub rx_geom: ArrayGeometry,
    pub separation: f64,
}

/// LoS channel between two parallel ULAs separated by `separation` along
/// broadside: entry (m, n) carries the exact per-element-pair distance
/// `d_mn = sqrt(separation^2 + (delta_m_rx - delta_n_tx)^2)`.
pub fn p2p_los_channel(
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    separation: f64,
    amplitude_aware: bool,
) -> Result<MimoChannel> {
    if !(separation > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "separation must be > 0, got {separation}"
        )));
    }
    let k = 2.0 * std::f64::consts::PI / tx.wavelength();
    let tx_off = tx.element_offsets();
    let rx_off = rx.element_offsets();
    let matrix = DMatrix::from_fn(rx.num_elements(), tx.num_elements(), |m, n| {
        let d = separation.hypot(rx_off[m] - tx_off[n]);
        let amp = if amplitude_aware { separation / d } else { 1.0 };
        Complex64::from_polar(amp, -k * d)
    });
    Ok(MimoChannel {
        matrix,
        tx_geom: tx.clone(),
        rx_geom: rx.clone(),
        separation,
    })
}

/// Count of singular values within `threshold_db` of the largest (in power):
/// the effective spatial degrees of freedom of the channel.
pub fn effective_dof(channel: &MimoChannel, threshold_db: f64) -> Result<usize> {
    if !(threshold_db < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold_db must be < 0, got {threshold_db}"
        )));
    }
    let sq = singular_values_squared(&channel.matrix);
    let max = sq.iter().cloned().fold(0.0f64, f64::max);
    let floor = 10f64.powf(threshold_db / 10.0) * max;
    Ok(sq.iter().filter(|&&s| s >= floor).count().max(1))
}

/// Squared singular values via the Gram matrix of the smaller dimension.
pub(crate) fn singular_values_squared(m: &DMatrix<Complex64>) -> Vec<f64> {
    let gram = if m.ncols() <= m.nrows() {
        m.adjoint() * m
    } else {
        m * m.adjoint()
    };
    let eig = gram.symmetric_eigenvalues();
    eig.iter().map(|&v| v.max(0.0)).collect()
}

/// Assemble a user channel from explicit paths under the given model.
///
/// Rejects path angles closer than 0.5 degrees to each other; such
/// configurations are indistinguishable under the far-field model and make
/// the generated scenario ill-posed.
pub fn assemble_user_channel(
    geom: &ArrayGeometry,
    user_location: PolarPoint,
    paths: Vec<PathComponent>,
    model: ChannelModel,
) -> Result<UserChannel> {
    let min_sep = 0.5f64.to_radians();
    for (i, a) in paths.iter().enumerate() {
        for b in paths.iter().skip(i + 1) {
            if (a.location.angle() - b.location.angle()).abs() < min_sep {
                return Err(Error::InvalidLocation(format!(
                    "path angles {:.4} and {:.4} rad closer than 0.5 degrees",
                    a.location.angle(),
                    b.location.angle()
                )));
            }
        }
    }
    let n = geom.num_elements();
    let scale = Complex64::new((n as f64).sqrt(), 0.0);
    let mut vector = DVector::zeros(n);
    for path in &paths {
        let a = match model {
            ChannelModel::NearField => nearfield_focusing(geom, &path.location, false)?,
            ChannelModel::FarField => farfield_steering(geom, path.location.angle())?,
        };
        vector += a.entries * (path.gain * scale);
    }
    Ok(UserChannel {
        vector,
        paths,
        user_location,
    })
}

/// Multipath user channel with a unit-gain LoS path and seeded
/// complex-Gaussian scatterer gains at `scatterer_power` average power
/// relative to LoS.
pub fn user_channel<R: rand::Rng>(
    geom: &ArrayGeometry,
    user_location: PolarPoint,
    scatterer_locations: &[PolarPoint],
    scatterer_power: f64,
    model: ChannelModel,
    rng: &mut R,
) -> Result<UserChannel> {
    let mut paths = vec![PathComponent {
        location: user_location,
        gain: Complex64::new(1.0, 0.0),
        kind: PathKind::LineOfSight,
    }];
    let std = (scatterer_power / 2.0).sqrt();
    for loc in scatterer_locations {
        let re: f64 = rand_distr::StandardNormal.sample(rng);
        let im: f64 = rand_distr::StandardNormal.sample(rng);
        paths.push(PathComponent {
            location: *loc,
            gain: Complex64::new(std * re, std * im),
            kind: PathKind::Scatterer,
        });
    }
    assemble_user_channel(geom, user_location, paths, model)
}

use rand_distr::Distribution;

/// Squared correlation coefficient |h1^H h2|^2 / (|h1|^2 |h2|^2) in [0, 1].
pub fn channel_correlation(h1: &UserChannel, h2: &UserChannel) -> Result<f64> {
    if h1.vector.len() != h2.vector.len() {
        return Err(Error::InvalidArgument(format!(
            "channel lengths differ: {} vs {}",
            h1.vector.len(),
            h2.vector.len()
        )));
    }
    let n1 = h1.vector.norm_squared();
    let n2 = h2.vector.norm_squared();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::InvalidArgument("zero-norm channel".into()));
    }
    let inner = h1.vector.dotc(&h2.vector);
    Ok(inner.norm_sqr() / (n1 * n2))
}
