//! Fisher information / Cramer-Rao bounds for joint angle-range estimation
//! of a point target, analytic response derivatives, and 2D-MUSIC
//! localization over a polar angle-range grid.

use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64;

use crate::beamforming::TransmitCovariance;
use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{
    nearfield_focusing, point_response, rayleigh_distance, ArrayGeometry, PolarPoint,
};

/// Monostatic echo model: a single point target observed through the
/// transmit covariance over `snapshots` snapshots.
#[derive(Debug, Clone)]
pub struct EchoModel {
    pub target: PolarPoint,
    pub reflection_gain: Complex64,
    pub snapshots: usize,
    pub noise_power: f64,
    pub tx_covariance: TransmitCovariance,
    pub tx_geom: ArrayGeometry,
    pub rx_geom: ArrayGeometry,
}

/// 4x4 Fisher information over (theta, r, Re beta, Im beta) and the derived
/// root Cramer-Rao bounds.
#[derive(Debug, Clone)]
pub struct FimResult {
    pub fim: Matrix4<f64>,
    pub rcrb_angle: f64,
    pub rcrb_range: f64,
}

/// Analytic derivatives of the phase-only focusing vector with respect to
/// the target angle and range.
///
/// The phase of entry n is -2 pi (r_n - r) / lambda with
/// `dr_n/dtheta = -r delta_n cos(theta) / r_n` and
/// `dr_n/dr = (r - delta_n sin(theta)) / r_n - 1` (the -1 comes from the
/// center-reference term and appears only in the range derivative).
pub fn focusing_derivatives(
    geom: &ArrayGeometry,
    p: &PolarPoint,
) -> Result<(DVector<Complex64>, DVector<Complex64>)> {
    let a = nearfield_focusing(geom, p, false)?;
    let k = 2.0 * std::f64::consts::PI / geom.wavelength();
    let (sin_t, cos_t) = p.angle().sin_cos();
    let r = p.range();
    let n = geom.num_elements();
    let mut da_dtheta = DVector::zeros(n);
    let mut da_dr = DVector::zeros(n);
    for i in 0..n {
        let delta = geom.element_offset(i);
        let rn = (r - delta * sin_t).hypot(delta * cos_t);
        let drn_dtheta = -r * delta * cos_t / rn;
        let drn_dr = (r - delta * sin_t) / rn - 1.0;
        // d/dx exp(-j k (r_n - r)) = -j k (dr_n/dx) * entry
        da_dtheta[i] = a.entries[i] * Complex64::new(0.0, -k * drn_dtheta);
        da_dr[i] = a.entries[i] * Complex64::new(0.0, -k * drn_dr);
    }
    Ok((da_dtheta, da_dr))
}

/// Deterministic (known-waveform) Fisher information for the echo
/// `Y = beta a_rx a_tx^H X + noise` with sample covariance `X X^H / L = R`:
/// `F_ij = (2 L / sigma^2) Re tr(D_i^H D_j R)` for `D_i = dG/dp_i`,
/// `G = beta a_rx a_tx^H`. The adjoint on the transmit response keeps the
/// delivered power at the target equal to `a_tx^H R a_tx`, the same
/// illumination metric the beampattern and power-control modules use.
pub fn fim(model: &EchoModel) -> Result<FimResult> {
    if model.snapshots < 1 {
        return Err(Error::InvalidArgument("snapshots must be >= 1".into()));
    }
    if !(model.noise_power > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise_power must be > 0, got {}",
            model.noise_power
        )));
    }
    let beta = model.reflection_gain;
    let a_rx = nearfield_focusing(&model.rx_geom, &model.target, false)?.entries;
    let a_tx = nearfield_focusing(&model.tx_geom, &model.target, false)?.entries;
    let (drx_dtheta, drx_dr) = focusing_derivatives(&model.rx_geom, &model.target)?;
    let (dtx_dtheta, dtx_dr) = focusing_derivatives(&model.tx_geom, &model.target)?;

    let outer = |u: &DVector<Complex64>, v: &DVector<Complex64>| u * v.adjoint();
    let d_theta = (outer(&drx_dtheta, &a_tx) + outer(&a_rx, &dtx_dtheta)) * beta;
    let d_range = (outer(&drx_dr, &a_tx) + outer(&a_rx, &dtx_dr)) * beta;
    let d_re = outer(&a_rx, &a_tx);
    let d_im = &d_re * Complex64::new(0.0, 1.0);
    let derivs = [&d_theta, &d_range, &d_re, &d_im];

    let scale = 2.0 * model.snapshots as f64 / model.noise_power;
    let r = model.tx_covariance.matrix();
    let mut f = Matrix4::zeros();
    for i in 0..4 {
        for j in i..4 {
            let prod = (derivs[i].adjoint() * derivs[j] * r).trace();
            f[(i, j)] = scale * prod.re;
            f[(j, i)] = f[(i, j)];
        }
    }

    let eigs = f.symmetric_eigenvalues();
    let max_eig = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_eig > 0.0) || max_eig / min_eig > 1e12 {
        return Err(Error::Unidentifiable(format!(
            "Fisher information matrix is singular (eigenvalue spread {min_eig:.3e}..{max_eig:.3e})"
        )));
    }
    let chol = nalgebra::Cholesky::new(f).ok_or_else(|| {
        Error::Unidentifiable("Fisher information matrix is not positive definite".into())
    })?;
    let inv = chol.inverse();
    let var_angle = inv[(0, 0)];
    let var_range = inv[(1, 1)];
    if !(var_angle.is_finite() && var_range.is_finite()) || var_angle < 0.0 || var_range < 0.0 {
        return Err(Error::Unidentifiable(
            "Fisher information inversion produced invalid variances".into(),
        ));
    }
    Ok(FimResult {
        fim: f,
        rcrb_angle: var_angle.sqrt(),
        rcrb_range: var_range.sqrt(),
    })
}

/// How the range rings of a polar search grid are spaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeSampling {
    UniformRange,
    /// 1/r uniformly spaced, matching the non-uniform distance resolution of
    /// near-field beams; includes one far-field (infinite range) entry.
    InverseRange,
}

/// Angle x range search lattice: angles uniform in sin(theta), ranges per
/// the chosen sampling.
#[derive(Debug, Clone)]
pub struct PolarGrid {
    pub angles: Vec<f64>,
    /// Strictly increasing; may end with `f64::INFINITY` (far-field ring).
    pub ranges: Vec<f64>,
    pub sampling: RangeSampling,
}

pub fn polar_grid(
    geom: &ArrayGeometry,
    angle_count: usize,
    range_count: usize,
    r_min: f64,
    sampling: RangeSampling,
) -> Result<PolarGrid> {
    if angle_count < 2 || range_count < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid counts must be >= 2, got {angle_count} x {range_count}"
        )));
    }
    if r_min <= geom.aperture() / 2.0 {
        return Err(Error::InvalidArgument(format!(
            "r_min {} m must exceed aperture/2 = {} m",
            r_min,
            geom.aperture() / 2.0
        )));
    }
    // cell-centered in sin(theta) to stay inside (-pi/2, pi/2)
    let angles = (0..angle_count)
        .map(|i| (-1.0 + (2.0 * i as f64 + 1.0) / angle_count as f64).asin())
        .collect();
    let ranges = match sampling {
        RangeSampling::UniformRange => {
            let rd = rayleigh_distance(geom).max(r_min * 2.0);
            (0..range_count)
                .map(|i| r_min + (rd - r_min) * i as f64 / (range_count - 1) as f64)
                .collect()
        }
        RangeSampling::InverseRange => {
            let rd = rayleigh_distance(geom).max(r_min * 2.0);
            let inv_min = 1.0 / r_min;
            let inv_max = 1.0 / rd;
            let mut v: Vec<f64> = (0..range_count)
                .map(|i| {
                    1.0 / (inv_min - (inv_min - inv_max) * i as f64 / (range_count - 1) as f64)
                })
                .collect();
            v.push(f64::INFINITY);
            v
        }
    };
    Ok(PolarGrid {
        angles,
        ranges,
        sampling,
    })
}

/// 2D-MUSIC estimates and pseudo-spectrum.
#[derive(Debug, Clone)]
pub struct MusicResult {
    pub estimates: Vec<PolarPoint>,
    /// spectrum[(i, j)] for angle i, range j.
    pub spectrum: DMatrix<f64>,
    pub grid: PolarGrid,
}

/// 2D-MUSIC over the polar grid: eigendecompose the sample covariance of the
/// snapshots, form the noise-subspace pseudo-spectrum
/// `S(theta, r) = 1 / (a^H E_n E_n^H a + eps)` and return the `num_sources`
/// largest distinct local maxima (3x3 non-maximum suppression).
pub fn music_2d(
    snapshots: &DMatrix<Complex64>,
    num_sources: usize,
    grid: &PolarGrid,
    geom: &ArrayGeometry,
) -> Result<MusicResult> {
    music_2d_impl(snapshots, num_sources, grid, geom, false)
}

/// Sequential spectrum evaluation; identical output to [`music_2d`].
pub fn music_2d_serial(
    snapshots: &DMatrix<Complex64>,
    num_sources: usize,
    grid: &PolarGrid,
    geom: &ArrayGeometry,
) -> Result<MusicResult> {
    music_2d_impl(snapshots, num_sources, grid, geom, true)
}

fn music_2d_impl(
    snapshots: &DMatrix<Complex64>,
    num_sources: usize,
    grid: &PolarGrid,
    geom: &ArrayGeometry,
    serial: bool,
) -> Result<MusicResult> {
    let n_rx = snapshots.nrows();
    let l = snapshots.ncols();
    if num_sources >= n_rx {
        return Err(Error::InvalidArgument(format!(
            "num_sources {num_sources} must be < {n_rx} receive elements"
        )));
    }
    if l < 1 {
        return Err(Error::InvalidArgument("no snapshots".into()));
    }
    let cov = snapshots * snapshots.adjoint() / Complex64::new(l as f64, 0.0);
    let total: f64 = cov.diagonal().iter().map(|z| z.re).sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("degenerate zero covariance".into()));
    }
    let eig = nalgebra::SymmetricEigen::new(cov);
    // signal subspace: num_sources largest eigenvalues
    let mut order: Vec<usize> = (0..n_rx).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let mut signal = DMatrix::zeros(n_rx, num_sources);
    for (c, &i) in order.iter().take(num_sources).enumerate() {
        signal.set_column(c, &eig.eigenvectors.column(i));
    }

    const EPS: f64 = 1e-12;
    let na = grid.angles.len();
    let nr = grid.ranges.len();
    // a^H E_n E_n^H a = 1 - |E_s^H a|^2 for unit-norm a
    let eval = |idx: usize| -> Result<f64> {
        let (i, j) = (idx / nr, idx % nr);
        let a = point_response(geom, grid.angles[i], grid.ranges[j])?;
        let proj = (signal.adjoint() * &a.entries).norm_squared();
        Ok(1.0 / ((1.0 - proj).max(0.0) + EPS))
    };
    let values = if serial {
        exec::map_indices_seq(na * nr, eval)
    } else {
        exec::map_indices(na * nr, eval)
    };
    let mut spectrum = DMatrix::zeros(na, nr);
    for (idx, v) in values.into_iter().enumerate() {
        spectrum[(idx / nr, idx % nr)] = v?;
    }

    let peaks = pick_peaks(&spectrum, num_sources);
    let estimates = peaks
        .iter()
        .map(|&(i, j)| {
            if grid.ranges[j].is_infinite() {
                // report the far-field ring at the Rayleigh boundary distance
                PolarPoint::new(grid.angles[i], rayleigh_distance(geom).max(1.0))
            } else {
                PolarPoint::new(grid.angles[i], grid.ranges[j])
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MusicResult {
        estimates,
        spectrum,
        grid: grid.clone(),
    })
}

/// Largest local maxima of a spectrum matrix under 3x3 non-maximum
/// suppression; ties broken by value then lexicographic index.
fn pick_peaks(spectrum: &DMatrix<f64>, count: usize) -> Vec<(usize, usize)> {
    let (na, nr) = spectrum.shape();
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for i in 0..na {
        for j in 0..nr {
            let v = spectrum[(i, j)];
            let mut is_max = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= na as i64 || nj >= nr as i64 {
                        continue;
                    }
                    let w = spectrum[(ni as usize, nj as usize)];
                    // strict on the lexicographically earlier neighbor so
                    // plateau ties yield a single peak
                    if w > v || (w == v && (ni as usize, nj as usize) < (i, j)) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                candidates.push((i, j));
            }
        }
    }
    candidates.sort_by(|&a, &b| {
        spectrum[b]
            .partial_cmp(&spectrum[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut selected: Vec<(usize, usize)> = Vec::new();
    for c in candidates {
        if selected.len() >= count {
            break;
        }
        let adjacent = selected.iter().any(|s| {
            (s.0 as i64 - c.0 as i64).abs() <= 1 && (s.1 as i64 - c.1 as i64).abs() <= 1
        });
        if !adjacent {
            selected.push(c);
        }
    }
    selected
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::{isac_covariance, sensing_beam, zf_precoder, BeamDesign};
    use crate::channel::{user_channel, ChannelModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn geom() -> ArrayGeometry {
        ArrayGeometry::half_wavelength(256, 30e9).unwrap()
    }

    fn randn(rng: &mut ChaCha8Rng) -> f64 {
        StandardNormal.sample(rng)
    }

    fn radar_cov(g: &ArrayGeometry, target: &PolarPoint, model: BeamDesign) -> TransmitCovariance {
        let s = sensing_beam(g, target, model).unwrap();
        let r = &s * s.adjoint();
        TransmitCovariance::new(r, 1.0).unwrap()
    }

    fn echo(g: &ArrayGeometry, target: PolarPoint, cov: TransmitCovariance) -> EchoModel {
        EchoModel {
            target,
            reflection_gain: Complex64::new(0.8, 0.3),
            snapshots: 64,
            noise_power: 0.01,
            tx_covariance: cov,
            tx_geom: g.clone(),
            rx_geom: g.clone(),
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let g = geom();
        let p = PolarPoint::from_degrees(45.0, 5.0).unwrap();
        let (da_dt, da_dr) = focusing_derivatives(&g, &p).unwrap();
        let h = 1e-6;
        let fd = |pa: PolarPoint, pb: PolarPoint| {
            let va = nearfield_focusing(&g, &pa, false).unwrap().entries;
            let vb = nearfield_focusing(&g, &pb, false).unwrap().entries;
            (vb - va) / Complex64::new(2.0 * h, 0.0)
        };
        let fd_t = fd(
            PolarPoint::new(p.angle() - h, p.range()).unwrap(),
            PolarPoint::new(p.angle() + h, p.range()).unwrap(),
        );
        let fd_r = fd(
            PolarPoint::new(p.angle(), p.range() - h).unwrap(),
            PolarPoint::new(p.angle(), p.range() + h).unwrap(),
        );
        assert!((&da_dt - &fd_t).norm() / da_dt.norm() <= 1e-5);
        assert!((&da_dr - &fd_r).norm() / da_dr.norm() <= 1e-5);
    }

    #[test]
    fn derivatives_far_limit_and_symmetry() {
        let g = geom();
        let far = PolarPoint::from_degrees(20.0, 1e6 * rayleigh_distance(&g)).unwrap();
        let (_, da_dr) = focusing_derivatives(&g, &far).unwrap();
        assert!(da_dr.norm() < 1e-6, "da/dr norm {}", da_dr.norm());

        // theta = 0: odd symmetry of da/dtheta across the array center
        let p = PolarPoint::from_degrees(0.0, 8.0).unwrap();
        let (da_dt, _) = focusing_derivatives(&g, &p).unwrap();
        let n = g.num_elements();
        for i in 0..n / 2 {
            assert!((da_dt[i] + da_dt[n - 1 - i]).norm() < 1e-9);
        }
        // inside the aperture is rejected
        let inside = PolarPoint::new(0.0, 0.2).unwrap();
        assert!(focusing_derivatives(&g, &inside).is_err());
    }

    #[test]
    fn fim_scaling_in_snapshots_and_noise() {
        let g = geom();
        let target = PolarPoint::from_degrees(45.0, 5.0).unwrap();
        let cov = radar_cov(&g, &target, BeamDesign::Nfbf);
        let base = echo(&g, target, cov.clone());
        let r0 = fim(&base).unwrap();

        let mut doubled_l = base.clone();
        doubled_l.snapshots = 128;
        let r1 = fim(&doubled_l).unwrap();
        assert!((r1.rcrb_angle / r0.rcrb_angle - 1.0 / 2.0f64.sqrt()).abs() < 1e-9);
        assert!((r1.rcrb_range / r0.rcrb_range - 1.0 / 2.0f64.sqrt()).abs() < 1e-9);

        let mut doubled_n = base.clone();
        doubled_n.noise_power = 0.02;
        let r2 = fim(&doubled_n).unwrap();
        assert!((r2.rcrb_angle / r0.rcrb_angle - 2.0f64.sqrt()).abs() < 1e-9);
        assert!((r2.rcrb_range / r0.rcrb_range - 2.0f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn fim_nfbf_beats_ffbf_at_near_target() {
        let g = geom();
        let target = PolarPoint::from_degrees(45.0, 5.0).unwrap();
        let nf = fim(&echo(&g, target, radar_cov(&g, &target, BeamDesign::Nfbf))).unwrap();
        let ff = fim(&echo(&g, target, radar_cov(&g, &target, BeamDesign::Ffbf))).unwrap();
        assert!(
            nf.rcrb_angle < ff.rcrb_angle,
            "nf {} vs ff {}",
            nf.rcrb_angle,
            ff.rcrb_angle
        );
    }

    #[test]
    fn fim_gain_phase_invariance() {
        let g = geom();
        let target = PolarPoint::from_degrees(30.0, 7.0).unwrap();
        let cov = radar_cov(&g, &target, BeamDesign::Nfbf);
        let mut a = echo(&g, target, cov.clone());
        a.reflection_gain = Complex64::new(1.0, 0.0);
        let mut b = echo(&g, target, cov);
        b.reflection_gain = Complex64::from_polar(1.0, 1.1);
        let ra = fim(&a).unwrap();
        let rb = fim(&b).unwrap();
        assert!((ra.rcrb_angle - rb.rcrb_angle).abs() / ra.rcrb_angle < 1e-9);
        assert!((ra.rcrb_range - rb.rcrb_range).abs() / ra.rcrb_range < 1e-9);
    }

    #[test]
    fn fim_farfield_range_unidentifiable() {
        let g = geom();
        let target = PolarPoint::from_degrees(10.0, 1e5 * rayleigh_distance(&g)).unwrap();
        let cov = radar_cov(&g, &target, BeamDesign::Nfbf);
        match fim(&echo(&g, target, cov)) {
            Err(Error::Unidentifiable(_)) => {}
            Ok(r) => panic!("expected unidentifiable, got rcrb_range {}", r.rcrb_range),
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn fim_couples_to_comm_covariance() {
        // mixed covariance keeps identifiability and interpolates both bounds
        let g = geom();
        let target = PolarPoint::from_degrees(45.0, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let channels = vec![
            user_channel(
                &g,
                PolarPoint::from_degrees(0.0, 5.0).unwrap(),
                &[PolarPoint::from_degrees(25.0, 10.0).unwrap()],
                0.1,
                ChannelModel::NearField,
                &mut rng,
            )
            .unwrap(),
            user_channel(
                &g,
                PolarPoint::from_degrees(0.0, 15.0).unwrap(),
                &[PolarPoint::from_degrees(-30.0, 18.0).unwrap()],
                0.1,
                ChannelModel::NearField,
                &mut rng,
            )
            .unwrap(),
        ];
        let prec = zf_precoder(&channels, BeamDesign::Nfbf).unwrap();
        let s = sensing_beam(&g, &target, BeamDesign::Nfbf).unwrap();
        let cov = isac_covariance(&prec, &s, 0.5, 1.0).unwrap();
        let mixed = fim(&echo(&g, target, cov)).unwrap();
        let radar = fim(&echo(&g, target, radar_cov(&g, &target, BeamDesign::Nfbf))).unwrap();
        assert!(mixed.rcrb_angle >= radar.rcrb_angle);
    }

    #[test]
    fn polar_grid_shapes() {
        let g = geom();
        let grid = polar_grid(&g, 32, 8, 5.0, RangeSampling::InverseRange).unwrap();
        assert_eq!(grid.ranges.len(), 9);
        assert!(grid.ranges.last().unwrap().is_infinite());
        assert!((grid.ranges[0] - 5.0).abs() < 1e-12);
        let rd = rayleigh_distance(&g);
        assert!((grid.ranges[7] - rd).abs() / rd < 1e-9);
        // reciprocals uniformly spaced
        let step = 1.0 / grid.ranges[0] - 1.0 / grid.ranges[1];
        for w in grid.ranges[..8].windows(2) {
            let s = 1.0 / w[0] - 1.0 / w[1];
            assert!((s - step).abs() < 1e-12);
        }
        // all ranges >= r_min, strictly increasing
        for w in grid.ranges.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(grid.ranges.iter().all(|&r| r >= 5.0));
        // angles uniform in sin
        let s0 = grid.angles[1].sin() - grid.angles[0].sin();
        for w in grid.angles.windows(2) {
            assert!((w[1].sin() - w[0].sin() - s0).abs() < 1e-12);
        }

        let uni = polar_grid(&g, 8, 6, 5.0, RangeSampling::UniformRange).unwrap();
        let d0 = uni.ranges[1] - uni.ranges[0];
        for w in uni.ranges.windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] - w[0] - d0).abs() < 1e-9);
        }
        assert!(polar_grid(&g, 1, 6, 5.0, RangeSampling::UniformRange).is_err());
        assert!(polar_grid(&g, 8, 6, 0.1, RangeSampling::UniformRange).is_err());
    }

    #[test]
    fn music_noise_free_single_source() {
        let g = ArrayGeometry::half_wavelength(64, 30e9).unwrap();
        let grid = polar_grid(&g, 64, 16, 3.0, RangeSampling::InverseRange).unwrap();
        // source exactly at a grid point
        let (gi, gj) = (40, 4);
        let a = nearfield_focusing(&g, &PolarPoint::new(grid.angles[gi], grid.ranges[gj]).unwrap(), false)
            .unwrap()
            .entries;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l = 32;
        let mut y = DMatrix::zeros(64, l);
        for t in 0..l {
            let s = Complex64::new(
                randn(&mut rng),
                randn(&mut rng),
            );
            y.set_column(t, &(&a * s));
        }
        let res = music_2d(&y, 1, &grid, &g).unwrap();
        let (mut bi, mut bj, mut best) = (0, 0, 0.0);
        for i in 0..grid.angles.len() {
            for j in 0..grid.ranges.len() {
                if res.spectrum[(i, j)] > best {
                    best = res.spectrum[(i, j)];
                    bi = i;
                    bj = j;
                }
            }
        }
        assert_eq!((bi, bj), (gi, gj));
        assert_eq!(res.estimates.len(), 1);
        assert!((res.estimates[0].angle() - grid.angles[gi]).abs() < 1e-12);
    }

    #[test]
    fn music_spectrum_scale_invariant_and_serial_matches() {
        let g = ArrayGeometry::half_wavelength(32, 30e9).unwrap();
        let grid = polar_grid(&g, 24, 8, 3.0, RangeSampling::InverseRange).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut y = DMatrix::zeros(32, 40);
        for v in y.iter_mut() {
            *v = Complex64::new(randn(&mut rng), randn(&mut rng));
        }
        let r1 = music_2d(&y, 2, &grid, &g).unwrap();
        let r2 = music_2d(&(&y * Complex64::new(3.0, 0.0)), 2, &grid, &g).unwrap();
        let r3 = music_2d_serial(&y, 2, &grid, &g).unwrap();
        assert!((&r1.spectrum - &r2.spectrum).norm() / r1.spectrum.norm() < 1e-9);
        assert!((&r1.spectrum - &r3.spectrum).norm() == 0.0);
        assert!(music_2d(&y, 32, &grid, &g).is_err());
        assert!(music_2d(&DMatrix::zeros(32, 4), 1, &grid, &g).is_err());
    }

    #[test]
    fn music_two_same_angle_sources_resolved_in_range() {
        let g = geom();
        let grid = polar_grid(&g, 121, 40, 2.0, RangeSampling::InverseRange).unwrap();
        let p1 = PolarPoint::from_degrees(0.0, 5.0).unwrap();
        let p2 = PolarPoint::from_degrees(0.0, 15.0).unwrap();
        let a1 = nearfield_focusing(&g, &p1, false).unwrap().entries;
        let a2 = nearfield_focusing(&g, &p2, false).unwrap().entries;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = 200;
        let snr_lin = 100.0f64; // 20 dB
        let noise_std = (1.0 / (256.0 * snr_lin) / 2.0).sqrt();
        let mut y = DMatrix::zeros(256, l);
        for t in 0..l {
            let s1 = Complex64::new(randn(&mut rng), randn(&mut rng))
                / Complex64::new(2.0f64.sqrt(), 0.0);
            let s2 = Complex64::new(randn(&mut rng), randn(&mut rng))
                / Complex64::new(2.0f64.sqrt(), 0.0);
            let mut col = &a1 * s1 + &a2 * s2;
            for v in col.iter_mut() {
                *v += Complex64::new(
                    noise_std * randn(&mut rng),
                    noise_std * randn(&mut rng),
                );
            }
            y.set_column(t, &col);
        }
        let res = music_2d(&y, 2, &grid, &g).unwrap();
        assert_eq!(res.estimates.len(), 2);
        let mut ranges: Vec<f64> = res.estimates.iter().map(|p| p.range()).collect();
        ranges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ranges[0] - 5.0).abs() < 1.0, "near peak at {}", ranges[0]);
        assert!((ranges[1] - 15.0).abs() < 3.0, "far peak at {}", ranges[1]);
        for e in &res.estimates {
            assert!(e.angle().abs().to_degrees() < 1.5);
        }
    }

    #[test]
    fn music_warns_not_required_with_few_snapshots() {
        // L < N is allowed; the estimator still works on the leading subspace
        let g = ArrayGeometry::half_wavelength(64, 30e9).unwrap();
        let grid = polar_grid(&g, 48, 10, 3.0, RangeSampling::InverseRange).unwrap();
        let p = PolarPoint::from_degrees(20.0, 6.0).unwrap();
        let a = nearfield_focusing(&g, &p, false).unwrap().entries;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut y = DMatrix::zeros(64, 16);
        for t in 0..16 {
            let s = Complex64::new(randn(&mut rng), randn(&mut rng));
            let mut col = &a * s;
            for v in col.iter_mut() {
                *v += Complex64::new(
                    0.01 * randn(&mut rng),
                    0.01 * randn(&mut rng),
                );
            }
            y.set_column(t, &col);
        }
        let res = music_2d(&y, 1, &grid, &g).unwrap();
        assert!((res.estimates[0].angle() - p.angle()).abs() < 0.05);
    }
}
