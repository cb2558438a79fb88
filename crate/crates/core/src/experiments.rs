//! Seeded, reproducible experiment runners. Every runner is a pure function
//! of (Scenario, grids, seed) and returns CSV text; repeated runs produce
//! identical bytes. Floats are printed with 9 significant digits and every
//! file carries a comment line recording the seed and scenario hash.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::beamforming::{
    beampattern, isac_covariance, sensing_beam, sinr_and_rate, zf_precoder, AngleRangeGrid,
    BeamDesign, log_spaced,
};
use crate::channel::{
    assemble_user_channel, channel_correlation, effective_dof, p2p_los_channel, ChannelModel,
    PathComponent, PathKind,
};
use crate::error::{Error, Result};
use crate::geometry::{nearfield_focusing, rayleigh_distance, ArrayGeometry, PolarPoint};
use crate::power::{build_power_problem, power_sweep};
use crate::scenario::Scenario;
use crate::sensing::{fim, music_2d, polar_grid, EchoModel, RangeSampling};

/// One named output file.
#[derive(Debug, Clone)]
pub struct CsvFile {
    pub name: String,
    pub content: String,
}

/// 9 significant digits, scientific notation; infinities print as inf.
pub fn fmt_float(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:.8e}")
}

fn preamble(scenario: &Scenario, seed: u64) -> String {
    format!("# seed={} scenario=sha256:{}\n", seed, scenario.digest())
}

fn runner_context<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io(io) => Error::Io(io),
        other => Error::Scenario(format!("{name}: {other}")),
    })
}

/// Default separation sweep for the DoF experiment: 30 log-spaced points
/// from 1 m to 10x the Rayleigh distance.
pub fn default_distance_grid(geom: &ArrayGeometry) -> Vec<f64> {
    log_spaced(1.0, 10.0 * rayleigh_distance(geom), 30)
}

/// Default antenna-count sweep for the correlation experiment.
pub fn default_antenna_grid() -> Vec<usize> {
    vec![2, 4, 8, 16, 32, 64, 128, 256, 512]
}

/// Point-to-point DoF versus array separation.
pub fn run_fig1_dof(scenario: &Scenario, distance_grid: &[f64], seed: u64) -> Result<CsvFile> {
    runner_context("fig1_dof", fig1_impl(scenario, distance_grid, seed))
}

fn fig1_impl(scenario: &Scenario, distance_grid: &[f64], seed: u64) -> Result<CsvFile> {
    if distance_grid.is_empty() {
        return Err(Error::InvalidArgument("empty distance grid".into()));
    }
    let tx = scenario.tx_geometry()?;
    let rx = scenario.rx_geometry()?;
    let rd = rayleigh_distance(&tx);
    let mut out = preamble(scenario, seed);
    out.push_str("distance_m,dof,rayleigh_m\n");
    for &d in distance_grid {
        let h = p2p_los_channel(&tx, &rx, d, false)?;
        let dof = effective_dof(&h, -20.0)?;
        out.push_str(&format!("{},{},{}\n", fmt_float(d), dof, fmt_float(rd)));
    }
    Ok(CsvFile {
        name: "fig1_dof.csv".into(),
        content: out,
    })
}

/// Squared correlation of the two LoS-only user channels versus antenna
/// count, under the plane-wave and spherical-wave models.
pub fn run_fig2_correlation(
    scenario: &Scenario,
    antenna_grid: &[usize],
    seed: u64,
) -> Result<CsvFile> {
    runner_context("fig2_correlation", fig2_impl(scenario, antenna_grid, seed))
}

fn fig2_impl(scenario: &Scenario, antenna_grid: &[usize], seed: u64) -> Result<CsvFile> {
    if antenna_grid.is_empty() {
        return Err(Error::InvalidArgument("empty antenna grid".into()));
    }
    if scenario.users.len() < 2 {
        return Err(Error::InvalidArgument(
            "correlation experiment needs two users".into(),
        ));
    }
    let points = scenario.user_points()?;
    let mut out = preamble(scenario, seed);
    out.push_str("num_antennas,corr_planewave,corr_spherical\n");
    for &n in antenna_grid {
        let geom = ArrayGeometry::half_wavelength(n, scenario.carrier_freq_hz)?;
        let mut corr = [0.0f64; 2];
        for (slot, model) in [ChannelModel::FarField, ChannelModel::NearField]
            .into_iter()
            .enumerate()
        {
            let chans: Vec<_> = points[..2]
                .iter()
                .map(|p| {
                    assemble_user_channel(
                        &geom,
                        *p,
                        vec![PathComponent {
                            location: *p,
                            gain: Complex64::new(1.0, 0.0),
                            kind: PathKind::LineOfSight,
                        }],
                        model,
                    )
                })
                .collect::<Result<_>>()?;
            corr[slot] = channel_correlation(&chans[0], &chans[1])?;
        }
        out.push_str(&format!(
            "{},{},{}\n",
            n,
            fmt_float(corr[0]),
            fmt_float(corr[1])
        ));
    }
    Ok(CsvFile {
        name: "fig2_correlation.csv".into(),
        content: out,
    })
}

/// Normalized beampatterns for each (design model, rho) pair: one long-form
/// CSV plus a gnuplot `splot`-ready matrix file per pair.
pub fn run_fig3_beampattern(
    scenario: &Scenario,
    rho_list: &[f64],
    models: &[BeamDesign],
    seed: u64,
) -> Result<Vec<CsvFile>> {
    runner_context("fig3_beampattern", fig3_impl(scenario, rho_list, models, seed))
}

fn fig3_impl(
    scenario: &Scenario,
    rho_list: &[f64],
    models: &[BeamDesign],
    seed: u64,
) -> Result<Vec<CsvFile>> {
    if rho_list.is_empty() || models.is_empty() {
        return Err(Error::InvalidArgument("empty rho or model list".into()));
    }
    let geom = scenario.tx_geometry()?;
    let target = scenario.target_point()?;
    let grid = AngleRangeGrid::default_grid();
    let mut files = Vec::new();
    for &model in models {
        let design_model = match model {
            BeamDesign::Nfbf => ChannelModel::NearField,
            BeamDesign::Ffbf => ChannelModel::FarField,
        };
        let channels = scenario.user_channels(design_model, seed)?;
        let prec = zf_precoder(&channels, model)?;
        let sense = sensing_beam(&geom, &target, model)?;
        for &rho in rho_list {
            let cov = isac_covariance(&prec, &sense, rho, scenario.total_power_w)?;
            let bp = beampattern(&cov, &geom, &grid)?;
            let tag = format!("{}_rho{:.2}", model.label(), rho);

            let mut csv = preamble(scenario, seed);
            csv.push_str("angle_deg,range_m,power_db\n");
            let mut matrix = String::new();
            for (i, &ang) in bp.angles.iter().enumerate() {
                for (j, &rng) in bp.ranges.iter().enumerate() {
                    let db = 10.0 * bp.power[(i, j)].max(1e-30).log10();
                    csv.push_str(&format!(
                        "{},{},{}\n",
                        fmt_float(ang.to_degrees()),
                        fmt_float(rng),
                        fmt_float(db)
                    ));
                    if j > 0 {
                        matrix.push(' ');
                    }
                    matrix.push_str(&fmt_float(db));
                }
                matrix.push('\n');
            }
            files.push(CsvFile {
                name: format!("fig3_beampattern_{tag}.csv"),
                content: csv,
            });
            files.push(CsvFile {
                name: format!("fig3_beampattern_{tag}.matrix"),
                content: matrix,
            });
        }
    }
    Ok(files)
}

/// Rate / RCRB trade-off: one frontier per (model, target range) pair over
/// the rho grid. Unidentifiable FIM points are reported as inf bounds.
pub fn run_fig4_tradeoff(
    scenario: &Scenario,
    rho_grid: &[f64],
    target_ranges: &[f64],
    seed: u64,
) -> Result<CsvFile> {
    runner_context(
        "fig4_tradeoff",
        fig4_impl(scenario, rho_grid, target_ranges, seed),
    )
}

fn fig4_impl(
    scenario: &Scenario,
    rho_grid: &[f64],
    target_ranges: &[f64],
    seed: u64,
) -> Result<CsvFile> {
    if rho_grid.is_empty() || target_ranges.is_empty() {
        return Err(Error::InvalidArgument("empty rho or range grid".into()));
    }
    let geom = scenario.tx_geometry()?;
    let rx_geom = scenario.rx_geometry()?;
    let true_channels = scenario.user_channels(ChannelModel::NearField, seed)?;
    let mut out = preamble(scenario, seed);
    out.push_str("model,target_range_m,rho,sum_rate_bps_hz,rcrb_angle_deg,rcrb_range_m\n");
    for &model in &[BeamDesign::Nfbf, BeamDesign::Ffbf] {
        let design_model = match model {
            BeamDesign::Nfbf => ChannelModel::NearField,
            BeamDesign::Ffbf => ChannelModel::FarField,
        };
        let design_channels = scenario.user_channels(design_model, seed)?;
        let prec = zf_precoder(&design_channels, model)?;
        for &range in target_ranges {
            let target = PolarPoint::from_degrees(scenario.target.angle_deg, range)?;
            let sense = sensing_beam(&geom, &target, model)?;
            for &rho in rho_grid {
                let (_, rate) = sinr_and_rate(
                    &true_channels,
                    &prec,
                    &sense,
                    rho,
                    scenario.total_power_w,
                    scenario.noise_power_w,
                )?;
                let cov = isac_covariance(&prec, &sense, rho, scenario.total_power_w)?;
                let echo = EchoModel {
                    target,
                    reflection_gain: Complex64::new(1.0, 0.0),
                    snapshots: scenario.sensing_snapshots,
                    noise_power: scenario.noise_power_w,
                    tx_covariance: cov,
                    tx_geom: geom.clone(),
                    rx_geom: rx_geom.clone(),
                };
                let (rcrb_angle, rcrb_range) = match fim(&echo) {
                    Ok(res) => (res.rcrb_angle, res.rcrb_range),
                    Err(Error::Unidentifiable(_)) => (f64::INFINITY, f64::INFINITY),
                    Err(e) => return Err(e),
                };
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    model.label(),
                    fmt_float(range),
                    fmt_float(rho),
                    fmt_float(rate),
                    fmt_float(rcrb_angle.to_degrees()),
                    fmt_float(rcrb_range)
                ));
            }
        }
    }
    Ok(CsvFile {
        name: "fig4_tradeoff.csv".into(),
        content: out,
    })
}

/// Minimum total transmit power versus SINR threshold for both design
/// models; infeasible thresholds are flagged and reported as inf.
pub fn run_fig5_power(scenario: &Scenario, seed: u64) -> Result<CsvFile> {
    runner_context("fig5_power", fig5_impl(scenario, seed))
}

fn fig5_impl(scenario: &Scenario, seed: u64) -> Result<CsvFile> {
    let geom = scenario.tx_geometry()?;
    let target = scenario.target_point()?;
    let true_channels = scenario.user_channels(ChannelModel::NearField, seed)?;
    let mut sweeps = Vec::new();
    for &model in &[BeamDesign::Nfbf, BeamDesign::Ffbf] {
        let design_model = match model {
            BeamDesign::Nfbf => ChannelModel::NearField,
            BeamDesign::Ffbf => ChannelModel::FarField,
        };
        let design_channels = scenario.user_channels(design_model, seed)?;
        let base = build_power_problem(
            &true_channels,
            &design_channels,
            &geom,
            &target,
            model,
            1.0,
            scenario.target_power_floor(),
            scenario.noise_power_w,
        )?;
        sweeps.push(power_sweep(&base, &scenario.gamma_list_db)?);
    }
    let mut out = preamble(scenario, seed);
    out.push_str("gamma_db,total_power_w_nfbf,total_power_w_ffbf,feasible_nfbf,feasible_ffbf\n");
    for (nf, ff) in sweeps[0].iter().zip(sweeps[1].iter()) {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_float(nf.0),
            fmt_float(nf.1.total),
            fmt_float(ff.1.total),
            nf.1.feasible as u8,
            ff.1.feasible as u8
        ));
    }
    Ok(CsvFile {
        name: "fig5_power.csv".into(),
        content: out,
    })
}

/// 2D-MUSIC localization of the scenario users as echo sources: emits the
/// pseudo-spectrum over the polar grid and the picked estimates.
pub fn run_music(
    scenario: &Scenario,
    snr_db: f64,
    snapshots: usize,
    seed: u64,
) -> Result<Vec<CsvFile>> {
    runner_context("music", music_impl(scenario, snr_db, snapshots, seed))
}

fn music_impl(
    scenario: &Scenario,
    snr_db: f64,
    snapshots: usize,
    seed: u64,
) -> Result<Vec<CsvFile>> {
    if snapshots == 0 {
        return Err(Error::InvalidArgument("snapshots must be >= 1".into()));
    }
    let geom = scenario.rx_geometry()?;
    let n = geom.num_elements();
    let sources = scenario.user_points()?;
    let responses: Vec<_> = sources
        .iter()
        .map(|p| nearfield_focusing(&geom, p, false).map(|r| r.entries))
        .collect::<Result<_>>()?;
    let snr_lin = 10f64.powf(snr_db / 10.0);
    // unit-power sources through unit-norm responses: per-element noise
    // variance 1/(N snr) puts the array-level SNR at snr_db
    let noise_std = (1.0 / (n as f64 * snr_lin) / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let randn = |rng: &mut ChaCha8Rng| -> f64 { rand_distr::StandardNormal.sample(rng) };
    let mut y = DMatrix::zeros(n, snapshots);
    for t in 0..snapshots {
        let mut col = nalgebra::DVector::<Complex64>::zeros(n);
        for a in &responses {
            let s = Complex64::new(randn(&mut rng), randn(&mut rng))
                / Complex64::new(2.0f64.sqrt(), 0.0);
            col += a * s;
        }
        for v in col.iter_mut() {
            *v += Complex64::new(noise_std * randn(&mut rng), noise_std * randn(&mut rng));
        }
        y.set_column(t, &col);
    }
    let grid = polar_grid(&geom, 121, 40, 2.0, RangeSampling::InverseRange)?;
    let res = music_2d(&y, sources.len(), &grid, &geom)?;

    let mut spec = preamble(scenario, seed);
    spec.push_str("angle_deg,range_m,spectrum_db\n");
    let peak = res.spectrum.max();
    for (i, &ang) in res.grid.angles.iter().enumerate() {
        for (j, &rng_m) in res.grid.ranges.iter().enumerate() {
            let db = 10.0 * (res.spectrum[(i, j)] / peak).max(1e-30).log10();
            spec.push_str(&format!(
                "{},{},{}\n",
                fmt_float(ang.to_degrees()),
                fmt_float(rng_m),
                fmt_float(db)
            ));
        }
    }
    let mut est = preamble(scenario, seed);
    est.push_str("peak_index,angle_deg,range_m\n");
    for (i, p) in res.estimates.iter().enumerate() {
        est.push_str(&format!(
            "{},{},{}\n",
            i,
            fmt_float(p.angle().to_degrees()),
            fmt_float(p.range())
        ));
    }
    Ok(vec![
        CsvFile {
            name: "music_spectrum.csv".into(),
            content: spec,
        },
        CsvFile {
            name: "music_estimates.csv".into(),
            content: est,
        },
    ])
}

/// User channels as CSV (complex entries as re,im) for external inspection.
pub fn export_channels(scenario: &Scenario, model: ChannelModel, seed: u64) -> Result<CsvFile> {
    let channels = scenario.user_channels(model, seed)?;
    let mut out = preamble(scenario, seed);
    out.push_str("user,element,re,im\n");
    for (u, ch) in channels.iter().enumerate() {
        for (e, v) in ch.vector.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", u, e, fmt_float(v.re), fmt_float(v.im)));
        }
    }
    let tag = match model {
        ChannelModel::NearField => "nearfield",
        ChannelModel::FarField => "farfield",
    };
    Ok(CsvFile {
        name: format!("channels_{tag}.csv"),
        content: out,
    })
}
