//! Scenario configuration: a strict JSON schema with a built-in default
//! matching the simulation setup used throughout the experiment runners.
//!
//! The schema is strict (unknown keys rejected) so that a typo in a config
//! file cannot silently fall back to a default.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{user_channel, ChannelModel, UserChannel};
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, PolarPoint};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSpec {
    pub angle_deg: f64,
    pub range_m: f64,
    pub num_scatterers: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub angle_deg: f64,
    pub range_m: f64,
}

/// Full experiment configuration. All runners are pure functions of
/// (Scenario, grids, seed); the scenario carries everything else.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub num_tx_antennas: usize,
    pub num_rx_antennas: usize,
    pub carrier_freq_hz: f64,
    pub users: Vec<UserSpec>,
    pub target: TargetSpec,
    pub total_power_w: f64,
    pub noise_power_w: f64,
    /// Sensing weight in [0, 1]: 0 = communication only, 1 = radar only.
    pub rho: f64,
    pub gamma_list_db: Vec<f64>,
    #[serde(default = "default_scatterer_power_db")]
    pub scatterer_power_db: f64,
    /// Target illumination floor in watts; `None` means 0.1 * sigma^2 * N.
    #[serde(default)]
    pub target_power_floor_w: Option<f64>,
    pub rng_seed: u64,
    #[serde(default = "default_sensing_snapshots")]
    pub sensing_snapshots: usize,
}

fn default_scatterer_power_db() -> f64 {
    -10.0
}

fn default_sensing_snapshots() -> usize {
    64
}

impl Scenario {
    /// The built-in default: 256x256 half-wavelength arrays at 30 GHz, two
    /// users at (0 deg, 5 m) and (0 deg, 15 m) with two scatterers each, a
    /// target at (45 deg, 5 m), SINR thresholds 0..20 dB.
    pub fn paper_default() -> Self {
        Scenario {
            num_tx_antennas: 256,
            num_rx_antennas: 256,
            carrier_freq_hz: 30e9,
            users: vec![
                UserSpec {
                    angle_deg: 0.0,
                    range_m: 5.0,
                    num_scatterers: 2,
                },
                UserSpec {
                    angle_deg: 0.0,
                    range_m: 15.0,
                    num_scatterers: 2,
                },
            ],
            target: TargetSpec {
                angle_deg: 45.0,
                range_m: 5.0,
            },
            total_power_w: 1.0,
            noise_power_w: 0.03,
            rho: 0.5,
            gamma_list_db: (0..=20).map(f64::from).collect(),
            scatterer_power_db: -10.0,
            target_power_floor_w: None,
            rng_seed: 2024,
            sensing_snapshots: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Scenario(format!("invalid scenario: {what}")));
        if self.num_tx_antennas == 0 || self.num_rx_antennas == 0 {
            return bad("num_tx_antennas and num_rx_antennas must be >= 1");
        }
        if !(self.carrier_freq_hz > 0.0) {
            return bad("carrier_freq_hz must be > 0");
        }
        if self.users.is_empty() {
            return bad("users must be non-empty");
        }
        for (i, u) in self.users.iter().enumerate() {
            if !(u.range_m > 0.0) {
                return Err(Error::Scenario(format!(
                    "invalid scenario: users[{i}].range_m must be > 0"
                )));
            }
            if !(-90.0 < u.angle_deg && u.angle_deg <= 90.0) {
                return Err(Error::Scenario(format!(
                    "invalid scenario: users[{i}].angle_deg must be in (-90, 90]"
                )));
            }
        }
        if !(self.target.range_m > 0.0) {
            return bad("target.range_m must be > 0");
        }
        if !(-90.0 < self.target.angle_deg && self.target.angle_deg <= 90.0) {
            return bad("target.angle_deg must be in (-90, 90]");
        }
        if !(self.total_power_w > 0.0) {
            return bad("total_power_w must be > 0");
        }
        if !(self.noise_power_w > 0.0) {
            return bad("noise_power_w must be > 0");
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad("rho must be in [0, 1]");
        }
        if !(self.scatterer_power_db < 0.0) {
            return bad("scatterer_power_db must be < 0 (below the LoS reference)");
        }
        if let Some(g) = self.target_power_floor_w {
            if !(g > 0.0) {
                return bad("target_power_floor_w must be > 0");
            }
        }
        if self.sensing_snapshots == 0 {
            return bad("sensing_snapshots must be >= 1");
        }
        Ok(())
    }

    pub fn tx_geometry(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::half_wavelength(self.num_tx_antennas, self.carrier_freq_hz)
    }

    pub fn rx_geometry(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::half_wavelength(self.num_rx_antennas, self.carrier_freq_hz)
    }

    pub fn target_point(&self) -> Result<PolarPoint> {
        PolarPoint::from_degrees(self.target.angle_deg, self.target.range_m)
    }

    pub fn user_points(&self) -> Result<Vec<PolarPoint>> {
        self.users
            .iter()
            .map(|u| PolarPoint::from_degrees(u.angle_deg, u.range_m))
            .collect()
    }

    /// Illumination floor at the target (explicit value or 0.1 sigma^2 N).
    pub fn target_power_floor(&self) -> f64 {
        self.target_power_floor_w
            .unwrap_or(0.1 * self.noise_power_w * self.num_tx_antennas as f64)
    }

    pub fn scatterer_power(&self) -> f64 {
        10f64.powf(self.scatterer_power_db / 10.0)
    }

    /// Seeded scatterer placement: angle magnitudes uniform in 10..60
    /// degrees with a random sign and a 5 degree guard against every other
    /// path in the scenario, ranges uniform in 5..50 m.
    pub fn scatterer_locations(&self, seed: u64) -> Result<Vec<Vec<PolarPoint>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let guard = 5.0;
        let mut placed_deg: Vec<f64> = self.users.iter().map(|u| u.angle_deg).collect();
        let mut out = Vec::with_capacity(self.users.len());
        for (i, u) in self.users.iter().enumerate() {
            let mut locs = Vec::with_capacity(u.num_scatterers);
            for _ in 0..u.num_scatterers {
                let mut attempts = 0;
                let angle_deg = loop {
                    let mag: f64 = rng.gen_range(10.0..60.0);
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    let cand = sign * mag;
                    if placed_deg.iter().all(|&a| (a - cand).abs() >= guard) {
                        break cand;
                    }
                    attempts += 1;
                    if attempts > 10_000 {
                        return Err(Error::Scenario(format!(
                            "invalid scenario: cannot place scatterers for users[{i}] \
                             with a 5 degree angular guard"
                        )));
                    }
                };
                placed_deg.push(angle_deg);
                let range: f64 = rng.gen_range(5.0..50.0);
                locs.push(PolarPoint::from_degrees(angle_deg, range)?);
            }
            out.push(locs);
        }
        Ok(out)
    }

    /// User channels under the given response model. Near- and far-field
    /// calls with the same seed share scatterer placements and gains, so
    /// the far-field set is exactly the mismatched-design counterpart.
    pub fn user_channels(&self, model: ChannelModel, seed: u64) -> Result<Vec<UserChannel>> {
        let geom = self.tx_geometry()?;
        let locations = self.scatterer_locations(seed)?;
        // gains come from a stream disjoint from the placement stream
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let power = self.scatterer_power();
        self.users
            .iter()
            .zip(locations)
            .map(|(u, locs)| {
                let loc = PolarPoint::from_degrees(u.angle_deg, u.range_m)?;
                user_channel(&geom, loc, &locs, power, model, &mut rng)
            })
            .collect()
    }

    /// Hash of the canonical JSON form, recorded in every CSV output.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Load and validate a scenario from a JSON file.
pub fn load_scenario(path: &std::path::Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("scenario file {}: {e}", path.display()),
        ))
    })?;
    let scenario: Scenario = serde_json::from_str(&text).map_err(|e| {
        Error::Parse(format!(
            "scenario file {} line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::PathKind;

    #[test]
    fn default_is_valid_and_matches_setup() {
        let s = Scenario::paper_default();
        s.validate().unwrap();
        assert_eq!(s.num_tx_antennas, 256);
        assert_eq!(s.num_rx_antennas, 256);
        assert_eq!(s.carrier_freq_hz, 30e9);
        assert_eq!(s.users.len(), 2);
        assert_eq!(s.users[0].range_m, 5.0);
        assert_eq!(s.users[1].range_m, 15.0);
        assert_eq!(s.users[0].angle_deg, 0.0);
        assert_eq!(s.target.angle_deg, 45.0);
        assert_eq!(s.target.range_m, 5.0);
        assert_eq!(s.users[0].num_scatterers, 2);
        assert_eq!(s.gamma_list_db.len(), 21);
    }

    #[test]
    fn load_missing_file_is_not_found() {
        let err = load_scenario(std::path::Path::new("/nonexistent/scenario.json"))
            .unwrap_err();
        match err {
            Error::Io(ref e) => assert_eq!(e.kind(), std::io::ErrorKind::NotFound),
            other => panic!("expected io error, got {other}"),
        }
    }

    #[test]
    fn unknown_key_rejected_with_context() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let mut json = serde_json::to_value(Scenario::paper_default()).unwrap();
        json.as_object_mut()
            .unwrap()
            .insert("nois_power_w".into(), 1.0.into());
        std::fs::write(&path, serde_json::to_string_pretty(&json).unwrap()).unwrap();
        let err = load_scenario(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("nois_power_w"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn negative_noise_power_names_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let mut s = Scenario::paper_default();
        s.noise_power_w = -1.0;
        std::fs::write(&path, serde_json::to_string_pretty(&s).unwrap()).unwrap();
        let err = load_scenario(&path).unwrap_err();
        assert!(err.to_string().contains("noise_power_w"), "{err}");
    }

    #[test]
    fn roundtrip_preserves_digest() {
        let s = Scenario::paper_default();
        let json = serde_json::to_string(&s).unwrap();
        let back: Scenario = serde_json::from_str(&json).unwrap();
        assert_eq!(s.digest(), back.digest());
        assert_eq!(s.digest().len(), 64);
    }

    #[test]
    fn scatterers_respect_guard_and_bounds() {
        let s = Scenario::paper_default();
        let locs = s.scatterer_locations(s.rng_seed).unwrap();
        assert_eq!(locs.len(), 2);
        let mut all_deg: Vec<f64> = s.users.iter().map(|u| u.angle_deg).collect();
        for per_user in &locs {
            assert_eq!(per_user.len(), 2);
            for p in per_user {
                let deg = p.angle().to_degrees();
                assert!((10.0..60.0).contains(&deg.abs()), "angle {deg}");
                assert!((5.0..50.0).contains(&p.range()), "range {}", p.range());
                for &other in &all_deg {
                    assert!((deg - other).abs() >= 5.0, "guard violated: {deg} vs {other}");
                }
                all_deg.push(deg);
            }
        }
    }

    #[test]
    fn channels_share_paths_across_models() {
        let s = Scenario::paper_default();
        let nf = s.user_channels(ChannelModel::NearField, 7).unwrap();
        let ff = s.user_channels(ChannelModel::FarField, 7).unwrap();
        assert_eq!(nf.len(), 2);
        for (a, b) in nf.iter().zip(ff.iter()) {
            assert_eq!(a.paths.len(), 3);
            assert_eq!(a.paths[0].kind, PathKind::LineOfSight);
            for (pa, pb) in a.paths.iter().zip(b.paths.iter()) {
                assert_eq!(pa.location.angle(), pb.location.angle());
                assert_eq!(pa.location.range(), pb.location.range());
                assert_eq!(pa.gain, pb.gain);
            }
            // responses differ even though paths coincide
            assert!((a.vector.clone() - b.vector.clone()).norm() > 1.0);
        }
    }

    #[test]
    fn channels_deterministic_in_seed() {
        let s = Scenario::paper_default();
        let a = s.user_channels(ChannelModel::NearField, 11).unwrap();
        let b = s.user_channels(ChannelModel::NearField, 11).unwrap();
        let c = s.user_channels(ChannelModel::NearField, 12).unwrap();
        assert_eq!(a[0].vector, b[0].vector);
        assert_ne!(a[0].vector, c[0].vector);
    }

    #[test]
    fn default_floor_tracks_noise() {
        let mut s = Scenario::paper_default();
        s.target_power_floor_w = None;
        let base = s.target_power_floor();
        assert!((base - 0.1 * s.noise_power_w * 256.0).abs() < 1e-15);
        s.target_power_floor_w = Some(0.75);
        assert_eq!(s.target_power_floor(), 0.75);
    }
}
