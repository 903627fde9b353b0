//! Cell geometry, large-scale fading and Rayleigh small-scale fading.

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelSet, SystemConfig};
use crate::seeding;

const DROP_TAG: u64 = 0xD0;
const FADING_TAG: u64 = 0xFA;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Layout {
    /// Three adjacent hexagonal cells meeting at the origin. Cells beyond
    /// the first `K` sites are unused.
    #[default]
    HexCluster3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub cell_radius_m: f64,
    pub min_user_distance_m: f64,
    /// Path-loss slope in dB per decade of distance.
    pub pathloss_a: f64,
    /// Path-loss intercept in dB.
    pub pathloss_b: f64,
    pub shadow_std_db: f64,
    pub layout: Layout,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            cell_radius_m: 500.0,
            min_user_distance_m: 400.0,
            pathloss_a: 38.0,
            pathloss_b: -34.5,
            shadow_std_db: 8.0,
            layout: Layout::HexCluster3,
        }
    }
}

impl GeometryConfig {
    /// Small-cell profile: 100 m radius, 70 m minimum distance, `−30 log10 d − 38`.
    pub fn small_cell() -> Self {
        Self {
            cell_radius_m: 100.0,
            min_user_distance_m: 70.0,
            pathloss_a: 30.0,
            pathloss_b: -38.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_user_distance_m > 0.0) || !(self.min_user_distance_m < self.cell_radius_m) {
            return Err(Error::Config(format!(
                "minimum user distance {} m must lie in (0, cell radius {} m)",
                self.min_user_distance_m, self.cell_radius_m
            )));
        }
        if !(self.shadow_std_db >= 0.0) || !self.shadow_std_db.is_finite() {
            return Err(Error::Config("shadowing standard deviation must be non-negative".into()));
        }
        if !self.pathloss_a.is_finite() || !self.pathloss_b.is_finite() {
            return Err(Error::Config("path-loss coefficients must be finite".into()));
        }
        Ok(())
    }

    fn sites(&self, cells: usize) -> Result<Vec<[f64; 2]>> {
        match self.layout {
            Layout::HexCluster3 => {
                if cells > 3 {
                    return Err(Error::Config(format!("HexCluster3 layout holds at most 3 cells, got {cells}")));
                }
                Ok([90.0f64, 210.0, 330.0]
                    .iter()
                    .take(cells)
                    .map(|deg| {
                        let a = deg.to_radians();
                        [self.cell_radius_m * a.cos(), self.cell_radius_m * a.sin()]
                    })
                    .collect())
            }
        }
    }
}

/// Thermal noise power in dBm over `bandwidth_hz` with the given noise figure.
pub fn noise_power_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    -174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

/// Distance-dependent path loss `−a log10 d + b`, without shadowing.
pub fn pathloss_db(geom: &GeometryConfig, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("distance {d} m must be positive")));
    }
    Ok(-geom.pathloss_a * d.log10() + geom.pathloss_b)
}

/// One random placement of users plus the large-scale gains of every link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropRealization {
    pub bs_positions: Vec<[f64; 2]>,
    /// `user_positions[j][k]`.
    pub user_positions: Vec<Vec<[f64; 2]>>,
    /// `distances[m][j][k]` from BS `m` to user `(j, k)`.
    pub distances: Vec<Vec<Vec<f64>>>,
    /// Shadowing draw of each link, in dB.
    pub shadow_db: Vec<Vec<Vec<f64>>>,
    /// Linear large-scale gain including shadowing.
    pub theta: Vec<Vec<Vec<f64>>>,
    pub seed: u64,
}

impl DropRealization {
    fn check_shape(&self, cfg: &SystemConfig) -> Result<()> {
        let ok = self.theta.len() == cfg.cells
            && self
                .theta
                .iter()
                .all(|tm| tm.len() == cfg.cells && tm.iter().zip(&cfg.users).all(|(t, &n)| t.len() == n));
        if ok {
            Ok(())
        } else {
            Err(Error::Config("drop realization does not match the system configuration".into()))
        }
    }
}

/// Places `N_j` users in the outward 120° sector of each cell, at a radius
/// uniform in `[min_user_distance, cell_radius]`, and draws i.i.d. shadowing.
pub fn drop_users(geom: &GeometryConfig, cfg: &SystemConfig, seed: u64) -> Result<DropRealization> {
    geom.validate()?;
    let bs = geom.sites(cfg.cells)?;
    let mut rng = seeding::stream(seed, DROP_TAG);
    let users: Vec<Vec<[f64; 2]>> = (0..cfg.cells)
        .map(|j| {
            let facing = bs[j][1].atan2(bs[j][0]);
            (0..cfg.users[j])
                .map(|_| {
                    let angle = facing + rng.random_range(-1.0..1.0) * std::f64::consts::FRAC_PI_3;
                    let r = rng.random_range(geom.min_user_distance_m..=geom.cell_radius_m);
                    [bs[j][0] + r * angle.cos(), bs[j][1] + r * angle.sin()]
                })
                .collect()
        })
        .collect();
    let shadow = Normal::new(0.0, geom.shadow_std_db).map_err(|e| Error::Config(e.to_string()))?;

    let mut distances = Vec::with_capacity(cfg.cells);
    let mut shadow_db = Vec::with_capacity(cfg.cells);
    let mut theta = Vec::with_capacity(cfg.cells);
    for b in &bs {
        let mut dm = Vec::with_capacity(cfg.cells);
        let mut sm = Vec::with_capacity(cfg.cells);
        let mut tm = Vec::with_capacity(cfg.cells);
        for cell in &users {
            let d: Vec<f64> = cell.iter().map(|u| (u[0] - b[0]).hypot(u[1] - b[1])).collect();
            let s: Vec<f64> = d.iter().map(|_| shadow.sample(&mut rng)).collect();
            let t = d
                .iter()
                .zip(&s)
                .map(|(&d, &s)| Ok(10f64.powf((pathloss_db(geom, d)? + s) / 10.0)))
                .collect::<Result<Vec<f64>>>()?;
            dm.push(d);
            sm.push(s);
            tm.push(t);
        }
        distances.push(dm);
        shadow_db.push(sm);
        theta.push(tm);
    }
    Ok(DropRealization {
        bs_positions: bs,
        user_positions: users,
        distances,
        shadow_db,
        theta,
        seed,
    })
}

/// `h[m][j][k] = √θ_{m,j,k} · h^w` with `h^w ~ CN(0, I)`.
pub fn generate_channels(cfg: &SystemConfig, drop: &DropRealization, seed: u64) -> Result<ChannelSet> {
    drop.check_shape(cfg)?;
    let mut rng = seeding::stream(seed, FADING_TAG);
    let h = (0..cfg.cells)
        .map(|m| {
            (0..cfg.cells)
                .map(|j| {
                    (0..cfg.users[j])
                        .map(|k| {
                            let amp = (drop.theta[m][j][k] * 0.5).sqrt();
                            (0..cfg.antennas[m])
                                .map(|_| {
                                    let re: f64 = StandardNormal.sample(&mut rng);
                                    let im: f64 = StandardNormal.sample(&mut rng);
                                    Complex64::new(re * amp, im * amp)
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(ChannelSet { h })
}

/// Drop plus channels from one seed.
pub fn realize(geom: &GeometryConfig, cfg: &SystemConfig, seed: u64) -> Result<(DropRealization, ChannelSet)> {
    let drop = drop_users(geom, cfg, seed)?;
    let h = generate_channels(cfg, &drop, seed)?;
    Ok((drop, h))
}

/// On-disk channel fixture: every coefficient as an `[re, im]` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub channels: ChannelSet,
}

impl ChannelFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(f, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(f)?)
    }
}
