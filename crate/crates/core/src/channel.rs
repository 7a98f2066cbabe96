//! Single-cell downlink: geometry, link budget and per resource block rates.
//!
//! The eNB sits at the origin of a square cell `[-R, R]^2` that is tiled into
//! a `k x k` grid. Each (user, RB) link sees distance path loss, log-normal
//! shadowing held per grid cell, and i.i.d. Rayleigh (exponential power) fading
//! per slot. Rates come from Shannon capacity over one RB with a spectral
//! efficiency cap.

use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose, StreamRng};

pub type Position = (f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellConfig {
    pub num_enb: u32,
    pub num_users: u32,
    pub num_rbs: u32,
    pub subcarriers_per_rb: u32,
    pub rb_bandwidth_hz: f64,
    pub carrier_freq_hz: f64,
    pub shadowing_std_db: f64,
    pub noise_figure_db: f64,
    pub noise_density_dbm_hz: f64,
    pub grid_k: u32,
    pub cell_radius_m: f64,
    pub enb_tx_power_dbm: f64,
    pub min_distance_m: f64,
    pub se_cap_bps_hz: f64,
}

impl Default for CellConfig {
    fn default() -> Self {
        CellConfig {
            num_enb: 1,
            num_users: 3,
            num_rbs: 9,
            subcarriers_per_rb: 12,
            rb_bandwidth_hz: 180e3,
            carrier_freq_hz: 2e9,
            shadowing_std_db: 8.0,
            noise_figure_db: 9.0,
            noise_density_dbm_hz: -174.0,
            grid_k: 100,
            cell_radius_m: 500.0,
            enb_tx_power_dbm: 46.0,
            min_distance_m: 1.0,
            se_cap_bps_hz: 7.4,
        }
    }
}

impl CellConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_enb", self.num_enb),
            ("num_users", self.num_users),
            ("num_rbs", self.num_rbs),
            ("subcarriers_per_rb", self.subcarriers_per_rb),
            ("grid_k", self.grid_k),
        ];
        for (name, value) in counts {
            if value < 1 {
                return Err(Error::Config(format!("cell.{name} must be >= 1")));
            }
        }
        if self.num_enb != 1 {
            return Err(Error::Config("only a single eNB is supported".into()));
        }
        let positive = [
            ("rb_bandwidth_hz", self.rb_bandwidth_hz),
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("cell_radius_m", self.cell_radius_m),
            ("min_distance_m", self.min_distance_m),
            ("se_cap_bps_hz", self.se_cap_bps_hz),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("cell.{name} must be positive")));
            }
        }
        if !(self.shadowing_std_db.is_finite() && self.shadowing_std_db >= 0.0) {
            return Err(Error::Config("cell.shadowing_std_db must be >= 0".into()));
        }
        if !self.enb_tx_power_dbm.is_finite() || !self.noise_figure_db.is_finite() || !self.noise_density_dbm_hz.is_finite() {
            return Err(Error::Config("cell power levels must be finite".into()));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Geometry {
        Geometry::new(self.cell_radius_m, self.grid_k)
    }

    /// Transmit power per RB with the total split evenly across RBs.
    pub fn per_rb_tx_power_dbm(&self) -> f64 {
        self.enb_tx_power_dbm - 10.0 * (self.num_rbs as f64).log10()
    }

    pub fn rb_noise_power_dbm(&self) -> f64 {
        noise_power_dbm(self.noise_density_dbm_hz, self.rb_bandwidth_hz, self.noise_figure_db)
    }
}

/// Square cell `[-half_width, half_width]^2` tiled into `k x k` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    half_width: f64,
    k: u32,
}

impl Geometry {
    pub fn new(half_width: f64, k: u32) -> Self {
        Geometry { half_width, k: k.max(1) }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn cell_side(&self) -> f64 {
        2.0 * self.half_width / self.k as f64
    }

    pub fn clamp(&self, (x, y): Position) -> Position {
        let r = self.half_width;
        (x.clamp(-r, r), y.clamp(-r, r))
    }

    fn axis_index(&self, v: f64) -> u32 {
        let idx = ((v + self.half_width) / self.cell_side()).floor();
        (idx.max(0.0) as u32).min(self.k - 1)
    }

    /// `(row, col)`: rows follow y, columns follow x, `(0, 0)` at `(-R, -R)`.
    pub fn cell_of(&self, (x, y): Position) -> (u32, u32) {
        (self.axis_index(y), self.axis_index(x))
    }

    pub fn cell_center(&self, (row, col): (u32, u32)) -> Position {
        let side = self.cell_side();
        (
            -self.half_width + (col as f64 + 0.5) * side,
            -self.half_width + (row as f64 + 0.5) * side,
        )
    }
}

/// Moves `speed * ts_len` metres toward `target`, landing exactly on it when
/// closer than one step, and keeps the result inside the cell.
pub fn step_position(position: Position, target: Position, speed: f64, ts_len: f64, geometry: &Geometry) -> Position {
    let step = (speed * ts_len).max(0.0);
    let (dx, dy) = (target.0 - position.0, target.1 - position.1);
    let dist = dx.hypot(dy);
    let next = if dist <= step {
        target
    } else if step == 0.0 {
        position
    } else {
        (position.0 + dx / dist * step, position.1 + dy / dist * step)
    };
    geometry.clamp(next)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Distance attenuation `35.3 + 37.6 log10(d)` with `d` in metres.
pub fn path_loss_db(distance_m: f64, min_distance_m: f64) -> f64 {
    35.3 + 37.6 * distance_m.max(min_distance_m).log10()
}

pub fn noise_power_dbm(density_dbm_hz: f64, bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    density_dbm_hz + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

/// Shannon rate of one RB in Mb/s, capped at `se_cap` b/s/Hz.
pub fn rb_rate(snr: f64, rb_bandwidth_hz: f64, se_cap: f64) -> f64 {
    let se = (1.0 + snr.max(0.0)).log2().min(se_cap);
    rb_bandwidth_hz * se / 1e6
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub path_loss_db: f64,
    pub shadowing_db: f64,
    pub fading_gain: f64,
    pub snr: f64,
    pub rate_mbps: f64,
}

impl LinkState {
    pub fn evaluate(cfg: &CellConfig, path_loss_db: f64, shadowing_db: f64, fading_gain: f64) -> Self {
        let rx_dbm = cfg.per_rb_tx_power_dbm() - path_loss_db - shadowing_db;
        let snr = db_to_linear(rx_dbm - cfg.rb_noise_power_dbm()) * fading_gain;
        LinkState {
            path_loss_db,
            shadowing_db,
            fading_gain,
            snr,
            rate_mbps: rb_rate(snr, cfg.rb_bandwidth_hz, cfg.se_cap_bps_hz),
        }
    }
}

/// Per (user, RB) link table for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    num_users: usize,
    num_rbs: usize,
    links: Vec<LinkState>,
}

impl ChannelState {
    pub fn new(num_users: usize, num_rbs: usize, links: Vec<LinkState>) -> Self {
        assert_eq!(links.len(), num_users * num_rbs, "link table shape mismatch");
        ChannelState { num_users, num_rbs, links }
    }

    /// Table with given rates only; the radio fields are zeroed.
    pub fn from_rates(rates: &[Vec<f64>]) -> Self {
        let num_users = rates.len();
        let num_rbs = rates.first().map_or(0, Vec::len);
        let links = rates
            .iter()
            .flat_map(|row| {
                assert_eq!(row.len(), num_rbs, "ragged rate table");
                row.iter().map(|&rate_mbps| LinkState {
                    path_loss_db: 0.0,
                    shadowing_db: 0.0,
                    fading_gain: 1.0,
                    snr: 0.0,
                    rate_mbps,
                })
            })
            .collect();
        ChannelState { num_users, num_rbs, links }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_rbs(&self) -> usize {
        self.num_rbs
    }

    pub fn link(&self, user: usize, rb: usize) -> &LinkState {
        &self.links[user * self.num_rbs + rb]
    }

    pub fn rate(&self, user: usize, rb: usize) -> f64 {
        self.link(user, rb).rate_mbps
    }

    pub fn user_links(&self, user: usize) -> &[LinkState] {
        &self.links[user * self.num_rbs..(user + 1) * self.num_rbs]
    }
}

/// Channel state of one user: shadowing held per grid cell and a fading
/// stream. Each user owns its random streams.
#[derive(Debug, Clone)]
pub struct UserChannel {
    shadow_rng: StreamRng,
    fading_rng: StreamRng,
    shadow: Option<((u32, u32), f64)>,
}

impl UserChannel {
    pub fn new(seed: u64, user: u64) -> Self {
        UserChannel {
            shadow_rng: rng::stream(seed, user, Purpose::Shadowing),
            fading_rng: rng::stream(seed, user, Purpose::Fading),
            shadow: None,
        }
    }

    fn shadowing_for(&mut self, cell: (u32, u32), std_db: f64) -> f64 {
        match self.shadow {
            Some((held, value)) if held == cell => value,
            _ => {
                let value = if std_db > 0.0 {
                    Normal::new(0.0, std_db).expect("finite std").sample(&mut self.shadow_rng)
                } else {
                    0.0
                };
                self.shadow = Some((cell, value));
                value
            }
        }
    }

    /// Link state on every RB for one slot at `position`.
    pub fn sample(&mut self, cfg: &CellConfig, position: Position) -> Vec<LinkState> {
        let cell = cfg.geometry().cell_of(position);
        let shadowing_db = self.shadowing_for(cell, cfg.shadowing_std_db);
        let distance = position.0.hypot(position.1);
        let pl = path_loss_db(distance, cfg.min_distance_m);
        (0..cfg.num_rbs)
            .map(|_| {
                let gain: f64 = Exp1.sample(&mut self.fading_rng);
                // Exp1 can return exactly 0 only with vanishing probability; keep the gain strictly positive.
                LinkState::evaluate(cfg, pl, shadowing_db, gain.max(f64::MIN_POSITIVE))
            })
            .collect()
    }
}

/// Samples the joint channel table for all users of a run.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    cfg: CellConfig,
    users: Vec<UserChannel>,
}

impl ChannelSampler {
    pub fn new(cfg: CellConfig, seed: u64, num_users: usize) -> Self {
        let users = (0..num_users as u64).map(|u| UserChannel::new(seed, u)).collect();
        ChannelSampler { cfg, users }
    }

    pub fn config(&self) -> &CellConfig {
        &self.cfg
    }

    pub fn sample(&mut self, positions: &[Position]) -> ChannelState {
        assert_eq!(positions.len(), self.users.len(), "one position per user");
        let cfg = &self.cfg;
        let links = self
            .users
            .iter_mut()
            .zip(positions)
            .flat_map(|(user, &pos)| user.sample(cfg, pos))
            .collect();
        ChannelState::new(self.users.len(), cfg.num_rbs as usize, links)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn path_loss_reference_points() {
        assert_eq!(path_loss_db(1.0, 1.0), 35.3);
        assert!(close(path_loss_db(100.0, 1.0), 110.5, 1e-9));
        // 35.3 + 37.6 * 2.698970 = 136.7813
        assert!(close(path_loss_db(500.0, 1.0), 136.7813, 1e-4));
        // below the minimum distance the loss is clamped
        assert_eq!(path_loss_db(0.2, 1.0), 35.3);
    }

    #[test]
    fn noise_power_reference_points() {
        assert!(close(noise_power_dbm(-174.0, 180e3, 9.0), -112.45, 0.01));
        assert_eq!(noise_power_dbm(-174.0, 1.0, 0.0), -174.0);
        let diff = noise_power_dbm(-174.0, 360e3, 9.0) - noise_power_dbm(-174.0, 180e3, 9.0);
        assert!(close(diff, 3.0103, 1e-4));
    }

    #[test]
    fn rb_rate_reference_points() {
        assert_eq!(rb_rate(0.0, 180e3, 7.4), 0.0);
        assert!(close(rb_rate(1.0, 180e3, 7.4), 0.18, 1e-12));
        assert!(close(rb_rate(1e6, 180e3, 7.4), 1.332, 1e-12));
    }

    #[test]
    fn per_rb_power_split() {
        let cfg = CellConfig::default();
        assert!(close(cfg.per_rb_tx_power_dbm(), 36.4576, 1e-4));
    }

    #[test]
    fn zero_fading_means_zero_rate() {
        let cfg = CellConfig::default();
        let link = LinkState::evaluate(&cfg, 100.0, 0.0, 0.0);
        assert_eq!(link.snr, 0.0);
        assert_eq!(link.rate_mbps, 0.0);
    }

    #[test]
    fn grid_tiling() {
        let g = Geometry::new(500.0, 100);
        assert!(close(g.cell_side(), 10.0, 1e-12));
        assert_eq!(g.cell_of((-500.0, -500.0)), (0, 0));
        assert_eq!(g.cell_of((500.0, 500.0)), (99, 99));
        assert_eq!(g.cell_of((0.0, 0.0)), (50, 50));
        assert_eq!(g.cell_of((-0.1, 12.0)), (51, 49));
        assert_eq!(g.cell_of(g.cell_center((3, 97))), (3, 97));
    }

    #[test]
    fn stepping() {
        let g = Geometry::new(500.0, 100);
        assert_eq!(step_position((3.0, 4.0), (100.0, 100.0), 0.0, 1.0, &g), (3.0, 4.0));
        assert_eq!(step_position((0.0, 0.0), (1.0, 1.0), 5.0, 1.0, &g), (1.0, 1.0));
        let p = step_position((0.0, 0.0), (30.0, 40.0), 5.0, 1.0, &g);
        assert!(close(p.0, 3.0, 1e-12) && close(p.1, 4.0, 1e-12));
        assert_eq!(step_position((499.0, 0.0), (900.0, 0.0), 10.0, 1.0, &g), (500.0, 0.0));
    }

    #[test]
    fn shadowing_held_within_cell() {
        let cfg = CellConfig::default();
        let mut user = UserChannel::new(3, 0);
        let a = user.sample(&cfg, (101.0, 101.0))[0].shadowing_db;
        let b = user.sample(&cfg, (102.0, 103.0))[0].shadowing_db;
        let c = user.sample(&cfg, (150.0, 103.0))[0].shadowing_db;
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sampler_is_deterministic() {
        let positions = [(10.0, 20.0), (-200.0, 50.0)];
        let mut s1 = ChannelSampler::new(CellConfig::default(), 11, 2);
        let mut s2 = ChannelSampler::new(CellConfig::default(), 11, 2);
        for _ in 0..5 {
            assert_eq!(s1.sample(&positions), s2.sample(&positions));
        }
    }

    proptest! {
        #[test]
        fn db_round_trip(db in -200.0f64..200.0) {
            let back = linear_to_db(db_to_linear(db));
            prop_assert!((back - db).abs() <= 1e-9 * db.abs().max(1.0));
        }

        #[test]
        fn snr_monotone_in_distance(d1 in 1.0f64..700.0, extra in 0.0f64..300.0, shadow in -20.0f64..20.0, gain in 1e-4f64..10.0) {
            let cfg = CellConfig::default();
            let near = LinkState::evaluate(&cfg, path_loss_db(d1, 1.0), shadow, gain);
            let far = LinkState::evaluate(&cfg, path_loss_db(d1 + extra, 1.0), shadow, gain);
            prop_assert!(far.snr <= near.snr);
            prop_assert!(far.rate_mbps <= near.rate_mbps);
        }
    }
}
