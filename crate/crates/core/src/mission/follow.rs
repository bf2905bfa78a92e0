use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::vfh::{vfh_steer, VfhConfig};
use crate::robot::{normalize_angle, step_odom, step_true, NoiseModel, Pose, RobotError};
use crate::sensors::{lidar_scan, LidarConfig};
use crate::world::GridMap;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FollowError {
    #[error("no waypoints to follow")]
    NoWaypoints,
    #[error("start ({x:.3}, {y:.3}) is not in a free cell")]
    StartBlocked { x: f64, y: f64 },
    #[error("invalid controller config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Robot(#[from] RobotError),
}

/// Waypoint follower settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub dt: f64,
    pub v_max: f64,
    pub w_max: f64,
    /// Angular speed per radian of heading error.
    pub heading_gain: f64,
    pub capture_radius: f64,
    /// The run succeeds when the true pose ends this close to the last waypoint.
    pub goal_tolerance: f64,
    pub stall_window_s: f64,
    /// Getting this much closer to the active waypoint counts as progress.
    pub stall_progress_m: f64,
    /// Time budget as a multiple of the noiseless travel estimate.
    pub time_budget_factor: f64,
    /// Carrot distance along the reference line.
    pub lookahead_m: f64,
    /// Fraction of the odometry error removed when an intermediate waypoint is
    /// captured (the robot recognises the waypoint's surroundings).
    pub waypoint_fix_gain: f64,
    /// Local obstacle steering from a short lidar sweep.
    pub vfh: Option<VfhConfig>,
    pub vfh_lidar: LidarConfig,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            dt: 0.1,
            v_max: 0.4,
            w_max: 1.0,
            heading_gain: 2.0,
            capture_radius: 0.3,
            goal_tolerance: 0.75,
            stall_window_s: 10.0,
            stall_progress_m: 0.05,
            time_budget_factor: 3.0,
            lookahead_m: 0.3,
            waypoint_fix_gain: 0.8,
            vfh: None,
            vfh_lidar: LidarConfig {
                fov: 240f64.to_radians(),
                beam_count: 61,
                max_range: 2.0,
                range_noise_sigma: 0.0,
            },
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), FollowError> {
        let positive = [
            self.dt,
            self.v_max,
            self.w_max,
            self.heading_gain,
            self.capture_radius,
            self.goal_tolerance,
            self.stall_window_s,
            self.time_budget_factor,
            self.lookahead_m,
        ];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite())
            || !(self.stall_progress_m >= 0.0)
            || !(0.0..=1.0).contains(&self.waypoint_fix_gain)
        {
            return Err(FollowError::InvalidConfig(format!("{self:?}")));
        }
        if self.vfh.is_some() {
            self.vfh_lidar.validate().map_err(|e| FollowError::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    /// Final waypoint captured with the true pose inside the goal tolerance.
    Reached,
    /// Odometry captured the final waypoint but the robot is really elsewhere.
    Missed,
    Timeout,
    Stuck,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Reached => "Reached",
            Outcome::Missed => "Missed",
            Outcome::Timeout => "Timeout",
            Outcome::Stuck => "Stuck",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tick {
    pub t: f64,
    pub true_pose: Pose,
    pub odom_pose: Pose,
    pub waypoint: usize,
    pub v: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelLog {
    pub ticks: Vec<Tick>,
    pub outcome: Outcome,
    pub elapsed: f64,
    pub waypoints_captured: usize,
    pub collisions: usize,
    pub final_true: Pose,
    pub final_odom: Pose,
    /// True-pose distance to the last waypoint at the end of the run.
    pub goal_error: f64,
}

impl TravelLog {
    /// `t,x_true,y_true,theta_true,x_odom,y_odom,theta_odom` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x_true,y_true,theta_true,x_odom,y_odom,theta_odom\n");
        for k in &self.ticks {
            let (a, b) = (k.true_pose, k.odom_pose);
            writeln!(out, "{:.3},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}", k.t, a.x, a.y, a.theta, b.x, b.y, b.theta)
                .expect("writing to a String cannot fail");
        }
        out
    }
}

/// A polyline with cumulative arc length.
#[derive(Debug, Clone)]
struct Guide {
    points: Vec<(f64, f64)>,
    s: Vec<f64>,
}

impl Guide {
    fn new(mut points: Vec<(f64, f64)>) -> Self {
        points.dedup();
        let mut s = vec![0.0];
        for w in points.windows(2) {
            let last = *s.last().expect("non-empty");
            s.push(last + (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1));
        }
        Guide { points, s }
    }

    fn length(&self) -> f64 {
        *self.s.last().expect("non-empty")
    }

    fn point_at(&self, s: f64) -> (f64, f64) {
        let s = s.clamp(0.0, self.length());
        let i = self.s.partition_point(|&v| v <= s).saturating_sub(1).min(self.points.len().saturating_sub(2));
        if self.points.len() == 1 {
            return self.points[0];
        }
        let seg = self.s[i + 1] - self.s[i];
        let f = if seg > 0.0 { (s - self.s[i]) / seg } else { 0.0 };
        let (a, b) = (self.points[i], self.points[i + 1]);
        (a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1))
    }

    /// Arc position of the closest point within `[lo, hi]`.
    fn project(&self, x: f64, y: f64, lo: f64, hi: f64) -> f64 {
        let mut best = (f64::INFINITY, lo);
        for i in 0..self.points.len().saturating_sub(1) {
            if self.s[i + 1] < lo || self.s[i] > hi {
                continue;
            }
            let (a, b) = (self.points[i], self.points[i + 1]);
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len2 = dx * dx + dy * dy;
            let f = if len2 > 0.0 { (((x - a.0) * dx + (y - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let s = (self.s[i] + f * (self.s[i + 1] - self.s[i])).clamp(lo, hi);
            let (px, py) = self.point_at(s);
            let d = (px - x).hypot(py - y);
            if d < best.0 {
                best = (d, s);
            }
        }
        best.1
    }

    /// Arc positions of each waypoint, matched to guide vertices in order.
    fn locate(&self, waypoints: &[Pose]) -> Vec<f64> {
        let mut from = 0;
        waypoints
            .iter()
            .map(|w| {
                let hit = (from..self.points.len())
                    .min_by(|&a, &b| {
                        let da = (self.points[a].0 - w.x).hypot(self.points[a].1 - w.y);
                        let db = (self.points[b].0 - w.x).hypot(self.points[b].1 - w.y);
                        da.total_cmp(&db).then(a.cmp(&b))
                    })
                    .unwrap_or(self.points.len() - 1);
                from = hit;
                self.s[hit]
            })
            .collect()
    }
}

/// Closed-loop waypoint follower, advanced one control tick at a time.
///
/// Steering uses the odometry pose; the true pose moves with the commanded
/// twist and is only used for collisions and for judging the result.
#[derive(Debug, Clone)]
pub struct Follower {
    cfg: ControllerConfig,
    noise: NoiseModel,
    true_pose: Pose,
    odom: Pose,
    guide: Guide,
    waypoints: Vec<Pose>,
    wp_s: Vec<f64>,
    active: usize,
    progress: f64,
    steps: u64,
    t0: f64,
    waited: f64,
    best_dist: f64,
    /// Arc length along the guide at the last recorded progress.
    best_s: f64,
    last_progress_t: f64,
    budget: f64,
    ticks: Vec<Tick>,
    captured: usize,
    collisions: usize,
}

impl Follower {
    /// Starts a run along `guide`, a reference polyline through the waypoints.
    /// `t0` offsets the clock of the recorded ticks.
    pub fn new(
        map: &GridMap,
        start_true: Pose,
        start_odom: Pose,
        guide: Vec<(f64, f64)>,
        waypoints: Vec<Pose>,
        noise: NoiseModel,
        cfg: ControllerConfig,
        t0: f64,
    ) -> Result<Self, FollowError> {
        cfg.validate()?;
        noise.validate()?;
        if waypoints.is_empty() {
            return Err(FollowError::NoWaypoints);
        }
        if !map.is_free_at(start_true.x, start_true.y) {
            return Err(FollowError::StartBlocked { x: start_true.x, y: start_true.y });
        }
        let mut f = Follower {
            cfg,
            noise,
            true_pose: start_true,
            odom: start_odom,
            guide: Guide::new(vec![(0.0, 0.0)]),
            waypoints: Vec::new(),
            wp_s: Vec::new(),
            active: 0,
            progress: 0.0,
            steps: 0,
            t0,
            waited: 0.0,
            best_dist: f64::INFINITY,
            best_s: 0.0,
            last_progress_t: t0,
            budget: 0.0,
            ticks: Vec::new(),
            captured: 0,
            collisions: 0,
        };
        f.set_route(guide, waypoints);
        f.budget = cfg.time_budget_factor * f.estimate();
        Ok(f)
    }

    /// Replaces the remaining route, keeping poses, clock and log.
    pub fn set_route(&mut self, guide: Vec<(f64, f64)>, waypoints: Vec<Pose>) {
        let mut points = vec![(self.odom.x, self.odom.y)];
        points.extend(guide);
        points.extend(waypoints.last().map(|w| (w.x, w.y)));
        self.guide = Guide::new(points);
        self.wp_s = self.guide.locate(&waypoints);
        self.waypoints = waypoints;
        self.active = 0;
        self.progress = 0.0;
        self.best_dist = f64::INFINITY;
        self.best_s = 0.0;
        self.last_progress_t = self.now();
    }

    /// Noiseless travel time over the current route.
    pub fn estimate(&self) -> f64 {
        travel_estimate(self.odom.theta, &self.guide.points, &self.cfg)
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn set_budget(&mut self, seconds: f64) {
        self.budget = seconds;
    }

    pub fn now(&self) -> f64 {
        self.t0 + self.waited + self.steps as f64 * self.cfg.dt
    }

    pub fn true_pose(&self) -> Pose {
        self.true_pose
    }

    pub fn odom_pose(&self) -> Pose {
        self.odom
    }

    pub fn active_waypoint(&self) -> usize {
        self.active
    }

    pub fn waypoints(&self) -> &[Pose] {
        &self.waypoints
    }

    fn target(&mut self) -> (f64, f64) {
        let goal_s = self.wp_s[self.active];
        let lo = self.progress.min(goal_s);
        let proj = self.guide.project(self.odom.x, self.odom.y, lo, goal_s);
        self.progress = self.progress.max(proj);
        let s = (self.progress + self.cfg.lookahead_m).min(goal_s);
        if (goal_s - s).abs() < 1e-9 {
            let w = self.waypoints[self.active];
            (w.x, w.y)
        } else {
            self.guide.point_at(s)
        }
    }

    /// One control tick. Returns the outcome once the run is over.
    pub fn step<R: Rng + ?Sized>(&mut self, map: &GridMap, rng: &mut R) -> Result<Option<Outcome>, FollowError> {
        let cfg = self.cfg;
        let (tx, ty) = self.target();
        let mut err = normalize_angle((ty - self.odom.y).atan2(tx - self.odom.x) - self.odom.theta);
        if let Some(vfh) = &cfg.vfh {
            if err.abs() < cfg.vfh_lidar.fov / 2.0 {
                if let Ok(scan) = lidar_scan(map, &self.true_pose, &cfg.vfh_lidar, rng) {
                    err = vfh_steer(&scan, err, vfh).unwrap_or(err);
                }
            }
        }
        let w = (cfg.heading_gain * err).clamp(-cfg.w_max, cfg.w_max);
        let mut v = cfg.v_max * err.cos().max(0.0);
        let mut next = step_true(&self.true_pose, v, w, cfg.dt)?;
        if !map.is_free_at(next.x, next.y) {
            self.collisions += 1;
            // Slide along the wall on one axis if possible, else turn in place.
            let p = self.true_pose;
            let along_x = (next.x - p.x).abs() >= (next.y - p.y).abs();
            let mut slides = [(next.x, p.y), (p.x, next.y)];
            if !along_x {
                slides.swap(0, 1);
            }
            let step_len = next.distance_to(p.x, p.y);
            let slide = slides.into_iter().find(|&(x, y)| {
                map.is_free_at(x, y) && (x - p.x).hypot(y - p.y) > 0.3 * step_len
            });
            match slide {
                Some((x, y)) => {
                    v = v.signum() * (x - p.x).hypot(y - p.y) / cfg.dt;
                    next = Pose::new(x, y, next.theta);
                }
                None => {
                    v = 0.0;
                    next = step_true(&p, 0.0, w, cfg.dt)?;
                }
            }
        }
        self.true_pose = next;
        self.odom = step_odom(&self.odom, v, w, cfg.dt, &self.noise, rng)?;
        self.steps += 1;
        let t = self.now();
        self.ticks.push(Tick { t, true_pose: self.true_pose, odom_pose: self.odom, waypoint: self.active, v, w });

        let wp = self.waypoints[self.active];
        let d = self.odom.distance_to(wp.x, wp.y);
        if d <= cfg.capture_radius {
            self.captured += 1;
            if self.active + 1 == self.waypoints.len() {
                let ok = self.true_pose.distance_to(wp.x, wp.y) <= cfg.goal_tolerance;
                return Ok(Some(if ok { Outcome::Reached } else { Outcome::Missed }));
            }
            let g = cfg.waypoint_fix_gain;
            self.odom = Pose::new(
                self.odom.x + g * (self.true_pose.x - self.odom.x),
                self.odom.y + g * (self.true_pose.y - self.odom.y),
                self.odom.theta + g * normalize_angle(self.true_pose.theta - self.odom.theta),
            );
            self.active += 1;
            self.progress = self.progress.max(self.wp_s[self.active - 1]);
            self.best_dist = f64::INFINITY;
            self.last_progress_t = t;
        } else if d < self.best_dist - cfg.stall_progress_m || self.progress > self.best_s + cfg.stall_progress_m {
            // Moving closer, or further along a route that bends away first.
            self.best_dist = self.best_dist.min(d);
            self.best_s = self.best_s.max(self.progress);
            self.last_progress_t = t;
        } else if t - self.last_progress_t >= cfg.stall_window_s - 1e-9 {
            return Ok(Some(Outcome::Stuck));
        }
        if t - self.t0 >= self.budget - 1e-9 {
            return Ok(Some(Outcome::Timeout));
        }
        Ok(None)
    }

    /// Moves both poses by the same displacement, as an elevator ride does.
    pub fn teleport(&mut self, true_pose: Pose) {
        let (dx, dy) = (self.odom.x - self.true_pose.x, self.odom.y - self.true_pose.y);
        self.true_pose = true_pose;
        self.odom = Pose::new(true_pose.x + dx, true_pose.y + dy, self.odom.theta);
    }

    /// Advances the clock without moving, e.g. while waiting for a door.
    pub fn wait(&mut self, seconds: f64) {
        self.waited += seconds;
        self.last_progress_t += seconds;
    }

    pub fn finish(self, outcome: Outcome) -> TravelLog {
        let wp = *self.waypoints.last().expect("non-empty");
        TravelLog {
            elapsed: self.now(),
            outcome,
            waypoints_captured: self.captured,
            collisions: self.collisions,
            final_true: self.true_pose,
            final_odom: self.odom,
            goal_error: self.true_pose.distance_to(wp.x, wp.y),
            ticks: self.ticks,
        }
    }
}

/// Noiseless time to drive a polyline starting at `heading`: distance at
/// full speed plus heading changes at full turn rate.
pub(crate) fn travel_estimate(heading: f64, points: &[(f64, f64)], cfg: &ControllerConfig) -> f64 {
    let mut turn = 0.0;
    let mut length = 0.0;
    let mut heading = heading;
    for w in points.windows(2) {
        let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        if dx == 0.0 && dy == 0.0 {
            continue;
        }
        let h = dy.atan2(dx);
        turn += normalize_angle(h - heading).abs();
        length += dx.hypot(dy);
        heading = h;
    }
    length / cfg.v_max + turn / cfg.w_max
}

/// Runs a follower straight through `waypoints` from `start` until it
/// succeeds, misses, stalls or runs out of time.
pub fn follow_path<R: Rng + ?Sized>(
    map: &GridMap,
    start: Pose,
    waypoints: &[Pose],
    noise: &NoiseModel,
    cfg: &ControllerConfig,
    rng: &mut R,
) -> Result<TravelLog, FollowError> {
    follow_route(map, start, &[], waypoints, noise, cfg, rng)
}

/// Like [`follow_path`], but tracks the reference polyline `guide` (for
/// example a planned cell path) between waypoints.
pub fn follow_route<R: Rng + ?Sized>(
    map: &GridMap,
    start: Pose,
    guide: &[(f64, f64)],
    waypoints: &[Pose],
    noise: &NoiseModel,
    cfg: &ControllerConfig,
    rng: &mut R,
) -> Result<TravelLog, FollowError> {
    let guide = if guide.is_empty() { waypoints.iter().map(|w| (w.x, w.y)).collect() } else { guide.to_vec() };
    let mut f = Follower::new(map, start, start, guide, waypoints.to_vec(), *noise, *cfg, 0.0)?;
    loop {
        if let Some(outcome) = f.step(map, rng)? {
            return Ok(f.finish(outcome));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use crate::world::CellState;

    fn corridor(len_m: f64) -> GridMap {
        let w = (len_m / 0.1) as usize + 20;
        let mut m = GridMap::new(w, 30, 0.1, CellState::Free).unwrap();
        for x in 0..w {
            m.set_state(crate::world::Cell::new(x, 0), CellState::Occupied).unwrap();
            m.set_state(crate::world::Cell::new(x, 29), CellState::Occupied).unwrap();
        }
        m
    }

    #[test]
    fn noiseless_straight_run() {
        let map = corridor(20.0);
        let cfg = ControllerConfig::default();
        let start = Pose::new(0.55, 1.45, 0.0);
        let goal = Pose::new(20.55, 1.45, 0.0);
        let log = follow_path(&map, start, &[goal], &NoiseModel::NONE, &cfg, &mut seeded_rng(0)).unwrap();
        assert_eq!(log.outcome, Outcome::Reached);
        let ideal = 20.0 / cfg.v_max;
        assert!((log.elapsed - ideal).abs() <= 0.1 * ideal, "elapsed {}", log.elapsed);
        assert_eq!(log.ticks.last().unwrap().t, log.elapsed);
        assert!(log.collisions == 0);
    }

    #[test]
    fn noiseless_any_spacing_reaches() {
        let map = corridor(12.0);
        let start = Pose::new(0.55, 1.45, 0.0);
        for k in 1..=6 {
            let wps: Vec<Pose> =
                (1..=k).map(|i| Pose::new(0.55 + 12.0 * i as f64 / k as f64, 1.45, 0.0)).collect();
            let log =
                follow_path(&map, start, &wps, &NoiseModel::NONE, &ControllerConfig::default(), &mut seeded_rng(1))
                    .unwrap();
            assert_eq!(log.outcome, Outcome::Reached, "k = {k}");
            assert_eq!(log.waypoints_captured, k);
        }
    }

    #[test]
    fn wall_in_the_way_stalls() {
        let mut map = corridor(10.0);
        for y in 0..30 {
            map.set_state(crate::world::Cell::new(40, y), CellState::Occupied).unwrap();
        }
        let start = Pose::new(0.55, 1.45, 0.0);
        let log = follow_path(
            &map,
            start,
            &[Pose::new(8.0, 1.45, 0.0)],
            &NoiseModel::NONE,
            &ControllerConfig::default(),
            &mut seeded_rng(2),
        )
        .unwrap();
        assert_eq!(log.outcome, Outcome::Stuck);
        assert!(log.collisions > 0);
        assert!(log.ticks.iter().all(|t| map.is_free_at(t.true_pose.x, t.true_pose.y)));
    }

    #[test]
    fn deterministic_with_noise() {
        let map = corridor(10.0);
        let start = Pose::new(0.55, 1.45, 0.0);
        let wps = [Pose::new(5.0, 1.45, 0.0), Pose::new(10.0, 1.45, 0.0)];
        let run = || {
            follow_path(&map, start, &wps, &NoiseModel::DEFAULT, &ControllerConfig::default(), &mut seeded_rng(5))
                .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn trajectory_csv_header() {
        let map = corridor(2.0);
        let log = follow_path(
            &map,
            Pose::new(0.55, 1.45, 0.0),
            &[Pose::new(1.55, 1.45, 0.0)],
            &NoiseModel::NONE,
            &ControllerConfig::default(),
            &mut seeded_rng(0),
        )
        .unwrap();
        let csv = log.to_csv();
        assert!(csv.starts_with("t,x_true,y_true,theta_true,x_odom,y_odom,theta_odom\n"));
        assert_eq!(csv.lines().count(), log.ticks.len() + 1);
    }

    #[test]
    fn guide_geometry() {
        let g = Guide::new(vec![(0.0, 0.0), (3.0, 0.0), (3.0, 4.0)]);
        assert_eq!(g.length(), 7.0);
        assert_eq!(g.point_at(5.0), (3.0, 2.0));
        assert_eq!(g.project(1.0, 1.0, 0.0, 7.0), 1.0);
        assert_eq!(g.project(4.0, 3.0, 0.0, 7.0), 6.0);
    }
}
