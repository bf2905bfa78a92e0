//! Differential-drive (unicycle) kinematics and a slip-based odometry model.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RobotError {
    #[error("time step must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("invalid drive: {distance} m at {speed} m/s")]
    InvalidDrive { distance: f64, speed: f64 },
}

/// Wraps an angle into `(-PI, PI]`.
pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a > PI {
        a - TAU
    } else {
        a
    }
}

/// Planar pose: metres and a heading in `(-PI, PI]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose { x, y, theta: normalize_angle(theta) }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }
}

/// Euclidean distance between two poses' positions.
pub fn pose_error(true_pose: &Pose, odom_pose: &Pose) -> f64 {
    (true_pose.x - odom_pose.x).hypot(true_pose.y - odom_pose.y)
}

/// Integrates a constant twist `(v, w)` for `dt` seconds exactly.
pub fn step_true(pose: &Pose, v: f64, w: f64, dt: f64) -> Result<Pose, RobotError> {
    if !(dt > 0.0) {
        return Err(RobotError::NonPositiveDt(dt));
    }
    Ok(integrate(pose, v, w, dt))
}

fn integrate(pose: &Pose, v: f64, w: f64, dt: f64) -> Pose {
    if w.abs() < 1e-9 {
        // Straight motion along the mean heading of the step.
        let mid = pose.theta + 0.5 * w * dt;
        return Pose::new(
            pose.x + v * dt * mid.cos(),
            pose.y + v * dt * mid.sin(),
            pose.theta + w * dt,
        );
    }
    let r = v / w;
    let theta1 = pose.theta + w * dt;
    Pose::new(
        pose.x + r * (theta1.sin() - pose.theta.sin()),
        pose.y - r * (theta1.cos() - pose.theta.cos()),
        theta1,
    )
}

/// Odometry slip parameters.
///
/// Per step, the commanded speeds are perturbed as
/// `v' = v * bias_v * (1 + e_v)` and `w' = w * (1 + e_w)` with
/// `e_v ~ N(0, v_sigma_per_m^2 / d)` for a step of length `d` metres and
/// `e_w ~ N(0, w_sigma_per_rad^2 / a)` for a turn of `a` radians. The
/// resulting position error variance grows linearly with distance travelled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub v_sigma_per_m: f64,
    pub w_sigma_per_rad: f64,
    pub bias_v: f64,
}

impl NoiseModel {
    /// Calibrated so 40 m straight runs end with a mean odometry gap of about
    /// 0.7 m (see `examples/calibrate_noise.rs`).
    pub const DEFAULT: NoiseModel = NoiseModel {
        v_sigma_per_m: 0.138,
        w_sigma_per_rad: 0.02,
        bias_v: 1.0,
    };

    pub const NONE: NoiseModel = NoiseModel {
        v_sigma_per_m: 0.0,
        w_sigma_per_rad: 0.0,
        bias_v: 1.0,
    };

    pub fn validate(&self) -> Result<(), RobotError> {
        if !(self.v_sigma_per_m >= 0.0) || !(self.w_sigma_per_rad >= 0.0) {
            return Err(RobotError::InvalidNoise("sigmas must be non-negative".into()));
        }
        if !(self.bias_v > 0.5 && self.bias_v < 1.5) {
            return Err(RobotError::InvalidNoise(format!("bias_v {} outside (0.5, 1.5)", self.bias_v)));
        }
        Ok(())
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::DEFAULT
    }
}

/// Advances an odometry estimate with slip-perturbed commands.
///
/// Two standard normals are drawn every call so the random stream advances
/// identically whatever the command.
pub fn step_odom<R: Rng + ?Sized>(
    odom: &Pose,
    v: f64,
    w: f64,
    dt: f64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Pose, RobotError> {
    if !(dt > 0.0) {
        return Err(RobotError::NonPositiveDt(dt));
    }
    let zv: f64 = rng.sample(StandardNormal);
    let zw: f64 = rng.sample(StandardNormal);
    let dist = v.abs() * dt;
    let turn = w.abs() * dt;
    let ev = if dist > 0.0 { noise.v_sigma_per_m / dist.sqrt() * zv } else { 0.0 };
    let ew = if turn > 0.0 { noise.w_sigma_per_rad / turn.sqrt() * zw } else { 0.0 };
    Ok(integrate(odom, v * noise.bias_v * (1.0 + ev), w * (1.0 + ew), dt))
}

/// Drives straight for `distance` metres at `speed` and returns the final
/// gap between true pose and odometry.
pub fn open_loop_drift<R: Rng + ?Sized>(
    distance: f64,
    speed: f64,
    dt: f64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<f64, RobotError> {
    if !(speed > 0.0) || !(distance >= 0.0) {
        return Err(RobotError::InvalidDrive { distance, speed });
    }
    let steps = (distance / (speed * dt)).round() as usize;
    let mut truth = Pose::default();
    let mut odom = Pose::default();
    for _ in 0..steps {
        truth = step_true(&truth, speed, 0.0, dt)?;
        odom = step_odom(&odom, speed, 0.0, dt, noise, rng)?;
    }
    Ok(pose_error(&truth, &odom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn normalization_half_open() {
        assert_eq!(normalize_angle(PI), PI);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-15);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(normalize_angle(0.0), 0.0);
    }

    #[test]
    fn straight_line() {
        let p = step_true(&Pose::default(), 1.0, 0.0, 2.0).unwrap();
        assert_eq!(p, Pose::new(2.0, 0.0, 0.0));
    }

    #[test]
    fn pure_rotation() {
        let p = step_true(&Pose::default(), 0.0, PI, 1.0).unwrap();
        assert_eq!((p.x, p.y), (0.0, 0.0));
        assert!((p.theta - PI).abs() < 1e-12);
    }

    #[test]
    fn quarter_arc_matches_closed_form() {
        let (v, w, t) = (1.0, 1.0, PI / 2.0);
        let p = step_true(&Pose::default(), v, w, t).unwrap();
        let (ex, ey) = ((v / w) * (w * t).sin(), (v / w) * (1.0 - (w * t).cos()));
        assert!((p.x - ex).abs() < 1e-9 && (ex - 1.0).abs() < 1e-9);
        assert!((p.y - ey).abs() < 1e-9 && (ey - 1.0).abs() < 1e-9);
        assert!((p.theta - PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_dt() {
        assert_eq!(step_true(&Pose::default(), 1.0, 0.0, 0.0), Err(RobotError::NonPositiveDt(0.0)));
        let mut rng = seeded_rng(1);
        assert!(step_odom(&Pose::default(), 1.0, 0.0, -1.0, &NoiseModel::NONE, &mut rng).is_err());
    }

    #[test]
    fn zero_noise_is_ground_truth() {
        let mut rng = seeded_rng(3);
        let mut odom = Pose::new(0.3, -1.2, 0.4);
        let mut truth = odom;
        for k in 0..200 {
            let (v, w) = (0.4 + 0.01 * k as f64, ((k as f64) * 0.1).sin());
            odom = step_odom(&odom, v, w, 0.1, &NoiseModel::NONE, &mut rng).unwrap();
            truth = step_true(&truth, v, w, 0.1).unwrap();
            assert_eq!(odom, truth);
        }
    }

    #[test]
    fn seeded_odometry_is_deterministic() {
        let run = || {
            let mut rng = seeded_rng(42);
            let mut p = Pose::default();
            for _ in 0..100 {
                p = step_odom(&p, 0.5, 0.2, 0.1, &NoiseModel::DEFAULT, &mut rng).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn pose_error_metric() {
        let a = Pose::new(0.0, 0.0, 0.0);
        let b = Pose::new(3.0, 4.0, 1.0);
        assert_eq!(pose_error(&a, &a), 0.0);
        assert_eq!(pose_error(&a, &b), 5.0);
        assert_eq!(pose_error(&b, &a), pose_error(&a, &b));
    }

    #[test]
    fn noise_validation() {
        assert!(NoiseModel::DEFAULT.validate().is_ok());
        let bad = NoiseModel { bias_v: 1.6, ..NoiseModel::DEFAULT };
        assert!(bad.validate().is_err());
        let neg = NoiseModel { v_sigma_per_m: -0.1, ..NoiseModel::DEFAULT };
        assert!(neg.validate().is_err());
    }
}
