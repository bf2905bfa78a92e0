use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::robot::normalize_angle;
use crate::sensors::Scan;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VfhError {
    #[error("scan has no beams")]
    EmptyScan,
    #[error("every sector is blocked")]
    NoOpening,
    #[error("invalid steering config: {0}")]
    InvalidConfig(String),
}

/// Polar histogram parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VfhConfig {
    /// Number of sectors over the full circle.
    pub sectors: usize,
    /// Returns beyond this range add nothing to the histogram.
    pub window: f64,
    /// A sector is blocked when its density exceeds this.
    pub threshold: f64,
    /// Valleys at least this many sectors wide are "wide".
    pub wide_valley: usize,
}

impl Default for VfhConfig {
    fn default() -> Self {
        VfhConfig { sectors: 72, window: 2.0, threshold: 0.5, wide_valley: 8 }
    }
}

impl VfhConfig {
    fn validate(&self) -> Result<(), VfhError> {
        if self.sectors < 4 || self.wide_valley == 0 || !(self.window > 0.0) || !(self.threshold >= 0.0) {
            return Err(VfhError::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }

    fn width(&self) -> f64 {
        TAU / self.sectors as f64
    }

    /// Sector holding a relative bearing; sector 0 starts at -pi.
    pub fn sector_of(&self, bearing: f64) -> usize {
        let a = normalize_angle(bearing) + PI;
        ((a / self.width()) as usize).min(self.sectors - 1)
    }

    pub fn sector_center(&self, sector: usize) -> f64 {
        normalize_angle(-PI + (sector as f64 + 0.5) * self.width())
    }
}

/// Per-sector obstacle density and whether any beam observed the sector.
/// Unobserved sectors count as blocked.
pub(crate) fn histogram(scan: &Scan, cfg: &VfhConfig) -> (Vec<f64>, Vec<bool>) {
    let mut density = vec![0.0; cfg.sectors];
    let mut seen = vec![false; cfg.sectors];
    for b in &scan.beams {
        let s = cfg.sector_of(b.bearing);
        seen[s] = true;
        if let Some(r) = b.range {
            if r < cfg.window {
                density[s] += (cfg.window - r) / cfg.window;
            }
        }
    }
    (density, seen)
}

pub(crate) fn free_sectors(scan: &Scan, cfg: &VfhConfig) -> Vec<bool> {
    let (density, seen) = histogram(scan, cfg);
    density.iter().zip(&seen).map(|(&d, &s)| s && d <= cfg.threshold).collect()
}

/// Picks a steering bearing (relative to the heading) toward `target_bearing`
/// through the free sector nearest to it.
///
/// A free target sector is returned untouched. Otherwise every valley of
/// consecutive free sectors offers candidates: its centre when narrow, or a
/// point `wide_valley / 2` sectors in from either edge when wide. The
/// candidate closest in angle to the target wins; ties go to the lower sector.
pub fn vfh_steer(scan: &Scan, target_bearing: f64, cfg: &VfhConfig) -> Result<f64, VfhError> {
    cfg.validate()?;
    if scan.beams.is_empty() {
        return Err(VfhError::EmptyScan);
    }
    let free = free_sectors(scan, cfg);
    let n = cfg.sectors;
    if free[cfg.sector_of(target_bearing)] {
        return Ok(target_bearing);
    }
    if free.iter().all(|&f| f) {
        return Ok(target_bearing);
    }
    let Some(first_blocked) = free.iter().position(|&f| !f) else {
        return Ok(target_bearing);
    };
    // Walk the circle from a blocked sector so no valley wraps the start.
    let mut candidates: Vec<usize> = Vec::new();
    let mut k = 0;
    while k < n {
        let s = (first_blocked + k) % n;
        if !free[s] {
            k += 1;
            continue;
        }
        let begin = k;
        while k < n && free[(first_blocked + k) % n] {
            k += 1;
        }
        let len = k - begin;
        let lo = first_blocked + begin;
        if len >= cfg.wide_valley {
            let half = cfg.wide_valley / 2;
            candidates.push((lo + half) % n);
            candidates.push((lo + len - 1 - half) % n);
        } else {
            candidates.push((lo + len / 2) % n);
        }
    }
    candidates.sort_unstable();
    candidates.dedup();
    candidates
        .into_iter()
        .map(|s| (s, normalize_angle(cfg.sector_center(s) - target_bearing).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(s, _)| cfg.sector_center(s))
        .ok_or(VfhError::NoOpening)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::Pose;
    use crate::sensors::Beam;

    fn scan_with(f: impl Fn(f64) -> Option<f64>) -> Scan {
        let beams = (0..241)
            .map(|i| {
                let bearing = (-120.0 + i as f64).to_radians();
                Beam { bearing, range: f(bearing) }
            })
            .collect();
        Scan { origin: Pose::default(), beams, max_range: 5.6, timestamp: 0.0 }
    }

    #[test]
    fn clear_view_keeps_target() {
        let scan = scan_with(|_| None);
        assert_eq!(vfh_steer(&scan, 0.3, &VfhConfig::default()).unwrap(), 0.3);
    }

    #[test]
    fn surrounded() {
        let scan = scan_with(|_| Some(0.1));
        assert_eq!(vfh_steer(&scan, 0.0, &VfhConfig::default()), Err(VfhError::NoOpening));
        let empty = Scan { beams: vec![], ..scan };
        assert_eq!(vfh_steer(&empty, 0.0, &VfhConfig::default()), Err(VfhError::EmptyScan));
    }

    #[test]
    fn obstacle_ahead_turns_to_wider_side() {
        // Blob spans -10..+25 degrees, so the right-hand edge is nearer.
        let scan = scan_with(|b| (b > (-10f64).to_radians() && b < 25f64.to_radians()).then_some(0.5));
        let cfg = VfhConfig::default();
        let out = vfh_steer(&scan, 0.0, &cfg).unwrap();
        assert!(out < 0.0, "steered to {out}");
        assert!(free_sectors(&scan, &cfg)[cfg.sector_of(out)]);

        // Brute force: the nearest free sector at least half a wide valley
        // from any blocked sector, searched outward from the target.
        let free = free_sectors(&scan, &cfg);
        let n = cfg.sectors;
        let half = cfg.wide_valley / 2;
        let ok = |s: usize| (0..=half).all(|d| free[(s + d) % n] && free[(s + n - d) % n]);
        let t = cfg.sector_of(0.0);
        let best = (0..n)
            .flat_map(|d| [(t + n - d) % n, (t + d) % n])
            .find(|&s| ok(s))
            .unwrap();
        assert_eq!(cfg.sector_of(out), best);
    }
}
