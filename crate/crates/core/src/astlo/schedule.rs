use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// One rung `(R_l, r_l)` of the scale ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub index: usize,
    /// `R_l = r a^{l+1}`.
    pub outer: f64,
    /// `r_l = r a^l`.
    pub inner: f64,
    /// Adiabatic scale `s_l = 2 (R_l - r_l) / (3 v)`.
    pub adiabatic: f64,
    /// `t_l = min((R_l - r_l) / (3 v), T_1)`.
    pub horizon: f64,
}

/// Geometric ladder of radii with the speeds and adiabatic scales built on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiscaleSchedule {
    pub outer: f64,
    pub inner: f64,
    /// Bound speed `v`.
    pub speed: f64,
    pub kappa: f64,
    /// `v' = (v + kappa) / 2`.
    pub mid_speed: f64,
    /// `omega = v - v'`.
    pub omega: f64,
    /// `a = R / r`.
    pub ratio: f64,
    /// `b = log_a r`.
    pub log_offset: f64,
    /// False when `1 < a < 4` fails.
    pub small_ratio: bool,
    /// Monitored bad time, if one has been supplied.
    pub bad_time: Option<f64>,
    pub levels: Vec<Level>,
}

impl MultiscaleSchedule {
    pub fn new(outer: f64, inner: f64, speed: f64, kappa: f64, l_max: usize) -> Result<Self> {
        if !(inner >= 1.0) || !inner.is_finite() {
            return Err(invalid("r", format!("must be at least 1, got {inner}")));
        }
        if !(outer > inner) || !outer.is_finite() {
            return Err(invalid("R", format!("must exceed r = {inner}, got {outer}")));
        }
        if !(kappa >= 0.0) {
            return Err(invalid("kappa", format!("must be nonnegative, got {kappa}")));
        }
        if !(speed > kappa) || !speed.is_finite() {
            return Err(Error::InvalidParameter {
                name: "v",
                reason: format!("must exceed kappa = {kappa} (omega would be nonpositive), got {speed}"),
            });
        }
        let mid_speed = 0.5 * (speed + kappa);
        let ratio = outer / inner;
        let mut s = Self {
            outer,
            inner,
            speed,
            kappa,
            mid_speed,
            omega: speed - mid_speed,
            ratio,
            log_offset: inner.ln() / ratio.ln(),
            small_ratio: ratio > 1.0 && ratio < 4.0,
            bad_time: None,
            levels: Vec::with_capacity(l_max + 1),
        };
        for l in 0..=l_max {
            let r_l = inner * ratio.powi(l as i32);
            let big_r = if l == 0 { outer } else { inner * ratio.powi(l as i32 + 1) };
            s.levels.push(Level {
                index: l,
                outer: big_r,
                inner: r_l,
                adiabatic: 2.0 * (big_r - r_l) / (3.0 * speed),
                horizon: (big_r - r_l) / (3.0 * speed),
            });
        }
        Ok(s)
    }

    /// Highest level whose inner radius does not exceed `radius` (at least 0).
    pub fn levels_up_to(outer: f64, inner: f64, radius: f64) -> usize {
        let ratio = outer / inner;
        let mut l = 0;
        while inner * ratio.powi(l as i32 + 1) <= radius {
            l += 1;
        }
        l
    }

    /// Analytic lower bound `(R - r) / (3 v)` on the bad time.
    pub fn bad_time_floor(&self) -> f64 {
        (self.outer - self.inner) / (3.0 * self.speed)
    }

    /// Caps every horizon at the monitored bad time.
    pub fn with_bad_time(mut self, t1: Option<f64>) -> Self {
        self.bad_time = t1;
        let cap = t1.unwrap_or(f64::INFINITY);
        for lv in &mut self.levels {
            lv.horizon = ((lv.outer - lv.inner) / (3.0 * self.speed)).min(cap);
        }
        self
    }

    pub fn level(&self, l: usize) -> Result<&Level> {
        self.levels
            .get(l)
            .ok_or_else(|| invalid("level", format!("{l} exceeds l_max = {}", self.levels.len() - 1)))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_example() {
        let s = MultiscaleSchedule::new(4.0, 2.0, 6.0, 2.0, 1).unwrap();
        assert_eq!(s.mid_speed, 4.0);
        assert_eq!(s.omega, 2.0);
        assert_eq!(s.ratio, 2.0);
        assert_eq!(s.log_offset, 1.0);
        assert_eq!(s.levels[0].adiabatic, 2.0 * 2.0 / 18.0);
        assert_eq!((s.levels[0].outer, s.levels[0].inner), (4.0, 2.0));
        assert_eq!((s.levels[1].outer, s.levels[1].inner), (8.0, 4.0));
        assert!(s.small_ratio);
    }

    #[test]
    fn ratio_three() {
        let s = MultiscaleSchedule::new(9.0, 3.0, 2.0, 1.0, 2).unwrap();
        assert_eq!(s.ratio, 3.0);
        assert!((s.log_offset - 1.0).abs() < 1e-15);
        assert_eq!(s.levels[2].outer, 81.0);
        let wide = MultiscaleSchedule::new(8.0, 1.0, 2.0, 1.0, 0).unwrap();
        assert!(!wide.small_ratio);
    }

    #[test]
    fn rejects_slow_speed() {
        assert!(MultiscaleSchedule::new(4.0, 2.0, 2.0, 2.0, 0).is_err());
        assert!(MultiscaleSchedule::new(2.0, 2.0, 6.0, 2.0, 0).is_err());
        assert!(MultiscaleSchedule::new(4.0, 0.5, 6.0, 2.0, 0).is_err());
    }

    #[test]
    fn bad_time_caps_horizons() {
        let s = MultiscaleSchedule::new(4.0, 2.0, 6.0, 2.0, 2).unwrap().with_bad_time(Some(0.2));
        assert!(s.levels.iter().all(|l| l.horizon <= 0.2));
        assert_eq!(MultiscaleSchedule::levels_up_to(4.0, 2.0, 7.0), 1);
        assert_eq!(MultiscaleSchedule::levels_up_to(4.0, 2.0, 3.0), 0);
    }

    proptest! {
        #[test]
        fn ladder_invariants(r in 1.0f64..5.0, a in 1.05f64..6.0, kappa in 0.0f64..3.0, dv in 0.01f64..5.0) {
            let s = MultiscaleSchedule::new(r * a, r, kappa + dv, kappa, 4).unwrap();
            prop_assert!(s.mid_speed > s.kappa);
            prop_assert!(s.omega > 0.0);
            for w in s.levels.windows(2) {
                prop_assert!(w[1].inner > w[0].inner);
            }
            for lv in &s.levels {
                prop_assert_eq!(lv.adiabatic, 2.0 * (lv.outer - lv.inner) / (3.0 * s.speed));
                let recomputed = s.ratio.powf(s.log_offset + lv.index as f64);
                prop_assert!((recomputed - lv.inner).abs() <= 1e-12 * lv.inner);
                let recomputed_outer = s.ratio.powf(s.log_offset + lv.index as f64 + 1.0);
                prop_assert!((recomputed_outer - lv.outer).abs() <= 1e-12 * lv.outer);
            }
        }
    }
}
