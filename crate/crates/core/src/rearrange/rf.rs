use std::io::Write;

use serde::{Deserialize, Serialize};

use super::schedule::Schedule;
use crate::constants::{MHZ, US};
use crate::error::{ensure_finite, ensure_non_negative, invalid, Error, Result};

/// Delay applied to the x-axis program by default, s.
pub const DEFAULT_X_AXIS_SHIFT: f64 = 1.5e-6;

/// Linear map from trap position to AOD drive frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AodCalibration {
    /// Hz
    pub origin_freq_x: f64,
    /// Hz
    pub origin_freq_y: f64,
    /// Hz per m
    pub slope_x: f64,
    /// Hz per m
    pub slope_y: f64,
    /// Allowed drive band `[lo, hi]`, Hz. `None` means unbounded.
    #[serde(default)]
    pub band: Option<[f64; 2]>,
    /// s
    #[serde(default = "default_shift")]
    pub x_axis_shift: f64,
}

fn default_shift() -> f64 {
    DEFAULT_X_AXIS_SHIFT
}

impl AodCalibration {
    pub fn new(origin_freq_x: f64, origin_freq_y: f64, slope_x: f64, slope_y: f64) -> Result<Self> {
        let c = Self {
            origin_freq_x,
            origin_freq_y,
            slope_x,
            slope_y,
            band: None,
            x_axis_shift: DEFAULT_X_AXIS_SHIFT,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("origin_freq_x", self.origin_freq_x),
            ("origin_freq_y", self.origin_freq_y),
            ("slope_x", self.slope_x),
            ("slope_y", self.slope_y),
        ] {
            ensure_finite(name, v)?;
        }
        if self.slope_x == 0.0 || self.slope_y == 0.0 {
            return Err(invalid("AOD slopes must be nonzero"));
        }
        ensure_non_negative("x_axis_shift", self.x_axis_shift)?;
        if let Some([lo, hi]) = self.band {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(invalid(format!("AOD band [{lo}, {hi}] is not an interval")));
            }
        }
        Ok(())
    }

    pub fn frequency(&self, center: [f64; 2]) -> [f64; 2] {
        [
            self.origin_freq_x + self.slope_x * center[0],
            self.origin_freq_y + self.slope_y * center[1],
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RfEvent {
    /// s
    pub start_time: f64,
    /// Hz
    pub frequency: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RfProgram {
    pub x: Vec<RfEvent>,
    pub y: Vec<RfEvent>,
    /// s
    pub x_axis_shift: f64,
}

impl RfProgram {
    /// CSV with columns `axis,start_time_us,frequency_MHz,amplitude`, x
    /// events first.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["axis", "start_time_us", "frequency_MHz", "amplitude"])?;
        for (axis, events) in [("x", &self.x), ("y", &self.y)] {
            for e in events {
                w.write_record([
                    axis.to_string(),
                    format!("{:.6}", e.start_time / US),
                    format!("{:.6}", e.frequency / MHZ),
                    format!("{}", e.amplitude),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// One event per slot and axis. Slot `j` of cycle `c` starts at
/// `c * τ + j * t_on`; inactive slots are emitted at zero amplitude.
pub fn schedule_to_rf(schedule: &Schedule, cal: &AodCalibration) -> Result<RfProgram> {
    cal.validate()?;
    let tau = schedule.period();
    let cap = schedule.cycles.len() * schedule.n_slots as usize;
    let (mut x, mut y) = (Vec::with_capacity(cap), Vec::with_capacity(cap));
    for c in &schedule.cycles {
        let base = c.index as f64 * tau;
        for s in &c.slots {
            let t = base + s.slot_index as f64 * schedule.t_on;
            let [fx, fy] = cal.frequency(s.center);
            if let Some([lo, hi]) = cal.band {
                for f in [fx, fy] {
                    if !(lo..=hi).contains(&f) {
                        return Err(Error::Range(format!(
                            "cycle {} slot {}: {:.6} MHz is outside the AOD band [{:.6}, {:.6}] MHz",
                            c.index,
                            s.slot_index,
                            f / MHZ,
                            lo / MHZ,
                            hi / MHZ
                        )));
                    }
                }
            }
            let amplitude = if s.active { 1.0 } else { 0.0 };
            x.push(RfEvent {
                start_time: t + cal.x_axis_shift,
                frequency: fx,
                amplitude,
            });
            y.push(RfEvent {
                start_time: t,
                frequency: fy,
                amplitude,
            });
        }
    }
    Ok(RfProgram {
        x,
        y,
        x_axis_shift: cal.x_axis_shift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::BlinkTiming;
    use crate::rearrange::scenario::{Move, Scenario};
    use crate::rearrange::schedule::compile_scenario;

    fn cal() -> AodCalibration {
        // 0.5 MHz per µm
        AodCalibration::new(80e6, 80e6, 0.5e12, 0.5e12).unwrap()
    }

    fn one_atom(moves: Vec<Move>) -> Schedule {
        let s = Scenario {
            name: "one".into(),
            sites: vec![[0.0, 0.0], [20e-6, 0.0]],
            occupancy: vec![true, false],
            moves,
        };
        compile_scenario(&s, &BlinkTiming::new(1.1e-6, 10e-6, 4, 1).unwrap(), 0.13).unwrap()
    }

    #[test]
    fn static_atom_is_periodic() {
        let rf = schedule_to_rf(&one_atom(vec![]), &cal()).unwrap();
        assert_eq!(rf.y.len(), 8);
        let active: Vec<&RfEvent> = rf.y.iter().filter(|e| e.amplitude > 0.0).collect();
        assert_eq!(active.len(), 4);
        assert!(active.iter().all(|e| e.frequency == 80e6));
        for w in active.windows(2) {
            assert!((w[1].start_time - w[0].start_time - 11.1e-6).abs() < 1e-15);
        }
        assert!(rf.x.windows(2).all(|w| w[1].start_time > w[0].start_time));
        assert!(rf.x.iter().any(|e| e.amplitude == 0.0 && (e.frequency - 90e6).abs() < 1e-3));
    }

    #[test]
    fn displacement_shifts_frequency() {
        let sch = one_atom(vec![Move {
            atom: 0,
            waypoints: vec![[0.0, 0.0], [20e-6, 0.0]],
            n_blink: 200,
        }]);
        let rf = schedule_to_rf(&sch, &cal()).unwrap();
        let last = rf.x.iter().rev().find(|e| e.amplitude > 0.0).unwrap();
        assert!((last.frequency - 90e6).abs() < 1e-3);
        assert!((last.frequency - 80e6 - 10e6).abs() < 1e-3);
    }

    #[test]
    fn axis_shift() {
        let sch = one_atom(vec![]);
        let rf = schedule_to_rf(&sch, &cal()).unwrap();
        for (x, y) in rf.x.iter().zip(&rf.y) {
            assert!((x.start_time - y.start_time - 1.5e-6).abs() < 1e-18);
        }
        let flat = AodCalibration {
            x_axis_shift: 0.0,
            ..cal()
        };
        let rf = schedule_to_rf(&sch, &flat).unwrap();
        assert!(rf.x.iter().zip(&rf.y).all(|(x, y)| x.start_time == y.start_time));
        assert_eq!(schedule_to_rf(&sch, &flat).unwrap(), rf);
    }

    #[test]
    fn band_and_calibration_errors() {
        let sch = one_atom(vec![]);
        let narrow = AodCalibration {
            band: Some([75e6, 85e6]),
            ..cal()
        };
        assert!(matches!(schedule_to_rf(&sch, &narrow), Err(Error::Range(_))));
        let wide = AodCalibration {
            band: Some([75e6, 95e6]),
            ..cal()
        };
        assert!(schedule_to_rf(&sch, &wide).is_ok());
        assert!(AodCalibration::new(80e6, 80e6, 0.0, 1.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let rf = schedule_to_rf(&one_atom(vec![]), &cal()).unwrap();
        let mut buf = Vec::new();
        rf.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("axis,start_time_us,frequency_MHz,amplitude"));
        assert_eq!(lines.next(), Some("x,1.500000,80.000000,1"));
        assert_eq!(text.lines().count(), 17);
    }
}
