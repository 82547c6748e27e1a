use serde::{Deserialize, Serialize};

use super::scenario::{dist, Scenario};
use crate::analytic::max_atoms;
use crate::dynamics::BlinkTiming;
use crate::error::{ensure_non_negative, ensure_positive, invalid, Error, Result};

/// Relative slack on speed comparisons so that exact-limit moves pass.
const SPEED_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    /// Position within the cycle; the slot is on from `slot_index * t_on`.
    pub slot_index: u32,
    /// Lattice site the slot was allocated from.
    pub site: Option<usize>,
    /// Atom held in this slot (the index of its starting site).
    pub atom: Option<usize>,
    pub active: bool,
    /// m
    pub center: [f64; 2],
    /// s
    pub duration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub index: u32,
    pub slots: Vec<Slot>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub scenario: String,
    /// s
    pub t_on: f64,
    /// s
    pub t_off: f64,
    /// Slots per cycle, `M`.
    pub n_slots: u32,
    /// Starting positions of the scenario's sites, m.
    pub sites: Vec<[f64; 2]>,
    pub cycles: Vec<Cycle>,
}

impl Schedule {
    /// `τ = t_on + t_off`, the time between two slots of the same atom.
    pub fn period(&self) -> f64 {
        self.t_on + self.t_off
    }

    /// Atoms in slot order.
    pub fn atoms(&self) -> Vec<usize> {
        self.cycles
            .first()
            .map(|c| c.slots.iter().filter_map(|s| s.atom).collect())
            .unwrap_or_default()
    }

    /// Trap centers seen by `atom`, one per cycle.
    pub fn center_path(&self, atom: usize) -> Option<Vec<[f64; 2]>> {
        let pos = self.cycles.first()?.slots.iter().position(|s| s.atom == Some(atom))?;
        Some(self.cycles.iter().map(|c| c.slots[pos].center).collect())
    }
}

/// Orders `occupancy.len()` slots so that active entries are spread as
/// evenly as possible. Returns `order` with `order[position]` = index into
/// `occupancy`. Active entries keep their relative order and land at
/// positions `floor(i * M / a)`; empty entries fill the rest in order.
pub fn assign_slots(occupancy: &[bool]) -> Vec<usize> {
    let m = occupancy.len();
    let active: Vec<usize> = (0..m).filter(|&i| occupancy[i]).collect();
    let a = active.len();
    if a == 0 || a == m {
        return (0..m).collect();
    }
    let mut order = vec![usize::MAX; m];
    for (i, &idx) in active.iter().enumerate() {
        order[i * m / a] = idx;
    }
    let mut empty = (0..m).filter(|&i| !occupancy[i]);
    for slot in order.iter_mut().filter(|s| **s == usize::MAX) {
        *slot = empty.next().expect("slot counts match");
    }
    order
}

/// Number of slots per cycle: `timing.n_slots` when it is above one,
/// otherwise as many sites as fit in the blinking period.
pub fn slot_count(scenario: &Scenario, timing: &BlinkTiming) -> Result<u32> {
    if timing.n_slots > 1 {
        return Ok(timing.n_slots);
    }
    let cap = if timing.t_on > 0.0 {
        max_atoms(timing.t_on, timing.t_off)?
    } else {
        u32::MAX
    };
    Ok((scenario.sites.len() as u32).min(cap).max(1))
}

/// Expands a scenario into per-cycle slots. Each moving atom jumps one
/// equal arc-length step at the start of each of its slots until its
/// polyline is exhausted; the run lasts `max(timing.n_blink, longest move)`
/// cycles.
pub fn compile_scenario(scenario: &Scenario, timing: &BlinkTiming, v_max: f64) -> Result<Schedule> {
    scenario.validate()?;
    timing.validate()?;
    ensure_positive("t_on", timing.t_on)?;
    ensure_positive("v_max", v_max)?;

    let occupied = scenario.occupied_count();
    let capacity = max_atoms(timing.t_on, timing.t_off)?;
    if occupied > capacity as usize {
        return Err(Error::Capacity { occupied, capacity });
    }
    let m = slot_count(scenario, timing)?;
    if occupied > m as usize {
        return Err(Error::Capacity {
            occupied,
            capacity: m,
        });
    }
    let limit = v_max * timing.t_on;
    for mv in &scenario.moves {
        if mv.n_blink == 0 {
            continue;
        }
        let step = mv.length() / mv.n_blink as f64;
        if step > limit * (1.0 + SPEED_SLACK) {
            return Err(Error::Speed {
                atom: mv.atom,
                speed: step / timing.t_on,
                v_max,
                min_n_blink: (mv.length() / limit).ceil() as u64,
            });
        }
    }

    // Occupied sites first, then empty ones, trimmed to M entries.
    let entries: Vec<usize> = (0..scenario.sites.len())
        .filter(|&i| scenario.occupancy[i])
        .chain((0..scenario.sites.len()).filter(|&i| !scenario.occupancy[i]))
        .chain(std::iter::repeat(usize::MAX))
        .take(m as usize)
        .collect();
    let flags: Vec<bool> = entries
        .iter()
        .map(|&i| i != usize::MAX && scenario.occupancy[i])
        .collect();
    let order = assign_slots(&flags);

    let n_cycles = scenario
        .moves
        .iter()
        .map(|mv| mv.n_blink)
        .chain([timing.n_blink])
        .max()
        .unwrap_or(0);
    let cycles = (0..n_cycles)
        .map(|c| Cycle {
            index: c,
            slots: order
                .iter()
                .enumerate()
                .map(|(pos, &e)| {
                    let site = entries.get(e).copied().filter(|&i| i != usize::MAX);
                    let active = flags[e];
                    let center = match site {
                        Some(i) if active => match scenario.move_for(i) {
                            Some(mv) => mv.position_at_step(c + 1),
                            None => scenario.sites[i],
                        },
                        Some(i) => scenario.sites[i],
                        None => [0.0, 0.0],
                    };
                    Slot {
                        slot_index: pos as u32,
                        site,
                        atom: site.filter(|_| active),
                        active,
                        center,
                        duration: timing.t_on,
                    }
                })
                .collect(),
        })
        .collect();
    Ok(Schedule {
        scenario: scenario.name.clone(),
        t_on: timing.t_on,
        t_off: timing.t_off,
        n_slots: m,
        sites: scenario.sites.clone(),
        cycles,
    })
}

/// Hardware and physics limits a schedule is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleLimits {
    /// m/s
    pub v_max: f64,
    /// m
    pub min_site_separation: f64,
    /// s
    pub rise_time: f64,
}

impl Default for ScheduleLimits {
    fn default() -> Self {
        Self {
            v_max: 0.13,
            min_site_separation: 7.5e-6,
            rise_time: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Off-time too short for the number of slots, or slots overrunning τ.
    OffTime { required: f64, actual: f64 },
    DragSpeed { cycle: u32, atom: usize, speed: f64, v_max: f64 },
    Proximity { cycle: u32, atoms: [usize; 2], distance: f64 },
    SlotDuration { cycle: u32, slot: u32, duration: f64, rise_time: f64 },
}

/// Lists every constraint the schedule breaks. An empty list means the
/// schedule is feasible.
pub fn validate_schedule(schedule: &Schedule, timing: &BlinkTiming, limits: &ScheduleLimits) -> Result<Vec<Violation>> {
    ensure_positive("v_max", limits.v_max)?;
    ensure_non_negative("min_site_separation", limits.min_site_separation)?;
    ensure_non_negative("rise_time", limits.rise_time)?;
    if timing.t_on <= 0.0 {
        return Err(invalid("t_on must be positive"));
    }
    let mut out = Vec::new();

    let m = schedule.n_slots as f64;
    let required = (m - 1.0) * timing.t_on;
    if timing.t_off < required * (1.0 - 1e-9) {
        out.push(Violation::OffTime {
            required,
            actual: timing.t_off,
        });
    }
    let tau = timing.t_on + timing.t_off;
    for c in &schedule.cycles {
        let busy: f64 = c.slots.iter().map(|s| s.duration).sum();
        if busy > tau * (1.0 + 1e-9) {
            out.push(Violation::OffTime {
                required: busy - timing.t_on,
                actual: timing.t_off,
            });
            break;
        }
    }

    let mut previous: Vec<Option<[f64; 2]>> = schedule
        .cycles
        .first()
        .map(|c| {
            c.slots
                .iter()
                .map(|s| s.atom.and_then(|a| schedule.sites.get(a).copied()))
                .collect()
        })
        .unwrap_or_default();
    for c in &schedule.cycles {
        let active: Vec<&Slot> = c.slots.iter().filter(|s| s.active).collect();
        for (pos, s) in c.slots.iter().enumerate() {
            if !s.active {
                continue;
            }
            if s.duration < limits.rise_time * (1.0 - 1e-9) {
                out.push(Violation::SlotDuration {
                    cycle: c.index,
                    slot: s.slot_index,
                    duration: s.duration,
                    rise_time: limits.rise_time,
                });
            }
            if let (Some(atom), Some(Some(prev))) = (s.atom, previous.get(pos)) {
                let speed = dist(*prev, s.center) / timing.t_on;
                if speed > limits.v_max * (1.0 + SPEED_SLACK) {
                    out.push(Violation::DragSpeed {
                        cycle: c.index,
                        atom,
                        speed,
                        v_max: limits.v_max,
                    });
                }
            }
        }
        for (i, a) in active.iter().enumerate() {
            for b in &active[i + 1..] {
                let d = dist(a.center, b.center);
                if d < limits.min_site_separation {
                    out.push(Violation::Proximity {
                        cycle: c.index,
                        atoms: [a.atom.unwrap_or(usize::MAX), b.atom.unwrap_or(usize::MAX)],
                        distance: d,
                    });
                }
            }
        }
        previous = c.slots.iter().map(|s| s.active.then_some(s.center)).collect();
    }
    Ok(out)
}

/// Largest per-cycle displacement of any atom, m.
pub fn max_step(schedule: &Schedule) -> f64 {
    schedule
        .atoms()
        .into_iter()
        .filter_map(|a| {
            let path = schedule.center_path(a)?;
            let start = schedule.sites[a];
            Some(
                std::iter::once(start)
                    .chain(path.iter().copied())
                    .collect::<Vec<_>>()
                    .windows(2)
                    .map(|w| dist(w[0], w[1]))
                    .fold(0.0, f64::max),
            )
        })
        .fold(0.0, f64::max)
}
