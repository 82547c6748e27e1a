use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::UM;
use crate::error::{ensure_finite, ensure_positive, invalid, Result};

/// Tolerance (m) for a waypoint polyline to count as starting on its site.
const SITE_MATCH_TOL: f64 = 1e-9;

/// Cycles per lattice hop in the built-in scenarios.
pub const CYCLES_PER_HOP: u32 = 200;

/// Cycles for the half-turn of the rotation scenario.
pub const ROTATION_CYCLES: u32 = 900;

/// One atom's transport along a polyline. `atom` is the index of the site
/// the atom starts on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub atom: usize,
    /// m
    pub waypoints: Vec<[f64; 2]>,
    /// Cycles over which the whole polyline is covered.
    pub n_blink: u32,
}

impl Move {
    /// Polyline arc length, m.
    pub fn length(&self) -> f64 {
        polyline_length(&self.waypoints)
    }

    /// Center after `step` of `n_blink` equal arc-length steps.
    pub fn position_at_step(&self, step: u32) -> [f64; 2] {
        let w = &self.waypoints;
        if w.len() == 1 || self.n_blink == 0 {
            return *w.last().unwrap();
        }
        let step = step.min(self.n_blink);
        if step == self.n_blink {
            return *w.last().unwrap();
        }
        let mut target = self.length() * step as f64 / self.n_blink as f64;
        for seg in w.windows(2) {
            let l = dist(seg[0], seg[1]);
            if target <= l && l > 0.0 {
                let f = target / l;
                return [
                    seg[0][0] + f * (seg[1][0] - seg[0][0]),
                    seg[0][1] + f * (seg[1][1] - seg[0][1]),
                ];
            }
            target -= l;
        }
        *w.last().unwrap()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// m
    pub sites: Vec<[f64; 2]>,
    pub occupancy: Vec<bool>,
    pub moves: Vec<Move>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.sites.len() != self.occupancy.len() {
            return Err(invalid(format!(
                "scenario '{}': {} sites but {} occupancy flags",
                self.name,
                self.sites.len(),
                self.occupancy.len()
            )));
        }
        for p in self.sites.iter().flatten() {
            ensure_finite("site coordinate", *p)?;
        }
        let mut seen = vec![false; self.sites.len()];
        for m in &self.moves {
            let Some(&occupied) = self.occupancy.get(m.atom) else {
                return Err(invalid(format!("move references unknown atom {}", m.atom)));
            };
            if !occupied {
                return Err(invalid(format!("move for atom {} starts on an empty site", m.atom)));
            }
            if std::mem::replace(&mut seen[m.atom], true) {
                return Err(invalid(format!("atom {} has more than one move", m.atom)));
            }
            let Some(first) = m.waypoints.first() else {
                return Err(invalid(format!("move for atom {} has no waypoints", m.atom)));
            };
            for p in m.waypoints.iter().flatten() {
                ensure_finite("waypoint coordinate", *p)?;
            }
            if dist(*first, self.sites[m.atom]) > SITE_MATCH_TOL {
                return Err(invalid(format!(
                    "move for atom {} does not start at its site",
                    m.atom
                )));
            }
            if m.n_blink == 0 && m.length() > 0.0 {
                return Err(invalid(format!("move for atom {} has n_blink = 0", m.atom)));
            }
        }
        Ok(())
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    pub fn move_for(&self, atom: usize) -> Option<&Move> {
        self.moves.iter().find(|m| m.atom == atom)
    }
}

/// On-disk scenario, in micrometres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_constant_um: Option<f64>,
    pub sites: Vec<[f64; 2]>,
    pub occupancy: Vec<bool>,
    #[serde(default)]
    pub moves: Vec<MoveFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoveFile {
    pub atom: usize,
    pub waypoints: Vec<[f64; 2]>,
    pub n_blink: u32,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let um = |p: [f64; 2]| [p[0] * UM, p[1] * UM];
        let s = Scenario {
            name: self.name,
            sites: self.sites.into_iter().map(um).collect(),
            occupancy: self.occupancy,
            moves: self
                .moves
                .into_iter()
                .map(|m| Move {
                    atom: m.atom,
                    waypoints: m.waypoints.into_iter().map(um).collect(),
                    n_blink: m.n_blink,
                })
                .collect(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_scenario(s: &Scenario, lattice_constant: Option<f64>) -> Self {
        let um = |p: &[f64; 2]| [p[0] / UM, p[1] / UM];
        Self {
            name: s.name.clone(),
            lattice_constant_um: lattice_constant.map(|a| a / UM),
            sites: s.sites.iter().map(um).collect(),
            occupancy: s.occupancy.clone(),
            moves: s
                .moves
                .iter()
                .map(|m| MoveFile {
                    atom: m.atom,
                    waypoints: m.waypoints.iter().map(um).collect(),
                    n_blink: m.n_blink,
                })
                .collect(),
        }
    }
}

pub fn polyline_length(points: &[[f64; 2]]) -> f64 {
    points.windows(2).map(|w| dist(w[0], w[1])).sum()
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// 3x3 lattice sites, row-major with `x` along columns.
fn lattice(a: f64) -> Vec<[f64; 2]> {
    (0..9).map(|i| [(i % 3) as f64 * a, (i / 3) as f64 * a]).collect()
}

fn site(col: usize, row: usize) -> usize {
    row * 3 + col
}

fn occupancy(occupied: &[usize]) -> Vec<bool> {
    (0..9).map(|i| occupied.contains(&i)).collect()
}

/// Straight-line hop sequence through lattice sites.
fn hop_move(sites: &[[f64; 2]], path: &[usize], cycles_per_hop: u32) -> Move {
    Move {
        atom: path[0],
        waypoints: path.iter().map(|&i| sites[i]).collect(),
        n_blink: cycles_per_hop * (path.len() as u32 - 1),
    }
}

/// Four corner atoms turned by π about the central site.
pub fn array_rotation(a: f64) -> Result<Scenario> {
    ensure_positive("lattice_constant", a)?;
    let sites = lattice(a);
    let c = sites[site(1, 1)];
    let corners = [site(0, 0), site(2, 0), site(2, 2), site(0, 2)];
    let n = ROTATION_CYCLES;
    let moves = corners
        .iter()
        .map(|&i| {
            let [x, y] = [sites[i][0] - c[0], sites[i][1] - c[1]];
            let r = x.hypot(y);
            let phi0 = y.atan2(x);
            let mut waypoints: Vec<[f64; 2]> = (0..=n)
                .map(|k| {
                    let phi = phi0 + PI * k as f64 / n as f64;
                    [c[0] + r * phi.cos(), c[1] + r * phi.sin()]
                })
                .collect();
            waypoints[0] = sites[i];
            Move {
                atom: i,
                waypoints,
                n_blink: n,
            }
        })
        .collect();
    Ok(Scenario {
        name: "rotation".into(),
        sites,
        occupancy: occupancy(&corners),
        moves,
    })
}

/// Two diagonal hops close the vacancies of a 2x2 block.
pub fn vacancy_filling(a: f64) -> Result<Scenario> {
    ensure_positive("lattice_constant", a)?;
    let sites = lattice(a);
    let occupied = [site(0, 0), site(1, 1), site(2, 1), site(1, 2)];
    let moves = vec![
        hop_move(&sites, &[site(2, 1), site(1, 0)], CYCLES_PER_HOP),
        hop_move(&sites, &[site(1, 2), site(0, 1)], CYCLES_PER_HOP),
    ];
    Ok(Scenario {
        name: "vacancy".into(),
        sites,
        occupancy: occupancy(&occupied),
        moves,
    })
}

/// Boustrophedon path through the lattice.
pub const WORM_PATH: [usize; 9] = [0, 1, 2, 5, 4, 3, 6, 7, 8];

/// Atoms scattered along [`WORM_PATH`] all crawl toward its end and pack
/// there. Every atom moves at the same time.
pub fn worm_running(a: f64) -> Result<Scenario> {
    ensure_positive("lattice_constant", a)?;
    let sites = lattice(a);
    let start_idx = [0usize, 2, 5];
    let k = start_idx.len();
    let moves = start_idx
        .iter()
        .enumerate()
        .map(|(rank, &p)| hop_move(&sites, &WORM_PATH[p..=WORM_PATH.len() - k + rank], CYCLES_PER_HOP))
        .collect();
    Ok(Scenario {
        name: "worm".into(),
        occupancy: occupancy(&start_idx.map(|p| WORM_PATH[p])),
        sites,
        moves,
    })
}

/// Every row is packed against its right edge.
pub fn fall_to_right(a: f64, cycles_per_hop: u32) -> Result<Scenario> {
    ensure_positive("lattice_constant", a)?;
    if cycles_per_hop == 0 {
        return Err(invalid("cycles_per_hop must be at least 1"));
    }
    let sites = lattice(a);
    let occupied = [site(0, 0), site(0, 1), site(2, 1), site(0, 2), site(1, 2)];
    let occ = occupancy(&occupied);
    let mut moves = Vec::new();
    for row in 0..3 {
        let cols: Vec<usize> = (0..3).filter(|&c| occ[site(c, row)]).collect();
        for (rank, &col) in cols.iter().enumerate() {
            let target = 3 - cols.len() + rank;
            if target != col {
                let path: Vec<usize> = (col..=target).map(|c| site(c, row)).collect();
                moves.push(hop_move(&sites, &path, cycles_per_hop));
            }
        }
    }
    Ok(Scenario {
        name: "fall".into(),
        sites,
        occupancy: occ,
        moves,
    })
}

/// The four demonstration scenarios on a 3x3 lattice: `rotation`,
/// `vacancy`, `worm` and `fall`.
pub fn builtin_scenarios(lattice_constant: f64) -> Result<Vec<Scenario>> {
    Ok(vec![
        array_rotation(lattice_constant)?,
        vacancy_filling(lattice_constant)?,
        worm_running(lattice_constant)?,
        fall_to_right(lattice_constant, CYCLES_PER_HOP)?,
    ])
}

pub fn builtin_scenario(name: &str, lattice_constant: f64) -> Result<Scenario> {
    match name {
        "rotation" => array_rotation(lattice_constant),
        "vacancy" => vacancy_filling(lattice_constant),
        "worm" => worm_running(lattice_constant),
        "fall" => fall_to_right(lattice_constant, CYCLES_PER_HOP),
        other => Err(invalid(format!(
            "unknown scenario '{other}' (expected rotation, vacancy, worm or fall)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: f64 = 20e-6;

    #[test]
    fn builtins_are_valid() {
        for s in builtin_scenarios(A).unwrap() {
            s.validate().unwrap();
        }
        assert!(builtin_scenarios(0.0).is_err());
        assert!(builtin_scenario("spiral", A).is_err());
    }

    #[test]
    fn rotation_arc_length() {
        let s = array_rotation(A).unwrap();
        assert_eq!(s.moves.len(), 4);
        for m in &s.moves {
            assert!((m.length() - 88.9e-6).abs() < 0.05e-6, "{}", m.length());
            let end = *m.waypoints.last().unwrap();
            let start = m.waypoints[0];
            // Half-turn about the center lands on the opposite corner.
            assert!((end[0] + start[0] - 2.0 * A).abs() < 1e-12);
            assert!((end[1] + start[1] - 2.0 * A).abs() < 1e-12);
        }
    }

    #[test]
    fn vacancy_travel() {
        let s = vacancy_filling(A).unwrap();
        for m in &s.moves {
            assert!((m.length() - 2f64.sqrt() * A).abs() < 1e-15);
            assert_eq!(m.n_blink, 200);
        }
    }

    #[test]
    fn worm_packs_toward_the_end() {
        let s = worm_running(A).unwrap();
        let ends: Vec<[f64; 2]> = s.moves.iter().map(|m| *m.waypoints.last().unwrap()).collect();
        let want: Vec<[f64; 2]> = WORM_PATH[6..].iter().map(|&i| s.sites[i]).collect();
        assert_eq!(ends, want);
        assert_eq!(s.moves[0].n_blink, 6 * 200);
    }

    #[test]
    fn fall_rows() {
        let s = fall_to_right(A, 200).unwrap();
        for m in &s.moves {
            let [a, b] = [m.waypoints[0], *m.waypoints.last().unwrap()];
            assert_eq!(a[1], b[1]);
            assert!(b[0] > a[0]);
            assert_eq!(m.n_blink as f64, 200.0 * (b[0] - a[0]) / A);
        }
    }

    #[test]
    fn lengths_scale_with_lattice() {
        let small = builtin_scenarios(A).unwrap();
        let big = builtin_scenarios(2.0 * A).unwrap();
        for (s, b) in small.iter().zip(&big) {
            for (m, n) in s.moves.iter().zip(&b.moves) {
                assert!((n.length() - 2.0 * m.length()).abs() < 1e-12 * n.length());
            }
        }
    }

    #[test]
    fn stepping_is_uniform_in_arc_length() {
        let m = Move {
            atom: 0,
            waypoints: vec![[0.0, 0.0], [3.0, 0.0], [3.0, 1.0]],
            n_blink: 8,
        };
        let pts: Vec<[f64; 2]> = (0..=8).map(|k| m.position_at_step(k)).collect();
        assert_eq!(pts[0], [0.0, 0.0]);
        assert_eq!(pts[6], [3.0, 0.0]);
        assert_eq!(pts[8], [3.0, 1.0]);
        assert_eq!(m.position_at_step(50), [3.0, 1.0]);
        let total: f64 = pts.windows(2).map(|w| dist(w[0], w[1])).sum();
        assert!((total - 4.0).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_bad_moves() {
        let mut s = vacancy_filling(A).unwrap();
        s.moves[1].atom = s.moves[0].atom;
        assert!(s.validate().is_err());
        let mut s = vacancy_filling(A).unwrap();
        s.moves[0].waypoints[0][0] += 1e-6;
        assert!(s.validate().is_err());
        let mut s = vacancy_filling(A).unwrap();
        s.moves[0].atom = 1;
        assert!(s.validate().is_err());
        let mut s = vacancy_filling(A).unwrap();
        s.occupancy.pop();
        assert!(s.validate().is_err());
    }

    #[test]
    fn file_round_trip() {
        let s = vacancy_filling(A).unwrap();
        let f = ScenarioFile::from_scenario(&s, Some(A));
        assert!((f.lattice_constant_um.unwrap() - 20.0).abs() < 1e-12);
        let back = f.into_scenario().unwrap();
        for (a, b) in s.sites.iter().zip(&back.sites) {
            assert!(dist(*a, *b) < 1e-18);
        }
        let bad = r#"{"name":"x","sites":[[0,0]],"occupancy":[true],"extra":1}"#;
        assert!(serde_json::from_str::<ScenarioFile>(bad).is_err());
    }
}
