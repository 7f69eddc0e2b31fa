//! Synthetic scenes with controlled obstacle extent and dispersion, ASCII map
//! ingestion and the JSON scenario format.

use std::collections::VecDeque;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::geometry::{Cell, GridRegion, SensorSpec};

/// Mean number of occupied 8-neighbors over occupied cells.
pub fn compute_gamma(region: &GridRegion) -> Result<f64, ScenarioError> {
    let occ = region.occupied_cells();
    if occ.is_empty() {
        return Err(ScenarioError::UndefinedGamma);
    }
    let total: usize = occ.iter().map(|&c| occupied_neighbors(region, c)).sum();
    Ok(total as f64 / occ.len() as f64)
}

fn neighbors8(region: &GridRegion, c: Cell) -> impl Iterator<Item = Cell> + '_ {
    let (w, h) = (region.width() as isize, region.height() as isize);
    (-1isize..=1).flat_map(move |dr| {
        (-1isize..=1).filter_map(move |dc| {
            let (x, y) = (c.col as isize + dc, c.row as isize + dr);
            ((dc, dr) != (0, 0) && x >= 0 && y >= 0 && x < w && y < h).then(|| Cell::new(x as usize, y as usize))
        })
    })
}

fn occupied_neighbors(region: &GridRegion, c: Cell) -> usize {
    neighbors8(region, c).filter(|&n| region.is_occupied(n)).count()
}

/// Open cells form one 4-connected component (vacuously true when none).
pub fn free_space_connected(region: &GridRegion) -> bool {
    let open = region.open_cells();
    let Some(&first) = open.first() else {
        return true;
    };
    let (w, h) = (region.width(), region.height());
    let mut seen = vec![false; region.cell_count()];
    seen[region.index(first)] = true;
    let mut queue = VecDeque::from([first]);
    let mut count = 1;
    while let Some(c) = queue.pop_front() {
        let mut step = |col: usize, row: usize| {
            let n = Cell::new(col, row);
            let i = region.index(n);
            if !seen[i] && !region.is_occupied(n) {
                seen[i] = true;
                count += 1;
                queue.push_back(n);
            }
        };
        if c.col > 0 {
            step(c.col - 1, c.row);
        }
        if c.col + 1 < w {
            step(c.col + 1, c.row);
        }
        if c.row > 0 {
            step(c.col, c.row - 1);
        }
        if c.row + 1 < h {
            step(c.col, c.row + 1);
        }
    }
    count == open.len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    /// Target fraction of occupied cells, in `[0, 1)`.
    pub extent: f64,
    pub gamma_target: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub region: GridRegion,
    pub extent: f64,
    /// `None` for an obstacle-free region.
    pub gamma: Option<f64>,
}

/// Block shapes `(w, h)` and the dispersion of an isolated block.
const SHAPES: [(usize, usize); 10] = [
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
    (3, 4),
    (4, 4),
    (5, 5),
    (6, 6),
];

fn block_gamma(w: usize, h: usize) -> f64 {
    let r = GridRegion::with_obstacles(w, h, 1.0, &[]).expect("nonempty block");
    let mut all = r.clone();
    for c in r.open_cells() {
        all.set_occupied(c, true);
    }
    compute_gamma(&all).expect("block is occupied")
}

fn shape_for(gamma: f64) -> (usize, usize) {
    *SHAPES
        .iter()
        .min_by(|a, b| {
            let da = (block_gamma(a.0, a.1) - gamma).abs();
            let db = (block_gamma(b.0, b.1) - gamma).abs();
            da.total_cmp(&db)
        })
        .expect("shape table is nonempty")
}

const RETRIES: usize = 20;

/// Deterministic scene for the spec. Blocks sized for the target
/// dispersion are dropped on a staggered lattice with one-cell gaps, extra
/// blocks are added anywhere if the lattice is full, then single cells are
/// added or removed until the occupied count is exact. Free space must stay
/// 4-connected; otherwise the scene is re-rolled. Among valid scenes the one
/// closest to the target dispersion is returned.
pub fn generate(spec: &ScenarioSpec) -> Result<Generated, ScenarioError> {
    if !(0.0..1.0).contains(&spec.extent) {
        return Err(ScenarioError::Invalid(format!("extent {} outside [0, 1)", spec.extent)));
    }
    if !(0.0..=8.0).contains(&spec.gamma_target) {
        return Err(ScenarioError::Invalid(format!(
            "gamma {} outside [0, 8]",
            spec.gamma_target
        )));
    }
    let empty = GridRegion::open(spec.width, spec.height, spec.cell_size)?;
    let target = (spec.extent * empty.cell_count() as f64).round() as usize;
    if target == 0 {
        return Ok(Generated {
            region: empty,
            extent: 0.0,
            gamma: None,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut best: Option<(f64, GridRegion)> = None;
    let mut last = empty.clone();
    for _ in 0..RETRIES {
        let region = attempt(&empty, target, spec.gamma_target, &mut rng);
        if region.occupied_count() == target && free_space_connected(&region) {
            let g = compute_gamma(&region)?;
            let err = (g - spec.gamma_target).abs();
            if best.as_ref().is_none_or(|(e, _)| err < *e) {
                best = Some((err, region));
            }
            if err <= 0.5 {
                break;
            }
        } else {
            last = region;
        }
    }
    match best {
        Some((_, region)) => Ok(Generated {
            extent: region.extent(),
            gamma: Some(compute_gamma(&region)?),
            region,
        }),
        None => Err(ScenarioError::GenerationFailed {
            attempts: RETRIES,
            extent: last.extent(),
            gamma: compute_gamma(&last).unwrap_or(0.0),
        }),
    }
}

fn attempt(empty: &GridRegion, target: usize, gamma: f64, rng: &mut ChaCha8Rng) -> GridRegion {
    let (w, h) = (empty.width(), empty.height());
    let (bw, bh) = shape_for(gamma);
    let (bw, bh) = if rng.gen_bool(0.5) {
        (bw.min(w), bh.min(h))
    } else {
        (bh.min(w), bw.min(h))
    };
    let mut region = empty.clone();
    let fill = |region: &mut GridRegion, col: usize, row: usize, on: bool| {
        for r in row..row + bh {
            for c in col..col + bw {
                region.set_occupied(Cell::new(c, r), on);
            }
        }
    };

    // Staggered lattice: every lattice row gets its own horizontal offset.
    let mut slots = Vec::new();
    let mut row = rng.gen_range(0..=bh.min(h - bh));
    while row + bh <= h {
        let mut col = rng.gen_range(0..=bw.min(w - bw));
        while col + bw <= w {
            slots.push((col, row));
            col += bw + 1;
        }
        row += bh + 1;
    }
    slots.shuffle(rng);
    let per_block = bw * bh;
    for &(c, r) in &slots {
        if region.occupied_count() + per_block > target {
            break;
        }
        fill(&mut region, c, r, true);
    }

    // Lattice exhausted: blocks anywhere that keep free space connected.
    let mut tries = 0;
    while region.occupied_count() + per_block <= target && tries < 50 * (target / per_block + 1) {
        tries += 1;
        let (c, r) = (rng.gen_range(0..=w - bw), rng.gen_range(0..=h - bh));
        let cells: Vec<Cell> = (r..r + bh)
            .flat_map(|y| (c..c + bw).map(move |x| Cell::new(x, y)))
            .collect();
        if cells.iter().any(|&x| region.is_occupied(x)) {
            continue;
        }
        fill(&mut region, c, r, true);
        if !free_space_connected(&region) {
            fill(&mut region, c, r, false);
        }
    }

    // Single cells: grow next to obstacles for clustered targets, isolated
    // otherwise; shrink from the least connected cells.
    while region.occupied_count() < target {
        let mut cand: Vec<(usize, Cell)> = region
            .open_cells()
            .into_iter()
            .map(|c| (occupied_neighbors(&region, c), c))
            .collect();
        cand.shuffle(rng);
        if gamma >= 0.5 {
            cand.sort_by_key(|&(n, _)| std::cmp::Reverse(n));
        } else {
            cand.sort_by_key(|&(n, _)| n);
        }
        let mut placed = false;
        for &(_, c) in &cand {
            region.set_occupied(c, true);
            if free_space_connected(&region) {
                placed = true;
                break;
            }
            region.set_occupied(c, false);
        }
        if !placed {
            break;
        }
    }
    while region.occupied_count() > target {
        let mut occ: Vec<(usize, Cell)> = region
            .occupied_cells()
            .into_iter()
            .map(|c| (occupied_neighbors(&region, c), c))
            .collect();
        occ.shuffle(rng);
        occ.sort_by_key(|&(n, _)| n);
        region.set_occupied(occ[0].1, false);
    }
    region
}

/// Occupied cells from an ASCII map: `#` occupied, `.` open, first line is
/// the top row. Blank trailing lines are ignored.
pub fn parse_ascii_map(text: &str, cell_size: f64) -> Result<GridRegion, ScenarioError> {
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    let end = lines.iter().rposition(|l| !l.is_empty()).map_or(0, |i| i + 1);
    let lines = &lines[..end];
    if lines.is_empty() {
        return Err(ScenarioError::Empty);
    }
    let width = lines[0].chars().count();
    let height = lines.len();
    let mut occ = vec![false; width * height];
    for (li, line) in lines.iter().enumerate() {
        let found = line.chars().count();
        if found != width {
            return Err(ScenarioError::RaggedRow {
                line: li + 1,
                expected: width,
                found,
            });
        }
        let row = height - 1 - li;
        for (col, ch) in line.chars().enumerate() {
            occ[row * width + col] = match ch {
                '#' => true,
                '.' => false,
                other => {
                    return Err(ScenarioError::UnknownChar {
                        line: li + 1,
                        column: col + 1,
                        found: other,
                    })
                }
            };
        }
    }
    Ok(GridRegion::new(width, height, cell_size, occ)?)
}

/// ASCII rows, top row first.
pub fn ascii_rows(region: &GridRegion) -> Vec<String> {
    (0..region.height())
        .rev()
        .map(|row| {
            (0..region.width())
                .map(|col| {
                    if region.is_occupied(Cell::new(col, row)) {
                        '#'
                    } else {
                        '.'
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorEntry {
    pub type_id: usize,
    pub r_s_m: f64,
    pub r_c_m: f64,
}

/// Scenario file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub width: usize,
    pub height: usize,
    pub cell_size_m: f64,
    /// Rows of `#`/`.`, top row first.
    pub occupancy: Vec<String>,
    pub sensors: Vec<SensorEntry>,
    pub k: Vec<u32>,
    pub seed: u64,
}

impl Scenario {
    pub fn new(region: &GridRegion, specs: &[SensorSpec], k: &[u32], seed: u64) -> Self {
        Scenario {
            width: region.width(),
            height: region.height(),
            cell_size_m: region.cell_size(),
            occupancy: ascii_rows(region),
            sensors: specs
                .iter()
                .map(|s| SensorEntry {
                    type_id: s.type_id,
                    r_s_m: s.sensing_radius,
                    r_c_m: s.comm_radius,
                })
                .collect(),
            k: k.to_vec(),
            seed,
        }
    }

    pub fn region(&self) -> Result<GridRegion, ScenarioError> {
        let region = parse_ascii_map(&self.occupancy.join("\n"), self.cell_size_m)?;
        if (region.width(), region.height()) != (self.width, self.height) {
            return Err(ScenarioError::Invalid(format!(
                "occupancy is {}x{}, header says {}x{}",
                region.width(),
                region.height(),
                self.width,
                self.height
            )));
        }
        Ok(region)
    }

    /// Specs ordered by type id, which must run `0..n`.
    pub fn specs(&self) -> Result<Vec<SensorSpec>, ScenarioError> {
        let mut entries = self.sensors.clone();
        entries.sort_by_key(|e| e.type_id);
        if entries.iter().enumerate().any(|(i, e)| e.type_id != i) {
            return Err(ScenarioError::Invalid("sensor type ids must be 0..n".into()));
        }
        let specs = entries
            .iter()
            .map(|e| SensorSpec::new(e.type_id, e.r_s_m, e.r_c_m))
            .collect::<Result<Vec<_>, _>>()?;
        if specs.is_empty() {
            return Err(ScenarioError::Invalid("no sensor types".into()));
        }
        if self.k.len() != specs.len() {
            return Err(ScenarioError::Invalid(format!(
                "{} demands for {} sensor types",
                self.k.len(),
                specs.len()
            )));
        }
        Ok(specs)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        let s: Scenario = serde_json::from_str(&text)?;
        s.region()?;
        s.specs()?;
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region_with(w: usize, h: usize, occ: &[(usize, usize)]) -> GridRegion {
        let cells: Vec<Cell> = occ.iter().map(|&(c, r)| Cell::new(c, r)).collect();
        GridRegion::with_obstacles(w, h, 1.0, &cells).unwrap()
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(compute_gamma(&region_with(3, 3, &[(1, 1)])).unwrap(), 0.0);
        assert_eq!(
            compute_gamma(&region_with(4, 4, &[(1, 1), (2, 1), (1, 2), (2, 2)])).unwrap(),
            3.0
        );
        let strip = compute_gamma(&region_with(5, 3, &[(1, 1), (2, 1), (3, 1)])).unwrap();
        assert!((strip - 4.0 / 3.0).abs() < 1e-12);
        assert!(matches!(
            compute_gamma(&region_with(2, 2, &[])),
            Err(ScenarioError::UndefinedGamma)
        ));
    }

    #[test]
    fn block_gamma_table() {
        assert_eq!(block_gamma(1, 1), 0.0);
        assert_eq!(block_gamma(1, 2), 1.0);
        assert!((block_gamma(3, 3) - 40.0 / 9.0).abs() < 1e-12);
        assert_eq!(block_gamma(4, 4), 5.25);
    }

    fn spec(extent: f64, gamma: f64, seed: u64) -> ScenarioSpec {
        ScenarioSpec {
            width: 20,
            height: 20,
            cell_size: 1.0,
            extent,
            gamma_target: gamma,
            seed,
        }
    }

    #[test]
    fn extent_zero_is_empty() {
        let g = generate(&spec(0.0, 3.0, 1)).unwrap();
        assert_eq!(g.region.occupied_count(), 0);
        assert_eq!(g.gamma, None);
    }

    #[test]
    fn dispersion_targets() {
        for seed in 0..5 {
            let low = generate(&spec(0.25, 0.0, seed)).unwrap();
            assert_eq!(low.region.occupied_count(), 100);
            assert!(low.gamma.unwrap() < 0.5, "seed {seed}: {:?}", low.gamma);
            let high = generate(&spec(0.25, 6.0, seed)).unwrap();
            assert_eq!(high.region.occupied_count(), 100);
            assert!(high.gamma.unwrap() >= 5.5, "seed {seed}: {:?}", high.gamma);
            assert!(free_space_connected(&low.region) && free_space_connected(&high.region));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        for (e, g) in [(0.05, 1.0), (0.25, 5.0), (0.5, 1.0), (0.5, 5.0)] {
            let a = generate(&spec(e, g, 9)).unwrap();
            let b = generate(&spec(e, g, 9)).unwrap();
            assert_eq!(a, b);
            let want = (e * 400.0_f64).round() as usize;
            assert!(a.region.occupied_count().abs_diff(want) <= 1);
            assert!(free_space_connected(&a.region));
        }
    }

    #[test]
    fn bad_extent_rejected() {
        assert!(matches!(generate(&spec(1.0, 0.0, 0)), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn ascii_map() {
        let r = parse_ascii_map("#.\n.#\n", 1.0).unwrap();
        assert_eq!(r.occupied_count(), 2);
        assert!(r.is_occupied(Cell::new(0, 1)) && r.is_occupied(Cell::new(1, 0)));
        assert_eq!(compute_gamma(&r).unwrap(), 1.0);
        assert_eq!(ascii_rows(&r), vec!["#.", ".#"]);
        assert!(matches!(parse_ascii_map("", 1.0), Err(ScenarioError::Empty)));
        assert!(matches!(
            parse_ascii_map("..\n.\n", 1.0),
            Err(ScenarioError::RaggedRow {
                line: 2,
                expected: 2,
                found: 1
            })
        ));
        assert!(matches!(
            parse_ascii_map("..\n.x\n", 1.0),
            Err(ScenarioError::UnknownChar {
                line: 2,
                column: 2,
                found: 'x'
            })
        ));
    }

    #[test]
    fn scenario_round_trip() {
        let region = generate(&spec(0.2, 2.0, 4)).unwrap().region;
        let specs = vec![SensorSpec::new(0, 3.0, 6.0).unwrap()];
        let s = Scenario::new(&region, &specs, &[3], 4);
        let dir = std::env::temp_dir().join(format!("sensyn-scenario-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s.json");
        s.save(&path).unwrap();
        let back = Scenario::load(&path).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.region().unwrap(), region);
        assert_eq!(back.specs().unwrap(), specs);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
