use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::ccl::{label_components, Connectivity};
use crate::error::{Error, Result};
use crate::som::{ClassAction, ClassTaxonomy, Mask, SemanticOccupancyMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FloorplanSpec {
    pub seed: u64,
    /// Side of the square world.
    pub extent_m: f64,
    pub cell_size_m: f32,
    pub rooms_min: usize,
    pub rooms_max: usize,
    pub corridor_width_m: f64,
    pub wall_thickness_m: f64,
    pub door_width_m: f64,
    /// Empty border between the building and the map edge.
    pub margin_m: f64,
    /// Building side as a fraction of the usable extent, sampled per axis.
    pub footprint_fraction: (f64, f64),
    pub min_room_side_m: f64,
    /// Mean object count per room, by class name.
    pub furniture_density: BTreeMap<String, f64>,
    /// Footprint side range for furniture.
    pub object_size_range_m: (f64, f64),
    /// Footprint side range for objects resting on furniture.
    pub small_object_size_range_m: (f64, f64),
    /// Free gap kept around furniture.
    pub clearance_m: f64,
    pub max_retries: usize,
}

impl Default for FloorplanSpec {
    fn default() -> Self {
        let furniture_density = [
            ("chair", 1.2),
            ("table", 0.8),
            ("sofa", 0.5),
            ("bed", 0.3),
            ("cabinet", 0.6),
            ("plant", 0.6),
            ("cushion", 1.0),
            ("objects", 1.0),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self {
            seed: 0,
            extent_m: 24.0,
            cell_size_m: crate::som::DEFAULT_CELL_SIZE_M,
            rooms_min: 4,
            rooms_max: 8,
            corridor_width_m: 1.5,
            wall_thickness_m: 0.15,
            door_width_m: 1.0,
            margin_m: 0.5,
            footprint_fraction: (0.7, 1.0),
            min_room_side_m: 2.5,
            furniture_density,
            object_size_range_m: (0.4, 1.2),
            small_object_size_range_m: (0.2, 0.4),
            clearance_m: 0.4,
            max_retries: 20,
        }
    }
}

impl FloorplanSpec {
    pub fn width_cells(&self) -> usize {
        (self.extent_m / self.cell_size_m as f64).round() as usize + 1
    }

    fn cells(&self, m: f64) -> usize {
        (m / self.cell_size_m as f64).round().max(1.0) as usize
    }

    pub fn validate(&self, taxonomy: &ClassTaxonomy) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.extent_m > 2.0 * self.corridor_width_m) || !(self.cell_size_m > 0.0) {
            return bad(format!("extent {} m too small for the corridor", self.extent_m));
        }
        if self.rooms_min == 0 || self.rooms_min > self.rooms_max {
            return bad(format!("room bounds [{}, {}]", self.rooms_min, self.rooms_max));
        }
        let (lo, hi) = self.footprint_fraction;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return bad(format!("footprint fraction ({lo}, {hi})"));
        }
        for (range, what) in [(self.object_size_range_m, "object"), (self.small_object_size_range_m, "small object")] {
            if !(range.0 > 0.0 && range.0 <= range.1) {
                return bad(format!("{what} size range {range:?}"));
            }
        }
        for (name, &d) in &self.furniture_density {
            if !(d >= 0.0) || !d.is_finite() {
                return bad(format!("density for {name} is {d}"));
            }
            let ch = taxonomy
                .find(name)
                .ok_or_else(|| Error::InvalidConfig(format!("class {name:?} not in taxonomy")))?;
            if !taxonomy.action(ch).is_movable() || !taxonomy.is_obstacle(ch) {
                return bad(format!("class {name:?} is not a movable obstacle"));
            }
        }
        wall_channel(taxonomy)?;
        Ok(())
    }
}

/// Half-open cell rectangle `[u0, u1) x [v0, v1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub u0: usize,
    pub v0: usize,
    pub u1: usize,
    pub v1: usize,
}

impl Rect {
    pub fn width(&self) -> usize {
        self.u1 - self.u0
    }

    pub fn height(&self) -> usize {
        self.v1 - self.v0
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        (self.u0..self.u1).contains(&u) && (self.v0..self.v1).contains(&v)
    }
}

/// A synthesized floor with its room layout.
#[derive(Debug, Clone)]
pub struct Floorplan {
    pub som: SemanticOccupancyMap,
    pub building: Rect,
    pub corridor: Rect,
    pub rooms: Vec<Rect>,
    pub doors: Vec<Rect>,
    pub objects: usize,
}

fn wall_channel(taxonomy: &ClassTaxonomy) -> Result<usize> {
    taxonomy
        .find("wall")
        .filter(|&c| taxonomy.is_obstacle(c))
        .or_else(|| {
            (0..taxonomy.semantic_channels())
                .find(|&c| taxonomy.is_obstacle(c) && taxonomy.action(c) == ClassAction::NoOperation)
        })
        .ok_or_else(|| Error::InvalidConfig("taxonomy has no wall-like class".into()))
}

/// Wall running along one axis; `across` is the range of its thickness.
#[derive(Debug, Clone, Copy)]
struct WallSeg {
    vertical: bool,
    across: (usize, usize),
    along: (usize, usize),
}

struct Canvas {
    w: usize,
    wall: Vec<bool>,
    door: Vec<bool>,
    /// Channel per cell for placed objects.
    object: Vec<Option<usize>>,
    /// Channel per cell for objects resting on furniture.
    small: Vec<Option<usize>>,
}

impl Canvas {
    fn idx(&self, u: usize, v: usize) -> usize {
        v * self.w + u
    }

    fn fill_wall(&mut self, r: Rect) {
        for v in r.v0..r.v1 {
            for u in r.u0..r.u1 {
                let i = self.idx(u, v);
                self.wall[i] = true;
            }
        }
    }
}

/// Synthesizes a semantic floorplan; deterministic in `spec`.
pub fn synthesize_floorplan(spec: &FloorplanSpec, taxonomy: &ClassTaxonomy) -> Result<SemanticOccupancyMap> {
    synthesize(spec, taxonomy).map(|f| f.som)
}

pub fn synthesize(spec: &FloorplanSpec, taxonomy: &ClassTaxonomy) -> Result<Floorplan> {
    spec.validate(taxonomy)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut last = String::new();
    for attempt in 0..spec.max_retries.max(1) {
        match attempt_floorplan(spec, taxonomy, &mut rng) {
            Ok(f) => return Ok(f),
            Err(reason) => {
                log::debug!("floorplan seed {} attempt {attempt}: {reason}", spec.seed);
                last = reason;
            }
        }
    }
    Err(Error::SynthesisFailed(format!(
        "no valid floorplan after {} attempts: {last}",
        spec.max_retries
    )))
}

fn attempt_floorplan(
    spec: &FloorplanSpec,
    taxonomy: &ClassTaxonomy,
    rng: &mut ChaCha8Rng,
) -> std::result::Result<Floorplan, String> {
    let w = spec.width_cells();
    let t = spec.cells(spec.wall_thickness_m);
    let margin = spec.cells(spec.margin_m);
    let corr = spec.cells(spec.corridor_width_m);
    let min_room = spec.cells(spec.min_room_side_m);
    let door_w = spec.cells(spec.door_width_m);
    let usable = w.saturating_sub(2 * margin);
    let (flo, fhi) = spec.footprint_fraction;
    let side = |rng: &mut ChaCha8Rng| ((rng.random_range(flo..=fhi) * usable as f64) as usize).min(usable);
    let (bw, bh) = (side(rng), side(rng));
    let building = Rect {
        u0: (w - bw) / 2,
        v0: (w - bh) / 2,
        u1: (w - bw) / 2 + bw,
        v1: (w - bh) / 2 + bh,
    };
    if bw < 2 * t + corr + 2 * min_room || bh < 2 * t + corr + 2 * min_room {
        return Err("building too small".into());
    }
    let mut canvas = Canvas {
        w,
        wall: vec![false; w * w],
        door: vec![false; w * w],
        object: vec![None; w * w],
        small: vec![None; w * w],
    };
    for r in [
        Rect { v1: building.v0 + t, ..building },
        Rect { v0: building.v1 - t, ..building },
        Rect { u1: building.u0 + t, ..building },
        Rect { u0: building.u1 - t, ..building },
    ] {
        canvas.fill_wall(r);
    }
    let interior = Rect {
        u0: building.u0 + t,
        v0: building.v0 + t,
        u1: building.u1 - t,
        v1: building.v1 - t,
    };

    // The corridor runs along the longer axis and splits the interior in two.
    let horizontal = interior.width() >= interior.height();
    let (lo, hi) = if horizontal { (interior.v0, interior.v1) } else { (interior.u0, interior.u1) };
    let s_min = lo + min_room;
    let s_max = hi - min_room - corr - 2 * t;
    if s_min > s_max {
        return Err("no room for the corridor".into());
    }
    let s = rng.random_range(s_min..=s_max);
    let (wall_a, wall_b) = ((s, s + t), (s + t + corr, s + 2 * t + corr));
    let span = if horizontal { (interior.u0, interior.u1) } else { (interior.v0, interior.v1) };
    let strip = |a: usize, b: usize| {
        if horizontal {
            Rect { v0: a, v1: b, ..interior }
        } else {
            Rect { u0: a, u1: b, ..interior }
        }
    };
    canvas.fill_wall(strip(wall_a.0, wall_a.1));
    canvas.fill_wall(strip(wall_b.0, wall_b.1));
    let corridor = strip(wall_a.1, wall_b.0);
    let corridor_walls = [
        WallSeg { vertical: !horizontal, across: wall_a, along: span },
        WallSeg { vertical: !horizontal, across: wall_b, along: span },
    ];
    let mut splits: Vec<WallSeg> = corridor_walls.to_vec();
    let mut rooms = vec![strip(lo, wall_a.0), strip(wall_b.1, hi)];

    let target = rng.random_range(spec.rooms_min.max(2)..=spec.rooms_max.max(2));
    while rooms.len() < target {
        let splittable = |r: &Rect| r.width().max(r.height()) >= 2 * min_room + t;
        let Some(k) = (0..rooms.len())
            .filter(|&k| splittable(&rooms[k]))
            .max_by_key(|&k| (rooms[k].area(), std::cmp::Reverse(k)))
        else {
            return Err(format!("cannot reach {target} rooms"));
        };
        let r = rooms[k];
        let vertical = r.width() >= r.height();
        let (a, b) = if vertical { (r.u0, r.u1) } else { (r.v0, r.v1) };
        let c = rng.random_range(a + min_room..=b - min_room - t);
        let (first, second, seg) = if vertical {
            (
                Rect { u1: c, ..r },
                Rect { u0: c + t, ..r },
                WallSeg { vertical: true, across: (c, c + t), along: (r.v0, r.v1) },
            )
        } else {
            (
                Rect { v1: c, ..r },
                Rect { v0: c + t, ..r },
                WallSeg { vertical: false, across: (c, c + t), along: (r.u0, r.u1) },
            )
        };
        canvas.fill_wall(if vertical { Rect { u0: c, u1: c + t, ..r } } else { Rect { v0: c, v1: c + t, ..r } });
        rooms[k] = first;
        rooms.insert(k + 1, second);
        splits.push(seg);
    }
    if rooms.len() < spec.rooms_min || rooms.len() > spec.rooms_max {
        return Err(format!("{} rooms outside bounds", rooms.len()));
    }

    let mut doors = Vec::new();
    for seg in &splits {
        let d = carve_door(&mut canvas, seg, seg.along, door_w, rng).ok_or("no space for a door")?;
        doors.push(d);
    }
    // Rooms along the corridor also open onto it directly.
    for room in &rooms {
        for seg in &corridor_walls {
            let touches = if seg.vertical {
                room.u1 == seg.across.0 || room.u0 == seg.across.1
            } else {
                room.v1 == seg.across.0 || room.v0 == seg.across.1
            };
            if !touches {
                continue;
            }
            let along = if seg.vertical { (room.v0, room.v1) } else { (room.u0, room.u1) };
            let already = doors.iter().any(|d| {
                if seg.vertical {
                    d.u0 == seg.across.0 && d.v0 >= along.0 && d.v1 <= along.1
                } else {
                    d.v0 == seg.across.0 && d.u0 >= along.0 && d.u1 <= along.1
                }
            });
            if !already {
                if let Some(d) = carve_door(&mut canvas, seg, along, door_w, rng) {
                    doors.push(d);
                }
            }
        }
    }

    let objects = furnish(spec, taxonomy, &mut canvas, &rooms, rng);
    let som = paint(spec, taxonomy, &canvas, building).map_err(|e| e.to_string())?;

    let free = free_mask(&som, taxonomy);
    let parts = label_components(&free, Connectivity::Four).len();
    if parts != 1 {
        return Err(format!("free space has {parts} components"));
    }
    Ok(Floorplan {
        som,
        building,
        corridor,
        rooms,
        doors,
        objects,
    })
}

/// Opens a door-width gap in a wall within `along`, where both sides are open floor.
fn carve_door(canvas: &mut Canvas, seg: &WallSeg, along: (usize, usize), width: usize, rng: &mut ChaCha8Rng) -> Option<Rect> {
    // Keep doors a little away from corners.
    let (a, b) = (along.0 + 2, along.1.saturating_sub(2));
    if b < a + width {
        return None;
    }
    let cell = |along_pos: usize, across_pos: usize| {
        if seg.vertical { (across_pos, along_pos) } else { (along_pos, across_pos) }
    };
    let side_open = |canvas: &Canvas, p: usize| {
        let (u1, v1) = cell(p, seg.across.0 - 1);
        let (u2, v2) = cell(p, seg.across.1);
        !canvas.wall[canvas.idx(u1, v1)] && !canvas.wall[canvas.idx(u2, v2)]
    };
    let starts: Vec<usize> = (a..=b - width)
        .filter(|&p| (p..p + width).all(|q| side_open(canvas, q)))
        .collect();
    if starts.is_empty() {
        return None;
    }
    let p = starts[rng.random_range(0..starts.len())];
    for q in p..p + width {
        for x in seg.across.0..seg.across.1 {
            let (u, v) = cell(q, x);
            let i = canvas.idx(u, v);
            canvas.wall[i] = false;
            canvas.door[i] = true;
        }
    }
    let (u0, v0) = cell(p, seg.across.0);
    let (u1, v1) = cell(p + width - 1, seg.across.1 - 1);
    Some(Rect {
        u0,
        v0,
        u1: u1 + 1,
        v1: v1 + 1,
    })
}

/// Rectangle or L-shaped footprint relative to its bounding box.
fn sample_shape(rng: &mut ChaCha8Rng, range: (usize, usize)) -> (usize, usize, Vec<(usize, usize)>) {
    let a = rng.random_range(range.0..=range.1);
    let b = rng.random_range(range.0..=range.1);
    let mut cells: Vec<(usize, usize)> = (0..b).flat_map(|y| (0..a).map(move |x| (x, y))).collect();
    if a >= 8 && b >= 8 && rng.random_bool(0.3) {
        let (cx, cy) = (rng.random_range(a / 3..=a / 2), rng.random_range(b / 3..=b / 2));
        let corner = rng.random_range(0..4);
        cells.retain(|&(x, y)| {
            let in_x = if corner % 2 == 0 { x < cx } else { x >= a - cx };
            let in_y = if corner / 2 == 0 { y < cy } else { y >= b - cy };
            !(in_x && in_y)
        });
    }
    (a, b, cells)
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
}

fn furnish(spec: &FloorplanSpec, taxonomy: &ClassTaxonomy, canvas: &mut Canvas, rooms: &[Rect], rng: &mut ChaCha8Rng) -> usize {
    let size = |r: (f64, f64)| (spec.cells(r.0), spec.cells(r.1).max(spec.cells(r.0)));
    let big = size(spec.object_size_range_m);
    let small = size(spec.small_object_size_range_m);
    let clear = spec.cells(spec.clearance_m);
    let classes: Vec<(usize, f64)> = spec
        .furniture_density
        .iter()
        .filter_map(|(name, &d)| taxonomy.find(name).map(|c| (c, d)))
        .collect();
    let (supported, standing): (Vec<_>, Vec<_>) = classes
        .into_iter()
        .partition(|&(c, _)| taxonomy.action(c) == ClassAction::OverlapRemoval);
    let mut count = 0;
    for room in rooms {
        let mut placed: Vec<Vec<(usize, usize)>> = Vec::new();
        for &(ch, d) in &standing {
            for _ in 0..poisson(rng, d) {
                let (a, b, shape) = sample_shape(rng, big);
                if room.width() < a + 2 * clear + 2 || room.height() < b + 2 * clear + 2 {
                    continue;
                }
                for _ in 0..30 {
                    let u = rng.random_range(room.u0 + clear..=room.u1 - clear - a);
                    let v = rng.random_range(room.v0 + clear..=room.v1 - clear - b);
                    let blocked = (v - clear..v + b + clear)
                        .any(|y| (u - clear..u + a + clear).any(|x| {
                            let i = canvas.idx(x, y);
                            canvas.wall[i] || canvas.door[i] || canvas.object[i].is_some()
                        }));
                    if blocked {
                        continue;
                    }
                    let cells: Vec<(usize, usize)> = shape.iter().map(|&(x, y)| (u + x, v + y)).collect();
                    for &(x, y) in &cells {
                        let i = canvas.idx(x, y);
                        canvas.object[i] = Some(ch);
                    }
                    placed.push(cells);
                    count += 1;
                    break;
                }
            }
        }
        if placed.is_empty() {
            continue;
        }
        for &(ch, d) in &supported {
            for _ in 0..poisson(rng, d) {
                let support = &placed[rng.random_range(0..placed.len())];
                let (a, b, _) = sample_shape(rng, small);
                let umin = support.iter().map(|c| c.0).min().unwrap();
                let vmin = support.iter().map(|c| c.1).min().unwrap();
                let umax = support.iter().map(|c| c.0).max().unwrap();
                let vmax = support.iter().map(|c| c.1).max().unwrap();
                if umax + 1 < umin + a || vmax + 1 < vmin + b {
                    continue;
                }
                for _ in 0..20 {
                    let u = rng.random_range(umin..=umax + 1 - a);
                    let v = rng.random_range(vmin..=vmax + 1 - b);
                    let on_support = (v..v + b).all(|y| (u..u + a).all(|x| support.contains(&(x, y))));
                    // Small objects never touch each other, so each stays its own component.
                    let touching = (v.saturating_sub(1)..v + b + 1)
                        .any(|y| (u.saturating_sub(1)..u + a + 1).any(|x| canvas.small[canvas.idx(x, y)].is_some()));
                    if !on_support || touching {
                        continue;
                    }
                    for y in v..v + b {
                        for x in u..u + a {
                            let i = canvas.idx(x, y);
                            canvas.small[i] = Some(ch);
                        }
                    }
                    count += 1;
                    break;
                }
            }
        }
    }
    count
}

fn paint(spec: &FloorplanSpec, taxonomy: &ClassTaxonomy, canvas: &Canvas, building: Rect) -> Result<SemanticOccupancyMap> {
    let w = canvas.w;
    let mut som = SemanticOccupancyMap::new(w, w, taxonomy.total_channels(), spec.cell_size_m)?;
    let wall = wall_channel(taxonomy)?;
    let floor = taxonomy.find("floor").filter(|&c| !taxonomy.is_obstacle(c));
    let door = taxonomy.find("door").filter(|&c| !taxonomy.is_obstacle(c));
    let ex = som.explorable_channel();
    for v in 0..w {
        for u in 0..w {
            let i = v * w + u;
            if !building.contains(u, v) {
                continue;
            }
            som.set_value_at(ex, i, 255);
            if canvas.wall[i] {
                som.set_value_at(wall, i, 255);
                continue;
            }
            if let Some(f) = floor {
                som.set_value_at(f, i, 255);
            }
            if canvas.door[i] {
                if let Some(d) = door {
                    som.set_value_at(d, i, 255);
                }
            }
            if let Some(c) = canvas.object[i] {
                som.set_value_at(c, i, 255);
            }
            if let Some(c) = canvas.small[i] {
                som.set_value_at(c, i, 255);
            }
        }
    }
    Ok(som)
}

fn free_mask(som: &SemanticOccupancyMap, taxonomy: &ClassTaxonomy) -> Mask {
    let occ = crate::som::collapse_to_occupancy(som, taxonomy, crate::som::DEFAULT_THRESHOLD)
        .expect("painted map matches its taxonomy");
    Mask::from_fn(som.width(), som.height(), |i| !occ.is_occupied(i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccl::extract_objects;

    fn spec(seed: u64) -> FloorplanSpec {
        FloorplanSpec {
            seed,
            extent_m: 16.0,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_same_map() {
        let t = ClassTaxonomy::desk();
        let a = synthesize_floorplan(&spec(3), &t).unwrap();
        let b = synthesize_floorplan(&spec(3), &t).unwrap();
        assert_eq!(crate::som::som_to_bytes(&a), crate::som::som_to_bytes(&b));
        let c = synthesize_floorplan(&spec(4), &t).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn desk_preset_dimensions() {
        let s = FloorplanSpec::default();
        assert_eq!(s.width_cells(), 481);
        let f = synthesize(&s, &ClassTaxonomy::desk()).unwrap();
        assert_eq!(f.som.width(), 481);
        assert!(f.objects > 0);
    }

    #[test]
    fn room_count_and_connectivity_over_many_seeds() {
        let t = ClassTaxonomy::desk();
        for seed in 0..50 {
            let s = spec(seed);
            let f = synthesize(&s, &t).unwrap();
            assert!((s.rooms_min..=s.rooms_max).contains(&f.rooms.len()), "seed {seed}");
            // Independent flood fill from one free cell must reach every free cell.
            let free = free_mask(&f.som, &t);
            let w = f.som.width();
            let start = (0..w * w).find(|&i| free.at(i)).unwrap();
            let mut seen = vec![false; w * w];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                let (u, v) = (i % w, i / w);
                let mut push = |j: usize| {
                    if free.at(j) && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                };
                if u > 0 { push(i - 1); }
                if u + 1 < w { push(i + 1); }
                if v > 0 { push(i - w); }
                if v + 1 < w { push(i + w); }
            }
            assert_eq!(seen.iter().filter(|&&s| s).count(), free.count(), "seed {seed}");
        }
    }

    #[test]
    fn walls_stay_clear_of_furniture_and_objects_are_large() {
        let t = ClassTaxonomy::desk();
        let f = synthesize(&spec(7), &t).unwrap();
        let wall = t.find("wall").unwrap();
        let objs = extract_objects(&f.som, &t, 0.5).unwrap();
        for per_channel in &objs {
            for o in per_channel {
                if o.movable() {
                    assert!(o.component.bbox.width() >= 3 && o.component.bbox.height() >= 3);
                    for &(u, v) in &o.component.cells {
                        assert_eq!(f.som.value(wall, u, v), 0);
                    }
                }
            }
        }
    }

    #[test]
    fn small_objects_rest_on_furniture() {
        let t = ClassTaxonomy::desk();
        let f = synthesize(&spec(11), &t).unwrap();
        let objs = extract_objects(&f.som, &t, 0.5).unwrap();
        let supports: Vec<usize> = (0..t.semantic_channels())
            .filter(|&c| t.action(c).is_movable() && t.action(c) != ClassAction::OverlapRemoval)
            .collect();
        for c in t.channels_with(ClassAction::OverlapRemoval) {
            for o in &objs[c] {
                for &(u, v) in &o.component.cells {
                    assert!(supports.iter().any(|&s| f.som.value(s, u, v) > 0));
                }
            }
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let t = ClassTaxonomy::desk();
        let mut s = spec(0);
        s.rooms_min = 9;
        assert!(matches!(synthesize(&s, &t), Err(Error::InvalidConfig(_))));
        let mut s = spec(0);
        s.furniture_density.insert("wall".into(), 1.0);
        assert!(synthesize(&s, &t).is_err());
        let mut s = spec(0);
        s.furniture_density.insert("chair".into(), -1.0);
        assert!(synthesize(&s, &t).is_err());
    }
}
