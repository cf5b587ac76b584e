use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ccl::{extract_objects, ObjectComponent};
use crate::error::{Error, Result};
use crate::som::{
    collapse_to_occupancy, diff_maps, ClassAction, ClassTaxonomy, DifferenceMap, SemanticOccupancyMap,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ManipulationSpec {
    pub seed: u64,
    pub p_remove: f64,
    pub p_displace: f64,
    pub max_place_attempts: usize,
    pub threshold: f64,
}

impl Default for ManipulationSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            p_remove: 0.3,
            p_displace: 0.5,
            max_place_attempts: 50,
            threshold: crate::som::DEFAULT_THRESHOLD,
        }
    }
}

impl ManipulationSpec {
    pub fn validate(&self) -> Result<()> {
        for (p, what) in [(self.p_remove, "p_remove"), (self.p_displace, "p_displace")] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{what} = {p} outside [0, 1]")));
            }
        }
        if self.max_place_attempts == 0 {
            return Err(Error::InvalidConfig("max_place_attempts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Objects are identified by (channel, component id) in the input map.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManipulationLog {
    pub removed: Vec<(usize, usize)>,
    /// (channel, id, du, dv)
    pub displaced: Vec<(usize, usize, i64, i64)>,
    pub placement_failures: Vec<(usize, usize)>,
    pub cascaded: Vec<(usize, usize)>,
}

/// Produces an alternative layout of `som` by deleting and relocating movable objects.
///
/// Returns the new map and the differences from `som` to it.
pub fn manipulate(
    som: &SemanticOccupancyMap,
    taxonomy: &ClassTaxonomy,
    spec: &ManipulationSpec,
) -> Result<(SemanticOccupancyMap, DifferenceMap, ManipulationLog)> {
    spec.validate()?;
    let objects = extract_objects(som, taxonomy, spec.threshold)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = som.clone();
    let mut log = ManipulationLog::default();
    let geom = som.geometry();
    let (w, h) = (geom.width, geom.height);

    let mut removed: Vec<&ObjectComponent> = Vec::new();
    let mut to_move: Vec<&ObjectComponent> = Vec::new();
    for o in objects.iter().flatten() {
        match o.action {
            ClassAction::Removal | ClassAction::Displacement => {
                if rng.random_bool(spec.p_remove) {
                    removed.push(o);
                } else if o.action == ClassAction::Displacement && rng.random_bool(spec.p_displace) {
                    to_move.push(o);
                }
            }
            _ => {}
        }
    }

    let clear = |out: &mut SemanticOccupancyMap, o: &ObjectComponent| {
        for &(u, v) in &o.component.cells {
            out.set_value(o.channel, u, v, 0);
        }
    };
    for o in &removed {
        clear(&mut out, o);
        log.removed.push((o.channel, o.component_id()));
    }

    // Anything resting on a removed or moving object goes away with it.
    let mut footprint = vec![false; w * h];
    for o in removed.iter().chain(&to_move) {
        for &(u, v) in &o.component.cells {
            footprint[v * w + u] = true;
        }
    }
    for o in objects.iter().flatten() {
        if o.action == ClassAction::OverlapRemoval && o.component.cells.iter().any(|&(u, v)| footprint[v * w + u]) {
            clear(&mut out, o);
            log.cascaded.push((o.channel, o.component_id()));
        }
    }

    let explorable = som.explorable_mask();
    let (mut eu0, mut ev0, mut eu1, mut ev1) = (w, h, 0, 0);
    for v in 0..h {
        for u in 0..w {
            if explorable.get(u, v) {
                eu0 = eu0.min(u);
                ev0 = ev0.min(v);
                eu1 = eu1.max(u);
                ev1 = ev1.max(v);
            }
        }
    }

    for o in &to_move {
        let values: Vec<u8> = o.component.cells.iter().map(|&(u, v)| out.value(o.channel, u, v)).collect();
        clear(&mut out, o);
        let occ = collapse_to_occupancy(&out, taxonomy, spec.threshold)?;
        let same = out.channel_mask(o.channel, spec.threshold);
        let b = o.component.bbox;
        let du_range = (eu0 as i64 - b.u_min as i64, eu1 as i64 - b.u_max as i64);
        let dv_range = (ev0 as i64 - b.v_min as i64, ev1 as i64 - b.v_max as i64);
        let mut placed = None;
        if du_range.0 <= du_range.1 && dv_range.0 <= dv_range.1 {
            for _ in 0..spec.max_place_attempts {
                let du = rng.random_range(du_range.0..=du_range.1);
                let dv = rng.random_range(dv_range.0..=dv_range.1);
                if (du, dv) == (0, 0) {
                    continue;
                }
                let fits = o.component.cells.iter().all(|&(u, v)| {
                    let (nu, nv) = ((u as i64 + du) as usize, (v as i64 + dv) as usize);
                    if occ.is_occupied(nv * w + nu) {
                        return false;
                    }
                    // Keep a gap to same-class objects so the object stays its own component.
                    (nv.saturating_sub(1)..=(nv + 1).min(h - 1))
                        .all(|y| (nu.saturating_sub(1)..=(nu + 1).min(w - 1)).all(|x| !same.get(x, y)))
                });
                if fits {
                    placed = Some((du, dv));
                    break;
                }
            }
        }
        match placed {
            Some((du, dv)) => {
                for (&(u, v), &b) in o.component.cells.iter().zip(&values) {
                    out.set_value(o.channel, (u as i64 + du) as usize, (v as i64 + dv) as usize, b);
                }
                log.displaced.push((o.channel, o.component_id(), du, dv));
            }
            None => {
                for (&(u, v), &b) in o.component.cells.iter().zip(&values) {
                    out.set_value(o.channel, u, v, b);
                }
                log::debug!(
                    "object {}:{} kept in place after {} attempts",
                    o.channel,
                    o.component_id(),
                    spec.max_place_attempts
                );
                log.placement_failures.push((o.channel, o.component_id()));
            }
        }
    }

    let before = collapse_to_occupancy(som, taxonomy, spec.threshold)?;
    let after = collapse_to_occupancy(&out, taxonomy, spec.threshold)?;
    let diff = diff_maps(&before, &after, &explorable)?;
    Ok((out, diff, log))
}
