//! Two-pass connected-component labeling with union-find label merging.

use crate::error::Result;
use crate::som::{ClassAction, ClassTaxonomy, Mask, SemanticOccupancyMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// Inclusive cell bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BBox {
    pub u_min: usize,
    pub v_min: usize,
    pub u_max: usize,
    pub v_max: usize,
}

impl BBox {
    pub fn width(&self) -> usize {
        self.u_max - self.u_min + 1
    }

    pub fn height(&self) -> usize {
        self.v_max - self.v_min + 1
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        (self.u_min..=self.u_max).contains(&u) && (self.v_min..=self.v_max).contains(&v)
    }
}

/// One connected region of a binary mask. Cells are listed in raster order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub id: usize,
    pub cells: Vec<(usize, usize)>,
    pub bbox: BBox,
}

impl Component {
    pub fn area(&self) -> usize {
        self.cells.len()
    }

    /// Cells translated so the bounding box starts at the origin.
    pub fn normalized_shape(&self) -> Vec<(usize, usize)> {
        let mut s: Vec<_> = self
            .cells
            .iter()
            .map(|&(u, v)| (u - self.bbox.u_min, v - self.bbox.v_min))
            .collect();
        s.sort_unstable();
        s
    }
}

/// A component of one semantic channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectComponent {
    pub channel: usize,
    pub action: ClassAction,
    pub component: Component,
}

impl ObjectComponent {
    pub fn component_id(&self) -> usize {
        self.component.id
    }

    pub fn area_cells(&self) -> usize {
        self.component.area()
    }

    pub fn movable(&self) -> bool {
        self.action.is_movable()
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new() -> Self {
        Self { parent: Vec::new() }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        // Smaller root wins so provisional labels stay ordered.
        if ra < rb {
            self.parent[rb as usize] = ra;
        } else if rb < ra {
            self.parent[ra as usize] = rb;
        }
    }
}

const NONE: u32 = u32::MAX;

/// Labels the true cells of `mask`.
///
/// Component ids follow first-encounter raster order, so identical inputs always
/// yield identical ids and cell orderings.
pub fn label_components(mask: &Mask, connectivity: Connectivity) -> Vec<Component> {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![NONE; w * h];
    let mut uf = UnionFind::new();

    for v in 0..h {
        for u in 0..w {
            let i = v * w + u;
            if !mask.at(i) {
                continue;
            }
            let mut neighbors = [NONE; 4];
            if u > 0 {
                neighbors[0] = labels[i - 1];
            }
            if v > 0 {
                neighbors[1] = labels[i - w];
                if connectivity == Connectivity::Eight {
                    if u > 0 {
                        neighbors[2] = labels[i - w - 1];
                    }
                    if u + 1 < w {
                        neighbors[3] = labels[i - w + 1];
                    }
                }
            }
            let mut label = NONE;
            for &n in neighbors.iter().filter(|&&n| n != NONE) {
                if label == NONE {
                    label = n;
                } else {
                    uf.union(label, n);
                }
            }
            labels[i] = if label == NONE { uf.make() } else { label };
        }
    }

    let mut final_id = vec![NONE; uf.parent.len()];
    let mut components: Vec<Component> = Vec::new();
    for v in 0..h {
        for u in 0..w {
            let l = labels[v * w + u];
            if l == NONE {
                continue;
            }
            let root = uf.find(l) as usize;
            if final_id[root] == NONE {
                final_id[root] = components.len() as u32;
                components.push(Component {
                    id: components.len(),
                    cells: Vec::new(),
                    bbox: BBox {
                        u_min: u,
                        v_min: v,
                        u_max: u,
                        v_max: v,
                    },
                });
            }
            let c = &mut components[final_id[root] as usize];
            c.cells.push((u, v));
            c.bbox.u_min = c.bbox.u_min.min(u);
            c.bbox.u_max = c.bbox.u_max.max(u);
            c.bbox.v_max = v;
        }
    }
    components
}

/// Components of every semantic channel (8-connected), one list per channel.
///
/// NoOperation channels are labeled too; their components are simply not movable.
pub fn extract_objects(
    som: &SemanticOccupancyMap,
    taxonomy: &ClassTaxonomy,
    threshold: f64,
) -> Result<Vec<Vec<ObjectComponent>>> {
    taxonomy.check(som.channels())?;
    Ok((0..taxonomy.semantic_channels())
        .map(|ch| {
            let action = taxonomy.action(ch);
            label_components(&som.channel_mask(ch, threshold), Connectivity::Eight)
                .into_iter()
                .map(|component| ObjectComponent {
                    channel: ch,
                    action,
                    component,
                })
                .collect()
        })
        .collect())
}
