//! Incremental (Bowyer-Watson) Delaunay triangulation.
//!
//! Coordinates are snapped to an integer lattice of 2^22 cells across the
//! working extent so that the orientation and in-circle predicates are
//! evaluated exactly in `i128`. Points that snap to the same lattice node are
//! treated as duplicates and only the first one becomes a vertex.

use std::collections::HashMap;

use super::Point2;

const BOX_BITS: u32 = 22;
/// Super-triangle vertices sit this many lattice extents away from the data.
const SUPER_SCALE: i64 = 1 << 5;
const NONE: usize = usize::MAX;

type Q = (i64, i64);

fn orient(a: Q, b: Q, c: Q) -> i128 {
    let abx = (b.0 - a.0) as i128;
    let aby = (b.1 - a.1) as i128;
    let acx = (c.0 - a.0) as i128;
    let acy = (c.1 - a.1) as i128;
    abx * acy - aby * acx
}

/// Positive iff `d` lies strictly inside the circumcircle of the
/// counter-clockwise triangle `a`, `b`, `c`.
fn incircle(a: Q, b: Q, c: Q, d: Q) -> i128 {
    let adx = (a.0 - d.0) as i128;
    let ady = (a.1 - d.1) as i128;
    let bdx = (b.0 - d.0) as i128;
    let bdy = (b.1 - d.1) as i128;
    let cdx = (c.0 - d.0) as i128;
    let cdy = (c.1 - d.1) as i128;
    let alift = adx * adx + ady * ady;
    let blift = bdx * bdx + bdy * bdy;
    let clift = cdx * cdx + cdy * cdy;
    alift * (bdx * cdy - cdx * bdy) - blift * (adx * cdy - cdx * ady)
        + clift * (adx * bdy - bdx * ady)
}

#[derive(Clone, Copy)]
struct Tri {
    v: [usize; 3],
    /// `n[i]` is the triangle across the edge opposite `v[i]`.
    n: [usize; 3],
    alive: bool,
}

struct Mesh {
    verts: Vec<Q>,
    tris: Vec<Tri>,
    last: usize,
    mark: Vec<u32>,
    stamp: u32,
}

impl Mesh {
    fn locate(&self, p: Q) -> usize {
        let mut t = self.last;
        let mut steps = 0usize;
        'walk: loop {
            steps += 1;
            if steps > self.tris.len() + 16 {
                break;
            }
            let tri = &self.tris[t];
            for k in 0..3 {
                let i = (k + steps) % 3;
                let a = self.verts[tri.v[(i + 1) % 3]];
                let b = self.verts[tri.v[(i + 2) % 3]];
                if orient(a, b, p) < 0 {
                    t = tri.n[i];
                    continue 'walk;
                }
            }
            return t;
        }
        // Exhaustive fallback; never expected for a valid Delaunay mesh.
        self.tris
            .iter()
            .enumerate()
            .find(|(_, tri)| {
                tri.alive
                    && (0..3).all(|i| {
                        orient(
                            self.verts[tri.v[(i + 1) % 3]],
                            self.verts[tri.v[(i + 2) % 3]],
                            p,
                        ) >= 0
                    })
            })
            .map(|(i, _)| i)
            .expect("point outside the super triangle")
    }

    fn circumcircle_contains(&self, t: usize, p: Q) -> bool {
        let v = self.tris[t].v;
        incircle(self.verts[v[0]], self.verts[v[1]], self.verts[v[2]], p) > 0
    }

    /// Inserts vertex `pi`. Returns `false` when it duplicates an existing vertex.
    fn insert(&mut self, pi: usize) -> bool {
        let p = self.verts[pi];
        let t0 = self.locate(p);
        if self.tris[t0].v.iter().any(|&v| self.verts[v] == p) {
            return false;
        }

        self.stamp += 1;
        if self.mark.len() < self.tris.len() {
            self.mark.resize(self.tris.len(), 0);
        }
        let in_cavity = self.stamp;
        let mut cavity = vec![t0];
        let mut stack = vec![t0];
        self.mark[t0] = in_cavity;
        while let Some(t) = stack.pop() {
            for k in 0..3 {
                let nb = self.tris[t].n[k];
                if nb == NONE || self.mark[nb] == in_cavity {
                    continue;
                }
                if self.circumcircle_contains(nb, p) {
                    self.mark[nb] = in_cavity;
                    cavity.push(nb);
                    stack.push(nb);
                }
            }
        }

        // Boundary of the cavity as directed edges (a, b) with the outside neighbour.
        let mut boundary: Vec<(usize, usize, usize, usize)> = Vec::new();
        for &t in &cavity {
            let tri = self.tris[t];
            for k in 0..3 {
                let nb = tri.n[k];
                if nb == NONE || self.mark[nb] != in_cavity {
                    let a = tri.v[(k + 1) % 3];
                    let b = tri.v[(k + 2) % 3];
                    debug_assert!(orient(self.verts[a], self.verts[b], p) > 0);
                    boundary.push((a, b, nb, t));
                }
            }
        }

        let first_new = self.tris.len();
        for &(a, b, nb, old) in &boundary {
            let id = self.tris.len();
            self.tris.push(Tri {
                v: [a, b, pi],
                n: [NONE, NONE, nb],
                alive: true,
            });
            if nb != NONE {
                let slot = self.tris[nb]
                    .n
                    .iter()
                    .position(|&x| x == old)
                    .expect("neighbour link");
                self.tris[nb].n[slot] = id;
            }
        }
        let created = first_new..self.tris.len();
        for id in created.clone() {
            let [a, b, _] = self.tris[id].v;
            // Across (b, p): the new triangle whose boundary edge starts at b.
            let next = created
                .clone()
                .find(|&o| self.tris[o].v[0] == b)
                .expect("closed cavity boundary");
            // Across (p, a): the new triangle whose boundary edge ends at a.
            let prev = created
                .clone()
                .find(|&o| self.tris[o].v[1] == a)
                .expect("closed cavity boundary");
            self.tris[id].n[0] = next;
            self.tris[id].n[1] = prev;
        }
        for &t in &cavity {
            self.tris[t].alive = false;
        }
        self.last = first_new;
        true
    }
}

/// Delaunay triangulation of `points`, guaranteed exact for every triangle
/// whose circumcircle fits within `reach` of the data bounding box.
pub(crate) fn triangulate_with_reach(points: &[Point2], reach: f64) -> (Vec<[usize; 3]>, f64) {
    let n = points.len();
    if n < 3 {
        return (Vec::new(), 0.0);
    }
    let (mut minx, mut miny, mut maxx, mut maxy) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in points {
        minx = minx.min(p.x);
        miny = miny.min(p.y);
        maxx = maxx.max(p.x);
        maxy = maxy.max(p.y);
    }
    let extent = (maxx - minx).max(maxy - miny);
    let span = extent.max(reach.min(1e3 * extent)).max(1e-9);
    let cells = (1i64 << BOX_BITS) as f64;
    let quantum = span / cells;
    let scale = cells / span;

    let mut verts: Vec<Q> = points
        .iter()
        .map(|p| {
            (
                ((p.x - minx) * scale).round() as i64,
                ((p.y - miny) * scale).round() as i64,
            )
        })
        .collect();
    let m = SUPER_SCALE << BOX_BITS;
    verts.push((-m, -m));
    verts.push((4 * m, -m));
    verts.push((-m, 4 * m));

    let mut mesh = Mesh {
        verts,
        tris: vec![Tri {
            v: [n, n + 1, n + 2],
            n: [NONE; 3],
            alive: true,
        }],
        last: 0,
        mark: Vec::new(),
        stamp: 0,
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (mesh.verts[i], i));
    let mut seen: HashMap<Q, usize> = HashMap::with_capacity(n);
    for i in order {
        if seen.contains_key(&mesh.verts[i]) {
            continue;
        }
        seen.insert(mesh.verts[i], i);
        mesh.insert(i);
    }

    let tris = mesh
        .tris
        .iter()
        .filter(|t| t.alive && t.v.iter().all(|&v| v < n))
        .map(|t| t.v)
        .collect();
    (tris, quantum)
}

/// Delaunay triangulation of `points` as counter-clockwise index triples.
///
/// Collinear or fewer than three distinct points yield no triangles.
pub fn triangulate(points: &[Point2]) -> Vec<[usize; 3]> {
    triangulate_with_reach(points, 0.0).0
}
