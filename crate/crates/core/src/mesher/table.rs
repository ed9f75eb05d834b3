//! Marching-cubes case table, derived from cube topology instead of being
//! transcribed.
//!
//! Corner `i` sits at offset `(i & 1, i >> 1 & 1, i >> 2 & 1)`. On each face
//! the iso-segments run from every inside-to-outside crossing to the
//! outside-to-inside crossing that precedes it, walking the face
//! counter-clockwise as seen from outside the cube. Ambiguous faces therefore
//! keep their two inside corners apart. Segments chain into closed loops
//! that are fan-triangulated.

use std::sync::OnceLock;

/// Corner pairs of the 12 cube edges; the second corner differs from the
/// first in exactly one bit, which is set.
pub(crate) const EDGES: [(u8, u8); 12] = {
    let mut edges = [(0u8, 0u8); 12];
    let mut n = 0;
    let mut axis = 0;
    while axis < 3 {
        let mut c = 0u8;
        while c < 8 {
            if c & (1 << axis) == 0 {
                edges[n] = (c, c | (1 << axis));
                n += 1;
            }
            c += 1;
        }
        axis += 1;
    }
    edges
};

fn edge_between(a: u8, b: u8) -> usize {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    EDGES
        .iter()
        .position(|e| *e == (lo, hi))
        .expect("corners share an edge")
}

/// Corners of each face, counter-clockwise seen from outside.
fn face_cycles() -> Vec<[u8; 4]> {
    let mut faces = Vec::new();
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in 0..2u8 {
            let corner = |du: u8, dv: u8| (side << axis) | (du << u) | (dv << v);
            let ccw_plus = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
            faces.push(if side == 1 {
                ccw_plus
            } else {
                [ccw_plus[0], ccw_plus[3], ccw_plus[2], ccw_plus[1]]
            });
        }
    }
    faces
}

fn build_case(mask: u8, faces: &[[u8; 4]], flip: bool) -> Vec<[u8; 3]> {
    let inside = |c: u8| mask >> c & 1 == 1;
    // next[edge] = edge at the end of the segment starting at `edge`.
    let mut next = [usize::MAX; 12];
    for cycle in faces {
        // (edge, starts an outside run) for each crossing, in cycle order.
        let mut crossings = Vec::with_capacity(4);
        for i in 0..4 {
            let (a, b) = (cycle[i], cycle[(i + 1) % 4]);
            if inside(a) != inside(b) {
                crossings.push((edge_between(a, b), inside(a)));
            }
        }
        let n = crossings.len();
        for i in 0..n {
            if crossings[i].1 {
                let prev = crossings[(i + n - 1) % n];
                debug_assert!(!prev.1);
                next[crossings[i].0] = prev.0;
            }
        }
    }
    let mut used = [false; 12];
    let mut tris = Vec::new();
    for start in 0..12 {
        if next[start] == usize::MAX || used[start] {
            continue;
        }
        let mut lp = Vec::new();
        let mut e = start;
        while !used[e] {
            used[e] = true;
            lp.push(e as u8);
            e = next[e];
        }
        for i in 1..lp.len() - 1 {
            tris.push(if flip {
                [lp[0], lp[i + 1], lp[i]]
            } else {
                [lp[0], lp[i], lp[i + 1]]
            });
        }
    }
    tris
}

fn corner_pos(c: u8) -> [f64; 3] {
    [(c & 1) as f64, (c >> 1 & 1) as f64, (c >> 2 & 1) as f64]
}

fn midpoint(e: u8) -> [f64; 3] {
    let (a, b) = EDGES[e as usize];
    let (pa, pb) = (corner_pos(a), corner_pos(b));
    [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]), 0.5 * (pa[2] + pb[2])]
}

/// Triangle normal (unnormalized) of a table triangle on edge midpoints.
pub(crate) fn midpoint_normal(t: [u8; 3]) -> [f64; 3] {
    let (a, b, c) = (midpoint(t[0]), midpoint(t[1]), midpoint(t[2]));
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

/// Triangles (as edge triples) for each of the 256 inside-corner masks,
/// wound so normals point from inside corners toward outside corners.
pub(crate) fn case_table() -> &'static [Vec<[u8; 3]>] {
    static TABLE: OnceLock<Vec<Vec<[u8; 3]>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let faces = face_cycles();
        // Orientation reference: only corner 0 inside, normal must point away
        // from it.
        let probe = build_case(1, &faces, false);
        let n = midpoint_normal(probe[0]);
        let flip = n[0] + n[1] + n[2] < 0.0;
        (0..=255u8).map(|mask| build_case(mask, &faces, flip)).collect()
    })
}
