//! Decomposition of a binary edge map into pieces, junction clusters and
//! through-edges.
//!
//! A junction pixel is an edge pixel with at least three edge neighbors whose
//! 8-ring also shows at least three separate edge runs; 8-connected junction
//! pixels form one cluster. Removing all junction pixels leaves the pieces.
//! At clusters with four or more arms, arms pointing in near-opposite
//! directions are paired; chains of paired pieces form through-edges, the
//! unsplit "parents" of those pieces.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::grid::{Grid, Pixel, NEIGHBORS_8};
use crate::postproc::BinaryEdgeMap;

const NONE: u32 = u32::MAX;
/// Arm pixels within this Chebyshev distance of a cluster set the arm's
/// direction.
const ARM_REACH: usize = 5;
/// Two arms continue one another when the cosine of their directions is at
/// most this.
const OPPOSITE_COS: f64 = -0.85;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    /// Maximal junction-free run of edge pixels.
    Piece,
    /// Pieces joined straight through one or more junctions.
    Through,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSegment {
    pub id: usize,
    pub kind: SegmentKind,
    /// Chain order where the shape allows it.
    pub pixels: Vec<Pixel>,
    pub endpoints: Vec<Pixel>,
    /// Piece ids making up this segment (`[id]` for a piece).
    pub pieces: Vec<usize>,
    /// Junction cluster ids this segment touches or passes through.
    pub junctions: Vec<usize>,
}

impl EdgeSegment {
    pub fn length(&self) -> usize {
        self.pixels.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeGraph {
    pub rows: usize,
    pub cols: usize,
    /// Pieces occupy ids `0..piece_count`, through-edges follow.
    pub segments: Vec<EdgeSegment>,
    pub piece_count: usize,
    /// All junction pixels, row-major.
    pub junctions: Vec<Pixel>,
    pub clusters: Vec<Vec<Pixel>>,
    /// Segments currently standing as edges (not yet split).
    pub live: BTreeSet<usize>,
    pub parent_children: BTreeMap<usize, Vec<usize>>,
    pub protected_pt: BTreeSet<usize>,
    pub boundary_ce: BTreeSet<usize>,
    pub deleted: BTreeSet<usize>,
    pub restored_by_parent: BTreeSet<usize>,
    /// Free endpoints per piece: endpoints not adjacent to a junction.
    pub(crate) free_endpoints: Vec<usize>,
}

fn ring_runs(rows: usize, cols: usize, p: Pixel, inside: impl Fn(Pixel) -> bool) -> usize {
    let bits: Vec<bool> = NEIGHBORS_8
        .iter()
        .map(|&(dr, dc)| {
            let (r, c) = (p.0 as isize + dr, p.1 as isize + dc);
            r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols && inside((r as usize, c as usize))
        })
        .collect();
    (0..8).filter(|&i| !bits[i] && bits[(i + 1) % 8]).count()
}

fn chebyshev(a: Pixel, b: Pixel) -> usize {
    a.0.abs_diff(b.0).max(a.1.abs_diff(b.1))
}

fn components(
    pixels: &[Pixel],
    label: &mut Grid<u32>,
    first_id: u32,
    blocked: impl Fn(Pixel, Pixel) -> bool,
) -> Vec<Vec<Pixel>> {
    let (rows, cols) = label.dims();
    let mut out = Vec::new();
    for &start in pixels {
        if label[start] != NONE - 1 {
            continue;
        }
        let id = first_id + out.len() as u32;
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        label[start] = id;
        while let Some(p) = queue.pop_front() {
            comp.push(p);
            for (dr, dc) in NEIGHBORS_8 {
                let (r, c) = (p.0 as isize + dr, p.1 as isize + dc);
                if r < 0 || c < 0 || r as usize >= rows || c as usize >= cols {
                    continue;
                }
                let q = (r as usize, c as usize);
                if label[q] == NONE - 1 && !blocked(p, q) {
                    label[q] = id;
                    queue.push_back(q);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Orders a piece from one end along 4-neighbors first, falling back to
/// breadth-first order for whatever a single walk cannot reach.
fn order_piece(comp: &[Pixel], start: Pixel, member: &HashSet<Pixel>) -> Vec<Pixel> {
    let mut seen: HashSet<Pixel> = HashSet::with_capacity(comp.len());
    let mut order = Vec::with_capacity(comp.len());
    let mut cur = start;
    seen.insert(cur);
    order.push(cur);
    loop {
        let mut next = None;
        for pass in 0..2 {
            for (i, &(dr, dc)) in NEIGHBORS_8.iter().enumerate() {
                if (i % 2 == 0) != (pass == 0) {
                    continue;
                }
                let (r, c) = (cur.0 as isize + dr, cur.1 as isize + dc);
                if r < 0 || c < 0 {
                    continue;
                }
                let q = (r as usize, c as usize);
                if member.contains(&q) && !seen.contains(&q) {
                    next = Some(q);
                    break;
                }
            }
            if next.is_some() {
                break;
            }
        }
        match next {
            Some(q) => {
                seen.insert(q);
                order.push(q);
                cur = q;
            }
            None => break,
        }
    }
    if order.len() < comp.len() {
        let mut queue: VecDeque<Pixel> = order.iter().copied().collect();
        while let Some(p) = queue.pop_front() {
            for (dr, dc) in NEIGHBORS_8 {
                let (r, c) = (p.0 as isize + dr, p.1 as isize + dc);
                if r < 0 || c < 0 {
                    continue;
                }
                let q = (r as usize, c as usize);
                if member.contains(&q) && seen.insert(q) {
                    order.push(q);
                    queue.push_back(q);
                }
            }
        }
    }
    order
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

pub fn build_edge_graph(map: &BinaryEdgeMap) -> EdgeGraph {
    let (rows, cols) = map.dims();
    let mask = map.to_mask();
    let edge_pixels = map.edge_pixels();
    let in_mask = |p: Pixel| mask[p];

    let junctions: Vec<Pixel> = edge_pixels
        .iter()
        .copied()
        .filter(|&p| {
            mask.neighbors8(p.0, p.1).filter(|&q| mask[q]).count() >= 3 && ring_runs(rows, cols, p, in_mask) >= 3
        })
        .collect();

    // NONE - 1 marks "unlabeled member" for the flood fill.
    let mut jlabel = Grid::filled(rows, cols, NONE);
    for &p in &junctions {
        jlabel[p] = NONE - 1;
    }
    let clusters = components(&junctions, &mut jlabel, 0, |_, _| false);

    // Two diagonal pixels both next to one junction pixel lie in separate
    // runs of its ring, i.e. on different arms.
    let shares_junction = |p: Pixel, q: Pixel| {
        p.0 != q.0
            && p.1 != q.1
            && mask
                .neighbors8(p.0, p.1)
                .any(|j| jlabel[j] != NONE && chebyshev(j, q) == 1)
    };

    let mut plabel = Grid::filled(rows, cols, NONE);
    for &p in &edge_pixels {
        if jlabel[p] == NONE {
            plabel[p] = NONE - 1;
        }
    }
    let piece_pixels: Vec<Pixel> = edge_pixels.iter().copied().filter(|&p| jlabel[p] == NONE).collect();
    let comps = components(&piece_pixels, &mut plabel, 0, shares_junction);

    let mut segments = Vec::with_capacity(comps.len());
    let mut free_endpoints = Vec::with_capacity(comps.len());
    let mut attached: Vec<Vec<usize>> = vec![Vec::new(); clusters.len()];
    for (id, comp) in comps.iter().enumerate() {
        let idu = id as u32;
        let mut sorted = comp.clone();
        sorted.sort_unstable();
        let ends: Vec<Pixel> = sorted
            .iter()
            .copied()
            .filter(|&p| ring_runs(rows, cols, p, |q| plabel[q] == idu) <= 1)
            .collect();
        let endpoints = match ends.len() {
            0..=2 => ends,
            _ => {
                let first = ends[0];
                let far = ends
                    .iter()
                    .copied()
                    .max_by_key(|&q| (q.0.abs_diff(first.0).pow(2) + q.1.abs_diff(first.1).pow(2), std::cmp::Reverse(q)))
                    .expect("non-empty");
                vec![first, far]
            }
        };
        let member: HashSet<Pixel> = comp.iter().copied().collect();
        let start = endpoints.first().copied().unwrap_or(sorted[0]);
        let pixels = order_piece(comp, start, &member);

        let mut touched = BTreeSet::new();
        for &p in comp {
            for q in mask.neighbors8(p.0, p.1) {
                if jlabel[q] != NONE {
                    touched.insert(jlabel[q] as usize);
                }
            }
        }
        for &j in &touched {
            attached[j].push(id);
        }
        let free = endpoints
            .iter()
            .filter(|&&e| mask.neighbors8(e.0, e.1).all(|q| jlabel[q] == NONE))
            .count();
        free_endpoints.push(free);
        segments.push(EdgeSegment {
            id,
            kind: SegmentKind::Piece,
            pixels,
            endpoints,
            pieces: vec![id],
            junctions: touched.into_iter().collect(),
        });
    }
    let piece_count = segments.len();

    // Pair near-opposite arms at clusters with >= 4 arms.
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (j, arms) in attached.iter().enumerate() {
        if arms.len() < 4 {
            continue;
        }
        let cl = &clusters[j];
        let (cr, cc) = centroid(cl);
        let dirs: Vec<(f64, f64)> = arms
            .iter()
            .map(|&a| {
                let near: Vec<Pixel> = segments[a]
                    .pixels
                    .iter()
                    .copied()
                    .filter(|&p| cl.iter().any(|&q| chebyshev(p, q) <= ARM_REACH))
                    .collect();
                let (mr, mc) = centroid(&near);
                let (dr, dc) = (mr - cr, mc - cc);
                let n = dr.hypot(dc);
                if n > 0.0 {
                    (dr / n, dc / n)
                } else {
                    (0.0, 0.0)
                }
            })
            .collect();
        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..arms.len() {
            for k in i + 1..arms.len() {
                let cos = dirs[i].0 * dirs[k].0 + dirs[i].1 * dirs[k].1;
                if cos <= OPPOSITE_COS {
                    cands.push((cos, arms[i], arms[k]));
                }
            }
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used = HashSet::new();
        for (_, a, b) in cands {
            if used.contains(&a) || used.contains(&b) {
                continue;
            }
            used.insert(a);
            used.insert(b);
            pairs.push((a, b, j));
        }
    }

    let mut uf: Vec<usize> = (0..piece_count).collect();
    for &(a, b, _) in &pairs {
        let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
        if ra != rb {
            uf[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for p in 0..piece_count {
        let root = find(&mut uf, p);
        groups.entry(root).or_default().push(p);
    }
    let mut links: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for &(a, b, j) in &pairs {
        links.entry(a).or_default().push((b, j));
        links.entry(b).or_default().push((a, j));
    }

    let mut live = BTreeSet::new();
    for (_, members) in groups {
        if members.len() == 1 {
            live.insert(members[0]);
            continue;
        }
        let id = segments.len();
        let pixels = chain_pixels(&members, &links, &segments, &clusters);
        let mut js: BTreeSet<usize> = BTreeSet::new();
        for &m in &members {
            js.extend(segments[m].junctions.iter().copied());
        }
        let endpoints = through_endpoints(&members, &links, &segments, &clusters);
        segments.push(EdgeSegment {
            id,
            kind: SegmentKind::Through,
            pixels,
            endpoints,
            pieces: members,
            junctions: js.into_iter().collect(),
        });
        live.insert(id);
    }

    EdgeGraph {
        rows,
        cols,
        segments,
        piece_count,
        junctions,
        clusters,
        live,
        parent_children: BTreeMap::new(),
        protected_pt: BTreeSet::new(),
        boundary_ce: BTreeSet::new(),
        deleted: BTreeSet::new(),
        restored_by_parent: BTreeSet::new(),
        free_endpoints,
    }
}

fn centroid(pixels: &[Pixel]) -> (f64, f64) {
    let n = pixels.len().max(1) as f64;
    let (sr, sc) = pixels
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + p.0 as f64, b + p.1 as f64));
    (sr / n, sc / n)
}

/// Chain order of a through-edge: walk the paired pieces from an end,
/// orienting each piece so it leaves toward the next shared cluster.
fn chain_pixels(
    members: &[usize],
    links: &BTreeMap<usize, Vec<(usize, usize)>>,
    segments: &[EdgeSegment],
    clusters: &[Vec<Pixel>],
) -> Vec<Pixel> {
    let degree = |m: usize| links.get(&m).map_or(0, Vec::len);
    let start = members.iter().copied().find(|&m| degree(m) <= 1).unwrap_or(members[0]);
    let mut seen_pieces = HashSet::new();
    let mut seen_px: HashSet<Pixel> = HashSet::new();
    let mut out = Vec::new();
    let mut push = |px: &[Pixel], out: &mut Vec<Pixel>| {
        for &p in px {
            if seen_px.insert(p) {
                out.push(p);
            }
        }
    };
    let touches = |p: Pixel, cl: &[Pixel]| cl.iter().any(|&q| chebyshev(p, q) == 1);

    let mut cur = start;
    let mut entered: Option<usize> = None;
    loop {
        seen_pieces.insert(cur);
        let next = links
            .get(&cur)
            .into_iter()
            .flatten()
            .copied()
            .find(|(n, _)| !seen_pieces.contains(n));
        let mut px = segments[cur].pixels.clone();
        let flip = match (entered, next) {
            (Some(j), _) => !px.first().is_some_and(|&p| touches(p, &clusters[j])),
            (None, Some((_, j))) => px.first().is_some_and(|&p| touches(p, &clusters[j])),
            (None, None) => false,
        };
        if flip {
            px.reverse();
        }
        push(&px, &mut out);
        match next {
            Some((n, j)) => {
                push(&clusters[j], &mut out);
                entered = Some(j);
                cur = n;
            }
            None => break,
        }
    }
    for &m in members {
        if !seen_pieces.contains(&m) {
            push(&segments[m].pixels, &mut out);
        }
    }
    out
}

/// Endpoints of the end pieces that do not touch the cluster joining them
/// to the rest of the chain.
fn through_endpoints(
    members: &[usize],
    links: &BTreeMap<usize, Vec<(usize, usize)>>,
    segments: &[EdgeSegment],
    clusters: &[Vec<Pixel>],
) -> Vec<Pixel> {
    let mut out = Vec::new();
    for &m in members {
        let l = links.get(&m).map_or(&[][..], Vec::as_slice);
        if l.len() > 1 {
            continue;
        }
        for &e in &segments[m].endpoints {
            let joined = l.iter().any(|&(_, j)| clusters[j].iter().any(|&q| chebyshev(e, q) == 1));
            if !joined {
                out.push(e);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out.truncate(2);
    out
}

impl EdgeGraph {
    pub fn segment(&self, id: usize) -> &EdgeSegment {
        &self.segments[id]
    }

    pub fn is_piece(&self, id: usize) -> bool {
        id < self.piece_count
    }

    pub fn pieces(&self) -> &[EdgeSegment] {
        &self.segments[..self.piece_count]
    }

    pub fn through_edges(&self) -> &[EdgeSegment] {
        &self.segments[self.piece_count..]
    }

    pub fn free_endpoint_count(&self, piece: usize) -> usize {
        self.free_endpoints[piece]
    }

    /// Replaces a live through-edge by its pieces, which inherit its CE and
    /// PT memberships. Returns the pieces, or `None` for a piece or a segment
    /// that is not live.
    pub fn split(&mut self, id: usize) -> Option<Vec<usize>> {
        if self.is_piece(id) || !self.live.remove(&id) {
            return None;
        }
        let children = self.segments[id].pieces.clone();
        let ce = self.boundary_ce.remove(&id);
        let pt = self.protected_pt.remove(&id);
        for &c in &children {
            self.live.insert(c);
            if ce {
                self.boundary_ce.insert(c);
            }
            if pt {
                self.protected_pt.insert(c);
            }
        }
        self.parent_children.insert(id, children.clone());
        Some(children)
    }

    /// Pixels of pieces that are live and not deleted, plus junction clusters
    /// touching at least two of them.
    pub fn surviving_pixels(&self) -> (Vec<Pixel>, usize) {
        let alive: BTreeSet<usize> = self
            .live
            .iter()
            .flat_map(|&s| self.segments[s].pieces.iter().copied())
            .filter(|p| !self.deleted.contains(p))
            .collect();
        let mut out: Vec<Pixel> = alive
            .iter()
            .flat_map(|&p| self.segments[p].pixels.iter().copied())
            .collect();
        let mut touching = vec![0usize; self.clusters.len()];
        for &p in &alive {
            for &j in &self.segments[p].junctions {
                touching[j] += 1;
            }
        }
        let mut dropped = 0;
        for (j, cl) in self.clusters.iter().enumerate() {
            if touching[j] >= 2 {
                out.extend(cl.iter().copied());
            } else {
                dropped += cl.len();
            }
        }
        out.sort_unstable();
        (out, dropped)
    }
}
