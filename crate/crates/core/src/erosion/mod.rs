//! Graph-based false-edge removal ("wind erosion").
//!
//! The edge map is decomposed into segments (see [`graph`]) and passed
//! through seven steps: mark boundary edges, protect long edges, split
//! at junctions, clear spurs and short edges, apply the parent restore rule,
//! restore protected edges, restore boundary edges.

pub mod graph;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Pixel;
use crate::postproc::BinaryEdgeMap;

pub use graph::{build_edge_graph, EdgeGraph, EdgeSegment, SegmentKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErosionParams {
    /// Long-edge factor on the mean edge length.
    pub p_mean: f64,
    /// Minimum length (pixels) of an unprotected edge.
    pub l_t: usize,
    /// Parents losing this many children or more are removed.
    pub c_t: usize,
    /// Parents losing this fraction of children or more are removed.
    pub p_t: f64,
    pub boundary_band: usize,
}

impl Default for ErosionParams {
    fn default() -> Self {
        Self {
            p_mean: 3.0,
            l_t: 10,
            c_t: 3,
            p_t: 0.5,
            boundary_band: 2,
        }
    }
}

impl ErosionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_mean.is_finite() && self.p_mean > 0.0) {
            return Err(Error::InvalidParameter(format!("p_mean must be > 0, got {}", self.p_mean)));
        }
        if !(self.p_t > 0.0 && self.p_t < 1.0) {
            return Err(Error::InvalidParameter(format!("p_t must be in (0, 1), got {}", self.p_t)));
        }
        Ok(())
    }
}

impl FromStr for ErosionParams {
    type Err = Error;

    /// Parses `p_mean,L_t,C_t,p_t,band`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = |what: &str| Error::InvalidParameter(format!("bad erosion {what} in {s:?}"));
        if parts.len() != 5 {
            return Err(Error::InvalidParameter(format!(
                "expected p_mean,L_t,C_t,p_t,band; got {s:?}"
            )));
        }
        let p = Self {
            p_mean: parts[0].parse().map_err(|_| bad("p_mean"))?,
            l_t: parts[1].parse().map_err(|_| bad("L_t"))?,
            c_t: parts[2].parse().map_err(|_| bad("C_t"))?,
            p_t: parts[3].parse().map_err(|_| bad("p_t"))?,
            boundary_band: parts[4].parse().map_err(|_| bad("band"))?,
        };
        p.validate()?;
        Ok(p)
    }
}

impl fmt::Display for ErosionParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{},{}", self.p_mean, self.l_t, self.c_t, self.p_t, self.boundary_band)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u8,
    pub name: String,
    pub live_segments: usize,
    pub deleted_total: usize,
    pub boundary_ce: usize,
    pub protected_pt: usize,
    pub split: Vec<usize>,
    pub deleted: Vec<usize>,
    pub restored: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_mean: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErosionTrace {
    pub steps: Vec<StepRecord>,
    pub input_pixels: usize,
    pub output_pixels: usize,
    pub deleted_pixels: usize,
    /// Junction pixels dropped because fewer than two surviving segments meet
    /// there.
    pub dropped_junction_pixels: usize,
}

fn record(g: &EdgeGraph, step: u8, name: &str) -> StepRecord {
    StepRecord {
        step,
        name: name.to_string(),
        live_segments: g.live.len(),
        deleted_total: g.deleted.len(),
        boundary_ce: g.boundary_ce.len(),
        protected_pt: g.protected_pt.len(),
        ..StepRecord::default()
    }
}

fn in_band(g: &EdgeGraph, p: Pixel, band: usize) -> bool {
    let d = p.0.min(p.1).min(g.rows - 1 - p.0).min(g.cols - 1 - p.1);
    d < band
}

/// A piece touches the frame band away from any junction it hangs from.
fn piece_on_boundary(g: &EdgeGraph, piece: usize, band: usize) -> bool {
    let seg = g.segment(piece);
    seg.pixels.iter().any(|&p| {
        in_band(g, p, band)
            && !seg.junctions.iter().any(|&j| {
                g.clusters[j]
                    .iter()
                    .any(|&q| p.0.abs_diff(q.0).max(p.1.abs_diff(q.1)) <= band)
            })
    })
}

/// Step 1. Pieces near the image frame go to CE; a through-edge with some
/// pieces inside is split so the inward pieces are ordinary edges.
pub fn find_boundaries(g: &mut EdgeGraph, params: &ErosionParams) -> StepRecord {
    let mut split = Vec::new();
    let live: Vec<usize> = g.live.iter().copied().collect();
    for id in live {
        let pieces = g.segment(id).pieces.clone();
        let on: Vec<bool> = pieces.iter().map(|&p| piece_on_boundary(g, p, params.boundary_band)).collect();
        if on.iter().all(|&b| b) {
            g.boundary_ce.insert(id);
        } else if on.iter().any(|&b| b) {
            g.split(id);
            split.push(id);
            for (&p, &b) in pieces.iter().zip(&on) {
                if b {
                    g.boundary_ce.insert(p);
                }
            }
        }
    }
    StepRecord {
        split,
        ..record(g, 1, "find_boundaries")
    }
}

fn mean_length(g: &EdgeGraph) -> Option<f64> {
    let lens: Vec<usize> = g
        .live
        .iter()
        .filter(|s| !g.boundary_ce.contains(s))
        .map(|&s| g.segment(s).length())
        .collect();
    if lens.is_empty() {
        None
    } else {
        Some(lens.iter().sum::<usize>() as f64 / lens.len() as f64)
    }
}

/// Step 2. Non-CE edges longer than twice the mean are split at their
/// junctions; with the mean recomputed, edges over `p_mean` times it go to PT.
pub fn process_long_edges(g: &mut EdgeGraph, params: &ErosionParams) -> StepRecord {
    let Some(first) = mean_length(g) else {
        return record(g, 2, "process_long_edges");
    };
    let long: Vec<usize> = g
        .live
        .iter()
        .copied()
        .filter(|s| !g.boundary_ce.contains(s) && g.segment(*s).length() as f64 > 2.0 * first)
        .collect();
    let mut split = Vec::new();
    for id in long {
        if g.split(id).is_some() {
            split.push(id);
        }
    }
    let e_mean = mean_length(g).unwrap_or(first);
    let pt: Vec<usize> = g
        .live
        .iter()
        .copied()
        .filter(|s| !g.boundary_ce.contains(s) && g.segment(*s).length() as f64 > params.p_mean * e_mean)
        .collect();
    g.protected_pt.extend(pt);
    StepRecord {
        split,
        e_mean: Some(e_mean),
        ..record(g, 2, "process_long_edges")
    }
}

/// Step 3. Every remaining through-edge becomes a parent of its pieces;
/// unsplit pieces are their own parent.
pub fn split_edges(g: &mut EdgeGraph) -> StepRecord {
    let through: Vec<usize> = g.live.iter().copied().filter(|&s| !g.is_piece(s)).collect();
    let mut split = Vec::new();
    for id in through {
        if g.split(id).is_some() {
            split.push(id);
        }
    }
    let own: Vec<usize> = g.live.iter().copied().filter(|&s| g.is_piece(s)).collect();
    for p in own {
        let has_parent = g.parent_children.values().any(|c| c.contains(&p));
        if !has_parent {
            g.parent_children.insert(p, vec![p]);
        }
    }
    StepRecord {
        split,
        ..record(g, 3, "split_edges")
    }
}

fn is_spur(g: &EdgeGraph, piece: usize, params: &ErosionParams) -> bool {
    let s = g.segment(piece);
    g.free_endpoint_count(piece) > 0 && !s.junctions.is_empty() && s.length() < params.l_t
}

/// Step 4. Deletes spurs and unprotected edges shorter than `l_t`; CE edges
/// are exempt.
pub fn clear_edges(g: &mut EdgeGraph, params: &ErosionParams) -> StepRecord {
    let doomed: Vec<usize> = g
        .live
        .iter()
        .copied()
        .filter(|&s| {
            if g.boundary_ce.contains(&s) {
                return false;
            }
            is_spur(g, s, params) || (!g.protected_pt.contains(&s) && g.segment(s).length() < params.l_t)
        })
        .collect();
    g.deleted.extend(doomed.iter().copied());
    StepRecord {
        deleted: doomed,
        ..record(g, 4, "clear_edges")
    }
}

/// Step 5. A parent that lost fewer than `c_t` children and less than a
/// `p_t` share of them gets all children back; otherwise all are deleted.
pub fn restore_junctions(g: &mut EdgeGraph, params: &ErosionParams) -> StepRecord {
    let mut restored = Vec::new();
    let mut deleted = Vec::new();
    let parents: Vec<(usize, Vec<usize>)> = g.parent_children.iter().map(|(k, v)| (*k, v.clone())).collect();
    for (_, children) in parents {
        let c_a = children.len();
        let c_cut = children.iter().filter(|c| g.deleted.contains(c)).count();
        if c_cut == 0 {
            continue;
        }
        if c_cut < params.c_t && (c_cut as f64) < c_a as f64 * params.p_t {
            for c in children {
                if g.deleted.remove(&c) {
                    restored.push(c);
                }
                g.restored_by_parent.insert(c);
            }
        } else {
            for c in children {
                if g.deleted.insert(c) {
                    deleted.push(c);
                }
            }
        }
    }
    StepRecord {
        deleted,
        restored,
        ..record(g, 5, "restore_junctions")
    }
}

/// Step 6. PT edges come back; any other short edge that is neither CE nor
/// rescued by its parent is removed.
pub fn restore_protected(g: &mut EdgeGraph, params: &ErosionParams) -> StepRecord {
    let restored: Vec<usize> = g.protected_pt.iter().copied().filter(|s| g.deleted.contains(s)).collect();
    for s in &restored {
        g.deleted.remove(s);
    }
    let sweep: Vec<usize> = g
        .live
        .iter()
        .copied()
        .filter(|s| {
            !g.deleted.contains(s)
                && !g.protected_pt.contains(s)
                && !g.boundary_ce.contains(s)
                && !g.restored_by_parent.contains(s)
                && g.segment(*s).length() < params.l_t
        })
        .collect();
    g.deleted.extend(sweep.iter().copied());
    StepRecord {
        restored,
        deleted: sweep,
        ..record(g, 6, "restore_protected")
    }
}

/// Step 7. CE edges come back.
pub fn restore_boundaries(g: &mut EdgeGraph) -> StepRecord {
    let restored: Vec<usize> = g.boundary_ce.iter().copied().filter(|s| g.deleted.contains(s)).collect();
    for s in &restored {
        g.deleted.remove(s);
    }
    StepRecord {
        restored,
        ..record(g, 7, "restore_boundaries")
    }
}

/// Runs all seven steps and rasterizes the survivors.
pub fn wind_erosion(map: &BinaryEdgeMap, params: &ErosionParams) -> Result<(BinaryEdgeMap, ErosionTrace)> {
    params.validate()?;
    let (rows, cols) = map.dims();
    let mut g = build_edge_graph(map);
    let steps = vec![
        find_boundaries(&mut g, params),
        process_long_edges(&mut g, params),
        split_edges(&mut g),
        clear_edges(&mut g, params),
        restore_junctions(&mut g, params),
        restore_protected(&mut g, params),
        restore_boundaries(&mut g),
    ];
    let (pixels, dropped) = g.surviving_pixels();
    let deleted_pixels: usize = g.deleted.iter().map(|&s| g.segment(s).length()).sum();
    let trace = ErosionTrace {
        steps,
        input_pixels: map.edge_count(),
        output_pixels: pixels.len(),
        deleted_pixels,
        dropped_junction_pixels: dropped,
    };
    Ok((BinaryEdgeMap::from_pixels(rows, cols, pixels), trace))
}

/// Pieces that survive, for property checks.
pub fn surviving_segments(g: &EdgeGraph) -> BTreeSet<usize> {
    g.live.iter().copied().filter(|s| !g.deleted.contains(s)).collect()
}
