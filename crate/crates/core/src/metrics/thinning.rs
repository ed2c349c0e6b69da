//! Zhang-Suen thinning.

use crate::grid::Grid;

/// One-pixel-wide skeleton of the `true` cells.
pub fn zhang_suen(mask: &Grid<bool>) -> Grid<bool> {
    let (rows, cols) = mask.dims();
    let mut img = mask.clone();
    let at = |g: &Grid<bool>, r: isize, c: isize| u8::from(g.get_signed(r, c).copied().unwrap_or(false));
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut remove = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    if !img[(r, c)] {
                        continue;
                    }
                    let (ri, ci) = (r as isize, c as isize);
                    // P2..P9 clockwise from north
                    let p = [
                        at(&img, ri - 1, ci),
                        at(&img, ri - 1, ci + 1),
                        at(&img, ri, ci + 1),
                        at(&img, ri + 1, ci + 1),
                        at(&img, ri + 1, ci),
                        at(&img, ri + 1, ci - 1),
                        at(&img, ri, ci - 1),
                        at(&img, ri - 1, ci - 1),
                    ];
                    let b: u8 = p.iter().sum();
                    let a = (0..8).filter(|&i| p[i] == 0 && p[(i + 1) % 8] == 1).count();
                    let (p2, p4, p6, p8) = (p[0], p[2], p[4], p[6]);
                    let cond = if pass == 0 {
                        p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0
                    } else {
                        p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0
                    };
                    if (2..=6).contains(&b) && a == 1 && cond {
                        remove.push((r, c));
                    }
                }
            }
            changed |= !remove.is_empty();
            for q in remove {
                img[q] = false;
            }
        }
        if !changed {
            return img;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thin_line_unchanged() {
        let m = Grid::from_fn(5, 12, |r, c| r == 2 && (1..11).contains(&c));
        assert_eq!(zhang_suen(&m), m);
    }

    #[test]
    fn thick_bar_thins_to_one_row() {
        let m = Grid::from_fn(9, 20, |r, c| (3..6).contains(&r) && (2..18).contains(&c));
        let s = zhang_suen(&m);
        for c in 4..16 {
            assert_eq!((0..9).filter(|&r| s[(r, c)]).count(), 1, "col {c}");
        }
    }
}
