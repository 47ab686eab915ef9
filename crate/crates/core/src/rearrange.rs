//! Schwarz (symmetric decreasing) rearrangement on the grid.

use crate::field::ScalarField;
use crate::grid::Grid;

/// Squared minimum-image distance from the origin cell, in cell units.
fn cell_radius2(g: &Grid, idx: usize) -> i64 {
    let m = g.multi_index(idx);
    let n = g.n() as i64;
    (0..g.dim())
        .map(|a| {
            let mut d = m[a] as i64 - n / 2;
            if d >= n / 2 {
                d -= n;
            }
            d * d
        })
        .sum()
}

/// Cells sorted by distance from the origin, ties by index.
pub fn radial_order(g: &Grid) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by_key(|&i| (cell_radius2(g, i), i));
    order
}

/// Values of `|f|` reassigned nonincreasingly along [`radial_order`].
pub fn schwarz_rearrange(f: &ScalarField) -> ScalarField {
    rearrange_with(f, &radial_order(f.grid()))
}

pub(crate) fn rearrange_with(f: &ScalarField, order: &[usize]) -> ScalarField {
    let mut vals: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    let mut out = vec![0.0; vals.len()];
    for (&cell, v) in order.iter().zip(vals) {
        out[cell] = v;
    }
    ScalarField::new(f.grid(), out).expect("same grid")
}

/// `[start, end)` ranges of `order` sharing one cell radius.
pub(crate) fn shell_blocks(g: &Grid, order: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let r = cell_radius2(g, order[i]);
        let mut j = i + 1;
        while j < order.len() && cell_radius2(g, order[j]) == r {
            j += 1;
        }
        out.push((i, j));
        i = j;
    }
    out
}

/// Replaces each shell of equal cell radius by its mean.
pub(crate) fn shell_average(vals: &mut [f64], order: &[usize], blocks: &[(usize, usize)]) {
    for &(a, b) in blocks {
        let mean = order[a..b].iter().map(|&c| vals[c]).sum::<f64>() / (b - a) as f64;
        for &c in &order[a..b] {
            vals[c] = mean;
        }
    }
}

/// True when values never increase with cell radius beyond `tol`.
pub fn is_schwarz_symmetric(f: &ScalarField, tol: f64) -> bool {
    let g = f.grid();
    let order = radial_order(g);
    // compare shell maxima against previous shell minima
    let mut prev_min = f64::INFINITY;
    let mut i = 0;
    while i < order.len() {
        let r = cell_radius2(g, order[i]);
        let mut j = i;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        while j < order.len() && cell_radius2(g, order[j]) == r {
            let v = f.values()[order[j]];
            lo = lo.min(v);
            hi = hi.max(v);
            j += 1;
        }
        if hi > prev_min + tol {
            return false;
        }
        prev_min = lo;
        i = j;
    }
    true
}
