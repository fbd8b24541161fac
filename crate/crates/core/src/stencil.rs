//! Periodic shift traversal over grid rows.
//!
//! Pairs every destination point `x` with the source point `x + v` (indices
//! wrapped), walking the contiguous last axis in two straight segments.

use crate::torus::GridSpec;

/// Calls `row(dst_start, src_start, shift_last)` for every row of the grid.
/// Within the row, destination offset `j` pairs with source offset
/// `(j + shift_last) mod R`.
pub fn for_each_row(grid: GridSpec, v: &[isize], mut row: impl FnMut(usize, usize, usize)) {
    let r = grid.resolution;
    let d = grid.real_dim();
    let ri = r as isize;
    let lead = d - 1;
    let rows = r.pow(lead as u32);
    let mut m = vec![0usize; lead];
    let shift_last = v[lead].rem_euclid(ri) as usize;
    for k in 0..rows {
        let mut src = 0usize;
        for a in 0..lead {
            src = src * r + (m[a] as isize + v[a]).rem_euclid(ri) as usize;
        }
        row(k * r, src * r, shift_last);
        for a in (0..lead).rev() {
            m[a] += 1;
            if m[a] < r {
                break;
            }
            m[a] = 0;
        }
    }
}

/// `max_x |u(x + v) − u(x)|`.
pub fn max_abs_diff(grid: GridSpec, u: &[f64], v: &[isize]) -> f64 {
    let r = grid.resolution;
    let mut worst: f64 = 0.0;
    for_each_row(grid, v, |dst, src, s| {
        let a = &u[dst..dst + r];
        let b = &u[src..src + r];
        let (b_hi, b_lo) = b.split_at(s);
        let (a_lo, a_hi) = a.split_at(r - s);
        for (x, y) in a_lo.iter().zip(b_lo) {
            worst = worst.max((x - y).abs());
        }
        for (x, y) in a_hi.iter().zip(b_hi) {
            worst = worst.max((x - y).abs());
        }
    });
    worst
}

/// `out(x) += w · u(x + v)`.
pub fn accumulate_shift(grid: GridSpec, u: &[f64], v: &[isize], w: f64, out: &mut [f64]) {
    let r = grid.resolution;
    for_each_row(grid, v, |dst, src, s| {
        let o = &mut out[dst..dst + r];
        let b = &u[src..src + r];
        let (b_hi, b_lo) = b.split_at(s);
        let (o_lo, o_hi) = o.split_at_mut(r - s);
        for (x, y) in o_lo.iter_mut().zip(b_lo) {
            *x += w * y;
        }
        for (x, y) in o_hi.iter_mut().zip(b_hi) {
            *x += w * y;
        }
    });
}

/// Lattice offsets with `|v|² ≤ radius²`, including the origin.
pub fn ball_offsets(dim: usize, radius: f64) -> Vec<Vec<isize>> {
    let k = radius.floor() as isize;
    let r2 = radius * radius + 1e-9;
    let mut out = Vec::new();
    let mut cur = vec![-k; dim];
    loop {
        let n2: f64 = cur.iter().map(|&c| (c * c) as f64).sum();
        if n2 <= r2 {
            out.push(cur.clone());
        }
        let mut a = dim;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            cur[a] += 1;
            if cur[a] <= k {
                break;
            }
            cur[a] = -k;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::make_grid;

    #[test]
    fn shift_matches_translate() {
        let g = make_grid(1, 8).unwrap();
        let u = g.sample(|x| (x[0] * 7.0 + x[1] * 3.0).sin());
        let v = [3isize, -2];
        let mut out = vec![0.0; g.len()];
        accumulate_shift(g, u.values(), &v, 1.0, &mut out);
        assert_eq!(out, u.translate(&v).values());
    }

    #[test]
    fn ball_counts() {
        assert_eq!(ball_offsets(2, 1.0).len(), 5);
        assert_eq!(ball_offsets(2, 0.5).len(), 1);
        assert_eq!(ball_offsets(4, 1.0).len(), 9);
    }
}
