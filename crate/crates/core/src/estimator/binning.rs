//! Kernel-weighted double sums `Σ_i Σ_j F_{i,j} K_ε(X_i - Y_j)`.
//!
//! The binned evaluation rescales both clouds to their joint bounding box,
//! cuts it into half-open boxes whose side is at least the kernel reach, and
//! radix-sorts the points by lexicographic box index. A forward
//! point can only interact with reverse points in the `3^d` boxes around its
//! own, so with bandwidth `∝ N^{-1/d}` the expected cost is `O(N log N)`.

use crate::kernel::KernelSpec;

/// Result of a double sum over kernel-active pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleSum {
    pub sums: Vec<f64>,
    /// Number of pairs with a nonzero kernel value.
    pub pairs_hit: u64,
    /// False when the binned path fell back to the direct sum.
    pub binned: bool,
}

/// Boxes per point above which the grid is coarsened.
const MAX_BOXES_PER_POINT: usize = 4;

/// Direct `O(N·M)` evaluation. `combine(i, j, k, acc)` must add
/// `F_{i,j} · k` into `acc`.
pub fn naive_double_sum<F>(forward: &[f64], reverse: &[f64], kernel: &KernelSpec, out_dim: usize, mut combine: F) -> DoubleSum
where
    F: FnMut(usize, usize, f64, &mut [f64]),
{
    let d = kernel.dim();
    let mut sums = vec![0.0; out_dim];
    let mut pairs_hit = 0;
    for (i, x) in forward.chunks_exact(d).enumerate() {
        for (j, y) in reverse.chunks_exact(d).enumerate() {
            let k = kernel.eval_diff(x, y);
            if k != 0.0 {
                pairs_hit += 1;
                combine(i, j, k, &mut sums);
            }
        }
    }
    DoubleSum {
        sums,
        pairs_hit,
        binned: false,
    }
}

/// Box-binned evaluation of the same double sum as [`naive_double_sum`].
/// Results agree up to floating-point reassociation.
pub fn fast_double_sum<F>(forward: &[f64], reverse: &[f64], kernel: &KernelSpec, out_dim: usize, mut combine: F) -> DoubleSum
where
    F: FnMut(usize, usize, f64, &mut [f64]),
{
    let d = kernel.dim();
    let nf = forward.len() / d;
    let nr = reverse.len() / d;
    if nf == 0 || nr == 0 {
        return DoubleSum {
            sums: vec![0.0; out_dim],
            pairs_hit: 0,
            binned: true,
        };
    }

    let Some(grid) = BoxGrid::fit(forward, reverse, d, kernel.reach(), nf + nr) else {
        return naive_double_sum(forward, reverse, kernel, out_dim, combine);
    };

    let fb = grid.bin(forward);
    let rb = grid.bin(reverse);

    // Forward boxes are visited in increasing key order, so for a fixed
    // offset the neighbor key increases too and one cursor per offset walks
    // the occupied reverse boxes once.
    let offsets = neighbor_offsets(d);
    let mut cursors = vec![0usize; offsets.len()];
    let mut sums = vec![0.0; out_dim];
    let mut pairs_hit = 0u64;
    let mut coords = vec![0usize; d];
    for (b, &key) in fb.keys.iter().enumerate() {
        let (i0, i1) = (fb.start[b], fb.start[b + 1]);
        grid.decode(key, &mut coords);
        'neighbors: for (off, cur) in offsets.iter().zip(cursors.iter_mut()) {
            let mut r = 0usize;
            for c in 0..d {
                let v = coords[c] as isize + off[c];
                if v < 0 || v >= grid.per_axis as isize {
                    continue 'neighbors;
                }
                r = r * grid.per_axis + v as usize;
            }
            while *cur < rb.keys.len() && rb.keys[*cur] < r {
                *cur += 1;
            }
            if *cur == rb.keys.len() || rb.keys[*cur] != r {
                continue;
            }
            let (j0, j1) = (rb.start[*cur], rb.start[*cur + 1]);
            for i in i0..i1 {
                let x = &fb.points[i * d..(i + 1) * d];
                for j in j0..j1 {
                    let kv = kernel.eval_diff(x, &rb.points[j * d..(j + 1) * d]);
                    if kv != 0.0 {
                        pairs_hit += 1;
                        combine(fb.order[i], rb.order[j], kv, &mut sums);
                    }
                }
            }
        }
    }
    DoubleSum {
        sums,
        pairs_hit,
        binned: true,
    }
}

struct BoxGrid {
    dim: usize,
    lo: Vec<f64>,
    inv_side: f64,
    per_axis: usize,
    total: usize,
}

/// A point cloud sorted by box. Only occupied boxes are listed: box `b` has
/// key `keys[b]` and holds sorted points `start[b]..start[b + 1]`.
struct Binned {
    keys: Vec<usize>,
    start: Vec<usize>,
    /// Original index of each sorted point.
    order: Vec<usize>,
    points: Vec<f64>,
}

impl BoxGrid {
    /// `None` when fewer than three boxes fit along an axis, in which case
    /// every pair is a neighbor pair anyway.
    fn fit(a: &[f64], b: &[f64], d: usize, reach: f64, n_points: usize) -> Option<BoxGrid> {
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in a.chunks_exact(d).chain(b.chunks_exact(d)) {
            for c in 0..d {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        let span = (0..d).map(|c| hi[c] - lo[c]).fold(0.0, f64::max);
        if !(span > 0.0 && span.is_finite()) || !(reach > 0.0) {
            return None;
        }
        let by_reach = (span / reach).floor();
        let cap = ((MAX_BOXES_PER_POINT * n_points) as f64).powf(1.0 / d as f64).floor();
        let mut per_axis = by_reach.min(cap).min(u32::MAX as f64) as usize;
        while per_axis >= 1 && span / (per_axis as f64) < reach {
            per_axis -= 1;
        }
        if per_axis < 3 {
            return None;
        }
        let total = per_axis.checked_pow(d as u32)?;
        Some(BoxGrid {
            dim: d,
            lo,
            inv_side: per_axis as f64 / span,
            per_axis,
            total,
        })
    }

    /// Lexicographic box index; the first coordinate is most significant.
    #[inline]
    fn index(&self, p: &[f64]) -> usize {
        let mut k = 0usize;
        for c in 0..self.dim {
            let b = ((p[c] - self.lo[c]) * self.inv_side) as usize;
            k = k * self.per_axis + b.min(self.per_axis - 1);
        }
        k
    }

    fn decode(&self, mut k: usize, out: &mut [usize]) {
        for c in (0..self.dim).rev() {
            out[c] = k % self.per_axis;
            k /= self.per_axis;
        }
    }

    fn bin(&self, pts: &[f64]) -> Binned {
        let d = self.dim;
        let n = pts.len() / d;
        // key in the high bits, point index in the low bits
        let idx_bits = (usize::BITS - n.leading_zeros()).max(1);
        let key_bits = usize::BITS - (self.total - 1).leading_zeros();
        assert!(idx_bits + key_bits <= 64, "box grid too fine for packed keys");
        let packed: Vec<u64> = pts
            .chunks_exact(d)
            .enumerate()
            .map(|(i, p)| ((self.index(p) as u64) << idx_bits) | i as u64)
            .collect();
        let packed = radix_sort(packed, idx_bits, idx_bits + key_bits);
        let idx_mask = (1u64 << idx_bits) - 1;
        let mut keys = Vec::new();
        let mut start = Vec::new();
        let mut order = Vec::with_capacity(n);
        let mut points = Vec::with_capacity(pts.len());
        for (s, &e) in packed.iter().enumerate() {
            let k = (e >> idx_bits) as usize;
            let i = (e & idx_mask) as usize;
            if keys.last() != Some(&k) {
                keys.push(k);
                start.push(s);
            }
            order.push(i);
            for c in 0..d {
                points.push(pts[i * d + c]);
            }
        }
        start.push(n);
        Binned {
            keys,
            start,
            order,
            points,
        }
    }
}

/// Stable LSD radix sort on bits `lo..hi` of each value. Values that agree
/// on those bits keep their input order.
fn radix_sort(mut v: Vec<u64>, lo: u32, hi: u32) -> Vec<u64> {
    const DIGIT: u32 = 11;
    let mask = (1u64 << DIGIT) - 1;
    let mut tmp = vec![0u64; v.len()];
    let mut shift = lo;
    while shift < hi {
        let mut count = vec![0usize; 1 << DIGIT];
        for &e in &v {
            count[((e >> shift) & mask) as usize] += 1;
        }
        let mut acc = 0;
        for c in count.iter_mut() {
            let n = *c;
            *c = acc;
            acc += n;
        }
        for &e in &v {
            let slot = &mut count[((e >> shift) & mask) as usize];
            tmp[*slot] = e;
            *slot += 1;
        }
        std::mem::swap(&mut v, &mut tmp);
        shift += DIGIT;
    }
    v
}

fn neighbor_offsets(d: usize) -> Vec<Vec<isize>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-1..=1).map(move |o| {
                    let mut w = v.clone();
                    w.push(o);
                    w
                })
            })
            .collect();
    }
    out
}
