//! Circular filtering primitives on row-major planes.
//!
//! Every primitive filters along rows; column filtering transposes first.

/// Additions performed per decomposition level.
///
/// `steady` counts the per-sample work of each filter; `init` counts the one-off
/// direct sums that seed a recursion at the start of every line.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AddTally {
    steady: Vec<u64>,
    init: Vec<u64>,
    outputs: Vec<u64>,
}

impl AddTally {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(v: &mut Vec<u64>, level: usize) -> &mut u64 {
        if v.len() <= level {
            v.resize(level + 1, 0);
        }
        &mut v[level]
    }

    #[inline]
    pub(crate) fn steady(&mut self, level: usize, n: u64) {
        *Self::slot(&mut self.steady, level) += n;
    }

    #[inline]
    pub(crate) fn init(&mut self, level: usize, n: u64) {
        *Self::slot(&mut self.init, level) += n;
    }

    #[inline]
    pub(crate) fn outputs(&mut self, level: usize, n: u64) {
        *Self::slot(&mut self.outputs, level) += n;
    }

    /// Band samples produced at `level`, intermediate approximations included.
    pub fn outputs_at(&self, level: usize) -> u64 {
        self.outputs.get(level).copied().unwrap_or(0)
    }

    /// Steady-state additions per produced band sample at `level`.
    pub fn per_output(&self, level: usize) -> Option<f64> {
        let n = self.outputs_at(level);
        (n > 0).then(|| self.steady_at(level) as f64 / n as f64)
    }

    /// Per-sample additions at `level`.
    pub fn steady_at(&self, level: usize) -> u64 {
        self.steady.get(level).copied().unwrap_or(0)
    }

    /// Line-initialization additions at `level`.
    pub fn init_at(&self, level: usize) -> u64 {
        self.init.get(level).copied().unwrap_or(0)
    }
}

pub(crate) fn transpose<T: Copy + Default>(src: &[T], w: usize, h: usize) -> Vec<T> {
    let mut out = vec![T::default(); w * h];
    for r in 0..h {
        for c in 0..w {
            out[c * h + r] = src[r * w + c];
        }
    }
    out
}

/// `out(r, c) = src(-r mod h, -c mod w)`: turns a causal filter into its flipped (synthesis) form.
pub(crate) fn reverse2d<T: Copy + Default>(src: &[T], w: usize, h: usize) -> Vec<T> {
    let mut out = vec![T::default(); w * h];
    for r in 0..h {
        let sr = (h - r) % h;
        for c in 0..w {
            out[r * w + c] = src[sr * w + (w - c) % w];
        }
    }
    out
}

/// `i mod n` for `-n < i < n`; kernels never exceed the plane side.
#[inline]
fn wrap(i: isize, n: usize) -> usize {
    debug_assert!(i > -(n as isize) && i < n as isize);
    if i < 0 {
        (i + n as isize) as usize
    } else {
        i as usize
    }
}

/// `y(n) = sum_k w_k x(n - o_k)` along rows, for a few `(o_k, w_k)` taps.
pub(crate) fn rows_sparse(src: &[f64], w: usize, h: usize, taps: &[(usize, f64)], level: usize, tally: &mut AddTally) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        let row = &src[r * w..(r + 1) * w];
        let dst = &mut out[r * w..(r + 1) * w];
        for (n, y) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &(o, t) in taps {
                acc += t * row[wrap(n as isize - o as isize, w)];
            }
            *y = acc;
        }
    }
    tally.steady(level, (taps.len().saturating_sub(1) * w * h) as u64);
    out
}

/// Direct convolution along rows with every tap of `kernel`.
pub(crate) fn rows_dense(src: &[f64], w: usize, h: usize, kernel: &[f64], level: usize, tally: &mut AddTally) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        let row = &src[r * w..(r + 1) * w];
        let dst = &mut out[r * w..(r + 1) * w];
        for (n, y) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &t) in kernel.iter().enumerate() {
                acc += t * row[wrap(n as isize - k as isize, w)];
            }
            *y = acc;
        }
    }
    tally.steady(level, (kernel.len().saturating_sub(1) * w * h) as u64);
    out
}

/// Unnormalized running sum of the last `len` samples along rows:
/// `y(n) = y(n-1) - x(n-len) + x(n)`, seeded by a direct sum at `n = 0`.
pub(crate) fn rows_box(src: &[f64], w: usize, h: usize, len: usize, level: usize, tally: &mut AddTally) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        let row = &src[r * w..(r + 1) * w];
        let dst = &mut out[r * w..(r + 1) * w];
        let mut acc: f64 = (0..len).map(|k| row[wrap(-(k as isize), w)]).sum();
        dst[0] = acc;
        for n in 1..w {
            acc = acc - row[wrap(n as isize - len as isize, w)] + row[n];
            dst[n] = acc;
        }
    }
    tally.init(level, (len.saturating_sub(1) * h) as u64);
    tally.steady(level, (2 * (w - 1) * h) as u64);
    out
}

/// Unnormalized combined wavelet filter along rows:
/// `y(n) = y(n-1) - x(n-len) + 2 x(n-len/2) - x(n)`, seeded by direct convolution.
pub(crate) fn rows_wavelet(src: &[f64], w: usize, h: usize, len: usize, level: usize, tally: &mut AddTally) -> Vec<f64> {
    let half = len / 2;
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        let row = &src[r * w..(r + 1) * w];
        let dst = &mut out[r * w..(r + 1) * w];
        let mut acc: f64 = (0..len)
            .map(|k| {
                let x = row[wrap(-(k as isize), w)];
                if k < half {
                    -x
                } else {
                    x
                }
            })
            .sum();
        dst[0] = acc;
        for n in 1..w {
            let ni = n as isize;
            // doubling is a shift, not an addition
            acc = acc - row[wrap(ni - len as isize, w)] + 2.0 * row[wrap(ni - half as isize, w)] - row[n];
            dst[n] = acc;
        }
    }
    tally.init(level, (len.saturating_sub(1) * h) as u64);
    tally.steady(level, (3 * (w - 1) * h) as u64);
    out
}

/// `y(r, c) = sum_k w_k x(r - a_k, c - b_k)` for sparse `(a_k, b_k, w_k)` taps.
pub(crate) fn plane_sparse(src: &[f64], w: usize, h: usize, taps: &[(usize, usize, f64)], level: usize, tally: &mut AddTally) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for &(a, b, t) in taps {
                acc += t * src[wrap(r as isize - a as isize, h) * w + wrap(c as isize - b as isize, w)];
            }
            out[r * w + c] = acc;
        }
    }
    tally.steady(level, (taps.len().saturating_sub(1) * w * h) as u64);
    out
}

/// Direct 2D convolution with a dense `size x size` kernel, `kernel[a * size + b]` weighting `x(r - a, c - b)`.
pub(crate) fn plane_dense(src: &[f64], w: usize, h: usize, kernel: &[f64], size: usize, level: usize, tally: &mut AddTally) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for a in 0..size {
            let sr = wrap(r as isize - a as isize, h) * w;
            let src_row = &src[sr..sr + w];
            let krow = &kernel[a * size..(a + 1) * size];
            let dst = &mut out[r * w..(r + 1) * w];
            for (c, y) in dst.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (b, &t) in krow.iter().enumerate() {
                    acc += t * src_row[wrap(c as isize - b as isize, w)];
                }
                *y += acc;
            }
        }
    }
    tally.steady(level, ((size * size).saturating_sub(1) * w * h) as u64);
    out
}

/// Applies a row filter along columns.
pub(crate) fn along_cols(src: &[f64], w: usize, h: usize, f: impl FnOnce(&[f64], usize, usize) -> Vec<f64>) -> Vec<f64> {
    let t = transpose(src, w, h);
    let y = f(&t, h, w);
    transpose(&y, h, w)
}

pub(crate) fn scale_in_place(v: &mut [f64], s: f64) {
    for x in v {
        *x *= s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(row: &[f64], kernel: &[f64]) -> Vec<f64> {
        let n = row.len();
        (0..n).map(|i| kernel.iter().enumerate().map(|(k, t)| t * row[(i + n * 4 - k) % n]).sum()).collect()
    }

    #[test]
    fn recursions_match_direct_convolution() {
        let row: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64 - 3.0).collect();
        for len in [2usize, 4, 8, 16, 32] {
            let mut t = AddTally::new();
            let boxed = rows_box(&row, row.len(), 1, len, 0, &mut t);
            let wav = rows_wavelet(&row, row.len(), 1, len, 0, &mut t);
            let ones = vec![1.0; len];
            let signs: Vec<f64> = (0..len).map(|k| if k < len / 2 { -1.0 } else { 1.0 }).collect();
            for (a, b) in boxed.iter().zip(direct(&row, &ones)) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in wav.iter().zip(direct(&row, &signs)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reverse_is_involution() {
        let v: Vec<f64> = (0..12).map(f64::from).collect();
        assert_eq!(reverse2d(&reverse2d(&v, 4, 3), 4, 3), v);
        assert_eq!(transpose(&transpose(&v, 4, 3), 3, 4), v);
    }

    #[test]
    fn tally_counts_recursion_work() {
        let mut t = AddTally::new();
        let _ = rows_wavelet(&[0.0; 128], 64, 2, 32, 5, &mut t);
        assert_eq!(t.steady_at(5), 3 * 63 * 2);
        assert_eq!(t.init_at(5), 31 * 2);
        assert_eq!(t.steady_at(4), 0);
    }
}
