//! Dense GF(2) matrices packed 64 columns per word.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = cols.div_ceil(64);
        BitMatrix { rows, cols, stride, data: vec![0; rows * stride] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        (self.data[i * self.stride + j / 64] >> (j % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let w = &mut self.data[i * self.stride + j / 64];
        if v {
            *w |= 1 << (j % 64);
        } else {
            *w &= !(1 << (j % 64));
        }
    }

    pub fn flip(&mut self, i: usize, j: usize) {
        self.data[i * self.stride + j / 64] ^= 1 << (j % 64);
    }

    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    /// row[dst] ^= row[src]
    fn xor_into(&mut self, dst: usize, src: usize, from_word: usize) {
        let s = self.stride;
        let (a, b) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&mut lo[dst * s..dst * s + s], &hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&mut hi[..s], &lo[src * s..src * s + s])
        };
        for w in from_word..s {
            a[w] ^= b[w];
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let s = self.stride;
        for w in 0..s {
            self.data.swap(a * s + w, b * s + w);
        }
    }

    /// Reduced row-echelon form in place; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.get(i, c)) else {
                continue;
            };
            self.swap_rows(r, p);
            for i in 0..self.rows {
                if i != r && self.get(i, c) {
                    self.xor_into(i, r, c / 64);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }
}

/// Gaussian elimination on at most 63 unknowns packed in one word per
/// equation, bit `n` holding the right-hand side. Returns a particular
/// solution and a kernel basis, or `None` when inconsistent.
pub fn solve_small(rows: &mut [u64], n: usize) -> Option<(u64, Vec<u64>)> {
    debug_assert!(n < 64);
    let rhs = 1u64 << n;
    let mut pivots: Vec<usize> = Vec::with_capacity(n);
    let mut r = 0;
    for c in 0..n {
        let bit = 1u64 << c;
        let Some(p) = (r..rows.len()).find(|&i| rows[i] & bit != 0) else {
            continue;
        };
        rows.swap(r, p);
        let pr = rows[r];
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && *row & bit != 0 {
                *row ^= pr;
            }
        }
        pivots.push(c);
        r += 1;
    }
    if rows[r..].iter().any(|&row| row & rhs != 0) {
        return None;
    }
    let mut x0 = 0u64;
    for (i, &c) in pivots.iter().enumerate() {
        if rows[i] & rhs != 0 {
            x0 |= 1 << c;
        }
    }
    let mut is_pivot = 0u64;
    for &c in &pivots {
        is_pivot |= 1 << c;
    }
    let kernel = (0..n)
        .filter(|&f| is_pivot & (1 << f) == 0)
        .map(|f| {
            let mut v = 1u64 << f;
            for (i, &c) in pivots.iter().enumerate() {
                if rows[i] & (1 << f) != 0 {
                    v |= 1 << c;
                }
            }
            v
        })
        .collect();
    Some((x0, kernel))
}
