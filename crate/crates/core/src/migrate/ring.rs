//! Depth-indexed row buffer with O(1) shift toward increasing depth.

use crate::scalar::Real;

/// `rows` rows of `nx` samples; logical row `r` lives at physical row
/// `(head + r) % rows`.
#[derive(Debug, Clone)]
pub(crate) struct DepthRing<T> {
    nx: usize,
    rows: usize,
    head: usize,
    data: Vec<T>,
}

impl<T: Real> DepthRing<T> {
    pub fn zeros(nx: usize, rows: usize) -> Self {
        DepthRing {
            nx,
            rows,
            head: 0,
            data: vec![T::zero(); nx * rows],
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    fn phys(&self, r: usize) -> usize {
        (self.head + r) % self.rows
    }

    pub fn row(&self, r: usize) -> &[T] {
        debug_assert!(r < self.rows);
        let p = self.phys(r);
        &self.data[p * self.nx..(p + 1) * self.nx]
    }

    /// Moves every row one step deeper, drops the deepest row and returns
    /// the new (stale) row 0 for the caller to overwrite.
    pub fn push_front(&mut self) -> &mut [T] {
        assert!(self.rows > 0, "push_front on an empty ring");
        self.head = (self.head + self.rows - 1) % self.rows;
        let p = self.head;
        &mut self.data[p * self.nx..(p + 1) * self.nx]
    }

    /// Logical rows `lo..hi` as at most two contiguous physical pieces, in
    /// logical order.
    pub fn segments_mut(&mut self, lo: usize, hi: usize) -> (&mut [T], &mut [T]) {
        assert!(lo <= hi && hi <= self.rows);
        let len = hi - lo;
        if len == 0 {
            return (&mut [], &mut []);
        }
        let nx = self.nx;
        let p = self.phys(lo);
        let (front, back) = self.data.split_at_mut(p * nx);
        if p + len <= self.rows {
            (&mut back[..len * nx], &mut [])
        } else {
            let wrapped = p + len - self.rows;
            (back, &mut front[..wrapped * nx])
        }
    }

    /// Copies the rows out in logical order.
    pub fn to_vec(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.data.len());
        for r in 0..self.rows {
            out.extend_from_slice(self.row(r));
        }
        out
    }
}
