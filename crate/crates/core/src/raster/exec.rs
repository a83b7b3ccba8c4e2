use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rayon::ThreadPool;

use super::{Grid, GridKind};
use crate::error::{Error, Result};

pub const DEFAULT_TILE: usize = 256;

/// Runs pure per-pixel functions over aligned grids, tile by tile.
///
/// Each output pixel depends only on the input samples at the same
/// position, so the result is bit-identical for every tile size and
/// worker count.
#[derive(Clone)]
pub struct Executor {
    tile: usize,
    pool: Option<Arc<ThreadPool>>,
}

impl fmt::Debug for Executor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Executor")
            .field("tile", &self.tile)
            .field("threads", &self.threads())
            .finish()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Executor::sequential()
    }
}

impl Executor {
    pub fn sequential() -> Self {
        Executor {
            tile: DEFAULT_TILE,
            pool: None,
        }
    }

    /// `threads` workers; 1 runs inline on the calling thread.
    pub fn new(threads: usize) -> Result<Self> {
        if threads <= 1 {
            return Ok(Executor::sequential());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .thread_name(|i| format!("burnscan-tile-{i}"))
            .build()
            .map_err(|e| Error::InvalidGrid(format!("cannot start worker pool: {e}")))?;
        Ok(Executor {
            tile: DEFAULT_TILE,
            pool: Some(Arc::new(pool)),
        })
    }

    /// Square tile edge in pixels (clamped to at least 1).
    pub fn with_tile(mut self, tile: usize) -> Self {
        self.tile = tile.max(1);
        self
    }

    pub fn tile(&self) -> usize {
        self.tile
    }

    pub fn threads(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    /// Applies `f` to the stacked samples of `inputs` at every pixel.
    ///
    /// `f` receives one sample per input, nodata sentinels included, and
    /// returns the output sample. The output inherits the first input's
    /// georeferencing.
    pub fn map_tiled<F>(&self, inputs: &[&Grid], kind: GridKind, nodata: f32, f: F) -> Result<Grid>
    where
        F: Fn(&[f32]) -> f32 + Sync,
    {
        let first = *inputs
            .first()
            .ok_or_else(|| Error::InvalidGrid("map_tiled needs at least one input".into()))?;
        Grid::ensure_aligned(inputs)?;
        let (width, height) = (first.width(), first.height());
        let band_rows = self.tile;
        let mut out = vec![0f32; width * height];

        let run_band = |(band, chunk): (usize, &mut [f32])| {
            let row0 = band * band_rows;
            let rows = chunk.len() / width;
            let mut stack = vec![0f32; inputs.len()];
            for col0 in (0..width).step_by(self.tile) {
                let col1 = (col0 + self.tile).min(width);
                for r in 0..rows {
                    let base = (row0 + r) * width;
                    for c in col0..col1 {
                        for (slot, g) in stack.iter_mut().zip(inputs) {
                            *slot = g.values()[base + c];
                        }
                        chunk[r * width + c] = f(&stack);
                    }
                }
            }
        };

        match &self.pool {
            None => out
                .chunks_mut(band_rows * width)
                .enumerate()
                .for_each(run_band),
            Some(pool) => pool.install(|| {
                out.par_chunks_mut(band_rows * width)
                    .enumerate()
                    .for_each(run_band)
            }),
        }

        Grid::new(width, height, first.transform().clone(), nodata, out, kind)
    }

    /// Maps `f` over `items` on the worker pool, keeping input order.
    pub fn par_map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match &self.pool {
            None => items.iter().map(f).collect(),
            Some(pool) => pool.install(|| items.par_iter().map(f).collect()),
        }
    }

    /// Folds every pixel of `inputs` into per-band accumulators and merges
    /// them in band order.
    pub fn fold_tiled<A, I, F, M>(&self, inputs: &[&Grid], init: I, fold: F, merge: M) -> Result<A>
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, &[f32]) + Sync,
        M: Fn(A, A) -> A,
    {
        let first = *inputs
            .first()
            .ok_or_else(|| Error::InvalidGrid("fold_tiled needs at least one input".into()))?;
        Grid::ensure_aligned(inputs)?;
        let (width, height) = (first.width(), first.height());
        let band_rows = self.tile;
        let bands = height.div_ceil(band_rows);

        let run_band = |band: usize| {
            let mut acc = init();
            let mut stack = vec![0f32; inputs.len()];
            let start = band * band_rows * width;
            let end = ((band + 1) * band_rows).min(height) * width;
            for i in start..end {
                for (slot, g) in stack.iter_mut().zip(inputs) {
                    *slot = g.values()[i];
                }
                fold(&mut acc, &stack);
            }
            acc
        };

        let partials: Vec<A> = match &self.pool {
            None => (0..bands).map(run_band).collect(),
            Some(pool) => pool.install(|| (0..bands).into_par_iter().map(run_band).collect()),
        };
        Ok(partials.into_iter().fold(init(), merge))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::GeoTransform;

    fn grid(w: usize, h: usize, f: impl Fn(usize) -> f32) -> Grid {
        let t = GeoTransform::new(0.0, 0.0, 1.0, 1.0, "EPSG:32648").unwrap();
        Grid::new(
            w,
            h,
            t,
            -9999.0,
            (0..w * h).map(f).collect(),
            GridKind::Index,
        )
        .unwrap()
    }

    #[test]
    fn identity_map_preserves_grid() {
        let g = grid(7, 5, |i| i as f32 * 0.25);
        for tile in [1, 2, 3, 7, 100] {
            let out = Executor::sequential()
                .with_tile(tile)
                .map_tiled(&[&g], GridKind::Index, g.nodata(), |s| s[0])
                .unwrap();
            assert_eq!(out, g);
        }
    }

    #[test]
    fn tile_size_does_not_change_output() {
        let g = grid(5, 5, |i| i as f32);
        let a = Executor::sequential()
            .with_tile(2)
            .map_tiled(&[&g], GridKind::Index, -9999.0, |s| s[0] + 1.0)
            .unwrap();
        let b = Executor::sequential()
            .with_tile(5)
            .map_tiled(&[&g], GridKind::Index, -9999.0, |s| s[0] + 1.0)
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values()[24], 25.0);
    }

    #[test]
    fn rejects_misaligned_inputs() {
        let a = grid(3, 3, |_| 0.0);
        let b = grid(3, 4, |_| 0.0);
        let err = Executor::sequential()
            .map_tiled(&[&a, &b], GridKind::Index, -9999.0, |s| s[0])
            .unwrap_err();
        assert!(matches!(err, Error::AlignmentMismatch(_)));
    }

    #[test]
    fn fold_counts_match_across_threads() {
        let g = grid(33, 17, |i| (i % 3) as f32);
        let count = |ex: &Executor| {
            ex.fold_tiled(
                &[&g],
                || 0u64,
                |acc, s| {
                    if s[0] == 2.0 {
                        *acc += 1
                    }
                },
                |a, b| a + b,
            )
            .unwrap()
        };
        let expected = (0..33 * 17).filter(|i| i % 3 == 2).count() as u64;
        assert_eq!(count(&Executor::sequential().with_tile(4)), expected);
        assert_eq!(count(&Executor::new(3).unwrap().with_tile(5)), expected);
    }
}
