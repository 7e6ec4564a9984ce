//! The adaptive Haar-type block transform.
//!
//! Each level splits the current low-pass image into 4×4 blocks. Every
//! block is tried against all 117 tetromino tilings of the board; the
//! tiling whose 12 detail coefficients have the smallest l¹ norm wins
//! (ties go to the smallest catalog index, with the plain square tiling
//! pinned at index 0 so flat blocks reproduce the classical Haar
//! transform). Per block this yields 4 low-pass and 12 detail
//! coefficients, rearranged into a half-size low-pass image and three
//! detail subbands; the low-pass image feeds the next level.

pub mod tiling;

pub use tiling::{Tetromino, Tiling, TilingCatalog, SYMMETRY_CLASS_COUNT, TILING_COUNT};

use thiserror::Error;

use crate::grid::Grid;
use crate::image::GrayImage;
use crate::real::Real;

#[derive(Debug, Error, PartialEq)]
pub enum TetroletError {
    #[error(
        "DimensionNotDivisible: {width}x{height} not divisible by {required} for {levels} levels"
    )]
    DimensionNotDivisible {
        width: usize,
        height: usize,
        required: usize,
        levels: usize,
    },
    #[error("IndexOutOfRange: level {level}, detail {detail} outside 1..={levels} x 1..=3")]
    IndexOutOfRange {
        level: usize,
        detail: usize,
        levels: usize,
    },
    #[error("MalformedDecomposition: {0}")]
    MalformedDecomposition(String),
}

/// Applies the orthonormal 4-point analysis matrix to tetromino samples
/// ordered by the canonical cell ordering. Output slot 0 is the low-pass
/// coefficient, slots 1..=3 the detail coefficients.
///
/// The matrix rows are ½(1,1,1,1), ½(1,1,−1,−1), ½(1,−1,1,−1),
/// ½(1,−1,−1,1); it is symmetric and orthogonal, so it is its own
/// inverse.
#[inline]
pub fn haar_tetromino<T: Real>(values: [T; 4]) -> [T; 4] {
    let half = T::of(0.5);
    let [a, b, c, d] = values;
    [
        half * (a + b + c + d),
        half * (a + b - c - d),
        half * (a - b + c - d),
        half * (a - b - c + d),
    ]
}

/// Inverse of [`haar_tetromino`]; the matrix is involutory.
#[inline]
pub fn haar_tetromino_inverse<T: Real>(coeffs: [T; 4]) -> [T; 4] {
    haar_tetromino(coeffs)
}

/// Result of analyzing one 4×4 block: the chosen tiling, 4 low-pass
/// coefficients (one per tetromino, in tiling order) and 12 details
/// (tetromino-major: slot `3s + l - 1` holds detail `l` of tetromino `s`).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAnalysis<T> {
    pub tiling_index: usize,
    pub lowpass: [T; 4],
    pub details: [T; 12],
    pub cost: T,
}

/// Finds the l¹-optimal tiling for a 4×4 block over the full catalog.
pub fn analyze_block<T: Real>(block: &[[T; 4]; 4], catalog: &TilingCatalog) -> BlockAnalysis<T> {
    let mut best: Option<BlockAnalysis<T>> = None;
    for tiling in catalog.iter() {
        let candidate = evaluate_tiling(block, tiling);
        match &best {
            Some(b) if candidate.cost >= b.cost => {}
            _ => best = Some(candidate),
        }
    }
    best.expect("catalog is non-empty")
}

/// Transform coefficients of a block under one specific tiling.
pub fn evaluate_tiling<T: Real>(block: &[[T; 4]; 4], tiling: &Tiling) -> BlockAnalysis<T> {
    let mut lowpass = [T::zero(); 4];
    let mut details = [T::zero(); 12];
    let mut cost = T::zero();
    for (s, piece) in tiling.pieces().iter().enumerate() {
        let cells = piece.cells();
        let vals = [
            block[cells[0].0 as usize][cells[0].1 as usize],
            block[cells[1].0 as usize][cells[1].1 as usize],
            block[cells[2].0 as usize][cells[2].1 as usize],
            block[cells[3].0 as usize][cells[3].1 as usize],
        ];
        let coeffs = haar_tetromino(vals);
        lowpass[s] = coeffs[0];
        for l in 0..3 {
            let d = coeffs[l + 1];
            details[3 * s + l] = d;
            cost += d.abs();
        }
    }
    BlockAnalysis {
        tiling_index: tiling.index(),
        lowpass,
        details,
        cost,
    }
}

/// One decomposition level: three detail subbands plus the tiling chosen
/// for each 4×4 block. For an H×W input the subbands are H/2 × W/2 and
/// the tiling map is H/4 × W/4.
#[derive(Debug, Clone, PartialEq)]
pub struct TetroletLevel<T> {
    details: [Grid<T>; 3],
    tiling_choice: Grid<u8>,
}

impl<T: Real> TetroletLevel<T> {
    /// Detail subband by index `1..=3`.
    pub fn detail(&self, index: usize) -> Option<&Grid<T>> {
        self.details.get(index.checked_sub(1)?)
    }

    pub fn tiling_choice(&self) -> &Grid<u8> {
        &self.tiling_choice
    }
}

/// Multi-level decomposition: `levels[0]` is the finest level; the
/// low-pass image remaining after the last level is kept for inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct TetroletDecomposition<T> {
    levels: Vec<TetroletLevel<T>>,
    final_lowpass: Grid<T>,
}

impl<T: Real> TetroletDecomposition<T> {
    pub fn levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, level: usize) -> Option<&TetroletLevel<T>> {
        self.levels.get(level.checked_sub(1)?)
    }

    pub fn final_lowpass(&self) -> &Grid<T> {
        &self.final_lowpass
    }

    /// The addressed detail subband; for J levels, `(level, detail)` in
    /// lexicographic order enumerates the 3J subbands.
    pub fn subband(&self, level: usize, detail: usize) -> Result<&Grid<T>, TetroletError> {
        self.level(level)
            .and_then(|l| l.detail(detail))
            .ok_or(TetroletError::IndexOutOfRange {
                level,
                detail,
                levels: self.levels(),
            })
    }

    /// Mutable access for in-place tampering in tests and diagnostics.
    #[doc(hidden)]
    pub fn tiling_choice_mut(&mut self, level: usize) -> Option<&mut Grid<u8>> {
        self.levels
            .get_mut(level.checked_sub(1)?)
            .map(|l| &mut l.tiling_choice)
    }
}

#[derive(Clone, Copy)]
enum TilingMode {
    Adaptive,
    Fixed(usize),
}

/// Forward transform with the adaptive per-block tiling search.
///
/// Requires both dimensions divisible by `2^(levels+1)`: each level
/// needs dimensions divisible by 4, and each level halves them.
pub fn forward<T: Real>(
    img: &GrayImage<T>,
    levels: usize,
) -> Result<TetroletDecomposition<T>, TetroletError> {
    forward_impl(img, levels, TilingMode::Adaptive)
}

/// Forward transform with every block forced to one catalog tiling.
///
/// With `tiling_index = 0` this reproduces the classical 2×2-block Haar
/// transform; it exists as a validation mode and for diagnostics.
pub fn forward_with_fixed_tiling<T: Real>(
    img: &GrayImage<T>,
    levels: usize,
    tiling_index: usize,
) -> Result<TetroletDecomposition<T>, TetroletError> {
    forward_impl(img, levels, TilingMode::Fixed(tiling_index))
}

fn forward_impl<T: Real>(
    img: &GrayImage<T>,
    levels: usize,
    mode: TilingMode,
) -> Result<TetroletDecomposition<T>, TetroletError> {
    assert!(levels >= 1, "at least one decomposition level");
    let required = 1usize << (levels + 1);
    let (w, h) = (img.width(), img.height());
    if w % required != 0 || h % required != 0 {
        return Err(TetroletError::DimensionNotDivisible {
            width: w,
            height: h,
            required,
            levels,
        });
    }
    let catalog = TilingCatalog::shared();
    if let TilingMode::Fixed(idx) = mode {
        assert!(idx < catalog.len(), "fixed tiling index out of range");
    }

    let mut current = img.grid().clone();
    let mut out_levels = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (rows, cols) = (current.rows(), current.cols());
        let mut next = Grid::filled(rows / 2, cols / 2, T::zero());
        let mut details = [
            Grid::filled(rows / 2, cols / 2, T::zero()),
            Grid::filled(rows / 2, cols / 2, T::zero()),
            Grid::filled(rows / 2, cols / 2, T::zero()),
        ];
        let mut choice = Grid::filled(rows / 4, cols / 4, 0u8);

        for bi in 0..rows / 4 {
            for bj in 0..cols / 4 {
                let mut block = [[T::zero(); 4]; 4];
                for (r, row) in block.iter_mut().enumerate() {
                    for (c, v) in row.iter_mut().enumerate() {
                        *v = current.get(4 * bi + r, 4 * bj + c);
                    }
                }
                let analysis = match mode {
                    TilingMode::Adaptive => analyze_block(&block, catalog),
                    TilingMode::Fixed(idx) => {
                        evaluate_tiling(&block, catalog.get(idx).expect("index checked"))
                    }
                };
                choice.set(bi, bj, analysis.tiling_index as u8);
                for s in 0..4 {
                    let r = 2 * bi + s / 2;
                    let c = 2 * bj + s % 2;
                    next.set(r, c, analysis.lowpass[s]);
                    for (l, band) in details.iter_mut().enumerate() {
                        band.set(r, c, analysis.details[3 * s + l]);
                    }
                }
            }
        }
        out_levels.push(TetroletLevel {
            details,
            tiling_choice: choice,
        });
        current = next;
    }
    Ok(TetroletDecomposition {
        levels: out_levels,
        final_lowpass: current,
    })
}

/// Exact inverse of [`forward`], reconstructing from the stored tiling
/// choices; round-trip error is bounded by floating-point accumulation.
pub fn inverse<T: Real>(dec: &TetroletDecomposition<T>) -> Result<GrayImage<T>, TetroletError> {
    if dec.levels.is_empty() {
        return Err(TetroletError::MalformedDecomposition("no levels".into()));
    }
    let catalog = TilingCatalog::shared();
    let mut current = dec.final_lowpass.clone();
    for (li, level) in dec.levels.iter().enumerate().rev() {
        let (rows, cols) = (current.rows(), current.cols());
        for (di, d) in level.details.iter().enumerate() {
            if d.rows() != rows || d.cols() != cols {
                return Err(TetroletError::MalformedDecomposition(format!(
                    "level {} detail {} is {}x{}, expected {}x{}",
                    li + 1,
                    di + 1,
                    d.rows(),
                    d.cols(),
                    rows,
                    cols
                )));
            }
        }
        if rows % 2 != 0
            || cols % 2 != 0
            || level.tiling_choice.rows() != rows / 2
            || level.tiling_choice.cols() != cols / 2
        {
            return Err(TetroletError::MalformedDecomposition(format!(
                "level {} tiling map is {}x{}, expected {}x{}",
                li + 1,
                level.tiling_choice.rows(),
                level.tiling_choice.cols(),
                rows / 2,
                cols / 2
            )));
        }

        let mut out = Grid::filled(rows * 2, cols * 2, T::zero());
        for bi in 0..rows / 2 {
            for bj in 0..cols / 2 {
                let idx = level.tiling_choice.get(bi, bj) as usize;
                let tiling = catalog.get(idx).ok_or_else(|| {
                    TetroletError::MalformedDecomposition(format!(
                        "tiling index {idx} out of range at level {} block ({bi},{bj})",
                        li + 1
                    ))
                })?;
                for (s, piece) in tiling.pieces().iter().enumerate() {
                    let r = 2 * bi + s / 2;
                    let c = 2 * bj + s % 2;
                    let coeffs = [
                        current.get(r, c),
                        level.details[0].get(r, c),
                        level.details[1].get(r, c),
                        level.details[2].get(r, c),
                    ];
                    let vals = haar_tetromino_inverse(coeffs);
                    for (k, &(pr, pc)) in piece.cells().iter().enumerate() {
                        out.set(4 * bi + pr as usize, 4 * bj + pc as usize, vals[k]);
                    }
                }
            }
        }
        current = out;
    }
    GrayImage::from_grid(current).map_err(|e| TetroletError::MalformedDecomposition(e.to_string()))
}
