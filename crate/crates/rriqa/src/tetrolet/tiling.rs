//! Enumeration of the tetromino partitions of the 4×4 board.
//!
//! There are exactly 117 ways to partition the 16 cells into four
//! edge-connected tetrominoes, falling into 22 classes under the eight
//! symmetries of the square. The catalog is produced by exhaustive
//! backtracking (always placing into the lowest uncovered cell), with
//! the plain square tiling pinned to index 0 so that flat blocks
//! degrade to the classical Haar transform on ties.

use std::sync::OnceLock;

/// Number of tetromino partitions of the 4×4 board.
pub const TILING_COUNT: usize = 117;

/// Number of tiling classes under the 8 square symmetries.
pub const SYMMETRY_CLASS_COUNT: usize = 22;

/// Four edge-connected cells of the 4×4 board, sorted by `(row, col)`.
///
/// The sorted order is the bijection mapping each cell to its slot in
/// the 4-point transform vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tetromino {
    cells: [(u8, u8); 4],
}

impl Tetromino {
    /// Builds a tetromino after validating range, distinctness, and
    /// edge-connectivity. Cells are stored sorted.
    pub fn new(mut cells: [(u8, u8); 4]) -> Option<Self> {
        cells.sort_unstable();
        let in_range = cells.iter().all(|&(r, c)| r < 4 && c < 4);
        let distinct = cells.windows(2).all(|w| w[0] != w[1]);
        if !in_range || !distinct || !Self::connected(&cells) {
            return None;
        }
        Some(Self { cells })
    }

    fn connected(cells: &[(u8, u8); 4]) -> bool {
        let mut seen = [false; 4];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for (j, &(r, c)) in cells.iter().enumerate() {
                if !seen[j] {
                    let (ri, ci) = cells[i];
                    let adjacent =
                        (r == ri && c.abs_diff(ci) == 1) || (c == ci && r.abs_diff(ri) == 1);
                    if adjacent {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Cells in canonical `(row, col)` order.
    #[inline]
    pub fn cells(&self) -> &[(u8, u8); 4] {
        &self.cells
    }
}

/// One partition of the 4×4 board into four tetrominoes, in the order
/// they were discovered (ascending minimal cell).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tiling {
    pieces: [Tetromino; 4],
    index: usize,
}

impl Tiling {
    #[inline]
    pub fn pieces(&self) -> &[Tetromino; 4] {
        &self.pieces
    }

    /// Position in the canonical catalog, `0..117`.
    #[inline]
    pub fn index(&self) -> usize {
        self.index
    }

    /// The 16 board cells as piece ids `0..=3`, row-major.
    pub fn owner_digits(&self) -> [u8; 16] {
        let mut owners = [0u8; 16];
        for (pid, piece) in self.pieces.iter().enumerate() {
            for &(r, c) in piece.cells() {
                owners[(r * 4 + c) as usize] = pid as u8;
            }
        }
        owners
    }
}

/// The full, deterministically ordered catalog of 117 tilings.
#[derive(Debug, Clone)]
pub struct TilingCatalog {
    tilings: Vec<Tiling>,
}

impl TilingCatalog {
    /// Enumerates the catalog by backtracking. The square tiling (four
    /// 2×2 blocks) is moved to index 0; the rest keep discovery order.
    pub fn enumerate() -> Self {
        let shapes = fixed_shapes();
        let mut owner = [-1i8; 16];
        let mut pieces: Vec<Tetromino> = Vec::with_capacity(4);
        let mut found: Vec<[Tetromino; 4]> = Vec::new();
        backtrack(&shapes, &mut owner, &mut pieces, &mut found);
        assert_eq!(found.len(), TILING_COUNT, "board enumeration is exhaustive");

        let square = square_partition();
        let pos = found
            .iter()
            .position(|p| *p == square)
            .expect("square tiling is a valid partition");
        let sq = found.remove(pos);
        found.insert(0, sq);

        let tilings = found
            .into_iter()
            .enumerate()
            .map(|(index, pieces)| Tiling { pieces, index })
            .collect();
        Self { tilings }
    }

    /// Shared catalog, built once.
    pub fn shared() -> &'static TilingCatalog {
        static CATALOG: OnceLock<TilingCatalog> = OnceLock::new();
        CATALOG.get_or_init(TilingCatalog::enumerate)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.tilings.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.tilings.is_empty()
    }

    #[inline]
    pub fn get(&self, index: usize) -> Option<&Tiling> {
        self.tilings.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tiling> {
        self.tilings.iter()
    }

    /// Number of equivalence classes under the 8 square symmetries.
    pub fn symmetry_class_count(&self) -> usize {
        let mut canon: Vec<[[(u8, u8); 4]; 4]> = self
            .tilings
            .iter()
            .map(|t| {
                (0..8)
                    .map(|s| transformed_key(t, s))
                    .min()
                    .expect("eight symmetries")
            })
            .collect();
        canon.sort_unstable();
        canon.dedup();
        canon.len()
    }

    /// Text dump: one line per tiling, index then 16 owner digits.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for t in &self.tilings {
            out.push_str(&t.index().to_string());
            out.push(' ');
            for d in t.owner_digits() {
                out.push((b'0' + d) as char);
            }
            out.push('\n');
        }
        out
    }
}

fn square_partition() -> [Tetromino; 4] {
    let block = |r0: u8, c0: u8| {
        Tetromino::new([(r0, c0), (r0, c0 + 1), (r0 + 1, c0), (r0 + 1, c0 + 1)]).unwrap()
    };
    [block(0, 0), block(0, 2), block(2, 0), block(2, 2)]
}

// Maps a tiling through square symmetry `s` (4 rotations × reflection)
// and returns its canonical partition key.
fn transformed_key(t: &Tiling, s: usize) -> [[(u8, u8); 4]; 4] {
    let map = |r: u8, c: u8| -> (u8, u8) {
        let (r, c) = if s >= 4 { (c, r) } else { (r, c) };
        match s % 4 {
            0 => (r, c),
            1 => (c, 3 - r),
            2 => (3 - r, 3 - c),
            _ => (3 - c, r),
        }
    };
    let mut key = [[(0u8, 0u8); 4]; 4];
    for (pi, piece) in t.pieces().iter().enumerate() {
        let mut cells = [(0u8, 0u8); 4];
        for (ci, &(r, c)) in piece.cells().iter().enumerate() {
            cells[ci] = map(r, c);
        }
        cells.sort_unstable();
        key[pi] = cells;
    }
    key.sort_unstable();
    key
}

// All distinct orientations of the five free tetrominoes, normalized to
// have their minimal cell at (0, 0) in sorted order, sorted for a
// deterministic enumeration order. There are 19 of them.
fn fixed_shapes() -> Vec<[(i8, i8); 4]> {
    let free: [[(i8, i8); 4]; 5] = [
        [(0, 0), (0, 1), (0, 2), (0, 3)], // I
        [(0, 0), (0, 1), (1, 0), (1, 1)], // O
        [(0, 0), (0, 1), (0, 2), (1, 1)], // T
        [(0, 1), (0, 2), (1, 0), (1, 1)], // S
        [(0, 0), (1, 0), (2, 0), (2, 1)], // L
    ];
    let mut shapes: Vec<[(i8, i8); 4]> = Vec::new();
    for base in &free {
        for s in 0..8 {
            let mut cells: Vec<(i8, i8)> = base
                .iter()
                .map(|&(r, c)| {
                    let (r, c) = if s >= 4 { (c, r) } else { (r, c) };
                    match s % 4 {
                        0 => (r, c),
                        1 => (c, -r),
                        2 => (-r, -c),
                        _ => (-c, r),
                    }
                })
                .collect();
            cells.sort_unstable();
            let (r0, c0) = cells[0];
            let mut arr = [(0i8, 0i8); 4];
            for (i, &(r, c)) in cells.iter().enumerate() {
                arr[i] = (r - r0, c - c0);
            }
            if !shapes.contains(&arr) {
                shapes.push(arr);
            }
        }
    }
    shapes.sort_unstable();
    shapes
}

fn backtrack(
    shapes: &[[(i8, i8); 4]],
    owner: &mut [i8; 16],
    pieces: &mut Vec<Tetromino>,
    found: &mut Vec<[Tetromino; 4]>,
) {
    let Some(first) = owner.iter().position(|&o| o < 0) else {
        found.push([pieces[0], pieces[1], pieces[2], pieces[3]]);
        return;
    };
    let (r0, c0) = ((first / 4) as i8, (first % 4) as i8);
    // Any piece covering the lowest free cell must have its minimal cell
    // there, so anchoring shape cell 0 at (r0, c0) loses nothing.
    'shape: for shape in shapes {
        let mut cells = [(0u8, 0u8); 4];
        for (i, &(dr, dc)) in shape.iter().enumerate() {
            let (r, c) = (r0 + dr, c0 + dc);
            if !(0..4).contains(&r) || !(0..4).contains(&c) || owner[(r * 4 + c) as usize] >= 0 {
                continue 'shape;
            }
            cells[i] = (r as u8, c as u8);
        }
        let piece = Tetromino::new(cells).expect("shapes are valid tetrominoes");
        let pid = pieces.len() as i8;
        for &(r, c) in piece.cells() {
            owner[(r as usize) * 4 + c as usize] = pid;
        }
        pieces.push(piece);
        backtrack(shapes, owner, pieces, found);
        pieces.pop();
        for &(r, c) in piece.cells() {
            owner[(r as usize) * 4 + c as usize] = -1;
        }
    }
}
