//! Windowed gray-level co-occurrence matrices and the Rényi-entropy map.
//!
//! For every pixel the co-occurrence counts of its reflect-padded
//! `(2r+1)²` window are accumulated over all configured (distance, direction)
//! offsets into one combined 256×256 matrix. A pair is counted only when both
//! endpoints lie inside the window, and every pair increments both `[a][b]`
//! and `[b][a]`. The map value is the order-`alpha` Rényi entropy (natural
//! log) of the combined matrix normalized by its total.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{reflect_index, FeatureMap, QuantizedImage};

pub const LEVELS: usize = 256;
const CELLS: usize = LEVELS * LEVELS;

/// The four primary GLCM directions. Image rows grow downward, so 45° pairs
/// a pixel with its upper-right neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "0")]
    Deg0,
    #[serde(rename = "45")]
    Deg45,
    #[serde(rename = "90")]
    Deg90,
    #[serde(rename = "135")]
    Deg135,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Deg0,
        Direction::Deg45,
        Direction::Deg90,
        Direction::Deg135,
    ];

    /// Unit step `(dx, dy)`.
    pub fn step(self) -> (isize, isize) {
        match self {
            Direction::Deg0 => (1, 0),
            Direction::Deg45 => (1, -1),
            Direction::Deg90 => (0, -1),
            Direction::Deg135 => (-1, -1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlcmParams {
    /// Window half-size; the window side is `2 * radius + 1`.
    pub radius: usize,
    /// Rényi order, `> 0` and `!= 1`.
    pub alpha: f64,
    pub distances: Vec<usize>,
    pub directions: Vec<Direction>,
}

impl Default for GlcmParams {
    fn default() -> Self {
        Self {
            radius: 5,
            alpha: 7.0,
            distances: vec![1, 2],
            directions: Direction::ALL.to_vec(),
        }
    }
}

impl GlcmParams {
    pub fn validate(&self) -> Result<()> {
        if self.radius == 0 {
            return Err(Error::InvalidParams("GLCM radius must be >= 1".into()));
        }
        check_alpha(self.alpha)?;
        if self.distances.is_empty() || self.distances.iter().any(|d| !(1..=2).contains(d)) {
            return Err(Error::InvalidParams(format!(
                "GLCM distances must be a nonempty subset of {{1, 2}}, got {:?}",
                self.distances
            )));
        }
        if has_duplicates(&self.distances) {
            return Err(Error::InvalidParams("duplicate GLCM distance".into()));
        }
        if self.directions.is_empty() || has_duplicates(&self.directions) {
            return Err(Error::InvalidParams(
                "GLCM directions must be nonempty and distinct".into(),
            ));
        }
        Ok(())
    }

    /// Pixel offsets `(dx, dy)` for every (distance, direction) combination.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let mut out = Vec::with_capacity(self.distances.len() * self.directions.len());
        for &d in &self.distances {
            for dir in &self.directions {
                let (dx, dy) = dir.step();
                out.push((dx * d as isize, dy * d as isize));
            }
        }
        out
    }

    /// Total of a combined window matrix: twice the number of in-window pairs.
    pub fn pair_slots(&self) -> u64 {
        let side = (2 * self.radius + 1) as isize;
        let pairs: isize = self
            .offsets()
            .iter()
            .map(|&(dx, dy)| (side - dx.abs()).max(0) * (side - dy.abs()).max(0))
            .sum();
        2 * pairs as u64
    }
}

fn has_duplicates<T: PartialEq>(items: &[T]) -> bool {
    items
        .iter()
        .enumerate()
        .any(|(i, a)| items[i + 1..].contains(a))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) || alpha == 1.0 {
        return Err(Error::InvalidParams(format!(
            "Rényi order must be > 0 and != 1, got {alpha}"
        )));
    }
    Ok(())
}

/// Dense 256×256 co-occurrence counts.
#[derive(Clone, PartialEq, Eq)]
pub struct Glcm {
    counts: Vec<u32>,
    total: u64,
}

impl std::fmt::Debug for Glcm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Glcm")
            .field("total", &self.total)
            .field(
                "nonzero_cells",
                &self.counts.iter().filter(|&&c| c > 0).count(),
            )
            .finish()
    }
}

impl Default for Glcm {
    fn default() -> Self {
        Self::new()
    }
}

impl Glcm {
    pub fn new() -> Self {
        Self {
            counts: vec![0; CELLS],
            total: 0,
        }
    }

    /// Builds a matrix from explicit cell counts `(row, col, count)`; cells
    /// may repeat and accumulate. No symmetry is imposed.
    pub fn from_cells(cells: &[(u8, u8, u32)]) -> Self {
        let mut g = Self::new();
        for &(a, b, c) in cells {
            g.counts[cell(a, b)] += c;
            g.total += u64::from(c);
        }
        g
    }

    pub fn get(&self, a: u8, b: u8) -> u32 {
        self.counts[cell(a, b)]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Normalized entry `f(a, b) = count / total`.
    pub fn probability(&self, a: u8, b: u8) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            f64::from(self.get(a, b)) / self.total as f64
        }
    }

    /// Row-major cell counts (`[a * 256 + b]`).
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Records the pair symmetrically.
    pub fn add_pair(&mut self, a: u8, b: u8) {
        self.counts[cell(a, b)] += 1;
        self.counts[cell(b, a)] += 1;
        self.total += 2;
    }
}

#[inline]
fn cell(a: u8, b: u8) -> usize {
    usize::from(a) * LEVELS + usize::from(b)
}

/// Calls `f(v(p), v(p + offset))` for every ordered pair `(p, p + offset)` with
/// both endpoints inside the `side × side` window whose top-left corner is
/// `(x0, y0)` in the coordinates understood by `value`.
fn for_each_window_pair<V, F>(
    value: V,
    x0: isize,
    y0: isize,
    side: isize,
    offsets: &[(isize, isize)],
    mut f: F,
) where
    V: Fn(isize, isize) -> u8,
    F: FnMut(u8, u8),
{
    for &(dx, dy) in offsets {
        let xs = 0.max(-dx)..side.min(side - dx);
        let ys = 0.max(-dy)..side.min(side - dy);
        for y in ys {
            for x in xs.clone() {
                f(value(x0 + x, y0 + y), value(x0 + x + dx, y0 + y + dy));
            }
        }
    }
}

/// Combined co-occurrence matrix of the window centred on pixel `(x, y)`.
pub fn window_glcm(
    img: &QuantizedImage,
    center: (usize, usize),
    params: &GlcmParams,
) -> Result<Glcm> {
    params.validate()?;
    let (w, h) = img.dims();
    let (cx, cy) = center;
    if cx >= w || cy >= h {
        return Err(Error::InvalidParams(format!(
            "centre {center:?} outside {w}x{h} image"
        )));
    }
    let r = params.radius as isize;
    let value = |x: isize, y: isize| img.get(reflect_index(x, w), reflect_index(y, h));
    let mut g = Glcm::new();
    for_each_window_pair(
        value,
        cx as isize - r,
        cy as isize - r,
        2 * r + 1,
        &params.offsets(),
        |a, b| g.add_pair(a, b),
    );
    Ok(g)
}

/// Order-`alpha` Rényi entropy `ln(sum f^alpha) / (1 - alpha)` of the
/// normalized matrix; empty cells contribute nothing.
pub fn renyi_entropy(g: &Glcm, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if g.total == 0 {
        return Err(Error::Empty("GLCM has no pairs"));
    }
    let total = g.total as f64;
    let sum: f64 = g
        .counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| (f64::from(c) / total).powf(alpha))
        .sum();
    Ok(sum.ln() / (1.0 - alpha) + 0.0)
}

/// Reference map: rebuilds the window matrix from scratch at every pixel.
pub fn re_map_naive(img: &QuantizedImage, params: &GlcmParams) -> Result<FeatureMap> {
    params.validate()?;
    let (w, h) = img.dims();
    let r = params.radius;
    let side = 2 * r + 1;
    let padded = img.padded(r);
    let offsets = params.offsets();
    let alpha = params.alpha;
    let mut values = vec![0.0f64; w * h];
    values.par_chunks_mut(w).enumerate().for_each_init(
        || (vec![0u32; CELLS], Vec::<usize>::new()),
        |(counts, touched), (y, row)| {
            for (x, out) in row.iter_mut().enumerate() {
                let mut total = 0u64;
                let value = |px: isize, py: isize| padded.at(px as usize, py as usize);
                for_each_window_pair(
                    value,
                    x as isize,
                    y as isize,
                    side as isize,
                    &offsets,
                    |a, b| {
                        for c in [cell(a, b), cell(b, a)] {
                            if counts[c] == 0 {
                                touched.push(c);
                            }
                            counts[c] += 1;
                        }
                        total += 2;
                    },
                );
                let total = total as f64;
                let mut sum = 0.0;
                for &c in touched.iter() {
                    sum += (f64::from(counts[c]) / total).powf(alpha);
                    counts[c] = 0;
                }
                touched.clear();
                *out = sum.ln() / (1.0 - alpha) + 0.0;
            }
        },
    );
    Ok(FeatureMap::from_parts(w, h, values))
}

/// `sum over cells of count^alpha`, maintained as counts change.
///
/// Integer orders whose worst case `total^alpha` fits in a `u128` keep the
/// sum exactly and update it per touched cell. Other orders re-sum the
/// nonzero-cell ledger through a lookup table after each window move, which
/// keeps rounding from accumulating across a row.
enum PowerTable {
    Exact { table: Vec<u128>, denom: u128 },
    Float { table: Vec<f64> },
}

impl PowerTable {
    fn new(alpha: f64, total: u64) -> Self {
        let max = total as usize;
        if alpha.fract() == 0.0 && (2.0..=64.0).contains(&alpha) {
            let exp = alpha as u32;
            if let Some(denom) = u128::from(total).checked_pow(exp) {
                let table = (0..=max as u128).map(|c| c.pow(exp)).collect();
                return PowerTable::Exact { table, denom };
            }
        }
        let t = total as f64;
        PowerTable::Float {
            table: (0..=max).map(|c| (c as f64 / t).powf(alpha)).collect(),
        }
    }
}

struct SlidingGlcm<'t> {
    counts: Vec<u32>,
    /// Nonzero cells, with each cell's slot in `ledger_pos`. Only the
    /// re-summing (float) mode keeps it.
    ledger: Vec<u32>,
    ledger_pos: Vec<u32>,
    power: &'t PowerTable,
    exact_sum: u128,
}

const NOT_IN_LEDGER: u32 = u32::MAX;

impl<'t> SlidingGlcm<'t> {
    fn new(power: &'t PowerTable) -> Self {
        Self {
            counts: vec![0; CELLS],
            ledger: Vec::new(),
            ledger_pos: vec![NOT_IN_LEDGER; CELLS],
            power,
            exact_sum: 0,
        }
    }

    #[inline]
    fn bump(&mut self, c: usize) {
        let old = self.counts[c];
        self.counts[c] = old + 1;
        match self.power {
            PowerTable::Exact { table, .. } => {
                self.exact_sum = self.exact_sum - table[old as usize] + table[old as usize + 1];
            }
            PowerTable::Float { .. } => {
                if old == 0 {
                    self.ledger_pos[c] = self.ledger.len() as u32;
                    self.ledger.push(c as u32);
                }
            }
        }
    }

    #[inline]
    fn drop_one(&mut self, c: usize) {
        let old = self.counts[c];
        debug_assert!(old > 0);
        self.counts[c] = old - 1;
        match self.power {
            PowerTable::Exact { table, .. } => {
                self.exact_sum = self.exact_sum - table[old as usize] + table[old as usize - 1];
            }
            PowerTable::Float { .. } => {
                if old == 1 {
                    let slot = self.ledger_pos[c] as usize;
                    self.ledger.swap_remove(slot);
                    if let Some(&moved) = self.ledger.get(slot) {
                        self.ledger_pos[moved as usize] = slot as u32;
                    }
                    self.ledger_pos[c] = NOT_IN_LEDGER;
                }
            }
        }
    }

    #[inline]
    fn add_pair(&mut self, a: u8, b: u8) {
        self.bump(cell(a, b));
        self.bump(cell(b, a));
    }

    #[inline]
    fn remove_pair(&mut self, a: u8, b: u8) {
        self.drop_one(cell(a, b));
        self.drop_one(cell(b, a));
    }

    /// `sum f^alpha` of the current window.
    fn power_sum(&self) -> f64 {
        match self.power {
            PowerTable::Exact { denom, .. } => self.exact_sum as f64 / *denom as f64,
            PowerTable::Float { table } => self
                .ledger
                .iter()
                .map(|&c| table[self.counts[c as usize] as usize])
                .sum(),
        }
    }

    fn clear(&mut self) {
        match self.power {
            PowerTable::Exact { .. } => self.counts.fill(0),
            PowerTable::Float { .. } => {
                for &c in &self.ledger {
                    self.counts[c as usize] = 0;
                    self.ledger_pos[c as usize] = NOT_IN_LEDGER;
                }
                self.ledger.clear();
            }
        }
        self.exact_sum = 0;
    }
}

/// Calls `f(a, b)` once for every in-window pair with at least one endpoint
/// in column `col`. The window spans `[x0, x0 + side) × [y0, y0 + side)`.
#[inline]
fn for_each_pair_touching_column<F: FnMut(u8, u8)>(
    padded: &crate::image::Padded,
    x0: usize,
    y0: usize,
    side: usize,
    col: usize,
    offsets: &[(isize, isize)],
    mut f: F,
) {
    let (x0, y0, side, col) = (x0 as isize, y0 as isize, side as isize, col as isize);
    let inside_x = |x: isize| x >= x0 && x < x0 + side;
    let at = |x: isize, y: isize| padded.at(x as usize, y as usize);
    for &(dx, dy) in offsets {
        let ys = y0.max(y0 - dy)..(y0 + side).min(y0 + side - dy);
        // pairs starting in the column
        if inside_x(col + dx) {
            for y in ys.clone() {
                f(at(col, y), at(col + dx, y + dy));
            }
        }
        // pairs ending in the column (vertical pairs were covered above)
        if dx != 0 && inside_x(col - dx) {
            for y in ys {
                f(at(col - dx, y), at(col, y + dy));
            }
        }
    }
}

/// Sliding-window implementation, parallel over rows. Each row starts from a
/// fresh window; moving one pixel right drops the pairs touching the column
/// that leaves and adds those touching the column that enters.
pub fn re_map_fast(img: &QuantizedImage, params: &GlcmParams) -> Result<FeatureMap> {
    params.validate()?;
    let (w, h) = img.dims();
    let r = params.radius;
    let side = 2 * r + 1;
    let padded = img.padded(r);
    let offsets = params.offsets();
    let alpha = params.alpha;
    let power = PowerTable::new(alpha, params.pair_slots());
    let mut values = vec![0.0f64; w * h];
    values.par_chunks_mut(w).enumerate().for_each_init(
        || SlidingGlcm::new(&power),
        |win, (y, row)| {
            let value = |px: isize, py: isize| padded.at(px as usize, py as usize);
            for_each_window_pair(value, 0, y as isize, side as isize, &offsets, |a, b| {
                win.add_pair(a, b)
            });
            for (x, out) in row.iter_mut().enumerate() {
                if x > 0 {
                    for_each_pair_touching_column(
                        &padded,
                        x - 1,
                        y,
                        side,
                        x - 1,
                        &offsets,
                        |a, b| win.remove_pair(a, b),
                    );
                    let entering = x + side - 1;
                    for_each_pair_touching_column(
                        &padded,
                        x,
                        y,
                        side,
                        entering,
                        &offsets,
                        |a, b| win.add_pair(a, b),
                    );
                }
                *out = win.power_sum().ln() / (1.0 - alpha) + 0.0;
            }
            win.clear();
        },
    );
    Ok(FeatureMap::from_parts(w, h, values))
}
