//! Uniform dyadic discretization of a truncated box, grid functions with
//! exact cell quadrature, and dyadic cube enumeration.
//!
//! The box is `[-2^L, 2^L)^n` with cells of side `h = 2^-J`; grid data is
//! always stored on the *unshifted* cell partition. Cube scans may use up to
//! `3^n` shifted dyadic grids: the grid with shift component `t in {0, 1/3,
//! 2/3}` places its level-`k` cubes at `2^k (m + sigma_k t)` (corner-relative
//! coordinates), where `sigma_k` alternates sign with the level so that every
//! cube has a unique parent. All cube corners then live on the lattice of
//! step `h/3`, so integrals of cell-constant data over any cube are exact
//! integer-weighted sums.

use std::fmt;
use std::io::{BufRead, Write as IoWrite};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, Expression};
use crate::scalar::{cast, cast_i64, pairwise_map_sum, Scalar};

/// Default cap on the total number of cells.
pub const DEFAULT_CELL_BUDGET: usize = 1 << 24;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("cell budget exceeded: {cells} cells > budget {budget}")]
    BudgetExceeded { cells: usize, budget: usize },
    #[error("level range [{kmin}, {kmax}] outside [{lo}, {hi}]")]
    LevelRange { kmin: i32, kmax: i32, lo: i32, hi: i32 },
    #[error("cube {cube} lies outside the domain box")]
    CubeOutsideDomain { cube: DyadicCube },
    #[error("value count {found} does not match cell count {expected}")]
    ValueCount { expected: usize, found: usize },
    #[error("evaluation failed at cell {cell} (center {center:?}): {source}")]
    Sample { cell: usize, center: [f64; 2], source: EvalError },
    #[error("malformed grid-function file: {0}")]
    Io(String),
}

/// Per-axis shift numerators over 3: components in {0, 1, 2} mean shifts
/// {0, 1/3, 2/3} of the cube side at each level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shift {
    pub thirds: [u8; 2],
}

impl Shift {
    pub const NONE: Shift = Shift { thirds: [0, 0] };

    pub fn new(thirds: [u8; 2]) -> Result<Shift, GridError> {
        if thirds.iter().any(|&t| t > 2) {
            return Err(GridError::InvalidDomain(format!(
                "shift components must be in {{0,1,2}} thirds, got {thirds:?}"
            )));
        }
        Ok(Shift { thirds })
    }

    pub fn is_none(&self) -> bool {
        self.thirds == [0, 0]
    }

    /// All 3^n shifted grids for dimension `n`, unshifted first.
    pub fn all(n: usize) -> Vec<Shift> {
        let mut out = Vec::new();
        match n {
            1 => {
                for a in 0..3u8 {
                    out.push(Shift { thirds: [a, 0] });
                }
            }
            2 => {
                for a in 0..3u8 {
                    for b in 0..3u8 {
                        out.push(Shift { thirds: [a, b] });
                    }
                }
            }
            _ => unreachable!("dimension is 1 or 2"),
        }
        out
    }
}

impl fmt::Display for Shift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}{}", self.thirds[0], self.thirds[1])
    }
}

/// Level-alternating shift sign; adjacent levels flip so that shifted cubes
/// nest properly.
#[inline]
fn level_sign(k: i32) -> i64 {
    if k.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Serializable domain parameters (sidecar format for grid-function dumps).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct DomainSpec {
    pub n: usize,
    pub l: i32,
    pub j: u32,
    #[serde(default = "default_shift")]
    pub shift: [u8; 2],
}

fn default_shift() -> [u8; 2] {
    [0, 0]
}

/// Truncated box `[-2^L, 2^L)^n` discretized at cell side `2^-J`.
///
/// `L = -1` (box side 1, unit measure) is admitted so unit-measure
/// experiments are expressible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Domain {
    n: usize,
    l: i32,
    j: u32,
    shift: Shift,
    cells_per_axis: usize,
}

impl Domain {
    pub fn new(n: usize, l: i32, j: u32) -> Result<Domain, GridError> {
        Domain::with_shift_and_budget(n, l, j, Shift::NONE, DEFAULT_CELL_BUDGET)
    }

    pub fn with_shift(n: usize, l: i32, j: u32, shift: Shift) -> Result<Domain, GridError> {
        Domain::with_shift_and_budget(n, l, j, shift, DEFAULT_CELL_BUDGET)
    }

    pub fn with_shift_and_budget(
        n: usize,
        l: i32,
        j: u32,
        shift: Shift,
        budget: usize,
    ) -> Result<Domain, GridError> {
        if n != 1 && n != 2 {
            return Err(GridError::InvalidDomain(format!("dimension must be 1 or 2, got {n}")));
        }
        if l < -1 {
            return Err(GridError::InvalidDomain(format!("box exponent L must be >= -1, got {l}")));
        }
        if j < 1 {
            return Err(GridError::InvalidDomain("resolution J must be >= 1".into()));
        }
        let axis_exp = l + 1 + j as i32;
        if axis_exp <= 0 || axis_exp >= 40 {
            return Err(GridError::InvalidDomain(format!(
                "L + J + 1 = {axis_exp} out of supported range"
            )));
        }
        let cells_per_axis = 1usize << axis_exp;
        let cells = cells_per_axis.pow(n as u32);
        if cells > budget {
            return Err(GridError::BudgetExceeded { cells, budget });
        }
        Ok(Domain { n, l, j, shift, cells_per_axis })
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Domain, GridError> {
        Domain::with_shift(spec.n, spec.l, spec.j, Shift::new(spec.shift)?)
    }

    pub fn spec(&self) -> DomainSpec {
        DomainSpec { n: self.n, l: self.l, j: self.j, shift: self.shift.thirds }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Box half-extent exponent L.
    pub fn box_exp(&self) -> i32 {
        self.l
    }

    /// Resolution exponent J (cell side `2^-J`).
    pub fn res_exp(&self) -> u32 {
        self.j
    }

    /// Grid used by default for cube scans on this domain.
    pub fn shift(&self) -> Shift {
        self.shift
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_axis.pow(self.n as u32)
    }

    /// Cell side `h = 2^-J` (exact).
    pub fn cell_side(&self) -> f64 {
        (-(self.j as f64)).exp2()
    }

    /// Cell volume `h^n` (exact).
    pub fn cell_measure(&self) -> f64 {
        (-((self.j as i64 * self.n as i64) as f64)).exp2()
    }

    /// `|box| = 2^{n(L+1)}` (exact).
    pub fn box_measure(&self) -> f64 {
        (((self.l + 1) as i64 * self.n as i64) as f64).exp2()
    }

    pub fn half_extent(&self) -> f64 {
        (self.l as f64).exp2()
    }

    /// Total fine units (h/3 steps) along one axis.
    pub fn axis_units(&self) -> i64 {
        3 * self.cells_per_axis as i64
    }

    /// Smallest cube level (single cell).
    pub fn level_min(&self) -> i32 {
        -(self.j as i32)
    }

    /// Largest cube level (whole box for the unshifted grid).
    pub fn level_max(&self) -> i32 {
        self.l + 1
    }

    #[inline]
    pub fn index(&self, coords: [usize; 2]) -> usize {
        debug_assert!(coords[0] < self.cells_per_axis);
        coords[0] + self.cells_per_axis * coords[1]
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 2] {
        [idx % self.cells_per_axis, idx / self.cells_per_axis]
    }

    /// Cell center (exact dyadic rational in both axes).
    pub fn center(&self, idx: usize) -> [f64; 2] {
        let c = self.coords(idx);
        let h = self.cell_side();
        let lo = -self.half_extent();
        let mut out = [0.0; 2];
        for a in 0..self.n {
            out[a] = lo + (2 * c[a] + 1) as f64 * h / 2.0;
        }
        out
    }

    /// Whole-box root cube of the unshifted grid.
    pub fn box_root(&self) -> DyadicCube {
        DyadicCube { shift: Shift::NONE, level: self.level_max(), pos: [0, 0] }
    }
}

/// Dyadic cube of one (possibly shifted) grid: side `2^level`, corner at
/// `2^level (pos + sigma_level * shift/3)` per axis in corner-relative
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicCube {
    pub shift: Shift,
    pub level: i32,
    pub pos: [i64; 2],
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:k{}:({};{})", self.shift, self.level, self.pos[0], self.pos[1])
    }
}

impl DyadicCube {
    /// Side length `2^level` (exact).
    pub fn side(&self) -> f64 {
        (self.level as f64).exp2()
    }

    /// Measure `|Q| = 2^{n*level}` (exact).
    pub fn measure(&self, dom: &Domain) -> f64 {
        ((self.level as i64 * dom.dim() as i64) as f64).exp2()
    }

    #[inline]
    fn unit_shift(&self, dom: &Domain) -> u32 {
        (self.level + dom.j as i32) as u32
    }

    /// Corner in fine units (h/3 lattice), per axis.
    #[inline]
    pub fn lo_units(&self, dom: &Domain, axis: usize) -> i64 {
        let s = level_sign(self.level) * self.shift.thirds[axis] as i64;
        (3 * self.pos[axis] + s) << self.unit_shift(dom)
    }

    /// Side length in fine units.
    #[inline]
    pub fn side_units(&self, dom: &Domain) -> i64 {
        3i64 << self.unit_shift(dom)
    }

    pub fn in_box(&self, dom: &Domain) -> bool {
        if self.level < dom.level_min() || self.level > dom.level_max() {
            return false;
        }
        let side = self.side_units(dom);
        (0..dom.dim()).all(|a| {
            let lo = self.lo_units(dom, a);
            lo >= 0 && lo + side <= dom.axis_units()
        })
    }

    /// Parent cube (same grid, one level up); may lie outside the box.
    pub fn parent(&self, dom: &Domain) -> Option<DyadicCube> {
        if self.level >= dom.level_max() {
            return None;
        }
        let s = level_sign(self.level);
        let mut pos = [0i64; 2];
        for a in 0..2 {
            pos[a] = (self.pos[a] + s * self.shift.thirds[a] as i64).div_euclid(2);
        }
        Some(DyadicCube { shift: self.shift, level: self.level + 1, pos })
    }

    /// The 2^n children (same grid, one level down). Not clipped to the box.
    pub fn children(&self, dom: &Domain) -> Vec<DyadicCube> {
        if self.level <= dom.level_min() {
            return Vec::new();
        }
        let child_level = self.level - 1;
        let sc = level_sign(child_level);
        let opts = |a: usize| {
            let s = sc * self.shift.thirds[a] as i64;
            [2 * self.pos[a] - s, 2 * self.pos[a] + 1 - s]
        };
        let mut out = Vec::with_capacity(1 << dom.dim());
        match dom.dim() {
            1 => {
                for x in opts(0) {
                    out.push(DyadicCube { shift: self.shift, level: child_level, pos: [x, 0] });
                }
            }
            _ => {
                for y in opts(1) {
                    for x in opts(0) {
                        out.push(DyadicCube { shift: self.shift, level: child_level, pos: [x, y] });
                    }
                }
            }
        }
        out
    }

    pub fn contains_cube(&self, dom: &Domain, other: &DyadicCube) -> bool {
        if self.shift != other.shift || other.level > self.level {
            return false;
        }
        let side = self.side_units(dom);
        let oside = other.side_units(dom);
        (0..dom.dim()).all(|a| {
            let lo = self.lo_units(dom, a);
            let olo = other.lo_units(dom, a);
            olo >= lo && olo + oside <= lo + side
        })
    }

    /// Does the cube contain the center of cell `idx`? Cell centers never lie
    /// on cube boundaries (half-integer vs integer fine units).
    pub fn contains_center(&self, dom: &Domain, idx: usize) -> bool {
        let c = dom.coords(idx);
        let side2 = 2 * self.side_units(dom);
        (0..dom.dim()).all(|a| {
            let lo2 = 2 * self.lo_units(dom, a);
            let x2 = 6 * c[a] as i64 + 3;
            lo2 <= x2 && x2 < lo2 + side2
        })
    }

    /// Inclusive per-axis range of cells whose centers lie in the cube.
    pub fn center_cell_range(&self, dom: &Domain, axis: usize) -> Option<(usize, usize)> {
        let lo2 = 2 * self.lo_units(dom, axis);
        let hi2 = lo2 + 2 * self.side_units(dom);
        // smallest i with 6i + 3 >= lo2; largest i with 6i + 3 < hi2
        let i_min = ceil_div(lo2 - 3, 6).max(0);
        let i_max = (ceil_div(hi2 - 3, 6) - 1).min(dom.cells_per_axis() as i64 - 1);
        if i_min > i_max {
            None
        } else {
            Some((i_min as usize, i_max as usize))
        }
    }

    /// Per-axis overlaps with the unshifted cell partition: `(cell index,
    /// overlap length in fine units)`. The cube must lie inside the box.
    pub fn cell_overlaps(&self, dom: &Domain, axis: usize) -> Vec<(usize, i64)> {
        let lo = self.lo_units(dom, axis);
        let hi = lo + self.side_units(dom);
        debug_assert!(lo >= 0 && hi <= dom.axis_units());
        let first = lo.div_euclid(3);
        let last = (hi - 1).div_euclid(3);
        let mut out = Vec::with_capacity((last - first + 1) as usize);
        for i in first..=last {
            let cell_lo = 3 * i;
            let ov = (hi.min(cell_lo + 3)) - (lo.max(cell_lo));
            out.push((i as usize, ov));
        }
        out
    }

    /// Per-axis start position and count of the cube's own-grid atoms
    /// (its level `-J` descendants).
    pub fn atom_span(&self, dom: &Domain, axis: usize) -> (i64, i64) {
        let lo = self.lo_units(dom, axis);
        let s_atom = level_sign(dom.level_min()) * self.shift.thirds[axis] as i64;
        let start = (lo - s_atom) / 3;
        debug_assert_eq!((lo - s_atom) % 3, 0);
        (start, 1i64 << self.unit_shift(dom))
    }
}

#[inline]
fn ceil_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    (a + b - 1).div_euclid(b)
}

/// The cube of grid `shift` at `level` whose interior contains the center of
/// cell `idx`, or `None` if that cube is clipped away at the box boundary.
pub fn cube_containing_cell(
    dom: &Domain,
    shift: Shift,
    level: i32,
    idx: usize,
) -> Option<DyadicCube> {
    if level < dom.level_min() || level > dom.level_max() {
        return None;
    }
    let c = dom.coords(idx);
    let d = 1i64 << (level + dom.res_exp() as i32 + 1);
    let s = level_sign(level);
    let mut pos = [0i64; 2];
    for a in 0..dom.dim() {
        let x2 = 6 * c[a] as i64 + 3;
        let st = s * shift.thirds[a] as i64;
        pos[a] = (x2 - st * d).div_euclid(3 * d);
    }
    let cube = DyadicCube { shift, level, pos };
    cube.in_box(dom).then_some(cube)
}

/// All cubes of grid `shift` with levels in `[kmin, kmax]` lying inside the
/// box, in level-major (ascending), lexicographic-corner order.
pub fn enumerate_cubes(
    dom: &Domain,
    kmin: i32,
    kmax: i32,
    shift: Shift,
) -> Result<Vec<DyadicCube>, GridError> {
    if kmin < dom.level_min() || kmax > dom.level_max() || kmin > kmax {
        return Err(GridError::LevelRange {
            kmin,
            kmax,
            lo: dom.level_min(),
            hi: dom.level_max(),
        });
    }
    let mut out = Vec::new();
    for k in kmin..=kmax {
        let per_axis = axis_positions(dom, k, shift);
        match dom.dim() {
            1 => {
                for &x in &per_axis[0] {
                    out.push(DyadicCube { shift, level: k, pos: [x, 0] });
                }
            }
            _ => {
                for &y in &per_axis[1] {
                    for &x in &per_axis[0] {
                        out.push(DyadicCube { shift, level: k, pos: [x, y] });
                    }
                }
            }
        }
    }
    Ok(out)
}

fn axis_positions(dom: &Domain, k: i32, shift: Shift) -> [Vec<i64>; 2] {
    let c = (dom.cells_per_axis() >> (k + dom.res_exp() as i32)) as i64;
    let s = level_sign(k);
    let mut out = [Vec::new(), Vec::new()];
    for a in 0..dom.dim() {
        let st = s * shift.thirds[a] as i64;
        let lo = if st < 0 { 1 } else { 0 };
        let hi = c - 1 - if st > 0 { 1 } else { 0 };
        out[a] = (lo..=hi).collect();
    }
    if dom.dim() == 1 {
        out[1] = vec![0];
    }
    out
}

/// All in-box cubes of the domain's own grid, all levels.
pub fn all_cubes(dom: &Domain) -> Vec<DyadicCube> {
    enumerate_cubes(dom, dom.level_min(), dom.level_max(), dom.shift()).expect("full level range")
}

/// In-box cubes of grid `shift` at the highest level that has any.
pub fn top_cubes(dom: &Domain, shift: Shift) -> Vec<DyadicCube> {
    for k in (dom.level_min()..=dom.level_max()).rev() {
        let cubes = enumerate_cubes(dom, k, k, shift).expect("level in range");
        if !cubes.is_empty() {
            return cubes;
        }
    }
    Vec::new()
}

// ---------------------------------------------------------------------------
// Grid functions

/// Cell-constant real function on a domain's (unshifted) cell partition.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<S: Scalar> {
    domain: Domain,
    values: Vec<S>,
}

impl<S: Scalar> GridFunction<S> {
    pub fn from_values(domain: Domain, values: Vec<S>) -> Result<Self, GridError> {
        if values.len() != domain.cell_count() {
            return Err(GridError::ValueCount {
                expected: domain.cell_count(),
                found: values.len(),
            });
        }
        Ok(GridFunction { domain, values })
    }

    pub fn constant(domain: Domain, c: S) -> Self {
        GridFunction { domain, values: vec![c; domain.cell_count()] }
    }

    /// Sample an expression at every cell center.
    pub fn sample(expr: &Expression, domain: Domain) -> Result<Self, GridError> {
        assert_eq!(expr.dimension(), domain.dim(), "expression dimension mismatch");
        let mut values = Vec::with_capacity(domain.cell_count());
        for idx in 0..domain.cell_count() {
            let center = domain.center(idx);
            let v = expr
                .eval(&center[..domain.dim()])
                .map_err(|source| GridError::Sample { cell: idx, center, source })?;
            values.push(cast(v));
        }
        Ok(GridFunction { domain, values })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        GridFunction {
            domain: self.domain,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(S, S) -> S) -> Self {
        assert_eq!(self.domain, other.domain, "domain mismatch");
        GridFunction {
            domain: self.domain,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn abs(&self) -> Self {
        self.map(|v| v.abs())
    }

    pub fn scale(&self, c: S) -> Self {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn sup_norm(&self) -> S {
        self.values.iter().fold(S::zero(), |m, &v| m.max(v.abs()))
    }

    /// `sum_cells value * h^n` in the fixed pairwise order.
    pub fn integrate(&self) -> S {
        let hn: S = cast(self.domain.cell_measure());
        pairwise_map_sum(self.values.len(), |i| self.values[i]) * hn
    }

    /// Exact average over a cube (overlap-weighted for shifted cubes).
    pub fn cube_average(&self, cube: &DyadicCube) -> Result<S, GridError> {
        if !cube.in_box(&self.domain) {
            return Err(GridError::CubeOutsideDomain { cube: *cube });
        }
        let dom = &self.domain;
        let ox = cube.cell_overlaps(dom, 0);
        let total: S = match dom.dim() {
            1 => {
                let s = pairwise_map_sum(ox.len(), |i| {
                    let (cell, u) = ox[i];
                    self.values[cell] * cast_i64(u)
                });
                s
            }
            _ => {
                let oy = cube.cell_overlaps(dom, 1);
                let nx = ox.len();
                pairwise_map_sum(nx * oy.len(), |t| {
                    let (cy, uy) = oy[t / nx];
                    let (cx, ux) = ox[t % nx];
                    self.values[dom.index([cx, cy])] * cast_i64(ux * uy)
                })
            }
        };
        let units_total = cube
            .side_units(dom)
            .pow(dom.dim() as u32);
        Ok(total / cast_i64(units_total))
    }

    /// Exact integral over a cube: `average * |Q|`.
    pub fn integral_over(&self, cube: &DyadicCube) -> Result<S, GridError> {
        Ok(self.cube_average(cube)? * cast(cube.measure(&self.domain)))
    }
}

// ---------------------------------------------------------------------------
// CSV dump/load with JSON sidecar

/// Write `k,i[,j],value` rows; `k` is the cell level `-J`.
pub fn dump_csv<S: Scalar, W: IoWrite>(f: &GridFunction<S>, out: &mut W) -> std::io::Result<()> {
    let dom = f.domain();
    if dom.dim() == 1 {
        writeln!(out, "k,i,value")?;
        for (idx, v) in f.values().iter().enumerate() {
            writeln!(out, "{},{},{}", dom.level_min(), idx, v)?;
        }
    } else {
        writeln!(out, "k,i,j,value")?;
        for (idx, v) in f.values().iter().enumerate() {
            let c = dom.coords(idx);
            writeln!(out, "{},{},{},{}", dom.level_min(), c[0], c[1], v)?;
        }
    }
    Ok(())
}

/// Read a dump produced by [`dump_csv`] for the given domain.
pub fn load_csv<S: Scalar, R: BufRead>(dom: Domain, input: R) -> Result<GridFunction<S>, GridError>
where
    <S as std::str::FromStr>::Err: fmt::Debug,
{
    let mut values = vec![S::zero(); dom.cell_count()];
    let mut seen = 0usize;
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| GridError::Io(e.to_string()))?;
        if lineno == 0 {
            continue; // header
        }
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let want = 2 + dom.dim();
        if parts.len() != want {
            return Err(GridError::Io(format!(
                "line {}: expected {} fields, found {}",
                lineno + 1,
                want,
                parts.len()
            )));
        }
        let mut coords = [0usize; 2];
        for a in 0..dom.dim() {
            coords[a] = parts[1 + a]
                .parse()
                .map_err(|_| GridError::Io(format!("line {}: bad coordinate", lineno + 1)))?;
            if coords[a] >= dom.cells_per_axis() {
                return Err(GridError::Io(format!("line {}: coordinate out of range", lineno + 1)));
            }
        }
        let v: S = parts[want - 1]
            .parse()
            .map_err(|e| GridError::Io(format!("line {}: bad value ({e:?})", lineno + 1)))?;
        values[dom.index(coords)] = v;
        seen += 1;
    }
    if seen != dom.cell_count() {
        return Err(GridError::Io(format!(
            "expected {} value rows, found {seen}",
            dom.cell_count()
        )));
    }
    GridFunction::from_values(dom, values)
}

/// Write `path.csv` plus `path.json` carrying the domain parameters.
pub fn dump_with_sidecar<S: Scalar>(
    f: &GridFunction<S>,
    path: &std::path::Path,
) -> Result<(), GridError> {
    let mut csv = Vec::new();
    dump_csv(f, &mut csv).map_err(|e| GridError::Io(e.to_string()))?;
    std::fs::write(path, csv).map_err(|e| GridError::Io(e.to_string()))?;
    let sidecar = path.with_extension("json");
    let spec =
        serde_json::to_string_pretty(&f.domain().spec()).map_err(|e| GridError::Io(e.to_string()))?;
    std::fs::write(sidecar, spec).map_err(|e| GridError::Io(e.to_string()))?;
    Ok(())
}

/// Load a grid function dumped by [`dump_with_sidecar`].
pub fn load_with_sidecar<S: Scalar>(path: &std::path::Path) -> Result<GridFunction<S>, GridError>
where
    <S as std::str::FromStr>::Err: fmt::Debug,
{
    let sidecar = path.with_extension("json");
    let raw = std::fs::read_to_string(sidecar).map_err(|e| GridError::Io(e.to_string()))?;
    let spec: DomainSpec = serde_json::from_str(&raw).map_err(|e| GridError::Io(e.to_string()))?;
    let dom = Domain::from_spec(&spec)?;
    let file = std::fs::File::open(path).map_err(|e| GridError::Io(e.to_string()))?;
    load_csv(dom, std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expression;
    use proptest::prelude::*;

    fn dom1(l: i32, j: u32) -> Domain {
        Domain::new(1, l, j).unwrap()
    }

    #[test]
    fn cell_count_and_side_are_exact() {
        let d = dom1(0, 3);
        assert_eq!(d.cell_count(), 16);
        assert_eq!(d.cell_side() * d.cells_per_axis() as f64, 2.0);
        let d2 = Domain::new(2, 1, 2).unwrap();
        assert_eq!(d2.cell_count(), 256);
    }

    #[test]
    fn unit_measure_domain() {
        let d = dom1(-1, 3);
        assert_eq!(d.box_measure(), 1.0);
        assert_eq!(d.half_extent(), 0.5);
        let one = GridFunction::<f64>::constant(d, 1.0);
        assert_eq!(one.integrate(), 1.0);
    }

    #[test]
    fn sample_cell_centers() {
        let d = dom1(0, 1);
        let f = GridFunction::<f64>::sample(&Expression::parse("x1", 1).unwrap(), d).unwrap();
        assert_eq!(f.values(), &[-0.75, -0.25, 0.25, 0.75]);
        let c = GridFunction::<f64>::sample(&Expression::parse("1", 1).unwrap(), d).unwrap();
        assert!(c.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn centers_avoid_zero_singularity() {
        let d = dom1(0, 4);
        let f =
            GridFunction::<f64>::sample(&Expression::parse("abs(x1)^(-0.5)", 1).unwrap(), d)
                .unwrap();
        assert!(f.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn integrate_exact_cases() {
        let d = dom1(0, 3);
        let one = GridFunction::<f64>::constant(d, 1.0);
        assert_eq!(one.integrate(), 2.0);

        // chi_[0,1): cell-aligned step
        let vals: Vec<f64> =
            (0..d.cell_count()).map(|i| if d.center(i)[0] > 0.0 { 1.0 } else { 0.0 }).collect();
        let chi = GridFunction::from_values(d, vals).unwrap();
        assert_eq!(chi.integrate(), 1.0);

        let x = GridFunction::<f64>::sample(&Expression::parse("x1", 1).unwrap(), d).unwrap();
        assert_eq!(x.integrate(), 0.0);
    }

    #[test]
    fn cube_average_examples() {
        let d = dom1(0, 4);
        let c = GridFunction::<f64>::constant(d, 2.5);
        let root = d.box_root();
        assert_eq!(c.cube_average(&root).unwrap(), 2.5);

        // Q = [0,1): level 0, pos 1; chi on its left half averages 0.5.
        let q = DyadicCube { shift: Shift::NONE, level: 0, pos: [1, 0] };
        let vals: Vec<f64> = (0..d.cell_count())
            .map(|i| {
                let x = d.center(i)[0];
                if (0.0..0.5).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let f = GridFunction::from_values(d, vals).unwrap();
        assert_eq!(f.cube_average(&q).unwrap(), 0.5);

        // f = x1 on Q = [0,1): mean of centers = 0.5.
        let x = GridFunction::<f64>::sample(&Expression::parse("x1", 1).unwrap(), d).unwrap();
        assert!((x.cube_average(&q).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn enumerate_counts() {
        let d = dom1(0, 2);
        let cubes = enumerate_cubes(&d, -2, 1, Shift::NONE).unwrap();
        assert_eq!(cubes.len(), 15); // 8 + 4 + 2 + 1
        let root_only = enumerate_cubes(&d, 1, 1, Shift::NONE).unwrap();
        assert_eq!(root_only.len(), 1);
        assert_eq!(root_only[0], d.box_root());
        assert!(enumerate_cubes(&d, -3, 1, Shift::NONE).is_err());
    }

    #[test]
    fn enumerate_shifted_clips_boundary_cubes() {
        let d = dom1(0, 2);
        let shift = Shift::new([1, 0]).unwrap();
        let cubes = enumerate_cubes(&d, -2, 1, shift).unwrap();
        // per level: 7, 3, 1, 0 (direct enumeration)
        assert_eq!(cubes.len(), 11);
        for c in &cubes {
            assert!(c.in_box(&d));
        }
        // level 1 is fully clipped for the shifted grid
        assert!(enumerate_cubes(&d, 1, 1, shift).unwrap().is_empty());
        assert_eq!(top_cubes(&d, shift).len(), 1);
    }

    #[test]
    fn shifted_cubes_nest() {
        let d = dom1(1, 4);
        for shift in Shift::all(1) {
            for k in (d.level_min()..=d.level_max()).rev() {
                for q in enumerate_cubes(&d, k, k, shift).unwrap() {
                    for ch in q.children(&d) {
                        assert!(
                            q.contains_cube(&d, &ch),
                            "child {ch} not inside parent {q} (shift {shift})"
                        );
                        assert_eq!(ch.parent(&d).unwrap(), q);
                    }
                }
            }
        }
    }

    #[test]
    fn children_partition_parent_cells() {
        let d = Domain::new(2, 0, 2).unwrap();
        for q in all_cubes(&d) {
            if q.level == d.level_min() {
                continue;
            }
            let mut covered = vec![false; d.cell_count()];
            for ch in q.children(&d) {
                assert!(ch.in_box(&d));
                for idx in 0..d.cell_count() {
                    if ch.contains_center(&d, idx) {
                        assert!(!covered[idx], "cell covered twice");
                        covered[idx] = true;
                    }
                }
            }
            for idx in 0..d.cell_count() {
                assert_eq!(covered[idx], q.contains_center(&d, idx));
            }
        }
    }

    #[test]
    fn average_of_averages() {
        let d = dom1(0, 5);
        let f = GridFunction::<f64>::sample(
            &Expression::parse("sin(3*x1) + x1^2", 1).unwrap(),
            d,
        )
        .unwrap();
        for q in all_cubes(&d) {
            if q.level == d.level_min() {
                continue;
            }
            let direct = f.cube_average(&q).unwrap();
            let children = q.children(&d);
            let via: f64 = children
                .iter()
                .map(|c| f.cube_average(c).unwrap() * c.measure(&d) / q.measure(&d))
                .sum();
            assert!((direct - via).abs() <= 1e-14 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn shifted_cube_average_is_exact_overlap() {
        // J=2, shift 1/3: atom [1/3*h-grid] overlap arithmetic against a
        // hand-computed average.
        let d = dom1(0, 1); // cells [-1,-.5) [-.5,0) [0,.5) [.5,1)
        let f = GridFunction::from_values(d, vec![1.0, 2.0, 4.0, 8.0]).unwrap();
        let shift = Shift::new([1, 0]).unwrap();
        // level -1 cubes (sigma = -1): corner (3m - 1) * 2^0 units, side 3 units
        // m=1: units [2, 5) = physical [-1 + 2/6, -1 + 5/6) = [-2/3, -1/6)
        let q = DyadicCube { shift, level: -1, pos: [1, 0] };
        assert!(q.in_box(&d));
        // overlap: cell0 ([0,3) units) gets 1 unit, cell1 ([3,6) units) 2 units
        let want = (1.0 * 1.0 + 2.0 * 2.0) / 3.0;
        assert_eq!(f.cube_average(&q).unwrap(), want);
    }

    #[test]
    fn cube_containing_cell_matches_scan() {
        let d = dom1(1, 3);
        for shift in Shift::all(1) {
            for k in d.level_min()..=d.level_max() {
                let cubes = enumerate_cubes(&d, k, k, shift).unwrap();
                for idx in 0..d.cell_count() {
                    let direct = cube_containing_cell(&d, shift, k, idx);
                    let scanned = cubes.iter().find(|q| q.contains_center(&d, idx)).copied();
                    assert_eq!(direct, scanned);
                }
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = Domain::new(2, 0, 2).unwrap();
        let f = GridFunction::<f64>::sample(
            &Expression::parse("x1*x2 + 0.125", 2).unwrap(),
            d,
        )
        .unwrap();
        let path = dir.path().join("f.csv");
        dump_with_sidecar(&f, &path).unwrap();
        let g: GridFunction<f64> = load_with_sidecar(&path).unwrap();
        assert_eq!(f, g);
    }

    proptest! {
        #[test]
        fn integrate_additive(seed in 0u64..1000) {
            let d = dom1(0, 4);
            let mut a = Vec::new();
            let mut b = Vec::new();
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
            for _ in 0..d.cell_count() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                a.push(((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0);
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                b.push(((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0);
            }
            let fa = GridFunction::from_values(d, a.clone()).unwrap();
            let fb = GridFunction::from_values(d, b.clone()).unwrap();
            let fsum = fa.add(&fb);
            let lhs = fsum.integrate();
            let rhs = fa.integrate() + fb.integrate();
            let scale = 1.0f64.max(lhs.abs());
            prop_assert!((lhs - rhs).abs() <= 1e-13 * scale);
        }
    }
}
