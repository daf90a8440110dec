//! Sparse families of dyadic cubes and the sparse operators they generate.
//!
//! Families are built by stopping-time decompositions (averages for the
//! Calderon-Zygmund construction, mean oscillations for the augmentation
//! step) and verified by exact integer atom counting in the family's own
//! grid. The stopping comparison for the average construction is `>=` so
//! that exact dyadic threshold hits join the family; the oscillation
//! stopping is strict so constant symbols add nothing.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponent::ExponentFunction;
use crate::gphi::{GPhiFunction, NormError};
use crate::grid::{Domain, DyadicCube, GridError, GridFunction, Shift};
use crate::scalar::{cast, Scalar};
use crate::weights::{CubeFunctional, Weight, WeightError};

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("input function must be nonnegative (cell {cell} has {value})")]
    NegativeInput { cell: usize, value: f64 },
    #[error("input function vanishes identically on the root cube")]
    ZeroOnRoot,
    #[error("stopping threshold must be >= 2, got {0}")]
    ThresholdTooSmall(f64),
    #[error("family mixes cubes from different grids")]
    MixedGrids,
    #[error("cube {cube} lies outside the domain box")]
    CubeOutside { cube: DyadicCube },
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
    #[error("malformed family JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

/// A set of dyadic cubes of one grid, in canonical order (level descending,
/// then lexicographic position).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFamily {
    shift: Shift,
    cubes: Vec<DyadicCube>,
}

fn canonical_order(a: &DyadicCube, b: &DyadicCube) -> std::cmp::Ordering {
    b.level.cmp(&a.level).then(a.pos.cmp(&b.pos))
}

impl SparseFamily {
    /// Build from a cube list; duplicates are kept (verification reports
    /// them as an overlap failure).
    pub fn new(dom: &Domain, cubes: Vec<DyadicCube>) -> Result<Self, SparseError> {
        if cubes.is_empty() {
            return Err(SparseError::InvalidArgs("family must be nonempty".into()));
        }
        let shift = cubes[0].shift;
        for q in &cubes {
            if q.shift != shift {
                return Err(SparseError::MixedGrids);
            }
            if !q.in_box(dom) {
                return Err(SparseError::CubeOutside { cube: *q });
            }
        }
        let mut cubes = cubes;
        cubes.sort_by(canonical_order);
        Ok(SparseFamily { shift, cubes })
    }

    pub fn shift(&self) -> Shift {
        self.shift
    }

    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn contains(&self, q: &DyadicCube) -> bool {
        self.cubes.iter().any(|c| c == q)
    }

    pub fn to_json(&self) -> String {
        let dto = FamilyDto {
            shift: self.shift.thirds,
            cubes: self.cubes.iter().map(|q| (q.level, q.pos[0], q.pos[1])).collect(),
        };
        serde_json::to_string_pretty(&dto).expect("family serialization")
    }

    pub fn from_json(dom: &Domain, raw: &str) -> Result<Self, SparseError> {
        let dto: FamilyDto = serde_json::from_str(raw).map_err(|e| SparseError::Json(e.to_string()))?;
        let shift = Shift::new(dto.shift)?;
        let cubes = dto
            .cubes
            .into_iter()
            .map(|(level, x, y)| DyadicCube { shift, level, pos: [x, y] })
            .collect();
        SparseFamily::new(dom, cubes)
    }
}

#[derive(Serialize, Deserialize)]
struct FamilyDto {
    shift: [u8; 2],
    cubes: Vec<(i32, i64, i64)>,
}

// ---------------------------------------------------------------------------
// Construction

/// Stopping-time decomposition of a nonnegative `f` under the given root:
/// the family children of `Q` are the maximal dyadic `P` inside `Q` with
/// `<f>_P >= threshold <f>_Q`; recursion stops at single-atom cubes.
///
/// With `threshold >= 2` the output is 1/2-sparse by the mass-counting
/// argument.
pub fn cz_decompose<S: Scalar>(
    f: &GridFunction<S>,
    root: DyadicCube,
    threshold: f64,
) -> Result<SparseFamily, SparseError> {
    let dom = *f.domain();
    if threshold < 2.0 {
        return Err(SparseError::ThresholdTooSmall(threshold));
    }
    if !root.in_box(&dom) {
        return Err(SparseError::CubeOutside { cube: root });
    }
    for (cell, &v) in f.values().iter().enumerate() {
        if v < S::zero() {
            return Err(SparseError::NegativeInput {
                cell,
                value: v.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    if f.cube_average(&root)? <= S::zero() {
        return Err(SparseError::ZeroOnRoot);
    }
    let thr: S = cast(threshold);
    let mut cubes = vec![root];
    let mut queue = VecDeque::from([root]);
    while let Some(q) = queue.pop_front() {
        if q.level <= dom.level_min() {
            continue;
        }
        let cutoff = thr * f.cube_average(&q)?;
        let mut stack: Vec<DyadicCube> = q.children(&dom);
        while let Some(c) = stack.pop() {
            if f.cube_average(&c)? >= cutoff {
                cubes.push(c);
                queue.push_back(c);
            } else if c.level > dom.level_min() {
                stack.extend(c.children(&dom));
            }
        }
    }
    SparseFamily::new(&dom, cubes)
}

/// Enlarge a family by mean-oscillation stopping: for each cube `Q` in the
/// queue the new members are the maximal `R` inside `Q` with
/// `<|b - b_Q|>_R > factor <|b - b_Q|>_Q` (strict). The output contains the
/// input.
pub fn augment_by_oscillation<S: Scalar>(
    family: &SparseFamily,
    b: &GridFunction<S>,
    factor: f64,
) -> Result<SparseFamily, SparseError> {
    let dom = *b.domain();
    let fac: S = cast(factor);
    let mut members: HashSet<DyadicCube> = family.cubes.iter().copied().collect();
    let mut order: Vec<DyadicCube> = family.cubes.clone();
    let mut queue: VecDeque<DyadicCube> = family.cubes.iter().copied().collect();
    while let Some(q) = queue.pop_front() {
        if q.level <= dom.level_min() {
            continue;
        }
        let bq = b.cube_average(&q)?;
        let osc = b.map(|v| (v - bq).abs());
        let base = osc.cube_average(&q)?;
        if base <= S::zero() {
            continue;
        }
        let cutoff = fac * base;
        let mut stack: Vec<DyadicCube> = q.children(&dom);
        while let Some(c) = stack.pop() {
            if osc.cube_average(&c)? > cutoff {
                if members.insert(c) {
                    order.push(c);
                    queue.push_back(c);
                }
            } else if c.level > dom.level_min() {
                stack.extend(c.children(&dom));
            }
        }
    }
    SparseFamily::new(&dom, order)
}

// ---------------------------------------------------------------------------
// Verification

/// Exact sparsity report: atom counts of the disjointness sets, minimal
/// ratio as an integer fraction, and a direct pairwise-disjointness check.
#[derive(Debug, Clone)]
pub struct SparsityReport {
    /// per-entry `(|E(Q)| atoms, |Q| atoms)` in canonical order
    pub portions: Vec<(u64, u64)>,
    pub min_ratio_num: u64,
    pub min_ratio_den: u64,
    pub disjoint: bool,
}

impl SparsityReport {
    pub fn min_ratio(&self) -> f64 {
        self.min_ratio_num as f64 / self.min_ratio_den as f64
    }

    /// `|E(Q)| >= |Q| / 2` for every cube, by integer comparison.
    pub fn half_sparse(&self) -> bool {
        self.portions.iter().all(|&(e, q)| 2 * e >= q)
    }
}

struct AtomUniverse {
    start: [i64; 2],
    count: [usize; 2],
}

fn atom_universe(dom: &Domain, shift: Shift) -> AtomUniverse {
    let kmin = dom.level_min();
    let sign = if kmin.rem_euclid(2) == 0 { 1i64 } else { -1 };
    let mut start = [0i64; 2];
    let mut count = [1usize; 2];
    for a in 0..dom.dim() {
        let st = sign * shift.thirds[a] as i64;
        start[a] = if st < 0 { 1 } else { 0 };
        count[a] =
            if st == 0 { dom.cells_per_axis() } else { dom.cells_per_axis() - 1 };
    }
    AtomUniverse { start, count }
}

struct BitMask {
    words: Vec<u64>,
}

impl BitMask {
    fn new(bits: usize) -> Self {
        BitMask { words: vec![0; bits.div_ceil(64)] }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    fn subtract(&mut self, other: &BitMask) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    fn intersects(&self, other: &BitMask) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    fn or_into(&self, acc: &mut BitMask) {
        for (a, b) in acc.words.iter_mut().zip(&self.words) {
            *a |= b;
        }
    }
}

fn cube_mask(dom: &Domain, uni: &AtomUniverse, q: &DyadicCube) -> BitMask {
    let total = uni.count[0] * uni.count[1];
    let mut mask = BitMask::new(total);
    let (sx, len_x) = q.atom_span(dom, 0);
    let ix0 = (sx - uni.start[0]) as usize;
    match dom.dim() {
        1 => {
            for i in 0..len_x as usize {
                mask.set(ix0 + i);
            }
        }
        _ => {
            let (sy, len_y) = q.atom_span(dom, 1);
            let iy0 = (sy - uni.start[1]) as usize;
            for dy in 0..len_y as usize {
                let row = (iy0 + dy) * uni.count[0] + ix0;
                for dx in 0..len_x as usize {
                    mask.set(row + dx);
                }
            }
        }
    }
    mask
}

/// Compute every `E(Q) = Q` minus the union of strictly smaller family
/// cubes, exactly, and check the disjointness property directly.
pub fn sparsity_report(family: &SparseFamily, dom: &Domain) -> Result<SparsityReport, SparseError> {
    let uni = atom_universe(dom, family.shift);
    let n = family.cubes.len();
    let cube_masks: Vec<BitMask> =
        family.cubes.iter().map(|q| cube_mask(dom, &uni, q)).collect();
    let mut portions = Vec::with_capacity(n);
    let mut e_masks = Vec::with_capacity(n);
    for (i, q) in family.cubes.iter().enumerate() {
        let mut e = cube_mask(dom, &uni, q);
        for (j, p) in family.cubes.iter().enumerate() {
            if i != j && p != q && q.contains_cube(dom, p) {
                e.subtract(&cube_masks[j]);
            }
        }
        let q_atoms = (q.side_units(dom) / 3).pow(dom.dim() as u32) as u64;
        portions.push((e.count(), q_atoms));
        e_masks.push(e);
    }
    // pairwise disjoint iff the union count equals the sum of counts
    let total = uni.count[0] * uni.count[1];
    let mut acc = BitMask::new(total);
    let mut disjoint = true;
    for e in &e_masks {
        if e.intersects(&acc) {
            disjoint = false;
            break;
        }
        e.or_into(&mut acc);
    }
    let (mut num, mut den) = (1u64, 1u64);
    for &(e, q) in &portions {
        // keep the minimal fraction e/q
        if (e as u128) * (den as u128) < (num as u128) * (q as u128) {
            num = e;
            den = q;
        }
    }
    Ok(SparsityReport { portions, min_ratio_num: num, min_ratio_den: den, disjoint })
}

// ---------------------------------------------------------------------------
// Operators

fn for_cells_in<S: Scalar>(
    dom: &Domain,
    q: &DyadicCube,
    out: &mut [S],
    mut add: impl FnMut(usize) -> S,
) {
    let (x0, x1) = match q.center_cell_range(dom, 0) {
        Some(r) => r,
        None => return,
    };
    match dom.dim() {
        1 => {
            for i in x0..=x1 {
                out[i] = out[i] + add(i);
            }
        }
        _ => {
            let (y0, y1) = match q.center_cell_range(dom, 1) {
                Some(r) => r,
                None => return,
            };
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let i = dom.index([x, y]);
                    out[i] = out[i] + add(i);
                }
            }
        }
    }
}

/// Averaging operator `sum_Q f_Q chi_Q`.
pub fn sparse_avg<S: Scalar>(
    family: &SparseFamily,
    f: &GridFunction<S>,
) -> Result<GridFunction<S>, SparseError> {
    let dom = *f.domain();
    let mut out = vec![S::zero(); dom.cell_count()];
    for q in &family.cubes {
        let fq = f.cube_average(q)?;
        for_cells_in(&dom, q, &mut out, |_| fq);
    }
    Ok(GridFunction::from_values(dom, out)?)
}

/// Oscillation-weighted fractional sparse operator
/// `sum_Q |b(x)-b_Q|^{m-h} |Q|^{alpha/n} <|(b-b_Q)^h f|>_Q chi_Q(x)`.
pub fn sparse_osc<S: Scalar>(
    family: &SparseFamily,
    b: &GridFunction<S>,
    f: &GridFunction<S>,
    m: u32,
    h: u32,
    alpha: f64,
) -> Result<GridFunction<S>, SparseError> {
    let dom = *f.domain();
    if h > m {
        return Err(SparseError::InvalidArgs(format!("h = {h} exceeds m = {m}")));
    }
    if !(0.0..dom.dim() as f64).contains(&alpha) {
        return Err(SparseError::InvalidArgs(format!("alpha = {alpha} outside [0, n)")));
    }
    let mut out = vec![S::zero(); dom.cell_count()];
    let outer = (m - h) as i32;
    for q in &family.cubes {
        let bq = b.cube_average(q)?;
        let inner = b
            .zip(f, |bv, fv| ((bv - bq).powi(h as i32) * fv).abs())
            .cube_average(q)?;
        let meas: S = (cast::<S>(q.level as f64) * cast(alpha)).exp2();
        let bvals = b.values();
        for_cells_in(&dom, q, &mut out, |i| {
            (bvals[i] - bq).abs().powi(outer) * meas * inner
        });
    }
    Ok(GridFunction::from_values(dom, out)?)
}

/// Variable fractional sparse operator `sum_Q ||chi_Q||_{beta} f_Q chi_Q`.
pub fn sparse_frac_norm<S: Scalar>(
    family: &SparseFamily,
    beta: &ExponentFunction<S>,
    f: &GridFunction<S>,
) -> Result<GridFunction<S>, SparseError> {
    let dom = *f.domain();
    let psi = GPhiFunction::power(beta.clone()).map_err(WeightError::from)?;
    let mut out = vec![S::zero(); dom.cell_count()];
    for q in &family.cubes {
        let norm = psi.indicator_norm(&dom, q)?;
        let fq = f.cube_average(q)?;
        for_cells_in(&dom, q, &mut out, |_| norm * fq);
    }
    Ok(GridFunction::from_values(dom, out)?)
}

/// `k`-fold iterate of the weighted averaging operator
/// `g -> eta * (A_S g)`; `k = 0` is the identity.
pub fn weighted_avg_iter<S: Scalar>(
    family: &SparseFamily,
    eta: &Weight<S>,
    f: &GridFunction<S>,
    k: u32,
) -> Result<GridFunction<S>, SparseError> {
    let mut g = f.clone();
    for _ in 0..k {
        g = eta.grid().mul(&sparse_avg(family, &g)?);
    }
    Ok(g)
}

/// Fitted constant of the pointwise oscillation bound over an augmented
/// family: `max |b(x) - b_Q| / sum_{R in S, R ⊆ Q, x in R} <|b - b_R|>_R`
/// (0/0 cells skipped).
pub fn oscillation_bound_constant<S: Scalar>(
    family: &SparseFamily,
    b: &GridFunction<S>,
) -> Result<S, SparseError> {
    let dom = *b.domain();
    let osc_avgs: Vec<S> = family
        .cubes
        .iter()
        .map(|r| {
            let br = b.cube_average(r)?;
            b.map(|v| (v - br).abs()).cube_average(r)
        })
        .collect::<Result<_, _>>()?;
    let mut worst = S::zero();
    for q in &family.cubes {
        let bq = b.cube_average(q)?;
        let mut denom = vec![S::zero(); dom.cell_count()];
        for (r, &avg) in family.cubes.iter().zip(&osc_avgs) {
            if q.contains_cube(&dom, r) {
                for_cells_in(&dom, r, &mut denom, |_| avg);
            }
        }
        let (x0, x1) = q.center_cell_range(&dom, 0).expect("cube in box");
        let (y0, y1) = if dom.dim() == 2 {
            q.center_cell_range(&dom, 1).expect("cube in box")
        } else {
            (0, 0)
        };
        for y in y0..=y1 {
            for x in x0..=x1 {
                let i = if dom.dim() == 1 { x } else { dom.index([x, y]) };
                let num = (b.values()[i] - bq).abs();
                if denom[i] > S::zero() {
                    worst = worst.max(num / denom[i]);
                } else if num > S::zero() {
                    return Ok(S::infinity());
                }
            }
        }
    }
    Ok(worst)
}

/// Report of the iterated-average integral bound.
#[derive(Debug)]
pub struct IterBoundReport<S: Scalar> {
    /// fitted constant: max over augmented cubes of LHS / RHS
    pub constant: S,
    pub augmented: SparseFamily,
    pub bmo_norm: S,
}

/// Check `int_Q |b-b_Q|^k |f| <= C ||b||^k ||chi_Q||_{n/delta}^k
/// int_Q (A)^k_eta f` over the oscillation augmentation of the family.
pub fn iterated_bound_constant<S: Scalar>(
    family: &SparseFamily,
    b: &GridFunction<S>,
    eta: &Weight<S>,
    delta: &ExponentFunction<S>,
    f: &GridFunction<S>,
    k: u32,
    bmo_scan: &[DyadicCube],
) -> Result<IterBoundReport<S>, SparseError> {
    let dom = *f.domain();
    let augmented = augment_by_oscillation(family, b, 2.0)?;
    let bmo = crate::weights::weighted_bmo_norm(b, eta, delta, bmo_scan)?.value;
    let gain = CubeFunctional::var_norm(delta)?;
    let f_abs = f.abs();
    let iter = weighted_avg_iter(&augmented, eta, &f_abs, k)?;
    let mut worst = S::zero();
    for q in &augmented.cubes {
        let bq = b.cube_average(q)?;
        let lhs = b
            .zip(&f_abs, |bv, fv| (bv - bq).abs().powi(k as i32) * fv)
            .integral_over(q)?;
        let rhs = bmo.powi(k as i32)
            * gain.eval(&dom, q)?.powi(k as i32)
            * iter.integral_over(q)?;
        if rhs > S::zero() {
            worst = worst.max(lhs / rhs);
        } else if lhs > S::zero() {
            return Ok(IterBoundReport { constant: S::infinity(), augmented, bmo_norm: bmo });
        }
    }
    Ok(IterBoundReport { constant: worst, augmented, bmo_norm: bmo })
}
