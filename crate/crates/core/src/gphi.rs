//! Generalized Phi-functions, modulars, Luxemburg norms, conjugates,
//! generalized inverses and the three-part norm-compatibility check.
//!
//! Families are closed-form tagged variants. Conjugates of power families
//! are stored exactly (a scaled power); everything else falls back to a
//! per-cell numeric table built by golden-section maximization of
//! `t |-> t u - Psi(x, t)` (concave in `t`, hence unimodal under the log
//! reparametrization). Numeric tables are deduplicated across cells with
//! identical parameters, and evaluation between nodes is piecewise linear,
//! which preserves convexity and monotonicity.

use std::collections::HashMap;

use thiserror::Error;

use crate::exponent::{ExponentFunction, ExponentError};
use crate::grid::{Domain, DyadicCube, GridFunction};
use crate::scalar::{cast, cast_i64, pairwise_map_sum, Scalar};

/// Relative bracket width for norm and inverse bisections.
pub const NORM_REL_TOL: f64 = 1e-11;
/// Absolute log-domain tolerance of the numeric Legendre transform.
pub const LEGENDRE_TOL: f64 = 1e-8;
/// Nodes in numeric conjugate tables.
pub const CONJUGATE_U_POINTS: usize = 512;

#[derive(Debug, Error)]
pub enum NormError {
    #[error("norm bisection did not converge after {iters} bracket expansions")]
    NonConvergence { iters: usize },
    #[error("degenerate norm {value} on cube {cube}")]
    DegenerateNorm { cube: DyadicCube, value: f64 },
    #[error(transparent)]
    Exponent(#[from] ExponentError),
}

/// Numeric generalized Phi-function: values on a shared ascending `u` grid,
/// one row per distinct parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericGPhi<S: Scalar> {
    u_grid: Vec<S>,
    /// Row per cell; `None` means a single row shared by all cells.
    row_of_cell: Option<Vec<u32>>,
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> NumericGPhi<S> {
    pub fn uniform(u_grid: Vec<S>, values: Vec<S>) -> Self {
        assert_eq!(u_grid.len(), values.len());
        assert!(u_grid.windows(2).all(|w| w[0] < w[1]), "grid must ascend");
        NumericGPhi { u_grid, row_of_cell: None, rows: vec![values] }
    }

    pub fn u_grid(&self) -> &[S] {
        &self.u_grid
    }

    fn row(&self, cell: usize) -> &[S] {
        match &self.row_of_cell {
            None => &self.rows[0],
            Some(map) => &self.rows[map[cell] as usize],
        }
    }

    fn eval(&self, cell: usize, t: S) -> S {
        let row = self.row(cell);
        let g = &self.u_grid;
        if t <= S::zero() {
            return S::zero();
        }
        if t <= g[0] {
            return row[0] * t / g[0];
        }
        let last = g.len() - 1;
        if t >= g[last] {
            let slope = (row[last] - row[last - 1]) / (g[last] - g[last - 1]);
            return row[last] + slope * (t - g[last]);
        }
        let mut lo = 0usize;
        let mut hi = last;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if g[mid] <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = (t - g[lo]) / (g[hi] - g[lo]);
        row[lo] + w * (row[hi] - row[lo])
    }
}

/// Tagged closed-form family of generalized Phi-functions.
#[derive(Debug, Clone, PartialEq)]
pub enum GPhiFunction<S: Scalar> {
    /// `Psi(x,t) = t^{p(x)}`, with the essential-sup branch where `p = inf`.
    Power { p: ExponentFunction<S> },
    /// `Psi(x,t) = c(x) t^{p(x)}` (exact conjugates of the power family).
    ScaledPower { p: ExponentFunction<S>, coeff: GridFunction<S> },
    /// `Psi(x,t) = t^{p(x)} (log(e+t))^{q(x)}`.
    PowerLog { p: ExponentFunction<S>, q: GridFunction<S> },
    /// `Psi(t) = t log(e+t)`.
    LinearLog,
    Numeric(NumericGPhi<S>),
}

impl<S: Scalar> GPhiFunction<S> {
    pub fn power(p: ExponentFunction<S>) -> Result<Self, ExponentError> {
        p.require_lebesgue()?;
        Ok(GPhiFunction::Power { p })
    }

    pub fn power_log(p: ExponentFunction<S>, q: GridFunction<S>) -> Result<Self, ExponentError> {
        p.require_lebesgue()?;
        if let Some(count) =
            (p.infinite_cells() > 0).then_some(p.infinite_cells())
        {
            return Err(ExponentError::InfiniteCells { count });
        }
        assert!(
            q.values().iter().all(|&v| v >= S::zero() && v.is_finite()),
            "log power must be finite and nonnegative"
        );
        Ok(GPhiFunction::PowerLog { p, q })
    }

    /// Evaluate `Psi(x_cell, t)`; may return `+inf` on the essential-sup
    /// branch.
    pub fn eval(&self, cell: usize, t: S) -> S {
        if t <= S::zero() {
            return S::zero();
        }
        match self {
            GPhiFunction::Power { p } => power_branch(p.value(cell), t, S::one()),
            GPhiFunction::ScaledPower { p, coeff } => {
                power_branch(p.value(cell), t, coeff.values()[cell])
            }
            GPhiFunction::PowerLog { p, q } => {
                let e: S = S::E();
                t.powf(p.value(cell)) * (e + t).ln().powf(q.values()[cell])
            }
            GPhiFunction::LinearLog => t * (S::E() + t).ln(),
            GPhiFunction::Numeric(n) => n.eval(cell, t),
        }
    }

    /// Generalized inverse `inf { u >= 0 : Psi(x, u) >= t }` by monotone
    /// bisection.
    pub fn inverse(&self, cell: usize, t: S) -> S {
        if t <= S::zero() {
            return S::zero();
        }
        let mut hi = S::one();
        let mut iters = 0usize;
        while self.eval(cell, hi) < t {
            hi = hi + hi;
            iters += 1;
            if iters > 2000 {
                return S::infinity();
            }
        }
        let mut lo = S::zero();
        let tol: S = cast(NORM_REL_TOL * 10.0);
        while hi - lo > tol * hi {
            let mid = (lo + hi) * cast(0.5);
            if self.eval(cell, mid) >= t {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    fn mask_exponent(&self) -> Option<&ExponentFunction<S>> {
        match self {
            GPhiFunction::Power { p } | GPhiFunction::ScaledPower { p, .. } => {
                (p.infinite_cells() > 0).then_some(p)
            }
            _ => None,
        }
    }

    fn seed_scale(&self, measure: S) -> S {
        match self {
            GPhiFunction::Power { p }
            | GPhiFunction::ScaledPower { p, .. }
            | GPhiFunction::PowerLog { p, .. } => {
                let lower = p.lower();
                if lower.is_infinite() {
                    S::one()
                } else {
                    measure.powf(S::one() / lower.max(S::one()))
                }
            }
            _ => measure.max(S::one()),
        }
    }

    /// `sum_cells Psi(x, |f|/lambda) h^n`; `+inf` when an essential-sup cell
    /// has `|f|/lambda > 1`.
    pub fn modular(&self, f: &GridFunction<S>, lambda: S) -> S {
        assert!(lambda > S::zero(), "lambda must be positive");
        let region = Region::full(*f.domain());
        self.modular_impl(&|i| f.values()[i], &region, lambda)
    }

    /// Modular of `f` restricted to a cube (exact overlap weights).
    pub fn modular_over(&self, f: &GridFunction<S>, lambda: S, cube: &DyadicCube) -> S {
        assert!(lambda > S::zero(), "lambda must be positive");
        let region = Region::cube(*f.domain(), cube);
        self.modular_impl(&|i| f.values()[i], &region, lambda)
    }

    fn modular_impl(&self, value_at: &dyn Fn(usize) -> S, region: &Region, lambda: S) -> S {
        let hn: S = cast(region.dom.cell_measure());
        pairwise_map_sum(region.len(), |i| {
            let (cell, weight) = region.term(i);
            self.eval(cell, value_at(cell).abs() / lambda) * weight * hn
        })
    }

    /// Luxemburg norm `inf { lambda > 0 : modular(f/lambda) <= 1 }` by
    /// bracket expansion and bisection; 0 for the zero function. The
    /// essential-sup branch contributes a floor on the bracket.
    pub fn luxemburg_norm(&self, f: &GridFunction<S>) -> Result<S, NormError> {
        let region = Region::full(*f.domain());
        self.norm_impl(&|i| f.values()[i], &region)
    }

    /// Luxemburg norm of `f` restricted to a cube: `|| chi_Q f ||`.
    pub fn luxemburg_norm_over(
        &self,
        f: &GridFunction<S>,
        cube: &DyadicCube,
    ) -> Result<S, NormError> {
        let region = Region::cube(*f.domain(), cube);
        self.norm_impl(&|i| f.values()[i], &region)
    }

    /// `|| f w || ` (the weighted-space norm of `f`).
    pub fn weighted_norm(&self, f: &GridFunction<S>, w: &GridFunction<S>) -> Result<S, NormError> {
        assert_eq!(f.domain(), w.domain(), "domain mismatch");
        let region = Region::full(*f.domain());
        self.norm_impl(&|i| f.values()[i] * w.values()[i], &region)
    }

    /// `|| chi_Q ||`.
    pub fn indicator_norm(&self, dom: &Domain, cube: &DyadicCube) -> Result<S, NormError> {
        let region = Region::cube(*dom, cube);
        self.norm_impl(&|_| S::one(), &region)
    }

    /// `|| chi_Q g ||` without materializing the product.
    pub fn weighted_indicator_norm(
        &self,
        g: &GridFunction<S>,
        cube: &DyadicCube,
    ) -> Result<S, NormError> {
        let region = Region::cube(*g.domain(), cube);
        self.norm_impl(&|i| g.values()[i], &region)
    }

    fn norm_impl(&self, value_at: &dyn Fn(usize) -> S, region: &Region) -> Result<S, NormError> {
        let mut sup = S::zero();
        for i in 0..region.len() {
            let (cell, _w): (usize, S) = region.term(i);
            sup = sup.max(value_at(cell).abs());
        }
        if sup == S::zero() {
            return Ok(S::zero());
        }
        let mut floor = S::zero();
        if let Some(p) = self.mask_exponent() {
            for i in 0..region.len() {
                let (cell, _w): (usize, S) = region.term(i);
                if p.value(cell).is_infinite() {
                    floor = floor.max(value_at(cell).abs());
                }
            }
        }
        let one = S::one();
        let modular = |lam: S| self.modular_impl(value_at, region, lam);
        if floor > S::zero() && modular(floor) <= one {
            return Ok(floor);
        }
        let measure: S = cast(region.measure());
        let mut hi = (sup * self.seed_scale(measure)).max(floor).max(cast(1e-280));
        let mut lo;
        if modular(hi) > one {
            let mut iters = 0usize;
            loop {
                let next = hi + hi;
                if modular(next) <= one {
                    lo = hi.max(floor);
                    hi = next;
                    break;
                }
                hi = next;
                iters += 1;
                if iters > 300 {
                    return Err(NormError::NonConvergence { iters });
                }
            }
        } else {
            lo = hi * cast(0.5);
            let mut iters = 0usize;
            while lo > floor && modular(lo) <= one {
                hi = lo;
                lo = lo * cast(0.5);
                iters += 1;
                if iters > 1200 {
                    return Err(NormError::NonConvergence { iters });
                }
            }
            lo = lo.max(floor);
        }
        let tol: S = cast(NORM_REL_TOL);
        for _ in 0..200 {
            if hi - lo <= tol * hi {
                break;
            }
            let mid = (lo + hi) * cast(0.5);
            if modular(mid) <= one {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Pointwise conjugate `Psi*(x,u) = sup_t (t u - Psi(x,t))`. Power
    /// families get the exact scaled-power form; anything else becomes a
    /// numeric table.
    pub fn conjugate(&self, dom: &Domain) -> Result<GPhiFunction<S>, NormError> {
        match self {
            GPhiFunction::Power { p } => {
                let coeff = conj_coeffs(p, None)?;
                Ok(GPhiFunction::ScaledPower { p: p.conjugate()?, coeff })
            }
            GPhiFunction::ScaledPower { p, coeff } => {
                let coeff = conj_coeffs(p, Some(coeff))?;
                Ok(GPhiFunction::ScaledPower { p: p.conjugate()?, coeff })
            }
            _ => Ok(GPhiFunction::Numeric(self.numeric_conjugate(dom))),
        }
    }

    fn numeric_conjugate(&self, dom: &Domain) -> NumericGPhi<S> {
        let u_grid = log_grid::<S>(1e-8, 1e8, CONJUGATE_U_POINTS);
        let transform = |cell: usize| -> Vec<S> {
            u_grid
                .iter()
                .map(|&u| legendre_sup(|t| self.eval(cell, t), u))
                .collect()
        };
        match self {
            GPhiFunction::LinearLog => NumericGPhi {
                u_grid: u_grid.clone(),
                row_of_cell: None,
                rows: vec![transform(0)],
            },
            _ => {
                // Deduplicate rows across cells with identical parameters.
                let key = |cell: usize| -> (u64, u64) {
                    match self {
                        GPhiFunction::PowerLog { p, q } => (
                            p.value(cell).to_f64().unwrap_or(f64::NAN).to_bits(),
                            q.values()[cell].to_f64().unwrap_or(f64::NAN).to_bits(),
                        ),
                        GPhiFunction::Power { p } => {
                            (p.value(cell).to_f64().unwrap_or(f64::NAN).to_bits(), 0)
                        }
                        GPhiFunction::ScaledPower { p, coeff } => (
                            p.value(cell).to_f64().unwrap_or(f64::NAN).to_bits(),
                            coeff.values()[cell].to_f64().unwrap_or(f64::NAN).to_bits(),
                        ),
                        GPhiFunction::Numeric(n) => (
                            match &n.row_of_cell {
                                None => 0,
                                Some(m) => m[cell] as u64,
                            },
                            1,
                        ),
                        GPhiFunction::LinearLog => (0, 0),
                    }
                };
                let mut rows: Vec<Vec<S>> = Vec::new();
                let mut index: HashMap<(u64, u64), u32> = HashMap::new();
                let mut row_of_cell = Vec::with_capacity(dom.cell_count());
                for cell in 0..dom.cell_count() {
                    let k = key(cell);
                    let id = *index.entry(k).or_insert_with(|| {
                        rows.push(transform(cell));
                        (rows.len() - 1) as u32
                    });
                    row_of_cell.push(id);
                }
                NumericGPhi { u_grid, row_of_cell: Some(row_of_cell), rows }
            }
        }
    }

    /// Max violation of monotonicity and midpoint convexity on a log grid
    /// of `t` values (diagnostic for the Phi-function axioms).
    pub fn axiom_violations(&self, cells: &[usize]) -> (S, S) {
        let ts = log_grid::<S>(1e-6, 1e6, 200);
        let mut mono = S::zero();
        let mut convex = S::zero();
        for &cell in cells {
            let vals: Vec<S> = ts.iter().map(|&t| self.eval(cell, t)).collect();
            for w in vals.windows(2) {
                if w[0].is_finite() && w[1].is_finite() {
                    mono = mono.max(w[0] - w[1]);
                }
            }
            for i in 0..ts.len() - 2 {
                let (t0, t2) = (ts[i], ts[i + 2]);
                let mid = (t0 + t2) * cast(0.5);
                let vm = self.eval(cell, mid);
                let bound = (vals[i] + vals[i + 2]) * cast(0.5);
                if vm.is_finite() && bound.is_finite() {
                    let scale = bound.abs().max(S::one());
                    convex = convex.max((vm - bound) / scale);
                }
            }
        }
        (mono, convex)
    }
}

fn power_branch<S: Scalar>(p: S, t: S, coeff: S) -> S {
    if p.is_infinite() {
        if t > S::one() {
            S::infinity()
        } else {
            S::zero()
        }
    } else {
        coeff * t.powf(p)
    }
}

fn conj_coeffs<S: Scalar>(
    p: &ExponentFunction<S>,
    coeff: Option<&GridFunction<S>>,
) -> Result<GridFunction<S>, NormError> {
    let dom = *p.domain();
    let one = S::one();
    let vals: Vec<S> = (0..dom.cell_count())
        .map(|cell| {
            let pv = p.value(cell);
            let a = coeff.map(|c| c.values()[cell]).unwrap_or(one);
            if pv == one || pv.is_infinite() {
                // conjugate is the essential-sup branch resp. the linear map u
                one
            } else {
                let pc = pv / (pv - one);
                one / (pc * (a * pv).powf(pc - one))
            }
        })
        .collect();
    Ok(GridFunction::from_values(dom, vals).expect("cell count"))
}

/// `sup_{t >= 0} (t u - psi(t))` by golden-section search over `ln t`.
fn legendre_sup<S: Scalar>(psi: impl Fn(S) -> S, u: S) -> S {
    let g = |s: f64| -> f64 {
        let t: S = cast(s.exp());
        let v = t * u - psi(t);
        v.to_f64().unwrap_or(f64::NEG_INFINITY)
    };
    let (mut a, mut b) = ((1e-12f64).ln(), (1e12f64).ln());
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = g(c);
    let mut fd = g(d);
    while b - a > LEGENDRE_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
        }
    }
    let best = fc.max(fd).max(0.0);
    cast(best)
}

fn log_grid<S: Scalar>(lo: f64, hi: f64, n: usize) -> Vec<S> {
    let (ll, lh) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| cast((ll + (lh - ll) * i as f64 / (n - 1) as f64).exp()))
        .collect()
}

/// Log-spaced scalar grid (exposed for suites and tests).
pub fn sample_grid<S: Scalar>(lo: f64, hi: f64, n: usize) -> Vec<S> {
    log_grid(lo, hi, n)
}

struct Region {
    dom: Domain,
    cube: Option<CubeOverlaps>,
}

struct CubeOverlaps {
    ox: Vec<(usize, i64)>,
    oy: Vec<(usize, i64)>,
    measure: f64,
}

impl Region {
    fn full(dom: Domain) -> Region {
        Region { dom, cube: None }
    }

    fn cube(dom: Domain, cube: &DyadicCube) -> Region {
        let ox = cube.cell_overlaps(&dom, 0);
        let oy = if dom.dim() == 2 { cube.cell_overlaps(&dom, 1) } else { vec![(0usize, 1i64)] };
        Region {
            dom,
            cube: Some(CubeOverlaps { ox, oy, measure: cube.measure(&dom) }),
        }
    }

    fn len(&self) -> usize {
        match &self.cube {
            None => self.dom.cell_count(),
            Some(c) => c.ox.len() * c.oy.len(),
        }
    }

    fn measure(&self) -> f64 {
        match &self.cube {
            None => self.dom.box_measure(),
            Some(c) => c.measure,
        }
    }

    /// `(cell index, weight)`: weight is the fraction of the cell covered,
    /// exactly 1 for fully covered cells.
    #[inline]
    fn term<S: Scalar>(&self, i: usize) -> (usize, S) {
        match &self.cube {
            None => (i, S::one()),
            Some(c) => {
                let nx = c.ox.len();
                let (cx, ux) = c.ox[i % nx];
                let (cy, uy) = c.oy[i / nx];
                let cell =
                    if self.dom.dim() == 1 { cx } else { self.dom.index([cx, cy]) };
                let denom = if self.dom.dim() == 1 { 3 } else { 9 };
                (cell, cast_i64::<S>(ux * uy) / cast_i64(denom))
            }
        }
    }
}

/// Plain pairing `int |f g|`.
pub fn holder_pairing<S: Scalar>(f: &GridFunction<S>, g: &GridFunction<S>) -> S {
    f.zip(g, |a, b| (a * b).abs()).integrate()
}

/// Report of the three norm-compatibility constants for a function triple.
#[derive(Debug, Clone)]
pub struct TripleReport<S> {
    /// max over cubes of ||chi_Q||_A ||chi_Q||_B / ||chi_Q||_D
    pub c1: S,
    pub c1_witness: DyadicCube,
    /// max over (cell, t) of A^{-1} B^{-1} / D^{-1}
    pub c2: S,
    /// max over cubes of ||chi_Q||_D ||chi_Q||_{D*} / |Q|
    pub c3: S,
    pub c3_witness: DyadicCube,
}

/// Check the triple `(A, B, D)`: indicator-norm splitting, inverse-product
/// domination, and the `D`/`D*` norm product against `|Q|`.
pub fn check_triple<S: Scalar>(
    a: &GPhiFunction<S>,
    b: &GPhiFunction<S>,
    d: &GPhiFunction<S>,
    dom: &Domain,
    cubes: &[DyadicCube],
    t_grid: &[S],
) -> Result<TripleReport<S>, NormError> {
    let mut c1 = S::zero();
    let mut c1_witness = cubes[0];
    let mut c3 = S::zero();
    let mut c3_witness = cubes[0];
    let d_star = d.conjugate(dom)?;
    for q in cubes {
        let na = a.indicator_norm(dom, q)?;
        let nb = b.indicator_norm(dom, q)?;
        let nd = d.indicator_norm(dom, q)?;
        let nds = d_star.indicator_norm(dom, q)?;
        for (tag, v) in [("a", na), ("b", nb), ("d", nd), ("d*", nds)] {
            if !(v.is_finite() && v > S::zero()) {
                let _ = tag;
                return Err(NormError::DegenerateNorm {
                    cube: *q,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let r1 = na * nb / nd;
        if r1 > c1 {
            c1 = r1;
            c1_witness = *q;
        }
        let r3 = nd * nds / cast(q.measure(dom));
        if r3 > c3 {
            c3 = r3;
            c3_witness = *q;
        }
    }
    let mut c2 = S::zero();
    for cell in 0..dom.cell_count() {
        for &t in t_grid {
            let ia = a.inverse(cell, t);
            let ib = b.inverse(cell, t);
            let id = d.inverse(cell, t);
            if id > S::zero() && id.is_finite() && ia.is_finite() && ib.is_finite() {
                c2 = c2.max(ia * ib / id);
            }
        }
    }
    Ok(TripleReport { c1, c1_witness, c2, c3, c3_witness })
}

/// Max relative violation of `t u <= Psi(t) + Psi*(u)` over node pairs.
pub fn young_violation<S: Scalar>(
    psi: &GPhiFunction<S>,
    psi_star: &GPhiFunction<S>,
    cells: &[usize],
    t_nodes: &[S],
    u_nodes: &[S],
) -> S {
    let mut worst = S::zero();
    for &cell in cells {
        for &t in t_nodes {
            let pv = psi.eval(cell, t);
            if !pv.is_finite() {
                continue;
            }
            for &u in u_nodes {
                let sv = psi_star.eval(cell, u);
                if !sv.is_finite() {
                    continue;
                }
                let gap = t * u - pv - sv;
                let scale = (t * u).max(S::one());
                worst = worst.max(gap / scale);
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::ExponentFunction;
    use crate::grid::{all_cubes, Domain, GridFunction};

    fn dom(l: i32, j: u32) -> Domain {
        Domain::new(1, l, j).unwrap()
    }

    fn chi_right_unit(d: Domain) -> GridFunction<f64> {
        // chi_[0,1) on [-1,1)
        let vals: Vec<f64> = (0..d.cell_count())
            .map(|i| if d.center(i)[0] > 0.0 { 1.0 } else { 0.0 })
            .collect();
        GridFunction::from_values(d, vals).unwrap()
    }

    fn step_exponent(d: Domain, left: f64, right: f64) -> ExponentFunction<f64> {
        let vals: Vec<f64> =
            (0..d.cell_count()).map(|i| if d.center(i)[0] < 0.5 { left } else { right }).collect();
        ExponentFunction::from_grid(GridFunction::from_values(d, vals).unwrap(), Some(right))
            .unwrap()
    }

    #[test]
    fn modular_examples() {
        let d = dom(-1, 4); // unit measure
        let psi = GPhiFunction::power(ExponentFunction::<f64>::constant(d, 2.0)).unwrap();
        let one = GridFunction::<f64>::constant(d, 1.0);
        assert_eq!(psi.modular(&one, 1.0), 1.0);

        // p = 2 on the left half, 4 on the right: at |f|/lambda = 1 both give 1
        let d2 = dom(-1, 4);
        let vals: Vec<f64> =
            (0..d2.cell_count()).map(|i| if d2.center(i)[0] < 0.0 { 2.0 } else { 4.0 }).collect();
        let p = ExponentFunction::from_grid(GridFunction::from_values(d2, vals).unwrap(), Some(4.0))
            .unwrap();
        let psi2 = GPhiFunction::power(p).unwrap();
        let two = GridFunction::<f64>::constant(d2, 2.0);
        assert_eq!(psi2.modular(&two, 2.0), 1.0);

        // t log(e+t) at t = 1 integrates to log(e+1) on a unit box
        let lin = GPhiFunction::<f64>::LinearLog;
        let m = lin.modular(&one, 1.0);
        assert!((m - (std::f64::consts::E + 1.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn luxemburg_classical_l2() {
        let d = dom(0, 4);
        let psi = GPhiFunction::power(ExponentFunction::<f64>::constant(d, 2.0)).unwrap();
        let chi = chi_right_unit(d);
        let n = psi.luxemburg_norm(&chi).unwrap();
        assert!((n - 1.0).abs() <= 1e-10, "norm = {n}");
    }

    #[test]
    fn unit_modular_law() {
        let d = dom(-1, 5);
        let psi = GPhiFunction::power(ExponentFunction::<f64>::constant(d, 3.0)).unwrap();
        for c in [0.02, 1.0, 7.5, 1234.0] {
            let f = GridFunction::<f64>::constant(d, c);
            let n = psi.luxemburg_norm(&f).unwrap();
            assert!((n - c).abs() <= 1e-9 * c, "c = {c}, norm = {n}");
        }
    }

    #[test]
    fn luxemburg_piecewise_closed_form() {
        // p = 2 on [0,1/2), 4 on [1/2,1); f = 2 chi_[0,1/2) on box [-1,1):
        // modular(lambda) = 0.5 (2/lambda)^2 = 1 at lambda = sqrt(2).
        let d = dom(0, 4);
        let pvals: Vec<f64> = (0..d.cell_count())
            .map(|i| {
                let x = d.center(i)[0];
                if (0.0..0.5).contains(&x) {
                    2.0
                } else {
                    4.0
                }
            })
            .collect();
        let p = ExponentFunction::from_grid(GridFunction::from_values(d, pvals).unwrap(), Some(4.0))
            .unwrap();
        let psi = GPhiFunction::power(p).unwrap();
        let fvals: Vec<f64> = (0..d.cell_count())
            .map(|i| {
                let x = d.center(i)[0];
                if (0.0..0.5).contains(&x) {
                    2.0
                } else {
                    0.0
                }
            })
            .collect();
        let f = GridFunction::from_values(d, fvals).unwrap();
        let n = psi.luxemburg_norm(&f).unwrap();
        assert!((n - 2f64.sqrt()).abs() <= 1e-9, "norm = {n}");
    }

    #[test]
    fn norm_modular_duality() {
        let d = dom(0, 5);
        let p = step_exponent(d, 1.6, 3.2);
        let psi = GPhiFunction::power(p).unwrap();
        let f = GridFunction::<f64>::sample(
            &crate::expr::Expression::parse("2 + sin(5*x1)", 1).unwrap(),
            d,
        )
        .unwrap();
        let n = psi.luxemburg_norm(&f).unwrap();
        assert!(psi.modular(&f, n) <= 1.0 + 1e-8);
        assert!(psi.modular(&f, n * (1.0 - 1e-6)) > 1.0);
    }

    #[test]
    fn homogeneity_power_family() {
        let d = dom(0, 5);
        let psi = GPhiFunction::power(step_exponent(d, 1.5, 2.5)).unwrap();
        let f = GridFunction::<f64>::sample(
            &crate::expr::Expression::parse("1 + abs(x1)", 1).unwrap(),
            d,
        )
        .unwrap();
        let n1 = psi.luxemburg_norm(&f).unwrap();
        for c in [0.13, 3.7, 41.0] {
            let nc = psi.luxemburg_norm(&f.scale(c)).unwrap();
            assert!((nc - c * n1).abs() <= 1e-9 * (c * n1), "c = {c}");
        }
    }

    #[test]
    fn essential_sup_branch() {
        let d = dom(0, 3);
        // p = inf on [0,1), 2 on [-1,0)
        let vals: Vec<f64> = (0..d.cell_count())
            .map(|i| if d.center(i)[0] > 0.0 { f64::INFINITY } else { 2.0 })
            .collect();
        let p = ExponentFunction::from_grid(
            GridFunction::from_values(d, vals).unwrap(),
            Some(f64::INFINITY),
        )
        .unwrap();
        let psi = GPhiFunction::power(p).unwrap();
        // f = 3 on the masked half, 0 elsewhere: norm = ess-sup = 3 exactly
        let fvals: Vec<f64> =
            (0..d.cell_count()).map(|i| if d.center(i)[0] > 0.0 { 3.0 } else { 0.0 }).collect();
        let f = GridFunction::from_values(d, fvals).unwrap();
        assert_eq!(psi.luxemburg_norm(&f).unwrap(), 3.0);
        // modular jumps to +inf once lambda dips below the floor
        assert!(psi.modular(&f, 2.9).is_infinite());
        // all-inf exponent: indicator norm of any cube is 1
        let pinf = ExponentFunction::<f64>::constant(d, f64::INFINITY);
        let psi_inf = GPhiFunction::power(pinf).unwrap();
        let root = d.box_root();
        assert_eq!(psi_inf.indicator_norm(&d, &root).unwrap(), 1.0);
    }

    #[test]
    fn weighted_norm_reduces_and_scales() {
        let d = dom(0, 4);
        let psi = GPhiFunction::power(step_exponent(d, 2.0, 3.0)).unwrap();
        let f = chi_right_unit(d);
        let w1 = GridFunction::<f64>::constant(d, 1.0);
        let a = psi.weighted_norm(&f, &w1).unwrap();
        let b = psi.luxemburg_norm(&f).unwrap();
        assert_eq!(a, b);
        let c = 2.5;
        let wc = GridFunction::<f64>::constant(d, c);
        let n = psi.weighted_norm(&f, &wc).unwrap();
        assert!((n - c * b).abs() <= 1e-9 * n);
        // definitional identity on a random-ish pair
        let g = GridFunction::<f64>::sample(
            &crate::expr::Expression::parse("1 + x1^2", 1).unwrap(),
            d,
        )
        .unwrap();
        let direct = psi.luxemburg_norm(&f.mul(&g)).unwrap();
        let via = psi.weighted_norm(&f, &g).unwrap();
        assert_eq!(direct, via);
    }

    #[test]
    fn conjugate_power_two() {
        let d = dom(0, 3);
        let psi = GPhiFunction::power(ExponentFunction::<f64>::constant(d, 2.0)).unwrap();
        let star = psi.conjugate(&d).unwrap();
        // Psi*(u) = u^2/4, so Psi*(2) = 1
        assert!((star.eval(0, 2.0) - 1.0).abs() < 1e-14);
        match &star {
            GPhiFunction::ScaledPower { p, coeff } => {
                assert!(p.grid().values().iter().all(|&v| v == 2.0));
                assert!(coeff.values().iter().all(|&v| (v - 0.25).abs() < 1e-15));
            }
            other => panic!("expected scaled power, got {other:?}"),
        }
    }

    #[test]
    fn conjugate_linear_exponent() {
        let d = dom(0, 3);
        let psi = GPhiFunction::power(ExponentFunction::<f64>::constant(d, 1.0)).unwrap();
        let star = psi.conjugate(&d).unwrap();
        // conjugate of t is the essential-sup branch: 0 for u <= 1, inf above
        assert_eq!(star.eval(0, 0.7), 0.0);
        assert_eq!(star.eval(0, 1.0), 0.0);
        assert!(star.eval(0, 1.1).is_infinite());
    }

    #[test]
    fn conjugate_linearlog_satisfies_young_on_nodes() {
        let d = dom(0, 2);
        let lin = GPhiFunction::<f64>::LinearLog;
        let star = lin.conjugate(&d).unwrap();
        let (t_nodes, u_nodes): (Vec<f64>, Vec<f64>) = match &star {
            GPhiFunction::Numeric(n) => {
                let u: Vec<f64> = n.u_grid().iter().copied().step_by(5).collect();
                (sample_grid(1e-6, 1e6, 100), u)
            }
            _ => panic!("expected numeric conjugate"),
        };
        let v = young_violation(&lin, &star, &[0], &t_nodes, &u_nodes);
        assert!(v <= 1e-7, "violation = {v}");
    }

    #[test]
    fn inverse_examples() {
        let d = dom(0, 3);
        let psi = GPhiFunction::power(ExponentFunction::<f64>::constant(d, 2.0)).unwrap();
        assert!((psi.inverse(0, 4.0) - 2.0).abs() <= 1e-9);
        assert_eq!(psi.inverse(0, 0.0), 0.0);
        let lin = GPhiFunction::<f64>::LinearLog;
        let t = (std::f64::consts::E + 1.0).ln();
        assert!((lin.inverse(0, t) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn inverse_product_identity_power() {
        // A = B = t^2, D = t: A^{-1} B^{-1} = t^{1/2} t^{1/2} = t = D^{-1}
        let d = dom(0, 3);
        let a = GPhiFunction::power(ExponentFunction::<f64>::constant(d, 2.0)).unwrap();
        let dd = GPhiFunction::power(ExponentFunction::<f64>::constant(d, 1.0)).unwrap();
        for t in [0.3, 1.0, 7.0, 111.0] {
            let prod = a.inverse(0, t) * a.inverse(0, t);
            let di = dd.inverse(0, t);
            assert!((prod - di).abs() <= 1e-8 * di.max(1.0), "t = {t}");
        }
        let cubes = all_cubes(&d);
        let t_grid: Vec<f64> = sample_grid(1e-3, 1e3, 25);
        let rep = check_triple(&a, &a, &dd, &d, &cubes, &t_grid).unwrap();
        assert!((rep.c2 - 1.0).abs() <= 1e-6, "c2 = {}", rep.c2);
    }

    #[test]
    fn numeric_table_with_unit_node_obeys_unit_modular_law() {
        let d = dom(-1, 4);
        // tabulated t^2 with an exact node at t = 1
        let mut grid_t: Vec<f64> = sample_grid(1e-6, 1e6, 121);
        grid_t.push(1.0);
        grid_t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid_t.dedup();
        let vals: Vec<f64> = grid_t.iter().map(|t| t * t).collect();
        let psi = GPhiFunction::Numeric(NumericGPhi::uniform(grid_t, vals));
        for c in [0.4, 1.0, 9.0] {
            let f = GridFunction::<f64>::constant(d, c);
            let n = psi.luxemburg_norm(&f).unwrap();
            assert!((n - c).abs() <= 1e-9 * c, "c = {c} -> {n}");
        }
    }

    #[test]
    fn phi_axioms_hold_for_families() {
        let d = dom(0, 3);
        let fams: Vec<GPhiFunction<f64>> = vec![
            GPhiFunction::power(step_exponent(d, 1.3, 3.1)).unwrap(),
            GPhiFunction::power_log(
                ExponentFunction::<f64>::constant(d, 1.0),
                GridFunction::<f64>::constant(d, 0.7),
            )
            .unwrap(),
            GPhiFunction::LinearLog,
        ];
        for psi in &fams {
            let (mono, convex) = psi.axiom_violations(&[0, d.cell_count() - 1]);
            assert!(mono <= 0.0 + 1e-12, "monotonicity violated: {mono}");
            assert!(convex <= 1e-9, "convexity violated: {convex}");
        }
    }
}
