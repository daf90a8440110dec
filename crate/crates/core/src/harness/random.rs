//! Seeded trial generators: cell-aligned step functions with log-uniform
//! amplitudes.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exponent::ExponentFunction;
use crate::grid::{Domain, GridFunction};
use crate::weights::Weight;

/// Derive an independent stream for one trial from the master seed.
pub fn trial_rng(master: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(master ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(trial))
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn axis_range(rng: &mut ChaCha8Rng, cells: usize) -> (usize, usize) {
    let a = rng.gen_range(0..cells);
    let b = rng.gen_range(0..cells);
    (a.min(b), a.max(b))
}

fn overlay(
    dom: &Domain,
    values: &mut [f64],
    rng: &mut ChaCha8Rng,
    amp: f64,
    combine: impl Fn(f64, f64) -> f64,
) {
    let (x0, x1) = axis_range(rng, dom.cells_per_axis());
    match dom.dim() {
        1 => {
            for v in values.iter_mut().take(x1 + 1).skip(x0) {
                *v = combine(*v, amp);
            }
        }
        _ => {
            let (y0, y1) = axis_range(rng, dom.cells_per_axis());
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let i = dom.index([x, y]);
                    values[i] = combine(values[i], amp);
                }
            }
        }
    }
}

/// Sum of `pieces` random cell-aligned blocks with log-uniform amplitudes;
/// never identically zero.
pub fn random_step(
    rng: &mut ChaCha8Rng,
    dom: Domain,
    pieces: usize,
    amp_lo: f64,
    amp_hi: f64,
    signed: bool,
) -> GridFunction<f64> {
    let mut values = vec![0.0f64; dom.cell_count()];
    for _ in 0..pieces {
        let mut amp = log_uniform(rng, amp_lo, amp_hi);
        if signed && rng.gen_bool(0.5) {
            amp = -amp;
        }
        overlay(&dom, &mut values, rng, amp, |a, b| a + b);
    }
    if values.iter().all(|&v| v == 0.0) {
        values[0] = amp_lo;
    }
    GridFunction::from_values(dom, values).expect("cell count")
}

/// Strictly positive step built multiplicatively over a unit baseline.
pub fn random_positive_step(
    rng: &mut ChaCha8Rng,
    dom: Domain,
    pieces: usize,
    fac_lo: f64,
    fac_hi: f64,
) -> Weight<f64> {
    let mut values = vec![1.0f64; dom.cell_count()];
    for _ in 0..pieces {
        let amp = log_uniform(rng, fac_lo, fac_hi);
        overlay(&dom, &mut values, rng, amp, |a, b| a * b);
    }
    Weight::new(GridFunction::from_values(dom, values).expect("cell count"))
        .expect("positive step")
}

/// Step exponent with values in `[lo, hi]`; the limit value is the final
/// overlay level.
pub fn random_exponent_step(
    rng: &mut ChaCha8Rng,
    dom: Domain,
    pieces: usize,
    lo: f64,
    hi: f64,
) -> ExponentFunction<f64> {
    let base = 0.5 * (lo + hi);
    let mut values = vec![base; dom.cell_count()];
    for _ in 0..pieces {
        let level = rng.gen_range(lo..hi);
        overlay(&dom, &mut values, rng, level, |_, b| b);
    }
    let p_inf = values[dom.cell_count() - 1];
    ExponentFunction::from_grid(
        GridFunction::from_values(dom, values).expect("cell count"),
        Some(p_inf),
    )
    .expect("exponent in range")
}
