//! Lower-bound estimation of weighted operator norms from seeded trials and
//! adversarial indicator candidates.

use crate::gphi::GPhiFunction;
use crate::grid::GridFunction;
use crate::weights::Weight;

use super::random::{random_step, trial_rng};
use super::HarnessError;

/// Max over trial functions of `||(Op f) w_target||_target / ||f v_source||_source`.
///
/// Trials are seeded random steps (alternating signed and nonnegative);
/// `extra` supplies adversarial candidates such as indicators of
/// bump-attaining cubes. Returns the best ratio and its witness label.
pub fn estimate_operator_norm(
    apply: &dyn Fn(&GridFunction<f64>) -> Result<GridFunction<f64>, HarnessError>,
    source: (&GPhiFunction<f64>, &Weight<f64>),
    target: (&GPhiFunction<f64>, &Weight<f64>),
    trials: usize,
    seed: u64,
    extra: &[(String, GridFunction<f64>)],
) -> Result<(f64, String), HarnessError> {
    let (src_psi, src_w) = source;
    let (tgt_psi, tgt_w) = target;
    let mut best = 0.0f64;
    let mut witness = String::from("none");
    let mut consider = |label: String, f: &GridFunction<f64>| -> Result<(), HarnessError> {
        let denom = src_psi.weighted_norm(f, src_w.grid())?;
        if !(denom.is_finite() && denom > 0.0) {
            return Ok(());
        }
        let out = apply(f)?;
        let num = tgt_psi.weighted_norm(&out, tgt_w.grid())?;
        if num.is_finite() {
            let ratio = num / denom;
            if ratio > best {
                best = ratio;
                witness = label;
            }
        }
        Ok(())
    };
    for (label, f) in extra {
        consider(format!("candidate:{label}"), f)?;
    }
    let dom = *src_w.domain();
    for t in 0..trials {
        let mut rng = trial_rng(seed, t as u64);
        let signed = t % 2 == 0;
        let f = random_step(&mut rng, dom, 4, 0.05, 20.0, signed);
        consider(format!("trial{t}"), &f)?;
    }
    Ok((best, witness))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::ExponentFunction;
    use crate::grid::Domain;
    use crate::sparse::{sparse_avg, SparseFamily};

    #[test]
    fn identity_operator_unit_ratio() {
        let dom = Domain::new(1, 0, 5).unwrap();
        let psi = GPhiFunction::power(ExponentFunction::<f64>::constant(dom, 2.0)).unwrap();
        let w = Weight::<f64>::constant(dom, 1.0).unwrap();
        let one = GridFunction::<f64>::constant(dom, 1.0);
        let apply =
            |f: &GridFunction<f64>| -> Result<GridFunction<f64>, HarnessError> { Ok(f.clone()) };
        let (ratio, witness) = estimate_operator_norm(
            &apply,
            (&psi, &w),
            (&psi, &w),
            8,
            11,
            &[("constant".into(), one)],
        )
        .unwrap();
        assert!((ratio - 1.0).abs() <= 1e-9, "identity ratio {ratio}");
        assert!(!witness.is_empty());
    }

    #[test]
    fn root_average_contracts_l2() {
        let dom = Domain::new(1, 0, 5).unwrap();
        let fam = SparseFamily::new(&dom, vec![dom.box_root()]).unwrap();
        let psi = GPhiFunction::power(ExponentFunction::<f64>::constant(dom, 2.0)).unwrap();
        let w = Weight::<f64>::constant(dom, 1.0).unwrap();
        let apply = |f: &GridFunction<f64>| -> Result<GridFunction<f64>, HarnessError> {
            Ok(sparse_avg(&fam, f)?)
        };
        let (ratio, _) =
            estimate_operator_norm(&apply, (&psi, &w), (&psi, &w), 24, 99, &[]).unwrap();
        assert!(ratio <= 1.0 + 1e-9, "averaging must contract: {ratio}");
        assert!(ratio > 0.05);
    }
}
