//! Composition of superposition fields.
//!
//! Fields on a common grid form a unital algebra under slice-by-slice
//! composition. Composition is exact on PWL slices, so Lipschitz constants
//! of the result are exact and submultiplicativity can be checked directly.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{ensure_same_grid, CompactGrid};
use crate::operators::{ScalarPwl, SuperpositionField};

/// Slack allowed when comparing a composed Lipschitz constant with a product.
pub const SUBMULT_TOL: f64 = 1e-12;

/// Identity slice at every grid point.
pub fn identity_field(grid: &CompactGrid) -> SuperpositionField {
    SuperpositionField::uniform(grid, ScalarPwl::identity())
}

/// `outer ∘ inner`, composed slice by slice.
pub fn compose(
    outer: &SuperpositionField,
    inner: &SuperpositionField,
    max_breakpoints: usize,
) -> Result<SuperpositionField> {
    ensure_same_grid(&outer.grid_id, &inner.grid_id)?;
    let slices = outer
        .slices
        .iter()
        .zip(&inner.slices)
        .map(|(o, i)| ScalarPwl::compose(o, i, max_breakpoints))
        .collect::<Result<Vec<_>>>()?;
    Ok(SuperpositionField {
        grid_id: outer.grid_id.clone(),
        slices,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmultiplicativityReport {
    pub pointwise_ok: bool,
    pub global_ok: bool,
    /// Point with the largest excess of the composed constant over the product.
    pub worst_w: usize,
    pub worst_excess: f64,
    pub composed_norm: f64,
    pub norm_product: f64,
}

/// Checks `Lip(outer_w ∘ inner_w) <= Lip(outer_w) Lip(inner_w)` at every
/// point and the same inequality for the sup norms.
pub fn submultiplicativity_check(
    outer: &SuperpositionField,
    inner: &SuperpositionField,
    max_breakpoints: usize,
) -> Result<SubmultiplicativityReport> {
    let composed = compose(outer, inner, max_breakpoints)?;
    let lo = outer.slice_lip_constants();
    let li = inner.slice_lip_constants();
    let lc = composed.slice_lip_constants();
    let mut worst_w = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    for w in 0..lc.len() {
        let excess = lc[w] - lo[w] * li[w];
        if excess > worst_excess {
            worst_excess = excess;
            worst_w = w;
        }
    }
    let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let composed_norm = sup(&lc);
    let norm_product = sup(&lo) * sup(&li);
    Ok(SubmultiplicativityReport {
        pointwise_ok: worst_excess <= SUBMULT_TOL,
        global_ok: composed_norm <= norm_product + SUBMULT_TOL,
        worst_w,
        worst_excess,
        composed_norm,
        norm_product,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_interval_grid, tabulate, GridFunction};
    use crate::operators::MultiplicationOperator;

    #[test]
    fn identity_is_a_unit() {
        let g = make_interval_grid(0.0, 1.0, 4).unwrap();
        let t = SuperpositionField::new(
            &g,
            (0..4)
                .map(|i| ScalarPwl::new(vec![-1.0, 1.0], vec![i as f64, 0.0], 2.0, 0.5).unwrap())
                .collect(),
        )
        .unwrap();
        let id = identity_field(&g);
        let f = tabulate(&g, |w| 3.0 * w[0] - 1.2).unwrap();
        for c in [
            compose(&id, &t, 1000).unwrap(),
            compose(&t, &id, 1000).unwrap(),
        ] {
            assert_eq!(c.eval(&f).unwrap(), t.eval(&f).unwrap());
            assert_eq!(c.slice_lip_constants(), t.slice_lip_constants());
        }
        let rep = submultiplicativity_check(&t, &id, 1000).unwrap();
        assert!(rep.pointwise_ok && rep.global_ok);
        assert_eq!(rep.worst_excess, 0.0);
    }

    #[test]
    fn constant_outer_absorbs() {
        let g = make_interval_grid(0.0, 1.0, 3).unwrap();
        let c = SuperpositionField::uniform(&g, ScalarPwl::constant(2.5).unwrap());
        let t = SuperpositionField::uniform(
            &g,
            ScalarPwl::new(vec![0.0, 1.0], vec![0.0, 4.0], -1.0, 1.0).unwrap(),
        );
        let r = compose(&c, &t, 100).unwrap();
        assert!(r.slice_lip_constants().iter().all(|l| *l == 0.0));
        let f = tabulate(&g, |w| w[0] * 7.0).unwrap();
        assert_eq!(r.eval(&f).unwrap().values, vec![2.5; 3]);
    }

    #[test]
    fn multiplication_fields_multiply_slopes() {
        let g = make_interval_grid(-1.0, 1.0, 5).unwrap();
        let h1 = tabulate(&g, |w| w[0] + 0.25).unwrap();
        let h2 = tabulate(&g, |w| 2.0 - w[0]).unwrap();
        let m = |h: GridFunction| {
            MultiplicationOperator {
                grid_id: g.id().clone(),
                h,
            }
            .to_superposition()
        };
        let (t1, t2) = (m(h1.clone()), m(h2.clone()));
        let c = compose(&t2, &t1, 100).unwrap();
        for (w, l) in c.slice_lip_constants().iter().enumerate() {
            assert_eq!(*l, (h1.values[w] * h2.values[w]).abs());
        }
        let rep = submultiplicativity_check(&t2, &t1, 100).unwrap();
        assert!(rep.pointwise_ok && rep.global_ok);
    }

    #[test]
    fn grids_must_match() {
        let a = make_interval_grid(0.0, 1.0, 3).unwrap();
        let b = make_interval_grid(0.0, 1.0, 4).unwrap();
        assert!(compose(&identity_field(&a), &identity_field(&b), 10).is_err());
    }
}
