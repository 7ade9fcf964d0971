use crate::error::{LlipError, Result};
use crate::grid::{ensure_same_grid, GridFunction};

use super::{SampleOperator, ScalarPwl, SuperpositionField, TensorOperator, TensorTerm};

/// Collapses every slice of `sum_i f_i ⊗ phi_i` into one PWL per grid point.
pub fn tensor_to_superposition(t: &TensorOperator) -> Result<SuperpositionField> {
    let n = t.terms.first().map_or(0, |term| term.coefficient.len());
    let slices = (0..n)
        .map(|w| {
            let parts: Vec<(f64, &ScalarPwl)> = t
                .terms
                .iter()
                .map(|term| (term.coefficient.values[w], &term.profile))
                .collect();
            ScalarPwl::linear_combination(&parts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuperpositionField {
        grid_id: t.grid_id.clone(),
        slices,
    })
}

/// Writes a field as `sum_w e_w ⊗ slice_w` with `e_w` the indicator of point `w`.
pub fn superposition_to_tensor(field: &SuperpositionField) -> TensorOperator {
    let n = field.slices.len();
    let terms = field
        .slices
        .iter()
        .enumerate()
        .map(|(w, slice)| {
            let mut e = vec![0.0; n];
            e[w] = 1.0;
            TensorTerm {
                coefficient: GridFunction::from_parts(field.grid_id.clone(), e),
                profile: slice.clone(),
            }
        })
        .collect();
    TensorOperator {
        grid_id: field.grid_id.clone(),
        terms,
    }
}

/// Recovers a superposition field from a sampled operator.
///
/// At each grid point the data `{(g_j(w), Tg_j(w))}` is extended to the whole
/// real line by the one-dimensional McShane formula with constant `phi(w)`:
/// `slice_w(r) = max_j (Tg_j(w) - phi(w) |g_j(w) - r|)`. Inputs that agree at
/// `w` (within `zero_tol`) must have outputs that agree within
/// `consistency_tol`; such points are merged by averaging.
pub fn sample_to_superposition(
    s: &SampleOperator,
    phi: &GridFunction,
    consistency_tol: f64,
    zero_tol: f64,
) -> Result<SuperpositionField> {
    ensure_same_grid(&s.grid_id, &phi.grid_id)?;
    if s.samples.is_empty() {
        return Err(LlipError::InsufficientSamples {
            required: 1,
            found: 0,
        });
    }
    let n = phi.len();
    for sample in &s.samples {
        sample.input.ensure_compatible(phi)?;
        sample.output.ensure_compatible(phi)?;
    }
    if let Some((index, &value)) = phi.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(LlipError::NegativeBound { index, value });
    }
    let slices = (0..n)
        .map(|w| {
            let data: Vec<(f64, f64)> = s
                .samples
                .iter()
                .map(|sample| (sample.input.values[w], sample.output.values[w]))
                .collect();
            let merged = merge_abscissas(data, zero_tol, consistency_tol)
                .map_err(|spread| LlipError::IllDefinedAtPoint { index: w, spread })?;
            Ok(mcshane_slice(&merged, phi.values[w]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuperpositionField {
        grid_id: s.grid_id.clone(),
        slices,
    })
}

/// Sorts by abscissa and averages runs of coincident abscissas. Fails with
/// the ordinate spread of the first run that is not consistent.
fn merge_abscissas(
    mut data: Vec<(f64, f64)>,
    zero_tol: f64,
    consistency_tol: f64,
) -> std::result::Result<Vec<(f64, f64)>, f64> {
    data.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged = Vec::with_capacity(data.len());
    let mut start = 0;
    while start < data.len() {
        let mut end = start + 1;
        while end < data.len() && data[end].0 - data[start].0 <= zero_tol {
            end += 1;
        }
        let run = &data[start..end];
        let (lo, hi) = run
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.1), hi.max(p.1))
            });
        if hi - lo > consistency_tol {
            return Err(hi - lo);
        }
        let m = run.len() as f64;
        let a = run.iter().map(|p| p.0).sum::<f64>() / m;
        let t = run.iter().map(|p| p.1).sum::<f64>() / m;
        merged.push((a, t));
        start = end;
    }
    Ok(merged)
}

/// Upper envelope of the tents `t_j - lip |a_j - r|` over sorted, distinct abscissas.
fn mcshane_slice(points: &[(f64, f64)], lip: f64) -> ScalarPwl {
    let m = points.len();
    let value_at = |r: f64| {
        points
            .iter()
            .map(|&(a, t)| t - lip * (a - r).abs())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut xs = Vec::with_capacity(2 * m);
    if lip > 0.0 {
        // On [a_j, a_{j+1}] tents from the left descend and tents from the
        // right ascend, so the envelope is the max of two lines.
        let mut left_best = vec![f64::NEG_INFINITY; m];
        let mut acc = f64::NEG_INFINITY;
        for (j, &(a, t)) in points.iter().enumerate() {
            acc = acc.max(t + lip * a);
            left_best[j] = acc;
        }
        let mut right_best = vec![f64::NEG_INFINITY; m];
        acc = f64::NEG_INFINITY;
        for (j, &(a, t)) in points.iter().enumerate().rev() {
            acc = acc.max(t - lip * a);
            right_best[j] = acc;
        }
        for j in 0..m {
            xs.push(points[j].0);
            if j + 1 < m {
                let cross = (left_best[j] - right_best[j + 1]) / (2.0 * lip);
                let (a, b) = (points[j].0, points[j + 1].0);
                // a crossing hugging an abscissa would leave a sliver segment
                // whose differenced slope is pure rounding noise
                if cross - a > sliver(a) && b - cross > sliver(b) {
                    xs.push(cross);
                }
            }
        }
    } else {
        xs.extend(points.iter().map(|p| p.0));
    }
    let values = xs.iter().map(|&r| value_at(r)).collect();
    ScalarPwl::new(xs, values, lip, -lip).expect("finite sorted McShane breakpoints")
}

fn sliver(x: f64) -> f64 {
    1e-9 * x.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_interval_grid, tabulate};
    use crate::operators::{multiplication_operator, OperatorRep};

    #[test]
    fn single_point_slice_is_two_rays() {
        let s = mcshane_slice(&[(1.0, 2.0)], 0.75);
        assert_eq!(s.lip_constant(), 0.75);
        assert_eq!(s.eval(1.0), 2.0);
        assert_eq!(s.eval(3.0), 2.0 - 1.5);
        assert_eq!(s.eval(-1.0), 2.0 - 1.5);
    }

    #[test]
    fn slice_matches_brute_force_envelope() {
        let pts = [(-2.0, 0.5), (-0.5, 1.0), (0.3, -0.7), (2.0, 0.4)];
        for lip in [0.0, 0.5, 1.0, 3.0] {
            let s = mcshane_slice(&pts, lip);
            for i in 0..=400 {
                let r = -4.0 + 8.0 * i as f64 / 400.0;
                let brute = pts
                    .iter()
                    .map(|&(a, t)| t - lip * (a - r).abs())
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!((s.eval(r) - brute).abs() < 1e-12, "lip {lip}, r {r}");
            }
        }
    }

    #[test]
    fn recovers_multiplication_samples() {
        let g = make_interval_grid(-1.0, 1.0, 9).unwrap();
        let h = tabulate(&g, |w| 2.0 * w[0] - 0.3).unwrap();
        let op = multiplication_operator(&g, h.clone()).unwrap();
        let inputs = vec![
            tabulate(&g, |w| w[0]).unwrap(),
            tabulate(&g, |w| 1.0 - w[0] * w[0]).unwrap(),
            tabulate(&g, |_| -0.5).unwrap(),
        ];
        let s = SampleOperator::from_operator(&op, inputs).unwrap();
        let phi = h.map(f64::abs);
        let field = sample_to_superposition(&s, &phi, 1e-9, 1e-12).unwrap();
        for sample in &s.samples {
            let back = field.eval(&sample.input).unwrap();
            for (a, b) in back.values.iter().zip(&sample.output.values) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let _ = OperatorRep::from(field);
    }

    #[test]
    fn rejects_inconsistent_coincident_inputs() {
        let g = make_interval_grid(0.0, 1.0, 5).unwrap();
        let g1 = tabulate(&g, |w| w[0]).unwrap();
        let g2 = tabulate(&g, |w| w[0] * w[0]).unwrap(); // agrees with g1 at w = 0 and w = 1
        let t1 = GridFunction::constant(&g, 0.0).unwrap();
        let mut t2 = GridFunction::constant(&g, 0.0).unwrap();
        t2.values[4] = 1e-3;
        let s = SampleOperator::new(&g, vec![(g1, t1), (g2, t2)]).unwrap();
        let phi = GridFunction::constant(&g, 1.0).unwrap();
        assert_eq!(
            sample_to_superposition(&s, &phi, 1e-9, 1e-12),
            Err(LlipError::IllDefinedAtPoint {
                index: 4,
                spread: 1e-3
            })
        );
        assert!(sample_to_superposition(&s, &phi, 1e-2, 1e-12).is_ok());
    }

    #[test]
    fn rejects_negative_bound() {
        let g = make_interval_grid(0.0, 1.0, 3).unwrap();
        let s = SampleOperator::new(
            &g,
            vec![(
                GridFunction::constant(&g, 0.0).unwrap(),
                GridFunction::constant(&g, 0.0).unwrap(),
            )],
        )
        .unwrap();
        let mut phi = GridFunction::constant(&g, 1.0).unwrap();
        phi.values[1] = -0.5;
        assert_eq!(
            sample_to_superposition(&s, &phi, 1e-9, 1e-12),
            Err(LlipError::NegativeBound {
                index: 1,
                value: -0.5
            })
        );
    }

    #[test]
    fn tensor_single_unit_term_and_cancellation() {
        let g = make_interval_grid(0.0, 1.0, 4).unwrap();
        let one = GridFunction::constant(&g, 1.0).unwrap();
        let phi = ScalarPwl::new(vec![-1.0, 0.5], vec![2.0, 0.0], 0.0, 1.0).unwrap();
        let t = TensorOperator::new(&g, vec![(one.clone(), phi.clone())]).unwrap();
        let field = tensor_to_superposition(&t).unwrap();
        assert!(field.slices.iter().all(|s| *s == phi));

        let t = TensorOperator::new(
            &g,
            vec![(one.clone(), phi.clone()), (one, phi.scaled(-1.0))],
        )
        .unwrap();
        let field = tensor_to_superposition(&t).unwrap();
        assert!(field
            .slices
            .iter()
            .all(|s| s.lip_constant() == 0.0 && s.eval(0.3) == 0.0));
    }

    #[test]
    fn field_round_trips_through_tensor() {
        let g = make_interval_grid(0.0, 1.0, 3).unwrap();
        let field = SuperpositionField::new(
            &g,
            vec![
                ScalarPwl::identity(),
                ScalarPwl::linear(-2.0, 1.0).unwrap(),
                ScalarPwl::new(vec![0.0, 1.0], vec![0.0, 3.0], 0.0, 0.0).unwrap(),
            ],
        )
        .unwrap();
        let back = tensor_to_superposition(&superposition_to_tensor(&field)).unwrap();
        assert_eq!(back, field);
    }
}
