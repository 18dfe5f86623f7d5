use super::matrix::Matrix;
use super::tape::{Tape, Var};
use crate::error::Result;

/// Denominator floor for the relative error, so gradients that are
/// numerically zero are compared on an absolute scale.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct InputReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Elements whose `±step` perturbation flipped a ReLU.
    pub excluded_kinks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub inputs: Vec<InputReport>,
    pub tolerance: f64,
}

impl GradcheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.inputs.iter().fold(0.0, |m, r| m.max(r.max_rel_error))
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares reverse-mode gradients of the scalar program `f` against
/// central differences, element by element.
///
/// Every input is recorded as a gradient-requiring leaf. Elements where
/// either perturbed evaluation changes the sign pattern of any ReLU are
/// skipped and listed in `excluded_kinks`.
pub fn gradcheck<F>(f: F, inputs: &[Matrix], step: f64, tol: f64) -> Result<GradcheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    assert!(step > 0.0 && tol > 0.0, "gradcheck needs positive step and tolerance");

    let run = |values: &[Matrix]| -> Result<(Tape, Vec<Var>, Var)> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|m| tape.param(m.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok((tape, vars, out))
    };

    let (tape, vars, out) = run(inputs)?;
    let grads = tape.backward(out)?;
    let base_pattern = tape.relu_pattern();

    let mut reports = Vec::with_capacity(inputs.len());
    let mut perturbed: Vec<Matrix> = inputs.to_vec();
    for (i, var) in vars.iter().enumerate() {
        let analytic = grads
            .get(*var)
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(inputs[i].rows(), inputs[i].cols()));
        let mut report = InputReport {
            max_rel_error: 0.0,
            checked: 0,
            excluded_kinks: Vec::new(),
        };
        for e in 0..inputs[i].len() {
            let orig = inputs[i].data()[e];

            perturbed[i].data_mut()[e] = orig + step;
            let (tp, _, op) = run(&perturbed)?;
            perturbed[i].data_mut()[e] = orig - step;
            let (tm, _, om) = run(&perturbed)?;
            perturbed[i].data_mut()[e] = orig;

            if tp.relu_pattern() != base_pattern || tm.relu_pattern() != base_pattern {
                report.excluded_kinks.push(e);
                continue;
            }
            let numeric = (tp.value(op).item() - tm.value(om).item()) / (2.0 * step);
            let err = relative_error(analytic.data()[e], numeric);
            report.max_rel_error = report.max_rel_error.max(err);
            report.checked += 1;
        }
        reports.push(report);
    }
    Ok(GradcheckReport {
        inputs: reports,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_program_is_exact() {
        let w = Matrix::from_rows(&[vec![0.5, -1.0, 2.0]]).unwrap();
        let x = Matrix::from_rows(&[vec![1.0], vec![-2.0], vec![0.25]]).unwrap();
        let report = gradcheck(
            |t, v| {
                let y = t.matmul(v[0], v[1])?;
                t.sum_all(y)
            },
            &[w, x],
            1e-5,
            1e-8,
        )
        .unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn relu_kink_is_excluded() {
        // 5e-6 sits within one step of the kink at zero.
        let x = Matrix::row_vector(&[5e-6, 1.0, -1.0]);
        let report = gradcheck(
            |t, v| {
                let y = t.relu(v[0])?;
                t.sum_all(y)
            },
            &[x],
            1e-5,
            1e-8,
        )
        .unwrap();
        assert_eq!(report.inputs[0].excluded_kinks, vec![0]);
        assert_eq!(report.inputs[0].checked, 2);
        assert!(report.passed());
    }
}
