use crate::error::{Result, SmkError};
use crate::semi_markov::SemiMarkovModel;

use super::{build_generator, Method, SolutionGrid};

/// `π(t) = e^{tG}` at each requested time (Padé scaling and squaring).
pub fn solve_markov(model: &SemiMarkovModel, times: &[f64]) -> Result<SolutionGrid> {
    if let Some(i) = (0..model.n_states()).find(|&i| !model.exponent(i).is_markov()) {
        return Err(SmkError::WrongLaw(format!(
            "state {i} has law {:?}; the matrix exponential needs exponential holding times everywhere",
            model.exponent(i)
        )));
    }
    if let Some(&t) = times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(SmkError::InvalidParams(format!(
            "time {t} must be finite and nonnegative"
        )));
    }
    let g = build_generator(model).g;
    let values = times.iter().map(|&t| (&g * t).exp()).collect();
    Ok(SolutionGrid::new(times.to_vec(), values, Method::MatrixExp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::BernsteinSpec;

    #[test]
    fn two_state_closed_form() {
        let m = SemiMarkovModel::two_state_symmetric(BernsteinSpec::MarkovDegenerate, 1.0).unwrap();
        let grid = solve_markov(&m, &[0.0, 1.0]).unwrap();
        assert_eq!(grid.values[0], nalgebra::DMatrix::identity(2, 2));
        let want = 0.5 * (1.0 + (-2.0f64).exp());
        assert!((grid.values[1][(0, 0)] - want).abs() < 1e-12);
        assert!((grid.values[1][(0, 0)] - 0.56766764).abs() < 1e-8);
        grid.check_stochastic(1e-12, 1e-12).unwrap();
    }

    #[test]
    fn wrong_law() {
        let m =
            SemiMarkovModel::two_state_symmetric(BernsteinSpec::stable(0.5).unwrap(), 1.0).unwrap();
        assert!(matches!(
            solve_markov(&m, &[1.0]),
            Err(SmkError::WrongLaw(_))
        ));
    }
}
