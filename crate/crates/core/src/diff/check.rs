use super::tape::{Tape, Var};
use crate::scalar::Scalar;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-6;

/// Largest disagreement between reverse-mode gradients of `f` at `at` and
/// central finite differences with step [`FD_STEP`].
///
/// The error per coordinate is `|g_ad - g_fd| / max(1, |g_ad|, |g_fd|)`:
/// relative for gradients of magnitude above one, absolute below.
pub fn finite_diff_check<F>(f: F, at: &[f64]) -> f64
where
    F: for<'t> Fn(&[Var<'t>]) -> Var<'t>,
{
    let tape = Tape::new();
    let xs = tape.vars(at);
    let grads = f(&xs).backward().wrt_all(&xs);

    let eval = |x: &[f64]| -> f64 {
        let consts: Vec<Var<'_>> = x.iter().map(|&v| Var::constant(v)).collect();
        f(&consts).value()
    };

    let mut worst = 0.0f64;
    let mut x = at.to_vec();
    for i in 0..at.len() {
        x[i] = at[i] + FD_STEP;
        let up = eval(&x);
        x[i] = at[i] - FD_STEP;
        let down = eval(&x);
        x[i] = at[i];
        let fd = (up - down) / (2.0 * FD_STEP);
        let ad = grads[i];
        let err = (ad - fd).abs() / 1f64.max(ad.abs()).max(fd.abs());
        if err.is_nan() {
            return f64::INFINITY;
        }
        worst = worst.max(err);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::ops::distance;
    use crate::scalar::{constants, sum};

    #[test]
    fn linear_function_is_exact() {
        let coeffs = [0.5, -1.25, 2.0, 3.5];
        let err = finite_diff_check(
            |x| sum(x.iter().zip(&coeffs).map(|(&v, &c)| v.scale(c))),
            &[0.3, -0.7, 1.1, 0.05],
        );
        assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn distance_to_fixed_point() {
        let c = [0.2, -0.45, 0.1];
        let err = finite_diff_check(|x| distance(x, &constants(&c)), &[-0.3, 0.25, 0.6]);
        assert!(err <= 1e-5, "{err}");
    }

    #[test]
    fn squared_distance_matches() {
        let c = [0.6, 0.1];
        let err = finite_diff_check(
            |x| {
                let d = distance(x, &constants(&c));
                d * d
            },
            &[-0.1, 0.3],
        );
        assert!(err <= 1e-4, "{err}");
    }
}
