use super::params::ParamVector;
use super::train::TrainConfig;
use crate::Result;

/// Adam first and second moments plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(
    params: &mut ParamVector,
    gradient: &ParamVector,
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<()> {
    params.ensure_same_layout(gradient)?;
    if state.m.len() != params.len() {
        return Err(crate::Error::LayoutMismatch);
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (((w, g), m), v) in params
        .values
        .iter_mut()
        .zip(&gradient.values)
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *w -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::nn::Layout;

    fn vec_of(values: Vec<f64>) -> ParamVector {
        let mut l = Layout::default();
        l.push("w", vec![values.len()]);
        ParamVector::new(values, Arc::new(l)).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec_of(vec![1.0, -2.0]);
        let g = p.zeros_like();
        let mut s = AdamState::new(2);
        adam_step(&mut p, &g, &mut s, &TrainConfig::default()).unwrap();
        assert_eq!(p.values, vec![1.0, -2.0]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate_against_sign() {
        let cfg = TrainConfig::default();
        let mut p = vec_of(vec![0.0, 0.0, 0.0]);
        let g = vec_of(vec![3.0, -0.001, 250.0]);
        let mut s = AdamState::new(3);
        adam_step(&mut p, &g, &mut s, &cfg).unwrap();
        for (w, gi) in p.values.iter().zip(&g.values) {
            assert!((w + cfg.learning_rate * gi.signum()).abs() < 1e-6);
        }
    }

    #[test]
    fn identical_calls_agree() {
        let cfg = TrainConfig::default();
        let g = vec_of(vec![0.3, -0.7]);
        let run = || {
            let mut p = vec_of(vec![0.5, 0.5]);
            let mut s = AdamState::new(2);
            adam_step(&mut p, &g, &mut s, &cfg).unwrap();
            adam_step(&mut p, &g, &mut s, &cfg).unwrap();
            (p, s)
        };
        assert_eq!(run(), run());
    }
}
