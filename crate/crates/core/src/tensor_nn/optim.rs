//! Adam with bias correction and the stepwise learning-rate schedule.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};

use super::tensor::{BoundParams, Scalar};

/// Adam optimizer state; moment buffers align with the bound parameters.
pub struct AdamState<T> {
    /// Current learning rate (mutated by [`step_lr`]).
    pub lr: T,
    /// Learning rate the schedule decays from.
    pub base_lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    pub t: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    /// Defaults: beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    pub fn new(lr: T) -> Self {
        Self {
            lr,
            base_lr: lr,
            beta1: T::c(0.9),
            beta2: T::c(0.999),
            eps: T::c(1e-8),
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }
}

/// One Adam step over every trainable parameter.
///
/// Frozen tensors are never touched, even if they carry gradients.
/// A trainable tensor without a gradient is an error. Gradients are
/// cleared after the update.
pub fn adam_step<T: Scalar>(params: &BoundParams<T>, state: &mut AdamState<T>) -> Result<()> {
    if state.m.is_empty() {
        state.m = params.entries.iter().map(|e| vec![T::zero(); e.tensor.len()]).collect();
        state.v = state.m.clone();
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = T::one() - state.beta1.powi(t);
    let bc2 = T::one() - state.beta2.powi(t);
    for (idx, entry) in params.entries.iter().enumerate() {
        if !entry.trainable {
            continue;
        }
        let grad = entry
            .tensor
            .grad_to_vec()
            .ok_or_else(|| CoreError::MissingGrad(entry.name.clone()))?;
        let m = &mut state.m[idx];
        let v = &mut state.v[idx];
        let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.lr, state.eps);
        entry.tensor.update_data(|i, w| {
            let g = grad[i];
            m[i] = b1 * m[i] + (T::one() - b1) * g;
            v[i] = b2 * v[i] + (T::one() - b2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            *w = *w - lr * m_hat / (v_hat.sqrt() + eps);
        });
        entry.tensor.zero_grad();
    }
    Ok(())
}

/// Stepwise decay: `lr = base_lr * gamma^(epoch / step_size)`.
pub fn step_lr<T: Scalar>(state: &mut AdamState<T>, epoch: usize, step_size: usize, gamma: T) {
    debug_assert!(step_size >= 1);
    debug_assert!(gamma > T::zero() && gamma <= T::one());
    let k = (epoch / step_size.max(1)) as i32;
    state.lr = state.base_lr * gamma.powi(k);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_nn::tensor::{ParamEntry, ParamGroup};
    use crate::tensor_nn::{dot_const, matmul};

    fn single_param(value: f32, trainable: bool) -> ParamGroup<f32> {
        let mut g = ParamGroup::new();
        g.push(ParamEntry {
            name: "w".into(),
            shape: vec![1, 1],
            data: vec![value],
            trainable,
        })
        .unwrap();
        g
    }

    #[test]
    fn first_step_moves_by_lr() {
        let group = single_param(0.7, true);
        let bound = group.bind();
        let mut state = AdamState::new(1e-2f32);
        let loss = dot_const(bound.get("w").unwrap(), &[3.0]).unwrap();
        loss.backward();
        adam_step(&bound, &mut state).unwrap();
        let w = bound.get("w").unwrap().to_vec()[0];
        // bias-corrected m_hat/sqrt(v_hat) = sign(g) at t=1
        assert!((w - (0.7 - 1e-2)).abs() < 1e-6, "w = {w}");
    }

    #[test]
    fn frozen_tensor_is_untouched() {
        let group = single_param(0.7, false);
        let bound = group.bind();
        let mut state = AdamState::new(1e-2f32);
        adam_step(&bound, &mut state).unwrap();
        assert_eq!(bound.get("w").unwrap().to_vec(), vec![0.7]);
    }

    #[test]
    fn missing_grad_is_an_error() {
        let group = single_param(0.7, true);
        let bound = group.bind();
        let mut state = AdamState::new(1e-2f32);
        assert!(matches!(adam_step(&bound, &mut state), Err(CoreError::MissingGrad(_))));
    }

    #[test]
    fn adam_converges_on_quadratic() {
        // f(w) = w^2 from w = 1 at lr 0.01 for 500 steps
        let group = single_param(1.0, true);
        let bound = group.bind();
        let mut state = AdamState::new(1e-2f64 as f32);
        for _ in 0..500 {
            let w = bound.get("w").unwrap();
            let loss = matmul(w, w).unwrap();
            loss.backward();
            adam_step(&bound, &mut state).unwrap();
        }
        let w = bound.get("w").unwrap().to_vec()[0];
        assert!(w.abs() < 0.05, "w = {w}");
    }

    #[test]
    fn step_lr_schedule() {
        let mut state = AdamState::new(1e-4f64);
        step_lr(&mut state, 100, 250, 0.75);
        assert!((state.lr - 1e-4).abs() < 1e-18);
        step_lr(&mut state, 500, 250, 0.75);
        assert!((state.lr - 1e-4 * 0.75 * 0.75).abs() < 1e-18);
        step_lr(&mut state, 999, 250, 1.0);
        assert!((state.lr - 1e-4).abs() < 1e-18);
    }
}
