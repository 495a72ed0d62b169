use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::net::Params;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |b: f64| (0.0..1.0).contains(&b);
        if !ok(self.beta1) || !ok(self.beta2) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("invalid Adam settings {self:?}")));
        }
        Ok(())
    }
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &Params) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.data.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update of every parameter.
pub fn adam_step(params: &mut Params, grads: &Params, state: &mut AdamState, lr: f64, cfg: &AdamConfig) {
    assert_eq!(params.len(), grads.len(), "gradient layout differs from parameters");
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads.iter())
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        for i in 0..p.data.len() {
            let gi = g.data[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p.data[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauConfig {
    pub patience: usize,
    pub factor: f64,
    pub min_lr: f64,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self {
            patience: 3,
            factor: 0.5,
            min_lr: 1e-6,
        }
    }
}

impl PlateauConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patience == 0 || !(self.factor > 0.0 && self.factor < 1.0) || !(self.min_lr >= 0.0) {
            return Err(Error::InvalidConfig(format!("invalid plateau settings {self:?}")));
        }
        Ok(())
    }
}

/// Epoch indices (0-based) at which a reduction fires.
///
/// An epoch improves only if its loss is strictly below the best so far.
/// After `patience` consecutive non-improving epochs the rate is reduced and
/// the stall counter starts again from zero.
pub fn plateau_triggers(history: &[f64], patience: usize) -> Vec<usize> {
    let mut best = f64::INFINITY;
    let mut stall = 0;
    let mut out = Vec::new();
    for (i, &loss) in history.iter().enumerate() {
        if loss < best {
            best = loss;
            stall = 0;
        } else {
            stall += 1;
            if stall >= patience {
                out.push(i);
                stall = 0;
            }
        }
    }
    out
}

/// Learning rate to use after the last epoch in `history`.
pub fn plateau_scheduler(history: &[f64], patience: usize, factor: f64, min_lr: f64, current_lr: f64) -> f64 {
    match history.len().checked_sub(1) {
        Some(last) if plateau_triggers(history, patience.max(1)).last() == Some(&last) => {
            (current_lr * factor).max(min_lr)
        }
        _ => current_lr,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segnet::net::Param;

    fn scalar(x: f64) -> Params {
        Params::new(vec![Param {
            name: "x".into(),
            shape: vec![1],
            data: vec![x],
        }])
        .unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = scalar(1.5);
        let mut s = AdamState::new(&p);
        for _ in 0..3 {
            adam_step(&mut p, &scalar(0.0), &mut s, 0.1, &AdamConfig::default());
        }
        assert_eq!(p.iter().next().unwrap().data[0], 1.5);
        assert_eq!(s.step(), 3);
    }

    #[test]
    fn first_step_moves_by_lr() {
        for g in [-3.0, 1e-3, 250.0] {
            let mut p = scalar(0.0);
            let mut s = AdamState::new(&p);
            adam_step(&mut p, &scalar(g), &mut s, 0.01, &AdamConfig::default());
            let x = p.iter().next().unwrap().data[0];
            assert!((x.abs() - 0.01).abs() < 1e-6 * (1.0 + 1.0 / g.abs()), "{g}: {x}");
            assert_eq!(x.signum(), -g.signum());
        }
    }

    #[test]
    fn plateau_cases() {
        assert_eq!(plateau_triggers(&[1.0, 0.9, 0.9, 0.9], 2), vec![3]);
        assert_eq!(plateau_scheduler(&[1.0, 0.9, 0.9, 0.9], 2, 0.5, 0.0, 0.1), 0.05);
        assert_eq!(plateau_scheduler(&[1.0, 0.9, 0.9], 2, 0.5, 0.0, 0.1), 0.1);
        let falling: Vec<f64> = (0..20).map(|i| 1.0 / (i + 1) as f64).collect();
        assert!(plateau_triggers(&falling, 1).is_empty());
        assert_eq!(plateau_scheduler(&[1.0, 1.0], 1, 0.1, 0.05, 0.1), 0.05);
        // counter restarts after a reduction
        assert_eq!(plateau_triggers(&[1.0, 2.0, 2.0, 2.0, 2.0, 0.5], 2), vec![2, 4]);
    }
}
