use std::collections::HashMap;

use crate::params::Params;

/// Adam with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
    moments: HashMap<String, (Vec<f64>, Vec<f64>)>,
}

/// Biases and the task-weighting scalars are not decayed.
fn decays(name: &str) -> bool {
    !(name.ends_with("bias") || name.ends_with("attn_b") || name.ends_with("task_weights"))
}

impl AdamW {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            moments: HashMap::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step<P: Params>(&mut self, params: &mut P, grads: &P) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let mut g: HashMap<String, Vec<f64>> = HashMap::new();
        grads.visit("", &mut |name, v| {
            g.insert(name.to_string(), v.to_vec());
        });
        let (lr, b1, b2, eps, wd) = (self.lr, self.beta1, self.beta2, self.eps, self.weight_decay);
        let moments = &mut self.moments;
        params.visit_mut("", &mut |name, theta| {
            let Some(grad) = g.get(name) else { return };
            let (m, v) = moments
                .entry(name.to_string())
                .or_insert_with(|| (vec![0.0; theta.len()], vec![0.0; theta.len()]));
            let decay = if decays(name) { lr * wd } else { 0.0 };
            for i in 0..theta.len() {
                theta[i] -= decay * theta[i];
                m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
                v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                theta[i] -= lr * mh / (vh.sqrt() + eps);
            }
        });
    }
}
