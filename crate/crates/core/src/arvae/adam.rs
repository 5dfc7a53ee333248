pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// One bias-corrected Adam update of a flat tensor. `step` counts from 1.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    learning_rate: f64,
) {
    debug_assert!(step >= 1);
    debug_assert_eq!(params.len(), grads.len());
    let c1 = 1.0 - BETA1.powi(step as i32);
    let c2 = 1.0 - BETA2.powi(step as i32);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(m.iter_mut())
        .zip(v.iter_mut())
    {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + EPSILON);
    }
}

/// Adam state for a list of tensors.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(sizes: impl IntoIterator<Item = usize>, learning_rate: f64) -> Self {
        let (m, v) = sizes
            .into_iter()
            .map(|n| (vec![0.0; n], vec![0.0; n]))
            .unzip();
        Self {
            learning_rate,
            step: 0,
            m,
            v,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) {
        assert_eq!(params.len(), self.m.len(), "tensor count changed");
        self.step += 1;
        for (i, (p, g)) in params.into_iter().zip(grads).enumerate() {
            adam_step(
                p,
                g,
                &mut self.m[i],
                &mut self.v[i],
                self.step,
                self.learning_rate,
            );
        }
    }
}
