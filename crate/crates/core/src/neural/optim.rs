use super::tensor::{lit, Scalar};

pub const DEFAULT_LEARNING_RATE: f64 = 1e-4;

/// Adam moments for a fixed list of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T> {
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(shapes: &[usize], learning_rate: f64) -> Self {
        OptimizerState {
            m: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn for_params(params: &super::Params<T>, learning_rate: f64) -> Self {
        let shapes: Vec<usize> = params.slices().iter().map(|s| s.len()).collect();
        Self::new(&shapes, learning_rate)
    }

    /// One Adam step over matching lists of parameters and gradients.
    pub fn apply(&mut self, params: Vec<&mut [T]>, grads: Vec<&[T]>) {
        assert_eq!(params.len(), self.m.len(), "optimizer tensor count");
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (lit::<T>(self.beta1), lit::<T>(self.beta2));
        let c1 = lit::<T>(1.0 - self.beta1.powi(t));
        let c2 = lit::<T>(1.0 - self.beta2.powi(t));
        let lr = lit::<T>(self.learning_rate);
        let eps = lit::<T>(self.eps);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (T::one() - b1) * g[i];
                v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
                let mhat = m[i] / c1;
                let vhat = v[i] / c2;
                p[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut opt = OptimizerState::<f64>::new(&[1], DEFAULT_LEARNING_RATE);
        let mut p = [0.5];
        opt.apply(vec![&mut p], vec![&[1.0]]);
        assert!((0.5 - p[0] - 1e-4).abs() < 1e-10);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut opt = OptimizerState::<f64>::new(&[2], 0.05);
        let mut p = [3.0, -2.0];
        for _ in 0..2000 {
            let g = [2.0 * p[0], 2.0 * p[1]];
            opt.apply(vec![&mut p], vec![&g]);
        }
        assert!(p.iter().all(|x| x.abs() < 1e-2), "{p:?}");
    }
}
