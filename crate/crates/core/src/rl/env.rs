//! Episodic environment interface and a toy control problem with a known
//! optimum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Final gate fidelity, reported by quantum environments at episode end.
    pub fidelity: Option<f64>,
}

pub trait Env {
    fn state_dim(&self) -> usize;
    /// Per-component action bounds `±b`.
    fn action_bounds(&self) -> Vec<f64>;
    fn reset(&mut self) -> Result<Vec<f64>>;
    fn step(&mut self, action: &[f64]) -> Result<Step>;
}

/// A point on a line, pushed by bounded moves toward the origin.
///
/// State `(x, k/H)`, action `a ∈ [−b, b]`, `x ← x + a` and reward
/// `1 − 4x²` after each of `H` moves, with `x₀ ~ U(−1, 1)`. Moving the
/// full bound toward zero minimizes every term at once, so the greedy
/// policy is optimal and its expected return is closed-form.
#[derive(Debug, Clone)]
pub struct ToyEnv {
    pub horizon: usize,
    pub bound: f64,
    x: f64,
    k: usize,
    rng: ChaCha8Rng,
}

impl ToyEnv {
    pub fn new(seed: u64) -> Self {
        Self { horizon: 8, bound: 0.25, x: 0.0, k: 0, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn observe(&self) -> Vec<f64> {
        vec![self.x, self.k as f64 / self.horizon as f64]
    }

    /// Expected return of the optimal policy:
    /// `H − 4·Σₖ E[max(|x₀| − k·b, 0)²]` with `E[max(u − c, 0)²] = (1 − c)³/3`.
    pub fn optimal_return(&self) -> f64 {
        let penalty: f64 = (1..=self.horizon).map(|k| (1.0 - k as f64 * self.bound).max(0.0).powi(3) / 3.0).sum();
        self.horizon as f64 - 4.0 * penalty
    }

    pub fn greedy_action(state: &[f64], bound: f64) -> f64 {
        (-state[0]).clamp(-bound, bound)
    }
}

impl Env for ToyEnv {
    fn state_dim(&self) -> usize {
        2
    }

    fn action_bounds(&self) -> Vec<f64> {
        vec![self.bound]
    }

    fn reset(&mut self) -> Result<Vec<f64>> {
        self.x = self.rng.random_range(-1.0..1.0);
        self.k = 0;
        Ok(self.observe())
    }

    fn step(&mut self, action: &[f64]) -> Result<Step> {
        ensure!(action.len() == 1, Validation, "toy env takes one action component");
        ensure!(self.k < self.horizon, Contract, "step after episode end");
        self.x += action[0].clamp(-self.bound, self.bound);
        self.k += 1;
        Ok(Step { state: self.observe(), reward: 1.0 - 4.0 * self.x * self.x, done: self.k == self.horizon, fidelity: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_policy_attains_the_closed_form_optimum() {
        let mut env = ToyEnv::new(9);
        let n = 200_000;
        let mut total = 0.0;
        for _ in 0..n {
            let mut s = env.reset().unwrap();
            loop {
                let step = env.step(&[ToyEnv::greedy_action(&s, env.bound)]).unwrap();
                total += step.reward;
                s = step.state;
                if step.done {
                    break;
                }
            }
        }
        let mean = total / n as f64;
        assert!((mean - env.optimal_return()).abs() < 0.01, "{mean} vs {}", env.optimal_return());
        assert!((env.optimal_return() - 7.25).abs() < 1e-12);
    }
}
