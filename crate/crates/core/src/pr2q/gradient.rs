//! Policy gradients of a softmax policy over own actions in one state, with
//! every expectation enumerated. `q[a][o]` is the joint action value and
//! `cond[a][o]` an opponent conditional `pi(o | a)`.

use super::soft::opponent_conditional;

/// Softmax of logits.
pub fn policy(theta: &[f64]) -> Vec<f64> {
    opponent_conditional(theta).expect("finite logits")
}

/// `d/d theta_k log pi(a) = [a == k] - pi(k)`.
fn score(pi: &[f64], a: usize) -> Vec<f64> {
    (0..pi.len())
        .map(|k| f64::from(u8::from(k == a)) - pi[k])
        .collect()
}

/// `sum_a pi(a) sum_o cond(o|a) q(a,o)`.
pub fn objective(theta: &[f64], cond: &[Vec<f64>], q: &[Vec<f64>]) -> f64 {
    let pi = policy(theta);
    (0..pi.len())
        .map(|a| pi[a] * cond[a].iter().zip(&q[a]).map(|(c, v)| c * v).sum::<f64>())
        .sum()
}

/// Exact recursive-reasoning gradient with the true opponent conditional:
/// `E_{a~pi}[grad log pi(a) * sum_o cond(o|a) q(a,o)]`.
pub fn exact_gradient(theta: &[f64], cond: &[Vec<f64>], q: &[Vec<f64>]) -> Vec<f64> {
    let pi = policy(theta);
    let mut g = vec![0.0; pi.len()];
    for a in 0..pi.len() {
        let inner: f64 = cond[a].iter().zip(&q[a]).map(|(c, v)| c * v).sum();
        for (gk, sk) in g.iter_mut().zip(score(&pi, a)) {
            *gk += pi[a] * sk * inner;
        }
    }
    g
}

/// The same gradient with opponent actions drawn from an approximation `rho`
/// and reweighted by `cond(o|a) / rho(o|a)`. Entries with `rho = 0` contribute
/// nothing, as they are never drawn.
pub fn importance_weighted_gradient(
    theta: &[f64],
    cond: &[Vec<f64>],
    rho: &[Vec<f64>],
    q: &[Vec<f64>],
) -> Vec<f64> {
    let pi = policy(theta);
    let mut g = vec![0.0; pi.len()];
    for a in 0..pi.len() {
        let inner: f64 = (0..q[a].len())
            .filter(|&o| rho[a][o] > 0.0)
            .map(|o| rho[a][o] * (cond[a][o] / rho[a][o]) * q[a][o])
            .sum();
        for (gk, sk) in g.iter_mut().zip(score(&pi, a)) {
            *gk += pi[a] * sk * inner;
        }
    }
    g
}

/// Gradient under the independent factorization: opponents ignore `a`.
pub fn non_correlated_gradient(theta: &[f64], opponent: &[f64], q: &[Vec<f64>]) -> Vec<f64> {
    let cond = vec![opponent.to_vec(); theta.len()];
    exact_gradient(theta, &cond, q)
}
