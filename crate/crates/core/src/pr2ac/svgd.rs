//! Stein variational directions with a radial-basis kernel
//! `k(x, y) = exp(-|x - y|^2 / h)`.

use ndarray::{Array2, ArrayView2};

use crate::{Error, Result};

fn sq_dist(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn rbf_kernel(x: &[f64], y: &[f64], h: f64) -> f64 {
    let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d / h).exp()
}

/// Median heuristic: `h = med^2 / ln(M + 1)` over pairwise distances of the
/// `M` particles (rows). Falls back to 1 when there is no pair or the median
/// distance is zero.
pub fn median_bandwidth(particles: ArrayView2<'_, f64>) -> f64 {
    let m = particles.nrows();
    let mut d2 = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for j in 0..m {
        for k in j + 1..m {
            d2.push(sq_dist(particles.row(j), particles.row(k)));
        }
    }
    if d2.is_empty() {
        return 1.0;
    }
    d2.sort_by(f64::total_cmp);
    let n = d2.len();
    let med2 = if n % 2 == 1 {
        d2[n / 2]
    } else {
        0.5 * (d2[n / 2 - 1] + d2[n / 2])
    };
    if med2 > 0.0 {
        med2 / ((m + 1) as f64).ln()
    } else {
        1.0
    }
}

/// `delta_j = 1/M sum_k [k(a_k, a_j) score_k + grad_{a_k} k(a_k, a_j)]`.
///
/// `particles` and `scores` have one row per particle; `scores` holds the
/// gradient of the target log-density at each particle. `bandwidth: None`
/// applies the median heuristic.
pub fn svgd_directions(
    particles: ArrayView2<'_, f64>,
    scores: ArrayView2<'_, f64>,
    bandwidth: Option<f64>,
) -> Result<Array2<f64>> {
    let (m, d) = particles.dim();
    if m == 0 {
        return Err(Error::Empty("particle set"));
    }
    if scores.dim() != (m, d) {
        return Err(Error::Shape {
            expected: m * d,
            got: scores.len(),
        });
    }
    if scores.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("critic action-gradient".into()));
    }
    let h = bandwidth.unwrap_or_else(|| median_bandwidth(particles));
    let mut out = Array2::zeros((m, d));
    for j in 0..m {
        let aj = particles.row(j);
        for k in 0..m {
            let ak = particles.row(k);
            let kv = (-sq_dist(ak, aj) / h).exp();
            for c in 0..d {
                // grad_{a_k} exp(-|a_k - a_j|^2 / h) = -2 (a_k - a_j) / h * k
                out[[j, c]] += kv * scores[[k, c]] - 2.0 * (ak[c] - aj[c]) / h * kv;
            }
        }
    }
    out.mapv_inplace(|v| v / m as f64);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_particle_is_plain_gradient() {
        let p = array![[3.7, -1.0]];
        let g = array![[0.123456789, -9.87654321]];
        assert_eq!(median_bandwidth(p.view()), 1.0);
        assert_eq!(svgd_directions(p.view(), g.view(), None).unwrap(), g);
    }

    #[test]
    fn coincident_particles_without_score_stay() {
        let p = array![[2.0], [2.0]];
        let g = array![[0.0], [0.0]];
        let d = svgd_directions(p.view(), g.view(), None).unwrap();
        assert_eq!(d, array![[0.0], [0.0]]);
    }

    #[test]
    fn repulsion_pushes_apart() {
        let p = array![[-1.0], [1.0]];
        let g = array![[0.0], [0.0]];
        let d = svgd_directions(p.view(), g.view(), Some(1.0)).unwrap();
        assert!(d[[0, 0]] < 0.0 && d[[1, 0]] > 0.0);
        assert!((d[[0, 0]] + d[[1, 0]]).abs() < 1e-15);
    }

    #[test]
    fn median_heuristic_value() {
        // Pairwise squared distances 1, 4, 9; median 4; M = 3.
        let p = array![[0.0], [1.0], [3.0]];
        assert!((median_bandwidth(p.view()) - 4.0 / 4f64.ln()).abs() < 1e-15);
        assert_eq!(rbf_kernel(&[1.0], &[1.0], 0.3), 1.0);
    }

    #[test]
    fn matches_direct_formula() {
        let p = array![[0.5], [-0.2], [1.1]];
        let g = array![[1.0], [-2.0], [0.3]];
        let h = 0.7;
        let d = svgd_directions(p.view(), g.view(), Some(h)).unwrap();
        for j in 0..3 {
            let mut want = 0.0;
            for k in 0..3 {
                let kv = rbf_kernel(&[p[[k, 0]]], &[p[[j, 0]]], h);
                let eps = 1e-6;
                let dk = (rbf_kernel(&[p[[k, 0]] + eps], &[p[[j, 0]]], h)
                    - rbf_kernel(&[p[[k, 0]] - eps], &[p[[j, 0]]], h))
                    / (2.0 * eps);
                want += kv * g[[k, 0]] + dk;
            }
            assert!((d[[j, 0]] - want / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_scores() {
        let p = array![[0.0]];
        assert!(svgd_directions(p.view(), array![[f64::NAN]].view(), None).is_err());
        assert!(svgd_directions(p.view(), array![[0.0, 1.0]].view(), None).is_err());
    }
}
