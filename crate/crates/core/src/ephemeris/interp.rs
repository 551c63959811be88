/// Lagrange basis weights for interpolating at `x` through nodes `xs`.
pub fn lagrange_weights(xs: &[f64], x: f64) -> Vec<f64> {
    let n = xs.len();
    let mut w = vec![1.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w[i] *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
    }
    w
}

/// Weights of the first derivative of the Lagrange interpolant at `x`.
pub fn lagrange_derivative_weights(xs: &[f64], x: f64) -> Vec<f64> {
    let n = xs.len();
    let mut dw = vec![0.0; n];
    for i in 0..n {
        let mut denom = 1.0;
        for j in 0..n {
            if j != i {
                denom *= xs[i] - xs[j];
            }
        }
        let mut sum = 0.0;
        for k in 0..n {
            if k == i {
                continue;
            }
            let mut prod = 1.0;
            for j in 0..n {
                if j != i && j != k {
                    prod *= x - xs[j];
                }
            }
            sum += prod;
        }
        dw[i] = sum / denom;
    }
    dw
}

const NODES9: [f64; 9] = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
// prod_{j != i} (i - j) for nodes 0..8
const DENOM9: [f64; 9] = [40320.0, -5040.0, 1440.0, -720.0, 576.0, -720.0, 1440.0, -5040.0, 40320.0];

pub(crate) fn lagrange_weights_uniform(s: f64) -> [f64; 9] {
    let mut w = [0.0; 9];
    if let Some(k) = NODES9.iter().position(|&n| n == s) {
        w[k] = 1.0;
        return w;
    }
    let full: f64 = NODES9.iter().map(|n| s - n).product();
    for i in 0..9 {
        w[i] = full / ((s - NODES9[i]) * DENOM9[i]);
    }
    w
}

pub(crate) fn lagrange_derivative_weights_uniform(s: f64) -> [f64; 9] {
    let v = lagrange_derivative_weights(&NODES9, s);
    std::array::from_fn(|i| v[i])
}
