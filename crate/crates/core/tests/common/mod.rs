use kernel_lab::ntk::{gradient, init_symmetric, loss, NetworkState};
use kernel_lab::{sample_iid, Domain, PointSet};

/// Largest relative deviation of the analytic gradient from central
/// differences with step `h`, in the Euclidean norm.
pub fn gradient_error(state: &NetworkState, x: &PointSet, y: &[f64], h: f64) -> f64 {
    let (grad, _) = gradient(state, x, y);
    let p = state.params();
    let mut probe = state.clone();
    let mut fd = vec![0.0; p.len()];
    for k in 0..p.len() {
        let mut q = p.clone();
        q[k] = p[k] + h;
        probe.set_params(&q);
        let up = loss(&probe, x, y);
        q[k] = p[k] - h;
        probe.set_params(&q);
        let down = loss(&probe, x, y);
        fd[k] = (up - down) / (2.0 * h);
    }
    let diff: f64 = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = grad.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / scale
}

/// The 20 small instances (m ≤ 16, n ≤ 8, d ≤ 4) of the gradient check,
/// each moved off the symmetric point so every gradient block is active.
pub fn gradient_instances() -> Vec<(String, NetworkState, PointSet, Vec<f64>)> {
    (0..20u64)
        .map(|case| {
            let m = 2 * (1 + case as usize % 8);
            let n = 1 + case as usize % 8;
            let d = 2 + case as usize % 3;
            let mut s = init_symmetric(m, d, case).unwrap();
            let p: Vec<f64> = s
                .params()
                .iter()
                .enumerate()
                .map(|(k, v)| v + 0.1 * ((k as f64 + case as f64) * 1.7).sin())
                .collect();
            s.set_params(&p);
            let x = sample_iid(&Domain::Sphere { d }, n, 1000 + case).unwrap();
            let y: Vec<f64> = (0..n).map(|i| ((i + 1) as f64 * 0.9).cos()).collect();
            (format!("case {case} (m={m}, n={n}, d={d})"), s, x, y)
        })
        .collect()
}
