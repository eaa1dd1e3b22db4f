//! Matérn correlation `k(r) = 2^{1-ν}/Γ(ν) (√(2ν) r)^ν K_ν(√(2ν) r)`.

use statrs::function::gamma::ln_gamma;

/// Matérn correlation at scaled distance `r = ‖x - y‖ / ℓ`, with `k(0) = 1`.
pub fn matern(r: f64, nu: f64) -> f64 {
    if r <= 0.0 {
        return 1.0;
    }
    let p = nu - 0.5;
    if p >= 0.0 && p.fract() == 0.0 && p <= 20.0 {
        return matern_half_integer(r, p as u32);
    }
    let z = (2.0 * nu).sqrt() * r;
    let scaled = scaled_bessel_k(nu, z);
    ((1.0 - nu) * std::f64::consts::LN_2 - ln_gamma(nu) + nu * z.ln() - z + scaled.ln()).exp()
}

// ν = p + 1/2 has the closed form
// exp(-√(2ν) r) · p!/(2p)! · Σ_{i≤p} (p+i)!/(i!(p-i)!) (2√(2ν) r)^{p-i}.
fn matern_half_integer(r: f64, p: u32) -> f64 {
    let nu = p as f64 + 0.5;
    let z = (2.0 * nu).sqrt() * r;
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    let lead = fact(p) / fact(2 * p);
    let poly: f64 = (0..=p)
        .map(|i| fact(p + i) / (fact(i) * fact(p - i)) * (2.0 * z).powi((p - i) as i32))
        .sum();
    (-z).exp() * lead * poly
}

/// `e^z K_ν(z)` from `K_ν(z) = ∫_0^∞ exp(-z cosh t) cosh(νt) dt`.
///
/// The integrand is analytic and doubly-exponentially decaying, so the
/// trapezoid rule converges geometrically in the step size.
fn scaled_bessel_k(nu: f64, z: f64) -> f64 {
    let h = 0.02;
    let term = |t: f64| (-z * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    let mut sum = 0.5 * term(0.0);
    let mut k = 1;
    loop {
        let v = term(k as f64 * h);
        sum += v;
        if v < 1e-18 * sum || k > 200_000 {
            break;
        }
        k += 1;
    }
    sum * h
}
