//! Shared numerical routines: quadrature, interpolation, root finding,
//! regression, special functions, and empirical-distribution tests.

/// Nodes and weights of the ascending `n`-point Gauss-Legendre rule on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; accurate to machine precision
/// for the orders used here (n <= a few hundred).
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    let m = n.div_ceil(2);
    for i in 0..m {
        // Initial guess (Abramowitz-Stegun 25.4.38).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0_f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((-x, w));
    }
    for i in (0..n - m).rev() {
        let (x, w) = out[i];
        out.push((-x, w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Nodes and weights mapped onto [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    gauss_legendre(n)
        .into_iter()
        .map(|(x, w)| (mid + half * x, half * w))
        .collect()
}

/// Monotone cubic (Fritsch-Carlson / PCHIP) interpolant on an ascending grid.
///
/// Shape-preserving: it never overshoots the data, which keeps interpolated
/// phase shifts branch-continuous and interpolated log-rates monotone where
/// the nodes are. Outside the grid it clamps to the end values.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(x.len() >= 2, "need at least two nodes");
        assert!(x.windows(2).all(|w| w[1] > w[0]), "grid must ascend");
        let n = x.len();
        let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        // Secant end slopes stay within the Fritsch-Carlson monotone region.
        d[0] = delta[0];
        d[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                d[i] = 0.0;
            } else {
                // Weighted harmonic mean of adjacent secants.
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        Self { x: x.to_vec(), y: y.to_vec(), d }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let k = match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let (y0, y1, d0, d1) = (self.y[k], self.y[k + 1], self.d[k], self.d[k + 1]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }
}

/// Find the root of a continuous, strictly monotone function on [lo, hi].
///
/// Safeguarded secant/bisection hybrid; `f(lo)` and `f(hi)` must bracket zero.
pub fn bracketed_root<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
) -> f64 {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    assert!(
        flo * fhi <= 0.0,
        "root not bracketed: f({lo}) = {flo}, f({hi}) = {fhi}"
    );
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        // Secant estimate, clipped into the bracket interior.
        let mut mid = (lo * fhi - hi * flo) / (fhi - flo);
        let width = hi - lo;
        if !(mid > lo + 1e-3 * width && mid < hi - 1e-3 * width) {
            mid = 0.5 * (lo + hi);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm * flo < 0.0 {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
        if hi - lo <= rel_tol * hi.abs().max(lo.abs()).max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Ordinary least-squares line fit `y = a + b x`.
///
/// Returns `(intercept, slope, slope_stderr, r_squared)`. The slope standard
/// error comes from the residual variance; with fewer than three points it is
/// reported as zero.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    assert!(x.len() >= 2);
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(u, v)| {
            let r = v - (intercept + slope * u);
            r * r
        })
        .sum();
    let stderr = if x.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (intercept, slope, stderr, r2)
}

/// Dawson integral D(x) = exp(-x^2) ∫_0^x exp(t^2) dt.
///
/// Rybicki's sampling theorem: D(x) = (1/√π) Σ_{n odd} exp(-(x - n h)^2)/n as
/// h → 0; the truncation error at h = 0.2 is ~exp(-(π/2h)²) ≈ 1e-26, far below
/// f64 resolution. Small arguments use the Taylor series.
pub fn dawson(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 0.2 {
        let x2 = x * x;
        return x
            * (1.0
                - 2.0 * x2 / 3.0
                    * (1.0 - 2.0 * x2 / 5.0 * (1.0 - 2.0 * x2 / 7.0 * (1.0 - 2.0 * x2 / 9.0))));
    }
    const H: f64 = 0.2;
    // Nearest odd integer to ax/H.
    let q = ax / H;
    let mut n0 = q.round() as i64;
    if n0 % 2 == 0 {
        n0 += if q >= n0 as f64 { 1 } else { -1 };
    }
    let mut sum = 0.0;
    let mut n = n0 - 66; // same parity as n0: the sum runs over odd n only
    while n <= n0 + 66 {
        let t = ax - n as f64 * H;
        if t.abs() < 6.5 && n != 0 {
            sum += (-t * t).exp() / n as f64;
        }
        n += 2;
    }
    let d = sum / std::f64::consts::PI.sqrt();
    if x >= 0.0 {
        d
    } else {
        -d
    }
}

/// Error function, from the Chebyshev erfc fit of Numerical Recipes §6.2
/// (fractional error below 1.2e-7 everywhere).
pub fn erf(x: f64) -> f64 {
    1.0 - erfc(x)
}

/// Complementary error function; same accuracy as [`erf`].
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 2.0 / (2.0 + z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// exp(-x^2) * erfi(x) = (2/√π) D(x); avoids overflowing erfi itself.
pub fn exp_mx2_erfi(x: f64) -> f64 {
    2.0 / std::f64::consts::PI.sqrt() * dawson(x)
}

/// Asymptotic Kolmogorov-Smirnov tail probability Q(λ) = 2 Σ (-1)^{k-1} e^{-2k²λ²}.
pub fn ks_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test p-value against a CDF given as a closure.
pub fn ks_test_cdf<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &s) in samples.iter().enumerate() {
        let c = cdf(s);
        let hi = (i as f64 + 1.0) / n - c;
        let lo = c - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    let sqrt_n = n.sqrt();
    ks_q((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)
}

/// Two-sample KS test p-value.
pub fn ks_test_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let (va, vb) = (a[i], b[j]);
        if va <= vb {
            i += 1;
        }
        if vb <= va {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    ks_q((ne + 0.12 + 0.11 / ne) * d)
}

/// Mean and standard error of a sample.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
