use std::f64::consts::PI;

/// `J_n(x)` for `x ≥ 0`.
///
/// For `x` below `n` the ascending series is summed; otherwise Miller's
/// backward recurrence from far above `n`, normalized with
/// `J_0 + 2Σ J_{2k} = 1`.
pub fn bessel_j(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x < 1.0 + n as f64 * 0.5 || x < 2.0 {
        return series(n, x);
    }
    let start = 2 * ((n.max(x as usize) + 20 + (40.0 * x).sqrt() as usize) / 2);
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut sum = 0.0;
    let mut out = 0.0;
    for k in (0..=start).rev() {
        if k == n {
            out = cur;
        }
        if k % 2 == 0 {
            sum += if k == 0 { cur } else { 2.0 * cur };
        }
        if k == 0 {
            break;
        }
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            next *= 1e-250;
            cur *= 1e-250;
            out *= 1e-250;
            sum *= 1e-250;
        }
    }
    out / sum
}

fn series(n: usize, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= h / k as f64;
    }
    let mut sum = term;
    for k in 1..200 {
        term *= -h * h / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `J_n′(x)`.
pub fn bessel_j_derivative(n: usize, x: f64) -> f64 {
    if n == 0 {
        -bessel_j(1, x)
    } else {
        0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))
    }
}

/// The `k`-th positive zero of `J_n` (`k ≥ 1`), bracketed by a scan and
/// refined by bisection to machine precision.
pub fn bessel_zero(n: usize, k: usize) -> f64 {
    bessel_zeros(n, k)[k - 1]
}

/// The first `count` positive zeros of `J_n`.
pub fn bessel_zeros(n: usize, count: usize) -> Vec<f64> {
    let step = 0.05;
    let mut out = Vec::with_capacity(count);
    let mut a = if n == 0 { step } else { n as f64 * 0.9 + step };
    let mut fa = bessel_j(n, a);
    while out.len() < count {
        let b = a + step;
        let fb = bessel_j(n, b);
        if fa == 0.0 {
            out.push(a);
        } else if fa * fb < 0.0 {
            out.push(bisect(n, a, b, fa));
        }
        a = b;
        fa = fb;
        if a > 1e4 + PI * count as f64 {
            break;
        }
    }
    out
}

fn bisect(n: usize, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = bessel_j(n, m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}
