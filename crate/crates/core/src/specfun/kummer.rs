//! `1F1(a; 2; x)` for integer `a ≥ 1` in finite form.
//!
//! Kummer's transformation gives `1F1(a; 2; x) = e^x 1F1(2-a; 2; -x)`. For
//! `a ≥ 2` the right factor terminates after `a - 1` terms; for `a = 1` it is
//! `(1 - e^{-x}) / x`.

/// Confluent hypergeometric function `1F1(a; 2; x)` for integer `a ≥ 1`.
pub fn kummer_1f1_c2(a: u32, x: f64) -> f64 {
    assert!(a >= 1, "first parameter must be a positive integer");
    if x == 0.0 {
        return 1.0;
    }
    if a == 1 {
        return x.exp_m1() / x;
    }
    x.exp() * terminating_factor(a, x)
}

/// `e^{-x} 1F1(a; 2; x)`, which stays representable for large positive `x`.
pub fn kummer_1f1_c2_scaled(a: u32, x: f64) -> f64 {
    assert!(a >= 1, "first parameter must be a positive integer");
    if x == 0.0 {
        return 1.0;
    }
    if a == 1 {
        return -(-x).exp_m1() / x;
    }
    terminating_factor(a, x)
}

/// `1F1(2-a; 2; -x) = Σ_{k=0}^{a-2} (a-2)! / ((a-2-k)! k! (k+1)!) x^k`.
fn terminating_factor(a: u32, x: f64) -> f64 {
    let degree = a - 2;
    let mut coeff = 1.0;
    let mut sum = 1.0;
    let mut power = 1.0;
    for k in 0..degree {
        coeff *= (degree - k) as f64 / ((k + 1) as f64 * (k + 2) as f64);
        power *= x;
        sum += coeff * power;
    }
    sum
}
