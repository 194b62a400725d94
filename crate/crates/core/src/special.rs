//! Overflow-safe factorial arithmetic shared by the closed-form amplitude
//! engine and the Fock-basis matrix elements.

use std::sync::OnceLock;

const TABLE_LEN: usize = 2048;

fn table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(TABLE_LEN);
        let mut acc = 0.0_f64;
        t.push(0.0);
        for k in 1..TABLE_LEN {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln(n!)`. Tabulated up to 2047, Stirling series beyond.
pub fn ln_factorial(n: usize) -> f64 {
    if n < TABLE_LEN {
        return table()[n];
    }
    let x = n as f64 + 1.0;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// `ln sqrt(a! / b!)`.
#[inline]
pub fn ln_sqrt_factorial_ratio(a: usize, b: usize) -> f64 {
    0.5 * (ln_factorial(a) - ln_factorial(b))
}
