use num_complex::Complex64;

/// Associated Laguerre polynomial `L_r^{(l)}(x)` by the three-term recurrence
/// `(r+1) L_{r+1} = (2r + 1 + l − x) L_r − (r + l) L_{r−1}`.
pub fn laguerre(r: usize, l: usize, x: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    if r == 0 {
        return one;
    }
    let lf = l as f64;
    let mut prev = one;
    let mut cur = one * (1.0 + lf) - x;
    for j in 1..r {
        let jf = j as f64;
        let next = (cur * (2.0 * jf + 1.0 + lf) - x * cur - prev * (jf + lf)) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}
