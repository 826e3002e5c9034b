use num_complex::Complex64;

/// Householder vector `v` with `(I - tau v v^*) x = alpha e_1`.
///
/// Returns `(v, tau, alpha)`; `tau == 0` means `x` is already a multiple of `e_1`.
pub(crate) fn reflector(x: &[Complex64]) -> (Vec<Complex64>, f64, Complex64) {
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let tail = x[1..].iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mut v = x.to_vec();
    if norm == 0.0 || tail == 0.0 {
        return (v, 0.0, x[0]);
    }
    let x0 = x[0];
    let phase = if x0.norm() > 0.0 {
        x0 / x0.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let alpha = -phase * norm;
    v[0] = x0 - alpha;
    let vnorm2 = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    (v, 2.0 / vnorm2, alpha)
}
