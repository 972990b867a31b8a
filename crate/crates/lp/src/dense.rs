/// Gauss-Jordan inverse of a row-major `n x n` matrix with partial pivoting.
///
/// Row updates only touch the nonzero entries of the pivot row, so block
/// structured bases stay cheap. Returns `None` for a numerically singular
/// matrix.
pub(crate) fn invert(a: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let mut nz_m = Vec::with_capacity(n);
    let mut nz_inv = Vec::with_capacity(n);
    for col in 0..n {
        let (mut p, mut best) = (col, 0.0);
        for r in col..n {
            let v = m[r * n + col].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best < 1e-13 {
            return None;
        }
        if p != col {
            for k in 0..n {
                m.swap(p * n + k, col * n + k);
                inv.swap(p * n + k, col * n + k);
            }
        }
        let piv = m[col * n + col];
        nz_m.clear();
        nz_inv.clear();
        for k in 0..n {
            let idx = col * n + k;
            if m[idx] != 0.0 {
                m[idx] /= piv;
                nz_m.push(k);
            }
            if inv[idx] != 0.0 {
                inv[idx] /= piv;
                nz_inv.push(k);
            }
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col];
            if f == 0.0 {
                continue;
            }
            for &k in &nz_m {
                m[r * n + k] -= f * m[col * n + k];
            }
            for &k in &nz_inv {
                inv[r * n + k] -= f * inv[col * n + k];
            }
            m[r * n + col] = 0.0;
        }
    }
    Some(inv)
}
