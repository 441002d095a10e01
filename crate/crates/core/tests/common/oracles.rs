//! Independent reference implementations used only by tests. Nothing here
//! depends on the library, so the unit tests pull it in by path and the
//! integration tests use it as a plain module.
#![allow(dead_code)]

/// Singular values (descending) of a row-major `rows × cols` matrix by
/// one-sided Jacobi rotations on the columns.
pub fn jacobi_singular_values(rows: usize, cols: usize, data: &[f64]) -> Vec<f64> {
    assert_eq!(data.len(), rows * cols);
    // work on the orientation with more rows than columns
    let (r, c, mut a) = if rows >= cols {
        (rows, cols, data.to_vec())
    } else {
        let mut t = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                t[j * rows + i] = data[i * cols + j];
            }
        }
        (cols, rows, t)
    };
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..c {
            for q in p + 1..c {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..r {
                    let ap = a[i * c + p];
                    let aq = a[i * c + q];
                    alpha += ap * ap;
                    beta += aq * aq;
                    gamma += ap * aq;
                }
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..r {
                    let ap = a[i * c + p];
                    let aq = a[i * c + q];
                    a[i * c + p] = cs * ap - sn * aq;
                    a[i * c + q] = sn * ap + cs * aq;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..c)
        .map(|j| (0..r).map(|i| a[i * c + j] * a[i * c + j]).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

/// IDX image file: magic 0x00000803, then count, rows, cols (big-endian u32).
pub fn encode_idx_images(rows: usize, cols: usize, images: &[Vec<u8>]) -> Vec<u8> {
    let mut out = vec![0, 0, 8, 3];
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(rows as u32).to_be_bytes());
    out.extend_from_slice(&(cols as u32).to_be_bytes());
    for img in images {
        assert_eq!(img.len(), rows * cols);
        out.extend_from_slice(img);
    }
    out
}

/// IDX label file: magic 0x00000801, then count.
pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = vec![0, 0, 8, 1];
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// CIFAR-10 binary batch: per record one label byte then 3072 pixel bytes.
pub fn encode_cifar(records: &[(u8, Vec<u8>)]) -> Vec<u8> {
    let mut out = Vec::with_capacity(records.len() * 3073);
    for (label, px) in records {
        assert_eq!(px.len(), 3072);
        out.push(*label);
        out.extend_from_slice(px);
    }
    out
}

/// All `2^n` sign vectors, in binary counting order.
pub fn all_sign_vectors(n: usize) -> Vec<Vec<f64>> {
    assert!(n < 25);
    (0..1u64 << n)
        .map(|bits| {
            (0..n)
                .map(|i| if bits >> i & 1 == 1 { -1.0 } else { 1.0 })
                .collect()
        })
        .collect()
}

/// Exact `E_σ ‖Σ σ_i x_i‖₂` by enumerating every sign pattern. `xs` holds the
/// vectors `x_i` as rows.
pub fn exact_expected_signed_norm(xs: &[Vec<f64>]) -> f64 {
    let n = xs.len();
    let d = xs.first().map_or(0, |x| x.len());
    let patterns = all_sign_vectors(n);
    let mut total = 0.0;
    for s in &patterns {
        let mut acc = vec![0.0; d];
        for (si, x) in s.iter().zip(xs) {
            for (a, v) in acc.iter_mut().zip(x) {
                *a += si * v;
            }
        }
        total += acc.iter().map(|a| a * a).sum::<f64>().sqrt();
    }
    total / patterns.len() as f64
}

/// Central finite difference of `f` at `x`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}
