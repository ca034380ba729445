//! Eigenvalue kernels: cyclic Jacobi for Hermitian matrices and a shifted
//! complex QR iteration for general square matrices.

use super::matrix::ComplexMatrix;
use super::NumericsError;
use num_complex::Complex64;

/// Eigendecomposition of a Hermitian matrix by the two-sided cyclic Jacobi
/// method. Returns eigenvalues in descending order together with a unitary
/// whose columns are the matching eigenvectors.
///
/// The input is hermitized first; callers are expected to have checked
/// self-adjointness against their own tolerance.
pub fn jacobi_hermitian(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix), NumericsError> {
    assert!(m.is_square(), "jacobi_hermitian needs a square matrix");
    let n = m.rows();
    let mut a = m.hermitize();
    let mut v = ComplexMatrix::identity(n);
    if n == 0 {
        return Ok((vec![], v));
    }

    let scale = a.fro_norm().max(1.0);
    let target = 1e-15 * scale;
    let max_sweeps = 60;

    for _sweep in 0..max_sweeps {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= target {
            let mut eigs: Vec<(f64, usize)> =
                (0..n).map(|i| (a[(i, i)].re, i)).collect();
            eigs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
            let values: Vec<f64> = eigs.iter().map(|e| e.0).collect();
            let mut basis = ComplexMatrix::zeros(n, n);
            for (new_col, (_, old_col)) in eigs.iter().enumerate() {
                basis.set_column(new_col, &v.column(*old_col));
            }
            return Ok((values, basis));
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                // Phase factor turning the 2x2 pivot block into a real
                // symmetric one, then a classic real Jacobi rotation.
                let phase = apq / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // Unitary U differs from identity only in rows/cols p,q:
                //   U_pp = c, U_pq = s, U_qp = -s*conj(phase), U_qq = c*conj(phase)
                let upp = Complex64::new(c, 0.0);
                let upq = Complex64::new(s, 0.0);
                let uqp = -phase.conj() * s;
                let uqq = phase.conj() * c;

                // A <- U* A U: columns then rows.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * upp + akq * uqp;
                    a[(k, q)] = akp * upq + akq * uqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
                    a[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * upp + vkq * uqp;
                    v[(k, q)] = vkp * upq + vkq * uqq;
                }
            }
        }
    }
    Err(NumericsError::ConvergenceFailure {
        what: "Jacobi sweep limit exceeded".into(),
    })
}

/// Eigenvalues (with multiplicity) of an arbitrary square complex matrix:
/// Householder reduction to Hessenberg form followed by a Wilkinson-shifted
/// QR iteration with deflation.
pub fn general_eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>, NumericsError> {
    assert!(m.is_square());
    let n = m.rows();
    if n == 0 {
        return Ok(vec![]);
    }
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let mut h = hessenberg(m);
    let scale = h.fro_norm().max(1.0);
    let eps = 1e-16;

    let mut eigs: Vec<Complex64> = Vec::with_capacity(n);
    let mut hi = n - 1; // active block is 0..=hi
    let mut iters_since_deflation = 0usize;
    let mut total_iters = 0usize;
    let max_total = 120 * n;

    loop {
        // Zero negligible subdiagonals.
        for i in 0..hi {
            let small = eps * (h[(i, i)].norm() + h[(i + 1, i + 1)].norm() + scale * 1e-3);
            if h[(i + 1, i)].norm() <= small {
                h[(i + 1, i)] = Complex64::new(0.0, 0.0);
            }
        }
        // Deflate trailing 1x1 / 2x2 blocks.
        loop {
            if hi == 0 {
                eigs.push(h[(0, 0)]);
                eigs.truncate(n);
                eigs.reverse();
                return Ok(eigs);
            }
            if h[(hi, hi - 1)].norm() == 0.0 {
                eigs.push(h[(hi, hi)]);
                hi -= 1;
                iters_since_deflation = 0;
            } else if hi == 1 || h[(hi - 1, hi - 2)].norm() == 0.0 {
                let (l1, l2) = two_by_two_eigs(
                    h[(hi - 1, hi - 1)],
                    h[(hi - 1, hi)],
                    h[(hi, hi - 1)],
                    h[(hi, hi)],
                );
                eigs.push(l2);
                eigs.push(l1);
                if hi == 1 {
                    eigs.truncate(n);
                    eigs.reverse();
                    return Ok(eigs);
                }
                hi -= 2;
                iters_since_deflation = 0;
            } else {
                break;
            }
        }

        // Find the start of the active unreduced block.
        let mut lo = hi;
        while lo > 0 && h[(lo, lo - 1)].norm() != 0.0 {
            lo -= 1;
        }

        total_iters += 1;
        iters_since_deflation += 1;
        if total_iters > max_total {
            return Err(NumericsError::ConvergenceFailure {
                what: format!("QR iteration stalled with block {}..={}", lo, hi),
            });
        }

        let mu = if iters_since_deflation % 12 == 0 {
            // Exceptional shift to break symmetry-induced cycling.
            h[(hi, hi)] + Complex64::new(h[(hi, hi - 1)].norm() * 1.5, 0.7 * scale * 1e-2)
        } else {
            let (l1, l2) = two_by_two_eigs(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            );
            // Wilkinson: the root closest to the trailing entry.
            if (l1 - h[(hi, hi)]).norm() <= (l2 - h[(hi, hi)]).norm() {
                l1
            } else {
                l2
            }
        };

        qr_step(&mut h, lo, hi, mu);
    }
}

/// One explicit shifted QR step on the active Hessenberg block via Givens
/// rotations: H <- R Q + mu I on rows/cols lo..=hi.
fn qr_step(h: &mut ComplexMatrix, lo: usize, hi: usize, mu: Complex64) {
    let n = h.rows();
    for i in lo..=hi {
        h[(i, i)] -= mu;
    }
    let mut rots: Vec<(f64, Complex64)> = Vec::with_capacity(hi - lo);
    for i in lo..hi {
        let f = h[(i, i)];
        let g = h[(i + 1, i)];
        let (c, s) = givens(f, g);
        rots.push((c, s));
        // Apply G* from the left to rows i, i+1.
        for j in i..n {
            let a = h[(i, j)];
            let b = h[(i + 1, j)];
            h[(i, j)] = Complex64::new(c, 0.0) * a + s * b;
            h[(i + 1, j)] = -s.conj() * a + Complex64::new(c, 0.0) * b;
        }
        h[(i + 1, i)] = Complex64::new(0.0, 0.0);
    }
    for (k, (c, s)) in rots.iter().enumerate() {
        let i = lo + k;
        // Apply G from the right to columns i, i+1.
        let top = (i + 2).min(hi + 1);
        for r in 0..top {
            let a = h[(r, i)];
            let b = h[(r, i + 1)];
            h[(r, i)] = a * Complex64::new(*c, 0.0) + b * s.conj();
            h[(r, i + 1)] = -(a * s) + b * Complex64::new(*c, 0.0);
        }
    }
    for i in lo..=hi {
        h[(i, i)] += mu;
    }
}

/// Complex Givens rotation: returns (c real, s) with
/// [c, s; -conj(s), c] * [f; g] = [r; 0].
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64) {
    let fn2 = f.norm_sqr();
    let gn2 = g.norm_sqr();
    if gn2 == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if fn2 == 0.0 {
        return (0.0, g.conj() / g.norm());
    }
    let d = (fn2 + gn2).sqrt();
    let fn1 = fn2.sqrt();
    let c = fn1 / d;
    let s = (f / fn1) * g.conj() / d;
    (c, s)
}

fn two_by_two_eigs(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
) -> (Complex64, Complex64) {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - det.scale(4.0)).sqrt();
    let half = Complex64::new(0.5, 0.0);
    ((tr + disc) * half, (tr - disc) * half)
}

/// Householder reduction to upper Hessenberg form (similarity transform).
fn hessenberg(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.rows();
    let mut a = m.clone();
    for k in 0..n.saturating_sub(2) {
        // Reflect column k below the subdiagonal.
        let mut x: Vec<Complex64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm <= 1e-300 {
            continue;
        }
        let alpha = if x[0].norm() > 0.0 {
            -(x[0] / x[0].norm()) * xnorm
        } else {
            Complex64::new(-xnorm, 0.0)
        };
        x[0] -= alpha;
        let vnorm2: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 <= 1e-300 {
            continue;
        }
        // P = I - 2 v v*/|v|^2 acting on indices k+1..n.
        // A <- P A: rows.
        for j in 0..n {
            let dot: Complex64 = x
                .iter()
                .enumerate()
                .map(|(i, v)| v.conj() * a[(k + 1 + i, j)])
                .sum();
            let f = dot * (2.0 / vnorm2);
            for (i, v) in x.iter().enumerate() {
                let val = a[(k + 1 + i, j)] - v * f;
                a[(k + 1 + i, j)] = val;
            }
        }
        // A <- A P: columns.
        for r in 0..n {
            let dot: Complex64 = x
                .iter()
                .enumerate()
                .map(|(i, v)| a[(r, k + 1 + i)] * v)
                .sum();
            let f = dot * (2.0 / vnorm2);
            for (i, v) in x.iter().enumerate() {
                let val = a[(r, k + 1 + i)] - f * v.conj();
                a[(r, k + 1 + i)] = val;
            }
        }
        for i in k + 2..n {
            a[(i, k)] = Complex64::new(0.0, 0.0);
        }
        a[(k + 1, k)] = alpha;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn jacobi_reconstructs() {
        let m = ComplexMatrix::from_fn(5, 5, |i, j| {
            c((i * j) as f64 * 0.3 - 1.0, i as f64 - j as f64)
        })
        .hermitize();
        let (vals, basis) = jacobi_hermitian(&m).unwrap();
        let d = ComplexMatrix::diag(&vals.iter().map(|v| c(*v, 0.0)).collect::<Vec<_>>());
        let rec = basis.matmul(&d).matmul(&basis.adjoint());
        assert!(rec.sub_mat(&m).fro_norm() < 1e-12 * m.fro_norm().max(1.0));
        let gram = basis.adjoint().matmul(&basis);
        assert!(gram.sub_mat(&ComplexMatrix::identity(5)).fro_norm() < 1e-12);
        for w in vals.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn qr_on_nilpotent() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ]);
        let eigs = general_eigenvalues(&m).unwrap();
        assert_eq!(eigs.len(), 2);
        for e in eigs {
            assert!(e.norm() < 1e-10);
        }
    }

    #[test]
    fn qr_matches_companion_roots() {
        // Companion matrix of (x-1)(x-2i)(x+3) = x^3 + (2 - 2i) x^2 + (-3 - 4i) x + 6i
        let a2 = c(2.0, -2.0);
        let a1 = c(-3.0, -4.0);
        let a0 = c(0.0, 6.0);
        let m = ComplexMatrix::from_rows(&[
            vec![-a2, -a1, -a0],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        ]);
        let mut eigs = general_eigenvalues(&m).unwrap();
        let mut expect = vec![c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)];
        eigs.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        expect.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        for (e, x) in eigs.iter().zip(expect.iter()) {
            assert!((e - x).norm() < 1e-9, "{e} vs {x}");
        }
    }
}
