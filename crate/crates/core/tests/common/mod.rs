//! Independent reference computations shared by integration tests.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Matrix3;
use num_complex::Complex64;
use pptes_core::Op9;

/// Smallest eigenvalue of a 3×3 Hermitian matrix via the trigonometric form
/// of the characteristic cubic.
pub fn min_eig_hermitian3(m: &Matrix3<Complex64>) -> f64 {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let f = m[(2, 2)].re;
    let (b, c, e) = (m[(0, 1)], m[(0, 2)], m[(1, 2)]);
    let p1 = b.norm_sqr() + c.norm_sqr() + e.norm_sqr();
    let q = (a + d + f) / 3.0;
    let p2 = (a - q).powi(2) + (d - q).powi(2) + (f - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p < 1e-300 {
        return q;
    }
    let shifted = (m - Matrix3::identity() * Complex64::new(q, 0.0)) / Complex64::new(p, 0.0);
    let r = (shifted.determinant().re / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos()
}

pub fn unit_from_angles(t1: f64, t2: f64, p1: f64, p2: f64) -> [Complex64; 3] {
    [
        Complex64::new(t1.cos(), 0.0),
        Complex64::from_polar(t1.sin() * t2.cos(), p1),
        Complex64::from_polar(t1.sin() * t2.sin(), p2),
    ]
}

/// `min_f ⟨e,f|P|e,f⟩` for fixed `e`.
pub fn inner_min(p: &Op9, e: &[Complex64; 3]) -> f64 {
    let m = Matrix3::from_fn(|j, l| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..3 {
            for k in 0..3 {
                acc += e[i].conj() * e[k] * p[(3 * i + j, 3 * k + l)];
            }
        }
        acc
    });
    min_eig_hermitian3(&m)
}

fn objective(p: &Op9, x: &[f64; 4]) -> f64 {
    inner_min(p, &unit_from_angles(x[0], x[1], x[2], x[3]))
}

/// Compass search around `x` with step halving.
fn polish(p: &Op9, mut x: [f64; 4]) -> f64 {
    let mut best = objective(p, &x);
    let mut step = 0.05;
    while step > 1e-10 {
        let mut improved = false;
        for k in 0..4 {
            for sign in [1.0, -1.0] {
                let mut y = x;
                y[k] += sign * step;
                let v = objective(p, &y);
                if v < best {
                    best = v;
                    x = y;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// Minimum of `⟨e,f|P|e,f⟩` over a `n⁴` grid in the angles of `e` (exact in `f`),
/// followed by local polishing of the best few grid points.
pub fn grid_epsilon(p: &Op9, n: usize) -> f64 {
    let theta = |k: usize| FRAC_PI_2 * k as f64 / (n - 1) as f64;
    let phase = |k: usize| 2.0 * PI * k as f64 / n as f64;
    let mut best: Vec<(f64, [f64; 4])> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let x = [theta(i), theta(j), phase(k), phase(l)];
                    let v = objective(p, &x);
                    if best.len() < 8 || v < best[best.len() - 1].0 {
                        best.push((v, x));
                        best.sort_by(|a, b| a.0.total_cmp(&b.0));
                        best.truncate(8);
                    }
                }
            }
        }
    }
    best.iter()
        .map(|&(_, x)| polish(p, x))
        .fold(f64::INFINITY, f64::min)
}
