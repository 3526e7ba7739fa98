//! Small derivative-free minimizers.

use crate::error::Result;

/// Minimizes a unimodal function on `[lo, hi]`; returns `(min, argmin)`.
pub fn golden_section<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    while hi - lo > tol * (1.0 + lo.abs() + hi.abs()) {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b)?;
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x)?;
    Ok(if fx <= fa.min(fb) {
        (fx, x)
    } else if fa <= fb {
        (fa, a)
    } else {
        (fb, b)
    })
}

/// Nelder–Mead simplex search; returns `(min, argmin)`. Stops when the simplex
/// value spread is below `tol` or after `max_iter` iterations.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, start: &[f64], step: f64, max_iter: usize, tol: f64) -> (f64, Vec<f64>) {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f(start)));
    for k in 0..n {
        let mut p = start.to_vec();
        p[k] += step;
        let fp = f(&p);
        simplex.push((p, fp));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[n].1 - simplex[0].1 <= tol {
            break;
        }
        let mut c = vec![0.0; n];
        for (p, _) in &simplex[..n] {
            for k in 0..n {
                c[k] += p[k] / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|k| c[k] + t * (worst.0[k] - c[k])).collect() };
        let r = along(-1.0);
        let fr = f(&r);
        if fr < simplex[0].1 {
            let e = along(-2.0);
            let fe = f(&e);
            simplex[n] = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (r, fr);
        } else {
            let k = along(0.5);
            let fk = f(&k);
            if fk < worst.1 {
                simplex[n] = (k, fk);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    s.0 = (0..n).map(|i| best[i] + 0.5 * (s.0[i] - best[i])).collect();
                    s.1 = f(&s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    (v, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (v, x) = golden_section(|x| Ok((x - 0.3) * (x - 0.3) + 2.0), -1.0, 2.0, 1e-12).unwrap();
        assert!((x - 0.3).abs() < 1e-6 && (v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nelder_mead_quadratic_bowl() {
        let f = |p: &[f64]| (p[0] - 1.0).powi(2) + (p[1] + 2.0).powi(2) + p[2] * p[2] + (p[3] - 0.5).powi(2);
        let (v, x) = nelder_mead(f, &[0.0; 4], 0.5, 2000, 1e-24);
        assert!(v < 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-5 && (x[1] + 2.0).abs() < 1e-5 && (x[3] - 0.5).abs() < 1e-5);
    }
}
