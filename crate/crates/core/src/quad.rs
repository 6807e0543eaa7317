//! Adaptive Gauss-Legendre quadrature.
//!
//! A 20-point rule per panel with bisection refinement; the error estimate
//! per panel is the difference between the whole-panel rule and the sum of
//! the two half-panel rules.

use std::sync::OnceLock;

const N_NODES: usize = 20;
const MAX_DEPTH: u32 = 48;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// computed once by Newton iteration on P_n.
fn gauss_legendre() -> &'static ([f64; N_NODES], [f64; N_NODES]) {
    static RULE: OnceLock<([f64; N_NODES], [f64; N_NODES])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = N_NODES;
        let mut nodes = [0.0; N_NODES];
        let mut weights = [0.0; N_NODES];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // evaluate P_n and P_n' by the three-term recurrence
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gauss_legendre();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for i in 0..N_NODES {
        acc += weights[i] * f(mid + half * nodes[i]);
    }
    acc * half
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (a + b);
    let left = panel(f, a, mid);
    let right = panel(f, mid, b);
    let refined = left + right;
    if (refined - whole).abs() <= tol || depth >= MAX_DEPTH {
        return refined;
    }
    adapt(f, a, mid, left, 0.5 * tol, depth + 1) + adapt(f, mid, b, right, 0.5 * tol, depth + 1)
}

/// Integrate f over [a, b] to mixed absolute/relative tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = panel(f, a, b);
    let tol = abs_tol.max(rel_tol * whole.abs());
    adapt(f, a, b, whole, tol, 0)
}

/// Integrate f over [a, b] split at the given interior breakpoints
/// (integrand kinks or discontinuities).
pub fn integrate_segmented<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> f64 {
    let mut edges = Vec::with_capacity(breaks.len() + 2);
    edges.push(a);
    edges.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    let mut acc = 0.0;
    for pair in edges.windows(2) {
        acc += integrate(f, pair[0], pair[1], rel_tol, abs_tol);
    }
    acc
}
