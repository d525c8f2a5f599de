//! Independent oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop, clippy::too_many_arguments)]

use std::path::PathBuf;

use scmgrpo::scm::{ReasoningChain, VariableId};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

/// Validity by the partial-order definition: the endogenous list must be a
/// linear extension of the ancestor relation. Builds the transitive closure
/// of the parent relation and rejects the chain if any variable has an
/// ancestor listed after it, depends on itself, or names an undeclared id.
pub fn linear_extension_oracle(chain: &ReasoningChain) -> bool {
    let mut ids: Vec<VariableId> = chain.exogenous.iter().map(|u| u.id).collect();
    ids.extend(chain.endogenous.iter().map(|v| v.id));
    let n = ids.len();
    let mut sorted = ids.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != n {
        return false;
    }
    let pos = |id: &VariableId| ids.iter().position(|x| x == id);

    // anc[i][j]: j is an ancestor of i.
    let mut anc = vec![vec![false; n]; n];
    let n_u = chain.exogenous.len();
    for (k, v) in chain.endogenous.iter().enumerate() {
        for p in &v.parents {
            match pos(p) {
                Some(j) => anc[n_u + k][j] = true,
                None => return false,
            }
        }
    }
    for m in 0..n {
        for i in 0..n {
            if anc[i][m] {
                for j in 0..n {
                    if anc[m][j] {
                        anc[i][j] = true;
                    }
                }
            }
        }
    }
    for i in 0..n {
        if anc[i][i] {
            return false;
        }
        // Every listed position after i must not be an ancestor of i.
        // Exogenous variables come first and never have ancestors.
        if ((i + 1)..n).any(|j| anc[i][j]) {
            return false;
        }
    }
    true
}

/// Density of Student's t with `nu` degrees of freedom.
fn t_density(x: f64, nu: f64) -> f64 {
    let log_norm = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * std::f64::consts::PI).ln();
    (log_norm - (nu + 1.0) / 2.0 * (x * x / nu).ln_1p()).exp()
}

/// Lanczos approximation (g = 7, n = 9), accurate to ~1e-15 for x > 0.
fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Two-sided Student-t p-value by quadrature of the density tail. The tail
/// `∫_{|t|}^∞` is mapped to `(0, 1]` with `x = |t|/s`.
pub fn t_two_sided_by_quadrature(t: f64, nu: f64) -> f64 {
    let a = t.abs();
    if a == 0.0 {
        return 1.0;
    }
    let tail = if a < 1.0 {
        0.5 - integrate(|x| t_density(x, nu), 0.0, a, 1e-15)
    } else {
        integrate(|s| if s == 0.0 { 0.0 } else { t_density(a / s, nu) * a / (s * s) }, 0.0, 1.0, 1e-16)
    };
    2.0 * tail
}

/// Welch statistic and dof from two-pass moments.
pub fn welch_direct(a: &[f64], b: &[f64]) -> (f64, f64) {
    let m = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let mu = m(v);
        v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (v.len() as f64 - 1.0)
    };
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (qa, qb) = (var(a) / na, var(b) / nb);
    let t = (m(a) - m(b)) / (qa + qb).sqrt();
    let dof = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    (t, dof)
}

/// Pearson r from raw sums.
pub fn pearson_direct(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|a| a * a).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Through-origin slope as the vertex of the residual sum of squares,
/// which is a parabola in the slope.
pub fn slope_by_minimization(x: &[f64], y: &[f64]) -> f64 {
    let sse = |k: f64| x.iter().zip(y).map(|(a, b)| (b - k * a).powi(2)).sum::<f64>();
    let (f0, f1, fm1) = (sse(0.0), sse(1.0), sse(-1.0));
    let curvature = (f1 + fm1 - 2.0 * f0) / 2.0;
    let linear = (f1 - fm1) / 2.0;
    -linear / (2.0 * curvature)
}
