//! Oracles shared by the integration and acceptance tests. Nothing here calls
//! into the numerical kernels of the crate under test.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

// Gauss–Kronrod 7/15 nodes on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature of `f` on [a, b] to a relative tolerance.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let f: &dyn Fn(f64) -> f64 = &f;
    let (first, err) = gk15(f, a, b);
    let mut intervals = vec![(a, b, first, err)];
    for _ in 0..20_000 {
        let total: f64 = intervals.iter().map(|t| t.2).sum();
        let err: f64 = intervals.iter().map(|t| t.3).sum();
        if err <= rel_tol * total.abs() || err < 1e-300 {
            return total;
        }
        let (k, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = intervals.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        let (l, le) = gk15(f, lo, mid);
        let (r, re) = gk15(f, mid, hi);
        intervals.push((lo, mid, l, le));
        intervals.push((mid, hi, r, re));
    }
    panic!("quadrature did not converge on [{a}, {b}]");
}

/// Pieces of ∫ t^{a−1}(1−t)^{b−1} g(t) dt split at 1/2, with the substitutions
/// u = t^a on the left and v = (1−t)^b on the right so the integrands stay bounded.
struct BetaIntegrals {
    a: f64,
    b: f64,
}

const QTOL: f64 = 1e-13;

impl BetaIntegrals {
    /// ∫_0^x t^{a−1}(1−t)^{b−1} g(t) dt for x ≤ 1/2.
    fn left(&self, x: f64, g: impl Fn(f64) -> f64) -> f64 {
        let (a, b) = (self.a, self.b);
        integrate(|u: f64| {
            let t = u.powf(1.0 / a);
            (1.0 - t).powf(b - 1.0) * g(t)
        }, 0.0, x.powf(a), QTOL) / a
    }

    /// ∫_x^1 t^{a−1}(1−t)^{b−1} g(t) dt for x ≥ 1/2.
    fn right(&self, x: f64, g: impl Fn(f64) -> f64) -> f64 {
        let (a, b) = (self.a, self.b);
        integrate(|v: f64| {
            let s = v.powf(1.0 / b);
            (1.0 - s).powf(a - 1.0) * g(1.0 - s)
        }, 0.0, (1.0 - x).powf(b), QTOL) / b
    }

    /// ∫_0^x with x anywhere in (0, 1).
    fn lower(&self, x: f64, g: impl Fn(f64) -> f64 + Copy) -> f64 {
        if x <= 0.5 {
            self.left(x, g)
        } else {
            self.left(0.5, g) + self.right(0.5, g) - self.right(x, g)
        }
    }

    /// ∫_x^1 with x anywhere in (0, 1).
    fn upper(&self, x: f64, g: impl Fn(f64) -> f64 + Copy) -> f64 {
        if x >= 0.5 {
            self.right(x, g)
        } else {
            self.right(0.5, g) + self.left(0.5, g) - self.left(x, g)
        }
    }
}

/// I_x(a, b) by quadrature, computed from the smaller tail.
pub fn inc_beta_oracle(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let q = BetaIntegrals { a, b };
    let one = |_: f64| 1.0;
    let lo = q.lower(x, one);
    let hi = q.upper(x, one);
    if lo <= hi {
        lo / (lo + hi)
    } else {
        1.0 - hi / (lo + hi)
    }
}

/// (∂/∂a, ∂/∂b) of I_{1/2}(a, b) by differentiating under the integral sign.
pub fn inc_beta_grad_oracle(a: f64, b: f64) -> (f64, f64) {
    let q = BetaIntegrals { a, b };
    let one = |_: f64| 1.0;
    let la = |t: f64| t.ln();
    let lb = |t: f64| (1.0 - t).ln();
    let (l0, r0) = (q.left(0.5, one), q.right(0.5, one));
    let (la_l, la_r) = (q.left(0.5, la), q.right(0.5, la));
    let (lb_l, lb_r) = (q.left(0.5, lb), q.right(0.5, lb));
    let total = l0 + r0;
    // d(L/B) = (L/B)(L'/L − B'/B) from the left tail, or −(R/B)(R'/R − B'/B) from the right
    let grad = |dl: f64, dr: f64| {
        let db = (dl + dr) / total;
        if l0 <= r0 {
            l0 / total * (dl / l0 - db)
        } else {
            -(r0 / total) * (dr / r0 - db)
        }
    };
    (grad(la_l, la_r), grad(lb_l, lb_r))
}

/// Log-spaced grid of `k` points on [lo, hi].
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (k - 1) as f64).exp()).collect()
}

/// θ ~ Dir(α) by normalized Gamma draws.
pub fn dirichlet_draw<R: Rng>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = alpha.iter().map(|&a| Gamma::new(a, 1.0).unwrap().sample(rng)).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|x| x / s).collect()
}

/// Random n × m error table with mistake probability `p_err`.
pub fn random_errors<R: Rng>(n: usize, m: usize, p_err: f64, rng: &mut R) -> Vec<Vec<bool>> {
    (0..n).map(|_| (0..m).map(|_| rng.random::<f64>() < p_err).collect()).collect()
}

pub fn random_simplex<R: Rng>(m: usize, rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = (0..m).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|x| x / s).collect()
}

/// Gibbs risk (1/n) Σ_i Σ_j θ_j 1[j errs on i].
pub fn gibbs_brute(theta: &[f64], rows: &[Vec<bool>]) -> f64 {
    let mut s = 0.0;
    for r in rows {
        for (j, &e) in r.iter().enumerate() {
            if e {
                s += theta[j];
            }
        }
    }
    s / rows.len() as f64
}

/// Tandem loss (1/n) Σ_i Σ_j Σ_k θ_j θ_k 1[j and k err on i].
pub fn tandem_brute(theta: &[f64], rows: &[Vec<bool>]) -> f64 {
    let mut s = 0.0;
    for r in rows {
        for j in 0..r.len() {
            for k in 0..r.len() {
                if r[j] && r[k] {
                    s += theta[j] * theta[k];
                }
            }
        }
    }
    s / rows.len() as f64
}

/// Σ_{k=N/2}^{N} C(N,k) w^k (1−w)^{N−k} term by term, binomials by the
/// multiplicative recurrence in log space.
pub fn binomial_tail_brute(w: f64, n: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    if w >= 1.0 {
        return 1.0;
    }
    let mut ln_c = 0.0; // ln C(n, 0)
    let mut total = 0.0;
    for k in 0..=n {
        if k > 0 {
            ln_c += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        if 2 * k >= n {
            total += (ln_c + k as f64 * w.ln() + (n - k) as f64 * (1.0 - w).ln()).exp();
        }
    }
    total
}

/// C-bound from its moments: (R₂ − E_h[r_h]²) / (R₂ − R₁ + 1/4) with
/// E_h[r_h] the θ-average of the individual voter risks.
pub fn c_bound_brute(theta: &[f64], rows: &[Vec<bool>]) -> f64 {
    let r1 = gibbs_brute(theta, rows);
    let r2 = tandem_brute(theta, rows);
    (r2 - r1 * r1) / (r2 - r1 + 0.25)
}

/// Central finite-difference gradient.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let hj = h(x[j]);
            let mut p = x.to_vec();
            let mut q = x.to_vec();
            p[j] += hj;
            q[j] -= hj;
            (f(&p) - f(&q)) / (2.0 * hj)
        })
        .collect()
}

/// ‖a − b‖∞ / ‖b‖∞.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    num / den
}

/// Gamma(a, 1) draw `x` moved to shape `a2` at the same CDF level, returned as ln x.
pub fn shift_gamma_quantile(a: f64, a2: f64, ln_x: f64) -> f64 {
    use statrs::function::gamma::{gamma_lr, gamma_ur};
    let x = ln_x.exp();
    let lower = gamma_lr(a, x) <= 0.5;
    let target = if lower { gamma_lr(a, x) } else { gamma_ur(a, x) };
    let level = |l: f64| if lower { gamma_lr(a2, l.exp()) } else { gamma_ur(a2, l.exp()) };
    // the lower CDF increases in ln x, the upper one decreases
    let (mut lo, mut hi) = (ln_x - 5.0, ln_x + 5.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let below = if lower { level(mid) < target } else { level(mid) > target };
        if below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
