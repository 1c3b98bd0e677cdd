//! Fixed-step quadrature and Runge-Kutta helpers.

/// Simpson's rule on one interval of width `h` from endpoint and midpoint values.
#[inline]
pub fn simpson(h: f64, left: f64, mid: f64, right: f64) -> f64 {
    h / 6.0 * (left + 4.0 * mid + right)
}

/// Composite Simpson over `[a, b]` with `panels` Simpson panels.
pub fn simpson_fn(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let l = a + h * i as f64;
            simpson(h, f(l), f(l + 0.5 * h), f(l + h))
        })
        .sum()
}

const GL5_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// Composite five-point Gauss-Legendre over `[a, b]`. Nodes are interior to
/// each panel, so the integrand is never evaluated at `a` or `b`.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let mid = a + h * (i as f64 + 0.5);
        let half = 0.5 * h;
        let panel: f64 = GL5_NODES
            .iter()
            .zip(GL5_WEIGHTS.iter())
            .map(|(x, w)| w * f(mid + half * x))
            .sum();
        total += half * panel;
    }
    total
}

/// One classical RK4 step for `u' = rhs(t, u)` on a fixed-size state.
pub fn rk4_step<const N: usize>(
    rhs: impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    u: &[f64; N],
    h: f64,
) -> [f64; N] {
    let axpy = |base: &[f64; N], k: &[f64; N], s: f64| {
        let mut out = *base;
        for (o, ki) in out.iter_mut().zip(k) {
            *o += s * ki;
        }
        out
    };
    let k1 = rhs(t, u);
    let k2 = rhs(t + 0.5 * h, &axpy(u, &k1, 0.5 * h));
    let k3 = rhs(t + 0.5 * h, &axpy(u, &k2, 0.5 * h));
    let k4 = rhs(t + h, &axpy(u, &k3, h));
    let mut out = *u;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}
