//! Five-point Gauss–Legendre rules on arbitrary intervals.

const NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];

const WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// Nodes and weights mapped onto `[a, b]`. Exact for polynomials of degree ≤ 9.
pub fn gauss5(a: f64, b: f64) -> [(f64, f64); 5] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 5];
    for (slot, (node, weight)) in out.iter_mut().zip(NODES.iter().zip(WEIGHTS.iter())) {
        *slot = (mid + half * node, half * weight);
    }
    out
}

/// Integral of `f` over `[a, b]` with a single five-point panel.
pub fn integrate<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    gauss5(a, b).iter().map(|&(x, w)| w * f(x)).sum()
}
