//! Pointwise checks of `H` along the graph `{(q, p + du(q))}` of a corrector.

use super::CorrectorField;
use crate::hamiltonian::HamiltonianSpec;

/// `(max_i H, min_i H, max_i |∇_p H|)` over the grid nodes of the corrector's graph.
fn graph_extremes(spec: &HamiltonianSpec, p: &[f64], u: &CorrectorField) -> Option<(f64, f64, f64)> {
    let n = spec.dim();
    if p.len() != n || u.grid().dim() != n {
        return None;
    }
    let grid = u.grid();
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    let mut lip: f64 = 0.0;
    let mut g = [0.0; 2];
    for i in 0..grid.len() {
        let q = grid.coords(i);
        let m = u.momentum(p, i);
        let local = spec.localize(&q[..n]);
        let e = local.eval_grad(&m[..n], &mut g[..n]).ok()?;
        hi = hi.max(e);
        lo = lo.min(e);
        lip = lip.max(g[..n].iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    Some((hi, lo, lip))
}

/// True when `max_q H(q, p + du(q)) <= h + L_p·spacing` on the grid, which certifies
/// `H̄(p) <= h` up to that margin.
pub fn subsolution_certificate(spec: &HamiltonianSpec, p: &[f64], u: &CorrectorField, h: f64) -> bool {
    match graph_extremes(spec, p, u) {
        Some((hi, _, lip)) => hi <= h + lip * u.grid().spacing(),
        None => false,
    }
}

/// True when `min_q H(q, p + du(q)) >= h - L_p·spacing` on the grid, which certifies
/// `H̄(p) >= h` up to that margin.
pub fn supersolution_certificate(
    spec: &HamiltonianSpec,
    p: &[f64],
    u: &CorrectorField,
    h: f64,
) -> bool {
    match graph_extremes(spec, p, u) {
        Some((_, lo, lip)) => lo >= h - lip * u.grid().spacing(),
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::hamiltonian::{FiberFunction, ScalarField};

    #[test]
    fn examples() {
        let g = TorusGrid::new(1, 64).unwrap();
        let zero = CorrectorField::zero(g);
        let free = HamiltonianSpec::fiber_only(1, FiberFunction::half_square()).unwrap();
        assert!(subsolution_certificate(&free, &[1.0], &zero, 0.5));
        assert!(supersolution_certificate(&free, &[1.0], &zero, 0.5));
        let pend = HamiltonianSpec::mechanical(1, ScalarField::cosine(1.0)).unwrap();
        assert!(!subsolution_certificate(&pend, &[0.0], &zero, 0.9));
        assert!(supersolution_certificate(&pend, &[0.0], &zero, -1.0));
        assert!(!subsolution_certificate(&pend, &[0.0, 0.0], &zero, 10.0));
    }
}
