use std::sync::Arc;

use super::{ConditionReport, Witness};
use crate::discretize::{vec2, EllipticIterate, Grid};
use crate::model::{CostMatrix, CostModel, Domain};
use crate::P2;

/// Tolerance on normalized cross products; collinear edges count as convex.
pub const CONVEXITY_TOL: f64 = 1e-9;

/// For every `y`, maps a boundary polygon of about `n` vertices through
/// `x ↦ c_y(x, y)` and tests the image for convexity. The margin at a vertex
/// is the normalized cross product of its two edges, oriented by the image's
/// signed area; the witness is the preimage vertex.
pub fn check_domain_c_convexity(
    cost: &dyn CostModel,
    domain: &Domain,
    ys: &[P2],
    n: usize,
) -> ConditionReport {
    let mut rep = ConditionReport::new("domain-c-convexity", CONVEXITY_TOL);
    let poly = domain.boundary_polygon(n);
    let m = poly.len();
    for y in ys {
        let yv = vec2(y);
        let img: Vec<P2> = poly
            .iter()
            .map(|x| {
                let v = cost.c_y(&vec2(x), &yv);
                P2::new(v[0], v[1])
            })
            .collect();
        let area: f64 = (0..m).map(|i| img[i].perp(&img[(i + 1) % m])).sum();
        let orient = if area < 0.0 { -1.0 } else { 1.0 };
        let mut turning = 0.0;
        for i in 0..m {
            let e1 = img[i] - img[(i + m - 1) % m];
            let e2 = img[(i + 1) % m] - img[i];
            let (l1, l2) = (e1.norm(), e2.norm());
            if l1 == 0.0 || l2 == 0.0 {
                continue;
            }
            turning += e1.perp(&e2).atan2(e1.dot(&e2));
            rep.observe(
                orient * e1.perp(&e2) / (l1 * l2),
                Witness::at(poly[i]).with_y(*y),
            );
        }
        if (turning.abs() - std::f64::consts::TAU).abs() > 1e-6 {
            rep.fail(format!(
                "image for y=({},{}) winds {:.3} turns",
                y.x,
                y.y,
                turning / std::f64::consts::TAU
            ));
        }
    }
    rep
}

/// For every interior node `x₀` with `y₀ = Y(x₀, Du(x₀))`, the minimum over
/// all stored nodes of `u(x) − u(x₀) − c(x, y₀) + c(x₀, y₀)`.
pub fn check_solution_c_convexity(
    cost: Arc<dyn CostModel>,
    grid: &Grid,
    it: &EllipticIterate,
    tolerance: f64,
) -> ConditionReport {
    let mut rep = ConditionReport::new("solution-c-convexity", tolerance);
    let cm = CostMatrix::new(cost.clone());
    let nodes: Vec<(P2, f64)> = grid
        .interior_points()
        .iter()
        .copied()
        .zip(it.u.interior.iter().copied())
        .chain(
            grid.boundary_points()
                .iter()
                .copied()
                .zip(it.u.boundary.iter().copied()),
        )
        .collect();
    for n in 0..grid.n_interior() {
        let x0 = grid.interior_point(n);
        let x0v = vec2(&x0);
        let y0 = match cm.y(&x0v, &vec2(&it.du[n])) {
            Ok(y) => y,
            Err(e) => {
                rep.fail(format!("Y evaluation failed at node {n}: {e}"));
                return rep;
            }
        };
        let base = it.u.interior[n] - cost.c(&x0v, &y0);
        let y0p = P2::new(y0[0], y0[1]);
        let mut worst = (f64::INFINITY, x0);
        for (x, u) in &nodes {
            let m = u - cost.c(&vec2(x), &y0) - base;
            if m < worst.0 {
                worst = (m, *x);
            }
        }
        // The witness is the violating point, for the support at node `n`.
        rep.observe(worst.0, Witness::at(worst.1).with_y(y0p));
    }
    rep
}
