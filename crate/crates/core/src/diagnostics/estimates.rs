use std::fmt;

use crate::conditions::DIRECTION_SAMPLES;
use crate::discretize::{boundary_derivatives, to_m2, vec2, EllipticIterate, Grid, ScalarField};
use crate::linalg::{direction, direction_angles, sym2_norm};
use crate::model::ProblemSpec;
use crate::{M2, P2};

/// Weights of the test functional `exp{(a/2)|Du|² + bφ}·w_ξξ`, `φ = e^{K(u̲ − u)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PogorelovParams {
    pub a: f64,
    pub b: f64,
    pub k: f64,
}

impl Default for PogorelovParams {
    fn default() -> Self {
        PogorelovParams {
            a: 1.0,
            b: 1.0,
            k: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PogorelovField {
    /// Maximum over directions, per interior node.
    pub values: Vec<f64>,
    /// Maximum over directions, per boundary point; `NaN` where `A` cannot
    /// be evaluated at the fitted gradient.
    pub boundary_values: Vec<f64>,
    /// Maximum over interior nodes and boundary points.
    pub max: f64,
    /// Maximum over interior nodes only.
    pub interior_max: f64,
    pub argmax_x: P2,
    pub argmax_dir: P2,
    pub argmax_on_boundary: bool,
}

/// Maximum over 64 directions `ξ` of `exp{(a/2)|Du|² + bφ}·w_ξξ` with
/// `φ = e^{K(u̲ − u)}`, at every interior node and boundary point. Boundary
/// derivatives come from [`boundary_derivatives`], so `max` approximates the
/// supremum over the closed domain.
pub fn pogorelov_functional(
    ps: &ProblemSpec,
    grid: &Grid,
    it: &EllipticIterate,
    sub: &ScalarField,
    params: PogorelovParams,
) -> PogorelovField {
    let dirs: Vec<P2> = direction_angles(DIRECTION_SAMPLES)
        .into_iter()
        .map(direction)
        .collect();
    let eval = |w: &M2, du: &P2, s: f64, u: f64| -> (f64, P2) {
        let phi = (params.k * (s - u)).exp();
        let weight = (0.5 * params.a * du.norm_squared() + params.b * phi).exp();
        let (best, dir) = dirs.iter().map(|xi| (xi.dot(&(w * xi)), *xi)).fold(
            (f64::NEG_INFINITY, dirs[0]),
            |m, v| if v.0 > m.0 { v } else { m },
        );
        (weight * best, dir)
    };
    let mut out = PogorelovField {
        values: Vec::with_capacity(grid.n_interior()),
        boundary_values: Vec::with_capacity(grid.n_boundary()),
        max: f64::NEG_INFINITY,
        interior_max: f64::NEG_INFINITY,
        argmax_x: P2::zeros(),
        argmax_dir: dirs[0],
        argmax_on_boundary: false,
    };
    for n in 0..grid.n_interior() {
        let (v, dir) = eval(&it.w[n], &it.du[n], sub.interior[n], it.u.interior[n]);
        if v > out.max {
            out.max = v;
            out.argmax_x = grid.interior_point(n);
            out.argmax_dir = dir;
        }
        out.values.push(v);
    }
    out.interior_max = out.max;
    let (du, d2u) = boundary_derivatives(grid, &it.u);
    for (b, x) in grid.boundary_points().iter().enumerate() {
        let v = match ps.a.value(&vec2(x), &vec2(&du[b])) {
            Ok(a) => {
                let (v, dir) = eval(
                    &(d2u[b] - to_m2(&a)),
                    &du[b],
                    sub.boundary[b],
                    it.u.boundary[b],
                );
                if v > out.max {
                    out.max = v;
                    out.argmax_x = *x;
                    out.argmax_dir = dir;
                    out.argmax_on_boundary = true;
                }
                v
            }
            Err(_) => f64::NAN,
        };
        out.boundary_values.push(v);
    }
    out
}

/// Tangential `w_ττ` at the boundary-adjacent nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryW {
    pub nodes: Vec<usize>,
    pub values: Vec<f64>,
    pub min: f64,
    pub argmin_node: Option<usize>,
}

/// `w_ττ = τᵀ(D²u − A(x, Du))τ` at boundary-adjacent nodes, with `τ` the
/// unit tangent at the closest boundary point.
pub fn boundary_w(grid: &Grid, it: &EllipticIterate) -> BoundaryW {
    let mut out = BoundaryW {
        nodes: Vec::new(),
        values: Vec::new(),
        min: f64::INFINITY,
        argmin_node: None,
    };
    for n in (0..grid.n_interior()).filter(|&n| grid.is_boundary_adjacent(n)) {
        let x = grid.interior_point(n);
        let nu = grid
            .domain
            .outward_normal(&grid.domain.closest_boundary_point(&x));
        let tau = P2::new(-nu.y, nu.x);
        let v = tau.dot(&(it.w[n] * tau));
        if v < out.min {
            out.min = v;
            out.argmin_node = Some(n);
        }
        out.nodes.push(n);
        out.values.push(v);
    }
    out
}

/// Observed values of the estimate quantities for one iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    /// `max |D²u|` over the interior nodes (spectral norm).
    pub sup_d2u: f64,
    /// `max |D²u|` over boundary-adjacent nodes, the proxy for `sup_∂Ω`.
    pub sup_d2u_boundary: f64,
    /// `sup_Ω|D²u| / (1 + sup_∂Ω|D²u|)`.
    pub c_est: f64,
    pub min_boundary_w: f64,
    pub kappa: f64,
    /// Maxima of `e^{κu}|Du|` over boundary-adjacent and remaining nodes.
    pub grad_fn_boundary_max: f64,
    pub grad_fn_interior_max: f64,
    /// Whether the maximum of `e^{κu}|Du|` sits at a boundary-adjacent node.
    pub grad_max_on_boundary: bool,
    /// `max |u|`.
    pub k0_observed: f64,
    /// `max(max|u̲|, max|φ|)`, the bound the comparison argument gives.
    pub k0_bound: f64,
    /// `max |Du|`.
    pub k1_observed: f64,
}

impl EstimateReport {
    pub const CSV_HEADER: &'static str = "sup_d2u,sup_d2u_boundary,c_est,min_boundary_w,kappa,grad_fn_boundary_max,grad_fn_interior_max,grad_max_on_boundary,k0_observed,k0_bound,k1_observed";

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{:e},{:e},{:e}",
            self.sup_d2u,
            self.sup_d2u_boundary,
            self.c_est,
            self.min_boundary_w,
            self.kappa,
            self.grad_fn_boundary_max,
            self.grad_fn_interior_max,
            self.grad_max_on_boundary,
            self.k0_observed,
            self.k0_bound,
            self.k1_observed
        )
    }
}

impl fmt::Display for EstimateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sup |D²u|            {:.6e}", self.sup_d2u)?;
        writeln!(f, "sup |D²u| near ∂Ω    {:.6e}", self.sup_d2u_boundary)?;
        writeln!(f, "C_est                {:.6e}", self.c_est)?;
        writeln!(f, "min w_ττ near ∂Ω     {:.6e}", self.min_boundary_w)?;
        writeln!(
            f,
            "κ = {}: max e^(κu)|Du| {:.6e} near ∂Ω, {:.6e} inside{}",
            self.kappa,
            self.grad_fn_boundary_max,
            self.grad_fn_interior_max,
            if self.grad_max_on_boundary {
                ""
            } else {
                " (maximum not near ∂Ω)"
            }
        )?;
        writeln!(
            f,
            "K0 observed {:.6e} (bound {:.6e})",
            self.k0_observed, self.k0_bound
        )?;
        write!(f, "K1 observed {:.6e}", self.k1_observed)
    }
}

fn grad_fn_maxima(grid: &Grid, it: &EllipticIterate, kappa: f64) -> (f64, f64) {
    let mut bnd = f64::NEG_INFINITY;
    let mut inner = f64::NEG_INFINITY;
    for n in 0..grid.n_interior() {
        let v = (kappa * it.u.interior[n]).exp() * it.du[n].norm();
        if grid.is_boundary_adjacent(n) {
            bnd = bnd.max(v);
        } else {
            inner = inner.max(v);
        }
    }
    (bnd, inner)
}

/// Evaluates the estimate quantities. `κ` is the smallest power of two
/// `2^k`, `0 ≤ k ≤ 20`, with `κ ≥ μ0(1 + G²)/G²` (`G = max|Du|`) whose
/// `e^{κu}|Du|` peaks near ∂Ω; if none does, the smallest admissible power.
pub fn estimate_report(
    ps: &ProblemSpec,
    grid: &Grid,
    it: &EllipticIterate,
    sub: &ScalarField,
    mu0: f64,
) -> EstimateReport {
    let mut sup_d2u: f64 = 0.0;
    let mut sup_d2u_boundary: f64 = 0.0;
    for n in 0..grid.n_interior() {
        let v = sym2_norm(&it.d2u[n]);
        sup_d2u = sup_d2u.max(v);
        if grid.is_boundary_adjacent(n) {
            sup_d2u_boundary = sup_d2u_boundary.max(v);
        }
    }
    let g = it.max_grad();
    let need = if g > 0.0 {
        mu0 * (1.0 + g * g) / (g * g)
    } else {
        0.0
    };
    let admissible: Vec<f64> = (0..=20)
        .map(|k| f64::powi(2.0, k))
        .filter(|&k| k >= need)
        .collect();
    let pick = admissible
        .iter()
        .copied()
        .find(|&k| {
            let (b, i) = grad_fn_maxima(grid, it, k);
            i <= b
        })
        .or_else(|| admissible.first().copied())
        .unwrap_or(f64::powi(2.0, 20));
    let (grad_fn_boundary_max, grad_fn_interior_max) = grad_fn_maxima(grid, it, pick);
    let abs_max = |f: &ScalarField| f.max_abs();
    let phi_max = grid
        .boundary_points()
        .iter()
        .map(|x| (ps.phi)(x).abs())
        .fold(0.0, f64::max);
    EstimateReport {
        sup_d2u,
        sup_d2u_boundary,
        c_est: sup_d2u / (1.0 + sup_d2u_boundary),
        min_boundary_w: boundary_w(grid, it).min,
        kappa: pick,
        grad_fn_boundary_max,
        grad_fn_interior_max,
        grad_max_on_boundary: grad_fn_interior_max <= grad_fn_boundary_max,
        k0_observed: abs_max(&it.u),
        k0_bound: abs_max(sub).max(phi_max),
        k1_observed: g,
    }
}
