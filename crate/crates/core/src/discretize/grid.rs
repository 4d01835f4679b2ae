use std::fmt;

use super::DiscretizeError;
use crate::model::Domain;
use crate::P2;

/// Lattice nodes within `SNAP·h` of ∂Ω are treated as boundary nodes.
const SNAP: f64 = 1e-3;

/// Minimum number of distinct interior columns and rows.
pub const MIN_INTERIOR_PER_AXIS: usize = 3;

/// Arm directions in lattice steps: E, W, N, S, NE, SW, NW, SE.
/// Consecutive entries form opposite pairs.
pub const DIRECTIONS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, -1),
    (-1, 1),
    (1, -1),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArmEnd {
    Interior(usize),
    Boundary(usize),
}

/// One stencil arm. Its length is `frac · h · |direction|`, `frac ∈ (0, 1]`;
/// `frac < 1` only when the arm is cut short by ∂Ω.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arm {
    pub end: ArmEnd,
    pub frac: f64,
}

/// Finite-difference weights at one interior node. Index 0 is the node
/// itself and index `1 + k` the end of arm `k`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stencil {
    pub dx: [f64; 9],
    pub dy: [f64; 9],
    pub dxx: [f64; 9],
    pub dyy: [f64; 9],
    pub dxy: [f64; 9],
}

/// First- and second-derivative weights along a line with arms `a` (forward)
/// and `b` (backward); both exact on quadratics.
fn line_weights(a: f64, b: f64) -> ([f64; 3], [f64; 3]) {
    let fp = b / (a * (a + b));
    let fm = -a / (b * (a + b));
    let sp = 2.0 / (a * (a + b));
    let sm = 2.0 / (b * (a + b));
    ([-(fp + fm), fp, fm], [-(sp + sm), sp, sm])
}

/// Uniform Cartesian grid over the bounding box of Ω.
#[derive(Clone)]
pub struct Grid {
    pub domain: Domain,
    pub h: f64,
    origin: P2,
    nx: usize,
    ny: usize,
    kinds: Vec<NodeKind>,
    lattice_slot: Vec<Option<usize>>,
    interior: Vec<P2>,
    interior_ij: Vec<(usize, usize)>,
    boundary: Vec<P2>,
    boundary_lattice: Vec<Option<(usize, usize)>>,
    arms: Vec<[Arm; 8]>,
    stencils: Vec<Stencil>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("domain", &self.domain)
            .field("h", &self.h)
            .field("lattice", &(self.nx, self.ny))
            .field("interior", &self.interior.len())
            .field("boundary", &self.boundary.len())
            .finish()
    }
}

impl Grid {
    /// Classifies lattice nodes by signed distance and builds the eight arms
    /// of every interior node, cutting arms at ∂Ω where the neighbouring
    /// lattice node lies outside.
    pub fn build(domain: &Domain, h: f64) -> Result<Grid, DiscretizeError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(DiscretizeError::BadSpacing(h));
        }
        let (lo, hi) = domain.bounding_box();
        let nx = ((hi.x - lo.x) / h - 1e-9).ceil().max(1.0) as usize + 1;
        let ny = ((hi.y - lo.y) / h - 1e-9).ceil().max(1.0) as usize + 1;
        let pos = |i: usize, j: usize| P2::new(lo.x + i as f64 * h, lo.y + j as f64 * h);

        let mut kinds = vec![NodeKind::Exterior; nx * ny];
        let mut lattice_slot = vec![None; nx * ny];
        let mut interior = Vec::new();
        let mut interior_ij = Vec::new();
        let mut boundary = Vec::new();
        let mut boundary_lattice = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let x = pos(i, j);
                let d = domain.signed_distance(&x);
                let k = j * nx + i;
                if d.abs() < SNAP * h {
                    kinds[k] = NodeKind::Boundary;
                    lattice_slot[k] = Some(boundary.len());
                    boundary.push(x);
                    boundary_lattice.push(Some((i, j)));
                } else if d > 0.0 {
                    kinds[k] = NodeKind::Interior;
                    lattice_slot[k] = Some(interior.len());
                    interior.push(x);
                    interior_ij.push((i, j));
                }
            }
        }

        let mut cols: Vec<usize> = interior_ij.iter().map(|&(i, _)| i).collect();
        let mut rows: Vec<usize> = interior_ij.iter().map(|&(_, j)| j).collect();
        cols.sort_unstable();
        cols.dedup();
        rows.sort_unstable();
        rows.dedup();
        if cols.len() < MIN_INTERIOR_PER_AXIS || rows.len() < MIN_INTERIOR_PER_AXIS {
            return Err(DiscretizeError::TooCoarse {
                h,
                nx: cols.len(),
                ny: rows.len(),
                min: MIN_INTERIOR_PER_AXIS,
            });
        }

        let mut arms = Vec::with_capacity(interior.len());
        for (n, &(i, j)) in interior_ij.iter().enumerate() {
            let x0 = interior[n];
            let mut node_arms = [Arm {
                end: ArmEnd::Interior(n),
                frac: 1.0,
            }; 8];
            for (a, &(di, dj)) in DIRECTIONS.iter().enumerate() {
                let (ti, tj) = (i as i64 + di, j as i64 + dj);
                let inside_lattice = ti >= 0 && tj >= 0 && (ti as usize) < nx && (tj as usize) < ny;
                let target = x0 + h * P2::new(di as f64, dj as f64);
                let mut arm = None;
                if inside_lattice {
                    let k = tj as usize * nx + ti as usize;
                    // a segment between two admissible nodes may still leave a
                    // non-convex Ω; its midpoint catches that
                    let mid_ok = domain.signed_distance(&(0.5 * (x0 + target))) > -SNAP * h;
                    match (kinds[k], lattice_slot[k]) {
                        (NodeKind::Interior, Some(s)) if mid_ok => {
                            arm = Some(Arm {
                                end: ArmEnd::Interior(s),
                                frac: 1.0,
                            })
                        }
                        (NodeKind::Boundary, Some(s)) if mid_ok => {
                            arm = Some(Arm {
                                end: ArmEnd::Boundary(s),
                                frac: 1.0,
                            })
                        }
                        _ => {}
                    }
                }
                let arm = arm.unwrap_or_else(|| {
                    let frac = domain
                        .segment_exit(&x0, &target)
                        .clamp(f64::MIN_POSITIVE, 1.0);
                    let point = x0 + frac * (target - x0);
                    boundary.push(point);
                    boundary_lattice.push(None);
                    Arm {
                        end: ArmEnd::Boundary(boundary.len() - 1),
                        frac,
                    }
                });
                node_arms[a] = arm;
            }
            arms.push(node_arms);
        }

        let stencils = arms
            .iter()
            .map(|node_arms| {
                let mut st = Stencil::default();
                let diag = h * std::f64::consts::SQRT_2;
                let pair = |k: usize, len: f64| {
                    line_weights(node_arms[k].frac * len, node_arms[k + 1].frac * len)
                };
                let (fx, sx) = pair(0, h);
                let (fy, sy) = pair(2, h);
                let (_, sd) = pair(4, diag);
                let (_, se) = pair(6, diag);
                st.dx[0] = fx[0];
                st.dx[1] = fx[1];
                st.dx[2] = fx[2];
                st.dxx[0] = sx[0];
                st.dxx[1] = sx[1];
                st.dxx[2] = sx[2];
                st.dy[0] = fy[0];
                st.dy[3] = fy[1];
                st.dy[4] = fy[2];
                st.dyy[0] = sy[0];
                st.dyy[3] = sy[1];
                st.dyy[4] = sy[2];
                // u₁₂ = (∂²_d − ∂²_e)/2 with d = (1,1)/√2, e = (−1,1)/√2
                st.dxy[0] = 0.5 * (sd[0] - se[0]);
                st.dxy[5] = 0.5 * sd[1];
                st.dxy[6] = 0.5 * sd[2];
                st.dxy[7] = -0.5 * se[1];
                st.dxy[8] = -0.5 * se[2];
                st
            })
            .collect();

        Ok(Grid {
            domain: domain.clone(),
            h,
            origin: lo,
            nx,
            ny,
            kinds,
            lattice_slot,
            interior,
            interior_ij,
            boundary,
            boundary_lattice,
            arms,
            stencils,
        })
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn interior_points(&self) -> &[P2] {
        &self.interior
    }

    pub fn boundary_points(&self) -> &[P2] {
        &self.boundary
    }

    pub fn interior_point(&self, n: usize) -> P2 {
        self.interior[n]
    }

    pub fn arms(&self, n: usize) -> &[Arm; 8] {
        &self.arms[n]
    }

    pub fn stencil(&self, n: usize) -> &Stencil {
        &self.stencils[n]
    }

    /// Lattice dimensions `(nx, ny)` and lower corner.
    pub fn lattice(&self) -> (usize, usize, P2) {
        (self.nx, self.ny, self.origin)
    }

    pub fn kind_at(&self, i: usize, j: usize) -> NodeKind {
        self.kinds[j * self.nx + i]
    }

    /// Interior or boundary slot of lattice node `(i, j)`.
    pub fn slot_at(&self, i: usize, j: usize) -> Option<usize> {
        self.lattice_slot[j * self.nx + i]
    }

    pub fn interior_lattice_index(&self, n: usize) -> (usize, usize) {
        self.interior_ij[n]
    }

    /// Lattice index of a boundary point, `None` for arm intersections.
    pub fn boundary_lattice_index(&self, b: usize) -> Option<(usize, usize)> {
        self.boundary_lattice[b]
    }

    /// Interior nodes with at least one arm ending on ∂Ω.
    pub fn is_boundary_adjacent(&self, n: usize) -> bool {
        self.arms[n]
            .iter()
            .any(|a| matches!(a.end, ArmEnd::Boundary(_)))
    }

    /// The four axis neighbours (E, W, N, S) when all are interior nodes.
    pub fn axis_neighbors(&self, n: usize) -> Option<[usize; 4]> {
        let mut out = [0; 4];
        for (k, slot) in out.iter_mut().enumerate() {
            match self.arms[n][k].end {
                ArmEnd::Interior(m) => *slot = m,
                ArmEnd::Boundary(_) => return None,
            }
        }
        Some(out)
    }

    /// Number of distinct interior columns and rows.
    pub fn interior_extent(&self) -> (usize, usize) {
        let mut cols: Vec<usize> = self.interior_ij.iter().map(|&(i, _)| i).collect();
        let mut rows: Vec<usize> = self.interior_ij.iter().map(|&(_, j)| j).collect();
        cols.sort_unstable();
        cols.dedup();
        rows.sort_unstable();
        rows.dedup();
        (cols.len(), rows.len())
    }

    /// Largest `|m − n|` over all interior couplings `n → m` in the stencils,
    /// i.e. the half bandwidth of the linearized operator.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for (n, arms) in self.arms.iter().enumerate() {
            for a in arms {
                if let ArmEnd::Interior(m) = a.end {
                    bw = bw.max(m.abs_diff(n));
                }
            }
        }
        bw
    }
}
