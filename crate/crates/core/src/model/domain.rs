use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use super::transform::Diffeomorphism;
use crate::{Vector, P2};

/// Bounded planar domain Ω with a signed distance `d` (positive inside).
#[derive(Clone)]
pub enum Domain {
    Rectangle {
        lower: P2,
        upper: P2,
    },
    Disc {
        center: P2,
        radius: f64,
    },
    /// Rectangle whose corners are rounded with the given radius.
    RoundedRectangle {
        lower: P2,
        upper: P2,
        radius: f64,
    },
    /// Simple polygon; vertices are normalised to counter-clockwise order.
    Polygon {
        vertices: Vec<P2>,
    },
    /// Image of `base` under a diffeomorphism. `d` is the pulled-back level
    /// set function, which has the right sign but is not a true distance.
    Mapped {
        base: Box<Domain>,
        map: Arc<dyn Diffeomorphism>,
    },
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Rectangle { lower, upper } => f
                .debug_struct("Rectangle")
                .field("lower", &[lower.x, lower.y])
                .field("upper", &[upper.x, upper.y])
                .finish(),
            Domain::Disc { center, radius } => f
                .debug_struct("Disc")
                .field("center", &[center.x, center.y])
                .field("radius", radius)
                .finish(),
            Domain::RoundedRectangle {
                lower,
                upper,
                radius,
            } => f
                .debug_struct("RoundedRectangle")
                .field("lower", &[lower.x, lower.y])
                .field("upper", &[upper.x, upper.y])
                .field("radius", radius)
                .finish(),
            Domain::Polygon { vertices } => f
                .debug_struct("Polygon")
                .field("vertices", &vertices.len())
                .finish(),
            Domain::Mapped { base, .. } => f.debug_struct("Mapped").field("base", base).finish(),
        }
    }
}

/// A smooth boundary point with its outward normal and curvature.
#[derive(Clone, Copy, Debug)]
pub struct BoundarySample {
    pub point: P2,
    pub normal: P2,
    pub curvature: f64,
}

impl BoundarySample {
    /// Unit tangent, counter-clockwise.
    pub fn tangent(&self) -> P2 {
        P2::new(-self.normal.y, self.normal.x)
    }
}

enum Piece {
    Line(P2, P2),
    Arc { center: P2, radius: f64, start: f64 },
}

impl Piece {
    fn length(&self) -> f64 {
        match self {
            Piece::Line(a, b) => (b - a).norm(),
            Piece::Arc { radius, .. } => radius * FRAC_PI_2,
        }
    }

    fn at(&self, s: f64) -> (P2, P2, f64) {
        match self {
            Piece::Line(a, b) => {
                let t = b - a;
                let n = P2::new(t.y, -t.x).normalize();
                (a + s * t, n, 0.0)
            }
            Piece::Arc {
                center,
                radius,
                start,
            } => {
                let ang = start + s * FRAC_PI_2;
                let n = P2::new(ang.cos(), ang.sin());
                (center + *radius * n, n, 1.0 / radius)
            }
        }
    }
}

impl Domain {
    pub fn unit_square() -> Self {
        Domain::Rectangle {
            lower: P2::new(0.0, 0.0),
            upper: P2::new(1.0, 1.0),
        }
    }

    /// The unit square centred at the origin, `[−½, ½]²`.
    pub fn centered_unit_square() -> Self {
        Domain::Rectangle {
            lower: P2::new(-0.5, -0.5),
            upper: P2::new(0.5, 0.5),
        }
    }

    pub fn unit_disc() -> Self {
        Domain::Disc {
            center: P2::zeros(),
            radius: 1.0,
        }
    }

    /// L-shaped domain `[0,1]² \ (½,1]²`.
    pub fn l_shape() -> Self {
        Domain::polygon(vec![
            P2::new(0.0, 0.0),
            P2::new(1.0, 0.0),
            P2::new(1.0, 0.5),
            P2::new(0.5, 0.5),
            P2::new(0.5, 1.0),
            P2::new(0.0, 1.0),
        ])
    }

    pub fn polygon(mut vertices: Vec<P2>) -> Self {
        let area: f64 = (0..vertices.len())
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % vertices.len()];
                a.x * b.y - b.x * a.y
            })
            .sum();
        if area < 0.0 {
            vertices.reverse();
        }
        Domain::Polygon { vertices }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Domain::Rectangle { .. } => "rectangle",
            Domain::Disc { .. } => "disc",
            Domain::RoundedRectangle { .. } => "rounded-rectangle",
            Domain::Polygon { .. } => "polygon",
            Domain::Mapped { .. } => "mapped",
        }
    }

    pub fn signed_distance(&self, x: &P2) -> f64 {
        match self {
            Domain::Rectangle { lower, upper } => {
                let c = 0.5 * (lower + upper);
                let half = 0.5 * (upper - lower);
                let q = (x - c).abs() - half;
                let outside = P2::new(q.x.max(0.0), q.y.max(0.0)).norm();
                let inside = q.x.max(q.y).min(0.0);
                -(outside + inside)
            }
            Domain::Disc { center, radius } => radius - (x - center).norm(),
            Domain::RoundedRectangle {
                lower,
                upper,
                radius,
            } => {
                let c = 0.5 * (lower + upper);
                let half = 0.5 * (upper - lower) - P2::new(*radius, *radius);
                let q = (x - c).abs() - half;
                let outside = P2::new(q.x.max(0.0), q.y.max(0.0)).norm();
                let inside = q.x.max(q.y).min(0.0);
                -(outside + inside - radius)
            }
            Domain::Polygon { vertices } => {
                let (dist, _) = polygon_nearest(vertices, x);
                if point_in_polygon(vertices, x) {
                    dist
                } else {
                    -dist
                }
            }
            Domain::Mapped { base, map } => {
                let y = Vector::from_column_slice(&[x.x, x.y]);
                let pre = map.inverse(&y);
                base.signed_distance(&P2::new(pre[0], pre[1]))
            }
        }
    }

    pub fn contains(&self, x: &P2) -> bool {
        self.signed_distance(x) > 0.0
    }

    /// Gradient of the signed distance (points inward).
    pub fn distance_gradient(&self, x: &P2) -> P2 {
        match self {
            Domain::Rectangle { lower, upper } => {
                let dists = [
                    (x.x - lower.x, P2::new(1.0, 0.0)),
                    (upper.x - x.x, P2::new(-1.0, 0.0)),
                    (x.y - lower.y, P2::new(0.0, 1.0)),
                    (upper.y - x.y, P2::new(0.0, -1.0)),
                ];
                if self.contains(x) || dists.iter().all(|(d, _)| *d >= 0.0) {
                    dists
                        .iter()
                        .min_by(|a, b| a.0.total_cmp(&b.0))
                        .map(|(_, g)| *g)
                        .unwrap()
                } else {
                    fd_gradient(|z| self.signed_distance(z), x)
                }
            }
            Domain::Disc { center, .. } => {
                let r = x - center;
                let n = r.norm();
                if n == 0.0 {
                    P2::new(1.0, 0.0)
                } else {
                    -r / n
                }
            }
            Domain::RoundedRectangle {
                lower,
                upper,
                radius,
            } => {
                let c = 0.5 * (lower + upper);
                let half = 0.5 * (upper - lower) - P2::new(*radius, *radius);
                let rel = x - c;
                let s = P2::new(sign(rel.x), sign(rel.y));
                let q = rel.abs() - half;
                if q.x > 0.0 && q.y > 0.0 {
                    -P2::new(s.x * q.x, s.y * q.y).normalize()
                } else if q.x > q.y {
                    P2::new(-s.x, 0.0)
                } else {
                    P2::new(0.0, -s.y)
                }
            }
            Domain::Polygon { vertices } => {
                let (dist, (seg, q)) = polygon_nearest(vertices, x);
                if dist > 1e-14 {
                    let g = (x - q) / dist;
                    if point_in_polygon(vertices, x) {
                        g
                    } else {
                        -g
                    }
                } else {
                    let a = vertices[seg];
                    let b = vertices[(seg + 1) % vertices.len()];
                    let t = (b - a).normalize();
                    P2::new(-t.y, t.x)
                }
            }
            Domain::Mapped { .. } => fd_gradient(|z| self.signed_distance(z), x),
        }
    }

    /// Outward unit normal γ at (or near) a boundary point.
    pub fn outward_normal(&self, x: &P2) -> P2 {
        let g = -self.distance_gradient(x);
        g / g.norm()
    }

    pub fn closest_boundary_point(&self, x: &P2) -> P2 {
        match self {
            Domain::Polygon { vertices } => polygon_nearest(vertices, x).1 .1,
            Domain::Mapped { .. } => {
                let mut z = *x;
                for _ in 0..20 {
                    let d = self.signed_distance(&z);
                    let g = self.distance_gradient(&z);
                    z -= d * g / g.norm_squared();
                }
                z
            }
            _ => x - self.signed_distance(x) * self.distance_gradient(x),
        }
    }

    /// Curvature `D_iγ_j τ_iτ_j` of ∂Ω at a boundary point.
    pub fn curvature(&self, x: &P2) -> f64 {
        match self {
            Domain::Rectangle { .. } | Domain::Polygon { .. } => 0.0,
            Domain::Disc { radius, .. } => 1.0 / radius,
            Domain::RoundedRectangle {
                lower,
                upper,
                radius,
            } => {
                let c = 0.5 * (lower + upper);
                let half = 0.5 * (upper - lower) - P2::new(*radius, *radius);
                let q = (x - c).abs() - half;
                if q.x > 1e-12 && q.y > 1e-12 {
                    1.0 / radius
                } else {
                    0.0
                }
            }
            Domain::Mapped { .. } => {
                // derivative of γ along τ by central differences on ∂Ω
                let n = self.outward_normal(x);
                let tau = P2::new(-n.y, n.x);
                let s = 1e-5;
                let fwd = self.closest_boundary_point(&(x + s * tau));
                let bwd = self.closest_boundary_point(&(x - s * tau));
                let dn = (self.outward_normal(&fwd) - self.outward_normal(&bwd)) / (2.0 * s);
                dn.dot(&tau)
            }
        }
    }

    pub fn bounding_box(&self) -> (P2, P2) {
        match self {
            Domain::Rectangle { lower, upper } | Domain::RoundedRectangle { lower, upper, .. } => {
                (*lower, *upper)
            }
            Domain::Disc { center, radius } => (
                center - P2::new(*radius, *radius),
                center + P2::new(*radius, *radius),
            ),
            Domain::Polygon { vertices } => bbox(vertices.iter()),
            Domain::Mapped { .. } => {
                let pts = self.boundary_polygon(1024);
                let (lo, hi) = bbox(pts.iter());
                let pad = 1e-3 * (hi - lo).norm();
                (lo - P2::new(pad, pad), hi + P2::new(pad, pad))
            }
        }
    }

    /// Fraction θ ∈ (0, 1] along the segment `from → to` where it first
    /// leaves Ω; `from` must be inside. Returns 1 when no crossing is found.
    pub fn segment_exit(&self, from: &P2, to: &P2) -> f64 {
        let dir = to - from;
        match self {
            Domain::Rectangle { lower, upper } => {
                let mut theta: f64 = 1.0;
                for k in 0..2 {
                    if dir[k] > 0.0 && to[k] > upper[k] {
                        theta = theta.min((upper[k] - from[k]) / dir[k]);
                    } else if dir[k] < 0.0 && to[k] < lower[k] {
                        theta = theta.min((lower[k] - from[k]) / dir[k]);
                    }
                }
                theta
            }
            Domain::Disc { center, radius } => {
                let f = from - center;
                let a = dir.norm_squared();
                let b = f.dot(&dir);
                let c = f.norm_squared() - radius * radius;
                let disc = (b * b - a * c).max(0.0);
                // c < 0 inside, so the positive root is the exit; stable form
                let theta = -c / (b + disc.sqrt());
                theta.clamp(f64::MIN_POSITIVE, 1.0)
            }
            _ => {
                // first sampled point outside brackets the first crossing
                let samples = 64;
                let hi = (1..=samples)
                    .map(|k| k as f64 / samples as f64)
                    .find(|&s| self.signed_distance(&(from + s * dir)) <= 0.0)
                    .unwrap_or(1.0);
                let (mut lo, mut hi) = (hi - 1.0 / samples as f64, hi);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.signed_distance(&(from + mid * dir)) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-16 {
                        break;
                    }
                }
                hi
            }
        }
    }

    fn pieces(&self) -> Option<Vec<Piece>> {
        match self {
            Domain::Rectangle { lower, upper } => {
                let v = [
                    *lower,
                    P2::new(upper.x, lower.y),
                    *upper,
                    P2::new(lower.x, upper.y),
                ];
                Some((0..4).map(|i| Piece::Line(v[i], v[(i + 1) % 4])).collect())
            }
            Domain::Polygon { vertices } => Some(
                (0..vertices.len())
                    .map(|i| Piece::Line(vertices[i], vertices[(i + 1) % vertices.len()]))
                    .collect(),
            ),
            Domain::RoundedRectangle {
                lower,
                upper,
                radius,
            } => {
                let r = *radius;
                let (l, u) = (lower, upper);
                Some(vec![
                    Piece::Line(P2::new(l.x + r, l.y), P2::new(u.x - r, l.y)),
                    Piece::Arc {
                        center: P2::new(u.x - r, l.y + r),
                        radius: r,
                        start: -FRAC_PI_2,
                    },
                    Piece::Line(P2::new(u.x, l.y + r), P2::new(u.x, u.y - r)),
                    Piece::Arc {
                        center: P2::new(u.x - r, u.y - r),
                        radius: r,
                        start: 0.0,
                    },
                    Piece::Line(P2::new(u.x - r, u.y), P2::new(l.x + r, u.y)),
                    Piece::Arc {
                        center: P2::new(l.x + r, u.y - r),
                        radius: r,
                        start: FRAC_PI_2,
                    },
                    Piece::Line(P2::new(l.x, u.y - r), P2::new(l.x, l.y + r)),
                    Piece::Arc {
                        center: P2::new(l.x + r, l.y + r),
                        radius: r,
                        start: PI,
                    },
                ])
            }
            _ => None,
        }
    }

    /// Counter-clockwise boundary polygon with about `n` vertices. Corners of
    /// piecewise boundaries are always included.
    pub fn boundary_polygon(&self, n: usize) -> Vec<P2> {
        match self {
            Domain::Disc { center, radius } => (0..n)
                .map(|k| {
                    let a = 2.0 * PI * k as f64 / n as f64;
                    center + *radius * P2::new(a.cos(), a.sin())
                })
                .collect(),
            Domain::Mapped { base, map } => {
                let mut pts: Vec<P2> = base
                    .boundary_polygon(n)
                    .into_iter()
                    .map(|p| {
                        let y = map.forward(&Vector::from_column_slice(&[p.x, p.y]));
                        P2::new(y[0], y[1])
                    })
                    .collect();
                let area: f64 = (0..pts.len())
                    .map(|i| {
                        let a = pts[i];
                        let b = pts[(i + 1) % pts.len()];
                        a.x * b.y - b.x * a.y
                    })
                    .sum();
                if area < 0.0 {
                    pts.reverse();
                }
                pts
            }
            _ => {
                let pieces = self.pieces().expect("piecewise boundary");
                let total: f64 = pieces.iter().map(Piece::length).sum();
                let mut out = Vec::with_capacity(n + pieces.len());
                for piece in &pieces {
                    let m = ((piece.length() / total * n as f64).round() as usize).max(1);
                    out.extend((0..m).map(|k| piece.at(k as f64 / m as f64).0));
                }
                out
            }
        }
    }

    /// About `n` smooth boundary points (corners excluded) with normals and
    /// curvature.
    pub fn boundary_samples(&self, n: usize) -> Vec<BoundarySample> {
        match self {
            Domain::Disc { center, radius } => (0..n)
                .map(|k| {
                    let a = 2.0 * PI * k as f64 / n as f64;
                    let normal = P2::new(a.cos(), a.sin());
                    BoundarySample {
                        point: center + *radius * normal,
                        normal,
                        curvature: 1.0 / radius,
                    }
                })
                .collect(),
            Domain::Mapped { .. } => {
                let poly = self.boundary_polygon(n);
                (0..poly.len())
                    .map(|k| {
                        let mid = 0.5 * (poly[k] + poly[(k + 1) % poly.len()]);
                        let point = self.closest_boundary_point(&mid);
                        BoundarySample {
                            point,
                            normal: self.outward_normal(&point),
                            curvature: self.curvature(&point),
                        }
                    })
                    .collect()
            }
            _ => {
                let pieces = self.pieces().expect("piecewise boundary");
                let total: f64 = pieces.iter().map(Piece::length).sum();
                let mut out = Vec::with_capacity(n + pieces.len());
                for piece in &pieces {
                    let m = ((piece.length() / total * n as f64).round() as usize).max(1);
                    out.extend((0..m).map(|k| {
                        let (point, normal, curvature) = piece.at((k as f64 + 0.5) / m as f64);
                        BoundarySample {
                            point,
                            normal,
                            curvature,
                        }
                    }));
                }
                out
            }
        }
    }
}

fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn bbox<'a>(pts: impl Iterator<Item = &'a P2>) -> (P2, P2) {
    let mut lo = P2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = P2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

fn fd_gradient(f: impl Fn(&P2) -> f64, x: &P2) -> P2 {
    let h = 1e-7;
    P2::new(
        (f(&(x + P2::new(h, 0.0))) - f(&(x - P2::new(h, 0.0)))) / (2.0 * h),
        (f(&(x + P2::new(0.0, h))) - f(&(x - P2::new(0.0, h)))) / (2.0 * h),
    )
}

/// Distance to the nearest edge, with the edge index and nearest point.
fn polygon_nearest(vertices: &[P2], x: &P2) -> (f64, (usize, P2)) {
    let mut best = (f64::INFINITY, (0, *x));
    for i in 0..vertices.len() {
        let a = vertices[i];
        let b = vertices[(i + 1) % vertices.len()];
        let ab = b - a;
        let t = ((x - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
        let q = a + t * ab;
        let d = (x - q).norm();
        if d < best.0 {
            best = (d, (i, q));
        }
    }
    best
}

fn point_in_polygon(vertices: &[P2], x: &P2) -> bool {
    let mut inside = false;
    let n = vertices.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[j]);
        if (a.y > x.y) != (b.y > x.y) && x.x < (b.x - a.x) * (x.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}
