//! Sample sets in `x` and `p`.

use rand::Rng;

use crate::discretize::EllipticIterate;
use crate::model::Domain;
use crate::P2;

/// Cell-centred `m × m` points of the bounding box that lie in Ω.
pub fn x_grid(domain: &Domain, m: usize) -> Vec<P2> {
    let (lo, hi) = domain.bounding_box();
    let mut out = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..m {
            let x = P2::new(
                lo.x + (hi.x - lo.x) * (i as f64 + 0.5) / m as f64,
                lo.y + (hi.y - lo.y) * (j as f64 + 0.5) / m as f64,
            );
            if domain.contains(&x) {
                out.push(x);
            }
        }
    }
    out
}

/// The origin plus `rings` circles of `per_ring` points up to `radius`.
pub fn p_disc(radius: f64, rings: usize, per_ring: usize) -> Vec<P2> {
    let mut out = vec![P2::zeros()];
    for r in 1..=rings {
        let rho = radius * r as f64 / rings as f64;
        for k in 0..per_ring {
            let a = std::f64::consts::TAU * k as f64 / per_ring as f64;
            out.push(rho * P2::new(a.cos(), a.sin()));
        }
    }
    out
}

/// `count` points uniform in the disc of the given radius.
pub fn p_random(rng: &mut impl Rng, radius: f64, count: usize) -> Vec<P2> {
    (0..count)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            r * P2::new(a.cos(), a.sin())
        })
        .collect()
}

/// `count` points of Ω drawn by rejection from the bounding box.
pub fn x_random(rng: &mut impl Rng, domain: &Domain, count: usize) -> Vec<P2> {
    let (lo, hi) = domain.bounding_box();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = P2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if domain.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// Default `p` radius for an iterate: its gradient range inflated by 50%.
pub fn gradient_radius(it: &EllipticIterate) -> f64 {
    1.5 * it.max_grad()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_stay_in_range() {
        let d = Domain::unit_disc();
        assert!(x_grid(&d, 10).iter().all(|x| d.contains(x)));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(p_random(&mut rng, 0.9, 100).iter().all(|p| p.norm() <= 0.9));
        assert!(x_random(&mut rng, &d, 50).iter().all(|x| d.contains(x)));
        assert_eq!(p_disc(1.0, 2, 8).len(), 17);
    }
}
