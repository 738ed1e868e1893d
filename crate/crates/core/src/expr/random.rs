//! Seeded random expressions over the full grammar, for cross-engine
//! derivative checks and fuzzing.
//!
//! `ln`, `sqrt`, and division arguments are generated in the positive form
//! `c + u*u` with `c >= 0.5`, so the resulting trees evaluate totally on any
//! bounded box; callers still filter the rare overflow from nested `exp`.

use rand::Rng;

use super::Expr;

/// Draw a random expression of dimension `dim` with nesting depth at most
/// `max_depth`.
pub fn random_expr<R: Rng>(rng: &mut R, dim: usize, max_depth: usize) -> Expr {
    assert!(dim >= 1, "dimension must be at least 1");
    gen_node(rng, dim, max_depth)
}

fn leaf<R: Rng>(rng: &mut R, dim: usize) -> Expr {
    match rng.gen_range(0..5) {
        0 | 1 => Expr::x(rng.gen_range(0..dim), dim),
        2 | 3 => Expr::y(rng.gen_range(0..dim), dim),
        _ => Expr::constant(rng.gen_range(0.5..2.5), dim),
    }
}

/// A subtree that is strictly positive everywhere: `c + u*u` with `c >= 0.5`.
fn positive<R: Rng>(rng: &mut R, dim: usize, depth: usize) -> Expr {
    let c = Expr::constant(rng.gen_range(0.5..2.0), dim);
    let u = gen_node(rng, dim, depth);
    c.add(&u.mul(&u))
}

fn gen_node<R: Rng>(rng: &mut R, dim: usize, depth: usize) -> Expr {
    if depth == 0 {
        return leaf(rng, dim);
    }
    let next = depth - 1;
    match rng.gen_range(0..18) {
        0 | 1 | 2 => gen_node(rng, dim, next).add(&gen_node(rng, dim, next)),
        3 | 4 => gen_node(rng, dim, next).sub(&gen_node(rng, dim, next)),
        5 | 6 | 7 => gen_node(rng, dim, next).mul(&gen_node(rng, dim, next)),
        8 => gen_node(rng, dim, next).div(&positive(rng, dim, next)),
        9 => gen_node(rng, dim, next).neg(),
        10 | 11 => gen_node(rng, dim, next).sin(),
        12 | 13 => gen_node(rng, dim, next).cos(),
        14 => gen_node(rng, dim, next).exp(),
        15 => positive(rng, dim, next).sqrt(),
        16 => positive(rng, dim, next).ln(),
        _ => {
            let exponent = *[2.0, 3.0].get(rng.gen_range(0..2)).unwrap();
            gen_node(rng, dim, next).pow(exponent)
        }
    }
}
