//! Worked example models and random models with a planted Jordan structure
//! at `z = 1`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{spectral_norm, Mat};
use crate::model::ArModel;

/// `A°_1 = diag(1, α, α, α, α, α)` on `R^6`: one random walk, five stable AR(1)s.
pub fn i1_band(alpha: f64) -> ArModel {
    let mut d = vec![alpha; 6];
    d[0] = 1.0;
    ArModel::new(vec![Mat::from_diagonal(&DVector::from_vec(d))]).expect("valid fixture")
}

/// `x_{1,t} = x_{1,t−1} + x_{2,t−1} + ε_{1,t}`, `x_2`, `x_3` random walks,
/// the remaining three coordinates stable AR(1)s with coefficient `α`.
pub fn i2_band(alpha: f64) -> ArModel {
    let mut d = vec![alpha; 6];
    d[..3].fill(1.0);
    let mut a = Mat::from_diagonal(&DVector::from_vec(d));
    a[(0, 1)] = 1.0;
    ArModel::new(vec![a]).expect("valid fixture")
}

/// `A°_1 = 0.5·I` on `R^6`.
pub fn stationary() -> ArModel {
    ArModel::new(vec![Mat::identity(6, 6) * 0.5]).expect("valid fixture")
}

/// A random model together with the structure planted in it.
#[derive(Debug, Clone)]
pub struct PlantedModel {
    pub model: ArModel,
    /// Jordan block sizes at 1.
    pub blocks: Vec<usize>,
    /// Largest block, i.e. the pole order.
    pub d: usize,
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// `Q·diag(s)·Q'` with orthogonal `Q, Q'` and `s ∈ [0.5, 2]`: condition ≤ 4.
fn well_conditioned(rng: &mut ChaCha8Rng, p: usize) -> Mat {
    let q1 = gaussian(rng, p, p).qr().q();
    let q2 = gaussian(rng, p, p).qr().q();
    let s = DVector::from_fn(p, |_, _| rng.random_range(0.5..2.0));
    q1 * Mat::from_diagonal(&s) * q2
}

/// Random matrix with spectral norm drawn from `[0, max_norm]`.
fn contraction(rng: &mut ChaCha8Rng, n: usize, max_norm: f64) -> Mat {
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    let g = gaussian(rng, n, n);
    let norm = spectral_norm(&g).max(1e-12);
    g * (rng.random_range(0.0..max_norm) / norm)
}

fn jordan_at_one(blocks: &[usize]) -> Mat {
    let r: usize = blocks.iter().sum();
    let mut j = Mat::identity(r, r);
    let mut start = 0;
    for &b in blocks {
        for i in 0..b.saturating_sub(1) {
            j[(start + i, start + i + 1)] = 1.0;
        }
        start += b;
    }
    j
}

/// Coefficients of `Π (I − F_i z)`, constant term first.
fn product_of_linear(factors: &[Mat], n: usize) -> Vec<Mat> {
    let mut poly = vec![Mat::identity(n, n)];
    for f in factors {
        let mut next = vec![Mat::zeros(n, n); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * f;
        }
        poly = next;
    }
    poly
}

fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let (ra, rb) = (a.nrows(), b.nrows());
    let mut m = Mat::zeros(ra + rb, ra + rb);
    m.view_mut((0, 0), (ra, ra)).copy_from(a);
    m.view_mut((ra, ra), (rb, rb)).copy_from(b);
    m
}

/// `A(z) = V · diag(U(z), S(z)) · V^{-1}` with
/// `U(z) = (I − J z)·Π_{i≥2}(I − Ψ_i z)`, `J` the Jordan matrix at 1 with the
/// given block sizes, `S(z) = Π (I − Φ_i z)`, and `‖Ψ_i‖, ‖Φ_i‖ ≤ 0.6`.
pub fn planted_model(seed: u64, p: usize, k: usize, blocks: &[usize]) -> PlantedModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r: usize = blocks.iter().sum();
    assert!(r >= 1 && r <= p && k >= 1, "invalid planted structure");
    let s = p - r;
    let mut u_factors = vec![jordan_at_one(blocks)];
    for _ in 1..k {
        u_factors.push(contraction(&mut rng, r, 0.6));
    }
    let s_factors: Vec<Mat> = (0..k).map(|_| contraction(&mut rng, s, 0.6)).collect();
    let u = product_of_linear(&u_factors, r);
    let st = product_of_linear(&s_factors, s);
    let v = well_conditioned(&mut rng, p);
    let v_inv = v.clone().try_inverse().expect("well conditioned");
    let coeffs = (1..=k).map(|h| -(&v * block_diag(&u[h], &st[h]) * &v_inv)).collect();
    PlantedModel {
        model: ArModel::new(coeffs).expect("finite coefficients"),
        blocks: blocks.to_vec(),
        d: blocks.iter().copied().max().unwrap_or(0),
    }
}

/// Random partition of a unit-root dimension into blocks of size at most
/// `max_block`.
fn random_blocks(rng: &mut ChaCha8Rng, r: usize, max_block: usize) -> Vec<usize> {
    let mut left = r;
    let mut blocks = Vec::new();
    while left > 0 {
        let b = rng.random_range(1..=left.min(max_block));
        blocks.push(b);
        left -= b;
    }
    blocks
}

/// Random model with `p ≤ 8`, `k ≤ 3` and Jordan blocks of size ≤ 4 at 1.
pub fn random_pass_model(seed: u64) -> PlantedModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let p = rng.random_range(2..=8);
    let k = rng.random_range(1..=3);
    let r = rng.random_range(1..=p.min(6));
    let blocks = random_blocks(&mut rng, r, 4);
    planted_model(rng.random(), p, k, &blocks)
}

/// `k = 1` model `A°_1 = V(J ⊕ Φ)V^{-1}` whose largest block at 1 has size
/// `largest` (1..=4).
pub fn random_ar1_jordan(seed: u64, largest: usize) -> PlantedModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51_7cc1_b727_220a);
    let p = rng.random_range(largest.max(2)..=8);
    let mut blocks = vec![largest];
    let extra = rng.random_range(0..=(p - largest));
    blocks.extend(random_blocks(&mut rng, extra, largest));
    planted_model(rng.random(), p, 1, &blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roots::{assert_finite_type, root_diagnostics};

    #[test]
    fn fixtures_have_expected_shape() {
        assert_eq!(i1_band(0.5).p(), 6);
        assert_eq!(i2_band(0.5).coeffs()[0][(0, 1)], 1.0);
        assert_eq!(stationary().k(), 1);
    }

    #[test]
    fn planted_models_pass_the_root_check() {
        for seed in 0..40 {
            let pm = random_pass_model(seed);
            let diag = root_diagnostics(&pm.model, &Default::default());
            assert!(
                assert_finite_type(&diag).is_pass(),
                "seed {seed}: {:?} {:?}",
                pm.blocks,
                diag
            );
            assert_eq!(diag.unit_cluster_size, pm.blocks.iter().sum::<usize>(), "seed {seed}");
        }
    }

    #[test]
    fn ar1_jordan_models_have_requested_block() {
        for largest in 1..=4 {
            let pm = random_ar1_jordan(largest as u64, largest);
            assert_eq!(pm.d, largest);
            assert_eq!(pm.model.k(), 1);
        }
    }
}
