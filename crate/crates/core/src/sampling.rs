//! Seeded random matrices: Haar unitaries, Hermitian matrices, density matrices.
//!
//! These feed the brute-force oracles (random-unitary sweeps over the bounds)
//! and the property tests. All functions take an explicit RNG so concurrent
//! runs stay reproducible.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::matcore::ComplexMatrix;

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed unitary: Gram-Schmidt of a complex Ginibre matrix.
///
/// Gram-Schmidt leaves `R` with a positive real diagonal, which is exactly
/// the phase convention that makes `Q` Haar distributed.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    loop {
        let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
        let mut degenerate = false;
        for _ in 0..dim {
            let mut v: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
            // two passes keep the columns orthogonal to round-off
            for _ in 0..2 {
                for q in &cols {
                    let proj: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (x, &qi) in v.iter_mut().zip(q) {
                        *x -= proj * qi;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                degenerate = true;
                break;
            }
            v.iter_mut().for_each(|z| *z /= norm);
            cols.push(v);
        }
        if !degenerate {
            return ComplexMatrix::from_columns(&cols).expect("square by construction");
        }
    }
}

/// Random Hermitian matrix with Gaussian entries (GUE up to scale).
pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        m[(i, i)] = Complex64::new(rng.sample(StandardNormal), 0.0);
        for j in i + 1..dim {
            let z = gaussian(rng) * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Random probability vector sorted non-increasing.
pub fn random_weights(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut w: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w.sort_by(|a, b| b.total_cmp(a));
    w
}

/// Random full-rank density matrix `U diag(w) U^dagger` with Haar `U`.
pub fn random_density_matrix(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let w = random_weights(dim, rng);
    let u = haar_unitary(dim, rng);
    let d = ComplexMatrix::from_real_diagonal(&w);
    let rho = &(&u * &d) * &u.adjoint();
    rho.hermitian_part()
}

/// Block-diagonal unitary with independent Haar blocks on the given index sets.
pub fn block_haar_unitary(dim: usize, blocks: &[Vec<usize>], rng: &mut impl Rng) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(dim);
    for block in blocks {
        let ub = haar_unitary(block.len(), rng);
        for (a, &i) in block.iter().enumerate() {
            for (b, &j) in block.iter().enumerate() {
                u[(i, j)] = ub[(a, b)];
            }
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_samples_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=6 {
            let u = haar_unitary(n, &mut rng);
            assert!(u.unitarity_deviation() < 1e-13);
        }
    }

    #[test]
    fn random_density_matrix_has_unit_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density_matrix(4, &mut rng);
        assert!((rho.trace().re - 1.0).abs() < 1e-13);
        assert!(rho.hermitian_deviation() == 0.0);
    }

    #[test]
    fn block_unitary_respects_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let blocks = vec![vec![0, 2], vec![1, 3]];
        let u = block_haar_unitary(4, &blocks, &mut rng);
        assert!(u.unitarity_deviation() < 1e-13);
        assert_eq!(u[(0, 1)].norm(), 0.0);
        assert_eq!(u[(2, 3)].norm(), 0.0);
    }
}
