#![allow(dead_code)]

use qcb_core::{Complex64, ComplexMatrix, ControlModel, DensityMatrix, Observable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn oscillator_drift() -> ComplexMatrix {
    ComplexMatrix::from_real_diagonal(&[0.5, 1.5, 2.5, 3.5])
}

pub fn tridiagonal(couplings: &[f64]) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(couplings.len() + 1);
    for (k, &c) in couplings.iter().enumerate() {
        h[(k, k + 1)] = Complex64::new(c, 0.0);
        h[(k + 1, k)] = Complex64::new(c, 0.0);
    }
    h
}

pub fn modified_oscillator() -> ControlModel {
    ControlModel::new(oscillator_drift(), vec![tridiagonal(&[1.0, 1.0, 1.0])]).unwrap()
}

pub fn paper_rho() -> DensityMatrix {
    DensityMatrix::diagonal(&[0.4, 0.3, 0.2, 0.1]).unwrap()
}

pub fn observable(m: ComplexMatrix) -> Observable {
    Observable::new(m).unwrap()
}
