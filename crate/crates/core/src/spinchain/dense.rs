//! Explicit matrix assembly and full diagonalization for small chains.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{ChainSpec, Operator};
use crate::error::{Error, Result};

pub const DENSE_MAX_SITES: usize = 10;

/// Full spectrum in ascending order with matching eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl DenseSpectrum {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k).iter().copied().collect()
    }
}

pub fn dense_hamiltonian(spec: &ChainSpec) -> Result<DMatrix<f64>> {
    spec.validate(DENSE_MAX_SITES)?;
    let dim = spec.dimension();
    let op = Operator::new(spec);
    let mut h = DMatrix::zeros(dim, dim);
    let mut unit = vec![0.0; dim];
    for c in 0..dim {
        unit[c] = 1.0;
        for r in 0..dim {
            h[(r, c)] = op.row(r, &unit);
        }
        unit[c] = 0.0;
    }
    Ok(h)
}

pub fn dense_oracle(spec: &ChainSpec) -> Result<DenseSpectrum> {
    if spec.n_sites > DENSE_MAX_SITES {
        return Err(Error::invalid(format!(
            "dense diagonalization is limited to {DENSE_MAX_SITES} sites"
        )));
    }
    let eig = SymmetricEigen::new(dense_hamiltonian(spec)?);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let columns: Vec<DVector<f64>> = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    Ok(DenseSpectrum {
        eigenvalues,
        eigenvectors: DMatrix::from_columns(&columns),
    })
}
