//! Small dense linear-algebra helpers on top of nalgebra, plus serde adapters
//! that store vectors as flat arrays and matrices as arrays of rows.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub fn vector(coords: &[f64]) -> Vector {
    DVector::from_column_slice(coords)
}

pub fn unit(n: usize, i: usize) -> Vector {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

pub fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

pub fn max_asymmetry(m: &Matrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(m: &Matrix) -> (Vector, Matrix) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Apply `g` to the spectrum of a symmetric matrix.
pub fn sym_apply(values: &Vector, vectors: &Matrix, g: impl Fn(f64) -> f64) -> Matrix {
    let d = DMatrix::from_diagonal(&values.map(g));
    let out = vectors * d * vectors.transpose();
    (&out + out.transpose()) * 0.5
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn smallest_singular_value(m: &Matrix) -> f64 {
    m.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn invert(m: &Matrix) -> Result<Matrix> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular matrix".into()))
}

/// Orthonormal basis of the complement of the unit vector `theta`, as the
/// columns of an n×(n−1) matrix. Deterministic: Householder reflection that
/// maps `theta` to the first basis vector.
pub fn complement_basis(theta: &Vector) -> Matrix {
    let n = theta.len();
    let e1 = unit(n, 0);
    // Reflect with the sign that avoids cancellation.
    let s = if theta[0] >= 0.0 { 1.0 } else { -1.0 };
    let u = theta + &e1 * s;
    let un = u.norm_squared();
    let mut h = DMatrix::identity(n, n);
    if un > 1e-300 {
        h -= (&u * u.transpose()) * (2.0 / un);
    }
    // Columns 1..n of H span theta's complement (H is symmetric orthogonal and
    // H e1 = -s theta).
    h.columns(1, n - 1).into_owned()
}

/// Points of the unit sphere used as a deterministic direction net.
/// n=1: {+1,-1}; n=2: equally spaced angles; n≥3: Fibonacci lattice (n=3).
pub fn direction_net(n: usize, count: usize) -> Vec<Vector> {
    match n {
        1 => vec![vector(&[1.0]), vector(&[-1.0])],
        2 => (0..count)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * (k as f64) / (count as f64);
                vector(&[a.cos(), a.sin()])
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let y = 1.0 - 2.0 * (k as f64 + 0.5) / (count as f64);
                    let r = (1.0 - y * y).max(0.0).sqrt();
                    let a = golden * k as f64;
                    vector(&[r * a.cos(), y, r * a.sin()])
                })
                .collect()
        }
        _ => panic!("direction_net supports n ≤ 3"),
    }
}

pub mod serde_vector {
    use super::Vector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        let raw = Vec::<f64>::deserialize(d)?;
        Ok(Vector::from_vec(raw))
    }
}

pub mod serde_vectors {
    use super::Vector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vector], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = v.iter().map(|x| x.as_slice()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vector>, D::Error> {
        let raw = Vec::<Vec<f64>>::deserialize(d)?;
        Ok(raw.into_iter().map(Vector::from_vec).collect())
    }
}

pub mod serde_matrix {
    use super::Matrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows())
            .map(|i| m.row(i).iter().cloned().collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged matrix"));
        }
        Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }
}
