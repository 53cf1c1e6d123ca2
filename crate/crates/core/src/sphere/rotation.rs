//! Elements of `SO(n)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// An orthogonal matrix acting by `x ↦ Rx`; on functions, `Rf(x) = f(Rᵀx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    matrix: DMatrix<f64>,
}

impl Rotation {
    pub fn identity(n: usize) -> Self {
        Rotation {
            matrix: DMatrix::identity(n, n),
        }
    }

    /// Rotation by `angle` in the `(i, j)` coordinate plane, taking `e_i`
    /// towards `e_j`.
    pub fn plane(n: usize, i: usize, j: usize, angle: f64) -> Result<Self> {
        if i >= n || j >= n || i == j {
            return Err(Error::Dimension {
                n,
                reason: "plane rotation needs two distinct coordinates below n",
            });
        }
        let mut m = DMatrix::identity(n, n);
        let (s, c) = angle.sin_cos();
        m[(i, i)] = c;
        m[(j, j)] = c;
        m[(j, i)] = s;
        m[(i, j)] = -s;
        Ok(Rotation { matrix: m })
    }

    /// Checks `RᵀR = I` and `det R = +1`, both within `1e-10`.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension {
                n: matrix.nrows(),
                reason: "rotation matrix must be square",
            });
        }
        let r = Rotation { matrix };
        let deviation = r.orthogonality_deviation();
        if deviation > 1e-10 {
            return Err(Error::NotOrthogonal { deviation });
        }
        let det = r.matrix.determinant();
        if (det - 1.0).abs() > 1e-10 {
            return Err(Error::NotOrthogonal {
                deviation: (det - 1.0).abs(),
            });
        }
        Ok(r)
    }

    /// Wraps a square matrix without validation.
    pub fn from_matrix_unchecked(matrix: DMatrix<f64>) -> Self {
        Rotation { matrix }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.matrix.column(i).iter().copied().collect()
    }

    /// Largest entry of `|RᵀR − I|`.
    pub fn orthogonality_deviation(&self) -> f64 {
        let n = self.n();
        let gram = self.matrix.transpose() * &self.matrix;
        (gram - DMatrix::<f64>::identity(n, n)).amax()
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    /// `Rx`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.matrix * DVector::from_column_slice(x);
        v.iter().copied().collect()
    }

    /// `Rᵀx`.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.apply_transpose_into(x, &mut out);
        out
    }

    /// `Rᵀx` into a caller buffer.
    pub fn apply_transpose_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.matrix.column(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Haar-distributed element of `SO(n)`.
///
/// QR of a Gaussian matrix, with columns of `Q` multiplied by the signs of
/// `diag R`; a negative determinant is fixed by negating the first column.
pub fn haar_rotation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Rotation {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    Rotation { matrix: q }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{ks_critical_1pct, ks_two_sample, sample_uniform_sphere, Estimate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_is_special_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..12 {
            for _ in 0..20 {
                let r = haar_rotation(n, &mut rng);
                assert!(r.orthogonality_deviation() < 1e-10);
                assert!((r.determinant() - 1.0).abs() < 1e-10);
                assert!(Rotation::from_matrix(r.matrix().clone()).is_ok());
            }
        }
    }

    #[test]
    fn first_column_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 5;
        let draws = 100_000;
        let mut coords: Vec<Vec<f64>> = (0..n).map(|_| Vec::with_capacity(draws)).collect();
        let mut diag_sq = Vec::with_capacity(draws);
        for _ in 0..draws {
            let c = haar_rotation(n, &mut rng).column(0);
            for (i, v) in c.iter().enumerate() {
                coords[i].push(*v);
            }
            diag_sq.push(c[0] * c[0]);
        }
        for samples in &coords {
            let e = Estimate::from_samples(samples, 12).unwrap();
            assert!(e.mean.abs() <= 3.0 * e.std_error, "{e:?}");
        }
        let e = Estimate::from_samples(&diag_sq, 12).unwrap();
        assert!((e.mean - 1.0 / n as f64).abs() <= 3.0 * e.std_error, "{e:?}");
    }

    /// Two-sample KS: `R v` for fixed `v` against direct uniform draws.
    #[test]
    fn rotated_vector_matches_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 4;
        let m = 20_000;
        let v = [0.5, -0.5, 0.5, 0.5];
        let mut a: Vec<f64> = (0..m).map(|_| haar_rotation(n, &mut rng).apply(&v)[2]).collect();
        let mut b: Vec<f64> = (0..m).map(|_| sample_uniform_sphere(n, &mut rng)[2]).collect();
        let d = ks_two_sample(&mut a, &mut b);
        assert!(d < ks_critical_1pct(m, m), "KS {d}");
    }

    #[test]
    fn plane_and_transpose() {
        let r = Rotation::plane(3, 0, 2, 0.3).unwrap();
        let x = [0.2, -1.0, 0.7];
        let back = r.apply(&r.apply_transpose(&x));
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(Rotation::plane(3, 1, 1, 0.3).is_err());
        let reflect = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0]));
        assert!(Rotation::from_matrix(reflect).is_err());
    }
}
