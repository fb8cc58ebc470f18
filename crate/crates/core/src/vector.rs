//! Fixed-dimension Euclidean vectors.
//!
//! Dense `f64` storage with the handful of BLAS-1 style operations the
//! solvers use. Construction validates finiteness; solvers re-check only at
//! the points where they must decide whether to abort a run.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    /// Builds a vector, rejecting empty input and non-finite components.
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::config("vector must have dimension >= 1"));
        }
        if let Some(index) = data.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { context: "vector component", index });
        }
        Ok(Vector { data })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "vector dimension must be >= 1");
        Vector { data: vec![0.0; dim] }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize) -> f64) -> Self {
        assert!(dim >= 1, "vector dimension must be >= 1");
        Vector { data: (0..dim).map(f).collect() }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false // dimension >= 1 by construction
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn dot(&self, rhs: &Vector) -> f64 {
        debug_assert_eq!(self.len(), rhs.len());
        self.data.iter().zip(&rhs.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(&self, rhs: &Vector) -> f64 {
        debug_assert_eq!(self.len(), rhs.len());
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// self += c * other
    pub fn add_scaled(&mut self, c: f64, other: &Vector) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for a in &mut self.data {
            *a *= c;
        }
    }

    /// a*x + b*y, the coupling step shared by all the triangle updates.
    pub fn lin_comb(a: f64, x: &Vector, b: f64, y: &Vector) -> Vector {
        debug_assert_eq!(x.len(), y.len());
        Vector {
            data: x
                .data
                .iter()
                .zip(&y.data)
                .map(|(xi, yi)| a * xi + b * yi)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Vector) -> Vector {
        Vector::lin_comb(1.0, self, -1.0, rhs)
    }

    /// Index of the first non-finite component, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|c| !c.is_finite())
    }

    pub fn is_finite(&self) -> bool {
        self.first_non_finite().is_none()
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Vec<f64> {
        v.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(Vector::new(vec![]).is_err());
        assert!(matches!(
            Vector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(Vector::new(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn basic_arithmetic() {
        let x = Vector::new(vec![3.0, 4.0]).unwrap();
        let y = Vector::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(x.norm(), 5.0);
        assert_eq!(x.dot(&y), 7.0);
        assert_eq!(x.dist(&y), (4.0f64 + 9.0).sqrt());
        let z = Vector::lin_comb(2.0, &x, -1.0, &y);
        assert_eq!(z.as_slice(), &[5.0, 7.0]);
        let mut w = y.clone();
        w.add_scaled(0.5, &x);
        assert_eq!(w.as_slice(), &[2.5, 3.0]);
    }
}
