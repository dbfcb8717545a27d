//! Dense model/gradient vectors.

use std::ops::{Index, IndexMut};

/// A point or gradient in `R^d`, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseVector {
    coords: Vec<f64>,
}

impl DenseVector {
    pub fn zeros(d: usize) -> Self {
        DenseVector {
            coords: vec![0.0; d],
        }
    }

    pub fn from_vec(coords: Vec<f64>) -> Self {
        DenseVector { coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.coords.iter()
    }

    pub fn all_finite(&self) -> bool {
        self.coords.iter().all(|v| v.is_finite())
    }

    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.coords.iter().map(|v| v.abs()).sum()
    }

    pub fn dot(&self, other: &DenseVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.coords
            .iter()
            .zip(other.coords.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.coords {
            *v *= c;
        }
    }

    /// `self += c * other`, elementwise.
    pub fn add_scaled(&mut self, other: &DenseVector, c: f64) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.coords.iter_mut().zip(other.coords.iter()) {
            *a += c * b;
        }
    }

    pub fn sub(&self, other: &DenseVector) -> DenseVector {
        debug_assert_eq!(self.len(), other.len());
        DenseVector {
            coords: self
                .coords
                .iter()
                .zip(other.coords.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn dist_sq(&self, other: &DenseVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.coords
            .iter()
            .zip(other.coords.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl Index<usize> for DenseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

impl IndexMut<usize> for DenseVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.coords[i]
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(coords: Vec<f64>) -> Self {
        DenseVector { coords }
    }
}
