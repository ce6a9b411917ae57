//! JSON encodings: a complex number is `[re, im]`, a matrix is a row-major
//! nested array of those pairs, a vector is a flat array of pairs.

use nalgebra::{SMatrix, SVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::C64;

pub type ComplexPair = [f64; 2];

pub fn to_pair(z: C64) -> ComplexPair {
    [z.re, z.im]
}

pub fn from_pair(p: ComplexPair) -> C64 {
    C64::new(p[0], p[1])
}

pub fn matrix_rows<const R: usize, const C: usize>(
    m: &SMatrix<C64, R, C>,
) -> Vec<Vec<ComplexPair>> {
    (0..R)
        .map(|i| (0..C).map(|j| to_pair(m[(i, j)])).collect())
        .collect()
}

pub fn matrix_from_rows<const R: usize, const C: usize>(
    rows: &[Vec<ComplexPair>],
) -> Result<SMatrix<C64, R, C>, String> {
    if rows.len() != R || rows.iter().any(|row| row.len() != C) {
        return Err(format!("expected a {R}x{C} matrix"));
    }
    let m = SMatrix::<C64, R, C>::from_fn(|i, j| from_pair(rows[i][j]));
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err("matrix has non-finite entries".into());
    }
    Ok(m)
}

pub fn vector_entries<const N: usize>(v: &SVector<C64, N>) -> Vec<ComplexPair> {
    v.iter().map(|&z| to_pair(z)).collect()
}

pub fn vector_from_entries<const N: usize>(
    entries: &[ComplexPair],
) -> Result<SVector<C64, N>, String> {
    if entries.len() != N {
        return Err(format!(
            "expected a vector of length {N}, got {}",
            entries.len()
        ));
    }
    let v = SVector::<C64, N>::from_fn(|i, _| from_pair(entries[i]));
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err("vector has non-finite entries".into());
    }
    Ok(v)
}

/// `#[serde(with = "json::matrix")]` for fixed-size complex matrices.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer, const R: usize, const C: usize>(
        m: &SMatrix<C64, R, C>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        matrix_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const R: usize, const C: usize>(
        d: D,
    ) -> Result<SMatrix<C64, R, C>, D::Error> {
        let rows = Vec::<Vec<ComplexPair>>::deserialize(d)?;
        matrix_from_rows(&rows).map_err(D::Error::custom)
    }
}

/// `#[serde(with = "json::vector")]` for fixed-size complex vectors.
pub mod vector {
    use super::*;

    pub fn serialize<S: Serializer, const N: usize>(
        v: &SVector<C64, N>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        vector_entries(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(
        d: D,
    ) -> Result<SVector<C64, N>, D::Error> {
        let entries = Vec::<ComplexPair>::deserialize(d)?;
        vector_from_entries(&entries).map_err(D::Error::custom)
    }
}

/// `#[serde(with = "json::complex3")]` for `[C64; 3]`.
pub mod complex3 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64; 3], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|&z| to_pair(z))
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[C64; 3], D::Error> {
        let entries = Vec::<ComplexPair>::deserialize(d)?;
        if entries.len() != 3 {
            return Err(D::Error::custom("expected three complex values"));
        }
        Ok([
            from_pair(entries[0]),
            from_pair(entries[1]),
            from_pair(entries[2]),
        ])
    }
}

/// A 9×9 operator wrapped for top-level (de)serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateJson(#[serde(with = "matrix")] pub crate::linalg::Op9);
