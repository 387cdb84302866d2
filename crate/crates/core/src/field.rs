//! Exact arithmetic over prime fields GF(q), q ≤ 251.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_Q: u16 = 251;

pub fn is_prime(q: u32) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn check_modulus(q: u16) -> Result<()> {
    if q <= MAX_Q && is_prime(q as u32) {
        Ok(())
    } else {
        Err(Error::NotPrime(q as u32))
    }
}

fn same(a: u16, b: u16) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::ModulusMismatch(a, b))
    }
}

// Raw symbol arithmetic. Callers guarantee a, b < q.
#[inline]
pub fn add(a: u8, b: u8, q: u16) -> u8 {
    ((a as u16 + b as u16) % q) as u8
}
#[inline]
pub fn sub(a: u8, b: u8, q: u16) -> u8 {
    ((a as u16 + q - b as u16) % q) as u8
}
#[inline]
pub fn mul(a: u8, b: u8, q: u16) -> u8 {
    ((a as u16 * b as u16) % q) as u8
}
/// Multiplicative inverse via Fermat; zero has none.
pub fn inv(a: u8, q: u16) -> Option<u8> {
    if a == 0 {
        return None;
    }
    let (mut base, mut e, mut acc) = (a as u32, q as u32 - 2, 1u32);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % q as u32;
        }
        base = base * base % q as u32;
        e >>= 1;
    }
    Some(acc as u8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldElem {
    value: u8,
    q: u16,
}

impl FieldElem {
    pub fn new(value: u16, q: u16) -> Result<Self> {
        check_modulus(q)?;
        if value >= q {
            return Err(Error::InvalidArgument(format!("{value} is not an element of GF({q})")));
        }
        Ok(FieldElem { value: value as u8, q })
    }
    pub fn value(self) -> u8 {
        self.value
    }
    pub fn modulus(self) -> u16 {
        self.q
    }
    pub fn inverse(self) -> Option<FieldElem> {
        inv(self.value, self.q).map(|v| FieldElem { value: v, q: self.q })
    }
}

pub fn field_add(a: FieldElem, b: FieldElem) -> Result<FieldElem> {
    same(a.q, b.q)?;
    Ok(FieldElem { value: add(a.value, b.value, a.q), q: a.q })
}

pub fn field_mul(a: FieldElem, b: FieldElem) -> Result<FieldElem> {
    same(a.q, b.q)?;
    Ok(FieldElem { value: mul(a.value, b.value, a.q), q: a.q })
}

pub fn field_neg(a: FieldElem) -> FieldElem {
    FieldElem { value: sub(0, a.value, a.q), q: a.q }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldVec {
    q: u16,
    elems: Vec<u8>,
}

impl FieldVec {
    pub fn new(elems: Vec<u8>, q: u16) -> Result<Self> {
        check_modulus(q)?;
        if let Some(&bad) = elems.iter().find(|&&e| e as u16 >= q) {
            return Err(Error::InvalidArgument(format!("symbol {bad} out of range for GF({q})")));
        }
        Ok(FieldVec { q, elems })
    }
    pub fn zeros(n: usize, q: u16) -> Self {
        FieldVec { q, elems: vec![0; n] }
    }
    pub fn len(&self) -> usize {
        self.elems.len()
    }
    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }
    pub fn modulus(&self) -> u16 {
        self.q
    }
    pub fn as_slice(&self) -> &[u8] {
        &self.elems
    }
    pub fn get(&self, i: usize) -> FieldElem {
        FieldElem { value: self.elems[i], q: self.q }
    }

    pub fn add(&self, other: &FieldVec) -> Result<FieldVec> {
        same(self.q, other.q)?;
        if self.len() != other.len() {
            return Err(Error::Dimension(format!("vector lengths {} and {}", self.len(), other.len())));
        }
        let q = self.q;
        let elems = self.elems.iter().zip(&other.elems).map(|(&a, &b)| add(a, b, q)).collect();
        Ok(FieldVec { q, elems })
    }
}

pub fn field_scale_mul(alpha: FieldElem, v: &FieldVec) -> Result<FieldVec> {
    same(alpha.q, v.q)?;
    let elems = v.elems.iter().map(|&e| mul(alpha.value, e, v.q)).collect();
    Ok(FieldVec { q: v.q, elems })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldMatrix {
    q: u16,
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl FieldMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<u8>, q: u16) -> Result<Self> {
        check_modulus(q)?;
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        if data.iter().any(|&e| e as u16 >= q) {
            return Err(Error::InvalidArgument(format!("entry out of range for GF({q})")));
        }
        Ok(FieldMatrix { q, rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<u8>], q: u16) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        FieldMatrix::new(rows.len(), cols, rows.concat(), q)
    }

    pub fn identity(n: usize, q: u16) -> Result<Self> {
        let mut data = vec![0; n * n];
        for i in 0..n {
            data[i * n + i] = 1;
        }
        FieldMatrix::new(n, n, data, q)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn modulus(&self) -> u16 {
        self.q
    }
    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.cols + j]
    }
    pub fn row_vecs(&self) -> Vec<Vec<u8>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Stack matrices vertically (all must share q and column count).
    pub fn vstack(parts: &[&FieldMatrix]) -> Result<FieldMatrix> {
        let first = parts.first().ok_or_else(|| Error::Dimension("nothing to stack".into()))?;
        let mut data = Vec::new();
        let mut rows = 0;
        for m in parts {
            same(first.q, m.q)?;
            if m.cols != first.cols {
                return Err(Error::Dimension(format!("cannot stack {} and {} columns", first.cols, m.cols)));
            }
            data.extend_from_slice(&m.data);
            rows += m.rows;
        }
        FieldMatrix::new(rows, first.cols, data, first.q)
    }

    pub fn rank(&self) -> usize {
        row_basis(&self.row_vecs(), self.q).len()
    }
}

pub fn encode_affine(u: &FieldVec, g: &FieldMatrix, b: &FieldVec) -> Result<FieldVec> {
    same(u.q, g.q)?;
    same(b.q, g.q)?;
    if u.len() != g.rows || b.len() != g.cols {
        return Err(Error::Dimension(format!(
            "u has {} symbols, G is {}x{}, b has {}",
            u.len(),
            g.rows,
            g.cols,
            b.len()
        )));
    }
    let q = g.q;
    let mut out = b.elems.clone();
    for (i, &ui) in u.elems.iter().enumerate() {
        if ui == 0 {
            continue;
        }
        for (o, &gij) in out.iter_mut().zip(g.row(i)) {
            *o = add(*o, mul(ui, gij, q), q);
        }
    }
    Ok(FieldVec { q, elems: out })
}

pub fn random_matrix<R: Rng + ?Sized>(k: usize, n: usize, q: u16, rng: &mut R) -> Result<FieldMatrix> {
    check_modulus(q)?;
    let data = (0..k * n).map(|_| rng.random_range(0..q) as u8).collect();
    FieldMatrix::new(k, n, data, q)
}

pub fn random_vec<R: Rng + ?Sized>(n: usize, q: u16, rng: &mut R) -> Result<FieldVec> {
    check_modulus(q)?;
    Ok(FieldVec { q, elems: (0..n).map(|_| rng.random_range(0..q) as u8).collect() })
}

pub fn random_matrix_seeded(k: usize, n: usize, q: u16, seed: u64) -> Result<FieldMatrix> {
    random_matrix(k, n, q, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn random_vec_seeded(n: usize, q: u16, seed: u64) -> Result<FieldVec> {
    random_vec(n, q, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref(rows: &mut Vec<Vec<u8>>, q: u16) -> Vec<usize> {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| rows[i][c] != 0) else { continue };
        rows.swap(r, p);
        let s = inv(rows[r][c], q).expect("nonzero pivot");
        for x in rows[r].iter_mut() {
            *x = mul(*x, s, q);
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            let f = row[c];
            if i != r && f != 0 {
                for (x, &p) in row.iter_mut().zip(&pivot_row) {
                    *x = sub(*x, mul(f, p, q), q);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

/// Basis (reduced echelon rows) of the row space.
pub fn row_basis(rows: &[Vec<u8>], q: u16) -> Vec<Vec<u8>> {
    let mut m = rows.to_vec();
    rref(&mut m, q);
    m
}

/// Basis of rowspace(a) ∩ rowspace(b) by Zassenhaus' algorithm.
pub fn intersection_basis(a: &[Vec<u8>], b: &[Vec<u8>], n: usize, q: u16) -> Vec<Vec<u8>> {
    let mut m: Vec<Vec<u8>> = Vec::with_capacity(a.len() + b.len());
    for r in a {
        let mut row = r.clone();
        row.extend_from_slice(r);
        m.push(row);
    }
    for r in b {
        let mut row = r.clone();
        row.extend(std::iter::repeat_n(0, n));
        m.push(row);
    }
    rref(&mut m, q);
    m.into_iter()
        .filter(|row| row[..n].iter().all(|&x| x == 0))
        .map(|row| row[n..].to_vec())
        .collect()
}

pub fn row_space_intersection_dim(g1: &FieldMatrix, g2: &FieldMatrix) -> Result<usize> {
    same(g1.q, g2.q)?;
    if g1.cols != g2.cols {
        return Err(Error::Dimension(format!("{} vs {} columns", g1.cols, g2.cols)));
    }
    Ok(intersection_basis(&g1.row_vecs(), &g2.row_vecs(), g1.cols, g1.q).len())
}

/// Find coefficients c with Σ c_i rows_i = target, if any.
pub fn solve_left(rows: &[Vec<u8>], target: &[u8], q: u16) -> Option<Vec<u8>> {
    let k = rows.len();
    let n = target.len();
    // Work on the transposed system: columns are the given rows, augmented with target.
    let mut m: Vec<Vec<u8>> = (0..n)
        .map(|j| {
            let mut r: Vec<u8> = rows.iter().map(|row| row[j]).collect();
            r.push(target[j]);
            r
        })
        .collect();
    let pivots = rref(&mut m, q);
    if pivots.last() == Some(&k) {
        return None;
    }
    let mut c = vec![0u8; k];
    for (row, &p) in m.iter().zip(&pivots) {
        c[p] = row[k];
    }
    Some(c)
}

/// An affine subspace p + span(basis) of GF(q)^n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSpace {
    pub q: u16,
    pub point: Vec<u8>,
    pub basis: Vec<Vec<u8>>,
}

impl AffineSpace {
    pub fn new(point: Vec<u8>, generators: &[Vec<u8>], q: u16) -> Self {
        AffineSpace { q, point, basis: row_basis(generators, q) }
    }
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
    /// Intersection with another affine space, or None if disjoint.
    pub fn intersect(&self, other: &AffineSpace) -> Option<AffineSpace> {
        let q = self.q;
        let n = self.point.len();
        let diff: Vec<u8> = other.point.iter().zip(&self.point).map(|(&a, &b)| sub(a, b, q)).collect();
        let mut stacked = self.basis.clone();
        stacked.extend(other.basis.iter().cloned());
        let coeffs = if stacked.is_empty() {
            if diff.iter().all(|&x| x == 0) { Some(vec![]) } else { None }
        } else {
            solve_left(&stacked, &diff, q)
        }?;
        let mut point = self.point.clone();
        for (c, row) in coeffs.iter().zip(&self.basis) {
            for (p, &r) in point.iter_mut().zip(row) {
                *p = add(*p, mul(*c, r, q), q);
            }
        }
        let basis = intersection_basis(&self.basis, &other.basis, n, q);
        Some(AffineSpace { q, point, basis: row_basis(&basis, q) })
    }
}
