//! Basis-function catalogue.
//!
//! For taps `(m, k)` and envelope powers `(i, j)`, with `τ = t − m − k`:
//!
//! ```text
//! T(t) = v_L(t−m) · v_L(τ) · conj(v_H(τ)) · |v_L(τ)|^(2i) · |v_H(τ)|^(2j)
//! ```
//!
//! Every term lands on `2·f_L − f_H`. Order `p = 3 + 2(i + j)`; order 3 has
//! the single kernel `(0, 0)`, order 5 the two envelope variants `(1, 0)` and
//! `(0, 1)`, order 7 `(2, 0)`, `(1, 1)`, `(0, 2)`, and so on. Terms are listed
//! with `m` outermost, then `k`, then order, then `i` descending.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PimError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BfTerm {
    pub m: i32,
    pub k: i32,
    pub i: u32,
    pub j: u32,
}

impl BfTerm {
    pub fn order(&self) -> u32 {
        3 + 2 * (self.i + self.j)
    }

    /// Largest look-back or look-ahead, samples.
    pub fn span(&self) -> usize {
        (self.m.unsigned_abs()).max((self.m + self.k).unsigned_abs()) as usize
    }

    #[inline]
    pub fn eval(&self, a: Complex64, b: Complex64, c: Complex64) -> Complex64 {
        let env = b.norm_sqr().powi(self.i as i32) * c.norm_sqr().powi(self.j as i32);
        a * b * c.conj() * env
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSet {
    /// Odd orders ≥ 3.
    pub orders: Vec<u32>,
    pub memory: Vec<i32>,
    pub lags: Vec<i32>,
}

impl BasisSet {
    /// `P = {3, 5}, M = {−2..2}, K = {−1, 0, 1}`.
    pub fn compensation() -> Self {
        Self {
            orders: vec![3, 5],
            memory: vec![-2, -1, 0, 1, 2],
            lags: vec![-1, 0, 1],
        }
    }

    pub fn minimal() -> Self {
        Self {
            orders: vec![3],
            memory: vec![0],
            lags: vec![0],
        }
    }

    pub fn terms(&self) -> Result<Vec<BfTerm>> {
        if self.orders.is_empty() || self.memory.is_empty() || self.lags.is_empty() {
            return Err(PimError::config("canceller.basis", "empty term set"));
        }
        for &p in &self.orders {
            if p < 3 || p % 2 == 0 {
                return Err(PimError::config("canceller.basis.orders", format!("order {p} must be odd and at least 3")));
            }
        }
        let mut out = Vec::new();
        for &m in &self.memory {
            for &k in &self.lags {
                for &p in &self.orders {
                    let e = (p - 3) / 2;
                    for i in (0..=e).rev() {
                        out.push(BfTerm { m, k, i, j: e - i });
                    }
                }
            }
        }
        Ok(out)
    }
}

#[inline]
fn at(x: &[Complex64], i: i64) -> Complex64 {
    if i >= 0 && (i as usize) < x.len() {
        x[i as usize]
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Column `term` over the whole record, zero outside.
pub fn column(term: &BfTerm, vl: &[Complex64], vh: &[Complex64]) -> Vec<Complex64> {
    (0..vl.len() as i64)
        .map(|t| {
            let ta = t - term.m as i64;
            let tb = ta - term.k as i64;
            term.eval(at(vl, ta), at(vl, tb), at(vh, tb))
        })
        .collect()
}

/// Columns for every term, in catalogue order.
pub fn build_bf_matrix(vl: &[Complex64], vh: &[Complex64], terms: &[BfTerm]) -> Result<Vec<Vec<Complex64>>> {
    if terms.is_empty() {
        return Err(PimError::config("canceller.basis", "empty term set"));
    }
    if vl.len() != vh.len() {
        return Err(PimError::dim("carrier signals differ in length"));
    }
    let span = terms.iter().map(|t| t.span()).max().unwrap_or(0);
    if vl.len() <= span {
        return Err(PimError::dim("signals shorter than the basis memory"));
    }
    Ok(terms.iter().map(|t| column(t, vl, vh)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_counts() {
        assert_eq!(BasisSet::minimal().terms().unwrap(), vec![BfTerm { m: 0, k: 0, i: 0, j: 0 }]);
        let t = BasisSet::compensation().terms().unwrap();
        assert_eq!(t.len(), 5 * 3 * 3);
        assert_eq!(t.iter().filter(|x| x.order() == 5).count(), 30);
        let seven = BasisSet {
            orders: vec![7],
            memory: vec![0],
            lags: vec![0],
        };
        assert_eq!(seven.terms().unwrap().len(), 3);
    }

    #[test]
    fn minimal_column_is_textbook_product() {
        let vl = vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.1)];
        let vh = vec![Complex64::new(0.3, -1.0), Complex64::new(2.0, 0.5)];
        let cols = build_bf_matrix(&vl, &vh, &BasisSet::minimal().terms().unwrap()).unwrap();
        for t in 0..2 {
            let want = vl[t] * vl[t] * vh[t].conj();
            assert!((cols[0][t] - want).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_even_order_and_empty() {
        let b = BasisSet {
            orders: vec![4],
            memory: vec![0],
            lags: vec![0],
        };
        assert!(b.terms().is_err());
        assert!(build_bf_matrix(&[], &[], &[]).is_err());
    }
}
