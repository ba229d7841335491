//! Small exact matrices over Q, used for the GL(d+1) realizations and the
//! digit-embedding identities where entries live in Z[1/p].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Q = BigRational;

pub fn qint(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

#[derive(Clone, PartialEq, Eq)]
pub struct QMat {
    pub n: usize,
    pub data: Vec<Q>,
}

impl std::fmt::Debug for QMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in 0..self.n {
            for c in 0..self.n {
                write!(f, "{:>6} ", self[(r, c)].to_string())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for QMat {
    type Output = Q;
    fn index(&self, (r, c): (usize, usize)) -> &Q {
        &self.data[r * self.n + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Q {
        &mut self.data[r * self.n + c]
    }
}

impl QMat {
    pub fn zero(n: usize) -> QMat {
        QMat { n, data: vec![Q::zero(); n * n] }
    }

    pub fn identity(n: usize) -> QMat {
        let mut m = QMat::zero(n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    /// Identity plus c in position (r, c_pos).
    pub fn elementary(n: usize, r: usize, c_pos: usize, c: Q) -> QMat {
        let mut m = QMat::identity(n);
        m[(r, c_pos)] = c;
        m
    }

    pub fn from_rows(rows: &[&[i64]]) -> QMat {
        let n = rows.len();
        let mut m = QMat::zero(n);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n);
            for (c, &v) in row.iter().enumerate() {
                m[(r, c)] = qint(v);
            }
        }
        m
    }

    pub fn mul(&self, other: &QMat) -> QMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = QMat::zero(n);
        for r in 0..n {
            for k in 0..n {
                if self[(r, k)].is_zero() {
                    continue;
                }
                for c in 0..n {
                    if !other[(k, c)].is_zero() {
                        let prod = &self[(r, k)] * &other[(k, c)];
                        out[(r, c)] = &out[(r, c)] + prod;
                    }
                }
            }
        }
        out
    }

    pub fn inverse(&self) -> QMat {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = QMat::identity(n);
        for col in 0..n {
            let piv = (col..n)
                .find(|&r| !a[(r, col)].is_zero())
                .expect("singular matrix");
            for k in 0..n {
                a.data.swap(col * n + k, piv * n + k);
                inv.data.swap(col * n + k, piv * n + k);
            }
            let d = a[(col, col)].clone();
            for k in 0..n {
                a[(col, k)] = &a[(col, k)] / &d;
                inv[(col, k)] = &inv[(col, k)] / &d;
            }
            for r in 0..n {
                if r != col && !a[(r, col)].is_zero() {
                    let factor = a[(r, col)].clone();
                    for k in 0..n {
                        let s = &factor * &a[(col, k)];
                        a[(r, k)] = &a[(r, k)] - s;
                        let s = &factor * &inv[(col, k)];
                        inv[(r, k)] = &inv[(r, k)] - s;
                    }
                }
            }
        }
        inv
    }

    pub fn conj(&self, by: &QMat) -> QMat {
        by.mul(self).mul(&by.inverse())
    }

    pub fn pow(&self, e: usize) -> QMat {
        let mut acc = QMat::identity(self.n);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn scale(&self, s: &Q) -> QMat {
        QMat { n: self.n, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn is_identity(&self) -> bool {
        self == &QMat::identity(self.n)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|r| (0..self.n).all(|c| r == c || self[(r, c)].is_zero()))
    }

    /// If self = identity + c * E_{rc} for a single off-diagonal entry,
    /// return (r, c, entry).
    pub fn as_elementary(&self) -> Option<(usize, usize, Q)> {
        let mut found = None;
        for r in 0..self.n {
            for c in 0..self.n {
                let want = if r == c { Q::one() } else { Q::zero() };
                if self[(r, c)] != want {
                    if r == c || found.is_some() {
                        return None;
                    }
                    found = Some((r, c, self[(r, c)].clone()));
                }
            }
        }
        found
    }

    /// Value mod p of a rational with denominator prime to p.
    pub fn entry_mod_p(x: &Q, p: u64) -> Option<u64> {
        let pb = BigInt::from(p);
        let den = x.denom();
        if (den % &pb).is_zero() {
            return None;
        }
        let num = x.numer().mod_floor_u(p);
        let den_inv = mod_inverse(den.mod_floor_u(p), p)?;
        Some(num * den_inv % p)
    }
}

trait ModFloorU {
    fn mod_floor_u(&self, p: u64) -> u64;
}

impl ModFloorU for BigInt {
    fn mod_floor_u(&self, p: u64) -> u64 {
        let pb = BigInt::from(p);
        let r = ((self % &pb) + &pb) % &pb;
        let (_, digits) = r.to_u64_digits();
        if digits.is_empty() {
            0
        } else {
            digits[0]
        }
    }
}

fn mod_inverse(a: u64, p: u64) -> Option<u64> {
    if a % p == 0 {
        return None;
    }
    let mut acc = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    Some(acc)
}
