//! Exact arithmetic in small finite fields F_q, q = p^deg with p an odd prime.
//!
//! Elements are indices into precomputed tables. An index encodes the
//! coefficient vector of a polynomial residue base p: the element
//! c_0 + c_1*x + ... + c_{deg-1}*x^{deg-1} has index sum(c_i * p^i). The
//! prime subfield F_p therefore occupies indices 0..p.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// An element of a finite field, valid only together with the [`FiniteField`]
/// that produced it.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Elt(pub u16);

impl fmt::Debug for Elt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("p = 2 is not supported")]
    EvenPrime,
    #[error("field order {0} exceeds the table-based limit")]
    TooLarge(u64),
    #[error("extension degree must be at least 1")]
    BadDegree,
}

const MAX_Q: u64 = 2048;

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// F_q with full addition/multiplication tables and discrete logs for the
/// fixed multiplicative generator.
pub struct FiniteField {
    pub p: u64,
    pub deg: usize,
    pub q: u64,
    /// Monic irreducible modulus over F_p, lexicographically least among
    /// monic irreducibles of the given degree; length deg+1.
    pub modulus: Vec<u64>,
    add_t: Vec<u16>,
    mul_t: Vec<u16>,
    neg_t: Vec<u16>,
    inv_t: Vec<u16>,
    /// exp_t[i] = generator^i for 0 <= i < q-1
    exp_t: Vec<u16>,
    /// log_t[e] for e != 0, with log(generator) = 1
    log_t: Vec<u32>,
    generator: Elt,
    fp_generator: Elt,
}

impl fmt::Debug for FiniteField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q)
    }
}

fn poly_mul_mod(a: u64, b: u64, p: u64, modulus: &[u64]) -> u64 {
    let deg = modulus.len() - 1;
    // coefficient vectors
    let to_vec = |mut n: u64| {
        let mut v = vec![0u64; 2 * deg];
        for c in v.iter_mut().take(deg) {
            *c = n % p;
            n /= p;
        }
        v
    };
    let va = to_vec(a);
    let vb = to_vec(b);
    let mut prod = vec![0u64; 2 * deg];
    for (i, &ca) in va.iter().take(deg).enumerate() {
        if ca == 0 {
            continue;
        }
        for (j, &cb) in vb.iter().take(deg).enumerate() {
            prod[i + j] = (prod[i + j] + ca * cb) % p;
        }
    }
    // reduce by the monic modulus
    for i in (deg..2 * deg).rev() {
        let c = prod[i];
        if c == 0 {
            continue;
        }
        prod[i] = 0;
        for (j, &m) in modulus.iter().enumerate().take(deg) {
            let idx = i - deg + j;
            prod[idx] = (prod[idx] + c * (p - m % p)) % p;
        }
    }
    let mut out = 0u64;
    for i in (0..deg).rev() {
        out = out * p + prod[i];
    }
    out
}

fn poly_to_vec(mut n: u64, p: u64, len: usize) -> Vec<u64> {
    let mut v = vec![0u64; len];
    for c in v.iter_mut() {
        *c = n % p;
        n /= p;
    }
    v
}

fn poly_deg(v: &[u64]) -> Option<usize> {
    v.iter().rposition(|&c| c != 0)
}

/// gcd of polynomials over F_p given as coefficient vectors.
fn poly_gcd(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> Vec<u64> {
    loop {
        let Some(db) = poly_deg(&b) else { return a };
        let da = match poly_deg(&a) {
            Some(d) => d,
            None => return b,
        };
        if da < db {
            std::mem::swap(&mut a, &mut b);
            continue;
        }
        // a -= lead(a)/lead(b) * x^(da-db) * b
        let lb_inv = {
            let mut acc = 1u64;
            let mut base = b[db] % p;
            let mut e = p - 2;
            while e > 0 {
                if e & 1 == 1 {
                    acc = acc * base % p;
                }
                base = base * base % p;
                e >>= 1;
            }
            acc
        };
        let factor = a[da] * lb_inv % p;
        for j in 0..=db {
            let idx = da - db + j;
            a[idx] = (a[idx] + (p - factor * b[j] % p)) % p;
        }
    }
}

fn poly_is_irreducible(modulus: &[u64], p: u64) -> bool {
    // x^(p^deg) == x mod f, and gcd(x^(p^d) - x, f) = 1 for proper divisors d
    let deg = modulus.len() - 1;
    let frob = |e: u64| -> u64 {
        // e^p via square and multiply
        let mut acc = 1u64; // polynomial "1"
        let mut base = e;
        let mut n = p;
        while n > 0 {
            if n & 1 == 1 {
                acc = poly_mul_mod(acc, base, p, modulus);
            }
            base = poly_mul_mod(base, base, p, modulus);
            n >>= 1;
        }
        acc
    };
    let x = p; // the polynomial "x" as an index
    let mut e = x;
    for d in 1..=deg {
        e = frob(e);
        if d == deg {
            if e != x {
                return false;
            }
        } else if deg % d == 0 {
            // gcd(x^(p^d) - x, f) must be constant
            let mut g = poly_to_vec(e, p, deg);
            g[1] = (g[1] + p - 1) % p;
            let f_vec: Vec<u64> = modulus.to_vec();
            let gcd = poly_gcd(f_vec, g, p);
            if poly_deg(&gcd).unwrap_or(0) > 0 {
                return false;
            }
        }
    }
    true
}

impl FiniteField {
    pub fn new(p: u64, deg: usize) -> Result<FiniteField, FieldError> {
        if p == 2 {
            return Err(FieldError::EvenPrime);
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if deg == 0 {
            return Err(FieldError::BadDegree);
        }
        let q = p.checked_pow(deg as u32).ok_or(FieldError::TooLarge(u64::MAX))?;
        if q > MAX_Q {
            return Err(FieldError::TooLarge(q));
        }

        // smallest monic irreducible of the requested degree
        let modulus = if deg == 1 {
            vec![0, 1]
        } else {
            let mut found = None;
            'outer: for low in 0..p.pow(deg as u32) {
                let mut m = Vec::with_capacity(deg + 1);
                let mut n = low;
                for _ in 0..deg {
                    m.push(n % p);
                    n /= p;
                }
                m.push(1);
                if poly_is_irreducible(&m, p) {
                    found = Some(m);
                    break 'outer;
                }
            }
            found.expect("an irreducible polynomial of every degree exists")
        };

        let qs = q as usize;
        let mut add_t = vec![0u16; qs * qs];
        let mut mul_t = vec![0u16; qs * qs];
        let mut neg_t = vec![0u16; qs];
        for a in 0..qs {
            // digitwise addition base p
            for b in a..qs {
                let (mut x, mut y, mut pw, mut s) = (a as u64, b as u64, 1u64, 0u64);
                while x > 0 || y > 0 {
                    s += ((x % p + y % p) % p) * pw;
                    x /= p;
                    y /= p;
                    pw *= p;
                }
                add_t[a * qs + b] = s as u16;
                add_t[b * qs + a] = s as u16;
            }
            let (mut x, mut pw, mut s) = (a as u64, 1u64, 0u64);
            while x > 0 {
                s += ((p - x % p) % p) * pw;
                x /= p;
                pw *= p;
            }
            neg_t[a] = s as u16;
        }
        for a in 0..qs {
            for b in a..qs {
                let m = poly_mul_mod(a as u64, b as u64, p, &modulus) as u16;
                mul_t[a * qs + b] = m;
                mul_t[b * qs + a] = m;
            }
        }

        // fixed generator: smallest index of multiplicative order q-1
        let order = |e: u64| -> u64 {
            let mut n = 1u64;
            let mut acc = e;
            while acc != 1 {
                acc = mul_t[(acc as usize) * qs + e as usize] as u64;
                n += 1;
            }
            n
        };
        let mut generator = Elt(0);
        for e in 2..q {
            if order(e) == q - 1 {
                generator = Elt(e as u16);
                break;
            }
        }
        let mut exp_t = vec![0u16; (q - 1) as usize];
        let mut log_t = vec![0u32; qs];
        let mut acc = 1u64;
        for (i, slot) in exp_t.iter_mut().enumerate() {
            *slot = acc as u16;
            log_t[acc as usize] = i as u32;
            acc = mul_t[(acc as usize) * qs + generator.0 as usize] as u64;
        }

        let mut inv_t = vec![0u16; qs];
        for e in 1..q {
            let l = log_t[e as usize] as u64;
            inv_t[e as usize] = exp_t[((q - 1 - l) % (q - 1)) as usize];
        }

        // smallest primitive root of F_p^*, embedded as a constant
        let mut fp_generator = Elt(0);
        for r in 2..p {
            let mut n = 1u64;
            let mut acc = r % p;
            while acc != 1 {
                acc = acc * r % p;
                n += 1;
            }
            if n == p - 1 {
                fp_generator = Elt(r as u16);
                break;
            }
        }

        Ok(FiniteField {
            p,
            deg,
            q,
            modulus,
            add_t,
            mul_t,
            neg_t,
            inv_t,
            exp_t,
            log_t,
            generator,
            fp_generator,
        })
    }

    pub fn zero(&self) -> Elt {
        Elt(0)
    }
    pub fn one(&self) -> Elt {
        Elt(1)
    }
    pub fn generator(&self) -> Elt {
        self.generator
    }
    /// Fixed generator of F_p^* inside F_q^*.
    pub fn fp_generator(&self) -> Elt {
        self.fp_generator
    }

    #[inline]
    pub fn add(&self, a: Elt, b: Elt) -> Elt {
        Elt(self.add_t[a.0 as usize * self.q as usize + b.0 as usize])
    }
    #[inline]
    pub fn sub(&self, a: Elt, b: Elt) -> Elt {
        self.add(a, self.neg(b))
    }
    #[inline]
    pub fn mul(&self, a: Elt, b: Elt) -> Elt {
        Elt(self.mul_t[a.0 as usize * self.q as usize + b.0 as usize])
    }
    #[inline]
    pub fn neg(&self, a: Elt) -> Elt {
        Elt(self.neg_t[a.0 as usize])
    }
    #[inline]
    pub fn inv(&self, a: Elt) -> Elt {
        assert!(a.0 != 0, "division by zero");
        Elt(self.inv_t[a.0 as usize])
    }
    pub fn div(&self, a: Elt, b: Elt) -> Elt {
        self.mul(a, self.inv(b))
    }

    pub fn pow(&self, a: Elt, n: i64) -> Elt {
        if a.0 == 0 {
            assert!(n > 0, "0 to a non-positive power");
            return Elt(0);
        }
        let m = (self.q - 1) as i64;
        let e = n.rem_euclid(m) as u64;
        Elt(self.exp_t[((self.log_t[a.0 as usize] as u64 * e) % (self.q - 1)) as usize])
    }

    /// Discrete log with respect to the fixed field generator.
    pub fn dlog(&self, a: Elt) -> u64 {
        assert!(a.0 != 0);
        self.log_t[a.0 as usize] as u64
    }

    /// Discrete log of an element of F_p^* with respect to `fp_generator`,
    /// in [0, p-2].
    pub fn fp_dlog(&self, a: Elt) -> u64 {
        assert!((a.0 as u64) < self.p && a.0 != 0, "not in the prime subfield");
        let mut acc = 1u64;
        for i in 0..self.p - 1 {
            if acc == a.0 as u64 {
                return i;
            }
            acc = acc * self.fp_generator.0 as u64 % self.p;
        }
        unreachable!()
    }

    /// Embed an integer via reduction mod p (lands in the prime subfield).
    pub fn from_int(&self, n: i64) -> Elt {
        Elt(n.rem_euclid(self.p as i64) as u16)
    }

    /// n! as a field element.
    pub fn factorial(&self, n: u64) -> Elt {
        let mut acc = self.one();
        for i in 2..=n {
            acc = self.mul(acc, self.from_int(i as i64));
        }
        acc
    }

    pub fn coeffs(&self, a: Elt) -> Vec<u64> {
        let mut v = Vec::with_capacity(self.deg);
        let mut n = a.0 as u64;
        for _ in 0..self.deg {
            v.push(n % self.p);
            n /= self.p;
        }
        v
    }

    /// All nonzero elements in index order.
    pub fn units(&self) -> impl Iterator<Item = Elt> + '_ {
        (1..self.q).map(|i| Elt(i as u16))
    }

    /// Elements of F_p^* viewed inside F_q, in the order 1, 2, .., p-1.
    pub fn prime_units(&self) -> impl Iterator<Item = Elt> + '_ {
        (1..self.p).map(|i| Elt(i as u16))
    }

    /// The embedding of this field into `target` determined by sending our
    /// defining root to the least root of our modulus in `target`. Returns
    /// the image table indexed by element. `target` must contain an
    /// isomorphic copy (deg | target.deg, same p).
    pub fn embedding_into(&self, target: &FiniteField) -> Option<Vec<Elt>> {
        if target.p != self.p || target.deg % self.deg != 0 {
            return None;
        }
        if self.deg == 1 {
            return Some((0..self.q).map(|i| Elt(i as u16)).collect());
        }
        // least root of our modulus in target
        let eval = |x: Elt| -> Elt {
            let mut acc = target.zero();
            for &c in self.modulus.iter().rev() {
                acc = target.mul(acc, x);
                acc = target.add(acc, target.from_int(c as i64));
            }
            acc
        };
        let root = (0..target.q).map(|i| Elt(i as u16)).find(|&x| eval(x).0 == 0)?;
        let mut table = Vec::with_capacity(self.q as usize);
        for idx in 0..self.q {
            let coeffs = self.coeffs(Elt(idx as u16));
            let mut acc = target.zero();
            for &c in coeffs.iter().rev() {
                acc = target.mul(acc, root);
                acc = target.add(acc, target.from_int(c as i64));
            }
            table.push(acc);
        }
        Some(table)
    }
}

/// A unit of Z_p known modulo p^prec_exp, used as a Gamma-operator parameter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaInt {
    pub a: u128,
    pub p: u64,
    pub prec_exp: u32,
}

impl GammaInt {
    pub fn new(a: i128, p: u64, prec_exp: u32) -> Result<GammaInt, FieldError> {
        let m = (p as u128).pow(prec_exp);
        let a = a.rem_euclid(m as i128) as u128;
        if a % p as u128 == 0 {
            // divisible by p: not a unit
            return Err(FieldError::NotPrime(p));
        }
        Ok(GammaInt { a, p, prec_exp })
    }

    /// Base-p digits, lowest first, prec_exp of them.
    pub fn digits(&self) -> Vec<u64> {
        let mut v = Vec::with_capacity(self.prec_exp as usize);
        let mut n = self.a;
        for _ in 0..self.prec_exp {
            v.push((n % self.p as u128) as u64);
            n /= self.p as u128;
        }
        v
    }

    pub fn residue_mod_p(&self) -> u64 {
        (self.a % self.p as u128) as u64
    }
}

/// Teichmueller representative of x in [1, p-1], as an integer mod p^prec_exp.
pub fn teichmueller(x: u64, p: u64, prec_exp: u32) -> u128 {
    let m = (p as u128).pow(prec_exp);
    let mut a = (x % p) as u128;
    // a^(p^k) converges to the Teichmueller lift
    for _ in 0..prec_exp {
        let mut acc = 1u128;
        let mut base = a;
        let mut n = p;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base % m;
            }
            base = base * base % m;
            n >>= 1;
        }
        a = acc;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_characteristic() {
        assert_eq!(FiniteField::new(2, 1).unwrap_err(), FieldError::EvenPrime);
        assert_eq!(FiniteField::new(9, 1).unwrap_err(), FieldError::NotPrime(9));
    }

    #[test]
    fn f9_arithmetic() {
        let f = FiniteField::new(3, 2).unwrap();
        assert_eq!(f.q, 9);
        // generator has order 8
        let g = f.generator();
        let mut acc = f.one();
        for _ in 0..8 {
            acc = f.mul(acc, g);
        }
        assert_eq!(acc, f.one());
        for e in f.units() {
            assert_eq!(f.mul(e, f.inv(e)), f.one());
        }
        // fp generator has order p-1 = 2, i.e. equals -1
        assert_eq!(f.fp_generator(), f.from_int(2));
    }

    #[test]
    fn f7_prime_field() {
        let f = FiniteField::new(7, 1).unwrap();
        assert_eq!(f.add(f.from_int(5), f.from_int(4)), f.from_int(2));
        assert_eq!(f.pow(f.from_int(3), 6), f.one());
        assert_eq!(f.fp_dlog(f.fp_generator()), 1);
        assert_eq!(f.factorial(4), f.from_int(24));
    }

    #[test]
    fn embeddings_are_ring_maps() {
        let f9 = FiniteField::new(3, 2).unwrap();
        let f729 = FiniteField::new(3, 6).unwrap();
        let emb = f9.embedding_into(&f729).unwrap();
        for a in 0..9u16 {
            for b in 0..9u16 {
                let (a, b) = (Elt(a), Elt(b));
                assert_eq!(emb[f9.mul(a, b).0 as usize], f729.mul(emb[a.0 as usize], emb[b.0 as usize]));
                assert_eq!(emb[f9.add(a, b).0 as usize], f729.add(emb[a.0 as usize], emb[b.0 as usize]));
            }
        }
    }

    #[test]
    fn teichmueller_lift() {
        // omega(x)^(p-1) = 1 mod p^k and omega(x) = x mod p
        let p = 5;
        let m = 5u128.pow(4);
        for x in 1..5 {
            let w = teichmueller(x, p, 4);
            assert_eq!(w % 5, x as u128);
            let mut acc = 1u128;
            for _ in 0..4 {
                acc = acc * w % m;
            }
            assert_eq!(acc, 1);
        }
    }
}
