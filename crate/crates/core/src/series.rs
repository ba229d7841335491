//! Truncated power series over F_q: elements of F_q[[t]]/(t^N) carrying
//! their precision, together with the semilinear operators phi^r (t -> t^{p^r}),
//! its left inverse psi^r, and the substitution action of units of Z_p.
//!
//! Every operation returns the largest provably correct precision: psi^r
//! shrinks precision to ceil(N / p^r), phi^r keeps N and drops overflow,
//! binary operations take the minimum.

use crate::field::{Elt, FiniteField, GammaInt};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Series {
    /// Coefficients 0..prec; invariant: c.len() == prec.
    pub c: Vec<Elt>,
    pub prec: usize,
}

impl Series {
    pub fn zero(prec: usize) -> Series {
        assert!(prec >= 1);
        Series { c: vec![Elt(0); prec], prec }
    }

    pub fn one(f: &FiniteField, prec: usize) -> Series {
        let mut s = Series::zero(prec);
        s.c[0] = f.one();
        s
    }

    pub fn monomial(f: &FiniteField, coeff: Elt, deg: usize, prec: usize) -> Series {
        let mut s = Series::zero(prec);
        if deg < prec {
            s.c[deg] = coeff;
        } else {
            let _ = f;
        }
        s
    }

    pub fn from_coeffs(c: Vec<Elt>) -> Series {
        let prec = c.len();
        assert!(prec >= 1);
        Series { c, prec }
    }

    pub fn truncate(&self, prec: usize) -> Series {
        assert!(prec >= 1);
        let mut c = self.c.clone();
        c.truncate(prec);
        c.resize(prec, Elt(0));
        Series { c, prec: prec.min(self.prec) }
            .with_len()
    }

    fn with_len(mut self) -> Series {
        self.c.truncate(self.prec);
        self.c.resize(self.prec, Elt(0));
        self
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|e| e.0 == 0)
    }

    /// t-adic valuation among known coefficients; None if zero to precision.
    pub fn valuation(&self) -> Option<usize> {
        self.c.iter().position(|e| e.0 != 0)
    }

    pub fn add(&self, f: &FiniteField, other: &Series) -> Series {
        let prec = self.prec.min(other.prec);
        let c = (0..prec).map(|i| f.add(self.c[i], other.c[i])).collect();
        Series { c, prec }
    }

    pub fn sub(&self, f: &FiniteField, other: &Series) -> Series {
        let prec = self.prec.min(other.prec);
        let c = (0..prec).map(|i| f.sub(self.c[i], other.c[i])).collect();
        Series { c, prec }
    }

    pub fn scale(&self, f: &FiniteField, s: Elt) -> Series {
        Series { c: self.c.iter().map(|&a| f.mul(a, s)).collect(), prec: self.prec }
    }

    pub fn neg(&self, f: &FiniteField) -> Series {
        Series { c: self.c.iter().map(|&a| f.neg(a)).collect(), prec: self.prec }
    }

    pub fn mul(&self, f: &FiniteField, other: &Series) -> Series {
        let prec = self.prec.min(other.prec);
        let mut c = vec![Elt(0); prec];
        for (i, &a) in self.c.iter().enumerate().take(prec) {
            if a.0 == 0 {
                continue;
            }
            for (j, &b) in other.c.iter().enumerate().take(prec - i) {
                if b.0 != 0 {
                    c[i + j] = f.add(c[i + j], f.mul(a, b));
                }
            }
        }
        Series { c, prec }
    }

    pub fn mul_tpow(&self, k: usize) -> Series {
        let mut c = vec![Elt(0); self.prec];
        for i in 0..self.prec.saturating_sub(k) {
            c[i + k] = self.c[i];
        }
        Series { c, prec: self.prec }
    }

    pub fn pow(&self, f: &FiniteField, n: usize) -> Series {
        let mut acc = Series::one(f, self.prec);
        for _ in 0..n {
            acc = acc.mul(f, self);
        }
        acc
    }

    /// Inverse of a unit (nonzero constant term).
    pub fn inv_unit(&self, f: &FiniteField) -> Series {
        assert!(self.c[0].0 != 0, "not a unit");
        let c0inv = f.inv(self.c[0]);
        let mut inv = Series::zero(self.prec);
        inv.c[0] = c0inv;
        for n in 1..self.prec {
            // c_n determined by sum_{k=0}^{n} a_k * inv_{n-k} = 0
            let mut acc = Elt(0);
            for k in 1..=n {
                if self.c[k].0 != 0 && inv.c[n - k].0 != 0 {
                    acc = f.add(acc, f.mul(self.c[k], inv.c[n - k]));
                }
            }
            inv.c[n] = f.neg(f.mul(acc, c0inv));
        }
        inv
    }

    /// phi^r: substitution t -> t^{p^r}, coefficients beyond precision dropped.
    pub fn phi(&self, f: &FiniteField, r: u32) -> Series {
        let step = (f.p as usize).pow(r);
        let mut c = vec![Elt(0); self.prec];
        for (j, &a) in self.c.iter().enumerate() {
            match j.checked_mul(step) {
                Some(k) if k < self.prec => c[k] = a,
                _ => break,
            }
        }
        Series { c, prec: self.prec }
    }

    /// psi^r: on the monomial t^(n_0 + n_1 p + .. + n_{r-1} p^{r-1} + n_r p^r)
    /// with digits n_0..n_{r-1} in [0, p-1] it gives
    /// (-1)^{n_0+..+n_{r-1}} t^{n_r}. The output coefficient at c draws on
    /// input degrees c p^r .. c p^r + p^r - 1, so the largest provably
    /// correct output precision is floor(N / p^r).
    pub fn psi(&self, f: &FiniteField, r: u32) -> Series {
        let p = f.p as usize;
        let step = p.pow(r);
        let out_prec = (self.prec / step).max(1);
        let mut c = vec![Elt(0); out_prec];
        for (j, &a) in self.c.iter().enumerate().take(out_prec * step) {
            if a.0 == 0 {
                continue;
            }
            let mut digit_sum = 0usize;
            let mut rem = j % step;
            while rem > 0 {
                digit_sum += rem % p;
                rem /= p;
            }
            let target = j / step;
            let signed = if digit_sum % 2 == 1 { f.neg(a) } else { a };
            c[target] = f.add(c[target], signed);
        }
        Series { c, prec: out_prec }
    }

    /// (1+t)^a - 1 for a unit a of Z_p, to the given precision. Computed
    /// digitwise: (1+t)^a = prod_i (1 + t^{p^i})^{a_i} in characteristic p.
    pub fn one_plus_t_pow(f: &FiniteField, a: &GammaInt, prec: usize) -> Series {
        assert_eq!(a.p, f.p);
        let needed = prec_exponent(f.p, prec);
        assert!(
            a.prec_exp >= needed,
            "gamma parameter known mod p^{} but precision t^{} needs p^{}",
            a.prec_exp,
            prec,
            needed
        );
        let mut acc = Series::one(f, prec);
        let mut pi = 1usize; // p^i, saturating beyond prec
        for (i, &digit) in a.digits().iter().enumerate() {
            if i > 0 {
                pi = pi.saturating_mul(f.p as usize);
            }
            if pi >= prec || digit == 0 {
                continue;
            }
            // (1 + t^{p^i})^digit
            let base = Series::one(f, prec).add(f, &Series::monomial(f, f.one(), pi, prec));
            acc = acc.mul(f, &base.pow(f, digit as usize));
        }
        acc.sub(f, &Series::one(f, prec))
    }

    /// gamma(a): substitution t -> (1+t)^a - 1.
    pub fn gamma(&self, f: &FiniteField, a: &GammaInt) -> Series {
        let x = Series::one_plus_t_pow(f, a, self.prec);
        // Horner evaluation
        let mut acc = Series::zero(self.prec);
        for &coef in self.c.iter().rev() {
            acc = acc.mul(f, &x);
            acc.c[0] = f.add(acc.c[0], coef);
        }
        acc
    }
}

/// Number of base-p digits of a needed to evaluate gamma(a) mod t^prec.
pub fn prec_exponent(p: u64, prec: usize) -> u32 {
    let mut e = 1u32;
    let mut pw = p as u128;
    while pw < prec as u128 {
        pw *= p as u128;
        e += 1;
    }
    e + 1
}

/// Convenience: gamma parameter for an integer with enough digits for `prec`.
pub fn gamma_int(f: &FiniteField, a: i128, prec: usize) -> GammaInt {
    GammaInt::new(a, f.p, prec_exponent(f.p, prec)).expect("gamma parameter divisible by p")
}

/// A Laurent series t^val * s with s a truncated power series. Coefficients
/// are known in degrees [val, val + s.prec).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Laurent {
    pub val: i64,
    pub s: Series,
}

impl Laurent {
    pub fn from_series(s: Series) -> Laurent {
        Laurent { val: 0, s }
    }

    pub fn zero(prec: usize) -> Laurent {
        Laurent { val: 0, s: Series::zero(prec) }
    }

    pub fn monomial(f: &FiniteField, coeff: Elt, deg: i64, prec: usize) -> Laurent {
        Laurent { val: deg, s: Series::monomial(f, coeff, 0, prec) }
    }

    /// Degree below which all coefficients are known.
    pub fn known_until(&self) -> i64 {
        self.val + self.s.prec as i64
    }

    pub fn is_zero(&self) -> bool {
        self.s.is_zero()
    }

    pub fn coeff(&self, f: &FiniteField, deg: i64) -> Elt {
        let _ = f;
        if deg < self.val || deg >= self.known_until() {
            return Elt(0);
        }
        self.s.c[(deg - self.val) as usize]
    }

    pub fn add(&self, f: &FiniteField, other: &Laurent) -> Laurent {
        let val = self.val.min(other.val);
        let until = self.known_until().min(other.known_until());
        let prec = (until - val).max(1) as usize;
        let mut c = vec![Elt(0); prec];
        for (i, e) in c.iter_mut().enumerate() {
            let d = val + i as i64;
            *e = f.add(self.coeff(f, d), other.coeff(f, d));
        }
        Laurent { val, s: Series::from_coeffs(c) }
    }

    pub fn sub(&self, f: &FiniteField, other: &Laurent) -> Laurent {
        self.add(f, &other.scale(f, f.neg(f.one())))
    }

    pub fn scale(&self, f: &FiniteField, s: Elt) -> Laurent {
        Laurent { val: self.val, s: self.s.scale(f, s) }
    }

    pub fn mul(&self, f: &FiniteField, other: &Laurent) -> Laurent {
        Laurent { val: self.val + other.val, s: self.s.mul(f, &other.s) }
    }

    pub fn phi(&self, f: &FiniteField, r: u32) -> Laurent {
        let step = (f.p as i64).pow(r);
        Laurent { val: self.val * step, s: self.s.phi(f, r) }
    }

    /// psi^r extended to Laurent series: psi(t^{p^r c} x) = t^c psi(x).
    pub fn psi(&self, f: &FiniteField, r: u32) -> Laurent {
        let step = (f.p as i64).pow(r);
        let shift = self.val.div_euclid(step);
        let rem = self.val.rem_euclid(step) as usize;
        // t^val s = t^{step*shift} (t^rem s)
        let shifted = self.s.mul_tpow(rem);
        // mul_tpow dropped the top rem coefficients, acceptable precision loss
        Laurent { val: shift, s: shifted.psi(f, r) }
    }

    pub fn gamma(&self, f: &FiniteField, a: &GammaInt) -> Laurent {
        // gamma(t^v s) = (gamma(t))^v gamma(s); gamma(t) = t * u with u a unit
        let prec = self.s.prec;
        let x = Series::one_plus_t_pow(f, a, prec + 1);
        let unit = Series::from_coeffs(x.c[1..].to_vec()); // x / t
        let gs = self.s.gamma(f, a);
        let upow = if self.val >= 0 {
            unit.pow(f, self.val as usize)
        } else {
            unit.inv_unit(f).pow(f, (-self.val) as usize)
        };
        Laurent { val: self.val, s: gs.mul(f, &upow).truncate(prec) }
    }

    /// Equality of all coefficients below the joint known precision.
    pub fn agrees(&self, f: &FiniteField, other: &Laurent) -> bool {
        let lo = self.val.min(other.val);
        let hi = self.known_until().min(other.known_until());
        (lo..hi).all(|d| self.coeff(f, d) == other.coeff(f, d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3() -> FiniteField {
        FiniteField::new(3, 1).unwrap()
    }

    #[test]
    fn phi_of_constants_and_t() {
        let f = f3();
        let one = Series::one(&f, 10);
        assert_eq!(one.phi(&f, 1), one);
        // phi(t) = t^p: binomial oracle (1+t)^p - 1 == t^p in char p
        let t = Series::monomial(&f, f.one(), 1, 10);
        let a = gamma_int(&f, 1, 10);
        let _ = a;
        let binom = Series::one(&f, 10)
            .add(&f, &t)
            .pow(&f, 3)
            .sub(&f, &Series::one(&f, 10));
        assert_eq!(t.phi(&f, 1), binom);
        assert_eq!(t.phi(&f, 1), Series::monomial(&f, f.one(), 3, 10));
    }

    #[test]
    fn phi_r2_substitution_oracle() {
        // f = t + t^2, r = 2, p = 3 -> t^9 + t^18
        let f = f3();
        let s = Series::from_coeffs(vec![Elt(0), Elt(1), Elt(1), Elt(0)])
            .truncate(4);
        let mut s = s;
        s.prec = 20;
        s.c.resize(20, Elt(0));
        let out = s.phi(&f, 2);
        let mut expect = Series::zero(20);
        expect.c[9] = Elt(1);
        expect.c[18] = Elt(1);
        assert_eq!(out, expect);
    }

    #[test]
    fn psi_monomials_p3() {
        let f = f3();
        let t = |k: usize| Series::monomial(&f, f.one(), k, 30);
        // psi(1) = 1
        assert_eq!(Series::one(&f, 30).psi(&f, 1).c[0], f.one());
        // psi(t) = -1
        assert_eq!(t(1).psi(&f, 1).c[0], f.neg(f.one()));
        // psi(t^3) = t, psi(t^4) = -t
        assert_eq!(t(3).psi(&f, 1).c[1], f.one());
        assert_eq!(t(4).psi(&f, 1).c[1], f.neg(f.one()));
        assert_eq!(t(4).psi(&f, 1).c[0], f.zero());
        // precision shrinks
        assert_eq!(t(1).psi(&f, 1).prec, 10);
    }

    #[test]
    fn psi_phi_identity_and_projection() {
        let f = FiniteField::new(5, 1).unwrap();
        let mut s = Series::zero(25);
        for (i, c) in s.c.iter_mut().enumerate() {
            *c = f.from_int((3 * i * i + i + 1) as i64);
        }
        let round = s.phi(&f, 1).psi(&f, 1);
        assert_eq!(round.truncate(5), s.truncate(5));

        // projection formula psi(phi(a) * g) = a * psi(g)
        let mut g = Series::zero(25);
        for (i, c) in g.c.iter_mut().enumerate() {
            *c = f.from_int((7 * i + 2) as i64);
        }
        let lhs = s.phi(&f, 1).mul(&f, &g).psi(&f, 1);
        let rhs = s.mul(&f, &g.psi(&f, 1));
        let n = lhs.prec.min(rhs.prec);
        assert_eq!(lhs.truncate(n), rhs.truncate(n));
    }

    #[test]
    fn gamma_examples() {
        let f = f3();
        let t = Series::monomial(&f, f.one(), 1, 9);
        // a = 1 is the identity
        let a1 = gamma_int(&f, 1, 9);
        assert_eq!(t.gamma(&f, &a1), t);
        // f = t, a = 2: (1+t)^2 - 1 = 2t + t^2
        let a2 = gamma_int(&f, 2, 9);
        let out = t.gamma(&f, &a2);
        let mut expect = Series::zero(9);
        expect.c[1] = f.from_int(2);
        expect.c[2] = f.one();
        assert_eq!(out, expect);
    }

    #[test]
    fn gamma_leading_coefficient() {
        // gamma(a)(t^k) = a^k t^k mod t^{k+1}
        let f = FiniteField::new(5, 1).unwrap();
        for a in [2i128, 3, 4, 7] {
            let g = gamma_int(&f, a, 20);
            for k in 0..6usize {
                let s = Series::monomial(&f, f.one(), k, 20).gamma(&f, &g);
                for (i, &c) in s.c.iter().enumerate().take(k + 1) {
                    if i < k {
                        assert_eq!(c, f.zero());
                    } else {
                        assert_eq!(c, f.pow(f.from_int(a as i64), k as i64));
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_composition() {
        let f = f3();
        let mut s = Series::zero(27);
        for (i, c) in s.c.iter_mut().enumerate() {
            *c = f.from_int((i * i + 2) as i64);
        }
        let (a, b) = (gamma_int(&f, 2, 27), gamma_int(&f, 7, 27));
        let ab = gamma_int(&f, 14, 27);
        assert_eq!(s.gamma(&f, &a).gamma(&f, &b), s.gamma(&f, &ab));
    }

    #[test]
    fn gamma_commutes_with_phi() {
        let f = f3();
        let mut s = Series::zero(27);
        for (i, c) in s.c.iter_mut().enumerate() {
            *c = f.from_int((2 * i + 1) as i64);
        }
        let a = gamma_int(&f, 5, 27);
        assert_eq!(s.phi(&f, 1).gamma(&f, &a), s.gamma(&f, &a).phi(&f, 1));
    }

    #[test]
    fn etale_scalar_decomposition() {
        // id = sum_{n=0}^{p-1} (1+t)^n phi psi (1+t)^{-n}
        let f = f3();
        let prec = 27;
        let mut s = Series::zero(prec);
        for (i, c) in s.c.iter_mut().enumerate() {
            *c = f.from_int((5 * i + 3) as i64);
        }
        let one_plus_t = Series::one(&f, prec).add(&f, &Series::monomial(&f, f.one(), 1, prec));
        let inv = one_plus_t.inv_unit(&f);
        let mut acc = Series::zero(prec);
        for n in 0..3usize {
            let term = s
                .mul(&f, &inv.pow(&f, n))
                .psi(&f, 1)
                .phi(&f, 1)
                .mul(&f, &one_plus_t.pow(&f, n));
            acc = acc.add(&f, &term);
        }
        let n = acc.prec.min(s.prec);
        assert_eq!(acc.truncate(n.min(9)), s.truncate(n.min(9)));
    }

    #[test]
    fn laurent_psi_phi() {
        let f = f3();
        let x = Laurent::monomial(&f, f.from_int(2), -4, 10);
        let round = x.phi(&f, 1).psi(&f, 1);
        assert!(round.agrees(&f, &x));
        // psi(t^-1) at p=3: t^-1 = t^{-3} * t^2, psi(t^2) = 1 => psi = t^{-1}...
        // check via psi(phi(t^-1) * t^k) = t^-1 psi(t^k)
        let tm1 = Laurent::monomial(&f, f.one(), -1, 12);
        let tk = Laurent::monomial(&f, f.one(), 3, 12);
        let lhs = tm1.phi(&f, 1).mul(&f, &tk).psi(&f, 1);
        let rhs = tm1.mul(&f, &tk.psi(&f, 1));
        assert!(lhs.agrees(&f, &rhs));
    }
}
