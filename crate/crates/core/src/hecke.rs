//! Hecke-module data for GL(d+1) over Q_p at pro-p Iwahori level: the two
//! matrix realizations of the period element and its companions, supersingular
//! modules M[lambda, J, b] with their numerical invariants, and reduced
//! standard modules M(theta, sigma, eps) with basis indexed by the Weyl group.

use crate::field::{Elt, FiniteField};
use crate::linalg::Mat;
use crate::ratmat::{qint, QMat, Q};
use crate::weyl::{all_perms, Perm, SigmaMap};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    A,
    B,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HeckeError {
    #[error("J must be contained in S_lambda")]
    JNotAllowed,
    #[error("b must be a unit")]
    BadUnit,
    #[error("module data violates a defining relation: {0}")]
    RelationFailure(String),
    #[error("h is not integral; invariant violated")]
    NonIntegralH,
}

/// The concrete matrices of one of the two GL(d+1) realizations. Entries lie
/// in Z[1/p].
pub struct Realization {
    pub p: u64,
    pub d: usize,
    pub case: Case,
    pub u: QMat,
    pub sd: QMat,
    pub n_sd: QMat,
    pub phi: QMat,
}

impl Realization {
    pub fn new(p: u64, d: usize, case: Case) -> Realization {
        let n = d + 1;
        let mut u = QMat::zero(n);
        let mut sd = QMat::identity(n);
        let mut n_sd = QMat::identity(n);
        match case {
            Case::A => {
                for i in 0..d {
                    u[(i, i + 1)] = Q::one();
                }
                u[(d, 0)] = qint(p as i64);
                sd[(d - 1, d - 1)] = qint(0);
                sd[(d, d)] = qint(0);
                sd[(d - 1, d)] = qint(1);
                sd[(d, d - 1)] = qint(1);
                n_sd[(d - 1, d - 1)] = qint(0);
                n_sd[(d, d)] = qint(0);
                n_sd[(d - 1, d)] = qint(1);
                n_sd[(d, d - 1)] = qint(-1);
            }
            Case::B => {
                for i in 1..=d {
                    u[(i, i - 1)] = Q::one();
                }
                u[(0, d)] = BigRational::new(BigInt::from(1), BigInt::from(p));
                sd[(0, 0)] = qint(0);
                sd[(1, 1)] = qint(0);
                sd[(0, 1)] = qint(-1);
                sd[(1, 0)] = qint(-1);
                n_sd[(0, 0)] = qint(0);
                n_sd[(1, 1)] = qint(0);
                n_sd[(0, 1)] = qint(1);
                n_sd[(1, 0)] = qint(-1);
            }
        }
        let phi = sd.mul(&u);
        Realization { p, d, case, u, sd, n_sd, phi }
    }

    /// s_j = u^{d-j} s_d u^{j-d} for 0 <= j <= d.
    pub fn s(&self, j: usize) -> QMat {
        let e = self.d - j;
        let upow = self.u.pow(e);
        upow.mul(&self.sd).mul(&upow.inverse())
    }

    /// tau(a) for an integer a prime to p.
    pub fn tau(&self, a: i64) -> QMat {
        let n = self.d + 1;
        let mut m = QMat::identity(n);
        match self.case {
            Case::A => m[(self.d, self.d)] = BigRational::new(BigInt::one(), BigInt::from(a)),
            Case::B => m[(0, 0)] = qint(a),
        }
        m
    }

    /// h_{s_d}(x) with x read as its lift in [1, p-1].
    pub fn h_sd(&self, x: u64) -> QMat {
        let n = self.d + 1;
        let mut m = QMat::identity(n);
        let (i, j) = match self.case {
            Case::A => (self.d - 1, self.d),
            Case::B => (0, 1),
        };
        m[(i, i)] = qint(x as i64);
        m[(j, j)] = BigRational::new(BigInt::one(), BigInt::from(x));
        m
    }

    /// h_{s_j}(x) = u^{d-j} h_{s_d}(x) u^{j-d}.
    pub fn h_s(&self, j: usize, x: u64) -> QMat {
        let e = self.d - j;
        let upow = self.u.pow(e);
        upow.mul(&self.h_sd(x)).mul(&upow.inverse())
    }

    /// Read a diagonal matrix with unit entries as a vector over F_p^*
    /// (entries in [1, p-1]).
    pub fn torus_vector(&self, m: &QMat) -> Option<Vec<u64>> {
        if !m.is_diagonal() {
            return None;
        }
        (0..=self.d)
            .map(|i| QMat::entry_mod_p(&m[(i, i)], self.p).filter(|&v| v != 0))
            .collect()
    }

    /// Slot position of the nontrivial entries of h_{s_j}.
    pub fn w_matrix(&self, w: &Perm) -> QMat {
        // product of generator matrices via any decomposition; use the
        // permutation directly: it acts the same way on diagonal tori
        let n = self.d + 1;
        let mut m = QMat::zero(n);
        for i in 0..n {
            m[(w.apply(i), i)] = Q::one();
        }
        m
    }
}

/// A character of the finite torus (F_p^*)^{d+1} as an exponent vector
/// mod p-1: lambda(diag(x_0..x_d)) = prod x_j^{a_j}.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TorusChar {
    pub p: u64,
    pub exps: Vec<u64>,
}

impl TorusChar {
    pub fn new(p: u64, exps: Vec<u64>) -> TorusChar {
        TorusChar { p, exps: exps.into_iter().map(|e| e % (p - 1)).collect() }
    }

    pub fn eval(&self, f: &FiniteField, t: &[u64]) -> Elt {
        assert_eq!(self.exps.len(), t.len());
        let mut acc = f.one();
        for (&x, &a) in t.iter().zip(&self.exps) {
            acc = f.mul(acc, f.pow(f.from_int(x as i64), a as i64));
        }
        acc
    }

    /// Value on -identity.
    pub fn eval_minus_id(&self, f: &FiniteField) -> Elt {
        let t = vec![self.p - 1; self.exps.len()];
        self.eval(f, &t)
    }

    /// Pullback along conjugation: w.theta(t) = theta(w t w^{-1}).
    pub fn conj_by(&self, w: &Perm) -> TorusChar {
        // (w t w^{-1})_l = t_{w^{-1}(l)}, so the exponent at slot m is
        // exps[w(m)]
        let exps = (0..self.exps.len()).map(|m| self.exps[w.apply(m)]).collect();
        TorusChar { p: self.p, exps }
    }
}

/// A supersingular module M[lambda, J, b]: d+1 dimensional with basis e_i
/// and explicit diagonal/cyclic operators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Supersingular {
    pub d: usize,
    pub case: Case,
    pub lambda: TorusChar,
    /// subset of {0..d} indexing the simple reflections in J
    pub jset: BTreeSet<usize>,
    pub b: Elt,
}

/// Numerical invariants of a supersingular module.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invariants {
    pub k: Vec<u64>,
    pub w: Vec<u128>,
    pub delta: Elt,
    pub i_exp: Vec<u64>,
    pub h_parts: Vec<u128>,
    pub h: u128,
    pub s: u64,
    pub beta_power: Elt,
}

impl Supersingular {
    pub fn new(
        f: &FiniteField,
        real: &Realization,
        lambda: TorusChar,
        jset: BTreeSet<usize>,
        b: Elt,
    ) -> Result<Supersingular, HeckeError> {
        if b.0 == 0 {
            return Err(HeckeError::BadUnit);
        }
        let s_lambda = s_lambda(f, real, &lambda);
        if !jset.is_subset(&s_lambda) {
            return Err(HeckeError::JNotAllowed);
        }
        Ok(Supersingular { d: real.d, case: real.case, lambda, jset, b })
    }

    /// lambda(h_{s_j}(x)) evaluated via the realization matrices.
    fn lambda_on_hs(&self, f: &FiniteField, real: &Realization, j: usize, x: u64) -> Elt {
        let t = real.torus_vector(&real.h_s(j, x)).expect("h_s is a torus element");
        self.lambda.eval(f, &t)
    }

    /// The exponents k_i: the character x -> lambda(h_{s_{i-1}}(x)) equals
    /// x^{k_i}, with the convention k_i = p-1 (resp. 0) when the character is
    /// trivial and s_{i-1} lies in J (resp. does not).
    pub fn k_vec(&self, f: &FiniteField, real: &Realization) -> Vec<u64> {
        let p = f.p;
        let d = self.d;
        let g = smallest_primitive_root(p);
        (0..=d)
            .map(|i| {
                let jm1 = (i + d) % (d + 1); // i-1 mod d+1
                let val = self.lambda_on_hs(f, real, jm1, g);
                if val == f.one() {
                    if self.jset.contains(&jm1) {
                        p - 1
                    } else {
                        0
                    }
                } else {
                    f.fp_dlog(val)
                }
            })
            .collect()
    }

    pub fn invariants(&self, f: &FiniteField, real: &Realization) -> Result<Invariants, HeckeError> {
        let p = f.p as u128;
        let d = self.d;
        let k = self.k_vec(f, real);
        // w_i = k_i + p k_{i-1} + ... + p^i k_0 + p^{i+1} k_d + ... + p^d k_{i+1}
        let w: Vec<u128> = (0..=d)
            .map(|i| {
                let mut acc = 0u128;
                let mut pw = 1u128;
                for step in 0..=d {
                    let idx = (i + (d + 1) - step) % (d + 1);
                    acc += k[idx] as u128 * pw;
                    pw *= p;
                }
                acc
            })
            .collect();
        let mut delta = if d % 2 == 1 { f.neg(f.one()) } else { f.one() };
        delta = f.mul(delta, self.lambda.eval_minus_id(f));
        for &ki in &k {
            delta = f.mul(delta, f.factorial(ki));
        }
        // i_j = p-1-k_{d+1-j}, h_j = sum_{v=0}^{j-1} i_{d+v+1-j} p^v
        let kk = |idx: usize| -> u64 {
            if idx == d + 1 {
                k[0]
            } else {
                k[idx]
            }
        };
        let i_exp: Vec<u64> = (0..=d + 1).map(|j| f.p - 1 - kk(d + 1 - j)).collect();
        let h_parts: Vec<u128> = (0..=d + 1)
            .map(|j| {
                let mut acc = 0u128;
                let mut pw = 1u128;
                for v in 0..j {
                    acc += i_exp[d + v + 1 - j] as u128 * pw;
                    pw *= p;
                }
                acc
            })
            .collect();
        let h_top = h_parts[d + 1];
        if h_top % (p - 1) != 0 {
            return Err(HeckeError::NonIntegralH);
        }
        let h = h_top / (p - 1);
        // s in [0, p-2] with lambda(tau(x)) = x^{-s}
        let g = smallest_primitive_root(f.p);
        let tau_g = real.torus_vector(&real.tau(g as i64)).expect("tau is a torus element");
        let val = self.lambda.eval(f, &tau_g);
        let s = if val == f.one() { 0 } else { (f.p - 1) - f.fp_dlog(val) };
        let beta_power = f.mul(f.inv(delta), self.b);
        Ok(Invariants { k, w, delta, i_exp, h_parts, h, s, beta_power })
    }

    /// Conjugation by u^i: lambda^{[i]}(t) = lambda(u^{-i} t u^i) and
    /// J^{[i]} = u^i J u^{-i}, both computed on the matrices.
    pub fn u_conjugate(&self, f: &FiniteField, real: &Realization, i: usize) -> Supersingular {
        let d = self.d;
        let g = smallest_primitive_root(f.p);
        let upow = real.u.pow(i % (d + 1));
        let uinv = upow.inverse();
        // new exponents: evaluate on diag with g in one slot
        let exps: Vec<u64> = (0..=d)
            .map(|slot| {
                let mut t = QMat::identity(d + 1);
                t[(slot, slot)] = qint(g as i64);
                let conj = uinv.mul(&t).mul(&upow);
                let tv = real.torus_vector(&conj).expect("conjugate of a torus element");
                let val = self.lambda.eval(f, &tv);
                if val == f.one() {
                    0
                } else {
                    f.fp_dlog(val)
                }
            })
            .collect();
        let jset = self
            .jset
            .iter()
            .map(|&j| {
                let conj = upow.mul(&real.s(j)).mul(&uinv);
                (0..=d)
                    .find(|&j2| real.s(j2) == conj)
                    .expect("u-conjugate of a simple reflection is simple")
            })
            .collect();
        Supersingular {
            d,
            case: self.case,
            lambda: TorusChar::new(f.p, exps),
            jset,
            b: self.b,
        }
    }

    pub fn satisfies_diff(&self, f: &FiniteField, real: &Realization) -> bool {
        let mut seen = BTreeSet::new();
        for i in 0..=self.d {
            let c = self.u_conjugate(f, real, i);
            if !seen.insert((c.lambda.exps.clone(), c.jset.clone())) {
                return false;
            }
        }
        true
    }

    fn key(&self) -> (Vec<u64>, Vec<usize>) {
        (self.lambda.exps.clone(), self.jset.iter().cloned().collect())
    }

    /// lambda^{[i]} evaluated at a torus matrix.
    pub fn lambda_i(&self, f: &FiniteField, real: &Realization, i: usize, t: &QMat) -> Elt {
        let upow = real.u.pow(i % (self.d + 1));
        let conj = upow.inverse().mul(t).mul(&upow);
        let tv = real.torus_vector(&conj).expect("torus element");
        self.lambda.eval(f, &tv)
    }
}

pub fn s_lambda(f: &FiniteField, real: &Realization, lambda: &TorusChar) -> BTreeSet<usize> {
    let g = smallest_primitive_root(f.p);
    (0..=real.d)
        .filter(|&j| {
            let t = real.torus_vector(&real.h_s(j, g)).unwrap();
            lambda.eval(f, &t) == f.one()
        })
        .collect()
}

fn smallest_primitive_root(p: u64) -> u64 {
    crate::sl2::smallest_primitive_root(p)
}

/// Every pair (lambda, J) with J inside S_lambda, without the distinctness
/// filter or orbit reduction. Used by the homology sweeps.
pub fn all_valid_pairs(f: &FiniteField, real: &Realization, b: Elt) -> Vec<Supersingular> {
    let p = f.p;
    let d = real.d;
    let mut out = Vec::new();
    let mut exps = vec![0u64; d + 1];
    loop {
        let lambda = TorusChar::new(p, exps.clone());
        let sl = s_lambda(f, real, &lambda);
        let sl_vec: Vec<usize> = sl.iter().cloned().collect();
        for mask in 0..(1u32 << sl_vec.len()) {
            let jset: BTreeSet<usize> = sl_vec
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &j)| j)
                .collect();
            out.push(Supersingular { d, case: real.case, lambda: lambda.clone(), jset, b });
        }
        let mut i = 0;
        loop {
            if i > d {
                out.sort_by_key(|m| m.key());
                return out;
            }
            exps[i] += 1;
            if exps[i] < p - 1 {
                break;
            }
            exps[i] = 0;
            i += 1;
        }
    }
}

/// All supersingular modules with the given b, one canonical representative
/// (lexicographically least (exponents, J)) per u-conjugacy orbit.
pub fn enumerate_supersingular(
    f: &FiniteField,
    real: &Realization,
    b: Elt,
) -> Vec<Supersingular> {
    let p = f.p;
    let d = real.d;
    let mut reps = Vec::new();
    let mut exps = vec![0u64; d + 1];
    loop {
        let lambda = TorusChar::new(p, exps.clone());
        let sl = s_lambda(f, real, &lambda);
        let sl_vec: Vec<usize> = sl.iter().cloned().collect();
        for mask in 0..(1u32 << sl_vec.len()) {
            let jset: BTreeSet<usize> = sl_vec
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &j)| j)
                .collect();
            let m = Supersingular { d, case: real.case, lambda: lambda.clone(), jset, b };
            if !m.satisfies_diff(f, real) {
                continue;
            }
            // canonical representative of the orbit
            let mut best = m.key();
            for i in 1..=d {
                best = best.min(m.u_conjugate(f, real, i).key());
            }
            if m.key() == best {
                reps.push(m);
            }
        }
        // increment exponent vector
        let mut i = 0;
        loop {
            if i > d {
                reps.sort_by_key(|m| m.key());
                return reps;
            }
            exps[i] += 1;
            if exps[i] < p - 1 {
                break;
            }
            exps[i] = 0;
            i += 1;
        }
    }
}

/// A reduced standard module M(theta, sigma, eps) with basis {g_w}.
#[derive(Clone, Debug)]
pub struct ReducedStandard {
    pub d: usize,
    pub case: Case,
    pub theta: TorusChar,
    pub sigma: SigmaMap,
    pub eps: BTreeMap<Perm, Elt>,
    pub basis: Vec<Perm>,
}

impl ReducedStandard {
    pub fn new(
        f: &FiniteField,
        real: &Realization,
        theta: TorusChar,
        sigma: SigmaMap,
        eps: BTreeMap<Perm, Elt>,
    ) -> Result<ReducedStandard, HeckeError> {
        let d = real.d;
        let basis = all_perms(d);
        if eps.len() != basis.len() || eps.values().any(|e| e.0 == 0) {
            return Err(HeckeError::BadUnit);
        }
        let m = ReducedStandard { d, case: real.case, theta, sigma, eps, basis };
        m.check_relations(f, real)?;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index(&self, w: &Perm) -> usize {
        self.basis.binary_search(w).expect("basis is sorted")
    }

    /// theta(w t w^{-1}) for a torus vector t.
    pub fn theta_conj(&self, f: &FiniteField, w: &Perm, t: &[u64]) -> Elt {
        self.theta.conj_by(w).eval(f, t)
    }

    pub fn kappa(&self, f: &FiniteField, real: &Realization, w: &Perm) -> Elt {
        let t = real.torus_vector(&real.tau(-1)).unwrap();
        self.theta_conj(f, w, &t)
    }

    /// The character x -> theta(w h_{s_d}(x) w^{-1}); trivial iff value 1 at
    /// a generator.
    pub fn theta_hsd_trivial(&self, f: &FiniteField, real: &Realization, w: &Perm) -> bool {
        let g = smallest_primitive_root(f.p);
        let t = real.torus_vector(&real.h_sd(g)).unwrap();
        self.theta_conj(f, w, &t) == f.one()
    }

    /// floor/ceil exponents: theta(w h_{s_d}^{-1}(x) w^{-1}) = x^{-k(w)}
    /// when nontrivial; (0, p-1) in the trivial case.
    pub fn k_bounds(&self, f: &FiniteField, real: &Realization, w: &Perm) -> (u64, u64) {
        let g = smallest_primitive_root(f.p);
        let t = real.torus_vector(&real.h_sd(g)).unwrap();
        let val = self.theta_conj(f, w, &t); // theta(w h(g) w^{-1}) = g^{k(w)}
        if val == f.one() {
            (0, f.p - 1)
        } else {
            let k = f.fp_dlog(val);
            (k, k)
        }
    }

    pub fn t_torus(&self, f: &FiniteField, t: &[u64]) -> Mat {
        let n = self.dim();
        let mut m = Mat::zero(n, n);
        let tinv: Vec<u64> = t.iter().map(|&x| mod_inv_u(x, f.p)).collect();
        for (i, w) in self.basis.iter().enumerate() {
            m[(i, i)] = self.theta_conj(f, w, &tinv);
        }
        m
    }

    pub fn t_u_inv(&self, _f: &FiniteField) -> Mat {
        let n = self.dim();
        let ubar_inv = Perm::ubar(self.d).inverse();
        let mut m = Mat::zero(n, n);
        for (i, w) in self.basis.iter().enumerate() {
            let target = self.index(&w.mul(&ubar_inv));
            m[(target, i)] = self.eps[w];
        }
        m
    }

    /// The four-case table for T_{s_d}.
    pub fn t_sd(&self, f: &FiniteField, real: &Realization) -> Mat {
        let n = self.dim();
        let sd = Perm::s(self.d, self.d);
        let mut m = Mat::zero(n, n);
        for (i, w) in self.basis.iter().enumerate() {
            let wsd = w.mul(&sd);
            let trivial = self.theta_hsd_trivial(f, real, w);
            let kap = self.kappa(f, real, w);
            if (self.sigma.is(&wsd, -1) && !trivial) || self.sigma.is(w, 1) {
                m[(self.index(&wsd), i)] = f.one();
            } else if (self.sigma.is(&wsd, 0) || self.sigma.is(&wsd, 1)) && trivial {
                m[(i, i)] = f.neg(kap);
            } else if self.sigma.is(&wsd, -1) && trivial {
                m[(self.index(&wsd), i)] = f.one();
                m[(i, i)] = f.neg(kap);
            }
            // all other cases: zero column
        }
        m
    }

    /// T_{n_{s_d}} = T_{s_d} after T_{tau(-1)} (the latter is the kappa
    /// diagonal).
    pub fn t_n_sd(&self, f: &FiniteField, real: &Realization) -> Mat {
        let n = self.dim();
        let mut kappa_diag = Mat::zero(n, n);
        for (i, w) in self.basis.iter().enumerate() {
            kappa_diag[(i, i)] = self.kappa(f, real, w);
        }
        self.t_sd(f, real).mul(f, &kappa_diag)
    }

    pub fn t_hsd(&self, f: &FiniteField, real: &Realization, x: u64) -> Mat {
        let t = real.torus_vector(&real.h_sd(x)).unwrap();
        self.t_torus(f, &t)
    }

    fn check_relations(&self, f: &FiniteField, real: &Realization) -> Result<(), HeckeError> {
        // torus multiplicativity T_t T_t' = T_{tt'}
        let g = smallest_primitive_root(f.p);
        let t1 = real.torus_vector(&real.h_sd(g)).unwrap();
        let t2 = real.torus_vector(&real.tau(g as i64)).unwrap();
        let prod: Vec<u64> = t1.iter().zip(&t2).map(|(&a, &b)| a * b % f.p).collect();
        let lhs = self.t_torus(f, &t1).mul(f, &self.t_torus(f, &t2));
        if lhs != self.t_torus(f, &prod) {
            return Err(HeckeError::RelationFailure("T_t T_t' = T_tt'".into()));
        }
        // T_t T_{u^-1} = T_{u^-1} T_{u^-1 t u}
        let tu = self.t_u_inv(f);
        let tmat = real.h_sd(g);
        let conj = real.u.inverse().mul(&tmat).mul(&real.u);
        let conj_t = real.torus_vector(&conj).unwrap();
        let lhs = self.t_torus(f, &t1).mul(f, &tu);
        let rhs = tu.mul(f, &self.t_torus(f, &conj_t));
        if lhs != rhs {
            return Err(HeckeError::RelationFailure("u-torus commutation".into()));
        }
        // quadratic relation mod p: T_{n_sd}^2 = (sum_x T_{h_sd(x)}) T_{n_sd}
        let tn = self.t_n_sd(f, real);
        let mut c = Mat::zero(self.dim(), self.dim());
        for x in 1..f.p {
            c = c.add(f, &self.t_hsd(f, real, x));
        }
        if tn.mul(f, &tn) != c.mul(f, &tn) {
            return Err(HeckeError::RelationFailure("quadratic relation".into()));
        }
        Ok(())
    }
}

fn mod_inv_u(a: u64, p: u64) -> u64 {
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
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> FiniteField {
        FiniteField::new(p, 1).unwrap()
    }

    #[test]
    fn realization_matrix_identities() {
        for case in [Case::A, Case::B] {
            for d in 1..=3usize {
                let real = Realization::new(3, d, case);
                // u^{d+1} is p id or p^{-1} id
                let ud1 = real.u.pow(d + 1);
                let p_id = QMat::identity(d + 1).scale(&qint(3));
                let pinv_id =
                    QMat::identity(d + 1).scale(&BigRational::new(BigInt::one(), BigInt::from(3)));
                assert!(ud1 == p_id || ud1 == pinv_id, "{:?} d={}", case, d);
                // n_sd s_d = tau(-1)
                assert_eq!(real.n_sd.mul(&real.sd), real.tau(-1), "{:?} d={}", case, d);
                // u s_j u^{-1} = s_{j-1}
                for j in 0..=d {
                    let conj = real.u.mul(&real.s(j)).mul(&real.u.inverse());
                    let jm1 = (j + d) % (d + 1);
                    assert_eq!(conj, real.s(jm1), "{:?} d={} j={}", case, d, j);
                }
                // phi^d is diagonal
                assert!(real.phi.pow(d).is_diagonal(), "{:?} d={}", case, d);
                // tau(a) phi = phi tau(a)
                for a in [2i64, 7, -1] {
                    assert_eq!(real.tau(a).mul(&real.phi), real.phi.mul(&real.tau(a)));
                }
                // h_s multiplicativity
                let h2 = real.h_s(0, 2);
                assert_eq!(h2.mul(&h2), real.h_s(0, 4 % 3 + 3), "h_s(2)^2 = h_s(4)");
            }
        }
    }

    #[test]
    fn k_vector_examples() {
        // trivial lambda, J = S, d = 1: k = (p-1, p-1)
        let k = f(3);
        let real = Realization::new(3, 1, Case::A);
        let lam = TorusChar::new(3, vec![0, 0]);
        let m = Supersingular::new(&k, &real, lam, [0, 1].into(), k.one()).unwrap();
        assert_eq!(m.k_vec(&k, &real), vec![2, 2]);
    }

    #[test]
    fn invariants_p5_d1() {
        // k = (3, 1): w_0 = 3 + 5 = 8, w_1 = 1 + 15 = 16, i = (1, 3), h_2 = 16, h = 4
        let k = f(5);
        let real = Realization::new(5, 1, Case::A);
        // k_0 = a_0 - a_1 = 3 mod 4 (slot reading is via matrices; (3,0) works)
        let lam = TorusChar::new(5, vec![3, 0]);
        let m = Supersingular::new(&k, &real, lam, BTreeSet::new(), k.one()).unwrap();
        let inv = m.invariants(&k, &real).unwrap();
        assert_eq!(inv.k, vec![3, 1]);
        assert_eq!(inv.w, vec![8, 16]);
        assert_eq!(inv.i_exp[0], 1);
        assert_eq!(inv.i_exp[1], 3);
        assert_eq!(inv.h_parts[2], 16);
        assert_eq!(inv.h, 4);
        // delta = (-1)^1 lambda(-id) 3! 1!; lambda(-id) = (-1)^{3+0} = -1
        assert_eq!(inv.delta, k.from_int(6));
        assert_eq!(inv.beta_power, k.inv(inv.delta));
    }

    #[test]
    fn u_conjugate_shifts() {
        let k = f(3);
        let real = Realization::new(3, 2, Case::A);
        let lam = TorusChar::new(3, vec![0, 0, 0]);
        let m = Supersingular::new(&k, &real, lam, [0].into(), k.one()).unwrap();
        // i = 0 and i = d+1 are the identity
        assert_eq!(m.u_conjugate(&k, &real, 0).key(), m.key());
        assert_eq!(m.u_conjugate(&k, &real, 3).key(), m.key());
        // matrix conjugation sends s_0 to s_2 for i = 1
        let c = m.u_conjugate(&k, &real, 1);
        assert_eq!(c.jset, BTreeSet::from([2]));
        // k-vector shifts cyclically: k_i of conj = k_{i+1} of m
        let k0 = m.k_vec(&k, &real);
        let k1 = c.k_vec(&k, &real);
        for i in 0..=2 {
            assert_eq!(k1[i], k0[(i + 1) % 3]);
        }
    }

    #[test]
    fn diff_condition() {
        let k = f(3);
        let real = Realization::new(3, 1, Case::A);
        // trivial pair is u-invariant
        let lam = TorusChar::new(3, vec![0, 0]);
        let m = Supersingular::new(&k, &real, lam, BTreeSet::new(), k.one()).unwrap();
        assert!(!m.satisfies_diff(&k, &real));
        // distinct exponents move
        let lam = TorusChar::new(3, vec![1, 0]);
        let m = Supersingular::new(&k, &real, lam, BTreeSet::new(), k.one()).unwrap();
        assert!(m.satisfies_diff(&k, &real));
    }

    #[test]
    fn enumeration_counts_d1_p3() {
        let k = f(3);
        let real = Realization::new(3, 1, Case::A);
        let reps = enumerate_supersingular(&k, &real, k.one());
        assert_eq!(reps.len(), 3);
        // brute-force double count: total (lambda, J) pairs satisfying diff,
        // grouped into orbits of size dividing d+1 = 2
        let mut total = 0usize;
        for a0 in 0..2 {
            for a1 in 0..2 {
                let lam = TorusChar::new(3, vec![a0, a1]);
                let sl = s_lambda(&k, &real, &lam);
                let sl_vec: Vec<usize> = sl.iter().cloned().collect();
                for mask in 0..(1u32 << sl_vec.len()) {
                    let jset: BTreeSet<usize> = sl_vec
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| mask >> b & 1 == 1)
                        .map(|(_, &j)| j)
                        .collect();
                    let m = Supersingular {
                        d: 1,
                        case: Case::A,
                        lambda: lam.clone(),
                        jset,
                        b: k.one(),
                    };
                    if m.satisfies_diff(&k, &real) {
                        total += 1;
                    }
                }
            }
        }
        assert_eq!(total, 6); // 3 orbits of size 2
        for m in &reps {
            assert!(m.jset.is_subset(&s_lambda(&k, &real, &m.lambda)));
        }
    }

    #[test]
    fn reduced_standard_operators() {
        let k = f(5);
        let real = Realization::new(5, 2, Case::A);
        let theta = TorusChar::new(5, vec![0, 1, 3]);
        let sigma = SigmaMap::constant(2, 1);
        let eps: BTreeMap<Perm, Elt> =
            all_perms(2).into_iter().map(|w| (w, k.one())).collect();
        let m = ReducedStandard::new(&k, &real, theta, sigma, eps).unwrap();
        assert_eq!(m.dim(), 6);
        // T_{u^-1} permutes the basis by right multiplication by ubar^{-1}
        let tu = m.t_u_inv(&k);
        assert_eq!(tu.rank(&k), 6);
        // kappa is a sign
        for w in &m.basis {
            let kap = m.kappa(&k, &real, w);
            assert!(kap == k.one() || kap == k.neg(k.one()));
        }
        // sigma = 1 branch: T_{s_d} sends g_w to g_{w s_d} for w in W^{s_d}
        let tsd = m.t_sd(&k, &real);
        let sd = Perm::s(2, 2);
        for w in &m.basis {
            if w.in_w_sd() {
                let col = m.index(w);
                let row = m.index(&w.mul(&sd));
                assert_eq!(tsd[(row, col)], k.one());
            }
        }
    }

    #[test]
    fn reduced_standard_all_other_cases_zero() {
        // with sigma = -1 everywhere and theta making all characters
        // nontrivial, T_{s_d} g_w = 0 exactly for w in W^{s_d}
        let k = f(5);
        let real = Realization::new(5, 2, Case::A);
        let theta = TorusChar::new(5, vec![0, 1, 3]);
        let sigma = SigmaMap::constant(2, -1);
        let eps: BTreeMap<Perm, Elt> =
            all_perms(2).into_iter().map(|w| (w, k.one())).collect();
        let m = ReducedStandard::new(&k, &real, theta, sigma, eps).unwrap();
        let tsd = m.t_sd(&k, &real);
        for w in &m.basis {
            if w.in_w_sd() {
                let col = m.index(w);
                assert!((0..m.dim()).all(|r| tsd[(r, col)].0 == 0));
            }
        }
    }
}
