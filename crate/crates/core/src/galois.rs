//! Galois-representation parameters: the triples (h, s, beta^{m+1}) that
//! classify the induced representations attached to standard cyclic modules,
//! their normal forms under twisting, and the bijection check between
//! supersingular modules and irreducible parameter classes.

use crate::cyclic::CyclicModule;
use crate::field::{Elt, FiniteField};
use crate::hecke::{enumerate_supersingular, Realization, Supersingular};
use crate::report::Report;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GaloisError {
    #[error("h = {0} out of range for level {1}")]
    HOutOfRange(u128, usize),
    #[error("parameters only defined for r = 1")]
    HigherFrobenius,
    #[error("h is not integral")]
    NonIntegralH,
}

/// Parameters of ind(omega_{m+1}^h) (x) omega^s mu_beta, with beta stored
/// through beta^{m+1} in k.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GaloisParam {
    /// the zero-dimensional representation (all exponents vanish)
    Zero,
    Param {
        /// m+1
        level: usize,
        h: u128,
        s: u64,
        beta_power: Elt,
    },
}

/// Isomorphism invariant: the multiset of tame inertia exponents together
/// with beta^{m+1} and the level.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NormalForm {
    pub level: usize,
    pub inertia: BTreeSet<u128>,
    pub beta_power: Elt,
}

/// (p^{m+1} - 1) / (p - 1).
pub fn cyclotomic_quotient(p: u64, level: usize) -> u128 {
    ((p as u128).pow(level as u32) - 1) / (p as u128 - 1)
}

pub fn params_from_cyclic(
    f: &FiniteField,
    m: &CyclicModule,
) -> Result<GaloisParam, GaloisError> {
    if m.r != 1 {
        return Err(GaloisError::HigherFrobenius);
    }
    if m.k.iter().all(|&k| k == 0) {
        return Ok(GaloisParam::Zero);
    }
    let level = m.perimeter();
    let h_parts = m.h_parts(f);
    let top = h_parts[level];
    if top % (f.p as u128 - 1) != 0 {
        return Err(GaloisError::NonIntegralH);
    }
    let h = top / (f.p as u128 - 1);
    // eta_0(x) = x^{-s}
    let s = ((f.p - 1) - m.eta[0] % (f.p - 1)) % (f.p - 1);
    // (-1)^m beta^{-(m+1)} = rho  =>  beta^{m+1} = (-1)^m rho^{-1}
    let sign = if (level - 1) % 2 == 1 { f.neg(f.one()) } else { f.one() };
    let beta_power = f.mul(sign, f.inv(m.rho_prod(f)));
    Ok(GaloisParam::Param { level, h, s, beta_power })
}

/// No proper divisor n of the level admits a descent: h is not a multiple of
/// (p^{m+1}-1)/(p^n-1) for any n < m+1 dividing m+1.
pub fn is_primitive(h: u128, level: usize, p: u64) -> Result<bool, GaloisError> {
    let modulus = (p as u128).pow(level as u32) - 1;
    if h == 0 || h > modulus - 1 {
        return Err(GaloisError::HOutOfRange(h, level));
    }
    for n in 1..level {
        if level % n == 0 {
            let quot = modulus / ((p as u128).pow(n as u32) - 1);
            if h % quot == 0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Orbit characterization: primitive iff the orbit of h under multiplication
/// by p mod p^{m+1}-1 has exactly m+1 elements.
pub fn p_orbit_size(h: u128, level: usize, p: u64) -> usize {
    let modulus = (p as u128).pow(level as u32) - 1;
    let mut orbit = BTreeSet::new();
    let mut cur = h % modulus;
    loop {
        if !orbit.insert(cur) {
            return orbit.len();
        }
        cur = cur * p as u128 % modulus;
    }
}

pub fn normalize(f: &FiniteField, param: &GaloisParam) -> Option<NormalForm> {
    match param {
        GaloisParam::Zero => None,
        GaloisParam::Param { level, h, s, beta_power } => {
            let modulus = (f.p as u128).pow(*level as u32) - 1;
            let c = cyclotomic_quotient(f.p, *level);
            let base = (h + *s as u128 * c) % modulus;
            let mut inertia = BTreeSet::new();
            let mut cur = base;
            for _ in 0..*level {
                inertia.insert(cur);
                cur = cur * f.p as u128 % modulus;
            }
            Some(NormalForm { level: *level, inertia, beta_power: *beta_power })
        }
    }
}

/// One row of the correspondence table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableRow {
    pub lambda: Vec<u64>,
    pub jset: Vec<usize>,
    pub b: u64,
    pub k: Vec<u64>,
    pub w: Vec<u128>,
    pub delta: u64,
    pub h: u128,
    pub s: u64,
    pub beta_power: u64,
    pub primitive: bool,
    pub inertia: Vec<u128>,
}

pub fn table_rows(
    f: &FiniteField,
    real: &Realization,
    b: Elt,
) -> Result<Vec<TableRow>, GaloisError> {
    let reps = enumerate_supersingular(f, real, b);
    let mut rows = Vec::new();
    for m in &reps {
        let inv = m.invariants(f, real).map_err(|_| GaloisError::NonIntegralH)?;
        let cm = CyclicModule::from_supersingular(f, real, m);
        let param = params_from_cyclic(f, &cm)?;
        let (h, s, beta_power, primitive, inertia) = match &param {
            GaloisParam::Zero => unreachable!("supersingular exponents never all vanish"),
            GaloisParam::Param { h, s, beta_power, level } => {
                let prim = is_primitive(*h, *level, f.p).unwrap_or(false);
                let nf = normalize(f, &param).unwrap();
                (*h, *s, *beta_power, prim, nf.inertia.iter().cloned().collect::<Vec<_>>())
            }
        };
        // cross-check against the direct invariant computation
        assert_eq!(h, inv.h, "two routes to h disagree");
        assert_eq!(s, inv.s, "two routes to s disagree");
        assert_eq!(beta_power, inv.beta_power, "two routes to beta disagree");
        rows.push(TableRow {
            lambda: m.lambda.exps.clone(),
            jset: m.jset.iter().cloned().collect(),
            b: b.0 as u64,
            k: inv.k,
            w: inv.w,
            delta: inv.delta.0 as u64,
            h,
            s,
            beta_power: beta_power.0 as u64,
            primitive,
            inertia,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BijectionReport {
    pub p: u64,
    pub d: usize,
    pub b: u64,
    pub domain_size: usize,
    pub image_size: usize,
    pub target_size: usize,
    pub injective: bool,
    pub all_primitive: bool,
    pub all_irreducible: bool,
    pub surjective: bool,
}

impl BijectionReport {
    pub fn pass(&self) -> bool {
        self.injective
            && self.all_primitive
            && self.all_irreducible
            && self.surjective
            && self.domain_size == self.target_size
    }
}

/// The full correspondence check for one (p, d, b): supersingular classes
/// inject into parameter normal forms, every image is primitive and
/// irreducible, and the image exhausts the primitive (h, s) classes.
pub fn bijection_check(f: &FiniteField, real: &Realization, b: Elt) -> BijectionReport {
    let d = real.d;
    let level = d + 1;
    let reps = enumerate_supersingular(f, real, b);
    let mut images = BTreeSet::new();
    let mut inertia_classes = BTreeSet::new();
    let mut all_primitive = true;
    let mut all_irreducible = true;
    for m in &reps {
        let cm = CyclicModule::from_supersingular(f, real, m);
        let param = params_from_cyclic(f, &cm).expect("supersingular parameters");
        if let GaloisParam::Param { h, .. } = &param {
            all_primitive &= is_primitive(*h, level, f.p).unwrap_or(false);
        }
        all_irreducible &= cm.is_irreducible(true);
        let nf = normalize(f, &param).expect("nonzero representation");
        inertia_classes.insert(nf.inertia.clone());
        images.insert(nf);
    }
    let injective = images.len() == reps.len() && inertia_classes.len() == reps.len();

    // target: primitive h in [1, c-1], s in [0, p-2], up to normal-form
    // equivalence of the inertia data
    let c = cyclotomic_quotient(f.p, level);
    let mut target = BTreeSet::new();
    for h in 1..c {
        if !is_primitive(h, level, f.p).unwrap() {
            continue;
        }
        for s in 0..f.p - 1 {
            let nf = normalize(
                f,
                &GaloisParam::Param { level, h, s, beta_power: f.one() },
            )
            .unwrap();
            target.insert(nf.inertia);
        }
    }
    let surjective = inertia_classes == target;
    BijectionReport {
        p: f.p,
        d,
        b: b.0 as u64,
        domain_size: reps.len(),
        image_size: images.len(),
        target_size: target.len(),
        injective,
        all_primitive,
        all_irreducible,
        surjective,
    }
}

/// Run the bijection for every unit b; reports are independent of b in size.
pub fn bijection_all_b(f: &FiniteField, real: &Realization) -> (Vec<BijectionReport>, Report) {
    let mut out = Vec::new();
    let mut report = Report::new(format!("bijection p={} d={}", f.p, real.d));
    let mut sizes = BTreeSet::new();
    for b in f.units() {
        let r = bijection_check(f, real, b);
        report.record(
            "injective + primitive + irreducible + surjective",
            format!("b={}", b.0),
            r.pass(),
        );
        sizes.insert((r.domain_size, r.target_size));
        out.push(r);
    }
    report.record("counts independent of b", "", sizes.len() == 1);
    (out, report)
}

/// Consistency of the two routes to (h, s, beta_power) for every
/// supersingular representative.
pub fn crosscheck_param_routes(f: &FiniteField, real: &Realization, b: Elt) -> Report {
    let mut report = Report::new(format!("parameter routes p={} d={}", f.p, real.d));
    for m in enumerate_supersingular(f, real, b) {
        let inv = m.invariants(f, real).unwrap();
        let cm = CyclicModule::from_supersingular(f, real, &m);
        let param = params_from_cyclic(f, &cm).unwrap();
        let ok = match param {
            GaloisParam::Zero => false,
            GaloisParam::Param { h, s, beta_power, .. } => {
                h == inv.h && s == inv.s && beta_power == inv.beta_power
            }
        };
        report.record(
            "invariants equal cyclic-module route",
            format!("lambda={:?} J={:?}", m.lambda.exps, m.jset),
            ok,
        );
    }
    report
}

/// The number of distinct normal forms for varying b with everything else
/// fixed: used by the table command.
pub fn distinct_normal_forms(
    f: &FiniteField,
    real: &Realization,
    b: Elt,
) -> BTreeMap<NormalForm, Vec<Supersingular>> {
    let mut map: BTreeMap<NormalForm, Vec<Supersingular>> = BTreeMap::new();
    for m in enumerate_supersingular(f, real, b) {
        let cm = CyclicModule::from_supersingular(f, real, &m);
        let nf = normalize(f, &params_from_cyclic(f, &cm).unwrap()).unwrap();
        map.entry(nf).or_default().push(m);
    }
    map
}
