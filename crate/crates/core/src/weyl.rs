//! The finite Weyl group W = S_{d+1} of GL(d+1), the successor map attached
//! to a sign assignment on W^{s_d}, and admissible filtrations of W whose
//! successor-map cycles index standard cyclic subquotients.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// A permutation of {0, .., d} in one-line notation: w.0[i] = w(i).
/// Products compose right-to-left: (a * b)(i) = a(b(i)).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Perm(pub Vec<u8>);

impl std::fmt::Debug for Perm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

impl Perm {
    pub fn identity(d: usize) -> Perm {
        Perm((0..=d as u8).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i] as usize
    }

    pub fn mul(&self, other: &Perm) -> Perm {
        Perm(other.0.iter().map(|&i| self.0[i as usize]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut v = vec![0u8; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            v[j as usize] = i as u8;
        }
        Perm(v)
    }

    /// Coxeter generator s_j = (j-1, j) for 1 <= j <= d.
    pub fn s(d: usize, j: usize) -> Perm {
        assert!((1..=d).contains(&j));
        let mut v: Vec<u8> = (0..=d as u8).collect();
        v.swap(j - 1, j);
        Perm(v)
    }

    /// ubar = s_d ... s_1: sends j to j-1 for j >= 1 and 0 to d.
    pub fn ubar(d: usize) -> Perm {
        let mut w = Perm::identity(d);
        for j in 1..=d {
            w = Perm::s(d, j).mul(&w);
        }
        w
    }

    pub fn length(&self) -> usize {
        // inversion count
        let d = self.degree();
        let mut n = 0;
        for i in 0..=d {
            for j in i + 1..=d {
                if self.0[i] > self.0[j] {
                    n += 1;
                }
            }
        }
        n
    }

    /// w is in W^{s_d} iff l(w s_d) > l(w) iff w(d-1) < w(d).
    pub fn in_w_sd(&self) -> bool {
        let d = self.degree();
        self.0[d - 1] < self.0[d]
    }
}

pub fn all_perms(d: usize) -> Vec<Perm> {
    let mut out = vec![Perm(vec![0])];
    for n in 1..=d {
        let mut next = Vec::with_capacity(out.len() * (n + 1));
        for w in &out {
            for pos in 0..=n {
                // insert symbol n at position pos among the images
                let mut v: Vec<u8> = Vec::with_capacity(n + 1);
                v.extend(w.0.iter().take(pos));
                v.push(n as u8);
                v.extend(w.0.iter().skip(pos));
                next.push(Perm(v));
            }
        }
        out = next;
    }
    out.sort();
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WeylError {
    #[error("sigma map must be defined on exactly W^(s_d)")]
    BadSigmaDomain,
    #[error("rank must be at least 2 for the closed-form filtration")]
    RankTooSmall,
    #[error("successor map left the complement of the previous level")]
    ClosureViolated,
}

/// A total map W^{s_d} -> {-1, 0, 1}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaMap {
    pub d: usize,
    pub vals: BTreeMap<Perm, i8>,
}

impl SigmaMap {
    pub fn new(d: usize, vals: BTreeMap<Perm, i8>) -> Result<SigmaMap, WeylError> {
        let domain: BTreeSet<Perm> =
            all_perms(d).into_iter().filter(|w| w.in_w_sd()).collect();
        let keys: BTreeSet<Perm> = vals.keys().cloned().collect();
        if keys != domain || vals.values().any(|v| !(-1..=1).contains(v)) {
            return Err(WeylError::BadSigmaDomain);
        }
        Ok(SigmaMap { d, vals })
    }

    pub fn constant(d: usize, v: i8) -> SigmaMap {
        let vals = all_perms(d)
            .into_iter()
            .filter(|w| w.in_w_sd())
            .map(|w| (w, v))
            .collect();
        SigmaMap { d, vals }
    }

    /// "sigma(w) = i" in the sense that w lies in W^{s_d} and has value i.
    pub fn is(&self, w: &Perm, i: i8) -> bool {
        self.vals.get(w) == Some(&i)
    }

    /// All 3^|W^{s_d}| sign assignments. Only sensible for small d.
    pub fn enumerate(d: usize) -> Vec<SigmaMap> {
        let domain: Vec<Perm> = all_perms(d).into_iter().filter(|w| w.in_w_sd()).collect();
        let n = domain.len();
        let mut out = Vec::new();
        let mut idx = vec![0usize; n];
        loop {
            let vals: BTreeMap<Perm, i8> = domain
                .iter()
                .cloned()
                .zip(idx.iter().map(|&i| i as i8 - 1))
                .collect();
            out.push(SigmaMap { d, vals });
            let mut k = 0;
            loop {
                if k == n {
                    return out;
                }
                idx[k] += 1;
                if idx[k] < 3 {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

/// The successor map w -> w_+^{W'}. Exactly one of w*ubar^{-1} and
/// w*ubar^{-1}*s_d lies in W^{s_d}; the five-case table below reads the sign
/// there and the membership of w*ubar^{-1}*s_d*ubar in W'.
pub fn plus_map(w: &Perm, wprime: &BTreeSet<Perm>, sigma: &SigmaMap) -> Perm {
    let d = w.degree();
    let ubar_inv = Perm::ubar(d).inverse();
    let sd = Perm::s(d, d);
    let a = w.mul(&ubar_inv); // w ubar^{-1}
    let b = a.mul(&sd); // w ubar^{-1} s_d
    let c = b.mul(&Perm::ubar(d)); // w ubar^{-1} s_d ubar
    if sigma.is(&a, 0) || sigma.is(&b, 0) {
        return a;
    }
    let down = sigma.is(&a, -1) || sigma.is(&b, 1);
    let up = sigma.is(&a, 1) || sigma.is(&b, -1);
    debug_assert!(down ^ up);
    let in_prev = wprime.contains(&c);
    if (down && !in_prev) || (up && in_prev) {
        a
    } else {
        b
    }
}

/// One level of an admissible filtration: the new elements decomposed into
/// successor-map cycles, each rotated to start at its least element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub orbits: Vec<Vec<Perm>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Filtration {
    pub d: usize,
    pub levels: Vec<Level>,
}

impl Filtration {
    /// Union of all levels up to and including `i` (1-based; 0 is empty).
    pub fn subset(&self, i: usize) -> BTreeSet<Perm> {
        self.levels[..i]
            .iter()
            .flat_map(|l| l.orbits.iter().flatten().cloned())
            .collect()
    }

    pub fn total_size(&self) -> usize {
        self.levels.iter().map(|l| l.orbits.iter().map(|o| o.len()).sum::<usize>()).sum()
    }
}

fn rotate_to_least(mut cycle: Vec<Perm>) -> Vec<Perm> {
    let least = cycle.iter().enumerate().min_by_key(|(_, w)| (*w).clone()).unwrap().0;
    cycle.rotate_left(least);
    cycle
}

/// Constructive filtration: at each step take the union of all cycles of the
/// successor map on the complement; this is the maximal subset on which the
/// map restricts to a bijection.
pub fn admissible_filtration(sigma: &SigmaMap) -> Result<Filtration, WeylError> {
    let d = sigma.d;
    let all: BTreeSet<Perm> = all_perms(d).into_iter().collect();
    let mut prev: BTreeSet<Perm> = BTreeSet::new();
    let mut levels = Vec::new();
    while prev.len() < all.len() {
        let complement: Vec<Perm> = all.difference(&prev).cloned().collect();
        let mut succ: BTreeMap<Perm, Perm> = BTreeMap::new();
        for w in &complement {
            let img = plus_map(w, &prev, sigma);
            if prev.contains(&img) {
                return Err(WeylError::ClosureViolated);
            }
            succ.insert(w.clone(), img);
        }
        // elements lying on cycles of the self-map
        let mut on_cycle: BTreeSet<Perm> = BTreeSet::new();
        for start in &complement {
            if on_cycle.contains(start) {
                continue;
            }
            // walk until repetition
            let mut seen: Vec<Perm> = Vec::new();
            let mut cur = start.clone();
            let pos = loop {
                if let Some(pos) = seen.iter().position(|x| *x == cur) {
                    break pos;
                }
                seen.push(cur.clone());
                cur = succ[&cur].clone();
            };
            for w in &seen[pos..] {
                on_cycle.insert(w.clone());
            }
        }
        assert!(!on_cycle.is_empty(), "finite self-maps always have cycles");
        // decompose into cycles
        let mut orbits = Vec::new();
        let mut used: BTreeSet<Perm> = BTreeSet::new();
        let mut starts: Vec<Perm> = on_cycle.iter().cloned().collect();
        starts.sort();
        for s in starts {
            if used.contains(&s) {
                continue;
            }
            let mut cyc = vec![s.clone()];
            used.insert(s.clone());
            let mut cur = succ[&s].clone();
            while cur != s {
                used.insert(cur.clone());
                cyc.push(cur.clone());
                cur = succ[&cur].clone();
            }
            orbits.push(rotate_to_least(cyc));
        }
        orbits.sort_by_key(|o| o[0].clone());
        prev.extend(on_cycle);
        levels.push(Level { orbits });
    }
    Ok(Filtration { d, levels })
}

/// Check the defining property of an admissible filtration directly.
pub fn verify_admissible(sigma: &SigmaMap, filt: &Filtration) -> bool {
    let d = sigma.d;
    let all: BTreeSet<Perm> = all_perms(d).into_iter().collect();
    if filt.subset(filt.levels.len()) != all {
        return false;
    }
    for i in 1..=filt.levels.len() {
        let prev = filt.subset(i - 1);
        let cur = filt.subset(i);
        let new: BTreeSet<Perm> = cur.difference(&prev).cloned().collect();
        if new.is_empty() {
            return false;
        }
        let complement: BTreeSet<Perm> = all.difference(&prev).cloned().collect();
        let mut seen_in_new: BTreeSet<Perm> = BTreeSet::new();
        for w in &complement {
            let img = plus_map(w, &prev, sigma);
            if !complement.contains(&img) {
                return false;
            }
            if new.contains(w) {
                if !new.contains(&img) {
                    return false;
                }
                seen_in_new.insert(img);
            }
        }
        // bijectivity on the new part
        if seen_in_new.len() != new.len() {
            return false;
        }
    }
    true
}

/// The closed-form filtration for the constant sign +1: levels
/// W_i = union_{j <= i} s_j..s_d <s_1..s_{d-1}>, with orbits
/// {s_i..s_d v (ubar^{-1} s_d)^j : 0 <= j < d} indexed by coset
/// representatives v in <s_1..s_{d-2}>.
pub fn sigma_one_filtration(d: usize) -> Result<Filtration, WeylError> {
    if d < 2 {
        return Err(WeylError::RankTooSmall);
    }
    let ubar_inv_sd = Perm::ubar(d).inverse().mul(&Perm::s(d, d));
    // R = <s_1, .., s_{d-2}>: permutations fixing d-1 and d
    let reps: Vec<Perm> = all_perms(d)
        .into_iter()
        .filter(|w| w.apply(d - 1) == d - 1 && w.apply(d) == d)
        .collect();
    let mut levels = Vec::new();
    for i in 1..=d + 1 {
        let mut orbits = Vec::new();
        for v in &reps {
            // s_i ... s_d (empty product when i = d+1), rightmost applied first
            let mut prefix = Perm::identity(d);
            for j in i..=d {
                prefix = prefix.mul(&Perm::s(d, j));
            }
            let base = prefix.mul(v);
            let mut orbit = Vec::with_capacity(d);
            let mut cur = base.clone();
            for _ in 0..d {
                orbit.push(cur.clone());
                cur = cur.mul(&ubar_inv_sd);
            }
            assert_eq!(cur, base, "orbit should close up after d steps");
            orbits.push(rotate_to_least(orbit));
        }
        orbits.sort_by_key(|o| o[0].clone());
        levels.push(Level { orbits });
    }
    Ok(Filtration { d, levels })
}

/// Compare two filtrations levelwise as partitions into cyclically ordered
/// orbits (rotations allowed; our canonical rotation makes this equality).
pub fn same_filtration(a: &Filtration, b: &Filtration) -> bool {
    if a.levels.len() != b.levels.len() {
        return false;
    }
    a.levels.iter().zip(&b.levels).all(|(x, y)| {
        let mut xo = x.orbits.clone();
        let mut yo = y.orbits.clone();
        xo.sort();
        yo.sort();
        xo == yo
    })
}
