//! Validation of the filtration subquotient parameters against the
//! half-tree homology, for the two residue characteristics where the
//! reduced standard modules stay desk-sized. Both the case table producing
//! (n, rho) and the gamma characters are checked inside the complex, modulo
//! the submodule generated by the earlier filtration levels.

use phigamma::field::{Elt, FiniteField};
use phigamma::halftree::crosscheck_filtration;
use phigamma::hecke::{Case, Realization, ReducedStandard, TorusChar};
use phigamma::weyl::{admissible_filtration, all_perms, sigma_one_filtration, Perm, SigmaMap};
use std::collections::BTreeMap;

fn run(p: u64, theta: Vec<u64>, sigma: SigmaMap, eps_variant: bool, depth: usize) {
    let f = FiniteField::new(p, 1).unwrap();
    let d = 2usize;
    let real = Realization::new(p, d, Case::A);
    let eps: BTreeMap<Perm, Elt> = all_perms(d)
        .into_iter()
        .enumerate()
        .map(|(i, w)| {
            let v = if eps_variant { 1 + (i as u16 % (f.q as u16 - 1)) } else { 1 };
            (w, Elt(v))
        })
        .collect();
    let module = ReducedStandard::new(&f, &real, TorusChar::new(p, theta), sigma.clone(), eps)
        .unwrap();
    let filt = if sigma == SigmaMap::constant(d, 1) {
        sigma_one_filtration(d).unwrap()
    } else {
        admissible_filtration(&sigma).unwrap()
    };
    let report = crosscheck_filtration(&f, &real, &module, &filt, depth).unwrap();
    assert!(
        report.all_pass(),
        "p={p}: {:#?}",
        report.failures().collect::<Vec<_>>()
    );
}

#[test]
fn sigma_one_p3() {
    run(3, vec![0, 1, 0], SigmaMap::constant(2, 1), true, 5);
}

#[test]
fn sigma_one_p5() {
    run(5, vec![0, 1, 3], SigmaMap::constant(2, 1), true, 4);
}

#[test]
fn sigma_zero_p3() {
    run(3, vec![0, 1, 1], SigmaMap::constant(2, 0), false, 5);
}

#[test]
fn sigma_zero_p5() {
    run(5, vec![0, 2, 3], SigmaMap::constant(2, 0), true, 4);
}

/// A mixed sign map with a two-step filtration (cycle sizes 2 then 4).
#[test]
fn mixed_sigma_p5() {
    let s1 = Perm::s(2, 1);
    let s2 = Perm::s(2, 2);
    let mut vals = BTreeMap::new();
    vals.insert(Perm::identity(2), 0);
    vals.insert(s1.clone(), 1);
    vals.insert(s2.mul(&s1), 1);
    let sigma = SigmaMap::new(2, vals).unwrap();
    run(5, vec![0, 1, 3], sigma, true, 4);
}
