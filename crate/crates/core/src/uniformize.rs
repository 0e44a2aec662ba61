//! Lifting a rational LP solution to one-wise uniform distributions over a
//! larger alphabet, and packaging the result as a gadget for DIHP.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::csp::{decode, encode, Instance, Predicate};
use crate::error::{Error, Result};
use crate::lp::{check_feasible, lp_value, LocalDistribution, LpSolution};
use crate::rational::{self, Rational};

pub const DEFAULT_COPIES: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marginals {
    pub per_var: Vec<Vec<Rational>>,
    /// Variables in no constraint; their marginal defaults to uniform.
    pub unconstrained: Vec<usize>,
}

pub fn compute_marginals(inst: &Instance, sol: &LpSolution) -> Result<Marginals> {
    let rep = check_feasible(inst, sol)?;
    if !rep.feasible {
        return Err(Error::invalid(format!(
            "marginals of an infeasible solution: {}",
            rep.violation.unwrap_or_default()
        )));
    }
    let mut per_var: Vec<Option<Vec<Rational>>> = vec![None; inst.num_vars];
    for (i, c) in inst.constraints.iter().enumerate() {
        let local = sol.local_for(inst, i).expect("checked by feasibility");
        for (l, &v) in c.vars.iter().enumerate() {
            if per_var[v].is_none() {
                per_var[v] = Some(local.marginal(l));
            }
        }
    }
    let uniform = vec![rational::ratio(1, inst.q0 as i64); inst.q0];
    let unconstrained = (0..inst.num_vars).filter(|&v| per_var[v].is_none()).collect();
    Ok(Marginals {
        per_var: per_var.into_iter().map(|m| m.unwrap_or_else(|| uniform.clone())).collect(),
        unconstrained,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphabetLift {
    pub q: usize,
    pub q0: usize,
    /// `blocks[v][a]` is the half-open symbol range `S_a^{(v)}`.
    pub blocks: Vec<Vec<(usize, usize)>>,
    /// `kappa[v][b]` is the original symbol of lifted symbol `b`.
    pub kappa: Vec<Vec<usize>>,
    #[serde(with = "marginals_serde")]
    pub marginals: Vec<Vec<Rational>>,
}

mod marginals_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<Rational>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<Vec<String>> =
            v.iter().map(|row| row.iter().map(rational::format).collect()).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Vec<Rational>>, D::Error> {
        let raw = Vec::<Vec<String>>::deserialize(d)?;
        raw.iter()
            .map(|row| {
                row.iter()
                    .map(|s| rational::parse(s).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

impl AlphabetLift {
    pub fn block_size(&self, v: usize, a: usize) -> usize {
        let (lo, hi) = self.blocks[v][a];
        hi - lo
    }
}

/// `q` is the lcm of all marginal denominators, raised to 2 if every
/// marginal is a point mass. Blocks are contiguous, lowest symbol first.
pub fn build_lift(marginals: &[Vec<Rational>]) -> Result<AlphabetLift> {
    let q0 = marginals.first().map_or(0, |m| m.len());
    if q0 < 2 || marginals.iter().any(|m| m.len() != q0) {
        return Err(Error::invalid("marginals must share an alphabet of size >= 2"));
    }
    let mut l = BigInt::from(1);
    for m in marginals {
        for p in m {
            l = l.lcm(p.denom());
        }
    }
    let q = l
        .to_usize()
        .ok_or_else(|| Error::limit("lifted alphabet", u128::MAX, usize::MAX as u128))?
        .max(2);
    let qr = BigRational::from_integer(BigInt::from(q));
    let mut blocks = Vec::with_capacity(marginals.len());
    let mut kappa = Vec::with_capacity(marginals.len());
    for m in marginals {
        let mut start = 0usize;
        let mut vb = Vec::with_capacity(q0);
        let mut vk = vec![0usize; q];
        for (a, p) in m.iter().enumerate() {
            let size = (p * &qr).to_integer().to_usize().expect("block fits");
            for s in vk.iter_mut().skip(start).take(size) {
                *s = a;
            }
            vb.push((start, start + size));
            start += size;
        }
        if start != q {
            return Err(Error::invalid("marginal does not sum to 1"));
        }
        blocks.push(vb);
        kappa.push(vk);
    }
    Ok(AlphabetLift { q, q0, blocks, kappa, marginals: marginals.to_vec() })
}

/// `Y(b) = Y0(κ(b)) / Π_l |S_{κ(b_l)}|`.
pub fn lift_distribution(
    y0: &LocalDistribution,
    lift: &AlphabetLift,
    vars: &[usize],
) -> Result<LocalDistribution> {
    if y0.q != lift.q0 || vars.len() != y0.k {
        return Err(Error::invalid("local distribution does not match the lift"));
    }
    for (l, &v) in vars.iter().enumerate() {
        if y0.marginal(l) != lift.marginals[v] {
            return Err(Error::invalid(format!(
                "slot {l} (variable {v}) has a marginal different from the lift"
            )));
        }
    }
    let k = y0.k;
    let q = lift.q;
    let len = q.pow(k as u32);
    let mut probs = vec![Rational::zero(); len];
    for (i, p) in probs.iter_mut().enumerate() {
        let b = decode(i, q, k);
        let a: Vec<usize> = b.iter().zip(vars).map(|(&s, &v)| lift.kappa[v][s]).collect();
        let mass = &y0.probs[encode(&a, lift.q0)];
        if mass.is_zero() {
            continue;
        }
        let denom: usize = a.iter().zip(vars).map(|(&s, &v)| lift.block_size(v, s)).product();
        *p = mass / BigRational::from_integer(BigInt::from(denom));
    }
    Ok(LocalDistribution { q, k, probs })
}

/// Push a lifted distribution back through κ.
pub fn pushforward(y: &LocalDistribution, lift: &AlphabetLift, vars: &[usize]) -> LocalDistribution {
    let len = lift.q0.pow(y.k as u32);
    let mut probs = vec![Rational::zero(); len];
    for (i, p) in y.probs.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let b = decode(i, y.q, y.k);
        let a: Vec<usize> = b.iter().zip(vars).map(|(&s, &v)| lift.kappa[v][s]).collect();
        probs[encode(&a, lift.q0)] += p;
    }
    LocalDistribution { q: lift.q0, k: y.k, probs }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetEdge {
    pub phi: Vec<usize>,
    pub dist: LocalDistribution,
    pub predicate: Predicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetSpec {
    pub q: usize,
    pub q0: usize,
    pub k: usize,
    pub k_prime: usize,
    pub copies: usize,
    pub edges: Vec<GadgetEdge>,
    pub lift: AlphabetLift,
    #[serde(with = "rational::serde_str")]
    pub gamma: Rational,
    /// The LP value is 1. Determinism of the YES value is not certified.
    pub perfect: bool,
}

impl GadgetSpec {
    pub fn t(&self) -> usize {
        self.edges.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (t, e) in self.edges.iter().enumerate() {
            if e.phi.len() != self.k || e.phi.iter().any(|&v| v >= self.k_prime) {
                return Err(Error::invalid(format!("edge {t}: phi out of range")));
            }
            for (i, v) in e.phi.iter().enumerate() {
                if e.phi[..i].contains(v) {
                    return Err(Error::invalid(format!("edge {t}: phi is not injective")));
                }
            }
            e.dist.validate()?;
            if e.dist.q != self.q || e.dist.k != self.k {
                return Err(Error::invalid(format!("edge {t}: distribution shape")));
            }
            if !e.dist.is_one_wise_uniform() {
                return Err(Error::invalid(format!("edge {t}: not one-wise uniform")));
            }
            if e.predicate.k != self.k || e.predicate.q0 != self.q0 {
                return Err(Error::invalid(format!("edge {t}: predicate shape")));
            }
        }
        Ok(())
    }

    /// The planted `[q0]`-assignment `κ(X*)` of a flattened hidden matrix.
    pub fn planted(&self, hidden: &[Vec<usize>]) -> Vec<usize> {
        hidden
            .iter()
            .flat_map(|row| row.iter().enumerate().map(|(v, &s)| self.lift.kappa[v][s]))
            .collect()
    }
}

/// Edge `t = c·K + copy` carries constraint `c`.
pub fn build_gadget_spec(inst: &Instance, sol: &LpSolution, copies: usize) -> Result<GadgetSpec> {
    if copies == 0 {
        return Err(Error::invalid("copy count must be positive"));
    }
    let k = inst
        .constraints
        .first()
        .ok_or_else(|| Error::invalid("gadget from an empty instance"))?
        .predicate
        .k;
    if inst.constraints.iter().any(|c| c.predicate.k != k) {
        return Err(Error::invalid("gadget constraints must share an arity"));
    }
    let gamma = lp_value(inst, sol)?;
    let marginals = compute_marginals(inst, sol)?;
    let lift = build_lift(&marginals.per_var)?;
    let mut edges = Vec::with_capacity(inst.len() * copies);
    for (i, c) in inst.constraints.iter().enumerate() {
        let y0 = sol.local_for(inst, i).expect("feasible");
        let dist = lift_distribution(y0, &lift, &c.vars)?;
        for _ in 0..copies {
            edges.push(GadgetEdge {
                phi: c.vars.clone(),
                dist: dist.clone(),
                predicate: c.predicate.clone(),
            });
        }
    }
    let perfect = gamma == rational::int(1);
    Ok(GadgetSpec {
        q: lift.q,
        q0: inst.q0,
        k,
        k_prime: inst.num_vars,
        copies,
        edges,
        lift,
        gamma,
        perfect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{cut, dicut};
    use crate::lp::solve_basic_lp;
    use crate::rational::ratio;
    use std::collections::BTreeMap;

    fn triangle() -> Instance {
        Instance::uniform(&cut(), 3, &[vec![0, 1], vec![1, 2], vec![2, 0]]).unwrap()
    }

    fn single(local: LocalDistribution, pred: Predicate) -> (Instance, LpSolution) {
        let inst = Instance::uniform(&pred, 2, &[vec![0, 1]]).unwrap();
        let objective = local.expectation(&pred);
        let sol = LpSolution { locals: BTreeMap::from([(0, local)]), objective };
        (inst, sol)
    }

    #[test]
    fn marginals() {
        let inst = triangle();
        let sol = solve_basic_lp(&inst).unwrap();
        let m = compute_marginals(&inst, &sol).unwrap();
        assert!(m.per_var.iter().all(|x| *x == vec![ratio(1, 2), ratio(1, 2)]));
        assert!(m.unconstrained.is_empty());

        let (inst, sol) = single(LocalDistribution::point_mass(2, 2, &[1, 0]), dicut());
        let m = compute_marginals(&inst, &sol).unwrap();
        assert_eq!(m.per_var[0], vec![ratio(0, 1), ratio(1, 1)]);
        assert_eq!(m.per_var[1], vec![ratio(1, 1), ratio(0, 1)]);

        let third = LocalDistribution::uniform_on(2, 2, &[vec![0, 1], vec![1, 0], vec![1, 1]]).unwrap();
        let (inst, sol) = single(third, cut());
        let m = compute_marginals(&inst, &sol).unwrap();
        assert_eq!(m.per_var[0], vec![ratio(1, 3), ratio(2, 3)]);

        let padded = Instance::uniform(&cut(), 3, &[vec![0, 1]]).unwrap();
        let sol = solve_basic_lp(&padded).unwrap();
        assert_eq!(compute_marginals(&padded, &sol).unwrap().unconstrained, vec![2]);
    }

    #[test]
    fn lifts() {
        let half = vec![ratio(1, 2), ratio(1, 2)];
        let l = build_lift(&[half.clone(), half]).unwrap();
        assert_eq!(l.q, 2);
        assert_eq!(l.blocks[0], vec![(0, 1), (1, 2)]);

        let l = build_lift(&[vec![ratio(1, 3), ratio(2, 3)]]).unwrap();
        assert_eq!(l.q, 3);
        assert_eq!(l.blocks[0], vec![(0, 1), (1, 3)]);
        assert_eq!(l.kappa[0], vec![0, 1, 1]);

        let l = build_lift(&[vec![ratio(0, 1), ratio(1, 1)]]).unwrap();
        assert_eq!(l.q, 2);
        assert_eq!(l.blocks[0], vec![(0, 0), (0, 2)]);

        let l = build_lift(&[vec![ratio(0, 1), ratio(1, 1)], vec![ratio(1, 4), ratio(3, 4)]]).unwrap();
        assert_eq!(l.q, 4);
        assert_eq!(l.kappa[0], vec![1, 1, 1, 1]);
        assert_eq!(l.kappa[1], vec![0, 1, 1, 1]);
    }

    #[test]
    fn lifted_distributions() {
        let y0 = LocalDistribution::uniform_on(2, 2, &[vec![0, 1], vec![1, 0]]).unwrap();
        let half = vec![ratio(1, 2), ratio(1, 2)];
        let l = build_lift(&[half.clone(), half]).unwrap();
        assert_eq!(lift_distribution(&y0, &l, &[0, 1]).unwrap(), y0);

        let third = LocalDistribution::uniform_on(2, 2, &[vec![0, 1], vec![1, 0], vec![1, 1]]).unwrap();
        let m = vec![ratio(1, 3), ratio(2, 3)];
        let l = build_lift(&[m.clone(), m]).unwrap();
        let y = lift_distribution(&third, &l, &[0, 1]).unwrap();
        assert!(y.is_one_wise_uniform());
        // (0,1) has a 1x2 preimage, (1,0) a 2x1, (1,1) a 2x2.
        assert_eq!(y.probs[encode(&[0, 1], 3)], ratio(1, 6));
        assert_eq!(y.probs[encode(&[2, 0], 3)], ratio(1, 6));
        assert_eq!(y.probs[encode(&[1, 2], 3)], ratio(1, 12));
        assert_eq!(y.probs[encode(&[0, 0], 3)], ratio(0, 1));
        assert_eq!(pushforward(&y, &l, &[0, 1]), third);

        let wrong = LocalDistribution::uniform(2, 2);
        assert!(lift_distribution(&wrong, &l, &[0, 1]).is_err());
    }

    #[test]
    fn gadget_specs() {
        let inst = triangle();
        let sol = solve_basic_lp(&inst).unwrap();
        let g = build_gadget_spec(&inst, &sol, 2).unwrap();
        assert_eq!((g.t(), g.k_prime, g.q), (6, 3, 2));
        assert_eq!(g.edges[2].phi, vec![1, 2]);
        assert!(g.perfect);
        g.validate().unwrap();

        let edge = Instance::uniform(&cut(), 2, &[vec![0, 1]]).unwrap();
        let g = build_gadget_spec(&edge, &solve_basic_lp(&edge).unwrap(), 1).unwrap();
        assert_eq!(g.t(), 1);
        assert_eq!(g.edges[0].phi, vec![0, 1]);

        let back: GadgetSpec = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn dicut_gadget_is_one_wise_uniform_and_pushes_forward() {
        // Directed path 0->1->2 plus a back edge 2->0.
        let inst = Instance::uniform(&dicut(), 3, &[vec![0, 1], vec![1, 2], vec![2, 0]]).unwrap();
        let sol = solve_basic_lp(&inst).unwrap();
        let g = build_gadget_spec(&inst, &sol, 3).unwrap();
        g.validate().unwrap();
        for (t, e) in g.edges.iter().enumerate() {
            let y0 = sol.local_for(&inst, t / 3).unwrap();
            assert_eq!(&pushforward(&e.dist, &g.lift, &e.phi), y0);
        }
    }
}
