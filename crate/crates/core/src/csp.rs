//! Predicates, instances and exact values for Max-CSP.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

pub const DEFAULT_ENUM_CAP: u128 = 1 << 24;

/// Truth table over `[q0]^k`, row-major with the first coordinate most significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "PredicateJson", try_from = "PredicateJson")]
pub struct Predicate {
    pub name: String,
    pub k: usize,
    pub q0: usize,
    pub table: Vec<bool>,
}

impl Predicate {
    pub fn new(name: impl Into<String>, k: usize, q0: usize, table: Vec<bool>) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("predicate arity must be positive"));
        }
        if q0 < 2 {
            return Err(Error::invalid("predicate alphabet must be at least 2"));
        }
        let len = checked_pow(q0, k)?;
        if table.len() != len {
            return Err(Error::invalid(format!(
                "predicate table has length {}, expected {q0}^{k} = {len}",
                table.len()
            )));
        }
        Ok(Predicate { name: name.into(), k, q0, table })
    }

    pub fn from_fn(
        name: impl Into<String>,
        k: usize,
        q0: usize,
        f: impl Fn(&[usize]) -> bool,
    ) -> Result<Self> {
        let len = checked_pow(q0, k)?;
        let table = (0..len).map(|i| f(&decode(i, q0, k))).collect();
        Predicate::new(name, k, q0, table)
    }

    pub fn size(&self) -> usize {
        self.table.len()
    }

    pub fn eval(&self, a: &[usize]) -> bool {
        self.table[encode(a, self.q0)]
    }

    pub fn eval_index(&self, idx: usize) -> bool {
        self.table[idx]
    }

    /// `0`/`1` characters, one per table entry.
    pub fn table_string(&self) -> String {
        self.table.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_table_string(name: impl Into<String>, k: usize, q0: usize, s: &str) -> Result<Self> {
        let table = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::invalid(format!("bad table character `{c}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Predicate::new(name, k, q0, table)
    }

    /// Resolve a zoo name such as `cut`, `dicut`, `and01`, `xor3-1` or `exactly-2-of-3`.
    pub fn by_name(name: &str) -> Option<Predicate> {
        match name {
            "cut" => return Some(cut()),
            "dicut" => return Some(dicut()),
            _ => {}
        }
        if let Some(bits) = name.strip_prefix("and") {
            let b: Vec<char> = bits.chars().collect();
            if b.len() == 2 && b.iter().all(|c| *c == '0' || *c == '1') {
                return Some(two_and(b[0] == '1', b[1] == '1'));
            }
        }
        if let Some(rest) = name.strip_prefix("xor") {
            let (k, b) = rest.split_once('-')?;
            let k: usize = k.parse().ok()?;
            let b: u8 = b.parse().ok()?;
            if k == 0 || b > 1 || k > 20 {
                return None;
            }
            return Some(kxor(k, b == 1));
        }
        if let Some(rest) = name.strip_prefix("exactly-") {
            let (l, k) = rest.split_once("-of-")?;
            let (l, k): (usize, usize) = (l.parse().ok()?, k.parse().ok()?);
            if k == 0 || l > k || k > 20 {
                return None;
            }
            return Some(exactly(l, k));
        }
        None
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredicateJson {
    name: String,
    k: usize,
    q0: usize,
    table: String,
}

impl From<Predicate> for PredicateJson {
    fn from(p: Predicate) -> Self {
        PredicateJson { table: p.table_string(), name: p.name, k: p.k, q0: p.q0 }
    }
}

impl TryFrom<PredicateJson> for Predicate {
    type Error = Error;

    fn try_from(p: PredicateJson) -> Result<Self> {
        Predicate::from_table_string(p.name, p.k, p.q0, &p.table)
    }
}

fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    base.checked_pow(exp as u32)
        .ok_or_else(|| Error::limit("table size", u128::MAX, usize::MAX as u128))
}

/// Row-major index of a tuple over `[q]`.
pub fn encode(a: &[usize], q: usize) -> usize {
    a.iter().fold(0, |acc, &x| acc * q + x)
}

pub fn decode(mut idx: usize, q: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = idx % q;
        idx /= q;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateFamily {
    pub name: String,
    pub members: Vec<Predicate>,
}

impl PredicateFamily {
    pub fn new(name: impl Into<String>, members: Vec<Predicate>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::invalid("predicate family must be nonempty"))?;
        if members.iter().any(|p| p.k != first.k || p.q0 != first.q0) {
            return Err(Error::invalid("family members must share arity and alphabet"));
        }
        Ok(PredicateFamily { name: name.into(), members })
    }

    pub fn k(&self) -> usize {
        self.members[0].k
    }

    pub fn q0(&self) -> usize {
        self.members[0].q0
    }

    pub fn width(&self) -> Rational {
        self.members.iter().map(width).min().expect("nonempty family")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub predicate: Predicate,
    pub vars: Vec<usize>,
}

impl Constraint {
    pub fn new(predicate: Predicate, vars: Vec<usize>) -> Result<Self> {
        if vars.len() != predicate.k {
            return Err(Error::invalid(format!(
                "constraint has {} variables but predicate `{}` has arity {}",
                vars.len(),
                predicate.name,
                predicate.k
            )));
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(Error::invalid(format!("variable {v} repeated in constraint")));
            }
        }
        Ok(Constraint { predicate, vars })
    }

    pub fn satisfied_by(&self, x: &[usize]) -> bool {
        let idx = self.vars.iter().fold(0, |acc, &v| acc * self.predicate.q0 + x[v]);
        self.predicate.table[idx]
    }
}

/// A multiset of constraints. Empty instances are representable (a DIHP
/// sample may emit no constraint) but have no value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub q0: usize,
    pub num_vars: usize,
    pub constraints: Vec<Constraint>,
}

pub type Assignment = Vec<usize>;

impl Instance {
    pub fn new(q0: usize, num_vars: usize, constraints: Vec<Constraint>) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::invalid("instance needs at least one variable"));
        }
        for c in &constraints {
            if c.predicate.q0 != q0 {
                return Err(Error::invalid(format!(
                    "predicate `{}` has alphabet {}, instance has {q0}",
                    c.predicate.name, c.predicate.q0
                )));
            }
            if let Some(v) = c.vars.iter().find(|&&v| v >= num_vars) {
                return Err(Error::invalid(format!("variable {v} out of range 0..{num_vars}")));
            }
        }
        Ok(Instance { q0, num_vars, constraints })
    }

    /// Convenience constructor for a single predicate applied to many tuples.
    pub fn uniform(pred: &Predicate, num_vars: usize, tuples: &[Vec<usize>]) -> Result<Self> {
        let cs = tuples
            .iter()
            .map(|t| Constraint::new(pred.clone(), t.clone()))
            .collect::<Result<Vec<_>>>()?;
        Instance::new(pred.q0, num_vars, cs)
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    fn check_assignment(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.num_vars {
            return Err(Error::invalid(format!(
                "assignment has length {}, instance has {} variables",
                x.len(),
                self.num_vars
            )));
        }
        if let Some(v) = x.iter().find(|&&v| v >= self.q0) {
            return Err(Error::invalid(format!("assignment value {v} outside [0,{})", self.q0)));
        }
        Ok(())
    }

    pub fn satisfied_count(&self, x: &[usize]) -> usize {
        self.constraints.iter().filter(|c| c.satisfied_by(x)).count()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(InstanceJson::from(self)).expect("instance serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let raw: InstanceJson = serde_json::from_value(v.clone())?;
        raw.try_into()
    }
}

/// Fraction of satisfied constraints.
pub fn value(inst: &Instance, x: &[usize]) -> Result<Rational> {
    inst.check_assignment(x)?;
    if inst.is_empty() {
        return Err(Error::invalid("value of an empty instance is undefined"));
    }
    Ok(BigRational::new(
        BigInt::from(inst.satisfied_count(x)),
        BigInt::from(inst.len()),
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteForceResult {
    pub opt: Rational,
    pub argmax: Assignment,
}

/// Exhaustive maximum of `value` over all `q0^num_vars` assignments.
pub fn opt_brute(inst: &Instance, cap: u128) -> Result<BruteForceResult> {
    if inst.is_empty() {
        return Err(Error::invalid("optimum of an empty instance is undefined"));
    }
    let total = (inst.q0 as u128)
        .checked_pow(inst.num_vars as u32)
        .unwrap_or(u128::MAX);
    if total > cap {
        return Err(Error::limit("assignment enumeration", total, cap));
    }
    let mut x = vec![0usize; inst.num_vars];
    let mut best = inst.satisfied_count(&x);
    let mut argmax = x.clone();
    let full = inst.len();
    'outer: loop {
        if best == full {
            break;
        }
        let mut i = inst.num_vars;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            x[i] += 1;
            if x[i] < inst.q0 {
                break;
            }
            x[i] = 0;
        }
        let c = inst.satisfied_count(&x);
        if c > best {
            best = c;
            argmax.clone_from(&x);
        }
    }
    Ok(BruteForceResult {
        opt: BigRational::new(BigInt::from(best), BigInt::from(full)),
        argmax,
    })
}

/// `max_y (1/q0)·#{b : f(y + b·1) = 1}`.
pub fn width(f: &Predicate) -> Rational {
    let mut best = 0usize;
    for y in 0..f.size() {
        let y = decode(y, f.q0, f.k);
        let hits = (0..f.q0)
            .filter(|b| {
                let shifted: Vec<usize> = y.iter().map(|&v| (v + b) % f.q0).collect();
                f.eval(&shifted)
            })
            .count();
        best = best.max(hits);
    }
    BigRational::new(BigInt::from(best), BigInt::from(f.q0))
}

/// `C(k,l)·(l/k)^l·((k-l)/k)^(k-l)` with `0^0 = 1`.
pub fn rho_exactly(l: usize, k: usize) -> Result<Rational> {
    if k == 0 || l > k {
        return Err(Error::invalid(format!("need 0 <= l <= k with k >= 1, got l={l}, k={k}")));
    }
    let p = rational::ratio(l as i64, k as i64);
    let one_minus = Rational::one() - &p;
    let c = BigRational::from_integer(rational::binomial(k as u64, l as u64));
    Ok(c * rational::pow(&p, l as u32) * rational::pow(&one_minus, (k - l) as u32))
}

pub fn cut() -> Predicate {
    Predicate::from_fn("cut", 2, 2, |x| x[0] != x[1]).expect("valid")
}

/// True only on `(1, 0)`: the edge leaves the first endpoint's side.
pub fn dicut() -> Predicate {
    Predicate::from_fn("dicut", 2, 2, |x| x[0] == 1 && x[1] == 0).expect("valid")
}

pub fn two_and(b1: bool, b2: bool) -> Predicate {
    let name = format!("and{}{}", b1 as u8, b2 as u8);
    Predicate::from_fn(name, 2, 2, move |x| (x[0] == 1) != b1 && (x[1] == 1) != b2)
        .expect("valid")
}

pub fn kxor(k: usize, b: bool) -> Predicate {
    Predicate::from_fn(format!("xor{k}-{}", b as u8), k, 2, move |x| {
        (x.iter().sum::<usize>() % 2 == 1) != b
    })
    .expect("valid")
}

pub fn exactly(l: usize, k: usize) -> Predicate {
    Predicate::from_fn(format!("exactly-{l}-of-{k}"), k, 2, move |x| {
        x.iter().sum::<usize>() == l
    })
    .expect("valid")
}

/// `LTF^{w,b}(x) = 1[Σ (-1)^{x_l + b_l} w_l > 0]` for each shift `b`.
pub fn ltf_family(weights: &[i64]) -> Result<PredicateFamily> {
    let k = weights.len();
    if k == 0 {
        return Err(Error::invalid("LTF needs at least one weight"));
    }
    let signed = |x: &[usize]| -> i64 {
        x.iter()
            .zip(weights)
            .map(|(&xi, &w)| if xi % 2 == 0 { w } else { -w })
            .sum()
    };
    let points = 1usize << k;
    for i in 0..points {
        let x = decode(i, 2, k);
        if signed(&x) == 0 {
            return Err(Error::invalid(format!(
                "LTF weights {weights:?} have a tie at point {x:?}"
            )));
        }
    }
    let mut members = Vec::with_capacity(points);
    for bi in 0..points {
        let b = decode(bi, 2, k);
        let tag: String = b.iter().map(|d| char::from(b'0' + *d as u8)).collect();
        members.push(Predicate::from_fn(format!("ltf-{tag}"), k, 2, |x| {
            let y: Vec<usize> = x.iter().zip(&b).map(|(a, c)| a ^ c).collect();
            signed(&y) > 0
        })?);
    }
    PredicateFamily::new(format!("ltf{weights:?}"), members)
}

pub fn cut_family() -> PredicateFamily {
    PredicateFamily::new("max-cut", vec![cut()]).expect("valid")
}

pub fn dicut_family() -> PredicateFamily {
    PredicateFamily::new("max-dicut", vec![dicut()]).expect("valid")
}

pub fn two_and_family() -> PredicateFamily {
    let members = [(false, false), (false, true), (true, false), (true, true)]
        .into_iter()
        .map(|(a, b)| two_and(a, b))
        .collect();
    PredicateFamily::new("max-2and", members).expect("valid")
}

pub fn kxor_family(k: usize) -> PredicateFamily {
    PredicateFamily::new(format!("max-{k}xor"), vec![kxor(k, false), kxor(k, true)])
        .expect("valid")
}

pub fn exactly_family(l: usize, k: usize) -> PredicateFamily {
    PredicateFamily::new(format!("max-exactly-{l}-of-{k}"), vec![exactly(l, k)]).expect("valid")
}

/// The named example families at their standard small arities.
pub fn predicate_zoo() -> BTreeMap<String, PredicateFamily> {
    let mut zoo = BTreeMap::new();
    let fams = [
        cut_family(),
        dicut_family(),
        two_and_family(),
        kxor_family(2),
        kxor_family(3),
        exactly_family(2, 3),
        ltf_family(&[1, 1, 1]).expect("odd majority has no ties"),
    ];
    for f in fams {
        zoo.insert(f.name.clone(), f);
    }
    zoo
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintJson {
    pred: String,
    vars: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceJson {
    q0: usize,
    k: usize,
    num_vars: usize,
    constraints: Vec<ConstraintJson>,
}

impl From<&Instance> for InstanceJson {
    fn from(inst: &Instance) -> Self {
        let k = inst.constraints.first().map_or(0, |c| c.predicate.k);
        let constraints = inst
            .constraints
            .iter()
            .map(|c| {
                let named = Predicate::by_name(&c.predicate.name)
                    .is_some_and(|p| p.table == c.predicate.table && p.q0 == c.predicate.q0);
                ConstraintJson {
                    pred: if named { c.predicate.name.clone() } else { c.predicate.table_string() },
                    vars: c.vars.clone(),
                }
            })
            .collect();
        InstanceJson { q0: inst.q0, k, num_vars: inst.num_vars, constraints }
    }
}

impl TryFrom<InstanceJson> for Instance {
    type Error = Error;

    fn try_from(raw: InstanceJson) -> Result<Self> {
        let mut cs = Vec::with_capacity(raw.constraints.len());
        for c in raw.constraints {
            let is_table = !c.pred.is_empty() && c.pred.chars().all(|ch| ch == '0' || ch == '1');
            let p = if is_table {
                Predicate::from_table_string(format!("t{}", c.pred), raw.k, raw.q0, &c.pred)?
            } else {
                Predicate::by_name(&c.pred)
                    .ok_or_else(|| Error::invalid(format!("unknown predicate `{}`", c.pred)))?
            };
            if p.k != raw.k {
                return Err(Error::invalid(format!(
                    "predicate `{}` has arity {}, header says {}",
                    c.pred, p.k, raw.k
                )));
            }
            cs.push(Constraint::new(p, c.vars)?);
        }
        Instance::new(raw.q0, raw.num_vars, cs)
    }
}
