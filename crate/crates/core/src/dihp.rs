//! DIHP inputs: hidden assignments, partite hypermatchings, noisy signals and
//! the streaming instances they induce.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csp::{decode, Constraint, Instance};
use crate::error::{Error, Result};
use crate::lp::LocalDistribution;
use crate::rational::{self, Rational};
use crate::rng::{substream, Purpose};
use crate::uniformize::GadgetSpec;

/// An `m×k` matrix over `[n]` whose columns have distinct entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hypermatching {
    pub n: usize,
    pub rows: Vec<Vec<usize>>,
}

impl Hypermatching {
    pub fn new(n: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let k = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::invalid("ragged hypermatching"));
        }
        for l in 0..k {
            let mut seen = vec![false; n];
            for r in &rows {
                let v = r[l];
                if v >= n {
                    return Err(Error::invalid(format!("entry {v} outside [0,{n})")));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::invalid(format!("column {l} repeats vertex {v}")));
                }
            }
        }
        Ok(Hypermatching { n, rows })
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    /// `ι_M(j, l) = (M_{jl}, l)`.
    pub fn embed(&self, j: usize, l: usize) -> (usize, usize) {
        (self.rows[j][l], l)
    }
}

pub fn sample_hypermatching(n: usize, m: usize, k: usize, rng: &mut impl Rng) -> Result<Hypermatching> {
    if m > n {
        return Err(Error::invalid(format!("m = {m} exceeds n = {n}")));
    }
    let mut rows = vec![vec![0usize; k]; m];
    let mut pool: Vec<usize> = (0..n).collect();
    for l in 0..k {
        for j in 0..m {
            let s = rng.gen_range(j..n);
            pool.swap(j, s);
            rows[j][l] = pool[j];
        }
    }
    Ok(Hypermatching { n, rows })
}

/// `|PHM(m,k,n)| = (n·(n-1)⋯(n-m+1))^k`.
pub fn count_hypermatchings(n: usize, m: usize, k: usize) -> BigInt {
    if m > n {
        return BigInt::from(0);
    }
    let falling: BigInt = (0..m).map(|i| BigInt::from(n - i)).product();
    num_traits::pow(falling, k)
}

/// Every partite hypermatching, in lexicographic order of columns.
pub fn enumerate_hypermatchings(n: usize, m: usize, k: usize) -> Vec<Hypermatching> {
    fn arrangements(n: usize, m: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == m {
            out.push(prefix.clone());
            return;
        }
        for v in 0..n {
            if !prefix.contains(&v) {
                prefix.push(v);
                arrangements(n, m, prefix, out);
                prefix.pop();
            }
        }
    }
    if m > n {
        return Vec::new();
    }
    let mut cols = Vec::new();
    arrangements(n, m, &mut Vec::new(), &mut cols);
    let mut out = Vec::new();
    let total = cols.len().pow(k as u32);
    for idx in 0..total {
        let choice = decode(idx, cols.len(), k);
        let rows = (0..m).map(|j| choice.iter().map(|&c| cols[c][j]).collect()).collect();
        out.push(Hypermatching { n, rows });
    }
    out
}

/// A flat row-major `m×k` matrix over `Z_q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignalMatrix {
    pub q: usize,
    pub m: usize,
    pub k: usize,
    pub entries: Vec<usize>,
}

impl SignalMatrix {
    pub fn zeros(q: usize, m: usize, k: usize) -> Self {
        SignalMatrix { q, m, k, entries: vec![0; m * k] }
    }

    pub fn row(&self, j: usize) -> &[usize] {
        &self.entries[j * self.k..(j + 1) * self.k]
    }

    pub fn zero_rows(&self) -> Vec<usize> {
        (0..self.m).filter(|&j| self.row(j).iter().all(|&v| v == 0)).collect()
    }

    pub fn sub(&self, other: &SignalMatrix) -> SignalMatrix {
        let q = self.q;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| (a + q - b) % q).collect();
        SignalMatrix { q, m: self.m, k: self.k, entries }
    }

    pub fn add(&self, other: &SignalMatrix) -> SignalMatrix {
        let q = self.q;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| (a + b) % q).collect();
        SignalMatrix { q, m: self.m, k: self.k, entries }
    }

    /// Row-major base-`q` index of the whole matrix.
    pub fn index(&self) -> usize {
        crate::csp::encode(&self.entries, self.q)
    }
}

/// A flat row-major `n×k'` matrix over `Z_q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HiddenAssignment {
    pub q: usize,
    pub n: usize,
    pub k_prime: usize,
    pub entries: Vec<usize>,
}

impl HiddenAssignment {
    pub fn new(q: usize, n: usize, k_prime: usize, entries: Vec<usize>) -> Result<Self> {
        if entries.len() != n * k_prime || entries.iter().any(|&e| e >= q) {
            return Err(Error::invalid("hidden assignment shape or range"));
        }
        Ok(HiddenAssignment { q, n, k_prime, entries })
    }

    pub fn at(&self, i: usize, v: usize) -> usize {
        self.entries[i * self.k_prime + v]
    }

    pub fn sample(q: usize, n: usize, k_prime: usize, rng: &mut impl Rng) -> Self {
        let entries = (0..n * k_prime).map(|_| rng.gen_range(0..q)).collect();
        HiddenAssignment { q, n, k_prime, entries }
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.entries.chunks(self.k_prime).map(|r| r.to_vec()).collect()
    }
}

/// `(Π^φ_M X)_{j,l} = X[M_{jl}, φ(l)]`.
pub fn project(m: &Hypermatching, phi: &[usize], x: &HiddenAssignment) -> Result<SignalMatrix> {
    if m.k() != phi.len() || m.n != x.n || phi.iter().any(|&v| v >= x.k_prime) {
        return Err(Error::invalid("projection shapes are inconsistent"));
    }
    let k = phi.len();
    let mut entries = Vec::with_capacity(m.m() * k);
    for row in &m.rows {
        for (l, &i) in row.iter().enumerate() {
            entries.push(x.at(i, phi[l]));
        }
    }
    Ok(SignalMatrix { q: x.q, m: m.m(), k, entries })
}

/// Draws from a rational distribution using integer cumulative weights.
#[derive(Debug, Clone)]
pub struct ExactSampler {
    cumulative: Vec<u64>,
    total: u64,
}

impl ExactSampler {
    pub fn new(probs: &[Rational]) -> Result<Self> {
        let l = probs.iter().fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
        let total = l
            .to_u64()
            .ok_or_else(|| Error::limit("sampler denominator", u128::MAX, u64::MAX as u128))?;
        let lr = Rational::from_integer(l);
        let mut acc = 0u64;
        let mut cumulative = Vec::with_capacity(probs.len());
        for p in probs {
            acc += (p * &lr).to_integer().to_u64().expect("weight fits");
            cumulative.push(acc);
        }
        if acc != total {
            return Err(Error::invalid("sampler weights do not sum to 1"));
        }
        Ok(ExactSampler { cumulative, total })
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let r = rng.gen_range(0..self.total);
        self.cumulative.partition_point(|&c| c <= r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    Yes,
    No,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DihpSample {
    pub case: Case,
    pub q: usize,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub matchings: Vec<Hypermatching>,
    pub signals: Vec<SignalMatrix>,
    pub hidden: Option<HiddenAssignment>,
    pub noise: Option<Vec<SignalMatrix>>,
}

impl DihpSample {
    pub fn alpha(&self) -> f64 {
        self.m as f64 / self.n as f64
    }
}

fn sample_noise(dist: &LocalDistribution, sampler: &ExactSampler, m: usize, rng: &mut ChaCha8Rng) -> SignalMatrix {
    let mut entries = Vec::with_capacity(m * dist.k);
    for _ in 0..m {
        entries.extend(decode(sampler.sample(rng), dist.q, dist.k));
    }
    SignalMatrix { q: dist.q, m, k: dist.k, entries }
}

/// Shared randomness of one coupled run: `X*`, `M_{1:T}`, `Y_{1:T}`, and the
/// uniform NO-case signals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coupling {
    pub hidden: HiddenAssignment,
    pub matchings: Vec<Hypermatching>,
    pub noise: Vec<SignalMatrix>,
    pub yes_signals: Vec<SignalMatrix>,
    pub no_signals: Vec<SignalMatrix>,
    pub seed: u64,
}

impl Coupling {
    pub fn sample(spec: &GadgetSpec, n: usize, m: usize, seed: u64) -> Result<Self> {
        if m > n {
            return Err(Error::invalid(format!("m = {m} exceeds n = {n}")));
        }
        let q = spec.q;
        let hidden = HiddenAssignment::sample(q, n, spec.k_prime, &mut substream(seed, 0, Purpose::Hidden));
        let mut matchings = Vec::with_capacity(spec.t());
        let mut noise = Vec::with_capacity(spec.t());
        let mut yes_signals = Vec::with_capacity(spec.t());
        let mut no_signals = Vec::with_capacity(spec.t());
        let mut samplers: Vec<(usize, ExactSampler)> = Vec::new();
        for (t, edge) in spec.edges.iter().enumerate() {
            let ti = t as u64;
            let mt = sample_hypermatching(n, m, spec.k, &mut substream(seed, ti, Purpose::Matching))?;
            let pos = match samplers.iter().position(|(src, _)| spec.edges[*src].dist == edge.dist) {
                Some(p) => p,
                None => {
                    samplers.push((t, ExactSampler::new(&edge.dist.probs)?));
                    samplers.len() - 1
                }
            };
            let y = sample_noise(&edge.dist, &samplers[pos].1, m, &mut substream(seed, ti, Purpose::Noise));
            let z = project(&mt, &edge.phi, &hidden)?.sub(&y);
            let mut urng = substream(seed, ti, Purpose::UniformSignal);
            let entries = (0..m * spec.k).map(|_| urng.gen_range(0..q)).collect();
            no_signals.push(SignalMatrix { q, m, k: spec.k, entries });
            matchings.push(mt);
            noise.push(y);
            yes_signals.push(z);
        }
        Ok(Coupling { hidden, matchings, noise, yes_signals, no_signals, seed })
    }

    pub fn yes(&self, n: usize, m: usize) -> DihpSample {
        DihpSample {
            case: Case::Yes,
            q: self.hidden.q,
            n,
            m,
            seed: self.seed,
            matchings: self.matchings.clone(),
            signals: self.yes_signals.clone(),
            hidden: Some(self.hidden.clone()),
            noise: Some(self.noise.clone()),
        }
    }

    pub fn no(&self, n: usize, m: usize) -> DihpSample {
        DihpSample {
            case: Case::No,
            q: self.hidden.q,
            n,
            m,
            seed: self.seed,
            matchings: self.matchings.clone(),
            signals: self.no_signals.clone(),
            hidden: None,
            noise: None,
        }
    }
}

pub fn sample_yes(spec: &GadgetSpec, n: usize, m: usize, seed: u64) -> Result<DihpSample> {
    Ok(Coupling::sample(spec, n, m, seed)?.yes(n, m))
}

pub fn sample_no(spec: &GadgetSpec, n: usize, m: usize, seed: u64) -> Result<DihpSample> {
    if m > n {
        return Err(Error::invalid(format!("m = {m} exceeds n = {n}")));
    }
    let mut matchings = Vec::with_capacity(spec.t());
    let mut signals = Vec::with_capacity(spec.t());
    for t in 0..spec.t() as u64 {
        matchings.push(sample_hypermatching(n, m, spec.k, &mut substream(seed, t, Purpose::Matching))?);
        let mut urng = substream(seed, t, Purpose::UniformSignal);
        let entries = (0..m * spec.k).map(|_| urng.gen_range(0..spec.q)).collect();
        signals.push(SignalMatrix { q: spec.q, m, k: spec.k, entries });
    }
    Ok(DihpSample { case: Case::No, q: spec.q, n, m, seed, matchings, signals, hidden: None, noise: None })
}

pub fn sample(spec: &GadgetSpec, n: usize, m: usize, case: Case, seed: u64) -> Result<DihpSample> {
    match case {
        Case::Yes => sample_yes(spec, n, m, seed),
        Case::No => sample_no(spec, n, m, seed),
    }
}

/// Checks `Z_t + Y_t = Π^{φ_t}_{M_t} X*` for a YES sample.
pub fn verify_yes(sample: &DihpSample, spec: &GadgetSpec) -> Result<bool> {
    let (Some(x), Some(noise)) = (&sample.hidden, &sample.noise) else {
        return Err(Error::invalid("sample carries no hidden assignment or noise"));
    };
    for (t, edge) in spec.edges.iter().enumerate() {
        let proj = project(&sample.matchings[t], &edge.phi, x)?;
        if sample.signals[t].add(&noise[t]) != proj {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Variable `(i, v)` of the emitted instance.
pub fn flat_var(i: usize, v: usize, k_prime: usize) -> usize {
    i * k_prime + v
}

/// One constraint with predicate `f_t` per zero row of `Z_t`, `t`-major then
/// row order.
pub fn emit_instance(sample: &DihpSample, spec: &GadgetSpec) -> Result<Instance> {
    if sample.signals.len() != spec.t() || sample.matchings.len() != spec.t() {
        return Err(Error::invalid("sample and gadget disagree on T"));
    }
    let mut cs = Vec::new();
    for (t, edge) in spec.edges.iter().enumerate() {
        let mt = &sample.matchings[t];
        for j in sample.signals[t].zero_rows() {
            let vars = mt.rows[j]
                .iter()
                .zip(&edge.phi)
                .map(|(&i, &v)| flat_var(i, v, spec.k_prime))
                .collect();
            cs.push(Constraint::new(edge.predicate.clone(), vars)?);
        }
    }
    Instance::new(spec.q0, sample.n * spec.k_prime, cs)
}

/// Value of the emitted instance under `κ(X*)`; `None` when it is empty.
pub fn planted_value(sample: &DihpSample, spec: &GadgetSpec) -> Result<Option<Rational>> {
    let x = sample
        .hidden
        .as_ref()
        .ok_or_else(|| Error::invalid("planted value needs the hidden assignment"))?;
    let inst = emit_instance(sample, spec)?;
    if inst.is_empty() {
        return Ok(None);
    }
    let planted = spec.planted(&x.rows());
    crate::csp::value(&inst, &planted).map(Some)
}

pub fn zero_row_fraction(sample: &DihpSample) -> Rational {
    let zeros: usize = sample.signals.iter().map(|s| s.zero_rows().len()).sum();
    let total = sample.signals.len() * sample.m;
    rational::ratio(zeros as i64, total as i64)
}
