//! The one-way blackboard game: players, transcripts, advantage estimates,
//! exact transcript distances and streaming adapters.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::csp::{Constraint, Instance};
use crate::dihp::{count_hypermatchings, emit_instance, enumerate_hypermatchings, project, Coupling, DihpSample, Hypermatching, HiddenAssignment, SignalMatrix};
use crate::error::{Error, Result};
use crate::lemmas::wilson;
use crate::rational::{self, Rational};
use crate::rng::child_seed;
use crate::uniformize::GadgetSpec;

/// Enumeration budget for exact transcript distances.
pub const EXACT_CAP: u128 = 1 << 26;
pub const MIN_TRIALS: usize = 100;

/// What player `t` sees: every matching so far, earlier messages and its own
/// signal.
#[derive(Debug, Clone, Copy)]
pub struct PlayerView<'a> {
    pub t: usize,
    pub total: usize,
    pub matchings: &'a [Hypermatching],
    pub messages: &'a [Vec<bool>],
    pub signal: &'a SignalMatrix,
}

impl PlayerView<'_> {
    pub fn previous(&self) -> Option<&[bool]> {
        self.messages.last().map(|m| m.as_slice())
    }

    pub fn is_last(&self) -> bool {
        self.t + 1 == self.total
    }
}

/// A deterministic player with a declared message length.
pub trait Player: Send + Sync {
    fn s_bits(&self) -> usize;
    fn message(&self, view: &PlayerView<'_>) -> Result<Vec<bool>>;
}

pub type Players = Vec<Arc<dyn Player>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub matchings: Vec<Hypermatching>,
    pub messages: Vec<Vec<bool>>,
    pub output: bool,
    pub comm_bits: usize,
}

/// Players speak in order; the output is the first bit of the last message,
/// or 0 when that message is empty.
pub fn run_protocol(players: &[Arc<dyn Player>], matchings: &[Hypermatching], signals: &[SignalMatrix]) -> Result<Transcript> {
    if players.len() != matchings.len() || players.len() != signals.len() {
        return Err(Error::invalid(format!(
            "{} players, {} matchings, {} signals",
            players.len(),
            matchings.len(),
            signals.len()
        )));
    }
    let total = players.len();
    let mut messages: Vec<Vec<bool>> = Vec::with_capacity(total);
    for (t, p) in players.iter().enumerate() {
        let view = PlayerView { t, total, matchings: &matchings[..=t], messages: &messages, signal: &signals[t] };
        let msg = p.message(&view)?;
        if msg.len() > p.s_bits() {
            return Err(Error::ProtocolViolation(format!(
                "player {t} wrote {} bits, limit {}",
                msg.len(),
                p.s_bits()
            )));
        }
        messages.push(msg);
    }
    let output = messages.last().and_then(|m| m.first()).copied().unwrap_or(false);
    let comm_bits = messages.iter().map(Vec::len).sum();
    Ok(Transcript { matchings: matchings.to_vec(), messages, output, comm_bits })
}

/// Writes nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPlayer;

impl Player for ZeroPlayer {
    fn s_bits(&self) -> usize {
        0
    }

    fn message(&self, _: &PlayerView<'_>) -> Result<Vec<bool>> {
        Ok(Vec::new())
    }
}

/// A player given by a closure.
#[derive(Clone)]
pub struct FnPlayer {
    pub s_bits: usize,
    #[allow(clippy::type_complexity)]
    pub f: Arc<dyn Fn(&PlayerView<'_>) -> Vec<bool> + Send + Sync>,
}

impl Player for FnPlayer {
    fn s_bits(&self) -> usize {
        self.s_bits
    }

    fn message(&self, view: &PlayerView<'_>) -> Result<Vec<bool>> {
        Ok((self.f)(view))
    }
}

fn entry_bits(q: usize) -> usize {
    (usize::BITS - (q.max(2) - 1).leading_zeros()) as usize
}

fn to_bits(mut v: u64, width: usize) -> Vec<bool> {
    let mut out = vec![false; width];
    for b in out.iter_mut().rev() {
        *b = v & 1 == 1;
        v >>= 1;
    }
    out
}

fn from_bits(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
}

fn parity(z: &SignalMatrix) -> bool {
    z.entries.iter().sum::<usize>() % 2 == 1
}

/// Writes the parity of its own signal; ignores the blackboard.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParityPlayer;

impl Player for ParityPlayer {
    fn s_bits(&self) -> usize {
        1
    }

    fn message(&self, view: &PlayerView<'_>) -> Result<Vec<bool>> {
        Ok(vec![parity(view.signal)])
    }
}

/// Posts its whole signal. The last player instead posts the parity of every
/// signal on the board together with its own.
#[derive(Debug, Clone, Copy)]
pub struct FullInfoPlayer {
    pub q: usize,
    pub m: usize,
    pub k: usize,
}

impl Player for FullInfoPlayer {
    fn s_bits(&self) -> usize {
        self.m * self.k * entry_bits(self.q)
    }

    fn message(&self, view: &PlayerView<'_>) -> Result<Vec<bool>> {
        let w = entry_bits(self.q);
        if view.is_last() {
            let mut acc = parity(view.signal);
            for msg in view.messages {
                for chunk in msg.chunks(w) {
                    acc ^= from_bits(chunk) % 2 == 1;
                }
            }
            return Ok(vec![acc]);
        }
        Ok(view.signal.entries.iter().flat_map(|&e| to_bits(e as u64, w)).collect())
    }
}

/// Keeps a running count of zero rows; the last player outputs whether the
/// total reaches `threshold`.
#[derive(Debug, Clone, Copy)]
pub struct CounterPlayer {
    pub bits: usize,
    pub threshold: u64,
}

impl CounterPlayer {
    /// Width enough for `T·m` and a threshold at the expected count `T·m/q^k`.
    pub fn for_shape(q: usize, m: usize, k: usize, t: usize) -> Self {
        let max = (t * m) as u64;
        let bits = (u64::BITS - max.leading_zeros()).max(1) as usize;
        let threshold = ((t * m) as f64 / (q as f64).powi(k as i32)).ceil() as u64;
        CounterPlayer { bits, threshold }
    }
}

impl Player for CounterPlayer {
    fn s_bits(&self) -> usize {
        self.bits
    }

    fn message(&self, view: &PlayerView<'_>) -> Result<Vec<bool>> {
        let prev = view.previous().map_or(0, from_bits);
        let count = prev + view.signal.zero_rows().len() as u64;
        if view.is_last() {
            return Ok(vec![count >= self.threshold]);
        }
        if count >= 1 << self.bits {
            return Err(Error::ProtocolViolation(format!("count {count} overflows {} bits", self.bits)));
        }
        Ok(to_bits(count, self.bits))
    }
}

/// Posts the first `s_bits` bits of a hash of its signal.
#[derive(Debug, Clone, Copy)]
pub struct EchoPlayer {
    pub s_bits: usize,
}

fn hash_bits(bytes: &[u8], width: usize) -> Vec<bool> {
    let mut out = Vec::with_capacity(width);
    let mut counter = 0u32;
    while out.len() < width {
        let mut h = Sha256::new();
        h.update(counter.to_le_bytes());
        h.update(bytes);
        for byte in h.finalize() {
            for i in (0..8).rev() {
                if out.len() < width {
                    out.push((byte >> i) & 1 == 1);
                }
            }
        }
        counter += 1;
    }
    out
}

impl Player for EchoPlayer {
    fn s_bits(&self) -> usize {
        self.s_bits
    }

    fn message(&self, view: &PlayerView<'_>) -> Result<Vec<bool>> {
        let bytes: Vec<u8> = view.signal.entries.iter().flat_map(|&e| (e as u64).to_le_bytes()).collect();
        Ok(hash_bits(&bytes, self.s_bits))
    }
}

pub fn zero_players(t: usize) -> Players {
    (0..t).map(|_| Arc::new(ZeroPlayer) as Arc<dyn Player>).collect()
}

pub fn parity_players(t: usize) -> Players {
    (0..t).map(|_| Arc::new(ParityPlayer) as Arc<dyn Player>).collect()
}

pub fn fullinfo_players(spec: &GadgetSpec, m: usize) -> Players {
    let p = FullInfoPlayer { q: spec.q, m, k: spec.k };
    (0..spec.t()).map(|_| Arc::new(p) as Arc<dyn Player>).collect()
}

pub fn counter_players(spec: &GadgetSpec, m: usize) -> Players {
    let p = CounterPlayer::for_shape(spec.q, m, spec.k, spec.t());
    (0..spec.t()).map(|_| Arc::new(p) as Arc<dyn Player>).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Advantage {
    pub trials: usize,
    pub p_yes: f64,
    pub p_no: f64,
    pub ci_yes: (f64, f64),
    pub ci_no: (f64, f64),
    pub advantage: f64,
    /// Range of `|p_yes - p_no|` compatible with both intervals.
    pub ci: (f64, f64),
    pub comm_bits: usize,
}

/// `|Pr[out = 1 | YES] - Pr[out = 1 | NO]|` over coupled runs, with 95%
/// Wilson intervals.
pub fn estimate_advantage(players: &[Arc<dyn Player>], spec: &GadgetSpec, n: usize, m: usize, trials: usize, seed: u64) -> Result<Advantage> {
    if trials < MIN_TRIALS {
        return Err(Error::invalid(format!("{trials} trials; at least {MIN_TRIALS} are required")));
    }
    if players.len() != spec.t() {
        return Err(Error::invalid(format!("{} players for T = {}", players.len(), spec.t())));
    }
    let (mut yes, mut no, mut comm) = (0usize, 0usize, 0usize);
    for i in 0..trials {
        let c = Coupling::sample(spec, n, m, child_seed(seed, i as u64))?;
        let ty = run_protocol(players, &c.matchings, &c.yes_signals)?;
        let tn = run_protocol(players, &c.matchings, &c.no_signals)?;
        yes += usize::from(ty.output);
        no += usize::from(tn.output);
        comm = comm.max(ty.comm_bits).max(tn.comm_bits);
    }
    let t = trials as f64;
    let (p_yes, p_no) = (yes as f64 / t, no as f64 / t);
    let ci_yes = wilson(yes, trials, 1.96);
    let ci_no = wilson(no, trials, 1.96);
    let lo = (ci_yes.0 - ci_no.1).max(ci_no.0 - ci_yes.1).max(0.0);
    let hi = (ci_yes.1 - ci_no.0).max(ci_no.1 - ci_yes.0);
    Ok(Advantage {
        trials,
        p_yes,
        p_no,
        ci_yes,
        ci_no,
        advantage: (p_yes - p_no).abs(),
        ci: (lo, hi),
        comm_bits: comm,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactTvd {
    #[serde(with = "rational::serde_str")]
    pub tvd: Rational,
    pub value: f64,
    pub transcripts: usize,
}

type TranscriptKey = (Vec<u32>, Vec<Vec<bool>>);

/// Integer weights of every `m×k` noise matrix for one edge distribution.
fn noise_weights(probs: &[Rational], q: usize, m: usize, k: usize) -> Result<Vec<(SignalMatrix, u128)>> {
    let l = rational::lcm_of_denominators(probs);
    let lr = Rational::from_integer(l);
    let row: Vec<u128> = probs
        .iter()
        .map(|p| {
            use num_traits::ToPrimitive;
            (p * &lr).to_integer().to_u128().ok_or_else(|| Error::limit("noise weight", u128::MAX, u128::MAX))
        })
        .collect::<Result<_>>()?;
    let rowlen = row.len();
    let total = rowlen.pow(m as u32);
    let mut out = Vec::new();
    for idx in 0..total {
        let mut w = 1u128;
        let mut entries = Vec::with_capacity(m * k);
        let mut rest = idx;
        let mut rows = Vec::with_capacity(m);
        for _ in 0..m {
            rows.push(rest % rowlen);
            rest /= rowlen;
        }
        rows.reverse();
        for r in rows {
            w = w.checked_mul(row[r]).ok_or_else(|| Error::limit("noise weight", u128::MAX, u128::MAX))?;
            entries.extend(crate::csp::decode(r, q, k));
        }
        if w > 0 {
            out.push((SignalMatrix { q, m, k, entries }, w));
        }
    }
    Ok(out)
}

struct Enumerator<'a> {
    players: &'a [Arc<dyn Player>],
    phms: &'a [Hypermatching],
    total: usize,
}

impl Enumerator<'_> {
    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        t: usize,
        mids: &mut Vec<u32>,
        chosen: &mut Vec<Hypermatching>,
        msgs: &mut Vec<Vec<bool>>,
        weight: u128,
        signals: &dyn Fn(usize, &Hypermatching) -> Result<Vec<(SignalMatrix, u128)>>,
        out: &mut HashMap<TranscriptKey, u128>,
    ) -> Result<()> {
        if t == self.total {
            let slot = out.entry((mids.clone(), msgs.clone())).or_default();
            *slot = slot.checked_add(weight).ok_or_else(|| Error::limit("transcript weight", u128::MAX, u128::MAX))?;
            return Ok(());
        }
        for (mi, mt) in self.phms.iter().enumerate() {
            chosen.push(mt.clone());
            mids.push(mi as u32);
            for (z, w) in signals(t, mt)? {
                let view = PlayerView { t, total: self.total, matchings: chosen, messages: msgs, signal: &z };
                let p = &self.players[t];
                let msg = p.message(&view)?;
                if msg.len() > p.s_bits() {
                    return Err(Error::ProtocolViolation(format!("player {t} exceeded {} bits", p.s_bits())));
                }
                msgs.push(msg);
                let nw = weight.checked_mul(w).ok_or_else(|| Error::limit("transcript weight", u128::MAX, u128::MAX))?;
                self.walk(t + 1, mids, chosen, msgs, nw, signals, out)?;
                msgs.pop();
            }
            mids.pop();
            chosen.pop();
        }
        Ok(())
    }
}

/// Exact `‖(M, S^Y) - (M, S^N)‖_tvd` by enumerating `X*`, every matching
/// sequence and every signal.
pub fn exact_transcript_tvd(players: &[Arc<dyn Player>], spec: &GadgetSpec, n: usize, m: usize) -> Result<ExactTvd> {
    let t_count = spec.t();
    if players.len() != t_count {
        return Err(Error::invalid(format!("{} players for T = {t_count}", players.len())));
    }
    if m > n {
        return Err(Error::invalid(format!("m = {m} exceeds n = {n}")));
    }
    let q = spec.q;
    let phm_count = count_hypermatchings(n, m, spec.k);
    let xs = BigInt::from(q).pow((n * spec.k_prime) as u32);
    let zs = BigInt::from(q).pow((m * spec.k * t_count) as u32);
    let work = &xs * phm_count.pow(t_count as u32) * &zs;
    if work > BigInt::from(EXACT_CAP) {
        use num_traits::ToPrimitive;
        return Err(Error::limit(
            "exact transcript enumeration; use estimate_advantage instead",
            work.to_u128().unwrap_or(u128::MAX),
            EXACT_CAP,
        ));
    }
    let phms = enumerate_hypermatchings(n, m, spec.k);
    let en = Enumerator { players, phms: &phms, total: t_count };
    let noise: Vec<Vec<(SignalMatrix, u128)>> = spec
        .edges
        .iter()
        .map(|e| noise_weights(&e.dist.probs, q, m, spec.k))
        .collect::<Result<_>>()?;

    let mut yes: HashMap<TranscriptKey, u128> = HashMap::new();
    let x_count = q.pow((n * spec.k_prime) as u32);
    for xi in 0..x_count {
        let x = HiddenAssignment::new(q, n, spec.k_prime, crate::csp::decode(xi, q, n * spec.k_prime))?;
        let signals = |t: usize, mt: &Hypermatching| -> Result<Vec<(SignalMatrix, u128)>> {
            let proj = project(mt, &spec.edges[t].phi, &x)?;
            Ok(noise[t].iter().map(|(y, w)| (proj.sub(y), *w)).collect())
        };
        en.walk(0, &mut Vec::new(), &mut Vec::new(), &mut Vec::new(), 1, &signals, &mut yes)?;
    }
    let z_all: Vec<(SignalMatrix, u128)> = (0..q.pow((m * spec.k) as u32))
        .map(|zi| (SignalMatrix { q, m, k: spec.k, entries: crate::csp::decode(zi, q, m * spec.k) }, 1))
        .collect();
    let mut no: HashMap<TranscriptKey, u128> = HashMap::new();
    let uniform = |_: usize, _: &Hypermatching| -> Result<Vec<(SignalMatrix, u128)>> { Ok(z_all.clone()) };
    en.walk(0, &mut Vec::new(), &mut Vec::new(), &mut Vec::new(), 1, &uniform, &mut no)?;

    let yt: BigInt = yes.values().map(|&v| BigInt::from(v)).sum();
    let nt: BigInt = no.values().map(|&v| BigInt::from(v)).sum();
    let mut diff = BigInt::zero();
    let mut keys: Vec<&TranscriptKey> = yes.keys().chain(no.keys()).collect();
    keys.sort();
    keys.dedup();
    for key in &keys {
        let a = BigInt::from(yes.get(*key).copied().unwrap_or(0)) * &nt;
        let b = BigInt::from(no.get(*key).copied().unwrap_or(0)) * &yt;
        diff += (a - b).abs();
    }
    let tvd = Rational::new(diff, BigInt::from(2) * yt * nt);
    Ok(ExactTvd { value: rational::to_f64(&tvd), tvd, transcripts: keys.len() })
}

/// A streaming algorithm as a fold over constraints with a bounded state.
pub trait StreamFn: Send + Sync {
    fn s_bits(&self) -> usize;
    fn initial(&self) -> Vec<bool>;
    fn step(&self, state: &[bool], c: &Constraint) -> Vec<bool>;
}

/// Leaves the state unchanged.
#[derive(Debug, Clone)]
pub struct ConstantStream {
    pub state: Vec<bool>,
}

impl StreamFn for ConstantStream {
    fn s_bits(&self) -> usize {
        self.state.len()
    }

    fn initial(&self) -> Vec<bool> {
        self.state.clone()
    }

    fn step(&self, state: &[bool], _: &Constraint) -> Vec<bool> {
        state.to_vec()
    }
}

/// Counts constraints satisfied by the all-zeros assignment, saturating.
#[derive(Debug, Clone, Copy)]
pub struct AllZerosCounter {
    pub bits: usize,
}

impl StreamFn for AllZerosCounter {
    fn s_bits(&self) -> usize {
        self.bits
    }

    fn initial(&self) -> Vec<bool> {
        vec![false; self.bits]
    }

    fn step(&self, state: &[bool], c: &Constraint) -> Vec<bool> {
        let zeros = vec![0usize; c.predicate.k];
        let cur = from_bits(state);
        let max = (1u64 << self.bits) - 1;
        let next = if c.predicate.eval(&zeros) { (cur + 1).min(max) } else { cur };
        to_bits(next, self.bits)
    }
}

/// A seeded pseudo-random transition table.
#[derive(Debug, Clone, Copy)]
pub struct LookupStream {
    pub bits: usize,
    pub seed: u64,
}

impl StreamFn for LookupStream {
    fn s_bits(&self) -> usize {
        self.bits
    }

    fn initial(&self) -> Vec<bool> {
        hash_bits(&self.seed.to_le_bytes(), self.bits)
    }

    fn step(&self, state: &[bool], c: &Constraint) -> Vec<bool> {
        let mut bytes = self.seed.to_le_bytes().to_vec();
        bytes.extend(state.iter().map(|&b| u8::from(b)));
        bytes.extend(c.predicate.table_string().bytes());
        for v in &c.vars {
            bytes.extend((*v as u64).to_le_bytes());
        }
        hash_bits(&bytes, self.bits)
    }
}

/// File format for `stream:<file>` protocols.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StreamConfig {
    Constant { state: String },
    AllZerosCounter { bits: usize },
    Lookup { bits: usize, seed: u64 },
}

impl StreamConfig {
    pub fn build(&self) -> Result<Arc<dyn StreamFn>> {
        let width_ok = |bits: usize| {
            if (1..=63).contains(&bits) {
                Ok(())
            } else {
                Err(Error::invalid("stream state width must be in 1..=63"))
            }
        };
        Ok(match self {
            StreamConfig::Constant { state } => {
                let bits = state
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(Error::invalid("constant state must be a 0/1 string")),
                    })
                    .collect::<Result<_>>()?;
                Arc::new(ConstantStream { state: bits })
            }
            StreamConfig::AllZerosCounter { bits } => {
                width_ok(*bits)?;
                Arc::new(AllZerosCounter { bits: *bits })
            }
            StreamConfig::Lookup { bits, seed } => {
                width_ok(*bits)?;
                Arc::new(LookupStream { bits: *bits, seed: *seed })
            }
        })
    }
}

fn checked_step(f: &dyn StreamFn, state: &[bool], c: &Constraint) -> Result<Vec<bool>> {
    let next = f.step(state, c);
    if next.len() > f.s_bits() {
        return Err(Error::ProtocolViolation(format!("stream state of {} bits exceeds {}", next.len(), f.s_bits())));
    }
    Ok(next)
}

/// Player `t` runs the stream over the constraints of its zero rows, starting
/// from the previous player's state, and posts the resulting state.
pub struct StreamingPlayer {
    pub spec: Arc<GadgetSpec>,
    pub stream: Arc<dyn StreamFn>,
}

impl StreamingPlayer {
    fn local_constraints(&self, view: &PlayerView<'_>) -> Result<Vec<Constraint>> {
        let edge = &self.spec.edges[view.t];
        let mt = &view.matchings[view.t];
        view.signal
            .zero_rows()
            .into_iter()
            .map(|j| {
                let vars = mt.rows[j]
                    .iter()
                    .zip(&edge.phi)
                    .map(|(&i, &v)| crate::dihp::flat_var(i, v, self.spec.k_prime))
                    .collect();
                Constraint::new(edge.predicate.clone(), vars)
            })
            .collect()
    }
}

impl Player for StreamingPlayer {
    fn s_bits(&self) -> usize {
        self.stream.s_bits()
    }

    fn message(&self, view: &PlayerView<'_>) -> Result<Vec<bool>> {
        let mut state = view.previous().map_or_else(|| self.stream.initial(), |s| s.to_vec());
        if state.len() > self.stream.s_bits() {
            return Err(Error::ProtocolViolation("initial stream state exceeds its width".into()));
        }
        for c in self.local_constraints(view)? {
            state = checked_step(self.stream.as_ref(), &state, &c)?;
        }
        Ok(state)
    }
}

pub fn streaming_adapter(stream: Arc<dyn StreamFn>, spec: &GadgetSpec) -> Players {
    let spec = Arc::new(spec.clone());
    (0..spec.t())
        .map(|_| Arc::new(StreamingPlayer { spec: spec.clone(), stream: stream.clone() }) as Arc<dyn Player>)
        .collect()
}

/// Final state of the stream over a whole instance.
pub fn run_stream(stream: &dyn StreamFn, inst: &Instance) -> Result<Vec<bool>> {
    let mut state = stream.initial();
    for c in &inst.constraints {
        state = checked_step(stream, &state, c)?;
    }
    Ok(state)
}

/// Chained players against one monolithic pass over the emitted instance.
pub fn chained_equals_monolithic(stream: Arc<dyn StreamFn>, spec: &GadgetSpec, sample: &DihpSample) -> Result<bool> {
    let players = streaming_adapter(stream.clone(), spec);
    let tr = run_protocol(&players, &sample.matchings, &sample.signals)?;
    let mono = run_stream(stream.as_ref(), &emit_instance(sample, spec)?)?;
    Ok(tr.messages.last().cloned().unwrap_or_else(|| stream.initial()) == mono)
}

/// `½·Σ|a - b|` over a shared support.
pub fn tvd(a: &[Rational], b: &[Rational]) -> Result<Rational> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("supports differ: {} vs {}", a.len(), b.len())));
    }
    let s: Rational = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    Ok(s / rational::int(2))
}

pub fn tvd_f64(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("supports differ: {} vs {}", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0)
}

/// Law of `f(X, W)` for independent `X`, `W`.
pub fn push_through(x: &[Rational], w: &[Rational], f: &[Vec<usize>], out: usize) -> Vec<Rational> {
    let mut res = vec![rational::int(0); out];
    for (i, px) in x.iter().enumerate() {
        for (j, pw) in w.iter().enumerate() {
            res[f[i][j]] += px * pw;
        }
    }
    res
}

/// Law of `(X, f(X, Z))` from a joint law of `(X, Z)`, flattened as `x·out + y`.
fn pair_law(joint: &[Vec<Rational>], f: &[Vec<usize>], out: usize) -> Vec<Rational> {
    let mut res = vec![rational::int(0); joint.len() * out];
    for (i, row) in joint.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            res[i * out + f[i][j]] += p;
        }
    }
    res
}

fn independent(x: &[Rational], z: &[Rational]) -> Vec<Vec<Rational>> {
    x.iter().map(|px| z.iter().map(|pz| px * pz).collect()).collect()
}

fn marginal_x(joint: &[Vec<Rational>]) -> Vec<Rational> {
    joint.iter().map(|r| r.iter().sum()).collect()
}

/// A random finite configuration for the distance inequalities.
#[derive(Debug, Clone)]
pub struct FiniteTriple {
    /// Law of `(X¹, Z¹)` on `[a]×[c]`.
    pub joint: Vec<Vec<Rational>>,
    pub x2: Vec<Rational>,
    pub z2: Vec<Rational>,
    /// `f : [a]×[c] → [b]`.
    pub f: Vec<Vec<usize>>,
    pub b: usize,
}

fn random_law(len: usize, rng: &mut impl Rng) -> Vec<Rational> {
    let w: Vec<i64> = (0..len).map(|_| rng.gen_range(0..10)).collect();
    let total: i64 = w.iter().sum::<i64>().max(1);
    if w.iter().all(|&x| x == 0) {
        let mut v = vec![rational::int(0); len];
        v[0] = rational::int(1);
        return v;
    }
    w.iter().map(|&x| rational::ratio(x, total)).collect()
}

impl FiniteTriple {
    pub fn random(rng: &mut impl Rng) -> Self {
        let a = rng.gen_range(1..=4);
        let c = rng.gen_range(1..=4);
        let b = rng.gen_range(1..=64 / a);
        let flat = random_law(a * c, rng);
        let joint = flat.chunks(c).map(|r| r.to_vec()).collect();
        FiniteTriple {
            joint,
            x2: random_law(a, rng),
            z2: random_law(c, rng),
            f: (0..a).map(|_| (0..c).map(|_| rng.gen_range(0..b)).collect()).collect(),
            b,
        }
    }

    /// `(tvd(f(X¹,W), f(X²,W)), tvd(X¹, X²))` with `W ~ z2` independent.
    pub fn data_processing(&self) -> Result<(Rational, Rational)> {
        let x1 = marginal_x(&self.joint);
        let lhs = tvd(&push_through(&x1, &self.z2, &self.f, self.b), &push_through(&self.x2, &self.z2, &self.f, self.b))?;
        Ok((lhs, tvd(&x1, &self.x2)?))
    }

    /// `‖(X¹,f(X¹,Z¹)) - (X²,f(X²,Z²))‖` against
    /// `‖(X¹,f(X¹,Z¹)) - (X¹,f(X¹,Z²))‖ + ‖X¹ - X²‖`.
    pub fn substitution(&self) -> Result<(Rational, Rational)> {
        let x1 = marginal_x(&self.joint);
        let real = pair_law(&self.joint, &self.f, self.b);
        let swapped = pair_law(&independent(&x1, &self.z2), &self.f, self.b);
        let other = pair_law(&independent(&self.x2, &self.z2), &self.f, self.b);
        let lhs = tvd(&real, &other)?;
        let rhs = tvd(&real, &swapped)? + tvd(&x1, &self.x2)?;
        Ok((lhs, rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp;
    use crate::dihp::sample_hypermatching;
    use crate::lp::solve_basic_lp;
    use crate::uniformize::build_gadget_spec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn cut_edge_spec(copies: usize) -> GadgetSpec {
        let inst = csp::Instance::uniform(&csp::cut(), 2, &[vec![0, 1]]).unwrap();
        let sol = crate::lp::translated_line_solution(&inst);
        build_gadget_spec(&inst, &sol, copies).unwrap()
    }

    fn triangle_spec(copies: usize) -> GadgetSpec {
        let inst = csp::Instance::uniform(&csp::cut(), 3, &[vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap();
        let sol = solve_basic_lp(&inst).unwrap();
        build_gadget_spec(&inst, &sol, copies).unwrap()
    }

    #[test]
    fn zero_players_output_zero() {
        let spec = triangle_spec(1);
        let c = Coupling::sample(&spec, 10, 2, 1).unwrap();
        let tr = run_protocol(&zero_players(3), &c.matchings, &c.yes_signals).unwrap();
        assert!(!tr.output);
        assert_eq!(tr.comm_bits, 0);
        let adv = estimate_advantage(&zero_players(3), &spec, 10, 2, 200, 4).unwrap();
        assert_eq!(adv.advantage, 0.0);
    }

    #[test]
    fn echo_is_deterministic_and_bounded() {
        let spec = triangle_spec(1);
        let players: Players = (0..3).map(|_| Arc::new(EchoPlayer { s_bits: 5 }) as Arc<dyn Player>).collect();
        let c = Coupling::sample(&spec, 10, 2, 9).unwrap();
        let a = run_protocol(&players, &c.matchings, &c.yes_signals).unwrap();
        let b = run_protocol(&players, &c.matchings, &c.yes_signals).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.messages.iter().all(|m| m.len() == 5));
        let greedy: Players = vec![Arc::new(FnPlayer { s_bits: 1, f: Arc::new(|_| vec![true, true]) })];
        let one = cut_edge_spec(1);
        let c = Coupling::sample(&one, 4, 1, 2).unwrap();
        assert!(matches!(run_protocol(&greedy, &c.matchings, &c.yes_signals), Err(Error::ProtocolViolation(_))));
    }

    #[test]
    fn full_information_at_one_player() {
        let spec = cut_edge_spec(1);
        let f: Players = vec![Arc::new(FnPlayer {
            s_bits: 1,
            f: Arc::new(|v| vec![v.signal.entries[0] == 1 && v.matchings[0].rows[0][0] == 2]),
        })];
        let c = Coupling::sample(&spec, 4, 1, 3).unwrap();
        let tr = run_protocol(&f, &c.matchings, &c.yes_signals).unwrap();
        assert_eq!(tr.output, c.yes_signals[0].entries[0] == 1 && c.matchings[0].rows[0][0] == 2);
        let r = exact_transcript_tvd(&fullinfo_players(&spec, 1), &spec, 4, 1).unwrap();
        assert_eq!(r.tvd, rational::int(0));
    }

    #[test]
    fn one_player_tvd_is_zero() {
        let spec = cut_edge_spec(1);
        for players in [parity_players(1), counter_players(&spec, 2), fullinfo_players(&spec, 2)] {
            assert_eq!(exact_transcript_tvd(&players, &spec, 3, 2).unwrap().tvd, rational::int(0));
        }
    }

    #[test]
    fn two_parity_players_anchor() {
        let spec = cut_edge_spec(2);
        let r = exact_transcript_tvd(&parity_players(2), &spec, 3, 1).unwrap();
        assert_eq!(r.tvd, rational::ratio(1, 18));
        let blind: Players = (0..2).map(|_| Arc::new(ZeroPlayer) as Arc<dyn Player>).collect();
        assert_eq!(exact_transcript_tvd(&blind, &spec, 3, 1).unwrap().tvd, rational::int(0));
    }

    #[test]
    fn advantage_within_exact_tvd() {
        let spec = cut_edge_spec(2);
        let exact = exact_transcript_tvd(&parity_players(2), &spec, 3, 1).unwrap().value;
        let adv = estimate_advantage(&parity_players(2), &spec, 3, 1, 4000, 17).unwrap();
        assert!(adv.ci.0 <= exact + 1e-12, "{adv:?} vs {exact}");
    }

    #[test]
    fn exact_cap_is_enforced() {
        let spec = triangle_spec(2);
        assert!(matches!(
            exact_transcript_tvd(&zero_players(spec.t()), &spec, 10, 3),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn streaming_chain_matches_fold() {
        let spec = triangle_spec(2);
        let streams: Vec<Arc<dyn StreamFn>> = vec![
            Arc::new(ConstantStream { state: vec![true, false, true] }),
            Arc::new(AllZerosCounter { bits: 6 }),
            Arc::new(LookupStream { bits: 12, seed: 5 }),
        ];
        for seed in 0..10 {
            let c = Coupling::sample(&spec, 30, 5, seed).unwrap();
            for s in &streams {
                assert!(chained_equals_monolithic(s.clone(), &spec, &c.yes(30, 5)).unwrap());
                assert!(chained_equals_monolithic(s.clone(), &spec, &c.no(30, 5)).unwrap());
            }
        }
        let constant = Arc::new(ConstantStream { state: vec![true, false] });
        let c = Coupling::sample(&spec, 30, 5, 1).unwrap();
        let tr = run_protocol(&streaming_adapter(constant, &spec), &c.matchings, &c.yes_signals).unwrap();
        assert!(tr.messages.iter().all(|m| m == &vec![true, false]));
    }

    #[test]
    fn stream_config_parses() {
        let c: StreamConfig = serde_json::from_str(r#"{"kind":"lookup","bits":8,"seed":3}"#).unwrap();
        assert_eq!(c.build().unwrap().s_bits(), 8);
        let c: StreamConfig = serde_json::from_str(r#"{"kind":"constant","state":"101"}"#).unwrap();
        assert_eq!(c.build().unwrap().initial(), vec![true, false, true]);
        let bad: StreamConfig = serde_json::from_str(r#"{"kind":"all-zeros-counter","bits":0}"#).unwrap();
        assert!(bad.build().is_err());
    }

    #[test]
    fn tvd_basics() {
        let a = vec![rational::ratio(1, 2), rational::ratio(1, 2), rational::int(0)];
        assert_eq!(tvd(&a, &a).unwrap(), rational::int(0));
        let p = vec![rational::int(1), rational::int(0)];
        let q = vec![rational::int(0), rational::int(1)];
        assert_eq!(tvd(&p, &q).unwrap(), rational::int(1));
        assert!(tvd(&p, &a).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = random_law(7, &mut rng);
            let y = random_law(7, &mut rng);
            let direct = x.iter().zip(&y).map(|(a, b)| rational::to_f64(a) - rational::to_f64(b)).map(f64::abs).sum::<f64>() / 2.0;
            assert!((rational::to_f64(&tvd(&x, &y).unwrap()) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_inequalities() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let t = FiniteTriple::random(&mut rng);
            let (l, r) = t.data_processing().unwrap();
            assert!(l <= r);
            let (l, r) = t.substitution().unwrap();
            assert!(l <= r);
        }
    }

    #[test]
    fn counter_overflow_is_a_violation() {
        let tiny: Players = (0..2).map(|_| Arc::new(CounterPlayer { bits: 1, threshold: 1 }) as Arc<dyn Player>).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mt = sample_hypermatching(6, 3, 2, &mut rng).unwrap();
        let zero = SignalMatrix::zeros(2, 3, 2);
        assert!(matches!(
            run_protocol(&tiny, &[mt.clone(), mt], &[zero.clone(), zero]),
            Err(Error::ProtocolViolation(_))
        ));
    }
}
