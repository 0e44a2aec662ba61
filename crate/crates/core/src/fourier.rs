//! Dense Fourier analysis over `Z_q^N`.
//!
//! Tables are indexed by base-`q` digit tuples, first coordinate most
//! significant. A matrix in `Z_q^{m×k}` is flattened row-major, so row `j`
//! owns coordinates `j·k .. (j+1)·k`. Coefficients use expectation
//! normalization: `ĝ(u) = E_x g(x)·ω^{-<u,x>}` and `g = Σ_u ĝ(u)·χ_u`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::csp::{decode, encode};
use crate::error::{Error, Result};

pub const DEFAULT_CAP: u128 = 1 << 24;
pub const FREQUENCY_CAP: u128 = 1 << 20;

pub fn table_len(q: usize, n: usize, cap: u128) -> Result<usize> {
    let len = (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if len > cap {
        return Err(Error::limit(format!("table over Z_{q}^{n}"), len, cap));
    }
    Ok(len as usize)
}

/// A complex function on `Z_q^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    pub q: usize,
    pub n: usize,
    pub values: Vec<Complex64>,
    /// Set when the table is a probability density (mean 1, nonnegative).
    pub mean1: bool,
}

/// Fourier coefficients of a table, same indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub q: usize,
    pub n: usize,
    pub coeffs: Vec<Complex64>,
}

impl DensityTable {
    pub fn new(q: usize, n: usize, values: Vec<Complex64>) -> Result<Self> {
        let len = table_len(q, n, DEFAULT_CAP)?;
        if values.len() != len {
            return Err(Error::invalid(format!("table has {} values, expected {len}", values.len())));
        }
        Ok(DensityTable { q, n, values, mean1: false })
    }

    pub fn from_real(q: usize, n: usize, values: &[f64]) -> Result<Self> {
        DensityTable::new(q, n, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_fn(q: usize, n: usize, f: impl Fn(&[usize]) -> Complex64) -> Result<Self> {
        let len = table_len(q, n, DEFAULT_CAP)?;
        let values = (0..len).map(|i| f(&decode(i, q, n))).collect();
        Ok(DensityTable { q, n, values, mean1: false })
    }

    pub fn constant(q: usize, n: usize, c: f64) -> Result<Self> {
        let len = table_len(q, n, DEFAULT_CAP)?;
        Ok(DensityTable { q, n, values: vec![Complex64::new(c, 0.0); len], mean1: c == 1.0 })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, x: &[usize]) -> Complex64 {
        self.values[encode(x, self.q)]
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    pub fn max_abs_diff(&self, other: &DensityTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn check_density(&self) -> Result<()> {
        if (self.mean() - 1.0).norm() > 1e-12 {
            return Err(Error::invalid("density does not have mean 1"));
        }
        if self.values.iter().any(|v| v.re < -1e-12 || v.im.abs() > 1e-12) {
            return Err(Error::invalid("density has a negative or complex value"));
        }
        Ok(())
    }
}

impl Spectrum {
    pub fn at(&self, u: &[usize]) -> Complex64 {
        self.coeffs[encode(u, self.q)]
    }

    pub fn max_abs_diff(&self, other: &Spectrum) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn roots(q: usize, sign: f64) -> Vec<Complex64> {
    (0..q).map(|j| Complex64::from_polar(1.0, sign * 2.0 * PI * j as f64 / q as f64)).collect()
}

/// Length-`q` transforms along every axis in turn.
fn transform(values: &mut [Complex64], q: usize, n: usize, sign: f64, scale: f64) {
    let w = roots(q, sign);
    let mut buf = vec![Complex64::new(0.0, 0.0); q];
    let mut stride = 1usize;
    for _ in 0..n {
        let block = stride * q;
        for base in (0..values.len()).step_by(block) {
            for off in 0..stride {
                let start = base + off;
                for (u, slot) in buf.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for x in 0..q {
                        acc += values[start + x * stride] * w[(u * x) % q];
                    }
                    *slot = acc * scale;
                }
                for (x, v) in buf.iter().enumerate() {
                    values[start + x * stride] = *v;
                }
            }
        }
        stride = block;
    }
}

pub fn dft(g: &DensityTable) -> Result<Spectrum> {
    dft_capped(g, DEFAULT_CAP)
}

pub fn dft_capped(g: &DensityTable, cap: u128) -> Result<Spectrum> {
    table_len(g.q, g.n, cap)?;
    let mut coeffs = g.values.clone();
    transform(&mut coeffs, g.q, g.n, -1.0, 1.0 / g.q as f64);
    Ok(Spectrum { q: g.q, n: g.n, coeffs })
}

pub fn idft(s: &Spectrum) -> DensityTable {
    let mut values = s.coeffs.clone();
    transform(&mut values, s.q, s.n, 1.0, 1.0);
    DensityTable { q: s.q, n: s.n, values, mean1: false }
}

/// `χ_v(x) = ω^{<v,x>}`.
pub fn character(q: usize, v: &[usize]) -> Result<DensityTable> {
    let w = roots(q, 1.0);
    DensityTable::from_fn(q, v.len(), |x| {
        let dot: usize = x.iter().zip(v).map(|(a, b)| a * b).sum();
        w[dot % q]
    })
}

fn same_shape(f: &DensityTable, g: &DensityTable) -> Result<()> {
    if f.q != g.q || f.n != g.n {
        return Err(Error::invalid(format!(
            "shape mismatch: Z_{}^{} vs Z_{}^{}",
            f.q, f.n, g.q, g.n
        )));
    }
    Ok(())
}

/// `(f*g)(z) = E_x f(x)·g(z-x)`, by direct summation.
pub fn convolve(f: &DensityTable, g: &DensityTable) -> Result<DensityTable> {
    same_shape(f, g)?;
    let (q, n) = (f.q, f.n);
    let len = f.len();
    let digits: Vec<Vec<usize>> = (0..len).map(|i| decode(i, q, n)).collect();
    let mut values = vec![Complex64::new(0.0, 0.0); len];
    let mut diff = vec![0usize; n];
    for (zi, z) in digits.iter().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (xi, x) in digits.iter().enumerate() {
            for ((d, a), b) in diff.iter_mut().zip(z).zip(x) {
                *d = (a + q - b) % q;
            }
            acc += f.values[xi] * g.values[encode(&diff, q)];
        }
        values[zi] = acc / len as f64;
    }
    Ok(DensityTable { q, n, values, mean1: f.mean1 && g.mean1 })
}

/// Convolution through the coefficient product.
pub fn convolve_spectral(f: &DensityTable, g: &DensityTable) -> Result<DensityTable> {
    same_shape(f, g)?;
    let (a, b) = (dft(f)?, dft(g)?);
    let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x * y).collect();
    let mut out = idft(&Spectrum { q: f.q, n: f.n, coeffs });
    out.mean1 = f.mean1 && g.mean1;
    Ok(out)
}

/// `μ(x) = P(x)·q^N`.
pub fn density_from_dist(q: usize, n: usize, probs: &[f64]) -> Result<DensityTable> {
    let len = table_len(q, n, DEFAULT_CAP)?;
    if probs.len() != len {
        return Err(Error::invalid(format!("distribution has {} entries, expected {len}", probs.len())));
    }
    if probs.iter().any(|&p| p < 0.0) {
        return Err(Error::invalid("negative probability"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("probabilities sum to {total}")));
    }
    let values = probs.iter().map(|&p| Complex64::new(p * len as f64, 0.0)).collect();
    Ok(DensityTable { q, n, values, mean1: true })
}

/// Density of `Y^{⊗m}` for `Y` on `Z_q^k`, kept factorized.
#[derive(Debug, Clone)]
pub struct ProductDensity {
    pub row: DensityTable,
    pub row_spectrum: Spectrum,
    pub m: usize,
}

impl ProductDensity {
    pub fn new(row: DensityTable, m: usize) -> Result<Self> {
        row.check_density()?;
        let row_spectrum = dft(&row)?;
        Ok(ProductDensity { row, row_spectrum, m })
    }

    pub fn k(&self) -> usize {
        self.row.n
    }

    /// `Π_j μ̂_Y(U_j)` for a flattened `m×k` frequency.
    pub fn coefficient(&self, u: &[usize]) -> Complex64 {
        u.chunks(self.k()).map(|r| self.row_spectrum.at(r)).product()
    }

    pub fn coefficient_at_index(&self, idx: usize) -> Complex64 {
        let rowlen = self.row_spectrum.coeffs.len();
        let mut idx = idx;
        let mut acc = Complex64::new(1.0, 0.0);
        for _ in 0..self.m {
            acc *= self.row_spectrum.coeffs[idx % rowlen];
            idx /= rowlen;
        }
        acc
    }

    pub fn density(&self, x: &[usize]) -> f64 {
        x.chunks(self.k()).map(|r| self.row.at(r).re).product()
    }

    pub fn dense(&self, cap: u128) -> Result<DensityTable> {
        let n = self.m * self.k();
        let len = table_len(self.row.q, n, cap)?;
        let rowlen = self.row.len();
        let values = (0..len)
            .map(|mut i| {
                let mut acc = Complex64::new(1.0, 0.0);
                for _ in 0..self.m {
                    acc *= self.row.values[i % rowlen];
                    i /= rowlen;
                }
                acc
            })
            .collect();
        Ok(DensityTable { q: self.row.q, n, values, mean1: true })
    }

    pub fn spectrum(&self, cap: u128) -> Result<Spectrum> {
        let n = self.m * self.k();
        let len = table_len(self.row.q, n, cap)?;
        let coeffs = (0..len).map(|i| self.coefficient_at_index(i)).collect();
        Ok(Spectrum { q: self.row.q, n, coeffs })
    }
}

pub fn product_density(row: DensityTable, m: usize) -> Result<ProductDensity> {
    ProductDensity::new(row, m)
}

/// Statistics of a frequency matrix in `Z_q^{m×k}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyMatrix {
    pub q: usize,
    pub m: usize,
    pub k: usize,
    pub entries: Vec<usize>,
}

impl FrequencyMatrix {
    pub fn new(q: usize, m: usize, k: usize, entries: Vec<usize>) -> Result<Self> {
        if entries.len() != m * k || entries.iter().any(|&e| e >= q) {
            return Err(Error::invalid("frequency matrix shape or range"));
        }
        Ok(FrequencyMatrix { q, m, k, entries })
    }

    pub fn from_index(q: usize, m: usize, k: usize, idx: usize) -> Self {
        FrequencyMatrix { q, m, k, entries: decode(idx, q, m * k) }
    }

    pub fn row(&self, j: usize) -> &[usize] {
        &self.entries[j * self.k..(j + 1) * self.k]
    }

    pub fn row_support(&self, j: usize) -> usize {
        self.row(j).iter().filter(|&&e| e != 0).count()
    }

    pub fn wt(&self) -> usize {
        self.entries.iter().filter(|&&e| e != 0).count()
    }

    pub fn rwt(&self) -> usize {
        (0..self.m).filter(|&j| self.row_support(j) > 0).count()
    }

    pub fn singleton_rows(&self) -> usize {
        (0..self.m).filter(|&j| self.row_support(j) == 1).count()
    }

    pub fn singleton_free(&self) -> bool {
        self.singleton_rows() == 0
    }
}

/// Per-frequency `wt`, `rwt` and singleton-row counts for one `(q, m, k)`.
#[derive(Debug)]
pub struct FrequencyIndex {
    pub q: usize,
    pub m: usize,
    pub k: usize,
    pub wt: Vec<u16>,
    pub rwt: Vec<u16>,
    pub singletons: Vec<u16>,
}

static FREQ_CACHE: OnceLock<Mutex<HashMap<(usize, usize, usize), Arc<FrequencyIndex>>>> =
    OnceLock::new();

impl FrequencyIndex {
    pub fn get(q: usize, m: usize, k: usize) -> Result<Arc<FrequencyIndex>> {
        let len = table_len(q, m * k, FREQUENCY_CAP)?;
        let cache = FREQ_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(hit) = cache.lock().expect("cache lock").get(&(q, m, k)) {
            return Ok(hit.clone());
        }
        let mut idx = FrequencyIndex {
            q,
            m,
            k,
            wt: Vec::with_capacity(len),
            rwt: Vec::with_capacity(len),
            singletons: Vec::with_capacity(len),
        };
        for i in 0..len {
            let f = FrequencyMatrix::from_index(q, m, k, i);
            idx.wt.push(f.wt() as u16);
            idx.rwt.push(f.rwt() as u16);
            idx.singletons.push(f.singleton_rows() as u16);
        }
        let idx = Arc::new(idx);
        cache.lock().expect("cache lock").insert((q, m, k), idx.clone());
        Ok(idx)
    }

    pub fn len(&self) -> usize {
        self.wt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wt.is_empty()
    }

    pub fn singleton_free(&self, i: usize) -> bool {
        self.singletons[i] == 0
    }
}

/// Eigenvalue function of a Fourier multiplier on `Z_q^{m×k}`.
#[derive(Clone)]
pub enum MultiplierKind {
    /// `Λ*_ρ(U) = ρ^{rwt(U)}`.
    RowNoise,
    /// `Λ_ρ(U) = Π_j λ_ρ(U_j)`: 1 on a zero row, 0 on a singleton row,
    /// `ρ^{|supp U_j| - 1}` otherwise.
    Modified,
    Custom(Arc<dyn Fn(&FrequencyMatrix) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for MultiplierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MultiplierKind::RowNoise => write!(f, "RowNoise"),
            MultiplierKind::Modified => write!(f, "Modified"),
            MultiplierKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Multiplier {
    pub kind: MultiplierKind,
    pub rho: f64,
    pub m: usize,
    pub k: usize,
}

impl Multiplier {
    pub fn new(kind: MultiplierKind, rho: f64, m: usize, k: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) || rho.is_nan() {
            return Err(Error::invalid(format!("noise rate {rho} outside [0,1]")));
        }
        Ok(Multiplier { kind, rho, m, k })
    }

    pub fn row_noise(rho: f64, m: usize, k: usize) -> Result<Self> {
        Multiplier::new(MultiplierKind::RowNoise, rho, m, k)
    }

    pub fn modified(rho: f64, m: usize, k: usize) -> Result<Self> {
        Multiplier::new(MultiplierKind::Modified, rho, m, k)
    }

    pub fn eigenvalue(&self, u: &FrequencyMatrix) -> f64 {
        match &self.kind {
            MultiplierKind::RowNoise => self.rho.powi(u.rwt() as i32),
            MultiplierKind::Modified => match modified_exponent(u) {
                Some(e) => self.rho.powi(e as i32),
                None => 0.0,
            },
            MultiplierKind::Custom(f) => f(u),
        }
    }
}

/// The exponent `e` with `Λ_ρ(U) = ρ^e`, or `None` when a singleton row
/// makes the eigenvalue vanish.
pub fn modified_exponent(u: &FrequencyMatrix) -> Option<usize> {
    let mut e = 0;
    for j in 0..u.m {
        match u.row_support(j) {
            0 => {}
            1 => return None,
            s => e += s - 1,
        }
    }
    Some(e)
}

fn check_matrix_shape(g: &DensityTable, m: usize, k: usize) -> Result<()> {
    if g.n != m * k {
        return Err(Error::invalid(format!(
            "table over Z_q^{} cannot be read as {m}x{k} matrices",
            g.n
        )));
    }
    Ok(())
}

/// `T_Λ χ_U = Λ(U)·χ_U`.
pub fn apply_multiplier(g: &DensityTable, mult: &Multiplier) -> Result<DensityTable> {
    check_matrix_shape(g, mult.m, mult.k)?;
    let mut s = dft(g)?;
    for (i, c) in s.coeffs.iter_mut().enumerate() {
        let u = FrequencyMatrix::from_index(g.q, mult.m, mult.k, i);
        *c *= mult.eigenvalue(&u);
    }
    Ok(idft(&s))
}

/// `(T*_ρ g)(X) = E_{Y} g(X - Y)` with each row of `Y` equal to 0 with
/// probability `ρ` and uniform otherwise; applied one row at a time.
pub fn row_noise_direct(g: &DensityTable, rho: f64, m: usize, k: usize) -> Result<DensityTable> {
    check_matrix_shape(g, m, k)?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid(format!("noise rate {rho} outside [0,1]")));
    }
    let q = g.q;
    let rowlen = q.pow(k as u32);
    let mut values = g.values.clone();
    for j in 0..m {
        // Row j occupies a contiguous digit range; its stride is the size of
        // the rows after it.
        let stride = rowlen.pow((m - 1 - j) as u32);
        let block = stride * rowlen;
        for base in (0..values.len()).step_by(block) {
            for off in 0..stride {
                let avg: Complex64 = (0..rowlen)
                    .map(|r| values[base + off + r * stride])
                    .sum::<Complex64>()
                    / rowlen as f64;
                for r in 0..rowlen {
                    let v = &mut values[base + off + r * stride];
                    *v = *v * rho + avg * (1.0 - rho);
                }
            }
        }
    }
    Ok(DensityTable { q, n: g.n, values, mean1: g.mean1 })
}

/// `ρ = √(p-1)·Q^{1/2 - 1/p}`, `Q = q^k`.
pub fn hypercontractive_rho(p: f64, q: usize, k: usize) -> f64 {
    let big_q = (q as f64).powi(k as i32);
    (p - 1.0).sqrt() * big_q.powf(0.5 - 1.0 / p)
}

/// `(E|g|^p)^{1/p}`; `p = ∞` gives the max.
pub fn norm_p(g: &DensityTable, p: f64) -> f64 {
    if p.is_infinite() {
        return g.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    let s: f64 = g.values.iter().map(|v| v.norm().powf(p)).sum();
    (s / g.len() as f64).powf(1.0 / p)
}

/// `|‖g‖₂² - Σ|ĝ|²|`.
pub fn parseval(g: &DensityTable) -> Result<f64> {
    let s = dft(g)?;
    let lhs = norm_p(g, 2.0).powi(2);
    let rhs: f64 = s.coeffs.iter().map(|c| c.norm_sqr()).sum();
    Ok((lhs - rhs).abs())
}

/// `g∘Π_S`: a table on the coordinates `s` extended to `Z_q^n`.
pub fn extend_from_coordinates(g: &DensityTable, s: &[usize], n: usize) -> Result<DensityTable> {
    if s.len() != g.n || s.iter().any(|&c| c >= n) {
        return Err(Error::invalid("coordinate list does not match the table"));
    }
    let q = g.q;
    DensityTable::from_fn(q, n, |x| {
        let sub: Vec<usize> = s.iter().map(|&c| x[c]).collect();
        g.at(&sub)
    })
}

/// Density of `Πx` when `x` has density `g`, where
/// `(Πx)_i = Σ_{σ(j) = i} x_j` and coordinates with `σ(j) = None` are dropped.
pub fn pushforward_linear(
    g: &DensityTable,
    sigma: &[Option<usize>],
    n_out: usize,
) -> Result<DensityTable> {
    if sigma.len() != g.n || sigma.iter().flatten().any(|&i| i >= n_out) {
        return Err(Error::invalid("coordinate map does not match the table"));
    }
    let q = g.q;
    let out_len = table_len(q, n_out, DEFAULT_CAP)?;
    let mut values = vec![Complex64::new(0.0, 0.0); out_len];
    let mut y = vec![0usize; n_out];
    for (i, v) in g.values.iter().enumerate() {
        let x = decode(i, q, g.n);
        y.iter_mut().for_each(|c| *c = 0);
        for (j, s) in sigma.iter().enumerate() {
            if let Some(t) = s {
                y[*t] = (y[*t] + x[j]) % q;
            }
        }
        values[encode(&y, q)] += *v;
    }
    let scale = out_len as f64 / g.len() as f64;
    for v in values.iter_mut() {
        *v *= scale;
    }
    Ok(DensityTable { q, n: n_out, values, mean1: g.mean1 })
}

/// `(Πᵀu)_j = u_{σ(j)}`, zero on dropped coordinates.
pub fn transpose_frequency(u: &[usize], sigma: &[Option<usize>]) -> Vec<usize> {
    sigma.iter().map(|s| s.map_or(0, |i| u[i])).collect()
}

/// Integer polynomials, lowest degree first.
type Poly = Vec<i64>;

fn trim(p: &mut Poly) {
    while p.len() > 1 && *p.last().unwrap() == 0 {
        p.pop();
    }
}

/// Remainder and quotient of `a / b` for monic `b`.
fn poly_divmod(a: &Poly, b: &Poly) -> (Poly, Poly) {
    let mut r = a.clone();
    trim(&mut r);
    let db = b.len() - 1;
    debug_assert_eq!(*b.last().unwrap(), 1);
    if r.len() <= db {
        return (vec![0], r);
    }
    let mut quot = vec![0i64; r.len() - db];
    for i in (db..r.len()).rev() {
        let c = r[i];
        if c == 0 {
            continue;
        }
        quot[i - db] = c;
        for (j, bj) in b.iter().enumerate() {
            r[i - db + j] -= c * bj;
        }
    }
    r.truncate(db.max(1));
    trim(&mut r);
    (quot, r)
}

pub fn cyclotomic(n: usize) -> Vec<i64> {
    let mut p: Poly = vec![0; n + 1];
    p[0] = -1;
    p[n] = 1;
    for d in 1..n {
        if n.is_multiple_of(d) {
            let (quot, rem) = poly_divmod(&p, &cyclotomic(d));
            debug_assert!(rem.iter().all(|&c| c == 0));
            p = quot;
            trim(&mut p);
        }
    }
    p
}

/// Exact check that `Σ_b ω^{u·b} = 0` for `u ≢ 0 (mod q)`: the polynomial
/// `Σ_b x^{u·b mod q}` is divisible by the `q`-th cyclotomic polynomial.
pub fn root_sum_vanishes_exact(q: usize, u: usize) -> bool {
    let mut s: Poly = vec![0; q];
    for b in 0..q {
        s[(u * b) % q] += 1;
    }
    let (_, rem) = poly_divmod(&s, &cyclotomic(q));
    rem.iter().all(|&c| c == 0)
}
