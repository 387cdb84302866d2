//! Finite distributions, entropies in bits, convolutions over GF(q), and robust
//! frequency typicality.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{self, check_modulus};

pub const PMF_TOL: f64 = 1e-12;
/// Slack added to every typicality comparison so that exact-frequency ties are
/// not lost to rounding.
pub const TYP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf(Vec<f64>);

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;
    fn try_from(p: Vec<f64>) -> Result<Self> {
        Pmf::new(p)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Vec<f64> {
        p.0
    }
}

fn check_probs(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidPmf("empty alphabet".into()));
    }
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidPmf(format!("entry {x} is not a probability")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > PMF_TOL * p.len().max(4) as f64 {
        return Err(Error::InvalidPmf(format!("entries sum to {s}")));
    }
    Ok(())
}

pub fn h_of(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum::<f64>()
}

/// Binary entropy function in bits.
pub fn hb(p: f64) -> f64 {
    h_of(&[p, 1.0 - p])
}

impl Pmf {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        check_probs(&p)?;
        Ok(Pmf(p))
    }
    pub fn uniform(a: usize) -> Self {
        Pmf(vec![1.0 / a as f64; a])
    }
    pub fn point_mass(a: usize, at: usize) -> Self {
        let mut p = vec![0.0; a];
        p[at] = 1.0;
        Pmf(p)
    }
    pub fn bernoulli(p1: f64) -> Result<Self> {
        Pmf::new(vec![1.0 - p1, p1])
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn probs(&self) -> &[f64] {
        &self.0
    }
    pub fn entropy(&self) -> f64 {
        h_of(&self.0)
    }
    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.len() as f64;
        self.0.iter().all(|&x| (x - u).abs() <= PMF_TOL)
    }
    pub fn sample_seq<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u8> {
        let d = WeightedIndex::new(&self.0).expect("validated pmf");
        (0..n).map(|_| d.sample(rng) as u8).collect()
    }
}

pub fn entropy(p: &Pmf) -> f64 {
    p.entropy()
}

fn field_of(p: &Pmf) -> Result<u16> {
    let q = p.len() as u16;
    check_modulus(q).map_err(|_| Error::InvalidPmf(format!("alphabet of size {} is not a prime field", p.len())))?;
    Ok(q)
}

/// Distribution of the GF(q)-sum of l i.i.d. copies.
pub fn convolve_power(p: &Pmf, l: usize) -> Result<Pmf> {
    let q = field_of(p)?;
    if l == 0 {
        return Err(Error::InvalidArgument("l must be at least 1".into()));
    }
    let mut acc = p.0.clone();
    for _ in 1..l {
        let mut next = vec![0.0; q as usize];
        for (a, &pa) in acc.iter().enumerate() {
            for (b, &pb) in p.0.iter().enumerate() {
                next[field::add(a as u8, b as u8, q) as usize] += pa * pb;
            }
        }
        acc = next;
    }
    Ok(Pmf(acc))
}

/// Distribution of αU + βW for independent U ~ p1, W ~ p2.
pub fn linear_combo_pmf(alpha: u8, p1: &Pmf, beta: u8, p2: &Pmf) -> Result<Pmf> {
    let q = field_of(p1)?;
    let q2 = field_of(p2)?;
    if q != q2 {
        return Err(Error::ModulusMismatch(q, q2));
    }
    if alpha as u16 >= q || beta as u16 >= q {
        return Err(Error::InvalidArgument(format!("coefficients must lie in GF({q})")));
    }
    let mut out = vec![0.0; q as usize];
    for (u, &pu) in p1.0.iter().enumerate() {
        for (w, &pw) in p2.0.iter().enumerate() {
            let s = field::add(field::mul(alpha, u as u8, q), field::mul(beta, w as u8, q), q);
            out[s as usize] += pu * pw;
        }
    }
    Ok(Pmf(out))
}

/// Joint distribution over a product of finite alphabets, row-major (last
/// component varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJoint")]
pub struct JointPmf {
    dims: Vec<usize>,
    p: Vec<f64>,
}

#[derive(Deserialize)]
struct RawJoint {
    dims: Vec<usize>,
    p: Vec<f64>,
}

impl TryFrom<RawJoint> for JointPmf {
    type Error = Error;
    fn try_from(r: RawJoint) -> Result<Self> {
        JointPmf::new(r.dims, r.p)
    }
}

impl JointPmf {
    pub fn new(dims: Vec<usize>, p: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidPmf("component alphabets must be nonempty".into()));
        }
        let size: usize = dims.iter().product();
        if size != p.len() {
            return Err(Error::InvalidPmf(format!("{} entries for alphabet size {size}", p.len())));
        }
        check_probs(&p)?;
        Ok(JointPmf { dims, p })
    }

    pub fn from_fn(dims: Vec<usize>, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let size: usize = dims.iter().product();
        let mut coords = vec![0; dims.len()];
        let p = (0..size)
            .map(|i| {
                unflatten(i, &dims, &mut coords);
                f(&coords)
            })
            .collect();
        JointPmf::new(dims, p)
    }

    pub fn product(parts: &[&Pmf]) -> Self {
        let dims: Vec<usize> = parts.iter().map(|p| p.len()).collect();
        JointPmf::from_fn(dims, |c| c.iter().zip(parts).map(|(&x, p)| p.0[x]).product())
            .expect("product of valid pmfs")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    pub fn probs(&self) -> &[f64] {
        &self.p
    }
    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    pub fn prob(&self, coords: &[usize]) -> f64 {
        self.p[flatten(coords, &self.dims)]
    }

    fn check_components(&self, comps: &[usize]) -> Result<()> {
        for (i, &c) in comps.iter().enumerate() {
            if c >= self.dims.len() || comps[..i].contains(&c) {
                return Err(Error::InvalidArgument(format!("invalid component list {comps:?}")));
            }
        }
        Ok(())
    }

    /// Marginal on the listed components, in the listed order.
    pub fn marginal(&self, comps: &[usize]) -> Result<JointPmf> {
        self.check_components(comps)?;
        if comps.is_empty() {
            return Ok(JointPmf { dims: vec![1], p: vec![1.0] });
        }
        let dims: Vec<usize> = comps.iter().map(|&c| self.dims[c]).collect();
        let mut out = vec![0.0; dims.iter().product()];
        let mut coords = vec![0; self.dims.len()];
        let mut sub = vec![0; comps.len()];
        for (i, &pi) in self.p.iter().enumerate() {
            unflatten(i, &self.dims, &mut coords);
            for (s, &c) in sub.iter_mut().zip(comps) {
                *s = coords[c];
            }
            out[flatten(&sub, &dims)] += pi;
        }
        Ok(JointPmf { dims, p: out })
    }

    pub fn to_pmf(&self) -> Result<Pmf> {
        if self.dims.len() != 1 {
            return Err(Error::InvalidArgument("not a single-component distribution".into()));
        }
        Ok(Pmf(self.p.clone()))
    }

    pub fn entropy_of(&self, comps: &[usize]) -> Result<f64> {
        Ok(h_of(&self.marginal(comps)?.p))
    }

    pub fn entropy(&self) -> f64 {
        h_of(&self.p)
    }

    /// Append a component that is a deterministic function of the existing ones.
    pub fn extend(&self, alphabet: usize, f: impl Fn(&[usize]) -> usize) -> Result<JointPmf> {
        let mut dims = self.dims.clone();
        dims.push(alphabet);
        let mut p = vec![0.0; self.p.len() * alphabet];
        let mut coords = vec![0; self.dims.len()];
        for (i, &pi) in self.p.iter().enumerate() {
            unflatten(i, &self.dims, &mut coords);
            let v = f(&coords);
            if v >= alphabet {
                return Err(Error::InvalidArgument(format!("derived value {v} outside alphabet {alphabet}")));
            }
            p[i * alphabet + v] += pi;
        }
        Ok(JointPmf { dims, p })
    }

    pub fn sample_seqs<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<u8>> {
        let d = WeightedIndex::new(&self.p).expect("validated pmf");
        let mut out = vec![Vec::with_capacity(n); self.dims.len()];
        let mut coords = vec![0; self.dims.len()];
        for _ in 0..n {
            unflatten(d.sample(rng), &self.dims, &mut coords);
            for (o, &c) in out.iter_mut().zip(&coords) {
                o.push(c as u8);
            }
        }
        out
    }
}

pub fn conditional_entropy(j: &JointPmf, targets: &[usize], given: &[usize]) -> Result<f64> {
    if targets.iter().any(|t| given.contains(t)) {
        return Err(Error::InvalidArgument("target and conditioning components overlap".into()));
    }
    let all: Vec<usize> = targets.iter().chain(given).copied().collect();
    Ok(j.entropy_of(&all)? - j.entropy_of(given)?)
}

pub fn flatten(coords: &[usize], dims: &[usize]) -> usize {
    coords.iter().zip(dims).fold(0, |acc, (&c, &d)| acc * d + c)
}

pub fn unflatten(mut i: usize, dims: &[usize], out: &mut [usize]) {
    for (o, &d) in out.iter_mut().zip(dims).rev() {
        *o = i % d;
        i /= d;
    }
}

// ---------------------------------------------------------------- typicality

#[inline]
pub fn freq_ok(count: usize, n: usize, p: f64, eps: f64) -> bool {
    if p == 0.0 {
        count == 0
    } else {
        (count as f64 / n as f64 - p).abs() <= eps + TYP_TOL
    }
}

/// Inclusive count window [lo, hi] per letter; an empty window has lo > hi.
pub fn count_window(n: usize, p: &[f64], eps: f64) -> Vec<(usize, usize)> {
    p.iter()
        .map(|&pa| {
            let ok: Vec<usize> = (0..=n).filter(|&c| freq_ok(c, n, pa, eps)).collect();
            match (ok.first(), ok.last()) {
                (Some(&lo), Some(&hi)) => (lo, hi),
                _ => (1, 0),
            }
        })
        .collect()
}

pub fn counts_typical(counts: &[usize], n: usize, p: &[f64], eps: f64) -> bool {
    counts.iter().zip(p).all(|(&c, &pa)| freq_ok(c, n, pa, eps))
}

pub fn is_typical(seq: &[u8], p: &Pmf, eps: f64) -> bool {
    let mut counts = vec![0usize; p.len()];
    for &s in seq {
        match counts.get_mut(s as usize) {
            Some(c) => *c += 1,
            None => return false,
        }
    }
    counts_typical(&counts, seq.len(), &p.0, eps)
}

/// Joint typicality of a tuple of sequences (one per component of `j`).
pub fn is_jointly_typical(seqs: &[&[u8]], j: &JointPmf, eps: f64) -> Result<bool> {
    if seqs.len() != j.arity() {
        return Err(Error::Dimension(format!("{} sequences for a {}-component joint", seqs.len(), j.arity())));
    }
    let n = seqs[0].len();
    if seqs.iter().any(|s| s.len() != n) {
        return Err(Error::Dimension("sequences differ in length".into()));
    }
    let mut counts = vec![0usize; j.p.len()];
    let mut coords = vec![0usize; seqs.len()];
    for t in 0..n {
        for (c, (s, &d)) in coords.iter_mut().zip(seqs.iter().zip(&j.dims)) {
            if s[t] as usize >= d {
                return Ok(false);
            }
            *c = s[t] as usize;
        }
        counts[flatten(&coords, &j.dims)] += 1;
    }
    Ok(counts_typical(&counts, n, &j.p, eps))
}

/// All typical count vectors (types) of length-k sequences, lexicographic.
pub fn typical_types(k: usize, p: &Pmf, eps: f64) -> Vec<Vec<usize>> {
    let win = count_window(k, &p.0, eps);
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(win.len());
    fn rec(win: &[(usize, usize)], left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let i = cur.len();
        if i == win.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let (lo, hi) = win[i];
        let rest_min: usize = win[i + 1..].iter().map(|w| w.0).sum();
        let rest_max: usize = win[i + 1..].iter().map(|w| w.1).sum();
        for c in lo..=hi.min(left) {
            let r = left - c;
            if r >= rest_min && r <= rest_max {
                cur.push(c);
                rec(win, r, cur, out);
                cur.pop();
            }
        }
    }
    if win.iter().all(|&(lo, hi)| lo <= hi) {
        rec(&win, k, &mut cur, &mut out);
    }
    out
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

fn log2_multinomial(counts: &[usize]) -> f64 {
    let k: usize = counts.iter().sum();
    (ln_factorial(k) - counts.iter().map(|&c| ln_factorial(c)).sum::<f64>()) / std::f64::consts::LN_2
}

/// Exact number of typical sequences as f64 (exact below 2^53).
pub fn typical_count(k: usize, p: &Pmf, eps: f64) -> f64 {
    typical_types(k, p, eps).iter().map(|t| log2_multinomial(t).exp2().round()).sum()
}

/// log₂ of the typical-set size; −∞ when empty.
pub fn typical_log_size(k: usize, p: &Pmf, eps: f64) -> f64 {
    typical_count(k, p, eps).log2()
}

/// Visit every typical sequence in lexicographic order.
pub fn for_each_typical(k: usize, p: &Pmf, eps: f64, mut f: impl FnMut(&[u8])) {
    let win = count_window(k, &p.0, eps);
    if win.iter().any(|&(lo, hi)| lo > hi) {
        return;
    }
    let a = win.len();
    let mut counts = vec![0usize; a];
    let mut seq = vec![0u8; k];
    fn feasible(win: &[(usize, usize)], counts: &[usize], rem: usize) -> bool {
        let need: usize = win.iter().zip(counts).map(|(w, &c)| w.0.saturating_sub(c)).sum();
        let room: usize = win.iter().zip(counts).map(|(w, &c)| w.1.saturating_sub(c)).sum();
        need <= rem && rem <= room
    }
    fn rec(
        pos: usize,
        win: &[(usize, usize)],
        counts: &mut [usize],
        seq: &mut [u8],
        f: &mut dyn FnMut(&[u8]),
    ) {
        let k = seq.len();
        if pos == k {
            f(seq);
            return;
        }
        for s in 0..win.len() {
            if counts[s] < win[s].1 {
                counts[s] += 1;
                if feasible(win, counts, k - pos - 1) {
                    seq[pos] = s as u8;
                    rec(pos + 1, win, counts, seq, f);
                }
                counts[s] -= 1;
            }
        }
    }
    if feasible(&win, &counts, k) {
        rec(0, &win, &mut counts, &mut seq, &mut f);
    }
}

pub fn enumerate_typical(k: usize, p: &Pmf, eps: f64, cap: u64) -> Result<Vec<Vec<u8>>> {
    let size = typical_count(k, p, eps);
    if size > cap as f64 {
        return Err(Error::CapExceeded { what: format!("typical set at k={k}"), needed: size, cap });
    }
    let mut out = Vec::with_capacity(size as usize);
    for_each_typical(k, p, eps, |s| out.push(s.to_vec()));
    Ok(out)
}

/// Rejection sampler used when enumeration is out of reach.
pub fn sample_typical<R: Rng + ?Sized>(k: usize, p: &Pmf, eps: f64, rng: &mut R, max_tries: usize) -> Option<Vec<u8>> {
    (0..max_tries).map(|_| p.sample_seq(k, rng)).find(|s| is_typical(s, p, eps))
}
