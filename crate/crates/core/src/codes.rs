//! Coset codes, quasi-linear codes and nested pairs, materialised as sorted
//! sets of packed codewords.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::{self, AffineSpace, FieldMatrix, FieldVec};
use crate::prob::{self, Pmf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Caps {
    /// Largest codeword or index set that may be materialised.
    pub set: u64,
    /// Largest number of pairwise operations in one sumset.
    pub pair_ops: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { set: 1 << 24, pair_ops: 1 << 28 }
    }
}

impl Caps {
    pub fn check_set(&self, what: &str, needed: f64) -> Result<()> {
        if needed > self.set as f64 {
            Err(Error::CapExceeded { what: what.into(), needed, cap: self.set })
        } else {
            Ok(())
        }
    }
    fn check_pairs(&self, what: &str, needed: f64) -> Result<()> {
        if needed > self.pair_ops as f64 {
            Err(Error::CapExceeded { what: what.into(), needed, cap: self.pair_ops })
        } else {
            Ok(())
        }
    }
}

/// Base-q words of length n packed into a u64, symbol 0 in the most
/// significant lane so that numeric order is lexicographic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packing {
    pub q: u16,
    pub n: usize,
    bits: u32,
}

impl Packing {
    pub fn new(q: u16, n: usize) -> Result<Self> {
        field::check_modulus(q)?;
        let bits = 16 - (q - 1).leading_zeros();
        if n == 0 || n * bits as usize > 64 {
            return Err(Error::InvalidArgument(format!("blocklength {n} over GF({q}) does not fit a 64-bit word")));
        }
        Ok(Packing { q, n, bits })
    }

    pub fn word_bits(&self) -> u32 {
        self.n as u32 * self.bits
    }

    #[inline]
    fn shift(&self, i: usize) -> u32 {
        (self.n - 1 - i) as u32 * self.bits
    }

    #[inline]
    pub fn symbol(&self, w: u64, i: usize) -> u8 {
        ((w >> self.shift(i)) & ((1 << self.bits) - 1)) as u8
    }

    pub fn pack(&self, s: &[u8]) -> u64 {
        s.iter().fold(0u64, |acc, &x| (acc << self.bits) | x as u64)
    }

    pub fn unpack(&self, w: u64) -> Vec<u8> {
        (0..self.n).map(|i| self.symbol(w, i)).collect()
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        if self.q == 2 {
            return a ^ b;
        }
        let mask = (1u64 << self.bits) - 1;
        let q = self.q as u64;
        let mut out = 0u64;
        for lane in 0..self.n {
            let s = lane as u32 * self.bits;
            let mut v = ((a >> s) & mask) + ((b >> s) & mask);
            if v >= q {
                v -= q;
            }
            out |= v << s;
        }
        out
    }

    pub fn scale(&self, alpha: u8, a: u64) -> u64 {
        match alpha {
            0 => 0,
            1 => a,
            _ => {
                let mask = (1u64 << self.bits) - 1;
                let mut out = 0u64;
                for lane in 0..self.n {
                    let s = lane as u32 * self.bits;
                    out |= (field::mul(alpha, ((a >> s) & mask) as u8, self.q) as u64) << s;
                }
                out
            }
        }
    }

    /// Per-symbol position masks: bit (n−1−i) of `out[a]` is set iff symbol i equals a.
    pub fn masks(&self, w: u64, out: &mut [u64]) {
        out.iter_mut().for_each(|m| *m = 0);
        if self.q == 2 {
            let full = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
            out[0] = !w & full;
            out[1] = w;
            return;
        }
        for i in 0..self.n {
            out[self.symbol(w, i) as usize] |= 1 << (self.n - 1 - i);
        }
    }
}

/// Position masks of an arbitrary symbol sequence, in the same bit convention as [`Packing::masks`].
pub fn seq_masks(seq: &[u8], alphabet: usize) -> Vec<u64> {
    let n = seq.len();
    let mut out = vec![0u64; alphabet];
    for (i, &s) in seq.iter().enumerate() {
        out[s as usize] |= 1 << (n - 1 - i);
    }
    out
}

/// A deduplicated, sorted set of packed codewords.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSet {
    pub packing: Packing,
    words: Vec<u64>,
}

impl CodeSet {
    pub fn from_words(packing: Packing, mut words: Vec<u64>) -> Self {
        words.sort_unstable();
        words.dedup();
        CodeSet { packing, words }
    }

    pub fn from_vecs(packing: Packing, vecs: &[Vec<u8>]) -> Self {
        CodeSet::from_words(packing, vecs.iter().map(|v| packing.pack(v)).collect())
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
    pub fn len(&self) -> usize {
        self.words.len()
    }
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
    pub fn q(&self) -> u16 {
        self.packing.q
    }
    pub fn n(&self) -> usize {
        self.packing.n
    }
    pub fn contains(&self, w: u64) -> bool {
        self.words.binary_search(&w).is_ok()
    }
    /// (1/n) log₂ |C|.
    pub fn rate(&self) -> f64 {
        (self.len() as f64).log2() / self.n() as f64
    }
    pub fn to_vecs(&self) -> Vec<Vec<u8>> {
        self.words.iter().map(|&w| self.packing.unpack(w)).collect()
    }
    pub fn shift(&self, b: u64) -> CodeSet {
        let p = self.packing;
        CodeSet::from_words(p, self.words.iter().map(|&w| p.add(w, b)).collect())
    }
    pub fn scaled(&self, alpha: u8) -> CodeSet {
        let p = self.packing;
        CodeSet::from_words(p, self.words.iter().map(|&w| p.scale(alpha, w)).collect())
    }

    pub fn export_text(&self) -> String {
        let mut s = format!("q={} n={} count={}\n", self.q(), self.n(), self.len());
        for v in self.to_vecs() {
            if self.q() <= 10 {
                v.iter().for_each(|d| s.push((b'0' + d) as char));
            } else {
                let parts: Vec<String> = v.iter().map(|d| d.to_string()).collect();
                s.push_str(&parts.join(" "));
            }
            s.push('\n');
        }
        s
    }

    pub fn import_text(text: &str) -> Result<CodeSet> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Config("empty codebook file".into()))?;
        let (mut q, mut n, mut count) = (None, None, None);
        for kv in header.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("bad header field {kv}")))?;
            let v: u64 = v.parse().map_err(|_| Error::Config(format!("bad header value {kv}")))?;
            match k {
                "q" => q = Some(v as u16),
                "n" => n = Some(v as usize),
                "count" => count = Some(v as usize),
                _ => return Err(Error::Config(format!("unknown header field {k}"))),
            }
        }
        let (q, n, count) = match (q, n, count) {
            (Some(q), Some(n), Some(c)) => (q, n, c),
            _ => return Err(Error::Config("header needs q, n and count".into())),
        };
        let packing = Packing::new(q, n)?;
        let mut vecs = Vec::with_capacity(count);
        for line in lines {
            let v: Vec<u8> = if q <= 10 {
                line.trim().bytes().map(|b| b.wrapping_sub(b'0')).collect()
            } else {
                line.split_whitespace().map(|t| t.parse().unwrap_or(u8::MAX)).collect()
            };
            if v.len() != n || v.iter().any(|&d| d as u16 >= q) {
                return Err(Error::Config(format!("bad codeword line {line:?}")));
            }
            vecs.push(v);
        }
        if vecs.len() != count {
            return Err(Error::Config(format!("header says {count} codewords, found {}", vecs.len())));
        }
        Ok(CodeSet::from_vecs(packing, &vecs))
    }
}

fn check_same(a: &CodeSet, b: &CodeSet) -> Result<()> {
    if a.q() != b.q() {
        return Err(Error::ModulusMismatch(a.q(), b.q()));
    }
    if a.n() != b.n() {
        return Err(Error::Dimension(format!("blocklengths {} and {}", a.n(), b.n())));
    }
    Ok(())
}

/// Word spaces up to this many bits use a dense bitmap for set unions.
const BITMAP_BITS: u32 = 28;

/// {α·a + β·b : a ∈ A, b ∈ B}, deduplicated.
pub fn scaled_sum(alpha: u8, a: &CodeSet, beta: u8, b: &CodeSet, caps: &Caps, exec: Exec) -> Result<CodeSet> {
    check_same(a, b)?;
    let p = a.packing;
    if alpha as u16 >= p.q || beta as u16 >= p.q {
        return Err(Error::InvalidArgument(format!("coefficients must lie in GF({})", p.q)));
    }
    let sa = if alpha == 1 { a.clone() } else { a.scaled(alpha) };
    let sb = if beta == 1 { b.clone() } else { b.scaled(beta) };
    caps.check_pairs("sumset pair operations", sa.len() as f64 * sb.len() as f64)?;
    let (outer, inner) = if sa.len() >= sb.len() { (&sa, &sb) } else { (&sb, &sa) };
    let chunk = (outer.len() / 256).max(1);
    let out = if p.word_bits() <= BITMAP_BITS {
        let bitmap: Vec<AtomicU64> = (0..(1usize << p.word_bits()).div_ceil(64)).map(|_| AtomicU64::new(0)).collect();
        exec.map_chunks(outer.words(), chunk, |ws| {
            for &x in ws {
                for &y in inner.words() {
                    let s = p.add(x, y);
                    bitmap[(s >> 6) as usize].fetch_or(1 << (s & 63), Ordering::Relaxed);
                }
            }
        });
        let mut words = Vec::new();
        for (i, cell) in bitmap.iter().enumerate() {
            let mut m = cell.load(Ordering::Relaxed);
            while m != 0 {
                words.push(((i as u64) << 6) | m.trailing_zeros() as u64);
                m &= m - 1;
            }
        }
        words
    } else {
        let parts = exec.map_chunks(outer.words(), chunk, |ws| {
            let mut v: Vec<u64> = ws.iter().flat_map(|&x| inner.words().iter().map(move |&y| p.add(x, y))).collect();
            v.sort_unstable();
            v.dedup();
            v
        });
        parts.concat()
    };
    caps.check_set("sumset size", out.len() as f64)?;
    Ok(CodeSet::from_words(p, out))
}

pub fn sumset(a: &CodeSet, b: &CodeSet, caps: &Caps, exec: Exec) -> Result<CodeSet> {
    scaled_sum(1, a, 1, b, caps, exec)
}

/// l-fold Minkowski sum C + … + C.
pub fn sumset_l_copies(c: &CodeSet, l: usize, caps: &Caps, exec: Exec) -> Result<CodeSet> {
    if l == 0 {
        return Err(Error::InvalidArgument("l must be at least 1".into()));
    }
    let mut acc = c.clone();
    for _ in 1..l {
        acc = sumset(&acc, c, caps, exec)?;
    }
    Ok(acc)
}

/// Packed rows of G and their nonzero multiples: `table[j][a]` = a·g_j.
fn row_table(g: &FieldMatrix, p: &Packing) -> Vec<Vec<u64>> {
    (0..g.rows())
        .map(|j| {
            let w = p.pack(g.row(j));
            (0..p.q).map(|a| p.scale(a as u8, w)).collect()
        })
        .collect()
}

fn encode_packed(u: &[u8], table: &[Vec<u64>], p: &Packing) -> u64 {
    u.iter().zip(table).filter(|(&a, _)| a != 0).fold(0, |acc, (&a, row)| p.add(acc, row[a as usize]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosetCodeSpec {
    pub g: FieldMatrix,
    pub b: FieldVec,
}

impl CosetCodeSpec {
    pub fn new(g: FieldMatrix, b: FieldVec) -> Result<Self> {
        if g.modulus() != b.modulus() {
            return Err(Error::ModulusMismatch(g.modulus(), b.modulus()));
        }
        if g.cols() != b.len() {
            return Err(Error::Dimension(format!("G has {} columns, b has {} symbols", g.cols(), b.len())));
        }
        Ok(CosetCodeSpec { g, b })
    }
    pub fn random<R: Rng + ?Sized>(k: usize, n: usize, q: u16, rng: &mut R) -> Result<Self> {
        let g = field::random_matrix(k, n, q, rng)?;
        let b = field::random_vec(n, q, rng)?;
        CosetCodeSpec::new(g, b)
    }
    pub fn affine_space(&self) -> AffineSpace {
        AffineSpace::new(self.b.as_slice().to_vec(), &self.g.row_vecs(), self.g.modulus())
    }
}

/// Image of the linear map u ↦ uG over u ∈ 𝔽_q^k, deduplicated.
fn span(g: &FieldMatrix, p: &Packing) -> Vec<u64> {
    let mut set = vec![0u64];
    for row in row_table(g, p) {
        if row[1] == 0 {
            continue;
        }
        let mut next = Vec::with_capacity(set.len() * p.q as usize);
        for &mult in &row {
            next.extend(set.iter().map(|&w| p.add(w, mult)));
        }
        next.sort_unstable();
        next.dedup();
        set = next;
    }
    set
}

pub fn materialize_coset(spec: &CosetCodeSpec, caps: &Caps) -> Result<CodeSet> {
    let q = spec.g.modulus();
    let p = Packing::new(q, spec.g.cols())?;
    caps.check_set("coset code size", (q as f64).powi(spec.g.rank() as i32))?;
    Ok(CodeSet::from_words(p, span(&spec.g, &p)).shift(p.pack(spec.b.as_slice())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QlcComponent {
    pub pmf: Pmf,
    pub g: FieldMatrix,
}

impl QlcComponent {
    pub fn k(&self) -> usize {
        self.g.rows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QlcSpec {
    pub q: u16,
    pub n: usize,
    pub eps: f64,
    pub components: Vec<QlcComponent>,
    pub dither: FieldVec,
}

impl QlcSpec {
    pub fn validate(&self) -> Result<()> {
        field::check_modulus(self.q)?;
        if self.components.is_empty() {
            return Err(Error::InvalidArgument("a QLC needs at least one component".into()));
        }
        if self.eps <= 0.0 {
            return Err(Error::InvalidArgument("typicality eps must be positive".into()));
        }
        if self.dither.len() != self.n || self.dither.modulus() != self.q {
            return Err(Error::Dimension("dither does not match (q, n)".into()));
        }
        for (i, c) in self.components.iter().enumerate() {
            if c.g.modulus() != self.q || c.g.cols() != self.n {
                return Err(Error::Dimension(format!("component {i}: generator shape/modulus mismatch")));
            }
            if c.pmf.len() != self.q as usize {
                return Err(Error::InvalidPmf(format!("component {i}: index pmf must live on GF({})", self.q)));
            }
        }
        Ok(())
    }

    /// Σ (k_i/n) H(U_i) in bits.
    pub fn nominal_rate(&self) -> f64 {
        self.components.iter().map(|c| c.k() as f64 / self.n as f64 * c.pmf.entropy()).sum()
    }

    /// Draw fresh generators and dither for the given (k_i, U_i) list.
    pub fn random<R: Rng + ?Sized>(q: u16, n: usize, eps: f64, comps: &[(usize, Pmf)], rng: &mut R) -> Result<Self> {
        let components = comps
            .iter()
            .map(|(k, pmf)| Ok(QlcComponent { pmf: pmf.clone(), g: field::random_matrix(*k, n, q, rng)? }))
            .collect::<Result<Vec<_>>>()?;
        let dither = field::random_vec(n, q, rng)?;
        let spec = QlcSpec { q, n, eps, components, dither };
        spec.validate()?;
        Ok(spec)
    }
}

/// {uG : u ∈ A_ε^k(U)}, deduplicated.
pub fn typical_image(g: &FieldMatrix, pmf: &Pmf, eps: f64, component: usize, caps: &Caps) -> Result<CodeSet> {
    let p = Packing::new(g.modulus(), g.cols())?;
    let k = g.rows();
    let count = prob::typical_count(k, pmf, eps);
    if count == 0.0 {
        return Err(Error::EmptyTypicalSet { component, k, eps });
    }
    caps.check_set(&format!("typical index set of component {component}"), count)?;
    let table = row_table(g, &p);
    let mut words = Vec::with_capacity(count as usize);
    prob::for_each_typical(k, pmf, eps, |u| words.push(encode_packed(u, &table, &p)));
    Ok(CodeSet::from_words(p, words))
}

#[derive(Debug, Clone)]
pub struct QlcCodebook {
    pub spec: QlcSpec,
    pub set: CodeSet,
}

impl QlcCodebook {
    pub fn rate(&self) -> f64 {
        self.set.rate()
    }
    pub fn len(&self) -> usize {
        self.set.len()
    }
    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }
}

fn rate_cap_warning(spec: &QlcSpec) {
    let cap = (spec.q as f64).log2();
    if spec.nominal_rate() > cap + 1e-9 {
        eprintln!(
            "warning: nominal rate {:.4} exceeds log2 q = {:.4}; codewords will collide",
            spec.nominal_rate(),
            cap
        );
    }
}

pub fn materialize_qlc(spec: &QlcSpec, caps: &Caps, exec: Exec) -> Result<QlcCodebook> {
    spec.validate()?;
    let product: f64 = spec.components.iter().map(|c| prob::typical_count(c.k(), &c.pmf, spec.eps)).product();
    caps.check_set("product of typical index sets", product)?;
    rate_cap_warning(spec);
    let images = spec
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| typical_image(&c.g, &c.pmf, spec.eps, i, caps))
        .collect::<Result<Vec<_>>>()?;
    let set = combine(&images, &spec.dither, caps, exec)?;
    Ok(QlcCodebook { spec: spec.clone(), set })
}

fn combine(images: &[CodeSet], dither: &FieldVec, caps: &Caps, exec: Exec) -> Result<CodeSet> {
    let mut acc = images[0].clone();
    for img in &images[1..] {
        acc = sumset(&acc, img, caps, exec)?;
    }
    Ok(acc.shift(acc.packing.pack(dither.as_slice())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NqlcMember {
    pub dither: FieldVec,
    pub pmfs: Vec<Pmf>,
}

/// Codes that share generators G_i but each carry their own dither and index
/// distributions. A pair is an ensemble of two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NqlcEnsembleSpec {
    pub q: u16,
    pub n: usize,
    pub eps: f64,
    pub gs: Vec<FieldMatrix>,
    pub members: Vec<NqlcMember>,
}

pub type NqlcPairSpec = NqlcEnsembleSpec;

impl NqlcEnsembleSpec {
    /// Fresh shared generators and per-member dithers. `pmfs[j][i]` is U_{j,i}.
    pub fn random<R: Rng + ?Sized>(
        q: u16,
        n: usize,
        eps: f64,
        ks: &[usize],
        pmfs: &[Vec<Pmf>],
        rng: &mut R,
    ) -> Result<Self> {
        let gs = ks.iter().map(|&k| field::random_matrix(k, n, q, rng)).collect::<Result<Vec<_>>>()?;
        let members = pmfs
            .iter()
            .map(|p| Ok(NqlcMember { dither: field::random_vec(n, q, rng)?, pmfs: p.clone() }))
            .collect::<Result<Vec<_>>>()?;
        let spec = NqlcEnsembleSpec { q, n, eps, gs, members };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ks(&self) -> Vec<usize> {
        self.gs.iter().map(|g| g.rows()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (j, m) in self.members.iter().enumerate() {
            if m.pmfs.len() != self.gs.len() {
                return Err(Error::InvalidArgument(format!(
                    "member {j} has {} index pmfs for {} components",
                    m.pmfs.len(),
                    self.gs.len()
                )));
            }
            self.member(j).validate()?;
        }
        Ok(())
    }

    pub fn member(&self, j: usize) -> QlcSpec {
        let m = &self.members[j];
        QlcSpec {
            q: self.q,
            n: self.n,
            eps: self.eps,
            components: self.gs.iter().zip(&m.pmfs).map(|(g, p)| QlcComponent { pmf: p.clone(), g: g.clone() }).collect(),
            dither: m.dither.clone(),
        }
    }

    /// Materialise every member, reusing images of components whose index
    /// distributions coincide across members.
    pub fn materialize(&self, caps: &Caps, exec: Exec) -> Result<Vec<CodeSet>> {
        self.validate()?;
        let mut cache: Vec<Vec<(Pmf, CodeSet)>> = vec![Vec::new(); self.gs.len()];
        let mut out = Vec::with_capacity(self.members.len());
        for m in &self.members {
            let product: f64 = self.gs.iter().zip(&m.pmfs).map(|(g, p)| prob::typical_count(g.rows(), p, self.eps)).product();
            caps.check_set("product of typical index sets", product)?;
            let mut images = Vec::with_capacity(self.gs.len());
            for (i, (g, p)) in self.gs.iter().zip(&m.pmfs).enumerate() {
                let img = match cache[i].iter().find(|(cp, _)| cp == p) {
                    Some((_, s)) => s.clone(),
                    None => {
                        let s = typical_image(g, p, self.eps, i, caps)?;
                        cache[i].push((p.clone(), s.clone()));
                        s
                    }
                };
                images.push(img);
            }
            out.push(combine(&images, &m.dither, caps, exec)?);
        }
        Ok(out)
    }
}

/// Embed a nested linear pair (inner dimension `k_inner`, outer dimensions
/// `k_o`, `k_o2`) as a three-component NQLC pair. Typicality is made vacuous so
/// the uniform components range over all index vectors.
pub fn nlc_pair_as_nqlc<R: Rng + ?Sized>(
    k_inner: usize,
    k_o: usize,
    k_o2: usize,
    n: usize,
    q: u16,
    rng: &mut R,
) -> Result<NqlcPairSpec> {
    if !(k_inner < k_o.min(k_o2) && k_o.min(k_o2) <= n) {
        return Err(Error::InvalidArgument(format!(
            "need k_inner < min(k_o, k'_o) <= n, got {k_inner}, {k_o}, {k_o2}, n={n}"
        )));
    }
    let u = Pmf::uniform(q as usize);
    let c = Pmf::point_mass(q as usize, 0);
    let ks = [k_inner, k_o - k_inner, k_o2 - k_inner];
    let pmfs = vec![vec![u.clone(), u.clone(), c.clone()], vec![u.clone(), c, u]];
    if k_inner == 0 {
        // A zero-dimensional inner code carries no generator; keep components 2 and 3.
        let pmfs: Vec<Vec<Pmf>> = pmfs.into_iter().map(|m| m[1..].to_vec()).collect();
        return NqlcEnsembleSpec::random(q, n, 1.0, &ks[1..], &pmfs, rng);
    }
    NqlcEnsembleSpec::random(q, n, 1.0, &ks, &pmfs, rng)
}

/// r_J = (1/n) log₂ |⋂_{j∈J} C_j| for every nonempty subset J (bitmask order);
/// disjoint intersections are reported as −∞.
pub fn ensemble_intersection_rates(specs: &[CosetCodeSpec]) -> Result<Vec<(Vec<usize>, f64)>> {
    if specs.is_empty() || specs.len() > 4 {
        return Err(Error::InvalidArgument("between 1 and 4 codes are supported".into()));
    }
    let (q, n) = (specs[0].g.modulus(), specs[0].g.cols());
    if specs.iter().any(|s| s.g.modulus() != q || s.g.cols() != n) {
        return Err(Error::Dimension("codes must share q and n".into()));
    }
    let spaces: Vec<AffineSpace> = specs.iter().map(|s| s.affine_space()).collect();
    let mut out = Vec::new();
    for mask in 1u32..(1 << specs.len()) {
        let members: Vec<usize> = (0..specs.len()).filter(|&j| mask >> j & 1 == 1).collect();
        let mut acc = Some(spaces[members[0]].clone());
        for &j in &members[1..] {
            acc = acc.and_then(|a| a.intersect(&spaces[j]));
        }
        let rate = match acc {
            Some(a) => a.dim() as f64 * (q as f64).log2() / n as f64,
            None => f64::NEG_INFINITY,
        };
        out.push((members, rate));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct BinnedCodebook {
    pub set: CodeSet,
    /// Bin index of `set.words()[i]`.
    pub bins: Vec<u32>,
    pub nbins: u32,
    pub bin_rate: f64,
}

pub fn bin_count(n: usize, bin_rate: f64) -> u32 {
    (n as f64 * bin_rate).exp2().round().clamp(1.0, u32::MAX as f64) as u32
}

pub fn bin_codebook<R: Rng + ?Sized>(set: &CodeSet, bin_rate: f64, rng: &mut R) -> Result<BinnedCodebook> {
    if bin_rate.is_nan() || bin_rate < 0.0 {
        return Err(Error::InvalidArgument("bin rate must be nonnegative".into()));
    }
    let nbins = bin_count(set.n(), bin_rate);
    let bins = (0..set.len()).map(|_| rng.random_range(0..nbins)).collect();
    Ok(BinnedCodebook { set: set.clone(), bins, nbins, bin_rate })
}

impl BinnedCodebook {
    pub fn bin_of(&self, w: u64) -> Option<u32> {
        self.set.words().binary_search(&w).ok().map(|i| self.bins[i])
    }
    pub fn occupancy(&self) -> Vec<usize> {
        let mut h = vec![0usize; self.nbins as usize];
        self.bins.iter().for_each(|&b| h[b as usize] += 1);
        h
    }
}

/// Human-readable one-line summary of a codebook.
pub fn describe(set: &CodeSet) -> String {
    let mut s = String::new();
    let _ = write!(s, "q={} n={} |C|={} rate={:.4}", set.q(), set.n(), set.len(), set.rate());
    s
}
