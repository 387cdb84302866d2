//! Seeded Monte Carlo experiments: covering by code pairs, sumset growth of
//! quasi-linear codes, and point-to-point lossy compression with binning.
//!
//! Trial t at blocklength n draws from `rng::trial_rng(seed, n, t)`, so the
//! aggregate of a run never depends on how trials were scheduled.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bounds::{self, CoveringScenario, Scheme};
use crate::codes::{self, Caps, CodeSet, CosetCodeSpec, NqlcEnsembleSpec, Packing, QlcSpec};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::prob::{self, JointPmf, Pmf};
use crate::report::{frequency, mean_stderr, Metric, RunReport};
use crate::rng::trial_rng;

fn default_delta() -> f64 {
    0.1
}
fn default_one() -> usize {
    1
}
fn default_lower_tol() -> f64 {
    0.2
}
fn default_upper_tol() -> f64 {
    0.05
}

fn check_grid(n_grid: &[usize], trials: usize) -> Result<()> {
    if n_grid.is_empty() || n_grid.contains(&0) {
        return Err(Error::InvalidArgument("n-grid must be a nonempty list of positive blocklengths".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    Ok(())
}

// ------------------------------------------------------------------ covering

/// Cell-count windows and pruning windows for joint typicality of
/// (x, v1, v2) against a joint on 𝖷 × 𝔽_q × 𝔽_q.
#[derive(Debug, Clone)]
pub struct TripleTest {
    ax: usize,
    q: usize,
    n: usize,
    cells: Vec<(u32, u32)>,
    pair1: Vec<(u32, u32)>,
    pair2: Vec<(u32, u32)>,
}

fn windows(n: usize, p: &[f64], eps: f64) -> Vec<(u32, u32)> {
    prob::count_window(n, p, eps).into_iter().map(|(a, b)| (a as u32, b as u32)).collect()
}

#[inline]
fn inside(c: u32, w: (u32, u32)) -> bool {
    c >= w.0 && c <= w.1
}

impl TripleTest {
    pub fn new(joint: &JointPmf, n: usize, eps: f64) -> Result<Self> {
        let d = joint.dims();
        if d.len() != 3 || d[1] != d[2] {
            return Err(Error::InvalidArgument("expected a joint on X x F x F".into()));
        }
        let q = d[1];
        // A pair cell is a sum of q triple cells, so its frequency can be off by at most q·ε.
        let slack = eps * q as f64;
        Ok(TripleTest {
            ax: d[0],
            q,
            n,
            cells: windows(n, joint.probs(), eps),
            pair1: windows(n, joint.marginal(&[0, 1])?.probs(), slack),
            pair2: windows(n, joint.marginal(&[0, 2])?.probs(), slack),
        })
    }

    /// Number of pairs (c1, c2) ∈ C1 × C2 jointly typical with x.
    pub fn count_hits(&self, x: &[u8], c1: &CodeSet, c2: &CodeSet) -> u64 {
        let (ax, q) = (self.ax, self.q);
        let mx = codes::seq_masks(x, ax);
        let mut buf = vec![0u64; q];
        // Survivors of C1 keep the ax·q masks mx[a] & m1[b].
        let mut s1: Vec<u64> = Vec::new();
        for &w in c1.words() {
            c1.packing.masks(w, &mut buf);
            let base = s1.len();
            let mut ok = true;
            'outer: for (a, &xa) in mx.iter().enumerate() {
                for (b, &mb) in buf.iter().enumerate() {
                    let m = xa & mb;
                    if !inside(m.count_ones(), self.pair1[a * q + b]) {
                        ok = false;
                        break 'outer;
                    }
                    s1.push(m);
                }
            }
            if !ok {
                s1.truncate(base);
            }
        }
        let mut s2: Vec<u64> = Vec::new();
        for &w in c2.words() {
            c2.packing.masks(w, &mut buf);
            let ok = mx
                .iter()
                .enumerate()
                .all(|(a, &xa)| buf.iter().enumerate().all(|(c, &mc)| inside((xa & mc).count_ones(), self.pair2[a * q + c])));
            if ok {
                s2.extend_from_slice(&buf);
            }
        }
        let stride = ax * q;
        let mut hits = 0u64;
        for ab in s1.chunks_exact(stride) {
            for m2 in s2.chunks_exact(q) {
                let ok = ab.iter().enumerate().all(|(i, &mab)| {
                    m2.iter().enumerate().all(|(c, &mc)| inside((mab & mc).count_ones(), self.cells[i * q + c]))
                });
                hits += ok as u64;
            }
        }
        hits
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringExperimentConfig {
    pub scenario: CoveringScenario,
    pub n_grid: Vec<usize>,
    pub eps: f64,
    /// Typicality of index vectors inside the codes; defaults to `eps`.
    #[serde(default)]
    pub index_eps: Option<f64>,
    pub trials: usize,
    /// Per-blocklength trial counts overriding `trials` (same order as `n_grid`).
    #[serde(default)]
    pub trials_per_n: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub caps: Caps,
}

impl CoveringExperimentConfig {
    pub fn trials_at(&self, idx: usize) -> usize {
        self.trials_per_n.get(idx).copied().unwrap_or(self.trials)
    }
    fn validate(&self) -> Result<()> {
        check_grid(&self.n_grid, self.trials)?;
        self.scenario.validate()?;
        if self.eps <= 0.0 {
            return Err(Error::InvalidArgument("eps must be positive".into()));
        }
        if !self.trials_per_n.is_empty() && self.trials_per_n.len() != self.n_grid.len() {
            return Err(Error::InvalidArgument("trials_per_n must match n_grid".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringPoint {
    pub n: usize,
    pub trials: usize,
    pub coverage: f64,
    pub coverage_stderr: f64,
    pub mean_theta: f64,
    pub theta_stderr: f64,
    pub mean_rate1: f64,
    pub mean_rate2: f64,
}

#[derive(Debug, Clone)]
pub struct CoveringOutcome {
    pub points: Vec<CoveringPoint>,
    pub report: RunReport,
}

fn round_k(ratio: f64, n: usize) -> usize {
    (ratio * n as f64).round() as usize
}

/// Draw one code pair for the scenario at blocklength n.
fn draw_pair<R: Rng + ?Sized>(cfg: &CoveringExperimentConfig, n: usize, rng: &mut R, exec: Exec) -> Result<(CodeSet, CodeSet)> {
    let s = &cfg.scenario;
    let q = s.q;
    let lq = (q as f64).log2();
    let index_eps = cfg.index_eps.unwrap_or(cfg.eps);
    match &s.scheme {
        Scheme::Unstructured { r1, r2 } => {
            let p = Packing::new(q, n)?;
            let mut draw = |r: f64, comp: usize| -> Result<CodeSet> {
                let m = (n as f64 * r).exp2().round().max(1.0);
                cfg.caps.check_set("unstructured codebook size", m)?;
                let marg = s.joint.marginal(&[comp])?.to_pmf()?;
                let words = (0..m as usize).map(|_| p.pack(&marg.sample_seq(n, rng))).collect();
                Ok(CodeSet::from_words(p, words))
            };
            let c1 = draw(*r1, 1)?;
            let c2 = draw(*r2, 2)?;
            Ok((c1, c2))
        }
        Scheme::Nlc { r1, r2, ri } => {
            let k = |r: f64| (n as f64 * r / lq).round() as usize;
            let spec = codes::nlc_pair_as_nqlc(k(*ri), k(*r1), k(*r2), n, q, rng)?;
            let mut sets = spec.materialize(&cfg.caps, exec)?;
            let c2 = sets.pop().expect("pair");
            Ok((sets.pop().expect("pair"), c2))
        }
        Scheme::Nqlc { ratios, u1, u2 } => {
            let mut ks = Vec::new();
            let (mut p1, mut p2) = (Vec::new(), Vec::new());
            for ((r, a), b) in ratios.iter().zip(u1).zip(u2) {
                let k = round_k(*r, n);
                if k > 0 {
                    ks.push(k);
                    p1.push(a.clone());
                    p2.push(b.clone());
                }
            }
            if ks.is_empty() {
                return Err(Error::InvalidArgument(format!("every component rounds to k=0 at n={n}")));
            }
            let spec = NqlcEnsembleSpec::random(q, n, index_eps, &ks, &[p1, p2], rng)?;
            let mut sets = spec.materialize(&cfg.caps, exec)?;
            let c2 = sets.pop().expect("pair");
            Ok((sets.pop().expect("pair"), c2))
        }
    }
}

pub fn run_covering_experiment(cfg: &CoveringExperimentConfig, exec: Exec) -> Result<CoveringOutcome> {
    cfg.validate()?;
    let s = &cfg.scenario;
    let px = s.joint.marginal(&[0])?.to_pmf()?;
    let mut report = RunReport::new("covering", cfg.seed, serde_json::to_value(cfg).expect("serialisable config"));
    let bound_report = bounds::eval_bounds(s)?;
    report.records.push(json!({"bounds": bound_report}));
    if matches!(s.scheme, Scheme::Nqlc { .. }) {
        report.records.push(json!({"exponents": bounds::eval_second_moment_exponents(s)?}));
    }
    let mut points = Vec::new();
    for (idx, &n) in cfg.n_grid.iter().enumerate() {
        let start = Instant::now();
        let trials = cfg.trials_at(idx);
        let test = TripleTest::new(&s.joint, n, cfg.eps)?;
        // Inner work stays sequential: trials are the unit of parallelism.
        let outcomes = exec.map(trials, |t| -> Result<(u64, f64, f64)> {
            let mut rng = trial_rng(cfg.seed, n as u64, t as u64);
            let (c1, c2) = draw_pair(cfg, n, &mut rng, Exec::Sequential)?;
            let x = px.sample_seq(n, &mut rng);
            Ok((test.count_hits(&x, &c1, &c2), c1.rate(), c2.rate()))
        });
        let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
        let covered = outcomes.iter().filter(|o| o.0 > 0).count();
        let (coverage, coverage_stderr) = frequency(covered, trials);
        let thetas: Vec<f64> = outcomes.iter().map(|o| o.0 as f64).collect();
        let (mean_theta, theta_stderr) = mean_stderr(&thetas);
        let mean_rate1 = outcomes.iter().map(|o| o.1).sum::<f64>() / trials as f64;
        let mean_rate2 = outcomes.iter().map(|o| o.2).sum::<f64>() / trials as f64;
        let pt = CoveringPoint { n, trials, coverage, coverage_stderr, mean_theta, theta_stderr, mean_rate1, mean_rate2 };
        report.metrics.extend([
            Metric::new(n, "coverage", coverage, coverage_stderr),
            Metric::new(n, "mean_theta", mean_theta, theta_stderr),
            Metric::new(n, "rate1", mean_rate1, 0.0),
            Metric::new(n, "rate2", mean_rate2, 0.0),
        ]);
        report.timings.push((n, start.elapsed().as_secs_f64()));
        points.push(pt);
    }
    Ok(CoveringOutcome { points, report })
}

// -------------------------------------------------------------------- sumset

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    /// k_i / n; k_i = max(1, round(ratio · n)).
    pub ratio: f64,
    pub pmf: Pmf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumsetCode {
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumsetExperimentConfig {
    pub q: u16,
    pub n_grid: Vec<usize>,
    pub ls: Vec<usize>,
    pub eps: f64,
    pub codes: Vec<SumsetCode>,
    /// Independent draws of generators and dither per code and blocklength.
    #[serde(default = "default_one")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_lower_tol")]
    pub lower_tol: f64,
    #[serde(default = "default_upper_tol")]
    pub upper_tol: f64,
    #[serde(default)]
    pub caps: Caps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumsetRow {
    pub code: usize,
    pub rep: usize,
    pub n: usize,
    pub l: usize,
    pub ks: Vec<usize>,
    /// (1/n) log₂ |C|.
    pub rate: f64,
    /// (1/n) log₂ |C + … + C| (l copies).
    pub measured: f64,
    /// min(log₂ q, Σ (k_i/n) H(U_i^{⊗l})).
    pub predicted: f64,
    pub gap: f64,
    pub envelope_lo: f64,
    pub envelope_hi: f64,
    pub in_envelope: bool,
}

#[derive(Debug, Clone)]
pub struct SumsetOutcome {
    pub rows: Vec<SumsetRow>,
    pub report: RunReport,
}

impl SumsetOutcome {
    pub fn row(&self, code: usize, rep: usize, n: usize, l: usize) -> Option<&SumsetRow> {
        self.rows.iter().find(|r| r.code == code && r.rep == rep && r.n == n && r.l == l)
    }
}

/// min(log₂ q, Σ (k_i/n) H(U_i^{⊗l})).
pub fn predicted_sumset_rate(q: u16, n: usize, ks: &[usize], pmfs: &[Pmf], l: usize) -> Result<f64> {
    let mut s = 0.0;
    for (&k, p) in ks.iter().zip(pmfs) {
        s += k as f64 / n as f64 * prob::convolve_power(p, l)?.entropy();
    }
    Ok(s.min((q as f64).log2()))
}

pub fn run_sumset_experiment(cfg: &SumsetExperimentConfig, exec: Exec) -> Result<SumsetOutcome> {
    check_grid(&cfg.n_grid, cfg.reps)?;
    if cfg.ls.is_empty() || cfg.ls.contains(&0) {
        return Err(Error::InvalidArgument("ls must be a nonempty list of positive integers".into()));
    }
    if cfg.codes.is_empty() {
        return Err(Error::InvalidArgument("no codes configured".into()));
    }
    let lq = (cfg.q as f64).log2();
    let max_l = *cfg.ls.iter().max().expect("nonempty");
    let mut tasks = Vec::new();
    for code in 0..cfg.codes.len() {
        for rep in 0..cfg.reps {
            for &n in &cfg.n_grid {
                tasks.push((code, rep, n));
            }
        }
    }
    let results = exec.map(tasks.len(), |i| -> Result<Vec<SumsetRow>> {
        let (code, rep, n) = tasks[i];
        let spec = &cfg.codes[code];
        let mut rng = trial_rng(cfg.seed, code as u64, (rep * 4096 + n) as u64);
        let comps: Vec<(usize, Pmf)> =
            spec.components.iter().map(|c| (round_k(c.ratio, n).max(1), c.pmf.clone())).collect();
        let ks: Vec<usize> = comps.iter().map(|c| c.0).collect();
        let pmfs: Vec<Pmf> = comps.iter().map(|c| c.1.clone()).collect();
        let qspec = QlcSpec::random(cfg.q, n, cfg.eps, &comps, &mut rng)?;
        let book = codes::materialize_qlc(&qspec, &cfg.caps, Exec::Sequential)?;
        let rate = book.rate();
        let mut rows = Vec::new();
        let mut acc = book.set.clone();
        for l in 2..=max_l {
            acc = codes::sumset(&acc, &book.set, &cfg.caps, Exec::Sequential)?;
            if !cfg.ls.contains(&l) {
                continue;
            }
            let measured = acc.rate();
            let predicted = predicted_sumset_rate(cfg.q, n, &ks, &pmfs, l)?;
            let envelope_lo = rate;
            let envelope_hi = lq.min(l as f64 * rate);
            let in_envelope = measured >= envelope_lo - cfg.lower_tol && measured <= envelope_hi + cfg.upper_tol;
            rows.push(SumsetRow {
                code,
                rep,
                n,
                l,
                ks: ks.clone(),
                rate,
                measured,
                predicted,
                gap: (measured - predicted).abs(),
                envelope_lo,
                envelope_hi,
                in_envelope,
            });
        }
        if cfg.ls.contains(&1) {
            let predicted = predicted_sumset_rate(cfg.q, n, &ks, &pmfs, 1)?;
            rows.push(SumsetRow {
                code,
                rep,
                n,
                l: 1,
                ks: ks.clone(),
                rate,
                measured: rate,
                predicted,
                gap: (rate - predicted).abs(),
                envelope_lo: rate,
                envelope_hi: rate.min(lq),
                in_envelope: true,
            });
        }
        Ok(rows)
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    let mut report = RunReport::new("sumset", cfg.seed, serde_json::to_value(cfg).expect("serialisable config"));
    for &n in &cfg.n_grid {
        for &l in &cfg.ls {
            let sel: Vec<&SumsetRow> = rows.iter().filter(|r| r.n == n && r.l == l).collect();
            let gaps: Vec<f64> = sel.iter().map(|r| r.gap).collect();
            let meas: Vec<f64> = sel.iter().map(|r| r.measured).collect();
            let (g, gse) = mean_stderr(&gaps);
            let (m, mse) = mean_stderr(&meas);
            let (e, ese) = frequency(sel.iter().filter(|r| r.in_envelope).count(), sel.len());
            report.metrics.extend([
                Metric::new(n, format!("measured_rate_l{l}"), m, mse),
                Metric::new(n, format!("abs_gap_l{l}"), g, gse),
                Metric::new(n, format!("in_envelope_l{l}"), e, ese),
            ]);
        }
    }
    report.records.extend(rows.iter().map(|r| serde_json::to_value(r).expect("row")));
    Ok(SumsetOutcome { rows, report })
}

// ---------------------------------------------------------- point-to-point

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtpConfig {
    pub q: u16,
    /// Source distribution P_X.
    pub px: Pmf,
    /// Test channel rows P_{Y|X=x}, each a pmf on 𝔽_q.
    pub channel: Vec<Pmf>,
    /// Per-letter distortion d(x, y); Hamming when absent.
    #[serde(default)]
    pub distortion: Option<Vec<Vec<f64>>>,
    pub n_grid: Vec<usize>,
    pub eps: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub caps: Caps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtpPoint {
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub codebook_rate: f64,
    /// Rate of the transmitted bin index.
    pub bin_rate: f64,
    pub nbins: u32,
    pub encoder_failures: usize,
    pub decoder_none: usize,
    pub decoder_ambiguous: usize,
    pub failure: f64,
    pub mean_distortion: f64,
    pub distortion_stderr: f64,
}

#[derive(Debug, Clone)]
pub struct PtpOutcome {
    pub points: Vec<PtpPoint>,
    /// I(X;Y) and E d(X,Y) under the test channel.
    pub mutual_information: f64,
    pub target_distortion: f64,
    pub report: RunReport,
}

enum PtpTrial {
    EncoderFail,
    DecoderNone,
    DecoderAmbiguous,
    Decoded(f64),
}

impl PtpConfig {
    fn joint(&self) -> Result<JointPmf> {
        if self.channel.len() != self.px.len() {
            return Err(Error::InvalidArgument("one channel row per source letter is required".into()));
        }
        if self.channel.iter().any(|r| r.len() != self.q as usize) {
            return Err(Error::InvalidPmf(format!("channel rows must be pmfs on GF({})", self.q)));
        }
        JointPmf::from_fn(vec![self.px.len(), self.q as usize], |c| self.px.probs()[c[0]] * self.channel[c[0]].probs()[c[1]])
    }

    fn dist(&self, x: usize, y: usize) -> f64 {
        match &self.distortion {
            Some(d) => d[x][y],
            None => (x != y) as u8 as f64,
        }
    }

    fn validate(&self) -> Result<()> {
        check_grid(&self.n_grid, self.trials)?;
        crate::field::check_modulus(self.q)?;
        if self.eps <= 0.0 || self.delta < 0.0 {
            return Err(Error::InvalidArgument("eps must be positive and delta nonnegative".into()));
        }
        if let Some(d) = &self.distortion {
            if d.len() != self.px.len() || d.iter().any(|r| r.len() != self.q as usize) {
                return Err(Error::InvalidArgument("distortion matrix must be |X| x q".into()));
            }
        }
        Ok(())
    }
}

pub fn run_ptp_experiment(cfg: &PtpConfig, exec: Exec) -> Result<PtpOutcome> {
    cfg.validate()?;
    let joint = cfg.joint()?;
    let q = cfg.q;
    let ax = cfg.px.len();
    let lq = (q as f64).log2();
    let h_y = joint.entropy_of(&[1])?;
    let h_y_given_x = prob::conditional_entropy(&joint, &[1], &[0])?;
    let mi = h_y - h_y_given_x;
    let target: f64 = (0..ax).flat_map(|x| (0..q as usize).map(move |y| (x, y))).map(|(x, y)| joint.prob(&[x, y]) * cfg.dist(x, y)).sum();
    let py = joint.marginal(&[1])?.to_pmf()?;
    let mut report = RunReport::new("ptp", cfg.seed, serde_json::to_value(cfg).expect("serialisable config"));
    report.records.push(json!({"mutual_information": mi, "target_distortion": target, "h_y": h_y, "h_y_given_x": h_y_given_x}));
    let mut points = Vec::new();
    for &n in &cfg.n_grid {
        let start = Instant::now();
        let design_rate = lq - h_y_given_x + cfg.delta;
        let k = ((n as f64 * design_rate / lq) - 1e-9).ceil().max(1.0) as usize;
        let codebook_rate = k as f64 * lq / n as f64;
        // Each bin must keep rate log q − H(Y) − δ so that at most one
        // P_Y-typical codeword shares the encoder's bin.
        let bin_rate = (codebook_rate - (lq - h_y - cfg.delta)).max(0.0);
        let nbins = codes::bin_count(n, bin_rate);
        cfg.caps.check_set("coset codebook", (q as f64).powi(k.min(n) as i32))?;
        let cells = windows(n, joint.probs(), cfg.eps);
        let ywin = windows(n, py.probs(), cfg.eps);
        let outcomes = exec.map(cfg.trials, |t| -> Result<PtpTrial> {
            let mut rng = trial_rng(cfg.seed, n as u64, t as u64);
            let spec = CosetCodeSpec::random(k, n, q, &mut rng)?;
            let book = codes::materialize_coset(&spec, &cfg.caps)?;
            let binned = codes::bin_codebook(&book, bin_rate, &mut rng)?;
            let x = cfg.px.sample_seq(n, &mut rng);
            Ok(ptp_trial(cfg, &x, &binned, ax, &cells, &ywin, &joint))
        });
        let mut enc = 0;
        let mut none = 0;
        let mut amb = 0;
        let mut dists = Vec::new();
        for o in outcomes {
            match o? {
                PtpTrial::EncoderFail => enc += 1,
                PtpTrial::DecoderNone => none += 1,
                PtpTrial::DecoderAmbiguous => amb += 1,
                PtpTrial::Decoded(d) => dists.push(d),
            }
        }
        let (failure, failure_se) = frequency(enc + none + amb, cfg.trials);
        let (mean_distortion, distortion_stderr) = mean_stderr(&dists);
        report.metrics.extend([
            Metric::new(n, "failure", failure, failure_se),
            Metric::new(n, "encoder_failure", frequency(enc, cfg.trials).0, frequency(enc, cfg.trials).1),
            Metric::new(n, "decoder_none", frequency(none, cfg.trials).0, frequency(none, cfg.trials).1),
            Metric::new(n, "decoder_ambiguous", frequency(amb, cfg.trials).0, frequency(amb, cfg.trials).1),
            Metric::new(n, "distortion", mean_distortion, distortion_stderr),
            Metric::new(n, "codebook_rate", codebook_rate, 0.0),
            Metric::new(n, "bin_rate", bin_rate, 0.0),
        ]);
        report.timings.push((n, start.elapsed().as_secs_f64()));
        points.push(PtpPoint {
            n,
            k,
            trials: cfg.trials,
            codebook_rate,
            bin_rate,
            nbins,
            encoder_failures: enc,
            decoder_none: none,
            decoder_ambiguous: amb,
            failure,
            mean_distortion,
            distortion_stderr,
        });
    }
    Ok(PtpOutcome { points, mutual_information: mi, target_distortion: target, report })
}

/// Encode x into a bin index and decode it back.
///
/// The encoder considers every codeword jointly typical with x and ranks them
/// by squared distance between their joint type and P_XY. It prefers the best
/// codeword that is the only P_Y-typical word in its bin (so the decoder will
/// recover it), falling back to the overall best. The decoder returns the
/// unique P_Y-typical codeword of the received bin.
fn ptp_trial(
    cfg: &PtpConfig,
    x: &[u8],
    binned: &codes::BinnedCodebook,
    ax: usize,
    cells: &[(u32, u32)],
    ywin: &[(u32, u32)],
    joint: &JointPmf,
) -> PtpTrial {
    let set = &binned.set;
    let q = cfg.q as usize;
    let n = x.len();
    let mx = codes::seq_masks(x, ax);
    let mut buf = vec![0u64; q];
    let mut y_typical = vec![false; set.len()];
    let mut typical_in_bin = vec![0u32; binned.nbins as usize];
    let mut cands: Vec<(f64, usize)> = Vec::new();
    for (i, &w) in set.words().iter().enumerate() {
        set.packing.masks(w, &mut buf);
        y_typical[i] = buf.iter().zip(ywin).all(|(m, &win)| inside(m.count_ones(), win));
        if y_typical[i] {
            typical_in_bin[binned.bins[i] as usize] += 1;
        }
        let mut score = 0.0;
        let mut ok = true;
        for (a, &xa) in mx.iter().enumerate() {
            for (b, &mb) in buf.iter().enumerate() {
                let c = (xa & mb).count_ones();
                if !inside(c, cells[a * q + b]) {
                    ok = false;
                }
                score += (c as f64 / n as f64 - joint.probs()[a * q + b]).powi(2);
            }
        }
        if ok {
            cands.push((score, i));
        }
    }
    let best = |it: &mut dyn Iterator<Item = &(f64, usize)>| {
        it.fold(None::<(f64, usize)>, |acc, &(s, i)| match acc {
            Some((bs, _)) if bs <= s => acc,
            _ => Some((s, i)),
        })
    };
    let decodable = best(&mut cands.iter().filter(|(_, i)| y_typical[*i] && typical_in_bin[binned.bins[*i] as usize] == 1));
    let Some((_, chosen)) = decodable.or_else(|| best(&mut cands.iter())) else {
        return PtpTrial::EncoderFail;
    };
    let bin = binned.bins[chosen];
    let mut found = None;
    let mut count = 0;
    for (i, &b) in binned.bins.iter().enumerate() {
        if b == bin && y_typical[i] {
            count += 1;
            found = Some(i);
        }
    }
    match (count, found) {
        (0, _) => PtpTrial::DecoderNone,
        (1, Some(i)) => {
            let y = set.packing.unpack(set.words()[i]);
            let d = x.iter().zip(&y).map(|(&a, &b)| cfg.dist(a as usize, b as usize)).sum::<f64>() / n as f64;
            PtpTrial::Decoded(d)
        }
        _ => PtpTrial::DecoderAmbiguous,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc_joint(p: f64) -> JointPmf {
        JointPmf::from_fn(vec![2, 2, 2], |c| {
            let f = |a: usize, b: usize| if a == b { 1.0 - p } else { p };
            0.5 * f(c[0], c[1]) * f(c[0], c[2])
        })
        .unwrap()
    }

    #[test]
    fn hit_count_matches_brute_force() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let joint = bsc_joint(0.25);
        let n = 8;
        let p = Packing::new(2, n).unwrap();
        let test = TripleTest::new(&joint, n, 0.13).unwrap();
        for _ in 0..20 {
            let c1 = CodeSet::from_words(p, (0..40).map(|_| rng.random_range(0..256)).collect());
            let c2 = CodeSet::from_words(p, (0..40).map(|_| rng.random_range(0..256)).collect());
            let x: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let mut brute = 0;
            for a in c1.to_vecs() {
                for b in c2.to_vecs() {
                    brute += prob::is_jointly_typical(&[&x, &a, &b], &joint, 0.13).unwrap() as u64;
                }
            }
            assert_eq!(test.count_hits(&x, &c1, &c2), brute);
        }
    }

    #[test]
    fn vacuous_typicality_always_covers() {
        let u = Pmf::uniform(2);
        let cfg = CoveringExperimentConfig {
            scenario: CoveringScenario {
                q: 2,
                joint: bsc_joint(0.2),
                scheme: Scheme::Nqlc { ratios: vec![0.25], u1: vec![u.clone()], u2: vec![u] },
            },
            n_grid: vec![6, 8],
            eps: 1.5,
            index_eps: None,
            trials: 20,
            trials_per_n: vec![],
            seed: 1,
            caps: Caps::default(),
        };
        let out = run_covering_experiment(&cfg, Exec::Sequential).unwrap();
        assert!(out.points.iter().all(|p| p.coverage == 1.0));
    }

    #[test]
    fn coset_sumset_is_closed() {
        let cfg = SumsetExperimentConfig {
            q: 3,
            n_grid: vec![6],
            ls: vec![1, 2, 3],
            eps: 2.0,
            codes: vec![SumsetCode { components: vec![ComponentSpec { ratio: 0.5, pmf: Pmf::uniform(3) }] }],
            reps: 3,
            seed: 2,
            lower_tol: 0.2,
            upper_tol: 0.05,
            caps: Caps::default(),
        };
        let out = run_sumset_experiment(&cfg, Exec::Sequential).unwrap();
        for r in &out.rows {
            assert!((r.measured - r.rate).abs() < 1e-12, "{r:?}");
        }
    }
}
