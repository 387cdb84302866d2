//! The three-descriptions example over GF(3): target joint, rates and
//! distortions, covering check for the nested quasi-linear pair, and a
//! data-driven evaluator for entropy/rate constraint systems.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bounds::{self, BoundRecord, CoveringBoundReport, CoveringScenario, Scheme};
use crate::error::{Error, Result};
use crate::field;
use crate::prob::{self, hb, JointPmf, Pmf};
use crate::report::RunReport;

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn default_ratios() -> [f64; 2] {
    [0.8, 0.2665]
}
fn default_u1() -> Pmf {
    Pmf::new(vec![0.33, 0.48, 0.19]).expect("valid")
}
fn default_u2() -> Pmf {
    Pmf::new(vec![0.33, 0.19, 0.48]).expect("valid")
}
fn default_eps() -> f64 {
    1e-4
}
fn default_lambda() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdExampleParams {
    /// Supplied D₀; when absent the constraint solver is consulted and, failing
    /// a root, `fallback_d0` is used.
    #[serde(default)]
    pub d0: Option<f64>,
    #[serde(default = "default_fallback")]
    pub fallback_d0: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// (k₁/n, k₂/n): component 1 is uniform ternary, component 2 carries the tables.
    #[serde(default = "default_ratios")]
    pub ratios: [f64; 2],
    /// Second-component index pmf of the code decoded by description 1.
    #[serde(default = "default_u1")]
    pub u1_table: Pmf,
    /// Second-component index pmf of the code decoded by description 2.
    #[serde(default = "default_u2")]
    pub u2_table: Pmf,
}

fn default_fallback() -> f64 {
    0.1
}

impl Default for MdExampleParams {
    fn default() -> Self {
        MdExampleParams {
            d0: None,
            fallback_d0: default_fallback(),
            eps: default_eps(),
            lambda: default_lambda(),
            ratios: default_ratios(),
            u1_table: default_u1(),
            u2_table: default_u2(),
        }
    }
}

fn check_d0(d0: f64) -> Result<()> {
    if d0 > 0.0 && d0 < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("D0 = {d0} must lie in (0, 1/2)")))
    }
}

/// Joint of (X, V1, V2) on {0,1} × 𝔽₃ × 𝔽₃; V-values 2 carry zero mass.
pub fn build_table1_joint(d0: f64) -> Result<JointPmf> {
    check_d0(d0)?;
    let a = (SQRT2 - 1.0) / 2.0;
    let b = (3.0 - 2.0 * SQRT2) / 2.0;
    JointPmf::from_fn(vec![2, 3, 3], |c| {
        let (x, v1, v2) = (c[0], c[1], c[2]);
        if v1 > 1 || v2 > 1 {
            return 0.0;
        }
        // Row X=1 is row X=0 with D₀ and 1−D₀ exchanged.
        let d = if x == 0 { d0 } else { 1.0 - d0 };
        match (v1, v2) {
            (0, 0) => (1.0 - d) / 2.0,
            (1, 1) => b * d,
            _ => a * d,
        }
    })
}

/// Left side of the D₀ constraint minus one.
pub fn d0_residual(d0: f64) -> f64 {
    let c = 2.0 * (SQRT2 - 1.0);
    hb(d0) + 2.0 * hb(SQRT2 / 2.0) + hb(c * d0) + hb(c * (1.0 - d0)) - 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum D0Solution {
    Root {
        d0: f64,
        residual: f64,
    },
    NoRoot {
        lo: f64,
        hi: f64,
        residual_lo: f64,
        residual_hi: f64,
        min_residual: f64,
        max_residual: f64,
        grid_points: usize,
        /// Number of sign changes in consecutive residual differences over the grid.
        monotonicity_breaks: usize,
    },
}

pub fn solve_d0_constraint() -> D0Solution {
    let (lo, hi) = (1e-6, 0.5 - 1e-6);
    let grid_points = 1000;
    let grid: Vec<f64> = (0..grid_points)
        .map(|i| d0_residual(lo + (hi - lo) * i as f64 / (grid_points - 1) as f64))
        .collect();
    // Bisect on the first bracketed sign change of the grid, if any.
    for (i, w) in grid.windows(2).enumerate() {
        if w[0] == 0.0 {
            return D0Solution::Root { d0: lo + (hi - lo) * i as f64 / (grid_points - 1) as f64, residual: 0.0 };
        }
        if w[0].signum() != w[1].signum() {
            let step = (hi - lo) / (grid_points - 1) as f64;
            let (mut a, mut b) = (lo + step * i as f64, lo + step * (i + 1) as f64);
            let fa = d0_residual(a);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = d0_residual(m);
                if fm.abs() <= 1e-12 || b - a < 1e-15 {
                    return D0Solution::Root { d0: m, residual: fm };
                }
                if fm.signum() == fa.signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            let m = 0.5 * (a + b);
            return D0Solution::Root { d0: m, residual: d0_residual(m) };
        }
    }
    let diffs: Vec<f64> = grid.windows(2).map(|w| w[1] - w[0]).collect();
    let monotonicity_breaks = diffs.windows(2).filter(|d| d[0].signum() != d[1].signum()).count();
    D0Solution::NoRoot {
        lo,
        hi,
        residual_lo: grid[0],
        residual_hi: grid[grid_points - 1],
        min_residual: grid.iter().copied().fold(f64::INFINITY, f64::min),
        max_residual: grid.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        grid_points,
        monotonicity_breaks,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdRates {
    pub r1: f64,
    pub r2: f64,
    /// R₃ from the construction, uniform component contributing (k₁/n)·log₂3.
    pub r3: f64,
    pub d1: f64,
    pub d2: f64,
    pub d12: f64,
    pub d13: f64,
    pub d23: f64,
    /// R₁ from the construction in bits, for comparison with the target r1.
    pub r1_construction: f64,
    /// The construction's rates with the uniform component counted as k₁/n.
    pub r1_construction_unscaled: f64,
    pub r3_unscaled: f64,
    /// H(V1 ⊕₃ 2V2) − H(V1 ⊕₃ V2 | X) − ε, as the target bound is stated.
    pub r3_target_mixed: f64,
    /// H(V1 ⊕₃ 2V2) − H(V1 ⊕₃ 2V2 | X) − ε, the same-combination variant.
    pub r3_target_matched: f64,
}

/// Entropy terms of the example at a given D₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdEntropies {
    pub h_v1: f64,
    pub h_v1_given_x: f64,
    pub h_v12: f64,
    pub h_v12_given_x: f64,
    pub h_w12: f64,
    pub h_w11_given_x: f64,
    pub h_w12_given_x: f64,
    pub h_u1_table: f64,
    pub h_u2_table: f64,
    pub h_u1_plus_2u2: f64,
}

fn with_w(joint: &JointPmf, alpha: u8, beta: u8) -> JointPmf {
    joint
        .extend(3, |c| field::add(field::mul(alpha, c[1] as u8, 3), field::mul(beta, c[2] as u8, 3), 3) as usize)
        .expect("field combination")
}

pub fn md_entropies(p: &MdExampleParams, d0: f64) -> Result<MdEntropies> {
    let j = build_table1_joint(d0)?;
    let w12 = with_w(&j, 1, 2);
    let w11 = with_w(&j, 1, 1);
    Ok(MdEntropies {
        h_v1: j.entropy_of(&[1])?,
        h_v1_given_x: prob::conditional_entropy(&j, &[1], &[0])?,
        h_v12: j.entropy_of(&[1, 2])?,
        h_v12_given_x: prob::conditional_entropy(&j, &[1, 2], &[0])?,
        h_w12: w12.entropy_of(&[3])?,
        h_w11_given_x: prob::conditional_entropy(&w11, &[3], &[0])?,
        h_w12_given_x: prob::conditional_entropy(&w12, &[3], &[0])?,
        h_u1_table: p.u1_table.entropy(),
        h_u2_table: p.u2_table.entropy(),
        h_u1_plus_2u2: prob::linear_combo_pmf(1, &p.u1_table, 2, &p.u2_table)?.entropy(),
    })
}

pub fn compute_md_rates(p: &MdExampleParams, d0: f64) -> Result<MdRates> {
    check_d0(d0)?;
    let e = md_entropies(p, d0)?;
    let log3 = 3f64.log2();
    let [k1, k2] = p.ratios;
    let r = (1.0 - hb(d0)) / 2.0;
    let d = 0.5 * (1.0 - (1.0 - 2.0 * d0) * (2.0 - SQRT2));
    let bin1 = log3 - e.h_v12 / 2.0 - p.lambda;
    let bin3 = log3 - e.h_w12 - p.lambda;
    Ok(MdRates {
        r1: r,
        r2: r,
        r3: k1 * log3 + k2 * e.h_u1_plus_2u2 - bin3,
        d1: d,
        d2: d,
        d12: d0,
        d13: d0,
        d23: d0,
        r1_construction: k1 * log3 + k2 * e.h_u1_table - bin1,
        r1_construction_unscaled: k1 + k2 * e.h_u1_table - bin1,
        r3_unscaled: k1 + k2 * e.h_u1_plus_2u2 - bin3,
        r3_target_mixed: e.h_w12 - e.h_w11_given_x - p.eps,
        r3_target_matched: e.h_w12 - e.h_w12_given_x - p.eps,
    })
}

pub fn example_scenario(p: &MdExampleParams, d0: f64) -> Result<CoveringScenario> {
    let u = Pmf::uniform(3);
    Ok(CoveringScenario {
        q: 3,
        joint: build_table1_joint(d0)?,
        scheme: Scheme::Nqlc {
            ratios: p.ratios.to_vec(),
            u1: vec![u.clone(), p.u1_table.clone()],
            u2: vec![u, p.u2_table.clone()],
        },
    })
}

pub fn verify_example_covering(p: &MdExampleParams, d0: f64) -> Result<CoveringBoundReport> {
    bounds::eval_nqlc_bounds(&example_scenario(p, d0)?)
}

/// Lower component `which` (0 or 1) of the ratio pair in steps of `step`
/// until some covering slack turns negative. Returns the first failing ratio
/// and the label of the inequality that failed, or None if the ratio reaches 0.
pub fn sweep_ratio_down(p: &MdExampleParams, d0: f64, which: usize, step: f64) -> Result<Option<(f64, String)>> {
    let mut q = p.clone();
    let steps = (p.ratios[which] / step).floor() as usize;
    for i in 0..=steps {
        q.ratios[which] = p.ratios[which] - step * i as f64;
        let rep = verify_example_covering(&q, d0)?;
        if let Some(r) = rep.records.iter().filter(|r| r.label != "combo-min-slack").find(|r| r.slack < 0.0) {
            return Ok(Some((q.ratios[which], r.label.clone())));
        }
    }
    Ok(None)
}

// ------------------------------------------------------ constraint systems

/// A named linear combination Σ c·var over 𝔽_q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedVar {
    pub name: String,
    pub terms: Vec<(u8, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// LHS ≥ RHS (covering-type).
    Ge,
    /// LHS ≤ RHS (packing-type).
    Le,
}

/// constant + log_q·log₂q + Σ coeff·param.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LinearExpr {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub log_q: f64,
    #[serde(default)]
    pub params: Vec<(f64, String)>,
}

/// H(targets | given) ⋈ rhs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintTemplate {
    pub label: String,
    pub targets: Vec<String>,
    #[serde(default)]
    pub given: Vec<String>,
    pub relation: Relation,
    pub rhs: LinearExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionConstraintSystem {
    pub q: u16,
    /// Names of the joint's components, in order.
    pub variables: Vec<String>,
    pub joint: JointPmf,
    #[serde(default)]
    pub derived: Vec<DerivedVar>,
    #[serde(default)]
    pub templates: Vec<ConstraintTemplate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub records: Vec<BoundRecord>,
    pub feasible: bool,
}

impl RegionConstraintSystem {
    /// Joint extended with every derived variable, and the full name list.
    pub fn extended(&self) -> Result<(JointPmf, Vec<String>)> {
        field::check_modulus(self.q)?;
        if self.variables.len() != self.joint.arity() {
            return Err(Error::InvalidArgument(format!(
                "{} variable names for a {}-component joint",
                self.variables.len(),
                self.joint.arity()
            )));
        }
        let mut names = self.variables.clone();
        let mut joint = self.joint.clone();
        let q = self.q;
        for d in &self.derived {
            if names.contains(&d.name) {
                return Err(Error::InvalidArgument(format!("variable {} defined twice", d.name)));
            }
            let mut idx = Vec::new();
            for (c, v) in &d.terms {
                let i = names.iter().position(|x| x == v).ok_or_else(|| Error::InvalidArgument(format!("undefined variable {v}")))?;
                if joint.dims()[i] > q as usize || *c as u16 >= q {
                    return Err(Error::InvalidArgument(format!("{v} does not live in GF({q})")));
                }
                idx.push((*c, i));
            }
            joint = joint.extend(q as usize, |coords| {
                idx.iter().fold(0u8, |acc, &(c, i)| field::add(acc, field::mul(c, coords[i] as u8, q), q)) as usize
            })?;
            names.push(d.name.clone());
        }
        Ok((joint, names))
    }
}

pub fn eval_region_constraints(sys: &RegionConstraintSystem, params: &BTreeMap<String, f64>) -> Result<RegionReport> {
    let (joint, names) = sys.extended()?;
    let index = |v: &String| names.iter().position(|x| x == v).ok_or_else(|| Error::InvalidArgument(format!("undefined variable {v}")));
    let lq = (sys.q as f64).log2();
    let mut records = Vec::new();
    for t in &sys.templates {
        let targets = t.targets.iter().map(index).collect::<Result<Vec<_>>>()?;
        let given = t.given.iter().map(index).collect::<Result<Vec<_>>>()?;
        let lhs = prob::conditional_entropy(&joint, &targets, &given)?;
        let mut rhs = t.rhs.constant + t.rhs.log_q * lq;
        for (c, name) in &t.rhs.params {
            let v = params.get(name).ok_or_else(|| Error::InvalidArgument(format!("undefined parameter {name}")))?;
            rhs += c * v;
        }
        let slack = match t.relation {
            Relation::Ge => lhs - rhs,
            Relation::Le => rhs - lhs,
        };
        records.push(BoundRecord { label: t.label.clone(), lhs, rhs, slack });
    }
    let feasible = records.iter().all(|r| r.slack >= -1e-12);
    Ok(RegionReport { records, feasible })
}

/// The constraint system of the example: covering inequalities for the code
/// pair and the packing inequalities at decoders {1}, {2}, {3} and {1,2},
/// together with the parameter values implied by the construction.
pub fn three_descriptions_system(p: &MdExampleParams, d0: f64) -> Result<(RegionConstraintSystem, BTreeMap<String, f64>)> {
    let s = example_scenario(p, d0)?;
    let e = md_entropies(p, d0)?;
    let log3 = 3f64.log2();
    let (ro1, ro2) = s.nqlc_rates()?;
    let mut params = BTreeMap::new();
    params.insert("r_o1".to_string(), ro1);
    params.insert("r_o2".to_string(), ro2);
    let mut derived = Vec::new();
    let t = |label: &str, targets: &[&str], given: &[&str], relation, rhs| ConstraintTemplate {
        label: label.into(),
        targets: targets.iter().map(|s| s.to_string()).collect(),
        given: given.iter().map(|s| s.to_string()).collect(),
        relation,
        rhs,
    };
    let expr = |log_q: f64, ps: &[(f64, &str)]| LinearExpr {
        constant: 0.0,
        log_q,
        params: ps.iter().map(|(c, n)| (*c, n.to_string())).collect(),
    };
    let mut templates = vec![
        t("cover-1", &["V1"], &["X"], Relation::Ge, expr(1.0, &[(-1.0, "r_o1")])),
        t("cover-2", &["V2"], &["X"], Relation::Ge, expr(1.0, &[(-1.0, "r_o2")])),
        t("cover-12", &["V1", "V2"], &["X"], Relation::Ge, expr(2.0, &[(-1.0, "r_o1"), (-1.0, "r_o2")])),
    ];
    for a in 1..3u8 {
        for b in 1..3u8 {
            let w = format!("W_{a}{b}");
            let r = format!("r_o3_{a}{b}");
            derived.push(DerivedVar { name: w.clone(), terms: vec![(a, "V1".into()), (b, "V2".into())] });
            params.insert(r.clone(), s.nqlc_combo_rate(a, b)?);
            templates.push(t(&format!("cover-3-{a}{b}"), &[&w], &["X"], Relation::Ge, expr(1.0, &[(-1.0, &r)])));
        }
    }
    // Bin-index rates of the construction.
    let rho1 = ro1 - (log3 - e.h_v12 / 2.0 - p.lambda);
    let rho2 = ro2 - (log3 - e.h_v12 / 2.0 - p.lambda);
    let rho3 = params["r_o3_12"] - (log3 - e.h_w12 - p.lambda);
    params.insert("rho1".into(), rho1);
    params.insert("rho2".into(), rho2);
    params.insert("rho3".into(), rho3);
    templates.extend([
        t("pack-1", &["V1"], &[], Relation::Le, expr(1.0, &[(1.0, "rho1"), (-1.0, "r_o1")])),
        t("pack-2", &["V2"], &[], Relation::Le, expr(1.0, &[(1.0, "rho2"), (-1.0, "r_o2")])),
        t("pack-3", &["W_12"], &[], Relation::Le, expr(1.0, &[(1.0, "rho3"), (-1.0, "r_o3_12")])),
        t("pack-12", &["V1", "V2"], &[], Relation::Le, expr(2.0, &[(1.0, "rho1"), (1.0, "rho2"), (-1.0, "r_o1"), (-1.0, "r_o2")])),
        t("pack-12-given-2", &["V1"], &["V2"], Relation::Le, expr(1.0, &[(1.0, "rho1"), (-1.0, "r_o1")])),
        t("pack-12-given-1", &["V2"], &["V1"], Relation::Le, expr(1.0, &[(1.0, "rho2"), (-1.0, "r_o2")])),
    ]);
    let sys = RegionConstraintSystem {
        q: 3,
        variables: vec!["X".into(), "V1".into(), "V2".into()],
        joint: s.joint,
        derived,
        templates,
    };
    Ok((sys, params))
}

/// Full example pipeline as a single report.
pub fn run_md_example(p: &MdExampleParams) -> Result<RunReport> {
    let solution = solve_d0_constraint();
    let d0 = match (p.d0, &solution) {
        (Some(d), _) => d,
        (None, D0Solution::Root { d0, .. }) => *d0,
        (None, D0Solution::NoRoot { .. }) => p.fallback_d0,
    };
    let mut report = RunReport::new("md-example", 0, serde_json::to_value(p).expect("serialisable params"));
    let joint = build_table1_joint(d0)?;
    let cells: Vec<serde_json::Value> = (0..2)
        .flat_map(|x| [(0, 0), (0, 1), (1, 0), (1, 1)].map(|(a, b)| (x, a, b)))
        .map(|(x, a, b)| json!({"x": x, "v1v2": format!("{a}{b}"), "p": joint.prob(&[x, a, b])}))
        .collect();
    let rates = compute_md_rates(p, d0)?;
    let covering = verify_example_covering(p, d0)?;
    let exponents = bounds::eval_second_moment_exponents(&example_scenario(p, d0)?)?;
    let (sys, params) = three_descriptions_system(p, d0)?;
    let region = eval_region_constraints(&sys, &params)?;
    let sweep_k1 = sweep_ratio_down(p, d0, 0, 1e-4)?;
    let sweep_k2 = sweep_ratio_down(p, d0, 1, 1e-4)?;
    report.records.extend([
        json!({"d0_constraint": solution}),
        json!({"d0_used": d0, "supplied": p.d0.is_some()}),
        json!({"table": cells}),
        json!({"entropies": md_entropies(p, d0)?}),
        json!({"rates": rates}),
        json!({"covering": covering}),
        json!({"exponents": exponents}),
        json!({"region": region, "parameters": params}),
        json!({"sweep_k1_down": sweep_k1, "sweep_k2_down": sweep_k2}),
    ]);
    if let D0Solution::NoRoot { min_residual, .. } = solution {
        report.notes.push(format!(
            "the D0 constraint has no root on (0, 1/2): its residual never drops below {min_residual:.6}; D0 = {d0} used instead"
        ));
    }
    report.notes.push(
        "rates are in bits; *_unscaled fields count the uniform ternary component as k1/n instead of (k1/n) log2 3".into(),
    );
    Ok(report)
}
