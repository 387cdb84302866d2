//! Covering-bound inequality systems for pairs of codes and the
//! second-moment exponents behind them.
//!
//! All quantities are in bits and evaluated at ε = 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field;
use crate::prob::{self, JointPmf, Pmf};

/// Rate parameters of a code pair, by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum Scheme {
    /// Independently drawn codebooks of rates r1, r2.
    Unstructured { r1: f64, r2: f64 },
    /// Nested linear pair: outer rates r1, r2 sharing an inner code of rate ri.
    Nlc { r1: f64, r2: f64, ri: f64 },
    /// Nested quasi-linear pair: component ratios k_i/n and per-code index pmfs.
    Nqlc { ratios: Vec<f64>, u1: Vec<Pmf>, u2: Vec<Pmf> },
}

/// A target joint P_{X V1 V2} on 𝖷 × 𝔽_q × 𝔽_q (component order X, V1, V2)
/// together with the rates of the code pair meant to cover it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringScenario {
    pub q: u16,
    pub joint: JointPmf,
    #[serde(flatten)]
    pub scheme: Scheme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl BoundRecord {
    fn new(label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        BoundRecord { label: label.into(), lhs, rhs, slack: lhs - rhs }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringBoundReport {
    pub scheme: String,
    pub records: Vec<BoundRecord>,
    pub satisfied: bool,
}

impl CoveringBoundReport {
    fn new(scheme: &str, records: Vec<BoundRecord>) -> Self {
        let satisfied = records.iter().all(|r| r.slack >= -1e-12);
        CoveringBoundReport { scheme: scheme.into(), records, satisfied }
    }
    pub fn get(&self, label: &str) -> Option<&BoundRecord> {
        self.records.iter().find(|r| r.label == label)
    }
    pub fn min_slack(&self) -> f64 {
        self.records.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min)
    }
    pub fn strictly_satisfied(&self) -> bool {
        self.records.iter().all(|r| r.slack > 0.0)
    }
}

pub fn combo_label(alpha: u8, beta: u8) -> String {
    format!("combo({alpha},{beta})")
}

impl CoveringScenario {
    pub fn validate(&self) -> Result<()> {
        field::check_modulus(self.q)?;
        let d = self.joint.dims();
        if d.len() != 3 || d[1] != self.q as usize || d[2] != self.q as usize {
            return Err(Error::InvalidArgument(format!("joint must live on X x GF({0}) x GF({0}), got {d:?}", self.q)));
        }
        let nonneg = |xs: &[f64]| xs.iter().all(|&x| x >= 0.0 && x.is_finite());
        match &self.scheme {
            Scheme::Unstructured { r1, r2 } => {
                if !nonneg(&[*r1, *r2]) {
                    return Err(Error::InvalidArgument("rates must be nonnegative".into()));
                }
            }
            Scheme::Nlc { r1, r2, ri } => {
                if !nonneg(&[*r1, *r2, *ri]) {
                    return Err(Error::InvalidArgument("rates must be nonnegative".into()));
                }
            }
            Scheme::Nqlc { ratios, u1, u2 } => {
                if !nonneg(ratios) || ratios.is_empty() {
                    return Err(Error::InvalidArgument("component ratios must be nonnegative".into()));
                }
                if u1.len() != ratios.len() || u2.len() != ratios.len() {
                    return Err(Error::InvalidArgument("one index pmf per component and code is required".into()));
                }
                if u1.iter().chain(u2).any(|p| p.len() != self.q as usize) {
                    return Err(Error::InvalidPmf(format!("index pmfs must live on GF({})", self.q)));
                }
            }
        }
        Ok(())
    }

    fn log_q(&self) -> f64 {
        (self.q as f64).log2()
    }

    /// Joint extended by W = αV1 + βV2 as component 3.
    fn with_combo(&self, alpha: u8, beta: u8) -> JointPmf {
        let q = self.q;
        self.joint
            .extend(q as usize, |c| field::add(field::mul(alpha, c[1] as u8, q), field::mul(beta, c[2] as u8, q), q) as usize)
            .expect("combination stays in the field")
    }

    pub fn h_v1_given_x(&self) -> f64 {
        prob::conditional_entropy(&self.joint, &[1], &[0]).expect("valid components")
    }
    pub fn h_v2_given_x(&self) -> f64 {
        prob::conditional_entropy(&self.joint, &[2], &[0]).expect("valid components")
    }
    pub fn h_v12_given_x(&self) -> f64 {
        prob::conditional_entropy(&self.joint, &[1, 2], &[0]).expect("valid components")
    }
    /// H(αV1 + βV2 | X).
    pub fn h_combo_given_x(&self, alpha: u8, beta: u8) -> f64 {
        prob::conditional_entropy(&self.with_combo(alpha, beta), &[3], &[0]).expect("valid components")
    }
    /// H(V1, V2 | X, V1 + αV2).
    pub fn h_v12_given_x_combo(&self, alpha: u8) -> f64 {
        prob::conditional_entropy(&self.with_combo(1, alpha), &[1, 2], &[0, 3]).expect("valid components")
    }

    fn nonzero(&self) -> impl Iterator<Item = u8> {
        1..self.q as u8
    }

    fn nqlc_parts(&self) -> Result<(&[f64], &[Pmf], &[Pmf])> {
        match &self.scheme {
            Scheme::Nqlc { ratios, u1, u2 } => Ok((ratios, u1, u2)),
            _ => Err(Error::InvalidArgument("scenario is not a nested quasi-linear pair".into())),
        }
    }

    /// Σ (k_i/n) H(αU_{1,i} + βU_{2,i}) for the NQLC scheme.
    pub fn nqlc_combo_rate(&self, alpha: u8, beta: u8) -> Result<f64> {
        let (ratios, u1, u2) = self.nqlc_parts()?;
        ratios
            .iter()
            .zip(u1.iter().zip(u2))
            .map(|(r, (a, b))| Ok(r * prob::linear_combo_pmf(alpha, a, beta, b)?.entropy()))
            .sum()
    }

    /// (Σ (k_i/n) H(U_{1,i}), Σ (k_i/n) H(U_{2,i})).
    pub fn nqlc_rates(&self) -> Result<(f64, f64)> {
        let (ratios, u1, u2) = self.nqlc_parts()?;
        let r = |u: &[Pmf]| ratios.iter().zip(u).map(|(r, p)| r * p.entropy()).sum::<f64>();
        Ok((r(u1), r(u2)))
    }
}

pub fn eval_unstructured_bounds(s: &CoveringScenario) -> Result<CoveringBoundReport> {
    s.validate()?;
    let Scheme::Unstructured { r1, r2 } = s.scheme else {
        return Err(Error::InvalidArgument("scenario is not unstructured".into()));
    };
    let j = &s.joint;
    let i1 = j.entropy_of(&[1])? - s.h_v1_given_x();
    let i2 = j.entropy_of(&[2])? - s.h_v2_given_x();
    let i12 = j.entropy_of(&[1, 2])? - s.h_v12_given_x();
    Ok(CoveringBoundReport::new(
        "unstructured",
        vec![BoundRecord::new("rate1", r1, i1), BoundRecord::new("rate2", r2, i2), BoundRecord::new("sum", r1 + r2, i12)],
    ))
}

/// Records shared by the NLC and NQLC systems, given their left-hand sides.
fn nested_records(s: &CoveringScenario, l1: f64, l2: f64, combo_lhs: impl Fn(u8, u8) -> Result<f64>) -> Result<Vec<BoundRecord>> {
    let lq = s.log_q();
    let mut recs = vec![
        BoundRecord::new("rate1", l1, lq - s.h_v1_given_x()),
        BoundRecord::new("rate2", l2, lq - s.h_v2_given_x()),
        BoundRecord::new("sum", l1 + l2, 2.0 * lq - s.h_v12_given_x()),
    ];
    let mut worst: Option<BoundRecord> = None;
    for a in s.nonzero() {
        for b in s.nonzero() {
            let rec = BoundRecord::new(combo_label(a, b), combo_lhs(a, b)?, lq - s.h_combo_given_x(a, b));
            if worst.as_ref().is_none_or(|w| rec.slack < w.slack) {
                worst = Some(rec.clone());
            }
            recs.push(rec);
        }
    }
    if let Some(w) = worst {
        recs.push(BoundRecord::new("combo-min-slack", w.lhs, w.rhs));
    }
    Ok(recs)
}

pub fn eval_nlc_bounds(s: &CoveringScenario) -> Result<CoveringBoundReport> {
    s.validate()?;
    let Scheme::Nlc { r1, r2, ri } = s.scheme else {
        return Err(Error::InvalidArgument("scenario is not a nested linear pair".into()));
    };
    let recs = nested_records(s, r1, r2, |_, _| Ok(r1 + r2 - ri))?;
    Ok(CoveringBoundReport::new("nlc", recs))
}

pub fn eval_nqlc_bounds(s: &CoveringScenario) -> Result<CoveringBoundReport> {
    s.validate()?;
    let (l1, l2) = s.nqlc_rates()?;
    let recs = nested_records(s, l1, l2, |a, b| s.nqlc_combo_rate(a, b))?;
    Ok(CoveringBoundReport::new("nqlc", recs))
}

pub fn eval_bounds(s: &CoveringScenario) -> Result<CoveringBoundReport> {
    match s.scheme {
        Scheme::Unstructured { .. } => eval_unstructured_bounds(s),
        Scheme::Nlc { .. } => eval_nlc_bounds(s),
        Scheme::Nqlc { .. } => eval_nqlc_bounds(s),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentTerm {
    pub label: String,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    /// (1/n) log₂ E θ(x) to first order: R1 + R2 + H(V1,V2|X) − 2 log q.
    pub expected_count_exponent: f64,
    /// Exponents of the terms bounding var θ / (E θ)²; all must be negative.
    pub variance_terms: Vec<ExponentTerm>,
    pub covering_predicted: bool,
}

/// First-order exponents of the hit count θ(x) for an NQLC pair.
///
/// Each variance term is the negated slack of one covering inequality; the
/// α-family uses H(V1 + αV2 | X) = H(V1,V2|X) − H(V1,V2|X, V1+αV2).
pub fn eval_second_moment_exponents(s: &CoveringScenario) -> Result<ExponentReport> {
    s.validate()?;
    let (r1, r2) = s.nqlc_rates()?;
    let lq = s.log_q();
    let h12 = s.h_v12_given_x();
    let mut terms = vec![
        ExponentTerm { label: "joint".into(), exponent: 2.0 * lq - h12 - (r1 + r2) },
        ExponentTerm { label: "v1".into(), exponent: lq - s.h_v1_given_x() - r1 },
        ExponentTerm { label: "v2".into(), exponent: lq - s.h_v2_given_x() - r2 },
    ];
    for a in s.nonzero() {
        let h_w = h12 - s.h_v12_given_x_combo(a);
        terms.push(ExponentTerm { label: format!("alpha={a}"), exponent: lq - h_w - s.nqlc_combo_rate(1, a)? });
    }
    let covering_predicted = terms.iter().all(|t| t.exponent < 0.0);
    Ok(ExponentReport { expected_count_exponent: r1 + r2 + h12 - 2.0 * lq, variance_terms: terms, covering_predicted })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn copy_joint() -> JointPmf {
        // V1 = V2 = X, X uniform binary.
        JointPmf::from_fn(vec![2, 2, 2], |c| if c[0] == c[1] && c[1] == c[2] { 0.5 } else { 0.0 }).unwrap()
    }

    fn indep_joint(q: usize) -> JointPmf {
        JointPmf::from_fn(vec![2, q, q], |_| 0.5 / (q * q) as f64).unwrap()
    }

    #[test]
    fn unstructured_examples() {
        let s = CoveringScenario { q: 2, joint: copy_joint(), scheme: Scheme::Unstructured { r1: 0.0, r2: 0.0 } };
        let r = eval_unstructured_bounds(&s).unwrap();
        assert!((r.get("rate1").unwrap().rhs - 1.0).abs() < 1e-12);
        let s = CoveringScenario { q: 3, joint: indep_joint(3), scheme: Scheme::Unstructured { r1: 0.0, r2: 0.0 } };
        let r = eval_unstructured_bounds(&s).unwrap();
        assert!(r.records.iter().all(|x| x.rhs.abs() < 1e-12));
        assert!(r.satisfied);
    }

    #[test]
    fn nlc_record_shape() {
        let s = CoveringScenario { q: 2, joint: indep_joint(2), scheme: Scheme::Nlc { r1: 0.5, r2: 0.5, ri: 0.2 } };
        let r = eval_nlc_bounds(&s).unwrap();
        assert!(r.get("rate1").unwrap().rhs.abs() < 1e-12);
        let combos: Vec<_> = r.records.iter().filter(|x| x.label.starts_with("combo(")).collect();
        assert_eq!(combos.len(), 1);
        assert_eq!(combos[0].label, "combo(1,1)");
        let s3 = CoveringScenario { q: 3, joint: indep_joint(3), scheme: Scheme::Nlc { r1: 0.5, r2: 0.5, ri: 0.2 } };
        assert_eq!(eval_nlc_bounds(&s3).unwrap().records.len(), 3 + 4 + 1);
    }

    #[test]
    fn scheme_mismatch_is_rejected() {
        let s = CoveringScenario { q: 2, joint: indep_joint(2), scheme: Scheme::Nlc { r1: 0.5, r2: 0.5, ri: 0.2 } };
        assert!(eval_nqlc_bounds(&s).is_err());
        assert!(eval_second_moment_exponents(&s).is_err());
        assert!(eval_unstructured_bounds(&s).is_err());
        let bad = CoveringScenario { q: 3, joint: indep_joint(2), scheme: Scheme::Unstructured { r1: 0.0, r2: 0.0 } };
        assert!(eval_bounds(&bad).is_err());
    }

    #[test]
    fn high_rates_predict_covering() {
        let u = Pmf::uniform(2);
        let s = CoveringScenario {
            q: 2,
            joint: copy_joint(),
            scheme: Scheme::Nqlc { ratios: vec![3.0], u1: vec![u.clone()], u2: vec![u] },
        };
        let e = eval_second_moment_exponents(&s).unwrap();
        assert!(e.covering_predicted);
        assert!(e.variance_terms.iter().all(|t| t.exponent < 0.0));
    }
}
