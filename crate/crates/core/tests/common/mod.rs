//! Helpers shared by the integration tests.
#![allow(dead_code)]

use qlc::bounds::{CoveringScenario, Scheme};
use qlc::prob::{self, JointPmf, Pmf};

/// X uniform binary, V1 = X ⊕ N1, V2 = X ⊕ N2 with (N1, N2) ~ `noise`
/// indexed as 2·n1 + n2.
pub fn xor_noise_joint(noise: [f64; 4]) -> JointPmf {
    JointPmf::from_fn(vec![2, 2, 2], |c| {
        let (n1, n2) = (c[1] ^ c[0], c[2] ^ c[0]);
        0.5 * noise[2 * n1 + n2]
    })
    .unwrap()
}

/// V1, V2 obtained from X through independent BSC(p).
pub fn bsc_pair_joint(p: f64) -> JointPmf {
    let q = 1.0 - p;
    xor_noise_joint([q * q, q * p, p * q, p * p])
}

pub fn nqlc(joint: JointPmf, ratio: f64, u: Pmf) -> CoveringScenario {
    CoveringScenario { q: 2, joint, scheme: Scheme::Nqlc { ratios: vec![ratio], u1: vec![u.clone()], u2: vec![u] } }
}

fn ln_fact(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

fn ln_multinomial(parts: &[usize]) -> f64 {
    ln_fact(parts.iter().sum()) - parts.iter().map(|&p| ln_fact(p)).sum::<f64>()
}

/// Every way of writing `total` as an ordered sum of `parts` nonnegative terms.
fn compositions(total: usize, parts: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() + 1 == parts {
            cur.push(left);
            f(cur);
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(left - c, parts, cur, f);
            cur.pop();
        }
    }
    rec(total, parts, &mut Vec::new(), f);
}

/// E θ(x) counted over index pairs: |A1| |A2| E_x[T(x)] / q^{2n}, where T(x)
/// is the number of (v1, v2) jointly typical with x. Exact for any generator,
/// since independent uniform dithers make each codeword pair uniform.
pub fn expected_index_pair_hits(s: &CoveringScenario, n: usize, eps: f64) -> f64 {
    let Scheme::Nqlc { ratios, u1, u2 } = &s.scheme else { panic!("nqlc scenario expected") };
    let size = |u: &[Pmf]| -> f64 {
        ratios
            .iter()
            .zip(u)
            .map(|(r, _)| (r * n as f64).round() as usize)
            .zip(u)
            .filter(|(k, _)| *k > 0)
            .map(|(k, p)| prob::typical_count(k, p, eps))
            .product()
    };
    let (a1, a2) = (size(u1), size(u2));
    let d = s.joint.dims().to_vec();
    let (ax, q) = (d[0], d[1]);
    let win = prob::count_window(n, s.joint.probs(), eps);
    let px = s.joint.marginal(&[0]).unwrap();
    let mut total = 0.0;
    compositions(n, ax, &mut |xt| {
        let ln_px: f64 = ln_multinomial(xt)
            + xt.iter().zip(px.probs()).map(|(&c, &p)| if c == 0 { 0.0 } else { c as f64 * p.ln() }).sum::<f64>();
        let mut t = 1.0;
        for (a, &na) in xt.iter().enumerate() {
            let mut ta = 0.0;
            compositions(na, q * q, &mut |cells| {
                let ok = cells.iter().enumerate().all(|(i, &c)| {
                    let (lo, hi) = win[a * q * q + i];
                    c >= lo && c <= hi
                });
                if ok {
                    ta += ln_multinomial(cells).exp();
                }
            });
            t *= ta;
        }
        total += ln_px.exp() * t;
    });
    a1 * a2 * total / (q as f64).powi(2 * n as i32)
}
