use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qlc::bounds::{CoveringScenario, Scheme};
use qlc::codes::Caps;
use qlc::experiments::{self, ComponentSpec, CoveringExperimentConfig, SumsetCode, SumsetExperimentConfig};
use qlc::prob::{JointPmf, Pmf};
use qlc::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn covering(c: &mut Criterion) {
    let p = 1.0 / 6.0;
    let noise = [(1.0 - p) * (1.0 - p), (1.0 - p) * p, p * (1.0 - p), p * p];
    let joint = JointPmf::from_fn(vec![2, 2, 2], |v| 0.5 * noise[2 * (v[1] ^ v[0]) + (v[2] ^ v[0])]).unwrap();
    let u = Pmf::uniform(2);
    let cfg = CoveringExperimentConfig {
        scenario: CoveringScenario { q: 2, joint, scheme: Scheme::Nqlc { ratios: vec![0.625], u1: vec![u.clone()], u2: vec![u] } },
        n_grid: vec![12],
        eps: 0.1,
        index_eps: None,
        trials: 64,
        trials_per_n: vec![],
        seed: 1,
        caps: Caps::default(),
    };
    let mut g = c.benchmark_group("covering_trials");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| experiments::run_covering_experiment(&cfg, e).unwrap())
        });
    }
    g.finish();
}

fn sumset(c: &mut Criterion) {
    let cfg = SumsetExperimentConfig {
        q: 2,
        n_grid: vec![12, 14],
        ls: vec![2, 3],
        eps: 0.1,
        codes: vec![SumsetCode {
            components: vec![
                ComponentSpec { ratio: 0.5, pmf: Pmf::uniform(2) },
                ComponentSpec { ratio: 0.5, pmf: Pmf::bernoulli(0.2).unwrap() },
            ],
        }],
        reps: 4,
        seed: 1,
        lower_tol: 0.2,
        upper_tol: 0.05,
        caps: Caps::default(),
    };
    let mut g = c.benchmark_group("sumset_codes");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| experiments::run_sumset_experiment(&cfg, e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, covering, sumset);
criterion_main!(benches);
