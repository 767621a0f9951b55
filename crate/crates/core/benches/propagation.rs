use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use serde_json::json;

use rcjc::par;
use rcjc::scenarios::{preset, run_sweep, Span, SweepAxis};

fn small_sweep(c: &mut Criterion) {
    let mut base = preset("fig4-scaled").unwrap();
    base.model.fock = vec![8];
    base.t_final = Span::Abs(50.0);
    base.records = 26;
    base.tolerances.negativity_clip = 1e-6;
    let axes = [SweepAxis {
        path: "model.temperature.n_th".into(),
        values: (1..=8).map(|k| json!(1e-3 * k as f64)).collect(),
    }];

    let mut g = c.benchmark_group("sweep-8");
    g.sample_size(10);
    let wide = par::effective_jobs(None);
    let mut jobs = vec![1];
    if wide > 1 {
        jobs.push(wide);
    }
    for j in jobs {
        g.bench_with_input(
            BenchmarkId::new(
                if par::is_parallel() {
                    "rayon"
                } else {
                    "sequential"
                },
                j,
            ),
            &j,
            |b, &j| b.iter(|| black_box(run_sweep(&base, &axes, Some(j)).unwrap())),
        );
    }
    g.finish();
}

fn rhs(c: &mut Criterion) {
    use rcjc::dissipator::build_rate_operators;
    use rcjc::evolve::Generator;
    use rcjc::hilbert::{product_state, spin_state, thermal_state, SpinState};
    use rcjc::models::lab_hamiltonian;

    let mut g = c.benchmark_group("lab-rhs");
    for n in [8, 12, 16] {
        let mut s = preset("fig4").unwrap();
        s.model.fock = vec![n];
        let spec = s.spec().unwrap();
        let h = lab_hamiltonian(&spec);
        let r = build_rate_operators(&h.at(0.0), &spec.layout, 0, &spec.rc[0], spec.beta).unwrap();
        let gen = Generator::new(h, vec![r]).unwrap();
        let th = thermal_state(spec.beta_omega(0), n).unwrap();
        let rho = product_state(&[&spin_state(SpinState::Minus), &th.rho]).into_operator();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| black_box(gen.rhs(1.0, &rho)))
        });
    }
    g.finish();
}

criterion_group!(benches, small_sweep, rhs);
criterion_main!(benches);
