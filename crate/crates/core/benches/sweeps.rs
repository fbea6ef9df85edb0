use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use shrinklab::limsup::sprindzuk_experiment;
use shrinklab::overlaps::overlap_bound_check;
use shrinklab::overlaps::qia::qia_sweep;
use shrinklab::par::Exec;
use shrinklab::scenarios::{PsiSpec, TargetSeq};
use shrinklab::schmidt::GammaValue;
use shrinklab::{Quad, Rational};

const EXECS: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn qia(c: &mut Criterion) {
    let mut g = c.benchmark_group("qia_sweep");
    g.sample_size(10);
    let psi = PsiSpec::recip();
    let gamma = GammaValue::from(Quad::named("sqrt2-1").unwrap());
    for q in [256u64, 1024] {
        for (name, exec) in EXECS {
            g.bench_with_input(BenchmarkId::new(name, q), &q, |b, &q| {
                b.iter(|| qia_sweep(&psi, &gamma, &[q], exec).unwrap())
            });
        }
    }
    g.finish();
}

fn overlap(c: &mut Criterion) {
    let mut g = c.benchmark_group("overlap_check");
    g.sample_size(10);
    let psi = PsiSpec::recip();
    let gamma = TargetSeq::constant(Rational::new(1, 3));
    for (name, exec) in EXECS {
        g.bench_function(BenchmarkId::new(name, 192), |b| {
            b.iter(|| {
                exec.map_range(2, 193, |q| (1..q).filter(|&r| overlap_bound_check(q, r, &psi, &gamma).unwrap().all_ok()).count())
            })
        });
    }
    g.finish();
}

fn counting(c: &mut Criterion) {
    let mut g = c.benchmark_group("hit_counting");
    g.sample_size(10);
    let psi = PsiSpec::parse("pow:1/2").unwrap();
    for (name, exec) in EXECS {
        g.bench_function(BenchmarkId::new(name, 100_000), |b| {
            b.iter(|| sprindzuk_experiment(3, 8, &psi, &[100_000], exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, qia, overlap, counting);
criterion_main!(benches);
