use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use seqplace::matching::{contrast_enhance, seqslam_search};
use seqplace::{difference_matrix, DeltaConfig, Method, Metric, SeqSlamConfig};
use seqplace_bench::pair;

fn difference(c: &mut Criterion) {
    let mut group = c.benchmark_group("difference_matrix");
    for frames in [250, 500, 1000] {
        let p = pair(frames, 512);
        group.bench_with_input(BenchmarkId::from_parameter(frames), &p, |b, p| {
            b.iter(|| {
                difference_matrix(
                    p.query.descriptors(),
                    p.reference.descriptors(),
                    Metric::Cosine,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn seqslam_stages(c: &mut Criterion) {
    let p = pair(500, 128);
    let raw = difference_matrix(
        p.query.descriptors(),
        p.reference.descriptors(),
        Metric::Cosine,
    )
    .unwrap();
    c.bench_function("contrast_enhance/500", |b| {
        b.iter(|| contrast_enhance(&raw, 10).unwrap())
    });
    let enhanced = contrast_enhance(&raw, 10).unwrap();
    let mut group = c.benchmark_group("seqslam_search/500");
    for d_s in [2, 10] {
        let cfg = SeqSlamConfig::with_sequence_length(d_s);
        group.bench_with_input(BenchmarkId::from_parameter(d_s), &cfg, |b, cfg| {
            b.iter(|| seqslam_search(&enhanced, cfg).unwrap())
        });
    }
    group.finish();
}

fn end_to_end(c: &mut Criterion) {
    let p = pair(500, 256);
    let mut group = c.benchmark_group("match/500x256");
    group.sample_size(20);
    for method in [
        Method::SeqSlam(SeqSlamConfig::with_sequence_length(10)),
        Method::Delta(DeltaConfig::for_sequence_length(10)),
    ] {
        group.bench_function(method.kind().name(), |b| {
            b.iter(|| method.run(&p.reference, &p.query).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, difference, seqslam_stages, end_to_end);
criterion_main!(benches);
