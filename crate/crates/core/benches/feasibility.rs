use std::path::Path;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prepush::dynamics::{check_batch, PushQuery};
use prepush::{check_stable_push, par, GraspPose, ObjectTwist, Scene};

fn scene(name: &str) -> Scene {
    Scene::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes").join(name)).unwrap()
}

/// Unit-step queries around the start pose, every pusher equally often.
fn queries(s: &Scene, n: usize) -> Vec<PushQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = s.planner();
    let dt = s.dynamics().time_step;
    (0..n)
        .map(|k| {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let twist = match k % 3 {
                0 => ObjectTwist::new(sign * p.step_translation / dt, 0.0, 0.0),
                1 => ObjectTwist::new(0.0, sign * p.step_translation / dt, 0.0),
                _ => ObjectTwist::new(0.0, 0.0, sign * p.step_rotation / dt),
            };
            PushQuery {
                pose: GraspPose::from_mm_deg(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-10.0..10.0)),
                twist,
                pusher: s.pushers()[k % s.pushers().len()].id.clone(),
            }
        })
        .collect()
}

fn single_check(c: &mut Criterion) {
    let mut g = c.benchmark_group("check_stable_push");
    for name in ["square_prism_low_mu", "rect_prism_large", "t_shape", "fig6_rolling_disc"] {
        let s = scene(&format!("{name}.json"));
        let qs = queries(&s, 64);
        g.bench_function(name, |b| {
            let mut i = 0;
            b.iter(|| {
                let q = &qs[i % qs.len()];
                i += 1;
                black_box(check_stable_push(&s, &q.pose, &q.twist, &q.pusher).unwrap())
            })
        });
    }
    g.finish();
}

fn batch(c: &mut Criterion) {
    let s = scene("t_shape.json");
    let mut g = c.benchmark_group("check_batch");
    for n in [256usize, 4096] {
        let qs = queries(&s, n);
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::new(if par::PARALLEL { "parallel" } else { "fallback" }, n), &qs, |b, qs| {
            b.iter(|| black_box(check_batch(&s, qs)))
        });
        g.bench_with_input(BenchmarkId::new("sequential", n), &qs, |b, qs| {
            b.iter(|| black_box(par::map_sequential(qs, |q| check_stable_push(&s, &q.pose, &q.twist, &q.pusher))))
        });
    }
    g.finish();
}

criterion_group!(benches, single_check, batch);
criterion_main!(benches);
