use std::time::Instant;
use tokbudget::*;

fn main() {
    let dims = VideoDims::new(4, 4, 16, 16).unwrap();
    let levels = CandidateLevels::new(vec![2, 4, 8, 16, 32], 4).unwrap();
    let codec = CodecConfig::default();
    let scenes = SceneDistribution::default();

    let t0 = Instant::now();
    let videos: Vec<BlockVideo> = (0..200)
        .map(|i| scenes.sample(1, i).generate(dims).unwrap())
        .collect();
    println!("generate 200 videos: {:?} ({:?}/video)", t0.elapsed(), t0.elapsed() / 200);

    let t0 = Instant::now();
    let mut acc = 0.0;
    for v in videos.iter().take(50) {
        let table = AssignmentTable::build(v, &codec, &levels).unwrap();
        acc += table.record(624).mse;
    }
    println!("50 tables: {:?} ({:?}/video), sink {acc}", t0.elapsed(), t0.elapsed() / 50);

    let a = Assignment::from_index(312, &levels).unwrap();
    let t0 = Instant::now();
    for v in videos.iter().take(200) {
        let _ = reconstruct(v, &a, &codec).unwrap();
    }
    println!("200 reconstructs: {:?}", t0.elapsed());

    let hyper = RouterHyper::default();
    let model = RouterModel::new(21, 64, 625, levels.levels().to_vec(), 4,
        RewardWeights::new(1.2, 0.8).unwrap(), hyper, 3);
    use rand::Rng;
    let mut rng = tokbudget::rng::rng_for(5, "bench", 0);
    let features: Vec<f64> = (0..64 * 21).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let labels: Vec<usize> = (0..64).map(|_| rng.gen_range(0..625)).collect();
    let batch = tokbudget::router::Minibatch::new(features, labels, 21).unwrap();
    let t0 = Instant::now();
    let mut sink = 0.0;
    for _ in 0..500 {
        let (loss, g) = model.loss_and_grad(&batch).unwrap();
        sink += loss + g.w2[17];
    }
    let per_step = t0.elapsed() / 500;
    println!("loss_and_grad per step: {per_step:?}, sink {sink}");
    println!("projected training (50k steps): {:?}", per_step * 50_000);
}
