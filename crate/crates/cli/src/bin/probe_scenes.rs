use tokbudget::*;

fn main() {
    let dims = VideoDims::new(4, 4, 16, 16).unwrap();
    let levels = CandidateLevels::new(vec![2, 4, 8, 16, 32], 4).unwrap();
    let codec = CodecConfig::default();
    let scenes = SceneDistribution::default();
    let n = 300;
    let mut rows = Vec::new();
    for i in 0..n {
        let spec = scenes.sample(7, i).generate(dims).unwrap();
        let table = AssignmentTable::build(&spec, &codec, &levels).unwrap();
        let hi = table.record(624).mse;
        let lo = table.record(0).mse;
        rows.push((hi, lo, spec.scene.clone().unwrap()));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    println!("=== easiest @max budget ===");
    for (hi, lo, s) in rows.iter().take(6) {
        println!("mse@128={hi:.6} mse@8={lo:.6} kind={:?} amp={:.2} speed=({:.2},{:.2}) tex={:.2} det={:.3} cx={} noise={:.3} bv={:.2} grain={:.3}",
            s.kind, s.amplitude, s.velocity.0, s.velocity.1, s.texture_scale, s.detail, s.complexity, s.noise, s.block_variation, s.grain);
    }
    println!("=== hardest @max budget ===");
    for (hi, lo, s) in rows.iter().rev().take(4) {
        println!("mse@128={hi:.6} mse@8={lo:.6} kind={:?} amp={:.2} noise={:.3} bv={:.2}", s.kind, s.amplitude, s.noise, s.block_variation);
    }
    // quartiles of mse@max
    let q = |f: f64| rows[(f * (n - 1) as f64) as usize].0;
    println!("mse@128 quartiles: min {:.6} q25 {:.6} med {:.6} q75 {:.6} max {:.6}", q(0.0), q(0.25), q(0.5), q(0.75), q(1.0));
    // and mse@8
    let mut los: Vec<f64> = rows.iter().map(|r| r.1).collect();
    los.sort_by(|a, b| a.total_cmp(b));
    println!("mse@8   quartiles: min {:.6} q25 {:.6} med {:.6} q75 {:.6} max {:.6}",
        los[0], los[n as usize/4], los[n as usize/2], los[3*n as usize/4], los[n as usize -1]);
}
