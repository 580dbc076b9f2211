use quiver_workbench::gen::{random_loop_family, LoopFamily};
use quiver_workbench::suite::RunConfig;
use quiver_workbench::symplectic::{maslov_holonomy, TripleLoop};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn main() {
    let config = RunConfig::default();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed.wrapping_mul(0x9e3779b97f4a7c15) ^ 0x03);
    let mut produced = 0;
    let mut attempts = 0;
    while produced < 20 && attempts < 1000 {
        attempts += 1;
        let n = rng.gen_range(1..=4usize);
        let family = random_loop_family(&mut rng, n);
        let Some(samples) = family.sample(4) else { continue };
        let Some(refined) = family.sample(8) else { continue };
        let (Ok(lp), Ok(lpf)) = (TripleLoop::new(samples.clone()), TripleLoop::new(refined)) else { continue };
        let (h, hf) = match (maslov_holonomy(&lp), maslov_holonomy(&lpf)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        if h != hf && produced == 11 {
            let kind = match &family { LoopFamily::Rotation { .. } => "rotation", _ => "pencil" };
            println!("inspecting case {produced} kind={kind} n={n}");
            for steps in [4usize, 8, 16, 32, 64, 128] {
                if let Some(s) = family.sample(steps) {
                    if let Ok(l) = TripleLoop::new(s) {
                        match maslov_holonomy(&l) {
                            Ok(hh) => println!("  steps={steps}: h={hh}"),
                            Err(e) => println!("  steps={steps}: {e}"),
                        }
                    }
                }
            }
        }
        produced += 1;
    }
}
