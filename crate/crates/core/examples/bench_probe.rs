use bemfmm::bem::{self, BibeeVariant, Engine, Method, OperatorContext, SolveOptions};
use bemfmm::fmm::FmmConfig;
use bemfmm::geom::{icosphere, ChargeSet, DielectricModel, MolecularSystem, Vec3};
use std::time::Instant;

fn main() {
    let mesh = icosphere(1.0, 4).unwrap();
    let charges = ChargeSet {
        positions: vec![Vec3::ZERO],
        charges: vec![1.0],
        radii: vec![1.0],
    };
    let sys =
        MolecularSystem::new(mesh, charges, DielectricModel::new(4.0, 80.0).unwrap()).unwrap();
    println!("panels: {}", sys.panels.len());

    let ctx = OperatorContext::new(
        &sys,
        Engine::Fmm(FmmConfig { order: 8, ncrit: 64, ..Default::default() }),
    );
    let sigma = vec![1.0; sys.panels.len()];
    let t = Instant::now();
    let _ = ctx.apply_kprime(&sigma).unwrap();
    println!("one K' apply: {:?}", t.elapsed());
    let t = Instant::now();
    let _ = ctx.apply_b().unwrap();
    println!("one B apply: {:?}", t.elapsed());

    let t = Instant::now();
    let opts = SolveOptions {
        fmm: FmmConfig { order: 8, ncrit: 64, ..Default::default() },
        ..Default::default()
    };
    let r = bem::solve(&sys, Method::Bem, &opts).unwrap();
    println!(
        "BEM solve: {:?} iters={} dG={}",
        t.elapsed(),
        r.iterations,
        r.dg_internal
    );
    let t = Instant::now();
    let r2 = bem::solve(&sys, Method::Bibee(BibeeVariant::Cfa), &opts).unwrap();
    println!("CFA solve: {:?} dG={}", t.elapsed(), r2.dg_internal);
}
