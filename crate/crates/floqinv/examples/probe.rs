use floqinv::model::{NLevelSystem, PulseShape};
use floqinv::propagation::{propagator_over, IntegratorConfig};
use std::f64::consts::{PI, TAU};
use std::time::Instant;

fn main() {
    let sys = NLevelSystem::from_real(vec![0.0, 1.0], &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    for cycles in [200.0f64, 400.0] {
        let t_total = cycles * TAU;
        let sigma = t_total / 8.0;
        let e0 = PI / (sigma * (2.0 * PI).sqrt());
        let pulse = PulseShape::gaussian(e0, 1.0, 0.0, t_total).unwrap();
        let cfg = IntegratorConfig::default();
        let start = Instant::now();
        match propagator_over(&sys, &pulse, 0.0, t_total, &cfg) {
            Ok(v) => println!(
                "cycles {cycles}: ok in {:?}, unitarity {:.2e}",
                start.elapsed(),
                v.unitarity_error()
            ),
            Err(e) => println!("cycles {cycles}: ERR {e} after {:?}", start.elapsed()),
        }
    }
}
