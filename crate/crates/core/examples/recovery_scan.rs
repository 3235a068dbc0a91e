//! Sweeps the regularization length for a pure-opening crack and prints how
//! the recovery-pair energy approaches the sharp value from above.
//!
//! Run with `cargo run --release --example recovery_scan`.

use fissura::energy::{CrackPath, CrackSegment, SharpConfig, SharpDisplacement};
use fissura::recovery::{recovery_energy_check, RecoveryParams};
use fissura::ModelParams;

fn main() {
    let config = SharpConfig {
        displacement: SharpDisplacement::rigid_opening([0.5, 0.5], [0.0, 1.0], 0.05),
        crack: CrackPath::new(vec![CrackSegment::horizontal(0.5, 0.0, 1.0)]),
    };

    println!(
        "{:>6}  {:>10}  {:>18}  {:>18}  {:>12}  {:>9}",
        "eps", "step", "ratio", "surface_ratio", "div_minus_l2", "1 + l/2"
    );
    for eps in [0.08, 0.04, 0.02] {
        let model = ModelParams::default().with_regularization(eps, eps * eps);
        let rec = RecoveryParams::from_model(&model);
        let report = recovery_energy_check(&config, &model, &rec, [1.0, 1.0])
            .expect("pure opening is admissible");
        println!(
            "{:>6}  {:>10.3e}  {:>18.15}  {:>18.15}  {:>12.3e}  {:>9.6}",
            eps,
            report.lattice_step[0],
            report.ratio,
            report.surface_ratio,
            report.div_minus_l2,
            1.0 + rec.ell() / 2.0,
        );
    }
}
