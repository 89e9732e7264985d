use coparray::geometry::ArrayDesign;
use coparray::montecarlo::{run_sweep, SweepSpec, SweepVariable};

fn main() {
    for (sep, step, snr) in [
        (16.0f64, 0.005f64, 15.0f64),
        (20.0, 0.005, 15.0),
        (25.0, 0.005, 15.0),
        (25.0, 0.005, 0.0),
    ] {
        let spec = SweepSpec {
            variable: SweepVariable::SnrDb,
            values: vec![snr],
            trials: 20,
            num_sources: 49,
            snapshots: 500,
            snr_db: 0.0,
            arrays: vec![ArrayDesign::Rcpa { m: 2, n: 3 }],
            grid_step: step,
            min_separation_steps: sep,
        };
        let t0 = std::time::Instant::now();
        let report = run_sweep(&spec, 7).unwrap();
        let r = &report.rows[0];
        println!(
            "sep={sep:4.1} step={step:.3} snr={snr:4.1}: rmse_n={:.5} used={:2} excl={:2} redraws={:6} t={:.1}s",
            r.rmse_normalized, r.trials_used, r.trials_excluded, report.redraws_total,
            t0.elapsed().as_secs_f64()
        );
    }
}
