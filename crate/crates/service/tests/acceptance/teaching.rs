use teachqa_core::engine::{SymbolicBackend, SymbolicKb};
use teachqa_core::sim::{self, ExperimentConfig, ExperimentMode, SuiteConfig};
use teachqa_core::ControllerConfig;

use crate::Outcome;

const FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

pub fn trend() -> Outcome {
    let mut summary = Vec::new();
    for seed in 0..3u64 {
        let suite = sim::generate(&SuiteConfig {
            seed,
            ..SuiteConfig::default()
        });
        let backend = SymbolicBackend::new(SymbolicKb::from_file(suite.kb.clone()).map_err(|e| e.to_string())?);
        let acc = |mode| -> Result<f64, String> {
            let (report, _) = sim::run_experiment(&suite.train, &suite.test, &backend, &ExperimentConfig::new(mode, seed))
                .map_err(|e| e.to_string())?;
            Ok(report.accuracy * 100.0)
        };
        let direct = acc(ExperimentMode::DirectQa)?;
        let before = acc(ExperimentMode::BeforeTeaching)?;
        let after = acc(ExperimentMode::AfterTeaching)?;
        let upper = acc(ExperimentMode::UpperBound)?;
        ensure!(after - before >= 15.0, "seed {seed}: after {after:.1} vs before {before:.1}");
        ensure!(upper >= after - 2.0, "seed {seed}: upper bound {upper:.1} vs after {after:.1}");

        let curve = sim::learning_curve(&suite.train, &suite.test, &FRACTIONS, &[seed], &backend, &ControllerConfig::default())
            .map_err(|e| e.to_string())?;
        let (first, last) = (curve[0].per_seed[0], curve[curve.len() - 1].per_seed[0]);
        ensure!(last >= first, "seed {seed}: curve falls from {first} to {last}");
        summary.push(format!(
            "seed {seed}: direct {direct:.0} before {before:.0} after {after:.0} upper {upper:.0} curve {:.0}->{:.0}",
            first * 100.0,
            last * 100.0
        ));
    }
    Ok(summary.join("; "))
}
