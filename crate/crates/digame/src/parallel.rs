//! Thread-pool backed seed and grid parallelism.
//!
//! Results are collected in index order, so output never depends on the
//! number of worker threads.

use anyhow::Result;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use digame_core::dbms_learning::{simulate_trajectory, SimulationSpec, Trajectory};
use digame_core::workload::GridEvaluator;

pub struct Pool {
    pool: ThreadPool,
}

impl Pool {
    /// `jobs = 0` uses one thread per core.
    pub fn new(jobs: usize) -> Result<Self> {
        let pool = ThreadPoolBuilder::new().num_threads(jobs).build()?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn simulate(&self, spec: &SimulationSpec, master_seed: u64, seeds: u64) -> Result<Vec<Trajectory>> {
        let out: digame_core::Result<Vec<Trajectory>> = self.pool.install(|| {
            (0..seeds)
                .into_par_iter()
                .map(|s| simulate_trajectory(spec, master_seed, s))
                .collect()
        });
        Ok(out?)
    }
}

impl GridEvaluator for Pool {
    fn evaluate(
        &self,
        points: usize,
        score: &(dyn Fn(usize) -> digame_core::Result<f64> + Sync),
    ) -> digame_core::Result<Vec<f64>> {
        self.pool.install(|| (0..points).into_par_iter().map(score).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use digame_core::dbms_learning::{run_simulation, SimulationSchedule};
    use digame_core::workload::SequentialEvaluator;
    use digame_core::{EffectivenessMatrix, GameConfig, IntentWeights, StrategyMatrix};

    #[test]
    fn matches_sequential() {
        let game = GameConfig::new(
            IntentWeights::uniform(2).unwrap(),
            EffectivenessMatrix::identity(2),
            StrategyMatrix::from_rows(&[vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap(),
            StrategyMatrix::uniform(2, 2).unwrap(),
        )
        .unwrap();
        let spec = SimulationSpec::new(game, SimulationSchedule::every(50, 5));
        let pool = Pool::new(3).unwrap();
        let par = pool.simulate(&spec, 9, 6).unwrap();
        let seq = run_simulation(&spec, 9, 6).unwrap();
        assert_eq!(par, seq);

        let f = |k: usize| Ok((k * k) as f64);
        assert_eq!(
            pool.evaluate(7, &f).unwrap(),
            SequentialEvaluator.evaluate(7, &f).unwrap()
        );
    }
}
