//! Adaptive loop: solve, estimate, mark, refine.

pub mod experiments;
pub mod marking;
pub mod noise;
pub mod output;
pub mod problem_file;
pub mod rate;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use crate::components::{solve_all, ComponentSolutions};
use crate::estimator::{classical_indicator, compute_field, IndicatorField};
use crate::lsq::{assemble_b, LsqSystem};
use crate::mesh::{build_initial, MarkedSet, Refinement, Triangulation};
use crate::space::FeSpace;
use crate::{Error, Result};

pub use experiments::Experiment;
pub use marking::{doerfler_mark, Marking};
pub use noise::perturb_measurements;
pub use rate::{fit_rate, DEFAULT_WINDOW};

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSource {
    Builtin(String),
    File(PathBuf),
}

impl ProblemSource {
    pub fn load(&self) -> Result<Experiment> {
        match self {
            ProblemSource::Builtin(name) => experiments::builtin(name)
                .ok_or_else(|| Error::Config(format!("unknown experiment '{name}'"))),
            ProblemSource::File(path) => problem_file::load_problem(path),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarkingStrategy {
    /// Product-structured indicators of the component problems.
    Weighted,
    /// State plus co-state indicators at the current parameter estimate.
    Classical,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub source: ProblemSource,
    pub theta: f64,
    pub marking: MarkingStrategy,
    pub max_elements: usize,
    pub rho_tol: f64,
    pub sigma: f64,
    pub seed: u64,
    /// Solve for the parameter on every level, not only the last one.
    pub solve_p_every_level: bool,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(source: ProblemSource) -> Self {
        Self {
            source,
            theta: 0.5,
            marking: MarkingStrategy::Weighted,
            max_elements: 50_000,
            rho_tol: 0.0,
            sigma: 0.0,
            seed: 0,
            solve_p_every_level: true,
            output: None,
        }
    }

    pub fn builtin(name: &str) -> Self {
        Self::new(ProblemSource::Builtin(name.to_string()))
    }

    fn validate(&self, initial_elements: usize) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if self.max_elements <= initial_elements {
            return Err(Error::Config(format!(
                "max_elements must exceed the {initial_elements} initial elements"
            )));
        }
        if !(self.rho_tol >= 0.0) {
            return Err(Error::Config("rho_tol must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveRecord {
    pub level: usize,
    pub n_elements: usize,
    pub eta_total: f64,
    pub zeta_total: f64,
    pub rho: f64,
    pub classical_rho: Option<f64>,
    pub p_estimate: Option<Vec<f64>>,
    pub p_error: Option<f64>,
    pub marked_count: usize,
    pub wall_time_ms: f64,
}

/// Everything computed on one level, handed to the observer of [`run_experiment`].
pub struct LevelState<'a> {
    pub level: usize,
    pub space: &'a Arc<FeSpace>,
    pub comps: &'a ComponentSolutions,
    pub field: &'a IndicatorField,
    pub system: &'a LsqSystem,
    pub record: &'a AdaptiveRecord,
    /// Elements selected for refinement; empty on the last level.
    pub marked: &'a MarkedSet,
    /// The refinement that produced this mesh, absent on level 0.
    pub refinement: Option<&'a Refinement>,
    pub is_final: bool,
}

pub fn adaptive_loop(config: &RunConfig) -> Result<Vec<AdaptiveRecord>> {
    let experiment = config.source.load()?;
    run_experiment(&experiment, config, |_| Ok(()))
}

/// Runs the adaptive loop for `experiment`; `config.source` is ignored.
pub fn run_experiment<F>(experiment: &Experiment, config: &RunConfig, mut observer: F) -> Result<Vec<AdaptiveRecord>>
where
    F: FnMut(&LevelState<'_>) -> Result<()>,
{
    let initial = build_initial(&experiment.domain)?;
    config.validate(initial.n_elements())?;
    let measurements = perturb_measurements(&experiment.problem.measurements, config.sigma, config.seed)?;
    let problem = experiment.problem.with_measurements(measurements)?;
    let n_q = problem.n_q();
    let mut writer = match &config.output {
        Some(path) => Some(output::RecordWriter::create(path, n_q)?),
        None => None,
    };

    let mut records = Vec::new();
    let mut mesh: Arc<Triangulation> = Arc::new(initial);
    let mut refinement: Option<Refinement> = None;
    for level in 0.. {
        let start = Instant::now();
        let space = FeSpace::new(Arc::clone(&mesh));
        let comps = solve_all(&space, &problem)?;
        let field = compute_field(&space, &problem.coefficient, &problem, &comps)?;
        let mut system = assemble_b(&comps, &problem)?;
        let rho = field.rho();
        let n_elements = mesh.n_elements();
        let last = n_elements > config.max_elements || rho <= config.rho_tol;

        let classical = config.marking == MarkingStrategy::Classical;
        let p = if classical || config.solve_p_every_level || last {
            Some(system.solve_parameter(&problem.constraint)?)
        } else {
            None
        };
        let p_vec: Option<Vec<f64>> = p.as_ref().map(|p| p.iter().copied().collect());
        let (indicators, classical_rho) = if classical {
            let c = classical_indicator(&space, &problem.coefficient, &problem, &comps, p_vec.as_deref().unwrap())?;
            (c.per_element(), Some(c.total()))
        } else {
            (field.rho_sq.clone(), None)
        };
        let (marked, converged) = if last {
            (MarkedSet::empty(), false)
        } else {
            let m = doerfler_mark(&indicators, config.theta)?;
            (m.set, m.converged)
        };
        let last = last || converged;
        let p_error = match (&p_vec, &experiment.exact_parameter) {
            (Some(p), Some(exact)) => {
                Some(p.iter().zip(exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            }
            _ => None,
        };
        let record = AdaptiveRecord {
            level,
            n_elements,
            eta_total: field.eta_total(),
            zeta_total: field.zeta_total(),
            rho,
            classical_rho,
            p_estimate: p_vec,
            p_error,
            marked_count: marked.len(),
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        if let Some(w) = writer.as_mut() {
            w.write(&record)?;
        }
        observer(&LevelState {
            level,
            space: &space,
            comps: &comps,
            field: &field,
            system: &system,
            record: &record,
            marked: &marked,
            refinement: refinement.as_ref(),
            is_final: last,
        })?;
        records.push(record);
        if last {
            break;
        }
        let r = mesh.refine(&marked);
        mesh = Arc::new(r.mesh.clone());
        refinement = Some(r);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lsq::{Constraint, ProblemData};
    use crate::mesh::DomainConfig;
    use crate::space::{Coefficient, DataPair};

    #[test]
    fn zero_data_stops_at_level_zero() {
        let problem = ProblemData::new(
            Coefficient::identity(),
            vec![DataPair::zero(), DataPair::zero()],
            vec![DataPair::zero()],
            1.0,
            vec![0.0],
            Constraint::Unconstrained,
        )
        .unwrap();
        let e = Experiment {
            name: "zero".into(),
            domain: DomainConfig::unit_square(),
            problem,
            exact_parameter: None,
        };
        let records = run_experiment(&e, &RunConfig::builtin("zero"), |_| Ok(())).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].rho, 0.0);
    }

    #[test]
    fn invalid_config() {
        let mut c = RunConfig::builtin("single");
        c.theta = 0.0;
        assert!(matches!(adaptive_loop(&c), Err(Error::Config(_))));
        let mut c = RunConfig::builtin("single");
        c.max_elements = 10;
        assert!(matches!(adaptive_loop(&c), Err(Error::Config(_))));
        assert!(adaptive_loop(&RunConfig::builtin("nope")).is_err());
    }

    #[test]
    fn short_run_refines() {
        let mut c = RunConfig::builtin("single");
        c.max_elements = 400;
        let records = adaptive_loop(&c).unwrap();
        assert!(records.len() > 2);
        assert!(records.windows(2).all(|w| w[1].n_elements > w[0].n_elements));
        assert!(records.last().unwrap().n_elements > 400);
        assert!(records.iter().all(|r| r.p_estimate.is_some()));
    }
}
