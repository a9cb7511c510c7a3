//! Plans a configured run and evaluates it row by row.

use std::sync::Arc;

use rayon::prelude::*;
use spectral_bounds::lowerbound::WindowProblem;
use spectral_bounds::quadrature::QuadSettings;
use spectral_bounds::symmetry::{bounds_with_group, group_providers, ExplicitGroup, GroupProvider, GroupSpec};
use spectral_bounds::twocenter::NuclearGeometry;
use spectral_bounds::variational::{default_method, upper_bound_methods, UpperBoundMethod};

use crate::config::{GroupChoice, RunConfig};
use crate::output::{Cell, Table};
use crate::CliError;

struct PlannedCase {
    r: Option<f64>,
    geometry: NuclearGeometry,
    group: Option<GroupSpec>,
    method: Option<Arc<dyn UpperBoundMethod>>,
}

/// A validated run: every geometry is built and every name is resolved, so
/// the remaining failures are numerical.
pub struct Plan {
    cases: Vec<PlannedCase>,
    windows: Vec<u32>,
    levels: usize,
    temple: bool,
    restricted: bool,
    settings: QuadSettings,
}

impl Plan {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        let cases = config.cases().map_err(CliError::Config)?;
        let provider: Option<Arc<dyn GroupProvider>> = match &config.group {
            GroupChoice::Named(name) => Some(group_providers().get(name).map_err(|e| CliError::Config(e.to_string()))?),
            GroupChoice::Explicit(_) => None,
        };
        let methods = upper_bound_methods();
        let mut planned = Vec::with_capacity(cases.len());
        for case in cases {
            let group = match (&config.group, &provider) {
                (GroupChoice::Explicit(g), _) => {
                    let spec = g.build(&case.geometry).map_err(CliError::Config)?;
                    ExplicitGroup(spec).group(&case.geometry)
                }
                (_, Some(p)) => p.group(&case.geometry),
                (_, None) => Ok(None),
            }
            .map_err(|e| CliError::Config(e.to_string()))?;
            let method = match config.upper_bound.as_str() {
                "none" => None,
                "auto" => Some(default_method(&case.geometry)),
                name => Some(methods.get(name).map_err(|e| CliError::Config(e.to_string()))?),
            };
            if let Some(m) = &method {
                if !m.supports(&case.geometry) {
                    return Err(CliError::Config(format!("method `{}` does not support this geometry", m.name())));
                }
                if config.temple && !m.provides_temple() {
                    return Err(CliError::Config(format!("method `{}` has no Temple bound", m.name())));
                }
            } else if config.temple {
                return Err(CliError::Config("`temple` needs an `upper_bound` method".into()));
            }
            planned.push(PlannedCase { r: case.r, geometry: case.geometry, group, method });
        }
        Ok(Self {
            cases: planned,
            windows: config.windows.clone(),
            levels: config.levels,
            temple: config.temple,
            restricted: !matches!(&config.group, GroupChoice::Named(n) if n == "none"),
            settings: config.quadrature,
        })
    }

    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["geometry", "r", "j_cut", "dim", "shift", "gram_condition"].map(String::from).into();
        h.extend((1..=self.levels).map(|k| format!("lb_{k}")));
        if self.restricted {
            h.extend((1..=self.levels).map(|k| format!("lb_x_{k}")));
        }
        if self.cases.iter().any(|c| c.method.is_some()) {
            h.push("mu1_ub".into());
        }
        if self.temple {
            h.push("mu1_lb".into());
        }
        h
    }

    fn case_rows(&self, index: usize, case: &PlannedCase) -> Result<Vec<Vec<Cell>>, CliError> {
        let numerical = |j_cut: Option<u32>| {
            move |e: spectral_bounds::Error| CliError::Numerical { geometry: index, j_cut, message: e.to_string() }
        };
        let upper = match &case.method {
            Some(m) => Some(m.upper_bound(&case.geometry, &self.settings).map_err(numerical(None))?),
            None => None,
        };
        let mut rows = Vec::with_capacity(self.windows.len());
        for &j in &self.windows {
            let problem = WindowProblem::new(&case.geometry, j, &self.settings).map_err(numerical(Some(j)))?;
            let report =
                bounds_with_group(&problem.window, &case.geometry, &problem.gram, case.group.as_ref(), &self.settings)
                    .map_err(numerical(Some(j)))?;
            let pick = |v: &[f64]| (0..self.levels).map(|k| v.get(k).copied().into()).collect::<Vec<Cell>>();
            let mut row = vec![
                Cell::Int(index as u64),
                case.r.into(),
                Cell::Int(j as u64),
                Cell::Int(report.dim as u64),
                Cell::Num(report.shift),
                Cell::Num(report.gram_condition),
            ];
            row.extend(pick(&report.bounds));
            if self.restricted {
                row.extend(pick(report.restricted.as_deref().unwrap_or(&report.bounds)));
            }
            if let Some(u) = &upper {
                row.push(Cell::Num(u.value));
            } else if self.cases.iter().any(|c| c.method.is_some()) {
                row.push(Cell::Empty);
            }
            if self.temple {
                let second =
                    report.restricted.as_deref().unwrap_or(&report.bounds).get(1).copied().ok_or_else(|| {
                        numerical(Some(j))(spectral_bounds::Error::Unsupported(
                            "Temple needs a second lower bound; enlarge the window".into(),
                        ))
                    })?;
                let method = case.method.as_ref().expect("planned");
                let t = method.temple(&case.geometry, second, &self.settings).map_err(numerical(Some(j)))?;
                row.push(t.into());
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Rows in input order: geometry first, then window.
    pub fn run(&self) -> Result<Table, CliError> {
        let results: Vec<_> = self.cases.par_iter().enumerate().map(|(i, c)| self.case_rows(i, c)).collect();
        // The first failure in input order wins, independent of scheduling.
        let per_case = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        Ok(Table { header: self.header(), rows: per_case.into_iter().flatten().collect() })
    }
}
