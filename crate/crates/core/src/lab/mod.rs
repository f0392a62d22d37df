//! Scenario runner: strict scenario files, the verification pipelines and report output.

mod report;
mod run;
mod scenario;

pub use report::{emit_report, render_report, CheckRow, ModeRow, Report, ReportFormat, Summary, CHECK_HEADER, MODE_HEADER};
pub use run::{
    default_roundtrip_maps, disc_mesh_for, disc_problem, domain_problem, random_quadratic, random_unit_spd,
    run_scenario, stability_report, weighted_disc_spectrum, EIG_REL_TOL, IDENTITY_TOL, POINCARE_SLACK,
    POINCARE_TRIALS, ZERO_MODE_TOL,
};
pub use scenario::{parse_config, parse_config_for, MapSpec, Overrides, Scenario, ScenarioKind};
