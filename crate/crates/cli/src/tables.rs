//! CSV layouts for reports that are not already tabular.

use radiokey::adversary::BoundsReport;
use radiokey::isotope::{Catalog, ContaminationEntry, DilutionPlan};
use radiokey::postproc::DistillStatus;
use radiokey::runner::{Bb84Report, RunReport};
use serde::Serialize;

use crate::{CliResult, Failure};

pub fn rows_csv<T: Serialize>(rows: &[T]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Failure::new(1, e))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::new(1, e))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn status(s: Option<&DistillStatus>) -> &'static str {
    match s {
        None => "",
        Some(DistillStatus::Ok) => "ok",
        Some(DistillStatus::Aborted(_)) => "aborted",
    }
}

#[derive(Serialize)]
struct TrialRow {
    trial: u64,
    nuclei: u64,
    pre_arrival: u64,
    revealed: u64,
    never: u64,
    arrival_flagged: Option<usize>,
    detection_z: Option<f64>,
    detection_passed: Option<bool>,
    raw_key_length: usize,
    error_rate: f64,
    translucent_known: usize,
    replaced: usize,
    eve_knowledge: f64,
    final_length: Option<usize>,
    status: &'static str,
}

/// One row per trial.
pub fn trials_csv(report: &RunReport) -> CliResult<String> {
    let rows: Vec<TrialRow> = report
        .trials
        .iter()
        .map(|t| TrialRow {
            trial: t.index,
            nuclei: t.nuclei,
            pre_arrival: t.phases.pre_arrival,
            revealed: t.phases.revealed,
            never: t.phases.never,
            arrival_flagged: t.arrival_flagged,
            detection_z: t.detection.map(|d| d.z_score),
            detection_passed: t.detection.map(|d| d.passed),
            raw_key_length: t.raw_key_length,
            error_rate: t.error_rate,
            translucent_known: t.eve.translucent_known,
            replaced: t.eve.replaced,
            eve_knowledge: t.eve.knowledge_fraction,
            final_length: t.ledger.as_ref().map(|l| l.final_length),
            status: status(t.ledger.as_ref().map(|l| &l.status)),
        })
        .collect();
    rows_csv(&rows)
}

#[derive(Serialize)]
struct BoundsRow {
    scenario: &'static str,
    p_translucent: f64,
    p_intercept_bound: f64,
    p_intercept_approx: f64,
    p_fraction: f64,
    combined_bound: f64,
}

pub fn bounds_csv(b: &BoundsReport) -> CliResult<String> {
    rows_csv(&[BoundsRow {
        scenario: match b.scenario {
            radiokey::protocol::Scenario::ArrivalCheck => "a",
            radiokey::protocol::Scenario::NoArrivalCheck => "b",
        },
        p_translucent: b.p_translucent,
        p_intercept_bound: b.p_intercept_bound,
        p_intercept_approx: b.p_intercept_approx,
        p_fraction: b.p_fraction,
        combined_bound: b.combined_bound,
    }])
}

#[derive(Serialize)]
struct Bb84Row {
    sent: usize,
    eve_enabled: bool,
    sifted: usize,
    errors: usize,
    qber: f64,
    intercept_resend_qber: f64,
    final_length: Option<usize>,
    status: &'static str,
}

pub fn bb84_csv(r: &Bb84Report) -> CliResult<String> {
    rows_csv(&[Bb84Row {
        sent: r.session.sent,
        eve_enabled: r.session.eve_enabled,
        sifted: r.session.sifted,
        errors: r.session.errors,
        qber: r.session.qber,
        intercept_resend_qber: r.intercept_resend_qber,
        final_length: r.ledger.as_ref().map(|l| l.final_length),
        status: status(r.ledger.as_ref().map(|l| &l.status)),
    }])
}

#[derive(Serialize)]
struct CatalogRow<'a> {
    name: &'a str,
    half_life: f64,
    unit: String,
    mean_life_days: f64,
    thick_target_yield_mbq_per_uah: f64,
    role: &'static str,
    gamma_lines_kev: String,
}

pub fn catalog_csv(catalog: &Catalog) -> CliResult<String> {
    let rows: Vec<CatalogRow> = catalog
        .isotopes()
        .iter()
        .map(|s| CatalogRow {
            name: &s.name,
            half_life: s.half_life.value,
            unit: s.half_life.unit.to_string(),
            mean_life_days: s.mean_life_days(),
            thick_target_yield_mbq_per_uah: s.thick_target_yield_mbq_per_uah,
            role: match s.role {
                radiokey::isotope::Role::Primary => "primary",
                radiokey::isotope::Role::Contaminant => "contaminant",
            },
            gamma_lines_kev: s
                .gamma_lines_kev
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(";"),
        })
        .collect();
    rows_csv(&rows)
}

#[derive(Serialize)]
struct ContaminationRow<'a> {
    name: &'a str,
    half_life: String,
    decayed_fraction: f64,
    significant: bool,
}

pub fn contamination_csv(entries: &[ContaminationEntry]) -> CliResult<String> {
    let rows: Vec<ContaminationRow> = entries
        .iter()
        .map(|e| ContaminationRow {
            name: &e.name,
            half_life: e.half_life.to_string(),
            decayed_fraction: e.decayed_fraction,
            significant: e.significant,
        })
        .collect();
    rows_csv(&rows)
}

#[derive(Debug, Serialize)]
pub struct Production {
    pub isotope: String,
    pub beam_current_ua: f64,
    pub irradiation_hours: f64,
    pub activity_bq: f64,
    pub nuclei: f64,
}

#[derive(Debug, Serialize)]
pub struct PlanReport {
    pub production: Production,
    pub dilution: DilutionPlan,
    pub pairs: usize,
    pub required_nuclei: f64,
    pub covers_plate: bool,
}

#[derive(Serialize)]
pub struct PlanRow<'a> {
    isotope: &'a str,
    activity_bq: f64,
    nuclei: f64,
    target_mu: f64,
    samples_available: f64,
    dilution_factor: f64,
    target_concentration_per_mm3: f64,
    pairs: usize,
    required_nuclei: f64,
    covers_plate: bool,
}

impl PlanReport {
    pub fn flat(&self) -> PlanRow<'_> {
        PlanRow {
            isotope: &self.production.isotope,
            activity_bq: self.production.activity_bq,
            nuclei: self.production.nuclei,
            target_mu: self.dilution.target_mu,
            samples_available: self.dilution.samples_available,
            dilution_factor: self.dilution.dilution_factor,
            target_concentration_per_mm3: self.dilution.target_concentration_per_mm3,
            pairs: self.pairs,
            required_nuclei: self.required_nuclei,
            covers_plate: self.covers_plate,
        }
    }
}
