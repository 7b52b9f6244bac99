//! Production arithmetic for the radioactive source: irradiation yield,
//! activity to nucleus count, dilution down to the per-sample mean, and the
//! decay of co-produced isotopes over a protocol run.
//!
//! Decay during irradiation is ignored; activity grows linearly with beam
//! charge.

use std::collections::HashSet;
use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};

pub const CATALOG_SCHEMA_VERSION: u32 = 1;
pub const DAYS_PER_YEAR: f64 = 365.25;
/// Decayed fraction above which a contaminant is reported as active.
pub const CONTAMINATION_FLAG: f64 = 0.01;

const BUNDLED_CATALOG: &str = include_str!("../data/tin_isotopes.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeUnit {
    #[serde(rename = "s")]
    Second,
    #[serde(rename = "min")]
    Minute,
    #[serde(rename = "h")]
    Hour,
    #[serde(rename = "d")]
    Day,
    #[serde(rename = "y")]
    Year,
}

impl TimeUnit {
    pub fn seconds(self) -> f64 {
        match self {
            Self::Second => 1.0,
            Self::Minute => 60.0,
            Self::Hour => 3600.0,
            Self::Day => 86_400.0,
            Self::Year => DAYS_PER_YEAR * 86_400.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Self::Second => "s",
            Self::Minute => "min",
            Self::Hour => "h",
            Self::Day => "d",
            Self::Year => "y",
        }
    }
}

impl fmt::Display for TimeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for TimeUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "s" => Self::Second,
            "min" => Self::Minute,
            "h" => Self::Hour,
            "d" => Self::Day,
            "y" => Self::Year,
            other => return Err(Error::domain(format!("unknown time unit {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeValue {
    pub value: f64,
    pub unit: TimeUnit,
}

impl TimeValue {
    pub fn new(value: f64, unit: TimeUnit) -> Self {
        Self { value, unit }
    }

    pub fn seconds(&self) -> f64 {
        self.value * self.unit.seconds()
    }

    pub fn days(&self) -> f64 {
        self.seconds() / TimeUnit::Day.seconds()
    }
}

impl fmt::Display for TimeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Primary,
    #[default]
    Contaminant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsotopeSpec {
    pub name: String,
    pub half_life: TimeValue,
    #[serde(default)]
    pub gamma_lines_kev: Vec<f64>,
    /// MBq per µAh of beam charge.
    #[serde(default)]
    pub thick_target_yield_mbq_per_uah: f64,
    #[serde(default)]
    pub role: Role,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

impl IsotopeSpec {
    pub fn new(
        name: impl Into<String>,
        half_life: TimeValue,
        yield_mbq_per_uah: f64,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            half_life,
            gamma_lines_kev: Vec::new(),
            thick_target_yield_mbq_per_uah: yield_mbq_per_uah,
            role: Role::Primary,
            notes: String::new(),
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        let t = self.half_life.seconds();
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Catalog(format!(
                "{}: half-life must be positive, got {}",
                self.name, self.half_life
            )));
        }
        let y = self.thick_target_yield_mbq_per_uah;
        if !(y >= 0.0 && y.is_finite()) {
            return Err(Error::Catalog(format!(
                "{}: yield must be >= 0, got {y}",
                self.name
            )));
        }
        Ok(())
    }

    pub fn half_life_seconds(&self) -> f64 {
        self.half_life.seconds()
    }

    pub fn mean_life_days(&self) -> f64 {
        self.half_life.days() / LN_2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    schema_version: u32,
    #[serde(default, rename = "isotope")]
    isotopes: Vec<IsotopeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Catalog {
    isotopes: Vec<IsotopeSpec>,
}

impl Catalog {
    pub fn new(isotopes: Vec<IsotopeSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for iso in &isotopes {
            iso.check()?;
            if !seen.insert(iso.name.as_str()) {
                return Err(Error::Catalog(format!(
                    "duplicate isotope name {:?}",
                    iso.name
                )));
            }
        }
        Ok(Self { isotopes })
    }

    /// The tin catalog shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_toml(BUNDLED_CATALOG).expect("bundled catalog is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: CatalogFile = toml::from_str(text).map_err(|e| Error::Catalog(e.to_string()))?;
        if file.schema_version != CATALOG_SCHEMA_VERSION {
            return Err(Error::Catalog(format!(
                "unsupported catalog schema_version {} (expected {CATALOG_SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        Self::new(file.isotopes)
    }

    pub fn to_toml(&self) -> String {
        let file = CatalogFile {
            schema_version: CATALOG_SCHEMA_VERSION,
            isotopes: self.isotopes.clone(),
        };
        toml::to_string(&file).expect("catalog serializes")
    }

    pub fn isotopes(&self) -> &[IsotopeSpec] {
        &self.isotopes
    }

    pub fn get(&self, name: &str) -> Option<&IsotopeSpec> {
        self.isotopes.iter().find(|i| i.name == name)
    }

    pub fn primary(&self) -> Option<&IsotopeSpec> {
        self.isotopes.iter().find(|i| i.role == Role::Primary)
    }
}

/// Activity in Bq after `hours` of irradiation at `current_ua` µA.
pub fn activity_from_irradiation(spec: &IsotopeSpec, current_ua: f64, hours: f64) -> Result<f64> {
    if !(current_ua >= 0.0 && hours >= 0.0) {
        return Err(Error::domain(format!(
            "beam current and irradiation time must be >= 0, got {current_ua} µA, {hours} h"
        )));
    }
    Ok(spec.thick_target_yield_mbq_per_uah * current_ua * hours * 1e6)
}

/// Excited nuclei behind an activity: `A * T½ / ln 2`.
pub fn nuclei_from_activity(activity_bq: f64, spec: &IsotopeSpec) -> Result<f64> {
    if !(activity_bq >= 0.0) {
        return Err(Error::domain(format!(
            "activity must be >= 0, got {activity_bq}"
        )));
    }
    Ok(activity_bq * spec.half_life_seconds() / LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductionPlan {
    pub beam_current_ua: f64,
    pub irradiation_hours: f64,
    pub target_mu: f64,
    pub sample_volume_mm3: f64,
}

impl ProductionPlan {
    pub fn new(
        beam_current_ua: f64,
        irradiation_hours: f64,
        target_mu: f64,
        sample_volume_mm3: f64,
    ) -> Result<Self> {
        let plan = Self {
            beam_current_ua,
            irradiation_hours,
            target_mu,
            sample_volume_mm3,
        };
        plan.check()?;
        Ok(plan)
    }

    pub fn check(&self) -> Result<()> {
        for (name, v) in [
            ("beam_current_ua", self.beam_current_ua),
            ("irradiation_hours", self.irradiation_hours),
            ("target_mu", self.target_mu),
            ("sample_volume_mm3", self.sample_volume_mm3),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilutionPlan {
    pub total_nuclei: f64,
    pub target_mu: f64,
    /// Standard samples that can be spotted at the target mean.
    pub samples_available: f64,
    /// Concentration ratio between the undiluted product held in one
    /// sample volume and the target concentration.
    pub dilution_factor: f64,
    /// Excited nuclei per mm³ after dilution.
    pub target_concentration_per_mm3: f64,
    pub warnings: Vec<Warning>,
}

impl DilutionPlan {
    /// Whether the product covers a plate of `pairs` cell pairs.
    pub fn covers(&self, pairs: usize) -> bool {
        self.total_nuclei >= required_nuclei(pairs, self.target_mu)
    }
}

pub fn dilution_plan(total_nuclei: f64, plan: &ProductionPlan) -> Result<DilutionPlan> {
    plan.check()?;
    if !(total_nuclei >= 1.0) {
        return Err(Error::domain(format!(
            "need at least one nucleus, got {total_nuclei}"
        )));
    }
    let mut warnings = Vec::new();
    if plan.target_mu >= 1.0 {
        warnings.push(Warning::new(
            "target_mu",
            format!(
                "µ = {} makes multi-nucleus samples common; the protocol assumes µ << 1",
                plan.target_mu
            ),
        ));
    }
    let samples = total_nuclei / plan.target_mu;
    Ok(DilutionPlan {
        total_nuclei,
        target_mu: plan.target_mu,
        samples_available: samples,
        dilution_factor: samples,
        target_concentration_per_mm3: plan.target_mu / plan.sample_volume_mm3,
        warnings,
    })
}

/// Mean excited nuclei a plate of `pairs` pairs consumes: `pairs * µ`.
pub fn required_nuclei(pairs: usize, mu: f64) -> f64 {
    pairs as f64 * mu
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationEntry {
    pub name: String,
    pub half_life: TimeValue,
    pub decayed_fraction: f64,
    /// Enough decays inside the window to add counts at the detector.
    pub significant: bool,
}

/// Decayed fraction `1 - exp(-duration / τ)` of every contaminant.
pub fn contamination_report(
    catalog: &Catalog,
    duration_days: f64,
) -> Result<Vec<ContaminationEntry>> {
    if !(duration_days >= 0.0) {
        return Err(Error::domain(format!(
            "duration must be >= 0, got {duration_days}"
        )));
    }
    Ok(catalog
        .isotopes()
        .iter()
        .filter(|i| i.role == Role::Contaminant)
        .map(|i| {
            let fraction = -(-duration_days / i.mean_life_days()).exp_m1();
            ContaminationEntry {
                name: i.name.clone(),
                half_life: i.half_life,
                decayed_fraction: fraction,
                significant: fraction >= CONTAMINATION_FLAG,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sn117m() -> IsotopeSpec {
        Catalog::bundled().get("Sn-117m").unwrap().clone()
    }

    #[test]
    fn bundled_catalog_contents() {
        let c = Catalog::bundled();
        let names: Vec<_> = c.isotopes().iter().map(|i| i.name.as_str()).collect();
        assert_eq!(names, ["Sn-117m", "Sn-113", "Sn-119m", "Sn-121m", "Sn-123"]);
        let p = c.primary().unwrap();
        assert_eq!(p.name, "Sn-117m");
        assert_eq!(p.half_life.days(), 13.6);
        assert_eq!(p.gamma_lines_kev, [156.0, 158.56]);
        assert_eq!(c.get("Sn-121m").unwrap().half_life.days(), 50.0 * 365.25);
    }

    #[test]
    fn catalog_round_trips() {
        let c = Catalog::bundled();
        assert_eq!(Catalog::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn catalog_rejects_bad_records() {
        let dup = "schema_version = 1\n\
            [[isotope]]\nname = \"A\"\nhalf_life = { value = 1.0, unit = \"d\" }\n\
            [[isotope]]\nname = \"A\"\nhalf_life = { value = 2.0, unit = \"d\" }\n";
        assert!(Catalog::from_toml(dup).is_err());
        let zero = "schema_version = 1\n\
            [[isotope]]\nname = \"A\"\nhalf_life = { value = 0.0, unit = \"d\" }\n";
        assert!(Catalog::from_toml(zero).is_err());
        let neg = zero.replace("0.0", "-3.0");
        assert!(Catalog::from_toml(&neg).is_err());
        let version = "schema_version = 7\n";
        assert!(Catalog::from_toml(version).is_err());
        let unit = "schema_version = 1\n\
            [[isotope]]\nname = \"A\"\nhalf_life = { value = 1.0, unit = \"fortnight\" }\n";
        assert!(Catalog::from_toml(unit).is_err());
    }

    #[test]
    fn irradiation_examples() {
        let s = sn117m();
        assert_eq!(activity_from_irradiation(&s, 1.0, 1.0).unwrap(), 1e6);
        assert_eq!(activity_from_irradiation(&s, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(activity_from_irradiation(&s, 10.0, 0.5).unwrap(), 5e6);
        assert!(activity_from_irradiation(&s, -1.0, 1.0).is_err());
    }

    #[test]
    fn nuclei_examples() {
        let s = sn117m();
        let n = nuclei_from_activity(1e6, &s).unwrap();
        assert_eq!(n, 1e6 * 13.6 * 86_400.0 / LN_2);
        assert!((n / 1.695_224_380_8e12 - 1.0).abs() < 1e-10);
        assert_eq!(nuclei_from_activity(0.0, &s).unwrap(), 0.0);
        let unit = IsotopeSpec::new("u", TimeValue::new(LN_2, TimeUnit::Second), 1.0).unwrap();
        assert!((nuclei_from_activity(1.0, &unit).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nuclei_scale_linearly_with_charge() {
        let s = sn117m();
        let base =
            nuclei_from_activity(activity_from_irradiation(&s, 1.0, 1.0).unwrap(), &s).unwrap();
        for (c, h) in [(2.0, 1.0), (1.0, 3.0), (0.5, 0.25), (7.0, 11.0)] {
            let n = nuclei_from_activity(activity_from_irradiation(&s, c, h).unwrap(), &s).unwrap();
            assert!((n / (base * c * h) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dilution_examples() {
        let plan = ProductionPlan::new(1.0, 1.0, 0.1, 1.0).unwrap();
        let d = dilution_plan(1e12, &plan).unwrap();
        assert!((d.samples_available / 1e13 - 1.0).abs() < 1e-12);
        assert!(d.warnings.is_empty());
        assert_eq!(
            dilution_plan(
                1.0,
                &ProductionPlan {
                    target_mu: 1.0,
                    ..plan
                }
            )
            .unwrap()
            .samples_available,
            1.0
        );
        assert!(!dilution_plan(
            5.0,
            &ProductionPlan {
                target_mu: 1.0,
                ..plan
            }
        )
        .unwrap()
        .warnings
        .is_empty());
        assert!(dilution_plan(0.5, &plan).is_err());
        assert!(ProductionPlan::new(0.0, 1.0, 0.1, 1.0).is_err());
        assert!((required_nuclei(2400, 0.1) - 240.0).abs() < 1e-9);
        let d = dilution_plan(240.0, &plan).unwrap();
        assert!(d.covers(2400));
        assert!(!d.covers(2401));
    }

    #[test]
    fn contamination_examples() {
        let c = Catalog::bundled();
        let r = contamination_report(&c, 0.0).unwrap();
        assert_eq!(r.len(), 4);
        assert!(r
            .iter()
            .all(|e| e.decayed_fraction == 0.0 && !e.significant));

        let r = contamination_report(&c, 30.0).unwrap();
        let get = |n: &str| r.iter().find(|e| e.name == n).unwrap();
        assert!((get("Sn-121m").decayed_fraction - 1.137_99e-3).abs() < 1e-8);
        assert!(!get("Sn-121m").significant);
        assert!((get("Sn-113").decayed_fraction - 0.165_284).abs() < 1e-6);
        assert!(get("Sn-113").significant);
        assert!(contamination_report(&c, -1.0).is_err());
    }
}
