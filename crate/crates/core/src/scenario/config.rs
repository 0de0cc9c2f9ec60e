//! Scenario file schema.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::hazard::{OverrideOp, Selector};
use crate::health::Disease;
use crate::ict::{AttackProfile, AttackType};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub horizon_days: u64,
    #[serde(default = "default_tick_per_day")]
    pub tick_per_day: u64,
    #[serde(default)]
    pub landscape: Landscape,
    #[serde(default)]
    pub population: Population,
    #[serde(default)]
    pub ict: Ict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub health: Option<Health>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mobility: Option<Mobility>,
    #[serde(default)]
    pub hazards: Vec<HazardSpec>,
    #[serde(default)]
    pub mitigations: BTreeMap<String, Vec<MitigationStep>>,
    #[serde(default)]
    pub rules: Rules,
}

fn default_tick_per_day() -> u64 {
    24
}

impl ScenarioConfig {
    pub fn horizon_ticks(&self) -> u64 {
        self.horizon_days * self.tick_per_day
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Landscape {
    #[serde(default)]
    pub districts: Vec<String>,
    #[serde(default)]
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub streets: Vec<StreetSpec>,
    #[serde(default)]
    pub places: Vec<PlaceSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub district: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreetSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Metres.
    pub length: f64,
}

pub const HOME: &str = "home";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaceSpec {
    pub id: String,
    /// `home` places are residential; any other kind is a destination
    /// timetables can name.
    pub kind: String,
    pub node: String,
    pub capacity: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Population {
    #[serde(default = "default_k")]
    pub contacts_k: f64,
    #[serde(default = "default_jitter")]
    pub jitter_hours: i64,
    #[serde(default = "default_cross")]
    pub cross_district_share: f64,
    #[serde(default = "default_households")]
    pub household_sizes: Vec<Weighted<i64>>,
    #[serde(default)]
    pub vaccinated_share: f64,
    #[serde(default)]
    pub districts: Vec<DistrictPopulation>,
    #[serde(default)]
    pub templates: Vec<Template>,
}

impl Default for Population {
    fn default() -> Self {
        Population {
            contacts_k: default_k(),
            jitter_hours: default_jitter(),
            cross_district_share: default_cross(),
            household_sizes: default_households(),
            vaccinated_share: 0.0,
            districts: Vec::new(),
            templates: Vec::new(),
        }
    }
}

fn default_k() -> f64 {
    4.0
}

fn default_jitter() -> i64 {
    1
}

fn default_cross() -> f64 {
    0.1
}

fn default_households() -> Vec<Weighted<i64>> {
    [(1, 0.3), (2, 0.35), (3, 0.2), (4, 0.15)]
        .into_iter()
        .map(|(size, weight)| Weighted { size, weight })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weighted<T> {
    pub size: T,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistrictPopulation {
    pub district: String,
    pub citizens: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Template {
    pub name: String,
    pub weight: f64,
    pub slots: Vec<SlotSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotSpec {
    /// Hour of the day (tick of the day) the slot begins.
    pub start: i64,
    pub activity: String,
    /// `home`, or a place kind.
    pub place: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ict {
    #[serde(default)]
    pub nodes: Vec<IctNode>,
    #[serde(default)]
    pub attackers: Vec<AttackerSpec>,
    #[serde(default)]
    pub attack_types: BTreeMap<AttackType, AttackProfile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IctNode {
    pub id: String,
    /// Defaults to the host's district.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub district: Option<String>,
    /// Hospital or traffic light embedding this node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host: Option<String>,
    pub vulnerability: f64,
    pub recovery_ticks: i64,
    #[serde(default = "default_service_capacity")]
    pub service_capacity: f64,
    #[serde(default)]
    pub depends_on: Vec<String>,
}

fn default_service_capacity() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerSpec {
    pub id: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Health {
    pub disease: Disease,
    #[serde(default)]
    pub hospitals: Vec<HospitalSpecCfg>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HospitalSpecCfg {
    pub id: String,
    pub district: String,
    pub general_capacity: i64,
    pub icu_capacity: i64,
    pub care_quality: f64,
    #[serde(default)]
    pub referral_peers: Vec<String>,
    #[serde(default = "default_capacity_factor")]
    pub capacity_degradation_factor: f64,
    #[serde(default = "default_quality_factor")]
    pub quality_degradation_factor: f64,
}

fn default_capacity_factor() -> f64 {
    0.5
}

fn default_quality_factor() -> f64 {
    0.75
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mobility {
    #[serde(default = "default_adapter")]
    pub adapter: String,
    #[serde(default = "default_light_off")]
    pub light_off_factor: f64,
    #[serde(default = "default_v_min")]
    pub v_min_frac: f64,
    pub roadway_defaults: RoadwayDefaults,
    #[serde(default)]
    pub roadways: Vec<RoadwayCfg>,
    #[serde(default)]
    pub lights: Vec<LightCfg>,
}

fn default_adapter() -> String {
    "reference".into()
}

fn default_light_off() -> f64 {
    0.4
}

fn default_v_min() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadwayDefaults {
    pub free_flow_speed: f64,
    pub capacity: f64,
    #[serde(default)]
    pub background_flow: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadwayCfg {
    pub id: String,
    pub street: String,
    /// Runs from the street's `to` node to its `from` node.
    #[serde(default)]
    pub reverse: bool,
    #[serde(default)]
    pub station: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub light: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_flow_speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_flow: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightCfg {
    pub id: String,
    pub district: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HazardSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tick: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub day: Option<i64>,
    pub kind: String,
    pub target: Selector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attacker: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_type: Option<AttackType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default)]
    pub overrides: BTreeMap<String, OverrideOp>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MitigationStep {
    pub target: Selector,
    pub overrides: BTreeMap<String, OverrideOp>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rules {
    /// Role name to rule names replacing the defaults.
    #[serde(default)]
    pub roles: BTreeMap<String, RoleRules>,
    /// Agent kind to agent rule name.
    #[serde(default)]
    pub agents: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleRules {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ob: Option<String>,
}
