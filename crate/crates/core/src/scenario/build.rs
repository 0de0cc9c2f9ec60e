//! Scenario config to world: population synthesis, subagent declarations,
//! parameters, mitigations, initial states, rule book and federation.

use std::collections::BTreeMap;

use super::config::*;
use super::ScenarioError;
use crate::hazard::{apply_overrides, HazardEvent, HazardKind, HazardSchedule, Override, Selector};
use crate::health;
use crate::ict::{self, AttackProfiles};
use crate::kernel::{
    stream_key, Ix, Layout, Params, Role, RuleBook, Stage, State, StreamRng, SubAgentDecl, Value,
    World, WorldBuilder, IDENTITY, NO_METRICS,
};
use crate::mobility::{self, Link, RoadwaySpec, StreetGraph};
use crate::social;

pub const BASELINE: &str = "baseline";
pub const RISK: &str = "risk";

/// A named run of a scenario: with or without hazards, plus mitigation
/// bundles applied on top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variant {
    pub name: String,
    pub hazards: bool,
    pub mitigations: Vec<String>,
}

impl Variant {
    pub fn baseline() -> Self {
        Variant {
            name: BASELINE.into(),
            hazards: false,
            mitigations: Vec::new(),
        }
    }

    pub fn risk() -> Self {
        Variant {
            name: RISK.into(),
            hazards: true,
            mitigations: Vec::new(),
        }
    }

    /// `baseline`, `risk`, a declared mitigation, or several joined by `+`.
    pub fn parse(name: &str, config: &ScenarioConfig) -> Result<Self, ScenarioError> {
        match name {
            BASELINE => return Ok(Self::baseline()),
            RISK => return Ok(Self::risk()),
            _ => {}
        }
        let parts: Vec<String> = name.split('+').map(|s| s.trim().to_string()).collect();
        for p in &parts {
            if !config.mitigations.contains_key(p) {
                return Err(ScenarioError::UnknownVariant(p.clone()));
            }
        }
        Ok(Variant {
            name: name.to_string(),
            hazards: true,
            mitigations: parts,
        })
    }

    /// Baseline, risk, then every declared mitigation.
    pub fn all(config: &ScenarioConfig) -> Vec<Variant> {
        let mut v = vec![Self::baseline(), Self::risk()];
        for m in config.mitigations.keys() {
            v.push(Variant {
                name: m.clone(),
                hazards: true,
                mitigations: vec![m.clone()],
            });
        }
        v
    }
}

/// A world ready to run.
pub struct Prepared {
    pub variant: String,
    pub world: World,
    pub schedule: HazardSchedule,
    pub horizon: u64,
    pub tick_per_day: u64,
    /// Station roadway ids with their districts.
    pub stations: Vec<(String, Option<String>)>,
}

/// Default (IR, SR, OB) bindings per role.
pub fn default_bindings(role: Role) -> (&'static str, &'static str, &'static str) {
    match role {
        Role::CyberAttacker => ("ict.attacker", "ict.network", "ict.attacker"),
        Role::CyberInfrastructure => ("ict.recovery", "ict.network", "ict.infrastructure"),
        Role::Patient => ("health.disease", "health.network", "health.patient"),
        Role::Hospital => ("health.care", "health.network", "health.hospital"),
        Role::Citizen => ("social.daily", "social.contacts", "social.citizen"),
        Role::Passenger => (IDENTITY, "mobility.routing", NO_METRICS),
        Role::Roadway => (IDENTITY, IDENTITY, "mobility.roadway"),
        Role::TrafficLight => (IDENTITY, IDENTITY, "mobility.light"),
        Role::Place => (IDENTITY, "landscape.occupancy", "landscape.place"),
        Role::MovingEntity | Role::Street | Role::FixedEntity => (IDENTITY, IDENTITY, NO_METRICS),
    }
}

pub fn default_agent_rule(kind: &str) -> &'static str {
    match kind {
        "citizen" => "citizen.coupling",
        "hospital" => "health.hospital",
        "traffic-light" => "mobility.light",
        _ => IDENTITY,
    }
}

/// One synthesized citizen.
#[derive(Clone, Debug, PartialEq)]
pub struct CitizenPlan {
    pub id: String,
    pub district: String,
    pub household: String,
    pub home: String,
    pub template: String,
    pub slots: Vec<(i64, String, String)>,
    pub vaccinated: bool,
}

fn pick_weighted<T>(rng: &mut StreamRng, items: &[T], weight: impl Fn(&T) -> f64) -> usize {
    let total: f64 = items.iter().map(&weight).sum();
    let mut u = rng.uniform() * total;
    for (i, it) in items.iter().enumerate() {
        u -= weight(it);
        if u < 0.0 {
            return i;
        }
    }
    items.len() - 1
}

/// Households, timetables and destinations for every citizen. Depends on
/// the seed and the population and landscape sections only.
pub fn plan_population(config: &ScenarioConfig) -> Result<Vec<CitizenPlan>, String> {
    let pop = &config.population;
    let node_district: BTreeMap<&str, &str> = config
        .landscape
        .nodes
        .iter()
        .map(|n| (n.id.as_str(), n.district.as_str()))
        .collect();
    let place_district = |p: &PlaceSpec| node_district.get(p.node.as_str()).copied().unwrap_or("");
    let mut rng = StreamRng::new(stream_key(config.seed, "population"), 0, Stage::Init, "synthesis");
    let mut out = Vec::new();
    for dp in &pop.districts {
        let homes: Vec<&PlaceSpec> = config
            .landscape
            .places
            .iter()
            .filter(|p| p.kind == HOME && place_district(p) == dp.district)
            .collect();
        if homes.is_empty() && dp.citizens > 0 {
            return Err(format!("district `{}` has citizens but no home places", dp.district));
        }
        let (mut i, mut h) = (0usize, 0usize);
        while i < dp.citizens {
            let k = pick_weighted(&mut rng, &pop.household_sizes, |w| w.weight);
            let size = (pop.household_sizes[k].size.max(1) as usize).min(dp.citizens - i);
            let home = homes[h % homes.len()];
            let household = format!("hh-{}-{h:04}", dp.district);
            for _ in 0..size {
                let t = pick_weighted(&mut rng, &pop.templates, |t| t.weight);
                let template = &pop.templates[t];
                let mut chosen: BTreeMap<&str, String> = BTreeMap::new();
                let mut slots = Vec::new();
                for s in &template.slots {
                    let place = if s.place == HOME {
                        home.id.clone()
                    } else if let Some(p) = chosen.get(s.place.as_str()) {
                        p.clone()
                    } else {
                        let (own, other): (Vec<&PlaceSpec>, Vec<&PlaceSpec>) = config
                            .landscape
                            .places
                            .iter()
                            .filter(|p| p.kind == s.place)
                            .partition(|p| place_district(p) == dp.district);
                        let away = !other.is_empty()
                            && (own.is_empty() || rng.uniform() < pop.cross_district_share);
                        let pool = if away { &other } else { &own };
                        if pool.is_empty() {
                            return Err(format!("no place of kind `{}`", s.place));
                        }
                        let p = pool[rng.index(pool.len())].id.clone();
                        chosen.insert(s.place.as_str(), p.clone());
                        p
                    };
                    slots.push((s.start, s.activity.clone(), place));
                }
                let vaccinated = rng.uniform() < pop.vaccinated_share;
                out.push(CitizenPlan {
                    id: format!("c-{}-{i:04}", dp.district),
                    district: dp.district.clone(),
                    household: household.clone(),
                    home: home.id.clone(),
                    template: template.name.clone(),
                    slots,
                    vaccinated,
                });
                i += 1;
            }
            h += 1;
        }
    }
    Ok(out)
}

fn hazard_kind(spec: &HazardSpec) -> Result<HazardKind, String> {
    match spec.kind.as_str() {
        "cyberattack" => Ok(HazardKind::Cyberattack {
            attacker: spec
                .attacker
                .clone()
                .ok_or("cyberattack without `attacker`")?,
            attack_type: spec.attack_type.ok_or("cyberattack without `attack_type`")?,
        }),
        "disease_seed" => Ok(HazardKind::DiseaseSeed {
            count: spec.count.ok_or("disease_seed without `count`")?,
        }),
        "generic_override" => Ok(HazardKind::GenericOverride),
        other => Err(format!("unknown hazard kind `{other}`")),
    }
}

pub fn overrides(map: &BTreeMap<String, crate::hazard::OverrideOp>) -> Vec<Override> {
    map.iter()
        .map(|(param, op)| Override {
            param: param.clone(),
            op: op.clone(),
        })
        .collect()
}

/// The full event list of the scenario, ignoring variants.
pub fn schedule(config: &ScenarioConfig) -> Result<HazardSchedule, Vec<String>> {
    let mut events = Vec::new();
    let mut errs = Vec::new();
    for (i, h) in config.hazards.iter().enumerate() {
        let at = format!("hazards[{i}] (`{}`)", h.id);
        let trigger = match (h.tick, h.day) {
            (Some(t), None) => t,
            (None, Some(d)) => d * config.tick_per_day as i64,
            _ => {
                errs.push(format!("{at}: give exactly one of `tick` and `day`"));
                continue;
            }
        };
        match hazard_kind(h) {
            Ok(kind) => events.push(HazardEvent {
                id: h.id.clone(),
                trigger_tick: trigger,
                kind,
                target: h.target.clone(),
                overrides: overrides(&h.overrides),
            }),
            Err(e) => errs.push(format!("{at}: {e}")),
        }
    }
    if errs.is_empty() {
        Ok(HazardSchedule::new(events))
    } else {
        Err(errs)
    }
}

struct Decls<'a> {
    builder: WorldBuilder,
    rules: &'a Rules,
}

impl Decls<'_> {
    fn agent(&mut self, id: &str, kind: &str) {
        let ar = self
            .rules
            .agents
            .get(kind)
            .map_or(default_agent_rule(kind), String::as_str);
        self.builder.agent(id, kind, ar);
    }

    fn sub(&mut self, id: &str, agent: &str, role: Role, district: Option<&str>) {
        let (ir, sr, ob) = default_bindings(role);
        let o = self.rules.roles.get(role.as_str());
        let pick = |x: Option<&Option<String>>, d: &str| {
            x.and_then(|v| v.clone()).unwrap_or_else(|| d.to_string())
        };
        self.builder.subagent(SubAgentDecl {
            id: id.to_string(),
            agent: agent.to_string(),
            role,
            district: district.map(str::to_string),
            ir: pick(o.map(|r| &r.ir), ir),
            sr: pick(o.map(|r| &r.sr), sr),
            ob: pick(o.map(|r| &r.ob), ob),
        });
    }
}

fn selector_matches(sel: &Selector, d: &SubAgentDecl) -> bool {
    sel.matches(&d.id, d.role, d.district.as_deref())
}

/// Applies mitigation bundles to layout parameters.
pub fn apply_mitigations(
    layout: &mut Layout,
    config: &ScenarioConfig,
    names: &[String],
) -> Result<(), Vec<String>> {
    let mut errs = Vec::new();
    for name in names {
        let Some(steps) = config.mitigations.get(name) else {
            errs.push(format!("unknown mitigation `{name}`"));
            continue;
        };
        for (i, step) in steps.iter().enumerate() {
            let at = format!("mitigations.{name}[{i}]");
            if let Err(e) = step.target.check() {
                errs.push(format!("{at}: {e}"));
                continue;
            }
            let targets: Vec<Ix> = (0..layout.len() as u32)
                .map(Ix)
                .filter(|ix| selector_matches(&step.target, layout.decl(*ix)))
                .collect();
            if targets.is_empty() {
                errs.push(format!("{at}: selector {} matches no subagent", step.target));
            }
            let ovs = overrides(&step.overrides);
            for ix in targets {
                let id = layout.decl(ix).id.clone();
                if let Err(e) = apply_overrides(layout.params_mut(ix), &ovs) {
                    errs.push(format!("{at}: `{id}`: {e}"));
                    break;
                }
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

fn citizen_ids(c: &CitizenPlan) -> [String; 4] {
    [
        format!("{}.citizen", c.id),
        format!("{}.patient", c.id),
        format!("{}.passenger", c.id),
        format!("{}.entity", c.id),
    ]
}

/// Builds the world for one variant.
pub fn prepare(config: &ScenarioConfig, variant: &Variant) -> Result<Prepared, ScenarioError> {
    let errs = super::validate::structural(config);
    if !errs.is_empty() {
        return Err(ScenarioError::Invalid(errs));
    }
    let population = plan_population(config).map_err(|e| ScenarioError::Invalid(vec![e]))?;
    let land = &config.landscape;
    let node_ix: BTreeMap<&str, usize> = land
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i))
        .collect();
    let node_district = |id: &str| land.nodes[node_ix[id]].district.as_str();
    let hospitals: &[HospitalSpecCfg] = config.health.as_ref().map_or(&[], |h| &h.hospitals);
    let host_district: BTreeMap<&str, &str> = hospitals
        .iter()
        .map(|h| (h.id.as_str(), h.district.as_str()))
        .chain(
            config
                .mobility
                .iter()
                .flat_map(|m| &m.lights)
                .map(|l| (l.id.as_str(), l.district.as_str())),
        )
        .collect();
    let ict_district = |n: &IctNode| {
        n.district
            .clone()
            .or_else(|| n.host.as_deref().and_then(|h| host_district.get(h)).map(|d| d.to_string()))
    };

    let mut d = Decls {
        builder: WorldBuilder::new(config.seed),
        rules: &config.rules,
    };
    for p in &land.places {
        d.agent(&p.id, "place");
        d.sub(&p.id, &p.id, Role::Place, Some(node_district(&p.node)));
    }
    for s in &land.streets {
        d.agent(&s.id, "street");
        d.sub(&s.id, &s.id, Role::Street, Some(node_district(&s.from)));
    }
    for n in &config.ict.nodes {
        let agent = match &n.host {
            Some(h) => h.clone(),
            None => {
                d.agent(&n.id, "ict-node");
                n.id.clone()
            }
        };
        d.sub(&n.id, &agent, Role::CyberInfrastructure, ict_district(n).as_deref());
    }
    for a in &config.ict.attackers {
        d.agent(&a.id, "attacker");
        d.sub(&a.id, &a.id, Role::CyberAttacker, None);
    }
    for h in hospitals {
        d.agent(&h.id, "hospital");
        d.sub(&h.id, &h.id, Role::Hospital, Some(&h.district));
    }
    let street_of: BTreeMap<&str, &StreetSpec> =
        land.streets.iter().map(|s| (s.id.as_str(), s)).collect();
    let roadway_nodes = |r: &RoadwayCfg| {
        let s = street_of[r.street.as_str()];
        if r.reverse {
            (s.to.as_str(), s.from.as_str())
        } else {
            (s.from.as_str(), s.to.as_str())
        }
    };
    if let Some(m) = &config.mobility {
        for l in &m.lights {
            d.agent(&l.id, "traffic-light");
            d.sub(&l.id, &l.id, Role::TrafficLight, Some(&l.district));
        }
        for r in &m.roadways {
            d.agent(&r.id, "roadway");
            d.sub(&r.id, &r.id, Role::Roadway, Some(node_district(roadway_nodes(r).1)));
        }
    }
    for c in &population {
        let [cit, pat, pax, ent] = citizen_ids(c);
        let dist = Some(c.district.as_str());
        d.agent(&c.id, "citizen");
        d.sub(&cit, &c.id, Role::Citizen, dist);
        if config.health.is_some() {
            d.sub(&pat, &c.id, Role::Patient, dist);
        }
        if config.mobility.is_some() {
            d.sub(&pax, &c.id, Role::Passenger, dist);
        }
        d.sub(&ent, &c.id, Role::MovingEntity, dist);
    }
    let mut layout = d.builder.layout()?;
    let ix = |layout: &Layout, id: &str| layout.ix(id).expect("declared above");

    for p in &land.places {
        let n = &land.nodes[node_ix[p.node.as_str()]];
        let params = Params::new()
            .with("kind", Value::Text(p.kind.clone()))
            .with("capacity", Value::Int(p.capacity))
            .with("residential", Value::Bool(p.kind == HOME))
            .with("x", Value::Float(n.x))
            .with("y", Value::Float(n.y));
        let i = ix(&layout, &p.id);
        layout.set_params(i, params);
    }
    for s in &land.streets {
        let params = Params::new()
            .with("length", Value::Float(s.length))
            .with("from", Value::Text(s.from.clone()))
            .with("to", Value::Text(s.to.clone()));
        let i = ix(&layout, &s.id);
        layout.set_params(i, params);
    }
    for n in &config.ict.nodes {
        let i = ix(&layout, &n.id);
        layout.set_params(
            i,
            ict::infrastructure_params(n.vulnerability, n.recovery_ticks, n.service_capacity),
        );
        for dep in &n.depends_on {
            layout.edge(&n.id, dep, "depends_on");
        }
    }
    for h in hospitals {
        let spec = health::HospitalSpec {
            general_capacity: h.general_capacity,
            icu_capacity: h.icu_capacity,
            care_quality: h.care_quality,
            referral_peers: h.referral_peers.iter().map(|p| ix(&layout, p)).collect(),
            capacity_degradation_factor: h.capacity_degradation_factor,
            quality_degradation_factor: h.quality_degradation_factor,
        };
        let i = ix(&layout, &h.id);
        layout.set_params(i, health::hospital_params(&spec));
        for p in &h.referral_peers {
            layout.edge(&h.id, p, "referral");
        }
    }
    for a in &land.streets {
        for b in &land.streets {
            let touch = [&a.from, &a.to].iter().any(|x| *x == &b.from || *x == &b.to);
            if a.id != b.id && touch {
                layout.edge(&a.id, &b.id, "linked");
            }
        }
    }
    if let Some(m) = &config.mobility {
        for r in &m.roadways {
            let s = street_of[r.street.as_str()];
            let spec = RoadwaySpec {
                id: r.id.clone(),
                length: s.length,
                free_flow_speed: r.free_flow_speed.unwrap_or(m.roadway_defaults.free_flow_speed),
                capacity: r.capacity.unwrap_or(m.roadway_defaults.capacity),
                background_flow: r.background_flow.unwrap_or(m.roadway_defaults.background_flow),
                light: r.light.clone(),
                station: r.station,
            };
            let light = r.light.as_deref().map(|l| ix(&layout, l));
            let i = ix(&layout, &r.id);
            layout.set_params(i, mobility::roadway_params(&spec, light));
        }
    }
    let hospital_of: BTreeMap<&str, Ix> = land
        .districts
        .iter()
        .filter_map(|d| {
            let h = hospitals.iter().find(|h| &h.district == d).or(hospitals.first())?;
            Some((d.as_str(), ix(&layout, &h.id)))
        })
        .collect();
    let mut timetables = Vec::with_capacity(population.len());
    for c in &population {
        let [cit, pat, _, _] = citizen_ids(c);
        let slots: Vec<social::Slot> = c
            .slots
            .iter()
            .map(|(start, activity, place)| social::Slot {
                start: *start,
                activity: activity.clone(),
                place: ix(&layout, place),
            })
            .collect();
        let home = ix(&layout, &c.home);
        let i = ix(&layout, &cit);
        layout.set_params(i, social::citizen_params(home, &c.household, &slots));
        if config.health.is_some() {
            let params = health::patient_params(hospital_of.get(c.district.as_str()).copied(), c.vaccinated);
            let i = ix(&layout, &pat);
            layout.set_params(i, params);
        }
        timetables.push(slots);
    }

    apply_mitigations(&mut layout, config, &variant.mitigations).map_err(ScenarioError::Invalid)?;

    let mut occupants: BTreeMap<Ix, Vec<Ix>> = BTreeMap::new();
    for (c, slots) in population.iter().zip(&timetables) {
        let [cit, pat, pax, ent] = citizen_ids(c);
        let here = slots[0].place;
        let e = ix(&layout, &ent);
        occupants.entry(here).or_default().push(e);
        let i = ix(&layout, &cit);
        layout.set_state(i, social::citizen_state(slots));
        if config.health.is_some() {
            let i = ix(&layout, &pat);
            layout.set_state(i, health::patient_state());
        }
        if config.mobility.is_some() {
            let i = ix(&layout, &pax);
            layout.set_state(i, social::passenger_state());
        }
        layout.set_state(e, social::moving_entity_state(Some(here)));
    }
    for p in &land.places {
        let i = ix(&layout, &p.id);
        let mut list = occupants.remove(&i).unwrap_or_default();
        list.sort();
        layout.set_state(
            i,
            social::place_state()
                .with("occupancy", Value::Int(list.len() as i64))
                .with("occupants", Value::Refs(list)),
        );
    }
    for n in &config.ict.nodes {
        let i = ix(&layout, &n.id);
        layout.set_state(i, ict::infrastructure_state());
    }
    for a in &config.ict.attackers {
        let i = ix(&layout, &a.id);
        layout.set_state(i, ict::attacker_state());
    }
    for h in hospitals {
        let i = ix(&layout, &h.id);
        let st = {
            let params = layout.params_mut(i);
            health::hospital_state(params)
        }
        .map_err(|e| ScenarioError::Invalid(vec![format!("hospital `{}`: {e}", h.id)]))?;
        layout.set_state(i, st);
    }
    let mut stations = Vec::new();
    if let Some(m) = &config.mobility {
        for l in &m.lights {
            let i = ix(&layout, &l.id);
            layout.set_state(i, mobility::light_state());
        }
        for r in &m.roadways {
            let i = ix(&layout, &r.id);
            let vf = layout
                .params_mut(i)
                .f64("free_flow_speed")
                .map_err(|e| ScenarioError::Invalid(vec![format!("roadway `{}`: {e}", r.id)]))?;
            layout.set_state(i, mobility::roadway_state(vf));
            if r.station {
                stations.push((r.id.clone(), Some(node_district(roadway_nodes(r).1).to_string())));
            }
        }
    }
    for s in &land.streets {
        let i = ix(&layout, &s.id);
        layout.set_state(i, State::new());
    }

    let mut book = RuleBook::new();
    let mut profiles = AttackProfiles::default();
    for (t, p) in &config.ict.attack_types {
        profiles.set(*t, *p);
    }
    book.internal("ict.attacker", ict::AttackGeneration)
        .internal("ict.recovery", ict::Recovery)
        .system("ict.network", ict::Network { profiles })
        .observer("ict.infrastructure", ict::InfrastructureMetrics)
        .observer("ict.attacker", ict::AttackerMetrics);
    if let Some(h) = &config.health {
        book.internal(
            "health.disease",
            health::DiseaseProgress {
                disease: h.disease.clone(),
            },
        )
        .internal("health.care", health::Care)
        .system(
            "health.network",
            health::HealthNetwork {
                disease: h.disease.clone(),
            },
        );
    }
    book.agent("health.hospital", health::IctDegradation)
        .observer("health.hospital", health::HospitalMetrics)
        .observer("health.patient", health::PatientMetrics);
    let places: BTreeMap<Ix, social::PlaceInfo> = land
        .places
        .iter()
        .map(|p| {
            (
                ix(&layout, &p.id),
                social::PlaceInfo {
                    capacity: p.capacity,
                    residential: p.kind == HOME,
                },
            )
        })
        .collect();
    book.internal(
        "social.daily",
        social::DailyActivities {
            ticks_per_day: config.tick_per_day,
            jitter_hours: config.population.jitter_hours,
        },
    )
    .system(
        "social.contacts",
        social::Contacts {
            places,
            k: config.population.contacts_k,
        },
    )
    .agent("citizen.coupling", social::CitizenCoupling)
    .observer("social.citizen", social::CitizenMetrics)
    .system("landscape.occupancy", social::Occupancy)
    .observer("landscape.place", social::PlaceMetrics)
    .agent("mobility.light", mobility::LightCoupling)
    .observer("mobility.roadway", mobility::RoadwayMetrics)
    .observer("mobility.light", mobility::LightMetrics);
    if let Some(m) = &config.mobility {
        let mut links = Vec::new();
        for r in &m.roadways {
            let (a, b) = roadway_nodes(r);
            let i = ix(&layout, &r.id);
            let p = layout.params_mut(i);
            let cost = p.f64("length").unwrap_or(f64::INFINITY) / p.f64("free_flow_speed").unwrap_or(0.0);
            links.push(Link {
                from: node_ix[a],
                to: node_ix[b],
                cost,
                key: i,
                id: r.id.clone(),
            });
        }
        let graph = StreetGraph::new(land.nodes.len(), links);
        let place_node = land
            .places
            .iter()
            .map(|p| (ix(&layout, &p.id), node_ix[p.node.as_str()]))
            .collect();
        book.system("mobility.routing", mobility::Routing::new(&graph, place_node));
    }

    let mut world = layout.build(&book)?;
    if let Some(m) = &config.mobility {
        if m.adapter != "reference" {
            return Err(ScenarioError::Invalid(vec![format!(
                "mobility.adapter: unknown adapter `{}`",
                m.adapter
            )]));
        }
        let settings = mobility::FederationSettings {
            light_off_factor: m.light_off_factor,
            v_min_frac: m.v_min_frac,
            tick_seconds: 86_400.0 / config.tick_per_day as f64,
            seed: config.seed,
        };
        world.attach_federate(Box::new(mobility::MobilityFederate::new(
            Box::new(mobility::ReferenceTraffic::new()),
            settings,
        )))?;
    }

    let schedule = if variant.hazards {
        schedule(config).map_err(ScenarioError::Invalid)?
    } else {
        HazardSchedule::empty()
    };
    Ok(Prepared {
        variant: variant.name.clone(),
        world,
        schedule,
        horizon: config.horizon_ticks(),
        tick_per_day: config.tick_per_day,
        stations,
    })
}
