//! Scenario checks. Every problem is collected; nothing stops at the first.

use std::collections::{BTreeMap, BTreeSet};

use super::build::{prepare, schedule, Variant};
use super::config::*;
use super::ScenarioError;
use crate::kernel::Role;

fn unique<'a>(errs: &mut Vec<String>, at: &str, ids: impl IntoIterator<Item = &'a str>) -> BTreeSet<&'a str> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if id.is_empty() {
            errs.push(format!("{at}: empty id"));
        } else if !seen.insert(id) {
            errs.push(format!("{at}: duplicate id `{id}`"));
        }
    }
    seen
}

fn probability(errs: &mut Vec<String>, at: &str, v: f64) {
    if !(0.0..=1.0).contains(&v) {
        errs.push(format!("{at} = {v} is not in [0, 1]"));
    }
}

fn positive(errs: &mut Vec<String>, at: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{at} = {v} must be positive"));
    }
}

/// Checks that need no world: references, ranges, uniqueness, acyclicity.
pub fn structural(c: &ScenarioConfig) -> Vec<String> {
    let mut e = Vec::new();
    if c.horizon_days == 0 {
        e.push("horizon_days must be at least 1".into());
    }
    if c.tick_per_day == 0 {
        e.push("tick_per_day must be at least 1".into());
    }
    let land = &c.landscape;
    let districts = unique(&mut e, "landscape.districts", land.districts.iter().map(String::as_str));
    let nodes = unique(&mut e, "landscape.nodes", land.nodes.iter().map(|n| n.id.as_str()));
    for n in &land.nodes {
        if !districts.contains(n.district.as_str()) {
            e.push(format!("landscape.nodes `{}`: unknown district `{}`", n.id, n.district));
        }
    }
    let streets = unique(&mut e, "landscape.streets", land.streets.iter().map(|s| s.id.as_str()));
    for s in &land.streets {
        for end in [&s.from, &s.to] {
            if !nodes.contains(end.as_str()) {
                e.push(format!("landscape.streets `{}`: unknown node `{end}`", s.id));
            }
        }
        positive(&mut e, &format!("landscape.streets `{}`.length", s.id), s.length);
    }
    unique(&mut e, "landscape.places", land.places.iter().map(|p| p.id.as_str()));
    let mut kinds = BTreeSet::new();
    for p in &land.places {
        kinds.insert(p.kind.as_str());
        if !nodes.contains(p.node.as_str()) {
            e.push(format!("landscape.places `{}`: unknown node `{}`", p.id, p.node));
        }
        if p.capacity < 0 {
            e.push(format!("landscape.places `{}`: negative capacity", p.id));
        }
    }

    let pop = &c.population;
    if !(pop.contacts_k >= 0.0) {
        e.push("population.contacts_k must be non-negative".into());
    }
    if pop.jitter_hours < 0 {
        e.push("population.jitter_hours must be non-negative".into());
    }
    probability(&mut e, "population.cross_district_share", pop.cross_district_share);
    probability(&mut e, "population.vaccinated_share", pop.vaccinated_share);
    if pop.household_sizes.is_empty() || pop.household_sizes.iter().map(|w| w.weight).sum::<f64>() <= 0.0 {
        e.push("population.household_sizes needs a positive total weight".into());
    }
    for w in &pop.household_sizes {
        if w.size < 1 || !(w.weight >= 0.0) {
            e.push(format!("population.household_sizes: bad entry {} : {}", w.size, w.weight));
        }
    }
    let mut seen = BTreeSet::new();
    for d in &pop.districts {
        if !districts.contains(d.district.as_str()) {
            e.push(format!("population.districts: unknown district `{}`", d.district));
        }
        if !seen.insert(d.district.as_str()) {
            e.push(format!("population.districts: `{}` listed twice", d.district));
        }
    }
    let citizens: usize = pop.districts.iter().map(|d| d.citizens).sum();
    if citizens > 0 && (pop.templates.is_empty() || pop.templates.iter().map(|t| t.weight).sum::<f64>() <= 0.0) {
        e.push("population.templates: citizens need at least one template with positive weight".into());
    }
    for t in &pop.templates {
        let at = format!("population.templates `{}`", t.name);
        if !(t.weight >= 0.0) {
            e.push(format!("{at}: negative weight"));
        }
        match t.slots.first() {
            None => e.push(format!("{at}: no slots")),
            Some(s) if s.start != 0 => e.push(format!("{at}: first slot must start at 0")),
            _ => {}
        }
        for w in t.slots.windows(2) {
            if w[1].start <= w[0].start {
                e.push(format!("{at}: slot starts must increase"));
            }
        }
        for s in &t.slots {
            if s.start < 0 || s.start as u64 >= c.tick_per_day {
                e.push(format!("{at}: slot start {} outside the day", s.start));
            }
            if s.place != HOME && !kinds.contains(s.place.as_str()) {
                e.push(format!("{at}: no place of kind `{}`", s.place));
            }
        }
    }

    let hospitals: &[HospitalSpecCfg] = c.health.as_ref().map_or(&[], |h| &h.hospitals);
    let lights: &[LightCfg] = c.mobility.as_ref().map_or(&[], |m| &m.lights);
    let hosts: BTreeSet<&str> = hospitals
        .iter()
        .map(|h| h.id.as_str())
        .chain(lights.iter().map(|l| l.id.as_str()))
        .collect();
    let ict_ids = unique(&mut e, "ict.nodes", c.ict.nodes.iter().map(|n| n.id.as_str()));
    for n in &c.ict.nodes {
        let at = format!("ict.nodes `{}`", n.id);
        probability(&mut e, &format!("{at}.vulnerability"), n.vulnerability);
        if n.recovery_ticks < 1 {
            e.push(format!("{at}: recovery_ticks must be at least 1"));
        }
        if !(n.service_capacity >= 0.0) {
            e.push(format!("{at}: negative service_capacity"));
        }
        if let Some(d) = &n.district {
            if !districts.contains(d.as_str()) {
                e.push(format!("{at}: unknown district `{d}`"));
            }
        }
        if let Some(h) = &n.host {
            if !hosts.contains(h.as_str()) {
                e.push(format!("{at}: host `{h}` is neither a hospital nor a traffic light"));
            }
        }
        for d in &n.depends_on {
            if !ict_ids.contains(d.as_str()) {
                e.push(format!("{at}: depends on unknown node `{d}`"));
            } else if d == &n.id {
                e.push(format!("{at}: depends on itself"));
            }
        }
    }
    if let Some(cycle) = dependency_cycle(&c.ict.nodes) {
        e.push(format!("ict.nodes: dependency cycle through `{cycle}`"));
    }
    let attackers = unique(&mut e, "ict.attackers", c.ict.attackers.iter().map(|a| a.id.as_str()));
    for (t, p) in &c.ict.attack_types {
        probability(&mut e, &format!("ict.attack_types.{t}.propagation"), p.propagation);
        positive(&mut e, &format!("ict.attack_types.{t}.recovery_scale"), p.recovery_scale);
    }

    if let Some(h) = &c.health {
        e.extend(h.disease.validate().into_iter().map(|m| format!("health.disease: {m}")));
        let ids = unique(&mut e, "health.hospitals", h.hospitals.iter().map(|h| h.id.as_str()));
        for x in &h.hospitals {
            let at = format!("health.hospitals `{}`", x.id);
            if !districts.contains(x.district.as_str()) {
                e.push(format!("{at}: unknown district `{}`", x.district));
            }
            if x.general_capacity < 0 || x.icu_capacity < 0 {
                e.push(format!("{at}: negative capacity"));
            }
            probability(&mut e, &format!("{at}.care_quality"), x.care_quality);
            probability(&mut e, &format!("{at}.capacity_degradation_factor"), x.capacity_degradation_factor);
            probability(&mut e, &format!("{at}.quality_degradation_factor"), x.quality_degradation_factor);
            for p in &x.referral_peers {
                if p == &x.id || !ids.contains(p.as_str()) {
                    e.push(format!("{at}: bad referral peer `{p}`"));
                }
            }
        }
        if citizens > 0 && h.hospitals.is_empty() {
            log::warn!("health section without hospitals: patients have nowhere to go");
        }
    }

    if let Some(m) = &c.mobility {
        if !(m.light_off_factor > 0.0 && m.light_off_factor <= 1.0) {
            e.push("mobility.light_off_factor must be in (0, 1]".into());
        }
        if !(m.v_min_frac > 0.0 && m.v_min_frac <= 1.0) {
            e.push("mobility.v_min_frac must be in (0, 1]".into());
        }
        positive(&mut e, "mobility.roadway_defaults.free_flow_speed", m.roadway_defaults.free_flow_speed);
        positive(&mut e, "mobility.roadway_defaults.capacity", m.roadway_defaults.capacity);
        if !(m.roadway_defaults.background_flow >= 0.0) {
            e.push("mobility.roadway_defaults.background_flow must be non-negative".into());
        }
        let light_ids = unique(&mut e, "mobility.lights", m.lights.iter().map(|l| l.id.as_str()));
        for l in &m.lights {
            if !districts.contains(l.district.as_str()) {
                e.push(format!("mobility.lights `{}`: unknown district `{}`", l.id, l.district));
            }
        }
        unique(&mut e, "mobility.roadways", m.roadways.iter().map(|r| r.id.as_str()));
        for r in &m.roadways {
            let at = format!("mobility.roadways `{}`", r.id);
            if !streets.contains(r.street.as_str()) {
                e.push(format!("{at}: unknown street `{}`", r.street));
            }
            if let Some(l) = &r.light {
                if !light_ids.contains(l.as_str()) {
                    e.push(format!("{at}: unknown light `{l}`"));
                }
            }
            for (name, v) in [("free_flow_speed", r.free_flow_speed), ("capacity", r.capacity)] {
                if let Some(v) = v {
                    positive(&mut e, &format!("{at}.{name}"), v);
                }
            }
        }
    }

    unique(&mut e, "hazards", c.hazards.iter().map(|h| h.id.as_str()));
    if let Err(errs) = schedule(c) {
        e.extend(errs);
    }
    for h in &c.hazards {
        if let Err(m) = h.target.check() {
            e.push(format!("hazards `{}`: {m}", h.id));
        }
        if let Some(a) = &h.attacker {
            if !attackers.contains(a.as_str()) {
                e.push(format!("hazards `{}`: unknown attacker `{a}`", h.id));
            }
        }
    }
    for (name, steps) in &c.mitigations {
        if name == super::BASELINE || name == super::RISK || name.contains('+') {
            e.push(format!("mitigations: reserved name `{name}`"));
        }
        for (i, s) in steps.iter().enumerate() {
            if let Err(m) = s.target.check() {
                e.push(format!("mitigations.{name}[{i}]: {m}"));
            }
            if s.overrides.is_empty() {
                e.push(format!("mitigations.{name}[{i}]: no overrides"));
            }
        }
    }
    for role in c.rules.roles.keys() {
        if role.parse::<Role>().is_err() {
            e.push(format!("rules.roles: unknown role `{role}`"));
        }
    }
    e
}

fn dependency_cycle(nodes: &[IctNode]) -> Option<String> {
    let deps: BTreeMap<&str, Vec<&str>> = nodes
        .iter()
        .map(|n| (n.id.as_str(), n.depends_on.iter().map(String::as_str).collect()))
        .collect();
    // 0 unvisited, 1 on stack, 2 done
    let mut mark: BTreeMap<&str, u8> = BTreeMap::new();
    fn visit<'a>(
        n: &'a str,
        deps: &BTreeMap<&'a str, Vec<&'a str>>,
        mark: &mut BTreeMap<&'a str, u8>,
    ) -> Option<&'a str> {
        match mark.get(n) {
            Some(1) => return Some(n),
            Some(2) => return None,
            _ => {}
        }
        mark.insert(n, 1);
        for d in deps.get(n).into_iter().flatten() {
            if let Some(c) = visit(d, deps, mark) {
                return Some(c);
            }
        }
        mark.insert(n, 2);
        None
    }
    deps.keys().find_map(|n| visit(n, &deps, &mut mark).map(str::to_string))
}

/// Full validation: structural checks, then a build of the risk variant and
/// of every mitigation, then the hazard schedule against the built world.
pub fn validate(c: &ScenarioConfig) -> Vec<String> {
    let errs = structural(c);
    if !errs.is_empty() {
        return errs;
    }
    let mut errs = Vec::new();
    for v in Variant::all(c).into_iter().skip(1) {
        match prepare(c, &v) {
            Ok(p) => {
                if v.mitigations.is_empty() {
                    errs.extend(p.schedule.validate(&p.world));
                    let last = p.schedule.events().last().map_or(0, |e| e.trigger_tick);
                    if last > p.horizon as i64 {
                        log::warn!("hazard at tick {last} falls after the horizon");
                    }
                }
            }
            Err(ScenarioError::Invalid(list)) => errs.extend(list),
            Err(other) => errs.push(format!("variant `{}`: {other}", v.name)),
        }
    }
    errs
}
