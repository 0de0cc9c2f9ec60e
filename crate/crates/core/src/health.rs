//! Patients and hospitals: disease progression, transmission over the
//! contact lists handed over by citizens, admission with referral, and
//! ICT-driven capacity degradation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::kernel::{
    AgentCtx, AgentRule, InternalCtx, InternalRule, Ix, MetricValue, Observer, Params, Role,
    RuleError, State, SystemCtx, SystemId, SystemRule, Value,
};

pub const SUSCEPTIBLE: &str = "susceptible";
pub const INFECTED: &str = "infected";
pub const RECOVERED: &str = "recovered";
pub const DEAD: &str = "dead";

pub const NONE: &str = "none";
pub const MILD: &str = "mild";
pub const SEVERE: &str = "severe";
pub const CRITICAL: &str = "critical";

pub const GENERAL: &str = "general";
pub const ICU: &str = "icu";

/// Disease parameters. Durations are mean ticks spent in each severity
/// tier; exits are geometric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disease {
    /// Infection probability per contact with an infected patient.
    pub beta: f64,
    pub mild_ticks: f64,
    pub severe_ticks: f64,
    pub critical_ticks: f64,
    pub p_severe: f64,
    pub p_critical: f64,
    pub p_die_treated: f64,
    pub p_die_untreated: f64,
    #[serde(default = "default_vaccine_factor")]
    pub vaccine_factor: f64,
}

fn default_vaccine_factor() -> f64 {
    0.5
}

impl Disease {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for (name, v) in [
            ("beta", self.beta),
            ("p_severe", self.p_severe),
            ("p_critical", self.p_critical),
            ("p_die_treated", self.p_die_treated),
            ("p_die_untreated", self.p_die_untreated),
            ("vaccine_factor", self.vaccine_factor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                errs.push(format!("{name} = {v} is not a probability"));
            }
        }
        for (name, v) in [
            ("mild_ticks", self.mild_ticks),
            ("severe_ticks", self.severe_ticks),
            ("critical_ticks", self.critical_ticks),
        ] {
            if !(v >= 1.0) {
                errs.push(format!("{name} = {v} must be at least 1"));
            }
        }
        errs
    }

    /// Death probability on leaving the critical tier.
    pub fn death_probability(&self, treated: bool, care_quality: f64) -> f64 {
        if treated {
            (self.p_die_treated * (2.0 - care_quality)).clamp(0.0, 1.0)
        } else {
            self.p_die_untreated
        }
    }
}

pub fn patient_params(hospital: Option<Ix>, vaccinated: bool) -> Params {
    Params::new()
        .with("hospital", hospital.map_or(Value::Null, Value::Ref))
        .with("vaccinated", Value::Bool(vaccinated))
}

pub fn patient_state() -> State {
    State::new()
        .with("infection", Value::Tag(SUSCEPTIBLE))
        .with("severity", Value::Tag(NONE))
        .with("located_in", Value::Null)
        .with("bed", Value::Tag(NONE))
        .with("ticks_in_state", Value::Int(0))
        .with("care_quality", Value::Float(0.0))
        .with("exposures", Value::Refs(Vec::new()))
        .with("waiting", Value::Int(0))
}

/// Marks a susceptible patient as newly infected. Other states are left alone.
pub fn infect(state: &State) -> Result<Option<State>, RuleError> {
    if state.str("infection")? != SUSCEPTIBLE {
        return Ok(None);
    }
    Ok(Some(
        state
            .clone()
            .with("infection", Value::Tag(INFECTED))
            .with("severity", Value::Tag(MILD))
            .with("ticks_in_state", Value::Int(0)),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HospitalSpec {
    pub general_capacity: i64,
    pub icu_capacity: i64,
    pub care_quality: f64,
    pub referral_peers: Vec<Ix>,
    pub capacity_degradation_factor: f64,
    pub quality_degradation_factor: f64,
}

pub fn hospital_params(h: &HospitalSpec) -> Params {
    Params::new()
        .with("nominal_general_capacity", Value::Int(h.general_capacity))
        .with("nominal_icu_capacity", Value::Int(h.icu_capacity))
        .with("nominal_quality", Value::Float(h.care_quality))
        .with("referral_peers", Value::Refs(h.referral_peers.clone()))
        .with(
            "capacity_degradation_factor",
            Value::Float(h.capacity_degradation_factor),
        )
        .with(
            "quality_degradation_factor",
            Value::Float(h.quality_degradation_factor),
        )
}

/// Initial hospital state, derived from (possibly mitigated) parameters.
pub fn hospital_state(params: &Params) -> Result<State, RuleError> {
    Ok(State::new()
        .with("general_capacity", Value::Int(params.i64("nominal_general_capacity")?))
        .with("icu_capacity", Value::Int(params.i64("nominal_icu_capacity")?))
        .with("care_quality", Value::Float(params.f64("nominal_quality")?))
        .with("general_occupancy", Value::Int(0))
        .with("icu_occupancy", Value::Int(0))
        .with("unattended", Value::Int(0))
        .with("referrals", Value::Int(0))
        .with("admissions", Value::Int(0))
        .with("ict_ok", Value::Bool(true)))
}

/// Infection and disease process of one patient.
pub struct DiseaseProgress {
    pub disease: Disease,
}

impl InternalRule for DiseaseProgress {
    fn apply(&self, cx: &InternalCtx<'_>) -> Result<Option<State>, RuleError> {
        let st = cx.state;
        if st.str("infection")? != INFECTED {
            return Ok(None);
        }
        let d = &self.disease;
        let mut rng = cx.rng("progress");
        let u_exit = rng.uniform();
        let u_branch = rng.uniform();
        let severity = st.str("severity")?;
        let treated = st.opt_ref("located_in")?.is_some();
        let mean = match severity {
            MILD => d.mild_ticks,
            SEVERE => d.severe_ticks,
            CRITICAL => d.critical_ticks,
            other => return Err(RuleError::domain(format!("infected with severity `{other}`"))),
        };
        let mut next = st.clone();
        if u_exit >= 1.0 / mean {
            next.set("ticks_in_state", Value::Int(st.i64("ticks_in_state")? + 1));
            return Ok(Some(next));
        }
        next.set("ticks_in_state", Value::Int(0));
        let discharge = |s: &mut State| {
            s.set("located_in", Value::Null);
            s.set("bed", Value::Tag(NONE));
        };
        match severity {
            MILD if u_branch < d.p_severe => next.set("severity", Value::Tag(SEVERE)),
            SEVERE if u_branch < d.p_critical => {
                // Critical care needs an ICU bed; the general bed is given back.
                next.set("severity", Value::Tag(CRITICAL));
                discharge(&mut next);
            }
            CRITICAL if u_branch < d.death_probability(treated, st.f64("care_quality")?) => {
                next.set("infection", Value::Tag(DEAD));
                next.set("severity", Value::Tag(NONE));
                discharge(&mut next);
            }
            _ => {
                next.set("infection", Value::Tag(RECOVERED));
                next.set("severity", Value::Tag(NONE));
                discharge(&mut next);
            }
        }
        next.set("waiting", Value::Int(0));
        Ok(Some(next))
    }
}

/// Hospital nominal operation: sanity checks and per-tick counters.
pub struct Care;

impl InternalRule for Care {
    fn apply(&self, cx: &InternalCtx<'_>) -> Result<Option<State>, RuleError> {
        for key in ["nominal_general_capacity", "nominal_icu_capacity"] {
            if cx.params.i64(key)? < 0 {
                return Err(RuleError::domain(format!("negative {key}")));
            }
        }
        let q = cx.params.f64("nominal_quality")?;
        if !(0.0..=1.0).contains(&q) {
            return Err(RuleError::domain(format!("care quality {q} outside [0,1]")));
        }
        let mut next = cx.state.clone();
        let a = next.update("unattended", Value::Int(0));
        let b = next.update("referrals", Value::Int(0));
        Ok((a || b).then_some(next))
    }
}

#[derive(Clone, Copy, Default)]
struct Ward {
    general: i64,
    icu: i64,
    general_cap: i64,
    icu_cap: i64,
    quality: f64,
    unattended: i64,
    referrals: i64,
    admissions: i64,
}

impl Ward {
    fn space(&self, class: &str) -> bool {
        match class {
            GENERAL => self.general < self.general_cap,
            _ => self.icu < self.icu_cap,
        }
    }

    fn load(&self, class: &str) -> i64 {
        match class {
            GENERAL => self.general,
            _ => self.icu,
        }
    }
}

/// Transmission, bed bookkeeping and seek-and-admit with referral, in a
/// single serialized pass over patients in id order.
pub struct HealthNetwork {
    pub disease: Disease,
}

impl SystemRule for HealthNetwork {
    fn roles(&self) -> &[Role] {
        &[Role::Patient, Role::Hospital]
    }

    fn apply(&self, cx: &mut SystemCtx<'_>) -> Result<(), RuleError> {
        let mut patients = Vec::new();
        let mut wards: BTreeMap<Ix, Ward> = BTreeMap::new();
        for &ix in cx.subjects() {
            match cx.role(ix) {
                Role::Patient => patients.push(ix),
                Role::Hospital => {
                    let st = cx.state(ix)?;
                    wards.insert(
                        ix,
                        Ward {
                            general_cap: st.i64("general_capacity")?,
                            icu_cap: st.i64("icu_capacity")?,
                            quality: st.f64("care_quality")?,
                            admissions: st.i64("admissions")?,
                            ..Ward::default()
                        },
                    );
                }
                _ => {}
            }
        }

        let mut next: BTreeMap<Ix, State> = BTreeMap::new();
        for &p in &patients {
            let st = cx.state(p)?;
            if st.str("infection")? != SUSCEPTIBLE {
                continue;
            }
            let mut beta = self.disease.beta;
            if cx.params(p)?.bool("vaccinated")? {
                beta *= self.disease.vaccine_factor;
            }
            let mut rng = cx.rng(p, "transmit");
            for &e in st.refs("exposures")? {
                if cx.state(e).map_err(|err| err.at(p))?.str("infection")? == INFECTED
                    && rng.uniform() < beta
                {
                    if let Some(s) = infect(st)? {
                        next.insert(p, s);
                    }
                    break;
                }
            }
        }

        for &p in &patients {
            let st = next.get(&p).unwrap_or(cx.state(p)?);
            if let Some(h) = st.opt_ref("located_in")? {
                let w = wards
                    .get_mut(&h)
                    .ok_or_else(|| RuleError::domain("patient located in unknown hospital").at(p))?;
                match st.str("bed")? {
                    GENERAL => w.general += 1,
                    ICU => w.icu += 1,
                    other => {
                        return Err(RuleError::domain(format!("admitted with bed `{other}`")).at(p))
                    }
                }
            }
        }
        for (&h, w) in &wards {
            let st = cx.state(h)?;
            if w.general > st.i64("general_occupancy")? || w.icu > st.i64("icu_occupancy")? {
                return Err(RuleError::domain("occupancy bookkeeping mismatch").at(h));
            }
        }

        for &p in &patients {
            let st = next.get(&p).cloned().map_or_else(|| cx.state(p).cloned(), Ok)?;
            if st.str("infection")? != INFECTED {
                continue;
            }
            if let Some(h) = st.opt_ref("located_in")? {
                let q = wards[&h].quality;
                if st.f64("care_quality")? != q {
                    next.insert(p, st.with("care_quality", Value::Float(q)));
                }
                continue;
            }
            let class = match st.str("severity")? {
                SEVERE => GENERAL,
                CRITICAL => ICU,
                _ => continue,
            };
            let Some(first) = cx.params(p)?.opt_ref("hospital")? else {
                continue;
            };
            let first_ward = wards
                .get(&first)
                .ok_or_else(|| RuleError::domain("patient bound to unknown hospital").at(p))?;
            let placed = if first_ward.space(class) {
                Some(first)
            } else {
                cx.params(first)?
                    .refs("referral_peers")?
                    .iter()
                    .copied()
                    .filter(|peer| wards.get(peer).is_some_and(|w| w.space(class)))
                    .min_by_key(|peer| (wards[peer].load(class), *peer))
            };
            match placed {
                Some(h) => {
                    let w = wards.get_mut(&h).expect("placement target is a ward");
                    match class {
                        GENERAL => w.general += 1,
                        _ => w.icu += 1,
                    }
                    w.admissions += 1;
                    let q = w.quality;
                    if h != first {
                        wards.get_mut(&first).expect("first ward").referrals += 1;
                    }
                    next.insert(
                        p,
                        st.with("located_in", Value::Ref(h))
                            .with("bed", Value::Tag(class))
                            .with("care_quality", Value::Float(q))
                            .with("waiting", Value::Int(0)),
                    );
                }
                None => {
                    wards.get_mut(&first).expect("first ward").unattended += 1;
                    let waited = st.i64("waiting")? + 1;
                    next.insert(p, st.with("waiting", Value::Int(waited)));
                }
            }
        }

        for (&h, w) in &wards {
            let mut st = cx.state(h)?.clone();
            st.set("general_occupancy", Value::Int(w.general));
            st.set("icu_occupancy", Value::Int(w.icu));
            st.set("unattended", Value::Int(w.unattended));
            st.set("referrals", Value::Int(w.referrals));
            st.set("admissions", Value::Int(w.admissions));
            next.insert(h, st);
        }
        for (ix, st) in next {
            if *cx.state(ix)? != st {
                cx.write(ix, st)?;
            }
        }
        Ok(())
    }
}

/// Hospital coupling to its embedded cyber-infrastructure: while the node
/// is effectively down, capacity and care quality are degraded. Admitted
/// patients are never evicted.
pub struct IctDegradation;

impl AgentRule for IctDegradation {
    fn apply(&self, cx: &mut AgentCtx<'_>) -> Result<(), RuleError> {
        let Some(h) = cx.member(SystemId::Healthcare) else {
            return Ok(());
        };
        let ok = match cx.member(SystemId::Ict) {
            Some(n) => cx.state(n)?.bool("effective")?,
            None => true,
        };
        let p = cx.params(h)?;
        let (cf, qf) = if ok {
            (1.0, 1.0)
        } else {
            (
                p.f64("capacity_degradation_factor")?,
                p.f64("quality_degradation_factor")?,
            )
        };
        let scale = |n: i64| ((n as f64) * cf).round() as i64;
        let mut st = cx.state(h)?.clone();
        let mut changed = st.update("ict_ok", Value::Bool(ok));
        changed |= st.update(
            "general_capacity",
            Value::Int(scale(p.i64("nominal_general_capacity")?)),
        );
        changed |= st.update("icu_capacity", Value::Int(scale(p.i64("nominal_icu_capacity")?)));
        let q = (p.f64("nominal_quality")? * qf).clamp(0.0, 1.0);
        changed |= st.update("care_quality", Value::Float(q));
        if changed {
            cx.write(h, st)?;
        }
        Ok(())
    }
}

pub struct HospitalMetrics;

impl Observer for HospitalMetrics {
    fn keys(&self) -> &[&'static str] {
        &[
            "general_occupancy",
            "icu_occupancy",
            "unattended",
            "general_capacity",
            "icu_capacity",
            "care_quality",
            "referrals",
        ]
    }

    fn observe(
        &self,
        _: &Params,
        state: &State,
        out: &mut Vec<(&'static str, MetricValue)>,
    ) -> Result<(), RuleError> {
        for &k in self.keys() {
            out.push((k, MetricValue::Number(state.f64(k)?)));
        }
        Ok(())
    }
}

pub struct PatientMetrics;

impl Observer for PatientMetrics {
    fn keys(&self) -> &[&'static str] {
        &["infection", "severity"]
    }

    fn observe(
        &self,
        _: &Params,
        state: &State,
        out: &mut Vec<(&'static str, MetricValue)>,
    ) -> Result<(), RuleError> {
        for (key, name) in [("infection", "infection_status"), ("severity", "severity")] {
            let tag = match state.value(key)? {
                Value::Tag(t) => *t,
                other => {
                    return Err(RuleError::TypeMismatch {
                        key: key.into(),
                        expected: "tag",
                        found: other.kind(),
                    })
                }
            };
            out.push((name, MetricValue::Label(tag)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disease() -> Disease {
        Disease {
            beta: 0.1,
            mild_ticks: 10.0,
            severe_ticks: 10.0,
            critical_ticks: 10.0,
            p_severe: 0.1,
            p_critical: 0.1,
            p_die_treated: 0.2,
            p_die_untreated: 0.9,
            vaccine_factor: 0.5,
        }
    }

    #[test]
    fn treated_death_probability_depends_on_care_quality() {
        let d = disease();
        assert!((d.death_probability(true, 1.0) - 0.2).abs() < 1e-12);
        assert!((d.death_probability(true, 0.5) - 0.3).abs() < 1e-12);
        assert_eq!(d.death_probability(false, 1.0), 0.9);
        let harsh = Disease {
            p_die_treated: 0.8,
            ..d
        };
        assert_eq!(harsh.death_probability(true, 0.0), 1.0);
    }

    #[test]
    fn validation_flags_bad_probabilities_and_durations() {
        let bad = Disease {
            beta: 1.5,
            mild_ticks: 0.5,
            ..disease()
        };
        assert_eq!(bad.validate().len(), 2);
        assert!(disease().validate().is_empty());
    }

    #[test]
    fn only_susceptible_patients_can_be_infected() {
        let s = patient_state();
        let i = infect(&s).unwrap().unwrap();
        assert_eq!(i.str("infection").unwrap(), INFECTED);
        assert_eq!(i.str("severity").unwrap(), MILD);
        assert!(infect(&i).unwrap().is_none());
        let r = s.clone().with("infection", Value::Tag(RECOVERED));
        assert!(infect(&r).unwrap().is_none());
    }
}
