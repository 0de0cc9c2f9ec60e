//! Citizens, places and moving entities.
//!
//! Citizens follow a daily timetable of (start hour, activity, place)
//! slots. A change of place is a trip: the citizen spends one tick in
//! transit and the trip is handed to mobility as a routing request.
//! Co-located citizens generate contacts, which the citizen agent passes
//! to its patient subagent as exposures.

use std::collections::BTreeMap;

use crate::health;
use crate::kernel::{
    AgentCtx, AgentRule, InternalCtx, InternalRule, Ix, MetricValue, Observer, Params, Role,
    RuleError, State, SystemCtx, SystemId, SystemRule, Value,
};

pub const ACTIVE: &str = "active";
pub const ISOLATING: &str = "isolating";
pub const HOSPITALIZED: &str = "hospitalized";
pub const DEAD: &str = "dead";

/// One timetable slot, starting at `start` hour of the day.
#[derive(Clone, Debug, PartialEq)]
pub struct Slot {
    pub start: i64,
    pub activity: String,
    pub place: Ix,
}

pub fn citizen_params(home: Ix, household: &str, timetable: &[Slot]) -> Params {
    Params::new()
        .with("home", Value::Ref(home))
        .with("household", Value::Text(household.to_string()))
        .with(
            "timetable_start",
            Value::Ints(timetable.iter().map(|s| s.start).collect()),
        )
        .with(
            "timetable_place",
            Value::Refs(timetable.iter().map(|s| s.place).collect()),
        )
        .with(
            "timetable_activity",
            Value::List(
                timetable
                    .iter()
                    .map(|s| Value::Text(s.activity.clone()))
                    .collect(),
            ),
        )
}

/// Citizens start the run in the slot that covers hour 0.
pub fn citizen_state(timetable: &[Slot]) -> State {
    let first = &timetable[0];
    State::new()
        .with("activity", Value::Text(first.activity.clone()))
        .with("place", Value::Ref(first.place))
        .with("in_transit", Value::Bool(false))
        .with("dest", Value::Null)
        .with("slot", Value::Int(0))
        .with("trip", Value::Bool(false))
        .with("trip_origin", Value::Null)
        .with("trip_dest", Value::Null)
        .with("arrived", Value::Bool(false))
        .with("status", Value::Tag(ACTIVE))
        .with("jitter", Value::Int(0))
        .with("contacts", Value::Refs(Vec::new()))
        .with("redirected", Value::Int(0))
        .with("trips", Value::Int(0))
}

pub fn passenger_state() -> State {
    State::new()
        .with("pending", Value::Bool(false))
        .with("origin", Value::Null)
        .with("dest", Value::Null)
        .with("route", Value::Refs(Vec::new()))
        .with("queued", Value::Bool(false))
        .with("routed", Value::Int(0))
        .with("dropped", Value::Int(0))
}

pub fn moving_entity_state(place: Option<Ix>) -> State {
    State::new()
        .with("current_place", place.map_or(Value::Null, Value::Ref))
        .with("in_transit", Value::Bool(false))
}

pub fn place_state() -> State {
    State::new()
        .with("occupancy", Value::Int(0))
        .with("occupants", Value::Refs(Vec::new()))
}

/// Daily activity evolution.
pub struct DailyActivities {
    pub ticks_per_day: u64,
    pub jitter_hours: i64,
}

impl DailyActivities {
    fn slot_start(&self, starts: &[i64], i: usize, jitter: i64) -> i64 {
        if i == 0 {
            0
        } else {
            (starts[i] + jitter).clamp(1, self.ticks_per_day as i64 - 1)
        }
    }
}

impl InternalRule for DailyActivities {
    fn apply(&self, cx: &InternalCtx<'_>) -> Result<Option<State>, RuleError> {
        let st = cx.state;
        let status = st.str("status")?;
        if status == DEAD {
            return Ok(None);
        }
        let mut next = st.clone();
        next.update("trip", Value::Bool(false));
        next.update("arrived", Value::Bool(false));
        if st.bool("in_transit")? {
            let dest = st.opt_ref("dest")?;
            next.set("place", dest.map_or(Value::Null, Value::Ref));
            next.set("dest", Value::Null);
            next.set("in_transit", Value::Bool(false));
            next.set("arrived", Value::Bool(true));
        }

        let hour = (cx.tick % self.ticks_per_day) as i64;
        if hour == 0 && self.jitter_hours > 0 {
            let span = (2 * self.jitter_hours + 1) as usize;
            let j = cx.rng("jitter").index(span) as i64 - self.jitter_hours;
            next.update("jitter", Value::Int(j));
        }
        let jitter = next.i64("jitter")?;
        let starts = cx.params.ints("timetable_start")?;
        let places = cx.params.refs("timetable_place")?;
        let activities = cx.params.list("timetable_activity")?;
        let Some(slot) = (0..starts.len())
            .rev()
            .find(|&i| self.slot_start(starts, i, jitter) == hour)
        else {
            return Ok((next != *st).then_some(next));
        };
        let current = next.i64("slot")? as usize;
        let from = places[current.min(places.len() - 1)];
        let to = places[slot];
        next.set("slot", Value::Int(slot as i64));
        if status == ACTIVE {
            let activity = activities[slot]
                .as_str()
                .ok_or_else(|| RuleError::domain("activity is not text"))?;
            next.set("activity", Value::Text(activity.to_string()));
            let here = next.opt_ref("place")?;
            if here == Some(from) && to != from && !next.bool("in_transit")? {
                let trips = next.i64("trips")? + 1;
                next.set("place", Value::Null);
                next.set("in_transit", Value::Bool(true));
                next.set("dest", Value::Ref(to));
                next.set("trip", Value::Bool(true));
                next.set("trip_origin", Value::Ref(from));
                next.set("trip_dest", Value::Ref(to));
                next.set("trips", Value::Int(trips));
            }
        }
        Ok((next != *st).then_some(next))
    }
}

/// Static place data needed by the contact rule.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaceInfo {
    pub capacity: i64,
    /// Residential places only produce household contacts.
    pub residential: bool,
}

/// Occupancy settlement and contact generation.
pub struct Contacts {
    pub places: BTreeMap<Ix, PlaceInfo>,
    /// Mean random contacts per occupant and tick at non-residential places.
    pub k: f64,
}

impl Contacts {
    fn place(&self, p: Ix) -> Result<&PlaceInfo, RuleError> {
        self.places
            .get(&p)
            .ok_or_else(|| RuleError::domain(format!("unknown place {p}")))
    }
}

impl SystemRule for Contacts {
    fn roles(&self) -> &[Role] {
        &[Role::Citizen]
    }

    fn apply(&self, cx: &mut SystemCtx<'_>) -> Result<(), RuleError> {
        let mut next: BTreeMap<Ix, State> = BTreeMap::new();
        let mut occupancy: BTreeMap<Ix, i64> = BTreeMap::new();
        let mut arrivals = Vec::new();
        for &c in cx.subjects() {
            let st = cx.state(c)?;
            if let Some(p) = st.opt_ref("place")? {
                if st.bool("arrived")? {
                    arrivals.push(c);
                } else {
                    *occupancy.entry(p).or_default() += 1;
                }
            }
        }
        for c in arrivals {
            let st = cx.state(c)?;
            let p = st.opt_ref("place")?.expect("arrivals have a place");
            let n = occupancy.entry(p).or_default();
            if *n < self.place(p).map_err(|e| e.at(c))?.capacity {
                *n += 1;
                continue;
            }
            let home = home_of(cx.params(c)?)?;
            log::debug!("tick {}: {} redirected home, {} is full", cx.tick, cx.id(c), cx.id(p));
            let r = st.i64("redirected")? + 1;
            *occupancy.entry(home).or_default() += 1;
            next.insert(
                c,
                st.clone()
                    .with("place", Value::Ref(home))
                    .with("redirected", Value::Int(r)),
            );
        }

        let mut present: BTreeMap<Ix, Vec<Ix>> = BTreeMap::new();
        for &c in cx.subjects() {
            let st = next.get(&c).unwrap_or(cx.state(c)?);
            let status = st.str("status")?;
            if status == DEAD || status == HOSPITALIZED {
                continue;
            }
            if let Some(p) = st.opt_ref("place")? {
                present.entry(p).or_default().push(c);
            }
        }

        let mut contacts: BTreeMap<Ix, Vec<Ix>> = BTreeMap::new();
        for (p, occupants) in &present {
            if self.place(*p)?.residential {
                let mut households: BTreeMap<&str, Vec<Ix>> = BTreeMap::new();
                for &c in occupants {
                    households
                        .entry(cx.params(c)?.str("household")?)
                        .or_default()
                        .push(c);
                }
                for members in households.values() {
                    for &a in members {
                        for &b in members {
                            if a != b {
                                contacts.entry(a).or_default().push(b);
                            }
                        }
                    }
                }
                continue;
            }
            let n = occupants.len();
            if n < 2 {
                continue;
            }
            let mut rng = cx.keyed_rng(cx.id(*p), "contacts");
            let expected = n as f64 * self.k / 2.0;
            let mut pairs = expected.floor() as usize;
            if rng.uniform() < expected.fract() {
                pairs += 1;
            }
            for _ in 0..pairs {
                let i = rng.index(n);
                let mut j = rng.index(n - 1);
                if j >= i {
                    j += 1;
                }
                let (a, b) = (occupants[i], occupants[j]);
                contacts.entry(a).or_default().push(b);
                contacts.entry(b).or_default().push(a);
            }
        }

        for &c in cx.subjects() {
            let mut list = contacts.remove(&c).unwrap_or_default();
            list.sort();
            let base = next.get(&c).unwrap_or(cx.state(c)?);
            if base.refs("contacts")? != list.as_slice() {
                let st = base.clone().with("contacts", Value::Refs(list));
                next.insert(c, st);
            }
        }
        for (ix, st) in next {
            cx.write(ix, st)?;
        }
        Ok(())
    }
}

fn home_of(params: &Params) -> Result<Ix, RuleError> {
    params
        .opt_ref("home")?
        .ok_or_else(|| RuleError::domain("citizen without a home"))
}

/// Couples the four subagents of a citizen: health status drives the
/// citizen's whereabouts, contacts become exposures, trips become routing
/// requests and the moving entity mirrors the citizen's location.
pub struct CitizenCoupling;

impl AgentRule for CitizenCoupling {
    fn apply(&self, cx: &mut AgentCtx<'_>) -> Result<(), RuleError> {
        let Some(c) = cx.member(SystemId::Social) else {
            return Ok(());
        };
        let mut cit = cx.state(c)?.clone();
        let home = home_of(cx.params(c)?)?;

        if let Some(p) = cx.member(SystemId::Healthcare) {
            let pat = cx.state(p)?;
            let infection = pat.str("infection")?;
            let severity = pat.str("severity")?;
            let status = if infection == health::DEAD {
                DEAD
            } else if pat.opt_ref("located_in")?.is_some() {
                HOSPITALIZED
            } else if infection == health::INFECTED
                && (severity == health::SEVERE || severity == health::CRITICAL)
            {
                ISOLATING
            } else {
                ACTIVE
            };
            let was = cit.str("status")?;
            let away = match status {
                DEAD | HOSPITALIZED => true,
                ISOLATING => cit.opt_ref("place")? != Some(home),
                _ => was == HOSPITALIZED,
            };
            if status != was || away {
                cit.set("status", Value::Tag(status));
                if away || status != ACTIVE {
                    let place = match status {
                        DEAD | HOSPITALIZED => Value::Null,
                        _ => Value::Ref(home),
                    };
                    cit.set("place", place);
                    cit.set("in_transit", Value::Bool(false));
                    cit.set("dest", Value::Null);
                    cit.set("trip", Value::Bool(false));
                }
                if status == DEAD {
                    cit.set("contacts", Value::Refs(Vec::new()));
                    cit.set("arrived", Value::Bool(false));
                }
            }

            let topo = cx.topology();
            let exposures: Vec<Ix> = cit
                .refs("contacts")?
                .iter()
                .filter_map(|&o| topo.sibling(o, SystemId::Healthcare))
                .collect();
            if pat.refs("exposures")? != exposures.as_slice() {
                let next = pat.clone().with("exposures", Value::Refs(exposures));
                cx.write(p, next)?;
            }
        }

        if let Some(x) = cx.member(SystemId::Mobility) {
            if cit.bool("trip")? {
                let pax = cx.state(x)?.clone();
                let next = pax
                    .with("pending", Value::Bool(true))
                    .with("origin", cit.value("trip_origin")?.clone())
                    .with("dest", cit.value("trip_dest")?.clone());
                cx.write(x, next)?;
            }
        }

        if let Some(m) = cx.member(SystemId::UrbanLandscape) {
            let mv = cx.state(m)?;
            let mut next = mv.clone();
            let mut changed = next.update("current_place", cit.value("place")?.clone());
            changed |= next.update("in_transit", cit.value("in_transit")?.clone());
            if changed {
                cx.write(m, next)?;
            }
        }

        if cit != *cx.state(c)? {
            cx.write(c, cit)?;
        }
        Ok(())
    }
}

/// Place occupancy from the moving entities located there.
pub struct Occupancy;

impl SystemRule for Occupancy {
    fn roles(&self) -> &[Role] {
        &[Role::Place]
    }

    fn apply(&self, cx: &mut SystemCtx<'_>) -> Result<(), RuleError> {
        let mut occupants: BTreeMap<Ix, Vec<Ix>> = BTreeMap::new();
        for &m in cx.members() {
            if cx.role(m) != Role::MovingEntity {
                continue;
            }
            if let Some(p) = cx.state(m)?.opt_ref("current_place")? {
                occupants.entry(p).or_default().push(m);
            }
        }
        for &p in cx.subjects() {
            let list = occupants.remove(&p).unwrap_or_default();
            let st = cx.state(p)?;
            if st.refs("occupants")? != list.as_slice() {
                let next = st
                    .clone()
                    .with("occupancy", Value::Int(list.len() as i64))
                    .with("occupants", Value::Refs(list));
                cx.write(p, next)?;
            }
        }
        Ok(())
    }
}

pub struct PlaceMetrics;

impl Observer for PlaceMetrics {
    fn keys(&self) -> &[&'static str] {
        &["occupancy"]
    }

    fn observe(
        &self,
        _: &Params,
        state: &State,
        out: &mut Vec<(&'static str, MetricValue)>,
    ) -> Result<(), RuleError> {
        out.push(("occupancy", MetricValue::Number(state.f64("occupancy")?)));
        Ok(())
    }
}

pub struct CitizenMetrics;

impl Observer for CitizenMetrics {
    fn keys(&self) -> &[&'static str] {
        &["status", "trips"]
    }

    fn observe(
        &self,
        _: &Params,
        state: &State,
        out: &mut Vec<(&'static str, MetricValue)>,
    ) -> Result<(), RuleError> {
        let status = match state.str("status")? {
            ACTIVE => ACTIVE,
            ISOLATING => ISOLATING,
            HOSPITALIZED => HOSPITALIZED,
            _ => DEAD,
        };
        out.push(("status", MetricValue::Label(status)));
        out.push(("trips", MetricValue::Number(state.f64("trips")?)));
        Ok(())
    }
}
