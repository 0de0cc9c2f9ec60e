use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The closed set of city systems modelled here.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemId {
    Ict,
    Healthcare,
    Mobility,
    Social,
    UrbanLandscape,
}

impl SystemId {
    pub const ALL: [SystemId; 5] = [
        SystemId::Ict,
        SystemId::Healthcare,
        SystemId::Mobility,
        SystemId::Social,
        SystemId::UrbanLandscape,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemId::Ict => "ict",
            SystemId::Healthcare => "healthcare",
            SystemId::Mobility => "mobility",
            SystemId::Social => "social",
            SystemId::UrbanLandscape => "urban-landscape",
        }
    }

    pub(crate) fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown system `{0}`")]
pub struct UnknownSystem(pub String);

impl FromStr for SystemId {
    type Err = UnknownSystem;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ict" => Ok(SystemId::Ict),
            "healthcare" | "health" => Ok(SystemId::Healthcare),
            "mobility" => Ok(SystemId::Mobility),
            "social" => Ok(SystemId::Social),
            "urban-landscape" | "urbanlandscape" | "urban_landscape" => Ok(SystemId::UrbanLandscape),
            _ => Err(UnknownSystem(s.to_string())),
        }
    }
}

/// Subagent role tag. Each role lives in exactly one system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    CyberAttacker,
    CyberInfrastructure,
    Patient,
    Hospital,
    Passenger,
    Roadway,
    TrafficLight,
    Citizen,
    MovingEntity,
    Place,
    Street,
    FixedEntity,
}

impl Role {
    pub const ALL: [Role; 12] = [
        Role::CyberAttacker,
        Role::CyberInfrastructure,
        Role::Patient,
        Role::Hospital,
        Role::Passenger,
        Role::Roadway,
        Role::TrafficLight,
        Role::Citizen,
        Role::MovingEntity,
        Role::Place,
        Role::Street,
        Role::FixedEntity,
    ];

    pub fn system(self) -> SystemId {
        match self {
            Role::CyberAttacker | Role::CyberInfrastructure => SystemId::Ict,
            Role::Patient | Role::Hospital => SystemId::Healthcare,
            Role::Passenger | Role::Roadway | Role::TrafficLight => SystemId::Mobility,
            Role::Citizen => SystemId::Social,
            Role::MovingEntity | Role::Place | Role::Street | Role::FixedEntity => {
                SystemId::UrbanLandscape
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::CyberAttacker => "cyber-attacker",
            Role::CyberInfrastructure => "cyber-infrastructure",
            Role::Patient => "patient",
            Role::Hospital => "hospital",
            Role::Passenger => "passenger",
            Role::Roadway => "roadway",
            Role::TrafficLight => "traffic-light",
            Role::Citizen => "citizen",
            Role::MovingEntity => "moving-entity",
            Role::Place => "place",
            Role::Street => "street",
            Role::FixedEntity => "fixed-entity",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown role `{0}`")]
pub struct UnknownRole(pub String);

impl FromStr for Role {
    type Err = UnknownRole;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .iter()
            .copied()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| UnknownRole(s.to_string()))
    }
}

/// Dense subagent index. Indices follow lexicographic subagent-id order, so
/// any iteration by index is independent of registration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ix(pub u32);

impl Ix {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Ix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Dense agent index, in agent-id order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentIx(pub u32);

impl AgentIx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_role_round_trips_through_its_tag() {
        for role in Role::ALL {
            assert_eq!(role.as_str().parse::<Role>().unwrap(), role);
        }
        assert!("power-plant".parse::<Role>().is_err());
    }

    #[test]
    fn unknown_system_is_rejected() {
        assert_eq!("ICT".parse::<SystemId>().unwrap(), SystemId::Ict);
        assert!("electricity".parse::<SystemId>().is_err());
    }
}
