//! Coded backchannel behaviours.
//!
//! Input table columns: `coder,interface,behavior,segment`, one row per
//! observed behaviour; `interface` is `plain` or `embodied`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::session::InterfaceKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    Smiling,
    Laughing,
    Frowning,
    Grimacing,
}

impl Behavior {
    pub const ALL: [Behavior; 4] = [Behavior::Smiling, Behavior::Laughing, Behavior::Frowning, Behavior::Grimacing];

    pub fn as_str(&self) -> &'static str {
        match self {
            Behavior::Smiling => "smiling",
            Behavior::Laughing => "laughing",
            Behavior::Frowning => "frowning",
            Behavior::Grimacing => "grimacing",
        }
    }
}

impl std::str::FromStr for Behavior {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Behavior::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or(StatsError::UnknownBehavior(s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodedBehavior {
    pub coder: String,
    pub interface: InterfaceKind,
    pub behavior: Behavior,
    pub segment: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackchannelTable {
    counts: BTreeMap<(String, InterfaceKind, Behavior), usize>,
    per_segment: BTreeMap<(Behavior, String, String), usize>,
    coders: BTreeSet<String>,
    segments: BTreeSet<String>,
}

pub fn backchannel_tally<'a>(events: impl IntoIterator<Item = &'a CodedBehavior>) -> BackchannelTable {
    let mut t = BackchannelTable::default();
    for e in events {
        *t.counts.entry((e.coder.clone(), e.interface, e.behavior)).or_default() += 1;
        *t.per_segment.entry((e.behavior, e.segment.clone(), e.coder.clone())).or_default() += 1;
        t.coders.insert(e.coder.clone());
        t.segments.insert(e.segment.clone());
    }
    t
}

impl BackchannelTable {
    pub fn count(&self, coder: &str, interface: InterfaceKind, behavior: Behavior) -> usize {
        self.counts.get(&(coder.to_string(), interface, behavior)).copied().unwrap_or(0)
    }

    pub fn coders(&self) -> impl Iterator<Item = &str> {
        self.coders.iter().map(String::as_str)
    }

    /// Segments × coders frequency matrix for one behaviour, the input
    /// for inter-coder ICC.
    pub fn rating_matrix(&self, behavior: Behavior) -> Vec<Vec<f64>> {
        self.segments
            .iter()
            .map(|seg| {
                self.coders
                    .iter()
                    .map(|c| {
                        self.per_segment.get(&(behavior, seg.clone(), c.clone())).copied().unwrap_or(0) as f64
                    })
                    .collect()
            })
            .collect()
    }

    /// Columns: coder, interface, behavior, count; every combination of
    /// the seen coders with both interfaces and all behaviours.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), StatsError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["coder", "interface", "behavior", "count"])?;
        for coder in &self.coders {
            for interface in [InterfaceKind::Plain, InterfaceKind::Embodied] {
                for b in Behavior::ALL {
                    w.write_record([
                        coder.as_str(),
                        &interface.to_string(),
                        b.as_str(),
                        &self.count(coder, interface, b).to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn read_coded_behaviours(reader: impl Read) -> Result<Vec<CodedBehavior>, StatsError> {
    #[derive(Deserialize)]
    struct Raw {
        coder: String,
        interface: String,
        behavior: String,
        segment: String,
    }
    csv::Reader::from_reader(reader)
        .deserialize::<Raw>()
        .map(|row| {
            let row = row?;
            Ok(CodedBehavior {
                coder: row.coder,
                interface: row.interface.parse().map_err(|_| StatsError::Invalid(format!("interface {:?}", row.interface)))?,
                behavior: row.behavior.parse()?,
                segment: row.segment,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_single() {
        let t = backchannel_tally(&[]);
        assert_eq!(t.count("C01", InterfaceKind::Embodied, Behavior::Smiling), 0);
        let e = CodedBehavior {
            coder: "C01".into(),
            interface: InterfaceKind::Embodied,
            behavior: Behavior::Smiling,
            segment: "p01-a".into(),
        };
        let t = backchannel_tally([&e]);
        assert_eq!(t.count("C01", InterfaceKind::Embodied, Behavior::Smiling), 1);
        assert_eq!(t.count("C01", InterfaceKind::Plain, Behavior::Smiling), 0);
    }

    #[test]
    fn unknown_label_rejected() {
        let csv = "coder,interface,behavior,segment\nC01,plain,yawning,s1\n";
        assert!(matches!(read_coded_behaviours(csv.as_bytes()), Err(StatsError::UnknownBehavior(_))));
    }
}
