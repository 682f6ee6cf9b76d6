//! Electrode label lists for the 10-10 (64-channel, eegmmidb order) and
//! 10-20 (21-channel) systems.

use crate::error::{Error, Result};

const LABELS_10_10_64: [&str; 64] = [
    "Fc5", "Fc3", "Fc1", "Fcz", "Fc2", "Fc4", "Fc6", "C5", "C3", "C1", "Cz", "C2", "C4", "C6", "Cp5", "Cp3", "Cp1",
    "Cpz", "Cp2", "Cp4", "Cp6", "Fp1", "Fpz", "Fp2", "Af7", "Af3", "Afz", "Af4", "Af8", "F7", "F5", "F3", "F1", "Fz",
    "F2", "F4", "F6", "F8", "Ft7", "Ft8", "T7", "T8", "T9", "T10", "Tp7", "Tp8", "P7", "P5", "P3", "P1", "Pz", "P2",
    "P4", "P6", "P8", "Po7", "Po3", "Poz", "Po4", "Po8", "O1", "Oz", "O2", "Iz",
];

const LABELS_10_20_21: [&str; 21] = [
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T7", "C3", "Cz", "C4", "T8", "P7", "P3", "Pz", "P4", "P8", "O1", "O2",
    "A1", "A2",
];

pub const CENTRAL_20: [&str; 20] = [
    "Fc5", "Fc3", "Fc1", "Fcz", "Fc2", "Fc4", "Fc6", "C5", "C3", "C1", "Cz", "C2", "C4", "C6", "Cp5", "Cp3", "Cp1",
    "Cpz", "Cp2", "Cp4",
];

pub const CENTRAL_LINE_7: [&str; 7] = ["C5", "C3", "C1", "Cz", "C2", "C4", "C6"];

pub const TEN_TWENTY_IN_CENTRAL: [&str; 3] = ["C3", "Cz", "C4"];

#[derive(Debug, Clone, PartialEq)]
pub struct Montage {
    pub name: &'static str,
    pub labels: Vec<String>,
    pub subsets: Vec<(&'static str, Vec<String>)>,
}

fn owned(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl Montage {
    pub fn ten_ten() -> Self {
        Self {
            name: "10-10-64",
            labels: owned(&LABELS_10_10_64),
            subsets: vec![
                ("central-20", owned(&CENTRAL_20)),
                ("central-line-7", owned(&CENTRAL_LINE_7)),
                ("1020-in-central", owned(&TEN_TWENTY_IN_CENTRAL)),
            ],
        }
    }

    pub fn ten_twenty() -> Self {
        Self {
            name: "10-20-21",
            labels: owned(&LABELS_10_20_21),
            subsets: vec![("1020-in-central", owned(&TEN_TWENTY_IN_CENTRAL))],
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "10-10-64" => Ok(Self::ten_ten()),
            "10-20-21" => Ok(Self::ten_twenty()),
            _ => Err(Error::validation(format!(
                "unknown montage {name:?} (expected 10-10-64 or 10-20-21)"
            ))),
        }
    }

    pub fn subset(&self, name: &str) -> Option<&[String]> {
        self.subsets.iter().find(|(n, _)| *n == name).map(|(_, l)| l.as_slice())
    }
}

/// Looks a channel preset up across both montages.
pub fn channel_preset(name: &str) -> Result<Vec<String>> {
    Montage::ten_ten().subset(name).map(<[String]>::to_vec).ok_or_else(|| {
        Error::validation(format!(
            "unknown channel preset {name:?} (expected central-20, central-line-7 or 1020-in-central)"
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn central_20_is_exact() {
        let m = Montage::ten_ten();
        let c = m.subset("central-20").unwrap();
        assert_eq!(c.len(), 20);
        assert_eq!(c.iter().collect::<HashSet<_>>().len(), 20);
        assert_eq!(c[0], "Fc5");
        assert_eq!(c[19], "Cp4");
    }

    #[test]
    fn subsets_are_contained() {
        for m in [Montage::ten_ten(), Montage::ten_twenty()] {
            let all: HashSet<_> = m.labels.iter().collect();
            assert_eq!(all.len(), m.labels.len());
            for (_, s) in &m.subsets {
                assert!(s.iter().all(|l| all.contains(l)), "{}", m.name);
            }
        }
        assert_eq!(Montage::ten_ten().labels.len(), 64);
        assert_eq!(Montage::ten_twenty().labels.len(), 21);
    }

    #[test]
    fn preset_lookup() {
        assert_eq!(channel_preset("1020-in-central").unwrap(), vec!["C3", "Cz", "C4"]);
        assert!(channel_preset("nope").is_err());
        assert!(Montage::by_name("10-5").is_err());
    }
}
