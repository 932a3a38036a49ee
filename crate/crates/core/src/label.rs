use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Shelter access typology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessLabel {
    /// Brief use; exits shelter quickly.
    Transitional,
    /// Long-span, irregular use with gaps.
    Episodic,
    /// Long-span, very regular use.
    Chronic,
}

impl AccessLabel {
    /// All labels in reporting order.
    pub const ALL: [AccessLabel; 3] = [
        AccessLabel::Transitional,
        AccessLabel::Episodic,
        AccessLabel::Chronic,
    ];

    pub const fn index(self) -> usize {
        match self {
            AccessLabel::Transitional => 0,
            AccessLabel::Episodic => 1,
            AccessLabel::Chronic => 2,
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            AccessLabel::Transitional => "transitional",
            AccessLabel::Episodic => "episodic",
            AccessLabel::Chronic => "chronic",
        }
    }

    /// Capitalized form used in report tables.
    pub const fn title(self) -> &'static str {
        match self {
            AccessLabel::Transitional => "Transitional",
            AccessLabel::Episodic => "Episodic",
            AccessLabel::Chronic => "Chronic",
        }
    }
}

impl fmt::Display for AccessLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown access label `{0}` (expected transitional, episodic or chronic)")]
pub struct ParseLabelError(String);

impl FromStr for AccessLabel {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "transitional" => Ok(AccessLabel::Transitional),
            "episodic" => Ok(AccessLabel::Episodic),
            "chronic" => Ok(AccessLabel::Chronic),
            _ => Err(ParseLabelError(s.to_owned())),
        }
    }
}

/// One value per access label, indexable by [`AccessLabel`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PerLabel<T> {
    pub transitional: T,
    pub episodic: T,
    pub chronic: T,
}

impl<T> PerLabel<T> {
    pub fn from_fn(mut f: impl FnMut(AccessLabel) -> T) -> Self {
        PerLabel {
            transitional: f(AccessLabel::Transitional),
            episodic: f(AccessLabel::Episodic),
            chronic: f(AccessLabel::Chronic),
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(AccessLabel, &T) -> U) -> PerLabel<U> {
        PerLabel::from_fn(|label| f(label, &self[label]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (AccessLabel, &T)> {
        AccessLabel::ALL.into_iter().map(move |label| (label, &self[label]))
    }
}

impl<T> Index<AccessLabel> for PerLabel<T> {
    type Output = T;

    fn index(&self, label: AccessLabel) -> &T {
        match label {
            AccessLabel::Transitional => &self.transitional,
            AccessLabel::Episodic => &self.episodic,
            AccessLabel::Chronic => &self.chronic,
        }
    }
}

impl<T> IndexMut<AccessLabel> for PerLabel<T> {
    fn index_mut(&mut self, label: AccessLabel) -> &mut T {
        match label {
            AccessLabel::Transitional => &mut self.transitional,
            AccessLabel::Episodic => &mut self.episodic,
            AccessLabel::Chronic => &mut self.chronic,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_round_trips_through_str() {
        for label in AccessLabel::ALL {
            assert_eq!(label.as_str().parse::<AccessLabel>().unwrap(), label);
            assert_eq!(label.title().parse::<AccessLabel>().unwrap(), label);
        }
        assert!("sometimes".parse::<AccessLabel>().is_err());
    }

    #[test]
    fn per_label_indexing_matches_fields() {
        let mut counts = PerLabel::<u32>::default();
        counts[AccessLabel::Chronic] += 2;
        counts[AccessLabel::Transitional] += 1;
        assert_eq!(counts.chronic, 2);
        assert_eq!(counts.transitional, 1);
        assert_eq!(counts.iter().map(|(_, v)| *v).sum::<u32>(), 3);
        for label in AccessLabel::ALL {
            assert_eq!(AccessLabel::ALL[label.index()], label);
        }
    }
}
