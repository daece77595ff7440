use std::fmt;
use std::str::FromStr;

/// Four-level crowd density, ordered from emptiest to densest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DensityLabel {
    VeryLow,
    Low,
    Medium,
    High,
}

impl DensityLabel {
    pub const ALL: [DensityLabel; 4] = [
        DensityLabel::VeryLow,
        DensityLabel::Low,
        DensityLabel::Medium,
        DensityLabel::High,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            DensityLabel::VeryLow => "VeryLow",
            DensityLabel::Low => "Low",
            DensityLabel::Medium => "Medium",
            DensityLabel::High => "High",
        }
    }

    /// Two-letter code used on overlays and in short listings.
    pub fn code(self) -> &'static str {
        match self {
            DensityLabel::VeryLow => "VL",
            DensityLabel::Low => "L",
            DensityLabel::Medium => "M",
            DensityLabel::High => "H",
        }
    }

    /// Human-readable column header.
    pub fn title(self) -> &'static str {
        match self {
            DensityLabel::VeryLow => "Very Low",
            DensityLabel::Low => "Low",
            DensityLabel::Medium => "Medium",
            DensityLabel::High => "High",
        }
    }
}

impl fmt::Display for DensityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DensityLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "VeryLow" | "VL" => Ok(DensityLabel::VeryLow),
            "Low" | "L" => Ok(DensityLabel::Low),
            "Medium" | "M" => Ok(DensityLabel::Medium),
            "High" | "H" => Ok(DensityLabel::High),
            other => Err(format!("unknown density label {other:?}")),
        }
    }
}

/// Density level of a block holding `count` persons.
///
/// The usual density bands stop Medium at 16 and start High above 26;
/// counts in between are treated as High so the mapping is total and
/// monotone.
pub fn label_from_count(count: u32) -> DensityLabel {
    match count {
        0..=6 => DensityLabel::VeryLow,
        7..=10 => DensityLabel::Low,
        11..=16 => DensityLabel::Medium,
        _ => DensityLabel::High,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_rows() {
        assert_eq!(label_from_count(0), DensityLabel::VeryLow);
        assert_eq!(label_from_count(6), DensityLabel::VeryLow);
        assert_eq!(label_from_count(7), DensityLabel::Low);
        assert_eq!(label_from_count(10), DensityLabel::Low);
        assert_eq!(label_from_count(11), DensityLabel::Medium);
        assert_eq!(label_from_count(16), DensityLabel::Medium);
        assert_eq!(label_from_count(30), DensityLabel::High);
    }

    #[test]
    fn gap_counts_are_high() {
        for c in 17..=26 {
            assert_eq!(label_from_count(c), DensityLabel::High);
        }
        assert_eq!(label_from_count(20), DensityLabel::High);
    }

    #[test]
    fn surjective_and_parse() {
        let hit: std::collections::BTreeSet<_> = (0..40).map(label_from_count).collect();
        assert_eq!(hit.len(), 4);
        for l in DensityLabel::ALL {
            assert_eq!(l.name().parse::<DensityLabel>().unwrap(), l);
            assert_eq!(l.code().parse::<DensityLabel>().unwrap(), l);
        }
        assert!("Crowded".parse::<DensityLabel>().is_err());
    }

    proptest! {
        #[test]
        fn monotone(a in 0u32..1000, b in 0u32..1000) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(label_from_count(lo) <= label_from_count(hi));
        }
    }
}
