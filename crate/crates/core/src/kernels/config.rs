use crate::matrix::FormatTag;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Kernel family. Each family is a distinct algorithmic strategy:
///
/// * `LibA` covers every format with canonical traversals, segmented
///   reduction for COO and lane-vectorized rows for CSR.
/// * `LibB` covers COO (atomic accumulate) and CSR (row-parallel scalar).
/// * `LibC` covers CSR (merge-path balanced) and ELL (column-major strided).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Library {
    LibA,
    LibB,
    LibC,
}

impl Library {
    pub const ALL: [Library; 3] = [Library::LibA, Library::LibB, Library::LibC];

    pub fn as_str(self) -> &'static str {
        match self {
            Library::LibA => "LibA",
            Library::LibB => "LibB",
            Library::LibC => "LibC",
        }
    }

    pub fn parse(token: &str) -> Option<Library> {
        Library::ALL.into_iter().find(|l| l.as_str() == token)
    }

    /// Formats this family implements.
    pub fn formats(self) -> &'static [FormatTag] {
        match self {
            Library::LibA => &FormatTag::ALL,
            Library::LibB => &[FormatTag::Coo, FormatTag::Csr],
            Library::LibC => &[FormatTag::Csr, FormatTag::Ell],
        }
    }

    pub fn supports(self, format: FormatTag) -> bool {
        self.formats().contains(&format)
    }
}

impl fmt::Display for Library {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Number of contiguous per-row accumulation lanes of the lane-vectorized
/// CSR kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum LaneWidth {
    W2,
    W4,
    W8,
    W16,
    W32,
}

impl LaneWidth {
    pub const ALL: [LaneWidth; 5] = [
        LaneWidth::W2,
        LaneWidth::W4,
        LaneWidth::W8,
        LaneWidth::W16,
        LaneWidth::W32,
    ];

    pub fn get(self) -> usize {
        match self {
            LaneWidth::W2 => 2,
            LaneWidth::W4 => 4,
            LaneWidth::W8 => 8,
            LaneWidth::W16 => 16,
            LaneWidth::W32 => 32,
        }
    }

    pub fn from_value(v: usize) -> Option<LaneWidth> {
        LaneWidth::ALL.into_iter().find(|w| w.get() == v)
    }

    /// Smallest width that is at least the mean row length, capped at 32.
    /// Used until a lane width has been predicted.
    pub fn for_mean_row_length(mean: f64) -> LaneWidth {
        LaneWidth::ALL
            .into_iter()
            .find(|w| mean <= w.get() as f64)
            .unwrap_or(LaneWidth::W32)
    }
}

impl TryFrom<u32> for LaneWidth {
    type Error = String;

    fn try_from(v: u32) -> Result<Self, Self::Error> {
        LaneWidth::from_value(v as usize).ok_or_else(|| format!("invalid lane width {v}"))
    }
}

impl From<LaneWidth> for u32 {
    fn from(w: LaneWidth) -> u32 {
        w.get() as u32
    }
}

impl fmt::Display for LaneWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.get())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("{library} does not implement {format}")]
    Unsupported { format: FormatTag, library: Library },
    #[error("lane width is required for CSR/LibA")]
    MissingLaneWidth,
    #[error("lane width only applies to CSR/LibA, not {format}/{library}")]
    UnexpectedLaneWidth { format: FormatTag, library: Library },
    #[error("cannot parse configuration `{0}`")]
    Parse(String),
}

/// A point of the configuration space: storage format, kernel family and,
/// for CSR/LibA only, the lane width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct SpmvConfig {
    format: FormatTag,
    library: Library,
    lane_width: Option<LaneWidth>,
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    format: FormatTag,
    library: Library,
    lane_width: Option<LaneWidth>,
}

impl TryFrom<RawConfig> for SpmvConfig {
    type Error = ConfigError;

    fn try_from(raw: RawConfig) -> Result<Self, Self::Error> {
        SpmvConfig::new(raw.format, raw.library, raw.lane_width)
    }
}

impl From<SpmvConfig> for RawConfig {
    fn from(c: SpmvConfig) -> Self {
        RawConfig {
            format: c.format,
            library: c.library,
            lane_width: c.lane_width,
        }
    }
}

impl SpmvConfig {
    /// The configuration every solve starts from.
    pub const DEFAULT: SpmvConfig = SpmvConfig {
        format: FormatTag::Coo,
        library: Library::LibA,
        lane_width: None,
    };

    pub fn new(
        format: FormatTag,
        library: Library,
        lane_width: Option<LaneWidth>,
    ) -> Result<Self, ConfigError> {
        if !library.supports(format) {
            return Err(ConfigError::Unsupported { format, library });
        }
        let wants_lane = format == FormatTag::Csr && library == Library::LibA;
        match (wants_lane, lane_width) {
            (true, None) => Err(ConfigError::MissingLaneWidth),
            (false, Some(_)) => Err(ConfigError::UnexpectedLaneWidth { format, library }),
            _ => Ok(Self {
                format,
                library,
                lane_width,
            }),
        }
    }

    pub fn format(&self) -> FormatTag {
        self.format
    }

    pub fn library(&self) -> Library {
        self.library
    }

    pub fn lane_width(&self) -> Option<LaneWidth> {
        self.lane_width
    }

    /// Position in [`enumerate_configs`]; used for tie-breaking.
    pub fn index(&self) -> usize {
        ALL_CONFIGS
            .iter()
            .position(|c| c == self)
            .expect("every valid config is enumerated")
    }
}

impl fmt::Display for SpmvConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.format, self.library)?;
        if let Some(w) = self.lane_width {
            write!(f, "/{w}")?;
        }
        Ok(())
    }
}

impl FromStr for SpmvConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_err = || ConfigError::Parse(s.to_string());
        let mut parts = s.split('/');
        let format = parts.next().and_then(FormatTag::parse).ok_or_else(parse_err)?;
        let library = parts.next().and_then(Library::parse).ok_or_else(parse_err)?;
        let lane = match parts.next() {
            None => None,
            Some(t) => Some(
                t.parse()
                    .ok()
                    .and_then(LaneWidth::from_value)
                    .ok_or_else(parse_err)?,
            ),
        };
        if parts.next().is_some() {
            return Err(parse_err());
        }
        SpmvConfig::new(format, library, lane)
    }
}

const fn cfg(format: FormatTag, library: Library, lane_width: Option<LaneWidth>) -> SpmvConfig {
    SpmvConfig {
        format,
        library,
        lane_width,
    }
}

static ALL_CONFIGS: [SpmvConfig; 13] = [
    SpmvConfig::DEFAULT,
    cfg(FormatTag::Csr, Library::LibA, Some(LaneWidth::W2)),
    cfg(FormatTag::Csr, Library::LibA, Some(LaneWidth::W4)),
    cfg(FormatTag::Csr, Library::LibA, Some(LaneWidth::W8)),
    cfg(FormatTag::Csr, Library::LibA, Some(LaneWidth::W16)),
    cfg(FormatTag::Csr, Library::LibA, Some(LaneWidth::W32)),
    cfg(FormatTag::Ell, Library::LibA, None),
    cfg(FormatTag::Dia, Library::LibA, None),
    cfg(FormatTag::Hyb, Library::LibA, None),
    cfg(FormatTag::Coo, Library::LibB, None),
    cfg(FormatTag::Csr, Library::LibB, None),
    cfg(FormatTag::Csr, Library::LibC, None),
    cfg(FormatTag::Ell, Library::LibC, None),
];

/// Every valid configuration in a fixed order: the default first, then the
/// rest of LibA by format (CSR lane widths ascending), then LibB, then LibC.
pub fn enumerate_configs() -> &'static [SpmvConfig] {
    &ALL_CONFIGS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_matches_support_table() {
        let all = enumerate_configs();
        assert_eq!(all.len(), 13);
        assert_eq!(all[0], SpmvConfig::DEFAULT);
        assert!(!all.iter().any(|c| c.format() == FormatTag::Dia && c.library() == Library::LibB));

        // brute force over the full product space
        let mut valid = Vec::new();
        for f in FormatTag::ALL {
            for l in Library::ALL {
                for lane in std::iter::once(None).chain(LaneWidth::ALL.map(Some)) {
                    if let Ok(c) = SpmvConfig::new(f, l, lane) {
                        valid.push(c);
                    }
                }
            }
        }
        assert_eq!(valid.len(), 13);
        for c in &valid {
            assert!(all.contains(c));
        }
        for (i, c) in all.iter().enumerate() {
            assert_eq!(c.index(), i);
        }
    }

    #[test]
    fn lane_width_iff_csr_liba() {
        assert_eq!(
            SpmvConfig::new(FormatTag::Csr, Library::LibA, None),
            Err(ConfigError::MissingLaneWidth)
        );
        assert!(SpmvConfig::new(FormatTag::Csr, Library::LibB, Some(LaneWidth::W4)).is_err());
        assert!(SpmvConfig::new(FormatTag::Dia, Library::LibB, None).is_err());
    }

    #[test]
    fn tokens_round_trip() {
        for c in enumerate_configs() {
            assert_eq!(c.to_string().parse::<SpmvConfig>().unwrap(), *c);
            let json = serde_json::to_string(c).unwrap();
            assert_eq!(serde_json::from_str::<SpmvConfig>(&json).unwrap(), *c);
        }
        assert_eq!(enumerate_configs()[5].to_string(), "CSR/LibA/32");
        assert!("CSR/LibA/3".parse::<SpmvConfig>().is_err());
        assert!("DIA/LibB".parse::<SpmvConfig>().is_err());
    }

    #[test]
    fn serde_rejects_invalid_config() {
        let bad = r#"{"format":"DIA","library":"LibC","lane_width":null}"#;
        assert!(serde_json::from_str::<SpmvConfig>(bad).is_err());
    }

    #[test]
    fn lane_for_mean() {
        assert_eq!(LaneWidth::for_mean_row_length(1.0), LaneWidth::W2);
        assert_eq!(LaneWidth::for_mean_row_length(5.0), LaneWidth::W8);
        assert_eq!(LaneWidth::for_mean_row_length(300.0), LaneWidth::W32);
    }
}
