use std::path::Path;

use serde::Deserialize;

use secop::geometry::{Configuration, Point};
use secop::subdivision::{Region, DEFAULT_BUDGET};

use crate::CliError;

/// On-disk configuration: integer points, optional region and defaults.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub points: Vec<[i64; 2]>,
    #[serde(default)]
    pub region: Option<Vec<usize>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub budget: Option<u64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Malformed(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn configuration(&self) -> Result<Configuration, CliError> {
        let points = self.points.iter().map(|&[x, y]| Point::from_ints(x, y)).collect();
        Ok(Configuration::new(points)?)
    }
}

/// A validated configuration with the region and defaults resolved against
/// command-line overrides.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: Configuration,
    pub region: Region,
    pub seed: u64,
    pub budget: u64,
}

pub fn load(path: &Path, region: Option<&[usize]>, seed: Option<u64>, budget: Option<u64>) -> Result<Loaded, CliError> {
    let file = ConfigFile::read(path)?;
    let config = file.configuration()?;
    let region = match region.or(file.region.as_deref()) {
        Some(labels) => {
            if let Some(&l) = labels.iter().find(|&&l| l >= config.len()) {
                return Err(CliError::Core(secop::Error::InvalidRegion(format!("label {l} out of range"))));
            }
            Region::new(&config, labels)?
        }
        None => Region::hull(&config),
    };
    Ok(Loaded {
        config,
        region,
        seed: seed.or(file.seed).unwrap_or(1),
        budget: budget.or(file.budget).unwrap_or(DEFAULT_BUDGET),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_file() {
        let f = ConfigFile::parse(r#"{"points": [[0,0],[1,0],[0,1]]}"#).unwrap();
        assert_eq!(f.points.len(), 3);
        assert_eq!(f.region, None);
        assert!(f.configuration().is_ok());
    }

    #[test]
    fn rejects_fractional_and_unknown_fields() {
        assert!(matches!(ConfigFile::parse(r#"{"points": [[0.5,0]]}"#), Err(CliError::Malformed(_))));
        assert!(matches!(ConfigFile::parse(r#"{"points": [], "colour": 1}"#), Err(CliError::Malformed(_))));
        assert!(matches!(ConfigFile::parse(r#"{"points": [[0,0],"#), Err(CliError::Malformed(_))));
    }
}
