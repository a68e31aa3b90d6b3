//! Column declarations and the schema file format.

use super::DataError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnRole {
    Feature,
    Target,
    GroupId,
    Time,
}

impl ColumnRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnRole::Feature => "feature",
            ColumnRole::Target => "target",
            ColumnRole::GroupId => "group-id",
            ColumnRole::Time => "time",
        }
    }
}

/// Declaration of one CSV column.
///
/// `categories` holds the level strings of a categorical column in first
/// appearance order; cells store the level index. `one_hot_parent` marks
/// indicator columns produced by curation with the name of the categorical
/// column they expand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default)]
    pub unit: String,
    pub role: ColumnRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_hot_parent: Option<String>,
}

impl ColumnSpec {
    pub fn numeric(name: &str, unit: &str, role: ColumnRole) -> Self {
        ColumnSpec {
            name: name.to_string(),
            kind: ColumnKind::Numeric,
            unit: unit.to_string(),
            role,
            categories: None,
            one_hot_parent: None,
        }
    }

    pub fn categorical(name: &str, role: ColumnRole) -> Self {
        ColumnSpec {
            name: name.to_string(),
            kind: ColumnKind::Categorical,
            unit: String::new(),
            role,
            categories: None,
            one_hot_parent: None,
        }
    }
}

/// Ordered column declarations for a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(rename = "column")]
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self, DataError> {
        let schema = Schema { columns };
        schema.validate()?;
        Ok(schema)
    }

    /// Checks the structural invariants: unique names, exactly one target,
    /// at most one group-id and at most one time column.
    pub fn validate(&self) -> Result<(), DataError> {
        if self.columns.is_empty() {
            return Err(DataError::SchemaInvalid("no columns declared".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for col in &self.columns {
            if !seen.insert(col.name.as_str()) {
                return Err(DataError::SchemaInvalid(format!(
                    "duplicate column name '{}'",
                    col.name
                )));
            }
        }
        let count = |role: ColumnRole| self.columns.iter().filter(|c| c.role == role).count();
        if count(ColumnRole::Target) != 1 {
            return Err(DataError::SchemaInvalid(format!(
                "exactly one column must have role=target, found {}",
                count(ColumnRole::Target)
            )));
        }
        if count(ColumnRole::GroupId) > 1 {
            return Err(DataError::SchemaInvalid(
                "at most one column may have role=group-id".into(),
            ));
        }
        if count(ColumnRole::Time) > 1 {
            return Err(DataError::SchemaInvalid(
                "at most one column may have role=time".into(),
            ));
        }
        for col in &self.columns {
            if col.role == ColumnRole::Target && col.kind != ColumnKind::Numeric {
                return Err(DataError::SchemaInvalid("target column must be numeric".into()));
            }
            if col.role == ColumnRole::Time && col.kind != ColumnKind::Numeric {
                return Err(DataError::SchemaInvalid("time column must be numeric".into()));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, DataError> {
        let schema: Schema = toml::from_str(text)
            .map_err(|e| DataError::SchemaInvalid(format!("toml parse error: {e}")))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        // ColumnSpec serializes cleanly; only transient fields are skipped.
        let mut doc = String::new();
        for col in &self.columns {
            doc.push_str("[[column]]\n");
            doc.push_str(&format!("name = {:?}\n", col.name));
            let kind = match col.kind {
                ColumnKind::Numeric => "numeric",
                ColumnKind::Categorical => "categorical",
            };
            doc.push_str(&format!("kind = {kind:?}\n"));
            if !col.unit.is_empty() {
                doc.push_str(&format!("unit = {:?}\n", col.unit));
            }
            doc.push_str(&format!("role = {:?}\n\n", col.role.as_str()));
        }
        doc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Vec<ColumnSpec> {
        vec![
            ColumnSpec::categorical("cell", ColumnRole::GroupId),
            ColumnSpec::numeric("time_days", "days", ColumnRole::Time),
            ColumnSpec::numeric("x", "", ColumnRole::Feature),
            ColumnSpec::numeric("pce", "", ColumnRole::Target),
        ]
    }

    #[test]
    fn accepts_valid_schema() {
        assert!(Schema::new(toy()).is_ok());
    }

    #[test]
    fn rejects_zero_or_two_targets() {
        let mut cols = toy();
        cols[3].role = ColumnRole::Feature;
        assert!(Schema::new(cols.clone()).is_err());
        cols[3].role = ColumnRole::Target;
        cols[2].role = ColumnRole::Target;
        assert!(Schema::new(cols).is_err());
    }

    #[test]
    fn rejects_duplicate_names() {
        let mut cols = toy();
        cols[2].name = "pce".into();
        assert!(Schema::new(cols).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let schema = Schema::new(toy()).unwrap();
        let text = schema.to_toml_string();
        let parsed = Schema::from_toml_str(&text).unwrap();
        assert_eq!(parsed.columns.len(), 4);
        assert_eq!(parsed.columns[0].role, ColumnRole::GroupId);
        assert_eq!(parsed.columns[1].unit, "days");
    }
}
