use serde::Serialize;

use crate::uplift::normalize_key;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Category {
    pub key: String,
    pub display_name: String,
    pub project_types: Vec<String>,
    /// Seeded categories cannot be replaced or removed.
    pub seeded: bool,
}

/// Project categories for reference classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CategoryTaxonomy {
    categories: Vec<Category>,
}

const SEED: &[(&str, &str, &[&str])] = &[
    (
        "roads",
        "Roads",
        &[
            "Motorway",
            "Trunk roads",
            "Local roads",
            "Bicycle facilities",
            "Pedestrian facilities",
            "Park and ride",
            "Bus lane schemes",
            "Guided buses on wheels",
        ],
    ),
    (
        "rail",
        "Rail",
        &[
            "Metro",
            "Light rail",
            "Guided buses on tracks",
            "Conventional rail",
            "High speed rail",
        ],
    ),
    ("fixed_links", "Fixed links", &["Bridges", "Tunnels"]),
    (
        "building_projects",
        "Building projects",
        &["Stations", "Terminal buildings"],
    ),
    ("it_projects", "IT projects", &["IT system development"]),
    (
        "standard_civil",
        "Standard civil engineering",
        &["Included for reference purposes only"],
    ),
    (
        "non_standard_civil",
        "Non-standard civil engineering",
        &["Included for reference purposes only"],
    ),
];

impl Default for CategoryTaxonomy {
    fn default() -> Self {
        Self::seeded()
    }
}

impl CategoryTaxonomy {
    pub fn seeded() -> Self {
        let categories = SEED
            .iter()
            .map(|(key, name, types)| Category {
                key: (*key).to_string(),
                display_name: (*name).to_string(),
                project_types: types.iter().map(|t| (*t).to_string()).collect(),
                seeded: true,
            })
            .collect();
        Self { categories }
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    /// Finds a category by key or display name, case-insensitively.
    pub fn get(&self, key_or_name: &str) -> Option<&Category> {
        let wanted = normalize_key(key_or_name);
        self.categories
            .iter()
            .find(|c| c.key == wanted || normalize_key(&c.display_name) == wanted)
    }

    /// Adds a user category. Keys must be new and snake_case.
    pub fn add(
        &mut self,
        key: &str,
        display_name: &str,
        project_types: Vec<String>,
    ) -> Result<(), String> {
        let valid = !key.is_empty()
            && key
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
        if !valid {
            return Err(format!("invalid category key '{key}'"));
        }
        if self.get(key).is_some() || self.get(display_name).is_some() {
            return Err(format!("category '{key}' already exists"));
        }
        self.categories.push(Category {
            key: key.to_string(),
            display_name: display_name.to_string(),
            project_types,
            seeded: false,
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_categories() {
        let t = CategoryTaxonomy::seeded();
        assert_eq!(t.categories().len(), 7);
        assert_eq!(
            t.get("Fixed links").unwrap().project_types,
            vec!["Bridges", "Tunnels"]
        );
        assert_eq!(t.get("rail").unwrap().project_types.len(), 5);
        assert!(t.get("airports").is_none());
    }

    #[test]
    fn extension_keeps_keys_unique() {
        let mut t = CategoryTaxonomy::seeded();
        t.add("airports", "Airports", vec!["Runways".into()])
            .unwrap();
        assert!(!t.get("airports").unwrap().seeded);
        assert!(t.add("roads", "More roads", vec![]).is_err());
        assert!(t.add("x", "Rail", vec![]).is_err());
        assert!(t.add("Bad Key", "Whatever", vec![]).is_err());
    }
}
