use std::collections::HashMap;
use std::path::Path;

use super::{LinkError, SearchClient, TagmeAnnotation, TagmeClient};

pub const WIKISEARCH_FIXTURE: &str = "wikisearch.json";
pub const TAGME_FIXTURE: &str = "tagme.json";

/// Offline search backend: query string → ordered titles. Unknown queries
/// have no hits.
#[derive(Debug, Clone, Default)]
pub struct FixtureSearchClient {
    results: HashMap<String, Vec<String>>,
}

impl FixtureSearchClient {
    pub fn from_json(bytes: &[u8]) -> Result<Self, LinkError> {
        let results = serde_json::from_slice(bytes).map_err(|e| LinkError::Fixture(e.to_string()))?;
        Ok(FixtureSearchClient { results })
    }
}

impl SearchClient for FixtureSearchClient {
    fn search(&self, query: &str) -> Result<Vec<String>, LinkError> {
        Ok(self.results.get(query).cloned().unwrap_or_default())
    }
}

type RawAnnotation = (usize, usize, String, f64, bool);

/// Offline TagMe backend: exact request text → `[start, end, title, rho, is_person]` rows.
#[derive(Debug, Clone, Default)]
pub struct FixtureTagmeClient {
    results: HashMap<String, Vec<TagmeAnnotation>>,
}

impl FixtureTagmeClient {
    pub fn from_json(bytes: &[u8]) -> Result<Self, LinkError> {
        let raw: HashMap<String, Vec<RawAnnotation>> =
            serde_json::from_slice(bytes).map_err(|e| LinkError::Fixture(e.to_string()))?;
        let mut results = HashMap::new();
        for (text, rows) in raw {
            let mut anns = Vec::with_capacity(rows.len());
            for (start, end, title, rho, is_person) in rows {
                if start >= end || !(0.0..=1.0).contains(&rho) || title.is_empty() {
                    return Err(LinkError::Fixture(format!(
                        "bad annotation [{start}, {end}, {title:?}, {rho}] for {text:?}"
                    )));
                }
                anns.push(TagmeAnnotation {
                    start,
                    end,
                    title,
                    rho,
                    is_person,
                });
            }
            results.insert(text, anns);
        }
        Ok(FixtureTagmeClient { results })
    }
}

impl TagmeClient for FixtureTagmeClient {
    fn tag(&self, text: &str) -> Result<Vec<TagmeAnnotation>, LinkError> {
        Ok(self.results.get(text).cloned().unwrap_or_default())
    }
}

/// Both fixture backends, loaded from `wikisearch.json` and `tagme.json` in
/// one directory. A missing file means an empty fixture.
#[derive(Debug, Clone, Default)]
pub struct Fixtures {
    pub search: FixtureSearchClient,
    pub tagme: FixtureTagmeClient,
}

impl Fixtures {
    pub fn load_dir(dir: &Path) -> Result<Self, LinkError> {
        if !dir.is_dir() {
            return Err(LinkError::Fixture(format!("{} is not a directory", dir.display())));
        }
        let read = |name: &str| -> Result<Option<Vec<u8>>, LinkError> {
            let path = dir.join(name);
            match std::fs::read(&path) {
                Ok(b) => Ok(Some(b)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(LinkError::Fixture(format!("{}: {e}", path.display()))),
            }
        };
        let search = match read(WIKISEARCH_FIXTURE)? {
            Some(b) => FixtureSearchClient::from_json(&b)?,
            None => FixtureSearchClient::default(),
        };
        let tagme = match read(TAGME_FIXTURE)? {
            Some(b) => FixtureTagmeClient::from_json(&b)?,
            None => FixtureTagmeClient::default(),
        };
        Ok(Fixtures { search, tagme })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_lookup() {
        let s = FixtureSearchClient::from_json(br#"{"a": ["A", "B"]}"#).unwrap();
        assert_eq!(s.search("a").unwrap(), vec!["A", "B"]);
        assert!(s.search("b").unwrap().is_empty());

        let t = FixtureTagmeClient::from_json(br#"{"x y": [[0, 1, "X", 0.5, true]]}"#).unwrap();
        assert_eq!(t.tag("x y").unwrap()[0].title, "X");
        assert!(t.tag("other").unwrap().is_empty());
    }

    #[test]
    fn bad_fixtures() {
        assert!(FixtureSearchClient::from_json(b"[1]").is_err());
        assert!(FixtureTagmeClient::from_json(br#"{"x": [[2, 1, "X", 0.5, true]]}"#).is_err());
        assert!(FixtureTagmeClient::from_json(br#"{"x": [[0, 1, "X", 1.5, true]]}"#).is_err());
    }

    #[test]
    fn load_dir_tolerates_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(WIKISEARCH_FIXTURE), br#"{"q": ["T"]}"#).unwrap();
        let f = Fixtures::load_dir(dir.path()).unwrap();
        assert_eq!(f.search.search("q").unwrap(), vec!["T"]);
        assert!(f.tagme.tag("q").unwrap().is_empty());
        assert!(Fixtures::load_dir(&dir.path().join("nope")).is_err());
    }
}
