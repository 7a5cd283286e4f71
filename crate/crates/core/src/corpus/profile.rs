use thiserror::Error;

use super::{Gender, PersonProfile};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("malformed profile XML: {0}")]
    MalformedXml(String),
    #[error("profile is missing required element <{0}>")]
    MissingRequiredField(&'static str),
}

/// Parses a `<person>` infobox profile.
///
/// Recognized children: `wikiTitle`, `firstName` (both required),
/// `middleName`, `lastName`, `gender`, and the repeatable `profession`,
/// `alias` and `nickname`. Unknown elements are ignored.
pub fn parse_profile_xml(bytes: &[u8]) -> Result<PersonProfile, ProfileError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ProfileError::MalformedXml(format!("not UTF-8: {e}")))?;
    let xml = roxmltree::Document::parse(text).map_err(|e| ProfileError::MalformedXml(e.to_string()))?;
    let root = xml.root_element();
    if root.tag_name().name() != "person" {
        return Err(ProfileError::MalformedXml(format!(
            "expected <person> root, found <{}>",
            root.tag_name().name()
        )));
    }

    let values = |name: &str| -> Vec<String> {
        root.children()
            .filter(|n| n.is_element() && n.tag_name().name() == name)
            .map(|n| n.text().unwrap_or("").trim().to_string())
            .filter(|s| !s.is_empty())
            .collect()
    };
    let first = |name: &str| values(name).into_iter().next();

    let wiki_title = first("wikiTitle").ok_or(ProfileError::MissingRequiredField("wikiTitle"))?;
    let first_name = first("firstName").ok_or(ProfileError::MissingRequiredField("firstName"))?;

    Ok(PersonProfile {
        wiki_title,
        first_name,
        middle_name: first("middleName"),
        last_name: first("lastName"),
        gender: first("gender").map_or(Gender::Unknown, |g| Gender::from_label(&g)),
        professions: values("profession"),
        aliases: values("alias"),
        nicknames: values("nickname"),
    })
}
