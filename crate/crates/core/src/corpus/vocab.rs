use std::collections::HashMap;
use std::path::Path;

use super::{CorpusError, Result};

pub const NA: &str = "NA";
pub const NO_TYPE: &str = "NO_TYPE";
pub const NO_ALIAS: &str = "NO_ALIAS";

/// Dense name↔id table; line index in the source file is the id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameIds {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl NameIds {
    fn parse(text: &str, file: &'static str, null: &'static str) -> Result<Self> {
        let mut names = Vec::new();
        let mut index = HashMap::new();
        let mut lines: Vec<&str> = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();
        if lines.last() == Some(&"") {
            lines.pop();
        }
        for (i, name) in lines.into_iter().enumerate() {
            if i == 0 && name != null {
                return Err(CorpusError::MissingNull {
                    file,
                    expected: null,
                    found: name.to_string(),
                });
            }
            if name.is_empty() {
                return Err(CorpusError::EmptyName { file, line: i + 1 });
            }
            if index.insert(name.to_string(), i).is_some() {
                return Err(CorpusError::DuplicateName {
                    file,
                    name: name.to_string(),
                    line: i + 1,
                });
            }
            names.push(name.to_string());
        }
        if names.is_empty() {
            return Err(CorpusError::MissingNull {
                file,
                expected: null,
                found: String::new(),
            });
        }
        Ok(Self { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    pub relations: NameIds,
    pub types: NameIds,
    pub aliases: NameIds,
}

impl Vocab {
    pub fn n_relations(&self) -> usize {
        self.relations.len()
    }
}

pub fn load_vocab(relations_text: &str, types_text: &str, aliases_text: &str) -> Result<Vocab> {
    Ok(Vocab {
        relations: NameIds::parse(relations_text, "relations.txt", NA)?,
        types: NameIds::parse(types_text, "types.txt", NO_TYPE)?,
        aliases: NameIds::parse(aliases_text, "aliases.txt", NO_ALIAS)?,
    })
}

/// Reads `relations.txt`, `types.txt` and `aliases.txt` from `dir`.
pub fn load_vocab_dir(dir: impl AsRef<Path>) -> Result<Vocab> {
    let dir = dir.as_ref();
    let read = |name: &str| std::fs::read_to_string(dir.join(name));
    load_vocab(&read("relations.txt")?, &read("types.txt")?, &read("aliases.txt")?)
}
