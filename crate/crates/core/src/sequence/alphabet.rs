use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::SequenceError;

/// Finite, ordered set of states.
///
/// The declaration order is the canonical order: every per-state vector and
/// every matrix row/column downstream is indexed by position in `states`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    states: Vec<String>,
    labels: Vec<Option<String>>,
    colors: Vec<Option<String>>,
    index: HashMap<String, usize>,
}

/// On-disk JSON form: `{"states":[...], "labels":{...}, "colors":{...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct AlphabetFile {
    states: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    labels: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    colors: BTreeMap<String, String>,
}

impl Alphabet {
    pub fn new<I, S>(states: I) -> Result<Self, SequenceError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        if states.is_empty() {
            return Err(SequenceError::EmptyAlphabet);
        }
        let mut index = HashMap::with_capacity(states.len());
        for (i, s) in states.iter().enumerate() {
            if s.is_empty() {
                return Err(SequenceError::EmptyState);
            }
            if index.insert(s.clone(), i).is_some() {
                return Err(SequenceError::DuplicateState(s.clone()));
            }
        }
        let n = states.len();
        Ok(Self {
            states,
            labels: vec![None; n],
            colors: vec![None; n],
            index,
        })
    }

    /// The four-level treatment-coverage alphabet `0/3 .. 3/3`.
    pub fn treatment_coverage() -> Self {
        let mut a = Self::new(["0/3", "1/3", "2/3", "3/3"]).expect("static alphabet");
        for (i, label) in ["Not treated", "Low variety", "Medium variety", "High variety"]
            .into_iter()
            .enumerate()
        {
            a.labels[i] = Some(label.to_string());
        }
        a
    }

    pub fn with_label(mut self, state: &str, label: impl Into<String>) -> Result<Self, SequenceError> {
        let i = self.require(state)?;
        self.labels[i] = Some(label.into());
        Ok(self)
    }

    pub fn with_color(mut self, state: &str, color: impl Into<String>) -> Result<Self, SequenceError> {
        let i = self.require(state)?;
        self.colors[i] = Some(color.into());
        Ok(self)
    }

    fn require(&self, state: &str) -> Result<usize, SequenceError> {
        self.index_of(state)
            .ok_or_else(|| SequenceError::UnknownAlphabetState(state.to_string()))
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &str {
        &self.states[i]
    }

    pub fn index_of(&self, state: &str) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Display name, falling back to the identifier.
    pub fn label(&self, i: usize) -> &str {
        self.labels[i].as_deref().unwrap_or(&self.states[i])
    }

    pub fn color(&self, i: usize) -> Option<&str> {
        self.colors[i].as_deref()
    }

    pub fn from_json(text: &str) -> Result<Self, SequenceError> {
        let file: AlphabetFile =
            serde_json::from_str(text).map_err(|e| SequenceError::AlphabetJson(e.to_string()))?;
        let mut a = Self::new(file.states)?;
        for (s, l) in file.labels {
            a = a.with_label(&s, l)?;
        }
        for (s, c) in file.colors {
            a = a.with_color(&s, c)?;
        }
        Ok(a)
    }

    pub fn to_json(&self) -> String {
        let mut file = AlphabetFile {
            states: self.states.clone(),
            labels: BTreeMap::new(),
            colors: BTreeMap::new(),
        };
        for (i, s) in self.states.iter().enumerate() {
            if let Some(l) = &self.labels[i] {
                file.labels.insert(s.clone(), l.clone());
            }
            if let Some(c) = &self.colors[i] {
                file.colors.insert(s.clone(), c.clone());
            }
        }
        serde_json::to_string_pretty(&file).expect("alphabet serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(matches!(Alphabet::new(["A", "A"]), Err(SequenceError::DuplicateState(_))));
        assert!(matches!(Alphabet::new([""]), Err(SequenceError::EmptyState)));
        assert!(matches!(Alphabet::new(Vec::<String>::new()), Err(SequenceError::EmptyAlphabet)));
    }

    #[test]
    fn json_round_trip_keeps_order_and_metadata() {
        let a = Alphabet::new(["z", "a", "m"])
            .unwrap()
            .with_label("a", "Alpha")
            .unwrap()
            .with_color("m", "#112233")
            .unwrap();
        let back = Alphabet::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.states(), &["z", "a", "m"]);
        assert_eq!(back.label(1), "Alpha");
        assert_eq!(back.label(0), "z");
    }

    #[test]
    fn json_without_optional_fields() {
        let a = Alphabet::from_json(r#"{"states":["0/3","1/3"]}"#).unwrap();
        assert_eq!(a.len(), 2);
        assert!(a.color(0).is_none());
    }
}
