use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Alphabet, SequenceError, SequenceSet, StateSequence};

/// One maximal run of a state. `start` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpellRecord {
    #[serde(rename = "id")]
    pub subject_id: String,
    pub state: String,
    pub start: usize,
    pub duration: usize,
}

/// Expands spell records into a wide sequence set.
///
/// Subjects appear in order of first occurrence in `spells`; within a
/// subject, spells may be listed in any order.
pub fn spells_to_wide(spells: &[SpellRecord], alphabet: &Alphabet) -> Result<SequenceSet, SequenceError> {
    let mut order: Vec<&str> = Vec::new();
    let mut grouped: HashMap<&str, Vec<&SpellRecord>> = HashMap::new();
    for sp in spells {
        grouped
            .entry(sp.subject_id.as_str())
            .or_insert_with(|| {
                order.push(sp.subject_id.as_str());
                Vec::new()
            })
            .push(sp);
    }

    let mut sequences = Vec::with_capacity(order.len());
    let mut expected_len: Option<usize> = None;
    for id in order {
        let mut subject = grouped.remove(id).unwrap_or_default();
        subject.sort_by_key(|sp| sp.start);
        let mut states = Vec::new();
        let mut next = 1usize;
        for sp in subject {
            if sp.duration == 0 {
                return Err(SequenceError::ZeroDuration { subject: id.to_string() });
            }
            if sp.start > next {
                return Err(SequenceError::SpellGap { subject: id.to_string(), time: next });
            }
            if sp.start < next {
                return Err(SequenceError::SpellOverlap { subject: id.to_string(), time: sp.start });
            }
            let s = alphabet
                .index_of(&sp.state)
                .ok_or_else(|| SequenceError::UnknownAlphabetState(sp.state.clone()))?;
            states.extend(std::iter::repeat_n(s, sp.duration));
            next += sp.duration;
        }
        match expected_len {
            None => expected_len = Some(states.len()),
            Some(t) if t != states.len() => {
                return Err(SequenceError::SpellLength {
                    subject: id.to_string(),
                    found: states.len(),
                    expected: t,
                })
            }
            _ => {}
        }
        sequences.push(StateSequence::new(id, states)?);
    }
    SequenceSet::new(alphabet.clone(), sequences, "week")
}

pub fn wide_to_spells(set: &SequenceSet) -> Vec<SpellRecord> {
    let alphabet = set.alphabet();
    let mut out = Vec::new();
    for seq in set.sequences() {
        let mut start = 1;
        for (state, duration) in seq.spells() {
            out.push(SpellRecord {
                subject_id: seq.subject_id().to_string(),
                state: alphabet.state(state).to_string(),
                start,
                duration,
            });
            start += duration;
        }
    }
    out
}

/// Reads `id,state,start,duration`.
pub fn parse_spells<R: Read>(reader: R) -> Result<Vec<SpellRecord>, SequenceError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<SpellRecord>().enumerate() {
        out.push(rec.map_err(|e| SequenceError::SpellField {
            line: i + 2,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_spells<W: Write>(spells: &[SpellRecord], writer: W) -> Result<(), SequenceError> {
    let mut w = csv::Writer::from_writer(writer);
    for sp in spells {
        w.serialize(sp)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
