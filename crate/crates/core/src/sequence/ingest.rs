use std::collections::HashSet;
use std::io::{Read, Write};

use super::{Alphabet, SequenceError, SequenceSet, StateSequence};

/// Column selection for [`parse_wide`].
#[derive(Debug, Clone)]
pub struct WideOptions {
    pub id_column: String,
    /// Ordered state columns. `None` means every column after the id column,
    /// in header order.
    pub state_columns: Option<Vec<String>>,
    pub granularity: String,
}

impl Default for WideOptions {
    fn default() -> Self {
        Self {
            id_column: "id".to_string(),
            state_columns: None,
            granularity: "week".to_string(),
        }
    }
}

/// Reads a wide table: one row per subject, one column per time position.
///
/// When `alphabet` is `None`, states are collected in first-appearance order
/// scanning rows top to bottom and columns left to right.
pub fn parse_wide<R: Read>(
    reader: R,
    options: &WideOptions,
    alphabet: Option<&Alphabet>,
) -> Result<SequenceSet, SequenceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| SequenceError::MissingColumn(name.to_string()))
    };
    let id_col = find(&options.id_column)?;
    let state_cols: Vec<usize> = match &options.state_columns {
        Some(names) => names.iter().map(|n| find(n)).collect::<Result<_, _>>()?,
        None => (0..header.len()).filter(|&c| c != id_col).collect(),
    };

    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        // Data rows are numbered from 1, header excluded.
        let row = r + 1;
        if record.len() != header.len() {
            return Err(SequenceError::RaggedRow {
                row,
                found: record.len(),
                expected: header.len(),
            });
        }
        let id = record[id_col].trim().to_string();
        let tokens = state_cols.iter().map(|&c| record[c].trim().to_string()).collect();
        rows.push((id, tokens));
    }

    let alphabet = match alphabet {
        Some(a) => a.clone(),
        None => {
            let mut seen = HashSet::new();
            let mut order = Vec::new();
            for (_, tokens) in &rows {
                for t in tokens {
                    if seen.insert(t.as_str()) {
                        order.push(t.clone());
                    }
                }
            }
            Alphabet::new(order)?
        }
    };

    let mut ids = HashSet::with_capacity(rows.len());
    let mut sequences = Vec::with_capacity(rows.len());
    for (r, (id, tokens)) in rows.into_iter().enumerate() {
        if !ids.insert(id.clone()) {
            return Err(SequenceError::DuplicateSubject(id));
        }
        let mut states = Vec::with_capacity(tokens.len());
        for (j, t) in tokens.iter().enumerate() {
            let s = alphabet.index_of(t).ok_or_else(|| SequenceError::UnknownState {
                row: r + 1,
                column: header[state_cols[j]].clone(),
                token: t.clone(),
            })?;
            states.push(s);
        }
        sequences.push(StateSequence::new(id, states)?);
    }
    SequenceSet::new(alphabet, sequences, options.granularity.clone())
}

pub fn parse_wide_str(
    text: &str,
    options: &WideOptions,
    alphabet: Option<&Alphabet>,
) -> Result<SequenceSet, SequenceError> {
    parse_wide(text.as_bytes(), options, alphabet)
}

/// Writes `id,<prefix>1..<prefix>T` followed by one row per sequence.
pub fn write_wide<W: Write>(set: &SequenceSet, column_prefix: &str, writer: W) -> Result<(), SequenceError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend((1..=set.length()).map(|t| format!("{column_prefix}{t}")));
    w.write_record(&header)?;
    let alphabet = set.alphabet();
    for seq in set.sequences() {
        let mut rec = Vec::with_capacity(seq.len() + 1);
        rec.push(seq.subject_id());
        rec.extend(seq.states().iter().map(|&s| alphabet.state(s)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_rows_of_fifty_two_weeks() {
        let states = ["0/3", "1/3", "2/3", "3/3"];
        let mut text = String::from("id");
        for t in 1..=52 {
            text.push_str(&format!(",w{t}"));
        }
        text.push('\n');
        for p in 0..4 {
            text.push_str(&format!("p{p}"));
            for t in 0..52 {
                text.push_str(&format!(",{}", states[(p + t / 13) % 4]));
            }
            text.push('\n');
        }
        let set = parse_wide_str(&text, &WideOptions::default(), Some(&Alphabet::treatment_coverage())).unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(set.length(), 52);
        assert_eq!(set.alphabet().len(), 4);
    }

    #[test]
    fn single_cell_infers_alphabet() {
        let set = parse_wide_str("id,t1\nx,A\n", &WideOptions::default(), None).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.length(), 1);
        assert_eq!(set.alphabet().states(), &["A"]);
    }

    #[test]
    fn unknown_token_is_reported() {
        let text = "id,w1,w2\np1,0/3,4/3\n";
        let err = parse_wide_str(text, &WideOptions::default(), Some(&Alphabet::treatment_coverage())).unwrap_err();
        match err {
            SequenceError::UnknownState { row, column, token } => {
                assert_eq!(row, 1);
                assert_eq!(column, "w2");
                assert_eq!(token, "4/3");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err_string(text).contains("4/3"));
    }

    fn err_string(text: &str) -> String {
        parse_wide_str(text, &WideOptions::default(), Some(&Alphabet::treatment_coverage()))
            .unwrap_err()
            .to_string()
    }

    #[test]
    fn duplicate_and_ragged() {
        let dup = parse_wide_str("id,w1\na,X\na,Y\n", &WideOptions::default(), None).unwrap_err();
        assert!(matches!(dup, SequenceError::DuplicateSubject(ref s) if s == "a"));
        let ragged = parse_wide_str("id,w1,w2\na,X,Y\nb,X\n", &WideOptions::default(), None).unwrap_err();
        assert!(matches!(ragged, SequenceError::RaggedRow { row: 2, found: 2, expected: 3 }));
    }

    #[test]
    fn inferred_alphabet_is_first_appearance_not_lexicographic() {
        let set = parse_wide_str("id,w1,w2\na,Z,B\nb,A,Z\n", &WideOptions::default(), None).unwrap();
        assert_eq!(set.alphabet().states(), &["Z", "B", "A"]);
    }

    #[test]
    fn explicit_state_columns_define_time_order() {
        let opts = WideOptions {
            id_column: "pid".into(),
            state_columns: Some(vec!["t2".into(), "t1".into()]),
            ..WideOptions::default()
        };
        let set = parse_wide_str("t1,pid,t2\nA,p,B\n", &opts, None).unwrap();
        assert_eq!(set.sequences()[0].states(), &[0, 1]);
        assert_eq!(set.alphabet().states(), &["B", "A"]);
    }

    #[test]
    fn quoted_fields_and_write_back() {
        let set = parse_wide_str("id,w1,w2\n\"p,1\",\"A\",B\n", &WideOptions::default(), None).unwrap();
        let mut out = Vec::new();
        write_wide(&set, "w", &mut out).unwrap();
        let again = parse_wide(&out[..], &WideOptions::default(), Some(set.alphabet())).unwrap();
        assert_eq!(again, set);
    }
}
