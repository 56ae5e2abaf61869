use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{SlotId, SlotSchema, ValueId};
use crate::error::{Error, Result};

/// Synthetic movie database: every row assigns a value to every slot.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    rows: Vec<Vec<ValueId>>,
    /// `index[slot][value]` is the sorted list of rows holding that value.
    index: Vec<Vec<Vec<usize>>>,
}

impl KnowledgeBase {
    pub fn from_rows(schema: &SlotSchema, rows: Vec<Vec<ValueId>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("knowledge base needs at least one row".into()));
        }
        let mut index: Vec<Vec<Vec<usize>>> =
            schema.slots().map(|s| vec![Vec::new(); schema.domain_len(s)]).collect();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} values, schema has {} slots",
                    row.len(),
                    schema.len()
                )));
            }
            for (s, &v) in row.iter().enumerate() {
                if v >= schema.domain_len(SlotId(s)) {
                    return Err(Error::InvalidInput(format!("row {i} value out of domain")));
                }
                index[s][v].push(i);
            }
        }
        Ok(Self { rows, index })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<ValueId>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[ValueId] {
        &self.rows[i]
    }

    pub fn rows_with(&self, slot: SlotId, value: ValueId) -> &[usize] {
        &self.index[slot.0][value]
    }

    /// Row ids satisfying every constraint, in ascending order.
    pub fn matching<'a, I>(&self, constraints: I) -> Vec<usize>
    where
        I: IntoIterator<Item = (&'a SlotId, &'a ValueId)>,
    {
        let mut lists: Vec<&[usize]> = constraints
            .into_iter()
            .map(|(s, v)| self.rows_with(*s, *v))
            .collect();
        if lists.is_empty() {
            return (0..self.rows.len()).collect();
        }
        lists.sort_by_key(|l| l.len());
        let (first, rest) = lists.split_first().expect("non-empty");
        first
            .iter()
            .copied()
            .filter(|r| rest.iter().all(|l| l.binary_search(r).is_ok()))
            .collect()
    }

    pub fn first_match<'a, I>(&self, constraints: I) -> Option<usize>
    where
        I: IntoIterator<Item = (&'a SlotId, &'a ValueId)>,
    {
        self.matching(constraints).first().copied()
    }

    /// Whether some row satisfies the constraints and holds `value` in `slot`.
    pub fn any_row_with(
        &self,
        constraints: &BTreeMap<SlotId, ValueId>,
        slot: SlotId,
        value: ValueId,
    ) -> bool {
        !self
            .matching(constraints.iter().chain(std::iter::once((&slot, &value))))
            .is_empty()
    }

    /// Line-delimited export: one JSON object per row, slot name → value name.
    pub fn write_jsonl<W: Write>(&self, schema: &SlotSchema, mut out: W) -> Result<()> {
        for row in &self.rows {
            let obj: serde_json::Map<String, serde_json::Value> = schema
                .slots()
                .map(|s| {
                    (
                        schema.name(s).to_string(),
                        serde_json::Value::String(schema.value_name(s, row[s.0]).to_string()),
                    )
                })
                .collect();
            serde_json::to_writer(&mut out, &obj)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(schema: &SlotSchema, input: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let obj: BTreeMap<String, String> = serde_json::from_str(&line)?;
            let mut row = Vec::with_capacity(schema.len());
            for s in schema.slots() {
                let name = obj.get(schema.name(s)).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "line {}: missing slot `{}`",
                        lineno + 1,
                        schema.name(s)
                    ))
                })?;
                row.push(schema.value_id(s, name)?);
            }
            rows.push(row);
        }
        Self::from_rows(schema, rows)
    }
}

/// Seeded synthetic knowledge base. When `n_rows` is at least a slot's
/// domain size, every value of that slot appears in some row.
pub fn generate_kb(schema: &SlotSchema, n_rows: usize, seed: u64) -> Result<KnowledgeBase> {
    if n_rows == 0 {
        return Err(Error::InvalidInput("n_rows must be at least 1".into()));
    }
    if let Some(s) = schema.slots().find(|&s| schema.domain_len(s) == 0) {
        return Err(Error::InvalidInput(format!(
            "slot `{}` has an empty domain",
            schema.name(s)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = Vec::with_capacity(schema.len());
    for s in schema.slots() {
        let d = schema.domain_len(s);
        let mut col: Vec<ValueId> = (0..n_rows)
            .map(|i| if i < d { i } else { rng.gen_range(0..d) })
            .collect();
        col.shuffle(&mut rng);
        columns.push(col);
    }
    let rows = (0..n_rows)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    KnowledgeBase::from_rows(schema, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_and_covering() {
        let schema = SlotSchema::desk();
        let a = generate_kb(&schema, 100, 7).unwrap();
        let b = generate_kb(&schema, 100, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        for s in schema.informable_slots() {
            for v in 0..schema.domain_len(s) {
                assert!(!a.rows_with(s, v).is_empty());
            }
        }
        let mut x = Vec::new();
        let mut y = Vec::new();
        a.write_jsonl(&schema, &mut x).unwrap();
        b.write_jsonl(&schema, &mut y).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn single_row_answers_every_consistent_query() {
        let schema = SlotSchema::desk();
        let kb = generate_kb(&schema, 1, 99).unwrap();
        let row = kb.row(0).to_vec();
        let c: BTreeMap<_, _> = schema.informable_slots().map(|s| (s, row[s.0])).collect();
        assert_eq!(kb.matching(c.iter()), vec![0]);
        assert_eq!(kb.matching(c.iter().take(2)), vec![0]);
    }

    #[test]
    fn zero_rows_is_rejected() {
        assert!(generate_kb(&SlotSchema::desk(), 0, 1).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let schema = SlotSchema::desk();
        let kb = generate_kb(&schema, 25, 3).unwrap();
        let mut buf = Vec::new();
        kb.write_jsonl(&schema, &mut buf).unwrap();
        let back = KnowledgeBase::read_jsonl(&schema, buf.as_slice()).unwrap();
        assert_eq!(kb, back);
    }
}
