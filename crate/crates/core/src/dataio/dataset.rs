use std::collections::HashMap;

use crate::error::{Error, Result};

/// One raw observation with interned ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawRecord {
    pub user: u32,
    pub item: u32,
    pub value: f64,
}

/// Un-binarised interaction records keyed by external string ids.
///
/// External ids are interned on insertion (first-appearance order), so a
/// record costs 16 bytes regardless of id length.
#[derive(Debug, Clone, Default)]
pub struct RawInteractions {
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    user_lookup: HashMap<String, u32>,
    item_lookup: HashMap<String, u32>,
    records: Vec<RawRecord>,
}

fn intern(ids: &mut Vec<String>, lookup: &mut HashMap<String, u32>, id: &str) -> u32 {
    if let Some(&idx) = lookup.get(id) {
        return idx;
    }
    let idx = ids.len() as u32;
    ids.push(id.to_owned());
    lookup.insert(id.to_owned(), idx);
    idx
}

impl RawInteractions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, user: &str, item: &str, value: f64) -> Result<()> {
        if value.is_nan() {
            return Err(Error::invalid(format!("NaN value for ({user}, {item})")));
        }
        let user = intern(&mut self.user_ids, &mut self.user_lookup, user);
        let item = intern(&mut self.item_ids, &mut self.item_lookup, item);
        self.records.push(RawRecord { user, item, value });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[RawRecord] {
        &self.records
    }

    pub fn user_id(&self, user: u32) -> &str {
        &self.user_ids[user as usize]
    }

    pub fn item_id(&self, item: u32) -> &str {
        &self.item_ids[item as usize]
    }

    /// Number of interned user ids (including ids whose records were removed).
    pub fn user_vocab_len(&self) -> usize {
        self.user_ids.len()
    }

    pub fn item_vocab_len(&self) -> usize {
        self.item_ids.len()
    }

    /// Iterates `(user, item, value)` with external ids.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, f64)> + '_ {
        self.records
            .iter()
            .map(|r| (self.user_id(r.user), self.item_id(r.item), r.value))
    }

    /// Keeps the records for which `keep` holds, re-interning ids so the
    /// vocabularies only contain surviving ids.
    pub(crate) fn retain_records(&self, keep: impl Fn(usize, &RawRecord) -> bool) -> Self {
        let mut out = RawInteractions::new();
        for (i, r) in self.records.iter().enumerate() {
            if keep(i, r) {
                let user = intern(
                    &mut out.user_ids,
                    &mut out.user_lookup,
                    self.user_id(r.user),
                );
                let item = intern(
                    &mut out.item_ids,
                    &mut out.item_lookup,
                    self.item_id(r.item),
                );
                out.records.push(RawRecord {
                    user,
                    item,
                    value: r.value,
                });
            }
        }
        out
    }
}

/// Binary user x item interaction matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionDataset {
    row_offsets: Vec<usize>,
    col_indices: Vec<u32>,
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    user_lookup: HashMap<String, u32>,
    item_lookup: HashMap<String, u32>,
    item_user_counts: Vec<u32>,
}

fn lookup_of(ids: &[String], what: &str) -> Result<HashMap<String, u32>> {
    let mut map = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), i as u32).is_some() {
            return Err(Error::Format(format!("duplicate {what} id {id:?}")));
        }
    }
    Ok(map)
}

impl InteractionDataset {
    pub(crate) fn from_raw(raw: &RawInteractions) -> Self {
        const UNSET: u32 = u32::MAX;
        let mut user_map = vec![UNSET; raw.user_vocab_len()];
        let mut item_map = vec![UNSET; raw.item_vocab_len()];
        let mut user_ids = Vec::new();
        let mut item_ids = Vec::new();
        let mut pairs = Vec::with_capacity(raw.len());
        for r in raw.records() {
            let u = &mut user_map[r.user as usize];
            if *u == UNSET {
                *u = user_ids.len() as u32;
                user_ids.push(raw.user_id(r.user).to_owned());
            }
            let i = &mut item_map[r.item as usize];
            if *i == UNSET {
                *i = item_ids.len() as u32;
                item_ids.push(raw.item_id(r.item).to_owned());
            }
            pairs.push((*u, *i));
        }
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); user_ids.len()];
        for (u, i) in pairs {
            rows[u as usize].push(i);
        }
        Self::from_rows_with_ids(rows, user_ids, item_ids)
            .expect("ids produced by interning are unique")
    }

    /// Builds a dataset from per-user item lists; rows are sorted and deduplicated.
    pub fn from_rows_with_ids(
        mut rows: Vec<Vec<u32>>,
        user_ids: Vec<String>,
        item_ids: Vec<String>,
    ) -> Result<Self> {
        if rows.len() != user_ids.len() {
            return Err(Error::shape(format!(
                "{} rows but {} user ids",
                rows.len(),
                user_ids.len()
            )));
        }
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        row_offsets.push(0);
        let nnz_hint = rows.iter().map(Vec::len).sum();
        let mut col_indices = Vec::with_capacity(nnz_hint);
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            col_indices.extend_from_slice(row);
            row_offsets.push(col_indices.len());
        }
        Self::from_csr(row_offsets, col_indices, user_ids, item_ids)
    }

    /// Builds a dataset from per-user item lists with synthetic ids `u{n}` / `i{n}`.
    pub fn from_rows(rows: Vec<Vec<u32>>, num_items: usize) -> Result<Self> {
        let user_ids = (0..rows.len()).map(|u| format!("u{u}")).collect();
        let item_ids = (0..num_items).map(|i| format!("i{i}")).collect();
        Self::from_rows_with_ids(rows, user_ids, item_ids)
    }

    /// Assembles a dataset from raw CSR arrays, validating every invariant.
    pub fn from_csr(
        row_offsets: Vec<usize>,
        col_indices: Vec<u32>,
        user_ids: Vec<String>,
        item_ids: Vec<String>,
    ) -> Result<Self> {
        let num_users = user_ids.len();
        let num_items = item_ids.len();
        if row_offsets.len() != num_users + 1 {
            return Err(Error::Format(format!(
                "row_offsets has {} entries, expected {}",
                row_offsets.len(),
                num_users + 1
            )));
        }
        if row_offsets[0] != 0 || row_offsets[num_users] != col_indices.len() {
            return Err(Error::Format("row_offsets do not span col_indices".into()));
        }
        let mut item_user_counts = vec![0u32; num_items];
        for u in 0..num_users {
            let (lo, hi) = (row_offsets[u], row_offsets[u + 1]);
            if hi < lo {
                return Err(Error::Format(format!("row_offsets decrease at row {u}")));
            }
            let row = &col_indices[lo..hi];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Format(format!("row {u} is not strictly increasing")));
            }
            for &c in row {
                let slot = item_user_counts
                    .get_mut(c as usize)
                    .ok_or_else(|| Error::Format(format!("column {c} out of range in row {u}")))?;
                *slot += 1;
            }
        }
        let user_lookup = lookup_of(&user_ids, "user")?;
        let item_lookup = lookup_of(&item_ids, "item")?;
        Ok(Self {
            row_offsets,
            col_indices,
            user_ids,
            item_ids,
            user_lookup,
            item_lookup,
            item_user_counts,
        })
    }

    pub fn num_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    /// Fraction of non-zero cells.
    pub fn density(&self) -> f64 {
        let cells = self.num_users() as f64 * self.num_items() as f64;
        if cells == 0.0 {
            0.0
        } else {
            self.nnz() as f64 / cells
        }
    }

    /// The items of user `u`, ascending.
    pub fn row(&self, u: usize) -> &[u32] {
        &self.col_indices[self.row_offsets[u]..self.row_offsets[u + 1]]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.num_users()).map(move |u| self.row(u))
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[u32] {
        &self.col_indices
    }

    /// `|U_i|` for every item.
    pub fn item_user_counts(&self) -> &[u32] {
        &self.item_user_counts
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn user_id(&self, u: usize) -> &str {
        &self.user_ids[u]
    }

    pub fn item_id(&self, i: usize) -> &str {
        &self.item_ids[i]
    }

    pub fn user_index(&self, id: &str) -> Option<u32> {
        self.user_lookup.get(id).copied()
    }

    pub fn item_index(&self, id: &str) -> Option<u32> {
        self.item_lookup.get(id).copied()
    }
}
