use super::RawInteractions;

/// Deduplicates `(user, item)` pairs, then drops items with fewer than
/// `min_users_per_item` distinct users, then drops users with fewer than
/// `min_items_per_user` distinct remaining items. One pass each, in that order.
///
/// The first occurrence of each pair is the one kept, and surviving records
/// stay in input order.
pub fn filter_min_counts(
    raw: &RawInteractions,
    min_items_per_user: usize,
    min_users_per_item: usize,
) -> RawInteractions {
    let records = raw.records();

    let mut keys: Vec<(u64, u32)> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (((r.user as u64) << 32) | r.item as u64, i as u32))
        .collect();
    keys.sort_unstable();
    let mut first = vec![false; records.len()];
    for (j, &(key, idx)) in keys.iter().enumerate() {
        if j == 0 || keys[j - 1].0 != key {
            first[idx as usize] = true;
        }
    }
    drop(keys);

    let mut item_users = vec![0usize; raw.item_vocab_len()];
    for (r, _) in records.iter().zip(&first).filter(|(_, &f)| f) {
        item_users[r.item as usize] += 1;
    }
    let item_ok: Vec<bool> = item_users
        .iter()
        .map(|&c| c >= min_users_per_item)
        .collect();

    let mut user_items = vec![0usize; raw.user_vocab_len()];
    for (r, _) in records.iter().zip(&first).filter(|(_, &f)| f) {
        if item_ok[r.item as usize] {
            user_items[r.user as usize] += 1;
        }
    }

    raw.retain_records(|i, r| {
        first[i] && item_ok[r.item as usize] && user_items[r.user as usize] >= min_items_per_user
    })
}
