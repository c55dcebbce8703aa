use std::collections::BTreeMap;

/// 2|A∩B| / (|A| + |B|); two empty masks agree perfectly.
pub fn dice(a: &[bool], b: &[bool]) -> f64 {
    assert_eq!(a.len(), b.len(), "dice: masks differ in length");
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let total = a.iter().filter(|x| **x).count() + b.iter().filter(|x| **x).count();
    if total == 0 {
        return 1.0;
    }
    2.0 * inter as f64 / total as f64
}

fn choose2(n: u64) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// Hubert–Arabie adjusted Rand index from the contingency table. Returns 1
/// when the expected and maximum index coincide (e.g. both partitions
/// trivial).
pub fn adjusted_rand_index<L: Ord + Copy>(a: &[L], b: &[L]) -> f64 {
    assert_eq!(a.len(), b.len(), "ARI: partitions differ in length");
    let n = a.len() as u64;
    let mut table: BTreeMap<(L, L), u64> = BTreeMap::new();
    let mut rows: BTreeMap<L, u64> = BTreeMap::new();
    let mut cols: BTreeMap<L, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    let expected = if total > 0.0 {
        sum_a * sum_b / total
    } else {
        0.0
    };
    let max = (sum_a + sum_b) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
