use crate::error::{param, Result};
use crate::fields::SiteField;
use crate::graphs::{LeveledDag, VertexKey};
use crate::paths::enumerate_large_paths;

pub const MAX_TNK_DIM: u32 = 8;

/// `T(n, k)` for `k = 1..=n` (index `k - 1`): the number of source-to-sink
/// paths of the `n`-cube sharing exactly `k - 1` interior vertices with the
/// reference path, which flips bits in the order given (identity when
/// `None`). Brute force over all `n!` paths.
pub fn path_intersection_table(n: u32, reference: Option<&[u32]>) -> Result<Vec<u128>> {
    if !(1..=MAX_TNK_DIM).contains(&n) {
        return param(format!("T(n,k) enumeration supports 1 <= n <= {MAX_TNK_DIM}, got {n}"));
    }
    let order: Vec<u32> = match reference {
        Some(r) => r.to_vec(),
        None => (0..n).collect(),
    };
    let mut seen = order.clone();
    seen.sort_unstable();
    if seen != (0..n).collect::<Vec<_>>() {
        return param("reference path must flip every bit exactly once");
    }
    let mut reference_masks = vec![0u64];
    for &b in &order {
        reference_masks.push(reference_masks.last().unwrap() | 1 << b);
    }
    let dag = LeveledDag::hypercube(n)?;
    let mut table = vec![0u128; n as usize];
    for path in enumerate_large_paths(&dag, &SiteField::all_open(&dag))? {
        let shared = (1..n as usize)
            .filter(|&l| path[l] == VertexKey::Mask(reference_masks[l]))
            .count();
        table[shared] += 1;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_tables() {
        assert_eq!(path_intersection_table(2, None).unwrap(), vec![1, 1]);
        let t3 = path_intersection_table(3, None).unwrap();
        assert_eq!(t3.iter().sum::<u128>(), 6);
        assert_eq!(t3, vec![3, 2, 1]);
        assert_eq!(path_intersection_table(1, None).unwrap(), vec![1]);
    }

    #[test]
    fn reference_choice_does_not_matter() {
        assert_eq!(path_intersection_table(5, Some(&[3, 0, 4, 1, 2])).unwrap(), path_intersection_table(5, None).unwrap());
        assert!(path_intersection_table(3, Some(&[0, 0, 1])).is_err());
        assert!(path_intersection_table(9, None).is_err());
    }
}
