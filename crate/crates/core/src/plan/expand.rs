use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ConditionTable, Loop, LoopOrder};
use crate::prng::SplitMix64;

/// One expanded trial: a table row bound for one repetition of a loop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialBinding {
    pub loop_name: String,
    pub rep_index: u32,
    pub row_index: usize,
    pub bindings: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpandError {
    #[error("loop {0:?} is random but has no seed")]
    MissingSeed(String),
    #[error("loop {loop_name:?} selects row {row} but the table has {len} rows")]
    RowOutOfRange {
        loop_name: String,
        row: usize,
        len: usize,
    },
}

/// Expands a loop into `n_reps × selected rows` bindings.
///
/// Sequential loops repeat the selected rows in order. Random loops shuffle
/// each repetition's block independently with one SplitMix64 stream seeded
/// from the loop; repetitions are never interleaved.
pub fn expand_trials(l: &Loop, table: &ConditionTable) -> Result<Vec<TrialBinding>, ExpandError> {
    let selected = l.selected_rows(table.rows.len());
    if let Some(&row) = selected.iter().find(|&&r| r >= table.rows.len()) {
        return Err(ExpandError::RowOutOfRange {
            loop_name: l.name.clone(),
            row,
            len: table.rows.len(),
        });
    }
    let mut rng = match l.order {
        LoopOrder::Sequential => None,
        LoopOrder::Random => Some(SplitMix64::new(
            l.seed.ok_or_else(|| ExpandError::MissingSeed(l.name.clone()))?,
        )),
    };

    let mut out = Vec::with_capacity(selected.len() * l.n_reps as usize);
    for rep in 0..l.n_reps {
        let mut block = selected.clone();
        if let Some(rng) = rng.as_mut() {
            rng.shuffle(&mut block);
        }
        out.extend(block.into_iter().map(|row| TrialBinding {
            loop_name: l.name.clone(),
            rep_index: rep,
            row_index: row,
            bindings: table.bindings(row).expect("row checked above"),
        }));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(n: usize) -> ConditionTable {
        ConditionTable {
            header: vec!["sound".into(), "corrAns".into()],
            rows: (0..n).map(|i| vec![format!("s{i}.wav"), format!("k{i}")]).collect(),
        }
    }

    fn lp(order: LoopOrder, n_reps: u32, rows: Option<Vec<usize>>, seed: Option<u64>) -> Loop {
        Loop {
            name: "block".into(),
            table: "t.csv".into(),
            order,
            n_reps,
            rows,
            body: vec!["trial".into()],
            seed,
        }
    }

    fn row_order(bindings: &[TrialBinding]) -> Vec<usize> {
        bindings.iter().map(|b| b.row_index).collect()
    }

    #[test]
    fn sequential_single_rep() {
        let out = expand_trials(&lp(LoopOrder::Sequential, 1, None, None), &table(3)).unwrap();
        assert_eq!(row_order(&out), [0, 1, 2]);
        assert_eq!(out[2].bindings["sound"], "s2.wav");
    }

    #[test]
    fn zero_reps_is_empty() {
        assert!(expand_trials(&lp(LoopOrder::Sequential, 0, None, None), &table(3))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn random_seed_42_reference_order() {
        // Frozen from an independent SplitMix64 + Fisher–Yates enumeration.
        let l = lp(LoopOrder::Random, 2, None, Some(42));
        let out = expand_trials(&l, &table(4)).unwrap();
        assert_eq!(row_order(&out), [2, 0, 3, 1, 2, 3, 1, 0]);
        assert_eq!(out.iter().map(|b| b.rep_index).collect::<Vec<_>>(), [0, 0, 0, 0, 1, 1, 1, 1]);
        assert_eq!(expand_trials(&l, &table(4)).unwrap(), out);
    }

    #[test]
    fn random_with_row_selection_reference_order() {
        let l = lp(LoopOrder::Random, 3, Some(vec![4, 0, 2]), Some(7));
        let out = expand_trials(&l, &table(5)).unwrap();
        assert_eq!(row_order(&out), [0, 2, 4, 2, 0, 4, 4, 2, 0]);
    }

    #[test]
    fn errors() {
        assert_eq!(
            expand_trials(&lp(LoopOrder::Random, 1, None, None), &table(2)),
            Err(ExpandError::MissingSeed("block".into()))
        );
        assert!(matches!(
            expand_trials(&lp(LoopOrder::Sequential, 1, Some(vec![3]), None), &table(3)),
            Err(ExpandError::RowOutOfRange { row: 3, .. })
        ));
    }

    proptest! {
        #[test]
        fn length_and_multiset_laws(
            n in 0usize..8,
            reps in 0u32..4,
            random in any::<bool>(),
            seed in any::<u64>(),
            pick in proptest::collection::vec(0usize..8, 0..6),
            use_pick in any::<bool>(),
        ) {
            let rows = if use_pick && n > 0 {
                Some(pick.iter().map(|r| r % n).collect::<Vec<_>>())
            } else {
                None
            };
            let order = if random { LoopOrder::Random } else { LoopOrder::Sequential };
            let l = lp(order, reps, rows.clone(), Some(seed));
            let out = expand_trials(&l, &table(n)).unwrap();
            let selected = l.selected_rows(n);
            prop_assert_eq!(out.len(), reps as usize * selected.len());

            for (rep, block) in out.chunks(selected.len().max(1)).enumerate() {
                let mut got = row_order(block);
                let mut want = selected.clone();
                if !random {
                    prop_assert_eq!(&got, &want);
                }
                got.sort_unstable();
                want.sort_unstable();
                prop_assert_eq!(got, want);
                prop_assert!(block.iter().all(|b| b.rep_index as usize == rep));
            }
            for b in &out {
                let keys: Vec<_> = b.bindings.keys().cloned().collect();
                prop_assert_eq!(keys, vec!["corrAns".to_string(), "sound".to_string()]);
            }
        }
    }
}
