use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::design::CellRecord;

pub type Split = (Vec<CellRecord>, Vec<CellRecord>);

fn test_count(n: usize, fraction: f64) -> Result<usize> {
    if n < 2 {
        return Err(Error::Config(format!(
            "cannot split {n} record(s); need at least 2"
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must lie strictly between 0 and 1, got {fraction}"
        )));
    }
    // Guard against products like 0.29 * 100 = 28.999999999999996.
    Ok((n as f64 * fraction + 1e-9).floor() as usize)
}

fn partition(records: &[CellRecord], test_idx: &[usize]) -> Split {
    let mut is_test = vec![false; records.len()];
    for &i in test_idx {
        is_test[i] = true;
    }
    let mut train = Vec::with_capacity(records.len() - test_idx.len());
    let mut test = Vec::with_capacity(test_idx.len());
    for (r, t) in records.iter().zip(is_test) {
        if t {
            test.push(r.clone());
        } else {
            train.push(r.clone());
        }
    }
    (train, test)
}

/// Seeded shuffle; the first floor(n·fraction) shuffled records become the
/// test set. Both halves keep input order.
pub fn split_random(records: &[CellRecord], test_fraction: f64, seed: u64) -> Result<Split> {
    let k = test_count(records.len(), test_fraction)?;
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(partition(records, &order[..k]))
}

/// Holds out the floor(n·fraction) records with the highest loading; ties
/// ordered by id.
pub fn split_sorted(records: &[CellRecord], test_fraction: f64) -> Result<Split> {
    let k = test_count(records.len(), test_fraction)?;
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&records[a], &records[b]);
        ra.design
            .loading()
            .total_cmp(&rb.design.loading())
            .then(ra.id.cmp(&rb.id))
    });
    Ok(partition(records, &order[records.len() - k..]))
}
