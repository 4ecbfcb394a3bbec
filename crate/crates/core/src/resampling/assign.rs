use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};

/// Uniformly random assignment of `n1` treated units among `n`.
pub fn assignment_sampler<R: Rng + ?Sized>(n: usize, n1: usize, rng: &mut R) -> Result<Vec<bool>> {
    if n1 == 0 || n1 >= n {
        return Err(Error::invalid(format!(
            "need 1 <= n1 <= n - 1 treated units, got n1 = {n1} of n = {n}"
        )));
    }
    let mut d = vec![false; n];
    for i in index::sample(rng, n, n1) {
        d[i] = true;
    }
    Ok(d)
}

/// Ascending treated and control indices of a fresh assignment.
pub(crate) fn draw_split<R: Rng + ?Sized>(
    n: usize,
    n1: usize,
    rng: &mut R,
    treated: &mut Vec<usize>,
    control: &mut Vec<usize>,
) {
    let d = assignment_sampler(n, n1, rng).expect("group sizes validated by the sample");
    treated.clear();
    control.clear();
    for (i, di) in d.into_iter().enumerate() {
        if di {
            treated.push(i);
        } else {
            control.push(i);
        }
    }
}
