use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::{Exec, CHUNK};
use crate::losses::{argmax, ProblemShape};
use crate::models::{LabeledDataset, LinearScorer};
use crate::rng::stream;

/// Labels carried by routing datasets. Two-stage losses ignore them.
pub const ROUTING_LABELS: usize = 2;

/// Standard normal features routed by a random linear `r*`: the expert it
/// picks costs 0 and every other expert costs 1, so `r*` has zero two-stage
/// deferral loss and each row has exactly one free expert.
pub fn gen_realizable_two_stage(
    n_e: usize,
    input_dim: usize,
    samples: usize,
    seed: u64,
) -> Result<(LabeledDataset, LinearScorer)> {
    if n_e < 2 {
        return Err(Error::InvalidShape("routing needs n_e >= 2".into()));
    }
    if input_dim == 0 || samples == 0 {
        return Err(Error::InvalidConfig("input_dim and samples must be positive".into()));
    }
    let mut rng = stream(seed, "routing/r_star", 0);
    let rows: Vec<Vec<f64>> = (0..n_e)
        .map(|_| (0..input_dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let r_star = LinearScorer::from_parts(&rows, &vec![0.0; n_e], seed)?;
    let blocks = Exec::default().map_chunks(samples, CHUNK, |start, end| {
        let mut rng = stream(seed, "routing/rows", (start / CHUNK) as u64);
        let mut x = Vec::with_capacity((end - start) * input_dim);
        let mut y = Vec::with_capacity(end - start);
        let mut c = vec![1.0; (end - start) * n_e];
        for i in 0..end - start {
            let row: Vec<f64> = (0..input_dim).map(|_| rng.sample(StandardNormal)).collect();
            let scores: Vec<f64> =
                rows.iter().map(|w| w.iter().zip(&row).map(|(a, b)| a * b).sum()).collect();
            c[i * n_e + argmax(&scores)] = 0.0;
            y.push(rng.gen_range(0..ROUTING_LABELS));
            x.extend(row);
        }
        (x, y, c)
    });
    let mut features = Vec::with_capacity(samples * input_dim);
    let mut labels = Vec::with_capacity(samples);
    let mut costs = Vec::with_capacity(samples * n_e);
    for (x, y, c) in blocks {
        features.extend(x);
        labels.extend(y);
        costs.extend(c);
    }
    let shape = ProblemShape::new(ROUTING_LABELS, n_e)?;
    let data = LabeledDataset::new(shape, input_dim, features, labels, costs)?;
    let scorer = crate::models::Scorer::from(r_star.clone());
    for i in 0..data.len() {
        if data.costs(i)[scorer.predict(data.row(i))?] != 0.0 {
            return Err(Error::InvalidTask(format!("r* has nonzero cost at row {i}")));
        }
    }
    Ok((data, r_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::Stage;
    use crate::models::{system_accuracy, Scorer};

    #[test]
    fn realizable_with_one_free_expert() {
        for n_e in [2, 4] {
            let (data, r) = gen_realizable_two_stage(n_e, 8, 700, 5).unwrap();
            assert_eq!(system_accuracy(&Scorer::from(r), &data, Stage::Two).unwrap(), 1.0);
            for i in 0..data.len() {
                let c = data.costs(i);
                assert_eq!(c.iter().filter(|v| **v == 0.0).count(), 1);
                let total: f64 = c.iter().sum();
                for cj in c {
                    assert!(total - cj >= n_e as f64 - 2.0);
                }
            }
        }
    }

    #[test]
    fn rejects_single_expert() {
        assert!(gen_realizable_two_stage(1, 4, 10, 0).is_err());
    }
}
