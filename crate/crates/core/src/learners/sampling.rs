use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Keep every positive and `floor(neg_per_pos * n_pos)` negatives drawn
/// without replacement (all of them if there are fewer). Returns ascending
/// row indices.
pub fn undersample(labels: &[bool], neg_per_pos: f64, seed: u64) -> Result<Vec<usize>> {
    if !(neg_per_pos > 0.0 && neg_per_pos.is_finite()) {
        return Err(Error::arg(format!("neg_per_pos must be positive, got {neg_per_pos}")));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        return Err(Error::TrainingSkipped("no positive rows to undersample".into()));
    }
    let negatives: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let want = ((neg_per_pos * n_pos as f64).floor() as usize).min(negatives.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    keep.extend(index::sample(&mut rng, negatives.len(), want).into_iter().map(|k| negatives[k]));
    keep.sort_unstable();
    Ok(keep)
}
