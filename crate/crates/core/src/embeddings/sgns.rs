//! Skip-gram with negative sampling.
//!
//! Single-threaded and driven by one ChaCha stream, so a fixed seed gives
//! bit-identical tables. Every (center, context) pair inside the window is one
//! positive example; negatives come from the unigram distribution raised to
//! the 3/4 power. The learning rate decays linearly over all epochs.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, EmbeddingError, EmbeddingParams, EmbeddingTable};
use crate::corpus::TermSequence;

const MIN_LR_FRACTION: f64 = 1e-4;

/// Average loss per positive pair for each epoch, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub epoch_losses: Vec<f64>,
    pub pairs_per_epoch: usize,
}

pub fn train_sgns(sequences: &[TermSequence], params: &EmbeddingParams) -> Result<EmbeddingTable, EmbeddingError> {
    train_sgns_with_report(sequences, params).map(|(t, _)| t)
}

struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

fn build_vocab(sequences: &[TermSequence], min_count: usize) -> Vocab {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for seq in sequences {
        for t in &seq.terms {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count as u64).collect();
    // Frequency descending, then lexicographic, so ids do not depend on hashing.
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let words: Vec<String> = kept.iter().map(|(w, _)| w.to_string()).collect();
    let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    Vocab {
        words,
        counts: kept.iter().map(|&(_, c)| c).collect(),
        index,
    }
}

/// Cumulative unigram^0.75 weights for inverse-CDF sampling.
struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        Self { cumulative }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let x = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= x).min(self.cumulative.len() - 1)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln(sigmoid(x))`, stable for large |x|.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

pub fn train_sgns_with_report(
    sequences: &[TermSequence],
    params: &EmbeddingParams,
) -> Result<(EmbeddingTable, TrainingReport), EmbeddingError> {
    params.validate()?;
    let vocab = build_vocab(sequences, params.min_count);
    if vocab.words.is_empty() {
        return Err(EmbeddingError::EmptyVocabulary {
            min_count: params.min_count,
        });
    }
    let dim = params.dim;
    let n = vocab.words.len();

    let corpus: Vec<Vec<usize>> = sequences
        .iter()
        .map(|s| s.terms.iter().filter_map(|t| vocab.index.get(t).copied()).collect())
        .filter(|s: &Vec<usize>| !s.is_empty())
        .collect();
    let pairs_per_epoch: usize = corpus
        .iter()
        .map(|s| {
            (0..s.len())
                .map(|p| p.min(params.window) + (s.len() - 1 - p).min(params.window))
                .sum::<usize>()
        })
        .sum();
    let tokens_per_epoch: usize = corpus.iter().map(Vec::len).sum();
    let total_steps = (tokens_per_epoch * params.epochs).max(1) as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut input: Vec<f64> = (0..n * dim).map(|_| (rng.gen::<f64>() - 0.5) / dim as f64).collect();
    let mut output = vec![0.0f64; n * dim];
    let sampler = NegativeSampler::new(&vocab.counts);

    let mut grad = vec![0.0f64; dim];
    let mut epoch_losses = Vec::with_capacity(params.epochs);
    let mut step = 0usize;

    for _ in 0..params.epochs {
        let mut loss = 0.0;
        let mut pairs = 0usize;
        for sentence in &corpus {
            for (pos, &center) in sentence.iter().enumerate() {
                let lr = params.learning_rate * (1.0 - step as f64 / total_steps).max(MIN_LR_FRACTION);
                step += 1;
                let lo = pos.saturating_sub(params.window);
                let hi = (pos + params.window).min(sentence.len() - 1);
                for (ctx_pos, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    pairs += 1;
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let center_vec = center * dim..(center + 1) * dim;

                    for k in 0..=params.negative_samples {
                        let (target, label) = if k == 0 {
                            (context, 1.0)
                        } else {
                            let t = sampler.sample(&mut rng);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let out_vec = target * dim..(target + 1) * dim;
                        let f = dot(&input[center_vec.clone()], &output[out_vec.clone()]);
                        loss += if label > 0.0 { neg_log_sigmoid(f) } else { neg_log_sigmoid(-f) };
                        let g = (label - sigmoid(f)) * lr;
                        let (inp, out) = (&input[center_vec.clone()], &mut output[out_vec]);
                        for d in 0..dim {
                            grad[d] += g * out[d];
                            out[d] += g * inp[d];
                        }
                    }
                    for (x, g) in input[center_vec].iter_mut().zip(&grad) {
                        *x += g;
                    }
                }
            }
        }
        epoch_losses.push(if pairs > 0 { loss / pairs as f64 } else { 0.0 });
    }

    let table = EmbeddingTable::new(vocab.words, input, dim, *params)?;
    Ok((
        table,
        TrainingReport {
            epoch_losses,
            pairs_per_epoch,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;

    fn seqs(lines: &[&str]) -> Vec<TermSequence> {
        lines
            .iter()
            .enumerate()
            .map(|(i, l)| TermSequence::new(format!("s{i}"), l.split_whitespace().map(String::from).collect()))
            .collect()
    }

    fn small(seed: u64) -> EmbeddingParams {
        EmbeddingParams {
            dim: 16,
            window: 2,
            min_count: 1,
            epochs: 3,
            rng_seed: seed,
            ..EmbeddingParams::default()
        }
    }

    #[test]
    fn min_count_filters_rare_tokens() {
        let mut lines = vec!["y y y y y"; 1];
        lines.push("x x x x");
        let params = EmbeddingParams {
            dim: 8,
            ..EmbeddingParams::default()
        };
        let t = train_sgns(&seqs(&lines), &params).unwrap();
        assert!(t.contains("y"));
        assert!(!t.contains("x"));
    }

    #[test]
    fn empty_vocabulary() {
        let params = EmbeddingParams::default();
        assert!(matches!(
            train_sgns(&seqs(&["a b c"]), &params),
            Err(EmbeddingError::EmptyVocabulary { min_count: 5 })
        ));
    }

    #[test]
    fn default_dimension() {
        let t = train_sgns(&seqs(&["a b a b a b a b a b"]), &EmbeddingParams::default()).unwrap();
        assert_eq!(t.dim(), 300);
        assert_eq!(t.vector("a").unwrap().len(), 300);
    }

    #[test]
    fn seeded_runs_are_bit_identical() {
        let corpus = seqs(&["a b c d e", "b c d e f", "a c e f b"]);
        let (a, ra) = train_sgns_with_report(&corpus, &small(7)).unwrap();
        let (b, rb) = train_sgns_with_report(&corpus, &small(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        let (c, _) = train_sgns_with_report(&corpus, &small(8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn loss_decreases() {
        let corpus = seqs(&["a b c d e f g h"; 40]);
        let (_, report) = train_sgns_with_report(&corpus, &small(1)).unwrap();
        assert!(report.pairs_per_epoch >= 100);
        assert!(report.epoch_losses.last().unwrap() <= report.epoch_losses.first().unwrap());
    }

    #[test]
    fn pair_count_matches_window() {
        let corpus = seqs(&["a b c d"]);
        let (_, report) = train_sgns_with_report(&corpus, &small(1)).unwrap();
        // window 2: a->{b,c}, b->{a,c,d}, c->{a,b,d}, d->{b,c}
        assert_eq!(report.pairs_per_epoch, 10);
    }

    #[test]
    fn stable_sigmoid_loss() {
        assert!((neg_log_sigmoid(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(neg_log_sigmoid(800.0) >= 0.0);
        assert!((neg_log_sigmoid(-800.0) - 800.0).abs() < 1e-9);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
    }
}
