use alloc::string::String;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Graph;
use crate::captioner::{dedup_consecutive, generate, CaptionerModel, ImageContext, SampleMode};
use crate::metrics::{compute_report, mean_rank, recall_at_k, CaptionCorpus, MetricsReport};
use crate::retriever::{cosine_similarity, rank_by_similarity, RetrieverModel};
use crate::synthworld::{Dataset, Specificity, Split};
use crate::{Error, Result};

/// A greedy caption after consecutive-duplicate removal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedCaption {
    pub image_id: usize,
    pub ids: Vec<usize>,
    pub text: String,
}

fn check_vocab(ds: &Dataset, captioner: Option<&CaptionerModel>, retriever: Option<&RetrieverModel>) -> Result<()> {
    let v = ds.vocab.len();
    let sizes = captioner.map(|c| ("captioner", c.vocab_size)).into_iter().chain(retriever.map(|r| ("retriever", r.vocab_size)));
    for (who, n) in sizes {
        if n != v {
            return Err(Error::Config(alloc::format!(
                "{who} was trained with a vocabulary of {n} words but the dataset has {v}"
            )));
        }
    }
    Ok(())
}

pub fn greedy_captions(model: &CaptionerModel, ds: &Dataset, images: &[usize]) -> Result<Vec<GeneratedCaption>> {
    check_vocab(ds, Some(model), None)?;
    // greedy decoding never draws from the rng
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::with_capacity(images.len());
    for chunk in images.chunks(16) {
        let mut g = Graph::new();
        let vars = model.bind(&mut g, |_| false)?;
        for &image in chunk {
            let ctx = ImageContext::new(&mut g, ds.grid(image)?, &vars)?;
            let gen = generate(&mut g, model, &vars, &ctx, SampleMode::Greedy, 1.0, &mut rng, model.config.max_len)?;
            let ids = dedup_consecutive(&gen.ids);
            let text = ds.vocab.decode(&ids)?.join(" ");
            out.push(GeneratedCaption { image_id: image, ids, text });
        }
    }
    Ok(out)
}

/// Rank of each caption's own image among `pool` under the retriever.
pub fn retrieval_ranks(retriever: &RetrieverModel, ds: &Dataset, captions: &[(usize, Vec<usize>)], pool: &[usize]) -> Result<Vec<usize>> {
    check_vocab(ds, None, Some(retriever))?;
    let embs = pool
        .iter()
        .map(|&i| Ok((i, retriever.image_embedding(&ds.grid(i)?.global)?)))
        .collect::<Result<Vec<_>>>()?;
    captions
        .iter()
        .map(|(image, ids)| {
            let c = retriever.caption_embedding(ids)?;
            let sims = embs
                .iter()
                .map(|(i, e)| cosine_similarity(&c, e).map(|s| (*i, s)))
                .collect::<Result<Vec<_>>>()?;
            rank_by_similarity(&sims, *image)
        })
        .collect()
}

/// Retrieval quality of ground-truth specific captions of `split` against
/// the whole split: `(mean rank, recall@1 %, recall@5 %)`.
pub fn retrieval_eval(retriever: &RetrieverModel, ds: &Dataset, split: Split) -> Result<(f64, f64, f64)> {
    let pool = ds.splits.ids(split);
    let mut caps = Vec::new();
    for &image in pool {
        for c in ds.captions_of(image)? {
            if c.specificity == Specificity::Specific {
                caps.push((image, ds.vocab.encode(&c.words)));
            }
        }
    }
    if caps.is_empty() {
        return Err(Error::Empty("specific captions in the evaluation split"));
    }
    let ranks = retrieval_ranks(retriever, ds, &caps, pool)?;
    Ok((mean_rank(&ranks)?, recall_at_k(&ranks, 1)?, recall_at_k(&ranks, 5)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub split: Split,
    pub report: MetricsReport,
    pub captions: Vec<GeneratedCaption>,
}

/// Greedy captions for every image of `split`, retrieved against the whole
/// split, scored with the full metric suite.
pub fn evaluate_model(captioner: &CaptionerModel, retriever: &RetrieverModel, ds: &Dataset, split: Split) -> Result<Evaluation> {
    let images = ds.splits.ids(split);
    if images.is_empty() {
        return Err(Error::Empty("evaluation split"));
    }
    let captions = greedy_captions(captioner, ds, images)?;
    let pairs: Vec<(usize, Vec<usize>)> = captions.iter().map(|c| (c.image_id, c.ids.clone())).collect();
    let ranks = retrieval_ranks(retriever, ds, &pairs, images)?;
    let references = images
        .iter()
        .map(|&i| Ok(ds.captions_of(i)?.iter().map(|c| c.text()).collect()))
        .collect::<Result<Vec<Vec<String>>>>()?;
    let corpus = CaptionCorpus {
        image_ids: images.to_vec(),
        generated: captions.iter().map(|c| c.text.clone()).collect(),
        references,
        ranks,
    };
    let report = compute_report(&corpus, &ds.training_caption_set())?;
    Ok(Evaluation { split, report, captions })
}
