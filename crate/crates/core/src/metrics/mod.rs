//! Caption quality, diversity and retrieval metrics.

mod overlap;
mod report;
mod set;

pub use overlap::{bleu_n, lcs_len, rouge_l, rouge_l_pair, ROUGE_BETA};
pub use report::{compute_report, CaptionCorpus, MetricsReport, RECALL_KS};
pub use set::{avg_caption_length, diversity_pct, mean_rank, novelty_pct, recall_at_k, vocab_size_used};
