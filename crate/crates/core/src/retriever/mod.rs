//! Caption/image retriever: the frozen scorer whose similarity losses drive
//! specificity fine-tuning, plus the neighbor table used to pick contrastive
//! images and the rank computation behind the retrieval metrics.

mod losses;
mod model;
mod neighbors;
mod rank;

pub use losses::{
    cosine, loss_ccos, loss_cdp, loss_cos, loss_dp, ranking_loss, specificity_loss, LossKind,
};
pub use model::{RetrieverConfig, RetrieverModel, RetrieverVars};
pub use neighbors::{build_neighbor_table, neighbor_count, select_contrastive, NeighborTable};
pub use rank::{cosine_similarity, rank_by_similarity};
