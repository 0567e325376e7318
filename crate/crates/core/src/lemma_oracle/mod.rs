//! Executable checks of the counting steps behind the max-load bound:
//! close-pair counts, the split of `b^-1 I` into runs, lemma instances,
//! exact per-difference collision probabilities and bucket preimages.

mod collision;
mod decompose;
mod instance;
mod pairs;

pub use collision::{
    exact_collision_probability, interval_preimage_of_bucket, pairwise_uniformity_exhaustive,
    pairwise_uniformity_for_pair, BucketPreimage, CollisionProbability, UniformityVerdict, Universe,
    UNIFORMITY_MAX_P,
};
pub use decompose::{decompose_preimage, Decomposition, PreimagePiece};
pub use instance::{
    check_lemma_instance, generate_lemma_instance, run_lemma_campaign, CampaignConfig, CampaignReport,
    Counterexample, DecompositionReport, Generated, LemmaInstance, LemmaVerdict, PieceReport, PLANT_BUDGET,
};
pub use pairs::{count_close_pairs, count_pairs_within};
