//! Embedding text and finding nearest neighbors, with the exact index and
//! the seeded approximate (small-world) index side by side.
//!
//!     cargo run --example similarity_search

use std::error::Error;

use inses::embedding::{
    cosine, Embedder, HashEmbedder, HnswParams, IndexKind, VectorIndex,
};
use inses::graph::NodeId;

const PHRASES: [&str; 8] = [
    "anti-slavery newspaper",
    "abolitionist weekly paper",
    "newspaper publisher",
    "steam locomotive",
    "electric railway engine",
    "second wife",
    "spouse",
    "suspension bridge",
];

fn main() -> Result<(), Box<dyn Error>> {
    let embedder = HashEmbedder::new(64);

    // The embedder hashes character trigrams, so phrases sharing surface
    // text land close together.
    let a = embedder.embed("anti-slavery newspaper")?;
    let b = embedder.embed("antislavery newspaper")?;
    let c = embedder.embed("steam locomotive")?;
    println!("cosine(anti-slavery newspaper, antislavery newspaper) = {:.3}", cosine(&a, &b)?);
    println!("cosine(anti-slavery newspaper, steam locomotive)      = {:.3}\n", cosine(&a, &c)?);

    let mut exact = VectorIndex::new(IndexKind::Exact, embedder.dim());
    let mut approximate = VectorIndex::with_params(
        IndexKind::Approximate,
        embedder.dim(),
        HnswParams { seed: 42, ..HnswParams::default() },
    );
    for phrase in PHRASES {
        let vector = embedder.embed(phrase)?;
        exact.insert(NodeId::new(phrase), vector.clone())?;
        approximate.insert(NodeId::new(phrase), vector)?;
    }

    let query = "abolitionist newspaper";
    let query_vector = embedder.embed(query)?;
    println!("top 3 for {query:?}:");
    println!("  {:<32} {:<10} {}", "exact", "score", "approximate agrees");
    let exact_hits = exact.top_k(&query_vector, 3, &[])?;
    let approximate_hits = approximate.top_k(&query_vector, 3, &[])?;
    for (i, (id, score)) in exact_hits.iter().enumerate() {
        let agrees = approximate_hits.get(i).map(|(other, _)| other == id).unwrap_or(false);
        println!("  {:<32} {score:<10.3} {agrees}", id.as_str());
    }

    // Excluding ids lets callers skip nodes a search has already consumed.
    let without_best = exact.nearest(&query_vector, &[exact_hits[0].0.clone()])?;
    if let Some((id, score)) = without_best {
        println!("\nnearest once {:?} is excluded: {:?} ({score:.3})", exact_hits[0].0.as_str(), id.as_str());
    }
    Ok(())
}
