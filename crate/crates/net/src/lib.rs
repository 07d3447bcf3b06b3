//! Network-facing pieces: the annotation HTTP service and the remote scorer.

pub mod remote;
pub mod server;

use std::path::Path;

use moralscope_core::scoring::{Lexicon, LexiconScorer, ReplayScorer, Scorer, ScorerDescriptor, ScorerKind};
use moralscope_core::Result;

pub use remote::{RemoteScorer, RetryPolicy};

/// Builds the scorer a descriptor names. Relative `source` paths resolve
/// against `base_dir`.
pub fn scorer_from_descriptor(
    descriptor: &ScorerDescriptor,
    base_dir: &Path,
    policy: RetryPolicy,
) -> Result<Box<dyn Scorer>> {
    descriptor.validate()?;
    let source = descriptor.source.as_ref().map(|p| base_dir.join(p));
    Ok(match descriptor.kind {
        ScorerKind::RemoteService => Box::new(RemoteScorer::new(
            descriptor.endpoint.as_deref().expect("validated"),
            descriptor.language,
            policy,
        )?),
        ScorerKind::FileReplay => Box::new(ReplayScorer::load(source.expect("validated"))?),
        ScorerKind::LexiconBaseline => {
            let lexicon = match source {
                Some(path) => Lexicon::load(path)?,
                None => Lexicon::bundled(descriptor.language),
            };
            Box::new(LexiconScorer::new(lexicon))
        }
    })
}
