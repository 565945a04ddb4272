use crate::classifiers::{ClassScores, TrainedModel};
use crate::error::{Error, Result};
use crate::protocol::GROUP_SIZE;
use crate::ClassTag;

/// Classify a probe of `GROUP_SIZE` consecutive latencies from one location.
pub fn identify_manufacturer(probe: &[f64], model: &TrainedModel) -> Result<(ClassTag, ClassScores)> {
    if model.arity != GROUP_SIZE {
        return Err(Error::validation(format!(
            "model expects {} features, probes have {GROUP_SIZE}",
            model.arity
        )));
    }
    if probe.len() != GROUP_SIZE {
        return Err(Error::Arity {
            expected: GROUP_SIZE,
            got: probe.len(),
        });
    }
    Ok((model.predict(probe)?, model.scores(probe)?))
}
