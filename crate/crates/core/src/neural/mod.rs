//! Small fully-connected networks with hand-written backpropagation, Adam
//! and a patience-based learning-rate schedule.

mod mlp;
mod optim;

use serde::{Deserialize, Serialize};

pub use mlp::{sigmoid, softplus, Activation, ForwardCache, LayerRecord, LayerView, Mlp, MlpGradients};
pub use optim::{adam_step, schedule_update, AdamState, LrSchedule};

use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "dll-mlp/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpCheckpoint {
    pub format: String,
    pub layers: Vec<LayerRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<LrSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adam: Option<AdamState>,
}

impl MlpCheckpoint {
    pub fn new(model: &Mlp, schedule: Option<&LrSchedule>, adam: Option<&AdamState>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            layers: model.to_layers(),
            schedule: schedule.cloned(),
            adam: adam.cloned(),
        }
    }

    pub fn model(&self) -> Result<Mlp> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::validation(format!(
                "unsupported checkpoint format '{}', expected '{CHECKPOINT_FORMAT}'",
                self.format
            )));
        }
        let model = Mlp::from_layers(&self.layers)?;
        if let Some(adam) = &self.adam {
            crate::error::check_len("Adam moments", model.params().len(), adam.m.len())?;
            crate::error::check_len("Adam moments", model.params().len(), adam.v.len())?;
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_json_roundtrip() {
        let m = Mlp::new(&[2, 3, 1], &[Activation::Sigmoid, Activation::NegatedSoftplus], 4).unwrap();
        let sched = LrSchedule::new(1e-4, 8, 100);
        let adam = AdamState::new(m.params().len());
        let ck = MlpCheckpoint::new(&m, Some(&sched), Some(&adam));
        let text = serde_json::to_string(&ck).unwrap();
        assert!(text.contains("\"format\":\"dll-mlp/v1\""));
        assert!(text.contains("\"negated_softplus\""));
        let back: MlpCheckpoint = serde_json::from_str(&text).unwrap();
        assert_eq!(back.model().unwrap(), m);
        assert_eq!(back, ck);
    }

    #[test]
    fn wrong_format_rejected() {
        let m = Mlp::new(&[2, 1], &[Activation::Linear], 4).unwrap();
        let mut ck = MlpCheckpoint::new(&m, None, None);
        ck.format = "dll-mlp/v0".into();
        assert!(ck.model().is_err());
    }
}
