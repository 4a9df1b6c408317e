use chrono::NaiveDateTime;

use crate::ingest::{FeatureVector, Level};

use super::{AlertEvent, AlertKind};

/// Attack when the neighborhood reported a NACR or a strict majority of the
/// `nb_sh` homes alerted.
pub fn decide(nacr: bool, nb_alert: usize, nb_sh: usize) -> bool {
    nacr || 2 * nb_alert > nb_sh
}

/// Serialized aggregator of home alerts and NACRs.
#[derive(Debug, Clone, Default)]
pub struct DecisionMaker {
    pub nb_sh: usize,
    /// Events sent to the operator.
    pub operator_log: Vec<AlertEvent>,
    /// Rows routed after operator review.
    pub attack_rows: Vec<(Level, Option<u32>, FeatureVector)>,
    pub benign_rows: Vec<(Level, Option<u32>, FeatureVector)>,
}

impl DecisionMaker {
    pub fn new(nb_sh: usize) -> Self {
        DecisionMaker {
            nb_sh,
            ..Default::default()
        }
    }

    /// Fuses the reports of one time step. On an attack decision an
    /// `attack_confirmed` event goes to the operator log and is returned.
    pub fn fuse(&mut self, timestamp: NaiveDateTime, interval: u8, nacr: Option<&AlertEvent>, nb_alert: usize) -> Option<AlertEvent> {
        if !decide(nacr.is_some(), nb_alert, self.nb_sh) {
            return None;
        }
        let (observed, predicted, threshold) = nacr.map_or((0.0, 0.0, 0.0), |a| (a.observed, a.predicted, a.threshold));
        let event = AlertEvent {
            kind: AlertKind::AttackConfirmed,
            level: Level::Nbh,
            meter_id: None,
            timestamp,
            interval,
            observed,
            predicted,
            threshold,
            nb_alert: Some(nb_alert),
        };
        self.operator_log.push(event.clone());
        Some(event)
    }

    /// Files suspect rows according to the operator's verdict.
    pub fn route(&mut self, rows: impl IntoIterator<Item = (Level, Option<u32>, FeatureVector)>, confirmed: bool) {
        let target = if confirmed { &mut self.attack_rows } else { &mut self.benign_rows };
        target.extend(rows);
    }
}
