use serde::{Deserialize, Serialize};

use super::StiffnessChain;
use crate::error::{Error, Result};

/// One calibration move: `moved_robot` is displaced by `displacement` cm with
/// every other robot held fixed and no virtual source attached, and its
/// force sensor reads `measured_force` N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub moved_robot: usize,
    pub displacement: f64,
    pub measured_force: f64,
}

/// Recovers the chain springs from moves of robots `0, 1, …` in order.
///
/// Moving robot `i` loads the springs on both sides, so
/// `k[i, i+1] = f_i / y_i − k[i−1, i]`.
pub fn calibrate_neighbor_stiffness(records: &[CalibrationRecord]) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::InconsistentCalibration("no records".into()));
    }
    let mut springs = Vec::with_capacity(records.len());
    let mut previous = 0.0;
    for (i, rec) in records.iter().enumerate() {
        if rec.moved_robot != i {
            return Err(Error::InconsistentCalibration(format!(
                "record {i} moves robot {}, expected robot {i}",
                rec.moved_robot
            )));
        }
        if rec.displacement == 0.0 || !rec.displacement.is_finite() {
            return Err(Error::InconsistentCalibration(format!(
                "record {i} has displacement {}",
                rec.displacement
            )));
        }
        let k = rec.measured_force / rec.displacement - previous;
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InconsistentCalibration(format!(
                "recovered stiffness between robots {i} and {} is {k}",
                i + 1
            )));
        }
        springs.push(k);
        previous = k;
    }
    Ok(springs)
}

/// Calibrated chain with the given virtual-source stiffnesses, which the
/// calibration moves cannot observe.
pub fn calibrate_stiffness(
    records: &[CalibrationRecord],
    leader_stiffness: Vec<f64>,
) -> Result<StiffnessChain> {
    let springs = calibrate_neighbor_stiffness(records)?;
    StiffnessChain::new(springs, leader_stiffness)
}
