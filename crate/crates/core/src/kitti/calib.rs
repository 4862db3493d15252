//! Calibration files: lines of `KEY: v1 ... vN`.

use std::path::Path;

use nalgebra::Matrix3x4;

use crate::error::{Error, Result};
use crate::geometry::CameraIntrinsics;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameCalibration {
    /// Left color camera projection, normalized so that `P2[2][2] = 1`.
    pub p2: Matrix3x4<f64>,
}

impl FrameCalibration {
    pub fn from_p2(p2: Matrix3x4<f64>) -> Result<Self> {
        let s = p2[(2, 2)];
        if !(s.abs() > 1e-12) || !p2.iter().all(|x| x.is_finite()) {
            return Err(Error::Format(format!("P2 has invalid scale entry {s}")));
        }
        let p2 = p2 / s;
        if !(p2[(0, 0)] > 0.0 && p2[(1, 1)] > 0.0) {
            return Err(Error::Format("P2 focal lengths must be positive".into()));
        }
        Ok(Self { p2 })
    }

    /// Pinhole intrinsics from the left 3×3 block. The translation column
    /// (stereo baseline relative to the reference camera) is not modelled.
    pub fn intrinsics(&self) -> CameraIntrinsics {
        let p = &self.p2;
        CameraIntrinsics {
            fx: p[(0, 0)],
            fy: p[(1, 1)],
            cx: p[(0, 2)],
            cy: p[(1, 2)],
        }
    }
}

pub fn parse_calibration(text: &str) -> Result<FrameCalibration> {
    for (i, raw) in text.lines().enumerate() {
        let Some((key, values)) = raw.split_once(':') else {
            continue;
        };
        if key.trim() != "P2" {
            continue;
        }
        let vals: Vec<f64> = values
            .split_whitespace()
            .map(|t| {
                t.parse().map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: format!("non-numeric P2 entry '{t}'"),
                })
            })
            .collect::<Result<_>>()?;
        if vals.len() != 12 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("P2 needs 12 values, found {}", vals.len()),
            });
        }
        return FrameCalibration::from_p2(Matrix3x4::from_row_slice(&vals));
    }
    Err(Error::Format("calibration has no P2 entry".into()))
}

pub fn read_calibration(path: &Path) -> Result<FrameCalibration> {
    parse_calibration(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CALIB: &str = "P0: 7.215377e+02 0.000000e+00 6.095593e+02 0.000000e+00 0.000000e+00 7.215377e+02 1.728540e+02 0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00 0.000000e+00
P2: 7.215377e+02 0.000000e+00 6.095593e+02 4.485728e+01 0.000000e+00 7.215377e+02 1.728540e+02 2.163791e-01 0.000000e+00 0.000000e+00 1.000000e+00 2.745884e-03
R0_rect: 9.999239e-01 9.837760e-03 -7.445048e-03 -9.869795e-03 9.999421e-01 -4.278459e-03 7.402527e-03 4.351614e-03 9.999631e-01
";

    #[test]
    fn p2_intrinsics() {
        let k = parse_calibration(CALIB).unwrap().intrinsics();
        assert_eq!((k.fx, k.fy, k.cx, k.cy), (721.5377, 721.5377, 609.5593, 172.854));
    }

    #[test]
    fn scaled_p2_is_normalized() {
        let text = "P2: 1443.0754 0 1219.1186 0 0 1443.0754 345.708 0 0 0 2 0";
        let c = parse_calibration(text).unwrap();
        assert_eq!(c.p2[(2, 2)], 1.0);
        assert_eq!(c.intrinsics().fx, 721.5377);
    }

    #[test]
    fn missing_or_short_p2() {
        assert!(matches!(parse_calibration("P0: 1 2 3"), Err(Error::Format(_))));
        assert!(matches!(parse_calibration("P2: 1 2 3"), Err(Error::Parse { line: 1, .. })));
    }
}
