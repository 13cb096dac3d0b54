//! Spiral geometry of parameter-triple trajectories.
//!
//! A window of 3D points is centered, its covariance eigen-decomposed, and
//! the points projected onto the top-two principal directions. The polar
//! angle along the epoch order is unwrapped; the signed total number of
//! turns is the winding number.
//!
//! Orientation convention: the plane normal (`axis`) is oriented along the
//! trajectory's drift in time — the sign of the OLS slope of the axial
//! coordinate against the point index — and the in-plane basis is completed
//! right-handedly (`v = axis x u`). This makes the winding sign independent
//! of eigenvector sign choices, flips it under mirroring any one coordinate,
//! and preserves it under proper rotations.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trainer::Snapshot;

/// Eigenvalue ratio below which the point cloud is treated as rank-deficient.
const RANK_TOL: f64 = 1e-12;

/// Fitted plane and winding summary of one trajectory window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralFit {
    pub centroid: [f64; 3],
    /// Orthonormal in-plane basis (u, v).
    pub plane_basis: [[f64; 3]; 2],
    /// Unit plane normal, `u x v`, oriented along the drift in time.
    pub axis: [f64; 3],
    /// Signed total turns of the projected trajectory.
    pub winding_number: f64,
    /// RMS distance of the points from the fitted plane.
    pub residual_rms: f64,
    pub window: (usize, usize),
}

/// Result of the two-lobe analysis: either two independently fitted spirals
/// (with a flag telling whether their orientations oppose) or a single fit
/// when no split is visible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpiralPairFit {
    Pair { first: SpiralFit, second: SpiralFit, opposite_orientation: bool },
    Single(SpiralFit),
}

/// Fits a spiral to the points whose epochs fall in `window` (inclusive).
/// Needs at least 16 points; collinear or coincident points are a
/// degenerate-geometry error.
pub fn fit_spiral(points: &[(usize, [f64; 3])], window: (usize, usize)) -> Result<SpiralFit> {
    let mut selected: Vec<(usize, Vector3<f64>)> = points
        .iter()
        .filter(|(e, _)| (window.0..=window.1).contains(e))
        .map(|&(e, p)| (e, Vector3::from(p)))
        .collect();
    selected.sort_by_key(|&(e, _)| e);
    fit_sorted(&selected, window)
}

fn fit_sorted(points: &[(usize, Vector3<f64>)], window: (usize, usize)) -> Result<SpiralFit> {
    let n = points.len();
    if n < 16 {
        return Err(Error::InsufficientData(format!(
            "spiral fit needs >= 16 points in the window, have {n}"
        )));
    }
    if points.iter().any(|(_, p)| p.iter().any(|x| !x.is_finite())) {
        return Err(Error::invalid("spiral fit input must be finite"));
    }

    let centroid: Vector3<f64> =
        points.iter().fold(Vector3::zeros(), |acc, (_, p)| acc + p) / n as f64;
    let mut cov = Matrix3::zeros();
    for (_, p) in points {
        let q = p - centroid;
        cov += q * q.transpose();
    }
    cov /= n as f64;

    let eig = cov.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let lambda: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    if lambda[0] <= 0.0 || lambda[1] <= RANK_TOL * lambda[0] {
        return Err(Error::DegenerateGeometry(format!(
            "covariance is rank-deficient (eigenvalues {lambda:?})"
        )));
    }

    let u: Vector3<f64> = eig.eigenvectors.column(order[0]).into_owned();
    let v0: Vector3<f64> = eig.eigenvectors.column(order[1]).into_owned();
    let mut axis = u.cross(&v0).normalize();

    // Orient the axis along the drift in time: the sign of the covariance of
    // the axial coordinate with the point index.
    let mid = (n as f64 - 1.0) / 2.0;
    let drift: f64 = points
        .iter()
        .enumerate()
        .map(|(i, (_, p))| (i as f64 - mid) * (p - centroid).dot(&axis))
        .sum();
    if drift < 0.0 {
        axis = -axis;
    }
    let v = axis.cross(&u);

    let mut winding = 0.0;
    let mut prev_angle: Option<f64> = None;
    let mut residual_sq = 0.0;
    for (_, p) in points {
        let q = p - centroid;
        let angle = libm::atan2(q.dot(&v), q.dot(&u));
        if let Some(prev) = prev_angle {
            let mut step = angle - prev;
            step -= std::f64::consts::TAU * libm::round(step / std::f64::consts::TAU);
            winding += step;
        }
        prev_angle = Some(angle);
        let a = q.dot(&axis);
        residual_sq += a * a;
    }

    Ok(SpiralFit {
        centroid: centroid.into(),
        plane_basis: [u.into(), v.into()],
        axis: axis.into(),
        winding_number: winding / std::f64::consts::TAU,
        residual_rms: libm::sqrt(residual_sq / n as f64),
        window,
    })
}

/// Ratio of the largest projected inter-point gap to the median gap above
/// which the window is treated as two lobes.
const SPLIT_GAP_RATIO: f64 = 4.0;

/// Extracts the given parameter triple from snapshots in `window` and looks
/// for two spiral lobes separated by an unusually large in-plane jump. When
/// a split is found both lobes are fitted independently; otherwise a single
/// fit is returned.
pub fn detect_spiral_pair(
    snapshots: &[Snapshot],
    triple: [usize; 3],
    window: (usize, usize),
) -> Result<SpiralPairFit> {
    let points = triple_series(snapshots, triple)?;
    let selected: Vec<(usize, Vector3<f64>)> = points
        .iter()
        .filter(|(e, _)| (window.0..=window.1).contains(e))
        .map(|&(e, p)| (e, Vector3::from(p)))
        .collect();
    let whole = fit_sorted(&selected, window)?;

    // Consecutive in-plane gaps of the whole-window projection.
    let u = Vector3::from(whole.plane_basis[0]);
    let v = Vector3::from(whole.plane_basis[1]);
    let centroid = Vector3::from(whole.centroid);
    let planar: Vec<(f64, f64)> = selected
        .iter()
        .map(|(_, p)| {
            let q = p - centroid;
            (q.dot(&u), q.dot(&v))
        })
        .collect();
    let gaps: Vec<f64> = planar
        .windows(2)
        .map(|w| libm::hypot(w[1].0 - w[0].0, w[1].1 - w[0].1))
        .collect();
    let (split_at, &largest) = gaps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect(">= 16 points imply >= 15 gaps");
    let med = super::stats::median(&gaps);

    if !(largest > SPLIT_GAP_RATIO * med && med > 0.0) {
        return Ok(SpiralPairFit::Single(whole));
    }
    let (first_pts, second_pts) = selected.split_at(split_at + 1);
    if first_pts.len() < 16 || second_pts.len() < 16 {
        return Err(Error::InsufficientData(format!(
            "two-lobe split leaves lobes of {} and {} points; both need >= 16",
            first_pts.len(),
            second_pts.len()
        )));
    }
    let first = fit_sorted(first_pts, (window.0, first_pts.last().unwrap().0))?;
    let second = fit_sorted(second_pts, (second_pts[0].0, window.1))?;
    let opposite = first.winding_number.signum() != second.winding_number.signum();
    Ok(SpiralPairFit::Pair { first, second, opposite_orientation: opposite })
}

/// Pulls one parameter triple out of a snapshot list.
pub fn triple_series(
    snapshots: &[Snapshot],
    triple: [usize; 3],
) -> Result<Vec<(usize, [f64; 3])>> {
    if let Some(s) = snapshots.first() {
        if triple.iter().any(|&i| i >= s.params.len()) {
            return Err(Error::invalid(format!(
                "triple {triple:?} out of range for {} parameters",
                s.params.len()
            )));
        }
    }
    Ok(snapshots
        .iter()
        .map(|s| {
            (s.epoch, [s.params[triple[0]], s.params[triple[1]], s.params[triple[2]]])
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Helix with `turns` full turns across `n` points, radius 1, total
    /// axial extent `height`.
    pub(crate) fn helix(n: usize, turns: f64, height: f64) -> Vec<(usize, [f64; 3])> {
        (0..n)
            .map(|t| {
                let frac = t as f64 / n as f64;
                let angle = std::f64::consts::TAU * turns * frac;
                (t, [libm::cos(angle), libm::sin(angle), height * frac])
            })
            .collect()
    }

    #[test]
    fn canonical_helix_winds_positive() {
        // 10 turns over 500 points, rising along +z: counterclockwise as
        // seen from the drift direction.
        let pts = helix(500, 10.0, 1.0);
        let fit = fit_spiral(&pts, (0, 499)).unwrap();
        assert!((fit.winding_number - 10.0).abs() < 0.1, "winding {}", fit.winding_number);
        // Plane is the xy-plane; the axis follows the +z drift.
        assert!(fit.axis[2] > 0.99);
    }

    #[test]
    fn mirrored_helix_winds_negative() {
        let pts: Vec<(usize, [f64; 3])> =
            helix(500, 10.0, 1.0).into_iter().map(|(e, [x, y, z])| (e, [x, -y, z])).collect();
        let fit = fit_spiral(&pts, (0, 499)).unwrap();
        assert!((fit.winding_number + 10.0).abs() < 0.1, "winding {}", fit.winding_number);
    }

    #[test]
    fn mirror_any_coordinate_flips_sign() {
        let base = helix(300, 6.0, 0.8);
        let reference = fit_spiral(&base, (0, 299)).unwrap();
        for coord in 0..3 {
            let mirrored: Vec<(usize, [f64; 3])> = base
                .iter()
                .map(|&(e, mut p)| {
                    p[coord] = -p[coord];
                    (e, p)
                })
                .collect();
            let fit = fit_spiral(&mirrored, (0, 299)).unwrap();
            assert_eq!(
                fit.winding_number.signum(),
                -reference.winding_number.signum(),
                "coordinate {coord}"
            );
            assert!(
                (fit.winding_number.abs() - reference.winding_number.abs()).abs() < 1e-9,
                "|winding| must be preserved under mirroring"
            );
        }
    }

    #[test]
    fn rotation_preserves_magnitude_and_residual() {
        let base = helix(400, 8.0, 1.2);
        let reference = fit_spiral(&base, (0, 399)).unwrap();
        // A fixed, arbitrary proper rotation (product of axis rotations).
        let rot = nalgebra::Rotation3::from_euler_angles(0.7, -1.1, 2.3);
        let rotated: Vec<(usize, [f64; 3])> = base
            .iter()
            .map(|&(e, p)| (e, (rot * Vector3::from(p)).into()))
            .collect();
        let fit = fit_spiral(&rotated, (0, 399)).unwrap();
        assert!((fit.winding_number.abs() - reference.winding_number.abs()).abs() < 1e-9);
        assert!((fit.residual_rms - reference.residual_rms).abs() < 1e-9);
        // Proper rotations also preserve the sign.
        assert_eq!(fit.winding_number.signum(), reference.winding_number.signum());
    }

    #[test]
    fn plane_basis_orthonormal_and_axis_unit() {
        let fit = fit_spiral(&helix(200, 5.0, 0.5), (0, 199)).unwrap();
        let u = Vector3::from(fit.plane_basis[0]);
        let v = Vector3::from(fit.plane_basis[1]);
        let axis = Vector3::from(fit.axis);
        assert!((u.norm() - 1.0).abs() < 1e-12);
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!(u.dot(&v).abs() < 1e-12);
        assert!((axis.norm() - 1.0).abs() < 1e-12);
        assert!((u.cross(&v) - axis).norm() < 1e-12);
    }

    #[test]
    fn planar_spiral_has_zero_residual() {
        // An Archimedean spiral confined to a plane: every point should sit
        // exactly on the fitted plane.
        let pts: Vec<(usize, [f64; 3])> = (0..200)
            .map(|t| {
                let angle = t as f64 * 0.2;
                let r = 0.1 + 0.01 * t as f64;
                (t, [r * libm::cos(angle), r * libm::sin(angle), 3.0])
            })
            .collect();
        let fit = fit_spiral(&pts, (0, 199)).unwrap();
        assert!(fit.residual_rms < 1e-12, "residual {}", fit.residual_rms);
        let expected_turns = 199.0 * 0.2 / std::f64::consts::TAU;
        assert!((fit.winding_number.abs() - expected_turns).abs() < 0.1);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        // All points identical.
        let same: Vec<(usize, [f64; 3])> = (0..20).map(|t| (t, [1.0, 2.0, 3.0])).collect();
        assert!(matches!(
            fit_spiral(&same, (0, 19)),
            Err(Error::DegenerateGeometry(_))
        ));
        // Collinear points.
        let line: Vec<(usize, [f64; 3])> =
            (0..20).map(|t| (t, [t as f64, 2.0 * t as f64, -(t as f64)])).collect();
        assert!(matches!(
            fit_spiral(&line, (0, 19)),
            Err(Error::DegenerateGeometry(_))
        ));
        // Too few points.
        let few = helix(10, 2.0, 0.5);
        assert!(matches!(fit_spiral(&few, (0, 9)), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn window_filters_points() {
        let pts = helix(500, 10.0, 1.0);
        let fit = fit_spiral(&pts, (0, 249)).unwrap();
        // Half the span winds half the turns.
        assert!((fit.winding_number - 5.0).abs() < 0.2, "winding {}", fit.winding_number);
    }

    fn snapshots_from_points(points: &[(usize, [f64; 3])]) -> Vec<Snapshot> {
        points
            .iter()
            .map(|&(e, p)| Snapshot {
                epoch: e,
                params: crate::net::ParameterVector::from_vec(p.to_vec()),
            })
            .collect()
    }

    #[test]
    fn two_lobe_mirror_pair_detected() {
        // Lobe A: counterclockwise around the origin. Lobe B: mirrored
        // (clockwise), offset far away in the plane.
        let mut pts = helix(250, 5.0, 0.5);
        let n0 = pts.len();
        pts.extend(helix(250, 5.0, 0.5).into_iter().map(|(e, [x, y, z])| {
            (e + n0, [x + 8.0, -y, z])
        }));
        let snaps = snapshots_from_points(&pts);
        match detect_spiral_pair(&snaps, [0, 1, 2], (0, 499)).unwrap() {
            SpiralPairFit::Pair { first, second, opposite_orientation } => {
                assert!(opposite_orientation);
                assert!(first.winding_number > 4.0, "first {}", first.winding_number);
                assert!(second.winding_number < -4.0, "second {}", second.winding_number);
            }
            SpiralPairFit::Single(_) => panic!("expected a two-lobe split"),
        }
    }

    #[test]
    fn single_helix_yields_single_fit() {
        let snaps = snapshots_from_points(&helix(300, 6.0, 0.8));
        match detect_spiral_pair(&snaps, [0, 1, 2], (0, 299)).unwrap() {
            SpiralPairFit::Single(fit) => {
                assert!((fit.winding_number - 6.0).abs() < 0.1);
            }
            SpiralPairFit::Pair { .. } => panic!("single lobe must not split"),
        }
    }

    #[test]
    fn small_lobes_are_insufficient() {
        let mut pts = helix(20, 2.0, 0.2);
        pts.extend(
            helix(10, 2.0, 0.2).into_iter().map(|(e, [x, y, z])| (e + 20, [x + 9.0, -y, z])),
        );
        let snaps = snapshots_from_points(&pts);
        assert!(matches!(
            detect_spiral_pair(&snaps, [0, 1, 2], (0, 29)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn triple_out_of_range() {
        let snaps = snapshots_from_points(&helix(20, 2.0, 0.2));
        assert!(detect_spiral_pair(&snaps, [0, 1, 7], (0, 19)).is_err());
    }
}
