//! Deterministic 2D principal-component view of the structural space.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::profile::PROFILE_DIMS;
use super::standardize::StandardizedFeatures;
use super::MetricsError;
use crate::corpus::ConditionLabel;
use crate::stats::dist::chi2_quantile;

pub const ELLIPSE_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca2d {
    pub mean: [f64; PROFILE_DIMS],
    /// Unit loadings of the first two components. Each is signed so its
    /// largest-magnitude loading is positive.
    pub components: [[f64; PROFILE_DIMS]; 2],
    pub explained_variance: [f64; 2],
    pub explained_share: [f64; 2],
    pub coords: Vec<[f64; 2]>,
}

/// Top-two principal components of `points` (sample covariance).
pub fn pca_2d(points: &[[f64; PROFILE_DIMS]]) -> Result<Pca2d, MetricsError> {
    let n = points.len();
    if n < 3 {
        return Err(MetricsError::TooFew {
            what: "projection",
            need: 3,
            got: n,
        });
    }
    let mut mean = [0.0; PROFILE_DIMS];
    for p in points {
        for d in 0..PROFILE_DIMS {
            mean[d] += p[d];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, PROFILE_DIMS, |i, d| points[i][d] - mean[d]);
    let cov = centered.transpose() * &centered / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..PROFILE_DIMS).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let ev = [eig.eigenvalues[order[0]].max(0.0), eig.eigenvalues[order[1]].max(0.0)];
    if !(ev[1] > 1e-12 * ev[0].max(1.0)) {
        return Err(MetricsError::RankDeficient);
    }
    let components: [[f64; PROFILE_DIMS]; 2] = std::array::from_fn(|k| {
        let col = eig.eigenvectors.column(order[k]);
        let mut v: [f64; PROFILE_DIMS] = std::array::from_fn(|d| col[d]);
        let lead = (0..PROFILE_DIMS)
            .reduce(|best, d| if v[d].abs() > v[best].abs() + 1e-12 { d } else { best })
            .unwrap();
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    });
    let coords = points
        .iter()
        .map(|p| {
            std::array::from_fn(|k| (0..PROFILE_DIMS).map(|d| (p[d] - mean[d]) * components[k][d]).sum())
        })
        .collect();
    Ok(Pca2d {
        mean,
        components,
        explained_variance: ev,
        explained_share: [ev[0] / total, ev[1] / total],
        coords,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    /// Semi-axis lengths.
    pub major: f64,
    pub minor: f64,
    /// Angle of the major axis from the x axis, radians in (−π/2, π/2].
    pub angle: f64,
}

impl Ellipse {
    /// Covariance ellipse of 2D points at [`ELLIPSE_LEVEL`]. `None` with
    /// fewer than two points.
    pub fn of(points: &[[f64; 2]]) -> Option<Ellipse> {
        let n = points.len();
        if n < 2 {
            return None;
        }
        let mx = points.iter().map(|p| p[0]).sum::<f64>() / n as f64;
        let my = points.iter().map(|p| p[1]).sum::<f64>() / n as f64;
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for p in points {
            sxx += (p[0] - mx).powi(2);
            syy += (p[1] - my).powi(2);
            sxy += (p[0] - mx) * (p[1] - my);
        }
        let k = (n - 1) as f64;
        let eig = SymmetricEigen::new(Matrix2::new(sxx / k, sxy / k, sxy / k, syy / k));
        let (big, small) = if eig.eigenvalues[0] >= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
        let q = chi2_quantile(ELLIPSE_LEVEL, 2.0);
        let v = eig.eigenvectors.column(big);
        let mut angle = v[1].atan2(v[0]);
        if angle <= -std::f64::consts::FRAC_PI_2 {
            angle += std::f64::consts::PI;
        } else if angle > std::f64::consts::FRAC_PI_2 {
            angle -= std::f64::consts::PI;
        }
        Some(Ellipse {
            major: (q * eig.eigenvalues[big].max(0.0)).sqrt(),
            minor: (q * eig.eigenvalues[small].max(0.0)).sqrt(),
            angle,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub essay_id: String,
    pub condition: ConditionLabel,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionProjection {
    pub condition: ConditionLabel,
    pub n: usize,
    pub centroid_x: f64,
    pub centroid_y: f64,
    pub ellipse: Option<Ellipse>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub components: [[f64; PROFILE_DIMS]; 2],
    pub explained_share: [f64; 2],
    pub points: Vec<ProjectedPoint>,
    pub conditions: Vec<ConditionProjection>,
}

pub fn project_2d(features: &StandardizedFeatures) -> Result<Projection, MetricsError> {
    let raw: Vec<[f64; PROFILE_DIMS]> = features.rows.iter().map(|r| *r.profile.values()).collect();
    let pca = pca_2d(&raw)?;
    let points: Vec<ProjectedPoint> = features
        .rows
        .iter()
        .zip(&pca.coords)
        .map(|(r, c)| ProjectedPoint {
            essay_id: r.essay_id.clone(),
            condition: r.condition,
            x: c[0],
            y: c[1],
        })
        .collect();
    let conditions = ConditionLabel::ALL
        .into_iter()
        .filter_map(|cond| {
            let xy: Vec<[f64; 2]> = points
                .iter()
                .filter(|p| p.condition == cond)
                .map(|p| [p.x, p.y])
                .collect();
            if xy.is_empty() {
                return None;
            }
            let n = xy.len() as f64;
            Some(ConditionProjection {
                condition: cond,
                n: xy.len(),
                centroid_x: xy.iter().map(|p| p[0]).sum::<f64>() / n,
                centroid_y: xy.iter().map(|p| p[1]).sum::<f64>() / n,
                ellipse: Ellipse::of(&xy),
            })
        })
        .collect();
    Ok(Projection {
        components: pca.components,
        explained_share: pca.explained_share,
        points,
        conditions,
    })
}
