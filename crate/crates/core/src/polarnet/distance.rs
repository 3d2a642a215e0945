use serde::{Deserialize, Serialize};

use super::graph::AttrTable;
use crate::extract::{GeoPoint, InteractionRecord};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Great-circle distance in kilometres (haversine).
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Distance from the interaction location to both birthplaces, summed.
/// `None` if any point is missing.
pub fn interaction_distance(location: Option<GeoPoint>, birthplace1: Option<GeoPoint>, birthplace2: Option<GeoPoint>) -> Option<f64> {
    let loc = location?;
    Some(haversine_km(loc, birthplace1?) + haversine_km(loc, birthplace2?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub id: String,
    pub year: Option<i32>,
    pub person1: String,
    pub person2: String,
    pub distance_km: Option<f64>,
}

pub fn record_distances(records: &[InteractionRecord], attrs: &AttrTable) -> Vec<DistanceRow> {
    records
        .iter()
        .map(|r| {
            let bp = |p: &str| attrs.get(p).and_then(|a| a.birthplace);
            DistanceRow {
                id: r.id.clone(),
                year: r.year,
                person1: r.person1.surface.clone(),
                person2: r.person2.surface.clone(),
                distance_km: interaction_distance(r.location.geo, bp(&r.person1.surface), bp(&r.person2.surface)),
            }
        })
        .collect()
}
