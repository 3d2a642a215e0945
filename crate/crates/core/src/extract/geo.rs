use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::normalize_surface;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Place {
    pub point: GeoPoint,
    pub state: Option<String>,
}

/// Location surface to coordinates lookup, keyed by normalised surface.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gazetteer {
    places: HashMap<String, Place>,
}

#[derive(Deserialize)]
struct Row {
    location: String,
    lat: f64,
    lon: f64,
    #[serde(default)]
    state: Option<String>,
}

impl Gazetteer {
    /// Reads a CSV with header `location,lat,lon[,state]`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file)
    }

    pub fn from_reader(r: impl std::io::Read) -> Result<Self> {
        let mut places = HashMap::new();
        for (i, row) in csv::Reader::from_reader(r).deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| Error::InvalidRecord {
                line: i + 2,
                message: e.to_string(),
            })?;
            places.insert(
                normalize_surface(&row.location),
                Place {
                    point: GeoPoint { lat: row.lat, lon: row.lon },
                    state: row.state.filter(|s| !s.is_empty()),
                },
            );
        }
        Ok(Self { places })
    }

    pub fn insert(&mut self, surface: &str, place: Place) {
        self.places.insert(normalize_surface(surface), place);
    }

    pub fn lookup(&self, surface: &str) -> Option<&Place> {
        self.places.get(&normalize_surface(surface))
    }

    pub fn len(&self) -> usize {
        self.places.len()
    }

    pub fn is_empty(&self) -> bool {
        self.places.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_is_case_and_space_insensitive() {
        let g = Gazetteer::from_reader("location,lat,lon,state\nSanta Fe,35.687,-105.9378,NM\nParis,48.85,2.35,\n".as_bytes()).unwrap();
        let p = g.lookup("santa  FE").unwrap();
        assert_eq!(p.state.as_deref(), Some("NM"));
        assert_eq!(g.lookup("Paris").unwrap().state, None);
        assert!(g.lookup("Lima").is_none());
    }
}
