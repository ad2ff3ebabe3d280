//! Hop-count statistics over synthesized paths.

use serde::{Deserialize, Serialize};

use crate::astar::PathJson;

use super::DatasetRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bucket {
    OneHop,
    TwoHop,
    /// Complete paths of three or more hops.
    ThreeHopComplete,
    /// Every partial (fallback) path, whatever its length.
    ThreeHopPartial,
}

impl Bucket {
    pub fn of(cost: usize, complete: bool) -> Option<Bucket> {
        match (complete, cost) {
            (false, _) => Some(Bucket::ThreeHopPartial),
            (true, 0) => None,
            (true, 1) => Some(Bucket::OneHop),
            (true, 2) => Some(Bucket::TwoHop),
            (true, _) => Some(Bucket::ThreeHopComplete),
        }
    }
}

/// Commutative counters; merge order never matters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PathStats {
    pub one_hop: u64,
    pub two_hop: u64,
    pub three_hop_complete: u64,
    pub three_hop_partial: u64,
    /// Records that ended up with no path at all.
    pub unmatched: u64,
    pub records: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketJson {
    pub count: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStatsJson {
    #[serde(rename = "1-hop")]
    pub one_hop: BucketJson,
    #[serde(rename = "2-hop")]
    pub two_hop: BucketJson,
    #[serde(rename = "3-hop complete")]
    pub three_hop_complete: BucketJson,
    #[serde(rename = "3-hop partial")]
    pub three_hop_partial: BucketJson,
    /// Percent of records rather than of paths.
    pub unmatched: BucketJson,
    pub records: u64,
    pub paths: u64,
}

impl PathStats {
    pub fn add_path(&mut self, path: &PathJson) {
        match Bucket::of(path.cost, path.complete) {
            Some(Bucket::OneHop) => self.one_hop += 1,
            Some(Bucket::TwoHop) => self.two_hop += 1,
            Some(Bucket::ThreeHopComplete) => self.three_hop_complete += 1,
            Some(Bucket::ThreeHopPartial) => self.three_hop_partial += 1,
            None => {}
        }
    }

    pub fn add_record(&mut self, record: &DatasetRecord) {
        self.records += 1;
        if record.paths.is_empty() {
            self.unmatched += 1;
        }
        for p in &record.paths {
            self.add_path(p);
        }
    }

    pub fn merge(&mut self, other: &PathStats) {
        self.one_hop += other.one_hop;
        self.two_hop += other.two_hop;
        self.three_hop_complete += other.three_hop_complete;
        self.three_hop_partial += other.three_hop_partial;
        self.unmatched += other.unmatched;
        self.records += other.records;
    }

    pub fn path_total(&self) -> u64 {
        self.one_hop + self.two_hop + self.three_hop_complete + self.three_hop_partial
    }

    /// Percentages of the four path buckets; they sum to 100 whenever any
    /// path was counted.
    pub fn percentages(&self) -> [f64; 4] {
        let total = self.path_total();
        let pct = |c: u64| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 };
        [
            pct(self.one_hop),
            pct(self.two_hop),
            pct(self.three_hop_complete),
            pct(self.three_hop_partial),
        ]
    }

    pub fn to_json(&self) -> PathStatsJson {
        let [p1, p2, p3, p4] = self.percentages();
        let unmatched_pct = if self.records == 0 {
            0.0
        } else {
            100.0 * self.unmatched as f64 / self.records as f64
        };
        PathStatsJson {
            one_hop: BucketJson { count: self.one_hop, percent: p1 },
            two_hop: BucketJson { count: self.two_hop, percent: p2 },
            three_hop_complete: BucketJson {
                count: self.three_hop_complete,
                percent: p3,
            },
            three_hop_partial: BucketJson {
                count: self.three_hop_partial,
                percent: p4,
            },
            unmatched: BucketJson {
                count: self.unmatched,
                percent: unmatched_pct,
            },
            records: self.records,
            paths: self.path_total(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(cost: usize, complete: bool) -> PathJson {
        PathJson {
            start: "s".into(),
            steps: (0..cost).map(|i| ["r".into(), "→".into(), format!("e{i}")]).collect(),
            cost,
            complete,
        }
    }

    #[test]
    fn buckets_and_percentages() {
        let mut s = PathStats::default();
        for p in [path(1, true), path(2, true), path(2, true), path(3, true), path(3, false)] {
            s.add_path(&p);
        }
        assert_eq!((s.one_hop, s.two_hop, s.three_hop_complete, s.three_hop_partial), (1, 2, 1, 1));
        let pct = s.percentages();
        assert!((pct.iter().sum::<f64>() - 100.0).abs() < 1e-9);
        assert_eq!(pct[1], 40.0);
    }

    #[test]
    fn merge_is_commutative() {
        let mut a = PathStats { one_hop: 1, records: 2, unmatched: 1, ..Default::default() };
        let b = PathStats { two_hop: 3, records: 1, ..Default::default() };
        let mut c = b;
        c.merge(&a);
        a.merge(&b);
        assert_eq!(a, c);
    }

    #[test]
    fn json_keys() {
        let text = serde_json::to_string(&PathStats::default().to_json()).unwrap();
        for k in ["\"1-hop\"", "\"2-hop\"", "\"3-hop complete\"", "\"3-hop partial\"", "\"unmatched\""] {
            assert!(text.contains(k), "{k}");
        }
    }
}
