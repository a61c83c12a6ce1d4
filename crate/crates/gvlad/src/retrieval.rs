//! In-memory brute-force retrieval: exact L2 ranking over an immutable
//! index, and AP/mAP scoring against annotated ground truth.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Immutable dataset of equal-length vectors, searched by exhaustive scan.
/// Insertion order is preserved and breaks exact distance ties.
#[derive(Debug, Clone)]
pub struct DatasetIndex {
    ids: Vec<String>,
    data: Vec<f32>,
    dim: usize,
    by_id: HashMap<String, usize>,
}

impl DatasetIndex {
    pub fn build(entries: Vec<(String, Vec<f32>)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput("no vectors to index".into()));
        }
        let dim = entries[0].1.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("vectors must be non-empty".into()));
        }
        let mut ids = Vec::with_capacity(entries.len());
        let mut data = Vec::with_capacity(entries.len() * dim);
        let mut by_id = HashMap::with_capacity(entries.len());
        for (i, (id, vector)) in entries.into_iter().enumerate() {
            if vector.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "vector for {id} has dimension {}, expected {dim}",
                    vector.len()
                )));
            }
            if by_id.insert(id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate image id {id}")));
            }
            ids.push(id);
            data.extend_from_slice(&vector);
        }
        Ok(Self {
            ids,
            data,
            dim,
            by_id,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vector(&self, row: usize) -> &[f32] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    /// Bytes of 32-bit float storage needed for `count` vectors of `dim`
    /// dimensions.
    pub fn storage_bytes(count: usize, dim: usize) -> usize {
        count * dim * std::mem::size_of::<f32>()
    }

    /// Exact k-nearest scan by ascending L2 distance. Ties are broken by
    /// insertion order and `exclude` (typically the query's own id) is
    /// omitted from the ranking.
    pub fn query_knn(&self, query: &[f32], k: usize, exclude: Option<&str>) -> Result<RankingResult> {
        if query.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "query has dimension {}, index expects {}",
                query.len(),
                self.dim
            )));
        }
        if k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        let excluded = exclude.and_then(|id| self.by_id.get(id)).copied();

        let distances: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|row| {
                let v = self.vector(row);
                let mut acc = 0f64;
                for t in 0..self.dim {
                    let d = query[t] as f64 - v[t] as f64;
                    acc += d * d;
                }
                acc
            })
            .collect();

        // Bounded max-heap of the k best (distance, row) pairs.
        let mut heap: std::collections::BinaryHeap<Candidate> =
            std::collections::BinaryHeap::with_capacity(k + 1);
        for (row, &d2) in distances.iter().enumerate() {
            if Some(row) == excluded {
                continue;
            }
            heap.push(Candidate { d2, row });
            if heap.len() > k {
                heap.pop();
            }
        }
        let hits = heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| RankedHit {
                id: self.ids[c.row].clone(),
                distance: c.d2.sqrt(),
            })
            .collect();
        Ok(RankingResult { hits })
    }
}

#[derive(PartialEq)]
struct Candidate {
    d2: f64,
    row: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.row.cmp(&other.row))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One retrieved image and its L2 distance to the query.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedHit {
    pub id: String,
    pub distance: f64,
}

/// Ranked retrieval result, ascending distance, no duplicate ids.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult {
    hits: Vec<RankedHit>,
}

impl RankingResult {
    pub fn from_hits(hits: Vec<RankedHit>) -> Result<Self> {
        let mut seen = HashSet::new();
        for w in hits.windows(2) {
            if w[1].distance < w[0].distance {
                return Err(Error::Validation("distances must be non-decreasing".into()));
            }
        }
        for h in &hits {
            if !seen.insert(h.id.as_str()) {
                return Err(Error::Validation(format!("duplicate id {} in ranking", h.id)));
            }
        }
        Ok(Self { hits })
    }

    pub fn hits(&self) -> &[RankedHit] {
        &self.hits
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }
}

/// Annotation for one query: images that count as relevant, and images
/// ignored entirely (removed from a ranking before scoring).
#[derive(Debug, Clone)]
pub struct QueryTruth {
    pub query_id: String,
    pub relevant: HashSet<String>,
    pub ignore: HashSet<String>,
}

impl QueryTruth {
    pub fn validate(&self) -> Result<()> {
        if self.relevant.is_empty() {
            return Err(Error::UndefinedQuery(self.query_id.clone()));
        }
        if let Some(overlap) = self.relevant.intersection(&self.ignore).next() {
            return Err(Error::Validation(format!(
                "query {}: image {overlap} is both relevant and ignored",
                self.query_id
            )));
        }
        Ok(())
    }
}

/// Ground truth for a query set; query ids are unique and every entry has a
/// non-empty relevant set disjoint from its ignore set.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    queries: Vec<QueryTruth>,
    by_id: HashMap<String, usize>,
}

impl GroundTruth {
    pub fn new(queries: Vec<QueryTruth>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(queries.len());
        for (i, q) in queries.iter().enumerate() {
            q.validate()?;
            if by_id.insert(q.query_id.clone(), i).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate query id {}",
                    q.query_id
                )));
            }
        }
        Ok(Self { queries, by_id })
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn get(&self, query_id: &str) -> Option<&QueryTruth> {
        self.by_id.get(query_id).map(|&i| &self.queries[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &QueryTruth> {
        self.queries.iter()
    }
}

/// Average precision of a ranking: ignored images are dropped from the
/// ranking, then AP is the mean over all relevant images of the precision at
/// their rank. Relevant images never retrieved contribute zero.
pub fn average_precision(ranking: &RankingResult, truth: &QueryTruth) -> Result<f64> {
    truth.validate()?;
    let mut hits = 0usize;
    let mut rank = 0usize;
    let mut sum = 0f64;
    for hit in &ranking.hits {
        if truth.ignore.contains(&hit.id) {
            continue;
        }
        rank += 1;
        if truth.relevant.contains(&hit.id) {
            hits += 1;
            sum += hits as f64 / rank as f64;
        }
    }
    Ok(sum / truth.relevant.len() as f64)
}

/// Arithmetic mean of per-query average precisions.
pub fn mean_average_precision(aps: &[f64]) -> Result<f64> {
    if aps.is_empty() {
        return Err(Error::EmptyInput("no queries scored".into()));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn truth(query: &str, relevant: &[&str], ignore: &[&str]) -> QueryTruth {
        QueryTruth {
            query_id: query.to_string(),
            relevant: relevant.iter().map(|s| s.to_string()).collect(),
            ignore: ignore.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn ranking(ids: &[&str]) -> RankingResult {
        RankingResult::from_hits(
            ids.iter()
                .enumerate()
                .map(|(i, id)| RankedHit {
                    id: id.to_string(),
                    distance: i as f64,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn build_and_validate_index() {
        let index = DatasetIndex::build(vec![
            ("a".into(), vec![0.0; 128]),
            ("b".into(), vec![1.0; 128]),
            ("c".into(), vec![2.0; 128]),
        ])
        .unwrap();
        assert_eq!(index.len(), 3);
        assert_eq!(index.dim(), 128);

        assert!(matches!(
            DatasetIndex::build(vec![]),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            DatasetIndex::build(vec![("a".into(), vec![0.0]), ("a".into(), vec![1.0])]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            DatasetIndex::build(vec![("a".into(), vec![0.0]), ("b".into(), vec![1.0, 2.0])]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn storage_math_for_million_scale_index() {
        // ~1M compact 128-d signatures sit in about half a gigabyte.
        let bytes = DatasetIndex::storage_bytes(1_001_491, 128);
        assert_eq!(bytes, 512_763_392);
        assert!((bytes as f64 / 1e9 - 0.5).abs() < 0.02);
    }

    #[test]
    fn knn_worked_example() {
        let index = DatasetIndex::build(vec![
            ("a".into(), vec![0.0]),
            ("b".into(), vec![10.0]),
            ("c".into(), vec![4.0]),
        ])
        .unwrap();
        let result = index.query_knn(&[3.0], 10, None).unwrap();
        let ids: Vec<&str> = result.hits().iter().map(|h| h.id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
        let distances: Vec<f64> = result.hits().iter().map(|h| h.distance).collect();
        assert_eq!(distances, [1.0, 3.0, 7.0]);
    }

    #[test]
    fn knn_exact_match_self_exclusion_and_truncation() {
        let index = DatasetIndex::build(vec![
            ("a".into(), vec![1.0, 1.0]),
            ("b".into(), vec![5.0, 5.0]),
        ])
        .unwrap();
        let r = index.query_knn(&[5.0, 5.0], 1, None).unwrap();
        assert_eq!(r.hits()[0].id, "b");
        assert_eq!(r.hits()[0].distance, 0.0);

        let r = index.query_knn(&[5.0, 5.0], 5, Some("b")).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.hits()[0].id, "a");

        assert!(index.query_knn(&[1.0], 1, None).is_err());
    }

    #[test]
    fn knn_ties_break_by_insertion_order() {
        let index = DatasetIndex::build(vec![
            ("first".into(), vec![1.0]),
            ("second".into(), vec![-1.0]),
            ("third".into(), vec![1.0]),
        ])
        .unwrap();
        let r = index.query_knn(&[0.0], 3, None).unwrap();
        let ids: Vec<&str> = r.hits().iter().map(|h| h.id.as_str()).collect();
        assert_eq!(ids, ["first", "second", "third"]);
    }

    #[test]
    fn knn_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..25 {
            let n = rng.random_range(1..120usize);
            let dim = rng.random_range(1..8usize);
            let entries: Vec<(String, Vec<f32>)> = (0..n)
                .map(|i| {
                    let v: Vec<f32> = (0..dim)
                        .map(|_| (rng.random_range(0..5) as f32) / 2.0)
                        .collect();
                    (format!("v{i}"), v)
                })
                .collect();
            let q: Vec<f32> = (0..dim).map(|_| (rng.random_range(0..5) as f32) / 2.0).collect();
            let index = DatasetIndex::build(entries.clone()).unwrap();
            let k = rng.random_range(1..n + 3);
            let got = index.query_knn(&q, k, None).unwrap();

            // Independent full-sort oracle.
            let mut oracle: Vec<(f64, usize)> = entries
                .iter()
                .enumerate()
                .map(|(i, (_, v))| {
                    let d: f64 = v
                        .iter()
                        .zip(&q)
                        .map(|(a, b)| (*a as f64 - *b as f64) * (*a as f64 - *b as f64))
                        .sum();
                    (d, i)
                })
                .collect();
            oracle.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            oracle.truncate(k);
            let expect: Vec<&str> = oracle.iter().map(|&(_, i)| entries[i].0.as_str()).collect();
            let ids: Vec<&str> = got.hits().iter().map(|h| h.id.as_str()).collect();
            assert_eq!(ids, expect);
        }
    }

    #[test]
    fn ap_worked_examples() {
        // All relevant images ranked first.
        let t = truth("q", &["a", "b"], &[]);
        assert_eq!(average_precision(&ranking(&["a", "b", "x", "y"]), &t).unwrap(), 1.0);

        // (rel, non, rel) -> (1/1 + 2/3) / 2.
        let ap = average_precision(&ranking(&["a", "x", "b"]), &t).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);

        // Ignored images vanish before ranks are counted.
        let t = truth("q", &["a"], &["j1", "j2"]);
        assert_eq!(average_precision(&ranking(&["j1", "j2", "a"]), &t).unwrap(), 1.0);

        // Relevant images never retrieved count as precision zero.
        let t = truth("q", &["a", "missing"], &[]);
        let ap = average_precision(&ranking(&["a", "x"]), &t).unwrap();
        assert_eq!(ap, 0.5);

        let empty = truth("q", &[], &[]);
        assert!(matches!(
            average_precision(&ranking(&["a"]), &empty),
            Err(Error::UndefinedQuery(_))
        ));
    }

    #[test]
    fn ap_swapping_relevant_upward_never_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(2..12usize);
            let ids: Vec<String> = (0..n).map(|i| format!("i{i}")).collect();
            let relevant: Vec<&str> = ids
                .iter()
                .filter(|_| rng.random_bool(0.4))
                .map(|s| s.as_str())
                .collect();
            if relevant.is_empty() {
                continue;
            }
            let t = truth("q", &relevant, &[]);
            let order: Vec<&str> = ids.iter().map(|s| s.as_str()).collect();
            let base = average_precision(&ranking(&order), &t).unwrap();
            // Swap one relevant item with a non-relevant item above it.
            for pos in 1..n {
                if t.relevant.contains(order[pos]) && !t.relevant.contains(order[pos - 1]) {
                    let mut swapped = order.clone();
                    swapped.swap(pos, pos - 1);
                    let better = average_precision(&ranking(&swapped), &t).unwrap();
                    assert!(better >= base - 1e-15);
                }
            }
        }
    }

    #[test]
    fn ap_ignores_permutation_of_trailing_non_relevant() {
        let t = truth("q", &["r1", "r2"], &[]);
        let a = average_precision(&ranking(&["x", "r1", "y", "r2", "p", "q"]), &t).unwrap();
        let b = average_precision(&ranking(&["x", "r1", "y", "r2", "q", "p"]), &t).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn map_examples() {
        assert_eq!(mean_average_precision(&[1.0, 0.5]).unwrap(), 0.75);
        assert_eq!(mean_average_precision(&[0.42]).unwrap(), 0.42);
        assert!(matches!(
            mean_average_precision(&[]),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn ground_truth_invariants() {
        let gt = GroundTruth::new(vec![
            truth("q1", &["a"], &["b"]),
            truth("q2", &["c", "d"], &[]),
        ])
        .unwrap();
        assert_eq!(gt.len(), 2);
        assert!(gt.get("q1").is_some());
        assert!(gt.get("nope").is_none());

        assert!(matches!(
            GroundTruth::new(vec![truth("q", &["a"], &["a"])]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            GroundTruth::new(vec![truth("q", &["a"], &[]), truth("q", &["b"], &[])]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            GroundTruth::new(vec![truth("q", &[], &[])]),
            Err(Error::UndefinedQuery(_))
        ));
    }
}
