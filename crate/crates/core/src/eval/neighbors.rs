use crate::embedding::{cosine, EmbeddingTable};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// The `k` rows most cosine-similar to `query`, excluding the query itself.
/// Ties go to the lower row index; `k` is clamped to the table size.
pub fn nearest_neighbors<T: Real>(table: &EmbeddingTable<T>, query: &str, k: usize) -> Result<Vec<(String, T)>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let Some(q) = table.index(query) else {
        return Err(Error::UnknownQuery {
            query: query.to_owned(),
            suggestions: closest_keys(table.keys(), query, 5),
        });
    };
    let qv = table.row(q);
    let mut scored: Vec<(usize, T)> = (0..table.len())
        .filter(|&i| i != q)
        .map(|i| (i, cosine(qv, table.row(i))))
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored.into_iter().map(|(i, s)| (table.keys()[i].clone(), s)).collect())
}

fn closest_keys(keys: &[String], query: &str, n: usize) -> Vec<String> {
    let mut by_distance: Vec<(usize, usize)> = keys
        .iter()
        .enumerate()
        .map(|(i, k)| (strsim::levenshtein(k, query), i))
        .collect();
    by_distance.sort_unstable();
    by_distance.into_iter().take(n).map(|(_, i)| keys[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table() -> EmbeddingTable<f64> {
        EmbeddingTable::new(
            vec!["cat".into(), "dog".into(), "kitten".into(), "car".into()],
            array![[1.0, 0.1], [0.5, 0.5], [2.0, 0.2], [-1.0, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn duplicate_vector_ranks_first() {
        let nn = nearest_neighbors(&table(), "cat", 2).unwrap();
        assert_eq!(nn[0].0, "kitten");
        assert!((nn[0].1 - 1.0).abs() < 1e-12);
        assert_eq!(nn[1].0, "dog");
    }

    #[test]
    fn k_is_clamped() {
        let nn = nearest_neighbors(&table(), "dog", 10).unwrap();
        assert_eq!(nn.len(), 3);
        assert!(nn.iter().all(|(k, _)| k != "dog"));
    }

    #[test]
    fn unknown_query_suggests_close_keys() {
        match nearest_neighbors(&table(), "cot", 3) {
            Err(Error::UnknownQuery { suggestions, .. }) => {
                assert_eq!(suggestions, vec!["cat", "dog", "car", "kitten"]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(nearest_neighbors(&table(), "cat", 0).is_err());
    }

    #[test]
    fn matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vecs = Array2::from_shape_simple_fn((100, 6), || rng.random::<f64>() - 0.5);
        let keys: Vec<String> = (0..100).map(|i| format!("t{i}")).collect();
        let t = EmbeddingTable::new(keys, vecs.clone()).unwrap();
        let got = nearest_neighbors(&t, "t17", 8).unwrap();
        // Oracle: full scan keeping a running sorted list.
        let q = vecs.row(17);
        let mut all: Vec<(f64, usize)> = (0..100)
            .filter(|&i| i != 17)
            .map(|i| {
                let r = vecs.row(i);
                (q.dot(&r) / (q.dot(&q).sqrt() * r.dot(&r).sqrt()), i)
            })
            .collect();
        all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        for ((key, s), (os, oi)) in got.iter().zip(all.iter()) {
            assert_eq!(key, &format!("t{oi}"));
            assert!((s - os).abs() < 1e-12);
        }
    }
}
