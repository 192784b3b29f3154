//! CSV dataset ingestion and seeded per-class train/test splits.
//!
//! Files hold one sample per row: feature columns followed by a trailing
//! non-negative integer label. Labels are remapped to dense class indices in
//! order of first appearance; the original values are kept as class names.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, Trim};
use log::warn;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::Dataset;

pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::input(format!("cannot open {}: {e}", path.display())))?;
    read_csv(BufReader::new(file), has_header)
}

pub fn read_csv<R: Read>(reader: R, has_header: bool) -> Result<Dataset> {
    let mut rdr = ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(reader);

    let mut width = None;
    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::input(format!("malformed CSV: {e}")))?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let cols = record.len();
        match width {
            None if cols < 2 => {
                return Err(Error::input(format!(
                    "row {row}: need at least one feature and a label, found {cols} column(s)"
                )))
            }
            None => width = Some(cols),
            Some(w) if w != cols => {
                return Err(Error::input(format!(
                    "row {row}: expected {w} columns, found {cols}"
                )))
            }
            Some(_) => {}
        }
        for (col, cell) in record.iter().take(cols - 1).enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::input(format!("row {row}, column {}: cannot parse {cell:?} as a number", col + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::input(format!(
                    "row {row}, column {}: non-finite value {cell:?}",
                    col + 1
                )));
            }
            values.push(v);
        }
        let cell = &record[cols - 1];
        let label: u64 = cell.parse().map_err(|_| {
            Error::input(format!(
                "row {row}, column {cols}: label {cell:?} is not a non-negative integer"
            ))
        })?;
        raw_labels.push(label);
    }

    let Some(width) = width else {
        return Err(Error::input("CSV contains no samples"));
    };
    let d = width - 1;
    let n = raw_labels.len();
    // Row-major per sample is column-major for the d × n sample matrix.
    let samples = DMatrix::from_vec(d, n, values);

    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut class_names = Vec::new();
    let labels = raw_labels
        .iter()
        .map(|&raw| {
            *index.entry(raw).or_insert_with(|| {
                class_names.push(raw);
                class_names.len() - 1
            })
        })
        .collect();
    Dataset::with_class_names(samples, labels, class_names)
}

/// Writes the dataset as row-per-sample CSV with the original class labels.
/// Values use shortest round-trip formatting, so reading the output back
/// reproduces the dataset exactly.
pub fn write_csv<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    let names = dataset.class_names();
    for (col, &label) in dataset.samples().column_iter().zip(dataset.labels()) {
        for v in col.iter() {
            write!(out, "{v:?},")?;
        }
        writeln!(out, "{}", names[label])?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_csv(dataset, BufWriter::new(File::create(path)?))
}

/// How many samples of each class go into the training partition, and the
/// key of the pseudorandom selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub per_class_train: usize,
    pub seed: u64,
    pub repeat_index: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn class_seed(seed: u64, repeat: u64, class: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ repeat) ^ class)
}

/// Draws `per_class_train` samples of every class for training; the rest
/// form the test partition, which is `None` when nothing remains.
///
/// Each class is shuffled by its own generator keyed on
/// `(seed, repeat_index, class)`. Both partitions keep the original sample
/// order.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Option<Dataset>)> {
    if spec.per_class_train == 0 {
        return Err(Error::input("per_class_train must be at least 1"));
    }
    let mut by_class = vec![Vec::new(); dataset.num_classes()];
    for (i, &l) in dataset.labels().iter().enumerate() {
        by_class[l].push(i);
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut members) in by_class.into_iter().enumerate() {
        let name = dataset.class_names()[class];
        if members.len() < spec.per_class_train {
            return Err(Error::input(format!(
                "class {name} has {} samples, fewer than per_class_train = {}",
                members.len(),
                spec.per_class_train
            )));
        }
        if members.len() == spec.per_class_train {
            warn!("class {name} has no test samples");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(class_seed(spec.seed, spec.repeat_index, class as u64));
        members.shuffle(&mut rng);
        let (chosen, rest) = members.split_at(spec.per_class_train);
        train.extend_from_slice(chosen);
        test.extend_from_slice(rest);
    }
    train.sort_unstable();
    test.sort_unstable();

    let train = dataset
        .select(&train)
        .expect("every class contributes at least one training sample");
    Ok((train, dataset.select(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_simple_file() {
        let ds = read_csv("1,2,0\n3,4,1\n".as_bytes(), false).unwrap();
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.num_classes(), 2);
        assert_eq!(ds.samples(), &DMatrix::from_column_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert_eq!(ds.labels(), &[0, 1]);
    }

    #[test]
    fn remaps_labels_in_first_appearance_order() {
        let ds = read_csv("0.5,9\n0.1,5\n0.2,9\n".as_bytes(), false).unwrap();
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.class_names(), &[9, 5]);
    }

    #[test]
    fn header_is_skipped() {
        let ds = read_csv("a,b,label\n1,2,3\n4,5,6\n".as_bytes(), true).unwrap();
        assert_eq!(ds.len(), 2);
    }

    #[test]
    fn errors_name_the_location() {
        let err = read_csv("1,2,0\n3,x,1\n".as_bytes(), false).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("column 2"), "{err}");

        let err = read_csv("1,2,0\n3,1\n".as_bytes(), false).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("expected 3"), "{err}");

        let err = read_csv("1,2,0\n3,4,-1\n".as_bytes(), false).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("column 3"), "{err}");

        assert!(read_csv("".as_bytes(), false).is_err());
        assert!(read_csv("1,2,0\n3,4,0\n".as_bytes(), false).is_err());
    }

    fn ten_per_class() -> Dataset {
        let n = 30;
        let x = DMatrix::from_fn(2, n, |i, j| (i * n + j) as f64);
        Dataset::new(x, (0..n).map(|j| j % 3).collect(), 3).unwrap()
    }

    #[test]
    fn split_counts() {
        let ds = ten_per_class();
        let spec = SplitSpec { per_class_train: 4, seed: 7, repeat_index: 0 };
        let (train, test) = split(&ds, &spec).unwrap();
        let test = test.unwrap();
        assert_eq!(train.class_counts(), vec![4, 4, 4]);
        assert_eq!(test.class_counts(), vec![6, 6, 6]);
    }

    #[test]
    fn split_is_deterministic_and_keyed() {
        let ds = ten_per_class();
        let spec = SplitSpec { per_class_train: 4, seed: 7, repeat_index: 3 };
        let a = split(&ds, &spec).unwrap();
        let b = split(&ds, &spec).unwrap();
        assert_eq!(a, b);
        let other = split(&ds, &SplitSpec { repeat_index: 4, ..spec }).unwrap();
        assert_ne!(a.0, other.0);
    }

    #[test]
    fn full_class_leaves_empty_test() {
        let ds = ten_per_class();
        let spec = SplitSpec { per_class_train: 10, seed: 1, repeat_index: 0 };
        let (train, test) = split(&ds, &spec).unwrap();
        assert_eq!(train.len(), 30);
        assert!(test.is_none());
    }

    #[test]
    fn oversized_request_names_class() {
        let x = DMatrix::from_element(1, 5, 1.0);
        let ds = Dataset::with_class_names(x, vec![0, 0, 0, 1, 1], vec![4, 8]).unwrap();
        let spec = SplitSpec { per_class_train: 3, seed: 0, repeat_index: 0 };
        let err = split(&ds, &spec).unwrap_err().to_string();
        assert!(err.contains("class 8"), "{err}");
    }

    proptest! {
        #[test]
        fn split_is_a_partition(
            sizes in proptest::collection::vec(1usize..12, 2..5),
            take in 1usize..12,
            seed in any::<u64>(),
            repeat in 0u64..10,
        ) {
            let take = take.min(*sizes.iter().min().unwrap());
            let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &k)| std::iter::repeat_n(c, k)).collect();
            let n = labels.len();
            // Encode the sample index in the single feature so partitions can be traced back.
            let x = DMatrix::from_fn(1, n, |_, j| j as f64);
            let ds = Dataset::new(x, labels, sizes.len()).unwrap();
            let (train, test) = split(&ds, &SplitSpec { per_class_train: take, seed, repeat_index: repeat }).unwrap();
            let mut seen: Vec<usize> = train.samples().iter().map(|&v| v as usize).collect();
            prop_assert!(train.class_counts().iter().all(|&k| k == take));
            if let Some(test) = &test {
                seen.extend(test.samples().iter().map(|&v| v as usize));
            }
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        }

        #[test]
        fn csv_round_trip(
            rows in proptest::collection::vec(
                (proptest::collection::vec(-1e6f64..1e6, 3), 0u64..4), 2..20),
        ) {
            let mut text = String::new();
            for (feats, label) in &rows {
                for v in feats {
                    text.push_str(&format!("{v:?},"));
                }
                text.push_str(&format!("{label}\n"));
            }
            prop_assume!(rows.iter().map(|r| r.1).collect::<std::collections::HashSet<_>>().len() >= 2);
            let first = read_csv(text.as_bytes(), false).unwrap();
            let mut buf = Vec::new();
            write_csv(&first, &mut buf).unwrap();
            let second = read_csv(buf.as_slice(), false).unwrap();
            prop_assert_eq!(first, second);
        }
    }
}
