use mess::matio::{decode_matrix, encode_matrix, read_matrix, write_matrix, MatrixFormat};
use mess::report::{write_report, write_trace, RunReport};
use mess::{mess_sample, EpsilonRule, MessError, SnapshotMatrix, StopConfig};
use proptest::prelude::*;

fn finite_matrix() -> impl Strategy<Value = SnapshotMatrix> {
    (1usize..6, 1usize..6).prop_flat_map(|(m, n)| {
        prop::collection::vec(
            prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
            m * n,
        )
        .prop_map(move |d| SnapshotMatrix::from_col_major(m, n, d).unwrap())
    })
}

proptest! {
    #[test]
    fn messbin_and_csv_round_trip_bitwise(x in finite_matrix()) {
        for format in [MatrixFormat::MessBin, MatrixFormat::Csv] {
            let back = decode_matrix(&encode_matrix(&x, format).unwrap(), format).unwrap();
            prop_assert_eq!(back.nrows(), x.nrows());
            for (a, b) in x.as_col_major().iter().zip(back.as_col_major()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn pgm_round_trip_on_the_pixel_grid(pixels in prop::collection::vec(0u8..=255, 12)) {
        let data: Vec<f64> = pixels.iter().map(|&p| p as f64 / 255.0).collect();
        let x = SnapshotMatrix::from_col_major(3, 4, data).unwrap();
        let back = decode_matrix(&encode_matrix(&x, MatrixFormat::Pgm).unwrap(), MatrixFormat::Pgm)
            .unwrap();
        prop_assert_eq!(back.as_col_major(), x.as_col_major());
    }
}

#[test]
fn files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let x = SnapshotMatrix::from_rows(&[[0.25, 1.0, 0.0], [0.5, 0.75, 1.0]]).unwrap();
    for format in [MatrixFormat::Csv, MatrixFormat::MessBin, MatrixFormat::Pgm] {
        let path = dir.path().join(format!("x.{}", format.extension()));
        write_matrix(&x, &path, format).unwrap();
        let back = read_matrix(&path, format).unwrap();
        if format == MatrixFormat::Pgm {
            for (a, b) in x.as_col_major().iter().zip(back.as_col_major()) {
                assert!((a - b).abs() <= 0.5 / 255.0);
            }
        } else {
            assert_eq!(back, x);
        }
    }
    match read_matrix(dir.path().join("missing.csv"), MatrixFormat::Csv) {
        Err(MessError::Io { path, .. }) => assert!(path.ends_with("missing.csv")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn pgm_output_clamps_out_of_range_values() {
    let x = SnapshotMatrix::from_rows(&[[-0.5, 1.5]]).unwrap();
    let bytes = encode_matrix(&x, MatrixFormat::Pgm).unwrap();
    assert_eq!(&bytes[bytes.len() - 2..], &[0, 255]);
}

#[test]
fn minimal_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let x = SnapshotMatrix::from_scalars(&[1.0]).unwrap();
    let r = mess_sample(&x, EpsilonRule::Absolute(0.1), StopConfig::default()).unwrap();
    let path = dir.path().join("report.json");
    write_report(&RunReport::new("sample").with_sample(&r), &path).unwrap();
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["selected_indices"], serde_json::json!([0]));
    assert_eq!(doc["ell"], 1);

    let x = SnapshotMatrix::from_scalars(&[0.0, 0.5, 2.0, 3.5]).unwrap();
    let r = mess_sample(&x, EpsilonRule::Absolute(1.0), StopConfig::default()).unwrap();
    let trace = dir.path().join("trace.csv");
    write_trace(&r.trace, &trace).unwrap();
    let mut rdr = csv::Reader::from_path(&trace).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.iter().filter(|r| !r[3].is_empty()).count(), 3);
}

#[test]
fn damaged_inputs_fail_cleanly() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
    let x = SnapshotMatrix::from_rows(&[[0.25, 1.0, 0.0, 0.5], [0.5, 0.75, 1.0, 0.125]]).unwrap();
    let formats = [MatrixFormat::Csv, MatrixFormat::MessBin, MatrixFormat::Pgm];
    let originals: Vec<Vec<u8>> = formats
        .iter()
        .map(|&f| encode_matrix(&x, f).unwrap())
        .collect();
    let mut rejected = 0;
    for i in 0..10_000 {
        let k = i % 3;
        let mut bytes = originals[k].clone();
        if rng.gen_bool(0.5) {
            bytes.truncate(rng.gen_range(0..bytes.len()));
        } else {
            for _ in 0..rng.gen_range(1..4) {
                let at = rng.gen_range(0..bytes.len());
                bytes[at] = rng.gen();
            }
        }
        match decode_matrix(&bytes, formats[k]) {
            Ok(m) => assert!(m.as_col_major().iter().all(|v| v.is_finite())),
            Err(MessError::Format { offset, message }) => {
                rejected += 1;
                assert!(
                    offset <= bytes.len() as u64 + 1,
                    "{offset} past end: {message}"
                );
            }
            Err(MessError::Validation(_)) => rejected += 1,
            Err(other) => panic!("unexpected error kind {other:?}"),
        }
    }
    assert!(rejected > 3000);
}

#[test]
fn messbin_header_faults_are_located() {
    let x = SnapshotMatrix::from_scalars(&[1.0, 2.0]).unwrap();
    let mut bytes = encode_matrix(&x, MatrixFormat::MessBin).unwrap();
    bytes.push(0);
    assert!(matches!(
        decode_matrix(&bytes, MatrixFormat::MessBin),
        Err(MessError::Format { .. })
    ));
    bytes[0] = b'X';
    match decode_matrix(&bytes, MatrixFormat::MessBin) {
        Err(MessError::Format { offset, .. }) => assert_eq!(offset, 0),
        other => panic!("unexpected {other:?}"),
    }
}
