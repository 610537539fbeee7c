use conslaw::io::{read_field_csv, read_frames, read_json, write_field_csv, write_frames, write_json};
use conslaw::{Error, Geometry, ScalarField};
use proptest::prelude::*;

fn field2d(nx: usize, ny: usize, t: f64, seed: f64) -> ScalarField {
    let g = Geometry::from_box(&[-1.0, 0.5], &[2.0, 1.5], &[nx, ny]).unwrap();
    ScalarField::from_fn(g, t, |p| (seed * p[0]).sin() + p[1] * p[1]).unwrap()
}

#[test]
fn frames_round_trip_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.clfr");
    let frames = vec![field2d(8, 5, 0.0, 1.0), field2d(8, 5, 0.25, 2.0), field2d(8, 5, 0.5, 3.0)];
    write_frames(&path, &frames).unwrap();
    assert_eq!(read_frames(&path).unwrap(), frames);
}

#[test]
fn truncated_frames_are_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.clfr");
    write_frames(&path, &[field2d(8, 5, 0.0, 1.0)]).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(read_frames(&path), Err(Error::Format { .. })));
    std::fs::write(&path, b"nope").unwrap();
    assert!(matches!(read_frames(&path), Err(Error::Format { .. })));
}

#[test]
fn missing_files_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(read_frames(&dir.path().join("absent")), Err(Error::Io { .. })));
}

#[test]
fn field_csv_round_trip_2d() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.csv");
    let u = field2d(12, 7, 0.0, 1.5);
    write_field_csv(&path, &u).unwrap();
    let back = read_field_csv(&path, 0.0).unwrap();
    assert_eq!(back.geometry().dims, u.geometry().dims);
    for (a, b) in back.values().iter().zip(u.values()) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }
}

#[test]
fn ragged_csv_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.csv");
    std::fs::write(&path, "x,value\n0.1,1\n0.2\n").unwrap();
    assert!(read_field_csv(&path, 0.0).is_err());
    std::fs::write(&path, "x,value\n0.1,1\n0.2,2\n0.5,3\n").unwrap();
    assert!(read_field_csv(&path, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn line_fields_survive_csv(vals in prop::collection::vec(-1e3f64..1e3, 2..50), lo in -5.0f64..5.0, len in 0.5f64..10.0) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        let g = Geometry::line(lo, lo + len, vals.len()).unwrap();
        let u = ScalarField::new(g, vals, 1.0).unwrap();
        write_field_csv(&path, &u).unwrap();
        let back = read_field_csv(&path, 1.0).unwrap();
        prop_assert_eq!(back.len(), u.len());
        prop_assert!((back.geometry().origin[0] - lo).abs() < 1e-9 * len.max(1.0));
        for (a, b) in back.values().iter().zip(u.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn json_round_trip(vals in prop::collection::vec(-1.0f64..1.0, 1..20), t in 0.0f64..5.0) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.json");
        let u = ScalarField::new(Geometry::line(0.0, 1.0, vals.len()).unwrap(), vals, t).unwrap();
        write_json(&path, &u).unwrap();
        let back: ScalarField = read_json(&path).unwrap();
        prop_assert_eq!(back, u);
    }
}
