use std::collections::BTreeMap;

use rand::Rng;
use stablerank_core::io::{
    emit_stem_plot, parse_barcode_csv, parse_barcode_file, parse_point_cloud_csv, parse_ripser,
    parse_stem_plot_csv, write_barcode_csv, write_contour_lines_csv, write_point_cloud_csv,
    write_ripser, write_stem_plot_csv, BarcodeFormat,
};
use stablerank_core::{contour_lines, Barcode, Contour, Error, PointCloud};
use stablerank_testkit::{random_barcode, random_planar_points, rng};

#[test]
fn barcode_round_trips() {
    let mut r = rng(61);
    for _ in 0..200 {
        let mut b = random_barcode(&mut r, 10, 0.2);
        b.degree = r.gen_range(0..2);
        assert_eq!(
            parse_barcode_csv(&write_barcode_csv(&b), b.degree).unwrap(),
            b
        );
        assert_eq!(
            parse_ripser(&write_ripser(&BTreeMap::from([(b.degree, b.clone())]))).unwrap()
                [&b.degree],
            b
        );
        assert_eq!(
            serde_json::from_str::<Barcode>(&serde_json::to_string(&b).unwrap()).unwrap(),
            b
        );
        assert!(parse_stem_plot_csv(&write_stem_plot_csv(&b), b.degree)
            .unwrap()
            .same_bars(&b));
    }
}

#[test]
fn files_in_every_format() {
    let dir = tempfile::tempdir().unwrap();
    let b = Barcode::from_pairs(1, &[(0.0, 1.5), (2.0, f64::INFINITY)]).unwrap();
    let csv = dir.path().join("b.csv");
    std::fs::write(&csv, write_barcode_csv(&b)).unwrap();
    assert_eq!(parse_barcode_file(&csv, BarcodeFormat::Csv, 1).unwrap(), b);
    let json = dir.path().join("b.json");
    std::fs::write(&json, serde_json::to_string(&b).unwrap()).unwrap();
    assert_eq!(
        parse_barcode_file(&json, BarcodeFormat::Json, 7).unwrap(),
        b
    );
    let txt = dir.path().join("b.txt");
    std::fs::write(&txt, "value range: [0,2]\npersistence intervals in dim 0:\n [0, )\npersistence intervals in dim 1:\n [0,1.5)\n [2, )\n").unwrap();
    assert_eq!(
        parse_barcode_file(&txt, BarcodeFormat::RipserText, 1).unwrap(),
        b
    );
    assert_eq!(
        parse_barcode_file(&txt, BarcodeFormat::RipserText, 2).unwrap(),
        Barcode::empty(2)
    );
    assert_eq!(BarcodeFormat::from_path(&csv), BarcodeFormat::Csv);
    assert_eq!(BarcodeFormat::from_path(&txt), BarcodeFormat::RipserText);
    assert_eq!(
        "ripser".parse::<BarcodeFormat>().unwrap(),
        BarcodeFormat::RipserText
    );
    assert!(matches!(
        parse_barcode_file(&dir.path().join("missing.csv"), BarcodeFormat::Csv, 0),
        Err(Error::Io(_))
    ));

    let stems = dir.path().join("stems.csv");
    emit_stem_plot(
        &Barcode::from_pairs(0, &[(0.0, 2.0), (0.0, 3.0)]).unwrap(),
        &stems,
    )
    .unwrap();
    assert_eq!(
        std::fs::read_to_string(&stems).unwrap(),
        "s,length,multiplicity_index\n0,2,0\n0,3,1\n"
    );
    assert!(emit_stem_plot(&b, &dir.path().join("no/such/dir.csv")).is_err());
}

#[test]
fn malformed_inputs_report_lines() {
    for (text, line) in [
        ("birth,death\n0,1\n1,x\n", 3),
        ("birth,death\n0,1\n-1,2\n", 3),
        ("birth,death\n1,1\n", 2),
        ("birth,death\n0,1,2\n", 2),
    ] {
        match parse_barcode_csv(text, 0) {
            Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
    for (text, line) in [
        ("persistence intervals in dim 1:\n [0,1)\n garbage\n", 3),
        ("persistence intervals in dim x:\n", 1),
        ("persistence intervals in dim 0:\n [3,1)\n", 2),
    ] {
        match parse_ripser(text) {
            Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn point_clouds_round_trip_exactly() {
    let mut r = rng(62);
    for _ in 0..50 {
        let n = r.gen_range(1..50);
        let pc = PointCloud::from_xy(&random_planar_points(&mut r, n)).unwrap();
        assert_eq!(
            parse_point_cloud_csv(&write_point_cloud_csv(&pc)).unwrap(),
            pc
        );
    }
    let pc = parse_point_cloud_csv("1,2,3\n4,5,6\n").unwrap();
    assert_eq!((pc.len(), pc.dim()), (2, 3));
    assert!(parse_point_cloud_csv("").is_err());
}

#[test]
fn contour_line_csv() {
    let lines = contour_lines(
        &Contour::standard().truncate(stablerank_testkit::ext(2.5)),
        &[1.0],
        (0.0, 2.0),
        3,
    )
    .unwrap();
    assert_eq!(
        write_contour_lines_csv(&lines),
        "t,s,height\n1,0,1\n1,1,1\n1,2,inf\n"
    );
}
