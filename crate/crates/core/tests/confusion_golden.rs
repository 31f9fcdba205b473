//! Seeded relabeling under a uniform two-class confusion matrix, frozen.
//!
//! Regenerate with `MATMAP_BLESS=1 cargo test --test confusion_golden` after an
//! intentional change to the sampling scheme.

use std::fmt::Write;
use std::path::Path;

use matmap::{apply_confusion, ClassId, ConfusionModel, Location, RectPulse, Time, UnitId, VisionUnit};

fn relabeling() -> String {
    let mut unit = VisionUnit::new(UnitId(3), Location::default());
    for k in 0..16i64 {
        let class = ClassId(1 + (k % 2) as u32);
        unit.add_pulse(class, RectPulse::new(Time::from_secs(10 * k), Time::from_secs(4)).unwrap());
    }
    let cm = ConfusionModel::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]], 2024).unwrap();
    let out = apply_confusion(&unit, &cm).unwrap();
    let mut text = String::from("center_us,class\n");
    let mut rows: Vec<(Time, ClassId)> = out.pulses().map(|(c, p)| (p.center(), c)).collect();
    rows.sort();
    for (t, c) in rows {
        writeln!(text, "{},{}", t.micros(), c.0).unwrap();
    }
    text
}

#[test]
fn uniform_two_class_relabeling_is_frozen() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/confusion_uniform_2x2.csv");
    let actual = relabeling();
    if std::env::var_os("MATMAP_BLESS").is_some() {
        std::fs::write(&path, &actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert_eq!(actual, expected);
    assert_eq!(relabeling(), actual);
}
