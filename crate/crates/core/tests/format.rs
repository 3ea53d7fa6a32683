use morl::format::{load_momdp, read_momdp, save_momdp, write_momdp};
use morl::momdp::{random_momdp, random_momdp_per_step};
use morl::{Momdp64, MorlError};

#[test]
fn models_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    for (i, m) in [random_momdp::<f64>(4, 2, 3, 2, 1).unwrap(), random_momdp_per_step::<f64>(3, 3, 2, 4, 2).unwrap()]
        .into_iter()
        .enumerate()
    {
        let path = dir.path().join(format!("m{i}.txt"));
        save_momdp(&m, &path).unwrap();
        let back: Momdp64 = load_momdp(&path).unwrap();
        assert_eq!(back, m);
    }
}

#[test]
fn truncated_input_reports_a_line() {
    let m = random_momdp::<f64>(3, 2, 2, 2, 0).unwrap();
    let mut buf = Vec::new();
    write_momdp(&m, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let cut: String = text.lines().take(text.lines().count() / 2).map(|l| format!("{l}\n")).collect();
    match read_momdp::<f64, _>(cut.as_bytes()) {
        Err(MorlError::Parse { .. }) => {}
        other => panic!("expected parse error, got {other:?}"),
    }
}
