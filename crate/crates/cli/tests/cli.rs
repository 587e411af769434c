use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use upcase_core::casestudy::{self, Rater};
use upcase_core::report::AssessmentResults;
use upcase_core::{build_profile, ReferenceModel, ResponseSheet};

fn upcase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_upcase"))
        .args(args)
        .env_remove("UPCASE_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn sheet_csv(codes: &[u8]) -> String {
    let mut s = "item,rating\n".to_string();
    for (i, c) in codes.iter().enumerate() {
        let _ = writeln!(s, "{},{}", i + 1, ["N", "P", "F"][*c as usize]);
    }
    s
}

fn pair_csv(org: usize) -> String {
    let mut s = "team,observer\n".to_string();
    for (t, o) in casestudy::codes(org, Rater::Team)
        .iter()
        .zip(casestudy::codes(org, Rater::Observer))
    {
        let _ = writeln!(s, "{t},{o}");
    }
    s
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn score_prints_profile() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = write(
        dir.path(),
        "org1.csv",
        &sheet_csv(&casestudy::codes(1, Rater::Team)),
    );
    let out = upcase(&["score", p(&sheet)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("Usability process    34.38 P"), "{text}");
    assert!(text.contains("UP4                   0.00 N"), "{text}");
    assert!(text.contains("Capability level: 0"));

    let all_f = write(dir.path(), "f.csv", &sheet_csv(&[2; 16]));
    let text = stdout(&upcase(&["score", p(&all_f)]));
    assert!(text.contains("Capability level: 1"), "{text}");
}

#[test]
fn score_json_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let codes = casestudy::codes(2, Rater::Observer);
    let sheet = write(dir.path(), "s.csv", &sheet_csv(&codes));
    let out = upcase(&["--json", "score", p(&sheet)]);
    assert_eq!(out.status.code(), Some(0));
    let cli: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let model = ReferenceModel::canonical();
    let lib = build_profile(
        &ResponseSheet::from_csv(&sheet_csv(&codes), "1.0", "respondent").unwrap(),
        &model,
    )
    .unwrap();
    assert_eq!(cli, serde_json::to_value(&lib).unwrap());
}

#[test]
fn incomplete_sheet_lists_missing_items() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = write(dir.path(), "s.csv", "item,rating\n1,F\n2,P\n");
    let out = upcase(&["score", p(&sheet)]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains('3') && err.contains("16"), "{err}");
}

#[test]
fn kappa_and_undefined_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let pair = write(dir.path(), "org1.csv", &pair_csv(1));
    let out = upcase(&["stats", "kappa", p(&pair), "--weights", "linear"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(
        stdout(&out).contains("0.5556 (fair to good)"),
        "{}",
        stdout(&out)
    );

    let all = stdout(&upcase(&["stats", "kappa", p(&pair), "--weights", "all"]));
    assert_eq!(all.lines().filter(|l| l.contains("kappa =")).count(), 3);

    let constant = write(dir.path(), "c.csv", "1,1\n1,1\n1,1\n");
    let out = upcase(&["stats", "kappa", p(&constant)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("undefined"));

    let out = upcase(&["stats", "icc", p(&constant)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).matches("undefined").count(), 3);

    let negative = write(dir.path(), "n.csv", "0,2\n1,1\n2,0\n");
    let out = upcase(&["stats", "alpha", p(&negative)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("alpha = undefined"));
}

#[test]
fn alpha_json_matches_covariance_form() {
    let rows: [[f64; 5]; 10] = [
        [3., 4., 3., 5., 4.],
        [2., 2., 3., 2., 3.],
        [4., 5., 4., 4., 5.],
        [1., 2., 1., 2., 1.],
        [3., 3., 4., 3., 3.],
        [5., 4., 5., 5., 4.],
        [2., 3., 2., 1., 2.],
        [4., 4., 3., 4., 4.],
        [3., 2., 3., 3., 2.],
        [1., 1., 2., 1., 1.],
    ];
    let dir = tempfile::tempdir().unwrap();
    let text: String = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
                + "\n"
        })
        .collect();
    let file = write(dir.path(), "m.csv", &text);
    let out = upcase(&["--json", "stats", "alpha", p(&file)]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();

    let n = rows.len() as f64;
    let k = 5;
    let means: Vec<f64> = (0..k)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let cov = |a: usize, b: usize| {
        rows.iter()
            .map(|r| (r[a] - means[a]) * (r[b] - means[b]))
            .sum::<f64>()
            / (n - 1.0)
    };
    let vbar = (0..k).map(|j| cov(j, j)).sum::<f64>() / k as f64;
    let cbar = (0..k)
        .flat_map(|a| (0..k).filter(move |&b| b != a).map(move |b| (a, b)))
        .map(|(a, b)| cov(a, b))
        .sum::<f64>()
        / (k * (k - 1)) as f64;
    let expected = k as f64 * cbar / (vbar + (k as f64 - 1.0) * cbar);
    assert!((v["alpha"].as_f64().unwrap() - expected).abs() < 1e-9);
    assert_eq!(v["alpha_if_deleted"].as_object().unwrap().len(), 5);
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "1,x\n");
    assert_eq!(upcase(&["stats", "kappa", p(&bad)]).status.code(), Some(2));
    assert_eq!(upcase(&["stats", "icc", p(&bad)]).status.code(), Some(2));
    assert_eq!(
        upcase(&["stats", "kappa", "/nonexistent/file.csv"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(upcase(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn report_from_sheet_in_every_format() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = write(
        dir.path(),
        "org2.csv",
        &sheet_csv(&casestudy::codes(2, Rater::Team)),
    );
    let base = [
        "report",
        "--sheet",
        p(&sheet),
        "--organization",
        "Org 2",
        "--date",
        "2026-10-01",
    ];

    let md = upcase(&base);
    assert_eq!(md.status.code(), Some(0), "{}", stderr(&md));
    let md_text = stdout(&md);
    assert!(md_text.contains("| UP3 | 90 | F |"), "{md_text}");
    assert!(!md_text.contains(".."));
    assert_eq!(md_text, stdout(&upcase(&base)));

    let html = stdout(&upcase(&[&base[..], &["--format", "html"]].concat()));
    assert!(html.trim_start().starts_with("<!DOCTYPE html>"));
    assert!(html.trim_end().ends_with("</html>"));
    for tag in ["table", "tr", "section", "ul"] {
        assert_eq!(
            html.matches(&format!("<{tag}>")).count(),
            html.matches(&format!("</{tag}>")).count(),
            "{tag}"
        );
    }

    let out_path = dir.path().join("r.json");
    let out = upcase(&[&base[..], &["--format", "json", "--out", p(&out_path)]].concat());
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let parsed: AssessmentResults = serde_json::from_str(&text).unwrap();
    assert_eq!(
        serde_json::to_string_pretty(&parsed).unwrap().trim(),
        text.trim()
    );

    assert_eq!(
        upcase(&[&base[..], &["--format", "pdf"]].concat())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn report_and_list_against_empty_store() {
    let dir = tempfile::tempdir().unwrap();
    let data = p(dir.path());
    let out = upcase(&["report", "missing-id", "--data-dir", data]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing-id"));
    let out = upcase(&["--json", "list", "--data-dir", data]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        serde_json::from_slice::<serde_json::Value>(&out.stdout).unwrap(),
        serde_json::json!([])
    );
}

#[test]
fn validate_model_files() {
    let dir = tempfile::tempdir().unwrap();
    let canonical = serde_json::to_string(&ReferenceModel::canonical()).unwrap();
    let good = write(dir.path(), "good.json", &canonical);
    let out = upcase(&["validate-model", p(&good)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("valid"));

    let mut broken: serde_json::Value = serde_json::from_str(&canonical).unwrap();
    broken["indicators"][0]["statement"] = "".into();
    broken["indicators"][1]["id"] = 3.into();
    let bad = write(dir.path(), "bad.json", &broken.to_string());
    let out = upcase(&["validate-model", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(
        err.contains("empty statement") && err.contains("duplicate id"),
        "{err}"
    );

    let garbage = write(dir.path(), "garbage.json", "{");
    assert_eq!(
        upcase(&["validate-model", p(&garbage)]).status.code(),
        Some(2)
    );
}

#[test]
fn serve_reports_occupied_port() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let dir = tempfile::tempdir().unwrap();
    let out = upcase(&["serve", "--bind", &addr, "--data-dir", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains(&addr), "{}", stderr(&out));
}
