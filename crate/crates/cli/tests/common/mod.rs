#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hullprobe::LabeledPointSet;
use hullprobe_testkit::{self as kit, write_fixture, write_run};
use tempfile::TempDir;

pub fn hullprobe<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_hullprobe"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// `(embv, tsv)` path pair.
pub type Input = (PathBuf, PathBuf);

/// On-disk inputs for every subcommand.
pub struct Fixtures {
    pub dir: TempDir,
    pub blobs: Input,
    pub blobs_set: LabeledPointSet,
    pub blobs_scaled: Input,
    pub blobs_doubled: Input,
    pub blobs_relabeled: Input,
    pub two: Input,
    pub xor: Input,
    pub duplicate: Input,
    pub wide: Input,
    pub radial_run: PathBuf,
    pub identical_run: PathBuf,
    pub scaling_run: PathBuf,
    pub probe_train: Input,
    pub probe_test: Input,
}

impl Fixtures {
    pub fn root(&self) -> &Path {
        self.dir.path()
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join("out").join(name)
    }
}

/// Cyclic relabeling: every row of label `i` gets label `i+1 mod n`.
pub fn relabeled(set: &LabeledPointSet) -> LabeledPointSet {
    let n = set.n_labels();
    let names: Vec<String> = set
        .labels()
        .iter()
        .map(|&l| set.label_name((l + 1) % n).to_string())
        .collect();
    let rows: Vec<&[f64]> = set.rows().collect();
    LabeledPointSet::from_rows(&rows, &names).unwrap()
}

pub fn fixtures() -> Fixtures {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_path_buf();
    let blobs_set = kit::blobs(3, 12, 3, 0.4, 1);
    let base4 = kit::blobs(4, 10, 3, 0.5, 2);
    let xor_set = kit::xor(6, 2, 0.15, 3);
    let dup = LabeledPointSet::from_rows(&[[0.0, 0.0], [2.0, 1.0], [0.0, 0.0], [5.0, 5.0]], &["a", "a", "b", "b"]).unwrap();
    let wide = kit::blobs(3, 12, 5, 0.4, 4);
    let radial_run = d.join("radial");
    let identical_run = d.join("identical");
    let scaling_run = d.join("scaling");
    write_run(&radial_run, &kit::radial_series(&base4, 10, 0.1), 10, 12);
    write_run(&identical_run, &vec![base4.clone(); 3], 50, 12);
    write_run(&scaling_run, &kit::scaling_series(&base4, 4), 25, 12);
    let train = kit::blobs(3, 20, 4, 0.4, 5).scaled(10.0).unwrap();
    let mut r = kit::rng(6);
    let test = train
        .map_rows(|_, row| {
            let off = kit::in_ball(&mut r, row.len(), 0.5);
            row.iter().zip(&off).map(|(x, o)| x + o).collect()
        })
        .unwrap();
    Fixtures {
        blobs: write_fixture(&d, "blobs", &blobs_set),
        blobs_scaled: write_fixture(&d, "blobs_scaled", &blobs_set.scaled(3.0).unwrap()),
        blobs_doubled: write_fixture(&d, "blobs_doubled", &blobs_set.scaled(2.0).unwrap()),
        blobs_relabeled: write_fixture(&d, "blobs_relabeled", &relabeled(&blobs_set)),
        blobs_set,
        two: write_fixture(&d, "two", &kit::blobs(2, 8, 2, 0.3, 7)),
        xor: write_fixture(&d, "xor", &xor_set),
        duplicate: write_fixture(&d, "duplicate", &dup),
        wide: write_fixture(&d, "wide", &wide),
        radial_run,
        identical_run,
        scaling_run,
        probe_train: write_fixture(&d, "probe_train", &train),
        probe_test: write_fixture(&d, "probe_test", &test),
        dir,
    }
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

/// Argument lists that exercise every subcommand on the fixtures.
pub fn every_subcommand(fx: &Fixtures) -> Vec<(&'static str, Vec<PathBuf>, Vec<&'static str>)> {
    let p = |i: &Input| vec![i.0.clone(), i.1.clone()];
    let cat = |a: &Input, b: &Input| [p(a), p(b)].concat();
    vec![
        ("cluster", p(&fx.blobs), vec![]),
        ("distances", p(&fx.xor), vec![]),
        ("distances", p(&fx.blobs), vec![]),
        ("similarity", cat(&fx.blobs, &fx.blobs_relabeled), vec![]),
        ("track", vec![fx.radial_run.clone()], vec![]),
        ("crosstask", cat(&fx.blobs, &fx.blobs_doubled), vec![]),
        (
            "probe",
            cat(&fx.probe_train, &fx.probe_test),
            vec!["--hidden-sizes", "32,64", "--reg-weights", "1e-4,1e-2", "--seeds", "3"],
        ),
    ]
}
