use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simpledb::cfg::{build_cfg, enumerate_paths, Label, Path, PathBounds, PathCodec};
use simpledb::frontend::{load_model, parse_source, pretty_print, CheckedModel, StmtKind};
use simpledb::interp::{run, RunConfig, RunError, TestInput};
use simpledb::randgen::{random_decl, random_model, random_models, GenConfig};
use simpledb::solver::{for_each_initial_db, solve, Scope};
use simpledb::symexec::symexec;
use std::collections::{BTreeMap, HashMap, HashSet};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pretty_print_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let decl = random_decl(&mut rng, &GenConfig::default());
        let text = pretty_print(&decl);
        let back = parse_source(&text).map_err(|e| TestCaseError::fail(format!("{e:?}\n{text}")))?;
        prop_assert_eq!(back, decl);
    }

    #[test]
    fn path_json_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, &GenConfig::default());
        let codec = PathCodec::new(&m);
        for p in enumerate_paths(&build_cfg(&m), &PathBounds::with_loops(2)).paths {
            prop_assert_eq!(codec.decode(&codec.encode(&p)).unwrap(), p);
        }
    }
}

/// Largest number of consecutive iterations of any single loop entry.
fn max_iterations(p: &Path) -> u32 {
    let mut live: HashMap<u32, u32> = HashMap::new();
    let mut max = 0;
    for s in &p.steps {
        match s.label {
            Label::Enter => {
                let n = live.entry(s.stmt.0).or_insert(0);
                *n += 1;
                max = max.max(*n);
            }
            Label::Exit => {
                live.remove(&s.stmt.0);
            }
            _ => {}
        }
    }
    max
}

fn reads_and_loads(m: &CheckedModel) -> (usize, usize) {
    let (mut r, mut l) = (0, 0);
    m.model.for_each_stmt(|s| match s.kind {
        StmtKind::Read(_) => r += 1,
        StmtKind::Load(_) => l += 1,
        _ => {}
    });
    (r, l)
}

/// Every path taken by a concrete run within the loop bound is enumerated.
#[test]
fn enumeration_covers_concrete_runs() {
    let scope = Scope::tiny();
    let config = RunConfig {
        bitwidth: scope.bitwidth,
        ..RunConfig::default()
    };
    let bound = 2;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    for m in random_models(17, 60, &GenConfig::default()) {
        let enumerated: HashSet<Path> = enumerate_paths(&build_cfg(&m), &PathBounds::with_loops(bound))
            .paths
            .into_iter()
            .collect();
        let mut dbs = Vec::new();
        for_each_initial_db(&m, &scope, &mut |t| {
            dbs.push(t.to_vec());
            dbs.len() < 200
        });
        let (reads, loads) = reads_and_loads(&m);
        let values: Vec<i64> = scope.bitwidth.values().collect();
        for _ in 0..100 {
            let db = &dbs[rng.gen_range(0..dbs.len())];
            // Loops may consume more inputs than there are statements.
            let input = TestInput {
                tables: m
                    .schema
                    .tables
                    .iter()
                    .zip(db)
                    .map(|(t, rows)| (t.name.clone(), rows.clone()))
                    .collect::<BTreeMap<_, _>>(),
                reads: (0..reads * 4).map(|_| values[rng.gen_range(0..values.len())]).collect(),
                loads: (0..loads * 4)
                    .map(|_| {
                        let n = rng.gen_range(0..=3);
                        (0..n).map(|_| values[rng.gen_range(0..values.len())]).collect()
                    })
                    .collect(),
            };
            let run = match run(&m, &input, &config) {
                Ok(r) => r,
                Err(RunError::Runtime(..)) => continue,
                Err(e) => panic!("{e}\n{}", pretty_print(&m.model)),
            };
            let p = run.path();
            if max_iterations(&p) <= bound {
                assert!(
                    enumerated.contains(&p),
                    "observed path {p} not enumerated\n{}",
                    pretty_print(&m.model)
                );
                checked += 1;
            }
        }
    }
    assert!(checked > 3000, "only {checked} runs within the bound");
}

/// Growing every scope component never loses a solution.
#[test]
fn sat_is_monotone_in_scope() {
    let corpus = ["plays", "inventory", "enrolment", "lists", "guard"];
    let small = Scope::tiny();
    let large = Scope {
        max_rows: 3,
        max_list_len: 3,
        ..Scope::default()
    };
    for name in corpus {
        let path = format!("{}/corpus/{name}.sdb", env!("CARGO_MANIFEST_DIR"));
        let m = load_model(&std::fs::read_to_string(path).unwrap()).unwrap();
        for p in enumerate_paths(&build_cfg(&m), &PathBounds::default()).paths {
            let cs = symexec(&m, &p).unwrap();
            if solve(&cs, &small).unwrap().is_sat() {
                assert!(solve(&cs, &large).unwrap().is_sat(), "{name}: {p}");
            }
        }
    }
}
