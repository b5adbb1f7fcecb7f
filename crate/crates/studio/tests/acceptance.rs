//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p echo-studio --test acceptance`.

mod common;
#[path = "../../core/tests/support/gen.rs"]
mod gen;
#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::cell::Cell;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use echo_core::action::{
    execute_batch, format_command, invert, parse_command, parse_command_with, parse_steps_json,
    Action, ActionKind, ExecPolicy, ParseOptions, PlannedStep,
};
use echo_core::catalog::{Catalog, HashNgramEmbedder};
use echo_core::engine::{EngineError, GenerationResult, LogicalClock, SuggestionState, Workbench};
use echo_core::fixtures;
use echo_core::pipeline::{
    parse_suggestions, ActionPlan, Condition, MockProvider, PipelineConfig, Provider,
};
use echo_core::scene::{ColorRGB, Material, SceneGraph, Vector3};
use echo_studio::ablate::{CellProvider, Grid};
use echo_studio::provider::{RecordingProvider, ReplayProvider, Transcript};
use echo_studio::script::{Runner, Step};
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use serde_json::Value;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn grammar() -> Outcome {
    let cases = [
        (
            "Add {Movie_Poster} to [(-3.80, 1.00, 0.05)]",
            Action::new(
                "Movie_Poster",
                ActionKind::Add(Vector3::new(-3.8, 1.0, 0.05)),
            ),
        ),
        (
            "Move {Movie_Poster} to [(-1.00, 1.00, -3.95)]",
            Action::new(
                "Movie_Poster",
                ActionKind::Move(Vector3::new(-1.0, 1.0, -3.95)),
            ),
        ),
        (
            "Scale {TV} [1.2] times",
            Action::new("TV", ActionKind::Scale(1.2)),
        ),
        (
            "Color {Table} to red[(255, 0, 0)]",
            Action::new("Table", ActionKind::Color(ColorRGB::new(255, 0, 0))),
        ),
        (
            "Change {Table} to [Wood]",
            Action::new("Table", ActionKind::Style(Material::RusticWood)),
        ),
        ("Destroy {Cup}", Action::new("Cup", ActionKind::Destroy)),
    ];
    for (text, expected) in &cases {
        let (action, _) =
            parse_command_with(text, ParseOptions::LENIENT).map_err(|e| format!("{text}: {e}"))?;
        check(action == *expected, || {
            format!("{text} parsed to {action:?}")
        })?;
        let canonical = format_command(&action);
        let back = parse_command(&canonical).map_err(|e| format!("{canonical}: {e}"))?;
        check(back == action, || {
            format!("{canonical} does not round-trip")
        })?;
    }
    check(parse_command("Change {Table} to [Wood]").is_err(), || {
        "strict mode accepted an alias".into()
    })?;
    Ok(format!("{} commands", cases.len()))
}

fn undo_exactness() -> Outcome {
    let count = Cell::new(0);
    runner(1000)
        .run(&gen::scene_and_steps(20, 10), |(scene, steps)| {
            let mut live = scene.clone();
            let before = live.serialize_parameters();
            let done = execute_batch(&mut live, &steps, ExecPolicy::default())
                .map_err(|e| TestCaseError::fail(format!("{e:?}")))?;
            invert(&done.patch, &mut live);
            if live.serialize_parameters() != before {
                return Err(TestCaseError::fail("inverse differs"));
            }
            count.set(count.get() + 1);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    check(count.get() >= 1000, || {
        format!("only {} cases", count.get())
    })?;
    Ok(format!("{} sequences, all byte-equal", count.get()))
}

/// A workbench with one session whose entries carry `plans`.
fn bench_with(scene: SceneGraph, plans: Vec<Vec<PlannedStep>>) -> (Workbench, String) {
    let mut wb = Workbench::new(scene);
    let texts = (0..plans.len()).map(|i| format!("plan {i}")).collect();
    let (sid, jobs) = wb
        .create_session("generated", PipelineConfig::default(), Ok(texts))
        .unwrap();
    for (job, steps) in jobs.into_iter().zip(plans) {
        wb.complete_generation(GenerationResult {
            session_id: job.session_id,
            suggestion_id: job.suggestion_id,
            generation: job.generation,
            outcome: Ok(ActionPlan {
                steps,
                diagnostics: Vec::new(),
            }),
        })
        .unwrap();
    }
    (wb, sid)
}

fn isolation() -> Outcome {
    let count = Cell::new(0);
    runner(250)
        .run(&gen::disjoint_pair(), |pair| {
            let fail = |m: &str| TestCaseError::fail(m.to_string());
            for (undo, kept) in [("sg1", &pair.b_touches), ("sg2", &pair.a_touches)] {
                let (mut wb, sid) =
                    bench_with(pair.scene.clone(), vec![pair.a.clone(), pair.b.clone()]);
                wb.apply(&sid, "sg1").map_err(|e| fail(&e.to_string()))?;
                wb.apply(&sid, "sg2").map_err(|e| fail(&e.to_string()))?;
                let held = gen::footprint(wb.scene(), kept);
                wb.undo(&sid, undo).map_err(|e| fail(&e.to_string()))?;
                if gen::footprint(wb.scene(), kept) != held {
                    return Err(fail("undo disturbed the other suggestion"));
                }
            }
            count.set(count.get() + 1);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    check(count.get() >= 200, || format!("only {} pairs", count.get()))?;
    Ok(format!("{} pairs, both undo orders", count.get()))
}

fn atomicity() -> Outcome {
    let count = Cell::new(0);
    runner(200)
        .run(&gen::broken_plan(), |plan| {
            let (mut wb, sid) = bench_with(plan.scene.clone(), vec![plan.steps.clone()]);
            let before = wb.scene().serialize_parameters();
            match wb.apply(&sid, "sg1") {
                Err(EngineError::AtomicRollback { failed_step, .. })
                    if failed_step == plan.failing_step => {}
                other => return Err(TestCaseError::fail(format!("unexpected {other:?}"))),
            }
            if wb.scene().serialize_parameters() != before {
                return Err(TestCaseError::fail("scene changed"));
            }
            if wb.session(&sid).unwrap().entries[0].state() != SuggestionState::Failed {
                return Err(TestCaseError::fail("entry not Failed"));
            }
            count.set(count.get() + 1);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    check(count.get() >= 100, || {
        format!("only {} fixtures", count.get())
    })?;
    Ok(format!("{} fixtures rolled back", count.get()))
}

fn transcript_lines(path: &Path) -> Result<Vec<Value>, String> {
    fs::read_to_string(path)
        .map_err(|e| format!("{}: {e}", path.display()))?
        .lines()
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect()
}

fn ablation() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let catalog = fixtures::catalog().map_err(|e| e.to_string())?;
    let instructions = fixtures::instructions();
    let conditions = Condition::ALL;
    let grid = Grid {
        instructions: &instructions,
        conditions: &conditions,
        provider: CellProvider::Shared(Arc::new(MockProvider::with_default_rules())),
        catalog: &catalog,
        embedder: &HashNgramEmbedder,
        jobs: 4,
    };
    grid.run(dir.path()).map_err(|e| e.to_string())?;
    let mut cells = 0;
    for cond in ["V+OP+S", "V+S", "V+OP", "OP+S"] {
        let cond_dir = dir.path().join(cond);
        let Ok(entries) = fs::read_dir(&cond_dir) else {
            continue;
        };
        for entry in entries {
            let cell = entry.map_err(|e| e.to_string())?.path();
            for f in ["scene.json", "topview.ppm", "transcript.jsonl"] {
                check(cell.join(f).is_file(), || {
                    format!("{} missing", cell.join(f).display())
                })?;
            }
            cells += 1;
            let records = transcript_lines(&cell.join("transcript.jsonl"))?;
            let count = |f: &dyn Fn(&Value) -> bool| records.iter().filter(|r| f(r)).count();
            let images = count(&|r| r.get("image_sha256").is_some());
            let lists = count(&|r| {
                r["user_text"]
                    .as_str()
                    .unwrap_or_default()
                    .contains("Object list: ")
            });
            let suggestion_calls = count(&|r| r["stage"] == "suggestion_gen");
            let bad = match cond {
                "OP+S" => images,
                "V+S" => lists,
                "V+OP" => suggestion_calls,
                _ => 0,
            };
            check(bad == 0, || {
                format!("{} leaks {bad} disabled input(s)", cell.display())
            })?;
        }
    }
    check(cells == 36, || format!("{cells} cells"))?;
    Ok("36 cells, no disabled input in any transcript".into())
}

fn retrieval() -> Outcome {
    let catalog = fixtures::catalog().map_err(|e| e.to_string())?;
    let rank = |category: Option<&str>, q: &str| -> Result<Vec<String>, String> {
        Ok(catalog
            .search(&HashNgramEmbedder, category, q)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|h| h.asset_id)
            .collect())
    };
    let mut queries: Vec<String> = catalog
        .records()
        .iter()
        .map(|r| r.description.clone())
        .collect();
    queries.extend(oracle::QUERIES.iter().map(|s| s.to_string()));
    check(queries.len() == 50, || format!("{} queries", queries.len()))?;
    for q in &queries {
        let engine = rank(None, q)?;
        let expected = oracle::rank(&catalog, None, q);
        check(engine[..5] == expected[..5], || {
            format!("top-5 differs for {q:?}")
        })?;
    }
    for r in catalog.records() {
        let engine = rank(Some(&r.category), &r.description)?;
        check(engine[0] == r.asset_id, || {
            format!("{} not first in {}", r.asset_id, r.category)
        })?;
    }
    Ok(format!(
        "50 queries top-5 exact, {} self-queries top-1",
        catalog.records().len()
    ))
}

fn extraction() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/corpus");
    let manifest: Value = serde_json::from_str(
        &fs::read_to_string(dir.join("manifest.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let ok = manifest["ok"].as_array().cloned().unwrap_or_default();
    let garbage = manifest["garbage"].as_array().cloned().unwrap_or_default();
    check(ok.len() == 20 && garbage.len() == 5, || {
        "corpus size".into()
    })?;
    let read = |case: &Value| {
        fs::read_to_string(dir.join(case["file"].as_str().unwrap_or_default()))
            .map_err(|e| e.to_string())
    };
    for case in &ok {
        let text = read(case)?;
        let got: Vec<String> = if case["parser"] == "suggestions" {
            parse_suggestions(&text).map_err(|e| format!("{}: {e}", case["file"]))?
        } else {
            let plan = parse_steps_json(&text).map_err(|e| format!("{}: {e}", case["file"]))?;
            plan.steps
                .iter()
                .map(|s| format_command(&s.action))
                .collect()
        };
        let expected: Vec<String> =
            serde_json::from_value(case["expected"].clone()).map_err(|e| e.to_string())?;
        check(got == expected, || {
            format!("{} parsed to {got:?}", case["file"])
        })?;
    }
    for case in &garbage {
        let text = read(case)?;
        let kind = if case["parser"] == "suggestions" {
            parse_suggestions(&text).err().map(|e| e.kind())
        } else {
            parse_steps_json(&text).err().map(|e| e.kind())
        };
        check(kind == case["kind"].as_str(), || {
            format!("{}: got {kind:?}", case["file"])
        })?;
    }
    Ok("20 wrapped outputs parsed, 5 garbage inputs typed".into())
}

fn run_once(
    provider: &dyn Provider,
    steps: &[Step],
    catalog: &Catalog,
) -> Result<(String, String, Arc<Transcript>), String> {
    let transcript = Arc::new(Transcript::new());
    let recording = RecordingProvider::new(
        provider,
        Arc::clone(&transcript),
        LogicalClock::starting_at(1),
    );
    let mut wb = Workbench::new(fixtures::seed_scene("seed").map_err(|e| e.to_string())?)
        .with_clock(LogicalClock::starting_at(1));
    Runner {
        provider: &recording,
        catalog,
        embedder: &HashNgramEmbedder,
    }
    .run(&mut wb, steps)
    .map_err(|e| e.to_string())?;
    let sessions = serde_json::to_string(wb.sessions()).map_err(|e| e.to_string())?;
    Ok((wb.scene().snapshot().to_json(), sessions, transcript))
}

fn replay_determinism() -> Outcome {
    let catalog = fixtures::catalog().map_err(|e| e.to_string())?;
    let mock = MockProvider::with_default_rules();
    let mut runs = 0;
    for study in fixtures::instructions() {
        for cond in ["V+OP+S", "V+S", "V+OP", "OP+S"] {
            let steps = vec![
                Step::Instruct {
                    instruction: study.instruction.clone(),
                    condition: Some(cond.into()),
                    config: None,
                },
                Step::ApplyAll,
                Step::Regenerate {
                    suggestion: "sg1".into(),
                    session: None,
                },
            ];
            let (scene, sessions, transcript) = run_once(&mock, &steps, &catalog)?;
            let replay = ReplayProvider::new(transcript.records());
            let (scene2, sessions2, _) = run_once(&replay, &steps, &catalog)?;
            check(scene == scene2 && sessions == sessions2, || {
                format!("{cond} {:?} diverged", study.instruction)
            })?;
            check(replay.remaining() == 0, || {
                "replay left records unused".into()
            })?;
            runs += 1;
        }
    }
    Ok(format!("{runs} recorded runs replayed byte-identically"))
}

fn golden_run() -> Outcome {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let out = common::echo()
        .arg("run-script")
        .arg(golden.join("sofa_script.json"))
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        format!("exit {:?}", out.status.code())
    })?;
    let expected = fs::read(golden.join("sofa_scene.json")).map_err(|e| e.to_string())?;
    check(out.stdout == expected, || {
        "scene differs from tests/golden/sofa_scene.json".into()
    })?;
    let scene: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let bound = scene["objects"]
        .as_array()
        .into_iter()
        .flatten()
        .any(|o| o["asset_ref"] == "sofa-01");
    check(bound, || "no object bound to the gray fabric sofa".into())?;
    Ok("byte-exact, sofa bound to sofa-01".into())
}

fn crash_recovery() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("data");
    let cfg = dir.path().join("slow.toml");
    fs::write(&cfg, "mock_delay_ms = 2000\n").map_err(|e| e.to_string())?;
    let spawn = |args: &[&str]| {
        common::Server::spawn(args).map_err(|(c, e)| format!("serve exited {c}: {e}"))
    };
    let data_arg = data.to_str().unwrap_or_default();
    let slow = spawn(&[
        "--config",
        cfg.to_str().unwrap_or_default(),
        "--data-dir",
        data_arg,
    ])?;
    let http = &slow.http;
    check(
        http.post("/scenes", r#"{"scene_id": "lr", "seed": true}"#)
            .status
            == 201,
        || "create failed".into(),
    )?;
    let r = http.post(
        "/scenes/lr/objects",
        r#"{"asset_id": "plant-01", "position": [0.3, 0.45, 0.0]}"#,
    );
    check(r.status == 200, || format!("add failed: {}", r.text))?;
    let r = http.post(
        "/scenes/lr/instruct",
        r#"{"instruction": "Decorate the room with an ocean theme."}"#,
    );
    let sid = r.json()["session_id"]
        .as_str()
        .unwrap_or_default()
        .to_string();
    let before = http.get("/scenes/lr").text;
    slow.kill();

    let back = spawn(&["--data-dir", data_arg])?;
    let after = back.http.get("/scenes/lr").text;
    check(after == before, || "scene differs after restart".into())?;
    let session = back.http.get(&format!("/sessions/{sid}")).json();
    let entries = session["suggestions"]
        .as_array()
        .cloned()
        .unwrap_or_default();
    check(
        !entries.is_empty() && entries.iter().all(|e| e["state"] == "failed"),
        || format!("not demoted: {session}"),
    )?;
    Ok(format!(
        "scene byte-exact, {} processing entries demoted to failed",
        entries.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("grammar conformance", grammar, Duration::from_secs(1)),
        ("undo exactness", undo_exactness, Duration::from_secs(30)),
        (
            "selective-undo isolation",
            isolation,
            Duration::from_secs(10),
        ),
        ("apply atomicity", atomicity, Duration::from_secs(30)),
        ("ablation soundness", ablation, Duration::from_secs(60)),
        ("retrieval correctness", retrieval, Duration::from_secs(30)),
        (
            "tolerant JSON extraction",
            extraction,
            Duration::from_secs(10),
        ),
        (
            "replay determinism",
            replay_determinism,
            Duration::from_secs(60),
        ),
        ("end-to-end golden run", golden_run, Duration::from_secs(30)),
        ("crash recovery", crash_recovery, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = result.and_then(|d| {
            if took <= budget {
                Ok(d)
            } else {
                Err(format!("{d}, but took {took:.2?} (budget {budget:?})"))
            }
        });
        match result {
            Ok(detail) => println!("PASS  {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{took:.2?}]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
