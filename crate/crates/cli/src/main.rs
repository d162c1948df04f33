//! Command-line pipeline: sample scenes, generate questions, execute and
//! analyze programs, audit answer bias, and validate datasets.
//!
//! Data goes to stdout, structured error records go to stderr, and every
//! generating command writes a run manifest with per-file checksums. Exit
//! codes: 0 success, 1 validation failure, 2 usage error, 3 internal error.

mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sceneq_core::analysis::{aggregate, analyze_dataset, histogram_csv};
use sceneq_core::audit::audit;
use sceneq_core::family::{
    builtin_families, builtin_synonyms, load_families, QuestionFamily, SynonymTable,
};
use sceneq_core::generate::{
    generate_dataset, revalidate, GenerationConfig, QuestionInstance, SplitAssignment,
};
use sceneq_core::program::{execute, typecheck, Program};
use sceneq_core::relaxed::{execute_relaxed, RelaxedValue};
use sceneq_core::sampler::{sample_scenes, validate_scene, Condition, SamplerConfig};
use sceneq_core::scene::SceneGraph;

use manifest::RunManifest;

/// Environment variable naming a default config file.
const CONFIG_ENV: &str = "SCENEQ_CONFIG";

#[derive(Parser)]
#[command(
    name = "sceneq",
    version,
    about = "Synthetic visual-reasoning dataset pipeline"
)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample scene graphs under placement constraints.
    GenScenes(GenScenesArgs),
    /// Generate balanced questions for a scene file.
    GenQuestions(GenQuestionsArgs),
    /// Execute one program against one scene.
    Exec(ExecArgs),
    /// Recompute per-question profiles and aggregate histograms.
    Analyze(AnalyzeArgs),
    /// Fit the question-type mode probe and report answer bias.
    Audit(AuditArgs),
    /// Re-validate a generated dataset end to end.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GenScenesArgs {
    /// Number of scenes to sample.
    #[arg(long)]
    count: usize,
    /// Sampler config file (JSON or key=value); defaults to $SCENEQ_CONFIG.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Attribute-restriction condition (overrides the config file).
    #[arg(long, value_parser = parse_condition)]
    condition: Option<Condition>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Write one scene_NNNNNN.json per scene instead of scenes.jsonl.
    #[arg(long)]
    split_files: bool,
}

#[derive(Args)]
struct GenQuestionsArgs {
    /// Scene file (scenes.jsonl) or a directory containing one.
    #[arg(long)]
    scenes: PathBuf,
    /// Family catalog JSON; defaults to the built-in catalog.
    #[arg(long)]
    families: Option<PathBuf>,
    /// Synonym table JSON; defaults to the built-in table.
    #[arg(long)]
    synonyms: Option<PathBuf>,
    /// Generation config file (JSON); defaults to $SCENEQ_CONFIG.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Questions per scene (overrides the config file).
    #[arg(long)]
    per_image: Option<usize>,
    /// Master seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Disable answer balancing (control runs).
    #[arg(long)]
    no_balance: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExecArgs {
    /// Scene JSON file (a single scene object, or the first line of a jsonl).
    #[arg(long)]
    scene: PathBuf,
    /// Program JSON file.
    #[arg(long)]
    program: PathBuf,
    /// Run under relaxed (pruned-question) semantics.
    #[arg(long)]
    relaxed: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Dataset directory (questions.jsonl + scenes.jsonl).
    #[arg(long)]
    dataset: PathBuf,
    /// Output directory; defaults to the dataset directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write histogram CSV files.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct AuditArgs {
    /// Dataset directory (questions.jsonl + splits.json).
    #[arg(long)]
    dataset: PathBuf,
    /// Split file; defaults to <dataset>/splits.json.
    #[arg(long)]
    splits: Option<PathBuf>,
    /// Bias-alarm margin in accuracy points above chance.
    #[arg(long, default_value_t = 0.05)]
    margin: f64,
    /// Report path; defaults to <dataset>/audit.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Dataset directory.
    #[arg(long)]
    dataset: PathBuf,
    /// Sampler config the scenes must satisfy (JSON or key=value).
    #[arg(long)]
    config: Option<PathBuf>,
}

enum CliError {
    Validation(String),
    Usage(String),
    Internal(String),
}

impl CliError {
    fn internal(e: impl std::fmt::Display) -> CliError {
        CliError::Internal(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Internal(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_workers(cli.workers);
    let result = match cli.command {
        Command::GenScenes(args) => gen_scenes(args),
        Command::GenQuestions(args) => gen_questions(args),
        Command::Exec(args) => exec(args),
        Command::Analyze(args) => analyze(args),
        Command::Audit(args) => run_audit(args),
        Command::Validate(args) => validate(args),
    };
    match result {
        Ok(()) => ExitCode::from(0),
        Err(CliError::Validation(detail)) => {
            emit_error("validation", &detail);
            ExitCode::from(1)
        }
        Err(CliError::Usage(detail)) => {
            emit_error("usage", &detail);
            ExitCode::from(2)
        }
        Err(CliError::Internal(detail)) => {
            emit_error("internal", &detail);
            ExitCode::from(3)
        }
    }
}

fn emit_error(kind: &str, detail: &str) {
    eprintln!("{}", serde_json::json!({ "error": kind, "detail": detail }));
}

fn emit_warning(detail: &str) {
    eprintln!("{}", serde_json::json!({ "warning": detail }));
}

#[cfg(feature = "parallel")]
fn configure_workers(workers: Option<usize>) {
    if let Some(n) = workers {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_workers(workers: Option<usize>) {
    if workers.is_some_and(|n| n > 1) {
        emit_warning("built without the parallel feature; running sequentially");
    }
}

fn parse_condition(s: &str) -> Result<Condition, String> {
    match s.to_ascii_lowercase().as_str() {
        "full" => Ok(Condition::Full),
        "a" => Ok(Condition::A),
        "b" => Ok(Condition::B),
        other => Err(format!(
            "unknown condition {other:?} (expected full, a, or b)"
        )),
    }
}

fn default_config_path(explicit: &Option<PathBuf>) -> Option<PathBuf> {
    explicit
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from))
}

/// Sampler configs load from JSON or `key = value` lines.
fn load_sampler_config(path: &Path) -> Result<SamplerConfig, CliError> {
    let content = fs::read_to_string(path)?;
    if content.trim_start().starts_with('{') {
        return serde_json::from_str(&content)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())));
    }
    let mut config = SamplerConfig::default();
    for (lineno, line) in content.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "{}:{}: expected key = value",
                path.display(),
                lineno + 1
            )));
        };
        let (key, value) = (key.trim(), value.trim());
        let bad =
            |e: String| CliError::Usage(format!("{}:{}: {key}: {e}", path.display(), lineno + 1));
        match key {
            "min_objects" => config.min_objects = value.parse().map_err(|e| bad(format!("{e}")))?,
            "max_objects" => config.max_objects = value.parse().map_err(|e| bad(format!("{e}")))?,
            "min_pairwise_distance" => {
                config.min_pairwise_distance = value.parse().map_err(|e| bad(format!("{e}")))?
            }
            "min_axis_margin" => {
                config.min_axis_margin = value.parse().map_err(|e| bad(format!("{e}")))?
            }
            "camera_jitter" => {
                config.camera_jitter = value.parse().map_err(|e| bad(format!("{e}")))?
            }
            "condition" => config.condition = parse_condition(value).map_err(bad)?,
            "seed" => config.seed = value.parse().map_err(|e| bad(format!("{e}")))?,
            "placement_attempts" => {
                config.placement_attempts = value.parse().map_err(|e| bad(format!("{e}")))?
            }
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }
    Ok(config)
}

fn load_generation_config(path: &Path) -> Result<GenerationConfig, CliError> {
    let content = fs::read_to_string(path)?;
    serde_json::from_str(&content).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn gen_scenes(args: GenScenesArgs) -> CliResult {
    let mut config = match default_config_path(&args.config) {
        Some(path) => load_sampler_config(&path)?,
        None => SamplerConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(condition) = args.condition {
        config.condition = condition;
    }

    if args.count == 0 {
        emit_warning("--count 0: writing an empty scene file");
    }
    let scenes = sample_scenes(args.count, &config).map_err(|e| match e {
        sceneq_core::sampler::SampleError::InvalidConfig(_) => CliError::Usage(e.to_string()),
        other => CliError::internal(other),
    })?;

    fs::create_dir_all(&args.out)?;
    let mut manifest = RunManifest::new(
        "gen-scenes",
        config.seed,
        serde_json::json!({ "count": args.count, "sampler": config }),
    );
    if args.split_files {
        for scene in &scenes {
            let path = args.out.join(format!("scene_{:06}.json", scene.scene_id));
            fs::write(&path, scene.to_json_string())?;
            manifest.record_output(&format!("scene_{:06}", scene.scene_id), &path)?;
        }
    } else {
        let path = args.out.join("scenes.jsonl");
        let mut w = BufWriter::new(fs::File::create(&path)?);
        for scene in &scenes {
            writeln!(w, "{}", scene.to_json_string())?;
        }
        w.flush()?;
        drop(w);
        manifest.record_output("scenes", &path)?;
    }
    manifest.write(&args.out)?;
    println!("wrote {} scenes to {}", scenes.len(), args.out.display());
    Ok(())
}

fn read_scenes(path: &Path) -> Result<Vec<SceneGraph>, CliError> {
    let file = if path.is_dir() {
        path.join("scenes.jsonl")
    } else {
        path.to_path_buf()
    };
    let reader = BufReader::new(
        fs::File::open(&file).map_err(|e| CliError::Usage(format!("{}: {e}", file.display())))?,
    );
    let mut scenes = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let scene = SceneGraph::from_json_str(&line)
            .map_err(|e| CliError::Validation(format!("{}:{}: {e}", file.display(), lineno + 1)))?;
        scenes.push(scene);
    }
    Ok(scenes)
}

fn read_questions(path: &Path) -> Result<Vec<QuestionInstance>, CliError> {
    let reader = BufReader::new(
        fs::File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
    );
    let mut questions = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let q: QuestionInstance = serde_json::from_str(&line)
            .map_err(|e| CliError::Validation(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        questions.push(q);
    }
    Ok(questions)
}

fn load_family_inputs(
    families: &Option<PathBuf>,
    synonyms: &Option<PathBuf>,
) -> Result<(Vec<QuestionFamily>, SynonymTable), CliError> {
    let family_list = match families {
        Some(path) => load_families(path).map_err(|e| CliError::Validation(e.to_string()))?,
        None => builtin_families(),
    };
    let table = match synonyms {
        Some(path) => {
            let content = fs::read_to_string(path)?;
            SynonymTable::parse(&content).map_err(|e| CliError::Validation(e.to_string()))?
        }
        None => builtin_synonyms(),
    };
    Ok((family_list, table))
}

fn gen_questions(args: GenQuestionsArgs) -> CliResult {
    let scenes = read_scenes(&args.scenes)?;
    if scenes.is_empty() {
        return Err(CliError::Validation("no scenes in input".into()));
    }
    let (families, synonyms) = load_family_inputs(&args.families, &args.synonyms)?;

    let mut config = match default_config_path(&args.config) {
        Some(path) => load_generation_config(&path)?,
        None => GenerationConfig::default(),
    };
    if let Some(per_image) = args.per_image {
        config.questions_per_image = per_image;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.no_balance {
        config.balancing_enabled = false;
    }

    let bundle = generate_dataset(&scenes, &families, &synonyms, &config)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    for scene_id in &bundle.stats.scene_starved {
        emit_warning(&format!("scene {scene_id} starved; skipped"));
    }

    fs::create_dir_all(&args.out)?;
    let questions_path = args.out.join("questions.jsonl");
    let mut w = BufWriter::new(fs::File::create(&questions_path)?);
    for q in &bundle.instances {
        writeln!(w, "{}", q.to_json_string())?;
    }
    w.flush()?;
    drop(w);
    let stats_path = args.out.join("stats.json");
    fs::write(
        &stats_path,
        serde_json::to_string_pretty(&bundle.stats).map_err(CliError::internal)?,
    )?;
    let splits_path = args.out.join("splits.json");
    fs::write(
        &splits_path,
        serde_json::to_string_pretty(&bundle.splits).map_err(CliError::internal)?,
    )?;

    let mut manifest = RunManifest::new(
        "gen-questions",
        config.seed,
        serde_json::to_value(&config).map_err(CliError::internal)?,
    );
    let scene_file = if args.scenes.is_dir() {
        args.scenes.join("scenes.jsonl")
    } else {
        args.scenes.clone()
    };
    manifest.record_input("scenes", &scene_file)?;
    match &args.families {
        Some(path) => manifest.record_input("families", path)?,
        None => manifest.record_input_label("families", "builtin"),
    }
    match &args.synonyms {
        Some(path) => manifest.record_input("synonyms", path)?,
        None => manifest.record_input_label("synonyms", "builtin"),
    }
    manifest.record_output("questions", &questions_path)?;
    manifest.record_output("stats", &stats_path)?;
    manifest.record_output("splits", &splits_path)?;
    manifest.write(&args.out)?;
    println!(
        "wrote {} questions over {} scenes to {}",
        bundle.instances.len(),
        scenes.len() - bundle.stats.scene_starved.len(),
        args.out.display()
    );
    Ok(())
}

fn read_single_scene(path: &Path) -> Result<SceneGraph, CliError> {
    let content = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    match SceneGraph::from_json_str(content.trim()) {
        Ok(scene) => Ok(scene),
        Err(_) => {
            let first = content
                .lines()
                .find(|l| !l.trim().is_empty())
                .ok_or_else(|| CliError::Validation("empty scene file".into()))?;
            SceneGraph::from_json_str(first).map_err(CliError::Validation)
        }
    }
}

fn relaxed_answer_strings(value: &RelaxedValue) -> Vec<String> {
    match value {
        RelaxedValue::ObjectSet(ids) => ids.iter().map(|id| format!("object:{id}")).collect(),
        RelaxedValue::Integers(s) => s.iter().map(u8::to_string).collect(),
        RelaxedValue::Booleans(s) => s
            .iter()
            .map(|b| if *b { "yes" } else { "no" }.to_string())
            .collect(),
        RelaxedValue::Sizes(s) => s.iter().map(|v| v.to_string()).collect(),
        RelaxedValue::Colors(s) => s.iter().map(|v| v.to_string()).collect(),
        RelaxedValue::Shapes(s) => s.iter().map(|v| v.to_string()).collect(),
        RelaxedValue::Materials(s) => s.iter().map(|v| v.to_string()).collect(),
    }
}

fn exec(args: ExecArgs) -> CliResult {
    let scene = read_single_scene(&args.scene)?;
    if scene.len() > 10 {
        return Err(CliError::Validation(
            "scene exceeds the ten-object bound".into(),
        ));
    }
    let program_text = fs::read_to_string(&args.program)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.program.display())))?;
    let program = Program::from_json_str(&program_text)
        .map_err(|e| CliError::Validation(format!("program: {e}")))?;
    if let Err(e) = typecheck(&program) {
        return Err(CliError::Validation(format!("typecheck: {e}")));
    }
    if args.relaxed {
        let value =
            execute_relaxed(&program, &scene).map_err(|e| CliError::Validation(e.to_string()))?;
        println!(
            "{}",
            serde_json::json!({ "answers": relaxed_answer_strings(&value) })
        );
        return Ok(());
    }
    match execute(&program, &scene) {
        Ok(answer) => {
            println!("{}", serde_json::json!({ "answer": answer.to_string() }));
            Ok(())
        }
        Err(e) => {
            let kind = match &e {
                sceneq_core::program::ExecFailure::IllPosed { .. } => "ill_posed",
                sceneq_core::program::ExecFailure::Type(_) => "type_error",
                sceneq_core::program::ExecFailure::UnknownObject(_) => "unknown_object",
            };
            emit_error(kind, &e.to_string());
            Err(CliError::Validation(e.to_string()))
        }
    }
}

fn analyze(args: AnalyzeArgs) -> CliResult {
    let scenes = read_scenes(&args.dataset.join("scenes.jsonl"))?;
    let questions = read_questions(&args.dataset.join("questions.jsonl"))?;
    let by_id: BTreeMap<u64, &SceneGraph> = scenes.iter().map(|s| (s.scene_id, s)).collect();
    let records =
        analyze_dataset(&questions, &by_id).map_err(|e| CliError::Validation(e.to_string()))?;
    let report = aggregate(&records);

    let out = args.out.clone().unwrap_or_else(|| args.dataset.clone());
    fs::create_dir_all(&out)?;
    let analysis_path = out.join("analysis.jsonl");
    let mut w = BufWriter::new(fs::File::create(&analysis_path)?);
    for record in &records {
        writeln!(
            w,
            "{}",
            serde_json::to_string(record).map_err(CliError::internal)?
        )?;
    }
    w.flush()?;
    drop(w);
    let report_path = out.join("report.json");
    fs::write(
        &report_path,
        serde_json::to_string_pretty(&report).map_err(CliError::internal)?,
    )?;

    let mut manifest = RunManifest::new("analyze", 0, serde_json::json!({ "csv": args.csv }));
    manifest.record_input("questions", &args.dataset.join("questions.jsonl"))?;
    manifest.record_input("scenes", &args.dataset.join("scenes.jsonl"))?;
    manifest.record_output("analysis", &analysis_path)?;
    manifest.record_output("report", &report_path)?;
    if args.csv {
        let csvs = [
            ("by_type.csv", histogram_csv("type", &report.by_type)),
            ("by_size.csv", histogram_csv("size", &report.by_size)),
            (
                "by_effective_size.csv",
                histogram_csv("effective_size", &report.by_effective_size),
            ),
            (
                "by_effective_size_no_same_attr.csv",
                histogram_csv("effective_size", &report.by_effective_size_no_same_attr),
            ),
            (
                "by_topology.csv",
                histogram_csv("topology", &report.by_topology),
            ),
            (
                "by_spatial_relation_count.csv",
                histogram_csv("spatial_relations", &report.by_spatial_relation_count),
            ),
        ];
        for (name, content) in csvs {
            let path = out.join(name);
            fs::write(&path, content)?;
            manifest.record_output(name, &path)?;
        }
    }
    manifest.write(&out)?;
    println!(
        "analyzed {} questions; absolute-spatial fraction {:.4}",
        records.len(),
        report.absolute_spatial_fraction
    );
    Ok(())
}

fn run_audit(args: AuditArgs) -> CliResult {
    let questions = read_questions(&args.dataset.join("questions.jsonl"))?;
    let splits_path = args
        .splits
        .clone()
        .unwrap_or_else(|| args.dataset.join("splits.json"));
    let splits: SplitAssignment = serde_json::from_str(
        &fs::read_to_string(&splits_path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", splits_path.display())))?,
    )
    .map_err(|e| CliError::Validation(format!("{}: {e}", splits_path.display())))?;

    let report =
        audit(&questions, &splits, args.margin).map_err(|e| CliError::Validation(e.to_string()))?;
    print!("{}", report.render_text());
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.dataset.join("audit.json"));
    fs::write(
        &out,
        serde_json::to_string_pretty(&report).map_err(CliError::internal)?,
    )?;
    Ok(())
}

fn validate(args: ValidateArgs) -> CliResult {
    let sampler_config = match default_config_path(&args.config) {
        Some(path) => load_sampler_config(&path)?,
        None => SamplerConfig::default(),
    };
    let scenes = read_scenes(&args.dataset.join("scenes.jsonl"))?;
    let questions = read_questions(&args.dataset.join("questions.jsonl"))?;
    let splits_path = args.dataset.join("splits.json");
    let splits: Option<SplitAssignment> = match fs::read_to_string(&splits_path) {
        Ok(content) => Some(
            serde_json::from_str(&content)
                .map_err(|e| CliError::Validation(format!("splits.json: {e}")))?,
        ),
        Err(_) => None,
    };

    let mut violations: Vec<String> = Vec::new();
    for scene in &scenes {
        for violation in validate_scene(scene, &sampler_config) {
            violations.push(format!(
                "scene {}: {}",
                scene.scene_id,
                serde_json::to_string(&violation).map_err(CliError::internal)?
            ));
        }
    }
    let by_id: BTreeMap<u64, &SceneGraph> = scenes.iter().map(|s| (s.scene_id, s)).collect();
    violations.extend(revalidate(&questions, &by_id));

    if let Some(splits) = &splits {
        let mut seen = BTreeMap::new();
        for (name, ids) in [
            ("train", &splits.train),
            ("val", &splits.val),
            ("test", &splits.test),
        ] {
            for id in ids {
                if let Some(prev) = seen.insert(*id, name) {
                    violations.push(format!("scene {id} assigned to both {prev} and {name}"));
                }
            }
        }
        for scene in &scenes {
            if !seen.contains_key(&scene.scene_id)
                && questions.iter().any(|q| q.scene_id == scene.scene_id)
            {
                violations.push(format!("scene {} missing from splits", scene.scene_id));
            }
        }
    }
    for (i, q) in questions.iter().enumerate() {
        if q.question_id != i as u64 {
            violations.push(format!(
                "question ids not dense at position {i} (found {})",
                q.question_id
            ));
            break;
        }
    }

    if violations.is_empty() {
        println!(
            "dataset valid: {} scenes, {} questions",
            scenes.len(),
            questions.len()
        );
        Ok(())
    } else {
        for v in violations.iter().take(50) {
            emit_error("validation", v);
        }
        println!("dataset INVALID: {} violation(s)", violations.len());
        Err(CliError::Validation(format!(
            "{} violation(s)",
            violations.len()
        )))
    }
}
