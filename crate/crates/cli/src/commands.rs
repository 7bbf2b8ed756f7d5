//! Subcommand implementations.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use scenestat_core::complexity::{bdm_pattern, sample_ctm, BdmParams, ComplexityError, CtmParams, CtmTable};
use scenestat_core::grid::{load_pgm, natural_randomness_in, scan_corpus, FrequencyTable, GrayImage, GridError};
use scenestat_core::stats::{mediation, pearson, subjective_randomness_in, StatsError};
use scenestat_core::stimuli::{sample_stimuli, StimulusError, StimulusSet};
use scenestat_core::Pattern;
use scenestat_service::AggregateTable;

use crate::manifest::{default_path, RunManifest};
use crate::svg;
use crate::synth::smoothed_noise;
use crate::tables::{ScoreRow, ScoreTable};
use crate::{
    AnalyzeArgs, CliError, Command, CtmArgs, SampleArgs, ScanArgs, ScoreArgs, ServeArgs, SynthArgs,
};

pub fn execute(command: Command) -> Result<(), CliError> {
    let command = absolutize(command)?;
    match command {
        Command::Scan(a) => scan(a),
        Command::Ctm(a) => ctm(a),
        Command::Score(a) => score(a),
        Command::Sample(a) => sample(a),
        Command::Analyze(a) => analyze(a),
        Command::Serve(a) => serve(a),
        Command::Synth(a) => synth(a),
        Command::Rerun(a) => {
            let m = RunManifest::load(&a.manifest)?;
            if matches!(m.command, Command::Rerun(_)) {
                return Err(CliError::Input(format!(
                    "{}: manifest records a rerun",
                    a.manifest.display()
                )));
            }
            execute(m.command)
        }
    }
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::Input(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(fail)?;
    }
    let mut f = fs::File::create(path).map_err(fail)?;
    f.write_all(bytes).map_err(fail)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn abs(p: &mut PathBuf) -> Result<(), CliError> {
    *p = std::path::absolute(&*p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
    Ok(())
}

fn abs_opt(p: &mut Option<PathBuf>) -> Result<(), CliError> {
    match p {
        Some(p) => abs(p),
        None => Ok(()),
    }
}

/// Makes every path absolute so a manifest replays from any directory.
fn absolutize(mut command: Command) -> Result<Command, CliError> {
    match &mut command {
        Command::Scan(a) => {
            abs(&mut a.corpus)?;
            abs(&mut a.out)?;
            abs_opt(&mut a.manifest)?;
        }
        Command::Ctm(a) => {
            abs(&mut a.out)?;
            abs_opt(&mut a.manifest)?;
        }
        Command::Score(a) => {
            abs(&mut a.freq)?;
            abs(&mut a.ctm)?;
            abs_opt(&mut a.stimuli)?;
            abs(&mut a.out)?;
            abs_opt(&mut a.manifest)?;
        }
        Command::Sample(a) => {
            abs(&mut a.freq)?;
            abs(&mut a.out)?;
            abs_opt(&mut a.manifest)?;
        }
        Command::Analyze(a) => {
            abs(&mut a.scores)?;
            abs(&mut a.aggregates)?;
            abs(&mut a.out_dir)?;
            abs_opt(&mut a.manifest)?;
        }
        Command::Serve(a) => {
            abs(&mut a.data_dir)?;
            abs_opt(&mut a.static_dir)?;
            abs_opt(&mut a.manifest)?;
        }
        Command::Synth(a) => {
            abs(&mut a.out)?;
            abs_opt(&mut a.manifest)?;
        }
        Command::Rerun(a) => abs(&mut a.manifest)?,
    }
    Ok(command)
}

/// Image paths of a corpus: the sorted `.pgm` files of a directory, or the
/// lines of a list file (relative entries resolve against the list's
/// directory; blank lines and `#` comments are skipped).
fn corpus_paths(corpus: &Path) -> Result<Vec<PathBuf>, CliError> {
    let input = |e: std::io::Error| CliError::Input(format!("{}: {e}", corpus.display()));
    let meta = fs::metadata(corpus).map_err(input)?;
    let mut paths = Vec::new();
    if meta.is_dir() {
        for entry in fs::read_dir(corpus).map_err(input)? {
            let path = entry.map_err(input)?.path();
            let is_pgm = path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
            if is_pgm && path.is_file() {
                paths.push(path);
            }
        }
        paths.sort();
    } else {
        let base = corpus.parent().unwrap_or(Path::new("."));
        for line in read_text(corpus)?.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            paths.push(base.join(line));
        }
    }
    if paths.is_empty() {
        return Err(CliError::Input(format!(
            "corpus {} contains no PGM images",
            corpus.display()
        )));
    }
    Ok(paths)
}

fn grid_error(e: GridError) -> CliError {
    match e {
        GridError::Unobserved(_) => CliError::Data(e.to_string()),
        _ => CliError::Input(e.to_string()),
    }
}

fn complexity_error(e: ComplexityError) -> CliError {
    match e {
        ComplexityError::InsufficientSamples { .. } => CliError::Data(e.to_string()),
        _ => CliError::Input(e.to_string()),
    }
}

fn stats_error(e: StatsError) -> CliError {
    CliError::Data(e.to_string())
}

fn scan(a: ScanArgs) -> Result<(), CliError> {
    let paths = corpus_paths(&a.corpus)?;
    let images = paths
        .iter()
        .map(|p| {
            let bytes = fs::read(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            load_pgm(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<GrayImage>, _>>()?;
    let table = scan_corpus(&images, a.k, a.mode).map_err(grid_error)?;
    write_file(&a.out, table.to_csv().as_bytes())?;

    let mut m = RunManifest::new(Command::Scan(a.clone()));
    m.corpus = Some(a.corpus.clone());
    m.k = Some(a.k);
    m.mode = Some(a.mode);
    m.inputs = paths;
    m.outputs = vec![a.out.clone()];
    m.write(&default_path(&a.out, &a.manifest))
}

fn ctm_params(a: &CtmArgs) -> CtmParams {
    CtmParams {
        side: a.k,
        n_states: a.states,
        n_samples: a.samples,
        max_steps: a.steps,
        seed: a.seed,
    }
}

fn ctm(a: CtmArgs) -> Result<(), CliError> {
    let params = ctm_params(&a);
    let table = sample_ctm(&params).map_err(complexity_error)?;
    write_file(&a.out, table.to_csv().as_bytes())?;

    let mut m = RunManifest::new(Command::Ctm(a.clone()));
    m.k = Some(a.k);
    m.ctm = Some(params);
    m.outputs = vec![a.out.clone()];
    m.write(&default_path(&a.out, &a.manifest))
}

fn load_freq(path: &Path) -> Result<FrequencyTable, CliError> {
    FrequencyTable::from_csv(&read_text(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_stimuli(path: &Path) -> Result<StimulusSet, CliError> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Input(format!("{}: not a stimulus set: {e}", path.display())))
}

fn score(a: ScoreArgs) -> Result<(), CliError> {
    let freq = load_freq(&a.freq)?;
    let table = CtmTable::from_csv(&read_text(&a.ctm)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.ctm.display())))?;
    let patterns: Vec<Pattern> = match &a.stimuli {
        Some(path) => load_stimuli(path)?.patterns().to_vec(),
        None => freq.iter().map(|(p, _)| p).collect(),
    };
    if let Some(p) = patterns.iter().find(|p| p.side() != freq.side()) {
        return Err(CliError::Input(format!(
            "stimulus side {} does not match frequency table side {}",
            p.side(),
            freq.side()
        )));
    }
    if a.alpha == 0.0 {
        let unobserved: Vec<String> = patterns
            .iter()
            .filter(|p| freq.count(p) == 0)
            .map(|p| p.to_hex())
            .collect();
        if !unobserved.is_empty() {
            return Err(CliError::Data(format!(
                "{} pattern(s) never observed in the corpus and alpha = 0: {}",
                unobserved.len(),
                unobserved.join(", ")
            )));
        }
    }
    let params = BdmParams { block: a.block };
    let rows = patterns
        .iter()
        .map(|p| {
            Ok(ScoreRow {
                pattern: *p,
                complexity_bits: bdm_pattern(p, &table, params).map_err(complexity_error)?,
                natural_randomness: natural_randomness_in(p, &freq, a.alpha, a.log_base)
                    .map_err(grid_error)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let out = ScoreTable {
        side: freq.side(),
        alpha: a.alpha,
        block: a.block,
        log_base: a.log_base,
        rows,
    };
    write_file(&a.out, out.to_csv().as_bytes())?;

    let mut m = RunManifest::new(Command::Score(a.clone()));
    m.k = Some(freq.side());
    m.mode = Some(freq.mode());
    m.alpha = Some(a.alpha);
    m.ctm = Some(CtmParams {
        side: table.side(),
        n_states: table.meta().n_states,
        n_samples: table.meta().n_samples,
        max_steps: table.meta().max_steps,
        seed: table.meta().seed,
    });
    m.inputs = [Some(a.freq.clone()), Some(a.ctm.clone()), a.stimuli.clone()]
        .into_iter()
        .flatten()
        .collect();
    m.outputs = vec![a.out.clone()];
    m.write(&default_path(&a.out, &a.manifest))
}

fn sample(a: SampleArgs) -> Result<(), CliError> {
    let freq = load_freq(&a.freq)?;
    let mut set = sample_stimuli(&freq, a.n, a.seed).map_err(|e| match e {
        StimulusError::NotEnoughPatterns { .. } => CliError::Data(e.to_string()),
        other => CliError::Input(other.to_string()),
    })?;
    let stem = a
        .freq
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    set.corpus = a.corpus_id.clone().unwrap_or_else(|| stem.clone());
    if let Some(id) = &a.id {
        set.id = id.clone();
    }
    let mut text = serde_json::to_string_pretty(&set).expect("stimulus set serializes");
    text.push('\n');
    write_file(&a.out, text.as_bytes())?;

    let mut m = RunManifest::new(Command::Sample(a.clone()));
    m.k = Some(freq.side());
    m.mode = Some(freq.mode());
    m.stimulus_seed = Some(a.seed);
    m.inputs = vec![a.freq.clone()];
    m.outputs = vec![a.out.clone()];
    m.write(&default_path(&a.out, &a.manifest))
}

fn analyze(a: AnalyzeArgs) -> Result<(), CliError> {
    let scores = ScoreTable::from_csv(&read_text(&a.scores)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.scores.display())))?;
    let aggregates = AggregateTable::from_csv(&read_text(&a.aggregates)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.aggregates.display())))?;
    if scores.side != aggregates.side {
        return Err(CliError::Input(format!(
            "score side {} does not match aggregate side {}",
            scores.side, aggregates.side
        )));
    }

    let mut complexity = Vec::new();
    let mut natural = Vec::new();
    let mut subjective = Vec::new();
    let mut joined = String::from("pattern_hex,complexity_bits,natural_randomness,n_random,n_total\n");
    for agg in &aggregates.rows {
        let row = scores
            .rows
            .iter()
            .find(|r| r.pattern == agg.pattern)
            .ok_or_else(|| {
                CliError::Input(format!(
                    "pattern {} has judgments but no score",
                    agg.pattern.to_hex()
                ))
            })?;
        subjective.push(subjective_randomness_in(agg, scores.log_base).map_err(stats_error)?);
        complexity.push(row.complexity_bits);
        natural.push(row.natural_randomness);
        joined.push_str(&format!(
            "{},{},{},{},{}\n",
            agg.pattern.to_hex(),
            row.complexity_bits,
            row.natural_randomness,
            agg.n_random,
            agg.n_total
        ));
    }

    let pairs: [(&'static str, &[f64], &'static str, &[f64]); 3] = [
        ("complexity_bits", &complexity, "natural_randomness", &natural),
        ("complexity_bits", &complexity, "subjective_randomness", &subjective),
        ("natural_randomness", &natural, "subjective_randomness", &subjective),
    ];
    let mut corr = String::from("# subjective_smoothing=add-half\nx,y,n,r,t,p\n");
    for (xn, x, yn, y) in pairs {
        let c = pearson(x, y).map_err(stats_error)?;
        corr.push_str(&format!("{xn},{yn},{},{},{},{}\n", c.n, c.r, c.t, c.p));
    }
    let report = mediation(&complexity, &natural, &subjective).map_err(|e| match e {
        StatsError::Collinear { column } => CliError::Data(format!(
            "design matrix is rank deficient at column {:?}",
            match column.as_str() {
                "predictor" => "complexity_bits",
                "mediator" => "natural_randomness",
                other => other,
            }
        )),
        other => stats_error(other),
    })?;

    let dir = &a.out_dir;
    let report_path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    write_file(&report_path, text.as_bytes())?;
    let corr_path = dir.join("correlations.csv");
    write_file(&corr_path, corr.as_bytes())?;
    let joined_path = dir.join("analysis_input.csv");
    write_file(&joined_path, joined.as_bytes())?;
    let natural_svg = dir.join("scatter_natural.svg");
    write_file(
        &natural_svg,
        svg::scatter(
            &natural,
            &subjective,
            "natural randomness",
            "subjective randomness",
            "Subjective vs natural randomness",
        )
        .as_bytes(),
    )?;
    let complexity_svg = dir.join("scatter_complexity.svg");
    write_file(
        &complexity_svg,
        svg::scatter(
            &complexity,
            &subjective,
            "BDM complexity (bits)",
            "subjective randomness",
            "Subjective randomness vs complexity",
        )
        .as_bytes(),
    )?;

    let mut m = RunManifest::new(Command::Analyze(a.clone()));
    m.k = Some(scores.side);
    m.alpha = Some(scores.alpha);
    m.inputs = vec![a.scores.clone(), a.aggregates.clone()];
    m.outputs = vec![report_path, corr_path, joined_path, natural_svg, complexity_svg];
    m.notes
        .insert("subjective_smoothing".into(), "add-half".into());
    m.notes.insert(
        "mediation".into(),
        "predictor=complexity_bits mediator=natural_randomness outcome=subjective_randomness".into(),
    );
    m.write(&a.manifest.clone().unwrap_or_else(|| dir.join("manifest.json")))
}

fn serve(a: ServeArgs) -> Result<(), CliError> {
    if !a.data_dir.is_dir() {
        return Err(CliError::Input(format!(
            "data directory {} does not exist",
            a.data_dir.display()
        )));
    }
    let mut m = RunManifest::new(Command::Serve(a.clone()));
    m.outputs = vec![a.data_dir.clone()];
    m.write(
        &a.manifest
            .clone()
            .unwrap_or_else(|| a.data_dir.join("serve.manifest.json")),
    )?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Input(format!("cannot start runtime: {e}")))?;
    let config = scenestat_service::Config {
        addr: a.addr,
        data_dir: a.data_dir,
        master_seed: a.seed,
        static_dir: a.static_dir,
    };
    runtime
        .block_on(scenestat_service::serve(config))
        .map_err(|e| CliError::Input(e.to_string()))
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    if a.size == 0 {
        return Err(CliError::Input("--size must be positive".into()));
    }
    let mut outputs = Vec::with_capacity(a.n);
    for i in 0..a.n {
        let img = smoothed_noise(a.seed, i as u64, a.size, a.radius, a.passes);
        let path = a.out.join(format!("img_{i:03}.pgm"));
        write_file(&path, &img.to_pgm_p5())?;
        outputs.push(path);
    }
    let mut m = RunManifest::new(Command::Synth(a.clone()));
    m.outputs = outputs;
    m.write(
        &a.manifest
            .clone()
            .unwrap_or_else(|| a.out.join("synth.manifest.json")),
    )
}
