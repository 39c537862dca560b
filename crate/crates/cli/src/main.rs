use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use vbm_core::dataset::{self, ObjectClass, SelectMode, SelectionQuery};
use vbm_core::detector::{parse_profiles, DetectorProfile};
use vbm_core::random::rng_from_seed;
use vbm_core::scenario::{
    emit_outputs, irs_csv, latency_csv, manifest_json, rate_map_csv, run_irs_nmse, run_latency_sweep, run_rate_map,
    run_survey, summary_csv, OutputFile, ScenarioConfig,
};

#[derive(Parser)]
#[command(name = "vbm", version, about = "Vision-aided beam management experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML scenario configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Per-position rates over the service area, plus random-drop means.
    RateMap(Common),
    /// Average latency against transmit array size.
    LatencySweep(Common),
    /// IRS channel reconstruction error against IRS size.
    IrsNmse(Common),
    /// Corpus selection and label tools.
    #[command(subcommand)]
    Dataset(DatasetCommand),
}

#[derive(Args, Clone)]
struct CorpusArgs {
    #[command(flatten)]
    common: Common,
    /// Corpus root; overrides `dataset.input`.
    #[arg(long = "in")]
    input: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Filter records by class, head count and distance.
    Select {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Comma-separated class indices (0 person, 1 phone, 2 laptop).
        #[arg(long, value_delimiter = ',')]
        active_classes: Option<Vec<usize>>,
        #[arg(long)]
        max_people: Option<i64>,
        #[arg(long)]
        max_dist: Option<f64>,
        /// Also reject records holding classes outside the active set.
        #[arg(long)]
        strict: bool,
    },
    /// Phone boxes in the resized frame of every person crop.
    MakeLabels(CorpusArgs),
    /// Write a synthetic corpus.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        count: Option<usize>,
    },
}

struct Loaded {
    cfg: ScenarioConfig,
    base: PathBuf,
    profiles: Vec<DetectorProfile>,
}

fn load(common: &Common) -> Result<Loaded> {
    let (mut cfg, base) = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let cfg = ScenarioConfig::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
            (cfg, path.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (ScenarioConfig::default(), PathBuf::from(".")),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let profiles = match &cfg.profile_file {
        Some(p) => {
            let path = base.join(p);
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            parse_profiles(&text)?
        }
        None => Vec::new(),
    };
    Ok(Loaded { cfg, base, profiles })
}

fn finish(command: &str, cfg: &ScenarioConfig, mut files: Vec<OutputFile>, out: &Path) -> Result<()> {
    let manifest = manifest_json(command, cfg, &files);
    files.push(OutputFile::new("manifest.json", manifest));
    emit_outputs(&files, out)?;
    for f in &files {
        println!("wrote {}", out.join(&f.name).display());
    }
    Ok(())
}

fn corpus_dir(l: &Loaded, arg: &Option<PathBuf>) -> PathBuf {
    arg.clone().unwrap_or_else(|| l.base.join(&l.cfg.dataset.input))
}

fn selection_csv(records: &[dataset::SampleRecord]) -> String {
    let mut s = String::from("id,people,phones,laptops,max_distance_m\n");
    for r in records {
        let max_d = r.objects.iter().filter_map(|o| o.distance_m).fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))));
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.id,
            r.count(ObjectClass::Person),
            r.count(ObjectClass::Phone),
            r.count(ObjectClass::Laptop),
            max_d.map_or(String::new(), |d| d.to_string())
        );
    }
    s
}

fn crop_labels_csv(records: &[dataset::SampleRecord], size: (f64, f64)) -> String {
    let mut s = String::from("source_id,person_index,phone_index,x_min,y_min,x_max,y_max\n");
    for r in records {
        for label in dataset::make_crop_labels(r, size) {
            for (k, b) in label.phones.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    label.source_id, label.person_index, k, b.x_min, b.y_min, b.x_max, b.y_max
                );
            }
        }
    }
    s
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::RateMap(c) => {
            let l = load(&c)?;
            let map = run_rate_map(&l.cfg, &l.profiles)?;
            let summary = run_survey(&l.cfg, &l.profiles)?;
            let files = vec![
                OutputFile::new("rate_map.csv", rate_map_csv(&map)),
                OutputFile::new("summary.csv", summary_csv(&summary)),
            ];
            finish("rate-map", &l.cfg, files, &c.out)
        }
        Command::LatencySweep(c) => {
            let l = load(&c)?;
            let rows = run_latency_sweep(&l.cfg, &l.cfg.latency.antenna_counts, &l.profiles)?;
            finish("latency-sweep", &l.cfg, vec![OutputFile::new("latency.csv", latency_csv(&rows))], &c.out)
        }
        Command::IrsNmse(c) => {
            let l = load(&c)?;
            let rows = run_irs_nmse(&l.cfg, &l.cfg.irs.element_counts, &l.profiles)?;
            finish("irs-nmse", &l.cfg, vec![OutputFile::new("irs_nmse.csv", irs_csv(&rows))], &c.out)
        }
        Command::Dataset(DatasetCommand::Select { corpus, active_classes, max_people, max_dist, strict }) => {
            let mut l = load(&corpus.common)?;
            let d = &mut l.cfg.dataset;
            if let Some(a) = active_classes {
                d.active_classes = a;
            }
            if let Some(m) = max_people {
                d.max_people = m;
            }
            if let Some(m) = max_dist {
                d.max_dist_m = m;
            }
            if strict {
                d.mode = SelectMode::OnlyContain;
            }
            l.cfg.validate()?;
            let d = &l.cfg.dataset;
            let classes: Vec<ObjectClass> = d.active_classes.iter().filter_map(|&i| ObjectClass::from_index(i)).collect();
            let max_people = usize::try_from(d.max_people).ok();
            let mut q = SelectionQuery::new(&classes, max_people, d.max_dist_m)?;
            q.mode = d.mode;
            let records = dataset::load_corpus(&corpus_dir(&l, &corpus.input))?;
            let kept = dataset::select(&records, &q);
            finish("dataset select", &l.cfg, vec![OutputFile::new("selection.csv", selection_csv(&kept))], &corpus.common.out)
        }
        Command::Dataset(DatasetCommand::MakeLabels(corpus)) => {
            let l = load(&corpus.common)?;
            let records = dataset::load_corpus(&corpus_dir(&l, &corpus.input))?;
            let [w, h] = l.cfg.dataset.crop_size;
            let csv = crop_labels_csv(&records, (w, h));
            finish("dataset make-labels", &l.cfg, vec![OutputFile::new("crop_labels.csv", csv)], &corpus.common.out)
        }
        Command::Dataset(DatasetCommand::Synth { common, count }) => {
            let l = load(&common)?;
            let n = count.unwrap_or(l.cfg.dataset.synth_records);
            if n == 0 {
                bail!("--count must be positive");
            }
            dataset::write_synthetic_corpus(&common.out, n, &mut rng_from_seed(l.cfg.seed))?;
            println!("wrote {n} records under {}", common.out.display());
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
