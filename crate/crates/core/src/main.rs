use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mcmask::eval::{energy_analysis, evaluate, evaluate_best_reference, selection_stats, EvalConfig};
use mcmask::io::{self, Checkpoint, Manifest, Split, TrainingMeta};
use mcmask::metrics::DEFAULT_FILTER_LEN;
use mcmask::net::{NetConfig, Precision};
use mcmask::scene::{simulate_clip, SceneConfig, TrainingClip};
use mcmask::signal::{MultiChannelWaveform, StftConfig};
use mcmask::train::{enhance_mixture, input_reference, train, MethodPolicy, ReferencePolicy, TrainConfig};
use mcmask::{Error, Result};

#[derive(Parser)]
#[command(name = "mcmask", version, about = "Multi-channel complex masking for speech enhancement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate clips and write WAVs, DOA tracks and a manifest.
    Simulate(SimulateArgs),
    /// Train a mask estimator on the clips of a manifest.
    Train(TrainArgs),
    /// Enhance one multi-channel recording.
    Enhance(EnhanceArgs),
    /// Bucketed out-SI-SDR / out-SDR report.
    Evaluate(EvaluateArgs),
    /// Energy of the most and least energetic masked channel.
    AnalyzeEnergy(EnergyArgs),
    /// How often each channel is picked as the reference.
    SelectionStats(SelectionArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    SmLeft,
    SmRight,
    MmLeft,
    MmRight,
    SmFixedOracle,
    MmAutoIn,
    MmAutoOut,
}

impl Method {
    fn policy(self) -> MethodPolicy {
        match self {
            Method::SmLeft => MethodPolicy::SM_LEFT,
            Method::SmRight => MethodPolicy::SM_RIGHT,
            Method::MmLeft => MethodPolicy::MM_LEFT,
            Method::MmRight => MethodPolicy::MM_RIGHT,
            Method::SmFixedOracle => MethodPolicy::SM_FIXED_ORACLE,
            Method::MmAutoIn => MethodPolicy::MM_AUTO_IN,
            Method::MmAutoOut => MethodPolicy::MM_AUTO_OUT,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Dev,
    All,
}

impl SplitArg {
    fn split(self) -> Option<Split> {
        match self {
            SplitArg::Train => Some(Split::Train),
            SplitArg::Dev => Some(Split::Dev),
            SplitArg::All => None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    F32,
    F64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scene configuration (JSON); defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 8)]
    clips: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Share of clips, taken from the end, tagged as dev.
    #[arg(long, default_value_t = 0.25)]
    dev_fraction: f64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long, default_value_t = 45)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 0.99)]
    decay: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    f_hidden: usize,
    #[arg(long, default_value_t = 32)]
    t_hidden: usize,
    #[arg(long, value_enum, default_value = "f64")]
    precision: PrecisionArg,
    #[arg(long, value_enum, default_value = "train")]
    split: SplitArg,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss CSV; defaults next to the checkpoint.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Per-step selected-channel CSV; defaults next to the checkpoint.
    #[arg(long)]
    selection_log: Option<PathBuf>,
}

#[derive(Args)]
struct EnhanceArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// Multi-channel mixture WAV.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    doa: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// Clean references; needed only by sm-fixed-oracle.
    #[arg(long)]
    refs: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value = "dev")]
    split: SplitArg,
    #[arg(long, default_value_t = DEFAULT_FILTER_LEN)]
    sdr_filter_len: usize,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, value_enum)]
    method: Method,
    /// Score against whichever clean channel maximises out-SI-SDR.
    #[arg(long)]
    best_reference: bool,
    /// Optional per-clip CSV.
    #[arg(long)]
    per_clip: Option<PathBuf>,
}

#[derive(Args)]
struct EnergyArgs {
    #[command(flatten)]
    data: DatasetArgs,
}

#[derive(Args)]
struct SelectionArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, value_enum, default_value = "mm-auto-out")]
    method: Method,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Train(a) => run_train(a),
        Command::Enhance(a) => run_enhance(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::AnalyzeEnergy(a) => run_energy(a),
        Command::SelectionStats(a) => run_selection(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut scene = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            serde_json::from_str::<SceneConfig>(&text)
                .map_err(|e| Error::Parse { path: path.clone(), message: e.to_string() })?
        }
        None => SceneConfig::default(),
    };
    scene.seed = a.seed;
    scene.validate()?;
    if !(0.0..=1.0).contains(&a.dev_fraction) {
        return Err(Error::Config(format!("dev fraction {} outside [0, 1]", a.dev_fraction)));
    }
    let dev = (a.clips as f64 * a.dev_fraction).round() as u64;
    let clips = (0..a.clips)
        .map(|i| {
            let split = if i >= a.clips - dev { Split::Dev } else { Split::Train };
            simulate_clip(&scene, i).map(|c| (c, split))
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = io::export_clips(&a.out, &clips, Some(scene))?;
    println!("wrote {} clips ({} dev) to {}", manifest.records.len(), dev, a.out.display());
    Ok(())
}

fn load_split(manifest: &Path, split: SplitArg) -> Result<Vec<TrainingClip>> {
    let clips = Manifest::load(manifest)?.load_clips(split.split())?;
    if clips.is_empty() {
        return Err(Error::InvalidInput(format!("{} has no clips in the requested split", manifest.display())));
    }
    Ok(clips)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn run_train(a: TrainArgs) -> Result<()> {
    let clips = load_split(&a.manifest, a.split)?;
    let policy = a.method.policy();
    let channels = clips[0].channels();
    let stft = StftConfig { sample_rate: clips[0].sample_rate(), ..StftConfig::default() };
    let net = NetConfig::new(channels, stft.freq_bins(), policy.output_channels(channels)).with_hidden(a.f_hidden, a.t_hidden);
    let cfg = TrainConfig {
        epochs: a.epochs,
        lr: a.lr,
        lr_decay: a.decay,
        seed: a.seed,
        precision: match a.precision {
            PrecisionArg::F32 => Precision::F32,
            PrecisionArg::F64 => Precision::F64,
        },
        stft,
        ..TrainConfig::default()
    };
    let outcome = train(&clips, policy, net, &cfg)?;
    let meta = TrainingMeta {
        epoch: a.epochs as u32,
        lr: outcome.history.last().map_or(a.lr, |h| h.lr),
        seed: a.seed,
    };
    io::save_checkpoint(&a.out, &Checkpoint { params: outcome.params, optimizer: Some(outcome.optimizer), meta })?;
    let history = a.history.unwrap_or_else(|| sibling(&a.out, "_history.csv"));
    let selections = a.selection_log.unwrap_or_else(|| sibling(&a.out, "_selections.csv"));
    io::write_history_csv(&history, &outcome.history)?;
    io::write_selection_log_csv(&selections, &outcome.selections)?;
    if let Some(last) = outcome.history.last() {
        println!("{policy}: {} epochs on {} clips, final mean loss {:.4} dB", a.epochs, clips.len(), last.mean_loss);
    }
    Ok(())
}

fn run_enhance(a: EnhanceArgs) -> Result<()> {
    let ckpt = io::load_checkpoint(&a.ckpt)?;
    let mixture = io::read_wav(&a.input)?;
    let doa = io::read_doa_csv(&a.doa)?;
    let policy = a.method.policy();
    let oracle = match (policy.reference, &a.refs) {
        (ReferencePolicy::OracleInputFixed, Some(refs)) => {
            let clip = TrainingClip::from_parts("input", mixture.clone(), io::read_wav(refs)?, doa.clone())?;
            Some(input_reference(&clip)?.channel)
        }
        (ReferencePolicy::OracleInputFixed, None) => {
            return Err(Error::Config(format!("{policy} needs --refs to pick its input channel")));
        }
        _ => None,
    };
    let stft = StftConfig { sample_rate: mixture.sample_rate(), ..StftConfig::default() };
    let out = enhance_mixture(&mixture, &doa, &ckpt.params, policy, oracle, &stft)?;
    io::write_wav(&a.out, &MultiChannelWaveform::new(vec![out.waveform], mixture.sample_rate())?)
}

struct Loaded {
    ckpt: Checkpoint,
    clips: Vec<TrainingClip>,
    cfg: EvalConfig,
}

fn load_eval(d: &DatasetArgs) -> Result<Loaded> {
    let ckpt = io::load_checkpoint(&d.ckpt)?;
    let clips = load_split(&d.manifest, d.split)?;
    let stft = StftConfig { sample_rate: clips[0].sample_rate(), ..StftConfig::default() };
    Ok(Loaded { ckpt, clips, cfg: EvalConfig { stft, sdr_filter_len: d.sdr_filter_len } })
}

fn run_evaluate(a: EvaluateArgs) -> Result<()> {
    let l = load_eval(&a.data)?;
    let policy = a.method.policy();
    let report = if a.best_reference {
        evaluate_best_reference(&l.clips, &l.ckpt.params, policy, &l.cfg)?
    } else {
        evaluate(&l.clips, &l.ckpt.params, policy, &l.cfg)?
    };
    io::write_metrics_csv(&a.data.report, &report)?;
    if let Some(path) = &a.per_clip {
        io::write_clip_metrics_csv(path, &report)?;
    }
    println!(
        "{}: {} clips, out-SI-SDR {:.4} dB, out-SDR {:.4} dB",
        report.method,
        report.records.len(),
        report.mean_out_si_sdr(),
        report.mean_out_sdr()
    );
    Ok(())
}

fn run_energy(a: EnergyArgs) -> Result<()> {
    let l = load_eval(&a.data)?;
    let energy = energy_analysis(&l.clips, &l.ckpt.params, &l.cfg)?;
    io::write_energy_csv(&a.data.report, &energy)
}

fn run_selection(a: SelectionArgs) -> Result<()> {
    let l = load_eval(&a.data)?;
    let stats = selection_stats(&l.clips, &l.ckpt.params, a.method.policy(), &l.cfg)?;
    io::write_selection_stats_csv(&a.data.report, &stats)
}
