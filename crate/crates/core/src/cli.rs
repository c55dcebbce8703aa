//! `manifold-seg` command line.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::consensus::{consensus_cluster, ConsensusParams};
use crate::error::{Error, Result};
use crate::evalstats::{
    class_dice, generate_phantom, table_correlations, CorrelationMethod, LesionTable, PhantomSpec,
};
use crate::io::{
    check_config_ranges, encode_pgm, encode_ppm, parse_manifest, read_embedding_csv,
    read_labelmap_csv, read_mpv_file, write_clusters_csv, write_embedding_csv, write_labelmap_csv,
    write_labels_csv, write_mpv_file, write_report_csv, ChannelSource,
};
use crate::manifold::Method;
use crate::param_maps::{compute_adc_map, compute_t2_map, AcquisitionSeries};
use crate::pipeline::{
    normalize_features, render_embedded_image, run_embedding, run_pipeline, stack_volumes,
    GraphPolicy, Normalization, PipelineConfig, TissueClass,
};
use crate::volume::{Mask, ParametricVolume};

pub const THREADS_ENV: &str = "MANIFOLD_SEG_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "manifold-seg",
    version,
    about = "Multiparametric MRI tissue segmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit ADC / T2 maps from a CSV list of acquisition frames.
    FitMaps(FitMapsArgs),
    /// Embed the masked voxels of an MPV file.
    Embed(EmbedArgs),
    /// Consensus clustering of an embedding CSV.
    Cluster(ClusterArgs),
    /// Full segmentation of a study manifest.
    Pipeline(PipelineArgs),
    /// Write a synthetic stroke phantom with its ground truth.
    Phantom(PhantomArgs),
    /// Table correlations or label map agreement.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct FitMapsArgs {
    /// CSV with columns `series,control,source`; series is `dwi` or `t2`,
    /// source is `file.mpv#channel` relative to the CSV.
    #[arg(long)]
    series: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Mask volume as `file.mpv#channel`.
    #[arg(long)]
    mask: Option<String>,
}

#[derive(Args, Debug, Clone, Copy)]
struct GraphArgs {
    /// Embed only the largest neighbor-graph component.
    #[arg(long, conflicts_with = "strict_graph")]
    largest_component: bool,
    /// Fail on a disconnected neighbor graph.
    #[arg(long)]
    strict_graph: bool,
}

impl GraphArgs {
    fn policy(&self) -> Option<GraphPolicy> {
        if self.largest_component {
            Some(GraphPolicy::LargestComponent)
        } else if self.strict_graph {
            Some(GraphPolicy::Strict)
        } else {
            None
        }
    }
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[arg(long)]
    input: PathBuf,
    /// Mask volume as `file.mpv#channel`; defaults to a `mask` channel of the input.
    #[arg(long)]
    mask: Option<String>,
    /// Comma separated feature channels; defaults to every non-mask channel.
    #[arg(long, value_delimiter = ',')]
    channels: Vec<String>,
    #[arg(long, default_value = "isomap")]
    method: Method,
    #[arg(long, default_value_t = 40)]
    k: usize,
    #[arg(long, default_value_t = 80.0)]
    sigma: f64,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    t: u32,
    #[arg(long, default_value_t = 2000)]
    landmarks: usize,
    #[arg(long, default_value = "zscore")]
    normalization: Normalization,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    out_csv: PathBuf,
    #[arg(long)]
    out_ppm: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 3)]
    k1: usize,
    #[arg(long, default_value_t = 13)]
    k2: usize,
    #[arg(long, default_value_t = 10)]
    h: usize,
    #[arg(long, default_value_t = 0.75)]
    threshold: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    force: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Overrides the manifest seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    landmarks: Option<usize>,
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    graph: GraphArgs,
}

#[derive(Args, Debug)]
struct PhantomArgs {
    /// JSON phantom description; the built-in geometry when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Multiplicative noise level, overriding the spec.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Lesion table CSV, or `table1` / `table2` for the bundled tables.
    #[arg(long, requires_all = ["group", "x", "y"], conflicts_with_all = ["truth", "labels"])]
    table: Option<String>,
    #[arg(long)]
    group: Option<String>,
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    y: Option<String>,
    #[arg(long, default_value = "pearson")]
    method: CorrelationMethod,
    /// Ground-truth label map CSV.
    #[arg(long, requires = "labels")]
    truth: Option<PathBuf>,
    /// Predicted label map CSV.
    #[arg(long, requires = "truth")]
    labels: Option<PathBuf>,
}

/// Sizes the global rayon pool from `MANIFOLD_SEG_THREADS` (0 or unset = auto).
pub fn configure_threads() {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(n) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
            {
                eprintln!("warning: could not size thread pool: {e}");
            }
        }
        Err(_) => eprintln!("warning: ignoring {THREADS_ENV}=`{raw}`"),
    }
}

/// Runs one command; returns 0 on success, 1 for bad input, 2 for numeric failure.
pub fn run_command(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::FitMaps(a) => fit_maps(a),
        Command::Embed(a) => embed(a),
        Command::Cluster(a) => cluster(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Phantom(a) => phantom(a),
        Command::Eval(a) => eval(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numeric() {
                2
            } else {
                1
            }
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Volume named by `file.mpv#channel`; a file with one channel needs no suffix.
fn load_channel(src: &ChannelSource, base: &Path) -> Result<ParametricVolume> {
    let path = base.join(&src.path);
    let vols = read_mpv_file(&path)?;
    match &src.channel {
        Some(c) => vols.into_iter().find(|v| &v.name == c),
        None if vols.len() == 1 => vols.into_iter().next(),
        None => None,
    }
    .ok_or_else(|| Error::MissingChannel(format!("{src} ({})", path.display())))
}

fn fit_maps(a: FitMapsArgs) -> Result<()> {
    let base = a.series.parent().unwrap_or(Path::new("")).to_path_buf();
    let text = read_text(&a.series)?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut groups: BTreeMap<String, Vec<(f64, ParametricVolume)>> = BTreeMap::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let series = field(0).to_ascii_lowercase();
        if series != "dwi" && series != "t2" {
            return Err(Error::SyntaxError {
                line,
                message: format!("series must be dwi or t2, got `{}`", field(0)),
            });
        }
        let control: f64 = field(1).parse().map_err(|_| Error::SyntaxError {
            line,
            message: format!("bad control value `{}`", field(1)),
        })?;
        let frame = load_channel(&ChannelSource::parse(field(2)), &base)?;
        groups.entry(series).or_default().push((control, frame));
    }
    if groups.is_empty() {
        return Err(Error::InvalidSeries("series CSV lists no frames".into()));
    }
    let mask = match &a.mask {
        Some(s) => Some(Mask::from_volume(&load_channel(
            &ChannelSource::parse(s),
            Path::new(""),
        )?)),
        None => None,
    };
    let mut out = Vec::new();
    for (series, mut frames) in groups {
        frames.sort_by(|p, q| p.0.total_cmp(&q.0));
        let (control, frames): (Vec<f64>, Vec<ParametricVolume>) = frames.into_iter().unzip();
        let acq = AcquisitionSeries::new(frames, control)?;
        let map = if series == "dwi" {
            compute_adc_map(&acq, mask.as_ref())?
        } else {
            compute_t2_map(&acq, mask.as_ref())?
        };
        println!(
            "{}: {} of {} voxels fitted",
            map.volume.name,
            map.fitted_count(),
            map.status.len()
        );
        out.push(map.volume);
    }
    write_mpv_file(&a.out, &out)
}

fn embed(a: EmbedArgs) -> Result<()> {
    let mut config = PipelineConfig::default().with_seed(a.seed);
    config.normalization = a.normalization;
    let e = &mut config.embed;
    e.method = a.method;
    e.k = a.k;
    e.sigma = a.sigma;
    e.dim = a.d;
    e.t = a.t;
    e.landmarks = a.landmarks;
    if let Some(p) = a.graph.policy() {
        e.graph_policy = p;
    }
    check_config_ranges(&config, a.force)?;

    let vols = read_mpv_file(&a.input)?;
    let mask = match &a.mask {
        Some(s) => Some(Mask::from_volume(&load_channel(
            &ChannelSource::parse(s),
            Path::new(""),
        )?)),
        None => vols
            .iter()
            .find(|v| v.name == "mask")
            .map(Mask::from_volume),
    };
    let chosen: Vec<ParametricVolume> = if a.channels.is_empty() {
        vols.iter()
            .filter(|v| v.name != "mask" && !v.name.ends_with(crate::io::RAW_SUFFIX))
            .cloned()
            .collect()
    } else {
        a.channels
            .iter()
            .map(|c| {
                vols.iter()
                    .find(|v| &v.name == c)
                    .cloned()
                    .ok_or_else(|| Error::MissingChannel(c.clone()))
            })
            .collect::<Result<_>>()?
    };
    let first = chosen
        .first()
        .ok_or_else(|| Error::MissingChannel("no feature channels in input".into()))?;
    let (w, h) = (first.width, first.height);
    let mask = mask.unwrap_or_else(|| Mask::full(w, h));
    let raw = stack_volumes(&chosen, &mask)?;
    let (features, _) = normalize_features(&raw, config.normalization)?;
    let emb = run_embedding(&features, &config.embed)?;

    let mut csv = Vec::new();
    write_embedding_csv(
        &mut csv,
        Some(&features.voxel_index),
        &emb.embedding.coords,
        Some(&emb.active),
    )?;
    write_file(&a.out_csv, &csv)?;
    if let Some(p) = &a.out_ppm {
        let img = render_embedded_image(
            &emb.embedding,
            &features.voxel_index,
            (w, h),
            Some(&emb.active),
        )?;
        write_file(p, &encode_ppm(&img))?;
    }
    Ok(())
}

fn cluster(a: ClusterArgs) -> Result<()> {
    let params = ConsensusParams {
        k1: a.k1,
        k2: a.k2,
        repetitions: a.h,
        threshold: a.threshold,
        seed: a.seed,
    };
    let mut config = PipelineConfig::default();
    config.consensus = params;
    check_config_ranges(&config, a.force)?;
    let text = read_text(&a.input)?;
    let (index, points) = read_embedding_csv(text.as_bytes())?;
    let result = consensus_cluster(&points, &params)?;
    let mut out = Vec::new();
    write_labels_csv(&mut out, index.as_deref(), &result.labels)?;
    write_file(&a.out, &out)?;
    println!("clusters: {}", result.cluster_count);
    Ok(())
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    let text = read_text(&a.manifest)?;
    let mut m = parse_manifest(&text, a.force)?;
    if let Some(seed) = a.seed {
        m.config = m.config.with_seed(seed);
    }
    if let Some(method) = a.method {
        m.config.embed.method = method;
    }
    if let Some(k) = a.k {
        m.config.embed.k = k;
    }
    if let Some(l) = a.landmarks {
        m.config.embed.landmarks = l;
    }
    if let Some(p) = a.graph.policy() {
        m.config.embed.graph_policy = p;
    }
    check_config_ranges(&m.config, a.force)?;
    let base = a.manifest.parent().unwrap_or(Path::new(""));
    let study = m.load_study(base)?;
    let out = run_pipeline(&study, &m.config)?;

    create_dir(&a.out_dir)?;
    let dir = &a.out_dir;
    let cls = &out.classification;
    let mut buf = Vec::new();
    write_labelmap_csv(&mut buf, &cls.labelmap)?;
    write_file(&dir.join("labels.csv"), &buf)?;
    buf.clear();
    write_report_csv(&mut buf, &cls.report)?;
    write_file(&dir.join("report.csv"), &buf)?;
    buf.clear();
    write_clusters_csv(&mut buf, &cls.clusters)?;
    write_file(&dir.join("clusters.csv"), &buf)?;
    buf.clear();
    write_embedding_csv(
        &mut buf,
        Some(&out.features.voxel_index),
        &out.embedding.embedding.coords,
        Some(&out.embedding.active),
    )?;
    write_file(&dir.join("embedding.csv"), &buf)?;
    write_file(&dir.join("embedded.ppm"), &encode_ppm(&out.embedded_image))?;
    write_file(
        &dir.join("scatter.ppm"),
        &encode_ppm(&out.scattergram.image),
    )?;
    write_file(&dir.join("scatter.csv"), out.scattergram.csv.as_bytes())?;

    for c in &cls.report.classes {
        println!("{}: {} voxels, {:.4} mm2", c.class, c.count, c.area_mm2);
    }
    Ok(())
}

fn truth_gray(class: TissueClass) -> u8 {
    match class {
        TissueClass::Background => 0,
        TissueClass::Normal => 85,
        TissueClass::AtRisk => 170,
        TissueClass::Infarcted => 255,
    }
}

fn phantom(a: PhantomArgs) -> Result<()> {
    let mut spec = match &a.spec {
        Some(p) => serde_json::from_str::<PhantomSpec>(&read_text(p)?)
            .map_err(|e| Error::Format(format!("{}: {e}", p.display())))?,
        None => PhantomSpec::default(),
    };
    if let Some(n) = a.noise {
        spec = spec.with_noise(n);
    }
    let ph = generate_phantom(&spec, a.seed)?;
    create_dir(&a.out_dir)?;

    let mut vols = ph.study.volumes.clone();
    let mask = ph.study.effective_mask();
    let first = &vols[0];
    vols.push(ParametricVolume::new(
        "mask",
        first.width,
        first.height,
        first.spacing,
        mask.values
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect(),
    )?);
    write_mpv_file(&a.out_dir.join("study.mpv"), &vols)?;

    let mut buf = Vec::new();
    write_labelmap_csv(&mut buf, &ph.truth)?;
    write_file(&a.out_dir.join("truth.csv"), &buf)?;
    let gray: Vec<u8> = ph.truth.tissue.iter().map(|&c| truth_gray(c)).collect();
    write_file(
        &a.out_dir.join("truth.pgm"),
        &encode_pgm(ph.truth.width, ph.truth.height, &gray),
    )?;
    let manifest = "channel.cbf = study.mpv#cbf\n\
                    channel.adc = study.mpv#adc\n\
                    channel.t2 = study.mpv#t2\n\
                    mask = study.mpv#mask\n\
                    perfusion = cbf\n";
    write_file(&a.out_dir.join("manifest.txt"), manifest.as_bytes())
}

fn lesion_table(name: &str) -> Result<LesionTable> {
    let path = Path::new(name);
    if path.is_file() {
        return LesionTable::from_reader(read_text(path)?.as_bytes());
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    match stem {
        "table1" => Ok(LesionTable::table1()),
        "table2" => Ok(LesionTable::table2()),
        _ => Err(Error::Io(format!("{name}: no such table"))),
    }
}

fn eval(a: EvalArgs) -> Result<()> {
    if let Some(t) = &a.table {
        let table = lesion_table(t)?;
        let (g, x, y) = (
            a.group.as_deref().unwrap_or_default(),
            a.x.as_deref().unwrap_or_default(),
            a.y.as_deref().unwrap_or_default(),
        );
        let r = table_correlations(&table, g, x, y, a.method)?;
        println!("{r}");
        return Ok(());
    }
    let (Some(truth), Some(labels)) = (&a.truth, &a.labels) else {
        return Err(Error::InvalidParameter(
            "eval needs --table or both --truth and --labels".into(),
        ));
    };
    let unit = (1.0, 1.0);
    let truth = read_labelmap_csv(read_text(truth)?.as_bytes(), unit)?;
    let pred = read_labelmap_csv(read_text(labels)?.as_bytes(), unit)?;
    if (truth.width, truth.height) != (pred.width, pred.height) {
        return Err(Error::DimensionMismatch(format!(
            "truth is {}x{}, labels are {}x{}",
            truth.width, truth.height, pred.width, pred.height
        )));
    }
    let mut out = String::from("tissue_class,dice\n");
    for class in TissueClass::FOREGROUND {
        out.push_str(&format!(
            "{class},{:.6}\n",
            class_dice(&truth, &pred, class)
        ));
    }
    print!("{out}");
    Ok(())
}
