//! The `pcag` command line.
//!
//! Exit codes: 0 on success, 1 for usage or validation errors, 2 when a
//! computation or file write fails.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::aggregation::{analytic_loads, LoadReport, Operation};
use crate::dist_cov::{init_network, run_cov_round, assemble_masked};
use crate::dist_pim::{distribute_basis_centralized, run_distributed_pim, PimConfig, PimNetwork};
use crate::error::{Error, Result};
use crate::experiments::{
    fold_count_sweep, kfold_split, load_study, pim_accuracy_study, train_basis, xval_retained_variance,
    Dataset, ExperimentConfig, MetricsReport, Table,
};
use crate::io::config::{BasisMethod, Config};
use crate::io::format::sig9;
use crate::io::synth::generate_synthetic;
use crate::linalg::{retained_variance_curve, PcaBasis};
use crate::runtime::{write_reconstruction_csv, write_scores_csv, SupervisedRuntime};
use crate::topology::{Neighborhoods, RoutingTree, SensorField, SensorId};

#[derive(Debug, Parser)]
#[command(name = "pcag", version, about = "Principal component aggregation in sensor networks")]
pub struct Cli {
    #[command(flatten)]
    pub opts: CommonOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonOpts {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Temperature trace `timestamp_s,sensor_id,value`; synthetic data when absent.
    #[arg(long, global = true)]
    pub trace: Option<PathBuf>,
    /// Radio range in meters.
    #[arg(long, global = true)]
    pub range: Option<f64>,
    /// Number of principal components.
    #[arg(long, global = true)]
    pub q: Option<usize>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    /// Training block for single-run commands.
    #[arg(long, global = true)]
    pub fold: Option<usize>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long = "t-max", global = true)]
    pub t_max: Option<usize>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// exact, pim or distributed.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Output directory; also read from PCAG_OUT_DIR.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Any configuration key, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the routing tree and report default and aggregated loads.
    Tree,
    /// Collect the neighbor-masked covariance in-network.
    Cov,
    /// Train a basis on one block with the configured method.
    Basis,
    /// Run distributed power iteration on the masked covariance.
    Pim,
    /// Score and reconstruct every epoch with supervised compression.
    Score,
    /// Cross-validated retained variance and power-iteration accuracy.
    Xval {
        /// Also sweep these fold counts, comma separated.
        #[arg(long = "k-sweep", value_delimiter = ',')]
        k_sweep: Vec<usize>,
    },
    /// Network-load studies over the range sweep.
    Loads,
    /// Write a synthetic trace.
    Synth,
}

impl CommonOpts {
    fn config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Ok(dir) = std::env::var("PCAG_OUT_DIR") {
            if !dir.is_empty() {
                cfg.out_dir = PathBuf::from(dir);
            }
        }
        let here = Path::new(".");
        let mut set = |k: &str, v: String| cfg.set(k, &v, here);
        if let Some(p) = &self.trace {
            set("trace", p.display().to_string())?;
        }
        if let Some(v) = self.range {
            set("range", v.to_string())?;
        }
        if let Some(v) = self.q {
            set("q", v.to_string())?;
        }
        if let Some(v) = self.folds {
            set("folds", v.to_string())?;
        }
        if let Some(v) = self.fold {
            set("fold", v.to_string())?;
        }
        if let Some(v) = self.delta {
            set("delta", v.to_string())?;
        }
        if let Some(v) = self.t_max {
            set("t_max", v.to_string())?;
        }
        if let Some(v) = self.epsilon {
            set("epsilon", v.to_string())?;
        }
        if let Some(v) = self.seed {
            set("seed", v.to_string())?;
        }
        if let Some(v) = &self.method {
            set("method", v.clone())?;
        }
        if let Some(p) = &self.out {
            set("out_dir", p.display().to_string())?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            set(k, v.to_string())?;
        }
        cfg.check_values()?;
        Ok(cfg)
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let cfg = cli.opts.config()?;
    if let Command::Synth = cli.command {
        return synth(&cfg, out);
    }
    let data = Dataset::from_config(&cfg)?;
    cfg.validate(&data.field, data.epochs())?;
    let dir = cfg.out_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    match &cli.command {
        Command::Tree => tree(&cfg, &data, &dir, out),
        Command::Cov => cov(&cfg, &data, &dir, out),
        Command::Basis => basis(&cfg, &data, &dir, out),
        Command::Pim => pim(&cfg, &data, &dir, out),
        Command::Score => score(&cfg, &data, &dir, out),
        Command::Xval { k_sweep } => xval(&cfg, &data, k_sweep, &dir, out),
        Command::Loads => loads(&cfg, &data, &dir, out),
        Command::Synth => unreachable!(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn say(out: &mut dyn Write, line: String) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

fn write_table(path: &Path, table: &Table) -> Result<()> {
    std::fs::write(path, table.to_csv()?).map_err(|e| Error::io(path, e))
}

fn basis_table(ids: &[SensorId], basis: &PcaBasis) -> Table {
    let mut header = vec!["sensor_id".to_string(), "mean".to_string()];
    header.extend((1..=basis.len()).map(|k| format!("w_{k}")));
    let mut t = Table { header, rows: Vec::new() };
    for (i, id) in ids.iter().enumerate() {
        let mut row = vec![id.to_string(), sig9(basis.mean()[i])];
        row.extend(basis.pairs().iter().map(|p| sig9(p.vector[i])));
        t.push(row);
    }
    t
}

fn values_table(basis: &PcaBasis) -> Table {
    let mut t = Table::new(&["k", "eigenvalue"]);
    for (k, v) in basis.values().iter().enumerate() {
        t.push(vec![(k + 1).to_string(), sig9(*v)]);
    }
    t
}

fn synth(cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let base = match &cfg.positions {
        Some(p) => SensorField::new(crate::io::load_positions(p)?, cfg.root)?,
        None => crate::io::intel_field().with_root(cfg.root)?,
    };
    let field = base.without(&cfg.exclude)?;
    let trace = generate_synthetic(&cfg.synth, &field)?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let path = cfg.out_dir.join("trace.csv");
    trace.export(&path)?;
    say(
        out,
        format!(
            "synth sensors={} epochs={} out={}",
            trace.sensors(),
            trace.epochs(),
            path.display()
        ),
    )
}

fn tree(cfg: &Config, data: &Dataset, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let field = &data.field;
    let tree = RoutingTree::build(field, cfg.range)?;
    let st = tree.stats();
    let ids = field.ids();
    let mut t = Table::new(&["sensor_id", "parent_id", "depth", "children", "subtree"]);
    for i in 0..tree.len() {
        t.push(vec![
            ids[i].to_string(),
            tree.parent(i).map_or(String::new(), |p| ids[p].to_string()),
            tree.depth_of(i).to_string(),
            st.children_counts[i].to_string(),
            st.subtree_sizes[i].to_string(),
        ]);
    }
    write_table(&dir.join("tree.csv"), &t)?;
    let d = analytic_loads(&tree, Operation::Default);
    let a = analytic_loads(&tree, Operation::Aggregate(cfg.q));
    d.write_csv(&ids, create(&dir.join("loads_default.csv"))?)?;
    a.write_csv(&ids, create(&dir.join("loads_aggregate.csv"))?)?;
    say(
        out,
        format!(
            "tree sensors={} range={} depth={} max_children={} default_total={} default_max={} aggregate_q{}_max={}",
            tree.len(),
            cfg.range,
            st.depth,
            st.max_children,
            d.total(),
            d.max_node_load(),
            cfg.q,
            a.max_node_load()
        ),
    )
}

fn training_block(cfg: &Config, data: &Dataset) -> Result<std::ops::Range<usize>> {
    let folds = kfold_split(data.epochs(), cfg.folds)?;
    Ok(folds[cfg.fold].train.clone())
}

fn cov(cfg: &Config, data: &Dataset, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let nb = Neighborhoods::build(&data.field, cfg.range)?;
    let block = training_block(cfg, data)?;
    let mut states = init_network(&nb);
    let mut load = LoadReport::zeros(data.sensors());
    for x in data.block(block.clone()) {
        load.add(&run_cov_round(&mut states, &nb, x)?);
    }
    let masked = assemble_masked(&states, &nb)?;
    let ids = data.field.ids();
    masked.write_snapshot_csv(&ids, create(&dir.join("cov_snapshot.csv"))?)?;
    load.write_csv(&ids, create(&dir.join("cov_loads.csv"))?)?;
    say(
        out,
        format!(
            "cov rounds={} range={} max_neighbors={} total_load={} max_node_load={}",
            block.len(),
            cfg.range,
            nb.max_degree(),
            load.total(),
            load.max_node_load()
        ),
    )
}

fn trained(cfg: &Config, data: &Dataset, q: usize) -> Result<(PcaBasis, Vec<usize>)> {
    let block = training_block(cfg, data)?;
    let test: Vec<usize> = (0..data.epochs()).filter(|t| !block.contains(t)).collect();
    let train = data.block(block);
    let basis = match cfg.method {
        BasisMethod::Distributed => {
            let nb = Neighborhoods::build(&data.field, cfg.range)?;
            let tree = RoutingTree::build_on(&data.field, &nb)?;
            train_basis(train, q, Some((&nb, &tree)), cfg.method, cfg.delta, cfg.t_max, cfg.init_policy())?
        }
        m => train_basis(train, q, None, m, cfg.delta, cfg.t_max, cfg.init_policy())?,
    };
    Ok((basis, test))
}

fn basis(cfg: &Config, data: &Dataset, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let (basis, test) = trained(cfg, data, cfg.q)?;
    let ids = data.field.ids();
    write_table(&dir.join("basis.csv"), &basis_table(&ids, &basis))?;
    write_table(&dir.join("eigenvalues.csv"), &values_table(&basis))?;
    let curve = retained_variance_curve(&basis, &data.pick(&test))?;
    say(
        out,
        format!(
            "basis method={:?} components={} test_retained={}",
            cfg.method,
            basis.len(),
            sig9(*curve.last().expect("curve has a point"))
        )
        .to_lowercase(),
    )
}

fn pim(cfg: &Config, data: &Dataset, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let nb = Neighborhoods::build(&data.field, cfg.range)?;
    let tree = RoutingTree::build_on(&data.field, &nb)?;
    let block = training_block(cfg, data)?;
    let mut states = init_network(&nb);
    for x in data.block(block) {
        run_cov_round(&mut states, &nb, x)?;
    }
    let mut net = PimNetwork::from_cov_states(&states, &nb)?;
    let pim_cfg = PimConfig {
        q_target: cfg.q,
        delta: cfg.delta,
        t_max: cfg.t_max,
        v0_policy: cfg.init_policy(),
    };
    let run = run_distributed_pim(&mut net, &tree, &pim_cfg)?;
    let mean: Vec<f64> = states.iter().map(|s| s.mean()).collect();
    let basis = net.to_basis(mean)?;
    let ids = data.field.ids();
    run.write_log_csv(create(&dir.join("pim_log.csv"))?)?;
    run.load.write_csv(&ids, create(&dir.join("pim_loads.csv"))?)?;
    write_table(&dir.join("basis.csv"), &basis_table(&ids, &basis))?;
    write_table(&dir.join("eigenvalues.csv"), &values_table(&basis))?;
    let central = distribute_basis_centralized(&tree, &basis);
    let iters: Vec<String> = run.iterations.iter().map(|i| i.to_string()).collect();
    let mut line = format!(
        "pim components={} iterations={} total_load={} max_node_load={} centralized_feedback_total={}",
        net.accepted(),
        iters.join(","),
        run.load.total(),
        run.load.max_node_load(),
        central.total()
    );
    if let Some(reason) = run.stopped_early {
        line.push_str(&format!(" stopped={reason:?}").to_lowercase());
    }
    say(out, line)
}

fn score(cfg: &Config, data: &Dataset, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let (basis, _) = trained(cfg, data, cfg.q)?;
    let tree = RoutingTree::build(&data.field, cfg.range)?;
    let ids = data.field.ids();
    let mut rt = SupervisedRuntime::new(&tree, basis, &ids, cfg.epsilon)?;
    let mut scores = Vec::with_capacity(data.epochs());
    for t in 0..data.epochs() {
        scores.push(rt.step(data.trace.epoch(t))?.z);
    }
    let report = rt.finish();
    write_scores_csv(&scores, create(&dir.join("scores.csv"))?)?;
    write_reconstruction_csv(
        &ids,
        data.trace.samples(),
        &report.sink_values,
        create(&dir.join("reconstruction.csv"))?,
    )?;
    report.load.write_csv(&ids, create(&dir.join("score_loads.csv"))?)?;
    let max_err = data
        .trace
        .samples()
        .iter()
        .zip(&report.sink_values)
        .flat_map(|(x, xh)| x.iter().zip(xh).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    say(
        out,
        format!(
            "score epochs={} q={} epsilon={} violations={} max_abs_error={} total_load={} max_node_load={}",
            data.epochs(),
            cfg.q,
            cfg.epsilon,
            report.violations,
            sig9(max_err),
            report.load.total(),
            report.load.max_node_load()
        ),
    )
}

fn xval(cfg: &Config, data: &Dataset, k_sweep: &[usize], dir: &Path, out: &mut dyn Write) -> Result<()> {
    let ec = ExperimentConfig::from(cfg);
    let x = xval_retained_variance(data, &ec)?;
    let acc = pim_accuracy_study(data, &ec)?;
    let mut report: MetricsReport = x.report();
    report.merge(acc.report());
    if !k_sweep.is_empty() {
        let mut t = Table::new(&["folds", "q", "test_retained"]);
        for (k, q, v) in fold_count_sweep(data, &ec, k_sweep)? {
            t.push(vec![k.to_string(), q.to_string(), sig9(v)]);
        }
        report.tables.insert("fig9_fold_sweep.csv".into(), t);
    }
    let written = report.write_dir(dir)?;
    let q = cfg.q.min(ec.q_max);
    say(
        out,
        format!(
            "xval folds={} q={} test_retained={} upper_bound={} files={}",
            ec.folds,
            q,
            sig9(x.mean_test(q)),
            sig9(x.mean_upper(q)),
            written.len()
        ),
    )
}

fn loads(cfg: &Config, data: &Dataset, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let ec = ExperimentConfig::from(cfg);
    let study = load_study(data, &ec)?;
    let written = study.report().write_dir(dir)?;
    let skipped: Vec<String> = study.skipped.iter().map(|r| r.to_string()).collect();
    let first = study.pim.first();
    say(
        out,
        format!(
            "loads ranges={} skipped=[{}] pim_components={} pim_first_mean={} files={}",
            study.ranges.len(),
            skipped.join(","),
            study.pim.len(),
            first.map_or("-".into(), |c| sig9(c.cumulative.mean_node_load())),
            written.len()
        ),
    )
}
