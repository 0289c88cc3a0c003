//! Command implementations. Each command validates its configuration
//! before any work, writes primary outputs atomically and
//! deterministically, and keeps wall-clock chatter on stdout only.

use std::time::Instant;

use svmp_core::dataset::{synthesize, BagDataset, SyntheticSpec};
use svmp_core::joint::JointConfig;
use svmp_core::kernel::{median_heuristic_gamma, HomogeneousMapConfig, KernelSpec};
use svmp_core::pool::{centralize, nsvmp_pool, svmp_pool, PoolConfig};

use crate::cli::{
    BagFlags, Cli, Command, EvalArgs, EvalCommonArgs, PoolArgs, PoolFlags, ReportArgs,
    SynthArgs, TrainArgs,
};
use crate::error::CliError;
use crate::eval::{self, EvalConfig, Method, PoolKernel};
use crate::report::{render_report, render_timings, ConfigEcho};
use crate::store::{self, DescriptorRecord, DescriptorSet, ModelFile};

/// Per-descriptor pooling metadata — satisfied flag, final C, selection
/// fraction — all absent for methods without a growth loop.
type RowMeta = (Option<bool>, Option<f64>, Option<f64>);

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(args) => cmd_synth(&args),
        Command::Pool(args) => cmd_pool(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Report(args) => cmd_report(&args),
    }
}

fn pool_config(flags: &PoolFlags) -> Result<PoolConfig, CliError> {
    let cfg = PoolConfig {
        eta: Some(flags.eta),
        c_init: flags.c_init,
        growth: flags.c_growth,
        c_cap: flags.c_cap,
        c_fixed: flags.c_fixed,
        ..PoolConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn pool_kernel(flags: &PoolFlags) -> Result<PoolKernel, CliError> {
    match flags.kernel.as_str() {
        "linear" => Ok(PoolKernel::Linear),
        "rbf" => Ok(PoolKernel::Rbf { gamma: flags.gamma }),
        other => Err(CliError::Usage(format!(
            "unknown kernel '{other}' (expected linear|rbf)"
        ))),
    }
}

fn echo_pool_flags(echo: &mut ConfigEcho, flags: &PoolFlags) {
    echo.push("eta", flags.eta);
    echo.push("c_init", flags.c_init);
    echo.push("c_growth", flags.c_growth);
    echo.push("c_cap", flags.c_cap);
    echo.push_opt("c_fixed", flags.c_fixed);
    echo.push("kernel", &flags.kernel);
    match flags.gamma {
        Some(g) => echo.push("gamma", g),
        None => echo.push("gamma", "median"),
    }
}

fn echo_bag_flags(echo: &mut ConfigEcho, bags: &BagFlags) {
    echo.push("pos_bag_size", bags.pos_bag_size);
    echo.push("neg_bag_size", bags.neg_bag_size);
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec {
        class_count: args.classes,
        sequences_per_class: args.sequences_per_class,
        frames_per_sequence: args.frames,
        dimension: args.dim,
        informative_fraction: args.rho,
        signal_strength: args.signal,
        noise_sigma: args.sigma,
        negative_frame_count: args.neg_frames,
        seed: args.seed,
    };
    spec.validate()?;
    let start = Instant::now();
    let ds = synthesize(&spec)?;
    store::save_dataset(&ds, &args.out)?;
    println!(
        "wrote {} sequences ({} classes, {} frames each, dimension {}) and {} negative frames",
        ds.sequences.len(),
        ds.class_count,
        spec.frames_per_sequence,
        ds.dimension,
        ds.negative.frames.len()
    );
    println!("timing: synth {:.3}s", start.elapsed().as_secs_f64());
    Ok(())
}

/// Resolves the dual-coefficient pooling kernel against actual data: a
/// missing RBF gamma becomes the median heuristic over the first bag and
/// the shared negatives.
fn resolve_kernel(kernel: PoolKernel, ds: &BagDataset) -> KernelSpec {
    match kernel {
        PoolKernel::Linear => KernelSpec::Linear,
        PoolKernel::Rbf { gamma: Some(g) } => KernelSpec::Rbf { gamma: g },
        PoolKernel::Rbf { gamma: None } => {
            let mut frames = ds.sequences[0].frames.clone();
            frames.extend(ds.negative.frames.iter().cloned());
            KernelSpec::Rbf { gamma: median_heuristic_gamma(&frames) }
        }
    }
}

fn cmd_pool(args: &PoolArgs) -> Result<(), CliError> {
    let pcfg = pool_config(&args.pool)?;
    let kernel = pool_kernel(&args.pool)?;
    if !matches!(args.method.as_str(), "avg" | "max" | "svmp" | "nsvmp") {
        return Err(CliError::Usage(format!(
            "unknown method '{}' (expected avg|max|svmp|nsvmp)",
            args.method
        )));
    }
    let start = Instant::now();
    let raw = store::load_features_auto(&args.data)?;
    let sampled =
        eval::resample(&raw, args.bags.pos_bag_size, args.bags.neg_bag_size, args.seed)?;
    let (centered, _) = centralize(&sampled)?;

    let mut echo = ConfigEcho::default();
    echo.push("method", &args.method);
    echo_pool_flags(&mut echo, &args.pool);
    echo_bag_flags(&mut echo, &args.bags);
    echo.push("seed", args.seed);

    let (vectors, metadata): (Vec<Vec<f64>>, Vec<RowMeta>) =
        match args.method.as_str() {
            "avg" => (
                centered.sequences.iter().map(eval::bag_mean).collect(),
                vec![(None, None, None); centered.sequences.len()],
            ),
            "max" => (
                centered.sequences.iter().map(eval::bag_max).collect(),
                vec![(None, None, None); centered.sequences.len()],
            ),
            "svmp" => {
                let descs = eval::pool_all(&centered.sequences, args.jobs, |b| {
                    svmp_pool(b, &centered.negative, &pcfg)
                })?;
                let meta = descs
                    .iter()
                    .map(|d| (Some(d.satisfied), Some(d.final_c), Some(d.achieved_fraction)))
                    .collect();
                (descs.into_iter().map(|d| d.vector).collect(), meta)
            }
            "nsvmp" => {
                let spec = resolve_kernel(kernel, &centered);
                let kcfg = PoolConfig { kernel: Some(spec), ..pcfg.clone() };
                let descs = eval::pool_all(&centered.sequences, args.jobs, |b| {
                    nsvmp_pool(b, &centered.negative, &kcfg)
                })?;
                let meta = descs
                    .iter()
                    .map(|d| (Some(d.satisfied), Some(d.final_c), Some(d.achieved_fraction)))
                    .collect();
                (descs.into_iter().map(|d| d.vector).collect(), meta)
            }
            _ => unreachable!("method validated before loading"),
        };

    let records: Vec<DescriptorRecord> = centered
        .sequences
        .iter()
        .zip(&metadata)
        .map(|(bag, &(satisfied, final_c, fraction))| DescriptorRecord {
            sequence_id: bag.sequence_id.clone(),
            label: bag.label,
            satisfied,
            final_c,
            achieved_fraction: fraction,
        })
        .collect();
    let set = DescriptorSet {
        method: args.method.clone(),
        dimension: vectors[0].len(),
        class_count: centered.class_count,
        config_echo: echo.render_line(),
        records,
        vectors,
    };
    store::save_descriptors(&set, &args.out)?;
    let satisfied = set.records.iter().filter(|r| r.satisfied == Some(true)).count();
    println!(
        "pooled {} sequences into {}-dimensional '{}' descriptors ({} satisfied)",
        set.records.len(),
        set.dimension,
        set.method,
        satisfied
    );
    println!("timing: pool {:.3}s", start.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let pcfg = pool_config(&args.pool)?;
    pool_kernel(&args.pool)?;
    let start = Instant::now();
    let raw = store::load_features_auto(&args.data)?;
    let sampled =
        eval::resample(&raw, args.bags.pos_bag_size, args.bags.neg_bag_size, args.seed)?;
    let (centered, mean) = centralize(&sampled)?;

    let jcfg = JointConfig {
        c2: args.c2,
        max_bcd_iters: args.max_bcd_iters,
        z_tolerance: args.z_tol,
        pool: pcfg,
        ..JointConfig::default()
    };
    jcfg.validate()?;
    let (_, set, history) = svmp_core::joint::bcd_fit(&centered, &jcfg)?;

    let mut echo = ConfigEcho::default();
    echo_pool_flags(&mut echo, &args.pool);
    echo_bag_flags(&mut echo, &args.bags);
    echo.push("c2", args.c2);
    echo.push("max_bcd_iters", args.max_bcd_iters);
    echo.push("z_tol", args.z_tol);
    echo.push("seed", args.seed);

    let model = ModelFile {
        classifiers: set,
        feature_mean: mean,
        pool_echo: echo.render_line(),
    };
    store::save_model(&model, &args.out)?;
    for (i, it) in history.iterations.iter().enumerate() {
        println!(
            "iteration {i}: mean_fraction {:.4} classifier_change {:.6} train_accuracy {:.4}",
            it.mean_fraction, it.z_relative_change, it.training_accuracy
        );
    }
    println!(
        "trained {} class models over {}-dimensional descriptors",
        model.classifiers.classes.len(),
        model.classifiers.descriptor_dimension()
    );
    println!("timing: train {:.3}s", start.elapsed().as_secs_f64());
    Ok(())
}

fn eval_config(common: &EvalCommonArgs) -> Result<EvalConfig, CliError> {
    let hom = HomogeneousMapConfig {
        order: common.hom_order,
        period: common.hom_period,
        ..HomogeneousMapConfig::default()
    };
    hom.validate()?;
    Ok(EvalConfig {
        folds: common.folds,
        seed: common.seed,
        pool: pool_config(&common.pool)?,
        pool_kernel: pool_kernel(&common.pool)?,
        hom,
        c2: common.c2,
        beta1: common.beta1,
        beta2: common.beta2,
        max_bcd_iters: common.max_bcd_iters,
        z_tolerance: common.z_tol,
        pos_bag_size: common.bags.pos_bag_size,
        neg_bag_size: common.bags.neg_bag_size,
        jobs: common.jobs,
    })
}

fn echo_eval(common: &EvalCommonArgs) -> ConfigEcho {
    let mut echo = ConfigEcho::default();
    echo.push("folds", common.folds);
    echo.push("seed", common.seed);
    echo_pool_flags(&mut echo, &common.pool);
    echo_bag_flags(&mut echo, &common.bags);
    echo.push("c2", common.c2);
    echo.push("beta1", common.beta1);
    echo.push("beta2", common.beta2);
    echo.push("hom_order", common.hom_order);
    echo.push("hom_period", common.hom_period);
    echo.push("max_bcd_iters", common.max_bcd_iters);
    echo.push("z_tol", common.z_tol);
    echo
}

fn run_eval(
    command: &str,
    common: &EvalCommonArgs,
    methods: &[Method],
    echo: &ConfigEcho,
) -> Result<(), CliError> {
    let cfg = eval_config(common)?;
    let ds = store::load_features_auto(&common.data)?;
    let outcomes = eval::evaluate_methods(&ds, &cfg, methods)?;
    let text = render_report(command, echo, &outcomes);
    print!("{text}");
    print!("{}", render_timings(&outcomes));
    if let Some(out) = &common.out {
        store::write_text(out, &text)?;
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let method: Method = args.method.parse()?;
    let mut echo = ConfigEcho::default();
    echo.push("method", method.name());
    echo.extend(echo_eval(&args.common));
    run_eval("eval", &args.common, &[method], &echo)
}

fn cmd_report(args: &ReportArgs) -> Result<(), CliError> {
    let mut echo = ConfigEcho::default();
    let names: Vec<&str> = Method::ALL_BASELINES.iter().map(|m| m.name()).collect();
    echo.push("methods", names.join(","));
    echo.extend(echo_eval(&args.common));
    run_eval("report", &args.common, &Method::ALL_BASELINES, &echo)
}
