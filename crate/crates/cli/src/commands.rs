//! Subcommand implementations.

use std::path::Path;

use serde::Serialize;

use minmax_lab::{
    appendix_table, classify_exponent, exclusivity_partition_check, risk, solve_minimax,
    FamilySpec, Interval, LossSpec, MinimaxResult, PartitionReport, RiskMethod, SlopeSignSummary,
};

use crate::config::{MethodKind, RunConfig};
use crate::output::{csv_document, json_document, num, write_atomic, Provenance};
use crate::{CliError, CommandKind, RunArgs};

pub fn execute(kind: CommandKind, args: &RunArgs) -> Result<(), CliError> {
    let text = std::fs::read(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let text_str = std::str::from_utf8(&text).map_err(|e| CliError::Config(e.to_string()))?;
    let cfg = RunConfig::parse(text_str, args.seed)?;
    std::fs::create_dir_all(&args.out)?;
    let prov = Provenance::new(&text, cfg.seed_or_default());
    let out = args.out.as_path();
    match kind {
        CommandKind::Risk => cmd_risk(&cfg, &prov, out),
        CommandKind::Minimax => cmd_minimax(&cfg, &prov, out, args.allow_nonconverged),
        CommandKind::Exclusivity => cmd_exclusivity(&cfg, &prov, out, args.allow_nonconverged),
        CommandKind::Appendix => cmd_appendix(&cfg, &prov, out),
        CommandKind::Classify => cmd_classify(&cfg, &prov, out),
    }
}

fn cmd_risk(cfg: &RunConfig, prov: &Provenance, out: &Path) -> Result<(), CliError> {
    let plan = cfg.risk_plan()?;
    let method = match (plan.method, plan.seed) {
        (MethodKind::MonteCarlo, Some(seed)) => RiskMethod::MonteCarlo {
            samples: plan.samples,
            seed,
        },
        _ => RiskMethod::Quadrature { nodes: plan.nodes },
    };
    let mut rows = Vec::with_capacity(plan.thetas.len());
    println!("estimator {}  loss {}", plan.estimator.name(), plan.loss_name);
    println!("{:>14} {:>22} {:>14}", "theta", "risk", "std_error");
    for &theta in &plan.thetas {
        let r = risk(&cfg.model, &plan.estimator, &plan.loss, theta, method)?;
        println!("{theta:>14.6} {:>22.12} {:>14.3e}", r.value, r.std_error);
        rows.push(vec![num(theta), num(r.value), num(r.std_error)]);
    }
    let doc = csv_document(prov, &[], &["theta", "risk", "std_error"], &rows)?;
    write_atomic(out, "risk.csv", &doc)
}

#[derive(Serialize)]
struct MinimaxArtifact<'a> {
    loss_name: &'a str,
    loss: &'a LossSpec,
    family: &'a FamilySpec,
    theta_interval: &'a Interval,
    minimax: &'a MinimaxResult,
}

fn cmd_minimax(cfg: &RunConfig, prov: &Provenance, out: &Path, allow: bool) -> Result<(), CliError> {
    let plan = cfg.minimax_plan()?;
    let result = solve_minimax(&cfg.model, &plan.family, &plan.loss, &cfg.theta, &plan.options)?;
    for (name, value) in result.param_names.iter().zip(&result.best_params) {
        println!("{name:>8} = {value:.9}");
    }
    println!("minimax value = {:.12}", result.minimax_value);
    println!("converged     = {}", result.converged);
    let artifact = MinimaxArtifact {
        loss_name: &plan.loss_name,
        loss: &plan.loss,
        family: &plan.family,
        theta_interval: &cfg.theta,
        minimax: &result,
    };
    write_atomic(out, "minimax.json", &json_document("minmax-lab/minimax", prov, &artifact)?)?;
    if !allow {
        result.require_converged()?;
    }
    Ok(())
}

fn cmd_exclusivity(cfg: &RunConfig, prov: &Provenance, out: &Path, allow: bool) -> Result<(), CliError> {
    let plan = cfg.exclusivity_plan()?;
    let report: PartitionReport =
        exclusivity_partition_check(&cfg.model, &plan.family, &plan.exponents, &cfg.theta, &plan.options)?;

    // Witnesses come in the order (i, j) for i, then j != i.
    let k = plan.exponents.len();
    let pairs = (0..k).flat_map(|i| (0..k).filter(move |j| *j != i).map(move |j| (i, j)));
    let mut rows = Vec::new();
    println!("{:>6} {:>6} {:>20} {:>14} {:>14}", "p", "q", "verdict", "alpha", "delta_Rq");
    for ((i, j), w) in pairs.zip(&report.witnesses) {
        let (p, q) = (plan.exponents[i], plan.exponents[j]);
        println!(
            "{p:>6} {q:>6} {:>20} {:>14.6e} {:>14.6e}",
            format!("{:?}", w.verdict),
            w.alpha,
            w.delta_rq
        );
        for step in &w.ladder {
            rows.push(vec![num(p), num(q), num(step.alpha), num(step.delta_rp), num(step.delta_rq)]);
        }
    }
    println!("pairwise_disjoint = {}", report.pairwise_disjoint);

    write_atomic(out, "partition.json", &json_document("minmax-lab/partition", prov, &report)?)?;
    let doc = csv_document(prov, &[], &["p", "q", "alpha", "delta_rp", "delta_rq"], &rows)?;
    write_atomic(out, "alpha_ladder.csv", &doc)?;

    if !allow {
        if let Some(c) = report.classes.iter().find(|c| !c.converged) {
            return Err(CliError::NotConverged(format!(
                "minimax rule for exponent {} did not converge",
                c.exponent
            )));
        }
    }
    Ok(())
}

fn cmd_appendix(cfg: &RunConfig, prov: &Provenance, out: &Path) -> Result<(), CliError> {
    let plan = cfg.appendix_plan()?;
    let table = appendix_table(&plan.alphas, plan.n, plan.q)?;
    let summary = SlopeSignSummary::from_rows(&table);
    let note = format!(
        "sign check: f'(alpha) > 0 at {} of {} positive alphas, < 0 at {}; f'(alpha) < 0 for all alpha > 0 {}",
        summary.positive_slopes,
        summary.positive_alphas,
        summary.negative_slopes,
        if summary.decreasing_claim_holds() { "holds" } else { "does NOT hold" }
    );
    println!("n = {}, q = {}", plan.n, plan.q);
    println!("{:>10} {:>20} {:>20} {:>20}", "alpha", "f", "fprime_analytic", "fprime_fd");
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            println!("{:>10} {:>20.12} {:>20.12} {:>20.12}", r.alpha, r.f, r.fprime_analytic, r.fprime_fd);
            vec![num(r.alpha), num(r.f), num(r.fprime_analytic), num(r.fprime_fd)]
        })
        .collect();
    println!("{note}");
    let doc = csv_document(prov, &[note], &["alpha", "f", "fprime_analytic", "fprime_fd"], &rows)?;
    write_atomic(out, "appendix.csv", &doc)
}

fn cmd_classify(cfg: &RunConfig, prov: &Provenance, out: &Path) -> Result<(), CliError> {
    let plan = cfg.classify_plan()?;
    println!("{:<16} {:>14} {:>14} {:>12}", "loss", "p_hat", "c_hat", "residual");
    let mut rows = Vec::new();
    for (name, loss) in &plan.losses {
        let c = classify_exponent(loss, plan.theta0, plan.window)?;
        println!("{name:<16} {:>14.8} {:>14.8} {:>12.3e}", c.p_hat, c.c_hat, c.fit_residual);
        rows.push(vec![name.clone(), num(c.p_hat), num(c.c_hat), num(c.fit_residual)]);
    }
    let doc = csv_document(prov, &[], &["loss", "p_hat", "c_hat", "residual"], &rows)?;
    write_atomic(out, "classify.csv", &doc)
}
