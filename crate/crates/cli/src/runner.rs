//! Executes one scenario task and writes its artifact files.

use std::path::Path;

use anyhow::{anyhow, Result};
use conorbit_core::critical::{
    bracket_critical, chain_audit, BracketTarget, CriticalBracket,
};
use conorbit_core::flow::{no_connection_certificate, shoot_trajectory, ConnectionVerdict};
use conorbit_core::pathspace::path_to_csv;
use conorbit_core::solvers::{
    minimize_action_multistart, mountain_pass, random_seeds, struwe_scan, SolveReport,
    SolveVerdict,
};

use crate::output::{write_file, Status, Verdicts};
use crate::reproduce::{self, FixtureRow};
use crate::scenario::{Scenario, Task};

pub struct RunOutcome {
    pub verdicts: Verdicts,
}

impl RunOutcome {
    pub fn failures(&self) -> usize {
        self.verdicts.failures()
    }
}

pub fn run_scenario(sc: &Scenario, out_dir: &Path) -> Result<RunOutcome> {
    let mut verdicts = Verdicts::default();
    match &sc.task {
        Task::Minimize { k, windings, cfg } => {
            let mut summary = String::new();
            summary.push_str(&SolveReport::csv_header());
            summary.push('\n');
            for (wi, w) in windings.iter().enumerate() {
                let seeds = random_seeds(&sc.model, &sc.q0, &sc.q1, *w, *k, cfg);
                if seeds.is_empty() {
                    verdicts.push(
                        format!("minimize.winding_{wi}"),
                        Status::Fail,
                        "no admissible seeds",
                    );
                    continue;
                }
                let (best, _) =
                    minimize_action_multistart(&sc.model, &sc.q0, &sc.q1, *k, &seeds, cfg)?;
                summary.push_str(&best.csv_row());
                summary.push('\n');
                write_file(
                    out_dir,
                    &format!("path_w{wi}.csv"),
                    &path_to_csv(&best.path, &sc.q0, &sc.q1),
                )?;
                if best.verdict == SolveVerdict::Converged {
                    if let Ok(traj) = shoot_trajectory(&sc.model, &sc.q0, &sc.q1, &best.path) {
                        write_file(
                            out_dir,
                            &format!("trajectory_w{wi}.csv"),
                            &traj.to_csv(&sc.model),
                        )?;
                    }
                }
                let status = if best.verdict == SolveVerdict::Converged {
                    Status::Pass
                } else {
                    Status::Fail
                };
                let detail = format!(
                    "verdict {}; action {:.9}; T {:.6}; component {}",
                    best.verdict.as_str(),
                    best.action.action,
                    best.path.t_total,
                    best.component.map(|c| c.to_string()).unwrap_or_default()
                );
                verdicts.push(format!("minimize.winding_{wi}"), status, detail);
            }
            write_file(out_dir, "minimize_summary.csv", &summary)?;
        }
        Task::MountainPass { k, cfg, epsilon } => {
            let anchor = sc.anchor(*epsilon)?;
            let (rep, _) = mountain_pass(&sc.model, &sc.q0, &sc.q1, &anchor, *k, cfg, None)?;
            let mut table = String::from(
                "k,minimax,alpha,verdict,saddle_grad_norm,t0,t_star,outer_iterations\n",
            );
            table.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{},{:.6e},{:.6e},{:.6e},{}\n",
                k,
                rep.minimax_value,
                rep.alpha.best(),
                rep.verdict.as_str(),
                rep.saddle_grad_norm,
                rep.t0,
                rep.saddle.as_ref().map(|s| s.path.t_total).unwrap_or(f64::NAN),
                rep.outer_iterations
            ));
            write_file(out_dir, "mountain_pass.csv", &table)?;
            let mut beads = String::from("bead,action\n");
            for (i, a) in rep.bead_actions.iter().enumerate() {
                beads.push_str(&format!("{i},{a:.12e}\n"));
            }
            write_file(out_dir, "beads.csv", &beads)?;
            match rep.verdict {
                SolveVerdict::NotApplicable => {
                    verdicts.push(
                        "mountain_pass.head",
                        Status::Flagged,
                        "no negative-action head path exists at this energy",
                    );
                }
                v => {
                    if let Some(s) = &rep.saddle {
                        write_file(out_dir, "saddle_path.csv", &path_to_csv(&s.path, &sc.q0, &sc.q1))?;
                        let mut srow = String::new();
                        srow.push_str(&SolveReport::csv_header());
                        srow.push('\n');
                        srow.push_str(&s.csv_row());
                        srow.push('\n');
                        write_file(out_dir, "saddle_summary.csv", &srow)?;
                    }
                    verdicts.push(
                        "mountain_pass.converged",
                        if v == SolveVerdict::Converged {
                            Status::Pass
                        } else {
                            Status::Flagged
                        },
                        format!("verdict {}", v.as_str()),
                    );
                    let ok = rep.minimax_value >= rep.alpha.best() - 1e-9;
                    verdicts.push(
                        "mountain_pass.barrier",
                        if ok { Status::Pass } else { Status::Fail },
                        format!(
                            "minimax {:.6} vs barrier {:.6}",
                            rep.minimax_value,
                            rep.alpha.best()
                        ),
                    );
                }
            }
        }
        Task::StruweScan { grid, cfg, epsilon } => {
            let anchor = sc.anchor(*epsilon)?;
            let curve = struwe_scan(&sc.model, &sc.q0, &sc.q1, &anchor, grid, cfg)?;
            write_file(out_dir, "minimax_curve.csv", &curve.to_csv())?;
            let defect = curve.monotonicity_defect();
            verdicts.push(
                "struwe_scan.monotone",
                if defect <= 1e-6 { Status::Pass } else { Status::Fail },
                format!("worst decrease {defect:.3e}"),
            );
            for r in &curve.rows {
                verdicts.push(
                    format!("struwe_scan.k_{:.3}", r.k),
                    if r.converged { Status::Pass } else { Status::Flagged },
                    format!(
                        "c_omega {:.6}; T* {:.4}; residual {:.3e}; t_bounded {}",
                        r.c_omega, r.t_star, r.residual, r.t_bounded
                    ),
                );
            }
        }
        Task::Brackets {
            interval,
            cfg,
            include_pair,
        } => {
            let mut table = String::from(
                "name,lower,upper,lower_witness_file,upper_witness_file,method\n",
            );
            let mut targets = vec![BracketTarget::ManeCuC0, BracketTarget::ManeC];
            if *include_pair {
                targets.push(BracketTarget::PairValue(sc.q0, sc.q1));
            }
            for target in targets {
                let b = bracket_critical(&sc.model, &target, *interval, cfg)?;
                let (lower_file, upper_file) = write_bracket_witnesses(out_dir, &b)?;
                table.push_str(&b.csv_row(&lower_file, &upper_file));
                table.push('\n');
                verdicts.push(
                    format!("bracket.{}", b.name),
                    if b.lower <= b.upper && b.width() <= cfg.tol.max(0.05) {
                        Status::Pass
                    } else {
                        Status::Flagged
                    },
                    format!("[{:.5}, {:.5}]", b.lower, b.upper),
                );
            }
            write_file(out_dir, "brackets.csv", &table)?;
        }
        Task::ChainAudit { cfg } => {
            let pair = Some((&sc.q0, &sc.q1));
            let report = chain_audit(&sc.model, pair, cfg)?;
            let mut table = String::from("link,lhs,rhs,ok\n");
            for l in &report.links {
                table.push_str(&format!("{},{:.9},{:.9},{}\n", l.name, l.lhs, l.rhs, l.ok));
                verdicts.push(
                    format!("chain.{}", l.name.replace(' ', "_")),
                    if l.ok { Status::Pass } else { Status::Fail },
                    format!("{:.6} <= {:.6}", l.lhs, l.rhs),
                );
            }
            write_file(out_dir, "chain_audit.csv", &table)?;
        }
        Task::NoConnection { k, p0, p1 } => {
            let c = no_connection_certificate(&sc.model, *p0, *p1, *k)
                .map_err(anyhow::Error::from)?;
            let verdict = match c.verdict {
                ConnectionVerdict::Disjoint => "DISJOINT".to_string(),
                ConnectionVerdict::Overlap { contact: true } => "OVERLAP_CONTACT".to_string(),
                ConnectionVerdict::Overlap { contact: false } => "OVERLAP".to_string(),
            };
            let mut table =
                String::from("k,verdict,range0_lo,range0_hi,range1_lo,range1_hi,gap\n");
            table.push_str(&format!(
                "{:.12e},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                k, verdict, c.range_0.0, c.range_0.1, c.range_1.0, c.range_1.1, c.gap
            ));
            write_file(out_dir, "no_connection.csv", &table)?;
            verdicts.push("no_connection.certificate", Status::Pass, verdict);
        }
        Task::Reproduce { name } => {
            let rows = reproduce::run(name.as_deref(), sc.seed)?;
            write_reproduce(out_dir, &rows, &mut verdicts)?;
        }
    }
    write_file(out_dir, "verdict.csv", &verdicts.to_csv())?;
    Ok(RunOutcome { verdicts })
}

fn write_bracket_witnesses(out_dir: &Path, b: &CriticalBracket) -> Result<(String, String)> {
    let lower_file = match &b.lower_witness {
        Some(w) => {
            let name = format!("witness_{}_lower.csv", b.name);
            let mut csv = format!("# negative loop witness at k = {:.12e}, action = {:.12e}\n", w.k, w.action);
            csv.push_str("i,x,y\n");
            for (i, p) in w.loop_path.nodes.iter().enumerate() {
                csv.push_str(&format!("{i},{:.17e},{:.17e}\n", p.x, p.y));
            }
            csv.push_str(&format!("T,{:.17e}\n", w.loop_path.t_total));
            write_file(out_dir, &name, &csv)?;
            name
        }
        None => String::new(),
    };
    let upper_file = match &b.upper_witness {
        Some(g) => {
            let name = format!("witness_{}_upper.csv", b.name);
            let n = g.resolution;
            let mut csv = format!(
                "# grid test function, resolution {n}, linear part ({:.12e}, {:.12e}), sup H = {:.12e}, refined {:.12e}\n",
                g.linear.x, g.linear.y, g.value, g.refined_value
            );
            csv.push_str("i,j,u\n");
            for i in 0..n {
                for j in 0..n {
                    csv.push_str(&format!("{i},{j},{:.17e}\n", g.u[i * n + j]));
                }
            }
            write_file(out_dir, &name, &csv)?;
            name
        }
        None => String::new(),
    };
    Ok((lower_file, upper_file))
}

pub fn write_reproduce(
    out_dir: &Path,
    rows: &[FixtureRow],
    verdicts: &mut Verdicts,
) -> Result<()> {
    let mut csv = String::from(FixtureRow::csv_header());
    csv.push('\n');
    for r in rows {
        csv.push_str(&r.csv_row());
        csv.push('\n');
        verdicts.push(
            format!("{}.{}", r.target, r.check.replace([' ', ','], "_")),
            if r.pass { Status::Pass } else { Status::Fail },
            format!("value {:.9e}; expected {}", r.value, r.expected),
        );
    }
    write_file(out_dir, "reproduce.csv", &csv)?;
    Ok(())
}

pub fn ensure_nonempty_outdir(path: &Path) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(anyhow!("output directory must not be empty"));
    }
    Ok(())
}
