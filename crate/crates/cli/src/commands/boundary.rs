use dqrm::hierarchy::{analytic_boundary, critical_coupling, min_unstable_k, BisectOptions, BoundaryKind, Coupling};
use dqrm::Eta;
use rayon::prelude::*;

use super::{CliError, Ctx};
use crate::args::BoundaryArgs;
use crate::output::{emit, g9, sibling, Csv};

fn coupling_field(c: Coupling) -> String {
    match c {
        Coupling::Finite(g) => g9(g),
        Coupling::Infinite => "inf".into(),
    }
}

pub fn run(args: &BoundaryArgs, ctx: &Ctx) -> Result<(), CliError> {
    if args.k_max == 0 {
        return Err(CliError::Usage("--k-max must be >= 1".into()));
    }
    if args.k_list.contains(&0) {
        return Err(CliError::Usage("--k-list entries must be >= 1".into()));
    }
    // validate every grid point up front so bad input is a usage error
    for &gamma in &args.gamma.0 {
        for &g in &args.g.0 {
            ctx.params(args.kappa, gamma, g, Eta::Infinite)?;
        }
    }
    let r = args.kappa / ctx.omega0;

    let rows: Vec<Vec<Vec<String>>> = args
        .gamma
        .0
        .par_iter()
        .map(|&gamma| {
            args.g
                .0
                .iter()
                .map(|&g| {
                    let p = ctx.params(args.kappa, gamma, g, Eta::Infinite)?;
                    let k = min_unstable_k(&p, args.k_max, args.parity, args.branch)?;
                    let k = k.map_or_else(|| "none".to_string(), |k| k.to_string());
                    Ok(vec![g9(gamma), g9(g), k])
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut csv = Csv::new(&ctx.hash, "gamma,g,min_unstable_k");
    for row in rows.iter().flatten() {
        csv.row(row);
    }

    let opts = BisectOptions { tol_g: args.tol_g, ..BisectOptions::default() };
    let curves: Vec<Vec<Vec<String>>> = args
        .gamma
        .0
        .par_iter()
        .map(|&gamma| {
            let mut out = Vec::with_capacity(args.k_list.len() + 1);
            for &k in &args.k_list {
                let gc = critical_coupling(k, args.branch, gamma, r, &opts)?;
                out.push(vec![g9(gamma), k.to_string(), coupling_field(gc)]);
            }
            let inf = analytic_boundary(BoundaryKind::GcInfinity, gamma, r)?;
            out.push(vec![g9(gamma), "infinity".into(), coupling_field(inf)]);
            Ok(out)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut curves_csv = Csv::new(&ctx.hash, "gamma,k,g_c");
    for row in curves.iter().flatten() {
        curves_csv.row(row);
    }

    emit(Some(&args.out), &csv.into_string())?;
    emit(Some(&sibling(&args.out, "curves")), &curves_csv.into_string())?;
    Ok(())
}
