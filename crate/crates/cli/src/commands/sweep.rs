use dqrm::liouvillian::{rabi_liouvillian, steady_state, Drift, SteadyStateOptions};
use dqrm::operators::FockTruncation;
use dqrm::{Eta, ModelParams};
use rayon::prelude::*;

use super::observe::Operators;
use super::{status_of, CliError, Ctx};
use crate::args::{Observable, SweepArgs};
use crate::output::{emit, g9, Csv};

/// Observable values of the full-model steady state at one truncation.
pub fn full_observables(
    params: &ModelParams,
    trunc: FockTruncation,
    obs: &[Observable],
    opts: &SteadyStateOptions,
) -> dqrm::Result<Vec<f64>> {
    let sup = rabi_liouvillian(params, trunc)?;
    let ss = steady_state(&sup, opts)?;
    let ops = Operators::full(trunc)?;
    obs.iter()
        .map(|&o| Ok(ops.value(o, &ss.rho)?.expect("qubit observables exist on the full model")))
        .collect()
}

pub fn run(args: &SweepArgs, ctx: &Ctx) -> Result<(), CliError> {
    let trunc = FockTruncation::new(args.nmax).map_err(|e| CliError::Usage(e.to_string()))?;
    let points = args
        .eta
        .0
        .iter()
        .map(|&eta| ctx.params(args.kappa, args.gamma, args.g, Eta::Finite(eta)))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = SteadyStateOptions { tol: args.tol, ..SteadyStateOptions::default() };
    let big = trunc.enlarged();

    let blocks: Vec<Vec<Vec<String>>> = points
        .par_iter()
        .map(|p| {
            let eta = g9(p.eta.finite().expect("finite eta"));
            let both = full_observables(p, trunc, &args.obs, &opts)
                .and_then(|v| Ok((v, full_observables(p, big, &args.obs, &opts)?)));
            match both {
                Ok((v, w)) => args
                    .obs
                    .iter()
                    .enumerate()
                    .map(|(i, o)| {
                        let d = Drift::between(v[i], w[i], big.nmax());
                        vec![eta.clone(), args.nmax.to_string(), o.label().into(), g9(v[i]), d.converged().to_string(), "ok".into()]
                    })
                    .collect(),
                Err(e) => {
                    log::warn!("eta={eta}: {e}");
                    let status = status_of(&e);
                    args.obs
                        .iter()
                        .map(|o| vec![eta.clone(), args.nmax.to_string(), o.label().into(), "nan".into(), "false".into(), status.clone()])
                        .collect()
                }
            }
        })
        .collect();

    let mut csv = Csv::new(&ctx.hash, "eta,nmax,observable,value,converged,status");
    for row in blocks.iter().flatten() {
        csv.row(row);
    }
    emit(args.out.as_deref(), &csv.into_string())?;
    Ok(())
}
