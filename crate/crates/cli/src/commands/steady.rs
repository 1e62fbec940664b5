use dqrm::analytics::{sigma_z_infinity, v2_steady};
use dqrm::liouvillian::{rabi_liouvillian, reduced_liouvillian, steady_state, Drift, SteadyState, SteadyStateOptions};
use dqrm::operators::FockTruncation;
use dqrm::{Eta, C64};
use serde_json::{json, Map, Value};

use super::observe::Operators;
use super::{CliError, Ctx};
use crate::args::{Observable, SteadyArgs};
use crate::output::{emit, round9, VERSION};

const FULL_OBS: [Observable; 6] =
    [Observable::N, Observable::N2, Observable::N3, Observable::Sz, Observable::Sx, Observable::A];
const REDUCED_OBS: [Observable; 4] = [Observable::N, Observable::N2, Observable::N3, Observable::A];

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round9(x))
    } else {
        Value::Null
    }
}

fn complex(z: C64) -> Value {
    json!([num(z.re), num(z.im)])
}

fn triple(t: (C64, C64, C64)) -> Value {
    json!({ "aa": complex(t.0), "ada": complex(t.1), "adad": complex(t.2) })
}

struct Solved {
    state: SteadyState,
    ops: Operators,
}

pub fn run(args: &SteadyArgs, ctx: &Ctx) -> Result<(), CliError> {
    let trunc = FockTruncation::new(args.nmax).map_err(|e| CliError::Usage(e.to_string()))?;
    let params = ctx.params(args.kappa, args.gamma, args.g, args.eta)?;
    let opts = SteadyStateOptions { tol: args.tol, ..SteadyStateOptions::default() };
    let reduced = args.eta.is_infinite();
    let observables: &[Observable] = if reduced { &REDUCED_OBS } else { &FULL_OBS };

    let solve = |t: FockTruncation| -> dqrm::Result<Solved> {
        let (sup, ops) = if reduced {
            (reduced_liouvillian(args.branch, &params, t)?, Operators::reduced(t)?)
        } else {
            (rabi_liouvillian(&params, t)?, Operators::full(t)?)
        };
        Ok(Solved { state: steady_state(&sup, &opts)?, ops })
    };
    let big = trunc.enlarged();
    let main = solve(trunc)?;
    let enlarged = solve(big)?;

    let mut obs = Map::new();
    let mut drifts = Map::new();
    let mut all_converged = true;
    for &o in observables {
        let v = main.ops.value(o, &main.state.rho)?.expect("observable exists");
        let w = enlarged.ops.value(o, &enlarged.state.rho)?.expect("observable exists");
        let d = Drift::between(v, w, big.nmax());
        all_converged &= d.converged();
        obs.insert(o.label().into(), num(v));
        drifts.insert(o.label().into(), num(d.relative));
    }

    let mut doc = Map::new();
    doc.insert("dqrm_version".into(), json!(VERSION));
    doc.insert("params_hash".into(), json!(ctx.hash));
    doc.insert(
        "params".into(),
        json!({
            "omega0": num(params.omega0),
            "kappa": num(params.kappa),
            "gamma": num(params.gamma),
            "g": num(params.g),
            "eta": match params.eta { Eta::Finite(x) => num(x), Eta::Infinite => json!("inf") },
            "nmax": args.nmax,
            "branch": if reduced { json!(args.branch.to_string()) } else { Value::Null },
        }),
    );
    doc.insert("model".into(), json!(if reduced { "reduced" } else { "rabi" }));
    doc.insert("observables".into(), Value::Object(obs));
    doc.insert("residual".into(), num(main.state.residual));
    doc.insert("second_eigenvalue".into(), complex(main.state.second_eigenvalue));
    doc.insert("gap".into(), num(main.state.gap()));
    doc.insert(
        "truncation".into(),
        json!({
            "nmax": args.nmax,
            "nmax_enlarged": big.nmax(),
            "relative_drift": Value::Object(drifts),
            "converged": all_converged,
        }),
    );

    match sigma_z_infinity(&params) {
        Ok(s) => {
            doc.insert("sigma_z_analytic".into(), num(s.value));
            doc.insert("sigma_z_saturated".into(), json!(s.saturated));
            doc.insert("y_down".into(), s.y_down.map_or(Value::Null, num));
            doc.insert("y_up".into(), s.y_up.map_or(Value::Null, num));
            doc.insert("n_down".into(), num(s.n_down));
            doc.insert("n_up".into(), num(s.n_up));
        }
        Err(e) => {
            doc.insert("sigma_z_analytic".into(), Value::Null);
            doc.insert("sigma_z_error".into(), json!(e.to_string()));
        }
    }

    if reduced {
        let solver = main.ops.second_moments(&main.state.rho)?;
        doc.insert("v2_solver".into(), triple(solver));
        match v2_steady(args.branch, &params) {
            Ok(closed) => {
                let dev = [(closed.0 - solver.0).norm(), (closed.1 - solver.1).norm(), (closed.2 - solver.2).norm()]
                    .into_iter()
                    .fold(0.0, f64::max);
                doc.insert("v2_closed_form".into(), triple(closed));
                doc.insert("v2_max_deviation".into(), num(dev));
            }
            Err(e) => {
                doc.insert("v2_closed_form".into(), Value::Null);
                doc.insert("v2_error".into(), json!(e.to_string()));
            }
        }
    }

    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values serialize");
    text.push('\n');
    emit(args.out.as_deref(), &text)?;
    Ok(())
}
