use dqrm::meanfield::{mf_evolve, mf_steady_branches, MeanFieldState};
use dqrm::{Eta, C64};
use rayon::prelude::*;

use super::{CliError, Ctx};
use crate::args::MeanfieldArgs;
use crate::output::{emit, g9, Csv};

fn state_fields(s: &MeanFieldState) -> [String; 5] {
    [g9(s.a.re), g9(s.a.im), g9(s.sx), g9(s.sy), g9(s.sz)]
}

pub fn run(args: &MeanfieldArgs, ctx: &Ctx) -> Result<(), CliError> {
    let mut gs = args.g.0.clone();
    gs.sort_by(f64::total_cmp);
    let eta = if args.trajectory { Eta::Finite(args.eta) } else { Eta::Infinite };
    let points = gs
        .iter()
        .map(|&g| ctx.params(args.kappa, args.gamma, g, eta))
        .collect::<Result<Vec<_>, _>>()?;

    let csv = if args.trajectory {
        if !(args.dt > 0.0) || !(args.t_final >= 0.0) {
            return Err(CliError::Usage("need --dt > 0 and --t-final >= 0".into()));
        }
        let start = MeanFieldState::new(C64::new(args.kick, 0.0), 0.0, 0.0, -1.0);
        let trajectories = points
            .par_iter()
            .map(|p| mf_evolve(&start, args.t_final, args.dt, p))
            .collect::<Result<Vec<_>, _>>()?;
        let mut csv = Csv::new(&ctx.hash, "g,t,re_a,im_a,sx,sy,sz,bloch_norm");
        for (g, traj) in gs.iter().zip(&trajectories) {
            for (t, s) in traj.times.iter().zip(&traj.states) {
                let mut row = vec![g9(*g), g9(*t)];
                row.extend(state_fields(s));
                row.push(g9(s.bloch_norm()));
                csv.row(&row);
            }
        }
        csv
    } else {
        let mut csv = Csv::new(&ctx.hash, "g,branch_id,re_a,im_a,sx,sy,sz");
        for (g, p) in gs.iter().zip(&points) {
            for (id, s) in mf_steady_branches(p).iter().enumerate() {
                let mut row = vec![g9(*g), id.to_string()];
                row.extend(state_fields(s));
                csv.row(&row);
            }
        }
        csv
    };
    emit(args.out.as_deref(), &csv.into_string())?;
    Ok(())
}
