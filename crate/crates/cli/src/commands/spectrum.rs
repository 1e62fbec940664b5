use dqrm::hierarchy::{effective_hamiltonian, BlockBranch};
use dqrm::liouvillian::{reduced_liouvillian, spectrum_edge, EdgeOptions};
use dqrm::operators::FockTruncation;
use dqrm::{Eta, QubitBranch};

use super::{CliError, Ctx};
use crate::args::SpectrumArgs;
use crate::output::{emit, g9, Csv};

pub fn run(args: &SpectrumArgs, ctx: &Ctx) -> Result<(), CliError> {
    if args.k.is_empty() && !args.liouvillian {
        return Err(CliError::Usage("give --k orders, --liouvillian, or both".into()));
    }
    if args.k.contains(&0) {
        return Err(CliError::Usage("--k entries must be >= 1".into()));
    }
    let params = ctx.params(args.kappa, args.gamma, args.g, Eta::Infinite)?;
    let mut csv = Csv::new(&ctx.hash, "source,k,re,im");

    for &k in &args.k {
        let mut ev = effective_hamiltonian(k, args.branch, &params)?.refined_eigenvalues()?;
        ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
        for z in ev {
            csv.row(&["hk".into(), k.to_string(), g9(z.re), g9(z.im)]);
        }
    }

    if args.liouvillian {
        let branch = match args.branch {
            BlockBranch::Down => QubitBranch::Down,
            BlockBranch::Up => QubitBranch::Up,
            BlockBranch::Coherent => {
                return Err(CliError::Usage("--liouvillian needs --branch down or up".into()));
            }
        };
        let trunc = FockTruncation::new(args.nmax).map_err(|e| CliError::Usage(e.to_string()))?;
        let sup = reduced_liouvillian(branch, &params, trunc)?;
        let edge = spectrum_edge(&sup, args.count, &EdgeOptions::default())?;
        for z in edge.values() {
            csv.row(&["liouvillian".into(), "none".into(), g9(z.re), g9(z.im)]);
        }
    }

    emit(args.out.as_deref(), &csv.into_string())?;
    Ok(())
}
