use std::io::Write;

use sgdlab::diagnostics::{
    witness_l0l1, witness_lipschitz, witness_noise, Assumption, DiagnosticsError, NoiseChallenge,
};
use sgdlab::make_problem;
use sgdlab::problems::make_linreg;

use super::emit;
use crate::output::report_json;
use crate::{CliError, WitnessArgs};

pub fn cmd_witness(args: &WitnessArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let problem = if args.problem == "linreg" {
        make_linreg(args.theta_star)
    } else {
        make_problem(&args.problem).map_err(|e| CliError::Usage(e.to_string()))?
    };
    let outcome = match args.assumption {
        Assumption::GlobalLipschitz => witness_lipschitz(&problem, args.l),
        Assumption::L0L1Smooth => witness_l0l1(&problem, args.l0, args.l1),
        Assumption::BoundedVariance => witness_noise(&problem, NoiseChallenge::Variance(args.b)),
        Assumption::ExpectedSmoothness => witness_noise(
            &problem,
            NoiseChallenge::ExpectedSmoothness {
                c0: args.c0,
                c1: args.c1,
                c2: args.c2,
            },
        ),
    };
    let outcome = outcome.map_err(|e| match e {
        DiagnosticsError::SearchExhausted { .. } | DiagnosticsError::Problem(_) => CliError::Numerical(e.to_string()),
        other => CliError::Usage(other.to_string()),
    })?;
    emit(out, &report_json("witness", &outcome))
}
