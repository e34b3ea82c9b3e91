mod limit_cycle;
mod list;
mod run;
mod schedule;
mod validate;
mod witness;

use std::io::Write;

use crate::{CliError, Command};

pub use limit_cycle::{cmd_limit_cycle, LimitCycleReport};
pub use list::cmd_list;
pub use run::{cmd_run, RunSummary, SeedSummary};
pub use schedule::cmd_check_schedule;
pub use validate::{cmd_validate, ProblemValidation};
pub use witness::cmd_witness;

pub fn dispatch(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::List => cmd_list(out),
        Command::Run(args) => cmd_run(args, out),
        Command::CheckSchedule(args) => cmd_check_schedule(args, out),
        Command::Witness(args) => cmd_witness(args, out),
        Command::LimitCycle(args) => cmd_limit_cycle(args, out, err),
        Command::Validate(args) => cmd_validate(args, out),
    }
}

pub(crate) fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(CliError::io("writing to stdout"))
}
