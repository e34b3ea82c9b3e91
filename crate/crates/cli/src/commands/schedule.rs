use std::io::Write;

use sgdlab::schedules::classify_schedule_with_horizon;
use sgdlab::{power_schedule, StepSchedule};

use super::emit;
use crate::output::report_json;
use crate::{CliError, ScheduleArgs};

pub fn cmd_check_schedule(args: &ScheduleArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !(args.alpha > 0.0 && args.alpha <= 1.0) {
        return Err(CliError::Usage(format!(
            "--alpha must lie in (0, 1], got {}",
            args.alpha
        )));
    }
    if args.horizon == 0 {
        return Err(CliError::Usage("--horizon must be at least 1".into()));
    }
    let schedule = match &args.file {
        Some(path) => {
            let dim = args
                .dim
                .ok_or_else(|| CliError::Usage("--dim is required with --file".into()))?;
            let text = std::fs::read_to_string(path).map_err(CliError::io(format!("reading {}", path.display())))?;
            StepSchedule::parse_custom(dim, &text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => {
            let dim = args.dim.unwrap_or(args.beta.0.len());
            power_schedule(args.c, &args.beta.0, dim).map_err(|e| CliError::Usage(e.to_string()))?
        }
    };
    let report = classify_schedule_with_horizon(&schedule, args.alpha, args.horizon);
    emit(out, &report_json("schedule", &report))
}
