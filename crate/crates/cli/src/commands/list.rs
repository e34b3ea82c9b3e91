use std::io::Write;

use sgdlab::{make_problem, PROBLEM_IDS};

use super::emit;
use crate::CliError;

/// One line per problem: `id dim=p optimum=… alpha=… f_lb=…`.
pub fn cmd_list(out: &mut dyn Write) -> Result<(), CliError> {
    let mut text = String::new();
    for id in PROBLEM_IDS {
        let p = make_problem(id).expect("catalog ids are valid");
        let optimum = p.optimum().map_or("none".to_string(), |o| {
            o.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        });
        text.push_str(&format!(
            "{id} dim={} optimum={optimum} alpha={} f_lb={}\n",
            p.dim(),
            p.alpha(),
            p.f_lb()
        ));
    }
    emit(out, &text)
}
