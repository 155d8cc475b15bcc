use std::process::ExitCode;

use fervor::app::{parse_parameters, run_scenario, SCENARIOS};

fn usage() -> String {
    format!(
        "usage: fervor <scenario> [params.input] [-Group.Key value]...\nscenarios: {}",
        SCENARIOS.join(", ")
    )
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(scenario) = args.first() else {
        eprintln!("{}", usage());
        return ExitCode::from(2);
    };
    if scenario == "-h" || scenario == "--help" {
        println!("{}", usage());
        return ExitCode::SUCCESS;
    }
    let params = match parse_parameters(&args[1..], "params.input") {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = run_scenario(scenario, &params);
    for key in params.unused() {
        eprintln!("warning: parameter `{key}` was not used");
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
