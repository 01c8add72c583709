// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

use clap::Parser;

fn main() {
    std::process::exit(qoc_cli::execute(qoc_cli::Cli::parse()));
}
