#pragma once

namespace fluxforms {

// Entry point for the fluxforms tool.  Subcommands: check, conformal, solve,
// trace, catalog.  Every invocation that produces files also writes a
// manifest.json embedding the fully resolved configuration and the tool
// version, so runs are reproducible from their outputs alone.
//
// Exit codes: 0 success, 1 assertion or convergence failure, 2 usage or
// configuration error.  --expect-fail swaps 0 and 1 (2 stays 2).
int run_cli(int argc, char** argv);

}  // namespace fluxforms
