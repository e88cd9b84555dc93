#pragma once

namespace strokefield {

// Subcommands: paint, reconstruct, render, grad-check, gen-bank.
// Returns 0 on success, 1 on runtime failure, 2 on bad arguments.
int cli_main(int argc, const char* const* argv);

}  // namespace strokefield
