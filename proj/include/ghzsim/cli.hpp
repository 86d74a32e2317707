#pragma once

// Batch command-line front end: simulate | synthesize | analyze | rates |
// report. Exit codes: 0 success, 2 configuration error, 3 data error.

namespace ghzsim {

int run_cli(int argc, char** argv);

} // namespace ghzsim
