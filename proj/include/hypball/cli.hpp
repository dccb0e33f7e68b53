#pragma once

#include <string>
#include <vector>

namespace hypball::cli {

// Subcommands: gen-data, train, train-mm, eval, gradcheck, export-embeddings.
// Every option can also come from a key=value config file (--config); the
// precedence is command-line flag > HYPBALL_SEED env var (seed only) > config
// file > built-in default. Writing subcommands echo the resolved config into
// the output directory as effective-config.txt, which is itself a valid
// --config file.
//
// Exit codes: 0 success, 1 usage error (bad flags, unknown config keys,
// invalid argument combinations), 2 runtime failure (unreadable inputs,
// training aborts, failed gradient verification).
int run(int argc, const char* const* argv);

// Same, without the program name in args.
int run(const std::vector<std::string>& args);

}  // namespace hypball::cli
