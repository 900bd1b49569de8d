#ifndef STOCHBOND_CLI_HPP
#define STOCHBOND_CLI_HPP

#include <string>
#include <vector>

namespace stochbond {

// Batch front door. Exit codes: 0 success, 1 config error, 2 numerical failure.
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace stochbond

#endif
